//! Undirected coupling structures with pairwise edges and triangles.
//!
//! The first-order adjacency `A` is stored as a list of unordered pairs and the
//! second-order adjacency `B` as a list of unordered triples. Both lists are kept
//! in canonical (ascending) form and sorted, so membership queries in any index
//! order reduce to a binary search. Per-node incidence lists are built once at
//! construction for the dynamics kernels.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Immutable pairwise + triadic coupling structure on `n` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    n: usize,
    edges: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
    neighbors: Vec<Vec<usize>>,
    node_triangles: Vec<Vec<usize>>,
    complete: bool,
}

fn canonical_edge(i: usize, j: usize) -> [usize; 2] {
    if i < j {
        [i, j]
    } else {
        [j, i]
    }
}

fn canonical_triangle(i: usize, j: usize, k: usize) -> [usize; 3] {
    let mut t = [i, j, k];
    t.sort_unstable();
    t
}

fn binom2(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn binom3(n: usize) -> usize {
    n * n.saturating_sub(1) * n.saturating_sub(2) / 6
}

impl Hypergraph {
    /// Builds a structure from explicit simplices. Index order inside a simplex
    /// is irrelevant; duplicates (after canonicalisation) and degenerate
    /// simplices are rejected.
    pub fn new(n: usize, edges: &[[usize; 2]], triangles: &[[usize; 3]]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("hypergraph needs at least one node".into()));
        }
        let mut e: Vec<[usize; 2]> = Vec::with_capacity(edges.len());
        for &[i, j] in edges {
            for idx in [i, j] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, n });
                }
            }
            if i == j {
                return Err(Error::Parameter(format!("degenerate edge ({i}, {j})")));
            }
            e.push(canonical_edge(i, j));
        }
        let mut t: Vec<[usize; 3]> = Vec::with_capacity(triangles.len());
        for &[i, j, k] in triangles {
            for idx in [i, j, k] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, n });
                }
            }
            if i == j || j == k || i == k {
                return Err(Error::Parameter(format!("degenerate triangle ({i}, {j}, {k})")));
            }
            t.push(canonical_triangle(i, j, k));
        }
        e.sort_unstable();
        t.sort_unstable();
        if let Some(w) = e.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Parameter(format!("duplicate edge {:?}", w[0])));
        }
        if let Some(w) = t.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Parameter(format!("duplicate triangle {:?}", w[0])));
        }
        Ok(Self::from_sorted(n, e, t))
    }

    fn from_sorted(n: usize, edges: Vec<[usize; 2]>, triangles: Vec<[usize; 3]>) -> Self {
        let mut neighbors = vec![Vec::new(); n];
        for &[a, b] in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        let mut node_triangles = vec![Vec::new(); n];
        for (idx, tri) in triangles.iter().enumerate() {
            for &v in tri {
                node_triangles[v].push(idx);
            }
        }
        let complete = n >= 2 && edges.len() == binom2(n) && triangles.len() == binom3(n);
        Self {
            n,
            edges,
            triangles,
            neighbors,
            node_triangles,
            complete,
        }
    }

    /// The same simplices with the complete-structure fast path disabled, so
    /// every evaluation walks the simplex lists.
    pub fn sparse_copy(&self) -> Self {
        Self {
            complete: false,
            ..self.clone()
        }
    }

    /// Complete pairwise graph together with every triple of distinct nodes.
    pub fn all_to_all(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!(
                "all-to-all structure needs n >= 2, got {n}"
            )));
        }
        let mut edges = Vec::with_capacity(binom2(n));
        let mut triangles = Vec::with_capacity(binom3(n));
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push([i, j]);
                for k in (j + 1)..n {
                    triangles.push([i, j, k]);
                }
            }
        }
        Ok(Self::from_sorted(n, edges, triangles))
    }

    /// Random 2-simplicial complex with target mean degree `k1` and mean
    /// hyperdegree `k2`.
    ///
    /// Triangles are drawn independently with probability
    /// `p2 = 2 k2 / ((n-1)(n-2))`, their edges are added to the edge set, and
    /// every remaining pair is then connected with probability `p1`, chosen so
    /// that the expected degree is exactly `k1` once the overlap between
    /// triangle-induced edges is accounted for.
    pub fn random_simplicial_complex(n: usize, k1: f64, k2: f64, seed: u64) -> Result<Self> {
        let (p1, p2) = simplicial_probabilities(n, k1, k2)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut triangles = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    if rng.random::<f64>() < p2 {
                        triangles.push([i, j, k]);
                    }
                }
            }
        }
        let mut present = vec![false; n * n];
        for &[a, b, c] in &triangles {
            for (x, y) in [(a, b), (a, c), (b, c)] {
                present[x * n + y] = true;
            }
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                // One draw per pair keeps the stream layout independent of closure.
                let extra = rng.random::<f64>() < p1;
                if present[i * n + j] || extra {
                    edges.push([i, j]);
                }
            }
        }
        Ok(Self::from_sorted(n, edges, triangles))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// True when every pair and every triple of distinct nodes is present.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Indices (into [`Hypergraph::triangles`]) of the triangles containing `i`.
    pub fn triangles_of(&self, i: usize) -> &[usize] {
        &self.node_triangles[i]
    }

    pub fn degree(&self, i: usize) -> Result<usize> {
        self.check_index(i)?;
        Ok(self.neighbors[i].len())
    }

    pub fn hyperdegree(&self, i: usize) -> Result<usize> {
        self.check_index(i)?;
        Ok(self.node_triangles[i].len())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.edges.binary_search(&canonical_edge(i, j)).is_ok()
    }

    pub fn has_triangle(&self, i: usize, j: usize, k: usize) -> bool {
        i != j && j != k && i != k && self.triangles.binary_search(&canonical_triangle(i, j, k)).is_ok()
    }

    /// Number of nodes with neither edges nor triangles.
    pub fn isolated_nodes(&self) -> usize {
        (0..self.n)
            .filter(|&i| self.neighbors[i].is_empty() && self.node_triangles[i].is_empty())
            .count()
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.n as f64
    }

    pub fn mean_hyperdegree(&self) -> f64 {
        3.0 * self.triangles.len() as f64 / self.n as f64
    }

    /// Same node set, keeping only simplices whose nodes all lie in `nodes`.
    pub fn induced(&self, nodes: &[usize]) -> Result<Self> {
        let mut keep = vec![false; self.n];
        for &v in nodes {
            self.check_index(v)?;
            keep[v] = true;
        }
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|e| e.iter().all(|&v| keep[v]))
            .collect();
        let triangles = self
            .triangles
            .iter()
            .copied()
            .filter(|t| t.iter().all(|&v| keep[v]))
            .collect();
        Ok(Self::from_sorted(self.n, edges, triangles))
    }

    /// Adds every edge of every triangle to the edge set.
    pub fn closed(&self) -> Self {
        let mut edges = self.edges.clone();
        for &[a, b, c] in &self.triangles {
            edges.extend([[a, b], [a, c], [b, c]]);
        }
        edges.sort_unstable();
        edges.dedup();
        Self::from_sorted(self.n, edges, self.triangles.clone())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n {
            Err(Error::IndexOutOfRange { index: i, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Plain-text form: `n <count>`, then `e i j` and `t i j k` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 * (self.edges.len() + self.triangles.len()) + 16);
        let _ = writeln!(out, "n {}", self.n);
        for [i, j] in &self.edges {
            let _ = writeln!(out, "e {i} {j}");
        }
        for [i, j, k] in &self.triangles {
            let _ = writeln!(out, "t {i} {j} {k}");
        }
        out
    }

    /// Parses the plain-text form. Blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let line_no = lineno + 1;
            let err = |message: String| Error::Parse { line: line_no, message };
            let mut fields = line.split_whitespace();
            let tag = fields.next().unwrap_or_default();
            let values: Vec<usize> = fields
                .map(|f| f.parse::<usize>().map_err(|_| err(format!("bad index {f:?}"))))
                .collect::<Result<_>>()?;
            match (tag, n) {
                ("n", None) if values.len() == 1 => n = Some(values[0]),
                ("n", Some(_)) => return Err(err("repeated header".into())),
                (_, None) => return Err(err("missing `n <count>` header".into())),
                ("e", Some(_)) if values.len() == 2 => edges.push([values[0], values[1]]),
                ("t", Some(_)) if values.len() == 3 => triangles.push([values[0], values[1], values[2]]),
                _ => return Err(err(format!("malformed line {line:?}"))),
            }
        }
        let n = n.ok_or(Error::Parse {
            line: 0,
            message: "empty hypergraph file".into(),
        })?;
        Self::new(n, &edges, &triangles)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Edge and triangle probabilities `(p1, p2)` for the random simplicial
/// complex generator.
pub fn simplicial_probabilities(n: usize, k1: f64, k2: f64) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::InvalidSize(format!(
            "random simplicial complex needs n >= 3, got {n}"
        )));
    }
    if !(k1.is_finite() && k2.is_finite()) || k1 < 0.0 || k2 < 0.0 {
        return Err(Error::Parameter(format!(
            "mean degrees must be finite and >= 0, got k1={k1}, k2={k2}"
        )));
    }
    let pairs = (n - 1) as f64;
    let p2 = 2.0 * k2 / (pairs * (n - 2) as f64);
    if p2 > 1.0 {
        return Err(Error::Parameter(format!(
            "k2={k2} infeasible for n={n} (triangle probability {p2})"
        )));
    }
    // Probability that a given pair is covered by at least one triangle.
    let covered = 1.0 - (1.0 - p2).powi(n as i32 - 2);
    let target = k1 / pairs;
    let p1 = if covered >= 1.0 {
        0.0
    } else {
        (target - covered) / (1.0 - covered)
    };
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=1.0 + SLACK).contains(&p1) || (covered >= 1.0 && (target - 1.0).abs() > SLACK) {
        return Err(Error::Parameter(format!(
            "(k1={k1}, k2={k2}) infeasible for n={n}: edge probability {p1} outside [0, 1]"
        )));
    }
    Ok((p1.clamp(0.0, 1.0), p2))
}
