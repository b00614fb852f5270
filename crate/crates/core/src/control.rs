//! Hamiltonian feedback control of the higher-order Kuramoto model.
//!
//! The interaction part of the Hamiltonian is a sum of Fourier terms
//! `V = Σ_t c_t f_t(I) sin(k_t·θ)`, with `k_t = e_j - e_i` on edges and
//! `k_t = e_j + e_k - 2e_i` on triangles. The pseudo-inverse of `{H₀}` maps each
//! term to `-c_t f_t(I) cos(k_t·θ) / (ω·k_t)`, and the control is the
//! dominant term of the control series differentiated on the torus `I = ½·1`:
//!
//! ```text
//! h_i = -½ ∂/∂I_i {ΓV, V} |_{I=½}
//! ```
//!
//! On that torus every `f_t` vanishes and `∂f_t/∂I = k_t / 2`, so only first
//! derivatives survive and the bracket collapses to
//!
//! ```text
//! V'_m = ½ Σ_t w_t k_tm sin φ_t          G'_m = -½ Σ_t w_t k_tm cos φ_t / Ω_t
//! h_i  = -¼ Σ_t w_t k_ti [cos φ_t (k_t·G') - sin φ_t (k_t·V') / Ω_t]
//! ```
//!
//! where `φ_t = k_t·θ`, `Ω_t = k_t·ω` and `w_t` folds the two identical
//! ordered realisations of each simplex term. [`ControlKernel`] evaluates this
//! in two passes over the simplices inside the pinned set, O(#simplices) per
//! call. [`bracket_functional`] evaluates the bracket itself at arbitrary
//! actions and backs the finite-difference oracle [`control_oracle`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{orderings, ActionAngleState};
use crate::hypergraph::Hypergraph;
use crate::model::{self, ModelParams, RESONANCE_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlMode {
    #[default]
    None,
    PairwiseOnly,
    Full,
}

impl ControlMode {
    pub fn name(self) -> &'static str {
        match self {
            ControlMode::None => "none",
            ControlMode::PairwiseOnly => "pairwise",
            ControlMode::Full => "full",
        }
    }
}

impl std::str::FromStr for ControlMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ControlMode::None),
            "pairwise" | "pairwise_only" => Ok(ControlMode::PairwiseOnly),
            "full" => Ok(ControlMode::Full),
            other => Err(Error::Parameter(format!("unknown control mode {other:?}"))),
        }
    }
}

/// Which nodes receive (and are observed by) the control.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControlSpec {
    pub mode: ControlMode,
    pub pinned: Vec<usize>,
}

impl ControlSpec {
    pub fn new(mode: ControlMode, pinned: Vec<usize>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for &v in &pinned {
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, n });
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::Parameter(format!("node {v} pinned twice")));
            }
        }
        Ok(Self { mode, pinned })
    }

    pub fn none() -> Self {
        Self::default()
    }

    /// Every node pinned.
    pub fn all(mode: ControlMode, n: usize) -> Self {
        Self {
            mode,
            pinned: (0..n).collect(),
        }
    }

    pub fn pinned_count(&self) -> usize {
        match self.mode {
            ControlMode::None => 0,
            _ => self.pinned.len(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct EdgeTerm {
    a: usize,
    b: usize,
    /// 1 / (ω_b - ω_a)
    inv: f64,
}

#[derive(Debug, Clone, Copy)]
struct TriadTerm {
    nodes: [usize; 3],
    /// 1 / (ω_j + ω_k - 2ω_i) with `i = nodes[c]` as centre.
    inv: [f64; 3],
}

/// Control terms compiled for a fixed structure, frequency vector and pinned
/// set. Couplings are supplied per evaluation so they can switch mid-run.
#[derive(Debug, Clone)]
pub struct ControlKernel {
    n: usize,
    mode: ControlMode,
    pinned: Vec<usize>,
    edges: Vec<EdgeTerm>,
    triads: Vec<TriadTerm>,
}

/// Scratch buffers reused across kernel evaluations.
#[derive(Debug, Clone, Default)]
pub struct ControlScratch {
    v: Vec<f64>,
    g: Vec<f64>,
    edge_phase: Vec<Complex64>,
    triad_phase: Vec<[Complex64; 3]>,
    cube: Vec<Complex64>,
}

impl ControlKernel {
    /// Compiles the simplices lying entirely inside the pinned set. Fails with
    /// a resonance error if any frequency denominator is within `tolerance`
    /// of zero.
    pub fn new(h: &Hypergraph, omega: &[f64], spec: &ControlSpec, tolerance: f64) -> Result<Self> {
        let n = h.n();
        if omega.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: omega.len(),
            });
        }
        let spec = ControlSpec::new(spec.mode, spec.pinned.clone(), n)?;
        let mut kernel = Self {
            n,
            mode: spec.mode,
            pinned: spec.pinned.clone(),
            edges: Vec::new(),
            triads: Vec::new(),
        };
        if spec.mode == ControlMode::None || spec.pinned.is_empty() {
            return Ok(kernel);
        }
        let mut inside = vec![false; n];
        for &v in &spec.pinned {
            inside[v] = true;
        }
        let checked_inverse = |value: f64, simplex: Vec<usize>| {
            if value.abs() <= tolerance {
                Err(Error::Resonance {
                    simplex,
                    value,
                    tolerance,
                })
            } else {
                Ok(1.0 / value)
            }
        };
        for &[a, b] in h.edges() {
            if inside[a] && inside[b] {
                let inv = checked_inverse(omega[b] - omega[a], vec![a, b])?;
                kernel.edges.push(EdgeTerm { a, b, inv });
            }
        }
        if spec.mode == ControlMode::Full {
            for &[a, b, c] in h.triangles() {
                if inside[a] && inside[b] && inside[c] {
                    let inv = [
                        checked_inverse(omega[b] + omega[c] - 2.0 * omega[a], vec![a, b, c])?,
                        checked_inverse(omega[a] + omega[c] - 2.0 * omega[b], vec![b, a, c])?,
                        checked_inverse(omega[a] + omega[b] - 2.0 * omega[c], vec![c, a, b])?,
                    ];
                    kernel.triads.push(TriadTerm { nodes: [a, b, c], inv });
                }
            }
        }
        Ok(kernel)
    }

    pub fn mode(&self) -> ControlMode {
        self.mode
    }

    pub fn pinned(&self) -> &[usize] {
        &self.pinned
    }

    /// Writes the control vector for phasors `z = e^{iθ}` into `out`.
    pub fn evaluate(&self, k1: f64, k2: f64, z: &[Complex64], scratch: &mut ControlScratch, out: &mut [f64]) {
        out.fill(0.0);
        if self.edges.is_empty() && self.triads.is_empty() {
            return;
        }
        let n = self.n as f64;
        // two identical ordered realisations per simplex term
        let w1 = -2.0 * k1 / n;
        let w2 = if self.mode == ControlMode::Full {
            -2.0 * k2 / (n * n)
        } else {
            0.0
        };
        let s = scratch;
        s.v.clear();
        s.v.resize(self.n, 0.0);
        s.g.clear();
        s.g.resize(self.n, 0.0);
        s.edge_phase.clear();
        s.triad_phase.clear();

        // pass 1: ∂V/∂I and ∂ΓV/∂I on the torus
        if w1 != 0.0 {
            for e in &self.edges {
                let ph = z[e.b] * z[e.a].conj();
                s.edge_phase.push(ph);
                let sv = 0.5 * w1 * ph.im;
                let sg = -0.5 * w1 * ph.re * e.inv;
                s.v[e.b] += sv;
                s.v[e.a] -= sv;
                s.g[e.b] += sg;
                s.g[e.a] -= sg;
            }
        }
        if w2 != 0.0 && !self.triads.is_empty() {
            s.cube.clear();
            s.cube.extend(z.iter().map(|w| {
                let c = w.conj();
                c * c * c
            }));
            for t in &self.triads {
                let [a, b, c] = t.nodes;
                let prod = z[a] * z[b] * z[c];
                let phases = [prod * s.cube[a], prod * s.cube[b], prod * s.cube[c]];
                s.triad_phase.push(phases);
                for centre in 0..3 {
                    let ph = phases[centre];
                    let sv = 0.5 * w2 * ph.im;
                    let sg = -0.5 * w2 * ph.re * t.inv[centre];
                    // k = -2 on the centre, +1 on the other two nodes
                    for (slot, &node) in t.nodes.iter().enumerate() {
                        let k = if slot == centre { -2.0 } else { 1.0 };
                        s.v[node] += k * sv;
                        s.g[node] += k * sg;
                    }
                }
            }
        }

        // pass 2: contract with k_t and scatter back
        if w1 != 0.0 {
            for (e, ph) in self.edges.iter().zip(&s.edge_phase) {
                let kg = s.g[e.b] - s.g[e.a];
                let kv = s.v[e.b] - s.v[e.a];
                let amp = -0.25 * w1 * (ph.re * kg - ph.im * kv * e.inv);
                out[e.b] += amp;
                out[e.a] -= amp;
            }
        }
        if w2 != 0.0 {
            for (t, phases) in self.triads.iter().zip(&s.triad_phase) {
                let [a, b, c] = t.nodes;
                let (ga, gb, gc) = (s.g[a], s.g[b], s.g[c]);
                let (va, vb, vc) = (s.v[a], s.v[b], s.v[c]);
                let kg = [gb + gc - 2.0 * ga, ga + gc - 2.0 * gb, ga + gb - 2.0 * gc];
                let kv = [vb + vc - 2.0 * va, va + vc - 2.0 * vb, va + vb - 2.0 * vc];
                let mut acc = [0.0; 3];
                for centre in 0..3 {
                    let ph = phases[centre];
                    let amp = -0.25 * w2 * (ph.re * kg[centre] - ph.im * kv[centre] * t.inv[centre]);
                    for (slot, a_slot) in acc.iter_mut().enumerate() {
                        let k = if slot == centre { -2.0 } else { 1.0 };
                        *a_slot += k * amp;
                    }
                }
                out[a] += acc[0];
                out[b] += acc[1];
                out[c] += acc[2];
            }
        }
    }
}

fn control_with_mode(
    h: &Hypergraph,
    p: &ModelParams,
    theta: &[f64],
    spec: &ControlSpec,
    mode: ControlMode,
) -> Result<Vec<f64>> {
    p.check_dims(h, theta.len())?;
    let spec = ControlSpec {
        mode,
        pinned: spec.pinned.clone(),
    };
    let kernel = ControlKernel::new(h, &p.omega, &spec, RESONANCE_TOLERANCE)?;
    let z = model::phasors(theta);
    let mut out = vec![0.0; h.n()];
    kernel.evaluate(p.k1, p.k2, &z, &mut ControlScratch::default(), &mut out);
    Ok(out)
}

/// Control built from pairwise and triadic terms on the pinned set.
pub fn control_full(h: &Hypergraph, p: &ModelParams, theta: &[f64], spec: &ControlSpec) -> Result<Vec<f64>> {
    control_with_mode(h, p, theta, spec, ControlMode::Full)
}

/// Control built from the pairwise terms only.
pub fn control_pairwise(h: &Hypergraph, p: &ModelParams, theta: &[f64], spec: &ControlSpec) -> Result<Vec<f64>> {
    control_with_mode(h, p, theta, spec, ControlMode::PairwiseOnly)
}

/// Uncontrolled field plus the control selected by `spec.mode`.
pub fn controlled_rhs(h: &Hypergraph, p: &ModelParams, theta: &[f64], spec: &ControlSpec) -> Result<Vec<f64>> {
    let mut out = model::hokm_rhs(h, p, theta)?;
    if spec.mode != ControlMode::None {
        let u = control_with_mode(h, p, theta, spec, spec.mode)?;
        for (o, c) in out.iter_mut().zip(u) {
            *o += c;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    AllNodes,
    Pinned,
}

/// Mean absolute control over all nodes or over the pinned ones.
pub fn control_intensity(control: &[f64], pinned_count: usize, over: Normalization) -> Result<f64> {
    let total: f64 = control.iter().map(|h| h.abs()).sum();
    let count = match over {
        Normalization::AllNodes => control.len(),
        Normalization::Pinned => pinned_count,
    };
    if count == 0 {
        return Err(Error::EmptyWindow("control intensity over an empty node set".into()));
    }
    Ok(total / count as f64)
}

/// One ordered Fourier term of the interaction part with its action factor
/// evaluated at general actions.
struct OrderedTerm {
    coeff: f64,
    nodes: [usize; 3],
    k: [f64; 3],
    len: usize,
    f: f64,
    df: [f64; 3],
}

fn ordered_terms(h: &Hypergraph, p: &ModelParams, actions: &[f64], spec: &ControlSpec) -> Vec<OrderedTerm> {
    let mut terms = Vec::new();
    if spec.mode == ControlMode::None {
        return terms;
    }
    let n = h.n() as f64;
    let mut inside = vec![false; h.n()];
    for &v in &spec.pinned {
        inside[v] = true;
    }
    for &[a, b] in h.edges() {
        if !(inside[a] && inside[b]) {
            continue;
        }
        for (i, j) in [(a, b), (b, a)] {
            let (ii, ij) = (actions[i], actions[j]);
            let root = (ii * ij).sqrt();
            terms.push(OrderedTerm {
                coeff: -p.k1 / n,
                nodes: [i, j, 0],
                k: [-1.0, 1.0, 0.0],
                len: 2,
                f: root * (ij - ii),
                df: [
                    0.5 * (ij / ii).sqrt() * (ij - ii) - root,
                    0.5 * (ii / ij).sqrt() * (ij - ii) + root,
                    0.0,
                ],
            });
        }
    }
    if spec.mode == ControlMode::Full {
        for &tri in h.triangles() {
            if !tri.iter().all(|&v| inside[v]) {
                continue;
            }
            for (i, j, k) in orderings(tri) {
                let (ii, ij, ik) = (actions[i], actions[j], actions[k]);
                let root = (ii * ij * ik).cbrt();
                let d = ij + ik - 2.0 * ii;
                terms.push(OrderedTerm {
                    coeff: -p.k2 / (n * n),
                    nodes: [i, j, k],
                    k: [-2.0, 1.0, 1.0],
                    len: 3,
                    f: root * d,
                    df: [
                        root / (3.0 * ii) * d - 2.0 * root,
                        root / (3.0 * ij) * d + root,
                        root / (3.0 * ik) * d + root,
                    ],
                });
            }
        }
    }
    terms
}

/// The Poisson bracket `{ΓV, V}` of the pinned-set interaction part at the
/// action-angle point `s`, from closed-form partial derivatives.
///
/// `spec.mode` selects `V = V⁽¹⁾ + V⁽²⁾` (full) or `V⁽¹⁾` (pairwise only).
pub fn bracket_functional(h: &Hypergraph, p: &ModelParams, s: &ActionAngleState, spec: &ControlSpec) -> Result<f64> {
    let n = h.n();
    p.check_dims(h, s.angles.len())?;
    if s.actions.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s.actions.len(),
        });
    }
    if let Some(node) = s.actions.iter().position(|&a| !(a > 0.0)) {
        return Err(Error::Domain {
            node,
            value: s.actions[node],
        });
    }
    let spec = ControlSpec::new(spec.mode, spec.pinned.clone(), n)?;
    let terms = ordered_terms(h, p, &s.actions, &spec);
    let th = &s.angles;
    let mut dv_di = vec![0.0; n];
    let mut dv_dth = vec![0.0; n];
    let mut dg_di = vec![0.0; n];
    let mut dg_dth = vec![0.0; n];
    for t in &terms {
        let nodes = &t.nodes[..t.len];
        let phase: f64 = nodes.iter().zip(&t.k).map(|(&v, k)| k * th[v]).sum();
        let omega: f64 = nodes.iter().zip(&t.k).map(|(&v, k)| k * p.omega[v]).sum();
        if omega.abs() <= RESONANCE_TOLERANCE {
            return Err(Error::Resonance {
                simplex: nodes.to_vec(),
                value: omega,
                tolerance: RESONANCE_TOLERANCE,
            });
        }
        let (sn, cs) = phase.sin_cos();
        for (slot, &v) in nodes.iter().enumerate() {
            let k = t.k[slot];
            dv_dth[v] += t.coeff * t.f * cs * k;
            dv_di[v] += t.coeff * t.df[slot] * sn;
            dg_dth[v] += t.coeff * t.f * sn * k / omega;
            dg_di[v] += -t.coeff * t.df[slot] * cs / omega;
        }
    }
    Ok((0..n).map(|m| dg_di[m] * dv_dth[m] - dg_dth[m] * dv_di[m]).sum())
}

/// Step used by [`control_oracle`] for the central differences in the actions.
pub const ORACLE_STEP: f64 = 1e-5;

/// Control obtained by differentiating [`bracket_functional`] numerically:
/// `h_i ≈ -½ ∂/∂I_i {ΓV, V}` at `I = ½·1` for pinned `i`, zero elsewhere.
pub fn control_oracle(
    h: &Hypergraph,
    p: &ModelParams,
    theta: &[f64],
    spec: &ControlSpec,
    step: f64,
) -> Result<Vec<f64>> {
    let n = h.n();
    let mut out = vec![0.0; n];
    if spec.mode == ControlMode::None {
        return Ok(out);
    }
    for &i in &spec.pinned {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        let mut plus = vec![0.5; n];
        plus[i] += step;
        let mut minus = vec![0.5; n];
        minus[i] -= step;
        let bp = bracket_functional(h, p, &ActionAngleState::new(plus, theta.to_vec())?, spec)?;
        let bm = bracket_functional(h, p, &ActionAngleState::new(minus, theta.to_vec())?, spec)?;
        out[i] = -0.5 * (bp - bm) / (2.0 * step);
    }
    Ok(out)
}
