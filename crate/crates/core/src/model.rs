//! The uncontrolled higher-order Kuramoto vector field and its diagnostics.
//!
//! ```text
//! dθ_i/dt = ω_i + (K1/N) Σ_j A_ij sin(θ_j - θ_i)
//!               + (K2/N²) Σ_{j,k} B_ijk [sin(θ_j + θ_k - 2θ_i) + sin(2θ_j - θ_k - θ_i)]
//! ```
//!
//! The triadic sum runs over ordered pairs `(j, k)`, so each stored triangle
//! `{i, a, b}` contributes both `(a, b)` and `(b, a)` to node `i`.

use std::f64::consts::TAU;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;

/// Sign in front of the second triadic coupling function `sin(2θ_j - θ_k - θ_i)`.
///
/// `Plus` is the form obtained from the Hamiltonian embedding. `Minus` exists
/// only to probe how sensitive the embedding checks are to this sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SecondTriadicSign {
    #[default]
    Plus,
    Minus,
}

impl SecondTriadicSign {
    fn factor(self) -> f64 {
        match self {
            SecondTriadicSign::Plus => 1.0,
            SecondTriadicSign::Minus => -1.0,
        }
    }
}

/// Coupling strengths, the part of the parameters that may switch mid-run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Couplings {
    pub k1: f64,
    pub k2: f64,
}

impl Couplings {
    pub fn new(k1: f64, k2: f64) -> Self {
        Self { k1, k2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub k1: f64,
    pub k2: f64,
    /// Quartic strength used only by [`d3_rhs`].
    pub k3: f64,
    pub omega: Vec<f64>,
    pub second_triadic_sign: SecondTriadicSign,
}

/// Default tolerance of the resonance guard.
pub const RESONANCE_TOLERANCE: f64 = 1e-6;

impl ModelParams {
    pub fn new(k1: f64, k2: f64, omega: Vec<f64>) -> Result<Self> {
        let p = Self {
            k1,
            k2,
            k3: 0.0,
            omega,
            second_triadic_sign: SecondTriadicSign::Plus,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_k3(mut self, k3: f64) -> Result<Self> {
        self.k3 = k3;
        self.validate()?;
        Ok(self)
    }

    pub fn with_sign(mut self, sign: SecondTriadicSign) -> Self {
        self.second_triadic_sign = sign;
        self
    }

    pub fn couplings(&self) -> Couplings {
        Couplings::new(self.k1, self.k2)
    }

    pub fn set_couplings(&mut self, c: Couplings) -> Result<()> {
        self.k1 = c.k1;
        self.k2 = c.k2;
        self.validate()
    }

    pub fn n(&self) -> usize {
        self.omega.len()
    }

    fn validate(&self) -> Result<()> {
        for (name, k) in [("k1", self.k1), ("k2", self.k2), ("k3", self.k3)] {
            if !k.is_finite() || k < 0.0 {
                return Err(Error::Parameter(format!("{name} must be finite and >= 0, got {k}")));
            }
        }
        if let Some(w) = self.omega.iter().find(|w| !w.is_finite()) {
            return Err(Error::Parameter(format!("non-finite natural frequency {w}")));
        }
        Ok(())
    }

    pub(crate) fn check_dims(&self, h: &Hypergraph, theta_len: usize) -> Result<()> {
        if self.omega.len() != h.n() {
            return Err(Error::DimensionMismatch {
                expected: h.n(),
                got: self.omega.len(),
            });
        }
        if theta_len != h.n() {
            return Err(Error::DimensionMismatch {
                expected: h.n(),
                got: theta_len,
            });
        }
        Ok(())
    }
}

/// Checks every frequency combination that appears as a denominator of the
/// control over the simplices of `h`: `ω_j - ω_i` on edges and
/// `ω_j + ω_k - 2ω_i` for each choice of centre `i` on triangles.
pub fn check_resonance(h: &Hypergraph, omega: &[f64], tolerance: f64) -> Result<()> {
    if omega.len() != h.n() {
        return Err(Error::DimensionMismatch {
            expected: h.n(),
            got: omega.len(),
        });
    }
    for &[a, b] in h.edges() {
        let value = omega[b] - omega[a];
        if value.abs() <= tolerance {
            return Err(Error::Resonance {
                simplex: vec![a, b],
                value,
                tolerance,
            });
        }
    }
    for &[a, b, c] in h.triangles() {
        for (i, j, k) in [(a, b, c), (b, a, c), (c, a, b)] {
            let value = omega[j] + omega[k] - 2.0 * omega[i];
            if value.abs() <= tolerance {
                return Err(Error::Resonance {
                    simplex: vec![i, j, k],
                    value,
                    tolerance,
                });
            }
        }
    }
    Ok(())
}

/// Unit phasors `e^{iθ}`.
pub fn phasors(theta: &[f64]) -> Vec<Complex64> {
    theta.iter().map(|&t| Complex64::from_polar(1.0, t)).collect()
}

pub(crate) fn fill_phasors(theta: &[f64], z: &mut [Complex64]) {
    for (zi, &t) in z.iter_mut().zip(theta) {
        let (s, c) = t.sin_cos();
        *zi = Complex64::new(c, s);
    }
}

/// Adds the coupling part of the vector field (everything but `ω`) to `out`.
///
/// Complete structures use mean-field phasor sums (O(n)); anything else walks
/// the stored edges and triangles once.
pub(crate) fn add_coupling(
    h: &Hypergraph,
    k1: f64,
    k2: f64,
    sign: SecondTriadicSign,
    z: &[Complex64],
    out: &mut [f64],
) {
    if h.is_complete() {
        add_coupling_complete(h.n(), k1, k2, sign, z, out);
    } else {
        add_coupling_sparse(h, k1, k2, sign, z, out);
    }
}

pub(crate) fn add_coupling_sparse(
    h: &Hypergraph,
    k1: f64,
    k2: f64,
    sign: SecondTriadicSign,
    z: &[Complex64],
    out: &mut [f64],
) {
    let n = h.n() as f64;
    let c1 = k1 / n;
    if c1 != 0.0 {
        for &[a, b] in h.edges() {
            // sin(θ_b - θ_a)
            let s = (z[b] * z[a].conj()).im * c1;
            out[a] += s;
            out[b] -= s;
        }
    }
    let c2 = k2 / (n * n);
    if c2 != 0.0 {
        let s2 = sign.factor();
        for &[a, b, c] in h.triangles() {
            let (za, zb, zc) = (z[a], z[b], z[c]);
            let (ca, cb, cc) = (za.conj(), zb.conj(), zc.conj());
            let prod = za * zb * zc;
            // centre a: 2 sin(θ_b+θ_c-2θ_a) + s [sin(2θ_b-θ_c-θ_a) + sin(2θ_c-θ_b-θ_a)]
            let fa = 2.0 * (prod * ca * ca * ca).im + s2 * ((zb * zb * cc * ca).im + (zc * zc * cb * ca).im);
            let fb = 2.0 * (prod * cb * cb * cb).im + s2 * ((za * za * cc * cb).im + (zc * zc * ca * cb).im);
            let fc = 2.0 * (prod * cc * cc * cc).im + s2 * ((za * za * cb * cc).im + (zb * zb * ca * cc).im);
            out[a] += c2 * fa;
            out[b] += c2 * fb;
            out[c] += c2 * fc;
        }
    }
}

fn add_coupling_complete(n: usize, k1: f64, k2: f64, sign: SecondTriadicSign, z: &[Complex64], out: &mut [f64]) {
    let nf = n as f64;
    let s1: Complex64 = z.iter().sum();
    let s2: Complex64 = z.iter().map(|w| w * w).sum();
    let c1 = k1 / nf;
    let c2 = k2 / (nf * nf);
    let sg = sign.factor();
    for (i, zi) in z.iter().enumerate() {
        let ci = zi.conj();
        let mut acc = 0.0;
        if c1 != 0.0 {
            acc += c1 * (ci * s1).im;
        }
        if c2 != 0.0 {
            let p1 = s1 - zi;
            let p2 = s2 - zi * zi;
            // Σ_{j≠k} z_j z_k and Σ_{j≠k} z_j² conj(z_k) over the other nodes
            let pairs = p1 * p1 - p2;
            let mixed = p2 * p1.conj() - p1;
            acc += c2 * ((ci * ci * pairs).im + sg * (ci * mixed).im);
        }
        out[i] += acc;
    }
}

/// Right-hand side of the uncontrolled dynamics.
pub fn hokm_rhs(h: &Hypergraph, p: &ModelParams, theta: &[f64]) -> Result<Vec<f64>> {
    p.check_dims(h, theta.len())?;
    let z = phasors(theta);
    let mut out = p.omega.clone();
    add_coupling(h, p.k1, p.k2, p.second_triadic_sign, &z, &mut out);
    Ok(out)
}

/// Kuramoto order parameter `|N⁻¹ Σ e^{iθ_j}|`.
pub fn order_parameter(theta: &[f64]) -> f64 {
    cluster_order_parameter(theta, 1)
}

/// `|N⁻¹ Σ e^{i m θ_j}|`; `m = 2` detects antipodal two-cluster states.
pub fn cluster_order_parameter(theta: &[f64], m: u32) -> f64 {
    if theta.is_empty() {
        return 0.0;
    }
    let m = m.max(1) as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for &t in theta {
        let (s, c) = (m * t).sin_cos();
        re += c;
        im += s;
    }
    let n = theta.len() as f64;
    (re.hypot(im) / n).min(1.0)
}

/// Mean of the samples with `t0 < t <= t_fin`.
pub fn averaged_order_parameter(series: &[(f64, f64)], t0: f64, t_fin: f64) -> Result<f64> {
    if !(t0 < t_fin) {
        return Err(Error::EmptyWindow(format!("window ({t0}, {t_fin}] is empty")));
    }
    // Grid times are accumulated as t0 + k dt, so compare with a small slack.
    let eps = 1e-9 * (1.0 + t_fin.abs());
    let (sum, count) = series
        .iter()
        .filter(|(t, _)| *t > t0 + eps && *t <= t_fin + eps)
        .fold((0.0, 0usize), |(s, c), (_, r)| (s + r, c + 1));
    if count == 0 {
        return Err(Error::EmptyWindow(format!("no samples in ({t0}, {t_fin}]")));
    }
    Ok(sum / count as f64)
}

/// Phases reduced to `[0, 2π)`.
pub fn wrap_phases(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|t| t.rem_euclid(TAU)).collect()
}

/// `L = 2 L⁽¹⁾ + 6 L⁽²⁾` with zero row sums.
pub fn multiorder_laplacian(h: &Hypergraph, p: &ModelParams) -> DMatrix<f64> {
    let n = h.n();
    let nf = n as f64;
    let w1 = 2.0 * p.k1 / nf;
    let w2 = 6.0 * p.k2 / (nf * nf);
    let mut l = DMatrix::<f64>::zeros(n, n);
    for &[a, b] in h.edges() {
        l[(a, b)] -= w1;
        l[(b, a)] -= w1;
    }
    // Σ_k B_ijk counts the triangles sharing the pair {i, j}.
    for &[a, b, c] in h.triangles() {
        for (x, y) in [(a, b), (a, c), (b, c)] {
            l[(x, y)] -= w2;
            l[(y, x)] -= w2;
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| l[(i, j)]).sum();
        l[(i, i)] = -off;
    }
    l
}

/// Sorted eigenvalues of a symmetric matrix with a residual check.
pub fn symmetric_spectrum(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    const MAX_SWEEPS: usize = 10_000;
    let norm = m.norm();
    let eig = SymmetricEigen::try_new(m.clone(), 1e-14, MAX_SWEEPS)
        .ok_or_else(|| Error::Numerical(format!("eigensolver did not converge in {MAX_SWEEPS} iterations")))?;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let residual = (m * v - v * lambda).norm();
        if residual > 1e-8 * norm.max(f64::MIN_POSITIVE) && residual > 1e-300 {
            return Err(Error::Numerical(format!(
                "eigenpair {k} residual {residual:e} exceeds 1e-8 ‖L‖"
            )));
        }
    }
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Eigenvalues of the block Jacobian `diag(L, -L)`, sorted ascending.
pub fn sync_jacobian_spectrum(h: &Hypergraph, p: &ModelParams) -> Result<Vec<f64>> {
    let l = multiorder_laplacian(h, p);
    let lambdas = symmetric_spectrum(&l)?;
    let mut all: Vec<f64> = lambdas.iter().flat_map(|&x| [x, -x]).collect();
    all.sort_by(f64::total_cmp);
    Ok(all)
}

/// The two quartic coupling choices of the embedded order-3 dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuarticVariant {
    /// `(3/2)(K3/N³) Σ [sin(θ_j+θ_k+θ_l-3θ_i) + sin(3θ_j-θ_k-θ_l-θ_i)]`
    Type1,
    /// `2 (K3/N³) Σ sin(θ_k+θ_l-θ_j-θ_i)`
    Type2,
}

/// `ω` plus the quartic coupling over every ordered triple `(j, k, l)` of
/// distinct nodes other than `i` (the complete quadruple structure).
///
/// The ordered sums are evaluated from power sums of the phasors by
/// inclusion-exclusion, so the cost is O(n).
pub fn d3_rhs(p: &ModelParams, theta: &[f64], variant: QuarticVariant) -> Result<Vec<f64>> {
    let n = theta.len();
    if p.omega.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.omega.len(),
        });
    }
    let mut out = p.omega.clone();
    if n < 4 || p.k3 == 0.0 {
        return Ok(out);
    }
    let z = phasors(theta);
    let t1: Complex64 = z.iter().sum();
    let t2: Complex64 = z.iter().map(|w| w * w).sum();
    let t3: Complex64 = z.iter().map(|w| w * w * w).sum();
    let m = (n - 1) as f64;
    let scale = p.k3 / (n as f64).powi(3);
    for (i, zi) in z.iter().enumerate() {
        let ci = zi.conj();
        let p1 = t1 - zi;
        let p2 = t2 - zi * zi;
        let p3 = t3 - zi * zi * zi;
        let q1 = p1.conj();
        let q2 = p2.conj();
        let value = match variant {
            QuarticVariant::Type1 => {
                // Σ z_j z_k z_l over distinct triples, and Σ z_j³ conj(z_k z_l)
                let e3 = p1 * p1 * p1 - 3.0 * p1 * p2 + 2.0 * p3;
                let mixed = (q1 * q1 - q2) * p3 - 2.0 * q1 * p2 + 2.0 * p1;
                1.5 * ((ci * ci * ci * e3).im + (ci * mixed).im)
            }
            QuarticVariant::Type2 => {
                // Σ z_k z_l conj(z_j) over distinct triples
                let t = (p1 * p1 - p2) * q1 - 2.0 * (m - 1.0) * p1;
                2.0 * (ci * t).im
            }
        };
        out[i] += scale * value;
    }
    Ok(out)
}

/// Reads natural frequencies, one value per line (`#` comments allowed).
pub fn load_frequencies(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_frequencies(&text)
}

pub fn parse_frequencies(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let w: f64 = line.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("not a number: {line:?}"),
        })?;
        if !w.is_finite() {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("non-finite frequency {line:?}"),
            });
        }
        out.push(w);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(k1: f64, k2: f64, omega: Vec<f64>) -> ModelParams {
        ModelParams::new(k1, k2, omega).unwrap()
    }

    #[test]
    fn uncoupled_field_is_omega() {
        let h = Hypergraph::all_to_all(5).unwrap();
        let p = params(0.0, 0.0, vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        let out = hokm_rhs(&h, &p, &[1.0, -2.0, 0.3, 4.0, 2.2]).unwrap();
        assert_eq!(out, p.omega);
    }

    #[test]
    fn synchronized_field_is_omega() {
        let h = Hypergraph::random_simplicial_complex(8, 5.0, 2.0, 1).unwrap();
        let p = params(1.3, 0.7, (0..8).map(|i| i as f64 * 0.1).collect());
        let out = hokm_rhs(&h, &p, &[0.4; 8]).unwrap();
        for (o, w) in out.iter().zip(&p.omega) {
            assert!((o - w).abs() < 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let h = Hypergraph::all_to_all(3).unwrap();
        let p = params(1.0, 1.0, vec![0.0; 3]);
        assert!(matches!(
            hokm_rhs(&h, &p, &[0.0; 4]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn complete_and_sparse_paths_agree() {
        let h = Hypergraph::all_to_all(7).unwrap();
        let theta = [0.3, 2.0, -1.1, 4.0, 0.9, 5.5, 1.7];
        for sign in [SecondTriadicSign::Plus, SecondTriadicSign::Minus] {
            let z = phasors(&theta);
            let mut a = vec![0.0; 7];
            let mut b = vec![0.0; 7];
            add_coupling_complete(7, 0.8, 1.9, sign, &z, &mut a);
            add_coupling_sparse(&h, 0.8, 1.9, sign, &z, &mut b);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-13, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn order_parameter_cases() {
        assert!((order_parameter(&[1.2; 6]) - 1.0).abs() < 1e-15);
        assert!(order_parameter(&[0.0, PI]) < 1e-15);
        let spaced: Vec<f64> = (0..17).map(|k| TAU * k as f64 / 17.0).collect();
        assert!(order_parameter(&spaced) < 1e-12);
    }

    #[test]
    fn cluster_order_parameter_cases() {
        let theta = [0.1, 2.0, 4.4, 0.7];
        assert_eq!(cluster_order_parameter(&theta, 1), order_parameter(&theta));
        let halves = [0.0, 0.0, PI, PI];
        assert!((cluster_order_parameter(&halves, 2) - 1.0).abs() < 1e-12);
        let mut skew = vec![0.0; 9];
        skew.push(PI);
        assert!((cluster_order_parameter(&skew, 1) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn averaged_order_parameter_cases() {
        let series: Vec<(f64, f64)> = (0..=400).map(|k| (k as f64 * 0.1, 0.5)).collect();
        assert!((averaged_order_parameter(&series, 30.0, 40.0).unwrap() - 0.5).abs() < 1e-15);
        let alt: Vec<(f64, f64)> = (0..=400).map(|k| (k as f64 * 0.1, (k % 2) as f64)).collect();
        let m = averaged_order_parameter(&alt, 30.0, 40.0).unwrap();
        assert!((m - 0.5).abs() <= 0.1);
        // exactly 100 samples in (30, 40]
        let count: Vec<(f64, f64)> = (0..=400).map(|k| (k as f64 * 0.1, 1.0 / 100.0)).collect();
        let sum = averaged_order_parameter(&count, 30.0, 40.0).unwrap() * 100.0;
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(averaged_order_parameter(&series, 50.0, 60.0).is_err());
        assert!(averaged_order_parameter(&series, 40.0, 30.0).is_err());
    }

    #[test]
    fn laplacian_three_nodes() {
        let h = Hypergraph::all_to_all(3).unwrap();
        let l = multiorder_laplacian(&h, &params(1.0, 1.0, vec![0.0; 3]));
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 8.0 / 3.0 } else { -4.0 / 3.0 };
                assert!((l[(i, j)] - expected).abs() < 1e-14);
            }
        }
        let spec = symmetric_spectrum(&l).unwrap();
        for (got, want) in spec.iter().zip([0.0, 4.0, 4.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let zero = multiorder_laplacian(&h, &params(0.0, 0.0, vec![0.0; 3]));
        assert_eq!(zero, DMatrix::zeros(3, 3));
    }

    #[test]
    fn jacobian_spectrum_three_nodes() {
        let h = Hypergraph::all_to_all(3).unwrap();
        let spec = sync_jacobian_spectrum(&h, &params(1.0, 1.0, vec![0.0; 3])).unwrap();
        for (got, want) in spec.iter().zip([-4.0, -4.0, 0.0, 0.0, 4.0, 4.0]) {
            assert!((got - want).abs() < 1e-12, "{spec:?}");
        }
        let zero = sync_jacobian_spectrum(&h, &params(0.0, 0.0, vec![0.0; 3])).unwrap();
        assert!(zero.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn d3_trivial_cases() {
        let theta = [0.2, 1.0, 2.5, -0.4, 3.0];
        let omega = vec![0.1, 0.2, 0.3, 0.4, 0.5];
        let p = params(0.0, 0.0, omega.clone());
        assert_eq!(d3_rhs(&p, &theta, QuarticVariant::Type1).unwrap(), omega);
        let p = p.with_k3(2.0).unwrap();
        for v in [QuarticVariant::Type1, QuarticVariant::Type2] {
            let out = d3_rhs(&p, &[0.7; 5], v).unwrap();
            for (o, w) in out.iter().zip(&omega) {
                assert!((o - w).abs() < 1e-13);
            }
        }
        let small = params(0.0, 0.0, vec![0.0; 3]).with_k3(1.0).unwrap();
        assert_eq!(
            d3_rhs(&small, &[0.0, 1.0, 2.0], QuarticVariant::Type2).unwrap(),
            vec![0.0; 3]
        );
    }

    #[test]
    fn resonance_guard() {
        let h = Hypergraph::all_to_all(3).unwrap();
        assert!(check_resonance(&h, &[0.1, 0.5, 0.7], 1e-6).is_ok());
        assert!(matches!(
            check_resonance(&h, &[0.1, 0.1, 0.7], 1e-6),
            Err(Error::Resonance { .. })
        ));
        // ω_1 + ω_2 - 2ω_0 = 0
        let err = check_resonance(&h, &[0.5, 0.2, 0.8], 1e-6).unwrap_err();
        assert!(matches!(err, Error::Resonance { ref simplex, .. } if simplex == &vec![0, 1, 2]));
    }

    #[test]
    fn frequency_file() {
        assert_eq!(parse_frequencies("# w\n0.5\n\n 1e-1 \n").unwrap(), vec![0.5, 0.1]);
        assert!(parse_frequencies("0.5\nabc\n").is_err());
        assert!(parse_frequencies("NaN\n").is_err());
    }

    #[test]
    fn negative_coupling_rejected() {
        assert!(ModelParams::new(-1.0, 0.0, vec![0.0]).is_err());
        assert!(ModelParams::new(0.0, 0.0, vec![0.0]).unwrap().with_k3(-0.1).is_err());
    }
}
