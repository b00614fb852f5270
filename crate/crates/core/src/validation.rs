//! Self-checks run by the `validate` command: each compares a fast code path
//! with an independent construction and reports the worst residual.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::{control_full, control_oracle, control_pairwise, ControlMode, ControlSpec, ORACLE_STEP};
use crate::error::Result;
use crate::experiments::ControlledField;
use crate::hamiltonian::{ActionAngleState, HamiltonianFlow};
use crate::hypergraph::Hypergraph;
use crate::integrate::{integrate, FnField, IntegrationPlan};
use crate::model::{self, Couplings, ModelParams, SecondTriadicSign, RESONANCE_TOLERANCE};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckReport {
    fn at_most(name: &'static str, residual: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name,
            residual,
            tolerance,
            passed: residual.is_finite() && residual <= tolerance,
            detail,
        }
    }
}

/// Uniform frequencies on `[lo, hi]` that clear the resonance guard on `h`.
pub fn admissible_frequencies<R: Rng>(h: &Hypergraph, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let omega: Vec<f64> = (0..h.n()).map(|_| rng.random_range(lo..hi)).collect();
        if model::check_resonance(h, &omega, 1e3 * RESONANCE_TOLERANCE).is_ok() {
            return omega;
        }
    }
}

/// Closed-form controls against the finite-difference bracket oracle on
/// random instances with `n ∈ {3, …, 6}`. The residual is the largest error
/// relative to the largest oracle component of its instance.
pub fn control_oracle_check(instances: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for k in 0..instances {
        let n = 3 + k % 4;
        let h = Hypergraph::all_to_all(n)?;
        let omega = admissible_frequencies(&h, -1.0, 1.0, &mut rng);
        let theta: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let k1 = rng.random_range(0.1..2.0);
        let k2 = rng.random_range(0.1..2.0);
        let m = rng.random_range(2..=n);
        let mut nodes: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(nodes.as_mut_slice(), &mut rng);
        nodes.truncate(m);
        let p = ModelParams::new(k1, k2, omega)?;
        for mode in [ControlMode::Full, ControlMode::PairwiseOnly] {
            let spec = ControlSpec::new(mode, nodes.clone(), n)?;
            let fast = match mode {
                ControlMode::Full => control_full(&h, &p, &theta, &spec)?,
                _ => control_pairwise(&h, &p, &theta, &spec)?,
            };
            let oracle = control_oracle(&h, &p, &theta, &spec, ORACLE_STEP)?;
            let scale = oracle.iter().fold(1e-12f64, |a, v| a.max(v.abs()));
            for (a, b) in fast.iter().zip(&oracle) {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    Ok(CheckReport::at_most(
        "control_oracle",
        worst,
        1e-6,
        format!("{instances} instances, full and pairwise"),
    ))
}

/// Integrates the phase model and the Hamiltonian flow started on `I = ½·1`
/// side by side and reports the largest phase difference.
pub fn embedding_check(n: usize, t_end: f64, dt: f64, sign: SecondTriadicSign, seed: u64) -> Result<CheckReport> {
    let h = Hypergraph::all_to_all(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let theta0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let plan: IntegrationPlan = IntegrationPlan::new(0.0, t_end, dt)?;

    let mut phase_field =
        ControlledField::new(&h, omega.clone(), Couplings::new(1.0, 1.0), &ControlSpec::none())?.with_sign(sign);
    let mut phase_traj = Vec::new();
    let mut rec = |_t: f64, x: &[f64], _f: &ControlledField<'_>| phase_traj.push(x.to_vec());
    integrate(&mut phase_field, &theta0, &plan.grid(), &mut [&mut rec])?;

    let p = ModelParams::new(1.0, 1.0, omega)?;
    let mut flow = HamiltonianFlow::new(&h, p)?;
    let x0 = ActionAngleState::on_torus(0.5, theta0)?.to_vec();
    let mut worst: f64 = 0.0;
    let mut k = 0;
    let mut cmp = |_t: f64, x: &[f64], _f: &HamiltonianFlow<'_>| {
        for (a, b) in x[n..].iter().zip(&phase_traj[k]) {
            worst = worst.max((a - b).abs());
        }
        k += 1;
    };
    integrate(&mut flow, &x0, &plan.grid(), &mut [&mut cmp])?;
    Ok(CheckReport::at_most(
        "embedding_equivalence",
        worst,
        1e-6,
        format!("all_to_all({n}), t in [0, {t_end}], dt {dt}, sign {sign:?}"),
    ))
}

/// Largest drift of the actions away from `c` along the Hamiltonian flow.
pub fn torus_invariance_check(n: usize, levels: &[f64], t_end: f64, dt: f64, seed: u64) -> Result<CheckReport> {
    let h = Hypergraph::all_to_all(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let theta0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let plan: IntegrationPlan = IntegrationPlan::new(0.0, t_end, dt)?;
    let mut worst: f64 = 0.0;
    for &c in levels {
        let mut flow = HamiltonianFlow::new(&h, ModelParams::new(1.0, 1.0, omega.clone())?)?;
        let x0 = ActionAngleState::on_torus(c, theta0.clone())?.to_vec();
        let mut obs = |_t: f64, x: &[f64], _f: &HamiltonianFlow<'_>| {
            for a in &x[..n] {
                worst = worst.max((a - c).abs());
            }
        };
        integrate(&mut flow, &x0, &plan.grid(), &mut [&mut obs])?;
    }
    Ok(CheckReport::at_most(
        "torus_invariance",
        worst,
        1e-9,
        format!("all_to_all({n}), levels {levels:?}, t in [0, {t_end}]"),
    ))
}

/// Endpoint errors of `x' = -x` on `[0, 1]` for `dt = 0.1, 0.05, 0.025`.
pub fn rk4_errors() -> Result<[f64; 3]> {
    let mut errs = [0.0; 3];
    for (e, dt) in errs.iter_mut().zip([0.1, 0.05, 0.025]) {
        let mut f = FnField::new(1, |_t: f64, x: &[f64], dx: &mut [f64]| dx[0] = -x[0]);
        let x = integrate(&mut f, &[1.0], &IntegrationPlan::new(0.0, 1.0, dt)?, &mut [])?;
        *e = (x[0] - (-1.0f64).exp()).abs();
    }
    Ok(errs)
}

/// Both error ratios of [`rk4_errors`] lie in `[14, 18]`.
pub fn rk4_order_check() -> Result<CheckReport> {
    let e = rk4_errors()?;
    let ratios = [e[0] / e[1], e[1] / e[2]];
    let off = ratios.iter().map(|r| (r - 16.0).abs()).fold(0.0, f64::max);
    Ok(CheckReport::at_most(
        "rk4_order",
        off,
        2.0,
        format!("error ratios {:.3}, {:.3}", ratios[0], ratios[1]),
    ))
}

/// Row sums of the multiorder Laplacian, negation symmetry of the Jacobian
/// spectrum and its double zero, on a random simplicial complex.
pub fn spectrum_check(seed: u64) -> Result<CheckReport> {
    let h = Hypergraph::random_simplicial_complex(30, 8.0, 4.0, seed)?;
    let p = ModelParams::new(1.3, 0.7, vec![0.0; h.n()])?;
    let l = model::multiorder_laplacian(&h, &p);
    let row = (0..l.nrows()).map(|i| l.row(i).sum().abs()).fold(0.0, f64::max);
    let spec = model::sync_jacobian_spectrum(&h, &p)?;
    let scale = spec.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut sorted = spec.clone();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let symmetry = (0..m)
        .map(|i| (sorted[i] + sorted[m - 1 - i]).abs())
        .fold(0.0, f64::max)
        / scale;
    let zeros = spec.iter().filter(|v| v.abs() <= 1e-9 * scale).count();
    let residual = row.max(symmetry).max(if zeros >= 2 { 0.0 } else { 1.0 });
    Ok(CheckReport::at_most(
        "laplacian_spectrum",
        residual,
        1e-9,
        format!("row sum {row:.2e}, asymmetry {symmetry:.2e}, zero eigenvalues {zeros}"),
    ))
}

/// The full suite with the default settings.
pub fn run_all(seed: u64, sign: SecondTriadicSign) -> Result<Vec<CheckReport>> {
    Ok(vec![
        control_oracle_check(20, seed)?,
        embedding_check(10, 10.0, 1e-3, sign, seed)?,
        torus_invariance_check(10, &[0.3, 0.5, 1.0], 10.0, 1e-2, seed)?,
        rk4_order_check()?,
        spectrum_check(seed)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_embedding_detects_sign_flip() {
        let ok = embedding_check(5, 1.0, 1e-2, SecondTriadicSign::Plus, 1).unwrap();
        assert!(ok.passed, "{ok:?}");
        let bad = embedding_check(5, 1.0, 1e-2, SecondTriadicSign::Minus, 1).unwrap();
        assert!(!bad.passed, "{bad:?}");
    }

    #[test]
    fn quick_checks_pass() {
        assert!(control_oracle_check(4, 3).unwrap().passed);
        assert!(rk4_order_check().unwrap().passed);
        assert!(spectrum_check(2).unwrap().passed);
        assert!(torus_invariance_check(4, &[0.3, 1.0], 2.0, 0.05, 0).unwrap().passed);
    }
}
