//! Action-angle Hamiltonian whose invariant tori carry the higher-order
//! Kuramoto dynamics.
//!
//! ```text
//! H(I, θ) = Σ ω_i I_i
//!         - (K1/N)  Σ_{i,j}   A_ij  √(I_i I_j)     (I_j - I_i)        sin(θ_j - θ_i)
//!         - (K2/N²) Σ_{i,j,k} B_ijk ∛(I_i I_j I_k) (I_j + I_k - 2I_i) sin(θ_j + θ_k - 2θ_i)
//! ```
//!
//! All sums run over ordered realisations of the stored simplices. On the torus
//! `I = c·1` the action derivatives vanish identically and the angles follow the
//! Kuramoto field with couplings `(2c K1, 2c K2)`.

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::integrate::VectorField;
use crate::model::ModelParams;

/// Lower clamp applied to actions before root evaluations.
pub const ACTION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ActionAngleState {
    pub actions: Vec<f64>,
    pub angles: Vec<f64>,
}

impl ActionAngleState {
    pub fn new(actions: Vec<f64>, angles: Vec<f64>) -> Result<Self> {
        if actions.len() != angles.len() {
            return Err(Error::DimensionMismatch {
                expected: actions.len(),
                got: angles.len(),
            });
        }
        check_actions(&actions)?;
        Ok(Self { actions, angles })
    }

    /// State on the torus `I = c·1`.
    pub fn on_torus(c: f64, angles: Vec<f64>) -> Result<Self> {
        Self::new(vec![c; angles.len()], angles)
    }

    /// Packs into `[I_0..I_{n-1}, θ_0..θ_{n-1}]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.actions.clone();
        v.extend_from_slice(&self.angles);
        v
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        if x.len() % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: x.len() + 1,
                got: x.len(),
            });
        }
        let n = x.len() / 2;
        Self::new(x[..n].to_vec(), x[n..].to_vec())
    }
}

fn check_actions(actions: &[f64]) -> Result<()> {
    match actions.iter().position(|&a| !(a > 0.0) || !a.is_finite()) {
        Some(node) => Err(Error::Domain {
            node,
            value: actions[node],
        }),
        None => Ok(()),
    }
}

fn check_dims(h: &Hypergraph, p: &ModelParams, actions: &[f64], angles: &[f64]) -> Result<()> {
    for len in [p.omega.len(), actions.len(), angles.len()] {
        if len != h.n() {
            return Err(Error::DimensionMismatch {
                expected: h.n(),
                got: len,
            });
        }
    }
    Ok(())
}

/// All six orderings `(i, j, k)` of a triangle.
pub(crate) fn orderings(t: [usize; 3]) -> [(usize, usize, usize); 6] {
    let [a, b, c] = t;
    [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
}

pub fn hamiltonian_value(h: &Hypergraph, p: &ModelParams, s: &ActionAngleState) -> Result<f64> {
    check_dims(h, p, &s.actions, &s.angles)?;
    check_actions(&s.actions)?;
    let n = h.n() as f64;
    let act: Vec<f64> = s.actions.iter().map(|a| a.max(ACTION_FLOOR)).collect();
    let th = &s.angles;
    let mut value: f64 = p.omega.iter().zip(&act).map(|(w, i)| w * i).sum();
    let mut pair = 0.0;
    for &[a, b] in h.edges() {
        for (i, j) in [(a, b), (b, a)] {
            pair += (act[i] * act[j]).sqrt() * (act[j] - act[i]) * (th[j] - th[i]).sin();
        }
    }
    let mut triad = 0.0;
    for &tri in h.triangles() {
        for (i, j, k) in orderings(tri) {
            triad += (act[i] * act[j] * act[k]).cbrt()
                * (act[j] + act[k] - 2.0 * act[i])
                * (th[j] + th[k] - 2.0 * th[i]).sin();
        }
    }
    value -= p.k1 / n * pair;
    value -= p.k2 / (n * n) * triad;
    Ok(value)
}

/// `(dI/dt, dθ/dt) = (-∂H/∂θ, ∂H/∂I)`.
pub fn hamiltonian_flow_rhs(h: &Hypergraph, p: &ModelParams, s: &ActionAngleState) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(h, p, &s.actions, &s.angles)?;
    check_actions(&s.actions)?;
    let nn = h.n();
    let mut i_dot = vec![0.0; nn];
    let mut th_dot = p.omega.clone();
    flow_into(h, p, &s.actions, &s.angles, &mut i_dot, &mut th_dot);
    Ok((i_dot, th_dot))
}

fn flow_into(h: &Hypergraph, p: &ModelParams, actions: &[f64], th: &[f64], i_dot: &mut [f64], th_dot: &mut [f64]) {
    let n = h.n() as f64;
    let c1 = p.k1 / n;
    let c2 = p.k2 / (n * n);
    let act: Vec<f64> = actions.iter().map(|a| a.max(ACTION_FLOOR)).collect();
    for i in 0..h.n() {
        let ii = act[i];
        let mut di = 0.0;
        let mut dt = 0.0;
        for &j in h.neighbors(i) {
            let ij = act[j];
            let root = (ii * ij).sqrt();
            let (s, c) = (th[j] - th[i]).sin_cos();
            di += -2.0 * c1 * root * (ij - ii) * c;
            dt += -2.0 * c1 * s * (0.5 * (ij / ii).sqrt() * (ij - ii) - root);
        }
        for &t in h.triangles_of(i) {
            let tri = h.triangles()[t];
            let mut others = tri.iter().copied().filter(|&v| v != i);
            let (x, y) = (others.next().unwrap_or(i), others.next().unwrap_or(i));
            for (j, k) in [(x, y), (y, x)] {
                let (ij, ik) = (act[j], act[k]);
                let root = (ii * ij * ik).cbrt();
                let ratio = (ij * ik / (ii * ii)).cbrt();
                let first = th[j] + th[k] - 2.0 * th[i];
                let second = 2.0 * th[j] - th[k] - th[i];
                let d1 = ij + ik - 2.0 * ii;
                let d2 = 2.0 * ij - ik - ii;
                di += -2.0 * c2 * root * d1 * first.cos();
                di += -2.0 * c2 * root * d2 * second.cos();
                dt += -c2 * first.sin() * (-2.0 * root + ratio * d1 / 3.0);
                dt += 2.0 * c2 * second.sin() * (root - ratio * d2 / 3.0);
            }
        }
        i_dot[i] = di;
        th_dot[i] += dt;
    }
}

/// The Hamiltonian flow as a `2n`-dimensional vector field over
/// `[I_0..I_{n-1}, θ_0..θ_{n-1}]`.
pub struct HamiltonianFlow<'a> {
    h: &'a Hypergraph,
    p: ModelParams,
}

impl<'a> HamiltonianFlow<'a> {
    pub fn new(h: &'a Hypergraph, p: ModelParams) -> Result<Self> {
        if p.omega.len() != h.n() {
            return Err(Error::DimensionMismatch {
                expected: h.n(),
                got: p.omega.len(),
            });
        }
        Ok(Self { h, p })
    }
}

impl VectorField for HamiltonianFlow<'_> {
    type Params = ModelParams;

    fn dim(&self) -> usize {
        2 * self.h.n()
    }

    fn eval(&mut self, _t: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let n = self.h.n();
        let (actions, angles) = x.split_at(n);
        check_actions(actions)?;
        let (i_dot, th_dot) = dx.split_at_mut(n);
        th_dot.copy_from_slice(&self.p.omega);
        flow_into(self.h, &self.p, actions, angles, i_dot, th_dot);
        Ok(())
    }

    fn set_params(&mut self, params: &ModelParams) -> Result<()> {
        self.p = params.clone();
        Ok(())
    }
}
