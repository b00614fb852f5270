//! Simulation campaigns: single runs, coupling sweeps, pinning sweeps, the
//! coupling switch run, basin classification and control cost.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::control::{ControlKernel, ControlMode, ControlScratch, ControlSpec};
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::integrate::{integrate, IntegrationPlan, Observer, VectorField};
use crate::model::{self, Couplings, SecondTriadicSign, RESONANCE_TOLERANCE};
use crate::seed::{derive_seed, stream, STREAM_OMEGA, STREAM_PHASES, STREAM_PINNING};
use crate::stats;

/// Controlled higher-order Kuramoto field with switchable couplings.
///
/// After each evaluation `last_control` holds the control injected at the
/// evaluated state.
pub struct ControlledField<'a> {
    h: &'a Hypergraph,
    omega: Vec<f64>,
    couplings: Couplings,
    sign: SecondTriadicSign,
    kernel: Option<ControlKernel>,
    scratch: ControlScratch,
    z: Vec<Complex64>,
    last_control: Vec<f64>,
}

impl<'a> ControlledField<'a> {
    pub fn new(h: &'a Hypergraph, omega: Vec<f64>, couplings: Couplings, spec: &ControlSpec) -> Result<Self> {
        if omega.len() != h.n() {
            return Err(Error::DimensionMismatch {
                expected: h.n(),
                got: omega.len(),
            });
        }
        check_couplings(couplings)?;
        let kernel = match spec.mode {
            ControlMode::None => None,
            _ => Some(ControlKernel::new(h, &omega, spec, RESONANCE_TOLERANCE)?),
        };
        Ok(Self {
            h,
            omega,
            couplings,
            sign: SecondTriadicSign::Plus,
            kernel,
            scratch: ControlScratch::default(),
            z: vec![Complex64::new(1.0, 0.0); h.n()],
            last_control: vec![0.0; h.n()],
        })
    }

    pub fn with_sign(mut self, sign: SecondTriadicSign) -> Self {
        self.sign = sign;
        self
    }

    pub fn last_control(&self) -> &[f64] {
        &self.last_control
    }

    pub fn couplings(&self) -> Couplings {
        self.couplings
    }

    pub fn pinned(&self) -> &[usize] {
        self.kernel.as_ref().map(|k| k.pinned()).unwrap_or(&[])
    }
}

fn check_couplings(c: Couplings) -> Result<()> {
    if !(c.k1.is_finite() && c.k2.is_finite() && c.k1 >= 0.0 && c.k2 >= 0.0) {
        return Err(Error::Parameter(format!(
            "couplings must be finite and non-negative, got ({}, {})",
            c.k1, c.k2
        )));
    }
    Ok(())
}

impl VectorField for ControlledField<'_> {
    type Params = Couplings;

    fn dim(&self) -> usize {
        self.h.n()
    }

    fn eval(&mut self, _t: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        model::fill_phasors(x, &mut self.z);
        dx.copy_from_slice(&self.omega);
        let Couplings { k1, k2 } = self.couplings;
        model::add_coupling(self.h, k1, k2, self.sign, &self.z, dx);
        if let Some(kernel) = &self.kernel {
            kernel.evaluate(k1, k2, &self.z, &mut self.scratch, &mut self.last_control);
            for (d, u) in dx.iter_mut().zip(&self.last_control) {
                *d += u;
            }
        }
        Ok(())
    }

    fn set_params(&mut self, params: &Couplings) -> Result<()> {
        check_couplings(*params)?;
        self.couplings = *params;
        Ok(())
    }
}

/// Where a per-node vector comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Draw {
    Fixed(Vec<f64>),
    /// Independent `U([lo, hi])` per node.
    Uniform {
        lo: f64,
        hi: f64,
    },
}

impl Draw {
    fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            Draw::Fixed(v) if v.len() == n => Ok(v.clone()),
            Draw::Fixed(v) => Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            }),
            Draw::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::Parameter(format!("invalid uniform range [{lo}, {hi}]")));
                }
                if lo == hi {
                    return Ok(vec![*lo; n]);
                }
                Ok((0..n).map(|_| rng.random_range(*lo..=*hi)).collect())
            }
        }
    }

    fn is_random(&self) -> bool {
        matches!(self, Draw::Uniform { lo, hi } if lo < hi)
    }
}

/// Thresholds separating synchronized, two-cluster and incoherent states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub sync: f64,
    pub two_cluster: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            sync: 0.95,
            two_cluster: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateClass {
    Sync,
    TwoCluster { larger_fraction: f64 },
    Incoherent,
}

impl StateClass {
    pub fn name(&self) -> &'static str {
        match self {
            StateClass::Sync => "sync",
            StateClass::TwoCluster { .. } => "two_cluster",
            StateClass::Incoherent => "incoherent",
        }
    }
}

/// Labels a phase configuration by its first and second order parameters.
pub fn classify_state(theta: &[f64], thresholds: Thresholds) -> StateClass {
    let r = model::order_parameter(theta);
    if r >= thresholds.sync {
        StateClass::Sync
    } else if model::cluster_order_parameter(theta, 2) >= thresholds.two_cluster {
        StateClass::TwoCluster {
            larger_fraction: (1.0 + r) / 2.0,
        }
    } else {
        StateClass::Incoherent
    }
}

/// Everything needed to run one simulation apart from topology, control and
/// seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSetup {
    pub couplings: Couplings,
    pub omega: Draw,
    pub phases: Draw,
    /// Integration grid; switches replace the couplings.
    pub plan: IntegrationPlan<Couplings>,
    /// `R̂` averages `R(t)` over `window.0 < t ≤ window.1`.
    pub window: (f64, f64),
    pub thresholds: Thresholds,
    /// Redraws of a random frequency vector that hits a resonance.
    pub resonance_retries: usize,
}

impl RunSetup {
    /// Frequencies `U([0, 1])`, phases `U([0, 0.3])`, `dt = 0.1` on `[0, 40]`
    /// and `R̂` over `(30, 40]`.
    pub fn standard(couplings: Couplings) -> Self {
        Self {
            couplings,
            omega: Draw::Uniform { lo: 0.0, hi: 1.0 },
            phases: Draw::Uniform { lo: 0.0, hi: 0.3 },
            plan: IntegrationPlan::new(0.0, 40.0, 0.1).expect("static plan"),
            window: (30.0, 40.0),
            thresholds: Thresholds::default(),
            resonance_retries: 100,
        }
    }

    pub fn with_couplings(&self, couplings: Couplings) -> Self {
        Self {
            couplings,
            ..self.clone()
        }
    }

    /// Draws frequencies and initial phases for `seed`. Random frequencies
    /// are redrawn until every denominator of the control clears the
    /// resonance tolerance, whatever the control mode, so paired runs with
    /// different modes share their frequencies.
    pub fn draw(&self, h: &Hypergraph, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = h.n();
        let mut rng = stream(seed, STREAM_OMEGA);
        let mut omega = self.omega.sample(n, &mut rng)?;
        if self.omega.is_random() {
            let mut attempts = 0;
            while model::check_resonance(h, &omega, RESONANCE_TOLERANCE).is_err() {
                attempts += 1;
                if attempts > self.resonance_retries {
                    return Err(Error::ResonanceRetriesExhausted(self.resonance_retries));
                }
                omega = self.omega.sample(n, &mut rng)?;
            }
        }
        let theta = self.phases.sample(n, &mut stream(seed, STREAM_PHASES))?;
        Ok((omega, theta))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Sampled `(t, R(t))`.
    pub r_series: Vec<(f64, f64)>,
    /// Sampled `(t, I(t))`, the mean of `|h_i|` over all nodes.
    pub intensity_series: Vec<(f64, f64)>,
    pub r_hat: f64,
    pub final_theta: Vec<f64>,
    /// Time and pinned-node averaged `∫|h_i|`, present when nodes are pinned.
    pub cost: Option<f64>,
    pub classification: Option<StateClass>,
    pub seed: u64,
}

/// Streaming trapezoid rule for `∫ Σ_i |h_i(t)| dt`.
#[derive(Debug, Clone, Default)]
pub struct CostAccumulator {
    last: Option<(f64, f64)>,
    integral: f64,
    samples: usize,
}

impl CostAccumulator {
    /// Adds the sample `Σ_i |h_i(t)|`.
    pub fn push(&mut self, t: f64, total_abs: f64) {
        if let Some((t0, y0)) = self.last {
            self.integral += 0.5 * (t - t0) * (y0 + total_abs);
        }
        self.last = Some((t, total_abs));
        self.samples += 1;
    }

    pub fn finish(&self, pinned_count: usize, horizon: f64) -> Result<f64> {
        if self.samples < 2 {
            return Err(Error::EmptyWindow("control cost needs at least two samples".into()));
        }
        if pinned_count == 0 {
            return Err(Error::Parameter("control cost needs at least one pinned node".into()));
        }
        if !(horizon > 0.0) {
            return Err(Error::Parameter(format!(
                "cost horizon must be positive, got {horizon}"
            )));
        }
        Ok(self.integral / (horizon * pinned_count as f64))
    }
}

/// `(1 / T M) Σ_i ∫₀ᵀ |h_i| dt` by the trapezoid rule, where
/// `magnitudes[k][i]` is `|h_i(times[k])|` for the `M` pinned nodes.
pub fn control_cost(times: &[f64], magnitudes: &[Vec<f64>], pinned_count: usize, horizon: f64) -> Result<f64> {
    if times.len() != magnitudes.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            got: magnitudes.len(),
        });
    }
    let mut acc = CostAccumulator::default();
    for (&t, row) in times.iter().zip(magnitudes) {
        if row.len() != pinned_count {
            return Err(Error::DimensionMismatch {
                expected: pinned_count,
                got: row.len(),
            });
        }
        acc.push(t, row.iter().map(|v| v.abs()).sum());
    }
    acc.finish(pinned_count, horizon)
}

struct Recorder {
    sample_every: usize,
    calls: usize,
    t_end: f64,
    r_series: Vec<(f64, f64)>,
    intensity_series: Vec<(f64, f64)>,
    cost: CostAccumulator,
}

impl Observer<ControlledField<'_>> for Recorder {
    fn observe(&mut self, t: f64, x: &[f64], field: &ControlledField<'_>) {
        let control = field.last_control();
        let total: f64 = field.pinned().iter().map(|&i| control[i].abs()).sum();
        self.cost.push(t, total);
        let at_end = (t - self.t_end).abs() <= 1e-9 * (1.0 + self.t_end.abs());
        if self.calls % self.sample_every == 0 || at_end {
            self.r_series.push((t, model::order_parameter(x)));
            let all: f64 = control.iter().map(|h| h.abs()).sum();
            self.intensity_series.push((t, all / control.len() as f64));
        }
        self.calls += 1;
    }
}

/// Integrates the controlled dynamics once.
pub fn run_once(h: &Hypergraph, setup: &RunSetup, spec: &ControlSpec, seed: u64) -> Result<RunRecord> {
    let (omega, theta0) = setup.draw(h, seed)?;
    run_with(h, setup, spec, omega, theta0, seed)
}

fn run_with(
    h: &Hypergraph,
    setup: &RunSetup,
    spec: &ControlSpec,
    omega: Vec<f64>,
    theta0: Vec<f64>,
    seed: u64,
) -> Result<RunRecord> {
    let mut field = ControlledField::new(h, omega, setup.couplings, spec)?;
    // sample every step for the cost quadrature; the recorder thins the series
    let mut plan = setup.plan.clone();
    plan.sample_every = 1;
    let mut recorder = Recorder {
        sample_every: setup.plan.sample_every.max(1),
        calls: 0,
        t_end: plan.t_end,
        r_series: Vec::with_capacity(plan.steps() / setup.plan.sample_every.max(1) + 2),
        intensity_series: Vec::new(),
        cost: CostAccumulator::default(),
    };
    let final_theta = integrate(&mut field, &theta0, &plan, &mut [&mut recorder])?;
    let r_hat = model::averaged_order_parameter(&recorder.r_series, setup.window.0, setup.window.1)?;
    let pinned = field.pinned().len();
    let cost = if pinned > 0 {
        Some(recorder.cost.finish(pinned, plan.t_end - plan.t0)?)
    } else {
        None
    };
    Ok(RunRecord {
        r_series: recorder.r_series,
        intensity_series: recorder.intensity_series,
        r_hat: r_hat.clamp(0.0, 1.0),
        classification: Some(classify_state(&final_theta, setup.thresholds)),
        final_theta: model::wrap_phases(&final_theta),
        cost,
        seed,
    })
}

/// Axes and replicate count of a coupling sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub k1_values: Vec<f64>,
    pub k2_values: Vec<f64>,
    pub replicates: usize,
    pub base_seed: u64,
}

impl SweepGrid {
    pub fn new(k1_values: Vec<f64>, k2_values: Vec<f64>, replicates: usize, base_seed: u64) -> Result<Self> {
        for (name, axis) in [("k1", &k1_values), ("k2", &k2_values)] {
            if axis.is_empty() {
                return Err(Error::Parameter(format!("{name} axis is empty")));
            }
            if axis.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::Parameter(format!("{name} axis must be strictly ascending")));
            }
        }
        if replicates == 0 {
            return Err(Error::Parameter("replicates must be positive".into()));
        }
        Ok(Self {
            k1_values,
            k2_values,
            replicates,
            base_seed,
        })
    }

    /// `count` evenly spaced values on `[lo, hi]` for both axes.
    pub fn square(lo: f64, hi: f64, count: usize, replicates: usize, base_seed: u64) -> Result<Self> {
        let axis = linspace(lo, hi, count)?;
        Self::new(axis.clone(), axis, replicates, base_seed)
    }

    pub fn cells(&self) -> usize {
        self.k1_values.len() * self.k2_values.len()
    }

    /// Couplings of cell `c` (row-major in `k1`).
    pub fn couplings(&self, c: usize) -> Couplings {
        let m = self.k2_values.len();
        Couplings::new(self.k1_values[c / m], self.k2_values[c % m])
    }
}

pub fn linspace(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    match count {
        0 => Err(Error::Parameter("linspace needs at least one point".into())),
        1 => Ok(vec![lo]),
        _ => Ok((0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect()),
    }
}

/// Summary of one sweep cell. Failed replicates are left out; `r_hat_mean`
/// is absent if all of them failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub k1: f64,
    pub k2: f64,
    pub r_hat_mean: Option<f64>,
    pub r_hat_std: Option<f64>,
    pub replicates: usize,
    pub failures: Vec<Error>,
}

/// Mean `R̂` over replicates for every coupling pair of the grid.
pub fn sweep_r_hat(h: &Hypergraph, grid: &SweepGrid, spec: &ControlSpec, setup: &RunSetup) -> Vec<SweepCell> {
    let jobs: Vec<(usize, usize)> = (0..grid.cells())
        .flat_map(|c| (0..grid.replicates).map(move |r| (c, r)))
        .collect();
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let seed = derive_seed(grid.base_seed, c as u64, r as u64);
            run_once(h, &setup.with_couplings(grid.couplings(c)), spec, seed).map(|rec| rec.r_hat)
        })
        .collect();
    results
        .chunks(grid.replicates)
        .enumerate()
        .map(|(c, chunk)| {
            let Couplings { k1, k2 } = grid.couplings(c);
            let mut values = Vec::new();
            let mut failures = Vec::new();
            for res in chunk {
                match res {
                    Ok(v) => values.push(*v),
                    Err(e) => failures.push(e.clone()),
                }
            }
            SweepCell {
                k1,
                k2,
                r_hat_mean: stats::mean(&values),
                r_hat_std: stats::std_dev(&values),
                replicates: values.len(),
                failures,
            }
        })
        .collect()
}

/// The first `m` nodes of a seeded permutation.
pub fn pinned_nodes(n: usize, m: usize, seed: u64) -> Result<Vec<usize>> {
    if m > n {
        return Err(Error::Parameter(format!("cannot pin {m} of {n} nodes")));
    }
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(&mut stream(seed, STREAM_PINNING));
    nodes.truncate(m);
    Ok(nodes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PinningRow {
    pub m: usize,
    pub k1: f64,
    pub k2: f64,
    pub mode: ControlMode,
    pub r_hat_mean: Option<f64>,
    pub replicates: usize,
}

/// Mean `R̂` as a function of the number of pinned nodes. Replicate `r` of a
/// coupling pair uses the same frequencies, phases and node order for every
/// `m`, so the curves are paired.
pub fn pinning_sweep(
    h: &Hypergraph,
    m_values: &[usize],
    couplings: &[Couplings],
    mode: ControlMode,
    replicates: usize,
    base_seed: u64,
    setup: &RunSetup,
) -> Result<Vec<PinningRow>> {
    let n = h.n();
    if let Some(&m) = m_values.iter().find(|&&m| m > n) {
        return Err(Error::Parameter(format!("cannot pin {m} of {n} nodes")));
    }
    if replicates == 0 {
        return Err(Error::Parameter("replicates must be positive".into()));
    }
    let mut jobs = Vec::new();
    for (c, _) in couplings.iter().enumerate() {
        for (mi, _) in m_values.iter().enumerate() {
            for r in 0..replicates {
                jobs.push((c, mi, r));
            }
        }
    }
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(c, mi, r)| {
            let seed = derive_seed(base_seed, c as u64, r as u64);
            let m = m_values[mi];
            let spec = ControlSpec::new(mode, pinned_nodes(n, m, seed)?, n)?;
            run_once(h, &setup.with_couplings(couplings[c]), &spec, seed).map(|rec| rec.r_hat)
        })
        .collect();
    let mut rows = Vec::new();
    for (i, chunk) in results.chunks(replicates).enumerate() {
        let (c, mi) = (i / m_values.len(), i % m_values.len());
        let values: Vec<f64> = chunk.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
        if values.is_empty() {
            if let Some(Err(e)) = chunk.first() {
                return Err(e.clone());
            }
        }
        rows.push(PinningRow {
            m: m_values[mi],
            k1: couplings[c].k1,
            k2: couplings[c].k2,
            mode,
            r_hat_mean: stats::mean(&values),
            replicates: values.len(),
        });
    }
    Ok(rows)
}

/// Uncontrolled and controlled runs from the same draw with the couplings
/// changed to `after` at `t_switch`.
pub fn switch_experiment(
    h: &Hypergraph,
    setup: &RunSetup,
    after: Couplings,
    t_switch: f64,
    spec: &ControlSpec,
    seed: u64,
) -> Result<(RunRecord, RunRecord)> {
    let mut setup = setup.clone();
    setup.plan.switches.clear();
    setup.plan = setup.plan.with_switch(t_switch, after)?;
    setup.plan.validate()?;
    let (omega, theta0) = setup.draw(h, seed)?;
    let uncontrolled = run_with(h, &setup, &ControlSpec::none(), omega.clone(), theta0.clone(), seed)?;
    let controlled = run_with(h, &setup, spec, omega, theta0, seed)?;
    Ok((uncontrolled, controlled))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinSummary {
    pub initial_conditions: usize,
    pub sync: f64,
    pub two_cluster: f64,
    pub incoherent: f64,
    /// Mean larger-cluster fraction over two-cluster outcomes.
    pub mean_larger_fraction: Option<f64>,
}

/// Relative basin sizes from `n_ic` seeded initial conditions.
pub fn basin_analysis(h: &Hypergraph, setup: &RunSetup, n_ic: usize, base_seed: u64) -> Result<BasinSummary> {
    if n_ic == 0 {
        return Err(Error::Parameter("need at least one initial condition".into()));
    }
    let classes: Vec<StateClass> = (0..n_ic)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(base_seed, 0, i as u64);
            let rec = run_once(h, setup, &ControlSpec::none(), seed)?;
            Ok(rec.classification.expect("run_once classifies"))
        })
        .collect::<Result<_>>()?;
    let total = n_ic as f64;
    let count = |name: &str| classes.iter().filter(|c| c.name() == name).count() as f64 / total;
    let larger: Vec<f64> = classes
        .iter()
        .filter_map(|c| match c {
            StateClass::TwoCluster { larger_fraction } => Some(*larger_fraction),
            _ => None,
        })
        .collect();
    Ok(BasinSummary {
        initial_conditions: n_ic,
        sync: count("sync"),
        two_cluster: count("two_cluster"),
        incoherent: count("incoherent"),
        mean_larger_fraction: stats::mean(&larger),
    })
}

/// Runs whose cost exceeds this multiple of the median are flagged.
pub const OUTLIER_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CostSummary {
    pub mode: ControlMode,
    pub values: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Indices into `values` above `OUTLIER_FACTOR` times the median.
    pub outliers: Vec<usize>,
}

impl CostSummary {
    pub fn from_values(mode: ControlMode, values: Vec<f64>) -> Result<Self> {
        let q = |p| stats::quantile(&values, p).ok_or_else(|| Error::EmptyWindow("no cost values".into()));
        let (q1, median, q3) = (q(0.25)?, q(0.5)?, q(0.75)?);
        let outliers = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > OUTLIER_FACTOR * median)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            mode,
            values,
            median,
            q1,
            q3,
            outliers,
        })
    }
}

/// Control cost of every mode in `modes` with all nodes pinned, over `seeds`
/// paired draws.
pub fn cost_comparison(
    h: &Hypergraph,
    setup: &RunSetup,
    modes: &[ControlMode],
    seeds: usize,
    base_seed: u64,
) -> Result<Vec<CostSummary>> {
    if seeds == 0 {
        return Err(Error::Parameter("need at least one seed".into()));
    }
    let n = h.n();
    let mut out = Vec::new();
    for &mode in modes {
        if mode == ControlMode::None {
            return Err(Error::Parameter("cost of the uncontrolled system is undefined".into()));
        }
        let spec = ControlSpec::all(mode, n);
        let values: Vec<f64> = (0..seeds)
            .into_par_iter()
            .map(|r| {
                let seed = derive_seed(base_seed, 0, r as u64);
                let rec = run_once(h, setup, &spec, seed)?;
                Ok(rec.cost.expect("all nodes pinned"))
            })
            .collect::<Result<_>>()?;
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite control cost {bad}")));
        }
        out.push(CostSummary::from_values(mode, values)?);
    }
    Ok(out)
}
