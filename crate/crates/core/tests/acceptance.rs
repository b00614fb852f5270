//! End-to-end acceptance run. Prints one line per criterion and exits with a
//! failure status if any criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::time::{Duration, Instant};

use hokm_core::control::control_full;
use hokm_core::experiments::{
    basin_analysis, cost_comparison, pinning_sweep, run_once, sweep_r_hat, switch_experiment, SweepCell,
};
use hokm_core::model::{d3_rhs, multiorder_laplacian, sync_jacobian_spectrum};
use hokm_core::validation::{
    admissible_frequencies, control_oracle_check, embedding_check, rk4_errors, torus_invariance_check,
};
use hokm_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 50;
const SEED: u64 = 0;

struct Outcome {
    passed: bool,
    summary: String,
}

fn outcome(passed: bool, summary: String) -> Outcome {
    Outcome { passed, summary }
}

fn report(id: usize, name: &str, elapsed: Duration, result: Result<Outcome>) -> bool {
    let (passed, summary) = match result {
        Ok(o) => (o.passed, o.summary),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "[{}] criterion {id:>2} {name}: {summary} ({:.1} s)",
        if passed { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    passed
}

fn grid() -> SweepGrid {
    SweepGrid::square(0.0, 2.0, 11, 5, SEED).expect("static grid")
}

fn cell_means(cells: &[SweepCell]) -> Result<Vec<f64>> {
    cells
        .iter()
        .map(|c| {
            c.r_hat_mean
                .ok_or_else(|| Error::Numerical(format!("cell ({}, {}) failed: {:?}", c.k1, c.k2, c.failures)))
        })
        .collect()
}

fn fraction_above(values: &[f64], level: f64) -> f64 {
    values.iter().filter(|v| **v > level).count() as f64 / values.len() as f64
}

fn c1_embedding() -> Result<Outcome> {
    let start = Instant::now();
    let r = embedding_check(10, 10.0, 1e-3, SecondTriadicSign::Plus, SEED)?;
    let secs = start.elapsed().as_secs_f64();
    Ok(outcome(
        r.passed && secs < 10.0,
        format!("max |Δθ| = {:.2e} (≤ 1e-6), runtime {secs:.2} s (< 10 s)", r.residual),
    ))
}

fn c2_torus() -> Result<Outcome> {
    let r = torus_invariance_check(10, &[0.3, 0.5, 1.0], 10.0, 1e-2, SEED)?;
    Ok(outcome(r.passed, format!("max |I - c| = {:.2e} (≤ 1e-9)", r.residual)))
}

fn c3_oracle() -> Result<Outcome> {
    let start = Instant::now();
    let r = control_oracle_check(20, SEED)?;
    let secs = start.elapsed().as_secs_f64();
    Ok(outcome(
        r.passed && secs < 30.0,
        format!(
            "max relative error {:.2e} (≤ 1e-6) over 20 instances, runtime {secs:.2} s",
            r.residual
        ),
    ))
}

/// Couplings at which `R̂` first exceeds 0.8 along an axis.
fn onset(axis: &[f64], values: &[f64]) -> Option<f64> {
    axis.iter().zip(values).find(|(_, v)| **v > 0.8).map(|(k, _)| *k)
}

fn c4_uncontrolled(h: &Hypergraph) -> Result<Outcome> {
    let g = grid();
    let cells = sweep_r_hat(
        h,
        &g,
        &ControlSpec::none(),
        &RunSetup::standard(Couplings::new(0.0, 0.0)),
    );
    let means = cell_means(&cells)?;
    let frac = fraction_above(&means, 0.8);
    let m = g.k2_values.len();
    let k1_axis: Vec<f64> = (0..g.k1_values.len()).map(|i| means[i * m]).collect();
    let k2_axis: Vec<f64> = means[..m].to_vec();
    let on1 = onset(&g.k1_values, &k1_axis);
    let on2 = onset(&g.k2_values, &k2_axis);
    let ok = (frac - 0.972).abs() <= 0.05
        && on1.is_some_and(|k| (0.6..=0.85).contains(&k))
        && on2.is_some_and(|k| (0.3..=0.45).contains(&k));
    Ok(outcome(
        ok,
        format!("fraction R̂>0.8 = {frac:.3} (0.972 ± 0.05), K1 onset {on1:?} (in [0.6, 0.85]), K2 onset {on2:?} (in [0.3, 0.45])"),
    ))
}

fn c5_full(h: &Hypergraph) -> Result<Outcome> {
    let cells = sweep_r_hat(
        h,
        &grid(),
        &ControlSpec::all(ControlMode::Full, N),
        &RunSetup::standard(Couplings::new(0.0, 0.0)),
    );
    let means = cell_means(&cells)?;
    let mean = stats::mean(&means).unwrap_or(f64::NAN);
    let max = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(outcome(
        (mean - 0.197).abs() <= 0.06 && max <= 0.35,
        format!("grid mean R̂ = {mean:.3} (0.197 ± 0.06), max R̂ = {max:.3} (≤ 0.35)"),
    ))
}

fn c6_pairwise(h: &Hypergraph) -> Result<Outcome> {
    let g = grid();
    let spec = ControlSpec::all(ControlMode::PairwiseOnly, N);
    let setup = RunSetup::standard(Couplings::new(0.0, 0.0));
    let cells = sweep_r_hat(h, &g, &spec, &setup);
    let means = cell_means(&cells)?;
    let frac = fraction_above(&means, 0.8);
    let region: Vec<f64> = cells
        .iter()
        .zip(&means)
        .filter(|(c, _)| c.k1 < 0.5 && c.k2 > 0.4)
        .map(|(_, v)| *v)
        .collect();
    let region_min = region.iter().cloned().fold(f64::INFINITY, f64::min);
    let point = |k1: f64, k2: f64| -> Result<f64> {
        let one = SweepGrid::new(vec![k1], vec![k2], 5, SEED)?;
        cell_means(&sweep_r_hat(h, &one, &spec, &setup)).map(|v| v[0])
    };
    let weak = point(0.5, 1.0)?;
    let strong = point(1.0, 1.0)?;
    let ok = region_min > 0.8 && (frac - 0.195).abs() <= 0.07 && weak > 0.6 && strong < 0.3;
    Ok(outcome(
        ok,
        format!(
            "min R̂ over K1<0.5, K2>0.4 = {region_min:.3} (> 0.8, {} cells), fraction R̂>0.8 = {frac:.3} (0.195 ± 0.07), R̂(0.5,1) = {weak:.3} (> 0.6), R̂(1,1) = {strong:.3} (< 0.3)",
            region.len()
        ),
    ))
}

fn c7_switch(h: &Hypergraph) -> Result<Outcome> {
    let mut setup = RunSetup::standard(Couplings::new(0.05, 0.05));
    setup.phases = Draw::Uniform { lo: 0.0, hi: TAU };
    let after = Couplings::new(0.05, 1.0);
    let spec = ControlSpec::all(ControlMode::Full, N);
    // Incoherent starts only occasionally synchronise within the window once
    // K2 is raised. Like the figure being reproduced, use the first seed whose
    // uncontrolled run synchronises; the choice never looks at the controlled run.
    let mut scanned = 0;
    let (seed, unc, ctrl) = loop {
        if scanned >= 200 {
            return Ok(outcome(
                false,
                "no synchronising uncontrolled run among seeds 0..200".into(),
            ));
        }
        let seed = scanned as u64;
        scanned += 1;
        let mut probe = setup.clone();
        probe.plan = probe.plan.clone().with_switch(15.0, after)?;
        let u = run_once(h, &probe, &ControlSpec::none(), seed)?;
        if u.r_hat > 0.8 {
            let (u, c) = switch_experiment(h, &setup, after, 15.0, &spec, seed)?;
            break (seed, u, c);
        }
    };
    let mean_where = |f: &dyn Fn(f64) -> bool| {
        let v: Vec<f64> = ctrl.intensity_series.iter().filter(|p| f(p.0)).map(|p| p.1).collect();
        stats::mean(&v).unwrap_or(f64::NAN)
    };
    let before = mean_where(&|t| t < 15.0);
    let later = mean_where(&|t| t > 20.0);
    let ratio = before / later;
    let ok = unc.r_hat > 0.8 && ctrl.r_hat < 0.4 && ratio <= 0.1;
    Ok(outcome(
        ok,
        format!(
            "seed {seed} (first of {scanned} scanned to synchronise): R̂ uncontrolled {:.3} (> 0.8), controlled {:.3} (< 0.4), mean I before 15 / after 20 = {before:.4} / {later:.4} = {ratio:.3} (≤ 0.1)",
            unc.r_hat, ctrl.r_hat
        ),
    ))
}

fn c8_pinning(h: &Hypergraph) -> Result<Outcome> {
    let ms: Vec<usize> = (0..=5).map(|k| k * N / 5).collect();
    let rows = pinning_sweep(
        h,
        &ms,
        &[Couplings::new(1.0, 1.0)],
        ControlMode::Full,
        50,
        SEED,
        &RunSetup::standard(Couplings::new(1.0, 1.0)),
    )?;
    let r: Vec<f64> = rows.iter().map(|row| row.r_hat_mean.unwrap_or(f64::NAN)).collect();
    let ok = (r[1] - r[0]).abs() <= 0.05 && (r[4] - r[5]).abs() <= 0.05 && r[0] - r[5] >= 0.4;
    let curve: Vec<String> = ms.iter().zip(&r).map(|(m, v)| format!("{m}:{v:.3}")).collect();
    Ok(outcome(
        ok,
        format!(
            "R̂(M) = [{}]; |R̂(N/5) - R̂(0)| = {:.3}, |R̂(4N/5) - R̂(N)| = {:.3} (≤ 0.05), drop {:.3} (≥ 0.4)",
            curve.join(", "),
            (r[1] - r[0]).abs(),
            (r[4] - r[5]).abs(),
            r[0] - r[5]
        ),
    ))
}

fn basin_setup(k2: f64) -> Result<RunSetup> {
    let mut s = RunSetup::standard(Couplings::new(1.0, k2));
    s.omega = Draw::Fixed(vec![0.0; N]);
    s.phases = Draw::Uniform { lo: 0.0, hi: TAU };
    s.plan = IntegrationPlan::new(0.0, 100.0, 0.1)?;
    s.window = (90.0, 100.0);
    Ok(s)
}

fn c9_basins(h: &Hypergraph) -> Result<Outcome> {
    let weak = basin_analysis(h, &basin_setup(0.2)?, 100, SEED)?;
    let strong = basin_analysis(h, &basin_setup(2.0)?, 100, SEED)?;
    let larger = strong.mean_larger_fraction.unwrap_or(f64::NAN);
    let ok = weak.sync >= 0.95 && strong.two_cluster >= 0.5 && larger >= 0.9;
    Ok(outcome(
        ok,
        format!(
            "K2=0.2: sync {:.2} (≥ 0.95); K2=2: two-cluster {:.2} (≥ 0.5), mean larger fraction {larger:.3} (≥ 0.9)",
            weak.sync, strong.two_cluster
        ),
    ))
}

fn c10_cost(h: &Hypergraph) -> Result<Outcome> {
    let s = cost_comparison(
        h,
        &RunSetup::standard(Couplings::new(1.0, 1.0)),
        &[ControlMode::Full, ControlMode::PairwiseOnly],
        20,
        SEED,
    )?;
    let (full, pair) = (&s[0], &s[1]);
    let finite = full.values.iter().chain(&pair.values).all(|v| v.is_finite());
    let ratio = full.median / pair.median;
    Ok(outcome(
        finite && full.median > pair.median && ratio > 10.0,
        format!(
            "full median {:.3e} [q1 {:.3e}, q3 {:.3e}, {} outliers], pairwise median {:.3e} [q1 {:.3e}, q3 {:.3e}, {} outliers], ratio {ratio:.1} (> 10)",
            full.median,
            full.q1,
            full.q3,
            full.outliers.len(),
            pair.median,
            pair.q1,
            pair.q3,
            pair.outliers.len()
        ),
    ))
}

fn brute_force_d3(p: &ModelParams, th: &[f64], variant: QuarticVariant) -> Vec<f64> {
    let n = th.len();
    let scale = p.k3 / (n as f64).powi(3);
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let idx = [i, j, k, l];
                        if (0..4).any(|a| (a + 1..4).any(|b| idx[a] == idx[b])) {
                            continue;
                        }
                        acc += match variant {
                            QuarticVariant::Type1 => {
                                1.5 * ((th[j] + th[k] + th[l] - 3.0 * th[i]).sin()
                                    + (3.0 * th[j] - th[k] - th[l] - th[i]).sin())
                            }
                            QuarticVariant::Type2 => 2.0 * (th[k] + th[l] - th[j] - th[i]).sin(),
                        };
                    }
                }
            }
            p.omega[i] + scale * acc
        })
        .collect()
}

fn c11_properties() -> Result<Outcome> {
    let e = rk4_errors()?;
    let ratios = [e[0] / e[1], e[1] / e[2]];
    let rk4_ok = ratios.iter().all(|r| (14.0..=18.0).contains(r));

    let h = Hypergraph::random_simplicial_complex(30, 8.0, 4.0, SEED)?;
    let p = ModelParams::new(1.0, 1.0, vec![0.0; 30])?;
    let l = multiorder_laplacian(&h, &p);
    let row = (0..30).map(|i| l.row(i).sum().abs()).fold(0.0, f64::max);
    let spec = sync_jacobian_spectrum(&h, &p)?;
    let scale = spec.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let m = spec.len();
    let asym = (0..m).map(|i| (spec[i] + spec[m - 1 - i]).abs()).fold(0.0, f64::max);
    let zeros = spec.iter().filter(|v| v.abs() <= 1e-9 * scale).count();
    let spec_ok = row <= 1e-12 && asym <= 1e-9 * scale && zeros >= 2;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let h6 = Hypergraph::all_to_all(6)?;
    let mut shift_err: f64 = 0.0;
    for _ in 0..10 {
        let omega = admissible_frequencies(&h6, 0.0, 1.0, &mut rng);
        let th: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..TAU)).collect();
        let w = rng.random_range(-3.0..3.0);
        let spec6 = ControlSpec::all(ControlMode::Full, 6);
        let a = control_full(&h6, &ModelParams::new(1.0, 1.0, omega.clone())?, &th, &spec6)?;
        let b = control_full(
            &h6,
            &ModelParams::new(1.0, 1.0, omega.iter().map(|o| o + w).collect())?,
            &th,
            &spec6,
        )?;
        let s = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        shift_err = shift_err.max(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / s);
    }
    let shift_ok = shift_err <= 1e-9;

    let th = [0.0, FRAC_PI_4, FRAC_PI_2, PI];
    let p4 = ModelParams::new(0.0, 0.0, vec![0.0; 4])?.with_k3(1.0)?;
    let mut d3_err: f64 = 0.0;
    for v in [QuarticVariant::Type1, QuarticVariant::Type2] {
        let a = d3_rhs(&p4, &th, v)?;
        let b = brute_force_d3(&p4, &th, v);
        d3_err = d3_err.max(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    }
    let d3_ok = d3_err <= 1e-12;
    Ok(outcome(
        rk4_ok && spec_ok && shift_ok && d3_ok,
        format!(
            "RK4 ratios {:.2}, {:.2}; row sum {row:.1e}, spectrum asymmetry {asym:.1e}, zeros {zeros}; control shift error {shift_err:.1e}; quartic oracle error {d3_err:.1e}",
            ratios[0], ratios[1]
        ),
    ))
}

fn main() {
    let h = Hypergraph::all_to_all(N).expect("complete hypergraph");
    let criteria: Vec<(&str, Box<dyn Fn() -> Result<Outcome>>)> = vec![
        ("embedding equivalence", Box::new(c1_embedding)),
        ("torus invariance", Box::new(c2_torus)),
        ("control oracle", Box::new(c3_oracle)),
        ("uncontrolled synchronization map", Box::new(|| c4_uncontrolled(&h))),
        ("full control efficacy", Box::new(|| c5_full(&h))),
        ("pairwise control failure region", Box::new(|| c6_pairwise(&h))),
        ("switch experiment", Box::new(|| c7_switch(&h))),
        ("pinning plateau", Box::new(|| c8_pinning(&h))),
        ("basins", Box::new(|| c9_basins(&h))),
        ("cost ordering", Box::new(|| c10_cost(&h))),
        ("property suite", Box::new(c11_properties)),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        if !report(id, name, start.elapsed(), result) {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
