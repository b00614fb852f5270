use std::path::{Path, PathBuf};

use hokm_core::experiments::{self, linspace};
use hokm_core::validation::{self, CheckReport};
use hokm_core::{ControlMode, ControlSpec, Couplings, SweepGrid};

use crate::config::{Command, Config};
use crate::error::CliError;
use crate::output::{num, opt, Table};

pub fn run(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    match cfg.command() {
        Command::Sweep => sweep(cfg, out),
        Command::Pin => pin(cfg, out),
        Command::Switch => switch(cfg, out),
        Command::Basin => basin(cfg, out),
        Command::Cost => cost(cfg, out),
        Command::Validate => validate(cfg),
        Command::Gen => gen(cfg, out),
    }
}

fn sweep(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let h = cfg.hypergraph()?;
    let n = h.n();
    let setup = cfg.setup(n)?;
    let mode = cfg.mode("mode")?;
    let spec = match (mode, cfg.str("pinned")) {
        (ControlMode::None, _) => ControlSpec::none(),
        (_, "all") => ControlSpec::all(mode, n),
        (_, m) => {
            let m: usize = m
                .parse()
                .map_err(|_| CliError::Config(format!("pinned: expected all or a count, got {m:?}")))?;
            ControlSpec::new(mode, experiments::pinned_nodes(n, m, cfg.seed)?, n)?
        }
    };
    let grid = SweepGrid::new(
        linspace(cfg.f64("k1_min")?, cfg.f64("k1_max")?, cfg.usize("k1_steps")?)?,
        linspace(cfg.f64("k2_min")?, cfg.f64("k2_max")?, cfg.usize("k2_steps")?)?,
        cfg.usize("replicates")?,
        cfg.seed,
    )?;
    let cells = experiments::sweep_r_hat(&h, &grid, &spec, &setup);
    let failed: usize = cells.iter().map(|c| c.failures.len()).sum();
    if cells.iter().all(|c| c.r_hat_mean.is_none()) {
        if let Some(e) = cells.iter().find_map(|c| c.failures.first()) {
            return Err(e.clone().into());
        }
    }
    if failed > 0 {
        log::warn!("{failed} replicate(s) failed and were left out of the means");
    }
    let mut t = Table::create(
        out,
        "rhat_map.csv",
        &cfg.header(),
        &["k1", "k2", "mode", "r_hat_mean", "r_hat_std", "replicates"],
    )?;
    for cell in &cells {
        t.row([
            num(cell.k1),
            num(cell.k2),
            mode.name().to_string(),
            opt(cell.r_hat_mean),
            opt(cell.r_hat_std),
            cell.replicates.to_string(),
        ])?;
    }
    Ok(vec![t.finish()?])
}

fn pin(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let h = cfg.hypergraph()?;
    let setup = cfg.setup(h.n())?;
    let mode = cfg.mode("mode")?;
    let rows = experiments::pinning_sweep(
        &h,
        &cfg.m_values(h.n())?,
        &cfg.coupling_list("couplings")?,
        mode,
        cfg.usize("replicates")?,
        cfg.seed,
        &setup,
    )?;
    let mut t = Table::create(
        out,
        "pin_sweep.csv",
        &cfg.header(),
        &["m", "k1", "k2", "mode", "r_hat_mean"],
    )?;
    for r in &rows {
        t.row([
            r.m.to_string(),
            num(r.k1),
            num(r.k2),
            mode.name().to_string(),
            opt(r.r_hat_mean),
        ])?;
    }
    Ok(vec![t.finish()?])
}

fn switch(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let h = cfg.hypergraph()?;
    let setup = cfg.setup(h.n())?;
    let mode = cfg.mode("mode")?;
    let spec = match mode {
        ControlMode::None => ControlSpec::none(),
        m => ControlSpec::all(m, h.n()),
    };
    let after = Couplings::new(cfg.f64("k1_after")?, cfg.f64("k2_after")?);
    let (u, c) = experiments::switch_experiment(&h, &setup, after, cfg.f64("t_switch")?, &spec, cfg.seed)?;
    let mut t = Table::create(
        out,
        "switch.csv",
        &cfg.header(),
        &["t", "R_unctrl", "R_ctrl", "intensity"],
    )?;
    for (k, ((time, ru), (_, rc))) in u.r_series.iter().zip(&c.r_series).enumerate() {
        let intensity = c.intensity_series.get(k).map(|p| p.1).unwrap_or(0.0);
        t.row([num(*time), num(*ru), num(*rc), num(intensity)])?;
    }
    eprintln!("r_hat uncontrolled {:.4}, controlled {:.4}", u.r_hat, c.r_hat);
    Ok(vec![t.finish()?])
}

fn basin(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let h = cfg.hypergraph()?;
    let setup = cfg.setup(h.n())?;
    let b = experiments::basin_analysis(&h, &setup, cfg.usize("n_ic")?, cfg.seed)?;
    let mut t = Table::create(
        out,
        "basins.csv",
        &cfg.header(),
        &["state", "fraction", "mean_larger_fraction"],
    )?;
    t.row(["sync".to_string(), num(b.sync), String::new()])?;
    t.row([
        "two_cluster".to_string(),
        num(b.two_cluster),
        opt(b.mean_larger_fraction),
    ])?;
    t.row(["incoherent".to_string(), num(b.incoherent), String::new()])?;
    Ok(vec![t.finish()?])
}

fn cost(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let h = cfg.hypergraph()?;
    let setup = cfg.setup(h.n())?;
    let summaries = experiments::cost_comparison(&h, &setup, &cfg.modes("modes")?, cfg.usize("seeds")?, cfg.seed)?;
    let mut t = Table::create(
        out,
        "cost.csv",
        &cfg.header(),
        &["mode", "median", "q1", "q3", "outliers"],
    )?;
    for s in &summaries {
        t.row([
            s.mode.name().to_string(),
            num(s.median),
            num(s.q1),
            num(s.q3),
            s.outliers.len().to_string(),
        ])?;
    }
    Ok(vec![t.finish()?])
}

fn validate(cfg: &Config) -> Result<Vec<PathBuf>, CliError> {
    // the configured structure must load before any check runs
    let h = cfg.hypergraph()?;
    println!(
        "structure: {} nodes, {} edges, {} triangles",
        h.n(),
        h.edges().len(),
        h.triangles().len()
    );
    let seed = cfg.seed;
    let reports: Vec<CheckReport> = vec![
        validation::control_oracle_check(cfg.usize("instances")?, seed)?,
        validation::embedding_check(10, 10.0, 1e-3, cfg.sign()?, seed)?,
        validation::torus_invariance_check(10, &[0.3, 0.5, 1.0], 10.0, 1e-2, seed)?,
        validation::rk4_order_check()?,
        validation::spectrum_check(seed)?,
    ];
    for r in &reports {
        println!(
            "[{}] {:<22} residual {:.3e} (tolerance {:.1e}) {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.residual,
            r.tolerance,
            r.detail
        );
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::ValidationFailed(failed));
    }
    Ok(Vec::new())
}

fn gen(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let h = cfg.hypergraph()?;
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    let path = out.join("hypergraph.txt");
    let mut text: String = cfg.header().iter().map(|l| format!("# {l}\n")).collect();
    text.push_str(&h.to_text());
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    eprintln!(
        "mean degree {:.3}, mean hyperdegree {:.3}",
        h.mean_degree(),
        h.mean_hyperdegree()
    );
    Ok(vec![path])
}
