//! Subcommand bodies. Each returns the full output text; nothing is written
//! until a command has finished.

use std::path::Path;

use rayon::prelude::*;
use scnsim_core::active_density::{self, fit_q_star, lower_bound, upper_bound};
use scnsim_core::energy::{calibrate, calibration_point, efficiency_from_ase, EeAnchors};
use scnsim_core::simulator::{self, SimConfig};
use scnsim_core::units::{db_to_linear, linear_to_db, mw_to_dbm};
use scnsim_core::{
    build_case1, AssociationDensity, CoverageEvaluator, NetworkParams, PathLossModel, SimStats, UeDensity,
};
use sha2::{Digest, Sha256};

use crate::config::{Scenario, ScenarioConfig};
use crate::error::CliError;
use crate::table::{cell, Table};

/// Output text plus the rows that failed.
#[derive(Debug, Default)]
pub struct Output {
    pub text: String,
    pub failures: Vec<String>,
}

impl Output {
    fn from_table(table: Table, failures: Vec<String>) -> Self {
        Output {
            text: table.finish(),
            failures,
        }
    }
}

fn row_failure(lambda: f64, e: impl std::fmt::Display) -> String {
    format!("lambda = {lambda}: {e}")
}

fn params(sc: &Scenario, lambda: f64) -> scnsim_core::Result<NetworkParams> {
    Ok(NetworkParams {
        lambda,
        rho: sc.rho,
        tx_power: sc.tx_power(lambda)?,
        noise_power: sc.noise_power,
        bandwidth: sc.bandwidth,
    })
}

fn sim_config(sc: &Scenario, lambda: f64, gamma_grid: Vec<f64>) -> scnsim_core::Result<SimConfig> {
    let s = &sc.config.sim;
    let cfg = SimConfig {
        model: sc.model.clone(),
        lambda,
        rho: sc.rho,
        region_side: sc.region_side(lambda)?,
        gamma_grid,
        gamma0: sc.gamma0,
        tx_power: sc.tx_power(lambda)?,
        noise_power: sc.noise_power,
        fading: s.fading,
        shadowing: s.shadowing,
        trials: s.trials,
        seed: s.seed,
        all_active: sc.rho.is_infinite(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn simulate_at(sc: &Scenario, lambda: f64, gamma_grid: Vec<f64>) -> scnsim_core::Result<SimStats> {
    simulator::run(&sim_config(sc, lambda, gamma_grid)?)
}

/// Simulated active densities over the grid, `None` where a run failed.
fn simulated_active(sc: &Scenario, failures: &mut Vec<String>) -> Vec<Option<simulator::Estimate>> {
    sc.lambdas
        .iter()
        .map(|&l| match simulate_at(sc, l, vec![sc.gamma]) {
            Ok(s) => Some(s.active_density),
            Err(e) => {
                failures.push(row_failure(l, e));
                None
            }
        })
        .collect()
}

/// Exponent from the scenario, fitting it against `sim` when asked to.
fn q_star_for(
    sc: &Scenario,
    rho: f64,
    sim: Option<&[Option<simulator::Estimate>]>,
) -> Result<(f64, Option<active_density::QStarFit>), CliError> {
    if let Some(q) = sc.fixed_q_star(rho)? {
        return Ok((q, None));
    }
    let owned;
    let sim = match sim {
        Some(s) => s,
        None => {
            let mut failures = Vec::new();
            owned = simulated_active(sc, &mut failures);
            if let Some(f) = failures.first() {
                return Err(CliError::Numeric(format!("simulation for the q_star fit failed: {f}")));
            }
            &owned
        }
    };
    let table: Vec<(f64, f64)> = sc
        .lambdas
        .iter()
        .zip(sim)
        .filter_map(|(&l, e)| e.map(|e| (l, e.mean)))
        .collect();
    let fit = fit_q_star(&table, rho, &sc.model)?;
    Ok((fit.q_star, Some(fit)))
}

fn lambda_tilde(sc: &Scenario, lambda: f64, q: Option<f64>) -> scnsim_core::Result<f64> {
    match (sc.rho, q) {
        (UeDensity::Finite(rho), Some(q)) => active_density::approx(lambda, rho, q),
        _ => Ok(lambda),
    }
}

fn sweep_q_star(sc: &Scenario) -> Result<Option<f64>, CliError> {
    match sc.rho {
        UeDensity::Infinite => Ok(None),
        UeDensity::Finite(rho) => Ok(Some(q_star_for(sc, rho, None)?.0)),
    }
}

fn header_lines(sc: &Scenario, q: Option<f64>) -> Vec<String> {
    let mut lines = vec![format!("model = {}", model_name(&sc.config))];
    if let Some(q) = q {
        lines.push(format!("q_star = {q:.4}"));
    }
    lines
}

fn model_name(cfg: &ScenarioConfig) -> &'static str {
    match cfg.model {
        crate::config::ModelSpec::Case1 { .. } => "case1",
        crate::config::ModelSpec::Case2 { .. } => "case2",
        crate::config::ModelSpec::SingleSlope { .. } => "single_slope",
    }
}

/// Shared shape of the coverage and ASE sweeps.
fn metric_sweep(
    sc: &Scenario,
    command: &str,
    columns: &[&str],
    threshold_db: f64,
    analytic: impl Fn(&CoverageEvaluator) -> scnsim_core::Result<f64> + Sync,
    simulated: impl Fn(&SimStats) -> simulator::Estimate,
) -> Result<Output, CliError> {
    let q = sweep_q_star(sc)?;
    let rows: Vec<(Option<f64>, Result<f64, String>)> = sc
        .lambdas
        .par_iter()
        .map(|&l| {
            let lt = lambda_tilde(sc, l, q).ok();
            let value = lt
                .ok_or_else(|| "active density failed".to_string())
                .and_then(|lt| {
                    let p = params(sc, l).map_err(|e| e.to_string())?;
                    let eval = CoverageEvaluator::new(&sc.model, &p, lt).map_err(|e| e.to_string())?;
                    analytic(&eval).map_err(|e| e.to_string())
                });
            (lt, value)
        })
        .collect();
    let mut failures = Vec::new();
    let mut table = Table::new(command, &header_lines(sc, q), columns);
    for (&l, (lt, value)) in sc.lambdas.iter().zip(rows) {
        let analytic = value.map_err(|e| failures.push(row_failure(l, e))).ok();
        let sim = if sc.config.sim.enabled {
            match simulate_at(sc, l, vec![sc.gamma]) {
                Ok(s) => Some(simulated(&s)),
                Err(e) => {
                    failures.push(row_failure(l, e));
                    None
                }
            }
        } else {
            None
        };
        table.row(&[
            cell(l),
            rho_cell(sc.rho),
            cell(threshold_db),
            cell(lt),
            cell(analytic),
            cell(sim.map(|s| s.mean)),
            cell(sim.map(|s| s.ci95)),
        ]);
    }
    Ok(Output::from_table(table, failures))
}

fn rho_cell(rho: UeDensity) -> String {
    match rho {
        UeDensity::Finite(r) => cell(r),
        UeDensity::Infinite => "inf".into(),
    }
}

pub const COVERAGE_COLUMNS: [&str; 7] = [
    "lambda_bs_per_km2",
    "rho_ue_per_km2",
    "gamma_db",
    "lambda_tilde",
    "p_cov_analytic",
    "p_cov_sim",
    "p_cov_sim_ci95",
];

pub const ASE_COLUMNS: [&str; 7] = [
    "lambda_bs_per_km2",
    "rho_ue_per_km2",
    "gamma0_db",
    "lambda_tilde",
    "ase_analytic",
    "ase_sim",
    "ase_sim_ci95",
];

pub const EE_COLUMNS: [&str; 10] = [
    "lambda_bs_per_km2",
    "rho_ue_per_km2",
    "gamma0_db",
    "lambda_tilde",
    "tx_power_dbm",
    "ase_analytic",
    "mode",
    "p_act_tot_w",
    "p_imc_tot_w",
    "ee_mbits_per_j",
];

pub const ACTIVE_DENSITY_COLUMNS: [&str; 10] = [
    "lambda_bs_per_km2",
    "rho_ue_per_km2",
    "lb",
    "ub",
    "approx",
    "sim",
    "sim_ci95",
    "lb_err",
    "ub_err",
    "approx_err",
];

pub const SIMULATE_COLUMNS: [&str; 12] = [
    "lambda_bs_per_km2",
    "rho_ue_per_km2",
    "region_side_km",
    "trials_used",
    "trials_discarded",
    "lambda_tilde_sim",
    "lambda_tilde_sim_ci95",
    "ase_sim",
    "ase_sim_ci95",
    "gamma_db",
    "p_cov_sim",
    "p_cov_sim_ci95",
];

pub fn coverage_sweep(sc: &Scenario) -> Result<Output, CliError> {
    let gamma = sc.gamma;
    metric_sweep(
        sc,
        "coverage-sweep",
        &COVERAGE_COLUMNS,
        sc.config.gamma_db,
        |e| e.coverage(gamma),
        |s| s.coverage[0],
    )
}

pub fn ase_sweep(sc: &Scenario) -> Result<Output, CliError> {
    let gamma0 = sc.gamma0;
    metric_sweep(
        sc,
        "ase-sweep",
        &ASE_COLUMNS,
        linear_to_db(gamma0),
        |e| e.ase(gamma0),
        |s| s.ase,
    )
}

struct EeRow {
    lambda_tilde: f64,
    tx_power: f64,
    /// Per mode: ASE, active W, idle W, EE bits/J.
    modes: Vec<(f64, f64, f64, f64)>,
}

pub fn ee_sweep(sc: &Scenario) -> Result<Output, CliError> {
    let q = sweep_q_star(sc)?;
    let modes = &sc.config.imc;
    let rows: Vec<scnsim_core::Result<EeRow>> = sc
        .lambdas
        .par_iter()
        .map(|&l| {
            let p = params(sc, l)?;
            let lt = lambda_tilde(sc, l, q)?;
            let ase_muted = CoverageEvaluator::new(&sc.model, &p, lt)?.ase(sc.gamma0)?;
            let needs_full = lt != l && modes.contains(&scnsim_core::ImcMode::AllActive);
            let ase_full = if needs_full {
                CoverageEvaluator::new(&sc.model, &p, l)?.ase(sc.gamma0)?
            } else {
                ase_muted
            };
            let modes = modes
                .iter()
                .map(|&m| {
                    let ase = if m == scnsim_core::ImcMode::AllActive { ase_full } else { ase_muted };
                    let e = efficiency_from_ase(&sc.profile, m, &p, lt, ase)?;
                    Ok((e.ase, e.active_w, e.idle_w, e.ee))
                })
                .collect::<scnsim_core::Result<_>>()?;
            Ok(EeRow {
                lambda_tilde: lt,
                tx_power: p.tx_power,
                modes,
            })
        })
        .collect();
    let mut failures = Vec::new();
    let mut header = header_lines(sc, q);
    header.push(format!("profile eta0_db = {}", sc.profile.eta0_db));
    let mut table = Table::new("ee-sweep", &header, &EE_COLUMNS);
    let g0_db = linear_to_db(sc.gamma0);
    for (&l, row) in sc.lambdas.iter().zip(rows) {
        match row {
            Ok(r) => {
                for (&m, &(ase, act, idle, ee)) in modes.iter().zip(&r.modes) {
                    let lt = if m == scnsim_core::ImcMode::AllActive { l } else { r.lambda_tilde };
                    table.row(&[
                        cell(l),
                        rho_cell(sc.rho),
                        cell(g0_db),
                        cell(lt),
                        cell(mw_to_dbm(r.tx_power)),
                        cell(ase),
                        m.name().into(),
                        cell(act),
                        cell(idle),
                        cell(ee / 1e6),
                    ]);
                }
            }
            Err(e) => {
                failures.push(row_failure(l, &e));
                for &m in modes {
                    let mut cells = vec![cell(l), rho_cell(sc.rho), cell(g0_db)];
                    cells.extend([String::new(), String::new(), String::new(), m.name().into()]);
                    cells.extend([String::new(), String::new(), String::new()]);
                    table.row(&cells);
                }
            }
        }
    }
    Ok(Output::from_table(table, failures))
}

pub fn active_density(sc: &Scenario) -> Result<Output, CliError> {
    let rho = sc.finite_rho("active-density")?;
    let mut failures = Vec::new();
    let sim = (sc.config.sim.enabled || sc.fixed_q_star(rho)?.is_none()).then(|| simulated_active(sc, &mut failures));
    let (q, _) = q_star_for(sc, rho, sim.as_deref())?;
    let analytic: Vec<scnsim_core::Result<[f64; 3]>> = sc
        .lambdas
        .par_iter()
        .map(|&l| {
            let ad = AssociationDensity::new(sc.model.clone(), l)?;
            Ok([
                lower_bound(l, rho)?,
                upper_bound(&ad, rho)?,
                active_density::approx(l, rho, q)?,
            ])
        })
        .collect();
    let mut table = Table::new("active-density", &header_lines(sc, Some(q)), &ACTIVE_DENSITY_COLUMNS);
    for (k, (&l, a)) in sc.lambdas.iter().zip(analytic).enumerate() {
        let a = a.map_err(|e| failures.push(row_failure(l, e))).ok();
        let s = sim.as_ref().and_then(|s| s[k]).filter(|_| sc.config.sim.enabled);
        let err = |i: usize| a.zip(s).map(|(a, s)| a[i] - s.mean);
        table.row(&[
            cell(l),
            cell(rho),
            cell(a.map(|a| a[0])),
            cell(a.map(|a| a[1])),
            cell(a.map(|a| a[2])),
            cell(s.map(|s| s.mean)),
            cell(s.map(|s| s.ci95)),
            cell(err(0)),
            cell(err(1)),
            cell(err(2)),
        ]);
    }
    Ok(Output::from_table(table, failures))
}

/// Reads `(λ, λ̃)` pairs from a CSV with a `lambda_bs_per_km2` column and a
/// `sim` or `lambda_tilde_sim` column. Repeated densities keep the first row.
pub fn read_sim_table(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let bad = |m: String| CliError::Usage(format!("{}: {m}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let find = |names: &[&str]| headers.iter().position(|h| names.contains(&h));
    let lc = find(&["lambda_bs_per_km2", "lambda"]).ok_or_else(|| bad("no lambda_bs_per_km2 column".into()))?;
    let sc = find(&["sim", "lambda_tilde_sim"]).ok_or_else(|| bad("no sim or lambda_tilde_sim column".into()))?;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let parse = |c: usize| {
            rec.get(c)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| bad(format!("row {}: column {} is not a number", i + 1, c + 1)))
        };
        let l = parse(lc)?;
        if rec.get(sc).is_some_and(str::is_empty) || out.last().is_some_and(|p| p.0 == l) {
            continue;
        }
        out.push((l, parse(sc)?));
    }
    if out.is_empty() {
        return Err(bad("table has no usable rows".into()));
    }
    Ok(out)
}

pub fn fit_qstar(sc: &Scenario, table_path: Option<&Path>) -> Result<Output, CliError> {
    let rho = sc.finite_rho("fit-qstar")?;
    let (table, source) = match table_path {
        Some(p) => (read_sim_table(p)?, p.display().to_string()),
        None => {
            let mut failures = Vec::new();
            let sim = simulated_active(sc, &mut failures);
            if let Some(f) = failures.first() {
                return Err(CliError::Numeric(format!("simulation failed: {f}")));
            }
            let t = sc.lambdas.iter().zip(sim).map(|(&l, e)| (l, e.map_or(f64::NAN, |e| e.mean))).collect();
            (t, format!("simulation, {} trials, seed {}", sc.config.sim.trials, sc.config.sim.seed))
        }
    };
    let fit = fit_q_star(&table, rho, &sc.model)?;
    let mut text = String::from("# scnsim fit-qstar\n");
    text.push_str(&format!("# source = {source}\n"));
    text.push_str(&format!("rho_ue_per_km2 = {rho}\n"));
    text.push_str(&format!("points = {}\n", table.len()));
    text.push_str(&format!("q_star = {:.4}\n", fit.q_star));
    text.push_str(&format!("mse = {:.6e}\n", fit.mse));
    text.push_str(&format!("bracket_low = {:.4}\n", fit.bracket.0));
    text.push_str(&format!("bracket_high = {:.4}\n", fit.bracket.1));
    text.push_str(&format!("upper_root_found = {}\n", fit.upper_root_found));
    Ok(Output {
        text,
        failures: Vec::new(),
    })
}

/// SHA-256 of the scenario as serialized after command-line overrides.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    Sha256::digest(cfg.to_toml().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn simulate(sc: &Scenario) -> Result<Output, CliError> {
    let gammas_db = sc.sim_gamma_grid_db();
    let gammas: Vec<f64> = gammas_db.iter().map(|&g| db_to_linear(g)).collect();
    let header = [
        format!("model = {}", model_name(&sc.config)),
        format!("seed = {}", sc.config.sim.seed),
        format!("trials = {}", sc.config.sim.trials),
        format!("config_sha256 = {}", config_hash(&sc.config)),
    ];
    let mut table = Table::new("simulate", &header, &SIMULATE_COLUMNS);
    let mut failures = Vec::new();
    for &l in &sc.lambdas {
        let side = sc.region_side(l);
        let stats = simulate_at(sc, l, gammas.clone());
        match (side, stats) {
            (Ok(side), Ok(s)) => {
                for (g_db, cov) in gammas_db.iter().zip(&s.coverage) {
                    table.row(&[
                        cell(l),
                        rho_cell(sc.rho),
                        cell(side),
                        s.trials_used.to_string(),
                        s.trials_discarded.to_string(),
                        cell(s.active_density.mean),
                        cell(s.active_density.ci95),
                        cell(s.ase.mean),
                        cell(s.ase.ci95),
                        cell(*g_db),
                        cell(cov.mean),
                        cell(cov.ci95),
                    ]);
                }
            }
            (Err(e), _) | (_, Err(e)) => failures.push(row_failure(l, e)),
        }
    }
    Ok(Output::from_table(table, failures))
}

/// Inputs for `calibrate-power` beyond the scenario.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationArgs {
    pub lambda: f64,
    pub rho: f64,
    pub q_star: f64,
    pub gamma0_db: f64,
    pub eta0_db: f64,
    pub amplifier_efficiency: f64,
}

pub fn calibrate_power(sc: Option<&Scenario>, args: &CalibrationArgs) -> Result<Output, CliError> {
    let (model, noise, bw): (PathLossModel, f64, f64) = match sc {
        Some(sc) => (sc.model.clone(), sc.noise_power, sc.bandwidth),
        None => (build_case1(), scnsim_core::units::dbm_to_mw(-95.0), 10e6),
    };
    let point = calibration_point(
        &model,
        args.lambda,
        args.rho,
        args.q_star,
        db_to_linear(args.gamma0_db),
        db_to_linear(args.eta0_db),
        noise,
        bw,
    )?;
    let anchors = EeAnchors::REFERENCE;
    let (profile, errors) = calibrate(&anchors, &point, args.eta0_db, args.amplifier_efficiency)?;
    let mut text = String::from("# Node power profile written by `scnsim calibrate-power`.\n");
    text.push_str(&format!(
        "# lambda = {}, rho = {}, q_star = {}, gamma0_db = {}, amplifier efficiency = {}\n",
        args.lambda, args.rho, args.q_star, args.gamma0_db, args.amplifier_efficiency
    ));
    for (m, e) in scnsim_core::ImcMode::ALL.iter().zip(errors) {
        text.push_str(&format!(
            "# {m}: target {:.2} Mbits/J, error {:+.2}%\n",
            anchors.get(*m) / 1e6,
            e * 100.0
        ));
    }
    text.push('\n');
    text.push_str(&profile.to_toml());
    Ok(Output {
        text,
        failures: Vec::new(),
    })
}
