use hydro_fpv::oracle::DpMode;
use hydro_fpv::pricer::{pearson, BisectionConfig, ContractSolution};
use hydro_fpv::scenario::MonteCarloConfig;
use hydro_fpv::{
    dp_solve, fit_head_curve, monte_carlo, rollout, solve_multi_month, sweep_capacity,
    validate_inputs, Contract, DispatchRecord, DpGrid, HeadCurve, HeadFit, InitialState, StepRange,
    SystemParams, Trajectory,
};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

use crate::config::Config;
use crate::error::CliError;
use crate::ingest::{self, format_timestamp, Dataset};
use crate::output::{csv_bytes, json_bytes, trajectory_csv, Outputs, TrajectoryRow};

pub struct Month {
    pub label: String,
    pub contract: Contract,
}

pub struct Inputs {
    pub dataset: Dataset,
    pub params: SystemParams,
    pub curve: HeadCurve,
    pub head_fit: Option<HeadFit>,
    pub initial: InitialState,
    pub months: Vec<Month>,
    pub bisection: BisectionConfig,
}

impl Inputs {
    pub fn contracts(&self) -> Vec<Contract> {
        self.months.iter().map(|m| m.contract).collect()
    }
}

fn head_curve(cfg: &Config) -> Result<(HeadCurve, Option<HeadFit>), CliError> {
    if let Some(h) = &cfg.head {
        return Ok((h.curve()?, None));
    }
    let Some(path) = &cfg.data.head else {
        return Err(CliError::Config(
            "either [head] or data.head is required".into(),
        ));
    };
    let fit = fit_head_curve(&ingest::read_head_table(path)?)?;
    Ok((fit.curve, Some(fit)))
}

fn read_contract_file(path: &Path) -> Result<Vec<(String, f64)>, CliError> {
    #[derive(Deserialize)]
    struct Row {
        month: String,
        release_m3: f64,
    }
    let err = |e: csv::Error| CliError::Config(format!("{}: {e}", path.display()));
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(err)?;
    r.deserialize::<Row>()
        .map(|row| row.map(|r| (r.month, r.release_m3)).map_err(err))
        .collect()
}

fn month_spans(cfg: &Config, dataset: &Dataset) -> Result<Vec<(String, StepRange)>, CliError> {
    match cfg.contracts.steps_per_month {
        Some(0) => Err(CliError::Config("steps_per_month must be positive".into())),
        Some(n) => {
            let horizon = dataset.series.len();
            Ok((0..horizon.div_ceil(n))
                .map(|m| {
                    (
                        format!("m{m}"),
                        StepRange::new(m * n, ((m + 1) * n).min(horizon)),
                    )
                })
                .collect())
        }
        None => Ok(dataset.calendar_months()),
    }
}

pub fn load_inputs(cfg: &Config) -> Result<Inputs, CliError> {
    let price = ingest::read_price(&cfg.data.price)?;
    let solar = ingest::read_solar(&cfg.data.solar)?;
    let inflow = ingest::read_inflow(&cfg.data.inflow)?;
    let dataset = ingest::align(price, solar, inflow)?;
    let (curve, head_fit) = head_curve(cfg)?;
    let params = cfg.system.params();
    let spans = month_spans(cfg, &dataset)?;

    let targets: Vec<f64> = match (&cfg.contracts.release_m3, &cfg.contracts.file) {
        (Some(v), None) => v.clone(),
        (None, Some(path)) => {
            let rows = read_contract_file(path)?;
            for ((label, _), (row_label, _)) in spans.iter().zip(&rows) {
                if label != row_label {
                    return Err(CliError::Config(format!(
                        "contract file lists month {row_label} where {label} was expected"
                    )));
                }
            }
            rows.into_iter().map(|r| r.1).collect()
        }
        _ => {
            return Err(CliError::Config(
                "set exactly one of contracts.release_m3 and contracts.file".into(),
            ))
        }
    };
    if targets.len() != spans.len() {
        return Err(CliError::Config(format!(
            "{} contract volumes for {} months",
            targets.len(),
            spans.len()
        )));
    }
    let months: Vec<Month> = spans
        .into_iter()
        .zip(targets)
        .map(|((label, span), target)| Month {
            label,
            contract: Contract::new(target, span),
        })
        .collect();

    let mut violations = Vec::new();
    for (i, m) in months.iter().enumerate() {
        let report = validate_inputs(&params, &dataset.series, &m.contract, &cfg.initial);
        let month_scoped = |v: &String| v.starts_with("contract");
        for v in &report.violations {
            if i == 0 || month_scoped(v) {
                let msg = if month_scoped(v) {
                    format!("{}: {v}", m.label)
                } else {
                    v.clone()
                };
                if !violations.contains(&msg) {
                    violations.push(msg);
                }
            }
        }
    }
    if !violations.is_empty() {
        return Err(CliError::Validation(violations));
    }

    Ok(Inputs {
        dataset,
        params,
        curve,
        head_fit,
        initial: cfg.initial,
        months,
        bisection: cfg.bisection.config(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthSummary {
    pub month: usize,
    pub label: String,
    pub start: String,
    pub steps: usize,
    pub target_m3: f64,
    pub theta_star: f64,
    pub sigma_m3: f64,
    pub residual_m3: f64,
    pub relative_residual: f64,
    pub revenue_usd: f64,
    pub mean_price: f64,
    pub iterations: Option<usize>,
    pub monotone: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub months: Vec<MonthSummary>,
    pub total_revenue_usd: f64,
    pub total_release_m3: f64,
    pub mass_balance_error: f64,
    pub max_ramp_violation_m3: f64,
    pub extrapolated_steps: usize,
    /// Correlation of monthly water price with monthly mean electricity price.
    pub theta_price_correlation: Option<f64>,
    pub wall_clock_ms: f64,
}

fn mean_price(inputs: &Inputs, span: StepRange) -> f64 {
    let l = &inputs.dataset.series.lambda[span.start..span.end];
    l.iter().sum::<f64>() / l.len().max(1) as f64
}

fn summarize_run(
    command: &str,
    inputs: &Inputs,
    monthly: &[(f64, &Trajectory, Option<&ContractSolution>)],
    started: Instant,
) -> (RunSummary, Vec<DispatchRecord>) {
    let mut records = Vec::new();
    let mut extrapolated = 0;
    let months: Vec<MonthSummary> = inputs
        .months
        .iter()
        .zip(monthly)
        .enumerate()
        .map(|(i, (m, (theta, traj, sol)))| {
            records.extend_from_slice(&traj.records);
            extrapolated += traj.extrapolated_steps;
            let residual = traj.total_release - m.contract.target;
            MonthSummary {
                month: i,
                label: m.label.clone(),
                start: format_timestamp(inputs.dataset.timestamp(m.contract.span.start)),
                steps: m.contract.span.len(),
                target_m3: m.contract.target,
                theta_star: *theta,
                sigma_m3: traj.total_release,
                residual_m3: residual,
                relative_residual: residual / m.contract.target.abs().max(1.0),
                revenue_usd: traj.total_revenue,
                mean_price: mean_price(inputs, m.contract.span),
                iterations: sol.map(|s| s.iterations),
                monotone: sol.map(|s| s.monotone),
            }
        })
        .collect();
    let full = Trajectory::from_records(inputs.initial, records, extrapolated);
    let thetas: Vec<f64> = months.iter().map(|m| m.theta_star).collect();
    let prices: Vec<f64> = months.iter().map(|m| m.mean_price).collect();
    let summary = RunSummary {
        command: command.to_string(),
        total_revenue_usd: full.total_revenue,
        total_release_m3: full.total_release,
        mass_balance_error: full.mass_balance_error(&inputs.dataset.series.inflow),
        max_ramp_violation_m3: full.max_ramp_violation(&inputs.params),
        extrapolated_steps: full.extrapolated_steps,
        theta_price_correlation: pearson(&thetas, &prices),
        months,
        wall_clock_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    (summary, full.records)
}

fn trajectory_rows(inputs: &Inputs, records: &[DispatchRecord]) -> Vec<TrajectoryRow> {
    records
        .iter()
        .map(|r| TrajectoryRow::new(r, &inputs.dataset))
        .collect()
}

fn solve(inputs: &Inputs) -> Result<Vec<ContractSolution>, CliError> {
    Ok(solve_multi_month(
        &inputs.dataset.series,
        &inputs.contracts(),
        &inputs.initial,
        &inputs.params,
        &inputs.curve,
        &inputs.bisection,
    )?)
}

#[derive(Serialize)]
struct HeadFitReport {
    a: f64,
    b: f64,
    v_lo: f64,
    v_hi: f64,
    r_squared: f64,
    points: usize,
}

pub fn fit_head(cfg: &Config) -> Result<Outputs, CliError> {
    let Some(path) = &cfg.data.head else {
        return Err(CliError::Config("fit-head needs data.head".into()));
    };
    let points = ingest::read_head_table(path)?;
    let fit = fit_head_curve(&points)?;
    let mut out = Outputs::default();
    out.add(
        "head_fit.json",
        json_bytes(&HeadFitReport {
            a: fit.curve.a,
            b: fit.curve.b,
            v_lo: fit.curve.v_lo,
            v_hi: fit.curve.v_hi,
            r_squared: fit.r_squared,
            points: points.len(),
        })?,
    );
    Ok(out)
}

pub fn price(cfg: &Config) -> Result<Outputs, CliError> {
    let started = Instant::now();
    let inputs = load_inputs(cfg)?;
    let sols = solve(&inputs)?;
    let monthly: Vec<_> = sols
        .iter()
        .map(|s| (s.theta_star, &s.trajectory, Some(s)))
        .collect();
    let (summary, records) = summarize_run("price", &inputs, &monthly, started);
    let mut out = Outputs::default();
    out.add(
        "trajectory.csv",
        trajectory_csv(&trajectory_rows(&inputs, &records))?,
    );
    out.add("summary.json", json_bytes(&summary)?);
    Ok(out)
}

fn simulate_thetas(cfg: &Config) -> Result<Vec<f64>, CliError> {
    match (&cfg.simulate.theta, &cfg.simulate.summary) {
        (Some(t), None) => Ok(t.clone()),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let summary: RunSummary = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            Ok(summary.months.iter().map(|m| m.theta_star).collect())
        }
        _ => Err(CliError::Config(
            "simulate needs exactly one of simulate.theta and simulate.summary".into(),
        )),
    }
}

pub fn simulate(cfg: &Config) -> Result<Outputs, CliError> {
    let started = Instant::now();
    let thetas = simulate_thetas(cfg)?;
    let inputs = load_inputs(cfg)?;
    if thetas.len() != inputs.months.len() {
        return Err(CliError::Config(format!(
            "{} water prices for {} months",
            thetas.len(),
            inputs.months.len()
        )));
    }
    let mut state = inputs.initial;
    let mut trajectories = Vec::with_capacity(thetas.len());
    for (m, &theta) in inputs.months.iter().zip(&thetas) {
        let traj = rollout(
            theta,
            &inputs.dataset.series,
            m.contract.span,
            &state,
            &inputs.params,
            &inputs.curve,
        )?;
        state = traj.terminal_state();
        trajectories.push(traj);
    }
    let monthly: Vec<_> = thetas
        .iter()
        .zip(&trajectories)
        .map(|(&t, tr)| (t, tr, None))
        .collect();
    let (summary, records) = summarize_run("simulate", &inputs, &monthly, started);
    let mut out = Outputs::default();
    out.add(
        "trajectory.csv",
        trajectory_csv(&trajectory_rows(&inputs, &records))?,
    );
    out.add("summary.json", json_bytes(&summary)?);
    Ok(out)
}

#[derive(Serialize)]
struct SweepCsvRow<'a> {
    p_mwh: f64,
    month: usize,
    label: &'a str,
    theta_star: f64,
    revenue_usd: f64,
    release_m3: f64,
    residual_m3: f64,
}

#[derive(Serialize)]
struct SweepPoint {
    p_mwh: f64,
    total_revenue_usd: f64,
    theta_price_correlation: Option<f64>,
}

#[derive(Serialize)]
struct SweepSummary {
    points: Vec<SweepPoint>,
    wall_clock_ms: f64,
}

pub fn sweep(cfg: &Config) -> Result<Outputs, CliError> {
    let started = Instant::now();
    let inputs = load_inputs(cfg)?;
    let rows = sweep_capacity(
        &inputs.dataset.series,
        &inputs.contracts(),
        &inputs.initial,
        &inputs.params,
        &inputs.curve,
        &inputs.bisection,
        &cfg.sweep.p_values,
    )?;
    let prices: Vec<f64> = inputs
        .months
        .iter()
        .map(|m| mean_price(&inputs, m.contract.span))
        .collect();
    let points = rows
        .chunks(inputs.months.len())
        .map(|cell| {
            let thetas: Vec<f64> = cell.iter().map(|r| r.theta_star).collect();
            SweepPoint {
                p_mwh: cell[0].p,
                total_revenue_usd: cell.iter().map(|r| r.revenue).sum(),
                theta_price_correlation: pearson(&thetas, &prices),
            }
        })
        .collect();
    let csv_rows: Vec<SweepCsvRow> = rows
        .iter()
        .map(|r| SweepCsvRow {
            p_mwh: r.p,
            month: r.month,
            label: &inputs.months[r.month].label,
            theta_star: r.theta_star,
            revenue_usd: r.revenue,
            release_m3: r.release,
            residual_m3: r.residual,
        })
        .collect();
    let mut out = Outputs::default();
    out.add("sweep.csv", csv_bytes(&csv_rows)?);
    out.add(
        "sweep_summary.json",
        json_bytes(&SweepSummary {
            points,
            wall_clock_ms: started.elapsed().as_secs_f64() * 1e3,
        })?,
    );
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub start: usize,
    pub steps: usize,
    /// Release of the priced policy over the window; the oracle must match it.
    pub target_m3: f64,
    pub bucket_width_m3: f64,
    pub policy_revenue_usd: f64,
    pub oracle_revenue_usd: f64,
    pub oracle_release_m3: f64,
    /// `(oracle - policy) / oracle` revenue.
    pub relative_gap: f64,
    pub wall_clock_ms: f64,
}

/// Prices the full horizon, then solves the window `[start, start + steps)` by dynamic
/// programming from the policy's state at `start` with the policy's window release as contract.
pub fn oracle_check(cfg: &Config) -> Result<Outputs, CliError> {
    let started = Instant::now();
    let inputs = load_inputs(cfg)?;
    let oc = cfg.oracle;
    let span = StepRange::new(oc.start, oc.start + oc.steps);
    if oc.steps == 0 || span.end > inputs.dataset.series.len() {
        return Err(CliError::Config(format!(
            "oracle window {}..{} outside horizon of {} steps",
            span.start,
            span.end,
            inputs.dataset.series.len()
        )));
    }
    let sols = solve(&inputs)?;
    let records: Vec<DispatchRecord> = sols
        .iter()
        .flat_map(|s| s.trajectory.records.iter().copied())
        .collect();
    let window = &records[span.start..span.end];
    let state = match span.start {
        0 => inputs.initial,
        s => InitialState {
            v0: records[s - 1].v,
            u0: records[s - 1].u,
        },
    };
    let target: f64 = window.iter().map(|r| r.u).sum();
    let policy_revenue: f64 = window.iter().map(|r| r.revenue).sum();
    let grid = DpGrid {
        n_u: oc.n_u,
        n_c: oc.n_c,
        mode: DpMode::Auto,
    };
    let dp = dp_solve(
        &inputs.dataset.series,
        &Contract::new(target, span),
        &state,
        &inputs.params,
        &inputs.curve,
        &grid,
    )?;
    let report = OracleReport {
        start: span.start,
        steps: span.len(),
        target_m3: target,
        bucket_width_m3: grid.bucket_width(&inputs.params, span.len()),
        policy_revenue_usd: policy_revenue,
        oracle_revenue_usd: dp.total_revenue,
        oracle_release_m3: dp.total_release,
        relative_gap: (dp.total_revenue - policy_revenue)
            / dp.total_revenue.abs().max(f64::MIN_POSITIVE),
        wall_clock_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    let mut out = Outputs::default();
    out.add(
        "oracle_trajectory.csv",
        trajectory_csv(&trajectory_rows(&inputs, &dp.records))?,
    );
    out.add("oracle_check.json", json_bytes(&report)?);
    Ok(out)
}

#[derive(Serialize)]
struct McCsvRow<'a> {
    mape_level: f64,
    run: usize,
    seed: u64,
    revenue_usd: Option<f64>,
    release_m3: Option<f64>,
    residual_m3: Option<f64>,
    overrides: Option<usize>,
    realized_price_mape: Option<f64>,
    realized_alpha_mape: Option<f64>,
    realized_inflow_mape: Option<f64>,
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct McSummary<'a> {
    theta_per_month: Vec<f64>,
    runs_per_level: usize,
    base_seed: u64,
    ar_coeff: f64,
    deterministic: &'a hydro_fpv::scenario::FixedPriceRun,
    levels: &'a [hydro_fpv::scenario::LevelSummary],
    wall_clock_ms: f64,
}

pub fn monte_carlo_cmd(cfg: &Config, seed: Option<u64>) -> Result<Outputs, CliError> {
    let started = Instant::now();
    let inputs = load_inputs(cfg)?;
    let thetas: Vec<f64> = solve(&inputs)?.iter().map(|s| s.theta_star).collect();
    let mc = MonteCarloConfig {
        n_runs: cfg.scenario.runs,
        base_seed: seed.unwrap_or(cfg.scenario.seed),
        ar_coeff: cfg.scenario.ar_coeff,
    };
    let report = monte_carlo(
        &inputs.dataset.series,
        &inputs.contracts(),
        &inputs.initial,
        &inputs.params,
        &inputs.curve,
        &thetas,
        &cfg.scenario.mape_levels,
        &mc,
    )?;
    let rows: Vec<McCsvRow> = report
        .rows
        .iter()
        .map(|r| McCsvRow {
            mape_level: r.mape_level,
            run: r.run,
            seed: r.seed,
            revenue_usd: r.revenue,
            release_m3: r.release,
            residual_m3: r.residual,
            overrides: r.overrides,
            realized_price_mape: r.realized.map(|m| m.price),
            realized_alpha_mape: r.realized.map(|m| m.alpha),
            realized_inflow_mape: r.realized.map(|m| m.inflow),
            error: r.error.as_deref(),
        })
        .collect();
    let mut out = Outputs::default();
    out.add("monte_carlo_runs.csv", csv_bytes(&rows)?);
    out.add(
        "monte_carlo_summary.json",
        json_bytes(&McSummary {
            theta_per_month: thetas,
            runs_per_level: mc.n_runs,
            base_seed: mc.base_seed,
            ar_coeff: mc.ar_coeff,
            deterministic: &report.deterministic,
            levels: &report.summaries,
            wall_clock_ms: started.elapsed().as_secs_f64() * 1e3,
        })?,
    );
    Ok(out)
}
