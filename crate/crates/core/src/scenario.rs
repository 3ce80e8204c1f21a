//! AR(1) perturbation of the exogenous series and Monte Carlo evaluation of the
//! fixed-price policy.

use crate::model::{Contract, ExogenousSeries, HeadCurve, InitialState, StepRange, SystemParams};
use crate::policy::{rollout_with, PolicyError, ReleaseRule, StepState};
use crate::pricer::{check_partition, PricerError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Steps before the end of a month in which the contract override may act.
pub const OVERRIDE_WINDOW: usize = 72;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid noise spec: {0}")]
    InvalidSpec(String),
    #[error("{0} series has no positive entries, MAPE is undefined")]
    UndefinedMape(&'static str),
    #[error("{series} series cannot reach a MAPE of {target} under its clamp rule")]
    UnreachableMape { series: &'static str, target: f64 },
    #[error("expected {expected} monthly prices, got {got}")]
    PriceCount { expected: usize, got: usize },
    #[error(transparent)]
    Pricer(#[from] PricerError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Target mean absolute percentage error, as a fraction.
    pub mape_target: f64,
    /// AR(1) persistence of the relative error.
    pub ar_coeff: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub const DEFAULT_AR_COEFF: f64 = 0.7;

    fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.mape_target >= 0.0 && self.mape_target.is_finite()) {
            return Err(ScenarioError::InvalidSpec(format!(
                "MAPE target must be nonnegative, got {}",
                self.mape_target
            )));
        }
        if !(0.0..1.0).contains(&self.ar_coeff) {
            return Err(ScenarioError::InvalidSpec(format!(
                "AR coefficient must lie in [0, 1), got {}",
                self.ar_coeff
            )));
        }
        Ok(())
    }
}

/// Realized MAPE of each perturbed series.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RealizedMape {
    pub price: f64,
    pub alpha: f64,
    pub inflow: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbed {
    pub series: ExogenousSeries,
    pub realized: RealizedMape,
}

#[derive(Clone, Copy)]
enum Clamp {
    NonNegative,
    Unit,
}

impl Clamp {
    fn apply(self, x: f64) -> f64 {
        match self {
            Clamp::NonNegative => x.max(0.0),
            Clamp::Unit => x.clamp(0.0, 1.0),
        }
    }
}

/// MAPE over entries with a positive base value.
pub fn mape(base: &[f64], noisy: &[f64]) -> Option<f64> {
    let (sum, n) = base
        .iter()
        .zip(noisy)
        .filter(|(x, _)| **x > 0.0)
        .fold((0.0, 0usize), |(s, n), (x, y)| {
            (s + (y - x).abs() / x, n + 1)
        });
    (n > 0).then(|| sum / n as f64)
}

fn perturb_one(base: &[f64], shape: &[f64], scale: f64, clamp: Clamp) -> Vec<f64> {
    base.iter()
        .zip(shape)
        .map(|(x, e)| clamp.apply(x * (1.0 + scale * e)))
        .collect()
}

/// Scales a unit-innovation AR(1) path so the clamped series hits `target` MAPE.
fn calibrate(
    name: &'static str,
    base: &[f64],
    shape: &[f64],
    target: f64,
    clamp: Clamp,
) -> Result<(Vec<f64>, f64), ScenarioError> {
    let realized = |scale: f64| {
        mape(base, &perturb_one(base, shape, scale, clamp))
            .ok_or(ScenarioError::UndefinedMape(name))
    };
    realized(0.0)?;
    let mut hi = target.max(1e-3);
    let mut tries = 0;
    while realized(hi)? < target {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(ScenarioError::UnreachableMape {
                series: name,
                target,
            });
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let m = realized(mid)?;
        if (m - target).abs() <= 1e-9 * target {
            lo = mid;
            hi = mid;
            break;
        }
        if m < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let scale = 0.5 * (lo + hi);
    let out = perturb_one(base, shape, scale, clamp);
    let m = mape(base, &out).ok_or(ScenarioError::UndefinedMape(name))?;
    Ok((out, m))
}

fn ar1_path(rng: &mut ChaCha8Rng, len: usize, ar_coeff: f64) -> Vec<f64> {
    let mut e = 0.0;
    (0..len)
        .map(|_| {
            let w: f64 = StandardNormal.sample(rng);
            e = ar_coeff * e + w;
            e
        })
        .collect()
}

/// Multiplicative AR(1) noise on price, capacity factor and inflow, each scaled so its
/// realized MAPE matches the target. Deterministic in the seed.
pub fn perturb(series: &ExogenousSeries, spec: &NoiseSpec) -> Result<Perturbed, ScenarioError> {
    spec.validate()?;
    if spec.mape_target == 0.0 {
        return Ok(Perturbed {
            series: series.clone(),
            realized: RealizedMape::default(),
        });
    }
    let n = series.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let price_shape = ar1_path(&mut rng, n, spec.ar_coeff);
    let alpha_shape = ar1_path(&mut rng, n, spec.ar_coeff);
    let inflow_shape = ar1_path(&mut rng, n, spec.ar_coeff);

    let (lambda, price) = calibrate(
        "price",
        &series.lambda,
        &price_shape,
        spec.mape_target,
        Clamp::NonNegative,
    )?;
    let (alpha, alpha_m) = calibrate(
        "capacity factor",
        &series.alpha,
        &alpha_shape,
        spec.mape_target,
        Clamp::Unit,
    )?;
    let (inflow, inflow_m) = calibrate(
        "inflow",
        &series.inflow,
        &inflow_shape,
        spec.mape_target,
        Clamp::NonNegative,
    )?;
    Ok(Perturbed {
        series: ExogenousSeries {
            lambda,
            alpha,
            inflow,
        },
        realized: RealizedMape {
            price,
            alpha: alpha_m,
            inflow: inflow_m,
        },
    })
}

/// The perturbed series of [`perturb`].
pub fn gen_ar1(
    series: &ExogenousSeries,
    spec: &NoiseSpec,
) -> Result<ExogenousSeries, ScenarioError> {
    perturb(series, spec).map(|p| p.series)
}

/// Outcome of running the fixed monthly prices over one realization of the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPriceRun {
    pub revenue: f64,
    pub release: f64,
    /// Sum over months of `|release - U|`, m³.
    pub residual: f64,
    /// Steps where the end-of-month contract override replaced the price rule.
    pub overrides: usize,
    pub monthly_revenue: Vec<f64>,
}

fn chained_sum(start: f64, steps: usize, mut next: impl FnMut(f64) -> f64) -> f64 {
    let mut u = start;
    let mut total = 0.0;
    for _ in 0..steps {
        u = next(u);
        total += u;
    }
    total
}

/// Rolls out each month at its fixed price. Within the last [`OVERRIDE_WINDOW`] steps of a
/// month the release is forced to the top (bottom) of the feasible box whenever the remaining
/// contract volume is at least the most (at most the least) that the ramps still allow.
pub fn run_fixed_price(
    series: &ExogenousSeries,
    contracts: &[Contract],
    thetas: &[f64],
    initial: &InitialState,
    params: &SystemParams,
    curve: &HeadCurve,
) -> Result<FixedPriceRun, ScenarioError> {
    check_partition(contracts, series.len())?;
    if thetas.len() != contracts.len() {
        return Err(ScenarioError::PriceCount {
            expected: contracts.len(),
            got: thetas.len(),
        });
    }
    let mut state = *initial;
    let mut run = FixedPriceRun {
        revenue: 0.0,
        release: 0.0,
        residual: 0.0,
        overrides: 0,
        monthly_revenue: Vec::with_capacity(contracts.len()),
    };
    for (contract, &theta) in contracts.iter().zip(thetas) {
        let span: StepRange = contract.span;
        let mut overrides = 0;
        let rule = |t: usize, st: &StepState| {
            let remaining = span.end - t;
            if remaining <= OVERRIDE_WINDOW {
                let need = contract.target - st.released;
                let most = chained_sum(st.u_prev, remaining, |u| {
                    (u + params.ramp_up).min(params.u_max)
                });
                let least = chained_sum(st.u_prev, remaining, |u| {
                    (u - params.ramp_down).max(params.u_min)
                });
                if need >= most {
                    overrides += 1;
                    return ReleaseRule::Max;
                }
                if need <= least {
                    overrides += 1;
                    return ReleaseRule::Min;
                }
            }
            ReleaseRule::Price(theta)
        };
        let traj = rollout_with(rule, series, span, &state, params, curve)?;
        run.revenue += traj.total_revenue;
        run.release += traj.total_release;
        run.residual += (traj.total_release - contract.target).abs();
        run.overrides += overrides;
        run.monthly_revenue.push(traj.total_revenue);
        state = traj.terminal_state();
    }
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub mape_level: f64,
    pub run: usize,
    pub seed: u64,
    pub revenue: Option<f64>,
    pub release: Option<f64>,
    pub residual: Option<f64>,
    pub overrides: Option<usize>,
    pub realized: Option<RealizedMape>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// Sample statistics in input order; `None` when empty.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Some(Self {
            mean,
            std: var.sqrt(),
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub mape_level: f64,
    pub runs: usize,
    pub failed: usize,
    pub revenue: Option<Stats>,
    pub release: Option<Stats>,
    pub residual: Option<Stats>,
    /// `(mean revenue - deterministic revenue) / deterministic revenue`.
    pub revenue_shift: Option<f64>,
    pub realized_mape: Option<RealizedMape>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub deterministic: FixedPriceRun,
    pub rows: Vec<RunRow>,
    pub summaries: Vec<LevelSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub n_runs: usize,
    pub base_seed: u64,
    pub ar_coeff: f64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            n_runs: 200,
            base_seed: 42,
            ar_coeff: NoiseSpec::DEFAULT_AR_COEFF,
        }
    }
}

/// Evaluates the fixed monthly prices on `n_runs` perturbations per MAPE level.
/// Run `i` uses seed `base_seed + i`; failing runs are recorded and skipped in the summary.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo(
    base: &ExogenousSeries,
    contracts: &[Contract],
    initial: &InitialState,
    params: &SystemParams,
    curve: &HeadCurve,
    theta_per_month: &[f64],
    mape_levels: &[f64],
    cfg: &MonteCarloConfig,
) -> Result<MonteCarloReport, ScenarioError> {
    NoiseSpec {
        mape_target: 0.0,
        ar_coeff: cfg.ar_coeff,
        seed: cfg.base_seed,
    }
    .validate()?;
    let deterministic = run_fixed_price(base, contracts, theta_per_month, initial, params, curve)?;

    let jobs: Vec<(f64, usize)> = mape_levels
        .iter()
        .flat_map(|&level| (0..cfg.n_runs).map(move |run| (level, run)))
        .collect();
    let rows: Vec<RunRow> = jobs
        .par_iter()
        .map(|&(level, run)| {
            let seed = cfg.base_seed.wrapping_add(run as u64);
            let spec = NoiseSpec {
                mape_target: level,
                ar_coeff: cfg.ar_coeff,
                seed,
            };
            let outcome = perturb(base, &spec).and_then(|p| {
                run_fixed_price(
                    &p.series,
                    contracts,
                    theta_per_month,
                    initial,
                    params,
                    curve,
                )
                .map(|r| (r, p.realized))
            });
            match outcome {
                Ok((r, realized)) => RunRow {
                    mape_level: level,
                    run,
                    seed,
                    revenue: Some(r.revenue),
                    release: Some(r.release),
                    residual: Some(r.residual),
                    overrides: Some(r.overrides),
                    realized: Some(realized),
                    error: None,
                },
                Err(e) => RunRow {
                    mape_level: level,
                    run,
                    seed,
                    revenue: None,
                    release: None,
                    residual: None,
                    overrides: None,
                    realized: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let summaries = mape_levels
        .iter()
        .map(|&level| summarize(level, &rows, deterministic.revenue))
        .collect();
    Ok(MonteCarloReport {
        deterministic,
        rows,
        summaries,
    })
}

/// Summary of the rows at `level`, recomputable from the rows alone.
pub fn summarize(level: f64, rows: &[RunRow], deterministic_revenue: f64) -> LevelSummary {
    let at: Vec<&RunRow> = rows.iter().filter(|r| r.mape_level == level).collect();
    let ok: Vec<&RunRow> = at.iter().copied().filter(|r| r.error.is_none()).collect();
    let pick =
        |f: fn(&RunRow) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
    let revenue = Stats::of(&pick(|r| r.revenue));
    let realized = if ok.is_empty() {
        None
    } else {
        let n = ok.len() as f64;
        let sum = ok
            .iter()
            .filter_map(|r| r.realized)
            .fold(RealizedMape::default(), |a, m| RealizedMape {
                price: a.price + m.price,
                alpha: a.alpha + m.alpha,
                inflow: a.inflow + m.inflow,
            });
        Some(RealizedMape {
            price: sum.price / n,
            alpha: sum.alpha / n,
            inflow: sum.inflow / n,
        })
    };
    LevelSummary {
        mape_level: level,
        runs: at.len(),
        failed: at.len() - ok.len(),
        revenue_shift: revenue
            .filter(|_| deterministic_revenue != 0.0)
            .map(|s| (s.mean - deterministic_revenue) / deterministic_revenue),
        revenue,
        release: Stats::of(&pick(|r| r.release)),
        residual: Stats::of(&pick(|r| r.residual)),
        realized_mape: realized,
    }
}
