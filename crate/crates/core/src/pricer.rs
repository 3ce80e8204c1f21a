//! Monthly water-contract pricing by bisection on the release curve `sigma(theta)`.

use crate::model::{
    Contract, ExogenousSeries, HeadCurve, InitialState, StepRange, SystemParams, Trajectory,
};
use crate::policy::{rollout, PolicyError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricerError {
    #[error(
        "contract of {target} m3 is infeasible: even free water only releases {sigma_at_zero} m3"
    )]
    InfeasibleContract { target: f64, sigma_at_zero: f64 },
    #[error(
        "could not bracket the water price: sigma({hi}) = {sigma_hi} m3 still exceeds {target} m3"
    )]
    BracketFailure { hi: f64, sigma_hi: f64, target: f64 },
    #[error("invalid bisection config: {0}")]
    InvalidConfig(String),
    #[error("contracts do not partition the horizon: {0}")]
    BadPartition(String),
    #[error("month {month}: {source}")]
    Month {
        month: usize,
        #[source]
        source: Box<PricerError>,
    },
    #[error("no transmission capacities to sweep")]
    EmptySweep,
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionConfig {
    pub lo: f64,
    pub hi: f64,
    pub tolerance: f64,
    pub max_bracket_expansions: usize,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 1.0,
            tolerance: 1e-6,
            max_bracket_expansions: 20,
        }
    }
}

impl BisectionConfig {
    fn validate(&self) -> Result<(), PricerError> {
        if !(self.lo >= 0.0 && self.lo < self.hi && self.hi.is_finite()) {
            return Err(PricerError::InvalidConfig(format!(
                "need 0 <= lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(PricerError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }

    /// Midpoint evaluations needed to shrink `[lo, hi]` below the tolerance.
    pub fn nominal_iterations(&self) -> usize {
        ((self.hi - self.lo) / self.tolerance)
            .log2()
            .ceil()
            .max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractSolution {
    pub theta_star: f64,
    pub trajectory: Trajectory,
    pub sigma: f64,
    /// `sigma - U`, m³.
    pub residual: f64,
    /// Midpoint evaluations performed.
    pub iterations: usize,
    /// Bracket doublings performed before bisecting.
    pub expansions: usize,
    /// False when some later evaluation contradicted an earlier bracketing decision.
    pub monotone: bool,
    /// Every `(theta, sigma)` evaluated, in order.
    pub evaluations: Vec<(f64, f64)>,
}

/// Total release of the policy rollout at `theta`.
pub fn sigma(
    theta: f64,
    series: &ExogenousSeries,
    span: StepRange,
    initial: &InitialState,
    params: &SystemParams,
    curve: &HeadCurve,
) -> Result<f64, PricerError> {
    Ok(rollout(theta, series, span, initial, params, curve)?.total_release)
}

struct Search {
    evaluations: Vec<(f64, f64)>,
    monotone: bool,
}

impl Search {
    fn push(&mut self, theta: f64, s: f64) {
        // sigma must not increase with theta
        if self
            .evaluations
            .iter()
            .any(|&(t, v)| (t < theta && v < s) || (t > theta && v > s))
        {
            self.monotone = false;
        }
        self.evaluations.push((theta, s));
    }
}

/// Finds the water price at which the rollout releases the contracted volume.
///
/// The bracket `[lo, hi]` is halved until narrower than the tolerance. Too much release
/// (`sigma > U`) means water is underpriced and moves `lo` up, otherwise `hi` moves down. If `sigma(hi)` still exceeds `U`, `hi` is doubled
/// up to `max_bracket_expansions` times first. Among all evaluated prices the one with the
/// smallest `|sigma - U|` is returned (latest wins ties), so a bracketing contradiction
/// under a volume-dependent head still yields the best iterate and clears `monotone`.
pub fn solve_contract_price(
    series: &ExogenousSeries,
    contract: &Contract,
    initial: &InitialState,
    params: &SystemParams,
    curve: &HeadCurve,
    cfg: &BisectionConfig,
) -> Result<ContractSolution, PricerError> {
    cfg.validate()?;
    series
        .check_span(contract.span)
        .map_err(PolicyError::from)?;
    let target = contract.target;
    let eval = |theta: f64| sigma(theta, series, contract.span, initial, params, curve);

    let mut search = Search {
        evaluations: Vec::new(),
        monotone: true,
    };
    let mut lo = cfg.lo;
    let mut hi = cfg.hi;
    let mut expansions = 0;

    let mut s_lo = eval(lo)?;
    search.push(lo, s_lo);
    if s_lo < target && lo > 0.0 {
        lo = 0.0;
        expansions += 1;
        s_lo = eval(lo)?;
        search.push(lo, s_lo);
    }
    if s_lo < target {
        return Err(PricerError::InfeasibleContract {
            target,
            sigma_at_zero: s_lo,
        });
    }
    if s_lo == target {
        return finish(
            lo, 0, expansions, search, series, contract, initial, params, curve,
        );
    }

    let mut s_hi = eval(hi)?;
    search.push(hi, s_hi);
    while s_hi > target && expansions < cfg.max_bracket_expansions {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        s_hi = eval(hi)?;
        search.push(hi, s_hi);
    }
    if s_hi > target {
        return Err(PricerError::BracketFailure {
            hi,
            sigma_hi: s_hi,
            target,
        });
    }
    if s_hi == target {
        return finish(
            hi, 0, expansions, search, series, contract, initial, params, curve,
        );
    }

    let mut iterations = 0;
    let mut theta = 0.5 * (lo + hi);
    while hi - lo > cfg.tolerance {
        theta = 0.5 * (lo + hi);
        let s = eval(theta)?;
        search.push(theta, s);
        iterations += 1;
        if s > target {
            lo = theta;
        } else {
            hi = theta;
        }
    }

    let best = search
        .evaluations
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| {
            let ra = (a.1 - target).abs();
            let rb = (b.1 - target).abs();
            ra.total_cmp(&rb).then(j.cmp(i))
        })
        .map(|(_, e)| e.0)
        .unwrap_or(theta);
    finish(
        best, iterations, expansions, search, series, contract, initial, params, curve,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    theta: f64,
    iterations: usize,
    expansions: usize,
    search: Search,
    series: &ExogenousSeries,
    contract: &Contract,
    initial: &InitialState,
    params: &SystemParams,
    curve: &HeadCurve,
) -> Result<ContractSolution, PricerError> {
    let trajectory = rollout(theta, series, contract.span, initial, params, curve)?;
    let sigma = trajectory.total_release;
    Ok(ContractSolution {
        theta_star: theta,
        sigma,
        residual: sigma - contract.target,
        trajectory,
        iterations,
        expansions,
        monotone: search.monotone,
        evaluations: search.evaluations,
    })
}

/// Checks that `contracts` are consecutive, nonempty and cover `[0, horizon)`.
pub fn check_partition(contracts: &[Contract], horizon: usize) -> Result<(), PricerError> {
    if contracts.is_empty() {
        return Err(PricerError::BadPartition("no contracts".into()));
    }
    let mut next = 0;
    for (m, c) in contracts.iter().enumerate() {
        if c.span.start != next {
            return Err(PricerError::BadPartition(format!(
                "month {m} starts at step {} but step {next} was expected",
                c.span.start
            )));
        }
        if c.span.is_empty() {
            return Err(PricerError::BadPartition(format!("month {m} is empty")));
        }
        next = c.span.end;
    }
    if next != horizon {
        return Err(PricerError::BadPartition(format!(
            "contracts end at step {next} but the horizon has {horizon} steps"
        )));
    }
    Ok(())
}

/// Prices each month in order, seeding month `m + 1` with the terminal state of month `m`.
pub fn solve_multi_month(
    series: &ExogenousSeries,
    contracts: &[Contract],
    initial: &InitialState,
    params: &SystemParams,
    curve: &HeadCurve,
    cfg: &BisectionConfig,
) -> Result<Vec<ContractSolution>, PricerError> {
    check_partition(contracts, series.len())?;
    let mut state = *initial;
    let mut out = Vec::with_capacity(contracts.len());
    for (month, contract) in contracts.iter().enumerate() {
        let sol =
            solve_contract_price(series, contract, &state, params, curve, cfg).map_err(|e| {
                PricerError::Month {
                    month,
                    source: Box::new(e),
                }
            })?;
        state = sol.trajectory.terminal_state();
        out.push(sol);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Transmission capacity, MWh per step.
    pub p: f64,
    pub month: usize,
    pub theta_star: f64,
    pub revenue: f64,
    pub release: f64,
    pub residual: f64,
}

/// Re-solves every month for each transmission capacity in `p_values`.
pub fn sweep_capacity(
    series: &ExogenousSeries,
    contracts: &[Contract],
    initial: &InitialState,
    params: &SystemParams,
    curve: &HeadCurve,
    cfg: &BisectionConfig,
    p_values: &[f64],
) -> Result<Vec<SweepRow>, PricerError> {
    if p_values.is_empty() {
        return Err(PricerError::EmptySweep);
    }
    let per_p: Vec<Result<Vec<SweepRow>, PricerError>> = p_values
        .par_iter()
        .map(|&p| {
            let params = SystemParams {
                transmission: p,
                ..*params
            };
            let sols = solve_multi_month(series, contracts, initial, &params, curve, cfg)?;
            Ok(sols
                .iter()
                .enumerate()
                .map(|(month, s)| SweepRow {
                    p,
                    month,
                    theta_star: s.theta_star,
                    revenue: s.trajectory.total_revenue,
                    release: s.sigma,
                    residual: s.residual,
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_p {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Pearson correlation; `None` for fewer than two points or zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}
