//! Brute-force references: a dense grid search for the single-step subproblem and a
//! dynamic program over a release grid for the full contract-constrained problem.
//!
//! Neither uses the water price of the decomposition, so both can certify it.

use crate::model::{
    Contract, DispatchRecord, ExogenousSeries, HeadCurve, InitialState, ModelError, SystemParams,
    Trajectory, J_PER_MWH,
};
use crate::policy::{release_box, StepInput};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Longest contract span the DP accepts.
pub const MAX_DP_STEPS: usize = 48;
/// Longest span solved exactly over the release grid in [`DpMode::Auto`].
pub const EXHAUSTIVE_MAX_STEPS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("empty release box [{lo}, {hi}] at step {t}")]
    EmptyBox { t: usize, lo: f64, hi: f64 },
    #[error("grid needs at least {min} points, got {got}")]
    GridTooSmall { min: usize, got: usize },
    #[error("span of {0} steps exceeds the DP limit of {MAX_DP_STEPS}")]
    TooLong(usize),
    #[error("exhaustive mode is limited to {EXHAUSTIVE_MAX_STEPS} steps, got {0}")]
    ExhaustiveTooLong(usize),
    #[error("no release sequence on the grid meets the contract of {target} m3")]
    Infeasible { target: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DpMode {
    /// Exhaustive up to [`EXHAUSTIVE_MAX_STEPS`], bucketed beyond.
    Auto,
    /// Exact over the release grid: paths are merged only when their cumulative release is identical.
    Exhaustive,
    /// Paths are merged when their cumulative release falls in the same bucket.
    Bucketed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpGrid {
    /// Release levels, evenly spaced over `[u_min, u_max]`.
    pub n_u: usize,
    /// Cumulative-release buckets over `[T * u_min, T * u_max]`.
    pub n_c: usize,
    pub mode: DpMode,
}

impl Default for DpGrid {
    fn default() -> Self {
        Self {
            n_u: 41,
            n_c: 201,
            mode: DpMode::Auto,
        }
    }
}

impl DpGrid {
    /// Width of one cumulative-release bucket for a span of `steps`.
    pub fn bucket_width(&self, params: &SystemParams, steps: usize) -> f64 {
        steps as f64 * (params.u_max - params.u_min) / (self.n_c - 1) as f64
    }
}

/// Best release on an `n`-point grid over the feasible box, with its relaxed objective
/// `lambda * (h + s) - theta * u`. Ties go to the smaller release.
pub fn grid_subproblem(
    theta: f64,
    input: &StepInput,
    params: &SystemParams,
    curve: &HeadCurve,
    n: usize,
) -> Result<(f64, f64), OracleError> {
    if n == 0 {
        return Err(OracleError::GridTooSmall { min: 1, got: 0 });
    }
    let (lo, hi) = release_box(params, input.u_prev);
    if lo > hi {
        return Err(OracleError::EmptyBox { t: input.t, lo, hi });
    }
    let per_m3 = energy_per_m3(params, curve, input.v_prev)?;
    let s = solar(params, input.lambda, input.alpha);
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..n {
        let u = if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        };
        let obj = input.lambda * (s + hydro(params, input.lambda, s, per_m3, u)) - theta * u;
        if obj > best.1 {
            best = (u, obj);
        }
    }
    Ok(best)
}

fn energy_per_m3(params: &SystemParams, curve: &HeadCurve, v: f64) -> Result<f64, ModelError> {
    Ok(params.eta * params.g * params.rho * curve.head(v)?.meters / J_PER_MWH)
}

fn solar(params: &SystemParams, lambda: f64, alpha: f64) -> f64 {
    if lambda >= 0.0 {
        (alpha * params.solar_capacity).min(params.transmission)
    } else {
        0.0
    }
}

fn hydro(params: &SystemParams, lambda: f64, s: f64, per_m3: f64, u: f64) -> f64 {
    if lambda >= 0.0 {
        (params.transmission - s).min(per_m3 * u).max(0.0)
    } else {
        0.0
    }
}

#[derive(Clone, Copy)]
struct Node {
    value: f64,
    released: f64,
    parent: u32,
}

const NONE: Node = Node {
    value: f64::NEG_INFINITY,
    released: 0.0,
    parent: u32::MAX,
};

/// Revenue-maximizing release sequence on the grid that meets the contract to within one
/// cumulative bucket, re-simulated at full precision.
///
/// The state is `(release level, cumulative release)`. Volume follows from the cumulative
/// release and inflow, so the head along every path is exact. Exhaustive mode keys states by
/// the exact sum of level indices; bucketed mode rounds cumulative release to the bucket grid
/// and keeps the best path per bucket.
pub fn dp_solve(
    series: &ExogenousSeries,
    contract: &Contract,
    initial: &InitialState,
    params: &SystemParams,
    curve: &HeadCurve,
    grid: &DpGrid,
) -> Result<Trajectory, OracleError> {
    let span = contract.span;
    series.check_span(span)?;
    let steps = span.len();
    if steps > MAX_DP_STEPS {
        return Err(OracleError::TooLong(steps));
    }
    if grid.n_u < 2 {
        return Err(OracleError::GridTooSmall {
            min: 2,
            got: grid.n_u,
        });
    }
    if grid.n_c < 2 {
        return Err(OracleError::GridTooSmall {
            min: 2,
            got: grid.n_c,
        });
    }
    let exhaustive = match grid.mode {
        DpMode::Auto => steps <= EXHAUSTIVE_MAX_STEPS,
        DpMode::Exhaustive if steps > EXHAUSTIVE_MAX_STEPS => {
            return Err(OracleError::ExhaustiveTooLong(steps))
        }
        DpMode::Exhaustive => true,
        DpMode::Bucketed => false,
    };
    if steps == 0 {
        return if contract.target == 0.0 {
            Ok(Trajectory::from_records(*initial, Vec::new(), 0))
        } else {
            Err(OracleError::Infeasible {
                target: contract.target,
            })
        };
    }

    let n_u = grid.n_u;
    let step = (params.u_max - params.u_min) / (n_u - 1) as f64;
    let levels: Vec<f64> = (0..n_u).map(|i| params.u_min + step * i as f64).collect();
    let width = grid.bucket_width(params, steps);
    let target = contract.target;
    let bucket = |c: f64| (c / width).round() as i64;
    let target_bucket = bucket(target);

    let key_count = if exhaustive {
        steps * (n_u - 1) + 1
    } else {
        (steps as f64 * params.u_max / width).ceil() as usize + 2
    };
    let slot = |level: usize, key: usize| level * key_count + key;

    let mut cum_inflow = Vec::with_capacity(steps + 1);
    cum_inflow.push(0.0);
    for t in span.start..span.end {
        cum_inflow.push(cum_inflow.last().unwrap() + series.inflow[t]);
    }

    let reachable = |k: usize, released: f64| {
        let rest = (steps - k) as f64;
        released + rest * params.u_min <= target + width
            && released + rest * params.u_max >= target - width
    };
    let ramp_ok = |from: f64, to: f64| {
        let d = to - from;
        d <= params.ramp_up + 1e-9 && d >= -params.ramp_down - 1e-9
    };

    // stages[k] holds the nodes after k + 1 steps; the key of a node is its level-index sum
    // (exhaustive) or its cumulative-release bucket.
    let mut stages: Vec<Vec<Node>> = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = span.start + k;
        let lambda = series.lambda[t];
        let s = solar(params, lambda, series.alpha[t]);
        let mut next = vec![NONE; n_u * key_count];

        let mut relax = |prev_value: f64,
                         released_before: f64,
                         key_before: usize,
                         parent: u32,
                         u_prev: f64|
         -> Result<(), OracleError> {
            let v_prev = initial.v0 + cum_inflow[k] - released_before;
            let per_m3 = energy_per_m3(params, curve, v_prev.max(0.0))?;
            for (j, &u) in levels.iter().enumerate() {
                if !ramp_ok(u_prev, u) {
                    continue;
                }
                let released = released_before + u;
                if !reachable(k + 1, released) {
                    continue;
                }
                let key = if exhaustive {
                    key_before + j
                } else {
                    bucket(released) as usize
                };
                let value = prev_value + lambda * (s + hydro(params, lambda, s, per_m3, u));
                let node = &mut next[slot(j, key)];
                if value > node.value {
                    *node = Node {
                        value,
                        released,
                        parent,
                    };
                }
            }
            Ok(())
        };

        if k == 0 {
            relax(0.0, 0.0, 0, u32::MAX, initial.u0)?;
        } else {
            let prev = &stages[k - 1];
            for i in 0..n_u {
                for key in 0..key_count {
                    let node = prev[slot(i, key)];
                    if node.value == f64::NEG_INFINITY {
                        continue;
                    }
                    relax(
                        node.value,
                        node.released,
                        key,
                        slot(i, key) as u32,
                        levels[i],
                    )?;
                }
            }
        }
        stages.push(next);
    }

    let last = &stages[steps - 1];
    let mut best: Option<usize> = None;
    for (idx, node) in last.iter().enumerate() {
        if node.value == f64::NEG_INFINITY || bucket(node.released) != target_bucket {
            continue;
        }
        if best.is_none_or(|b| node.value > last[b].value) {
            best = Some(idx);
        }
    }
    let mut idx = best.ok_or(OracleError::Infeasible { target })?;

    let mut releases = vec![0.0; steps];
    for k in (0..steps).rev() {
        releases[k] = levels[idx / key_count];
        idx = stages[k][idx].parent as usize;
    }
    Ok(simulate_releases(
        &releases, series, contract, initial, params, curve,
    )?)
}

/// Full-precision replay of a fixed release sequence.
pub fn simulate_releases(
    releases: &[f64],
    series: &ExogenousSeries,
    contract: &Contract,
    initial: &InitialState,
    params: &SystemParams,
    curve: &HeadCurve,
) -> Result<Trajectory, ModelError> {
    let mut v = initial.v0;
    let mut records = Vec::with_capacity(releases.len());
    let mut extrapolated = 0;
    for (k, &u) in releases.iter().enumerate() {
        let t = contract.span.start + k;
        let lambda = series.lambda[t];
        let head = curve.head(v)?;
        if head.extrapolated {
            extrapolated += 1;
        }
        let per_m3 = params.eta * params.g * params.rho * head.meters / J_PER_MWH;
        let s = solar(params, lambda, series.alpha[t]);
        let h = hydro(params, lambda, s, per_m3, u);
        let v_next = v + series.inflow[t] - u;
        records.push(DispatchRecord {
            t,
            s,
            h,
            u,
            v: v_next,
            theta_hat: lambda * per_m3,
            revenue: lambda * (h + s),
        });
        v = v_next;
    }
    Ok(Trajectory::from_records(*initial, records, extrapolated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StepRange;
    use crate::policy::{dispatch_step, step_objective};

    fn params() -> SystemParams {
        SystemParams::default()
    }

    fn input(lambda: f64, alpha: f64, u_prev: f64) -> StepInput {
        StepInput {
            t: 0,
            lambda,
            alpha,
            inflow: 0.0,
            v_prev: 1.2e10,
            u_prev,
        }
    }

    #[test]
    fn grid_agrees_with_closed_form() {
        let p = params();
        let c = HeadCurve::constant(150.0);
        for &(theta, lambda, alpha, u_prev) in &[
            (0.0, 40.0, 0.0, 300.0),
            (0.02, 40.0, 0.5, 600.0),
            (0.01, 40.0, 0.9, 141.6),
            (0.5, 80.0, 0.2, 707.9),
        ] {
            let inp = input(lambda, alpha, u_prev);
            let (_, obj) = grid_subproblem(theta, &inp, &p, &c, 1001).unwrap();
            let r = dispatch_step(theta, &inp, &p, &c).unwrap();
            let cf = step_objective(theta, lambda, r.s, r.h, r.u);
            assert!(
                (obj - cf).abs() <= 1e-9 * (1.0 + obj.abs()),
                "{obj} vs {cf}"
            );
        }
    }

    #[test]
    fn free_water_picks_smaller_of_box_top_and_headroom_release() {
        let c = HeadCurve::constant(150.0);
        let wide = params();
        let (u, _) = grid_subproblem(0.0, &input(40.0, 0.0, 400.0), &wide, &c, 1001).unwrap();
        assert!((u - 513.3).abs() < 1e-9);

        // headroom release 0.11 / (7595 * 150 / 3.6e9) = 347.6 m3 sits inside [329.6, 513.3]
        let tight = SystemParams {
            transmission: 0.11,
            ..params()
        };
        let (u, _) = grid_subproblem(0.0, &input(40.0, 0.0, 400.0), &tight, &c, 100_001).unwrap();
        let u_hat = 0.11 / tight.energy_per_m3(150.0);
        assert!(
            u >= u_hat - 1e-9 && u <= u_hat + 183.7 / 100_000.0,
            "{u} {u_hat}"
        );
    }

    #[test]
    fn zero_price_picks_box_bottom() {
        let c = HeadCurve::constant(150.0);
        let (u, obj) = grid_subproblem(0.3, &input(0.0, 0.5, 400.0), &params(), &c, 1001).unwrap();
        assert_eq!(u, 329.6);
        assert!((obj + 0.3 * 329.6).abs() < 1e-9);
    }

    #[test]
    fn single_step_contract_pins_release() {
        let p = params();
        let c = HeadCurve::constant(150.0);
        let s = ExogenousSeries::new(vec![40.0], vec![0.3], vec![0.0]).unwrap();
        let init = InitialState {
            v0: 1.2e10,
            u0: 400.0,
        };
        // level 18 of 41 over [141.6, 707.9]
        let u = 141.6 + 566.3 * 18.0 / 40.0;
        let contract = Contract::new(u, StepRange::new(0, 1));
        let traj = dp_solve(&s, &contract, &init, &p, &c, &DpGrid::default()).unwrap();
        assert!((traj.records[0].u - u).abs() < 1e-9);
        let inp = StepInput {
            t: 0,
            lambda: 40.0,
            alpha: 0.3,
            inflow: 0.0,
            v_prev: 1.2e10,
            u_prev: 400.0,
        };
        let s_opt = 300.0;
        let h = p.energy_per_m3(150.0) * u;
        assert!((traj.total_revenue - 40.0 * (s_opt + h)).abs() < 1e-9);
        let (_, obj0) = grid_subproblem(0.0, &inp, &p, &c, 1001).unwrap();
        assert!(traj.total_revenue <= obj0 + 1e-9);
    }

    #[test]
    fn guards() {
        let p = params();
        let c = HeadCurve::constant(150.0);
        let s = crate::fixture::series(0, 60);
        let init = InitialState {
            v0: 1.2e10,
            u0: 400.0,
        };
        let long = Contract::new(49.0 * 400.0, StepRange::new(0, 49));
        assert_eq!(
            dp_solve(&s, &long, &init, &p, &c, &DpGrid::default()),
            Err(OracleError::TooLong(49))
        );
        let too_much = Contract::new(6.0 * 707.9, StepRange::new(0, 6));
        assert!(matches!(
            dp_solve(&s, &too_much, &init, &p, &c, &DpGrid::default()),
            Err(OracleError::Infeasible { .. })
        ));
        let ex = DpGrid {
            mode: DpMode::Exhaustive,
            ..DpGrid::default()
        };
        let twelve = Contract::new(12.0 * 400.0, StepRange::new(0, 12));
        assert_eq!(
            dp_solve(&s, &twelve, &init, &p, &c, &ex),
            Err(OracleError::ExhaustiveTooLong(12))
        );
    }

    /// Plain enumeration of every grid sequence, for tiny spans.
    fn enumerate_best(
        s: &ExogenousSeries,
        contract: &Contract,
        init: &InitialState,
        p: &SystemParams,
        c: &HeadCurve,
        grid: &DpGrid,
    ) -> Option<f64> {
        let steps = contract.span.len();
        let levels: Vec<f64> = (0..grid.n_u)
            .map(|i| p.u_min + (p.u_max - p.u_min) * i as f64 / (grid.n_u - 1) as f64)
            .collect();
        let width = grid.bucket_width(p, steps);
        let mut best: Option<f64> = None;
        let mut idx = vec![0usize; steps];
        loop {
            let us: Vec<f64> = idx.iter().map(|&i| levels[i]).collect();
            let mut prev = init.u0;
            let ok = us.iter().all(|&u| {
                let d = u - prev;
                prev = u;
                d <= p.ramp_up + 1e-9 && d >= -p.ramp_down - 1e-9
            });
            let total: f64 = us.iter().sum();
            if ok && (total / width).round() == (contract.target / width).round() {
                let rev = simulate_releases(&us, s, contract, init, p, c)
                    .unwrap()
                    .total_revenue;
                if best.is_none_or(|b| rev > b) {
                    best = Some(rev);
                }
            }
            let mut k = 0;
            loop {
                if k == steps {
                    return best;
                }
                idx[k] += 1;
                if idx[k] < grid.n_u {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    fn hydro_heavy() -> SystemParams {
        SystemParams {
            transmission: 0.18,
            solar_capacity: 0.1,
            ..params()
        }
    }

    #[test]
    fn exhaustive_mode_matches_plain_enumeration() {
        let p = hydro_heavy();
        let c = crate::fixture::true_head_curve();
        let s = crate::fixture::series(5, 4);
        let init = InitialState {
            v0: 1.2e10,
            u0: 400.0,
        };
        let grid = DpGrid {
            n_u: 9,
            n_c: 41,
            mode: DpMode::Exhaustive,
        };
        for target in [4.0 * 300.0, 4.0 * 420.0, 4.0 * 520.0] {
            let contract = Contract::new(target, StepRange::new(0, 4));
            let brute = enumerate_best(&s, &contract, &init, &p, &c, &grid);
            let dp = dp_solve(&s, &contract, &init, &p, &c, &grid)
                .ok()
                .map(|t| t.total_revenue);
            match (brute, dp) {
                (Some(b), Some(d)) => assert!((b - d).abs() <= 1e-12 * b.abs().max(1.0), "{b} {d}"),
                (None, None) => {}
                other => panic!("mismatch {other:?}"),
            }
        }
    }

    #[test]
    fn finer_nested_grid_never_loses_revenue() {
        let p = hydro_heavy();
        let c = crate::fixture::true_head_curve();
        let s = crate::fixture::series(30, 6);
        let init = InitialState {
            v0: 1.2e10,
            u0: 424.75,
        };
        let contract = Contract::new(6.0 * 424.75, StepRange::new(0, 6));
        let mut prev = f64::NEG_INFINITY;
        for n_u in [11, 21, 41, 81] {
            let grid = DpGrid {
                n_u,
                n_c: 201,
                mode: DpMode::Exhaustive,
            };
            let rev = dp_solve(&s, &contract, &init, &p, &c, &grid)
                .unwrap()
                .total_revenue;
            assert!(rev >= prev - 1e-12, "n_u={n_u}: {rev} < {prev}");
            prev = rev;
        }
    }

    #[test]
    fn bucketed_trajectory_is_feasible() {
        let p = params();
        let c = crate::fixture::true_head_curve();
        let s = crate::fixture::series(100, 24);
        let init = InitialState {
            v0: 1.2e10,
            u0: 400.0,
        };
        let contract = Contract::new(24.0 * 430.0, StepRange::new(0, 24));
        let grid = DpGrid::default();
        let traj = dp_solve(&s, &contract, &init, &p, &c, &grid).unwrap();
        assert!((traj.total_release - contract.target).abs() <= grid.bucket_width(&p, 24));
        assert!(traj.max_ramp_violation(&p) <= 1e-9);
        assert!(traj.mass_balance_error(&s.inflow) <= 1e-9);
        for r in &traj.records {
            assert!(r.u >= p.u_min - 1e-9 && r.u <= p.u_max + 1e-9);
            assert!(r.s + r.h <= p.transmission + 1e-9);
        }
    }
}
