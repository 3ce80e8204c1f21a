//! Deterministic synthetic dataset used by the bundled example config and the tests.
//!
//! Hour 0 is 2023-01-01T00:00. Prices carry a daily and weekly cycle plus a
//! quasi-periodic wobble so that no two hours share a break-even price. All
//! values are synthetic.

use crate::model::{
    fit_head_curve, Contract, ExogenousSeries, HeadCurve, HeadFit, InitialState, ModelError,
    StepRange, SystemParams,
};
use crate::policy::{rollout, PolicyError};
use crate::pricer::{solve_contract_price, BisectionConfig, PricerError};
use std::f64::consts::PI;

/// Hours in the bundled fixture months (January and February 2023).
pub const MONTH_HOURS: [usize; 2] = [744, 672];

pub const REFERENCE_VOLUME: f64 = 1.2e10;
pub const REFERENCE_HEAD: f64 = 150.0;
pub const HEAD_EXPONENT: f64 = 0.35;

pub fn price(hour: usize) -> f64 {
    let t = hour as f64;
    let h = (hour % 24) as f64;
    let d = (hour / 24) as f64;
    let p = 42.0
        + 12.0 * (2.0 * PI * (h - 13.0) / 24.0).sin()
        + 6.0 * (2.0 * PI * d / 7.0).cos()
        + 4.0 * (1.7 * t + 0.3).sin() * (0.11 * t).cos();
    p.max(5.0)
}

pub fn capacity_factor(hour: usize) -> f64 {
    let h = (hour % 24) as f64;
    let d = (hour / 24) as f64;
    if !(6.0..=18.0).contains(&h) {
        return 0.0;
    }
    let shape = (PI * (h - 6.0) / 12.0).sin().max(0.0).powf(1.5);
    (shape * (0.82 + 0.12 * (2.0 * PI * d / 9.0).cos())).clamp(0.0, 1.0)
}

/// Daily inflow volume, m³ per day.
pub fn daily_inflow(day: usize) -> f64 {
    7200.0 + 1800.0 * (2.0 * PI * day as f64 / 30.0).sin()
}

/// `len` hourly steps starting at `start_hour`.
pub fn series(start_hour: usize, len: usize) -> ExogenousSeries {
    let hours = start_hour..start_hour + len;
    ExogenousSeries {
        lambda: hours.clone().map(price).collect(),
        alpha: hours.clone().map(capacity_factor).collect(),
        inflow: hours.map(|h| daily_inflow(h / 24) / 24.0).collect(),
    }
}

pub fn initial_state() -> InitialState {
    InitialState {
        v0: REFERENCE_VOLUME,
        u0: 400.0,
    }
}

/// Generating curve of the synthetic head table.
pub fn true_head_curve() -> HeadCurve {
    let a = REFERENCE_HEAD / REFERENCE_VOLUME.powf(HEAD_EXPONENT);
    HeadCurve::new(a, HEAD_EXPONENT, 2e9, 3.6e10).expect("fixture curve is valid")
}

/// 25 (volume, head) points from the generating curve with a ±1% ripple.
pub fn head_table() -> Vec<(f64, f64)> {
    let c = true_head_curve();
    (0..25)
        .map(|i| {
            let v = 2e9 + (3.6e10 - 2e9) * i as f64 / 24.0;
            let ripple = 1.0 + 0.01 * (3.0 * i as f64).sin();
            (v, c.a * v.powf(c.b) * ripple)
        })
        .collect()
}

pub fn fitted_head() -> Result<HeadFit, ModelError> {
    fit_head_curve(&head_table())
}

/// A contract volume the rollout can hit exactly, strictly between `sigma(hi)` and `sigma(0)`.
///
/// Takes the widest gap between consecutive break-even prices in the middle half of the
/// span and returns the release at its midpoint, where `sigma` is locally flat.
pub fn reachable_target(
    series: &ExogenousSeries,
    span: StepRange,
    initial: &InitialState,
    params: &SystemParams,
    curve: &HeadCurve,
) -> Result<f64, PolicyError> {
    let probe = rollout(0.0, series, span, initial, params, curve)?;
    let mut hats: Vec<f64> = probe.records.iter().map(|r| r.theta_hat).collect();
    hats.sort_by(f64::total_cmp);
    let n = hats.len();
    let (q1, q3) = (n / 4, (3 * n / 4).max(n / 4 + 1).min(n - 1));
    let mut best = (0.0, 0.5 * (hats[0] + hats[n - 1]));
    for w in hats[q1..=q3].windows(2) {
        if w[1] - w[0] > best.0 {
            best = (w[1] - w[0], 0.5 * (w[0] + w[1]));
        }
    }
    Ok(rollout(best.1, series, span, initial, params, curve)?.total_release)
}

/// Calendar-month spans of the bundled fixture.
pub fn month_spans() -> Vec<StepRange> {
    let mut start = 0;
    MONTH_HOURS
        .iter()
        .map(|&len| {
            let span = StepRange::new(start, start + len);
            start += len;
            span
        })
        .collect()
}

/// Fixture contracts: each month's target is reachable from the state left by pricing the
/// previous month.
pub fn contracts(
    series: &ExogenousSeries,
    spans: &[StepRange],
    initial: &InitialState,
    params: &SystemParams,
    curve: &HeadCurve,
) -> Result<Vec<Contract>, PricerError> {
    let mut state = *initial;
    let mut out = Vec::with_capacity(spans.len());
    for &span in spans {
        let target = reachable_target(series, span, &state, params, curve)?;
        let contract = Contract::new(target, span);
        let sol = solve_contract_price(
            series,
            &contract,
            &state,
            params,
            curve,
            &BisectionConfig::default(),
        )?;
        state = sol.trajectory.terminal_state();
        out.push(contract);
    }
    Ok(out)
}
