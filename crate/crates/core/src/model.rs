//! Domain types for the coupled hydropower + floating-PV plant, the hydraulic
//! head curve and static feasibility checks.
//!
//! Every rate is a per-step quantity. A step is one hour: releases and ramps are
//! m³ per step, transmission and solar capacity are MWh per step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Joules per MWh.
pub const J_PER_MWH: f64 = 3.6e9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("negative volume {0} m3 passed to head curve")]
    NegativeVolume(f64),
    #[error("invalid head curve: {0}")]
    InvalidCurve(String),
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),
    #[error("non-positive data point ({volume}, {head}) at index {index}")]
    NonPositivePoint {
        index: usize,
        volume: f64,
        head: f64,
    },
    #[error("head fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate head fit: all volumes are equal")]
    DegenerateFit,
    #[error("series lengths differ: lambda={lambda}, alpha={alpha}, inflow={inflow}")]
    LengthMismatch {
        lambda: usize,
        alpha: usize,
        inflow: usize,
    },
    #[error("step range {start}..{end} is not inside a horizon of {len} steps")]
    SpanOutOfRange {
        start: usize,
        end: usize,
        len: usize,
    },
}

/// Physical and operational constants of the plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Generation efficiency.
    pub eta: f64,
    /// Gravitational acceleration, m/s².
    pub g: f64,
    /// Water density, kg/m³.
    pub rho: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
    /// Transmission capacity, MWh per step.
    pub transmission: f64,
    /// Installed solar capacity, MWh per step.
    pub solar_capacity: f64,
}

impl Default for SystemParams {
    /// Hoover + Glen Canyon aggregate with a hypothetical FPV array.
    fn default() -> Self {
        Self {
            eta: 0.775,
            g: 9.8,
            rho: 1000.0,
            u_min: 141.6,
            u_max: 707.9,
            ramp_up: 113.3,
            ramp_down: 70.4,
            transmission: 1300.0,
            solar_capacity: 1000.0,
        }
    }
}

impl SystemParams {
    pub fn j_per_mwh(&self) -> f64 {
        J_PER_MWH
    }

    /// MWh produced per m³ released at the given head.
    pub fn energy_per_m3(&self, head_m: f64) -> f64 {
        self.eta * self.g * self.rho * head_m / J_PER_MWH
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let finite = [
            self.eta,
            self.g,
            self.rho,
            self.u_min,
            self.u_max,
            self.ramp_up,
            self.ramp_down,
            self.transmission,
            self.solar_capacity,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            out.push("all parameters must be finite".to_string());
            return out;
        }
        if !(self.u_min >= 0.0 && self.u_min <= self.u_max) {
            out.push(format!(
                "release bounds must satisfy 0 <= u_min <= u_max (u_min={}, u_max={})",
                self.u_min, self.u_max
            ));
        }
        if self.ramp_up <= 0.0 || self.ramp_down <= 0.0 {
            out.push(format!(
                "ramp limits must be positive (up={}, down={})",
                self.ramp_up, self.ramp_down
            ));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            out.push(format!("efficiency must lie in (0, 1], got {}", self.eta));
        }
        if self.rho <= 0.0 || self.g <= 0.0 {
            out.push(format!(
                "density and gravity must be positive (rho={}, g={})",
                self.rho, self.g
            ));
        }
        if self.transmission < 0.0 || self.solar_capacity < 0.0 {
            out.push(format!(
                "capacities must be nonnegative (P={}, S={})",
                self.transmission, self.solar_capacity
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ModelError::InvalidParams(v.join("; ")))
        }
    }
}

/// Power-law hydraulic head `a * V^b` over a fitted volume range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadCurve {
    pub a: f64,
    pub b: f64,
    pub v_lo: f64,
    pub v_hi: f64,
}

/// A head evaluation, flagged when the volume is outside the fitted range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Head {
    pub meters: f64,
    pub extrapolated: bool,
}

impl HeadCurve {
    /// Builds a concave curve. Requires `a > 0`, `0 < b < 1` and `0 <= v_lo <= v_hi`.
    pub fn new(a: f64, b: f64, v_lo: f64, v_hi: f64) -> Result<Self, ModelError> {
        if !(a.is_finite() && a > 0.0) {
            return Err(ModelError::InvalidCurve(format!(
                "scale a must be positive, got {a}"
            )));
        }
        if !(b > 0.0 && b < 1.0) {
            return Err(ModelError::InvalidCurve(format!(
                "exponent b must lie in (0, 1), got {b}"
            )));
        }
        if !(v_lo >= 0.0 && v_lo <= v_hi && v_hi.is_finite()) {
            return Err(ModelError::InvalidCurve(format!(
                "fitted range must satisfy 0 <= v_lo <= v_hi, got [{v_lo}, {v_hi}]"
            )));
        }
        Ok(Self { a, b, v_lo, v_hi })
    }

    /// Constant head (`b = 0`). Only for checking the constant-head monotonicity
    /// property and for oracle comparisons; production curves go through [`HeadCurve::new`].
    #[doc(hidden)]
    pub fn constant(head_m: f64) -> Self {
        assert!(head_m > 0.0, "constant head must be positive");
        Self {
            a: head_m,
            b: 0.0,
            v_lo: 0.0,
            v_hi: f64::INFINITY,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.b == 0.0
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.v_lo && v <= self.v_hi
    }

    pub fn head(&self, v: f64) -> Result<Head, ModelError> {
        if v < 0.0 || v.is_nan() {
            return Err(ModelError::NegativeVolume(v));
        }
        let meters = if self.b == 0.0 {
            self.a
        } else {
            self.a * v.powf(self.b)
        };
        Ok(Head {
            meters,
            extrapolated: !self.contains(v),
        })
    }
}

/// Head evaluated at `v`, see [`HeadCurve::head`].
pub fn head(curve: &HeadCurve, v: f64) -> Result<Head, ModelError> {
    curve.head(v)
}

/// Result of fitting a power-law head curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadFit {
    pub curve: HeadCurve,
    /// Coefficient of determination computed on the original (not log) scale.
    pub r_squared: f64,
}

/// Least-squares fit of `log(head) = log(a) + b log(volume)`.
pub fn fit_head_curve(points: &[(f64, f64)]) -> Result<HeadFit, ModelError> {
    if points.len() < 3 {
        return Err(ModelError::TooFewPoints(points.len()));
    }
    for (index, &(volume, head)) in points.iter().enumerate() {
        if !(volume > 0.0 && head > 0.0 && volume.is_finite() && head.is_finite()) {
            return Err(ModelError::NonPositivePoint {
                index,
                volume,
                head,
            });
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    if sxx <= f64::EPSILON * n * x_mean.abs().max(1.0) {
        return Err(ModelError::DegenerateFit);
    }
    let b = sxy / sxx;
    let a = (y_mean - b * x_mean).exp();

    let v_lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let v_hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);

    let h_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - h_mean).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|p| (p.1 - a * p.0.powf(b)).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };

    let curve = HeadCurve::new(a, b, v_lo, v_hi)?;
    Ok(HeadFit { curve, r_squared })
}

/// Upper bound on hydro energy (MWh) for releasing `u` m³ with the reservoir at `v_prev`.
pub fn max_hydro_energy(
    params: &SystemParams,
    curve: &HeadCurve,
    v_prev: f64,
    u: f64,
) -> Result<f64, ModelError> {
    let head = curve.head(v_prev)?;
    Ok(params.energy_per_m3(head.meters) * u)
}

/// Hourly exogenous inputs over a horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogenousSeries {
    /// Electricity price, $/MWh.
    pub lambda: Vec<f64>,
    /// Solar capacity factor in [0, 1].
    pub alpha: Vec<f64>,
    /// Inflow, m³ per step.
    pub inflow: Vec<f64>,
}

impl ExogenousSeries {
    pub fn new(lambda: Vec<f64>, alpha: Vec<f64>, inflow: Vec<f64>) -> Result<Self, ModelError> {
        if lambda.len() != alpha.len() || lambda.len() != inflow.len() {
            return Err(ModelError::LengthMismatch {
                lambda: lambda.len(),
                alpha: alpha.len(),
                inflow: inflow.len(),
            });
        }
        Ok(Self {
            lambda,
            alpha,
            inflow,
        })
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn slice(&self, span: StepRange) -> Self {
        Self {
            lambda: self.lambda[span.start..span.end].to_vec(),
            alpha: self.alpha[span.start..span.end].to_vec(),
            inflow: self.inflow[span.start..span.end].to_vec(),
        }
    }

    pub fn check_span(&self, span: StepRange) -> Result<(), ModelError> {
        if span.start <= span.end && span.end <= self.len() {
            Ok(())
        } else {
            Err(ModelError::SpanOutOfRange {
                start: span.start,
                end: span.end,
                len: self.len(),
            })
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.lambda.len() != self.alpha.len() || self.lambda.len() != self.inflow.len() {
            out.push(format!(
                "series lengths differ: lambda={}, alpha={}, inflow={}",
                self.lambda.len(),
                self.alpha.len(),
                self.inflow.len()
            ));
            return out;
        }
        if let Some(t) = self
            .lambda
            .iter()
            .position(|x| !(*x >= 0.0) || !x.is_finite())
        {
            out.push(format!(
                "price at step {t} is negative or not finite: {}",
                self.lambda[t]
            ));
        }
        if let Some(t) = self.alpha.iter().position(|x| !(0.0..=1.0).contains(x)) {
            out.push(format!(
                "capacity factor at step {t} outside [0, 1]: {}",
                self.alpha[t]
            ));
        }
        if let Some(t) = self
            .inflow
            .iter()
            .position(|x| !(*x >= 0.0) || !x.is_finite())
        {
            out.push(format!(
                "inflow at step {t} is negative or not finite: {}",
                self.inflow[t]
            ));
        }
        out
    }
}

/// Half-open step range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRange {
    pub start: usize,
    pub end: usize,
}

impl StepRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    /// Reservoir volume at the start of the horizon, m³.
    pub v0: f64,
    /// Release in the step preceding the horizon, m³.
    pub u0: f64,
}

/// Total release `target` that must be delivered over `span`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub target: f64,
    pub span: StepRange,
}

impl Contract {
    pub fn new(target: f64, span: StepRange) -> Self {
        Self { target, span }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispatchRecord {
    /// Global step index.
    pub t: usize,
    /// Solar dispatch, MWh.
    pub s: f64,
    /// Hydro dispatch, MWh.
    pub h: f64,
    /// Release, m³.
    pub u: f64,
    /// End-of-step volume, m³.
    pub v: f64,
    /// Break-even water price at this step, $/m³.
    pub theta_hat: f64,
    /// `lambda_t * (h + s)`, $.
    pub revenue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: InitialState,
    pub records: Vec<DispatchRecord>,
    pub total_revenue: f64,
    pub total_release: f64,
    /// Steps whose head was evaluated outside the fitted volume range.
    pub extrapolated_steps: usize,
}

impl Trajectory {
    pub fn from_records(
        initial: InitialState,
        records: Vec<DispatchRecord>,
        extrapolated_steps: usize,
    ) -> Self {
        let total_revenue = records.iter().map(|r| r.revenue).sum();
        let total_release = records.iter().map(|r| r.u).sum();
        Self {
            initial,
            records,
            total_revenue,
            total_release,
            extrapolated_steps,
        }
    }

    /// State after the last record, used to seed the following contract period.
    pub fn terminal_state(&self) -> InitialState {
        match self.records.last() {
            Some(r) => InitialState { v0: r.v, u0: r.u },
            None => self.initial,
        }
    }

    /// Relative mass-balance error `|v_T - (v0 + sum(I) - sum(u))| / max(1, |v_T|)`.
    pub fn mass_balance_error(&self, inflow: &[f64]) -> f64 {
        let Some(last) = self.records.last() else {
            return 0.0;
        };
        let inflow_total: f64 = self.records.iter().map(|r| inflow[r.t]).sum();
        let expected = self.initial.v0 + inflow_total - self.total_release;
        (last.v - expected).abs() / last.v.abs().max(1.0)
    }

    /// Largest ramp-chain violation in m³ (0 when every step respects its ramp limits).
    pub fn max_ramp_violation(&self, params: &SystemParams) -> f64 {
        let mut prev = self.initial.u0;
        let mut worst: f64 = 0.0;
        for r in &self.records {
            let d = r.u - prev;
            worst = worst.max(d - params.ramp_up).max(-params.ramp_down - d);
            prev = r.u;
        }
        worst
    }
}

/// Outcome of [`validate_inputs`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub violations: Vec<String>,
    /// `U - T * u_min`, m³.
    pub lower_margin: f64,
    /// `T * u_max - U`, m³.
    pub upper_margin: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks type invariants and the ramp-free contract condition `T*u_min <= U <= T*u_max`.
pub fn validate_inputs(
    params: &SystemParams,
    series: &ExogenousSeries,
    contract: &Contract,
    initial: &InitialState,
) -> FeasibilityReport {
    let mut violations = params.violations();
    violations.extend(series.violations());

    if contract.span.is_empty() {
        violations.push("contract span is empty".to_string());
    }
    if contract.span.end > series.len() {
        violations.push(format!(
            "contract span {}..{} exceeds horizon of {} steps",
            contract.span.start,
            contract.span.end,
            series.len()
        ));
    }
    if !(contract.target >= 0.0) {
        violations.push(format!(
            "contract target must be nonnegative, got {}",
            contract.target
        ));
    }
    if !(initial.v0 > 0.0) {
        violations.push(format!(
            "initial volume must be positive, got {}",
            initial.v0
        ));
    }
    if !(initial.u0 >= params.u_min && initial.u0 <= params.u_max) {
        violations.push(format!(
            "initial release {} outside [{}, {}]",
            initial.u0, params.u_min, params.u_max
        ));
    }

    let steps = contract.span.len() as f64;
    let lower_margin = contract.target - steps * params.u_min;
    let upper_margin = steps * params.u_max - contract.target;
    if lower_margin < 0.0 {
        violations.push("contract is below the minimum releasable volume".to_string());
    }
    if upper_margin < 0.0 {
        violations.push("contract exceeds maximum releasable volume".to_string());
    }

    FeasibilityReport {
        violations,
        lower_margin,
        upper_margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_series(n: usize) -> ExogenousSeries {
        ExogenousSeries::new(vec![40.0; n], vec![0.5; n], vec![100.0; n]).unwrap()
    }

    #[test]
    fn head_zero_and_hand_value() {
        let c = HeadCurve::new(2.0, 0.5, 1.0, 10.0).unwrap();
        assert_eq!(c.head(0.0).unwrap().meters, 0.0);
        assert!(c.head(0.0).unwrap().extrapolated);
        let h = c.head(4.0).unwrap();
        assert_eq!(h.meters, 4.0);
        assert!(!h.extrapolated);
        assert!(c.head(11.0).unwrap().extrapolated);
    }

    #[test]
    fn head_rejects_negative_volume() {
        let c = HeadCurve::new(2.0, 0.5, 1.0, 10.0).unwrap();
        assert_eq!(c.head(-1.0), Err(ModelError::NegativeVolume(-1.0)));
    }

    #[test]
    fn curve_requires_concave_exponent() {
        assert!(HeadCurve::new(2.0, 0.0, 0.0, 1.0).is_err());
        assert!(HeadCurve::new(2.0, 1.0, 0.0, 1.0).is_err());
        assert!(HeadCurve::new(-2.0, 0.5, 0.0, 1.0).is_err());
        assert!(HeadCurve::new(2.0, 0.5, 5.0, 1.0).is_err());
    }

    #[test]
    fn fit_recovers_exact_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 4.0, 9.0, 25.0, 100.0]
            .iter()
            .map(|&v: &f64| (v, 2.0 * v.sqrt()))
            .collect();
        let fit = fit_head_curve(&pts).unwrap();
        assert!((fit.curve.a - 2.0).abs() / 2.0 < 1e-9);
        assert!((fit.curve.b - 0.5).abs() / 0.5 < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.curve.v_lo, 1.0);
        assert_eq!(fit.curve.v_hi, 100.0);

        let mut dup = pts.clone();
        dup.push(pts[2]);
        let fit2 = fit_head_curve(&dup).unwrap();
        assert!((fit2.curve.a - fit.curve.a).abs() < 1e-9);
        assert!((fit2.curve.b - fit.curve.b).abs() < 1e-9);
    }

    #[test]
    fn fit_errors() {
        assert_eq!(
            fit_head_curve(&[(1.0, 1.0), (2.0, 2.0)]),
            Err(ModelError::TooFewPoints(2))
        );
        assert!(matches!(
            fit_head_curve(&[(1.0, 1.0), (0.0, 2.0), (3.0, 3.0)]),
            Err(ModelError::NonPositivePoint { index: 1, .. })
        ));
        assert!(matches!(
            fit_head_curve(&[(1.0, 1.0), (2.0, -2.0), (3.0, 3.0)]),
            Err(ModelError::NonPositivePoint { index: 1, .. })
        ));
        assert_eq!(
            fit_head_curve(&[(5.0, 1.0), (5.0, 2.0), (5.0, 3.0)]),
            Err(ModelError::DegenerateFit)
        );
    }

    #[test]
    fn hydro_energy_hand_value() {
        let p = SystemParams::default();
        let c = HeadCurve::constant(150.0);
        assert_eq!(max_hydro_energy(&p, &c, 1e9, 0.0).unwrap(), 0.0);
        // 0.775 * 9.8 * 1000 * 150 * 707.9 / 3.6e9 = 0.22402085...
        let e = max_hydro_energy(&p, &c, 1e9, 707.9).unwrap();
        assert!((e - 0.224_020_854_166_666_7).abs() < 1e-12, "{e}");
        let e2 = max_hydro_energy(&p, &c, 1e9, 2.0 * 707.9).unwrap();
        assert!((e2 - 2.0 * e).abs() < 1e-15);
    }

    #[test]
    fn default_params_are_valid() {
        let p = SystemParams::default();
        assert!(p.validate().is_ok());
        assert_eq!(p.j_per_mwh(), 3.6e9);
        let bad = SystemParams { u_min: 800.0, ..p };
        assert!(bad.validate().is_err());
        let bad = SystemParams { eta: 1.5, ..p };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn contract_at_lower_bound_is_feasible_with_zero_margin() {
        let p = SystemParams::default();
        let s = sample_series(10);
        let c = Contract::new(10.0 * p.u_min, StepRange::new(0, 10));
        let r = validate_inputs(
            &p,
            &s,
            &c,
            &InitialState {
                v0: 1e10,
                u0: 400.0,
            },
        );
        assert!(r.is_feasible(), "{:?}", r.violations);
        assert_eq!(r.lower_margin, 0.0);
    }

    #[test]
    fn contract_above_upper_bound_is_reported() {
        let p = SystemParams::default();
        let s = sample_series(10);
        let c = Contract::new(10.0 * p.u_max + 1.0, StepRange::new(0, 10));
        let r = validate_inputs(
            &p,
            &s,
            &c,
            &InitialState {
                v0: 1e10,
                u0: 400.0,
            },
        );
        assert!(r
            .violations
            .iter()
            .any(|v| v == "contract exceeds maximum releasable volume"));
    }

    #[test]
    fn month_contract_with_table_defaults() {
        // 141.6 * 730 = 103368 <= 292000 <= 516767 = 707.9 * 730
        let p = SystemParams::default();
        let s = sample_series(730);
        let c = Contract::new(730.0 * 400.0, StepRange::new(0, 730));
        let r = validate_inputs(
            &p,
            &s,
            &c,
            &InitialState {
                v0: 1e10,
                u0: 400.0,
            },
        );
        assert!(r.is_feasible());
        assert!((r.lower_margin - (292_000.0 - 103_368.0)).abs() < 1e-6);
        assert!((r.upper_margin - (516_767.0 - 292_000.0)).abs() < 1e-6);
    }

    #[test]
    fn validate_reports_bad_series_and_state() {
        let p = SystemParams::default();
        let s = ExogenousSeries::new(vec![-1.0, 2.0], vec![0.2, 1.2], vec![0.0, 1.0]).unwrap();
        let c = Contract::new(400.0, StepRange::new(0, 2));
        let r = validate_inputs(&p, &s, &c, &InitialState { v0: 0.0, u0: 10.0 });
        assert_eq!(r.violations.len(), 4, "{:?}", r.violations);
    }

    proptest! {
        #[test]
        fn head_is_monotone(a in 0.01f64..100.0, b in 0.01f64..0.99, v in 0.0f64..1e11, dv in 0.0f64..1e9) {
            let c = HeadCurve::new(a, b, 0.0, 1e11).unwrap();
            prop_assert!(c.head(v + dv).unwrap().meters >= c.head(v).unwrap().meters);
        }

        #[test]
        fn fit_recovers_random_power_law(a in 0.01f64..50.0, b in 0.05f64..0.95, v0 in 1.0f64..1e6, ratio in 1.5f64..1e4) {
            let pts: Vec<(f64, f64)> = (0..8)
                .map(|i| {
                    let v = v0 * ratio.powf(i as f64 / 7.0);
                    (v, a * v.powf(b))
                })
                .collect();
            let fit = fit_head_curve(&pts).unwrap();
            prop_assert!((fit.curve.a - a).abs() / a < 1e-9);
            prop_assert!((fit.curve.b - b).abs() / b < 1e-9);
        }

        #[test]
        fn hydro_energy_linear_in_u_and_monotone_in_volume(u in 0.0f64..1000.0, k in 0.0f64..4.0, v in 1.0f64..1e10, dv in 0.0f64..1e9) {
            let p = SystemParams::default();
            let c = HeadCurve::new(0.05, 0.35, 1.0, 1e11).unwrap();
            let e = max_hydro_energy(&p, &c, v, u).unwrap();
            let ek = max_hydro_energy(&p, &c, v, k * u).unwrap();
            prop_assert!((ek - k * e).abs() <= 1e-12 * (1.0 + ek.abs()));
            prop_assert!(max_hydro_energy(&p, &c, v + dv, u).unwrap() >= e);
        }
    }
}
