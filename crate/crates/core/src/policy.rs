//! Closed-form single-step dispatch at a fixed water price, and the sequential
//! rollout that chains reservoir state through a horizon.

use crate::model::{
    DispatchRecord, ExogenousSeries, HeadCurve, InitialState, ModelError, StepRange, SystemParams,
    Trajectory, J_PER_MWH,
};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("negative price {lambda} at step {t} is not supported by the closed-form policy")]
    NegativePrice { t: usize, lambda: f64 },
    #[error("zero hydraulic head at step {t} (volume {v_prev} m3)")]
    DegenerateHead { t: usize, v_prev: f64 },
    #[error("invalid input at step {t}: {reason}")]
    InvalidInput { t: usize, reason: String },
    #[error("negative water price {0}")]
    NegativeTheta(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Everything the step-`t` decision is allowed to see.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInput {
    pub t: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub inflow: f64,
    pub v_prev: f64,
    pub u_prev: f64,
}

impl StepInput {
    fn check(&self, params: &SystemParams) -> Result<(), PolicyError> {
        if !(self.lambda >= 0.0) {
            return Err(PolicyError::NegativePrice {
                t: self.t,
                lambda: self.lambda,
            });
        }
        let reason = if !(0.0..=1.0).contains(&self.alpha) {
            Some(format!("capacity factor {} outside [0, 1]", self.alpha))
        } else if !(self.inflow >= 0.0) {
            Some(format!("negative inflow {}", self.inflow))
        } else if !(self.u_prev >= params.u_min && self.u_prev <= params.u_max) {
            Some(format!(
                "previous release {} outside [{}, {}]",
                self.u_prev, params.u_min, params.u_max
            ))
        } else {
            None
        };
        match reason {
            Some(reason) => Err(PolicyError::InvalidInput { t: self.t, reason }),
            None => Ok(()),
        }
    }
}

/// Feasible release interval given the previous release: bounds and ramps combined.
pub fn release_box(params: &SystemParams, u_prev: f64) -> (f64, f64) {
    (
        (u_prev - params.ramp_down).max(params.u_min),
        (u_prev + params.ramp_up).min(params.u_max),
    )
}

/// `lambda * (h + s) - theta * u`, the relaxed per-step objective.
pub fn step_objective(theta: f64, lambda: f64, s: f64, h: f64, u: f64) -> f64 {
    lambda * (h + s) - theta * u
}

/// How the release of a step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReleaseRule {
    /// Threshold rule at water price `theta`.
    Price(f64),
    /// Top of the feasible release box.
    Max,
    /// Bottom of the feasible release box.
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub record: DispatchRecord,
    pub extrapolated: bool,
}

pub fn dispatch_with_rule(
    rule: ReleaseRule,
    input: &StepInput,
    params: &SystemParams,
    curve: &HeadCurve,
) -> Result<StepOutcome, PolicyError> {
    input.check(params)?;
    let head = curve.head(input.v_prev)?;
    if head.meters <= 0.0 {
        return Err(PolicyError::DegenerateHead {
            t: input.t,
            v_prev: input.v_prev,
        });
    }
    let per_m3 = params.eta * params.g * params.rho * head.meters;

    let s = (input.alpha * params.solar_capacity).min(params.transmission);
    let theta_hat = input.lambda * per_m3 / J_PER_MWH;
    let headroom = params.transmission - s;
    let (lo, hi) = release_box(params, input.u_prev);

    let u = match rule {
        ReleaseRule::Price(theta) => {
            let u_hat = if theta_hat > theta {
                headroom * J_PER_MWH / per_m3
            } else {
                0.0
            };
            lo.max(hi.min(u_hat))
        }
        ReleaseRule::Max => hi,
        ReleaseRule::Min => lo,
    };
    let v = input.v_prev + input.inflow - u;
    let h = headroom.min(per_m3 * u / J_PER_MWH);

    Ok(StepOutcome {
        record: DispatchRecord {
            t: input.t,
            s,
            h,
            u,
            v,
            theta_hat,
            revenue: input.lambda * (h + s),
        },
        extrapolated: head.extrapolated,
    })
}

/// Optimal single-step dispatch for water price `theta`.
///
/// Solar takes `min(alpha * S, P)`. Water is released up to the transmission
/// headroom when its break-even price `theta_hat = lambda * eta * g * rho * phi(v_prev) / 3.6e9`
/// strictly exceeds `theta`, otherwise down to the lower release envelope; the result is
/// clamped into the bound/ramp box. The head is always taken at the start-of-step volume.
pub fn dispatch_step(
    theta: f64,
    input: &StepInput,
    params: &SystemParams,
    curve: &HeadCurve,
) -> Result<DispatchRecord, PolicyError> {
    if !(theta >= 0.0) {
        return Err(PolicyError::NegativeTheta(theta));
    }
    dispatch_with_rule(ReleaseRule::Price(theta), input, params, curve).map(|o| o.record)
}

/// Runs [`dispatch_step`] over `span`, chaining volume and previous release.
pub fn rollout(
    theta: f64,
    series: &ExogenousSeries,
    span: StepRange,
    initial: &InitialState,
    params: &SystemParams,
    curve: &HeadCurve,
) -> Result<Trajectory, PolicyError> {
    if !(theta >= 0.0) {
        return Err(PolicyError::NegativeTheta(theta));
    }
    rollout_with(
        |_, _| ReleaseRule::Price(theta),
        series,
        span,
        initial,
        params,
        curve,
    )
}

/// Rollout where the release rule of each step is chosen by `rule(t, released_so_far)`.
pub fn rollout_with<F>(
    mut rule: F,
    series: &ExogenousSeries,
    span: StepRange,
    initial: &InitialState,
    params: &SystemParams,
    curve: &HeadCurve,
) -> Result<Trajectory, PolicyError>
where
    F: FnMut(usize, &StepState) -> ReleaseRule,
{
    series.check_span(span)?;
    let mut state = StepState {
        v_prev: initial.v0,
        u_prev: initial.u0,
        released: 0.0,
    };
    let mut records = Vec::with_capacity(span.len());
    let mut extrapolated = 0;
    for t in span.start..span.end {
        let input = StepInput {
            t,
            lambda: series.lambda[t],
            alpha: series.alpha[t],
            inflow: series.inflow[t],
            v_prev: state.v_prev,
            u_prev: state.u_prev,
        };
        let out = dispatch_with_rule(rule(t, &state), &input, params, curve)?;
        if out.extrapolated {
            extrapolated += 1;
        }
        state.v_prev = out.record.v;
        state.u_prev = out.record.u;
        state.released += out.record.u;
        records.push(out.record);
    }
    Ok(Trajectory::from_records(*initial, records, extrapolated))
}

/// Reservoir state entering a step during a rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepState {
    pub v_prev: f64,
    pub u_prev: f64,
    /// Release accumulated since the start of the rollout span.
    pub released: f64,
}
