//! Adaptive Runge–Kutta–Fehlberg 4(5) integration with dense output.
//!
//! Steps are controlled by the embedded fourth-order error estimate and the
//! fifth-order solution is propagated. Every accepted step stores a knot
//! `(t, x, dx/dt)`; between knots the solution is reconstructed by cubic
//! Hermite interpolation, which needs no extra field evaluations.
//!
//! Integration may run backward in time, and a segment that ended by reaching
//! its target can be extended later with [`Segment::extend_to`].

use std::fmt;

use crate::error::{Error, Result};
use crate::state::{ExtendedState, StateVector};

/// Anything the integrator can advance: a fixed-length array of reals with
/// optional physical observables used by the stop conditions.
pub trait Phase: Copy + Send + Sync {
    type Array: Copy + AsRef<[f64]> + AsMut<[f64]> + Send + Sync + fmt::Debug;

    fn to_array(&self) -> Self::Array;
    fn from_array(a: &Self::Array) -> Self;

    /// Largest particle speed, compared against [`StopCondition::v_threshold`].
    fn max_speed(&self) -> f64 {
        0.0
    }

    /// Distance between the charges, compared against
    /// [`StopCondition::min_separation`].
    fn separation(&self) -> f64 {
        f64::INFINITY
    }
}

impl<const N: usize> Phase for [f64; N] {
    type Array = [f64; N];

    fn to_array(&self) -> Self::Array {
        *self
    }

    fn from_array(a: &Self::Array) -> Self {
        *a
    }
}

impl Phase for StateVector {
    type Array = [f64; 12];

    fn to_array(&self) -> Self::Array {
        StateVector::to_array(self)
    }

    fn from_array(a: &Self::Array) -> Self {
        StateVector::from_array(a)
    }

    fn max_speed(&self) -> f64 {
        StateVector::max_speed(self)
    }

    fn separation(&self) -> f64 {
        StateVector::separation(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { abs: 1e-9, rel: 1e-9 }
    }
}

impl Tolerances {
    pub fn new(abs: f64, rel: f64) -> Result<Self> {
        if !(abs > 0.0 && rel > 0.0 && abs.is_finite() && rel.is_finite()) {
            return Err(Error::validation("tolerances", "must be positive and finite"));
        }
        Ok(Self { abs, rel })
    }
}

/// When to end an integration before its target time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCondition {
    /// Stop once the faster charge reaches this speed.
    pub v_threshold: f64,
    /// Stop once the charges come this close.
    pub min_separation: f64,
    /// Largest `|t|` the integration may reach.
    pub t_limit: f64,
}

impl Default for StopCondition {
    fn default() -> Self {
        Self {
            v_threshold: 0.8,
            min_separation: 1e-3,
            t_limit: 1e7,
        }
    }
}

impl StopCondition {
    pub fn new(v_threshold: f64, min_separation: f64, t_limit: f64) -> Result<Self> {
        if !(v_threshold > 0.0 && v_threshold < 1.0) {
            return Err(Error::validation("v_threshold", format!("{v_threshold} must lie in (0, 1)")));
        }
        if !(min_separation > 0.0) || !min_separation.is_finite() {
            return Err(Error::validation("min_separation", "must be positive"));
        }
        if !(t_limit > 0.0) || !t_limit.is_finite() {
            return Err(Error::validation("t_limit", "must be positive and finite"));
        }
        Ok(Self {
            v_threshold,
            min_separation,
            t_limit,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminationReason {
    /// The requested target time (or the time limit) was reached.
    TimeLimit,
    SpeedThreshold,
    SeparationFloor,
    StepUnderflow,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminationReason::TimeLimit => "time_limit",
            TerminationReason::SpeedThreshold => "speed_threshold",
            TerminationReason::SeparationFloor => "separation_floor",
            TerminationReason::StepUnderflow => "step_underflow",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Termination {
    pub reason: TerminationReason,
    pub time: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Knot<A> {
    pub t: f64,
    pub x: A,
    pub dx: A,
}

/// Dense solution of one autonomous system, starting at `t = 0`.
#[derive(Debug, Clone)]
pub struct Segment<S: Phase> {
    knots: Vec<Knot<S::Array>>,
    direction: f64,
    next_step: f64,
    tol: Tolerances,
    stop: StopCondition,
    termination: Termination,
    evaluations: usize,
}

/// A failed integration together with everything computed before the failure.
#[derive(Debug, Clone)]
pub struct IntegrationFailure<S: Phase> {
    pub error: Error,
    pub partial: Segment<S>,
}

impl<S: Phase> fmt::Display for IntegrationFailure<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after t = {})", self.error, self.partial.t_end())
    }
}

impl<S: Phase + fmt::Debug> std::error::Error for IntegrationFailure<S> {}

// Fehlberg 4(5) tableau. The fields are autonomous, so the stage nodes
// (0, 1/4, 3/8, 12/13, 1, 1/2) never appear explicitly.
const A: [[f64; 5]; 6] = [
    [0.0; 5],
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
];
const B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];
const B4: [f64; 6] = [
    25.0 / 216.0,
    0.0,
    1408.0 / 2565.0,
    2197.0 / 4104.0,
    -0.2,
    0.0,
];

const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 5.0;
const MIN_SHRINK: f64 = 0.2;
/// Time resolution of the stop-event refinement.
pub const EVENT_RESOLUTION: f64 = 1e-9;

fn underflow(h: f64, t: f64) -> bool {
    h.abs() < 1e-12 * t.abs().max(1.0)
}

fn axpy<A: AsRef<[f64]> + AsMut<[f64]>>(out: &mut A, w: f64, k: &A) {
    if w == 0.0 {
        return;
    }
    for (o, ki) in out.as_mut().iter_mut().zip(k.as_ref()) {
        *o += w * ki;
    }
}

fn hermite<A: Copy + AsRef<[f64]> + AsMut<[f64]>>(k0: &Knot<A>, k1: &Knot<A>, t: f64) -> A {
    let h = k1.t - k0.t;
    let s = (t - k0.t) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = (s3 - 2.0 * s2 + s) * h;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = (s3 - s2) * h;
    let mut out = k0.x;
    let o = out.as_mut();
    let (y0, f0, y1, f1) = (k0.x.as_ref(), k0.dx.as_ref(), k1.x.as_ref(), k1.dx.as_ref());
    for i in 0..o.len() {
        o[i] = h00 * y0[i] + h10 * f0[i] + h01 * y1[i] + h11 * f1[i];
    }
    out
}

fn hermite_derivative<A: Copy + AsRef<[f64]> + AsMut<[f64]>>(k0: &Knot<A>, k1: &Knot<A>, t: f64) -> A {
    let h = k1.t - k0.t;
    let s = (t - k0.t) / h;
    let s2 = s * s;
    let d00 = (6.0 * s2 - 6.0 * s) / h;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d01 = (-6.0 * s2 + 6.0 * s) / h;
    let d11 = 3.0 * s2 - 2.0 * s;
    let mut out = k0.dx;
    let o = out.as_mut();
    let (y0, f0, y1, f1) = (k0.x.as_ref(), k0.dx.as_ref(), k1.x.as_ref(), k1.dx.as_ref());
    for i in 0..o.len() {
        o[i] = d00 * y0[i] + d10 * f0[i] + d01 * y1[i] + d11 * f1[i];
    }
    out
}

impl<S: Phase> Segment<S> {
    fn start<F>(field: &F, x0: S, tol: Tolerances, stop: StopCondition, direction: f64) -> Result<Self>
    where
        F: Fn(&S) -> Result<S>,
    {
        let dx0 = field(&x0)?;
        Ok(Self {
            knots: vec![Knot {
                t: 0.0,
                x: x0.to_array(),
                dx: dx0.to_array(),
            }],
            direction,
            next_step: 0.0,
            tol,
            stop,
            termination: Termination {
                reason: TerminationReason::TimeLimit,
                time: 0.0,
            },
            evaluations: 1,
        })
    }

    pub fn knots(&self) -> &[Knot<S::Array>] {
        &self.knots
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    /// +1 for forward segments, −1 for backward ones.
    pub fn direction(&self) -> f64 {
        self.direction
    }

    pub fn t_start(&self) -> f64 {
        0.0
    }

    pub fn t_end(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.t)
    }

    /// `(min, max)` of the covered times.
    pub fn span(&self) -> (f64, f64) {
        let end = self.t_end();
        (end.min(0.0), end.max(0.0))
    }

    pub fn contains(&self, tau: f64) -> bool {
        let (lo, hi) = self.span();
        tau >= lo && tau <= hi
    }

    /// Number of field evaluations spent on this segment.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn initial_state(&self) -> S {
        S::from_array(&self.knots[0].x)
    }

    pub fn final_state(&self) -> S {
        S::from_array(&self.knots.last().expect("segment has a knot").x)
    }

    /// Largest speed over the stored knots.
    pub fn max_speed(&self) -> f64 {
        self.knots
            .iter()
            .map(|k| S::from_array(&k.x).max_speed())
            .fold(0.0, f64::max)
    }

    /// Index `i` with `tau` between knots `i` and `i + 1`.
    fn locate(&self, tau: f64) -> Result<usize> {
        if !self.contains(tau) {
            let (lo, hi) = self.span();
            return Err(Error::OutOfSpan { tau, lo, hi });
        }
        let key = tau * self.direction;
        let idx = self.knots.partition_point(|k| k.t * self.direction <= key);
        Ok(idx.saturating_sub(1).min(self.knots.len().saturating_sub(2)))
    }

    /// Interpolated state at `tau`. Knot times return the stored knot exactly.
    pub fn eval(&self, tau: f64) -> Result<S> {
        let i = self.locate(tau)?;
        if self.knots.len() == 1 {
            return Ok(S::from_array(&self.knots[0].x));
        }
        let (k0, k1) = (&self.knots[i], &self.knots[i + 1]);
        if tau == k0.t {
            return Ok(S::from_array(&k0.x));
        }
        if tau == k1.t {
            return Ok(S::from_array(&k1.x));
        }
        Ok(S::from_array(&hermite(k0, k1, tau)))
    }

    /// Time derivative of the interpolant at `tau`.
    pub fn eval_derivative(&self, tau: f64) -> Result<S> {
        let i = self.locate(tau)?;
        if self.knots.len() == 1 {
            return Ok(S::from_array(&self.knots[0].dx));
        }
        let (k0, k1) = (&self.knots[i], &self.knots[i + 1]);
        if tau == k0.t {
            return Ok(S::from_array(&k0.dx));
        }
        if tau == k1.t {
            return Ok(S::from_array(&k1.dx));
        }
        Ok(S::from_array(&hermite_derivative(k0, k1, tau)))
    }

    fn error_norm(&self, y0: &S::Array, y1: &S::Array, err: &S::Array) -> f64 {
        let mut worst: f64 = 0.0;
        for ((a, b), e) in y0.as_ref().iter().zip(y1.as_ref()).zip(err.as_ref()) {
            let scale = self.tol.abs + self.tol.rel * a.abs().max(b.abs());
            worst = worst.max(e.abs() / scale);
        }
        worst
    }

    fn initial_step<F>(&mut self, field: &F, remaining: f64) -> f64
    where
        F: Fn(&S) -> Result<S>,
    {
        let k = self.knots.last().expect("segment has a knot");
        let (y0, f0) = (k.x, k.dx);
        let scaled = |v: &S::Array| {
            let n = v.as_ref().len() as f64;
            let sum: f64 = v
                .as_ref()
                .iter()
                .zip(y0.as_ref())
                .map(|(vi, yi)| (vi / (self.tol.abs + self.tol.rel * yi.abs())).powi(2))
                .sum();
            (sum / n).sqrt()
        };
        let d0 = scaled(&y0);
        let d1 = scaled(&f0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(remaining);
        let mut y1 = y0;
        axpy(&mut y1, h0 * self.direction, &f0);
        self.evaluations += 1;
        let d2 = match field(&S::from_array(&y1)) {
            Ok(f1) => {
                let mut diff = f1.to_array();
                axpy(&mut diff, -1.0, &f0);
                scaled(&diff) / h0
            }
            Err(_) => return h0,
        };
        let dmax = d1.max(d2);
        if dmax <= 1e-15 {
            // nothing changes: one step covers the whole span
            return remaining;
        }
        let h1 = (0.01 / dmax).powf(0.2);
        (100.0 * h0).min(h1).min(remaining)
    }

    /// Attempts one step of signed size `h` from the last knot.
    /// Returns the new knot and the scaled error, or the field error.
    fn attempt<F>(&mut self, field: &F, h: f64) -> Result<(Knot<S::Array>, f64)>
    where
        F: Fn(&S) -> Result<S>,
    {
        let last = *self.knots.last().expect("segment has a knot");
        let y0 = last.x;
        let mut k: [S::Array; 6] = [last.dx; 6];
        for s in 1..6 {
            let mut ys = y0;
            for j in 0..s {
                axpy(&mut ys, h * A[s][j], &k[j]);
            }
            self.evaluations += 1;
            k[s] = field(&S::from_array(&ys))?.to_array();
        }
        let mut y1 = y0;
        let mut err = y0;
        err.as_mut().fill(0.0);
        for j in 0..6 {
            axpy(&mut y1, h * B5[j], &k[j]);
            axpy(&mut err, h * (B5[j] - B4[j]), &k[j]);
        }
        let scaled = self.error_norm(&y0, &y1, &err);
        if !scaled.is_finite() {
            return Ok((last, f64::INFINITY));
        }
        let x1 = S::from_array(&y1);
        if scaled <= 1.0 {
            self.evaluations += 1;
            let dx1 = field(&x1)?.to_array();
            return Ok((
                Knot {
                    t: last.t + h,
                    x: y1,
                    dx: dx1,
                },
                scaled,
            ));
        }
        Ok((
            Knot {
                t: last.t + h,
                x: y1,
                dx: y1,
            },
            scaled,
        ))
    }

    /// Signed distance of `x` past the first stop event it violates.
    fn violated(&self, x: &S) -> Option<TerminationReason> {
        if x.max_speed() >= self.stop.v_threshold {
            Some(TerminationReason::SpeedThreshold)
        } else if x.separation() <= self.stop.min_separation {
            Some(TerminationReason::SeparationFloor)
        } else {
            None
        }
    }

    /// Bisects the event inside the last step and truncates the segment there.
    fn refine_event<F>(&mut self, field: &F, reason: TerminationReason)
    where
        F: Fn(&S) -> Result<S>,
    {
        let n = self.knots.len();
        let (k0, k1) = (self.knots[n - 2], self.knots[n - 1]);
        let crossed = |t: f64| {
            let x = S::from_array(&hermite(&k0, &k1, t));
            match reason {
                TerminationReason::SpeedThreshold => x.max_speed() >= self.stop.v_threshold,
                _ => x.separation() <= self.stop.min_separation,
            }
        };
        let (mut before, mut after) = (k0.t, k1.t);
        while (after - before).abs() > EVENT_RESOLUTION {
            let mid = 0.5 * (before + after);
            if mid == before || mid == after {
                break;
            }
            if crossed(mid) {
                after = mid;
            } else {
                before = mid;
            }
        }
        if after != k1.t {
            let x = hermite(&k0, &k1, after);
            self.evaluations += 1;
            let dx = field(&S::from_array(&x))
                .map(|d| d.to_array())
                .unwrap_or_else(|_| hermite_derivative(&k0, &k1, after));
            self.knots[n - 1] = Knot { t: after, x, dx };
        }
        self.termination = Termination {
            reason,
            time: after,
        };
    }

    /// Continues the integration toward `target`; must lie in the segment's
    /// direction. A segment that ended on a stop event cannot be extended.
    pub fn extend_to<F>(&mut self, field: &F, target: f64) -> Result<()>
    where
        F: Fn(&S) -> Result<S>,
    {
        if self.termination.reason != TerminationReason::TimeLimit {
            return Err(Error::IntegrationStall {
                t: self.t_end(),
                step: 0.0,
            });
        }
        let limit = self.stop.t_limit;
        let target = target.clamp(-limit, limit);
        if (target - self.t_end()) * self.direction <= 0.0 {
            return Ok(());
        }
        if let Some(reason) = self.violated(&self.final_state()) {
            self.termination = Termination {
                reason,
                time: self.t_end(),
            };
            return Ok(());
        }
        if self.next_step == 0.0 {
            let remaining = (target - self.t_end()).abs();
            self.next_step = self.initial_step(field, remaining);
        }
        let mut last_field_error: Option<Error> = None;
        loop {
            let t = self.t_end();
            let remaining = (target - t) * self.direction;
            if remaining <= 0.0 {
                break;
            }
            let mut h = self.next_step.min(remaining);
            // avoid leaving a sliver before the target
            if remaining - h < 1e-10 * remaining.max(1.0) {
                h = remaining;
            }
            if underflow(h, t) {
                self.termination = Termination {
                    reason: TerminationReason::StepUnderflow,
                    time: t,
                };
                return Err(last_field_error.unwrap_or(Error::IntegrationStall { t, step: h }));
            }
            let step = h * self.direction;
            match self.attempt(field, step) {
                Err(e) => {
                    // a trial stage left the field's domain: retry smaller
                    last_field_error = Some(e);
                    self.next_step = h * 0.25;
                }
                Ok((knot, err)) if err <= 1.0 => {
                    last_field_error = None;
                    let factor = if err == 0.0 {
                        MAX_GROWTH
                    } else {
                        (SAFETY * err.powf(-0.2)).clamp(MIN_SHRINK, MAX_GROWTH)
                    };
                    self.next_step = h * factor;
                    let x1 = S::from_array(&knot.x);
                    let reached = if (target - knot.t) * self.direction <= 0.0 || h == remaining {
                        // land exactly on the target
                        Knot { t: target, ..knot }
                    } else {
                        knot
                    };
                    self.knots.push(reached);
                    if let Some(reason) = self.violated(&x1) {
                        self.refine_event(field, reason);
                        return Ok(());
                    }
                }
                Ok((_, err)) => {
                    let factor = if err.is_finite() {
                        (SAFETY * err.powf(-0.2)).clamp(MIN_SHRINK, 1.0)
                    } else {
                        MIN_SHRINK
                    };
                    self.next_step = h * factor;
                }
            }
        }
        self.termination = Termination {
            reason: TerminationReason::TimeLimit,
            time: self.t_end(),
        };
        Ok(())
    }
}

/// Integrates `dx/dt = field(x)` from `x0` at `t = 0` toward `t_target`
/// (either sign), honouring `stop`.
pub fn integrate<S, F>(
    field: &F,
    x0: S,
    t_target: f64,
    tol: Tolerances,
    stop: StopCondition,
) -> Result<Segment<S>, Box<IntegrationFailure<S>>>
where
    S: Phase,
    F: Fn(&S) -> Result<S>,
{
    let direction = if t_target < 0.0 { -1.0 } else { 1.0 };
    let mut seg = Segment::start(field, x0, tol, stop, direction).map_err(|error| {
        Box::new(IntegrationFailure {
            error,
            partial: Segment {
                knots: vec![Knot {
                    t: 0.0,
                    x: x0.to_array(),
                    dx: x0.to_array(),
                }],
                direction,
                next_step: 0.0,
                tol,
                stop,
                termination: Termination {
                    reason: TerminationReason::StepUnderflow,
                    time: 0.0,
                },
                evaluations: 1,
            },
        })
    })?;
    match seg.extend_to(field, t_target) {
        Ok(()) => Ok(seg),
        Err(error) => Err(Box::new(IntegrationFailure {
            error,
            partial: seg,
        })),
    }
}

/// How accelerations are recovered from a flow.
#[derive(Clone, Copy)]
pub enum AccelMode<'a> {
    /// `(v(τ + Δτ) - v(τ)) / Δτ` on the dense output; a backward difference
    /// is used when `τ + Δτ` falls outside the segment.
    ForwardDifference { step: f64 },
    /// Evaluate the segment's own field at the interpolated state.
    Exact(&'a (dyn Fn(&StateVector) -> Result<StateVector> + Sync)),
}

/// Extended state `(r1, v1, a1, r2, v2, a2)` of the flow at `tau`.
pub fn eval_flow(seg: &Segment<StateVector>, tau: f64, mode: AccelMode<'_>) -> Result<ExtendedState> {
    let x = seg.eval(tau)?;
    let (a1, a2) = match mode {
        AccelMode::ForwardDifference { step } => {
            if !(step > 0.0) {
                return Err(Error::validation("finite-difference step", "must be positive"));
            }
            if seg.contains(tau + step) {
                let ahead = seg.eval(tau + step)?;
                ((ahead.v1 - x.v1) / step, (ahead.v2 - x.v2) / step)
            } else {
                let behind = seg.eval(tau - step)?;
                ((x.v1 - behind.v1) / step, (x.v2 - behind.v2) / step)
            }
        }
        AccelMode::Exact(field) => {
            let dx = field(&x)?;
            (dx.v1, dx.v2)
        }
    };
    Ok(ExtendedState::from_parts(&x, a1, a2))
}
