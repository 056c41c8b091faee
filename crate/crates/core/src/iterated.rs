//! The sequence of vector fields `H⁽ⁿ⁾`.
//!
//! `H⁽⁰⁾` is the instantaneous field. For `n ≥ 1`, `H⁽ⁿ⁾(X)` is built from the
//! level-`(n-1)` flow through `X`: the flow supplies the delayed positions,
//! velocities and accelerations of each charge at the roots of the light-cone
//! equations, and the equations of motion become explicit,
//!
//! ```text
//! η a1 = M11⁻¹ Σ_b w_b (F1_b - M12_b a2(τ2_b))
//!   a2 = M22⁻¹ Σ_b w_b (F2_b - M21_b a1(τ1_b))
//! ```
//!
//! with `b` running over the retarded and advanced branches.

use nalgebra::SVector;

use crate::delay::{self, DelayTimes, Particle};
use crate::error::{Error, Result};
use crate::forces::{self, Branch, FieldEvalInput};
use crate::instantaneous::{embed, h0_field_on, instantaneous_accels, project, KernelFn, KernelPath};
use crate::ode::{eval_flow, integrate, AccelMode, IntegrationFailure, Segment, StopCondition, Termination, Tolerances};
use crate::state::{ExtendedState, StateVector, Vec3};
use crate::units::SystemParams;

/// Flows of lower levels are integrated to this multiple of the present
/// separation before any root is sought.
pub const INITIAL_HORIZON: f64 = 2.0;

/// Numerical settings of one level of the hierarchy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelTolerances {
    pub integration: Tolerances,
    /// Residual tolerance of the light-cone roots.
    pub delay_tol: f64,
    /// Finite-difference step as a fraction of the present separation.
    pub dtau_factor: f64,
}

impl Default for LevelTolerances {
    fn default() -> Self {
        Self {
            integration: Tolerances::default(),
            delay_tol: delay::DEFAULT_DELAY_TOL,
            dtau_factor: 1e-3,
        }
    }
}

impl LevelTolerances {
    pub fn validate(&self) -> Result<()> {
        Tolerances::new(self.integration.abs, self.integration.rel)?;
        if !(self.delay_tol > 0.0 && self.delay_tol.is_finite()) {
            return Err(Error::validation("delay tolerance", "must be positive and finite"));
        }
        if !(self.dtau_factor > 0.0 && self.dtau_factor.is_finite()) {
            return Err(Error::validation("finite-difference factor", "must be positive and finite"));
        }
        Ok(())
    }
}

/// Reuse of lower-level flows inside one field evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CachePolicy {
    /// One backward and one forward flow serve all four roots.
    #[default]
    PerEvaluation,
    /// Every root and every delayed state gets a freshly integrated flow.
    None,
}

/// How the delayed accelerations are read off a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AccelSource {
    /// `(v(τ + Δτ) - v(τ)) / Δτ` on the dense output.
    #[default]
    ForwardDifference,
    /// The lower-level field evaluated at the delayed state.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelConfig {
    /// Level run by [`trajectory`] when driven from a configuration.
    pub level: usize,
    /// Settings used for flows of every level not listed in `overrides`.
    pub tolerances: LevelTolerances,
    /// `(level, settings)` pairs taking precedence over `tolerances`.
    pub overrides: Vec<(usize, LevelTolerances)>,
    pub cache: CachePolicy,
    pub accel: AccelSource,
    pub kernel_path: KernelPath,
    /// Speed threshold of the auxiliary lower-level flows.
    pub subflow_speed: f64,
}

impl Default for LevelConfig {
    fn default() -> Self {
        Self {
            level: 0,
            tolerances: LevelTolerances::default(),
            overrides: Vec::new(),
            cache: CachePolicy::default(),
            accel: AccelSource::default(),
            kernel_path: KernelPath::default(),
            subflow_speed: 0.99,
        }
    }
}

impl LevelConfig {
    pub fn new(level: usize) -> Self {
        Self {
            level,
            ..Self::default()
        }
    }

    pub fn tolerances_at(&self, level: usize) -> LevelTolerances {
        self.overrides
            .iter()
            .rev()
            .find(|(l, _)| *l == level)
            .map(|(_, t)| *t)
            .unwrap_or(self.tolerances)
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        for (_, t) in &self.overrides {
            t.validate()?;
        }
        if !(self.subflow_speed > 0.0 && self.subflow_speed < 1.0) {
            return Err(Error::validation("subflow speed", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn subflow_stop(&self) -> StopCondition {
        StopCondition {
            v_threshold: self.subflow_speed,
            min_separation: 1e-6,
            t_limit: 1e12,
        }
    }
}

/// Delayed data of one branch: each charge as seen from the other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchData {
    /// Offset at which charge 1 is seen by charge 2.
    pub tau1: f64,
    /// Offset at which charge 2 is seen by charge 1.
    pub tau2: f64,
    /// Flow state at `tau1`; only its charge-1 part is physical input.
    pub at_tau1: ExtendedState,
    /// Flow state at `tau2`; only its charge-2 part is physical input.
    pub at_tau2: ExtendedState,
}

/// Delayed data entering one field evaluation. Branches with zero weight are
/// never computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayedStates {
    pub retarded: Option<BranchData>,
    pub advanced: Option<BranchData>,
}

impl DelayedStates {
    /// The instantaneous limit: every delay is zero and the accelerations
    /// are the present ones.
    pub fn instantaneous(x: &ExtendedState, params: &SystemParams) -> Self {
        let data = BranchData {
            tau1: 0.0,
            tau2: 0.0,
            at_tau1: *x,
            at_tau2: *x,
        };
        Self {
            retarded: (params.retarded_weight() != 0.0).then_some(data),
            advanced: (params.advanced_weight() != 0.0).then_some(data),
        }
    }

    /// All four roots, when both branches were evaluated.
    pub fn delay_times(&self) -> Option<DelayTimes> {
        let (r, a) = (self.retarded?, self.advanced?);
        Some(DelayTimes {
            tau1_ret: r.tau1,
            tau2_ret: r.tau2,
            tau1_adv: a.tau1,
            tau2_adv: a.tau2,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldEvaluation {
    pub derivative: StateVector,
    pub delayed: DelayedStates,
}

/// `H⁽ⁿ⁾(X)`.
pub fn h_field(n: usize, x: &StateVector, params: &SystemParams, cfg: &LevelConfig) -> Result<StateVector> {
    if n == 0 {
        return h0_field_on(x, params, cfg.kernel_path);
    }
    h_field_detailed(n, x, params, cfg).map(|e| e.derivative)
}

/// `H⁽ⁿ⁾(X)` together with the delayed data it was assembled from.
pub fn h_field_detailed(
    n: usize,
    x: &StateVector,
    params: &SystemParams,
    cfg: &LevelConfig,
) -> Result<FieldEvaluation> {
    x.validate()?;
    if n == 0 {
        let acc = instantaneous_accels(x, params, cfg.kernel_path)?;
        let ext = ExtendedState::from_parts(x, acc.a1, acc.a2);
        return Ok(FieldEvaluation {
            derivative: StateVector::new(x.v1, acc.a1, x.v2, acc.a2),
            delayed: DelayedStates::instantaneous(&ext, params),
        });
    }
    let delayed = delayed_states(n, x, params, cfg).map_err(|e| e.at_level(n))?;
    let (a1, a2) = assemble(x, &delayed, params, cfg.kernel_path).map_err(|e| e.at_level(n))?;
    Ok(FieldEvaluation {
        derivative: StateVector::new(x.v1, a1, x.v2, a2),
        delayed,
    })
}

/// Lower-level flow from `x`, extended on demand.
struct Flow<'a> {
    level: usize,
    params: &'a SystemParams,
    cfg: &'a LevelConfig,
    segment: Segment<StateVector>,
}

impl<'a> Flow<'a> {
    fn field(&self) -> impl Fn(&StateVector) -> Result<StateVector> + Sync + 'a {
        let (level, params, cfg) = (self.level, self.params, self.cfg);
        move |y: &StateVector| h_field(level, y, params, cfg).map_err(|e| e.at_level(level))
    }

    fn new(level: usize, x: &StateVector, horizon: f64, params: &'a SystemParams, cfg: &'a LevelConfig) -> Result<Self> {
        let tol = cfg.tolerances_at(level).integration;
        let field = move |y: &StateVector| h_field(level, y, params, cfg).map_err(|e| e.at_level(level));
        let segment = match integrate(&field, *x, horizon, tol, cfg.subflow_stop()) {
            Ok(seg) => seg,
            // keep what was computed; the root may already be covered
            Err(failure) => {
                let IntegrationFailure { error, partial } = *failure;
                if partial.knots().len() < 2 {
                    return Err(error);
                }
                partial
            }
        };
        Ok(Self {
            level,
            params,
            cfg,
            segment,
        })
    }

    fn extend(&mut self, target: f64) -> Result<()> {
        let before = self.segment.t_end();
        let field = self.field();
        self.segment.extend_to(&field, target)?;
        if self.segment.t_end() == before {
            return Err(Error::FlowTooShort { needed: target });
        }
        Ok(())
    }

    fn root(&mut self, particle: Particle, r_other: &Vec3, branch: Branch, tol: f64) -> Result<f64> {
        loop {
            let attempt = match branch {
                Branch::Retarded => delay::solve_retarded(&self.segment, particle, r_other, tol),
                Branch::Advanced => delay::solve_advanced(&self.segment, particle, r_other, tol),
            };
            match attempt {
                Err(Error::FlowTooShort { needed }) => self.extend(needed)?,
                other => return other,
            }
        }
    }

    fn state_at(&mut self, tau: f64, dtau: f64, accel: AccelSource) -> Result<ExtendedState> {
        match accel {
            AccelSource::ForwardDifference => {
                if !self.segment.contains(tau + dtau) {
                    // a failed extension falls back to a backward difference
                    let _ = self.extend(tau + 2.0 * dtau);
                }
                eval_flow(&self.segment, tau, AccelMode::ForwardDifference { step: dtau })
            }
            AccelSource::Exact => {
                let field = self.field();
                eval_flow(&self.segment, tau, AccelMode::Exact(&field))
            }
        }
    }
}

fn branch_data(
    n: usize,
    x: &StateVector,
    branch: Branch,
    params: &SystemParams,
    cfg: &LevelConfig,
) -> Result<BranchData> {
    let lower = n - 1;
    let tol = cfg.tolerances_at(n).delay_tol;
    let separation = x.separation();
    let dtau = cfg.tolerances_at(n).dtau_factor * separation;
    let horizon = branch.sigma() * INITIAL_HORIZON * separation;
    let accel = cfg.accel;

    match cfg.cache {
        CachePolicy::PerEvaluation => {
            let mut flow = Flow::new(lower, x, horizon, params, cfg)?;
            let tau1 = flow.root(Particle::One, &x.r2, branch, tol)?;
            let tau2 = flow.root(Particle::Two, &x.r1, branch, tol)?;
            let at_tau1 = flow.state_at(tau1, dtau, accel)?;
            let at_tau2 = flow.state_at(tau2, dtau, accel)?;
            Ok(BranchData {
                tau1,
                tau2,
                at_tau1,
                at_tau2,
            })
        }
        CachePolicy::None => {
            let fresh = || Flow::new(lower, x, horizon, params, cfg);
            let tau1 = fresh()?.root(Particle::One, &x.r2, branch, tol)?;
            let tau2 = fresh()?.root(Particle::Two, &x.r1, branch, tol)?;
            let at_tau1 = fresh()?.state_at(tau1, dtau, accel).or_else(|_| {
                let mut f = fresh()?;
                f.root(Particle::One, &x.r2, branch, tol)?;
                f.state_at(tau1, dtau, accel)
            })?;
            let at_tau2 = fresh()?.state_at(tau2, dtau, accel).or_else(|_| {
                let mut f = fresh()?;
                f.root(Particle::Two, &x.r1, branch, tol)?;
                f.state_at(tau2, dtau, accel)
            })?;
            Ok(BranchData {
                tau1,
                tau2,
                at_tau1,
                at_tau2,
            })
        }
    }
}

fn delayed_states(n: usize, x: &StateVector, params: &SystemParams, cfg: &LevelConfig) -> Result<DelayedStates> {
    let want_ret = params.retarded_weight() != 0.0;
    let want_adv = params.advanced_weight() != 0.0;
    let ret = || want_ret.then(|| branch_data(n, x, Branch::Retarded, params, cfg)).transpose();
    let adv = || want_adv.then(|| branch_data(n, x, Branch::Advanced, params, cfg)).transpose();
    let (retarded, advanced) = if want_ret && want_adv {
        let (r, a) = rayon::join(ret, adv);
        (r?, a?)
    } else {
        (ret()?, adv()?)
    };
    Ok(DelayedStates { retarded, advanced })
}

/// Weighted `Σ_b w_b (F_b - M_b a_other(τ_b))` acting on each charge.
pub(crate) fn delayed_forces<const D: usize>(
    kern: KernelFn<D>,
    x: &StateVector,
    delayed: &DelayedStates,
    params: &SystemParams,
) -> Result<(SVector<f64, D>, SVector<f64, D>)> {
    let sign = params.sign();
    let (r1, v1) = (project::<D>(&x.r1), project::<D>(&x.v1));
    let (r2, v2) = (project::<D>(&x.r2), project::<D>(&x.v2));
    let mut on1 = SVector::<f64, D>::zeros();
    let mut on2 = SVector::<f64, D>::zeros();
    let branches = [
        (Branch::Retarded, params.retarded_weight(), delayed.retarded),
        (Branch::Advanced, params.advanced_weight(), delayed.advanced),
    ];
    for (branch, weight, data) in branches {
        if weight == 0.0 {
            continue;
        }
        let data = data.ok_or_else(|| Error::validation("delayed states", "missing data for a weighted branch"))?;
        let p2 = data.at_tau2.particle2();
        let k1 = kern(
            &FieldEvalInput {
                r_self: r1,
                v_self: v1,
                r_other: project(&p2.r),
                v_other: project(&p2.v),
                branch,
            },
            sign,
        )?;
        on1 += weight * k1.force(&project(&p2.a));
        let p1 = data.at_tau1.particle1();
        let k2 = kern(
            &FieldEvalInput {
                r_self: r2,
                v_self: v2,
                r_other: project(&p1.r),
                v_other: project(&p1.v),
                branch,
            },
            sign,
        )?;
        on2 += weight * k2.force(&project(&p1.a));
    }
    Ok((on1, on2))
}

fn assemble_in<const D: usize>(
    kern: KernelFn<D>,
    x: &StateVector,
    delayed: &DelayedStates,
    params: &SystemParams,
) -> Result<(Vec3, Vec3)> {
    let (f1, f2) = delayed_forces(kern, x, delayed, params)?;
    let m11inv = forces::mass_matrix_inverse_d(&project::<D>(&x.v1))?;
    let m22inv = forces::mass_matrix_inverse_d(&project::<D>(&x.v2))?;
    Ok((embed(&(m11inv * f1 / params.eta())), embed(&(m22inv * f2))))
}

fn planar_data(x: &StateVector, delayed: &DelayedStates) -> bool {
    let flat = |e: &ExtendedState| e.state().is_planar() && e.a1.z == 0.0 && e.a2.z == 0.0;
    let branch_flat = |b: &Option<BranchData>| b.is_none_or(|d| flat(&d.at_tau1) && flat(&d.at_tau2));
    x.is_planar() && branch_flat(&delayed.retarded) && branch_flat(&delayed.advanced)
}

/// Present accelerations from delayed data.
pub fn assemble(
    x: &StateVector,
    delayed: &DelayedStates,
    params: &SystemParams,
    path: KernelPath,
) -> Result<(Vec3, Vec3)> {
    if path == KernelPath::Auto && planar_data(x, delayed) {
        assemble_in::<2>(forces::planar_kernel, x, delayed, params)
    } else {
        assemble_in::<3>(forces::kernel, x, delayed, params)
    }
}

/// A level-`n` solution from a fixed initial state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: SystemParams,
    pub level: usize,
    pub segment: Segment<StateVector>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn initial_state(&self) -> StateVector {
        self.segment.initial_state()
    }

    pub fn state_at(&self, t: f64) -> Result<StateVector> {
        self.segment.eval(t)
    }

    pub fn span(&self) -> (f64, f64) {
        self.segment.span()
    }
}

/// Failed trajectory with the part computed before the failure, if any.
#[derive(Debug, Clone)]
pub struct TrajectoryFailure {
    pub error: Error,
    pub partial: Option<Trajectory>,
}

impl std::fmt::Display for TrajectoryFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.partial {
            Some(p) => write!(f, "{} (level {} trajectory reached t = {})", self.error, p.level, p.segment.t_end()),
            None => write!(f, "{}", self.error),
        }
    }
}

impl std::error::Error for TrajectoryFailure {}

pub type TrajectoryResult = std::result::Result<Trajectory, Box<TrajectoryFailure>>;

/// Integrates `H⁽ⁿ⁾` from `x0` toward `stop.t_limit`.
pub fn trajectory(
    n: usize,
    x0: &StateVector,
    params: &SystemParams,
    cfg: &LevelConfig,
    stop: StopCondition,
) -> TrajectoryResult {
    trajectory_to(n, x0, params, cfg, stop, stop.t_limit)
}

/// Integrates `H⁽ⁿ⁾` from `x0` toward `t_target`, which may be negative to
/// continue the solution into the past.
pub fn trajectory_to(
    n: usize,
    x0: &StateVector,
    params: &SystemParams,
    cfg: &LevelConfig,
    stop: StopCondition,
    t_target: f64,
) -> TrajectoryResult {
    if let Err(error) = cfg.validate().and_then(|_| x0.validate()) {
        return Err(Box::new(TrajectoryFailure { error, partial: None }));
    }
    let tol = cfg.tolerances_at(n).integration;
    let field = |y: &StateVector| h_field(n, y, params, cfg);
    let wrap = |segment: Segment<StateVector>| Trajectory {
        params: *params,
        level: n,
        termination: segment.termination(),
        segment,
    };
    match integrate(&field, *x0, t_target, tol, stop) {
        Ok(segment) => Ok(wrap(segment)),
        Err(failure) => {
            let IntegrationFailure { error, partial } = *failure;
            Err(Box::new(TrajectoryFailure {
                error,
                partial: Some(wrap(partial)),
            }))
        }
    }
}
