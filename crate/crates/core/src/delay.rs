//! Light-cone roots on a flow.
//!
//! For the charge `j` described by a flow `r_j(τ)` and a fixed present point
//! `r_other`, the retarded offset solves `τ = -|r_other - r_j(τ)|` (τ < 0) and
//! the advanced offset solves `τ = |r_other - r_j(τ)|` (τ > 0). Written as
//! `g(τ) = τ ± |r_other - r_j(τ)| = 0`, both residuals are strictly increasing
//! for sub-luminal motion (slope at least `1 - β_max`), so a sign change
//! brackets the unique root and bisection finds it.

use crate::error::{Error, Result};
use crate::forces::Branch;
use crate::ode::Segment;
use crate::state::{StateVector, Vec3};

/// Default residual tolerance of the delay roots, in time units.
pub const DEFAULT_DELAY_TOL: f64 = 1e-10;
/// Bisection gives up after this many halvings.
pub const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Particle {
    One,
    Two,
}

impl Particle {
    pub fn position(self, x: &StateVector) -> Vec3 {
        match self {
            Particle::One => x.r1,
            Particle::Two => x.r2,
        }
    }

    pub fn other(self) -> Particle {
        match self {
            Particle::One => Particle::Two,
            Particle::Two => Particle::One,
        }
    }
}

/// Offsets of the four delayed instants from the present one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayTimes {
    /// Retarded offset of charge 1 as seen from charge 2.
    pub tau1_ret: f64,
    /// Retarded offset of charge 2 as seen from charge 1.
    pub tau2_ret: f64,
    pub tau1_adv: f64,
    pub tau2_adv: f64,
}

fn residual(flow: &Segment<StateVector>, particle: Particle, r_other: &Vec3, branch: Branch, tau: f64) -> Result<f64> {
    let x = flow.eval(tau)?;
    let distance = (r_other - particle.position(&x)).norm();
    Ok(match branch {
        Branch::Retarded => tau + distance,
        Branch::Advanced => tau - distance,
    })
}

/// Interval `(lo, hi)` on which the light-cone residual changes sign.
///
/// Starts from `[-2R₀, 0]` (or its mirror) and doubles outward, never past the
/// sub-luminal bound `R₀ / (1 - β_max)`. When the flow does not reach far
/// enough, [`Error::FlowTooShort`] names the time it must be extended to.
pub fn bracket_delay(
    flow: &Segment<StateVector>,
    particle: Particle,
    r_other: &Vec3,
    branch: Branch,
) -> Result<(f64, f64)> {
    if flow.knots().is_empty() {
        return Err(Error::validation("flow", "empty segment"));
    }
    let s = match branch {
        Branch::Retarded => -1.0,
        Branch::Advanced => 1.0,
    };
    let present = flow.eval(0.0)?;
    let r0 = (r_other - particle.position(&present)).norm();
    if !(r0 > 0.0) {
        return Err(Error::Coincident { distance: r0 });
    }
    let beta_max = flow.max_speed();
    if !(beta_max < 1.0) {
        return Err(Error::Superluminal { speed: beta_max });
    }
    let bound = r0 / (1.0 - beta_max);
    let limit = bound * (1.0 + 1e-9) + 1e-12;

    let (lo_span, hi_span) = flow.span();
    let reach = if s < 0.0 { -lo_span } else { hi_span };
    let mut inner = 0.0;
    let mut outer = 2.0 * r0;
    loop {
        if outer > reach {
            // the flow ends first: its end point may already bracket the root
            if reach > inner && s * residual(flow, particle, r_other, branch, s * reach)? >= 0.0 {
                return Ok(order(s * inner, s * reach));
            }
            return Err(Error::FlowTooShort { needed: s * outer });
        }
        if s * residual(flow, particle, r_other, branch, s * outer)? >= 0.0 {
            return Ok(order(s * inner, s * outer));
        }
        if outer >= limit {
            return Err(Error::NoRoot { bound });
        }
        inner = outer;
        outer = (2.0 * outer).min(limit);
    }
}

fn order(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn solve(flow: &Segment<StateVector>, particle: Particle, r_other: &Vec3, branch: Branch, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::validation("delay tolerance", "must be positive"));
    }
    let (mut lo, mut hi) = bracket_delay(flow, particle, r_other, branch)?;
    let mut last = f64::INFINITY;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let g = residual(flow, particle, r_other, branch, mid)?;
        if g.abs() < tol {
            return Ok(mid);
        }
        last = g;
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_BISECTIONS,
        residual: last.abs(),
    })
}

/// Retarded offset `τ < 0` of `particle` seen from `r_other`.
pub fn solve_retarded(flow: &Segment<StateVector>, particle: Particle, r_other: &Vec3, tol: f64) -> Result<f64> {
    solve(flow, particle, r_other, Branch::Retarded, tol)
}

/// Advanced offset `τ > 0` of `particle` seen from `r_other`.
pub fn solve_advanced(flow: &Segment<StateVector>, particle: Particle, r_other: &Vec3, tol: f64) -> Result<f64> {
    solve(flow, particle, r_other, Branch::Advanced, tol)
}

/// Residual `|τ ± |r_other - r_j(τ)||` of a computed root.
pub fn root_residual(
    flow: &Segment<StateVector>,
    particle: Particle,
    r_other: &Vec3,
    branch: Branch,
    tau: f64,
) -> Result<f64> {
    residual(flow, particle, r_other, branch, tau).map(f64::abs)
}
