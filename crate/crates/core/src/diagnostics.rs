//! Observables computed from states and trajectories.

use crate::error::{Error, Result};
use crate::forces;
use crate::iterated::{delayed_forces, DelayedStates, Trajectory};
use crate::ode::TerminationReason;
use crate::state::{StateVector, Vec3};
use crate::units::SystemParams;

/// Default number of grid points of the distance quadrature.
pub const DEFAULT_DISTANCE_POINTS: usize = 2000;

/// Time-averaged distance between the positions of two trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceReport {
    pub n_from: usize,
    pub n_to: usize,
    pub t_max: f64,
    pub d_r1: f64,
    pub d_r2: f64,
}

/// Least-squares line `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

fn gamma(v: &Vec3) -> Result<f64> {
    let v2 = v.norm_squared();
    if !(v2 < 1.0) {
        return Err(Error::Superluminal { speed: v2.sqrt() });
    }
    Ok(1.0 / (1.0 - v2).sqrt())
}

/// `η γ1 v1 + γ2 v2`.
pub fn total_momentum(x: &StateVector, params: &SystemParams) -> Result<Vec3> {
    Ok(params.eta() * gamma(&x.v1)? * x.v1 + gamma(&x.v2)? * x.v2)
}

/// Rate of change of the total mechanical momentum: the sum of the forces the
/// charges exert on each other, which need not cancel because each one acts
/// through delayed data.
pub fn self_force(present: &StateVector, delayed: &DelayedStates, params: &SystemParams) -> Result<Vec3> {
    present.validate()?;
    let (f1, f2) = delayed_forces::<3>(forces::kernel, present, delayed, params)?;
    Ok(f1 + f2)
}

/// Time at which the faster charge reaches `v_threshold`.
///
/// A run stopped at exactly this threshold reports its refined event time;
/// for a lower threshold the crossing is located by bisection on the dense
/// output.
pub fn singularity_time(traj: &Trajectory, v_threshold: f64) -> Result<f64> {
    if !(v_threshold > 0.0 && v_threshold < 1.0) {
        return Err(Error::validation("speed threshold", "must lie in (0, 1)"));
    }
    let seg = &traj.segment;
    let stopped = traj.termination.reason == TerminationReason::SpeedThreshold;
    let knots = seg.knots();
    let first = knots
        .iter()
        .position(|k| StateVector::from_array(&k.x).max_speed() >= v_threshold);
    let Some(i) = first else {
        return Err(Error::NotApplicable(format!(
            "trajectory never reaches speed {v_threshold}"
        )));
    };
    if stopped && i == knots.len() - 1 {
        let last = StateVector::from_array(&knots[i].x).max_speed();
        // the stop event itself was refined to this threshold
        if (last - v_threshold).abs() <= 1e-6 || i == 0 {
            return Ok(traj.termination.time);
        }
    }
    if i == 0 {
        return Ok(knots[0].t);
    }
    let (mut before, mut after) = (knots[i - 1].t, knots[i].t);
    while (after - before).abs() > crate::ode::EVENT_RESOLUTION {
        let mid = 0.5 * (before + after);
        if mid == before || mid == after {
            break;
        }
        if seg.eval(mid)?.max_speed() >= v_threshold {
            after = mid;
        } else {
            before = mid;
        }
    }
    Ok(after)
}

/// `D = (1/t_max) ∫₀^{t_max} |r_b(t) - r_a(t)| dt` for each charge, by the
/// composite trapezoid rule on `points` uniform nodes.
///
/// `t_max = None` uses the shortest common forward coverage.
pub fn trajectory_distance(
    a: &Trajectory,
    b: &Trajectory,
    t_max: Option<f64>,
    points: usize,
) -> Result<DistanceReport> {
    if points < 2 {
        return Err(Error::validation("points", "need at least two quadrature nodes"));
    }
    if a.initial_state() != b.initial_state() {
        return Err(Error::validation("trajectories", "initial states differ"));
    }
    let coverage = a.span().1.min(b.span().1);
    let t_max = t_max.unwrap_or(coverage);
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::validation("t_max", "must be positive and finite"));
    }
    if t_max > coverage {
        return Err(Error::OutOfSpan {
            tau: t_max,
            lo: 0.0,
            hi: coverage,
        });
    }
    let h = t_max / (points - 1) as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for k in 0..points {
        let t = if k == points - 1 { t_max } else { k as f64 * h };
        let (xa, xb) = (a.state_at(t)?, b.state_at(t)?);
        let w = if k == 0 || k == points - 1 { 0.5 } else { 1.0 };
        s1 += w * (xb.r1 - xa.r1).norm();
        s2 += w * (xb.r2 - xa.r2).norm();
    }
    Ok(DistanceReport {
        n_from: a.level,
        n_to: b.level,
        t_max,
        d_r1: s1 * h / t_max,
        d_r2: s2 * h / t_max,
    })
}

/// Ordinary least squares with coefficient of determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::validation("fit data", "need at least two paired points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::validation("fit data", "abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    use crate::units::make_params;

    #[test]
    fn momentum_examples() {
        let p = make_params(2.0, -1, 0.5).unwrap();
        let zero = StateVector::new(Vec3::zeros(), Vec3::zeros(), Vec3::x(), Vec3::zeros());
        assert_eq!(total_momentum(&zero, &p).unwrap(), Vec3::zeros());
        let x = StateVector::new(Vec3::zeros(), Vec3::new(0.6, 0.0, 0.0), Vec3::x(), Vec3::zeros());
        assert_relative_eq!(total_momentum(&x, &p).unwrap(), Vec3::new(1.5, 0.0, 0.0), epsilon = 1e-15);
        let q = make_params(1.0, -1, 0.5).unwrap();
        let v = Vec3::new(0.1, -0.3, 0.2);
        let y = StateVector::new(Vec3::zeros(), v, Vec3::x(), -v);
        assert_relative_eq!(total_momentum(&y, &q).unwrap(), Vec3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn superluminal_momentum_fails() {
        let p = make_params(1.0, -1, 0.5).unwrap();
        let x = StateVector::new(Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::x(), Vec3::zeros());
        assert!(matches!(total_momentum(&x, &p), Err(Error::Superluminal { .. })));
    }

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 5.0, 10.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert_relative_eq!(fit.slope, 3.0, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, -1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(linear_fit(&[1.0], &[2.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    }
}
