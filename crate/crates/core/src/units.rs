//! Dimensionless parameters, SI conversion and the standard initial condition.
//!
//! Lengths are measured in `L = |q1 q2| / (4π ε0 m2 c²)` and times in
//! `T = L / c`, which leaves three free parameters: the mass ratio
//! `eta = m1/m2`, the charge-sign product `sign = sgn(q1 q2)`, and the
//! retarded/advanced mixing `alpha`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::state::{StateVector, Vec3};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m (CODATA 2018).
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Electron mass, kg (CODATA 2018).
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
/// Proton mass, kg (CODATA 2018).
pub const PROTON_MASS: f64 = 1.672_621_923_69e-27;

/// The three numbers the scaled equations of motion depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    eta: f64,
    sign: i8,
    alpha: f64,
}

impl SystemParams {
    /// Mass ratio `m1 / m2`.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `sgn(q1 q2)`: −1 attracts, +1 repels.
    pub fn sign(&self) -> f64 {
        f64::from(self.sign)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Weight of the retarded field, `1/2 + alpha`.
    pub fn retarded_weight(&self) -> f64 {
        0.5 + self.alpha
    }

    /// Weight of the advanced field, `1/2 - alpha`.
    pub fn advanced_weight(&self) -> f64 {
        0.5 - self.alpha
    }
}

/// Validates and builds a [`SystemParams`].
pub fn make_params(eta: f64, sign: i32, alpha: f64) -> Result<SystemParams> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::validation("eta", format!("{eta} must be positive")));
    }
    if sign != 1 && sign != -1 {
        return Err(Error::validation("sign", format!("{sign} must be -1 or +1")));
    }
    if !(alpha.abs() <= 0.5) {
        return Err(Error::validation(
            "alpha",
            format!("{alpha} must lie in [-1/2, 1/2]"),
        ));
    }
    Ok(SystemParams {
        eta,
        sign: sign as i8,
        alpha,
    })
}

/// Length and time units of the scaled system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    /// Metres per scaled length unit.
    pub length: f64,
    /// Seconds per scaled time unit.
    pub time: f64,
}

impl Scales {
    pub fn new(q1: f64, q2: f64, m2: f64) -> Result<Self> {
        if q1 == 0.0 || q2 == 0.0 || !q1.is_finite() || !q2.is_finite() {
            return Err(Error::validation("charge", "charges must be nonzero"));
        }
        if !(m2 > 0.0) || !m2.is_finite() {
            return Err(Error::validation("mass", "masses must be positive"));
        }
        let c = SPEED_OF_LIGHT;
        let length = q1.abs() * q2.abs() / (4.0 * PI * VACUUM_PERMITTIVITY * m2 * c * c);
        Ok(Self {
            length,
            time: length / c,
        })
    }
}

/// Positions (m) and velocities (m/s) of both charges in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalState {
    pub r1: Vec3,
    pub v1: Vec3,
    pub r2: Vec3,
    pub v2: Vec3,
}

/// Converts SI charges, masses and state into scaled parameters and state.
/// `alpha` is not a physical property of the charges, so it is passed through.
pub fn physical_to_dimensionless(
    q1: f64,
    q2: f64,
    m1: f64,
    m2: f64,
    alpha: f64,
    state: &PhysicalState,
) -> Result<(SystemParams, StateVector)> {
    if !(m1 > 0.0) || !m1.is_finite() {
        return Err(Error::validation("mass", "masses must be positive"));
    }
    let scales = Scales::new(q1, q2, m2)?;
    let sign = if q1 * q2 > 0.0 { 1 } else { -1 };
    let params = make_params(m1 / m2, sign, alpha)?;
    let c = SPEED_OF_LIGHT;
    let x = StateVector::new(
        state.r1 / scales.length,
        state.v1 / c,
        state.r2 / scales.length,
        state.v2 / c,
    );
    Ok((params, x))
}

/// Inverse of [`physical_to_dimensionless`] for the state.
pub fn dimensionless_to_physical(scales: &Scales, x: &StateVector) -> PhysicalState {
    let c = SPEED_OF_LIGHT;
    PhysicalState {
        r1: x.r1 * scales.length,
        v1: x.v1 * c,
        r2: x.r2 * scales.length,
        v2: x.v2 * c,
    }
}

/// Circular orbit of the non-relativistic instantaneous Coulomb problem.
///
/// Both charges sit on the x-axis with the (Newtonian) centre of mass at the
/// origin; charge 1 moves along +y and charge 2 along −y.
pub fn circular_initial_condition(params: &SystemParams, r0: f64) -> Result<StateVector> {
    if params.sign >= 0 {
        return Err(Error::validation(
            "sign",
            "circular orbits need attracting charges (sign = -1)",
        ));
    }
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::validation("r0", format!("{r0} must be positive")));
    }
    let eta = params.eta;
    let speed1 = (1.0 / (eta * (1.0 + eta) * r0)).sqrt();
    let speed2 = (eta / ((1.0 + eta) * r0)).sqrt();
    if speed1 >= 1.0 || speed2 >= 1.0 {
        return Err(Error::validation(
            "r0",
            format!("{r0} is too small: circular speeds {speed1}, {speed2} are not sub-luminal"),
        ));
    }
    Ok(StateVector::new(
        Vec3::new(-r0 / (1.0 + eta), 0.0, 0.0),
        Vec3::new(0.0, speed1, 0.0),
        Vec3::new(r0 * eta / (1.0 + eta), 0.0, 0.0),
        Vec3::new(0.0, -speed2, 0.0),
    ))
}
