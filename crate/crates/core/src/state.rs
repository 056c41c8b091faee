//! Phase-space containers for the two charges.
//!
//! Everything is in scaled units: lengths in `L`, times in `T = L/c`, so the
//! speed of light is 1.

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Positions and velocities of both charges, `X = (r1, v1, r2, v2)`.
///
/// The same layout doubles as the time derivative of a state,
/// `dX/dt = (v1, a1, v2, a2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub r1: Vec3,
    pub v1: Vec3,
    pub r2: Vec3,
    pub v2: Vec3,
}

impl StateVector {
    pub fn new(r1: Vec3, v1: Vec3, r2: Vec3, v2: Vec3) -> Self {
        Self { r1, v1, r2, v2 }
    }

    pub fn zeros() -> Self {
        Self::new(Vec3::zeros(), Vec3::zeros(), Vec3::zeros(), Vec3::zeros())
    }

    pub fn to_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        out[0..3].copy_from_slice(self.r1.as_slice());
        out[3..6].copy_from_slice(self.v1.as_slice());
        out[6..9].copy_from_slice(self.r2.as_slice());
        out[9..12].copy_from_slice(self.v2.as_slice());
        out
    }

    pub fn from_array(a: &[f64; 12]) -> Self {
        Self {
            r1: Vec3::new(a[0], a[1], a[2]),
            v1: Vec3::new(a[3], a[4], a[5]),
            r2: Vec3::new(a[6], a[7], a[8]),
            v2: Vec3::new(a[9], a[10], a[11]),
        }
    }

    /// Relative vector `r2 - r1`.
    pub fn relative(&self) -> Vec3 {
        self.r2 - self.r1
    }

    pub fn separation(&self) -> f64 {
        self.relative().norm()
    }

    /// Speed of the faster charge.
    pub fn max_speed(&self) -> f64 {
        self.v1.norm().max(self.v2.norm())
    }

    /// True when every z-component is exactly zero.
    pub fn is_planar(&self) -> bool {
        self.r1.z == 0.0 && self.v1.z == 0.0 && self.r2.z == 0.0 && self.v2.z == 0.0
    }

    /// Checks sub-luminal speeds and distinct positions.
    pub fn validate(&self) -> Result<()> {
        for v in [&self.v1, &self.v2] {
            let speed = v.norm();
            if !(speed < 1.0) {
                return Err(Error::Superluminal { speed });
            }
        }
        let distance = self.separation();
        if !(distance > 0.0) || !distance.is_finite() {
            return Err(Error::Coincident { distance });
        }
        Ok(())
    }

    /// Exchanges the roles of the two charges.
    pub fn swapped(&self) -> Self {
        Self::new(self.r2, self.v2, self.r1, self.v1)
    }
}

/// Position, velocity and acceleration of one charge at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub r: Vec3,
    pub v: Vec3,
    pub a: Vec3,
}

/// `X̄ = (r1, v1, a1, r2, v2, a2)`: a state together with its accelerations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedState {
    pub r1: Vec3,
    pub v1: Vec3,
    pub a1: Vec3,
    pub r2: Vec3,
    pub v2: Vec3,
    pub a2: Vec3,
}

impl ExtendedState {
    pub fn from_parts(x: &StateVector, a1: Vec3, a2: Vec3) -> Self {
        Self {
            r1: x.r1,
            v1: x.v1,
            a1,
            r2: x.r2,
            v2: x.v2,
            a2,
        }
    }

    pub fn state(&self) -> StateVector {
        StateVector::new(self.r1, self.v1, self.r2, self.v2)
    }

    pub fn particle1(&self) -> ParticleState {
        ParticleState {
            r: self.r1,
            v: self.v1,
            a: self.a1,
        }
    }

    pub fn particle2(&self) -> ParticleState {
        ParticleState {
            r: self.r2,
            v: self.v2,
            a: self.a2,
        }
    }
}
