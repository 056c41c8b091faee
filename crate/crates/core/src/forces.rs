//! Liénard–Wiechert interaction kernels.
//!
//! The Lorentz force on charge `i` from the field of charge `j`, evaluated at
//! `j`'s retarded or advanced time, splits into a part that depends only on
//! positions and velocities and a part linear in `j`'s delayed acceleration:
//!
//! ```text
//! dp_i/dt = F - M a_j
//! ```
//!
//! With `n` the unit vector from the delayed position of `j` to the present
//! position of `i`, `R` the distance, `β = v_j`, `σ = -1` (retarded) or `+1`
//! (advanced), `κ = 1 + σ n·β` and `u = n + σβ`:
//!
//! ```text
//! F = S (1 - β²) / (κ³ R²) · [u + v_i × (n × u)]
//! M = -S / (κ³ R) · (I + [v_i×][n×]) [n×][u×]
//! ```
//!
//! Everything is expressed through dot and outer products, so the same code
//! serves the planar system. The advanced kernel is the retarded kernel with
//! `β → -β`.

use nalgebra::{Matrix3, SMatrix, SVector, Vector2};

use crate::error::{Error, Result};
use crate::state::Vec3;

/// Below this the light-cone denominator `1 ∓ v·n` is treated as vanishing.
pub const LIGHT_CONE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Retarded,
    Advanced,
}

impl Branch {
    /// `-1` for retarded, `+1` for advanced.
    pub fn sigma(self) -> f64 {
        match self {
            Branch::Retarded => -1.0,
            Branch::Advanced => 1.0,
        }
    }
}

/// Present state of the charge feeling the force and delayed state of the
/// charge producing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldEvalInput<const D: usize = 3> {
    pub r_self: SVector<f64, D>,
    pub v_self: SVector<f64, D>,
    pub r_other: SVector<f64, D>,
    pub v_other: SVector<f64, D>,
    pub branch: Branch,
}

/// Acceleration-independent force `f` and the matrix `m_coupling` that
/// multiplies the other charge's delayed acceleration (entering as `f - m a`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceKernel<const D: usize = 3> {
    pub f: SVector<f64, D>,
    pub m_coupling: SMatrix<f64, D, D>,
}

impl<const D: usize> ForceKernel<D> {
    pub fn zero() -> Self {
        Self {
            f: SVector::zeros(),
            m_coupling: SMatrix::zeros(),
        }
    }

    /// Force for a given delayed acceleration of the other charge.
    pub fn force(&self, a_other: &SVector<f64, D>) -> SVector<f64, D> {
        self.f - self.m_coupling * a_other
    }

    fn scaled_add(&self, w: f64, other: &Self) -> Self {
        Self {
            f: self.f + other.f * w,
            m_coupling: self.m_coupling + other.m_coupling * w,
        }
    }
}

impl FieldEvalInput<3> {
    /// Drops the z-components; fails unless they are all zero.
    pub fn to_planar(&self) -> Result<FieldEvalInput<2>> {
        let zs = [self.r_self.z, self.v_self.z, self.r_other.z, self.v_other.z];
        if zs.iter().any(|z| *z != 0.0) {
            return Err(Error::validation(
                "planar input",
                "all z-components must be zero",
            ));
        }
        let p = |v: &Vec3| Vector2::new(v.x, v.y);
        Ok(FieldEvalInput {
            r_self: p(&self.r_self),
            v_self: p(&self.v_self),
            r_other: p(&self.r_other),
            v_other: p(&self.v_other),
            branch: self.branch,
        })
    }
}

fn separation<const D: usize>(input: &FieldEvalInput<D>) -> Result<(SVector<f64, D>, f64)> {
    let d = input.r_self - input.r_other;
    let distance = d.norm();
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::Coincident { distance });
    }
    Ok((d / distance, distance))
}

fn light_cone_denominator<const D: usize>(
    n: &SVector<f64, D>,
    v_other: &SVector<f64, D>,
    branch: Branch,
) -> Result<f64> {
    let kappa = 1.0 + branch.sigma() * n.dot(v_other);
    if kappa.abs() < LIGHT_CONE_EPS {
        return Err(Error::LightCone { denominator: kappa });
    }
    Ok(kappa)
}

/// Unit vector from the delayed position of the other charge to this one.
pub fn unit_separation(input: &FieldEvalInput) -> Result<Vec3> {
    separation(input).map(|(n, _)| n)
}

pub(crate) fn kernel<const D: usize>(input: &FieldEvalInput<D>, sign: f64) -> Result<ForceKernel<D>> {
    let (n, distance) = separation(input)?;
    let beta = &input.v_other;
    let kappa = light_cone_denominator(&n, beta, input.branch)?;
    let u = n + beta * input.branch.sigma();
    let v = &input.v_self;
    let k3 = kappa * kappa * kappa;

    // v × (n × u) = n (v·u) - u (v·n)
    let bracket = u + n * v.dot(&u) - u * v.dot(&n);
    let f = bracket * (sign * (1.0 - beta.norm_squared()) / (k3 * distance * distance));

    // [n×][u×] = u nᵀ - (n·u) I ;  I + [v×][n×] = (1 - v·n) I + n vᵀ
    let id = SMatrix::<f64, D, D>::identity();
    let nu = u * n.transpose() - id * n.dot(&u);
    let left = id * (1.0 - v.dot(&n)) + n * v.transpose();
    let m_coupling = (left * nu) * (-sign / (k3 * distance));
    Ok(ForceKernel { f, m_coupling })
}

/// Kernel `(F, M)` of one branch in three dimensions.
pub fn force_kernel(input: &FieldEvalInput, sign: f64) -> Result<ForceKernel> {
    kernel(input, sign)
}

/// Planar kernel written out component by component; the advanced branch is
/// obtained from the retarded expressions with the other velocity negated.
pub(crate) fn planar_kernel(input: &FieldEvalInput<2>, sign: f64) -> Result<ForceKernel<2>> {
    let (e, distance) = separation(input)?;
    let kappa = light_cone_denominator(&e, &input.v_other, input.branch)?;
    // retarded form in terms of the sign-adjusted delayed velocity
    let w = input.v_other * (-input.branch.sigma());
    let vs = &input.v_self;
    let (ex, ey) = (e.x, e.y);
    let (wx, wy) = (w.x, w.y);
    let k3 = kappa * kappa * kappa;

    let pre_f = sign * (1.0 - w.norm_squared()) / (k3 * distance * distance);
    let f = Vector2::new(
        vs.y * (wx * ey - wy * ex) - wx + ex,
        vs.x * (wy * ex - wx * ey) - wy + ey,
    ) * pre_f;

    let pre_m = sign / (k3 * distance);
    let l = SMatrix::<f64, 2, 2>::new(
        (wy - ey) * (vs.y - ey),
        -(wx - ex) * (vs.y - ey),
        -(wy - ey) * (vs.x - ex),
        (wx - ex) * (vs.x - ex),
    );
    Ok(ForceKernel {
        f,
        m_coupling: l * pre_m,
    })
}

/// Two-dimensional kernel for inputs confined to the plane `z = 0`.
pub fn planar_force_kernel(input: &FieldEvalInput, sign: f64) -> Result<ForceKernel<2>> {
    planar_kernel(&input.to_planar()?, sign)
}

fn gamma_of<const D: usize>(v: &SVector<f64, D>) -> Result<f64> {
    let v2 = v.norm_squared();
    if !(v2 < 1.0) {
        return Err(Error::Superluminal { speed: v2.sqrt() });
    }
    Ok(1.0 / (1.0 - v2).sqrt())
}

pub(crate) fn mass_matrix_d<const D: usize>(v: &SVector<f64, D>) -> Result<SMatrix<f64, D, D>> {
    let g = gamma_of(v)?;
    Ok(SMatrix::identity() * g + v * v.transpose() * (g * g * g))
}

pub(crate) fn mass_matrix_inverse_d<const D: usize>(
    v: &SVector<f64, D>,
) -> Result<SMatrix<f64, D, D>> {
    let g = gamma_of(v)?;
    Ok((SMatrix::identity() - v * v.transpose()) / g)
}

/// `γ I + γ³ v vᵀ`, so that `d(γ v)/dt = M a`.
pub fn mass_matrix(v: &Vec3) -> Result<Matrix3<f64>> {
    mass_matrix_d(v)
}

/// Closed-form inverse `γ⁻¹ (I - v vᵀ)` of [`mass_matrix`].
pub fn mass_matrix_inverse(v: &Vec3) -> Result<Matrix3<f64>> {
    mass_matrix_inverse_d(v)
}

/// `(1/2 + α)·retarded + (1/2 - α)·advanced`, componentwise.
pub fn alpha_mix<const D: usize>(
    retarded: &ForceKernel<D>,
    advanced: &ForceKernel<D>,
    alpha: f64,
) -> Result<ForceKernel<D>> {
    if !(alpha.abs() <= 0.5) {
        return Err(Error::validation("alpha", format!("{alpha} must lie in [-1/2, 1/2]")));
    }
    Ok(ForceKernel::zero()
        .scaled_add(0.5 + alpha, retarded)
        .scaled_add(0.5 - alpha, advanced))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn input(r_self: Vec3, v_self: Vec3, r_other: Vec3, v_other: Vec3, branch: Branch) -> FieldEvalInput {
        FieldEvalInput {
            r_self,
            v_self,
            r_other,
            v_other,
            branch,
        }
    }

    #[test]
    fn unit_separation_examples() {
        let z = Vec3::zeros();
        let e = unit_separation(&input(Vec3::x(), z, z, z, Branch::Retarded)).unwrap();
        assert_eq!(e, Vec3::x());
        let e = unit_separation(&input(Vec3::new(3.0, 4.0, 0.0), z, z, z, Branch::Retarded)).unwrap();
        assert_relative_eq!(e, Vec3::new(0.6, 0.8, 0.0), epsilon = 1e-16);
        let err = unit_separation(&input(Vec3::x(), z, Vec3::x(), z, Branch::Advanced)).unwrap_err();
        assert!(matches!(err, Error::Coincident { .. }));
    }

    #[test]
    fn static_coulomb_limit() {
        let z = Vec3::zeros();
        let r = 7.0;
        let inp = input(Vec3::new(0.0, r, 0.0), z, z, z, Branch::Retarded);
        let k = force_kernel(&inp, -1.0).unwrap();
        assert_eq!(k.f, Vec3::new(0.0, -1.0 / (r * r), 0.0));
    }

    #[test]
    fn light_cone_guard() {
        let z = Vec3::zeros();
        // other charge moving toward us at the speed of light along n
        let inp = input(Vec3::x(), z, z, Vec3::x(), Branch::Retarded);
        assert!(matches!(force_kernel(&inp, -1.0), Err(Error::LightCone { .. })));
    }

    #[test]
    fn mass_matrix_examples() {
        assert_eq!(mass_matrix(&Vec3::zeros()).unwrap(), Matrix3::identity());
        assert_eq!(mass_matrix_inverse(&Vec3::zeros()).unwrap(), Matrix3::identity());

        let v = Vec3::new(0.6, 0.0, 0.0);
        let m = mass_matrix(&v).unwrap();
        let g: f64 = 1.25;
        let expected = Matrix3::from_diagonal(&Vec3::new(g + g.powi(3) * 0.36, g, g));
        assert_relative_eq!(m, expected, epsilon = 1e-15);
        let numeric = m.try_inverse().unwrap();
        assert_relative_eq!(mass_matrix_inverse(&v).unwrap(), numeric, epsilon = 1e-14);

        assert!(matches!(mass_matrix(&Vec3::new(1.0, 0.0, 0.0)), Err(Error::Superluminal { .. })));
        assert!(mass_matrix_inverse(&Vec3::new(0.8, 0.7, 0.0)).is_err());
    }

    #[test]
    fn alpha_mix_endpoints() {
        let a = ForceKernel::<3> {
            f: Vec3::new(1.0, 2.0, 3.0),
            m_coupling: Matrix3::identity() * 2.0,
        };
        let b = ForceKernel::<3> {
            f: Vec3::new(-1.0, 0.5, 0.0),
            m_coupling: Matrix3::from_element(0.25),
        };
        assert_eq!(alpha_mix(&a, &b, 0.5).unwrap(), a);
        assert_eq!(alpha_mix(&a, &b, -0.5).unwrap(), b);
        let mean = alpha_mix(&a, &b, 0.0).unwrap();
        assert_relative_eq!(mean.f, (a.f + b.f) / 2.0);
        assert_relative_eq!(mean.m_coupling, (a.m_coupling + b.m_coupling) / 2.0);
        assert!(alpha_mix(&a, &b, 0.51).is_err());
    }

    #[test]
    fn planar_rejects_out_of_plane() {
        let z = Vec3::zeros();
        let inp = input(Vec3::new(1.0, 0.0, 0.1), z, z, z, Branch::Retarded);
        assert!(planar_force_kernel(&inp, -1.0).unwrap_err().is_validation());
    }

    #[test]
    fn planar_static_coulomb() {
        let z = Vec3::zeros();
        let inp = input(Vec3::new(3.0, 4.0, 0.0), z, z, z, Branch::Advanced);
        let k = planar_force_kernel(&inp, 1.0).unwrap();
        assert_relative_eq!(k.f, Vector2::new(0.6, 0.8) / 25.0, epsilon = 1e-16);
    }
}
