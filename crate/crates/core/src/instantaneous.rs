//! The level-0 field: every delayed quantity replaced by its present value.
//!
//! Setting all retarded and advanced times equal to `t` turns the equations of
//! motion into a linear system for the two present accelerations,
//!
//! ```text
//! η a1 = M11⁻¹ (F1 - M12 a2)
//!   a2 = M22⁻¹ (F2 - M21 a1)
//! ```
//!
//! which is solved in closed form through the composite matrices
//! `I - (1/η) M11⁻¹ M12 M22⁻¹ M21` and `I - (1/η) M22⁻¹ M21 M11⁻¹ M12`.

use nalgebra::{Matrix3, SMatrix, SVector};

use crate::error::{Error, Result};
use crate::forces::{self, alpha_mix, Branch, FieldEvalInput, ForceKernel};
use crate::state::{StateVector, Vec3};
use crate::units::SystemParams;

/// Composite matrices with a larger 1-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelPair {
    pub a1: Vec3,
    pub a2: Vec3,
}

/// Which kernel formulas evaluate the forces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelPath {
    /// Planar formulas whenever the state lies in `z = 0`, spatial otherwise.
    #[default]
    Auto,
    /// Always the three-dimensional formulas.
    Spatial,
}

pub(crate) fn project<const D: usize>(v: &Vec3) -> SVector<f64, D> {
    SVector::from_fn(|i, _| v[i])
}

pub(crate) fn embed<const D: usize>(v: &SVector<f64, D>) -> Vec3 {
    Vec3::from_fn(|i, _| if i < D { v[i] } else { 0.0 })
}

pub(crate) type KernelFn<const D: usize> = fn(&FieldEvalInput<D>, f64) -> Result<ForceKernel<D>>;

/// α-mixed kernel acting on `self` from `other`. Branches with zero weight are
/// skipped, so a purely retarded system never evaluates advanced kernels.
#[allow(clippy::too_many_arguments)]
pub(crate) fn mixed_kernel<const D: usize>(
    kern: KernelFn<D>,
    params: &SystemParams,
    r_self: &SVector<f64, D>,
    v_self: &SVector<f64, D>,
    retarded: Option<(&SVector<f64, D>, &SVector<f64, D>)>,
    advanced: Option<(&SVector<f64, D>, &SVector<f64, D>)>,
) -> Result<ForceKernel<D>> {
    let mut ret = ForceKernel::zero();
    let mut adv = ForceKernel::zero();
    let sign = params.sign();
    if params.retarded_weight() != 0.0 {
        let (r, v) = retarded.expect("retarded data required for nonzero weight");
        ret = kern(
            &FieldEvalInput {
                r_self: *r_self,
                v_self: *v_self,
                r_other: *r,
                v_other: *v,
                branch: Branch::Retarded,
            },
            sign,
        )?;
    }
    if params.advanced_weight() != 0.0 {
        let (r, v) = advanced.expect("advanced data required for nonzero weight");
        adv = kern(
            &FieldEvalInput {
                r_self: *r_self,
                v_self: *v_self,
                r_other: *r,
                v_other: *v,
                branch: Branch::Advanced,
            },
            sign,
        )?;
    }
    alpha_mix(&ret, &adv, params.alpha())
}

fn condition_1norm<const D: usize>(m: &SMatrix<f64, D, D>, inv: &SMatrix<f64, D, D>) -> f64 {
    let norm1 = |a: &SMatrix<f64, D, D>| {
        a.column_iter()
            .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    norm1(m) * norm1(inv)
}

fn guarded_inverse<const D: usize>(m: &SMatrix<f64, D, D>) -> Result<SMatrix<f64, D, D>> {
    let inv = m.try_inverse().ok_or(Error::Degenerate {
        condition: f64::INFINITY,
    })?;
    let condition = condition_1norm(m, &inv);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Degenerate { condition });
    }
    Ok(inv)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_coupled<const D: usize>(
    f1: &SVector<f64, D>,
    f2: &SVector<f64, D>,
    m12: &SMatrix<f64, D, D>,
    m21: &SMatrix<f64, D, D>,
    m11inv: &SMatrix<f64, D, D>,
    m22inv: &SMatrix<f64, D, D>,
    eta: f64,
) -> Result<(SVector<f64, D>, SVector<f64, D>)> {
    let id = SMatrix::<f64, D, D>::identity();
    let a_m12 = m11inv * m12;
    let b_m21 = m22inv * m21;
    let c1 = id - a_m12 * b_m21 / eta;
    let c2 = id - b_m21 * a_m12 / eta;
    let af1 = m11inv * f1;
    let bf2 = m22inv * f2;
    let eta_a1 = guarded_inverse(&c1)? * (af1 - a_m12 * bf2);
    let a2 = guarded_inverse(&c2)? * (bf2 - b_m21 * af1 / eta);
    Ok((eta_a1 / eta, a2))
}

/// Solves the instantaneous linear system for both accelerations.
pub fn accel_linear_solve(
    f1: &Vec3,
    f2: &Vec3,
    m12: &Matrix3<f64>,
    m21: &Matrix3<f64>,
    m11inv: &Matrix3<f64>,
    m22inv: &Matrix3<f64>,
    eta: f64,
) -> Result<AccelPair> {
    let (a1, a2) = solve_coupled(f1, f2, m12, m21, m11inv, m22inv, eta)?;
    Ok(AccelPair { a1, a2 })
}

fn accels_in<const D: usize>(
    kern: KernelFn<D>,
    x: &StateVector,
    params: &SystemParams,
) -> Result<AccelPair> {
    let (r1, v1) = (project::<D>(&x.r1), project::<D>(&x.v1));
    let (r2, v2) = (project::<D>(&x.r2), project::<D>(&x.v2));
    let on1 = mixed_kernel(kern, params, &r1, &v1, Some((&r2, &v2)), Some((&r2, &v2)))?;
    let on2 = mixed_kernel(kern, params, &r2, &v2, Some((&r1, &v1)), Some((&r1, &v1)))?;
    let m11inv = forces::mass_matrix_inverse_d(&v1)?;
    let m22inv = forces::mass_matrix_inverse_d(&v2)?;
    let (a1, a2) = solve_coupled(
        &on1.f,
        &on2.f,
        &on1.m_coupling,
        &on2.m_coupling,
        &m11inv,
        &m22inv,
        params.eta(),
    )?;
    Ok(AccelPair {
        a1: embed(&a1),
        a2: embed(&a2),
    })
}

/// Present accelerations of the instantaneous system.
pub fn instantaneous_accels(
    x: &StateVector,
    params: &SystemParams,
    path: KernelPath,
) -> Result<AccelPair> {
    if path == KernelPath::Auto && x.is_planar() {
        accels_in::<2>(forces::planar_kernel, x, params)
    } else {
        accels_in::<3>(forces::kernel, x, params)
    }
}

/// `H⁽⁰⁾(X) = (v1, a1, v2, a2)`.
pub fn h0_field(x: &StateVector, params: &SystemParams) -> Result<StateVector> {
    h0_field_on(x, params, KernelPath::Auto)
}

pub fn h0_field_on(x: &StateVector, params: &SystemParams, path: KernelPath) -> Result<StateVector> {
    x.validate()?;
    let acc = instantaneous_accels(x, params, path)?;
    Ok(StateVector::new(x.v1, acc.a1, x.v2, acc.a2))
}
