use nalgebra::{Matrix2, Matrix3, Vector2};
use proptest::prelude::*;
use twocharge_core::{
    alpha_mix, force_kernel, mass_matrix, mass_matrix_inverse, planar_force_kernel, Branch, Error, FieldEvalInput,
    ForceKernel, Vec3,
};

/// Component-wise expansion of the retarded force on charge 1 (three dimensions).
/// `v1` is the present velocity of charge 1, `v2`/`e` the delayed velocity of
/// charge 2 and the unit vector toward charge 1, `r` the distance.
fn expanded_f1_ret(s: f64, v1: &Vec3, v2: &Vec3, e: &Vec3, r: f64) -> Vec3 {
    let pre = s * (1.0 - v2.dot(v2)) / ((1.0 - v2.dot(e)).powi(3) * r * r);
    Vec3::new(
        v1.y * (v2.x * e.y - v2.y * e.x) + v1.z * (v2.x * e.z - v2.z * e.x) - v2.x + e.x,
        v1.x * (v2.y * e.x - v2.x * e.y) + v1.z * (v2.y * e.z - v2.z * e.y) - v2.y + e.y,
        v1.x * (v2.z * e.x - v2.x * e.z) + v1.y * (v2.z * e.y - v2.y * e.z) - v2.z + e.z,
    ) * pre
}

/// Expanded retarded force on charge 2; `v1`, `e` are delayed quantities of
/// charge 1 and `v2` the present velocity of charge 2.
fn expanded_f2_ret(s: f64, v2: &Vec3, v1: &Vec3, e: &Vec3, r: f64) -> Vec3 {
    let pre = s * (1.0 - v1.dot(v1)) / ((v1.dot(e) - 1.0).powi(3) * r * r);
    Vec3::new(
        v2.y * (v1.y * e.x - v1.x * e.y) + v2.z * (v1.z * e.x - v1.x * e.z) + v1.x - e.x,
        v2.x * (v1.x * e.y - v1.y * e.x) + v2.z * (v1.z * e.y - v1.y * e.z) + v1.y - e.y,
        v2.x * (v1.x * e.z - v1.z * e.x) + v2.y * (v1.y * e.z - v1.z * e.y) + v1.z - e.z,
    ) * pre
}

/// `M⁻_12` entry by entry. `w` is the delayed velocity of charge 2.
fn expanded_m12_ret(s: f64, v1: &Vec3, w: &Vec3, e: &Vec3, r: f64) -> Matrix3<f64> {
    let l11 = (-w.z * e.y + w.y * e.z) * (-v1.y * e.z + v1.z * e.y)
        + (w.y - e.y) * (v1.y - e.y)
        + (w.z - e.z) * (v1.z - e.z);
    let l12 = (-w.x * e.z + w.z * e.x) * (-v1.y * e.z + v1.z * e.y) - (w.x - e.x) * (v1.y - e.y);
    let l13 = (-w.y * e.x + w.x * e.y) * (-v1.y * e.z + v1.z * e.y) - (w.x - e.x) * (v1.z - e.z);
    let l21 = (-w.y * e.z + w.z * e.y) * (-v1.x * e.z + v1.z * e.x) - (w.y - e.y) * (v1.x - e.x);
    let l22 = (-w.z * e.x + w.x * e.z) * (-v1.x * e.z + v1.z * e.x)
        + (w.x - e.x) * (v1.x - e.x)
        + (w.z - e.z) * (v1.z - e.z);
    let l23 = (-w.x * e.y + w.y * e.x) * (-v1.x * e.z + v1.z * e.x) - (w.y - e.y) * (v1.z - e.z);
    let l31 = (-w.z * e.y + w.y * e.z) * (-v1.x * e.y + v1.y * e.x) - (w.z - e.z) * (v1.x - e.x);
    let l32 = (-w.x * e.z + w.z * e.x) * (-v1.x * e.y + v1.y * e.x) - (w.z - e.z) * (v1.y - e.y);
    let l33 = (-w.y * e.x + w.x * e.y) * (-v1.x * e.y + v1.y * e.x)
        + (w.y - e.y) * (v1.y - e.y)
        + (w.x - e.x) * (v1.x - e.x);
    let l = Matrix3::new(l11, l12, l13, l21, l22, l23, l31, l32, l33);
    l * (s / ((1.0 - w.dot(e)).powi(3) * r))
}

/// `M⁻_21` entry by entry. `v2` is present, `w`, `e` delayed quantities of charge 1.
fn expanded_m21_ret(s: f64, v2: &Vec3, w: &Vec3, e: &Vec3, r: f64) -> Matrix3<f64> {
    let l11 = (v2.y * e.z - v2.z * e.y) * (w.y * e.z - w.z * e.y)
        - (v2.y - e.y) * (w.y - e.y)
        - (v2.z - e.z) * (w.z - e.z);
    let l12 = (v2.z * e.y - v2.y * e.z) * (w.x * e.z - w.z * e.x) + (v2.y - e.y) * (w.x - e.x);
    let l13 = (v2.y * e.z - v2.z * e.y) * (w.x * e.y - w.y * e.x) + (v2.z - e.z) * (w.x - e.x);
    let l21 = (v2.z * e.x - v2.x * e.z) * (w.y * e.z - w.z * e.y) + (v2.x - e.x) * (w.y - e.y);
    let l22 = (v2.x * e.z - v2.z * e.x) * (w.x * e.z - w.z * e.x)
        - (v2.x - e.x) * (w.x - e.x)
        - (v2.z - e.z) * (w.z - e.z);
    let l23 = (v2.z * e.x - v2.x * e.z) * (w.x * e.y - w.y * e.x) + (v2.z - e.z) * (w.y - e.y);
    let l31 = (v2.x * e.y - v2.y * e.x) * (w.y * e.z - w.z * e.y) + (v2.x - e.x) * (w.z - e.z);
    let l32 = (v2.y * e.x - v2.x * e.y) * (w.x * e.z - w.z * e.x) + (v2.y - e.y) * (w.z - e.z);
    let l33 = (v2.x * e.y - v2.y * e.x) * (w.x * e.y - w.y * e.x)
        - (v2.x - e.x) * (w.x - e.x)
        - (v2.y - e.y) * (w.y - e.y);
    let l = Matrix3::new(l11, l12, l13, l21, l22, l23, l31, l32, l33);
    l * (s / ((w.dot(e) - 1.0).powi(3) * r))
}

/// Planar forms, all four kernels. `vs` present velocity of the charge
/// feeling the force; `w`, `e` delayed velocity and unit vector of the other.
/// `first` selects the expressions written for charge 1.
fn expanded_planar(s: f64, vs: &Vector2<f64>, w: &Vector2<f64>, e: &Vector2<f64>, r: f64, branch: Branch, first: bool) -> (Vector2<f64>, Matrix2<f64>) {
    let (ex, ey, wx, wy) = (e.x, e.y, w.x, w.y);
    let q = 1.0 - w.dot(w);
    match (branch, first) {
        (Branch::Retarded, true) => {
            let d = 1.0 - w.dot(e);
            let f = Vector2::new(vs.y * (wx * ey - wy * ex) - wx + ex, vs.x * (wy * ex - wx * ey) - wy + ey)
                * (s * q / (d.powi(3) * r * r));
            let l = Matrix2::new(
                (wy - ey) * (vs.y - ey),
                -(wx - ex) * (vs.y - ey),
                -(wy - ey) * (vs.x - ex),
                (wx - ex) * (vs.x - ex),
            );
            (f, l * (s / (d.powi(3) * r)))
        }
        (Branch::Advanced, true) => {
            let d = 1.0 + w.dot(e);
            let f = Vector2::new(vs.y * (wy * ex - wx * ey) + wx + ex, vs.x * (wx * ey - wy * ex) + wy + ey)
                * (s * q / (d.powi(3) * r * r));
            let l = Matrix2::new(
                -(wy + ey) * (vs.y - ey),
                (wx + ex) * (vs.y - ey),
                (wy + ey) * (vs.x - ex),
                -(wx + ex) * (vs.x - ex),
            );
            (f, l * (s / (d.powi(3) * r)))
        }
        (Branch::Retarded, false) => {
            let d = w.dot(e) - 1.0;
            let f = Vector2::new(vs.y * (wy * ex - wx * ey) + wx - ex, vs.x * (wx * ey - wy * ex) + wy - ey)
                * (s * q / (d.powi(3) * r * r));
            let l = Matrix2::new(
                -(vs.y - ey) * (wy - ey),
                (vs.y - ey) * (wx - ex),
                (vs.x - ex) * (wy - ey),
                -(vs.x - ex) * (wx - ex),
            );
            (f, l * (s / (d.powi(3) * r)))
        }
        (Branch::Advanced, false) => {
            let d = w.dot(e) + 1.0;
            let f = Vector2::new(vs.y * (wx * ey - wy * ex) - wx - ex, vs.x * (wy * ex - wx * ey) - wy - ey)
                * (-s * q / (d.powi(3) * r * r));
            let l = Matrix2::new(
                (vs.y - ey) * (wy + ey),
                -(vs.y - ey) * (wx + ex),
                -(vs.x - ex) * (wy + ey),
                (vs.x - ex) * (wx + ex),
            );
            (f, l * (-s / (d.powi(3) * r)))
        }
    }
}

fn close3(a: &Vec3, b: &Vec3, rel: f64) -> bool {
    (a - b).norm() <= rel * b.norm().max(1e-300) || (a - b).norm() == 0.0
}

fn velocity(max: f64) -> impl Strategy<Value = Vec3> {
    (0.0..max, 0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU).prop_map(|(s, th, ph)| {
        Vec3::new(s * th.sin() * ph.cos(), s * th.sin() * ph.sin(), s * th.cos())
    })
}

fn point() -> impl Strategy<Value = Vec3> {
    (-20.0..20.0f64, -20.0..20.0f64, -20.0..20.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn planar_velocity(max: f64) -> impl Strategy<Value = Vec3> {
    (0.0..max, 0.0..std::f64::consts::TAU).prop_map(|(s, ph)| Vec3::new(s * ph.cos(), s * ph.sin(), 0.0))
}

fn planar_point() -> impl Strategy<Value = Vec3> {
    (-20.0..20.0f64, -20.0..20.0f64).prop_map(|(x, y)| Vec3::new(x, y, 0.0))
}

#[test]
fn unit_separation_examples() {
    let input = |r: Vec3| FieldEvalInput {
        r_self: r,
        v_self: Vec3::zeros(),
        r_other: Vec3::zeros(),
        v_other: Vec3::zeros(),
        branch: Branch::Retarded,
    };
    assert_eq!(twocharge_core::forces::unit_separation(&input(Vec3::x())).unwrap(), Vec3::x());
    let e = twocharge_core::forces::unit_separation(&input(Vec3::new(3.0, 4.0, 0.0))).unwrap();
    assert!((e - Vec3::new(0.6, 0.8, 0.0)).norm() < 1e-15);
    assert!(matches!(
        twocharge_core::forces::unit_separation(&input(Vec3::zeros())),
        Err(Error::Coincident { .. })
    ));
}

#[test]
fn static_retarded_force_is_coulomb() {
    let r = 7.5;
    let input = FieldEvalInput {
        r_self: Vec3::new(r, 0.0, 0.0),
        v_self: Vec3::zeros(),
        r_other: Vec3::zeros(),
        v_other: Vec3::zeros(),
        branch: Branch::Retarded,
    };
    let k = force_kernel(&input, -1.0).unwrap();
    assert_eq!(k.f, -Vec3::x() / (r * r));
}

#[test]
fn static_branches_coincide() {
    let input = FieldEvalInput {
        r_self: Vec3::new(1.0, 2.0, -3.0),
        v_self: Vec3::zeros(),
        r_other: Vec3::new(-4.0, 0.5, 2.0),
        v_other: Vec3::zeros(),
        branch: Branch::Retarded,
    };
    let ret = force_kernel(&input, 1.0).unwrap();
    let adv = force_kernel(&FieldEvalInput { branch: Branch::Advanced, ..input }, 1.0).unwrap();
    assert!((ret.f - adv.f).norm() < 1e-16);
    // at zero velocity the coupling reduces to products of e-components
    let e = (input.r_self - input.r_other).normalize();
    let r = (input.r_self - input.r_other).norm();
    let expected = expanded_m12_ret(1.0, &Vec3::zeros(), &Vec3::zeros(), &e, r);
    assert!((ret.m_coupling - expected).norm() <= 1e-14 * expected.norm());
}

#[test]
fn light_cone_guard() {
    let input = FieldEvalInput {
        r_self: Vec3::new(1.0, 0.0, 0.0),
        v_self: Vec3::zeros(),
        r_other: Vec3::zeros(),
        v_other: Vec3::new(1.0 - 1e-12, 0.0, 0.0),
        branch: Branch::Retarded,
    };
    assert!(matches!(force_kernel(&input, 1.0), Err(Error::LightCone { .. })));
}

#[test]
fn mass_matrix_examples() {
    assert_eq!(mass_matrix(&Vec3::zeros()).unwrap(), Matrix3::identity());
    assert_eq!(mass_matrix_inverse(&Vec3::zeros()).unwrap(), Matrix3::identity());
    let m = mass_matrix(&Vec3::new(0.6, 0.0, 0.0)).unwrap();
    let g: f64 = 1.25;
    let expected = Matrix3::from_diagonal(&Vec3::new(g + g.powi(3) * 0.36, g, g));
    assert!((m - expected).norm() < 1e-14);
    let numeric = m.try_inverse().unwrap();
    assert!((mass_matrix_inverse(&Vec3::new(0.6, 0.0, 0.0)).unwrap() - numeric).norm() < 1e-14);
    assert!(matches!(mass_matrix(&Vec3::new(0.8, 0.6, 0.0)), Err(Error::Superluminal { .. })));
}

#[test]
fn alpha_mix_endpoints() {
    let a = ForceKernel {
        f: Vec3::new(1.0, 2.0, 3.0),
        m_coupling: Matrix3::identity(),
    };
    let b = ForceKernel {
        f: Vec3::new(-1.0, 0.0, 5.0),
        m_coupling: Matrix3::identity() * 3.0,
    };
    assert_eq!(alpha_mix(&a, &b, 0.5).unwrap(), a);
    assert_eq!(alpha_mix(&a, &b, -0.5).unwrap(), b);
    let mean = alpha_mix(&a, &b, 0.0).unwrap();
    assert_eq!(mean.f, Vec3::new(0.0, 1.0, 4.0));
    assert_eq!(mean.m_coupling, Matrix3::identity() * 2.0);
    assert!(alpha_mix(&a, &b, 0.7).unwrap_err().is_validation());
}

#[test]
fn planar_rejects_out_of_plane_input() {
    let input = FieldEvalInput {
        r_self: Vec3::new(1.0, 0.0, 0.1),
        v_self: Vec3::zeros(),
        r_other: Vec3::zeros(),
        v_other: Vec3::zeros(),
        branch: Branch::Retarded,
    };
    assert!(planar_force_kernel(&input, -1.0).unwrap_err().is_validation());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn retarded_kernel_matches_expanded_transcription(
        r1 in point(), r2 in point(), v1 in velocity(0.95), v2 in velocity(0.95), s in prop::sample::select(vec![-1.0, 1.0]),
    ) {
        prop_assume!((r1 - r2).norm() > 1e-3);
        let dist = (r1 - r2).norm();
        // force on 1 from the delayed charge 2
        let e2 = (r1 - r2) / dist;
        let k = force_kernel(&FieldEvalInput { r_self: r1, v_self: v1, r_other: r2, v_other: v2, branch: Branch::Retarded }, s).unwrap();
        let f = expanded_f1_ret(s, &v1, &v2, &e2, dist);
        let m = expanded_m12_ret(s, &v1, &v2, &e2, dist);
        prop_assert!(close3(&k.f, &f, 1e-13), "{:?} vs {:?}", k.f, f);
        prop_assert!((k.m_coupling - m).norm() <= 1e-13 * m.norm(), "{} vs {}", k.m_coupling, m);

        // force on 2 from the delayed charge 1 (roles exchanged)
        let e1 = (r2 - r1) / dist;
        let k = force_kernel(&FieldEvalInput { r_self: r2, v_self: v2, r_other: r1, v_other: v1, branch: Branch::Retarded }, s).unwrap();
        let f = expanded_f2_ret(s, &v2, &v1, &e1, dist);
        let m = expanded_m21_ret(s, &v2, &v1, &e1, dist);
        prop_assert!(close3(&k.f, &f, 1e-13));
        prop_assert!((k.m_coupling - m).norm() <= 1e-13 * m.norm());
    }

    #[test]
    fn planar_kernels_match_expanded_transcription(
        r1 in planar_point(), r2 in planar_point(), v1 in planar_velocity(0.95), v2 in planar_velocity(0.95),
        s in prop::sample::select(vec![-1.0, 1.0]), advanced in any::<bool>(),
    ) {
        prop_assume!((r1 - r2).norm() > 1e-3);
        let branch = if advanced { Branch::Advanced } else { Branch::Retarded };
        let dist = (r1 - r2).norm();
        let p = |v: &Vec3| Vector2::new(v.x, v.y);
        for (first, rs, vs, ro, vo) in [(true, r1, v1, r2, v2), (false, r2, v2, r1, v1)] {
            let e = (rs - ro) / dist;
            let k = planar_force_kernel(&FieldEvalInput { r_self: rs, v_self: vs, r_other: ro, v_other: vo, branch }, s).unwrap();
            let (f, m) = expanded_planar(s, &p(&vs), &p(&vo), &p(&e), dist, branch, first);
            prop_assert!((k.f - f).norm() <= 1e-13 * f.norm().max(1e-300));
            prop_assert!((k.m_coupling - m).norm() <= 1e-13 * m.norm().max(1e-300));
        }
    }

    #[test]
    fn planar_equals_spatial(
        r1 in planar_point(), r2 in planar_point(), v1 in planar_velocity(0.95), v2 in planar_velocity(0.95),
        advanced in any::<bool>(),
    ) {
        prop_assume!((r1 - r2).norm() > 1e-3);
        let branch = if advanced { Branch::Advanced } else { Branch::Retarded };
        let input = FieldEvalInput { r_self: r1, v_self: v1, r_other: r2, v_other: v2, branch };
        let k3 = force_kernel(&input, -1.0).unwrap();
        let k2 = planar_force_kernel(&input, -1.0).unwrap();
        let scale_f = k3.f.norm();
        let scale_m = k3.m_coupling.norm();
        prop_assert!(k3.f.z.abs() <= 1e-13 * scale_f);
        prop_assert!((k2.f - Vector2::new(k3.f.x, k3.f.y)).norm() <= 1e-13 * scale_f);
        // the z-z entry is irrelevant in the plane; everything else must agree
        for i in 0..3 {
            for j in 0..3 {
                let expected = match (i, j) {
                    (2, 2) => continue,
                    (i, j) if i < 2 && j < 2 => k2.m_coupling[(i, j)],
                    _ => 0.0,
                };
                prop_assert!((k3.m_coupling[(i, j)] - expected).abs() <= 1e-13 * scale_m);
            }
        }
    }

    #[test]
    fn advanced_is_retarded_with_reversed_source_velocity(
        r1 in point(), r2 in point(), v1 in velocity(0.95), v2 in velocity(0.95),
    ) {
        prop_assume!((r1 - r2).norm() > 1e-3);
        let ret = force_kernel(&FieldEvalInput { r_self: r1, v_self: v1, r_other: r2, v_other: -v2, branch: Branch::Retarded }, 1.0).unwrap();
        let adv = force_kernel(&FieldEvalInput { r_self: r1, v_self: v1, r_other: r2, v_other: v2, branch: Branch::Advanced }, 1.0).unwrap();
        prop_assert!(close3(&adv.f, &ret.f, 1e-14));
        prop_assert!((adv.m_coupling - ret.m_coupling).norm() <= 1e-14 * ret.m_coupling.norm().max(1e-300));
    }

    #[test]
    fn unit_separation_is_normalised(r1 in point(), r2 in point()) {
        prop_assume!((r1 - r2).norm() > 1e-9);
        let input = FieldEvalInput { r_self: r1, v_self: Vec3::zeros(), r_other: r2, v_other: Vec3::zeros(), branch: Branch::Retarded };
        let e = twocharge_core::forces::unit_separation(&input).unwrap();
        prop_assert!((e.norm() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn static_limit_is_coulomb(r1 in point(), r2 in point(), advanced in any::<bool>()) {
        prop_assume!((r1 - r2).norm() > 1e-3);
        let branch = if advanced { Branch::Advanced } else { Branch::Retarded };
        let input = FieldEvalInput { r_self: r1, v_self: Vec3::zeros(), r_other: r2, v_other: Vec3::zeros(), branch };
        let k = force_kernel(&input, -1.0).unwrap();
        let d = (r1 - r2).norm();
        prop_assert!((k.f.norm() - 1.0 / (d * d)).abs() <= 1e-14 / (d * d));
        let e = (r1 - r2) / d;
        prop_assert!(k.f.cross(&e).norm() <= 1e-14 * k.f.norm());
    }

    #[test]
    fn mass_matrix_inverse_is_inverse(v in velocity(0.99)) {
        let m = mass_matrix(&v).unwrap();
        let inv = mass_matrix_inverse(&v).unwrap();
        prop_assert!((m * inv - Matrix3::identity()).norm() <= 1e-12);
    }

    #[test]
    fn velocity_projector_is_idempotent(speed in 1e-8..0.99f64, th in 0.0..std::f64::consts::PI, ph in 0.0..std::f64::consts::TAU) {
        let v = Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()) * speed;
        let q = v * v.transpose() / v.norm_squared();
        prop_assert!((q * q - q).norm() <= 1e-13);
    }
}
