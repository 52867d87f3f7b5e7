use nalgebra::{Matrix4, Vector4};
use proptest::prelude::*;

use scissorkin::screw::{
    lie_bracket, ring_rotation, rotate_twist, scissor_joint_point, scissor_joint_screw, spatial_accel_point,
    twist_point_velocity, RigidRotation, ScrewAxisParams, SpatialAccel, Twist, Vec3,
};

fn vec3() -> impl Strategy<Value = Vec3> {
    (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn twist() -> impl Strategy<Value = Twist> {
    (vec3(), vec3()).prop_map(|(w, v)| Twist::new(w, v))
}

fn hat(t: &Twist) -> Matrix4<f64> {
    let (w, v) = (t.omega, t.vel);
    Matrix4::new(0.0, -w.z, w.y, v.x, w.z, 0.0, -w.x, v.y, -w.y, w.x, 0.0, v.z, 0.0, 0.0, 0.0, 0.0)
}

/// Matrix exponential by scaling and squaring of a truncated series.
fn expm(m: &Matrix4<f64>) -> Matrix4<f64> {
    let s = 8;
    let a = m / f64::from(1 << s);
    let mut term = Matrix4::identity();
    let mut sum = Matrix4::identity();
    for k in 1..20 {
        term = term * a / k as f64;
        sum += term;
    }
    for _ in 0..s {
        sum = sum * sum;
    }
    sum
}

fn moved(t: f64, v: &Twist, a: &SpatialAccel, p: &Vec3) -> Vec3 {
    let xi = t * hat(v) + 0.5 * t * t * hat(&a.as_twist());
    let q = expm(&xi) * Vector4::new(p.x, p.y, p.z, 1.0);
    Vec3::new(q.x, q.y, q.z)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bracket_is_antisymmetric(a in twist(), b in twist()) {
        let s = lie_bracket(&a, &b) + lie_bracket(&b, &a);
        prop_assert!(s.max_abs() < 1e-12);
    }

    #[test]
    fn bracket_satisfies_jacobi(a in twist(), b in twist(), c in twist()) {
        let j = lie_bracket(&a, &lie_bracket(&b, &c))
            + lie_bracket(&b, &lie_bracket(&c, &a))
            + lie_bracket(&c, &lie_bracket(&a, &b));
        prop_assert!(j.max_abs() < 1e-9);
    }

    #[test]
    fn bracket_is_bilinear(a in twist(), b in twist(), c in twist(), k in -5.0..5.0f64) {
        let lhs = lie_bracket(&(k * a + b), &c);
        let rhs = k * lie_bracket(&a, &c) + lie_bracket(&b, &c);
        prop_assert!((lhs - rhs).max_abs() < 1e-10);
    }

    #[test]
    fn bracket_is_the_matrix_commutator(a in twist(), b in twist()) {
        let (ha, hb) = (hat(&a), hat(&b));
        let diff = hat(&lie_bracket(&a, &b)) - (ha * hb - hb * ha);
        prop_assert!(diff.amax() < 1e-11);
    }

    #[test]
    fn rotation_commutes_with_bracket(a in twist(), b in twist(), j in 0usize..40, n in 3usize..40) {
        let r = ring_rotation(j, 2.0 * std::f64::consts::PI / n as f64);
        let lhs = rotate_twist(&r, &lie_bracket(&a, &b));
        let rhs = lie_bracket(&rotate_twist(&r, &a), &rotate_twist(&r, &b));
        prop_assert!((lhs - rhs).max_abs() < 1e-10);
    }

    #[test]
    fn rotation_preserves_norms(t in twist(), j in 0usize..100, alpha in -7.0..7.0f64) {
        let r = ring_rotation(j, alpha);
        let u = rotate_twist(&r, &t);
        prop_assert!((u.omega.norm() - t.omega.norm()).abs() < 1e-12 * (1.0 + t.omega.norm()));
        prop_assert!((u.vel.norm() - t.vel.norm()).abs() < 1e-12 * (1.0 + t.vel.norm()));
    }

    #[test]
    fn ring_rotations_compose(i in 0usize..30, j in 0usize..30, alpha in -1.0..1.0f64) {
        let a = ring_rotation(i, alpha).compose(&ring_rotation(j, alpha));
        let b = ring_rotation(i + j, alpha);
        prop_assert!((a.matrix() - b.matrix()).amax() < 1e-12);
        prop_assert!(RigidRotation::from_matrix(*a.matrix()).is_ok());
    }

    #[test]
    fn point_velocity_matches_exponential(v in twist(), p in vec3()) {
        let v = 0.1 * v;
        let h = 1e-5;
        let zero = SpatialAccel::zero();
        let fd = (moved(h, &v, &zero, &p) - moved(-h, &v, &zero, &p)) / (2.0 * h);
        let (_, lin) = twist_point_velocity(&v, &p);
        prop_assert!((lin - fd).norm() <= 1e-6 * (1.0 + fd.norm()));
    }

    #[test]
    fn point_acceleration_matches_exponential(v in twist(), a in twist(), p in vec3()) {
        let (v, acc) = (0.1 * v, SpatialAccel::from_twist(0.1 * a));
        let h = 1e-3;
        let fd = (moved(h, &v, &acc, &p) - 2.0 * moved(0.0, &v, &acc, &p) + moved(-h, &v, &acc, &p)) / (h * h);
        let (_, lin) = spatial_accel_point(&acc, &v.omega, &v.vel, &p);
        prop_assert!((lin - fd).norm() <= 1e-4 * (1.0 + fd.norm()), "{lin:?} vs {fd:?}");
    }

    #[test]
    fn scissor_screw_passes_through_its_pivot(theta in 0.01..3.13f64, l in 0.1..10.0f64, n in -5.0..5.0f64) {
        let p = ScrewAxisParams { theta, half_span: l, offset: n };
        let s = scissor_joint_screw(&p).unwrap();
        let r = scissor_joint_point(&p).unwrap();
        prop_assert_eq!(s.omega, Vec3::y());
        // tabulated form is (z, 0, x) of the pivot
        prop_assert!((s.vel.x - r.z).abs() < 1e-12 && (s.vel.z - r.x).abs() < 1e-12 && s.vel.y == 0.0);
        let moment = Twist::revolute(Vec3::y(), r);
        prop_assert!((moment.vel.x + s.vel.x).abs() < 1e-12 && (moment.vel.z - s.vel.z).abs() < 1e-12);
    }
}
