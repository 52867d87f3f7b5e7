//! Twists, spatial accelerations and rotations.
//!
//! Component ordering is `(angular; linear)` throughout. A twist `V = (ω; v)`
//! describes a rigid motion whose point at position `r` moves with velocity
//! `v + ω × r`; `v` is the velocity of the body point currently at the origin.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Tolerance used when validating orthonormality of rotation matrices.
pub const ORTHONORMAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub omega: Vec3,
    pub vel: Vec3,
}

impl Twist {
    pub const fn new(omega: Vec3, vel: Vec3) -> Self {
        Twist { omega, vel }
    }

    pub fn zero() -> Self {
        Twist::default()
    }

    pub fn from_components(c: [f64; 6]) -> Self {
        Twist::new(Vec3::new(c[0], c[1], c[2]), Vec3::new(c[3], c[4], c[5]))
    }

    /// Unit revolute screw about `axis` through `point`: `(s; r × s)`.
    pub fn revolute(axis: Vec3, point: Vec3) -> Self {
        let s = axis.normalize();
        Twist::new(s, point.cross(&s))
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.omega.x,
            self.omega.y,
            self.omega.z,
            self.vel.x,
            self.vel.y,
            self.vel.z,
        )
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Twist::from_components([v[0], v[1], v[2], v[3], v[4], v[5]])
    }

    pub fn components(&self) -> [f64; 6] {
        [
            self.omega.x,
            self.omega.y,
            self.omega.z,
            self.vel.x,
            self.vel.y,
            self.vel.z,
        ]
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.omega.amax().max(self.vel.amax())
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.is_finite())
    }
}

impl Add for Twist {
    type Output = Twist;
    fn add(self, rhs: Twist) -> Twist {
        Twist::new(self.omega + rhs.omega, self.vel + rhs.vel)
    }
}

impl AddAssign for Twist {
    fn add_assign(&mut self, rhs: Twist) {
        self.omega += rhs.omega;
        self.vel += rhs.vel;
    }
}

impl Sub for Twist {
    type Output = Twist;
    fn sub(self, rhs: Twist) -> Twist {
        Twist::new(self.omega - rhs.omega, self.vel - rhs.vel)
    }
}

impl Neg for Twist {
    type Output = Twist;
    fn neg(self) -> Twist {
        Twist::new(-self.omega, -self.vel)
    }
}

impl Mul<Twist> for f64 {
    type Output = Twist;
    fn mul(self, rhs: Twist) -> Twist {
        Twist::new(self * rhs.omega, self * rhs.vel)
    }
}

/// Spatial acceleration `A = (ε; a − ω × v)`, the time derivative of a twist
/// expressed in the fixed frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpatialAccel {
    pub eps: Vec3,
    pub lin: Vec3,
}

impl SpatialAccel {
    pub const fn new(eps: Vec3, lin: Vec3) -> Self {
        SpatialAccel { eps, lin }
    }

    pub fn zero() -> Self {
        SpatialAccel::default()
    }

    pub fn as_twist(&self) -> Twist {
        Twist::new(self.eps, self.lin)
    }

    pub fn from_twist(t: Twist) -> Self {
        SpatialAccel::new(t.omega, t.vel)
    }
}

impl Add for SpatialAccel {
    type Output = SpatialAccel;
    fn add(self, rhs: SpatialAccel) -> SpatialAccel {
        SpatialAccel::new(self.eps + rhs.eps, self.lin + rhs.lin)
    }
}

/// A proper rotation matrix (orthonormal, det = +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidRotation(Matrix3<f64>);

impl RigidRotation {
    pub fn identity() -> Self {
        RigidRotation(Matrix3::identity())
    }

    /// Validates `m` and wraps it.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("rotation matrix has non-finite entries"));
        }
        let defect = (m.transpose() * m - Matrix3::identity()).amax();
        if defect > ORTHONORMAL_TOL {
            return Err(Error::domain(format!(
                "matrix is not orthonormal (|RᵀR − I| = {defect:.3e})"
            )));
        }
        if (m.determinant() - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::domain("rotation matrix has det != +1"));
        }
        Ok(RigidRotation(m))
    }

    /// Rotation about +Z by `angle` radians.
    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RigidRotation(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        RigidRotation(self.0.transpose())
    }

    pub fn compose(&self, other: &RigidRotation) -> Self {
        RigidRotation(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }
}

/// Parameters locating a scissor pivot: opening angle, half-span `L`
/// and horizontal offset `n` of the cell along local X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScrewAxisParams {
    pub theta: f64,
    pub half_span: f64,
    pub offset: f64,
}

/// Pivot location `r = (n + L sin(θ/2), 0, L cos(θ/2))`.
pub fn scissor_joint_point(p: &ScrewAxisParams) -> Result<Vec3> {
    validate_axis_params(p)?;
    let (s, c) = (0.5 * p.theta).sin_cos();
    Ok(Vec3::new(p.offset + p.half_span * s, 0.0, p.half_span * c))
}

/// The scissor joint screw in its tabulated form
/// `(0, 1, 0, L cos(θ/2), 0, n + L sin(θ/2))`.
///
/// The linear block is `(z, 0, x)` of the pivot point. This differs from the
/// moment form `r × s = (−z, 0, x)` of [`Twist::revolute`] by the sign of the
/// first linear row; both give the same loop null space, but only the
/// moment form composes correctly under Lie brackets and point extraction, so
/// the kinematic solvers use [`Twist::revolute`].
pub fn scissor_joint_screw(p: &ScrewAxisParams) -> Result<Twist> {
    let r = scissor_joint_point(p)?;
    Ok(Twist::from_components([0.0, 1.0, 0.0, r.z, 0.0, r.x]))
}

fn validate_axis_params(p: &ScrewAxisParams) -> Result<()> {
    if !p.theta.is_finite() || !p.half_span.is_finite() || !p.offset.is_finite() {
        return Err(Error::domain("screw axis parameters must be finite"));
    }
    if !(0.0..=std::f64::consts::PI).contains(&p.theta) {
        return Err(Error::domain(format!(
            "scissor angle {} rad outside [0, π]",
            p.theta
        )));
    }
    if p.half_span <= 0.0 {
        return Err(Error::domain("half-span L must be positive"));
    }
    Ok(())
}

/// se(3) bracket `[(ω1; v1), (ω2; v2)] = (ω1 × ω2; ω1 × v2 − ω2 × v1)`.
pub fn lie_bracket(a: &Twist, b: &Twist) -> Twist {
    Twist::new(
        a.omega.cross(&b.omega),
        a.omega.cross(&b.vel) - b.omega.cross(&a.vel),
    )
}

/// Rotation by `j·α` about the ring axis Z.
pub fn ring_rotation(j: usize, alpha: f64) -> RigidRotation {
    RigidRotation::about_z(j as f64 * alpha)
}

/// Re-expresses a twist under a rotation about an axis through the origin.
pub fn rotate_twist(r: &RigidRotation, t: &Twist) -> Twist {
    Twist::new(r.apply(&t.omega), r.apply(&t.vel))
}

pub fn rotate_accel(r: &RigidRotation, a: &SpatialAccel) -> SpatialAccel {
    SpatialAccel::new(r.apply(&a.eps), r.apply(&a.lin))
}

/// Angular velocity and point velocity `v + ω × r` of the point at `r`.
pub fn twist_point_velocity(v: &Twist, r: &Vec3) -> (Vec3, Vec3) {
    (v.omega, v.vel + v.omega.cross(r))
}

/// Angular and linear acceleration of the body point at `r`.
///
/// `twist_lin` is the linear block of the body twist (velocity of the body
/// point at the origin), so that
/// `a = A_lin + ω × v + ε × r + ω × (ω × r)`.
pub fn spatial_accel_point(a: &SpatialAccel, omega: &Vec3, twist_lin: &Vec3, r: &Vec3) -> (Vec3, Vec3) {
    let acc = a.lin + omega.cross(twist_lin) + a.eps.cross(r) + omega.cross(&omega.cross(r));
    (a.eps, acc)
}
