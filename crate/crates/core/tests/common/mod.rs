//! Finite-difference oracles shared by the integration tests.
#![allow(dead_code)]

use scissorkin::model::{build_unit, DesignParams, MechanismModel};
use scissorkin::screw::Vec3;

pub fn reference_unit() -> MechanismModel {
    build_unit(&DesignParams::reference(12).unwrap()).unwrap()
}

pub fn positions(model: &MechanismModel, theta: f64) -> Vec<Vec3> {
    model.node_positions(theta).unwrap().positions
}

/// Node velocities by central differences in θ times θ̇.
pub fn fd_velocity(model: &MechanismModel, theta: f64, theta_dot: f64) -> Vec<Vec3> {
    let h = 1e-5;
    let p = positions(model, theta + h);
    let m = positions(model, theta - h);
    p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h) * theta_dot).collect()
}

/// Node accelerations `p''·θ̇² + p'·θ̈` with second-order central differences.
pub fn fd_acceleration(model: &MechanismModel, theta: f64, theta_dot: f64, theta_ddot: f64) -> Vec<Vec3> {
    let h = 1e-4;
    let p = positions(model, theta + h);
    let c = positions(model, theta);
    let m = positions(model, theta - h);
    (0..c.len())
        .map(|i| {
            let d1 = (p[i] - m[i]) / (2.0 * h);
            let d2 = (p[i] - 2.0 * c[i] + m[i]) / (h * h);
            d2 * theta_dot * theta_dot + d1 * theta_ddot
        })
        .collect()
}

/// Angular velocity of every link from the rate of change of its direction.
pub fn fd_link_omega(model: &MechanismModel, theta: f64, theta_dot: f64) -> Vec<Vec3> {
    let h = 1e-5;
    let p = positions(model, theta + h);
    let m = positions(model, theta - h);
    let c = positions(model, theta);
    model
        .links
        .iter()
        .map(|l| {
            let dir = |q: &[Vec3]| (q[l.ends[1]] - q[l.ends[0]]).normalize();
            let d = (dir(&p) - dir(&m)) / (2.0 * h) * theta_dot;
            dir(&c).cross(&d)
        })
        .collect()
}

/// max |a_i − b_i| / max |b_i|.
pub fn rel_err(analytic: &[Vec3], reference: &[Vec3]) -> f64 {
    let scale = reference.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let worst = analytic.iter().zip(reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}

/// θ samples evenly spread over the working range, endpoints included.
pub fn theta_samples(n: usize) -> Vec<f64> {
    let (lo, hi) = (12.54f64.to_radians(), 80f64.to_radians());
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}
