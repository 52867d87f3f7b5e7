//! Self-checks run by `scissorkin validate`: loop closure, mobility against the
//! finite-difference oracle, analytic rates against finite differences of the
//! node positions, and ring symmetry.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::kinematics::{evaluate, symmetry_check};
use crate::mobility::{dof, numeric_dof_oracle};
use crate::model::MechanismModel;
use crate::screw::Vec3;

pub const VELOCITY_TOL: f64 = 1e-6;
pub const ACCEL_TOL: f64 = 1e-4;
pub const CLOSURE_TOL: f64 = 1e-9;
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Node velocities by central differences of the node positions in θ.
pub fn fd_velocity(model: &MechanismModel, theta: f64, theta_dot: f64) -> Result<Vec<Vec3>> {
    let h = 1e-5;
    let p = model.node_positions(theta + h)?.positions;
    let m = model.node_positions(theta - h)?.positions;
    Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h) * theta_dot).collect())
}

/// Node accelerations `p''·θ̇² + p'·θ̈` by second-order central differences.
pub fn fd_acceleration(model: &MechanismModel, theta: f64, theta_dot: f64, theta_ddot: f64) -> Result<Vec<Vec3>> {
    let h = 1e-4;
    let p = model.node_positions(theta + h)?.positions;
    let c = model.node_positions(theta)?.positions;
    let m = model.node_positions(theta - h)?.positions;
    Ok((0..c.len())
        .map(|i| {
            let d1 = (p[i] - m[i]) / (2.0 * h);
            let d2 = (p[i] - 2.0 * c[i] + m[i]) / (h * h);
            d2 * theta_dot * theta_dot + d1 * theta_ddot
        })
        .collect())
}

/// `max |a − b| / max |b|`, or the absolute error when `b` is all zero.
pub fn relative_error(analytic: &[Vec3], reference: &[Vec3]) -> f64 {
    let scale = reference.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let worst = analytic
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    pub theta_min: f64,
    pub theta_max: f64,
    pub samples: usize,
    pub theta_dot: f64,
    pub theta_ddot: f64,
    pub units: usize,
}

impl ValidateOptions {
    pub fn for_model(model: &MechanismModel) -> Self {
        let (lo, hi) = model.working_range.unwrap_or((10f64.to_radians(), 170f64.to_radians()));
        ValidateOptions {
            theta_min: lo,
            theta_max: hi,
            samples: 25,
            theta_dot: (hi - lo) / 53.0,
            theta_ddot: 0.0,
            units: model.design.map_or(12, |d| d.units),
        }
    }

    fn thetas(&self) -> Vec<f64> {
        let n = self.samples.max(2);
        (0..n)
            .map(|k| self.theta_min + (self.theta_max - self.theta_min) * k as f64 / (n - 1) as f64)
            .collect()
    }
}

fn check(name: &str, value: f64, limit: f64, detail: String) -> Check {
    Check { name: name.into(), value, limit, passed: value <= limit && value.is_finite(), detail }
}

/// Runs every check; errors inside a check mark it failed rather than abort.
pub fn run_checks(model: &MechanismModel, opts: &ValidateOptions) -> ValidationReport {
    let thetas = opts.thetas();
    let mut checks = vec![];

    let mut closure: f64 = 0.0;
    let mut closure_note = String::new();
    for &th in &thetas {
        match model.node_positions(th) {
            Ok(p) => closure = closure.max(model.closure_error(&p.positions)),
            Err(e) => {
                closure = f64::INFINITY;
                closure_note = e.to_string();
            }
        }
    }
    checks.push(check("loop closure (m)", closure, CLOSURE_TOL, closure_note));

    let mut mismatch = 0usize;
    let mut note = String::new();
    for &th in &thetas {
        match (dof(model, th), numeric_dof_oracle(model, th)) {
            (Ok(r), Ok(n)) if r.dof == 1 && n == 1 => {}
            (Ok(r), Ok(n)) => {
                mismatch += 1;
                note = format!("theta = {:.4} deg: screw DoF {}, oracle {}", th.to_degrees(), r.dof, n);
            }
            (Err(e), _) | (_, Err(e)) => {
                mismatch += 1;
                note = e.to_string();
            }
        }
    }
    checks.push(check("mobility = 1 (samples failing)", mismatch as f64, 0.0, note));

    let mut vel: f64 = 0.0;
    let mut acc: f64 = 0.0;
    let mut note = String::new();
    for &th in &thetas {
        let res = evaluate(model, th, opts.theta_dot, opts.theta_ddot).and_then(|s| {
            let fv = fd_velocity(model, th, opts.theta_dot)?;
            let fa = fd_acceleration(model, th, opts.theta_dot, opts.theta_ddot)?;
            let pick = |f: &[Vec3]| s.bodies.iter().map(|b| f[b.node]).collect::<Vec<_>>();
            let v: Vec<Vec3> = s.bodies.iter().map(|b| b.v).collect();
            let a: Vec<Vec3> = s.bodies.iter().map(|b| b.a).collect();
            Ok((relative_error(&v, &pick(&fv)), relative_error(&a, &pick(&fa))))
        });
        match res {
            Ok((ev, ea)) => {
                vel = vel.max(ev);
                acc = acc.max(ea);
            }
            Err(e) => {
                vel = f64::INFINITY;
                acc = f64::INFINITY;
                note = e.to_string();
            }
        }
    }
    checks.push(check("velocity vs FD (rel)", vel, VELOCITY_TOL, note.clone()));
    checks.push(check("acceleration vs FD (rel)", acc, ACCEL_TOL, note));

    let alpha = 2.0 * PI / opts.units.max(1) as f64;
    let mid = 0.5 * (opts.theta_min + opts.theta_max);
    let other = model.ring_unit(1, alpha);
    let sym = evaluate(model, mid, opts.theta_dot, opts.theta_ddot).and_then(|s0| {
        let s1 = evaluate(&other, mid, opts.theta_dot, opts.theta_ddot)?;
        let nodes: Vec<usize> = s0.bodies.iter().map(|b| b.node).collect();
        Ok(symmetry_check(&s0, &s1, 1, alpha, &nodes))
    });
    let (value, note) = match sym {
        Ok(v) => (v, String::new()),
        Err(e) => (f64::INFINITY, e.to_string()),
    };
    checks.push(check("ring symmetry (m/s, rad/s)", value, SYMMETRY_TOL, note));

    ValidationReport { checks }
}
