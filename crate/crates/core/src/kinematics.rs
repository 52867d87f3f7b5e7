//! Joint rates from the constraint null space, twist propagation along the
//! spanning tree, and joint accelerations with Lie-bracket terms.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mobility::{assemble_constraints, joint_screws, loop_basis, LoopBasis, RANK_TOL};
use crate::model::MechanismModel;
use crate::screw::{
    lie_bracket, ring_rotation, rotate_accel, rotate_twist, spatial_accel_point, twist_point_velocity,
    SpatialAccel, Twist, Vec3,
};

/// Relative loop residual above which a rate vector is rejected.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Motion of one body point: a node, reported through the link that carries it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BodyState {
    pub node: usize,
    pub link: usize,
    pub r: Vec3,
    pub twist: Twist,
    pub omega: Vec3,
    pub v: Vec3,
    pub accel: SpatialAccel,
    pub eps: Vec3,
    pub a: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KinematicState {
    pub theta: f64,
    pub drive_rate: f64,
    pub drive_accel: f64,
    /// Joint rates w_i (rad/s), indexed like `model.joints`.
    pub rates: Vec<f64>,
    /// Joint accelerations ε_i (rad/s²).
    pub accels: Vec<f64>,
    /// Link twists and spatial accelerations, indexed like `model.links`.
    pub link_twists: Vec<Twist>,
    pub link_accels: Vec<SpatialAccel>,
    /// One entry per reporting node.
    pub bodies: Vec<BodyState>,
}

/// Geometry needed by the rate and acceleration solvers at one θ.
pub struct Configuration {
    pub basis: LoopBasis,
    pub positions: Vec<Vec3>,
    pub screws: Vec<Twist>,
    pub constraints: DMatrix<f64>,
}

impl Configuration {
    pub fn new(model: &MechanismModel, theta: f64) -> Result<Self> {
        let basis = loop_basis(model)?;
        Configuration::with_basis(model, basis, theta)
    }

    pub fn with_basis(model: &MechanismModel, basis: LoopBasis, theta: f64) -> Result<Self> {
        let positions = model.node_positions(theta)?.positions;
        let screws = joint_screws(model, &positions);
        let constraints = assemble_constraints(&basis, &screws);
        Ok(Configuration { basis, positions, screws, constraints })
    }
}

/// Null-space rates scaled so the drive joint turns at `drive_rate`.
pub fn solve_rates(model: &MechanismModel, theta: f64, drive_rate: f64) -> Result<Vec<f64>> {
    let frame = Configuration::new(model, theta)?;
    rates_in(model, &frame, drive_rate).map_err(|e| with_theta(e, theta))
}

pub fn rates_in(model: &MechanismModel, frame: &Configuration, drive_rate: f64) -> Result<Vec<f64>> {
    let c = &frame.constraints;
    let n = c.ncols();
    // Pad to at least square so the SVD exposes the full right singular basis.
    let padded = if c.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (c.nrows(), n)).copy_from(c);
        p
    } else {
        c.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let top = svd.singular_values.max();
    let zero: Vec<usize> = (0..n)
        .filter(|&k| !(top > 0.0) || svd.singular_values[k] <= RANK_TOL * top)
        .collect();
    if zero.len() != 1 {
        let gap = svd
            .singular_values
            .iter()
            .filter(|&&s| s > RANK_TOL * top)
            .fold(f64::INFINITY, |m, &s| m.min(s / top));
        return Err(Error::Mobility { theta_deg: f64::NAN, dof: zero.len(), gap });
    }
    let null = v_t.row(zero[0]).transpose();
    let component = null[model.drive];
    if component.abs() < 1e-9 {
        return Err(Error::DriveSelection { joint: model.joints[model.drive].id.clone(), component });
    }
    let rates: Vec<f64> = null.iter().map(|x| x / component * drive_rate).collect();
    check_consistency(frame, &rates)?;
    Ok(rates)
}

fn check_consistency(frame: &Configuration, rates: &[f64]) -> Result<()> {
    let w = DVector::from_column_slice(rates);
    let res = (&frame.constraints * &w).amax();
    let wmax = w.amax();
    let smax = frame.screws.iter().map(Twist::max_abs).fold(0.0, f64::max);
    let residual = res / (wmax * smax).max(1.0);
    if residual > CONSISTENCY_TOL || !residual.is_finite() {
        return Err(Error::Consistency { residual, limit: CONSISTENCY_TOL });
    }
    Ok(())
}

/// Absolute link twists from joint rates, accumulated from the ground.
pub fn propagate_velocity(model: &MechanismModel, frame: &Configuration, rates: &[f64]) -> Result<Vec<Twist>> {
    check_consistency(frame, rates)?;
    let mut v = vec![Twist::zero(); model.links.len()];
    for &(j, parent, child) in &frame.basis.tree {
        let sign = if model.joints[j].links[0] == parent { 1.0 } else { -1.0 };
        v[child] = v[parent] + (sign * rates[j]) * frame.screws[j];
    }
    Ok(v)
}

/// Sum of brackets `Σ_{i<k} [T_i, T_k]` with `T = sign·w·S` along each loop.
pub fn loop_lie_terms(frame: &Configuration, rates: &[f64]) -> Vec<Twist> {
    frame
        .basis
        .loops
        .iter()
        .map(|lp| {
            let mut acc = Twist::zero();
            let mut lie = Twist::zero();
            for &(j, s) in &lp.steps {
                let t = (s * rates[j]) * frame.screws[j];
                lie += lie_bracket(&acc, &t);
                acc += t;
            }
            lie
        })
        .collect()
}

/// Joint accelerations from the differentiated loop equations with the drive
/// joint's acceleration fixed.
pub fn solve_accels(model: &MechanismModel, frame: &Configuration, rates: &[f64], drive_accel: f64) -> Result<Vec<f64>> {
    let c = &frame.constraints;
    let n = c.ncols();
    let lie = loop_lie_terms(frame, rates);
    let mut rhs = DVector::zeros(c.nrows());
    for (k, t) in lie.iter().enumerate() {
        let tv = t.to_vector();
        for r in 0..6 {
            rhs[6 * k + r] = -tv[r];
        }
    }
    rhs -= c.column(model.drive) * drive_accel;
    let free: Vec<usize> = (0..n).filter(|&j| j != model.drive).collect();
    let mut accels = vec![0.0; n];
    accels[model.drive] = drive_accel;
    if free.is_empty() {
        return Ok(accels);
    }
    let reduced = c.select_columns(free.iter());
    if reduced.nrows() == 0 {
        return Err(Error::Mobility { theta_deg: f64::NAN, dof: n, gap: 0.0 });
    }
    let svd = reduced.svd(true, true);
    let top = svd.singular_values.max();
    let kept = svd.singular_values.iter().filter(|&&s| s > RANK_TOL * top).count();
    if kept < free.len() {
        return Err(Error::Mobility { theta_deg: f64::NAN, dof: free.len() - kept + 1, gap: 0.0 });
    }
    let x = svd.solve(&rhs, RANK_TOL * top).map_err(|e| Error::domain(e.to_string()))?;
    for (k, &j) in free.iter().enumerate() {
        accels[j] = x[k];
    }
    Ok(accels)
}

/// Absolute link spatial accelerations, accumulated from the ground.
///
/// Crossing joint j from body a: `A_b = A_a + σ(ε_j S_j + w_j [V_a, S_j])`.
pub fn propagate_accel(
    model: &MechanismModel,
    frame: &Configuration,
    rates: &[f64],
    twists: &[Twist],
    accels: &[f64],
) -> Vec<SpatialAccel> {
    let mut a = vec![SpatialAccel::zero(); model.links.len()];
    for &(j, parent, child) in &frame.basis.tree {
        let sign = if model.joints[j].links[0] == parent { 1.0 } else { -1.0 };
        let s = frame.screws[j];
        let d = accels[j] * s + rates[j] * lie_bracket(&twists[parent], &s);
        a[child] = a[parent] + SpatialAccel::from_twist(sign * d);
    }
    a
}

fn node_states(model: &MechanismModel, positions: &[Vec3], twists: &[Twist], accs: &[SpatialAccel]) -> Vec<BodyState> {
    model
        .reporting_nodes()
        .into_iter()
        .map(|node| {
            let link = model.carrier(node).expect("reporting node has a carrier");
            let r = positions[node];
            let twist = twists[link];
            let (omega, v) = twist_point_velocity(&twist, &r);
            let accel = accs[link];
            let (eps, a) = spatial_accel_point(&accel, &omega, &twist.vel, &r);
            BodyState { node, link, r, twist, omega, v, accel, eps, a }
        })
        .collect()
}

/// Full state at θ for a deployment rate θ̇ and acceleration θ̈.
pub fn evaluate(model: &MechanismModel, theta: f64, theta_dot: f64, theta_ddot: f64) -> Result<KinematicState> {
    let frame = Configuration::new(model, theta)?;
    evaluate_in(model, &frame, theta, theta_dot, theta_ddot)
}

pub fn evaluate_in(
    model: &MechanismModel,
    frame: &Configuration,
    theta: f64,
    theta_dot: f64,
    theta_ddot: f64,
) -> Result<KinematicState> {
    let drive_rate = model.drive_ratio * theta_dot;
    let drive_accel = model.drive_ratio * theta_ddot;
    let rates = rates_in(model, frame, drive_rate).map_err(|e| with_theta(e, theta))?;
    let twists = propagate_velocity(model, frame, &rates)?;
    let accels = solve_accels(model, frame, &rates, drive_accel).map_err(|e| with_theta(e, theta))?;
    let link_accels = propagate_accel(model, frame, &rates, &twists, &accels);
    let bodies = node_states(model, &frame.positions, &twists, &link_accels);
    Ok(KinematicState {
        theta,
        drive_rate,
        drive_accel,
        rates,
        accels,
        link_twists: twists,
        link_accels,
        bodies,
    })
}

fn with_theta(e: Error, theta: f64) -> Error {
    match e {
        Error::Mobility { dof, gap, .. } => Error::Mobility { theta_deg: theta.to_degrees(), dof, gap },
        other => other,
    }
}

/// State of ring unit `j`: every vector block rotated by `j·α` about Z.
pub fn to_global(state: &KinematicState, j: usize, alpha: f64) -> KinematicState {
    let rot = ring_rotation(j, alpha);
    let mut out = state.clone();
    for t in &mut out.link_twists {
        *t = rotate_twist(&rot, t);
    }
    for a in &mut out.link_accels {
        *a = rotate_accel(&rot, a);
    }
    for b in &mut out.bodies {
        b.r = rot.apply(&b.r);
        b.twist = rotate_twist(&rot, &b.twist);
        b.omega = rot.apply(&b.omega);
        b.v = rot.apply(&b.v);
        b.accel = rotate_accel(&rot, &b.accel);
        b.eps = rot.apply(&b.eps);
        b.a = rot.apply(&b.a);
    }
    out
}

/// Largest |Δv| or |Δω| over `nodes` between unit 0 and unit `j`, after
/// rotating unit `j` back by `−j·α`.
pub fn symmetry_check(unit0: &KinematicState, unit_j: &KinematicState, j: usize, alpha: f64, nodes: &[usize]) -> f64 {
    let back = ring_rotation(j, alpha).inverse();
    let find = |s: &KinematicState, n: usize| s.bodies.iter().find(|b| b.node == n).copied();
    let mut worst: f64 = 0.0;
    for &n in nodes {
        match (find(unit0, n), find(unit_j, n)) {
            (Some(a), Some(b)) => {
                worst = worst
                    .max((a.v - back.apply(&b.v)).norm())
                    .max((a.omega - back.apply(&b.omega)).norm());
            }
            _ => worst = f64::INFINITY,
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_unit, four_bar, rigid_triangle, DesignParams};

    fn unit() -> MechanismModel {
        build_unit(&DesignParams::reference(12).unwrap()).unwrap()
    }

    #[test]
    fn zero_drive_gives_zero_rates() {
        let m = unit();
        let w = solve_rates(&m, 0.8, 0.0).unwrap();
        assert!(w.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rates_scale_with_drive() {
        let m = unit();
        let a = solve_rates(&m, 0.8, 0.1).unwrap();
        let b = solve_rates(&m, 0.8, 0.2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x - y).abs() <= 1e-15 * y.abs().max(1.0));
        }
        assert!((a[m.drive] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rates_satisfy_constraints() {
        let m = unit();
        let frame = Configuration::new(&m, 1.0).unwrap();
        let w = rates_in(&m, &frame, 0.3).unwrap();
        let res = &frame.constraints * DVector::from_vec(w);
        assert!(res.amax() < 1e-10);
    }

    #[test]
    fn ground_is_at_rest() {
        let m = unit();
        let s = evaluate(&m, 0.9, 0.05, 0.01).unwrap();
        assert_eq!(s.link_twists[m.ground_link], Twist::zero());
        assert_eq!(s.link_accels[m.ground_link], SpatialAccel::zero());
        let o = s.bodies.iter().find(|b| b.node == m.ground_node).unwrap();
        assert!(o.v.norm() < 1e-15 && o.a.norm() < 1e-15);
    }

    #[test]
    fn zero_motion_is_zero_everywhere() {
        let m = unit();
        let s = evaluate(&m, 0.9, 0.0, 0.0).unwrap();
        assert!(s.accels.iter().all(|&x| x == 0.0));
        assert!(s.bodies.iter().all(|b| b.v.norm() == 0.0 && b.a.norm() == 0.0));
    }

    #[test]
    fn bracket_terms_scale_quadratically() {
        let m = unit();
        let frame = Configuration::new(&m, 1.1).unwrap();
        let w1 = rates_in(&m, &frame, 0.1).unwrap();
        let w2 = rates_in(&m, &frame, 0.2).unwrap();
        for (a, b) in loop_lie_terms(&frame, &w1).iter().zip(loop_lie_terms(&frame, &w2)) {
            let d = 4.0 * *a - b;
            assert!(d.max_abs() <= 1e-14 * b.max_abs().max(1e-3));
        }
    }

    #[test]
    fn constant_drive_still_accelerates_followers() {
        let m = unit();
        let frame = Configuration::new(&m, 1.1).unwrap();
        let w = rates_in(&m, &frame, 0.1).unwrap();
        let e = solve_accels(&m, &frame, &w, 0.0).unwrap();
        assert_eq!(e[m.drive], 0.0);
        assert!(e.iter().any(|x| x.abs() > 1e-6));
    }

    #[test]
    fn rigid_structure_has_no_rate_solution() {
        let m = rigid_triangle().unwrap();
        assert!(matches!(solve_rates(&m, 1.0, 0.1), Err(Error::Mobility { .. })));
    }

    #[test]
    fn inconsistent_rates_are_rejected() {
        let m = four_bar(4.0, 1.0, 3.5, 3.0).unwrap();
        let frame = Configuration::new(&m, 1.0).unwrap();
        assert!(matches!(
            propagate_velocity(&m, &frame, &[1.0, 0.0, 0.0, 0.0]),
            Err(Error::Consistency { .. })
        ));
    }

    #[test]
    fn full_turn_is_identity() {
        let m = unit();
        let s = evaluate(&m, 0.9, 0.05, 0.0).unwrap();
        let alpha = 2.0 * std::f64::consts::PI / 12.0;
        assert_eq!(to_global(&s, 0, alpha), s);
        let t = to_global(&s, 12, alpha);
        for (a, b) in s.bodies.iter().zip(&t.bodies) {
            assert!((a.v - b.v).amax() < 1e-12 && (a.r - b.r).amax() < 1e-12);
        }
    }
}
