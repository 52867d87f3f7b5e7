//! Independent loops of the body graph and the screw constraint matrix.
//!
//! Bodies are the graph vertices and joints the edges. A spanning tree rooted
//! at the ground link leaves `J − B + 1` chords, each closing one loop.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::MechanismModel;
use crate::screw::Twist;

/// Relative singular-value cutoff used to decide rank.
pub const RANK_TOL: f64 = 1e-10;

/// One closed loop, walked in order. Each step is `(joint, sign)`: sign is +1
/// when the joint is crossed from `links[0]` to `links[1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    pub steps: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopBasis {
    pub loops: Vec<Loop>,
    /// Tree joints in breadth-first order from the ground, as
    /// `(joint, parent body, child body)`.
    pub tree: Vec<(usize, usize, usize)>,
}

impl LoopBasis {
    pub fn len(&self) -> usize {
        self.loops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }
}

/// Builds a fundamental loop basis, rejecting disconnected joint graphs.
pub fn loop_basis(model: &MechanismModel) -> Result<LoopBasis> {
    let nb = model.links.len();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![vec![]; nb];
    for (j, joint) in model.joints.iter().enumerate() {
        let [a, b] = joint.links;
        adj[a].push((j, b));
        adj[b].push((j, a));
    }
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; nb];
    let mut depth = vec![usize::MAX; nb];
    let mut tree_joint = vec![false; model.joints.len()];
    let mut tree = vec![];
    let root = model.ground_link;
    depth[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(a) = queue.pop_front() {
        for &(j, b) in &adj[a] {
            if depth[b] == usize::MAX {
                depth[b] = depth[a] + 1;
                parent[b] = Some((j, a));
                tree_joint[j] = true;
                tree.push((j, a, b));
                queue.push_back(b);
            }
        }
    }
    if depth.contains(&usize::MAX) {
        return Err(Error::Disconnected { components: components(model, &adj) });
    }

    let sign = |j: usize, from: usize| if model.joints[j].links[0] == from { 1.0 } else { -1.0 };
    let mut loops = vec![];
    for (j, joint) in model.joints.iter().enumerate() {
        if tree_joint[j] {
            continue;
        }
        let [a, b] = joint.links;
        // Tree paths from a and b up to their common ancestor.
        let (mut x, mut y) = (a, b);
        let mut up_a = vec![];
        let mut up_b = vec![];
        while x != y {
            if depth[x] >= depth[y] {
                let (pj, p) = parent[x].expect("non-root has a parent");
                up_a.push((pj, x, p));
                x = p;
            } else {
                let (pj, p) = parent[y].expect("non-root has a parent");
                up_b.push((pj, y, p));
                y = p;
            }
        }
        // Walk a → ancestor → b, then close with the chord b → a.
        let mut steps: Vec<(usize, f64)> = up_a.iter().map(|&(pj, from, _)| (pj, sign(pj, from))).collect();
        steps.extend(up_b.iter().rev().map(|&(pj, _, p)| (pj, sign(pj, p))));
        steps.push((j, sign(j, b)));
        loops.push(Loop { steps });
    }
    Ok(LoopBasis { loops, tree })
}

fn components(model: &MechanismModel, adj: &[Vec<(usize, usize)>]) -> Vec<Vec<String>> {
    let nb = model.links.len();
    let mut comp = vec![usize::MAX; nb];
    let mut out = vec![];
    for start in 0..nb {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![];
        let mut stack = vec![start];
        comp[start] = id;
        while let Some(a) = stack.pop() {
            members.push(model.links[a].id.clone());
            for &(_, b) in &adj[a] {
                if comp[b] == usize::MAX {
                    comp[b] = id;
                    stack.push(b);
                }
            }
        }
        out.push(members);
    }
    out
}

/// Unit joint screws at the configuration given by `positions`.
pub fn joint_screws(model: &MechanismModel, positions: &[crate::screw::Vec3]) -> Vec<Twist> {
    model
        .joints
        .iter()
        .enumerate()
        .map(|(k, j)| Twist::revolute(model.joint_axis(k), positions[j.node]))
        .collect()
}

/// Stacks the loop closure equations: block (loop, joint) is `sign·S_joint`.
pub fn assemble_constraints(basis: &LoopBasis, screws: &[Twist]) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(6 * basis.len(), screws.len());
    for (k, lp) in basis.loops.iter().enumerate() {
        for &(j, s) in &lp.steps {
            let col = (s * screws[j]).to_vector();
            for r in 0..6 {
                c[(6 * k + r, j)] += col[r];
            }
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MobilityReport {
    pub theta_rad: f64,
    pub dof: usize,
    pub rank: usize,
    pub joints: usize,
    pub loops: usize,
    /// Singular values divided by the largest one, descending.
    pub singular_values: Vec<f64>,
    /// Smallest relative singular value counted as non-zero.
    pub smallest_kept: f64,
    /// Largest relative singular value counted as zero (0 when none).
    pub largest_dropped: f64,
}

/// Rank of `c` using [`RANK_TOL`], with the relative spectrum.
pub fn rank_report(c: &DMatrix<f64>) -> (usize, Vec<f64>) {
    if c.nrows() == 0 || c.ncols() == 0 {
        return (0, vec![]);
    }
    let mut sv: Vec<f64> = c.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let top = sv[0];
    if !(top > 0.0) {
        return (0, vec![0.0; sv.len()]);
    }
    let rel: Vec<f64> = sv.iter().map(|s| s / top).collect();
    (rel.iter().filter(|&&s| s > RANK_TOL).count(), rel)
}

/// Instantaneous mobility at θ: the nullity of the constraint matrix.
pub fn dof(model: &MechanismModel, theta: f64) -> Result<MobilityReport> {
    let basis = loop_basis(model)?;
    let placement = model.node_positions(theta)?;
    let screws = joint_screws(model, &placement.positions);
    let c = assemble_constraints(&basis, &screws);
    let (rank, rel) = rank_report(&c);
    let joints = model.joints.len();
    let smallest_kept = rel.iter().copied().filter(|&s| s > RANK_TOL).fold(f64::NAN, f64::min);
    let largest_dropped = rel.iter().copied().filter(|&s| s <= RANK_TOL).fold(0.0, f64::max);
    Ok(MobilityReport {
        theta_rad: theta,
        dof: joints - rank,
        rank,
        joints,
        loops: basis.len(),
        singular_values: rel,
        smallest_kept: if smallest_kept.is_nan() { 0.0 } else { smallest_kept },
        largest_dropped,
    })
}

/// Fails with [`Error::Mobility`] unless the mechanism has exactly one DoF at θ.
pub fn require_single_dof(model: &MechanismModel, theta: f64) -> Result<MobilityReport> {
    let r = dof(model, theta)?;
    if r.dof != 1 {
        return Err(Error::Mobility { theta_deg: theta.to_degrees(), dof: r.dof, gap: r.smallest_kept });
    }
    Ok(r)
}

/// Relative singular-value cutoff for the finite-difference oracle.
pub const ORACLE_TOL: f64 = 1e-7;

/// Mobility from a finite-difference Jacobian, independent of the screw
/// machinery.
///
/// Every non-ground link gets six pose coordinates (rotation vector about its
/// midpoint and translation). Each joint contributes a point-coincidence
/// residual (3) and an axis-alignment residual `R_a·s × R_b·s` (3). The
/// Jacobian at the identity pose is built by central differences and its
/// nullity returned.
pub fn numeric_dof_oracle(model: &MechanismModel, theta: f64) -> Result<usize> {
    use nalgebra::{Rotation3, Vector3};

    let placement = model.node_positions(theta)?;
    let pos = &placement.positions;
    let scale = pos.iter().map(|p| p.amax()).fold(1.0, f64::max);
    let h = 1e-6 * scale;
    if scale + h == scale || !h.is_finite() {
        return Err(Error::StepUnderflow(h));
    }
    let movers: Vec<usize> = (0..model.links.len()).filter(|&l| l != model.ground_link).collect();
    let mut slot = vec![None; model.links.len()];
    for (k, &l) in movers.iter().enumerate() {
        slot[l] = Some(k);
    }
    let centers: Vec<Vector3<f64>> = model
        .links
        .iter()
        .map(|l| 0.5 * (pos[l.ends[0]] + pos[l.ends[1]]))
        .collect();
    let axes: Vec<Vector3<f64>> = (0..model.joints.len()).map(|j| model.joint_axis(j)).collect();

    let residual = |q: &[f64]| -> Vec<f64> {
        let pose = |link: usize| -> (Rotation3<f64>, Vector3<f64>) {
            match slot[link] {
                None => (Rotation3::identity(), Vector3::zeros()),
                Some(k) => (
                    Rotation3::new(Vector3::new(q[6 * k], q[6 * k + 1], q[6 * k + 2])),
                    Vector3::new(q[6 * k + 3], q[6 * k + 4], q[6 * k + 5]),
                ),
            }
        };
        let mut out = Vec::with_capacity(6 * model.joints.len());
        for (j, joint) in model.joints.iter().enumerate() {
            let [a, b] = joint.links;
            let (ra, ta) = pose(a);
            let (rb, tb) = pose(b);
            let p = pos[joint.node];
            let pa = ra * (p - centers[a]) + centers[a] + ta;
            let pb = rb * (p - centers[b]) + centers[b] + tb;
            let d = (pa - pb) / scale;
            let c = (ra * axes[j]).cross(&(rb * axes[j]));
            out.extend_from_slice(&[d.x, d.y, d.z, c.x, c.y, c.z]);
        }
        out
    };

    let n = 6 * movers.len();
    let m = 6 * model.joints.len();
    let mut jac = DMatrix::zeros(m.max(n), n);
    let mut q = vec![0.0; n];
    for col in 0..n {
        // rotation coordinates are dimensionless, translations carry length
        let step = if col % 6 < 3 { h / scale } else { h };
        q[col] = step;
        let fp = residual(&q);
        q[col] = -step;
        let fm = residual(&q);
        q[col] = 0.0;
        let unit = if col % 6 < 3 { 1.0 } else { scale };
        for row in 0..m {
            jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * step) * unit;
        }
    }
    let sv = jac.svd(false, false).singular_values;
    let top = sv.max();
    if !(top > 0.0) {
        return Ok(n);
    }
    Ok(n - sv.iter().filter(|&&s| s > ORACLE_TOL * top).count())
}
