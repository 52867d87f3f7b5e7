//! Parametric design of the triple-scissors modular unit and the general
//! mechanism description.
//!
//! A [`MechanismModel`] is a set of nodes, straight links (rigid bars that carry
//! one or more nodes) and revolute joints. Every node is placed by a
//! [`NodeRule`] as a closed-form function of the deployment angle θ, so node
//! positions are exact and smooth in θ without any iterative solve.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::screw::{ring_rotation, RigidRotation, Vec3};

type P2 = Vector2<f64>;

/// Angles closer than this to 0 or π are treated as degenerate.
const ANGLE_EPS: f64 = 1e-6;

/// Top-level design inputs of the antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    /// Aperture diameter (m).
    pub diameter: f64,
    /// Number of modular units in the ring.
    pub units: usize,
    /// Deployed unit height (m).
    pub height: f64,
    /// Deployed scissor opening angle (rad).
    pub theta_deployed: f64,
    /// Stowed scissor opening angle (rad).
    pub theta_stowed: f64,
}

impl DesignParams {
    pub fn new(diameter: f64, units: usize, height: f64, theta_deployed: f64, theta_stowed: f64) -> Result<Self> {
        let p = DesignParams { diameter, units, height, theta_deployed, theta_stowed };
        p.validate()?;
        Ok(p)
    }

    /// Reference 25 m design with the tabulated height for `units`.
    pub fn reference(units: usize) -> Result<Self> {
        let theta1 = 80f64.to_radians();
        let height = default_height(25.0, units, theta1)?;
        DesignParams::new(25.0, units, height, theta1, 12.54f64.to_radians())
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.diameter, self.height, self.theta_deployed, self.theta_stowed]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::domain("design parameters must be finite"));
        }
        if self.diameter <= 0.0 {
            return Err(Error::domain("aperture diameter must be positive"));
        }
        if self.units < 3 {
            return Err(Error::domain(format!("need at least 3 units, got {}", self.units)));
        }
        if self.height <= 0.0 {
            return Err(Error::domain("unit height must be positive"));
        }
        if !(0.0 < self.theta_stowed && self.theta_stowed < self.theta_deployed && self.theta_deployed < PI) {
            return Err(Error::domain("angles must satisfy 0 < stowed < deployed < π"));
        }
        Ok(())
    }

    /// Ring step α = 2π/N.
    pub fn alpha(&self) -> f64 {
        2.0 * PI / self.units as f64
    }
}

/// Default deployed height for a unit count.
///
/// The tabulated 25 m designs use 5.09 / 3.436 / 2.581 m for 12 / 18 / 24
/// units. Other counts use the height that makes the unit span match the
/// stretched length at the deployed angle.
pub fn default_height(diameter: f64, units: usize, theta_deployed: f64) -> Result<f64> {
    if (diameter - 25.0).abs() < 1e-9 {
        match units {
            12 => return Ok(5.09),
            18 => return Ok(3.436),
            24 => return Ok(2.581),
            _ => {}
        }
    }
    let span = stretched_length(diameter, units)?;
    Ok(span / (1.5 * (0.5 * theta_deployed).tan()))
}

/// Chord of the regular N-gon inscribed in the aperture circle, `D·sin(π/N)`.
pub fn stretched_length(diameter: f64, units: usize) -> Result<f64> {
    if units < 3 {
        return Err(Error::domain(format!("need at least 3 units, got {units}")));
    }
    if !(diameter > 0.0) {
        return Err(Error::domain("aperture diameter must be positive"));
    }
    Ok(diameter * (PI / units as f64).sin())
}

/// Lengths of links L1..L14 (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSet {
    pub lengths: [f64; 14],
}

impl LinkSet {
    /// Length of link `L{index}` with 1-based `index`.
    pub fn l(&self, index: usize) -> f64 {
        self.lengths[index - 1]
    }
}

/// Link lengths from the deployed height and opening angle.
pub fn link_lengths(height: f64, theta_deployed: f64) -> Result<LinkSet> {
    if !(height > 0.0) || !height.is_finite() {
        return Err(Error::domain("unit height must be positive"));
    }
    if !(theta_deployed > ANGLE_EPS && theta_deployed < PI - ANGLE_EPS) {
        return Err(Error::domain(format!(
            "deployed angle {theta_deployed} rad is degenerate"
        )));
    }
    let half = 0.5 * theta_deployed;
    let l1 = height / half.cos();
    let l3 = 0.5 * height * half.tan();
    let l7 = 0.5 * l1;
    let l11 = 0.5 * l7;
    let mut lengths = [0.0; 14];
    lengths[0] = l1;
    lengths[1] = l1;
    lengths[2..6].fill(l3);
    lengths[6..10].fill(l7);
    lengths[10..14].fill(l11);
    Ok(LinkSet { lengths })
}

/// Extent `L·√(2(1 + cos θ))` of a scissor cell of rod length `L` at opening θ.
pub fn chord_width(rod: f64, theta: f64) -> f64 {
    2.0 * rod * (0.5 * theta).cos()
}

/// Inverse of [`chord_width`]: θ = 2·arccos(W / 2L).
pub fn solve_angle_from_width(rod: f64, width: f64) -> Result<f64> {
    if !(rod > 0.0) {
        return Err(Error::domain("rod length must be positive"));
    }
    if !(0.0..=2.0 * rod).contains(&width) {
        return Err(Error::domain(format!(
            "width {width} m outside [0, 2L = {}]",
            2.0 * rod
        )));
    }
    Ok(2.0 * (width / (2.0 * rod)).acos())
}

/// Closed-form placement of one node in the unit's X–Z plane.
///
/// Node references are indices into [`MechanismModel::nodes`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeRule {
    /// Stationary point.
    Fixed { x: f64, z: f64 },
    /// Pantograph lattice point `(u·L·sin(θ/2), v·L·cos(θ/2))`.
    Lattice { u: f64, v: f64, half_span: f64 },
    /// Point on a circle of `radius` about `center` at direction angle θ + phase
    /// measured from +Z toward +X.
    Crank { center: usize, radius: f64, phase: f64 },
    /// Apex of a two-bar dyad on nodes `a` and `b`; `side` (±1) picks the branch
    /// to the left (+1) of the directed line a → b.
    Dyad { a: usize, b: usize, len_a: f64, len_b: f64, side: f64 },
    /// Affine point `a + t·(b − a)`.
    OnSegment { a: usize, b: usize, t: f64 },
}

impl NodeRule {
    fn deps(&self) -> Vec<usize> {
        match *self {
            NodeRule::Fixed { .. } | NodeRule::Lattice { .. } => vec![],
            NodeRule::Crank { center, .. } => vec![center],
            NodeRule::Dyad { a, b, .. } | NodeRule::OnSegment { a, b, .. } => vec![a, b],
        }
    }

    fn scaled(&self, k: f64) -> NodeRule {
        match self.clone() {
            NodeRule::Fixed { x, z } => NodeRule::Fixed { x: k * x, z: k * z },
            NodeRule::Lattice { u, v, half_span } => NodeRule::Lattice { u, v, half_span: k * half_span },
            NodeRule::Crank { center, radius, phase } => NodeRule::Crank { center, radius: k * radius, phase },
            NodeRule::Dyad { a, b, len_a, len_b, side } => NodeRule::Dyad { a, b, len_a: k * len_a, len_b: k * len_b, side },
            r @ NodeRule::OnSegment { .. } => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    /// Coordinates at the model's rest angle (informative).
    pub rest: Vec3,
    pub rule: NodeRule,
}

/// A straight rigid bar between two end nodes, optionally carrying interior
/// pivot nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: String,
    pub ends: [usize; 2],
    /// Nominal end-to-end length (m).
    pub length: f64,
    /// Interior nodes rigidly attached to the bar.
    pub interior: Vec<usize>,
}

impl Link {
    pub fn carries(&self, node: usize) -> bool {
        self.ends.contains(&node) || self.interior.contains(&node)
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.ends.iter().copied().chain(self.interior.iter().copied())
    }
}

/// Revolute joint between `links[0]` and `links[1]` located at `node`.
///
/// The joint rate is the angular velocity of `links[1]` relative to `links[0]`
/// about `axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub id: String,
    pub links: [usize; 2],
    pub node: usize,
    pub axis: Vec3,
}

/// How node coordinates are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Coordinates exactly as produced by the node rules.
    Construction,
    /// Origin at the ground node, X along the ground link (ends[0] → ends[1]),
    /// Z completing a right-handed in-plane frame. The ground link is stationary.
    GroundLink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechanismModel {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub joints: Vec<Joint>,
    pub ground_link: usize,
    pub ground_node: usize,
    pub drive: usize,
    /// d(drive joint angle)/dθ.
    pub drive_ratio: f64,
    pub frame: Frame,
    /// Translation applied after the frame transform (ring placement).
    pub offset: Vec3,
    /// Rotation applied last, after the offset (ring unit orientation).
    pub rotation: RigidRotation,
    /// Nominal working range of θ (rad).
    pub working_range: Option<(f64, f64)>,
    /// Pairs (right-edge node, left-edge node): node `.0` of unit j coincides
    /// with node `.1` of unit j + 1 in a ring.
    pub interface: Vec<(usize, usize)>,
    pub design: Option<DesignParams>,
    order: Vec<usize>,
}

/// Node coordinates at one θ.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub theta: f64,
    pub positions: Vec<Vec3>,
    /// Set when θ lies outside the model's working range.
    pub extrapolated: bool,
}

impl MechanismModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nodes: Vec<Node>,
        links: Vec<Link>,
        joints: Vec<Joint>,
        ground_link: usize,
        ground_node: usize,
        drive: usize,
        drive_ratio: f64,
        frame: Frame,
    ) -> Result<Self> {
        let mut m = MechanismModel {
            nodes,
            links,
            joints,
            ground_link,
            ground_node,
            drive,
            drive_ratio,
            frame,
            offset: Vec3::zeros(),
            rotation: RigidRotation::identity(),
            working_range: None,
            interface: vec![],
            design: None,
            order: vec![],
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&mut self) -> Result<()> {
        let n = self.nodes.len();
        let mut seen = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if seen.insert(node.id.as_str(), i).is_some() {
                return Err(Error::domain(format!("duplicate node id `{}`", node.id)));
            }
            if node.rule.deps().iter().any(|&d| d >= n) {
                return Err(Error::domain(format!("node `{}` references a missing node", node.id)));
            }
        }
        for link in &self.links {
            if link.members().any(|i| i >= n) {
                return Err(Error::domain(format!("link `{}` references a missing node", link.id)));
            }
            if link.ends[0] == link.ends[1] {
                return Err(Error::domain(format!("link `{}` has coincident ends", link.id)));
            }
            if !(link.length > 0.0) {
                return Err(Error::domain(format!("link `{}` must have positive length", link.id)));
            }
        }
        for joint in &self.joints {
            let [a, b] = joint.links;
            if a >= self.links.len() || b >= self.links.len() || a == b {
                return Err(Error::domain(format!("joint `{}` has invalid links", joint.id)));
            }
            if joint.node >= n || !self.links[a].carries(joint.node) || !self.links[b].carries(joint.node) {
                return Err(Error::domain(format!(
                    "joint `{}` node is not carried by both of its links",
                    joint.id
                )));
            }
            if !(joint.axis.norm() > 0.0) {
                return Err(Error::domain(format!("joint `{}` has a zero axis", joint.id)));
            }
        }
        if self.ground_link >= self.links.len() {
            return Err(Error::domain("ground link does not exist"));
        }
        if self.ground_node >= n || !self.links[self.ground_link].carries(self.ground_node) {
            return Err(Error::domain("ground node must lie on the ground link"));
        }
        if self.drive >= self.joints.len() {
            return Err(Error::domain("drive joint does not exist"));
        }
        self.order = evaluation_order(&self.nodes)?;
        Ok(())
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn link_index(&self, id: &str) -> Option<usize> {
        self.links.iter().position(|l| l.id == id)
    }

    pub fn joint_index(&self, id: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.id == id)
    }

    /// Link whose motion a node reports: the first link carrying it.
    pub fn carrier(&self, node: usize) -> Option<usize> {
        self.links.iter().position(|l| l.carries(node))
    }

    /// Raw rule-frame coordinates in the X–Z plane.
    pub fn construction_positions(&self, theta: f64) -> Result<Vec<Vector2<f64>>> {
        if !theta.is_finite() || theta <= 0.0 || theta >= PI {
            return Err(Error::domain(format!("theta = {theta} rad outside (0, π)")));
        }
        let mut p = vec![P2::zeros(); self.nodes.len()];
        for &i in &self.order {
            p[i] = match self.nodes[i].rule {
                NodeRule::Fixed { x, z } => P2::new(x, z),
                NodeRule::Lattice { u, v, half_span } => {
                    let (s, c) = (0.5 * theta).sin_cos();
                    P2::new(u * half_span * s, v * half_span * c)
                }
                NodeRule::Crank { center, radius, phase } => {
                    let (s, c) = (theta + phase).sin_cos();
                    p[center] + radius * P2::new(s, c)
                }
                NodeRule::Dyad { a, b, len_a, len_b, side } => dyad_apex(p[a], p[b], len_a, len_b, side)
                    .ok_or_else(|| {
                        Error::domain(format!(
                            "dyad at node `{}` cannot close at theta = {:.4} deg",
                            self.nodes[i].id,
                            theta.to_degrees()
                        ))
                    })?,
                NodeRule::OnSegment { a, b, t } => p[a] + t * (p[b] - p[a]),
            };
        }
        Ok(p)
    }

    /// Node coordinates at θ in the model's kinematic frame.
    pub fn node_positions(&self, theta: f64) -> Result<Placement> {
        let raw = self.construction_positions(theta)?;
        let mapped: Vec<P2> = match self.frame {
            Frame::Construction => raw,
            Frame::GroundLink => {
                let origin = raw[self.ground_node];
                let [e0, e1] = self.links[self.ground_link].ends;
                let ex = (raw[e1] - raw[e0]).normalize();
                let ez = P2::new(-ex.y, ex.x);
                raw.iter()
                    .map(|q| {
                        let d = q - origin;
                        P2::new(d.dot(&ex), d.dot(&ez))
                    })
                    .collect()
            }
        };
        let positions = mapped
            .iter()
            .map(|q| self.rotation.apply(&(Vec3::new(q.x, 0.0, q.y) + self.offset)))
            .collect();
        let extrapolated = self
            .working_range
            .is_some_and(|(lo, hi)| theta < lo - 1e-12 || theta > hi + 1e-12);
        Ok(Placement { theta, positions, extrapolated })
    }

    /// Largest |distance − nominal| over all links, plus the largest
    /// off-line deviation of interior nodes.
    pub fn closure_error(&self, positions: &[Vec3]) -> f64 {
        self.links
            .iter()
            .map(|l| {
                let (a, b) = (positions[l.ends[0]], positions[l.ends[1]]);
                let dir = b - a;
                let mut err = (dir.norm() - l.length).abs();
                for &i in &l.interior {
                    let off = (positions[i] - a).cross(&dir).norm() / dir.norm();
                    err = err.max(off);
                }
                err
            })
            .fold(0.0, f64::max)
    }

    /// Copy with every length scaled by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::domain("scale factor must be positive"));
        }
        let mut m = self.clone();
        for node in &mut m.nodes {
            node.rest *= k;
            node.rule = node.rule.scaled(k);
        }
        for link in &mut m.links {
            link.length *= k;
        }
        m.offset *= k;
        m.design = None;
        Ok(m)
    }

    /// Copy whose link `id` is `delta` metres longer, with the dyad rule that
    /// realises it adjusted to match. Only dyad-placed links can be perturbed.
    pub fn with_link_perturbed(&self, id: &str, delta: f64) -> Result<Self> {
        let li = self
            .link_index(id)
            .ok_or_else(|| Error::domain(format!("no link `{id}`")))?;
        let [p, q] = self.links[li].ends;
        let mut m = self.clone();
        let mut adjusted = false;
        for (apex, other) in [(p, q), (q, p)] {
            if let NodeRule::Dyad { a, b, len_a, len_b, side } = m.nodes[apex].rule {
                let rule = if a == other {
                    NodeRule::Dyad { a, b, len_a: len_a + delta, len_b, side }
                } else if b == other {
                    NodeRule::Dyad { a, b, len_a, len_b: len_b + delta, side }
                } else {
                    continue;
                };
                m.nodes[apex].rule = rule;
                adjusted = true;
                break;
            }
        }
        if !adjusted {
            return Err(Error::domain(format!("link `{id}` is not placed by a dyad")));
        }
        m.links[li].length += delta;
        m.design = None;
        Ok(m)
    }

    /// Nodes with no carrying link are not allowed to report motion.
    pub fn reporting_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.carrier(i).is_some()).collect()
    }

    pub fn set_offset(&mut self, offset: Vec3) {
        self.offset = offset;
    }

    /// Unit axis of joint `j` in the placed frame.
    pub fn joint_axis(&self, j: usize) -> Vec3 {
        self.rotation.apply(&self.joints[j].axis.normalize())
    }

    /// Copy placed as unit `j` of a ring with step `alpha`.
    pub fn ring_unit(&self, j: usize, alpha: f64) -> Self {
        let mut m = self.clone();
        m.rotation = ring_rotation(j, alpha).compose(&self.rotation);
        m
    }
}

fn evaluation_order(nodes: &[Node]) -> Result<Vec<usize>> {
    let n = nodes.len();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let before = order.len();
        for i in 0..n {
            if !done[i] && nodes[i].rule.deps().iter().all(|&d| done[d]) {
                done[i] = true;
                order.push(i);
            }
        }
        if order.len() == before {
            let stuck: Vec<_> = (0..n).filter(|&i| !done[i]).map(|i| nodes[i].id.clone()).collect();
            return Err(Error::domain(format!("cyclic node placement rules: {stuck:?}")));
        }
    }
    Ok(order)
}

fn dyad_apex(a: P2, b: P2, la: f64, lb: f64, side: f64) -> Option<P2> {
    let d = (b - a).norm();
    if !(d > 0.0) || d > la + lb || d < (la - lb).abs() {
        return None;
    }
    let e = (b - a) / d;
    let n = P2::new(-e.y, e.x);
    let along = (la * la - lb * lb + d * d) / (2.0 * d);
    let h = (la * la - along * along).max(0.0).sqrt();
    Some(a + along * e + side.signum() * h * n)
}

/// Deployed/stowed envelope summary of a ring design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub units: usize,
    pub stretched_length_m: f64,
    pub unit_span_m: f64,
    pub deployed_height_m: f64,
    pub stowed_height_m: f64,
    pub deployed_diameter_m: f64,
    pub stowed_diameter_m: f64,
    pub deployed_volume_m3: f64,
    pub stowed_volume_m3: f64,
    pub storage_ratio_diameter: f64,
    pub storage_ratio_height: f64,
    pub storage_ratio_volume: f64,
    pub volume_method: String,
    /// Published reference values for the 25 m designs, when available.
    pub published: Option<PublishedRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublishedRow {
    pub stretched_length_m: f64,
    pub deployed_height_m: f64,
    pub stowed_height_m: f64,
    pub deployed_diameter_m: f64,
    pub stowed_diameter_m: f64,
    pub deployed_volume_m3: f64,
    pub stowed_volume_m3: f64,
    pub storage_ratio_diameter: f64,
    pub storage_ratio_height: f64,
    pub storage_ratio_volume: f64,
}

pub fn published_row(diameter: f64, units: usize) -> Option<PublishedRow> {
    if (diameter - 25.0).abs() > 1e-9 {
        return None;
    }
    let row = |s, dh, sh, sd, dv, sv, rd| PublishedRow {
        stretched_length_m: s,
        deployed_height_m: dh,
        stowed_height_m: sh,
        deployed_diameter_m: 25.0,
        stowed_diameter_m: sd,
        deployed_volume_m3: dv,
        stowed_volume_m3: sv,
        storage_ratio_diameter: rd,
        storage_ratio_height: 0.465,
        storage_ratio_volume: 27.6,
    };
    match units {
        12 => Some(row(6.470, 5.09, 11.010, 3.246, 2400.584, 86.979, 7.702)),
        18 => Some(row(4.34, 3.436, 7.386, 2.176, 724.61, 26.211, 11.5)),
        24 => Some(row(3.26, 2.581, 5.548, 1.634, 307.109, 11.114, 15.3)),
        _ => None,
    }
}

struct Envelope {
    height: f64,
    diameter: f64,
    interface_span: f64,
}

fn envelope(model: &MechanismModel, theta: f64, units: usize) -> Result<Envelope> {
    let p = model.construction_positions(theta)?;
    let (zmin, zmax) = p.iter().fold((f64::MAX, f64::MIN), |(lo, hi), q| (lo.min(q.y), hi.max(q.y)));
    let edge: Vec<f64> = model
        .interface
        .iter()
        .flat_map(|&(r, l)| [p[r].x, p[l].x])
        .collect();
    let span = edge.iter().cloned().fold(f64::MIN, f64::max) - edge.iter().cloned().fold(f64::MAX, f64::min);
    let half = PI / units as f64;
    let apothem = 0.5 * span / half.tan();
    let center = 0.5 * (edge.iter().cloned().fold(f64::MIN, f64::max) + edge.iter().cloned().fold(f64::MAX, f64::min));
    let radius = p
        .iter()
        .map(|q| (q.x - center).hypot(apothem))
        .fold(0.0, f64::max);
    Ok(Envelope { height: zmax - zmin, diameter: 2.0 * radius, interface_span: span })
}

/// Envelope report: heights from the unit geometry, diameters from the ring of
/// `N` units whose interface edges meet, volumes as circumscribing cylinders.
pub fn design_report(params: &DesignParams) -> Result<DesignReport> {
    params.validate()?;
    let model = build_unit(params)?;
    let dep = envelope(&model, params.theta_deployed, params.units)?;
    let stow = envelope(&model, params.theta_stowed, params.units)?;
    let cyl = |d: f64, h: f64| PI * 0.25 * d * d * h;
    let deployed_volume = cyl(dep.diameter, dep.height);
    let stowed_volume = cyl(stow.diameter, stow.height);
    Ok(DesignReport {
        units: params.units,
        stretched_length_m: stretched_length(params.diameter, params.units)?,
        unit_span_m: dep.interface_span,
        deployed_height_m: dep.height,
        stowed_height_m: stow.height,
        deployed_diameter_m: dep.diameter,
        stowed_diameter_m: stow.diameter,
        deployed_volume_m3: deployed_volume,
        stowed_volume_m3: stowed_volume,
        storage_ratio_diameter: dep.diameter / stow.diameter,
        storage_ratio_height: dep.height / stow.height,
        storage_ratio_volume: deployed_volume / stowed_volume,
        volume_method: "circumscribing cylinder of the ring envelope".into(),
        published: published_row(params.diameter, params.units),
    })
}

/// Link and node ids of the reference unit, by role.
pub mod unit_links {
    pub const CENTRAL: [&str; 2] = ["L1", "L2"];
    pub const HORIZONTAL: [&str; 4] = ["L3", "L4", "L5", "L6"];
    pub const HALF: [&str; 4] = ["L7", "L8", "L9", "L10"];
    pub const QUARTER: [&str; 4] = ["L11", "L12", "L13", "L14"];
    /// Outer ends of the side cells.
    pub const PERIPHERAL_NODES: [&str; 4] = ["HLt", "HLb", "HRt", "HRb"];
    /// Central pivot and the inner rhombus around it.
    pub const INNER_NODES: [&str; 5] = ["C", "A1", "A3", "B1", "B3"];
}

/// Builds the reference triple-scissors modular unit.
///
/// Layout, in lattice units `(u, v)` mapped to `(u·w/2, v·H/2)` with
/// `w = l1·sin(θ/2)`, `H = l1·cos(θ/2)`:
///
/// * central scissor L1 (BL → TR) and L2 (BR → TL), pivot C at mid-span;
/// * half-scale scissors L7/L8 (left) and L9/L10 (right) pinned to the
///   quarter points of the central rods, reaching the unit edges at u = ±3/2;
/// * quarter-scale scissors L11/L12 in the upper-left rhombus and L13/L14 in
///   the lower-right rhombus, each pinned at three ends;
/// * top links L3 (TL → T0) and L4 (T0 → K_T on L1) and bottom links
///   L5 (B0 → BR) and L6 (B0 → K_B on L1), each pair a dyad whose apex
///   lies on the centre line at full deployment, making L3 and L5 level there.
///
/// The unit is point-symmetric about C. Every scissor rod moves in the same
/// lattice, so all cells share the single opening angle θ. L5 is the ground
/// link with the bottom apex B0 as ground node O; L2 → L1 at C is the drive
/// joint with rate dθ/dt.
pub fn build_unit(params: &DesignParams) -> Result<MechanismModel> {
    params.validate()?;
    let links = link_lengths(params.height, params.theta_deployed)?;
    let half_span = 0.5 * links.l(1);
    let l3 = links.l(3);
    // K_T sits on L1 at lattice u = cos θ1 so that |T0 − K_T| = l3 when T0 = (0, H).
    let s = params.theta_deployed.cos();
    if s.abs() >= 1.0 - 1e-9 {
        return Err(Error::domain("deployed angle leaves no room for the horizontal links"));
    }

    let lattice_pts: [(&str, f64, f64); 27] = [
        ("BL", -1.0, 0.0),
        ("TR", 1.0, 2.0),
        ("BR", 1.0, 0.0),
        ("TL", -1.0, 2.0),
        ("C", 0.0, 1.0),
        ("A1", -0.5, 0.5),
        ("A3", 0.5, 1.5),
        ("B1", 0.5, 0.5),
        ("B3", -0.5, 1.5),
        ("PL", -1.0, 1.0),
        ("PR", 1.0, 1.0),
        ("HLt", -1.5, 1.5),
        ("HLb", -1.5, 0.5),
        ("HRt", 1.5, 1.5),
        ("HRb", 1.5, 0.5),
        ("QLp", -1.0, 1.5),
        ("QLa", -0.75, 1.25),
        ("QLf", -1.25, 1.75),
        ("QLc", -1.25, 1.25),
        ("QLd", -0.75, 1.75),
        ("QRp", 1.0, 0.5),
        ("QRa", 0.75, 0.75),
        ("QRf", 1.25, 0.25),
        ("QRc", 1.25, 0.75),
        ("QRd", 0.75, 0.25),
        ("KT", s, 1.0 + s),
        ("KB", -s, 1.0 - s),
    ];
    let mut nodes: Vec<Node> = lattice_pts
        .iter()
        .map(|&(id, u, v)| Node {
            id: id.into(),
            rest: Vec3::zeros(),
            rule: NodeRule::Lattice { u, v, half_span },
        })
        .collect();
    let idx = |nodes: &Vec<Node>, id: &str| nodes.iter().position(|n| n.id == id).unwrap();
    let (tl, kt, br, kb) = (idx(&nodes, "TL"), idx(&nodes, "KT"), idx(&nodes, "BR"), idx(&nodes, "KB"));
    nodes.push(Node {
        id: "T0".into(),
        rest: Vec3::zeros(),
        rule: NodeRule::Dyad { a: tl, b: kt, len_a: l3, len_b: l3, side: 1.0 },
    });
    nodes.push(Node {
        id: "B0".into(),
        rest: Vec3::zeros(),
        rule: NodeRule::Dyad { a: br, b: kb, len_a: l3, len_b: l3, side: 1.0 },
    });

    let link_defs: [(&str, &str, &str, &[&str]); 14] = [
        ("L1", "BL", "TR", &["C", "A1", "A3", "KT", "KB"]),
        ("L2", "BR", "TL", &["C", "B1", "B3", "QLd", "QRd"]),
        ("L3", "TL", "T0", &[]),
        ("L4", "T0", "KT", &[]),
        ("L5", "B0", "BR", &[]),
        ("L6", "B0", "KB", &[]),
        ("L7", "A1", "HLt", &["PL", "QLc"]),
        ("L8", "B3", "HLb", &["PL", "QLa"]),
        ("L9", "B1", "HRt", &["PR", "QRa"]),
        ("L10", "A3", "HRb", &["PR", "QRc"]),
        ("L11", "QLa", "QLf", &["QLp"]),
        ("L12", "QLc", "QLd", &["QLp"]),
        ("L13", "QRa", "QRf", &["QRp"]),
        ("L14", "QRc", "QRd", &["QRp"]),
    ];
    let model_links: Vec<Link> = link_defs
        .iter()
        .enumerate()
        .map(|(i, (id, a, b, interior))| Link {
            id: (*id).into(),
            ends: [idx(&nodes, a), idx(&nodes, b)],
            length: links.lengths[i],
            interior: interior.iter().map(|n| idx(&nodes, n)).collect(),
        })
        .collect();

    let joint_defs: [(&str, &str, &str); 21] = [
        ("L2", "L1", "C"),
        ("L1", "L7", "A1"),
        ("L2", "L8", "B3"),
        ("L7", "L8", "PL"),
        ("L2", "L9", "B1"),
        ("L1", "L10", "A3"),
        ("L9", "L10", "PR"),
        ("L11", "L12", "QLp"),
        ("L8", "L11", "QLa"),
        ("L7", "L12", "QLc"),
        ("L2", "L12", "QLd"),
        ("L13", "L14", "QRp"),
        ("L9", "L13", "QRa"),
        ("L10", "L14", "QRc"),
        ("L2", "L14", "QRd"),
        ("L3", "L4", "T0"),
        ("L2", "L3", "TL"),
        ("L1", "L4", "KT"),
        ("L5", "L6", "B0"),
        ("L2", "L5", "BR"),
        ("L1", "L6", "KB"),
    ];
    let lidx = |id: &str| link_defs.iter().position(|d| d.0 == id).unwrap();
    let joints: Vec<Joint> = joint_defs
        .iter()
        .enumerate()
        .map(|(k, (a, b, node))| Joint {
            id: format!("J{:02}", k + 1),
            links: [lidx(a), lidx(b)],
            node: idx(&nodes, node),
            axis: Vec3::y(),
        })
        .collect();

    let ground_link = lidx("L5");
    let ground_node = idx(&nodes, "B0");
    let mut model = MechanismModel::new(nodes, model_links, joints, ground_link, ground_node, 0, 1.0, Frame::GroundLink)?;
    model.working_range = Some((params.theta_stowed, params.theta_deployed));
    model.interface = vec![
        (model.node_index("HRt").unwrap(), model.node_index("HLt").unwrap()),
        (model.node_index("HRb").unwrap(), model.node_index("HLb").unwrap()),
    ];
    model.design = Some(*params);

    // Ring placement: the unit plane sits at the apothem that closes the ring
    // at full deployment.
    let deployed = model.node_positions(params.theta_deployed)?;
    let (r, l) = model.interface[0];
    let span = deployed.positions[r].x - deployed.positions[l].x;
    let apothem = 0.5 * span / (PI / params.units as f64).tan();
    let offset = Vec3::new(0.0, -apothem, 0.0);
    model.set_offset(offset);
    let rest = model.node_positions(params.theta_deployed)?;
    for (node, p) in model.nodes.iter_mut().zip(rest.positions) {
        node.rest = p;
    }
    Ok(model)
}

/// Planar four-bar: ground O2–O4, crank O2–A, coupler A–B, rocker O4–B.
/// θ is the crank direction angle; the crank joint is the drive.
pub fn four_bar(ground: f64, crank: f64, coupler: f64, rocker: f64) -> Result<MechanismModel> {
    let fixed = |id: &str, x: f64| Node { id: id.into(), rest: Vec3::new(x, 0.0, 0.0), rule: NodeRule::Fixed { x, z: 0.0 } };
    let nodes = vec![
        fixed("O2", 0.0),
        fixed("O4", ground),
        Node { id: "A".into(), rest: Vec3::zeros(), rule: NodeRule::Crank { center: 0, radius: crank, phase: 0.0 } },
        Node {
            id: "B".into(),
            rest: Vec3::zeros(),
            rule: NodeRule::Dyad { a: 2, b: 1, len_a: coupler, len_b: rocker, side: -1.0 },
        },
    ];
    let link = |id: &str, a, b, length| Link { id: id.into(), ends: [a, b], length, interior: vec![] };
    let links = vec![
        link("ground", 0, 1, ground),
        link("crank", 0, 2, crank),
        link("coupler", 2, 3, coupler),
        link("rocker", 1, 3, rocker),
    ];
    let joint = |id: &str, a, b, node| Joint { id: id.into(), links: [a, b], node, axis: Vec3::y() };
    let joints = vec![
        joint("Ja", 0, 1, 0),
        joint("Jb", 1, 2, 2),
        joint("Jc", 2, 3, 3),
        joint("Jd", 3, 0, 1),
    ];
    let mut m = MechanismModel::new(nodes, links, joints, 0, 0, 0, 1.0, Frame::Construction)?;
    let rest = m.node_positions(1.0)?;
    for (node, p) in m.nodes.iter_mut().zip(rest.positions) {
        node.rest = p;
    }
    Ok(m)
}

/// Three bars pinned into a triangle: a structure with no mobility.
pub fn rigid_triangle() -> Result<MechanismModel> {
    let pts = [("P", 0.0, 0.0), ("Q", 2.0, 0.0), ("R", 0.7, 1.5)];
    let nodes: Vec<Node> = pts
        .iter()
        .map(|&(id, x, z)| Node { id: id.into(), rest: Vec3::new(x, 0.0, z), rule: NodeRule::Fixed { x, z } })
        .collect();
    let len = |a: usize, b: usize| (nodes[a].rest - nodes[b].rest).norm();
    let links = vec![
        Link { id: "PQ".into(), ends: [0, 1], length: len(0, 1), interior: vec![] },
        Link { id: "QR".into(), ends: [1, 2], length: len(1, 2), interior: vec![] },
        Link { id: "RP".into(), ends: [2, 0], length: len(2, 0), interior: vec![] },
    ];
    let joints = vec![
        Joint { id: "Jq".into(), links: [0, 1], node: 1, axis: Vec3::y() },
        Joint { id: "Jr".into(), links: [1, 2], node: 2, axis: Vec3::y() },
        Joint { id: "Jp".into(), links: [2, 0], node: 0, axis: Vec3::y() },
    ];
    MechanismModel::new(nodes, links, joints, 0, 0, 0, 1.0, Frame::Construction)
}

/// Open serial chain of `n` bars hanging from a fixed pivot; no loops.
pub fn open_chain(n: usize) -> Result<MechanismModel> {
    let mut nodes = vec![Node { id: "N0".into(), rest: Vec3::zeros(), rule: NodeRule::Fixed { x: 0.0, z: 0.0 } }];
    let mut links = vec![];
    let mut joints = vec![];
    for k in 1..=n {
        let phase = 0.3 * k as f64;
        nodes.push(Node {
            id: format!("N{k}"),
            rest: Vec3::zeros(),
            rule: NodeRule::Crank { center: k - 1, radius: 1.0, phase },
        });
        links.push(Link { id: format!("B{k}"), ends: [k - 1, k], length: 1.0, interior: vec![] });
        if k > 1 {
            joints.push(Joint { id: format!("J{k}"), links: [k - 2, k - 1], node: k - 1, axis: Vec3::y() });
        }
    }
    if joints.is_empty() {
        return Err(Error::domain("open chain needs at least two bars"));
    }
    MechanismModel::new(nodes, links, joints, 0, 0, 0, 1.0, Frame::Construction)
}
