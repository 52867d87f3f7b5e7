//! Mechanism files (JSON), trajectory CSV and report serialization.
//!
//! Angles are degrees in every file and radians in memory; the conversion
//! happens only here.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DesignParams, DesignReport, Frame, Joint, Link, LinkSet, MechanismModel, Node, NodeRule};
use crate::screw::{RigidRotation, Vec3};
use crate::sim::{NodeSample, NodeStats, NodeTag, TrajectoryLog, TrajectorySample};

pub const FORMAT_TAG: &str = "scissorkin-mechanism/1";

pub const CSV_HEADER: [&str; 18] = [
    "t_s", "node", "theta_deg", "x_m", "y_m", "z_m", "vx", "vy", "vz", "wx", "wy", "wz", "ax", "ay", "az", "ex",
    "ey", "ez",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismFile {
    pub format: String,
    pub frame: Frame,
    pub nodes: Vec<NodeEntry>,
    pub links: Vec<LinkEntry>,
    pub joints: Vec<JointEntry>,
    pub ground_node: String,
    pub ground_link: String,
    pub drive_joint: String,
    #[serde(default = "one")]
    pub drive_ratio: f64,
    #[serde(default)]
    pub placement: Option<PlacementEntry>,
    #[serde(default)]
    pub working_range_deg: Option<[f64; 2]>,
    #[serde(default)]
    pub interface: Vec<[String; 2]>,
    #[serde(default)]
    pub design: Option<DesignEntry>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: String,
    pub rest_m: [f64; 3],
    pub rule: RuleEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleEntry {
    Fixed { x_m: f64, z_m: f64 },
    Lattice { u: f64, v: f64, half_span_m: f64 },
    Crank { center: String, radius_m: f64, phase_deg: f64 },
    Dyad { a: String, b: String, len_a_m: f64, len_b_m: f64, side: f64 },
    OnSegment { a: String, b: String, t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEntry {
    pub id: String,
    pub nodes: [String; 2],
    #[serde(default)]
    pub interior: Vec<String>,
    pub length_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointEntry {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub axis: [f64; 3],
    pub links: [String; 2],
    pub node: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementEntry {
    pub offset_m: [f64; 3],
    pub rotation: [[f64; 3]; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignEntry {
    #[serde(rename = "D_m")]
    pub d_m: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "H_m")]
    pub h_m: f64,
    pub theta1_deg: f64,
    pub theta2_deg: f64,
}

impl From<&DesignParams> for DesignEntry {
    fn from(p: &DesignParams) -> Self {
        DesignEntry {
            d_m: p.diameter,
            n: p.units,
            h_m: p.height,
            theta1_deg: deg_out(p.theta_deployed),
            theta2_deg: deg_out(p.theta_stowed),
        }
    }
}

impl DesignEntry {
    pub fn to_params(&self) -> Result<DesignParams> {
        DesignParams::new(self.d_m, self.n, self.h_m, self.theta1_deg.to_radians(), self.theta2_deg.to_radians())
    }
}

/// Radians to degrees, rounded to 1e-12 deg so that values entered in
/// degrees survive a write/read cycle bit-for-bit.
pub fn deg_out(rad: f64) -> f64 {
    (rad.to_degrees() * 1e12).round() / 1e12
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

impl From<&MechanismModel> for MechanismFile {
    fn from(m: &MechanismModel) -> Self {
        let nid = |i: usize| m.nodes[i].id.clone();
        let lid = |i: usize| m.links[i].id.clone();
        let nodes = m
            .nodes
            .iter()
            .map(|n| NodeEntry {
                id: n.id.clone(),
                rest_m: arr(&n.rest),
                rule: match n.rule {
                    NodeRule::Fixed { x, z } => RuleEntry::Fixed { x_m: x, z_m: z },
                    NodeRule::Lattice { u, v, half_span } => RuleEntry::Lattice { u, v, half_span_m: half_span },
                    NodeRule::Crank { center, radius, phase } => RuleEntry::Crank {
                        center: nid(center),
                        radius_m: radius,
                        phase_deg: deg_out(phase),
                    },
                    NodeRule::Dyad { a, b, len_a, len_b, side } => {
                        RuleEntry::Dyad { a: nid(a), b: nid(b), len_a_m: len_a, len_b_m: len_b, side }
                    }
                    NodeRule::OnSegment { a, b, t } => RuleEntry::OnSegment { a: nid(a), b: nid(b), t },
                },
            })
            .collect();
        let r = m.rotation.matrix();
        let placement = (m.offset != Vec3::zeros() || *r != Matrix3::identity()).then(|| PlacementEntry {
            offset_m: arr(&m.offset),
            rotation: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
        });
        MechanismFile {
            format: FORMAT_TAG.into(),
            frame: m.frame,
            nodes,
            links: m
                .links
                .iter()
                .map(|l| LinkEntry {
                    id: l.id.clone(),
                    nodes: [nid(l.ends[0]), nid(l.ends[1])],
                    interior: l.interior.iter().map(|&i| nid(i)).collect(),
                    length_m: l.length,
                })
                .collect(),
            joints: m
                .joints
                .iter()
                .map(|j| JointEntry {
                    id: j.id.clone(),
                    kind: "revolute".into(),
                    axis: arr(&j.axis),
                    links: [lid(j.links[0]), lid(j.links[1])],
                    node: nid(j.node),
                })
                .collect(),
            ground_node: nid(m.ground_node),
            ground_link: lid(m.ground_link),
            drive_joint: m.joints[m.drive].id.clone(),
            drive_ratio: m.drive_ratio,
            placement,
            working_range_deg: m.working_range.map(|(a, b)| [deg_out(a), deg_out(b)]),
            interface: m.interface.iter().map(|&(a, b)| [nid(a), nid(b)]).collect(),
            design: m.design.as_ref().map(DesignEntry::from),
        }
    }
}

impl MechanismFile {
    pub fn to_model(&self) -> Result<MechanismModel> {
        if self.format != FORMAT_TAG {
            return Err(Error::Parse(format!("unsupported format `{}`, expected `{FORMAT_TAG}`", self.format)));
        }
        let node_ix: HashMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let link_ix: HashMap<&str, usize> = self.links.iter().enumerate().map(|(i, l)| (l.id.as_str(), i)).collect();
        let node = |id: &str| node_ix.get(id).copied().ok_or_else(|| Error::Parse(format!("unknown node `{id}`")));
        let link = |id: &str| link_ix.get(id).copied().ok_or_else(|| Error::Parse(format!("unknown link `{id}`")));
        let vec3 = |a: &[f64; 3]| Vec3::new(a[0], a[1], a[2]);

        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let rule = match &n.rule {
                    RuleEntry::Fixed { x_m, z_m } => NodeRule::Fixed { x: *x_m, z: *z_m },
                    RuleEntry::Lattice { u, v, half_span_m } => NodeRule::Lattice { u: *u, v: *v, half_span: *half_span_m },
                    RuleEntry::Crank { center, radius_m, phase_deg } => NodeRule::Crank {
                        center: node(center)?,
                        radius: *radius_m,
                        phase: phase_deg.to_radians(),
                    },
                    RuleEntry::Dyad { a, b, len_a_m, len_b_m, side } => NodeRule::Dyad {
                        a: node(a)?,
                        b: node(b)?,
                        len_a: *len_a_m,
                        len_b: *len_b_m,
                        side: *side,
                    },
                    RuleEntry::OnSegment { a, b, t } => NodeRule::OnSegment { a: node(a)?, b: node(b)?, t: *t },
                };
                Ok(Node { id: n.id.clone(), rest: vec3(&n.rest_m), rule })
            })
            .collect::<Result<Vec<_>>>()?;
        let links = self
            .links
            .iter()
            .map(|l| {
                Ok(Link {
                    id: l.id.clone(),
                    ends: [node(&l.nodes[0])?, node(&l.nodes[1])?],
                    length: l.length_m,
                    interior: l.interior.iter().map(|i| node(i)).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let joints = self
            .joints
            .iter()
            .map(|j| {
                if j.kind != "revolute" {
                    return Err(Error::Parse(format!("joint `{}`: unsupported type `{}`", j.id, j.kind)));
                }
                Ok(Joint {
                    id: j.id.clone(),
                    links: [link(&j.links[0])?, link(&j.links[1])?],
                    node: node(&j.node)?,
                    axis: vec3(&j.axis),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let drive = self
            .joints
            .iter()
            .position(|j| j.id == self.drive_joint)
            .ok_or_else(|| Error::Parse(format!("unknown drive joint `{}`", self.drive_joint)))?;
        let mut model = MechanismModel::new(
            nodes,
            links,
            joints,
            link(&self.ground_link)?,
            node(&self.ground_node)?,
            drive,
            self.drive_ratio,
            self.frame,
        )?;
        if let Some(p) = &self.placement {
            model.offset = vec3(&p.offset_m);
            let r = p.rotation;
            model.rotation = RigidRotation::from_matrix(Matrix3::new(
                r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
            ))?;
        }
        model.working_range = self.working_range_deg.map(|[a, b]| (a.to_radians(), b.to_radians()));
        model.interface = self
            .interface
            .iter()
            .map(|[a, b]| Ok((node(a)?, node(b)?)))
            .collect::<Result<_>>()?;
        model.design = self.design.as_ref().map(DesignEntry::to_params).transpose()?;
        Ok(model)
    }
}

fn parse_error(origin: &str, e: serde_json::Error) -> Error {
    Error::Parse(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
}

pub fn mechanism_to_json(model: &MechanismModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&MechanismFile::from(model))?)
}

/// Parses a mechanism description; `origin` names the source in diagnostics.
pub fn mechanism_from_json(text: &str, origin: &str) -> Result<MechanismModel> {
    let file: MechanismFile = serde_json::from_str(text).map_err(|e| parse_error(origin, e))?;
    file.to_model()
}

pub fn read_mechanism(path: &Path) -> Result<MechanismModel> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    mechanism_from_json(&text, &path.display().to_string())
}

pub fn write_mechanism(model: &MechanismModel, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(mechanism_to_json(model)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(f.flush()?)
}

fn set_field(buf: &mut String, x: f64) {
    use std::fmt::Write as _;
    buf.clear();
    let _ = write!(buf, "{x}");
}

/// Writes one row per (sample, node).
pub fn write_trajectory<W: Write>(log: &TrajectoryLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let labels: Vec<String> = (0..log.nodes.len()).map(|k| log.label(k)).collect();
    let mut fields: Vec<String> = vec![String::new(); CSV_HEADER.len()];
    for s in &log.samples {
        set_field(&mut fields[0], s.t);
        set_field(&mut fields[2], s.theta.to_degrees());
        for (label, n) in labels.iter().zip(&s.nodes) {
            fields[1].clone_from(label);
            for (k, v) in [n.position, n.v, n.omega, n.a, n.eps].iter().enumerate() {
                for c in 0..3 {
                    set_field(&mut fields[3 + 3 * k + c], v[c]);
                }
            }
            w.write_record(&fields)?;
        }
    }
    Ok(w.flush()?)
}

pub fn write_trajectory_file(log: &TrajectoryLog, path: &Path) -> Result<()> {
    write_trajectory(log, BufWriter::new(File::create(path)?))
}

fn parse_label(label: &str) -> NodeTag {
    if let Some(rest) = label.strip_prefix('u') {
        if let Some((num, id)) = rest.split_once(':') {
            if let Ok(unit) = num.parse() {
                return NodeTag { unit, id: id.to_string() };
            }
        }
    }
    NodeTag { unit: 0, id: label.to_string() }
}

/// Reads a trajectory CSV back into a log. Rows sharing a timestamp form one sample.
pub fn read_trajectory<R: Read>(input: R) -> Result<TrajectoryLog> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut nodes: Vec<NodeTag> = vec![];
    let mut slot: HashMap<String, usize> = HashMap::new();
    let mut samples: Vec<TrajectorySample> = vec![];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("row {}: column `{}` is not a number: `{}`", line + 2, CSV_HEADER[k], &rec[k])))
        };
        let t = num(0)?;
        let v3 = |k: usize| -> Result<Vec3> { Ok(Vec3::new(num(k)?, num(k + 1)?, num(k + 2)?)) };
        let sample = NodeSample { position: v3(3)?, v: v3(6)?, omega: v3(9)?, a: v3(12)?, eps: v3(15)? };
        let new_time = samples.last().is_none_or(|s| s.t != t);
        if new_time {
            samples.push(TrajectorySample { t, theta: num(2)?.to_radians(), nodes: vec![] });
        }
        let label = rec[1].to_string();
        let k = match slot.get(&label) {
            Some(&k) => k,
            None => {
                if samples.len() > 1 {
                    return Err(Error::Parse(format!("row {}: node `{label}` not present in the first sample", line + 2)));
                }
                nodes.push(parse_label(&label));
                slot.insert(label.clone(), nodes.len() - 1);
                nodes.len() - 1
            }
        };
        let current = samples.last_mut().expect("pushed above");
        if k != current.nodes.len() {
            return Err(Error::Parse(format!("row {}: node `{label}` out of order", line + 2)));
        }
        current.nodes.push(sample);
    }
    if samples.is_empty() {
        return Err(Error::EmptyLog);
    }
    if let Some(s) = samples.iter().find(|s| s.nodes.len() != nodes.len()) {
        return Err(Error::Parse(format!("sample at t = {} has {} of {} nodes", s.t, s.nodes.len(), nodes.len())));
    }
    Ok(TrajectoryLog { nodes, interface: vec![], samples })
}

pub fn read_trajectory_file(path: &Path) -> Result<TrajectoryLog> {
    read_trajectory(BufReader::new(File::open(path)?))
}

pub fn stats_to_json(stats: &NodeStats) -> Result<String> {
    Ok(serde_json::to_string_pretty(stats)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkLength {
    pub id: String,
    pub length_m: f64,
}

/// Design output: the link table and the envelope report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignOutput {
    pub design: DesignEntry,
    pub links: Vec<LinkLength>,
    pub report: DesignReport,
}

impl DesignOutput {
    pub fn new(params: &DesignParams, links: &LinkSet, report: DesignReport) -> Self {
        DesignOutput {
            design: DesignEntry::from(params),
            links: links
                .lengths
                .iter()
                .enumerate()
                .map(|(i, &l)| LinkLength { id: format!("L{}", i + 1), length_m: l })
                .collect(),
            report,
        }
    }
}
