//! Deployment drive profiles, trajectory logging, node statistics and
//! unit-to-unit comparison.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{evaluate_in, Configuration, KinematicState};
use crate::mobility::loop_basis;
use crate::model::MechanismModel;
use crate::screw::{ring_rotation, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// Constant rate.
    Linear,
    /// Cubic `3s² − 2s³` with zero end rates.
    Smoothstep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveProfile {
    pub kind: ProfileKind,
    pub theta_start: f64,
    pub theta_end: f64,
    /// Duration of the deploy leg (s).
    pub t_deploy: f64,
    /// Whether the run folds back to `theta_start` after deploying.
    pub cycle: bool,
    /// Total duration of a full cycle (s).
    pub t_cycle: f64,
}

impl Default for DriveProfile {
    fn default() -> Self {
        DriveProfile {
            kind: ProfileKind::Linear,
            theta_start: 12.54f64.to_radians(),
            theta_end: 80f64.to_radians(),
            t_deploy: 53.0,
            cycle: false,
            t_cycle: 102.0,
        }
    }
}

impl DriveProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_deploy > 0.0) || !self.t_deploy.is_finite() {
            return Err(Error::domain("deploy time must be positive"));
        }
        if self.theta_start == self.theta_end || !self.theta_start.is_finite() || !self.theta_end.is_finite() {
            return Err(Error::domain("start and end angles must differ"));
        }
        if self.cycle && !(self.t_cycle > self.t_deploy) {
            return Err(Error::domain("cycle time must exceed the deploy time"));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        if self.cycle {
            self.t_cycle
        } else {
            self.t_deploy
        }
    }
}

fn leg(kind: ProfileKind, from: f64, to: f64, span: f64, t: f64) -> (f64, f64, f64) {
    let d = to - from;
    let s = t / span;
    match kind {
        ProfileKind::Linear => (from + d * s, d / span, 0.0),
        ProfileKind::Smoothstep => (
            from + d * s * s * (3.0 - 2.0 * s),
            d * 6.0 * s * (1.0 - s) / span,
            d * (6.0 - 12.0 * s) / (span * span),
        ),
    }
}

/// `(θ, θ̇, θ̈)` at time `t`.
pub fn theta_of_t(profile: &DriveProfile, t: f64) -> Result<(f64, f64, f64)> {
    profile.validate()?;
    let total = profile.duration();
    if !(0.0..=total).contains(&t) {
        return Err(Error::domain(format!("t = {t} s outside [0, {total}] s")));
    }
    let p = profile;
    if t <= p.t_deploy {
        Ok(leg(p.kind, p.theta_start, p.theta_end, p.t_deploy, t))
    } else {
        Ok(leg(p.kind, p.theta_end, p.theta_start, p.t_cycle - p.t_deploy, t - p.t_deploy))
    }
}

/// A node of a (possibly multi-unit) log.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeTag {
    pub unit: usize,
    pub id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSample {
    pub position: Vec3,
    pub v: Vec3,
    pub omega: Vec3,
    pub a: Vec3,
    pub eps: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub theta: f64,
    /// Aligned with [`TrajectoryLog::nodes`].
    pub nodes: Vec<NodeSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub nodes: Vec<NodeTag>,
    /// Interface pairs as positions in `nodes`: `.0` of unit j meets `.1` of unit j + 1.
    pub interface: Vec<(usize, usize)>,
    pub samples: Vec<TrajectorySample>,
}

impl TrajectoryLog {
    pub fn units(&self) -> usize {
        self.nodes.iter().map(|n| n.unit + 1).max().unwrap_or(0)
    }

    /// Label used in files: bare id for single-unit logs, `uNN:id` otherwise.
    pub fn label(&self, k: usize) -> String {
        let n = &self.nodes[k];
        if self.units() > 1 {
            format!("u{:02}:{}", n.unit, n.id)
        } else {
            n.id.clone()
        }
    }

    pub fn node_position(&self, id: &str, unit: usize) -> Option<usize> {
        self.nodes.iter().position(|n| n.unit == unit && n.id == id)
    }

    /// Sub-log of one unit, relabelled as unit 0.
    pub fn unit(&self, j: usize) -> TrajectoryLog {
        let keep: Vec<usize> = (0..self.nodes.len()).filter(|&k| self.nodes[k].unit == j).collect();
        TrajectoryLog {
            nodes: keep.iter().map(|&k| NodeTag { unit: 0, id: self.nodes[k].id.clone() }).collect(),
            interface: vec![],
            samples: self
                .samples
                .iter()
                .map(|s| TrajectorySample { t: s.t, theta: s.theta, nodes: keep.iter().map(|&k| s.nodes[k]).collect() })
                .collect(),
        }
    }
}

fn sample_from(state: &KinematicState, t: f64) -> TrajectorySample {
    TrajectorySample {
        t,
        theta: state.theta,
        nodes: state
            .bodies
            .iter()
            .map(|b| NodeSample { position: b.r, v: b.v, omega: b.omega, a: b.a, eps: b.eps })
            .collect(),
    }
}

/// Number of samples `t = k·dt` that fit in the profile.
pub fn sample_count(profile: &DriveProfile, dt: f64) -> usize {
    (profile.duration() / dt + 1e-9).floor() as usize + 1
}

/// Evaluates the mechanism at `t = k·dt` over the whole profile.
pub fn simulate(model: &MechanismModel, profile: &DriveProfile, dt: f64) -> Result<TrajectoryLog> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::domain("time step must be positive"));
    }
    profile.validate()?;
    let basis = loop_basis(model)?;
    let total = profile.duration();
    let n = sample_count(profile, dt);
    let samples: Result<Vec<TrajectorySample>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let t = (k as f64 * dt).min(total);
            let (theta, rate, acc) = theta_of_t(profile, t)?;
            let cfg = Configuration::with_basis(model, basis.clone(), theta)?;
            let state = evaluate_in(model, &cfg, theta, rate, acc)?;
            Ok(sample_from(&state, t))
        })
        .collect();
    let reporting = model.reporting_nodes();
    let slot = |node: usize| reporting.iter().position(|&r| r == node);
    let interface = model
        .interface
        .iter()
        .filter_map(|&(r, l)| Some((slot(r)?, slot(l)?)))
        .collect();
    Ok(TrajectoryLog {
        nodes: reporting.iter().map(|&i| NodeTag { unit: 0, id: model.nodes[i].id.clone() }).collect(),
        interface,
        samples: samples?,
    })
}

/// Max / min / mean of one scalar series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub max: f64,
    pub min: f64,
    pub avg: f64,
}

impl Stat {
    pub fn of(series: impl IntoIterator<Item = f64>) -> Option<Stat> {
        let (mut max, mut min, mut sum, mut n) = (f64::NEG_INFINITY, f64::INFINITY, 0.0, 0usize);
        for x in series {
            max = max.max(x);
            min = min.min(x);
            sum += x;
            n += 1;
        }
        if n == 0 {
            return None;
        }
        // the mean of a constant series can drift one ulp outside [min, max]
        let avg = (sum / n as f64).clamp(min, max);
        Some(Stat { max, min, avg })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeStatsRow {
    pub node: String,
    pub linear_velocity: Stat,
    pub angular_velocity: Stat,
    pub linear_acceleration: Stat,
    pub angular_acceleration: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatUnits {
    pub linear_velocity: String,
    pub angular_velocity: String,
    pub linear_acceleration: String,
    pub angular_acceleration: String,
}

impl Default for StatUnits {
    fn default() -> Self {
        StatUnits {
            linear_velocity: "mm/s".into(),
            angular_velocity: "rad/s".into(),
            linear_acceleration: "mm/s^2".into(),
            angular_acceleration: "rad/s^2".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    pub units: StatUnits,
    pub samples: usize,
    pub nodes: Vec<NodeStatsRow>,
}

impl NodeStats {
    pub fn row(&self, node: &str) -> Option<&NodeStatsRow> {
        self.nodes.iter().find(|r| r.node == node)
    }
}

/// Max/min/mean of each node's speed, angular rate and their accelerations.
pub fn node_stats(log: &TrajectoryLog) -> Result<NodeStats> {
    if log.samples.is_empty() || log.nodes.is_empty() {
        return Err(Error::EmptyLog);
    }
    let column = |k: usize, f: fn(&NodeSample) -> f64| {
        Stat::of(log.samples.iter().map(move |s| f(&s.nodes[k]))).expect("non-empty log")
    };
    let nodes = (0..log.nodes.len())
        .map(|k| NodeStatsRow {
            node: log.label(k),
            linear_velocity: column(k, |n| 1e3 * n.v.norm()),
            angular_velocity: column(k, |n| n.omega.norm()),
            linear_acceleration: column(k, |n| 1e3 * n.a.norm()),
            angular_acceleration: column(k, |n| n.eps.norm()),
        })
        .collect();
    Ok(NodeStats { units: StatUnits::default(), samples: log.samples.len(), nodes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    pub mse: f64,
    pub rmse: f64,
}

impl ErrorPair {
    fn from_mse(mse: f64) -> Self {
        ErrorPair { mse, rmse: mse.sqrt() }
    }
}

/// Componentwise errors in SI units (m/s, rad/s, m/s², rad/s²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitComparison {
    pub linear_velocity: ErrorPair,
    pub angular_velocity: ErrorPair,
    pub linear_acceleration: ErrorPair,
    pub angular_acceleration: ErrorPair,
}

/// Pointwise MSE/RMSE between two logs sampled at the same times over the same nodes.
pub fn compare_units(a: &TrajectoryLog, b: &TrajectoryLog) -> Result<UnitComparison> {
    if a.samples.is_empty() || b.samples.is_empty() {
        return Err(Error::EmptyLog);
    }
    if a.samples.len() != b.samples.len() {
        return Err(Error::Alignment(format!("{} vs {} samples", a.samples.len(), b.samples.len())));
    }
    let ids = |l: &TrajectoryLog| l.nodes.iter().map(|n| n.id.clone()).collect::<Vec<_>>();
    if ids(a) != ids(b) {
        return Err(Error::Alignment("node sets differ".into()));
    }
    for (x, y) in a.samples.iter().zip(&b.samples) {
        if (x.t - y.t).abs() > 1e-9 {
            return Err(Error::Alignment(format!("timestamps differ: {} vs {}", x.t, y.t)));
        }
    }
    let mse = |f: fn(&NodeSample) -> Vec3| {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (x, y) in a.samples.iter().zip(&b.samples) {
            for (p, q) in x.nodes.iter().zip(&y.nodes) {
                sum += (f(p) - f(q)).norm_squared();
                n += 3;
            }
        }
        ErrorPair::from_mse(sum / n as f64)
    };
    Ok(UnitComparison {
        linear_velocity: mse(|n| n.v),
        angular_velocity: mse(|n| n.omega),
        linear_acceleration: mse(|n| n.a),
        angular_acceleration: mse(|n| n.eps),
    })
}

/// Rotates every vector of a log by `j·α` about Z and tags it as unit `j`.
pub fn rotate_log(log: &TrajectoryLog, j: usize, alpha: f64) -> TrajectoryLog {
    let rot = ring_rotation(j, alpha);
    TrajectoryLog {
        nodes: log.nodes.iter().map(|n| NodeTag { unit: j, id: n.id.clone() }).collect(),
        interface: log.interface.clone(),
        samples: log
            .samples
            .iter()
            .map(|s| TrajectorySample {
                t: s.t,
                theta: s.theta,
                nodes: s
                    .nodes
                    .iter()
                    .map(|n| NodeSample {
                        position: rot.apply(&n.position),
                        v: rot.apply(&n.v),
                        omega: rot.apply(&n.omega),
                        a: rot.apply(&n.a),
                        eps: rot.apply(&n.eps),
                    })
                    .collect(),
            })
            .collect(),
    }
}

/// Whole-ring log: `units` copies of the unit-0 log rotated by `j·α`.
///
/// With more than one unit, each unit's left interface nodes are dropped in
/// favour of the matching right interface nodes of its neighbour.
pub fn ring_assembly(log: &TrajectoryLog, units: usize, alpha: f64) -> Result<TrajectoryLog> {
    if units == 0 {
        return Err(Error::domain("ring needs at least one unit"));
    }
    if units == 1 {
        return Ok(log.clone());
    }
    let dropped: Vec<usize> = log.interface.iter().map(|&(_, l)| l).collect();
    let keep: Vec<usize> = (0..log.nodes.len()).filter(|k| !dropped.contains(k)).collect();
    let parts: Vec<TrajectoryLog> = (0..units).into_par_iter().map(|j| rotate_log(log, j, alpha)).collect();
    let mut nodes = Vec::with_capacity(units * keep.len());
    for part in &parts {
        nodes.extend(keep.iter().map(|&k| part.nodes[k].clone()));
    }
    let samples = (0..log.samples.len())
        .map(|i| TrajectorySample {
            t: log.samples[i].t,
            theta: log.samples[i].theta,
            nodes: parts.iter().flat_map(|p| keep.iter().map(move |&k| p.samples[i].nodes[k])).collect(),
        })
        .collect();
    Ok(TrajectoryLog { nodes, interface: vec![], samples })
}

/// Largest distance between matching interface nodes of adjacent units at θ.
pub fn interface_gap(model: &MechanismModel, theta: f64, units: usize) -> Result<f64> {
    let p = model.node_positions(theta)?.positions;
    let rot = ring_rotation(1, 2.0 * PI / units as f64);
    Ok(model
        .interface
        .iter()
        .map(|&(r, l)| (p[r] - rot.apply(&p[l])).norm())
        .fold(0.0, f64::max))
}
