use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kinematics::{forward_kinematics, inverse_kinematics, IkOptions};
use crate::model::{resolve_full_state, FingerName, HandModel, ACTUATED_COUNT};

pub const KAPANDJI_FILE_VERSION: u32 = 1;
pub const KAPANDJI_POSITIONS: usize = 11;
/// Default reachability tolerance (m).
pub const DEFAULT_TOLERANCE: f64 = 0.005;

pub const DEFAULT_KAPANDJI_JSON: &str = include_str!("../../data/kapandji.json");

/// A point fixed to a segment of one finger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchor {
    pub finger: FingerName,
    /// Segment id, or `"root"` for the finger root frame.
    pub segment: String,
    /// Offset in the segment frame (m).
    pub offset: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KapandjiTarget {
    pub index: usize,
    #[serde(default)]
    pub label: String,
    pub anchor: Anchor,
    /// Actuated angles of non-thumb joints while this position is tested,
    /// by joint id; unlisted joints sit at zero.
    #[serde(default)]
    pub posture: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KapandjiFile {
    pub format_version: u32,
    pub targets: Vec<KapandjiTarget>,
}

impl KapandjiFile {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: KapandjiFile = serde_json::from_str(text)?;
        if file.format_version != KAPANDJI_FILE_VERSION {
            return Err(Error::validation("format_version", format!("unsupported version {}", file.format_version)));
        }
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_json_str(&text)
    }

    pub fn default_targets() -> Self {
        Self::from_json_str(DEFAULT_KAPANDJI_JSON).expect("shipped Kapandji targets parse")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KapandjiOptions {
    /// Reachability tolerance (m).
    pub tol: f64,
    pub ik: IkOptions,
    /// Thumb IK seeds, each holding the thumb's actuated angles root to tip.
    /// Empty means [`thumb_seed_grid`].
    pub seeds: Vec<Vec<f64>>,
}

impl Default for KapandjiOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOLERANCE, ik: IkOptions::default(), seeds: Vec::new() }
    }
}

/// Deterministic thumb seeds: the rest pose, then a grid over the CMC
/// joints at 20/50/80 % of their ranges crossed with two MCP flexions.
pub fn thumb_seed_grid(model: &HandModel) -> Vec<Vec<f64>> {
    let channels = model.finger_channels(FingerName::Thumb);
    let at = |i: usize, f: f64| {
        let [lo, hi] = model.channel_joint(channels[i]).limits;
        lo + f * (hi - lo)
    };
    let rest: Vec<f64> = channels.iter().map(|&c| model.channel_joint(c).clamp(0.0)).collect();
    let last = channels.len() - 1;
    let mut seeds = vec![rest.clone()];
    for &a in &[0.2, 0.5, 0.8] {
        for &b in &[0.2, 0.5, 0.8] {
            for &m in &[0.2, 0.6] {
                let mut s = rest.clone();
                s[0] = at(0, a);
                s[1] = at(1, b);
                s[last] = at(last, m);
                seeds.push(s);
            }
        }
    }
    seeds
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KapandjiPosition {
    pub index: usize,
    pub label: String,
    pub reachable: bool,
    /// Closest thumb tip to anchor distance found (m).
    pub residual: f64,
    /// Anchor position in the palm frame (m).
    pub anchor: [f64; 3],
    /// Best thumb actuated angles, root to tip (rad).
    pub thumb: Vec<f64>,
    /// Seed index that produced the best solve.
    pub seed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KapandjiReport {
    pub score: usize,
    pub total: usize,
    pub tolerance: f64,
    pub unreachable: Vec<usize>,
    pub positions: Vec<KapandjiPosition>,
}

fn posture_vector(model: &HandModel, target: &KapandjiTarget) -> Result<[f64; ACTUATED_COUNT]> {
    let mut q = model.zero_pose();
    for (id, &v) in &target.posture {
        let field = || format!("targets[{}].posture.{id}", target.index);
        let c = model.channel_of(id).ok_or_else(|| Error::validation(field(), "not an actuated joint"))?;
        if model.channel_ref(c).finger == FingerName::Thumb.index() {
            return Err(Error::validation(field(), "thumb joints are solved, not posed"));
        }
        let j = model.channel_joint(c);
        if !v.is_finite() || v < j.min() || v > j.max() {
            return Err(Error::validation(field(), format!("angle {v} outside limits [{}, {}]", j.min(), j.max())));
        }
        q[c] = v;
    }
    Ok(q)
}

fn check_targets(model: &HandModel, targets: &[KapandjiTarget]) -> Result<()> {
    let mut seen = [false; KAPANDJI_POSITIONS];
    for t in targets {
        if t.index >= KAPANDJI_POSITIONS {
            return Err(Error::validation(format!("targets[{}]", t.index), "index must lie in 0..=10"));
        }
        if std::mem::replace(&mut seen[t.index], true) {
            return Err(Error::validation(format!("targets[{}]", t.index), "duplicate index"));
        }
        let finger = model.finger(t.anchor.finger);
        if t.anchor.segment != crate::model::ROOT_SEGMENT && finger.segment_index(&t.anchor.segment).is_none() {
            return Err(Error::Unknown { kind: "segment", name: format!("{}.{}", t.anchor.finger, t.anchor.segment) });
        }
        if t.anchor.offset.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("anchor offset"));
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::validation("targets", format!("missing position {missing}")));
    }
    Ok(())
}

/// World position of a target's anchor with the hand in its posture.
pub fn anchor_position(model: &HandModel, target: &KapandjiTarget) -> Result<Point3<f64>> {
    let q = posture_vector(model, target)?;
    let state = resolve_full_state(model, &q)?;
    let frames = forward_kinematics(model, &state);
    let frame = frames
        .finger(target.anchor.finger)
        .segment_frame(model, &target.anchor.segment)
        .ok_or_else(|| Error::Unknown { kind: "segment", name: target.anchor.segment.clone() })?;
    Ok(frame * Point3::from(target.anchor.offset))
}

/// Scores thumb opposition: for each of the 11 positions, poses the other
/// fingers, places the anchor and solves thumb IK from every seed. A position
/// counts when the best residual is within `opts.tol`.
pub fn run_kapandji(
    model: &HandModel,
    targets: &[KapandjiTarget],
    opts: &KapandjiOptions,
    exec: Execution,
) -> Result<KapandjiReport> {
    if targets.len() != KAPANDJI_POSITIONS {
        return Err(Error::Mismatch { what: "Kapandji targets", expected: KAPANDJI_POSITIONS, got: targets.len() });
    }
    check_targets(model, targets)?;
    let mut ordered: Vec<&KapandjiTarget> = targets.iter().collect();
    ordered.sort_by_key(|t| t.index);
    let positions = solve_targets(model, &ordered, opts, exec)?;
    let unreachable: Vec<usize> = positions.iter().filter(|p| !p.reachable).map(|p| p.index).collect();
    Ok(KapandjiReport {
        score: positions.len() - unreachable.len(),
        total: positions.len(),
        tolerance: opts.tol,
        unreachable,
        positions,
    })
}

/// Thumb reachability of a single target, outside the 11-position protocol.
pub fn evaluate_target(model: &HandModel, target: &KapandjiTarget, opts: &KapandjiOptions) -> Result<KapandjiPosition> {
    let finger = model.finger(target.anchor.finger);
    if target.anchor.segment != crate::model::ROOT_SEGMENT && finger.segment_index(&target.anchor.segment).is_none() {
        return Err(Error::Unknown { kind: "segment", name: target.anchor.segment.clone() });
    }
    let mut out = solve_targets(model, &[target], opts, Execution::Sequential)?;
    Ok(out.remove(0))
}

fn solve_targets(
    model: &HandModel,
    targets: &[&KapandjiTarget],
    opts: &KapandjiOptions,
    exec: Execution,
) -> Result<Vec<KapandjiPosition>> {
    if !(opts.tol >= 0.0) {
        return Err(Error::validation("tol", "must be non-negative"));
    }
    let thumb_channels = model.finger_channels(FingerName::Thumb);
    let seeds = if opts.seeds.is_empty() { thumb_seed_grid(model) } else { opts.seeds.clone() };
    if let Some(bad) = seeds.iter().find(|s| s.len() != thumb_channels.len()) {
        return Err(Error::Mismatch { what: "thumb seed", expected: thumb_channels.len(), got: bad.len() });
    }

    let prepared = targets
        .iter()
        .map(|t| Ok((posture_vector(model, t)?, anchor_position(model, t)?)))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..prepared.len()).flat_map(|t| (0..seeds.len()).map(move |s| (t, s))).collect();
    let solved = exec.map(&jobs, |&(t, s)| {
        let (mut q, anchor) = prepared[t];
        for (&c, &v) in thumb_channels.iter().zip(&seeds[s]) {
            q[c] = v;
        }
        let seed = resolve_full_state(model, &q)?;
        inverse_kinematics(model, FingerName::Thumb, anchor, &seed, &opts.ik)
    });
    let solved = solved.into_iter().collect::<Result<Vec<_>>>()?;

    let mut positions = Vec::with_capacity(prepared.len());
    for (t, target) in targets.iter().enumerate() {
        let runs = &solved[t * seeds.len()..(t + 1) * seeds.len()];
        // The first seed wins ties, so the choice is deterministic.
        let mut seed = 0;
        for (i, r) in runs.iter().enumerate() {
            if r.residual < runs[seed].residual {
                seed = i;
            }
        }
        let best = &runs[seed];
        positions.push(KapandjiPosition {
            index: target.index,
            label: target.label.clone(),
            reachable: best.residual <= opts.tol,
            residual: best.residual,
            anchor: prepared[t].1.coords.into(),
            thumb: thumb_channels.iter().map(|&c| best.state.actuated()[c]).collect(),
            seed,
        });
    }
    Ok(positions)
}
