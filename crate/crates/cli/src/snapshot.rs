//! Line-delimited JSON snapshot streams, one record per emitted state.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use csf_core::curve::{GraphCurve, ParamCurve};
use csf_core::diagnostics::DiagnosticsRecord;
use csf_core::flow::{Curve, FlowMode, FlowState, StopReason, Trajectory};
use csf_core::sphere::SpherePoint;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub t_start: f64,
    pub t: f64,
    pub mode: FlowMode,
    pub grid_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 3]>>,
    pub diagnostics: DiagnosticsRecord,
    /// Present on the final record of a run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<StopReason>,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

impl Snapshot {
    pub fn from_state(state: &FlowState, t_start: f64, config_hash: &str, seed: u64) -> Self {
        let (f, points) = match &state.curve {
            Curve::Graph(g) => (Some(g.f().to_vec()), None),
            Curve::Param(c) => (None, Some(c.points().iter().map(|p| p.to_array()).collect())),
        };
        Self {
            version: FORMAT_VERSION,
            config_hash: config_hash.to_string(),
            seed,
            t_start,
            t: state.t,
            mode: state.curve.mode(),
            grid_size: state.curve.grid_size(),
            f,
            points,
            diagnostics: state.diagnostics.clone(),
            stop_reason: None,
        }
    }

    pub fn from_trajectory(traj: &Trajectory, config_hash: &str, seed: u64) -> Vec<Self> {
        let mut out: Vec<Self> =
            traj.states.iter().map(|s| Self::from_state(s, traj.t_start, config_hash, seed)).collect();
        if let Some(last) = out.last_mut() {
            last.stop_reason = Some(traj.stop_reason);
        }
        out
    }

    pub fn curve(&self) -> Result<Curve> {
        let malformed = |reason: &str| CliError::Config { path: "snapshot".into(), reason: reason.into() };
        Ok(match (self.mode, &self.f, &self.points) {
            (FlowMode::Graph, Some(f), _) => Curve::Graph(GraphCurve::new(f.clone())?),
            (FlowMode::Parametric, _, Some(points)) => {
                let pts = points.iter().map(|p| SpherePoint::from_unit(*p)).collect::<csf_core::Result<Vec<_>>>()?;
                Curve::Param(ParamCurve::new(pts)?)
            }
            (FlowMode::Graph, None, _) => return Err(malformed("graph record without f")),
            (FlowMode::Parametric, _, None) => return Err(malformed("parametric record without points")),
        })
    }

    pub fn to_state(&self) -> Result<FlowState> {
        Ok(FlowState { t: self.t, curve: self.curve()?, diagnostics: self.diagnostics.clone() })
    }
}

pub fn to_line(snapshot: &Snapshot) -> Result<String> {
    Ok(serde_json::to_string(snapshot)?)
}

pub fn from_line(line: &str) -> std::result::Result<Snapshot, LineError> {
    let probe: VersionProbe = serde_json::from_str(line).map_err(LineError::Json)?;
    if probe.version != FORMAT_VERSION {
        return Err(LineError::Version(probe.version));
    }
    serde_json::from_str(line).map_err(LineError::Json)
}

#[derive(Debug)]
pub enum LineError {
    Json(serde_json::Error),
    Version(u32),
}

pub fn write_stream(path: &Path, snapshots: &[Snapshot]) -> Result<()> {
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut out = BufWriter::new(file);
    for s in snapshots {
        writeln!(out, "{}", to_line(s)?).map_err(CliError::io(path))?;
    }
    out.flush().map_err(CliError::io(path))
}

pub fn read_stream(path: &Path) -> Result<Vec<Snapshot>> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(CliError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(from_line(&line).map_err(|e| match e {
            LineError::Json(source) => CliError::Snapshot { file: path.to_path_buf(), line: i + 1, source },
            LineError::Version(found) => CliError::Version { found, expected: FORMAT_VERSION },
        })?);
    }
    if out.is_empty() {
        return Err(CliError::EmptyTrajectory(path.to_path_buf()));
    }
    Ok(out)
}

/// Rebuilds a trajectory from its snapshot records. Step counts are not stored
/// and come back as zero.
pub fn to_trajectory(snapshots: &[Snapshot]) -> Result<Trajectory> {
    let states = snapshots.iter().map(Snapshot::to_state).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        t_start: snapshots.first().map_or(0.0, |s| s.t_start),
        states,
        stop_reason: snapshots.last().and_then(|s| s.stop_reason).unwrap_or(StopReason::TimeEnd),
        steps: 0,
        substeps: 0,
    })
}
