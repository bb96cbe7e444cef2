//! Pass/fail monitors evaluated over a stored trajectory.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use csf_core::diagnostics::{self, area_law_prediction, gauss_bonnet_residual, harnack_margin};
use csf_core::flow::Trajectory;
use csf_core::Error as EngineError;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const GAUSS_BONNET_TOLERANCE: f64 = 1e-8;
pub const AREA_LAW_TOLERANCE: f64 = 1e-4 * TAU;
pub const HARNACK_TOLERANCE: f64 = -1e-6;
pub const K_EVOLUTION_TOLERANCE: f64 = 1e-6;
pub const LENGTH_TOLERANCE: f64 = 1e-6;
pub const MODE_DECAY_TOLERANCE: f64 = 0.02;
/// Modes whose initial amplitude is below this are not compared.
pub const MODE_FLOOR: f64 = 1e-6;
const MAX_MODE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    GaussBonnet,
    AreaLaw,
    Harnack,
    KEvolution,
    Length,
    ModeDecay,
}

impl Check {
    pub const ALL: [Check; 6] =
        [Check::GaussBonnet, Check::AreaLaw, Check::Harnack, Check::KEvolution, Check::Length, Check::ModeDecay];

    pub fn name(self) -> &'static str {
        match self {
            Check::GaussBonnet => "gauss-bonnet",
            Check::AreaLaw => "area-law",
            Check::Harnack => "harnack",
            Check::KEvolution => "k-evolution",
            Check::Length => "length",
            Check::ModeDecay => "mode-decay",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Check::GaussBonnet => GAUSS_BONNET_TOLERANCE,
            Check::AreaLaw => AREA_LAW_TOLERANCE,
            Check::Harnack => HARNACK_TOLERANCE,
            Check::KEvolution => K_EVOLUTION_TOLERANCE,
            Check::Length => LENGTH_TOLERANCE,
            Check::ModeDecay => MODE_DECAY_TOLERANCE,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| CliError::UnknownCheck(s.to_string()))
    }
}

/// Parses a check list; `all` selects every check. Duplicates are dropped.
pub fn parse_checks<S: AsRef<str>>(names: &[S]) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for name in names.iter().flat_map(|n| n.as_ref().split(',')).map(str::trim).filter(|n| !n.is_empty()) {
        let picked = if name == "all" { Check::ALL.to_vec() } else { vec![name.parse()?] };
        for c in picked {
            if !out.contains(&c) {
                out.push(c);
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::NoChecks);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: Check,
    pub passed: bool,
    /// Largest residual, or the smallest margin for `harnack`; `None` when
    /// nothing was measurable.
    pub worst: Option<f64>,
    pub tolerance: f64,
    /// Index of the state holding the worst value.
    pub state: Option<usize>,
    pub t: Option<f64>,
    /// States actually evaluated.
    pub evaluated: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Tracks the worst value seen and where.
struct Worst {
    value: Option<(f64, usize)>,
    evaluated: usize,
    lower_is_worse: bool,
}

impl Worst {
    fn largest() -> Self {
        Self { value: None, evaluated: 0, lower_is_worse: false }
    }

    fn smallest() -> Self {
        Self { value: None, evaluated: 0, lower_is_worse: true }
    }

    fn push(&mut self, v: f64, index: usize) {
        self.evaluated += 1;
        let worse = match self.value {
            None => true,
            Some((w, _)) if v.is_nan() => !w.is_nan(),
            Some((w, _)) => {
                if self.lower_is_worse {
                    v < w
                } else {
                    v > w
                }
            }
        };
        if worse {
            self.value = Some((v, index));
        }
    }

    fn finish(self, check: Check, traj: &Trajectory, note: Option<String>) -> CheckOutcome {
        let tol = check.tolerance();
        let passed = match self.value {
            None => true,
            Some((v, _)) if self.lower_is_worse => v >= tol,
            Some((v, _)) => v <= tol,
        };
        CheckOutcome {
            check,
            passed,
            worst: self.value.map(|(v, _)| v),
            tolerance: tol,
            state: self.value.map(|(_, i)| i),
            t: self.value.map(|(_, i)| traj.states[i].t),
            evaluated: self.evaluated,
            note,
        }
    }
}

pub fn evaluate(traj: &Trajectory, check: Check) -> Result<CheckOutcome> {
    match check {
        Check::GaussBonnet => {
            let mut w = Worst::largest();
            for (i, s) in traj.states.iter().enumerate() {
                w.push(gauss_bonnet_residual(&s.curve.profile(), s.curve.area()?), i);
            }
            Ok(w.finish(check, traj, None))
        }
        Check::AreaLaw => {
            let a0 = traj.states[0].curve.area()?;
            let t0 = traj.states[0].t;
            let mut w = Worst::largest();
            for (i, s) in traj.states.iter().enumerate() {
                w.push((s.curve.area()? - area_law_prediction(a0, s.t - t0)?).abs(), i);
            }
            Ok(w.finish(check, traj, None))
        }
        Check::Harnack => {
            let mut w = Worst::smallest();
            let mut skipped = 0;
            for (i, s) in traj.states.iter().enumerate().filter(|(_, s)| s.t > traj.t_start) {
                match harnack_margin(&s.curve.profile(), s.t, traj.t_start) {
                    Ok(m) => w.push(m, i),
                    Err(EngineError::NonConvexState { .. }) => skipped += 1,
                    Err(e) => return Err(e.into()),
                }
            }
            let note = (skipped > 0).then(|| format!("{skipped} states without positive curvature skipped"));
            Ok(w.finish(check, traj, note))
        }
        Check::KEvolution | Check::Length => {
            let mut w = Worst::largest();
            let mut skipped = 0;
            for i in 1..traj.states.len().saturating_sub(1) {
                let r = if check == Check::Length {
                    diagnostics::length_dissipation_residual(traj, i)
                } else {
                    diagnostics::curvature_evolution_residual(traj, i)
                };
                match r {
                    Ok(r) => w.push(r, i),
                    Err(EngineError::CadenceMismatch { .. }) => skipped += 1,
                    Err(e) => return Err(e.into()),
                }
            }
            let note = (skipped > 0).then(|| format!("{skipped} states with uneven spacing skipped"));
            Ok(w.finish(check, traj, note))
        }
        Check::ModeDecay => mode_decay(traj),
    }
}

/// Relative error of each mode's amplitude ratio against `exp((1 - m^2) T)`,
/// plus the ratio of `1 - A / 2 pi` against `exp(T)`.
fn mode_decay(traj: &Trajectory) -> Result<CheckOutcome> {
    let first = &traj.states[0];
    let last_index = traj.states.len() - 1;
    let last = &traj.states[last_index];
    let elapsed = last.t - first.t;
    let mut w = Worst::largest();
    let mut compared = Vec::new();
    for m in 1..=MAX_MODE {
        let a0 = diagnostics::mode_amplitude(&first.curve, m)?;
        if a0 > MODE_FLOOR {
            let a1 = diagnostics::mode_amplitude(&last.curve, m)?;
            let expected = (diagnostics::linearized_mode_rate(m as u32) * elapsed).exp();
            w.push((a1 / a0 / expected - 1.0).abs(), last_index);
            compared.push(m.to_string());
        }
    }
    let excess0 = 1.0 - first.curve.area()? / TAU;
    if excess0.abs() > MODE_FLOOR {
        let excess1 = 1.0 - last.curve.area()? / TAU;
        w.push((excess1 / excess0 / elapsed.exp() - 1.0).abs(), last_index);
        compared.push("area".into());
    }
    let note = Some(if compared.is_empty() {
        "no mode above the amplitude floor".to_string()
    } else {
        format!("compared: {}", compared.join(", "))
    });
    Ok(w.finish(Check::ModeDecay, traj, note))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<13} {:<6} {:>14} {:>12} {:>7} {:>12}  {}\n",
            "check", "result", "worst", "tolerance", "state", "t", "note"
        );
        for o in &self.outcomes {
            let fmt_opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6e}"));
            out.push_str(&format!(
                "{:<13} {:<6} {:>14} {:>12.3e} {:>7} {:>12}  {}\n",
                o.check.name(),
                if o.passed { "PASS" } else { "FAIL" },
                fmt_opt(o.worst),
                o.tolerance,
                o.state.map_or("-".to_string(), |i| i.to_string()),
                o.t.map_or("-".to_string(), |t| format!("{t:.6}")),
                o.note.as_deref().unwrap_or(""),
            ));
        }
        out
    }
}

pub fn verify_trajectory(traj: &Trajectory, checks: &[Check]) -> Result<VerifyReport> {
    if checks.is_empty() {
        return Err(CliError::NoChecks);
    }
    Ok(VerifyReport { outcomes: checks.iter().map(|&c| evaluate(traj, c)).collect::<Result<_>>()? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_lists() {
        assert!(matches!(parse_checks::<&str>(&[]), Err(CliError::NoChecks)));
        assert!(matches!(parse_checks(&[" , "]), Err(CliError::NoChecks)));
        assert!(matches!(parse_checks(&["gauss-bonnet", "curl"]), Err(CliError::UnknownCheck(n)) if n == "curl"));
        assert_eq!(parse_checks(&["length,harnack", "length"]).unwrap(), vec![Check::Length, Check::Harnack]);
        assert_eq!(parse_checks(&["all"]).unwrap(), Check::ALL.to_vec());
        assert_eq!(CliError::NoChecks.to_string(), "no checks selected");
    }
}
