//! The `reflect` command: tilted reflection comparisons over every stored
//! state, and the rotational symmetry test on the final one.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use csf_core::flow::Trajectory;
use csf_core::reflection::{
    exact_symmetry_test, reflection_ordering, sampled_directions, tilted_reflection_predicate, FiberVerdict,
    SymmetryVerdict, DEFAULT_FIBER_GRID,
};
use csf_core::Error as EngineError;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectOptions {
    pub deltas: Vec<f64>,
    pub directions: usize,
    pub fiber_grid: usize,
    /// Number of mirror planes tried by the symmetry test.
    pub symmetry_grid: usize,
    /// Allows tilts up to `pi/2` instead of `pi/4`.
    pub exploratory: bool,
}

impl Default for ReflectOptions {
    fn default() -> Self {
        Self {
            deltas: vec![0.1, 0.3, 0.6],
            directions: 32,
            fiber_grid: DEFAULT_FIBER_GRID,
            symmetry_grid: 64,
            exploratory: false,
        }
    }
}

impl ReflectOptions {
    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(CliError::Config { path: "delta".into(), reason: "at least one tilt is required".into() });
        }
        let hi = if self.exploratory { FRAC_PI_2 } else { FRAC_PI_4 };
        for &delta in &self.deltas {
            if !(delta > 0.0 && delta < hi) {
                return Err(EngineError::InvalidDelta { delta, lo: 0.0, hi }.into());
            }
        }
        for (name, v) in
            [("directions", self.directions), ("fiber_grid", self.fiber_grid), ("symmetry_grid", self.symmetry_grid)]
        {
            if v == 0 {
                return Err(CliError::Config { path: name.into(), reason: "must be positive".into() });
            }
        }
        Ok(())
    }
}

/// Worst outcome over all sampled directions for one tilt and one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectCell {
    pub delta: f64,
    pub state: usize,
    pub t: f64,
    pub verdict: FiberVerdict,
    pub worst_margin: Option<f64>,
    /// Horizontal angle of the direction holding the worst margin.
    pub worst_psi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectReport {
    pub cells: Vec<ReflectCell>,
    pub below: usize,
    pub final_symmetry: SymmetryVerdict,
}

fn rank(v: FiberVerdict) -> u8 {
    match v {
        FiberVerdict::EmptyFiber => 0,
        FiberVerdict::AboveStrict => 1,
        FiberVerdict::AboveWeak => 2,
        FiberVerdict::Below => 3,
    }
}

pub fn reflect_trajectory(traj: &Trajectory, options: &ReflectOptions) -> Result<ReflectReport> {
    options.validate()?;
    let params = traj.states.iter().map(|s| s.curve.to_param()).collect::<csf_core::Result<Vec<_>>>()?;
    let mut cells = Vec::with_capacity(options.deltas.len() * params.len());
    for &delta in &options.deltas {
        let specs = sampled_directions(delta, options.directions)?;
        for (i, c) in params.iter().enumerate() {
            let mut cell = ReflectCell {
                delta,
                state: i,
                t: traj.states[i].t,
                verdict: FiberVerdict::EmptyFiber,
                worst_margin: None,
                worst_psi: None,
            };
            for (j, spec) in specs.iter().enumerate() {
                let r = if options.exploratory {
                    reflection_ordering(c, spec, options.fiber_grid)?
                } else {
                    tilted_reflection_predicate(c, spec, options.fiber_grid)?
                };
                if rank(r.verdict) > rank(cell.verdict) {
                    cell.verdict = r.verdict;
                }
                if let Some(m) = r.worst_margin {
                    if cell.worst_margin.is_none_or(|w| m < w) {
                        cell.worst_margin = Some(m);
                        cell.worst_psi = Some(TAU * j as f64 / options.directions as f64);
                    }
                }
            }
            if cell.verdict == FiberVerdict::EmptyFiber {
                cell.verdict = FiberVerdict::AboveStrict;
            }
            cells.push(cell);
        }
    }
    let below = cells.iter().filter(|c| c.verdict == FiberVerdict::Below).count();
    let final_symmetry = exact_symmetry_test(params.last().expect("non-empty trajectory"), options.symmetry_grid);
    Ok(ReflectReport { cells, below, final_symmetry })
}

impl ReflectReport {
    pub fn table(&self) -> String {
        let mut out =
            format!("{:>8} {:>6} {:>12} {:<12} {:>14} {:>10}\n", "delta", "state", "t", "verdict", "margin", "psi");
        for c in &self.cells {
            out.push_str(&format!(
                "{:>8.4} {:>6} {:>12.6} {:<12} {:>14} {:>10}\n",
                c.delta,
                c.state,
                c.t,
                format!("{:?}", c.verdict),
                c.worst_margin.map_or("-".into(), |m| format!("{m:.6e}")),
                c.worst_psi.map_or("-".into(), |p| format!("{p:.4}")),
            ));
        }
        out.push_str(&format!("below: {}\nfinal state: {:?}\n", self.below, self.final_symmetry));
        out
    }
}
