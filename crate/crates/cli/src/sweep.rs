//! The `sweep` command: a grid of independent runs over grid sizes, time steps
//! and initial families, aggregated into one CSV table with observed orders.

use std::path::{Path, PathBuf};

use csf_core::diagnostics;
use csf_core::flow::{FlowConfig, StopReason};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{circle_start, InitialCurve, OutputConfig, RunConfig, OUTPUT_DIR_ENV};
use crate::error::{CliError, Result};
use crate::simulate::{oracle_deviation, run_config};
use crate::snapshot::FORMAT_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Falls back to `flow.grid_size` when empty.
    #[serde(default)]
    pub grid_sizes: Vec<usize>,
    /// Falls back to `flow.dt` when empty.
    #[serde(default)]
    pub dts: Vec<f64>,
    #[serde(default)]
    pub families: Vec<InitialCurve>,
    #[serde(default = "default_table")]
    pub table: String,
}

fn default_table() -> String {
    "sweep.csv".into()
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        toml::from_str(&text).map_err(|e| CliError::Parse { file: path.to_path_buf(), message: e.to_string() })
    }

    /// One run configuration per cell, families outermost, then grid sizes,
    /// then time steps.
    pub fn cells(&self) -> Result<Vec<RunConfig>> {
        if self.families.is_empty() {
            return Err(CliError::EmptySweep("no initial families listed"));
        }
        let sizes = if self.grid_sizes.is_empty() { vec![self.flow.grid_size] } else { self.grid_sizes.clone() };
        let dts = if self.dts.is_empty() { vec![self.flow.dt] } else { self.dts.clone() };
        let mut out = Vec::with_capacity(self.families.len() * sizes.len() * dts.len());
        for family in &self.families {
            for &n in &sizes {
                for &dt in &dts {
                    out.push(RunConfig {
                        seed: self.seed,
                        flow: FlowConfig { grid_size: n, dt, ..self.flow.clone() },
                        initial: family.clone(),
                        output: self.output.clone(),
                    });
                }
            }
        }
        Ok(out)
    }

    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output.dir.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub family: String,
    pub grid_size: usize,
    pub dt: f64,
    pub status: String,
    pub stop_reason: Option<StopReason>,
    pub final_time: Option<f64>,
    pub area_law_residual: Option<f64>,
    pub gauss_bonnet_residual: Option<f64>,
    pub oracle_deviation: Option<f64>,
    /// Observed order in `dt` against the next larger step of the same family and grid.
    pub area_law_order_dt: Option<f64>,
    pub oracle_order_dt: Option<f64>,
    /// Observed algebraic order in `n` against the next smaller grid.
    pub oracle_order_n: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub failed: usize,
    pub table: PathBuf,
}

fn evaluate_cell(config: &RunConfig) -> SweepRow {
    let mut row = SweepRow {
        version: FORMAT_VERSION,
        config_hash: config.hash(),
        seed: config.seed,
        family: config.initial.label(),
        grid_size: config.flow.grid_size,
        dt: config.flow.dt,
        status: "ok".into(),
        stop_reason: None,
        final_time: None,
        area_law_residual: None,
        gauss_bonnet_residual: None,
        oracle_deviation: None,
        area_law_order_dt: None,
        oracle_order_dt: None,
        oracle_order_n: None,
    };
    let measured = run_config(config).and_then(|traj| {
        let area = diagnostics::area_law_residual(&traj)?;
        let oracle = circle_start(&config.initial).map(|phi0| oracle_deviation(&traj, phi0)).transpose()?;
        Ok((traj, area, oracle))
    });
    match measured {
        Ok((traj, area, oracle)) => {
            row.stop_reason = Some(traj.stop_reason);
            row.final_time = Some(traj.last().t);
            row.area_law_residual = Some(area);
            row.gauss_bonnet_residual = Some(traj.states.iter().map(|s| s.diagnostics.gb_residual).fold(0.0, f64::max));
            row.oracle_deviation = oracle;
        }
        Err(e) => row.status = format!("failed: {e}"),
    }
    row
}

/// `ln(coarse_err / fine_err) / ln(coarse_h / fine_h)`, when both errors are positive.
pub fn observed_order(coarse: (f64, f64), fine: (f64, f64)) -> Option<f64> {
    let ((hc, ec), (hf, ef)) = (coarse, fine);
    (ec > 0.0 && ef > 0.0 && hc != hf).then(|| (ec / ef).ln() / (hc / hf).ln()).filter(|p| p.is_finite())
}

fn fill_orders(rows: &mut [SweepRow]) {
    let snapshot = rows.to_vec();
    for row in rows.iter_mut() {
        let coarser_dt = snapshot
            .iter()
            .filter(|r| r.family == row.family && r.grid_size == row.grid_size && r.dt > row.dt)
            .min_by(|a, b| a.dt.total_cmp(&b.dt));
        if let Some(c) = coarser_dt {
            let pair = |a: Option<f64>, b: Option<f64>| observed_order((c.dt, a?), (row.dt, b?));
            row.area_law_order_dt = pair(c.area_law_residual, row.area_law_residual);
            row.oracle_order_dt = pair(c.oracle_deviation, row.oracle_deviation);
        }
        // A coarser grid is a larger spacing 2 pi / n, so compare 1/n.
        let coarser_n = snapshot
            .iter()
            .filter(|r| r.family == row.family && r.dt == row.dt && r.grid_size < row.grid_size)
            .max_by_key(|r| r.grid_size);
        if let (Some(c), Some(fine)) = (coarser_n, row.oracle_deviation) {
            row.oracle_order_n = c.oracle_deviation.and_then(|coarse| {
                observed_order((1.0 / c.grid_size as f64, coarse), (1.0 / row.grid_size as f64, fine))
            });
        }
    }
}

/// Runs every cell concurrently on the rayon pool and writes the table. Cell
/// failures are recorded in the table and counted, not propagated.
pub fn sweep(spec: &SweepSpec) -> Result<SweepReport> {
    let cells = spec.cells()?;
    let mut rows: Vec<SweepRow> = cells.par_iter().map(evaluate_cell).collect();
    fill_orders(&mut rows);
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    let dir = spec.output_dir();
    std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let table = dir.join(&spec.table);
    let mut w = csv::Writer::from_path(&table)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(CliError::io(&table))?;
    Ok(SweepReport { rows, failed, table })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spec_is_rejected() {
        let spec: SweepSpec = toml::from_str("").unwrap();
        assert!(matches!(spec.cells(), Err(CliError::EmptySweep(_))));
    }

    #[test]
    fn cells_cover_the_product() {
        let spec: SweepSpec = toml::from_str(
            "grid_sizes = [32, 64]\ndts = [0.01, 0.005, 0.0025]\n[[families]]\nfamily = \"equator\"\n[[families]]\nfamily = \"latitude-circle\"\nphi0 = 0.2\n",
        )
        .unwrap();
        let cells = spec.cells().unwrap();
        assert_eq!(cells.len(), 12);
        assert_eq!((cells[4].flow.grid_size, cells[4].flow.dt), (64, 0.005));
    }

    #[test]
    fn orders() {
        let p = observed_order((0.2, 16.0), (0.1, 1.0)).unwrap();
        assert!((p - 4.0).abs() < 1e-12);
        assert_eq!(observed_order((0.2, 0.0), (0.1, 1.0)), None);
    }
}
