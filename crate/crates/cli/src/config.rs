//! Run configuration: flow parameters, the initial-curve family and output
//! locations, read from TOML.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use csf_core::curve::{self, GraphCurve, ParamCurve};
use csf_core::flow::{Curve, FlowConfig};
use csf_core::sphere::SpherePoint;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Environment variable that replaces `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "CSF_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCurve {
    Equator,
    LatitudeCircle {
        phi0: f64,
    },
    /// `f = cos[0] + sum_k cos[k] cos(k theta) + sin[k-1] sin(k theta)`.
    Fourier {
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// Band-limited convex graph drawn from the run seed.
    RandomConvex {
        #[serde(default = "default_mean_min")]
        mean_min: f64,
        #[serde(default = "default_mean_max")]
        mean_max: f64,
        #[serde(default = "default_modes")]
        modes: usize,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// Geodesic circle whose centre is tilted `tilt` from the north pole towards +x.
    OffCenterCircle {
        tilt: f64,
        radius: f64,
    },
}

fn default_mean_min() -> f64 {
    0.1
}
fn default_mean_max() -> f64 {
    0.5
}
fn default_modes() -> usize {
    6
}
fn default_amplitude() -> f64 {
    0.15
}

impl InitialCurve {
    pub fn label(&self) -> String {
        match self {
            InitialCurve::Equator => "equator".into(),
            InitialCurve::LatitudeCircle { phi0 } => format!("latitude-circle({phi0})"),
            InitialCurve::Fourier { cos, sin } => format!("fourier(cos={cos:?},sin={sin:?})"),
            InitialCurve::RandomConvex { .. } => "random-convex".into(),
            InitialCurve::OffCenterCircle { tilt, radius } => format!("off-center-circle({tilt},{radius})"),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |path: &str, reason: &str| Err(CliError::Config { path: path.into(), reason: reason.into() });
        match self {
            InitialCurve::LatitudeCircle { phi0 } if !(phi0.abs() < curve::POLE_CUTOFF) => {
                bad("initial.phi0", "must satisfy |phi0| < pi/2 - 1e-6")
            }
            InitialCurve::Fourier { cos, .. } if cos.is_empty() => {
                bad("initial.cos", "needs at least the mean coefficient")
            }
            InitialCurve::Fourier { cos, sin } if cos.iter().chain(sin).any(|c| !c.is_finite()) => {
                bad("initial.cos", "coefficients must be finite")
            }
            InitialCurve::RandomConvex { mean_min, mean_max, .. } if !(mean_min <= mean_max) => {
                bad("initial.mean_max", "must be at least mean_min")
            }
            InitialCurve::RandomConvex { modes, .. } if *modes < 2 => bad("initial.modes", "must be at least 2"),
            InitialCurve::OffCenterCircle { radius, .. } if !(*radius > 0.0 && *radius < FRAC_PI_2) => {
                bad("initial.radius", "must lie in (0, pi/2)")
            }
            _ => Ok(()),
        }
    }

    /// Builds the initial curve on `grid_size` nodes.
    pub fn resolve(&self, grid_size: usize, seed: u64) -> Result<Curve> {
        self.validate()?;
        let at = |e: csf_core::Error| CliError::Config { path: "initial".into(), reason: e.to_string() };
        Ok(match self {
            InitialCurve::Equator => GraphCurve::constant(grid_size, 0.0).map_err(at)?.into(),
            InitialCurve::LatitudeCircle { phi0 } => GraphCurve::constant(grid_size, *phi0).map_err(at)?.into(),
            InitialCurve::Fourier { cos, sin } => GraphCurve::from_fn(grid_size, |t| {
                let c: f64 = cos.iter().enumerate().map(|(k, a)| a * (k as f64 * t).cos()).sum();
                let s: f64 = sin.iter().enumerate().map(|(k, b)| b * ((k + 1) as f64 * t).sin()).sum();
                c + s
            })
            .map_err(at)?
            .into(),
            InitialCurve::RandomConvex { mean_min, mean_max, modes, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                curve::random_convex_graph(&mut rng, grid_size, (*mean_min, *mean_max), *modes, *amplitude)
                    .map_err(at)?
                    .into()
            }
            InitialCurve::OffCenterCircle { tilt, radius } => {
                let centre = SpherePoint::new(tilt.sin(), 0.0, tilt.cos()).expect("unit centre");
                ParamCurve::geodesic_circle(centre, *radius, grid_size).map_err(at)?.into()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub snapshots: String,
    pub summary: String,
    pub csv: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("csf-output"),
            snapshots: "trajectory.jsonl".into(),
            summary: "summary.json".into(),
            csv: "diagnostics.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub flow: FlowConfig,
    pub initial: InitialCurve,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let config = Self::parse(&text).map_err(|e| match e {
            CliError::Parse { message, .. } => CliError::Parse { file: path.to_path_buf(), message },
            other => other,
        })?;
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)
            .map_err(|e| CliError::Parse { file: PathBuf::from("<config>"), message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.flow.validate().map_err(|e| match e {
            csf_core::Error::InvalidConfig { field, reason } => {
                CliError::Config { path: format!("flow.{field}"), reason }
            }
            other => CliError::Config { path: "flow".into(), reason: other.to_string() },
        })?;
        self.initial.validate()?;
        for (name, value) in [
            ("output.snapshots", &self.output.snapshots),
            ("output.summary", &self.output.summary),
            ("output.csv", &self.output.csv),
        ] {
            if value.is_empty() {
                return Err(CliError::Config { path: name.into(), reason: "file name must not be empty".into() });
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configuration serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Output directory, honouring [`OUTPUT_DIR_ENV`].
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output.dir.clone(),
        }
    }

    pub fn initial_curve(&self) -> Result<Curve> {
        self.initial.resolve(self.flow.grid_size, self.seed)
    }
}

/// Latitude of the shrinking circle through `phi0` at `t0`, if the initial
/// curve belongs to that family.
pub(crate) fn circle_start(initial: &InitialCurve) -> Option<f64> {
    match initial {
        InitialCurve::LatitudeCircle { phi0 } if *phi0 > 0.0 => Some(*phi0),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 11

[flow]
grid_size = 64
dt = 0.001
t_end = 0.1

[initial]
family = "fourier"
cos = [0.3, 0.0, 0.05]
"#;

    #[test]
    fn parses_partial_config() {
        let c = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.seed, 11);
        assert_eq!(c.flow.grid_size, 64);
        assert_eq!(c.flow.cfl, 1.0);
        assert_eq!(c.output, OutputConfig::default());
        let Curve::Graph(g) = c.initial_curve().unwrap() else { panic!() };
        assert!((g.f()[0] - 0.35).abs() < 1e-15);
    }

    #[test]
    fn validation_names_the_field() {
        let text = SAMPLE.replace("t_end = 0.1", "t_end = 0.1\ncfl = 0.0");
        match RunConfig::parse(&text) {
            Err(CliError::Config { path, .. }) => assert_eq!(path, "flow.cfl"),
            other => panic!("{other:?}"),
        }
        let text = "[initial]\nfamily = \"latitude-circle\"\nphi0 = 1.6\n";
        match RunConfig::parse(text) {
            Err(CliError::Config { path, .. }) => assert_eq!(path, "initial.phi0"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(RunConfig::parse("[initial]\nfamily = \"spiral\"\n"), Err(CliError::Parse { .. })));
        assert!(matches!(RunConfig::parse(&SAMPLE.replace("dt = 0.001", "dtt = 0.001")), Err(CliError::Parse { .. })));
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::parse(SAMPLE).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        b.seed = 12;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn random_family_is_seeded() {
        let family = InitialCurve::RandomConvex { mean_min: 0.1, mean_max: 0.5, modes: 6, amplitude: 0.15 };
        assert_eq!(family.resolve(64, 5).unwrap(), family.resolve(64, 5).unwrap());
        assert_ne!(family.resolve(64, 5).unwrap(), family.resolve(64, 6).unwrap());
    }
}
