use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector is not unit length (norm {norm})")]
    NonUnitVector { norm: f64 },

    #[error("reflection vector has <v, e_z> = {dot}; a tilted spec needs <v, e_z> < 0")]
    WrongHemisphere { dot: f64 },

    #[error("point is within tolerance of a pole; its equator projection is the whole equator")]
    PoleProjection,

    #[error("node {index} has latitude {latitude}, too close to a pole for the graph representation")]
    PoleProximity { index: usize, latitude: f64 },

    #[error("grid size {n} is invalid: {reason}")]
    InvalidGrid { n: usize, reason: &'static str },

    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("gap {gap} between nodes {index} and its successor is outside [1e-8, 0.5]")]
    DegenerateSpacing { index: usize, gap: f64 },

    #[error("curve is not a graph over the equator (azimuth sweep fails at node {index})")]
    NotAGraph { index: usize },

    #[error("step rejected at t = {t}: {reason}")]
    StepRejected { t: f64, reason: String },

    #[error("invalid flow configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("initial curve is not convex (node {index})")]
    NonConvexInitial { index: usize },

    #[error("state is not convex: curvature {k} at node {index}")]
    NonConvexState { index: usize, k: f64 },

    #[error("time {t} must be strictly after the start time {t_start}")]
    InvalidTime { t: f64, t_start: f64 },

    #[error("time {t} is not before the collapse time {t_collapse}")]
    AfterCollapse { t: f64, t_collapse: f64 },

    #[error("initial area {area} is outside (0, 2pi]")]
    InvalidArea { area: f64 },

    #[error("state {index} does not have uniformly spaced neighbours")]
    CadenceMismatch { index: usize },

    #[error("exponential fit is degenerate: {reason}")]
    DegenerateFit { reason: &'static str },

    #[error("tilt angle {delta} is outside the operating range ({lo}, {hi})")]
    InvalidDelta { delta: f64, lo: f64, hi: f64 },

    #[error("point with z = {z} lies in the open lower hemisphere")]
    LowerHemisphere { z: f64 },
}
