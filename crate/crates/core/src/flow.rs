//! Explicit time integration of the flow `X_t = k N` in graph and parametric
//! form, and the shrinking-circle solution.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::curve::{
    self, check_latitudes, graph_curvature, param_curvature, Convexity, CurvatureProfile, GraphCurve, GraphGeometry,
    ParamCurve, ParamGeometry, POLE_CUTOFF,
};
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::sphere::SpherePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowMode {
    Graph,
    Parametric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub mode: FlowMode,
    /// `n` in graph mode, `m` in parametric mode.
    pub grid_size: usize,
    /// Macro step; each is split into equal substeps below the stability bound.
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub stop_max_latitude: f64,
    pub stop_max_curvature: f64,
    /// Arclength redistribution period in macro steps (parametric mode); 0 disables it.
    pub resample_every: usize,
    /// Emission cadence in macro steps.
    pub emit_every: usize,
    /// Reject initial data that fails the convexity test.
    pub require_convex: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            mode: FlowMode::Graph,
            grid_size: 256,
            dt: 1e-3,
            t_start: 0.0,
            t_end: 1.0,
            cfl: 1.0,
            stop_max_latitude: 1.45,
            stop_max_curvature: 50.0,
            resample_every: 10,
            emit_every: 10,
            require_convex: true,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| Err(Error::InvalidConfig { field, reason: reason.to_string() });
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt", "must be positive");
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite()) {
            return bad("t_end", "times must be finite");
        }
        if self.t_end <= self.t_start {
            return bad("t_end", "must be greater than t_start");
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad("cfl", "must lie in (0, 1]");
        }
        if !(self.stop_max_latitude < POLE_CUTOFF) {
            return bad("stop_max_latitude", "must be below pi/2 - 1e-6");
        }
        if !(self.stop_max_curvature > 0.0) {
            return bad("stop_max_curvature", "must be positive");
        }
        if self.grid_size < curve::MIN_GRID || !self.grid_size.is_multiple_of(2) {
            return bad("grid_size", "must be even and at least 16");
        }
        if self.emit_every == 0 {
            return bad("emit_every", "must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    Graph(GraphCurve),
    Param(ParamCurve),
}

impl Curve {
    pub fn mode(&self) -> FlowMode {
        match self {
            Curve::Graph(_) => FlowMode::Graph,
            Curve::Param(_) => FlowMode::Parametric,
        }
    }

    pub fn grid_size(&self) -> usize {
        match self {
            Curve::Graph(g) => g.n(),
            Curve::Param(c) => c.len(),
        }
    }

    pub fn profile(&self) -> CurvatureProfile {
        match self {
            Curve::Graph(g) => graph_curvature(g),
            Curve::Param(c) => param_curvature(c),
        }
    }

    pub fn area(&self) -> Result<f64> {
        match self {
            Curve::Graph(g) => Ok(curve::enclosed_area(g)),
            Curve::Param(c) => curve::param_enclosed_area(c),
        }
    }

    pub fn max_latitude(&self) -> f64 {
        match self {
            Curve::Graph(g) => g.max_latitude(),
            Curve::Param(c) => c.max_latitude(),
        }
    }

    pub fn points(&self) -> Vec<SpherePoint> {
        match self {
            Curve::Graph(g) => g.points(),
            Curve::Param(c) => c.points().to_vec(),
        }
    }

    /// Parametric view; graphs use their azimuth grid nodes.
    pub fn to_param(&self) -> Result<ParamCurve> {
        match self {
            Curve::Graph(g) => g.node_curve(),
            Curve::Param(c) => Ok(c.clone()),
        }
    }

    /// Graph view on `n` azimuths.
    pub fn to_graph(&self, n: usize) -> Result<GraphCurve> {
        match self {
            Curve::Graph(g) if g.n() == n => Ok(g.clone()),
            Curve::Graph(g) => g.node_curve()?.to_graph(n),
            Curve::Param(c) => c.to_graph(n),
        }
    }

    pub fn convexity(&self) -> Convexity {
        match self {
            Curve::Graph(g) => curve::convexity_check(g),
            Curve::Param(c) => {
                let p = param_curvature(c);
                match p.k.iter().position(|&k| k < curve::CONVEXITY_TOLERANCE) {
                    Some(index) => Convexity::NonConvex { index },
                    None => Convexity::Convex { min_k: p.k_min() },
                }
            }
        }
    }
}

impl From<GraphCurve> for Curve {
    fn from(g: GraphCurve) -> Self {
        Curve::Graph(g)
    }
}

impl From<ParamCurve> for Curve {
    fn from(c: ParamCurve) -> Self {
        Curve::Param(c)
    }
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub curve: Curve,
    pub diagnostics: DiagnosticsRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    TimeEnd,
    MaxLatitude,
    MaxCurvature,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t_start: f64,
    pub states: Vec<FlowState>,
    pub stop_reason: StopReason,
    /// Macro steps taken.
    pub steps: usize,
    /// Total stepper calls including substeps.
    pub substeps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &FlowState {
        self.states.last().expect("trajectories hold at least the initial state")
    }
}

fn rhs_raw(f: &[f64]) -> Result<Vec<f64>> {
    check_latitudes(f)?;
    let geo = GraphGeometry::of(f);
    Ok(geo.expr.iter().zip(&geo.speed).map(|(e, w)| e / (w * w)).collect())
}

/// `f_t = (f'' + 2 f'^2 tan f + sin f cos f) / (f'^2 + cos^2 f)` at every node.
pub fn graph_rhs(g: &GraphCurve) -> Vec<f64> {
    rhs_raw(g.f()).expect("validated graph curves stay away from the poles")
}

fn rejected(reason: impl Into<String>) -> Error {
    Error::StepRejected { t: 0.0, reason: reason.into() }
}

fn stage_error(e: Error) -> Error {
    match e {
        Error::PoleProximity { index, latitude } => rejected(format!("node {index} reached latitude {latitude}")),
        Error::NonFinite { index } => rejected(format!("non-finite value at node {index}")),
        other => other,
    }
}

/// One classical RK4 step of the graph equation. Stability requires
/// `dt <= graph_stable_dt`; the caller is responsible for that bound.
/// Errors report `t = 0` (the start of the step); [`run`] rewrites it.
pub fn step_graph(g: &GraphCurve, dt: f64) -> Result<GraphCurve> {
    let f0 = g.f();
    let axpy = |a: f64, k: &[f64]| -> Vec<f64> { f0.iter().zip(k).map(|(f, k)| f + a * k).collect() };
    let k1 = rhs_raw(f0).map_err(stage_error)?;
    let k2 = rhs_raw(&axpy(0.5 * dt, &k1)).map_err(stage_error)?;
    let k3 = rhs_raw(&axpy(0.5 * dt, &k2)).map_err(stage_error)?;
    let k4 = rhs_raw(&axpy(dt, &k3)).map_err(stage_error)?;
    let f: Vec<f64> = (0..f0.len()).map(|i| f0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    GraphCurve::new(f).map_err(stage_error)
}

/// Largest stable RK4 step for the graph equation at the current state.
pub fn graph_stable_dt(g: &GraphCurve, cfl: f64) -> f64 {
    let geo = GraphGeometry::of(g.f());
    let w_min = geo.speed.iter().cloned().fold(f64::INFINITY, f64::min);
    cfl * g.dtheta().powi(2) / 4.0 * w_min * w_min
}

fn velocity(points: &[SpherePoint]) -> Result<Vec<[f64; 3]>> {
    let geo = ParamGeometry::of(points);
    geo.k
        .iter()
        .zip(&geo.normal)
        .enumerate()
        .map(|(i, (k, n))| {
            let v = [k * n[0], k * n[1], k * n[2]];
            if v.iter().all(|c| c.is_finite()) {
                Ok(v)
            } else {
                Err(rejected(format!("non-finite velocity at node {i}")))
            }
        })
        .collect()
}

fn advance(points: &[SpherePoint], a: f64, v: &[[f64; 3]]) -> Result<Vec<SpherePoint>> {
    points
        .iter()
        .zip(v)
        .enumerate()
        .map(|(i, (p, v))| {
            let x = p.to_array();
            SpherePoint::from_vec(std::array::from_fn(|j| x[j] + a * v[j]))
                .ok_or_else(|| rejected(format!("node {i} left the sphere")))
        })
        .collect()
}

/// One RK4 step of `X_t = k N` for a node list; stage and final positions are
/// projected back to the sphere. No redistribution is applied here.
pub fn step_parametric(c: &ParamCurve, dt: f64) -> Result<ParamCurve> {
    let x0 = c.points();
    let v1 = velocity(x0)?;
    let v2 = velocity(&advance(x0, 0.5 * dt, &v1)?)?;
    let v3 = velocity(&advance(x0, 0.5 * dt, &v2)?)?;
    let v4 = velocity(&advance(x0, dt, &v3)?)?;
    let v: Vec<[f64; 3]> = (0..x0.len())
        .map(|i| std::array::from_fn(|j| (v1[i][j] + 2.0 * v2[i][j] + 2.0 * v3[i][j] + v4[i][j]) / 6.0))
        .collect();
    ParamCurve::new(advance(x0, dt, &v)?).map_err(|e| rejected(e.to_string()))
}

/// Largest stable RK4 step for the parametric equation at the current state.
pub fn param_stable_dt(c: &ParamCurve, cfl: f64) -> f64 {
    let p = param_curvature(c);
    let ds_min = p.ds.iter().cloned().fold(f64::INFINITY, f64::min);
    cfl * ds_min * ds_min / 4.0
}

fn prepare(config: &FlowConfig, initial: Curve) -> Result<Curve> {
    let n = config.grid_size;
    Ok(match (config.mode, initial) {
        (FlowMode::Graph, c) => Curve::Graph(c.to_graph(n)?),
        (FlowMode::Parametric, Curve::Graph(g)) => Curve::Param(g.to_param(n)?),
        (FlowMode::Parametric, Curve::Param(c)) if c.len() == n => Curve::Param(c),
        (FlowMode::Parametric, Curve::Param(c)) => Curve::Param(curve::redistribute_to(&c, n)?),
    })
}

fn macro_step(config: &FlowConfig, curve: &Curve, dt: f64) -> Result<(Curve, usize)> {
    match curve {
        Curve::Graph(g) => {
            let count = (dt / graph_stable_dt(g, config.cfl)).ceil().max(1.0) as usize;
            let h = dt / count as f64;
            let mut g = g.clone();
            for _ in 0..count {
                g = step_graph(&g, h)?;
            }
            Ok((Curve::Graph(g), count))
        }
        Curve::Param(c) => {
            let count = (dt / param_stable_dt(c, config.cfl)).ceil().max(1.0) as usize;
            let h = dt / count as f64;
            let mut c = c.clone();
            for _ in 0..count {
                c = step_parametric(&c, h)?;
            }
            Ok((Curve::Param(c), count))
        }
    }
}

fn emit(curve: &Curve, t: f64, t_start: f64) -> Result<FlowState> {
    Ok(FlowState { t, curve: curve.clone(), diagnostics: diagnostics::record(curve, t, t_start)? })
}

/// Integrates from `t_start` to `t_end` or until a stop criterion fires.
///
/// States are emitted at `t_start`, every `emit_every` macro steps, and at the
/// final time. Step failures are returned as `StepRejected` carrying the time
/// at the start of the failing macro step.
pub fn run(config: &FlowConfig, initial: Curve) -> Result<Trajectory> {
    config.validate()?;
    let mut curve = prepare(config, initial)?;
    if config.require_convex {
        if let Convexity::NonConvex { index } = curve.convexity() {
            return Err(Error::NonConvexInitial { index });
        }
    }
    let span = config.t_end - config.t_start;
    let total = ((span / config.dt) - 1e-9).ceil().max(1.0) as usize;
    let time = |i: usize| {
        if i >= total {
            config.t_end
        } else {
            config.t_start + i as f64 * config.dt
        }
    };

    let mut states = vec![emit(&curve, config.t_start, config.t_start)?];
    let mut substeps = 0;
    let mut stop_reason = StopReason::TimeEnd;
    let mut steps = 0;
    for i in 0..total {
        let (t0, t1) = (time(i), time(i + 1));
        let (next, count) = macro_step(config, &curve, t1 - t0).map_err(|e| match e {
            Error::StepRejected { reason, .. } => Error::StepRejected { t: t0, reason },
            other => other,
        })?;
        curve = next;
        substeps += count;
        steps = i + 1;
        if let (Curve::Param(c), r) = (&curve, config.resample_every) {
            if r > 0 && steps % r == 0 {
                curve = Curve::Param(
                    curve::redistribute(c)
                        .map_err(|e| Error::StepRejected { t: t1, reason: format!("redistribution failed: {e}") })?,
                );
            }
        }
        let stop = if curve.max_latitude() > config.stop_max_latitude {
            Some(StopReason::MaxLatitude)
        } else if curve.profile().k_max() > config.stop_max_curvature {
            Some(StopReason::MaxCurvature)
        } else {
            None
        };
        if stop.is_some() || steps % config.emit_every == 0 || steps == total {
            states.push(emit(&curve, t1, config.t_start)?);
        }
        if let Some(reason) = stop {
            stop_reason = reason;
            break;
        }
    }
    Ok(Trajectory { t_start: config.t_start, states, stop_reason, steps, substeps })
}

/// Closed-form shrinking circle that collapses onto the north pole at `t_collapse`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleOracle {
    pub t_collapse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleValues {
    /// Geodesic radius about the north pole.
    pub r: f64,
    /// Latitude.
    pub f: f64,
    pub k: f64,
    pub length: f64,
    pub area: f64,
}

impl Default for CircleOracle {
    fn default() -> Self {
        Self { t_collapse: 0.0 }
    }
}

impl CircleOracle {
    pub fn new(t_collapse: f64) -> Self {
        Self { t_collapse }
    }

    /// The member of the family that sits at latitude `phi0` at time `t0`.
    pub fn through_latitude(phi0: f64, t0: f64) -> Result<Self> {
        if !(phi0 > 0.0 && phi0 < FRAC_PI_2) {
            return Err(Error::InvalidArea { area: TAU * (1.0 - phi0.sin()) });
        }
        Ok(Self { t_collapse: t0 - phi0.sin().ln() })
    }

    pub fn eval(&self, t: f64) -> Result<CircleValues> {
        circle_oracle(t, self.t_collapse)
    }
}

pub fn circle_oracle(t: f64, t_collapse: f64) -> Result<CircleValues> {
    if !(t < t_collapse) {
        return Err(Error::AfterCollapse { t, t_collapse });
    }
    let u = (t - t_collapse).exp();
    let c = (1.0 - u * u).sqrt();
    let r = u.acos();
    Ok(CircleValues { r, f: FRAC_PI_2 - r, k: u / c, length: TAU * c, area: TAU * (1.0 - u) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn perturbed(n: usize) -> GraphCurve {
        GraphCurve::from_fn(n, |t| 0.3 + 0.05 * (2.0 * t).cos()).unwrap()
    }

    #[test]
    fn rhs_examples() {
        assert!(graph_rhs(&GraphCurve::constant(32, 0.0).unwrap()).iter().all(|v| *v == 0.0));
        let r = graph_rhs(&GraphCurve::constant(32, 0.5).unwrap());
        assert!(r.iter().all(|v| (v - 0.5f64.tan()).abs() < 1e-14));
    }

    #[test]
    fn rhs_matches_curvature_route() {
        let g = perturbed(256);
        let p = graph_curvature(&g);
        let (f1, _) = g.derivatives();
        let rhs = graph_rhs(&g);
        for i in 0..256 {
            let f = g.f()[i];
            let w = (f1[i] * f1[i] + f.cos().powi(2)).sqrt();
            assert!((rhs[i] - p.k[i] * w / f.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn equator_is_fixed() {
        let g = GraphCurve::constant(64, 0.0).unwrap();
        assert_eq!(step_graph(&g, 0.1).unwrap(), g);
        let c = ParamCurve::latitude_circle(0.0, 64).unwrap();
        let next = step_parametric(&c, 1e-3).unwrap();
        let drift = c.points().iter().zip(next.points()).map(|(a, b)| a.distance(b)).fold(0.0, f64::max);
        assert!(drift < 1e-12);
    }

    /// RK4 on the scalar ODE `phi' = tan phi`, evaluated by hand.
    #[test]
    fn circle_step_matches_scalar_rk4() {
        let dt = 1e-4;
        let phi = 0.5f64;
        let k1 = phi.tan();
        let k2 = (phi + 0.5 * dt * k1).tan();
        let k3 = (phi + 0.5 * dt * k2).tan();
        let k4 = (phi + dt * k3).tan();
        let expected = phi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let g = step_graph(&GraphCurve::constant(64, phi).unwrap(), dt).unwrap();
        assert!(g.f().iter().all(|f| (f - expected).abs() < 1e-15));
        // Exact solution: sin phi(t) = sin(phi0) e^t.
        let exact = (phi.sin() * dt.exp()).asin();
        assert!(g.f().iter().all(|f| (f - exact).abs() < 1e-12));
    }

    #[test]
    fn graph_step_order() {
        let g = perturbed(64);
        let dt = graph_stable_dt(&g, 1.0);
        let reference = {
            let mut h = g.clone();
            for _ in 0..8 {
                h = step_graph(&h, dt / 8.0).unwrap();
            }
            h
        };
        let err = |steps: usize| {
            let mut h = g.clone();
            for _ in 0..steps {
                h = step_graph(&h, dt / steps as f64).unwrap();
            }
            h.f().iter().zip(reference.f()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1), err(2));
        assert!(e1 > 0.0 && (e1 / e2).log2() > 3.8, "{e1} {e2}");
    }

    #[test]
    fn oracle_examples() {
        let v = circle_oracle(-2.0f64.ln(), 0.0).unwrap();
        assert!((v.area - PI).abs() < 1e-14);
        assert!((v.length - TAU * 3f64.sqrt() / 2.0).abs() < 1e-14);
        assert!((v.k - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        let far = circle_oracle(-40.0, 0.0).unwrap();
        assert!((far.r - FRAC_PI_2).abs() < 1e-15 && far.k < 1e-15 && (far.area - TAU).abs() < 1e-15);
        assert!(matches!(circle_oracle(0.0, 0.0), Err(Error::AfterCollapse { .. })));
        let o = CircleOracle::through_latitude(0.1, 0.0).unwrap();
        assert!((o.t_collapse + 0.1f64.sin().ln()).abs() < 1e-15);
        assert!(o.t_collapse > std::f64::consts::LN_10 && o.t_collapse < 2.305);
        assert!((o.eval(0.0).unwrap().f - 0.1).abs() < 1e-15);
    }

    /// RK4 on `dr/dt = -cot r` from t = -5 to t = -1.
    #[test]
    fn oracle_matches_radius_ode() {
        let rhs = |r: f64| -1.0 / r.tan();
        let steps = 4000;
        let h = 4.0 / steps as f64;
        let mut r = (-5f64).exp().acos();
        for _ in 0..steps {
            let k1 = rhs(r);
            let k2 = rhs(r + 0.5 * h * k1);
            let k3 = rhs(r + 0.5 * h * k2);
            let k4 = rhs(r + h * k3);
            r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        assert!((r - circle_oracle(-1.0, 0.0).unwrap().r).abs() < 1e-10);
    }

    #[test]
    fn config_validation() {
        assert!(FlowConfig::default().validate().is_ok());
        let field = |c: FlowConfig| match c.validate() {
            Err(Error::InvalidConfig { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(field(FlowConfig { dt: 0.0, ..Default::default() }), "dt");
        assert_eq!(field(FlowConfig { t_end: 0.0, ..Default::default() }), "t_end");
        assert_eq!(field(FlowConfig { cfl: 1.5, ..Default::default() }), "cfl");
        assert_eq!(
            field(FlowConfig { stop_max_latitude: FRAC_PI_2 + 1e-5, ..Default::default() }),
            "stop_max_latitude"
        );
    }

    #[test]
    fn run_equator_and_stop() {
        let cfg = FlowConfig { grid_size: 32, dt: 0.05, emit_every: 2, ..Default::default() };
        let tr = run(&cfg, GraphCurve::constant(32, 0.0).unwrap().into()).unwrap();
        assert_eq!(tr.stop_reason, StopReason::TimeEnd);
        assert_eq!(tr.states.len(), 11);
        assert!(tr.states.iter().all(|s| s.curve == tr.states[0].curve));

        let cfg = FlowConfig { grid_size: 32, dt: 0.01, t_end: 5.0, stop_max_latitude: 1.4, ..Default::default() };
        let tr = run(&cfg, GraphCurve::constant(32, 0.1).unwrap().into()).unwrap();
        assert_eq!(tr.stop_reason, StopReason::MaxLatitude);
        assert!(tr.last().t < -(0.1f64.sin().ln()));
    }

    #[test]
    fn run_rejects_non_convex_initial_data() {
        let g = GraphCurve::from_fn(64, |t| 0.1 + 0.3 * (2.0 * t).cos()).unwrap();
        let cfg = FlowConfig { grid_size: 64, ..Default::default() };
        assert!(matches!(run(&cfg, g.into()), Err(Error::NonConvexInitial { .. })));
    }
}
