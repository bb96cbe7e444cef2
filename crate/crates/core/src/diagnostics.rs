//! Monitors for the identities and inequalities satisfied by the flow:
//! Gauss-Bonnet, the area law, length dissipation, the curvature evolution
//! equation, the Harnack inequality and the growth of total curvature.
//!
//! All functions are pure over emitted states.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::curve::{graph_curvature, CurvatureProfile, GraphGeometry};
use crate::error::{Error, Result};
use crate::flow::{graph_rhs, Curve, StopReason, Trajectory};
use crate::spectral;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub area: f64,
    pub length: f64,
    pub total_curvature: f64,
    pub k_min: f64,
    pub k_max: f64,
    /// `None` at the start time (where the bound is infinite) and for non-convex states.
    pub harnack_margin: Option<f64>,
    pub gb_residual: f64,
    pub convex: bool,
}

pub fn record(curve: &Curve, t: f64, t_start: f64) -> Result<DiagnosticsRecord> {
    let p = curve.profile();
    let area = curve.area()?;
    let convex = curve.convexity().is_convex();
    let harnack_margin = if convex && t > t_start { harnack_margin(&p, t, t_start).ok() } else { None };
    Ok(DiagnosticsRecord {
        t,
        area,
        length: p.length(),
        total_curvature: p.total_curvature(),
        k_min: p.k_min(),
        k_max: p.k_max(),
        harnack_margin,
        gb_residual: gauss_bonnet_residual(&p, area),
        convex,
    })
}

/// `|sum k ds - (2 pi - A)|`.
pub fn gauss_bonnet_residual(profile: &CurvatureProfile, area: f64) -> f64 {
    (profile.total_curvature() - (TAU - area)).abs()
}

/// `A(t) = 2 pi [1 - (1 - a0 / 2 pi) e^t]`.
pub fn area_law_prediction(a0: f64, t: f64) -> Result<f64> {
    if !(a0 > 0.0 && a0 <= TAU) {
        return Err(Error::InvalidArea { area: a0 });
    }
    Ok(TAU * (1.0 - (1.0 - a0 / TAU) * t.exp()))
}

/// Largest deviation of the measured area from the area law started at the
/// first state.
pub fn area_law_residual(traj: &Trajectory) -> Result<f64> {
    let first = &traj.states[0].diagnostics;
    traj.states.iter().try_fold(0.0f64, |acc, s| {
        let predicted = area_law_prediction(first.area, s.t - first.t)?;
        Ok(acc.max((s.diagnostics.area - predicted).abs()))
    })
}

/// Per-node `Q = (log k)_ss + k^2`, differentiating spectrally in the grid
/// parameter with `d/ds = (1/speed) d/dsigma`.
pub fn harnack_quantity(profile: &CurvatureProfile) -> Result<Vec<f64>> {
    if let Some(index) = profile.k.iter().position(|&k| !(k > 0.0)) {
        return Err(Error::NonConvexState { index, k: profile.k[index] });
    }
    let s = spectral::grid(profile.len());
    let speed = profile.speed();
    let log_k: Vec<f64> = profile.k.iter().map(|k| k.ln()).collect();
    let d = s.derivative(&log_k, 1);
    let g: Vec<f64> = d.iter().zip(&speed).map(|(d, w)| d / w).collect();
    let dg = s.derivative(&g, 1);
    Ok((0..profile.len()).map(|i| dg[i] / speed[i] + profile.k[i].powi(2)).collect())
}

/// `min_i Q_i + 1 / (2 (t - t_start))`.
pub fn harnack_margin(profile: &CurvatureProfile, t: f64, t_start: f64) -> Result<f64> {
    if !(t > t_start) {
        return Err(Error::InvalidTime { t, t_start });
    }
    let q = harnack_quantity(profile)?;
    Ok(q.into_iter().fold(f64::INFINITY, f64::min) + 0.5 / (t - t_start))
}

/// Spacing of the emitted states around `index`, which must be interior and
/// have equal gaps on both sides.
fn central_spacing(traj: &Trajectory, index: usize) -> Result<f64> {
    if index == 0 || index + 1 >= traj.states.len() {
        return Err(Error::CadenceMismatch { index });
    }
    let t = |i: usize| traj.states[i].t;
    let (back, ahead) = (t(index) - t(index - 1), t(index + 1) - t(index));
    if !(back > 0.0) || (ahead - back).abs() > 1e-9 * back.max(1.0) {
        return Err(Error::CadenceMismatch { index });
    }
    Ok(0.5 * (ahead + back))
}

/// Max-norm residual of `Dk/Dt = k_ss + k^3 + k` at an interior emitted state.
///
/// The states are viewed as graphs on a fixed azimuth grid. Grid nodes drift
/// tangentially with speed `v = f_t f' / W`, so the normal-flow derivative is
/// `Dk/Dt = k_t|_theta - f_t f' k_theta / W^2`, with `k_t|_theta` taken by
/// central differences of the neighbouring states.
pub fn curvature_evolution_residual(traj: &Trajectory, index: usize) -> Result<f64> {
    let dt = central_spacing(traj, index)?;
    let n = traj.states[index].curve.grid_size();
    let graph = |i: usize| traj.states[i].curve.to_graph(n);
    let k_prev = graph_curvature(&graph(index - 1)?).k;
    let k_next = graph_curvature(&graph(index + 1)?).k;
    let mid = graph(index)?;
    let geo = GraphGeometry::of(mid.f());
    let k = geo.curvature(mid.f());
    let ft = graph_rhs(&mid);
    let s = spectral::grid(n);
    let k_theta = s.derivative(&k, 1);
    let k_s: Vec<f64> = k_theta.iter().zip(&geo.speed).map(|(d, w)| d / w).collect();
    let k_ss_theta = s.derivative(&k_s, 1);
    Ok((0..n)
        .map(|i| {
            let w = geo.speed[i];
            let dk_dt = (k_next[i] - k_prev[i]) / (2.0 * dt) - ft[i] * geo.f1[i] * k_theta[i] / (w * w);
            let k_ss = k_ss_theta[i] / w;
            (dk_dt - (k_ss + k[i].powi(3) + k[i])).abs()
        })
        .fold(0.0, f64::max))
}

/// `|dL/dt + sum k^2 ds|` with a central difference in time.
pub fn length_dissipation_residual(traj: &Trajectory, index: usize) -> Result<f64> {
    let dt = central_spacing(traj, index)?;
    let length = |i: usize| traj.states[i].diagnostics.length;
    let dl = (length(index + 1) - length(index - 1)) / (2.0 * dt);
    Ok((dl + traj.states[index].curve.profile().total_squared_curvature()).abs())
}

/// Least-squares slope of `log sum k ds` against `t`. When the run ended on a
/// stop criterion the last 10% of its time span is left out of the fit.
pub fn total_curvature_decay(traj: &Trajectory) -> Result<f64> {
    let states = &traj.states;
    let first = states.first().map(|s| s.t).unwrap_or(0.0);
    let last = states.last().map(|s| s.t).unwrap_or(0.0);
    let cutoff = if traj.stop_reason == StopReason::TimeEnd { f64::INFINITY } else { first + 0.9 * (last - first) };
    let window: Vec<_> = states.iter().filter(|s| s.t <= cutoff).collect();
    if window.len() < 2 || window.last().unwrap().t <= window[0].t {
        return Err(Error::DegenerateFit { reason: "fewer than two distinct times" });
    }
    if window.iter().any(|s| !(s.diagnostics.total_curvature > 1e-12)) {
        return Err(Error::DegenerateFit { reason: "total curvature vanishes" });
    }
    for s in &window {
        if !s.diagnostics.convex {
            let p = s.curve.profile();
            let index = p.k.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
            return Err(Error::NonConvexState { index, k: p.k[index] });
        }
    }
    let xs: Vec<f64> = window.iter().map(|s| s.t).collect();
    let ys: Vec<f64> = window.iter().map(|s| s.diagnostics.total_curvature.ln()).collect();
    Ok(least_squares_slope(&xs, &ys))
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Growth rate `1 - m^2` of mode `m` of the flow linearized about the equator.
pub fn linearized_mode_rate(m: u32) -> f64 {
    1.0 - (m as f64).powi(2)
}

/// Amplitude of `cos(m theta + c)` in the graph view of `curve`.
pub fn mode_amplitude(curve: &Curve, m: usize) -> Result<f64> {
    let g = curve.to_graph(curve.grid_size())?;
    Ok(g.interpolant().mode_amplitude(m))
}

/// Largest decrease of the minimum curvature between consecutive states
/// (zero when it is nondecreasing).
pub fn min_curvature_drop(traj: &Trajectory) -> f64 {
    traj.states.windows(2).map(|w| (w[0].diagnostics.k_min - w[1].diagnostics.k_min).max(0.0)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::GraphCurve;
    use crate::flow::{circle_oracle, run, FlowConfig};
    use std::f64::consts::{FRAC_PI_6, PI};

    #[test]
    fn gauss_bonnet_examples() {
        let eq = GraphCurve::constant(64, 0.0).unwrap();
        assert!(gauss_bonnet_residual(&graph_curvature(&eq), TAU) < 1e-15);
        let c = GraphCurve::constant(64, FRAC_PI_6).unwrap();
        let p = graph_curvature(&c);
        assert!((p.total_curvature() - PI).abs() < 1e-13);
        assert!(gauss_bonnet_residual(&p, PI) < 1e-13);
    }

    #[test]
    fn area_law_examples() {
        assert_eq!(area_law_prediction(TAU, 3.0).unwrap(), TAU);
        assert!((area_law_prediction(PI, 0.5f64.ln()).unwrap() - 1.5 * PI).abs() < 1e-14);
        assert!(area_law_prediction(0.0, 1.0).is_err());
        assert!(area_law_prediction(7.0, 1.0).is_err());
        // RK4 on A' = A - 2 pi.
        let (mut a, h) = (PI, 0.5f64.ln() / 1000.0);
        for _ in 0..1000 {
            let f = |a: f64| a - TAU;
            let (k1, k2) = (f(a), f(a + 0.5 * h * f(a)));
            let k3 = f(a + 0.5 * h * k2);
            let k4 = f(a + h * k3);
            a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        assert!((a - 1.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn harnack_on_circles() {
        let p = graph_curvature(&GraphCurve::constant(64, 0.4).unwrap());
        let k = 0.4f64.tan();
        let m = harnack_margin(&p, 0.25, 0.0).unwrap();
        assert!((m - (k * k + 2.0)).abs() < 1e-12);
        assert!(matches!(harnack_margin(&p, 0.0, 0.0), Err(Error::InvalidTime { .. })));
        let eq = graph_curvature(&GraphCurve::constant(64, 0.0).unwrap());
        assert!(matches!(harnack_margin(&eq, 1.0, 0.0), Err(Error::NonConvexState { .. })));
        let tiny = graph_curvature(&GraphCurve::constant(64, 1e-8).unwrap());
        assert!((harnack_margin(&tiny, 1.0, 0.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mode_rates() {
        assert_eq!(linearized_mode_rate(0), 1.0);
        assert_eq!(linearized_mode_rate(1), 0.0);
        assert_eq!(linearized_mode_rate(3), -8.0);
    }

    #[test]
    fn least_squares_recovers_a_line() {
        let xs = [0.0, 0.5, 1.0, 2.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 1.5 * x).collect();
        assert!((least_squares_slope(&xs, &ys) + 1.5).abs() < 1e-14);
    }

    #[test]
    fn circle_run_residuals() {
        let cfg = FlowConfig { grid_size: 64, dt: 1e-3, t_end: 0.05, emit_every: 1, ..Default::default() };
        let tr = run(&cfg, GraphCurve::constant(64, 0.3).unwrap().into()).unwrap();
        let oracle = crate::flow::CircleOracle::through_latitude(0.3, 0.0).unwrap();
        // Central differencing of the closed-form length at the same spacing
        // sets the floor for the length residual.
        let length = |t: f64| circle_oracle(t, oracle.t_collapse).unwrap().length;
        for i in 1..tr.states.len() - 1 {
            let t = tr.states[i].t;
            assert!(curvature_evolution_residual(&tr, i).unwrap() < 1e-6);
            let v = circle_oracle(t, oracle.t_collapse).unwrap();
            let floor = ((length(t + 1e-3) - length(t - 1e-3)) / 2e-3 + v.k * v.k * v.length).abs();
            let r = length_dissipation_residual(&tr, i).unwrap();
            assert!(r < 1e-6 && (r - floor).abs() < 1e-9, "{r} vs {floor}");
        }
        let last = tr.last();
        let exact = circle_oracle(last.t, oracle.t_collapse).unwrap();
        assert!((last.diagnostics.k_min - exact.k).abs() < 1e-10);
        assert!(matches!(curvature_evolution_residual(&tr, 0), Err(Error::CadenceMismatch { index: 0 })));
        assert!((total_curvature_decay(&tr).unwrap() - 1.0).abs() < 1e-8);
        assert!(area_law_residual(&tr).unwrap() < 1e-12);
        assert_eq!(min_curvature_drop(&tr), 0.0);
    }

    #[test]
    fn equator_fit_is_degenerate() {
        let cfg = FlowConfig { grid_size: 32, dt: 0.1, emit_every: 1, ..Default::default() };
        let tr = run(&cfg, GraphCurve::constant(32, 0.0).unwrap().into()).unwrap();
        assert!(matches!(total_curvature_decay(&tr), Err(Error::DegenerateFit { .. })));
        assert!(length_dissipation_residual(&tr, 1).unwrap() < 1e-15);
        assert!(curvature_evolution_residual(&tr, 1).unwrap() < 1e-15);
    }
}
