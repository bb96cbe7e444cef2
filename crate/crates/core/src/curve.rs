//! Closed curves on the sphere: graphs `phi = f(theta)` over the equator and
//! general parametric node lists, with curvature, length, area and the
//! convexity tests.
//!
//! Normal convention: the interior is the component containing the north
//! pole and `N` points into it, so latitude circles in the upper hemisphere
//! have `k = tan(phi0) > 0`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;

use crate::error::{Error, Result};
use crate::spectral::{self, TrigInterpolant};
use crate::sphere::{cross, dot3, norm, point_at, wrap_difference, SpherePoint, POLE_TOLERANCE};

/// Largest admissible `|f|` for a graph curve.
pub const POLE_CUTOFF: f64 = FRAC_PI_2 - 1e-6;
pub const MIN_GRID: usize = 16;
/// Nodes whose convexity expression is below this count as non-convex.
pub const CONVEXITY_TOLERANCE: f64 = -1e-10;
pub const MIN_GAP: f64 = 1e-8;
pub const MAX_GAP: f64 = 0.5;

const HEMISPHERE_TOLERANCE: f64 = -1e-8;

fn check_grid(n: usize) -> Result<()> {
    if n < MIN_GRID {
        return Err(Error::InvalidGrid { n, reason: "at least 16 nodes are required" });
    }
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidGrid { n, reason: "node count must be even" });
    }
    Ok(())
}

pub(crate) fn check_latitudes(f: &[f64]) -> Result<()> {
    for (index, &v) in f.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if v.abs() >= POLE_CUTOFF {
            return Err(Error::PoleProximity { index, latitude: v });
        }
    }
    Ok(())
}

/// A curve written as latitude `phi = f(theta)` over the equator, sampled at
/// `theta_i = 2 pi i / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphCurve {
    f: Vec<f64>,
}

impl GraphCurve {
    pub fn new(f: Vec<f64>) -> Result<Self> {
        check_grid(f.len())?;
        check_latitudes(&f)?;
        Ok(Self { f })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..n).map(|i| f(TAU * i as f64 / n as f64)).collect())
    }

    pub fn constant(n: usize, phi0: f64) -> Result<Self> {
        Self::new(vec![phi0; n])
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn into_values(self) -> Vec<f64> {
        self.f
    }

    pub fn theta(&self, i: usize) -> f64 {
        TAU * i as f64 / self.n() as f64
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.n() as f64
    }

    pub fn point(&self, i: usize) -> SpherePoint {
        point_at(self.theta(i), self.f[i])
    }

    pub fn points(&self) -> Vec<SpherePoint> {
        (0..self.n()).map(|i| self.point(i)).collect()
    }

    pub fn max_latitude(&self) -> f64 {
        self.f.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Spectral `f'` and `f''`.
    pub fn derivatives(&self) -> (Vec<f64>, Vec<f64>) {
        spectral::grid(self.n()).d1_d2(&self.f)
    }

    pub fn interpolant(&self) -> TrigInterpolant {
        spectral::grid(self.n()).interpolant(&self.f)
    }

    /// The grid nodes as a parametric curve (parameter = azimuth).
    pub fn node_curve(&self) -> Result<ParamCurve> {
        ParamCurve::new(self.points())
    }

    pub fn to_param(&self, m: usize) -> Result<ParamCurve> {
        to_param(self, m)
    }
}

/// Per-node quantities of a graph curve, shared by the curvature, the
/// flow right-hand side and the monitors.
#[derive(Debug, Clone)]
pub(crate) struct GraphGeometry {
    pub f1: Vec<f64>,
    /// `W = sqrt(f'^2 + cos^2 f)`, the speed `|dX/dtheta|`.
    pub speed: Vec<f64>,
    /// `f'' + 2 (f')^2 tan f + sin f cos f`.
    pub expr: Vec<f64>,
}

impl GraphGeometry {
    pub fn of(f: &[f64]) -> Self {
        let (f1, f2) = spectral::grid(f.len()).d1_d2(f);
        let mut speed = Vec::with_capacity(f.len());
        let mut expr = Vec::with_capacity(f.len());
        for i in 0..f.len() {
            let (s, c) = f[i].sin_cos();
            speed.push((f1[i] * f1[i] + c * c).sqrt());
            expr.push(f2[i] + 2.0 * f1[i] * f1[i] * (s / c) + s * c);
        }
        Self { f1, speed, expr }
    }

    pub fn curvature(&self, f: &[f64]) -> Vec<f64> {
        (0..f.len()).map(|i| f[i].cos() * self.expr[i] / self.speed[i].powi(3)).collect()
    }
}

/// Signed geodesic curvature and arclength element at each node.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProfile {
    pub k: Vec<f64>,
    pub ds: Vec<f64>,
}

impl CurvatureProfile {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.ds.iter().sum()
    }

    /// `sum k ds`.
    pub fn total_curvature(&self) -> f64 {
        self.k.iter().zip(&self.ds).map(|(k, ds)| k * ds).sum()
    }

    /// `sum k^2 ds`.
    pub fn total_squared_curvature(&self) -> f64 {
        self.k.iter().zip(&self.ds).map(|(k, ds)| k * k * ds).sum()
    }

    pub fn k_min(&self) -> f64 {
        self.k.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn k_max(&self) -> f64 {
        self.k.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Speed of the underlying uniform parametrization, `ds / dsigma`.
    pub fn speed(&self) -> Vec<f64> {
        let h = TAU / self.len() as f64;
        self.ds.iter().map(|d| d / h).collect()
    }
}

pub fn graph_curvature(g: &GraphCurve) -> CurvatureProfile {
    let geo = GraphGeometry::of(&g.f);
    let h = g.dtheta();
    CurvatureProfile { k: geo.curvature(&g.f), ds: geo.speed.iter().map(|w| w * h).collect() }
}

/// Area of the polar-cap side, `int (1 - sin f) dtheta`, by the trapezoidal rule.
pub fn enclosed_area(g: &GraphCurve) -> f64 {
    g.f.iter().map(|f| 1.0 - f.sin()).sum::<f64>() * g.dtheta()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Convexity {
    Convex { min_k: f64 },
    NonConvex { index: usize },
}

impl Convexity {
    pub fn is_convex(&self) -> bool {
        matches!(self, Convexity::Convex { .. })
    }
}

pub fn convexity_check(g: &GraphCurve) -> Convexity {
    let geo = GraphGeometry::of(&g.f);
    if let Some(index) = geo.expr.iter().position(|&e| e < CONVEXITY_TOLERANCE) {
        return Convexity::NonConvex { index };
    }
    let min_k = geo.curvature(&g.f).into_iter().fold(f64::INFINITY, f64::min);
    Convexity::Convex { min_k }
}

/// For every node, checks that the whole curve (sampled at `samples` azimuths
/// through the trigonometric interpolant) lies in the closed hemisphere bounded
/// by the tangent great circle and containing the interior normal.
pub fn hemisphere_check(g: &GraphCurve, samples: usize) -> bool {
    let samples = samples.max(g.n());
    let interp = g.interpolant();
    let curve: Vec<[f64; 3]> = (0..samples)
        .map(|j| {
            let th = TAU * j as f64 / samples as f64;
            point_at(th, interp.eval(th)).to_array()
        })
        .collect();
    let (f1, _) = g.derivatives();
    (0..g.n()).all(|i| {
        let pole = interior_normal(g.theta(i), g.f[i], f1[i]);
        curve.iter().all(|y| dot3(*y, pole) >= HEMISPHERE_TOLERANCE)
    })
}

/// Unit normal `X x T` of the graph at azimuth `theta`; points north.
fn interior_normal(theta: f64, f: f64, f1: f64) -> [f64; 3] {
    let x = point_at(theta, f).to_array();
    let (st, ct) = theta.sin_cos();
    let (sf, cf) = f.sin_cos();
    let dx = [-sf * ct * f1 - cf * st, -sf * st * f1 + cf * ct, cf * f1];
    let n = cross(x, dx);
    let l = norm(n);
    [n[0] / l, n[1] / l, n[2] / l]
}

/// A closed curve given as an ordered periodic list of sphere points.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCurve {
    points: Vec<SpherePoint>,
}

impl ParamCurve {
    pub fn new(points: Vec<SpherePoint>) -> Result<Self> {
        check_grid(points.len())?;
        let m = points.len();
        for i in 0..m {
            let gap = points[i].distance(&points[(i + 1) % m]);
            if !(MIN_GAP..=MAX_GAP).contains(&gap) {
                return Err(Error::DegenerateSpacing { index: i, gap });
            }
        }
        Ok(Self { points })
    }

    pub fn latitude_circle(phi0: f64, m: usize) -> Result<Self> {
        Self::new((0..m).map(|j| point_at(TAU * j as f64 / m as f64, phi0)).collect())
    }

    /// Geodesic circle of the given radius about `center`, traversed
    /// counterclockwise as seen from outside the sphere above `center`.
    pub fn geodesic_circle(center: SpherePoint, radius: f64, m: usize) -> Result<Self> {
        let c = center.to_array();
        let helper = if c[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
        let e2 = {
            let v = cross(c, helper);
            let l = norm(v);
            [v[0] / l, v[1] / l, v[2] / l]
        };
        let e1 = cross(e2, c);
        let (sr, cr) = radius.sin_cos();
        let pts = (0..m)
            .map(|j| {
                let (s, co) = (TAU * j as f64 / m as f64).sin_cos();
                let v: [f64; 3] = std::array::from_fn(|a| cr * c[a] + sr * (co * e1[a] + s * e2[a]));
                SpherePoint::from_vec(v).expect("circle point")
            })
            .collect();
        Self::new(pts)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    pub fn into_points(self) -> Vec<SpherePoint> {
        self.points
    }

    pub fn reversed(&self) -> ParamCurve {
        let mut pts = self.points.clone();
        pts.reverse();
        ParamCurve { points: pts }
    }

    pub fn max_latitude(&self) -> f64 {
        self.points.iter().map(|p| p.z().clamp(-1.0, 1.0).asin()).fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn coordinates(&self) -> [Vec<f64>; 3] {
        std::array::from_fn(|a| self.points.iter().map(|p| p.to_array()[a]).collect())
    }

    pub fn interpolant(&self) -> CurveInterpolant {
        let s = spectral::grid(self.len());
        let coords = self.coordinates();
        CurveInterpolant { coords: std::array::from_fn(|a| s.interpolant(&coords[a])) }
    }

    /// Net number of turns of the azimuth around the z-axis, or `None` when a
    /// node sits on a pole.
    pub fn winding_number(&self) -> Option<i32> {
        winding_number(&self.points)
    }

    pub fn to_graph(&self, n: usize) -> Result<GraphCurve> {
        to_graph(self, n)
    }
}

fn winding_number(points: &[SpherePoint]) -> Option<i32> {
    if points.iter().any(|p| p.z().abs() >= 1.0 - POLE_TOLERANCE) {
        return None;
    }
    let m = points.len();
    let total: f64 = (0..m)
        .map(|i| {
            let a = points[i].y().atan2(points[i].x());
            let b = points[(i + 1) % m].y().atan2(points[(i + 1) % m].x());
            wrap_difference(b - a)
        })
        .sum();
    Some((total / TAU).round() as i32)
}

/// Trigonometric interpolant of the three coordinates of a [`ParamCurve`].
#[derive(Debug, Clone)]
pub struct CurveInterpolant {
    coords: [TrigInterpolant; 3],
}

impl CurveInterpolant {
    /// Position and its first two parameter derivatives (not projected to the sphere).
    pub fn eval(&self, sigma: f64) -> [[f64; 3]; 3] {
        let v: [[f64; 3]; 3] = std::array::from_fn(|a| self.coords[a].eval_with_derivatives(sigma));
        [[v[0][0], v[1][0], v[2][0]], [v[0][1], v[1][1], v[2][1]], [v[0][2], v[1][2], v[2][2]]]
    }

    pub fn point(&self, sigma: f64) -> SpherePoint {
        let [x, _, _] = self.eval(sigma);
        SpherePoint::from_vec(x).expect("interpolated point away from origin")
    }
}

/// Per-node frame data of a parametric curve.
#[derive(Debug, Clone)]
pub(crate) struct ParamGeometry {
    pub speed: Vec<f64>,
    /// Curvature relative to `normal`.
    pub k: Vec<f64>,
    /// Interior-pointing unit normal (tangent to the sphere).
    pub normal: Vec<[f64; 3]>,
}

impl ParamGeometry {
    pub fn of(points: &[SpherePoint]) -> Self {
        let m = points.len();
        let s = spectral::grid(m);
        let coords: [Vec<f64>; 3] = std::array::from_fn(|a| points.iter().map(|p| p.to_array()[a]).collect());
        let d: [(Vec<f64>, Vec<f64>); 3] = std::array::from_fn(|a| s.d1_d2(&coords[a]));
        let mut speed = Vec::with_capacity(m);
        let mut k = Vec::with_capacity(m);
        let mut normal = Vec::with_capacity(m);
        for (i, p) in points.iter().enumerate() {
            let x = p.to_array();
            let d1 = [d[0].0[i], d[1].0[i], d[2].0[i]];
            let d2 = [d[0].1[i], d[1].1[i], d[2].1[i]];
            let sp = norm(d1);
            let t = [d1[0] / sp, d1[1] / sp, d1[2] / sp];
            let nv = cross(x, t);
            let nl = norm(nv);
            let nv = [nv[0] / nl, nv[1] / nl, nv[2] / nl];
            speed.push(sp);
            k.push(dot3(d2, nv) / (sp * sp));
            normal.push(nv);
        }
        let h = TAU / m as f64;
        let sign = match winding_number(points) {
            Some(w) if w.abs() == 1 => w as f64,
            _ => {
                let total: f64 = k.iter().zip(&speed).map(|(k, s)| k * s * h).sum();
                if total >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        if sign < 0.0 {
            k.iter_mut().for_each(|v| *v = -*v);
            normal.iter_mut().for_each(|n| *n = [-n[0], -n[1], -n[2]]);
        }
        Self { speed, k, normal }
    }
}

pub fn param_curvature(c: &ParamCurve) -> CurvatureProfile {
    let geo = ParamGeometry::of(&c.points);
    let h = TAU / c.len() as f64;
    CurvatureProfile { k: geo.k, ds: geo.speed.iter().map(|s| s * h).collect() }
}

/// Area of the interior of a parametric curve.
///
/// For curves winding once around the z-axis this is the area of the
/// component containing the north pole, `oint (1 - z) dtheta`. Otherwise it is
/// the smaller of the two complementary regions.
pub fn param_enclosed_area(c: &ParamCurve) -> Result<f64> {
    let w = c.winding_number().ok_or(Error::PoleProjection)?;
    let m = c.len();
    let s = spectral::grid(m);
    let [x, y, z] = c.coordinates();
    let dx = s.derivative(&x, 1);
    let dy = s.derivative(&y, 1);
    let h = TAU / m as f64;
    let line: f64 = (0..m)
        .map(|i| {
            let dtheta = (x[i] * dy[i] - y[i] * dx[i]) / (x[i] * x[i] + y[i] * y[i]);
            (1.0 - z[i]) * dtheta
        })
        .sum::<f64>()
        * h;
    Ok(match w {
        1 | -1 => w as f64 * line,
        _ => {
            let a = line.abs();
            a.min(4.0 * PI - a)
        }
    })
}

/// Resamples a graph at `m` points equally spaced in arclength, starting at
/// `theta = 0`.
pub fn to_param(g: &GraphCurve, m: usize) -> Result<ParamCurve> {
    check_grid(m)?;
    let geo = GraphGeometry::of(&g.f);
    let s = spectral::grid(g.n());
    let speed = s.interpolant(&geo.speed);
    let f = g.interpolant();
    let thetas = invert_arclength(&speed, m);
    ParamCurve::new(thetas.into_iter().map(|th| point_at(th, f.eval(th))).collect())
}

/// Parameters `sigma_j` with `s(sigma_j) = j L / m`, where `s` is the
/// antiderivative of the interpolated speed.
fn invert_arclength(speed: &TrigInterpolant, m: usize) -> Vec<f64> {
    let mean = speed.mean();
    let length = TAU * mean;
    (0..m)
        .map(|j| {
            let target = length * j as f64 / m as f64;
            let mut sigma = target / mean;
            for _ in 0..50 {
                let r = speed.integral(sigma) - target;
                let step = r / speed.eval(sigma);
                sigma -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            sigma
        })
        .collect()
}

/// Redistributes the nodes of `c` uniformly by arclength (same node count),
/// keeping the first node fixed.
pub fn redistribute(c: &ParamCurve) -> Result<ParamCurve> {
    redistribute_to(c, c.len())
}

/// Resamples `c` at `m` points uniformly spaced in arclength, starting at its first node.
pub fn redistribute_to(c: &ParamCurve, m: usize) -> Result<ParamCurve> {
    check_grid(m)?;
    let geo = ParamGeometry::of(&c.points);
    let speed = spectral::grid(c.len()).interpolant(&geo.speed);
    let interp = c.interpolant();
    let sigmas = invert_arclength(&speed, m);
    ParamCurve::new(sigmas.into_iter().map(|s| interp.point(s)).collect())
}

/// Samples a parametric curve as a graph on the `n`-point azimuth grid.
///
/// The curve must sweep the azimuth monotonically once around the z-axis;
/// otherwise some fiber meets it more than once (or not at all).
pub fn to_graph(c: &ParamCurve, n: usize) -> Result<GraphCurve> {
    check_grid(n)?;
    let m = c.len();
    if c.points.iter().any(|p| p.z().abs() >= 1.0 - POLE_TOLERANCE) {
        let index = c.points.iter().position(|p| p.z().abs() >= 1.0 - POLE_TOLERANCE).unwrap();
        return Err(Error::NotAGraph { index });
    }
    let az: Vec<f64> = c.points.iter().map(|p| p.y().atan2(p.x())).collect();
    let incr: Vec<f64> = (0..m).map(|i| wrap_difference(az[(i + 1) % m] - az[i])).collect();
    let ccw = incr.iter().sum::<f64>() > 0.0;
    let curve = if ccw { c.clone() } else { c.reversed() };
    let az: Vec<f64> = curve.points.iter().map(|p| p.y().atan2(p.x())).collect();
    let mut unwrapped = Vec::with_capacity(m + 1);
    unwrapped.push(az[0]);
    for i in 0..m {
        let d = wrap_difference(az[(i + 1) % m] - az[i]);
        if d <= 0.0 {
            let index = if ccw { i } else { m - 1 - i };
            return Err(Error::NotAGraph { index });
        }
        unwrapped.push(unwrapped[i] + d);
    }
    if ((unwrapped[m] - unwrapped[0]) - TAU).abs() > 1e-6 {
        return Err(Error::NotAGraph { index: 0 });
    }

    let interp = curve.interpolant();
    let h = TAU / m as f64;
    let azimuth_residual = |sigma: f64, target: f64| -> (f64, f64) {
        let [x, d1, _] = interp.eval(sigma);
        let rho2 = x[0] * x[0] + x[1] * x[1];
        let a = x[1].atan2(x[0]);
        (wrap_difference(a - target), (x[0] * d1[1] - x[1] * d1[0]) / rho2)
    };

    let f = (0..n)
        .map(|i| {
            let target = TAU * i as f64 / n as f64;
            // Bracketing segment in the unwrapped azimuth sweep.
            let rel = (target - unwrapped[0]).rem_euclid(TAU) + unwrapped[0];
            let j = (0..m).find(|&j| unwrapped[j] <= rel && rel <= unwrapped[j + 1]).unwrap_or(m - 1);
            let (mut lo, mut hi) = (j as f64 * h, (j + 1) as f64 * h);
            let frac = (rel - unwrapped[j]) / (unwrapped[j + 1] - unwrapped[j]);
            let mut sigma = lo + frac * h;
            for _ in 0..60 {
                let (r, dr) = azimuth_residual(sigma, target);
                if r.abs() < 1e-15 {
                    break;
                }
                if r > 0.0 {
                    hi = sigma;
                } else {
                    lo = sigma;
                }
                let next = sigma - r / dr;
                sigma = if dr > 0.0 && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            }
            let [x, _, _] = interp.eval(sigma);
            x[2].atan2(x[0].hypot(x[1]))
        })
        .collect();
    GraphCurve::new(f)
}

/// Piecewise quintic Hermite interpolant of a node list through the
/// spectral first and second derivatives at the nodes. Agrees with the
/// trigonometric interpolant to `O(h^6)` at a fraction of the evaluation cost.
#[derive(Debug, Clone)]
pub struct HermiteCurve {
    h: f64,
    x: Vec<[f64; 3]>,
    d1: Vec<[f64; 3]>,
    d2: Vec<[f64; 3]>,
}

impl HermiteCurve {
    pub fn new(c: &ParamCurve) -> Self {
        let m = c.len();
        let s = spectral::grid(m);
        let coords = c.coordinates();
        let d: [(Vec<f64>, Vec<f64>); 3] = std::array::from_fn(|a| s.d1_d2(&coords[a]));
        Self {
            h: TAU / m as f64,
            x: c.points.iter().map(|p| p.to_array()).collect(),
            d1: (0..m).map(|i| [d[0].0[i], d[1].0[i], d[2].0[i]]).collect(),
            d2: (0..m).map(|i| [d[0].1[i], d[1].1[i], d[2].1[i]]).collect(),
        }
    }

    /// Position and first two parameter derivatives at `sigma`.
    pub fn eval(&self, sigma: f64) -> [[f64; 3]; 3] {
        let m = self.x.len();
        let u = (sigma / self.h).rem_euclid(m as f64);
        let j = (u.floor() as usize).min(m - 1);
        let t = u - j as f64;
        let k = (j + 1) % m;
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);
        let basis = [
            [
                1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
                -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
                -60.0 * t + 180.0 * t2 - 120.0 * t3,
            ],
            [
                t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
                1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
                -36.0 * t + 96.0 * t2 - 60.0 * t3,
            ],
            [
                0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5),
                0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4),
                0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3),
            ],
            [
                0.5 * (t3 - 2.0 * t4 + t5),
                0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4),
                0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3),
            ],
            [-4.0 * t3 + 7.0 * t4 - 3.0 * t5, -12.0 * t2 + 28.0 * t3 - 15.0 * t4, -24.0 * t + 84.0 * t2 - 60.0 * t3],
            [10.0 * t3 - 15.0 * t4 + 6.0 * t5, 30.0 * t2 - 60.0 * t3 + 30.0 * t4, 60.0 * t - 180.0 * t2 + 120.0 * t3],
        ];
        let h = self.h;
        let data = [self.x[j], self.d1[j], self.d2[j], self.d2[k], self.d1[k], self.x[k]];
        let scale = [1.0, h, h * h, h * h, h, 1.0];
        let mut out = [[0.0; 3]; 3];
        for (b, (v, sc)) in basis.iter().zip(data.iter().zip(scale)) {
            for (order, factor) in [1.0, 1.0 / h, 1.0 / (h * h)].into_iter().enumerate() {
                for a in 0..3 {
                    out[order][a] += b[order] * sc * v[a] * factor;
                }
            }
        }
        out
    }
}

/// Geodesic distance from `p` to the curve through the nodes of `c`,
/// minimizing the chord length over the two segments next to the nearest node.
pub fn distance_to_curve(p: &SpherePoint, c: &ParamCurve, interp: &HermiteCurve) -> f64 {
    let m = c.len();
    let h = TAU / m as f64;
    let pa = p.to_array();
    let chord2 = |x: [f64; 3]| (x[0] - pa[0]).powi(2) + (x[1] - pa[1]).powi(2) + (x[2] - pa[2]).powi(2);
    let (j, nearest) = interp
        .x
        .iter()
        .enumerate()
        .map(|(j, q)| (j, chord2(*q)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty curve");
    if nearest == 0.0 {
        return 0.0;
    }
    let grad = |s: f64| -> (f64, f64, [f64; 3]) {
        let [x, d1, d2] = interp.eval(s);
        let r = [x[0] - pa[0], x[1] - pa[1], x[2] - pa[2]];
        (dot3(d1, r), dot3(d2, r) + dot3(d1, d1), x)
    };
    let centre = j as f64 * h;
    let (mut lo, mut hi) = (centre - h, centre + h);
    let mut best = p.distance(&c.points[j]);
    let mut consider = |x: [f64; 3]| {
        if let Some(q) = SpherePoint::from_vec(x) {
            best = best.min(p.distance(&q));
        }
    };
    let (glo, _, xlo) = grad(lo);
    let (ghi, _, xhi) = grad(hi);
    if glo < 0.0 && ghi > 0.0 {
        let mut s = centre;
        for _ in 0..60 {
            let (g, gp, _) = grad(s);
            if g == 0.0 {
                break;
            }
            if g > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let next = s - g / gp;
            let s_new = if gp > 0.0 && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            let done = (s_new - s).abs() < 1e-14;
            s = s_new;
            if done {
                break;
            }
        }
        consider(grad(s).2);
    } else {
        consider(xlo);
        consider(xhi);
    }
    best
}

/// Largest distance from any of `points` to the curve `c`.
pub fn directed_hausdorff(points: &[SpherePoint], c: &ParamCurve) -> f64 {
    let interp = HermiteCurve::new(c);
    points.iter().map(|p| distance_to_curve(p, c, &interp)).fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two sampled curves, measured from the
/// nodes of each to the interpolant of the other.
pub fn hausdorff(a: &ParamCurve, b: &ParamCurve) -> f64 {
    directed_hausdorff(&a.points, b).max(directed_hausdorff(&b.points, a))
}

/// Draws a convex graph `f = a0 + sum_{m=2}^{modes} (a_m cos m theta + b_m sin m theta)`
/// with `a0` uniform in `mean_range` and coefficients uniform in
/// `[-amplitude/m^2, amplitude/m^2]`, redrawing until the convexity test passes.
pub fn random_convex_graph<R: Rng>(
    rng: &mut R,
    n: usize,
    mean_range: (f64, f64),
    modes: usize,
    amplitude: f64,
) -> Result<GraphCurve> {
    let mut last = None;
    for _ in 0..1000 {
        let a0 = rng.gen_range(mean_range.0..=mean_range.1);
        let coeffs: Vec<(f64, f64)> = (2..=modes)
            .map(|m| {
                let bound = amplitude / (m * m) as f64;
                (rng.gen_range(-bound..=bound), rng.gen_range(-bound..=bound))
            })
            .collect();
        let g = GraphCurve::from_fn(n, |th| {
            a0 + coeffs
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let m = (i + 2) as f64;
                    a * (m * th).cos() + b * (m * th).sin()
                })
                .sum::<f64>()
        })?;
        match convexity_check(&g) {
            Convexity::Convex { .. } => return Ok(g),
            Convexity::NonConvex { index } => last = Some(index),
        }
    }
    Err(Error::NonConvexInitial { index: last.unwrap_or(0) })
}
