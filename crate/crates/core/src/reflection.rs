//! Reflection comparison of the two halves of a curve cut by a plane through
//! the origin, and the round-circle symmetry test.
//!
//! Latitudes are compared fiber by fiber over sampled azimuths of the
//! nearest-point projection to the equator. Inputs are restricted to the
//! closed upper hemisphere, where the distance to the equator equals the
//! signed latitude.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::curve::{hausdorff, ParamCurve};
use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::sphere::{ReflectionSpec, SpherePoint};

/// Nodes with `|<X, V>|` below this lie on the mirror plane.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;
/// Margins above this are strict; margins down to its negative are weak.
pub const STRICT_MARGIN: f64 = 1e-9;
pub const DEFAULT_FIBER_GRID: usize = 720;
pub const SYMMETRY_TOLERANCE: f64 = 1e-6;
pub const SPREAD_TOLERANCE: f64 = 1e-6;

const HEMISPHERE_SLACK: f64 = 1e-12;

/// A connected run of curve points on one side of the plane. Open arcs end on
/// the plane; a closed arc is the whole curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub points: Vec<SpherePoint>,
    /// Indices of the original nodes contained in the arc (crossing points excluded).
    pub nodes: Vec<usize>,
    pub closed: bool,
}

impl Arc {
    pub fn open(points: Vec<SpherePoint>) -> Self {
        Self { points, nodes: Vec::new(), closed: false }
    }

    pub fn closed(points: Vec<SpherePoint>) -> Self {
        Self { points, nodes: Vec::new(), closed: true }
    }

    pub fn map(&self, f: impl Fn(&SpherePoint) -> SpherePoint) -> Arc {
        Arc { points: self.points.iter().map(f).collect(), nodes: self.nodes.clone(), closed: self.closed }
    }

    fn segments(&self) -> impl Iterator<Item = (&SpherePoint, &SpherePoint)> {
        let n = self.points.len();
        let count = if self.closed { n } else { n.saturating_sub(1) };
        (0..count).map(move |i| (&self.points[i], &self.points[(i + 1) % n]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitCurve {
    pub plus: Vec<Arc>,
    pub minus: Vec<Arc>,
    /// Nodes lying on the plane within [`BOUNDARY_TOLERANCE`].
    pub boundary_nodes: Vec<usize>,
    pub boundary_hits: Vec<SpherePoint>,
}

/// Cuts `c` by the plane of `spec`. Sign changes between consecutive nodes get
/// an inserted crossing point, located on the trigonometric interpolant and
/// projected onto the plane, so that every open arc ends on the plane.
pub fn split(c: &ParamCurve, spec: &ReflectionSpec) -> SplitCurve {
    let pts = c.points();
    let m = pts.len();
    let v = spec.vector().to_array();
    let class: Vec<i8> = pts
        .iter()
        .map(|p| {
            let s = spec.side(p);
            if s > BOUNDARY_TOLERANCE {
                1
            } else if s < -BOUNDARY_TOLERANCE {
                -1
            } else {
                0
            }
        })
        .collect();
    let boundary_nodes: Vec<usize> = (0..m).filter(|&i| class[i] == 0).collect();
    let boundary_hits = boundary_nodes.iter().map(|&i| pts[i]).collect();

    let start = match (0..m).find(|&i| class[i] != class[(i + m - 1) % m]) {
        Some(s) => s,
        None => {
            let whole = Arc { points: pts.to_vec(), nodes: (0..m).collect(), closed: true };
            let (plus, minus) = match class[0] {
                1 => (vec![whole], vec![]),
                -1 => (vec![], vec![whole]),
                _ => (vec![], vec![]),
            };
            return SplitCurve { plus, minus, boundary_nodes, boundary_hits };
        }
    };

    let interp = c.interpolant();
    let h = TAU / m as f64;
    let crossing = |i: usize| -> SpherePoint {
        let g = |s: f64| {
            let [x, _, _] = interp.eval(s);
            x[0] * v[0] + x[1] * v[1] + x[2] * v[2]
        };
        let (mut lo, mut hi) = (i as f64 * h, (i + 1) as f64 * h);
        let positive_at_lo = class[i] > 0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if (g(mid) > 0.0) == positive_at_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let [x, _, _] = interp.eval(0.5 * (lo + hi));
        let d = x[0] * v[0] + x[1] * v[1] + x[2] * v[2];
        SpherePoint::new(x[0] - d * v[0], x[1] - d * v[1], x[2] - d * v[2]).expect("crossing point")
    };

    let mut arcs: Vec<(i8, Arc)> = Vec::new();
    let mut current: Option<(i8, Arc)> = None;
    let mut pending: Option<SpherePoint> = None;
    for step in 0..m {
        let i = (start + step) % m;
        let next = (i + 1) % m;
        if class[i] == 0 {
            if let Some((sign, mut arc)) = current.take() {
                arc.points.push(pts[i]);
                arcs.push((sign, arc));
            }
            pending = Some(pts[i]);
            continue;
        }
        let (_, arc) = current.get_or_insert_with(|| {
            let mut arc = Arc::open(Vec::new());
            if let Some(p) = pending.take() {
                arc.points.push(p);
            }
            (class[i], arc)
        });
        arc.points.push(pts[i]);
        arc.nodes.push(i);
        if class[next] == -class[i] {
            let q = crossing(i);
            let (sign, mut arc) = current.take().expect("open arc");
            arc.points.push(q);
            arcs.push((sign, arc));
            pending = Some(q);
        }
    }
    if let Some((sign, mut arc)) = current.take() {
        // The loop stopped just before `start`, which is on the plane.
        arc.points.push(pts[start]);
        arcs.push((sign, arc));
    }
    if let (Some(p), Some((_, first))) = (pending, arcs.first_mut()) {
        if class[start] != 0 {
            first.points.insert(0, p);
        }
    }

    let (mut plus, mut minus) = (Vec::new(), Vec::new());
    for (sign, arc) in arcs {
        if sign > 0 {
            plus.push(arc);
        } else {
            minus.push(arc);
        }
    }
    SplitCurve { plus, minus, boundary_nodes, boundary_hits }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiberVerdict {
    AboveStrict,
    AboveWeak,
    Below,
    EmptyFiber,
}

impl FiberVerdict {
    fn from_margin(margin: f64) -> Self {
        if margin > STRICT_MARGIN {
            FiberVerdict::AboveStrict
        } else if margin >= -STRICT_MARGIN {
            FiberVerdict::AboveWeak
        } else {
            FiberVerdict::Below
        }
    }

    fn severity(self) -> u8 {
        match self {
            FiberVerdict::EmptyFiber => 0,
            FiberVerdict::AboveStrict => 1,
            FiberVerdict::AboveWeak => 2,
            FiberVerdict::Below => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberOrderingReport {
    /// Per-fiber verdicts at azimuths `2 pi j / grid`.
    pub fibers: Vec<FiberVerdict>,
    /// `inf` latitude of alpha minus `sup` latitude of beta, where both are present.
    pub margins: Vec<Option<f64>>,
    /// Worst non-empty verdict; `AboveStrict` when every fiber is empty.
    pub verdict: FiberVerdict,
    pub worst_margin: Option<f64>,
    pub worst_fiber: Option<usize>,
}

impl FiberOrderingReport {
    pub fn is_above(&self) -> bool {
        self.verdict != FiberVerdict::Below
    }
}

fn check_upper(points: impl IntoIterator<Item = SpherePoint>) -> Result<()> {
    for p in points {
        if p.z() < -HEMISPHERE_SLACK {
            return Err(Error::LowerHemisphere { z: p.z() });
        }
    }
    Ok(())
}

/// Latitude range `(min, max)` of a piece over each sampled fiber, by linear
/// interpolation in `(theta, phi)` along each segment.
fn fiber_extent(piece: &[Arc], grid: usize) -> Vec<Option<(f64, f64)>> {
    let mut out: Vec<Option<(f64, f64)>> = vec![None; grid];
    let step = TAU / grid as f64;
    for arc in piece {
        for (a, b) in arc.segments() {
            let (pa, pb) = (a.to_polar(), b.to_polar());
            let d = crate::sphere::wrap_difference(pb.theta() - pa.theta());
            let (t0, f0, t1, f1) = if d >= 0.0 {
                (pa.theta(), pa.phi(), pa.theta() + d, pb.phi())
            } else {
                (pb.theta(), pb.phi(), pb.theta() - d, pa.phi())
            };
            let first = ((t0 - 1e-12) / step).ceil() as i64;
            let last = ((t1 + 1e-12) / step).floor() as i64;
            for j in first..=last {
                let (lo, hi) = if t1 > t0 {
                    let s = ((j as f64 * step - t0) / (t1 - t0)).clamp(0.0, 1.0);
                    let phi = f0 + s * (f1 - f0);
                    (phi, phi)
                } else {
                    // A meridian segment covers a latitude interval of its fiber.
                    (f0.min(f1), f0.max(f1))
                };
                let slot = &mut out[j.rem_euclid(grid as i64) as usize];
                *slot = Some(match *slot {
                    Some((mn, mx)) => (mn.min(lo), mx.max(hi)),
                    None => (lo, hi),
                });
            }
        }
    }
    out
}

/// Compares `alpha` above `beta` on `grid` fibers: on each fiber where both
/// pieces are present, the margin is `inf phi(alpha) - sup phi(beta)`.
pub fn fiber_ordering(alpha: &[Arc], beta: &[Arc], grid: usize) -> Result<FiberOrderingReport> {
    for piece in [alpha, beta] {
        check_upper(piece.iter().flat_map(|a| a.points.iter().copied()))?;
    }
    let ea = fiber_extent(alpha, grid);
    let eb = fiber_extent(beta, grid);
    let margins: Vec<Option<f64>> = ea.iter().zip(&eb).map(|(a, b)| Some(a.as_ref()?.0 - b.as_ref()?.1)).collect();
    let fibers: Vec<FiberVerdict> =
        margins.iter().map(|m| m.map_or(FiberVerdict::EmptyFiber, FiberVerdict::from_margin)).collect();
    let worst_fiber = margins
        .iter()
        .enumerate()
        .filter_map(|(j, m)| m.map(|m| (j, m)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(j, _)| j);
    let verdict = fibers
        .iter()
        .copied()
        .max_by_key(|v| v.severity())
        .filter(|v| *v != FiberVerdict::EmptyFiber)
        .unwrap_or(FiberVerdict::AboveStrict);
    Ok(FiberOrderingReport {
        worst_margin: worst_fiber.and_then(|j| margins[j]),
        fibers,
        margins,
        verdict,
        worst_fiber,
    })
}

/// Compares the reflected plus piece `R_V(c^+)` against the minus piece `c^-`
/// for any spec, including horizontal ones and tilts outside `(0, pi/4)`.
pub fn reflection_ordering(c: &ParamCurve, spec: &ReflectionSpec, grid: usize) -> Result<FiberOrderingReport> {
    check_upper(c.points().iter().copied())?;
    let parts = split(c, spec);
    let reflected: Vec<Arc> = parts.plus.iter().map(|a| a.map(|p| spec.reflect(p))).collect();
    fiber_ordering(&reflected, &parts.minus, grid)
}

/// The reflection comparison restricted to tilts `delta in (0, pi/4)`.
pub fn tilted_reflection_predicate(c: &ParamCurve, spec: &ReflectionSpec, grid: usize) -> Result<FiberOrderingReport> {
    let delta = spec.delta();
    if !(delta > 0.0 && delta < FRAC_PI_4) {
        return Err(Error::InvalidDelta { delta, lo: 0.0, hi: FRAC_PI_4 });
    }
    reflection_ordering(c, spec, grid)
}

/// `count` specs with tilt `delta`, horizontal directions `2 pi j / count`.
pub fn sampled_directions(delta: f64, count: usize) -> Result<Vec<ReflectionSpec>> {
    (0..count).map(|j| ReflectionSpec::from_angles(delta, TAU * j as f64 / count as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SymmetryVerdict {
    PoleCircle {
        latitude: f64,
        spread: f64,
    },
    /// The horizontal normal with the largest asymmetry, and that Hausdorff distance.
    NotSymmetric {
        worst_direction: [f64; 3],
        margin: f64,
    },
}

impl SymmetryVerdict {
    pub fn is_pole_circle(&self) -> bool {
        matches!(self, SymmetryVerdict::PoleCircle { .. })
    }
}

/// Tests invariance of `c` under reflection in the vertical planes with
/// normals `(cos psi_j, sin psi_j, 0)`, `psi_j = pi j / grid`. A curve
/// invariant under all of them with constant latitude is a circle about the
/// north pole.
pub fn exact_symmetry_test(c: &ParamCurve, grid: usize) -> SymmetryVerdict {
    let mut worst = (0.0f64, [1.0, 0.0, 0.0]);
    for j in 0..grid.max(1) {
        let psi = PI * j as f64 / grid.max(1) as f64;
        let spec = ReflectionSpec::from_angles(0.0, psi).expect("horizontal spec");
        let image: Vec<SpherePoint> = c.points().iter().map(|p| spec.reflect(p)).collect();
        let d = match ParamCurve::new(image) {
            Ok(image) => hausdorff(&image, c),
            Err(_) => f64::INFINITY,
        };
        if d > worst.0 || j == 0 {
            worst = (d, spec.vector().to_array());
        }
    }
    let latitudes: Vec<f64> = c.points().iter().map(|p| p.to_polar().phi()).collect();
    let lo = latitudes.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = latitudes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if worst.0 < SYMMETRY_TOLERANCE && hi - lo < SPREAD_TOLERANCE {
        let latitude = latitudes.iter().sum::<f64>() / latitudes.len() as f64;
        SymmetryVerdict::PoleCircle { latitude, spread: hi - lo }
    } else {
        SymmetryVerdict::NotSymmetric { worst_direction: worst.1, margin: worst.0.max(hi - lo) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreservationReport {
    pub times: Vec<f64>,
    pub reports: Vec<FiberOrderingReport>,
    /// First state reported `Below` after some earlier state was `AboveStrict`.
    pub violation: Option<usize>,
}

/// Evaluates the reflection predicate at every emitted state of `traj`.
pub fn symmetry_preservation_monitor(
    traj: &Trajectory,
    spec: &ReflectionSpec,
    grid: usize,
) -> Result<PreservationReport> {
    let mut times = Vec::with_capacity(traj.states.len());
    let mut reports = Vec::with_capacity(traj.states.len());
    let mut seen_strict = false;
    let mut violation = None;
    for (i, state) in traj.states.iter().enumerate() {
        let report = tilted_reflection_predicate(&state.curve.to_param()?, spec, grid)?;
        if report.verdict == FiberVerdict::Below && seen_strict && violation.is_none() {
            violation = Some(i);
        }
        seen_strict |= report.verdict == FiberVerdict::AboveStrict;
        times.push(state.t);
        reports.push(report);
    }
    Ok(PreservationReport { times, reports, violation })
}
