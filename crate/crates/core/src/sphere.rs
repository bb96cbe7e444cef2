//! Primitive geometry of the unit sphere.
//!
//! Latitude is measured from the equator: `phi = 0` on `{z = 0}` and
//! `phi = pi/2` at the north pole. Every module in the crate shares this
//! convention.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points closer than this (in `1 - |z|`) to a pole have no unique equator projection.
pub const POLE_TOLERANCE: f64 = 1e-9;

const UNIT_TOLERANCE: f64 = 1e-12;

/// A point of the unit sphere, stored as a unit vector of R^3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    x: f64,
    y: f64,
    z: f64,
}

impl SpherePoint {
    pub const NORTH: SpherePoint = SpherePoint { x: 0.0, y: 0.0, z: 1.0 };
    pub const SOUTH: SpherePoint = SpherePoint { x: 0.0, y: 0.0, z: -1.0 };

    /// Normalizes `(x, y, z)` onto the sphere. Returns `None` for the zero
    /// vector or non-finite input.
    pub fn new(x: f64, y: f64, z: f64) -> Option<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return None;
        }
        Some(Self { x: x / norm, y: y / norm, z: z / norm })
    }

    /// Accepts an already-unit vector, rejecting anything off the sphere.
    pub fn from_unit(v: [f64; 3]) -> Result<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !((norm - 1.0).abs() <= UNIT_TOLERANCE) {
            return Err(Error::NonUnitVector { norm });
        }
        Ok(Self { x: v[0] / norm, y: v[1] / norm, z: v[2] / norm })
    }

    pub(crate) fn from_vec(v: [f64; 3]) -> Option<Self> {
        Self::new(v[0], v[1], v[2])
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Great-circle distance, computed with `atan2` so it stays accurate for
    /// nearby and nearly antipodal points alike.
    pub fn distance(&self, other: &SpherePoint) -> f64 {
        let c = cross(self.to_array(), other.to_array());
        norm(c).atan2(self.dot(other))
    }

    pub fn negate(&self) -> SpherePoint {
        SpherePoint { x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn to_polar(&self) -> PolarCoord {
        cartesian_to_polar(self)
    }
}

/// Azimuth-latitude coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarCoord {
    theta: f64,
    phi: f64,
}

impl PolarCoord {
    /// Builds a coordinate pair, wrapping `theta` into `[0, 2pi)`. Latitudes
    /// outside `[-pi/2, pi/2]` are rejected.
    pub fn new(theta: f64, phi: f64) -> Option<Self> {
        if !theta.is_finite() || !phi.is_finite() || phi.abs() > FRAC_PI_2 {
            return None;
        }
        Some(Self { theta: wrap_angle(theta), phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Wraps an angle difference into `(-pi, pi]`.
pub fn wrap_difference(d: f64) -> f64 {
    let w = (d + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

pub fn polar_to_cartesian(p: PolarCoord) -> SpherePoint {
    let (st, ct) = p.theta.sin_cos();
    let (sp, cp) = p.phi.sin_cos();
    SpherePoint { x: cp * ct, y: cp * st, z: sp }
}

/// Inverse of [`polar_to_cartesian`]. At the poles the azimuth is reported as 0.
pub fn cartesian_to_polar(p: &SpherePoint) -> PolarCoord {
    let rho = p.x.hypot(p.y);
    let phi = p.z.atan2(rho);
    let theta = if rho == 0.0 { 0.0 } else { wrap_angle(p.y.atan2(p.x)) };
    PolarCoord { theta, phi }
}

/// Point at azimuth `theta` and latitude `phi`.
pub fn point_at(theta: f64, phi: f64) -> SpherePoint {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    SpherePoint { x: cp * ct, y: cp * st, z: sp }
}

/// Angle between a unit vector and the plane `{z = 0}`, for vectors pointing
/// into the closed lower half-space.
pub fn tilt_angle(v: [f64; 3]) -> Result<f64> {
    let n = norm(v);
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::NonUnitVector { norm: n });
    }
    if v[2] > 0.0 {
        return Err(Error::WrongHemisphere { dot: v[2] });
    }
    Ok((-v[2]).clamp(0.0, 1.0).asin())
}

/// Nearest point of the equator to `x` together with the distance `rho(X) = arcsin|z|`.
pub fn equator_projection(x: &SpherePoint) -> Result<(SpherePoint, f64)> {
    if x.z.abs() >= 1.0 - POLE_TOLERANCE {
        return Err(Error::PoleProjection);
    }
    let foot = SpherePoint::new(x.x, x.y, 0.0).ok_or(Error::PoleProjection)?;
    Ok((foot, x.z.abs().asin()))
}

/// A reflection `R(X) = X - 2<X, V>V` across the plane through the origin with
/// unit normal `V`. The tilt angle is derived from `V` on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionSpec {
    v: SpherePoint,
}

impl ReflectionSpec {
    /// A tilted spec: `V` must point strictly below the equatorial plane.
    pub fn tilted(v: [f64; 3]) -> Result<Self> {
        let v = SpherePoint::from_unit(v)?;
        if v.z >= 0.0 {
            return Err(Error::WrongHemisphere { dot: v.z });
        }
        Ok(Self { v })
    }

    /// A horizontal spec (`delta = 0`), reflecting across a vertical plane.
    pub fn horizontal(v: [f64; 3]) -> Result<Self> {
        let v = SpherePoint::from_unit(v)?;
        if v.z.abs() > UNIT_TOLERANCE {
            return Err(Error::WrongHemisphere { dot: v.z });
        }
        Ok(Self { v: SpherePoint { z: 0.0, ..v } })
    }

    /// `V = (cos d cos psi, cos d sin psi, -sin d)`: tilt `delta` below the
    /// equatorial plane, horizontal direction `psi`. `delta = 0` gives a
    /// horizontal spec.
    pub fn from_angles(delta: f64, psi: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_2).contains(&delta) {
            return Err(Error::InvalidDelta { delta, lo: 0.0, hi: FRAC_PI_2 });
        }
        let (sd, cd) = delta.sin_cos();
        let (sp, cp) = psi.sin_cos();
        let v = SpherePoint { x: cd * cp, y: cd * sp, z: -sd };
        Ok(Self { v })
    }

    pub fn vector(&self) -> SpherePoint {
        self.v
    }

    pub fn delta(&self) -> f64 {
        (-self.v.z).clamp(0.0, 1.0).asin()
    }

    /// Signed value of `<X, V>`; positive on `H^+`.
    pub fn side(&self, x: &SpherePoint) -> f64 {
        x.dot(&self.v)
    }

    pub fn in_plus(&self, x: &SpherePoint) -> bool {
        self.side(x) > 0.0
    }

    pub fn in_minus(&self, x: &SpherePoint) -> bool {
        self.side(x) < 0.0
    }

    pub fn reflect(&self, x: &SpherePoint) -> SpherePoint {
        reflect(self, x)
    }

    /// The spec with normal `-V`: same mirror plane, sides swapped.
    pub fn opposite(&self) -> ReflectionSpec {
        Self { v: self.v.negate() }
    }
}

pub fn reflect(spec: &ReflectionSpec, x: &SpherePoint) -> SpherePoint {
    let s = 2.0 * x.dot(&spec.v);
    let r = [x.x - s * spec.v.x, x.y - s * spec.v.y, x.z - s * spec.v.z];
    // R is orthogonal; renormalizing only removes rounding drift.
    SpherePoint::from_vec(r).expect("reflection of a unit vector is a unit vector")
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn close(a: SpherePoint, b: [f64; 3], tol: f64) -> bool {
        (a.x - b[0]).abs() < tol && (a.y - b[1]).abs() < tol && (a.z - b[2]).abs() < tol
    }

    #[test]
    fn polar_axis_points() {
        let p = |t, f| polar_to_cartesian(PolarCoord::new(t, f).unwrap());
        assert!(close(p(0.0, 0.0), [1.0, 0.0, 0.0], 1e-15));
        assert!(close(p(FRAC_PI_2, 0.0), [0.0, 1.0, 0.0], 1e-15));
        assert!(close(p(0.0, FRAC_PI_2), [0.0, 0.0, 1.0], 1e-15));
    }

    #[test]
    fn polar_rejects_bad_latitude() {
        assert!(PolarCoord::new(0.0, 1.6).is_none());
        assert_eq!(PolarCoord::new(-0.5, 0.1).unwrap().theta(), TAU - 0.5);
    }

    #[test]
    fn reflection_examples() {
        let spec = ReflectionSpec::tilted([0.0, 0.0, -1.0]).unwrap();
        assert!(close(spec.reflect(&SpherePoint::NORTH), [0.0, 0.0, -1.0], 1e-15));

        let spec = ReflectionSpec::from_angles(0.3, 1.1).unwrap();
        let v = spec.vector();
        assert!(close(spec.reflect(&v), v.negate().to_array(), 1e-15));

        // A point on the plane is fixed.
        let w = cross(v.to_array(), [0.0, 0.0, 1.0]);
        let on_plane = SpherePoint::from_vec(w).unwrap();
        assert!(spec.side(&on_plane).abs() < 1e-15);
        assert!(close(spec.reflect(&on_plane), on_plane.to_array(), 1e-15));
    }

    #[test]
    fn tilt_angle_examples() {
        assert_eq!(tilt_angle([1.0, 0.0, 0.0]).unwrap(), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((tilt_angle([h, 0.0, -h]).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert!((tilt_angle([0.0, 0.0, -1.0]).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!(matches!(tilt_angle([0.0, 0.6, 0.8]), Err(Error::WrongHemisphere { .. })));
        assert!(matches!(tilt_angle([0.0, 0.0, -2.0]), Err(Error::NonUnitVector { .. })));
    }

    #[test]
    fn tilted_constructor_rules() {
        assert!(ReflectionSpec::tilted([1.0, 0.0, 0.0]).is_err());
        assert!(ReflectionSpec::horizontal([1.0, 0.0, 0.0]).is_ok());
        let s = ReflectionSpec::from_angles(0.2, 0.0).unwrap();
        assert!((s.delta() - 0.2).abs() < 1e-15);
        assert_eq!(ReflectionSpec::from_angles(0.0, 0.4).unwrap().delta(), 0.0);
    }

    #[test]
    fn equator_projection_examples() {
        let (foot, rho) = equator_projection(&SpherePoint::new(0.0, 1.0, 0.0).unwrap()).unwrap();
        assert!(close(foot, [0.0, 1.0, 0.0], 1e-15));
        assert_eq!(rho, 0.0);

        let x = SpherePoint::new(0.3f64.cos(), 0.0, 0.3f64.sin()).unwrap();
        let (foot, rho) = equator_projection(&x).unwrap();
        assert!(close(foot, [1.0, 0.0, 0.0], 1e-15));
        assert!((rho - 0.3).abs() < 1e-15);

        assert_eq!(equator_projection(&SpherePoint::NORTH), Err(Error::PoleProjection));
    }

    #[test]
    fn wrap_difference_range() {
        assert!((wrap_difference(3.5 * PI) + 0.5 * PI).abs() < 1e-12);
        assert_eq!(wrap_difference(PI), PI);
        assert_eq!(wrap_difference(-PI), PI);
    }
}
