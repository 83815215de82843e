//! Points on the unit sphere and the three coordinate frames the library
//! speaks: terrestrial latitude/longitude, J2000 equatorial and Cartesian.
//!
//! All angles crossing the public API are in degrees and all distances are in
//! arc minutes (one arc minute of great-circle arc is one nautical mile).

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Vectors shorter than this cannot be normalized.
pub const ZERO_VECTOR_TOLERANCE: f64 = 1e-9;

/// Half a great circle, in arc minutes.
pub const MAX_ARCMIN: f64 = 10_800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeomError {
    #[error("vector is too close to (0, 0, 0) to normalize")]
    ZeroVector,
}

/// Terrestrial coordinates in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    /// Clamps latitude to [-90, 90] and wraps longitude into [-180, 180).
    pub fn new(lat: f64, lon: f64) -> Self {
        Self {
            lat: clamp_latitude(lat),
            lon: wrap_longitude(lon),
        }
    }
}

/// J2000 equatorial coordinates in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equatorial {
    pub ra: f64,
    pub dec: f64,
}

impl Equatorial {
    /// Wraps right ascension into [0, 360) and clamps declination to [-90, 90].
    pub fn new(ra: f64, dec: f64) -> Self {
        Self {
            ra: wrap_ra(ra),
            dec: clamp_latitude(dec),
        }
    }
}

/// Great-circle separation in arc minutes.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ArcMinutes(pub f64);

impl ArcMinutes {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn to_radians(self) -> f64 {
        (self.0 / 60.0).to_radians()
    }
}

/// A 3-vector. Most of the library works with [`UnitVector`]; this is the
/// unnormalized form used for cross products and sums.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalize(self) -> Result<UnitVector, GeomError> {
        UnitVector::try_new(self.x, self.y, self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector(Vec3);

impl UnitVector {
    pub const X: UnitVector = UnitVector(Vec3::new(1.0, 0.0, 0.0));
    pub const Y: UnitVector = UnitVector(Vec3::new(0.0, 1.0, 0.0));
    pub const Z: UnitVector = UnitVector(Vec3::new(0.0, 0.0, 1.0));

    /// Normalizes `(x, y, z)`, rejecting vectors shorter than
    /// [`ZERO_VECTOR_TOLERANCE`].
    ///
    /// Inputs already of unit length within a few ulps are kept bit-for-bit,
    /// so printing and re-parsing a normal vector is a fixed point.
    pub fn try_new(x: f64, y: f64, z: f64) -> Result<Self, GeomError> {
        let v = Vec3::new(x, y, z);
        let n = v.norm();
        if !n.is_finite() || n < ZERO_VECTOR_TOLERANCE {
            return Err(GeomError::ZeroVector);
        }
        if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
            Ok(Self(v))
        } else {
            Ok(Self(v * (1.0 / n)))
        }
    }

    /// Like [`try_new`](Self::try_new) but maps a degenerate vector to
    /// (1, 0, 0), the convention used by the point-keyed functions.
    pub fn new_or_x(x: f64, y: f64, z: f64) -> Self {
        Self::try_new(x, y, z).unwrap_or(Self::X)
    }

    /// Wraps a vector the caller guarantees is already normalized.
    pub(crate) const fn from_normalized(v: Vec3) -> Self {
        Self(v)
    }

    pub fn x(self) -> f64 {
        self.0.x
    }

    pub fn y(self) -> f64 {
        self.0.y
    }

    pub fn z(self) -> f64 {
        self.0.z
    }

    pub fn vec(self) -> Vec3 {
        self.0
    }

    pub fn dot(self, o: UnitVector) -> f64 {
        self.0.dot(o.0)
    }

    /// Angle to `o` in radians, computed with atan2 so it stays accurate for
    /// nearly coincident and nearly antipodal pairs.
    pub fn angle_to(self, o: UnitVector) -> f64 {
        self.0.cross(o.0).norm().atan2(self.0.dot(o.0))
    }

    /// Normalized midpoint of the shorter arc between two non-antipodal points.
    pub fn midpoint(self, o: UnitVector) -> UnitVector {
        let s = self.0 + o.0;
        UnitVector(s * (1.0 / s.norm()))
    }
}

impl Neg for UnitVector {
    type Output = UnitVector;
    fn neg(self) -> UnitVector {
        UnitVector(-self.0)
    }
}

impl From<LatLon> for UnitVector {
    fn from(p: LatLon) -> Self {
        latlon_to_xyz(p)
    }
}

impl From<Equatorial> for UnitVector {
    fn from(p: Equatorial) -> Self {
        eq_to_xyz(p)
    }
}

pub fn clamp_latitude(lat: f64) -> f64 {
    lat.clamp(-90.0, 90.0)
}

/// Wraps into [-180, 180).
pub fn wrap_longitude(lon: f64) -> f64 {
    let w = (lon + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative inputs.
    if w >= 180.0 {
        w - 360.0
    } else {
        w
    }
}

/// Wraps into [0, 360).
pub fn wrap_ra(ra: f64) -> f64 {
    let w = ra.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Sine and cosine of an angle in degrees, exact at multiples of 90.
fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let r = deg % 360.0;
    let q = (r / 90.0).round();
    let (s, c) = (r - 90.0 * q).to_radians().sin_cos();
    // Adding 0.0 turns -0.0 into 0.0.
    match (q as i64).rem_euclid(4) {
        0 => (s + 0.0, c + 0.0),
        1 => (c + 0.0, -s + 0.0),
        2 => (-s + 0.0, -c + 0.0),
        _ => (-c + 0.0, s + 0.0),
    }
}

fn spherical_to_xyz(lat_deg: f64, lon_deg: f64) -> UnitVector {
    let (slat, clat) = sin_cos_deg(clamp_latitude(lat_deg));
    let (slon, clon) = sin_cos_deg(lon_deg);
    let v = Vec3::new(clat * clon, clat * slon, slat);
    // sin/cos of a clamped angle can miss unit length by an ulp or two.
    let n = v.norm();
    if n == 1.0 {
        UnitVector(v)
    } else {
        UnitVector(v * (1.0 / n))
    }
}

/// Returns (latitude, longitude) in degrees with longitude in (-180, 180].
fn xyz_to_spherical(v: Vec3) -> Result<(f64, f64), GeomError> {
    let u = UnitVector::try_new(v.x, v.y, v.z)?.0;
    let rho = u.x.hypot(u.y);
    let lat = u.z.atan2(rho).to_degrees();
    let lon = if rho == 0.0 {
        0.0
    } else {
        u.y.atan2(u.x).to_degrees()
    };
    Ok((lat, lon))
}

pub fn latlon_to_xyz(p: LatLon) -> UnitVector {
    spherical_to_xyz(p.lat, p.lon)
}

pub fn eq_to_xyz(p: Equatorial) -> UnitVector {
    spherical_to_xyz(p.dec, p.ra)
}

/// Inverse of [`latlon_to_xyz`]. The input need not be normalized; at the
/// poles the longitude is reported as 0.
pub fn xyz_to_latlon(x: f64, y: f64, z: f64) -> Result<LatLon, GeomError> {
    let (lat, lon) = xyz_to_spherical(Vec3::new(x, y, z))?;
    Ok(LatLon::new(lat, lon))
}

pub fn xyz_to_eq(x: f64, y: f64, z: f64) -> Result<Equatorial, GeomError> {
    let (dec, ra) = xyz_to_spherical(Vec3::new(x, y, z))?;
    Ok(Equatorial::new(ra, dec))
}

/// Converts an angle in radians to arc minutes.
pub fn radians_to_arcmin(rad: f64) -> f64 {
    rad.to_degrees() * 60.0
}

pub fn arcmin_to_radians(arcmin: f64) -> f64 {
    (arcmin / 60.0).to_radians()
}

/// Great-circle distance between two unit vectors, the arc whose cosine is
/// `a.b`. Computed as `atan2(|a x b|, a.b)`, which stays accurate near 0 and
/// 10800 where `acos` loses half its digits.
pub fn distance_xyz(a: UnitVector, b: UnitVector) -> ArcMinutes {
    ArcMinutes(radians_to_arcmin(a.angle_to(b)).clamp(0.0, MAX_ARCMIN))
}

/// Distance between two raw Cartesian vectors, normalizing both first.
pub fn distance_raw_xyz(a: (f64, f64, f64), b: (f64, f64, f64)) -> Result<ArcMinutes, GeomError> {
    let a = UnitVector::try_new(a.0, a.1, a.2)?;
    let b = UnitVector::try_new(b.0, b.1, b.2)?;
    Ok(distance_xyz(a, b))
}

pub fn distance_latlon(a: LatLon, b: LatLon) -> ArcMinutes {
    distance_xyz(latlon_to_xyz(a), latlon_to_xyz(b))
}

pub fn distance_eq(a: Equatorial, b: Equatorial) -> ArcMinutes {
    distance_xyz(eq_to_xyz(a), eq_to_xyz(b))
}
