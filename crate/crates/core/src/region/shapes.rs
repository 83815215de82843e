//! Conversion of the grammar's shapes into halfspace form.

use thiserror::Error;

use crate::geom::{arcmin_to_radians, wrap_ra, UnitVector, Vec3, MAX_ARCMIN};

use super::{Convex, Halfspace, Region};

/// Dot-product slack for the hull and polygon side tests.
const SIDE_EPSILON: f64 = 1e-12;

/// Minimum dot product between every point and the point centroid.
const HEMISPHERE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ShapeError(pub String);

fn fail<T>(msg: impl Into<String>) -> Result<T, ShapeError> {
    Err(ShapeError(msg.into()))
}

/// A cap of `radius_arcmin` around `center`.
pub fn circle_to_convex(center: UnitVector, radius_arcmin: f64) -> Result<Convex, ShapeError> {
    if !(radius_arcmin > 0.0 && radius_arcmin <= MAX_ARCMIN) {
        return fail(format!(
            "circle radius {radius_arcmin} must be positive and at most 10800 arc minutes"
        ));
    }
    Ok(Convex::new(vec![Halfspace::new(
        center,
        arcmin_to_radians(radius_arcmin).cos(),
    )]))
}

/// Inward normal of the meridian plane at `lon` for points east of it.
fn east_of(lon_deg: f64) -> Halfspace {
    let (s, c) = lon_deg.to_radians().sin_cos();
    Halfspace::new(UnitVector::new_or_x(-s, c, 0.0), 0.0)
}

fn west_of(lon_deg: f64) -> Halfspace {
    let (s, c) = lon_deg.to_radians().sin_cos();
    Halfspace::new(UnitVector::new_or_x(s, -c, 0.0), 0.0)
}

/// A latitude/longitude box. Longitudes run eastward from `lon_min` to
/// `lon_max` with wrap-around; spans over 180 degrees become two convexes.
pub fn rect_to_region(
    lat_min: f64,
    lon_min: f64,
    lat_max: f64,
    lon_max: f64,
) -> Result<Region, ShapeError> {
    if lat_min >= lat_max {
        return fail(format!(
            "rectangle lat_min {lat_min} must be smaller than lat_max {lat_max}"
        ));
    }
    if lat_min < -90.0 || lat_max > 90.0 {
        return fail("rectangle latitudes must lie between the poles");
    }
    let raw = lon_max - lon_min;
    let mut span = wrap_ra(raw);
    if span == 0.0 {
        if raw == 0.0 {
            return fail("rectangle has zero longitude width");
        }
        span = 360.0;
    }
    let lat_bounds = [
        Halfspace::new(UnitVector::Z, lat_min.to_radians().sin()),
        Halfspace::new(-UnitVector::Z, -lat_max.to_radians().sin()),
    ];
    let wedge = |from: f64, width: f64| {
        let mut hs = lat_bounds.to_vec();
        hs.push(east_of(from));
        hs.push(west_of(from + width));
        Convex::new(hs)
    };
    if span <= 180.0 {
        Ok(Region::new(vec![wedge(lon_min, span)]))
    } else {
        let half = span / 2.0;
        Ok(Region::new(vec![
            wedge(lon_min, half),
            wedge(lon_min + half, half),
        ]))
    }
}

fn dedup_points(points: &[UnitVector]) -> Vec<UnitVector> {
    let mut out: Vec<UnitVector> = Vec::with_capacity(points.len());
    for &p in points {
        if !out.iter().any(|q| q.angle_to(p) < 1e-15) {
            out.push(p);
        }
    }
    out
}

/// Spherical convex hull of three or more points lying in one hemisphere.
/// The result does not depend on the order of `points`.
pub fn chull_to_convex(points: &[UnitVector]) -> Result<Convex, ShapeError> {
    let mut pts = dedup_points(points);
    if pts.len() < 3 {
        return fail("convex hull needs at least three distinct points");
    }
    pts.sort_by(|a, b| {
        a.x()
            .total_cmp(&b.x())
            .then(a.y().total_cmp(&b.y()))
            .then(a.z().total_cmp(&b.z()))
    });
    let sum = pts.iter().fold(Vec3::default(), |acc, p| acc + p.vec());
    let centroid = match sum.normalize() {
        Ok(c) => c,
        Err(_) => return fail("convex hull points are not within a single hemisphere"),
    };
    if pts.iter().any(|p| p.dot(centroid) <= HEMISPHERE_EPSILON) {
        return fail("convex hull points are not within a single hemisphere");
    }

    let mut normals: Vec<UnitVector> = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let Ok(n) = pts[i].vec().cross(pts[j].vec()).normalize() else {
                continue;
            };
            let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                let d = p.dot(n);
                (lo.min(d), hi.max(d))
            });
            let above = lo >= -SIDE_EPSILON;
            let below = hi <= SIDE_EPSILON;
            let n = match (above, below) {
                (true, true) => return fail("convex hull points all lie on one great circle"),
                (true, false) => n,
                (false, true) => -n,
                (false, false) => continue,
            };
            if !normals.iter().any(|m| m.dot(n) > 1.0 - SIDE_EPSILON) {
                normals.push(n);
            }
        }
    }
    Ok(Convex::new(
        normals.into_iter().map(|n| Halfspace::new(n, 0.0)).collect(),
    ))
}

/// Convex spherical polygon with great-circle edges, vertices given in a
/// consistent winding of either sense.
pub fn poly_to_convex(points: &[UnitVector]) -> Result<Convex, ShapeError> {
    let n = points.len();
    if n < 3 {
        return fail("polygon needs at least three points");
    }
    let edge = |i: usize| points[i].vec().cross(points[(i + 1) % n].vec());
    let mut normals = Vec::with_capacity(n);
    for i in 0..n {
        match edge(i).normalize() {
            Ok(e) => normals.push(e),
            Err(_) => return fail("polygon has repeated or antipodal consecutive vertices"),
        }
    }
    let turn = (0..n)
        .map(|i| normals[i].dot(points[(i + 2) % n]))
        .find(|t| t.abs() > SIDE_EPSILON);
    let Some(turn) = turn else {
        return fail("polygon vertices all lie on one great circle");
    };
    let sign = turn.signum();
    let mut hs = Vec::with_capacity(n);
    for (i, e) in normals.iter().enumerate() {
        let inward = if sign > 0.0 { *e } else { -*e };
        let outside = points
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i && k != (i + 1) % n)
            .any(|(_, p)| p.dot(inward) < -SIDE_EPSILON);
        if outside {
            return fail("polygon has a bowtie or is not convex");
        }
        hs.push(Halfspace::new(inward, 0.0));
    }
    Ok(Convex::new(hs))
}
