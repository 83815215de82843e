#![allow(dead_code)]

use std::f64::consts::PI;

use htm_core::geom::{distance_xyz, latlon_to_xyz, xyz_to_latlon, LatLon, UnitVector, Vec3};
use htm_core::index::{ObjectType, SpatialIndex, SpatialIndexRow};
use htm_core::region::{parse_region, point_in_region, Region};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform on the sphere.
pub fn random_point(rng: &mut impl Rng) -> UnitVector {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).max(0.0).sqrt();
    UnitVector::new_or_x(r * phi.cos(), r * phi.sin(), z)
}

/// Uniform inside the cap of angular radius `radius` (radians) around `c`.
pub fn point_in_cap(rng: &mut impl Rng, c: UnitVector, radius: f64) -> UnitVector {
    let cos_r = radius.cos();
    let z: f64 = rng.gen_range(cos_r..=1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).max(0.0).sqrt();
    // Orthonormal frame around c.
    let a = if c.x().abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
    let u = c.vec().cross(a).normalize().unwrap().vec();
    let w = c.vec().cross(u);
    let v = c.vec() * z + u * (r * phi.cos()) + w * (r * phi.sin());
    UnitVector::new_or_x(v.x, v.y, v.z)
}

pub fn to_latlon(p: UnitVector) -> LatLon {
    xyz_to_latlon(p.x(), p.y(), p.z()).unwrap()
}

#[derive(Debug, Clone)]
pub enum Shape {
    Cap { lat: f64, lon: f64, arcmin: f64 },
    Rect { lat_min: f64, lon_min: f64, lat_max: f64, lon_max: f64 },
    Hull { center: UnitVector, radius: f64, points: Vec<LatLon> },
}

impl Shape {
    pub fn spec(&self) -> String {
        match self {
            Shape::Cap { lat, lon, arcmin } => format!("CIRCLE LATLON {lat} {lon} {arcmin}"),
            Shape::Rect { lat_min, lon_min, lat_max, lon_max } => {
                format!("RECT LATLON {lat_min} {lon_min} {lat_max} {lon_max}")
            }
            Shape::Hull { points, .. } => {
                let mut s = String::from("CHULL LATLON");
                for p in points {
                    s.push_str(&format!(" {} {}", p.lat, p.lon));
                }
                s
            }
        }
    }

    /// A random point of the shape's own extent; may fall just outside for
    /// hulls, callers filter with the region.
    pub fn sample(&self, rng: &mut impl Rng) -> UnitVector {
        match self {
            Shape::Cap { lat, lon, arcmin } => {
                point_in_cap(rng, latlon_to_xyz(LatLon::new(*lat, *lon)), (arcmin / 60.0).to_radians())
            }
            Shape::Rect { lat_min, lon_min, lat_max, lon_max } => {
                let z = rng.gen_range(lat_min.to_radians().sin()..=lat_max.to_radians().sin());
                let lat = z.asin().to_degrees();
                let mut span = lon_max - lon_min;
                if span <= 0.0 {
                    span += 360.0;
                }
                let lon = lon_min + rng.gen_range(0.0..=span);
                latlon_to_xyz(LatLon::new(lat, lon))
            }
            Shape::Hull { center, radius, .. } => point_in_cap(rng, *center, *radius),
        }
    }
}

/// Caps, rects and hulls between roughly 0.1 and 20 degrees across.
pub fn random_shape(rng: &mut impl Rng) -> Shape {
    let scale: f64 = 10f64.powf(rng.gen_range(-1.0..1.3));
    match rng.gen_range(0..3) {
        0 => {
            let c = to_latlon(random_point(rng));
            Shape::Cap { lat: c.lat, lon: c.lon, arcmin: scale * 60.0 }
        }
        1 => {
            let lat0: f64 = rng.gen_range(-75.0..75.0);
            let lon0: f64 = rng.gen_range(-180.0..180.0);
            let h = (scale / 2.0).min(10.0);
            let w = rng.gen_range(0.2..2.0) * scale;
            let lon_max = lon0 + w;
            Shape::Rect {
                lat_min: lat0 - h,
                lon_min: lon0,
                lat_max: lat0 + h,
                lon_max: if lon_max >= 180.0 { lon_max - 360.0 } else { lon_max },
            }
        }
        _ => {
            let center = random_point(rng);
            let radius = scale.to_radians();
            let n = rng.gen_range(3..9);
            let points = (0..n).map(|_| to_latlon(point_in_cap(rng, center, radius))).collect();
            Shape::Hull { center, radius, points }
        }
    }
}

/// A parsed region made of one or two random shapes.
pub struct TestRegion {
    pub spec: String,
    pub region: Region,
    pub shapes: Vec<Shape>,
}

impl TestRegion {
    pub fn random(rng: &mut impl Rng) -> Self {
        loop {
            let n = if rng.gen_bool(0.25) { 2 } else { 1 };
            let shapes: Vec<Shape> = (0..n).map(|_| random_shape(rng)).collect();
            let spec = if n == 1 {
                shapes[0].spec()
            } else {
                format!("REGION {}", shapes.iter().map(Shape::spec).collect::<Vec<_>>().join(" "))
            };
            // Degenerate random hulls are rejected by the parser; draw again.
            if let Ok(region) = parse_region(&spec) {
                return Self { spec, region, shapes };
            }
        }
    }

    /// Up to `n` member points, found by rejection from the shapes' extents.
    pub fn members(&self, rng: &mut impl Rng, n: usize) -> Vec<UnitVector> {
        let mut out = Vec::with_capacity(n);
        let mut tries = 0;
        while out.len() < n && tries < 50 * n {
            tries += 1;
            let s = &self.shapes[rng.gen_range(0..self.shapes.len())];
            let p = s.sample(rng);
            if point_in_region(p, &self.region) {
                out.push(p);
            }
        }
        out
    }
}

/// Uniform synthetic index with `n` places, plus a few co-located stations.
pub fn synthetic_index(seed: u64, n: usize) -> SpatialIndex {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let p = to_latlon(random_point(&mut r));
        let t = if k % 2 == 0 { ObjectType::Place } else { ObjectType::Station };
        rows.push(SpatialIndexRow::new(p.lat, p.lon, t, k as i64));
    }
    SpatialIndex::build(rows).unwrap()
}

pub mod oracle {
    use super::*;
    use htm_core::index::QueryHit;

    fn hit(row: &SpatialIndexRow, d: Option<f64>) -> QueryHit {
        QueryHit {
            obj_id: row.obj_id,
            obj_type: row.obj_type,
            htm_id: row.htm_id,
            lat: row.lat,
            lon: row.lon,
            distance: d.map(htm_core::geom::ArcMinutes),
        }
    }

    fn ranked(idx: &SpatialIndex, t: ObjectType, q: UnitVector) -> Vec<(f64, &SpatialIndexRow)> {
        let mut v: Vec<_> = idx
            .rows()
            .iter()
            .filter(|r| r.obj_type == t)
            .map(|r| (distance_xyz(q, r.position()).value(), r))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.obj_id.cmp(&b.1.obj_id)));
        v
    }

    pub fn nearby(idx: &SpatialIndex, t: ObjectType, q: UnitVector, radius: f64) -> Vec<QueryHit> {
        ranked(idx, t, q)
            .into_iter()
            .filter(|(d, _)| *d < radius)
            .map(|(d, r)| hit(r, Some(d)))
            .collect()
    }

    pub fn nearest(idx: &SpatialIndex, t: ObjectType, q: UnitVector) -> Vec<QueryHit> {
        ranked(idx, t, q).first().map(|(d, r)| hit(r, Some(*d))).into_iter().collect()
    }

    pub fn region(idx: &SpatialIndex, t: ObjectType, region: &Region) -> Vec<QueryHit> {
        let mut v: Vec<_> = idx
            .rows()
            .iter()
            .filter(|r| r.obj_type == t && point_in_region(r.position(), region))
            .map(|r| hit(r, None))
            .collect();
        v.sort_by_key(|h| h.obj_id);
        v
    }
}
