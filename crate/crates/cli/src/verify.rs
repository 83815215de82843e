//! Linear-scan answers used by `query --verify` to check the indexed ones.

use htm_core::geom::{distance_xyz, latlon_to_xyz, LatLon};
use htm_core::index::{ObjectType, QueryHit, SpatialIndex, SpatialIndexRow};
use htm_core::region::{point_in_region, Region};

fn hit(row: &SpatialIndexRow, distance: Option<f64>) -> QueryHit {
    QueryHit {
        obj_id: row.obj_id,
        obj_type: row.obj_type,
        htm_id: row.htm_id,
        lat: row.lat,
        lon: row.lon,
        distance: distance.map(htm_core::geom::ArcMinutes),
    }
}

fn with_distances(index: &SpatialIndex, t: ObjectType, lat: f64, lon: f64) -> Vec<(f64, &SpatialIndexRow)> {
    let q = latlon_to_xyz(LatLon::new(lat, lon));
    index
        .rows()
        .iter()
        .filter(|r| r.obj_type == t)
        .map(|r| (distance_xyz(q, r.position()).value(), r))
        .collect()
}

fn sort_by_distance(v: &mut [(f64, &SpatialIndexRow)]) {
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.obj_id.cmp(&b.1.obj_id)).then(a.1.htm_id.cmp(&b.1.htm_id)));
}

pub fn nearby(index: &SpatialIndex, t: ObjectType, lat: f64, lon: f64, radius: f64) -> Vec<QueryHit> {
    let mut v = with_distances(index, t, lat, lon);
    v.retain(|(d, _)| *d < radius);
    sort_by_distance(&mut v);
    v.iter().map(|(d, r)| hit(r, Some(*d))).collect()
}

pub fn nearest(index: &SpatialIndex, t: ObjectType, lat: f64, lon: f64) -> Vec<QueryHit> {
    let mut v = with_distances(index, t, lat, lon);
    sort_by_distance(&mut v);
    v.first().map(|(d, r)| hit(r, Some(*d))).into_iter().collect()
}

pub fn region(index: &SpatialIndex, t: ObjectType, region: &Region) -> Vec<QueryHit> {
    let mut v: Vec<QueryHit> = index
        .rows()
        .iter()
        .filter(|r| r.obj_type == t && point_in_region(r.position(), region))
        .map(|r| hit(r, None))
        .collect();
    v.sort_by(|a, b| a.obj_id.cmp(&b.obj_id).then(a.htm_id.cmp(&b.htm_id)));
    v
}

/// Describes the first difference, if any.
pub fn compare(got: &[QueryHit], expect: &[QueryHit]) -> Option<String> {
    if got.len() != expect.len() {
        return Some(format!("{} rows, expected {}", got.len(), expect.len()));
    }
    got.iter()
        .zip(expect)
        .position(|(a, b)| a != b)
        .map(|i| format!("row {i} is objid {}, expected {}", got[i].obj_id, expect[i].obj_id))
}
