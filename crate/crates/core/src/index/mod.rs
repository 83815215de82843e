//! The spatial index: point objects ordered by (HtmId, ObjId), queried with a
//! coarse range scan over a trixel cover followed by an exact geometric test.

mod ingest;
mod store;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::cover::{cover_circle_xyz, cover_region, CoverBudget, CoverError, TrixelRange};
use crate::geom::{distance_xyz, latlon_to_xyz, ArcMinutes, LatLon, UnitVector, MAX_ARCMIN};
use crate::mesh::{leaf_range, lookup_xyz, HtmId, MeshError, DEFAULT_DEPTH};
use crate::region::{normalize_region, parse_region, point_in_region, Region, RegionError};

pub use ingest::{ingest_places, ingest_stations, read_places, read_stations, PlaceRecord, StationRecord};
pub use store::{FORMAT_VERSION, MAGIC};

/// First search radius of [`SpatialIndex::nearest_latlon`], in arc minutes.
pub const NEAREST_START_RADIUS: f64 = 10.0;
const NEAREST_GROWTH: f64 = 4.0;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("duplicate index key (htmid {htm_id}, objid {obj_id})")]
    DuplicateKey { htm_id: u64, obj_id: i64 },
    #[error("index invariant violated: {0}")]
    InvariantViolation(String),
    #[error("bad record on line {line}: {message}")]
    BadRecord { line: u64, message: String },
    #[error("unknown object type {0:?}")]
    UnknownType(String),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("corrupt index file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Kind of object stored in the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObjectType {
    /// A populated place, code `P`.
    Place,
    /// A stream-gauge station, code `S`.
    Station,
}

impl ObjectType {
    pub fn code(self) -> char {
        match self {
            ObjectType::Place => 'P',
            ObjectType::Station => 'S',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'P' => Some(ObjectType::Place),
            'S' => Some(ObjectType::Station),
            _ => None,
        }
    }

    fn slot(self) -> usize {
        match self {
            ObjectType::Place => 0,
            ObjectType::Station => 1,
        }
    }
}

impl fmt::Display for ObjectType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl FromStr for ObjectType {
    type Err = IndexError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Self::from_code(c).ok_or_else(|| IndexError::UnknownType(s.into())),
            _ => Err(IndexError::UnknownType(s.into())),
        }
    }
}

/// One indexed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialIndexRow {
    pub htm_id: HtmId,
    pub lat: f64,
    pub lon: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub obj_type: ObjectType,
    pub obj_id: i64,
}

impl SpatialIndexRow {
    /// Derives the key and Cartesian position from `lat`/`lon`.
    pub fn new(lat: f64, lon: f64, obj_type: ObjectType, obj_id: i64) -> Self {
        let p = LatLon::new(lat, lon);
        let v = latlon_to_xyz(p);
        let htm_id = lookup_xyz(v, DEFAULT_DEPTH).expect("default depth is valid");
        Self {
            htm_id,
            lat: p.lat,
            lon: p.lon,
            x: v.x(),
            y: v.y(),
            z: v.z(),
            obj_type,
            obj_id,
        }
    }

    pub fn position(&self) -> UnitVector {
        UnitVector::new_or_x(self.x, self.y, self.z)
    }

    fn key(&self) -> (HtmId, i64) {
        (self.htm_id, self.obj_id)
    }

    fn check(&self) -> Result<(), IndexError> {
        let expect = latlon_to_xyz(LatLon::new(self.lat, self.lon));
        let off = (expect.x() - self.x)
            .abs()
            .max((expect.y() - self.y).abs())
            .max((expect.z() - self.z).abs());
        if off > 1e-12 {
            return Err(IndexError::InvariantViolation(format!(
                "objid {} position does not match lat/lon",
                self.obj_id
            )));
        }
        let key = lookup_xyz(expect, DEFAULT_DEPTH)?;
        if key != self.htm_id {
            return Err(IndexError::InvariantViolation(format!(
                "objid {} stored htmid {} but its position maps to {}",
                self.obj_id,
                self.htm_id.raw(),
                key.raw()
            )));
        }
        Ok(())
    }
}

/// A query result row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryHit {
    pub obj_id: i64,
    pub obj_type: ObjectType,
    pub htm_id: HtmId,
    pub lat: f64,
    pub lon: f64,
    /// Distance from the query point, for point queries.
    pub distance: Option<ArcMinutes>,
}

impl QueryHit {
    fn from_row(row: &SpatialIndexRow, distance: Option<ArcMinutes>) -> Self {
        Self {
            obj_id: row.obj_id,
            obj_type: row.obj_type,
            htm_id: row.htm_id,
            lat: row.lat,
            lon: row.lon,
            distance,
        }
    }
}

/// Row counts of the two query phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FalsePositiveStats {
    pub coarse: usize,
    pub careful: usize,
}

impl FalsePositiveStats {
    /// (coarse - careful) / coarse, or 0 for an empty coarse phase.
    pub fn ratio(&self) -> f64 {
        if self.coarse == 0 {
            0.0
        } else {
            (self.coarse - self.careful) as f64 / self.coarse as f64
        }
    }
}

/// Immutable in-memory index sorted by (HtmId, ObjId).
#[derive(Debug, Clone, Default)]
pub struct SpatialIndex {
    rows: Vec<SpatialIndexRow>,
    // Positions into `rows` for each object type, in key order.
    by_type: [Vec<u32>; 2],
}

/// The depth-21 key interval covered by a range of any leaf depth.
fn key_bounds(r: &TrixelRange) -> (HtmId, HtmId) {
    if r.start.depth() <= DEFAULT_DEPTH {
        let start = leaf_range(r.start, DEFAULT_DEPTH).expect("shallower than key depth").0;
        let end = leaf_range(r.end, DEFAULT_DEPTH).expect("shallower than key depth").1;
        (start, end)
    } else {
        (r.start.ancestor(DEFAULT_DEPTH), r.end.ancestor(DEFAULT_DEPTH))
    }
}

/// Orders hits by distance, then objid.
fn by_distance(a: &QueryHit, b: &QueryHit) -> std::cmp::Ordering {
    let da = a.distance.map_or(0.0, ArcMinutes::value);
    let db = b.distance.map_or(0.0, ArcMinutes::value);
    da.total_cmp(&db)
        .then(a.obj_id.cmp(&b.obj_id))
        .then(a.htm_id.cmp(&b.htm_id))
}

impl SpatialIndex {
    /// Sorts `rows` and checks every row's key and position.
    pub fn build(mut rows: Vec<SpatialIndexRow>) -> Result<Self, IndexError> {
        for r in &rows {
            r.check()?;
        }
        rows.sort_by_key(SpatialIndexRow::key);
        if let Some(w) = rows.windows(2).find(|w| w[0].key() == w[1].key()) {
            return Err(IndexError::DuplicateKey {
                htm_id: w[0].htm_id.raw(),
                obj_id: w[0].obj_id,
            });
        }
        if rows.len() > u32::MAX as usize {
            return Err(IndexError::InvariantViolation("too many rows".into()));
        }
        let mut by_type: [Vec<u32>; 2] = Default::default();
        for (i, r) in rows.iter().enumerate() {
            by_type[r.obj_type.slot()].push(i as u32);
        }
        Ok(Self { rows, by_type })
    }

    /// All rows in key order.
    pub fn rows(&self) -> &[SpatialIndexRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn count(&self, obj_type: ObjectType) -> usize {
        self.by_type[obj_type.slot()].len()
    }

    fn scan(&self, start: HtmId, end: HtmId, obj_type: ObjectType) -> impl Iterator<Item = &SpatialIndexRow> + '_ {
        let slots = &self.by_type[obj_type.slot()];
        let lo = slots.partition_point(|&i| self.rows[i as usize].htm_id < start);
        let hi = slots.partition_point(|&i| self.rows[i as usize].htm_id <= end);
        slots[lo..hi.max(lo)].iter().map(move |&i| &self.rows[i as usize])
    }

    /// Rows of `obj_type` with `start <= htmid <= end`, in key order.
    pub fn range_scan(&self, start: HtmId, end: HtmId, obj_type: ObjectType) -> Vec<SpatialIndexRow> {
        self.scan(start, end, obj_type).copied().collect()
    }

    /// Coarse phase: every row of the type inside the cover. The cover may be
    /// expressed at any leaf depth; ranges are mapped onto the key depth.
    pub fn coarse<'a>(
        &'a self,
        cover: &'a [TrixelRange],
        obj_type: ObjectType,
    ) -> impl Iterator<Item = &'a SpatialIndexRow> + 'a {
        cover.iter().flat_map(move |r| {
            let (start, end) = key_bounds(r);
            self.scan(start, end, obj_type)
        })
    }

    /// Objects strictly closer than `radius` arc minutes, nearest first.
    pub fn nearby_latlon(
        &self,
        obj_type: ObjectType,
        lat: f64,
        lon: f64,
        radius: f64,
        budget: &CoverBudget,
    ) -> Vec<QueryHit> {
        self.nearby_with_stats(obj_type, LatLon::new(lat, lon).into(), radius, budget).0
    }

    pub fn nearby_xyz(&self, obj_type: ObjectType, center: UnitVector, radius: f64, budget: &CoverBudget) -> Vec<QueryHit> {
        self.nearby_with_stats(obj_type, center, radius, budget).0
    }

    fn nearby_with_stats(
        &self,
        obj_type: ObjectType,
        center: UnitVector,
        radius: f64,
        budget: &CoverBudget,
    ) -> (Vec<QueryHit>, FalsePositiveStats) {
        let cover = cover_circle_xyz(center, radius, budget);
        let mut coarse = 0;
        let mut hits: Vec<QueryHit> = self
            .coarse(&cover, obj_type)
            .filter_map(|row| {
                coarse += 1;
                let d = distance_xyz(center, row.position());
                (d.value() < radius).then(|| QueryHit::from_row(row, Some(d)))
            })
            .collect();
        hits.sort_by(by_distance);
        let careful = hits.len();
        (hits, FalsePositiveStats { coarse, careful })
    }

    /// The single closest object of the type, ties broken by objid; empty
    /// only when the index holds no object of that type.
    pub fn nearest_latlon(&self, obj_type: ObjectType, lat: f64, lon: f64, budget: &CoverBudget) -> Vec<QueryHit> {
        self.nearest_xyz(obj_type, LatLon::new(lat, lon).into(), budget)
    }

    pub fn nearest_xyz(&self, obj_type: ObjectType, center: UnitVector, budget: &CoverBudget) -> Vec<QueryHit> {
        if self.count(obj_type) == 0 {
            return Vec::new();
        }
        let mut radius = NEAREST_START_RADIUS;
        loop {
            // Everything within `radius` lies in the cover, so the closest
            // candidate within `radius` is the global nearest.
            let cover = cover_circle_xyz(center, radius, budget);
            let best = self
                .coarse(&cover, obj_type)
                .filter_map(|row| {
                    let d = distance_xyz(center, row.position());
                    (d.value() <= radius).then(|| QueryHit::from_row(row, Some(d)))
                })
                .min_by(by_distance);
            if let Some(hit) = best {
                return vec![hit];
            }
            if radius >= MAX_ARCMIN {
                return Vec::new();
            }
            radius = (radius * NEAREST_GROWTH).min(MAX_ARCMIN);
        }
    }

    /// Objects of the type inside the region, ordered by objid.
    pub fn region_objects(&self, spec: &str, obj_type: ObjectType, budget: &CoverBudget) -> Result<Vec<QueryHit>, IndexError> {
        let region = parse_region(spec)?;
        Ok(self.region_objects_in(&region, obj_type, budget).0)
    }

    pub fn region_objects_in(
        &self,
        region: &Region,
        obj_type: ObjectType,
        budget: &CoverBudget,
    ) -> (Vec<QueryHit>, FalsePositiveStats) {
        let cover = cover_region(&normalize_region(region), budget);
        let mut coarse = 0;
        let mut hits: Vec<QueryHit> = self
            .coarse(&cover, obj_type)
            .filter_map(|row| {
                coarse += 1;
                point_in_region(row.position(), region).then(|| QueryHit::from_row(row, None))
            })
            .collect();
        hits.sort_by(|a, b| a.obj_id.cmp(&b.obj_id).then(a.htm_id.cmp(&b.htm_id)));
        let careful = hits.len();
        (hits, FalsePositiveStats { coarse, careful })
    }

    pub fn false_positive_stats(
        &self,
        spec: &str,
        obj_type: ObjectType,
        budget: &CoverBudget,
    ) -> Result<FalsePositiveStats, IndexError> {
        let region = parse_region(spec)?;
        Ok(self.region_objects_in(&region, obj_type, budget).1)
    }

    /// Coarse and careful counts of a nearby query.
    pub fn nearby_stats(&self, obj_type: ObjectType, lat: f64, lon: f64, radius: f64, budget: &CoverBudget) -> FalsePositiveStats {
        self.nearby_with_stats(obj_type, LatLon::new(lat, lon).into(), radius, budget).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(rows: Vec<SpatialIndexRow>) -> SpatialIndex {
        SpatialIndex::build(rows).unwrap()
    }

    #[test]
    fn empty_index_answers_nothing() {
        let i = SpatialIndex::default();
        let b = CoverBudget::default();
        assert!(i.nearby_latlon(ObjectType::Place, 0.0, 0.0, 100.0, &b).is_empty());
        assert!(i.nearest_latlon(ObjectType::Place, 0.0, 0.0, &b).is_empty());
        assert!(i.region_objects("CONVEX", ObjectType::Place, &b).unwrap().is_empty());
    }

    #[test]
    fn colocated_objects_are_distinct() {
        let rows = (0..18).map(|k| SpatialIndexRow::new(40.0, -105.0, ObjectType::Station, 1000 + k)).collect();
        let i = idx(rows);
        assert_eq!(i.len(), 18);
        let hits = i.nearby_latlon(ObjectType::Station, 40.0, -105.0, 1.0, &CoverBudget::default());
        assert_eq!(hits.len(), 18);
        assert!(hits.windows(2).all(|w| w[0].obj_id < w[1].obj_id));
    }

    #[test]
    fn duplicate_keys_rejected() {
        let r = SpatialIndexRow::new(1.0, 2.0, ObjectType::Place, 7);
        assert!(matches!(SpatialIndex::build(vec![r, r]), Err(IndexError::DuplicateKey { .. })));
    }

    #[test]
    fn tampered_rows_rejected() {
        let mut r = SpatialIndexRow::new(1.0, 2.0, ObjectType::Place, 7);
        r.lat = 1.5;
        assert!(matches!(SpatialIndex::build(vec![r]), Err(IndexError::InvariantViolation(_))));
        let mut r = SpatialIndexRow::new(1.0, 2.0, ObjectType::Place, 7);
        r.htm_id = HtmId::new(r.htm_id.raw() ^ 1).unwrap();
        assert!(matches!(SpatialIndex::build(vec![r]), Err(IndexError::InvariantViolation(_))));
    }

    #[test]
    fn rows_sorted_by_key() {
        let rows = vec![
            SpatialIndexRow::new(10.0, 10.0, ObjectType::Place, 3),
            SpatialIndexRow::new(-10.0, 10.0, ObjectType::Station, 2),
            SpatialIndexRow::new(10.0, 10.0, ObjectType::Station, 1),
        ];
        let i = idx(rows);
        let keys: Vec<_> = i.rows().iter().map(|r| (r.htm_id, r.obj_id)).collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn range_scan_bounds() {
        let rows = vec![
            SpatialIndexRow::new(10.0, 10.0, ObjectType::Place, 3),
            SpatialIndexRow::new(-10.0, 10.0, ObjectType::Place, 2),
            SpatialIndexRow::new(-10.0, 10.0, ObjectType::Station, 9),
        ];
        let i = idx(rows);
        let lo = HtmId::new(8 << 40).unwrap();
        let hi = HtmId::new((16u64 << 40) - 1).unwrap();
        assert_eq!(i.range_scan(lo, hi, ObjectType::Place).len(), 2);
        let k = i.rows()[0].htm_id;
        let exact = i.range_scan(k, k, i.rows()[0].obj_type);
        assert_eq!(exact[0], i.rows()[0]);
    }

    #[test]
    fn strict_nearby_radius() {
        let a = SpatialIndexRow::new(0.0, 0.0, ObjectType::Place, 1);
        let b = SpatialIndexRow::new(0.0, 1.0, ObjectType::Place, 2);
        let i = idx(vec![a, b]);
        let d = distance_xyz(a.position(), b.position()).value();
        let budget = CoverBudget::default();
        let hits = i.nearby_latlon(ObjectType::Place, 0.0, 0.0, d, &budget);
        assert_eq!(hits.len(), 1);
        let hits = i.nearby_latlon(ObjectType::Place, 0.0, 0.0, d * 0.999, &budget);
        assert!(hits.iter().all(|h| h.obj_id == 1));
        let hits = i.nearby_latlon(ObjectType::Place, 0.0, 0.0, d * 1.001, &budget);
        assert_eq!(hits.len(), 2);
    }

    #[test]
    fn nearest_singleton_far_away() {
        let i = idx(vec![SpatialIndexRow::new(-45.0, 170.0, ObjectType::Station, 5)]);
        let hit = i.nearest_latlon(ObjectType::Station, 45.0, -10.0, &CoverBudget::default());
        assert_eq!(hit.len(), 1);
        assert_eq!(hit[0].obj_id, 5);
        assert!(i.nearest_latlon(ObjectType::Place, 45.0, -10.0, &CoverBudget::default()).is_empty());
        let hit = i.nearest_latlon(ObjectType::Station, -45.0, 170.0, &CoverBudget::default());
        assert_eq!(hit[0].distance.unwrap().value(), 0.0);
    }

    #[test]
    fn shallow_and_deep_covers_agree() {
        let rows = (0..200)
            .map(|k| SpatialIndexRow::new(38.0 + (k % 20) as f64 * 0.1, -77.0 + (k / 20) as f64 * 0.1, ObjectType::Place, k))
            .collect();
        let i = idx(rows);
        let spec = "CIRCLE LATLON 38.9 -76.5 40";
        let mut seen = Vec::new();
        for depth in [6, 12, 21, 25] {
            let b = CoverBudget::with_leaf_depth(depth).unwrap();
            let hits = i.region_objects(spec, ObjectType::Place, &b).unwrap();
            seen.push(hits.iter().map(|h| h.obj_id).collect::<Vec<_>>());
        }
        assert!(!seen[0].is_empty());
        assert!(seen.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn object_type_codes() {
        assert_eq!("P".parse::<ObjectType>().unwrap(), ObjectType::Place);
        assert_eq!("s".parse::<ObjectType>().unwrap(), ObjectType::Station);
        assert!("G".parse::<ObjectType>().is_err());
        assert!("PS".parse::<ObjectType>().is_err());
    }

    #[test]
    fn fp_ratio_zero_when_cover_exact() {
        let i = idx(vec![SpatialIndexRow::new(0.0, 0.0, ObjectType::Place, 1)]);
        let s = i.false_positive_stats("CONVEX", ObjectType::Place, &CoverBudget::default()).unwrap();
        assert_eq!((s.coarse, s.careful, s.ratio()), (1, 1, 0.0));
        assert_eq!(FalsePositiveStats { coarse: 0, careful: 0 }.ratio(), 0.0);
    }
}
