//! Trixel covers: sorted lists of leaf-id ranges that together contain every
//! leaf trixel touching a region.
//!
//! The cover is built breadth-first from the eight faces. Trixels fully inside
//! the region are emitted whole, disjoint ones are dropped and partial ones are
//! split until the leaf depth is reached or the budget says stop. Stopping
//! early keeps partial trixels in the cover, which loosens it but never loses
//! a point.

use thiserror::Error;

use crate::geom::{arcmin_to_radians, Equatorial, LatLon, UnitVector, Vec3, MAX_ARCMIN};
use crate::mesh::{leaf_range, level0_trixels, HtmId, Trixel, DEFAULT_DEPTH, MAX_DEPTH};
use crate::region::{normalize_region, Convex, Halfspace, Region};

/// Dot-product margin applied before declaring a trixel inside or outside a
/// halfspace. Much wider than the point-lookup tolerance, so a point that
/// lookup assigns to a trixel is never lost by the cover.
const CLASSIFY_MARGIN: f64 = 1e-9;

pub const DEFAULT_MAX_RANGES: usize = 64;
pub const DEFAULT_MAX_FRONTIER: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverError {
    #[error("leaf depth {0} is outside 1..=31")]
    LeafDepth(u8),
    #[error("cover budgets must be positive")]
    Budget,
}

/// Closed interval of leaf-depth HtmIds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrixelRange {
    pub start: HtmId,
    pub end: HtmId,
}

impl TrixelRange {
    pub fn contains(&self, id: HtmId) -> bool {
        self.start <= id && id <= self.end
    }

    /// Number of leaf ids in the range.
    pub fn leaf_count(&self) -> u64 {
        self.end.raw() - self.start.raw() + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverBudget {
    leaf_depth: u8,
    max_ranges: usize,
    max_frontier: usize,
}

impl Default for CoverBudget {
    fn default() -> Self {
        Self {
            leaf_depth: DEFAULT_DEPTH,
            max_ranges: DEFAULT_MAX_RANGES,
            max_frontier: DEFAULT_MAX_FRONTIER,
        }
    }
}

impl CoverBudget {
    pub fn new(leaf_depth: u8, max_ranges: usize, max_frontier: usize) -> Result<Self, CoverError> {
        if !(1..=MAX_DEPTH).contains(&leaf_depth) {
            return Err(CoverError::LeafDepth(leaf_depth));
        }
        if max_ranges == 0 || max_frontier == 0 {
            return Err(CoverError::Budget);
        }
        Ok(Self {
            leaf_depth,
            max_ranges,
            max_frontier,
        })
    }

    pub fn with_leaf_depth(leaf_depth: u8) -> Result<Self, CoverError> {
        Self::new(leaf_depth, DEFAULT_MAX_RANGES, DEFAULT_MAX_FRONTIER)
    }

    pub fn leaf_depth(&self) -> u8 {
        self.leaf_depth
    }

    pub fn max_ranges(&self) -> usize {
        self.max_ranges
    }

    pub fn max_frontier(&self) -> usize {
        self.max_frontier
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    Full,
    Partial,
    Disjoint,
}

/// Smallest and largest value of `p.n` for `p` on the great-circle arc a->b.
fn arc_extent(a: Vec3, b: Vec3, n: Vec3) -> (f64, f64) {
    let ga = a.dot(n);
    let gb = b.dot(n);
    let (mut lo, mut hi) = (ga.min(gb), ga.max(gb));
    let sweep = a.cross(b).norm().atan2(a.dot(b));
    let perp = b - a * a.dot(b);
    let len = perp.norm();
    if len == 0.0 {
        return (lo, hi);
    }
    // Along the arc p(t) = a cos t + u sin t, so p.n = A cos t + B sin t.
    let u = perp * (1.0 / len);
    let (ca, cb) = (ga, u.dot(n));
    let amp = ca.hypot(cb);
    let peak = cb.atan2(ca).rem_euclid(std::f64::consts::TAU);
    let trough = (peak + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU);
    if peak <= sweep {
        hi = hi.max(amp);
    }
    if trough <= sweep {
        lo = lo.min(-amp);
    }
    (lo, hi)
}

/// Angular radius of the smallest cap around the trixel's center that holds
/// its corners.
fn bounding_radius(t: &Trixel, center: UnitVector) -> f64 {
    t.corners
        .iter()
        .map(|c| c.angle_to(center))
        .fold(0.0, f64::max)
}

fn classify_halfspace(t: &Trixel, h: &Halfspace, center: UnitVector, bound: f64) -> Coverage {
    if h.is_whole_sphere() {
        return Coverage::Full;
    }
    let sep = center.angle_to(h.normal());
    let radius = h.radius();
    if sep > bound + radius + 1e-9 {
        return Coverage::Disjoint;
    }
    if sep + bound + 1e-9 < radius {
        return Coverage::Full;
    }
    let n = h.normal().vec();
    let [a, b, c] = t.corners.map(UnitVector::vec);
    let (lo, hi) = [(a, b), (b, c), (c, a)]
        .iter()
        .map(|&(p, q)| arc_extent(p, q, n))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (l, h)| {
            (lo.min(l), hi.max(h))
        });
    let d = h.d();
    if lo >= d + CLASSIFY_MARGIN {
        // Boundary inside the cap; the outside could still be a hole in the
        // middle of the trixel.
        if t.contains_with(-h.normal(), CLASSIFY_MARGIN) {
            Coverage::Partial
        } else {
            Coverage::Full
        }
    } else if hi < d - CLASSIFY_MARGIN {
        // Boundary outside the cap; the cap could sit inside the trixel.
        if t.contains_with(h.normal(), CLASSIFY_MARGIN) {
            Coverage::Partial
        } else {
            Coverage::Disjoint
        }
    } else {
        Coverage::Partial
    }
}

fn classify_convex(t: &Trixel, c: &Convex, center: UnitVector, bound: f64) -> Coverage {
    let mut full = true;
    for h in c.halfspaces() {
        match classify_halfspace(t, h, center, bound) {
            Coverage::Disjoint => return Coverage::Disjoint,
            Coverage::Partial => full = false,
            Coverage::Full => {}
        }
    }
    if full {
        Coverage::Full
    } else {
        Coverage::Partial
    }
}

/// Conservative classification of a trixel against a region: `Full` and
/// `Disjoint` are only returned when certain.
pub fn classify_trixel(t: &Trixel, r: &Region) -> Coverage {
    let center = t.center();
    let bound = bounding_radius(t, center);
    let mut disjoint = true;
    for c in r.convexes() {
        match classify_convex(t, c, center, bound) {
            Coverage::Full => return Coverage::Full,
            Coverage::Partial => disjoint = false,
            Coverage::Disjoint => {}
        }
    }
    if disjoint {
        Coverage::Disjoint
    } else {
        Coverage::Partial
    }
}

/// Sorts and coalesces ranges that overlap or touch.
pub fn merge_ranges(mut ranges: Vec<TrixelRange>) -> Vec<TrixelRange> {
    ranges.sort();
    let mut out: Vec<TrixelRange> = Vec::with_capacity(ranges.len());
    for r in ranges {
        match out.last_mut() {
            Some(last) if r.start.raw() <= last.end.raw().saturating_add(1) => {
                if r.end > last.end {
                    last.end = r.end;
                }
            }
            _ => out.push(r),
        }
    }
    out
}

fn to_ranges<'a>(ids: impl Iterator<Item = &'a HtmId>, leaf_depth: u8) -> Vec<TrixelRange> {
    let ranges = ids
        .map(|&id| {
            // Nodes never go deeper than the leaf depth.
            let (start, end) = leaf_range(id, leaf_depth).expect("node within leaf depth");
            TrixelRange { start, end }
        })
        .collect();
    merge_ranges(ranges)
}

/// Sound cover of `r` at the budget's leaf depth.
pub fn cover_region(r: &Region, budget: &CoverBudget) -> Vec<TrixelRange> {
    let region = normalize_region(r);
    if region.is_empty() {
        return Vec::new();
    }
    let mut full: Vec<HtmId> = Vec::new();
    let mut frontier: Vec<Trixel> = Vec::new();
    for t in level0_trixels() {
        match classify_trixel(&t, &region) {
            Coverage::Full => full.push(t.id),
            Coverage::Partial => frontier.push(t),
            Coverage::Disjoint => {}
        }
    }
    let mut depth = 1;
    while !frontier.is_empty() && depth < budget.leaf_depth {
        let mut next_full = Vec::new();
        let mut next_partial = Vec::new();
        for t in &frontier {
            // depth < leaf_depth <= MAX_DEPTH, so children exist.
            for c in t.children().expect("below maximum depth") {
                match classify_trixel(&c, &region) {
                    Coverage::Full => next_full.push(c.id),
                    Coverage::Partial => next_partial.push(c),
                    Coverage::Disjoint => {}
                }
            }
        }
        if next_partial.len() > budget.max_frontier {
            break;
        }
        let ids: Vec<HtmId> = full
            .iter()
            .chain(&next_full)
            .copied()
            .chain(next_partial.iter().map(|t| t.id))
            .collect();
        if to_ranges(ids.iter(), budget.leaf_depth).len() > budget.max_ranges {
            break;
        }
        full.extend(next_full);
        frontier = next_partial;
        depth += 1;
    }
    let ids: Vec<HtmId> = full
        .into_iter()
        .chain(frontier.iter().map(|t| t.id))
        .collect();
    to_ranges(ids.iter(), budget.leaf_depth)
}

/// Cover of a cap around `center`; the radius is clamped to [0, 10800].
pub fn cover_circle_xyz(center: UnitVector, radius_arcmin: f64, budget: &CoverBudget) -> Vec<TrixelRange> {
    let radius = if radius_arcmin.is_nan() {
        0.0
    } else {
        radius_arcmin.clamp(0.0, MAX_ARCMIN)
    };
    let cap = Halfspace::new(center, arcmin_to_radians(radius).cos());
    cover_region(&Convex::new(vec![cap]).into(), budget)
}

pub fn cover_circle_latlon(lat: f64, lon: f64, radius_arcmin: f64, budget: &CoverBudget) -> Vec<TrixelRange> {
    cover_circle_xyz(LatLon::new(lat, lon).into(), radius_arcmin, budget)
}

pub fn cover_circle_eq(ra: f64, dec: f64, radius_arcmin: f64, budget: &CoverBudget) -> Vec<TrixelRange> {
    cover_circle_xyz(Equatorial::new(ra, dec).into(), radius_arcmin, budget)
}

/// Raw-vector variant; (0, 0, 0) is treated as (1, 0, 0).
pub fn cover_circle_raw_xyz(x: f64, y: f64, z: f64, radius_arcmin: f64, budget: &CoverBudget) -> Vec<TrixelRange> {
    cover_circle_xyz(UnitVector::new_or_x(x, y, z), radius_arcmin, budget)
}

/// True when some range of the sorted cover contains `id`.
pub fn cover_contains(cover: &[TrixelRange], id: HtmId) -> bool {
    let i = cover.partition_point(|r| r.end < id);
    cover.get(i).is_some_and(|r| r.contains(id))
}
