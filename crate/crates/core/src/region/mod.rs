//! Regions on the sphere in their normal form: a union of convexes, each the
//! intersection of halfspaces `{p : p.n >= d}`.

mod parse;
mod shapes;

use std::fmt::Write as _;

use crate::geom::UnitVector;

pub use parse::{parse_region, region_error, RegionError, GRAMMAR};
pub use shapes::{chull_to_convex, circle_to_convex, poly_to_convex, rect_to_region};

/// Slack used when deciding that one cap lies inside another or that two caps
/// cannot meet, in radians.
const CAP_EPSILON: f64 = 1e-12;

/// A spherical cap: the points whose dot product with `normal` is at least `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halfspace {
    normal: UnitVector,
    d: f64,
}

impl Halfspace {
    /// `d` is clamped to [-1, 1].
    pub fn new(normal: UnitVector, d: f64) -> Self {
        Self {
            normal,
            d: d.clamp(-1.0, 1.0),
        }
    }

    pub fn normal(&self) -> UnitVector {
        self.normal
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Angular radius of the cap in radians.
    pub fn radius(&self) -> f64 {
        self.d.acos()
    }

    pub fn contains(&self, p: UnitVector) -> bool {
        p.dot(self.normal) - self.d >= 0.0
    }

    pub fn is_whole_sphere(&self) -> bool {
        self.d <= -1.0
    }

    /// True when every point of `self` is inside `other`.
    pub fn within(&self, other: &Halfspace) -> bool {
        if other.is_whole_sphere() {
            return true;
        }
        self.normal.angle_to(other.normal) + self.radius() <= other.radius() + CAP_EPSILON
    }

    /// True when the two caps share no point.
    pub fn disjoint_from(&self, other: &Halfspace) -> bool {
        self.normal.angle_to(other.normal) > self.radius() + other.radius() + CAP_EPSILON
    }
}

/// Intersection of halfspaces. The empty convex is the whole sphere.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Convex {
    halfspaces: Vec<Halfspace>,
}

impl Convex {
    pub fn new(halfspaces: Vec<Halfspace>) -> Self {
        Self { halfspaces }
    }

    pub fn whole_sphere() -> Self {
        Self::default()
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn contains(&self, p: UnitVector) -> bool {
        self.halfspaces.iter().all(|h| h.contains(p))
    }

    /// Drops halfspaces implied by another one in the same convex. Returns
    /// `None` when two halfspaces cannot meet, i.e. the convex is empty.
    ///
    /// Only pairwise relations are examined; a convex that is empty because
    /// of three or more constraints together is kept.
    pub fn simplify(&self) -> Option<Convex> {
        let hs: Vec<Halfspace> = self
            .halfspaces
            .iter()
            .copied()
            .filter(|h| !h.is_whole_sphere())
            .collect();
        for (i, a) in hs.iter().enumerate() {
            if hs[i + 1..].iter().any(|b| a.disjoint_from(b)) {
                return None;
            }
        }
        let mut keep = vec![true; hs.len()];
        for i in 0..hs.len() {
            let redundant = (0..hs.len()).any(|j| {
                // Among equal caps the earliest one survives.
                j != i && keep[j] && hs[j].within(&hs[i]) && !(i < j && hs[i].within(&hs[j]))
            });
            if redundant {
                keep[i] = false;
            }
        }
        Some(Convex::new(
            hs.into_iter()
                .zip(keep)
                .filter_map(|(h, k)| k.then_some(h))
                .collect(),
        ))
    }
}

/// Union of convexes. The empty region contains no point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Region {
    convexes: Vec<Convex>,
}

impl Region {
    pub fn new(convexes: Vec<Convex>) -> Self {
        Self { convexes }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn whole_sphere() -> Self {
        Self::new(vec![Convex::whole_sphere()])
    }

    pub fn convexes(&self) -> &[Convex] {
        &self.convexes
    }

    pub fn is_empty(&self) -> bool {
        self.convexes.is_empty()
    }

    pub fn contains(&self, p: UnitVector) -> bool {
        point_in_region(p, self)
    }
}

impl From<Convex> for Region {
    fn from(c: Convex) -> Self {
        Region::new(vec![c])
    }
}

/// One halfspace of a region in tabular form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionTableRow {
    pub convex_id: usize,
    pub halfspace_id: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub d: f64,
}

pub fn point_in_region(p: UnitVector, r: &Region) -> bool {
    r.convexes.iter().any(|c| c.contains(p))
}

/// Removes empty convexes and redundant halfspaces.
pub fn normalize_region(r: &Region) -> Region {
    Region::new(r.convexes.iter().filter_map(Convex::simplify).collect())
}

/// Formats `r` as `REGION CONVEX x y z d ... CONVEX ...`, each number in its
/// shortest round-trip decimal form.
pub fn region_to_normal_form_string(r: &Region) -> String {
    let mut s = String::from("REGION");
    for c in &r.convexes {
        s.push_str(" CONVEX");
        for h in &c.halfspaces {
            let n = h.normal;
            // Writing to a String cannot fail.
            let _ = write!(s, " {} {} {} {}", n.x(), n.y(), n.z(), h.d);
        }
    }
    s
}

/// Rows of the normalized region, ordered by convex then halfspace.
pub fn region_to_table(r: &Region) -> Vec<RegionTableRow> {
    normalize_region(r)
        .convexes
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| {
            c.halfspaces.iter().enumerate().map(move |(hi, h)| RegionTableRow {
                convex_id: ci,
                halfspace_id: hi,
                x: h.normal.x(),
                y: h.normal.y(),
                z: h.normal.z(),
                d: h.d,
            })
        })
        .collect()
}
