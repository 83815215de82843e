//! The trixel mesh.
//!
//! The sphere is split into the eight faces of an octahedron with vertices at
//! the poles and at four equatorial points. Each face is subdivided
//! recursively by joining its edge midpoints. A trixel is named by a 64-bit
//! [`HtmId`]: a leading 1 bit, the 3-bit face number and one 2-bit child digit
//! per subdivision level.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geom::{UnitVector, Vec3};

/// Depth of the keys stored in a spatial index.
pub const DEFAULT_DEPTH: u8 = 21;

/// Deepest mesh that fits a 64-bit id.
pub const MAX_DEPTH: u8 = 31;

/// Tolerance of the edge-plane tests used by point lookup.
pub const EDGE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeshError {
    #[error("depth {0} is outside 1..={MAX_DEPTH}")]
    DepthExceeded(u32),
    #[error("{0} is not a valid HtmId")]
    InvalidHtmId(u64),
    #[error("cannot parse trixel string {text:?}: {reason}")]
    Parse { text: String, reason: &'static str },
}

/// A trixel identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HtmId(u64);

impl HtmId {
    /// Validates the bit layout of `id`.
    pub fn new(id: u64) -> Result<Self, MeshError> {
        if id < 8 {
            return Err(MeshError::InvalidHtmId(id));
        }
        let bits = 64 - id.leading_zeros();
        if !bits.is_multiple_of(2) {
            return Err(MeshError::InvalidHtmId(id));
        }
        Ok(Self(id))
    }

    pub fn raw(self) -> u64 {
        self.0
    }

    /// Number of levels, counting the face level as depth 1.
    pub fn depth(self) -> u8 {
        let bits = 64 - self.0.leading_zeros();
        ((bits - 2) / 2) as u8
    }

    pub fn level(self) -> u8 {
        self.depth() - 1
    }

    /// Face number 0..8 (0..=3 south, 4..=7 north).
    pub fn face(self) -> u8 {
        ((self.0 >> (2 * self.level() as u32)) & 7) as u8
    }

    pub fn parent(self) -> Option<HtmId> {
        (self.depth() > 1).then_some(HtmId(self.0 >> 2))
    }

    pub fn child(self, k: u8) -> Result<HtmId, MeshError> {
        debug_assert!(k < 4);
        if self.depth() >= MAX_DEPTH {
            return Err(MeshError::DepthExceeded(self.depth() as u32 + 1));
        }
        Ok(HtmId((self.0 << 2) | k as u64))
    }

    /// Ancestor at `depth`, which must not exceed this id's depth.
    pub fn ancestor(self, depth: u8) -> HtmId {
        debug_assert!(depth >= 1 && depth <= self.depth());
        HtmId(self.0 >> (2 * (self.depth() - depth) as u32))
    }

    /// Child digits from the first subdivision down.
    pub fn digits(self) -> impl Iterator<Item = u8> {
        let level = self.level() as u32;
        let id = self.0;
        (0..level).rev().map(move |i| ((id >> (2 * i)) & 3) as u8)
    }
}

impl fmt::Display for HtmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&htm_to_string(*self))
    }
}

impl FromStr for HtmId {
    type Err = MeshError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        string_to_htm(s)
    }
}

fn check_depth(depth: u8) -> Result<(), MeshError> {
    if (1..=MAX_DEPTH).contains(&depth) {
        Ok(())
    } else {
        Err(MeshError::DepthExceeded(depth as u32))
    }
}

/// A spherical triangle of the mesh with its corners in mesh order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trixel {
    pub id: HtmId,
    pub corners: [UnitVector; 3],
}

const OCTAHEDRON: [Vec3; 6] = [
    Vec3::new(0.0, 0.0, 1.0),
    Vec3::new(1.0, 0.0, 0.0),
    Vec3::new(0.0, 1.0, 0.0),
    Vec3::new(-1.0, 0.0, 0.0),
    Vec3::new(0.0, -1.0, 0.0),
    Vec3::new(0.0, 0.0, -1.0),
];

// Corner indices into OCTAHEDRON for faces S0..S3, N0..N3. Every face is
// counter-clockwise seen from outside the sphere.
const FACES: [[usize; 3]; 8] = [
    [1, 5, 2],
    [2, 5, 3],
    [3, 5, 4],
    [4, 5, 1],
    [1, 0, 4],
    [4, 0, 3],
    [3, 0, 2],
    [2, 0, 1],
];

/// The eight depth-1 trixels, ids 8..=15.
pub fn level0_trixels() -> [Trixel; 8] {
    std::array::from_fn(|i| {
        let [a, b, c] = FACES[i];
        Trixel {
            id: HtmId(8 + i as u64),
            corners: [
                UnitVector::from_normalized(OCTAHEDRON[a]),
                UnitVector::from_normalized(OCTAHEDRON[b]),
                UnitVector::from_normalized(OCTAHEDRON[c]),
            ],
        }
    })
}

fn child_corners(c: &[UnitVector; 3], k: u8) -> [UnitVector; 3] {
    let [v0, v1, v2] = *c;
    let w0 = v1.midpoint(v2);
    let w1 = v0.midpoint(v2);
    let w2 = v0.midpoint(v1);
    match k {
        0 => [v0, w2, w1],
        1 => [v1, w0, w2],
        2 => [v2, w1, w0],
        _ => [w0, w1, w2],
    }
}

impl Trixel {
    /// Builds the trixel for `id` by replaying its digit path from the face.
    pub fn from_id(id: HtmId) -> Self {
        let mut corners = level0_trixels()[id.face() as usize].corners;
        for k in id.digits() {
            corners = child_corners(&corners, k);
        }
        Trixel { id, corners }
    }

    pub fn depth(&self) -> u8 {
        self.id.depth()
    }

    pub fn children(&self) -> Result<[Trixel; 4], MeshError> {
        if self.depth() >= MAX_DEPTH {
            return Err(MeshError::DepthExceeded(self.depth() as u32 + 1));
        }
        Ok(std::array::from_fn(|k| Trixel {
            id: HtmId((self.id.0 << 2) | k as u64),
            corners: child_corners(&self.corners, k as u8),
        }))
    }

    /// Unit normals of the three edge planes, pointing into the trixel.
    pub fn edge_normals(&self) -> [Vec3; 3] {
        let [a, b, c] = self.corners.map(UnitVector::vec);
        [a.cross(b), b.cross(c), c.cross(a)].map(|n| n * (1.0 / n.norm()))
    }

    /// Edge-plane containment test with tolerance `eps`.
    pub fn contains_with(&self, p: UnitVector, eps: f64) -> bool {
        self.edge_normals()
            .iter()
            .all(|n| n.dot(p.vec()) >= -eps)
    }

    pub fn contains(&self, p: UnitVector) -> bool {
        self.contains_with(p, EDGE_EPSILON)
    }

    /// Smallest edge-plane dot product; positive inside, negative outside.
    pub(crate) fn inside_margin(&self, p: UnitVector) -> f64 {
        self.edge_normals()
            .iter()
            .map(|n| n.dot(p.vec()))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn center(&self) -> UnitVector {
        let [a, b, c] = self.corners.map(UnitVector::vec);
        let s = a + b + c;
        UnitVector::from_normalized(s * (1.0 / s.norm()))
    }

    /// Spherical excess of the triangle, in steradians.
    pub fn area(&self) -> f64 {
        spherical_triangle_area(self.corners)
    }
}

/// Area of a spherical triangle from the Van Oosterom-Strackee form of
/// Girard's theorem: tan(E/2) = |a.(b x c)| / (1 + a.b + b.c + c.a).
pub fn spherical_triangle_area(corners: [UnitVector; 3]) -> f64 {
    let [a, b, c] = corners.map(UnitVector::vec);
    let triple = a.dot(b.cross(c)).abs();
    let denom = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * triple.atan2(denom)
}

pub fn trixel_area(t: &Trixel) -> f64 {
    t.area()
}

/// Id of the depth-`depth` trixel containing `v`.
///
/// Points on shared edges go to the first face or child, in ascending index
/// order, whose edge planes all pass the tolerance test.
pub fn lookup_xyz(v: UnitVector, depth: u8) -> Result<HtmId, MeshError> {
    check_depth(depth)?;
    let faces = level0_trixels();
    let mut t = pick(v, faces);
    for _ in 1..depth {
        // depth was checked, so children() cannot fail here.
        t = pick(v, t.children()?);
    }
    Ok(t.id)
}

fn pick<const N: usize>(v: UnitVector, candidates: [Trixel; N]) -> Trixel {
    if let Some(t) = candidates.iter().find(|t| t.contains(v)) {
        return *t;
    }
    // Rounding in the midpoints can leave a point just outside every child.
    *candidates
        .iter()
        .max_by(|a, b| a.inside_margin(v).total_cmp(&b.inside_margin(v)))
        .expect("non-empty candidate list")
}

pub fn lookup_latlon(lat: f64, lon: f64, depth: u8) -> Result<HtmId, MeshError> {
    lookup_xyz(crate::geom::LatLon::new(lat, lon).into(), depth)
}

pub fn lookup_eq(ra: f64, dec: f64, depth: u8) -> Result<HtmId, MeshError> {
    lookup_xyz(crate::geom::Equatorial::new(ra, dec).into(), depth)
}

/// Lookup for a raw Cartesian vector; (0, 0, 0) maps to (1, 0, 0).
pub fn lookup_raw_xyz(x: f64, y: f64, z: f64, depth: u8) -> Result<HtmId, MeshError> {
    lookup_xyz(UnitVector::new_or_x(x, y, z), depth)
}

/// Renders `id` as `N`/`S` followed by the face digit and the child digits.
pub fn htm_to_string(id: HtmId) -> String {
    let face = id.face();
    let mut s = String::with_capacity(1 + id.depth() as usize);
    s.push(if face >= 4 { 'N' } else { 'S' });
    s.push(char::from(b'0' + face % 4));
    for d in id.digits() {
        s.push(char::from(b'0' + d));
    }
    s
}

pub fn string_to_htm(text: &str) -> Result<HtmId, MeshError> {
    let err = |reason| MeshError::Parse {
        text: text.to_string(),
        reason,
    };
    let mut chars = text.chars();
    let hemi: u64 = match chars.next() {
        Some('N' | 'n') => 1,
        Some('S' | 's') => 0,
        Some(_) => return Err(err("must start with N or S")),
        None => return Err(err("empty string")),
    };
    let digits: Vec<u64> = chars
        .map(|c| match c {
            '0'..='3' => Ok(c as u64 - '0' as u64),
            _ => Err(err("digits must be 0, 1, 2 or 3")),
        })
        .collect::<Result<_, _>>()?;
    let Some((&face, rest)) = digits.split_first() else {
        return Err(err("missing face digit"));
    };
    if digits.len() > MAX_DEPTH as usize {
        return Err(err("deeper than the maximum depth"));
    }
    let id = rest
        .iter()
        .fold(8 | (hemi << 2) | face, |acc, &d| (acc << 2) | d);
    Ok(HtmId(id))
}

pub fn center_point(id: HtmId) -> UnitVector {
    Trixel::from_id(id).center()
}

pub fn corner_points(id: HtmId) -> [UnitVector; 3] {
    Trixel::from_id(id).corners
}

/// Closed range of depth-`leaf_depth` ids descending from `id`.
pub fn leaf_range(id: HtmId, leaf_depth: u8) -> Result<(HtmId, HtmId), MeshError> {
    check_depth(leaf_depth)?;
    if id.depth() > leaf_depth {
        return Err(MeshError::DepthExceeded(id.depth() as u32));
    }
    let shift = 2 * (leaf_depth - id.depth()) as u32;
    let start = id.0 << shift;
    // OR-ing in the mask avoids overflow for depth-31 leaves under face 7.
    let end = start | ((1u64 << shift) - 1);
    Ok((HtmId(start), HtmId(end)))
}
