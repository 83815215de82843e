mod common;

use std::f64::consts::PI;

use htm_core::geom::{latlon_to_xyz, LatLon, UnitVector};
use htm_core::mesh::*;
use proptest::prelude::*;
use rand::Rng;

/// Spherical excess from the three side lengths (L'Huilier), independent of
/// the library's area routine.
fn lhuilier(c: [UnitVector; 3]) -> f64 {
    let a = c[1].angle_to(c[2]);
    let b = c[0].angle_to(c[2]);
    let cc = c[0].angle_to(c[1]);
    let s = (a + b + cc) / 2.0;
    let t = (s / 2.0).tan() * ((s - a) / 2.0).tan() * ((s - b) / 2.0).tan() * ((s - cc) / 2.0).tan();
    4.0 * t.max(0.0).sqrt().atan()
}

fn level(l: u8) -> Vec<Trixel> {
    let mut v: Vec<Trixel> = level0_trixels().to_vec();
    for _ in 0..l {
        v = v.iter().flat_map(|t| t.children().unwrap()).collect();
    }
    v
}

#[test]
fn levels_tile_the_sphere() {
    let mut trixels: Vec<Trixel> = level0_trixels().to_vec();
    for l in 0..=8u8 {
        assert_eq!(trixels.len(), 8 << (2 * l));
        let lib: f64 = trixels.iter().map(trixel_area).sum();
        let oracle: f64 = trixels.iter().map(|t| lhuilier(t.corners)).sum();
        assert!((lib - 4.0 * PI).abs() < 1e-9, "level {l}: {lib}");
        assert!((oracle - 4.0 * PI).abs() < 1e-9, "level {l} oracle: {oracle}");
        if l < 8 {
            trixels = trixels.iter().flat_map(|t| t.children().unwrap()).collect();
        }
    }
}

#[test]
fn level0_faces() {
    let faces = level0_trixels();
    for (k, t) in faces.iter().enumerate() {
        assert_eq!(t.id.raw(), 8 + k as u64);
        assert!((trixel_area(t) - PI / 2.0).abs() < 1e-12);
        for c in t.corners {
            let on_axis = [c.x(), c.y(), c.z()].iter().filter(|v| v.abs() == 1.0).count();
            assert_eq!(on_axis, 1);
        }
    }
    assert_eq!(htm_to_string(faces[0].id), "S0");
    let south_center = center_point(HtmId::new(8).unwrap());
    assert!(south_center.z() < 0.0);
}

#[test]
fn children_partition_parent() {
    let t = Trixel::from_id(HtmId::new(8).unwrap());
    let kids = t.children().unwrap();
    let ids: Vec<u64> = kids.iter().map(|k| k.id.raw()).collect();
    assert_eq!(ids, vec![32, 33, 34, 35]);
    for t in level(3).iter().step_by(37) {
        let kids = t.children().unwrap();
        let sum: f64 = kids.iter().map(trixel_area).sum();
        assert!((sum - trixel_area(t)).abs() < 1e-9);
        let mids = [t.corners[1].midpoint(t.corners[2]), t.corners[0].midpoint(t.corners[2]), t.corners[0].midpoint(t.corners[1])];
        for k in &kids {
            for c in k.corners {
                assert!(t.corners.contains(&c) || mids.contains(&c));
            }
        }
    }
    assert_eq!(level(6).iter().filter(|t| t.id.face() == 3).count(), 4096);
}

#[test]
fn golden_keys() {
    let id = lookup_latlon(47.646, -122.123, DEFAULT_DEPTH).unwrap();
    assert_eq!(htm_to_string(id), "N132130231002222332302");
    let parsed = string_to_htm("N132130231002222332302").unwrap();
    assert_eq!(parsed, id);
    assert_eq!(parsed.raw() >> 40, 13);
    assert_eq!(lookup_latlon(39.3, -76.61, 5).unwrap().raw(), 3265);
    let (s, e) = leaf_range(HtmId::new(3265).unwrap(), 21).unwrap();
    assert_eq!((s.raw(), e.raw()), (14023068221440, 14027363188735));
}

#[test]
fn codec_round_trip_1e5_ids() {
    let mut rng = common::rng(5);
    for _ in 0..100_000 {
        let depth = rng.gen_range(1..=MAX_DEPTH);
        let bits = 2 * (depth as u32 - 1);
        let digits = if bits == 0 { 0 } else { rng.gen::<u64>() >> (64 - bits) };
        let raw = ((8 + rng.gen_range(0..8u64)) << bits) | digits;
        let id = HtmId::new(raw).unwrap();
        assert_eq!(id.depth(), depth);
        let s = htm_to_string(id);
        assert_eq!(s.len(), depth as usize + 1);
        assert_eq!(string_to_htm(&s).unwrap(), id);
    }
}

#[test]
fn invalid_ids_and_strings() {
    for raw in [0u64, 1, 7, 16, 17, 31, 64, 127] {
        assert!(HtmId::new(raw).is_err(), "{raw}");
    }
    for s in ["", "N", "X0", "N4", "S01x", "S0-1"] {
        assert!(string_to_htm(s).is_err(), "{s:?}");
    }
    assert!(lookup_latlon(0.0, 0.0, 0).is_err());
    assert!(lookup_latlon(0.0, 0.0, 32).is_err());
    let leaf = lookup_latlon(0.0, 0.0, 21).unwrap();
    assert!(leaf_range(leaf, 20).is_err());
}

#[test]
fn centers_look_up_to_their_trixel() {
    let mut rng = common::rng(6);
    for _ in 0..10_000 {
        let depth = rng.gen_range(1..=25u8);
        let bits = 2 * (depth as u32 - 1);
        let digits = if bits == 0 { 0 } else { rng.gen::<u64>() >> (64 - bits) };
        let id = HtmId::new(((8 + rng.gen_range(0..8u64)) << bits) | digits).unwrap();
        let c = center_point(id);
        assert_eq!(lookup_xyz(c, depth).unwrap(), id);
        let corners = corner_points(id);
        let sum = corners[0].vec() + corners[1].vec() + corners[2].vec();
        let n = sum.normalize().unwrap();
        assert!((n.dot(c) - 1.0).abs() < 1e-15);
    }
}

#[test]
fn random_points_land_in_exactly_their_trixel() {
    let mut rng = common::rng(7);
    let level4 = level(4);
    for _ in 0..2000 {
        let p = common::random_point(&mut rng);
        let id = lookup_xyz(p, 5).unwrap();
        let t = Trixel::from_id(id);
        assert!(t.contains_with(p, EDGE_EPSILON));
        // Strictly inside at most one trixel of the level.
        let strict = level4.iter().filter(|t| t.contains_with(p, -1e-12)).count();
        assert!(strict <= 1);
    }
}

#[test]
fn level6_mean_area() {
    let total: f64 = level(6).iter().map(trixel_area).sum();
    let mean_deg2 = total.to_degrees().to_degrees() / (8.0 * 4f64.powi(6));
    let sphere_deg2 = 4.0 * PI * (180.0 / PI).powi(2);
    assert!((mean_deg2 - sphere_deg2 / 32768.0).abs() < 1e-12);
    assert!((mean_deg2 - 1.259).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn key_nesting(lat in -90.0f64..90.0, lon in -180.0f64..180.0, d1 in 1u8..20, extra in 1u8..11) {
        let d2 = d1 + extra;
        let v = latlon_to_xyz(LatLon::new(lat, lon));
        let deep = lookup_xyz(v, d2).unwrap();
        let shallow = lookup_xyz(v, d1).unwrap();
        prop_assert_eq!(deep.raw() >> (2 * extra as u32), shallow.raw());
        prop_assert_eq!(deep.ancestor(d1), shallow);
        let (s, e) = leaf_range(shallow, d2).unwrap();
        prop_assert!(s <= deep && deep <= e);
        prop_assert_eq!(e.raw() - s.raw() + 1, 1u64 << (2 * extra as u32));
    }

    #[test]
    fn leaf_range_of_leaf_is_itself(lat in -90.0f64..90.0, lon in -180.0f64..180.0, d in 1u8..=31) {
        let id = lookup_latlon(lat, lon, d).unwrap();
        prop_assert_eq!(leaf_range(id, d).unwrap(), (id, id));
        prop_assert_eq!(id.depth(), d);
    }
}
