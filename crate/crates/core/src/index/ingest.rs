//! CSV ingestion of places and stream-gauge stations.

use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Deserializer};

use super::{IndexError, ObjectType, SpatialIndexRow};

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PlaceRecord {
    #[serde(rename = "placename")]
    pub place_name: String,
    pub state: String,
    pub population: i64,
    pub households: i64,
    #[serde(rename = "landarea")]
    pub land_area: i64,
    #[serde(rename = "waterarea")]
    pub water_area: i64,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct StationRecord {
    #[serde(rename = "stationname")]
    pub station_name: String,
    pub state: String,
    pub lat: f64,
    pub lon: f64,
    #[serde(rename = "drainagearea")]
    pub drainage_area: f64,
    #[serde(rename = "firstyear")]
    pub first_year: i32,
    #[serde(rename = "yearsrecorded")]
    pub years_recorded: i32,
    #[serde(rename = "isactive", deserialize_with = "lenient_bool")]
    pub is_active: bool,
    #[serde(rename = "isrealtime", deserialize_with = "lenient_bool")]
    pub is_real_time: bool,
    #[serde(rename = "stationnumber")]
    pub station_number: i64,
}

fn lenient_bool<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "t" | "yes" | "y" => Ok(true),
        "0" | "false" | "f" | "no" | "n" | "" => Ok(false),
        other => Err(serde::de::Error::custom(format!("not a boolean: {other:?}"))),
    }
}

fn with_lines<T, R>(reader: R) -> Result<Vec<(u64, T)>, IndexError>
where
    T: for<'de> Deserialize<'de>,
    R: Read,
{
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .byte_headers()
        .map_err(|e| IndexError::BadRecord { line: 1, message: e.to_string() })?
        .clone();
    let mut out = Vec::new();
    let mut raw = csv::ByteRecord::new();
    loop {
        match rdr.read_byte_record(&mut raw) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Err(IndexError::BadRecord { line, message: e.to_string() });
            }
        }
        let line = raw.position().map_or(0, |p| p.line());
        let rec: T = raw
            .deserialize(Some(&headers))
            .map_err(|e| IndexError::BadRecord { line, message: e.to_string() })?;
        out.push((line, rec));
    }
    Ok(out)
}

fn check_position(line: u64, lat: f64, lon: f64) -> Result<(), IndexError> {
    if !(lat.is_finite() && lon.is_finite()) || lat.abs() > 90.0 {
        return Err(IndexError::BadRecord {
            line,
            message: format!("invalid position ({lat}, {lon})"),
        });
    }
    Ok(())
}

/// Reads a places CSV, returning each record with its line number.
pub fn read_places<R: Read>(reader: R) -> Result<Vec<(u64, PlaceRecord)>, IndexError> {
    let recs = with_lines::<PlaceRecord, R>(reader)?;
    for (line, r) in &recs {
        check_position(*line, r.lat, r.lon)?;
    }
    Ok(recs)
}

/// Reads a stations CSV, returning each record with its line number.
pub fn read_stations<R: Read>(reader: R) -> Result<Vec<(u64, StationRecord)>, IndexError> {
    let recs = with_lines::<StationRecord, R>(reader)?;
    for (line, r) in &recs {
        check_position(*line, r.lat, r.lon)?;
    }
    Ok(recs)
}

/// Keeps the first row of every (htmid, objid) key, logging the rest.
fn drop_duplicates(rows: Vec<(u64, SpatialIndexRow)>) -> Vec<SpatialIndexRow> {
    let mut seen = HashSet::new();
    rows.into_iter()
        .filter_map(|(line, r)| {
            if seen.insert((r.htm_id, r.obj_id)) {
                Some(r)
            } else {
                log::warn!(
                    "line {line}: duplicate key (htmid {}, objid {}), record skipped",
                    r.htm_id.raw(),
                    r.obj_id
                );
                None
            }
        })
        .collect()
}

/// Place rows use the place's own key as objid.
pub fn ingest_places(records: &[(u64, PlaceRecord)]) -> Vec<SpatialIndexRow> {
    let rows = records
        .iter()
        .map(|(line, p)| {
            let mut row = SpatialIndexRow::new(p.lat, p.lon, ObjectType::Place, 0);
            row.obj_id = row.htm_id.raw() as i64;
            (*line, row)
        })
        .collect();
    drop_duplicates(rows)
}

/// Station rows use the station number as objid.
pub fn ingest_stations(records: &[(u64, StationRecord)]) -> Vec<SpatialIndexRow> {
    let rows = records
        .iter()
        .map(|(line, s)| {
            (
                *line,
                SpatialIndexRow::new(s.lat, s.lon, ObjectType::Station, s.station_number),
            )
        })
        .collect();
    drop_duplicates(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{lookup_latlon, DEFAULT_DEPTH};

    const PLACES: &str = "placename,state,population,households,landarea,waterarea,lat,lon
Baltimore,MD,651154,257996,209,30,39.3,-76.61
\"Lansdowne-Baltimore Highlands, CDP\",MD,15724,6000,12,0,39.24,-76.66
Baltimore,MD,1,1,1,1,39.3,-76.61
";

    const STATIONS: &str = "stationname,state,lat,lon,drainagearea,firstyear,yearsrecorded,isactive,isrealtime,stationnumber
Gauge A,CO,40.0,-105.0,12.5,1950,50,1,0,12345
Gauge B,CO,40.0,-105.0,12.5,1950,50,true,False,12346
";

    #[test]
    fn place_objid_is_own_key() {
        let recs = read_places(PLACES.as_bytes()).unwrap();
        assert_eq!(recs[1].1.place_name, "Lansdowne-Baltimore Highlands, CDP");
        assert_eq!(recs[0].0, 2);
        let rows = ingest_places(&recs);
        assert_eq!(rows.len(), 2, "the repeated place collides and is skipped");
        let key = lookup_latlon(39.3, -76.61, DEFAULT_DEPTH).unwrap();
        assert_eq!(rows[0].obj_id, key.raw() as i64);
        assert_eq!(rows[0].obj_type, ObjectType::Place);
    }

    #[test]
    fn station_objid_is_number() {
        let recs = read_stations(STATIONS.as_bytes()).unwrap();
        assert!(recs[0].1.is_active && !recs[1].1.is_real_time);
        let rows = ingest_stations(&recs);
        assert_eq!(rows.iter().map(|r| r.obj_id).collect::<Vec<_>>(), vec![12345, 12346]);
        assert_eq!(rows[0].htm_id, rows[1].htm_id);
    }

    #[test]
    fn bad_record_reports_line() {
        let bad = "placename,state,population,households,landarea,waterarea,lat,lon
A,MD,1,1,1,1,10,10
B,MD,x,1,1,1,10,10
";
        match read_places(bad.as_bytes()) {
            Err(IndexError::BadRecord { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let off = "placename,state,population,households,landarea,waterarea,lat,lon
A,MD,1,1,1,1,91,10
";
        assert!(matches!(read_places(off.as_bytes()), Err(IndexError::BadRecord { line: 2, .. })));
    }
}
