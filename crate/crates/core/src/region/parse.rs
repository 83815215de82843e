//! Recursive-descent parser for the region specification language.
//!
//! ```text
//! regionSpec := 'REGION' {areaSpec}* | areaSpec
//! areaSpec   := circleSpec | rectSpec | polySpec | hullSpec | convexSpec
//! ```
//!
//! Keywords are case-insensitive and tokens are separated by any whitespace.

use thiserror::Error;

use crate::geom::{latlon_to_xyz, xyz_to_latlon, Equatorial, LatLon, UnitVector};

use super::shapes::{self, ShapeError};
use super::{Convex, Halfspace, Region};

/// Grammar synopsis appended to diagnostics.
pub const GRAMMAR: &str = "\
regionSpec := 'REGION' {areaSpec}* | areaSpec
areaSpec   := circleSpec | rectSpec | polySpec | hullSpec | convexSpec
circleSpec := 'CIRCLE J2000' ra dec rad | 'CIRCLE LATLON' lat lon rad | 'CIRCLE [CARTESIAN]' x y z rad
rectSpec   := 'RECT J2000' {ra dec}2 | 'RECT LATLON' {lat lon}2 | 'RECT [CARTESIAN]' {x y z}2
polySpec   := 'POLY J2000' {ra dec}3+ | 'POLY LATLON' {lat lon}3+ | 'POLY [CARTESIAN]' {x y z}3+
hullSpec   := 'CHULL J2000' {ra dec}3+ | 'CHULL LATLON' {lat lon}3+ | 'CHULL [CARTESIAN]' {x y z}3+
convexSpec := 'CONVEX J2000' {ra dec D}* | 'CONVEX LATLON' {lat lon D}* | 'CONVEX [CARTESIAN]' {x y z D}*
(angles in degrees, circle radius in arc minutes)";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegionError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("invalid region at position {position}: {message}")]
    Semantic { position: usize, message: String },
}

impl RegionError {
    pub fn position(&self) -> usize {
        match self {
            RegionError::Syntax { position, .. } | RegionError::Semantic { position, .. } => {
                *position
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Keyword {
    Region,
    Circle,
    Rect,
    Poly,
    Chull,
    Convex,
    LatLon,
    J2000,
    Cartesian,
}

impl Keyword {
    fn parse(word: &str) -> Option<Self> {
        const TABLE: [(&str, Keyword); 9] = [
            ("REGION", Keyword::Region),
            ("CIRCLE", Keyword::Circle),
            ("RECT", Keyword::Rect),
            ("POLY", Keyword::Poly),
            ("CHULL", Keyword::Chull),
            ("CONVEX", Keyword::Convex),
            ("LATLON", Keyword::LatLon),
            ("J2000", Keyword::J2000),
            ("CARTESIAN", Keyword::Cartesian),
        ];
        TABLE
            .iter()
            .find(|(name, _)| word.eq_ignore_ascii_case(name))
            .map(|&(_, k)| k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TokenKind {
    Keyword(Keyword),
    Number(f64),
    Other,
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    offset: usize,
    kind: TokenKind,
}

fn lex(src: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in src.char_indices().chain(std::iter::once((src.len(), ' '))) {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                let text = &src[s..i];
                let kind = if let Some(k) = Keyword::parse(text) {
                    TokenKind::Keyword(k)
                } else {
                    match text.parse::<f64>() {
                        Ok(v) if v.is_finite() => TokenKind::Number(v),
                        _ => TokenKind::Other,
                    }
                };
                tokens.push(Token {
                    text,
                    offset: s,
                    kind,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    tokens
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Frame {
    LatLon,
    J2000,
    Cartesian,
}

impl Frame {
    fn point_arity(self) -> usize {
        match self {
            Frame::Cartesian => 3,
            _ => 2,
        }
    }

    fn point_names(self) -> &'static str {
        match self {
            Frame::LatLon => "lat lon",
            Frame::J2000 => "ra dec",
            Frame::Cartesian => "x y z",
        }
    }

    fn name(self) -> &'static str {
        match self {
            Frame::LatLon => "LATLON",
            Frame::J2000 => "J2000",
            Frame::Cartesian => "CARTESIAN",
        }
    }
}

struct Parser<'a> {
    src_len: usize,
    tokens: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.src_len, |t| t.offset)
    }

    fn syntax<T>(&self, offset: usize, message: impl Into<String>) -> Result<T, RegionError> {
        Err(RegionError::Syntax {
            position: offset,
            message: message.into(),
        })
    }

    fn keyword(&self) -> Option<Keyword> {
        match self.peek()?.kind {
            TokenKind::Keyword(k) => Some(k),
            _ => None,
        }
    }

    fn region(&mut self) -> Result<Region, RegionError> {
        if self.tokens.is_empty() {
            return self.syntax(0, "empty region specification");
        }
        let mut convexes = Vec::new();
        if self.keyword() == Some(Keyword::Region) {
            self.pos += 1;
            while self.peek().is_some() {
                convexes.extend(self.area()?.convexes);
            }
        } else {
            convexes.extend(self.area()?.convexes);
            if let Some(t) = self.peek() {
                return self.syntax(
                    t.offset,
                    format!(
                        "unexpected {:?} after a complete shape; combine shapes with REGION",
                        t.text
                    ),
                );
            }
        }
        Ok(Region::new(convexes))
    }

    fn area(&mut self) -> Result<Region, RegionError> {
        let start = self.offset();
        let Some(tok) = self.peek().copied() else {
            return self.syntax(start, "expected a shape");
        };
        let shape = match tok.kind {
            TokenKind::Keyword(
                k @ (Keyword::Circle | Keyword::Rect | Keyword::Poly | Keyword::Chull | Keyword::Convex),
            ) => k,
            TokenKind::Keyword(Keyword::Region) => {
                return self.syntax(start, "REGION may only appear at the start");
            }
            _ => {
                return self.syntax(
                    start,
                    format!(
                        "expected CIRCLE, RECT, POLY, CHULL or CONVEX, found {:?}",
                        tok.text
                    ),
                )
            }
        };
        self.pos += 1;
        let frame = match self.keyword() {
            Some(Keyword::LatLon) => Frame::LatLon,
            Some(Keyword::J2000) => Frame::J2000,
            _ => Frame::Cartesian,
        };
        if matches!(
            self.keyword(),
            Some(Keyword::LatLon | Keyword::J2000 | Keyword::Cartesian)
        ) {
            self.pos += 1;
        }
        let numbers = self.numbers()?;
        let name = match shape {
            Keyword::Circle => "CIRCLE",
            Keyword::Rect => "RECT",
            Keyword::Poly => "POLY",
            Keyword::Chull => "CHULL",
            _ => "CONVEX",
        };
        let semantic = |e: ShapeError| RegionError::Semantic {
            position: start,
            message: format!("{name}: {}", e.0),
        };
        let k = frame.point_arity();
        let header = format!("{name} {}", frame.name());
        match shape {
            Keyword::Circle => {
                if numbers.len() != k + 1 {
                    return self.count_error(&header, &format!("{} radius", frame.point_names()), numbers.len());
                }
                let center = point(frame, &numbers[..k]).map_err(semantic)?;
                Ok(shapes::circle_to_convex(center, numbers[k]).map_err(semantic)?.into())
            }
            Keyword::Rect => {
                if numbers.len() != 2 * k {
                    let names = frame.point_names();
                    return self.count_error(&header, &format!("{names} {names}"), numbers.len());
                }
                let (lat1, lon1) = angles(frame, &numbers[..k]).map_err(semantic)?;
                let (lat2, lon2) = angles(frame, &numbers[k..]).map_err(semantic)?;
                shapes::rect_to_region(lat1, lon1, lat2, lon2).map_err(semantic)
            }
            Keyword::Poly | Keyword::Chull => {
                if numbers.is_empty() || numbers.len() % k != 0 {
                    return self.count_error(
                        &header,
                        &format!("three or more points of ({})", frame.point_names()),
                        numbers.len(),
                    );
                }
                let pts = numbers
                    .chunks(k)
                    .map(|c| point(frame, c))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(semantic)?;
                let convex = if shape == Keyword::Poly {
                    shapes::poly_to_convex(&pts)
                } else {
                    shapes::chull_to_convex(&pts)
                };
                Ok(convex.map_err(semantic)?.into())
            }
            _ => {
                if numbers.len() % (k + 1) != 0 {
                    return self.count_error(
                        &header,
                        &format!("constraints of ({} D)", frame.point_names()),
                        numbers.len(),
                    );
                }
                let hs = numbers
                    .chunks(k + 1)
                    .map(|c| {
                        let d = c[k];
                        if !(-1.0..=1.0).contains(&d) {
                            return Err(ShapeError(format!("displacement {d} is outside [-1, 1]")));
                        }
                        Ok(Halfspace::new(point(frame, &c[..k])?, d))
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(semantic)?;
                Ok(Convex::new(hs).into())
            }
        }
    }

    fn count_error<T>(&self, header: &str, expected: &str, found: usize) -> Result<T, RegionError> {
        let what = match self.peek() {
            Some(t) => format!("found {found} number(s) before {:?}", t.text),
            None => format!("found {found} number(s) before the end of input"),
        };
        self.syntax(self.offset(), format!("{header} expects {expected}; {what}"))
    }

    fn numbers(&mut self) -> Result<Vec<f64>, RegionError> {
        let mut out = Vec::new();
        while let Some(t) = self.peek() {
            match t.kind {
                TokenKind::Number(v) => out.push(v),
                TokenKind::Keyword(_) => break,
                TokenKind::Other => {
                    return self.syntax(t.offset, format!("{:?} is not a number or keyword", t.text))
                }
            }
            self.pos += 1;
        }
        Ok(out)
    }
}

fn point(frame: Frame, c: &[f64]) -> Result<UnitVector, ShapeError> {
    match frame {
        Frame::LatLon => Ok(latlon_to_xyz(LatLon::new(c[0], c[1]))),
        Frame::J2000 => Ok(Equatorial::new(c[0], c[1]).into()),
        Frame::Cartesian => UnitVector::try_new(c[0], c[1], c[2])
            .map_err(|_| ShapeError("vector is too close to (0, 0, 0)".into())),
    }
}

/// (latitude-like, longitude-like) pair of a rectangle corner.
fn angles(frame: Frame, c: &[f64]) -> Result<(f64, f64), ShapeError> {
    match frame {
        Frame::LatLon => Ok((c[0], c[1])),
        Frame::J2000 => Ok((c[1], c[0])),
        Frame::Cartesian => {
            let p = xyz_to_latlon(c[0], c[1], c[2])
                .map_err(|_| ShapeError("vector is too close to (0, 0, 0)".into()))?;
            Ok((p.lat, p.lon))
        }
    }
}

/// Parses a region specification into a union of convexes.
pub fn parse_region(spec: &str) -> Result<Region, RegionError> {
    Parser {
        src_len: spec.len(),
        tokens: lex(spec),
        pos: 0,
    }
    .region()
}

/// `"OK"` for a valid specification, otherwise the diagnostic followed by
/// the grammar synopsis.
pub fn region_error(spec: &str) -> String {
    match parse_region(spec) {
        Ok(_) => "OK".to_string(),
        Err(e) => format!("{e}\n{GRAMMAR}"),
    }
}
