//! `htm-trixel-index`: trixel keys, region covers and point queries from the
//! command line.

mod verify;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use htm_core::cover::{cover_region, CoverBudget, DEFAULT_MAX_FRONTIER, DEFAULT_MAX_RANGES};
use htm_core::geom::{latlon_to_xyz, LatLon};
use htm_core::index::{
    ingest_places, ingest_stations, read_places, read_stations, IndexError, ObjectType, QueryHit,
    SpatialIndex,
};
use htm_core::mesh::{htm_to_string, lookup_xyz, DEFAULT_DEPTH};
use htm_core::region::{
    circle_to_convex, normalize_region, parse_region, region_error, region_to_normal_form_string,
    region_to_table, Region,
};
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Invariant(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "htm-trixel-index", about = "Hierarchical Triangular Mesh spatial index")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the tool version and build date
    Version,
    /// Trixel key of a point
    #[command(allow_negative_numbers = true)]
    Point {
        lat: f64,
        lon: f64,
        #[arg(long, env = "HTM_DEFAULT_DEPTH", default_value_t = DEFAULT_DEPTH,
              value_parser = clap::value_parser!(u8).range(1..=31))]
        depth: u8,
    },
    /// Trixel ranges covering a circle or region, as CSV
    Cover(CoverArgs),
    /// Validate, normalize or tabulate a region specification
    #[command(subcommand)]
    Region(RegionCommand),
    /// Build an index file from place and station CSVs
    Ingest {
        #[arg(long, required_unless_present = "stations")]
        places: Option<PathBuf>,
        #[arg(long)]
        stations: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Query an index file
    #[command(subcommand)]
    Query(QueryCommand),
    /// Coarse and careful row counts of a region query per cover depth
    Bench {
        #[arg(long)]
        index: PathBuf,
        #[arg(long = "type")]
        obj_type: ObjectType,
        #[command(flatten)]
        spec: SpecSource,
        /// Inclusive depth range such as 9..21
        #[arg(long)]
        depth_sweep: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_RANGES)]
        max_ranges: usize,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SpecSource {
    /// Region specification text
    #[arg(long)]
    region: Option<String>,
    /// File holding a region specification
    #[arg(long)]
    region_file: Option<PathBuf>,
}

impl SpecSource {
    fn text(&self) -> Result<String> {
        match (&self.region, &self.region_file) {
            (Some(s), _) => Ok(s.clone()),
            (None, Some(p)) => fs::read_to_string(p)
                .map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
            (None, None) => Err(CliError::Usage("a region is required".into())),
        }
    }
}

#[derive(Args)]
struct CoverOpts {
    /// Leaf depth of the cover
    #[arg(long, env = "HTM_DEFAULT_DEPTH", default_value_t = DEFAULT_DEPTH,
          value_parser = clap::value_parser!(u8).range(1..=31))]
    depth: u8,
    #[arg(long, default_value_t = DEFAULT_MAX_RANGES)]
    max_ranges: usize,
}

impl CoverOpts {
    fn budget(&self) -> Result<CoverBudget> {
        CoverBudget::new(self.depth, self.max_ranges, DEFAULT_MAX_FRONTIER)
            .map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct CoverArgs {
    /// Circle center and radius in arc minutes
    #[arg(long, num_args = 3, value_names = ["LAT", "LON", "RADIUS"],
          conflicts_with_all = ["region", "region_file"],
          required_unless_present_any = ["region", "region_file"])]
    circle: Option<Vec<f64>>,
    #[arg(long, conflicts_with = "region_file")]
    region: Option<String>,
    #[arg(long)]
    region_file: Option<PathBuf>,
    #[command(flatten)]
    cover: CoverOpts,
}

#[derive(Subcommand)]
enum RegionCommand {
    /// Print OK or a diagnostic; always exits 0
    Check(RegionInput),
    /// Print the normal form
    Normalize(RegionInput),
    /// Print the normalized halfspaces as CSV
    Table(RegionInput),
}

#[derive(Args)]
struct RegionInput {
    #[arg(required_unless_present = "file")]
    spec: Option<String>,
    #[arg(long, conflicts_with = "spec")]
    file: Option<PathBuf>,
}

impl RegionInput {
    fn text(&self) -> Result<String> {
        SpecSource {
            region: self.spec.clone(),
            region_file: self.file.clone(),
        }
        .text()
    }
}

#[derive(Args)]
struct QueryCommon {
    #[arg(long)]
    index: PathBuf,
    #[arg(long = "type")]
    obj_type: ObjectType,
    #[command(flatten)]
    cover: CoverOpts,
    /// Compare the answer against a linear scan; exit 3 on mismatch
    #[arg(long)]
    verify: bool,
}

#[derive(Subcommand)]
enum QueryCommand {
    /// Objects strictly closer than the radius, nearest first
    #[command(allow_negative_numbers = true)]
    Nearby {
        #[command(flatten)]
        common: QueryCommon,
        #[arg(long)]
        lat: f64,
        #[arg(long)]
        lon: f64,
        /// Radius in arc minutes
        #[arg(long)]
        radius: f64,
        /// Drop hits closer than this many arc minutes
        #[arg(long, default_value_t = 0.0)]
        min_distance: f64,
    },
    /// The single nearest object
    #[command(allow_negative_numbers = true)]
    Nearest {
        #[command(flatten)]
        common: QueryCommon,
        #[arg(long)]
        lat: f64,
        #[arg(long)]
        lon: f64,
    },
    /// Objects inside a region, by objid
    Region {
        #[command(flatten)]
        common: QueryCommon,
        #[command(flatten)]
        spec: SpecSource,
    },
}

fn parse_spec(spec: &str) -> Result<Region> {
    parse_region(spec).map_err(|_| CliError::Data(region_error(spec)))
}

fn csv_out() -> csv::Writer<io::StdoutLock<'static>> {
    csv::Writer::from_writer(io::stdout().lock())
}

fn check_latlon(lat: f64, lon: f64) -> Result<()> {
    if !(lat.is_finite() && lon.is_finite() && (-90.0..=90.0).contains(&lat)) {
        return Err(CliError::Usage(format!("bad position ({lat}, {lon}): need finite lon and lat in [-90, 90]")));
    }
    Ok(())
}

fn cmd_point(lat: f64, lon: f64, depth: u8) -> Result<()> {
    check_latlon(lat, lon)?;
    let v = latlon_to_xyz(LatLon::new(lat, lon));
    let id = lookup_xyz(v, depth).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut w = csv_out();
    w.write_record(["htmid", "string", "x", "y", "z"])?;
    w.write_record([
        id.raw().to_string(),
        htm_to_string(id),
        v.x().to_string(),
        v.y().to_string(),
        v.z().to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

fn cmd_cover(args: &CoverArgs) -> Result<()> {
    let budget = args.cover.budget()?;
    let region = match (&args.circle, &args.region, &args.region_file) {
        (Some(c), _, _) => {
            check_latlon(c[0], c[1])?;
            let center = latlon_to_xyz(LatLon::new(c[0], c[1]));
            circle_to_convex(center, c[2])
                .map_err(|e| CliError::Data(e.to_string()))?
                .into()
        }
        (None, region, file) => parse_spec(
            &SpecSource {
                region: region.clone(),
                region_file: file.clone(),
            }
            .text()?,
        )?,
    };
    let mut w = csv_out();
    w.write_record(["htmidstart", "htmidend"])?;
    for r in cover_region(&region, &budget) {
        w.write_record([r.start.raw().to_string(), r.end.raw().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_region(cmd: &RegionCommand) -> Result<()> {
    let mut out = io::stdout().lock();
    match cmd {
        RegionCommand::Check(input) => {
            let text = match input.text() {
                Ok(t) => t,
                Err(e) => {
                    writeln!(out, "{e}")?;
                    return Ok(());
                }
            };
            writeln!(out, "{}", region_error(&text))?;
        }
        RegionCommand::Normalize(input) => {
            let region = parse_spec(&input.text()?)?;
            writeln!(out, "{}", region_to_normal_form_string(&normalize_region(&region)))?;
        }
        RegionCommand::Table(input) => {
            let region = parse_spec(&input.text()?)?;
            drop(out);
            let mut w = csv_out();
            w.write_record(["convexid", "halfspaceid", "x", "y", "z", "d"])?;
            for row in region_to_table(&region) {
                w.write_record([
                    row.convex_id.to_string(),
                    row.halfspace_id.to_string(),
                    row.x.to_string(),
                    row.y.to_string(),
                    row.z.to_string(),
                    row.d.to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_ingest(places: Option<&PathBuf>, stations: Option<&PathBuf>, out: &PathBuf) -> Result<()> {
    let mut rows = Vec::new();
    let open = |p: &PathBuf| fs::File::open(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())));
    if let Some(p) = places {
        let recs = read_places(open(p)?)?;
        let before = rows.len();
        rows.extend(ingest_places(&recs));
        log::info!("{}: {} places indexed", p.display(), rows.len() - before);
    }
    if let Some(p) = stations {
        let recs = read_stations(open(p)?)?;
        let before = rows.len();
        rows.extend(ingest_stations(&recs));
        log::info!("{}: {} stations indexed", p.display(), rows.len() - before);
    }
    let index = SpatialIndex::build(rows)?;
    index.save(out)?;
    eprintln!("wrote {} rows to {}", index.len(), out.display());
    Ok(())
}

fn write_hits(hits: &[QueryHit]) -> Result<()> {
    let mut w = csv_out();
    w.write_record(["objid", "type", "lat", "lon", "distance"])?;
    for h in hits {
        w.write_record([
            h.obj_id.to_string(),
            h.obj_type.to_string(),
            h.lat.to_string(),
            h.lon.to_string(),
            h.distance.map(|d| d.value().to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn check(verify: bool, hits: &[QueryHit], expect: impl FnOnce() -> Vec<QueryHit>) -> Result<()> {
    if verify {
        let expect = expect();
        if let Some(msg) = verify::compare(hits, &expect) {
            return Err(CliError::Invariant(format!("query disagrees with linear scan: {msg}")));
        }
    }
    Ok(())
}

fn cmd_query(cmd: &QueryCommand) -> Result<()> {
    match cmd {
        QueryCommand::Nearby {
            common,
            lat,
            lon,
            radius,
            min_distance,
        } => {
            check_latlon(*lat, *lon)?;
            if !(*radius > 0.0 && *radius <= 10_800.0) {
                return Err(CliError::Usage(format!("radius {radius} must be in (0, 10800]")));
            }
            let index = SpatialIndex::load(&common.index)?;
            let hits = index.nearby_latlon(common.obj_type, *lat, *lon, *radius, &common.cover.budget()?);
            check(common.verify, &hits, || {
                verify::nearby(&index, common.obj_type, *lat, *lon, *radius)
            })?;
            let kept: Vec<QueryHit> = hits
                .into_iter()
                .filter(|h| h.distance.is_some_and(|d| d.value() >= *min_distance))
                .collect();
            write_hits(&kept)
        }
        QueryCommand::Nearest { common, lat, lon } => {
            check_latlon(*lat, *lon)?;
            let index = SpatialIndex::load(&common.index)?;
            let hits = index.nearest_latlon(common.obj_type, *lat, *lon, &common.cover.budget()?);
            check(common.verify, &hits, || {
                verify::nearest(&index, common.obj_type, *lat, *lon)
            })?;
            write_hits(&hits)
        }
        QueryCommand::Region { common, spec } => {
            let region = parse_spec(&spec.text()?)?;
            let index = SpatialIndex::load(&common.index)?;
            let (hits, _) = index.region_objects_in(&region, common.obj_type, &common.cover.budget()?);
            check(common.verify, &hits, || {
                verify::region(&index, common.obj_type, &region)
            })?;
            write_hits(&hits)
        }
    }
}

fn parse_sweep(text: &str) -> Result<(u8, u8)> {
    let bad = || CliError::Usage(format!("depth sweep {text:?} must look like 9..21"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let a: u8 = a.trim().parse().map_err(|_| bad())?;
    let b: u8 = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || a > b || b > 31 {
        return Err(bad());
    }
    Ok((a, b))
}

fn cmd_bench(index: &PathBuf, obj_type: ObjectType, spec: &SpecSource, sweep: Option<&str>, max_ranges: usize) -> Result<()> {
    let (lo, hi) = match sweep {
        Some(s) => parse_sweep(s)?,
        None => (default_depth()?, default_depth()?),
    };
    let region = parse_spec(&spec.text()?)?;
    let index = SpatialIndex::load(index)?;
    let mut w = csv_out();
    w.write_record(["depth", "coarse", "careful", "fp_ratio"])?;
    for depth in lo..=hi {
        let budget = CoverBudget::new(depth, max_ranges, DEFAULT_MAX_FRONTIER)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let (_, stats) = index.region_objects_in(&region, obj_type, &budget);
        w.write_record([
            depth.to_string(),
            stats.coarse.to_string(),
            stats.careful.to_string(),
            stats.ratio().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn default_depth() -> Result<u8> {
    match std::env::var("HTM_DEFAULT_DEPTH") {
        Ok(v) => match v.trim().parse::<u8>() {
            Ok(d) if (1..=31).contains(&d) => Ok(d),
            _ => Err(CliError::Usage(format!("HTM_DEFAULT_DEPTH={v:?} is not a depth in 1..=31"))),
        },
        Err(_) => Ok(DEFAULT_DEPTH),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Version => {
            println!(
                "htm-trixel-index {} (built {})",
                htm_core::VERSION,
                env!("HTM_BUILD_DATE")
            );
            Ok(())
        }
        Command::Point { lat, lon, depth } => cmd_point(lat, lon, depth),
        Command::Cover(args) => cmd_cover(&args),
        Command::Region(cmd) => cmd_region(&cmd),
        Command::Ingest {
            places,
            stations,
            out,
        } => cmd_ingest(places.as_ref(), stations.as_ref(), &out),
        Command::Query(cmd) => cmd_query(&cmd),
        Command::Bench {
            index,
            obj_type,
            spec,
            depth_sweep,
            max_ranges,
        } => cmd_bench(&index, obj_type, &spec, depth_sweep.as_deref(), max_ranges),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
