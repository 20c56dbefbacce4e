//! Point cloud files, result JSON and OBJ geometry output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{LesError, Result};
use crate::geometry::{Point3, PointCloud, Sphere};
use crate::hull::HullMesh;
use crate::scoring::{MdsDirection, PairMode};
use crate::search::{CandidateSphere, LesResult};

pub const SCHEMA_VERSION: &str = "1";
/// Longitude and latitude divisions of the tessellated LES in OBJ output.
pub const SPHERE_SEGMENTS: usize = 32;
pub const SPHERE_RINGS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Xyz,
    Csv,
    PlyAscii,
}

impl FromStr for CloudFormat {
    type Err = LesError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xyz" => Ok(CloudFormat::Xyz),
            "csv" => Ok(CloudFormat::Csv),
            "ply" | "ply-ascii" => Ok(CloudFormat::PlyAscii),
            other => Err(LesError::InvalidInput(format!(
                "unknown cloud format '{other}' (expected xyz, csv or ply-ascii)"
            ))),
        }
    }
}

impl CloudFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "xyz" | "txt" => Some(CloudFormat::Xyz),
            "csv" => Some(CloudFormat::Csv),
            "ply" => Some(CloudFormat::PlyAscii),
            _ => None,
        }
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> LesError {
    LesError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_coord(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token
        .trim()
        .parse()
        .map_err(|_| parse_error(line, format!("'{token}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("'{token}' is not finite")));
    }
    Ok(v)
}

fn parse_xyz(text: &str) -> Result<Vec<Point3>> {
    let mut pts = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_error(
                n + 1,
                format!("expected 3 coordinates, found {}", fields.len()),
            ));
        }
        pts.push(Point3::new(
            parse_coord(fields[0], n + 1)?,
            parse_coord(fields[1], n + 1)?,
            parse_coord(fields[2], n + 1)?,
        ));
    }
    Ok(pts)
}

fn parse_csv(text: &str) -> Result<Vec<Point3>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut columns: Option<[usize; 3]> = None;
    let mut pts = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let cols = match columns {
            Some(c) => c,
            None => {
                let numeric = record.iter().all(|f| f.parse::<f64>().is_ok());
                if numeric {
                    if record.len() != 3 {
                        return Err(parse_error(
                            line,
                            format!("expected 3 columns, found {}", record.len()),
                        ));
                    }
                    columns = Some([0, 1, 2]);
                    [0, 1, 2]
                } else {
                    let find = |name: &str| {
                        record
                            .iter()
                            .position(|f| f.eq_ignore_ascii_case(name))
                            .ok_or_else(|| {
                                parse_error(line, format!("header has no '{name}' column"))
                            })
                    };
                    columns = Some([find("x")?, find("y")?, find("z")?]);
                    continue;
                }
            }
        };
        let get = |c: usize| {
            record
                .get(c)
                .ok_or_else(|| parse_error(line, format!("missing column {}", c + 1)))
                .and_then(|f| parse_coord(f, line))
        };
        pts.push(Point3::new(get(cols[0])?, get(cols[1])?, get(cols[2])?));
    }
    Ok(pts)
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
    has_list: bool,
}

fn parse_ply(text: &str) -> Result<Vec<Point3>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(parse_error(1, "missing 'ply' magic line")),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut header_done = false;
    for (n, raw) in lines.by_ref() {
        let words: Vec<&str> = raw.split_whitespace().collect();
        match words.as_slice() {
            [] => {}
            ["format", "ascii", _] => {}
            ["format", other, ..] => {
                return Err(parse_error(
                    n + 1,
                    format!("unsupported PLY format '{other}'"),
                ))
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| parse_error(n + 1, format!("bad element count '{count}'")))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                    has_list: false,
                });
            }
            ["property", "list", ..] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_error(n + 1, "property before any element"))?;
                el.has_list = true;
                el.properties.push(words.last().unwrap_or(&"").to_string());
            }
            ["property", _, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_error(n + 1, "property before any element"))?;
                el.properties.push(name.to_string());
            }
            ["end_header"] => {
                header_done = true;
                break;
            }
            _ => {
                return Err(parse_error(
                    n + 1,
                    format!("unexpected header line '{}'", raw.trim()),
                ))
            }
        }
    }
    if !header_done {
        return Err(parse_error(0, "PLY header has no end_header"));
    }
    let mut pts = Vec::new();
    let mut found_vertex = false;
    for el in &elements {
        if el.name != "vertex" {
            for _ in 0..el.count {
                if lines.next().is_none() {
                    return Err(parse_error(
                        0,
                        format!("file ends inside element '{}'", el.name),
                    ));
                }
            }
            continue;
        }
        found_vertex = true;
        if el.has_list {
            return Err(parse_error(
                0,
                "list properties on vertices are not supported",
            ));
        }
        let col = |name: &str| {
            el.properties
                .iter()
                .position(|p| p == name)
                .ok_or_else(|| parse_error(0, format!("vertex element has no '{name}' property")))
        };
        let cols = [col("x")?, col("y")?, col("z")?];
        for _ in 0..el.count {
            let (n, raw) = lines
                .next()
                .ok_or_else(|| parse_error(0, "file ends inside the vertex element"))?;
            let fields: Vec<&str> = raw.split_whitespace().collect();
            if fields.len() != el.properties.len() {
                return Err(parse_error(
                    n + 1,
                    format!(
                        "expected {} values, found {}",
                        el.properties.len(),
                        fields.len()
                    ),
                ));
            }
            pts.push(Point3::new(
                parse_coord(fields[cols[0]], n + 1)?,
                parse_coord(fields[cols[1]], n + 1)?,
                parse_coord(fields[cols[2]], n + 1)?,
            ));
        }
    }
    if !found_vertex {
        return Err(parse_error(0, "PLY file has no vertex element"));
    }
    Ok(pts)
}

/// Parses cloud text. Fails on malformed lines or fewer than 4 points.
pub fn parse_cloud(text: &str, format: CloudFormat) -> Result<PointCloud> {
    let pts = match format {
        CloudFormat::Xyz => parse_xyz(text)?,
        CloudFormat::Csv => parse_csv(text)?,
        CloudFormat::PlyAscii => parse_ply(text)?,
    };
    if pts.len() < 4 {
        return Err(LesError::TooFewPoints {
            needed: 4,
            got: pts.len(),
        });
    }
    PointCloud::new(pts)
}

pub fn read_cloud(path: &Path, format: CloudFormat) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(|e| LesError::io(path, e))?;
    parse_cloud(&text, format)
}

/// Formats a cloud; coordinates use the shortest text that parses back to
/// the same value.
pub fn format_cloud(cloud: &PointCloud, format: CloudFormat) -> String {
    let mut out = String::new();
    match format {
        CloudFormat::Xyz => {}
        CloudFormat::Csv => out.push_str("x,y,z\n"),
        CloudFormat::PlyAscii => {
            let _ = write!(
                out,
                "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
                cloud.len()
            );
        }
    }
    let sep = if format == CloudFormat::Csv { "," } else { " " };
    for p in cloud.points() {
        let _ = writeln!(out, "{}{sep}{}{sep}{}", p.x, p.y, p.z);
    }
    out
}

pub fn write_cloud(path: &Path, cloud: &PointCloud, format: CloudFormat) -> Result<()> {
    fs::write(path, format_cloud(cloud, format)).map_err(|e| LesError::io(path, e))
}

/// Oracle spheres attached to a result document.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OracleReport {
    pub exact: Option<Sphere>,
    pub grid: Option<(Sphere, usize)>,
}

#[derive(Serialize)]
struct SphereDoc<'a> {
    center: [f64; 3],
    radius: f64,
    order: u32,
    contacts: &'a [usize],
}

impl<'a> From<&'a CandidateSphere> for SphereDoc<'a> {
    fn from(c: &'a CandidateSphere) -> Self {
        SphereDoc {
            center: c.sphere.center.to_array(),
            radius: c.sphere.radius,
            order: c.order,
            contacts: &c.contact_indices,
        }
    }
}

#[derive(Serialize)]
struct StatsDoc {
    segments_scored: usize,
    sweep_positions: usize,
    orders_run: u32,
    wall_ms: Option<f64>,
}

#[derive(Serialize)]
struct PairsDoc {
    mode: PairMode,
    sample_fraction: f64,
    seed: u64,
}

#[derive(Serialize)]
struct ParamsDoc {
    k: Option<usize>,
    best_segment_count: usize,
    max_order: u32,
    mds_direction: MdsDirection,
    pairs: Option<PairsDoc>,
    seed: u64,
}

#[derive(Serialize)]
struct OracleSphereDoc {
    center: [f64; 3],
    radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    resolution: Option<usize>,
}

#[derive(Serialize)]
struct OracleDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<OracleSphereDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<OracleSphereDoc>,
}

#[derive(Serialize)]
struct ResultDoc<'a> {
    schema_version: &'static str,
    les: SphereDoc<'a>,
    candidates: Vec<SphereDoc<'a>>,
    mie_points: &'a [usize],
    stats: StatsDoc,
    params: ParamsDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleDoc>,
}

/// Result document as JSON. `wall_ms` is `null` unless `timing` is set, so
/// identical runs produce identical bytes.
pub fn result_json(result: &LesResult, timing: bool, oracle: Option<&OracleReport>) -> String {
    let p = &result.params;
    let doc = ResultDoc {
        schema_version: SCHEMA_VERSION,
        les: (&result.les).into(),
        candidates: result.candidates.iter().map(SphereDoc::from).collect(),
        mie_points: &result.mie_points,
        stats: StatsDoc {
            segments_scored: result.stats.segments_scored,
            sweep_positions: result.stats.sweep_positions,
            orders_run: result.stats.orders_run,
            wall_ms: timing.then_some(result.stats.wall_ms),
        },
        params: ParamsDoc {
            k: p.k,
            best_segment_count: p.best_segment_count,
            max_order: p.max_order,
            mds_direction: p.mds_direction,
            pairs: p.pairs.map(|q| PairsDoc {
                mode: q.mode,
                sample_fraction: q.sample_fraction,
                seed: q.seed,
            }),
            seed: p.seed,
        },
        oracle: oracle.map(|o| OracleDoc {
            exact: o.exact.map(|s| OracleSphereDoc {
                center: s.center.to_array(),
                radius: s.radius,
                resolution: None,
            }),
            grid: o.grid.map(|(s, res)| OracleSphereDoc {
                center: s.center.to_array(),
                radius: s.radius,
                resolution: Some(res),
            }),
        }),
    };
    let mut text = serde_json::to_string(&doc).expect("result document serializes");
    text.push('\n');
    text
}

pub fn write_result(
    result: &LesResult,
    path: &Path,
    timing: bool,
    oracle: Option<&OracleReport>,
) -> Result<()> {
    fs::write(path, result_json(result, timing, oracle)).map_err(|e| LesError::io(path, e))
}

/// Vertices of a UV sphere: the two poles, then `SPHERE_RINGS - 1` rings of
/// `SPHERE_SEGMENTS` vertices from north to south.
pub fn uv_sphere(sphere: &Sphere) -> (Vec<Point3>, Vec<Vec<usize>>) {
    let (seg, rings) = (SPHERE_SEGMENTS, SPHERE_RINGS);
    let c = sphere.center;
    let r = sphere.radius;
    let mut verts = vec![c + Point3::new(0.0, 0.0, r), c + Point3::new(0.0, 0.0, -r)];
    for i in 1..rings {
        let theta = std::f64::consts::PI * i as f64 / rings as f64;
        for j in 0..seg {
            let phi = std::f64::consts::TAU * j as f64 / seg as f64;
            let dir = Point3::new(
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            );
            verts.push(c + dir * r);
        }
    }
    let ring = |i: usize, j: usize| 2 + (i - 1) * seg + j % seg;
    let mut faces = Vec::new();
    for j in 0..seg {
        faces.push(vec![0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..rings - 1 {
        for j in 0..seg {
            faces.push(vec![
                ring(i, j),
                ring(i + 1, j),
                ring(i + 1, j + 1),
                ring(i, j + 1),
            ]);
        }
    }
    for j in 0..seg {
        faces.push(vec![1, ring(rings - 1, j + 1), ring(rings - 1, j)]);
    }
    (verts, faces)
}

/// OBJ text with groups `hull`, `les` and `cloud` (points as `p` elements).
pub fn geometry_obj(result: &LesResult, cloud: &PointCloud, hull: &HullMesh) -> String {
    let mut out = String::from("# largest empty sphere\n");
    let mut base = 1;

    out.push_str("g hull\n");
    let mut slot = vec![0usize; cloud.len()];
    for (k, &i) in hull.vertex_indices.iter().enumerate() {
        slot[i] = base + k;
        let p = cloud.get(i);
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    for f in &hull.faces {
        let _ = writeln!(out, "f {} {} {}", slot[f[0]], slot[f[1]], slot[f[2]]);
    }
    base += hull.vertex_indices.len();

    out.push_str("g les\n");
    let (verts, faces) = uv_sphere(&result.les.sphere);
    for p in &verts {
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    for f in &faces {
        out.push('f');
        for &v in f {
            let _ = write!(out, " {}", base + v);
        }
        out.push('\n');
    }
    base += verts.len();

    out.push_str("g cloud\n");
    for p in cloud.points() {
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    for i in 0..cloud.len() {
        let _ = writeln!(out, "p {}", base + i);
    }
    out
}

pub fn emit_geometry(
    result: &LesResult,
    cloud: &PointCloud,
    hull: &HullMesh,
    path: &Path,
) -> Result<()> {
    fs::write(path, geometry_obj(result, cloud, hull)).map_err(|e| LesError::io(path, e))
}
