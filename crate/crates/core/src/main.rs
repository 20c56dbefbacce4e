use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use les3d::generators::{gen_ball, gen_shell, gen_two_spheres, ShellSpec, TwoSphereSpec};
use les3d::hull::build_hull;
use les3d::io::{self, CloudFormat, OracleReport};
use les3d::oracle::{exact_les, grid_les};
use les3d::scoring::{MdsDirection, PairSamplingPolicy};
use les3d::search::{run_les, SearchParams, DEFAULT_BEST_SEGMENTS, DEFAULT_MAX_ORDER};
use les3d::{LesError, Point3, PointCloud, Result};

#[derive(Parser)]
#[command(
    name = "les3d",
    version,
    about = "Largest empty sphere search in hollow point clouds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the largest empty sphere of a cloud.
    Solve(SolveArgs),
    /// Write a synthetic cloud to a file.
    Gen(GenCommand),
    /// Run the reference solvers only.
    Oracle(OracleArgs),
    /// Time hull construction on growing uniform-ball clouds.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Xyz,
    Csv,
    #[value(name = "ply-ascii", alias = "ply")]
    PlyAscii,
}

impl From<FormatArg> for CloudFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Xyz => CloudFormat::Xyz,
            FormatArg::Csv => CloudFormat::Csv,
            FormatArg::PlyAscii => CloudFormat::PlyAscii,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Shell,
    #[value(name = "two-spheres")]
    TwoSpheres,
    Ball,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairsArg {
    All,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Min,
    Max,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    Exact,
    Grid,
    None,
}

#[derive(Args, Clone)]
struct GenSpec {
    /// Points for `shell` and `ball`.
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Points per sphere for `two-spheres`.
    #[arg(long, default_value_t = 1000)]
    n_per_sphere: usize,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Half-width of the radial jitter.
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    /// Centre displacement for `two-spheres`, as `x,y,z`.
    #[arg(long, default_value = "1,0,0", value_parser = parse_vector)]
    offset: Point3,
    #[arg(long, default_value_t = 1)]
    gen_seed: u64,
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false)]
struct Source {
    /// Cloud file to read.
    #[arg(group = "source")]
    input: Option<PathBuf>,
    /// Generate the cloud instead of reading one.
    #[arg(long = "gen", value_enum, group = "source")]
    generator: Option<GenKind>,
}

#[derive(Args)]
struct InputArgs {
    #[command(flatten)]
    source: Source,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[command(flatten)]
    spec: GenSpec,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Sweep positions per segment (default: min(64, n)).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BEST_SEGMENTS)]
    best_segments: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ORDER)]
    max_order: u32,
    #[arg(long, value_enum, default_value = "min")]
    mds_direction: DirectionArg,
    /// Pair policy; by default all pairs up to 10000, else a 1% sample.
    #[arg(long, value_enum)]
    pairs: Option<PairsArg>,
    #[arg(long, default_value_t = 0.01)]
    sample_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also run a reference solver and include it in the output.
    #[arg(long, value_enum, default_value = "none")]
    oracle: OracleKind,
    #[arg(long, default_value_t = 64)]
    grid_res: usize,
    /// Result JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write hull, sphere and cloud as a Wavefront OBJ file.
    #[arg(long)]
    emit_obj: Option<PathBuf>,
    /// Record wall time in the result (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct GenCommand {
    #[arg(value_enum)]
    kind: GenKind,
    #[command(flatten)]
    spec: GenSpec,
    #[arg(long)]
    out: PathBuf,
    /// Output format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "exact")]
    oracle: OracleKind,
    #[arg(long, default_value_t = 64)]
    grid_res: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [10_000usize, 20_000, 40_000])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn parse_vector(s: &str) -> std::result::Result<Point3, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got '{s}'"));
    }
    let mut v = [0.0; 3];
    for (slot, part) in v.iter_mut().zip(parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| format!("'{part}' is not a number"))?;
    }
    Ok(Point3::from(v))
}

fn resolve_format(explicit: Option<FormatArg>, path: &Path) -> Result<CloudFormat> {
    match explicit {
        Some(f) => Ok(f.into()),
        None => CloudFormat::from_path(path).ok_or_else(|| {
            LesError::InvalidInput(format!(
                "cannot tell the format of {}; pass --format",
                path.display()
            ))
        }),
    }
}

fn generate(kind: GenKind, spec: &GenSpec) -> Result<PointCloud> {
    match kind {
        GenKind::Shell => gen_shell(&ShellSpec {
            n: spec.n,
            radius: spec.radius,
            noise: spec.noise,
            seed: spec.gen_seed,
        }),
        GenKind::TwoSpheres => gen_two_spheres(&TwoSphereSpec {
            n_per_sphere: spec.n_per_sphere,
            radius: spec.radius,
            offset: spec.offset,
            noise: spec.noise,
            seed: spec.gen_seed,
        }),
        GenKind::Ball => gen_ball(spec.n, spec.radius, spec.gen_seed),
    }
}

fn load(input: &InputArgs) -> Result<PointCloud> {
    match (&input.source.input, input.source.generator) {
        (Some(path), None) => io::read_cloud(path, resolve_format(input.format, path)?),
        (None, Some(kind)) => generate(kind, &input.spec),
        _ => Err(LesError::InvalidInput(
            "give exactly one of an input file or --gen".into(),
        )),
    }
}

fn run_oracles(
    cloud: &PointCloud,
    kind: OracleKind,
    grid_res: usize,
) -> Result<Option<OracleReport>> {
    Ok(match kind {
        OracleKind::None => None,
        OracleKind::Exact => Some(OracleReport {
            exact: Some(exact_les(cloud)?),
            grid: None,
        }),
        OracleKind::Grid => Some(OracleReport {
            exact: None,
            grid: Some((grid_les(cloud, grid_res)?, grid_res)),
        }),
    })
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| LesError::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve(args: &SolveArgs) -> Result<()> {
    let cloud = load(&args.input)?;
    let pairs = match args.pairs {
        None => None,
        Some(PairsArg::All) => Some(PairSamplingPolicy {
            seed: args.seed,
            ..PairSamplingPolicy::all_pairs()
        }),
        Some(PairsArg::Sampled) => Some(PairSamplingPolicy::sampled(
            args.sample_fraction,
            args.seed,
        )?),
    };
    let params = SearchParams {
        k: args.k,
        best_segment_count: args.best_segments,
        max_order: args.max_order,
        mds_direction: match args.mds_direction {
            DirectionArg::Min => MdsDirection::Min,
            DirectionArg::Max => MdsDirection::Max,
        },
        pairs,
        seed: args.seed,
    };
    let result = run_les(&cloud, &params)?;
    let oracle = run_oracles(&cloud, args.oracle, args.grid_res)?;
    if let Some(path) = &args.emit_obj {
        let hull = build_hull(&cloud)?;
        io::emit_geometry(&result, &cloud, &hull, path)?;
    }
    let json = io::result_json(&result, args.timing, oracle.as_ref());
    write_or_print(args.out.as_deref(), &json)
}

fn oracle(args: &OracleArgs) -> Result<()> {
    let cloud = load(&args.input)?;
    let kind = if args.oracle == OracleKind::None {
        OracleKind::Exact
    } else {
        args.oracle
    };
    let report = run_oracles(&cloud, kind, args.grid_res)?.unwrap_or_default();
    let sphere =
        |s: les3d::Sphere| serde_json::json!({ "center": s.center.to_array(), "radius": s.radius });
    let mut doc = serde_json::Map::new();
    if let Some(s) = report.exact {
        doc.insert("exact".into(), sphere(s));
    }
    if let Some((s, res)) = report.grid {
        let mut g = sphere(s);
        g["resolution"] = res.into();
        doc.insert("grid".into(), g);
    }
    println!("{}", serde_json::Value::Object(doc));
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<()> {
    if args.repeats == 0 {
        return Err(LesError::InvalidInput("repeats must be at least 1".into()));
    }
    println!("{:>8} {:>12} {:>8}", "n", "hull_ms", "ratio");
    let mut previous: Option<f64> = None;
    for &n in &args.sizes {
        let cloud = gen_ball(n, 1.0, args.seed)?;
        let mut times = Vec::with_capacity(args.repeats);
        for _ in 0..args.repeats {
            let start = Instant::now();
            build_hull(&cloud)?;
            times.push(start.elapsed().as_secs_f64() * 1e3);
        }
        times.sort_by(f64::total_cmp);
        let median = times[times.len() / 2];
        let ratio = previous.map_or_else(|| "-".to_string(), |p| format!("{:.2}", median / p));
        println!("{n:>8} {median:>12.3} {ratio:>8}");
        previous = Some(median);
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("LES3D_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| {
            LesError::InvalidInput(format!(
                "LES3D_THREADS must be a positive integer, got '{value}'"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| LesError::InvalidInput(format!("cannot configure worker threads: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| match &cli.command {
        Command::Solve(args) => solve(args),
        Command::Gen(args) => generate(args.kind, &args.spec).and_then(|cloud| {
            let format = resolve_format(args.format, &args.out)?;
            io::write_cloud(&args.out, &cloud, format)
        }),
        Command::Oracle(args) => oracle(args),
        Command::Bench(args) => bench(args),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
