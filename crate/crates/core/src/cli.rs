//! The `lacmax` command line.
//!
//! Exit codes: 0 on success, 1 on usage or validation errors, 2 on I/O
//! errors. Every output file is written to a sibling temp file and renamed
//! into place.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid2D;
use crate::harness::{self, GridShape, MuConstruction, Operator};
use crate::kernels::{KernelKind, KernelSpec};
use crate::lacunary::{
    binary_decomposition, build_decomposition, complete_decomposition, DirectionSet, LacunaryDecomposition,
    RankInterval,
};
use crate::ops::{self, OperatorConfig};
use crate::{par, sectors, spectral};

#[derive(Debug, Parser)]
#[command(name = "lacmax", version, about = "Directional maximal operators over lacunary direction sets")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DecomposeMode {
    Binary,
    Chain,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ApplyOp {
    M0,
    M1,
    M2,
    Strong,
    Composite,
    Gamma,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepKind {
    N,
    Mu,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a lacunary decomposition from slopes or a nested chain.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "binary")]
        mode: DecomposeMode,
        #[arg(long, default_value_t = 0.5)]
        gap: f64,
        /// Replace the decomposition by its completion.
        #[arg(long)]
        complete: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate a kernel as `x,value` CSV.
    KernelTable {
        #[arg(long, value_enum)]
        kind: KernelKind,
        #[arg(long)]
        r: f64,
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
        range: (f64, f64),
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply an operator to a grid (GRD2 binary, or CSV with --spacing).
    Apply {
        #[arg(long, value_enum)]
        op: ApplyOp,
        #[arg(long)]
        grid: PathBuf,
        /// JSON array of slopes.
        #[arg(long)]
        directions: Option<PathBuf>,
        /// Spacing for CSV grids.
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        #[arg(long, default_value_t = 8)]
        samples_per_unit: u32,
        #[arg(long, default_value_t = 2)]
        aspect_levels: u32,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        h: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Strip overlap maxima of a decomposition.
    Overlap {
        #[arg(long)]
        decomp: PathBuf,
        /// Exact sweep (the default).
        #[arg(long, conflicts_with = "samples")]
        exact: bool,
        /// Random sampling with this many points instead.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that the frequency bands of a chain sit inside their strips.
    CheckSupport {
        /// JSON array of {"lo","hi","rank","pole"}.
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        theta: f64,
        #[arg(long = "R")]
        big_r: f64,
        #[arg(long, default_value_t = sectors::BAND_SAMPLES)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical L² ratios over uniform or lacunary direction sets.
    Sweep {
        #[arg(long, value_enum)]
        mode: SweepKind,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "m0,m1,m2")]
        ops: Vec<String>,
        #[arg(long, default_value = "disk,needles,random")]
        family: String,
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(long, default_value_t = 0.0625)]
        spacing: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2")]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 8)]
        samples_per_unit: u32,
        #[arg(long, default_value_t = 1)]
        aspect_levels: u32,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected a,b")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let threads = cli.threads;
    match par::with_threads(threads, move || execute(cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 2,
        _ => 1,
    }
}

fn execute(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Decompose {
            input,
            mode,
            gap,
            complete,
            out,
        } => {
            let text = read_text(&input)?;
            let mut d = match mode {
                DecomposeMode::Binary => {
                    let pts: Vec<f64> = serde_json::from_str(&text)?;
                    binary_decomposition(&pts)?
                }
                DecomposeMode::Chain => {
                    let chain: Vec<Vec<f64>> = serde_json::from_str(&text)?;
                    build_decomposition(&chain, gap)?
                }
            };
            if complete {
                d = complete_decomposition(&d)?;
            }
            eprintln!("order {} with {} rank intervals", d.order(), d.rank_intervals.len());
            emit(out.as_deref(), &to_json(&d)?)
        }
        Command::KernelTable {
            kind,
            r,
            range,
            samples,
            out,
        } => {
            let table = KernelSpec::new(kind, r)?.table(range.0, range.1, samples)?;
            let mut csv = String::from("x,value\n");
            for (x, v) in table {
                csv.push_str(&format!("{x},{v}\n"));
            }
            emit(out.as_deref(), &csv)
        }
        Command::Apply {
            op,
            grid,
            directions,
            spacing,
            radii,
            samples_per_unit,
            aspect_levels,
            r,
            h,
            alpha,
            out,
        } => {
            let f = read_grid(&grid, spacing)?;
            let cfg = OperatorConfig::new(
                radii.unwrap_or_else(|| OperatorConfig::default().radii),
                samples_per_unit,
                aspect_levels,
            )?;
            let omega = || -> Result<DirectionSet> {
                let path = directions
                    .as_ref()
                    .ok_or_else(|| invalid("this operator needs --directions"))?;
                let slopes: Vec<f64> = serde_json::from_str(&read_text(path)?)?;
                DirectionSet::from_slopes(&slopes)
            };
            let g = match op {
                ApplyOp::M0 => ops::m0(&f, &omega()?, &cfg)?,
                ApplyOp::M1 => ops::m1(&f, &omega()?, &cfg)?,
                ApplyOp::M2 => ops::m2(&f, &omega()?, &cfg)?,
                ApplyOp::Strong => ops::strong_maximal(&f, &cfg)?,
                ApplyOp::Composite => ops::m1_composite(&f, &omega()?, &cfg)?,
                ApplyOp::Gamma => spectral::gamma_op(&f, alpha, r, h)?,
            };
            let mut buf = Vec::new();
            g.write_binary(&mut buf)?;
            write_atomic(&out, &buf)
        }
        Command::Overlap {
            decomp,
            exact: _,
            samples,
            out,
        } => {
            let d: LacunaryDecomposition = serde_json::from_str(&read_text(&decomp)?)?;
            let d = d.revalidate()?;
            let json = match samples {
                Some(n) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let (low, top) = sectors::sampled_overlap(&d, &mut rng, n)?;
                    to_json(&SampledOverlap {
                        samples: n,
                        max_low: low,
                        max_top: top,
                        low_bound: sectors::LOW_OVERLAP_BOUND,
                        top_bound: sectors::TOP_OVERLAP_BOUND,
                    })?
                }
                None => to_json(&sectors::max_overlap(&d)?)?,
            };
            emit(out.as_deref(), &json)
        }
        Command::CheckSupport {
            chain,
            theta,
            big_r,
            samples,
            out,
        } => {
            let chain: Vec<RankInterval> = serde_json::from_str(&read_text(&chain)?)?;
            let rep = sectors::support_containment_check(&chain, theta, big_r, samples)?;
            eprintln!(
                "m = {}, all contained: {}, min corner margin: {:?}",
                rep.m,
                rep.all_contained(),
                rep.min_corner_margin()
            );
            emit(out.as_deref(), &to_json(&rep)?)
        }
        Command::Sweep {
            mode,
            values,
            ops: op_names,
            family,
            size,
            spacing,
            radii,
            samples_per_unit,
            aspect_levels,
            format,
            out,
        } => {
            let ops: Vec<Operator> = op_names.iter().map(|s| s.parse()).collect::<Result<_>>()?;
            let family = harness::family_from_names(&family, seed)?;
            let cfg = OperatorConfig::new(radii, samples_per_unit, aspect_levels)?;
            if size == 0 || !(spacing.is_finite() && spacing > 0.0) {
                return Err(invalid("size and spacing must be positive"));
            }
            let shape = GridShape::square(size, spacing);
            let res = match mode {
                SweepKind::N => harness::sweep_n(&values, &ops, &family, &cfg, shape)?,
                SweepKind::Mu => harness::sweep_mu(&values, MuConstruction::default(), &ops, &family, &cfg, shape)?,
            };
            let text = match format {
                Format::Csv => res.to_csv(),
                Format::Json => to_json(&res)?,
            };
            emit(out.as_deref(), &text)
        }
    }
}

#[derive(Serialize)]
struct SampledOverlap {
    samples: usize,
    max_low: usize,
    max_top: usize,
    low_bound: usize,
    top_bound: usize,
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn read_text(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn read_grid(path: &Path, spacing: Option<f64>) -> Result<Grid2D> {
    let is_csv = path.extension().map_or(false, |e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let spacing = spacing.ok_or_else(|| invalid("CSV grids need --spacing"))?;
        Grid2D::from_csv(&read_text(path)?, spacing)
    } else {
        let file = fs::File::open(path)?;
        Grid2D::read_binary(std::io::BufReader::new(file))
    }
}

/// Writes to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Temp file in the target directory, synced, then renamed over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidInput, "output path has no file name")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}
