mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skelroad::navmetrics::{Planner, DEFAULT_SCOPE};
use skelroad::neuroskel::DEFAULT_TAU;
use skelroad::roadmap::{RoadmapError, DEFAULT_K};

/// Skeleton-roadmap path planning on occupancy grids.
#[derive(Parser, Debug)]
#[command(name = "skelroad", version)]
struct Cli {
    /// Print machine-readable `key=value` lines on stdout.
    #[arg(long, global = true)]
    porcelain: bool,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a corpus of dungeon maps.
    Generate(GenerateArgs),
    /// Write the skeleton mask of a map as an image.
    Skeletonize(SkeletonizeArgs),
    /// Build a roadmap once and save it for later queries.
    BuildRoadmap(BuildRoadmapArgs),
    /// Answer one query and report the path metrics.
    Plan(PlanArgs),
    /// Run every planner on a corpus and tabulate the metrics.
    Benchmark(BenchmarkArgs),
    /// Fly a planned path with the PID tracker and audit clearance.
    Simulate(SimulateArgs),
}

/// Skeleton back-end settings shared by the planning commands.
#[derive(Args, Debug, Clone)]
struct Tuning {
    /// Neighbors per vertex when connecting the roadmap.
    #[arg(long = "k", default_value_t = DEFAULT_K)]
    k_nearest: usize,
    /// Probability threshold for the skelunet back-end.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// SKLW weight file for the skelunet back-end.
    #[arg(long, value_name = "PATH")]
    weights: Option<PathBuf>,
    /// Random samples drawn by the medial-axis back-end.
    #[arg(long, default_value_t = 100)]
    ma_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Master seed; map `i` uses `seed + i`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 3)]
    corridor_width: usize,
}

#[derive(Args, Debug)]
struct SkeletonizeArgs {
    map: PathBuf,
    /// Output image; `.png` selects PNG, anything else binary PGM.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    #[arg(long, default_value = "zhangsuen")]
    planner: Planner,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args, Debug)]
struct BuildRoadmapArgs {
    map: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    #[arg(long, default_value = "zhangsuen")]
    planner: Planner,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args, Debug)]
struct PlanArgs {
    map: PathBuf,
    /// Start cell as `x,y`; the query starts at its center.
    #[arg(long, value_parser = parse_cell)]
    start: (usize, usize),
    /// Goal cell as `x,y`.
    #[arg(long, value_parser = parse_cell)]
    goal: (usize, usize),
    /// Reuse a roadmap saved by `build-roadmap` instead of building one.
    #[arg(long, value_name = "PATH")]
    roadmap: Option<PathBuf>,
    /// Path file, one `x y` waypoint per line.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// SVG overlay (default: the path file with an `.svg` extension).
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
    #[arg(long, default_value = "zhangsuen")]
    planner: Planner,
    /// Dispersion ray length, cells.
    #[arg(long, default_value_t = DEFAULT_SCOPE)]
    scope: f64,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Directory of `.pgm`/`.png` maps.
    #[arg(required_unless_present = "manifest")]
    corpus: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Rerun exactly the configuration recorded in a benchmark manifest.
    #[arg(long, value_name = "PATH", conflicts_with = "corpus")]
    manifest: Option<PathBuf>,
    #[arg(long = "planner", value_delimiter = ',', default_value = "zhangsuen,ma,astar")]
    planners: Vec<Planner>,
    #[arg(long, default_value_t = 5)]
    queries: usize,
    #[arg(long, default_value_t = DEFAULT_SCOPE)]
    scope: f64,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    map: PathBuf,
    /// Path file as written by `plan`.
    #[arg(long, value_name = "PATH")]
    path: PathBuf,
    /// Trajectory CSV.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
    /// Position measurement noise, m.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Meters per cell.
    #[arg(long, default_value_t = 0.1)]
    cell_size: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_cell(s: &str) -> Result<(usize, usize), String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(x)?, parse(y)?))
}

/// An error plus the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub const EXIT_IO: u8 = 2;
pub const EXIT_NO_PATH: u8 = 3;
pub const EXIT_UNCONNECTABLE: u8 = 4;

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            code: EXIT_IO,
            error: e.into(),
        }
    }
}

impl Failure {
    pub fn roadmap(e: RoadmapError) -> Self {
        let code = match e {
            RoadmapError::NoPath => EXIT_NO_PATH,
            RoadmapError::UnconnectableStart | RoadmapError::UnconnectableGoal | RoadmapError::QueryNotFree(_) => {
                EXIT_UNCONNECTABLE
            }
            _ => EXIT_IO,
        };
        Failure { code, error: e.into() }
    }
}

/// Key/value results, printed as `key=value` under `--porcelain` and as an
/// aligned table otherwise.
#[derive(Default)]
pub struct Output {
    porcelain: bool,
    pairs: Vec<(String, String)>,
}

impl Output {
    pub fn add(&mut self, key: &str, value: impl ToString) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    fn print(&self) {
        let width = self.pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.pairs {
            if self.porcelain {
                println!("{k}={v}");
            } else {
                println!("{k:<width$}  {v}");
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    let mut out = Output {
        porcelain: cli.porcelain,
        ..Output::default()
    };
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a, &mut out),
        Command::Skeletonize(a) => commands::skeletonize(a, &mut out),
        Command::BuildRoadmap(a) => commands::build_roadmap(a, &mut out),
        Command::Plan(a) => commands::plan(a, &mut out),
        Command::Benchmark(a) => commands::benchmark(a, &mut out),
        Command::Simulate(a) => commands::simulate(a, &mut out),
    };
    out.print();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
