use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use skelroad::geometry::ObstacleSet;
use skelroad::gridmap::io::read_map_file;
use skelroad::gridmap::{distance_transform, generate_dungeon, save_map, GenParams, MapFormat, MapMeta, OccupancyGrid};
use skelroad::navmetrics::{
    self, evaluate, plot::box_plot_svg, run_benchmark, BenchmarkConfig, Planner, PlannerSettings, METRIC_NAMES,
};
use skelroad::neuroskel::load_weights;
use skelroad::roadmap::{
    build_graph, component_count, connect_query, grid_astar, path_search, BuildOptions, Path, Query, Roadmap,
};
use skelroad::simexec::{audit_collisions, overlay_svg, track, trajectory_csv, RobotParams, SimError, TrackConfig};
use skelroad::Point;

use crate::manifest::{self, BenchmarkManifest, GenerateManifest, VERSION};
use crate::{
    BenchmarkArgs, BuildRoadmapArgs, Failure, GenerateArgs, Output, PlanArgs, SimulateArgs, SkeletonizeArgs, Tuning,
    EXIT_IO,
};

type CmdResult = Result<(), Failure>;

fn ms(t: Instant) -> String {
    format!("{:.3}", t.elapsed().as_secs_f64() * 1e3)
}

fn write(path: &FsPath, bytes: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read_map(path: &FsPath) -> anyhow::Result<OccupancyGrid> {
    read_map_file(path).with_context(|| format!("reading map {}", path.display()))
}

impl Tuning {
    fn settings(&self, planners: &[Planner]) -> Result<PlannerSettings, Failure> {
        let weights = match &self.weights {
            Some(p) => {
                let bytes = fs::read(p).with_context(|| format!("reading weights {}", p.display()))?;
                let params = load_weights(&bytes).with_context(|| format!("loading weights {}", p.display()))?;
                Some(Arc::new(params))
            }
            None if planners.contains(&Planner::SkelUnet) => {
                return Err(anyhow!("the skelunet planner needs --weights").into());
            }
            None => None,
        };
        Ok(PlannerSettings {
            k_nearest: self.k_nearest,
            tau: self.tau,
            ma_samples: self.ma_samples,
            ma_seed: self.seed,
            weights,
        })
    }
}

pub fn generate(a: GenerateArgs, out: &mut Output) -> CmdResult {
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let base = GenParams {
        width: a.width,
        height: a.height,
        corridor_width: a.corridor_width,
        ..GenParams::default()
    };
    base.validate()?;
    let t = Instant::now();
    (0..a.count).into_par_iter().try_for_each(|i| -> anyhow::Result<()> {
        let params = base.clone().with_seed(a.seed.wrapping_add(i as u64));
        let grid = generate_dungeon(&params).with_context(|| format!("map {i}"))?;
        let stem = a.out.join(format!("map_{i:05}"));
        write(&stem.with_extension("pgm"), save_map(&grid, MapFormat::PgmBinary))?;
        let mut meta = MapMeta::default();
        for (k, v) in [
            ("seed", params.seed.to_string()),
            ("width", params.width.to_string()),
            ("height", params.height.to_string()),
            (
                "room_count",
                format!("{}-{}", params.room_count.start(), params.room_count.end()),
            ),
            (
                "room_size",
                format!("{}-{}", params.room_size.start(), params.room_size.end()),
            ),
            ("corridor_width", params.corridor_width.to_string()),
            ("generator", format!("skelroad {VERSION}")),
        ] {
            meta.0.insert(k.to_string(), v);
        }
        write(&stem.with_extension("meta"), meta.to_text())
    })?;
    let wall = t.elapsed().as_secs_f64();
    let m = GenerateManifest {
        version: VERSION.to_string(),
        seed: a.seed,
        count: a.count,
        width: a.width,
        height: a.height,
        room_count: [*base.room_count.start(), *base.room_count.end()],
        room_size: [*base.room_size.start(), *base.room_size.end()],
        corridor_width: a.corridor_width,
        wall_time_s: wall,
    };
    manifest::write(&a.out.join("manifest.json"), &m)?;
    out.add("maps", a.count);
    out.add("wall_time_s", format!("{wall:.3}"));
    Ok(())
}

pub fn skeletonize(a: SkeletonizeArgs, out: &mut Output) -> CmdResult {
    let grid = read_map(&a.map)?;
    let settings = a.tuning.settings(&[a.planner])?;
    let field = distance_transform(&grid);
    let t = Instant::now();
    let mask = navmetrics::skeletonize(a.planner, &grid, &field, &settings)?;
    let elapsed = ms(t);
    let format = MapFormat::from_path(&a.out).unwrap_or(MapFormat::PgmBinary);
    write(&a.out, mask.encode(format))?;
    out.add("planner", a.planner);
    out.add("pixels", mask.count());
    out.add("components", mask.component_count());
    out.add("skeleton_ms", elapsed);
    Ok(())
}

/// Skeleton plus roadmap for one map, with the time spent in each.
fn offline_phase(
    planner: Planner,
    grid: &OccupancyGrid,
    obstacles: &ObstacleSet,
    tuning: &Tuning,
    out: &mut Output,
) -> Result<Roadmap, Failure> {
    let settings = tuning.settings(&[planner])?;
    let field = distance_transform(grid);
    let t = Instant::now();
    let mask = navmetrics::skeletonize(planner, grid, &field, &settings)?;
    out.add("skeleton_ms", ms(t));
    let t = Instant::now();
    let options = BuildOptions {
        k_nearest: tuning.k_nearest,
        stride: 1,
    };
    let roadmap = build_graph(&mask, grid, obstacles, options).map_err(Failure::roadmap)?;
    out.add("build_ms", ms(t));
    Ok(roadmap)
}

pub fn build_roadmap(a: BuildRoadmapArgs, out: &mut Output) -> CmdResult {
    if !a.planner.uses_roadmap() {
        return Err(anyhow!("{} does not build a roadmap", a.planner).into());
    }
    let grid = read_map(&a.map)?;
    let obstacles = ObstacleSet::from_grid(&grid)?;
    out.add("planner", a.planner);
    let roadmap = offline_phase(a.planner, &grid, &obstacles, &a.tuning, out)?;
    write(&a.out, roadmap.to_text())?;
    out.add("vertices", roadmap.vertex_count());
    out.add("edges", roadmap.edge_count());
    out.add("components", component_count(&roadmap));
    Ok(())
}

pub fn plan(a: PlanArgs, out: &mut Output) -> CmdResult {
    let grid = read_map(&a.map)?;
    for (name, (x, y)) in [("start", a.start), ("goal", a.goal)] {
        if x >= grid.width() || y >= grid.height() {
            return Err(anyhow!(
                "{name} cell ({x}, {y}) is outside the {}x{} map",
                grid.width(),
                grid.height()
            )
            .into());
        }
    }
    let query = Query::new(
        Point::cell_center(a.start.0, a.start.1),
        Point::cell_center(a.goal.0, a.goal.1),
    );
    out.add("planner", a.planner);
    let path = if a.planner == Planner::GridAstar {
        if a.roadmap.is_some() {
            return Err(anyhow!("astar plans on the grid and takes no --roadmap").into());
        }
        let t = Instant::now();
        let path = grid_astar(&grid, &query).map_err(Failure::roadmap)?;
        out.add("online_ms", ms(t));
        path
    } else {
        let obstacles = ObstacleSet::from_grid(&grid)?;
        let roadmap = match &a.roadmap {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let t = Instant::now();
                let r = Roadmap::parse(&text).map_err(Failure::roadmap)?;
                out.add("load_ms", ms(t));
                r
            }
            None => offline_phase(a.planner, &grid, &obstacles, &a.tuning, out)?,
        };
        let t = Instant::now();
        let overlay = connect_query(&roadmap, query, &obstacles).map_err(Failure::roadmap)?;
        let path = path_search(&overlay).map_err(Failure::roadmap)?;
        out.add("online_ms", ms(t));
        path
    };
    write(&a.out, path.to_text())?;
    let svg = a.svg.unwrap_or_else(|| a.out.with_extension("svg"));
    write(&svg, overlay_svg(&grid, &path, None))?;
    let field = distance_transform(&grid);
    let metrics = evaluate(&path, &query, &grid, &field, a.scope);
    out.add("length", format!("{:.6}", path.length));
    out.add("waypoints", path.waypoints.len());
    for (name, v) in METRIC_NAMES.iter().zip(metrics.values()) {
        out.add(name, format!("{v:.6}"));
    }
    Ok(())
}

fn map_files(dir: &FsPath) -> anyhow::Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if MapFormat::from_path(&path).is_some() {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                names.push(name.to_string());
            }
        }
    }
    names.sort();
    Ok(names)
}

pub fn benchmark(a: BenchmarkArgs, out: &mut Output) -> CmdResult {
    let plan = match (&a.manifest, &a.corpus) {
        (Some(m), _) => manifest::read::<BenchmarkManifest>(m)?,
        (None, Some(dir)) => {
            let corpus = fs::canonicalize(dir).with_context(|| format!("opening corpus {}", dir.display()))?;
            BenchmarkManifest {
                version: VERSION.to_string(),
                maps: map_files(&corpus)?,
                corpus,
                planners: a.planners.iter().map(|p| p.flag().to_string()).collect(),
                queries: a.queries,
                seed: a.tuning.seed,
                scope: a.scope,
                k_nearest: a.tuning.k_nearest,
                tau: a.tuning.tau,
                ma_samples: a.tuning.ma_samples,
                weights: a.tuning.weights.clone(),
                failed_rows: 0,
                wall_time_s: 0.0,
            }
        }
        (None, None) => unreachable!("clap requires a corpus or a manifest"),
    };
    let planners = plan
        .planners
        .iter()
        .map(|p| p.parse::<Planner>().map_err(|e| anyhow!(e)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let tuning = Tuning {
        k_nearest: plan.k_nearest,
        tau: plan.tau,
        weights: plan.weights.clone(),
        ma_samples: plan.ma_samples,
        seed: plan.seed,
    };
    let settings = tuning.settings(&planners)?;

    let t = Instant::now();
    let mut corpus = Vec::new();
    for name in &plan.maps {
        match read_map(&plan.corpus.join(name)) {
            Ok(g) => corpus.push((stem(name), g)),
            Err(e) => eprintln!("warning: skipping {name}: {e:#}"),
        }
    }
    let config = BenchmarkConfig {
        planners,
        queries_per_map: plan.queries,
        seed: plan.seed,
        scope: plan.scope,
        settings,
    };
    let report = run_benchmark(&corpus, &config)?;
    let wall = t.elapsed().as_secs_f64();
    for r in &report.rows {
        if let Err(reason) = &r.outcome {
            eprintln!("warning: {} query {} {}: {reason}", r.map, r.query, r.planner);
        }
    }

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write(&a.out.join("rows.csv"), report.rows_csv())?;
    write(&a.out.join("aggregates.csv"), report.aggregates_csv())?;
    for (i, name) in METRIC_NAMES.iter().enumerate() {
        write(&a.out.join(format!("plot_{name}.svg")), box_plot_svg(&report, i))?;
    }
    let record = BenchmarkManifest {
        failed_rows: report.failure_count(),
        wall_time_s: wall,
        ..plan
    };
    manifest::write(&a.out.join("manifest.json"), &record)?;

    out.add("maps", corpus.len());
    out.add("rows", report.rows.len());
    out.add("failed_rows", report.failure_count());
    out.add("wall_time_s", format!("{wall:.3}"));
    for agg in &report.aggregates {
        out.add(
            &format!("{}.{}", agg.planner.flag(), agg.metric),
            format!("{:.6}", agg.summary.mean),
        );
    }
    Ok(())
}

fn stem(name: &str) -> String {
    PathBuf::from(name)
        .file_stem()
        .map_or_else(|| name.to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn simulate(a: SimulateArgs, out: &mut Output) -> CmdResult {
    let grid = read_map(&a.map)?;
    let text = fs::read_to_string(&a.path).with_context(|| format!("reading {}", a.path.display()))?;
    let path = Path::parse(&text).map_err(|e| Failure {
        code: EXIT_IO,
        error: anyhow!(e).context(format!("parsing {}", a.path.display())),
    })?;
    let robot = RobotParams {
        cell_size: a.cell_size,
        ..RobotParams::default()
    };
    let config = TrackConfig {
        noise_sigma: a.noise,
        seed: a.seed,
        ..TrackConfig::default()
    };
    let traj = match track(&path, &robot, &config) {
        Ok(t) => t,
        Err(SimError::TrackingTimeout(t)) => {
            eprintln!("warning: tracking timed out; writing the partial trajectory");
            *t
        }
        Err(e) => return Err(e.into()),
    };
    let field = distance_transform(&grid);
    let report = audit_collisions(&traj, &grid, &field, &robot);
    write(&a.out, trajectory_csv(&traj, &report))?;
    if let Some(svg) = &a.svg {
        write(svg, overlay_svg(&grid, &path, Some((&traj, &report, robot.cell_size))))?;
    }
    out.add("samples", traj.samples.len());
    out.add("duration_s", format!("{:.2}", traj.samples.last().map_or(0.0, |s| s.t)));
    out.add("captured", traj.captured);
    out.add("timed_out", traj.timed_out);
    out.add("risk_fraction", format!("{:.6}", report.risk_fraction()));
    out.add("collision_fraction", format!("{:.6}", report.collision_fraction()));
    Ok(())
}
