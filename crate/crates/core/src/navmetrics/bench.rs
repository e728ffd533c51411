use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::stats::{summarize, Summary};
use super::{evaluate, MetricSample, DEFAULT_SCOPE};
use crate::geometry::{GeometryError, ObstacleSet};
use crate::gridmap::{distance_transform, ClearanceField, OccupancyGrid};
use crate::neuroskel::{self, NetworkParameters, NeuroError, DEFAULT_TAU};
use crate::point::Point;
use crate::roadmap::{self, BuildOptions, Path, Query, Roadmap, RoadmapError, DEFAULT_K};
use crate::skeleton::{self, SkeletonError, SkeletonMask};

pub const METRIC_NAMES: [&str; 5] = ["dtco", "av", "dsp", "cd", "trts"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Planner {
    SkelUnet,
    ZhangSuen,
    MedialAxis,
    GridAstar,
}

impl Planner {
    pub const ALL: [Planner; 4] = [
        Planner::SkelUnet,
        Planner::ZhangSuen,
        Planner::MedialAxis,
        Planner::GridAstar,
    ];

    /// Report name, e.g. `zhangsuen-roadmap`.
    pub fn name(self) -> &'static str {
        match self {
            Planner::SkelUnet => "skelunet-roadmap",
            Planner::ZhangSuen => "zhangsuen-roadmap",
            Planner::MedialAxis => "ma-roadmap",
            Planner::GridAstar => "grid-astar",
        }
    }

    /// Short command-line name.
    pub fn flag(self) -> &'static str {
        match self {
            Planner::SkelUnet => "skelunet",
            Planner::ZhangSuen => "zhangsuen",
            Planner::MedialAxis => "ma",
            Planner::GridAstar => "astar",
        }
    }

    pub fn uses_roadmap(self) -> bool {
        self != Planner::GridAstar
    }
}

impl fmt::Display for Planner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Planner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Planner::ALL
            .into_iter()
            .find(|p| p.name() == s || p.flag() == s)
            .ok_or_else(|| format!("unknown planner {s:?} (expected skelunet, zhangsuen, ma or astar)"))
    }
}

#[derive(Clone, Debug)]
pub struct PlannerSettings {
    pub k_nearest: usize,
    pub tau: f64,
    /// Random samples drawn by the medial-axis back-end.
    pub ma_samples: usize,
    pub ma_seed: u64,
    pub weights: Option<Arc<NetworkParameters>>,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        Self {
            k_nearest: DEFAULT_K,
            tau: DEFAULT_TAU,
            ma_samples: 100,
            ma_seed: 0,
            weights: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("the skelunet planner needs network weights")]
    MissingWeights,
    #[error("{0} does not build a roadmap")]
    NotARoadmapPlanner(Planner),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Neuro(#[from] NeuroError),
    #[error(transparent)]
    Roadmap(#[from] RoadmapError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Skeleton mask for a roadmap planner.
pub fn skeletonize(
    planner: Planner,
    grid: &OccupancyGrid,
    field: &ClearanceField,
    settings: &PlannerSettings,
) -> Result<SkeletonMask, PlanError> {
    match planner {
        Planner::ZhangSuen => Ok(skeleton::zhang_suen(grid)),
        Planner::MedialAxis => Ok(skeleton::medial_axis_mask(
            grid,
            field,
            settings.ma_samples,
            settings.ma_seed,
        )?),
        Planner::SkelUnet => {
            let params = settings.weights.as_ref().ok_or(PlanError::MissingWeights)?;
            let pmap = neuroskel::forward(params, grid)?;
            Ok(neuroskel::apply_threshold(&pmap, settings.tau, grid)?)
        }
        Planner::GridAstar => Err(PlanError::NotARoadmapPlanner(planner)),
    }
}

/// Everything precomputed for one map: clearance, obstacle polygons and one
/// roadmap per requested roadmap planner. Queries only read from it.
pub struct MapContext {
    pub grid: OccupancyGrid,
    pub field: ClearanceField,
    pub obstacles: ObstacleSet,
    roadmaps: BTreeMap<Planner, Result<Roadmap, String>>,
}

impl MapContext {
    pub fn new(grid: OccupancyGrid, planners: &[Planner], settings: &PlannerSettings) -> Result<Self, PlanError> {
        let field = distance_transform(&grid);
        let obstacles = ObstacleSet::from_grid(&grid)?;
        let mut roadmaps = BTreeMap::new();
        let options = BuildOptions {
            k_nearest: settings.k_nearest,
            stride: 1,
        };
        for &p in planners.iter().filter(|p| p.uses_roadmap()) {
            let built = skeletonize(p, &grid, &field, settings)
                .and_then(|mask| Ok(roadmap::build_graph(&mask, &grid, &obstacles, options)?))
                .map_err(|e| e.to_string());
            roadmaps.insert(p, built);
        }
        Ok(Self {
            grid,
            field,
            obstacles,
            roadmaps,
        })
    }

    pub fn roadmap(&self, planner: Planner) -> Option<Result<&Roadmap, &str>> {
        self.roadmaps.get(&planner).map(|r| r.as_ref().map_err(String::as_str))
    }

    pub fn plan(&self, planner: Planner, query: Query) -> Result<Path, String> {
        if planner == Planner::GridAstar {
            return roadmap::grid_astar(&self.grid, &query).map_err(|e| e.to_string());
        }
        let map = self
            .roadmap(planner)
            .ok_or_else(|| format!("{planner} was not prepared for this map"))??;
        let overlay = roadmap::connect_query(map, query, &self.obstacles).map_err(|e| e.to_string())?;
        roadmap::path_search(&overlay).map_err(|e| e.to_string())
    }
}

/// `n` queries between free-cell centers, each pair drawn from one 4-connected
/// free component. Deterministic in `(seed, stream)`.
pub fn sample_queries(grid: &OccupancyGrid, n: usize, seed: u64, stream: u64) -> Vec<Query> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let (labels, count) = grid.free_components();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (i, l) in labels.iter().enumerate() {
        if let Some(l) = l {
            members[*l].push(i);
        }
    }
    let free: Vec<usize> = (0..grid.len()).filter(|&i| labels[i].is_some()).collect();
    if free.is_empty() {
        return Vec::new();
    }
    let center = |i: usize| Point::cell_center(i % grid.width(), i / grid.width());
    (0..n)
        .map(|_| {
            let s = free[rng.random_range(0..free.len())];
            let comp = &members[labels[s].unwrap()];
            let g = comp[rng.random_range(0..comp.len())];
            Query::new(center(s), center(g))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct BenchmarkConfig {
    pub planners: Vec<Planner>,
    pub queries_per_map: usize,
    pub seed: u64,
    pub scope: f64,
    pub settings: PlannerSettings,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            planners: vec![Planner::ZhangSuen, Planner::MedialAxis, Planner::GridAstar],
            queries_per_map: 5,
            seed: 0,
            scope: DEFAULT_SCOPE,
            settings: PlannerSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub map: String,
    pub query: usize,
    pub planner: Planner,
    /// Metrics, or the reason the planner produced no path.
    pub outcome: Result<MetricSample, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub planner: Planner,
    pub metric: &'static str,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkReport {
    pub planners: Vec<Planner>,
    /// One row per (map, query, planner), in that order.
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<Aggregate>,
}

#[derive(Debug, Error, PartialEq)]
pub enum BenchError {
    #[error("benchmark corpus is empty")]
    EmptyCorpus,
}

pub fn run_benchmark(
    corpus: &[(String, OccupancyGrid)],
    config: &BenchmarkConfig,
) -> Result<BenchmarkReport, BenchError> {
    if corpus.is_empty() {
        return Err(BenchError::EmptyCorpus);
    }
    let per_map: Vec<Vec<BenchRow>> = corpus
        .par_iter()
        .enumerate()
        .map(|(mi, (name, grid))| {
            let settings = PlannerSettings {
                ma_seed: config.settings.ma_seed ^ mi as u64,
                ..config.settings.clone()
            };
            let queries = sample_queries(grid, config.queries_per_map, config.seed, mi as u64);
            let ctx = MapContext::new(grid.clone(), &config.planners, &settings);
            let mut rows = Vec::new();
            for qi in 0..config.queries_per_map {
                for &planner in &config.planners {
                    let outcome = match (&ctx, queries.get(qi)) {
                        (Err(e), _) => Err(e.to_string()),
                        (_, None) => Err("map has no free cell".to_string()),
                        (Ok(ctx), Some(&q)) => ctx
                            .plan(planner, q)
                            .map(|path| evaluate(&path, &q, &ctx.grid, &ctx.field, config.scope)),
                    };
                    rows.push(BenchRow {
                        map: name.clone(),
                        query: qi,
                        planner,
                        outcome,
                    });
                }
            }
            rows
        })
        .collect();
    let rows: Vec<BenchRow> = per_map.into_iter().flatten().collect();
    let mut report = BenchmarkReport {
        planners: config.planners.clone(),
        rows,
        aggregates: Vec::new(),
    };
    report.aggregates = report.compute_aggregates();
    Ok(report)
}

impl BenchmarkReport {
    pub fn successes(&self) -> impl Iterator<Item = (&BenchRow, &MetricSample)> {
        self.rows.iter().filter_map(|r| r.outcome.as_ref().ok().map(|m| (r, m)))
    }

    pub fn failure_count(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Successful values of metric `metric` (index into [`METRIC_NAMES`]).
    pub fn values(&self, planner: Planner, metric: usize) -> Vec<f64> {
        self.successes()
            .filter(|(r, _)| r.planner == planner)
            .map(|(_, m)| m.values()[metric])
            .collect()
    }

    /// `a − b` for metric `metric` over the (map, query) pairs both planners
    /// solved.
    pub fn paired_differences(&self, a: Planner, b: Planner, metric: usize) -> Vec<f64> {
        let mut by_key: BTreeMap<(&str, usize), [Option<f64>; 2]> = BTreeMap::new();
        for (r, m) in self.successes() {
            let slot = if r.planner == a {
                0
            } else if r.planner == b {
                1
            } else {
                continue;
            };
            by_key.entry((r.map.as_str(), r.query)).or_default()[slot] = Some(m.values()[metric]);
        }
        by_key.values().filter_map(|v| Some(v[0]? - v[1]?)).collect()
    }

    pub fn compute_aggregates(&self) -> Vec<Aggregate> {
        let mut out = Vec::new();
        for &planner in &self.planners {
            for (mi, metric) in METRIC_NAMES.iter().enumerate() {
                out.push(Aggregate {
                    planner,
                    metric,
                    summary: summarize(&self.values(planner, mi)),
                });
            }
        }
        out
    }

    pub fn aggregate(&self, planner: Planner, metric: &str) -> Option<&Summary> {
        self.aggregates
            .iter()
            .find(|a| a.planner == planner && a.metric == metric)
            .map(|a| &a.summary)
    }

    /// `map,query,planner,dtco,av,dsp,cd,trts,status`; failed rows leave the
    /// metric columns empty and put the reason in `status`.
    pub fn rows_csv(&self) -> String {
        let mut s = String::from("map,query,planner,dtco,av,dsp,cd,trts,status\n");
        for r in &self.rows {
            let _ = write!(s, "{},{},{},", r.map, r.query, r.planner);
            match &r.outcome {
                Ok(m) => {
                    let _ = writeln!(s, "{},{},{},{},{},ok", m.dtco, m.av, m.dsp, m.cd, m.trts);
                }
                Err(reason) => {
                    let _ = writeln!(s, ",,,,,\"{}\"", reason.replace('"', "'"));
                }
            }
        }
        s
    }

    pub fn aggregates_csv(&self) -> String {
        let mut s = String::from("planner,metric,min,max,mean,std,count\n");
        for a in &self.aggregates {
            let m = &a.summary;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                a.planner, a.metric, m.min, m.max, m.mean, m.std, m.count
            );
        }
        s
    }
}
