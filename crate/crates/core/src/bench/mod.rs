//! Benchmark suites: projected test functions, the kernel and baseline
//! choices compared on them, and the trace/summary files a run produces.
//!
//! Output layout of a suite directory:
//! - `suite.json`: the resolved configuration;
//! - `benchmarks.json`: base point, projection radius and `f*` per benchmark;
//! - `traces/<benchmark>__<kernel>__seed<k>.csv`: one file per cell;
//! - `summary.csv` and `plot_data.csv`: recomputed from the traces;
//! - `failures.log`: present only when a cell failed.

mod embedding;
mod functions;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use embedding::Embedding;
pub use functions::{
    ackley, grid_minimum, levy, pattern_search, random_refinement, rosenbrock, styblinski_tang, Domain,
    ProjectedObjective, TestFunction,
};

use crate::bo::{bo_run, BoConfig, BoTrace, Phase};
use crate::gp::{Bounds, FitConfig};
use crate::kernel::{Family, InputMap, KernelSpec, Smoothness, TruncationConfig};
use crate::manifold::{random_point, SamplingOptions};
use crate::optimize::{Constraint, ConstraintBox, TrustRegionConfig};
use crate::{rng, Error, Manifold, ManifoldPoint, Result};

/// Floor applied before taking log₁₀ of a regret.
pub const REGRET_FLOOR: f64 = 1e-12;

/// A surrogate model (or random search) compared in a suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelChoice {
    /// Riemannian SE (`nu = "inf"`) or Matérn kernel on the manifold.
    Geometric { nu: Smoothness },
    /// Euclidean kernel on embedding coordinates, box-constrained search.
    Euclidean { nu: Smoothness },
    /// `exp(−d²/2κ²)` on the manifold.
    NaiveGeodesic,
    /// Euclidean kernel on Cholesky-factor vectors of SPD points.
    Cholesky { nu: Smoothness },
    /// Product of a Euclidean kernel on eigenvalues and a circle kernel on
    /// the eigenvector angle (SPD(2) only).
    EigProduct { nu: Smoothness },
    /// Uniform random search with the same evaluation budget.
    RandomSearch,
}

fn nu_label(nu: Smoothness) -> String {
    match nu {
        Smoothness::Infinite => "se".into(),
        Smoothness::Finite(v) => format!("matern{v}"),
    }
}

impl KernelChoice {
    pub fn label(&self) -> String {
        match self {
            KernelChoice::Geometric { nu } => format!("geometric_{}", nu_label(*nu)),
            KernelChoice::Euclidean { nu } => format!("euclidean_{}", nu_label(*nu)),
            KernelChoice::NaiveGeodesic => "naive_geodesic_se".into(),
            KernelChoice::Cholesky { nu } => format!("cholesky_{}", nu_label(*nu)),
            KernelChoice::EigProduct { nu } => format!("eig_product_{}", nu_label(*nu)),
            KernelChoice::RandomSearch => "random_search".into(),
        }
    }

    fn euclidean_spec(nu: Smoothness, kappa: f64) -> KernelSpec {
        match nu {
            Smoothness::Infinite => KernelSpec::new(Family::EuclideanSe, nu, kappa, 1.0),
            Smoothness::Finite(_) => KernelSpec::new(Family::EuclideanMatern, nu, kappa, 1.0),
        }
    }

    /// Kernel template for the GP; `None` for random search.
    pub fn spec(&self, kappa: f64) -> Option<KernelSpec> {
        Some(match self {
            KernelChoice::Geometric { nu: Smoothness::Infinite } => KernelSpec::riemannian_se(kappa),
            KernelChoice::Geometric { nu } => KernelSpec::new(Family::RiemannianMatern, *nu, kappa, 1.0),
            KernelChoice::Euclidean { nu } => Self::euclidean_spec(*nu, kappa),
            KernelChoice::NaiveGeodesic => {
                KernelSpec::new(Family::NaiveGeodesicSe, Smoothness::Infinite, kappa, 1.0)
            }
            KernelChoice::Cholesky { nu } => KernelSpec::new(Family::CholeskyEuclidean, *nu, kappa, 1.0),
            KernelChoice::EigProduct { nu } => {
                let circle = match nu {
                    Smoothness::Infinite => KernelSpec::riemannian_se(kappa),
                    Smoothness::Finite(_) => KernelSpec::new(Family::RiemannianMatern, *nu, kappa, 1.0),
                };
                let mut s = KernelSpec::product(vec![Self::euclidean_spec(*nu, kappa), circle], 1.0);
                s.input_map = Some(InputMap::SpdEigen);
                s
            }
            KernelChoice::RandomSearch => return None,
        })
    }

    fn check(&self, m: &Manifold) -> Result<()> {
        let ok = match self {
            KernelChoice::Cholesky { .. } => matches!(m, Manifold::Spd { .. }),
            KernelChoice::EigProduct { .. } => matches!(m, Manifold::Spd { dim: 2 }),
            KernelChoice::Euclidean { .. } => !matches!(m, Manifold::Product { .. }),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("kernel {} does not apply to {m}", self.label())))
        }
    }
}

/// One objective on one manifold with the kernels compared on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    /// Label used in file names; defaults to the manifold label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub function: TestFunction,
    pub manifold: Manifold,
    /// Coordinates of the projection base point (the manifold origin if absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<f64>>,
    /// Tangent-ball radius on non-compact spaces.
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Length scale of the hidden-kernel bump.
    #[serde(default = "default_hidden_kappa")]
    pub hidden_kappa: f64,
    /// Eigenvalue box of SPD searches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintBox>,
    pub kernels: Vec<KernelChoice>,
}

fn default_radius() -> f64 {
    2.0
}

fn default_hidden_kappa() -> f64 {
    0.5
}

impl BenchmarkSpec {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.manifold.label())
    }

    pub fn base_point(&self) -> Result<ManifoldPoint> {
        match &self.base {
            Some(c) => ManifoldPoint::from_coords(&self.manifold, c),
            None => Ok(self.manifold.origin()),
        }
    }

    pub fn objective(&self) -> Result<ProjectedObjective> {
        let base = self.base_point()?;
        match self.function {
            TestFunction::HiddenKernelBump => ProjectedObjective::hidden_bump(&self.manifold, base, self.hidden_kappa),
            f => ProjectedObjective::new(f, &self.manifold, base, self.radius),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kernels.is_empty() {
            return Err(Error::Config(format!("benchmark {} has an empty kernel list", self.label())));
        }
        let label = self.label();
        if label.is_empty() || label.contains(['/', '\\', ',']) || label.contains("__") {
            return Err(Error::Config(format!("invalid benchmark name {label:?}")));
        }
        for k in &self.kernels {
            k.check(&self.manifold)?;
        }
        if self.constraint.is_some() && !matches!(self.manifold, Manifold::Spd { .. }) {
            return Err(Error::Config("eigenvalue constraints apply to SPD benchmarks only".into()));
        }
        self.objective().map(|_| ()).map_err(|e| Error::Config(format!("benchmark {label}: {e}")))
    }
}

/// BO settings shared by every cell of a suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoSettings {
    pub acq_starts: usize,
    pub acq_candidates: usize,
    pub acq: TrustRegionConfig,
    pub bounds: Bounds,
    /// Total GP restarts per refit, warm start included.
    pub fit_starts: usize,
    pub fit_max_iters: usize,
    /// Initial length scale of the first fit.
    pub kappa_init: f64,
    pub sampling: SamplingOptions,
    /// Truncation applied to every kernel of the suite.
    pub trunc: TruncationConfig,
}

impl Default for BoSettings {
    fn default() -> Self {
        BoSettings {
            acq_starts: 8,
            acq_candidates: 512,
            acq: TrustRegionConfig { max_iters: 30, grad_tol: 1e-7, ..Default::default() },
            bounds: Bounds::default(),
            fit_starts: 5,
            fit_max_iters: 15,
            kappa_init: 0.5,
            sampling: SamplingOptions::default(),
            trunc: TruncationConfig { zonal_table: Some(2048), series_tol: 1e-4, max_terms: 1000, ..Default::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub master_seed: u64,
    pub seeds: usize,
    pub iters: usize,
    pub n_init: usize,
    /// Regret level for `median_iter_to_threshold`.
    pub threshold: f64,
    /// Switches to 30 seeds × 200 iterations.
    pub full_scale: bool,
    pub bo: BoSettings,
    pub benchmarks: Vec<BenchmarkSpec>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            master_seed: 0,
            seeds: 10,
            iters: 100,
            n_init: 5,
            threshold: 1.0,
            full_scale: false,
            bo: BoSettings::default(),
            benchmarks: Vec::new(),
        }
    }
}

impl SuiteConfig {
    pub fn from_json(text: &str) -> Result<SuiteConfig> {
        let cfg: SuiteConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<SuiteConfig> {
        SuiteConfig::from_json(&fs::read_to_string(path)?)
    }

    /// Seeds and iterations after applying `full_scale`.
    pub fn scale(&self) -> (usize, usize) {
        if self.full_scale {
            (30, 200)
        } else {
            (self.seeds, self.iters)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.benchmarks.is_empty() {
            return Err(Error::Config("suite has no benchmarks".into()));
        }
        if self.seeds < 1 || self.n_init < 1 {
            return Err(Error::Config("seeds and n_init must be >= 1".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::Config("threshold must be positive".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for b in &self.benchmarks {
            b.validate()?;
            if !names.insert(b.label()) {
                return Err(Error::Config(format!("duplicate benchmark name {}", b.label())));
            }
        }
        Ok(())
    }
}

/// One (benchmark, kernel, seed) job.
#[derive(Clone, Debug)]
struct Cell {
    bench: usize,
    kernel: usize,
    seed_index: usize,
    seed: u64,
}

/// Outcome of [`run_suite`].
#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub cells: usize,
    /// `(trace file stem, error)` for every failed cell.
    pub failures: Vec<(String, String)>,
    pub summary: Vec<SummaryRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub manifold: String,
    pub kernel: String,
    pub seed: usize,
    pub final_log_regret: f64,
    /// Median over the group's seeds of the first iteration whose regret is
    /// at most the threshold (`inf` when the median run never gets there).
    pub median_iter_to_threshold: f64,
}

/// One trace row of a cell.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub seed: usize,
    pub iter: usize,
    pub phase: Phase,
    pub point: ManifoldPoint,
    pub y: f64,
    pub best_y: f64,
    pub regret: f64,
}

pub fn trace_file_stem(bench: &str, kernel: &str, seed_index: usize) -> String {
    format!("{bench}__{kernel}__seed{seed_index:03}")
}

fn point_field(p: &ManifoldPoint) -> String {
    p.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
}

fn phase_field(p: Phase) -> &'static str {
    match p {
        Phase::Init => "init",
        Phase::Bo => "bo",
    }
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["seed", "iter", "phase", "point", "y", "best_y", "regret"])?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.iter.to_string(),
            phase_field(r.phase).to_string(),
            point_field(&r.point),
            r.y.to_string(),
            r.best_y.to_string(),
            r.regret.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-cell search setup: the space searched by the acquisition optimizer
/// and how its points map to the benchmark manifold.
struct Search {
    space: Manifold,
    constraint: Option<Constraint>,
    embedding: Option<Embedding>,
}

impl Search {
    fn new(spec: &BenchmarkSpec, choice: &KernelChoice) -> Result<Search> {
        let eig = spec.constraint.map(Constraint::Eigenvalues);
        if let KernelChoice::Euclidean { .. } = choice {
            let range = spec.constraint.map(|b| (b.lambda_min, b.lambda_max)).unwrap_or((1e-3, 5.0));
            let emb = Embedding::new(&spec.manifold, spec.radius, range)?;
            return Ok(Search { space: emb.search_space(), constraint: Some(emb.constraint()), embedding: Some(emb) });
        }
        Ok(Search { space: spec.manifold.clone(), constraint: eig, embedding: None })
    }

    fn to_manifold(&self, x: &ManifoldPoint) -> Result<ManifoldPoint> {
        match &self.embedding {
            Some(e) => e.to_manifold(x),
            None => Ok(x.clone()),
        }
    }
}

fn random_search(
    objective: &ProjectedObjective,
    search: &Search,
    n: usize,
    n_init: usize,
    seed: u64,
    sampling: &SamplingOptions,
) -> Result<Vec<(ManifoldPoint, Phase, f64)>> {
    let mut r = rng::stream(seed, &[9]);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = match &search.constraint {
            Some(c) => c.sample(&mut r, &search.space)?,
            None => random_point(&mut r, &search.space, sampling)?,
        };
        let p = search.to_manifold(&x)?;
        let y = objective.eval(&p)?;
        out.push((p, if i < n_init { Phase::Init } else { Phase::Bo }, y));
    }
    Ok(out)
}

fn with_trunc(spec: &KernelSpec, t: &TruncationConfig) -> KernelSpec {
    let mut s = spec.clone();
    s.trunc = t.clone();
    s.factors = spec.factors.iter().map(|f| with_trunc(f, t)).collect();
    s
}

fn bo_config(cfg: &SuiteConfig, spec: &KernelSpec, search: &Search, seed: u64, iters: usize) -> BoConfig {
    BoConfig {
        n_init: cfg.n_init,
        n_iters: iters,
        acq_starts: cfg.bo.acq_starts,
        acq_candidates: cfg.bo.acq_candidates,
        seed,
        fit: FitConfig {
            spec: with_trunc(spec, &cfg.bo.trunc),
            bounds: cfg.bo.bounds.clone(),
            n_starts: cfg.bo.fit_starts,
            max_iters: cfg.bo.fit_max_iters,
            noise: cfg.bo.bounds.noise.0,
            ..FitConfig::default()
        },
        acq: cfg.bo.acq.clone(),
        constraint: search.constraint.clone(),
        sampling: cfg.bo.sampling.clone(),
    }
}

fn run_cell(
    cfg: &SuiteConfig,
    cell: &Cell,
    objective: &ProjectedObjective,
    f_star: f64,
    iters: usize,
) -> Result<Vec<TraceRow>> {
    let bench = &cfg.benchmarks[cell.bench];
    let choice = &bench.kernels[cell.kernel];
    let search = Search::new(bench, choice)?;
    let evals: Vec<(ManifoldPoint, Phase, f64)> = match choice.spec(cfg.bo.kappa_init) {
        None => random_search(objective, &search, cfg.n_init + iters, cfg.n_init, cell.seed, &cfg.bo.sampling)?,
        Some(spec) => {
            let bo = bo_config(cfg, &spec, &search, cell.seed, iters);
            let trace: BoTrace = bo_run(|x| objective.eval(&search.to_manifold(x)?), &search.space, &bo)?;
            if trace.aborted {
                return Err(Error::Objective(format!("aborted after {} failures", trace.failures)));
            }
            trace
                .records
                .iter()
                .map(|r| Ok((search.to_manifold(&r.query)?, r.phase, r.y)))
                .collect::<Result<_>>()?
        }
    };
    let mut best = f64::INFINITY;
    Ok(evals
        .into_iter()
        .enumerate()
        .map(|(i, (point, phase, y))| {
            best = best.min(y);
            TraceRow { seed: cell.seed_index, iter: i, phase, point, y, best_y: best, regret: best - f_star }
        })
        .collect())
}

#[derive(Serialize)]
struct BenchmarkRecord {
    name: String,
    function: TestFunction,
    manifold: Manifold,
    base: Vec<f64>,
    domain_extent: f64,
    scale: f64,
    f_star: f64,
    cut_locus_hits: usize,
}

/// Runs every cell with `jobs` worker threads (0 = rayon default), writes
/// the output directory and returns the report. Failed cells are logged and
/// skipped; callers decide the exit status from `report.failures`.
pub fn run_suite(cfg: &SuiteConfig, out: &Path, jobs: usize) -> Result<SuiteReport> {
    cfg.validate()?;
    let (n_seeds, iters) = cfg.scale();
    let traces = out.join("traces");
    fs::create_dir_all(&traces)?;
    fs::write(out.join("suite.json"), serde_json::to_string_pretty(cfg)?)?;

    let objectives: Vec<ProjectedObjective> =
        cfg.benchmarks.iter().map(BenchmarkSpec::objective).collect::<Result<_>>()?;
    let f_stars: Vec<f64> = objectives
        .iter()
        .enumerate()
        .map(|(b, o)| o.f_star(rng::derive_seed(cfg.master_seed, &[0xf5, b as u64])))
        .collect();

    let mut cells = Vec::new();
    for (b, bench) in cfg.benchmarks.iter().enumerate() {
        for k in 0..bench.kernels.len() {
            for s in 0..n_seeds {
                cells.push(Cell { bench: b, kernel: k, seed_index: s, seed: rng::derive_seed(cfg.master_seed, &[b as u64, s as u64]) });
            }
        }
    }

    let work = || {
        cells
            .par_iter()
            .map(|c| {
                let bench = &cfg.benchmarks[c.bench];
                let stem = trace_file_stem(&bench.label(), &bench.kernels[c.kernel].label(), c.seed_index);
                let path = traces.join(format!("{stem}.csv"));
                let res = run_cell(cfg, c, &objectives[c.bench], f_stars[c.bench], iters)
                    .and_then(|rows| write_trace(&path, &rows));
                res.map_err(|e| {
                    let _ = fs::remove_file(&path);
                    (stem, e.to_string())
                })
            })
            .collect::<Vec<_>>()
    };
    let results = if jobs == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work)
    };
    let failures: Vec<(String, String)> = results.into_iter().filter_map(|r| r.err()).collect();

    let records: Vec<BenchmarkRecord> = cfg
        .benchmarks
        .iter()
        .zip(&objectives)
        .zip(&f_stars)
        .map(|((b, o), f)| BenchmarkRecord {
            name: b.label(),
            function: b.function,
            manifold: b.manifold.clone(),
            base: o.base.coords(),
            domain_extent: o.domain.extent(),
            scale: o.scale(),
            f_star: *f,
            cut_locus_hits: o.cut_locus_hits(),
        })
        .collect();
    fs::write(out.join("benchmarks.json"), serde_json::to_string_pretty(&records)?)?;
    let log = out.join("failures.log");
    if failures.is_empty() {
        if log.exists() {
            fs::remove_file(&log)?;
        }
    } else {
        let text: String = failures.iter().map(|(c, e)| format!("{c}: {e}\n")).collect();
        fs::write(&log, text)?;
    }
    let summary = summarize(out)?;
    Ok(SuiteReport { cells: cells.len(), failures, summary })
}

/// Parsed trace file: `(benchmark, kernel, seed index, regret series)`.
pub fn read_trace(path: &Path) -> Result<(String, String, usize, Vec<f64>)> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let parts: Vec<&str> = stem.split("__").collect();
    let bad = || Error::Config(format!("unexpected trace file name {}", path.display()));
    if parts.len() != 3 {
        return Err(bad());
    }
    let seed: usize = parts[2].strip_prefix("seed").and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let mut rd = csv::Reader::from_path(path)?;
    let col = rd.headers()?.iter().position(|h| h == "regret").ok_or_else(bad)?;
    let mut regrets = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let v: f64 = rec[col].parse().map_err(|_| bad())?;
        regrets.push(v);
    }
    Ok((parts[0].to_string(), parts[1].to_string(), seed, regrets))
}

pub fn log_regret(r: f64) -> f64 {
    r.max(REGRET_FLOOR).log10()
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    let w = pos - lo as f64;
    if w == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        let (a, b) = (v[n / 2 - 1], v[n / 2]);
        if a.is_infinite() || b.is_infinite() {
            f64::INFINITY
        } else {
            0.5 * (a + b)
        }
    }
}

fn threshold_of(dir: &Path) -> f64 {
    fs::read_to_string(dir.join("suite.json"))
        .ok()
        .and_then(|t| serde_json::from_str::<SuiteConfig>(&t).ok())
        .map_or(SuiteConfig::default().threshold, |c| c.threshold)
}

/// Recomputes `summary.csv` and `plot_data.csv` from the trace files of a
/// suite directory. Rows are ordered by benchmark, kernel and seed.
pub fn summarize(dir: &Path) -> Result<Vec<SummaryRow>> {
    let threshold = threshold_of(dir);
    let mut files: Vec<PathBuf> = fs::read_dir(dir.join("traces"))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    let mut traces = files.iter().map(|p| read_trace(p)).collect::<Result<Vec<_>>>()?;
    traces.sort_by(|a, b| (&a.0, &a.1, a.2).cmp(&(&b.0, &b.1, b.2)));

    let mut rows = Vec::new();
    let mut plot = csv::Writer::from_path(dir.join("plot_data.csv"))?;
    plot.write_record(["manifold", "kernel", "iter", "q25", "median", "q75"])?;
    let mut i = 0;
    while i < traces.len() {
        let j = (i..traces.len()).find(|&j| traces[j].0 != traces[i].0 || traces[j].1 != traces[i].1).unwrap_or(traces.len());
        let group = &traces[i..j];
        let hit: Vec<f64> = group
            .iter()
            .map(|t| t.3.iter().position(|r| *r <= threshold).map_or(f64::INFINITY, |p| p as f64))
            .collect();
        let med = median(hit);
        for t in group {
            rows.push(SummaryRow {
                manifold: t.0.clone(),
                kernel: t.1.clone(),
                seed: t.2,
                final_log_regret: t.3.last().map_or(f64::NAN, |r| log_regret(*r)),
                median_iter_to_threshold: med,
            });
        }
        let len = group.iter().map(|t| t.3.len()).max().unwrap_or(0);
        for it in 0..len {
            let mut v: Vec<f64> = group.iter().filter_map(|t| t.3.get(it).map(|r| log_regret(*r))).collect();
            v.sort_by(f64::total_cmp);
            plot.write_record([
                group[0].0.clone(),
                group[0].1.clone(),
                it.to_string(),
                quantile(&v, 0.25).to_string(),
                quantile(&v, 0.5).to_string(),
                quantile(&v, 0.75).to_string(),
            ])?;
        }
        i = j;
    }
    plot.flush()?;

    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record(["manifold", "kernel", "seed", "final_log_regret", "median_iter_to_threshold"])?;
    for r in &rows {
        w.write_record([
            r.manifold.clone(),
            r.kernel.clone(),
            r.seed.to_string(),
            r.final_log_regret.to_string(),
            r.median_iter_to_threshold.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}
