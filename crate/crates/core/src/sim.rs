//! Simulation runs: configuration, seeded initial states, per-step metrics,
//! snapshots, and batches over consecutive seeds.
//!
//! Random numbers come from xoshiro256** seeded through
//! `Xoshiro256StarStar::seed_from_u64`, so a seed fixes a run bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{DensityField, Quadrature};
use crate::dynamics::{Law, LawParams, ParamOverrides, Scheme, State, Stepper, System};
use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, GeneratorSet, Point};
use crate::metrics::PartitionMetrics;

/// Draws tried before [`init_state`] gives up.
pub const MAX_INIT_DRAWS: usize = 100_000;
/// Minimum initial separation, relative to the workspace diameter.
pub const INIT_SEPARATION: f64 = 1e-6;

fn default_dt() -> f64 {
    0.01
}

fn default_steps() -> usize {
    800
}

/// Where a run writes its files, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub csv: String,
    /// Snapshot every this many steps; the final state is always saved.
    /// Zero keeps only the final one.
    pub snapshot_every: usize,
    /// Write an SVG next to every JSON snapshot.
    pub svg: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            csv: "metrics.csv".into(),
            snapshot_every: 100,
            svg: true,
        }
    }
}

/// One simulation, as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub region: ConvexPolygon,
    pub density: DensityField,
    pub m: usize,
    pub law: Law,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: ParamOverrides,
    #[serde(default)]
    pub outputs: Outputs,
}

impl SimConfig {
    /// Ten agents on the unit square under the combined law, 800 steps of
    /// 0.01.
    pub fn unit_square(density: DensityField, seed: u64) -> Self {
        Self {
            region: ConvexPolygon::unit_square(),
            density,
            m: 10,
            law: Law::Combined,
            dt: default_dt(),
            steps: default_steps(),
            seed,
            params: ParamOverrides::default(),
            outputs: Outputs::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if self.region.is_empty() {
            return Err(Error::InvalidPolygon("region is empty".into()));
        }
        self.density.validate()?;
        self.law_params().validate(self.m)?;
        if let Law::Beta(beta) = &self.law {
            if beta.len() != self.m {
                return bad(format!("{} target fractions for m = {}", beta.len(), self.m));
            }
        }
        Ok(())
    }

    /// Defaults for the region with the config's overrides applied.
    pub fn law_params(&self) -> LawParams {
        LawParams::for_region(&self.region).with_overrides(&self.params)
    }

    pub fn system(&self) -> Result<System> {
        System::new(
            self.region.clone(),
            self.density.clone(),
            Quadrature::default(),
            self.law.clone(),
            self.law_params(),
        )
    }
}

/// Independent uniform positions in the region, at least
/// `INIT_SEPARATION·diameter` apart, with zero weights.
pub fn init_state(config: &SimConfig) -> Result<GeneratorSet> {
    init_with_budget(config, MAX_INIT_DRAWS)
}

fn init_with_budget(config: &SimConfig, max_draws: usize) -> Result<GeneratorSet> {
    let region = &config.region;
    let mut rng = Xoshiro256StarStar::seed_from_u64(config.seed);
    let (x0, x1) = region.extent(Point::new(1.0, 0.0));
    let (y0, y1) = region.extent(Point::new(0.0, 1.0));
    let min_sep = INIT_SEPARATION * region.diameter();
    let mut points: Vec<Point> = Vec::with_capacity(config.m);
    let mut draws = 0;
    while points.len() < config.m {
        if draws == max_draws {
            return Err(Error::InitFailed(config.m, draws));
        }
        draws += 1;
        let p = Point::new(x0 + (x1 - x0) * rng.random::<f64>(), y0 + (y1 - y0) * rng.random::<f64>());
        if region.contains(p) && points.iter().all(|q| q.distance(p) >= min_sep) {
            points.push(p);
        }
    }
    GeneratorSet::unweighted(points)
}

/// One line of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: usize,
    pub t: f64,
    #[serde(rename = "HV")]
    pub hv: f64,
    pub area_error: f64,
    pub voronoi_defect: f64,
    #[serde(rename = "Q_mean")]
    pub q_mean: f64,
    pub min_cell_measure: f64,
    pub max_cell_measure: f64,
    pub sum_weights: f64,
    /// Shortest accepted sub-step within the step (0 for the initial row).
    pub dt_effective: f64,
}

impl MetricsRow {
    fn new(step: usize, t: f64, dt_effective: f64, state: &State) -> Self {
        let m = PartitionMetrics::new(&state.eval, &state.gens);
        Self {
            step,
            t,
            hv: state.objective,
            area_error: m.area_error,
            voronoi_defect: m.voronoi_defect,
            q_mean: m.q_mean,
            min_cell_measure: m.min_cell_measure(),
            max_cell_measure: m.max_cell_measure(),
            sum_weights: state.gens.weights().iter().sum(),
            dt_effective,
        }
    }
}

/// Everything needed to rebuild a state and its metrics row exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub dt_effective: f64,
    pub region: ConvexPolygon,
    pub density: DensityField,
    /// Measure shares the objective aims at, if not all equal.
    pub targets: Option<Vec<f64>>,
    pub positions: Vec<Point>,
    pub weights: Vec<f64>,
    pub cells: Vec<ConvexPolygon>,
}

impl Snapshot {
    fn new(step: usize, t: f64, dt_effective: f64, sys: &System, state: &State) -> Self {
        Self {
            step,
            t,
            dt_effective,
            region: sys.region.clone(),
            density: sys.density.clone(),
            targets: sys.targets().map(<[f64]>::to_vec),
            positions: state.gens.positions().to_vec(),
            weights: state.gens.weights().to_vec(),
            cells: state.eval.diagram.cells().to_vec(),
        }
    }

    /// Re-evaluates the stored generators.
    pub fn state(&self) -> Result<State> {
        let gens = GeneratorSet::new(self.positions.clone(), self.weights.clone())?;
        let eval = crate::dynamics::Evaluation::new(&self.region, &gens, &self.density, &Quadrature::default())?;
        let objective = eval.objective(self.targets.as_deref())?;
        Ok(State { gens, eval, objective })
    }

    /// The metrics row of this snapshot, recomputed from the generators.
    pub fn row(&self) -> Result<MetricsRow> {
        Ok(MetricsRow::new(self.step, self.t, self.dt_effective, &self.state()?))
    }

    pub fn metrics(&self) -> Result<PartitionMetrics> {
        let s = self.state()?;
        Ok(PartitionMetrics::new(&s.eval, &s.gens))
    }

    /// Cells, generators (squares) and cell centroids (circles).
    pub fn to_svg(&self) -> String {
        partition_svg(&self.region, &self.cells, &self.positions, &format!("step {} t = {}", self.step, self.t))
    }
}

/// SVG drawing of a partition: the region, every nonempty cell with its
/// centroid as a circle, and `generators` as squares.
pub fn partition_svg(region: &ConvexPolygon, cells: &[ConvexPolygon], generators: &[Point], title: &str) -> String {
    let size = 600.0;
    let pad = 20.0;
    let (x0, x1) = region.extent(Point::new(1.0, 0.0));
    let (y0, y1) = region.extent(Point::new(0.0, 1.0));
    let scale = (size - 2.0 * pad) / (x1 - x0).max(y1 - y0);
    let map = |p: Point| (pad + (p.x - x0) * scale, size - pad - (p.y - y0) * scale);
    let path = |poly: &ConvexPolygon| {
        poly.vertices()
            .iter()
            .map(|v| {
                let (x, y) = map(*v);
                format!("{x:.3},{y:.3}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(s, "<title>{title}</title>");
    let _ = writeln!(s, r##"<polygon points="{}" fill="#ffffff" stroke="#000000" stroke-width="2"/>"##, path(region));
    for cell in cells.iter().filter(|c| !c.is_empty()) {
        let _ = writeln!(s, r##"<polygon points="{}" fill="#dfe8f5" stroke="#1f3b73" stroke-width="1"/>"##, path(cell));
        if let Some(c) = cell.centroid() {
            let (x, y) = map(c);
            let _ = writeln!(s, r##"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="#c0392b"/>"##);
        }
    }
    for g in generators {
        let (x, y) = map(*g);
        let _ = writeln!(
            s,
            r##"<rect x="{:.3}" y="{:.3}" width="8" height="8" fill="#f1c40f" stroke="#000000" stroke-width="0.5"/>"##,
            x - 4.0,
            y - 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Completed,
    /// Step `step` could not be taken; earlier rows are kept.
    Failed { step: usize, error: String },
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: SimConfig,
    pub scheme: Scheme,
    pub rows: Vec<MetricsRow>,
    pub snapshots: Vec<Snapshot>,
    pub outcome: RunOutcome,
    pub final_metrics: PartitionMetrics,
    pub substeps: usize,
    pub wall_time: Duration,
}

impl RunRecord {
    pub fn final_row(&self) -> &MetricsRow {
        self.rows.last().expect("a run records its initial row")
    }

    /// Writes the CSV, the snapshots, and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let csv_path = dir.join(&self.config.outputs.csv);
        write_csv(&csv_path, &self.rows)?;
        written.push(csv_path);
        for snap in &self.snapshots {
            let json = dir.join(format!("snapshot_{:05}.json", snap.step));
            fs::write(&json, serde_json::to_string_pretty(snap)?)?;
            written.push(json);
            if self.config.outputs.svg {
                let svg = dir.join(format!("snapshot_{:05}.svg", snap.step));
                fs::write(&svg, snap.to_svg())?;
                written.push(svg);
            }
        }
        let summary = dir.join("summary.json");
        let body = serde_json::json!({
            "config": self.config,
            "scheme": self.scheme,
            "outcome": self.outcome,
            "final": self.final_metrics,
            "substeps": self.substeps,
            "wall_time_s": self.wall_time.as_secs_f64(),
        });
        fs::write(&summary, serde_json::to_string_pretty(&body)?)?;
        written.push(summary);
        Ok(written)
    }
}

fn write_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a metrics CSV written by [`RunRecord::write`].
pub fn read_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidParams(format!("csv: {other:?}")),
    }
}

/// Runs `config` with the default integration scheme.
pub fn run(config: &SimConfig) -> Result<RunRecord> {
    run_with(config, Scheme::default())
}

/// Runs `config.steps` steps of length `config.dt`. Invalid configurations
/// are errors; a step that cannot be taken ends the run early with
/// [`RunOutcome::Failed`].
pub fn run_with(config: &SimConfig, scheme: Scheme) -> Result<RunRecord> {
    let started = Instant::now();
    config.validate()?;
    let sys = config.system()?;
    let mut state = sys.state(init_state(config)?)?;
    let every = config.outputs.snapshot_every;
    let mut rows = vec![MetricsRow::new(0, 0.0, 0.0, &state)];
    let mut snapshots = Vec::new();
    if every > 0 {
        snapshots.push(Snapshot::new(0, 0.0, 0.0, &sys, &state));
    }
    let mut stepper = Stepper::new(scheme);
    let mut outcome = RunOutcome::Completed;
    let mut substeps = 0;
    let mut last = (0, 0.0, 0.0);
    for step in 1..=config.steps {
        let t = step as f64 * config.dt;
        match stepper.advance(&sys, state.clone(), config.dt) {
            Ok(r) => {
                state = r.state;
                substeps += r.substeps;
                rows.push(MetricsRow::new(step, t, r.min_dt, &state));
                last = (step, t, r.min_dt);
                if every > 0 && step % every == 0 && step != config.steps {
                    snapshots.push(Snapshot::new(step, t, r.min_dt, &sys, &state));
                }
            }
            Err(e) => {
                outcome = RunOutcome::Failed {
                    step,
                    error: e.to_string(),
                };
                break;
            }
        }
    }
    snapshots.push(Snapshot::new(last.0, last.1, last.2, &sys, &state));
    Ok(RunRecord {
        config: config.clone(),
        scheme,
        rows,
        snapshots,
        outcome,
        final_metrics: PartitionMetrics::new(&state.eval, &state.gens),
        substeps,
        wall_time: started.elapsed(),
    })
}

/// Final numbers of one run in a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub outcome: RunOutcome,
    pub area_error: f64,
    pub voronoi_defect: f64,
    pub q_mean: f64,
    pub substeps: usize,
}

/// Statistics over the completed runs of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub runs: Vec<RunSummary>,
    pub completed: usize,
    pub area_error_mean: f64,
    pub area_error_max: f64,
    pub voronoi_defect_mean: f64,
    pub voronoi_defect_max: f64,
    pub q_mean: f64,
    pub q_min: f64,
}

impl BatchSummary {
    fn new(runs: Vec<RunSummary>) -> Self {
        let done: Vec<&RunSummary> = runs.iter().filter(|r| r.outcome == RunOutcome::Completed).collect();
        let n = done.len() as f64;
        let mean = |f: fn(&RunSummary) -> f64| done.iter().map(|r| f(r)).sum::<f64>() / n;
        let max = |f: fn(&RunSummary) -> f64| done.iter().map(|r| f(r)).fold(f64::NAN, f64::max);
        let min = |f: fn(&RunSummary) -> f64| done.iter().map(|r| f(r)).fold(f64::NAN, f64::min);
        Self {
            completed: done.len(),
            area_error_mean: mean(|r| r.area_error),
            area_error_max: max(|r| r.area_error),
            voronoi_defect_mean: mean(|r| r.voronoi_defect),
            voronoi_defect_max: max(|r| r.voronoi_defect),
            q_mean: mean(|r| r.q_mean),
            q_min: min(|r| r.q_mean),
            runs,
        }
    }

    /// Header and one row: expectation and worst case of ε, η and Q.
    pub fn table(&self, label: &str) -> String {
        format!(
            "{:<8} {:>5} {:>10} {:>10} {:>10} {:>10} {:>8} {:>8}\n{:<8} {:>5} {:>10.3e} {:>10.3e} {:>10.4} {:>10.4} {:>8.4} {:>8.4}\n",
            "density",
            "runs",
            "E[eps]",
            "max eps",
            "E[eta]",
            "max eta",
            "E[Q]",
            "min Q",
            label,
            format!("{}/{}", self.completed, self.runs.len()),
            self.area_error_mean,
            self.area_error_max,
            self.voronoi_defect_mean,
            self.voronoi_defect_max,
            self.q_mean,
            self.q_min
        )
    }
}

/// Runs seeds `config.seed + k` for `k < n_runs` in parallel.
pub fn batch(config: &SimConfig, n_runs: usize) -> Result<BatchSummary> {
    batch_with(config, n_runs, Scheme::default())
}

pub fn batch_with(config: &SimConfig, n_runs: usize, scheme: Scheme) -> Result<BatchSummary> {
    if n_runs == 0 {
        return Err(Error::InvalidParams("a batch needs at least one run".into()));
    }
    config.validate()?;
    let runs = (0..n_runs as u64)
        .into_par_iter()
        .map(|k| {
            let mut c = config.clone();
            c.seed = config.seed.wrapping_add(k);
            c.outputs.snapshot_every = 0;
            let r = run_with(&c, scheme)?;
            Ok(RunSummary {
                seed: c.seed,
                outcome: r.outcome,
                area_error: r.final_metrics.area_error,
                voronoi_defect: r.final_metrics.voronoi_defect,
                q_mean: r.final_metrics.q_mean,
                substeps: r.substeps,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchSummary::new(runs))
}
