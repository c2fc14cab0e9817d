use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use equipart::baselines::{self, OneDDensity, OneDVerdict};
use equipart::density::region_measure;
use equipart::sim::{self, partition_svg, RunOutcome, Snapshot};
use equipart::{ConvexPolygon, DensityField, Law, Point, Quadrature, Scheme, SimConfig};

/// `println!` that exits quietly when stdout is closed, e.g. piped to `head`.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if let Err(e) = writeln!(std::io::stdout().lock(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            panic!("failed printing to stdout: {e}");
        }
    }};
}

#[derive(Parser)]
#[command(name = "equipart", version, about = "Equitable partitions of a convex region by power diagrams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one run and write the metrics CSV, snapshots and a summary.
    Run {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Snapshot every N steps (0: final state only).
        #[arg(long)]
        snapshots: Option<usize>,
    },
    /// Simulate seeds seed, seed+1, ... in parallel and tabulate final metrics.
    Batch {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value_t = 50)]
        runs: usize,
        /// Also write batch.json here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Non-distributed equitable partitions of the configured region.
    Baseline {
        #[command(subcommand)]
        kind: Baseline,
    },
    /// Decide whether an equitable Voronoi partition of [0, 1] exists.
    #[command(name = "check-1d")]
    CheckOneD {
        /// JSON file {"breakpoints": [...], "values": [...]}; uniform if absent.
        #[arg(long)]
        density: Option<PathBuf>,
        #[arg(long)]
        m: usize,
        /// Print the verdict as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Recompute the metrics row of a snapshot.
    Metrics {
        snapshot: PathBuf,
        /// Print all per-cell metrics as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum Baseline {
    /// Parallel slabs perpendicular to a direction.
    Slice {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, value_parser = parse_point, default_value = "1,0")]
        direction: Point,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Angular sectors about an interior pivot.
    Sweep {
        #[command(flatten)]
        setup: Setup,
        /// Interior point; the region centroid if absent.
        #[arg(long, value_parser = parse_point)]
        pivot: Option<Point>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        start_angle: f64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Collinear generators whose Voronoi partition is equitable (uniform density).
    Unimodal {
        #[command(flatten)]
        setup: Setup,
        /// Line direction; the diameter if absent.
        #[arg(long, value_parser = parse_point)]
        direction: Option<Point>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// A config file, or ten agents on the unit square, with overrides.
#[derive(Args)]
struct Setup {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// weights, centroidal, voronoi, combined, or beta:b1,b2,...
    #[arg(long, value_parser = parse_law)]
    law: Option<Law>,
    /// uniform or gaussian (the corner gaussian).
    #[arg(long, value_parser = parse_density)]
    density: Option<DensityField>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// semi-implicit or euler.
    #[arg(long, value_parser = parse_scheme, default_value = "semi-implicit")]
    scheme: Scheme,
}

impl Setup {
    fn config(&self) -> Result<SimConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => SimConfig::unit_square(DensityField::uniform(1.0), 0),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(l) = &self.law {
            c.law = l.clone();
        }
        if let Some(d) = &self.density {
            c.density = d.clone();
        }
        if let Some(m) = self.m {
            c.m = m;
        }
        if let Some(n) = self.steps {
            c.steps = n;
        }
        if let Some(dt) = self.dt {
            c.dt = dt;
        }
        c.validate()?;
        Ok(c)
    }
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok(Point::new(num(x)?, num(y)?))
}

fn parse_law(s: &str) -> Result<Law, String> {
    if let Some(list) = s.strip_prefix("beta:") {
        let beta = list
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(Law::Beta(beta));
    }
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown law {s:?}"))
}

fn parse_density(s: &str) -> Result<DensityField, String> {
    match s {
        "uniform" => Ok(DensityField::uniform(1.0)),
        "gaussian" => Ok(DensityField::corner_gaussian()),
        _ => Err(format!("unknown density {s:?}")),
    }
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown scheme {s:?}"))
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value)?)?;
    Ok(path)
}

fn print_measures(measures: &[f64]) {
    let total: f64 = measures.iter().sum();
    for (i, m) in measures.iter().enumerate() {
        out!("cell {:>3}  measure {:.12}  share {:.9}", i + 1, m, m / total);
    }
}

fn run(setup: &Setup, out_dir: &Path, snapshots: Option<usize>) -> Result<ExitCode> {
    let mut config = setup.config()?;
    if let Some(n) = snapshots {
        config.outputs.snapshot_every = n;
    }
    let record = sim::run_with(&config, setup.scheme)?;
    let files = record.write(out_dir)?;
    let last = record.final_row();
    out!(
        "{} m={} seed={} steps={} substeps={} time={:.2}s",
        config.law.name(),
        config.m,
        config.seed,
        last.step,
        record.substeps,
        record.wall_time.as_secs_f64()
    );
    out!(
        "HV={:.9} area_error={:.3e} voronoi_defect={:.4} Q_mean={:.4} sum_weights={:.3e}",
        last.hv, last.area_error, last.voronoi_defect, last.q_mean, last.sum_weights
    );
    out!("wrote {} files to {}", files.len(), out_dir.display());
    Ok(match record.outcome {
        RunOutcome::Completed => ExitCode::SUCCESS,
        RunOutcome::Failed { step, error } => {
            eprintln!("run stopped at step {step}: {error}");
            ExitCode::from(2)
        }
    })
}

fn batch(setup: &Setup, runs: usize, out_dir: Option<&Path>) -> Result<ExitCode> {
    let config = setup.config()?;
    let summary = sim::batch_with(&config, runs, setup.scheme)?;
    for r in &summary.runs {
        let status = match &r.outcome {
            RunOutcome::Completed => "ok".to_string(),
            RunOutcome::Failed { step, error } => format!("failed at step {step}: {error}"),
        };
        out!(
            "seed {:>6}  eps {:.3e}  eta {:.4}  Q {:.4}  {status}",
            r.seed, r.area_error, r.voronoi_defect, r.q_mean
        );
    }
    let label = if config.density.is_uniform() { "unif" } else { "nonunif" };
    print!("{}", summary.table(label));
    if let Some(dir) = out_dir {
        write_json(dir, "batch.json", &summary)?;
    }
    Ok(if summary.completed == summary.runs.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn baseline(kind: &Baseline) -> Result<ExitCode> {
    let q = Quadrature::default();
    match kind {
        Baseline::Slice { setup, direction, out_dir } => {
            let c = setup.config()?;
            let p = baselines::slice_partition(&c.region, &c.density, c.m, *direction)?;
            out!("offsets {:?}", p.offsets);
            print_measures(&p.cells.iter().map(|cell| region_measure(cell, &c.density, &q)).collect::<Vec<_>>());
            if let Some(dir) = out_dir {
                write_json(dir, "slice.json", &p)?;
                fs::write(dir.join("slice.svg"), partition_svg(&c.region, &p.cells, &[], "slices"))?;
            }
        }
        Baseline::Sweep {
            setup,
            pivot,
            start_angle,
            out_dir,
        } => {
            let c = setup.config()?;
            let pivot = match pivot {
                Some(p) => *p,
                None => c.region.centroid().context("region has no centroid")?,
            };
            let p = baselines::sweep_partition(&c.region, &c.density, c.m, pivot, *start_angle)?;
            out!("angles {:?}", p.cells.iter().map(|s| s.end).collect::<Vec<_>>());
            print_measures(&p.cells.iter().map(|s| s.measure(&c.density, &q)).collect::<Vec<_>>());
            if let Some(dir) = out_dir {
                write_json(dir, "sweep.json", &p)?;
                let pieces: Vec<ConvexPolygon> = p.cells.iter().flat_map(|s| s.pieces.iter().cloned()).collect();
                fs::write(dir.join("sweep.svg"), partition_svg(&c.region, &pieces, &[pivot], "sectors"))?;
            }
        }
        Baseline::Unimodal {
            setup,
            direction,
            out_dir,
        } => {
            let c = setup.config()?;
            let u = baselines::unimodal_voronoi(&c.region, &c.density, c.m, *direction)?;
            let gens = equipart::GeneratorSet::unweighted(u.generators.clone())?;
            let diagram = equipart::power_diagram(&c.region, &gens)?;
            for (i, g) in u.generators.iter().enumerate() {
                out!("generator {:>3}  ({:.12}, {:.12})", i + 1, g.x, g.y);
            }
            print_measures(&diagram.cells().iter().map(|cell| region_measure(cell, &c.density, &q)).collect::<Vec<_>>());
            if let Some(dir) = out_dir {
                write_json(dir, "unimodal.json", &u)?;
                fs::write(dir.join("unimodal.svg"), partition_svg(&c.region, diagram.cells(), &u.generators, "unimodal"))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn check_1d(density: Option<&Path>, m: usize, json: bool) -> Result<ExitCode> {
    let rho = match density {
        Some(path) => serde_json::from_str::<OneDDensity>(&fs::read_to_string(path)?)
            .with_context(|| format!("parsing {}", path.display()))?,
        None => OneDDensity::uniform(),
    };
    let verdict = baselines::oned_equitable_voronoi_check(&rho, m)?;
    if json {
        out!("{}", serde_json::to_string_pretty(&verdict)?);
    } else {
        match &verdict {
            OneDVerdict::Feasible { boundaries, generators } => {
                out!("feasible");
                out!("boundaries {boundaries:?}");
                out!("generators {generators:?}");
            }
            OneDVerdict::Infeasible { boundaries, certificate } => {
                out!("infeasible");
                out!("boundaries {boundaries:?}");
                out!("{certificate}");
            }
            OneDVerdict::Degenerate { index, range } => {
                out!("degenerate: boundary {index} can sit anywhere in [{}, {}]", range.0, range.1);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn metrics(path: &Path, json: bool) -> Result<ExitCode> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let snap: Snapshot = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if json {
        out!("{}", serde_json::to_string_pretty(&snap.metrics()?)?);
    } else {
        let row = snap.row()?;
        let value = serde_json::to_value(&row)?;
        let Some(fields) = value.as_object() else {
            bail!("metrics row is not an object");
        };
        for (k, v) in fields {
            out!("{k} = {v}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run {
            setup,
            out_dir,
            snapshots,
        } => run(setup, out_dir, *snapshots),
        Command::Batch { setup, runs, out_dir } => batch(setup, *runs, out_dir.as_deref()),
        Command::Baseline { kind } => baseline(kind),
        Command::CheckOneD { density, m, json } => check_1d(density.as_deref(), *m, *json),
        Command::Metrics { snapshot, json } => metrics(snapshot, *json),
    }
}
