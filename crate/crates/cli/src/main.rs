//! `spinenav` command-line front end.
//!
//! Exit status: 0 success, 1 runtime failure, 2 usage or configuration error.
//! Stable results go to stdout; progress and diagnostics go to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use spinenav::fsutil::write_atomic;
use spinenav::geometry::{parse_stl, write_stl, StlFormat, TriangleMesh};
use spinenav::optimizer::{export_best, optimize, GridSpec};
use spinenav::simulation::{simulate, Scenario};
use spinenav::smoothing::{laplacian_smooth, SmoothingParams};
use spinenav::tracking::stream::{read_observations, replay, write_records, TrackingSetup};
use spinenav::tracking::TrackerConfig;
use spinenav::voxel::mesh_dice;
use spinenav::Error;

#[derive(Parser)]
#[command(name = "spinenav", version, about = "MRI mesh smoothing, marker tracking and needle-trial simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Binary,
    Ascii,
}

#[derive(Subcommand)]
enum Command {
    /// Laplacian-smooth an STL mesh over its k-nearest-neighbour graph.
    Smooth {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        iters: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "binary")]
        format: Format,
    },
    /// Surface-shell Dice of two STL meshes; prints the score to 4 decimals.
    Dice {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        resolution: f64,
    },
    /// Grid-search smoothing parameters against a ground-truth mesh.
    Optimize {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        mri: PathBuf,
        /// Grid JSON; the 5 x 5 x 5 reference grid when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Replay a line-delimited observation stream through the tracker.
    Track {
        #[arg(long)]
        observations: PathBuf,
        /// JSON `{camera, markers}`.
        #[arg(long)]
        markers: PathBuf,
        /// Tracker JSON `{t_miss, beta, auto_disable}`; defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run needle-insertion trials and write the accuracy report.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the scenario trial count.
        #[arg(long)]
        trials: Option<u64>,
    },
}

/// Error tagged with the exit status it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

fn runtime(error: anyhow::Error) -> Failure {
    Failure { code: 1, error }
}

/// Parameter and configuration errors are usage errors; the rest are
/// runtime failures.
fn from_lib(e: Error, context: String) -> Failure {
    let code = match &e {
        Error::InvalidParams(_) => 2,
        Error::GridCell { source, .. } if matches!(**source, Error::InvalidParams(_)) => 2,
        _ => 1,
    };
    Failure {
        code,
        error: anyhow::Error::new(e).context(context),
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn read_input(path: &Path) -> Outcome<Vec<u8>> {
    fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(usage)
}

fn load_mesh(path: &Path) -> Outcome<TriangleMesh<f64>> {
    let bytes = read_input(path)?;
    parse_stl(&bytes).map_err(|e| from_lib(e, format!("cannot parse {}", path.display())))
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Outcome<T> {
    let bytes = read_input(path)?;
    serde_json::from_slice(&bytes)
        .with_context(|| format!("invalid JSON in {}", path.display()))
        .map_err(usage)
}

fn write_output(path: &Path, bytes: &[u8]) -> Outcome {
    write_atomic(path, bytes).map_err(|e| from_lib(e, format!("cannot write {}", path.display())))
}

fn smooth(input: &Path, k: usize, iters: usize, alpha: f64, output: &Path, format: Format) -> Outcome {
    let mesh = load_mesh(input)?;
    let params = SmoothingParams::new(k, iters, alpha).map_err(|e| from_lib(e, "invalid smoothing parameters".into()))?;
    let out = laplacian_smooth(&mesh, &params).map_err(|e| from_lib(e, format!("cannot smooth {}", input.display())))?;
    let format = match format {
        Format::Binary => StlFormat::Binary,
        Format::Ascii => StlFormat::Ascii,
    };
    write_output(output, &write_stl(&out, format))?;
    eprintln!("smoothed {} -> {}", input.display(), output.display());
    println!("vertices={} k={k} iters={iters} alpha={alpha}", out.vertex_count());
    Ok(())
}

fn dice(a: &Path, b: &Path, resolution: f64) -> Outcome {
    let (ma, mb) = (load_mesh(a)?, load_mesh(b)?);
    let d = mesh_dice(&ma, &mb, resolution).map_err(|e| from_lib(e, "cannot score meshes".into()))?;
    println!("{d:.4}");
    Ok(())
}

fn optimize_cmd(gt: &Path, mri: &Path, config: Option<&Path>, out_dir: &Path) -> Outcome {
    let spec: GridSpec<f64> = match config {
        Some(p) => load_json(p)?,
        None => GridSpec::reference(),
    };
    spec.validate().map_err(|e| from_lib(e, "invalid grid".into()))?;
    let (gt, mri) = (load_mesh(gt)?, load_mesh(mri)?);
    let results = optimize(&gt, &mri, &spec).map_err(|e| from_lib(e, "grid search failed".into()))?;
    let mut log: Vec<_> = results.iter().collect();
    log.sort_by(|x, y| (x.k, x.iterations).cmp(&(y.k, y.iterations)).then(x.alpha.total_cmp(&y.alpha)));
    for r in &log {
        eprintln!("k={} iters={} alpha={:.1} dice={:.4}", r.k, r.iterations, r.alpha, r.dice);
    }
    eprintln!("{} evaluations", results.len());
    let paths = export_best(&results, out_dir).map_err(|e| from_lib(e, format!("cannot export to {}", out_dir.display())))?;
    for p in paths {
        println!("{}", p.file_name().map(|n| n.to_string_lossy()).unwrap_or_default());
    }
    Ok(())
}

fn track(observations: &Path, markers: &Path, config: Option<&Path>, out: &Path) -> Outcome {
    let setup: TrackingSetup<f64> = load_json(markers)?;
    setup.validate().map_err(|e| from_lib(e, format!("invalid setup in {}", markers.display())))?;
    let cfg: TrackerConfig<f64> = match config {
        Some(p) => load_json(p)?,
        None => TrackerConfig::default(),
    };
    cfg.validate().map_err(|e| from_lib(e, "invalid tracker config".into()))?;
    let text = read_input(observations)?;
    let obs = read_observations(text.as_slice()).map_err(|e| match e {
        Error::Record { line, reason } => runtime(anyhow!("{}:{line}: {reason}", observations.display())),
        other => from_lib(other, format!("cannot read {}", observations.display())),
    })?;
    let records = replay(&setup, &cfg, &obs).map_err(|e| from_lib(e, "replay failed".into()))?;
    let mut bytes = Vec::new();
    write_records(&records, &mut bytes).map_err(|e| from_lib(e, "cannot encode records".into()))?;
    write_output(out, &bytes)?;
    eprintln!("{} observations -> {} records", obs.len(), records.len());
    Ok(())
}

fn simulate_cmd(scenario: &Path, report: &Path, seed: Option<u64>, trials: Option<u64>) -> Outcome {
    let mut sc: Scenario<f64> = load_json(scenario)?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    if let Some(t) = trials {
        sc.trials = t;
    }
    sc.validate().map_err(|e| from_lib(e, format!("invalid scenario {}", scenario.display())))?;
    let rep = simulate(&sc).map_err(|e| from_lib(e, "simulation failed".into()))?;
    let mut json = serde_json::to_vec_pretty(&rep).map_err(|e| runtime(e.into()))?;
    json.push(b'\n');
    write_output(report, &json)?;
    eprintln!(
        "{:?}: {} trials, rings {:?}, misses {}",
        rep.mode, rep.trials, rep.ring_counts, rep.misses
    );
    println!(
        "high_accuracy_rate={:.1}% average_deviation={:.2}mm",
        rep.high_accuracy_rate_pct, rep.average_deviation_mm
    );
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Smooth {
            input,
            k,
            iters,
            alpha,
            output,
            format,
        } => smooth(&input, k, iters, alpha, &output, format),
        Command::Dice { a, b, resolution } => dice(&a, &b, resolution),
        Command::Optimize {
            gt,
            mri,
            config,
            out_dir,
        } => optimize_cmd(&gt, &mri, config.as_deref(), &out_dir),
        Command::Track {
            observations,
            markers,
            config,
            out,
        } => track(&observations, &markers, config.as_deref(), &out),
        Command::Simulate {
            scenario,
            report,
            seed,
            trials,
        } => simulate_cmd(&scenario, &report, seed, trials),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
