//! `openrect` — experiment harness for post-training open-set rectification.
//!
//! Exit codes: 0 success, 1 validation failure, 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use openrect::dataset::{load_csv, write_dataset_csv, CsvOptions};
use openrect::experiment::{
    self, run_sweep, EngineKind, ExperimentConfig, SweepAxisKind,
};
use openrect::Error;

#[derive(Parser)]
#[command(
    name = "openrect",
    about = "Rectify classifiers against unknown-unknown classes and reproduce the benchmark experiments",
    version
)]
struct Cli {
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports and artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's engine (rtscv, csi, pre).
    #[arg(long)]
    engine: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment cell and write its report, model, and outcome.
    Run(RunArgs),
    /// Run the config's sweep section across levels and seed replicates.
    Sweep {
        #[command(flatten)]
        common: RunArgs,
        /// Override the sweep axis (sample-rate, folds, separability).
        #[arg(long)]
        axis: Option<String>,
        /// Override the replicate count.
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Evaluate the relabeling guarantees on a Gaussian spec family.
    VerifyTheorems {
        /// Spec family JSON; omit to generate one.
        #[arg(long)]
        family: Option<PathBuf>,
        /// Number of generated instances when no family file is given.
        #[arg(long, default_value_t = 100)]
        generate: usize,
        #[arg(long, default_value_t = 1_000_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Export a 2-D decision-boundary grid (CSV + PNG).
    ExportBoundary {
        #[command(flatten)]
        common: RunArgs,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
    },
    /// Convert an IDX image/label pair into a CSV dataset.
    ConvertIdx {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        /// Write a header row.
        #[arg(long)]
        header: bool,
    },
    /// Project a CSV dataset onto its top principal components.
    Pca {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        label_column: usize,
        /// Input has a header row.
        #[arg(long)]
        header: bool,
        #[arg(long)]
        components: usize,
        #[arg(long)]
        out_csv: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

/// OPENRECT_THREADS caps the rayon pool.
fn configure_threads() {
    if let Ok(value) = std::env::var("OPENRECT_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(engine) = &args.engine {
        config.engine = engine.parse::<EngineKind>()?;
    }
    config.validate()?;
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    let quiet = cli.quiet;
    match cli.command {
        Command::Run(args) => {
            let config = load_config(&args)?;
            let scenario = config.build_scenario()?;
            let run = experiment::run_on_scenario(&config, &scenario)?;
            let report_path =
                experiment::write_run_artifacts(&args.out, &config, &scenario, &run)?;
            if !quiet {
                let r = &run.report;
                eprintln!(
                    "{}: openness {:.3} macro_f {:.4} class_acc {} det_acc {} auroc {}",
                    config.cell_name(),
                    r.openness,
                    r.macro_f,
                    opt(r.classification_acc),
                    opt(r.detection_acc),
                    opt(r.auroc),
                );
                eprintln!("report: {}", report_path.display());
            }
            Ok(())
        }
        Command::Sweep {
            common,
            axis,
            replicates,
        } => {
            let mut config = load_config(&common)?;
            if let Some(axis) = axis {
                let parsed = axis.parse::<SweepAxisKind>()?;
                match &mut config.sweep {
                    Some(sweep) => sweep.axis = parsed,
                    None => {
                        return Err(Error::invalid(
                            "sweep",
                            "config has no sweep section to override",
                        ))
                    }
                }
            }
            if let Some(replicates) = replicates {
                if let Some(sweep) = &mut config.sweep {
                    sweep.replicates = replicates;
                }
            }
            config.validate()?;
            let table = run_sweep(&config)?;
            std::fs::create_dir_all(&common.out)?;
            let stem = config.cell_name();
            let samples = common.out.join(format!("{stem}_sweep_samples.csv"));
            let curve = common.out.join(format!("{stem}_sweep_curve.csv"));
            table.write_samples_csv(&samples)?;
            table.write_curve_csv(&curve)?;
            if !quiet {
                eprintln!("sweep curve: {}", curve.display());
            }
            Ok(())
        }
        Command::VerifyTheorems {
            family,
            generate,
            mc_samples,
            seed,
            out,
        } => {
            let instances = match family {
                Some(path) => experiment::load_spec_family(&path)?,
                None => experiment::generate_spec_family(generate, seed),
            };
            let rows = experiment::verify_theorems(&instances, mc_samples, seed)?;
            std::fs::create_dir_all(&out)?;
            let path = out.join("theorem_verdicts.csv");
            experiment::write_verdict_csv(&path, &rows)?;
            let satisfied = rows.iter().filter(|r| r.satisfied).count();
            let violations = rows.iter().filter(|r| !r.agree).count();
            if !quiet {
                eprintln!(
                    "{} rows, {} satisfied conditions, {} violations -> {}",
                    rows.len(),
                    satisfied,
                    violations,
                    path.display()
                );
            }
            if violations > 0 {
                return Err(Error::invalid(
                    "theorems",
                    format!("{violations} satisfied conditions with failing conclusions"),
                ));
            }
            Ok(())
        }
        Command::ExportBoundary { common, resolution } => {
            let config = load_config(&common)?;
            let grid = experiment::export_boundary(&config, resolution, &common.out)?;
            if !quiet {
                eprintln!(
                    "grid {}x{} with {} dummy cells -> {}",
                    resolution,
                    resolution,
                    grid.dummy_cells(),
                    common.out.display()
                );
            }
            Ok(())
        }
        Command::ConvertIdx {
            images,
            labels,
            out_csv,
            header,
        } => {
            let (rows, pixels) =
                experiment::convert_idx_to_csv(&images, &labels, &out_csv, header)?;
            if !quiet {
                eprintln!("{rows} rows x {pixels} pixels -> {}", out_csv.display());
            }
            Ok(())
        }
        Command::Pca {
            input,
            label_column,
            header,
            components,
            out_csv,
        } => {
            let (data, map) = load_csv(&input, &CsvOptions::label_index(label_column, header))?;
            let projection = experiment::pca_project(&data, components)?;
            write_dataset_csv(&out_csv, &projection.projected, Some(&map), header)?;
            if !quiet {
                let explained: f64 = projection.explained_variance_ratio.iter().sum();
                eprintln!(
                    "projected to {components} components ({:.1}% variance) -> {}",
                    100.0 * explained,
                    out_csv.display()
                );
            }
            Ok(())
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}
