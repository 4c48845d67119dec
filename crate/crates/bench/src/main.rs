use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use maxent_bench::artifacts::Staging;
use maxent_bench::config::{load_config, resolve, ExperimentConfig};
use maxent_bench::experiments::{Experiment, FigureKind};
use maxent_bench::manifest::RunManifest;
use maxent_bench::report::build_report;
use maxent_bench::runner::{run_bounds, run_figure, run_synth, run_train, RunOptions, TheoremSelection};

const OUT_ENV: &str = "MAXENT_OUT_DIR";

#[derive(Parser)]
#[command(name = "maxent-bench", version, about = "Entropy-regularized linear classifiers on synthetic feature regimes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: config `out`, then $MAXENT_OUT_DIR/<name>/<task>, then runs/<name>/<task>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed list overriding the config, e.g. `1,2,3` or `1-6`.
    #[arg(long)]
    seeds: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample train/validation sets and write the mixture and its spectrum.
    Synth(Common),
    /// Train the configured objective per seed and save checkpoints.
    Train(Common),
    /// Run one figure pipeline over all seeds.
    Figure {
        /// pc_scatter | spectrum | top_prob_hist | gamma_sweep | noise_sweep | ce_vs_val | data_fraction_sweep | lsr_compare
        kind: FigureKind,
        #[command(flatten)]
        common: Common,
    },
    /// Monte-Carlo checks of the norm and entropy bounds.
    Bounds {
        #[command(subcommand)]
        action: BoundsAction,
    },
    /// Merge run manifests into median tables with the gain column.
    Report {
        /// Manifest files or run directories.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BoundsAction {
    Verify {
        /// all | theorem1 | theorem2 | corollary1
        #[arg(long, default_value = "all")]
        theorem: TheoremSelection,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
                if a > b {
                    bail!("empty seed range `{part}`");
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().with_context(|| format!("bad seed `{part}`"))?),
        }
    }
    if seeds.is_empty() {
        bail!("seed list is empty");
    }
    Ok(seeds)
}

fn default_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

struct Loaded {
    experiment: Experiment,
    out: PathBuf,
    threads: Option<usize>,
}

fn load(common: &Common, task: &str) -> Result<Loaded> {
    let (mut config, base) = match &common.config {
        Some(path) => (
            load_config(path).with_context(|| format!("loading {}", path.display()))?,
            path.parent().map(Path::to_path_buf),
        ),
        None => (ExperimentConfig::default(), None),
    };
    if let Some(s) = &common.seeds {
        config.seeds = parse_seeds(s)?;
    }
    let out = match (&common.out, &config.out) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => resolve(base.as_deref(), o),
        (None, None) => default_root().join(&config.name).join(task),
    };
    let experiment = Experiment::new(config, base.as_deref())?;
    Ok(Loaded { experiment, out, threads: common.threads })
}

fn options(loaded: &Loaded, command: String) -> RunOptions {
    RunOptions { out: loaded.out.clone(), threads: loaded.threads, command }
}

fn run(cli: Cli) -> Result<()> {
    let argv = std::env::args().collect::<Vec<_>>().join(" ");
    match cli.command {
        Command::Synth(common) => {
            let l = load(&common, "synth")?;
            run_synth(&l.experiment, &options(&l, argv))?;
            println!("wrote {}", l.out.display());
        }
        Command::Train(common) => {
            let l = load(&common, "train")?;
            run_train(&l.experiment, &options(&l, argv))?;
            println!("wrote {}", l.out.display());
        }
        Command::Figure { kind, common } => {
            let l = load(&common, &format!("figure-{kind}"))?;
            run_figure(&l.experiment, kind, &options(&l, argv))?;
            println!("wrote {}", l.out.display());
        }
        Command::Bounds { action: BoundsAction::Verify { theorem, common } } => {
            let l = load(&common, "bounds")?;
            let (_, lines) = run_bounds(&l.experiment, theorem, &options(&l, argv))?;
            for line in lines {
                println!("{line}");
            }
            println!("wrote {}", l.out.display());
        }
        Command::Report { runs, out } => {
            let report = build_report(&runs)?;
            let out = out.unwrap_or_else(|| default_root().join("report"));
            let mut staging = Staging::new(&out, RunManifest::new(argv, ""))?;
            staging.write("summary.csv", &report.summary_csv()?)?;
            staging.write("summary_median.csv", &report.median_csv()?)?;
            let text = report.text();
            staging.write("report.txt", text.as_bytes())?;
            staging.commit()?;
            print!("{text}");
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
