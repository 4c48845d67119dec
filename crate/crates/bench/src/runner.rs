//! Subcommand pipelines. Each runs its seeds (or verification jobs) on a
//! rayon pool, then writes results in seed order through a [`Staging`] area
//! so output bytes do not depend on the thread count.

use std::path::PathBuf;
use std::time::Instant;

use maxent_core::rng::derive_seed;
use maxent_core::{
    analytic_diversity, empirical_diversity, evaluate, mc_verify, write_checkpoint, Component, Mixture, ModelSampler,
    Theorem, VerificationReport, VerifyOptions,
};
use rayon::prelude::*;

use crate::artifacts::Staging;
use crate::config::{serialize, serialize_components, ComponentSpec, CovarianceSpec};
use crate::experiments::{Arm, Experiment, FigureKind, SeedOutput, SummaryRow};
use crate::manifest::{RunManifest, StageTiming};
use crate::summary::{aggregate, write_aggregates, write_summary};
use crate::BenchError;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    /// `None` uses rayon's default.
    pub threads: Option<usize>,
    /// Echoed into the manifest.
    pub command: String,
}

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, BenchError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    b.build().map_err(|e| BenchError::Invalid(format!("thread pool: {e}")))
}

struct Timed<T> {
    label: String,
    seconds: f64,
    value: T,
}

fn timed<T>(label: String, f: impl FnOnce() -> Result<T, BenchError>) -> Result<Timed<T>, BenchError> {
    let t = Instant::now();
    let value = f()?;
    Ok(Timed { label, seconds: t.elapsed().as_secs_f64(), value })
}

fn per_seed(
    exp: &Experiment,
    threads: Option<usize>,
    f: impl Fn(u64) -> Result<SeedOutput, BenchError> + Sync,
) -> Result<Vec<Timed<SeedOutput>>, BenchError> {
    let pool = thread_pool(threads)?;
    pool.install(|| exp.config.seeds.par_iter().map(|&s| timed(format!("seed {s}"), || f(s))).collect())
}

fn finish(exp: &Experiment, opts: &RunOptions, outputs: Vec<Timed<SeedOutput>>) -> Result<RunManifest, BenchError> {
    let mut staging = Staging::new(&opts.out, RunManifest::new(&opts.command, serialize(&exp.config)))?;
    let mut rows = Vec::new();
    for t in outputs {
        for (name, bytes) in &t.value.files {
            staging.write(name, bytes)?;
        }
        rows.extend(t.value.rows);
        staging.manifest_mut().stages.push(StageTiming { stage: t.label, seconds: t.seconds });
    }
    write_tables(&mut staging, &rows)?;
    Ok(staging.commit()?)
}

fn write_tables(staging: &mut Staging, rows: &[SummaryRow]) -> Result<(), BenchError> {
    let mut buf = Vec::new();
    write_summary(rows, &mut buf)?;
    staging.write("summary.csv", &buf)?;
    let mut buf = Vec::new();
    write_aggregates(&aggregate(rows), &mut buf)?;
    staging.write("summary_median.csv", &buf)?;
    Ok(())
}

/// Per-seed outputs of one figure, in seed order.
pub fn collect_figure(exp: &Experiment, figure: FigureKind, threads: Option<usize>) -> Result<Vec<SeedOutput>, BenchError> {
    Ok(per_seed(exp, threads, |s| exp.run_seed(figure, s))?.into_iter().map(|t| t.value).collect())
}

pub fn run_figure(exp: &Experiment, figure: FigureKind, opts: &RunOptions) -> Result<RunManifest, BenchError> {
    let outputs = per_seed(exp, opts.threads, |s| exp.run_seed(figure, s))?;
    finish(exp, opts, outputs)
}

fn component_spec(c: &Component<f64>) -> ComponentSpec {
    let n = c.mean.len();
    let cov = (0..n).map(|i| (0..n).map(|j| c.covariance[(i, j)]).collect()).collect();
    ComponentSpec { weight: c.weight, mean: c.mean.clone(), covariance: CovarianceSpec::Full(cov) }
}

/// Mixture in the `[component]` file syntax.
pub fn mixture_text(mixture: &Mixture) -> String {
    let specs: Vec<_> = mixture.components().iter().map(component_spec).collect();
    serialize_components(&specs).trim_start().to_string()
}

fn row(exp: &Experiment, figure: &str, arm: Option<Arm>, metric: &str, seed: u64, value: f64) -> SummaryRow {
    SummaryRow {
        figure: figure.into(),
        regime: exp.regime().into(),
        objective: arm.map_or("none", Arm::objective).into(),
        strength: arm.map_or(0.0, Arm::strength),
        param: String::new(),
        metric: metric.into(),
        seed,
        value,
    }
}

/// Train/validation CSVs per seed plus the mixture and its analytic spectrum.
pub fn run_synth(exp: &Experiment, opts: &RunOptions) -> Result<RunManifest, BenchError> {
    let analytic = analytic_diversity(&exp.mixture)?;
    let mut outputs = per_seed(exp, opts.threads, |seed| {
        let (train, val) = exp.datasets(seed);
        let mut out = SeedOutput::default();
        for (name, data) in [("train", &train), ("val", &val)] {
            let mut buf = Vec::new();
            data.write_csv(&mut buf)?;
            out.files.push((format!("{name}_seed{seed}.csv"), buf));
            let nu = empirical_diversity(data.features())?.nu;
            out.rows.push(row(exp, "synth", None, &format!("{name}_empirical_nu"), seed, nu));
        }
        out.rows.push(row(exp, "synth", None, "analytic_nu", seed, analytic.nu));
        Ok(out)
    })?;
    let mut spectrum = Vec::new();
    analytic.write_spectrum_csv(&mut spectrum)?;
    let shared = SeedOutput {
        files: vec![("mixture.txt".into(), mixture_text(&exp.mixture).into_bytes()), ("spectrum_analytic.csv".into(), spectrum)],
        rows: Vec::new(),
    };
    outputs.insert(0, Timed { label: "fixture".into(), seconds: 0.0, value: shared });
    finish(exp, opts, outputs)
}

/// Trains the `[train]` objective per seed; writes checkpoints and histories.
pub fn run_train(exp: &Experiment, opts: &RunOptions) -> Result<RunManifest, BenchError> {
    let arm = Arm::from_train(&exp.config.train);
    let outputs = per_seed(exp, opts.threads, |seed| {
        let (train, val) = exp.datasets(seed);
        let (model, history) = exp.train_arm(arm, &train, &val, seed)?;
        let mut out = SeedOutput::default();
        let mut ckpt = Vec::new();
        write_checkpoint(&model, &mut ckpt)?;
        out.files.push((format!("model_seed{seed}.ckpt"), ckpt));
        let mut hist = Vec::new();
        history.write_csv(&mut hist)?;
        out.files.push((format!("history_seed{seed}.csv"), hist));
        let ev = evaluate(&model, &val)?;
        let last = history.last();
        for (metric, value) in [
            ("val_acc", ev.accuracy),
            ("val_entropy", ev.mean_entropy),
            ("top_prob_mean", ev.top_prob_mean),
            ("train_ce", last.train_ce),
            ("w_l2", model.l2_norm()),
        ] {
            out.rows.push(row(exp, "train", Some(arm), metric, seed, value));
        }
        Ok(out)
    })?;
    finish(exp, opts, outputs)
}

/// Which bounds `bounds verify` checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremSelection {
    All,
    One(Theorem),
}

impl std::str::FromStr for TheoremSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(TheoremSelection::All);
        }
        Theorem::parse(s)
            .map(TheoremSelection::One)
            .ok_or_else(|| format!("unknown theorem `{s}` (expected all, theorem1, theorem2 or corollary1)"))
    }
}

/// One Monte-Carlo verification job.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyJob {
    pub theorem: Theorem,
    /// Dataset size; unused by the expected-entropy norm bound.
    pub samples: usize,
}

impl VerifyJob {
    pub fn file_name(&self) -> String {
        match self.theorem {
            Theorem::NormFromExpectedEntropy => format!("verify_{}.csv", self.theorem),
            _ => format!("verify_{}_N{}.csv", self.theorem, self.samples),
        }
    }
}

pub fn verify_jobs(exp: &Experiment, which: TheoremSelection) -> Vec<VerifyJob> {
    let wanted = |t| which == TheoremSelection::All || which == TheoremSelection::One(t);
    let mut jobs = Vec::new();
    if wanted(Theorem::NormFromExpectedEntropy) {
        jobs.push(VerifyJob { theorem: Theorem::NormFromExpectedEntropy, samples: 0 });
    }
    for &n in &exp.config.bounds.samples {
        for t in [Theorem::EntropyConcentration, Theorem::NormFromEmpiricalEntropy] {
            if wanted(t) {
                jobs.push(VerifyJob { theorem: t, samples: n });
            }
        }
    }
    jobs
}

/// Expected-entropy draws for a job: the configured count, or 10⁵ for the
/// norm bound and `clamp(10·N, 10⁴, 10⁵)` otherwise.
pub fn reference_draws(exp: &Experiment, job: &VerifyJob) -> usize {
    match exp.config.bounds.reference_draws {
        0 if job.theorem == Theorem::NormFromExpectedEntropy => 100_000,
        0 => (10 * job.samples).clamp(10_000, 100_000),
        d => d,
    }
}

pub fn run_verify_job(exp: &Experiment, job: &VerifyJob, base_seed: u64) -> Result<VerificationReport<f64>, BenchError> {
    let b = &exp.config.bounds;
    let mut sampler = ModelSampler::new(exp.classes(), exp.mixture.dim());
    sampler.scales = b.scales.clone();
    let options = VerifyOptions {
        samples: job.samples,
        trials: b.trials,
        seed: derive_seed(base_seed, job.samples as u64),
        reference_draws: reference_draws(exp, job),
    };
    Ok(mc_verify(job.theorem, &exp.mixture, &sampler, b.delta, &options)?)
}

pub fn verification_rows(exp: &Experiment, job: &VerifyJob, rep: &VerificationReport<f64>, seed: u64) -> Vec<SummaryRow> {
    let param = match job.theorem {
        Theorem::NormFromExpectedEntropy => String::new(),
        _ => format!("N={}", job.samples),
    };
    let mut metrics = vec![
        ("violations", rep.violations() as f64),
        ("violation_rate", rep.rate()),
        ("worst_margin", rep.worst_margin()),
        ("inapplicable", rep.inapplicable() as f64),
    ];
    if job.theorem == Theorem::EntropyConcentration {
        metrics.push(("strict_violations", rep.strict_violations() as f64));
    }
    metrics
        .into_iter()
        .map(|(metric, value)| SummaryRow {
            figure: "bounds".into(),
            regime: exp.regime().into(),
            objective: job.theorem.tag().into(),
            strength: exp.config.bounds.delta,
            param: param.clone(),
            metric: metric.into(),
            seed,
            value,
        })
        .collect()
}

/// Runs every job for the first configured seed. Returns the manifest and
/// one human-readable line per job.
pub fn run_bounds(
    exp: &Experiment,
    which: TheoremSelection,
    opts: &RunOptions,
) -> Result<(RunManifest, Vec<String>), BenchError> {
    let seed = *exp.config.seeds.first().ok_or_else(|| BenchError::Invalid("no seeds".into()))?;
    let jobs = verify_jobs(exp, which);
    let pool = thread_pool(opts.threads)?;
    let results: Vec<Timed<VerificationReport<f64>>> = pool.install(|| {
        jobs.par_iter().map(|job| timed(job.file_name(), || run_verify_job(exp, job, seed))).collect::<Result<Vec<_>, _>>()
    })?;
    let mut staging = Staging::new(&opts.out, RunManifest::new(&opts.command, serialize(&exp.config)))?;
    let (mut rows, mut lines) = (Vec::new(), Vec::new());
    for (job, t) in jobs.iter().zip(results) {
        let mut buf = Vec::new();
        t.value.write_csv(&mut buf)?;
        staging.write(&job.file_name(), &buf)?;
        rows.extend(verification_rows(exp, job, &t.value, seed));
        lines.push(format!("{}  (rate {:.4} vs delta {})", t.value.summary_line(), t.value.rate(), exp.config.bounds.delta));
        staging.manifest_mut().stages.push(StageTiming { stage: t.label, seconds: t.seconds });
    }
    let mut text = lines.join("\n");
    text.push('\n');
    staging.write("bounds_summary.txt", text.as_bytes())?;
    write_tables(&mut staging, &rows)?;
    Ok((staging.commit()?, lines))
}
