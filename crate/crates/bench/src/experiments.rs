//! Per-seed pipelines behind each figure kind.

use std::fmt;
use std::str::FromStr;

use maxent_core::rng::derive_seed;
use maxent_core::trainer::write_sweep_csv;
use maxent_core::{
    empirical_diversity, evaluate, gamma_sweep, init_model, inject_label_noise, spectrum_tail_mass,
    top_principal_components, train, write_pc_csv, Dataset, LabeledDataset, Mixture, Model, ObjectiveKind,
    TrainConfig, TrainHistory,
};

use crate::config::{build_mixture, load_components, ExperimentConfig, MixtureSource, Regime};
use crate::fixtures::{make_feature_map_fixture, make_regime_fixtures, FeatureMapParams, RegimeParams};
use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureKind {
    PcScatter,
    Spectrum,
    TopProbHist,
    GammaSweep,
    NoiseSweep,
    CeVsVal,
    DataFractionSweep,
    LsrCompare,
}

impl FigureKind {
    pub const ALL: [FigureKind; 8] = [
        FigureKind::PcScatter,
        FigureKind::Spectrum,
        FigureKind::TopProbHist,
        FigureKind::GammaSweep,
        FigureKind::NoiseSweep,
        FigureKind::CeVsVal,
        FigureKind::DataFractionSweep,
        FigureKind::LsrCompare,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            FigureKind::PcScatter => "pc_scatter",
            FigureKind::Spectrum => "spectrum",
            FigureKind::TopProbHist => "top_prob_hist",
            FigureKind::GammaSweep => "gamma_sweep",
            FigureKind::NoiseSweep => "noise_sweep",
            FigureKind::CeVsVal => "ce_vs_val",
            FigureKind::DataFractionSweep => "data_fraction_sweep",
            FigureKind::LsrCompare => "lsr_compare",
        }
    }
}

impl fmt::Display for FigureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for FigureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|k| k.tag() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.tag()).collect();
            format!("unknown figure `{s}` (expected one of {})", names.join(", "))
        })
    }
}

/// One training arm: objective plus its regularization strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arm {
    CrossEntropy,
    MaxEnt(f64),
    LabelSmoothing(f64),
}

impl Arm {
    pub fn objective(self) -> &'static str {
        match self {
            Arm::CrossEntropy => "ce",
            Arm::MaxEnt(_) => "maxent",
            Arm::LabelSmoothing(_) => "lsr",
        }
    }

    pub fn strength(self) -> f64 {
        match self {
            Arm::CrossEntropy => 0.0,
            Arm::MaxEnt(g) | Arm::LabelSmoothing(g) => g,
        }
    }

    /// The arm selected by `[train] objective`.
    pub fn from_train(t: &crate::config::TrainSection) -> Self {
        match t.objective {
            crate::config::ObjectiveName::MaxEnt => Arm::MaxEnt(t.gamma),
            crate::config::ObjectiveName::CrossEntropy => Arm::CrossEntropy,
            crate::config::ObjectiveName::LabelSmoothing => Arm::LabelSmoothing(t.epsilon),
        }
    }

    fn apply(self, base: &TrainConfig<f64>) -> TrainConfig<f64> {
        let (objective, gamma) = match self {
            Arm::CrossEntropy => (ObjectiveKind::CrossEntropy, 0.0),
            Arm::MaxEnt(g) => (ObjectiveKind::MaxEnt, g),
            Arm::LabelSmoothing(e) => (ObjectiveKind::LabelSmoothing(e), 0.0),
        };
        TrainConfig { objective, gamma, ..base.clone() }
    }
}

/// One long-format result: `figure,regime,objective,strength,param,metric,seed,value`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub figure: String,
    pub regime: String,
    pub objective: String,
    pub strength: f64,
    /// Sweep coordinate such as `noise=0.3`; empty when not swept.
    pub param: String,
    pub metric: String,
    pub seed: u64,
    pub value: f64,
}

/// Artifacts of one seed: named file payloads plus summary rows.
#[derive(Debug, Default)]
pub struct SeedOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub rows: Vec<SummaryRow>,
}

/// Resolved mixture and data-generation settings shared by all seeds.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub mixture: Mixture,
}

pub fn regime_params(cfg: &ExperimentConfig) -> RegimeParams {
    RegimeParams { dim: cfg.data.dim, classes: cfg.data.classes, ..RegimeParams::default() }
}

pub fn feature_map_params(cfg: &ExperimentConfig) -> FeatureMapParams {
    FeatureMapParams { dim: cfg.data.dim, classes: cfg.data.classes, ..FeatureMapParams::default() }
}

impl Experiment {
    /// `base` is the directory relative mixture-file paths resolve against.
    pub fn new(config: ExperimentConfig, base: Option<&std::path::Path>) -> Result<Self, BenchError> {
        let mixture = match (&config.mixture, config.regime) {
            (MixtureSource::Inline(specs), _) => build_mixture(specs)?.recenter_zero_mean(),
            (MixtureSource::File(path), _) => {
                let specs = load_components(&crate::config::resolve(base, path))?;
                build_mixture(&specs)?.recenter_zero_mean()
            }
            (MixtureSource::Fixture, Regime::FeatureMap) => {
                make_feature_map_fixture(&feature_map_params(&config), config.data.fixture_seed)?
            }
            (MixtureSource::Fixture, Regime::LargeScale) => {
                make_regime_fixtures(&regime_params(&config), config.data.fixture_seed)?.large
            }
            (MixtureSource::Fixture, _) => make_regime_fixtures(&regime_params(&config), config.data.fixture_seed)?.fine,
        };
        Ok(Self { config, mixture })
    }

    pub fn classes(&self) -> usize {
        self.mixture.count().max(2)
    }

    pub fn regime(&self) -> &'static str {
        self.config.regime.tag()
    }

    /// Train and validation sets for one seed.
    pub fn datasets(&self, seed: u64) -> (Dataset, Dataset) {
        let d = &self.config.data;
        let c = self.classes();
        let relabel = |data: Dataset| LabeledDataset::new(data.features().clone(), data.labels().to_vec(), c);
        let train = relabel(self.mixture.sample(d.train_n, derive_seed(seed, 1))).expect("labels in range");
        let val = relabel(self.mixture.sample(d.val_n, derive_seed(seed, 2))).expect("labels in range");
        (train, val)
    }

    pub fn base_config(&self, seed: u64) -> TrainConfig<f64> {
        self.config.train.to_train_config(seed)
    }

    pub fn init(&self, seed: u64) -> Result<Model, BenchError> {
        let n = self.mixture.dim();
        Ok(init_model(self.classes(), n, n, self.config.train.init_scale, seed)?)
    }

    pub fn train_arm(
        &self,
        arm: Arm,
        train_set: &Dataset,
        val_set: &Dataset,
        seed: u64,
    ) -> Result<(Model, TrainHistory<f64>), BenchError> {
        let cfg = arm.apply(&self.base_config(seed));
        Ok(train(&self.init(seed)?, train_set, val_set, &cfg)?)
    }

    fn row(&self, figure: FigureKind, arm: Arm, param: String, metric: &str, seed: u64, value: f64) -> SummaryRow {
        SummaryRow {
            figure: figure.tag().into(),
            regime: self.regime().into(),
            objective: arm.objective().into(),
            strength: arm.strength(),
            param,
            metric: metric.into(),
            seed,
            value,
        }
    }

    /// The configured MaxEnt arm (`[train] gamma`).
    pub fn maxent_arm(&self) -> Arm {
        Arm::MaxEnt(self.config.train.gamma)
    }

    pub fn run_seed(&self, figure: FigureKind, seed: u64) -> Result<SeedOutput, BenchError> {
        let (train_set, val_set) = self.datasets(seed);
        let mut out = SeedOutput::default();
        match figure {
            FigureKind::PcScatter => {
                let pcs = top_principal_components(val_set.features(), 2)?;
                let mut buf = Vec::new();
                write_pc_csv(&pcs.projected, val_set.labels(), &mut buf)?;
                out.files.push((format!("pc_scatter_seed{seed}.csv"), buf));
                let arm = Arm::CrossEntropy;
                for (i, r) in pcs.explained_variance_ratio.iter().enumerate() {
                    out.rows.push(self.row(figure, arm, String::new(), &format!("explained_pc{}", i + 1), seed, *r));
                }
                let nu = empirical_diversity(val_set.features())?.nu;
                out.rows.push(self.row(figure, arm, String::new(), "empirical_nu", seed, nu));
            }
            FigureKind::Spectrum => {
                if !self.config.train.train_feature_map {
                    return Err(BenchError::Invalid("spectrum requires train_feature_map = true".into()));
                }
                let k = self.mixture.dim() / 4;
                let basic = self.init(seed)?;
                let (ce, _) = self.train_arm(Arm::MaxEnt(0.0), &train_set, &val_set, seed)?;
                let (me, _) = self.train_arm(self.maxent_arm(), &train_set, &val_set, seed)?;
                for (label, arm, model) in
                    [("basic", None, &basic), ("finetuned", Some(Arm::MaxEnt(0.0)), &ce), ("maxent", Some(self.maxent_arm()), &me)]
                {
                    let report = empirical_diversity(&feature_matrix(model, &val_set))?;
                    let mut buf = Vec::new();
                    report.write_spectrum_csv(&mut buf)?;
                    out.files.push((format!("spectrum_{label}_seed{seed}.csv"), buf));
                    let (objective, strength) = match arm {
                        None => ("none".to_string(), 0.0),
                        Some(a) => (a.objective().to_string(), a.strength()),
                    };
                    for (metric, value) in [("tail_mass", spectrum_tail_mass(&report, k)), ("nu", report.nu)] {
                        out.rows.push(SummaryRow {
                            figure: figure.tag().into(),
                            regime: self.regime().into(),
                            objective: objective.clone(),
                            strength,
                            param: format!("stage={label}"),
                            metric: metric.into(),
                            seed,
                            value,
                        });
                    }
                }
            }
            FigureKind::TopProbHist => {
                let mut hist = String::from("bin_lo,bin_hi,ce,maxent\n");
                let mut counts = Vec::new();
                for arm in [Arm::MaxEnt(0.0), self.maxent_arm()] {
                    let (model, _) = self.train_arm(arm, &train_set, &val_set, seed)?;
                    let ev = evaluate(&model, &val_set)?;
                    out.rows.push(self.row(figure, arm, String::new(), "top_prob_mean", seed, ev.top_prob_mean));
                    out.rows.push(self.row(figure, arm, String::new(), "val_acc", seed, ev.accuracy));
                    counts.push(ev.top_prob_histogram);
                }
                for (b, (ce, me)) in counts[0].iter().zip(&counts[1]).enumerate() {
                    hist.push_str(&format!("{},{},{ce},{me}\n", b as f64 / 20.0, (b + 1) as f64 / 20.0));
                }
                out.files.push((format!("top_prob_hist_seed{seed}.csv"), hist.into_bytes()));
            }
            FigureKind::GammaSweep => {
                let rows = gamma_sweep(&train_set, &val_set, &self.base_config(seed), &self.config.sweep.gammas)?;
                let mut buf = Vec::new();
                write_sweep_csv(&rows, &mut buf)?;
                out.files.push((format!("gamma_sweep_seed{seed}.csv"), buf));
                for r in &rows {
                    let arm = Arm::MaxEnt(r.gamma);
                    out.rows.push(self.row(figure, arm, String::new(), "val_acc", seed, r.val_accuracy));
                    out.rows.push(self.row(figure, arm, String::new(), "val_entropy", seed, r.val_mean_entropy));
                    out.rows.push(self.row(figure, arm, String::new(), "train_entropy", seed, r.train_mean_entropy));
                    out.rows.push(self.row(figure, arm, String::new(), "w_l2", seed, r.w_l2));
                }
            }
            FigureKind::NoiseSweep => {
                let mut csv = String::from("noise,gamma,val_acc\n");
                for &fraction in &self.config.sweep.noise {
                    let noisy = inject_label_noise(&train_set, fraction, derive_seed(seed, 3))?;
                    for arm in [Arm::MaxEnt(0.0), self.maxent_arm()] {
                        let (model, _) = self.train_arm(arm, &noisy, &val_set, seed)?;
                        let acc = evaluate(&model, &val_set)?.accuracy;
                        csv.push_str(&format!("{fraction},{},{acc}\n", arm.strength()));
                        out.rows.push(self.row(figure, arm, format!("noise={fraction}"), "val_acc", seed, acc));
                    }
                }
                out.files.push((format!("noise_sweep_seed{seed}.csv"), csv.into_bytes()));
            }
            FigureKind::CeVsVal => {
                for (label, arm) in [("ce", Arm::MaxEnt(0.0)), ("maxent", self.maxent_arm())] {
                    let (_, history) = self.train_arm(arm, &train_set, &val_set, seed)?;
                    let mut buf = Vec::new();
                    history.write_csv(&mut buf)?;
                    out.files.push((format!("history_{label}_seed{seed}.csv"), buf));
                    let last = history.last();
                    out.rows.push(self.row(figure, arm, String::new(), "train_ce", seed, last.train_ce));
                    out.rows.push(self.row(figure, arm, String::new(), "val_acc", seed, last.val_accuracy.unwrap_or(f64::NAN)));
                }
            }
            FigureKind::DataFractionSweep => {
                let mut csv = String::from("fraction,gamma,train_n,val_acc\n");
                for &fraction in &self.config.sweep.fractions {
                    let count = ((fraction * train_set.len() as f64).round() as usize).clamp(1, train_set.len());
                    let subset = train_set.prefix(count);
                    for arm in [Arm::MaxEnt(0.0), self.maxent_arm()] {
                        let (model, _) = self.train_arm(arm, &subset, &val_set, seed)?;
                        let acc = evaluate(&model, &val_set)?.accuracy;
                        csv.push_str(&format!("{fraction},{},{count},{acc}\n", arm.strength()));
                        out.rows.push(self.row(figure, arm, format!("fraction={fraction}"), "val_acc", seed, acc));
                    }
                }
                out.files.push((format!("data_fraction_sweep_seed{seed}.csv"), csv.into_bytes()));
            }
            FigureKind::LsrCompare => {
                let mut csv = String::from("objective,strength,val_acc,val_entropy,top_prob_mean\n");
                for arm in [Arm::CrossEntropy, self.maxent_arm(), Arm::LabelSmoothing(self.config.sweep.lsr_epsilon)] {
                    let (model, _) = self.train_arm(arm, &train_set, &val_set, seed)?;
                    let ev = evaluate(&model, &val_set)?;
                    csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        arm.objective(),
                        arm.strength(),
                        ev.accuracy,
                        ev.mean_entropy,
                        ev.top_prob_mean
                    ));
                    out.rows.push(self.row(figure, arm, String::new(), "val_acc", seed, ev.accuracy));
                    out.rows.push(self.row(figure, arm, String::new(), "val_entropy", seed, ev.mean_entropy));
                }
                out.files.push((format!("lsr_compare_seed{seed}.csv"), csv.into_bytes()));
            }
        }
        Ok(out)
    }
}

/// `Φ(x)` for every row of `data`.
pub fn feature_matrix(model: &Model, data: &Dataset) -> maxent_core::Mat {
    let mut out = maxent_core::Mat::zeros(data.len(), model.feature_dim());
    for i in 0..data.len() {
        out.row_mut(i).copy_from_slice(&model.features(data.x(i)));
    }
    out
}

/// Median of a non-empty slice (mean of the middle pair for even length).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}
