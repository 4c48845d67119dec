//! Experiment configuration: a sectioned `key = value` text format.
//!
//! ```text
//! # comments run from '#' to end of line
//! [experiment]
//! name = fine
//! regime = fine_grained        # fine_grained | large_scale | feature_map | custom
//! seeds = 1, 2, 3, 4, 5, 6
//!
//! [train]
//! gamma =                      # empty value: keep the default
//! objective = maxent           # maxent | ce | lsr
//!
//! [component]                  # repeatable; custom regime only
//! weight = 0.5
//! mean = 1, 0
//! variance = 0.25              # or: diag = a, b   or: cov = a, b; c, d
//! ```
//!
//! Sections: `experiment`, `data`, `train`, `sweep`, `bounds`, `mixture`
//! (`file = path` to a file of `[component]` sections) and `component`.
//! Keys outside the tables below are errors, as are repeated keys and
//! unparseable values. Lists are comma separated.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use maxent_core::{Component, LrSchedule, Mat, Mixture, ObjectiveKind, TrainConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn parse_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse { line, message: message.into() }
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    FineGrained,
    LargeScale,
    FeatureMap,
    Custom,
}

impl Regime {
    pub fn tag(self) -> &'static str {
        match self {
            Regime::FineGrained => "fine_grained",
            Regime::LargeScale => "large_scale",
            Regime::FeatureMap => "feature_map",
            Regime::Custom => "custom",
        }
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fine_grained" => Ok(Regime::FineGrained),
            "large_scale" => Ok(Regime::LargeScale),
            "feature_map" => Ok(Regime::FeatureMap),
            "custom" => Ok(Regime::Custom),
            _ => Err(format!("unknown regime `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveName {
    MaxEnt,
    CrossEntropy,
    LabelSmoothing,
}

impl ObjectiveName {
    pub fn tag(self) -> &'static str {
        match self {
            ObjectiveName::MaxEnt => "maxent",
            ObjectiveName::CrossEntropy => "ce",
            ObjectiveName::LabelSmoothing => "lsr",
        }
    }
}

impl FromStr for ObjectiveName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "maxent" => Ok(ObjectiveName::MaxEnt),
            "ce" => Ok(ObjectiveName::CrossEntropy),
            "lsr" => Ok(ObjectiveName::LabelSmoothing),
            _ => Err(format!("unknown objective `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleName {
    Constant,
    Step,
    Linear,
}

impl FromStr for ScheduleName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "constant" => Ok(ScheduleName::Constant),
            "step" => Ok(ScheduleName::Step),
            "linear" => Ok(ScheduleName::Linear),
            _ => Err(format!("unknown schedule `{s}`")),
        }
    }
}

impl ScheduleName {
    fn tag(self) -> &'static str {
        match self {
            ScheduleName::Constant => "constant",
            ScheduleName::Step => "step",
            ScheduleName::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    Isotropic(f64),
    Diagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSpec {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub covariance: CovarianceSpec,
}

impl ComponentSpec {
    pub fn to_component(&self) -> Result<Component<f64>, maxent_core::Error> {
        let n = self.mean.len();
        let cov = match &self.covariance {
            CovarianceSpec::Isotropic(v) => Mat::identity(n).scale(*v),
            CovarianceSpec::Diagonal(d) => {
                if d.len() != n {
                    return Err(maxent_core::Error::Shape(format!("diag has {} entries for mean of length {n}", d.len())));
                }
                Mat::from_diagonal(d)
            }
            CovarianceSpec::Full(rows) => Mat::from_rows(rows)?,
        };
        Ok(Component::new(self.weight, self.mean.clone(), cov))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MixtureSource {
    /// Built from `[data]` by the regime fixture generator.
    Fixture,
    Inline(Vec<ComponentSpec>),
    /// Path as written; resolved against the config's directory on load.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSection {
    pub train_n: usize,
    pub val_n: usize,
    pub dim: usize,
    pub classes: usize,
    pub fixture_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSection {
    pub gamma: f64,
    pub objective: ObjectiveName,
    pub epsilon: f64,
    pub lr: f64,
    pub schedule: ScheduleName,
    pub lr_factor: f64,
    pub lr_interval: usize,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub init_scale: f64,
    pub train_feature_map: bool,
}

impl TrainSection {
    /// Core training config for one seed.
    pub fn to_train_config(&self, seed: u64) -> TrainConfig<f64> {
        let lr_schedule = match self.schedule {
            ScheduleName::Constant => LrSchedule::Constant(self.lr),
            ScheduleName::Step => LrSchedule::Step { initial: self.lr, factor: self.lr_factor, interval: self.lr_interval },
            ScheduleName::Linear => LrSchedule::Linear { initial: self.lr, epochs: self.epochs },
        };
        let objective = match self.objective {
            ObjectiveName::MaxEnt => ObjectiveKind::MaxEnt,
            ObjectiveName::CrossEntropy => ObjectiveKind::CrossEntropy,
            ObjectiveName::LabelSmoothing => ObjectiveKind::LabelSmoothing(self.epsilon),
        };
        TrainConfig {
            gamma: self.gamma,
            objective,
            lr_schedule,
            weight_decay: self.weight_decay,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
            train_feature_map: self.train_feature_map,
            init_scale: self.init_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub gammas: Vec<f64>,
    pub noise: Vec<f64>,
    pub fractions: Vec<f64>,
    pub lsr_epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsSection {
    pub delta: f64,
    pub samples: Vec<usize>,
    pub trials: usize,
    /// Draws per expected-entropy estimate; 0 picks `clamp(10·N, 10⁴, 10⁵)`.
    pub reference_draws: usize,
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub regime: Regime,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    pub data: DataSection,
    pub train: TrainSection,
    pub sweep: SweepSection,
    pub bounds: BoundsSection,
    pub mixture: MixtureSource,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            regime: Regime::FineGrained,
            seeds: (1..=6).collect(),
            out: None,
            data: DataSection { train_n: 100, val_n: 2000, dim: 16, classes: 10, fixture_seed: 7 },
            train: TrainSection {
                gamma: 1.0,
                objective: ObjectiveName::MaxEnt,
                epsilon: 0.1,
                lr: 0.1,
                schedule: ScheduleName::Constant,
                lr_factor: 0.1,
                lr_interval: 30,
                weight_decay: 0.0,
                batch_size: 32,
                epochs: 100,
                init_scale: 0.01,
                train_feature_map: false,
            },
            sweep: SweepSection {
                gammas: vec![0.0, 0.5, 1.0],
                noise: vec![0.0, 0.1, 0.2, 0.3],
                fractions: vec![0.25, 0.5, 1.0],
                lsr_epsilon: 0.1,
            },
            bounds: BoundsSection {
                delta: 0.1,
                samples: vec![100, 1000, 10_000],
                trials: 1000,
                reference_draws: 0,
                scales: vec![0.1, 1.0, 10.0],
            },
            mixture: MixtureSource::Fixture,
        }
    }
}

struct Entry {
    key: String,
    value: String,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn tokenize(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, format!("unterminated section header `{content}`")))?
                .trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(parse_err(line, format!("bad section name `{name}`")));
            }
            sections.push(Section { name: name.to_string(), line, entries: Vec::new() });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(parse_err(line, format!("bad key `{key}`")));
        }
        let section = sections.last_mut().ok_or_else(|| parse_err(line, "entry before any section header"))?;
        if section.entries.iter().any(|e| e.key == key) {
            return Err(parse_err(line, format!("duplicate key `{key}` in [{}]", section.name)));
        }
        section.entries.push(Entry { key: key.to_string(), value: value.trim().to_string(), line });
    }
    Ok(sections)
}

fn scalar<T: FromStr>(e: &Entry) -> Result<T, ConfigError> {
    e.value.parse().map_err(|_| parse_err(e.line, format!("cannot parse `{}` for `{}`", e.value, e.key)))
}

fn named<T: FromStr<Err = String>>(e: &Entry) -> Result<T, ConfigError> {
    e.value.parse().map_err(|m: String| parse_err(e.line, m))
}

fn list<T: FromStr>(e: &Entry) -> Result<Vec<T>, ConfigError> {
    e.value
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| parse_err(e.line, format!("cannot parse `{}` in `{}`", t.trim(), e.key))))
        .collect()
}

fn boolean(e: &Entry) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        v => Err(parse_err(e.line, format!("expected true/false for `{}`, got `{v}`", e.key))),
    }
}

fn unknown(section: &str, e: &Entry) -> ConfigError {
    parse_err(e.line, format!("unknown key `{}` in [{section}]", e.key))
}

fn parse_component(section: &Section) -> Result<ComponentSpec, ConfigError> {
    let (mut weight, mut mean, mut covariance) = (None, None, None);
    for e in &section.entries {
        if e.value.is_empty() {
            return Err(parse_err(e.line, format!("`{}` needs a value", e.key)));
        }
        let cov = match e.key.as_str() {
            "weight" => {
                weight = Some(scalar(e)?);
                None
            }
            "mean" => {
                mean = Some(list(e)?);
                None
            }
            "variance" => Some(CovarianceSpec::Isotropic(scalar(e)?)),
            "diag" => Some(CovarianceSpec::Diagonal(list(e)?)),
            "cov" => Some(CovarianceSpec::Full(
                e.value
                    .split(';')
                    .map(|row| list(&Entry { key: e.key.clone(), value: row.to_string(), line: e.line }))
                    .collect::<Result<_, _>>()?,
            )),
            _ => return Err(unknown("component", e)),
        };
        if let Some(c) = cov {
            if covariance.replace(c).is_some() {
                return Err(parse_err(e.line, "component sets more than one of variance/diag/cov"));
            }
        }
    }
    let missing = |what: &str| parse_err(section.line, format!("component is missing `{what}`"));
    Ok(ComponentSpec {
        weight: weight.ok_or_else(|| missing("weight"))?,
        mean: mean.ok_or_else(|| missing("mean"))?,
        covariance: covariance.ok_or_else(|| missing("variance, diag or cov"))?,
    })
}

/// Parses `[component]` sections from a mixture file.
pub fn parse_components(text: &str) -> Result<Vec<ComponentSpec>, ConfigError> {
    tokenize(text)?
        .iter()
        .map(|s| {
            if s.name == "component" {
                parse_component(s)
            } else {
                Err(parse_err(s.line, format!("mixture files hold only [component] sections, found [{}]", s.name)))
            }
        })
        .collect()
}

/// Reads a mixture file of `[component]` sections.
pub fn load_components(path: &Path) -> Result<Vec<ComponentSpec>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    parse_components(&text)
}

/// Parses and validates a config. Relative mixture-file paths are checked
/// against the current directory; see [`load_config`] for file-relative paths.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_in(text, None)
}

/// Reads a config file; a relative `[mixture] file` resolves against the
/// config's own directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    parse_config_in(&text, path.parent())
}

fn parse_config_in(text: &str, base: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    let mut components = Vec::new();
    let mut file: Option<PathBuf> = None;
    let sections = tokenize(text)?;
    for section in &sections {
        if section.name != "component" {
            if seen.contains(&section.name.as_str()) {
                return Err(parse_err(section.line, format!("duplicate section [{}]", section.name)));
            }
            seen.push(&section.name);
        }
        if section.name == "component" {
            components.push(parse_component(section)?);
            continue;
        }
        if !KEYS.iter().any(|(name, _)| *name == section.name) {
            return Err(parse_err(section.line, format!("unknown section [{}]", section.name)));
        }
        for e in &section.entries {
            if e.value.is_empty() {
                // empty value keeps the default
                if !known_key(&section.name, &e.key) {
                    return Err(unknown(&section.name, e));
                }
                continue;
            }
            apply(&mut cfg, &section.name, e, &mut file)?;
        }
    }
    cfg.mixture = match (file, components.is_empty()) {
        (Some(_), false) => return Err(invalid("mixture", "give either [mixture] file or [component] sections, not both")),
        (Some(f), true) => MixtureSource::File(f),
        (None, false) => MixtureSource::Inline(components),
        (None, true) => MixtureSource::Fixture,
    };
    validate(&cfg, base)?;
    Ok(cfg)
}

const KEYS: &[(&str, &[&str])] = &[
    ("experiment", &["name", "regime", "seeds", "out"]),
    ("data", &["train_n", "val_n", "dim", "classes", "fixture_seed"]),
    (
        "train",
        &[
            "gamma",
            "objective",
            "epsilon",
            "lr",
            "schedule",
            "lr_factor",
            "lr_interval",
            "weight_decay",
            "batch_size",
            "epochs",
            "init_scale",
            "train_feature_map",
        ],
    ),
    ("sweep", &["gammas", "noise", "fractions", "lsr_epsilon"]),
    ("bounds", &["delta", "samples", "trials", "reference_draws", "scales"]),
    ("mixture", &["file"]),
];

fn known_key(section: &str, key: &str) -> bool {
    KEYS.iter().any(|(s, keys)| *s == section && keys.contains(&key))
}

fn apply(cfg: &mut ExperimentConfig, section: &str, e: &Entry, file: &mut Option<PathBuf>) -> Result<(), ConfigError> {
    match (section, e.key.as_str()) {
        ("experiment", "name") => cfg.name = e.value.clone(),
        ("experiment", "regime") => cfg.regime = named(e)?,
        ("experiment", "seeds") => cfg.seeds = list(e)?,
        ("experiment", "out") => cfg.out = Some(PathBuf::from(&e.value)),
        ("data", "train_n") => cfg.data.train_n = scalar(e)?,
        ("data", "val_n") => cfg.data.val_n = scalar(e)?,
        ("data", "dim") => cfg.data.dim = scalar(e)?,
        ("data", "classes") => cfg.data.classes = scalar(e)?,
        ("data", "fixture_seed") => cfg.data.fixture_seed = scalar(e)?,
        ("train", "gamma") => cfg.train.gamma = scalar(e)?,
        ("train", "objective") => cfg.train.objective = named(e)?,
        ("train", "epsilon") => cfg.train.epsilon = scalar(e)?,
        ("train", "lr") => cfg.train.lr = scalar(e)?,
        ("train", "schedule") => cfg.train.schedule = named(e)?,
        ("train", "lr_factor") => cfg.train.lr_factor = scalar(e)?,
        ("train", "lr_interval") => cfg.train.lr_interval = scalar(e)?,
        ("train", "weight_decay") => cfg.train.weight_decay = scalar(e)?,
        ("train", "batch_size") => cfg.train.batch_size = scalar(e)?,
        ("train", "epochs") => cfg.train.epochs = scalar(e)?,
        ("train", "init_scale") => cfg.train.init_scale = scalar(e)?,
        ("train", "train_feature_map") => cfg.train.train_feature_map = boolean(e)?,
        ("sweep", "gammas") => cfg.sweep.gammas = list(e)?,
        ("sweep", "noise") => cfg.sweep.noise = list(e)?,
        ("sweep", "fractions") => cfg.sweep.fractions = list(e)?,
        ("sweep", "lsr_epsilon") => cfg.sweep.lsr_epsilon = scalar(e)?,
        ("bounds", "delta") => cfg.bounds.delta = scalar(e)?,
        ("bounds", "samples") => cfg.bounds.samples = list(e)?,
        ("bounds", "trials") => cfg.bounds.trials = scalar(e)?,
        ("bounds", "reference_draws") => cfg.bounds.reference_draws = scalar(e)?,
        ("bounds", "scales") => cfg.bounds.scales = list(e)?,
        ("mixture", "file") => *file = Some(PathBuf::from(&e.value)),
        _ => return Err(unknown(section, e)),
    }
    Ok(())
}

fn check(ok: bool, field: &str, message: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(field, message))
    }
}

fn validate(cfg: &ExperimentConfig, base: Option<&Path>) -> Result<(), ConfigError> {
    let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
    check(!cfg.name.is_empty() && !cfg.name.contains(['/', '\\']), "name", "must be a non-empty plain name")?;
    check(!cfg.seeds.is_empty(), "seeds", "seed list is empty")?;
    let d = &cfg.data;
    check(d.train_n >= 1, "train_n", "must be >= 1")?;
    check(d.val_n >= 1, "val_n", "must be >= 1")?;
    check(d.dim >= 1, "dim", "must be >= 1")?;
    check(d.classes >= 2, "classes", "must be >= 2")?;
    if matches!(cfg.regime, Regime::FineGrained | Regime::LargeScale) {
        check(d.classes <= d.dim, "classes", "regime fixtures need classes <= dim")?;
    }
    if cfg.regime == Regime::FeatureMap {
        check(d.dim >= 4 && d.classes <= d.dim - d.dim / 4, "dim", "feature_map fixture needs classes <= dim - dim/4")?;
    }
    let t = &cfg.train;
    check(finite_nonneg(t.gamma), "gamma", "must be finite and >= 0")?;
    check(finite_nonneg(t.epsilon) && t.epsilon < 1.0, "epsilon", "must lie in [0, 1)")?;
    check(t.lr.is_finite() && t.lr > 0.0, "lr", "must be finite and > 0")?;
    check(finite_nonneg(t.lr_factor), "lr_factor", "must be finite and >= 0")?;
    check(t.lr_interval >= 1, "lr_interval", "must be >= 1")?;
    check(finite_nonneg(t.weight_decay), "weight_decay", "must be finite and >= 0")?;
    check(t.batch_size >= 1, "batch_size", "must be >= 1")?;
    check(finite_nonneg(t.init_scale), "init_scale", "must be finite and >= 0")?;
    let s = &cfg.sweep;
    check(!s.gammas.is_empty() && s.gammas.iter().all(|&g| finite_nonneg(g)), "gammas", "need a non-empty list of finite values >= 0")?;
    check(!s.noise.is_empty() && s.noise.iter().all(|&f| (0.0..=1.0).contains(&f)), "noise", "need a non-empty list in [0, 1]")?;
    check(!s.fractions.is_empty() && s.fractions.iter().all(|&f| f > 0.0 && f <= 1.0), "fractions", "need a non-empty list in (0, 1]")?;
    check(finite_nonneg(s.lsr_epsilon) && s.lsr_epsilon < 1.0, "lsr_epsilon", "must lie in [0, 1)")?;
    let b = &cfg.bounds;
    check(b.delta > 0.0 && b.delta < 0.5, "delta", "must lie in (0, 0.5)")?;
    check(!b.samples.is_empty() && b.samples.iter().all(|&n| n >= 1), "samples", "need a non-empty list of sizes >= 1")?;
    check(b.trials >= 100, "trials", "must be >= 100")?;
    check(b.reference_draws == 0 || b.reference_draws >= 100, "reference_draws", "must be 0 (auto) or >= 100")?;
    check(!b.scales.is_empty() && b.scales.iter().all(|&v| finite_nonneg(v)), "scales", "need a non-empty list of finite values >= 0")?;
    match (&cfg.mixture, cfg.regime) {
        (MixtureSource::Fixture, Regime::Custom) => {
            return Err(invalid("mixture", "custom regime needs [component] sections or [mixture] file"));
        }
        (MixtureSource::Inline(_) | MixtureSource::File(_), r) if r != Regime::Custom => {
            return Err(invalid("regime", "explicit mixtures require regime = custom"));
        }
        (MixtureSource::File(f), _) => {
            let path = resolve(base, f);
            check(path.is_file(), "file", &format!("mixture file {} does not exist", path.display()))?;
        }
        (MixtureSource::Inline(specs), _) => {
            build_mixture(specs).map_err(|e| invalid("component", e.to_string()))?;
        }
        _ => {}
    }
    Ok(())
}

pub fn resolve(base: Option<&Path>, path: &Path) -> PathBuf {
    match base {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

pub fn build_mixture(specs: &[ComponentSpec]) -> Result<Mixture, maxent_core::Error> {
    let comps = specs.iter().map(ComponentSpec::to_component).collect::<Result<Vec<_>, _>>()?;
    Mixture::new(comps)
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Writes components in the config syntax (shared by configs and mixture files).
pub fn serialize_components(specs: &[ComponentSpec]) -> String {
    let mut s = String::new();
    for c in specs {
        let _ = writeln!(s, "\n[component]\nweight = {}\nmean = {}", c.weight, join(&c.mean));
        let _ = match &c.covariance {
            CovarianceSpec::Isotropic(v) => writeln!(s, "variance = {v}"),
            CovarianceSpec::Diagonal(d) => writeln!(s, "diag = {}", join(d)),
            CovarianceSpec::Full(rows) => {
                writeln!(s, "cov = {}", rows.iter().map(|r| join(r)).collect::<Vec<_>>().join("; "))
            }
        };
    }
    s
}

/// Every key written explicitly; `parse_config(&serialize(c)) == c`.
pub fn serialize(cfg: &ExperimentConfig) -> String {
    let t = &cfg.train;
    let mut s = String::new();
    let _ = writeln!(s, "[experiment]\nname = {}\nregime = {}\nseeds = {}", cfg.name, cfg.regime.tag(), join(&cfg.seeds));
    if let Some(out) = &cfg.out {
        let _ = writeln!(s, "out = {}", out.display());
    }
    let d = &cfg.data;
    let _ = writeln!(
        s,
        "\n[data]\ntrain_n = {}\nval_n = {}\ndim = {}\nclasses = {}\nfixture_seed = {}",
        d.train_n, d.val_n, d.dim, d.classes, d.fixture_seed
    );
    let _ = writeln!(
        s,
        "\n[train]\ngamma = {}\nobjective = {}\nepsilon = {}\nlr = {}\nschedule = {}\nlr_factor = {}\nlr_interval = {}\n\
         weight_decay = {}\nbatch_size = {}\nepochs = {}\ninit_scale = {}\ntrain_feature_map = {}",
        t.gamma,
        t.objective.tag(),
        t.epsilon,
        t.lr,
        t.schedule.tag(),
        t.lr_factor,
        t.lr_interval,
        t.weight_decay,
        t.batch_size,
        t.epochs,
        t.init_scale,
        t.train_feature_map
    );
    let w = &cfg.sweep;
    let _ = writeln!(
        s,
        "\n[sweep]\ngammas = {}\nnoise = {}\nfractions = {}\nlsr_epsilon = {}",
        join(&w.gammas),
        join(&w.noise),
        join(&w.fractions),
        w.lsr_epsilon
    );
    let b = &cfg.bounds;
    let _ = writeln!(
        s,
        "\n[bounds]\ndelta = {}\nsamples = {}\ntrials = {}\nreference_draws = {}\nscales = {}",
        b.delta,
        join(&b.samples),
        b.trials,
        b.reference_draws,
        join(&b.scales)
    );
    match &cfg.mixture {
        MixtureSource::Fixture => {}
        MixtureSource::File(f) => {
            let _ = writeln!(s, "\n[mixture]\nfile = {}", f.display());
        }
        MixtureSource::Inline(specs) => s.push_str(&serialize_components(specs)),
    }
    s
}
