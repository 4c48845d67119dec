//! Mini-batch SGD (no momentum) with weight decay, learning-rate schedules,
//! label-noise injection and per-epoch telemetry.

use std::io::Write;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::classifier::{Batch, LinearSoftmaxModel, Objective};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{self, streams};
use crate::scalar::{Real, RunningStats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveKind<T> {
    MaxEnt,
    LabelSmoothing(T),
    CrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LrSchedule<T> {
    Constant(T),
    /// `η · factor^(epoch / interval)`.
    Step { initial: T, factor: T, interval: usize },
    /// `η · (1 − epoch / epochs)`.
    Linear { initial: T, epochs: usize },
}

impl<T: Real> LrSchedule<T> {
    /// Rate used during the 0-based training epoch `epoch`.
    pub fn rate(&self, epoch: usize) -> T {
        match *self {
            LrSchedule::Constant(lr) => lr,
            LrSchedule::Step { initial, factor, interval } => {
                initial * factor.powi((epoch / interval.max(1)) as i32)
            }
            LrSchedule::Linear { initial, epochs } => {
                if epochs == 0 {
                    initial
                } else {
                    initial * (T::one() - T::from_usize_lossy(epoch.min(epochs)) / T::from_usize_lossy(epochs))
                }
            }
        }
    }

    pub fn initial(&self) -> T {
        self.rate(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub gamma: T,
    pub objective: ObjectiveKind<T>,
    pub lr_schedule: LrSchedule<T>,
    pub weight_decay: T,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub train_feature_map: bool,
    pub init_scale: T,
}

impl<T: Real> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            gamma: T::one(),
            objective: ObjectiveKind::MaxEnt,
            lr_schedule: LrSchedule::Constant(T::lit(0.1)),
            weight_decay: T::zero(),
            batch_size: 32,
            epochs: 100,
            seed: 1,
            train_feature_map: false,
            init_scale: T::lit(0.01),
        }
    }
}

impl<T: Real> TrainConfig<T> {
    pub fn objective(&self) -> Objective<T> {
        match self.objective {
            ObjectiveKind::MaxEnt => Objective::MaxEnt { gamma: self.gamma },
            ObjectiveKind::LabelSmoothing(epsilon) => Objective::LabelSmoothing { epsilon },
            ObjectiveKind::CrossEntropy => Objective::CrossEntropy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.gamma, self.weight_decay, self.init_scale, self.lr_schedule.initial()]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain("training config has non-finite scalars".into()));
        }
        if self.gamma < T::zero() || self.weight_decay < T::zero() || self.init_scale < T::zero() {
            return Err(Error::Domain("gamma, weight decay and init scale must be >= 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Domain("batch size must be >= 1".into()));
        }
        if let ObjectiveKind::LabelSmoothing(e) = self.objective {
            if !(e >= T::zero() && e < T::one()) {
                return Err(Error::Domain(format!("smoothing epsilon {e} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord<T> {
    pub epoch: usize,
    pub train_ce: T,
    pub train_mean_entropy: T,
    pub val_ce: Option<T>,
    pub val_accuracy: Option<T>,
    pub w_l2_norm: T,
    pub w_inf_norm: T,
    pub lr: T,
}

/// One record per epoch; record 0 is the state before training.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory<T> {
    pub records: Vec<EpochRecord<T>>,
}

impl<T: Real> TrainHistory<T> {
    pub fn last(&self) -> &EpochRecord<T> {
        self.records.last().expect("history always has the epoch-0 record")
    }

    /// `epoch,train_ce,train_entropy,val_ce,val_acc,w_l2,w_inf,lr`; absent
    /// validation values are empty fields.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["epoch", "train_ce", "train_entropy", "val_ce", "val_acc", "w_l2", "w_inf", "lr"])?;
        let opt = |v: Option<T>| v.map(|x| x.as_f64().to_string()).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.epoch.to_string(),
                r.train_ce.as_f64().to_string(),
                r.train_mean_entropy.as_f64().to_string(),
                opt(r.val_ce),
                opt(r.val_accuracy),
                r.w_l2_norm.as_f64().to_string(),
                r.w_inf_norm.as_f64().to_string(),
                r.lr.as_f64().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Uniform `[−s, s]` initialization. `A` is omitted (identity) when
/// `n == n_raw` and drawn from the same law otherwise.
pub fn init_model<T: Real>(
    classes: usize,
    dim: usize,
    raw_dim: usize,
    init_scale: T,
    seed: u64,
) -> Result<LinearSoftmaxModel<T>> {
    if classes == 0 || dim == 0 || raw_dim == 0 {
        return Err(Error::Shape(format!("dimensions must be >= 1, got C={classes} n={dim} n_raw={raw_dim}")));
    }
    let mut rng = rng::substream(seed, streams::INIT);
    let s = init_scale.as_f64();
    let mut draw = |r: usize, c: usize| Matrix::from_fn(r, c, |_, _| T::lit(rng::symmetric_uniform(&mut rng, s)));
    let w = draw(classes, dim);
    let a = (dim != raw_dim).then(|| draw(dim, raw_dim));
    LinearSoftmaxModel::new(w, a)
}

/// Picks `⌊fraction·N⌋` rows uniformly without replacement and rotates their
/// labels by a random cyclic shift among the selected positions.
pub fn inject_label_noise<T: Real>(dataset: &LabeledDataset<T>, fraction: f64, seed: u64) -> Result<LabeledDataset<T>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Domain(format!("noise fraction {fraction} outside [0, 1]")));
    }
    let n = dataset.len();
    // the epsilon keeps e.g. 0.29 * 100 from flooring to 28
    let count = ((fraction * n as f64) + 1e-9).floor().min(n as f64) as usize;
    let mut labels = dataset.labels().to_vec();
    let mut mask = dataset.noise_mask().to_vec();
    if count > 0 {
        let mut rng = rng::substream(seed, streams::NOISE);
        let mut chosen = index::sample(&mut rng, n, count).into_vec();
        chosen.sort_unstable();
        let shift = if count > 1 { rng.random_range(1..count) } else { 0 };
        for (k, &i) in chosen.iter().enumerate() {
            labels[i] = dataset.y(chosen[(k + shift) % count]);
            mask[i] = true;
        }
    }
    Ok(dataset.with_labels(labels, mask))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<T> {
    pub accuracy: T,
    pub mean_ce: T,
    pub mean_entropy: T,
    pub top_prob_mean: T,
    /// Counts of the top-class probability in 20 equal bins on `[0, 1]`.
    pub top_prob_histogram: [usize; 20],
}

pub fn evaluate<T: Real>(model: &LinearSoftmaxModel<T>, dataset: &LabeledDataset<T>) -> Result<Evaluation<T>> {
    if dataset.is_empty() {
        return Err(Error::Shape("cannot evaluate on an empty dataset".into()));
    }
    let mut correct = 0usize;
    let (mut ce, mut ent, mut top) = (RunningStats::new(), RunningStats::new(), RunningStats::new());
    let mut hist = [0usize; 20];
    for i in 0..dataset.len() {
        let pred = model.predict(dataset.x(i))?;
        let (k, p) = pred.top();
        if k == dataset.y(i) {
            correct += 1;
        }
        ce.push(pred.cross_entropy(dataset.y(i)));
        ent.push(pred.entropy);
        top.push(p);
        let bin = ((p.as_f64() * 20.0).floor() as usize).min(19);
        hist[bin] += 1;
    }
    Ok(Evaluation {
        accuracy: T::from_usize_lossy(correct) / T::from_usize_lossy(dataset.len()),
        mean_ce: ce.mean(),
        mean_entropy: ent.mean(),
        top_prob_mean: top.mean(),
        top_prob_histogram: hist,
    })
}

fn record<T: Real>(
    epoch: usize,
    model: &LinearSoftmaxModel<T>,
    train: &LabeledDataset<T>,
    val: &LabeledDataset<T>,
    lr: T,
) -> Result<EpochRecord<T>> {
    let tr = evaluate(model, train)?;
    let va = if val.is_empty() { None } else { Some(evaluate(model, val)?) };
    Ok(EpochRecord {
        epoch,
        train_ce: tr.mean_ce,
        train_mean_entropy: tr.mean_entropy,
        val_ce: va.as_ref().map(|e| e.mean_ce),
        val_accuracy: va.as_ref().map(|e| e.accuracy),
        w_l2_norm: model.l2_norm(),
        w_inf_norm: model.inf_norm(),
        lr,
    })
}

/// `p ← p − lr·(g + λ·p)`.
fn sgd_step<T: Real>(param: &mut Matrix<T>, grad: &Matrix<T>, lr: T, decay: T) {
    for (p, &g) in param.as_mut_slice().iter_mut().zip(grad.as_slice()) {
        *p = *p - lr * (g + decay * *p);
    }
}

/// Runs `config.epochs` epochs of shuffled mini-batch SGD. Telemetry after
/// each epoch is a full pass over the train (and validation) set.
pub fn train<T: Real>(
    model: &LinearSoftmaxModel<T>,
    train_set: &LabeledDataset<T>,
    val_set: &LabeledDataset<T>,
    config: &TrainConfig<T>,
) -> Result<(LinearSoftmaxModel<T>, TrainHistory<T>)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Shape("empty training set".into()));
    }
    if train_set.dim() != model.raw_dim() || (!val_set.is_empty() && val_set.dim() != model.raw_dim()) {
        return Err(Error::Shape(format!("model expects inputs of dimension {}", model.raw_dim())));
    }
    if train_set.classes() > model.class_count() {
        return Err(Error::Shape(format!(
            "{} classes in data, {} in model",
            train_set.classes(),
            model.class_count()
        )));
    }
    let mut model = model.clone();
    if config.train_feature_map && config.epochs > 0 {
        model.materialize_feature_map();
    }
    let objective = config.objective();
    let mut history = TrainHistory { records: vec![record(0, &model, train_set, val_set, config.lr_schedule.rate(0))?] };
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..config.epochs {
        let lr = config.lr_schedule.rate(epoch);
        let mut rng = rng::substream(config.seed, streams::SHUFFLE + epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);
        for (b, rows) in order.chunks(config.batch_size).enumerate() {
            let step = objective
                .loss_and_gradient(&model, Batch::rows(train_set, rows), config.train_feature_map)
                .map_err(|e| match e {
                    Error::NonFinite(_) => Error::Divergence { epoch: epoch + 1, batch: b, loss: f64::NAN },
                    other => other,
                })?;
            sgd_step(model.classifier_mut(), &step.gradient.classifier, lr, config.weight_decay);
            if let (Some(a), Some(ga)) = (model.feature_map_mut(), step.gradient.feature_map.as_ref()) {
                sgd_step(a, ga, lr, config.weight_decay);
            }
            if !model.is_finite() {
                return Err(Error::Divergence { epoch: epoch + 1, batch: b, loss: step.loss.as_f64() });
            }
        }
        history.records.push(record(epoch + 1, &model, train_set, val_set, lr)?);
    }
    Ok((model, history))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub gamma: T,
    pub val_accuracy: T,
    pub val_mean_entropy: T,
    pub train_mean_entropy: T,
    pub w_l2: T,
}

/// One full MaxEnt training run per `γ` from the same initialization and seed.
pub fn gamma_sweep<T: Real>(
    train_set: &LabeledDataset<T>,
    val_set: &LabeledDataset<T>,
    base_config: &TrainConfig<T>,
    gammas: &[T],
) -> Result<Vec<SweepRow<T>>> {
    if gammas.is_empty() {
        return Err(Error::Domain("gamma list is empty".into()));
    }
    let n = train_set.dim();
    let init = init_model(train_set.classes(), n, n, base_config.init_scale, base_config.seed)?;
    let eval_set = if val_set.is_empty() { train_set } else { val_set };
    gammas
        .iter()
        .map(|&gamma| {
            let run = || -> Result<SweepRow<T>> {
                let config = TrainConfig { gamma, objective: ObjectiveKind::MaxEnt, ..base_config.clone() };
                let (model, history) = train(&init, train_set, val_set, &config)?;
                let ev = evaluate(&model, eval_set)?;
                Ok(SweepRow {
                    gamma,
                    val_accuracy: ev.accuracy,
                    val_mean_entropy: ev.mean_entropy,
                    train_mean_entropy: history.last().train_mean_entropy,
                    w_l2: model.l2_norm(),
                })
            };
            run().map_err(|e| Error::Sweep { gamma: gamma.as_f64(), source: Box::new(e) })
        })
        .collect()
}

/// `gamma,val_acc,val_entropy,w_l2`.
pub fn write_sweep_csv<T: Real, W: Write>(rows: &[SweepRow<T>], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["gamma", "val_acc", "val_entropy", "w_l2"])?;
    for r in rows {
        w.write_record([r.gamma, r.val_accuracy, r.val_mean_entropy, r.w_l2].map(|v| v.as_f64().to_string()))?;
    }
    w.flush()?;
    Ok(())
}
