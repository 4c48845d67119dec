//! Linear softmax classifier, prediction entropy and the training objectives.
//!
//! Logits are `z = W·Φ(x)` with `Φ(x) = A·x` when a feature map is present
//! and `Φ(x) = x` otherwise. There is no bias term. All entropies are in nats.
//!
//! The regularized objective for one labelled sample is
//!
//! ```text
//! −ln p_y(x) − γ·H[p(·|x)]
//! ```
//!
//! and its gradient with respect to the logits is
//! `(p − ȳ) + γ·p ⊙ (ln p + H)`.

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mixture::GaussianMixture;
use crate::rng::{self, streams};
use crate::scalar::{norm2, xlogx, Real, RunningStats};

/// Classifier weights `W` (C×n) and an optional linear feature map `A` (n×n_raw).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSoftmaxModel<T> {
    classifier: Matrix<T>,
    feature_map: Option<Matrix<T>>,
}

impl<T: Real> LinearSoftmaxModel<T> {
    pub fn new(classifier: Matrix<T>, feature_map: Option<Matrix<T>>) -> Result<Self> {
        let (c, n) = classifier.shape();
        if c < 2 || n == 0 {
            return Err(Error::Shape(format!("classifier must be C×n with C ≥ 2, n ≥ 1; got {c}x{n}")));
        }
        if let Some(a) = &feature_map {
            if a.rows() != n || a.cols() == 0 {
                return Err(Error::Shape(format!("feature map {:?} does not feed a {c}x{n} classifier", a.shape())));
            }
            if !a.is_finite() {
                return Err(Error::NonFinite("feature map".into()));
            }
        }
        if !classifier.is_finite() {
            return Err(Error::NonFinite("classifier".into()));
        }
        Ok(Self { classifier, feature_map })
    }

    pub fn zeros(classes: usize, dim: usize) -> Result<Self> {
        Self::new(Matrix::zeros(classes, dim), None)
    }

    #[inline]
    pub fn class_count(&self) -> usize {
        self.classifier.rows()
    }

    #[inline]
    pub fn feature_dim(&self) -> usize {
        self.classifier.cols()
    }

    /// Input dimension (`n_raw`); equals `feature_dim` without a feature map.
    pub fn raw_dim(&self) -> usize {
        self.feature_map.as_ref().map_or(self.feature_dim(), Matrix::cols)
    }

    pub fn classifier(&self) -> &Matrix<T> {
        &self.classifier
    }

    pub fn classifier_mut(&mut self) -> &mut Matrix<T> {
        &mut self.classifier
    }

    pub fn feature_map(&self) -> Option<&Matrix<T>> {
        self.feature_map.as_ref()
    }

    pub fn feature_map_mut(&mut self) -> Option<&mut Matrix<T>> {
        self.feature_map.as_mut()
    }

    /// Replaces the identity flag with an explicit identity matrix.
    pub fn materialize_feature_map(&mut self) {
        if self.feature_map.is_none() {
            self.feature_map = Some(Matrix::identity(self.feature_dim()));
        }
    }

    pub fn is_finite(&self) -> bool {
        self.classifier.is_finite() && self.feature_map.as_ref().is_none_or(Matrix::is_finite)
    }

    /// `‖w‖₂ = sqrt(Σ_i ‖w_i‖²)`.
    pub fn l2_norm(&self) -> T {
        self.classifier.frobenius_norm()
    }

    /// `‖w‖∞ = max_i ‖w_i‖₂`.
    pub fn inf_norm(&self) -> T {
        self.classifier.row_iter().map(norm2).fold(T::zero(), T::max)
    }

    /// `Φ(x)`.
    pub fn features(&self, x: &[T]) -> Vec<T> {
        match &self.feature_map {
            Some(a) => a.matvec(x),
            None => x.to_vec(),
        }
    }

    /// Distribution of `Φ(x)` when `x` follows `mixture`.
    pub fn feature_mixture(&self, mixture: &GaussianMixture<T>) -> Result<GaussianMixture<T>> {
        match &self.feature_map {
            Some(a) => mixture.linear_map(a),
            None if mixture.dim() == self.feature_dim() => Ok(mixture.clone()),
            None => Err(Error::Shape(format!("mixture dim {} vs model dim {}", mixture.dim(), self.feature_dim()))),
        }
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.raw_dim() {
            return Err(Error::Shape(format!("input of length {} for raw dimension {}", x.len(), self.raw_dim())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input features".into()));
        }
        Ok(())
    }

    pub fn logits(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        let z = self.classifier.matvec(&self.features(x));
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logits".into()));
        }
        Ok(z)
    }

    /// Prediction entropy using caller buffers for `Φ(x)` and the logits.
    fn entropy_with(&self, x: &[T], phi: &mut [T], z: &mut [T]) -> Result<T> {
        self.check_input(x)?;
        let phi: &[T] = match &self.feature_map {
            Some(a) => {
                a.matvec_into(x, phi);
                phi
            }
            None => x,
        };
        self.classifier.matvec_into(phi, z);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logits".into()));
        }
        Ok(logit_entropy(z))
    }

    pub fn predict_proba(&self, x: &[T]) -> Result<ProbVector<T>> {
        Ok(ProbVector::from_logits(&self.logits(x)?))
    }

    /// Softmax statistics of a raw input.
    pub fn predict(&self, x: &[T]) -> Result<Prediction<T>> {
        Ok(Prediction::from_logits(&self.logits(x)?))
    }
}

/// Probability vector over `C` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector<T>(Vec<T>);

impl<T: Real> ProbVector<T> {
    /// Validates entries in `[0, 1]` summing to one (within `1e-12`, or a few
    /// ulps for low-precision scalars).
    pub fn new(p: Vec<T>) -> Result<Self> {
        if p.is_empty() || p.iter().any(|&x| !(x >= T::zero() && x <= T::one())) {
            return Err(Error::Domain("probabilities must lie in [0, 1]".into()));
        }
        let total: T = p.iter().copied().sum();
        let tol = T::lit(1e-12).max(T::epsilon() * T::from_usize_lossy(4 * p.len()));
        if (total - T::one()).abs() > tol {
            return Err(Error::Domain(format!("probabilities sum to {total}")));
        }
        Ok(Self(p))
    }

    pub fn from_logits(logits: &[T]) -> Self {
        Self(softmax(logits))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `−Σ p_i ln p_i`, clamped to `[0, ln C]`.
    pub fn entropy(&self) -> T {
        entropy(&self.0)
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

fn argmax<T: Real>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Max-subtracted softmax.
pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut p: Vec<T> = logits.iter().map(|&z| (z - m).exp()).collect();
    let s: T = p.iter().copied().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// Shannon entropy in nats with `0·ln 0 = 0`, clamped to `[0, ln C]`.
pub fn entropy<T: Real>(p: &[T]) -> T {
    let h = -p.iter().fold(T::zero(), |acc, &x| acc + xlogx(x));
    h.max(T::zero()).min(T::from_usize_lossy(p.len()).ln())
}

/// Softmax quantities computed stably from logits.
#[derive(Debug, Clone)]
pub struct Prediction<T> {
    pub probs: Vec<T>,
    /// `ln p_j = z_j − logsumexp(z)`.
    pub log_probs: Vec<T>,
    pub entropy: T,
}

impl<T: Real> Prediction<T> {
    /// Entropy is `ln Σ e^{z_j − m} − Σ p_j (z_j − m)`, which is exactly `ln C`
    /// for constant logits and never negative.
    pub fn from_logits(z: &[T]) -> Self {
        let m = z.iter().copied().fold(T::neg_infinity(), T::max);
        let shifted: Vec<T> = z.iter().map(|&v| v - m).collect();
        let mut probs: Vec<T> = shifted.iter().map(|&v| v.exp()).collect();
        let s: T = probs.iter().copied().sum();
        probs.iter_mut().for_each(|p| *p /= s);
        let ln_s = s.ln();
        let log_probs: Vec<T> = shifted.iter().map(|&v| v - ln_s).collect();
        let mean_shift = probs.iter().zip(&shifted).fold(T::zero(), |acc, (&p, &v)| acc + p * v);
        let ln_c = T::from_usize_lossy(z.len()).ln();
        let entropy = (ln_s - mean_shift).min(ln_c);
        Self { probs, log_probs, entropy }
    }

    /// `−ln p_y`.
    #[inline]
    pub fn cross_entropy(&self, label: usize) -> T {
        -self.log_probs[label]
    }

    pub fn top(&self) -> (usize, T) {
        let k = argmax(&self.probs);
        (k, self.probs[k])
    }
}

/// Same value as `Prediction::from_logits(z).entropy`, without allocating.
fn logit_entropy<T: Real>(z: &[T]) -> T {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let s: T = z.iter().map(|&v| (v - m).exp()).sum();
    let mean_shift = z.iter().fold(T::zero(), |acc, &v| {
        let d = v - m;
        acc + (d.exp() / s) * d
    });
    (s.ln() - mean_shift).min(T::from_usize_lossy(z.len()).ln())
}

/// Mean prediction entropy over a dataset.
pub fn empirical_mean_entropy<T: Real>(model: &LinearSoftmaxModel<T>, dataset: &LabeledDataset<T>) -> Result<T> {
    if dataset.is_empty() {
        return Err(Error::Shape("empty dataset".into()));
    }
    let mut stats = RunningStats::new();
    for i in 0..dataset.len() {
        stats.push(model.predict(dataset.x(i))?.entropy);
    }
    Ok(stats.mean())
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate<T> {
    pub estimate: T,
    pub std_error: T,
    pub draws: usize,
}

/// `E_x H[p(·|x)]` over fresh draws from `mixture` (raw input space).
pub fn expected_entropy_mc<T: Real>(
    model: &LinearSoftmaxModel<T>,
    mixture: &GaussianMixture<T>,
    draws: usize,
    seed: u64,
) -> Result<MonteCarloEstimate<T>> {
    if draws < 100 {
        return Err(Error::Domain(format!("expected-entropy estimate needs >= 100 draws, got {draws}")));
    }
    if mixture.dim() != model.raw_dim() {
        return Err(Error::Shape(format!("mixture dim {} vs model input dim {}", mixture.dim(), model.raw_dim())));
    }
    let mut rng = rng::substream(seed, streams::ENTROPY_MC);
    let mut x = vec![T::zero(); mixture.dim()];
    let mut noise = x.clone();
    let mut phi = vec![T::zero(); model.feature_dim()];
    let mut z = vec![T::zero(); model.class_count()];
    let mut stats = RunningStats::new();
    for _ in 0..draws {
        mixture.draw_into(&mut rng, &mut noise, &mut x);
        stats.push(model.entropy_with(&x, &mut phi, &mut z)?);
    }
    Ok(MonteCarloEstimate { estimate: stats.mean(), std_error: stats.std_error(), draws })
}

/// A view of a subset of dataset rows.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a, T> {
    data: &'a LabeledDataset<T>,
    rows: Option<&'a [usize]>,
}

impl<'a, T: Real> Batch<'a, T> {
    pub fn full(data: &'a LabeledDataset<T>) -> Self {
        Self { data, rows: None }
    }

    pub fn rows(data: &'a LabeledDataset<T>, rows: &'a [usize]) -> Self {
        Self { data, rows: Some(rows) }
    }

    pub fn len(&self) -> usize {
        self.rows.map_or(self.data.len(), <[usize]>::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'a [T], usize)> + '_ {
        let data = self.data;
        let n = self.len();
        (0..n).map(move |k| {
            let i = self.rows.map_or(k, |r| r[k]);
            (data.x(i), data.y(i))
        })
    }
}

/// Training objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective<T> {
    /// Plain cross-entropy against one-hot labels.
    CrossEntropy,
    /// Cross-entropy minus `γ` times the prediction entropy.
    MaxEnt { gamma: T },
    /// Cross-entropy against `(1 − ε)·ȳ + ε/C`.
    LabelSmoothing { epsilon: T },
}

/// Gradients with respect to `W` and, when requested, `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub classifier: Matrix<T>,
    pub feature_map: Option<Matrix<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossAndGradient<T> {
    pub loss: T,
    pub gradient: Gradient<T>,
}

impl<T: Real> Objective<T> {
    fn validate(&self) -> Result<()> {
        match *self {
            Objective::MaxEnt { gamma } if !(gamma >= T::zero() && gamma.is_finite()) => {
                Err(Error::Domain(format!("gamma must be finite and >= 0, got {gamma}")))
            }
            Objective::LabelSmoothing { epsilon } if !(epsilon >= T::zero() && epsilon < T::one()) => {
                Err(Error::Domain(format!("epsilon must lie in [0, 1), got {epsilon}")))
            }
            _ => Ok(()),
        }
    }

    fn sample_loss(&self, pred: &Prediction<T>, y: usize) -> T {
        match *self {
            Objective::CrossEntropy => pred.cross_entropy(y),
            Objective::MaxEnt { gamma } => pred.cross_entropy(y) - gamma * pred.entropy,
            Objective::LabelSmoothing { epsilon } => {
                let c = pred.log_probs.len();
                let off = epsilon / T::from_usize_lossy(c);
                let mut acc = T::zero();
                for (j, &lp) in pred.log_probs.iter().enumerate() {
                    let q = if j == y { T::one() - epsilon + off } else { off };
                    acc += q * lp;
                }
                -acc
            }
        }
    }

    /// d(sample loss)/d(logits).
    fn logit_gradient(&self, pred: &Prediction<T>, y: usize, out: &mut [T]) {
        for (j, (o, &p)) in out.iter_mut().zip(&pred.probs).enumerate() {
            *o = if j == y { p - T::one() } else { p };
        }
        match *self {
            Objective::CrossEntropy => {}
            Objective::MaxEnt { gamma } => {
                for ((o, &p), &lp) in out.iter_mut().zip(&pred.probs).zip(&pred.log_probs) {
                    *o += gamma * (p * (lp + pred.entropy));
                }
            }
            Objective::LabelSmoothing { epsilon } => {
                let off = epsilon / T::from_usize_lossy(out.len());
                for (j, (o, &p)) in out.iter_mut().zip(&pred.probs).enumerate() {
                    let q = if j == y { T::one() - epsilon + off } else { off };
                    *o = p - q;
                }
            }
        }
    }

    /// Mean loss over the batch.
    pub fn loss(&self, model: &LinearSoftmaxModel<T>, batch: Batch<'_, T>) -> Result<T> {
        self.validate()?;
        if batch.is_empty() {
            return Err(Error::Shape("empty batch".into()));
        }
        let mut stats = RunningStats::new();
        for (x, y) in batch.iter() {
            stats.push(self.sample_loss(&model.predict(x)?, y));
        }
        let loss = stats.mean();
        if !loss.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        Ok(loss)
    }

    /// Mean loss and its gradient. The feature-map gradient is computed only
    /// when `with_feature_map` is set and the model has a feature map.
    pub fn loss_and_gradient(
        &self,
        model: &LinearSoftmaxModel<T>,
        batch: Batch<'_, T>,
        with_feature_map: bool,
    ) -> Result<LossAndGradient<T>> {
        self.validate()?;
        if batch.is_empty() {
            return Err(Error::Shape("empty batch".into()));
        }
        let (c, n) = model.classifier.shape();
        let map = model.feature_map.as_ref().filter(|_| with_feature_map);
        let mut grad_w = Matrix::zeros(c, n);
        let mut grad_a = map.map(|a| Matrix::zeros(a.rows(), a.cols()));
        let mut g = vec![T::zero(); c];
        let mut stats = RunningStats::new();
        for (x, y) in batch.iter() {
            model.check_input(x)?;
            let phi = model.features(x);
            let z = model.classifier.matvec(&phi);
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("logits".into()));
            }
            let pred = Prediction::from_logits(&z);
            stats.push(self.sample_loss(&pred, y));
            self.logit_gradient(&pred, y, &mut g);
            for (i, &gi) in g.iter().enumerate() {
                for (w, &f) in grad_w.row_mut(i).iter_mut().zip(&phi) {
                    *w += gi * f;
                }
            }
            if let Some(ga) = grad_a.as_mut() {
                // dL/dΦ = Wᵀ g, then outer product with the raw input
                let back = model.classifier.tr_matvec(&g);
                for (r, &b) in back.iter().enumerate() {
                    for (a, &xv) in ga.row_mut(r).iter_mut().zip(x) {
                        *a += b * xv;
                    }
                }
            }
        }
        let loss = stats.mean();
        if !loss.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        let inv = T::one() / T::from_usize_lossy(batch.len());
        let classifier = grad_w.scale(inv);
        let feature_map = grad_a.map(|m| m.scale(inv));
        Ok(LossAndGradient { loss, gradient: Gradient { classifier, feature_map } })
    }
}

/// Mean of `−ln p_y − γ·H` over the batch.
pub fn maxent_loss<T: Real>(model: &LinearSoftmaxModel<T>, batch: Batch<'_, T>, gamma: T) -> Result<T> {
    Objective::MaxEnt { gamma }.loss(model, batch)
}

/// Mean cross-entropy against label-smoothed targets.
pub fn label_smoothing_loss<T: Real>(model: &LinearSoftmaxModel<T>, batch: Batch<'_, T>, epsilon: T) -> Result<T> {
    Objective::LabelSmoothing { epsilon }.loss(model, batch)
}

/// Analytic gradient of [`maxent_loss`]; includes the feature-map gradient
/// whenever the model carries a feature map.
pub fn maxent_gradient<T: Real>(model: &LinearSoftmaxModel<T>, batch: Batch<'_, T>, gamma: T) -> Result<Gradient<T>> {
    Ok(Objective::MaxEnt { gamma }.loss_and_gradient(model, batch, true)?.gradient)
}
