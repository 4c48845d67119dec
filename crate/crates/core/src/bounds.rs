//! Norm/entropy bounds for linear softmax classifiers, the tail inequalities
//! they rest on, and a Monte-Carlo harness that checks them.
//!
//! All bounds use the exact pre-asymptotic expressions (no hidden constants):
//!
//! * norm lower bound: `‖w‖₂ ≥ (ln C − E H) / (2√ν)`
//! * entropy concentration: `|Ĥ − E H| ≤ ‖w‖·[√((2/N)·ν·ln(4/δ)) + (4·V·(2/δ − 1)/N³)^{1/4}·ln(4/δ)]`
//! * empirical norm bound: `‖w‖₂ ≥ (ln C − Ĥ) / (2√ν − √((2/N)·ln(2/δ)·(ν + √(V·(2/δ − 1)/N))))`
//!
//! where `V = Var‖Φ(x)‖²`.

use std::fmt;
use std::io::Write;

use crate::classifier::{empirical_mean_entropy, expected_entropy_mc, LinearSoftmaxModel};
use crate::diversity::analytic_diversity;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mixture::GaussianMixture;
use crate::rng::{self, streams};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// Lower bound on `‖w‖₂` from the expected entropy.
    NormFromExpectedEntropy,
    /// Concentration of the empirical mean entropy.
    EntropyConcentration,
    /// Lower bound on `‖w‖₂` from the empirical mean entropy.
    NormFromEmpiricalEntropy,
}

impl Theorem {
    pub fn tag(self) -> &'static str {
        match self {
            Theorem::NormFromExpectedEntropy => "theorem1",
            Theorem::EntropyConcentration => "theorem2",
            Theorem::NormFromEmpiricalEntropy => "corollary1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "1" | "theorem1" => Some(Theorem::NormFromExpectedEntropy),
            "2" | "theorem2" => Some(Theorem::EntropyConcentration),
            "c1" | "corollary1" => Some(Theorem::NormFromEmpiricalEntropy),
            _ => None,
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

fn check_delta<T: Real>(delta: T) -> Result<()> {
    if !(delta > T::zero() && delta < T::lit(0.5)) {
        return Err(Error::Domain(format!("delta = {delta} outside (0, 1/2)")));
    }
    Ok(())
}

fn check_entropy<T: Real>(classes: usize, h: T) -> Result<()> {
    if classes < 2 {
        return Err(Error::Domain(format!("need at least 2 classes, got {classes}")));
    }
    let ln_c = T::from_usize_lossy(classes).ln();
    let slack = T::lit(1e-12).max(T::epsilon() * T::lit(8.0)) * ln_c;
    if !(h >= -slack && h <= ln_c + slack) {
        return Err(Error::Domain(format!("mean entropy {h} outside [0, ln {classes}]")));
    }
    Ok(())
}

/// `(ln C − E H) / (2√ν)`.
pub fn theorem1_bound<T: Real>(classes: usize, mean_entropy: T, nu: T) -> Result<T> {
    if !(nu > T::zero()) {
        return Err(Error::Domain(format!("diversity must be positive, got {nu}")));
    }
    check_entropy(classes, mean_entropy)?;
    let ln_c = T::from_usize_lossy(classes).ln();
    Ok((ln_c - mean_entropy).max(T::zero()) / (T::lit(2.0) * nu.sqrt()))
}

/// Exact deviation bound on `|Ĥ − E H|` holding with probability `1 − δ`.
pub fn theorem2_bound<T: Real>(w_norm: T, nu: T, var_sqnorm: T, n: usize, delta: T) -> Result<T> {
    check_delta(delta)?;
    if n == 0 || !(w_norm >= T::zero()) || !(nu >= T::zero()) {
        return Err(Error::Domain("need N >= 1, ||w|| >= 0 and nu >= 0".into()));
    }
    let n = T::from_usize_lossy(n);
    let two = T::lit(2.0);
    let log_term = (T::lit(4.0) / delta).ln();
    let first = (two / n * nu * log_term).sqrt();
    let var = var_sqnorm.max(T::zero());
    let second = (T::lit(4.0) * var * (two / delta - T::one()) / (n * n * n)).powf(T::lit(0.25)) * log_term;
    Ok(w_norm * (first + second))
}

/// Empirical-entropy lower bound on `‖w‖₂`, with the denominator
/// `2√ν − √((2/N)·ln(2/δ)·(ν + √(V(2/δ − 1)/N)))`. A nonpositive denominator
/// means the bound does not apply and is a domain error.
pub fn corollary1_bound<T: Real>(
    classes: usize,
    empirical_mean_entropy: T,
    nu: T,
    var_sqnorm: T,
    n: usize,
    delta: T,
) -> Result<T> {
    check_delta(delta)?;
    if !(nu > T::zero()) || n == 0 {
        return Err(Error::Domain("need nu > 0 and N >= 1".into()));
    }
    check_entropy(classes, empirical_mean_entropy)?;
    let nf = T::from_usize_lossy(n);
    let two = T::lit(2.0);
    let var = var_sqnorm.max(T::zero());
    let inflated = nu + (var * (two / delta - T::one()) / nf).sqrt();
    let slack = (two / nf * (two / delta).ln() * inflated).sqrt();
    let denom = two * nu.sqrt() - slack;
    if !(denom > T::zero()) {
        return Err(Error::Domain(format!("denominator {denom} is not positive; bound inapplicable at N = {n}")));
    }
    let ln_c = T::from_usize_lossy(classes).ln();
    Ok((ln_c - empirical_mean_entropy).max(T::zero()) / denom)
}

/// Leading-order form `(ln C − Ĥ) / ((2 − √((2/N) ln(2/δ)))·√ν)` with the
/// `N^{-3/4}` remainder dropped.
pub fn corollary1_leading_form<T: Real>(classes: usize, empirical_mean_entropy: T, nu: T, n: usize, delta: T) -> Result<T> {
    check_delta(delta)?;
    if !(nu > T::zero()) || n == 0 {
        return Err(Error::Domain("need nu > 0 and N >= 1".into()));
    }
    let two = T::lit(2.0);
    let denom = (two - (two / T::from_usize_lossy(n) * (two / delta).ln()).sqrt()) * nu.sqrt();
    if !(denom > T::zero()) {
        return Err(Error::Domain("leading-form denominator is not positive".into()));
    }
    let ln_c = T::from_usize_lossy(classes).ln();
    Ok((ln_c - empirical_mean_entropy).max(T::zero()) / denom)
}

/// Pointwise floor `ln C − 2‖w‖∞‖Φ(x)‖₂` on the prediction entropy.
pub fn entropy_floor<T: Real>(w_inf: T, phi_norm: T, classes: usize) -> T {
    T::from_usize_lossy(classes).ln() - T::lit(2.0) * w_inf * phi_norm
}

/// Tail inequalities.
#[derive(Debug, Clone, PartialEq)]
pub enum TailBound<T> {
    /// `P(S ≥ t) ≤ exp(−2 n² t² / Σ (b_i − a_i)²)` for the sum of centered
    /// variables `X_i ∈ [a_i, b_i]`, with `t` the deviation of their mean.
    Hoeffding { ranges: Vec<(T, T)>, t: T },
    /// `P(X − μ ≥ λ) ≤ σ² / (σ² + λ²)` for `λ > 0`.
    Cantelli { variance: T, lambda: T },
}

impl<T: Real> TailBound<T> {
    /// Bound on the tail probability, capped at 1.
    pub fn evaluate(&self) -> Result<T> {
        match self {
            TailBound::Hoeffding { ranges, t } => {
                if ranges.is_empty() || !(*t > T::zero()) {
                    return Err(Error::Domain("hoeffding needs n >= 1 and t > 0".into()));
                }
                let spread: T = ranges.iter().map(|&(a, b)| (b - a) * (b - a)).sum();
                if ranges.iter().any(|&(a, b)| !(b >= a)) {
                    return Err(Error::Domain("hoeffding ranges need a <= b".into()));
                }
                if spread == T::zero() {
                    return Ok(T::zero());
                }
                let n = T::from_usize_lossy(ranges.len());
                Ok((-(T::lit(2.0) * n * n * *t * *t) / spread).exp().min(T::one()))
            }
            TailBound::Cantelli { variance, lambda } => {
                if !(*variance >= T::zero()) || !(*lambda > T::zero()) {
                    return Err(Error::Domain("cantelli needs variance >= 0 and lambda > 0".into()));
                }
                let v = *variance;
                if v == T::zero() {
                    return Ok(T::zero());
                }
                Ok(v / (v + *lambda * *lambda))
            }
        }
    }
}

/// Inputs shared by the three bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundQuery<T> {
    pub classes: usize,
    pub samples: usize,
    pub delta: T,
    pub nu: T,
    pub var_sqnorm: T,
    pub w_l2: T,
    pub w_inf: T,
    pub mean_entropy: T,
    pub entropy_is_empirical: bool,
}

impl<T: Real> BoundQuery<T> {
    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if !(self.nu >= T::zero()) {
            return Err(Error::Domain("nu must be >= 0".into()));
        }
        if self.w_inf > self.w_l2 * (T::one() + T::epsilon() * T::lit(4.0)) {
            return Err(Error::Domain("||w||_inf exceeds ||w||_2".into()));
        }
        Ok(())
    }

    pub fn theorem1(&self) -> Result<T> {
        self.validate()?;
        theorem1_bound(self.classes, self.mean_entropy, self.nu)
    }

    pub fn theorem2(&self) -> Result<T> {
        self.validate()?;
        theorem2_bound(self.w_inf, self.nu, self.var_sqnorm, self.samples, self.delta)
    }

    pub fn corollary1(&self) -> Result<T> {
        self.validate()?;
        corollary1_bound(self.classes, self.mean_entropy, self.nu, self.var_sqnorm, self.samples, self.delta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<T> {
    pub theorem: Theorem,
    pub bound_value: T,
    pub observed: T,
    /// `observed − bound` for lower bounds, `bound − observed` for upper bounds
    /// (including any Monte-Carlo guard).
    pub margin: T,
    pub satisfied: bool,
    /// Bound could not be evaluated (nonpositive denominator); counted as satisfied.
    pub inapplicable: bool,
    /// Leading-order corollary form, or the `‖w‖∞` variant of the concentration bound.
    pub alternate_bound: Option<T>,
    pub entropy_std_error: T,
}

impl<T: Real> BoundReport<T> {
    fn new(theorem: Theorem, bound_value: T, observed: T, margin: T) -> Self {
        Self {
            theorem,
            bound_value,
            observed,
            margin,
            satisfied: margin >= T::zero(),
            inapplicable: false,
            alternate_bound: None,
            entropy_std_error: T::zero(),
        }
    }
}

/// Norm lower bound for one model against its feature distribution, with the
/// expected entropy estimated by Monte Carlo and the bound widened by three
/// standard errors.
pub fn check_theorem1<T: Real>(
    model: &LinearSoftmaxModel<T>,
    mixture: &GaussianMixture<T>,
    draws: usize,
    seed: u64,
) -> Result<BoundReport<T>> {
    let features = model.feature_mixture(mixture)?;
    let nu = analytic_diversity(&features)?.nu;
    let est = expected_entropy_mc(model, mixture, draws, seed)?;
    let ln_c = T::from_usize_lossy(model.class_count()).ln();
    let h = est.estimate.max(T::zero()).min(ln_c);
    let bound = theorem1_bound(model.class_count(), h, nu)?;
    let guard = T::lit(3.0) * est.std_error / (T::lit(2.0) * nu.sqrt());
    let observed = model.l2_norm();
    let mut report = BoundReport::new(Theorem::NormFromExpectedEntropy, bound, observed, observed + guard - bound);
    report.entropy_std_error = est.std_error;
    Ok(report)
}

/// Draws random classifiers with entries uniform in `[−s, s]`, cycling `s`
/// through `scales` by trial index.
#[derive(Debug, Clone)]
pub struct ModelSampler<T> {
    pub classes: usize,
    pub dim: usize,
    pub scales: Vec<T>,
    pub feature_map: Option<Matrix<T>>,
}

impl<T: Real> ModelSampler<T> {
    pub fn new(classes: usize, dim: usize) -> Self {
        Self { classes, dim, scales: vec![T::lit(0.1), T::one(), T::lit(10.0)], feature_map: None }
    }

    pub fn sample(&self, trial: usize, seed: u64) -> Result<LinearSoftmaxModel<T>> {
        if self.scales.is_empty() {
            return Err(Error::Domain("model sampler has no scales".into()));
        }
        let s = self.scales[trial % self.scales.len()].as_f64();
        let mut rng = rng::substream(seed, streams::MODEL_SAMPLER);
        let w = Matrix::from_fn(self.classes, self.dim, |_, _| T::lit(rng::symmetric_uniform(&mut rng, s)));
        LinearSoftmaxModel::new(w, self.feature_map.clone())
    }
}

#[derive(Debug, Clone)]
pub struct TrialRecord<T> {
    pub trial: usize,
    pub report: BoundReport<T>,
}

#[derive(Debug, Clone)]
pub struct VerificationReport<T> {
    pub theorem: Theorem,
    pub samples: usize,
    pub delta: T,
    pub trials: Vec<TrialRecord<T>>,
}

impl<T: Real> VerificationReport<T> {
    pub fn violations(&self) -> usize {
        self.trials.iter().filter(|t| !t.report.satisfied).count()
    }

    pub fn rate(&self) -> f64 {
        self.violations() as f64 / self.trials.len().max(1) as f64
    }

    pub fn inapplicable(&self) -> usize {
        self.trials.iter().filter(|t| t.report.inapplicable).count()
    }

    /// Violations of the stricter `‖w‖∞` concentration form (concentration trials only).
    pub fn strict_violations(&self) -> usize {
        self.trials
            .iter()
            .filter(|t| matches!(t.report.alternate_bound, Some(b) if t.report.theorem == Theorem::EntropyConcentration && t.report.observed > b))
            .count()
    }

    pub fn worst_margin(&self) -> T {
        self.trials
            .iter()
            .filter(|t| !t.report.inapplicable)
            .map(|t| t.report.margin)
            .fold(T::infinity(), T::min)
    }

    pub fn max_entropy_std_error(&self) -> T {
        self.trials.iter().map(|t| t.report.entropy_std_error).fold(T::zero(), T::max)
    }

    /// `trial,theorem,observed,bound,margin,violated`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["trial", "theorem", "observed", "bound", "margin", "violated"])?;
        for t in &self.trials {
            let r = &t.report;
            w.write_record([
                t.trial.to_string(),
                r.theorem.tag().to_string(),
                r.observed.as_f64().to_string(),
                r.bound_value.as_f64().to_string(),
                r.margin.as_f64().to_string(),
                u8::from(!r.satisfied).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_line(&self) -> String {
        let samples = match self.theorem {
            Theorem::NormFromExpectedEntropy => String::new(),
            _ => format!(" N={}", self.samples),
        };
        format!(
            "{}{samples} trials={} violations={} rate={:.4} delta={} worst_margin={:.6e} inapplicable={}",
            self.theorem,
            self.trials.len(),
            self.violations(),
            self.rate(),
            self.delta,
            self.worst_margin().as_f64(),
            self.inapplicable()
        )
    }
}

/// Monte-Carlo check of one bound over `trials` random classifiers.
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub samples: usize,
    pub trials: usize,
    pub seed: u64,
    /// Fresh draws used to estimate each model's expected entropy.
    pub reference_draws: usize,
}

/// Runs `options.trials` independent trials. Each trial draws a model from
/// `sampler` and, for the empirical bounds, a dataset of `options.samples`
/// points; per-trial seeds derive from `(seed, trial)`.
pub fn mc_verify<T: Real>(
    theorem: Theorem,
    mixture: &GaussianMixture<T>,
    sampler: &ModelSampler<T>,
    delta: T,
    options: &VerifyOptions,
) -> Result<VerificationReport<T>> {
    if options.trials < 100 {
        return Err(Error::Domain(format!("need >= 100 trials, got {}", options.trials)));
    }
    check_delta(delta)?;
    let mut trials = Vec::with_capacity(options.trials);
    for trial in 0..options.trials {
        let seed = rng::derive_seed(options.seed, streams::TRIAL + trial as u64);
        let model = sampler.sample(trial, seed)?;
        let report = match theorem {
            Theorem::NormFromExpectedEntropy => check_theorem1(&model, mixture, options.reference_draws, seed)?,
            _ => check_empirical(theorem, &model, mixture, delta, options, seed)?,
        };
        trials.push(TrialRecord { trial, report });
    }
    Ok(VerificationReport { theorem, samples: options.samples, delta, trials })
}

fn check_empirical<T: Real>(
    theorem: Theorem,
    model: &LinearSoftmaxModel<T>,
    mixture: &GaussianMixture<T>,
    delta: T,
    options: &VerifyOptions,
    seed: u64,
) -> Result<BoundReport<T>> {
    let features = model.feature_mixture(mixture)?;
    let nu = analytic_diversity(&features)?.nu;
    let (_, var) = features.fourth_moment_and_variance();
    let data = mixture.sample(options.samples, seed);
    let h_hat = empirical_mean_entropy(model, &data)?;
    let n = options.samples;
    let mut report = match theorem {
        Theorem::EntropyConcentration => {
            let expected = expected_entropy_mc(model, mixture, options.reference_draws, seed)?;
            let observed = (h_hat - expected.estimate).abs();
            let bound = theorem2_bound(model.l2_norm(), nu, var, n, delta)?;
            let mut r = BoundReport::new(theorem, bound, observed, bound - observed);
            r.alternate_bound = Some(theorem2_bound(model.inf_norm(), nu, var, n, delta)?);
            r.entropy_std_error = expected.std_error;
            r
        }
        _ => {
            let observed = model.l2_norm();
            let leading = corollary1_leading_form(model.class_count(), h_hat, nu, n, delta).ok();
            match corollary1_bound(model.class_count(), h_hat, nu, var, n, delta) {
                Ok(bound) => {
                    let mut r = BoundReport::new(theorem, bound, observed, observed - bound);
                    r.alternate_bound = leading;
                    r
                }
                Err(Error::Domain(_)) => {
                    let mut r = BoundReport::new(theorem, T::nan(), observed, T::zero());
                    r.inapplicable = true;
                    r.alternate_bound = leading;
                    r
                }
                Err(e) => return Err(e),
            }
        }
    };
    report.satisfied = report.inapplicable || report.margin >= T::zero();
    Ok(report)
}
