//! Gaussian-mixture feature distributions: validation, sampling and exact
//! moments of the feature norm.
//!
//! A mixture `Σ α_i N(μ_i, Σ_i)` models the distribution of features fed to
//! the classifier. Sampling uses a spectral factor `V·diag(√λ)` of each
//! covariance so positive semi-definite (even zero) covariances are accepted.

use rand::Rng;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymmetricEigen};
use crate::rng::{self, streams};
use crate::scalar::{dot, Real};

/// Weight, mean and covariance of one mixture component.
#[derive(Debug, Clone, PartialEq)]
pub struct Component<T> {
    pub weight: T,
    pub mean: Vec<T>,
    pub covariance: Matrix<T>,
}

impl<T: Real> Component<T> {
    pub fn new(weight: T, mean: Vec<T>, covariance: Matrix<T>) -> Self {
        Self { weight, mean, covariance }
    }

    /// Isotropic component `N(μ, σ² I)`.
    pub fn isotropic(weight: T, mean: Vec<T>, variance: T) -> Self {
        let n = mean.len();
        Self { weight, mean, covariance: Matrix::identity(n).scale(variance) }
    }

    /// `E‖X‖²  = tr Σ + ‖μ‖²`.
    pub fn second_moment(&self) -> T {
        self.covariance.trace() + dot(&self.mean, &self.mean)
    }

    /// Exact non-central fourth moment of the norm:
    /// `E‖X‖⁴ = (tr Σ + ‖μ‖²)² + 2‖Σ‖_F² + 4 μᵀΣμ`.
    pub fn fourth_moment(&self) -> T {
        let m2 = self.second_moment();
        m2 * m2 + T::lit(2.0) * self.covariance.frobenius_sq() + T::lit(4.0) * self.covariance.quadratic_form(&self.mean)
    }
}

/// Validated mixture of Gaussians in `R^n`.
#[derive(Debug, Clone)]
pub struct GaussianMixture<T> {
    components: Vec<Component<T>>,
    dim: usize,
    factors: Vec<Matrix<T>>,
}

impl<T: Real> PartialEq for GaussianMixture<T> {
    fn eq(&self, other: &Self) -> bool {
        self.components == other.components
    }
}

/// Exact distribution-level moments of a zero-mean mixture.
#[derive(Debug, Clone)]
pub struct MomentSummary<T> {
    /// `Σ* = Σ α_i (Σ_i + μ_i μ_iᵀ)`.
    pub overall_covariance: Matrix<T>,
    pub expected_sqnorm: T,
    pub expected_fourth: T,
    pub var_sqnorm: T,
}

fn tolerance<T: Real>(base: f64) -> T {
    T::lit(base).max(T::epsilon() * T::lit(16.0))
}

/// Absolute tolerance on `‖Σ α_i μ_i‖` for a mixture to count as centered.
pub fn centering_tolerance<T: Real>() -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(64.0))
}

impl<T: Real> GaussianMixture<T> {
    /// Validates the component list and precomputes sampling factors.
    pub fn new(components: Vec<Component<T>>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Shape("mixture needs at least one component".into()))?;
        let dim = first.mean.len();
        if dim == 0 {
            return Err(Error::Shape("feature dimension must be positive".into()));
        }
        let mut total = T::zero();
        for (i, c) in components.iter().enumerate() {
            if c.mean.len() != dim || c.covariance.shape() != (dim, dim) {
                return Err(Error::Shape(format!(
                    "component {i}: mean of length {} and covariance {:?}, expected dimension {dim}",
                    c.mean.len(),
                    c.covariance.shape()
                )));
            }
            if !(c.weight > T::zero()) || !c.weight.is_finite() {
                return Err(Error::Weight(format!("component {i} has weight {}", c.weight)));
            }
            if c.mean.iter().any(|x| !x.is_finite()) || !c.covariance.is_finite() {
                return Err(Error::NonFinite(format!("component {i} parameters")));
            }
            total += c.weight;
        }
        if (total - T::one()).abs() > tolerance(1e-12) {
            return Err(Error::Weight(format!("weights sum to {total}, expected 1")));
        }

        let mut factors = Vec::with_capacity(components.len());
        for (i, c) in components.iter().enumerate() {
            let asym = c.covariance.asymmetry();
            if asym > tolerance(1e-12) {
                return Err(Error::Covariance(format!("component {i} asymmetric by {asym}")));
            }
            let eig = SymmetricEigen::new(&c.covariance)?;
            let top = eig.values[0].max(T::zero());
            let lowest = *eig.values.last().expect("dim > 0");
            if lowest < -(tolerance::<T>(1e-10) * top.max(T::min_positive_value())) {
                return Err(Error::Covariance(format!("component {i} has eigenvalue {lowest}")));
            }
            let roots: Vec<T> = eig.values.iter().map(|&l| l.max(T::zero()).sqrt()).collect();
            factors.push(Matrix::from_fn(dim, dim, |r, k| eig.vectors[(r, k)] * roots[k]));
        }
        Ok(Self { components, dim, factors })
    }

    /// Single Gaussian `N(μ, Σ)`.
    pub fn single(mean: Vec<T>, covariance: Matrix<T>) -> Result<Self> {
        Self::new(vec![Component::new(T::one(), mean, covariance)])
    }

    /// Standard normal in `R^n`.
    pub fn standard_normal(dim: usize) -> Result<Self> {
        Self::single(vec![T::zero(); dim], Matrix::identity(dim))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of components `m`.
    #[inline]
    pub fn count(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Component<T>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Component<T>> {
        self.components
    }

    /// Mixture mean `Σ α_i μ_i`.
    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.dim];
        for c in &self.components {
            for (acc, &x) in m.iter_mut().zip(&c.mean) {
                *acc += c.weight * x;
            }
        }
        m
    }

    /// `‖Σ α_i μ_i‖₂`.
    pub fn centering_offset(&self) -> T {
        let m = self.mean();
        dot(&m, &m).sqrt()
    }

    pub fn is_centered(&self) -> bool {
        self.centering_offset() <= centering_tolerance()
    }

    fn require_centered(&self) -> Result<()> {
        let offset = self.centering_offset();
        if offset > centering_tolerance() {
            return Err(Error::NotCentered { offset: offset.as_f64() });
        }
        Ok(())
    }

    /// Shifts every mean by `−Σ α_j μ_j`; weights and covariances are untouched.
    pub fn recenter_zero_mean(&self) -> Self {
        let shift = self.mean();
        let mut out = self.clone();
        for c in &mut out.components {
            for (x, &s) in c.mean.iter_mut().zip(&shift) {
                *x -= s;
            }
        }
        out
    }

    /// Distribution of `A·X` for `X` drawn from this mixture.
    pub fn linear_map(&self, a: &Matrix<T>) -> Result<Self> {
        if a.cols() != self.dim {
            return Err(Error::Shape(format!("map with {} columns applied to dimension {}", a.cols(), self.dim)));
        }
        let at = a.transpose();
        let components = self
            .components
            .iter()
            .map(|c| {
                let s = a.matmul(&c.covariance)?.matmul(&at)?;
                // exact symmetry; the product is symmetric only up to rounding
                let sym = Matrix::from_fn(s.rows(), s.cols(), |i, j| (s[(i, j)] + s[(j, i)]) * T::lit(0.5));
                Ok(Component::new(c.weight, a.matvec(&c.mean), sym))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(components)
    }

    /// Draws one point into `out`, returning the component index.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [T]) -> usize {
        let mut z = vec![T::zero(); self.dim];
        self.draw_into(rng, &mut z, out)
    }

    /// [`draw`](Self::draw) with caller-provided noise scratch of length `dim`.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [T], out: &mut [T]) -> usize {
        let u = T::lit(rng.random::<f64>());
        let mut acc = T::zero();
        let mut k = self.components.len() - 1;
        for (i, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                k = i;
                break;
            }
        }
        for v in z.iter_mut() {
            *v = T::lit(rng::standard_normal(rng));
        }
        self.factors[k].matvec_into(z, out);
        for (o, &m) in out.iter_mut().zip(&self.components[k].mean) {
            *o += m;
        }
        k
    }

    /// `count` i.i.d. draws labelled by component index; bit-reproducible per seed.
    pub fn sample(&self, count: usize, seed: u64) -> LabeledDataset<T> {
        let mut rng = rng::substream(seed, streams::SAMPLE);
        self.sample_with(&mut rng, count)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> LabeledDataset<T> {
        let mut data = vec![T::zero(); count * self.dim];
        let mut labels = Vec::with_capacity(count);
        for row in data.chunks_exact_mut(self.dim) {
            labels.push(self.draw(rng, row));
        }
        let features = Matrix::from_vec(count, self.dim, data).expect("consistent sample buffer");
        LabeledDataset::new(features, labels, self.count()).expect("labels are component indices")
    }

    /// `Σ* = Σ α_i (Σ_i + μ_i μ_iᵀ)`; requires a zero-mean mixture.
    pub fn overall_covariance(&self) -> Result<Matrix<T>> {
        self.require_centered()?;
        let mut total = Matrix::zeros(self.dim, self.dim);
        for c in &self.components {
            let mut term = c.covariance.clone();
            term.axpy(T::one(), &Matrix::outer(&c.mean, &c.mean));
            total.axpy(c.weight, &term);
        }
        Ok(total)
    }

    /// `E‖X‖² = Σ α_i (tr Σ_i + ‖μ_i‖²)`.
    pub fn expected_sqnorm(&self) -> T {
        self.components.iter().fold(T::zero(), |acc, c| acc + c.weight * c.second_moment())
    }

    /// `(E‖X‖⁴, Var‖X‖²)` using the full non-central per-component formula.
    pub fn fourth_moment_and_variance(&self) -> (T, T) {
        let fourth = self.components.iter().fold(T::zero(), |acc, c| acc + c.weight * c.fourth_moment());
        let second = self.expected_sqnorm();
        (fourth, fourth - second * second)
    }

    pub fn moments(&self) -> Result<MomentSummary<T>> {
        let overall_covariance = self.overall_covariance()?;
        let expected_sqnorm = self.expected_sqnorm();
        let (expected_fourth, var_sqnorm) = self.fourth_moment_and_variance();
        Ok(MomentSummary { overall_covariance, expected_sqnorm, expected_fourth, var_sqnorm })
    }

    pub fn cast<U: Real>(&self) -> Result<GaussianMixture<U>> {
        let comps = self
            .components
            .iter()
            .map(|c| Component {
                weight: U::lit(c.weight.as_f64()),
                mean: c.mean.iter().map(|&x| U::lit(x.as_f64())).collect(),
                covariance: c.covariance.cast(),
            })
            .collect();
        GaussianMixture::new(comps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(scale: f64) -> GaussianMixture<f64> {
        GaussianMixture::new(vec![
            Component::isotropic(0.5, vec![1.0, 0.0], scale),
            Component::isotropic(0.5, vec![-1.0, 0.0], scale),
        ])
        .unwrap()
    }

    #[test]
    fn identity_case_validates() {
        assert!(GaussianMixture::<f64>::standard_normal(2).is_ok());
    }

    #[test]
    fn weights_exceeding_one_rejected() {
        let r = GaussianMixture::new(vec![
            Component::isotropic(0.5, vec![0.0], 1.0),
            Component::isotropic(0.6, vec![0.0], 1.0),
        ]);
        assert!(matches!(r, Err(Error::Weight(_))));
    }

    #[test]
    fn nonpositive_weight_rejected() {
        let r = GaussianMixture::new(vec![
            Component::isotropic(1.0, vec![0.0], 1.0),
            Component::isotropic(0.0, vec![0.0], 1.0),
        ]);
        assert!(matches!(r, Err(Error::Weight(_))));
    }

    #[test]
    fn non_psd_rejected() {
        let cov = Matrix::from_diagonal(&[1.0, -0.1]);
        assert!(matches!(GaussianMixture::single(vec![0.0, 0.0], cov), Err(Error::Covariance(_))));
    }

    #[test]
    fn asymmetric_rejected() {
        let cov = Matrix::from_rows(&[vec![1.0, 0.2], vec![0.1, 1.0]]).unwrap();
        assert!(matches!(GaussianMixture::single(vec![0.0, 0.0], cov), Err(Error::Covariance(_))));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let r = GaussianMixture::new(vec![
            Component::isotropic(0.5, vec![0.0, 0.0], 1.0),
            Component::isotropic(0.5, vec![0.0], 1.0),
        ]);
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn recenter_examples() {
        let single = GaussianMixture::single(vec![3.0, -1.0], Matrix::identity(2)).unwrap();
        assert_eq!(single.recenter_zero_mean().components()[0].mean, vec![0.0, 0.0]);

        let m = GaussianMixture::new(vec![
            Component::isotropic(0.5, vec![2.0, 0.0], 1.0),
            Component::isotropic(0.5, vec![0.0, 0.0], 1.0),
        ])
        .unwrap()
        .recenter_zero_mean();
        assert_eq!(m.components()[0].mean, vec![1.0, 0.0]);
        assert_eq!(m.components()[1].mean, vec![-1.0, 0.0]);

        let centered = two_point(0.25);
        assert_eq!(centered.recenter_zero_mean(), centered);
    }

    #[test]
    fn point_mass_samples() {
        let m = GaussianMixture::single(vec![1.0, 2.0], Matrix::zeros(2, 2)).unwrap();
        let d = m.sample(5, 3);
        assert_eq!(d.len(), 5);
        for i in 0..5 {
            assert_eq!(d.x(i), &[1.0, 2.0]);
            assert_eq!(d.y(i), 0);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let m = two_point(0.25);
        assert_eq!(m.sample(100, 9), m.sample(100, 9));
        assert_ne!(m.sample(100, 9), m.sample(100, 10));
    }

    #[test]
    fn overall_covariance_examples() {
        let sigma = two_point(0.25).overall_covariance().unwrap();
        assert_eq!(sigma, Matrix::from_diagonal(&[1.25, 0.25]));

        let id = GaussianMixture::<f64>::standard_normal(3).unwrap().overall_covariance().unwrap();
        assert_eq!(id, Matrix::identity(3));

        let bern = GaussianMixture::new(vec![
            Component::new(0.5, vec![1.0], Matrix::zeros(1, 1)),
            Component::new(0.5, vec![-1.0], Matrix::zeros(1, 1)),
        ])
        .unwrap();
        assert_eq!(bern.overall_covariance().unwrap(), Matrix::from_diagonal(&[1.0]));
    }

    #[test]
    fn overall_covariance_requires_centering() {
        let m = GaussianMixture::single(vec![1.0], Matrix::identity(1)).unwrap();
        assert!(matches!(m.overall_covariance(), Err(Error::NotCentered { .. })));
    }

    #[test]
    fn second_moment_examples() {
        assert_eq!(GaussianMixture::<f64>::standard_normal(5).unwrap().expected_sqnorm(), 5.0);
        let pm = GaussianMixture::single(vec![3.0, 4.0], Matrix::zeros(2, 2)).unwrap();
        assert_eq!(pm.expected_sqnorm(), 25.0);
        assert_eq!(two_point(0.25).expected_sqnorm(), 1.5);
    }

    #[test]
    fn variance_examples() {
        let pm = GaussianMixture::single(vec![3.0, 4.0], Matrix::zeros(2, 2)).unwrap();
        assert_eq!(pm.fourth_moment_and_variance().1, 0.0);
        let (_, v1) = GaussianMixture::<f64>::standard_normal(1).unwrap().fourth_moment_and_variance();
        assert_eq!(v1, 2.0);
        let (f3, v3) = GaussianMixture::<f64>::standard_normal(3).unwrap().fourth_moment_and_variance();
        assert_eq!(f3, 15.0);
        assert_eq!(v3, 6.0);
    }

    #[test]
    fn trace_matches_sqnorm_after_recentering() {
        let m = GaussianMixture::new(vec![
            Component::isotropic(0.3f64, vec![1.0, 2.0, -1.0], 0.5),
            Component::isotropic(0.7, vec![-2.0, 0.5, 0.0], 2.0),
        ])
        .unwrap()
        .recenter_zero_mean();
        let s = m.moments().unwrap();
        assert!((s.overall_covariance.trace() - s.expected_sqnorm).abs() <= 1e-10 * s.expected_sqnorm);
        assert!(s.var_sqnorm >= -1e-10);
    }

    #[test]
    fn linear_map_transforms_moments() {
        let m = two_point(0.25);
        let a = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let mapped = m.linear_map(&a).unwrap();
        assert_eq!(mapped.dim(), 3);
        let expected = a
            .matmul(&m.overall_covariance().unwrap())
            .unwrap()
            .matmul(&a.transpose())
            .unwrap();
        let got = mapped.overall_covariance().unwrap();
        for (x, y) in got.as_slice().iter().zip(expected.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn f32_mixture_works() {
        let m = two_point(0.25).cast::<f32>().unwrap();
        assert!((m.expected_sqnorm() - 1.5).abs() < 1e-6);
        assert_eq!(m.sample(10, 1).len(), 10);
    }
}
