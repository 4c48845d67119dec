//! Synthetic feature distributions.
//!
//! Both regimes place one isotropic component per class at the vertices of a
//! regular simplex, randomly embedded in `R^n`. The fine-grained regime
//! shrinks the vertices more than the within-class spread, so it is both less
//! diverse and harder to separate.

use maxent_core::rng::{self, streams};
use maxent_core::{Component, Mat, Mixture, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeParams {
    pub dim: usize,
    pub classes: usize,
    /// Distance of each large-regime class mean from the origin.
    pub radius: f64,
    pub sigma_large: f64,
    /// Fine-regime means are `shrink · radius` from the origin.
    pub shrink: f64,
    pub sigma_fine: f64,
}

impl Default for RegimeParams {
    fn default() -> Self {
        Self { dim: 16, classes: 10, radius: 4.0, sigma_large: 0.5, shrink: 0.2, sigma_fine: 0.25 }
    }
}

#[derive(Debug, Clone)]
pub struct RegimeFixtures {
    pub fine: Mixture,
    pub large: Mixture,
}

/// `dim × k` matrix with orthonormal columns from Gram-Schmidt on Gaussian draws.
pub fn random_orthonormal(dim: usize, k: usize, seed: u64) -> Mat {
    assert!(k <= dim, "cannot fit {k} orthonormal columns in R^{dim}");
    let mut rng = rng::substream(seed, streams::FIXTURE);
    let mut q = Mat::zeros(dim, k);
    let mut c = 0;
    while c < k {
        let mut v: Vec<f64> = (0..dim).map(|_| rng::standard_normal(&mut rng)).collect();
        // two passes keep the columns orthogonal to working precision
        for _ in 0..2 {
            for p in 0..c {
                let dot: f64 = (0..dim).map(|r| q[(r, p)] * v[r]).sum();
                for (r, x) in v.iter_mut().enumerate() {
                    *x -= dot * q[(r, p)];
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        for (r, x) in v.iter().enumerate() {
            q[(r, c)] = x / norm;
        }
        c += 1;
    }
    q
}

/// Unit-norm vertices of a regular simplex centred at the origin, as rows of
/// a `classes × dim` matrix. Requires `classes ≤ dim`.
pub fn simplex_means(classes: usize, dim: usize, seed: u64) -> Mat {
    let q = random_orthonormal(dim, classes, seed);
    let c = classes as f64;
    // e_i − 𝟙/C has squared norm (C − 1)/C
    let scale = (c / (c - 1.0)).sqrt();
    Mat::from_fn(classes, dim, |i, r| {
        (0..classes).map(|j| q[(r, j)] * (f64::from(u8::from(i == j)) - 1.0 / c) * scale).sum()
    })
}

fn isotropic_classes(means: &Mat, radius: f64, sigma: f64) -> Result<Mixture> {
    let classes = means.rows();
    let w = 1.0 / classes as f64;
    let comps = means
        .row_iter()
        .map(|m| Component::isotropic(w, m.iter().map(|v| v * radius).collect(), sigma * sigma))
        .collect();
    Ok(Mixture::new(comps)?.recenter_zero_mean())
}

pub fn make_regime_fixtures(params: &RegimeParams, seed: u64) -> Result<RegimeFixtures> {
    if params.classes < 2 || params.classes > params.dim {
        return Err(maxent_core::Error::Shape(format!(
            "regime fixtures need 2 <= classes <= dim, got {} classes in R^{}",
            params.classes, params.dim
        )));
    }
    let means = simplex_means(params.classes, params.dim, seed);
    Ok(RegimeFixtures {
        fine: isotropic_classes(&means, params.radius * params.shrink, params.sigma_fine)?,
        large: isotropic_classes(&means, params.radius, params.sigma_large)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapParams {
    pub dim: usize,
    pub classes: usize,
    /// Standard deviation along the leading `dim / 4` class-independent axes.
    pub nuisance_sigma: f64,
    pub radius: f64,
    pub sigma: f64,
}

impl Default for FeatureMapParams {
    fn default() -> Self {
        Self { dim: 16, classes: 10, nuisance_sigma: 2.0, radius: 1.0, sigma: 0.3 }
    }
}

/// Raw inputs whose first `dim / 4` coordinates carry large class-independent
/// variance; class means live in the remaining coordinates.
pub fn make_feature_map_fixture(params: &FeatureMapParams, seed: u64) -> Result<Mixture> {
    let nuisance = params.dim / 4;
    let signal = params.dim - nuisance;
    if params.classes < 2 || params.classes > signal {
        return Err(maxent_core::Error::Shape(format!(
            "{} classes do not fit the {signal} signal coordinates",
            params.classes
        )));
    }
    let means = simplex_means(params.classes, signal, seed);
    let mut diag = vec![params.nuisance_sigma * params.nuisance_sigma; nuisance];
    diag.extend(std::iter::repeat_n(params.sigma * params.sigma, signal));
    let cov = Mat::from_diagonal(&diag);
    let w = 1.0 / params.classes as f64;
    let comps = means
        .row_iter()
        .map(|m| {
            let mut mean = vec![0.0; nuisance];
            mean.extend(m.iter().map(|v| v * params.radius));
            Component::new(w, mean, cov.clone())
        })
        .collect();
    Ok(Mixture::new(comps)?.recenter_zero_mean())
}
