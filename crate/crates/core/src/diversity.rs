//! The Diversity statistic `ν = tr Σ* = Σ λ_i`, eigen-spectrum diagnostics
//! and principal-component projections of feature sets.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymmetricEigen};
use crate::mixture::GaussianMixture;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiversitySource {
    Analytic,
    Empirical,
}

#[derive(Debug, Clone)]
pub struct DiversityReport<T> {
    pub nu: T,
    /// Descending, with negative round-off clamped to zero.
    pub eigenvalues: Vec<T>,
    /// Descending, unclamped.
    pub raw_eigenvalues: Vec<T>,
    pub source: DiversitySource,
    pub sample_count: Option<usize>,
}

impl<T: Real> DiversityReport<T> {
    fn from_covariance(cov: &Matrix<T>, source: DiversitySource, sample_count: Option<usize>) -> Result<Self> {
        let eig = SymmetricEigen::new(cov)?;
        let eigenvalues = eig.values.iter().map(|&l| l.max(T::zero())).collect();
        Ok(Self { nu: cov.trace(), eigenvalues, raw_eigenvalues: eig.values, source, sample_count })
    }

    /// Writes `rank,eigenvalue,log_eigenvalue` (rank is 1-based).
    pub fn write_spectrum_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["rank", "eigenvalue", "log_eigenvalue"])?;
        for (i, &l) in self.eigenvalues.iter().enumerate() {
            let l = l.as_f64();
            w.write_record([(i + 1).to_string(), l.to_string(), l.ln().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `ν(Φ, p_x)` of a zero-mean mixture: trace and spectrum of `Σ*`.
pub fn analytic_diversity<T: Real>(mixture: &GaussianMixture<T>) -> Result<DiversityReport<T>> {
    let cov = mixture.overall_covariance()?;
    DiversityReport::from_covariance(&cov, DiversitySource::Analytic, None)
}

/// Column means and population (1/N) covariance of the rows of `features`.
pub fn population_covariance<T: Real>(features: &Matrix<T>) -> Result<(Vec<T>, Matrix<T>)> {
    let (rows, cols) = features.shape();
    if rows < 2 || cols == 0 {
        return Err(Error::Shape(format!("need at least 2 rows and 1 column, got {rows}x{cols}")));
    }
    let inv_n = T::one() / T::from_usize_lossy(rows);
    let mut mean = vec![T::zero(); cols];
    for r in features.row_iter() {
        for (m, &x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m *= inv_n);
    let mut cov = Matrix::zeros(cols, cols);
    let mut centered = vec![T::zero(); cols];
    for r in features.row_iter() {
        for ((c, &x), &m) in centered.iter_mut().zip(r).zip(&mean) {
            *c = x - m;
        }
        for i in 0..cols {
            let ci = centered[i];
            for j in i..cols {
                cov[(i, j)] += ci * centered[j];
            }
        }
    }
    for i in 0..cols {
        for j in i..cols {
            let v = cov[(i, j)] * inv_n;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok((mean, cov))
}

/// Globally centered, population-covariance estimate of `ν` from an `N×n` feature matrix.
pub fn empirical_diversity<T: Real>(features: &Matrix<T>) -> Result<DiversityReport<T>> {
    let (_, cov) = population_covariance(features)?;
    DiversityReport::from_covariance(&cov, DiversitySource::Empirical, Some(features.rows()))
}

/// Fraction of spectral mass beyond the top `k` eigenvalues; 0 when `ν = 0`.
/// `k` larger than the dimension is treated as `k = n`.
pub fn spectrum_tail_mass<T: Real>(report: &DiversityReport<T>, k: usize) -> T {
    let total: T = report.eigenvalues.iter().copied().sum();
    if total <= T::zero() {
        return T::zero();
    }
    let tail: T = report.eigenvalues.iter().skip(k).copied().sum();
    tail / total
}

#[derive(Debug, Clone)]
pub struct PrincipalComponents<T> {
    /// `N×k` projection of the centered features.
    pub projected: Matrix<T>,
    pub explained_variance_ratio: Vec<T>,
    /// `n×k` principal directions as columns.
    pub directions: Matrix<T>,
    pub mean: Vec<T>,
}

impl<T: Real> PrincipalComponents<T> {
    /// Projects other rows (centered with this fit's mean) onto the fitted directions.
    pub fn project(&self, features: &Matrix<T>) -> Result<Matrix<T>> {
        if features.cols() != self.mean.len() {
            return Err(Error::Shape(format!("expected {} columns, got {}", self.mean.len(), features.cols())));
        }
        let k = self.directions.cols();
        let mut out = Matrix::zeros(features.rows(), k);
        let mut centered = vec![T::zero(); self.mean.len()];
        for (i, r) in features.row_iter().enumerate() {
            for ((c, &x), &m) in centered.iter_mut().zip(r).zip(&self.mean) {
                *c = x - m;
            }
            let p = self.directions.tr_matvec(&centered);
            out.row_mut(i).copy_from_slice(&p);
        }
        Ok(out)
    }
}

/// Projection onto the top-`k` eigenvectors of the population covariance.
/// Each direction's first nonzero coordinate is positive.
pub fn top_principal_components<T: Real>(features: &Matrix<T>, k: usize) -> Result<PrincipalComponents<T>> {
    let n = features.cols();
    if k == 0 || k > n {
        return Err(Error::Shape(format!("k = {k} outside 1..={n}")));
    }
    let (mean, cov) = population_covariance(features)?;
    let eig = SymmetricEigen::new(&cov)?;
    let clamped: Vec<T> = eig.values.iter().map(|&l| l.max(T::zero())).collect();
    let total: T = clamped.iter().copied().sum();
    let explained_variance_ratio = clamped
        .iter()
        .take(k)
        .map(|&l| if total > T::zero() { l / total } else { T::zero() })
        .collect();
    let directions = Matrix::from_fn(n, k, |r, c| eig.vectors[(r, c)]);
    let mut pcs = PrincipalComponents { projected: Matrix::zeros(0, k), explained_variance_ratio, directions, mean };
    pcs.projected = pcs.project(features)?;
    Ok(pcs)
}

/// Writes `pc1,pc2,label` rows from a projection with at least two columns.
pub fn write_pc_csv<T: Real, W: Write>(projected: &Matrix<T>, labels: &[usize], out: W) -> Result<()> {
    if projected.cols() < 2 || projected.rows() != labels.len() {
        return Err(Error::Shape("pc export needs >= 2 components and one label per row".into()));
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["pc1", "pc2", "label"])?;
    for (r, y) in projected.row_iter().zip(labels) {
        w.write_record([r[0].as_f64().to_string(), r[1].as_f64().to_string(), y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
