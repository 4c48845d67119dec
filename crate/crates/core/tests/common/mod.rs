#![allow(dead_code)]

use maxent_core::{Component, Mat, Mixture};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn uniform_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.random_range(-scale..=scale))
}

/// `B Bᵀ / k` for a random `n×k` factor; rank-deficient when `k < n`.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize, k: usize, scale: f64) -> Mat {
    let b = uniform_matrix(rng, n, k, 1.0);
    let mut s = b.matmul(&b.transpose()).unwrap().scale(scale / k as f64);
    for i in 0..n {
        for j in 0..i {
            let v = s[(i, j)];
            s[(j, i)] = v;
        }
    }
    s
}

pub fn random_mixture<R: Rng>(rng: &mut R, n: usize, m: usize) -> Mixture {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut comps: Vec<Component<f64>> = raw
        .iter()
        .map(|&w| {
            let mean = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let k = rng.random_range(1..=n);
            let scale = rng.random_range(0.1..2.0);
            Component::new(w / total, mean, random_psd(rng, n, k, scale))
        })
        .collect();
    // force an exact unit sum against accumulated rounding
    let head: f64 = comps[..m - 1].iter().map(|c| c.weight).sum();
    comps[m - 1].weight = 1.0 - head;
    Mixture::new(comps).unwrap().recenter_zero_mean()
}

/// Haar-ish random rotation via Gram-Schmidt on a Gaussian matrix.
pub fn random_rotation<R: Rng>(rng: &mut R, n: usize) -> Mat {
    let mut q = Mat::zeros(n, n);
    for c in 0..n {
        let mut v: Vec<f64> = (0..n).map(|_| maxent_core::rng::standard_normal(rng)).collect();
        for p in 0..c {
            let dot: f64 = (0..n).map(|r| q[(r, p)] * v[r]).sum();
            for (r, x) in v.iter_mut().enumerate() {
                *x -= dot * q[(r, p)];
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (r, x) in v.iter().enumerate() {
            q[(r, c)] = x / norm;
        }
    }
    q
}

/// Random zero-mean mixture with `n ≤ 8`, `m ≤ 4`.
pub fn any_mixture<R: Rng>(rng: &mut R) -> Mixture {
    let n = rng.random_range(1..=8);
    let m = rng.random_range(1..=4);
    random_mixture(rng, n, m)
}
