//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the library is generic over (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `x · ln x` with the `0 · ln 0 = 0` convention and a `1e-300` floor inside the log.
#[inline]
pub fn xlogx<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        x * safe_ln(x)
    }
}

/// Natural log with probabilities floored at `1e-300` (at `T::min_positive_value()`
/// for types that cannot represent it).
#[inline]
pub fn safe_ln<T: Real>(x: T) -> T {
    let floor = T::lit(1e-300).max(T::min_positive_value());
    x.max(floor).ln()
}

/// Sequential (left-to-right) sum; fixed order keeps reductions reproducible.
#[inline]
pub fn sum<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |acc, &x| acc + x)
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}


/// Welford running mean/variance. A constant stream yields its value exactly
/// and zero variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats<T> {
    count: usize,
    mean: T,
    m2: T,
}

impl<T: Real> RunningStats<T> {
    pub fn new() -> Self {
        Self { count: 0, mean: T::zero(), m2: T::zero() }
    }

    #[inline]
    pub fn push(&mut self, x: T) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / T::from_usize_lossy(self.count);
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    /// Unbiased sample variance (0 for fewer than two observations).
    pub fn sample_variance(&self) -> T {
        if self.count < 2 {
            T::zero()
        } else {
            self.m2 / T::from_usize_lossy(self.count - 1)
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> T {
        if self.count == 0 {
            return T::zero();
        }
        (self.sample_variance() / T::from_usize_lossy(self.count)).sqrt()
    }
}
