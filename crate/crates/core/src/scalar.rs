use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real-valued scalar used for conservation scores and every statistic
/// derived from them: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal or parsed value.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 representable in scalar")
    }

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Arithmetic mean, `None` on an empty slice.
pub fn mean<S: Scalar>(xs: &[S]) -> Option<S> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().copied().sum::<S>() / S::from_count(xs.len() as u64))
}

/// Two-pass population variance around a known mean.
pub fn population_variance<S: Scalar>(xs: &[S], mean: S) -> S {
    if xs.is_empty() {
        return S::zero();
    }
    let ss: S = xs.iter().map(|&x| (x - mean) * (x - mean)).sum();
    ss / S::from_count(xs.len() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_variance() {
        let xs = [1.0f64, -1.0];
        let m = mean(&xs).unwrap();
        assert_eq!(m, 0.0);
        assert_eq!(population_variance(&xs, m), 1.0);
        assert!(mean::<f32>(&[]).is_none());
    }
}
