//! Scalar abstraction for probability arithmetic.
//!
//! Propagation and the enumeration oracle are written against [`Probability`]
//! so they run unchanged over `f64`, `f32` or exact rationals. Model documents
//! store `f64`; values are lifted into the working scalar on use.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

pub trait Probability: Clone + PartialOrd + Num + FromPrimitive + ToPrimitive + Debug {
    /// Lifts a stored `f64` probability into this scalar.
    fn from_f64_lossy(p: f64) -> Self {
        Self::from_f64(p).unwrap_or_else(|| panic!("{p} is not representable"))
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Restricts the value to the unit interval.
    fn clamp_unit(self) -> Self {
        if self < Self::zero() {
            Self::zero()
        } else if self > Self::one() {
            Self::one()
        } else {
            self
        }
    }
}

impl<T> Probability for T where T: Clone + PartialOrd + Num + FromPrimitive + ToPrimitive + Debug {}

/// Conjunction of independent events: the product of their probabilities.
pub fn and_combine<P: Probability>(values: impl IntoIterator<Item = P>) -> P {
    values
        .into_iter()
        .fold(P::one(), |acc, p| acc * p)
        .clamp_unit()
}

/// Disjunction of independent events: one minus the product of complements.
pub fn or_combine<P: Probability>(values: impl IntoIterator<Item = P>) -> P {
    let miss = values
        .into_iter()
        .fold(P::one(), |acc, p| acc * (P::one() - p));
    (P::one() - miss).clamp_unit()
}
