//! Scalar abstraction for the numeric kernels.
//!
//! Model fitting, metrics, and explanation arithmetic are generic over [`Scalar`]
//! so the same kernels run in `f32` or `f64`. The data pipeline itself works in
//! `f64`; the crate root exposes concrete aliases for that instantiation.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by the model/evaluation/explanation kernels.
///
/// Blanket-implemented for any type with the required numeric behaviour; in
/// practice that means `f32` and `f64`. Serde derives on the generic model
/// types add their own `Serialize`/`Deserialize` bounds, so the trait itself
/// stays serde-free.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Default
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
///
/// Panics on non-finite input; thresholds and literals used through this helper
/// are always finite.
#[inline]
pub fn cast<S: Scalar>(v: f64) -> S {
    S::from_f64(v).expect("finite f64 constant must convert to the scalar type")
}

/// Converts the working scalar into `f64` (for reports and serialization).
#[inline]
pub fn to_f64<S: Scalar>(v: S) -> f64 {
    v.to_f64().expect("scalar must convert to f64")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean<S: Scalar>(xs: &[S]) -> S {
        xs.iter().copied().sum::<S>() / cast::<S>(xs.len() as f64)
    }

    #[test]
    fn kernels_work_in_both_widths() {
        let a: f64 = mean(&[1.0_f64, 2.0, 3.0]);
        let b: f32 = mean(&[1.0_f32, 2.0, 3.0]);
        assert_eq!(a, 2.0);
        assert_eq!(b, 2.0);
    }

    #[test]
    fn cast_round_trips_constants() {
        assert_eq!(cast::<f64>(0.08), 0.08);
        assert_eq!(to_f64(cast::<f32>(1.5)), 1.5);
    }
}
