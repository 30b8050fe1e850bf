//! Scalar abstraction shared by all statistical routines.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar over which the library is generic.
///
/// The bound combines nalgebra's [`RealField`] (elementary functions, ordering,
/// linear-algebra support) with the num-traits conversion traits used to lift
/// `f64` constants and to lower values into error messages. `f32` and `f64`
/// satisfy it out of the box.
///
/// [`num_traits::Float`] is intentionally absent from the bound: together with
/// `RealField` it would make every `sqrt`/`ln`/`abs` call ambiguous.
pub trait Scalar: RealField + FromPrimitive + ToPrimitive + Copy {}

impl<T: RealField + FromPrimitive + ToPrimitive + Copy> Scalar for T {}

/// Lifts an `f64` constant into the scalar type.
///
/// Panics if the constant is not representable, which cannot happen for the
/// finite literals this crate feeds it.
#[inline]
pub(crate) fn fp<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 constant must be representable")
}

/// Lowers a scalar to `f64` for reporting; NaN stands in for the unrepresentable.
#[inline]
pub(crate) fn lower<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Machine epsilon of `T`, computed once per call by halving.
pub(crate) fn machine_epsilon<T: Scalar>() -> T {
    let two = fp::<T>(2.0);
    let mut eps = T::one();
    while T::one() + eps / two > T::one() {
        eps /= two;
    }
    eps
}
