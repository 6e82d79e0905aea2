use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point type the simulator is generic over (`f32` or `f64`).
///
/// Tolerances scale with the precision of the type; the values for `f64` are
/// the ones the verification suite is pinned to.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Elementwise bound on `|A - A^dagger|` accepted as Hermitian.
    fn hermitian_tol() -> Self;

    /// Bound on `||U^dagger U - I||_F` accepted as unitary.
    fn unitary_tol() -> Self;

    /// Relative cut below which a singular value counts as zero.
    fn rank_tol() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn hermitian_tol() -> Self {
        1e-12
    }

    fn unitary_tol() -> Self {
        1e-10
    }

    fn rank_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn hermitian_tol() -> Self {
        1e-5
    }

    fn unitary_tol() -> Self {
        1e-4
    }

    fn rank_tol() -> Self {
        1e-4
    }
}
