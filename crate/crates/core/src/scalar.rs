use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, NumCast};

/// Floating point intensity type: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumCast + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("literal fits in scalar")
    }

    #[inline]
    fn from_usize(v: usize) -> Self {
        <Self as NumCast>::from(v).expect("count fits in scalar")
    }

    /// Intensity in `[0, 1]` from an 8-bit sample.
    #[inline]
    fn from_u8_unit(v: u8) -> Self {
        Self::lit(v as f64) / Self::lit(255.0)
    }

    /// Nearest 8-bit sample for an intensity, clamped to `[0, 1]`.
    #[inline]
    fn to_u8_unit(self) -> u8 {
        let v = self.max(Self::zero()).min(Self::one()) * Self::lit(255.0);
        v.round().to_u8().unwrap_or(0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
