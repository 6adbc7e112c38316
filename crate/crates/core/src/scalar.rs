use num_traits::Float;
use std::fmt::Debug;

/// Element type a network can run at: `f32` for training throughput,
/// `f64` for finite-difference verification.
///
/// The conversion methods get non-colliding names (`num_traits` already
/// claims `from_f64`/`to_f64` through `ToPrimitive`) and are total — both
/// directions are plain `as` casts.
pub trait Scalar: Float + Debug + Default + Send + Sync + 'static {
    fn of_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn of_f64(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn of_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}
