//! Scalar abstraction used by the numerical modules.
//!
//! All core math is written against [`Real`] so the same code runs in
//! `f32` or `f64`. The crate root exposes `f64` type aliases, which is
//! what the CLI and the fixtures use.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::Debug;
use std::iter::Sum;

pub trait Real: Float + FromPrimitive + ToPrimitive + Sum + Debug + Send + Sync + 'static {
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 -> Real conversion")
    }
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real -> f64 conversion")
    }
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize -> Real conversion")
    }
}

impl<T> Real for T where T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Send + Sync + 'static {}
