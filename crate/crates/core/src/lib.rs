//! Complex-valued probability calculus over Markov state spaces.
//!
//! The engine assigns complex numbers `(a -> b)` to pairs of propositions,
//! composes them along one-step transition kernels, and turns the result
//! into observable frequencies by squaring magnitudes. Everything is generic
//! over the real scalar type (`f32` or `f64`); the `*64` aliases at the
//! bottom of this file are the ones the CLI and the acceptance suite use.
//!
//! Modules, bottom-up:
//!
//! * [`algebra`]: scalar calculus (product rule, negation, disjunction, Bayes).
//! * [`statespace`]: state spaces, kernels, chains, composition, tensor
//!   products and the brute-force path enumerator.
//! * [`frequency`]: the squared-magnitude frequency predictor and
//!   interference diagnostics.
//! * [`propagator`]: lattice short-time kernels, sub-step refinement, moment
//!   extraction, weight matrices and the free-particle wave-packet check.
//! * [`scenarios`]: interferometer and two-slit builders plus the scenario
//!   text format.
//! * [`verify`]: invariant groups runnable from the CLI.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

pub mod algebra;
pub mod error;
pub mod frequency;
pub mod oracle;
pub mod propagator;
pub mod scenarios;
pub mod statespace;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex;

/// Real scalar the engine is generic over.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Machine epsilon, used to size default tolerances per scalar type.
    fn machine_eps() -> Self {
        Self::epsilon()
    }

    /// Literal conversion; panics only for values the type cannot represent.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal out of range for scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A complex probability `(a -> b)`.
pub type CProb<T> = Complex<T>;

/// Numerical tolerances shared across modules.
///
/// Defaults follow the double-precision values the engine is specified
/// against; [`Tolerances::for_scalar`] loosens them for `f32`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of a kernel row sum (or initial vector sum) from 1.
    pub row_sum: f64,
    /// Magnitude at or below which a Bayes divisor counts as zero.
    pub divisor: f64,
    /// Squared-magnitude total below which no frequency prediction exists.
    pub denominator: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            row_sum: 1e-10,
            divisor: 1e-12,
            denominator: 1e-15,
        }
    }
}

impl Tolerances {
    pub fn for_scalar<T: Real>() -> Self {
        let scale = T::machine_eps().to_f64().unwrap_or(f64::EPSILON) / f64::EPSILON;
        if scale <= 1.0 {
            Self::default()
        } else {
            // f32: ~5e8 times coarser than f64
            Self {
                row_sum: 1e-5,
                divisor: 1e-6,
                ..Self::default()
            }
        }
    }
}

pub type CProb64 = CProb<f64>;
pub type CProb32 = CProb<f32>;
pub type Kernel64 = statespace::Kernel<f64>;
pub type Kernel32 = statespace::Kernel<f32>;
pub type KernelChain64 = statespace::KernelChain<f64>;
pub type KernelChain32 = statespace::KernelChain<f32>;
pub type FrequencyResult64 = frequency::FrequencyResult<f64>;
pub type Grid64 = propagator::Grid<f64>;
pub type GridKernel64 = propagator::GridKernel<f64>;
pub type MomentData64 = propagator::MomentData<f64>;
pub type Scenario64 = scenarios::Scenario<f64>;
pub type ScenarioResult64 = scenarios::ScenarioResult<f64>;
