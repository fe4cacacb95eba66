//! Continuous state spaces on periodic lattices.
//!
//! The short-time kernel of a particle on `R^d` is Gaussian in the
//! displacement, parameterized by a rate `ν₀`, a drift `ν` and a weight
//! matrix `W`. This module builds that kernel on a grid, composes
//! sub-steps, reads the moments back out of a kernel row, factors the
//! second-moment table into `W`, evaluates the associated Lagrangian and
//! checks free-particle evolution against the closed-form wave packet.

mod grid;
mod kernel;
mod moments;
mod schrodinger;
pub mod symmetric;

pub use grid::{Grid, MAX_SITES};
pub use kernel::{
    gaussian_step_kernel, refine_and_compose, ConstantField, GridKernel, MomentField, COARSE_LIMIT,
};
pub use moments::{
    extract_moments, factorization_residuals, lagrangian, weight_matrix, MomentData, RawMoments,
    WeightDecomposition,
};
pub use schrodinger::{
    boundary_weight, inner_l2, schrodinger_residual, FreeParticle, GaussianPacket, PacketStudy,
    Regulator, ResidualReport, BOUNDARY_LIMIT,
};

use crate::{Complex, Real, Result};

/// Extracted moments next to the fields the kernel was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRoundTrip<T: Real> {
    pub input: ConstantField<T>,
    pub extracted: MomentData<T>,
}

impl<T: Real> MomentRoundTrip<T> {
    /// Relative errors of `(ν₀, ν, W)`; zero inputs are compared absolutely.
    pub fn relative_errors(&self) -> (T, T, T) {
        fn rel<T: Real>(got: Complex<T>, want: Complex<T>) -> T {
            let diff = (got - want).norm();
            if want.norm() > T::zero() {
                diff / want.norm()
            } else {
                diff
            }
        }
        let nu0 = rel(self.extracted.nu0, self.input.nu0);
        let nu = self
            .extracted
            .nu
            .iter()
            .zip(self.input.nu.iter())
            .map(|(&g, &w)| rel(g, w))
            .fold(T::zero(), T::max);
        let w = self
            .extracted
            .weight
            .iter()
            .zip(self.input.weight.iter())
            .map(|(&g, &w)| rel(g, w))
            .fold(T::zero(), T::max);
        (nu0, nu, w)
    }
}

/// Build the step kernel from constant fields, then read the moments back
/// at the grid center.
pub fn moment_round_trip<T: Real>(
    field: &ConstantField<T>,
    tau: T,
    grid: &Grid<T>,
) -> Result<MomentRoundTrip<T>> {
    let k = gaussian_step_kernel(field, tau, grid)?;
    let extracted = extract_moments(&k, grid.center())?.complete()?;
    Ok(MomentRoundTrip {
        input: field.clone(),
        extracted,
    })
}
