//! Independent reference computations used by the test suites and by
//! `verify`.
//!
//! Nothing here is used on the engine's own evaluation paths: these are the
//! closed forms and brute-force routes the engine is checked against.

use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;

use crate::propagator::Grid;
use crate::statespace::{Kernel, StateSpace};
use crate::{CProb, Complex, Real};

/// Random kernel whose rows sum to exactly `1` up to rounding: all but the
/// last entry of each row are drawn uniformly from the unit square around
/// zero and the last one closes the row.
pub fn random_valid_kernel<T: Real, R: Rng + ?Sized>(
    space: Arc<StateSpace>,
    step: T,
    rng: &mut R,
) -> Kernel<T> {
    let n = space.dimension();
    let mut e = Array2::from_elem((n, n), CProb::new(T::zero(), T::zero()));
    for r in 0..n {
        let mut sum = CProb::new(T::zero(), T::zero());
        for c in 0..n - 1 {
            let z = CProb::new(
                T::lit(rng.gen_range(-1.0..1.0)),
                T::lit(rng.gen_range(-1.0..1.0)),
            );
            e[[r, c]] = z;
            sum += z;
        }
        e[[r, n - 1]] = CProb::new(T::one(), T::zero()) - sum;
    }
    Kernel::new(space, step, e).expect("random kernel is well-formed")
}

/// Random complex vector summing to one.
pub fn random_unit_row<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<CProb<T>> {
    let mut v: Vec<CProb<T>> = (0..n.saturating_sub(1))
        .map(|_| {
            CProb::new(
                T::lit(rng.gen_range(-1.0..1.0)),
                T::lit(rng.gen_range(-1.0..1.0)),
            )
        })
        .collect();
    let sum: CProb<T> = v.iter().copied().sum();
    v.push(CProb::new(T::one(), T::zero()) - sum);
    v
}

/// `Prob(d2 | η)` for the which-path interferometer, from the four flagged
/// path values `-iη/2, +iη/2, 1/2, 1/2`.
pub fn which_path_d2(eta: f64) -> f64 {
    eta * eta / (1.0 + eta * eta)
}

/// Inverse of a 1×1, 2×2 or 3×3 complex matrix by cofactors.
pub fn cofactor_inverse<T: Real>(m: &Array2<Complex<T>>) -> Option<Array2<Complex<T>>> {
    let n = m.nrows();
    let det = cofactor_det(m)?;
    if det.norm() == T::zero() {
        return None;
    }
    let mut inv = Array2::from_elem((n, n), Complex::new(T::zero(), T::zero()));
    match n {
        1 => inv[[0, 0]] = det.inv(),
        2 => {
            inv[[0, 0]] = m[[1, 1]] / det;
            inv[[0, 1]] = -m[[0, 1]] / det;
            inv[[1, 0]] = -m[[1, 0]] / det;
            inv[[1, 1]] = m[[0, 0]] / det;
        }
        3 => {
            for i in 0..3 {
                for j in 0..3 {
                    // adjugate: transpose of the cofactor matrix
                    let (r0, r1) = others(j);
                    let (c0, c1) = others(i);
                    let minor = m[[r0, c0]] * m[[r1, c1]] - m[[r0, c1]] * m[[r1, c0]];
                    let sign = if (i + j) % 2 == 0 { T::one() } else { -T::one() };
                    inv[[i, j]] = minor * sign / det;
                }
            }
        }
        _ => return None,
    }
    Some(inv)
}

fn others(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

pub fn cofactor_det<T: Real>(m: &Array2<Complex<T>>) -> Option<Complex<T>> {
    match m.nrows() {
        1 => Some(m[[0, 0]]),
        2 => Some(m[[0, 0]] * m[[1, 1]] - m[[0, 1]] * m[[1, 0]]),
        3 => Some(
            m[[0, 0]] * (m[[1, 1]] * m[[2, 2]] - m[[1, 2]] * m[[2, 1]])
                - m[[0, 1]] * (m[[1, 0]] * m[[2, 2]] - m[[1, 2]] * m[[2, 0]])
                + m[[0, 2]] * (m[[1, 0]] * m[[2, 1]] - m[[1, 1]] * m[[2, 0]]),
        ),
        _ => None,
    }
}

/// The continuum free propagator `sqrt(W / 2πτ) exp(-W z² / 2τ)` for a
/// scalar weight on a 1-D periodic grid, integrated over each cell by
/// point sampling and summed over `images` periodic copies on each side.
///
/// Unlike the engine's lattice kernel this is neither truncated to the
/// minimal image nor renormalized.
pub fn periodized_free_kernel<T: Real>(
    grid: &Grid<T>,
    tau: T,
    weight: Complex<T>,
    images: i32,
) -> Array2<Complex<T>> {
    assert_eq!(grid.dimension(), 1, "reference kernel is one-dimensional");
    let n = grid.len();
    let two = T::lit(2.0);
    let pref = (weight / (two * T::PI() * tau)).sqrt() * grid.spacing();
    let extent = grid.extent();
    let mut out = Array2::from_elem((n, n), Complex::new(T::zero(), T::zero()));
    for r in 0..n {
        for c in 0..n {
            let z0 = grid.displacement(r, c)[0];
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in -images..=images {
                let z = z0 + T::lit(k as f64) * extent;
                acc += pref * (-weight * z * z / (two * tau)).exp();
            }
            out[[r, c]] = acc;
        }
    }
    out
}
