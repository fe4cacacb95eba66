use std::sync::Arc;

use ndarray::{Array1, Array2};

use super::grid::Grid;
use super::symmetric::{eigen_symmetric, EigenFailure};
use crate::statespace::{Kernel, StateSpace};
use crate::{Complex, Error, Real, Result};

/// Largest allowed relative gap between a lattice row's pre-normalization
/// sum and its continuum value of one.
pub const COARSE_LIMIT: f64 = 0.1;

/// Local moment fields of the short-time kernel: the rate `ν₀(x)`, drift
/// `ν(x)` and weight matrix `W(x)`.
pub trait MomentField<T: Real> {
    fn dimension(&self) -> usize;
    fn nu0(&self, x: &[T]) -> Complex<T>;
    fn nu(&self, x: &[T]) -> Array1<Complex<T>>;
    fn weight(&self, x: &[T]) -> Array2<Complex<T>>;
}

/// Position-independent fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantField<T: Real> {
    pub nu0: Complex<T>,
    pub nu: Array1<Complex<T>>,
    pub weight: Array2<Complex<T>>,
}

impl<T: Real> ConstantField<T> {
    pub fn new(
        nu0: Complex<T>,
        nu: Array1<Complex<T>>,
        weight: Array2<Complex<T>>,
    ) -> Result<Self> {
        let d = nu.len();
        if weight.dim() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: weight.nrows(),
            });
        }
        Ok(Self { nu0, nu, weight })
    }

    /// One-dimensional fields with scalar weight.
    pub fn scalar(nu0: Complex<T>, nu: Complex<T>, weight: Complex<T>) -> Self {
        Self {
            nu0,
            nu: Array1::from_elem(1, nu),
            weight: Array2::from_elem((1, 1), weight),
        }
    }

    /// Free particle: no rate, no drift, `W = (δ + i·mass) I`.
    pub fn free(dimension: usize, regulator: T, mass: T) -> Self {
        let zero = Complex::new(T::zero(), T::zero());
        let w = Complex::new(regulator, mass);
        Self {
            nu0: zero,
            nu: Array1::from_elem(dimension, zero),
            weight: Array2::from_shape_fn((dimension, dimension), |(i, j)| {
                if i == j {
                    w
                } else {
                    zero
                }
            }),
        }
    }
}

impl<T: Real> MomentField<T> for ConstantField<T> {
    fn dimension(&self) -> usize {
        self.nu.len()
    }

    fn nu0(&self, _x: &[T]) -> Complex<T> {
        self.nu0
    }

    fn nu(&self, _x: &[T]) -> Array1<Complex<T>> {
        self.nu.clone()
    }

    fn weight(&self, _x: &[T]) -> Array2<Complex<T>> {
        self.weight.clone()
    }
}

/// Dense lattice kernel: entry `(x, y)` is `(x at t -> y at t + step)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridKernel<T: Real> {
    grid: Grid<T>,
    step: T,
    entries: Array2<Complex<T>>,
    raw_row_sums: Option<Vec<Complex<T>>>,
}

impl<T: Real> GridKernel<T> {
    pub fn from_entries(grid: &Grid<T>, step: T, entries: Array2<Complex<T>>) -> Result<Self> {
        let n = grid.len();
        if entries.dim() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: entries.nrows(),
            });
        }
        if !(step > T::zero()) || !step.is_finite() {
            return Err(Error::NonPositiveStep(step.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self {
            grid: *grid,
            step,
            entries,
            raw_row_sums: None,
        })
    }

    /// The no-motion kernel: every row a lattice delta.
    pub fn identity(grid: &Grid<T>, step: T) -> Self {
        let n = grid.len();
        let entries = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }
        });
        Self {
            grid: *grid,
            step,
            entries,
            raw_row_sums: None,
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn entries(&self) -> &Array2<Complex<T>> {
        &self.entries
    }

    /// Row sums before renormalization; present only on kernels built
    /// directly from moment fields.
    pub fn raw_row_sums(&self) -> Option<&[Complex<T>]> {
        self.raw_row_sums.as_deref()
    }

    pub fn row_sum(&self, row: usize) -> Complex<T> {
        self.entries.row(row).iter().copied().sum()
    }

    pub fn compose(&self, next: &GridKernel<T>) -> Result<GridKernel<T>> {
        if self.grid != next.grid {
            return Err(Error::SpaceMismatch);
        }
        Ok(GridKernel {
            grid: self.grid,
            step: self.step + next.step,
            entries: self.entries.dot(&next.entries),
            raw_row_sums: None,
        })
    }

    /// `n`-fold self-composition by repeated squaring.
    pub fn power(&self, n: usize) -> Result<GridKernel<T>> {
        if n == 0 {
            return Err(Error::Unsupported("kernel power must be at least 1".into()));
        }
        let mut result: Option<GridKernel<T>> = None;
        let mut base = self.clone();
        let mut k = n;
        loop {
            if k & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.compose(&base)?,
                });
            }
            k >>= 1;
            if k == 0 {
                break;
            }
            base = base.compose(&base)?;
        }
        Ok(result.expect("n >= 1"))
    }

    /// Propagate a row vector one step: `v'(y) = Σ_x v(x) k(x, y)`.
    pub fn apply(&self, v: &Array1<Complex<T>>) -> Array1<Complex<T>> {
        v.dot(&self.entries)
    }

    /// The same table as a state-space kernel with site labels `x0, x1, ...`.
    pub fn to_kernel(&self) -> Result<Kernel<T>> {
        let space = StateSpace::new((0..self.grid.len()).map(|i| format!("x{i}")))?;
        Kernel::new(Arc::new(space), self.step, self.entries.clone())
    }
}

/// Short-time lattice kernel
///
/// ```text
///   (x -> x + z) ∝ exp(-τ [½ (z/τ - ν) W (z/τ - ν) + ν₀])
/// ```
///
/// with prefactor `sqrt(det W) / (2πτ)^{d/2}` times the cell volume. The
/// quadratic part of every row is renormalized to sum to exactly one and
/// then scaled by `exp(-τ ν₀(x))`, so rows sum to one whenever `ν₀ = 0`.
/// A row whose pre-normalization sum is more than [`COARSE_LIMIT`] away
/// from one is rejected: the lattice does not resolve the kernel.
pub fn gaussian_step_kernel<T: Real, F: MomentField<T>>(
    field: &F,
    tau: T,
    grid: &Grid<T>,
) -> Result<GridKernel<T>> {
    if !(tau > T::zero()) || !tau.is_finite() {
        return Err(Error::NonPositiveStep(tau.to_f64().unwrap_or(f64::NAN)));
    }
    let d = grid.dimension();
    if field.dimension() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: field.dimension(),
        });
    }
    let n = grid.len();
    let two = T::lit(2.0);
    let norm = (two * T::PI() * tau).powf(T::lit(d as f64 / 2.0));
    let mut entries = Array2::from_elem((n, n), Complex::new(T::zero(), T::zero()));
    let mut raw_sums = Vec::with_capacity(n);

    for r in 0..n {
        let x = grid.coords(r);
        let w = field.weight(&x);
        let nu = field.nu(&x);
        let sqrt_det = checked_sqrt_det(&w)?;
        let pref = sqrt_det / norm * grid.cell_volume();

        let mut row_sum = Complex::new(T::zero(), T::zero());
        for c in 0..n {
            let z = grid.displacement(r, c);
            let u: Vec<Complex<T>> = z
                .iter()
                .zip(nu.iter())
                .map(|(&zi, &vi)| Complex::new(zi, T::zero()) - vi * tau)
                .collect();
            let mut quad = Complex::new(T::zero(), T::zero());
            for j in 0..d {
                for k in 0..d {
                    quad += u[j] * w[[j, k]] * u[k];
                }
            }
            let value = pref * (-quad / (two * tau)).exp();
            entries[[r, c]] = value;
            row_sum += value;
        }
        let gap = (row_sum - Complex::new(T::one(), T::zero())).norm();
        if !(gap <= T::lit(COARSE_LIMIT)) {
            return Err(Error::GridTooCoarse(format!(
                "row {r}: lattice sum {:.4}{:+.4}i is {:.1}% away from 1",
                row_sum.re,
                row_sum.im,
                gap.to_f64().unwrap_or(f64::NAN) * 100.0
            )));
        }
        let scale = (-field.nu0(&x) * tau).exp() / row_sum;
        entries.row_mut(r).mapv_inplace(|v| v * scale);
        raw_sums.push(row_sum);
    }

    Ok(GridKernel {
        grid: *grid,
        step: tau,
        entries,
        raw_row_sums: Some(raw_sums),
    })
}

/// `sqrt(det W)` as the product of principal square roots of the
/// eigenvalues, after checking that `W` is symmetric, nonsingular and has
/// a positive definite real part (so the Gaussian decays).
fn checked_sqrt_det<T: Real>(w: &Array2<Complex<T>>) -> Result<Complex<T>> {
    let eig = eigen_symmetric(w, 1e-10).map_err(|e| match e {
        EigenFailure::NotSymmetric(a) => Error::SingularW(format!("not symmetric ({a:e})")),
        other => Error::SingularW(format!("cannot diagonalize: {other:?}")),
    })?;
    let scale = eig.values.iter().map(|v| v.norm()).fold(T::zero(), T::max);
    if eig
        .values
        .iter()
        .any(|v| v.norm() <= scale * T::lit(1e-14) || v.norm() == T::zero())
    {
        return Err(Error::SingularW("zero eigenvalue".into()));
    }
    let re_part = w.mapv(|z| Complex::new(z.re, T::zero()));
    let re_eig = eigen_symmetric(&re_part, 1e-10)
        .map_err(|e| Error::SingularW(format!("real part: {e:?}")))?;
    if re_eig.values.iter().any(|v| !(v.re > T::zero())) {
        return Err(Error::SingularW(
            "real part is not positive definite; the kernel does not decay".into(),
        ));
    }
    Ok(eig
        .values
        .iter()
        .fold(Complex::new(T::one(), T::zero()), |acc, v| acc * v.sqrt()))
}

/// The `N`-fold composition of kernels of step `τ/N`.
pub fn refine_and_compose<T: Real, F: MomentField<T>>(
    field: &F,
    tau: T,
    n: usize,
    grid: &Grid<T>,
) -> Result<GridKernel<T>> {
    if n == 0 {
        return Err(Error::Unsupported("refinement count must be at least 1".into()));
    }
    gaussian_step_kernel(field, tau / T::lit(n as f64), grid)?.power(n)
}
