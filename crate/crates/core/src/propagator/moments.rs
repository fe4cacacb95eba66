use ndarray::{Array1, Array2};

use super::kernel::GridKernel;
use super::symmetric::{asymmetry, eigen_symmetric, EigenFailure};
use crate::{Complex, Error, Real, Result};

/// Rate-scaled moments of one kernel row.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMoments<T: Real> {
    pub nu0: Complex<T>,
    pub nu: Array1<Complex<T>>,
    pub nu2: Array2<Complex<T>>,
}

/// Moments together with the weight-matrix factorization of `nu2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentData<T: Real> {
    pub nu0: Complex<T>,
    pub nu: Array1<Complex<T>>,
    pub nu2: Array2<Complex<T>>,
    /// Complex-orthogonal `M` with `Mᵀ ν₂ M = diag(1/ω)`.
    pub diagonalizer: Array2<Complex<T>>,
    pub omega: Array1<Complex<T>>,
    /// `W = M diag(ω) Mᵀ`.
    pub weight: Array2<Complex<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightDecomposition<T: Real> {
    pub diagonalizer: Array2<Complex<T>>,
    pub omega: Array1<Complex<T>>,
    pub weight: Array2<Complex<T>>,
}

/// Moments of the row of `k` starting at grid site `site`:
///
/// * `ν₀ = (1 - Σ_z μ) / τ`
/// * `ν_j = Σ_z μ z_j / τ`
/// * `ν_jk = Σ_z μ z_j z_k / τ`
///
/// Kernel entries are already integrated over their target cell, so the
/// sums need no extra volume factor.
pub fn extract_moments<T: Real>(k: &GridKernel<T>, site: usize) -> Result<RawMoments<T>> {
    let grid = k.grid();
    if site >= grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            actual: site + 1,
        });
    }
    let d = grid.dimension();
    let tau = k.step();
    let zero = Complex::new(T::zero(), T::zero());
    let mut total = zero;
    let mut first = Array1::from_elem(d, zero);
    let mut second = Array2::from_elem((d, d), zero);
    for c in 0..grid.len() {
        let mu = k.entries()[[site, c]];
        let z = grid.displacement(site, c);
        total += mu;
        for j in 0..d {
            first[j] += mu * z[j];
            for l in 0..d {
                second[[j, l]] += mu * (z[j] * z[l]);
            }
        }
    }
    Ok(RawMoments {
        nu0: (Complex::new(T::one(), T::zero()) - total) / tau,
        nu: first.mapv(|v| v / tau),
        nu2: second.mapv(|v| v / tau),
    })
}

/// Factor a symmetric, nonsingular second-moment table.
///
/// `ω` is sorted by descending real part; each column of `M` is signed so
/// that its largest-magnitude component has positive real part (positive
/// imaginary part if the real part vanishes). Only a sign is free: any
/// other phase would break `MᵀM = I`.
pub fn weight_matrix<T: Real>(nu2: &Array2<Complex<T>>) -> Result<WeightDecomposition<T>> {
    let d = nu2.nrows();
    if nu2.ncols() != d || d == 0 {
        return Err(Error::SingularMoments("moment table is not square".into()));
    }
    if asymmetry(nu2) > T::lit(1e-10) {
        return Err(Error::SingularMoments(format!(
            "moment table is not symmetric (relative asymmetry {:e})",
            asymmetry(nu2).to_f64().unwrap_or(f64::NAN)
        )));
    }
    let eig = eigen_symmetric(nu2, 1e-10).map_err(|e| match e {
        EigenFailure::Isotropic => {
            Error::SingularMoments("isotropic direction; no orthogonal diagonalizer".into())
        }
        other => Error::SingularMoments(format!("{other:?}")),
    })?;
    let scale = eig.values.iter().map(|v| v.norm()).fold(T::zero(), T::max);
    if eig
        .values
        .iter()
        .any(|v| v.norm() == T::zero() || v.norm() <= scale * T::lit(1e-13))
    {
        return Err(Error::SingularMoments("zero eigenvalue".into()));
    }

    let mut order: Vec<usize> = (0..d).collect();
    let omega_raw: Vec<Complex<T>> = eig.values.iter().map(|v| v.inv()).collect();
    order.sort_by(|&a, &b| {
        omega_raw[b]
            .re
            .partial_cmp(&omega_raw[a].re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut m = Array2::from_elem((d, d), Complex::new(T::zero(), T::zero()));
    let mut omega = Array1::from_elem(d, Complex::new(T::zero(), T::zero()));
    for (slot, &src) in order.iter().enumerate() {
        let col = eig.vectors.column(src);
        let lead = col
            .iter()
            .copied()
            .enumerate()
            .fold((0, T::zero()), |best, (i, z)| {
                if z.norm() > best.1 {
                    (i, z.norm())
                } else {
                    best
                }
            })
            .0;
        let pivot = col[lead];
        let flip = pivot.re < T::zero() || (pivot.re == T::zero() && pivot.im < T::zero());
        for i in 0..d {
            m[[i, slot]] = if flip { -col[i] } else { col[i] };
        }
        omega[slot] = omega_raw[src];
    }

    let scaled = Array2::from_shape_fn((d, d), |(i, l)| m[[i, l]] * omega[l]);
    let weight = scaled.dot(&m.t());
    Ok(WeightDecomposition {
        diagonalizer: m,
        omega,
        weight,
    })
}

impl<T: Real> RawMoments<T> {
    pub fn complete(self) -> Result<MomentData<T>> {
        let w = weight_matrix(&self.nu2)?;
        Ok(MomentData {
            nu0: self.nu0,
            nu: self.nu,
            nu2: self.nu2,
            diagonalizer: w.diagonalizer,
            omega: w.omega,
            weight: w.weight,
        })
    }
}

/// Worst deviations of the two factorization identities:
/// `Mᵀ ν₂ M = diag(1/ω)` and `W = M diag(ω) Mᵀ`.
pub fn factorization_residuals<T: Real>(m: &MomentData<T>) -> (T, T) {
    let d = m.nu2.nrows();
    let zero = Complex::new(T::zero(), T::zero());
    let diag = m.diagonalizer.t().dot(&m.nu2).dot(&m.diagonalizer);
    let scaled = Array2::from_shape_fn((d, d), |(i, l)| m.diagonalizer[[i, l]] * m.omega[l]);
    let rebuilt = scaled.dot(&m.diagonalizer.t());
    let mut diag_err = T::zero();
    let mut weight_err = T::zero();
    for i in 0..d {
        for j in 0..d {
            let expect = if i == j { m.omega[i].inv() } else { zero };
            diag_err = diag_err.max((diag[[i, j]] - expect).norm());
            weight_err = weight_err.max((rebuilt[[i, j]] - m.weight[[i, j]]).norm());
        }
    }
    (diag_err, weight_err)
}

/// `L(x, v) = (i/2)(v - ν)ᵀ W (v - ν) - i ν₀` with the moments at `x`.
pub fn lagrangian<T: Real>(m: &MomentData<T>, v: &[T]) -> Result<Complex<T>> {
    let d = m.nu.len();
    if v.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: v.len(),
        });
    }
    let u: Vec<Complex<T>> = v
        .iter()
        .zip(m.nu.iter())
        .map(|(&vi, &ni)| Complex::new(vi, T::zero()) - ni)
        .collect();
    let mut quad = Complex::new(T::zero(), T::zero());
    for j in 0..d {
        for k in 0..d {
            quad += u[j] * m.weight[[j, k]] * u[k];
        }
    }
    let i = Complex::new(T::zero(), T::one());
    Ok(i * quad * T::lit(0.5) - i * m.nu0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::cofactor_inverse;
    use crate::propagator::{gaussian_step_kernel, ConstantField, Grid};
    use ndarray::arr2;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn moment(nu0: Complex<f64>, nu: Vec<Complex<f64>>, weight: Array2<Complex<f64>>) -> MomentData<f64> {
        let d = nu.len();
        MomentData {
            nu0,
            nu: Array1::from(nu),
            nu2: Array2::eye(d).mapv(|v: f64| c(v, 0.0)),
            diagonalizer: Array2::eye(d).mapv(|v: f64| c(v, 0.0)),
            omega: Array1::from_elem(d, c(1.0, 0.0)),
            weight,
        }
    }

    fn rotation(deg: f64) -> Array2<Complex<f64>> {
        let (s, co) = deg.to_radians().sin_cos();
        arr2(&[[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]])
    }

    #[test]
    fn weight_matrix_identity() {
        let id = Array2::eye(3).mapv(|v: f64| c(v, 0.0));
        let w = weight_matrix(&id).unwrap();
        assert_eq!(w.diagonalizer, id);
        assert_eq!(w.omega.to_vec(), vec![c(1.0, 0.0); 3]);
        assert_eq!(w.weight, id);
    }

    #[test]
    fn weight_matrix_diagonal() {
        let nu2 = arr2(&[[c(0.5, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0 / 3.0, 0.0)]]);
        let w = weight_matrix(&nu2).unwrap();
        // sorted by descending real part
        assert!((w.omega[0] - c(3.0, 0.0)).norm() < 1e-14);
        assert!((w.omega[1] - c(2.0, 0.0)).norm() < 1e-14);
        let expect = arr2(&[[c(2.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(3.0, 0.0)]]);
        for (a, b) in w.weight.iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn weight_matrix_rotated() {
        let r = rotation(30.0);
        let d = arr2(&[[c(0.5, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0 / 3.0, 0.0)]]);
        let nu2 = r.dot(&d).dot(&r.t());
        let w = weight_matrix(&nu2).unwrap();
        let data = RawMoments { nu0: c(0.0, 0.0), nu: Array1::from_elem(2, c(0.0, 0.0)), nu2: nu2.clone() }
            .complete()
            .unwrap();
        let (diag_err, weight_err) = factorization_residuals(&data);
        assert!(diag_err < 1e-10 && weight_err < 1e-10);
        let expect = r.dot(&arr2(&[[c(2.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(3.0, 0.0)]])).dot(&r.t());
        for (a, b) in w.weight.iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        // independent route: the weight is the inverse of the moment table
        let inv = cofactor_inverse(&nu2).unwrap();
        for (a, b) in w.weight.iter().zip(inv.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn weight_matrix_errors() {
        let singular = arr2(&[[c(1.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(1.0, 0.0)]]);
        assert!(matches!(weight_matrix(&singular), Err(Error::SingularMoments(_))));
        let asym = arr2(&[[c(1.0, 0.0), c(0.5, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]);
        assert!(matches!(weight_matrix(&asym), Err(Error::SingularMoments(_))));
    }

    #[test]
    fn sign_convention_is_deterministic() {
        let nu2 = arr2(&[[c(2.0, 0.3), c(0.4, 0.1)], [c(0.4, 0.1), c(1.0, -0.2)]]);
        let a = weight_matrix(&nu2).unwrap();
        assert_eq!(a, weight_matrix(&nu2).unwrap());
        for col in a.diagonalizer.columns() {
            let lead = col.iter().fold(c(0.0, 0.0), |b, z| if z.norm() > b.norm() { *z } else { b });
            assert!(lead.re > 0.0 || (lead.re == 0.0 && lead.im > 0.0));
        }
    }

    #[test]
    fn lagrangian_examples() {
        let w = arr2(&[[c(0.0, 1.0)]]);
        let m = moment(c(0.7, 0.0), vec![c(0.4, 0.0)], w.clone());
        assert!((lagrangian(&m, &[0.4]).unwrap() - c(0.0, -0.7)).norm() < 1e-15);
        let m = moment(c(0.0, 0.0), vec![c(0.0, 0.0)], w);
        assert!((lagrangian(&m, &[1.0]).unwrap() - c(-0.5, 0.0)).norm() < 1e-15);
        assert!(lagrangian(&m, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn identity_limit_has_no_motion() {
        let grid = Grid::with_extent(1, 64, 1.0).unwrap();
        let k = GridKernel::identity(&grid, 1e-4);
        let raw = extract_moments(&k, grid.center()).unwrap();
        assert_eq!(raw.nu0, c(0.0, 0.0));
        assert_eq!(raw.nu[0], c(0.0, 0.0));
        assert_eq!(raw.nu2[[0, 0]], c(0.0, 0.0));
    }

    fn round_trip(field: &ConstantField<f64>) -> MomentData<f64> {
        let grid = Grid::with_extent(1, 256, 1.0).unwrap();
        let k = gaussian_step_kernel(field, 1e-3, &grid).unwrap();
        extract_moments(&k, grid.center()).unwrap().complete().unwrap()
    }

    #[test]
    fn heat_kernel_second_moment() {
        let m = round_trip(&ConstantField::scalar(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)));
        assert!((m.nu2[[0, 0]] - c(1.0, 0.0)).norm() < 1e-2);
        assert!(m.nu[0].norm() < 1e-10);
        assert!(m.nu0.norm() < 1e-10);
    }

    #[test]
    fn drift_is_recovered() {
        let m = round_trip(&ConstantField::scalar(c(0.0, 0.0), c(0.7, 0.0), c(1.0, 0.0)));
        assert!((m.nu[0] - c(0.7, 0.0)).norm() / 0.7 < 1e-2);
    }

    #[test]
    fn lagrangian_round_trip() {
        let field = ConstantField::scalar(c(0.4, 0.1), c(0.3, 0.0), c(2.0, 0.5));
        let m = round_trip(&field);
        for v in [-1.0, 0.0, 0.5, 2.0] {
            let u = c(v - 0.3, 0.0);
            let direct = c(0.0, 0.5) * u * c(2.0, 0.5) * u - c(0.0, 1.0) * c(0.4, 0.1);
            let got = lagrangian(&m, &[v]).unwrap();
            assert!((got - direct).norm() / direct.norm() < 2e-2, "v={v}: {got} vs {direct}");
        }
    }

    fn symmetric(d: usize) -> impl Strategy<Value = Array2<Complex<f64>>> {
        proptest::collection::vec((-1.0f64..1.0, -0.3f64..0.3), d * d).prop_map(move |v| {
            let a = Array2::from_shape_fn((d, d), |(i, j)| c(v[i * d + j].0, v[i * d + j].1));
            let mut s = &a + &a.t();
            for i in 0..d {
                s[[i, i]] += c(2.0 * d as f64, 0.0);
            }
            s
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn factorization_invariants_2x2(nu2 in symmetric(2)) {
            let data = RawMoments { nu0: c(0.0, 0.0), nu: Array1::from_elem(2, c(0.0, 0.0)), nu2 }.complete().unwrap();
            let (a, b) = factorization_residuals(&data);
            prop_assert!(a < 1e-8 && b < 1e-8);
        }

        #[test]
        fn factorization_invariants_3x3(nu2 in symmetric(3)) {
            let data = RawMoments { nu0: c(0.0, 0.0), nu: Array1::from_elem(3, c(0.0, 0.0)), nu2: nu2.clone() }.complete().unwrap();
            let (a, b) = factorization_residuals(&data);
            prop_assert!(a < 1e-8 && b < 1e-8);
            let inv = cofactor_inverse(&nu2).unwrap();
            for (x, y) in data.weight.iter().zip(inv.iter()) {
                prop_assert!((x - y).norm() < 1e-8 * (1.0 + y.norm()));
            }
        }
    }
}
