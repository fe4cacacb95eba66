//! Diagonalization of complex symmetric matrices by complex-orthogonal
//! Jacobi rotations.
//!
//! For `A = Aᵀ` (transpose, not conjugate transpose) the routine returns
//! `Q` with `QᵀQ = I` and `QᵀAQ = diag(λ)`. This is the factorization the
//! weight matrix needs; a unitary eigendecomposition would not do, because
//! the moment tables of oscillatory kernels are complex symmetric rather
//! than Hermitian.

use ndarray::Array2;

use crate::{Complex, Real};

const MAX_SWEEPS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen<T: Real> {
    pub vectors: Array2<Complex<T>>,
    pub values: Vec<Complex<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EigenFailure {
    NotSquare,
    NotSymmetric(f64),
    /// A rotation would need `1 + t² = 0`: the pair spans an isotropic
    /// direction and no complex-orthogonal rotation separates it.
    Isotropic,
    NoConvergence,
}

fn frobenius<T: Real>(a: &Array2<Complex<T>>) -> T {
    a.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Largest `|a_ij - a_ji|` relative to the Frobenius norm.
pub fn asymmetry<T: Real>(a: &Array2<Complex<T>>) -> T {
    let n = a.nrows();
    let scale = frobenius(a).max(T::min_positive_value());
    let mut worst = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((a[[i, j]] - a[[j, i]]).norm());
        }
    }
    worst / scale
}

pub fn eigen_symmetric<T: Real>(
    a: &Array2<Complex<T>>,
    symmetry_tol: f64,
) -> Result<SymmetricEigen<T>, EigenFailure> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(EigenFailure::NotSquare);
    }
    let asym = asymmetry(a);
    if asym > T::lit(symmetry_tol) {
        return Err(EigenFailure::NotSymmetric(asym.to_f64().unwrap_or(f64::NAN)));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    // work on the exactly symmetric part
    let mut a = Array2::from_shape_fn((n, n), |(i, j)| {
        (a[[i, j]] + a[[j, i]]) * T::lit(0.5)
    });
    let mut q = Array2::from_shape_fn((n, n), |(i, j)| if i == j { one } else { zero });

    let scale = frobenius(&a);
    let eps = T::machine_eps();
    let target = eps * scale;
    let mut converged = n < 2 || scale == T::zero();
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                let apr = a[[p, r]];
                if apr.norm() <= target * T::lit(1e-3) {
                    a[[p, r]] = zero;
                    a[[r, p]] = zero;
                    continue;
                }
                let theta = (a[[r, r]] - a[[p, p]]) / (apr * T::lit(2.0));
                let root = (theta * theta + one).sqrt();
                let (plus, minus) = (theta + root, theta - root);
                let t = if plus.norm() >= minus.norm() {
                    plus.inv()
                } else {
                    minus.inv()
                };
                let norm2 = one + t * t;
                if norm2.norm() < T::lit(1e-12) {
                    return Err(EigenFailure::Isotropic);
                }
                let c = norm2.sqrt().inv();
                let s = t * c;
                rotate(&mut a, &mut q, p, r, c, s);
            }
        }
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]].norm_sqr())
            .sum::<T>()
            .sqrt();
        converged = off <= target;
    }
    if !converged {
        return Err(EigenFailure::NoConvergence);
    }
    Ok(SymmetricEigen {
        values: (0..n).map(|i| a[[i, i]]).collect(),
        vectors: q,
    })
}

/// `A <- PᵀAP`, `Q <- QP` with `P` the identity except
/// `P[p,p] = P[r,r] = c`, `P[p,r] = s`, `P[r,p] = -s`.
fn rotate<T: Real>(
    a: &mut Array2<Complex<T>>,
    q: &mut Array2<Complex<T>>,
    p: usize,
    r: usize,
    c: Complex<T>,
    s: Complex<T>,
) {
    let n = a.nrows();
    // columns: A <- A P
    for k in 0..n {
        let (akp, akr) = (a[[k, p]], a[[k, r]]);
        a[[k, p]] = c * akp - s * akr;
        a[[k, r]] = s * akp + c * akr;
    }
    // rows: A <- Pᵀ A
    for k in 0..n {
        let (apk, ark) = (a[[p, k]], a[[r, k]]);
        a[[p, k]] = c * apk - s * ark;
        a[[r, k]] = s * apk + c * ark;
    }
    for k in 0..n {
        let (qkp, qkr) = (q[[k, p]], q[[k, r]]);
        q[[k, p]] = c * qkp - s * qkr;
        q[[k, r]] = s * qkp + c * qkr;
    }
}
