//! Scalar calculus of complex probabilities.
//!
//! Propositions are positional here: every function takes already-assigned
//! values `(a -> b)` and returns the value the product and sum rules force.

use crate::{CProb, Error, Real, Result, Tolerances};

/// Product rule: `(a -> b ∧ c) = (a -> b)(a ∧ b -> c)`.
#[inline]
pub fn chain<T: Real>(ab: CProb<T>, abc: CProb<T>) -> CProb<T> {
    ab * abc
}

/// Sum rule: `(a -> ¬b) = 1 - (a -> b)`.
#[inline]
pub fn negate<T: Real>(ab: CProb<T>) -> CProb<T> {
    CProb::new(T::one(), T::zero()) - ab
}

/// `(a -> b ∨ c) = (a -> b) + (a -> c) - (a -> b ∧ c)`.
#[inline]
pub fn or_prob<T: Real>(ab: CProb<T>, ac: CProb<T>, abc: CProb<T>) -> CProb<T> {
    ab + ac - abc
}

/// Bayes: `(a ∧ b -> c) = (a -> c)(a ∧ c -> b) / (a -> b)`.
///
/// Uses the default divisor tolerance for `T`.
pub fn bayes<T: Real>(a_to_b: CProb<T>, a_to_c: CProb<T>, ac_to_b: CProb<T>) -> Result<CProb<T>> {
    bayes_with(a_to_b, a_to_c, ac_to_b, Tolerances::for_scalar::<T>().divisor)
}

pub fn bayes_with<T: Real>(
    a_to_b: CProb<T>,
    a_to_c: CProb<T>,
    ac_to_b: CProb<T>,
    tolerance: f64,
) -> Result<CProb<T>> {
    let magnitude = a_to_b.norm();
    if !(magnitude > T::lit(tolerance)) {
        return Err(Error::DivisorZero {
            magnitude: magnitude.to_f64().unwrap_or(f64::NAN),
            tolerance,
        });
    }
    Ok(a_to_c * ac_to_b / a_to_b)
}

/// Both components finite.
#[inline]
pub fn is_finite<T: Real>(p: CProb<T>) -> bool {
    p.re.is_finite() && p.im.is_finite()
}

/// Certainty, `(a -> true)`.
#[inline]
pub fn certain<T: Real>() -> CProb<T> {
    CProb::new(T::one(), T::zero())
}

/// Impossibility, `(a -> false)`.
#[inline]
pub fn impossible<T: Real>() -> CProb<T> {
    CProb::new(T::zero(), T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CProb64;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> CProb64 {
        CProb64::new(re, im)
    }

    #[test]
    fn chain_examples() {
        assert_eq!(chain(c(0.5, 0.0), c(0.5, 0.0)), c(0.25, 0.0));
        let p = c(0.3, -1.7);
        assert_eq!(chain(c(1.0, 0.0), p), p);
        assert_eq!(chain(c(0.5, -0.5), c(0.5, 0.5)), c(0.5, 0.0));
    }

    #[test]
    fn negate_examples() {
        assert_eq!(negate(c(1.0, 0.0)), c(0.0, 0.0));
        assert_eq!(negate(c(0.0, 0.0)), c(1.0, 0.0));
        assert_eq!(negate(c(0.5, 0.5)), c(0.5, -0.5));
    }

    #[test]
    fn or_examples() {
        let r = or_prob(c(0.3, 0.0), c(0.4, 0.0), c(0.12, 0.0));
        assert!((r - c(0.58, 0.0)).norm() < 1e-15);
        let p = c(2.0, -3.0);
        assert_eq!(or_prob(p, c(0.0, 0.0), c(0.0, 0.0)), p);
        assert_eq!(or_prob(c(0.5, -0.5), c(0.5, 0.5), c(0.0, 0.0)), c(1.0, 0.0));
    }

    #[test]
    fn bayes_examples() {
        assert_eq!(bayes(c(0.5, 0.0), c(0.5, 0.0), c(1.0, 0.0)).unwrap(), c(1.0, 0.0));
        let p = c(0.2, 0.9);
        assert!((bayes(p, p, p).unwrap() - p).norm() < 1e-15);
        let r = bayes(c(0.5, -0.5), c(0.5, 0.5), c(0.5, -0.5)).unwrap();
        assert!((r - c(0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn bayes_rejects_zero_divisor() {
        let err = bayes(c(0.0, 0.0), c(0.5, 0.0), c(1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::DivisorZero { .. }));
        assert!(bayes(c(1e-13, 0.0), c(1.0, 0.0), c(1.0, 0.0)).is_err());
        assert!(bayes(c(1e-11, 0.0), c(1.0, 0.0), c(1.0, 0.0)).is_ok());
    }

    #[test]
    fn works_in_single_precision() {
        let a = CProb::<f32>::new(0.5, -0.5);
        let b = CProb::<f32>::new(0.5, 0.5);
        assert_eq!(or_prob(a, b, impossible()), certain());
        assert!(bayes(a, b, a).is_ok());
    }

    fn cprob() -> impl Strategy<Value = CProb64> {
        (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(re, im)| CProb64::new(re, im))
    }

    proptest! {
        #[test]
        fn double_negation(p in cprob()) {
            let back = negate(negate(p));
            prop_assert!((back - p).norm() <= 4.0 * f64::EPSILON * p.norm().max(1.0));
        }

        #[test]
        fn certainty_is_identity(p in cprob()) {
            prop_assert_eq!(chain(certain(), p), p);
            prop_assert_eq!(chain(p, certain()), p);
        }

        #[test]
        fn exhaustive_pair_sums_to_one(p in cprob()) {
            let total = or_prob(p, negate(p), impossible());
            prop_assert!((total - certain::<f64>()).norm() <= 8.0 * f64::EPSILON * p.norm().max(1.0));
        }

        #[test]
        fn bayes_inverts_chain(ab in cprob(), ac in cprob(), ab_c in cprob()) {
            prop_assume!(ab.norm() > 1e-6 && ac.norm() > 1e-6);
            // joint (a -> b ∧ c) from the b side, then recover the c-side conditional
            let joint = chain(ab, ab_c);
            let ac_b = joint / ac;
            let back = bayes(ab, ac, ac_b).unwrap();
            prop_assert!((back - ab_c).norm() <= 1e-12 * ab_c.norm().max(1e-300) + 1e-300);
        }
    }
}
