//! Observable frequencies from complex probabilities.
//!
//! On a finite state space the predicted frequency of `b` at slot `t`,
//! given the initial row `v0 = (a -> x)`, is
//!
//! ```text
//!   Σ_{x ∈ b} |v_x|²  /  Σ_{x ∈ U} |v_x|²,   v = v0 · K_1 · … · K_t
//! ```
//!
//! The denominator always runs over the whole space; nothing is
//! post-selected. Scenario authors make detectors absorbing so that all
//! weight ends up in them.

use std::collections::BTreeSet;

use ndarray::Array1;

use crate::statespace::{
    enumerate_paths_from_vector, enumerate_paths_with, propagate, KernelChain, Path, PathLimits,
    Proposition,
};
use crate::{CProb, Error, Real, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyResult<T: Real> {
    pub value: T,
    pub numerator: T,
    pub denominator: T,
}

/// Predicted frequency of `target` given the initial complex probabilities.
///
/// `init` need not be normalized: the ratio is invariant under any nonzero
/// complex rescaling.
pub fn prob<T: Real>(
    init: &Array1<CProb<T>>,
    target: &Proposition,
    chain: &KernelChain<T>,
) -> Result<FrequencyResult<T>> {
    prob_with(init, target, chain, Tolerances::for_scalar::<T>().denominator)
}

pub fn prob_with<T: Real>(
    init: &Array1<CProb<T>>,
    target: &Proposition,
    chain: &KernelChain<T>,
    denominator_tol: f64,
) -> Result<FrequencyResult<T>> {
    if **target.space() != **chain.space() {
        return Err(Error::SpaceMismatch);
    }
    let v = propagate(init, &chain.prefix(target.time_index())?)?;
    frequency_of(&v, target.members(), denominator_tol)
}

/// Squared-magnitude ratio for an already-evolved vector.
pub fn frequency_of<T: Real>(
    v: &Array1<CProb<T>>,
    members: &BTreeSet<usize>,
    denominator_tol: f64,
) -> Result<FrequencyResult<T>> {
    let denominator: T = v.iter().map(|z| z.norm_sqr()).sum();
    if !(denominator.to_f64().unwrap_or(0.0) > denominator_tol) {
        return Err(Error::DegenerateDenominator(
            denominator.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let numerator: T = members.iter().map(|&i| v[i].norm_sqr()).sum();
    // summing a subset of the same terms cannot exceed the total except by rounding
    let numerator = numerator.min(denominator);
    Ok(FrequencyResult {
        value: numerator / denominator,
        numerator,
        denominator,
    })
}

/// Frequencies of every cell of a partition of the state space.
pub fn distribution<T: Real>(
    init: &Array1<CProb<T>>,
    partition: &[Proposition],
    chain: &KernelChain<T>,
) -> Result<Vec<T>> {
    let first = partition
        .first()
        .ok_or_else(|| Error::BadPartition("no cells".into()))?;
    let time_index = first.time_index();
    let n = chain.space().dimension();
    let mut seen = vec![false; n];
    for (i, cell) in partition.iter().enumerate() {
        if **cell.space() != **chain.space() {
            return Err(Error::SpaceMismatch);
        }
        if cell.time_index() != time_index {
            return Err(Error::BadPartition(format!(
                "cell {i} refers to slot {} but cell 0 to slot {time_index}",
                cell.time_index()
            )));
        }
        for &s in cell.members() {
            if seen[s] {
                return Err(Error::BadPartition(format!(
                    "state `{}` appears in more than one cell",
                    chain.space().label(s)
                )));
            }
            seen[s] = true;
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::BadPartition(format!(
            "state `{}` is not covered",
            chain.space().label(missing)
        )));
    }
    let v = propagate(init, &chain.prefix(time_index)?)?;
    let tol = Tolerances::for_scalar::<T>().denominator;
    partition
        .iter()
        .map(|cell| frequency_of(&v, cell.members(), tol).map(|r| r.value))
        .collect()
}

/// Incoherent minus coherent path weight: `Σ |p|² - |Σ p|²`.
///
/// Zero when a single path (or none) carries weight; positive for
/// cancellation, negative for reinforcement.
pub fn deficit_of<T: Real>(paths: &[Path<T>]) -> T {
    let incoherent: T = paths.iter().map(|p| p.value.norm_sqr()).sum();
    let coherent: CProb<T> = paths.iter().map(|p| p.value).sum();
    incoherent - coherent.norm_sqr()
}

/// Interference deficit of all paths from `from` to `to`.
pub fn interference_deficit<T: Real>(chain: &KernelChain<T>, from: &str, to: &str) -> Result<T> {
    let paths = enumerate_paths_with(chain, from, to, PathLimits::default())?;
    Ok(deficit_of(&paths))
}

/// Interference deficit at endpoint `to`, with paths starting from the
/// initial vector.
pub fn interference_deficit_from<T: Real>(
    chain: &KernelChain<T>,
    init: &Array1<CProb<T>>,
    to: usize,
    limits: PathLimits,
) -> Result<T> {
    let paths = enumerate_paths_from_vector(chain, init, to, limits)?;
    Ok(deficit_of(&paths))
}

/// Deficit summed over the endpoints of `target`, divided by the total
/// squared magnitude at the target's slot: the frequency-scale share of
/// weight removed (or added) by interference.
pub fn relative_deficit<T: Real>(
    init: &Array1<CProb<T>>,
    target: &Proposition,
    chain: &KernelChain<T>,
) -> Result<T> {
    let chain = chain.prefix(target.time_index())?;
    let total = prob(init, &Proposition::everything(chain.space().clone(), chain.len()), &chain)?
        .denominator;
    let mut sum = T::zero();
    for &to in target.members() {
        sum += interference_deficit_from(&chain, init, to, PathLimits::default())?;
    }
    Ok(sum / total)
}
