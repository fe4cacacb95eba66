//! State spaces, one-step kernels and their composition.
//!
//! A [`StateSpace`] is a finite ordered set of mutually exclusive state
//! labels. A [`Kernel`] holds `(x at t -> y at t + step)` for every pair of
//! states; its rows must sum to one. Kernels are validated explicitly with
//! [`validate_kernel`] so malformed user input can be diagnosed rather than
//! rejected at construction; [`compose`], [`evolve`] and friends assume a
//! validated kernel.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::{CProb, Error, Real, Result, Tolerances};

/// Finite set of mutually exclusive, distinctly labelled states.
#[derive(Clone)]
pub struct StateSpace {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl StateSpace {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::Empty);
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { labels, index })
    }

    /// Product space; the label of `(a, b)` is `"a.b"`, index `a * dim(b) + b`.
    pub fn product(left: &StateSpace, right: &StateSpace) -> Result<Self> {
        let labels = left
            .labels
            .iter()
            .flat_map(|a| right.labels.iter().map(move |b| format!("{a}.{b}")));
        Self::new(labels)
    }

    pub fn dimension(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// One-hot vector concentrated on `label`.
    pub fn delta<T: Real>(&self, label: &str) -> Result<Array1<CProb<T>>> {
        let i = self.index_of(label)?;
        let mut v = Array1::from_elem(self.dimension(), CProb::new(T::zero(), T::zero()));
        v[i] = CProb::new(T::one(), T::zero());
        Ok(v)
    }
}

impl PartialEq for StateSpace {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Eq for StateSpace {}

impl fmt::Debug for StateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("StateSpace").field(&self.labels).finish()
    }
}

/// Convenience constructor mirroring [`StateSpace::new`].
pub fn make_space<I, S>(labels: I) -> Result<StateSpace>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    StateSpace::new(labels)
}

/// One-step complex transition table over a state space.
///
/// Entry `(r, c)` is `(x_r at t -> x_c at t + step)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<T: Real> {
    space: Arc<StateSpace>,
    step: T,
    entries: Array2<CProb<T>>,
}

impl<T: Real> Kernel<T> {
    pub fn new(space: Arc<StateSpace>, step: T, entries: Array2<CProb<T>>) -> Result<Self> {
        let n = space.dimension();
        if entries.dim() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: entries.nrows().max(entries.ncols()),
            });
        }
        if !(step > T::zero()) || !step.is_finite() {
            return Err(Error::NonPositiveStep(step.to_f64().unwrap_or(f64::NAN)));
        }
        if entries.iter().any(|z| !crate::algebra::is_finite(*z)) {
            return Err(Error::NonFinite("kernel entries"));
        }
        Ok(Self {
            space,
            step,
            entries,
        })
    }

    pub fn identity(space: Arc<StateSpace>, step: T) -> Result<Self> {
        let n = space.dimension();
        let mut entries = Array2::from_elem((n, n), CProb::new(T::zero(), T::zero()));
        for i in 0..n {
            entries[[i, i]] = CProb::new(T::one(), T::zero());
        }
        Self::new(space, step, entries)
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn entries(&self) -> &Array2<CProb<T>> {
        &self.entries
    }

    pub fn entry(&self, from: usize, to: usize) -> CProb<T> {
        self.entries[[from, to]]
    }

    /// Entry by label.
    pub fn get(&self, from: &str, to: &str) -> Result<CProb<T>> {
        Ok(self.entry(self.space.index_of(from)?, self.space.index_of(to)?))
    }

    pub fn row_sum(&self, row: usize) -> CProb<T> {
        self.entries.row(row).iter().copied().sum()
    }

    pub fn dimension(&self) -> usize {
        self.space.dimension()
    }

    /// Marginalize the right factor of a product-space kernel.
    ///
    /// `self` must live on `left × right`; the result is the kernel on
    /// `left` seen from right-factor state `from_right`, i.e.
    /// `k'(x, y) = Σ_v k((x, from_right), (y, v))`.
    pub fn marginalize_right(
        &self,
        left: Arc<StateSpace>,
        right: &StateSpace,
        from_right: usize,
    ) -> Result<Kernel<T>> {
        let (na, nb) = (left.dimension(), right.dimension());
        if self.dimension() != na * nb {
            return Err(Error::DimensionMismatch {
                expected: na * nb,
                actual: self.dimension(),
            });
        }
        if from_right >= nb {
            return Err(Error::DimensionMismatch {
                expected: nb,
                actual: from_right + 1,
            });
        }
        let mut out = Array2::from_elem((na, na), CProb::new(T::zero(), T::zero()));
        for x in 0..na {
            let row = x * nb + from_right;
            for y in 0..na {
                out[[x, y]] = (0..nb).map(|v| self.entries[[row, y * nb + v]]).sum();
            }
        }
        Kernel::new(left, self.step, out)
    }

    /// Overwrite one entry; used by fault-injection checks and builders.
    pub fn with_entry(mut self, from: usize, to: usize, value: CProb<T>) -> Self {
        self.entries[[from, to]] = value;
        self
    }
}

/// A row whose sum departs from one by more than the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct RowViolation {
    pub row: usize,
    pub label: String,
    pub sum: (f64, f64),
    pub deviation: f64,
}

impl fmt::Display for RowViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "row `{}` sums to {},{} (deviation {:e})",
            self.label, self.sum.0, self.sum.1, self.deviation
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<RowViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::RowSumViolation(v.to_string())),
        }
    }
}

/// Report every row whose sum deviates from `1 + 0i` by more than the
/// default row-sum tolerance for `T`.
pub fn validate_kernel<T: Real>(k: &Kernel<T>) -> ValidationReport {
    validate_kernel_with(k, Tolerances::for_scalar::<T>().row_sum)
}

pub fn validate_kernel_with<T: Real>(k: &Kernel<T>, tolerance: f64) -> ValidationReport {
    let one = CProb::new(T::one(), T::zero());
    let violations = (0..k.dimension())
        .filter_map(|row| {
            let sum = k.row_sum(row);
            let deviation = (sum - one).norm().to_f64().unwrap_or(f64::INFINITY);
            (!(deviation <= tolerance)).then(|| RowViolation {
                row,
                label: k.space.label(row).to_string(),
                sum: (sum.re.to_f64().unwrap_or(f64::NAN), sum.im.to_f64().unwrap_or(f64::NAN)),
                deviation,
            })
        })
        .collect();
    ValidationReport { violations }
}

/// Marginalize over the intermediate time: `(x -> z) = Σ_y k1(x, y) k2(y, z)`.
pub fn compose<T: Real>(k1: &Kernel<T>, k2: &Kernel<T>) -> Result<Kernel<T>> {
    if k1.space != k2.space {
        return Err(Error::SpaceMismatch);
    }
    let entries = matmul(&k1.entries, &k2.entries);
    Kernel::new(k1.space.clone(), k1.step + k2.step, entries)
}

/// Independent subsystems: `k((x,u),(y,v)) = kA(x,y) kB(u,v)`.
pub fn tensor<T: Real>(ka: &Kernel<T>, kb: &Kernel<T>) -> Result<Kernel<T>> {
    let tol = T::lit(1e-12) * (T::one() + ka.step.abs());
    if (ka.step - kb.step).abs() > tol {
        return Err(Error::StepMismatch {
            left: ka.step.to_f64().unwrap_or(f64::NAN),
            right: kb.step.to_f64().unwrap_or(f64::NAN),
        });
    }
    let space = Arc::new(StateSpace::product(&ka.space, &kb.space)?);
    let (na, nb) = (ka.dimension(), kb.dimension());
    let n = na * nb;
    let mut entries = Array2::from_elem((n, n), CProb::new(T::zero(), T::zero()));
    for x in 0..na {
        for u in 0..nb {
            for y in 0..na {
                let a = ka.entries[[x, y]];
                for v in 0..nb {
                    entries[[x * nb + u, y * nb + v]] = a * kb.entries[[u, v]];
                }
            }
        }
    }
    Kernel::new(space, ka.step, entries)
}

pub(crate) fn matmul<T: Real>(a: &Array2<CProb<T>>, b: &Array2<CProb<T>>) -> Array2<CProb<T>> {
    a.dot(b)
}

/// Ordered kernels over one state space.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelChain<T: Real> {
    space: Arc<StateSpace>,
    kernels: Vec<Kernel<T>>,
    start_time: T,
}

impl<T: Real> KernelChain<T> {
    pub fn new(space: Arc<StateSpace>, kernels: Vec<Kernel<T>>, start_time: T) -> Result<Self> {
        if kernels.iter().any(|k| *k.space != *space) {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self {
            space,
            kernels,
            start_time,
        })
    }

    /// Chain built from kernels that must share a space; the chain starts at time 0.
    pub fn from_kernels(kernels: Vec<Kernel<T>>) -> Result<Self> {
        let space = kernels.first().map(|k| k.space.clone()).ok_or(Error::Empty)?;
        Self::new(space, kernels, T::zero())
    }

    pub fn empty(space: Arc<StateSpace>) -> Self {
        Self {
            space,
            kernels: Vec::new(),
            start_time: T::zero(),
        }
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn kernels(&self) -> &[Kernel<T>] {
        &self.kernels
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn start_time(&self) -> T {
        self.start_time
    }

    /// Absolute time of chain slot `index` (slot 0 is the start).
    pub fn time_at(&self, index: usize) -> Result<T> {
        if index > self.len() {
            return Err(Error::TimeOutOfRange {
                index,
                len: self.len(),
            });
        }
        Ok(self.kernels[..index]
            .iter()
            .fold(self.start_time, |t, k| t + k.step))
    }

    /// The first `index` kernels.
    pub fn prefix(&self, index: usize) -> Result<Self> {
        if index > self.len() {
            return Err(Error::TimeOutOfRange {
                index,
                len: self.len(),
            });
        }
        Ok(Self {
            space: self.space.clone(),
            kernels: self.kernels[..index].to_vec(),
            start_time: self.start_time,
        })
    }

    pub fn push(&mut self, kernel: Kernel<T>) -> Result<()> {
        if *kernel.space != *self.space {
            return Err(Error::SpaceMismatch);
        }
        self.kernels.push(kernel);
        Ok(())
    }

    /// Every kernel in the chain, validated.
    pub fn validate(&self, tolerance: f64) -> Result<()> {
        self.kernels
            .iter()
            .try_for_each(|k| validate_kernel_with(k, tolerance).into_result())
    }

    /// Composition of the whole chain; `None` for an empty chain.
    pub fn composed(&self) -> Option<Kernel<T>> {
        let (first, rest) = self.kernels.split_first()?;
        Some(rest.iter().fold(first.clone(), |acc, k| {
            compose(&acc, k).expect("chain kernels share a space")
        }))
    }
}

/// Raw linear contraction of a row vector through the chain, no
/// normalization check.
pub fn propagate<T: Real>(
    init: &Array1<CProb<T>>,
    chain: &KernelChain<T>,
) -> Result<Array1<CProb<T>>> {
    let n = chain.space.dimension();
    if init.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: init.len(),
        });
    }
    Ok(chain
        .kernels
        .iter()
        .fold(init.clone(), |v, k| v.dot(&k.entries)))
}

/// Contract `init` (a row of complex probabilities `(a -> x)`) through
/// every kernel of the chain in order.
pub fn evolve<T: Real>(
    init: &Array1<CProb<T>>,
    chain: &KernelChain<T>,
) -> Result<Array1<CProb<T>>> {
    check_init_sum(init, Tolerances::for_scalar::<T>().row_sum)?;
    propagate(init, chain)
}

pub(crate) fn check_init_sum<T: Real>(init: &Array1<CProb<T>>, tolerance: f64) -> Result<()> {
    let sum: CProb<T> = init.iter().copied().sum();
    let deviation = (sum - CProb::new(T::one(), T::zero())).norm();
    if !(deviation.to_f64().unwrap_or(f64::INFINITY) <= tolerance) {
        return Err(Error::RowSumViolation(format!(
            "initial vector sums to {},{} (deviation {:e})",
            sum.re,
            sum.im,
            deviation.to_f64().unwrap_or(f64::NAN)
        )));
    }
    Ok(())
}

/// A disjunction of states at one chain slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Proposition {
    space: Arc<StateSpace>,
    members: BTreeSet<usize>,
    time_index: usize,
}

impl Proposition {
    pub fn new<I, S>(space: Arc<StateSpace>, labels: I, time_index: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let members = labels
            .into_iter()
            .map(|l| space.index_of(l.as_ref()))
            .collect::<Result<BTreeSet<_>>>()?;
        Self::from_indices(space, members, time_index)
    }

    pub fn from_indices(
        space: Arc<StateSpace>,
        members: BTreeSet<usize>,
        time_index: usize,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyProposition);
        }
        if let Some(&bad) = members.iter().find(|&&i| i >= space.dimension()) {
            return Err(Error::DimensionMismatch {
                expected: space.dimension(),
                actual: bad + 1,
            });
        }
        Ok(Self {
            space,
            members,
            time_index,
        })
    }

    /// The whole space at `time_index`.
    pub fn everything(space: Arc<StateSpace>, time_index: usize) -> Self {
        let members = (0..space.dimension()).collect();
        Self {
            space,
            members,
            time_index,
        }
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn members(&self) -> &BTreeSet<usize> {
        &self.members
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }

    pub fn contains(&self, state: usize) -> bool {
        self.members.contains(&state)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(|&i| self.space.label(i))
    }
}

/// One path through the chain and the product of its one-step values.
#[derive(Clone, Debug, PartialEq)]
pub struct Path<T: Real> {
    pub states: Vec<usize>,
    pub value: CProb<T>,
}

/// Size limits for brute-force path enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathLimits {
    pub max_steps: usize,
    /// Cap on intermediate assignments per endpoint pair.
    pub max_paths: u64,
}

impl Default for PathLimits {
    fn default() -> Self {
        // 8 steps over 12 states: 12^7 intermediate assignments
        Self {
            max_steps: 8,
            max_paths: 12u64.pow(7),
        }
    }
}

impl PathLimits {
    fn check(&self, steps: usize, dimension: usize) -> Result<()> {
        let paths = (dimension as u64).checked_pow(steps.saturating_sub(1) as u32);
        if steps > self.max_steps || paths.map_or(true, |p| p > self.max_paths) {
            return Err(Error::TooLarge { steps, dimension });
        }
        Ok(())
    }
}

/// Every path `from -> ... -> to` through the chain with its value, the
/// product of the one-step complex probabilities along it.
///
/// All `dimension^(n-1)` intermediate assignments are listed, zeros
/// included; their values sum to the composed kernel's `(from, to)` entry.
pub fn enumerate_paths<T: Real>(
    chain: &KernelChain<T>,
    from: &str,
    to: &str,
) -> Result<Vec<Path<T>>> {
    enumerate_paths_with(chain, from, to, PathLimits::default())
}

pub fn enumerate_paths_with<T: Real>(
    chain: &KernelChain<T>,
    from: &str,
    to: &str,
    limits: PathLimits,
) -> Result<Vec<Path<T>>> {
    let from = chain.space.index_of(from)?;
    let to = chain.space.index_of(to)?;
    let start = [(from, CProb::new(T::one(), T::zero()))];
    enumerate_indexed(chain, &start, to, limits)
}

/// Paths from every nonzero component of `init` to `to`; each path value
/// carries the initial weight of its first state.
pub fn enumerate_paths_from_vector<T: Real>(
    chain: &KernelChain<T>,
    init: &Array1<CProb<T>>,
    to: usize,
    limits: PathLimits,
) -> Result<Vec<Path<T>>> {
    let n = chain.space.dimension();
    if init.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: init.len(),
        });
    }
    let zero = CProb::new(T::zero(), T::zero());
    let start: Vec<_> = init
        .iter()
        .enumerate()
        .filter(|(_, w)| **w != zero)
        .map(|(i, w)| (i, *w))
        .collect();
    enumerate_indexed(chain, &start, to, limits)
}

fn enumerate_indexed<T: Real>(
    chain: &KernelChain<T>,
    start: &[(usize, CProb<T>)],
    to: usize,
    limits: PathLimits,
) -> Result<Vec<Path<T>>> {
    let n = chain.space.dimension();
    let steps = chain.len();
    limits.check(steps, n)?;
    if to >= n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: to + 1,
        });
    }
    let mut out = Vec::new();
    for &(from, weight) in start {
        if steps == 0 {
            if from == to {
                out.push(Path {
                    states: vec![from],
                    value: weight,
                });
            }
            continue;
        }
        // odometer over the n-1 intermediate states
        let mut mids = vec![0usize; steps - 1];
        loop {
            let mut states = Vec::with_capacity(steps + 1);
            states.push(from);
            states.extend_from_slice(&mids);
            states.push(to);
            let value = states
                .windows(2)
                .zip(&chain.kernels)
                .fold(weight, |acc, (pair, k)| acc * k.entries[[pair[0], pair[1]]]);
            out.push(Path { states, value });

            let mut slot = 0;
            loop {
                if slot == mids.len() {
                    break;
                }
                mids[slot] += 1;
                if mids[slot] < n {
                    break;
                }
                mids[slot] = 0;
                slot += 1;
            }
            if slot == mids.len() {
                break;
            }
        }
    }
    Ok(out)
}

/// Sum of path values.
pub fn path_sum<T: Real>(paths: &[Path<T>]) -> CProb<T> {
    paths.iter().map(|p| p.value).sum()
}
