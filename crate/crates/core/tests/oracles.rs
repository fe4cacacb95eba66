use std::sync::Arc;

use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use cprob::frequency::prob;
use cprob::oracle::random_valid_kernel;
use cprob::statespace::{
    compose, enumerate_paths, make_space, path_sum, propagate, tensor, KernelChain, Proposition, StateSpace,
};
use cprob::{CProb64, Complex, Kernel64};

fn space(n: usize, prefix: &str) -> Arc<StateSpace> {
    Arc::new(make_space((0..n).map(|i| format!("{prefix}{i}"))).unwrap())
}

fn kernels(n: usize, steps: usize, seed: u64) -> (Arc<StateSpace>, Vec<Kernel64>) {
    let s = space(n, "s");
    let mut rng = StdRng::seed_from_u64(seed);
    let ks = (0..steps).map(|_| random_valid_kernel(s.clone(), 1.0, &mut rng)).collect();
    (s, ks)
}

/// Naive triple loop, kept apart from the engine's matrix products.
fn matmul(a: &Array2<CProb64>, b: &Array2<CProb64>) -> Array2<CProb64> {
    let n = a.nrows();
    let mut out = Array2::from_elem((n, b.ncols()), Complex::new(0.0, 0.0));
    for i in 0..n {
        for j in 0..b.ncols() {
            for k in 0..a.ncols() {
                out[[i, j]] += a[[i, k]] * b[[k, j]];
            }
        }
    }
    out
}

fn max_gap(a: &Array2<CProb64>, b: &Array2<CProb64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn path_sums_match_matrix_products(n in 1usize..=5, steps in 1usize..=5, seed in any::<u64>()) {
        let (s, ks) = kernels(n, steps, seed);
        let product = ks.iter().skip(1).fold(ks[0].entries().clone(), |acc, k| matmul(&acc, k.entries()));
        let chain = KernelChain::new(s.clone(), ks, 0.0).unwrap();
        for (i, from) in s.labels().iter().enumerate() {
            for (j, to) in s.labels().iter().enumerate() {
                let sum = path_sum(&enumerate_paths(&chain, from, to).unwrap());
                prop_assert!((sum - product[[i, j]]).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn composition_is_associative(n in 1usize..=6, seed in any::<u64>()) {
        let (_, ks) = kernels(n, 3, seed);
        let left = compose(&compose(&ks[0], &ks[1]).unwrap(), &ks[2]).unwrap();
        let right = compose(&ks[0], &compose(&ks[1], &ks[2]).unwrap()).unwrap();
        prop_assert!(max_gap(left.entries(), right.entries()) <= 1e-10);
        prop_assert_eq!(left.step(), 3.0);
    }

    #[test]
    fn composed_rows_sum_to_one(n in 1usize..=6, steps in 1usize..=6, seed in any::<u64>()) {
        let (s, ks) = kernels(n, steps, seed);
        let k = KernelChain::new(s, ks, 0.0).unwrap().composed().unwrap();
        for r in 0..n {
            prop_assert!((k.row_sum(r) - Complex::new(1.0, 0.0)).norm() <= 1e-9);
        }
    }

    #[test]
    fn tensor_matches_entrywise_product(na in 1usize..=4, nb in 1usize..=4, seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (sa, sb) = (space(na, "a"), space(nb, "b"));
        let ka = random_valid_kernel(sa.clone(), 1.0, &mut rng);
        let kb = random_valid_kernel(sb.clone(), 1.0, &mut rng);
        let k = tensor(&ka, &kb).unwrap();
        for x in 0..na { for u in 0..nb { for y in 0..na { for v in 0..nb {
            let want = ka.entry(x, y) * kb.entry(u, v);
            prop_assert!((k.entry(x * nb + u, y * nb + v) - want).norm() <= 1e-12);
        }}}}
        for u in 0..nb {
            let back = k.marginalize_right(sa.clone(), &sb, u).unwrap();
            prop_assert!(max_gap(back.entries(), ka.entries()) <= 1e-12);
        }
    }

    #[test]
    fn frequency_ignores_initial_scale(n in 2usize..=6, steps in 1usize..=4, seed in any::<u64>(),
                                       re in -3.0f64..3.0, im in -3.0f64..3.0) {
        prop_assume!(re.hypot(im) > 1e-2);
        let (s, ks) = kernels(n, steps, seed);
        let chain = KernelChain::new(s.clone(), ks, 0.0).unwrap();
        let init = s.delta::<f64>("s0").unwrap();
        let scaled = init.mapv(|z| z * Complex::new(re, im));
        let target = Proposition::new(s.clone(), ["s1"], steps).unwrap();
        let (a, b) = match (prob(&init, &target, &chain), prob(&scaled, &target, &chain)) {
            (Ok(a), Ok(b)) => (a.value, b.value),
            _ => return Ok(()),
        };
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        // frequency from the evolved vector, computed by hand
        let v: Array1<CProb64> = propagate(&init, &chain).unwrap();
        let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((a - v[1].norm_sqr() / total).abs() <= 1e-10);
    }
}
