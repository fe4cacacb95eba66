//! Invariant groups runnable outside the test harness.
//!
//! Each group draws its random inputs from a fixed seed, so a report is
//! reproducible bit for bit.

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::algebra::{bayes, chain, negate, or_prob};
use crate::frequency::{distribution, interference_deficit, prob, relative_deficit};
use crate::oracle::{cofactor_inverse, periodized_free_kernel, random_unit_row, random_valid_kernel, which_path_d2};
use crate::propagator::{
    factorization_residuals, moment_round_trip, refine_and_compose, ConstantField,
    Grid, GridKernel, PacketStudy,
};
use crate::scenarios::{
    build_mach_zehnder, build_two_slit, build_which_path, parse_scenario, run, serialize, Slits,
    TwoSlitGeometry,
};
use crate::statespace::{
    compose, enumerate_paths, make_space, path_sum, tensor, validate_kernel, KernelChain,
    Proposition, StateSpace,
};
use crate::{CProb64, Complex, Error, Result};

pub const GROUPS: [&str; 5] = ["algebra", "statespace", "frequency", "propagator", "scenarios"];

const SEED: u64 = 0x00c0_ffee;

/// Deliberate defects for exercising the failure path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Faults {
    /// Perturb composed kernels by `1e-3` in one entry before their rows are checked.
    pub row_sum: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub group: &'static str,
    pub checks: Vec<Check>,
}

impl GroupReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for GroupReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "FAIL" };
            writeln!(f, "{status} {}::{} ({})", self.group, c.name, c.detail)?;
        }
        Ok(())
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn max_err(&mut self, name: &'static str, worst: f64, limit: f64) {
        self.0.push(Check {
            name,
            passed: worst <= limit,
            detail: format!("worst {worst:.3e}, limit {limit:.0e}"),
        });
    }

    fn truth(&mut self, name: &'static str, passed: bool, detail: impl Into<String>) {
        self.0.push(Check {
            name,
            passed,
            detail: detail.into(),
        });
    }

    fn result<T>(&mut self, name: &'static str, r: Result<T>, judge: impl FnOnce(T) -> (bool, String)) {
        match r {
            Ok(v) => {
                let (ok, detail) = judge(v);
                self.truth(name, ok, detail);
            }
            Err(e) => self.truth(name, false, format!("error: {e}")),
        }
    }
}

pub fn run_group(group: &str, faults: Faults) -> Result<GroupReport> {
    let (group, checks) = match group {
        "algebra" => ("algebra", algebra()),
        "statespace" => ("statespace", statespace(faults)),
        "frequency" => ("frequency", frequency()),
        "propagator" => ("propagator", propagator()),
        "scenarios" => ("scenarios", scenarios()),
        other => return Err(Error::Unsupported(format!("unknown verification group `{other}`"))),
    };
    Ok(GroupReport { group, checks })
}

pub fn run_all(faults: Faults) -> Vec<GroupReport> {
    GROUPS
        .iter()
        .map(|g| run_group(g, faults).expect("known group"))
        .collect()
}

fn random_c(rng: &mut StdRng, scale: f64) -> CProb64 {
    Complex::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

fn rel(got: CProb64, want: CProb64) -> f64 {
    (got - want).norm() / want.norm().max(1.0)
}

fn algebra() -> Vec<Check> {
    let mut rng = StdRng::seed_from_u64(SEED);
    let mut c = Checks(Vec::new());
    let cases = 10_000;

    let worst = (0..cases)
        .map(|_| {
            let p = random_c(&mut rng, 1e3);
            rel(negate(negate(p)), p)
        })
        .fold(0.0, f64::max);
    c.max_err("double_negation", worst, 1e-12);

    let one = Complex::new(1.0, 0.0);
    let worst = (0..cases)
        .map(|_| {
            let p = random_c(&mut rng, 10.0);
            rel(chain(one, p), p).max(rel(chain(p, one), p)).max(rel(or_prob(p, negate(p), Complex::new(0.0, 0.0)), one))
        })
        .fold(0.0, f64::max);
    c.max_err("certainty_and_exhaustion", worst, 1e-12);

    // a -> {x0, x1, x2, x3} with b = {x0, x1}, c = {x1, x2}
    let worst = (0..cases)
        .map(|_| {
            let v = random_unit_row::<f64, _>(4, &mut rng);
            let union = v[0] + v[1] + v[2];
            rel(or_prob(v[0] + v[1], v[1] + v[2], v[1]), union)
        })
        .fold(0.0, f64::max);
    c.max_err("inclusion_exclusion", worst, 1e-12);

    let mut worst = 0.0f64;
    let mut done = 0;
    while done < cases {
        let (ab, abc, ac) = (random_c(&mut rng, 2.0), random_c(&mut rng, 2.0), random_c(&mut rng, 2.0));
        if ab.norm() <= 1e-6 || ac.norm() <= 1e-6 {
            continue;
        }
        // (a -> b∧c) computed both ways: (a→b)(a∧b→c) = (a→c)(a∧c→b)
        let joint = chain(ab, abc);
        let acb = joint / ac;
        match bayes(ab, ac, acb) {
            Ok(v) => worst = worst.max(rel(v, abc)),
            Err(_) => worst = f64::INFINITY,
        }
        done += 1;
    }
    c.max_err("bayes_chain_consistency", worst, 1e-12);
    c.0
}

fn random_space(n: usize) -> Arc<StateSpace> {
    Arc::new(make_space((0..n).map(|i| format!("s{i}"))).expect("distinct labels"))
}

fn statespace(faults: Faults) -> Vec<Check> {
    let mut rng = StdRng::seed_from_u64(SEED ^ 1);
    let mut c = Checks(Vec::new());

    let mut worst_assoc = 0.0f64;
    let mut worst_rows = 0.0f64;
    let mut invalid = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=6);
        let space = random_space(n);
        let ks: Vec<_> = (0..3).map(|_| random_valid_kernel(space.clone(), 1.0, &mut rng)).collect();
        let left = compose(&compose(&ks[0], &ks[1]).expect("same space"), &ks[2]).expect("same space");
        let right = compose(&ks[0], &compose(&ks[1], &ks[2]).expect("same space")).expect("same space");
        let diff = (&left.entries().view() - &right.entries().view())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        worst_assoc = worst_assoc.max(diff);
        let out = if faults.row_sum {
            let z = left.entry(0, 0) + Complex::new(1e-3, 0.0);
            left.with_entry(0, 0, z)
        } else {
            left
        };
        if !validate_kernel(&out).is_valid() {
            invalid += 1;
        }
        for r in 0..n {
            worst_rows = worst_rows.max((out.row_sum(r) - Complex::new(1.0, 0.0)).norm());
        }
    }
    c.max_err("compose_associative", worst_assoc, 1e-12);
    c.truth(
        "compose_preserves_row_sums",
        invalid == 0,
        format!("{invalid} of 100 composed kernels invalid, worst deviation {worst_rows:.3e}"),
    );

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=6);
        let steps = rng.gen_range(1..=6);
        let space = random_space(n);
        let ks: Vec<_> = (0..steps).map(|_| random_valid_kernel(space.clone(), 1.0, &mut rng)).collect();
        let chain = KernelChain::new(space.clone(), ks, 0.0).expect("same space");
        let composed = chain.composed().expect("nonempty chain");
        let from = space.label(rng.gen_range(0..n)).to_string();
        for to in space.labels() {
            match enumerate_paths(&chain, &from, to) {
                Ok(paths) => {
                    let want = composed.get(&from, to).expect("known labels");
                    worst = worst.max((path_sum(&paths) - want).norm());
                }
                Err(_) => worst = f64::INFINITY,
            }
        }
    }
    c.max_err("path_sum_equals_composition", worst, 1e-10);

    let two = random_space(2);
    let three = random_space(3);
    let ka = random_valid_kernel(three.clone(), 1.0, &mut rng);
    let kb = random_valid_kernel(two.clone(), 1.0, &mut rng);
    c.result("tensor_then_marginalize", tensor(&ka, &kb), |t| {
        let rows = (0..t.dimension())
            .map(|r| (t.row_sum(r) - Complex::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max);
        match t.marginalize_right(three.clone(), &two, 1) {
            Ok(m) => {
                let diff = (&m.entries().view() - &ka.entries().view())
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                (diff <= 1e-12 && rows <= 1e-12, format!("marginal error {diff:.3e}, row deviation {rows:.3e}"))
            }
            Err(e) => (false, format!("error: {e}")),
        }
    });

    let mz = build_mach_zehnder::<f64>();
    c.result("mach_zehnder_two_paths", mz.chain().and_then(|ch| enumerate_paths(&ch, "src", "d2")), |paths| {
        let values: Vec<_> = paths.iter().map(|p| p.value).filter(|v| v.norm() > 0.0).collect();
        let ok = values == [Complex::new(0.0, -0.5), Complex::new(0.0, 0.5)];
        (ok, format!("nonzero path values {values:?}"))
    });
    c.0
}

fn frequency() -> Vec<Check> {
    let mut rng = StdRng::seed_from_u64(SEED ^ 2);
    let mut c = Checks(Vec::new());
    let mz = build_mach_zehnder::<f64>();
    c.result("mach_zehnder_detectors", run(&mz), |r| {
        let (d1, d2) = (r.frequency("d1").unwrap_or(f64::NAN), r.frequency("d2").unwrap_or(f64::NAN));
        ((d1 - 1.0).abs() <= 1e-12 && d2.abs() <= 1e-12, format!("d1 {d1:?}, d2 {d2:?}"))
    });

    let mut worst_part = 0.0f64;
    let mut worst_scale = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(2..=6);
        let space = random_space(n);
        let ks: Vec<_> = (0..3).map(|_| random_valid_kernel(space.clone(), 1.0, &mut rng)).collect();
        let chain = KernelChain::new(space.clone(), ks, 0.0).expect("same space");
        let init = space.delta("s0").expect("known label");
        let split = rng.gen_range(1..n);
        let labels = space.labels();
        let cells = [
            Proposition::new(space.clone(), &labels[..split], 3).expect("known labels"),
            Proposition::new(space.clone(), &labels[split..], 3).expect("known labels"),
        ];
        match distribution(&init, &cells, &chain) {
            Ok(d) => worst_part = worst_part.max((d.iter().sum::<f64>() - 1.0).abs()),
            Err(_) => worst_part = f64::INFINITY,
        }
        let k = random_c(&mut rng, 3.0);
        if k.norm() < 1e-3 {
            continue;
        }
        let scaled = init.mapv(|z| z * k);
        match (prob(&init, &cells[0], &chain), prob(&scaled, &cells[0], &chain)) {
            (Ok(a), Ok(b)) => worst_scale = worst_scale.max((a.value - b.value).abs()),
            _ => worst_scale = f64::INFINITY,
        }
    }
    c.max_err("partition_sums_to_one", worst_part, 1e-12);
    c.max_err("rescaling_invariance", worst_scale, 1e-12);

    c.result(
        "deficit_examples",
        mz.chain().and_then(|ch| {
            Ok((
                interference_deficit(&ch, "src", "d2")?,
                interference_deficit(&ch, "src", "d1")?,
                interference_deficit(&ch.prefix(1)?, "src", "m1")?,
            ))
        }),
        |(d2, d1, single)| {
            let ok = (d2 - 0.5).abs() <= 1e-12 && (d1 + 0.5).abs() <= 1e-12 && single.abs() <= 1e-12;
            (ok, format!("d2 {d2:?}, d1 {d1:?}, one path {single:?}"))
        },
    );
    c.0
}

fn inner_linf(a: &Array2<Complex<f64>>, b: &Array2<Complex<f64>>, grid: &Grid<f64>) -> f64 {
    (0..grid.len())
        .filter(|&r| grid.is_inner(r))
        .flat_map(|r| (0..grid.len()).map(move |col| (r, col)))
        .map(|(r, col)| (a[[r, col]] - b[[r, col]]).norm())
        .fold(0.0, f64::max)
}

/// Refinement errors for `N = 1, 2, 4, 8, 16` against the continuum
/// reference, and the `N = 16` distance to the direct kernel.
pub fn refinement_study() -> Result<(Vec<f64>, f64)> {
    let grid = Grid::with_extent(1, 256, 1.0)?;
    let tau = 4e-3;
    let w = Complex::new(0.3, 1.0);
    let field = ConstantField::scalar(Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), w);
    let reference = periodized_free_kernel(&grid, tau, w, 4);
    let mut errors = Vec::new();
    let mut last: Option<GridKernel<f64>> = None;
    for n in [1, 2, 4, 8, 16] {
        let k = refine_and_compose(&field, tau, n, &grid)?;
        errors.push(inner_linf(k.entries(), &reference, &grid));
        last = Some(k);
    }
    let direct = refine_and_compose(&field, tau, 1, &grid)?;
    let last = last.expect("five refinements");
    Ok((errors, inner_linf(last.entries(), direct.entries(), &grid)))
}

fn propagator() -> Vec<Check> {
    let mut rng = StdRng::seed_from_u64(SEED ^ 3);
    let mut c = Checks(Vec::new());
    let grid = Grid::with_extent(1, 256, 1.0).expect("valid grid");
    let fields = [
        ConstantField::scalar(Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)),
        ConstantField::scalar(Complex::new(0.5, 0.0), Complex::new(0.7, 0.0), Complex::new(1.0, 0.0)),
        ConstantField::scalar(Complex::new(0.3, 0.2), Complex::new(0.0, 0.0), Complex::new(2.0, 0.5)),
    ];
    let mut worst = 0.0f64;
    let mut failed = None;
    for f in &fields {
        match moment_round_trip(f, 1e-3, &grid) {
            Ok(rt) => {
                let (a, b, w) = rt.relative_errors();
                worst = worst.max(a).max(b).max(w);
            }
            Err(e) => failed = Some(e),
        }
    }
    match failed {
        Some(e) => c.truth("moment_round_trip", false, format!("error: {e}")),
        None => c.max_err("moment_round_trip", worst, 1e-2),
    }

    let mut worst = 0.0f64;
    for i in 0..100 {
        let d = 2 + i % 2;
        let mut m = Array2::from_elem((d, d), Complex::new(0.0, 0.0));
        for j in 0..d {
            m[[j, j]] = Complex::new(rng.gen_range(1.0..4.0), rng.gen_range(-0.3..0.3));
            for k in j + 1..d {
                let z = Complex::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.3..0.3));
                m[[j, k]] = z;
                m[[k, j]] = z;
            }
        }
        let data = crate::propagator::RawMoments {
            nu0: Complex::new(0.0, 0.0),
            nu: ndarray::Array1::from_elem(d, Complex::new(0.0, 0.0)),
            nu2: m.clone(),
        }
        .complete();
        match (data, cofactor_inverse(&m)) {
            (Ok(md), Some(inv)) => {
                let (a, b) = factorization_residuals(&md);
                let vs_inverse = (&md.weight - &inv).iter().map(|z| z.norm()).fold(0.0, f64::max);
                worst = worst.max(a).max(b).max(vs_inverse);
            }
            _ => worst = f64::INFINITY,
        }
    }
    c.max_err("weight_matrix_factorization", worst, 1e-8);

    c.result("refinement", refinement_study(), |(errors, linf)| {
        let monotone = errors.windows(2).all(|w| w[1] <= w[0] + 1e-14);
        (
            monotone && linf <= 1e-4,
            format!("errors {}, N=16 vs direct {linf:.3e}", errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(" ")),
        )
    });

    let study = PacketStudy::<f64>::desk(256, 1.0);
    c.result(
        "schrodinger_limit",
        study.run(8).and_then(|a| Ok((a, study.run(16)?))),
        |(coarse, fine)| {
            let ratio = coarse.residual / fine.residual;
            (
                fine.residual < 0.02 && ratio >= 1.5,
                format!("residual {:.3e} at N=16, ratio {ratio:.2} from N=8", fine.residual),
            )
        },
    );
    c.0
}

fn scenarios() -> Vec<Check> {
    let mut c = Checks(Vec::new());
    let mut worst = 0.0f64;
    let mut previous = -1.0;
    let mut monotone = true;
    for i in 0..=20 {
        let eta = i as f64 / 20.0;
        match build_which_path(eta).and_then(|s| run(&s)) {
            Ok(r) => {
                let d2 = r.frequency("d2").unwrap_or(f64::NAN);
                worst = worst.max((d2 - which_path_d2(eta)).abs());
                monotone &= d2 > previous || i == 0;
                previous = d2;
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    c.max_err("visibility_law", worst, 1e-10);
    c.truth("visibility_monotone", monotone, "d2 strictly increasing in eta over the scan");

    c.result("which_path_endpoint_rule", build_which_path(1.0f64).and_then(|s| run(&s)), |r| {
        let worst = r.deficits.iter().map(|d| d.deficit.abs()).fold(0.0f64, f64::max);
        (worst <= 1e-12 && !r.deficits.is_empty(), format!("worst flagged deficit {worst:.3e}"))
    });
    c.result(
        "useless_flag_restores_interference",
        build_which_path(0.0f64).and_then(|s| {
            let q = s.query("d2").cloned().ok_or(Error::EmptyProposition)?;
            relative_deficit(&s.init, &q, &s.chain()?)
        }),
        |d: f64| ((d - 0.5).abs() <= 1e-12, format!("normalized d2 deficit {d:?}")),
    );

    let g = TwoSlitGeometry::<f64>::default();
    c.result(
        "two_slit_fringes",
        build_two_slit(&g, Slits::Both)
            .and_then(|s| run(&s))
            .and_then(|both| Ok((both, run(&build_two_slit(&g, Slits::First)?)?))),
        |(both, one)| {
            let b: Vec<f64> = both.queries.iter().map(|(_, r)| r.value).collect();
            let o: Vec<f64> = one.queries.iter().map(|(_, r)| r.value).collect();
            let below = b.iter().zip(&o).filter(|(b, o)| **b < **o - 0.01).count();
            let minima = (1..b.len() - 1)
                .filter(|&j| b[j] < b[j - 1] && b[j] < b[j + 1] && b[j] < o[j])
                .count();
            (below >= 3 && minima >= 3, format!("{below} points below single slit by > 0.01, {minima} fringe minima"))
        },
    );

    let mut mz = build_mach_zehnder::<f64>();
    mz.builder = None;
    let text = serialize(&mz);
    c.result("format_round_trip", parse_scenario::<f64>(&text), |s| {
        let again = serialize(&s);
        let ok = again == text && s == mz;
        (ok, "serialize(parse(text)) is stable".to_string())
    });
    let broken = text.replace("m2: d1=0.5,-0.5", "m2: d1=0.4,-0.5");
    let rejected = matches!(parse_scenario::<f64>(&broken), Err(Error::Parse(_)));
    c.truth("format_rejects_row_sum", rejected, "row summing to 0.9 is reported");

    let s = build_which_path(0.37).expect("eta in range");
    c.result("deterministic", run(&s).and_then(|a| Ok((a, run(&s)?))), |(a, b)| {
        (a == b, "two runs compare equal".to_string())
    });
    c.0
}
