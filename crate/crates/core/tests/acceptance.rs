//! The acceptance gate: ten criteria, one printed pass/fail line each.
//! Every criterion pits a formula against an independent oracle or an
//! exhaustive enumeration, in exact rational arithmetic.

use std::time::Instant;

use ipk_core::symfun::{Shape, WeightVector};
use ipk_core::systems::{CaseId, JumpLaw};
use ipk_core::verify::{
    all_pass, bijection_suite, intertwining_core_case, intertwining_stochastic_case,
    inverse_identities, lambda_threeway, mc_consistency, rowsums_case, rsk_coupling_suite,
    symfun_suite, theorem_vs_oracle_case, CheckItem,
};
use ipk_core::Rational;

fn tol_certified() -> Rational {
    Rational::new(1.into(), num::BigInt::from(10u64.pow(12)))
}

fn p_grid(n: usize) -> Vec<WeightVector> {
    let half = vec![Rational::new(1.into(), 2.into()); 3];
    let mixed = vec![
        Rational::new(1.into(), 3.into()),
        Rational::new(2.into(), 5.into()),
        Rational::new(1.into(), 2.into()),
    ];
    vec![
        WeightVector::new(half[..n].to_vec()).unwrap(),
        WeightVector::new(mixed[..n].to_vec()).unwrap(),
    ]
}

fn report(criterion: usize, what: &str, items: &[CheckItem], started: Instant, budget_s: Option<u64>) {
    let ok = all_pass(items);
    let elapsed = started.elapsed();
    let budget = budget_s
        .map(|b| format!(", budget {b}s"))
        .unwrap_or_default();
    println!(
        "criterion {criterion}: {} — {what} ({} checks, {:.1?}{budget})",
        if ok { "PASS" } else { "FAIL" },
        items.len(),
        elapsed
    );
    if !ok {
        for item in items.iter().filter(|c| !c.pass) {
            println!("    failed: {} (lhs {}, rhs {})", item.name, item.lhs, item.rhs);
        }
    }
    assert!(ok, "criterion {criterion} failed");
    if let Some(b) = budget_s {
        // generous hard cap: a regression guard, not a benchmark
        assert!(
            elapsed.as_secs() < 3 * b,
            "criterion {criterion} took {elapsed:?}, far over the {b}s budget"
        );
    }
}

fn oracle_grid(cases: [CaseId; 2], budget: Option<u64>, criterion: usize, what: &str) {
    let started = Instant::now();
    let tol = tol_certified();
    let mut items = Vec::new();
    for case in cases {
        for n_particles in 1..=3usize {
            for steps in 1..=3usize {
                for p in p_grid(n_particles) {
                    items.extend(
                        theorem_vs_oracle_case(case, n_particles, steps, &p, &tol, 1e-10)
                            .unwrap(),
                    );
                }
            }
        }
    }
    report(criterion, what, &items, started, budget);
}

#[test]
fn criterion_01_theorem_vs_oracle_bernoulli() {
    oracle_grid(
        [CaseId::B, CaseId::D],
        Some(10),
        1,
        "determinant kernel = sweep oracle, Bernoulli cases, exact",
    );
}

#[test]
fn criterion_02_theorem_vs_oracle_geometric() {
    oracle_grid(
        [CaseId::A, CaseId::C],
        Some(60),
        2,
        "determinant kernel = sweep oracle, geometric cases, certified window",
    );
}

#[test]
fn criterion_03_row_sums() {
    let started = Instant::now();
    let tol = tol_certified();
    let mut items = Vec::new();
    for case in CaseId::all() {
        for n_particles in 1..=3usize {
            for steps in 1..=3usize {
                for p in p_grid(n_particles) {
                    items.extend(rowsums_case(case, n_particles, steps, &p, &tol).unwrap());
                }
            }
        }
    }
    report(
        3,
        "row sums: exactly 1 (Bernoulli), certified >= 1 - 1e-12 (geometric)",
        &items,
        started,
        None,
    );
}

#[test]
fn criterion_04_inverse_kernels() {
    let started = Instant::now();
    let mut items = Vec::new();
    for n_particles in 2..=3usize {
        items.extend(inverse_identities(n_particles, 0, 5, 5, 0xbeef).unwrap());
    }
    report(
        4,
        "Pi Lambda = Lambda Pi = Id, plain and hatted, boxes of side 6",
        &items,
        started,
        Some(30),
    );
}

#[test]
fn criterion_05_lambda_three_way() {
    let started = Instant::now();
    let mut items = Vec::new();
    for n_particles in 1..=3usize {
        items.extend(lambda_threeway(n_particles, 10, 0x1234).unwrap());
    }
    report(
        5,
        "Lambda: enumeration = determinant = path-sum, exact",
        &items,
        started,
        None,
    );
}

#[test]
fn criterion_06_intertwining() {
    let started = Instant::now();
    let tol = tol_certified();
    let mut items = Vec::new();
    for case in CaseId::all() {
        for n_particles in 1..=3usize {
            for steps in 1..=2usize {
                for p in p_grid(n_particles) {
                    let mut shapes = vec![Shape::zero(n_particles)];
                    if n_particles > 1 {
                        let stair: Vec<i64> =
                            (0..n_particles).map(|i| (n_particles - 1 - i) as i64).collect();
                        shapes.push(Shape::new(stair).unwrap());
                    }
                    for z in &shapes {
                        items.extend(
                            intertwining_stochastic_case(case, z, steps, &p, &tol).unwrap(),
                        );
                        if case.jump_law() == JumpLaw::Bernoulli {
                            items.extend(intertwining_core_case(case, z, steps, &p).unwrap());
                        }
                    }
                }
            }
        }
    }
    report(
        6,
        "P_n K = K Q_n (exact Bernoulli / certified geometric) and core form",
        &items,
        started,
        None,
    );
}

#[test]
fn criterion_07_rsk_coupling() {
    let started = Instant::now();
    let mut items = Vec::new();
    for n_particles in 1..=3usize {
        for steps in 1..=3usize {
            items.extend(rsk_coupling_suite(n_particles, steps).unwrap());
        }
    }
    report(
        7,
        "tableau edge reproduces the particle recursion on exhaustive grids",
        &items,
        started,
        None,
    );
}

#[test]
fn criterion_08_bijectivity_and_joint_law() {
    let started = Instant::now();
    let mut items = Vec::new();
    for p in p_grid(2) {
        items.extend(bijection_suite(2, 2, &p).unwrap());
    }
    report(
        8,
        "correspondences injective; fiber probabilities reproduce the joint law",
        &items,
        started,
        None,
    );
}

#[test]
fn criterion_09_symmetric_function_identities() {
    let started = Instant::now();
    let mut items = Vec::new();
    for seed in [3u64, 17] {
        items.extend(symfun_suite(seed).unwrap());
    }
    report(
        9,
        "h/e inversion, Cauchy-Binet, skew counts, Schur = pattern sum",
        &items,
        started,
        None,
    );
}

#[test]
fn criterion_10_monte_carlo_sanity() {
    let started = Instant::now();
    let p = WeightVector::new(vec![Rational::new(1.into(), 2.into()); 2]).unwrap();
    let items = mc_consistency(2, 2, &p, 100_000, 20260826).unwrap();
    report(
        10,
        "MC frequencies within 4 conservative SE; bit-identical reruns",
        &items,
        started,
        None,
    );
}
