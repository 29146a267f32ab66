//! Cross-checking suites.  Each suite pits an object against an
//! independently computed counterpart (determinant vs. sweep oracle,
//! kernel identity vs. direct enumeration, ...) and reports one
//! `CheckItem` per aggregate comparison, with both sides rendered
//! exactly.  The CLI `verify` command and the acceptance harness both
//! run these.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Signed, Zero};

use crate::exactnum::{format_rational, rat_pow, rat_to_f64};
use crate::intertwine::{
    cauchy_binet_check, decreasing_vectors, enumerate_gt, lambda_kernel,
    markov_intertwiner_via_lambda, pattern_weight, pi_kernel,
    IntertwinerKind, LambdaMethod,
};
use crate::rsk::{correspond, edge_vector, joint_law, Variant};
use crate::symfun::{
    schur, skew_count, skew_count_by_enumeration, windowed, RowMode, Shape,
    SymKind, WeightVector,
};
use crate::systems::{
    derive_rng, mc_estimate, n_step_kernel_certified,
    shape_kernel, theorem_det, theorem_kernel, CaseId, Chamber, InnovationGrid, JumpLaw,
    OrderedState, ShapeFamily,
};
use crate::{Error, Rational, Result};
use rand_chacha::rand_core::RngCore;

/// One named comparison; `lhs` and `rhs` are exact decimal-free renderings
/// of both sides (or counts for aggregated checks).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckItem {
    pub name: String,
    pub lhs: String,
    pub rhs: String,
    pub pass: bool,
}

impl CheckItem {
    pub fn eq_rat(name: impl Into<String>, lhs: &Rational, rhs: &Rational) -> CheckItem {
        CheckItem {
            name: name.into(),
            lhs: format_rational(lhs),
            rhs: format_rational(rhs),
            pass: lhs == rhs,
        }
    }

    pub fn counts(name: impl Into<String>, good: usize, total: usize) -> CheckItem {
        CheckItem {
            name: name.into(),
            lhs: good.to_string(),
            rhs: total.to_string(),
            pass: good == total && total > 0,
        }
    }

    /// lhs must not exceed rhs.
    pub fn le_rat(name: impl Into<String>, lhs: &Rational, rhs: &Rational) -> CheckItem {
        CheckItem {
            name: name.into(),
            lhs: format_rational(lhs),
            rhs: format_rational(rhs),
            pass: lhs <= rhs,
        }
    }
}

pub fn all_pass(items: &[CheckItem]) -> bool {
    !items.is_empty() && items.iter().all(|c| c.pass)
}

fn label(case: CaseId, n_particles: usize, steps: usize, p: &WeightVector) -> String {
    let ps: Vec<String> = p.entries().iter().map(format_rational).collect();
    format!("case {case:?} N={n_particles} n={steps} p={}", ps.join(","))
}

/// Weakly increasing vectors with per-coordinate ranges, by reversal of
/// the decreasing enumerator.
fn increasing_vectors(ranges: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let rev: Vec<(i64, i64)> = ranges.iter().rev().cloned().collect();
    decreasing_vectors(&rev)
        .into_iter()
        .map(|mut v| {
            v.reverse();
            v
        })
        .collect()
}

fn chamber_box(chamber: Chamber, lo: i64, hi: i64, len: usize) -> Vec<Vec<i64>> {
    let ranges = vec![(lo, hi); len];
    match chamber {
        Chamber::Decreasing => decreasing_vectors(&ranges),
        Chamber::Increasing => increasing_vectors(&ranges),
    }
}

fn half_weights(n: usize) -> WeightVector {
    WeightVector::new(vec![Rational::new(1.into(), 2.into()); n]).unwrap()
}

// ---------------------------------------------------------------------
// theorem vs oracle
// ---------------------------------------------------------------------

/// Certified origin-started oracles are the most expensive objects the
/// suites build; several suites want the same ones, so share them.
fn certified_origin_oracle(
    case: CaseId,
    n_particles: usize,
    steps: usize,
    p: &WeightVector,
    tol: &Rational,
) -> Result<crate::systems::SparseKernel> {
    use std::sync::Mutex;
    static CACHE: Mutex<
        Option<HashMap<(CaseId, usize, usize, String, String), crate::systems::SparseKernel>>,
    > = Mutex::new(None);
    let pkey: String = p
        .entries()
        .iter()
        .map(format_rational)
        .collect::<Vec<_>>()
        .join(",");
    let key = (case, n_particles, steps, pkey, format_rational(tol));
    {
        let guard = CACHE.lock().unwrap();
        if let Some(map) = guard.as_ref() {
            if let Some(hit) = map.get(&key) {
                return Ok(hit.clone());
            }
        }
    }
    let y = OrderedState::zero(n_particles, case.chamber());
    let kernel = n_step_kernel_certified(case, &y, steps, p, tol)?;
    let mut guard = CACHE.lock().unwrap();
    guard
        .get_or_insert_with(HashMap::new)
        .insert(key, kernel.clone());
    Ok(kernel)
}

/// Compare the determinantal kernel with the sweep oracle started from
/// the origin.  Bernoulli cases: exact equality at every reachable state.
/// Geometric cases: the oracle window is certified below `tol`; each
/// support point with oracle mass at least `mass_floor` must match the
/// determinant within the exact tail bound.
pub fn theorem_vs_oracle_case(
    case: CaseId,
    n_particles: usize,
    steps: usize,
    p: &WeightVector,
    tol: &Rational,
    mass_floor: f64,
) -> Result<Vec<CheckItem>> {
    let y = OrderedState::zero(n_particles, case.chamber());
    let oracle = certified_origin_oracle(case, n_particles, steps, p, tol)?;
    let tag = label(case, n_particles, steps, p);
    let mut items = Vec::new();
    let mut good = 0usize;
    let mut total = 0usize;
    match case.jump_law() {
        JumpLaw::Bernoulli => {
            for (state, mass) in oracle.support() {
                total += 1;
                let yp = OrderedState::new(state.clone(), case.chamber())?;
                if theorem_kernel(case, &y, &yp, steps, p)? == *mass {
                    good += 1;
                }
            }
            items.push(CheckItem::counts(format!("{tag}: exact agreement"), good, total));
            items.push(CheckItem::eq_rat(
                format!("{tag}: window tail"),
                oracle.tail_bound(),
                &Rational::zero(),
            ));
        }
        JumpLaw::Geometric => {
            let tail = oracle.tail_bound().clone();
            for (state, mass) in oracle.support() {
                if rat_to_f64(mass) < mass_floor {
                    continue;
                }
                total += 1;
                let yp = OrderedState::new(state.clone(), case.chamber())?;
                let det = theorem_kernel(case, &y, &yp, steps, p)?;
                if (det - mass).abs() <= tail {
                    good += 1;
                }
            }
            items.push(CheckItem::counts(
                format!("{tag}: agreement within tail"),
                good,
                total,
            ));
            items.push(CheckItem::le_rat(format!("{tag}: tail < tol"), &tail, tol));
        }
    }
    Ok(items)
}

// ---------------------------------------------------------------------
// row sums
// ---------------------------------------------------------------------

/// Row-sum certificates for the determinantal kernel from the origin.
/// Bernoulli: the sum over the reachable box is exactly 1.  Geometric:
/// with S the certified oracle support, mass(S) <= sum_S Q <= 1 and
/// 1 - sum_S Q <= tail, hence the window carries at least 1 - tol.
pub fn rowsums_case(
    case: CaseId,
    n_particles: usize,
    steps: usize,
    p: &WeightVector,
    tol: &Rational,
) -> Result<Vec<CheckItem>> {
    let y = OrderedState::zero(n_particles, case.chamber());
    let tag = label(case, n_particles, steps, p);
    let mut items = Vec::new();
    match case.jump_law() {
        JumpLaw::Bernoulli => {
            let mut sum = Rational::zero();
            for v in chamber_box(case.chamber(), 0, steps as i64, n_particles) {
                let yp = OrderedState::new(v, case.chamber())?;
                sum += theorem_kernel(case, &y, &yp, steps, p)?;
            }
            items.push(CheckItem::eq_rat(
                format!("{tag}: row sum"),
                &sum,
                &Rational::one(),
            ));
        }
        JumpLaw::Geometric => {
            let oracle = certified_origin_oracle(case, n_particles, steps, p, tol)?;
            let tail = oracle.tail_bound().clone();
            let window_mass = oracle.total_mass();
            let mut det_sum = Rational::zero();
            for state in oracle.support().keys() {
                let yp = OrderedState::new(state.clone(), case.chamber())?;
                det_sum += theorem_kernel(case, &y, &yp, steps, p)?;
            }
            let one = Rational::one();
            items.push(CheckItem::le_rat(
                format!("{tag}: window mass lower bound"),
                &(&one - tol),
                &window_mass,
            ));
            items.push(CheckItem::le_rat(
                format!("{tag}: window mass <= det row sum"),
                &window_mass,
                &det_sum,
            ));
            items.push(CheckItem::le_rat(
                format!("{tag}: det row sum deficit <= tail"),
                &(&one - &det_sum),
                &tail,
            ));
            items.push(CheckItem::le_rat(
                format!("{tag}: det row sum <= 1"),
                &det_sum,
                &one,
            ));
        }
    }
    Ok(items)
}

// ---------------------------------------------------------------------
// intertwining P_n K = K Q_n
// ---------------------------------------------------------------------

fn case_kind(case: CaseId) -> IntertwinerKind {
    match case.chamber() {
        Chamber::Decreasing => IntertwinerKind::Left,
        Chamber::Increasing => IntertwinerKind::Right,
    }
}

/// Deduplicated edge vectors (the intertwiner support) of patterns with
/// top row z.
fn edge_support(z: &Shape, kind: IntertwinerKind) -> Result<Vec<Vec<i64>>> {
    let mut seen: BTreeSet<Vec<i64>> = BTreeSet::new();
    for x in enumerate_gt(z, None)? {
        seen.insert(match kind {
            IntertwinerKind::Left => x.ledge(),
            IntertwinerKind::Right => x.redge(),
        });
    }
    Ok(seen.into_iter().collect())
}

/// Exact upper tail P(G > s) for G a sum of `steps` independent
/// geometric(p_k) draws per weight: one minus a truncated convolution.
fn geometric_sum_tail(p: &WeightVector, steps: usize, s: i64) -> Rational {
    let s = s.max(-1);
    let mut coeffs = vec![Rational::zero(); (s + 1) as usize];
    if coeffs.is_empty() {
        return Rational::one();
    }
    coeffs[0] = Rational::one();
    for pk in p.entries() {
        let q = Rational::one() - pk;
        for _ in 0..steps {
            // multiply by (1 - p) / (1 - p x), truncated
            let mut next = vec![Rational::zero(); coeffs.len()];
            for t in 0..coeffs.len() {
                let prev = if t == 0 {
                    Rational::zero()
                } else {
                    next[t - 1].clone() * pk
                };
                next[t] = prev + coeffs[t].clone() * &q;
            }
            coeffs = next;
        }
    }
    Rational::one() - coeffs.into_iter().fold(Rational::zero(), |a, b| a + b)
}

/// The shape-kernel row mass escaping {z': z'_1 <= z_1 + s}: since the
/// kernel is supported on z' containing z and the total added size is a
/// sum of nN independent geometrics (skew Cauchy identity), the escape
/// probability is at most the geometric-sum tail beyond s.
fn shape_escape_bound(p: &WeightVector, steps: usize, s: i64) -> Rational {
    geometric_sum_tail(p, steps, s)
}

fn smallest_certified_slack(p: &WeightVector, steps: usize, tol: &Rational) -> i64 {
    let mut hi = 4i64;
    let mut lo = 0i64;
    while &geometric_sum_tail(p, steps, hi) > tol && hi < 4096 {
        lo = hi;
        hi += hi / 2 + 4;
    }
    // tighten to the smallest certified slack in (lo, hi]
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if &geometric_sum_tail(p, steps, mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// The stochastic intertwining identity sum_{z'} P_n(z,z') K(z',y) =
/// sum_{y'} K(z,y') Q_n(y',y), tested at every y in a box around z.
/// Bernoulli cases are fully finite and exact; the geometric blocking
/// case truncates the z'-sum with an exact escape bound below `tol`.
pub fn intertwining_stochastic_case(
    case: CaseId,
    z: &Shape,
    steps: usize,
    p: &WeightVector,
    tol: &Rational,
) -> Result<Vec<CheckItem>> {
    let nn = z.len();
    if p.len() != nn {
        return Err(Error::Dimension("shape/weight length mismatch".into()));
    }
    let kind = case_kind(case);
    let alpha = case.theta(p)?;
    let family = match case.jump_law() {
        JumpLaw::Geometric => ShapeFamily::Geometric,
        JumpLaw::Bernoulli => ShapeFamily::Bernoulli,
    };
    let chamber = case.chamber();
    let zlo = z.part(nn);
    let zhi = z.part(1);
    // y targets: a box around the reach of the edge states.
    let y_pad = match case.jump_law() {
        JumpLaw::Bernoulli => steps as i64,
        JumpLaw::Geometric => 2,
    };
    let (ylo, yhi) = match case {
        // pushing moves right, blocking stays within the jump budget
        CaseId::A | CaseId::C => (zlo, zhi + y_pad),
        CaseId::B | CaseId::D => (zlo, zhi + y_pad),
    };
    let y_targets = chamber_box(chamber, ylo, yhi, nn);

    // Right-hand side support: edges of patterns with top row z.
    let k_row = edge_support(z, kind)?;
    let mut k_row_vals: Vec<(OrderedState, Rational)> = Vec::new();
    for e in &k_row {
        let ys = OrderedState::new(e.clone(), chamber)?;
        let v = markov_intertwiner_via_lambda(z, &ys, &alpha, kind)?;
        if !v.is_zero() {
            k_row_vals.push((ys, v));
        }
    }

    // Left-hand side z' enumerations depend on which coordinate the edge
    // pins: the left edge ends at z'_N, the right edge starts at z'_1.
    let slack = match case.jump_law() {
        JumpLaw::Geometric => smallest_certified_slack(p, steps, &(tol / Rational::from(Int2::from(2)))),
        JumpLaw::Bernoulli => steps as i64 + nn as i64,
    };
    let escape = match (case.jump_law(), kind) {
        // only the blocking geometric case leaves an open summation end
        (JumpLaw::Geometric, IntertwinerKind::Left) => shape_escape_bound(p, steps, slack),
        _ => Rational::zero(),
    };

    let mut good = 0usize;
    let mut items = Vec::new();
    let mut p_row: HashMap<Vec<i64>, Rational> = HashMap::new();
    for yv in &y_targets {
        let y = OrderedState::new(yv.clone(), chamber)?;
        // RHS: finite, exact.
        let mut rhs = Rational::zero();
        for (ys, kval) in &k_row_vals {
            rhs += kval.clone() * theorem_kernel(case, ys, &y, steps, p)?;
        }
        // LHS: z' with K(z', y) possibly nonzero; the N-th edge entry is
        // pinned to an extreme shape part in both kinds.
        let pinned = *yv.last().unwrap();
        let mut lhs = Rational::zero();
        let zp_list: Vec<Vec<i64>> = match kind {
            IntertwinerKind::Left => {
                // ledge pins z'_N = y_N; coordinates grow from z upward.
                let ranges: Vec<(i64, i64)> = (0..nn)
                    .map(|i| {
                        if i + 1 == nn {
                            (pinned, pinned)
                        } else {
                            (z.part(i + 1).max(pinned), zhi + slack)
                        }
                    })
                    .collect();
                if pinned < z.part(nn) {
                    Vec::new()
                } else {
                    decreasing_vectors(&ranges)
                }
            }
            IntertwinerKind::Right => {
                // redge pins z'_1 = y_N (largest entry of the edge).
                let top = *yv.last().unwrap();
                let ranges: Vec<(i64, i64)> = (0..nn)
                    .map(|i| {
                        if i == 0 {
                            (top, top)
                        } else {
                            (z.part(i + 1), top)
                        }
                    })
                    .collect();
                if top < z.part(1) {
                    Vec::new()
                } else {
                    decreasing_vectors(&ranges)
                }
            }
        };
        for zpv in zp_list {
            let pmass = match p_row.get(&zpv) {
                Some(v) => v.clone(),
                None => {
                    let v = shape_kernel(family, z, &Shape::new(zpv.clone())?, steps, p)?;
                    p_row.insert(zpv.clone(), v.clone());
                    v
                }
            };
            if pmass.is_zero() {
                continue;
            }
            let zp = Shape::new(zpv)?;
            let kval = markov_intertwiner_via_lambda(&zp, &y, &alpha, kind)?;
            if kval.is_zero() {
                continue;
            }
            lhs += pmass * kval;
        }
        if (&lhs - &rhs).abs() <= escape {
            good += 1;
        }
    }
    let tag = label(case, nn, steps, p);
    items.push(CheckItem::counts(
        format!("{tag}: P_n K = K Q_n at z={:?}", z.parts()),
        good,
        y_targets.len(),
    ));
    items.push(CheckItem::le_rat(
        format!("{tag}: truncation bound"),
        &escape,
        tol,
    ));
    Ok(items)
}

use crate::Int as Int2;

/// The stripped core form sum_{z'} P°(z,z') Lambda(z',y) =
/// sum_{y'} Lambda(z,y') Q°(y',y), exact for the Bernoulli cases where
/// every sum is finite.
pub fn intertwining_core_case(
    case: CaseId,
    z: &Shape,
    steps: usize,
    p: &WeightVector,
) -> Result<Vec<CheckItem>> {
    if case.jump_law() != JumpLaw::Bernoulli {
        return Err(Error::Domain(
            "core-form check is exact only for Bernoulli jumps".into(),
        ));
    }
    let nn = z.len();
    let kind = case_kind(case);
    let alpha = case.theta(p)?;
    let chamber = case.chamber();
    let zlo = z.part(nn);
    let zhi = z.part(1);
    let y_targets = chamber_box(chamber, zlo - 1, zhi + steps as i64 + 1, nn);
    // z' within the v_n growth budget.
    let zp_ranges: Vec<(i64, i64)> = (0..nn)
        .map(|i| (z.part(i + 1), zhi + steps as i64 + nn as i64))
        .collect();
    let zp_list = decreasing_vectors(&zp_ranges);
    // y' in the Lambda(z, .) support box.
    let yp_list = chamber_box(chamber, zlo, zhi, nn);
    let mut good = 0usize;
    for yv in &y_targets {
        let y = OrderedState::new(yv.clone(), chamber)?;
        let mut lhs = Rational::zero();
        for zpv in &zp_list {
            let zp = Shape::new(zpv.clone())?;
            let pcore = crate::intertwine::p_core(
                crate::symfun::Family::V,
                z.parts(),
                zp.parts(),
                steps,
            )?;
            if pcore.is_zero() {
                continue;
            }
            let lam = lambda_kernel(&zp, &y, &alpha, kind, LambdaMethod::Det)?;
            if lam.is_zero() {
                continue;
            }
            lhs += pcore * lam;
        }
        let mut rhs = Rational::zero();
        for ypv in &yp_list {
            let yp = OrderedState::new(ypv.clone(), chamber)?;
            let lam = lambda_kernel(z, &yp, &alpha, kind, LambdaMethod::Det)?;
            if lam.is_zero() {
                continue;
            }
            rhs += lam * theorem_det(case, &yp, &y, steps, p)?;
        }
        if lhs == rhs {
            good += 1;
        }
    }
    let tag = label(case, nn, steps, p);
    Ok(vec![CheckItem::counts(
        format!("{tag}: core form P°L = L Q° at z={:?}", z.parts()),
        good,
        y_targets.len(),
    )])
}

// ---------------------------------------------------------------------
// inverse identities
// ---------------------------------------------------------------------

fn random_positive_rational(rng: &mut impl RngCore) -> Rational {
    let num = (rng.next_u64() % 5) + 1;
    let den = (rng.next_u64() % 5) + 1;
    Rational::new(Int2::from(num), Int2::from(den))
}

pub fn random_weights(rng: &mut impl RngCore, n: usize) -> WeightVector {
    WeightVector::new((0..n).map(|_| random_positive_rational(rng)).collect()).unwrap()
}

/// Random probability vector with entries in (0, 1).
pub fn random_probabilities(rng: &mut impl RngCore, n: usize) -> WeightVector {
    WeightVector::new(
        (0..n)
            .map(|_| {
                let den = (rng.next_u64() % 6) + 2;
                let num = (rng.next_u64() % (den - 1)) + 1;
                Rational::new(Int2::from(num), Int2::from(den))
            })
            .collect(),
    )
    .unwrap()
}

/// Pi Lambda = Id and Lambda Pi = Id on a box of states, for both the
/// plain kernels and the hatted pair, at `weights` random weight vectors.
pub fn inverse_identities(
    n_particles: usize,
    box_lo: i64,
    box_hi: i64,
    weights: usize,
    seed: u64,
) -> Result<Vec<CheckItem>> {
    let nn = n_particles;
    let mut rng = derive_rng(seed, 0x1d);
    let mut items = Vec::new();
    for w in 0..weights {
        let alpha = random_weights(&mut rng, nn);
        for kind in [IntertwinerKind::Left, IntertwinerKind::Right] {
            let chamber = match kind {
                IntertwinerKind::Left => Chamber::Decreasing,
                IntertwinerKind::Right => Chamber::Increasing,
            };
            let y_states = chamber_box(chamber, box_lo, box_hi, nn);
            let z_states: Vec<Shape> = decreasing_vectors(&vec![
                (box_lo - nn as i64, box_hi + nn as i64);
                nn
            ])
            .into_iter()
            .map(|v| Shape::new(v).unwrap())
            .collect();
            // Sparse rows of Pi over the z grid and of Lambda over the y box.
            let y_index: HashMap<&[i64], usize> =
                y_states.iter().enumerate().map(|(i, v)| (v.as_slice(), i)).collect();
            let mut pi_rows: Vec<Vec<(usize, Rational)>> = Vec::with_capacity(y_states.len());
            for yv in &y_states {
                let y = OrderedState::new(yv.clone(), chamber)?;
                let mut row = Vec::new();
                for (zi, z) in z_states.iter().enumerate() {
                    let v = pi_kernel(&y, z, &alpha, kind)?;
                    if !v.is_zero() {
                        row.push((zi, v));
                    }
                }
                pi_rows.push(row);
            }
            let mut lambda_rows: Vec<Vec<(usize, Rational)>> =
                vec![Vec::new(); z_states.len()];
            for (zi, z) in z_states.iter().enumerate() {
                for yv in &y_states {
                    let y = OrderedState::new(yv.clone(), chamber)?;
                    let v = lambda_kernel(z, &y, &alpha, kind, LambdaMethod::Det)?;
                    if !v.is_zero() {
                        lambda_rows[zi].push((y_index[yv.as_slice()], v));
                    }
                }
            }
            // Pi Lambda on the y box.
            let mut good = 0usize;
            let mut total = 0usize;
            for (yi, row) in pi_rows.iter().enumerate() {
                let mut acc: HashMap<usize, Rational> = HashMap::new();
                for (zi, pv) in row {
                    for (yj, lv) in &lambda_rows[*zi] {
                        *acc.entry(*yj).or_insert_with(Rational::zero) +=
                            pv.clone() * lv.clone();
                    }
                }
                for yj in 0..y_states.len() {
                    total += 1;
                    let got = acc.get(&yj).cloned().unwrap_or_else(Rational::zero);
                    let want = if yi == yj {
                        Rational::one()
                    } else {
                        Rational::zero()
                    };
                    if got == want {
                        good += 1;
                    }
                }
            }
            let kname = match kind {
                IntertwinerKind::Left => "plain",
                IntertwinerKind::Right => "hatted",
            };
            items.push(CheckItem::counts(
                format!("N={nn} weights#{w} {kname}: Pi Lambda = Id"),
                good,
                total,
            ));
            // Lambda Pi on the inner z box (entries within [box_lo, box_hi]).
            let inner: Vec<usize> = z_states
                .iter()
                .enumerate()
                .filter(|(_, z)| {
                    z.parts().iter().all(|&v| v >= box_lo && v <= box_hi)
                })
                .map(|(i, _)| i)
                .collect();
            let inner_set: BTreeSet<usize> = inner.iter().cloned().collect();
            let mut good2 = 0usize;
            let mut total2 = 0usize;
            for &zi in &inner {
                let mut acc: HashMap<usize, Rational> = HashMap::new();
                for (yj, lv) in &lambda_rows[zi] {
                    for (zk, pv) in &pi_rows[*yj] {
                        *acc.entry(*zk).or_insert_with(Rational::zero) +=
                            lv.clone() * pv.clone();
                    }
                }
                for (zk, v) in &acc {
                    if !inner_set.contains(zk) && !v.is_zero() {
                        total2 += 1; // off-box leakage counts as a failure
                    }
                }
                for &zk in &inner {
                    total2 += 1;
                    let got = acc.get(&zk).cloned().unwrap_or_else(Rational::zero);
                    let want = if zk == zi {
                        Rational::one()
                    } else {
                        Rational::zero()
                    };
                    if got == want {
                        good2 += 1;
                    }
                }
            }
            items.push(CheckItem::counts(
                format!("N={nn} weights#{w} {kname}: Lambda Pi = Id"),
                good2,
                total2,
            ));
        }
    }
    Ok(items)
}

// ---------------------------------------------------------------------
// lambda three-way
// ---------------------------------------------------------------------

/// Enumeration, determinant, and path-sum evaluations of Lambda must
/// coincide on every (z, y) with parts in a small range, over random
/// positive weights.
pub fn lambda_threeway(n_particles: usize, trials: usize, seed: u64) -> Result<Vec<CheckItem>> {
    let nn = n_particles;
    let mut rng = derive_rng(seed, 0x3a);
    let mut items = Vec::new();
    for t in 0..trials {
        let alpha = random_weights(&mut rng, nn);
        let lo = -2i64;
        let hi = 4i64;
        let zr = (rng.next_u64() % 3) as i64;
        let z_states: Vec<Shape> = decreasing_vectors(&vec![(lo + zr, hi - 1 + zr); nn])
            .into_iter()
            .map(|v| Shape::new(v).unwrap())
            .collect();
        let mut good = 0usize;
        let mut total = 0usize;
        for z in &z_states {
            for yv in chamber_box(Chamber::Decreasing, z.part(nn), z.part(1), nn) {
                let y = OrderedState::new(yv, Chamber::Decreasing)?;
                let by_enum = lambda_kernel(z, &y, &alpha, IntertwinerKind::Left, LambdaMethod::Enum)?;
                let by_det = lambda_kernel(z, &y, &alpha, IntertwinerKind::Left, LambdaMethod::Det)?;
                let by_gv = lambda_kernel(z, &y, &alpha, IntertwinerKind::Left, LambdaMethod::Gv)?;
                total += 1;
                if by_enum == by_det && by_det == by_gv {
                    good += 1;
                }
            }
        }
        items.push(CheckItem::counts(
            format!("N={nn} trial#{t}: enum = det = path-sum"),
            good,
            total,
        ));
    }
    Ok(items)
}

// ---------------------------------------------------------------------
// bijection and joint law
// ---------------------------------------------------------------------

fn all_grids(n_particles: usize, steps: usize, max_entry: u64) -> Vec<InnovationGrid> {
    let cells = n_particles * steps;
    let base = max_entry + 1;
    let mut out = Vec::new();
    let total = (base as u128).pow(cells as u32);
    for idx in 0..total {
        let mut rem = idx;
        let mut rows = vec![vec![0u64; steps]; n_particles];
        for k in 0..n_particles {
            for t in 0..steps {
                rows[k][t] = (rem % base as u128) as u64;
                rem /= base as u128;
            }
        }
        out.push(InnovationGrid::new(rows).unwrap());
    }
    out
}

/// Injectivity of each correspondence on bounded grids, and exactness of
/// the output joint law on every fiber.
pub fn bijection_suite(
    n_particles: usize,
    steps: usize,
    p: &WeightVector,
) -> Result<Vec<CheckItem>> {
    let mut items = Vec::new();
    for variant in Variant::all() {
        let max_entry = match variant.innovation_law() {
            JumpLaw::Geometric => 2,
            JumpLaw::Bernoulli => 1,
        };
        let grids = all_grids(n_particles, steps, max_entry);
        let mut images: BTreeSet<String> = BTreeSet::new();
        let mut law_good = 0usize;
        for grid in &grids {
            let res = correspond(variant, grid)?;
            let image = format!("{:?}|{:?}", res.final_tableau().rows(), res.shapes);
            images.insert(image);
            // fiber law: the grid probability must equal the stated joint law
            let mut grid_prob = Rational::one();
            for k in 1..=n_particles {
                let pk = &p.entries()[k - 1];
                let theta = match variant.innovation_law() {
                    JumpLaw::Geometric => pk.clone(),
                    JumpLaw::Bernoulli => pk / (Rational::one() - pk),
                };
                for t in 1..=steps {
                    grid_prob *= (Rational::one() - pk)
                        * rat_pow(&theta, grid.entry(k, t) as i64);
                }
            }
            let stated = joint_law(
                variant,
                res.final_tableau(),
                &res.final_tableau().shape(n_particles)?,
                steps,
                p,
            )?;
            if grid_prob == stated {
                law_good += 1;
            }
        }
        items.push(CheckItem::counts(
            format!("{variant:?} N={n_particles} n={steps}: distinct images"),
            images.len(),
            grids.len(),
        ));
        items.push(CheckItem::counts(
            format!("{variant:?} N={n_particles} n={steps}: joint law on fibers"),
            law_good,
            grids.len(),
        ));
    }
    Ok(items)
}

/// The edge of the insertion tableau reproduces the matched particle
/// recursion, grid by grid.
pub fn rsk_coupling_suite(n_particles: usize, steps: usize) -> Result<Vec<CheckItem>> {
    let mut items = Vec::new();
    for variant in Variant::all() {
        let max_entry = match variant.innovation_law() {
            JumpLaw::Geometric => 2,
            JumpLaw::Bernoulli => 1,
        };
        let case = variant.matched_case();
        let side = variant.edge_side();
        let grids = all_grids(n_particles, steps, max_entry);
        let mut good = 0usize;
        for grid in &grids {
            let res = correspond(variant, grid)?;
            let mut path = vec![OrderedState::zero(n_particles, case.chamber())];
            for t in 1..=steps {
                let next = crate::systems::step_case(case, path.last().unwrap(), &grid.column(t))?;
                path.push(next);
            }
            let ok = (0..=steps).all(|t| {
                edge_vector(&res.tableaux[t], side, n_particles)
                    .map(|e| e.values() == path[t].values())
                    .unwrap_or(false)
            });
            if ok {
                good += 1;
            }
        }
        items.push(CheckItem::counts(
            format!("{variant:?} N={n_particles} n={steps}: edge = particle path"),
            good,
            grids.len(),
        ));
    }
    Ok(items)
}

// ---------------------------------------------------------------------
// symmetric-function identities
// ---------------------------------------------------------------------

pub fn symfun_suite(seed: u64) -> Result<Vec<CheckItem>> {
    let mut rng = derive_rng(seed, 0x5f);
    let mut items = Vec::new();

    // (a) windowed h/e inversion: sum_l (-1)^l e_l h_{r-l} = 1(r = 0).
    {
        let alpha = random_weights(&mut rng, 3);
        let mut good = 0usize;
        let mut total = 0usize;
        for i in 0..=2usize {
            for j in (i + 1)..=3usize {
                for r in -3i64..=10 {
                    let mut acc = Rational::zero();
                    for l in 0..=(j - i) as i64 {
                        let e = windowed(SymKind::E, l, i, j, &alpha)?;
                        let h = windowed(SymKind::H, r - l, i, j, &alpha)?;
                        let term = e * h;
                        if l % 2 == 0 {
                            acc += term;
                        } else {
                            acc -= term;
                        }
                    }
                    let want = if r == 0 {
                        Rational::one()
                    } else {
                        Rational::zero()
                    };
                    total += 1;
                    if acc == want {
                        good += 1;
                    }
                }
            }
        }
        items.push(CheckItem::counts("h/e inversion on windows", good, total));
    }

    // (b) skew determinant counts vs direct filling enumeration, |lam| <= 8.
    {
        let mut good = 0usize;
        let mut total = 0usize;
        let lams: Vec<Shape> = decreasing_vectors(&[(0, 4), (0, 3), (0, 2)])
            .into_iter()
            .filter(|v| v.iter().sum::<i64>() <= 8)
            .map(|v| Shape::new(v).unwrap())
            .collect();
        for lam in &lams {
            for muv in decreasing_vectors(&[
                (0, lam.part(1)),
                (0, lam.part(2)),
                (0, lam.part(3)),
            ]) {
                let mu = Shape::new(muv).unwrap();
                if !lam.contains(&mu) {
                    continue;
                }
                for k in 0..=3i64 {
                    for mode in [RowMode::Weak, RowMode::Strict] {
                        total += 1;
                        if skew_count(lam, &mu, k, mode)?
                            == skew_count_by_enumeration(lam, &mu, k, mode)?
                        {
                            good += 1;
                        }
                    }
                }
            }
        }
        items.push(CheckItem::counts("skew counts det vs enumeration", good, total));
    }

    // (c) Schur determinant vs pattern enumeration, N <= 4.
    {
        let mut good = 0usize;
        let mut total = 0usize;
        for nn in 1..=4usize {
            let alpha = random_weights(&mut rng, nn);
            for zv in decreasing_vectors(&vec![(0, 3); nn]) {
                let z = Shape::new(zv).unwrap();
                let mut acc = Rational::zero();
                for x in enumerate_gt(&z, None)? {
                    acc += pattern_weight(&x, &alpha)?;
                }
                total += 1;
                if acc == schur(&z, &alpha)? {
                    good += 1;
                }
            }
        }
        items.push(CheckItem::counts("Schur det vs pattern sum", good, total));
    }

    // (d) Cauchy-Binet over random finite tables.
    {
        let mut good = 0usize;
        let mut total = 0usize;
        for trial in 0..4 {
            let nn = 2 + (trial % 2);
            let window = (-4i64, 4i64);
            let mut mk_tables = || -> Vec<HashMap<i64, Rational>> {
                (0..nn)
                    .map(|_| {
                        let mut t = HashMap::new();
                        for k in window.0..=window.1 {
                            if rng.next_u64() % 2 == 0 {
                                t.insert(k, random_positive_rational(&mut rng));
                            }
                        }
                        t
                    })
                    .collect()
            };
            let phi = mk_tables();
            let psi = mk_tables();
            let (lhs, rhs) = cauchy_binet_check(&phi, &psi, window)?;
            total += 1;
            if lhs == rhs {
                good += 1;
            }
        }
        items.push(CheckItem::counts("Cauchy-Binet random tables", good, total));
    }

    Ok(items)
}

// ---------------------------------------------------------------------
// Monte Carlo consistency
// ---------------------------------------------------------------------

/// For each case, the empirical frequency of the heaviest target states
/// must fall within four conservative standard errors of the exact
/// kernel, and a rerun with the same seed must reproduce it bit for bit.
pub fn mc_consistency(
    n_particles: usize,
    steps: usize,
    p: &WeightVector,
    reps: u64,
    seed: u64,
) -> Result<Vec<CheckItem>> {
    let mut items = Vec::new();
    for case in CaseId::all() {
        let y = OrderedState::zero(n_particles, case.chamber());
        let tol = Rational::new(Int2::from(1), Int2::from(10u64.pow(12)));
        let oracle = certified_origin_oracle(case, n_particles, steps, p, &tol)?;
        // three heaviest support points
        let mut ranked: Vec<(&Vec<i64>, &Rational)> = oracle.support().iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        let tag = label(case, n_particles, steps, p);
        for (state, exact) in ranked.into_iter().take(3) {
            let yp = OrderedState::new(state.clone(), case.chamber())?;
            let est = mc_estimate(case, &y, &yp, steps, p, reps, seed)?;
            let dev = (&est.estimate - exact).abs();
            let four_se = Rational::from(Int2::from(4)) * &est.stderr_bound;
            items.push(CheckItem::le_rat(
                format!("{tag}: |mc - exact| <= 4 se at {state:?}"),
                &dev,
                &four_se,
            ));
            let rerun = mc_estimate(case, &y, &yp, steps, p, reps, seed)?;
            items.push(CheckItem::counts(
                format!("{tag}: deterministic rerun at {state:?}"),
                (rerun == est) as usize,
                1,
            ));
        }
    }
    Ok(items)
}

// ---------------------------------------------------------------------
// suite dispatcher
// ---------------------------------------------------------------------

fn intertwining_shapes(n_particles: usize) -> Vec<Shape> {
    let staircase: Vec<i64> = (0..n_particles).map(|i| (n_particles - 1 - i) as i64).collect();
    let mut out = vec![Shape::zero(n_particles)];
    if staircase.iter().any(|&v| v != 0) {
        out.push(Shape::new(staircase).unwrap());
    }
    out
}

/// Named suites as exposed by the command line.  `p` defaults to the
/// all-1/2 vector when absent; `tol` bounds certified truncations.
pub fn run_suite(
    suite: &str,
    n_particles: usize,
    steps: usize,
    p: Option<&WeightVector>,
    seed: u64,
    tol: &Rational,
) -> Result<Vec<CheckItem>> {
    if n_particles == 0 {
        return Err(Error::Dimension("N must be at least 1".into()));
    }
    let default_p = half_weights(n_particles);
    let p = p.unwrap_or(&default_p);
    if p.len() != n_particles {
        return Err(Error::Dimension("p length must equal N".into()));
    }
    match suite {
        "theorem-vs-oracle" => {
            let mut items = Vec::new();
            for case in CaseId::all() {
                items.extend(theorem_vs_oracle_case(
                    case,
                    n_particles,
                    steps,
                    p,
                    tol,
                    1e-10,
                )?);
            }
            Ok(items)
        }
        "rowsums" => {
            let mut items = Vec::new();
            for case in CaseId::all() {
                items.extend(rowsums_case(case, n_particles, steps, p, tol)?);
            }
            Ok(items)
        }
        "intertwining" => {
            let mut items = Vec::new();
            for case in CaseId::all() {
                for z in intertwining_shapes(n_particles) {
                    items.extend(intertwining_stochastic_case(case, &z, steps, p, tol)?);
                    if case.jump_law() == JumpLaw::Bernoulli {
                        items.extend(intertwining_core_case(case, &z, steps, p)?);
                    }
                }
            }
            Ok(items)
        }
        "inverse" => inverse_identities(n_particles, 0, 5, 5, seed),
        "bijection" => bijection_suite(n_particles, steps, p),
        "symfun-identities" => symfun_suite(seed),
        "lambda-threeway" => lambda_threeway(n_particles, 10, seed),
        other => Err(Error::Parse(format!("unknown suite '{other}'"))),
    }
}

// ---------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn third_weights(n: usize) -> WeightVector {
        let vals = [
            Rational::new(1.into(), 3.into()),
            Rational::new(2.into(), 5.into()),
            Rational::new(1.into(), 2.into()),
        ];
        WeightVector::new(vals[..n].to_vec()).unwrap()
    }

    #[test]
    fn geometric_sum_tail_matches_direct() {
        // single geometric(1/2): P(G > s) = (1/2)^{s+1}
        let p = half_weights(1);
        for s in 0..6i64 {
            assert_eq!(
                geometric_sum_tail(&p, 1, s),
                rat_pow(&Rational::new(1.into(), 2.into()), s + 1)
            );
        }
        // sum of two geometrics(1/2): P(G > s) = (s + 3) / 2^{s+2}
        for s in 0..6i64 {
            assert_eq!(
                geometric_sum_tail(&p, 2, s),
                Rational::new(Int2::from(s + 3), Int2::from(1)) *
                    rat_pow(&Rational::new(1.into(), 2.into()), s + 2)
            );
        }
    }

    #[test]
    fn dispatcher_rejects_unknown_suite() {
        let tol = Rational::new(1.into(), 1_000_000i64.into());
        assert!(matches!(
            run_suite("no-such-suite", 2, 1, None, 7, &tol),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn suite_theorem_vs_oracle_small() {
        let tol = Rational::new(Int2::from(1), Int2::from(10u64.pow(12)));
        let p = third_weights(2);
        let items = run_suite("theorem-vs-oracle", 2, 2, Some(&p), 1, &tol).unwrap();
        assert!(all_pass(&items), "{items:?}");
    }

    #[test]
    fn suite_rowsums_small() {
        let tol = Rational::new(Int2::from(1), Int2::from(10u64.pow(12)));
        let items = run_suite("rowsums", 2, 2, None, 1, &tol).unwrap();
        assert!(all_pass(&items), "{items:?}");
    }

    #[test]
    fn suite_inverse_small() {
        let items = inverse_identities(2, 0, 3, 2, 11).unwrap();
        assert!(all_pass(&items), "{items:?}");
    }

    #[test]
    fn suite_bijection_two_by_two() {
        let items = bijection_suite(2, 2, &half_weights(2)).unwrap();
        assert!(all_pass(&items), "{items:?}");
        // the Bernoulli variants see 2^4 = 16 grids
        let dual = items
            .iter()
            .find(|c| c.name.starts_with("DualRsk") && c.name.contains("distinct"))
            .unwrap();
        assert_eq!(dual.lhs, "16");
        assert_eq!(dual.rhs, "16");
    }

    #[test]
    fn suite_symfun_small() {
        let items = symfun_suite(5).unwrap();
        assert!(all_pass(&items), "{items:?}");
    }

    #[test]
    fn suite_lambda_threeway_small() {
        let items = lambda_threeway(2, 3, 9).unwrap();
        assert!(all_pass(&items), "{items:?}");
    }

    #[test]
    fn suite_intertwining_small() {
        let tol = Rational::new(Int2::from(1), Int2::from(10u64.pow(12)));
        let p = third_weights(2);
        let items = run_suite("intertwining", 2, 1, Some(&p), 1, &tol).unwrap();
        assert!(all_pass(&items), "{items:?}");
    }

    #[test]
    fn suite_rsk_coupling_small() {
        let items = rsk_coupling_suite(2, 2).unwrap();
        assert!(all_pass(&items), "{items:?}");
    }

    #[test]
    fn suite_mc_small() {
        let items = mc_consistency(2, 1, &half_weights(2), 20_000, 42).unwrap();
        assert!(all_pass(&items), "{items:?}");
    }
}
