//! The four interacting particle systems: stochastic recursions, exact
//! one-step and n-step kernels obtained by marginalizing the innovations,
//! the determinantal transition kernels, the shape-process kernels, and
//! Monte Carlo estimation.

use std::collections::HashMap;

use num::{One, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exactnum::{rat_pow, rat_to_f64, Matrix};
use crate::symfun::{jump_basis, schur, transform_f, Family, Orientation, Shape, WeightVector};
use crate::{Error, Int, Rational, Result};

/// The four cases: jump law x interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseId {
    /// Geometric jumps with pushing; chamber weakly increasing.
    A,
    /// Bernoulli jumps with blocking; chamber weakly decreasing.
    B,
    /// Geometric jumps with blocking; chamber weakly decreasing.
    C,
    /// Bernoulli jumps with pushing; chamber weakly increasing.
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpLaw {
    Geometric,
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chamber {
    /// W^N: weakly decreasing entries.
    Decreasing,
    /// hat W^N: weakly increasing entries.
    Increasing,
}

impl Chamber {
    pub fn admits(&self, values: &[i64]) -> bool {
        match self {
            Chamber::Decreasing => values.windows(2).all(|w| w[0] >= w[1]),
            Chamber::Increasing => values.windows(2).all(|w| w[0] <= w[1]),
        }
    }
}

impl CaseId {
    pub fn all() -> [CaseId; 4] {
        [CaseId::A, CaseId::B, CaseId::C, CaseId::D]
    }

    pub fn from_str_loose(s: &str) -> Result<CaseId> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(CaseId::A),
            "B" => Ok(CaseId::B),
            "C" => Ok(CaseId::C),
            "D" => Ok(CaseId::D),
            other => Err(Error::Parse(format!("unknown case '{other}'"))),
        }
    }

    pub fn jump_law(&self) -> JumpLaw {
        match self {
            CaseId::A | CaseId::C => JumpLaw::Geometric,
            CaseId::B | CaseId::D => JumpLaw::Bernoulli,
        }
    }

    pub fn chamber(&self) -> Chamber {
        match self {
            CaseId::A | CaseId::D => Chamber::Increasing,
            CaseId::B | CaseId::C => Chamber::Decreasing,
        }
    }

    /// Basis family of the determinantal kernel: w for geometric, v for Bernoulli.
    pub fn family(&self) -> Family {
        match self.jump_law() {
            JumpLaw::Geometric => Family::W,
            JumpLaw::Bernoulli => Family::V,
        }
    }

    /// Transform orientation: hat for the pushing cases, forward for blocking.
    pub fn orientation(&self) -> Orientation {
        match self {
            CaseId::A | CaseId::D => Orientation::Hat,
            CaseId::B | CaseId::C => Orientation::Forward,
        }
    }

    /// Sign of the index shift in the determinant argument:
    /// +1 gives y'_i - y_j + i - j (pushing), -1 gives y'_i - y_j - i + j.
    pub fn arg_sign(&self) -> i64 {
        match self {
            CaseId::A | CaseId::D => 1,
            CaseId::B | CaseId::C => -1,
        }
    }

    /// Prefactor base theta: p for geometric cases, pi for Bernoulli cases.
    /// This is also the weight vector of the matched intertwining kernel.
    pub fn theta(&self, p: &WeightVector) -> Result<WeightVector> {
        match self.jump_law() {
            JumpLaw::Geometric => Ok(p.clone()),
            JumpLaw::Bernoulli => pi_vector(p),
        }
    }

    /// Weight vector inside the f-transforms of the determinant:
    /// theta for forward cases, theta^{-1} for hat cases.
    pub fn transform_weights(&self, p: &WeightVector) -> Result<WeightVector> {
        let theta = self.theta(p)?;
        Ok(match self.orientation() {
            Orientation::Forward => theta,
            Orientation::Hat => theta.inverse(),
        })
    }
}

/// pi_k = p_k / (1 - p_k).
pub fn pi_vector(p: &WeightVector) -> Result<WeightVector> {
    check_probabilities(p)?;
    WeightVector::new(
        p.entries()
            .iter()
            .map(|pk| pk / (Rational::one() - pk))
            .collect(),
    )
}

pub fn check_probabilities(p: &WeightVector) -> Result<()> {
    if p.entries()
        .iter()
        .any(|pk| *pk <= Rational::zero() || *pk >= Rational::one())
    {
        return Err(Error::Domain("probabilities must lie in (0,1)".into()));
    }
    Ok(())
}

/// Ordered particle configuration tagged with its chamber.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderedState {
    values: Vec<i64>,
    chamber: Chamber,
}

impl OrderedState {
    pub fn new(values: Vec<i64>, chamber: Chamber) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Dimension("empty state".into()));
        }
        if !chamber.admits(&values) {
            return Err(Error::ChamberViolation(format!(
                "{values:?} not ordered for {chamber:?}"
            )));
        }
        Ok(OrderedState { values, chamber })
    }

    pub fn zero(n: usize, chamber: Chamber) -> Self {
        OrderedState {
            values: vec![0; n],
            chamber,
        }
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn chamber(&self) -> Chamber {
        self.chamber
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// N x n grid of innovations xi(k, t); row k-1 drives particle k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnovationGrid {
    xi: Vec<Vec<u64>>,
}

impl InnovationGrid {
    pub fn new(xi: Vec<Vec<u64>>) -> Result<Self> {
        if xi.is_empty() {
            return Err(Error::Dimension("grid needs at least one particle".into()));
        }
        let steps = xi[0].len();
        if xi.iter().any(|row| row.len() != steps) {
            return Err(Error::Dimension("ragged innovation grid".into()));
        }
        Ok(InnovationGrid { xi })
    }

    pub fn particles(&self) -> usize {
        self.xi.len()
    }

    pub fn steps(&self) -> usize {
        self.xi[0].len()
    }

    /// xi values for time step t (1-based), ordered by particle.
    pub fn column(&self, t: usize) -> Vec<u64> {
        self.xi.iter().map(|row| row[t - 1]).collect()
    }

    pub fn entry(&self, particle: usize, t: usize) -> u64 {
        self.xi[particle - 1][t - 1]
    }

    pub fn check_support(&self, law: JumpLaw) -> Result<()> {
        if law == JumpLaw::Bernoulli && self.xi.iter().flatten().any(|&v| v > 1) {
            return Err(Error::SupportMismatch(
                "Bernoulli innovations must be 0 or 1".into(),
            ));
        }
        Ok(())
    }

    /// Exact probability of this grid under the case's innovation law.
    pub fn probability(&self, law: JumpLaw, p: &WeightVector) -> Result<Rational> {
        check_probabilities(p)?;
        if p.len() != self.particles() {
            return Err(Error::Dimension("weight/grid size mismatch".into()));
        }
        self.check_support(law)?;
        let mut acc = Rational::one();
        for (k, row) in self.xi.iter().enumerate() {
            let pk = &p.entries()[k];
            for &r in row {
                acc *= match law {
                    JumpLaw::Geometric => {
                        (Rational::one() - pk) * rat_pow(pk, r as i64)
                    }
                    JumpLaw::Bernoulli => {
                        if r == 1 {
                            pk.clone()
                        } else {
                            Rational::one() - pk
                        }
                    }
                };
            }
        }
        Ok(acc)
    }
}

fn check_xi_support(case: CaseId, xi: &[u64]) -> Result<()> {
    if case.jump_law() == JumpLaw::Bernoulli && xi.iter().any(|&v| v > 1) {
        return Err(Error::SupportMismatch(
            "Bernoulli innovations must be 0 or 1".into(),
        ));
    }
    Ok(())
}

/// One synchronous update of the case's recursion, particles in label order.
pub fn step_case(case: CaseId, y: &OrderedState, xi: &[u64]) -> Result<OrderedState> {
    if y.chamber() != case.chamber() {
        return Err(Error::ChamberViolation(format!(
            "state chamber {:?} does not match case {:?}",
            y.chamber(),
            case
        )));
    }
    if xi.len() != y.len() {
        return Err(Error::Dimension("innovation column length mismatch".into()));
    }
    check_xi_support(case, xi)?;
    let old = y.values();
    let n = old.len();
    let mut new = vec![0i64; n];
    new[0] = old[0] + xi[0] as i64;
    for k in 1..n {
        let x = xi[k] as i64;
        new[k] = match case {
            CaseId::A => old[k].max(new[k - 1]) + x,
            CaseId::B => (old[k] + x).min(new[k - 1]),
            CaseId::C => (old[k] + x).min(old[k - 1]),
            CaseId::D => (old[k] + x).max(new[k - 1]),
        };
    }
    OrderedState::new(new, case.chamber())
}

/// splitmix64, used to derive independent replica seeds.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn derive_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mixed = splitmix64(seed ^ splitmix64(replica.wrapping_add(1)));
    ChaCha8Rng::seed_from_u64(mixed)
}

/// 2^64-scaled threshold for a Bernoulli(p) draw from a uniform u64.
fn bernoulli_threshold(p: &Rational) -> u128 {
    let scaled = (p.numer() << 64u32) / p.denom();
    use num::ToPrimitive;
    scaled.to_u128().unwrap_or(u128::MAX)
}

fn draw_innovation(rng: &mut ChaCha8Rng, law: JumpLaw, threshold: u128) -> u64 {
    match law {
        JumpLaw::Bernoulli => u64::from((rng.next_u64() as u128) < threshold),
        JumpLaw::Geometric => {
            let mut r = 0u64;
            while (rng.next_u64() as u128) < threshold {
                r += 1;
            }
            r
        }
    }
}

/// Simulate a path of length n+1; deterministic function of the seed.
pub fn sample_path(
    case: CaseId,
    y0: &OrderedState,
    n: usize,
    p: &WeightVector,
    seed: u64,
) -> Result<Vec<OrderedState>> {
    check_probabilities(p)?;
    if p.len() != y0.len() {
        return Err(Error::Dimension("weight/state length mismatch".into()));
    }
    if y0.chamber() != case.chamber() {
        return Err(Error::ChamberViolation("initial state chamber".into()));
    }
    let law = case.jump_law();
    let thresholds: Vec<u128> = p.entries().iter().map(bernoulli_threshold).collect();
    let mut rng = derive_rng(seed, 0);
    let mut path = Vec::with_capacity(n + 1);
    path.push(y0.clone());
    for _ in 0..n {
        let xi: Vec<u64> = thresholds
            .iter()
            .map(|&t| draw_innovation(&mut rng, law, t))
            .collect();
        let next = step_case(case, path.last().unwrap(), &xi)?;
        path.push(next);
    }
    Ok(path)
}

/// Finitely-supported sub-probability measure on states, with the mass
/// outside the support tracked exactly.
#[derive(Debug, Clone)]
pub struct SparseKernel {
    support: std::collections::BTreeMap<Vec<i64>, Rational>,
    /// Per-innovation displacement cap used for geometric truncation, if any.
    window_cap: Option<u64>,
    tail_bound: Rational,
}

impl SparseKernel {
    pub fn support(&self) -> &std::collections::BTreeMap<Vec<i64>, Rational> {
        &self.support
    }

    pub fn mass_at(&self, state: &[i64]) -> Rational {
        self.support.get(state).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn tail_bound(&self) -> &Rational {
        &self.tail_bound
    }

    pub fn window_cap(&self) -> Option<u64> {
        self.window_cap
    }

    pub fn total_mass(&self) -> Rational {
        self.support.values().fold(Rational::zero(), |a, b| a + b)
    }
}

type Dist = HashMap<Vec<i64>, (Rational, f64)>;

/// One sweep of the recursion over a joint distribution, marginalizing
/// particle innovations in label order.  Geometric innovations of
/// unblocked particles are truncated at `cap`, with the dropped mass
/// accumulated exactly into `tail`.  Keys with approximate mass below
/// `prune_eps` are dropped the same way.
fn advance_step(
    case: CaseId,
    dist: Dist,
    p: &WeightVector,
    cap: u64,
    prune_eps: f64,
    tail: &mut Rational,
) -> Dist {
    let n = p.len();
    // Case C consults old positions, so its mid-sweep keys carry one extra
    // slot (old_{k-1} survives until after stage k); see layouts below.
    let mut cur: Dist = dist;

    for k in 0..n {
        let pk = &p.entries()[k];
        let pk_f = rat_to_f64(pk);
        let q = Rational::one() - pk;
        let mut next: Dist = HashMap::with_capacity(cur.len() * 2);
        let push = |key: Vec<i64>, mass: Rational, mass_f: f64, next: &mut Dist| {
            let slot = next.entry(key).or_insert_with(|| (Rational::zero(), 0.0));
            slot.0 += mass;
            slot.1 += mass_f;
        };
        for (key, (mass, mass_f)) in cur.drain() {
            // Key layout:
            //  A, B, D: [new_0 .. new_{k-1}, old_k .. old_{N-1}]
            //  C:       [new_0 .. new_{k-1}, old_{k-1} .. old_{N-1}]  (k >= 1)
            //           [old_0 .. old_{N-1}]                          (k = 0)
            let (old_k, bound): (i64, Option<i64>) = match case {
                CaseId::A | CaseId::D => {
                    let old_k = key[k];
                    let left = if k == 0 { None } else { Some(key[k - 1]) };
                    (old_k, left)
                }
                CaseId::B => {
                    let old_k = key[k];
                    let left = if k == 0 { None } else { Some(key[k - 1]) };
                    (old_k, left)
                }
                CaseId::C => {
                    if k == 0 {
                        (key[0], None)
                    } else {
                        // key = [new_0..new_{k-1}, old_{k-1}, old_k, ...]
                        (key[k + 1], Some(key[k]))
                    }
                }
            };
            let make_key = |v: i64| -> Vec<i64> {
                match case {
                    CaseId::C => {
                        if k == 0 {
                            // -> [new_0, old_0, old_1, ..., old_{N-1}]
                            let mut out = Vec::with_capacity(n + 1);
                            out.push(v);
                            out.extend_from_slice(&key);
                            if n == 1 {
                                out.truncate(1);
                            }
                            out
                        } else {
                            // drop old_{k-1}: [new_0..new_k, old_k, ..., old_{N-1}]
                            let mut out = Vec::with_capacity(key.len() - 1);
                            out.extend_from_slice(&key[..k]);
                            out.push(v);
                            out.extend_from_slice(&key[k + 1..]);
                            if k == n - 1 {
                                out.truncate(n);
                            }
                            out
                        }
                    }
                    _ => {
                        let mut out = key.clone();
                        out[k] = v;
                        out
                    }
                }
            };
            match (case, case.jump_law()) {
                (CaseId::A, _) => {
                    // new_k = max(old_k, new_{k-1}) + xi, xi geometric.
                    let base = bound.map_or(old_k, |b| old_k.max(b));
                    let mut weight = q.clone() * mass.clone(); // (1-p) p^r * mass
                    let mut weight_f = (1.0 - pk_f) * mass_f;
                    let mut r = 0u64;
                    loop {
                        if r > cap || (weight_f < prune_eps && r > 0) {
                            // remaining geometric tail: p^r * mass
                            *tail += rat_pow(pk, r as i64) * mass.clone();
                            break;
                        }
                        push(make_key(base + r as i64), weight.clone(), weight_f, &mut next);
                        weight *= pk;
                        weight_f *= pk_f;
                        r += 1;
                    }
                }
                (CaseId::C, _) => {
                    match bound {
                        None => {
                            // unblocked leftmost-label particle: geometric with cap
                            let mut weight = q.clone() * mass.clone();
                            let mut weight_f = (1.0 - pk_f) * mass_f;
                            let mut r = 0u64;
                            loop {
                                if r > cap || (weight_f < prune_eps && r > 0) {
                                    *tail += rat_pow(pk, r as i64) * mass.clone();
                                    break;
                                }
                                push(
                                    make_key(old_k + r as i64),
                                    weight.clone(),
                                    weight_f,
                                    &mut next,
                                );
                                weight *= pk;
                                weight_f *= pk_f;
                                r += 1;
                            }
                        }
                        Some(b) => {
                            // blocked: min(old_k + xi, b); aggregate the tail at b.
                            let gap = b - old_k; // >= 0 in the chamber
                            let mut weight = q.clone() * mass.clone();
                            let mut weight_f = (1.0 - pk_f) * mass_f;
                            for r in 0..gap {
                                push(make_key(old_k + r), weight.clone(), weight_f, &mut next);
                                weight *= pk;
                                weight_f *= pk_f;
                            }
                            let tail_mass = rat_pow(pk, gap) * mass.clone();
                            let tail_f = pk_f.powi(gap as i32) * mass_f;
                            push(make_key(b), tail_mass, tail_f, &mut next);
                        }
                    }
                }
                (CaseId::B, _) => {
                    // new_k = min(old_k + xi, new_{k-1}), xi Bernoulli.
                    for (x, pr, pr_f) in [
                        (0i64, q.clone(), 1.0 - pk_f),
                        (1i64, pk.clone(), pk_f),
                    ] {
                        let mut v = old_k + x;
                        if let Some(b) = bound {
                            v = v.min(b);
                        }
                        push(make_key(v), pr * mass.clone(), pr_f * mass_f, &mut next);
                    }
                }
                (CaseId::D, _) => {
                    // new_k = max(old_k + xi, new_{k-1}).
                    for (x, pr, pr_f) in [
                        (0i64, q.clone(), 1.0 - pk_f),
                        (1i64, pk.clone(), pk_f),
                    ] {
                        let mut v = old_k + x;
                        if let Some(b) = bound {
                            v = v.max(b);
                        }
                        push(make_key(v), pr * mass.clone(), pr_f * mass_f, &mut next);
                    }
                }
            }
        }
        cur = next;
        if prune_eps > 0.0 {
            let mut pruned: Vec<Vec<i64>> = Vec::new();
            for (key, (_, mf)) in cur.iter() {
                if *mf < prune_eps {
                    pruned.push(key.clone());
                }
            }
            for key in pruned {
                if let Some((m, _)) = cur.remove(&key) {
                    *tail += m;
                }
            }
        }
    }
    cur
}

fn dist_to_kernel(dist: Dist, cap: Option<u64>, tail: Rational) -> SparseKernel {
    let support = dist
        .into_iter()
        .filter(|(_, (m, _))| !m.is_zero())
        .map(|(k, (m, _))| (k, m))
        .collect();
    SparseKernel {
        support,
        window_cap: cap,
        tail_bound: tail,
    }
}

/// Exact distribution of Y(1) given Y(0) = y, geometric innovations
/// truncated at the displacement cap.
pub fn one_step_kernel_capped(
    case: CaseId,
    y: &OrderedState,
    p: &WeightVector,
    cap: u64,
) -> Result<SparseKernel> {
    n_step_kernel(case, y, 1, p, cap)
}

/// Exact one-step distribution with a default cap certified below 1e-15
/// for geometric cases; Bernoulli cases are exact with zero tail.
pub fn one_step_kernel(case: CaseId, y: &OrderedState, p: &WeightVector) -> Result<SparseKernel> {
    let cap = match case.jump_law() {
        JumpLaw::Bernoulli => 1,
        JumpLaw::Geometric => default_cap(p, y.len(), 1, 1e-15),
    };
    one_step_kernel_capped(case, y, p, cap)
}

fn default_cap(p: &WeightVector, n_particles: usize, steps: usize, tol: f64) -> u64 {
    let pmax = p
        .entries()
        .iter()
        .map(rat_to_f64)
        .fold(0.0f64, f64::max);
    let draws = (n_particles * steps) as f64;
    let mut cap = 1u64;
    while draws * pmax.powi(cap as i32 + 1) / (1.0 - pmax) >= tol && cap < 100_000 {
        cap += 1;
    }
    cap
}

/// Exact n-fold composition of the one-step kernel, geometric innovations
/// truncated at `cap` per draw; dropped mass is tracked exactly in the
/// tail bound, so support mass + tail = 1 exactly.
pub fn n_step_kernel(
    case: CaseId,
    y: &OrderedState,
    n: usize,
    p: &WeightVector,
    cap: u64,
) -> Result<SparseKernel> {
    n_step_kernel_pruned(case, y, n, p, cap, 0.0)
}

pub fn n_step_kernel_pruned(
    case: CaseId,
    y: &OrderedState,
    n: usize,
    p: &WeightVector,
    cap: u64,
    prune_eps: f64,
) -> Result<SparseKernel> {
    check_probabilities(p)?;
    if p.len() != y.len() {
        return Err(Error::Dimension("weight/state length mismatch".into()));
    }
    if y.chamber() != case.chamber() {
        return Err(Error::ChamberViolation("source state chamber".into()));
    }
    let mut dist: Dist = HashMap::new();
    dist.insert(y.values().to_vec(), (Rational::one(), 1.0));
    let mut tail = Rational::zero();
    for _ in 0..n {
        dist = advance_step(case, dist, p, cap, prune_eps, &mut tail);
    }
    let window = match case.jump_law() {
        JumpLaw::Geometric => Some(cap),
        JumpLaw::Bernoulli => None,
    };
    Ok(dist_to_kernel(dist, window, tail))
}

/// n-step kernel with the window auto-grown until the exact tail bound is
/// below `tol`.  Errors if the cap would grow past any reasonable size.
pub fn n_step_kernel_certified(
    case: CaseId,
    y: &OrderedState,
    n: usize,
    p: &WeightVector,
    tol: &Rational,
) -> Result<SparseKernel> {
    let tol_f = rat_to_f64(tol);
    if case.jump_law() == JumpLaw::Bernoulli {
        return n_step_kernel(case, y, n, p, 1);
    }
    let mut cap = default_cap(p, y.len(), n, tol_f * 0.25);
    // Pruning contributes (number of dropped keys) * prune to the exact
    // tail; a fraction of tol per key leaves ample headroom at desk
    // scale, and the loop tightens on a miss anyway.
    let mut prune = tol_f * 5e-7;
    for _ in 0..12 {
        let kernel = n_step_kernel_pruned(case, y, n, p, cap, prune)?;
        if kernel.tail_bound() < tol {
            return Ok(kernel);
        }
        cap += cap / 2 + 8;
        prune /= 64.0;
    }
    Err(Error::UncertifiedWindow(format!(
        "tail bound above tolerance after growing cap to {cap}"
    )))
}

/// The determinant factor of the transition kernel formula.
pub fn theorem_det(
    case: CaseId,
    y: &OrderedState,
    yp: &OrderedState,
    n: usize,
    p: &WeightVector,
) -> Result<Rational> {
    let nn = y.len();
    let weights = case.transform_weights(p)?;
    let family = case.family();
    let orientation = case.orientation();
    let sign = case.arg_sign();
    let mut rows = Vec::with_capacity(nn);
    for i in 1..=nn {
        let mut row = Vec::with_capacity(nn);
        for j in 1..=nn {
            let arg = yp.values()[i - 1] - y.values()[j - 1] + sign * (i as i64 - j as i64);
            row.push(transform_f(
                family,
                orientation,
                n as i64,
                i,
                j,
                &weights,
                arg,
            )?);
        }
        rows.push(row);
    }
    Matrix::from_rows(rows)?.det()
}

/// Exact transition probability Q_n(y, y') from the determinantal formula.
pub fn theorem_kernel(
    case: CaseId,
    y: &OrderedState,
    yp: &OrderedState,
    n: usize,
    p: &WeightVector,
) -> Result<Rational> {
    check_probabilities(p)?;
    if y.len() != yp.len() || y.len() != p.len() {
        return Err(Error::Dimension("state/weight length mismatch".into()));
    }
    let chamber = case.chamber();
    if y.chamber() != chamber || yp.chamber() != chamber {
        return Err(Error::ChamberViolation(format!(
            "states must lie in the chamber of case {case:?}"
        )));
    }
    let theta = case.theta(p)?;
    let mut prefactor = Rational::one();
    for k in 0..y.len() {
        let pk = &p.entries()[k];
        prefactor *= rat_pow(&(Rational::one() - pk), n as i64);
        prefactor *= rat_pow(&theta.entries()[k], yp.values()[k] - y.values()[k]);
    }
    Ok(prefactor * theorem_det(case, y, yp, n, p)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeFamily {
    /// weights p, basis w_n (cases A and C).
    Geometric,
    /// weights pi, basis v_n (cases B and D).
    Bernoulli,
}

/// Karlin-McGregor type transition kernel of the shape process Z.
pub fn shape_kernel(
    family: ShapeFamily,
    z: &Shape,
    zp: &Shape,
    n: usize,
    p: &WeightVector,
) -> Result<Rational> {
    check_probabilities(p)?;
    let nn = z.len();
    if zp.len() != nn || p.len() != nn {
        return Err(Error::Dimension("shape/weight length mismatch".into()));
    }
    let (theta, basis) = match family {
        ShapeFamily::Geometric => (p.clone(), Family::W),
        ShapeFamily::Bernoulli => (pi_vector(p)?, Family::V),
    };
    let det = Matrix::from_fn(nn, nn, |i, j| {
        let arg = zp.part(i + 1) - z.part(j + 1) - (i as i64 + 1) + (j as i64 + 1);
        jump_basis(basis, n as i64, arg)
    })
    .det()?;
    if det.is_zero() {
        return Ok(Rational::zero());
    }
    let mut prefactor = Rational::one();
    for pk in p.entries() {
        prefactor *= rat_pow(&(Rational::one() - pk), n as i64);
    }
    let ratio = schur(zp, &theta)? / schur(z, &theta)?;
    Ok(prefactor * ratio * det)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub estimate: Rational,
    pub stderr_bound: Rational,
    pub hits: u64,
    pub reps: u64,
}

/// Empirical frequency of Y(n) = yp over independent replicas; replica r
/// uses a seed derived from (seed, r), so the result does not depend on
/// any parallel scheduling.
pub fn mc_estimate(
    case: CaseId,
    y: &OrderedState,
    yp: &OrderedState,
    n: usize,
    p: &WeightVector,
    reps: u64,
    seed: u64,
) -> Result<McEstimate> {
    if reps == 0 {
        return Err(Error::Domain("reps must be at least 1".into()));
    }
    check_probabilities(p)?;
    let law = case.jump_law();
    let thresholds: Vec<u128> = p.entries().iter().map(bernoulli_threshold).collect();
    let mut hits = 0u64;
    for r in 0..reps {
        let mut rng = derive_rng(seed, r.wrapping_add(1));
        let mut state = y.clone();
        for _ in 0..n {
            let xi: Vec<u64> = thresholds
                .iter()
                .map(|&t| draw_innovation(&mut rng, law, t))
                .collect();
            state = step_case(case, &state, &xi)?;
        }
        if state.values() == yp.values() {
            hits += 1;
        }
    }
    // floor(sqrt(reps)) <= sqrt(reps), so 1/(2 floor(sqrt)) >= 1/(2 sqrt).
    let isqrt = {
        let mut s = (reps as f64).sqrt() as u64;
        while (s + 1) * (s + 1) <= reps {
            s += 1;
        }
        while s * s > reps {
            s -= 1;
        }
        s.max(1)
    };
    Ok(McEstimate {
        estimate: Rational::new(Int::from(hits), Int::from(reps)),
        stderr_bound: Rational::new(Int::from(1), Int::from(2 * isqrt)),
        hits,
        reps,
    })
}
