//! Gelfand-Tsetlin patterns, the intertwining kernels Lambda/Pi and their
//! hatted counterparts, the normalized Markov intertwiners, the
//! Gessel-Viennot path oracle, Cauchy-Binet checking, and recovery of the
//! determinantal kernel core by conjugation.

use std::collections::HashMap;

use num::{One, Signed, Zero};

use crate::exactnum::{rat_pow, Matrix};
use crate::rsk::EdgeSide;
use crate::symfun::{
    jump_basis, schur, windowed, Family, Orientation, Shape, SymKind, WeightVector,
};
use crate::systems::{check_probabilities, CaseId, Chamber, OrderedState};
use crate::{Error, Rational, Result};

/// Triangular array x^1, ..., x^N with the interlacing constraints
/// x^k_{i+1} <= x^{k-1}_i <= x^k_i.  Entries may be negative.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GTPattern {
    levels: Vec<Vec<i64>>,
}

impl GTPattern {
    pub fn new(levels: Vec<Vec<i64>>) -> Result<Self> {
        for (k, level) in levels.iter().enumerate() {
            if level.len() != k + 1 {
                return Err(Error::Dimension(format!(
                    "level {} must have {} entries",
                    k + 1,
                    k + 1
                )));
            }
            if k > 0 {
                let above = &levels[k - 1];
                for i in 0..k {
                    if !(level[i + 1] <= above[i] && above[i] <= level[i]) {
                        return Err(Error::Domain(format!(
                            "interlacing violated at level {} position {}",
                            k + 1,
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(GTPattern { levels })
    }

    pub fn levels(&self) -> &[Vec<i64>] {
        &self.levels
    }

    pub fn size(&self) -> usize {
        self.levels.len()
    }

    /// Top row (x^N_1, ..., x^N_N).
    pub fn shape(&self) -> Shape {
        Shape::new(self.levels.last().unwrap().clone()).unwrap()
    }

    /// Diagonal (x^1_1, x^2_2, ..., x^N_N); lies in W^N.
    pub fn ledge(&self) -> Vec<i64> {
        self.levels.iter().enumerate().map(|(k, l)| l[k]).collect()
    }

    /// First entries (x^1_1, ..., x^N_1); lies in hat W^N.
    pub fn redge(&self) -> Vec<i64> {
        self.levels.iter().map(|l| l[0]).collect()
    }

    /// The involution x^k_i -> -x^k_{k-i+1}.
    pub fn hat(&self) -> GTPattern {
        let levels = self
            .levels
            .iter()
            .map(|l| l.iter().rev().map(|v| -v).collect())
            .collect();
        GTPattern::new(levels).expect("hat preserves interlacing")
    }
}

/// alpha^x = alpha_1^{x^1_1} prod_{k>=2} alpha_k^{sum x^k - sum x^{k-1}}.
pub fn pattern_weight(x: &GTPattern, alpha: &WeightVector) -> Result<Rational> {
    if alpha.len() != x.size() {
        return Err(Error::Dimension("weight/pattern size mismatch".into()));
    }
    let mut acc = Rational::one();
    let mut prev_sum = 0i64;
    for (k, level) in x.levels().iter().enumerate() {
        let s: i64 = level.iter().sum();
        acc *= rat_pow(&alpha.entries()[k], s - prev_sum);
        prev_sum = s;
    }
    Ok(acc)
}

/// All GT patterns with top row z, optionally filtered by an edge.
pub fn enumerate_gt(
    z: &Shape,
    edge_constraint: Option<(EdgeSide, &[i64])>,
) -> Result<Vec<GTPattern>> {
    let n = z.len();
    if let Some((_, v)) = edge_constraint {
        if v.len() != n {
            return Err(Error::Dimension("edge constraint length mismatch".into()));
        }
    }
    let mut out = Vec::new();
    let mut levels: Vec<Vec<i64>> = vec![Vec::new(); n];
    levels[n - 1] = z.parts().to_vec();
    // Fill levels from N-1 down to 1; prune on the edge constraint as soon
    // as the constrained entry is fixed.
    fn rec(
        k: usize, // level being filled, 0-based; level k has k+1 entries
        levels: &mut Vec<Vec<i64>>,
        constraint: &Option<(EdgeSide, Vec<i64>)>,
        out: &mut Vec<GTPattern>,
    ) {
        if let Some((side, v)) = constraint {
            // level k+1 (0-based index k+1 .. already filled) checks
            let filled = &levels[k + 1];
            let ok = match side {
                EdgeSide::Ledge => filled[k + 1] == v[k + 1],
                EdgeSide::Redge => filled[0] == v[k + 1],
            };
            if !ok {
                return;
            }
        }
        if k == usize::MAX {
            unreachable!()
        }
        // enumerate level k (k+1 entries) interlacing with level k+1
        let above = levels[k + 1].clone();
        fn fill_level(
            pos: usize,
            k: usize,
            above: &[i64],
            current: &mut Vec<i64>,
            levels: &mut Vec<Vec<i64>>,
            constraint: &Option<(EdgeSide, Vec<i64>)>,
            out: &mut Vec<GTPattern>,
        ) {
            if pos == k + 1 {
                levels[k] = current.clone();
                if k == 0 {
                    if let Some((side, v)) = constraint {
                        let ok = match side {
                            EdgeSide::Ledge | EdgeSide::Redge => levels[0][0] == v[0],
                        };
                        if !ok {
                            return;
                        }
                    }
                    out.push(GTPattern::new(levels.clone()).unwrap());
                } else {
                    rec(k - 1, levels, constraint, out);
                }
                return;
            }
            // x^k_{pos} in [above[pos+1], above[pos]] (1-based: level k+1),
            // also weakly decreasing within the level is implied.
            let lo = above[pos + 1];
            let hi = above[pos];
            for v in lo..=hi {
                current.push(v);
                fill_level(pos + 1, k, above, current, levels, constraint, out);
                current.pop();
            }
        }
        let mut current = Vec::with_capacity(k + 1);
        fill_level(0, k, &above, &mut current, levels, constraint, out);
    }
    let constraint = edge_constraint.map(|(s, v)| (s, v.to_vec()));
    if n == 1 {
        let ok = match &constraint {
            None => true,
            Some((_, v)) => v[0] == z.part(1),
        };
        if ok {
            out.push(GTPattern::new(vec![z.parts().to_vec()]).unwrap());
        }
    } else {
        // check constraint on the top level first
        let top_ok = match &constraint {
            None => true,
            Some((side, v)) => match side {
                EdgeSide::Ledge => levels[n - 1][n - 1] == v[n - 1],
                EdgeSide::Redge => levels[n - 1][0] == v[n - 1],
            },
        };
        if top_ok {
            rec(n - 2, &mut levels, &constraint, &mut out);
        }
    }
    Ok(out)
}

/// Which edge the kernel reads: left (Lambda/Pi over W^N) or right
/// (hatted kernels, states in hat W^N, symmetric functions at alpha^{-1}).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntertwinerKind {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaMethod {
    Enum,
    Det,
    Gv,
}

fn reversed_negated(parts: &[i64]) -> Vec<i64> {
    parts.iter().rev().map(|v| -v).collect()
}

/// Lambda(z, y) by pattern enumeration, determinant, or the
/// Gessel-Viennot non-intersecting path sum.  The right kind evaluates
/// the hatted kernel via the involution: LambdaHat_a(z,y) =
/// Lambda_{a^{-1}}(zhat, -y) with zhat_i = -z_{N+1-i}.
pub fn lambda_kernel(
    z: &Shape,
    y: &OrderedState,
    alpha: &WeightVector,
    kind: IntertwinerKind,
    method: LambdaMethod,
) -> Result<Rational> {
    let n = z.len();
    if y.len() != n || alpha.len() != n {
        return Err(Error::Dimension("lambda argument size mismatch".into()));
    }
    match kind {
        IntertwinerKind::Left => {
            if y.chamber() != Chamber::Decreasing {
                return Err(Error::ChamberViolation("left kind needs y in W^N".into()));
            }
            lambda_left(z, y.values(), alpha, method)
        }
        IntertwinerKind::Right => {
            if y.chamber() != Chamber::Increasing {
                return Err(Error::ChamberViolation(
                    "right kind needs y in hat W^N".into(),
                ));
            }
            let zhat = Shape::new(reversed_negated(z.parts()))?;
            let yneg: Vec<i64> = y.values().iter().map(|v| -v).collect();
            lambda_left(&zhat, &yneg, &alpha.inverse(), method)
        }
    }
}

fn lambda_left(z: &Shape, y: &[i64], alpha: &WeightVector, method: LambdaMethod) -> Result<Rational> {
    let n = z.len();
    match method {
        LambdaMethod::Det => Matrix::from_fn(n, n, |i, j| {
            let r = z.part(i + 1) - y[j] - (i as i64 + 1) + (j as i64 + 1);
            windowed(SymKind::H, r, j + 1, n, alpha).unwrap_or_else(|_| Rational::zero())
        })
        .det(),
        LambdaMethod::Enum => {
            let state = OrderedState::new(y.to_vec(), Chamber::Decreasing)?;
            let mut acc = Rational::zero();
            for x in enumerate_gt(z, Some((EdgeSide::Ledge, state.values())))? {
                acc += pattern_weight(&x, alpha)?;
            }
            for (k, yk) in y.iter().enumerate() {
                acc *= rat_pow(&alpha.entries()[k], -yk);
            }
            Ok(acc)
        }
        LambdaMethod::Gv => gv_path_sum(z, y, alpha),
    }
}

/// Gessel-Viennot oracle: sum over (N-1)-tuples of vertex-disjoint
/// up-right paths, path k from (y_k - k, k+1) to (z_k - k, N), weighted by
/// alpha_r per horizontal edge at height r.  Independent of the
/// determinant machinery.
fn gv_path_sum(z: &Shape, y: &[i64], alpha: &WeightVector) -> Result<Rational> {
    let n = z.len();
    if z.part(n) != y[n - 1] {
        return Ok(Rational::zero());
    }
    if n == 1 {
        return Ok(Rational::one());
    }
    // Path k (1-based, k < N) is encoded by its heights profile
    // t_k .. t_N with t_k = y_k, t_N = z_k, weakly increasing; the path
    // occupies vertices (x, r) for r in [k+1, N], x in [t_{r-1}-k, t_r-k].
    // Weight: prod_{r=k+1}^N alpha_r^{t_r - t_{r-1}}.
    struct Ctx<'a> {
        n: usize,
        z: &'a Shape,
        y: &'a [i64],
        alpha: &'a WeightVector,
        used: std::collections::HashSet<(i64, usize)>,
        acc: Rational,
    }
    fn paths_for(ctx: &mut Ctx, k: usize, weight: Rational) {
        if k == ctx.n {
            ctx.acc += weight;
            return;
        }
        // enumerate profile for path k
        fn extend(
            ctx: &mut Ctx,
            k: usize,
            r: usize,
            prev: i64,
            weight: Rational,
            claimed: &mut Vec<(i64, usize)>,
        ) {
            if r > ctx.n {
                let next_weight = weight;
                paths_for(ctx, k + 1, next_weight);
                return;
            }
            let hi = ctx.z.part(k); // t_r <= z_k since profile increases to z_k
            for t in prev..=hi {
                if r == ctx.n && t != ctx.z.part(k) {
                    continue;
                }
                // claim vertices (x, r) for x in [prev-k, t-k]
                let mut ok = true;
                let mut newly = Vec::new();
                for x in (prev - k as i64)..=(t - k as i64) {
                    let v = (x, r);
                    if ctx.used.contains(&v) {
                        ok = false;
                        break;
                    }
                    ctx.used.insert(v);
                    newly.push(v);
                }
                if ok {
                    let w = weight.clone() * rat_pow(&ctx.alpha.entries()[r - 1], t - prev);
                    claimed.extend(newly.iter().copied());
                    extend(ctx, k, r + 1, t, w, claimed);
                    for v in newly.drain(..) {
                        ctx.used.remove(&v);
                        claimed.pop();
                    }
                } else {
                    for v in newly {
                        ctx.used.remove(&v);
                    }
                }
            }
        }
        let start = ctx.y[k - 1];
        let mut claimed = Vec::new();
        extend(ctx, k, k + 1, start, weight, &mut claimed);
    }
    let mut ctx = Ctx {
        n,
        z,
        y,
        alpha,
        used: Default::default(),
        acc: Rational::zero(),
    };
    paths_for(&mut ctx, 1, Rational::one());
    Ok(ctx.acc)
}

/// Pi(y, z), the two-sided inverse of Lambda; right kind is the hatted
/// version via the same involution as `lambda_kernel`.
pub fn pi_kernel(
    y: &OrderedState,
    z: &Shape,
    alpha: &WeightVector,
    kind: IntertwinerKind,
) -> Result<Rational> {
    let n = z.len();
    if y.len() != n || alpha.len() != n {
        return Err(Error::Dimension("pi argument size mismatch".into()));
    }
    match kind {
        IntertwinerKind::Left => {
            if y.chamber() != Chamber::Decreasing {
                return Err(Error::ChamberViolation("left kind needs y in W^N".into()));
            }
            pi_left(y.values(), z.parts(), alpha)
        }
        IntertwinerKind::Right => {
            if y.chamber() != Chamber::Increasing {
                return Err(Error::ChamberViolation(
                    "right kind needs y in hat W^N".into(),
                ));
            }
            let yneg: Vec<i64> = y.values().iter().map(|v| -v).collect();
            let zhat = reversed_negated(z.parts());
            pi_left(&yneg, &zhat, &alpha.inverse())
        }
    }
}

fn pi_left(y: &[i64], z: &[i64], alpha: &WeightVector) -> Result<Rational> {
    let n = y.len();
    Matrix::from_fn(n, n, |i, j| {
        let r = y[i] - z[j] - (i as i64 + 1) + (j as i64 + 1);
        let e = windowed(SymKind::E, r, i + 1, n, alpha).unwrap_or_else(|_| Rational::zero());
        if r.rem_euclid(2) == 1 {
            -e
        } else {
            e
        }
    })
    .det()
}

/// Normalized Markov intertwiner K_alpha(z,y) (left) or KHat (right):
/// tableau-sum over s_z.  Evaluated both by GT enumeration and through the
/// determinantal Lambda; the two must agree.
pub fn markov_intertwiner(
    z: &Shape,
    y: &OrderedState,
    alpha: &WeightVector,
    kind: IntertwinerKind,
) -> Result<Rational> {
    if z.part(z.len()) < 0 {
        return Err(Error::Domain(
            "markov_intertwiner requires z_N >= 0 (tableau regime)".into(),
        ));
    }
    let via_det = markov_intertwiner_via_lambda(z, y, alpha, kind)?;
    let via_enum = markov_intertwiner_by_enumeration(z, y, alpha, kind)?;
    if via_det != via_enum {
        return Err(Error::Domain(format!(
            "intertwiner evaluations disagree: {via_det} vs {via_enum}"
        )));
    }
    Ok(via_det)
}

/// alpha^y Lambda(z,y) / s_z(alpha) (and the hatted analogue).
pub fn markov_intertwiner_via_lambda(
    z: &Shape,
    y: &OrderedState,
    alpha: &WeightVector,
    kind: IntertwinerKind,
) -> Result<Rational> {
    let lam = lambda_kernel(z, y, alpha, kind, LambdaMethod::Det)?;
    let mut acc = lam / schur(z, alpha)?;
    for (k, yk) in y.values().iter().enumerate() {
        acc *= rat_pow(&alpha.entries()[k], *yk);
    }
    Ok(acc)
}

/// Direct tableau-sum evaluation through GT patterns (valid for z_N >= 0,
/// where patterns with top row z are exactly the SSYT of shape z).
pub fn markov_intertwiner_by_enumeration(
    z: &Shape,
    y: &OrderedState,
    alpha: &WeightVector,
    kind: IntertwinerKind,
) -> Result<Rational> {
    let side = match kind {
        IntertwinerKind::Left => EdgeSide::Ledge,
        IntertwinerKind::Right => EdgeSide::Redge,
    };
    let mut acc = Rational::zero();
    for x in enumerate_gt(z, Some((side, y.values())))? {
        acc += pattern_weight(&x, alpha)?;
    }
    Ok(acc / schur(z, alpha)?)
}

/// Finitely-supported function tables phi_i, psi_j on Z (1-based outer
/// index).  Both sides of the Cauchy-Binet identity are computed; the
/// window must certifiably contain every support point.
pub fn cauchy_binet_check(
    phi: &[HashMap<i64, Rational>],
    psi: &[HashMap<i64, Rational>],
    window: (i64, i64),
) -> Result<(Rational, Rational)> {
    let n = phi.len();
    if psi.len() != n || n == 0 {
        return Err(Error::Dimension("phi/psi size mismatch".into()));
    }
    let (lo, hi) = window;
    for table in phi.iter().chain(psi.iter()) {
        if table.keys().any(|&k| k < lo || k > hi) {
            return Err(Error::UncertifiedWindow(
                "support escapes the declared window".into(),
            ));
        }
    }
    let at = |t: &HashMap<i64, Rational>, k: i64| t.get(&k).cloned().unwrap_or_else(Rational::zero);
    // lhs: sum over decreasing z of det{phi_i(z_j - j)} det{psi_j(z_i - i)}
    let mut lhs = Rational::zero();
    let mut stack: Vec<i64> = Vec::new();
    fn walk(
        stack: &mut Vec<i64>,
        n: usize,
        lo: i64,
        hi: i64,
        f: &mut dyn FnMut(&[i64]),
    ) {
        if stack.len() == n {
            f(stack);
            return;
        }
        let top = stack.last().copied().unwrap_or(i64::MAX);
        // z_j - j must stay within [lo, hi] for a nonzero product
        let j = stack.len() as i64 + 1;
        let lo_j = lo + j;
        let hi_j = (hi + j).min(if top == i64::MAX { hi + j } else { top });
        for v in lo_j..=hi_j {
            stack.push(v);
            walk(stack, n, lo, hi, f);
            stack.pop();
        }
    }
    walk(&mut stack, n, lo, hi, &mut |z: &[i64]| {
        let a = Matrix::from_fn(n, n, |i, j| at(&phi[i], z[j] - (j as i64 + 1)))
            .det()
            .unwrap();
        if a.is_zero() {
            return;
        }
        let b = Matrix::from_fn(n, n, |i, j| at(&psi[j], z[i] - (i as i64 + 1)))
            .det()
            .unwrap();
        lhs += a * b;
    });
    let rhs = Matrix::from_fn(n, n, |i, j| {
        let mut s = Rational::zero();
        for (k, v) in &phi[i] {
            s += v.clone() * at(&psi[j], *k);
        }
        s
    })
    .det()?;
    Ok((lhs, rhs))
}

/// Output of `q_core_via_conjugation`: the determinant core evaluated
/// directly and by the triple sum Pi P-core Lambda, with the exact tail
/// bound on the truncation (zero when all sums are intrinsically finite).
#[derive(Debug, Clone, PartialEq)]
pub struct QCore {
    pub direct: Rational,
    pub conjugated: Rational,
    pub tail_bound: Rational,
}

/// Enumerate weakly decreasing integer vectors with per-coordinate ranges.
pub(crate) fn decreasing_vectors(ranges: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur: Vec<i64> = Vec::new();
    fn rec(ranges: &[(i64, i64)], cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == ranges.len() {
            out.push(cur.clone());
            return;
        }
        let (lo, hi) = ranges[cur.len()];
        let cap = cur.last().copied().unwrap_or(i64::MAX).min(hi);
        for v in lo..=cap {
            cur.push(v);
            rec(ranges, cur, out);
            cur.pop();
        }
    }
    rec(ranges, &mut cur, &mut out);
    out
}

/// Raw determinant of basis values, det{f_n(z'_i - z_j - i + j)}: the
/// shape kernel stripped of its prefactor and Schur ratio.
pub fn p_core(family: Family, z: &[i64], zp: &[i64], n: usize) -> Result<Rational> {
    let nn = z.len();
    Matrix::from_fn(nn, nn, |i, j| {
        jump_basis(family, n as i64, zp[i] - z[j] - (i as i64 + 1) + (j as i64 + 1))
    })
    .det()
}

/// The determinant core of the Theorem's kernel computed two ways: the
/// direct transform determinant, and the conjugation Pi P-core Lambda of
/// the Corollaries (hatted kernels for the pushing cases).  `window` caps
/// the one unbounded summation direction (case C); the dropped mass is
/// bounded exactly via row-stochasticity of the shape kernel and the
/// Markov intertwiner.
pub fn q_core_via_conjugation(
    case: CaseId,
    y: &OrderedState,
    yp: &OrderedState,
    n: usize,
    p: &WeightVector,
    window: i64,
) -> Result<QCore> {
    check_probabilities(p)?;
    let nn = y.len();
    if yp.len() != nn || p.len() != nn {
        return Err(Error::Dimension("argument size mismatch".into()));
    }
    let chamber = case.chamber();
    if y.chamber() != chamber || yp.chamber() != chamber {
        return Err(Error::ChamberViolation("states must match the case".into()));
    }
    let direct = crate::systems::theorem_det(case, y, yp, n, p)?;
    let alpha = case.theta(p)?;
    let family = case.family();

    // Work in left coordinates: the hatted kernels reduce to the left ones
    // at beta = alpha^{-1} with reversed-negated shape arguments; P-core is
    // symmetric under simultaneous reversal-negation of both shapes.
    let (yv, ypv, beta) = match case.orientation() {
        Orientation::Forward => (
            y.values().to_vec(),
            yp.values().to_vec(),
            alpha.clone(),
        ),
        Orientation::Hat => (
            y.values().iter().map(|v| -v).collect(),
            yp.values().iter().map(|v| -v).collect(),
            alpha.inverse(),
        ),
    };
    // Now conjugated(y, yp) = sum_{z, zp in W^N} Pi_beta(yv, z)
    //   p_core_beta-oriented(z, zp) Lambda_beta(zp, ypv), where for hat
    //   cases the P-core argument shapes are the reversal-negations.
    let reorient = |v: &[i64]| -> Vec<i64> {
        match case.orientation() {
            Orientation::Forward => v.to_vec(),
            Orientation::Hat => reversed_negated(v),
        }
    };

    // z-range from the support of Pi_beta(yv, .): column j nonzero needs
    // some i with 0 <= yv_i - z_j - i + j <= N - i.
    let z_ranges: Vec<(i64, i64)> = (1..=nn as i64)
        .map(|j| {
            let lo = yv.iter().map(|yi| yi + j - nn as i64).min().unwrap();
            let hi = yv
                .iter()
                .enumerate()
                .map(|(i0, yi)| yi - (i0 as i64 + 1) + j)
                .max()
                .unwrap();
            (lo, hi)
        })
        .collect();

    // zp-range: Lambda's h-support forces zp_i >= min_j(ypv_j - j) + i and
    // pins zp_N = ypv_N.  P-core support in these coordinates depends on
    // the orientation: forward is det{f_n(zp_i - z_j - i + j)} (lower
    // bounds, plus upper bounds for v_n), hat is det{f_n(z_j - zp_i + i - j)}
    // (upper bounds, plus lower bounds for v_n).  Only forward-w (case C)
    // is left unbounded above -> window cap with a certified tail.
    let ypv_min = ypv
        .iter()
        .enumerate()
        .map(|(j0, v)| v - (j0 as i64 + 1))
        .min()
        .unwrap();
    let orientation = case.orientation();
    let tol_needed = family == Family::W && orientation == Orientation::Forward;

    let mut conjugated = Rational::zero();
    let mut tail = Rational::zero();
    // Precompute the prefactor pieces of the stochastic shape kernel used
    // by the tail certificate: P_n(z, zp) = c^n (s_zp / s_z) p_core.
    let mut c_pow = Rational::one();
    for pk in p.entries() {
        c_pow *= rat_pow(&(Rational::one() - pk), n as i64);
    }

    for z in decreasing_vectors(&z_ranges) {
        let pi_val = pi_left(&yv, &z, &beta)?;
        if pi_val.is_zero() {
            continue;
        }
        let z_min = z
            .iter()
            .enumerate()
            .map(|(j0, v)| v - (j0 as i64 + 1))
            .min()
            .unwrap();
        let z_max = z
            .iter()
            .enumerate()
            .map(|(j0, v)| v - (j0 as i64 + 1))
            .max()
            .unwrap();
        let zp_ranges: Vec<(i64, i64)> = (1..=nn as i64)
            .map(|i| {
                let mut lo = ypv_min + i;
                #[allow(unused_assignments)]
                let mut hi = i64::MAX;
                match (orientation, family) {
                    (Orientation::Forward, Family::V) => {
                        lo = lo.max(z_min + i);
                        hi = z_max + i + n as i64;
                    }
                    (Orientation::Forward, Family::W) => {
                        lo = lo.max(z_min + i);
                        hi = window;
                    }
                    (Orientation::Hat, Family::W) => {
                        hi = z_max + i;
                    }
                    (Orientation::Hat, Family::V) => {
                        lo = lo.max(z_min + i - n as i64);
                        hi = z_max + i;
                    }
                }
                if i == nn as i64 {
                    // Lambda pins zp_N
                    lo = lo.max(ypv[nn - 1]);
                    hi = hi.min(ypv[nn - 1]);
                }
                (lo, hi)
            })
            .collect();

        let mut inner = Rational::zero();
        for zp in decreasing_vectors(&zp_ranges) {
            let core = p_core(family, &reorient(&z), &reorient(&zp), n)?;
            if core.is_zero() {
                continue;
            }
            let lam = lambda_left(&Shape::new(zp.clone())?, &ypv, &beta, LambdaMethod::Det)?;
            if !lam.is_zero() {
                inner += core * lam;
            }
        }
        if tol_needed {
            // Tail over zp beyond the window, for this z:
            //   sum p_core(z,zp) Lambda(zp,ypv)
            //     = c^{-n} s_z(beta) beta^{-ypv} sum P_n(z,zp) K(zp,ypv)
            //    <= c^{-n} s_z(beta) beta^{-ypv} (1 - sum_box P_n(z,zp)),
            // every factor exact.  The box for the P_n sum must cover the
            // whole of P's support inside the cap, so it drops Lambda's
            // constraints (including the zp_N pin).
            let box_ranges: Vec<(i64, i64)> = (1..=nn as i64)
                .map(|i| (z_min + i, window))
                .collect();
            let mut box_p = Rational::zero();
            for zp in decreasing_vectors(&box_ranges) {
                let core = p_core(family, &z, &zp, n)?;
                if core.is_zero() {
                    continue;
                }
                box_p += core * schur(&Shape::new(zp)?, &beta)?;
            }
            let s_z = schur(&Shape::new(z.clone())?, &beta)?;
            let mut beta_ypv = Rational::one();
            for (k, v) in ypv.iter().enumerate() {
                beta_ypv *= rat_pow(&beta.entries()[k], -v);
            }
            let missing = Rational::one() - c_pow.clone() * box_p / s_z.clone();
            if missing.is_negative() {
                return Err(Error::Domain("box mass exceeds 1".into()));
            }
            tail += pi_val.abs() * rat_pow(&c_pow, -1) * s_z * beta_ypv * missing;
        }
        conjugated += pi_val * inner;
    }
    Ok(QCore {
        direct,
        conjugated,
        tail_bound: tail,
    })
}
