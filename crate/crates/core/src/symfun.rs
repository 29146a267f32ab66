//! Symmetric-function primitives: complete homogeneous and elementary
//! polynomials, their windowed variants, the w/v jump-basis families, the
//! f-transforms appearing in the determinantal kernels, Schur polynomials,
//! and skew tableau counts.
//!
//! Everything is evaluated exactly over rationals.  The single genuinely
//! infinite series (the forward w-transform with a nonempty window) is
//! evaluated in closed form by partial fractions: the series is the Laurent
//! coefficient of a rational function in the annulus between the largest
//! window weight and 1, and that coefficient is extracted exactly.

use num::{One, Zero};

use crate::exactnum::{binomial, rat_pow, Matrix, Scalar};
use crate::{Error, Int, Rational, Result};

/// Strictly positive weights, length N >= 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    alpha: Vec<Rational>,
}

impl WeightVector {
    pub fn new(alpha: Vec<Rational>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::Domain("weight vector must be non-empty".into()));
        }
        if alpha.iter().any(|a| *a <= Rational::zero()) {
            return Err(Error::Domain("weights must be strictly positive".into()));
        }
        Ok(WeightVector { alpha })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn entries(&self) -> &[Rational] {
        &self.alpha
    }

    /// 1-based access: alpha_k.
    pub fn at(&self, k: usize) -> &Rational {
        &self.alpha[k - 1]
    }

    /// The window alpha_{i+1}, ..., alpha_j (0 <= i <= j <= N).
    pub fn window(&self, i: usize, j: usize) -> &[Rational] {
        &self.alpha[i..j]
    }

    pub fn inverse(&self) -> WeightVector {
        WeightVector {
            alpha: self.alpha.iter().map(|a| a.recip()).collect(),
        }
    }

    /// prod_k alpha_k^{v_k}.
    pub fn monomial(&self, exponents: &[i64]) -> Rational {
        self.alpha
            .iter()
            .zip(exponents)
            .fold(Rational::one(), |acc, (a, &e)| acc * rat_pow(a, e))
    }
}

/// Weakly decreasing integer vector of fixed length N; negative parts allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape {
    parts: Vec<i64>,
}

impl Shape {
    pub fn new(parts: Vec<i64>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Domain("shape must have at least one part".into()));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Domain(format!(
                "shape parts must be weakly decreasing: {parts:?}"
            )));
        }
        Ok(Shape { parts })
    }

    pub fn zero(n: usize) -> Self {
        Shape {
            parts: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn parts(&self) -> &[i64] {
        &self.parts
    }

    /// 1-based part access.
    pub fn part(&self, i: usize) -> i64 {
        self.parts[i - 1]
    }

    pub fn shifted(&self, c: i64) -> Shape {
        Shape {
            parts: self.parts.iter().map(|p| p + c).collect(),
        }
    }

    pub fn contains(&self, mu: &Shape) -> bool {
        self.len() == mu.len()
            && self
                .parts
                .iter()
                .zip(mu.parts.iter())
                .all(|(l, m)| l >= m)
    }
}

/// Complete homogeneous symmetric polynomial h_r of the given variables.
/// h_0 = 1, h_r = 0 for r < 0.
pub fn complete_h<T: Scalar>(r: i64, vars: &[T]) -> T {
    if r < 0 {
        return T::zero();
    }
    let r = r as usize;
    let mut h = vec![T::zero(); r + 1];
    h[0] = T::one();
    for a in vars {
        for t in 1..=r {
            let add = a.clone() * h[t - 1].clone();
            h[t] = h[t].clone() + add;
        }
    }
    h.pop().unwrap()
}

/// Elementary symmetric polynomial e_r; 0 outside 0 <= r <= #vars.
pub fn elementary_e<T: Scalar>(r: i64, vars: &[T]) -> T {
    if r < 0 || r as usize > vars.len() {
        return T::zero();
    }
    let r = r as usize;
    let mut e = vec![T::zero(); r + 1];
    e[0] = T::one();
    for a in vars {
        for t in (1..=r).rev() {
            let add = a.clone() * e[t - 1].clone();
            e[t] = e[t].clone() + add;
        }
    }
    e.pop().unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymKind {
    H,
    E,
}

/// Windowed symmetric function h^{(ij)}_r or e^{(ij)}_r in the variables
/// alpha_{i+1}, ..., alpha_j.  Requires i <= j; the diagonal i = j is the
/// indicator of r = 0.  Callers wanting e^{(ji)} with j <= i swap indices.
pub fn windowed(kind: SymKind, r: i64, i: usize, j: usize, alpha: &WeightVector) -> Result<Rational> {
    let n = alpha.len();
    if i > j || j > n {
        return Err(Error::IndexOutOfRange(format!(
            "window ({i},{j}) for N={n}"
        )));
    }
    if i == j {
        return Ok(if r == 0 {
            Rational::one()
        } else {
            Rational::zero()
        });
    }
    let vars = alpha.window(i, j);
    let key = (kind == SymKind::H, r, vars.to_vec());
    if let Some(hit) = WINDOWED_CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return Ok(hit);
    }
    let value = match kind {
        SymKind::H => complete_h(r, vars),
        SymKind::E => elementary_e(r, vars),
    };
    WINDOWED_CACHE.with(|c| c.borrow_mut().insert(key, value.clone()));
    Ok(value)
}

thread_local! {
    static WINDOWED_CACHE: std::cell::RefCell<
        std::collections::HashMap<(bool, i64, Vec<Rational>), Rational>,
    > = std::cell::RefCell::new(std::collections::HashMap::new());
}

/// The two jump-basis families of functions on Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// w_n(k) = C(n-1+k, k) 1(k >= 0, n >= 0): geometric jumps.
    W,
    /// v_n(k) = C(n, k) 1(0 <= k <= n, n >= 0): Bernoulli jumps.
    V,
}

pub fn jump_basis(family: Family, n: i64, k: i64) -> Rational {
    let b = match family {
        Family::W => {
            if k < 0 || n < 0 {
                Int::zero()
            } else {
                binomial(n - 1 + k, k)
            }
        }
        Family::V => {
            if n < 0 || k < 0 || k > n {
                Int::zero()
            } else {
                binomial(n, k)
            }
        }
    };
    Rational::from(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// f^{(ij)}_alpha: series argument k + l.
    Forward,
    /// hat f^{(ij)}_alpha: series argument k - l.
    Hat,
}

/// The transform f^{(ij)}_alpha(k) (forward) or its hat variant, with
/// f = w_n or v_n.  All branches are exact rationals; the infinite
/// forward-w branch is evaluated in closed form and requires every window
/// weight to lie in (0, 1).
pub fn transform_f(
    family: Family,
    orientation: Orientation,
    n: i64,
    i: usize,
    j: usize,
    alpha: &WeightVector,
    k: i64,
) -> Result<Rational> {
    let key = (
        family,
        orientation == Orientation::Hat,
        n,
        i,
        j,
        alpha.entries().to_vec(),
        k,
    );
    if let Some(hit) = TRANSFORM_CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return Ok(hit);
    }
    let value = transform_f_uncached(family, orientation, n, i, j, alpha, k)?;
    TRANSFORM_CACHE.with(|c| c.borrow_mut().insert(key, value.clone()));
    Ok(value)
}

thread_local! {
    static TRANSFORM_CACHE: std::cell::RefCell<
        std::collections::HashMap<
            (Family, bool, i64, usize, usize, Vec<Rational>, i64),
            Rational,
        >,
    > = std::cell::RefCell::new(std::collections::HashMap::new());
}

fn transform_f_uncached(
    family: Family,
    orientation: Orientation,
    n: i64,
    i: usize,
    j: usize,
    alpha: &WeightVector,
    k: i64,
) -> Result<Rational> {
    let nvars = alpha.len();
    if i > nvars || j > nvars {
        return Err(Error::IndexOutOfRange(format!(
            "transform indices ({i},{j}) for N={nvars}"
        )));
    }
    let sgn = match orientation {
        Orientation::Forward => 1i64,
        Orientation::Hat => -1i64,
    };
    if j <= i {
        // Finite alternating sum over the elementary functions of the
        // window {j+1, ..., i}.
        let mut acc = Rational::zero();
        for l in 0..=(i - j) as i64 {
            let e = windowed(SymKind::E, l, j, i, alpha)?;
            if e.is_zero() {
                continue;
            }
            let term = e * jump_basis(family, n, k + sgn * l);
            if l % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        return Ok(acc);
    }
    // i < j from here on.
    match (orientation, family) {
        (Orientation::Hat, _) => {
            // f(k - l) vanishes for l > k in both families.
            let mut acc = Rational::zero();
            for l in 0..=k.max(-1) {
                let h = windowed(SymKind::H, l, i, j, alpha)?;
                if h.is_zero() {
                    continue;
                }
                acc += h * jump_basis(family, n, k - l);
            }
            Ok(acc)
        }
        (Orientation::Forward, Family::V) => {
            // v_n(k + l) vanishes for l > n - k.
            let mut acc = Rational::zero();
            let top = n - k;
            for l in 0..=top.max(-1) {
                let h = windowed(SymKind::H, l, i, j, alpha)?;
                if h.is_zero() {
                    continue;
                }
                acc += h * jump_basis(family, n, k + l);
            }
            Ok(acc)
        }
        (Orientation::Forward, Family::W) => {
            let window = alpha.window(i, j);
            if window
                .iter()
                .any(|a| *a >= Rational::one())
            {
                return Err(Error::Domain(
                    "divergent forward w-transform: window weight >= 1".into(),
                ));
            }
            if n <= 0 {
                // w_n vanishes identically for n < 0 and, under the
                // binomial support convention, for n = 0 as well.
                return Ok(Rational::zero());
            }
            forward_w_series(window, n, k)
        }
    }
}

/// Sum_{l >= 0} h_l(window) w_n(k + l), exactly.  This is the Laurent
/// coefficient of x^k of x^m / (prod_u (x - beta_u) (1 - x)^n) in the
/// annulus max(window) < |x| < 1.
pub fn forward_w_series(window: &[Rational], n: i64, k: i64) -> Result<Rational> {
    debug_assert!(n >= 1);
    let mut poles: Vec<(Rational, usize)> = Vec::new();
    for b in window {
        match poles.iter_mut().find(|(g, _)| g == b) {
            Some((_, m)) => *m += 1,
            None => poles.push((b.clone(), 1)),
        }
    }
    laurent_coefficient(window.len(), &poles, n as usize, k)
}

thread_local! {
    static PF_CACHE: std::cell::RefCell<
        std::collections::HashMap<(usize, Vec<(Rational, usize)>, usize), Vec<Rational>>,
    > = std::cell::RefCell::new(std::collections::HashMap::new());
}

/// Partial fractions: coefficients of 1/(x-g)^e and 1/(1-x)^e in the
/// decomposition of x^m / (prod_u (x - g_u)^{m_u} (1 - x)^n), solved from
/// samples at x = 2, 3, ....  All sample points lie outside (0, 1], so the
/// system is well-posed.  Cached: the decomposition is reused across k.
fn pf_coefficients(m: usize, inner_poles: &[(Rational, usize)], n: usize) -> Result<Vec<Rational>> {
    let key = (m, inner_poles.to_vec(), n);
    if let Some(hit) = PF_CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return Ok(hit);
    }
    let total: usize = inner_poles.iter().map(|(_, mu)| mu).sum::<usize>() + n;
    let mut basis: Vec<Box<dyn Fn(&Rational) -> Rational>> = Vec::new();
    for (g, mu) in inner_poles {
        for e in 1..=*mu {
            let g = g.clone();
            basis.push(Box::new(move |x: &Rational| {
                rat_pow(&(x - &g), -(e as i64))
            }));
        }
    }
    for e in 1..=n {
        basis.push(Box::new(move |x: &Rational| {
            rat_pow(&(Rational::one() - x), -(e as i64))
        }));
    }
    let samples: Vec<Rational> = (2..2 + total as i64)
        .map(|v| Rational::from(Int::from(v)))
        .collect();
    let mat = Matrix::from_fn(total, total, |s, c| basis[c](&samples[s]));
    let rhs: Vec<Rational> = samples
        .iter()
        .map(|x| {
            let mut denom = Rational::one();
            for (g, mu) in inner_poles {
                denom *= rat_pow(&(x - g), *mu as i64);
            }
            denom *= rat_pow(&(Rational::one() - x), n as i64);
            rat_pow(x, m as i64) / denom
        })
        .collect();
    let coeffs = mat.solve(&rhs)?;
    PF_CACHE.with(|c| c.borrow_mut().insert(key, coeffs.clone()));
    Ok(coeffs)
}

/// Exact Laurent coefficient [x^k] of x^m / (prod_u (x - g_u)^{m_u} (1 - x)^n)
/// expanded in the annulus max |g_u| < |x| < 1.  Requires 0 < g_u < 1,
/// distinct g_u, and a proper fraction (m < sum m_u + n).
pub fn laurent_coefficient(
    m: usize,
    inner_poles: &[(Rational, usize)],
    n: usize,
    k: i64,
) -> Result<Rational> {
    let total: usize = inner_poles.iter().map(|(_, mu)| mu).sum::<usize>() + n;
    if m >= total {
        return Err(Error::Domain("improper rational function".into()));
    }
    for (g, _) in inner_poles {
        if *g <= Rational::zero() || *g >= Rational::one() {
            return Err(Error::Domain(
                "inner poles must lie strictly inside (0, 1)".into(),
            ));
        }
    }
    let coeffs = pf_coefficients(m, inner_poles, n)?;

    // Laurent expansions in the annulus:
    //   1/(x-g)^e = sum_{a>=0} w_e(a) g^a x^{-a-e}   (coefficient at k <= -e)
    //   1/(1-x)^e = sum_{b>=0} w_e(b) x^b            (coefficient at k >= 0)
    let mut acc = Rational::zero();
    let mut idx = 0;
    for (g, mu) in inner_poles {
        for e in 1..=*mu as i64 {
            let a = -k - e;
            if a >= 0 {
                acc += coeffs[idx].clone()
                    * Rational::from(binomial(e - 1 + a, a))
                    * rat_pow(g, a);
            }
            idx += 1;
        }
    }
    for e in 1..=n as i64 {
        if k >= 0 {
            acc += coeffs[idx].clone() * Rational::from(binomial(e - 1 + k, k));
        }
        idx += 1;
    }
    Ok(acc)
}

/// Certified upper bound on the truncated tail sum_{l > depth} h_l(window) w_n(k+l).
///
/// With rho = max window weight, m = window size, c = max(k, 0), s = l + c:
/// h_l <= w_m(l) rho^l, w_n(k+l) <= w_n(s), and by Vandermonde
/// w_m(s) w_n(s) <= C(m+n-2+2s, 2s) = w_{m+n-1}(2s), so each term is at most
/// w_{m+n-1}(2s) rho^{s-c}.  With sigma = (1+rho)/2 >= sqrt(rho) the tail is
/// at most rho^{-c} [ (1-sigma)^{-(m+n-1)} - sum_{t <= 2(depth+c)} w_{m+n-1}(t) sigma^t ].
pub fn forward_w_tail_bound(window: &[Rational], n: i64, k: i64, depth: i64) -> Result<Rational> {
    let rho = window
        .iter()
        .cloned()
        .max()
        .ok_or_else(|| Error::Domain("empty window".into()))?;
    if rho >= Rational::one() {
        return Err(Error::Domain("window weight >= 1".into()));
    }
    let m = window.len() as i64;
    let c = k.max(0);
    let d = m + n - 1;
    let sigma = (Rational::one() + rho.clone()) / Rational::from(Int::from(2));
    let mut partial = Rational::zero();
    for t in 0..=2 * (depth + c) {
        partial += jump_basis(Family::W, d, t) * rat_pow(&sigma, t);
    }
    let full = rat_pow(&(Rational::one() - sigma.clone()), -d);
    Ok(rat_pow(&rho, -c) * (full - partial))
}

/// Schur polynomial s_z(alpha) via the Jacobi-Trudi determinant, extended to
/// shapes with negative parts by translation:
/// s_z = (alpha_1 ... alpha_N)^{z_N} s_{z - z_N 1}.
pub fn schur(z: &Shape, alpha: &WeightVector) -> Result<Rational> {
    let n = z.len();
    if alpha.len() != n {
        return Err(Error::Dimension(format!(
            "shape length {} vs weight length {}",
            n,
            alpha.len()
        )));
    }
    let key = (z.parts().to_vec(), alpha.entries().to_vec());
    if let Some(hit) = SCHUR_CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return Ok(hit);
    }
    let base = z.part(n);
    let lam = z.shifted(-base);
    let mat = Matrix::from_fn(n, n, |i, j| {
        let r = lam.part(i + 1) - (i as i64 + 1) + (j as i64 + 1);
        windowed(SymKind::H, r, 0, n, alpha).unwrap_or_else(|_| Rational::zero())
    });
    let det = mat.det()?;
    let shift = alpha
        .entries()
        .iter()
        .fold(Rational::one(), |acc, a| acc * a);
    let value = rat_pow(&shift, base) * det;
    SCHUR_CACHE.with(|c| c.borrow_mut().insert(key, value.clone()));
    Ok(value)
}

thread_local! {
    static SCHUR_CACHE: std::cell::RefCell<
        std::collections::HashMap<(Vec<i64>, Vec<Rational>), Rational>,
    > = std::cell::RefCell::new(std::collections::HashMap::new());
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowMode {
    /// Rows weakly increasing, columns strictly increasing (ordinary SSYT).
    Weak,
    /// Rows strictly increasing, columns weakly increasing (dual count).
    Strict,
}

/// Number of skew semi-standard fillings of lam/mu with entries in {1..k},
/// via the Jacobi-Trudi determinant in the w (weak) or v (strict) basis.
pub fn skew_count(lam: &Shape, mu: &Shape, k: i64, mode: RowMode) -> Result<Int> {
    if !lam.contains(mu) {
        return Err(Error::Domain(format!(
            "{:?} does not contain {:?}",
            lam.parts(),
            mu.parts()
        )));
    }
    if k < 0 {
        return Err(Error::Domain("content bound must be nonnegative".into()));
    }
    if k == 0 {
        // No entries available: only the empty skew shape has a filling.
        // (The determinant cannot be used here since w_0(0) = 0 under the
        // binomial convention in use.)
        return Ok(Int::from(u8::from(lam == mu)));
    }
    let n = lam.len();
    let family = match mode {
        RowMode::Weak => Family::W,
        RowMode::Strict => Family::V,
    };
    let mat = Matrix::from_fn(n, n, |i, j| {
        let arg = lam.part(i + 1) - mu.part(j + 1) - (i as i64 + 1) + (j as i64 + 1);
        jump_basis(family, k, arg)
    });
    let det = mat.det()?;
    if !det.denom().is_one() {
        return Err(Error::Domain("non-integer skew count".into()));
    }
    Ok(det.numer().clone())
}

/// Direct backtracking enumeration of skew fillings; the independent oracle
/// for `skew_count`.
pub fn skew_count_by_enumeration(lam: &Shape, mu: &Shape, k: i64, mode: RowMode) -> Result<Int> {
    if !lam.contains(mu) {
        return Err(Error::Domain("mu not contained in lam".into()));
    }
    let n = lam.len();
    let cells: Vec<(usize, i64)> = (0..n)
        .flat_map(|i| (mu.part(i + 1)..lam.part(i + 1)).map(move |j| (i, j)))
        .collect();
    let mut grid: Vec<std::collections::HashMap<i64, i64>> = vec![Default::default(); n];
    fn fill(
        cells: &[(usize, i64)],
        pos: usize,
        k: i64,
        mode: RowMode,
        grid: &mut Vec<std::collections::HashMap<i64, i64>>,
        count: &mut Int,
    ) {
        if pos == cells.len() {
            *count += 1;
            return;
        }
        let (i, j) = cells[pos];
        let mut lo = 1i64;
        if let Some(&left) = grid[i].get(&(j - 1)) {
            lo = lo.max(match mode {
                RowMode::Weak => left,
                RowMode::Strict => left + 1,
            });
        }
        if i > 0 {
            if let Some(&up) = grid[i - 1].get(&j) {
                lo = lo.max(match mode {
                    RowMode::Weak => up + 1,
                    RowMode::Strict => up,
                });
            }
        }
        for v in lo..=k {
            grid[i].insert(j, v);
            fill(cells, pos + 1, k, mode, grid, count);
        }
        grid[i].remove(&j);
    }
    let mut count = Int::zero();
    fill(&cells, 0, k, mode, &mut grid, &mut count);
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{rat_from as r, rat_int};

    fn wv(entries: &[(i64, i64)]) -> WeightVector {
        WeightVector::new(entries.iter().map(|&(a, b)| r(a, b)).collect()).unwrap()
    }

    #[test]
    fn complete_h_examples() {
        assert_eq!(complete_h(2, &[rat_int(1), rat_int(1)]), rat_int(3));
        assert_eq!(complete_h(-1, &[rat_int(2)]), rat_int(0));
        assert_eq!(complete_h(3, &[r(1, 2), r(1, 3)]), r(65, 216));
        assert_eq!(complete_h(0, &[] as &[Rational]), rat_int(1));
    }

    #[test]
    fn elementary_e_examples() {
        assert_eq!(elementary_e(2, &[rat_int(2), rat_int(3)]), rat_int(6));
        assert_eq!(elementary_e(3, &[rat_int(2), rat_int(3)]), rat_int(0));
        assert_eq!(
            elementary_e(1, &[r(1, 2), r(1, 3), r(1, 4)]),
            r(13, 12)
        );
    }

    #[test]
    fn windowed_examples() {
        let a = wv(&[(1, 2), (1, 3), (1, 4)]);
        assert_eq!(
            windowed(SymKind::H, 2, 1, 3, &a).unwrap(),
            r(37, 144)
        );
        assert_eq!(windowed(SymKind::H, 5, 2, 2, &a).unwrap(), rat_int(0));
        let ab = wv(&[(7, 5), (3, 8)]);
        assert_eq!(windowed(SymKind::E, 1, 1, 2, &ab).unwrap(), r(3, 8));
        assert!(windowed(SymKind::H, 1, 2, 1, &ab).is_err());
        assert!(windowed(SymKind::H, 1, 1, 4, &ab).is_err());
    }

    #[test]
    fn jump_basis_examples() {
        assert_eq!(jump_basis(Family::W, 3, 2), rat_int(6));
        assert_eq!(jump_basis(Family::V, 3, 2), rat_int(3));
        assert_eq!(jump_basis(Family::W, 2, -1), rat_int(0));
        assert_eq!(jump_basis(Family::V, 2, 3), rat_int(0));
        assert_eq!(jump_basis(Family::W, -1, 0), rat_int(0));
    }

    #[test]
    fn transform_hat_diagonal_is_plain_basis() {
        let a = wv(&[(1, 2), (1, 3)]);
        for n in 0..5 {
            for k in -2..6 {
                assert_eq!(
                    transform_f(Family::W, Orientation::Hat, n, 1, 1, &a, k).unwrap(),
                    jump_basis(Family::W, n, k)
                );
            }
        }
    }

    #[test]
    fn transform_forward_v_two_term() {
        let pi = wv(&[(1, 1), (1, 1)]);
        assert_eq!(
            transform_f(Family::V, Orientation::Forward, 1, 2, 1, &pi, -1).unwrap(),
            rat_int(-1)
        );
    }

    #[test]
    fn transform_forward_w_geometric_closed_form() {
        let p = wv(&[(1, 3), (1, 2)]);
        // sum_l p2^l w_1(l) = 1/(1 - p2) = 2.
        assert_eq!(
            transform_f(Family::W, Orientation::Forward, 1, 1, 2, &p, 0).unwrap(),
            rat_int(2)
        );
    }

    #[test]
    fn transform_forward_w_divergence_guard() {
        let bad = wv(&[(1, 2), (3, 2)]);
        assert!(matches!(
            transform_f(Family::W, Orientation::Forward, 1, 1, 2, &bad, 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn forward_w_series_matches_truncation() {
        // Includes a repeated weight to exercise the multiplicity branch.
        let windows: Vec<Vec<Rational>> = vec![
            vec![r(1, 2)],
            vec![r(1, 2), r(1, 3)],
            vec![r(1, 2), r(1, 2)],
            vec![r(2, 5), r(2, 5), r(1, 3)],
        ];
        for window in &windows {
            for n in 1..=4i64 {
                for k in -3..=5i64 {
                    let exact = forward_w_series(window, n, k).unwrap();
                    for depth in [10i64, 20, 40] {
                        let mut partial = Rational::zero();
                        for l in 0..=depth {
                            partial += complete_h(l, window) * jump_basis(Family::W, n, k + l);
                        }
                        let tail = forward_w_tail_bound(window, n, k, depth).unwrap();
                        let diff = exact.clone() - partial;
                        assert!(diff >= Rational::zero(), "partial sums must underestimate");
                        assert!(diff <= tail, "tail bound violated");
                    }
                }
            }
        }
    }

    #[test]
    fn schur_examples() {
        let a = wv(&[(1, 1), (1, 1)]);
        assert_eq!(
            schur(&Shape::new(vec![2, 0]).unwrap(), &a).unwrap(),
            rat_int(3)
        );
        let ab = wv(&[(1, 2), (1, 3)]);
        assert_eq!(
            schur(&Shape::new(vec![1, 1]).unwrap(), &ab).unwrap(),
            r(1, 6)
        );
        assert_eq!(
            schur(&Shape::zero(3), &wv(&[(1, 2), (1, 3), (1, 5)])).unwrap(),
            rat_int(1)
        );
    }

    #[test]
    fn schur_translation_covariance() {
        let a = wv(&[(1, 2), (2, 3), (3, 4)]);
        let z = Shape::new(vec![3, 1, 0]).unwrap();
        let prod: Rational = a.entries().iter().product();
        for c in -2..=2i64 {
            assert_eq!(
                schur(&z.shifted(c), &a).unwrap(),
                rat_pow(&prod, c) * schur(&z, &a).unwrap()
            );
        }
    }

    #[test]
    fn generating_function_h_e_cancellation() {
        let a = wv(&[(1, 2), (2, 3), (3, 5), (1, 7)]);
        for big in 1..=10i64 {
            for t in 1..=big {
                let mut coeff = Rational::zero();
                for s in 0..=t {
                    let term = complete_h(t - s, a.entries())
                        * elementary_e(s, a.entries());
                    if s % 2 == 0 {
                        coeff += term;
                    } else {
                        coeff -= term;
                    }
                }
                assert!(coeff.is_zero(), "coefficient {t} of H(x)E(-x) nonzero");
            }
        }
    }

    #[test]
    fn he_identity() {
        // sum_r (-1)^r e^{(iN)}_r h^{(jN)}_{n-r} = h^{(ji)}_n (j <= i)
        //                                        = (-1)^n e^{(ij)}_n (i <= j).
        let weights = [
            wv(&[(1, 2), (1, 3)]),
            wv(&[(2, 3), (1, 5), (3, 4)]),
            wv(&[(1, 7), (5, 6), (2, 9)]),
        ];
        for a in &weights {
            let nn = a.len();
            for i in 1..=nn {
                for j in 1..=nn {
                    for n in -3..=10i64 {
                        let mut lhs = Rational::zero();
                        for rr in 0..=(nn - i) as i64 {
                            let term = windowed(SymKind::E, rr, i, nn, a).unwrap()
                                * windowed(SymKind::H, n - rr, j, nn, a).unwrap();
                            if rr % 2 == 0 {
                                lhs += term;
                            } else {
                                lhs -= term;
                            }
                        }
                        let rhs = if j <= i {
                            windowed(SymKind::H, n, j, i, a).unwrap()
                        } else {
                            let e = windowed(SymKind::E, n, i, j, a).unwrap();
                            if n.rem_euclid(2) == 0 {
                                e
                            } else {
                                -e
                            }
                        };
                        assert_eq!(lhs, rhs, "i={i} j={j} n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn skew_count_examples() {
        let lam = Shape::new(vec![2, 0]).unwrap();
        let mu = Shape::zero(2);
        assert_eq!(skew_count(&lam, &mu, 2, RowMode::Weak).unwrap(), Int::from(3));
        assert_eq!(
            skew_count(&lam, &lam, 5, RowMode::Weak).unwrap(),
            Int::from(1)
        );
        assert_eq!(
            skew_count(&lam, &lam, 5, RowMode::Strict).unwrap(),
            Int::from(1)
        );
        let col = Shape::new(vec![1, 1]).unwrap();
        assert_eq!(
            skew_count(&col, &mu, 2, RowMode::Weak).unwrap(),
            Int::from(1)
        );
        assert!(skew_count(&mu, &lam, 2, RowMode::Weak).is_err());
    }

    #[test]
    fn skew_count_matches_enumeration() {
        // All shapes with |lam| <= 8, N = 3, parts <= 4, mu inside lam.
        for l1 in 0..=4i64 {
            for l2 in 0..=l1 {
                for l3 in 0..=l2 {
                    if l1 + l2 + l3 > 8 {
                        continue;
                    }
                    let lam = Shape::new(vec![l1, l2, l3]).unwrap();
                    for m1 in 0..=l1 {
                        for m2 in 0..=l2.min(m1) {
                            for m3 in 0..=l3.min(m2) {
                                let mu = Shape::new(vec![m1, m2, m3]).unwrap();
                                for k in 0..=3i64 {
                                    for mode in [RowMode::Weak, RowMode::Strict] {
                                        assert_eq!(
                                            skew_count(&lam, &mu, k, mode).unwrap(),
                                            skew_count_by_enumeration(&lam, &mu, k, mode)
                                                .unwrap(),
                                            "lam={lam:?} mu={mu:?} k={k} {mode:?}"
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
