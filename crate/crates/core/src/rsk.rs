//! Row/column insertion, two-line arrays, the four RSK-variant
//! correspondences, edge vectors, and the joint law of the (P, Q) pair.

use num::{One, Zero};

use crate::exactnum::rat_pow;
use crate::symfun::{Shape, WeightVector};
use crate::systems::{pi_vector, CaseId, Chamber, InnovationGrid, JumpLaw, OrderedState};
use crate::{Error, Rational, Result};

/// Semistandard Young tableau: rows weakly increasing, columns strictly
/// increasing.  Entries are 1-based particle labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Tableau {
    rows: Vec<Vec<i64>>,
}

impl Tableau {
    pub fn empty() -> Self {
        Tableau { rows: Vec::new() }
    }

    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        let t = Tableau { rows };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::Dimension("empty tableau row".into()));
            }
            if row.iter().any(|&e| e < 1) {
                return Err(Error::Domain("tableau entries must be positive".into()));
            }
            if row.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Domain(format!("row {i} not weakly increasing")));
            }
            if i > 0 {
                if row.len() > self.rows[i - 1].len() {
                    return Err(Error::Domain("row lengths must weakly decrease".into()));
                }
                if row.iter().zip(&self.rows[i - 1]).any(|(lo, up)| lo <= up) {
                    return Err(Error::Domain(format!(
                        "column through row {i} not strictly increasing"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Shape padded with zero parts to length `n_parts`.
    pub fn shape(&self, n_parts: usize) -> Result<Shape> {
        let mut parts: Vec<i64> = self.rows.iter().map(|r| r.len() as i64).collect();
        if parts.len() > n_parts {
            return Err(Error::Dimension(format!(
                "tableau has {} rows, expected at most {n_parts}",
                parts.len()
            )));
        }
        parts.resize(n_parts, 0);
        Shape::new(parts)
    }

    /// Number of entries equal to `label`.
    pub fn count_label(&self, label: i64) -> i64 {
        self.rows
            .iter()
            .flatten()
            .filter(|&&e| e == label)
            .count() as i64
    }

    pub fn max_entry(&self) -> i64 {
        self.rows.iter().flatten().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertRule {
    Row,
    Column,
}

/// Insert one entry, bumping until an append occurs.
pub fn insert(t: &Tableau, b: i64, rule: InsertRule) -> Result<Tableau> {
    if b < 1 {
        return Err(Error::Domain("inserted entry must be positive".into()));
    }
    let mut rows = t.rows.clone();
    match rule {
        InsertRule::Row => {
            let mut carry = b;
            let mut i = 0;
            loop {
                if i == rows.len() {
                    rows.push(vec![carry]);
                    break;
                }
                // replace the leftmost entry strictly larger than the carry
                match rows[i].iter().position(|&e| e > carry) {
                    None => {
                        rows[i].push(carry);
                        break;
                    }
                    Some(j) => {
                        let bumped = rows[i][j];
                        rows[i][j] = carry;
                        carry = bumped;
                        i += 1;
                    }
                }
            }
        }
        InsertRule::Column => {
            let mut carry = b;
            let mut j = 0;
            loop {
                // uppermost entry in column j that is >= carry
                let hit = (0..rows.len())
                    .filter(|&i| rows[i].len() > j)
                    .find(|&i| rows[i][j] >= carry);
                match hit {
                    None => {
                        // append at the bottom of column j
                        let depth = rows.iter().take_while(|r| r.len() > j).count();
                        if depth == rows.len() {
                            rows.push(vec![carry]);
                        } else {
                            rows[depth].push(carry);
                        }
                        break;
                    }
                    Some(i) => {
                        let bumped = rows[i][j];
                        rows[i][j] = carry;
                        carry = bumped;
                        j += 1;
                    }
                }
            }
        }
    }
    Tableau::new(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayMode {
    Lex,
    Antilex,
}

/// Two-line array of (time, particle) columns, lexicographically or
/// anti-lexicographically ordered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoLineArray {
    columns: Vec<(usize, i64)>,
    mode: ArrayMode,
}

impl TwoLineArray {
    pub fn columns(&self) -> &[(usize, i64)] {
        &self.columns
    }

    pub fn mode(&self) -> ArrayMode {
        self.mode
    }
}

/// The column (a, b) appears xi(b, a) times; within equal a the b's are
/// weakly increasing (lex) or weakly decreasing (antilex).
pub fn build_array(xi: &InnovationGrid, mode: ArrayMode) -> TwoLineArray {
    let mut columns = Vec::new();
    for a in 1..=xi.steps() {
        let mut block = Vec::new();
        for b in 1..=xi.particles() {
            for _ in 0..xi.entry(b, a) {
                block.push((a, b as i64));
            }
        }
        if mode == ArrayMode::Antilex {
            block.reverse();
        }
        columns.extend(block);
    }
    TwoLineArray { columns, mode }
}

/// The four correspondences and their derived attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Rsk,
    DualRsk,
    Burge,
    DualBurge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSide {
    Ledge,
    Redge,
}

impl Variant {
    pub fn all() -> [Variant; 4] {
        [Variant::Rsk, Variant::DualRsk, Variant::Burge, Variant::DualBurge]
    }

    pub fn from_str_loose(s: &str) -> Result<Variant> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rsk" => Ok(Variant::Rsk),
            "dual-rsk" | "dualrsk" => Ok(Variant::DualRsk),
            "burge" => Ok(Variant::Burge),
            "dual-burge" | "dualburge" => Ok(Variant::DualBurge),
            other => Err(Error::Parse(format!("unknown variant '{other}'"))),
        }
    }

    pub fn array_mode(&self) -> ArrayMode {
        match self {
            Variant::Rsk | Variant::DualRsk => ArrayMode::Lex,
            Variant::Burge | Variant::DualBurge => ArrayMode::Antilex,
        }
    }

    pub fn insert_rule(&self) -> InsertRule {
        match self {
            Variant::Rsk | Variant::DualBurge => InsertRule::Row,
            Variant::DualRsk | Variant::Burge => InsertRule::Column,
        }
    }

    pub fn innovation_law(&self) -> JumpLaw {
        match self {
            Variant::Rsk | Variant::Burge => JumpLaw::Geometric,
            Variant::DualRsk | Variant::DualBurge => JumpLaw::Bernoulli,
        }
    }

    /// The particle system whose path this correspondence encodes.
    pub fn matched_case(&self) -> CaseId {
        match self {
            Variant::Rsk => CaseId::A,
            Variant::DualRsk => CaseId::B,
            Variant::Burge => CaseId::C,
            Variant::DualBurge => CaseId::D,
        }
    }

    /// Which edge of the insertion tableau tracks the particle system.
    pub fn edge_side(&self) -> EdgeSide {
        match self {
            Variant::Rsk | Variant::DualBurge => EdgeSide::Redge,
            Variant::DualRsk | Variant::Burge => EdgeSide::Ledge,
        }
    }
}

/// Result of running a correspondence: the insertion tableau after each
/// step, and the shape path Z(0..n).  The recording data Q is the shape
/// path itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrespondResult {
    pub tableaux: Vec<Tableau>,
    pub shapes: Vec<Shape>,
}

impl CorrespondResult {
    pub fn final_tableau(&self) -> &Tableau {
        self.tableaux.last().unwrap()
    }
}

pub fn correspond(variant: Variant, xi: &InnovationGrid) -> Result<CorrespondResult> {
    xi.check_support(variant.innovation_law())?;
    let n_particles = xi.particles();
    let array = build_array(xi, variant.array_mode());
    let rule = variant.insert_rule();
    let mut t = Tableau::empty();
    let mut tableaux = vec![t.clone()];
    let mut shapes = vec![Shape::zero(n_particles)];
    for a in 1..=xi.steps() {
        for &(time, b) in array.columns().iter().filter(|&&(time, _)| time == a) {
            debug_assert_eq!(time, a);
            t = insert(&t, b, rule)?;
        }
        tableaux.push(t.clone());
        shapes.push(t.shape(n_particles)?);
    }
    Ok(CorrespondResult { tableaux, shapes })
}

/// Edge vector of a tableau with entries at most `n_particles`.
pub fn edge_vector(t: &Tableau, side: EdgeSide, n_particles: usize) -> Result<OrderedState> {
    if t.max_entry() > n_particles as i64 {
        return Err(Error::Domain(format!(
            "tableau entry exceeds particle count {n_particles}"
        )));
    }
    let values: Vec<i64> = match side {
        EdgeSide::Ledge => (1..=n_particles as i64)
            .map(|i| {
                t.rows
                    .get(i as usize - 1)
                    .map_or(0, |row| row.iter().filter(|&&e| e == i).count() as i64)
            })
            .collect(),
        EdgeSide::Redge => {
            let first = t.rows.first().map(Vec::as_slice).unwrap_or(&[]);
            (1..=n_particles as i64)
                .map(|i| first.iter().filter(|&&e| e <= i).count() as i64)
                .collect()
        }
    };
    let chamber = match side {
        EdgeSide::Ledge => Chamber::Decreasing,
        EdgeSide::Redge => Chamber::Increasing,
    };
    OrderedState::new(values, chamber)
}

/// P(P(n) = S, Q(n) = T) = prod_k (1-p_k)^n theta^S 1(sh S = sh T), with
/// theta = p for the geometric variants and pi for the Bernoulli ones.
pub fn joint_law(
    variant: Variant,
    s: &Tableau,
    t_shape: &Shape,
    n: usize,
    p: &WeightVector,
) -> Result<Rational> {
    let nn = p.len();
    if s.max_entry() > nn as i64 {
        return Err(Error::Dimension("tableau entry exceeds weight count".into()));
    }
    if s.shape(t_shape.len())? != *t_shape {
        return Ok(Rational::zero());
    }
    let theta = match variant.innovation_law() {
        JumpLaw::Geometric => p.clone(),
        JumpLaw::Bernoulli => pi_vector(p)?,
    };
    let mut acc = Rational::one();
    for k in 1..=nn {
        let pk = &p.entries()[k - 1];
        acc *= rat_pow(&(Rational::one() - pk), n as i64);
        acc *= rat_pow(&theta.entries()[k - 1], s.count_label(k as i64));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rat_from as r;
    use crate::systems::step_case;
    use std::collections::HashMap;

    fn grid(rows: &[&[u64]]) -> InnovationGrid {
        InnovationGrid::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn wv(entries: &[(i64, i64)]) -> WeightVector {
        WeightVector::new(entries.iter().map(|&(a, b)| r(a, b)).collect()).unwrap()
    }

    #[test]
    fn build_array_examples() {
        let xi = grid(&[&[1], &[1]]);
        let lex = build_array(&xi, ArrayMode::Lex);
        assert_eq!(lex.columns(), &[(1, 1), (1, 2)]);
        let anti = build_array(&xi, ArrayMode::Antilex);
        assert_eq!(anti.columns(), &[(1, 2), (1, 1)]);
        let zero = grid(&[&[0, 0], &[0, 0]]);
        assert!(build_array(&zero, ArrayMode::Lex).columns().is_empty());
    }

    #[test]
    fn insert_examples() {
        let t = Tableau::new(vec![vec![1, 2]]).unwrap();
        let row = insert(&t, 1, InsertRule::Row).unwrap();
        assert_eq!(row.rows(), &[vec![1, 1], vec![2]]);
        let col = insert(&t, 1, InsertRule::Column).unwrap();
        assert_eq!(col.rows(), &[vec![1, 1, 2]]);
        let single = insert(&Tableau::empty(), 3, InsertRule::Column).unwrap();
        assert_eq!(single.rows(), &[vec![3]]);
    }

    #[test]
    fn tableau_validation() {
        assert!(Tableau::new(vec![vec![2, 1]]).is_err());
        assert!(Tableau::new(vec![vec![1], vec![1]]).is_err());
        assert!(Tableau::new(vec![vec![1], vec![2, 3]]).is_err());
        assert!(Tableau::new(vec![vec![1, 1], vec![2]]).is_ok());
    }

    #[test]
    fn correspond_examples() {
        let xi = grid(&[&[1], &[1]]);
        let out = correspond(Variant::Rsk, &xi).unwrap();
        assert_eq!(out.final_tableau().rows(), &[vec![1, 2]]);
        assert_eq!(out.shapes[0].parts(), &[0, 0]);
        assert_eq!(out.shapes[1].parts(), &[2, 0]);

        let zero = grid(&[&[0, 0], &[0, 0]]);
        for variant in Variant::all() {
            let out = correspond(variant, &zero).unwrap();
            assert!(out.final_tableau().is_empty());
            assert!(out.shapes.iter().all(|s| s.parts() == [0, 0]));
        }
    }

    #[test]
    fn correspond_rejects_bad_support() {
        let xi = grid(&[&[2], &[0]]);
        assert!(matches!(
            correspond(Variant::DualRsk, &xi),
            Err(Error::SupportMismatch(_))
        ));
    }

    #[test]
    fn edge_vector_examples() {
        let t = Tableau::new(vec![vec![1, 1], vec![2]]).unwrap();
        assert_eq!(edge_vector(&t, EdgeSide::Ledge, 2).unwrap().values(), &[2, 1]);
        assert_eq!(edge_vector(&t, EdgeSide::Redge, 2).unwrap().values(), &[2, 2]);
        let e = Tableau::empty();
        assert_eq!(edge_vector(&e, EdgeSide::Ledge, 3).unwrap().values(), &[0, 0, 0]);
        assert_eq!(edge_vector(&e, EdgeSide::Redge, 3).unwrap().values(), &[0, 0, 0]);
        assert!(edge_vector(&t, EdgeSide::Ledge, 1).is_err());
    }

    #[test]
    fn joint_law_examples() {
        let p = wv(&[(1, 2), (1, 2)]);
        let s = Tableau::new(vec![vec![1, 2]]).unwrap();
        let sh = s.shape(2).unwrap();
        assert_eq!(joint_law(Variant::Rsk, &s, &sh, 1, &p).unwrap(), r(1, 16));
        let wrong = Shape::new(vec![1, 1]).unwrap();
        assert_eq!(
            joint_law(Variant::Rsk, &s, &wrong, 1, &p).unwrap(),
            r(0, 1)
        );
        let empty = Tableau::empty();
        assert_eq!(
            joint_law(Variant::Rsk, &empty, &Shape::zero(2), 1, &p).unwrap(),
            r(1, 4)
        );
    }

    fn enumerate_grids(n_particles: usize, steps: usize, max_entry: u64) -> Vec<InnovationGrid> {
        let cells = n_particles * steps;
        let base = max_entry + 1;
        let mut out = Vec::new();
        for code in 0..base.pow(cells as u32) {
            let mut c = code;
            let mut rows = vec![vec![0u64; steps]; n_particles];
            for k in 0..n_particles {
                for t in 0..steps {
                    rows[k][t] = c % base;
                    c /= base;
                }
            }
            out.push(InnovationGrid::new(rows).unwrap());
        }
        out
    }

    #[test]
    fn coupling_identity_all_variants() {
        for variant in Variant::all() {
            let case = variant.matched_case();
            let side = variant.edge_side();
            let max_entry = match variant.innovation_law() {
                JumpLaw::Bernoulli => 1,
                JumpLaw::Geometric => 2,
            };
            for n_particles in 1..=3usize {
                for steps in 1..=3usize {
                    if n_particles == 3 && steps == 3 && max_entry == 2 {
                        continue; // 3^9 grids; the 2x3 and 3x2 cases already cover the structure
                    }
                    for xi in enumerate_grids(n_particles, steps, max_entry) {
                        let out = correspond(variant, &xi).unwrap();
                        let mut y = OrderedState::zero(n_particles, case.chamber());
                        for m in 1..=steps {
                            y = step_case(case, &y, &xi.column(m)).unwrap();
                            let edge = edge_vector(&out.tableaux[m], side, n_particles).unwrap();
                            assert_eq!(
                                edge.values(),
                                y.values(),
                                "{variant:?} {case:?} xi={xi:?} m={m}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn coupling_identity_three_by_three() {
        // The size skipped above, geometric variants included at entries <= 2.
        for variant in [Variant::Rsk, Variant::Burge] {
            let case = variant.matched_case();
            let side = variant.edge_side();
            for xi in enumerate_grids(3, 3, 2) {
                let out = correspond(variant, &xi).unwrap();
                let mut y = OrderedState::zero(3, case.chamber());
                for m in 1..=3 {
                    y = step_case(case, &y, &xi.column(m)).unwrap();
                    let edge = edge_vector(&out.tableaux[m], side, 3).unwrap();
                    assert_eq!(edge.values(), y.values(), "{variant:?} xi={xi:?} m={m}");
                }
            }
        }
    }

    #[test]
    fn bijectivity_small() {
        for variant in Variant::all() {
            let max_entry = match variant.innovation_law() {
                JumpLaw::Bernoulli => 1,
                JumpLaw::Geometric => 2,
            };
            let grids = enumerate_grids(2, 2, max_entry);
            let mut seen = HashMap::new();
            for xi in &grids {
                let out = correspond(variant, xi).unwrap();
                let key = (out.tableaux.last().unwrap().clone(), out.shapes.clone());
                if let Some(prev) = seen.insert(key, xi.clone()) {
                    panic!("{variant:?}: {prev:?} and {xi:?} collide");
                }
            }
            assert_eq!(seen.len(), grids.len());
        }
    }

    #[test]
    fn dual_rsk_sixteen_distinct_pairs() {
        let grids = enumerate_grids(2, 2, 1);
        assert_eq!(grids.len(), 16);
        let mut pairs = std::collections::HashSet::new();
        for xi in &grids {
            let out = correspond(Variant::DualRsk, xi).unwrap();
            pairs.insert((out.tableaux.last().unwrap().clone(), out.shapes.clone()));
        }
        assert_eq!(pairs.len(), 16);
    }

    #[test]
    fn law_pushforward_matches_joint_law() {
        let p = wv(&[(1, 2), (1, 3)]);
        for variant in Variant::all() {
            let law = variant.innovation_law();
            let max_entry = match law {
                JumpLaw::Bernoulli => 1,
                JumpLaw::Geometric => 3,
            };
            for xi in enumerate_grids(2, 2, max_entry) {
                let out = correspond(variant, &xi).unwrap();
                let s = out.tableaux.last().unwrap();
                let sh = out.shapes.last().unwrap();
                let predicted = joint_law(variant, s, sh, 2, &p).unwrap();
                let actual = xi.probability(law, &p).unwrap();
                assert_eq!(predicted, actual, "{variant:?} xi={xi:?}");
            }
        }
    }

    #[test]
    fn shape_process_law_matches_shape_kernel() {
        use crate::systems::{shape_kernel, ShapeFamily};
        let p = wv(&[(1, 2), (1, 3)]);
        // Exact distribution of Z(2) over exhaustive Bernoulli grids.
        let mut dist: HashMap<Vec<i64>, Rational> = HashMap::new();
        for xi in enumerate_grids(2, 2, 1) {
            let out = correspond(Variant::DualRsk, &xi).unwrap();
            let mass = xi.probability(JumpLaw::Bernoulli, &p).unwrap();
            *dist
                .entry(out.shapes.last().unwrap().parts().to_vec())
                .or_insert_with(|| r(0, 1)) += mass;
        }
        // Compare with the two-step composition of the shape kernel.
        let z0 = Shape::zero(2);
        for (parts, mass) in &dist {
            let z2 = Shape::new(parts.clone()).unwrap();
            let mut acc = r(0, 1);
            for m1 in 0..=2i64 {
                for m2 in 0..=m1.min(2) {
                    let z1 = Shape::new(vec![m1, m2]).unwrap();
                    acc += shape_kernel(ShapeFamily::Bernoulli, &z0, &z1, 1, &p).unwrap()
                        * shape_kernel(ShapeFamily::Bernoulli, &z1, &z2, 1, &p).unwrap();
                }
            }
            assert_eq!(acc, *mass, "z={parts:?}");
        }
        // And with the direct two-step kernel.
        for (parts, mass) in &dist {
            let z2 = Shape::new(parts.clone()).unwrap();
            assert_eq!(
                shape_kernel(ShapeFamily::Bernoulli, &z0, &z2, 2, &p).unwrap(),
                *mass
            );
        }
    }

    #[test]
    fn insertion_shape_invariance_rsk_vs_burge() {
        // The total number of inserted cells equals |Z(n)|, so every grid
        // producing a final shape of size <= 4 has all entries <= 4.
        // Restricting to those paths makes both laws exhaustive, and they
        // must agree exactly.
        let p = wv(&[(1, 2), (2, 5)]);
        let mut rsk_law: HashMap<Vec<Vec<i64>>, Rational> = HashMap::new();
        let mut burge_law: HashMap<Vec<Vec<i64>>, Rational> = HashMap::new();
        for xi in enumerate_grids(2, 2, 4) {
            let mass = xi.probability(JumpLaw::Geometric, &p).unwrap();
            let path_of = |v: Variant| -> Vec<Vec<i64>> {
                correspond(v, &xi)
                    .unwrap()
                    .shapes
                    .iter()
                    .map(|s| s.parts().to_vec())
                    .collect()
            };
            *rsk_law.entry(path_of(Variant::Rsk)).or_insert_with(|| r(0, 1)) += mass.clone();
            *burge_law
                .entry(path_of(Variant::Burge))
                .or_insert_with(|| r(0, 1)) += mass;
        }
        let covered = |path: &Vec<Vec<i64>>| path.last().unwrap().iter().sum::<i64>() <= 4;
        let restrict = |law: &HashMap<Vec<Vec<i64>>, Rational>| -> Vec<(Vec<Vec<i64>>, Rational)> {
            let mut v: Vec<_> = law
                .iter()
                .filter(|(k, _)| covered(k))
                .map(|(k, m)| (k.clone(), m.clone()))
                .collect();
            v.sort();
            v
        };
        let a = restrict(&rsk_law);
        assert!(!a.is_empty());
        assert_eq!(a, restrict(&burge_law));
    }
}
