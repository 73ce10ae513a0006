//! Fixture spaces, gluing of range probes, and the transfer of a leveled
//! basis to finite unions of intervals in `[0,1]`.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::basis::Child;
use crate::basis::{classify_diff_range, Schedule, Verdict};
use crate::error::{Error, Result};
use crate::maximal::{ClassFunction, DerivateBounds, PathTree};
use crate::rational::{self, from_biguint, int, pow2, rat, root_enclosure, Enclosure, Rational};
use crate::weak::{weak_type, Part, WeakTypeValue};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalMass {
    Lebesgue,
    /// Infinite on uncountable sets, zero on countable ones.
    UncountableInfinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricRule {
    EuclideanTruncated,
    Columnar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AtomPart {
    /// Counting measure on `(0,1] × {2^-j : j ≤ rows}`.
    Counting { rows: u32 },
    /// Points `(i 2^{-2j}, 2^{-j})` with weight `2^{-2j-r(i,j)}`, `j ≤ j_max`.
    Triangular { j_max: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedSpace {
    pub interval: IntervalMass,
    pub atoms: AtomPart,
    pub metric: MetricRule,
}

/// `r(i,j) = 2^j ⌈i/2^j⌉ - i`.
pub fn r_index(i: u64, j: u32) -> u64 {
    let b = 1u64 << j;
    b * i.div_ceil(b) - i
}

pub fn e4_weight(i: u64, j: u32) -> Rational {
    pow2(-(2 * j as i64) - r_index(i, j) as i64)
}

impl WeightedSpace {
    /// Total atom mass (`None` when infinite).
    pub fn atom_mass(&self) -> Option<Rational> {
        match self.atoms {
            AtomPart::Counting { .. } => None,
            // Row j carries 2^j blocks of mass 2^{-2j} Σ_{r<2^j} 2^{-r}.
            AtomPart::Triangular { j_max } => {
                Some((1..=j_max).map(|j| pow2(-(j as i64)) * geometric(&rat(1, 2), 1u64 << j)).sum())
            }
        }
    }
}

/// `Σ_{r<n} q^r`.
pub fn geometric(q: &Rational, n: u64) -> Rational {
    if q.is_one() {
        return int(n as i64);
    }
    (Rational::one() - pow_rat(q, n)) / (Rational::one() - q)
}

fn pow_rat(q: &Rational, n: u64) -> Rational {
    Rational::new(q.numer().pow(n as u32), q.denom().pow(n as u32))
}

// Columnar space: an interval row over countably many atom rows.

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct E1Point {
    pub column: u64,
    /// 0 for the interval row, `j` for height `2^-j`.
    pub row: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum E1Set {
    Single(E1Point),
    Pair { column: u64, row: u32 },
}

impl E1Set {
    pub fn contains(&self, x: &E1Point) -> bool {
        match *self {
            E1Set::Single(p) => p == *x,
            E1Set::Pair { column, row } => x.column == column && (x.row == 0 || x.row == row),
        }
    }

    pub fn diameter(&self) -> Rational {
        match self {
            E1Set::Single(_) => Rational::zero(),
            E1Set::Pair { row, .. } => pow2(-(*row as i64)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct E1 {
    pub space: WeightedSpace,
    pub rows: u32,
}

pub fn example_e1(rows: u32) -> E1 {
    E1 {
        space: WeightedSpace {
            interval: IntervalMass::UncountableInfinite,
            atoms: AtomPart::Counting { rows },
            metric: MetricRule::Columnar,
        },
        rows,
    }
}

/// Function on E1, given on finitely many points and zero elsewhere.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct E1Function {
    pub values: BTreeMap<E1Point, Rational>,
    /// Value on every point of `K` not listed.
    pub k_default: Rational,
}

impl E1Function {
    pub fn indicator_k() -> Self {
        E1Function { values: BTreeMap::new(), k_default: int(1) }
    }

    pub fn at(&self, x: &E1Point) -> Rational {
        match self.values.get(x) {
            Some(v) => v.clone(),
            None if x.row > 0 => self.k_default.clone(),
            None => Rational::zero(),
        }
    }
}

impl E1 {
    pub fn distance(&self, x: &E1Point, y: &E1Point) -> Rational {
        let h = |r: u32| if r == 0 { Rational::zero() } else { pow2(-(r as i64)) };
        if x.column == y.column {
            (h(x.row) - h(y.row)).abs()
        } else {
            int(1)
        }
    }

    /// Members of the basis containing `x` with row in `window`.
    pub fn members_at(&self, x: &E1Point, window: (u32, u32)) -> Vec<E1Set> {
        let rows = window.0.max(1)..=window.1.min(self.rows);
        if x.row == 0 {
            rows.map(|row| E1Set::Pair { column: x.column, row }).collect()
        } else if rows.contains(&x.row) {
            vec![E1Set::Single(*x), E1Set::Pair { column: x.column, row: x.row }]
        } else {
            Vec::new()
        }
    }

    /// Points of the interval row have measure zero, so every member has
    /// measure one and its average is the value at its `K` point.
    pub fn average(&self, f: &E1Function, s: &E1Set) -> Rational {
        match *s {
            E1Set::Single(p) => f.at(&p).abs(),
            E1Set::Pair { column, row } => f.at(&E1Point { column, row }).abs(),
        }
    }

    /// Bounds from members of diameter below `2^-window.0` in the window. A
    /// point of `K` is only reached by contracting sequences of singletons.
    pub fn derivate_bounds(&self, f: &E1Function, x: &E1Point, window: (u32, u32)) -> Option<DerivateBounds> {
        let avgs: Vec<Rational> = self
            .members_at(x, window)
            .iter()
            .filter(|s| x.row == 0 || matches!(s, E1Set::Single(_)))
            .map(|s| self.average(f, s))
            .collect();
        Some(DerivateBounds {
            window: (window.0 as usize, window.1 as usize),
            lower_upper: avgs.iter().min()?.clone(),
            upper_lower: avgs.iter().max()?.clone(),
        })
    }
}

// Weighted plane: Lebesgue measure plus point masses 2^{-2j-r(i,j)}.

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct E4Row {
    pub j: u32,
    #[serde(with = "rational::serde_rat")]
    pub avg_g: Rational,
    #[serde(with = "rational::serde_rat")]
    pub avg_gn: Rational,
    /// `|avg_g - 2/3|`.
    #[serde(with = "rational::serde_rat")]
    pub gap: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct E4 {
    pub space: WeightedSpace,
    pub n: u32,
    pub rows: Vec<E4Row>,
    #[serde(with = "rational::serde_rat")]
    pub limit_g: Rational,
    #[serde(with = "rational::serde_rat")]
    pub limit_gn: Rational,
    /// `max_j 2^j |avg_g - 2/3|`.
    #[serde(with = "rational::serde_rat")]
    pub fitted_c: Rational,
}

/// Averages of `g` and `g_n` over `I_ij ∪ K*_ij`; they do not depend on `i`.
pub fn e4_averages(j: u32, n: u32) -> (Rational, Rational) {
    let size = 1u64 << j;
    let i_mass = pow2(-2 * j as i64);
    let two_thirds = rat(2, 3);
    // K*_ij holds one point for each r < 2^j, weight 2^{-2j-r} and g = 2^-r.
    let k_mass = &i_mass * geometric(&rat(1, 2), size);
    let k_int = &i_mass * geometric(&rat(1, 4), size);
    let kn_int = &i_mass * geometric(&rat(1, 4), size.min(n as u64 + 1));
    let mass = &i_mass + &k_mass;
    let g = (&i_mass * &two_thirds + k_int) / &mass;
    let gn = (&i_mass * &two_thirds + kn_int) / &mass;
    (g, gn)
}

pub fn e4_average_brute(i: u64, j: u32, n: u32) -> (Rational, Rational) {
    let b = 1u64 << j;
    let block = i.div_ceil(b);
    let i_mass = pow2(-2 * j as i64);
    let mut mass = i_mass.clone();
    let mut g = &i_mass * rat(2, 3);
    let mut gn = g.clone();
    for k in (block - 1) * b + 1..=block * b {
        let w = e4_weight(k, j);
        let v = pow2(-(r_index(k, j) as i64));
        if v >= pow2(-(n as i64)) {
            gn += &w * &v;
        }
        g += &w * v;
        mass += w;
    }
    (g / &mass, gn / mass)
}

/// `(2/3 + Σ_{r≤n} 4^{-r}) / 3`.
pub fn e4_limit_gn(n: u32) -> Rational {
    (rat(2, 3) + geometric(&rat(1, 4), n as u64 + 1)) / int(3)
}

pub fn example_e4(j_max: u32, n: u32) -> Result<E4> {
    if !(1 <= n && n < j_max && j_max <= 20) {
        return Err(Error::Invalid(format!("need 1 <= n < j_max <= 20, got n={n}, j_max={j_max}")));
    }
    let mut rows = Vec::new();
    let mut fitted_c = Rational::zero();
    for j in 1..=j_max {
        let (avg_g, avg_gn) = e4_averages(j, n);
        let gap = (&avg_g - rat(2, 3)).abs();
        fitted_c = fitted_c.max(&gap * pow2(j as i64));
        rows.push(E4Row { j, avg_g, avg_gn, gap });
    }
    Ok(E4 {
        space: WeightedSpace {
            interval: IntervalMass::Lebesgue,
            atoms: AtomPart::Triangular { j_max },
            metric: MetricRule::EuclideanTruncated,
        },
        n,
        rows,
        // Σ 4^-r = 4/3 and Σ 2^-r = 2 in the limit.
        limit_g: (rat(2, 3) + rat(4, 3)) / int(3),
        limit_gn: e4_limit_gn(n),
        fitted_c,
    })
}

// Range probes and gluing.

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RangeProbe {
    pub label: String,
    #[serde(with = "rational::serde_rat_vec")]
    pub grid: Vec<Rational>,
    pub inside: Vec<bool>,
    /// `L^∞` is never decided by a finite probe.
    pub infinity: String,
}

pub fn probe_schedule(s: &Schedule, grid: &[Rational]) -> Result<RangeProbe> {
    let inside = grid.iter().map(|p| classify_diff_range(s, p).map(|v| v == Verdict::In)).collect::<Result<_>>()?;
    Ok(RangeProbe {
        label: format!("schedule {:?} p0={}", s.variant, rational::format(&s.p0)),
        grid: grid.to_vec(),
        inside,
        infinity: "not probed".into(),
    })
}

/// E1 differentiates every `L^p` with `p` finite.
pub fn probe_e1(grid: &[Rational]) -> Result<RangeProbe> {
    if let Some(p) = grid.iter().find(|p| **p < int(1)) {
        return Err(Error::ExponentRange(rational::format(p)));
    }
    Ok(RangeProbe {
        label: "e1".into(),
        grid: grid.to_vec(),
        inside: vec![true; grid.len()],
        infinity: "not probed".into(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// Two spaces on disjoint carriers at mutual distance one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluedSpace<P> {
    pub a: P,
    pub b: P,
}

impl<P> GluedSpace<P> {
    pub fn distance<T>(&self, x: (Side, T), y: (Side, T), within: impl Fn(&Side, &T, &T) -> Enclosure) -> Enclosure {
        if x.0 == y.0 {
            within(&x.0, &x.1, &y.1)
        } else {
            Enclosure::exact(int(1))
        }
    }

    /// Measure of a set split into its two sides.
    pub fn measure(&self, on_a: &Rational, on_b: &Rational) -> Rational {
        on_a + on_b
    }
}

pub fn glue(a: &RangeProbe, b: &RangeProbe) -> Result<GluedSpace<RangeProbe>> {
    if a.grid != b.grid {
        return Err(Error::Invalid("probe grids differ".into()));
    }
    Ok(GluedSpace { a: a.clone(), b: b.clone() })
}

impl GluedSpace<RangeProbe> {
    pub fn probe(&self) -> RangeProbe {
        RangeProbe {
            label: format!("glue({}, {})", self.a.label, self.b.label),
            grid: self.a.grid.clone(),
            inside: self.a.inside.iter().zip(&self.b.inside).map(|(x, y)| *x && *y).collect(),
            infinity: "not probed".into(),
        }
    }
}

/// Euclidean distance between two E4 points given by exact coordinates.
pub fn euclidean(x: &(Rational, Rational), y: &(Rational, Rational)) -> Enclosure {
    let dx = &x.0 - &y.0;
    let dy = &x.1 - &y.1;
    let sq = &dx * &dx + &dy * &dy;
    if sq.is_zero() {
        return Enclosure::exact(sq);
    }
    root_enclosure(&sq, &int(2))
}

// Transfer to intervals.

/// Instance `t` of tree node `node`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Instance {
    pub node: usize,
    pub t: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(with = "rational::serde_rat")]
    pub a: Rational,
    #[serde(with = "rational::serde_rat")]
    pub b: Rational,
}

impl Segment {
    pub fn len(&self) -> Rational {
        &self.b - &self.a
    }

    pub fn is_empty(&self) -> bool {
        self.a >= self.b
    }
}

/// Image of a tree on `[0,1]`: every atom instance gets an interval of its
/// own measure, children packed in order inside the parent's interval.
#[derive(Clone, Debug)]
pub struct IntervalUnionBasis<'t, 'a> {
    pub tree: &'t PathTree<'a>,
    /// Offset of each node's first instance inside its parent's interval.
    offsets: Vec<Rational>,
    scale: Rational,
}

pub fn transfer_to_interval<'t, 'a>(tree: &'t PathTree<'a>) -> IntervalUnionBasis<'t, 'a> {
    let mut offsets = vec![Rational::zero(); tree.nodes.len()];
    for node in &tree.nodes {
        let mut at = Rational::zero();
        for &c in &node.children {
            offsets[c] = at.clone();
            at += from_biguint(&tree.nodes[c].count) * &tree.nodes[c].measure;
        }
    }
    // U maps onto an interval of length |U| starting at 0.
    IntervalUnionBasis { tree, offsets, scale: int(1) }
}

/// A member `Q_i` of configuration `t` of the group containing cell node `node`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberImage {
    pub j: usize,
    pub member: usize,
    pub segments: Vec<Segment>,
}

impl<'t, 'a> IntervalUnionBasis<'t, 'a> {
    /// Interval of an instance path (root first; the root has `t = 0`).
    pub fn interval(&self, path: &[Instance]) -> Segment {
        let mut a = Rational::zero();
        for x in path.iter().skip(1) {
            a += &self.offsets[x.node] + int(x.t as i64) * &self.tree.nodes[x.node].measure;
        }
        let last = path.last().expect("nonempty path");
        let len = &self.tree.nodes[last.node].measure * &self.scale;
        Segment { b: &a + len, a }
    }

    /// Total image length of the atoms at depth `j`.
    pub fn level_total(&self, j: usize) -> Rational {
        (0..self.tree.nodes.len())
            .filter(|&n| n != 0 && self.tree.nodes[n].j == j)
            .map(|n| from_biguint(&self.tree.multiplicity(n)) * &self.tree.nodes[n].measure)
            .sum()
    }

    /// Path to the first instance of `node` inside the first instance of
    /// each ancestor.
    pub fn representative(&self, node: usize) -> Vec<Instance> {
        let mut path = Vec::new();
        let mut cur = Some(node);
        while let Some(c) = cur {
            path.push(Instance { node: c, t: 0 });
            cur = self.tree.nodes[c].parent;
        }
        path.reverse();
        path
    }

    /// Images of the members of the first configuration of every group,
    /// with the measures of the source boxes.
    pub fn member_images(&self) -> Vec<(MemberImage, Rational)> {
        let mut groups: BTreeMap<(usize, u32, bool), Vec<(usize, usize)>> = BTreeMap::new();
        for (n, node) in self.tree.nodes.iter().enumerate() {
            if let (Some(p), Some(Child::Cell { level, cell, selected })) = (node.parent, node.child) {
                groups.entry((p, level, selected)).or_default().push((cell, n));
            }
        }
        let mut out = Vec::new();
        for ((p, level, _), cells) in groups {
            let j = self.tree.nodes[p].j + 1;
            let rec = self.tree.basis.recipe(j, level);
            let members = rec.configuration.members();
            for (i, m) in members.iter().enumerate() {
                let segments = cells
                    .iter()
                    .filter(|(c, _)| rec.cells[*c].pattern[i])
                    .map(|(_, n)| self.interval(&self.representative(*n)))
                    .collect();
                out.push((MemberImage { j, member: i, segments }, m.measure()));
            }
        }
        out
    }

    /// `(cell, node, image)` for the cells of the configuration of cell node `n`.
    fn group_segments(&self, n: usize) -> Vec<(usize, usize, Segment)> {
        let node = &self.tree.nodes[n];
        let Some(Child::Cell { level, selected, .. }) = node.child else { return Vec::new() };
        let p = node.parent.expect("cell nodes have parents");
        self.tree.nodes[p]
            .children
            .iter()
            .filter_map(|&c| match self.tree.nodes[c].child {
                Some(Child::Cell { level: l, cell, selected: s }) if l == level && s == selected => Some((cell, c)),
                _ => None,
            })
            .map(|(cell, c)| (cell, c, self.interval(&self.representative(c))))
            .collect()
    }
}

/// Weak-type value computed on `[0,1]`: every leaf class is represented by
/// one image interval, the members containing it are found by interval
/// containment, and their averages are integrals over image segments
/// divided by image lengths.
pub fn transferred_weak_type(basis: &IntervalUnionBasis, f: &ClassFunction, p: &Rational) -> WeakTypeValue {
    let tree = basis.tree;
    let all = tree.basis.depth();
    let mut parts = Vec::new();
    for n in tree.leaves() {
        let path = basis.representative(n);
        let own = basis.interval(&path);
        let value = f.values[n].abs();
        let mut best = Rational::zero();
        for x in &path[1..] {
            let a = x.node;
            let Some(Child::Cell { level, .. }) = tree.nodes[a].child else { continue };
            let j = tree.nodes[a].j;
            if j > all {
                continue;
            }
            let rec = tree.basis.recipe(j, level);
            let segs = basis.group_segments(a);
            // The ancestor's own segment is the one containing `own`.
            for i in 0..=rec.configuration.d {
                let member: Vec<&(usize, usize, Segment)> =
                    segs.iter().filter(|(c, _, _)| rec.cells[*c].pattern[i]).collect();
                if !member.iter().any(|(_, _, s)| s.a <= own.a && own.b <= s.b) {
                    continue;
                }
                let integral: Rational = member.iter().map(|(_, k, _)| f.integral(*k).clone()).sum();
                let length: Rational = member.iter().map(|(_, _, s)| s.len()).sum();
                best = best.max(integral / length);
            }
        }
        let weight = from_biguint(&tree.multiplicity(n)) * own.len();
        let frac = tree.deep_fraction(n);
        if !frac.is_zero() {
            parts.push(Part {
                measure: &weight * &frac,
                value: value.clone(),
                maximal: best.clone().max(value.clone()),
            });
        }
        parts.push(Part { measure: &weight * (int(1) - &frac), value, maximal: best });
    }
    parts.retain(|p| !p.measure.is_zero());
    weak_type(&parts, p)
}

pub fn union_length(segments: &[Segment]) -> Rational {
    let mut v: Vec<&Segment> = segments.iter().filter(|s| !s.is_empty()).collect();
    v.sort_by(|x, y| x.a.cmp(&y.a));
    let mut total = Rational::zero();
    let mut cur: Option<(Rational, Rational)> = None;
    for s in v {
        match &mut cur {
            Some((_, b)) if s.a <= *b => {
                if s.b > *b {
                    *b = s.b.clone();
                }
            }
            _ => {
                if let Some((a, b)) = cur.take() {
                    total += b - a;
                }
                cur = Some((s.a.clone(), s.b.clone()));
            }
        }
    }
    if let Some((a, b)) = cur {
        total += b - a;
    }
    total
}

pub fn intersection_length(x: &[Segment], y: &[Segment]) -> Rational {
    let mut s = Rational::zero();
    for a in x {
        for b in y {
            let lo = (&a.a).max(&b.a);
            let hi = (&a.b).min(&b.b);
            if lo < hi {
                s += hi - lo;
            }
        }
    }
    s
}
