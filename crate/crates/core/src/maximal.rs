//! Averages, maximal values, weak-type ratios and the counterexample
//! function, both on explicit box collections and on leveled bases.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arrangement::atoms;
use crate::basis::{closed_form_ledger, exceptional_from, Child, Host, LeveledBasis, Schedule, Variant};
use crate::error::{Error, Result};
use crate::geometry::{Box, BoxSet};
use crate::rational::{self, from_biguint, int, pow2, pow_enclosure, Enclosure, Rational};
use crate::weak::{weak_type, Part, WeakTypeValue};

/// Piecewise-constant function on disjoint boxes, zero elsewhere.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimpleFunction {
    pub cells: Vec<(Box, SerRational)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerRational(#[serde(with = "rational::serde_rat")] pub Rational);

impl SimpleFunction {
    pub fn new(cells: Vec<(Box, Rational)>) -> Result<Self> {
        BoxSet::new(cells.iter().map(|(b, _)| b.clone()).collect())?;
        Ok(SimpleFunction { cells: cells.into_iter().map(|(b, v)| (b, SerRational(v))).collect() })
    }

    pub fn constant(c: Rational) -> Self {
        SimpleFunction { cells: vec![(Box::full(), SerRational(c))] }
    }

    pub fn indicator(b: &Box) -> Self {
        SimpleFunction { cells: vec![(b.clone(), SerRational(int(1)))] }
    }

    pub fn scaled(&self, c: &Rational) -> Self {
        SimpleFunction { cells: self.cells.iter().map(|(b, v)| (b.clone(), SerRational(&v.0 * c))).collect() }
    }

    /// `‖f‖_p^p`, exact for integer `p`.
    pub fn norm_pp(&self, p: &Rational) -> Enclosure {
        self.cells
            .iter()
            .filter(|(_, v)| !v.0.is_zero())
            .map(|(b, v)| pow_enclosure(&v.0.abs(), p).scale(&b.measure()))
            .fold(Enclosure::exact(Rational::zero()), |a, b| a.add(&b))
    }
}

/// `(1/|S|) ∫_S |f|`.
pub fn average(f: &SimpleFunction, s: &Box) -> Result<Rational> {
    let m = s.measure();
    if m.is_zero() {
        return Err(Error::NullSet);
    }
    let total: Rational = f.cells.iter().map(|(b, v)| v.0.abs() * b.intersection_measure(s)).sum();
    Ok(total / m)
}

/// Members of one configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub level: usize,
    pub members: Vec<Box>,
}

/// Finite leveled collection, one entry per configuration.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Collection {
    pub groups: Vec<Group>,
}

impl Collection {
    /// `(group, level, box)` for every member.
    pub fn members(&self) -> impl Iterator<Item = (usize, usize, &Box)> {
        self.groups.iter().enumerate().flat_map(|(g, x)| x.members.iter().map(move |b| (g, x.level, b)))
    }

    /// Members of distinct configurations are nested or disjoint.
    pub fn check_nesting(&self) -> Result<()> {
        let all: Vec<(usize, usize, &Box)> = self.members().collect();
        for (x, (gx, jx, a)) in all.iter().enumerate() {
            for (gy, jy, b) in &all[x + 1..] {
                if gx != gy && !(a.is_disjoint(b) || a.contains(b) || b.contains(a)) {
                    return Err(Error::NotNested(format!("level {jx} {a} and level {jy} {b}")));
                }
            }
        }
        Ok(())
    }
}

/// `max avg(|f|, S)` over members in levels `window` that contain `cell`.
pub fn maximal_value(f: &SimpleFunction, cell: &Box, c: &Collection, window: (usize, usize)) -> Result<Rational> {
    let mut best = Rational::zero();
    for (_, j, b) in c.members() {
        if j < window.0 || j > window.1 {
            continue;
        }
        if b.contains(cell) {
            best = best.max(average(f, b)?);
        } else if !b.is_disjoint(cell) {
            return Err(Error::Straddle(format!("{cell} meets {b} partially")));
        }
    }
    Ok(best)
}

fn explicit_parts(c: &Collection, f: &SimpleFunction) -> Vec<Part> {
    let members: Vec<Box> = c.members().map(|(_, _, b)| b.clone()).collect();
    let mut all = members.clone();
    all.extend(f.cells.iter().map(|(b, _)| b.clone()));
    let at = atoms(&all);
    let avgs: Vec<Rational> = members.iter().map(|b| average(f, b).expect("positive measure")).collect();
    at.iter()
        .map(|a| {
            let value = f
                .cells
                .iter()
                .enumerate()
                .find(|(t, _)| a.mask[members.len() + t])
                .map(|(_, (_, v))| v.0.abs())
                .unwrap_or_else(Rational::zero);
            let maximal = (0..members.len()).filter(|i| a.mask[*i]).map(|i| avgs[i].clone()).max().unwrap_or_default();
            Part { measure: a.measure.clone(), value, maximal }
        })
        .collect()
}

pub fn weak_type_ratio(c: &Collection, f: &SimpleFunction, p: &Rational) -> WeakTypeValue {
    weak_type(&explicit_parts(c, f), p)
}

/// Outcome of a maximal-disjointness check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disjointness {
    pub disjoint: bool,
    /// Intersecting pairs from distinct configurations that were examined.
    pub pairs: usize,
    /// Whether `μ(∪ above λ) = Σ μ(E*_n)` held (explicit collections only).
    pub additive: bool,
}

/// Unions `E*_n` of the maximal members above `λ` are disjoint across
/// configurations `n`.
pub fn maximal_disjointness_check(c: &Collection, f: &SimpleFunction, lambda: &Rational) -> Result<Disjointness> {
    c.check_nesting()?;
    let above: Vec<(usize, usize, &Box)> =
        c.members().filter(|(_, _, b)| average(f, b).map(|a| &a > lambda).unwrap_or(false)).collect();
    let maximal: Vec<&(usize, usize, &Box)> = above
        .iter()
        .enumerate()
        .filter(|(x, (_, _, b))| {
            !above.iter().enumerate().any(|(y, (_, _, o))| *x != y && o.contains(b) && (o != b || y < *x))
        })
        .map(|(_, e)| e)
        .collect();
    let mut out = Disjointness { disjoint: true, pairs: 0, additive: true };
    for (x, (ga, _, a)) in maximal.iter().enumerate() {
        for (gb, _, b) in &maximal[x + 1..] {
            if ga != gb && !a.is_disjoint(b) {
                out.pairs += 1;
                out.disjoint = false;
            }
        }
    }
    let union = BoxSet::union_of(above.iter().map(|(_, _, b)| (*b).clone()).collect::<Vec<_>>().as_slice());
    let mut per: BTreeMap<usize, Vec<Box>> = BTreeMap::new();
    for (g, _, b) in &maximal {
        per.entry(*g).or_default().push((*b).clone());
    }
    let sum: Rational = per.values().map(|v| BoxSet::union_of(v).measure()).sum();
    out.additive = union.measure() == sum;
    Ok(out)
}

// Class-level view of a leveled basis.

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub parent: Option<usize>,
    pub j: usize,
    pub child: Option<Child>,
    #[serde(with = "rational::serde_big")]
    pub count: BigUint,
    #[serde(with = "rational::serde_rat")]
    pub measure: Rational,
    pub children: Vec<usize>,
}

impl Node {
    pub fn host(&self) -> Option<Host> {
        match self.child {
            None => Some(Host::Region),
            Some(Child::Cell { level, cell, .. }) => Some(Host::Cell { level, cell }),
            Some(Child::Residual { .. }) => None,
        }
    }
}

/// Atom classes of a basis down to level `depth`: a node stands for all
/// atoms reached by the same sequence of (cube level, cell, selected) choices.
#[derive(Clone, Debug)]
pub struct PathTree<'a> {
    pub basis: &'a LeveledBasis,
    pub depth: usize,
    pub nodes: Vec<Node>,
    /// Per configuration group `(parent, level, selected)`, the node of each cell.
    groups: BTreeMap<(usize, u32, bool), Vec<Option<usize>>>,
}

impl<'a> PathTree<'a> {
    pub fn new(basis: &'a LeveledBasis, depth: usize) -> Self {
        assert!(depth <= basis.depth());
        let root = Node {
            parent: None,
            j: 0,
            child: None,
            count: BigUint::one(),
            measure: basis.region.measure(),
            children: Vec::new(),
        };
        let mut t = PathTree { basis, depth, nodes: vec![root], groups: BTreeMap::new() };
        let mut frontier = vec![0usize];
        for j in 1..=depth {
            let lvl = &basis.levels[j - 1];
            let mut next = Vec::new();
            for &n in &frontier {
                let Some(h) = t.nodes[n].host() else { continue };
                for (c, k) in lvl.children(&h) {
                    let measure = match c {
                        Child::Cell { level, cell, .. } => basis.recipe(j, level).cells[cell].region.measure(),
                        Child::Residual { level } => crate::rdf::q_measure(level),
                    };
                    let id = t.nodes.len();
                    t.nodes.push(Node { parent: Some(n), j, child: Some(c), count: k, measure, children: Vec::new() });
                    t.nodes[n].children.push(id);
                    if let Child::Cell { level, cell, selected } = c {
                        let cells = basis.recipe(j, level).cells.len();
                        let g = t.groups.entry((n, level, selected)).or_insert_with(|| vec![None; cells]);
                        g[cell] = Some(id);
                        next.push(id);
                    }
                }
            }
            frontier = next;
        }
        t
    }

    pub fn is_leaf(&self, n: usize) -> bool {
        n != 0 && self.nodes[n].children.is_empty()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&n| self.is_leaf(n)).collect()
    }

    /// Number of atoms of this class in `U`.
    pub fn multiplicity(&self, n: usize) -> BigUint {
        let mut k = BigUint::one();
        let mut cur = Some(n);
        while let Some(c) = cur {
            k *= &self.nodes[c].count;
            cur = self.nodes[c].parent;
        }
        k
    }

    /// Fraction of a leaf covered by configurations one level deeper.
    pub fn deep_fraction(&self, n: usize) -> Rational {
        let node = &self.nodes[n];
        let j = node.j;
        if j >= self.basis.depth() {
            return Rational::zero();
        }
        match node.host() {
            Some(h) if j >= 1 => self.basis.levels[j].plans[&h].covered_measure() / &node.measure,
            _ => Rational::zero(),
        }
    }

    fn config_of(&self, n: usize) -> Option<(usize, u32, bool, usize)> {
        match (self.nodes[n].parent, self.nodes[n].child) {
            (Some(p), Some(Child::Cell { level, cell, selected })) => Some((p, level, selected, cell)),
            _ => None,
        }
    }

    /// Level-`j` ancestors (or self) that are configuration cells.
    fn chain(&self, n: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = Some(n);
        while let Some(c) = cur {
            if self.config_of(c).is_some() {
                out.push(c);
            }
            cur = self.nodes[c].parent;
        }
        out.reverse();
        out
    }

    /// Whether the class lies inside the base box of its configuration.
    pub fn in_base(&self, n: usize) -> bool {
        match self.config_of(n) {
            Some((_, level, _, cell)) => self.basis.recipe(self.nodes[n].j, level).cells[cell].pattern[0],
            None => false,
        }
    }

    pub fn is_selected(&self, n: usize) -> bool {
        matches!(self.nodes[n].child, Some(Child::Cell { selected: true, .. }))
    }
}

/// Function constant on the leaves of a [`PathTree`].
#[derive(Clone, Debug)]
pub struct ClassFunction<'t, 'a> {
    pub tree: &'t PathTree<'a>,
    /// Value on every leaf (zero for non-leaves).
    pub values: Vec<Rational>,
    integral: Vec<Rational>,
    averages: BTreeMap<(usize, u32, bool), Vec<Rational>>,
}

impl<'t, 'a> ClassFunction<'t, 'a> {
    pub fn new(tree: &'t PathTree<'a>, values: Vec<Rational>) -> Self {
        assert_eq!(values.len(), tree.nodes.len());
        let mut integral = vec![Rational::zero(); tree.nodes.len()];
        for n in (0..tree.nodes.len()).rev() {
            let node = &tree.nodes[n];
            integral[n] = if node.children.is_empty() {
                values[n].abs() * &node.measure
            } else {
                node.children.iter().map(|c| from_biguint(&tree.nodes[*c].count) * &integral[*c]).sum()
            };
        }
        let mut averages = BTreeMap::new();
        for (&(p, level, sel), cells) in &tree.groups {
            let j = tree.nodes[p].j + 1;
            let rec = tree.basis.recipe(j, level);
            let q = rec.configuration.base.measure();
            let v = (0..=rec.configuration.d)
                .map(|i| {
                    let s: Rational = rec
                        .cells
                        .iter()
                        .zip(cells)
                        .filter(|(c, _)| c.pattern[i])
                        .map(|(_, id)| id.map(|id| integral[id].clone()).unwrap_or_default())
                        .sum();
                    s / &q
                })
                .collect();
            averages.insert((p, level, sel), v);
        }
        ClassFunction { tree, values, integral, averages }
    }

    pub fn from_leaf_fn(tree: &'t PathTree<'a>, f: impl Fn(usize) -> Rational) -> Self {
        let values = (0..tree.nodes.len()).map(|n| if tree.is_leaf(n) { f(n) } else { Rational::zero() }).collect();
        Self::new(tree, values)
    }

    /// `∫ |f|` over one atom of class `n`.
    pub fn integral(&self, n: usize) -> &Rational {
        &self.integral[n]
    }

    pub fn norm_pp(&self, p: &Rational) -> Enclosure {
        self.tree
            .leaves()
            .iter()
            .filter(|n| !self.values[**n].is_zero())
            .map(|n| {
                let w = from_biguint(&self.tree.multiplicity(*n)) * &self.tree.nodes[*n].measure;
                pow_enclosure(&self.values[*n].abs(), p).scale(&w)
            })
            .fold(Enclosure::exact(Rational::zero()), |a, b| a.add(&b))
    }

    /// Averages of `|f|` over members `Q0, …, Qd` of the configuration whose cell is `n`.
    pub fn member_averages(&self, n: usize) -> Vec<Rational> {
        let (p, level, sel, _) = self.tree.config_of(n).expect("configuration cell");
        self.averages[&(p, level, sel)].clone()
    }

    /// Averages over the members containing class `n`'s own cell.
    pub fn containing_averages(&self, n: usize) -> Vec<Rational> {
        let (_, level, _, cell) = self.tree.config_of(n).expect("configuration cell");
        let pattern = &self.tree.basis.recipe(self.tree.nodes[n].j, level).cells[cell].pattern;
        self.member_averages(n).into_iter().zip(pattern).filter(|(_, p)| **p).map(|(a, _)| a).collect()
    }

    /// `M f` on class `n` restricted to levels in `window`. With `deep`, the
    /// value on the part of a leaf covered one level below the tree.
    pub fn maximal_value(&self, n: usize, window: (usize, usize), deep: bool) -> Result<Rational> {
        let node = &self.tree.nodes[n];
        if !node.children.is_empty() && window.1 > node.j {
            return Err(Error::Straddle(format!("class {n} is split by level {}", node.j + 1)));
        }
        let mut best = Rational::zero();
        for a in self.tree.chain(n) {
            let j = self.tree.nodes[a].j;
            if j >= window.0 && j <= window.1 {
                for v in self.containing_averages(a) {
                    best = best.max(v);
                }
            }
        }
        if deep && window.1 > node.j && !self.tree.deep_fraction(n).is_zero() {
            best = best.max(self.values[n].abs());
        }
        Ok(best)
    }

    /// Leaf parts with their maximal values over all levels of the basis.
    pub fn parts(&self) -> Vec<Part> {
        let all = (1, self.tree.basis.depth());
        let mut out = Vec::new();
        for n in self.tree.leaves() {
            let node = &self.tree.nodes[n];
            let w = from_biguint(&self.tree.multiplicity(n)) * &node.measure;
            let value = self.values[n].abs();
            let frac = self.tree.deep_fraction(n);
            let shallow = self.maximal_value(n, all, false).expect("leaf");
            if !frac.is_zero() {
                let deep = self.maximal_value(n, all, true).expect("leaf");
                out.push(Part { measure: &w * &frac, value: value.clone(), maximal: deep });
            }
            out.push(Part { measure: &w * (int(1) - &frac), value, maximal: shallow });
        }
        out.retain(|p| !p.measure.is_zero());
        out
    }

    pub fn weak_type_ratio(&self, p: &Rational) -> WeakTypeValue {
        weak_type(&self.parts(), p)
    }

    /// Attained averages, the natural λ grid.
    pub fn lambda_grid(&self) -> Vec<Rational> {
        let mut v: Vec<Rational> = self.averages.values().flatten().cloned().collect();
        for n in self.tree.leaves() {
            v.push(self.values[n].abs());
        }
        v.sort();
        v.dedup();
        v
    }
}

/// `f = sup_j ε_j^{-1} 1_{F_j}` on the leaves of `tree`.
pub fn counterexample_function<'t, 'a>(tree: &'t PathTree<'a>) -> ClassFunction<'t, 'a> {
    let eps: Vec<Rational> = tree.basis.schedule.levels.iter().map(|l| l.eps.clone()).collect();
    ClassFunction::from_leaf_fn(tree, |n| {
        let mut v = Rational::zero();
        for a in tree.chain(n) {
            if tree.is_selected(a) && tree.in_base(a) {
                v = v.max(Rational::one() / &eps[tree.nodes[a].j - 1]);
            }
        }
        v
    })
}

/// Maximal-disjointness on a basis for every `λ` of `grid` at once.
///
/// A member is maximal above `λ` iff `anc ≤ λ < avg`, where `anc` is the
/// largest average of an earlier member containing it. Families of chains
/// branching at every cell of a sampled configuration give explicit boxes;
/// every intersecting pair from distinct configurations must have disjoint
/// maximality ranges on the grid.
pub fn basis_maximal_disjointness(f: &ClassFunction, grid: &[Rational], families: usize, seed: u64) -> Disjointness {
    let tree = f.tree;
    let basis = tree.basis;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Disjointness { disjoint: true, pairs: 0, additive: true };
    let depth = tree.depth;
    if depth == 0 {
        return out;
    }
    for _ in 0..families {
        let root = basis.sample_chain(&mut rng);
        let mut chains = vec![root.clone()];
        for b in 0..depth.min(root.len()).saturating_sub(1) {
            let cells = basis.recipe(root[b].j, root[b].cube.level).cells.len();
            for c in 0..cells {
                let mut prefix = root[..=b].to_vec();
                prefix[b].cell = c;
                chains.push(basis.extend_chain(prefix, &mut rng));
            }
        }
        // (configuration key, box, anc, avg)
        let mut boxes: Vec<(String, Box, Rational, Rational)> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for chain in &chains {
            let mut node = 0usize;
            let mut anc = Rational::zero();
            for link in chain.iter().take(depth) {
                let key = format!("{}:{}:{:?}", link.j, link.index, link.cube.corner);
                let Some(next) = tree.nodes[node].children.iter().copied().find(|c| {
                    tree.nodes[*c].child
                        == Some(Child::Cell { level: link.cube.level, cell: link.cell, selected: link.selected })
                }) else {
                    break;
                };
                let avgs = f.member_averages(next);
                if seen.insert(key.clone()) {
                    for (i, m) in link.configuration.members().into_iter().enumerate() {
                        boxes.push((key.clone(), m, anc.clone(), avgs[i].clone()));
                    }
                }
                for v in f.containing_averages(next) {
                    anc = anc.max(v);
                }
                node = next;
            }
        }
        for (x, (ka, a, anc_a, avg_a)) in boxes.iter().enumerate() {
            for (kb, b, anc_b, avg_b) in &boxes[x + 1..] {
                if ka == kb || a.is_disjoint(b) {
                    continue;
                }
                out.pairs += 1;
                if !(a.contains(b) || b.contains(a)) {
                    out.disjoint = false;
                    continue;
                }
                let lo = anc_a.max(anc_b);
                let hi = avg_a.min(avg_b);
                let i = grid.partition_point(|l| l < lo);
                if i < grid.len() && &grid[i] < hi {
                    out.disjoint = false;
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivateBounds {
    pub window: (usize, usize),
    /// Smallest average seen: bounds the lower derivate from above.
    #[serde(with = "rational::serde_rat")]
    pub lower_upper: Rational,
    /// Largest average seen: bounds the upper derivate from below.
    #[serde(with = "rational::serde_rat")]
    pub upper_lower: Rational,
}

pub fn derivate_bounds(f: &ClassFunction, n: usize, window: (usize, usize)) -> Option<DerivateBounds> {
    let mut seen: Vec<Rational> = Vec::new();
    for a in f.tree.chain(n) {
        let j = f.tree.nodes[a].j;
        if j >= window.0 && j <= window.1 {
            seen.extend(f.containing_averages(a));
        }
    }
    let lo = seen.iter().min()?.clone();
    let hi = seen.iter().max()?.clone();
    Some(DerivateBounds { window, lower_upper: lo, upper_lower: hi })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub j: usize,
    #[serde(with = "rational::serde_rat")]
    pub f: Rational,
    #[serde(with = "rational::serde_rat")]
    pub f_star: Rational,
    /// `ε_j^{-p} |F_j|`.
    pub term: Enclosure,
    pub partial: Enclosure,
    /// `2^{p-1} j^{p/p0} j^{-2}`.
    pub comparison: Enclosure,
    /// The same term at the unquantized `ε_j = j^{-1/p0}/2` (geq schedules).
    pub unquantized_term: Option<Enclosure>,
    /// `2^p` times the comparison, which bounds `term` for `ε_j ≥ target/2`.
    pub quantized_bound: Enclosure,
    #[serde(with = "rational::serde_rat")]
    pub exceptional: Rational,
}

/// Per-level ledger in the full-cover limit, or with the truncated values
/// of a built basis on the levels it has.
pub fn lp_ledger(s: &Schedule, basis: Option<&LeveledBasis>, p: &Rational) -> Vec<LpRow> {
    let closed = closed_form_ledger(s);
    let built = basis.map(|b| b.ledger()).unwrap_or_default();
    let mut partial = Enclosure::exact(Rational::zero());
    let mut out = Vec::new();
    let mut fs: Vec<Rational> = Vec::new();
    let mut ms: Vec<u32> = Vec::new();
    for (n, lp) in s.levels.iter().enumerate() {
        let (f, f_star) = match built.get(n) {
            Some(l) => (l.f.clone(), l.f_star.clone()),
            None => closed[n].clone(),
        };
        let term = pow_enclosure(&(Rational::one() / &lp.eps), p).scale(&f);
        partial = partial.add(&term);
        let j = int(lp.j as i64);
        let comparison = pow_enclosure(&j, &(p / &s.p0))
            .mul_nonneg(&pow_enclosure(&int(2), p))
            .scale(&(Rational::one() / (int(2) * &j * &j)));
        let quantized_bound = comparison.mul_nonneg(&pow_enclosure(&int(2), p));
        let unquantized_term = (s.variant == Variant::Geq).then(|| unquantized_term(lp.j, &s.p0, p));
        fs.push(f.clone());
        ms.push(lp.m);
        let core = match built.get(n) {
            Some(_) => basis.map(|b| b.core_measure(n + 1)).unwrap(),
            None => int(1),
        };
        out.push(LpRow {
            j: lp.j,
            f,
            f_star,
            term,
            partial: partial.clone(),
            comparison,
            unquantized_term,
            quantized_bound,
            exceptional: exceptional_from(&core, &ms, &fs),
        });
    }
    out
}

/// `ε^{-p} 2^{-m} (1+j-εj)^{-1}` at `ε = j^{-1/p0}/2`, with `m` the least
/// integer certified to satisfy `2^{-m}(1+j-εj)^{-1} ≤ j^{-2}/2`.
fn unquantized_term(j: usize, p0: &Rational, p: &Rational) -> Enclosure {
    let jr = int(j as i64);
    let root = pow_enclosure(&jr, &(Rational::one() / p0));
    // ε = 1/(2 root), so 1 + j - εj = 1 + j - j/(2 root).
    let spread =
        Enclosure { lo: int(1) + &jr - &jr / (int(2) * &root.lo), hi: int(1) + &jr - &jr / (int(2) * &root.hi) };
    let bound = Rational::one() / (int(2) * &jr * &jr);
    let mut m = 1i64;
    while pow2(-m) / &spread.lo > bound {
        m += 1;
    }
    let inv_eps_p = pow_enclosure(&jr, &(p / p0)).mul_nonneg(&pow_enclosure(&int(2), p));
    inv_eps_p.mul_nonneg(&Enclosure::exact(pow2(-m)).div_pos(&spread))
}

/// `max(0, |core|(1 - ∏(1 - 2^-m_j)) - Σ|F_j|)` in the full-cover limit.
pub fn exceptional_lower_bound(s: &Schedule, levels: usize) -> Rational {
    let closed = closed_form_ledger(s);
    let ms: Vec<u32> = s.levels[..levels].iter().map(|l| l.m).collect();
    let f: Vec<Rational> = closed[..levels].iter().map(|x| x.0.clone()).collect();
    exceptional_from(&int(1), &ms, &f)
}

/// `Σ_{j ≤ J} j^-2 / 2`.
pub fn split_bound(levels: usize) -> Rational {
    (1..=levels).map(|j| Rational::new(1.into(), (2 * j * j).into())).sum()
}

/// Seeded random class function with small rational values.
pub fn random_class_function<'t, 'a>(tree: &'t PathTree<'a>, seed: u64) -> ClassFunction<'t, 'a> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sparse = rng.gen_bool(0.5);
    let values: Vec<Rational> = (0..tree.nodes.len())
        .map(|n| {
            if !tree.is_leaf(n) || (sparse && rng.gen_bool(0.7)) {
                Rational::zero()
            } else {
                Rational::new(rng.gen_range(0..12).into(), rng.gen_range(1..4).into())
            }
        })
        .collect();
    ClassFunction::new(tree, values)
}

pub fn two_pow(m: u32) -> Rational {
    pow2(-(m as i64))
}

pub fn as_u64(n: &BigUint) -> Option<u64> {
    n.to_u64()
}
