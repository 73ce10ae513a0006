//! Rubio de Francia building blocks: the cells `V_m`, the subgroups `H_m`,
//! the cubes `Q_k = (0, 2^-k)^{k+1}` and grids of their translates.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Box, Interval};
use crate::rational::{self, dyadic_level, from_biguint, int, pow2, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RdfCell {
    pub m: u64,
    pub exponents: Vec<u32>,
}

impl RdfCell {
    pub fn to_box(&self) -> Box {
        Box::dyadic_corner(&self.exponents)
    }

    pub fn measure(&self) -> Rational {
        pow2(-(self.exponents.iter().map(|e| *e as i64).sum::<i64>()))
    }
}

/// `V_m`. Starting from `(k, …, k)` with `k+1` entries at `m = k² + k`, the
/// next `k+1` steps raise coordinates `1..=k+1` to `k+1` one at a time and
/// the following `k+1` steps open coordinate `k+2` and raise it to `k+1`.
pub fn v_cell(m: u64) -> RdfCell {
    assert!(m >= 1, "V_m needs m ≥ 1");
    let mut k = 0u64;
    while (k + 1) * (k + 2) <= m {
        k += 1;
    }
    let r = m - k * (k + 1);
    let width = (k + 1) as usize;
    let mut e = vec![k as u32; width];
    if r <= k + 1 {
        for x in e.iter_mut().take(r as usize) {
            *x += 1;
        }
    } else {
        for x in e.iter_mut() {
            *x += 1;
        }
        e.push((r - k - 1) as u32);
    }
    RdfCell { m, exponents: e }
}

pub fn q_cube(k: u32) -> Box {
    Box::dyadic_corner(&vec![k; k as usize + 1])
}

pub fn q_measure(k: u32) -> Rational {
    pow2(-((k as i64) * (k as i64 + 1)))
}

/// Enumerator over `H_m`-style corner lattices `∏ 2^-e_i {0, …, 2^e_i - 1}`.
#[derive(Clone, Debug)]
pub struct CornerGrid {
    exponents: Vec<u32>,
}

impl CornerGrid {
    /// Corners of `P_k = H_{k²+k}`.
    pub fn p_grid(k: u32) -> Self {
        CornerGrid { exponents: vec![k; k as usize + 1] }
    }

    pub fn h_grid(m: u64) -> Self {
        CornerGrid { exponents: v_cell(m).exponents }
    }

    pub fn len(&self) -> BigUint {
        BigUint::one() << self.exponents.iter().map(|e| *e as usize).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> CornerIter {
        CornerIter { exponents: self.exponents.clone(), counter: Some(vec![0; self.exponents.len()]) }
    }
}

pub struct CornerIter {
    exponents: Vec<u32>,
    counter: Option<Vec<u64>>,
}

impl Iterator for CornerIter {
    type Item = Vec<Rational>;

    fn next(&mut self) -> Option<Vec<Rational>> {
        let cur = self.counter.as_mut()?;
        let out = cur
            .iter()
            .zip(&self.exponents)
            .map(|(c, e)| Rational::new((*c).into(), (BigUint::one() << *e as usize).into()))
            .collect();
        let mut i = cur.len();
        loop {
            if i == 0 {
                self.counter = None;
                break;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < 1u64 << self.exponents[i] {
                break;
            }
            cur[i] = 0;
        }
        Some(out)
    }
}

/// A translate `g + Q_k`; the torus itself is the level-0 cube.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cube {
    pub level: u32,
    #[serde(with = "rational::serde_rat_vec")]
    pub corner: Vec<Rational>,
}

impl Cube {
    pub fn torus() -> Self {
        Cube { level: 0, corner: vec![Rational::zero()] }
    }

    pub fn origin(level: u32) -> Self {
        Cube { level, corner: vec![Rational::zero(); level as usize + 1] }
    }

    pub fn side(&self) -> Rational {
        pow2(-(self.level as i64))
    }

    pub fn to_box(&self) -> Box {
        let s = self.side();
        let sides: Vec<_> = self.corner.iter().map(|g| (g.clone(), g + &s)).collect();
        Box::leading(&sides).expect("cube inside torus")
    }

    pub fn measure(&self) -> Rational {
        q_measure(self.level)
    }
}

/// All `Q_k` translates inside a product of aligned index ranges on
/// coordinates `1..=k+1`; ranges are in units of `2^-k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QGrid {
    pub level: u32,
    pub ranges: Vec<(u64, u64)>,
}

impl QGrid {
    pub fn count(&self) -> BigUint {
        self.ranges.iter().fold(BigUint::one(), |acc, (a, b)| acc * BigUint::from(b - a))
    }

    pub fn measure(&self) -> Rational {
        from_biguint(&self.count()) * q_measure(self.level)
    }

    pub fn region(&self) -> Box {
        let s = pow2(-(self.level as i64));
        let sides: Vec<_> = self.ranges.iter().map(|(a, b)| (&s * int(*a as i64), &s * int(*b as i64))).collect();
        Box::leading(&sides).expect("grid inside torus")
    }

    /// Cube number `idx` in lexicographic corner order.
    pub fn cell(&self, idx: &BigUint) -> Cube {
        let mut rem = idx.clone();
        let mut corner = vec![Rational::zero(); self.ranges.len()];
        let s = pow2(-(self.level as i64));
        for (i, (a, b)) in self.ranges.iter().enumerate().rev() {
            let (q, r) = rem.div_rem(&BigUint::from(b - a));
            corner[i] = &s * int((a + r.to_u64().unwrap()) as i64);
            rem = q;
        }
        Cube { level: self.level, corner }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cube> + '_ {
        let n = self.count().to_u64().expect("grid too large to list");
        (0..n).map(move |i| self.cell(&BigUint::from(i)))
    }

    /// The grid moved by `g`, a corner on an aligned coarser lattice.
    pub fn translated(&self, g: &[Rational]) -> QGrid {
        let scale = pow2(self.level as i64);
        let mut ranges = self.ranges.clone();
        for (i, t) in g.iter().enumerate() {
            let sh = (t * &scale).to_integer().to_u64().expect("aligned shift");
            ranges[i].0 += sh;
            ranges[i].1 += sh;
        }
        QGrid { level: self.level, ranges }
    }

    /// Same region viewed at a finer level.
    pub fn refined(&self, level: u32) -> QGrid {
        assert!(level >= self.level);
        let f = 1u64 << (level - self.level);
        let mut ranges: Vec<(u64, u64)> = self.ranges.iter().map(|(a, b)| (a * f, b * f)).collect();
        while ranges.len() < level as usize + 1 {
            ranges.push((0, 1u64 << level));
        }
        QGrid { level, ranges }
    }
}

/// Tiling of `U` by translates `g + Q_k`.
pub fn qgrid_of(u: &Box, k: u32) -> Result<QGrid> {
    if u.max_coord() > k as usize + 1 {
        return Err(Error::Misaligned {
            level: k,
            detail: format!("coordinate {} exceeds k+1 = {}", u.max_coord(), k + 1),
        });
    }
    let scale = pow2(k as i64);
    let mut ranges = Vec::new();
    for i in 1..=k as usize + 1 {
        let iv = u.interval(i);
        let a = &iv.lo * &scale;
        let b = &iv.hi * &scale;
        if !a.is_integer() || !b.is_integer() {
            return Err(Error::Misaligned { level: k, detail: format!("side {i} is {}", iv.len()) });
        }
        ranges.push((a.to_integer().to_u64().unwrap(), b.to_integer().to_u64().unwrap()));
    }
    Ok(QGrid { level: k, ranges })
}

pub fn split_into_qcubes(u: &Box, k: u32) -> Result<Vec<Box>> {
    let g = qgrid_of(u, k)?;
    Ok(g.cells().map(|c| c.to_box()).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rdf0Witness {
    pub m: u64,
    #[serde(with = "rational::serde_rat_vec")]
    pub corner: Vec<Rational>,
}

/// Whether `b = t + V_m` with `t ∈ H_m`.
pub fn is_rdf0_element(b: &Box) -> Option<Rdf0Witness> {
    let c = b.constrained();
    if c.is_empty() {
        return None;
    }
    let mut exps = Vec::new();
    for (n, (i, iv)) in c.iter().enumerate() {
        if *i != n + 1 {
            return None;
        }
        let len = iv.len();
        let e = dyadic_level(&len)?;
        if len != pow2(-(e as i64)) || !(&iv.lo / &len).is_integer() {
            return None;
        }
        exps.push(e);
    }
    let m: u64 = exps.iter().map(|e| *e as u64).sum();
    if m == 0 || v_cell(m).exponents != exps {
        return None;
    }
    Some(Rdf0Witness { m, corner: c.iter().map(|(_, iv)| iv.lo.clone()).collect() })
}

/// Maximal decomposition of `region ⊆ parent` into grids of `Q_k` cubes
/// with `k ≥ min_level`. Region boxes must span the parent's full range
/// outside the coordinates where they differ from it.
pub fn decompose_into_qgrids(parent: &Cube, region: &[Box], min_level: u32, max_level: u32) -> Result<Vec<QGrid>> {
    let pbox = parent.to_box();
    let mut active: Vec<usize> = Vec::new();
    for b in region {
        if !pbox.contains(b) {
            return Err(Error::Invalid(format!("region box {b} leaves the parent cube")));
        }
        for (i, iv) in b.constrained() {
            if *iv != pbox.interval(*i) {
                let lo = dyadic_level(&iv.lo);
                let hi = dyadic_level(&iv.hi);
                if lo.is_none_or(|l| l > max_level) || hi.is_none_or(|l| l > max_level) {
                    return Err(Error::NonDyadic { value: format!("{}", iv.lo), max_level });
                }
                active.push(*i);
            }
        }
    }
    active.sort_unstable();
    active.dedup();
    let mut start = parent.level.max(min_level);
    if let Some(&top) = active.last() {
        start = start.max(top as u32 - 1);
    }
    let ctx = Ctx { parent, region, active: &active, max_level };
    // Starting cells: the parent's range on active coordinates at `start`.
    let mut per: Vec<Vec<Rational>> = Vec::new();
    let side = pow2(-(start as i64));
    for &i in &active {
        let iv = pbox.interval(i);
        let n = (iv.len() / &side).to_integer().to_u64().unwrap();
        per.push((0..n).map(|t| &iv.lo + &side * int(t as i64)).collect());
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; active.len()];
    loop {
        let corner: Vec<Rational> = idx.iter().zip(&per).map(|(t, v)| v[*t].clone()).collect();
        ctx.visit(start, corner, &mut out)?;
        let mut i = idx.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < per[i].len() {
                break;
            }
            idx[i] = 0;
        }
    }
}

struct Ctx<'a> {
    parent: &'a Cube,
    region: &'a [Box],
    active: &'a [usize],
    max_level: u32,
}

impl Ctx<'_> {
    fn visit(&self, level: u32, corner: Vec<Rational>, out: &mut Vec<QGrid>) -> Result<()> {
        let side = pow2(-(level as i64));
        let cell: Vec<Interval> = corner.iter().map(|a| Interval { lo: a.clone(), hi: a + &side }).collect();
        let full = num_traits::pow(side.clone(), self.active.len());
        let mut covered = Rational::zero();
        for b in self.region {
            let mut m = Rational::one();
            for (n, &i) in self.active.iter().enumerate() {
                m *= cell[n].overlap(&b.interval(i));
                if m.is_zero() {
                    break;
                }
            }
            covered += m;
        }
        if covered.is_zero() {
            return Ok(());
        }
        if covered == full {
            out.push(self.grid(level, &cell));
            return Ok(());
        }
        if level >= self.max_level {
            return Err(Error::NonDyadic { value: "region boundary".into(), max_level: self.max_level });
        }
        let half = pow2(-(level as i64 + 1));
        let n = self.active.len();
        for mask in 0..(1u32 << n) {
            let child: Vec<Rational> = (0..n)
                .map(|t| if mask >> (n - 1 - t) & 1 == 1 { &corner[t] + &half } else { corner[t].clone() })
                .collect();
            self.visit(level + 1, child, out)?;
        }
        Ok(())
    }

    fn grid(&self, level: u32, cell: &[Interval]) -> QGrid {
        let scale = pow2(level as i64);
        let pbox = self.parent.to_box();
        let idx = |x: &Rational| (x * &scale).to_integer().to_u64().unwrap();
        let ranges = (1..=level as usize + 1)
            .map(|i| {
                let iv = match self.active.iter().position(|&a| a == i) {
                    Some(n) => cell[n].clone(),
                    None => pbox.interval(i),
                };
                (idx(&iv.lo), idx(&iv.hi))
            })
            .collect();
        QGrid { level, ranges }
    }
}
