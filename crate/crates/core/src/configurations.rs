//! `(ε, d)`-configurations: a base box `Q0` with `d` translates, each
//! shifted along one coordinate so that it overlaps `Q0` in an `ε` fraction.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arrangement::{atoms, Atom};
use crate::error::{Error, Result};
use crate::geometry::{Box, Interval};
use crate::rational::{self, int, pow2, pow_enclosure, rat, to_f64, Enclosure, Rational};
use crate::weak::{weak_type, Part, WeakTypeValue};

/// Largest `d` for which cells are enumerated explicitly.
pub const ATOM_MODE_CAP: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    pub base: Box,
    #[serde(with = "rational::serde_rat")]
    pub eps: Rational,
    pub d: usize,
    pub shift_coords: Vec<usize>,
    pub translates: Vec<Box>,
}

pub fn check_eps(eps: &Rational) -> Result<()> {
    if *eps <= Rational::zero() || *eps > rat(1, 2) {
        return Err(Error::EpsilonRange(rational::format(eps)));
    }
    Ok(())
}

/// Exponent `(d-1)² + 1` of the measure bound on `Q0`.
pub fn base_exponent(d: usize) -> u64 {
    ((d as u64).saturating_sub(1)).pow(2) + 1
}

pub fn make_configuration(base: &Box, eps: &Rational, d: usize) -> Result<Configuration> {
    check_eps(eps)?;
    if d == 0 {
        return Err(Error::Invalid("d must be positive".into()));
    }
    let exponent = base_exponent(d);
    let measure = base.measure();
    if measure > pow2(-(exponent as i64)) {
        return Err(Error::MeasureBound { measure: rational::format(&measure), exponent, d });
    }
    let have = base.constrained().len();
    if have < d {
        return Err(Error::TooFewCoordinates { have, need: d });
    }
    let shift_coords: Vec<usize> = base.constrained().iter().take(d).map(|(i, _)| *i).collect();
    let mut translates = Vec::with_capacity(d);
    for &i in &shift_coords {
        let t = (int(1) - eps) * base.interval(i).len();
        translates.push(base.shifted(&[(i, t)])?);
    }
    Ok(Configuration { base: base.clone(), eps: eps.clone(), d, shift_coords, translates })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub region: Box,
    /// Membership in `[Q0, Q1, …, Qd]`.
    pub pattern: Vec<bool>,
}

impl Configuration {
    /// `[Q0, Q1, …, Qd]`.
    pub fn members(&self) -> Vec<Box> {
        std::iter::once(self.base.clone()).chain(self.translates.iter().cloned()).collect()
    }

    pub fn union_measure(&self) -> Rational {
        let d = int(self.d as i64);
        (int(1) + &d - &self.eps * &d) * self.base.measure()
    }

    /// Overlap slab `[a + (1-ε)s, a + s)` of coordinate `t` of the base.
    fn slab(&self, t: usize) -> (Interval, Interval, Interval) {
        let iv = self.base.interval(self.shift_coords[t]);
        let cut = &iv.lo + (int(1) - &self.eps) * iv.len();
        let inner = Interval { lo: iv.lo.clone(), hi: cut.clone() };
        let slab = Interval { lo: cut, hi: iv.hi.clone() };
        let outer = self.translates[t].interval(self.shift_coords[t]);
        let outside = Interval { lo: iv.hi.clone(), hi: outer.hi };
        (inner, slab, outside)
    }

    /// `2^d` cells inside `Q0` (one per subset, bit `t` = in `Q_{t+1}`),
    /// then the `d` cells `Q_i ∖ Q0`.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        if self.d > ATOM_MODE_CAP {
            return Err(Error::AtomCap { d: self.d, cap: ATOM_MODE_CAP });
        }
        let parts: Vec<_> = (0..self.d).map(|t| self.slab(t)).collect();
        let mut out = Vec::with_capacity((1 << self.d) + self.d);
        for s in 0..(1usize << self.d) {
            let mut b = self.base.clone();
            let mut pattern = vec![true];
            for (t, (inner, slab, _)) in parts.iter().enumerate() {
                let inside = s >> t & 1 == 1;
                b = b.with_interval(self.shift_coords[t], if inside { slab } else { inner }.clone());
                pattern.push(inside);
            }
            out.push(Cell { region: b, pattern });
        }
        for (t, (_, _, outside)) in parts.iter().enumerate() {
            let mut pattern = vec![false; self.d + 1];
            pattern[t + 1] = true;
            out.push(Cell { region: self.base.with_interval(self.shift_coords[t], outside.clone()), pattern });
        }
        Ok(out)
    }

    /// Closed-form cell measures in the order of [`Configuration::cells`].
    pub fn cell_measures(&self) -> Vec<Rational> {
        let q = self.base.measure();
        let mut out: Vec<Rational> = (0..(1usize << self.d.min(ATOM_MODE_CAP)))
            .map(|s| {
                let k = s.count_ones();
                rational::pow_int(&self.eps, k) * rational::pow_int(&(int(1) - &self.eps), self.d as u32 - k) * &q
            })
            .collect();
        out.extend((0..self.d).map(|_| (int(1) - &self.eps) * &q));
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Small,
    Log,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    #[serde(with = "rational::serde_rat")]
    pub p: Rational,
    #[serde(with = "rational::serde_rat")]
    pub p_star: Rational,
    pub a_p: f64,
    pub regime: Regime,
    pub value: f64,
}

/// Representative of the weak-type norm's order of growth in terms of
/// `A_p = ε d^{1/p}`.
pub fn norm_growth_estimate(eps: &Rational, d: usize, p: &Rational) -> Result<NormEstimate> {
    check_eps(eps)?;
    if *p <= int(1) {
        return Err(Error::ExponentRange(rational::format(p)));
    }
    let p_star = p / (p - int(1));
    let ps = to_f64(&p_star);
    let a = to_f64(eps) * (d as f64).powf(1.0 / to_f64(p));
    Ok(oracle_from_a(p.clone(), p_star, ps, a))
}

pub fn oracle_from_a(p: Rational, p_star: Rational, ps: f64, a: f64) -> NormEstimate {
    let low = ps * (-ps).exp();
    let high = ps * (-1f64).exp();
    let (regime, value) = if a <= low {
        (Regime::Small, 1.0)
    } else if a <= high {
        (Regime::Log, ps / (ps / a).ln())
    } else {
        (Regime::Linear, std::f64::consts::E * a)
    };
    NormEstimate { p, p_star, a_p: a, regime, value }
}

/// `max(1, ε (1 + d - εd)^{1/p})`, the value realized by `1_{Q0}`.
pub fn single_configuration_bound(eps: &Rational, d: usize, p: &Rational) -> Enclosure {
    let dd = int(d as i64);
    let u = int(1) + &dd - eps * &dd;
    let second = rational::root_enclosure(&u, p).scale(eps);
    if second.hi < int(1) {
        Enclosure::exact(int(1))
    } else if second.lo >= int(1) {
        second
    } else {
        Enclosure { lo: int(1), hi: second.hi }
    }
}

/// Parts of the atom partition for values on atoms.
pub fn atom_parts(at: &[Atom], n_boxes: usize, values: &[Rational]) -> Vec<Part> {
    let mut sum = vec![Rational::zero(); n_boxes];
    let mut meas = vec![Rational::zero(); n_boxes];
    for (a, v) in at.iter().zip(values) {
        for (b, m) in a.mask.iter().enumerate() {
            if *m {
                sum[b] += v * &a.measure;
                meas[b] += &a.measure;
            }
        }
    }
    let avg: Vec<Rational> = sum.iter().zip(&meas).map(|(s, m)| s / m).collect();
    at.iter()
        .zip(values)
        .map(|(a, v)| {
            let maximal = a
                .mask
                .iter()
                .enumerate()
                .filter(|(_, m)| **m)
                .map(|(b, _)| avg[b].clone())
                .max()
                .unwrap_or_else(Rational::zero);
            Part { measure: a.measure.clone(), value: v.clone(), maximal }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakTypeSearch {
    pub best: WeakTypeValue,
    /// Value of the best function on each atom.
    #[serde(with = "rational::serde_rat_vec")]
    pub witness: Vec<Rational>,
    pub candidates: usize,
}

/// Lower bound on the weak-type quasi-norm of the maximal operator of a
/// finite collection, by search over atom-valued functions.
pub fn weak_type_lower_search(collection: &[Box], p: &Rational, budget: usize, seed: u64) -> WeakTypeSearch {
    let empty = WeakTypeSearch { best: WeakTypeValue::zero(), witness: Vec::new(), candidates: 0 };
    if collection.is_empty() {
        return empty;
    }
    let at = atoms(collection);
    let inside: Vec<usize> = (0..at.len()).filter(|&i| !at[i].is_outside()).collect();
    let indicator = |sel: &dyn Fn(&Atom) -> bool| -> Vec<Rational> {
        at.iter().map(|a| if !a.is_outside() && sel(a) { int(1) } else { int(0) }).collect()
    };
    let mut cands: Vec<Vec<Rational>> = Vec::new();
    for &i in &inside {
        cands.push(indicator(&|a: &Atom| std::ptr::eq(a, &at[i])));
    }
    for b in 0..collection.len() {
        cands.push(indicator(&|a: &Atom| a.mask[b]));
    }
    cands.push(indicator(&|_| true));
    if inside.len() <= 10 {
        for s in 1u32..(1 << inside.len()) {
            let chosen: Vec<usize> = (0..inside.len()).filter(|t| s >> t & 1 == 1).map(|t| inside[t]).collect();
            cands.push(at.iter().enumerate().map(|(i, _)| if chosen.contains(&i) { int(1) } else { int(0) }).collect());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        cands.push(at.iter().map(|a| if a.is_outside() { int(0) } else { int(rng.gen_range(0..9)) }).collect());
    }
    let mut best = empty;
    best.candidates = cands.len();
    for f in cands {
        let w = weak_type(&atom_parts(&at, collection.len(), &f), p);
        if w.value.mid() > best.best.value.mid() {
            best.best = w;
            best.witness = f;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringWitness {
    pub selected: Vec<usize>,
    pub exhaustive: bool,
    /// `μ(∪E) / μ(∪F)`.
    #[serde(with = "rational::serde_rat")]
    pub cover_constant: Rational,
    /// `‖Σ 1_F‖_{p*}^{p*}`.
    pub overlap_pp: Enclosure,
    /// `‖Σ 1_F‖_{p*} / μ(∪E)^{1/p*}`.
    pub overlap_constant: f64,
    pub constant: f64,
}

/// Subcollection `F ⊆ E` covering at least half of `∪E` that minimizes the
/// larger of the two covering constants, then the overlap norm.
pub fn covering_witness_search(e: &[Box], p_star: &Rational, budget: usize) -> Result<CoveringWitness> {
    if e.is_empty() {
        return Err(Error::Invalid("empty collection".into()));
    }
    if e.len() > 64 {
        return Err(Error::Invalid("at most 64 boxes".into()));
    }
    let at: Vec<Atom> = atoms(e).into_iter().filter(|a| !a.is_outside()).collect();
    let masks: Vec<u64> =
        at.iter().map(|a| a.mask.iter().enumerate().fold(0u64, |m, (i, b)| if *b { m | 1 << i } else { m })).collect();
    let meas: Vec<f64> = at.iter().map(|a| to_f64(&a.measure)).collect();
    let union_e: f64 = meas.iter().sum();
    let ps = to_f64(p_star);
    let pow_table: Vec<f64> = (0..=e.len()).map(|c| (c as f64).powf(ps)).collect();
    let score = |f: u64| -> Option<(f64, f64)> {
        let mut cov = 0.0;
        let mut norm = 0.0;
        for (m, w) in masks.iter().zip(&meas) {
            let c = (m & f).count_ones() as usize;
            if c > 0 {
                cov += w;
                norm += w * pow_table[c];
            }
        }
        if cov < union_e / 2.0 * (1.0 - 1e-12) {
            return None;
        }
        let c1 = union_e / cov;
        let c2 = (norm / union_e).powf(1.0 / ps);
        Some((c1.max(c2), norm))
    };
    let better = |a: (f64, f64, u64), b: (f64, f64, u64)| -> bool {
        let tol = 1e-12;
        if (a.0 - b.0).abs() > tol * b.0 {
            return a.0 < b.0;
        }
        if (a.1 - b.1).abs() > tol * b.1 {
            return a.1 < b.1;
        }
        if a.2.count_ones() != b.2.count_ones() {
            return a.2.count_ones() < b.2.count_ones();
        }
        let diff = a.2 ^ b.2;
        diff != 0 && a.2 & (diff & diff.wrapping_neg()) != 0
    };
    let exhaustive = e.len() <= 20;
    let mut best: Option<(f64, f64, u64)> = None;
    let mut consider = |f: u64| {
        if let Some((c, n)) = score(f) {
            if best.is_none_or(|b| better((c, n, f), b)) {
                best = Some((c, n, f));
            }
        }
    };
    if exhaustive {
        for f in 1u64..(1u64 << e.len()) {
            consider(f);
        }
    } else {
        // Greedy: add the box with the best coverage gain per added overlap.
        let mut f = 0u64;
        let mut steps = 0;
        while steps < budget.max(1) && f.count_ones() < e.len() as u32 {
            let mut pick = None;
            let mut pick_gain = f64::NEG_INFINITY;
            for i in 0..e.len() {
                if f >> i & 1 == 1 {
                    continue;
                }
                let g = f | 1 << i;
                let (mut gain, mut cost) = (0.0, 0.0);
                for (m, w) in masks.iter().zip(&meas) {
                    if m >> i & 1 == 1 {
                        if m & f == 0 {
                            gain += w;
                        }
                        let c = (m & g).count_ones() as usize;
                        cost += w * (pow_table[c] - pow_table[c - 1]);
                    }
                }
                let r = gain / cost;
                if r > pick_gain {
                    pick_gain = r;
                    pick = Some(i);
                }
            }
            let Some(i) = pick else { break };
            f |= 1 << i;
            consider(f);
            steps += 1;
        }
    }
    let (constant, _, f) = best.ok_or_else(|| Error::Invalid("no admissible subcollection".into()))?;
    let selected: Vec<usize> = (0..e.len()).filter(|i| f >> i & 1 == 1).collect();
    let union_exact: Rational = at.iter().map(|a| a.measure.clone()).sum();
    let mut cov = Rational::zero();
    let mut overlap_pp = Enclosure::exact(Rational::zero());
    for (a, m) in at.iter().zip(&masks) {
        let c = (m & f).count_ones();
        if c > 0 {
            cov += &a.measure;
            overlap_pp = overlap_pp.add(&pow_enclosure(&int(c as i64), p_star).scale(&a.measure));
        }
    }
    let overlap_constant = (overlap_pp.mid() / to_f64(&union_exact)).powf(1.0 / ps);
    Ok(CoveringWitness {
        selected,
        exhaustive,
        cover_constant: union_exact / cov,
        overlap_pp,
        overlap_constant,
        constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q0() -> Box {
        Box::dyadic_corner(&[1, 1])
    }

    #[test]
    fn figure_configuration() {
        let c = make_configuration(&q0(), &rat(1, 4), 2).unwrap();
        assert_eq!(c.translates[0], Box::leading(&[(rat(3, 8), rat(7, 8)), (int(0), rat(1, 2))]).unwrap());
        assert_eq!(c.translates[1], Box::leading(&[(int(0), rat(1, 2)), (rat(3, 8), rat(7, 8))]).unwrap());
        assert_eq!(c.union_measure(), rat(5, 8));
    }

    #[test]
    fn measure_bound_rejects() {
        let err = make_configuration(&q0(), &rat(1, 4), 3).unwrap_err();
        assert!(matches!(err, Error::MeasureBound { exponent: 5, .. }));
        assert!(matches!(make_configuration(&q0(), &rat(3, 4), 1), Err(Error::EpsilonRange(_))));
    }

    #[test]
    fn half_overlap_in_one_dimension() {
        let b = Box::dyadic_corner(&[1]);
        let c = make_configuration(&b, &rat(1, 2), 1).unwrap();
        assert_eq!(b.intersection_measure(&c.translates[0]), rat(1, 4));
    }

    #[test]
    fn cells_match_overlay() {
        for (e, d, base) in [(rat(1, 2), 1, Box::dyadic_corner(&[1])), (rat(1, 4), 2, q0())] {
            let c = make_configuration(&base, &e, d).unwrap();
            let cells = c.cells().unwrap();
            assert_eq!(cells.len(), (1 << d) + d);
            let overlay: Vec<Atom> = atoms(&c.members()).into_iter().filter(|a| !a.is_outside()).collect();
            assert_eq!(overlay.len(), cells.len());
            for cell in &cells {
                let a = overlay.iter().find(|a| a.mask == cell.pattern).unwrap();
                assert_eq!(a.measure, cell.region.measure());
            }
            let measures: Vec<Rational> = cells.iter().map(|x| x.region.measure()).collect();
            assert_eq!(measures, c.cell_measures());
            assert_eq!(measures.iter().sum::<Rational>(), c.union_measure());
        }
        let c = make_configuration(&Box::dyadic_corner(&[1]), &rat(1, 2), 1).unwrap();
        assert!(c.cells().unwrap().iter().all(|x| x.region.measure() == rat(1, 4)));
    }

    #[test]
    fn oracle_examples() {
        let o = norm_growth_estimate(&rat(1, 8), 1, &int(2)).unwrap();
        assert_eq!((o.regime, o.value), (Regime::Small, 1.0));
        let o = norm_growth_estimate(&rat(1, 2), 1, &int(2)).unwrap();
        assert_eq!(o.regime, Regime::Log);
        assert!((o.value - 2.0 / 4f64.ln()).abs() < 1e-12);
        let o = norm_growth_estimate(&rat(1, 2), 4096, &int(2)).unwrap();
        assert_eq!(o.regime, Regime::Linear);
        assert!((o.value - 32.0 * std::f64::consts::E).abs() < 1e-9);
        assert!(norm_growth_estimate(&rat(1, 2), 1, &int(1)).is_err());
    }

    #[test]
    fn search_examples() {
        assert_eq!(weak_type_lower_search(&[], &int(2), 5, 0).best, WeakTypeValue::zero());
        let c = make_configuration(&q0(), &rat(1, 4), 2).unwrap();
        let s = weak_type_lower_search(&c.members(), &int(2), 20, 7);
        let bound = single_configuration_bound(&rat(1, 4), 2, &int(2));
        assert!(s.best.value.lo >= bound.lo);
    }

    #[test]
    fn witness_disjoint_pair() {
        let a = Box::leading(&[(int(0), rat(1, 4))]).unwrap();
        let b = Box::leading(&[(rat(1, 2), rat(3, 4))]).unwrap();
        let w = covering_witness_search(&[a, b], &int(2), 10).unwrap();
        assert_eq!(w.selected, vec![0, 1]);
        assert_eq!(w.overlap_pp, Enclosure::exact(rat(1, 2)));
        assert_eq!(w.cover_constant, int(1));
    }

    #[test]
    fn witness_nested_pair() {
        let a = Box::leading(&[(int(0), rat(1, 2))]).unwrap();
        let b = Box::leading(&[(int(0), rat(1, 8))]).unwrap();
        let w = covering_witness_search(&[a, b], &int(2), 10).unwrap();
        assert_eq!(w.selected, vec![0]);
    }
}
