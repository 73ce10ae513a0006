//! Cylinder boxes on the infinite torus: finitely many constrained
//! coordinates, each a half-open interval `[a, b)` inside `[0, 1)`.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, dyadic_level, int, pow2, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo.is_negative() || hi > int(1) || lo >= hi {
            return Err(Error::MalformedBox(format!(
                "interval [{}, {}) not inside [0, 1)",
                rational::format(&lo),
                rational::format(&hi)
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn full() -> Self {
        Interval { lo: Rational::zero(), hi: Rational::one() }
    }

    pub fn is_full(&self) -> bool {
        self.lo.is_zero() && self.hi.is_one()
    }

    pub fn len(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn intersect(&self, o: &Interval) -> Option<Interval> {
        let lo = (&self.lo).max(&o.lo).clone();
        let hi = (&self.hi).min(&o.hi).clone();
        (lo < hi).then_some(Interval { lo, hi })
    }

    pub fn overlap(&self, o: &Interval) -> Rational {
        self.intersect(o).map(|i| i.len()).unwrap_or_else(Rational::zero)
    }

    pub fn contains(&self, o: &Interval) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    pub fn contains_point(&self, x: &Rational) -> bool {
        &self.lo <= x && x < &self.hi
    }

    fn shifted(&self, t: &Rational) -> Interval {
        Interval { lo: &self.lo + t, hi: &self.hi + t }
    }
}

/// Axis-aligned cylinder box. Coordinates are 1-based; full-circle
/// intervals are never stored, so equal boxes compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Box {
    coords: Vec<(usize, Interval)>,
}

impl Box {
    pub fn full() -> Self {
        Box { coords: Vec::new() }
    }

    pub fn new(coords: Vec<(usize, Interval)>) -> Result<Self> {
        for w in coords.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::MalformedBox("coordinate indices must increase".into()));
            }
        }
        for (i, iv) in &coords {
            if *i == 0 {
                return Err(Error::MalformedBox("coordinates are 1-based".into()));
            }
            Interval::new(iv.lo.clone(), iv.hi.clone())?;
        }
        Ok(Box { coords: coords.into_iter().filter(|(_, iv)| !iv.is_full()).collect() })
    }

    /// Box from `(coordinate, lo, hi)` triples.
    pub fn from_triples(t: &[(usize, Rational, Rational)]) -> Result<Self> {
        let mut v: Vec<(usize, Interval)> =
            t.iter().map(|(i, a, b)| (*i, Interval { lo: a.clone(), hi: b.clone() })).collect();
        v.sort_by_key(|(i, _)| *i);
        Box::new(v)
    }

    /// `∏_{i ≤ n} [lo_i, hi_i)` on the leading coordinates.
    pub fn leading(sides: &[(Rational, Rational)]) -> Result<Self> {
        let t: Vec<_> = sides.iter().enumerate().map(|(i, (a, b))| (i + 1, a.clone(), b.clone())).collect();
        Box::from_triples(&t)
    }

    /// `∏ [0, 2^-e_i)` on the leading coordinates.
    pub fn dyadic_corner(exponents: &[u32]) -> Self {
        let coords = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (i + 1, Interval { lo: Rational::zero(), hi: pow2(-(*e as i64)) }))
            .collect();
        Box::new(coords).expect("dyadic corner is well formed")
    }

    pub fn constrained(&self) -> &[(usize, Interval)] {
        &self.coords
    }

    pub fn is_full(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn max_coord(&self) -> usize {
        self.coords.last().map(|(i, _)| *i).unwrap_or(0)
    }

    pub fn interval(&self, i: usize) -> Interval {
        match self.coords.binary_search_by_key(&i, |(j, _)| *j) {
            Ok(k) => self.coords[k].1.clone(),
            Err(_) => Interval::full(),
        }
    }

    pub fn measure(&self) -> Rational {
        self.coords.iter().fold(Rational::one(), |acc, (_, iv)| acc * iv.len())
    }

    fn merged_indices(&self, o: &Box) -> Vec<usize> {
        let mut idx: Vec<usize> = self.coords.iter().chain(o.coords.iter()).map(|(i, _)| *i).collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    pub fn intersect(&self, o: &Box) -> Option<Box> {
        let mut coords = Vec::new();
        for i in self.merged_indices(o) {
            let iv = self.interval(i).intersect(&o.interval(i))?;
            coords.push((i, iv));
        }
        Some(Box { coords: coords.into_iter().filter(|(_, iv)| !iv.is_full()).collect() })
    }

    pub fn intersection_measure(&self, o: &Box) -> Rational {
        self.intersect(o).map(|b| b.measure()).unwrap_or_else(Rational::zero)
    }

    pub fn is_disjoint(&self, o: &Box) -> bool {
        self.intersect(o).is_none()
    }

    /// `o ⊆ self`.
    pub fn contains(&self, o: &Box) -> bool {
        self.coords.iter().all(|(i, iv)| iv.contains(&o.interval(*i)))
    }

    pub fn contains_point(&self, x: &[Rational]) -> bool {
        self.coords.iter().all(|(i, iv)| iv.contains_point(x.get(i - 1).unwrap_or(&Rational::zero())))
    }

    pub fn with_interval(&self, i: usize, iv: Interval) -> Box {
        let mut coords: Vec<_> = self.coords.iter().filter(|(j, _)| *j != i).cloned().collect();
        if !iv.is_full() {
            coords.push((i, iv));
            coords.sort_by_key(|(j, _)| *j);
        }
        Box { coords }
    }

    /// Translation modulo 1 in one coordinate, split at the seam when needed.
    pub fn translate(&self, i: usize, shift: &Rational) -> BoxSet {
        assert!(!shift.is_negative() && shift < &int(1), "shift outside [0, 1)");
        let iv = self.interval(i);
        if iv.is_full() || shift.is_zero() {
            return BoxSet { boxes: vec![self.clone()] };
        }
        let one = int(1);
        let mut s = iv.shifted(shift);
        if s.lo >= one {
            s = s.shifted(&-&one);
        }
        if s.hi <= one {
            return BoxSet { boxes: vec![self.with_interval(i, s)] };
        }
        let right = Interval { lo: s.lo, hi: one.clone() };
        let left = Interval { lo: Rational::zero(), hi: s.hi - one };
        BoxSet { boxes: vec![self.with_interval(i, right), self.with_interval(i, left)] }
    }

    /// Translation by a vector without wrap; fails if any side leaves `[0, 1)`.
    pub fn shifted(&self, offset: &[(usize, Rational)]) -> Result<Box> {
        let mut b = self.clone();
        for (i, t) in offset {
            if t.is_zero() {
                continue;
            }
            let iv = b.interval(*i);
            if iv.is_full() {
                return Err(Error::Wrap(*i));
            }
            let s = iv.shifted(t);
            if s.lo.is_negative() || s.hi > int(1) {
                return Err(Error::Wrap(*i));
            }
            b = b.with_interval(*i, s);
        }
        Ok(b)
    }

    /// Translation by multiples of the corner vector `g` (leading coordinates).
    pub fn offset_by(&self, g: &[Rational]) -> Box {
        let off: Vec<_> = g.iter().enumerate().map(|(i, t)| (i + 1, t.clone())).collect();
        self.shifted(&off).expect("offset keeps the box inside the torus")
    }

    /// `self ∖ o` as disjoint boxes.
    pub fn difference(&self, o: &Box) -> Vec<Box> {
        let Some(inter) = self.intersect(o) else {
            return vec![self.clone()];
        };
        let mut out = Vec::new();
        let mut rest = self.clone();
        for (i, iv) in inter.coords.iter() {
            let cur = rest.interval(*i);
            if cur.lo < iv.lo {
                out.push(rest.with_interval(*i, Interval { lo: cur.lo.clone(), hi: iv.lo.clone() }));
            }
            if iv.hi < cur.hi {
                out.push(rest.with_interval(*i, Interval { lo: iv.hi.clone(), hi: cur.hi.clone() }));
            }
            rest = rest.with_interval(*i, iv.clone());
        }
        out
    }

    /// Corner (lower endpoints) on coordinates `1..=n`.
    pub fn corner(&self, n: usize) -> Vec<Rational> {
        (1..=n).map(|i| self.interval(i).lo).collect()
    }

    /// Supremum of the product metric over pairs of points of the box.
    pub fn diameter(&self) -> Rational {
        let half = rational::rat(1, 2);
        let mut d = half.clone();
        for (i, iv) in &self.coords {
            let s = iv.len().min(half.clone());
            d -= (&half - s) * pow2(-(*i as i64));
        }
        d
    }

    pub fn lex_cmp(&self, o: &Box) -> Ordering {
        let n = self.max_coord().max(o.max_coord());
        self.corner(n).cmp(&o.corner(n)).then_with(|| self.cmp(o))
    }
}

impl fmt::Display for Box {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coords.is_empty() {
            return write!(f, "T^ω");
        }
        let mut prev = 0;
        for (k, (i, iv)) in self.coords.iter().enumerate() {
            if k > 0 {
                write!(f, "×")?;
            }
            if *i > prev + 1 {
                write!(f, "T^{}×", i - prev - 1)?;
            }
            write!(f, "[{},{})", iv.lo, iv.hi)?;
            prev = *i;
        }
        write!(f, "×T^{{{},ω}}", prev)
    }
}

#[derive(Serialize, Deserialize)]
struct CoordJson {
    i: usize,
    #[serde(with = "rational::serde_rat")]
    a: Rational,
    #[serde(with = "rational::serde_rat")]
    b: Rational,
}

#[derive(Serialize, Deserialize)]
struct BoxJson {
    coords: Vec<CoordJson>,
}

impl Serialize for Box {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BoxJson {
            coords: self.coords.iter().map(|(i, iv)| CoordJson { i: *i, a: iv.lo.clone(), b: iv.hi.clone() }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Box {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = BoxJson::deserialize(d)?;
        Box::new(j.coords.into_iter().map(|c| (c.i, Interval { lo: c.a, hi: c.b })).collect())
            .map_err(serde::de::Error::custom)
    }
}

/// Pairwise-disjoint boxes.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BoxSet {
    boxes: Vec<Box>,
}

impl BoxSet {
    pub fn new(boxes: Vec<Box>) -> Result<Self> {
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if !boxes[i].is_disjoint(&boxes[j]) {
                    return Err(Error::Overlap(i, j));
                }
            }
        }
        Ok(BoxSet { boxes })
    }

    pub fn empty() -> Self {
        BoxSet { boxes: Vec::new() }
    }

    pub fn single(b: Box) -> Self {
        BoxSet { boxes: vec![b] }
    }

    pub fn boxes(&self) -> &[Box] {
        &self.boxes
    }

    pub fn into_boxes(self) -> Vec<Box> {
        self.boxes
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn measure(&self) -> Rational {
        self.boxes.iter().map(|b| b.measure()).sum()
    }

    pub fn subtract(&self, o: &Box) -> BoxSet {
        BoxSet { boxes: self.boxes.iter().flat_map(|b| b.difference(o)).collect() }
    }

    pub fn intersect_box(&self, o: &Box) -> BoxSet {
        BoxSet { boxes: self.boxes.iter().filter_map(|b| b.intersect(o)).collect() }
    }

    /// Disjoint decomposition of an arbitrary union of boxes.
    pub fn union_of(boxes: &[Box]) -> BoxSet {
        let mut out: Vec<Box> = Vec::new();
        for b in boxes {
            let mut pieces = vec![b.clone()];
            for o in &out {
                pieces = pieces.iter().flat_map(|p| p.difference(o)).collect();
            }
            out.extend(pieces);
        }
        BoxSet { boxes: out }
    }
}

/// Distance on the first `truncation` coordinates of the product metric
/// `Σ 2^-d min(|x_d - y_d|, 1 - |x_d - y_d|)`, with the bound `[0, 2^-D]`
/// on the neglected tail.
pub fn torus_metric(x: &[Rational], y: &[Rational], truncation: usize) -> (Rational, (Rational, Rational)) {
    let zero = Rational::zero();
    let mut s = Rational::zero();
    for d in 1..=truncation {
        let a = x.get(d - 1).unwrap_or(&zero);
        let b = y.get(d - 1).unwrap_or(&zero);
        let t = (a - b).abs();
        let t = t.clone().min(int(1) - t);
        s += t * pow2(-(d as i64));
    }
    (s, (Rational::zero(), pow2(-(truncation as i64))))
}

fn check_dyadic(x: &Rational, max_level: u32) -> Result<u32> {
    match dyadic_level(x) {
        Some(l) if l <= max_level => Ok(l),
        _ => Err(Error::NonDyadic { value: rational::format(x), max_level }),
    }
}

/// Maximal dyadic intervals of level at least `min_level` tiling `[lo, hi)`.
fn dyadic_intervals(iv: &Interval, min_level: u32) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut a = iv.lo.clone();
    while a < iv.hi {
        let mut l = min_level as i64;
        loop {
            let side = pow2(-l);
            let aligned = (&a / &side).is_integer();
            if aligned && &a + &side <= iv.hi {
                out.push(Interval { lo: a.clone(), hi: &a + &side });
                a += side;
                break;
            }
            l += 1;
        }
    }
    out
}

fn interval_level(iv: &Interval) -> Option<u32> {
    let len = iv.len();
    let l = dyadic_level(&len)?;
    (len == pow2(-(l as i64))).then_some(l)
}

/// Maximal products of dyadic intervals tiling `region`; every piece has
/// level ≥ `min_level` in each constrained coordinate. Output is sorted by
/// corner.
pub fn dyadic_decompose(region: &BoxSet, min_level: u32, max_level: u32) -> Result<Vec<Box>> {
    for b in region.boxes() {
        for (_, iv) in b.constrained() {
            check_dyadic(&iv.lo, max_level)?;
            check_dyadic(&iv.hi, max_level)?;
        }
    }
    let mut pieces: Vec<Box> = Vec::new();
    for b in region.boxes() {
        let mut acc = vec![Box::full()];
        for (i, iv) in b.constrained() {
            let parts = dyadic_intervals(iv, min_level);
            acc = acc.iter().flat_map(|p| parts.iter().map(move |q| p.with_interval(*i, q.clone()))).collect();
        }
        pieces.extend(acc);
    }
    // Merge sibling pairs until none remain.
    loop {
        let mut merged = false;
        'outer: for x in 0..pieces.len() {
            for y in x + 1..pieces.len() {
                if let Some(p) = merge_siblings(&pieces[x], &pieces[y], min_level) {
                    pieces.swap_remove(y);
                    pieces[x] = p;
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    pieces.sort_by(|a, b| a.lex_cmp(b));
    Ok(pieces)
}

fn merge_siblings(a: &Box, b: &Box, min_level: u32) -> Option<Box> {
    let idx = a.merged_indices(b);
    let diff: Vec<usize> = idx.iter().copied().filter(|i| a.interval(*i) != b.interval(*i)).collect();
    if diff.len() != 1 {
        return None;
    }
    let i = diff[0];
    let (x, y) = (a.interval(i), b.interval(i));
    let l = interval_level(&x)?;
    if interval_level(&y)? != l || l == 0 || l - 1 < min_level {
        return None;
    }
    let (lo, hi) = if x.hi == y.lo {
        (x.lo, y.hi)
    } else if y.hi == x.lo {
        (y.lo, x.hi)
    } else {
        return None;
    };
    let parent = pow2(-(l as i64 - 1));
    if !(&lo / &parent).is_integer() {
        return None;
    }
    Some(a.with_interval(i, Interval { lo, hi }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn iv(a: Rational, b: Rational) -> Interval {
        Interval { lo: a, hi: b }
    }

    #[test]
    fn full_torus_measure() {
        assert_eq!(Box::full().measure(), int(1));
    }

    #[test]
    fn v7_measure() {
        assert_eq!(Box::dyadic_corner(&[3, 2, 2]).measure(), rat(1, 128));
    }

    #[test]
    fn touching_intervals_are_disjoint() {
        let a = Box::leading(&[(int(0), rat(1, 2))]).unwrap();
        let b = Box::leading(&[(rat(1, 2), int(1))]).unwrap();
        assert!(a.intersect(&b).is_none());
        assert_eq!(a.intersect(&a), Some(a.clone()));
    }

    #[test]
    fn overlap_with_translate() {
        let q0 = Box::dyadic_corner(&[1, 1]);
        let q1 = q0.translate(1, &rat(3, 8)).into_boxes().remove(0);
        let i = q0.intersect(&q1).unwrap();
        assert_eq!(i, Box::leading(&[(rat(3, 8), rat(1, 2)), (int(0), rat(1, 2))]).unwrap());
        assert_eq!(i.measure(), rat(1, 16));
    }

    #[test]
    fn translate_without_straddle() {
        let b = Box::leading(&[(rat(3, 4), int(1))]).unwrap();
        let t = b.translate(1, &rat(1, 2));
        assert_eq!(t.boxes(), &[Box::leading(&[(rat(1, 4), rat(1, 2))]).unwrap()]);
        assert_eq!(b.translate(1, &int(0)).boxes(), std::slice::from_ref(&b));
    }

    #[test]
    fn translate_with_wrap() {
        let b = Box::leading(&[(rat(3, 5), rat(9, 10))]).unwrap();
        let t = b.translate(1, &rat(3, 10));
        assert_eq!(
            t.boxes(),
            &[Box::leading(&[(rat(9, 10), int(1))]).unwrap(), Box::leading(&[(int(0), rat(1, 5))]).unwrap()]
        );
        assert_eq!(t.measure(), b.measure());
    }

    #[test]
    fn metric_examples() {
        let x = vec![int(0)];
        let (d, tail) = torus_metric(&x, &x, 3);
        assert_eq!(d, int(0));
        assert_eq!(tail.1, rat(1, 8));
        let (d, _) = torus_metric(&[int(0), int(0)], &[rat(1, 2), int(0)], 2);
        assert_eq!(d, rat(1, 4));
    }

    #[test]
    fn diameter_of_half_slab() {
        assert_eq!(Box::leading(&[(int(0), rat(1, 2))]).unwrap().diameter(), rat(1, 2));
        assert_eq!(Box::full().diameter(), rat(1, 2));
    }

    #[test]
    fn decompose_examples() {
        assert!(dyadic_decompose(&BoxSet::empty(), 0, 10).unwrap().is_empty());
        let r = BoxSet::single(Box::leading(&[(rat(3, 8), rat(1, 2))]).unwrap());
        let d = dyadic_decompose(&r, 0, 10).unwrap();
        assert_eq!(d, vec![Box::leading(&[(rat(3, 8), rat(1, 2))]).unwrap()]);
        let r = BoxSet::single(Box::leading(&[(rat(1, 4), rat(5, 8))]).unwrap());
        let d = dyadic_decompose(&r, 0, 10).unwrap();
        assert_eq!(
            d,
            vec![Box::leading(&[(rat(1, 4), rat(1, 2))]).unwrap(), Box::leading(&[(rat(1, 2), rat(5, 8))]).unwrap()]
        );
    }

    #[test]
    fn decompose_rejects_non_dyadic() {
        let r = BoxSet::single(Box::leading(&[(int(0), rat(1, 3))]).unwrap());
        assert!(matches!(dyadic_decompose(&r, 0, 10), Err(Error::NonDyadic { .. })));
        let r = BoxSet::single(Box::leading(&[(int(0), rat(1, 64))]).unwrap());
        assert!(dyadic_decompose(&r, 0, 5).is_err());
    }

    #[test]
    fn decompose_merges_across_boxes() {
        let a = Box::leading(&[(int(0), rat(1, 4)), (int(0), rat(1, 2))]).unwrap();
        let b = Box::leading(&[(rat(1, 4), rat(1, 2)), (int(0), rat(1, 2))]).unwrap();
        let d = dyadic_decompose(&BoxSet::new(vec![a, b]).unwrap(), 0, 8).unwrap();
        assert_eq!(d, vec![Box::dyadic_corner(&[1, 1])]);
    }

    #[test]
    fn difference_tiles() {
        let a = Box::dyadic_corner(&[1, 1]);
        let b = Box::leading(&[(rat(1, 8), rat(1, 4)), (rat(1, 8), rat(3, 8))]).unwrap();
        let parts = a.difference(&b);
        let s = BoxSet::new(parts).unwrap();
        assert_eq!(s.measure(), a.measure() - b.measure());
        assert!(s.boxes().iter().all(|p| a.contains(p) && p.is_disjoint(&b)));
    }

    #[test]
    fn full_intervals_are_dropped() {
        let b = Box::new(vec![(1, iv(int(0), int(1))), (2, iv(int(0), rat(1, 2)))]).unwrap();
        assert_eq!(b.constrained().len(), 1);
        assert_eq!(b.max_coord(), 2);
    }

    #[test]
    fn json_round_trip() {
        let b = Box::leading(&[(int(0), rat(1, 2)), (rat(1, 4), rat(3, 4))]).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"coords":[{"i":1,"a":"0/1","b":"1/2"},{"i":2,"a":"1/4","b":"3/4"}]}"#);
        let back: Box = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
    }
}
