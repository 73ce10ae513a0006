//! The weak-type ratio `sup_λ λ μ{Mf > λ}^{1/p} / ‖f‖_p` over a finite
//! partition on which both `|f|` and `Mf` are constant.

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, pow_enclosure, pow_int, root_enclosure, Enclosure, Rational};

#[derive(Clone, Debug)]
pub struct Part {
    pub measure: Rational,
    pub value: Rational,
    pub maximal: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakTypeValue {
    /// Attained maximal value approached from below.
    #[serde(with = "rational::serde_rat")]
    pub lambda: Rational,
    /// `μ{Mf ≥ lambda}`.
    #[serde(with = "rational::serde_rat")]
    pub level_measure: Rational,
    /// `‖f‖_p^p`.
    pub norm_pp: Enclosure,
    pub value: Enclosure,
}

impl WeakTypeValue {
    pub fn zero() -> Self {
        WeakTypeValue {
            lambda: Rational::zero(),
            level_measure: Rational::zero(),
            norm_pp: Enclosure::exact(Rational::zero()),
            value: Enclosure::exact(Rational::zero()),
        }
    }
}

pub fn norm_pp(parts: &[Part], p: &Rational) -> Enclosure {
    parts
        .iter()
        .filter(|x| !x.value.is_zero())
        .map(|x| pow_enclosure(&x.value.abs(), p).scale(&x.measure))
        .fold(Enclosure::exact(Rational::zero()), |a, b| a.add(&b))
}

/// Exact supremum over the attained levels. The comparison key is
/// `λ^a μ^b` for `p = a/b`, which orders `λ μ^{1/p}` without roots.
pub fn weak_type(parts: &[Part], p: &Rational) -> WeakTypeValue {
    let norm = norm_pp(parts, p);
    if norm.hi.is_zero() {
        return WeakTypeValue::zero();
    }
    let a = p.numer().to_u32().expect("exponent numerator");
    let b = p.denom().to_u32().expect("exponent denominator");
    let mut levels: Vec<&Rational> = parts.iter().map(|x| &x.maximal).filter(|v| v.is_positive()).collect();
    levels.sort();
    levels.dedup();
    let mut best: Option<(Rational, Rational, Rational)> = None;
    for v in levels {
        let mu: Rational = parts.iter().filter(|x| &x.maximal >= v).map(|x| x.measure.clone()).sum();
        let key = pow_int(v, a) * pow_int(&mu, b);
        if best.as_ref().is_none_or(|(k, _, _)| key > *k) {
            best = Some((key, v.clone(), mu));
        }
    }
    let Some((_, lambda, mu)) = best else {
        return WeakTypeValue { norm_pp: norm, ..WeakTypeValue::zero() };
    };
    let value = if norm.is_exact() {
        root_enclosure(&(&mu / &norm.lo), p).scale(&lambda)
    } else {
        let num = root_enclosure(&mu, p).scale(&lambda);
        let den = Enclosure { lo: root_enclosure(&norm.lo, p).lo, hi: root_enclosure(&norm.hi, p).hi };
        num.div_pos(&den)
    };
    WeakTypeValue { lambda, level_measure: mu, norm_pp: norm, value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn constant_function_on_probability_space() {
        let parts = vec![Part { measure: int(1), value: int(1), maximal: int(1) }];
        let w = weak_type(&parts, &int(2));
        assert!(w.value.contains(&int(1)));
        assert!(w.value.width() <= rational::pow2(-40));
    }

    #[test]
    fn zero_function() {
        let parts = vec![Part { measure: int(1), value: int(0), maximal: int(0) }];
        assert_eq!(weak_type(&parts, &rat(3, 2)), WeakTypeValue::zero());
    }

    #[test]
    fn picks_larger_level_set() {
        // f = 1 on a set of measure 1/4, Mf = 1/2 on measure 1.
        let parts = vec![
            Part { measure: rat(1, 4), value: int(1), maximal: int(1) },
            Part { measure: rat(3, 4), value: int(0), maximal: rat(1, 2) },
        ];
        let w = weak_type(&parts, &int(1));
        assert_eq!(w.lambda, rat(1, 2));
        assert_eq!(w.value, Enclosure::exact(int(2)));
    }
}
