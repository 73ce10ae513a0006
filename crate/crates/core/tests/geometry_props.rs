use diffbasis::geometry::{dyadic_decompose, BoxSet, Interval};
use diffbasis::rational::{int, pow2, Rational};
use diffbasis::rdf::{q_cube, v_cell, CornerGrid};
use diffbasis::Box;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use proptest::prelude::*;

/// Dyadic box on coordinates 1..=3 with sides of level 1..=4.
fn dyadic_box() -> impl Strategy<Value = Box> {
    prop::collection::vec((1u32..=4, any::<u16>(), any::<bool>()), 3).prop_map(|sides| {
        let coords = sides
            .iter()
            .enumerate()
            .filter(|(_, (_, _, free))| !free)
            .map(|(i, (l, s, _))| {
                let n = (*s as i64) % (1 << l);
                let len = pow2(-(*l as i64));
                (i + 1, Interval::new(int(n) * &len, int(n + 1) * &len).unwrap())
            })
            .collect();
        Box::new(coords).unwrap()
    })
}

fn region() -> impl Strategy<Value = BoxSet> {
    prop::collection::vec(dyadic_box(), 1..5).prop_map(|b| BoxSet::union_of(&b))
}

fn merges(a: &Box, b: &Box) -> bool {
    let n = a.max_coord().max(b.max_coord());
    let differ: Vec<usize> = (1..=n).filter(|i| a.interval(*i) != b.interval(*i)).collect();
    if differ.len() != 1 {
        return false;
    }
    let (x, y) = (a.interval(differ[0]), b.interval(differ[0]));
    let (lo, hi) = if x.lo < y.lo { (x, y) } else { (y, x) };
    if lo.hi != hi.lo || lo.len() != hi.len() {
        return false;
    }
    // Siblings: the lower one starts on a multiple of twice the length.
    let twice = lo.len() * int(2);
    (&lo.lo / &twice).is_integer()
}

proptest! {
    #[test]
    fn union_measure_is_additive(boxes in prop::collection::vec(dyadic_box(), 1..6)) {
        let u = BoxSet::union_of(&boxes);
        let sum: Rational = u.boxes().iter().map(|b| b.measure()).sum();
        prop_assert_eq!(u.measure(), sum);
        for (i, a) in u.boxes().iter().enumerate() {
            for b in &u.boxes()[i + 1..] {
                prop_assert!(a.is_disjoint(b));
            }
        }
        if boxes.len() >= 2 {
            let two = BoxSet::union_of(&boxes[..2]);
            let a = &boxes[0];
            let b = &boxes[1];
            prop_assert_eq!(two.measure(), a.measure() + b.measure() - a.intersection_measure(b));
        }
    }

    #[test]
    fn intersection_is_bounded(a in dyadic_box(), b in dyadic_box()) {
        let m = a.intersection_measure(&b);
        prop_assert!(m <= a.measure() && m <= b.measure());
        prop_assert_eq!(m.is_zero(), a.is_disjoint(&b));
    }

    #[test]
    fn decomposition_is_sound_and_maximal(r in region()) {
        let pieces = dyadic_decompose(&r, 0, 12).unwrap();
        let sum: Rational = pieces.iter().map(|b| b.measure()).sum();
        prop_assert_eq!(sum, r.measure());
        for (i, a) in pieces.iter().enumerate() {
            prop_assert_eq!(r.intersect_box(a).measure(), a.measure());
            for b in &pieces[i + 1..] {
                prop_assert!(a.is_disjoint(b));
                prop_assert!(!merges(a, b), "{} and {} merge", a, b);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn translation_preserves_measure(b in dyadic_box(), coord in 1usize..=4, k in 0i64..64, level in 0u32..7) {
        let shift = int(k % (1 << level)) * pow2(-(level as i64));
        let t = b.translate(coord, &shift);
        prop_assert_eq!(t.measure(), b.measure());
    }
}

#[test]
fn v_cells_halve() {
    for m in 1..=60u64 {
        assert_eq!(v_cell(m + 1).measure() * int(2), v_cell(m).measure(), "m = {m}");
    }
    assert_eq!(v_cell(1).measure(), pow2(-1));
}

#[test]
fn h_translates_tile_the_torus() {
    for m in 1..=20u64 {
        let grid = CornerGrid::h_grid(m);
        let total = Rational::from_integer(grid.len().into()) * v_cell(m).measure();
        assert_eq!(total, Rational::one(), "m = {m}");
    }
    // Explicit tiling for small m.
    for m in 1..=6u64 {
        let cell = v_cell(m).to_box();
        let pieces: Vec<Box> = CornerGrid::h_grid(m).iter().map(|g| cell.offset_by(&g)).collect();
        assert_eq!(BoxSet::union_of(&pieces).measure(), Rational::one());
        let sum: Rational = pieces.iter().map(|b| b.measure()).sum();
        assert_eq!(sum, Rational::one());
    }
}

#[test]
fn q_cubes_and_p_grids_are_dual() {
    for k in 0..=10u32 {
        let n: BigUint = CornerGrid::p_grid(k).len();
        assert_eq!(q_cube(k).measure() * Rational::from_integer(n.into()), Rational::one());
    }
}
