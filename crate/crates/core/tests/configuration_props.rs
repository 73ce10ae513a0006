use diffbasis::configurations::{
    make_configuration, oracle_from_a, single_configuration_bound, norm_growth_estimate, weak_type_lower_search,
};
use diffbasis::geometry::BoxSet;
use diffbasis::rational::{int, pow2, rat, to_f64, Rational};
use diffbasis::Box;
use proptest::prelude::*;

fn config_input() -> impl Strategy<Value = (Rational, usize, Box)> {
    (1usize..=6, 1i64..=8, prop::sample::select(vec![2i64, 4, 8, 16, 3, 5, 12]), prop::collection::vec(any::<u16>(), 8))
        .prop_map(|(d, a, den, starts)| {
            let eps = rat(a.min(den / 2).max(1), den);
            let need = ((d - 1) * (d - 1) + 1) as u32;
            let e = need.div_ceil(d as u32).max(2);
            let len = pow2(-(e as i64));
            let slots = (1i64 << e) - 2;
            let sides: Vec<(Rational, Rational)> = (0..d)
                .map(|i| {
                    let s = starts[i] as i64 % slots;
                    (int(s) * &len, int(s + 1) * &len)
                })
                .collect();
            (eps, d, Box::leading(&sides).unwrap())
        })
}

proptest! {
    #[test]
    fn union_identity_and_overlap_containment((eps, d, base) in config_input()) {
        let c = make_configuration(&base, &eps, d).unwrap();
        let members = c.members();
        let dd = int(d as i64);
        let want = (int(1) + &dd - &eps * &dd) * base.measure();
        prop_assert_eq!(BoxSet::union_of(&members).measure(), want);
        for i in 1..members.len() {
            for j in i + 1..members.len() {
                if let Some(x) = members[i].intersect(&members[j]) {
                    prop_assert!(base.contains(&x));
                }
            }
        }
        prop_assert_eq!(c.cells().unwrap().len(), (1 << d) + d);
    }

    #[test]
    fn search_respects_single_configuration_bound(d in 1usize..=4, q in 1u32..=3, p in prop::sample::select(vec![rat(3, 2), int(2), int(3)])) {
        let eps = pow2(-(q as i64));
        let e = (((d - 1) * (d - 1) + 1) as u32).div_ceil(d as u32).max(2);
        let base = Box::dyadic_corner(&vec![e; d]);
        let c = make_configuration(&base, &eps, d).unwrap();
        let w = weak_type_lower_search(&c.members(), &p, 4, 0);
        let lower = single_configuration_bound(&eps, d, &p);
        prop_assert!(w.best.value.hi >= lower.lo);
        let oracle = norm_growth_estimate(&eps, d, &p).unwrap();
        prop_assert!(w.best.value.mid() <= 8.0 * oracle.value);
    }
}

#[test]
fn oracle_is_monotone_in_a() {
    for p in [rat(11, 10), rat(3, 2), int(2), int(3), int(10)] {
        let ps = &p / (&p - int(1));
        let mut last = 0f64;
        for n in 1..=1000 {
            let a = n as f64 / 100.0;
            let v = oracle_from_a(p.clone(), ps.clone(), to_f64(&ps), a).value;
            assert!(v >= last, "p = {p}, A = {a}");
            last = v;
        }
    }
}
