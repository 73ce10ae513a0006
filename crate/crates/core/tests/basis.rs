use diffbasis::basis::{
    build_basis, classify_diff_range, closed_form_ledger, schedule_custom, schedule_geq, schedule_gt, solve_m,
    verify_axioms, AxiomOptions, Host, Selection, Verdict,
};
use diffbasis::error::Error;
use diffbasis::maximal::PathTree;
use diffbasis::rational::{from_biguint, int, pow2, rat, to_f64, Rational};
use diffbasis::Box;
use num_traits::Zero;

fn band_holds(j: usize, d: usize, eps: &Rational, m: u32) -> bool {
    let dd = int(d as i64);
    let x = pow2(-(m as i64)) / (int(1) + &dd - eps * &dd);
    let jj = int((j * j) as i64);
    rat(1, 4) / &jj < x && x <= rat(1, 2) / &jj
}

#[test]
fn solve_m_examples() {
    assert_eq!(solve_m(1, 1, &rat(1, 2)).unwrap(), 1);
    assert_eq!(solve_m(4, 4, &rat(1, 4)).unwrap(), 3);
    // 2^{-1/2}/2 ≈ 0.3536, bracketed by dyadics on both sides.
    assert_eq!(solve_m(2, 2, &rat(11, 32)).unwrap(), 2);
    assert_eq!(solve_m(2, 2, &rat(23, 64)).unwrap(), 2);
}

#[test]
fn solve_m_rejects_unsolvable() {
    // (1 + 3 - 3/4)/2 > 1 at j = 1.
    let e = solve_m(1, 3, &rat(1, 4)).unwrap_err();
    assert!(matches!(e, Error::Unsolvable { j: 1, .. }), "{e}");
    assert!(schedule_custom(&[(3, rat(1, 4))]).is_err());
}

#[test]
fn geq_schedule_matches_targets() {
    let s = schedule_geq(&int(2), 3, 0).unwrap();
    let got: Vec<(usize, u32)> = s.levels.iter().map(|l| (l.d, l.m)).collect();
    assert_eq!(got, vec![(1, 1), (2, 2), (3, 3)]);
    let targets = [0.5, 0.5f64.sqrt() / 2.0, (1.0 / 3f64.sqrt()) / 2.0];
    for (l, t) in s.levels.iter().zip(targets) {
        assert!((l.eps_target - t).abs() < 1e-12);
    }
    assert_eq!(s.levels[0].eps, rat(1, 2));
}

#[test]
fn gt_first_target_is_half_log_two() {
    let s = schedule_gt(&int(2), 1, 0).unwrap();
    assert!((s.levels[0].eps_target - 2f64.ln() / 2.0).abs() < 1e-12);
}

#[test]
fn p0_one_is_degenerate() {
    assert!(schedule_geq(&int(1), 2, 0).unwrap().degenerate);
    assert!(!schedule_geq(&int(2), 2, 0).unwrap().degenerate);
}

#[test]
fn quantization_stays_in_band_and_m_bound_holds() {
    for p0 in [int(1), rat(3, 2), int(2), int(3)] {
        for g in [0, 3] {
            for s in [schedule_geq(&p0, 64, g).unwrap(), schedule_gt(&p0, 64, g).unwrap()] {
                for l in &s.levels {
                    let e = to_f64(&l.eps);
                    assert!(e <= l.eps_target && e >= l.eps_target / 2.0, "j={} eps={e} target={}", l.j, l.eps_target);
                    assert!(band_holds(l.j, l.d, &l.eps, l.m), "j={}", l.j);
                    assert_eq!(l.d, l.j);
                }
            }
        }
    }
}

#[test]
fn classifier_examples() {
    let geq = schedule_geq(&int(2), 2, 0).unwrap();
    let gt = schedule_gt(&int(2), 2, 0).unwrap();
    assert_eq!(classify_diff_range(&geq, &int(2)).unwrap(), Verdict::In);
    assert_eq!(classify_diff_range(&geq, &rat(3, 2)).unwrap(), Verdict::Out);
    assert_eq!(classify_diff_range(&gt, &int(2)).unwrap(), Verdict::Out);
    let custom = schedule_custom(&[(1, rat(1, 2))]).unwrap();
    assert!(matches!(classify_diff_range(&custom, &int(2)), Err(Error::NoGrowth)));
}

#[test]
fn empty_schedule_gives_empty_basis() {
    let s = schedule_geq(&int(2), 0, 0).unwrap();
    let b = build_basis(&Box::full(), &s, 2).unwrap();
    assert_eq!(b.depth(), 0);
    assert!(verify_axioms(&b, &AxiomOptions::default()).passed());
}

#[test]
fn level_one_selects_half_of_the_covered_part() {
    let s = schedule_geq(&int(2), 1, 0).unwrap();
    let b = build_basis(&Box::full(), &s, 2).unwrap();
    let l = &b.ledger()[0];
    assert_eq!(&l.f_star / &l.covered, rat(1, 2));
}

#[test]
fn level_two_selects_a_quarter_of_each_atom() {
    let s = schedule_geq(&int(2), 2, 0).unwrap();
    let b = build_basis(&Box::full(), &s, 2).unwrap();
    let lvl = &b.levels[1];
    assert!(lvl.plans.len() > 1);
    for (h, plan) in &lvl.plans {
        assert!(matches!(h, Host::Cell { .. }));
        let (_, e) = lvl.selected_measures(h);
        assert_eq!(e, plan.covered_measure() / int(4));
    }
}

#[test]
fn depth_two_axioms_pass() {
    let s = schedule_geq(&int(2), 2, 0).unwrap();
    let b = build_basis(&Box::full(), &s, 2).unwrap();
    let rep = verify_axioms(&b, &AxiomOptions::default());
    assert!(rep.passed(), "{:?}", rep.first_failure());
    assert_eq!(rep.checks.len(), 5);
}

#[test]
fn shifted_selection_keeps_a4() {
    let s = schedule_geq(&int(2), 2, 0).unwrap();
    let b = build_basis(&Box::full(), &s, 2).unwrap();
    let shifted = b.with_selection(2, Selection { phase: 0, extra: vec![], removed: vec![] });
    let rep = verify_axioms(&shifted, &AxiomOptions::default());
    let a4 = rep.checks.iter().find(|c| c.name.starts_with("A4")).unwrap();
    assert!(a4.passed, "{}", a4.detail);
}

#[test]
fn extra_selection_breaks_a4_with_deficit() {
    let s = schedule_geq(&int(2), 1, 0).unwrap();
    let b = build_basis(&Box::full(), &s, 2).unwrap();
    let broken = b.with_selection(1, Selection { phase: 1, extra: vec!["0".into()], removed: vec![] });
    let rep = verify_axioms(&broken, &AxiomOptions::default());
    let a4 = rep.checks.iter().find(|c| c.name.starts_with("A4")).unwrap();
    assert!(!a4.passed);
    assert!(a4.detail.contains("deficit -"), "{}", a4.detail);
}

#[test]
fn ledger_agrees_with_class_counts() {
    let s = schedule_geq(&int(2), 2, 0).unwrap();
    let b = build_basis(&Box::full(), &s, 2).unwrap();
    let tree = PathTree::new(&b, 2);
    for l in b.ledger() {
        let mut f = Rational::zero();
        let mut f_star = Rational::zero();
        for n in 1..tree.nodes.len() {
            if tree.nodes[n].j == l.j && tree.is_selected(n) {
                let w = from_biguint(&tree.multiplicity(n)) * &tree.nodes[n].measure;
                if tree.in_base(n) {
                    f += &w;
                }
                f_star += w;
            }
        }
        assert_eq!(f, l.f, "level {}", l.j);
        assert_eq!(f_star, l.f_star, "level {}", l.j);
    }
}

#[test]
fn closed_form_first_level() {
    let s = schedule_geq(&int(2), 1, 0).unwrap();
    assert_eq!(closed_form_ledger(&s)[0], (rat(1, 3), rat(1, 2)));
}

#[test]
fn basis_json_round_trip() {
    let s = schedule_geq(&int(2), 2, 0).unwrap();
    let b = build_basis(&Box::full(), &s, 2).unwrap();
    let text = serde_json::to_string(&b).unwrap();
    let back: diffbasis::basis::LeveledBasis = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
    assert_eq!(back.levels[1].plans.len(), b.levels[1].plans.len());
}
