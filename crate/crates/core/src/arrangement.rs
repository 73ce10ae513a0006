//! Atoms of the σ-algebra generated by finitely many boxes.

use num_traits::Zero;

use crate::geometry::Box;
use crate::rational::Rational;

/// Points sharing one membership pattern. `pieces` tile the atom.
#[derive(Clone, Debug)]
pub struct Atom {
    pub mask: Vec<bool>,
    pub pieces: Vec<Box>,
    pub measure: Rational,
}

impl Atom {
    pub fn is_outside(&self) -> bool {
        self.mask.iter().all(|m| !m)
    }
}

/// Refines the torus by every box in turn and groups pieces by pattern.
/// Atoms come out in order of first appearance; the atom outside every box
/// is included when nonempty.
pub fn atoms(collection: &[Box]) -> Vec<Atom> {
    let mut pieces: Vec<(Vec<bool>, Box)> = vec![(Vec::new(), Box::full())];
    for b in collection {
        let mut next = Vec::with_capacity(pieces.len() * 2);
        for (mask, p) in pieces {
            if let Some(inside) = p.intersect(b) {
                let mut m = mask.clone();
                m.push(true);
                next.push((m, inside));
                for rest in p.difference(b) {
                    let mut m = mask.clone();
                    m.push(false);
                    next.push((m, rest));
                }
            } else {
                let mut m = mask;
                m.push(false);
                next.push((m, p));
            }
        }
        pieces = next;
    }
    let mut out: Vec<Atom> = Vec::new();
    for (mask, p) in pieces {
        match out.iter_mut().find(|a| a.mask == mask) {
            Some(a) => {
                a.measure += p.measure();
                a.pieces.push(p);
            }
            None => out.push(Atom { measure: p.measure(), mask, pieces: vec![p] }),
        }
    }
    out.retain(|a| !a.measure.is_zero());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn two_overlapping_intervals() {
        let a = Box::leading(&[(int(0), rat(1, 2))]).unwrap();
        let b = Box::leading(&[(rat(1, 4), rat(3, 4))]).unwrap();
        let at = atoms(&[a, b]);
        assert_eq!(at.len(), 4);
        let total: Rational = at.iter().map(|a| a.measure.clone()).sum();
        assert_eq!(total, int(1));
        let both = at.iter().find(|a| a.mask == vec![true, true]).unwrap();
        assert_eq!(both.measure, rat(1, 4));
    }
}
