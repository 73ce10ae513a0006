//! Leveled bases: level `j` covers every configuration cell of level `j-1`
//! with `(ε_j, d_j)`-configurations and selects one configuration out of
//! every block of `2^{m_j}`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::configurations::Configuration;
use crate::covering::{
    place, random_below, verify_plan, Check, CoverParams, CoveringPlan, Recipe, Report, VerifyOptions,
};
use crate::error::{Error, Result};
use crate::geometry::Box;
use crate::rational::{self, from_biguint, int, pow2, pow_int, rat, to_f64, Rational};
use crate::rdf::{is_rdf0_element, Cube};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Geq,
    Gt,
    Custom,
}

/// `ε_j d_j^{1/p} ≍ j^{1/p - a} log^b(j+1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Growth {
    #[serde(with = "rational::serde_rat")]
    pub a: Rational,
    #[serde(with = "rational::serde_rat")]
    pub b: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelParams {
    pub j: usize,
    pub d: usize,
    #[serde(with = "rational::serde_rat")]
    pub eps: Rational,
    pub eps_target: f64,
    pub target: String,
    pub m: u32,
}

impl LevelParams {
    pub fn cover(&self) -> CoverParams {
        CoverParams::new(self.eps.clone(), self.d, self.m).expect("schedule parameters are valid")
    }

    /// `1 + d - εd`.
    pub fn spread(&self) -> Rational {
        let d = int(self.d as i64);
        int(1) + &d - &self.eps * &d
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub variant: Variant,
    #[serde(with = "rational::serde_rat")]
    pub p0: Rational,
    pub granularity: u32,
    pub levels: Vec<LevelParams>,
    pub growth: Option<Growth>,
    /// `p0 = 1` with `≥`: the Rubio de Francia basis itself serves.
    pub degenerate: bool,
}

/// The unique `m ≥ 1` with `2^-m ∈ (x/4, x/2]`, `x = j^-2 (1 + d - εd)`.
pub fn solve_m(j: usize, d: usize, eps: &Rational) -> Result<u32> {
    let dd = int(d as i64);
    let x = (int(1) + &dd - eps * &dd) / int((j * j) as i64);
    let half = &x / int(2);
    if half >= int(1) {
        return Err(Error::Unsolvable { j, half: rational::format(&half) });
    }
    let mut m = 1u32;
    while pow2(-(m as i64)) > half {
        m += 1;
    }
    Ok(m)
}

/// Dyadic `ε ∈ [target/2, target]`: the largest power of two below the
/// target, refined on the `2^-(q+g)` grid when `g > 0`. `le` decides
/// `x ≤ target` exactly when the target allows it.
fn quantize(target: f64, granularity: u32, le: &dyn Fn(&Rational) -> bool) -> Rational {
    let mut q = 1u32;
    while !le(&pow2(-(q as i64))) {
        q += 1;
    }
    if granularity == 0 {
        return pow2(-(q as i64));
    }
    let den = 1i64 << (q + granularity);
    let mut n = (target * den as f64).floor() as i64;
    while n > 1 << granularity && !le(&rat(n, den)) {
        n -= 1;
    }
    rat(n.max(1 << granularity), den)
}

fn p0_parts(p0: &Rational) -> (u32, u32) {
    (p0.numer().to_u32().expect("p0 numerator"), p0.denom().to_u32().expect("p0 denominator"))
}

pub fn schedule_geq(p0: &Rational, depth: usize, granularity: u32) -> Result<Schedule> {
    if *p0 < int(1) {
        return Err(Error::Invalid("p0 must be at least 1".into()));
    }
    let (a, b) = p0_parts(p0);
    let inv = 1.0 / to_f64(p0);
    let mut levels = Vec::new();
    for j in 1..=depth {
        let target = (j as f64).powf(-inv) / 2.0;
        // x ≤ j^{-1/p0}/2  ⇔  (2x)^a j^b ≤ 1.
        let jb = pow_int(&int(j as i64), b);
        let le = |x: &Rational| pow_int(&(x * int(2)), a) * &jb <= int(1);
        let eps = quantize(target, granularity, &le);
        let m = solve_m(j, j, &eps)?;
        levels.push(LevelParams { j, d: j, eps, eps_target: target, target: format!("{j}^(-1/p0)/2"), m });
    }
    Ok(Schedule {
        variant: Variant::Geq,
        p0: p0.clone(),
        granularity,
        levels,
        growth: Some(Growth { a: Rational::one() / p0, b: Rational::zero() }),
        degenerate: p0 == &int(1),
    })
}

pub fn schedule_gt(p0: &Rational, depth: usize, granularity: u32) -> Result<Schedule> {
    if *p0 < int(1) {
        return Err(Error::Invalid("p0 must be at least 1".into()));
    }
    let inv = 1.0 / to_f64(p0);
    let mut levels = Vec::new();
    for j in 1..=depth {
        let l = ((j + 1) as f64).ln();
        let target = (j as f64 / (l * l)).powf(-inv) / 2.0;
        let le = |x: &Rational| to_f64(x) <= target * (1.0 - 1e-12);
        let eps = quantize(target, granularity, &le);
        let m = solve_m(j, j, &eps)?;
        levels.push(LevelParams {
            j,
            d: j,
            eps,
            eps_target: target,
            target: format!("({j}/log^2({}))^(-1/p0)/2", j + 1),
            m,
        });
    }
    Ok(Schedule {
        variant: Variant::Gt,
        p0: p0.clone(),
        granularity,
        levels,
        growth: Some(Growth { a: Rational::one() / p0, b: int(2) / p0 }),
        degenerate: false,
    })
}

/// Schedule from explicit `(d, ε)` pairs.
pub fn schedule_custom(pairs: &[(usize, Rational)]) -> Result<Schedule> {
    let mut levels = Vec::new();
    for (n, (d, eps)) in pairs.iter().enumerate() {
        let j = n + 1;
        let m = solve_m(j, *d, eps)?;
        levels.push(LevelParams { j, d: *d, eps: eps.clone(), eps_target: to_f64(eps), target: "given".into(), m });
    }
    Ok(Schedule { variant: Variant::Custom, p0: int(1), granularity: 0, levels, growth: None, degenerate: false })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    In,
    Out,
}

/// `L^p` lies in the range iff `sup_j ε_j d_j^{1/p} < ∞`, decided from the
/// growth exponents.
pub fn classify_diff_range(s: &Schedule, p: &Rational) -> Result<Verdict> {
    let g = s.growth.as_ref().ok_or(Error::NoGrowth)?;
    if *p < int(1) {
        return Err(Error::ExponentRange(rational::format(p)));
    }
    let e = Rational::one() / p - &g.a;
    Ok(if e.is_negative() || (e.is_zero() && !g.b.is_positive()) { Verdict::In } else { Verdict::Out })
}

/// Which level-`j-1` atom a plan covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Host {
    Region,
    Cell { level: u32, cell: usize },
}

/// Kinds of level-`j` atoms inside one host.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Child {
    Cell { level: u32, cell: usize, selected: bool },
    Residual { level: u32 },
}

/// `Λ_j`: plan indices `≡ phase (mod 2^m)`, adjusted by explicit additions
/// and removals applied inside every plan of the level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub phase: u64,
    #[serde(default)]
    pub extra: Vec<String>,
    #[serde(default)]
    pub removed: Vec<String>,
}

impl Selection {
    pub fn standard(m: u32) -> Self {
        Selection { phase: (1u64 << m) - 1, extra: Vec::new(), removed: Vec::new() }
    }

    fn parsed(v: &[String]) -> Vec<BigUint> {
        v.iter().map(|s| s.parse().expect("index")).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisLevel {
    pub j: usize,
    pub params: CoverParams,
    pub selection: Selection,
    #[serde(with = "host_map")]
    pub plans: BTreeMap<Host, CoveringPlan>,
}

/// JSON object keys must be strings, so plans are stored as a list.
mod host_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry<P> {
        host: Host,
        plan: P,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<Host, CoveringPlan>, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(m.iter().map(|(h, p)| Entry { host: *h, plan: p }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<Host, CoveringPlan>, D::Error> {
        let v: Vec<Entry<CoveringPlan>> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|e| (e.host, e.plan)).collect())
    }
}

impl BasisLevel {
    fn block(&self) -> BigUint {
        self.params.block()
    }

    /// Selected instances in class `ci` of `plan`.
    pub fn selected_in_class(&self, plan: &CoveringPlan, ci: usize) -> BigUint {
        let c = &plan.classes[ci];
        let block = self.block();
        debug_assert!((&c.siblings % &block).is_zero());
        let mut n = c.count() / &block;
        let end = &c.offset + c.count();
        let within = |i: &BigUint| *i >= c.offset && *i < end;
        for e in Selection::parsed(&self.selection.extra) {
            if within(&e) && !plan.is_selected(&e, self.selection.phase) {
                n += 1u32;
            }
        }
        for r in Selection::parsed(&self.selection.removed) {
            if within(&r) && plan.is_selected(&r, self.selection.phase) {
                n -= 1u32;
            }
        }
        n
    }

    pub fn is_selected(&self, plan: &CoveringPlan, index: &BigUint) -> bool {
        let s = index.to_string();
        if self.selection.removed.contains(&s) {
            return false;
        }
        self.selection.extra.contains(&s) || plan.is_selected(index, self.selection.phase)
    }

    /// Counts of level-`j` atom kinds inside one instance of `host`.
    pub fn children(&self, host: &Host) -> Vec<(Child, BigUint)> {
        let plan = &self.plans[host];
        let mut acc: BTreeMap<Child, BigUint> = BTreeMap::new();
        for (ci, c) in plan.classes.iter().enumerate() {
            let total = c.count();
            let sel = self.selected_in_class(plan, ci);
            let cells = plan.cells_at(c.level).len();
            for cell in 0..cells {
                *acc.entry(Child::Cell { level: c.level, cell, selected: true }).or_default() += &sel;
                *acc.entry(Child::Cell { level: c.level, cell, selected: false }).or_default() += &total - &sel;
            }
        }
        for r in &plan.residual {
            *acc.entry(Child::Residual { level: r.level }).or_default() += r.count();
        }
        acc.into_iter().filter(|(_, n)| !n.is_zero()).collect()
    }

    /// `Σ_{n ∈ Λ} |Q_n|` and `Σ_{n ∈ Λ} |E_n|` inside one host.
    pub fn selected_measures(&self, host: &Host) -> (Rational, Rational) {
        let plan = &self.plans[host];
        let mut q = Rational::zero();
        let mut e = Rational::zero();
        for (ci, c) in plan.classes.iter().enumerate() {
            let n = from_biguint(&self.selected_in_class(plan, ci));
            let rec = &plan.recipes[&c.level];
            q += &n * rec.configuration.base.measure();
            e += &n * rec.union_measure();
        }
        (q, e)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelLedger {
    pub j: usize,
    pub d: usize,
    #[serde(with = "rational::serde_rat")]
    pub eps: Rational,
    pub m: u32,
    /// `|F_j|`.
    #[serde(with = "rational::serde_rat")]
    pub f: Rational,
    /// `|F*_j|`.
    #[serde(with = "rational::serde_rat")]
    pub f_star: Rational,
    /// Measure covered by level-`j` configuration unions.
    #[serde(with = "rational::serde_rat")]
    pub covered: Rational,
    /// Points covered at every level up to `j`.
    #[serde(with = "rational::serde_rat")]
    pub core: Rational,
    /// Atoms left to the residual because they could not host a configuration.
    pub deferred: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeveledBasis {
    pub region: Box,
    pub schedule: Schedule,
    pub rounds: u32,
    pub levels: Vec<BasisLevel>,
}

/// `1 - (1-c)^T`.
pub fn kappa(p: &CoverParams, rounds: u32) -> Rational {
    int(1) - pow_int(&(int(1) - p.c()), rounds)
}

pub fn build_basis(u: &Box, s: &Schedule, rounds: u32) -> Result<LeveledBasis> {
    if rounds == 0 && !s.levels.is_empty() {
        return Err(Error::Invalid("rounds must be at least 1".into()));
    }
    let mut levels: Vec<BasisLevel> = Vec::new();
    let mut hosts = vec![Host::Region];
    for lp in &s.levels {
        let params = lp.cover();
        let mut recipes = BTreeMap::new();
        let mut plans = BTreeMap::new();
        for h in &hosts {
            let (parent, region) = match h {
                Host::Region => (Cube::torus(), vec![u.clone()]),
                Host::Cell { level, cell } => {
                    let prev = levels.last().expect("previous level");
                    let rec = prev.plans.values().find_map(|p| p.recipes.get(level)).expect("host recipe");
                    (Cube::origin(*level), vec![rec.cells[*cell].region.clone()])
                }
            };
            plans.insert(*h, CoveringPlan::build(parent, region, params.clone(), rounds, &mut recipes)?);
        }
        let level = BasisLevel { j: lp.j, params: params.clone(), selection: Selection::standard(lp.m), plans };
        let mut next: Vec<Host> = Vec::new();
        for p in level.plans.values() {
            for c in &p.classes {
                for cell in 0..p.cells_at(c.level).len() {
                    next.push(Host::Cell { level: c.level, cell });
                }
            }
        }
        next.sort();
        next.dedup();
        hosts = next;
        levels.push(level);
    }
    Ok(LeveledBasis { region: u.clone(), schedule: s.clone(), rounds, levels })
}

impl LeveledBasis {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn recipe(&self, j: usize, level: u32) -> &Recipe {
        self.levels[j - 1].plans.values().find_map(|p| p.recipes.get(&level)).expect("recipe")
    }

    /// Measure of one atom of a level-`j` kind.
    pub fn host_measure(&self, j: usize, h: &Host) -> Rational {
        match h {
            Host::Region => self.region.measure(),
            Host::Cell { level, cell } => self.recipe(j, *level).cells[*cell].region.measure(),
        }
    }

    /// Number of level-`j` atoms of each configuration-cell kind in `U`.
    pub fn multiplicity(&self, j: usize) -> BTreeMap<Host, BigUint> {
        let mut cur: BTreeMap<Host, BigUint> = BTreeMap::from([(Host::Region, BigUint::one())]);
        for lvl in &self.levels[..j] {
            let mut next: BTreeMap<Host, BigUint> = BTreeMap::new();
            for (h, n) in &cur {
                for (c, k) in lvl.children(h) {
                    if let Child::Cell { level, cell, .. } = c {
                        *next.entry(Host::Cell { level, cell }).or_default() += n * k;
                    }
                }
            }
            cur = next;
        }
        cur
    }

    pub fn ledger(&self) -> Vec<LevelLedger> {
        let mut out = Vec::new();
        for (n, lvl) in self.levels.iter().enumerate() {
            let mult = self.multiplicity(n);
            let (mut f, mut fs, mut cov) = (Rational::zero(), Rational::zero(), Rational::zero());
            for (h, k) in &mult {
                let (q, e) = lvl.selected_measures(h);
                let k = from_biguint(k);
                f += &k * q;
                fs += &k * e;
                cov += &k * lvl.plans[h].covered_measure();
            }
            let core = self.core_measure(n + 1);
            let lp = &self.schedule.levels[n];
            out.push(LevelLedger {
                j: n + 1,
                d: lp.d,
                eps: lp.eps.clone(),
                m: lp.m,
                f,
                f_star: fs,
                covered: cov,
                core,
                deferred: 0,
            });
        }
        out
    }

    /// `|∩_{j ∈ J'} F*_j ∩ core|` where `core` is covered at levels `1..=upto`
    /// and `J'` is a bitmask over levels (bit `j-1`).
    pub fn intersection_measure(&self, mask: u64, upto: usize) -> Rational {
        let mut memo = HashMap::new();
        self.phi(1, Host::Region, mask, upto, &mut memo)
    }

    fn phi(
        &self,
        j: usize,
        h: Host,
        mask: u64,
        upto: usize,
        memo: &mut HashMap<(usize, Host, u64), Rational>,
    ) -> Rational {
        if j > upto {
            return self.host_measure(j - 1, &h);
        }
        if let Some(v) = memo.get(&(j, h, mask)) {
            return v.clone();
        }
        let lvl = &self.levels[j - 1];
        let want_sel = mask >> (j - 1) & 1 == 1;
        let mut s = Rational::zero();
        for (c, n) in lvl.children(&h) {
            if let Child::Cell { level, cell, selected } = c {
                if want_sel && !selected {
                    continue;
                }
                s += from_biguint(&n) * self.phi(j + 1, Host::Cell { level, cell }, mask, upto, memo);
            }
        }
        memo.insert((j, h, mask), s.clone());
        s
    }

    pub fn core_measure(&self, upto: usize) -> Rational {
        self.intersection_measure(0, upto)
    }

    /// `|U| ∏ (1 - (1 - c_j)^T)`.
    pub fn expected_core(&self, upto: usize) -> Rational {
        self.levels[..upto].iter().fold(self.region.measure(), |acc, l| acc * kappa(&l.params, self.rounds))
    }

    /// Level-`j` configuration in a chain, with absolute geometry and the
    /// cell chosen for the next level.
    pub fn sample_chain(&self, rng: &mut ChaCha8Rng) -> Vec<ChainLink> {
        self.extend_chain(Vec::new(), rng)
    }

    /// Continues a chain below its last link's chosen cell.
    pub fn extend_chain(&self, prefix: Vec<ChainLink>, rng: &mut ChaCha8Rng) -> Vec<ChainLink> {
        let (mut host, mut corner) = match prefix.last() {
            Some(l) => (Host::Cell { level: l.cube.level, cell: l.cell }, l.cube.corner.clone()),
            None => (Host::Region, Vec::new()),
        };
        let mut out = prefix;
        for lvl in &self.levels[out.len()..] {
            let plan = &lvl.plans[&host];
            let total = plan.configuration_count();
            if total.is_zero() {
                break;
            }
            let idx = random_below(rng, &total);
            let placed = plan.configuration(&idx).expect("index in range");
            let abs =
                if corner.is_empty() { placed.configuration.clone() } else { place(&placed.configuration, &corner) };
            let mut cube_corner = placed.cube.corner.clone();
            for (i, g) in corner.iter().enumerate() {
                cube_corner[i] += g;
            }
            let cells = plan.cells_at(placed.cube.level).len();
            let cell = rng.gen_range(0..cells);
            out.push(ChainLink {
                j: lvl.j,
                index: idx.clone(),
                selected: lvl.is_selected(plan, &idx),
                cube: Cube { level: placed.cube.level, corner: cube_corner.clone() },
                configuration: abs,
                cell,
            });
            host = Host::Cell { level: placed.cube.level, cell };
            corner = cube_corner;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLink {
    pub j: usize,
    #[serde(with = "rational::serde_big")]
    pub index: BigUint,
    pub selected: bool,
    pub cube: Cube,
    pub configuration: Configuration,
    pub cell: usize,
}

impl ChainLink {
    pub fn cell_box(&self) -> Box {
        let cells = self.configuration.cells().expect("cells");
        cells[self.cell].region.clone()
    }
}

fn nested_or_disjoint(a: &Box, b: &Box) -> bool {
    a.is_disjoint(b) || a.contains(b) || b.contains(a)
}

#[derive(Clone, Debug)]
pub struct AxiomOptions {
    pub plan: VerifyOptions,
    pub chains: usize,
    pub seed: u64,
}

impl Default for AxiomOptions {
    fn default() -> Self {
        AxiomOptions { plan: VerifyOptions { samples: 24, explicit_cap: 200, seed: 0 }, chains: 64, seed: 1 }
    }
}

pub fn verify_axioms(b: &LeveledBasis, opts: &AxiomOptions) -> Report {
    let mut rep = Report { checks: Vec::new() };

    // A1: every base is a translate of some V_m by an H_m element.
    let mut a1 = Ok(());
    for lvl in &b.levels {
        for p in lvl.plans.values() {
            for r in p.recipes.values() {
                if is_rdf0_element(&r.configuration.base).is_none() {
                    a1 = Err(format!("level {} cube level {}: base not in R0", lvl.j, r.level));
                }
                if r.configuration.eps != lvl.params.eps || r.configuration.d != lvl.params.d {
                    a1 = Err(format!("level {}: parameters differ from the schedule", lvl.j));
                }
            }
        }
    }
    rep.push(check_result("A1 configurations around R0 boxes", a1));

    // A2: each plan verifies on its own.
    let mut a2 = Ok(());
    let mut count = 0usize;
    for lvl in &b.levels {
        for (h, p) in &lvl.plans {
            count += 1;
            let r = verify_plan(p, &opts.plan);
            if let Some(f) = r.first_failure() {
                a2 = Err(format!("level {} host {:?}: {} ({})", lvl.j, h, f.name, f.detail));
                break;
            }
        }
    }
    rep.push(check_result("A2 disjoint unions cover up to residual", a2.map(|_| count)));

    // A3: sampled chains of absolute boxes, checked across levels, plus
    // pairs taken from two independent chains.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let chains: Vec<Vec<ChainLink>> = (0..opts.chains).map(|_| b.sample_chain(&mut rng)).collect();
    let mut a3 = Ok(0usize);
    let mut pairs = 0usize;
    'outer: for (ci, ch) in chains.iter().enumerate() {
        for other in chains[ci..].iter().take(2) {
            for x in ch {
                for y in other {
                    if x.j == y.j {
                        continue;
                    }
                    for bx in x.configuration.members() {
                        for by in y.configuration.members() {
                            pairs += 1;
                            if !nested_or_disjoint(&bx, &by) {
                                a3 = Err(format!("levels {} and {}: {} vs {}", x.j, y.j, bx, by));
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
        for w in ch.windows(2) {
            let host = w[0].cell_box();
            if !w[1].configuration.members().iter().all(|m| host.contains(m)) {
                a3 = Err(format!("level {} configuration leaves its host atom", w[1].j));
                break 'outer;
            }
            if is_rdf0_element(&w[1].configuration.base).is_none() {
                a3 = Err(format!("level {} absolute base not in R0", w[1].j));
                break 'outer;
            }
        }
    }
    rep.push(check_result("A3 nested or disjoint", a3.map(|_| pairs)));

    // A4: per host atom, the selected unions fill exactly 2^-m of the covered part.
    let mut a4 = Ok(0usize);
    for lvl in &b.levels {
        let frac = pow2(-(lvl.params.m as i64));
        for (h, p) in &lvl.plans {
            let (_, sel) = lvl.selected_measures(h);
            let want = &frac * p.covered_measure();
            if sel != want {
                a4 = Err(format!(
                    "level {} host {:?}: selected {} vs 2^-m·covered {} (deficit {})",
                    lvl.j,
                    h,
                    rational::format(&sel),
                    rational::format(&want),
                    rational::format(&(&want - &sel))
                ));
                break;
            }
        }
        if a4.is_err() {
            break;
        }
    }
    rep.push(check_result("A4 per-atom selected fraction", a4.map(|_| b.levels.len())));

    // Independence on the core for every nonempty subset of levels.
    let depth = b.depth();
    let core = b.core_measure(depth);
    let expected_core = b.expected_core(depth);
    let mut ind = if core == expected_core {
        Ok(())
    } else {
        Err(format!("core {} vs {}", rational::format(&core), rational::format(&expected_core)))
    };
    let mut n = 0;
    for mask in 1u64..(1 << depth) {
        if ind.is_err() {
            break;
        }
        n += 1;
        let lhs = b.intersection_measure(mask, depth);
        let prod: Rational = (0..depth)
            .filter(|j| mask >> j & 1 == 1)
            .fold(Rational::one(), |acc, j| acc * pow2(-(b.levels[j].params.m as i64)));
        let rhs = &core * prod;
        if lhs != rhs {
            ind = Err(format!("subset {mask:b}: {} vs {}", rational::format(&lhs), rational::format(&rhs)));
        }
    }
    rep.push(check_result("independence identities", ind.map(|_| n)));
    rep
}

fn check_result<T: std::fmt::Debug>(name: &str, r: std::result::Result<T, String>) -> Check {
    match r {
        Ok(v) => Check::new(name, true, format!("{v:?}")),
        Err(e) => Check::new(name, false, e),
    }
}

/// Ledger values in the full-cover limit: `|F*_j| = 2^-m_j`,
/// `|F_j| = 2^-m_j / (1 + d_j - ε_j d_j)`.
pub fn closed_form_ledger(s: &Schedule) -> Vec<(Rational, Rational)> {
    s.levels
        .iter()
        .map(|l| {
            let fs = pow2(-(l.m as i64));
            (&fs / l.spread(), fs)
        })
        .collect()
}

/// Ledger after `T` rounds per level, assuming only core atoms are refined.
pub fn truncated_ledger(s: &Schedule, rounds: u32) -> Vec<(Rational, Rational, Rational)> {
    let mut core = Rational::one();
    let mut out = Vec::new();
    for l in &s.levels {
        core *= kappa(&l.cover(), rounds);
        let fs = pow2(-(l.m as i64)) * &core;
        out.push((&fs / l.spread(), fs, core.clone()));
    }
    out
}

/// `max(0, |core|(1 - ∏(1 - 2^-m_j)) - Σ |F_j|)` over the first `levels`.
pub fn exceptional_from(core: &Rational, ms: &[u32], f: &[Rational]) -> Rational {
    let prod = ms.iter().fold(Rational::one(), |acc, m| acc * (int(1) - pow2(-(*m as i64))));
    let v = core * (int(1) - prod) - f.iter().sum::<Rational>();
    if v.is_negative() {
        Rational::zero()
    } else {
        v
    }
}

impl LeveledBasis {
    /// Configuration counts per level.
    pub fn configuration_counts(&self) -> Vec<BigUint> {
        (0..self.depth())
            .map(|n| {
                let mult = self.multiplicity(n);
                mult.iter().map(|(h, k)| k * self.levels[n].plans[h].configuration_count()).sum()
            })
            .collect()
    }

    pub fn with_selection(&self, j: usize, sel: Selection) -> LeveledBasis {
        let mut b = self.clone();
        b.levels[j - 1].selection = sel;
        b
    }

    pub fn exceptional_lower_bound(&self, upto: usize) -> Rational {
        let ledger = self.ledger();
        let core = self.core_measure(upto);
        let ms: Vec<u32> = ledger[..upto].iter().map(|l| l.m).collect();
        let f: Vec<Rational> = ledger[..upto].iter().map(|l| l.f.clone()).collect();
        exceptional_from(&core, &ms, &f)
    }

    pub fn is_divisible(&self) -> bool {
        self.levels
            .iter()
            .all(|l| l.plans.values().all(|p| p.classes.iter().all(|c| (c.count() % l.block()).is_zero())))
    }
}
