//! Iterative covering of a dyadic region by disjoint configuration unions.
//!
//! Every active cube of a given level receives the same configuration up to
//! translation, so a plan stores one [`Recipe`] per level and counts how many
//! cubes of each level are active in each round. Instances are numbered
//! round by round, then by root grid, level, recursion path and finally by
//! the sibling cube inside the root grid, which runs fastest. Because every
//! root grid holds a multiple of `2^m` cubes, each block of `2^m`
//! consecutive numbers consists of congruent translates.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::configurations::{make_configuration, Cell, Configuration};
use crate::error::{Error, Result};
use crate::geometry::{Box, BoxSet};
use crate::rational::{self, dyadic_level, from_biguint, int, pow2, Rational};
use crate::rdf::{decompose_into_qgrids, is_rdf0_element, q_measure, Cube, QGrid};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoverParams {
    #[serde(with = "rational::serde_rat")]
    pub eps: Rational,
    pub d: usize,
    pub m: u32,
}

impl CoverParams {
    pub fn new(eps: Rational, d: usize, m: u32) -> Result<Self> {
        crate::configurations::check_eps(&eps)?;
        if dyadic_level(&eps).is_none() {
            return Err(Error::EpsilonNotDyadic(rational::format(&eps)));
        }
        if d == 0 || m == 0 {
            return Err(Error::Invalid("d and m must be positive".into()));
        }
        Ok(CoverParams { eps, d, m })
    }

    /// Fraction of each active cube covered in one round.
    pub fn c(&self) -> Rational {
        let d = int(self.d as i64);
        pow2(-(self.d as i64)) * (int(1) + &d - &self.eps * &d)
    }

    /// Least level of the initial split, `k ≥ m + d`.
    pub fn min_level(&self) -> u32 {
        self.m + self.d as u32
    }

    pub fn block(&self) -> BigUint {
        BigUint::one() << self.m as usize
    }
}

/// Treatment of the active cube `Q_level` at the origin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipe {
    pub level: u32,
    pub configuration: Configuration,
    pub cells: Vec<Cell>,
    pub residual: Vec<QGrid>,
}

impl Recipe {
    pub fn build(p: &CoverParams, level: u32) -> Result<Recipe> {
        if p.d > level as usize + 1 {
            return Err(Error::Invalid(format!("d = {} exceeds level + 1 = {}", p.d, level + 1)));
        }
        let mut exps = vec![level + 1; p.d];
        exps.resize(level as usize + 1, level);
        let base = Box::dyadic_corner(&exps);
        let configuration = make_configuration(&base, &p.eps, p.d)?;
        let cells = configuration.cells()?;
        let cube = Cube::origin(level);
        let mut rest = BoxSet::single(cube.to_box());
        for b in configuration.members() {
            rest = rest.subtract(&b);
        }
        let max_level = level + 3 + dyadic_level(&p.eps).unwrap_or(0);
        let residual = decompose_into_qgrids(&cube, rest.boxes(), 0, max_level)?;
        Ok(Recipe { level, configuration, cells, residual })
    }

    pub fn union_measure(&self) -> Rational {
        self.configuration.union_measure()
    }

    /// Number of level-`k` cubes in the residual.
    pub fn residual_count(&self, k: u32) -> BigUint {
        self.residual.iter().filter(|g| g.level == k).map(|g| g.count()).sum()
    }

    pub fn residual_levels(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.residual.iter().map(|g| g.level).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigClass {
    pub round: u32,
    pub root: usize,
    pub level: u32,
    #[serde(with = "rational::serde_big")]
    pub paths: BigUint,
    #[serde(with = "rational::serde_big")]
    pub siblings: BigUint,
    #[serde(with = "rational::serde_big")]
    pub offset: BigUint,
}

impl ConfigClass {
    pub fn count(&self) -> BigUint {
        &self.paths * &self.siblings
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualClass {
    pub root: usize,
    pub level: u32,
    #[serde(with = "rational::serde_big")]
    pub paths: BigUint,
    #[serde(with = "rational::serde_big")]
    pub siblings: BigUint,
}

impl ResidualClass {
    pub fn count(&self) -> BigUint {
        &self.paths * &self.siblings
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringPlan {
    pub parent: Cube,
    pub region: Vec<Box>,
    pub params: CoverParams,
    pub rounds: u32,
    pub roots: Vec<QGrid>,
    pub recipes: BTreeMap<u32, Recipe>,
    pub classes: Vec<ConfigClass>,
    pub residual: Vec<ResidualClass>,
    /// Instances taken out of the plan; only used to probe verification.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed: Vec<String>,
    #[serde(skip)]
    table: Vec<Vec<BTreeMap<u32, BigUint>>>,
}

/// An instance with absolute geometry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedConfiguration {
    #[serde(with = "rational::serde_big")]
    pub index: BigUint,
    pub round: u32,
    #[serde(with = "rational::serde_big")]
    pub group: BigUint,
    pub cube: Cube,
    pub configuration: Configuration,
}

/// Covers `U` (inside the torus) in `rounds` rounds.
pub fn cover_rectangle(u: &Box, eps: &Rational, d: usize, m: u32, rounds: u32) -> Result<CoveringPlan> {
    let p = CoverParams::new(eps.clone(), d, m)?;
    CoveringPlan::build(Cube::torus(), vec![u.clone()], p, rounds, &mut BTreeMap::new())
}

impl CoveringPlan {
    /// Covers the union of disjoint `region` boxes inside `parent`, reusing
    /// and extending `recipes`.
    pub fn build(
        parent: Cube,
        region: Vec<Box>,
        params: CoverParams,
        rounds: u32,
        recipes: &mut BTreeMap<u32, Recipe>,
    ) -> Result<CoveringPlan> {
        let max_level = 62;
        let grids = decompose_into_qgrids(&parent, &region, params.min_level(), max_level)?;
        let roots: Vec<QGrid> = grids.iter().map(|g| g.refined(g.level + 1)).collect();
        let mut table = Vec::with_capacity(roots.len());
        for g in &roots {
            let mut per_round: Vec<BTreeMap<u32, BigUint>> = vec![BTreeMap::from([(g.level, BigUint::one())])];
            for r in 0..rounds as usize {
                let mut next: BTreeMap<u32, BigUint> = BTreeMap::new();
                for (k, cnt) in &per_round[r] {
                    if !recipes.contains_key(k) {
                        recipes.insert(*k, Recipe::build(&params, *k)?);
                    }
                    let rec = &recipes[k];
                    for kk in rec.residual_levels() {
                        *next.entry(kk).or_default() += cnt * rec.residual_count(kk);
                    }
                }
                per_round.push(next);
            }
            table.push(per_round);
        }
        let mut classes = Vec::new();
        let mut offset = BigUint::zero();
        for r in 0..rounds as usize {
            for (root, g) in roots.iter().enumerate() {
                for (k, paths) in &table[root][r] {
                    let c = ConfigClass {
                        round: r as u32 + 1,
                        root,
                        level: *k,
                        paths: paths.clone(),
                        siblings: g.count(),
                        offset: offset.clone(),
                    };
                    offset += c.count();
                    classes.push(c);
                }
            }
        }
        let mut residual = Vec::new();
        for (root, g) in roots.iter().enumerate() {
            for (k, paths) in &table[root][rounds as usize] {
                residual.push(ResidualClass { root, level: *k, paths: paths.clone(), siblings: g.count() });
            }
        }
        let used: BTreeMap<u32, Recipe> = recipes
            .iter()
            .filter(|(k, _)| classes.iter().any(|c| c.level == **k))
            .map(|(k, r)| (*k, r.clone()))
            .collect();
        Ok(CoveringPlan {
            parent,
            region,
            params,
            rounds,
            roots,
            recipes: used,
            classes,
            residual,
            removed: Vec::new(),
            table,
        })
    }

    pub fn region_measure(&self) -> Rational {
        self.region.iter().map(|b| b.measure()).sum()
    }

    pub fn configuration_count(&self) -> BigUint {
        self.classes.iter().map(|c| c.count()).sum()
    }

    pub fn covered_measure(&self) -> Rational {
        let mut s: Rational =
            self.classes.iter().map(|c| from_biguint(&c.count()) * self.recipes[&c.level].union_measure()).sum();
        for r in &self.removed {
            let idx: BigUint = r.parse().expect("index");
            if let Ok(c) = self.class_of(&idx) {
                s -= self.recipes[&self.classes[c].level].union_measure();
            }
        }
        s
    }

    pub fn residual_measure(&self) -> Rational {
        self.residual.iter().map(|r| from_biguint(&r.count()) * q_measure(r.level)).sum()
    }

    /// `(1 - (1-c)^T) |U|`.
    pub fn expected_covered(&self) -> Rational {
        let q = int(1) - self.params.c();
        (int(1) - rational::pow_int(&q, self.rounds)) * self.region_measure()
    }

    pub fn group_label(&self, index: &BigUint) -> BigUint {
        index >> self.params.m as usize
    }

    /// Selection rule: `index ≡ phase (mod 2^m)`.
    pub fn is_selected(&self, index: &BigUint, phase: u64) -> bool {
        (index % self.params.block()).to_u64().unwrap() == phase
    }

    pub fn without_configuration(&self, index: &BigUint) -> CoveringPlan {
        let mut p = self.clone();
        p.removed.push(index.to_string());
        p
    }

    fn class_of(&self, index: &BigUint) -> Result<usize> {
        let total = self.configuration_count();
        if *index >= total {
            return Err(Error::IndexRange { index: index.to_string(), count: total.to_string() });
        }
        let pos = self.classes.partition_point(|c| c.offset <= *index);
        Ok(pos - 1)
    }

    /// Path through the residual recursion: `(parent level, piece, cube in piece)`.
    fn decode_path(&self, root: usize, round: usize, level: u32, path: &BigUint) -> Vec<(u32, usize, BigUint)> {
        if round == 0 {
            return Vec::new();
        }
        let mut q = path.clone();
        for (kp, cnt) in &self.table[root][round - 1] {
            let rec = &self.recipes[kp];
            let n = rec.residual_count(level);
            if n.is_zero() {
                continue;
            }
            let block = cnt * &n;
            if q < block {
                let (prev, mut rem) = q.div_rem(&n);
                let mut steps = self.decode_path(root, round - 1, *kp, &prev);
                for (pi, g) in rec.residual.iter().enumerate() {
                    if g.level != level {
                        continue;
                    }
                    let c = g.count();
                    if rem < c {
                        steps.push((*kp, pi, rem));
                        return steps;
                    }
                    rem -= c;
                }
                unreachable!("piece lookup");
            }
            q -= block;
        }
        unreachable!("path index beyond class size")
    }

    fn locate(&self, root: usize, round: usize, level: u32, path: &BigUint, sibling: &BigUint) -> Cube {
        let mut cube = self.roots[root].cell(sibling);
        for (kp, pi, cell) in self.decode_path(root, round, level, path) {
            let g = self.recipes[&kp].residual[pi].translated(&cube.corner);
            cube = g.cell(&cell);
        }
        debug_assert_eq!(cube.level, level);
        cube
    }

    pub fn configuration(&self, index: &BigUint) -> Result<PlacedConfiguration> {
        let ci = self.class_of(index)?;
        let c = &self.classes[ci];
        let (path, sibling) = (index - &c.offset).div_rem(&c.siblings);
        let cube = self.locate(c.root, c.round as usize - 1, c.level, &path, &sibling);
        let rel = &self.recipes[&c.level].configuration;
        Ok(PlacedConfiguration {
            index: index.clone(),
            round: c.round,
            group: self.group_label(index),
            configuration: place(rel, &cube.corner),
            cube,
        })
    }

    /// Residual cube number `index` (ordered as the residual classes).
    pub fn residual_cube(&self, index: &BigUint) -> Result<Cube> {
        let mut q = index.clone();
        for r in &self.residual {
            let n = r.count();
            if q < n {
                let (path, sibling) = q.div_rem(&r.siblings);
                return Ok(self.locate(r.root, self.rounds as usize, r.level, &path, &sibling));
            }
            q -= n;
        }
        Err(Error::IndexRange { index: index.to_string(), count: "residual".into() })
    }

    pub fn residual_count(&self) -> BigUint {
        self.residual.iter().map(|r| r.count()).sum()
    }

    /// Cells of the configuration at the given level, relative to its cube.
    pub fn cells_at(&self, level: u32) -> &[Cell] {
        &self.recipes[&level].cells
    }
}

/// Relative configuration moved to the cube with corner `g`.
pub fn place(rel: &Configuration, g: &[Rational]) -> Configuration {
    Configuration {
        base: rel.base.offset_by(g),
        eps: rel.eps.clone(),
        d: rel.d,
        shift_coords: rel.shift_coords.clone(),
        translates: rel.translates.iter().map(|t| t.offset_by(g)).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Randomly placed instances checked against each other.
    pub samples: usize,
    /// Plans with at most this many configurations are checked pairwise in full.
    pub explicit_cap: u64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { samples: 48, explicit_cap: 400, seed: 0 }
    }
}

/// Geometry of one recipe: containment, overlap structure, cells, residual.
pub fn check_recipe(p: &CoverParams, rec: &Recipe) -> std::result::Result<(), String> {
    let cube = Cube::origin(rec.level).to_box();
    let conf = &rec.configuration;
    let members = conf.members();
    if !members.iter().all(|b| cube.contains(b)) {
        return Err(format!("level {}: configuration leaves its cube", rec.level));
    }
    if is_rdf0_element(&conf.base).is_none() {
        return Err(format!("level {}: base is not a translate of a V_m", rec.level));
    }
    for (i, t) in conf.translates.iter().enumerate() {
        if conf.base.intersection_measure(t) != &p.eps * conf.base.measure() {
            return Err(format!("level {}: |Q{} ∩ Q0| ≠ ε|Q0|", rec.level, i + 1));
        }
        for u in &conf.translates[i + 1..] {
            if let Some(x) = t.intersect(u) {
                if !conf.base.contains(&x) {
                    return Err(format!("level {}: translates meet outside Q0", rec.level));
                }
            }
        }
    }
    let cells: Vec<Box> = rec.cells.iter().map(|c| c.region.clone()).collect();
    if BoxSet::new(cells.clone()).is_err() {
        return Err(format!("level {}: cells overlap", rec.level));
    }
    for c in &rec.cells {
        for (b, inside) in members.iter().zip(&c.pattern) {
            let ok = if *inside { b.contains(&c.region) } else { b.is_disjoint(&c.region) };
            if !ok {
                return Err(format!("level {}: cell pattern disagrees with {}", rec.level, b));
            }
        }
    }
    let cell_sum: Rational = cells.iter().map(|c| c.measure()).sum();
    if cell_sum != rec.union_measure() {
        return Err(format!("level {}: cells do not tile the union", rec.level));
    }
    let pieces: Vec<Box> = rec.residual.iter().map(|g| g.region()).collect();
    if BoxSet::new(pieces.clone()).is_err() {
        return Err(format!("level {}: residual pieces overlap", rec.level));
    }
    for (g, b) in rec.residual.iter().zip(&pieces) {
        if g.level <= rec.level || !cube.contains(b) || members.iter().any(|m| !m.is_disjoint(b)) {
            return Err(format!("level {}: residual piece misplaced", rec.level));
        }
    }
    let res: Rational = rec.residual.iter().map(|g| g.measure()).sum();
    if res + rec.union_measure() != cube.measure() {
        return Err(format!("level {}: residual and union do not tile the cube", rec.level));
    }
    Ok(())
}

fn placed_members(c: &PlacedConfiguration) -> Vec<Box> {
    c.configuration.members()
}

fn unions_disjoint(a: &[Box], b: &[Box]) -> bool {
    a.iter().all(|x| b.iter().all(|y| x.is_disjoint(y)))
}

pub fn verify_plan(plan: &CoveringPlan, opts: &VerifyOptions) -> Report {
    let mut rep = Report { checks: Vec::new() };
    let u = plan.region_measure();
    let root_boxes: Vec<Box> = plan.roots.iter().map(|g| g.region()).collect();
    let inside_u = |b: &Box| plan.region.iter().map(|r| r.intersection_measure(b)).sum::<Rational>() == b.measure();
    let roots_ok = BoxSet::new(root_boxes.clone()).is_ok()
        && root_boxes.iter().all(&inside_u)
        && root_boxes.iter().map(|b| b.measure()).sum::<Rational>() == u
        && plan.roots.iter().all(|g| g.level > plan.params.min_level());
    rep.push(Check::new("roots tile U", roots_ok, format!("{} root grids", plan.roots.len())));

    let mut recipe_err = None;
    for rec in plan.recipes.values() {
        if let Err(e) = check_recipe(&plan.params, rec) {
            recipe_err = Some(e);
            break;
        }
    }
    rep.push(Check::new(
        "recipe geometry",
        recipe_err.is_none(),
        recipe_err.unwrap_or_else(|| format!("{} levels", plan.recipes.len())),
    ));

    let covered = plan.covered_measure();
    let residual = plan.residual_measure();
    rep.push(Check::new(
        "measure balance",
        &covered + &residual == u,
        format!(
            "covered {} + residual {} vs |U| {}",
            rational::format(&covered),
            rational::format(&residual),
            rational::format(&u)
        ),
    ));
    let expected = plan.expected_covered();
    rep.push(Check::new(
        "coverage law",
        covered == expected,
        format!("covered {} expected {}", rational::format(&covered), rational::format(&expected)),
    ));

    let block = plan.params.block();
    let blocks_ok = plan.classes.iter().all(|c| (c.count() % &block).is_zero() && (&c.offset % &block).is_zero());
    let residual_ok = plan.residual.iter().all(|r| r.level > plan.params.min_level());
    rep.push(Check::new("group blocks", blocks_ok, format!("block size {block}")));
    rep.push(Check::new("residual dyadic", residual_ok, "residual cubes are Q_k translates"));

    // Explicit instances: all of them when few, else a seeded sample.
    let total = plan.configuration_count();
    let explicit = total <= BigUint::from(opts.explicit_cap);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let indices: Vec<BigUint> = if explicit {
        (0..total.to_u64().unwrap()).map(BigUint::from).collect()
    } else {
        (0..opts.samples).map(|_| random_below(&mut rng, &total)).collect()
    };
    let mut placed = Vec::new();
    let mut detail = String::new();
    let mut ok = true;
    for i in &indices {
        match plan.configuration(i) {
            Ok(c) => placed.push(c),
            Err(e) => {
                ok = false;
                detail = e.to_string();
            }
        }
    }
    for c in &placed {
        let mem = placed_members(c);
        if !mem.iter().all(&inside_u) || is_rdf0_element(&c.configuration.base).is_none() {
            ok = false;
            detail = format!("configuration {} leaves U or has a non-R0 base", c.index);
        }
    }
    'pairs: for (a, ca) in placed.iter().enumerate() {
        for cb in &placed[a + 1..] {
            if ca.index != cb.index && !unions_disjoint(&placed_members(ca), &placed_members(cb)) {
                ok = false;
                detail = format!("configurations {} and {} overlap", ca.index, cb.index);
                break 'pairs;
            }
        }
    }
    // Residual cubes must avoid every placed union.
    let rc = plan.residual_count();
    if !rc.is_zero() {
        for _ in 0..opts.samples.min(16) {
            let r = plan.residual_cube(&random_below(&mut rng, &rc)).map(|c| c.to_box());
            match r {
                Ok(b)
                    if inside_u(&b)
                        && placed.iter().all(|c| unions_disjoint(&placed_members(c), std::slice::from_ref(&b))) => {}
                _ => {
                    ok = false;
                    detail = "residual cube overlaps a configuration".into();
                }
            }
        }
    }
    if detail.is_empty() {
        detail = format!("{} instances ({})", placed.len(), if explicit { "all" } else { "sampled" });
    }
    rep.push(Check::new("pairwise disjoint", ok, detail));

    // Sampled blocks: the 2^m members of a group are congruent.
    let mut group_ok = true;
    let groups = &total >> plan.params.m as usize;
    if !groups.is_zero() {
        for _ in 0..opts.samples.min(8) {
            let g = random_below(&mut rng, &groups);
            let first = &g << plan.params.m as usize;
            let a = plan.configuration(&first);
            let b = plan.configuration(&(&first + &block - BigUint::one()));
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    let sa = shape(&a.configuration);
                    if sa != shape(&b.configuration) || a.group != b.group {
                        group_ok = false;
                    }
                }
                _ => group_ok = false,
            }
        }
    }
    rep.push(Check::new("group congruence", group_ok, "first and last member of sampled groups"));
    rep
}

/// Side lengths of every member, which determine a configuration up to translation.
fn shape(c: &Configuration) -> Vec<Vec<(usize, Rational)>> {
    let base = c.base.corner(c.base.max_coord());
    c.members()
        .iter()
        .map(|b| {
            b.constrained()
                .iter()
                .map(|(i, iv)| (*i, &iv.lo - base.get(i - 1).cloned().unwrap_or_else(Rational::zero)))
                .collect()
        })
        .collect()
}

pub fn random_below(rng: &mut ChaCha8Rng, n: &BigUint) -> BigUint {
    assert!(!n.is_zero());
    let bits = n.bits() as usize;
    loop {
        let mut x = BigUint::zero();
        for _ in 0..bits.div_ceil(32) {
            x = (x << 32) + BigUint::from(rng.gen::<u32>());
        }
        x >>= bits.div_ceil(32) * 32 - bits;
        if &x < n {
            return x;
        }
    }
}
