use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use diffbasis::basis::{
    build_basis, schedule_geq, schedule_gt, verify_axioms, AxiomOptions, LeveledBasis, Schedule, Variant,
};
use diffbasis::configurations::{single_configuration_bound, norm_growth_estimate, Regime};
use diffbasis::covering::{cover_rectangle, verify_plan, Check, CoveringPlan, Report, VerifyOptions};
use diffbasis::maximal::{self, lp_ledger, PathTree};
use diffbasis::rational::{self, floor_log2, int, Rational};
use diffbasis::rdf::v_cell;
use diffbasis::spaces::{
    example_e1, example_e4, glue, probe_e1, probe_schedule, transfer_to_interval, union_length, E1Function, E1Point,
    RangeProbe,
};
use diffbasis::Box;

use crate::output::{absolute, dec, exact, float, invalid, read_json, sha256_file, Failure, Manifest, Outputs, Res};
use crate::{
    BuildArgs, Command, ConfigCmd, CounterexampleArgs, CoverArgs, E1Args, E4Args, FixtureCmd, GlueArgs, NormArgs,
    ProbeArgs, RdfCmd, ReplayArgs, TransferArgs, VariantArg, VerifyArgs,
};

/// Result of one command: input files read and the first failed check.
struct Outcome {
    inputs: Vec<PathBuf>,
    failure: Option<String>,
}

impl Outcome {
    fn ok() -> Self {
        Outcome { inputs: Vec::new(), failure: None }
    }
}

pub fn run(command: Command, out_dir: &Path) -> Res<()> {
    if let Command::Replay(a) = &command {
        return replay(a);
    }
    let command = normalize(command)?;
    let mut out = Outputs::new(out_dir)?;
    let outcome = dispatch(&command, &mut out)?;
    let manifest = out.manifest(&command, &outcome.inputs)?;
    for p in out.paths() {
        println!("wrote {}", p.display());
    }
    println!("wrote {}", manifest.display());
    match outcome.failure {
        Some(f) => Err(Failure::Verification(f)),
        None => Ok(()),
    }
}

fn is_side_keyword(s: &str) -> bool {
    s == "e1" || s.starts_with("geq:") || s.starts_with("gt:")
}

/// Input paths become absolute so a manifest can be replayed from anywhere.
fn normalize(mut c: Command) -> Res<Command> {
    match &mut c {
        Command::Verify(a) => a.input = absolute(&a.input)?,
        Command::Counterexample(a) => a.basis = absolute(&a.basis)?,
        Command::Transfer(a) => a.basis = absolute(&a.basis)?,
        Command::Glue(a) => {
            for s in [&mut a.a, &mut a.b] {
                if !is_side_keyword(s) {
                    *s = absolute(Path::new(s.as_str()))?.to_string_lossy().into_owned();
                }
            }
        }
        _ => {}
    }
    Ok(c)
}

fn dispatch(c: &Command, out: &mut Outputs) -> Res<Outcome> {
    match c {
        Command::Rdf(RdfCmd::Show(a)) => rdf_show(a.m, &a.out, out),
        Command::Config(ConfigCmd::Norm(a)) | Command::Norm(a) => norm(a, out),
        Command::Cover(a) => cover(a, out),
        Command::Build(a) => build(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Counterexample(a) => counterexample(a, out),
        Command::ProbeRange(a) => probe_range(a, out),
        Command::Fixture(FixtureCmd::E4(a)) => fixture_e4(a, out),
        Command::Fixture(FixtureCmd::E1(a)) => fixture_e1(a, out),
        Command::Glue(a) => glue_cmd(a, out),
        Command::Transfer(a) => transfer(a, out),
        Command::Replay(_) => unreachable!("handled by run"),
    }
}

fn parse(s: &str, what: &str) -> Res<Rational> {
    rational::parse(s).map_err(|e| Failure::Invalid(format!("--{what}: {e}")))
}

fn parse_grid(s: &str) -> Res<Vec<Rational>> {
    s.split(',').map(|x| parse(x, "probe")).collect()
}

fn schedule_for(variant: VariantArg, p0: &Rational, depth: usize, granularity: u32) -> Res<Schedule> {
    Ok(match variant {
        VariantArg::Geq => schedule_geq(p0, depth, granularity)?,
        VariantArg::Gt => schedule_gt(p0, depth, granularity)?,
    })
}

fn rdf_show(m: u64, given: &Option<PathBuf>, out: &mut Outputs) -> Res<Outcome> {
    if m == 0 {
        return invalid("--m must be at least 1");
    }
    let cell = v_cell(m);
    let measure = cell.measure();
    println!("V_{m}: exponents {:?}, measure {}", cell.exponents, rational::format(&measure));
    let doc = json!({
        "m": m,
        "exponents": cell.exponents,
        "box": cell.to_box(),
        "measure": rational::format(&measure),
    });
    out.json(out.resolve(given, &format!("v_{m}.json")), &doc)?;
    Ok(Outcome::ok())
}

fn norm(a: &NormArgs, out: &mut Outputs) -> Res<Outcome> {
    let eps = parse(&a.eps, "eps")?;
    let p = parse(&a.p, "p")?;
    let est = norm_growth_estimate(&eps, a.d, &p)?;
    let lower = single_configuration_bound(&eps, a.d, &p);
    let regime = match est.regime {
        Regime::Small => "small",
        Regime::Log => "log",
        Regime::Linear => "linear",
    };
    println!("A_p = {:.12}, regime {regime}, value {:.12}, lower bound {}", est.a_p, est.value, dec(&lower.lo));
    let [e, ed] = exact(&eps);
    let [pp, pd] = exact(&p);
    let [l, ld] = exact(&lower.lo);
    let row = vec![e, ed, a.d.to_string(), pp, pd, float(est.a_p), regime.into(), float(est.value), l, ld];
    let header =
        ["eps", "eps_decimal", "d", "p", "p_decimal", "A_p", "regime", "value", "lower_bound", "lower_bound_decimal"];
    out.csv(out.resolve(&a.csv, "norm.csv"), &header, &[row])?;
    Ok(Outcome::ok())
}

fn report_failure(r: &Report) -> Option<String> {
    r.first_failure().map(|c| format!("{}: {}", c.name, c.detail))
}

fn cover(a: &CoverArgs, out: &mut Outputs) -> Res<Outcome> {
    let eps = parse(&a.eps, "eps")?;
    let plan = cover_rectangle(&Box::full(), &eps, a.d, a.m, a.rounds)?;
    let count = plan.configuration_count();
    let listed = BigUint::from(a.list).min(count.clone());
    let mut configurations = Vec::new();
    let mut i = BigUint::from(0u32);
    while i < listed {
        configurations.push(plan.configuration(&i)?);
        i += 1u32;
    }
    let residual_listed = BigUint::from(a.list).min(plan.residual_count());
    let mut residual = Vec::new();
    let mut i = BigUint::from(0u32);
    while i < residual_listed {
        residual.push(plan.residual_cube(&i)?.to_box());
        i += 1u32;
    }
    let covered = plan.covered_measure();
    println!("configurations {count}, covered measure {} ({})", rational::format(&covered), dec(&covered));
    let mut doc = json!({
        "parameters": { "eps": rational::format(&eps), "d": a.d, "m": a.m, "rounds": a.rounds },
        "summary": {
            "region_measure": rational::format(&plan.region_measure()),
            "configurations": count.to_string(),
            "covered_measure": rational::format(&covered),
            "residual_measure": rational::format(&plan.residual_measure()),
            "expected_covered": rational::format(&plan.expected_covered()),
            "residual_cubes": plan.residual_count().to_string(),
        },
        "configurations": configurations,
        "residual": residual,
        "plan": plan,
    });
    let mut outcome = Outcome::ok();
    if a.verify {
        let r = verify_plan(&plan, &VerifyOptions::default());
        print_report(&r);
        outcome.failure = report_failure(&r);
        doc["verification"] = serde_json::to_value(&r).map_err(|e| Failure::Invalid(e.to_string()))?;
    }
    out.json(out.resolve(&a.out, "plan.json"), &doc)?;
    Ok(outcome)
}

fn print_report(r: &Report) {
    for c in &r.checks {
        println!("{} {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
}

#[derive(Serialize)]
struct LinkView {
    j: usize,
    index: String,
    group: String,
    selected: bool,
    cube_level: u32,
    corner: Vec<String>,
    side_exponents: Vec<i64>,
    eps: String,
    d: usize,
    cell: usize,
    base: Box,
    translates: Vec<Box>,
}

fn build(a: &BuildArgs, out: &mut Outputs) -> Res<Outcome> {
    if a.depth == 0 {
        return invalid("--depth must be at least 1");
    }
    if a.rounds == 0 {
        return invalid("--rounds must be at least 1");
    }
    let p0 = parse(&a.p0, "p0")?;
    let s = schedule_for(a.variant, &p0, a.depth, a.granularity)?;
    let b = build_basis(&Box::full(), &s, a.rounds)?;
    let ledger = b.ledger();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let chains: Vec<Vec<LinkView>> = (0..a.chains)
        .map(|_| {
            b.sample_chain(&mut rng)
                .into_iter()
                .map(|l| {
                    let m = b.schedule.levels[l.j - 1].m;
                    let cfg = &l.configuration;
                    LinkView {
                        j: l.j,
                        group: (&l.index >> m as usize).to_string(),
                        index: l.index.to_string(),
                        selected: l.selected,
                        cube_level: l.cube.level,
                        corner: l.cube.corner.iter().map(rational::format).collect(),
                        side_exponents: cfg.base.constrained().iter().map(|(_, iv)| -floor_log2(&iv.len())).collect(),
                        eps: rational::format(&cfg.eps),
                        d: cfg.d,
                        cell: l.cell,
                        base: cfg.base.clone(),
                        translates: cfg.translates.clone(),
                    }
                })
                .collect()
        })
        .collect();
    for l in &ledger {
        println!(
            "level {}: d {}, eps {}, m {}, |F| {}, |F*| {}, covered {}",
            l.j,
            l.d,
            rational::format(&l.eps),
            l.m,
            dec(&l.f),
            dec(&l.f_star),
            dec(&l.covered)
        );
    }
    let doc = json!({
        "basis": b,
        "ledger": ledger,
        "configuration_counts": b.configuration_counts().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "chains": chains,
    });
    out.json(out.resolve(&a.out, "basis.json"), &doc)?;
    Ok(Outcome::ok())
}

/// Rebuilds `stored` from its parameters and selections.
fn rebuild(stored: &LeveledBasis) -> Res<LeveledBasis> {
    let mut b = build_basis(&stored.region, &stored.schedule, stored.rounds)?;
    for (n, l) in stored.levels.iter().enumerate() {
        b = b.with_selection(n + 1, l.selection.clone());
    }
    Ok(b)
}

/// Stored plans carry no path tables, so a usable basis is rebuilt and
/// checked against the file.
fn load_basis(path: &Path) -> Res<LeveledBasis> {
    let v = read_json(path)?;
    let inner = v.get("basis").cloned().unwrap_or(v);
    let stored: LeveledBasis =
        serde_json::from_value(inner).map_err(|e| Failure::Invalid(format!("{}: not a basis: {e}", path.display())))?;
    let b = rebuild(&stored)?;
    if !same_json(&b, &stored) {
        return invalid(format!("{}: stored basis does not match its parameters; run verify", path.display()));
    }
    Ok(b)
}

fn same_json<T: Serialize + ?Sized>(x: &T, y: &T) -> bool {
    serde_json::to_value(x).ok() == serde_json::to_value(y).ok()
}

fn verify(a: &VerifyArgs, out: &mut Outputs) -> Res<Outcome> {
    let v = read_json(&a.input)?;
    let stem = a.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into());
    let mut report = Report { checks: Vec::new() };
    let kind;
    if let Some(bv) = v.get("basis") {
        kind = "basis";
        let stored: LeveledBasis =
            serde_json::from_value(bv.clone()).map_err(|e| Failure::Invalid(format!("not a basis: {e}")))?;
        let s = &stored.schedule;
        let depth = s.levels.len();
        if s.variant != Variant::Custom {
            let va = if s.variant == Variant::Geq { VariantArg::Geq } else { VariantArg::Gt };
            let fresh = schedule_for(va, &s.p0, depth, s.granularity)?;
            report.push(Check::new("schedule matches its parameters", same_json(&fresh, s), format!("{depth} levels")));
        }
        let rebuilt = rebuild(&stored)?;
        report.push(Check::new(
            "stored plans match reconstruction",
            same_json(&rebuilt, &stored),
            format!("{} levels, {} rounds", depth, stored.rounds),
        ));
        let opts = AxiomOptions { chains: a.chains, seed: a.seed, ..AxiomOptions::default() };
        report.checks.extend(verify_axioms(&rebuilt, &opts).checks);
    } else if let Some(pv) = v.get("plan") {
        kind = "plan";
        let stored: CoveringPlan =
            serde_json::from_value(pv.clone()).map_err(|e| Failure::Invalid(format!("not a plan: {e}")))?;
        let mut rebuilt = CoveringPlan::build(
            stored.parent.clone(),
            stored.region.clone(),
            stored.params.clone(),
            stored.rounds,
            &mut BTreeMap::new(),
        )?;
        for r in &stored.removed {
            let idx: BigUint = r.parse().map_err(|_| Failure::Invalid(format!("bad removed index {r:?}")))?;
            rebuilt = rebuilt.without_configuration(&idx);
        }
        report.push(Check::new(
            "stored plan matches reconstruction",
            same_json(&rebuilt, &stored),
            format!("{} rounds", stored.rounds),
        ));
        report.checks.extend(verify_plan(&rebuilt, &VerifyOptions::default()).checks);
    } else {
        return invalid(format!("{}: neither a basis nor a plan", a.input.display()));
    }
    print_report(&report);
    let doc = json!({ "input": a.input, "kind": kind, "passed": report.passed(), "report": report });
    out.json(out.resolve(&a.out, &format!("{stem}.verify.json")), &doc)?;
    Ok(Outcome { inputs: vec![a.input.clone()], failure: report_failure(&report) })
}

fn counterexample(a: &CounterexampleArgs, out: &mut Outputs) -> Res<Outcome> {
    let b = load_basis(&a.basis)?;
    let p = parse(&a.p, "p")?;
    if p <= int(1) {
        return invalid("--p must exceed 1");
    }
    let depth = b.depth();
    let levels = a.levels.unwrap_or(depth);
    if levels == 0 {
        return invalid("--levels must be at least 1");
    }
    let mut s = b.schedule.clone();
    if levels > depth {
        let va = match s.variant {
            Variant::Geq => VariantArg::Geq,
            Variant::Gt => VariantArg::Gt,
            Variant::Custom => return invalid("a custom schedule cannot be extended beyond the basis depth"),
        };
        let longer = schedule_for(va, &s.p0, levels, s.granularity)?;
        if !same_json(&longer.levels[..depth], &s.levels[..]) {
            return invalid("the stored schedule does not match its parameters");
        }
        s = longer;
    } else {
        s.levels.truncate(levels);
    }
    let rows = lp_ledger(&s, Some(&b), &p);
    let mut csv_rows = Vec::new();
    for r in &rows {
        let lp = &s.levels[r.j - 1];
        let (source, exc) = if r.j <= depth {
            ("basis", b.exceptional_lower_bound(r.j))
        } else {
            ("closed-form", maximal::exceptional_lower_bound(&s, r.j))
        };
        let mut row = vec![r.j.to_string(), lp.d.to_string()];
        row.extend(exact(&lp.eps));
        row.push(lp.m.to_string());
        row.push(source.into());
        row.extend(exact(&r.f));
        row.extend(exact(&r.f_star));
        row.extend([dec(&r.term.lo), dec(&r.term.hi)]);
        row.extend([dec(&r.partial.lo), dec(&r.partial.hi)]);
        row.push(dec(&r.comparison.hi));
        row.push(r.unquantized_term.as_ref().map(|t| dec(&t.hi)).unwrap_or_default());
        row.push(dec(&r.quantized_bound.hi));
        row.extend(exact(&exc));
        csv_rows.push(row);
        println!(
            "level {}: |F| {}, |F*| {}, partial [{}, {}], exceptional {}",
            r.j,
            dec(&r.f),
            dec(&r.f_star),
            dec(&r.partial.lo),
            dec(&r.partial.hi),
            dec(&exc)
        );
    }
    let header = [
        "level",
        "d",
        "eps",
        "eps_decimal",
        "m",
        "source",
        "F",
        "F_decimal",
        "F_star",
        "F_star_decimal",
        "term_lo",
        "term_hi",
        "partial_lo",
        "partial_hi",
        "comparison_hi",
        "unquantized_term_hi",
        "quantized_bound_hi",
        "exceptional",
        "exceptional_decimal",
    ];
    out.csv(out.resolve(&a.csv, "counterexample.csv"), &header, &csv_rows)?;
    Ok(Outcome { inputs: vec![a.basis.clone()], failure: None })
}

fn print_probe(r: &RangeProbe) {
    let cells: Vec<String> = r
        .grid
        .iter()
        .zip(&r.inside)
        .map(|(p, i)| format!("{}:{}", rational::format(p), if *i { "in" } else { "out" }))
        .collect();
    println!("{}: {} (L^inf {})", r.label, cells.join(" "), r.infinity);
}

fn probe_range(a: &ProbeArgs, out: &mut Outputs) -> Res<Outcome> {
    let p0 = parse(&a.p0, "p0")?;
    let grid = parse_grid(&a.probe)?;
    let s = schedule_for(a.variant, &p0, 1, 0)?;
    let r = probe_schedule(&s, &grid)?;
    print_probe(&r);
    out.json(out.resolve(&a.out, "probe.json"), &r)?;
    Ok(Outcome::ok())
}

fn side(spec: &str, grid: &[Rational], inputs: &mut Vec<PathBuf>) -> Res<RangeProbe> {
    if spec == "e1" {
        return Ok(probe_e1(grid)?);
    }
    for (prefix, va) in [("geq:", VariantArg::Geq), ("gt:", VariantArg::Gt)] {
        if let Some(p0) = spec.strip_prefix(prefix) {
            let s = schedule_for(va, &parse(p0, "p0")?, 1, 0)?;
            return Ok(probe_schedule(&s, grid)?);
        }
    }
    let path = PathBuf::from(spec);
    let b = load_basis(&path)?;
    inputs.push(path);
    Ok(probe_schedule(&b.schedule, grid)?)
}

fn glue_cmd(a: &GlueArgs, out: &mut Outputs) -> Res<Outcome> {
    let grid = parse_grid(&a.probe)?;
    let mut inputs = Vec::new();
    let pa = side(&a.a, &grid, &mut inputs)?;
    let pb = side(&a.b, &grid, &mut inputs)?;
    let g = glue(&pa, &pb)?;
    let r = g.probe();
    print_probe(&pa);
    print_probe(&pb);
    print_probe(&r);
    out.json(out.resolve(&a.out, "glue.json"), &json!({ "a": pa, "b": pb, "glued": r }))?;
    Ok(Outcome { inputs, failure: None })
}

fn fixture_e4(a: &E4Args, out: &mut Outputs) -> Res<Outcome> {
    let e = example_e4(a.jmax, a.n)?;
    let rows: Vec<Vec<String>> = e
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.j.to_string()];
            row.extend(exact(&r.avg_g));
            row.extend(exact(&r.avg_gn));
            row.extend(exact(&r.gap));
            row
        })
        .collect();
    println!(
        "limit of g averages {}, limit of g_{} averages {} ({}), fitted C {}",
        rational::format(&e.limit_g),
        a.n,
        rational::format(&e.limit_gn),
        dec(&e.limit_gn),
        rational::format(&e.fitted_c)
    );
    let target = out.resolve(&a.csv, "e4.csv");
    let side = (target.0.with_extension("json"), target.1.with_extension("json"));
    let header = ["j", "avg_g", "avg_g_decimal", "avg_gn", "avg_gn_decimal", "gap", "gap_decimal"];
    out.csv(target, &header, &rows)?;
    out.json(side, &e)?;
    Ok(Outcome::ok())
}

fn fixture_e1(a: &E1Args, out: &mut Outputs) -> Res<Outcome> {
    if a.rows == 0 {
        return invalid("--rows must be at least 1");
    }
    let e = example_e1(a.rows);
    let f = E1Function::indicator_k();
    let mut rows = Vec::new();
    for row in 0..=a.rows {
        let x = E1Point { column: 0, row };
        for w in 1..=a.rows {
            let Some(bd) = e.derivate_bounds(&f, &x, (w, a.rows)) else { continue };
            let mut r = vec![x.column.to_string(), row.to_string(), w.to_string(), a.rows.to_string()];
            r.push(rational::format(&f.at(&x)));
            r.extend(exact(&bd.lower_upper));
            r.extend(exact(&bd.upper_lower));
            rows.push(r);
        }
    }
    println!("{} rows of derivate bounds for the indicator of K", rows.len());
    let header = [
        "column",
        "row",
        "window_lo",
        "window_hi",
        "value",
        "lower_upper",
        "lower_upper_decimal",
        "upper_lower",
        "upper_lower_decimal",
    ];
    out.csv(out.resolve(&a.csv, "e1.csv"), &header, &rows)?;
    Ok(Outcome::ok())
}

fn transfer(a: &TransferArgs, out: &mut Outputs) -> Res<Outcome> {
    let b = load_basis(&a.basis)?;
    if a.depth == 0 || a.depth > b.depth() {
        return invalid(format!("--depth must lie in 1..={}", b.depth()));
    }
    let tree = PathTree::new(&b, a.depth);
    let ib = transfer_to_interval(&tree);
    let nodes: Vec<Value> = tree
        .nodes
        .iter()
        .enumerate()
        .map(|(n, node)| {
            json!({
                "node": n,
                "parent": node.parent,
                "j": node.j,
                "child": node.child,
                "count": node.count.to_string(),
                "measure": rational::format(&node.measure),
                "first": ib.interval(&ib.representative(n)),
                "children": node.children,
            })
        })
        .collect();
    let mut failure = None;
    let mut members = Vec::new();
    for (img, measure) in ib.member_images() {
        let length = union_length(&img.segments);
        if length != measure && failure.is_none() {
            failure = Some(format!(
                "level {} member {}: image length {} differs from measure {}",
                img.j,
                img.member,
                rational::format(&length),
                rational::format(&measure)
            ));
        }
        members.push(json!({
            "j": img.j,
            "member": img.member,
            "measure": rational::format(&measure),
            "length": rational::format(&length),
            "segments": img.segments,
        }));
    }
    let totals: Vec<String> = (1..=a.depth).map(|j| rational::format(&ib.level_total(j))).collect();
    println!(
        "{} classes, {} member images, {}",
        tree.nodes.len(),
        members.len(),
        if failure.is_none() { "every image length equals its measure" } else { "length mismatch" }
    );
    let doc = json!({
        "depth": a.depth,
        "region_length": rational::format(&b.region.measure()),
        "level_totals": totals,
        "nodes": nodes,
        "members": members,
    });
    out.json(out.resolve(&a.out, "transfer.json"), &doc)?;
    Ok(Outcome { inputs: vec![a.basis.clone()], failure })
}

fn replay(a: &ReplayArgs) -> Res<()> {
    let v = read_json(&a.manifest)?;
    let m: Manifest = serde_json::from_value(v).map_err(|e| Failure::Invalid(format!("not a manifest: {e}")))?;
    for i in &m.inputs {
        if sha256_file(&i.path)? != i.sha256 {
            return Err(Failure::Verification(format!("input {} changed since the recorded run", i.path.display())));
        }
    }
    let dir = a.into.clone().unwrap_or_else(|| m.out_dir.clone());
    let mut out = Outputs::new(&dir)?;
    let outcome = dispatch(&m.command, &mut out)?;
    let mut mismatch = None;
    for o in &m.outputs {
        let disk = if o.path.is_absolute() { o.path.clone() } else { out.dir.join(&o.path) };
        let h = sha256_file(&disk)?;
        let same = h == o.sha256;
        println!("{} {}", if same { "identical" } else { "DIFFERS" }, disk.display());
        if !same && mismatch.is_none() {
            mismatch = Some(format!("{} differs from the recorded output", disk.display()));
        }
    }
    if let Some(f) = mismatch.or(outcome.failure) {
        return Err(Failure::Verification(f));
    }
    Ok(())
}
