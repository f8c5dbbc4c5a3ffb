//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use lve::ast::{typecheck, typecheck_expr, LetTerm, Type, Variable};
use lve::denote::{denote, denote_term, total_mass_check};
use lve::factor::{facts, match_factor_sets, Cost, Factor, NameSet};
use lve::frontend::parse;
use lve::rewrite::{alpha_eq, vel_seq};
use lve::verify::{brute_force_joint, max_abs_diff, run_suite, GeneratorConfig, Status, SuiteConfig, SuiteReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;
const EXACT: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn workspace() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load(rel: &str) -> LetTerm {
    let path = workspace().join(rel);
    parse(&std::fs::read_to_string(&path).unwrap()).unwrap().term
}

fn coins() -> Outcome {
    let copy = parse("matrix C : -> Bool = [0.3, 0.7];\nv = C();\nw = v;\nin (v, w)").unwrap().term;
    let coin = copy.defs[0].expr.clone();
    let pair = lve::ast::Expr::pair(coin.clone(), coin);
    let copy_expr = copy.to_expr();
    // warm up, then time the best of a few runs
    let _ = (denote(&copy_expr), denote(&pair));
    let mut best = Duration::MAX;
    let mut results = (Vec::new(), Vec::new());
    for _ in 0..5 {
        let t = Instant::now();
        let a = denote(&copy_expr).unwrap();
        let b = denote(&pair).unwrap();
        best = best.min(t.elapsed());
        results = (a.entries().to_vec(), b.entries().to_vec());
    }
    let e1 = max_abs_diff(&results.0, &[0.3, 0.0, 0.0, 0.7]);
    let e2 = max_abs_diff(&results.1, &[0.09, 0.21, 0.21, 0.49]);
    outcome(
        e1 <= EXACT && e2 <= EXACT && best < Duration::from_millis(1),
        format!("copy err {e1:.1e}, pair err {e2:.1e}, {best:?}"),
    )
}

fn golden() -> Outcome {
    let start = Instant::now();
    let net = load("data/six_node.lve");
    let oracle = max_abs_diff(&brute_force_joint(&net).unwrap(), denote_term(&net).unwrap().entries());
    let (_, tr) = vel_seq(&net, &["x1", "x2", "x4", "x5"]).unwrap();
    let mut matched = 0;
    for (after, name) in [(2, "after_x1.lve"), (7, "after_x2.lve"), (10, "after_x4.lve"), (14, "after_x5.lve")] {
        let want = load(&format!("crates/core/tests/fixtures/{name}"));
        if tr.steps.get(after - 1).is_some_and(|s| alpha_eq(&s.after, &want)) {
            matched += 1;
        }
    }
    let ty = typecheck(&net).unwrap();
    let sem = denote_term(&net).unwrap();
    let mut worst: f64 = 0.0;
    let mut typed = true;
    for s in &tr.steps {
        typed &= typecheck(&s.after).ok().as_ref() == Some(&ty) && s.after.free_vars() == net.free_vars();
        worst = worst.max(denote_term(&s.after).unwrap().max_abs_diff(&sem).unwrap_or(f64::INFINITY));
    }
    let took = start.elapsed();
    outcome(
        matched == 4 && tr.len() <= 14 && typed && worst <= TOL && oracle <= EXACT && took < Duration::from_secs(1),
        format!(
            "{matched}/4 terms match, {} steps, per-step error {worst:.1e}, cpt oracle {oracle:.1e}, {took:?}",
            tr.len()
        ),
    )
}

fn vef_table(order: &str) -> Result<(usize, f64, Duration), String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_lve"))
        .arg("compare")
        .arg(workspace().join("data/six_node.lve"))
        .arg("--order")
        .arg(order)
        .output()
        .map_err(|e| e.to_string())?;
    let took = start.elapsed();
    if !out.status.success() {
        return Err(format!("exit {:?}", out.status.code()));
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let table = text
        .lines()
        .find_map(|l| l.strip_prefix("vef "))
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|n| n.parse().ok())
        .ok_or("no vef line")?;
    let disc = text
        .lines()
        .find_map(|l| l.strip_prefix("max discrepancy: "))
        .and_then(|n| n.trim().parse().ok())
        .ok_or("no discrepancy line")?;
    Ok((table, disc, took))
}

fn cost() -> Outcome {
    match (vef_table("x1,x2,x4,x5"), vef_table("x5,x4,x2,x1")) {
        (Ok((a, da, ta)), Ok((b, db, tb))) => outcome(
            a == 16 && b == 32 && da <= TOL && db <= TOL && ta.max(tb) < Duration::from_secs(1),
            format!("max table {a} and {b}, {:?}", ta.max(tb)),
        ),
        (Err(e), _) | (_, Err(e)) => outcome(false, e),
    }
}

/// Pass/total for the records of checks starting with `prefix`, with the
/// largest error.
fn tally(r: &SuiteReport, prefix: &str) -> (usize, usize, f64) {
    let rs: Vec<_> = r.records.iter().filter(|x| x.check.starts_with(prefix)).collect();
    let pass = rs.iter().filter(|x| x.status == Status::Pass).count();
    (pass, rs.len(), r.max_error(prefix))
}

fn all_pass(r: &SuiteReport, prefixes: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in prefixes {
        let (pass, total, err) = tally(r, p);
        ok &= pass == total && total > 0;
        parts.push(format!("{p} {pass}/{total} ({err:.1e})"));
    }
    (ok, parts.join(", "))
}

fn equivalence(r: &SuiteReport, took: Duration) -> Outcome {
    let mut orders: BTreeMap<u64, usize> = BTreeMap::new();
    for x in r.records.iter().filter(|x| x.check.starts_with("vel_facts_eq_vef[")) {
        *orders.entry(x.seed).or_default() += 1;
    }
    let min_orders = orders.values().copied().min().unwrap_or(0);
    let (ok, detail) = all_pass(r, &["vel_facts_eq_vef", "vel_denote", "vef_marginal", "order_independence"]);
    outcome(
        ok && r.stats.instances >= 100 && orders.len() >= 100 && min_orders >= 4 && r.stats.failed == 0
            && r.stats.skipped == 0 && took < Duration::from_secs(60),
        format!(
            "{} networks, >= {min_orders} orders each, {detail}, {} failed, {} skipped, {took:?}",
            r.stats.instances, r.stats.failed, r.stats.skipped
        ),
    )
}

fn oracles(r: &SuiteReport) -> Outcome {
    let (ok, detail) = all_pass(r, &["semantics_from_facts", "brute_force", "network_joint"]);
    outcome(ok, detail)
}

fn random_factor(rng: &mut ChaCha8Rng) -> Factor {
    let pool = ["a", "b", "c", "d"];
    let mut vars: Vec<Variable> = pool.iter().filter(|_| rng.random_bool(0.5)).map(Variable::bool).collect();
    if rng.random_bool(0.2) {
        vars.push(Variable::new("p", Type::tensor(Type::Bool, Type::Bool)));
    }
    let n: usize = vars.iter().map(|v| v.web_size()).product();
    let table = (0..n).map(|_| rng.random::<f64>()).collect();
    Factor::new(vars, table)
}

fn random_names(rng: &mut ChaCha8Rng) -> NameSet {
    ["a", "b", "c", "d", "p"].iter().filter(|_| rng.random_bool(0.4)).map(|s| s.to_string()).collect()
}

fn laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut c = Cost::default();
    let mut worst: f64 = 0.0;
    let mut structural = true;
    let mut gap = |x: &Factor, y: &Factor| match x.max_abs_diff(y) {
        Some(d) => worst = worst.max(d),
        None => structural = false,
    };
    for _ in 0..1000 {
        let (f, g, h) = (random_factor(&mut rng), random_factor(&mut rng), random_factor(&mut rng));
        let fg = f.product(&g, &mut c).unwrap();
        gap(&fg.product(&h, &mut c).unwrap(), &f.product(&g.product(&h, &mut c).unwrap(), &mut c).unwrap());
        gap(&fg, &g.product(&f, &mut c).unwrap());
        gap(&f.product(&Factor::unit(), &mut c).unwrap(), &f);
        let (v, w) = (random_names(&mut rng), random_names(&mut rng));
        let union: NameSet = v.union(&w).cloned().collect();
        gap(
            &h.sum_out(&v, &mut c).unwrap().sum_out(&w, &mut c).unwrap(),
            &h.sum_out(&union, &mut c).unwrap(),
        );
        let outside: NameSet = v.difference(&f.names()).cloned().collect();
        gap(
            &fg.sum_out(&outside, &mut c).unwrap(),
            &f.product(&g.sum_out(&outside, &mut c).unwrap(), &mut c).unwrap(),
        );
    }
    outcome(structural && worst <= TOL, format!("1000 triples, worst {worst:.1e}"))
}

fn bounds(r: &SuiteReport) -> Outcome {
    let (ok, detail) = all_pass(r, &["step_bound", "size_bound"]);
    outcome(ok, format!("{} vel calls, {detail}", r.stats.vel_calls))
}

fn mass(r: &SuiteReport) -> Outcome {
    let l8 = load("crates/core/tests/fixtures/after_x2.lve");
    let e2 = &l8.defs[0].expr;
    let ty = typecheck_expr(e2).map(|t| t.to_string()).unwrap_or_default();
    let m = total_mass_check(e2).unwrap();
    let (ok, detail) = all_pass(r, &["total_mass"]);
    outcome(
        ok && m.expected == 2 && (m.mass - 2.0).abs() <= TOL && ty == "Bool * (Bool -o Bool)",
        format!("{detail}, pair with arrow: mass {} of {}", m.mass, m.expected),
    )
}

fn swaps(r: &SuiteReport) -> Outcome {
    let net = load("data/six_node.lve");
    let (_, tr) = vel_seq(&net, &["x1", "x2", "x4", "x5"]).unwrap();
    let mut golden_ok = true;
    for s in tr.steps.iter().filter(|s| s.rule.is_swap()) {
        let (a, b) = (facts(&s.before).unwrap(), facts(&s.after).unwrap());
        golden_ok &= match_factor_sets(&a.items, &b.items, TOL).is_ok();
    }
    let (ok, detail) = all_pass(r, &["swap_invariance"]);
    outcome(
        ok && golden_ok && r.stats.swap_steps > 0,
        format!("{} swap steps, {detail}", r.stats.swap_steps),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let report = run_suite(&SuiteConfig {
        first_seed: 0,
        instances: 100,
        generator: GeneratorConfig {
            seed: 0,
            nodes: 8,
            max_parents: 2,
            p_extra_edge: 0.3,
            query_size: 2,
        },
        ..SuiteConfig::default()
    });
    let suite_time = start.elapsed();

    let results = [
        ("coin copy exactness", coins()),
        ("golden derivation", golden()),
        ("cost reproduction", cost()),
        ("factor set equivalence", equivalence(&report, suite_time)),
        ("oracle equality", oracles(&report)),
        ("factor algebra laws", laws()),
        ("step and size bounds", bounds(&report)),
        ("total mass", mass(&report)),
        ("swap invariance", swaps(&report)),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!(
            "criterion {} {}: {} ({})",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    for f in report.failures().take(10) {
        println!("  {f}");
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
