//! Factor operations and single rewrite rules on small, hand-checked terms.

use std::path::PathBuf;

use lve::ast::{LetTerm, Variable};
use lve::denote::{denote_term, web::decode};
use lve::factor::{
    big_product, facts, match_factor_sets, semantics_from_facts, vef, Cost, Factor, NameSet,
};
use lve::frontend::{ingest_network, parse};
use lve::rewrite::{
    alpha_eq, apply_rule, sd, simplify, size_bound, va, vel, vel_seq, vel_traced, RewriteError, Rule,
};
use lve::verify::{random_network, GeneratorConfig};

const TOL: f64 = 1e-9;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn load(rel: &str) -> LetTerm {
    parse(&std::fs::read_to_string(root().join(rel)).unwrap()).unwrap().term
}

fn network() -> LetTerm {
    load("../../data/six_node.lve")
}

fn term(text: &str) -> LetTerm {
    parse(text).unwrap_or_else(|e| panic!("{e}\n{text}")).term
}

fn set(xs: &[&str]) -> NameSet {
    xs.iter().map(|s| s.to_string()).collect()
}

fn b(n: &str) -> Variable {
    Variable::bool(n)
}

const SIX: &str = "matrix M1 : -> Bool = [0.3, 0.7];
matrix M2 : Bool -> Bool = [0.9, 0.1; 0.2, 0.8];
matrix M3 : Bool -> Bool = [0.6, 0.4; 0.25, 0.75];
matrix M4 : -> Bool = [0.55, 0.45];
matrix M5 : Bool * Bool -> Bool = [0.95, 0.05; 0.7, 0.3; 0.4, 0.6; 0.1, 0.9];
matrix M6 : Bool * Bool -> Bool = [0.8, 0.2; 0.35, 0.65; 0.5, 0.5; 0.05, 0.95];
var f : Bool -o Bool;
";

// ---- factors ----

#[test]
fn summing_out_nothing() {
    let f = Factor::new(vec![b("x"), b("y")], vec![0.1, 0.2, 0.3, 0.4]);
    assert_eq!(f.sum_out(&NameSet::new(), &mut Cost::default()).unwrap(), f);
}

#[test]
fn summed_cpt_is_not_a_distribution() {
    let fs = facts(&network()).unwrap();
    let m5 = fs.items.iter().find(|f| f.names() == set(&["x3", "x4", "x5"])).unwrap();
    let s = m5.sum_out(&set(&["x3", "x5"]), &mut Cost::default()).unwrap();
    assert_eq!(s.names(), set(&["x4"]));
    assert!(s.table().iter().all(|v| (v - 2.0).abs() < 1e-12));
}

#[test]
fn sum_out_by_hand() {
    let t: Vec<f64> = (0..8).map(|i| (i as f64 + 1.0) / 10.0).collect();
    let f = Factor::new(vec![b("x1"), b("x2"), b("x3")], t.clone());
    let s = f.sum_out(&set(&["x1"]), &mut Cost::default()).unwrap();
    let want: Vec<f64> = (0..4).map(|k| t[k] + t[4 + k]).collect();
    assert!(s.approx_eq(&Factor::new(vec![b("x2"), b("x3")], want), 1e-12));
}

#[test]
fn product_size_follows_shared_variables() {
    let f = Factor::constant(vec![b("x3"), b("x4"), b("x5")]);
    let g = Factor::constant(vec![b("x3"), b("x4")]);
    let mut c = Cost::default();
    assert_eq!(f.product(&g, &mut c).unwrap().len(), 8);
    assert_eq!(f.product(&Factor::unit(), &mut c).unwrap(), f);
    assert_eq!(big_product(&[], &mut c).unwrap(), Factor::unit());
}

#[test]
fn product_by_hand() {
    let f = Factor::new(vec![b("a"), b("s")], vec![0.1, 0.2, 0.3, 0.4]);
    let g = Factor::new(vec![b("s"), b("c")], vec![0.5, 0.6, 0.7, 0.8]);
    let p = f.product(&g, &mut Cost::default()).unwrap();
    let mut want = Vec::new();
    for a in 0..2 {
        for c in 0..2 {
            for s in 0..2 {
                want.push((a, c, s, f.table()[a * 2 + s] * g.table()[c * 2 + s]));
            }
        }
    }
    // both factors keep their variables sorted: (a, s), (c, s), and (a, c, s)
    for (a, c, s, v) in want {
        assert!((p.table()[a * 4 + c * 2 + s] - v).abs() < 1e-15);
    }
}

#[test]
fn network_factors() {
    let fs = facts(&network()).unwrap();
    assert_eq!(fs.len(), 7);
    assert_eq!(fs.var_names(), set(&["x1", "x2", "x3", "x4", "x5", "x6"]));
    let m5 = fs.items.iter().find(|f| f.names() == set(&["x3", "x4", "x5"])).unwrap();
    assert_eq!(m5.table(), &[0.95, 0.05, 0.7, 0.3, 0.4, 0.6, 0.1, 0.9]);
    let (with, without) = fs.partition(&set(&["x2"]));
    let mut keys: Vec<NameSet> = with.iter().map(|f| f.names()).collect();
    keys.sort();
    assert_eq!(keys, [set(&["x1", "x2"]), set(&["x2", "x3"]), set(&["x2", "x5", "x6"])]);
    assert_eq!(without.len(), 4);
    let (all, none) = fs.partition(&fs.var_names());
    assert_eq!((all.len(), none.len()), (7, 0));
    assert_eq!(fs.partition(&set(&["zz"])).0.len(), 0);
}

#[test]
fn arrow_factor_is_an_indicator() {
    let t = term(&format!("{SIX}x6 = f(x5);\nin x6"));
    let fs = facts(&t).unwrap();
    let fac = fs.items.iter().find(|f| f.has_var("f")).unwrap();
    assert_eq!(fac.names(), set(&["f", "x5", "x6"]));
    // f ranges over pairs (input, output); the factor is 1 exactly when f maps x5 to x6
    let mut hits = 0;
    for (k, v) in fac.table().iter().enumerate() {
        let d = decode(k, &[4, 2, 2]);
        let (fin, fout) = (d[0] / 2, d[0] % 2);
        let want = if fin == d[1] && fout == d[2] { 1.0 } else { 0.0 };
        assert_eq!(*v, want);
        hits += (*v == 1.0) as usize;
    }
    assert_eq!(hits, 4);
}

#[test]
fn factors_after_two_eliminations() {
    let l8 = load("tests/fixtures/after_x2.lve");
    let fs = facts(&l8).unwrap();
    assert_eq!(fs.len(), 4);
    assert_eq!(fs.var_names(), set(&["x3", "x4", "x5", "x6"]));
    let by_vef = vef(&facts(&network()).unwrap(), &["x1", "x2"]).unwrap();
    match_factor_sets(&fs.items, &by_vef.items, TOL).unwrap();
    let same = vef(&fs, &[]).unwrap();
    assert_eq!(same.items, fs.items);
}

#[test]
fn bare_output() {
    let t = term("in x");
    let fs = facts(&t).unwrap();
    assert_eq!(fs.len(), 1);
    assert_eq!(fs.items[0], Factor::constant(vec![b("x")]));
    let r = semantics_from_facts(&t).unwrap();
    assert_eq!(r.entries(), &[1.0, 0.0, 0.0, 1.0]);
}

#[test]
fn shared_free_output_variable() {
    let t = term("matrix N : Bool -> Bool = [0.9, 0.1; 0.4, 0.6];\ny = N(x);\nin (x, y)");
    let r = semantics_from_facts(&t).unwrap();
    let d = denote_term(&t).unwrap();
    assert!(r.max_abs_diff(&d).unwrap() <= TOL);
    // row x = f cannot produce column x = t
    assert_eq!(&r.entries()[4..6], &[0.0, 0.0]);
    assert_eq!(r.get(0, 0), 0.9);
}

#[test]
fn elimination_is_summing_out() {
    for seed in 0..30 {
        let p = ingest_network(&random_network(&GeneratorConfig::default().with_seed(seed))).unwrap();
        let fs = facts(&p.term).unwrap();
        let order: Vec<String> = p.term.eliminable_vars().iter().map(|v| v.name().to_string()).collect();
        let refs: Vec<&str> = order.iter().map(|s| s.as_str()).collect();
        let mut c = Cost::default();
        let left = big_product(&vef(&fs, &refs).unwrap().items, &mut c).unwrap();
        let right = big_product(&fs.items, &mut c).unwrap().sum_out(&order.iter().cloned().collect(), &mut c).unwrap();
        assert!(left.approx_eq(&right, TOL), "seed {seed}");
    }
}

// ---- rewriting ----

#[test]
fn first_step_couples_x1_and_x2() {
    let t = apply_rule(&network(), &Rule::Mult, 0).unwrap();
    assert_eq!(t.defs.len(), 5);
    assert_eq!(t.defs[0].pattern.to_string(), "(x1, x2)");
    assert_eq!(t.defs[0].expr.to_string(), "let x1 = M1() in (x1, M2(x1))");
}

#[test]
fn swap2_abstracts_the_shared_variable() {
    let l3 = load("tests/fixtures/after_x1.lve");
    let got = apply_rule(&l3, &Rule::Swap2, 3).unwrap();
    let want = term(&format!(
        "{SIX}x2 = let (x1, x2) = (let x1 = M1() in (x1, M2(x1))) in x2;
x3 = M3(x2);
x4 = M4();
f = \\y. M6(x2, y);
x5 = M5(x3, x4);
x6 = f(x5);
in (x3, x6)"
    ));
    assert!(alpha_eq(&got, &want), "{got}");
}

#[test]
fn swap1_twice_is_the_identity() {
    let t = term("matrix M : -> Bool = [0.5, 0.5];\nx = M();\ny = M();\nin (x, y)");
    let once = apply_rule(&t, &Rule::Swap1, 0).unwrap();
    assert_eq!(once.to_string(), "y = M();\nx = M();\nin (x, y)");
    assert_eq!(apply_rule(&once, &Rule::Swap1, 0).unwrap(), t);
    assert_eq!(sd(&t).unwrap(), once);
}

#[test]
fn swap_on_dependent_definitions() {
    let t = term("matrix M : -> Bool = [0.5, 0.5];\nmatrix N : Bool -> Bool = [0.5, 0.5; 0.1, 0.9];\nx = M();\ny = N(x);\nin y");
    assert!(matches!(
        apply_rule(&t, &Rule::Swap1, 0),
        Err(RewriteError::SideConditionViolated { .. })
    ));
    let got = sd(&t).unwrap();
    let want = term("matrix M : -> Bool = [0.5, 0.5];\nmatrix N : Bool -> Bool = [0.5, 0.5; 0.1, 0.9];\nvar g : Bool -o Bool;\ng = \\a. N(a);\nx = M();\ny = g(x);\nin y");
    assert!(alpha_eq(&got, &want), "{got}");
}

#[test]
fn swap3_folds_an_arrow_definition() {
    let head = "matrix C : -> Bool = [0.3, 0.7];\nmatrix N : Bool -> Bool = [0.5, 0.5; 0.1, 0.9];\nvar f : Bool -o Bool;\n";
    let t = term(&format!("{head}(x, f) = let x = C() in (x, \\y. N(y));\nz = f(w);\nin (x, z)"));
    let got = sd(&t).unwrap();
    let want = term(&format!(
        "{head}(x, z) = let (x, f) = (let x = C() in (x, \\y. N(y))) in (x, f(w));\nin (x, z)"
    ));
    assert!(alpha_eq(&got, &want), "{got}");
}

#[test]
fn anticipation_gathers_the_uses() {
    let t = term(&format!(
        "{SIX}x3 = M3(x2);\nx4 = M4();\nx5 = M5(x3, x4);\nx6 = M6(x2, x5);\nin (x3, x6)"
    ));
    let (same, steps) = va(&t, &[]).unwrap();
    assert_eq!((same, steps.len()), (t.clone(), 0));
    let (got, steps) = va(&t, &["x2"]).unwrap();
    assert!(!steps.is_empty());
    let first = &got.defs[0];
    assert!(first.expr.has_free("x2"));
    assert!(!got.suffix_free_vars(1).iter().any(|v| v.name() == "x2"));
    let text = first.expr.to_string();
    assert!(text.contains("M3(x2)") && text.contains("M6(x2,"), "{text}");
    assert!(matches!(va(&t, &["x3"]), Err(RewriteError::OutputOverlap { .. })));
    assert!(matches!(va(&t, &["x9"]), Err(RewriteError::NotFree { .. })));
}

#[test]
fn single_eliminations_match_the_expected_terms() {
    let l3 = vel(&network(), "x1").unwrap();
    assert!(alpha_eq(&l3, &load("tests/fixtures/after_x1.lve")));
    let l11 = vel(&load("tests/fixtures/after_x2.lve"), "x4").unwrap();
    assert!(alpha_eq(&l11, &load("tests/fixtures/after_x4.lve")), "{l11}");
}

#[test]
fn unused_variable_in_a_pair_is_dropped_in_one_step() {
    let t = term("matrix P : -> Bool * Bool = [0.1, 0.2, 0.3, 0.4];\n(a, b) = P();\nin a");
    let (got, steps) = vel_traced(&t, "b").unwrap();
    assert_eq!(steps.len(), 1);
    assert_eq!(steps[0].rule, Rule::Elim("b".into()));
    assert_eq!(got.defs[0].pattern.to_string(), "a");
    let d = denote_term(&got).unwrap();
    assert!((d.entries()[0] - 0.3).abs() < 1e-12);
}

#[test]
fn elimination_errors() {
    let t = term("matrix M : -> Bool = [0.5, 0.5];\nx = M();\ny = M();\nin x");
    assert!(matches!(vel(&t, "y"), Err(RewriteError::NotEliminable { .. })));
    assert!(matches!(vel(&t, "x"), Err(RewriteError::InOutput { .. })));
    assert!(matches!(vel(&t, "q"), Err(RewriteError::NotDefined { .. })));
    let dup = term("matrix M : -> Bool = [0.5, 0.5];\nx = M();\nx = M();\nin x");
    assert!(matches!(vel(&dup, "x"), Err(RewriteError::NotCanonicalized | RewriteError::InOutput { .. })));
}

#[test]
fn empty_order() {
    let (t, tr) = vel_seq(&network(), &[]).unwrap();
    assert_eq!(t, network());
    assert!(tr.is_empty());
}

#[test]
fn size_bound_on_each_elimination() {
    let mut t = network();
    for x in ["x1", "x2", "x4", "x5"] {
        let sb = size_bound(&t, x).unwrap();
        assert!(sb.holds(), "{x}: {sb:?}");
        t = vel(&t, x).unwrap();
    }
    let sb = size_bound(&network(), "x1").unwrap();
    assert_eq!((sb.before, sb.after, sb.degree), (20, 24, 2));
}

#[test]
fn size_bound_on_random_networks() {
    let mut trials = 0;
    for seed in 0..200 {
        let p = ingest_network(&random_network(&GeneratorConfig::default().with_seed(seed))).unwrap();
        let cands = p.term.eliminable_vars();
        let Some(x) = cands.get(seed as usize % cands.len().max(1)) else { continue };
        assert!(size_bound(&p.term, x.name()).unwrap().holds(), "seed {seed}");
        trials += 1;
    }
    assert!(trials > 150);
}

#[test]
fn simplification() {
    let (t, _) = vel_seq(&network(), &["x1", "x2", "x4", "x5"]).unwrap();
    let s = simplify(&t);
    assert!(s.size() < t.size());
    let d = denote_term(&s).unwrap().max_abs_diff(&denote_term(&network()).unwrap()).unwrap();
    assert!(d <= TOL);
    assert_eq!(simplify(&network()), network());
    let l3 = load("tests/fixtures/after_x1.lve");
    assert_eq!(simplify(&l3).defs[0].expr.to_string(), "let x1 = M1() in M2(x1)");
}
