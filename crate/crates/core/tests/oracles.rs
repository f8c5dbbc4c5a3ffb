use lve::ast::Expr;
use lve::denote::{denote, denote_term, total_mass_check};
use lve::frontend::{ingest_network, parse, Cpt, NetworkFile, NetworkNode, NetworkVariable};
use lve::verify::{brute_force_joint, max_abs_diff, network_joint, run_instance, GeneratorConfig, Status};

const COIN: &str = "matrix C : -> Bool = [0.3, 0.7];\n";

#[test]
fn copied_coin() {
    let t = parse(&format!("{COIN}v = C();\nw = v;\nin (v, w)")).unwrap().term;
    let d = denote_term(&t).unwrap();
    assert!(max_abs_diff(d.entries(), &[0.3, 0.0, 0.0, 0.7]) <= 1e-12);
    assert!(max_abs_diff(&brute_force_joint(&t).unwrap(), d.entries()) <= 1e-12);
}

#[test]
fn two_coins() {
    let p = parse(&format!("{COIN}v = C();\nin v")).unwrap();
    let coin = p.term.defs[0].expr.clone();
    let pair = Expr::pair(coin.clone(), coin);
    let d = denote(&pair).unwrap();
    assert!(max_abs_diff(d.entries(), &[0.09, 0.21, 0.21, 0.49]) <= 1e-12);
    assert!((total_mass_check(&pair).unwrap().mass - 1.0).abs() <= 1e-12);
}

#[test]
fn single_node_prior() {
    let net = NetworkFile {
        variables: vec![NetworkVariable {
            name: "x".into(),
            states: None,
        }],
        nodes: vec![NetworkNode {
            var: "x".into(),
            parents: vec![],
            cpt: Cpt::Flat(vec![0.2, 0.8]),
        }],
        query: vec!["x".into()],
    };
    assert_eq!(network_joint(&net).unwrap(), [0.2, 0.8]);
    let t = ingest_network(&net).unwrap().term;
    assert_eq!(brute_force_joint(&t).unwrap(), [0.2, 0.8]);
}

#[test]
fn oracles_agree_on_random_networks() {
    for seed in 0..40 {
        let cfg = GeneratorConfig {
            seed,
            nodes: 7,
            max_parents: 3,
            p_extra_edge: 0.4,
            query_size: 3,
        };
        let net = lve::verify::random_network(&cfg);
        let t = ingest_network(&net).unwrap().term;
        let d = denote_term(&t).unwrap();
        assert!(max_abs_diff(&network_joint(&net).unwrap(), d.entries()) <= 1e-9);
        assert!(max_abs_diff(&brute_force_joint(&t).unwrap(), d.entries()) <= 1e-9);
        assert!((d.total_mass() - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn instance_replay_is_byte_identical() {
    let cfg = GeneratorConfig::default().with_seed(42);
    let a: Vec<String> = run_instance(&cfg, 1 << 20).iter().map(|r| serde_json::to_string(r).unwrap()).collect();
    let b: Vec<String> = run_instance(&cfg, 1 << 20).iter().map(|r| serde_json::to_string(r).unwrap()).collect();
    assert_eq!(a, b);
    assert!(run_instance(&cfg, 1 << 20).iter().all(|r| r.status == Status::Pass));
}
