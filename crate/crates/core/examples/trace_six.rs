//! Eliminates x1, x2, x4, x5 from data/six_node.lve and prints each step.
//!
//! Run from the workspace root: `cargo run -p lve --example trace_six`.

use lve::denote::denote_term;
use lve::frontend::parse;
use lve::rewrite::{simplify, vel_seq};

fn main() {
    let text = std::fs::read_to_string("data/six_node.lve").expect("run from the workspace root");
    let p = parse(&text).unwrap();
    let (t, tr) = vel_seq(&p.term, &["x1", "x2", "x4", "x5"]).unwrap();
    print!("{}", tr.to_text());
    let before = denote_term(&p.term).unwrap();
    let after = denote_term(&t).unwrap();
    println!("steps per variable: {:?}", tr.per_var);
    println!("max difference: {:?}", before.max_abs_diff(&after));
    println!("{}", simplify(&t));
}
