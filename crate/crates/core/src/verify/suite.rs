use std::collections::BTreeSet;
use std::fmt::{self, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{brute_force_joint, marginal_from_factors, max_abs_diff, network_joint, random_network, GeneratorConfig, VerifyError};
use crate::ast::{has_distinct_binders, typecheck, LetTerm};
use crate::denote::{total_mass_check, Denoter, WeightedRelation, TOL};
use crate::factor::{facts, facts_varset_check, match_factor_sets, min_degree_order, semantics_from_facts, vef_with_cap};
use crate::frontend::{ingest_network, NetworkFile};
use crate::rewrite::{size_bound, vel_seq, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub seed: u64,
    pub check: String,
    pub status: Status,
    /// Largest absolute error seen; 0 for structural checks.
    pub max_error: f64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl fmt::Display for CheckRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "seed={} {} {} max_error={:.3e}", self.seed, self.check, self.status, self.max_error)?;
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

/// How instances are spread over threads.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is on, otherwise runs
    /// sequentially.
    #[default]
    Parallel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub first_seed: u64,
    pub instances: usize,
    /// Shape of every instance; its seed is replaced per instance.
    pub generator: GeneratorConfig,
    pub execution: Execution,
    pub web_cap: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            first_seed: 0,
            instances: 100,
            generator: GeneratorConfig::default(),
            execution: Execution::default(),
            web_cap: crate::denote::DEFAULT_WEB_CAP,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SuiteStats {
    pub instances: usize,
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    /// `vel` invocations whose step and size bounds were checked.
    pub vel_calls: usize,
    /// Swap steps whose factor sets were compared.
    pub swap_steps: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteReport {
    /// Sorted by seed, then check name.
    pub records: Vec<CheckRecord>,
    pub stats: SuiteStats,
}

impl SuiteReport {
    fn from_instances(instances: Vec<InstanceResult>) -> Self {
        let mut stats = SuiteStats {
            instances: instances.len(),
            ..SuiteStats::default()
        };
        let mut records = Vec::new();
        for r in instances {
            stats.vel_calls += r.vel_calls;
            stats.swap_steps += r.swap_steps;
            records.extend(r.records);
        }
        records.sort_by(|a, b| (a.seed, &a.check).cmp(&(b.seed, &b.check)));
        stats.checks = records.len();
        for r in &records {
            match r.status {
                Status::Pass => stats.passed += 1,
                Status::Fail => stats.failed += 1,
                Status::Skip => stats.skipped += 1,
            }
        }
        SuiteReport { records, stats }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| r.status == Status::Fail)
    }

    pub fn is_ok(&self) -> bool {
        self.stats.failed == 0
    }

    /// Largest error over the records whose check name starts with `prefix`.
    pub fn max_error(&self, prefix: &str) -> f64 {
        self.records
            .iter()
            .filter(|r| r.check.starts_with(prefix))
            .map(|r| r.max_error)
            .fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            let _ = writeln!(s, "{r}");
        }
        let st = &self.stats;
        let _ = writeln!(
            s,
            "instances={} checks={} passed={} failed={} skipped={}",
            st.instances, st.checks, st.passed, st.failed, st.skipped
        );
        s
    }

    pub fn to_json_lines(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            let _ = writeln!(s, "{}", serde_json::to_string(r).expect("record serializes"));
        }
        s
    }
}

/// Generates `instances` networks from consecutive seeds and checks each.
pub fn run_suite(cfg: &SuiteConfig) -> SuiteReport {
    let seeds: Vec<u64> = (0..cfg.instances as u64).map(|i| cfg.first_seed + i).collect();
    let one = |seed: &u64| run_one(&cfg.generator.with_seed(*seed), cfg.web_cap);
    let results: Vec<InstanceResult> = match cfg.execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            seeds.par_iter().map(one).collect()
        }
        _ => seeds.iter().map(one).collect(),
    };
    SuiteReport::from_instances(results)
}

/// All checks for the network generated from `cfg`.
pub fn run_instance(cfg: &GeneratorConfig, web_cap: usize) -> Vec<CheckRecord> {
    let mut r = run_one(cfg, web_cap).records;
    r.sort_by(|a, b| a.check.cmp(&b.check));
    r
}

trait Failure: fmt::Display {
    fn over_cap(&self) -> bool;
}

macro_rules! failure {
    ($($t:ty => $f:expr),* $(,)?) => {
        $(impl Failure for $t {
            fn over_cap(&self) -> bool {
                ($f)(self)
            }
        })*
    };
}

failure! {
    crate::denote::DenoteError => crate::denote::DenoteError::is_web_cap,
    crate::factor::FactorError => crate::factor::FactorError::is_web_cap,
    crate::rewrite::RewriteError => crate::rewrite::RewriteError::is_web_cap,
    VerifyError => VerifyError::is_web_cap,
    crate::frontend::FrontendError => |_: &crate::frontend::FrontendError| false,
}

struct InstanceResult {
    records: Vec<CheckRecord>,
    vel_calls: usize,
    swap_steps: usize,
}

struct Checker {
    seed: u64,
    web_cap: usize,
    records: Vec<CheckRecord>,
    vel_calls: usize,
    swap_steps: usize,
}

impl Checker {
    fn record(&mut self, check: impl Into<String>, status: Status, max_error: f64, detail: impl Into<String>) {
        self.records.push(CheckRecord {
            seed: self.seed,
            check: check.into(),
            status,
            max_error,
            detail: detail.into(),
        });
    }

    fn structural(&mut self, check: impl Into<String>, ok: bool, detail: impl Into<String>) {
        let (status, detail) = if ok {
            (Status::Pass, String::new())
        } else {
            (Status::Fail, detail.into())
        };
        self.record(check, status, 0.0, detail);
    }

    fn numeric(&mut self, check: impl Into<String>, err: f64) {
        let ok = err <= TOL;
        let detail = if ok { "" } else { "exceeds tolerance" };
        self.record(check, if ok { Status::Pass } else { Status::Fail }, err, detail);
    }

    /// A failed computation. Hitting the web cap is a skip, not a failure.
    fn error<E: Failure>(&mut self, check: impl Into<String>, context: &str, e: E) {
        let status = if e.over_cap() { Status::Skip } else { Status::Fail };
        let detail = if context.is_empty() {
            e.to_string()
        } else {
            format!("{context}: {e}")
        };
        self.record(check, status, 0.0, detail);
    }

    fn finish(self) -> InstanceResult {
        InstanceResult {
            records: self.records,
            vel_calls: self.vel_calls,
            swap_steps: self.swap_steps,
        }
    }
}

fn run_one(cfg: &GeneratorConfig, web_cap: usize) -> InstanceResult {
    let mut c = Checker {
        seed: cfg.seed,
        web_cap,
        records: Vec::new(),
        vel_calls: 0,
        swap_steps: 0,
    };
    let net = random_network(cfg);
    let program = match ingest_network(&net) {
        Ok(p) => p,
        Err(e) => {
            c.error("ingest", "", e);
            return c.finish();
        }
    };
    let term = program.term;
    let well_typed = typecheck(&term).is_ok() && has_distinct_binders(&term);
    c.structural("ingest", well_typed, "ingested term is ill-typed or not canonical");
    if !well_typed {
        return c.finish();
    }
    let reference = match Denoter::new(web_cap).denote_term(&term) {
        Ok(r) => r,
        Err(e) => {
            c.error("denote", "", e);
            return c.finish();
        }
    };
    match network_joint(&net) {
        Ok(j) => c.numeric("network_joint", max_abs_diff(&j, reference.entries())),
        Err(e) => c.error("network_joint", "", e),
    }
    check_term(&mut c, &term, &reference, &relevant_vars(&net));
    c.finish()
}

/// Non-query variables with a path to a query variable, in node order.
/// Eliminating anything else is not needed for the query, and leaves a
/// definition with nothing to bind.
fn relevant_vars(net: &NetworkFile) -> Vec<String> {
    let mut relevant: BTreeSet<&str> = net.query.iter().map(|s| s.as_str()).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for n in &net.nodes {
            if relevant.contains(n.var.as_str()) {
                for p in &n.parents {
                    changed |= relevant.insert(p.as_str());
                }
            }
        }
    }
    net.nodes
        .iter()
        .map(|n| n.var.clone())
        .filter(|v| relevant.contains(v.as_str()) && !net.query.contains(v))
        .collect()
}

fn orders(c: &Checker, term: &LetTerm, vars: &[String]) -> Vec<(&'static str, Vec<String>)> {
    let mut out = vec![("identity", vars.to_vec())];
    let mut rev = vars.to_vec();
    rev.reverse();
    out.push(("reverse", rev));
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed ^ 0x005e_ed0f_0de5);
    for label in ["random_a", "random_b"] {
        let mut o = vars.to_vec();
        o.shuffle(&mut rng);
        out.push((label, o));
    }
    if let Ok(set) = facts(term) {
        out.push(("min_degree", min_degree_order(&set, vars)));
    }
    out
}

fn check_term(c: &mut Checker, term: &LetTerm, reference: &WeightedRelation, vars: &[String]) {
    let web_cap = c.web_cap;
    let denotes = |t: &LetTerm| Denoter::new(web_cap).denote_term(t);
    let diff = |a: &WeightedRelation, b: &WeightedRelation| a.max_abs_diff(b).unwrap_or(f64::INFINITY);

    match brute_force_joint(term) {
        Ok(j) => c.numeric("brute_force", max_abs_diff(&j, reference.entries())),
        Err(e) => c.error("brute_force", "", e),
    }
    match semantics_from_facts(term) {
        Ok(r) => c.numeric("semantics_from_facts", diff(&r, reference)),
        Err(e) => c.error("semantics_from_facts", "", e),
    }
    match facts_varset_check(term) {
        Ok(ok) => c.structural("facts_varset", ok, "variables of Facts do not split as expected"),
        Err(e) => c.error("facts_varset", "", e),
    }
    match total_mass_check(&term.to_expr()) {
        Ok(m) => c.numeric("total_mass", (m.mass - m.expected as f64).abs()),
        Err(e) => c.error("total_mass", "", e),
    }
    let initial = match facts(term) {
        Ok(s) => s,
        Err(e) => {
            c.error("facts", "", e);
            return;
        }
    };

    let mut marginals: Vec<(&str, Vec<f64>)> = Vec::new();
    for (label, order) in orders(c, term, vars) {
        let name = |check: &str| format!("{check}[{label}]");
        let seq: Vec<&str> = order.iter().map(|s| s.as_str()).collect();
        let detail = format!("order {}", order.join(","));

        let vef_set = match vef_with_cap(&initial, &seq, c.web_cap) {
            Ok(s) => s,
            Err(e) => {
                c.error(name("vef"), &detail, e);
                continue;
            }
        };
        match marginal_from_factors(&vef_set.items, &term.output) {
            Ok(m) => c.numeric(name("vef_marginal"), max_abs_diff(&m, reference.entries())),
            Err(e) => c.error(name("vef_marginal"), "", e),
        }

        let (last, trace) = match vel_seq(term, &seq) {
            Ok(r) => r,
            Err(e) => {
                c.error(name("vel"), &detail, e);
                continue;
            }
        };
        match facts(&last) {
            Ok(f) => match match_factor_sets(&f.items, &vef_set.items, TOL) {
                Ok(err) => c.numeric(name("vel_facts_eq_vef"), err),
                Err(m) => c.record(name("vel_facts_eq_vef"), Status::Fail, 0.0, format!("{detail}: {m}")),
            },
            Err(e) => c.error(name("vel_facts_eq_vef"), "", e),
        }
        match denotes(&last) {
            Ok(r) => c.numeric(name("vel_denote"), diff(&r, reference)),
            Err(e) => c.error(name("vel_denote"), "", e),
        }
        match facts(&last).map_err(VerifyError::from).and_then(|f| marginal_from_factors(&f.items, &term.output)) {
            Ok(m) => marginals.push((label, m)),
            Err(e) => c.error(name("vel_marginal"), "", e),
        }
        check_bounds(c, &trace, &seq, &name);
        check_steps(c, &trace, &name);
    }

    if let Some(((_, first), rest)) = marginals.split_first() {
        let err = rest.iter().map(|(_, m)| max_abs_diff(first, m)).fold(0.0, f64::max);
        c.numeric("order_independence", err);
    }
}

/// Outcome of a check made of many small ones: any failure fails it, and
/// otherwise any computation over the web cap makes it a skip.
#[derive(Default)]
struct Tally {
    err: f64,
    failed: Vec<String>,
    capped: Vec<String>,
}

impl Tally {
    fn computation<E: Failure>(&mut self, label: &str, e: E) {
        if e.over_cap() {
            self.capped.push(format!("{label}: {e}"));
        } else {
            self.failed.push(format!("{label}: {e}"));
        }
    }

    fn close(self, c: &mut Checker, check: String) {
        let (status, detail) = if !self.failed.is_empty() {
            (Status::Fail, self.failed)
        } else if !self.capped.is_empty() {
            (Status::Skip, self.capped)
        } else {
            (Status::Pass, Vec::new())
        };
        c.record(check, status, self.err, detail.join("; "));
    }
}

/// Step bound and size bound for each `vel` call of the trace.
fn check_bounds(c: &mut Checker, trace: &Trace, seq: &[&str], name: &dyn Fn(&str) -> String) {
    let mut start = 0;
    let mut steps = Tally::default();
    let mut size = Tally::default();
    for (x, n) in seq.iter().zip(&trace.per_var) {
        let before = if start < trace.steps.len() {
            &trace.steps[start].before
        } else {
            &trace.final_term
        };
        if *n > before.defs.len() {
            steps.failed.push(format!("{x}: {n} steps > {} definitions", before.defs.len()));
        }
        match size_bound(before, x) {
            Ok(b) if b.holds() => {}
            Ok(b) => size.failed.push(format!("{x}: size {} > {} + 4*{}", b.after, b.before, b.degree)),
            Err(e) => size.computation(x, e),
        }
        c.vel_calls += 1;
        start += n;
    }
    steps.close(c, name("step_bound"));
    size.close(c, name("size_bound"));
}

/// Subject reduction, semantic invariance, and invariance of Facts under
/// swaps, for every step.
fn check_steps(c: &mut Checker, trace: &Trace, name: &dyn Fn(&str) -> String) {
    let mut typing = Tally::default();
    let mut sem = Tally::default();
    let mut swap = Tally::default();
    let mut denoter = Denoter::new(c.web_cap);
    let mut prev = denoter.denote_term(&trace.initial);
    for (i, s) in trace.steps.iter().enumerate() {
        let label = format!("step {} {}@{}", i + 1, s.rule, s.position);
        let same_type = matches!((typecheck(&s.before), typecheck(&s.after)), (Ok(a), Ok(b)) if a == b);
        if !same_type || s.before.free_vars() != s.after.free_vars() {
            typing.failed.push(label.clone());
        }
        let now = denoter.denote_term(&s.after);
        match (&prev, &now) {
            (Ok(a), Ok(b)) => {
                let d = a.max_abs_diff(b).unwrap_or(f64::INFINITY);
                sem.err = sem.err.max(d);
                if d > TOL {
                    sem.failed.push(label.clone());
                }
            }
            (Err(e), _) | (_, Err(e)) => sem.computation(&label, e.clone()),
        }
        prev = now;
        if s.rule.is_swap() {
            c.swap_steps += 1;
            match (facts(&s.before), facts(&s.after)) {
                (Ok(a), Ok(b)) => match match_factor_sets(&a.items, &b.items, TOL) {
                    Ok(e) => swap.err = swap.err.max(e),
                    Err(m) => swap.failed.push(format!("{label}: {m}")),
                },
                (Err(e), _) | (_, Err(e)) => swap.computation(&label, e),
            }
        }
    }
    typing.close(c, name("subject_reduction"));
    sem.close(c, name("semantic_invariance"));
    swap.close(c, name("swap_invariance"));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_suite() {
        let r = run_suite(&SuiteConfig {
            instances: 0,
            ..SuiteConfig::default()
        });
        assert!(r.records.is_empty());
        assert!(r.is_ok());
    }

    #[test]
    fn small_suite_passes() {
        let r = run_suite(&SuiteConfig {
            instances: 8,
            execution: Execution::Sequential,
            ..SuiteConfig::default()
        });
        assert!(r.is_ok(), "{}", r.to_text());
        assert!(r.stats.vel_calls > 0);
    }

    #[test]
    fn replay_is_identical() {
        let cfg = GeneratorConfig::default().with_seed(17);
        let a = run_instance(&cfg, 1 << 16);
        let b = run_instance(&cfg, 1 << 16);
        assert_eq!(a, b);
    }
}
