//! Post-hoc certification: per-step and trajectory-level inequalities,
//! convexity probes, potential oracles and refinement studies.

mod certify;
mod dictionary;
mod probes;
mod prox;
mod study;

pub use certify::{certify_all, certify_steps, check_envar, check_weak, stratified_pairs, StepTable, DEFAULT_SAMPLES};
pub use dictionary::{DictEntry, TestDictionary, LAMBDA_LADDER, SHAPES};
pub use probes::{convexity_suite, convexity_suite_at, random_pair, random_state};
pub use prox::prox_oracle_suite;
pub use study::{convergence_study, l2_difference, observed_order, StudyMode, StudyTable};

use crate::discretization::{korn_constant, Mesh};
use crate::error::Result;
use crate::potentials::MaterialParams;

/// Outcome of one named check.
///
/// `worst_value` is the normalized quantity that must not exceed
/// `tolerance`, usually a violation divided by its scale.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub worst_value: f64,
    pub tolerance: f64,
    pub step: Option<usize>,
    pub entry_id: Option<String>,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: &str, worst_value: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            worst_value,
            tolerance,
            step: None,
            entry_id: None,
            pass: worst_value <= tolerance,
            detail: String::new(),
        }
    }

    pub fn at_step(mut self, step: Option<usize>) -> Self {
        self.step = step;
        self
    }

    pub fn entry(mut self, id: Option<String>) -> Self {
        self.entry_id = id;
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }
}

/// Tracks the largest value seen together with its location.
#[derive(Clone, Debug)]
pub(crate) struct Worst {
    pub value: f64,
    pub step: Option<usize>,
    pub entry: Option<String>,
}

impl Default for Worst {
    fn default() -> Self {
        Worst { value: f64::NEG_INFINITY, step: None, entry: None }
    }
}

impl Worst {
    pub fn offer(&mut self, value: f64, step: Option<usize>, entry: Option<&str>) {
        // NaN counts as the worst possible value.
        if value > self.value || value.is_nan() && !self.value.is_nan() {
            self.value = value;
            self.step = step;
            self.entry = entry.map(str::to_string);
        }
    }

    pub fn merge(mut self, o: Worst) -> Worst {
        if o.value > self.value || o.value.is_nan() && !self.value.is_nan() {
            self = o;
        }
        self
    }

    pub fn check(self, name: &str, tol: f64) -> CheckResult {
        let v = if self.value == f64::NEG_INFINITY { 0.0 } else { self.value };
        CheckResult::new(name, v, tol).at_step(self.step).entry(self.entry)
    }
}

/// Results of a set of checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CertReport {
    pub checks: Vec<CheckResult>,
}

impl CertReport {
    pub fn push(&mut self, c: CheckResult) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, o: CertReport) {
        self.checks.extend(o.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,worst_value,tolerance,step,entry_id,pass\n");
        for c in &self.checks {
            s.push_str(&format!(
                "{},{:.17e},{:.3e},{},{},{}\n",
                c.name,
                c.worst_value,
                c.tolerance,
                c.step.map(|n| n.to_string()).unwrap_or_default(),
                c.entry_id.clone().unwrap_or_default(),
                c.pass
            ));
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{:<4} {:<28} worst {:>12.4e}  tol {:>9.2e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.worst_value,
                c.tolerance
            ));
            if let Some(n) = c.step {
                s.push_str(&format!("  step {n}"));
            }
            if let Some(e) = &c.entry_id {
                s.push_str(&format!("  entry {e}"));
            }
            if !c.detail.is_empty() {
                s.push_str(&format!("  ({})", c.detail));
            }
            s.push('\n');
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        s.push_str(&format!("{} checks, {} failed\n", self.checks.len(), failed));
        s
    }
}

/// `p` with the discrete Korn constant of `mesh` filled in when absent.
pub fn with_discrete_korn(mesh: &Mesh, p: &MaterialParams) -> Result<MaterialParams> {
    match p.korn {
        Some(_) => Ok(*p),
        None => Ok(p.with_korn(korn_constant(mesh, p)?)),
    }
}
