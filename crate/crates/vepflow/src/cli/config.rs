//! Plain-text key=value run configuration.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::discretization::BoundaryKind;
use crate::error::{Error, Result};
use crate::potentials::DissipationModel;
use crate::stepper::scenarios::ForcingKind;
use crate::stepper::{ScenarioId, ScenarioSpec};

/// Checks selectable with `checks=` or `--checks`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    /// Per-step inequality, ledger, Gronwall, yield feasibility, multiplier.
    Steps,
    /// Integrated weak form over sampled (s, t).
    Weak,
    /// Energy-variational form; γ = 0 only.
    Envar,
    /// Randomized convexity probes.
    Convexity,
    /// Potentials oracle suite.
    Prox,
}

impl Check {
    pub const ALL: [Check; 5] = [Check::Steps, Check::Weak, Check::Envar, Check::Convexity, Check::Prox];

    pub fn name(self) -> &'static str {
        match self {
            Check::Steps => "steps",
            Check::Weak => "weak",
            Check::Envar => "envar",
            Check::Convexity => "convexity",
            Check::Prox => "prox",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Parses a comma-separated check list; `all` selects every check.
pub fn parse_checks(s: &str) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        if item == "all" {
            return Ok(Check::ALL.to_vec());
        }
        let c = Check::parse(item).ok_or_else(|| {
            let names: Vec<&str> = Check::ALL.iter().map(|c| c.name()).collect();
            Error::Config(format!("unknown check '{item}' (expected one of {} or all)", names.join(", ")))
        })?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("check list is empty".into()));
    }
    Ok(out)
}

/// A fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub spec: ScenarioSpec,
    /// Number of spatial shapes in the test dictionary.
    pub dict_shapes: usize,
    pub cert_tol: f64,
    pub envar_tol: f64,
    /// Stratified (s, t) samples of the integrated checks.
    pub samples: usize,
    pub prox_samples: usize,
    pub probe_trials: usize,
    pub study_levels: Option<Vec<f64>>,
    pub checks: Vec<Check>,
    pub out: PathBuf,
    /// 0 lets the thread pool choose.
    pub threads: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config::for_scenario(ScenarioId::ShearYield)
    }
}

/// Every accepted key, in resolved-output order.
pub const KEYS: [&str; 40] = [
    "scenario",
    "lx",
    "ly",
    "nx",
    "ny",
    "bc_left",
    "bc_right",
    "bc_bottom",
    "bc_top",
    "rigid_motion_filter",
    "T",
    "N",
    "rho",
    "mu1",
    "mu2",
    "K",
    "G",
    "nu",
    "sigma_yield",
    "gamma",
    "dissipation",
    "korn",
    "forcing",
    "forcing_amplitude",
    "initial_amplitude",
    "steady",
    "picard_max",
    "picard_tol",
    "admm_max",
    "admm_tol",
    "cg_tol",
    "cg_max",
    "dict_shapes",
    "cert_tol",
    "envar_tol",
    "samples",
    "prox_samples",
    "probe_trials",
    "study_levels",
    "checks",
];

/// Keys that belong to the invocation rather than the experiment; they are
/// accepted in files and also resolved.
pub const RUNTIME_KEYS: [&str; 3] = ["out", "threads", "seed"];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("key '{key}': cannot parse '{v}'")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("key '{key}': expected true or false, got '{v}'"))),
    }
}

fn bc(key: &str, v: &str) -> Result<BoundaryKind> {
    BoundaryKind::parse(v).ok_or_else(|| Error::Config(format!("key '{key}': expected dirichlet or slip, got '{v}'")))
}

impl Config {
    pub fn for_scenario(id: ScenarioId) -> Self {
        Config {
            spec: ScenarioSpec::new(id),
            dict_shapes: crate::verify::SHAPES.len(),
            cert_tol: 1e-7,
            envar_tol: 1e-6,
            samples: crate::verify::DEFAULT_SAMPLES,
            prox_samples: 1000,
            probe_trials: 200,
            study_levels: None,
            checks: vec![Check::Steps, Check::Weak, Check::Envar],
            out: PathBuf::from("out"),
            threads: 0,
            seed: 1,
        }
    }

    /// Parses a config file. `scenario` selects the defaults, every other key
    /// overrides one field; unknown and repeated keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut seen = HashSet::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got '{line}'", ln + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) && !RUNTIME_KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key '{k}'", ln + 1)));
            }
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: key '{k}' is given twice", ln + 1)));
            }
            pairs.push((k.to_string(), v.to_string()));
        }
        let id = match pairs.iter().find(|(k, _)| k == "scenario") {
            Some((_, v)) => ScenarioId::parse(v).ok_or_else(|| {
                let names: Vec<&str> = ScenarioId::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!("key 'scenario': unknown scenario '{v}' (expected one of {})", names.join(", ")))
            })?,
            None => ScenarioId::ShearYield,
        };
        let mut c = Config::for_scenario(id);
        for (k, v) in &pairs {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, k: &str, v: &str) -> Result<()> {
        let s = &mut self.spec;
        let p = &mut s.params;
        match k {
            "scenario" => {}
            "lx" => s.extents[0] = num(k, v)?,
            "ly" => s.extents[1] = num(k, v)?,
            "nx" => s.nx = num(k, v)?,
            "ny" => s.ny = num(k, v)?,
            "bc_left" => s.bc.left = bc(k, v)?,
            "bc_right" => s.bc.right = bc(k, v)?,
            "bc_bottom" => s.bc.bottom = bc(k, v)?,
            "bc_top" => s.bc.top = bc(k, v)?,
            "rigid_motion_filter" => s.bc.rigid_motion_filter = boolean(k, v)?,
            "T" => s.horizon = num(k, v)?,
            "N" => s.steps = num(k, v)?,
            "rho" => p.rho = num(k, v)?,
            "mu1" => p.mu1 = num(k, v)?,
            "mu2" => p.mu2 = num(k, v)?,
            "K" => p.bulk = num(k, v)?,
            "G" => p.shear = num(k, v)?,
            "nu" => p.nu = num(k, v)?,
            "sigma_yield" => p.sigma_yield = num(k, v)?,
            "gamma" => p.gamma = num(k, v)?,
            "dissipation" => {
                p.dissipation = DissipationModel::parse(v)
                    .ok_or_else(|| Error::Config(format!("key 'dissipation': expected zero, viscous or yield, got '{v}'")))?
            }
            "korn" => p.korn = if v == "auto" { None } else { Some(num(k, v)?) },
            "forcing" => {
                s.forcing = ForcingKind::parse(v).ok_or_else(|| {
                    Error::Config(format!("key 'forcing': expected none, rotational or manufactured, got '{v}'"))
                })?
            }
            "forcing_amplitude" => s.forcing_amplitude = num(k, v)?,
            "initial_amplitude" => s.initial_amplitude = num(k, v)?,
            "steady" => s.steady = boolean(k, v)?,
            "picard_max" => s.opts.picard_max = num(k, v)?,
            "picard_tol" => s.opts.picard_tol = num(k, v)?,
            "admm_max" => s.opts.admm_max = num(k, v)?,
            "admm_tol" => s.opts.admm_tol = num(k, v)?,
            "cg_tol" => s.opts.cg_tol = num(k, v)?,
            "cg_max" => s.opts.cg_max = num(k, v)?,
            "dict_shapes" => self.dict_shapes = num(k, v)?,
            "cert_tol" => self.cert_tol = num(k, v)?,
            "envar_tol" => self.envar_tol = num(k, v)?,
            "samples" => self.samples = num(k, v)?,
            "prox_samples" => self.prox_samples = num(k, v)?,
            "probe_trials" => self.probe_trials = num(k, v)?,
            "study_levels" => {
                self.study_levels = if v == "default" {
                    None
                } else {
                    Some(v.split(',').map(|x| num::<f64>(k, x.trim())).collect::<Result<Vec<_>>>()?)
                }
            }
            "checks" => self.checks = parse_checks(v)?,
            "out" => self.out = PathBuf::from(v),
            "threads" => self.threads = num(k, v)?,
            "seed" => self.seed = num(k, v)?,
            _ => return Err(Error::Config(format!("unknown key '{k}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.spec.nx == 0 || self.spec.ny == 0 {
            return Err(Error::Config("nx and ny must be >= 1".into()));
        }
        if !(self.spec.extents[0] > 0.0 && self.spec.extents[1] > 0.0) {
            return Err(Error::Config("lx and ly must be > 0".into()));
        }
        let o = &self.spec.opts;
        for (name, v) in [("picard_tol", o.picard_tol), ("admm_tol", o.admm_tol), ("cg_tol", o.cg_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if o.picard_max == 0 || o.admm_max == 0 || o.cg_max == 0 {
            return Err(Error::Config("iteration limits must be >= 1".into()));
        }
        if let Some(k) = self.spec.params.korn {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Config(format!("korn must be > 0 or auto, got {k}")));
            }
        }
        if self.dict_shapes == 0 || self.dict_shapes > crate::verify::SHAPES.len() {
            return Err(Error::Config(format!("dict_shapes must be in 1..={}", crate::verify::SHAPES.len())));
        }
        for (name, v) in [("cert_tol", self.cert_tol), ("envar_tol", self.envar_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.samples == 0 || self.prox_samples == 0 || self.probe_trials == 0 {
            return Err(Error::Config("samples, prox_samples and probe_trials must be >= 1".into()));
        }
        Ok(())
    }

    /// Every key with its effective value; parsing the output reproduces `self`.
    pub fn resolved(&self) -> String {
        let s = &self.spec;
        let p = &s.params;
        let o = &s.opts;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("scenario", s.id.name().into());
        kv("lx", s.extents[0].to_string());
        kv("ly", s.extents[1].to_string());
        kv("nx", s.nx.to_string());
        kv("ny", s.ny.to_string());
        kv("bc_left", s.bc.left.name().into());
        kv("bc_right", s.bc.right.name().into());
        kv("bc_bottom", s.bc.bottom.name().into());
        kv("bc_top", s.bc.top.name().into());
        kv("rigid_motion_filter", s.bc.rigid_motion_filter.to_string());
        kv("T", s.horizon.to_string());
        kv("N", s.steps.to_string());
        kv("rho", p.rho.to_string());
        kv("mu1", p.mu1.to_string());
        kv("mu2", p.mu2.to_string());
        kv("K", p.bulk.to_string());
        kv("G", p.shear.to_string());
        kv("nu", p.nu.to_string());
        kv("sigma_yield", p.sigma_yield.to_string());
        kv("gamma", p.gamma.to_string());
        kv("dissipation", p.dissipation.name().into());
        kv("korn", p.korn.map(|k| k.to_string()).unwrap_or_else(|| "auto".into()));
        kv("forcing", s.forcing.name().into());
        kv("forcing_amplitude", s.forcing_amplitude.to_string());
        kv("initial_amplitude", s.initial_amplitude.to_string());
        kv("steady", s.steady.to_string());
        kv("picard_max", o.picard_max.to_string());
        kv("picard_tol", o.picard_tol.to_string());
        kv("admm_max", o.admm_max.to_string());
        kv("admm_tol", o.admm_tol.to_string());
        kv("cg_tol", o.cg_tol.to_string());
        kv("cg_max", o.cg_max.to_string());
        kv("dict_shapes", self.dict_shapes.to_string());
        kv("cert_tol", self.cert_tol.to_string());
        kv("envar_tol", self.envar_tol.to_string());
        kv("samples", self.samples.to_string());
        kv("prox_samples", self.prox_samples.to_string());
        kv("probe_trials", self.probe_trials.to_string());
        kv(
            "study_levels",
            self.study_levels
                .as_ref()
                .map(|l| l.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
                .unwrap_or_else(|| "default".into()),
        );
        kv("checks", self.checks.iter().map(|c| c.name()).collect::<Vec<_>>().join(","));
        kv("out", self.out.display().to_string());
        kv("threads", self.threads.to_string());
        kv("seed", self.seed.to_string());
        out
    }
}
