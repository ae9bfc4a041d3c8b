//! Refinement studies in τ, h and γ.

use crate::discretization::Mesh;
use crate::error::{Error, Result};
use crate::functionals::State;
use crate::stepper::mms::l2_errors;
use crate::stepper::{run, EnergyLedger, ScenarioId, ScenarioSpec, Trajectory};

/// Which parameter a study refines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyMode {
    /// Levels are step counts N.
    Tau,
    /// Levels are cell counts in x; y follows the aspect ratio of the spec.
    Space,
    /// Levels are regularization values γ.
    Gamma,
}

impl StudyMode {
    pub fn name(self) -> &'static str {
        match self {
            StudyMode::Tau => "tau",
            StudyMode::Space => "space",
            StudyMode::Gamma => "gamma",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tau" => Some(StudyMode::Tau),
            "space" | "h" => Some(StudyMode::Space),
            "gamma" => Some(StudyMode::Gamma),
            _ => None,
        }
    }
}

/// One row per level; orders are NaN where undefined.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyTable {
    pub mode: StudyMode,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl StudyTable {
    fn new(mode: StudyMode, columns: &[&str]) -> Self {
        StudyTable { mode, columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.10e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// log(e_coarse / e_fine) / log(ratio).
pub fn observed_order(e_coarse: f64, e_fine: f64, ratio: f64) -> f64 {
    (e_coarse / e_fine).ln() / ratio.ln()
}

/// (∫|v_a − v_b|² + ∫|E_a − E_b|²)^½ with 2×2 Gauss.
pub fn l2_difference(mesh: &Mesh, a: &State, b: &State) -> f64 {
    let q = mesh.gauss2();
    let mut acc = 0.0;
    for el in 0..mesh.elements() {
        let nodes = mesh.element_nodes(el);
        for g in &q {
            let (va, vb) = (a.v.eval(&nodes, &g.basis).v, b.v.eval(&nodes, &g.basis).v);
            let (ea, eb) = (a.e.eval(&nodes, &g.basis).value, b.e.eval(&nodes, &g.basis).value);
            acc += g.weight * ((va[0] - vb[0]).powi(2) + (va[1] - vb[1]).powi(2) + (ea - eb).norm_sq());
        }
    }
    acc.sqrt()
}

fn run_spec(spec: &ScenarioSpec) -> Result<(Mesh, Trajectory, EnergyLedger)> {
    let sc = spec.build()?;
    match run(&sc) {
        Ok((traj, ledger)) => Ok((sc.mesh, traj, ledger)),
        Err(f) => Err(f.error),
    }
}

fn check_levels(levels: &[f64], integer: bool) -> Result<()> {
    if levels.len() < 3 {
        return Err(Error::Config(format!("a study needs at least 3 levels, got {}", levels.len())));
    }
    let up = levels.windows(2).all(|w| w[1] > w[0]);
    let down = levels.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::Config("study levels must be strictly monotone".into()));
    }
    if integer && levels.iter().any(|l| *l < 1.0 || l.fract() != 0.0) {
        return Err(Error::Config("study levels must be positive integers in this mode".into()));
    }
    if levels.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::Config("study levels must be finite and nonnegative".into()));
    }
    Ok(())
}

/// Runs `spec` once per level and tabulates errors or energy statistics.
pub fn convergence_study(spec: &ScenarioSpec, levels: &[f64], mode: StudyMode) -> Result<StudyTable> {
    spec.validate()?;
    match mode {
        StudyMode::Tau => tau_study(spec, levels),
        StudyMode::Space => space_study(spec, levels),
        StudyMode::Gamma => gamma_study(spec, levels),
    }
}

fn tau_study(spec: &ScenarioSpec, levels: &[f64]) -> Result<StudyTable> {
    check_levels(levels, true)?;
    let mms = spec.id == ScenarioId::KelvinVoigtMms;
    let mut finals = Vec::new();
    let mut mesh = None;
    for &n in levels {
        let s = ScenarioSpec { steps: n as usize, ..spec.clone() };
        let (m, traj, _) = run_spec(&s)?;
        finals.push(traj.states.last().cloned().expect("trajectory has the initial state"));
        mesh = Some(m);
    }
    let mesh = mesh.expect("at least three levels");
    let mut t = StudyTable::new(
        StudyMode::Tau,
        &["N", "tau", "err_v", "err_E", "err", "order", "self_diff", "self_order"],
    );
    let sol = spec.manufactured();
    let errs: Vec<(f64, f64)> =
        finals.iter().map(|s| if mms { l2_errors(&mesh, s, &sol, spec.horizon) } else { (f64::NAN, f64::NAN) }).collect();
    let diffs: Vec<f64> = finals.windows(2).map(|w| l2_difference(&mesh, &w[0], &w[1])).collect();
    for (k, &n) in levels.iter().enumerate() {
        let (ev, ee) = errs[k];
        let err = ev.hypot(ee);
        let order = if k > 0 { observed_order(errs[k - 1].0.hypot(errs[k - 1].1), err, n / levels[k - 1]) } else { f64::NAN };
        let self_diff = diffs.get(k).copied().unwrap_or(f64::NAN);
        let self_order = if k > 0 && k < diffs.len() { observed_order(diffs[k - 1], diffs[k], n / levels[k - 1]) } else { f64::NAN };
        t.rows.push(vec![n, spec.horizon / n, ev, ee, err, order, self_diff, self_order]);
    }
    Ok(t)
}

fn space_study(spec: &ScenarioSpec, levels: &[f64]) -> Result<StudyTable> {
    check_levels(levels, true)?;
    if spec.id != ScenarioId::KelvinVoigtMms {
        return Err(Error::Config("a space study needs the kelvin_voigt_mms scenario".into()));
    }
    let sol = spec.manufactured();
    let mut t = StudyTable::new(StudyMode::Space, &["nx", "h", "err_v", "err_E", "err", "order"]);
    let mut prev: Option<(f64, f64)> = None;
    for &n in levels {
        let nx = n as usize;
        let ny = ((n * spec.ny as f64 / spec.nx as f64).round() as usize).max(1);
        let s = ScenarioSpec { nx, ny, ..spec.clone() };
        let (mesh, traj, _) = run_spec(&s)?;
        let (ev, ee) = l2_errors(&mesh, traj.states.last().expect("initial state"), &sol, spec.horizon);
        let err = ev.hypot(ee);
        let h = spec.extents[0] / n;
        let order = prev.map(|(hp, ep)| observed_order(ep, err, hp / h)).unwrap_or(f64::NAN);
        t.rows.push(vec![n, h, ev, ee, err, order]);
        prev = Some((h, err));
    }
    Ok(t)
}

fn gamma_study(spec: &ScenarioSpec, levels: &[f64]) -> Result<StudyTable> {
    check_levels(levels, false)?;
    let mut t = StudyTable::new(
        StudyMode::Gamma,
        &["gamma", "max_energy", "total_dissipation", "total_P", "max_defect", "final_numerical_dissipation", "final_energy"],
    );
    for &g in levels {
        let mut s = spec.clone();
        s.params.gamma = g;
        let (_, _, ledger) = run_spec(&s)?;
        let last = ledger.rows.last().expect("ledger has the initial row");
        let max_defect = ledger.rows.iter().map(|r| r.defect().abs()).fold(0.0, f64::max);
        t.rows.push(vec![
            g,
            ledger.max_energy(),
            ledger.total_dissipation(),
            ledger.total_p(),
            max_defect,
            last.numerical_dissipation(),
            last.energy,
        ]);
    }
    Ok(t)
}
