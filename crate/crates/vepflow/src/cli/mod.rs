//! Batch front-end: run, verify, study and proxcheck.
//!
//! Exit codes: 0 pass, 1 usage or configuration error, 2 solver failure,
//! 3 certification failure.

mod config;

pub use config::{parse_checks, Check, Config, KEYS, RUNTIME_KEYS};

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::discretization::build_mesh;
use crate::error::{Error, Result};
use crate::functionals::{load_vector, Load};
use crate::stepper::scenarios::GAMMA_LEVELS;
use crate::stepper::{read_checkpoint, run, write_checkpoint, Checkpoint, EnergyLedger, Trajectory};
use crate::verify::{
    certify_steps, check_envar, check_weak, convergence_study, convexity_suite, prox_oracle_suite, with_discrete_korn,
    CertReport, StudyMode, TestDictionary,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_CERT: i32 = 3;

/// Directory under the output directory that holds field checkpoints.
pub const CHECKPOINT_DIR: &str = "checkpoints";

#[derive(Parser, Debug)]
#[command(name = "vepflow", version, about = "Variational solver and certifier for visco-elasto-plastic flow")]
pub struct Cli {
    /// Key=value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated checks: steps, weak, envar, convexity, prox or all.
    #[arg(long, global = true)]
    pub checks: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a scenario and write the ledger, checkpoints and resolved config.
    Run,
    /// Certify a stored trajectory.
    Verify {
        /// Run output directory or its checkpoint directory.
        trajectory: PathBuf,
    },
    /// Refinement study: tau, space or gamma.
    Study { mode: String },
    /// Oracle suite for the potentials.
    Proxcheck,
}

/// Parses arguments, dispatches and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(config.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return EXIT_USAGE;
        }
    };
    pool.install(|| match &cli.command {
        Command::Run => cmd_run(&config),
        Command::Verify { trajectory } => cmd_verify(&config, trajectory),
        Command::Study { mode } => match StudyMode::parse(mode) {
            Some(m) => cmd_study(&config, m),
            None => {
                eprintln!("error: unknown study mode '{mode}' (expected tau, space or gamma)");
                EXIT_USAGE
            }
        },
        Command::Proxcheck => cmd_proxcheck(&config),
    })
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut c = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            Config::parse(&text).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
                other => other,
            })?
        }
        None => Config::default(),
    };
    if let Some(o) = &cli.out {
        c.out = o.clone();
    }
    if let Some(t) = cli.threads {
        c.threads = t;
    }
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(list) = &cli.checks {
        c.checks = parse_checks(list)?;
    }
    Ok(c)
}

fn exit_for(e: &Error) -> i32 {
    match e {
        Error::Solver { .. } | Error::Convergence(_) => EXIT_SOLVER,
        _ => EXIT_USAGE,
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn prepare_out(c: &Config) -> Result<()> {
    fs::create_dir_all(&c.out)?;
    write(&c.out, "resolved.cfg", &c.resolved())
}

fn checkpoint_name(step: usize) -> String {
    format!("step_{step:05}.bin")
}

fn write_trajectory(c: &Config, traj: &Trajectory, ledger: &EnergyLedger) -> Result<()> {
    let dir = c.out.join(CHECKPOINT_DIR);
    if dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    fs::create_dir_all(&dir)?;
    for (n, (s, xi)) in traj.states.iter().zip(&traj.xi).enumerate() {
        let ck = Checkpoint { nx: c.spec.nx, ny: c.spec.ny, step: n, tau: traj.tau, state: s.clone(), xi: xi.clone() };
        write_checkpoint(&dir.join(checkpoint_name(n)), &ck)?;
    }
    write(&c.out, "ledger.csv", &ledger.to_csv())?;
    write(&c.out, "defect.csv", &ledger.defect_csv())
}

/// Runs the configured scenario.
pub fn cmd_run(c: &Config) -> i32 {
    let go = || -> Result<i32> {
        prepare_out(c)?;
        let sc = c.spec.build()?;
        match run(&sc) {
            Ok((traj, ledger)) => {
                write_trajectory(c, &traj, &ledger)?;
                let last = ledger.rows.last().expect("ledger has the initial row");
                println!(
                    "{}: {} steps, final energy {:.6e}, max ledger residual {:.3e}",
                    c.spec.id.name(),
                    traj.steps(),
                    last.energy,
                    ledger.rows.iter().skip(1).map(|r| r.ineq_residual).fold(f64::NEG_INFINITY, f64::max)
                );
                Ok(EXIT_OK)
            }
            Err(f) => {
                write_trajectory(c, &f.trajectory, &f.ledger)?;
                eprintln!("error: {}", f.error);
                Ok(EXIT_SOLVER)
            }
        }
    };
    go().unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_for(&e)
    })
}

/// Reads `step_*.bin` from `dir` (or `dir/checkpoints`) as a trajectory.
pub fn read_trajectory(c: &Config, dir: &Path) -> Result<Trajectory> {
    let dir = if dir.join(CHECKPOINT_DIR).is_dir() { dir.join(CHECKPOINT_DIR) } else { dir.to_path_buf() };
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("step_") && n.ends_with(".bin")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!("no checkpoints in {}", dir.display())));
    }
    let mesh = build_mesh(c.spec.nx, c.spec.ny, c.spec.extents, c.spec.bc)?;
    let mut traj = Trajectory { tau: c.spec.tau(), states: vec![], xi: vec![], loads: vec![] };
    for (n, path) in files.iter().enumerate() {
        let ck = read_checkpoint(path)?;
        if ck.step != n {
            return Err(Error::Corrupt(format!("{}: expected step {n}, found {}", path.display(), ck.step)));
        }
        if (ck.nx, ck.ny) != (c.spec.nx, c.spec.ny) {
            return Err(Error::Config(format!(
                "{}: grid {}x{} does not match the config ({}x{})",
                path.display(),
                ck.nx,
                ck.ny,
                c.spec.nx,
                c.spec.ny
            )));
        }
        if (ck.tau - traj.tau).abs() > 1e-12 * traj.tau {
            return Err(Error::Config(format!("{}: τ = {} does not match the config ({})", path.display(), ck.tau, traj.tau)));
        }
        traj.states.push(ck.state);
        traj.xi.push(ck.xi);
    }
    let sc = c.spec.build()?;
    traj.loads.push(Load::zero(mesh.nodes()));
    for n in 1..traj.states.len() {
        traj.loads.push(load_vector(&mesh, sc.forcing.as_ref(), (n - 1) as f64 * traj.tau, n as f64 * traj.tau));
    }
    Ok(traj)
}

/// Certifies a stored trajectory with the enabled checks.
pub fn cmd_verify(c: &Config, traj_dir: &Path) -> i32 {
    let go = || -> Result<i32> {
        let traj = read_trajectory(c, traj_dir)?;
        prepare_out(c)?;
        let sc = c.spec.build()?;
        let p = with_discrete_korn(&sc.mesh, &sc.params)?;
        let mut ledger = EnergyLedger::from_trajectory(&sc.mesh, &sc.params, &traj);
        let dict = TestDictionary::with_shapes(&sc.mesh, &p, c.dict_shapes)?;
        let mut report = CertReport::default();
        let has = |k: Check| c.checks.contains(&k);
        if has(Check::Steps) {
            report.extend(certify_steps(&sc.mesh, &traj, &mut ledger, &dict, &p, c.cert_tol)?);
        }
        if has(Check::Weak) {
            report.extend(check_weak(&sc.mesh, &traj, &ledger, &dict, &p, c.cert_tol, c.samples, c.seed)?);
        }
        if has(Check::Envar) {
            if p.gamma == 0.0 {
                report.extend(check_envar(&sc.mesh, &traj, &ledger, &dict, &p, c.envar_tol, c.samples, c.seed, None)?);
            } else {
                eprintln!("note: envar check skipped, it applies to γ = 0 only");
            }
        }
        if has(Check::Convexity) {
            report.extend(convexity_suite(&p, &sc.mesh, c.probe_trials, c.seed)?);
        }
        if has(Check::Prox) {
            report.extend(prox_oracle_suite(&p, c.prox_samples, c.seed)?);
        }
        write(&c.out, "cert.csv", &report.to_csv())?;
        write(&c.out, "cert.txt", &report.summary())?;
        write(&c.out, "ledger.csv", &ledger.to_csv())?;
        write(&c.out, "defect.csv", &ledger.defect_csv())?;
        print!("{}", report.summary());
        Ok(if report.passed() { EXIT_OK } else { EXIT_CERT })
    };
    go().unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_for(&e)
    })
}

/// Default levels of each study mode.
pub fn default_levels(mode: StudyMode) -> Vec<f64> {
    match mode {
        StudyMode::Tau => vec![25.0, 50.0, 100.0],
        StudyMode::Space => vec![16.0, 32.0, 64.0],
        StudyMode::Gamma => GAMMA_LEVELS.to_vec(),
    }
}

/// Runs a refinement study and writes `study_<mode>.csv`.
pub fn cmd_study(c: &Config, mode: StudyMode) -> i32 {
    let go = || -> Result<i32> {
        prepare_out(c)?;
        let levels = c.study_levels.clone().unwrap_or_else(|| default_levels(mode));
        let table = convergence_study(&c.spec, &levels, mode)?;
        let csv = table.to_csv();
        write(&c.out, &format!("study_{}.csv", mode.name()), &csv)?;
        print!("{csv}");
        Ok(EXIT_OK)
    };
    go().unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_for(&e)
    })
}

/// Runs the potentials oracle suite with the configured material.
pub fn cmd_proxcheck(c: &Config) -> i32 {
    let go = || -> Result<i32> {
        prepare_out(c)?;
        let report = prox_oracle_suite(&c.spec.params, c.prox_samples, c.seed)?;
        write(&c.out, "prox.csv", &report.to_csv())?;
        write(&c.out, "prox.txt", &report.summary())?;
        print!("{}", report.summary());
        Ok(if report.passed() { EXIT_OK } else { EXIT_CERT })
    };
    go().unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_for(&e)
    })
}
