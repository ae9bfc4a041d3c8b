//! Named scenarios: mesh, material, horizon, initial data and forcing.

use std::f64::consts::PI;
use std::sync::Arc;

use super::mms::MmsSolution;
use super::SolverOptions;
use crate::discretization::{build_mesh, BoundarySpec, Mesh, VectorField};
use crate::error::{Error, Result};
use crate::functionals::{Forcing, NoForcing, State};
use crate::potentials::{DissipationModel, MaterialParams};
use crate::tensors::SymTensor3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioId {
    Rest,
    ShearYield,
    KelvinVoigtMms,
    RotationObjectivity,
    GammaSweep,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] = [
        ScenarioId::Rest,
        ScenarioId::ShearYield,
        ScenarioId::KelvinVoigtMms,
        ScenarioId::RotationObjectivity,
        ScenarioId::GammaSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Rest => "rest",
            ScenarioId::ShearYield => "shear_yield",
            ScenarioId::KelvinVoigtMms => "kelvin_voigt_mms",
            ScenarioId::RotationObjectivity => "rotation_objectivity",
            ScenarioId::GammaSweep => "gamma_sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.name() == s)
    }
}

/// Body-force family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForcingKind {
    None,
    /// f₀ curl(sin²πx sin²πy), steady and divergence free.
    Rotational,
    /// Forcing and strain source of the manufactured solution.
    Manufactured,
}

impl ForcingKind {
    pub fn name(self) -> &'static str {
        match self {
            ForcingKind::None => "none",
            ForcingKind::Rotational => "rotational",
            ForcingKind::Manufactured => "manufactured",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [ForcingKind::None, ForcingKind::Rotational, ForcingKind::Manufactured].into_iter().find(|k| k.name() == s)
    }
}

/// γ levels of the sweep scenario.
pub const GAMMA_LEVELS: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Plain description of a scenario, the resolved form of a config file.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub nx: usize,
    pub ny: usize,
    pub extents: [f64; 2],
    pub bc: BoundarySpec,
    pub horizon: f64,
    pub steps: usize,
    pub params: MaterialParams,
    pub forcing: ForcingKind,
    pub forcing_amplitude: f64,
    /// Scale of the initial data relative to the scenario default.
    pub initial_amplitude: f64,
    /// Time-independent manufactured solution.
    pub steady: bool,
    pub opts: SolverOptions,
}

/// Material used by the shear and rotation scenarios.
pub fn shear_params(gamma: f64) -> MaterialParams {
    MaterialParams {
        rho: 1.0,
        mu1: 0.5,
        mu2: 0.5,
        bulk: 1.0,
        shear: 1.0,
        nu: 1.0,
        sigma_yield: 0.05,
        gamma,
        dissipation: DissipationModel::Yield,
        korn: None,
    }
}

impl ScenarioSpec {
    pub fn new(id: ScenarioId) -> Self {
        let base = ScenarioSpec {
            id,
            nx: 32,
            ny: 32,
            extents: [1.0, 1.0],
            bc: BoundarySpec::all_dirichlet(),
            horizon: 0.5,
            steps: 50,
            params: shear_params(0.0),
            forcing: ForcingKind::Rotational,
            forcing_amplitude: 2.0,
            initial_amplitude: 1.0,
            steady: false,
            opts: SolverOptions::default(),
        };
        match id {
            ScenarioId::Rest => ScenarioSpec {
                nx: 8,
                ny: 8,
                horizon: 0.1,
                steps: 10,
                forcing: ForcingKind::None,
                forcing_amplitude: 0.0,
                initial_amplitude: 0.0,
                ..base
            },
            ScenarioId::ShearYield => base,
            ScenarioId::GammaSweep => ScenarioSpec { params: shear_params(GAMMA_LEVELS[0]), ..base },
            ScenarioId::RotationObjectivity => {
                ScenarioSpec { nx: 16, ny: 16, forcing: ForcingKind::None, forcing_amplitude: 0.0, ..base }
            }
            ScenarioId::KelvinVoigtMms => ScenarioSpec {
                nx: 64,
                ny: 64,
                horizon: 1.0,
                steps: 50,
                params: MaterialParams {
                    rho: 1.0,
                    mu1: 0.1,
                    mu2: 0.1,
                    bulk: 1.0,
                    shear: 1.0,
                    nu: 1.0,
                    sigma_yield: 1.0,
                    gamma: 1e-2,
                    dissipation: DissipationModel::Zero,
                    korn: None,
                },
                forcing: ForcingKind::Manufactured,
                forcing_amplitude: 1.0,
                ..base
            },
        }
    }

    pub fn tau(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validated()?;
        if self.steps == 0 {
            return Err(Error::Config("N must be >= 1".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("T must be > 0, got {}", self.horizon)));
        }
        for (name, v) in [("forcing_amplitude", self.forcing_amplitude), ("initial_amplitude", self.initial_amplitude)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {v}")));
            }
        }
        if self.forcing == ForcingKind::Manufactured && self.id != ScenarioId::KelvinVoigtMms {
            return Err(Error::Config("manufactured forcing requires the kelvin_voigt_mms scenario".into()));
        }
        Ok(())
    }

    pub fn manufactured(&self) -> MmsSolution {
        MmsSolution::new(self.params, self.initial_amplitude, self.steady)
    }

    pub fn build(&self) -> Result<Scenario> {
        self.validate()?;
        let mesh = build_mesh(self.nx, self.ny, self.extents, self.bc)?;
        let [lx, ly] = self.extents;
        let bump = move |x: f64, y: f64| ((PI * x / lx).sin() * (PI * y / ly).sin()).powi(2);
        let p = self.params;
        let amp = self.initial_amplitude;
        let shear_e = 1.5 * p.sigma_yield / (p.shear * 2f64.sqrt());
        let initial = match self.id {
            ScenarioId::Rest | ScenarioId::ShearYield | ScenarioId::GammaSweep => State::new(
                VectorField::zeros(mesh.nodes()),
                mesh.interpolate_tensor(|x, y| SymTensor3::new(0.0, 0.0, 0.0, amp * shear_e * bump(x, y), 0.0, 0.0)),
            ),
            ScenarioId::RotationObjectivity => {
                let e = 0.5 * p.sigma_yield / (p.shear * 2f64.sqrt());
                State::new(
                    mesh.interpolate_vector(|x, y| {
                        let c = rotational(x / lx, y / ly);
                        [amp * c[0], amp * c[1]]
                    }),
                    mesh.interpolate_tensor(|x, y| SymTensor3::diag(amp * e * bump(x, y), -amp * e * bump(x, y), 0.0)),
                )
            }
            ScenarioId::KelvinVoigtMms => {
                let sol = self.manufactured();
                State::new(mesh.interpolate_vector(|x, y| sol.velocity(0.0, x, y)), mesh.interpolate_tensor(|x, y| sol.strain_field(0.0, x, y)))
            }
        };
        let forcing: Arc<dyn Forcing> = match self.forcing {
            ForcingKind::None => Arc::new(NoForcing),
            ForcingKind::Rotational => Arc::new(RotationalForcing { amplitude: self.forcing_amplitude, extents: self.extents }),
            ForcingKind::Manufactured => Arc::new(self.manufactured()),
        };
        Ok(Scenario { spec: self.clone(), mesh, params: p, horizon: self.horizon, steps: self.steps, initial, forcing, opts: self.opts })
    }
}

/// curl(sin²πx sin²πy) = (∂_y s, −∂_x s) on the unit square.
pub fn rotational(x: f64, y: f64) -> [f64; 2] {
    let (sx, cx) = (PI * x).sin_cos();
    let (sy, cy) = (PI * y).sin_cos();
    [2.0 * PI * sx * sx * sy * cy, -2.0 * PI * sy * sy * sx * cx]
}

/// Steady rotational body force.
#[derive(Clone, Copy, Debug)]
pub struct RotationalForcing {
    pub amplitude: f64,
    pub extents: [f64; 2],
}

impl Forcing for RotationalForcing {
    fn body(&self, _t: f64, x: f64, y: f64) -> [f64; 2] {
        let c = rotational(x / self.extents[0], y / self.extents[1]);
        [self.amplitude * c[0], self.amplitude * c[1]]
    }

    fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }
}

/// A ready-to-run scenario.
#[derive(Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub mesh: Mesh,
    pub params: MaterialParams,
    pub horizon: f64,
    pub steps: usize,
    pub initial: State,
    pub forcing: Arc<dyn Forcing>,
    pub opts: SolverOptions,
}

impl Scenario {
    pub fn tau(&self) -> f64 {
        self.horizon / self.steps as f64
    }
}
