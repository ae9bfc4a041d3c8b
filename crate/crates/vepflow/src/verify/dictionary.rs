//! Finite dictionary of smooth test pairs.

use std::f64::consts::PI;

use crate::discretization::Mesh;
use crate::error::{Error, Result};
use crate::functionals::{weight_construct, SmoothTensor, SmoothVector, TestPair};
use crate::potentials::{MaterialParams, DissipationModel};
use crate::tensors::SymTensor3;

/// Scaling ladder applied to every spatial shape.
pub const LAMBDA_LADDER: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

/// Velocity amplitude of the shapes at λ = 1.
const PSI_AMP: f64 = 0.5;
/// Deviatoric tensor amplitude at λ = 1, relative to the yield stress.
const CAP_REL: f64 = 0.8;

/// One-dimensional factor on [0, L].
#[derive(Clone, Copy, Debug)]
enum Factor {
    One,
    Sin(f64),
    Cos(f64),
    SinSq,
}

impl Factor {
    /// (value, derivative) at s ∈ [0, L].
    fn eval(self, s: f64, l: f64) -> (f64, f64) {
        let w = PI / l;
        match self {
            Factor::One => (1.0, 0.0),
            Factor::Sin(k) => ((k * w * s).sin(), k * w * (k * w * s).cos()),
            Factor::Cos(k) => ((k * w * s).cos(), -k * w * (k * w * s).sin()),
            Factor::SinSq => ((w * s).sin().powi(2), w * (2.0 * w * s).sin()),
        }
    }
}

/// a·f(x)g(y) per component.
#[derive(Clone, Copy, Debug)]
struct ProductVector {
    comps: [(f64, Factor, Factor); 2],
    extents: [f64; 2],
}

impl SmoothVector for ProductVector {
    fn value(&self, x: f64, y: f64) -> [f64; 2] {
        self.comps.map(|(a, f, g)| a * f.eval(x, self.extents[0]).0 * g.eval(y, self.extents[1]).0)
    }

    fn grad(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        self.comps.map(|(a, f, g)| {
            let (fx, dfx) = f.eval(x, self.extents[0]);
            let (gy, dgy) = g.eval(y, self.extents[1]);
            [a * dfx * gy, a * fx * dgy]
        })
    }
}

/// T·f(x)g(y) with a constant tensor T.
#[derive(Clone, Copy, Debug)]
struct ProductTensor {
    t: SymTensor3,
    fx: Factor,
    gy: Factor,
    extents: [f64; 2],
}

impl SmoothTensor for ProductTensor {
    fn value(&self, x: f64, y: f64) -> SymTensor3 {
        self.t * (self.fx.eval(x, self.extents[0]).0 * self.gy.eval(y, self.extents[1]).0)
    }

    fn grad(&self, x: f64, y: f64) -> [SymTensor3; 2] {
        let (f, df) = self.fx.eval(x, self.extents[0]);
        let (g, dg) = self.gy.eval(y, self.extents[1]);
        [self.t * (df * g), self.t * (f * dg)]
    }
}

/// Names of the spatial shapes, in dictionary order.
pub const SHAPES: [&str; 12] = [
    "bubble_x",
    "bubble_y",
    "vortex",
    "compress",
    "shear_flow",
    "strain_sph",
    "strain_dev",
    "strain_wave",
    "strain_shear_wave",
    "mixed_bubble",
    "mixed_vortex",
    "mixed_compress",
];

fn shape(k: usize, cap_amp: f64, sph_amp: f64, ext: [f64; 2]) -> (ProductVector, ProductTensor) {
    use Factor::*;
    let a = PSI_AMP;
    let none = ProductVector { comps: [(0.0, One, One); 2], extents: ext };
    let vx = |f: Factor, g: Factor| ProductVector { comps: [(a, f, g), (0.0, One, One)], extents: ext };
    let vortex = ProductVector { comps: [(a, SinSq, Sin(2.0)), (-a, Sin(2.0), SinSq)], extents: ext };
    let compress = ProductVector { comps: [(a, Sin(2.0), Sin(1.0)), (a, Sin(1.0), Sin(2.0))], extents: ext };
    let zero_t = ProductTensor { t: SymTensor3::ZERO, fx: One, gy: One, extents: ext };
    let tens = |t: SymTensor3, fx: Factor, gy: Factor| ProductTensor { t, fx, gy, extents: ext };
    // Unit-norm deviatoric directions.
    let xy = SymTensor3::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0) * (1.0 / 2f64.sqrt());
    let diag = SymTensor3::diag(1.0, -1.0, 0.0) * (1.0 / 2f64.sqrt());
    let diag_z = SymTensor3::diag(1.0, 0.0, -1.0) * (1.0 / 2f64.sqrt());
    let sph = SymTensor3::IDENTITY * (1.0 / 3f64.sqrt());
    match k {
        0 => (vx(Sin(1.0), Sin(1.0)), zero_t),
        1 => (ProductVector { comps: [(0.0, One, One), (a, Sin(1.0), Sin(1.0))], extents: ext }, zero_t),
        2 => (vortex, zero_t),
        3 => (compress, zero_t),
        4 => (vx(Sin(1.0), Sin(2.0)), zero_t),
        5 => (none, tens(sph * sph_amp, One, One)),
        6 => (none, tens(xy * cap_amp, One, One)),
        7 => (none, tens(diag * cap_amp, Cos(1.0), Cos(1.0))),
        8 => (none, tens(xy * cap_amp, Sin(2.0), One)),
        9 => (vx(Sin(1.0), Sin(1.0)), tens(xy * cap_amp, Sin(1.0), Sin(1.0))),
        10 => (vortex, tens(sph * sph_amp, Cos(1.0), One)),
        11 => (compress, tens(diag_z * cap_amp, One, Cos(2.0))),
        _ => unreachable!("shape index out of range"),
    }
}

/// A dictionary entry: a shape, a sign and a ladder level.
#[derive(Clone, Debug)]
pub struct DictEntry {
    pub id: String,
    pub pair: TestPair,
    pub lambda: f64,
    /// K̃ of the pair.
    pub weight: f64,
    /// 𝒫(dev Ψ) < ∞.
    pub p_finite: bool,
}

impl DictEntry {
    /// τK̃ ≤ 1 and 𝒫(dev Ψ) finite.
    pub fn admissible(&self, tau: f64) -> bool {
        self.p_finite && tau * self.weight <= 1.0
    }
}

/// Shapes × signs × ladder levels.
#[derive(Clone, Debug)]
pub struct TestDictionary {
    pub entries: Vec<DictEntry>,
}

impl TestDictionary {
    /// The default 12 × 2 × 4 dictionary; `p.korn` must be set.
    pub fn new(mesh: &Mesh, p: &MaterialParams) -> Result<Self> {
        Self::with_shapes(mesh, p, SHAPES.len())
    }

    /// Dictionary built from the first `shapes` spatial shapes.
    pub fn with_shapes(mesh: &Mesh, p: &MaterialParams, shapes: usize) -> Result<Self> {
        if shapes == 0 || shapes > SHAPES.len() {
            return Err(Error::Config(format!("dictionary size must be in 1..={} shapes, got {shapes}", SHAPES.len())));
        }
        // Deviatoric amplitude stays inside the yield ball; other models use the same scale.
        let cap_amp = CAP_REL
            * match p.dissipation {
                DissipationModel::Yield => p.sigma_yield,
                _ => p.sigma_yield.min(1.0),
            };
        let ext = [mesh.lx, mesh.ly];
        let mut entries = Vec::with_capacity(shapes * 2 * LAMBDA_LADDER.len());
        for (k, name) in SHAPES.iter().enumerate().take(shapes) {
            let (v, t) = shape(k, cap_amp, cap_amp, ext);
            let base = TestPair::from_smooth(mesh, &v, &t, name)?;
            for sign in [1.0, -1.0] {
                for lambda in LAMBDA_LADDER {
                    let s = sign * lambda;
                    let mut pair = base.scaled(s);
                    let id = format!("{name}{}{lambda}", if sign > 0.0 { "+" } else { "-" });
                    pair.label = id.clone();
                    let weight = weight_construct(&pair.norms, p)?;
                    let p_finite = pair.p_term(mesh, p).is_finite();
                    entries.push(DictEntry { id, pair, lambda, weight, p_finite });
                }
            }
        }
        Ok(TestDictionary { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries usable at step size τ.
    pub fn admissible(&self, tau: f64) -> Result<Vec<&DictEntry>> {
        let out: Vec<&DictEntry> = self.entries.iter().filter(|e| e.admissible(tau)).collect();
        if out.is_empty() {
            return Err(Error::Config(format!("no dictionary entry satisfies τK̃ ≤ 1 at τ = {tau}; reduce τ")));
        }
        Ok(out)
    }

    pub fn pairs(&self) -> Vec<TestPair> {
        self.entries.iter().map(|e| e.pair.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_mesh, BoundaryKind, BoundarySpec};
    use crate::stepper::scenarios::shear_params;

    #[test]
    fn factors_differentiate_correctly() {
        let h = 1e-6;
        for f in [Factor::One, Factor::Sin(2.0), Factor::Cos(1.0), Factor::SinSq] {
            for s in [0.1, 0.45, 0.8] {
                let fd = (f.eval(s + h, 1.3).0 - f.eval(s - h, 1.3).0) / (2.0 * h);
                assert!((fd - f.eval(s, 1.3).1).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn default_dictionary_is_admissible_on_shear_scenario() {
        let m = build_mesh(8, 8, [1.0, 1.0], BoundarySpec::all_dirichlet()).unwrap();
        let p = shear_params(0.0).with_korn(0.2);
        let d = TestDictionary::new(&m, &p).unwrap();
        assert_eq!(d.len(), 96);
        assert!(d.entries.iter().all(|e| e.p_finite));
        assert_eq!(d.admissible(0.01).unwrap().len(), 96);
        assert!(d.admissible(1e6).is_err());
    }

    #[test]
    fn ladder_admissibility_is_monotone() {
        let m = build_mesh(6, 6, [1.0, 1.0], BoundarySpec::all_dirichlet()).unwrap();
        let p = shear_params(0.0).with_korn(0.05);
        let d = TestDictionary::new(&m, &p).unwrap();
        for tau in [0.01, 0.05, 0.1, 0.3] {
            for chunk in d.entries.chunks(LAMBDA_LADDER.len()) {
                for w in chunk.windows(2) {
                    assert!(w[1].weight <= w[0].weight);
                    assert!(!w[0].admissible(tau) || w[1].admissible(tau));
                }
            }
        }
    }

    #[test]
    fn entries_respect_slip_boundaries() {
        let bc = BoundarySpec { left: BoundaryKind::Slip, right: BoundaryKind::Slip, ..BoundarySpec::all_dirichlet() };
        let m = build_mesh(6, 4, [1.5, 1.0], bc).unwrap();
        let p = shear_params(0.0).with_korn(0.1);
        let d = TestDictionary::new(&m, &p).unwrap();
        for e in &d.entries {
            assert!(m.is_admissible(&e.pair.psi, 1e-12), "{}", e.id);
        }
    }
}
