//! Structured Q1 discretization on a rectangle.
//!
//! Nodes are numbered `i = iy·(nx+1) + ix`. Velocity fields store two
//! components per node, tensor fields six (see [`SymTensor3`]).

mod assembly;
mod korn;
mod sparse;

pub use assembly::{assemble, convection_operator, rotation_operator, transport_operator, OperatorSet};
pub use korn::{korn_constant, korn_eigenvalue, KORN_SAFETY};
pub use sparse::{cg, CgOutcome, SparseOperator};

use crate::error::{Error, Result};
use crate::tensors::{SymTensor3, Tensor3};

/// Boundary condition on one side of the rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    /// No-slip: v = 0.
    Dirichlet,
    /// Perfect slip: v·n = 0, tangential traction free.
    Slip,
}

impl BoundaryKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dirichlet" | "D" => Some(BoundaryKind::Dirichlet),
            "slip" | "N" => Some(BoundaryKind::Slip),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::Slip => "slip",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }

    /// Velocity component that the slip condition removes on this side.
    pub fn normal_component(self) -> usize {
        match self {
            Side::Left | Side::Right => 0,
            Side::Bottom | Side::Top => 1,
        }
    }
}

/// Tag per side; `rigid_motion_filter` admits an all-slip boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundarySpec {
    pub left: BoundaryKind,
    pub right: BoundaryKind,
    pub bottom: BoundaryKind,
    pub top: BoundaryKind,
    pub rigid_motion_filter: bool,
}

impl BoundarySpec {
    pub fn uniform(kind: BoundaryKind) -> Self {
        BoundarySpec { left: kind, right: kind, bottom: kind, top: kind, rigid_motion_filter: false }
    }

    pub fn all_dirichlet() -> Self {
        Self::uniform(BoundaryKind::Dirichlet)
    }

    pub fn side(&self, s: Side) -> BoundaryKind {
        match s {
            Side::Left => self.left,
            Side::Right => self.right,
            Side::Bottom => self.bottom,
            Side::Top => self.top,
        }
    }

    pub fn has_dirichlet(&self) -> bool {
        Side::ALL.iter().any(|s| self.side(*s) == BoundaryKind::Dirichlet)
    }
}

/// Uniform quadrilateral mesh of `[0, lx] × [0, ly]`.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub hx: f64,
    pub hy: f64,
    pub bc: BoundarySpec,
    /// `fixed[2i + d]` is true when velocity component d at node i is constrained.
    fixed: Vec<bool>,
    /// Sides each node lies on.
    sides: Vec<Vec<Side>>,
    lumped: Vec<f64>,
}

/// Shape functions and their physical derivatives at one point of an element.
#[derive(Clone, Copy, Debug)]
pub struct Basis {
    pub n: [f64; 4],
    pub dx: [f64; 4],
    pub dy: [f64; 4],
}

/// A quadrature point with its basis and physical weight.
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint {
    pub s: f64,
    pub t: f64,
    pub basis: Basis,
    pub weight: f64,
}

/// Gauss–Legendre nodes and weights on [0, 1] (weights sum to 1).
pub fn gauss_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (p, w): (Vec<f64>, Vec<f64>) = match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (0.6f64).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let r = (6.0f64 / 5.0).sqrt() * 2.0 / 7.0;
            let a = (3.0 / 7.0 - r).sqrt();
            let b = (3.0 / 7.0 + r).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        _ => {
            let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
            let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
            let wa = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
            let wb = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
            (vec![-b, -a, 0.0, a, b], vec![wb, wa, 128.0 / 225.0, wa, wb])
        }
    };
    (p.iter().map(|x| 0.5 * (x + 1.0)).collect(), w.iter().map(|x| 0.5 * x).collect())
}

impl Mesh {
    pub fn nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node_index(&self, ix: usize, iy: usize) -> usize {
        iy * (self.nx + 1) + ix
    }

    pub fn node_xy(&self, i: usize) -> [f64; 2] {
        let ix = i % (self.nx + 1);
        let iy = i / (self.nx + 1);
        [ix as f64 * self.hx, iy as f64 * self.hy]
    }

    /// Nodes of element `e` counter-clockwise from its lower-left corner.
    pub fn element_nodes(&self, e: usize) -> [usize; 4] {
        let ex = e % self.nx;
        let ey = e / self.nx;
        let n0 = self.node_index(ex, ey);
        let n3 = self.node_index(ex, ey + 1);
        [n0, n0 + 1, n3 + 1, n3]
    }

    pub fn element_origin(&self, e: usize) -> [f64; 2] {
        [(e % self.nx) as f64 * self.hx, (e / self.nx) as f64 * self.hy]
    }

    /// Basis at local coordinates (s, t) ∈ [0, 1]².
    pub fn basis(&self, s: f64, t: f64) -> Basis {
        let n = [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t];
        let ds = [-(1.0 - t), 1.0 - t, t, -t];
        let dt = [-(1.0 - s), -s, s, 1.0 - s];
        Basis {
            n,
            dx: ds.map(|d| d / self.hx),
            dy: dt.map(|d| d / self.hy),
        }
    }

    /// Tensor-product Gauss rule with `n` points per direction.
    pub fn quadrature(&self, n: usize) -> Vec<QuadPoint> {
        let (p, w) = gauss_1d(n);
        let area = self.hx * self.hy;
        let mut out = Vec::with_capacity(n * n);
        for (j, t) in p.iter().enumerate() {
            for (i, s) in p.iter().enumerate() {
                out.push(QuadPoint { s: *s, t: *t, basis: self.basis(*s, *t), weight: area * w[i] * w[j] });
            }
        }
        out
    }

    /// The 2×2 Gauss rule used by every bilinear form.
    pub fn gauss2(&self) -> Vec<QuadPoint> {
        self.quadrature(2)
    }

    /// Row-sum lumped mass per node.
    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.fixed[dof]
    }

    pub fn fixed_dofs(&self) -> &[bool] {
        &self.fixed
    }

    pub fn node_sides(&self, i: usize) -> &[Side] {
        &self.sides[i]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        !self.sides[i].is_empty()
    }

    /// Outward unit normal at a boundary node (corner normals are averaged).
    pub fn normal(&self, i: usize) -> Option<[f64; 2]> {
        let s = &self.sides[i];
        if s.is_empty() {
            return None;
        }
        let mut n = [0.0, 0.0];
        for side in s {
            let m = side.normal();
            n[0] += m[0];
            n[1] += m[1];
        }
        let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
        Some([n[0] / len, n[1] / len])
    }

    /// Zero the constrained velocity components.
    pub fn constrain(&self, v: &mut VectorField) {
        for (x, f) in v.data.iter_mut().zip(&self.fixed) {
            if *f {
                *x = 0.0;
            }
        }
    }

    /// Whether `v` satisfies the velocity constraints to `tol`.
    pub fn is_admissible(&self, v: &VectorField, tol: f64) -> bool {
        v.data.iter().zip(&self.fixed).all(|(x, f)| !f || x.abs() <= tol)
    }

    pub fn check_vector(&self, v: &VectorField) -> Result<()> {
        if v.data.len() != 2 * self.nodes() {
            return Err(Error::Dimension(format!("vector field has {} entries, mesh needs {}", v.data.len(), 2 * self.nodes())));
        }
        Ok(())
    }

    pub fn check_tensor(&self, e: &TensorField) -> Result<()> {
        if e.data.len() != 6 * self.nodes() {
            return Err(Error::Dimension(format!("tensor field has {} entries, mesh needs {}", e.data.len(), 6 * self.nodes())));
        }
        Ok(())
    }

    /// Nodal interpolant of a velocity function, with constraints applied.
    pub fn interpolate_vector(&self, f: impl Fn(f64, f64) -> [f64; 2]) -> VectorField {
        let mut v = VectorField::zeros(self.nodes());
        for i in 0..self.nodes() {
            let [x, y] = self.node_xy(i);
            v.set(i, f(x, y));
        }
        self.constrain(&mut v);
        v
    }

    pub fn interpolate_tensor(&self, f: impl Fn(f64, f64) -> SymTensor3) -> TensorField {
        let mut e = TensorField::zeros(self.nodes());
        for i in 0..self.nodes() {
            let [x, y] = self.node_xy(i);
            e.set(i, f(x, y));
        }
        e
    }
}

/// Build a mesh of `nx × ny` cells on `[0, lx] × [0, ly]`.
pub fn build_mesh(nx: usize, ny: usize, extents: [f64; 2], bc: BoundarySpec) -> Result<Mesh> {
    if nx < 2 || ny < 2 {
        return Err(Error::Config(format!("mesh needs nx, ny >= 2, got {nx} x {ny}")));
    }
    let [lx, ly] = extents;
    if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
        return Err(Error::Config(format!("domain extents must be positive, got {lx} x {ly}")));
    }
    if !bc.has_dirichlet() && !bc.rigid_motion_filter {
        return Err(Error::Config(
            "boundary has no Dirichlet part; enable the rigid-motion filter to accept an all-slip boundary".into(),
        ));
    }
    let n = (nx + 1) * (ny + 1);
    let mut sides = vec![Vec::new(); n];
    let mut fixed = vec![false; 2 * n];
    for iy in 0..=ny {
        for ix in 0..=nx {
            let i = iy * (nx + 1) + ix;
            let on = [(ix == 0, Side::Left), (ix == nx, Side::Right), (iy == 0, Side::Bottom), (iy == ny, Side::Top)];
            for (hit, side) in on {
                if !hit {
                    continue;
                }
                sides[i].push(side);
                match bc.side(side) {
                    BoundaryKind::Dirichlet => {
                        fixed[2 * i] = true;
                        fixed[2 * i + 1] = true;
                    }
                    BoundaryKind::Slip => fixed[2 * i + side.normal_component()] = true,
                }
            }
        }
    }
    let hx = lx / nx as f64;
    let hy = ly / ny as f64;
    let mut lumped = vec![0.0; n];
    let quarter = 0.25 * hx * hy;
    for ey in 0..ny {
        for ex in 0..nx {
            let n0 = ey * (nx + 1) + ex;
            let n3 = n0 + nx + 1;
            for k in [n0, n0 + 1, n3 + 1, n3] {
                lumped[k] += quarter;
            }
        }
    }
    Ok(Mesh { nx, ny, lx, ly, hx, hy, bc, fixed, sides, lumped })
}

/// Q1 velocity field (two components per node).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub data: Vec<f64>,
}

impl VectorField {
    pub fn zeros(nodes: usize) -> Self {
        VectorField { data: vec![0.0; 2 * nodes] }
    }

    pub fn nodes(&self) -> usize {
        self.data.len() / 2
    }

    pub fn get(&self, i: usize) -> [f64; 2] {
        [self.data[2 * i], self.data[2 * i + 1]]
    }

    pub fn set(&mut self, i: usize, v: [f64; 2]) {
        self.data[2 * i] = v[0];
        self.data[2 * i + 1] = v[1];
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, x| a.max(x.abs()))
    }

    pub fn axpy(&mut self, a: f64, x: &VectorField) {
        self.data.iter_mut().zip(&x.data).for_each(|(y, x)| *y += a * x);
    }

    pub fn scaled(&self, a: f64) -> VectorField {
        VectorField { data: self.data.iter().map(|x| a * x).collect() }
    }

    /// Value and gradient at a point of element `nodes`.
    pub fn eval(&self, nodes: &[usize; 4], b: &Basis) -> VelocityPoint {
        let mut v = [0.0; 2];
        let mut g = [[0.0; 3]; 3];
        for a in 0..4 {
            let [vx, vy] = self.get(nodes[a]);
            v[0] += b.n[a] * vx;
            v[1] += b.n[a] * vy;
            g[0][0] += b.dx[a] * vx;
            g[0][1] += b.dy[a] * vx;
            g[1][0] += b.dx[a] * vy;
            g[1][1] += b.dy[a] * vy;
        }
        VelocityPoint { v, grad: Tensor3::new(g) }
    }
}

/// Q1 symmetric-tensor field (six components per node).
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    pub data: Vec<f64>,
}

impl TensorField {
    pub fn zeros(nodes: usize) -> Self {
        TensorField { data: vec![0.0; 6 * nodes] }
    }

    pub fn nodes(&self) -> usize {
        self.data.len() / 6
    }

    pub fn get(&self, i: usize) -> SymTensor3 {
        let d = &self.data[6 * i..6 * i + 6];
        SymTensor3::new(d[0], d[1], d[2], d[3], d[4], d[5])
    }

    pub fn set(&mut self, i: usize, t: SymTensor3) {
        self.data[6 * i..6 * i + 6].copy_from_slice(&t.to_array());
    }

    pub fn map(&self, f: impl Fn(SymTensor3) -> SymTensor3) -> TensorField {
        let mut out = TensorField::zeros(self.nodes());
        for i in 0..self.nodes() {
            out.set(i, f(self.get(i)));
        }
        out
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.nodes()).map(|i| self.get(i).norm()).fold(0.0, f64::max)
    }

    pub fn axpy(&mut self, a: f64, x: &TensorField) {
        self.data.iter_mut().zip(&x.data).for_each(|(y, x)| *y += a * x);
    }

    pub fn scaled(&self, a: f64) -> TensorField {
        TensorField { data: self.data.iter().map(|x| a * x).collect() }
    }

    /// Value and first derivatives at a point of element `nodes`.
    pub fn eval(&self, nodes: &[usize; 4], b: &Basis) -> TensorPoint {
        let mut p = TensorPoint::default();
        for a in 0..4 {
            let t = self.get(nodes[a]);
            p.value += t * b.n[a];
            p.dx += t * b.dx[a];
            p.dy += t * b.dy[a];
        }
        p
    }
}

/// Interpolated velocity and its gradient, `grad.m[i][j] = ∂_j v_i`.
#[derive(Clone, Copy, Debug, Default)]
pub struct VelocityPoint {
    pub v: [f64; 2],
    pub grad: Tensor3,
}

impl VelocityPoint {
    pub fn div(&self) -> f64 {
        self.grad.m[0][0] + self.grad.m[1][1]
    }
}

/// Interpolated tensor with its x and y derivatives.
#[derive(Clone, Copy, Debug, Default)]
pub struct TensorPoint {
    pub value: SymTensor3,
    pub dx: SymTensor3,
    pub dy: SymTensor3,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_dirichlet_mesh() {
        let m = build_mesh(2, 2, [1.0, 1.0], BoundarySpec::all_dirichlet()).unwrap();
        assert_eq!(m.nodes(), 9);
        let boundary = (0..9).filter(|&i| m.is_boundary(i)).count();
        assert_eq!(boundary, 8);
        let fixed_nodes = (0..9).filter(|&i| m.is_fixed(2 * i) && m.is_fixed(2 * i + 1)).count();
        assert_eq!(fixed_nodes, 8);
        assert!(!m.is_fixed(8) && !m.is_fixed(9));
    }

    #[test]
    fn mixed_mesh_tags_and_normals() {
        let bc = BoundarySpec {
            left: BoundaryKind::Dirichlet,
            right: BoundaryKind::Dirichlet,
            bottom: BoundaryKind::Slip,
            top: BoundaryKind::Slip,
            rigid_motion_filter: false,
        };
        let m = build_mesh(4, 4, [1.0, 1.0], bc).unwrap();
        for ix in 1..4 {
            let b = m.node_index(ix, 0);
            let t = m.node_index(ix, 4);
            assert_eq!(m.normal(b).unwrap(), [0.0, -1.0]);
            assert_eq!(m.normal(t).unwrap(), [0.0, 1.0]);
            assert!(!m.is_fixed(2 * b) && m.is_fixed(2 * b + 1));
            assert!(!m.is_fixed(2 * t) && m.is_fixed(2 * t + 1));
        }
        let corner = m.node_index(0, 0);
        assert!(m.is_fixed(2 * corner) && m.is_fixed(2 * corner + 1));
        let side = m.node_index(0, 2);
        assert_eq!(m.normal(side).unwrap(), [-1.0, 0.0]);
    }

    #[test]
    fn rejects_bad_meshes() {
        assert!(build_mesh(1, 4, [1.0, 1.0], BoundarySpec::all_dirichlet()).is_err());
        assert!(build_mesh(4, 4, [0.0, 1.0], BoundarySpec::all_dirichlet()).is_err());
        let slip = BoundarySpec::uniform(BoundaryKind::Slip);
        assert!(build_mesh(4, 4, [1.0, 1.0], slip).is_err());
        let filtered = BoundarySpec { rigid_motion_filter: true, ..slip };
        assert!(build_mesh(4, 4, [1.0, 1.0], filtered).is_ok());
    }

    #[test]
    fn gauss_rules_integrate_polynomials() {
        for n in 1..=5 {
            let (p, w) = gauss_1d(n);
            let deg = 2 * n - 1;
            for k in 0..=deg {
                let q: f64 = p.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn lumped_mass_partitions_area() {
        let m = build_mesh(3, 5, [2.0, 1.5], BoundarySpec::all_dirichlet()).unwrap();
        let total: f64 = m.lumped_mass().iter().sum();
        assert!((total - 3.0).abs() < 1e-14);
    }

    #[test]
    fn interpolation_reproduces_bilinear_gradients() {
        let m = build_mesh(3, 3, [1.0, 2.0], BoundarySpec::all_dirichlet()).unwrap();
        let e = m.interpolate_tensor(|x, y| SymTensor3::new(x * y, 2.0 * x, y, 1.0, 0.0, x - y));
        let nodes = m.element_nodes(4);
        let [x0, y0] = m.element_origin(4);
        let b = m.basis(0.3, 0.7);
        let p = e.eval(&nodes, &b);
        let (x, y) = (x0 + 0.3 * m.hx, y0 + 0.7 * m.hy);
        assert!((p.value.xx - x * y).abs() < 1e-14);
        assert!((p.dx.xx - y).abs() < 1e-13);
        assert!((p.dy.xx - x).abs() < 1e-13);
        assert!((p.dx.yz - 1.0).abs() < 1e-13);
    }
}
