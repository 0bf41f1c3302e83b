//! The hybrid time stepper: mechanical substeps treated semi-implicitly in
//! small increments, alternated with a Rothe step for the induction
//! equation written in the stream-function (magnetic potential) variable.
//!
//! Layout conventions: density and pressure at cell centers, velocity on
//! faces, magnetic potential psi at nodes with psi = 0 on the boundary, so
//! B = grad_perp(psi) is divergence-free and tangential at the walls by
//! construction. The current curl B and the electromotive terms live at
//! the nodes as out-of-plane scalars.
//!
//! Energy bookkeeping: every implicit stage is tested against its own
//! end-of-step unknown, so each solve contributes an exactly quantified
//! dissipation plus a nonpositive Backward-Euler remainder. The tallies
//! returned to the ledger reuse the identical quadratic forms, which is
//! what keeps the per-step slack at round-off for the shipped presets.

use crate::error::{Result, SimError};
use crate::field::{Loc, ScalarField, VectorField};
use crate::geometry::{
    advance_flow_map, cell_fraction, extract_rigid_velocity, penalty_h, signed_distance,
    validate_bodies, RigidBodyState,
};
use crate::grid::Grid;
use crate::ledger;
use crate::ops;
use crate::solver::pcg;

#[derive(Debug, Clone)]
pub struct SchemeParams {
    pub nu: f64,
    pub lambda: f64,
    pub a: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub mu: f64,
    pub dt: f64,
    pub m: f64,
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub inner_substeps: usize,
    /// Hold the velocity fixed (pure induction dynamics); used by the
    /// resistive-decay preset.
    pub pin_velocity: bool,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            nu: 0.1,
            lambda: 0.0,
            a: 1.0,
            gamma: 2.0,
            sigma: 1.0,
            mu: 1.0,
            dt: 1e-3,
            m: 0.0,
            eps: 0.0,
            alpha: 0.0,
            beta: 5.0,
            delta: 0.1,
            picard_tol: 1e-10,
            picard_max: 50,
            inner_substeps: 1,
            pin_velocity: false,
        }
    }
}

impl SchemeParams {
    /// Admissibility of the coefficient set. Each message quotes the
    /// violated condition verbatim so a failed validation is
    /// self-explanatory.
    pub fn validate_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.nu > 0.0) {
            errs.push(format!("nu = {} violates: nu > 0", self.nu));
        }
        if !(self.nu + self.lambda >= 0.0) {
            errs.push(format!(
                "nu = {}, lambda = {} violates: nu + lambda >= 0",
                self.nu, self.lambda
            ));
        }
        if !(self.a > 0.0) {
            errs.push(format!("a = {} violates: a > 0", self.a));
        }
        if !(self.gamma > 1.5) {
            errs.push(format!("gamma = {} violates: gamma > 3/2", self.gamma));
        }
        if !(self.sigma > 0.0) {
            errs.push(format!("sigma = {} violates: sigma > 0", self.sigma));
        }
        if !(self.mu > 0.0) {
            errs.push(format!("mu = {} violates: mu > 0", self.mu));
        }
        if !(self.beta > self.gamma.max(4.0)) {
            errs.push(format!(
                "beta = {} violates: beta > max{{4, gamma}}",
                self.beta
            ));
        }
        if !(self.dt > 0.0) {
            errs.push(format!("dt = {} violates: dt > 0", self.dt));
        }
        if !(self.m >= 0.0) {
            errs.push(format!("m = {} violates: m >= 0", self.m));
        }
        if !(self.eps >= 0.0) {
            errs.push(format!("eps = {} violates: eps >= 0", self.eps));
        }
        if !(self.alpha >= 0.0) {
            errs.push(format!("alpha = {} violates: alpha >= 0", self.alpha));
        }
        if self.inner_substeps == 0 {
            errs.push("inner_substeps must be at least 1".into());
        }
        errs
    }

    pub fn dt_inner(&self) -> f64 {
        self.dt / self.inner_substeps as f64
    }
}

#[derive(Clone)]
pub struct MechanicalState {
    pub rho: ScalarField,
    pub u: VectorField,
    pub bodies: Vec<RigidBodyState>,
    pub time: f64,
}

#[derive(Clone)]
pub struct MagneticState {
    pub psi: ScalarField,
    pub k: usize,
}

impl MagneticState {
    pub fn new(psi: ScalarField, k: usize) -> Self {
        assert_eq!(psi.loc, Loc::Node);
        MagneticState { psi, k }
    }

    pub fn b(&self) -> VectorField {
        ops::grad_perp(&self.psi)
    }
}

/// Isentropic pressure p = a rho^gamma plus nothing else; callers add the
/// artificial part themselves.
pub fn pressure(rho: &ScalarField, a: f64, gamma: f64) -> Result<ScalarField> {
    let min = rho.min();
    if min < 0.0 {
        return Err(SimError::Invariant(format!(
            "pressure law needs rho >= 0, found min rho = {min:e}"
        )));
    }
    let mut p = ScalarField::zeros(rho.grid, rho.loc);
    for (o, r) in p.data.iter_mut().zip(rho.data.iter()) {
        *o = a * r.powf(gamma);
    }
    Ok(p)
}

/// Penalized viscosity pair (nu + m H(chi), lambda + m H(chi)) at cells.
pub fn variable_viscosity(
    chi: &ScalarField,
    nu: f64,
    lambda: f64,
    m: f64,
) -> (ScalarField, ScalarField) {
    let mut nuf = ScalarField::zeros(chi.grid, chi.loc);
    let mut lamf = ScalarField::zeros(chi.grid, chi.loc);
    for k in 0..chi.data.len() {
        let bump = m * penalty_h(chi.data[k]);
        nuf.data[k] = nu + bump;
        lamf.data[k] = lambda + bump;
    }
    (nuf, lamf)
}

pub fn chi_cells(grid: Grid, bodies: &[RigidBodyState]) -> ScalarField {
    if bodies.is_empty() {
        return ScalarField::constant(grid, Loc::Center, f64::NEG_INFINITY);
    }
    ScalarField::from_fn(grid, Loc::Center, |p| signed_distance(bodies, p))
}

pub fn chi_nodes(grid: Grid, bodies: &[RigidBodyState]) -> ScalarField {
    if bodies.is_empty() {
        return ScalarField::constant(grid, Loc::Node, f64::NEG_INFINITY);
    }
    ScalarField::from_fn(grid, Loc::Node, |p| signed_distance(bodies, p))
}

/// Minus the 5-point Laplacian on nodes (interior rows only; boundary rows
/// return zero, consistent with the Dirichlet psi = 0 convention).
pub fn lap_node(f: &ScalarField) -> ScalarField {
    assert_eq!(f.loc, Loc::Node);
    let g = f.grid;
    let mut out = ScalarField::zeros(g, Loc::Node);
    let (ax, ay) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    for j in 1..g.ny {
        for i in 1..g.nx {
            let c = f.data[g.inode(i, j)];
            out.data[g.inode(i, j)] = ax
                * (2.0 * c - f.data[g.inode(i - 1, j)] - f.data[g.inode(i + 1, j)])
                + ay * (2.0 * c - f.data[g.inode(i, j - 1)] - f.data[g.inode(i, j + 1)]);
        }
    }
    out
}

/// Lorentz force (1/mu) curl B x B interpolated onto the faces. In 2D the
/// curl is the out-of-plane scalar w = -lap(psi), and the force density is
/// (w/mu) (-B2, B1).
pub fn lorentz_force(mag: &MagneticState, mu: f64) -> VectorField {
    let g = mag.psi.grid;
    let b = mag.b();
    let w = lap_node(&mag.psi);
    let mut f = VectorField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let wf = 0.5 * (w.data[g.inode(i, j)] + w.data[g.inode(i, j + 1)]);
            let b2 = 0.25
                * (b.v[g.iv(i - 1, j)]
                    + b.v[g.iv(i, j)]
                    + b.v[g.iv(i - 1, j + 1)]
                    + b.v[g.iv(i, j + 1)]);
            f.u[g.iu(i, j)] = -wf * b2 / mu;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let wf = 0.5 * (w.data[g.inode(i, j)] + w.data[g.inode(i + 1, j)]);
            let b1 = 0.25
                * (b.u[g.iu(i, j - 1)]
                    + b.u[g.iu(i, j)]
                    + b.u[g.iu(i + 1, j - 1)]
                    + b.u[g.iu(i + 1, j)]);
            f.v[g.iv(i, j)] = wf * b1 / mu;
        }
    }
    f
}

/// Node shear with no-slip ghost values at the walls (wall velocity zero,
/// mirror reflection at half a cell). This is the variant entering the
/// viscous bilinear form; the one in `ops` extrapolates instead and is for
/// diagnostics only.
fn shear_noslip(u: &VectorField, i: usize, j: usize) -> f64 {
    let g = u.grid;
    let du1dy = if j == 0 {
        2.0 * u.u[g.iu(i, 0)] / g.dy
    } else if j == g.ny {
        -2.0 * u.u[g.iu(i, g.ny - 1)] / g.dy
    } else {
        (u.u[g.iu(i, j)] - u.u[g.iu(i, j - 1)]) / g.dy
    };
    let du2dx = if i == 0 {
        2.0 * u.v[g.iv(0, j)] / g.dx
    } else if i == g.nx {
        -2.0 * u.v[g.iv(g.nx - 1, j)] / g.dx
    } else {
        (u.v[g.iv(i, j)] - u.v[g.iv(i - 1, j)]) / g.dx
    };
    0.5 * (du1dy + du2dx)
}

/// The viscous bilinear form a(u, v) = sum_cells dA [2 nu (D11 D11 + D22 D22)
/// + lambda div div] + sum_nodes dA 4 nu_n s s, with cellwise penalized
/// coefficients. Symmetric and positive semidefinite for nu + lambda >= 0.
pub struct ViscousOp {
    pub nu_c: ScalarField,
    pub lam_c: ScalarField,
    pub nu_n: ScalarField,
}

impl ViscousOp {
    pub fn build(grid: Grid, bodies: &[RigidBodyState], p: &SchemeParams) -> Self {
        let (nu_c, lam_c) = variable_viscosity(&chi_cells(grid, bodies), p.nu, p.lambda, p.m);
        let chin = chi_nodes(grid, bodies);
        let mut nu_n = ScalarField::zeros(grid, Loc::Node);
        for k in 0..nu_n.data.len() {
            nu_n.data[k] = p.nu + p.m * penalty_h(chin.data[k]);
        }
        ViscousOp { nu_c, lam_c, nu_n }
    }

    /// Gradient of (1/2) a(u, u): the scatter of the form against every
    /// face unknown. Boundary faces are left untouched (pinned outside).
    pub fn apply(&self, u: &VectorField) -> VectorField {
        let g = u.grid;
        let da = g.cell_area();
        let mut out = VectorField::zeros(g);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = g.ic(i, j);
                let d11 = (u.u[g.iu(i + 1, j)] - u.u[g.iu(i, j)]) / g.dx;
                let d22 = (u.v[g.iv(i, j + 1)] - u.v[g.iv(i, j)]) / g.dy;
                let dv = d11 + d22;
                let cu = da * (2.0 * self.nu_c.data[c] * d11 + self.lam_c.data[c] * dv) / g.dx;
                out.u[g.iu(i + 1, j)] += cu;
                out.u[g.iu(i, j)] -= cu;
                let cv = da * (2.0 * self.nu_c.data[c] * d22 + self.lam_c.data[c] * dv) / g.dy;
                out.v[g.iv(i, j + 1)] += cv;
                out.v[g.iv(i, j)] -= cv;
            }
        }
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                let s = shear_noslip(u, i, j);
                if s == 0.0 {
                    continue;
                }
                let w = da * 4.0 * self.nu_n.data[g.inode(i, j)] * s;
                if j == 0 {
                    out.u[g.iu(i, 0)] += w / g.dy;
                } else if j == g.ny {
                    out.u[g.iu(i, g.ny - 1)] -= w / g.dy;
                } else {
                    out.u[g.iu(i, j)] += 0.5 * w / g.dy;
                    out.u[g.iu(i, j - 1)] -= 0.5 * w / g.dy;
                }
                if i == 0 {
                    out.v[g.iv(0, j)] += w / g.dx;
                } else if i == g.nx {
                    out.v[g.iv(g.nx - 1, j)] -= w / g.dx;
                } else {
                    out.v[g.iv(i, j)] += 0.5 * w / g.dx;
                    out.v[g.iv(i - 1, j)] -= 0.5 * w / g.dx;
                }
            }
        }
        out
    }

    /// a(u, u); this is the discrete viscous dissipation.
    pub fn energy(&self, u: &VectorField) -> f64 {
        let g = u.grid;
        let da = g.cell_area();
        let mut e = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = g.ic(i, j);
                let d11 = (u.u[g.iu(i + 1, j)] - u.u[g.iu(i, j)]) / g.dx;
                let d22 = (u.v[g.iv(i, j + 1)] - u.v[g.iv(i, j)]) / g.dy;
                e += da
                    * (2.0 * self.nu_c.data[c] * (d11 * d11 + d22 * d22)
                        + self.lam_c.data[c] * (d11 + d22) * (d11 + d22));
            }
        }
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                let s = shear_noslip(u, i, j);
                e += da * 4.0 * self.nu_n.data[g.inode(i, j)] * s * s;
            }
        }
        e
    }

    /// Exact diagonal of `apply`, for Jacobi preconditioning.
    pub fn diagonal(&self, out: &mut VectorField) {
        let g = self.nu_c.grid;
        let da = g.cell_area();
        for j in 0..g.ny {
            for i in 1..g.nx {
                let cl = g.ic(i - 1, j);
                let cr = g.ic(i, j);
                let mut d = da
                    * ((2.0 * self.nu_c.data[cl] + self.lam_c.data[cl])
                        + (2.0 * self.nu_c.data[cr] + self.lam_c.data[cr]))
                    / (g.dx * g.dx);
                for &jn in &[j, j + 1] {
                    let wall = jn == 0 || jn == g.ny;
                    let coeff = if wall { 4.0 } else { 1.0 };
                    d += da * coeff * self.nu_n.data[g.inode(i, jn)] / (g.dy * g.dy);
                }
                out.u[g.iu(i, j)] = d;
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                let cb = g.ic(i, j - 1);
                let ct = g.ic(i, j);
                let mut d = da
                    * ((2.0 * self.nu_c.data[cb] + self.lam_c.data[cb])
                        + (2.0 * self.nu_c.data[ct] + self.lam_c.data[ct]))
                    / (g.dy * g.dy);
                for &inn in &[i, i + 1] {
                    let wall = inn == 0 || inn == g.nx;
                    let coeff = if wall { 4.0 } else { 1.0 };
                    d += da * coeff * self.nu_n.data[g.inode(inn, j)] / (g.dx * g.dx);
                }
                out.v[g.iv(i, j)] = d;
            }
        }
    }
}

/// Density averaged from adjacent cells onto faces. Boundary faces copy
/// their single neighbor (the velocity there is pinned to zero anyway).
pub fn face_density(rho: &ScalarField) -> VectorField {
    let g = rho.grid;
    let mut f = VectorField::zeros(g);
    for j in 0..g.ny {
        for i in 0..=g.nx {
            f.u[g.iu(i, j)] = if i == 0 {
                rho.data[g.ic(0, j)]
            } else if i == g.nx {
                rho.data[g.ic(g.nx - 1, j)]
            } else {
                0.5 * (rho.data[g.ic(i - 1, j)] + rho.data[g.ic(i, j)])
            };
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            f.v[g.iv(i, j)] = if j == 0 {
                rho.data[g.ic(i, 0)]
            } else if j == g.ny {
                rho.data[g.ic(i, g.ny - 1)]
            } else {
                0.5 * (rho.data[g.ic(i, j - 1)] + rho.data[g.ic(i, j)])
            };
        }
    }
    f
}

/// Divergence of the upwind mass flux rho u. Fluxes vanish on boundary
/// faces (u = 0 there), so the column sums are exactly zero and the total
/// mass is conserved by construction.
fn mass_flux_div(rho: &ScalarField, u: &VectorField) -> ScalarField {
    let g = rho.grid;
    let mut fx = vec![0.0; g.n_ufaces()];
    let mut fy = vec![0.0; g.n_vfaces()];
    for j in 0..g.ny {
        for i in 1..g.nx {
            let uf = u.u[g.iu(i, j)];
            fx[g.iu(i, j)] = if uf > 0.0 {
                uf * rho.data[g.ic(i - 1, j)]
            } else {
                uf * rho.data[g.ic(i, j)]
            };
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let vf = u.v[g.iv(i, j)];
            fy[g.iv(i, j)] = if vf > 0.0 {
                vf * rho.data[g.ic(i, j - 1)]
            } else {
                vf * rho.data[g.ic(i, j)]
            };
        }
    }
    let mut out = ScalarField::zeros(g, Loc::Center);
    for j in 0..g.ny {
        for i in 0..g.nx {
            out.data[g.ic(i, j)] = (fx[g.iu(i + 1, j)] - fx[g.iu(i, j)]) / g.dx
                + (fy[g.iv(i, j + 1)] - fy[g.iv(i, j)]) / g.dy;
        }
    }
    out
}

/// Upwind self-advection u . grad u at the faces, with no-slip mirror
/// ghosts beyond the walls.
fn advection(u: &VectorField) -> VectorField {
    let g = u.grid;
    let mut out = VectorField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let uc = u.u[g.iu(i, j)];
            let dudx = if uc > 0.0 {
                (uc - u.u[g.iu(i - 1, j)]) / g.dx
            } else {
                (u.u[g.iu(i + 1, j)] - uc) / g.dx
            };
            let vc = 0.25
                * (u.v[g.iv(i - 1, j)]
                    + u.v[g.iv(i, j)]
                    + u.v[g.iv(i - 1, j + 1)]
                    + u.v[g.iv(i, j + 1)]);
            let below = if j == 0 { -uc } else { u.u[g.iu(i, j - 1)] };
            let above = if j == g.ny - 1 { -uc } else { u.u[g.iu(i, j + 1)] };
            let dudy = if vc > 0.0 { (uc - below) / g.dy } else { (above - uc) / g.dy };
            out.u[g.iu(i, j)] = uc * dudx + vc * dudy;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let vc = u.v[g.iv(i, j)];
            let dvdy = if vc > 0.0 {
                (vc - u.v[g.iv(i, j - 1)]) / g.dy
            } else {
                (u.v[g.iv(i, j + 1)] - vc) / g.dy
            };
            let uc = 0.25
                * (u.u[g.iu(i, j - 1)]
                    + u.u[g.iu(i, j)]
                    + u.u[g.iu(i + 1, j - 1)]
                    + u.u[g.iu(i + 1, j)]);
            let left = if i == 0 { -vc } else { u.v[g.iv(i - 1, j)] };
            let right = if i == g.nx - 1 { -vc } else { u.v[g.iv(i + 1, j)] };
            let dvdx = if uc > 0.0 { (vc - left) / g.dx } else { (right - vc) / g.dx };
            out.v[g.iv(i, j)] = uc * dvdx + vc * dvdy;
        }
    }
    out
}

/// The regularizing force grad(u) grad(rho) at the faces.
fn grad_u_grad_rho(u: &VectorField, rho: &ScalarField) -> VectorField {
    let g = u.grid;
    let gr = ops::grad(rho);
    let mut out = VectorField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let d11l = (u.u[g.iu(i, j)] - u.u[g.iu(i - 1, j)]) / g.dx;
            let d11r = (u.u[g.iu(i + 1, j)] - u.u[g.iu(i, j)]) / g.dx;
            let du1dx = 0.5 * (d11l + d11r);
            let du1dy = 0.5
                * (node_du1dy(u, i, j) + node_du1dy(u, i, j + 1));
            let drdx = gr.u[g.iu(i, j)];
            let drdy = 0.25
                * (gr.v[g.iv(i - 1, j)]
                    + gr.v[g.iv(i, j)]
                    + gr.v[g.iv(i - 1, j + 1)]
                    + gr.v[g.iv(i, j + 1)]);
            out.u[g.iu(i, j)] = du1dx * drdx + du1dy * drdy;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let d22b = (u.v[g.iv(i, j)] - u.v[g.iv(i, j - 1)]) / g.dy;
            let d22t = (u.v[g.iv(i, j + 1)] - u.v[g.iv(i, j)]) / g.dy;
            let du2dy = 0.5 * (d22b + d22t);
            let du2dx = 0.5
                * (node_du2dx(u, i, j) + node_du2dx(u, i + 1, j));
            let drdy = gr.v[g.iv(i, j)];
            let drdx = 0.25
                * (gr.u[g.iu(i, j - 1)]
                    + gr.u[g.iu(i, j)]
                    + gr.u[g.iu(i + 1, j - 1)]
                    + gr.u[g.iu(i + 1, j)]);
            out.v[g.iv(i, j)] = du2dx * drdx + du2dy * drdy;
        }
    }
    out
}

fn node_du1dy(u: &VectorField, i: usize, j: usize) -> f64 {
    let g = u.grid;
    if j == 0 {
        2.0 * u.u[g.iu(i, 0)] / g.dy
    } else if j == g.ny {
        -2.0 * u.u[g.iu(i, g.ny - 1)] / g.dy
    } else {
        (u.u[g.iu(i, j)] - u.u[g.iu(i, j - 1)]) / g.dy
    }
}

fn node_du2dx(u: &VectorField, i: usize, j: usize) -> f64 {
    let g = u.grid;
    if i == 0 {
        2.0 * u.v[g.iv(0, j)] / g.dx
    } else if i == g.nx {
        -2.0 * u.v[g.iv(g.nx - 1, j)] / g.dx
    } else {
        (u.v[g.iv(i, j)] - u.v[g.iv(i - 1, j)]) / g.dx
    }
}

/// Per-substep energy bookkeeping, as raw sums; the caller scales by the
/// substep length.
#[derive(Debug, Clone, Copy, Default)]
pub struct MechTally {
    pub visc_dissipation: f64,
    pub drag_dissipation: f64,
    pub gravity_work: f64,
    pub lorentz_work: f64,
}

/// One semi-implicit mechanical update over `dti`: explicit upwind
/// transport and pressure, implicit penalized viscosity and velocity drag,
/// conservative continuity with implicit density diffusion.
pub fn mechanical_substep(
    state: &MechanicalState,
    mag_lag: &MagneticState,
    params: &SchemeParams,
    dti: f64,
    g_force: [f64; 2],
) -> Result<(MechanicalState, MechTally)> {
    let g = state.rho.grid;
    let da = g.cell_area();
    let umax = state.u.max_abs();
    let hmin = g.dx.min(g.dy);
    if umax * dti > 0.5 * hmin {
        return Err(SimError::StepRejected(format!(
            "advective cfl violated: |u| dt = {:e} > {:e}; use dt_inner <= {:e}",
            umax * dti,
            0.5 * hmin,
            0.5 * hmin / umax
        )));
    }

    // --- continuity -------------------------------------------------------
    let mass0: f64 = state.rho.data.iter().sum::<f64>() * da;
    let fluxdiv = mass_flux_div(&state.rho, &state.u);
    let rhs: Vec<f64> = (0..g.n_cells())
        .map(|k| state.rho.data[k] - dti * fluxdiv.data[k])
        .collect();
    let mut rho_new = ScalarField { grid: g, loc: Loc::Center, data: rhs.clone() };
    if params.eps > 0.0 {
        let apply = |x: &[f64], y: &mut [f64]| {
            let f = ScalarField { grid: g, loc: Loc::Center, data: x.to_vec() };
            let l = ops::laplacian(&f);
            for k in 0..y.len() {
                y[k] = x[k] - dti * params.eps * l.data[k];
            }
        };
        let mut x = rhs.clone();
        pcg(
            apply,
            |r, z| z.copy_from_slice(r),
            &rhs,
            &mut x,
            1e-12,
            10 * g.n_cells(),
            "continuity",
        )?;
        rho_new.data = x;
    }
    let maxr = rho_new.max_abs();
    let minr = rho_new.min();
    if minr < -1e-10 * maxr.max(1e-300) {
        return Err(SimError::Invariant(format!(
            "density lost nonnegativity: min rho = {minr:e}"
        )));
    }
    for v in rho_new.data.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    // multiplicative repair to the exact previous mass: both the upwind
    // flux divergence and the diffusion operator have zero column sums, so
    // this only absorbs solver round-off
    let mass1: f64 = rho_new.data.iter().sum::<f64>() * da;
    if mass0 > 0.0 && mass1 > 0.0 {
        let scale = mass0 / mass1;
        for v in rho_new.data.iter_mut() {
            *v *= scale;
        }
    }

    // --- momentum ---------------------------------------------------------
    let mut tally = MechTally::default();
    let u_new = if params.pin_velocity {
        state.u.clone()
    } else {
        let rho_f = face_density(&rho_new);
        let visc = ViscousOp::build(g, &state.bodies, params);
        let p_iso = pressure(&rho_new, params.a, params.gamma)?;
        let p_art = pressure(&rho_new, params.alpha, params.beta)?;
        let mut ptot = p_iso;
        for (t, a) in ptot.data.iter_mut().zip(p_art.data.iter()) {
            *t += a;
        }
        let gp = ops::grad(&ptot);
        let adv = advection(&state.u);
        let fl = lorentz_force(mag_lag, params.mu);
        let freg = grad_u_grad_rho(&state.u, &rho_new);

        // squared speed of the previous velocity at each face: lagged
        // coefficient of the eps |u|^2 u drag, kept implicit in u-new
        let mut sq = VectorField::zeros(g);
        for j in 0..g.ny {
            for i in 1..g.nx {
                let vc = 0.25
                    * (state.u.v[g.iv(i - 1, j)]
                        + state.u.v[g.iv(i, j)]
                        + state.u.v[g.iv(i - 1, j + 1)]
                        + state.u.v[g.iv(i, j + 1)]);
                let uc = state.u.u[g.iu(i, j)];
                sq.u[g.iu(i, j)] = uc * uc + vc * vc;
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                let uc = 0.25
                    * (state.u.u[g.iu(i, j - 1)]
                        + state.u.u[g.iu(i, j)]
                        + state.u.u[g.iu(i + 1, j - 1)]
                        + state.u.u[g.iu(i + 1, j)]);
                let vc = state.u.v[g.iv(i, j)];
                sq.v[g.iv(i, j)] = uc * uc + vc * vc;
            }
        }

        let nu_total = g.n_ufaces();
        let ntot = nu_total + g.n_vfaces();
        let pack = |vf: &VectorField, out: &mut Vec<f64>| {
            out.clear();
            out.extend_from_slice(&vf.u);
            out.extend_from_slice(&vf.v);
        };
        let unpack = |x: &[f64]| -> VectorField {
            let mut vf = VectorField::zeros(g);
            vf.u.copy_from_slice(&x[..nu_total]);
            vf.v.copy_from_slice(&x[nu_total..]);
            vf
        };
        let is_boundary_u =
            |k: usize| -> bool { (k % (g.nx + 1)) == 0 || (k % (g.nx + 1)) == g.nx };
        let is_boundary_v = |k: usize| -> bool { k < g.nx || k >= g.nx * g.ny };

        let apply = |x: &[f64], y: &mut [f64]| {
            let vf = unpack(x);
            let av = visc.apply(&vf);
            for k in 0..nu_total {
                y[k] = if is_boundary_u(k) {
                    x[k]
                } else {
                    da * (rho_f.u[k] / dti + params.eps * sq.u[k]) * x[k] + av.u[k]
                };
            }
            for k in 0..g.n_vfaces() {
                y[nu_total + k] = if is_boundary_v(k) {
                    x[nu_total + k]
                } else {
                    da * (rho_f.v[k] / dti + params.eps * sq.v[k]) * x[nu_total + k]
                        + av.v[k]
                };
            }
        };

        let mut diag = VectorField::zeros(g);
        visc.diagonal(&mut diag);
        let mut dvec = vec![1.0; ntot];
        for k in 0..nu_total {
            if !is_boundary_u(k) {
                dvec[k] = da * (rho_f.u[k] / dti + params.eps * sq.u[k]) + diag.u[k];
            }
        }
        for k in 0..g.n_vfaces() {
            if !is_boundary_v(k) {
                dvec[nu_total + k] =
                    da * (rho_f.v[k] / dti + params.eps * sq.v[k]) + diag.v[k];
            }
        }
        let precond = |r: &[f64], z: &mut [f64]| {
            for k in 0..r.len() {
                z[k] = r[k] / dvec[k];
            }
        };

        let mut frc = VectorField::zeros(g);
        for j in 0..g.ny {
            for i in 1..g.nx {
                let k = g.iu(i, j);
                frc.u[k] = da
                    * (rho_f.u[k] * state.u.u[k] / dti - rho_f.u[k] * adv.u[k] - gp.u[k]
                        + rho_f.u[k] * g_force[0]
                        + fl.u[k]
                        + params.eps * freg.u[k]);
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                let k = g.iv(i, j);
                frc.v[k] = da
                    * (rho_f.v[k] * state.u.v[k] / dti - rho_f.v[k] * adv.v[k] - gp.v[k]
                        + rho_f.v[k] * g_force[1]
                        + fl.v[k]
                        + params.eps * freg.v[k]);
            }
        }
        let mut b = Vec::with_capacity(ntot);
        pack(&frc, &mut b);
        let mut x = Vec::with_capacity(ntot);
        pack(&state.u, &mut x);
        for k in 0..nu_total {
            if is_boundary_u(k) {
                x[k] = 0.0;
            }
        }
        for k in 0..g.n_vfaces() {
            if is_boundary_v(k) {
                x[nu_total + k] = 0.0;
            }
        }
        pcg(apply, precond, &b, &mut x, 1e-12, 10 * ntot, "momentum")?;
        let mut un = unpack(&x);
        un.clamp_boundary();

        tally.visc_dissipation = visc.energy(&un);
        tally.drag_dissipation = params.eps
            * da
            * (un.u.iter().zip(sq.u.iter()).map(|(a, s)| s * a * a).sum::<f64>()
                + un.v.iter().zip(sq.v.iter()).map(|(a, s)| s * a * a).sum::<f64>());
        tally.gravity_work = da
            * (un
                .u
                .iter()
                .zip(rho_f.u.iter())
                .map(|(a, r)| r * g_force[0] * a)
                .sum::<f64>()
                + un.v
                    .iter()
                    .zip(rho_f.v.iter())
                    .map(|(a, r)| r * g_force[1] * a)
                    .sum::<f64>());
        tally.lorentz_work =
            da * (un.u.iter().zip(fl.u.iter()).map(|(a, f)| f * a).sum::<f64>()
                + un.v.iter().zip(fl.v.iter()).map(|(a, f)| f * a).sum::<f64>());
        un
    };

    Ok((
        MechanicalState {
            rho: rho_new,
            u: u_new,
            bodies: state.bodies.clone(),
            time: state.time + dti,
        },
        tally,
    ))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct InductionTally {
    pub dissipation: f64,
    pub regularizer: f64,
    pub current_work: f64,
    pub transport_work: f64,
    pub picard_iterations: usize,
    pub picard_fallback: bool,
}

/// One Rothe step for the magnetic potential. With L = -laplacian on the
/// psi nodes (Dirichlet), the weak update reads
///   [L/dt + L^2/(sigma mu) + eps L^3 + L diag(c) L] psi_k
///       = L psi_{k-1}/dt + L e',
/// where e' collects the electromotive terms (u x B)_z + J_z/sigma at the
/// nodes and c = (eps/mu^2) w^2 carries the quartic curl regularizer,
/// handled by Picard iteration on w = L psi.
pub fn induction_step(
    mag: &MagneticState,
    u: &VectorField,
    jz: &ScalarField,
    params: &SchemeParams,
) -> Result<(MagneticState, InductionTally)> {
    let g = mag.psi.grid;
    assert_eq!(jz.loc, Loc::Node);
    let n = g.n_nodes();
    let da = g.cell_area();
    let b_prev = mag.b();

    // electromotive scalar at the nodes; walls carry u = 0, so only the
    // imposed current survives there
    let mut eprime = ScalarField::zeros(g, Loc::Node);
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let k = g.inode(i, j);
            let mut e = jz.data[k] / params.sigma;
            if i >= 1 && i <= g.nx - 1 && j >= 1 && j <= g.ny - 1 {
                let u1 = 0.5 * (u.u[g.iu(i, j - 1)] + u.u[g.iu(i, j)]);
                let u2 = 0.5 * (u.v[g.iv(i - 1, j)] + u.v[g.iv(i, j)]);
                let b1 = 0.5 * (b_prev.u[g.iu(i, j - 1)] + b_prev.u[g.iu(i, j)]);
                let b2 = 0.5 * (b_prev.v[g.iv(i - 1, j)] + b_prev.v[g.iv(i, j)]);
                e += u1 * b2 - u2 * b1;
            }
            eprime.data[k] = e;
        }
    }

    let lpsi_prev = lap_node(&mag.psi);
    let leprime = lap_node(&eprime);
    let mut rhs = vec![0.0; n];
    for k in 0..n {
        rhs[k] = lpsi_prev.data[k] / params.dt + leprime.data[k];
    }

    let boundary = |k: usize| -> bool {
        let i = k % (g.nx + 1);
        let j = k / (g.nx + 1);
        i == 0 || i == g.nx || j == 0 || j == g.ny
    };

    let solve_with = |c: &[f64]| -> Result<Vec<f64>> {
        let apply = |x: &[f64], y: &mut [f64]| {
            let xf = ScalarField { grid: g, loc: Loc::Node, data: x.to_vec() };
            let t1 = lap_node(&xf);
            let t2 = lap_node(&t1);
            let t3 = if params.eps > 0.0 { Some(lap_node(&t2)) } else { None };
            let mut ct = ScalarField::zeros(g, Loc::Node);
            let has_c = c.iter().any(|&v| v != 0.0);
            if has_c {
                for k in 0..n {
                    ct.data[k] = c[k] * t1.data[k];
                }
            }
            let lct = if has_c { Some(lap_node(&ct)) } else { None };
            for k in 0..n {
                y[k] = if boundary(k) {
                    x[k]
                } else {
                    let mut v = t1.data[k] / params.dt + t2.data[k] / (params.sigma * params.mu);
                    if let Some(t3) = &t3 {
                        v += params.eps * t3.data[k];
                    }
                    if let Some(lct) = &lct {
                        v += lct.data[k];
                    }
                    v
                };
            }
        };
        let mut x = mag.psi.data.clone();
        for k in 0..n {
            if boundary(k) {
                x[k] = 0.0;
            }
        }
        // constant Jacobi scaling from an interior probe; convergence is
        // governed by the composed-Laplacian spectrum either way
        let probe = g.inode(g.nx / 2, g.ny / 2);
        let d = crate::solver::probe_diagonal(&apply, n, probe);
        pcg(
            &apply,
            |r: &[f64], z: &mut [f64]| {
                for k in 0..r.len() {
                    z[k] = r[k] / d;
                }
            },
            &rhs,
            &mut x,
            1e-13,
            10 * n,
            "induction",
        )?;
        Ok(x)
    };

    let nonlinear = params.eps > 0.0;
    let mut c = vec![0.0; n];
    if nonlinear {
        for k in 0..n {
            c[k] = params.eps / (params.mu * params.mu) * lpsi_prev.data[k] * lpsi_prev.data[k];
        }
    }
    let mut psi = solve_with(&c)?;
    let first = psi.clone();
    let mut iterations = 1usize;
    let mut fallback = false;
    if nonlinear {
        let mut converged = false;
        while iterations < params.picard_max {
            let pf = ScalarField { grid: g, loc: Loc::Node, data: psi.clone() };
            let w = lap_node(&pf);
            for k in 0..n {
                c[k] = params.eps / (params.mu * params.mu) * w.data[k] * w.data[k];
            }
            let next = solve_with(&c)?;
            iterations += 1;
            let mut diff = 0.0;
            let mut scale = 0.0;
            for k in 0..n {
                diff += (next[k] - psi[k]) * (next[k] - psi[k]);
                scale += next[k] * next[k];
            }
            psi = next;
            if diff.sqrt() <= params.picard_tol * scale.sqrt().max(1e-300) {
                converged = true;
                break;
            }
        }
        if !converged {
            // fully lagged nonlinearity: the very first iterate, flagged
            psi = first;
            for k in 0..n {
                c[k] =
                    params.eps / (params.mu * params.mu) * lpsi_prev.data[k] * lpsi_prev.data[k];
            }
            fallback = true;
        }
    }

    let psi_f = ScalarField { grid: g, loc: Loc::Node, data: psi };
    let w = lap_node(&psi_f);
    let mut tally = InductionTally {
        picard_iterations: iterations,
        picard_fallback: fallback,
        ..Default::default()
    };
    let smu2 = params.sigma * params.mu * params.mu;
    for k in 0..n {
        tally.dissipation += da / smu2 * w.data[k] * w.data[k];
        tally.current_work += da / (params.sigma * params.mu) * jz.data[k] * w.data[k];
        tally.transport_work +=
            da / params.mu * (eprime.data[k] - jz.data[k] / params.sigma) * w.data[k];
        tally.regularizer += da / params.mu * c[k] * w.data[k] * w.data[k];
    }
    if params.eps > 0.0 {
        let lw = lap_node(&w);
        for k in 0..n {
            tally.regularizer += da * params.eps / params.mu * w.data[k] * lw.data[k];
        }
    }

    Ok((MagneticState { psi: psi_f, k: mag.k + 1 }, tally))
}

/// L2 norm of the symmetric velocity gradient over each body's support —
/// the rigidity residual the penalization drives to zero.
pub fn rigidity_residuals(mech: &MechanicalState) -> Vec<f64> {
    let g = mech.rho.grid;
    let da = g.cell_area();
    let t = ops::symgrad(&mech.u);
    mech.bodies
        .iter()
        .map(|b| {
            let one = std::slice::from_ref(b);
            let mut s = 0.0;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let f = cell_fraction(&g, one, i, j);
                    if f > 0.0 {
                        let c = g.ic(i, j);
                        s += f
                            * da
                            * (t.xx[c] * t.xx[c]
                                + t.yy[c] * t.yy[c]
                                + 2.0 * t.xy[c] * t.xy[c]);
                    }
                }
            }
            s.sqrt()
        })
        .collect()
}

/// One outer step: mechanical substeps with the lagged field, rigid-body
/// projection and transport, then the induction update with the
/// end-of-interval velocity. Returns the per-step energy ledger.
pub fn step_coupled(
    mech: &MechanicalState,
    mag: &MagneticState,
    params: &SchemeParams,
    g_force: [f64; 2],
    jz: &ScalarField,
) -> Result<(MechanicalState, MagneticState, ledger::EnergyLedger)> {
    let dti = params.dt_inner();
    let mut cur = mech.clone();
    let mut acc = MechTally::default();
    for _ in 0..params.inner_substeps {
        let (next, t) = mechanical_substep(&cur, mag, params, dti, g_force)?;
        acc.visc_dissipation += dti * t.visc_dissipation;
        acc.drag_dissipation += dti * t.drag_dissipation;
        acc.gravity_work += dti * t.gravity_work;
        acc.lorentz_work += dti * t.lorentz_work;
        cur = next;
    }

    if !cur.bodies.is_empty() {
        let mut advanced = Vec::with_capacity(cur.bodies.len());
        for b in &cur.bodies {
            let (v, w) = extract_rigid_velocity(&cur.rho, &cur.u, b)?;
            advanced.push(advance_flow_map(b, v, w, params.dt));
        }
        validate_bodies(&cur.rho.grid, &advanced)?;
        cur.bodies = advanced;
    }

    let (mag_new, itally) = induction_step(mag, &cur.u, jz, params)?;
    let led = ledger::assemble(mech, mag, &cur, &mag_new, params, &acc, &itally);
    Ok((cur, mag_new, led))
}
