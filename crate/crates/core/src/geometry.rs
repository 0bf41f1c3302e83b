//! Rigid bodies: shapes, signed distance, the penalty hinge, the velocity
//! mollifier, and the momentum integrals that project the fluid velocity
//! onto a rigid motion.
//!
//! Convention: the signed distance chi is positive *inside* the solid and
//! negative outside, so the penalty term H(chi) switches on exactly where
//! the body sits.

use crate::error::{Result, SimError};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;

/// Orientation-preserving isometry of the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    pub rot: [[f64; 2]; 2],
    pub trans: [f64; 2],
}

impl Isometry {
    pub fn identity() -> Self {
        Isometry { rot: [[1.0, 0.0], [0.0, 1.0]], trans: [0.0, 0.0] }
    }

    pub fn translation(t: [f64; 2]) -> Self {
        Isometry { rot: [[1.0, 0.0], [0.0, 1.0]], trans: t }
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.rot[0][0] * p[0] + self.rot[0][1] * p[1] + self.trans[0],
            self.rot[1][0] * p[0] + self.rot[1][1] * p[1] + self.trans[1],
        ]
    }

    /// Inverse map; the rotation block is orthogonal so its transpose serves.
    pub fn apply_inv(&self, p: [f64; 2]) -> [f64; 2] {
        let q = [p[0] - self.trans[0], p[1] - self.trans[1]];
        [
            self.rot[0][0] * q[0] + self.rot[1][0] * q[1],
            self.rot[0][1] * q[0] + self.rot[1][1] * q[1],
        ]
    }

    /// Snap the rotation block to the nearest proper rotation (2D polar
    /// decomposition in closed form). Keeps round-off from accumulating
    /// over many flow-map compositions.
    pub fn reproject(&mut self) {
        let a = self.rot[0][0] + self.rot[1][1];
        let b = self.rot[1][0] - self.rot[0][1];
        let n = (a * a + b * b).sqrt();
        assert!(n > 0.0, "degenerate rotation block");
        let (c, s) = (a / n, b / n);
        self.rot = [[c, -s], [s, c]];
    }

    /// Max deviation from QᵀQ = I plus the det Q − 1 defect.
    pub fn orthogonality_defect(&self) -> f64 {
        let q = &self.rot;
        let g00 = q[0][0] * q[0][0] + q[1][0] * q[1][0] - 1.0;
        let g11 = q[0][1] * q[0][1] + q[1][1] * q[1][1] - 1.0;
        let g01 = q[0][0] * q[0][1] + q[1][0] * q[1][1];
        let det = q[0][0] * q[1][1] - q[0][1] * q[1][0] - 1.0;
        g00.abs().max(g11.abs()).max(g01.abs()).max(det.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk { radius: f64 },
    Rect { w: f64, h: f64 },
}

impl Shape {
    /// Signed distance in body coordinates, positive inside. Lipschitz-1.
    pub fn sdf(&self, p: [f64; 2]) -> f64 {
        match *self {
            Shape::Disk { radius } => radius - (p[0] * p[0] + p[1] * p[1]).sqrt(),
            Shape::Rect { w, h } => {
                let qx = p[0].abs() - 0.5 * w;
                let qy = p[1].abs() - 0.5 * h;
                let outside = (qx.max(0.0).powi(2) + qy.max(0.0).powi(2)).sqrt();
                -(outside + qx.max(qy).min(0.0))
            }
        }
    }

    /// Radius of the smallest origin-centered disk containing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Disk { radius } => radius,
            Shape::Rect { w, h } => 0.5 * (w * w + h * h).sqrt(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RigidBodyState {
    pub id: usize,
    pub shape: Shape,
    pub pose: Isometry,
    pub v: [f64; 2],
    pub w: f64,
    pub delta: f64,
}

impl RigidBodyState {
    /// Signed distance of the current placement at a world point.
    pub fn chi(&self, x: [f64; 2]) -> f64 {
        self.shape.sdf(self.pose.apply_inv(x))
    }

    /// World position of the reference centroid (shapes are centered at the
    /// body origin, so this is just the translation).
    pub fn center(&self) -> [f64; 2] {
        self.pose.trans
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BodyIntegrals {
    pub m: f64,
    pub x: [f64; 2],
    pub j: f64,
}

/// Signed distance of the whole solid region: max over bodies.
pub fn signed_distance(bodies: &[RigidBodyState], x: [f64; 2]) -> f64 {
    bodies.iter().map(|b| b.chi(x)).fold(f64::NEG_INFINITY, f64::max)
}

/// The penalty hinge: zero on the fluid side, cubic growth in the solid.
/// Convex and twice continuously differentiable.
pub fn penalty_h(z: f64) -> f64 {
    let p = z.max(0.0);
    p * p * p
}

/// Solid volume fraction of cell (i, j), from chi at a 2x2 sub-sample.
pub fn cell_fraction(grid: &Grid, bodies: &[RigidBodyState], i: usize, j: usize) -> f64 {
    if bodies.is_empty() {
        return 0.0;
    }
    let [cx, cy] = grid.cell_center(i, j);
    let (ox, oy) = (0.25 * grid.dx, 0.25 * grid.dy);
    let mut inside = 0u32;
    for &sx in &[-ox, ox] {
        for &sy in &[-oy, oy] {
            if signed_distance(bodies, [cx + sx, cy + sy]) > 0.0 {
                inside += 1;
            }
        }
    }
    inside as f64 / 4.0
}

/// Reject configurations where two bodies touch or a body leaves the
/// domain. Pairwise clearance is checked analytically for disks and by
/// midpoint-of-centers sampling otherwise; containment samples the domain
/// boundary at sub-cell resolution (the SDF is Lipschitz-1, so a strictly
/// negative margin at samples certifies clearance).
pub fn validate_bodies(grid: &Grid, bodies: &[RigidBodyState]) -> Result<()> {
    for (a, ba) in bodies.iter().enumerate() {
        for bb in bodies.iter().skip(a + 1) {
            let touching = match (ba.shape, bb.shape) {
                (Shape::Disk { radius: ra }, Shape::Disk { radius: rb }) => {
                    let d = [
                        ba.center()[0] - bb.center()[0],
                        ba.center()[1] - bb.center()[1],
                    ];
                    (d[0] * d[0] + d[1] * d[1]).sqrt() <= ra + rb
                }
                _ => {
                    let mid = [
                        0.5 * (ba.center()[0] + bb.center()[0]),
                        0.5 * (ba.center()[1] + bb.center()[1]),
                    ];
                    // Lipschitz bound: if the two SDFs at the midpoint sum
                    // above the center separation they cannot be disjoint.
                    ba.chi(mid) >= 0.0 || bb.chi(mid) >= 0.0 || {
                        let mut hit = false;
                        'scan: for j in 0..grid.ny {
                            for i in 0..grid.nx {
                                let p = grid.cell_center(i, j);
                                if ba.chi(p) > 0.0 && bb.chi(p) > 0.0 {
                                    hit = true;
                                    break 'scan;
                                }
                            }
                        }
                        hit
                    }
                }
            };
            if touching {
                return Err(SimError::BodyRejected(format!(
                    "bodies {} and {} overlap or touch; the model excludes contact",
                    ba.id, bb.id
                )));
            }
        }
    }
    let h = grid.dx.min(grid.dy) * 0.5;
    let (lx, ly) = (grid.nx as f64 * grid.dx, grid.ny as f64 * grid.dy);
    for b in bodies {
        let nxs = (lx / h).ceil() as usize;
        let nys = (ly / h).ceil() as usize;
        let mut worst = f64::NEG_INFINITY;
        for k in 0..=nxs {
            let x = grid.origin[0] + lx * k as f64 / nxs as f64;
            worst = worst.max(b.chi([x, grid.origin[1]]));
            worst = worst.max(b.chi([x, grid.origin[1] + ly]));
        }
        for k in 0..=nys {
            let y = grid.origin[1] + ly * k as f64 / nys as f64;
            worst = worst.max(b.chi([grid.origin[0], y]));
            worst = worst.max(b.chi([grid.origin[0] + lx, y]));
        }
        if worst >= -h {
            return Err(SimError::BodyRejected(format!(
                "body {} is not strictly inside the domain (boundary margin {worst:e})",
                b.id
            )));
        }
        if b.delta <= 0.0 {
            return Err(SimError::BodyRejected(format!(
                "body {}: mollification radius must be positive",
                b.id
            )));
        }
    }
    Ok(())
}

/// Smooth the velocity with a compact polynomial bump of radius `delta`.
/// Tensor-product kernel (1 - t²)³ per axis, with the per-axis radius
/// delta/sqrt(2) so the full support sits inside the Euclidean delta-ball;
/// weights are normalized discretely (truncated at the domain edge), so
/// constants survive exactly and affine fields survive wherever the
/// support is uncut.
pub fn mollify(u: &VectorField, delta: f64) -> Result<VectorField> {
    let g = u.grid;
    if delta < 2.0 * g.dx.max(g.dy) {
        return Err(SimError::Config(vec![format!(
            "mollification radius {delta} is below two cells ({}); kernel unresolvable",
            2.0 * g.dx.max(g.dy)
        )]));
    }
    let rad = delta / std::f64::consts::SQRT_2;
    let kx = axis_weights(rad, g.dx);
    let ky = axis_weights(rad, g.dy);
    let mut out = VectorField::zeros(g);

    // comp 1 lives on an (nx+1) x ny lattice, comp 2 on nx x (ny+1)
    smooth_lattice(&u.u, g.nx + 1, g.ny, &kx, &ky, &mut out.u);
    smooth_lattice(&u.v, g.nx, g.ny + 1, &kx, &ky, &mut out.v);
    Ok(out)
}

fn axis_weights(rad: f64, h: f64) -> Vec<f64> {
    let half = (rad / h).floor() as i64;
    let mut w = Vec::with_capacity(2 * half as usize + 1);
    for k in -half..=half {
        let t = k as f64 * h / rad;
        w.push(if t.abs() < 1.0 { (1.0 - t * t).powi(3) } else { 0.0 });
    }
    w
}

fn smooth_lattice(src: &[f64], nx: usize, ny: usize, kx: &[f64], ky: &[f64], dst: &mut [f64]) {
    let hx = (kx.len() / 2) as i64;
    let hy = (ky.len() / 2) as i64;
    let mut tmp = vec![0.0; src.len()];
    for j in 0..ny as i64 {
        for i in 0..nx as i64 {
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for (o, &w) in kx.iter().enumerate() {
                let ii = i + o as i64 - hx;
                if ii >= 0 && ii < nx as i64 {
                    acc += w * src[(j * nx as i64 + ii) as usize];
                    wsum += w;
                }
            }
            tmp[(j * nx as i64 + i) as usize] = acc / wsum;
        }
    }
    for j in 0..ny as i64 {
        for i in 0..nx as i64 {
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for (o, &w) in ky.iter().enumerate() {
                let jj = j + o as i64 - hy;
                if jj >= 0 && jj < ny as i64 {
                    acc += w * tmp[(jj * nx as i64 + i) as usize];
                    wsum += w;
                }
            }
            dst[(j * nx as i64 + i) as usize] = acc / wsum;
        }
    }
}

/// Mass, center of mass, and scalar inertia of the density restricted to
/// one body, with volume-fraction weighting at cut cells.
pub fn body_integrals(rho: &ScalarField, body: &RigidBodyState) -> Result<BodyIntegrals> {
    let g = rho.grid;
    let da = g.cell_area();
    let one = std::slice::from_ref(body);
    let mut m = 0.0;
    let mut mx = [0.0, 0.0];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let f = cell_fraction(&g, one, i, j);
            if f > 0.0 {
                let w = rho.data[g.ic(i, j)] * f * da;
                let p = g.cell_center(i, j);
                m += w;
                mx[0] += w * p[0];
                mx[1] += w * p[1];
            }
        }
    }
    if m <= 0.0 {
        return Err(SimError::DegenerateBody(format!(
            "body {}: degenerate body (zero mass on the grid)",
            body.id
        )));
    }
    let x = [mx[0] / m, mx[1] / m];
    let mut jmom = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let f = cell_fraction(&g, one, i, j);
            if f > 0.0 {
                let p = g.cell_center(i, j);
                let r2 = (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2);
                jmom += rho.data[g.ic(i, j)] * f * da * r2;
            }
        }
    }
    if jmom <= 0.0 {
        return Err(SimError::DegenerateBody(format!(
            "body {}: zero moment of inertia",
            body.id
        )));
    }
    Ok(BodyIntegrals { m, x, j: jmom })
}

/// Project the fluid momentum inside the body onto a rigid motion (V, w).
pub fn extract_rigid_velocity(
    rho: &ScalarField,
    u: &VectorField,
    body: &RigidBodyState,
) -> Result<([f64; 2], f64)> {
    let ints = body_integrals(rho, body)?;
    let g = rho.grid;
    let da = g.cell_area();
    let one = std::slice::from_ref(body);
    let mut p = [0.0, 0.0];
    let mut l = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let f = cell_fraction(&g, one, i, j);
            if f > 0.0 {
                let w = rho.data[g.ic(i, j)] * f * da;
                let uc = [u.u_at_cell(i, j), u.v_at_cell(i, j)];
                let xc = g.cell_center(i, j);
                p[0] += w * uc[0];
                p[1] += w * uc[1];
                l += w * ((xc[0] - ints.x[0]) * uc[1] - (xc[1] - ints.x[1]) * uc[0]);
            }
        }
    }
    Ok(([p[0] / ints.m, p[1] / ints.m], l / ints.j))
}

/// Move the body by the exact rigid motion over dt: rotate by w·dt about
/// its center, translate by V·dt, then snap back onto the isometry group.
pub fn advance_flow_map(body: &RigidBodyState, v: [f64; 2], w: f64, dt: f64) -> RigidBodyState {
    assert!(dt > 0.0, "advance_flow_map needs dt > 0");
    let th = w * dt;
    let (c, s) = (th.cos(), th.sin());
    let r = &body.pose.rot;
    let mut pose = Isometry {
        rot: [
            [c * r[0][0] - s * r[1][0], c * r[0][1] - s * r[1][1]],
            [s * r[0][0] + c * r[1][0], s * r[0][1] + c * r[1][1]],
        ],
        // rotation is about the body center, which is the translation
        // itself, so the center just drifts with V
        trans: [body.pose.trans[0] + v[0] * dt, body.pose.trans[1] + v[1] * dt],
    };
    pose.reproject();
    RigidBodyState { pose, v, w, ..body.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Loc;

    fn unit_disk() -> RigidBodyState {
        RigidBodyState {
            id: 0,
            shape: Shape::Disk { radius: 1.0 },
            pose: Isometry::identity(),
            v: [0.0, 0.0],
            w: 0.0,
            delta: 0.1,
        }
    }

    #[test]
    fn disk_signed_distance_points() {
        let b = [unit_disk()];
        assert!((signed_distance(&b, [0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((signed_distance(&b, [2.0, 0.0]) + 1.0).abs() < 1e-15);
        assert!(signed_distance(&b, [1.0, 0.0]).abs() < 1e-15);
    }

    #[test]
    fn rect_signed_distance() {
        let mut b = unit_disk();
        b.shape = Shape::Rect { w: 2.0, h: 1.0 };
        assert!((b.chi([0.0, 0.0]) - 0.5).abs() < 1e-15);
        assert!((b.chi([2.0, 0.0]) + 1.0).abs() < 1e-15);
        assert!(b.chi([1.0, 0.5]).abs() < 1e-15);
    }

    #[test]
    fn penalty_hinge_values() {
        assert_eq!(penalty_h(-1.0), 0.0);
        assert_eq!(penalty_h(0.0), 0.0);
        assert_eq!(penalty_h(2.0), 8.0);
        // convexity on a sample
        for k in 0..20 {
            let z = -1.0 + 0.2 * k as f64;
            let h = 1e-4;
            let second = penalty_h(z + h) - 2.0 * penalty_h(z) + penalty_h(z - h);
            assert!(second >= -1e-12);
        }
    }

    #[test]
    fn isometry_roundtrip_and_reproject() {
        let mut iso = Isometry {
            rot: [[0.6, -0.8], [0.8, 0.6]],
            trans: [1.0, -2.0],
        };
        let p = [0.3, 0.7];
        let q = iso.apply_inv(iso.apply(p));
        assert!((q[0] - p[0]).abs() < 1e-14 && (q[1] - p[1]).abs() < 1e-14);
        iso.rot[0][0] += 1e-6;
        iso.reproject();
        assert!(iso.orthogonality_defect() < 1e-12);
    }

    #[test]
    fn flow_map_examples() {
        let b = unit_disk();
        let same = advance_flow_map(&b, [0.0, 0.0], 0.0, 1.0);
        assert_eq!(same.pose, b.pose);
        let moved = advance_flow_map(&b, [1.0, 0.0], 0.0, 0.5);
        assert!((moved.pose.trans[0] - 0.5).abs() < 1e-15);
        let spun = advance_flow_map(&b, [0.0, 0.0], std::f64::consts::PI, 1.0);
        assert!((spun.pose.rot[0][0] + 1.0).abs() < 1e-12);
        assert!((spun.pose.rot[1][1] + 1.0).abs() < 1e-12);
        assert!(spun.pose.rot[0][1].abs() < 1e-12);
        assert!(spun.pose.orthogonality_defect() < 1e-12);
    }

    #[test]
    fn degenerate_body_rejected() {
        let g = Grid::new(32, 32, 4.0 / 32.0, 4.0 / 32.0, [-2.0, -2.0]).unwrap();
        let rho = ScalarField::zeros(g, Loc::Center);
        let err = body_integrals(&rho, &unit_disk());
        assert!(matches!(err, Err(SimError::DegenerateBody(_))));
    }

    #[test]
    fn disk_mass_and_inertia() {
        let n = 128;
        let g = Grid::new(n, n, 4.0 / n as f64, 4.0 / n as f64, [-2.0, -2.0]).unwrap();
        let rho = ScalarField::constant(g, Loc::Center, 1.0);
        let ints = body_integrals(&rho, &unit_disk()).unwrap();
        assert!((ints.m - std::f64::consts::PI).abs() < 0.05);
        assert!(ints.x[0].abs() < 1e-10 && ints.x[1].abs() < 1e-10);
        // disk inertia m R^2 / 2
        assert!((ints.j / ints.m - 0.5).abs() < 0.01);
    }

    #[test]
    fn rigid_velocity_roundtrip() {
        let n = 128;
        let g = Grid::new(n, n, 4.0 / n as f64, 4.0 / n as f64, [-2.0, -2.0]).unwrap();
        let rho = ScalarField::constant(g, Loc::Center, 1.0);
        let b = unit_disk();
        let trans = VectorField::from_fn(g, |_| [3.0, 0.0]);
        let (v, w) = extract_rigid_velocity(&rho, &trans, &b).unwrap();
        assert!((v[0] - 3.0).abs() < 1e-10 && v[1].abs() < 1e-10 && w.abs() < 1e-10);
        let spin = VectorField::from_fn(g, |p| [-p[1], p[0]]);
        let (v, w) = extract_rigid_velocity(&rho, &spin, &b).unwrap();
        assert!(v[0].abs() < 1e-9 && v[1].abs() < 1e-9);
        assert!((w - 1.0).abs() < 1e-9);
        let zero = VectorField::zeros(g);
        let (v, w) = extract_rigid_velocity(&rho, &zero, &b).unwrap();
        assert_eq!(v, [0.0, 0.0]);
        assert_eq!(w, 0.0);
    }

    #[test]
    fn mollify_preserves_constants_and_rejects_tiny_delta() {
        let g = Grid::unit(32);
        let u = VectorField::from_fn(g, |_| [1.0, 0.0]);
        let s = mollify(&u, 0.2).unwrap();
        for (a, b) in s.u.iter().zip(u.u.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
        for x in &s.v {
            assert!(x.abs() < 1e-13);
        }
        assert!(matches!(mollify(&u, 0.01), Err(SimError::Config(_))));
    }

    #[test]
    fn mollify_reproduces_rigid_field_on_eroded_disk() {
        let n = 96;
        let g = Grid::new(n, n, 4.0 / n as f64, 4.0 / n as f64, [-2.0, -2.0]).unwrap();
        let rr = 1.2;
        let delta = 0.25;
        // rigid rotation inside the disk, noise outside
        let u = VectorField::from_fn(g, |p| {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            if r <= rr {
                [-p[1] + 0.3, p[0] - 0.1]
            } else {
                [(37.0 * p[0]).sin(), (41.0 * p[1]).cos()]
            }
        });
        let s = mollify(&u, delta).unwrap();
        for j in 0..g.ny {
            for i in 0..=g.nx {
                let p = g.uface_pos(i, j);
                if (p[0] * p[0] + p[1] * p[1]).sqrt() <= rr - delta {
                    assert!(
                        (s.u[g.iu(i, j)] - (-p[1] + 0.3)).abs() < 1e-10,
                        "at {p:?}: {} vs {}",
                        s.u[g.iu(i, j)],
                        -p[1] + 0.3
                    );
                }
            }
        }
        for j in 0..=g.ny {
            for i in 0..g.nx {
                let p = g.vface_pos(i, j);
                if (p[0] * p[0] + p[1] * p[1]).sqrt() <= rr - delta {
                    assert!((s.v[g.iv(i, j)] - (p[0] - 0.1)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn overlap_and_containment_rejected() {
        let g = Grid::new(64, 64, 4.0 / 64.0, 4.0 / 64.0, [-2.0, -2.0]).unwrap();
        let mut a = unit_disk();
        a.shape = Shape::Disk { radius: 0.5 };
        a.pose = Isometry::translation([-0.4, 0.0]);
        let mut b = a.clone();
        b.id = 1;
        b.pose = Isometry::translation([0.4, 0.0]);
        assert!(matches!(validate_bodies(&g, &[a.clone(), b]), Err(SimError::BodyRejected(_))));
        let mut c = a.clone();
        c.pose = Isometry::translation([1.8, 0.0]);
        assert!(matches!(validate_bodies(&g, &[c]), Err(SimError::BodyRejected(_))));
        a.pose = Isometry::translation([0.0, 0.0]);
        assert!(validate_bodies(&g, &[a]).is_ok());
    }
}
