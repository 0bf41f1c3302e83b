//! Discrete differential operators on the staggered grid.
//!
//! All first-order operators are exact on affine fields, and grad/div are
//! discrete adjoints (up to boundary terms) so the energy bookkeeping of
//! the time stepper closes to rounding error.

use crate::field::{Loc, ScalarField, TensorField, VectorField};

/// Gradient of a cell-centered scalar onto the faces. Boundary faces get a
/// zero normal gradient (no-flux convention).
pub fn grad(f: &ScalarField) -> VectorField {
    assert_eq!(f.loc, Loc::Center, "grad expects a cell-centered field");
    let g = f.grid;
    let mut out = VectorField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            out.u[g.iu(i, j)] = (f.data[g.ic(i, j)] - f.data[g.ic(i - 1, j)]) / g.dx;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            out.v[g.iv(i, j)] = (f.data[g.ic(i, j)] - f.data[g.ic(i, j - 1)]) / g.dy;
        }
    }
    out
}

/// Divergence of a face field at cell centers.
pub fn div(v: &VectorField) -> ScalarField {
    let g = v.grid;
    let mut out = ScalarField::zeros(g, Loc::Center);
    for j in 0..g.ny {
        for i in 0..g.nx {
            out.data[g.ic(i, j)] = (v.u[g.iu(i + 1, j)] - v.u[g.iu(i, j)]) / g.dx
                + (v.v[g.iv(i, j + 1)] - v.v[g.iv(i, j)]) / g.dy;
        }
    }
    out
}

/// Scalar curl d1 v2 - d2 v1 at the nodes. One-sided at boundary nodes,
/// which stays exact for affine fields.
pub fn curl2d(v: &VectorField) -> ScalarField {
    let g = v.grid;
    let mut out = ScalarField::zeros(g, Loc::Node);
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let dv2dx = if i >= 1 && i <= g.nx - 1 {
                (v.v[g.iv(i, j)] - v.v[g.iv(i - 1, j)]) / g.dx
            } else if i == 0 {
                (v.v[g.iv(1, j)] - v.v[g.iv(0, j)]) / g.dx
            } else {
                (v.v[g.iv(g.nx - 1, j)] - v.v[g.iv(g.nx - 2, j)]) / g.dx
            };
            let du1dy = if j >= 1 && j <= g.ny - 1 {
                (v.u[g.iu(i, j)] - v.u[g.iu(i, j - 1)]) / g.dy
            } else if j == 0 {
                (v.u[g.iu(i, 1)] - v.u[g.iu(i, 0)]) / g.dy
            } else {
                (v.u[g.iu(i, g.ny - 1)] - v.u[g.iu(i, g.ny - 2)]) / g.dy
            };
            out.data[g.inode(i, j)] = dv2dx - du1dy;
        }
    }
    out
}

/// Perpendicular gradient of a node potential: B = (d2 psi, -d1 psi).
/// The discrete divergence of the result vanishes identically.
pub fn grad_perp(psi: &ScalarField) -> VectorField {
    assert_eq!(psi.loc, Loc::Node, "grad_perp expects a node field");
    let g = psi.grid;
    let mut out = VectorField::zeros(g);
    for j in 0..g.ny {
        for i in 0..=g.nx {
            out.u[g.iu(i, j)] =
                (psi.data[g.inode(i, j + 1)] - psi.data[g.inode(i, j)]) / g.dy;
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            out.v[g.iv(i, j)] =
                -(psi.data[g.inode(i + 1, j)] - psi.data[g.inode(i, j)]) / g.dx;
        }
    }
    out
}

/// Shear rate (D12 entry) at the nodes, one-sided at the boundary.
pub fn shear_at_nodes(u: &VectorField) -> ScalarField {
    let g = u.grid;
    let mut out = ScalarField::zeros(g, Loc::Node);
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let du1dy = if j >= 1 && j <= g.ny - 1 {
                (u.u[g.iu(i, j)] - u.u[g.iu(i, j - 1)]) / g.dy
            } else if j == 0 {
                (u.u[g.iu(i, 1)] - u.u[g.iu(i, 0)]) / g.dy
            } else {
                (u.u[g.iu(i, g.ny - 1)] - u.u[g.iu(i, g.ny - 2)]) / g.dy
            };
            let du2dx = if i >= 1 && i <= g.nx - 1 {
                (u.v[g.iv(i, j)] - u.v[g.iv(i - 1, j)]) / g.dx
            } else if i == 0 {
                (u.v[g.iv(1, j)] - u.v[g.iv(0, j)]) / g.dx
            } else {
                (u.v[g.iv(g.nx - 1, j)] - u.v[g.iv(g.nx - 2, j)]) / g.dx
            };
            out.data[g.inode(i, j)] = 0.5 * (du1dy + du2dx);
        }
    }
    out
}

/// Symmetric velocity gradient per cell; the off-diagonal entry is the
/// average of the four surrounding node shears.
pub fn symgrad(u: &VectorField) -> TensorField {
    let g = u.grid;
    let mut out = TensorField::zeros(g);
    let s = shear_at_nodes(u);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.ic(i, j);
            out.xx[c] = (u.u[g.iu(i + 1, j)] - u.u[g.iu(i, j)]) / g.dx;
            out.yy[c] = (u.v[g.iv(i, j + 1)] - u.v[g.iv(i, j)]) / g.dy;
            out.xy[c] = 0.25
                * (s.data[g.inode(i, j)]
                    + s.data[g.inode(i + 1, j)]
                    + s.data[g.inode(i, j + 1)]
                    + s.data[g.inode(i + 1, j + 1)]);
        }
    }
    out
}

/// Five-point Laplacian with no-flux walls, realized literally as div(grad f).
pub fn laplacian(f: &ScalarField) -> ScalarField {
    div(&grad(f))
}

/// Area-weighted inner product of two cell fields.
pub fn dot_scalar(a: &ScalarField, b: &ScalarField) -> f64 {
    assert_eq!(a.loc, b.loc);
    let mut s = 0.0;
    for (x, y) in a.data.iter().zip(b.data.iter()) {
        s += x * y;
    }
    s * a.grid.cell_area()
}

/// Area-weighted inner product of two face fields.
pub fn dot_vector(a: &VectorField, b: &VectorField) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.u.iter().zip(b.u.iter()) {
        s += x * y;
    }
    for (x, y) in a.v.iter().zip(b.v.iter()) {
        s += x * y;
    }
    s * a.grid.cell_area()
}

pub fn norm_scalar(a: &ScalarField) -> f64 {
    dot_scalar(a, a).sqrt()
}

pub fn norm_vector(a: &VectorField) -> f64 {
    dot_vector(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn grad_of_constant_vanishes() {
        let g = Grid::unit(8);
        let f = ScalarField::constant(g, Loc::Center, 5.0);
        assert_eq!(grad(&f).max_abs(), 0.0);
    }

    #[test]
    fn grad_exact_on_linear() {
        let g = Grid::unit(8);
        let f = ScalarField::from_fn(g, Loc::Center, |p| p[0]);
        let v = grad(&f);
        for j in 0..g.ny {
            for i in 1..g.nx {
                assert!((v.u[g.iu(i, j)] - 1.0).abs() < 1e-13);
            }
        }
        assert!(v.v.iter().all(|&x| x.abs() < 1e-13));
    }

    #[test]
    fn div_of_constant_and_linear() {
        let g = Grid::unit(8);
        let c = VectorField::from_fn(g, |_| [1.0, 1.0]);
        assert!(div(&c).max_abs() < 1e-13);
        let lin = VectorField::from_fn(g, |p| [p[0], p[1]]);
        let d = div(&lin);
        for v in &d.data {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn curl_exact_on_rotation() {
        let g = Grid::unit(8);
        let v = VectorField::from_fn(g, |p| [-p[1], p[0]]);
        let c = curl2d(&v);
        for x in &c.data {
            assert!((x - 2.0).abs() < 1e-12);
        }
        let v0 = VectorField::from_fn(g, |_| [0.7, -0.3]);
        assert!(curl2d(&v0).max_abs() < 1e-13);
    }

    #[test]
    fn grad_perp_linear_and_divfree() {
        let g = Grid::unit(8);
        let psi = ScalarField::from_fn(g, Loc::Node, |p| p[0]);
        let b = grad_perp(&psi);
        for x in &b.u {
            assert!(x.abs() < 1e-13);
        }
        for x in &b.v {
            assert!((x + 1.0).abs() < 1e-13);
        }
        let psi0 = ScalarField::constant(g, Loc::Node, 3.0);
        assert_eq!(grad_perp(&psi0).max_abs(), 0.0);
    }

    #[test]
    fn symgrad_rigid_and_shear() {
        let g = Grid::unit(8);
        let rot = VectorField::from_fn(g, |p| [-(p[1] - 0.5), p[0] - 0.5]);
        assert!(symgrad(&rot).max_abs() < 1e-12);
        let trans = VectorField::from_fn(g, |_| [0.4, -0.2]);
        assert!(symgrad(&trans).max_abs() < 1e-13);
        let sh = VectorField::from_fn(g, |p| [p[0], 0.0]);
        let t = symgrad(&sh);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = g.ic(i, j);
                assert!((t.xx[c] - 1.0).abs() < 1e-12);
                assert!(t.yy[c].abs() < 1e-13);
                assert!(t.xy[c].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_quadratic_interior() {
        let g = Grid::unit(16);
        let f = ScalarField::from_fn(g, Loc::Center, |p| p[0] * p[0] + p[1] * p[1]);
        let l = laplacian(&f);
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                assert!((l.data[g.ic(i, j)] - 4.0).abs() < 1e-10);
            }
        }
        let lin = ScalarField::from_fn(g, Loc::Center, |p| 2.0 * p[0] - p[1]);
        let ll = laplacian(&lin);
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                assert!(ll.data[g.ic(i, j)].abs() < 1e-10);
            }
        }
    }
}
