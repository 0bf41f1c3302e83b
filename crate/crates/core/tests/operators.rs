//! Refinement study for the staggered operators: interior truncation
//! errors must shrink at second order, discrete adjointness must hold to
//! roundoff, and affine fields must be differentiated exactly.

use mhdfsi::field::{Loc, ScalarField, VectorField};
use mhdfsi::grid::Grid;
use mhdfsi::ops;

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

// smooth periodic-free test function and its derivatives
fn f(p: [f64; 2]) -> f64 {
    (1.3 * p[0] + 0.4).sin() * (1.7 * p[1] - 0.2).cos()
}
fn fx(p: [f64; 2]) -> f64 {
    1.3 * (1.3 * p[0] + 0.4).cos() * (1.7 * p[1] - 0.2).cos()
}
fn fy(p: [f64; 2]) -> f64 {
    -1.7 * (1.3 * p[0] + 0.4).sin() * (1.7 * p[1] - 0.2).sin()
}

fn grad_error(n: usize) -> f64 {
    let g = Grid::unit(n);
    let s = ScalarField::from_fn(g, Loc::Center, f);
    let gf = ops::grad(&s);
    let mut emax: f64 = 0.0;
    // interior faces only: boundary faces are pinned to zero by design
    for j in 0..g.ny {
        for i in 1..g.nx {
            emax = emax.max((gf.u[g.iu(i, j)] - fx(g.uface_pos(i, j))).abs());
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            emax = emax.max((gf.v[g.iv(i, j)] - fy(g.vface_pos(i, j))).abs());
        }
    }
    emax
}

fn div_error(n: usize) -> f64 {
    let g = Grid::unit(n);
    let u = VectorField::from_fn(g, |p| [f(p), f([p[1], p[0]])]);
    let d = ops::div(&u);
    let mut emax: f64 = 0.0;
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let p = g.cell_center(i, j);
            // u = (f(x,y), f(y,x)): div = f_x(x,y) + d/dy f(y,x) = f_x(x,y) + f_x(y,x)
            let exact = fx(p) + fx([p[1], p[0]]);
            emax = emax.max((d.data[g.ic(i, j)] - exact).abs());
        }
    }
    emax
}

fn curl_error(n: usize) -> f64 {
    let g = Grid::unit(n);
    let u = VectorField::from_fn(g, |p| [f(p), 2.0 * f([p[1], p[0]])]);
    let c = ops::curl2d(&u);
    let mut emax: f64 = 0.0;
    for j in 1..g.ny {
        for i in 1..g.nx {
            let p = g.node_pos(i, j);
            // u = (f(x,y), 2 f(y,x)): curl = 2 d/dx f(y,x) - f_y(x,y)
            let exact = 2.0 * fy([p[1], p[0]]) - fy(p);
            emax = emax.max((c.data[g.inode(i, j)] - exact).abs());
        }
    }
    emax
}

fn laplacian_error(n: usize) -> f64 {
    let g = Grid::unit(n);
    let s = ScalarField::from_fn(g, Loc::Center, f);
    let l = ops::laplacian(&s);
    let mut emax: f64 = 0.0;
    for j in 2..g.ny - 2 {
        for i in 2..g.nx - 2 {
            let p = g.cell_center(i, j);
            let exact = -(1.3f64 * 1.3 + 1.7 * 1.7) * f(p);
            emax = emax.max((l.data[g.ic(i, j)] - exact).abs());
        }
    }
    emax
}

fn check_second_order(name: &str, err: impl Fn(usize) -> f64) {
    let ns = [16usize, 32, 64, 128];
    let hs: Vec<f64> = ns.iter().map(|&n| (1.0 / n as f64).ln()).collect();
    let es: Vec<f64> = ns.iter().map(|&n| err(n).ln()).collect();
    let slope = fit_slope(&hs, &es);
    assert!(
        (slope - 2.0).abs() <= 0.2,
        "{name}: refinement slope {slope:.3} outside 2.0 +/- 0.2"
    );
}

#[test]
fn gradient_is_second_order() {
    check_second_order("grad", grad_error);
}

#[test]
fn divergence_is_second_order() {
    check_second_order("div", div_error);
}

#[test]
fn curl_is_second_order() {
    check_second_order("curl", curl_error);
}

#[test]
fn laplacian_is_second_order() {
    check_second_order("laplacian", laplacian_error);
}

#[test]
fn grad_div_adjointness() {
    // <grad s, u> = -<s, div u> for u vanishing on boundary faces
    let g = Grid::unit(24);
    let s = ScalarField::from_fn(g, Loc::Center, f);
    let mut u = VectorField::from_fn(g, |p| [f([p[1], p[0]]), f(p) * 0.7]);
    u.clamp_boundary();
    let lhs = ops::dot_vector(&ops::grad(&s), &u);
    let rhs = -ops::dot_scalar(&s, &ops::div(&u));
    assert!(
        (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0),
        "adjointness violated: {lhs} vs {rhs}"
    );
}

#[test]
fn affine_fields_are_exact() {
    let g = Grid::unit(19);
    let s = ScalarField::from_fn(g, Loc::Center, |p| 2.0 * p[0] - 3.0 * p[1] + 0.5);
    let gf = ops::grad(&s);
    for j in 0..g.ny {
        for i in 1..g.nx {
            assert!((gf.u[g.iu(i, j)] - 2.0).abs() < 1e-13);
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            assert!((gf.v[g.iv(i, j)] + 3.0).abs() < 1e-13);
        }
    }
    let u = VectorField::from_fn(g, |p| [0.3 * p[0] + p[1], -0.2 * p[1] + 2.0 * p[0]]);
    let d = ops::div(&u);
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            assert!((d.data[g.ic(i, j)] - 0.1).abs() < 1e-13);
        }
    }
}

#[test]
fn grad_perp_is_divergence_free() {
    let g = Grid::unit(40);
    let psi = ScalarField::from_fn(g, Loc::Node, |p| {
        (3.1 * p[0]).sin() * (2.4 * p[1]).cos() + p[0] * p[1]
    });
    let b = ops::grad_perp(&psi);
    assert!(ops::div(&b).max_abs() <= 1e-12);
}
