//! Helpers shared between the integration suites: an independent dense
//! oracle for the induction solve, the dimensional/dimensionless twin-run
//! machinery, and small numeric utilities.

#![allow(dead_code)]

use mhdfsi::config;
use mhdfsi::field::{Loc, ScalarField, VectorField};
use mhdfsi::grid::Grid;
use mhdfsi::scheme::{step_coupled, MagneticState, SchemeParams};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

// --- dense induction oracle ----------------------------------------------

/// dense (n x n) matrix of minus the 5-point Laplacian with zero rows on
/// boundary nodes, assembled independently of the production stencil
pub fn dense_lap(g: Grid) -> Vec<Vec<f64>> {
    let n = g.n_nodes();
    let mut m = vec![vec![0.0; n]; n];
    let (ax, ay) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    for j in 1..g.ny {
        for i in 1..g.nx {
            let r = g.inode(i, j);
            m[r][r] = 2.0 * ax + 2.0 * ay;
            m[r][g.inode(i - 1, j)] = -ax;
            m[r][g.inode(i + 1, j)] = -ax;
            m[r][g.inode(i, j - 1)] = -ay;
            m[r][g.inode(i, j + 1)] = -ay;
        }
    }
    m
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(m, v)| m * v).sum()).collect()
}

/// plain LU with partial pivoting
pub fn lu_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        assert!(d.abs() > 1e-14, "singular system");
        for r in col + 1..n {
            let f = a[r][col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    x
}

pub fn random_magnetic_state(
    g: Grid,
    rng: &mut ChaCha8Rng,
) -> (MagneticState, VectorField, ScalarField) {
    let mut psi = ScalarField::zeros(g, Loc::Node);
    for j in 1..g.ny {
        for i in 1..g.nx {
            psi.data[g.inode(i, j)] = rng.gen_range(-1.0..1.0);
        }
    }
    let mut u = VectorField::zeros(g);
    for v in u.u.iter_mut().chain(u.v.iter_mut()) {
        *v = rng.gen_range(-0.5..0.5);
    }
    u.clamp_boundary();
    let mut jz = ScalarField::zeros(g, Loc::Node);
    for v in jz.data.iter_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    (MagneticState::new(psi, 0), u, jz)
}

/// independent reconstruction of the nodal electromotive scalar
pub fn dense_eprime(
    g: Grid,
    mag: &MagneticState,
    u: &VectorField,
    jz: &ScalarField,
    p: &SchemeParams,
) -> Vec<f64> {
    let b = mag.b();
    let mut e = vec![0.0; g.n_nodes()];
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let k = g.inode(i, j);
            e[k] = jz.data[k] / p.sigma;
            if i >= 1 && i < g.nx && j >= 1 && j < g.ny {
                let u1 = 0.5 * (u.u[g.iu(i, j - 1)] + u.u[g.iu(i, j)]);
                let u2 = 0.5 * (u.v[g.iv(i - 1, j)] + u.v[g.iv(i, j)]);
                let b1 = 0.5 * (b.u[g.iu(i, j - 1)] + b.u[g.iu(i, j)]);
                let b2 = 0.5 * (b.v[g.iv(i - 1, j)] + b.v[g.iv(i, j)]);
                e[k] += u1 * b2 - u2 * b1;
            }
        }
    }
    e
}

/// direct dense solve of the linear (eps = 0) induction system
pub fn dense_induction_solution(
    g: Grid,
    mag: &MagneticState,
    u: &VectorField,
    jz: &ScalarField,
    p: &SchemeParams,
) -> Vec<f64> {
    assert_eq!(p.eps, 0.0, "dense oracle covers the linear path only");
    let n = g.n_nodes();
    let l = dense_lap(g);
    let l2 = matmul(&l, &l);
    let boundary = |k: usize| {
        let i = k % (g.nx + 1);
        let j = k / (g.nx + 1);
        i == 0 || i == g.nx || j == 0 || j == g.ny
    };
    let mut a = vec![vec![0.0; n]; n];
    for r in 0..n {
        if boundary(r) {
            a[r][r] = 1.0;
        } else {
            for c in 0..n {
                a[r][c] = l[r][c] / p.dt + l2[r][c] / (p.sigma * p.mu);
            }
        }
    }
    let e = dense_eprime(g, mag, u, jz, p);
    let le = matvec(&l, &e);
    let lp = matvec(&l, &mag.psi.data);
    let rhs: Vec<f64> = (0..n)
        .map(|k| if boundary(k) { 0.0 } else { lp[k] / p.dt + le[k] })
        .collect();
    lu_solve(a, rhs)
}

// --- scale-covariance twin runs ------------------------------------------

pub struct CovarianceSetup {
    pub xbar: f64,
    pub tbar: f64,
    pub rhobar: f64,
    pub steps: usize,
}

impl Default for CovarianceSetup {
    fn default() -> Self {
        CovarianceSetup { xbar: 2.0, tbar: 4.0, rhobar: 2.0, steps: 20 }
    }
}

/// Run the 16^2 smoke problem dimensionally and nondimensionally; return
/// relative mismatches [rho, u, v, psi] after redimensionalization.
pub fn covariance_errors(setup: &CovarianceSetup) -> [f64; 4] {
    let (xbar, tbar, rhobar) = (setup.xbar, setup.tbar, setup.rhobar);
    let ubar = xbar / tbar;
    let (nu, a, gamma, mu, sigma, dt) = (0.2, 0.8, 2.0, 4.0, 1.0, 2e-3);
    let (gy, jz, psi_amp) = (-0.01, 0.05, 0.1);

    let dim = config::parse(&format!(
        "
[grid]
nx = 16
ny = 16
lx = {xbar}
ly = {xbar}
[params]
nu = {nu}
a = {a}
gamma = {gamma}
sigma = {sigma}
mu = {mu}
dt = {dt}
eps = 0.0
[initial]
rho0 = {rhobar}
psi_amp = {psi_amp}
[forces]
gy = {gy}
jz = {jz}
[run]
steps = {}
",
        setup.steps
    ))
    .unwrap();

    // alfven closure: Bbar^2 = mu rhobar ubar^2 makes mu' = 1, which also
    // fixes sigma' = sigma mu xbar^2/tbar and jbar = Bbar/(mu xbar)
    let bbar = (mu * rhobar * ubar * ubar).sqrt();
    let psibar = bbar * xbar;
    let nu_p = nu / (rhobar * ubar * xbar);
    let a_p = a * rhobar.powf(gamma - 1.0) / (ubar * ubar);
    let sigma_p = sigma * mu * xbar * xbar / tbar;
    let g_p = gy * tbar * tbar / xbar;
    let jz_p = jz / (bbar / (mu * xbar));
    let psi_p = psi_amp / psibar;
    let dt_p = dt / tbar;
    let nd = config::parse(&format!(
        "
[grid]
nx = 16
ny = 16
lx = 1.0
ly = 1.0
[params]
nu = {nu_p}
a = {a_p}
gamma = {gamma}
sigma = {sigma_p}
mu = 1.0
dt = {dt_p}
eps = 0.0
[initial]
rho0 = 1.0
psi_amp = {psi_p}
[forces]
gy = {g_p}
jz = {jz_p}
[run]
steps = {}
",
        setup.steps
    ))
    .unwrap();

    let (mut mech_d, mut mag_d, jz_d) = dim.build_states().unwrap();
    let (mut mech_n, mut mag_n, jz_n) = nd.build_states().unwrap();
    for _ in 0..setup.steps {
        let (m, g, _) = step_coupled(&mech_d, &mag_d, &dim.params, [0.0, gy], &jz_d).unwrap();
        mech_d = m;
        mag_d = g;
        let (m, g, _) = step_coupled(&mech_n, &mag_n, &nd.params, [0.0, g_p], &jz_n).unwrap();
        mech_n = m;
        mag_n = g;
    }

    let rel = |d: &[f64], n: &[f64], scale: f64| -> f64 {
        let num: f64 = d
            .iter()
            .zip(n)
            .map(|(x, y)| (x - scale * y) * (x - scale * y))
            .sum::<f64>()
            .sqrt();
        let den: f64 = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        num / den.max(1e-300)
    };
    [
        rel(&mech_d.rho.data, &mech_n.rho.data, rhobar),
        rel(&mech_d.u.u, &mech_n.u.u, ubar),
        rel(&mech_d.u.v, &mech_n.u.v, ubar),
        rel(&mag_d.psi.data, &mag_n.psi.data, psibar),
    ]
}
