//! Matrix-free preconditioned conjugate gradient.
//!
//! Every implicit stage of the scheme (viscous solve, density diffusion,
//! stream-function update) is assembled only as a linear map, so one CG
//! driver with a diagonal preconditioner covers all of them. Reductions
//! are sequential, which keeps repeated runs bit-identical.

use crate::error::{Result, SimError};

pub struct CgReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Solves A x = b for symmetric positive definite A given as a closure.
/// `precond` applies the inverse of an SPD preconditioner (identity is fine).
/// Converges when ||r|| <= tol * max(||b||, 1e-300); errors out otherwise.
pub fn pcg<A, M>(
    apply: A,
    precond: M,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    label: &str,
) -> Result<CgReport>
where
    A: Fn(&[f64], &mut [f64]),
    M: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    assert_eq!(x.len(), n);
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];

    apply(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    let bnorm = norm(b).max(1e-300);
    let mut rnorm = norm(&r);
    if rnorm <= tol * bnorm {
        return Ok(CgReport { iterations: 0, residual: rnorm });
    }
    precond(&r, &mut z);
    p.copy_from_slice(&z);
    let mut rz = dot(&r, &z);

    for k in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(SimError::Solver(format!(
                "{label}: cg detected an indefinite operator (p.Ap = {pap:e})"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = norm(&r);
        if rnorm <= tol * bnorm {
            return Ok(CgReport { iterations: k, residual: rnorm });
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SimError::Solver(format!(
        "{label}: cg failed to reach tol {tol:e} in {max_iter} iterations \
         (residual {rnorm:e}, rhs norm {bnorm:e})"
    )))
}

/// Diagonal of a linear map probed with a unit vector at `probe`, assumed
/// representative of the whole diagonal (true for constant-coefficient
/// stencils away from the boundary). Used to build a cheap Jacobi scaling.
pub fn probe_diagonal<A>(apply: A, n: usize, probe: usize) -> f64
where
    A: Fn(&[f64], &mut [f64]),
{
    let mut e = vec![0.0; n];
    let mut out = vec![0.0; n];
    e[probe] = 1.0;
    apply(&e, &mut out);
    let d = out[probe];
    if d > 0.0 {
        d
    } else {
        1.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(x: &[f64], y: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let mut v = 2.0 * x[i];
            if i > 0 {
                v -= x[i - 1];
            }
            if i + 1 < n {
                v -= x[i + 1];
            }
            y[i] = v + 0.1 * x[i];
        }
    }

    #[test]
    fn solves_tridiagonal_system() {
        let n = 64;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        tridiag(&xs, &mut b);
        let mut x = vec![0.0; n];
        let rep = pcg(tridiag, |r, z| z.copy_from_slice(r), &b, &mut x, 1e-12, 10 * n, "test")
            .unwrap();
        assert!(rep.iterations > 0);
        for i in 0..n {
            assert!((x[i] - xs[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_indefinite_operator() {
        let neg = |x: &[f64], y: &mut [f64]| {
            for i in 0..x.len() {
                y[i] = -x[i];
            }
        };
        let b = vec![1.0; 8];
        let mut x = vec![0.0; 8];
        let err = pcg(neg, |r, z| z.copy_from_slice(r), &b, &mut x, 1e-10, 80, "neg");
        assert!(matches!(err, Err(SimError::Solver(_))));
    }

    #[test]
    fn zero_rhs_returns_immediately() {
        let b = vec![0.0; 8];
        let mut x = vec![0.0; 8];
        let rep = pcg(tridiag, |r, z| z.copy_from_slice(r), &b, &mut x, 1e-10, 80, "z").unwrap();
        assert_eq!(rep.iterations, 0);
    }
}
