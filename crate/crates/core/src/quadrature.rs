//! Gauss-Legendre quadrature with nodes computed by Newton iteration on
//! the Legendre recurrence; exact for polynomials of degree 2n - 1.

/// Nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n
        let mut t = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, t);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, t);
        x[n - 1 - k] = t;
        w[n - 1 - k] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

/// P_n(t) and its derivative by the three-term recurrence.
fn legendre(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, dp)
}

/// Integral of f over [a, b] with Gauss-Legendre of the given order,
/// split into `panels` equal subintervals.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, order: usize, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(w.iter()) {
            s += wi * f(mid + half * xi);
        }
        total += s * half;
    }
    total
}

/// Tensor-product integral over [a1,b1] x [a2,b2].
pub fn integrate2<F: Fn(f64, f64) -> f64>(
    f: F,
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    order: usize,
    panels: usize,
) -> f64 {
    integrate(
        |x| integrate(|y| f(x, y), a2, b2, order, panels),
        a1,
        b1,
        order,
        panels,
    )
}
