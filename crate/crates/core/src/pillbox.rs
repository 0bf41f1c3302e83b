//! Interface pill-box checks: circulation over a curved rectangle
//! straddling an interface, flux over a curved cylinder, and the defects
//! of the first-order jump estimates, which must vanish linearly in the
//! geometry size.
//!
//! Coordinates are (theta, zeta, eta): the interface is the graph
//! zeta = phi(theta) (rectangle, eta = 0 plane) or zeta = Phi(theta, eta)
//! (cylinder). Jumps across the interface are modeled by smooth thin
//! layers; the distributional limit is probed by shrinking the layer
//! thickness along with the geometry, never by evaluating an actual
//! discontinuity.

use crate::quadrature::integrate;
#[cfg(test)]
use crate::quadrature::gauss_legendre;

pub type Vec3 = [f64; 3];

pub struct CurvedRectangle {
    pub phi: Box<dyn Fn(f64) -> f64>,
    /// analytic derivative of phi, supplied by the author so rate studies
    /// carry no differencing noise
    pub dphi: Box<dyn Fn(f64) -> f64>,
    pub ds: f64,
    pub dl: f64,
}

impl CurvedRectangle {
    pub fn new(
        phi: impl Fn(f64) -> f64 + 'static,
        dphi: impl Fn(f64) -> f64 + 'static,
        ds: f64,
        dl: f64,
    ) -> Self {
        assert!(ds > 0.0 && dl > 0.0);
        let r = CurvedRectangle { phi: Box::new(phi), dphi: Box::new(dphi), ds, dl };
        debug_assert!((r.phi)(0.0).abs() < 1e-14 && (r.dphi)(0.0).abs() < 1e-14);
        r
    }

    pub fn flat(ds: f64, dl: f64) -> Self {
        CurvedRectangle::new(|_| 0.0, |_| 0.0, ds, dl)
    }
}

pub struct CurvedCylinder {
    pub phi: Box<dyn Fn(f64, f64) -> f64>,
    pub d1: Box<dyn Fn(f64, f64) -> f64>,
    pub d2: Box<dyn Fn(f64, f64) -> f64>,
    pub r: f64,
    pub dl: f64,
}

impl CurvedCylinder {
    pub fn new(
        phi: impl Fn(f64, f64) -> f64 + 'static,
        d1: impl Fn(f64, f64) -> f64 + 'static,
        d2: impl Fn(f64, f64) -> f64 + 'static,
        r: f64,
        dl: f64,
    ) -> Self {
        assert!(r > 0.0 && dl > 0.0);
        let c = CurvedCylinder {
            phi: Box::new(phi),
            d1: Box::new(d1),
            d2: Box::new(d2),
            r,
            dl,
        };
        debug_assert!((c.phi)(0.0, 0.0).abs() < 1e-14);
        c
    }

    pub fn flat(r: f64, dl: f64) -> Self {
        CurvedCylinder::new(|_, _| 0.0, |_, _| 0.0, |_, _| 0.0, r, dl)
    }
}

pub const DEFAULT_ORDER: usize = 16;
pub const DEFAULT_PANELS: usize = 8;

/// Counterclockwise line integral of H over the boundary of the curved
/// rectangle: lower curve left-to-right, right edge upward, upper curve
/// right-to-left, left edge downward.
pub fn circulation(
    h: &dyn Fn(Vec3) -> Vec3,
    rect: &CurvedRectangle,
    order: usize,
    panels: usize,
) -> f64 {
    let (ds, dl) = (rect.ds, rect.dl);
    let lower = integrate(
        |t| {
            let v = h([t, (rect.phi)(t) - dl, 0.0]);
            v[0] + v[1] * (rect.dphi)(t)
        },
        -ds,
        ds,
        order,
        panels,
    );
    let upper = integrate(
        |t| {
            let v = h([t, (rect.phi)(t) + dl, 0.0]);
            v[0] + v[1] * (rect.dphi)(t)
        },
        -ds,
        ds,
        order,
        panels,
    );
    let right = integrate(
        |z| h([ds, z, 0.0])[1],
        (rect.phi)(ds) - dl,
        (rect.phi)(ds) + dl,
        order,
        panels,
    );
    let left = integrate(
        |z| h([-ds, z, 0.0])[1],
        (rect.phi)(-ds) - dl,
        (rect.phi)(-ds) + dl,
        order,
        panels,
    );
    lower + right - upper - left
}

/// Current through the curved rectangle: the out-of-plane component of j
/// integrated between the two shifted interface curves.
pub fn current(
    j: &dyn Fn(Vec3) -> Vec3,
    rect: &CurvedRectangle,
    order: usize,
    panels: usize,
) -> f64 {
    integrate(
        |t| {
            let base = (rect.phi)(t);
            integrate(
                |z| j([t, z, 0.0])[2],
                base - rect.dl,
                base + rect.dl,
                order,
                panels,
            )
        },
        -rect.ds,
        rect.ds,
        order,
        panels,
    )
}

/// Defect of the tangential estimate: with tau = (-1, 0, 0),
/// | tau.H(0, dl, 0) - tau.H(0, -dl, 0) - K / (2 ds) |, K the enclosed
/// current. Vanishes like (ds + dl) whenever the tangential jump of H
/// matches the concentrated current.
pub fn tangential_defect(
    h: &dyn Fn(Vec3) -> Vec3,
    j: &dyn Fn(Vec3) -> Vec3,
    rect: &CurvedRectangle,
    order: usize,
    panels: usize,
) -> f64 {
    let above = h([0.0, rect.dl, 0.0]);
    let below = h([0.0, -rect.dl, 0.0]);
    let k = current(j, rect, order, panels);
    ((-above[0]) - (-below[0]) - k / (2.0 * rect.ds)).abs()
}

/// Outward flux of D over the curved cylinder: curved top and bottom
/// disks plus the straight side wall, using the analytic surface elements
/// s (-d1, 1, -d2), s (d1, -1, d2), and r (cos a, 0, sin a).
pub fn flux(
    d: &dyn Fn(Vec3) -> Vec3,
    cyl: &CurvedCylinder,
    order: usize,
    panels: usize,
) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let caps = integrate(
        |a| {
            let (ca, sa) = (a.cos(), a.sin());
            integrate(
                |s| {
                    let (x, y) = (s * ca, s * sa);
                    let base = (cyl.phi)(x, y);
                    let (p1, p2) = ((cyl.d1)(x, y), (cyl.d2)(x, y));
                    let top = d([x, base + cyl.dl, y]);
                    let bot = d([x, base - cyl.dl, y]);
                    s * ((-p1 * top[0] + top[1] - p2 * top[2])
                        + (p1 * bot[0] - bot[1] + p2 * bot[2]))
                },
                0.0,
                cyl.r,
                order,
                panels,
            )
        },
        0.0,
        two_pi,
        order,
        panels,
    );
    let side = integrate(
        |a| {
            let (ca, sa) = (a.cos(), a.sin());
            let (x, y) = (cyl.r * ca, cyl.r * sa);
            let base = (cyl.phi)(x, y);
            integrate(
                |z| {
                    let v = d([x, z, y]);
                    cyl.r * (v[0] * ca + v[2] * sa)
                },
                base - cyl.dl,
                base + cyl.dl,
                order,
                panels,
            )
        },
        0.0,
        two_pi,
        order,
        panels,
    );
    caps + side
}

/// Charge inside the curved cylinder.
pub fn charge(
    rhoc: &dyn Fn(Vec3) -> f64,
    cyl: &CurvedCylinder,
    order: usize,
    panels: usize,
) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    integrate(
        |a| {
            let (ca, sa) = (a.cos(), a.sin());
            integrate(
                |s| {
                    let (x, y) = (s * ca, s * sa);
                    let base = (cyl.phi)(x, y);
                    s * integrate(
                        |z| rhoc([x, z, y]),
                        base - cyl.dl,
                        base + cyl.dl,
                        order,
                        panels,
                    )
                },
                0.0,
                cyl.r,
                order,
                panels,
            )
        },
        0.0,
        two_pi,
        order,
        panels,
    )
}

/// Defect of the normal estimate: along the axis, the jump of the normal
/// component of D against the cylinder-averaged charge,
/// | (D2(0, dl, 0) - D2(0, -dl, 0)) - W / (pi r^2) |. The normal in the
/// axis difference is the bottom-outward one, which pairs the sign of the
/// jump with the sign of the averaged flux. Vanishes like (r + dl) for
/// matched jumps.
pub fn normal_defect(
    d: &dyn Fn(Vec3) -> Vec3,
    rhoc: &dyn Fn(Vec3) -> f64,
    cyl: &CurvedCylinder,
    order: usize,
    panels: usize,
) -> f64 {
    let above = d([0.0, cyl.dl, 0.0]);
    let below = d([0.0, -cyl.dl, 0.0]);
    let w = charge(rhoc, cyl, order, panels);
    ((above[1] - below[1]) - w / (std::f64::consts::PI * cyl.r * cyl.r)).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateResult {
    IdenticallySatisfied,
    Slope(f64),
}

/// Least-squares slope of log(defect) against log(size). Requires at
/// least four sizes; defects uniformly below 1e-12 short-circuit to
/// "identically satisfied".
pub fn rate_study(sizes: &[f64], defects: &[f64]) -> RateResult {
    assert!(sizes.len() >= 4 && sizes.len() == defects.len());
    if defects.iter().all(|&d| d < 1e-12) {
        return RateResult::IdenticallySatisfied;
    }
    let xs: Vec<f64> = sizes.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = defects.iter().map(|d| d.max(1e-300).ln()).collect();
    RateResult::Slope(fit_slope(&xs, &ys))
}

pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// The constructed tangential-jump pair: H carries a tanh layer of height
/// `jump` across the interface plus a rotational part, and j is exactly
/// curl H, so the interface condition holds with a concentrated sheet in
/// the thin-layer limit.
pub fn tangential_jump_fields(
    phi: impl Fn(f64) -> f64 + Copy + 'static,
    jump: f64,
    thickness: f64,
) -> (impl Fn(Vec3) -> Vec3, impl Fn(Vec3) -> Vec3) {
    let h = move |p: Vec3| -> Vec3 {
        let d = p[1] - phi(p[0]);
        [0.5 * jump * (d / thickness).tanh(), p[0], 0.0]
    };
    let j = move |p: Vec3| -> Vec3 {
        let d = p[1] - phi(p[0]);
        let sech2 = 1.0 / (d / thickness).cosh().powi(2);
        [0.0, 0.0, 1.0 - 0.5 * jump / thickness * sech2]
    };
    (h, j)
}

/// The constructed normal-jump pair: D2 jumps by `jump` across the
/// interface through a tanh layer and additionally grows linearly along
/// theta; rhoc is exactly div D.
pub fn normal_jump_fields(
    phi: impl Fn(f64, f64) -> f64 + Copy + 'static,
    jump: f64,
    thickness: f64,
) -> (impl Fn(Vec3) -> Vec3, impl Fn(Vec3) -> f64) {
    let d = move |p: Vec3| -> Vec3 {
        let dist = p[1] - phi(p[0], p[2]);
        [p[0], 0.5 * jump * (dist / thickness).tanh(), 0.0]
    };
    let rhoc = move |p: Vec3| -> f64 {
        let dist = p[1] - phi(p[0], p[2]);
        let sech2 = 1.0 / (dist / thickness).cosh().powi(2);
        1.0 + 0.5 * jump / thickness * sech2
    };
    (d, rhoc)
}
