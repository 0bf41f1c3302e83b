//! Characteristic scales, the closure relations tying them together, and
//! the checks behind dropping the displacement current.
//!
//! The electromagnetic scales follow from three primary inputs (length,
//! time, magnetic flux density) plus the material constants; mechanical
//! scales for density, pressure, and gravity have no closure relation and
//! stay user-supplied, flagged as such in reports.

use crate::error::{Result, SimError};
use crate::field::ScalarField;

pub const MU0: f64 = 1.256_637_062_12e-6;
pub const EPS0: f64 = 8.854_187_812_8e-12;

#[derive(Debug, Clone, Copy)]
pub struct MaterialConstants {
    pub mu0: f64,
    pub eps0: f64,
    pub mur: f64,
    pub epsr: f64,
    pub sigma: f64,
}

impl Default for MaterialConstants {
    fn default() -> Self {
        MaterialConstants { mu0: MU0, eps0: EPS0, mur: 1.0, epsr: 1.0, sigma: 1.0 }
    }
}

impl MaterialConstants {
    pub fn mu_f(&self) -> f64 {
        self.mu0 * self.mur
    }
    pub fn eps_f(&self) -> f64 {
        self.eps0 * self.epsr
    }
    pub fn light_speed(&self) -> f64 {
        1.0 / (self.mu0 * self.eps0).sqrt()
    }
}

/// Which triple of scales is prescribed; both closures normalize to the
/// same complete set.
#[derive(Debug, Clone, Copy)]
pub enum ScaleClosure {
    /// (length, time, flux density)
    Primary { xbar: f64, tbar: f64, bbar: f64 },
    /// (length, velocity, current density)
    Alternate { xbar: f64, ubar: f64, jbar: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct CharacteristicScales {
    pub xbar: f64,
    pub tbar: f64,
    pub ubar: f64,
    pub bbar: f64,
    pub ebar: f64,
    pub hbar: f64,
    pub dbar: f64,
    pub jbar: f64,
    pub rhocbar: f64,
    /// unconstrained mechanical scales; None = not provided
    pub rhobar: Option<f64>,
    pub pbar: Option<f64>,
    pub gbar: Option<f64>,
    pub material: MaterialConstants,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Marginal,
    Violated,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Marginal => "marginal",
            Verdict::Violated => "violated",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ApproximationReport {
    pub ratio_u_c: f64,
    pub displacement_ratio: f64,
    pub murepsr: f64,
    pub speed_verdict: Verdict,
    pub material_verdict: Verdict,
}

#[derive(Debug, Clone, Copy)]
pub struct Thresholds {
    pub speed_holds: f64,
    pub speed_marginal: f64,
    pub material_holds: f64,
    pub material_marginal: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            speed_holds: 1e-3,
            speed_marginal: 1e-1,
            material_holds: 0.05,
            material_marginal: 0.2,
        }
    }
}

/// Derive the full scale set from a prescribed triple. Electric field
/// scale is B x / t, current scale B / (mu x), charge scale eps u B / x;
/// the consistency E/B = u then holds by construction.
pub fn close_scales(
    closure: ScaleClosure,
    material: MaterialConstants,
    rhobar: Option<f64>,
    pbar: Option<f64>,
    gbar: Option<f64>,
) -> Result<CharacteristicScales> {
    let (xbar, tbar, bbar) = match closure {
        ScaleClosure::Primary { xbar, tbar, bbar } => (xbar, tbar, bbar),
        ScaleClosure::Alternate { xbar, ubar, jbar } => {
            if !(xbar > 0.0 && ubar > 0.0 && jbar > 0.0) {
                return Err(SimError::Config(vec![
                    "characteristic scales must be positive".into(),
                ]));
            }
            (xbar, xbar / ubar, jbar * material.mu_f() * xbar)
        }
    };
    if !(xbar > 0.0 && tbar > 0.0 && bbar > 0.0) {
        return Err(SimError::Config(vec![
            "characteristic scales must be positive".into(),
        ]));
    }
    if !(material.mu0 > 0.0 && material.eps0 > 0.0 && material.mur > 0.0 && material.epsr > 0.0)
    {
        return Err(SimError::Config(vec![
            "material constants must be positive".into(),
        ]));
    }
    let ubar = xbar / tbar;
    let ebar = bbar * xbar / tbar;
    let jbar = bbar / (material.mu_f() * xbar);
    let rhocbar = material.eps_f() * ubar * bbar / xbar;
    let hbar = bbar / material.mu_f();
    let dbar = material.eps_f() * ebar;
    Ok(CharacteristicScales {
        xbar,
        tbar,
        ubar,
        bbar,
        ebar,
        hbar,
        dbar,
        jbar,
        rhocbar,
        rhobar,
        pbar,
        gbar,
        material,
    })
}

/// The ratio u/c squared: the prefactor of the dropped displacement-
/// current term. Kept as a single expression so the report invariant
/// (displacement ratio = (u/c)^2 exactly) is literal.
pub fn displacement_current_ratio(s: &CharacteristicScales) -> f64 {
    let r = s.ubar / s.material.light_speed();
    r * r
}

pub fn check_assumptions(s: &CharacteristicScales, th: Thresholds) -> ApproximationReport {
    let ratio = s.ubar / s.material.light_speed();
    let murepsr = s.material.mur * s.material.epsr;
    let speed_verdict = if ratio <= th.speed_holds {
        Verdict::Holds
    } else if ratio <= th.speed_marginal {
        Verdict::Marginal
    } else {
        Verdict::Violated
    };
    let dev = (murepsr - 1.0).abs();
    let material_verdict = if dev <= th.material_holds {
        Verdict::Holds
    } else if dev <= th.material_marginal {
        Verdict::Marginal
    } else {
        Verdict::Violated
    };
    ApproximationReport {
        ratio_u_c: ratio,
        displacement_ratio: displacement_current_ratio(s),
        murepsr,
        speed_verdict,
        material_verdict,
    }
}

/// Physical quantity kinds with a defined characteristic scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Density,
    Velocity,
    Pressure,
    Gravity,
    FluxDensity,
    MagneticPotential,
    CurrentDensity,
    ElectricField,
    ChargeDensity,
}

pub fn scale_of(s: &CharacteristicScales, q: Quantity) -> Result<f64> {
    let missing = |name: &str| {
        SimError::Config(vec![format!(
            "no characteristic scale available for {name} (unconstrained by the closure relations; supply it explicitly)"
        )])
    };
    Ok(match q {
        Quantity::Density => s.rhobar.ok_or_else(|| missing("density"))?,
        Quantity::Velocity => s.ubar,
        Quantity::Pressure => s.pbar.ok_or_else(|| missing("pressure"))?,
        Quantity::Gravity => s.gbar.ok_or_else(|| missing("gravity"))?,
        Quantity::FluxDensity => s.bbar,
        // psi = integral of B over length
        Quantity::MagneticPotential => s.bbar * s.xbar,
        Quantity::CurrentDensity => s.jbar,
        Quantity::ElectricField => s.ebar,
        Quantity::ChargeDensity => s.rhocbar,
    })
}

pub fn nondimensionalize(
    field: &ScalarField,
    s: &CharacteristicScales,
    q: Quantity,
) -> Result<ScalarField> {
    let sc = scale_of(s, q)?;
    let mut out = field.clone();
    for v in out.data.iter_mut() {
        *v /= sc;
    }
    Ok(out)
}

pub fn redimensionalize(
    field: &ScalarField,
    s: &CharacteristicScales,
    q: Quantity,
) -> Result<ScalarField> {
    let sc = scale_of(s, q)?;
    let mut out = field.clone();
    for v in out.data.iter_mut() {
        *v *= sc;
    }
    Ok(out)
}

/// Structured text report (key: value lines) for the CLI and metadata.
pub fn report_text(s: &CharacteristicScales, rep: &ApproximationReport) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(": ");
        out.push_str(&v);
        out.push('\n');
    };
    kv("xbar", format!("{:.17e}", s.xbar));
    kv("tbar", format!("{:.17e}", s.tbar));
    kv("ubar", format!("{:.17e}", s.ubar));
    kv("Bbar", format!("{:.17e}", s.bbar));
    kv("Ebar", format!("{:.17e}", s.ebar));
    kv("Hbar", format!("{:.17e}", s.hbar));
    kv("Dbar", format!("{:.17e}", s.dbar));
    kv("jbar", format!("{:.17e}", s.jbar));
    kv("rhocbar", format!("{:.17e}", s.rhocbar));
    kv(
        "rhobar",
        s.rhobar.map_or("unconstrained by closure".into(), |v| format!("{v:.17e}")),
    );
    kv(
        "pbar",
        s.pbar.map_or("unconstrained by closure".into(), |v| format!("{v:.17e}")),
    );
    kv(
        "gbar",
        s.gbar.map_or("unconstrained by closure".into(), |v| format!("{v:.17e}")),
    );
    kv("light_speed", format!("{:.17e}", s.material.light_speed()));
    kv("ratio_u_c", format!("{:.17e}", rep.ratio_u_c));
    kv("displacement_ratio", format!("{:.17e}", rep.displacement_ratio));
    kv("mur_epsr", format!("{:.17e}", rep.murepsr));
    kv("speed_assumption", rep.speed_verdict.to_string());
    kv("material_assumption", rep.material_verdict.to_string());
    out
}
