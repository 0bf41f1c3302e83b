//! Per-step energy accounting: kinetic, internal, artificial, magnetic
//! energies, dissipation, sources, regularizer contributions, and the
//! inequality slack
//!
//!   slack = E(after) + dt * dissipation(after) - E(before) - dt * sources(after),
//!
//! which stays below a small multiple of the initial energy whenever the
//! discrete estimates close. The quadratic forms here are byte-for-byte
//! the ones used inside the solves, so no re-discretization error enters
//! the slack.

use crate::error::{Result, SimError};
use crate::field::ScalarField;
use crate::ops;
use crate::scheme::{
    face_density, lap_node, rigidity_residuals, InductionTally, MagneticState, MechTally,
    MechanicalState, SchemeParams, ViscousOp,
};

#[derive(Debug, Clone)]
pub struct EnergyLedger {
    pub time: f64,
    pub kinetic: f64,
    pub internal: f64,
    pub artificial: f64,
    pub magnetic: f64,
    pub dissipation: f64,
    pub sources: f64,
    pub regularizers: f64,
    pub slack: f64,
    pub mass: f64,
    pub div_b_inf: f64,
    pub rigidity: Vec<f64>,
    pub body_poses: Vec<(f64, f64, f64, f64, f64, f64)>, // x, y, angle, vx, vy, w
    pub picard_fallback: bool,
}

impl EnergyLedger {
    pub fn total_energy(&self) -> f64 {
        self.kinetic + self.internal + self.artificial + self.magnetic
    }
}

pub fn kinetic_energy(mech: &MechanicalState) -> f64 {
    let g = mech.rho.grid;
    let da = g.cell_area();
    let rf = face_density(&mech.rho);
    let mut e = 0.0;
    for (u, r) in mech.u.u.iter().zip(rf.u.iter()) {
        e += 0.5 * r * u * u;
    }
    for (v, r) in mech.u.v.iter().zip(rf.v.iter()) {
        e += 0.5 * r * v * v;
    }
    e * da
}

pub fn internal_energy(rho: &ScalarField, a: f64, gamma: f64) -> f64 {
    let da = rho.grid.cell_area();
    rho.data.iter().map(|r| a / (gamma - 1.0) * r.powf(gamma)).sum::<f64>() * da
}

/// (1/(2 mu)) integral of |B|^2, evaluated through the node potential: the
/// face sum of |grad_perp psi|^2 telescopes exactly to psi . L psi.
pub fn magnetic_energy(mag: &MagneticState, mu: f64) -> f64 {
    let da = mag.psi.grid.cell_area();
    let l = lap_node(&mag.psi);
    let mut e = 0.0;
    for (p, lp) in mag.psi.data.iter().zip(l.data.iter()) {
        e += p * lp;
    }
    e * da / (2.0 * mu)
}

pub fn total_mass(rho: &ScalarField) -> f64 {
    rho.data.iter().sum::<f64>() * rho.grid.cell_area()
}

pub fn div_b_inf(mag: &MagneticState) -> f64 {
    ops::div(&mag.b()).max_abs()
}

fn body_poses(mech: &MechanicalState) -> Vec<(f64, f64, f64, f64, f64, f64)> {
    mech.bodies
        .iter()
        .map(|b| {
            let ang = b.pose.rot[1][0].atan2(b.pose.rot[0][0]);
            (b.pose.trans[0], b.pose.trans[1], ang, b.v[0], b.v[1], b.w)
        })
        .collect()
}

/// Ledger from the stepper's own tallies (exact pairing with the solves).
pub fn assemble(
    before_mech: &MechanicalState,
    before_mag: &MagneticState,
    after_mech: &MechanicalState,
    after_mag: &MagneticState,
    params: &SchemeParams,
    mech_tally: &MechTally,
    ind_tally: &InductionTally,
) -> EnergyLedger {
    let e_before = kinetic_energy(before_mech)
        + internal_energy(&before_mech.rho, params.a, params.gamma)
        + internal_energy(&before_mech.rho, params.alpha, params.beta)
        + magnetic_energy(before_mag, params.mu);
    let kinetic = kinetic_energy(after_mech);
    let internal = internal_energy(&after_mech.rho, params.a, params.gamma);
    let artificial = internal_energy(&after_mech.rho, params.alpha, params.beta);
    let magnetic = magnetic_energy(after_mag, params.mu);
    let e_after = kinetic + internal + artificial + magnetic;

    // mechanical tallies are already time-integrated over the substeps;
    // the induction tallies are rates over the single outer step
    let dt = params.dt;
    let dissipation_t = mech_tally.visc_dissipation + dt * ind_tally.dissipation;
    let regularizers_t = mech_tally.drag_dissipation + dt * ind_tally.regularizer;
    let sources_t = mech_tally.gravity_work + dt * ind_tally.current_work;
    // the mixed coupling terms (Lorentz work vs transport work) cancel
    // only asymptotically; they are deliberately left inside the slack
    let slack = e_after + dissipation_t + regularizers_t
        - e_before
        - sources_t
        - mech_tally.lorentz_work
        - dt * ind_tally.transport_work;

    EnergyLedger {
        time: after_mech.time,
        kinetic,
        internal,
        artificial,
        magnetic,
        dissipation: dissipation_t / dt,
        sources: sources_t / dt,
        regularizers: regularizers_t / dt,
        slack,
        mass: total_mass(&after_mech.rho),
        div_b_inf: div_b_inf(after_mag),
        rigidity: rigidity_residuals(after_mech),
        body_poses: body_poses(after_mech),
        picard_fallback: ind_tally.picard_fallback,
    }
}

/// Standalone ledger from two states, recomputing dissipation, sources,
/// and regularizers from the after-state. Exact for single-substep runs.
pub fn compute_ledger(
    before: (&MechanicalState, &MagneticState),
    after: (&MechanicalState, &MagneticState),
    params: &SchemeParams,
    g_force: [f64; 2],
    jz: &ScalarField,
) -> Result<EnergyLedger> {
    if before.0.rho.grid != after.0.rho.grid || before.1.psi.grid != after.1.psi.grid {
        return Err(SimError::Invariant(
            "ledger states live on mismatched grids".into(),
        ));
    }
    let g = after.0.rho.grid;
    let da = g.cell_area();

    let visc = ViscousOp::build(g, &after.0.bodies, params);
    let mut mech_tally = MechTally {
        visc_dissipation: params.dt * visc.energy(&after.0.u),
        ..Default::default()
    };
    let rf = face_density(&after.0.rho);
    let mut gw = 0.0;
    for (u, r) in after.0.u.u.iter().zip(rf.u.iter()) {
        gw += r * g_force[0] * u;
    }
    for (v, r) in after.0.u.v.iter().zip(rf.v.iter()) {
        gw += r * g_force[1] * v;
    }
    mech_tally.gravity_work = params.dt * da * gw;

    let w = lap_node(&after.1.psi);
    let mut ind_tally = InductionTally::default();
    for k in 0..g.n_nodes() {
        ind_tally.dissipation +=
            da / (params.sigma * params.mu * params.mu) * w.data[k] * w.data[k];
        ind_tally.current_work +=
            da / (params.sigma * params.mu) * jz.data[k] * w.data[k];
    }
    if params.eps > 0.0 {
        let lw = lap_node(&w);
        for k in 0..g.n_nodes() {
            ind_tally.regularizer += da * params.eps / params.mu * w.data[k] * lw.data[k];
            let c = params.eps / (params.mu * params.mu) * w.data[k] * w.data[k];
            ind_tally.regularizer += da / params.mu * c * w.data[k] * w.data[k];
        }
    }
    Ok(assemble(before.0, before.1, after.0, after.1, params, &mech_tally, &ind_tally))
}
