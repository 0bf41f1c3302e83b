//! Run driver: step loop with on-line conservation checks, time-series
//! output, and run metadata.
//!
//! Each accepted step appends one CSV row with the full energy ledger so
//! drift and slack can be audited offline. The per-step slack check is a
//! hard gate: a violation beyond theta = 1e-8 * E(t0) stops the run with
//! an invariant failure rather than writing misleading output. The
//! metadata file is itself a valid config (the normalized echo), so any
//! run can be reproduced bit for bit from its own output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{Result, SimError};
use crate::ledger::EnergyLedger;
use crate::nondim;
use crate::scheme::{step_coupled, MagneticState, MechanicalState};

pub const TIME_SERIES_VERSION: u32 = 1;
pub const SLACK_FACTOR: f64 = 1e-8;

/// fixed column schema of the time series (version 1)
pub const COLUMNS: &[&str] = &[
    "step",
    "time",
    "kinetic",
    "internal",
    "magnetic",
    "artificial",
    "total",
    "dissipation",
    "regularizers",
    "sources",
    "slack",
    "mass",
    "div_b_inf",
    "picard_fallback",
];

pub struct RunOutput {
    pub ledgers: Vec<EnergyLedger>,
    pub final_mech: MechanicalState,
    pub final_mag: MagneticState,
    pub e0: f64,
    pub csv_path: PathBuf,
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(msg: String) -> SimError {
    SimError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, msg))
}

fn header(n_bodies: usize) -> String {
    let mut cols: Vec<String> = COLUMNS.iter().map(|s| s.to_string()).collect();
    for b in 0..n_bodies {
        for f in ["x", "y", "angle", "vx", "vy", "w", "rigidity"] {
            cols.push(format!("body{b}_{f}"));
        }
    }
    format!("# time_series v{TIME_SERIES_VERSION}\n{}", cols.join(","))
}

fn row(step: usize, l: &EnergyLedger) -> String {
    let mut o = String::new();
    write!(o, "{step}").unwrap();
    for v in [
        l.time,
        l.kinetic,
        l.internal,
        l.magnetic,
        l.artificial,
        l.total_energy(),
        l.dissipation,
        l.regularizers,
        l.sources,
        l.slack,
        l.mass,
        l.div_b_inf,
    ] {
        write!(o, ",{}", fmt_f(v)).unwrap();
    }
    write!(o, ",{}", if l.picard_fallback { 1 } else { 0 }).unwrap();
    for (pose, rig) in l.body_poses.iter().zip(&l.rigidity) {
        let (x, y, angle, vx, vy, w) = *pose;
        for v in [x, y, angle, vx, vy, w, *rig] {
            write!(o, ",{}", fmt_f(v)).unwrap();
        }
    }
    o
}

/// Parse a time series written by [`run_simulation`]; returns numeric
/// rows (booleans as 0/1) in column order.
pub fn read_time_series(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let version = lines
        .next()
        .ok_or_else(|| io_err("empty time series".into()))?;
    if !version.starts_with("# time_series v") {
        return Err(io_err(format!(
            "not a time series file: first line '{version}'"
        )));
    }
    let names: Vec<String> = lines
        .next()
        .ok_or_else(|| io_err("time series missing header".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> =
            line.split(',').map(str::parse::<f64>).collect();
        let vals = vals.map_err(|e| io_err(format!("bad row '{line}': {e}")))?;
        if vals.len() != names.len() {
            return Err(io_err(format!(
                "row has {} fields, header has {}",
                vals.len(),
                names.len()
            )));
        }
        rows.push(vals);
    }
    Ok((names, rows))
}

pub fn run_simulation(cfg: &RunConfig, out_dir: &Path, steps: usize) -> Result<RunOutput> {
    fs::create_dir_all(out_dir)?;
    let (mut mech, mut mag, jz) = cfg.build_states()?;
    let params = &cfg.params;

    // metadata first, so even an aborted run is reproducible
    let mut meta = cfg.echo();
    meta.push_str("\n# --- run metadata (ignored on re-parse) ---\n");
    for w in &cfg.warnings {
        meta.push_str(&format!("# warning: {w}\n"));
    }
    if let Some(scales) = cfg.characteristic_scales()? {
        let rep = nondim::check_assumptions(&scales, nondim::Thresholds::default());
        for line in nondim::report_text(&scales, &rep).lines() {
            meta.push_str(&format!("# nondim: {line}\n"));
        }
    }
    fs::write(out_dir.join("metadata.cfg"), &meta)?;

    let e0 = crate::ledger::kinetic_energy(&mech)
        + crate::ledger::internal_energy(&mech.rho, params.a, params.gamma)
        + crate::ledger::internal_energy(&mech.rho, params.alpha, params.beta)
        + crate::ledger::magnetic_energy(&mag, params.mu);
    let theta = SLACK_FACTOR * e0.max(f64::MIN_POSITIVE);

    let mut csv = String::new();
    csv.push_str(&header(mech.bodies.len()));
    csv.push('\n');

    let mut ledgers = Vec::with_capacity(steps);
    for step in 1..=steps {
        let (next_mech, next_mag, ledger) =
            step_coupled(&mech, &mag, params, cfg.forces.g, &jz)?;
        mech = next_mech;
        mag = next_mag;
        if ledger.slack > theta {
            let csv_path = out_dir.join("time_series.csv");
            fs::write(&csv_path, &csv)?;
            return Err(SimError::Invariant(format!(
                "energy ledger slack {:.3e} exceeds theta = {:.3e} at step {step} (t = {:.6e})",
                ledger.slack, theta, mech.time
            )));
        }
        csv.push_str(&row(step, &ledger));
        csv.push('\n');
        ledgers.push(ledger);
    }

    let csv_path = out_dir.join("time_series.csv");
    fs::write(&csv_path, &csv)?;
    let mut f = std::io::BufWriter::new(fs::File::create(out_dir.join("rho_final.dat"))?);
    mech.rho.write_snapshot(&mut f)?;
    let mut f = std::io::BufWriter::new(fs::File::create(out_dir.join("psi_final.dat"))?);
    mag.psi.write_snapshot(&mut f)?;

    Ok(RunOutput { ledgers, final_mech: mech, final_mag: mag, e0, csv_path })
}
