//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration rejected, 2 invariant violated
//! during a run, 3 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mhdfsi::config;
use mhdfsi::error::SimError;
use mhdfsi::nondim;
use mhdfsi::pillbox;
use mhdfsi::run;

#[derive(Parser)]
#[command(name = "mhdfsi", about = "2D penalized MHD/FSI simulator in a box")]
struct Cli {
    /// path to the run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory (overrides the config's out_dir)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// override the configured step count
    #[arg(long, global = true)]
    steps_override: Option<usize>,
    /// override the configured RNG seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// parse and validate a config, printing the normalized echo
    Validate,
    /// run the simulation and write the time series
    Run,
    /// print the closed characteristic scales and assumption verdicts
    Nondim,
    /// run the pill-box interface refinement studies and print the slopes
    Pillbox,
}

fn load(cli: &Cli) -> Result<config::RunConfig, SimError> {
    let path = cli.config.as_ref().ok_or_else(|| {
        SimError::Config(vec!["--config <path> is required for this command".into()])
    })?;
    let mut cfg = config::validate_file(path)?;
    if let Some(s) = cli.steps_override {
        cfg.steps = s;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.display().to_string();
    }
    Ok(cfg)
}

fn pillbox_report() -> Result<String, SimError> {
    use std::fmt::Write;
    let mut o = String::new();
    let sizes = [0.04, 0.02, 0.01, 0.005];
    let (order, panels) = (pillbox::DEFAULT_ORDER, pillbox::DEFAULT_PANELS);

    let tang = |jump: f64| -> Vec<f64> {
        let (h, j) = pillbox::tangential_jump_fields(|_| 0.0, jump, 0.005 / 8.0);
        sizes
            .iter()
            .map(|&dl| {
                let rect = pillbox::CurvedRectangle::flat(dl, dl);
                pillbox::tangential_defect(&h, &j, &rect, order, panels)
            })
            .collect()
    };
    writeln!(o, "tangential jump:  {:?}", pillbox::rate_study(&sizes, &tang(1.0))).unwrap();

    let (d, rc) = pillbox::normal_jump_fields(|_, _| 0.0, 1.0, 0.005 / 8.0);
    let defects: Vec<f64> = sizes
        .iter()
        .map(|&dl| {
            let cyl = pillbox::CurvedCylinder::flat(dl, dl);
            pillbox::normal_defect(&d, &rc, &cyl, order, panels)
        })
        .collect();
    writeln!(o, "normal jump:      {:?}", pillbox::rate_study(&sizes, &defects)).unwrap();

    writeln!(o, "zero jump:        {:?}", pillbox::rate_study(&sizes, &tang(0.0))).unwrap();
    Ok(o)
}

fn real_main() -> Result<(), SimError> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Validate => {
            let cfg = load(&cli)?;
            for w in &cfg.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", cfg.echo());
        }
        Cmd::Run => {
            let cfg = load(&cli)?;
            for w in &cfg.warnings {
                eprintln!("warning: {w}");
            }
            let out_dir = PathBuf::from(&cfg.out_dir);
            let steps = cfg.steps;
            let out = run::run_simulation(&cfg, &out_dir, steps)?;
            let last = out.ledgers.last();
            println!(
                "completed {} steps; E0 = {:.9e}, final E = {:.9e}, series: {}",
                out.ledgers.len(),
                out.e0,
                last.map(|l| l.total_energy()).unwrap_or(out.e0),
                out.csv_path.display()
            );
        }
        Cmd::Nondim => {
            let cfg = load(&cli)?;
            match cfg.characteristic_scales()? {
                Some(scales) => {
                    let rep = nondim::check_assumptions(&scales, nondim::Thresholds::default());
                    print!("{}", nondim::report_text(&scales, &rep));
                }
                None => {
                    return Err(SimError::Config(vec![
                        "config has no [scales] section to close".into(),
                    ]))
                }
            }
        }
        Cmd::Pillbox => {
            print!("{}", pillbox_report()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
