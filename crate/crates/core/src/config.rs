//! Run configuration: a flat `key = value` format under `[section]`
//! headers, parsed strictly (unknown keys are errors, every admissibility
//! condition is checked up front and reported with the violated condition
//! quoted verbatim). The normalized echo of a config doubles as the run
//! metadata and can be fed straight back in to reproduce a run bit for
//! bit.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Result, SimError};
use crate::field::{Loc, ScalarField, VectorField};
use crate::geometry::{validate_bodies, Isometry, RigidBodyState, Shape};
use crate::grid::Grid;
use crate::nondim::{
    close_scales, CharacteristicScales, MaterialConstants, ScaleClosure, EPS0, MU0,
};
use crate::scheme::{MagneticState, MechanicalState, SchemeParams};

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub ox: f64,
    pub oy: f64,
}

#[derive(Debug, Clone)]
pub struct BodySpec {
    pub shape: Shape,
    pub center: [f64; 2],
    pub v: [f64; 2],
    pub w: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum VelocityInit {
    Zero,
    Uniform([f64; 2]),
    /// rigid rotation omega about a center, tapered to zero outside the
    /// given radius
    Rigid { center: [f64; 2], omega: f64, radius: f64 },
}

#[derive(Debug, Clone)]
pub struct InitialSpec {
    pub rho0: f64,
    /// optional vacuum disk (cx, cy, radius) where the density starts at 0
    pub void_region: Option<(f64, f64, f64)>,
    pub u0: VelocityInit,
    pub psi: PsiInit,
    pub b0: [f64; 2],
}

#[derive(Debug, Clone, Copy)]
pub enum PsiInit {
    /// product sine mode, zero on the boundary by construction
    Mode { amp: f64, kx: u32, ky: u32 },
    /// gaussian flux blob; boundary values are below machine precision
    /// for any blob a few widths away from the walls
    Blob { amp: f64, center: [f64; 2], width: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct ForcesSpec {
    pub g: [f64; 2],
    pub jz: f64,
}

#[derive(Debug, Clone)]
pub struct ScalesSpec {
    pub closure: String,
    pub xbar: f64,
    pub tbar: f64,
    pub bbar: f64,
    pub ubar: f64,
    pub jbar: f64,
    pub mu0: f64,
    pub eps0: f64,
    pub mur: f64,
    pub epsr: f64,
    pub rhobar: Option<f64>,
    pub pbar: Option<f64>,
    pub gbar: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: SchemeParams,
    pub bodies: Vec<BodySpec>,
    pub initial: InitialSpec,
    pub forces: ForcesSpec,
    pub scales: Option<ScalesSpec>,
    pub steps: usize,
    pub out_dir: String,
    pub seed: u64,
    pub eps_defaulted: bool,
    pub warnings: Vec<String>,
}

pub fn validate_file(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse(&text)
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

fn split_sections(text: &str, errors: &mut Vec<String>) -> Sections {
    let mut out: Sections = BTreeMap::new();
    let mut current = String::from("");
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.split_once('#') {
            Some((head, _)) => head,
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            current = line[1..line.len() - 1].trim().to_string();
            out.entry(current.clone()).or_default();
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                let key = k.trim().to_string();
                let val = v.trim().to_string();
                if current.is_empty() {
                    errors.push(format!(
                        "line {}: key '{}' appears before any [section]",
                        lineno + 1,
                        key
                    ));
                } else {
                    out.entry(current.clone()).or_default().insert(key, val);
                }
            }
            None => errors.push(format!("line {}: expected 'key = value', got '{line}'", lineno + 1)),
        }
    }
    out
}

struct Section {
    name: String,
    map: BTreeMap<String, String>,
    used: Vec<String>,
}

impl Section {
    fn take(sections: &mut Sections, name: &str) -> Self {
        Section {
            name: name.to_string(),
            map: sections.remove(name).unwrap_or_default(),
            used: Vec::new(),
        }
    }

    fn f64(&mut self, key: &str, default: f64, errors: &mut Vec<String>) -> f64 {
        self.used.push(key.to_string());
        match self.map.get(key) {
            None => default,
            Some(v) => v.parse().unwrap_or_else(|_| {
                errors.push(format!("[{}] {key} = '{v}' is not a number", self.name));
                default
            }),
        }
    }

    fn opt_f64(&mut self, key: &str, errors: &mut Vec<String>) -> Option<f64> {
        self.used.push(key.to_string());
        self.map.get(key).map(|v| {
            v.parse().unwrap_or_else(|_| {
                errors.push(format!("[{}] {key} = '{v}' is not a number", self.name));
                0.0
            })
        })
    }

    fn usize(&mut self, key: &str, default: usize, errors: &mut Vec<String>) -> usize {
        self.used.push(key.to_string());
        match self.map.get(key) {
            None => default,
            Some(v) => v.parse().unwrap_or_else(|_| {
                errors.push(format!("[{}] {key} = '{v}' is not an integer", self.name));
                default
            }),
        }
    }

    fn bool(&mut self, key: &str, default: bool, errors: &mut Vec<String>) -> bool {
        self.used.push(key.to_string());
        match self.map.get(key).map(|s| s.as_str()) {
            None => default,
            Some("true") => true,
            Some("false") => false,
            Some(v) => {
                errors.push(format!("[{}] {key} = '{v}' is not true/false", self.name));
                default
            }
        }
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        self.used.push(key.to_string());
        self.map.get(key).cloned().unwrap_or_else(|| default.to_string())
    }

    fn pair(&mut self, key: &str, default: [f64; 2], errors: &mut Vec<String>) -> [f64; 2] {
        self.used.push(key.to_string());
        match self.map.get(key) {
            None => default,
            Some(v) => {
                let parts: Vec<&str> = v.split(',').map(str::trim).collect();
                if parts.len() == 2 {
                    if let (Ok(a), Ok(b)) = (parts[0].parse(), parts[1].parse()) {
                        return [a, b];
                    }
                }
                errors.push(format!(
                    "[{}] {key} = '{v}' is not a pair 'a, b'",
                    self.name
                ));
                default
            }
        }
    }

    fn finish(self, errors: &mut Vec<String>) {
        for k in self.map.keys() {
            if !self.used.contains(k) {
                errors.push(format!("[{}] unknown key '{k}'", self.name));
            }
        }
    }
}

fn parse_body(name: &str, v: &str, errors: &mut Vec<String>) -> Option<BodySpec> {
    let mut toks = v.split_whitespace();
    let shape_name = toks.next().unwrap_or("");
    let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
    for t in toks {
        match t.split_once('=') {
            Some((k, val)) => {
                kv.insert(k, val);
            }
            None => {
                errors.push(format!("[bodies] {name}: token '{t}' is not key=value"));
                return None;
            }
        }
    }
    let mut get = |k: &str, d: f64| -> f64 {
        kv.remove(k).and_then(|s| s.parse().ok()).unwrap_or(d)
    };
    let shape = match shape_name {
        "disk" => Shape::Disk { radius: get("radius", 0.0) },
        "rectangle" => Shape::Rect { w: get("w", 0.0), h: get("h", 0.0) },
        other => {
            errors.push(format!(
                "[bodies] {name}: unknown shape '{other}' (disk or rectangle)"
            ));
            return None;
        }
    };
    let cx = get("cx", 0.0);
    let cy = get("cy", 0.0);
    let vx = get("vx", 0.0);
    let vy = get("vy", 0.0);
    let w = get("w0", 0.0);
    let delta = get("delta", 0.0);
    for k in kv.keys() {
        errors.push(format!("[bodies] {name}: unknown field '{k}'"));
    }
    match shape {
        Shape::Disk { radius } if radius <= 0.0 => {
            errors.push(format!("[bodies] {name}: disk needs radius > 0"));
            return None;
        }
        Shape::Rect { w, h } if w <= 0.0 || h <= 0.0 => {
            errors.push(format!("[bodies] {name}: rectangle needs w, h > 0"));
            return None;
        }
        _ => {}
    }
    if delta <= 0.0 {
        errors.push(format!("[bodies] {name}: delta must be > 0"));
        return None;
    }
    Some(BodySpec { shape, center: [cx, cy], v: [vx, vy], w, delta })
}

pub fn parse(text: &str) -> Result<RunConfig> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let mut sections = split_sections(text, &mut errors);

    let mut s = Section::take(&mut sections, "grid");
    let grid = GridSpec {
        nx: s.usize("nx", 32, &mut errors),
        ny: s.usize("ny", 32, &mut errors),
        lx: s.f64("lx", 1.0, &mut errors),
        ly: s.f64("ly", 1.0, &mut errors),
        ox: s.f64("ox", 0.0, &mut errors),
        oy: s.f64("oy", 0.0, &mut errors),
    };
    s.finish(&mut errors);

    let mut s = Section::take(&mut sections, "params");
    let dt = s.f64("dt", 1e-3, &mut errors);
    let eps_opt = s.opt_f64("eps", &mut errors);
    // echoed configs resolve eps but keep the provenance flag so the
    // metadata round-trips exactly
    let eps_defaulted = s.bool("eps_defaulted", eps_opt.is_none(), &mut errors);
    let params = SchemeParams {
        nu: s.f64("nu", 0.1, &mut errors),
        lambda: s.f64("lambda", 0.0, &mut errors),
        a: s.f64("a", 1.0, &mut errors),
        gamma: s.f64("gamma", 2.0, &mut errors),
        sigma: s.f64("sigma", 1.0, &mut errors),
        mu: s.f64("mu", 1.0, &mut errors),
        dt,
        m: s.f64("m", 0.0, &mut errors),
        eps: eps_opt.unwrap_or(dt),
        alpha: s.f64("alpha", 0.0, &mut errors),
        beta: s.f64("beta", 5.0, &mut errors),
        delta: s.f64("delta", 0.1, &mut errors),
        picard_tol: s.f64("picard_tol", 1e-10, &mut errors),
        picard_max: s.usize("picard_max", 50, &mut errors),
        inner_substeps: s.usize("inner_substeps", 1, &mut errors),
        pin_velocity: s.bool("pin_velocity", false, &mut errors),
    };
    s.finish(&mut errors);
    errors.extend(params.validate_errors());

    let mut s = Section::take(&mut sections, "initial");
    let rho0 = s.f64("rho0", 1.0, &mut errors);
    let void_raw = {
        s.used.push("void".into());
        s.map.get("void").cloned()
    };
    let void_region = void_raw.and_then(|v| {
        let parts: Vec<f64> = v
            .split(',')
            .filter_map(|p| p.trim().parse().ok())
            .collect();
        if parts.len() == 3 {
            Some((parts[0], parts[1], parts[2]))
        } else {
            errors.push(format!("[initial] void = '{v}' is not 'cx, cy, radius'"));
            None
        }
    });
    let u0_kind = s.string("u0", "zero");
    let u0_value = s.pair("u0_value", [0.0, 0.0], &mut errors);
    let u0_center = s.pair("u0_center", [0.5, 0.5], &mut errors);
    let u0_omega = s.f64("u0_omega", 0.0, &mut errors);
    let u0_radius = s.f64("u0_radius", f64::INFINITY, &mut errors);
    let u0 = match u0_kind.as_str() {
        "zero" => VelocityInit::Zero,
        "uniform" => VelocityInit::Uniform(u0_value),
        "rigid" => VelocityInit::Rigid {
            center: u0_center,
            omega: u0_omega,
            radius: u0_radius,
        },
        other => {
            errors.push(format!(
                "[initial] u0 = '{other}' (expected zero, uniform, or rigid)"
            ));
            VelocityInit::Zero
        }
    };
    let psi_shape = s.string("psi_shape", "mode");
    let psi_amp = s.f64("psi_amp", 0.0, &mut errors);
    let psi = match psi_shape.as_str() {
        "mode" => PsiInit::Mode {
            amp: psi_amp,
            kx: s.usize("psi_kx", 1, &mut errors) as u32,
            ky: s.usize("psi_ky", 1, &mut errors) as u32,
        },
        "blob" => PsiInit::Blob {
            amp: psi_amp,
            center: s.pair("psi_center", [0.5, 0.5], &mut errors),
            width: s.f64("psi_width", 0.1, &mut errors),
        },
        other => {
            errors.push(format!(
                "[initial] psi_shape = '{other}' (expected mode or blob)"
            ));
            PsiInit::Mode { amp: 0.0, kx: 1, ky: 1 }
        }
    };
    if let PsiInit::Blob { width, .. } = psi {
        if width <= 0.0 {
            errors.push("[initial] psi_width must be > 0".into());
        }
    }
    let initial = InitialSpec {
        rho0,
        void_region,
        u0,
        psi,
        b0: s.pair("b0", [0.0, 0.0], &mut errors),
    };
    s.finish(&mut errors);
    if !(rho0 >= 0.0) {
        errors.push(format!("[initial] rho0 = {rho0} violates: rho0 >= 0"));
    }
    if initial.b0 != [0.0, 0.0] {
        errors.push(format!(
            "[initial] b0 = {}, {} violates: B0 . n = 0 on the boundary \
             (a uniform background field has nonzero normal trace on a box)",
            initial.b0[0], initial.b0[1]
        ));
    }
    if initial.rho0 == 0.0 && initial.void_region.is_none() {
        if !matches!(initial.u0, VelocityInit::Zero) {
            warnings.push(
                "initial momentum zeroed everywhere: (rho u)0 = 0 wherever rho0 = 0".into(),
            );
        }
    }
    if initial.void_region.is_some() && !matches!(initial.u0, VelocityInit::Zero) {
        warnings.push(
            "initial momentum zeroed inside the vacuum region: (rho u)0 = 0 wherever rho0 = 0"
                .into(),
        );
    }

    let mut s = Section::take(&mut sections, "forces");
    let forces = ForcesSpec {
        g: [s.f64("gx", 0.0, &mut errors), s.f64("gy", 0.0, &mut errors)],
        jz: s.f64("jz", 0.0, &mut errors),
    };
    s.finish(&mut errors);

    let scales = if sections.contains_key("scales") {
        let mut s = Section::take(&mut sections, "scales");
        let sc = ScalesSpec {
            closure: s.string("closure", "primary"),
            xbar: s.f64("xbar", 1.0, &mut errors),
            tbar: s.f64("tbar", 1.0, &mut errors),
            bbar: s.f64("bbar", 1.0, &mut errors),
            ubar: s.f64("ubar", 1.0, &mut errors),
            jbar: s.f64("jbar", 1.0, &mut errors),
            mu0: s.f64("mu0", MU0, &mut errors),
            eps0: s.f64("eps0", EPS0, &mut errors),
            mur: s.f64("mur", 1.0, &mut errors),
            epsr: s.f64("epsr", 1.0, &mut errors),
            rhobar: s.opt_f64("rhobar", &mut errors),
            pbar: s.opt_f64("pbar", &mut errors),
            gbar: s.opt_f64("gbar", &mut errors),
        };
        s.finish(&mut errors);
        if sc.closure != "primary" && sc.closure != "alternate" {
            errors.push(format!(
                "[scales] closure = '{}' (expected primary or alternate)",
                sc.closure
            ));
        }
        Some(sc)
    } else {
        None
    };

    let mut bodies = Vec::new();
    if sections.contains_key("bodies") {
        let s = Section::take(&mut sections, "bodies");
        for (k, v) in &s.map {
            if let Some(b) = parse_body(k, v, &mut errors) {
                bodies.push(b);
            }
        }
    }

    let mut s = Section::take(&mut sections, "run");
    let steps = s.usize("steps", 100, &mut errors);
    let out_dir = s.string("out_dir", "out");
    let seed = s.usize("seed", 0, &mut errors) as u64;
    s.finish(&mut errors);

    for name in sections.keys() {
        errors.push(format!("unknown section [{name}]"));
    }

    let cfg = RunConfig {
        grid,
        params,
        bodies,
        initial,
        forces,
        scales,
        steps,
        out_dir,
        seed,
        eps_defaulted,
        warnings,
    };

    // geometric checks need an actual grid
    match cfg.make_grid() {
        Ok(g) => {
            let bodies = cfg.body_states();
            if let Err(SimError::BodyRejected(msg)) = validate_bodies(&g, &bodies) {
                errors.push(msg);
            }
        }
        Err(SimError::Config(mut es)) => errors.append(&mut es),
        Err(e) => errors.push(e.to_string()),
    }

    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(SimError::Config(errors))
    }
}

impl RunConfig {
    pub fn make_grid(&self) -> Result<Grid> {
        Grid::new(
            self.grid.nx,
            self.grid.ny,
            self.grid.lx / self.grid.nx as f64,
            self.grid.ly / self.grid.ny as f64,
            [self.grid.ox, self.grid.oy],
        )
    }

    pub fn body_states(&self) -> Vec<RigidBodyState> {
        self.bodies
            .iter()
            .enumerate()
            .map(|(id, b)| RigidBodyState {
                id,
                shape: b.shape,
                pose: Isometry::translation(b.center),
                v: b.v,
                w: b.w,
                delta: b.delta,
            })
            .collect()
    }

    pub fn characteristic_scales(&self) -> Result<Option<CharacteristicScales>> {
        let Some(sc) = &self.scales else { return Ok(None) };
        let material = MaterialConstants {
            mu0: sc.mu0,
            eps0: sc.eps0,
            mur: sc.mur,
            epsr: sc.epsr,
            sigma: self.params.sigma,
        };
        let closure = if sc.closure == "alternate" {
            ScaleClosure::Alternate { xbar: sc.xbar, ubar: sc.ubar, jbar: sc.jbar }
        } else {
            ScaleClosure::Primary { xbar: sc.xbar, tbar: sc.tbar, bbar: sc.bbar }
        };
        Ok(Some(close_scales(closure, material, sc.rhobar, sc.pbar, sc.gbar)?))
    }

    /// Initial mechanical and magnetic states plus the imposed current
    /// field, with the vacuum-region momentum constraint applied.
    pub fn build_states(&self) -> Result<(MechanicalState, MagneticState, ScalarField)> {
        let g = self.make_grid()?;
        let init = &self.initial;
        let in_void = |p: [f64; 2]| -> bool {
            match init.void_region {
                Some((cx, cy, r)) => {
                    (p[0] - cx).powi(2) + (p[1] - cy).powi(2) <= r * r
                }
                None => false,
            }
        };
        let rho = ScalarField::from_fn(g, Loc::Center, |p| {
            if in_void(p) {
                0.0
            } else {
                init.rho0
            }
        });
        let u0 = init.u0;
        let mut u = VectorField::from_fn(g, |p| match u0 {
            VelocityInit::Zero => [0.0, 0.0],
            VelocityInit::Uniform(v) => v,
            VelocityInit::Rigid { center, omega, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                if (dx * dx + dy * dy).sqrt() <= radius {
                    [-omega * dy, omega * dx]
                } else {
                    [0.0, 0.0]
                }
            }
        });
        // (rho u)0 must vanish wherever rho0 does: zero the faces touching
        // an empty cell
        for j in 0..g.ny {
            for i in 0..=g.nx {
                let left = if i > 0 { rho.data[g.ic(i - 1, j)] } else { 0.0 };
                let right = if i < g.nx { rho.data[g.ic(i, j)] } else { 0.0 };
                if left == 0.0 || right == 0.0 {
                    u.u[g.iu(i, j)] = 0.0;
                }
            }
        }
        for j in 0..=g.ny {
            for i in 0..g.nx {
                let below = if j > 0 { rho.data[g.ic(i, j - 1)] } else { 0.0 };
                let above = if j < g.ny { rho.data[g.ic(i, j)] } else { 0.0 };
                if below == 0.0 || above == 0.0 {
                    u.v[g.iv(i, j)] = 0.0;
                }
            }
        }
        u.clamp_boundary();

        let (lx, ly, ox, oy) = (self.grid.lx, self.grid.ly, self.grid.ox, self.grid.oy);
        let psi_init = init.psi;
        let psi = ScalarField::from_fn(g, Loc::Node, |p| match psi_init {
            PsiInit::Mode { amp, kx, ky } => {
                amp * (std::f64::consts::PI * kx as f64 * (p[0] - ox) / lx).sin()
                    * (std::f64::consts::PI * ky as f64 * (p[1] - oy) / ly).sin()
            }
            PsiInit::Blob { amp, center, width } => {
                let r2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
                amp * (-r2 / (width * width)).exp()
            }
        });
        // hard Dirichlet trace: the blob tail is below roundoff but the
        // energy identity wants exact zeros on the wall nodes
        let mut psi = psi;
        for i in 0..=g.nx {
            psi.data[g.inode(i, 0)] = 0.0;
            psi.data[g.inode(i, g.ny)] = 0.0;
        }
        for j in 0..=g.ny {
            psi.data[g.inode(0, j)] = 0.0;
            psi.data[g.inode(g.nx, j)] = 0.0;
        }
        let jz = ScalarField::constant(g, Loc::Node, self.forces.jz);
        let mech = MechanicalState { rho, u, bodies: self.body_states(), time: 0.0 };
        Ok((mech, MagneticState::new(psi, 0), jz))
    }

    /// The normalized echo: a complete, re-parsable config with every
    /// default resolved. Written as the run metadata.
    pub fn echo(&self) -> String {
        use std::fmt::Write;
        let mut o = String::new();
        let p = &self.params;
        writeln!(o, "[grid]").unwrap();
        writeln!(o, "nx = {}", self.grid.nx).unwrap();
        writeln!(o, "ny = {}", self.grid.ny).unwrap();
        writeln!(o, "lx = {:.17e}", self.grid.lx).unwrap();
        writeln!(o, "ly = {:.17e}", self.grid.ly).unwrap();
        writeln!(o, "ox = {:.17e}", self.grid.ox).unwrap();
        writeln!(o, "oy = {:.17e}", self.grid.oy).unwrap();
        writeln!(o, "\n[params]").unwrap();
        writeln!(o, "nu = {:.17e}", p.nu).unwrap();
        writeln!(o, "lambda = {:.17e}", p.lambda).unwrap();
        writeln!(o, "a = {:.17e}", p.a).unwrap();
        writeln!(o, "gamma = {:.17e}", p.gamma).unwrap();
        writeln!(o, "sigma = {:.17e}", p.sigma).unwrap();
        writeln!(o, "mu = {:.17e}", p.mu).unwrap();
        writeln!(o, "dt = {:.17e}", p.dt).unwrap();
        writeln!(o, "m = {:.17e}", p.m).unwrap();
        // eps is always written resolved; whether it was defaulted to dt
        // is recorded alongside
        writeln!(o, "eps = {:.17e}", p.eps).unwrap();
        writeln!(o, "eps_defaulted = {}", self.eps_defaulted).unwrap();
        writeln!(o, "alpha = {:.17e}", p.alpha).unwrap();
        writeln!(o, "beta = {:.17e}", p.beta).unwrap();
        writeln!(o, "delta = {:.17e}", p.delta).unwrap();
        writeln!(o, "picard_tol = {:.17e}", p.picard_tol).unwrap();
        writeln!(o, "picard_max = {}", p.picard_max).unwrap();
        writeln!(o, "inner_substeps = {}", p.inner_substeps).unwrap();
        writeln!(o, "pin_velocity = {}", p.pin_velocity).unwrap();
        writeln!(o, "\n[initial]").unwrap();
        writeln!(o, "rho0 = {:.17e}", self.initial.rho0).unwrap();
        if let Some((cx, cy, r)) = self.initial.void_region {
            writeln!(o, "void = {cx:.17e}, {cy:.17e}, {r:.17e}").unwrap();
        }
        match self.initial.u0 {
            VelocityInit::Zero => writeln!(o, "u0 = zero").unwrap(),
            VelocityInit::Uniform(v) => {
                writeln!(o, "u0 = uniform").unwrap();
                writeln!(o, "u0_value = {:.17e}, {:.17e}", v[0], v[1]).unwrap();
            }
            VelocityInit::Rigid { center, omega, radius } => {
                writeln!(o, "u0 = rigid").unwrap();
                writeln!(o, "u0_center = {:.17e}, {:.17e}", center[0], center[1]).unwrap();
                writeln!(o, "u0_omega = {omega:.17e}").unwrap();
                writeln!(o, "u0_radius = {radius:.17e}").unwrap();
            }
        }
        match self.initial.psi {
            PsiInit::Mode { amp, kx, ky } => {
                writeln!(o, "psi_shape = mode").unwrap();
                writeln!(o, "psi_amp = {amp:.17e}").unwrap();
                writeln!(o, "psi_kx = {kx}").unwrap();
                writeln!(o, "psi_ky = {ky}").unwrap();
            }
            PsiInit::Blob { amp, center, width } => {
                writeln!(o, "psi_shape = blob").unwrap();
                writeln!(o, "psi_amp = {amp:.17e}").unwrap();
                writeln!(o, "psi_center = {:.17e}, {:.17e}", center[0], center[1]).unwrap();
                writeln!(o, "psi_width = {width:.17e}").unwrap();
            }
        }
        writeln!(o, "b0 = {:.17e}, {:.17e}", self.initial.b0[0], self.initial.b0[1]).unwrap();
        writeln!(o, "\n[forces]").unwrap();
        writeln!(o, "gx = {:.17e}", self.forces.g[0]).unwrap();
        writeln!(o, "gy = {:.17e}", self.forces.g[1]).unwrap();
        writeln!(o, "jz = {:.17e}", self.forces.jz).unwrap();
        if !self.bodies.is_empty() {
            writeln!(o, "\n[bodies]").unwrap();
            for (k, b) in self.bodies.iter().enumerate() {
                let shape = match b.shape {
                    Shape::Disk { radius } => format!("disk radius={radius:.17e}"),
                    Shape::Rect { w, h } => format!("rectangle w={w:.17e} h={h:.17e}"),
                };
                writeln!(
                    o,
                    "body{k} = {shape} cx={:.17e} cy={:.17e} vx={:.17e} vy={:.17e} w0={:.17e} delta={:.17e}",
                    b.center[0], b.center[1], b.v[0], b.v[1], b.w, b.delta
                )
                .unwrap();
            }
        }
        if let Some(sc) = &self.scales {
            writeln!(o, "\n[scales]").unwrap();
            writeln!(o, "closure = {}", sc.closure).unwrap();
            writeln!(o, "xbar = {:.17e}", sc.xbar).unwrap();
            writeln!(o, "tbar = {:.17e}", sc.tbar).unwrap();
            writeln!(o, "bbar = {:.17e}", sc.bbar).unwrap();
            writeln!(o, "ubar = {:.17e}", sc.ubar).unwrap();
            writeln!(o, "jbar = {:.17e}", sc.jbar).unwrap();
            writeln!(o, "mu0 = {:.17e}", sc.mu0).unwrap();
            writeln!(o, "eps0 = {:.17e}", sc.eps0).unwrap();
            writeln!(o, "mur = {:.17e}", sc.mur).unwrap();
            writeln!(o, "epsr = {:.17e}", sc.epsr).unwrap();
            if let Some(v) = sc.rhobar {
                writeln!(o, "rhobar = {v:.17e}").unwrap();
            }
            if let Some(v) = sc.pbar {
                writeln!(o, "pbar = {v:.17e}").unwrap();
            }
            if let Some(v) = sc.gbar {
                writeln!(o, "gbar = {v:.17e}").unwrap();
            }
        }
        writeln!(o, "\n[run]").unwrap();
        writeln!(o, "steps = {}", self.steps).unwrap();
        writeln!(o, "out_dir = {}", self.out_dir).unwrap();
        writeln!(o, "seed = {}", self.seed).unwrap();
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[grid]
nx = 16
ny = 16

[params]
dt = 1e-3
eps = 0.0

[run]
steps = 10
";

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.grid.nx, 16);
        assert_eq!(cfg.steps, 10);
        assert!(!cfg.eps_defaulted);
        assert!((cfg.params.gamma - 2.0).abs() < 1e-15);
        let (mech, mag, jz) = cfg.build_states().unwrap();
        assert_eq!(mech.rho.data.len(), 256);
        assert_eq!(mag.psi.data.len(), 289);
        assert_eq!(jz.max_abs(), 0.0);
    }

    #[test]
    fn eps_defaults_to_dt_and_is_recorded() {
        let cfg = parse("
[grid]
nx = 8
ny = 8
[params]
dt = 2e-3
[run]
steps = 1
")
        .unwrap();
        assert!(cfg.eps_defaulted);
        assert!((cfg.params.eps - 2e-3).abs() < 1e-18);
        assert!(cfg.echo().contains("eps_defaulted = true"));
    }

    #[test]
    fn invalid_params_cite_conditions() {
        let bad = "
[grid]
nx = 8
ny = 8
[params]
gamma = 1.4
nu = -1.0
lambda = 0.5
beta = 2.0
[run]
steps = 1
";
        match parse(bad) {
            Err(SimError::Config(errs)) => {
                let all = errs.join("\n");
                assert!(all.contains("gamma > 3/2"), "{all}");
                assert!(all.contains("nu > 0"), "{all}");
                assert!(all.contains("beta > max{4, gamma}"), "{all}");
            }
            other => panic!("expected config rejection, got {other:?}"),
        }
    }

    #[test]
    fn nu_lambda_sum_condition() {
        let bad = "
[grid]
nx = 8
ny = 8
[params]
nu = 0.1
lambda = -0.5
[run]
steps = 1
";
        match parse(bad) {
            Err(SimError::Config(errs)) => {
                assert!(errs.iter().any(|e| e.contains("nu + lambda >= 0")));
            }
            other => panic!("expected config rejection, got {other:?}"),
        }
    }

    #[test]
    fn nonzero_background_field_rejected() {
        let bad = "
[grid]
nx = 8
ny = 8
[initial]
b0 = 0.1, 0.0
[run]
steps = 1
";
        match parse(bad) {
            Err(SimError::Config(errs)) => {
                assert!(errs.iter().any(|e| e.contains("B0 . n = 0 on the boundary")));
            }
            other => panic!("expected config rejection, got {other:?}"),
        }
    }

    #[test]
    fn vacuum_region_zeroes_momentum_with_warning() {
        let cfg = parse("
[grid]
nx = 32
ny = 32
[initial]
rho0 = 1.0
void = 0.5, 0.5, 0.2
u0 = uniform
u0_value = 1.0, 0.0
[run]
steps = 1
")
        .unwrap();
        assert!(cfg.warnings.iter().any(|w| w.contains("(rho u)0 = 0")));
        let (mech, _, _) = cfg.build_states().unwrap();
        let g = mech.rho.grid;
        // a face well inside the vacuum disk carries zero momentum
        let k = g.iu(16, 16);
        assert_eq!(mech.u.u[k], 0.0);
        // far corner keeps the uniform velocity
        let k = g.iu(3, 3);
        assert_eq!(mech.u.u[k], 1.0);
    }

    #[test]
    fn echo_roundtrip_is_stable() {
        let text = "
[grid]
nx = 24
ny = 12
lx = 2.0
[params]
dt = 5e-4
nu = 0.3
[initial]
psi_amp = 0.1
[bodies]
body0 = disk radius=0.12 cx=1.0 cy=0.5 w0=0.3 delta=0.08
[run]
steps = 7
seed = 42
";
        let cfg = parse(text).unwrap();
        let echo1 = cfg.echo();
        let cfg2 = parse(&echo1).unwrap();
        assert_eq!(echo1, cfg2.echo());
        assert_eq!(cfg2.bodies.len(), 1);
        assert_eq!(cfg2.seed, 42);
    }

    #[test]
    fn body_overlap_rejected_at_parse_time() {
        let bad = "
[grid]
nx = 32
ny = 32
[bodies]
body0 = disk radius=0.2 cx=0.4 cy=0.5 delta=0.05
body1 = disk radius=0.2 cx=0.6 cy=0.5 delta=0.05
[run]
steps = 1
";
        match parse(bad) {
            Err(SimError::Config(errs)) => {
                assert!(errs.iter().any(|e| e.contains("overlap")));
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = "
[grid]
nx = 8
ny = 8
wut = 3
[run]
steps = 1
";
        assert!(matches!(parse(bad), Err(SimError::Config(_))));
    }
}
