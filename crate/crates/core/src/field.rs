use crate::error::{Result, SimError};
use crate::grid::Grid;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loc {
    Center,
    Node,
}

impl Loc {
    pub fn tag(&self) -> &'static str {
        match self {
            Loc::Center => "center",
            Loc::Node => "node",
        }
    }
    pub fn from_tag(s: &str) -> Option<Loc> {
        match s {
            "center" => Some(Loc::Center),
            "node" => Some(Loc::Node),
            _ => None,
        }
    }
}

/// Scalar degrees of freedom at cell centers or grid nodes.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Grid,
    pub loc: Loc,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid, loc: Loc) -> ScalarField {
        let n = match loc {
            Loc::Center => grid.n_cells(),
            Loc::Node => grid.n_nodes(),
        };
        ScalarField { grid, loc, data: vec![0.0; n] }
    }

    pub fn from_fn(grid: Grid, loc: Loc, f: impl Fn([f64; 2]) -> f64) -> ScalarField {
        let mut out = ScalarField::zeros(grid, loc);
        match loc {
            Loc::Center => {
                for j in 0..grid.ny {
                    for i in 0..grid.nx {
                        out.data[grid.ic(i, j)] = f(grid.cell_center(i, j));
                    }
                }
            }
            Loc::Node => {
                for j in 0..=grid.ny {
                    for i in 0..=grid.nx {
                        out.data[grid.inode(i, j)] = f(grid.node_pos(i, j));
                    }
                }
            }
        }
        out
    }

    pub fn constant(grid: Grid, loc: Loc, c: f64) -> ScalarField {
        let mut f = ScalarField::zeros(grid, loc);
        f.data.iter_mut().for_each(|v| *v = c);
        f
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        match self.loc {
            Loc::Center => self.data[self.grid.ic(i, j)],
            Loc::Node => self.data[self.grid.inode(i, j)],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Total integral (sum times the dof quadrature weight).
    pub fn integral(&self) -> f64 {
        match self.loc {
            Loc::Center => self.data.iter().sum::<f64>() * self.grid.cell_area(),
            Loc::Node => {
                let g = self.grid;
                let mut s = 0.0;
                for j in 0..=g.ny {
                    for i in 0..=g.nx {
                        s += self.data[g.inode(i, j)] * g.node_weight(i, j);
                    }
                }
                s
            }
        }
    }

    /// Plain-text snapshot: one header line, then row-major values.
    pub fn write_snapshot(&self, w: &mut impl Write) -> Result<()> {
        writeln!(
            w,
            "{} {} {:.17e} {:.17e} {:.17e} {:.17e} {}",
            self.grid.nx,
            self.grid.ny,
            self.grid.dx,
            self.grid.dy,
            self.grid.origin[0],
            self.grid.origin[1],
            self.loc.tag()
        )?;
        for v in &self.data {
            writeln!(w, "{v:.17e}")?;
        }
        Ok(())
    }

    pub fn read_snapshot(r: &mut impl BufRead) -> Result<ScalarField> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 7 {
            return Err(SimError::Invariant(format!(
                "snapshot header must have 7 fields, got {}",
                parts.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| SimError::Invariant(format!("bad snapshot number {s}: {e}")))
        };
        let nx: usize = parts[0]
            .parse()
            .map_err(|_| SimError::Invariant("bad nx in snapshot header".into()))?;
        let ny: usize = parts[1]
            .parse()
            .map_err(|_| SimError::Invariant("bad ny in snapshot header".into()))?;
        let grid = Grid::new(nx, ny, parse(parts[2])?, parse(parts[3])?, [
            parse(parts[4])?,
            parse(parts[5])?,
        ])?;
        let loc = Loc::from_tag(parts[6])
            .ok_or_else(|| SimError::Invariant(format!("unknown location tag {}", parts[6])))?;
        let mut out = ScalarField::zeros(grid, loc);
        for v in out.data.iter_mut() {
            let mut line = String::new();
            r.read_line(&mut line)?;
            *v = parse(line.trim())?;
        }
        Ok(out)
    }
}

/// MAC-staggered vector field: `u` on vertical faces, `v` on horizontal faces.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> VectorField {
        VectorField { grid, u: vec![0.0; grid.n_ufaces()], v: vec![0.0; grid.n_vfaces()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> [f64; 2]) -> VectorField {
        let mut out = VectorField::zeros(grid);
        for j in 0..grid.ny {
            for i in 0..=grid.nx {
                out.u[grid.iu(i, j)] = f(grid.uface_pos(i, j))[0];
            }
        }
        for j in 0..=grid.ny {
            for i in 0..grid.nx {
                out.v[grid.iv(i, j)] = f(grid.vface_pos(i, j))[1];
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.v.iter()).all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().chain(self.v.iter()).fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Zero the normal components on the outer boundary.
    pub fn clamp_boundary(&mut self) {
        let g = self.grid;
        for j in 0..g.ny {
            self.u[g.iu(0, j)] = 0.0;
            self.u[g.iu(g.nx, j)] = 0.0;
        }
        for i in 0..g.nx {
            self.v[g.iv(i, 0)] = 0.0;
            self.v[g.iv(i, g.ny)] = 0.0;
        }
    }

    /// Component 1 interpolated to a cell center.
    pub fn u_at_cell(&self, i: usize, j: usize) -> f64 {
        let g = self.grid;
        0.5 * (self.u[g.iu(i, j)] + self.u[g.iu(i + 1, j)])
    }
    /// Component 2 interpolated to a cell center.
    pub fn v_at_cell(&self, i: usize, j: usize) -> f64 {
        let g = self.grid;
        0.5 * (self.v[g.iv(i, j)] + self.v[g.iv(i, j + 1)])
    }
}

/// Symmetric 2x2 tensor per cell; only three entries stored.
#[derive(Debug, Clone)]
pub struct TensorField {
    pub grid: Grid,
    pub xx: Vec<f64>,
    pub yy: Vec<f64>,
    pub xy: Vec<f64>,
}

impl TensorField {
    pub fn zeros(grid: Grid) -> TensorField {
        let n = grid.n_cells();
        TensorField { grid, xx: vec![0.0; n], yy: vec![0.0; n], xy: vec![0.0; n] }
    }

    pub fn max_abs(&self) -> f64 {
        self.xx
            .iter()
            .chain(self.yy.iter())
            .chain(self.xy.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// |T|^2 = xx^2 + yy^2 + 2 xy^2 at one cell.
    pub fn frob2(&self, idx: usize) -> f64 {
        self.xx[idx] * self.xx[idx] + self.yy[idx] * self.yy[idx] + 2.0 * self.xy[idx] * self.xy[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_roundtrip() {
        let g = Grid::unit(4);
        let f = ScalarField::from_fn(g, Loc::Center, |p| p[0] * 3.0 - p[1]);
        let mut buf = Vec::new();
        f.write_snapshot(&mut buf).unwrap();
        let back = ScalarField::read_snapshot(&mut &buf[..]).unwrap();
        assert_eq!(back.loc, Loc::Center);
        assert_eq!(back.data, f.data);
    }

    #[test]
    fn from_fn_locations() {
        let g = Grid::unit(4);
        let v = VectorField::from_fn(g, |p| [p[0], p[1]]);
        assert_eq!(v.u[g.iu(0, 0)], 0.0);
        assert_eq!(v.u[g.iu(4, 0)], 1.0);
        assert_eq!(v.v[g.iv(0, 4)], 1.0);
    }
}
