use crate::error::{Result, SimError};

/// Uniform rectangular cell grid with MAC staggering.
///
/// Scalars live at cell centers or nodes, vector component 1 on vertical
/// faces and component 2 on horizontal faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: [f64; 2],
}

impl Grid {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, origin: [f64; 2]) -> Result<Grid> {
        let mut errs = Vec::new();
        if nx < 4 || ny < 4 {
            errs.push(format!("grid must have nx >= 4 and ny >= 4 (got {nx} x {ny})"));
        }
        if !(dx > 0.0) || !(dy > 0.0) {
            errs.push(format!("grid spacings must be positive (got dx={dx}, dy={dy})"));
        }
        if errs.is_empty() {
            Ok(Grid { nx, ny, dx, dy, origin })
        } else {
            Err(SimError::Config(errs))
        }
    }

    /// Unit square split into n x n cells.
    pub fn unit(n: usize) -> Grid {
        Grid::new(n, n, 1.0 / n as f64, 1.0 / n as f64, [0.0, 0.0]).unwrap()
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }
    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }
    /// Vertical faces carrying component 1.
    pub fn n_ufaces(&self) -> usize {
        (self.nx + 1) * self.ny
    }
    /// Horizontal faces carrying component 2.
    pub fn n_vfaces(&self) -> usize {
        self.nx * (self.ny + 1)
    }
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }
    pub fn lx(&self) -> f64 {
        self.nx as f64 * self.dx
    }
    pub fn ly(&self) -> f64 {
        self.ny as f64 * self.dy
    }

    #[inline]
    pub fn ic(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    #[inline]
    pub fn inode(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }
    #[inline]
    pub fn iu(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }
    #[inline]
    pub fn iv(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.dx,
            self.origin[1] + (j as f64 + 0.5) * self.dy,
        ]
    }
    pub fn node_pos(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.dx, self.origin[1] + j as f64 * self.dy]
    }
    pub fn uface_pos(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.dx, self.origin[1] + (j as f64 + 0.5) * self.dy]
    }
    pub fn vface_pos(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + (i as f64 + 0.5) * self.dx, self.origin[1] + j as f64 * self.dy]
    }

    /// Quadrature weight of a node (trapezoid rule: halved on edges).
    pub fn node_weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i == self.nx { 0.5 } else { 1.0 };
        let wy = if j == 0 || j == self.ny { 0.5 } else { 1.0 };
        wx * wy * self.cell_area()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_tiny_grid() {
        assert!(Grid::new(2, 8, 0.1, 0.1, [0.0, 0.0]).is_err());
        assert!(Grid::new(8, 8, -0.1, 0.1, [0.0, 0.0]).is_err());
    }

    #[test]
    fn staggered_positions() {
        let g = Grid::unit(4);
        assert_eq!(g.cell_center(0, 0), [0.125, 0.125]);
        assert_eq!(g.uface_pos(0, 0), [0.0, 0.125]);
        assert_eq!(g.vface_pos(0, 0), [0.125, 0.0]);
        assert_eq!(g.node_pos(4, 4), [1.0, 1.0]);
    }
}
