//! Rectangular `(x, p)` rasters for Poincaré-section histograms and Husimi
//! distributions.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Geometry of a phase-space raster: `nx × np` cells covering
/// `[x_min, x_max) × [p_min, p_max)`. Nodes sit at cell centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseWindow {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl PhaseWindow {
    pub fn new(x: (f64, f64), nx: usize, p: (f64, f64), np: usize) -> Result<Self> {
        let w = Self {
            x_min: x.0,
            x_max: x.1,
            nx,
            p_min: p.0,
            p_max: p.1,
            np,
        };
        w.validate()?;
        Ok(w)
    }

    /// One lattice cell in `x` centred on the origin.
    pub fn unit_cell(p: (f64, f64), nx: usize, np: usize) -> Result<Self> {
        Self::new((-PI, PI), nx, p, np)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.p_min, self.p_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_max <= self.x_min || self.p_max <= self.p_min {
            return Err(Error::Config(format!(
                "phase-space window [{}, {}) x [{}, {}) is empty or not finite",
                self.x_min, self.x_max, self.p_min, self.p_max
            )));
        }
        if self.nx == 0 || self.np == 0 {
            return Err(Error::Config("phase-space window needs at least one cell per axis".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.np as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dp()
    }

    pub fn x_node(&self, ix: usize) -> f64 {
        self.x_min + (ix as f64 + 0.5) * self.dx()
    }

    pub fn p_node(&self, ip: usize) -> f64 {
        self.p_min + (ip as f64 + 0.5) * self.dp()
    }

    pub fn len(&self) -> usize {
        self.nx * self.np
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index, `p` rows of `x` columns.
    #[inline]
    pub fn index(&self, ix: usize, ip: usize) -> usize {
        ip * self.nx + ix
    }

    /// The cell containing `(x, p)`, if inside the window.
    pub fn cell_of(&self, x: f64, p: f64) -> Option<(usize, usize)> {
        let fx = (x - self.x_min) / self.dx();
        let fp = (p - self.p_min) / self.dp();
        if fx < 0.0 || fp < 0.0 || !fx.is_finite() || !fp.is_finite() {
            return None;
        }
        let (ix, ip) = (fx as usize, fp as usize);
        (ix < self.nx && ip < self.np).then_some((ix, ip))
    }

    /// The same window moved by `shift` in `x`.
    pub fn translated(&self, shift: f64) -> Self {
        Self {
            x_min: self.x_min + shift,
            x_max: self.x_max + shift,
            ..*self
        }
    }
}

/// Real values on a [`PhaseWindow`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    pub window: PhaseWindow,
    pub values: Vec<f64>,
}

impl PhaseSpaceGrid {
    pub fn zeros(window: PhaseWindow) -> Self {
        Self {
            values: vec![0.0; window.len()],
            window,
        }
    }

    /// Counts of `points` per cell; points outside the window are dropped.
    pub fn histogram<I: IntoIterator<Item = (f64, f64)>>(window: PhaseWindow, points: I) -> Self {
        let mut grid = Self::zeros(window);
        for (x, p) in points {
            if let Some((ix, ip)) = window.cell_of(x, p) {
                grid.values[window.index(ix, ip)] += 1.0;
            }
        }
        grid
    }

    #[inline]
    pub fn get(&self, ix: usize, ip: usize) -> f64 {
        self.values[self.window.index(ix, ip)]
    }

    /// Midpoint-rule integral over the window.
    pub fn integral(&self) -> f64 {
        crate::stats::pairwise_sum(&self.values) * self.window.cell_area()
    }

    /// Rescales so that the integral equals `target`. A zero grid is left alone.
    pub fn normalize_to(&mut self, target: f64) {
        let total = self.integral();
        if total > 0.0 {
            let s = target / total;
            self.values.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Integral restricted to the cells where `mask` is set.
    pub fn mass_in(&self, mask: &[bool]) -> f64 {
        assert_eq!(mask.len(), self.values.len());
        let picked: Vec<f64> = self
            .values
            .iter()
            .zip(mask)
            .map(|(v, &m)| if m { *v } else { 0.0 })
            .collect();
        crate::stats::pairwise_sum(&picked) * self.window.cell_area()
    }

    /// Value-weighted mean position `(⟨x⟩, ⟨p⟩)`.
    pub fn centroid(&self) -> (f64, f64) {
        let w = &self.window;
        let mut wx = Vec::with_capacity(self.values.len());
        let mut wp = Vec::with_capacity(self.values.len());
        for ip in 0..w.np {
            for ix in 0..w.nx {
                let v = self.get(ix, ip);
                wx.push(v * w.x_node(ix));
                wp.push(v * w.p_node(ip));
            }
        }
        let total = crate::stats::pairwise_sum(&self.values);
        (
            crate::stats::pairwise_sum(&wx) / total,
            crate::stats::pairwise_sum(&wp) / total,
        )
    }

    /// The cell holding the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        (i % self.window.nx, i / self.window.nx)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }
}

/// Connected regions of unvisited cells in an occupancy raster, such as the
/// holes a chaotic trajectory leaves in a Poincaré section.
///
/// Cells are 4-connected, with `x` wrapping around when `periodic_x` is set.
/// Regions touching the `p` edges of the window are not enclosed and are
/// dropped. The result is sorted by decreasing size; each entry is a mask
/// over the grid.
pub fn enclosed_empty_regions(occupancy: &PhaseSpaceGrid, periodic_x: bool) -> Vec<Vec<bool>> {
    let w = occupancy.window;
    let empty: Vec<bool> = occupancy.values.iter().map(|&v| v <= 0.0).collect();
    let mut label = vec![usize::MAX; w.len()];
    let mut regions = Vec::new();

    for start in 0..w.len() {
        if !empty[start] || label[start] != usize::MAX {
            continue;
        }
        let id = regions.len();
        let mut members = Vec::new();
        let mut touches_edge = false;
        let mut stack = vec![start];
        label[start] = id;
        while let Some(cell) = stack.pop() {
            members.push(cell);
            let (ix, ip) = (cell % w.nx, cell / w.nx);
            if ip == 0 || ip + 1 == w.np {
                touches_edge = true;
            }
            if !periodic_x && (ix == 0 || ix + 1 == w.nx) {
                touches_edge = true;
            }
            let mut neighbours = Vec::with_capacity(4);
            if ip > 0 {
                neighbours.push(w.index(ix, ip - 1));
            }
            if ip + 1 < w.np {
                neighbours.push(w.index(ix, ip + 1));
            }
            if ix > 0 {
                neighbours.push(w.index(ix - 1, ip));
            } else if periodic_x {
                neighbours.push(w.index(w.nx - 1, ip));
            }
            if ix + 1 < w.nx {
                neighbours.push(w.index(ix + 1, ip));
            } else if periodic_x {
                neighbours.push(w.index(0, ip));
            }
            for n in neighbours {
                if empty[n] && label[n] == usize::MAX {
                    label[n] = id;
                    stack.push(n);
                }
            }
        }
        regions.push((touches_edge, members));
    }

    let mut enclosed: Vec<Vec<usize>> = regions
        .into_iter()
        .filter(|(edge, _)| !edge)
        .map(|(_, m)| m)
        .collect();
    enclosed.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    enclosed
        .into_iter()
        .map(|members| {
            let mut mask = vec![false; w.len()];
            members.into_iter().for_each(|c| mask[c] = true);
            mask
        })
        .collect()
}

/// Shrinks a mask by one cell: a cell survives only if its four neighbours
/// (with `x` wrapping when `periodic_x`) are also in the mask.
pub fn erode(window: &PhaseWindow, mask: &[bool], periodic_x: bool) -> Vec<bool> {
    let w = window;
    (0..w.len())
        .map(|cell| {
            if !mask[cell] {
                return false;
            }
            let (ix, ip) = (cell % w.nx, cell / w.nx);
            if ip == 0 || ip + 1 == w.np {
                return false;
            }
            let left = match (ix, periodic_x) {
                (0, true) => Some(w.nx - 1),
                (0, false) => None,
                _ => Some(ix - 1),
            };
            let right = match (ix + 1 == w.nx, periodic_x) {
                (true, true) => Some(0),
                (true, false) => None,
                _ => Some(ix + 1),
            };
            match (left, right) {
                (Some(l), Some(r)) => {
                    mask[w.index(l, ip)]
                        && mask[w.index(r, ip)]
                        && mask[w.index(ix, ip - 1)]
                        && mask[w.index(ix, ip + 1)]
                }
                _ => false,
            }
        })
        .collect()
}

/// Reduces `x` into `[-π, π)`.
#[inline]
pub fn wrap_centered(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = (x + PI).rem_euclid(two_pi) - PI;
    // rem_euclid can round up to exactly 2π
    if r >= PI {
        r - two_pi
    } else {
        r
    }
}
