//! Rectangular sampling grids in exponential coordinates.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GradedGroup;

/// A box `prod_j [-R_j, R_j)` with `n_j` nodes per axis at `-R_j + i h_j`.
///
/// The origin is always a node (index `n_j / 2` on each axis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_widths: Vec<f64>,
    pub counts: Vec<usize>,
    pub periodic: bool,
}

impl GridSpec {
    pub fn new(half_widths: Vec<f64>, counts: Vec<usize>, periodic: bool) -> Result<Self> {
        let g = GridSpec {
            half_widths,
            counts,
            periodic,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.half_widths.len() != self.counts.len() {
            return Err(Error::DimensionMismatch {
                expected: self.half_widths.len(),
                got: self.counts.len(),
            });
        }
        if self.counts.is_empty() {
            return Err(Error::invalid("grid must have at least one axis"));
        }
        for (&r, &n) in self.half_widths.iter().zip(&self.counts) {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid(format!("half width must be positive, got {r}")));
            }
            if n < 2 || n % 2 != 0 {
                return Err(Error::invalid(format!("node counts must be even and >= 2, got {n}")));
            }
        }
        Ok(())
    }

    pub fn check_group(&self, group: &GradedGroup) -> Result<()> {
        if self.dim() != group.dim() {
            return Err(Error::DimensionMismatch {
                expected: group.dim(),
                got: self.dim(),
            });
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let g: GridSpec = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        g.validate()?;
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_widths[axis] / self.counts[axis] as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.spacing(j)).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.spacing(j)).product()
    }

    /// Coordinate of node `i` along `axis`.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        -self.half_widths[axis] + i as f64 * self.spacing(axis)
    }

    pub fn axis_coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.counts[axis]).map(|i| self.coordinate(axis, i)).collect()
    }

    /// Row-major strides (last axis fastest).
    pub fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1; d];
        for j in (0..d.saturating_sub(1)).rev() {
            s[j] = s[j + 1] * self.counts[j + 1];
        }
        s
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let d = self.dim();
        let mut idx = vec![0; d];
        for j in (0..d).rev() {
            idx[j] = flat % self.counts[j];
            flat /= self.counts[j];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.counts)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .iter()
            .enumerate()
            .map(|(j, &i)| self.coordinate(j, i))
            .collect()
    }

    /// All node coordinates, flattened in row-major order.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|f| self.node(f)).collect()
    }

    pub fn origin_index(&self) -> usize {
        let idx: Vec<usize> = self.counts.iter().map(|n| n / 2).collect();
        self.ravel(&idx)
    }

    /// Spatial radius `max_j R_j^{1/v_j}` in the homogeneous quasi-norm.
    pub fn radius(&self, group: &GradedGroup) -> f64 {
        self.half_widths
            .iter()
            .zip(group.weights_f64())
            .map(|(r, v)| r.powf(1.0 / v))
            .fold(0.0, f64::max)
    }

    /// Index of the node reflected through the origin, if it lies on the grid.
    pub fn reflected_index(&self, flat: usize) -> Option<usize> {
        let mut idx = self.unravel(flat);
        for (i, &n) in idx.iter_mut().zip(&self.counts) {
            if *i == 0 {
                if self.periodic {
                    continue;
                }
                return None;
            }
            *i = n - *i;
        }
        Some(self.ravel(&idx))
    }

    /// Multilinear interpolation weights for `x`: `(flat index, weight)` pairs.
    ///
    /// Periodic grids wrap; otherwise nodes outside the box contribute zero.
    pub fn interpolation_stencil(&self, x: &[f64], out: &mut Vec<(usize, f64)>) {
        out.clear();
        let d = self.dim();
        let mut base = [0i64; crate::group::MAX_DIM];
        let mut frac = [0.0; crate::group::MAX_DIM];
        for j in 0..d {
            let u = (x[j] + self.half_widths[j]) / self.spacing(j);
            if !u.is_finite() {
                return;
            }
            let f = u.floor();
            base[j] = f as i64;
            frac[j] = u - f;
        }
        let strides = self.strides();
        'corner: for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut flat = 0;
            for j in 0..d {
                let bit = (corner >> j) & 1;
                let wj = if bit == 1 { frac[j] } else { 1.0 - frac[j] };
                if wj == 0.0 {
                    continue 'corner;
                }
                w *= wj;
                let n = self.counts[j] as i64;
                let mut i = base[j] + bit as i64;
                if self.periodic {
                    i = i.rem_euclid(n);
                } else if i < 0 || i >= n {
                    continue 'corner;
                }
                flat += i as usize * strides[j];
            }
            out.push((flat, w));
        }
    }
}
