//! Complex-valued fields sampled on a grid.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::group::{GradedGroup, Weight};
use crate::spectral;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// How a field is evaluated away from its nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Resampling {
    /// Spectral on periodic abelian grids, multilinear otherwise.
    #[default]
    Auto,
    /// Band-limited trigonometric interpolation (periodic abelian grids only).
    Spectral,
    /// Multilinear interpolation with zero extension or periodic wrap.
    Multilinear,
}

/// A field on a group, sampled at the nodes of a grid in row-major order.
#[derive(Debug, Clone)]
pub struct SampledField {
    group: Arc<GradedGroup>,
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl SampledField {
    pub fn new(group: Arc<GradedGroup>, grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        grid.check_group(&group)?;
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(SampledField { group, grid, values })
    }

    pub fn zeros(group: Arc<GradedGroup>, grid: GridSpec) -> Result<Self> {
        let n = grid.len();
        Self::new(group, grid, vec![ZERO; n])
    }

    pub fn from_fn(group: Arc<GradedGroup>, grid: GridSpec, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Result<Self> {
        grid.validate()?;
        let values = (0..grid.len())
            .into_par_iter()
            .map(|flat| f(&grid.node(flat)))
            .collect();
        Self::new(group, grid, values)
    }

    /// The discrete Dirac mass at the identity.
    pub fn delta(group: Arc<GradedGroup>, grid: GridSpec) -> Result<Self> {
        let mut f = Self::zeros(group, grid)?;
        let o = f.grid.origin_index();
        f.values[o] = Complex64::new(1.0 / f.grid.cell_volume(), 0.0);
        Ok(f)
    }

    pub(crate) fn with_values(&self, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        SampledField {
            group: self.group.clone(),
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn group(&self) -> &Arc<GradedGroup> {
        &self.group
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Whether FFT convolution and spectral resampling apply.
    pub fn is_spectral(&self) -> bool {
        self.grid.periodic && self.group.is_abelian()
    }

    pub fn check_compatible(&self, other: &SampledField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        if self.group.description() != other.group.description() {
            return Err(Error::GridMismatch("fields live on different groups".into()));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &SampledField) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &SampledField) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect()))
    }

    /// Multilinear interpolation at an arbitrary point.
    pub fn sample(&self, x: &[f64]) -> Complex64 {
        let mut stencil = Vec::with_capacity(1 << self.grid.dim());
        self.sample_with(x, &mut stencil)
    }

    fn sample_with(&self, x: &[f64], stencil: &mut Vec<(usize, f64)>) -> Complex64 {
        self.grid.interpolation_stencil(x, stencil);
        stencil.iter().map(|&(i, w)| self.values[i] * w).sum()
    }

    /// Midpoint-rule integral over the box.
    pub fn integrate(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.cell_volume()
    }

    pub fn norm_l1(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn norm_sup(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `int f conj(g)`.
    pub fn inner(&self, other: &SampledField) -> Result<Complex64> {
        self.check_compatible(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            * self.grid.cell_volume())
    }

    /// Group convolution `(f * h)(x) = int f(y) h(y^{-1} x) dy`.
    ///
    /// Uses the FFT on periodic abelian grids and direct quadrature otherwise.
    pub fn convolve(&self, other: &SampledField) -> Result<Self> {
        self.check_compatible(other)?;
        if self.is_spectral() {
            Ok(self.with_values(spectral::circular_convolve(&self.grid, &self.values, &other.values)))
        } else {
            self.convolve_direct(other)
        }
    }

    /// Group convolution by direct quadrature with multilinear interpolation.
    pub fn convolve_direct(&self, other: &SampledField) -> Result<Self> {
        self.check_compatible(other)?;
        let grid = &self.grid;
        let group = &self.group;
        let d = grid.dim();
        let cv = grid.cell_volume();
        let sources: Vec<(Vec<f64>, Complex64)> = (0..grid.len())
            .filter(|&b| self.values[b] != ZERO)
            .map(|b| (group.inverse(&grid.node(b)).expect("dimension checked"), self.values[b]))
            .collect();
        let values = (0..grid.len())
            .into_par_iter()
            .map_init(
                || (vec![0.0; d], Vec::with_capacity(1 << d)),
                |(buf, stencil), a| {
                    let x = grid.node(a);
                    let mut acc = ZERO;
                    for (yinv, fy) in &sources {
                        group.multiply_into(yinv, &x, buf);
                        acc += fy * other.sample_with(buf, stencil);
                    }
                    acc * cv
                },
            )
            .collect();
        Ok(self.with_values(values))
    }

    /// `X_j f`: spectral on periodic abelian grids, otherwise the central
    /// difference of `f(x exp(s X_j))` at `s = 0` with step `h_j / 2`.
    pub fn left_invariant_derivative(&self, axis: usize) -> Result<Self> {
        let d = self.grid.dim();
        if axis >= d {
            return Err(Error::invalid(format!("axis {axis} out of range for dimension {d}")));
        }
        if self.is_spectral() {
            let nyquist = std::f64::consts::PI / self.grid.spacing(axis) * (1.0 - 1e-12);
            let values = spectral::apply_symbol(&self.grid, &self.values, |xi| {
                if xi[axis].abs() >= nyquist {
                    ZERO
                } else {
                    Complex64::new(0.0, xi[axis])
                }
            });
            return Ok(self.with_values(values));
        }
        let s = self.grid.spacing(axis) / 2.0;
        let grid = &self.grid;
        let group = &self.group;
        let values = (0..grid.len())
            .into_par_iter()
            .map_init(
                || (vec![0.0; d], vec![0.0; d], Vec::with_capacity(1 << d)),
                |(step, buf, stencil), a| {
                    let x = grid.node(a);
                    step[axis] = s;
                    group.multiply_into(&x, step, buf);
                    let fwd = self.sample_with(buf, stencil);
                    step[axis] = -s;
                    group.multiply_into(&x, step, buf);
                    let bwd = self.sample_with(buf, stencil);
                    (fwd - bwd) / (2.0 * s)
                },
            )
            .collect();
        Ok(self.with_values(values))
    }

    /// `X^alpha f = X_1^{alpha_1} ... X_d^{alpha_d} f`.
    pub fn iterated_derivative(&self, alpha: &[u32]) -> Result<Self> {
        if alpha.len() != self.grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.dim(),
                got: alpha.len(),
            });
        }
        let mut out = self.clone();
        for (axis, &a) in alpha.iter().enumerate().rev() {
            for _ in 0..a {
                out = out.left_invariant_derivative(axis)?;
            }
        }
        Ok(out)
    }

    /// `max_{|alpha| <= k} max_x (1 + |x|)^k |X^alpha f(x)|`.
    pub fn schwartz_seminorm(&self, k: u32) -> Result<f64> {
        let weights: Vec<f64> = (0..self.grid.len())
            .map(|a| (1.0 + self.group.quasi_norm_unchecked(&self.grid.node(a))).powi(k as i32))
            .collect();
        let mut best = 0.0f64;
        for alpha in multi_indices_by_length(self.grid.dim(), k) {
            let df = self.iterated_derivative(&alpha)?;
            let m = df
                .values
                .iter()
                .zip(&weights)
                .map(|(v, w)| v.norm() * w)
                .fold(0.0, f64::max);
            best = best.max(m);
        }
        Ok(best)
    }

    /// `int x^alpha f(x) dx`.
    pub fn moment(&self, alpha: &[u32]) -> Result<Complex64> {
        if alpha.len() != self.grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.dim(),
                got: alpha.len(),
            });
        }
        let coords: Vec<Vec<f64>> = (0..self.grid.dim()).map(|j| self.grid.axis_coordinates(j)).collect();
        let sum: Complex64 = (0..self.grid.len())
            .map(|flat| {
                let idx = self.grid.unravel(flat);
                let mono: f64 = idx
                    .iter()
                    .enumerate()
                    .map(|(j, &i)| coords[j][i].powi(alpha[j] as i32))
                    .product();
                self.values[flat] * mono
            })
            .sum();
        Ok(sum * self.grid.cell_volume())
    }

    fn resolve(&self, mode: Resampling) -> Result<Resampling> {
        match mode {
            Resampling::Auto if self.is_spectral() => Ok(Resampling::Spectral),
            Resampling::Auto => Ok(Resampling::Multilinear),
            Resampling::Spectral if !self.is_spectral() => Err(Error::Unsupported(
                "spectral resampling needs a periodic grid on an abelian group".into(),
            )),
            m => Ok(m),
        }
    }

    /// Field `y -> c * f(delta_{1/t}(x^{-1} y))`.
    pub(crate) fn transformed(&self, x: Option<&[f64]>, t: f64, c: f64, mode: Resampling) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::invalid(format!("scale must be positive, got {t}")));
        }
        let d = self.grid.dim();
        let zero = vec![0.0; d];
        let shift = x.unwrap_or(&zero);
        if shift.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: shift.len() });
        }
        match self.resolve(mode)? {
            Resampling::Spectral => {
                let scale: Vec<f64> = self.group.weights_f64().iter().map(|v| t.powf(-v)).collect();
                let mut out = spectral::resample(&self.grid, &self.values, &scale, shift);
                out.iter_mut().for_each(|v| *v *= c);
                Ok(self.with_values(out))
            }
            _ => {
                let xinv = self.group.inverse(shift)?;
                let grid = &self.grid;
                let values = (0..grid.len())
                    .into_par_iter()
                    .map_init(
                        || (vec![0.0; d], Vec::with_capacity(1 << d)),
                        |(buf, stencil), a| {
                            self.group.multiply_into(&xinv, &grid.node(a), buf);
                            let p = self.group.dilate_unchecked(buf, 1.0 / t);
                            self.sample_with(&p, stencil) * c
                        },
                    )
                    .collect();
                Ok(self.with_values(values))
            }
        }
    }

    /// `L^1`-normalized dilate `f_t(x) = t^{-Q} f(delta_{1/t} x)`.
    pub fn dilate(&self, t: f64) -> Result<Self> {
        self.dilate_with(t, Resampling::Auto)
    }

    pub fn dilate_with(&self, t: f64, mode: Resampling) -> Result<Self> {
        let q = self.group.homogeneous_dim_f64();
        self.transformed(None, t, t.powf(-q), mode)
    }

    /// Unitary dilate `D_t f(x) = t^{-Q/2} f(delta_{1/t} x)`.
    pub fn unitary_dilate(&self, t: f64, mode: Resampling) -> Result<Self> {
        let q = self.group.homogeneous_dim_f64();
        self.transformed(None, t, t.powf(-q / 2.0), mode)
    }

    /// `f^vee(x) = conj(f(x^{-1}))`; nodes whose reflection leaves the grid become zero.
    pub fn reflect_conj(&self) -> Self {
        let values = (0..self.grid.len())
            .map(|a| match self.grid.reflected_index(a) {
                Some(b) => self.values[b].conj(),
                None => ZERO,
            })
            .collect();
        self.with_values(values)
    }

    /// Writes `i1,...,id,re,im` rows in row-major order.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let d = self.grid.dim();
        let mut header: Vec<String> = (1..=d).map(|j| format!("i{j}")).collect();
        header.push("re".into());
        header.push("im".into());
        w.write_record(&header)?;
        for (flat, v) in self.values.iter().enumerate() {
            let mut rec: Vec<String> = self.grid.unravel(flat).iter().map(|i| i.to_string()).collect();
            rec.push(fmt_f64(v.re));
            rec.push(fmt_f64(v.im));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(group: Arc<GradedGroup>, grid: GridSpec, path: &Path) -> Result<Self> {
        let d = grid.dim();
        let mut r = csv::Reader::from_path(path)?;
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            message,
        };
        let header = r.headers()?.clone();
        let expected: Vec<String> = (1..=d)
            .map(|j| format!("i{j}"))
            .chain(["re".to_string(), "im".to_string()])
            .collect();
        if header.iter().collect::<Vec<_>>() != expected.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(parse_err(format!("expected header {}", expected.join(","))));
        }
        let mut values = vec![ZERO; grid.len()];
        let mut seen = vec![false; grid.len()];
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let idx: Vec<usize> = (0..d)
                .map(|j| rec[j].trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(format!("row {}: {e}", line + 2)))?;
            if idx.iter().zip(&grid.counts).any(|(i, n)| i >= n) {
                return Err(parse_err(format!("row {}: index out of range", line + 2)));
            }
            let re: f64 = rec[d].trim().parse().map_err(|e| parse_err(format!("row {}: {e}", line + 2)))?;
            let im: f64 = rec[d + 1].trim().parse().map_err(|e| parse_err(format!("row {}: {e}", line + 2)))?;
            let flat = grid.ravel(&idx);
            if seen[flat] {
                return Err(parse_err(format!("row {}: duplicate node", line + 2)));
            }
            seen[flat] = true;
            values[flat] = Complex64::new(re, im);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(parse_err(format!("node {:?} is missing", grid.unravel(missing))));
        }
        Self::new(group, grid, values)
    }
}

/// Decimal formatting with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Multi-indices with `sum_j alpha_j <= k`, in lexicographic order.
pub fn multi_indices_by_length(d: usize, k: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for a in 0..=left {
            cur[pos] = a;
            rec(pos + 1, left - a, cur, out);
        }
        cur[pos] = 0;
    }
    rec(0, k, &mut cur, &mut out);
    out
}

/// Multi-indices with homogeneous degree `[alpha] <= max_degree`.
pub fn multi_indices_by_degree(group: &GradedGroup, max_degree: Weight) -> Vec<Vec<u32>> {
    let d = group.dim();
    let w = group.weights();
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    fn rec(pos: usize, used: Weight, max: Weight, w: &[Weight], cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        let mut deg = used;
        let mut a = 0;
        while deg <= max {
            cur[pos] = a;
            rec(pos + 1, deg, max, w, cur, out);
            a += 1;
            deg = deg + w[pos];
        }
        cur[pos] = 0;
    }
    rec(0, Weight::integer(0), max_degree, w, &mut cur, &mut out);
    out
}
