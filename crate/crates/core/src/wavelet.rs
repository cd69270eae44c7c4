//! Continuous wavelet transform on `N ⋊ R+`.
//!
//! `V_g f(x, t) = <f, pi(x, t) g>` with `pi(x, t) g(y) = t^{-Q/2} g(delta_{1/t}(x^{-1} y))`,
//! computed as `f * (D_t g)^vee` on a geometric grid of scales.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{fmt_f64, Resampling, SampledField};
use crate::grid::GridSpec;
use crate::group::{GPoint, GradedGroup};
use crate::rockland::{smooth_step, Calculus, Multiplier};
use crate::spectral;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Geometric scales `t_i = t_min r^i`, each carrying the weight `log r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid {
    scales: Vec<f64>,
    log_min: f64,
    log_step: f64,
}

impl ScaleGrid {
    /// `n >= 2` scales running from `t_min` to `t_max` inclusive.
    pub fn geometric(t_min: f64, t_max: f64, n: usize) -> Result<Self> {
        if !(t_min.is_finite() && t_min > 0.0 && t_max.is_finite() && t_max > t_min) {
            return Err(Error::invalid(format!("scale range must satisfy 0 < t_min < t_max, got [{t_min}, {t_max}]")));
        }
        if n < 2 {
            return Err(Error::invalid("a scale grid needs at least 2 scales"));
        }
        let step = (t_max / t_min).ln() / (n - 1) as f64;
        Ok(Self::from_log(t_min.ln(), step, n))
    }

    /// `n` scales `t_min r^i`.
    pub fn with_ratio(t_min: f64, ratio: f64, n: usize) -> Result<Self> {
        if !(t_min > 0.0 && ratio > 1.0 && ratio.is_finite() && n >= 2) {
            return Err(Error::invalid("need t_min > 0, ratio > 1 and n >= 2"));
        }
        Ok(Self::from_log(t_min.ln(), ratio.ln(), n))
    }

    fn from_log(log_min: f64, log_step: f64, n: usize) -> Self {
        let scales = (0..n).map(|i| (log_min + i as f64 * log_step).exp()).collect();
        ScaleGrid {
            scales,
            log_min,
            log_step,
        }
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn log_step(&self) -> f64 {
        self.log_step
    }

    pub fn t_min(&self) -> f64 {
        self.scales[0]
    }

    pub fn t_max(&self) -> f64 {
        self.scales[self.scales.len() - 1]
    }

    /// Linear interpolation weights in `log t`; empty outside the grid.
    pub fn locate(&self, t: f64) -> Vec<(usize, f64)> {
        let s = (t.ln() - self.log_min) / self.log_step;
        let n = self.len() as f64;
        let r = s.round();
        if (s - r).abs() < 1e-9 {
            if r >= 0.0 && r < n {
                return vec![(r as usize, 1.0)];
            }
            return Vec::new();
        }
        if s < 0.0 || s > n - 1.0 {
            return Vec::new();
        }
        let i = s.floor() as usize;
        let f = s - i as f64;
        vec![(i, 1.0 - f), (i + 1, f)]
    }
}

/// Spatial grid together with a scale grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GGrid {
    pub space: GridSpec,
    pub scales: ScaleGrid,
}

/// Polynomial weight `(1 + |x|)^k (t^m + t^{-m'})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub k: f64,
    pub m: f64,
    pub m_prime: f64,
}

impl WeightSpec {
    pub fn new(k: f64, m: f64, m_prime: f64) -> Result<Self> {
        if [k, m, m_prime].iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("weight exponents must be finite and non-negative"));
        }
        Ok(WeightSpec { k, m, m_prime })
    }
}

/// A function on `N ⋊ R+` sampled on a [`GGrid`], stored scale-major.
#[derive(Debug, Clone)]
pub struct WaveletCoefficients {
    group: Arc<GradedGroup>,
    ggrid: GGrid,
    values: Vec<Complex64>,
    window_id: String,
}

impl WaveletCoefficients {
    pub fn new(group: Arc<GradedGroup>, ggrid: GGrid, values: Vec<Complex64>, window_id: impl Into<String>) -> Result<Self> {
        ggrid.space.check_group(&group)?;
        let expected = ggrid.space.len() * ggrid.scales.len();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(WaveletCoefficients {
            group,
            ggrid,
            values,
            window_id: window_id.into(),
        })
    }

    /// Builds a `G`-field from a closure of `(x, t)`.
    pub fn from_fn(group: Arc<GradedGroup>, ggrid: GGrid, f: impl Fn(&[f64], f64) -> Complex64) -> Result<Self> {
        let n = ggrid.space.len();
        let values = ggrid
            .scales
            .scales()
            .iter()
            .flat_map(|&t| (0..n).map(move |a| (a, t)))
            .map(|(a, t)| f(&ggrid.space.node(a), t))
            .collect();
        Self::new(group, ggrid, values, "synthetic")
    }

    fn from_slices(group: Arc<GradedGroup>, ggrid: GGrid, slices: Vec<Vec<Complex64>>, window_id: &str) -> Result<Self> {
        Self::new(group, ggrid, slices.into_iter().flatten().collect(), window_id)
    }

    pub fn group(&self) -> &Arc<GradedGroup> {
        &self.group
    }

    pub fn ggrid(&self) -> &GGrid {
        &self.ggrid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn window_id(&self) -> &str {
        &self.window_id
    }

    pub fn slice(&self, scale_index: usize) -> &[Complex64] {
        let n = self.ggrid.space.len();
        &self.values[scale_index * n..(scale_index + 1) * n]
    }

    pub fn slice_field(&self, scale_index: usize) -> SampledField {
        SampledField::new(self.group.clone(), self.ggrid.space.clone(), self.slice(scale_index).to_vec())
            .expect("slice matches its grid")
    }

    fn check_compatible(&self, other: &WaveletCoefficients) -> Result<()> {
        if self.ggrid != other.ggrid {
            return Err(Error::GridMismatch("coefficient grids differ".into()));
        }
        Ok(())
    }

    /// Multiplies the slice at scale `t` by `h(t)`.
    pub fn scale_by(&self, h: impl Fn(f64) -> f64) -> Self {
        let n = self.ggrid.space.len();
        let scales = self.ggrid.scales.scales();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v * h(scales[i / n]))
            .collect();
        WaveletCoefficients {
            values,
            ..self.clone()
        }
    }

    /// `int |F| w dmu_G` with the left Haar measure `t^{-Q} dx dt/t`.
    fn haar_sum(&self, point: impl Fn(Complex64, usize, f64) -> f64) -> f64 {
        let q = self.group.homogeneous_dim_f64();
        let cv = self.ggrid.space.cell_volume();
        let dlog = self.ggrid.scales.log_step();
        self.ggrid
            .scales
            .scales()
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let s: f64 = self.slice(i).iter().enumerate().map(|(a, &v)| point(v, a, t)).sum();
                s * cv * dlog * t.powf(-q)
            })
            .sum()
    }

    /// `||F||_{L^1(G)}`.
    pub fn norm_l1(&self) -> f64 {
        self.haar_sum(|v, _, _| v.norm())
    }

    /// `||F||^2_{L^2(G)}`.
    pub fn norm_sq(&self) -> f64 {
        self.haar_sum(|v, _, _| v.norm_sqr())
    }

    pub fn sub(&self, other: &WaveletCoefficients) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(WaveletCoefficients {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            ..self.clone()
        })
    }

    /// `sup_x |F(x, t_i)|` for every scale.
    pub fn sup_per_scale(&self) -> Vec<f64> {
        (0..self.ggrid.scales.len())
            .map(|i| self.slice(i).iter().map(|v| v.norm()).fold(0.0, f64::max))
            .collect()
    }

    /// Writes `i1,...,id,scale_index,t,re,im` rows, scale-major.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let grid = &self.ggrid.space;
        let d = grid.dim();
        let mut header: Vec<String> = (1..=d).map(|j| format!("i{j}")).collect();
        header.extend(["scale_index", "t", "re", "im"].map(String::from));
        w.write_record(&header)?;
        for (s, &t) in self.ggrid.scales.scales().iter().enumerate() {
            for (a, v) in self.slice(s).iter().enumerate() {
                let mut rec: Vec<String> = grid.unravel(a).iter().map(|i| i.to_string()).collect();
                rec.push(s.to_string());
                rec.push(fmt_f64(t));
                rec.push(fmt_f64(v.re));
                rec.push(fmt_f64(v.im));
                w.write_record(&rec)?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(group: Arc<GradedGroup>, ggrid: GGrid, path: &Path) -> Result<Self> {
        let grid = &ggrid.space;
        let d = grid.dim();
        let ns = ggrid.scales.len();
        let n = grid.len();
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            message,
        };
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        let expected: Vec<String> = (1..=d)
            .map(|j| format!("i{j}"))
            .chain(["scale_index", "t", "re", "im"].map(String::from))
            .collect();
        if header.iter().collect::<Vec<_>>() != expected.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(parse_err(format!("expected header {}", expected.join(","))));
        }
        let mut values = vec![ZERO; n * ns];
        let mut seen = vec![false; n * ns];
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = line + 2;
            let ints: Vec<usize> = (0..=d)
                .map(|j| rec[j].trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(format!("row {row}: {e}")))?;
            let (idx, s) = (&ints[..d], ints[d]);
            if s >= ns || idx.iter().zip(&grid.counts).any(|(i, c)| i >= c) {
                return Err(parse_err(format!("row {row}: index out of range")));
            }
            let num = |j: usize| -> Result<f64> {
                rec[j].trim().parse::<f64>().map_err(|e| parse_err(format!("row {row}: {e}")))
            };
            let t = num(d + 1)?;
            let expected_t = ggrid.scales.scales()[s];
            if (t - expected_t).abs() > 1e-9 * expected_t {
                return Err(parse_err(format!(
                    "row {row}: scale {t} does not match the configured scale {expected_t}"
                )));
            }
            let flat = s * n + grid.ravel(idx);
            if seen[flat] {
                return Err(parse_err(format!("row {row}: duplicate entry")));
            }
            seen[flat] = true;
            values[flat] = Complex64::new(num(d + 2)?, num(d + 3)?);
        }
        if seen.iter().any(|s| !s) {
            return Err(parse_err("coefficient table is incomplete".into()));
        }
        Self::new(group, ggrid, values, "imported")
    }
}

/// An analysing window and the rule producing its dilates.
#[derive(Debug, Clone)]
pub enum Window {
    /// A sampled field, dilated by resampling.
    Sampled { field: SampledField, mode: Resampling },
    /// The kernel of `m(L)`; dilates are `t^{Q/2} K_{m(t^nu L)}`, exact on the grid.
    Multiplier {
        calculus: Arc<Calculus>,
        multiplier: Multiplier,
        field: SampledField,
    },
}

impl Window {
    pub fn sampled(field: SampledField) -> Self {
        Window::Sampled {
            field,
            mode: Resampling::Auto,
        }
    }

    pub fn sampled_with(field: SampledField, mode: Resampling) -> Self {
        Window::Sampled { field, mode }
    }

    /// Window `K_m` of a multiplier. The multiplier need not be normalized here.
    pub fn from_multiplier(calculus: Arc<Calculus>, multiplier: Multiplier) -> Result<Self> {
        let field = calculus.kernel(|l| multiplier.eval(l))?;
        Ok(Window::Multiplier {
            calculus,
            multiplier,
            field,
        })
    }

    pub fn field(&self) -> &SampledField {
        match self {
            Window::Sampled { field, .. } | Window::Multiplier { field, .. } => field,
        }
    }

    pub fn group(&self) -> &Arc<GradedGroup> {
        self.field().group()
    }

    pub fn grid(&self) -> &GridSpec {
        self.field().grid()
    }

    pub fn id(&self) -> String {
        match self {
            Window::Sampled { .. } => "sampled".into(),
            Window::Multiplier { calculus, multiplier, .. } => {
                format!("multiplier:{:?}:{}", multiplier.profile(), calculus.path())
            }
        }
    }

    /// Rejects scale grids too fine for spatial interpolation of the window.
    pub fn check_resolution(&self, scales: &ScaleGrid) -> Result<()> {
        if let Window::Sampled { field, mode } = self {
            let interpolating = match mode {
                Resampling::Multilinear => true,
                Resampling::Auto => !field.is_spectral(),
                Resampling::Spectral => false,
            };
            if interpolating {
                let grid = field.grid();
                let floor = 2.0
                    * (0..grid.dim())
                        .map(|j| grid.spacing(j).powf(1.0 / field.group().weights_f64()[j]))
                        .fold(0.0, f64::max);
                if scales.t_min() < floor {
                    return Err(Error::Precondition(format!(
                        "smallest scale {} is below the interpolation floor {floor}",
                        scales.t_min()
                    )));
                }
            }
        }
        Ok(())
    }

    /// `D_t g(y) = t^{-Q/2} g(delta_{1/t} y)`.
    pub fn dilated(&self, t: f64) -> Result<SampledField> {
        match self {
            Window::Sampled { field, mode } => field.unitary_dilate(t, *mode),
            Window::Multiplier {
                calculus, multiplier, ..
            } => {
                let q = calculus.operator().group().homogeneous_dim_f64();
                let nu = multiplier.nu();
                let k = calculus.kernel(|l| multiplier.eval(l * t.powf(nu)))?;
                Ok(k.scaled(t.powf(q / 2.0)))
            }
        }
    }
}

/// Result of applying the quasi-regular representation.
#[derive(Debug, Clone)]
pub struct Applied {
    pub field: SampledField,
    /// Set when the transformed window has visibly left the grid.
    pub leaves_grid: bool,
}

/// `pi(x, t) g`.
pub fn quasi_regular_apply(window: &Window, p: &GPoint) -> Result<Applied> {
    let g = window.field();
    if p.x.len() != g.grid().dim() {
        return Err(Error::DimensionMismatch {
            expected: g.grid().dim(),
            got: p.x.len(),
        });
    }
    let field = match window {
        Window::Sampled { field, mode } => {
            let q = field.group().homogeneous_dim_f64();
            field.transformed(Some(&p.x), p.t, p.t.powf(-q / 2.0), *mode)?
        }
        Window::Multiplier { .. } => window.dilated(p.t)?.transformed(Some(&p.x), 1.0, 1.0, Resampling::Auto)?,
    };
    let before = g.norm_l2();
    let after = field.norm_l2();
    let leaves_grid = before > 0.0 && (after / before - 1.0).abs() > 1e-3;
    Ok(Applied { field, leaves_grid })
}

fn check_window(f: &SampledField, window: &Window) -> Result<()> {
    f.check_compatible(window.field())
}

/// `h * D_t g`, which equals `h * (D_t g)^vee` for the real symmetric windows used here.
/// Multiplier windows go through `t^{Q/2} m(t^nu L) h`.
fn window_convolve(h: &SampledField, window: &Window, t: f64, reflected: bool) -> Result<SampledField> {
    match window {
        Window::Multiplier {
            calculus, multiplier, ..
        } => {
            let q = calculus.operator().group().homogeneous_dim_f64();
            let nu = multiplier.nu();
            let tn = t.powf(nu);
            Ok(calculus.apply(h, |l| multiplier.eval(l * tn))?.scaled(t.powf(q / 2.0)))
        }
        Window::Sampled { .. } => {
            let d = window.dilated(t)?;
            h.convolve(&if reflected { d.reflect_conj() } else { d })
        }
    }
}

/// `h(L) noise` for the smooth band `h = phi(lambda / lo) (1 - phi(lambda / hi))`,
/// which vanishes below `lo` and above `2 hi`. The noise is uniform on
/// `[-1/2, 1/2]` from a seeded ChaCha8 stream.
pub fn band_limited_field(calculus: &Calculus, band: (f64, f64), seed: u64) -> Result<SampledField> {
    let (lo, hi) = band;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid(format!("band must satisfy 0 < lo < hi, got ({lo}, {hi})")));
    }
    let grid = calculus.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = (0..grid.len())
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, 0.0))
        .collect();
    let noise = SampledField::new(calculus.operator().group().clone(), grid, noise)?;
    calculus.apply(&noise, |l| smooth_step(l / lo) * (1.0 - smooth_step(l / hi)))
}

/// `V_g f` on every scale of `scales`.
pub fn analyze(f: &SampledField, window: &Window, scales: &ScaleGrid) -> Result<WaveletCoefficients> {
    check_window(f, window)?;
    window.check_resolution(scales)?;
    let slices = scales
        .scales()
        .par_iter()
        .map(|&t| Ok(window_convolve(f, window, t, true)?.into_values()))
        .collect::<Result<Vec<_>>>()?;
    WaveletCoefficients::from_slices(
        f.group().clone(),
        GGrid {
            space: f.grid().clone(),
            scales: scales.clone(),
        },
        slices,
        &window.id(),
    )
}

/// `V_g f(p) = int f conj(pi(p) g)` evaluated pointwise from its definition.
pub fn analyze_direct(f: &SampledField, window: &Window, points: &[GPoint]) -> Result<Vec<Complex64>> {
    check_window(f, window)?;
    points
        .par_iter()
        .map(|p| {
            let g = quasi_regular_apply(window, p)?.field;
            f.inner(&g)
        })
        .collect()
}

/// `||V_g f||^2_{L^2(G)}` by the scale quadrature.
pub fn g_norm_sq(w: &WaveletCoefficients) -> f64 {
    w.norm_sq()
}

/// `||V_g f||^2 / ||f||^2`.
pub fn isometry_ratio(w: &WaveletCoefficients, f: &SampledField) -> Result<f64> {
    let n = f.norm_l2();
    if n == 0.0 {
        return Err(Error::Degenerate("the analysed field is zero".into()));
    }
    Ok(g_norm_sq(w) / (n * n))
}

/// `sum_i t_i^{-Q} V_g f(., t_i) * D_{t_i} g  dlog t`.
pub fn synthesize(w: &WaveletCoefficients, window: &Window) -> Result<SampledField> {
    let g = window.field();
    if w.ggrid().space != *g.grid() {
        return Err(Error::GridMismatch("coefficients and window live on different grids".into()));
    }
    let q = g.group().homogeneous_dim_f64();
    let dlog = w.ggrid().scales.log_step();
    let parts = w
        .ggrid()
        .scales
        .scales()
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let piece = window_convolve(&w.slice_field(i), window, t, false)?;
            Ok(piece.scaled(t.powf(-q) * dlog))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = SampledField::zeros(g.group().clone(), g.grid().clone())?;
    for p in &parts {
        out = out.add(p)?;
    }
    Ok(out)
}

/// `sum_i f * g_{t_i}^vee * g_{t_i} dlog t`.
pub fn reconstruct(f: &SampledField, window: &Window, scales: &ScaleGrid) -> Result<SampledField> {
    synthesize(&analyze(f, window, scales)?, window)
}

/// `F` at scale `t` and spatial nodes, interpolated linearly in `log t`.
fn scale_blend(w: &WaveletCoefficients, t: f64) -> Option<Vec<Complex64>> {
    let loc = w.ggrid().scales.locate(t);
    if loc.is_empty() {
        return None;
    }
    let n = w.ggrid().space.len();
    let mut out = vec![ZERO; n];
    for (i, c) in loc {
        for (o, v) in out.iter_mut().zip(w.slice(i)) {
            *o += v * c;
        }
    }
    Some(out)
}

/// Convolution on `N ⋊ R+` with the left Haar measure.
///
/// Spectral on periodic abelian grids, direct quadrature otherwise.
pub fn g_convolve(f1: &WaveletCoefficients, f2: &WaveletCoefficients) -> Result<WaveletCoefficients> {
    f1.check_compatible(f2)?;
    let spectral = f1.ggrid().space.periodic && f1.group().is_abelian();
    if spectral {
        g_convolve_spectral(f1, f2)
    } else {
        g_convolve_direct(f1, f2)
    }
}

fn g_convolve_spectral(f1: &WaveletCoefficients, f2: &WaveletCoefficients) -> Result<WaveletCoefficients> {
    let grid = &f1.ggrid().space;
    let scales = f1.ggrid().scales.scales();
    let q = f1.group().homogeneous_dim_f64();
    let weights = f1.group().weights_f64().to_vec();
    let dlog = f1.ggrid().scales.log_step();
    let zero_shift = vec![0.0; grid.dim()];
    let slices = scales
        .par_iter()
        .map(|&t| {
            let mut acc = vec![ZERO; grid.len()];
            for (j, &u) in scales.iter().enumerate() {
                let Some(second) = scale_blend(f2, t / u) else { continue };
                let c: Vec<f64> = weights.iter().map(|v| u.powf(-v)).collect();
                let h = spectral::resample(grid, &second, &c, &zero_shift);
                let conv = spectral::circular_convolve(grid, f1.slice(j), &h);
                let wgt = dlog * u.powf(-q);
                for (a, v) in acc.iter_mut().zip(conv) {
                    *a += v * wgt;
                }
            }
            acc
        })
        .collect();
    WaveletCoefficients::from_slices(f1.group().clone(), f1.ggrid().clone(), slices, "g-convolution")
}

/// Direct quadrature of `int F1(q) F2(q^{-1} p) dmu_G(q)` with multilinear
/// interpolation in space and linear interpolation in `log t`.
pub fn g_convolve_direct(f1: &WaveletCoefficients, f2: &WaveletCoefficients) -> Result<WaveletCoefficients> {
    f1.check_compatible(f2)?;
    let grid = &f1.ggrid().space;
    let group = f1.group().clone();
    let d = grid.dim();
    let scales = f1.ggrid().scales.scales();
    let q = group.homogeneous_dim_f64();
    let cv = grid.cell_volume();
    let dlog = f1.ggrid().scales.log_step();
    let n = grid.len();
    let nodes = grid.nodes();
    let inverses: Vec<Vec<f64>> = nodes.iter().map(|x| group.inverse(x).expect("dimension checked")).collect();
    let targets: Vec<(usize, f64)> = scales
        .iter()
        .flat_map(|&t| (0..n).map(move |a| (a, t)))
        .collect();
    let values = targets
        .par_iter()
        .map_init(
            || (vec![0.0; d], Vec::with_capacity(1 << d)),
            |(buf, stencil), &(a, t)| {
                let x = &nodes[a];
                let mut acc = ZERO;
                for (j, &u) in scales.iter().enumerate() {
                    let loc = f2.ggrid().scales.locate(t / u);
                    if loc.is_empty() {
                        continue;
                    }
                    let mut inner = ZERO;
                    for (b, yinv) in inverses.iter().enumerate() {
                        let v1 = f1.slice(j)[b];
                        if v1 == ZERO {
                            continue;
                        }
                        group.multiply_into(yinv, x, buf);
                        let z = group.dilate_unchecked(buf, 1.0 / u);
                        grid.interpolation_stencil(&z, stencil);
                        let mut v2 = ZERO;
                        for &(k, c) in &loc {
                            let s = f2.slice(k);
                            v2 += stencil.iter().map(|&(i, w)| s[i] * w).sum::<Complex64>() * c;
                        }
                        inner += v1 * v2;
                    }
                    acc += inner * cv * dlog * u.powf(-q);
                }
                acc
            },
        )
        .collect();
    WaveletCoefficients::new(group, f1.ggrid().clone(), values, "g-convolution")
}

/// `F*(x, t) = Delta(x, t)^{-1} conj(F((x, t)^{-1}))`.
pub fn g_star(f: &WaveletCoefficients) -> Result<WaveletCoefficients> {
    let group = f.group().clone();
    let ggrid = f.ggrid().clone();
    let grid = &ggrid.space;
    let q = group.homogeneous_dim_f64();
    let spectral = grid.periodic && group.is_abelian();
    let d = grid.dim();
    let slices = ggrid
        .scales
        .scales()
        .par_iter()
        .map(|&t| {
            let Some(inv) = scale_blend(f, 1.0 / t) else {
                return vec![ZERO; grid.len()];
            };
            let factor = t.powf(q);
            if spectral {
                let c: Vec<f64> = group.weights_f64().iter().map(|v| t.powf(-v)).collect();
                let h = spectral::resample(grid, &inv, &c, &vec![0.0; d]);
                (0..grid.len())
                    .map(|a| match grid.reflected_index(a) {
                        Some(b) => h[b].conj() * factor,
                        None => ZERO,
                    })
                    .collect()
            } else {
                let mut stencil = Vec::new();
                (0..grid.len())
                    .map(|a| {
                        let x = grid.node(a);
                        let p = group.dilate_unchecked(&group.inverse(&x).expect("dimension checked"), 1.0 / t);
                        grid.interpolation_stencil(&p, &mut stencil);
                        stencil.iter().map(|&(i, w)| inv[i] * w).sum::<Complex64>().conj() * factor
                    })
                    .collect()
            }
        })
        .collect();
    WaveletCoefficients::from_slices(group, ggrid, slices, "star")
}

/// Relative defects of `F = Delta^{-1/2} V_g g` from being an idempotent and self-adjoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionDefect {
    pub conv_defect: f64,
    pub star_defect: f64,
}

/// `F = Delta^{-1/2} V_g g = t^{Q/2} V_g g`.
pub fn projection_field(window: &Window, scales: &ScaleGrid) -> Result<WaveletCoefficients> {
    let q = window.group().homogeneous_dim_f64();
    Ok(analyze(window.field(), window, scales)?.scale_by(|t| t.powf(q / 2.0)))
}

/// Scales whose reciprocal lies inside the scale grid.
pub fn self_dual_mask(scales: &ScaleGrid) -> Vec<bool> {
    scales.scales().iter().map(|t| !scales.locate(1.0 / t).is_empty()).collect()
}

/// Relative `L^1(G)` distance restricted to the scales selected by `mask`.
fn masked_relative_l1(a: &WaveletCoefficients, b: &WaveletCoefficients, mask: &[bool]) -> Result<f64> {
    let keep = |t: f64| {
        let i = b.ggrid().scales.locate(t);
        if i.len() == 1 && mask[i[0].0] {
            1.0
        } else {
            0.0
        }
    };
    let num = a.sub(b)?.scale_by(keep).norm_l1();
    let den = b.scale_by(keep).norm_l1();
    if den == 0.0 {
        return Err(Error::Degenerate("the window is zero".into()));
    }
    Ok(num / den)
}

/// `||F * F - F||_1 / ||F||_1` over the whole grid and `||F* - F||_1 / ||F||_1`
/// over the scales whose reciprocals are on the grid.
pub fn projection_defect(window: &Window, scales: &ScaleGrid) -> Result<ProjectionDefect> {
    let f = projection_field(window, scales)?;
    let norm = f.norm_l1();
    if norm == 0.0 {
        return Err(Error::Degenerate("the window is zero".into()));
    }
    let conv = g_convolve(&f, &f)?.sub(&f)?.norm_l1() / norm;
    let star = masked_relative_l1(&g_star(&f)?, &f, &self_dual_mask(scales))?;
    Ok(ProjectionDefect {
        conv_defect: conv,
        star_defect: star,
    })
}

/// `int |W(x, t)| (1 + |x|)^k (t^m + t^{-m'}) dmu_G`.
pub fn weighted_l1_norm(w: &WaveletCoefficients, weight: &WeightSpec) -> f64 {
    let grid = &w.ggrid().space;
    let spatial: Vec<f64> = (0..grid.len())
        .map(|a| (1.0 + w.group().quasi_norm_unchecked(&grid.node(a))).powf(weight.k))
        .collect();
    w.haar_sum(|v, a, t| v.norm() * spatial[a] * (t.powf(weight.m) + t.powf(-weight.m_prime)))
}
