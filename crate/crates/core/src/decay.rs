//! Power-law fits of wavelet coefficient decay in scale and space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet::WaveletCoefficients;

/// Which end of the scale axis a fit looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Small,
    Large,
}

/// Least-squares line through `(log x, log y)` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Abscissa range `[min, max]` of the fitted points (before taking logs).
    pub range: [f64; 2],
    /// The fitted `(log x, log y)` pairs.
    pub points: Vec<[f64; 2]>,
}

/// Options for [`fit_scale_decay`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFitOptions {
    /// Restrict to scales inside this interval (after the regime cut).
    pub range: Option<(f64, f64)>,
    /// Drop scales whose sup falls below `floor` times the global sup.
    pub floor: f64,
}

impl Default for ScaleFitOptions {
    fn default() -> Self {
        ScaleFitOptions {
            range: None,
            floor: 1e-10,
        }
    }
}

/// Options for [`fit_spatial_decay`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialFitOptions {
    /// Number of quasi-norm shells.
    pub shells: usize,
    /// Drop shells whose envelope falls below `floor` times the central value.
    pub floor: f64,
    /// Drop shells whose envelope exceeds `cap` times the central value.
    pub cap: f64,
}

impl Default for SpatialFitOptions {
    fn default() -> Self {
        SpatialFitOptions {
            shells: 48,
            floor: 1e-10,
            cap: 1e-2,
        }
    }
}

/// Outcome of a spatial fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialFit {
    pub scale_index: usize,
    pub t: f64,
    /// `-inf` when the decay is below the measurable range.
    pub slope: f64,
    pub r2: f64,
    pub below_measurable_range: bool,
    pub points: Vec<[f64; 2]>,
}

fn least_squares(points: &[[f64; 2]]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p[0] - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p[0] - mx) * (p[1] - my)).sum();
    let syy: f64 = points.iter().map(|p| (p[1] - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

/// Slope of `log sup_x |W(x, t)|` against `log t` in one regime.
///
/// The two outermost scales of the grid are never used.
pub fn fit_scale_decay(w: &WaveletCoefficients, regime: Regime, opts: &ScaleFitOptions) -> Result<Fit> {
    let scales = w.ggrid().scales.scales();
    let sups = w.sup_per_scale();
    let global = sups.iter().copied().fold(0.0, f64::max);
    let n = scales.len();
    let points: Vec<[f64; 2]> = (1..n.saturating_sub(1))
        .filter(|&i| match regime {
            Regime::Small => scales[i] <= 1.0 + 1e-12,
            Regime::Large => scales[i] >= 1.0 - 1e-12,
        })
        .filter(|&i| match opts.range {
            Some((lo, hi)) => scales[i] >= lo * (1.0 - 1e-12) && scales[i] <= hi * (1.0 + 1e-12),
            None => true,
        })
        .filter(|&i| sups[i] > 0.0 && sups[i] >= opts.floor * global)
        .map(|i| [scales[i].ln(), sups[i].ln()])
        .collect();
    if points.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} usable scales in the {regime:?} regime, need at least 4",
            points.len()
        )));
    }
    let (slope, intercept, r2) = least_squares(&points);
    Ok(Fit {
        slope,
        intercept,
        r2,
        range: [points[0][0].exp(), points[points.len() - 1][0].exp()],
        points,
    })
}

/// Slope of the shell envelope of `log |W(., t)|` against `log(1 + |x|)`.
///
/// Shells cover the inner 90% of every axis. The envelope is the running
/// maximum taken from the outside in, so it is non-increasing in the radius.
pub fn fit_spatial_decay(w: &WaveletCoefficients, scale_index: usize, opts: &SpatialFitOptions) -> Result<SpatialFit> {
    let ggrid = w.ggrid();
    if scale_index >= ggrid.scales.len() {
        return Err(Error::invalid(format!("scale index {scale_index} out of range")));
    }
    if opts.shells < 4 {
        return Err(Error::InsufficientData("need at least 4 shells".into()));
    }
    let grid = &ggrid.space;
    let group = w.group();
    let weights = group.weights_f64();
    let inner: Vec<f64> = grid.half_widths.iter().map(|r| 0.9 * r).collect();
    let r_max = inner
        .iter()
        .zip(weights)
        .map(|(r, v)| r.powf(1.0 / v))
        .fold(f64::INFINITY, f64::min);
    let slice = w.slice(scale_index);
    let nshell = opts.shells;
    let mut shell_max = vec![0.0f64; nshell];
    let mut shell_hit = vec![false; nshell];
    for (a, v) in slice.iter().enumerate() {
        let x = grid.node(a);
        if x.iter().zip(&inner).any(|(xi, r)| xi.abs() > *r) {
            continue;
        }
        let r = group.quasi_norm_unchecked(&x);
        if r >= r_max {
            continue;
        }
        let s = ((r / r_max) * nshell as f64) as usize;
        shell_max[s] = shell_max[s].max(v.norm());
        shell_hit[s] = true;
    }
    let populated: Vec<usize> = (0..nshell).filter(|&s| shell_hit[s]).collect();
    if populated.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "only {} populated shells",
            populated.len()
        )));
    }
    let mut env = vec![0.0f64; populated.len()];
    let mut run = 0.0f64;
    for (k, &s) in populated.iter().enumerate().rev() {
        run = run.max(shell_max[s]);
        env[k] = run;
    }
    let t = ggrid.scales.scales()[scale_index];
    let top = env[0];
    if top == 0.0 {
        return Err(Error::Degenerate("coefficients vanish at this scale".into()));
    }
    let radius = |s: usize| (s as f64 + 0.5) * r_max / nshell as f64;
    let points: Vec<[f64; 2]> = populated
        .iter()
        .zip(&env)
        .filter(|(_, &e)| e >= opts.floor * top && e <= opts.cap * top)
        .map(|(&s, &e)| [(1.0 + radius(s)).ln(), e.ln()])
        .collect();
    let vanished = env.iter().any(|&e| e < opts.floor * top);
    if points.len() < 4 {
        if vanished {
            return Ok(SpatialFit {
                scale_index,
                t,
                slope: f64::NEG_INFINITY,
                r2: f64::NAN,
                below_measurable_range: true,
                points,
            });
        }
        if env.iter().all(|&e| e > opts.cap * top) {
            let flat: Vec<[f64; 2]> = populated
                .iter()
                .zip(&env)
                .map(|(&s, &e)| [(1.0 + radius(s)).ln(), e.ln()])
                .collect();
            let (slope, _, r2) = least_squares(&flat);
            return Ok(SpatialFit {
                scale_index,
                t,
                slope,
                r2,
                below_measurable_range: false,
                points: flat,
            });
        }
        return Err(Error::InsufficientData(format!(
            "only {} shells inside the fit window",
            points.len()
        )));
    }
    let (slope, _, r2) = least_squares(&points);
    Ok(SpatialFit {
        scale_index,
        t,
        slope,
        r2,
        below_measurable_range: false,
        points,
    })
}

/// Smallest `C` with `|W(x, t)| <= C t^{±(Q/2+M)} (1 + |x|)^{-K}` on the grid.
pub fn fitted_constant(w: &WaveletCoefficients, m: u32, k: u32) -> f64 {
    let ggrid = w.ggrid();
    let grid = &ggrid.space;
    let group = w.group();
    let p = group.homogeneous_dim_f64() / 2.0 + m as f64;
    let spatial: Vec<f64> = (0..grid.len())
        .map(|a| (1.0 + group.quasi_norm_unchecked(&grid.node(a))).powi(k as i32))
        .collect();
    ggrid
        .scales
        .scales()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let tw = if t <= 1.0 { t.powf(-p) } else { t.powf(p) };
            w.slice(i)
                .iter()
                .zip(&spatial)
                .map(|(v, s)| v.norm() * s * tw)
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// One fitted constant `C(M, K)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedConstant {
    #[serde(rename = "M")]
    pub m: u32,
    #[serde(rename = "K")]
    pub k: u32,
    #[serde(rename = "C")]
    pub c: f64,
}

/// Summary of all decay fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub small_t_slope: f64,
    pub small_t_r2: f64,
    pub large_t_slope: f64,
    pub large_t_r2: f64,
    pub spatial_slopes: Vec<SpatialSlope>,
    pub fitted_constants: Vec<FittedConstant>,
    pub fit_ranges: FitRanges,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialSlope {
    pub scale_index: usize,
    pub t: f64,
    pub slope: f64,
    pub r2: f64,
    pub below_measurable_range: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRanges {
    pub small_t: [f64; 2],
    pub large_t: [f64; 2],
    pub spatial_shells: usize,
    pub inner_fraction: f64,
}

/// All fits of a decay report with their plot data.
#[derive(Debug, Clone)]
pub struct DecayAnalysis {
    pub report: DecayReport,
    pub small: Fit,
    pub large: Fit,
    pub spatial: Vec<SpatialFit>,
}

/// Runs the scale fits in both regimes, spatial fits at `spatial_scales`, and
/// fitted constants for each `(M, K)` pair.
pub fn decay_analysis(
    w: &WaveletCoefficients,
    small: &ScaleFitOptions,
    large: &ScaleFitOptions,
    spatial_scales: &[usize],
    spatial: &SpatialFitOptions,
    constants: &[(u32, u32)],
) -> Result<DecayAnalysis> {
    let small_fit = fit_scale_decay(w, Regime::Small, small)?;
    let large_fit = fit_scale_decay(w, Regime::Large, large)?;
    let spatial_fits = spatial_scales
        .iter()
        .map(|&i| fit_spatial_decay(w, i, spatial))
        .collect::<Result<Vec<_>>>()?;
    let report = DecayReport {
        small_t_slope: small_fit.slope,
        small_t_r2: small_fit.r2,
        large_t_slope: large_fit.slope,
        large_t_r2: large_fit.r2,
        spatial_slopes: spatial_fits
            .iter()
            .map(|f| SpatialSlope {
                scale_index: f.scale_index,
                t: f.t,
                slope: f.slope,
                r2: f.r2,
                below_measurable_range: f.below_measurable_range,
            })
            .collect(),
        fitted_constants: constants
            .iter()
            .map(|&(m, k)| FittedConstant {
                m,
                k,
                c: fitted_constant(w, m, k),
            })
            .collect(),
        fit_ranges: FitRanges {
            small_t: small_fit.range,
            large_t: large_fit.range,
            spatial_shells: spatial.shells,
            inner_fraction: 0.9,
        },
    };
    Ok(DecayAnalysis {
        report,
        small: small_fit,
        large: large_fit,
        spatial: spatial_fits,
    })
}
