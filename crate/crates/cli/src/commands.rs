use std::path::Path;

use nilwave::decay::{
    fit_scale_decay, fit_spatial_decay, fitted_constant, FittedConstant, Regime, ScaleFitOptions, SpatialFitOptions,
    SpatialSlope,
};
use nilwave::field::multi_indices_by_degree;
use nilwave::wavelet::{analyze, isometry_ratio, projection_defect, projection_field, reconstruct, synthesize, weighted_l1_norm};
use nilwave::{GGrid, SampledField, WaveletCoefficients, Weight};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{ensure_dir, write_json, write_pairs};
use crate::pipeline::Pipeline;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, value: f64, min: Option<f64>, max: Option<f64>) -> Self {
        let pass = !value.is_nan() && min.is_none_or(|m| value >= m) && max.is_none_or(|m| value <= m);
        Check {
            name: name.into(),
            value,
            min,
            max,
            pass,
        }
    }

    fn at_least(name: &str, value: f64, min: f64) -> Self {
        Self::new(name, value, Some(min), None)
    }

    fn at_most(name: &str, value: f64, max: f64) -> Self {
        Self::new(name, value, None, Some(max))
    }
}

#[derive(Serialize)]
struct MomentEntry {
    alpha: Vec<u32>,
    degree: f64,
    re: f64,
    im: f64,
    normalized: f64,
}

#[derive(Serialize)]
struct SeminormEntry {
    k: u32,
    value: f64,
}

#[derive(Serialize)]
struct HulanickiEntry {
    m1: u32,
    m2: u32,
    value: f64,
}

#[derive(Serialize)]
struct WindowMeta {
    group: String,
    path: String,
    grid: nilwave::GridSpec,
    nu: f64,
    normalized: bool,
    normalization_constant: f64,
    l1_norm: f64,
    l2_norm: f64,
    grid_radius: f64,
    max_abs_moment: f64,
    moments: Vec<MomentEntry>,
    seminorms: Vec<SeminormEntry>,
    hulanicki: Vec<HulanickiEntry>,
}

fn moment_table(p: &Pipeline) -> Result<(f64, Vec<MomentEntry>), CliError> {
    let g = p.window.field();
    let l1 = g.norm_l1();
    let radius = p.cfg.grid.radius(&p.group);
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for alpha in multi_indices_by_degree(&p.group, Weight::integer(6)) {
        let degree = p.group.homogeneous_degree(&alpha)?.to_f64();
        let m = g.moment(&alpha)?;
        let normalized = m.norm() / (l1 * radius.powf(degree));
        worst = worst.max(normalized);
        rows.push(MomentEntry {
            alpha,
            degree,
            re: m.re,
            im: m.im,
            normalized,
        });
    }
    Ok((worst, rows))
}

pub fn synthesize_window(p: &Pipeline, out: &Path) -> Result<(), CliError> {
    let g = p.window.field();
    let (max_abs_moment, moments) = moment_table(p)?;
    let seminorms = (0..=4)
        .map(|k| Ok(SeminormEntry { k, value: g.schwartz_seminorm(k)? }))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut hulanicki = Vec::new();
    for m1 in [0u32, 2, 4] {
        for m2 in [0u32, 2, 4] {
            let value = nilwave::rockland::hulanicki_norm(g, Weight::integer(m1 as i64), m2)?;
            hulanicki.push(HulanickiEntry { m1, m2, value });
        }
    }
    let meta = WindowMeta {
        group: p.group.name().to_string(),
        path: p.calculus.path().to_string(),
        grid: p.cfg.grid.clone(),
        nu: p.multiplier.nu(),
        normalized: p.multiplier.is_normalized(),
        normalization_constant: p.multiplier.constant(),
        l1_norm: g.norm_l1(),
        l2_norm: g.norm_l2(),
        grid_radius: p.cfg.grid.radius(&p.group),
        max_abs_moment,
        moments,
        seminorms,
        hulanicki,
    };
    ensure_dir(out)?;
    g.write_csv(&out.join("window.csv"))?;
    write_json(&out.join("window.meta.json"), &meta)
}

pub fn analyze_field(p: &Pipeline, input: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let f = match input {
        Some(path) => SampledField::read_csv(p.group.clone(), p.cfg.grid.clone(), path)?,
        None => p.test_field()?,
    };
    let w = analyze(&f, &p.window, &p.scales)?;
    ensure_dir(out)?;
    if input.is_none() {
        f.write_csv(&out.join("test_field.csv"))?;
    }
    w.write_csv(&out.join("coefficients.csv"))?;
    Ok(())
}

pub fn reconstruct_field(p: &Pipeline, input: &Path, out: &Path) -> Result<(), CliError> {
    let ggrid = GGrid {
        space: p.cfg.grid.clone(),
        scales: p.scales.clone(),
    };
    let w = WaveletCoefficients::read_csv(p.group.clone(), ggrid, input)?;
    let f = synthesize(&w, &p.window)?;
    ensure_dir(out)?;
    f.write_csv(&out.join("reconstruction.csv"))?;
    Ok(())
}

#[derive(Clone, Copy, Serialize)]
struct FitSummary {
    slope: f64,
    r2: f64,
    range: [f64; 2],
}

#[derive(Serialize)]
struct FitRanges {
    small_t: Option<[f64; 2]>,
    large_t: Option<[f64; 2]>,
    spatial_shells: usize,
    inner_fraction: f64,
}

#[derive(Serialize)]
pub struct DecaySection {
    small_t: Option<FitSummary>,
    large_t: Option<FitSummary>,
    spatial_slopes: Vec<SpatialSlope>,
    fitted_constants: Vec<FittedConstant>,
    fit_ranges: FitRanges,
    failures: Vec<String>,
}

pub struct DecayPlots {
    small: Option<Vec<[f64; 2]>>,
    large: Option<Vec<[f64; 2]>>,
    spatial: Vec<(usize, Vec<[f64; 2]>)>,
}

pub fn decay_section(p: &Pipeline) -> Result<Option<(DecaySection, DecayPlots, Vec<Check>)>, CliError> {
    let Some(cfg) = &p.cfg.decay else { return Ok(None) };
    let tol = &p.cfg.tolerances;
    let q = p.group.homogeneous_dim_f64();
    let scales = cfg.scales.build("decay.scales")?;
    let w = analyze(p.window.field(), &p.window, &scales)?;
    let mut checks = Vec::new();
    let mut failures = Vec::new();

    let mut fit = |regime: Regime, range: Option<[f64; 2]>, checks: &mut Vec<Check>| -> Option<(FitSummary, Vec<[f64; 2]>)> {
        let [lo, hi] = range?;
        let opts = ScaleFitOptions {
            range: Some((lo, hi)),
            floor: cfg.floor,
        };
        let (name, bound) = match regime {
            Regime::Small => ("small_t_slope", tol.small_t_slope_min.unwrap_or(q / 2.0 + 3.0)),
            Regime::Large => ("large_t_slope", tol.large_t_slope_max.unwrap_or(-(q / 2.0 + 3.0))),
        };
        match fit_scale_decay(&w, regime, &opts) {
            Ok(f) => {
                checks.push(match regime {
                    Regime::Small => Check::at_least(name, f.slope, bound),
                    Regime::Large => Check::at_most(name, f.slope, bound),
                });
                checks.push(Check::at_least(&format!("{name}_r2"), f.r2, tol.r2_min));
                Some((
                    FitSummary {
                        slope: f.slope,
                        r2: f.r2,
                        range: f.range,
                    },
                    f.points,
                ))
            }
            Err(e) => {
                failures.push(format!("{name}: {e}"));
                None
            }
        }
    };
    let small = fit(Regime::Small, cfg.small_range, &mut checks);
    let large = fit(Regime::Large, cfg.large_range, &mut checks);

    let mut spatial_slopes = Vec::new();
    let mut spatial_plots = Vec::new();
    if let Some(spatial_cfg) = &cfg.spatial_scales {
        let spatial_window = p.window_on(cfg.spatial_grid.as_ref(), "decay.spatial_grid")?;
        let spatial_scales = spatial_cfg.build("decay.spatial_scales")?;
        let target = spatial_scales
            .scales()
            .iter()
            .position(|t| (t / cfg.spatial_t - 1.0).abs() < 1e-9)
            .ok_or_else(|| CliError::config("decay.spatial_t", "must be one of the spatial scales"))?;
        let v = analyze(spatial_window.field(), &spatial_window, &spatial_scales)?;
        let opts = SpatialFitOptions {
            shells: cfg.shells,
            floor: cfg.floor,
            cap: cfg.cap,
        };
        for i in 0..spatial_scales.len() {
            match fit_spatial_decay(&v, i, &opts) {
                Ok(s) => {
                    if i == target {
                        checks.push(Check::at_most("spatial_slope", s.slope, tol.spatial_slope_max));
                        if !s.below_measurable_range {
                            checks.push(Check::at_least("spatial_slope_r2", s.r2, tol.r2_min));
                        }
                    }
                    spatial_slopes.push(SpatialSlope {
                        scale_index: i,
                        t: s.t,
                        slope: s.slope,
                        r2: s.r2,
                        below_measurable_range: s.below_measurable_range,
                    });
                    spatial_plots.push((i, s.points));
                }
                Err(e) => failures.push(format!("spatial fit at scale index {i}: {e}")),
            }
        }
    }

    let fitted_constants = cfg
        .constants
        .iter()
        .map(|&[m, k]| FittedConstant {
            m,
            k,
            c: fitted_constant(&w, m, k),
        })
        .collect();
    let section = DecaySection {
        fit_ranges: FitRanges {
            small_t: cfg.small_range,
            large_t: cfg.large_range,
            spatial_shells: cfg.shells,
            inner_fraction: 0.9,
        },
        small_t: small.as_ref().map(|(s, _)| *s),
        large_t: large.as_ref().map(|(s, _)| *s),
        spatial_slopes,
        fitted_constants,
        failures,
    };
    let plots = DecayPlots {
        small: small.map(|(_, p)| p),
        large: large.map(|(_, p)| p),
        spatial: spatial_plots,
    };
    Ok(Some((section, plots, checks)))
}

#[derive(Serialize)]
struct DecayOutput<'a> {
    #[serde(flatten)]
    decay: &'a DecaySection,
    checks: &'a [Check],
    pass: bool,
}

fn write_plots(plots: &DecayPlots, out: &Path) -> Result<(), CliError> {
    if let Some(points) = &plots.small {
        write_pairs(&out.join("decay_small_t.csv"), ["log_t", "log_sup"], points)?;
    }
    if let Some(points) = &plots.large {
        write_pairs(&out.join("decay_large_t.csv"), ["log_t", "log_sup"], points)?;
    }
    for (i, points) in &plots.spatial {
        write_pairs(&out.join(format!("decay_spatial_{i}.csv")), ["log_shell", "log_abs"], points)?;
    }
    Ok(())
}

fn failed(checks: &[Check], failures: &[String]) -> usize {
    checks.iter().filter(|c| !c.pass).count() + failures.len()
}

pub fn decay_report(p: &Pipeline, out: &Path) -> Result<(), CliError> {
    let Some((section, plots, checks)) = decay_section(p)? else {
        return Err(CliError::config("decay", "the decay section is disabled"));
    };
    let n = failed(&checks, &section.failures);
    ensure_dir(out)?;
    write_json(
        &out.join("decay.json"),
        &DecayOutput {
            decay: &section,
            checks: &checks,
            pass: n == 0,
        },
    )?;
    write_plots(&plots, out)?;
    report(&checks, &section.failures);
    if n == 0 {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(n))
    }
}

#[derive(Serialize)]
struct WeightedL1 {
    k: f64,
    m: f64,
    m_prime: f64,
    base: f64,
    widened: f64,
    relative_change: f64,
}

#[derive(Serialize)]
struct Verification {
    normalization_constant: f64,
    isometry_ratio: f64,
    reconstruction_l2_rel_error: f64,
    reconstruction_l2_rel_error_widened: f64,
    conv_defect: Option<f64>,
    star_defect: Option<f64>,
    weighted_l1: WeightedL1,
    max_abs_moment: f64,
    decay: Option<DecaySection>,
    checks: Vec<Check>,
    failures: Vec<String>,
    pass: bool,
}

#[derive(Serialize)]
struct DegenerateReport {
    failures: Vec<String>,
    pass: bool,
}

pub fn write_degenerate(out: &Path, message: &str) -> Result<(), CliError> {
    ensure_dir(out)?;
    write_json(
        &out.join("verification.json"),
        &DegenerateReport {
            failures: vec![format!("degenerate window: {message}")],
            pass: false,
        },
    )
}

pub fn verify(p: &Pipeline, out: &Path) -> Result<(), CliError> {
    let tol = &p.cfg.tolerances;
    let f = p.test_field()?;
    let w = analyze(&f, &p.window, &p.scales)?;
    let ratio = isometry_ratio(&w, &f)?;
    let rel = |r: &SampledField| r.sub(&f).map(|d| d.norm_l2() / f.norm_l2());
    let wide = p.widened_scales()?;
    let e_base = rel(&reconstruct(&f, &p.window, &p.scales)?)?;
    let e_wide = rel(&reconstruct(&f, &p.window, &wide)?)?;
    let a = weighted_l1_norm(&projection_field(&p.window, &p.scales)?, &p.cfg.weight);
    let b = weighted_l1_norm(&projection_field(&p.window, &wide)?, &p.cfg.weight);
    let change = (b - a).abs() / a;
    let (max_abs_moment, _) = moment_table(p)?;

    let mut checks = vec![
        Check::new("isometry_ratio", ratio, Some(tol.isometry_min), Some(tol.isometry_max)),
        Check::at_most("reconstruction_l2_rel_error", e_base, tol.reconstruction),
        Check::at_most("reconstruction_l2_rel_error_widened", e_wide, e_base),
        Check::at_most("weighted_l1_relative_change", change, tol.weighted_l1_change),
        Check::at_most("max_abs_moment", max_abs_moment, tol.max_abs_moment),
    ];
    let (mut conv, mut star) = (None, None);
    if let Some(cfg) = &p.cfg.projection {
        let window = p.window_on(cfg.grid.as_ref(), "projection.grid")?;
        let d = projection_defect(&window, &cfg.scales.build("projection.scales")?)?;
        checks.push(Check::at_most("conv_defect", d.conv_defect, tol.conv_defect));
        checks.push(Check::at_most("star_defect", d.star_defect, tol.star_defect));
        conv = Some(d.conv_defect);
        star = Some(d.star_defect);
    }
    let mut failures = Vec::new();
    let decay = match decay_section(p)? {
        Some((section, plots, decay_checks)) => {
            ensure_dir(out)?;
            write_plots(&plots, out)?;
            checks.extend(decay_checks);
            failures.extend(section.failures.iter().cloned());
            Some(section)
        }
        None => None,
    };
    let n = failed(&checks, &failures);
    let report_json = Verification {
        normalization_constant: p.multiplier.constant(),
        isometry_ratio: ratio,
        reconstruction_l2_rel_error: e_base,
        reconstruction_l2_rel_error_widened: e_wide,
        conv_defect: conv,
        star_defect: star,
        weighted_l1: WeightedL1 {
            k: p.cfg.weight.k,
            m: p.cfg.weight.m,
            m_prime: p.cfg.weight.m_prime,
            base: a,
            widened: b,
            relative_change: change,
        },
        max_abs_moment,
        decay,
        checks,
        failures,
        pass: n == 0,
    };
    ensure_dir(out)?;
    write_json(&out.join("verification.json"), &report_json)?;
    report(&report_json.checks, &report_json.failures);
    if n == 0 {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(n))
    }
}

fn report(checks: &[Check], failures: &[String]) {
    for c in checks {
        let bound = match (c.min, c.max) {
            (Some(lo), Some(hi)) => format!("in [{lo:e}, {hi:e}]"),
            (Some(lo), None) => format!(">= {lo:e}"),
            (None, Some(hi)) => format!("<= {hi:e}"),
            (None, None) => String::new(),
        };
        let status = if c.pass { "pass" } else { "FAIL" };
        eprintln!("{status:>4}  {:<38} {:>14.6e}  {bound}", c.name, c.value);
    }
    for f in failures {
        eprintln!("FAIL  {f}");
    }
}
