use std::sync::Arc;

use nilwave::decay::{fit_scale_decay, fit_spatial_decay, fitted_constant, Regime, ScaleFitOptions, SpatialFitOptions};
use nilwave::wavelet::analyze;
use nilwave::{
    Calculus, Error, GGrid, GradedGroup, GridSpec, Multiplier, Profile, RocklandOperator, ScaleGrid,
    WaveletCoefficients, Weight, Window,
};
use num_complex::Complex64;

fn plane() -> Arc<GradedGroup> {
    Arc::new(GradedGroup::abelian_int(&[1, 2]).unwrap())
}

fn synthetic(scales: ScaleGrid, f: impl Fn(&[f64], f64) -> f64) -> WaveletCoefficients {
    let space = GridSpec::new(vec![40.0, 40.0], vec![64, 64], true).unwrap();
    WaveletCoefficients::from_fn(plane(), GGrid { space, scales }, |x, t| Complex64::new(f(x, t), 0.0)).unwrap()
}

fn radius(x: &[f64]) -> f64 {
    x[0].abs().max(x[1].abs().sqrt())
}

fn standard_window() -> (Arc<Calculus>, Window) {
    let grid = GridSpec::new(vec![44.0, 20.0], vec![64, 64], true).unwrap();
    let op = RocklandOperator::homogeneous_laplacian(plane(), Weight::integer(4)).unwrap();
    let calc = Arc::new(Calculus::new(op, grid).unwrap());
    let m = Multiplier::normalized(Profile::ExpCutoff { lambda0: 1e-3, order: 2 }, 4.0).unwrap();
    let window = Window::from_multiplier(calc.clone(), m).unwrap();
    (calc, window)
}

#[test]
fn constant_in_scale_gives_zero_slope() {
    let w = synthetic(ScaleGrid::geometric(1.0 / 16.0, 16.0, 17).unwrap(), |x, _| (-radius(x)).exp());
    for regime in [Regime::Small, Regime::Large] {
        let fit = fit_scale_decay(&w, regime, &ScaleFitOptions::default()).unwrap();
        assert!(fit.slope.abs() < 1e-12, "{regime:?}: {}", fit.slope);
    }
}

#[test]
fn power_laws_are_recovered() {
    let w = synthetic(ScaleGrid::geometric(1.0 / 16.0, 16.0, 17).unwrap(), |x, t| {
        let s = if t <= 1.0 { t.powi(5) } else { t.powi(-7) };
        s * (1.0 + radius(x)).powi(-3)
    });
    let small = fit_scale_decay(&w, Regime::Small, &ScaleFitOptions::default()).unwrap();
    let large = fit_scale_decay(&w, Regime::Large, &ScaleFitOptions::default()).unwrap();
    assert!((small.slope - 5.0).abs() < 1e-10 && small.r2 > 1.0 - 1e-12);
    assert!((large.slope + 7.0).abs() < 1e-10);
    assert!(small.points.len() >= 4 && small.range[0] > 1.0 / 16.0);
    let spatial = fit_spatial_decay(&w, 8, &SpatialFitOptions::default()).unwrap();
    assert!((spatial.slope + 3.0).abs() < 0.3, "{}", spatial.slope);
    assert!(!spatial.below_measurable_range);
}

#[test]
fn compact_support_is_below_measurable_range() {
    let w = synthetic(ScaleGrid::geometric(0.5, 2.0, 5).unwrap(), |x, _| if radius(x) < 2.0 { 1.0 } else { 0.0 });
    let fit = fit_spatial_decay(&w, 2, &SpatialFitOptions::default()).unwrap();
    assert!(fit.below_measurable_range);
    assert_eq!(fit.slope, f64::NEG_INFINITY);
}

#[test]
fn radially_constant_gives_zero_slope() {
    let w = synthetic(ScaleGrid::geometric(0.5, 2.0, 5).unwrap(), |_, _| 1.0);
    let fit = fit_spatial_decay(&w, 2, &SpatialFitOptions::default()).unwrap();
    assert!(fit.slope.abs() < 1e-12);
    assert!(!fit.below_measurable_range);
}

#[test]
fn too_few_scales_is_insufficient_data() {
    let w = synthetic(ScaleGrid::geometric(0.5, 2.0, 5).unwrap(), |_, _| 1.0);
    assert!(matches!(
        fit_scale_decay(&w, Regime::Small, &ScaleFitOptions::default()),
        Err(Error::InsufficientData(_))
    ));
}

#[test]
fn fitted_constants() {
    let zero = synthetic(ScaleGrid::geometric(0.5, 2.0, 5).unwrap(), |_, _| 0.0);
    assert_eq!(fitted_constant(&zero, 2, 4), 0.0);

    let (_, window) = standard_window();
    let scales = ScaleGrid::geometric(0.125, 8.0, 32).unwrap();
    let g = window.field().clone();
    let w = analyze(&g, &window, &scales).unwrap();
    let c = fitted_constant(&w, 2, 4);
    assert!(c.is_finite() && c > 0.0);
    assert!(fitted_constant(&w, 2, 5) >= c);

    let coarse = ScaleGrid::geometric(0.5, 2.0, 5).unwrap();
    let single = Window::sampled(g.clone());
    let double = Window::sampled(g.scaled(2.0));
    let c1 = fitted_constant(&analyze(&g, &single, &coarse).unwrap(), 2, 4);
    let c2 = fitted_constant(&analyze(&g.scaled(2.0), &double, &coarse).unwrap(), 2, 4);
    assert!((c2 / c1 - 4.0).abs() < 1e-10, "{}", c2 / c1);
}

#[test]
fn self_coefficient_decays_faster_toward_small_scales() {
    let (_, window) = standard_window();
    let scales = ScaleGrid::geometric(1.0 / 32.0, 32.0, 41).unwrap();
    let w = analyze(window.field(), &window, &scales).unwrap();
    let fit = |hi: f64| {
        let opts = ScaleFitOptions {
            range: Some((1.0 / 16.0, hi)),
            ..ScaleFitOptions::default()
        };
        fit_scale_decay(&w, Regime::Small, &opts).unwrap().slope
    };
    let (wide, narrow) = (fit(0.5), fit(0.25));
    assert!(wide >= 4.5, "{wide}");
    assert!(narrow >= wide - 0.3, "{wide} -> {narrow}");
}
