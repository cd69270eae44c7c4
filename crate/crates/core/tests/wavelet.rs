use std::sync::Arc;

use nilwave::wavelet::{
    analyze, analyze_direct, band_limited_field, g_convolve, g_convolve_direct, g_norm_sq, g_star, isometry_ratio,
    projection_defect, projection_field, quasi_regular_apply, reconstruct, synthesize, weighted_l1_norm,
};
use nilwave::{
    Calculus, Error, GGrid, GPoint, GradedGroup, GridSpec, Multiplier, Profile, RocklandOperator, SampledField,
    ScaleGrid, WaveletCoefficients, Weight, WeightSpec, Window,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn plane() -> Arc<GradedGroup> {
    Arc::new(GradedGroup::abelian_int(&[1, 2]).unwrap())
}

fn default_multiplier() -> Multiplier {
    Multiplier::normalized(Profile::ExpCutoff { lambda0: 1e-3, order: 2 }, 4.0).unwrap()
}

fn plane_setup(half_widths: [f64; 2], counts: [usize; 2]) -> (Arc<Calculus>, Window) {
    let grid = GridSpec::new(half_widths.to_vec(), counts.to_vec(), true).unwrap();
    let op = RocklandOperator::homogeneous_laplacian(plane(), Weight::integer(4)).unwrap();
    let calc = Arc::new(Calculus::new(op, grid).unwrap());
    let window = Window::from_multiplier(calc.clone(), default_multiplier()).unwrap();
    (calc, window)
}

fn small() -> (Arc<Calculus>, Window) {
    plane_setup([22.0, 10.0], [32, 32])
}

fn aligned_scales() -> ScaleGrid {
    ScaleGrid::with_ratio(0.25, 4f64.powf(1.0 / 7.0), 16).unwrap()
}

fn rel_l2(a: &SampledField, b: &SampledField) -> f64 {
    a.sub(b).unwrap().norm_l2() / b.norm_l2()
}

fn pairing(a: &WaveletCoefficients, b: &WaveletCoefficients) -> Complex64 {
    let q = a.group().homogeneous_dim_f64();
    let ggrid = a.ggrid();
    let cv = ggrid.space.cell_volume();
    let dlog = ggrid.scales.log_step();
    ggrid
        .scales
        .scales()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let s: Complex64 = a.slice(i).iter().zip(b.slice(i)).map(|(x, y)| x * y.conj()).sum();
            s * cv * dlog * t.powf(-q)
        })
        .sum()
}

#[test]
fn scale_grids() {
    let s = ScaleGrid::geometric(0.125, 8.0, 32).unwrap();
    assert_eq!(s.len(), 32);
    assert!((s.log_step() - 64f64.ln() / 31.0).abs() < 1e-15);
    assert!(ScaleGrid::geometric(1.0, 0.5, 4).is_err());
    assert!(ScaleGrid::geometric(0.0, 1.0, 4).is_err());
    assert!(ScaleGrid::geometric(0.5, 1.0, 1).is_err());
    let r = ScaleGrid::with_ratio(0.5, 2.0, 3).unwrap();
    assert!((r.t_max() - 2.0).abs() < 1e-15);
}

#[test]
fn quasi_regular_representation() {
    let (_, window) = plane_setup([44.0, 20.0], [64, 64]);
    let g = window.field();
    let e = GPoint::new(vec![0.0, 0.0], 1.0).unwrap();
    let same = quasi_regular_apply(&window, &e).unwrap();
    assert!(same.field.sub(g).unwrap().norm_sup() <= 1e-12 * g.norm_sup());
    assert!(!same.leaves_grid);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let p = GPoint::new(vec![rng.gen_range(-5.0..5.0), rng.gen_range(-2.0..2.0)], rng.gen_range(0.85..1.4)).unwrap();
        let applied = quasi_regular_apply(&window, &p).unwrap();
        let ratio = applied.field.norm_l2() / g.norm_l2();
        assert!((0.9999..=1.0001).contains(&ratio), "p = {p:?}: {ratio}");
    }

    let line = Arc::new(GradedGroup::abelian_int(&[1]).unwrap());
    let grid = GridSpec::new(vec![16.0], vec![64], true).unwrap();
    let bump = SampledField::from_fn(line.clone(), grid.clone(), |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
    let sampled = Window::sampled(bump);
    let moved = quasi_regular_apply(&sampled, &GPoint::new(vec![1.0], 1.0).unwrap()).unwrap().field;
    for a in 0..grid.len() {
        let x = grid.node(a)[0];
        assert!((moved.values()[a].re - (-(x - 1.0) * (x - 1.0)).exp()).abs() < 1e-12);
    }
}

#[test]
fn analysis_matches_the_inner_product_definition() {
    let (calc, window) = small();
    let f = band_limited_field(&calc, (1e-3, 25.0), 5).unwrap();
    let scales = aligned_scales();
    let w = analyze(&f, &window, &scales).unwrap();
    let grid = calc.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let picks: Vec<(usize, usize)> = (0..100).map(|_| (rng.gen_range(0..grid.len()), rng.gen_range(0..scales.len()))).collect();
    let points: Vec<GPoint> = picks
        .iter()
        .map(|&(a, i)| GPoint::new(grid.node(a), scales.scales()[i]).unwrap())
        .collect();
    let direct = analyze_direct(&f, &window, &points).unwrap();
    let scale = w.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (&(a, i), d) in picks.iter().zip(&direct) {
        assert!((w.slice(i)[a] - d).norm() <= 1e-8 * scale.max(1.0));
    }

    let g = window.field();
    let unit = ScaleGrid::with_ratio(1.0, 2.0, 2).unwrap();
    let wg = analyze(g, &window, &unit).unwrap();
    let o = grid.origin_index();
    let expected = g.norm_l2().powi(2);
    assert!((wg.slice(0)[o].re - expected).abs() <= 1e-12 * expected);
}

#[test]
fn analysis_is_covariant() {
    let (calc, window) = small();
    let f = band_limited_field(&calc, (1e-3, 25.0), 6).unwrap();
    let grid = calc.grid().clone();
    let scales = aligned_scales();
    let (s1, s2) = (3usize, 5usize);
    let shift = vec![s1 as f64 * grid.spacing(0), s2 as f64 * grid.spacing(1)];
    let q = GPoint::new(shift, 1.0).unwrap();
    let moved = quasi_regular_apply(&Window::sampled(f.clone()), &q).unwrap().field;
    let w = analyze(&f, &window, &scales).unwrap();
    let wq = analyze(&moved, &window, &scales).unwrap();
    let scale = w.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let (n1, n2) = (grid.counts[0], grid.counts[1]);
    for i in 0..scales.len() {
        for a in 0..grid.len() {
            let (i1, i2) = (a / n2, a % n2);
            let b = ((i1 + n1 - s1) % n1) * n2 + (i2 + n2 - s2) % n2;
            assert!((wq.slice(i)[a] - w.slice(i)[b]).norm() <= 1e-6 * scale);
        }
    }
}

#[test]
fn resolution_precondition_applies_to_interpolated_windows() {
    let h1 = Arc::new(GradedGroup::heisenberg());
    let grid = GridSpec::new(vec![4.0, 4.0, 8.0], vec![8, 8, 8], false).unwrap();
    let g = SampledField::from_fn(h1.clone(), grid.clone(), |x| {
        Complex64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(), 0.0)
    })
    .unwrap();
    let window = Window::sampled(g.clone());
    let fine = ScaleGrid::geometric(0.5, 4.0, 4).unwrap();
    assert!(matches!(analyze(&g, &window, &fine), Err(Error::Precondition(_))));
    let coarse = ScaleGrid::geometric(3.0, 4.0, 3).unwrap();
    assert!(analyze(&g, &window, &coarse).is_ok());
}

#[test]
fn isometry_basics() {
    let (calc, window) = small();
    let scales = aligned_scales();
    let ggrid = GGrid {
        space: calc.grid().clone(),
        scales: scales.clone(),
    };
    let zero = WaveletCoefficients::from_fn(plane(), ggrid, |_, _| Complex64::new(0.0, 0.0)).unwrap();
    assert_eq!(g_norm_sq(&zero), 0.0);
    let f = band_limited_field(&calc, (1e-3, 25.0), 7).unwrap();
    let w = analyze(&f, &window, &scales).unwrap();
    let w2 = analyze(&f.scaled(2.0), &window, &scales).unwrap();
    let (r1, r2) = (isometry_ratio(&w, &f).unwrap(), isometry_ratio(&w2, &f.scaled(2.0)).unwrap());
    assert!(g_norm_sq(&w) > 0.0);
    assert!((r1 - r2).abs() <= 1e-12 * r1);
    let zf = SampledField::zeros(plane(), calc.grid().clone()).unwrap();
    assert!(isometry_ratio(&w, &zf).is_err());
}

#[test]
fn polarized_admissibility() {
    let (calc, window) = plane_setup([44.0, 20.0], [64, 64]);
    let scales = ScaleGrid::geometric(0.125, 8.0, 32).unwrap();
    let f1 = band_limited_field(&calc, (1e-3, 25.0), 21).unwrap();
    let f2 = band_limited_field(&calc, (1e-3, 25.0), 22).unwrap().add(&f1.scaled(0.5)).unwrap();
    let w1 = analyze(&f1, &window, &scales).unwrap();
    let w2 = analyze(&f2, &window, &scales).unwrap();
    let lhs = pairing(&w1, &w2);
    let rhs = f1.inner(&f2).unwrap();
    assert!((lhs - rhs).norm() <= 0.02 * rhs.norm(), "{lhs} vs {rhs}");
}

#[test]
fn reconstruction_is_linear() {
    let (calc, window) = small();
    let scales = aligned_scales();
    let zero = SampledField::zeros(plane(), calc.grid().clone()).unwrap();
    assert_eq!(reconstruct(&zero, &window, &scales).unwrap().norm_sup(), 0.0);
    let f1 = band_limited_field(&calc, (1e-3, 25.0), 1).unwrap();
    let f2 = band_limited_field(&calc, (1e-3, 25.0), 2).unwrap();
    let (a, b) = (1.5, -0.75);
    let lhs = reconstruct(&f1.scaled(a).add(&f2.scaled(b)).unwrap(), &window, &scales).unwrap();
    let rhs = reconstruct(&f1, &window, &scales)
        .unwrap()
        .scaled(a)
        .add(&reconstruct(&f2, &window, &scales).unwrap().scaled(b))
        .unwrap();
    assert!(lhs.sub(&rhs).unwrap().norm_sup() <= 1e-10 * lhs.norm_sup());
}

#[test]
fn synthesis_inverts_analysis_inside_the_band() {
    let (calc, window) = plane_setup([44.0, 20.0], [64, 64]);
    let f = band_limited_field(&calc, (1e-3, 25.0), 9).unwrap();
    let w = analyze(&f, &window, &ScaleGrid::geometric(0.125, 8.0, 32).unwrap()).unwrap();
    let back = synthesize(&w, &window).unwrap();
    assert!(rel_l2(&back, &f) <= 1e-2);
}

#[test]
fn widening_the_scale_range_does_not_hurt_reconstruction() {
    let (calc, window) = plane_setup([44.0, 20.0], [64, 64]);
    let f = band_limited_field(&calc, (1e-3, 25.0), 10).unwrap();
    let narrow = ScaleGrid::geometric(0.125, 8.0, 32).unwrap();
    let wide = ScaleGrid::geometric(1.0 / 16.0, 16.0, 43).unwrap();
    let e1 = rel_l2(&reconstruct(&f, &window, &narrow).unwrap(), &f);
    let e2 = rel_l2(&reconstruct(&f, &window, &wide).unwrap(), &f);
    assert!(e1 <= 1e-2, "{e1}");
    assert!(e2 <= e1 * (1.0 + 1e-9), "{e1} -> {e2}");
}

#[test]
fn g_convolution_basics() {
    let (_, window) = small();
    let scales = aligned_scales();
    let f = projection_field(&window, &scales).unwrap();
    let zero = f.scale_by(|_| 0.0);
    assert_eq!(g_convolve(&f, &zero).unwrap().norm_l1(), 0.0);

    let ggrid = f.ggrid().clone();
    let n = ggrid.space.len();
    let unit = scales.locate(1.0)[0].0;
    let mass = 1.0 / (ggrid.space.cell_volume() * scales.log_step());
    let mut values = vec![Complex64::new(0.0, 0.0); n * scales.len()];
    values[unit * n + ggrid.space.origin_index()] = Complex64::new(mass, 0.0);
    let identity = WaveletCoefficients::new(f.group().clone(), ggrid, values, "identity").unwrap();
    let out = g_convolve(&f, &identity).unwrap();
    let defect = out.sub(&f).unwrap().norm_l1() / f.norm_l1();
    assert!(defect <= 1e-8, "{defect}");
}

#[test]
fn spectral_and_direct_g_convolution_converge() {
    let gap = |counts: [usize; 2]| {
        let (_, window) = plane_setup([22.0, 10.0], counts);
        let scales = ScaleGrid::with_ratio(1.0, 2f64.sqrt(), 4).unwrap();
        let f = projection_field(&window, &scales).unwrap();
        let fast = g_convolve(&f, &f).unwrap();
        let slow = g_convolve_direct(&f, &f).unwrap();
        fast.sub(&slow).unwrap().norm_l1() / fast.norm_l1()
    };
    let (coarse, fine) = (gap([16, 16]), gap([32, 32]));
    assert!(fine < 0.6 * coarse, "{coarse} -> {fine}");
    assert!(fine <= 0.1, "{fine}");
}

#[test]
fn star_of_the_self_coefficient() {
    let (calc, window) = plane_setup([88.0, 40.0], [256, 512]);
    let scales = ScaleGrid::with_ratio(0.5, 2.0, 3).unwrap();
    let v = analyze(window.field(), &window, &scales).unwrap();
    let grid = calc.grid();
    let (n1, n2) = (grid.counts[0], grid.counts[1]);
    let scale = v.values().iter().map(|x| x.norm()).fold(0.0, f64::max);
    for a in 0..grid.len() {
        let (i1, i2) = (a / n2, a % n2);
        let (k1, k2) = (i1 as i64 - (n1 / 2) as i64, i2 as i64 - (n2 / 2) as i64);
        if k1 % 2 != 0 || k2 % 4 != 0 {
            continue;
        }
        let b = ((n1 / 2) as i64 - k1 / 2).rem_euclid(n1 as i64) as usize * n2
            + ((n2 / 2) as i64 - k2 / 4).rem_euclid(n2 as i64) as usize;
        let gap = (v.slice(2)[a].norm() - v.slice(0)[b].norm()).abs();
        assert!(gap <= 1e-6 * scale, "{}", gap / scale);
    }
    let f = projection_field(&window, &scales).unwrap();
    let star = g_star(&f).unwrap();
    let o = grid.origin_index();
    assert!((star.slice(1)[o] - f.slice(1)[o]).norm() <= 1e-10 * f.slice(1)[o].norm());
}

#[test]
#[ignore = "needs a grid far larger than 32x32 to resolve the dilated self-coefficient"]
fn star_defect_on_the_reduced_grid() {
    let (_, window) = small();
    let d = projection_defect(&window, &aligned_scales()).unwrap();
    assert!(d.conv_defect <= 5e-2);
    assert!(d.star_defect <= 1e-6, "{}", d.star_defect);
}

#[test]
fn degenerate_windows_are_reported() {
    let (calc, _) = small();
    let window = Window::from_multiplier(calc, Multiplier::raw(Profile::custom("zero", (1.0, 2.0), |_| 0.0), 4.0).unwrap()).unwrap();
    assert!(matches!(projection_defect(&window, &aligned_scales()), Err(Error::Degenerate(_))));
}

#[test]
fn weighted_norm_basics() {
    let (_, window) = small();
    let scales = aligned_scales();
    let f = projection_field(&window, &scales).unwrap();
    let w = |k| WeightSpec::new(k, 1.0, 1.0).unwrap();
    assert_eq!(weighted_l1_norm(&f.scale_by(|_| 0.0), &w(2.0)), 0.0);
    let values: Vec<f64> = [0.0, 1.0, 2.0, 3.0].iter().map(|&k| weighted_l1_norm(&f, &w(k))).collect();
    assert!(values.windows(2).all(|p| p[0] < p[1]), "{values:?}");
    assert!(WeightSpec::new(-1.0, 0.0, 0.0).is_err());
}

#[test]
fn coefficients_csv_round_trip() {
    let (_, window) = plane_setup([11.0, 5.0], [8, 4]);
    let scales = ScaleGrid::geometric(0.5, 2.0, 3).unwrap();
    let f = projection_field(&window, &scales).unwrap();
    let dir = std::env::temp_dir().join(format!("nilwave-wavelet-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("w.csv");
    f.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("i1,i2,scale_index,t,re,im\n"));
    assert_eq!(text.lines().count(), 1 + 32 * 3);
    let back = WaveletCoefficients::read_csv(f.group().clone(), f.ggrid().clone(), &path).unwrap();
    assert_eq!(back.values(), f.values());
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transform_energy_is_nonnegative(seed in 0u64..10_000) {
        let (calc, window) = plane_setup([11.0, 5.0], [16, 16]);
        let f = band_limited_field(&calc, (1e-3, 25.0), seed).unwrap();
        let w = analyze(&f, &window, &ScaleGrid::geometric(0.5, 2.0, 5).unwrap()).unwrap();
        let e = g_norm_sq(&w);
        prop_assert!(e >= 0.0);
        prop_assert_eq!(e == 0.0, w.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn unitarity_of_random_in_range_points(x in -4.0f64..4.0, y in -2.0f64..2.0, t in 0.85f64..1.4) {
        let (_, window) = plane_setup([44.0, 20.0], [64, 64]);
        let g = window.field();
        let applied = quasi_regular_apply(&window, &GPoint::new(vec![x, y], t).unwrap()).unwrap();
        let ratio = applied.field.norm_l2() / g.norm_l2();
        prop_assert!((0.9999..=1.0001).contains(&ratio));
    }
}
