//! Discrete Fourier tools on periodic grids.
//!
//! Frequencies follow the FFT ordering; the Nyquist bin is treated as the
//! symmetric average of `±pi/h` so that real data stays real.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::grid::GridSpec;

/// Signed frequency index of FFT bin `k` out of `n`.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Angular frequency of FFT bin `k` along `axis`.
pub fn frequency(grid: &GridSpec, axis: usize, k: usize) -> f64 {
    let n = grid.counts[axis];
    2.0 * PI * signed_index(k, n) as f64 / (2.0 * grid.half_widths[axis])
}

/// All frequency vectors in row-major FFT order.
pub fn frequencies(grid: &GridSpec) -> Vec<Vec<f64>> {
    (0..grid.len())
        .map(|flat| {
            grid.unravel(flat)
                .iter()
                .enumerate()
                .map(|(j, &k)| frequency(grid, j, k))
                .collect()
        })
        .collect()
}

/// Sign `(-1)^{sum_j k_j}` relating node order to displacement order.
pub(crate) fn node_phase(grid: &GridSpec, flat: usize) -> f64 {
    let s: i64 = grid
        .unravel(flat)
        .iter()
        .zip(&grid.counts)
        .map(|(&k, &n)| signed_index(k, n))
        .sum();
    if s.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Unnormalized in-place multidimensional FFT.
pub fn fft_nd(data: &mut [Complex64], counts: &[usize], inverse: bool) {
    let mut planner = FftPlanner::new();
    let d = counts.len();
    let total: usize = counts.iter().product();
    assert_eq!(data.len(), total);
    let mut stride = 1;
    for axis in (0..d).rev() {
        let n = counts[axis];
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        let block = n * stride;
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let start = outer + inner;
                for (i, l) in line.iter_mut().enumerate() {
                    *l = data[start + i * stride];
                }
                fft.process(&mut line);
                for (i, l) in line.iter().enumerate() {
                    data[start + i * stride] = *l;
                }
            }
        }
        stride = block;
    }
}

/// Applies the Fourier multiplier `symbol(xi)` to periodic samples.
pub fn apply_symbol(grid: &GridSpec, values: &[Complex64], symbol: impl Fn(&[f64]) -> Complex64) -> Vec<Complex64> {
    let mut data = values.to_vec();
    fft_nd(&mut data, &grid.counts, false);
    let n = grid.len() as f64;
    for (flat, v) in data.iter_mut().enumerate() {
        let xi: Vec<f64> = grid
            .unravel(flat)
            .iter()
            .enumerate()
            .map(|(j, &k)| frequency(grid, j, k))
            .collect();
        *v *= symbol(&xi) / n;
    }
    fft_nd(&mut data, &grid.counts, true);
    data
}

/// Node samples of the periodic kernel whose Fourier coefficients are `symbol`.
pub fn kernel_from_symbol(grid: &GridSpec, symbol: impl Fn(&[f64]) -> Complex64) -> Vec<Complex64> {
    let norm = grid.len() as f64 * grid.cell_volume();
    let mut data: Vec<Complex64> = (0..grid.len())
        .map(|flat| {
            let xi: Vec<f64> = grid
                .unravel(flat)
                .iter()
                .enumerate()
                .map(|(j, &k)| frequency(grid, j, k))
                .collect();
            symbol(&xi) * node_phase(grid, flat) / norm
        })
        .collect();
    fft_nd(&mut data, &grid.counts, true);
    data
}

/// Circular convolution `cv * sum_b f(x_b) h(x_a - x_b)` on a periodic grid.
pub fn circular_convolve(grid: &GridSpec, f: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    let mut a = f.to_vec();
    let mut b = h.to_vec();
    fft_nd(&mut a, &grid.counts, false);
    fft_nd(&mut b, &grid.counts, false);
    let scale = grid.cell_volume() / grid.len() as f64;
    for (flat, (x, y)) in a.iter_mut().zip(&b).enumerate() {
        *x *= *y * node_phase(grid, flat) * scale;
    }
    fft_nd(&mut a, &grid.counts, true);
    a
}

/// Dense operator along one axis realizing `H(y) = F(c (y - s))` for the
/// band-limited interpolant `F` of the samples, projected back onto the band.
pub fn axis_operator(n: usize, half_width: f64, c: f64, s: f64) -> Vec<Complex64> {
    let h = 2.0 * half_width / n as f64;
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    let mut op = vec![Complex64::new(0.0, 0.0); n * n];
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    let half = n as f64 / 2.0;
    for b in 0..n {
        let xb = -half_width + b as f64 * h;
        let arg = s + xb / c;
        for (k, v) in col.iter_mut().enumerate() {
            let ks = signed_index(k, n);
            let sign = if ks.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            *v = if (ks.unsigned_abs() as f64) > c * half * (1.0 + 1e-12) {
                Complex64::new(0.0, 0.0)
            } else if ks == -(n as i64) / 2 {
                Complex64::new(sign * (PI * arg / h).cos(), 0.0)
            } else {
                let xi = 2.0 * PI * ks as f64 / (2.0 * half_width);
                Complex64::from_polar(sign, -xi * arg)
            };
        }
        ifft.process(&mut col);
        for (a, v) in col.iter().enumerate() {
            op[a * n + b] = *v / (n as f64 * c);
        }
    }
    op
}

/// Applies a dense `n x n` operator along `axis` of row-major data.
pub fn apply_along_axis(data: &[Complex64], counts: &[usize], axis: usize, op: &[Complex64]) -> Vec<Complex64> {
    let n = counts[axis];
    let stride: usize = counts[axis + 1..].iter().product();
    let block = n * stride;
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for outer in (0..data.len()).step_by(block) {
        for inner in 0..stride {
            let start = outer + inner;
            for (i, l) in line.iter_mut().enumerate() {
                *l = data[start + i * stride];
            }
            for a in 0..n {
                let row = &op[a * n..(a + 1) * n];
                let acc: Complex64 = row.iter().zip(&line).map(|(o, l)| o * l).sum();
                out[start + a * stride] = acc;
            }
        }
    }
    out
}

/// Band-limited resampling `H(y) = F(c_j (y_j - s_j))_j` on a periodic grid.
pub fn resample(grid: &GridSpec, values: &[Complex64], scale: &[f64], shift: &[f64]) -> Vec<Complex64> {
    let mut data = values.to_vec();
    for axis in 0..grid.dim() {
        let (c, s) = (scale[axis], shift[axis]);
        if c == 1.0 && s == 0.0 {
            continue;
        }
        let op = axis_operator(grid.counts[axis], grid.half_widths[axis], c, s);
        data = apply_along_axis(&data, &grid.counts, axis, &op);
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(n: usize) -> GridSpec {
        GridSpec::new(vec![4.0], vec![n], true).unwrap()
    }

    #[test]
    fn fft_roundtrip() {
        let counts = [4, 6];
        let orig: Vec<Complex64> = (0..24).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
        let mut d = orig.clone();
        fft_nd(&mut d, &counts, false);
        fft_nd(&mut d, &counts, true);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a / 24.0 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_operator() {
        let op = axis_operator(8, 4.0, 1.0, 0.0);
        for a in 0..8 {
            for b in 0..8 {
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((op[a * 8 + b] - e).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn node_shift_is_a_permutation() {
        let g = grid1(8);
        let h = g.spacing(0);
        let v: Vec<Complex64> = (0..8).map(|i| Complex64::new((i * i) as f64, 0.0)).collect();
        let out = resample(&g, &v, &[1.0], &[2.0 * h]);
        for a in 0..8 {
            assert!((out[a] - v[(a + 6) % 8]).norm() < 1e-10);
        }
    }

    #[test]
    fn delta_convolution_is_identity() {
        let g = GridSpec::new(vec![2.0, 3.0], vec![4, 6], true).unwrap();
        let mut delta = vec![Complex64::new(0.0, 0.0); g.len()];
        delta[g.origin_index()] = Complex64::new(1.0 / g.cell_volume(), 0.0);
        let f: Vec<Complex64> = (0..g.len()).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let out = circular_convolve(&g, &f, &delta);
        for (a, b) in out.iter().zip(&f) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}
