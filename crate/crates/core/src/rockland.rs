//! Rockland operators, their spectral multipliers and the resulting kernels.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{multi_indices_by_degree, SampledField};
use crate::grid::GridSpec;
use crate::group::{GradedGroup, Weight};
use crate::quad;
use crate::spectral;

/// Largest grid on which an operator is assembled densely.
pub const MAX_OPERATOR_NODES: usize = 8192;

/// `L = sum_j a_j (-1)^{p_j/2} X_j^{p_j}` with `p_j = nu / v_j` even.
#[derive(Debug, Clone)]
pub struct RocklandOperator {
    group: Arc<GradedGroup>,
    coefficients: Vec<f64>,
    degree: Weight,
    powers: Vec<u32>,
}

impl RocklandOperator {
    /// Axes with a zero coefficient are inactive.
    pub fn new(group: Arc<GradedGroup>, coefficients: Vec<f64>, degree: Weight) -> Result<Self> {
        let d = group.dim();
        if coefficients.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: coefficients.len(),
            });
        }
        if coefficients.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::invalid("coefficients must be finite and non-negative"));
        }
        let mut powers = vec![0; d];
        for j in 0..d {
            if coefficients[j] == 0.0 {
                continue;
            }
            let p: Ratio<i64> = degree.ratio() / group.weights()[j].ratio();
            if !p.is_integer() || *p.numer() <= 0 || p.numer() % 2 != 0 {
                return Err(Error::invalid(format!(
                    "degree {degree} over weight {} must be a positive even integer",
                    group.weights()[j]
                )));
            }
            powers[j] = *p.numer() as u32;
        }
        let op = RocklandOperator {
            group,
            coefficients,
            degree,
            powers,
        };
        op.check_generating()?;
        Ok(op)
    }

    /// `sum_j (-1)^{p_j/2} X_j^{p_j}` over all axes.
    pub fn homogeneous_laplacian(group: Arc<GradedGroup>, degree: Weight) -> Result<Self> {
        let d = group.dim();
        Self::new(group, vec![1.0; d], degree)
    }

    /// `-(X_1^2 + ... )` over the weight-one axes.
    pub fn sub_laplacian(group: Arc<GradedGroup>) -> Result<Self> {
        let coeffs = group
            .weights()
            .iter()
            .map(|w| if *w == Weight::integer(1) { 1.0 } else { 0.0 })
            .collect();
        Self::new(group, coeffs, Weight::integer(2))
    }

    fn check_generating(&self) -> Result<()> {
        let d = self.group.dim();
        let mut span: Vec<Vec<f64>> = Vec::new();
        let mut frontier: Vec<Vec<f64>> = (0..d)
            .filter(|&j| self.coefficients[j] > 0.0)
            .map(|j| {
                let mut e = vec![0.0; d];
                e[j] = 1.0;
                e
            })
            .collect();
        if frontier.is_empty() {
            return Err(Error::invalid("operator has no active axes"));
        }
        let generators = frontier.clone();
        for _ in 0..=d {
            let mut fresh = Vec::new();
            for v in frontier {
                if let Some(r) = reduce(&span, v) {
                    span.push(r.clone());
                    fresh.push(r);
                }
            }
            if fresh.is_empty() {
                break;
            }
            frontier = Vec::new();
            for g in &generators {
                for v in &fresh {
                    let mut out = vec![0.0; d];
                    self.group.bracket_into(g, v, &mut out);
                    frontier.push(out);
                }
            }
        }
        if span.len() < d {
            return Err(Error::invalid(
                "active axes do not generate the Lie algebra, so the operator is not Rockland",
            ));
        }
        Ok(())
    }

    pub fn group(&self) -> &Arc<GradedGroup> {
        &self.group
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn degree(&self) -> Weight {
        self.degree
    }

    pub fn degree_f64(&self) -> f64 {
        self.degree.to_f64()
    }

    /// `sum_j a_j xi_j^{p_j}`; defined on abelian groups only.
    pub fn symbol(&self, xi: &[f64]) -> Result<f64> {
        if !self.group.is_abelian() {
            return Err(Error::Unsupported("the symbol is only defined on abelian groups".into()));
        }
        if xi.len() != self.group.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.group.dim(),
                got: xi.len(),
            });
        }
        Ok(self.symbol_unchecked(xi))
    }

    fn symbol_unchecked(&self, xi: &[f64]) -> f64 {
        xi.iter()
            .zip(&self.coefficients)
            .zip(&self.powers)
            .filter(|((_, a), _)| **a > 0.0)
            .map(|((x, a), p)| a * x.powi(*p as i32))
            .sum()
    }

    /// Dense symmetric matrix of the operator on `grid`.
    ///
    /// Periodic abelian grids use exact Fourier differentiation. Otherwise each
    /// `X_j^2` is a second difference along `x exp(±h_j X_j)` with multilinear
    /// interpolation and zero extension.
    pub fn discretize(&self, grid: &GridSpec) -> Result<DMatrix<f64>> {
        grid.validate()?;
        grid.check_group(&self.group)?;
        let n = grid.len();
        if n > MAX_OPERATOR_NODES {
            return Err(Error::ResourceLimit {
                what: "dense operator assembly".into(),
                required: n,
                limit: MAX_OPERATOR_NODES,
            });
        }
        let mut m = DMatrix::<f64>::zeros(n, n);
        if grid.periodic && self.group.is_abelian() {
            self.assemble_fourier(grid, &mut m);
        } else {
            self.assemble_differences(grid, &mut m);
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(sym)
    }

    fn assemble_fourier(&self, grid: &GridSpec, m: &mut DMatrix<f64>) {
        let strides = grid.strides();
        for j in 0..grid.dim() {
            let a = self.coefficients[j];
            if a == 0.0 {
                continue;
            }
            let nj = grid.counts[j];
            let mut col: Vec<Complex64> = (0..nj)
                .map(|k| Complex64::new(spectral::frequency(grid, j, k).powi(self.powers[j] as i32) / nj as f64, 0.0))
                .collect();
            let mut planner = rustfft::FftPlanner::new();
            planner.plan_fft_inverse(nj).process(&mut col);
            for row in 0..grid.len() {
                let ia = grid.unravel(row)[j];
                let base = row - ia * strides[j];
                for ib in 0..nj {
                    let c = col[(ia + nj - ib) % nj].re;
                    m[(row, base + ib * strides[j])] += a * c;
                }
            }
        }
    }

    fn assemble_differences(&self, grid: &GridSpec, m: &mut DMatrix<f64>) {
        let d = grid.dim();
        let n = grid.len();
        for j in 0..d {
            let a = self.coefficients[j];
            if a == 0.0 {
                continue;
            }
            let second = self.second_difference(grid, j);
            let half = self.powers[j] / 2;
            let sign = if half.is_multiple_of(2) { 1.0 } else { -1.0 };
            let mut row_vec = vec![0.0; n];
            let mut next = vec![0.0; n];
            for i in 0..n {
                row_vec.iter_mut().for_each(|v| *v = 0.0);
                row_vec[i] = 1.0;
                let mut support = vec![i];
                for _ in 0..half {
                    next.iter_mut().for_each(|v| *v = 0.0);
                    let mut touched = Vec::new();
                    for &k in &support {
                        let rk = row_vec[k];
                        if rk == 0.0 {
                            continue;
                        }
                        for &(l, w) in &second[k] {
                            if next[l] == 0.0 {
                                touched.push(l);
                            }
                            next[l] += rk * w;
                        }
                    }
                    for &k in &support {
                        row_vec[k] = 0.0;
                    }
                    touched.sort_unstable();
                    touched.dedup();
                    for &l in &touched {
                        row_vec[l] = next[l];
                    }
                    support = touched;
                }
                for &l in &support {
                    m[(i, l)] += sign * a * row_vec[l];
                }
            }
        }
    }

    /// Sparse rows of `f -> [f(x e^{hX_j}) - 2 f(x) + f(x e^{-hX_j})] / h^2`.
    fn second_difference(&self, grid: &GridSpec, axis: usize) -> Vec<Vec<(usize, f64)>> {
        let d = grid.dim();
        let h = grid.spacing(axis);
        let inv = 1.0 / (h * h);
        let mut step = vec![0.0; d];
        let mut buf = vec![0.0; d];
        let mut stencil = Vec::new();
        (0..grid.len())
            .map(|i| {
                let x = grid.node(i);
                let mut row: Vec<(usize, f64)> = vec![(i, -2.0 * inv)];
                for s in [h, -h] {
                    step[axis] = s;
                    self.group.multiply_into(&x, &step, &mut buf);
                    grid.interpolation_stencil(&buf, &mut stencil);
                    row.extend(stencil.iter().map(|&(k, w)| (k, w * inv)));
                }
                row.sort_by_key(|e| e.0);
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
                for (k, w) in row {
                    match merged.last_mut() {
                        Some(last) if last.0 == k => last.1 += w,
                        _ => merged.push((k, w)),
                    }
                }
                merged
            })
            .collect()
    }
}

fn reduce(span: &[Vec<f64>], mut v: Vec<f64>) -> Option<Vec<f64>> {
    for b in span {
        let p = b.iter().position(|x| x.abs() > 1e-12).unwrap();
        let f = v[p] / b[p];
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= f * y);
    }
    let norm = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (norm > 1e-10).then_some(v)
}

/// Eigendecomposition of a discretized operator, sorted by eigenvalue.
#[derive(Debug, Clone)]
pub struct OperatorSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl OperatorSpectrum {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(matrix);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let n = order.len();
        let mut vecs = DMatrix::<f64>::zeros(n, n);
        for (new, &old) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(old).clone_owned();
            let pivot = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            if pivot < 0.0 {
                col.neg_mut();
            }
            vecs.set_column(new, &col);
        }
        OperatorSpectrum {
            eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
            eigenvectors: vecs,
        }
    }

    /// `m(L) v` for a real function `m` of the spectrum.
    pub fn apply(&self, v: &[Complex64], m: impl Fn(f64) -> f64) -> Vec<Complex64> {
        let u = &self.eigenvectors;
        let n = v.len();
        let re = nalgebra::DVector::from_iterator(n, v.iter().map(|c| c.re));
        let im = nalgebra::DVector::from_iterator(n, v.iter().map(|c| c.im));
        let mut cre = u.tr_mul(&re);
        let mut cim = u.tr_mul(&im);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = m(lam);
            cre[k] *= w;
            cim[k] *= w;
        }
        let ore = u * cre;
        let oim = u * cim;
        ore.iter().zip(oim.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect()
    }
}

/// How `m(L)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisPath {
    /// Fourier multiplier on a periodic abelian grid.
    Fourier,
    /// Eigendecomposition of the discretized operator.
    Eigen,
}

impl fmt::Display for SynthesisPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynthesisPath::Fourier => "fourier",
            SynthesisPath::Eigen => "eigen",
        })
    }
}

/// Functional calculus of a Rockland operator on a fixed grid.
#[derive(Debug, Clone)]
pub struct Calculus {
    operator: RocklandOperator,
    grid: GridSpec,
    spectrum: Option<Arc<OperatorSpectrum>>,
}

impl Calculus {
    /// Picks the Fourier path on periodic abelian grids and the eigen path otherwise.
    pub fn new(operator: RocklandOperator, grid: GridSpec) -> Result<Self> {
        let path = if grid.periodic && operator.group.is_abelian() {
            SynthesisPath::Fourier
        } else {
            SynthesisPath::Eigen
        };
        Self::with_path(operator, grid, path)
    }

    pub fn with_path(operator: RocklandOperator, grid: GridSpec, path: SynthesisPath) -> Result<Self> {
        grid.validate()?;
        grid.check_group(&operator.group)?;
        let spectrum = match path {
            SynthesisPath::Fourier => {
                if !(grid.periodic && operator.group.is_abelian()) {
                    return Err(Error::Unsupported(
                        "the Fourier path needs a periodic grid on an abelian group".into(),
                    ));
                }
                None
            }
            SynthesisPath::Eigen => Some(Arc::new(OperatorSpectrum::new(operator.discretize(&grid)?))),
        };
        Ok(Calculus {
            operator,
            grid,
            spectrum,
        })
    }

    pub fn path(&self) -> SynthesisPath {
        if self.spectrum.is_some() {
            SynthesisPath::Eigen
        } else {
            SynthesisPath::Fourier
        }
    }

    pub fn operator(&self) -> &RocklandOperator {
        &self.operator
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn spectrum(&self) -> Option<&OperatorSpectrum> {
        self.spectrum.as_deref()
    }

    /// Spectrum of the discrete operator (eigenvalues or symbol samples), unsorted for Fourier.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match &self.spectrum {
            Some(s) => s.eigenvalues.clone(),
            None => spectral::frequencies(&self.grid)
                .iter()
                .map(|xi| self.operator.symbol_unchecked(xi))
                .collect(),
        }
    }

    /// `m(L) f`.
    pub fn apply(&self, f: &SampledField, m: impl Fn(f64) -> f64) -> Result<SampledField> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch("field and operator grids differ".into()));
        }
        let values = match &self.spectrum {
            Some(s) => s.apply(f.values(), m),
            None => spectral::apply_symbol(&self.grid, f.values(), |xi| {
                Complex64::new(m(self.operator.symbol_unchecked(xi)), 0.0)
            }),
        };
        SampledField::new(self.operator.group.clone(), self.grid.clone(), values)
    }

    /// Convolution kernel of `m(L)`, i.e. `m(L)` applied to the identity mass.
    pub fn kernel(&self, m: impl Fn(f64) -> f64) -> Result<SampledField> {
        match &self.spectrum {
            Some(_) => {
                let delta = SampledField::delta(self.operator.group.clone(), self.grid.clone())?;
                self.apply(&delta, m)
            }
            None => {
                let values = spectral::kernel_from_symbol(&self.grid, |xi| {
                    Complex64::new(m(self.operator.symbol_unchecked(xi)), 0.0)
                });
                SampledField::new(self.operator.group.clone(), self.grid.clone(), values)
            }
        }
    }
}

/// Smooth step: 0 for `u <= 1`, 1 for `u >= 2`, `C^inf` in between.
pub fn smooth_step(u: f64) -> f64 {
    let psi = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let a = psi(u - 1.0);
    let b = psi(2.0 - u);
    if a + b == 0.0 {
        if u >= 2.0 {
            1.0
        } else {
            0.0
        }
    } else {
        a / (a + b)
    }
}

/// Serializable description of a raw multiplier profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// `lambda^order e^{-lambda} phi(lambda / lambda0)` with `phi` the smooth step.
    ExpCutoff {
        lambda0: f64,
        #[serde(default = "default_order")]
        order: u32,
    },
    /// Piecewise-linear interpolation of tabulated values, zero outside the table.
    Table { lambda: Vec<f64>, value: Vec<f64> },
}

fn default_order() -> u32 {
    2
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec::ExpCutoff {
            lambda0: 1e-3,
            order: default_order(),
        }
    }
}

/// A raw multiplier profile `m(lambda)` vanishing on `[0, lambda0]`.
#[derive(Clone)]
pub enum Profile {
    ExpCutoff { lambda0: f64, order: u32 },
    Table { lambda: Vec<f64>, value: Vec<f64> },
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        support: (f64, f64),
    },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::ExpCutoff { lambda0, order } => f
                .debug_struct("ExpCutoff")
                .field("lambda0", lambda0)
                .field("order", order)
                .finish(),
            Profile::Table { lambda, value } => f
                .debug_struct("Table")
                .field("lambda", lambda)
                .field("value", value)
                .finish(),
            Profile::Custom { name, support, .. } => f
                .debug_struct("Custom")
                .field("name", name)
                .field("support", support)
                .finish(),
        }
    }
}

impl Profile {
    pub fn from_spec(spec: &ProfileSpec) -> Result<Self> {
        let p = match spec {
            ProfileSpec::ExpCutoff { lambda0, order } => Profile::ExpCutoff {
                lambda0: *lambda0,
                order: *order,
            },
            ProfileSpec::Table { lambda, value } => Profile::Table {
                lambda: lambda.clone(),
                value: value.clone(),
            },
        };
        p.validate()?;
        Ok(p)
    }

    /// A profile given by a closure supported in `[support.0, support.1]`.
    pub fn custom(name: impl Into<String>, support: (f64, f64), f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Profile::Custom {
            name: name.into(),
            f: Arc::new(f),
            support,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::ExpCutoff { lambda0, order } => {
                if !(lambda0.is_finite() && *lambda0 > 0.0) {
                    return Err(Error::invalid(format!("lambda0 must be positive, got {lambda0}")));
                }
                if *order > 16 {
                    return Err(Error::invalid("order must be at most 16"));
                }
            }
            Profile::Table { lambda, value } => {
                if lambda.len() != value.len() || lambda.len() < 2 {
                    return Err(Error::invalid("table needs matching lambda and value arrays of length >= 2"));
                }
                if lambda.iter().chain(value).any(|x| !x.is_finite()) || lambda[0] < 0.0 {
                    return Err(Error::invalid("table entries must be finite with lambda >= 0"));
                }
                if lambda.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid("table lambda must be strictly increasing"));
                }
            }
            Profile::Custom { support, .. } => {
                if !(support.0 > 0.0 && support.1 > support.0 && support.1.is_finite()) {
                    return Err(Error::invalid("custom support must satisfy 0 < a < b < inf"));
                }
            }
        }
        if self.cutoff() <= 0.0 {
            return Err(Error::invalid("profile must vanish on a neighbourhood [0, lambda0] of zero"));
        }
        Ok(())
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        match self {
            Profile::ExpCutoff { lambda0, order } => {
                if lambda <= *lambda0 {
                    return 0.0;
                }
                lambda.powi(*order as i32) * (-lambda).exp() * smooth_step(lambda / lambda0)
            }
            Profile::Table { lambda: xs, value } => {
                if lambda < xs[0] || lambda > xs[xs.len() - 1] {
                    return 0.0;
                }
                let i = xs.partition_point(|&x| x <= lambda).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[i - 1], xs[i]);
                let (y0, y1) = (value[i - 1], value[i]);
                y0 + (y1 - y0) * (lambda - x0) / (x1 - x0)
            }
            Profile::Custom { f, support, .. } => {
                if lambda < support.0 || lambda > support.1 {
                    0.0
                } else {
                    f(lambda)
                }
            }
        }
    }

    /// Largest `lambda0` with the profile identically zero on `[0, lambda0]`.
    pub fn cutoff(&self) -> f64 {
        match self {
            Profile::ExpCutoff { lambda0, .. } => *lambda0,
            Profile::Table { lambda, value } => {
                let first = value.iter().position(|v| *v != 0.0);
                match first {
                    None => lambda[lambda.len() - 1],
                    Some(0) => lambda[0],
                    Some(i) => lambda[i - 1],
                }
            }
            Profile::Custom { support, .. } => support.0,
        }
    }

    /// Breakpoints covering the essential support, for quadrature.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::ExpCutoff { lambda0, order } => {
                let mut b = vec![*lambda0, 2.0 * lambda0];
                let peak = (*order as f64).max(1.0);
                if peak > b[1] {
                    b.push(peak);
                }
                b.push(b[b.len() - 1].max(1.0) + 400.0);
                b
            }
            Profile::Table { lambda, .. } => {
                let c = self.cutoff();
                lambda.iter().copied().filter(|&x| x >= c).collect()
            }
            Profile::Custom { support, .. } => vec![support.0, support.1],
        }
    }

    /// `int_0^inf |m(lambda)|^2 dlambda / lambda`, computed in `log lambda`.
    pub fn calderon_integral(&self, rel_tol: f64) -> f64 {
        let bps: Vec<f64> = self.breakpoints().iter().map(|b| b.ln()).collect();
        quad::integrate(
            |s| {
                let v = self.eval(s.exp());
                v * v
            },
            &bps,
            rel_tol,
        )
        .value
    }
}

/// A profile together with the constant that makes `int |m|^2 dlambda/lambda = nu`.
#[derive(Debug, Clone)]
pub struct Multiplier {
    profile: Profile,
    constant: f64,
    nu: f64,
    normalized: bool,
}

impl Multiplier {
    /// Normalizes `profile` for an operator of homogeneous degree `nu`.
    pub fn normalized(profile: Profile, nu: f64) -> Result<Self> {
        profile.validate()?;
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::invalid(format!("degree must be positive, got {nu}")));
        }
        let integral = profile.calderon_integral(1e-12);
        if integral.is_nan() || integral <= 0.0 {
            return Err(Error::invalid("multiplier profile is identically zero"));
        }
        Ok(Multiplier {
            profile,
            constant: (nu / integral).sqrt(),
            nu,
            normalized: true,
        })
    }

    /// Uses `profile` as is, without normalization.
    pub fn raw(profile: Profile, nu: f64) -> Result<Self> {
        profile.validate()?;
        Ok(Multiplier {
            profile,
            constant: 1.0,
            nu,
            normalized: false,
        })
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        self.constant * self.profile.eval(lambda)
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `int_{t0}^{t1} |m(lambda t^nu)|^2 dt / t`.
    pub fn scale_coverage(&self, lambda: f64, t0: f64, t1: f64) -> f64 {
        let nu = self.nu;
        let c = self.profile.cutoff();
        let mut bps = vec![t0.ln(), t1.ln()];
        if lambda > 0.0 {
            for b in self.profile.breakpoints() {
                let s = (b.max(c) / lambda).ln() / nu;
                if s > bps[0] && s < bps[1] {
                    bps.push(s);
                }
            }
        }
        bps.sort_by(f64::total_cmp);
        quad::integrate(
            |s| {
                let v = self.eval(lambda * (nu * s).exp());
                v * v
            },
            &bps,
            1e-12,
        )
        .value
    }
}

/// Convolution kernel `K_m` of `m(L)` for a normalized multiplier.
pub fn kernel_from_multiplier(m: &Multiplier, calculus: &Calculus) -> Result<SampledField> {
    if !m.is_normalized() {
        return Err(Error::Precondition("multiplier has not been normalized".into()));
    }
    calculus.kernel(|l| m.eval(l))
}

/// `sum_{[alpha] <= m1} int |X^alpha K(x)| (1 + |x|)^{m2} dx`.
pub fn hulanicki_norm(kernel: &SampledField, m1: Weight, m2: u32) -> Result<f64> {
    let group = kernel.group().clone();
    let grid = kernel.grid();
    let cv = grid.cell_volume();
    let weights: Vec<f64> = (0..grid.len())
        .map(|a| (1.0 + group.quasi_norm_unchecked(&grid.node(a))).powi(m2 as i32))
        .collect();
    let mut total = 0.0;
    for alpha in multi_indices_by_degree(&group, m1) {
        let d = kernel.iterated_derivative(&alpha)?;
        total += d
            .values()
            .iter()
            .zip(&weights)
            .map(|(v, w)| v.norm() * w)
            .sum::<f64>()
            * cv;
    }
    Ok(total)
}
