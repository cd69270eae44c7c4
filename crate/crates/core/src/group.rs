//! Graded nilpotent Lie groups in exponential coordinates.
//!
//! A group is determined by its dilation weights and the structure constants
//! of its Lie algebra. The group law is the Baker–Campbell–Hausdorff series,
//! which terminates at the nilpotency step.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported topological dimension.
pub const MAX_DIM: usize = 16;

/// Largest supported nilpotency step.
pub const MAX_STEP: usize = 8;

/// A positive rational dilation weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(Ratio<i64>);

impl Weight {
    pub fn new(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::invalid("weight with zero denominator"));
        }
        Ok(Weight(Ratio::new(numer, denom)))
    }

    pub fn integer(n: i64) -> Self {
        Weight(Ratio::from_integer(n))
    }

    pub fn ratio(&self) -> Ratio<i64> {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }
}

impl std::ops::Add for Weight {
    type Output = Weight;
    fn add(self, rhs: Weight) -> Weight {
        Weight(self.0 + rhs.0)
    }
}

impl std::iter::Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        iter.fold(Weight::integer(0), |a, b| a + b)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Weight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |p: &str| {
            p.trim()
                .parse::<i64>()
                .map_err(|_| Error::invalid(format!("cannot parse weight `{s}`")))
        };
        match s.split_once('/') {
            Some((n, d)) => Weight::new(parse(n)?, parse(d)?),
            None => Ok(Weight::integer(parse(s)?)),
        }
    }
}

impl Serialize for Weight {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Str(String),
            Int(i64),
        }
        match Repr::deserialize(d)? {
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Int(n) => Ok(Weight::integer(n)),
        }
    }
}

/// One bracket relation `[X_i, X_j] = sum_k coeffs[k] X_k` (0-based indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bracket {
    pub i: usize,
    pub j: usize,
    pub coeffs: Vec<f64>,
}

/// Serialized form of a group description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDescription {
    pub dim: usize,
    pub weights: Vec<Weight>,
    #[serde(default)]
    pub brackets: Vec<Bracket>,
    #[serde(default)]
    pub name: String,
}

/// A point of `N ⋊ R+`.
#[derive(Debug, Clone, PartialEq)]
pub struct GPoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl GPoint {
    pub fn new(x: Vec<f64>, t: f64) -> Result<Self> {
        check_scale(t)?;
        Ok(GPoint { x, t })
    }
}

#[derive(Debug, Clone)]
struct TrieNode {
    coeff: f64,
    children: [Option<Box<TrieNode>>; 2],
}

impl TrieNode {
    fn empty() -> Self {
        TrieNode {
            coeff: 0.0,
            children: [None, None],
        }
    }
}

/// A graded nilpotent Lie group with its truncated BCH group law.
#[derive(Debug, Clone)]
pub struct GradedGroup {
    name: String,
    weights: Vec<Weight>,
    weights_f: Vec<f64>,
    /// Sparse structure constants `(i, j, k, c)` with `i < j`.
    constants: Vec<(usize, usize, usize, f64)>,
    step: usize,
    /// Suffix trie of right-nested BCH words, rooted at the innermost letter.
    bch: [TrieNode; 2],
}

fn check_scale(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("scale must be positive and finite, got {t}")))
    }
}

impl GradedGroup {
    /// Builds and validates a group from weights and bracket relations.
    pub fn new(name: impl Into<String>, weights: Vec<Weight>, brackets: &[Bracket]) -> Result<Self> {
        let d = weights.len();
        if d == 0 {
            return Err(Error::InvalidGroup("dimension must be at least 1".into()));
        }
        if d > MAX_DIM {
            return Err(Error::Unsupported(format!("dimension {d} exceeds {MAX_DIM}")));
        }
        if weights.iter().any(|w| w.ratio() <= Ratio::from_integer(0)) {
            return Err(Error::InvalidGroup("weights must be positive".into()));
        }
        if weights.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidGroup("weights must be non-decreasing".into()));
        }
        if weights[0] < Weight::integer(1) {
            return Err(Error::InvalidGroup(format!(
                "smallest weight must be at least 1, got {}",
                weights[0]
            )));
        }

        let mut dense = vec![0.0; d * d * d];
        let idx = |i: usize, j: usize, k: usize| (i * d + j) * d + k;
        for b in brackets {
            if b.i >= d || b.j >= d {
                return Err(Error::InvalidGroup(format!(
                    "bracket index ({}, {}) out of range for dimension {d}",
                    b.i, b.j
                )));
            }
            if b.coeffs.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: b.coeffs.len(),
                });
            }
            if b.i == b.j {
                if b.coeffs.iter().any(|&c| c != 0.0) {
                    return Err(Error::InvalidGroup(format!(
                        "[X_{0}, X_{0}] must vanish",
                        b.i
                    )));
                }
                continue;
            }
            for (k, &c) in b.coeffs.iter().enumerate() {
                if !c.is_finite() {
                    return Err(Error::InvalidGroup("non-finite structure constant".into()));
                }
                let (p, q, s) = if b.i < b.j { (b.i, b.j, c) } else { (b.j, b.i, -c) };
                let slot = &mut dense[idx(p, q, k)];
                if *slot != 0.0 && *slot != s {
                    return Err(Error::InvalidGroup(format!(
                        "conflicting definitions of [X_{p}, X_{q}]"
                    )));
                }
                *slot = s;
            }
        }
        for p in 0..d {
            for q in 0..p {
                for k in 0..d {
                    dense[idx(p, q, k)] = -dense[idx(q, p, k)];
                }
            }
        }

        let mut constants = Vec::new();
        for i in 0..d {
            for j in (i + 1)..d {
                for k in 0..d {
                    let c = dense[idx(i, j, k)];
                    if c != 0.0 {
                        if weights[k] != weights[i] + weights[j] {
                            return Err(Error::InvalidGroup(format!(
                                "[X_{i}, X_{j}] has a component along X_{k} but {} != {} + {}",
                                weights[k], weights[i], weights[j]
                            )));
                        }
                        constants.push((i, j, k, c));
                    }
                }
            }
        }

        let weights_f = weights.iter().map(|w| w.to_f64()).collect();
        let mut group = GradedGroup {
            name: name.into(),
            weights,
            weights_f,
            constants,
            step: 1,
            bch: [TrieNode::empty(), TrieNode::empty()],
        };
        group.check_jacobi(&dense)?;
        group.step = group.compute_step()?;
        if group.step > MAX_STEP {
            return Err(Error::Unsupported(format!(
                "nilpotency step {} exceeds {MAX_STEP}",
                group.step
            )));
        }
        group.bch = build_bch_trie(group.step);
        Ok(group)
    }

    /// `R^d` with the given weights and trivial brackets.
    pub fn abelian(weights: Vec<Weight>) -> Result<Self> {
        let name = format!(
            "R{}[{}]",
            weights.len(),
            weights.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",")
        );
        Self::new(name, weights, &[])
    }

    /// `R^d` with integer weights.
    pub fn abelian_int(weights: &[i64]) -> Result<Self> {
        Self::abelian(weights.iter().map(|&w| Weight::integer(w)).collect())
    }

    /// The first Heisenberg group with weights (1, 1, 2) and `[X_1, X_2] = X_3`.
    pub fn heisenberg() -> Self {
        Self::new(
            "H1",
            vec![Weight::integer(1), Weight::integer(1), Weight::integer(2)],
            &[Bracket {
                i: 0,
                j: 1,
                coeffs: vec![0.0, 0.0, 1.0],
            }],
        )
        .expect("the Heisenberg group is valid")
    }

    pub fn from_description(desc: &GroupDescription) -> Result<Self> {
        if desc.weights.len() != desc.dim {
            return Err(Error::DimensionMismatch {
                expected: desc.dim,
                got: desc.weights.len(),
            });
        }
        Self::new(desc.name.clone(), desc.weights.clone(), &desc.brackets)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let desc: GroupDescription = serde_json::from_str(s)?;
        Self::from_description(&desc)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let desc: GroupDescription = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_description(&desc)
    }

    pub fn description(&self) -> GroupDescription {
        let d = self.dim();
        let mut by_pair: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        for &(i, j, k, c) in &self.constants {
            by_pair.entry((i, j)).or_insert_with(|| vec![0.0; d])[k] = c;
        }
        GroupDescription {
            dim: d,
            weights: self.weights.clone(),
            brackets: by_pair
                .into_iter()
                .map(|((i, j), coeffs)| Bracket { i, j, coeffs })
                .collect(),
            name: self.name.clone(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn weights_f64(&self) -> &[f64] {
        &self.weights_f
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn is_abelian(&self) -> bool {
        self.constants.is_empty()
    }

    /// Homogeneous dimension `Q = sum_j v_j`.
    pub fn homogeneous_dim(&self) -> Weight {
        self.weights.iter().copied().sum()
    }

    pub fn homogeneous_dim_f64(&self) -> f64 {
        self.homogeneous_dim().to_f64()
    }

    /// Nonzero structure constants `(i, j, k, c_ij^k)` with `i < j`.
    pub fn structure_constants(&self) -> &[(usize, usize, usize, f64)] {
        &self.constants
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            })
        }
    }

    /// Lie bracket of two algebra elements written into `out`.
    pub fn bracket_into(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for &(i, j, k, c) in &self.constants {
            out[k] += c * (u[i] * v[j] - u[j] * v[i]);
        }
    }

    pub fn bracket(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u.len())?;
        self.check_dim(v.len())?;
        let mut out = vec![0.0; self.dim()];
        self.bracket_into(u, v, &mut out);
        Ok(out)
    }

    fn check_jacobi(&self, dense: &[f64]) -> Result<()> {
        let d = self.dim();
        let scale = dense.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1.0);
        let basis = |i: usize| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            e
        };
        let br = |u: &[f64], v: &[f64]| {
            let mut out = vec![0.0; d];
            self.bracket_into(u, v, &mut out);
            out
        };
        for i in 0..d {
            for j in (i + 1)..d {
                for l in (j + 1)..d {
                    let (a, b, c) = (basis(i), basis(j), basis(l));
                    let t1 = br(&a, &br(&b, &c));
                    let t2 = br(&b, &br(&c, &a));
                    let t3 = br(&c, &br(&a, &b));
                    let err = (0..d)
                        .map(|k| (t1[k] + t2[k] + t3[k]).abs())
                        .fold(0.0, f64::max);
                    if err > 1e-12 * scale * scale {
                        return Err(Error::InvalidGroup(format!(
                            "Jacobi identity fails for (X_{i}, X_{j}, X_{l}) by {err:e}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Length of the lower central series.
    fn compute_step(&self) -> Result<usize> {
        let d = self.dim();
        let basis: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                e
            })
            .collect();
        let mut current = basis.clone();
        for step in 1..=d {
            let mut next = Vec::new();
            for e in &basis {
                for w in &current {
                    let mut out = vec![0.0; d];
                    self.bracket_into(e, w, &mut out);
                    next.push(out);
                }
            }
            let next = row_basis(next);
            if next.is_empty() {
                return Ok(step);
            }
            current = next;
        }
        Err(Error::InvalidGroup("Lie algebra is not nilpotent".into()))
    }

    /// Group product in exponential coordinates, written into `out`.
    ///
    /// # Panics
    ///
    /// Panics if the slice lengths differ from the group dimension.
    pub fn multiply_into(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let d = self.dim();
        assert!(a.len() == d && b.len() == d && out.len() == d);
        match self.step {
            1 => {
                for k in 0..d {
                    out[k] = a[k] + b[k];
                }
            }
            2 => {
                for k in 0..d {
                    out[k] = a[k] + b[k];
                }
                for &(i, j, k, c) in &self.constants {
                    out[k] += 0.5 * c * (a[i] * b[j] - a[j] * b[i]);
                }
            }
            _ => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let letters = [a, b];
                for (l, node) in self.bch.iter().enumerate() {
                    let mut v = [0.0; MAX_DIM];
                    v[..d].copy_from_slice(letters[l]);
                    self.accumulate(node, &v, letters, out);
                }
            }
        }
    }

    fn accumulate(&self, node: &TrieNode, value: &[f64; MAX_DIM], letters: [&[f64]; 2], out: &mut [f64]) {
        let d = self.dim();
        if node.coeff != 0.0 {
            for k in 0..d {
                out[k] += node.coeff * value[k];
            }
        }
        for (l, child) in node.children.iter().enumerate() {
            if let Some(child) = child {
                let mut next = [0.0; MAX_DIM];
                self.bracket_into(letters[l], &value[..d], &mut next[..d]);
                if next[..d].iter().any(|&x| x != 0.0) {
                    self.accumulate(child, &next, letters, out);
                }
            }
        }
    }

    pub fn multiply(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(a.len())?;
        self.check_dim(b.len())?;
        let mut out = vec![0.0; self.dim()];
        self.multiply_into(a, b, &mut out);
        Ok(out)
    }

    /// Inverse in exponential coordinates, which is negation.
    pub fn inverse(&self, a: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(a.len())?;
        Ok(a.iter().map(|x| -x).collect())
    }

    /// `delta_t(x)_j = t^{v_j} x_j`.
    pub fn dilate(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        check_scale(t)?;
        Ok(self.dilate_unchecked(x, t))
    }

    pub(crate) fn dilate_unchecked(&self, x: &[f64], t: f64) -> Vec<f64> {
        x.iter()
            .zip(&self.weights_f)
            .map(|(xi, v)| xi * t.powf(*v))
            .collect()
    }

    /// Homogeneous quasi-norm `max_j |x_j|^{1/v_j}`.
    pub fn quasi_norm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.quasi_norm_unchecked(x))
    }

    pub(crate) fn quasi_norm_unchecked(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.weights_f)
            .map(|(xi, v)| xi.abs().powf(1.0 / v))
            .fold(0.0, f64::max)
    }

    /// Homogeneous degree `[alpha] = sum_j alpha_j v_j`.
    pub fn homogeneous_degree(&self, alpha: &[u32]) -> Result<Weight> {
        self.check_dim(alpha.len())?;
        Ok(alpha
            .iter()
            .zip(&self.weights)
            .map(|(&a, w)| Weight(w.ratio() * Ratio::from_integer(a as i64)))
            .sum())
    }

    /// Product in `N ⋊ R+`: `(x, t)(y, u) = (x delta_t(y), t u)`.
    pub fn g_multiply(&self, p: &GPoint, q: &GPoint) -> Result<GPoint> {
        check_scale(p.t)?;
        check_scale(q.t)?;
        let dy = self.dilate(&q.x, p.t)?;
        Ok(GPoint {
            x: self.multiply(&p.x, &dy)?,
            t: p.t * q.t,
        })
    }

    /// Inverse in `N ⋊ R+`: `(x, t)^{-1} = (delta_{1/t}(x^{-1}), 1/t)`.
    pub fn g_inverse(&self, p: &GPoint) -> Result<GPoint> {
        check_scale(p.t)?;
        Ok(GPoint {
            x: self.dilate(&self.inverse(&p.x)?, 1.0 / p.t)?,
            t: 1.0 / p.t,
        })
    }

    /// Modular function `Delta(x, t) = t^{-Q}`.
    pub fn modular(&self, p: &GPoint) -> Result<f64> {
        check_scale(p.t)?;
        Ok(p.t.powf(-self.homogeneous_dim_f64()))
    }
}

/// Reduces a set of vectors to a linearly independent spanning subset.
fn row_basis(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut r in rows {
        for b in &basis {
            let pivot = b.iter().position(|x| x.abs() > 0.0).unwrap();
            let f = r[pivot] / b[pivot];
            r.iter_mut().zip(b).for_each(|(x, y)| *x -= f * y);
        }
        let norm = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if norm > 1e-12 {
            r.iter_mut().for_each(|x| {
                if x.abs() < 1e-14 {
                    *x = 0.0
                }
            });
            basis.push(r);
        }
    }
    basis
}

/// Dynkin's form of the BCH series up to total degree `max_deg`.
///
/// Words are read left to right as right-nested brackets
/// `[w_1, [w_2, ... [w_{k-1}, w_k]]]`, with letter 0 for `X` and 1 for `Y`.
pub fn bch_words(max_deg: usize) -> BTreeMap<Vec<u8>, Ratio<i128>> {
    let mut acc: BTreeMap<Vec<u8>, Ratio<i128>> = BTreeMap::new();
    let fact = |n: usize| (1..=n as i128).product::<i128>();
    for total in 1..=max_deg {
        for n in 1..=total {
            let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n);
            compositions(n, total, &mut pairs, &mut |pairs| {
                let mut word = Vec::with_capacity(total);
                let mut denom: i128 = (n * total) as i128;
                for &(r, s) in pairs {
                    word.extend(std::iter::repeat_n(0u8, r));
                    word.extend(std::iter::repeat_n(1u8, s));
                    denom *= fact(r) * fact(s);
                }
                let k = word.len();
                if k >= 2 && word[k - 1] == word[k - 2] {
                    return;
                }
                let sign = if n % 2 == 1 { 1 } else { -1 };
                *acc.entry(word).or_insert_with(|| Ratio::from_integer(0)) += Ratio::new(sign, denom);
            });
        }
    }
    acc.retain(|_, c| *c.numer() != 0);
    acc
}

fn compositions(n: usize, remaining: usize, pairs: &mut Vec<(usize, usize)>, f: &mut impl FnMut(&[(usize, usize)])) {
    if pairs.len() == n {
        if remaining == 0 {
            f(pairs);
        }
        return;
    }
    let slots_left = n - pairs.len();
    if remaining < slots_left {
        return;
    }
    for r in 0..=remaining {
        for s in 0..=(remaining - r) {
            if r + s == 0 {
                continue;
            }
            pairs.push((r, s));
            compositions(n, remaining - r - s, pairs, f);
            pairs.pop();
        }
    }
}

fn build_bch_trie(step: usize) -> [TrieNode; 2] {
    let mut roots = [TrieNode::empty(), TrieNode::empty()];
    for (word, c) in bch_words(step) {
        let coeff = *c.numer() as f64 / *c.denom() as f64;
        let mut letters = word.iter().rev();
        let first = *letters.next().unwrap() as usize;
        let mut node = &mut roots[first];
        for &l in letters {
            node = node.children[l as usize].get_or_insert_with(|| Box::new(TrieNode::empty()));
        }
        node.coeff += coeff;
    }
    roots
}
