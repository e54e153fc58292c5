//! Exact k-piecewise polynomial regression and its weak Jacobian.
//!
//! The forward pass projects a signal onto the set of discretized k-splines
//! of degree `d` (every partition of `0..n` into `k` intervals, a degree-`d`
//! least-squares polynomial on each). Holding the optimal partition fixed,
//! the map `x -> fitted` is linear and block diagonal: each interval
//! contributes the hat matrix `V (VᵀV)⁻¹ Vᵀ` of its own regression, which for
//! `d = 0` is the constant block `1/|I|`.
//!
//! Indices are zero-based. A partition of `n` samples is stored as its `k-1`
//! cut positions; cut `c` ends an interval after sample `c-1`, so the same
//! numbers read as one-based "last index of the interval".

use std::collections::BTreeMap;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Disjoint, nonempty intervals covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalPartition {
    n: usize,
    breaks: Vec<usize>,
}

impl IntervalPartition {
    pub fn new(n: usize, breaks: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("partition of an empty index range".into()));
        }
        let mut prev = 0;
        for &b in &breaks {
            if b <= prev || b >= n {
                return Err(Error::InfeasibleArguments(format!(
                    "breaks {breaks:?} must be strictly increasing within [1, {}]",
                    n - 1
                )));
            }
            prev = b;
        }
        Ok(Self { n, breaks })
    }

    /// The one-interval partition of `0..n`.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.breaks.len() + 1
    }

    pub fn breaks(&self) -> &[usize] {
        &self.breaks
    }

    pub fn interval(&self, j: usize) -> Range<usize> {
        let start = if j == 0 { 0 } else { self.breaks[j - 1] };
        let end = self.breaks.get(j).copied().unwrap_or(self.n);
        start..end
    }

    pub fn intervals(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.k()).map(move |j| self.interval(j))
    }
}

/// Local coordinates of an interval of `len` samples: equally spaced on
/// `[-1, 1]`, or `[0]` for a single sample.
pub fn local_coords(len: usize) -> Vec<f64> {
    match len {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let step = 2.0 / (len - 1) as f64;
            (0..len).map(|i| -1.0 + step * i as f64).collect()
        }
    }
}

/// Vandermonde matrix `[t_i^p]` on the local coordinates of a `len`-sample interval.
pub fn vandermonde(len: usize, degree: usize) -> DMatrix<f64> {
    let t = local_coords(len);
    DMatrix::from_fn(len, degree + 1, |i, p| t[i].powi(p as i32))
}

/// Evaluates `Σ α_p t^p`.
pub fn eval_poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

fn mean_exact(xs: &[f64]) -> f64 {
    // constant runs map to themselves bit-for-bit, which keeps the
    // projection idempotent
    let first = xs[0];
    if xs.iter().all(|&v| v == first) {
        return first;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Least-squares polynomial coefficients of `x[interval]` in the monomial
/// basis on local coordinates.
pub fn polyfit_interval(x: &[f64], interval: Range<usize>, degree: usize) -> Result<Vec<f64>> {
    if interval.end > x.len() || interval.start > interval.end {
        return Err(Error::Dimension(format!("interval {interval:?} outside signal of length {}", x.len())));
    }
    let size = interval.len();
    if size < degree + 1 {
        return Err(Error::Underdetermined { size, degree });
    }
    let xs = &x[interval];
    if degree == 0 {
        return Ok(vec![mean_exact(xs)]);
    }
    let v = vandermonde(size, degree);
    let gram = v.transpose() * &v;
    let rhs = v.transpose() * DVector::from_column_slice(xs);
    let chol = gram.cholesky().expect("Gram matrix of distinct nodes is positive definite");
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// Streaming least-squares residual via Givens rotations: each appended
/// sample costs O(d²) and the running residual sum of squares stays
/// accurate even for exact fits.
struct IncrementalLsq {
    p: usize,
    r: Vec<f64>,
    qtb: Vec<f64>,
    sse: f64,
    row: Vec<f64>,
}

impl IncrementalLsq {
    fn new(p: usize) -> Self {
        Self { p, r: vec![0.0; p * p], qtb: vec![0.0; p], sse: 0.0, row: vec![0.0; p] }
    }

    fn push(&mut self, t: f64, mut y: f64) {
        let p = self.p;
        let mut pow = 1.0;
        for v in self.row.iter_mut() {
            *v = pow;
            pow *= t;
        }
        for j in 0..p {
            let a = self.row[j];
            if a == 0.0 {
                continue;
            }
            let rjj = self.r[j * p + j];
            let rho = rjj.hypot(a);
            let (c, s) = (rjj / rho, a / rho);
            for l in j..p {
                let rl = self.r[j * p + l];
                let xl = self.row[l];
                self.r[j * p + l] = c * rl + s * xl;
                self.row[l] = c * xl - s * rl;
            }
            let b = self.qtb[j];
            self.qtb[j] = c * b + s * y;
            y = c * y - s * b;
        }
        self.sse += y * y;
    }
}

/// Result of a k-piecewise fit.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFit {
    pub partition: IntervalPartition,
    pub degree: usize,
    /// Per-interval coefficients (length `degree + 1`) on local coordinates.
    pub coeffs: Vec<Vec<f64>>,
    pub fitted: Vec<f64>,
    /// `Σ (x_i - fitted_i)²` for the signal the fit was built from.
    pub cost: f64,
}

/// JSON shape of a fit: `{n, k, d, breaks, coeffs, cost}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub breaks: Vec<usize>,
    pub coeffs: Vec<Vec<f64>>,
    pub cost: f64,
}

impl PiecewiseFit {
    pub fn summary(&self) -> FitSummary {
        FitSummary {
            n: self.partition.n(),
            k: self.partition.k(),
            d: self.degree,
            breaks: self.partition.breaks().to_vec(),
            coeffs: self.coeffs.clone(),
            cost: self.cost,
        }
    }

    pub fn jacobian(&self) -> BlockSparseJacobian {
        jacobian(self)
    }
}

fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Numeric(format!("signal value {i} is not finite"))),
        None => Ok(()),
    }
}

/// Least-squares fit of degree `degree` on a fixed partition.
pub fn fit_with_partition(x: &[f64], partition: &IntervalPartition, degree: usize) -> Result<PiecewiseFit> {
    if x.len() != partition.n() {
        return Err(Error::Dimension(format!("signal length {} vs partition of {}", x.len(), partition.n())));
    }
    check_finite(x)?;
    let mut coeffs = Vec::with_capacity(partition.k());
    let mut fitted = Vec::with_capacity(x.len());
    for iv in partition.intervals() {
        let alpha = polyfit_interval(x, iv.clone(), degree)?;
        if degree == 0 {
            fitted.extend(std::iter::repeat_n(alpha[0], iv.len()));
        } else {
            fitted.extend(local_coords(iv.len()).into_iter().map(|t| eval_poly(&alpha, t)));
        }
        coeffs.push(alpha);
    }
    let cost = x.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(PiecewiseFit { partition: partition.clone(), degree, coeffs, fitted, cost })
}

/// Best k-piece degree-`degree` approximation of `x` in the least-squares
/// sense, by exact dynamic programming over all partitions (O(n²k) time,
/// O(nk) memory). Every interval holds at least `degree + 1` samples. Among
/// equal-cost partitions the smallest last-interval start wins.
pub fn fit_kpiecewise(x: &[f64], k: usize, degree: usize) -> Result<PiecewiseFit> {
    let n = x.len();
    if k == 0 || k > n || k * (degree + 1) > n {
        return Err(Error::InfeasibleArguments(format!(
            "cannot split {n} samples into {k} intervals of at least {} samples",
            degree + 1
        )));
    }
    check_finite(x)?;

    let min_len = degree + 1;
    let stride = n + 1;
    let mut best = vec![f64::INFINITY; (k + 1) * stride];
    let mut arg = vec![usize::MAX; (k + 1) * stride];
    best[0] = 0.0;
    let scale = 1.0 / n as f64;

    for start in 0..n {
        // largest piece count that can still end at `start`
        let jmax = (start / min_len).min(k - 1);
        if (0..=jmax).all(|j| !best[j * stride + start].is_finite()) {
            continue;
        }
        let mut lsq = IncrementalLsq::new(min_len);
        for end in start + 1..=n {
            lsq.push((end - 1 - start) as f64 * scale, x[end - 1]);
            if end - start < min_len {
                continue;
            }
            let cost = lsq.sse;
            for j in 1..=jmax + 1 {
                let prev = best[(j - 1) * stride + start];
                if !prev.is_finite() {
                    continue;
                }
                let cand = prev + cost;
                let slot = j * stride + end;
                if cand < best[slot] {
                    best[slot] = cand;
                    arg[slot] = start;
                }
            }
        }
    }

    let mut breaks = Vec::with_capacity(k - 1);
    let mut end = n;
    for j in (1..=k).rev() {
        let start = arg[j * stride + end];
        debug_assert!(start != usize::MAX, "feasible problem has a back-pointer");
        if j > 1 {
            breaks.push(start);
        }
        end = start;
    }
    breaks.reverse();
    let partition = IntervalPartition::new(n, breaks)?;
    fit_with_partition(x, &partition, degree)
}

#[derive(Debug, Clone, PartialEq)]
struct HatFactor {
    v: DMatrix<f64>,
    /// `(VᵀV)⁻¹Vᵀ`
    m: DMatrix<f64>,
}

impl HatFactor {
    fn new(len: usize, degree: usize) -> Self {
        let v = vandermonde(len, degree);
        let gram = v.transpose() * &v;
        let chol = gram.cholesky().expect("Gram matrix of distinct nodes is positive definite");
        let m = chol.solve(&v.transpose());
        Self { v, m }
    }
}

/// Block-diagonal weak Jacobian of a piecewise fit, kept in factored form.
///
/// For `d >= 1` the block of an interval of length `L` is `V_L M_L` with
/// `M_L = (V_LᵀV_L)⁻¹V_Lᵀ`; since local coordinates depend only on `L`, one
/// factor pair per distinct interval length is stored. For `d = 0` nothing
/// beyond the partition is needed.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSparseJacobian {
    partition: IntervalPartition,
    degree: usize,
    factors: BTreeMap<usize, HatFactor>,
}

/// Weak Jacobian of `fit` with respect to its input signal.
pub fn jacobian(fit: &PiecewiseFit) -> BlockSparseJacobian {
    BlockSparseJacobian::new(fit.partition.clone(), fit.degree)
}

impl BlockSparseJacobian {
    pub fn new(partition: IntervalPartition, degree: usize) -> Self {
        let mut factors = BTreeMap::new();
        if degree > 0 {
            for iv in partition.intervals() {
                factors.entry(iv.len()).or_insert_with(|| HatFactor::new(iv.len(), degree));
            }
        }
        Self { partition, degree, factors }
    }

    pub fn partition(&self) -> &IntervalPartition {
        &self.partition
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n(&self) -> usize {
        self.partition.n()
    }

    /// `Jᵀ v` from the factors, O(n(d+1)).
    pub fn vjp(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.apply(v, true)
    }

    /// `J v`; equal to [`Self::vjp`] up to rounding since every block is symmetric.
    pub fn jvp(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.apply(v, false)
    }

    fn apply(&self, v: &[f64], transpose: bool) -> Result<Vec<f64>> {
        if v.len() != self.n() {
            return Err(Error::Dimension(format!("vector of length {} for a Jacobian of size {}", v.len(), self.n())));
        }
        let mut out = vec![0.0; v.len()];
        for iv in self.partition.intervals() {
            let vs = &v[iv.clone()];
            let os = &mut out[iv.clone()];
            if self.degree == 0 {
                let avg = vs.iter().sum::<f64>() / vs.len() as f64;
                os.fill(avg);
                continue;
            }
            let f = &self.factors[&iv.len()];
            let p = self.degree + 1;
            // (V M)ᵀ v = Mᵀ (Vᵀ v);  (V M) v = V (M v)
            let (left, right) = if transpose { (&f.m, &f.v) } else { (&f.v, &f.m) };
            let mut inner = vec![0.0; p];
            for (l, acc) in inner.iter_mut().enumerate() {
                *acc = if transpose {
                    vs.iter().enumerate().map(|(i, &vi)| right[(i, l)] * vi).sum()
                } else {
                    vs.iter().enumerate().map(|(i, &vi)| right[(l, i)] * vi).sum()
                };
            }
            for (i, o) in os.iter_mut().enumerate() {
                *o = if transpose {
                    (0..p).map(|l| left[(l, i)] * inner[l]).sum()
                } else {
                    (0..p).map(|l| left[(i, l)] * inner[l]).sum()
                };
            }
        }
        Ok(out)
    }

    /// Materialized block of interval `j`.
    pub fn block(&self, j: usize) -> DMatrix<f64> {
        let len = self.partition.interval(j).len();
        if self.degree == 0 {
            DMatrix::from_element(len, len, 1.0 / len as f64)
        } else {
            let f = &self.factors[&len];
            &f.v * &f.m
        }
    }

    /// Dense `n x n` Jacobian; for tests and small problems only.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n(), self.n());
        for (j, iv) in self.partition.intervals().enumerate() {
            out.view_mut((iv.start, iv.start), (iv.len(), iv.len())).copy_from(&self.block(j));
        }
        out
    }
}
