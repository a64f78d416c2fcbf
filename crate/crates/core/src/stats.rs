//! Numerical primitives shared by every analysis: product-moment sums,
//! Pearson correlation, skewness, normal fitting, least squares, quantiles,
//! empirical CDFs and shared-bin histograms.
//!
//! All functions are generic over [`Scalar`] and use two-pass (centered)
//! accumulation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn mean<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().copied().sum::<T>() / T::from_usize(xs.len()).unwrap())
}

/// Sample variance with the `n − 1` denominator.
pub fn sample_variance<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    Some(ss / T::from_usize(xs.len() - 1).unwrap())
}

/// Centered second-order sums of a paired sample.
///
/// `covariance`, `var_x` and `var_y` use the `n − 1` convention; the
/// convention cancels in [`Moments::correlation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments<T> {
    pub n: usize,
    pub mean_x: T,
    pub mean_y: T,
    pub sxx: T,
    pub syy: T,
    pub sxy: T,
}

impl<T: Scalar> Moments<T> {
    pub fn from_pairs(xs: &[T], ys: &[T]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::invalid(format!("length mismatch: {} vs {}", xs.len(), ys.len())));
        }
        let n = xs.len();
        if n == 0 {
            return Err(Error::undefined("empty sample"));
        }
        let nf = T::from_usize(n).unwrap();
        let mean_x = xs.iter().copied().sum::<T>() / nf;
        let mean_y = ys.iter().copied().sum::<T>() / nf;
        let (mut sxx, mut syy, mut sxy) = (T::zero(), T::zero(), T::zero());
        for (&x, &y) in xs.iter().zip(ys) {
            let dx = x - mean_x;
            let dy = y - mean_y;
            sxx = sxx + dx * dx;
            syy = syy + dy * dy;
            sxy = sxy + dx * dy;
        }
        Ok(Self { n, mean_x, mean_y, sxx, syy, sxy })
    }

    pub fn covariance(&self) -> Option<T> {
        (self.n >= 2).then(|| self.sxy / T::from_usize(self.n - 1).unwrap())
    }

    pub fn var_x(&self) -> Option<T> {
        (self.n >= 2).then(|| self.sxx / T::from_usize(self.n - 1).unwrap())
    }

    pub fn var_y(&self) -> Option<T> {
        (self.n >= 2).then(|| self.syy / T::from_usize(self.n - 1).unwrap())
    }

    pub fn correlation(&self) -> Result<T> {
        if self.n < 2 {
            return Err(Error::undefined(format!("correlation needs n >= 2, got {}", self.n)));
        }
        if self.sxx <= T::zero() || self.syy <= T::zero() {
            return Err(Error::undefined("correlation of a constant series"));
        }
        let r = self.sxy / (self.sxx.sqrt() * self.syy.sqrt());
        Ok(r.max(-T::one()).min(T::one()))
    }
}

/// Sample Pearson product-moment correlation.
pub fn pearson<T: Scalar>(xs: &[T], ys: &[T]) -> Result<T> {
    Moments::from_pairs(xs, ys)?.correlation()
}

/// Adjusted Fisher–Pearson standardized third moment,
/// `G1 = sqrt(n(n−1))/(n−2) · m3 / m2^{3/2}` with population moments.
pub fn skewness<T: Scalar>(xs: &[T]) -> Result<T> {
    let n = xs.len();
    if n < 3 {
        return Err(Error::undefined(format!("skewness needs n >= 3, got {n}")));
    }
    let nf = T::from_usize(n).unwrap();
    let m = mean(xs).unwrap();
    let (mut m2, mut m3) = (T::zero(), T::zero());
    for &x in xs {
        let d = x - m;
        m2 = m2 + d * d;
        m3 = m3 + d * d * d;
    }
    m2 = m2 / nf;
    m3 = m3 / nf;
    if m2 <= T::zero() {
        return Err(Error::undefined("skewness of a constant sample"));
    }
    let one = T::one();
    let two = one + one;
    let g1 = m3 / m2.powf(T::from_f64_lossy(1.5));
    Ok((nf * (nf - one)).sqrt() / (nf - two) * g1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalFit<T> {
    pub mu: T,
    pub sigma: T,
}

/// Sample mean and `n − 1` standard deviation.
pub fn normal_fit<T: Scalar>(xs: &[T]) -> Result<NormalFit<T>> {
    if xs.len() < 2 {
        return Err(Error::undefined(format!("normal fit needs n >= 2, got {}", xs.len())));
    }
    let mu = mean(xs).unwrap();
    let sigma = sample_variance(xs).unwrap().sqrt();
    if !(sigma > T::zero()) {
        return Err(Error::undefined("normal fit of a constant sample: sigma = 0"));
    }
    Ok(NormalFit { mu, sigma })
}

/// Upper-tail probability `P(Z >= z)` of a standard normal.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OlsFit<T> {
    pub slope: T,
    pub intercept: T,
    pub n: usize,
}

/// Ordinary least squares of `ys` on `xs` (single predictor plus intercept).
pub fn ols<T: Scalar>(xs: &[T], ys: &[T]) -> Result<OlsFit<T>> {
    let m = Moments::from_pairs(xs, ys)?;
    if m.n < 2 || m.sxx <= T::zero() {
        return Err(Error::undefined("least squares needs a non-constant predictor"));
    }
    let slope = m.sxy / m.sxx;
    Ok(OlsFit { slope, intercept: m.mean_y - slope * m.mean_x, n: m.n })
}

impl<T: Scalar> OlsFit<T> {
    pub fn predict(&self, x: T) -> T {
        self.intercept + self.slope * x
    }
}

fn sorted<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
    v
}

/// Median; even-length samples average the two middle values.
pub fn median<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let v = sorted(xs);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / (T::one() + T::one()) })
}

/// Quantile by linear interpolation between order statistics
/// (`h = (n − 1)·p`).
pub fn quantile<T: Scalar>(xs: &[T], p: f64) -> Option<T> {
    if xs.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    Some(quantile_sorted(&sorted(xs), p))
}

fn quantile_sorted<T: Scalar>(v: &[T], p: f64) -> T {
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = T::from_f64_lossy(h - lo as f64);
    v[lo] + (v[hi] - v[lo]) * frac
}

/// Empirical CDF as a right-continuous step function: `F(x) = fraction <= x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ecdf<T> {
    /// Distinct sample values in ascending order with the CDF value just
    /// after each step.
    pub steps: Vec<(T, T)>,
    pub n: usize,
}

impl<T: Scalar> Ecdf<T> {
    pub fn new(xs: &[T]) -> Self {
        let v = sorted(xs);
        let n = v.len();
        let nf = T::from_usize(n.max(1)).unwrap();
        let mut steps: Vec<(T, T)> = Vec::new();
        for (i, &x) in v.iter().enumerate() {
            let f = T::from_usize(i + 1).unwrap() / nf;
            match steps.last_mut() {
                Some(last) if last.0 == x => last.1 = f,
                _ => steps.push((x, f)),
            }
        }
        Self { steps, n }
    }

    pub fn eval(&self, x: T) -> T {
        let idx = self.steps.partition_point(|&(v, _)| v <= x);
        if idx == 0 {
            T::zero()
        } else {
            self.steps[idx - 1].1
        }
    }

    /// `sup_x |F(x) − G(x)|`, evaluated at every jump point of either CDF.
    pub fn sup_distance(&self, other: &Self) -> T {
        self.steps
            .iter()
            .chain(&other.steps)
            .map(|&(x, _)| (self.eval(x) - other.eval(x)).abs())
            .fold(T::zero(), T::max)
    }
}

/// Two-sample Kolmogorov–Smirnov statistic `D = sup |F₁ − F₂|` computed by
/// merging the sorted samples.
pub fn ks_statistic<T: Scalar>(xs: &[T], ys: &[T]) -> Result<T> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::invalid("Kolmogorov–Smirnov needs two non-empty samples"));
    }
    let a = sorted(xs);
    let b = sorted(ys);
    let (na, nb) = (T::from_usize(a.len()).unwrap(), T::from_usize(b.len()).unwrap());
    let (mut i, mut j) = (0, 0);
    let mut d = T::zero();
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let diff = (T::from_usize(i).unwrap() / na - T::from_usize(j).unwrap() / nb).abs();
        d = d.max(diff);
    }
    Ok(d)
}

/// Binned densities over shared edges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram<T> {
    /// `bins + 1` ascending edges.
    pub edges: Vec<T>,
    pub counts: Vec<usize>,
    /// `count / (n · width)` per bin; integrates to one.
    pub density: Vec<T>,
}

impl<T: Scalar> Histogram<T> {
    pub fn over_edges(xs: &[T], edges: &[T]) -> Self {
        let bins = edges.len() - 1;
        let mut counts = vec![0usize; bins];
        for &x in xs {
            // Values equal to the last edge go into the last bin.
            let idx = edges.partition_point(|&e| e <= x).saturating_sub(1).min(bins - 1);
            counts[idx] += 1;
        }
        let n = T::from_usize(xs.len().max(1)).unwrap();
        let density = counts
            .iter()
            .zip(edges.windows(2))
            .map(|(&c, w)| T::from_usize(c).unwrap() / (n * (w[1] - w[0])))
            .collect();
        Self { edges: edges.to_vec(), counts, density }
    }

    pub fn integral(&self) -> T {
        self.density.iter().zip(self.edges.windows(2)).map(|(&d, w)| d * (w[1] - w[0])).sum()
    }
}

/// Upper bound on the number of bins produced by [`freedman_diaconis_edges`].
pub const MAX_BINS: usize = 1_000;

/// Shared bin edges for a pooled sample using the Freedman–Diaconis width
/// `2·IQR·n^{-1/3}`. Falls back to Sturges' rule when the IQR is zero and to a
/// single unit-width bin when the sample is constant. The bin count is capped
/// at [`MAX_BINS`].
pub fn freedman_diaconis_edges<T: Scalar>(pooled: &[T]) -> Result<Vec<T>> {
    if pooled.is_empty() {
        return Err(Error::undefined("histogram of an empty sample"));
    }
    let v = sorted(pooled);
    let (lo, hi) = (v[0], v[v.len() - 1]);
    let range = hi - lo;
    if range <= T::zero() {
        let half = T::from_f64_lossy(0.5);
        return Ok(vec![lo - half, lo + half]);
    }
    let n = v.len() as f64;
    let iqr = quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25);
    let mut bins = if iqr > T::zero() {
        let width = T::from_f64_lossy(2.0 * n.powf(-1.0 / 3.0)) * iqr;
        (range / width).ceil().to_usize().unwrap_or(MAX_BINS)
    } else {
        (n.log2().ceil() as usize) + 1
    };
    bins = bins.clamp(1, MAX_BINS);
    let width = range / T::from_usize(bins).unwrap();
    let mut edges: Vec<T> = (0..bins).map(|i| lo + width * T::from_usize(i).unwrap()).collect();
    edges.push(hi);
    Ok(edges)
}
