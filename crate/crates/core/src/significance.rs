//! Significance tests: two-sample Kolmogorov–Smirnov with the asymptotic
//! Kolmogorov series, a permutation test for `r★`, and a subsample-mean
//! Monte Carlo for audit samples.
//!
//! Randomized tests draw replicate `i` from substream `i` of the caller's
//! [`RngSpec`], so results do not depend on thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::correlation::{rstar_pairs, GeoAggregate, MIN_CENTERS};
use crate::error::{Error, Result};
use crate::rng::{shuffle, shuffle_take, RngSpec};
use crate::stats::{self, normal_upper_tail, Histogram, NormalFit};
pub use crate::stats::{normal_fit, skewness};

pub const DEFAULT_REPLICATES: u64 = 100_000;
pub const DEFAULT_SUBSET_SIZE: usize = 26;

/// Relative slack when comparing a replicate statistic with the observed one,
/// so permutations that reproduce the observed value up to summation order
/// land in the tail.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    KsTwoSample,
    PermRstar,
    SubsampleMean,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub method: Method,
    /// `D` for Kolmogorov–Smirnov, observed `r★`, or observed subset mean.
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
    /// Zero for analytic tests.
    pub replicates: u64,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    pub null_fit: Option<NormalFit<f64>>,
    /// Fraction of replicates at least as extreme as the observed statistic.
    pub p_empirical: Option<f64>,
    pub p_two_sided: Option<f64>,
    /// Normal approximation computed from the finite-population moments.
    pub p_analytic: Option<f64>,
}

impl TestResult {
    fn analytic(method: Method, statistic: f64, p_value: f64, n1: usize, n2: usize) -> Self {
        Self {
            method,
            statistic,
            p_value,
            n1,
            n2,
            replicates: 0,
            seed: None,
            stream: None,
            null_fit: None,
            p_empirical: None,
            p_two_sided: None,
            p_analytic: None,
        }
    }
}

/// Kolmogorov distribution tail
/// `Q(λ) = 2 Σ_{j≥1} (−1)^{j−1} exp(−2 j² λ²)`.
///
/// Summation stops once a term falls below `1e-80` of the running sum. If
/// that does not happen within 100 terms (small `λ`), `Q` is 1.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    let a = -2.0 * lambda * lambda;
    let mut sign = 2.0;
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = sign * (a * jf * jf).exp();
        sum += term;
        if term.abs() < 1e-80 * sum.abs() || term == 0.0 {
            return sum.clamp(0.0, 1.0);
        }
        sign = -sign;
    }
    1.0
}

/// Asymptotic two-sample p-value for statistic `d` with the effective-size
/// correction `λ = d·(√nₑ + 0.12 + 0.11/√nₑ)`, `nₑ = n1·n2/(n1+n2)`.
pub fn ks_pvalue(d: f64, n1: usize, n2: usize) -> Result<f64> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::invalid("Kolmogorov–Smirnov needs two non-empty samples"));
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::invalid(format!("D must lie in [0, 1], got {d}")));
    }
    let ne = (n1 as f64 * n2 as f64) / (n1 + n2) as f64;
    let sq = ne.sqrt();
    Ok(kolmogorov_q(d * (sq + 0.12 + 0.11 / sq)))
}

pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<TestResult> {
    let d = stats::ks_statistic(xs, ys)?;
    let p = ks_pvalue(d, xs.len(), ys.len())?;
    Ok(TestResult::analytic(Method::KsTwoSample, d, p, xs.len(), ys.len()))
}

/// A randomized test together with its replicate statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloRun {
    pub result: TestResult,
    #[serde(skip)]
    pub replicate_stats: Vec<f64>,
}

impl MonteCarloRun {
    /// Histogram of the replicate statistics as `lo,hi,count,density` rows.
    pub fn histogram_csv(&self) -> Result<String> {
        replicate_histogram_csv(&self.replicate_stats)
    }
}

pub fn replicate_histogram_csv(stats: &[f64]) -> Result<String> {
    let edges = stats::freedman_diaconis_edges(stats)?;
    let h = Histogram::over_edges(stats, &edges);
    let mut out = String::from("lo,hi,count,density\n");
    for (i, (&count, &density)) in h.counts.iter().zip(&h.density).enumerate() {
        out.push_str(&format!("{},{},{count},{density}\n", h.edges[i], h.edges[i + 1]));
    }
    Ok(out)
}

/// Correlation of `x` with `y[perm]` where both are already centered and
/// scaled to unit norm.
fn permuted_dot(x: &[f64], y: &[f64], perm: &[usize]) -> f64 {
    x.iter().zip(perm).map(|(a, &j)| a * y[j]).sum::<f64>().clamp(-1.0, 1.0)
}

fn standardize(v: &[f64]) -> Result<Vec<f64>> {
    let m = stats::mean(v).ok_or_else(|| Error::undefined("empty sample"))?;
    let norm = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::undefined("r★ of a constant series"));
    }
    Ok(v.iter().map(|x| (x - m) / norm).collect())
}

/// Permutation test of `r★`: `r_1998` is shuffled against `delta_pct`
/// `replicates` times. The reported p-value is the upper tail of the
/// observed `r★` under a normal fitted to the replicate correlations; the
/// empirical tail fraction (`≥ observed`, identity permutations included)
/// and the two-sided normal p-value are reported alongside it.
pub fn perm_test_rstar(aggs: &[GeoAggregate<f64>], replicates: u64, rng: RngSpec) -> Result<MonteCarloRun> {
    let (delta, r1998) = rstar_pairs(aggs);
    permutation_correlation_test(&delta, &r1998, replicates, rng)
}

/// Permutation test for the correlation of two paired series.
pub fn permutation_correlation_test(xs: &[f64], ys: &[f64], replicates: u64, rng: RngSpec) -> Result<MonteCarloRun> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("length mismatch"));
    }
    if xs.len() < MIN_CENTERS {
        return Err(Error::undefined(format!("permutation test needs at least {MIN_CENTERS} pairs")));
    }
    if replicates == 0 {
        return Err(Error::invalid("replicates must be positive"));
    }
    let x = standardize(xs)?;
    let y = standardize(ys)?;
    let n = x.len();
    let identity: Vec<usize> = (0..n).collect();
    let observed = permuted_dot(&x, &y, &identity);
    let stats: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map_init(
            || identity.clone(),
            |perm, i| {
                perm.copy_from_slice(&identity);
                shuffle(perm, &mut rng.substream(i));
                permuted_dot(&x, &y, perm)
            },
        )
        .collect();
    let tail = stats.iter().filter(|&&r| r >= observed - TIE_TOLERANCE).count();
    let fit = normal_fit(&stats)?;
    let upper = normal_upper_tail((observed - fit.mu) / fit.sigma);
    Ok(MonteCarloRun {
        result: TestResult {
            method: Method::PermRstar,
            statistic: observed,
            p_value: upper,
            n1: n,
            n2: n,
            replicates,
            seed: Some(rng.seed),
            stream: Some(rng.stream),
            null_fit: Some(fit),
            p_empirical: Some(tail as f64 / replicates as f64),
            p_two_sided: Some((2.0 * upper.min(1.0 - upper)).min(1.0)),
            p_analytic: None,
        },
        replicate_stats: stats,
    })
}

/// Probability that a uniformly drawn `subset_size`-subset of `values` has a
/// mean at least `observed_mean`, by Monte Carlo, plus a normal approximation
/// from the exact finite-population mean and variance of subset means.
pub fn subsample_mean_test(
    values: &[f64],
    subset_size: usize,
    observed_mean: f64,
    replicates: u64,
    rng: RngSpec,
) -> Result<MonteCarloRun> {
    let n = values.len();
    if subset_size == 0 || subset_size > n {
        return Err(Error::invalid(format!("subset size {subset_size} not in 1..={n}")));
    }
    if replicates == 0 {
        return Err(Error::invalid("replicates must be positive"));
    }
    let k = subset_size as f64;
    let means: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map_init(
            || values.to_vec(),
            |buf, i| {
                buf.copy_from_slice(values);
                shuffle_take(buf, subset_size, &mut rng.substream(i));
                buf[..subset_size].iter().sum::<f64>() / k
            },
        )
        .collect();
    let slack = TIE_TOLERANCE * observed_mean.abs().max(1.0);
    let tail = means.iter().filter(|&&m| m >= observed_mean - slack).count();
    let p_empirical = tail as f64 / replicates as f64;
    Ok(MonteCarloRun {
        result: TestResult {
            method: Method::SubsampleMean,
            statistic: observed_mean,
            p_value: p_empirical,
            n1: n,
            n2: subset_size,
            replicates,
            seed: Some(rng.seed),
            stream: Some(rng.stream),
            null_fit: normal_fit(&means).ok(),
            p_empirical: Some(p_empirical),
            p_two_sided: None,
            p_analytic: Some(subsample_mean_tail(values, subset_size, observed_mean)),
        },
        replicate_stats: means,
    })
}

/// Normal approximation to `P(mean of a random k-subset ≥ observed)` using
/// `E = μ` and `Var = σ²/k · (N−k)/(N−1)` with `σ²` the population variance.
pub fn subsample_mean_tail(values: &[f64], k: usize, observed: f64) -> f64 {
    let n = values.len();
    let mu = values.iter().sum::<f64>() / n as f64;
    let pop_var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n as f64;
    let var = if n > 1 { pop_var / k as f64 * (n - k) as f64 / (n - 1) as f64 } else { 0.0 };
    if var <= 0.0 {
        return if observed <= mu { 1.0 } else { 0.0 };
    }
    normal_upper_tail((observed - mu) / var.sqrt())
}
