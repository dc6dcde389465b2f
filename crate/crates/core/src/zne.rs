//! Heavy-output statistics, zero-noise extrapolation and the pass rule.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qv::{parse_bitstring, HeavySet};
use crate::sim::Counts;

/// Mean HOP must exceed this (after subtracting 2σ) to pass.
pub const PASS_THRESHOLD: f64 = 2.0 / 3.0;
pub const DEFAULT_RESAMPLES: usize = 100;

/// Measured heavy-output statistics at one scale factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub lambda: f64,
    pub hop: f64,
    /// Total shots over all instances.
    pub shots: u64,
    pub instances: usize,
    /// Per-instance HOPs for local folding ensembles.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub instance_hops: Vec<f64>,
    /// Noise-free-sampling HOP of the simulated state, when available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_hop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZneEstimate {
    /// Fitted HOP at `λ = 0`; not clipped.
    pub intercept: f64,
    /// Polynomial coefficients in ascending powers of `λ`.
    pub coefficients: Vec<f64>,
    pub order: usize,
    pub lambdas_used: Vec<f64>,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvRecord {
    pub circuit_id: usize,
    pub n: usize,
    pub seed: u64,
    pub heavy_set: HeavySet,
    /// Sorted by `λ`; always contains `λ = 1`.
    pub per_lambda: Vec<LambdaPoint>,
    pub zne: ZneEstimate,
}

impl QvRecord {
    pub fn point(&self, lambda: f64) -> Option<&LambdaPoint> {
        self.per_lambda.iter().find(|p| p.lambda == lambda)
    }

    pub fn raw_hop(&self) -> Option<f64> {
        self.point(1.0).map(|p| p.hop)
    }
}

/// Fraction of shots that land in the heavy set.
pub fn hop_from_counts(counts: &Counts, heavy: &HeavySet) -> Result<f64> {
    let mut total = 0u64;
    let mut hits = 0u64;
    for (bits, &k) in counts {
        let x = parse_bitstring(bits, heavy.n)?;
        total += k;
        if heavy.contains(x) {
            hits += k;
        }
    }
    if total == 0 {
        return Err(Error::Counts("zero total shots".into()));
    }
    Ok(hits as f64 / total as f64)
}

pub fn combine_local_ensemble(hops: &[f64]) -> Result<f64> {
    if hops.is_empty() {
        return Err(Error::InsufficientData("empty local-folding ensemble".into()));
    }
    Ok(mean(hops))
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Least-squares polynomial fit of `hop` against `λ`, evaluated at `λ = 0`.
pub fn extrapolate(points: &[(f64, f64)], order: usize) -> Result<ZneEstimate> {
    if let Some(&(l, _)) = points.iter().find(|(l, h)| !l.is_finite() || !h.is_finite() || *l < 1.0) {
        return Err(Error::InvalidArgument(format!("scale factor {l} must be finite and at least 1")));
    }
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < order + 1 {
        return Err(Error::InsufficientData(format!(
            "order {order} fit needs {} distinct scale factors, got {}",
            order + 1,
            distinct.len()
        )));
    }
    let a = DMatrix::from_fn(points.len(), order + 1, |r, c| points[r].0.powi(c as i32));
    let b = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= smax * 1e-12 {
        return Err(Error::InsufficientData("degenerate extrapolation design".into()));
    }
    let coef = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::InsufficientData(format!("least squares failed: {e}")))?;
    let resid = &a * &coef - &b;
    Ok(ZneEstimate {
        intercept: coef[0],
        coefficients: coef.iter().copied().collect(),
        order,
        lambdas_used: distinct,
        residual_rms: (resid.norm_squared() / points.len() as f64).sqrt(),
    })
}

/// Standard deviation (over resamples) of the means of size-`N` resamples
/// drawn with replacement.
pub fn bootstrap_sigma<R: Rng + ?Sized>(values: &[f64], resamples: usize, rng: &mut R) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("bootstrap of an empty vector".into()));
    }
    if resamples < 2 {
        return Err(Error::InvalidArgument("bootstrap needs at least 2 resamples".into()));
    }
    let n = values.len();
    // Shifting by the first value leaves σ unchanged and makes constant input exact.
    let shift = values[0];
    let means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)] - shift).sum::<f64>() / n as f64)
        .collect();
    let m = mean(&means);
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PassDecision {
    Pass,
    Fail,
}

impl PassDecision {
    pub fn passed(self) -> bool {
        self == PassDecision::Pass
    }
}

/// Pass iff `mean − 2σ > 2/3`.
pub fn evaluate_pass(mean_hop: f64, sigma: f64) -> PassDecision {
    if mean_hop - 2.0 * sigma > PASS_THRESHOLD {
        PassDecision::Pass
    } else {
        PassDecision::Fail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativePoint {
    pub index: usize,
    pub mean: f64,
    pub two_sigma: f64,
}

/// Mean and bootstrap `2σ` over each prefix. Every prefix reseeds the
/// generator with `seed`, so the last point equals the full-vector bootstrap.
pub fn cumulative_series(values: &[f64], resamples: usize, seed: u64) -> Result<Vec<CumulativePoint>> {
    if values.is_empty() {
        return Err(Error::InsufficientData("cumulative series of an empty vector".into()));
    }
    let mut sum = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sigma = bootstrap_sigma(&values[..=i], resamples, &mut rng)?;
            Ok(CumulativePoint {
                index: i,
                mean: if i + 1 == values.len() { mean(values) } else { sum / (i + 1) as f64 },
                two_sigma: 2.0 * sigma,
            })
        })
        .collect()
}
