//! Resampling p-values, test decisions and the two-sample Kolmogorov–Smirnov test.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{CbdError, Result};
use crate::estimator::{EstimatorConfig, EstimatorKind, PreparedStatistic, WeightFunction};
use crate::kernels::Bandwidths;
use crate::par;
use crate::resampling::{ResamplePlan, Resampler};
use crate::rng::{derive_seed, rng_from_seed};

/// Seed-path tag for the observed statistic (only the incomplete U-statistic uses it).
const OBSERVED: u64 = u64::MAX;

/// Outcome of a resampling test. Field names are the stable JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: String,
    pub estimator: EstimatorKind,
    pub weight: WeightFunction,
    #[serde(rename = "M")]
    pub resamples: usize,
    pub alpha: f64,
    pub seed: u64,
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    pub resampled: Vec<f64>,
    pub bandwidths: Bandwidths,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mh_acceptance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d_statistic: f64,
    pub p_value: f64,
}

/// (1 + #{j : stats_j ≥ stat0}) / (1 + M).
pub fn resampling_pvalue(stat0: f64, stats: &[f64]) -> Result<f64> {
    if stats.is_empty() {
        return Err(CbdError::InvalidInput("no resampled statistics".into()));
    }
    if stat0.is_nan() || stats.iter().any(|s| s.is_nan()) {
        return Err(CbdError::InvalidInput("statistics contain NaN".into()));
    }
    let exceed = stats.iter().filter(|&&s| s >= stat0).count();
    Ok((1 + exceed) as f64 / (1 + stats.len()) as f64)
}

/// Rejection rule: reject when the p-value does not exceed α.
///
/// With this rule P(reject) = ⌊(M+1)α⌋/(M+1) exactly for exchangeable
/// statistics without ties.
#[inline]
pub fn decide(p_value: f64, alpha: f64) -> bool {
    p_value <= alpha
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CbdError::param("alpha", format!("must lie in (0, 1), got {alpha}")))
    }
}

/// Score D₀ and M resamples with one estimator and assemble the decision.
///
/// Bandwidths are fixed from D₀; resample j uses the RNG stream
/// `derive_seed(plan.seed, [j])`, so the result does not depend on the
/// number of worker threads.
pub fn run_test(
    ds: &Dataset,
    plan: &ResamplePlan,
    config: &EstimatorConfig,
    alpha: f64,
) -> Result<TestResult> {
    plan.validate()?;
    check_alpha(alpha)?;
    let stat = PreparedStatistic::prepare(ds, *config)?;
    let bw = stat.bandwidths();
    let resampler = Resampler::prepare(ds, &plan.method, &bw, config.kernel)?;
    let statistic = stat.evaluate(ds.x(), derive_seed(plan.seed, &[OBSERVED]))?;
    let draws = par::try_map_range(plan.resamples, |j| {
        let stream = derive_seed(plan.seed, &[j as u64]);
        let mut rng = rng_from_seed(stream);
        let draw = resampler.draw(ds, &mut rng)?;
        let value = stat.evaluate(&draw.x, derive_seed(stream, &[OBSERVED]))?;
        Ok::<_, CbdError>((value, draw.acceptance))
    })?;
    let resampled: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let acc: Vec<f64> = draws.iter().filter_map(|d| d.1).collect();
    let mh_acceptance = (!acc.is_empty()).then(|| acc.iter().sum::<f64>() / acc.len() as f64);
    let p_value = resampling_pvalue(statistic, &resampled)?;
    Ok(TestResult {
        method: plan.method.id().to_string(),
        estimator: config.kind,
        weight: config.effective_weight(),
        resamples: plan.resamples,
        alpha,
        seed: plan.seed,
        statistic,
        p_value,
        reject: decide(p_value, alpha),
        resampled,
        bandwidths: bw,
        mh_acceptance,
    })
}

/// Asymptotic Kolmogorov tail probability P(K > λ).
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form of the same distribution, accurate for small λ
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 1..=64u32 {
            let m = f64::from(2 * k - 1);
            let term = (-m * m * c).exp();
            cdf += term;
            if term < 1e-16 {
                break;
            }
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100u32 {
        let kf = f64::from(k);
        let term = 2.0 * (-2.0 * kf * kf * lambda * lambda).exp();
        if term < 1e-12 {
            break;
        }
        sum += if k % 2 == 1 { term } else { -term };
    }
    sum.clamp(0.0, 1.0)
}

/// Two-sample KS test with the asymptotic p-value at √(n₁n₂/(n₁+n₂))·D.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(CbdError::InvalidInput("KS test needs two nonempty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(CbdError::InvalidInput("KS samples contain NaN".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n1, n2) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n1 && j < n2 {
        let t = a[i].min(b[j]);
        while i < n1 && a[i] <= t {
            i += 1;
        }
        while j < n2 && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let (f1, f2) = (n1 as f64, n2 as f64);
    let lambda = (f1 * f2 / (f1 + f2)).sqrt() * d;
    let p = kolmogorov_sf(lambda).max(f64::MIN_POSITIVE);
    Ok(KsResult {
        d_statistic: d,
        p_value: p,
    })
}
