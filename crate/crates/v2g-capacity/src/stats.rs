//! Trace post-processing: warm-up truncation, time-weighted steady-state
//! means, relative errors against the analytic model, an exponential
//! goodness-of-fit test, and replication aggregation.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Replication-aggregated estimate with a Student-t 95% confidence
/// half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub replication_count: usize,
}

/// One-sample Kolmogorov-Smirnov result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub sample_size: usize,
}

/// Time-weighted mean of a piecewise-constant series after discarding
/// everything up to `warmup` minutes. Each sampled value is held constant
/// until the next timestamp.
pub fn steady_mean(series: &[(f64, f64)], warmup: f64) -> Result<f64> {
    let last = series
        .last()
        .ok_or_else(|| Error::InsufficientData("empty series".into()))?
        .0;
    if warmup >= last {
        return Err(Error::InsufficientData(format!(
            "warm-up {warmup} min leaves no data (series ends at {last} min)"
        )));
    }
    let mut weighted = 0.0;
    let mut width = 0.0;
    for pair in series.windows(2) {
        let (t0, v) = pair[0];
        let t1 = pair[1].0;
        if t1 <= t0 {
            continue;
        }
        let lo = t0.max(warmup);
        if lo >= t1 {
            continue;
        }
        weighted += v * (t1 - lo);
        width += t1 - lo;
    }
    if width <= 0.0 {
        return Err(Error::InsufficientData(
            "series has no duration past the warm-up".into(),
        ));
    }
    Ok(weighted / width)
}

/// `(simulated - analytical) / analytical`.
pub fn relative_error(simulated: f64, analytical: f64) -> Result<f64> {
    if analytical == 0.0 {
        return Err(Error::Domain(
            "relative error undefined for a zero analytical value".into(),
        ));
    }
    Ok((simulated - analytical) / analytical)
}

/// CDF of the Kolmogorov distribution, via its alternating series.
fn kolmogorov_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for k in 1..=100u32 {
        let term = (-2.0 * (k as f64).powi(2) * t * t).exp();
        sum += if k % 2 == 1 { term } else { -term };
    }
    (1.0 - 2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test of `samples` against Exponential(`rate`), with the
/// asymptotic Kolmogorov p-value (Stephens' small-sample correction on the
/// test statistic).
pub fn ks_exponential(samples: &[f64], rate: f64) -> Result<KsResult> {
    if samples.len() < 20 {
        return Err(Error::InsufficientData(format!(
            "KS test needs at least 20 samples, got {}",
            samples.len()
        )));
    }
    if !(rate > 0.0) {
        return Err(Error::Config(format!("exponential rate must be > 0, got {rate}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = 1.0 - (-rate * x).exp();
        d = d.max(cdf - i as f64 / n).max((i + 1) as f64 / n - cdf);
    }
    let t = d * (n.sqrt() + 0.12 + 0.11 / n.sqrt());
    Ok(KsResult {
        statistic: d,
        p_value: 1.0 - kolmogorov_cdf(t),
        sample_size: sorted.len(),
    })
}

/// Mean and Student-t 95% confidence half-width across replications.
pub fn aggregate(replication_means: &[f64]) -> Result<SteadyStateEstimate> {
    let n = replication_means.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "confidence interval needs at least 2 replications, got {n}"
        )));
    }
    let mean = replication_means.iter().sum::<f64>() / n as f64;
    let var = replication_means
        .iter()
        .map(|x| (x - mean).powi(2))
        .sum::<f64>()
        / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("valid dof")
        .inverse_cdf(0.975);
    Ok(SteadyStateEstimate {
        mean,
        half_width: t * (var / n as f64).sqrt(),
        replication_count: n,
    })
}
