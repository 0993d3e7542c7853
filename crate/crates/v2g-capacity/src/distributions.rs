//! Seed-reproducible random variate generation.
//!
//! Every stochastic process in a scenario (arrivals, SOC draws, stay
//! durations, quit coin flips, service reservoirs) owns its own
//! [`RandomStream`]. Streams with distinct ids are statistically independent
//! even under the same seed, so perturbing one model parameter never shifts
//! the draws of an unrelated process (common random numbers across runs).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::error::{Error, Result};

/// Rejection-sampling cap for one truncated-normal draw.
const TRUNC_NORMAL_MAX_REJECTS: u32 = 10_000;

/// An independent, reproducible random number stream.
///
/// The same `(seed, stream_id)` pair always yields the identical variate
/// sequence.
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on [0, 1).
    pub fn uniform01(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha12Rng {
        &mut self.rng
    }
}

/// The distribution families the scenario model needs.
///
/// Times are in minutes, SOC quantities dimensionless in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    /// Exponential with the given rate (mean `1/rate`).
    Exponential { rate: f64 },
    /// Normal(mean, std) conditioned on `[low, high]`.
    TruncatedNormal {
        mean: f64,
        std: f64,
        low: f64,
        high: f64,
    },
    /// Uniform on `[low, high]`.
    Uniform { low: f64, high: f64 },
    /// Degenerate point mass.
    Constant { value: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::Exponential { rate } => {
                if !(rate > 0.0) {
                    return Err(Error::Config(format!(
                        "exponential rate must be > 0, got {rate}"
                    )));
                }
            }
            DistributionSpec::TruncatedNormal {
                mean, std, low, high,
            } => {
                if !(std > 0.0) {
                    return Err(Error::Config(format!(
                        "truncated-normal std must be > 0, got {std}"
                    )));
                }
                if !(low < high) {
                    return Err(Error::Config(format!(
                        "truncated-normal requires low < high, got [{low}, {high}]"
                    )));
                }
                if !mean.is_finite() {
                    return Err(Error::Config(format!(
                        "truncated-normal mean must be finite, got {mean}"
                    )));
                }
            }
            DistributionSpec::Uniform { low, high } => {
                if !(low <= high) {
                    return Err(Error::Config(format!(
                        "uniform requires low <= high, got [{low}, {high}]"
                    )));
                }
            }
            DistributionSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::Config(format!(
                        "constant value must be finite, got {value}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Draws one variate from the spec's support.
    pub fn sample(&self, stream: &mut RandomStream) -> Result<f64> {
        self.validate()?;
        match *self {
            DistributionSpec::Exponential { rate } => {
                let exp = Exp::new(rate)
                    .map_err(|e| Error::Config(format!("exponential({rate}): {e}")))?;
                Ok(exp.sample(stream.rng()))
            }
            DistributionSpec::TruncatedNormal {
                mean, std, low, high,
            } => {
                let normal = Normal::new(mean, std)
                    .map_err(|e| Error::Config(format!("normal({mean}, {std}): {e}")))?;
                for _ in 0..TRUNC_NORMAL_MAX_REJECTS {
                    let x = normal.sample(stream.rng());
                    if (low..=high).contains(&x) {
                        return Ok(x);
                    }
                }
                Err(Error::Domain(format!(
                    "truncated normal({mean}, {std}) on [{low}, {high}]: \
                     {TRUNC_NORMAL_MAX_REJECTS} rejections without acceptance"
                )))
            }
            DistributionSpec::Uniform { low, high } => {
                Ok(low + (high - low) * stream.uniform01())
            }
            DistributionSpec::Constant { value } => Ok(value),
        }
    }
}

/// Exponential inter-arrival gap of a Poisson process, in minutes.
pub fn next_poisson_interarrival(rate: f64, stream: &mut RandomStream) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::Config(format!(
            "Poisson arrival rate must be > 0, got {rate}"
        )));
    }
    DistributionSpec::Exponential { rate }.sample(stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stream(id: u64) -> RandomStream {
        RandomStream::new(0xC0FFEE, id)
    }

    fn sample_stats(spec: &DistributionSpec, n: usize, stream: &mut RandomStream) -> (f64, f64) {
        let xs: Vec<f64> = (0..n).map(|_| spec.sample(stream).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var)
    }

    #[test]
    fn constant_is_identity() {
        let spec = DistributionSpec::Constant { value: 7.0 };
        assert_eq!(spec.sample(&mut stream(0)).unwrap(), 7.0);
    }

    #[test]
    fn truncated_normal_stays_in_bounds_and_matches_mean() {
        let spec = DistributionSpec::TruncatedNormal {
            mean: 420.0,
            std: 60.0,
            low: 60.0,
            high: 780.0,
        };
        let mut s = stream(1);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let x = spec.sample(&mut s).unwrap();
            assert!((60.0..=780.0).contains(&x));
            sum += x;
        }
        let mean = sum / n as f64;
        // truncation at +/-6 sigma leaves the mean essentially untouched
        assert!((mean - 420.0).abs() < 2.0, "mean {mean}");
    }

    #[test]
    fn exponential_mean_matches() {
        let spec = DistributionSpec::Exponential { rate: 1.0 / 50.0 };
        let (mean, var) = sample_stats(&spec, 100_000, &mut stream(2));
        assert!((mean - 50.0).abs() < 1.0, "mean {mean}");
        // variance of Exp(rate) is 1/rate^2 = 2500; 3 standard errors
        let se = (2.0f64).sqrt() * 2500.0 / (100_000f64).sqrt();
        assert!((var - 2500.0).abs() < 3.0 * se * 3.0, "var {var}");
    }

    #[test]
    fn uniform_moments_match() {
        let spec = DistributionSpec::Uniform { low: 0.6, high: 0.8 };
        let (mean, var) = sample_stats(&spec, 100_000, &mut stream(3));
        assert!((mean - 0.7).abs() < 0.001, "mean {mean}");
        let true_var = 0.2f64.powi(2) / 12.0;
        assert!((var - true_var).abs() < 0.0002, "var {var}");
    }

    #[test]
    fn poisson_interarrival_mean() {
        let mut s = stream(4);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| next_poisson_interarrival(5.0, &mut s).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.2).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn same_seed_and_stream_reproduces_sequence() {
        let mut a = RandomStream::new(42, 3);
        let mut b = RandomStream::new(42, 3);
        for _ in 0..100 {
            assert_eq!(
                next_poisson_interarrival(5.0, &mut a).unwrap(),
                next_poisson_interarrival(5.0, &mut b).unwrap()
            );
        }
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RandomStream::new(42, 0);
        let mut b = RandomStream::new(42, 1);
        let xa: Vec<f64> = (0..8).map(|_| a.uniform01()).collect();
        let xb: Vec<f64> = (0..8).map(|_| b.uniform01()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(matches!(
            DistributionSpec::Exponential { rate: 0.0 }
                .sample(&mut stream(5)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            next_poisson_interarrival(0.0, &mut stream(5)),
            Err(Error::Config(_))
        ));
        assert!(DistributionSpec::TruncatedNormal {
            mean: 0.0,
            std: -1.0,
            low: 0.0,
            high: 1.0
        }
        .validate()
        .is_err());
        assert!(DistributionSpec::TruncatedNormal {
            mean: 0.0,
            std: 1.0,
            low: 1.0,
            high: 1.0
        }
        .validate()
        .is_err());
        assert!(DistributionSpec::Uniform { low: 2.0, high: 1.0 }
            .validate()
            .is_err());
    }

    proptest! {
        #[test]
        fn truncated_normal_never_leaves_support(
            mean in -10.0f64..10.0,
            std in 0.1f64..5.0,
            half in 0.5f64..20.0,
            seed in any::<u64>(),
        ) {
            let spec = DistributionSpec::TruncatedNormal {
                mean,
                std,
                low: mean - half,
                high: mean + half,
            };
            let mut s = RandomStream::new(seed, 0);
            for _ in 0..50 {
                let x = spec.sample(&mut s).unwrap();
                prop_assert!(x >= mean - half && x <= mean + half);
            }
        }

        #[test]
        fn exponential_nonnegative(rate in 0.001f64..100.0, seed in any::<u64>()) {
            let spec = DistributionSpec::Exponential { rate };
            let mut s = RandomStream::new(seed, 0);
            for _ in 0..50 {
                prop_assert!(spec.sample(&mut s).unwrap() >= 0.0);
            }
        }
    }
}
