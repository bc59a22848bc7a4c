use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::{align_points, ols, pearson_slices, AlignedPair, AnalysisError, CorrelationReport};
use crate::ingest::{MarketSeries, TemperatureSeries};
use crate::par;

/// Generator for null factor series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RandomDist {
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std: f64 },
}

impl RandomDist {
    /// Uniform over `[min, max]` of the given values.
    pub fn uniform_like(values: &[f64]) -> Self {
        let low = values.iter().copied().fold(f64::INFINITY, f64::min);
        let high = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        RandomDist::Uniform { low, high }
    }

    /// Normal with the sample mean and standard deviation of the values.
    pub fn normal_like(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        RandomDist::Normal { mean, std: var.sqrt() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RandomDist::Uniform { .. } => "random_uniform",
            RandomDist::Normal { .. } => "random_normal",
        }
    }

    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, AnalysisError> {
        let bad = |e: String| AnalysisError::BadDistribution(e);
        Ok(match *self {
            RandomDist::Uniform { low, high } => {
                let u = Uniform::new_inclusive(low, high).map_err(|e| bad(e.to_string()))?;
                (0..n).map(|_| u.sample(rng)).collect()
            }
            RandomDist::Normal { mean, std } => {
                if !(std > 0.0) {
                    return Err(bad(format!("standard deviation {std}")));
                }
                let d = Normal::new(mean, std).map_err(|e| bad(e.to_string()))?;
                (0..n).map(|_| rng.sample(d)).collect()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport {
    pub mean_rho: f64,
    /// Standard error of the mean over trials; 0 for a single trial.
    pub std_error: f64,
    pub trials: usize,
    pub n: usize,
}

/// Correlates `trials` random series with the market values of `pair`.
/// Trial `i` draws from its own ChaCha stream, so the result does not depend
/// on scheduling.
pub fn random_baseline(
    pair: &AlignedPair,
    dist: RandomDist,
    trials: usize,
    seed: u64,
) -> Result<BaselineReport, AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::NoTrials);
    }
    let rhos = par::map_range(trials, |trial| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let x = dist.sample(pair.len(), &mut rng)?;
        pearson_slices(&x, &pair.y)
    })
    .into_iter()
    .collect::<Result<Vec<f64>, _>>()?;
    let k = rhos.len() as f64;
    let mean_rho = rhos.iter().sum::<f64>() / k;
    let std_error = if rhos.len() > 1 {
        (rhos.iter().map(|r| (r - mean_rho).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        0.0
    };
    Ok(BaselineReport {
        mean_rho,
        std_error,
        trials,
        n: pair.len(),
    })
}

/// Regression of the index on temperature over common dates.
pub fn temperature_baseline(
    temp: &TemperatureSeries,
    market: &MarketSeries,
) -> Result<CorrelationReport, AnalysisError> {
    ols(&align_points(temp.points(), market.points())?)
}
