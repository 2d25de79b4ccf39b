//! Sample sizes for estimating a proportion, and seeded sample draws.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("confidence must lie in (0, 1), got {0}")]
    Confidence(f64),
    #[error("margin must lie in (0, 1), got {0}")]
    Margin(f64),
    #[error("proportion must lie in [0, 1], got {0}")]
    Proportion(f64),
    #[error("population must be positive")]
    EmptyPopulation,
    #[error("cannot draw {requested} from a population of {population}")]
    TooLarge { requested: usize, population: usize },
}

/// Inverse of the standard normal CDF (Wichura's AS241, about 1e-16
/// relative accuracy).
#[allow(clippy::excessive_precision)]
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0, 1), got {p}");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r
                + 45921.953931549871457)
                * r
                + 13731.693765509461125)
                * r
                + 1971.5909503065514427)
                * r
                + 133.14166789178437745)
                * r
                + 3.387132872796366608)
            / (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r
                + 21213.794301586595867)
                * r
                + 5394.1960214247511077)
                * r
                + 687.1870074920579083)
                * r
                + 42.313330701600911252)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let value = if r <= 5.0 {
        r -= 1.6;
        (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r
            + 1.27045825245236838258)
            * r
            + 3.64784832476320460504)
            * r
            + 5.7694972214606914055)
            * r
            + 4.6303378461565452959)
            * r
            + 1.42343711074968357734)
            / (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r
                + 0.14810397642748007459)
                * r
                + 0.68976733498510000455)
                * r
                + 1.6763848301838038494)
                * r
                + 2.05319162663775882187)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r
            + 0.026532189526576123093)
            * r
            + 0.29656057182850489123)
            * r
            + 1.7848265399172913358)
            * r
            + 5.4637849111641143699)
            * r
            + 6.6579046435011037772)
            / (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r
                + 7.868691311456132591e-4)
                * r
                + 0.0148753612908506148525)
                * r
                + 0.13692988092273580531)
                * r
                + 0.59983220655588793769)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -value
    } else {
        value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub population: usize,
    pub confidence: f64,
    pub margin: f64,
    /// Expected proportion; 0.5 is the most conservative choice.
    pub proportion: f64,
}

impl SampleSpec {
    pub fn new(population: usize, confidence: f64, margin: f64) -> Self {
        Self {
            population,
            confidence,
            margin,
            proportion: 0.5,
        }
    }

    fn validate(&self) -> Result<(), SamplingError> {
        if self.population == 0 {
            return Err(SamplingError::EmptyPopulation);
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(SamplingError::Confidence(self.confidence));
        }
        if !(self.margin > 0.0 && self.margin < 1.0) {
            return Err(SamplingError::Margin(self.margin));
        }
        if !(0.0..=1.0).contains(&self.proportion) {
            return Err(SamplingError::Proportion(self.proportion));
        }
        Ok(())
    }

    /// Two-sided critical value for the confidence level.
    pub fn z(&self) -> f64 {
        normal_quantile(1.0 - (1.0 - self.confidence) / 2.0)
    }

    /// Sample size before rounding: Cochran's n0 with the finite population
    /// correction.
    pub fn exact_size(&self) -> Result<f64, SamplingError> {
        self.validate()?;
        let z = self.z();
        let n0 = z * z * self.proportion * (1.0 - self.proportion) / (self.margin * self.margin);
        let n = self.population as f64;
        Ok(n0 / (1.0 + (n0 - 1.0) / n))
    }
}

/// Smallest integer sample size meeting the requirements, never above the population.
pub fn required_sample_size(spec: &SampleSpec) -> Result<usize, SamplingError> {
    let exact = spec.exact_size()?;
    Ok((exact.ceil() as usize).clamp(1, spec.population))
}

/// Draws `size` distinct items uniformly without replacement, fully
/// determined by `seed`. Items come back in draw order.
pub fn draw_sample<T: Clone>(items: &[T], size: usize, seed: u64) -> Result<Vec<T>, SamplingError> {
    if size > items.len() {
        return Err(SamplingError::TooLarge {
            requested: size,
            population: items.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, items.len(), size)
        .into_iter()
        .map(|i| items[i].clone())
        .collect())
}
