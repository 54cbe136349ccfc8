use serde::{Deserialize, Serialize};

/// A numerical result with its standard error and provenance.
///
/// Deterministic backends report `std_error == 0`; stochastic ones carry the
/// sample count and seed needed to reproduce them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub count: u64,
    pub seed: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            count: 0,
            seed: 0,
        }
    }

    pub fn stochastic(value: f64, std_error: f64, count: u64, seed: u64) -> Self {
        Self {
            value,
            std_error,
            count,
            seed,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.std_error == 0.0
    }

    /// `|value - target|` in units of the standard error (infinite when an
    /// exact estimate misses).
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.value - target).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.value - target).abs() <= sigmas * self.std_error
    }
}

/// Mean and standard error of `values`.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean and batch-means standard error; accounts for serial correlation in
/// Markov chain output.
pub fn batch_means(values: &[f64], batches: usize) -> (f64, f64) {
    let n = values.len();
    let batches = batches.min(n).max(1);
    let size = n / batches;
    if size == 0 || batches < 2 {
        return mean_and_se(values);
    }
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    let (_, se) = mean_and_se(&means);
    (mean, se)
}
