use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ErmError;

/// Labelled records stored row-major: record `i` occupies
/// `features[i*d .. (i+1)*d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(d: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self, ErmError> {
        if d == 0 || features.len() != d * labels.len() {
            return Err(ErmError::Shape {
                d,
                features: features.len(),
                labels: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(ErmError::Label(bad));
        }
        Ok(Self {
            d,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn records(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.features
            .chunks_exact(self.d)
            .zip(self.labels.iter().copied())
    }

    /// Reorders records by `order`, a permutation of `0..len()`.
    pub fn permuted(&self, order: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(self.features.len());
        for &i in order {
            features.extend_from_slice(self.row(i));
        }
        let labels = order.iter().map(|&i| self.labels[i]).collect();
        Dataset {
            d: self.d,
            features,
            labels,
        }
    }
}

/// Class-conditional Gaussian data: `y` uniform on `{−1, +1}`,
/// `x ~ N(y·μ, I)` with `μ = (separation, 0, …, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub d: usize,
    pub separation: f64,
}

impl GeneratorSpec {
    pub fn sample(&self, n: usize, rng_seed: u64) -> Dataset {
        generate_synthetic(n, self.d, self.separation, rng_seed)
    }
}

pub fn generate_synthetic(n: usize, d: usize, separation: f64, rng_seed: u64) -> Dataset {
    assert!(d >= 1, "feature dimension must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
        labels.push(y);
        for k in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            features.push(if k == 0 { z + y * separation } else { z });
        }
    }
    Dataset {
        d,
        features,
        labels,
    }
}

/// Noise the learner and each user add to the features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub sigma_l: f64,
    pub sigma_s_per_user: Vec<f64>,
    pub rng_seed: u64,
}

fn check_std(value: f64) -> Result<(), ErmError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ErmError::NoiseStd(value))
    }
}

/// `x̃_i = x_i + v_i + w_i` with `v_i ~ N(0, (σ_S^i)² I)` and `w_i ~ N(0, σ_L² I)`.
pub fn perturb_dataset(data: &Dataset, spec: &PerturbationSpec) -> Result<Dataset, ErmError> {
    if spec.sigma_s_per_user.len() != data.len() {
        return Err(ErmError::UserCount {
            expected: data.len(),
            got: spec.sigma_s_per_user.len(),
        });
    }
    check_std(spec.sigma_l)?;
    for &s in &spec.sigma_s_per_user {
        check_std(s)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut features = data.features.clone();
    for (row, &sigma_s) in features
        .chunks_exact_mut(data.d)
        .zip(&spec.sigma_s_per_user)
    {
        for x in row {
            let user: f64 = rng.sample(StandardNormal);
            let learner: f64 = rng.sample(StandardNormal);
            *x += sigma_s * user + spec.sigma_l * learner;
        }
    }
    Ok(Dataset {
        d: data.d,
        features,
        labels: data.labels.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn variance(xs: &[f64]) -> f64 {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    }

    #[test]
    fn label_balance_and_determinism() {
        let a = generate_synthetic(1000, 5, 2.0, 7);
        let positives = a.labels().iter().filter(|&&y| y > 0.0).count();
        assert!((450..=550).contains(&positives), "{positives}");
        assert_eq!(a, generate_synthetic(1000, 5, 2.0, 7));
        assert_ne!(a, generate_synthetic(1000, 5, 2.0, 8));
    }

    #[test]
    fn class_means_follow_separation() {
        let data = generate_synthetic(20_000, 2, 1.5, 1);
        let signed_mean: f64 =
            data.records().map(|(x, y)| y * x[0]).sum::<f64>() / data.len() as f64;
        assert!((signed_mean - 1.5).abs() < 0.05);
        let off_axis: f64 = data.records().map(|(x, y)| y * x[1]).sum::<f64>() / data.len() as f64;
        assert!(off_axis.abs() < 0.05);
    }

    #[test]
    fn zero_noise_is_identity() {
        let data = generate_synthetic(50, 3, 1.0, 3);
        let spec = PerturbationSpec {
            sigma_l: 0.0,
            sigma_s_per_user: vec![0.0; 50],
            rng_seed: 9,
        };
        assert_eq!(perturb_dataset(&data, &spec).unwrap(), data);
    }

    #[test]
    fn injected_variances_add() {
        let n = 10_000;
        let data = generate_synthetic(n, 1, 1.0, 4);
        for (sigma_s, expected) in [(0.0, 1.0), (1.0, 2.0)] {
            let spec = PerturbationSpec {
                sigma_l: 1.0,
                sigma_s_per_user: vec![sigma_s; n],
                rng_seed: 5,
            };
            let noisy = perturb_dataset(&data, &spec).unwrap();
            let diffs: Vec<f64> = noisy
                .features()
                .iter()
                .zip(data.features())
                .map(|(a, b)| a - b)
                .collect();
            let v = variance(&diffs);
            assert!((v / expected - 1.0).abs() < 0.05, "{v} vs {expected}");
            assert_eq!(noisy.labels(), data.labels());
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let data = generate_synthetic(4, 2, 1.0, 0);
        let spec = PerturbationSpec {
            sigma_l: 0.0,
            sigma_s_per_user: vec![0.0; 3],
            rng_seed: 0,
        };
        assert!(matches!(
            perturb_dataset(&data, &spec),
            Err(ErmError::UserCount { .. })
        ));
        let spec = PerturbationSpec {
            sigma_l: -1.0,
            sigma_s_per_user: vec![0.0; 4],
            rng_seed: 0,
        };
        assert_eq!(perturb_dataset(&data, &spec), Err(ErmError::NoiseStd(-1.0)));
        assert!(matches!(
            Dataset::new(2, vec![0.0; 4], vec![1.0, 0.5]),
            Err(ErmError::Label(_))
        ));
        assert!(matches!(
            Dataset::new(2, vec![0.0; 3], vec![1.0, 1.0]),
            Err(ErmError::Shape { .. })
        ));
    }
}
