//! Synthetic labelled data: isotropic Gaussian clusters around uniformly
//! drawn centers, one cluster per identity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::learner::LabeledSample;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid synthetic data spec: {0}")]
pub struct InvalidSpec(pub String);

/// Parameters of the synthetic cluster generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataSpec {
    pub class_count: usize,
    pub samples_per_class: usize,
    pub input_dim: usize,
    /// Cluster centers are drawn uniformly from [−scale, scale] per
    /// coordinate.
    pub center_scale: f64,
    /// Standard deviation of the isotropic noise around each center.
    pub noise_std: f64,
    pub seed: u64,
}

impl SyntheticDataSpec {
    fn validate(&self) -> Result<(), InvalidSpec> {
        if self.class_count < 2 {
            return Err(InvalidSpec("class count must be at least 2".into()));
        }
        if self.input_dim < 2 {
            return Err(InvalidSpec("input dimension must be at least 2".into()));
        }
        if self.samples_per_class == 0 {
            return Err(InvalidSpec("samples per class must be positive".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(InvalidSpec("noise must be finite and non-negative".into()));
        }
        if !(self.center_scale >= 0.0 && self.center_scale.is_finite()) {
            return Err(InvalidSpec("scale must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Draws `class_count · samples_per_class` samples, class-major order,
/// deterministic for a fixed seed.
pub fn gen_synthetic(spec: &SyntheticDataSpec) -> Result<Vec<LabeledSample>, InvalidSpec> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers: Vec<Vec<f64>> = (0..spec.class_count)
        .map(|_| {
            (0..spec.input_dim)
                .map(|_| rng.random_range(-spec.center_scale..=spec.center_scale))
                .collect()
        })
        .collect();
    let mut samples = Vec::with_capacity(spec.class_count * spec.samples_per_class);
    for (label, center) in centers.iter().enumerate() {
        for _ in 0..spec.samples_per_class {
            let point: Vec<f64> = center
                .iter()
                .map(|&c| {
                    let z: f64 = rng.sample(StandardNormal);
                    c + spec.noise_std * z
                })
                .collect();
            samples.push(LabeledSample::new(point, label));
        }
    }
    Ok(samples)
}

/// Dataset rendered as CSV: a `label,f0,...` header and one row per
/// sample with 17-significant-digit coordinates.
pub fn dataset_csv(data: &[LabeledSample]) -> String {
    let width = data.first().map_or(0, |s| s.input.flat().len());
    let mut out = String::from("label");
    for i in 0..width {
        out.push_str(&format!(",f{i}"));
    }
    out.push('\n');
    for sample in data {
        out.push_str(&sample.label.to_string());
        for v in sample.input.flat() {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::euclidean_distance;

    fn base_spec() -> SyntheticDataSpec {
        SyntheticDataSpec {
            class_count: 2,
            samples_per_class: 500,
            input_dim: 4,
            center_scale: 10.0,
            noise_std: 0.1,
            seed: 2024,
        }
    }

    #[test]
    fn zero_noise_collapses_to_centers() {
        let spec = SyntheticDataSpec {
            noise_std: 0.0,
            samples_per_class: 5,
            ..base_spec()
        };
        let data = gen_synthetic(&spec).unwrap();
        for class in 0..spec.class_count {
            let class_samples: Vec<_> = data.iter().filter(|s| s.label == class).collect();
            for s in &class_samples {
                assert_eq!(s.input.flat(), class_samples[0].input.flat());
            }
        }
    }

    #[test]
    fn same_seed_reproduces_the_dataset() {
        let a = gen_synthetic(&base_spec()).unwrap();
        let b = gen_synthetic(&base_spec()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let a = gen_synthetic(&base_spec()).unwrap();
        let b = gen_synthetic(&SyntheticDataSpec {
            seed: 2025,
            ..base_spec()
        })
        .unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn well_separated_clusters_classify_perfectly_by_nearest_centroid() {
        // 1000 samples across two classes
        let data = gen_synthetic(&base_spec()).unwrap();
        assert_eq!(data.len(), 1000);
        let mut centroids = vec![vec![0.0; 4]; 2];
        let mut counts = [0usize; 2];
        for s in &data {
            counts[s.label] += 1;
            for (c, v) in centroids[s.label].iter_mut().zip(s.input.flat()) {
                *c += v;
            }
        }
        for (centroid, count) in centroids.iter_mut().zip(counts) {
            for c in centroid.iter_mut() {
                *c /= count as f64;
            }
        }
        let errors = data
            .iter()
            .filter(|s| {
                let d0 = euclidean_distance(&centroids[0], s.input.flat()).unwrap();
                let d1 = euclidean_distance(&centroids[1], s.input.flat()).unwrap();
                let predicted = if d0 <= d1 { 0 } else { 1 };
                predicted != s.label
            })
            .count();
        assert_eq!(errors, 0);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(gen_synthetic(&SyntheticDataSpec {
            class_count: 1,
            ..base_spec()
        })
        .is_err());
        assert!(gen_synthetic(&SyntheticDataSpec {
            input_dim: 1,
            ..base_spec()
        })
        .is_err());
        assert!(gen_synthetic(&SyntheticDataSpec {
            noise_std: -0.5,
            ..base_spec()
        })
        .is_err());
        assert!(gen_synthetic(&SyntheticDataSpec {
            samples_per_class: 0,
            ..base_spec()
        })
        .is_err());
    }
}
