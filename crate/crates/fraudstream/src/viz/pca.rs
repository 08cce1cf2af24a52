//! Standardized principal-component analysis with a deterministic
//! orientation, plus the derived outlier and baseline scores.

use nalgebra::DMatrix;

use super::VizError;
use crate::strategies::OutlierScorer;

/// Principal components of standardized (zero-mean, unit-variance) data.
///
/// Components are stored row-wise in descending explained-variance order
/// and oriented so each component's largest-magnitude entry is positive,
/// making fitted models comparable across runs.
#[derive(Debug, Clone)]
pub struct PcaModel {
    mean: Vec<f64>,
    scale: Vec<f64>,
    components: Vec<Vec<f64>>,
    explained: Vec<f64>,
    residual_rank: usize,
}

/// Which single component the passive baselines score against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMode {
    /// First (highest-variance) component.
    First,
    /// Last (lowest-variance) component.
    Last,
}

/// Share of total variance the retained components must cover when scoring
/// outlierness by reconstruction residual.
const RESIDUAL_VARIANCE_SHARE: f64 = 0.9;

pub fn fit_pca<S: AsRef<[f64]>>(samples: &[S]) -> Result<PcaModel, VizError> {
    let m = samples.len();
    let n = samples.first().map_or(0, |s| s.as_ref().len());
    if n == 0 {
        return Err(VizError::EmptyInput);
    }
    if m < n + 1 {
        return Err(VizError::TooFewSamples {
            need: n + 1,
            got: m,
            dims: n,
        });
    }
    for s in samples {
        let s = s.as_ref();
        if s.len() != n {
            return Err(VizError::DimensionMismatch { a: n, b: s.len() });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(VizError::NonFinite);
        }
    }

    let mut mean = vec![0.0; n];
    for s in samples {
        for (acc, v) in mean.iter_mut().zip(s.as_ref()) {
            *acc += v;
        }
    }
    for acc in &mut mean {
        *acc /= m as f64;
    }

    let mut scale = vec![0.0; n];
    for s in samples {
        for ((acc, v), mu) in scale.iter_mut().zip(s.as_ref()).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    for (j, acc) in scale.iter_mut().enumerate() {
        let std = (*acc / (m - 1) as f64).sqrt();
        if std > 0.0 {
            *acc = std;
        } else {
            log::warn!("feature {j} is constant; substituting unit scale");
            *acc = 1.0;
        }
    }

    let standardized: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            s.as_ref()
                .iter()
                .zip(&mean)
                .zip(&scale)
                .map(|((v, mu), sd)| (v - mu) / sd)
                .collect()
        })
        .collect();

    let mut cov = DMatrix::zeros(n, n);
    for z in &standardized {
        for i in 0..n {
            for j in i..n {
                cov[(i, j)] += z[i] * z[j];
            }
        }
    }
    let denom = (m - 1) as f64;
    for i in 0..n {
        for j in i..n {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let eig = cov.symmetric_eigen();
    let eigenvalue = |i: usize| -> f64 { eig.eigenvalues[i] };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigenvalue(b).total_cmp(&eigenvalue(a)));

    let mut components = Vec::with_capacity(n);
    let mut explained = Vec::with_capacity(n);
    for &idx in &order {
        explained.push(eigenvalue(idx).max(0.0));
        let col = eig.eigenvectors.column(idx);
        let mut comp: Vec<f64> = col.iter().copied().collect();
        let lead = comp
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.abs().total_cmp(&b.abs()))
            .map(|(i, _)| i)
            .expect("component is nonempty");
        if comp[lead] < 0.0 {
            for v in &mut comp {
                *v = -*v;
            }
        }
        components.push(comp);
    }

    let total: f64 = explained.iter().sum();
    let residual_rank = if total > 0.0 {
        let mut cumulative = 0.0;
        let mut rank = n;
        for (i, ev) in explained.iter().enumerate() {
            cumulative += ev;
            if cumulative >= RESIDUAL_VARIANCE_SHARE * total {
                rank = i + 1;
                break;
            }
        }
        rank
    } else {
        n
    };

    Ok(PcaModel {
        mean,
        scale,
        components,
        explained,
        residual_rank,
    })
}

impl PcaModel {
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// Components in descending explained-variance order, one row each.
    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// Eigenvalues of the standardized covariance, non-increasing.
    pub fn explained_variance(&self) -> &[f64] {
        &self.explained
    }

    /// Number of leading components used for the reconstruction residual.
    pub fn residual_rank(&self) -> usize {
        self.residual_rank
    }

    fn standardized(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(
            x.len(),
            self.n_features(),
            "input has {} features, model expects {}",
            x.len(),
            self.n_features()
        );
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, mu), sd)| (v - mu) / sd)
            .collect()
    }

    /// Coordinates of each sample on the first `dims` components.
    pub fn project<S: AsRef<[f64]>>(
        &self,
        samples: &[S],
        dims: usize,
    ) -> Result<Vec<Vec<f64>>, VizError> {
        if dims > self.n_features() {
            return Err(VizError::DimsOutOfRange {
                requested: dims,
                available: self.n_features(),
            });
        }
        let mut out = Vec::with_capacity(samples.len());
        for s in samples {
            let s = s.as_ref();
            if s.len() != self.n_features() {
                return Err(VizError::DimensionMismatch {
                    a: self.n_features(),
                    b: s.len(),
                });
            }
            let z = self.standardized(s);
            out.push(
                self.components[..dims]
                    .iter()
                    .map(|c| dot(&z, c))
                    .collect(),
            );
        }
        Ok(out)
    }

    /// Maps component coordinates back to the original feature space.
    /// Inverse of [`PcaModel::project`] when all components are used.
    pub fn reconstruct(&self, coords: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, VizError> {
        let n = self.n_features();
        let mut out = Vec::with_capacity(coords.len());
        for y in coords {
            if y.len() > n {
                return Err(VizError::DimsOutOfRange {
                    requested: y.len(),
                    available: n,
                });
            }
            let mut z = vec![0.0; n];
            for (coef, comp) in y.iter().zip(&self.components) {
                for (zv, cv) in z.iter_mut().zip(comp) {
                    *zv += coef * cv;
                }
            }
            out.push(
                z.iter()
                    .zip(&self.mean)
                    .zip(&self.scale)
                    .map(|((zv, mu), sd)| zv * sd + mu)
                    .collect(),
            );
        }
        Ok(out)
    }

    /// Squared reconstruction residual after keeping the leading components
    /// that cover 90% of the variance. Large values mean the point does not
    /// follow the correlation structure of the fitted data.
    pub fn reconstruction_residual(&self, x: &[f64]) -> f64 {
        let z = self.standardized(x);
        let mut reconstructed = vec![0.0; z.len()];
        for comp in &self.components[..self.residual_rank] {
            let coef = dot(&z, comp);
            for (r, c) in reconstructed.iter_mut().zip(comp) {
                *r += coef * c;
            }
        }
        z.iter()
            .zip(&reconstructed)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Absolute standardized projection onto the first or last component.
    pub fn baseline_score(&self, x: &[f64], mode: BaselineMode) -> f64 {
        let z = self.standardized(x);
        let comp = match mode {
            BaselineMode::First => self.components.first(),
            BaselineMode::Last => self.components.last(),
        };
        dot(&z, comp.expect("fitted model has components")).abs()
    }
}

impl OutlierScorer for PcaModel {
    fn outlierness(&self, features: &[f64]) -> f64 {
        self.reconstruction_residual(features)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_samples(m: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
            .collect()
    }

    #[test]
    fn constant_feature_leaves_the_varying_axis_first() {
        let samples: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, 5.0]).collect();
        let model = fit_pca(&samples).unwrap();
        assert_eq!(model.scale()[1], 1.0);
        let pc1 = &model.components()[0];
        assert!(pc1[0].abs() > 0.99, "PC1 = {pc1:?}");
        assert!(pc1[0] > 0.0, "orientation must be positive");
        let ev = model.explained_variance();
        assert!(ev[0] > ev[1]);
    }

    #[test]
    fn correlated_pair_mixes_axes_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<Vec<f64>> = (0..500)
            .map(|_| {
                let x: f64 = rng.sample(StandardNormal);
                let noise: f64 = rng.sample(StandardNormal);
                vec![x, x + 0.1 * noise]
            })
            .collect();
        let model = fit_pca(&samples).unwrap();
        let pc1 = &model.components()[0];
        let target = std::f64::consts::FRAC_1_SQRT_2;
        assert!((pc1[0] - target).abs() < 0.05, "PC1 = {pc1:?}");
        assert!((pc1[1] - target).abs() < 0.05, "PC1 = {pc1:?}");
    }

    #[test]
    fn components_are_orthonormal_and_variances_sorted() {
        let model = fit_pca(&random_samples(200, 8, 11)).unwrap();
        let comps = model.components();
        for i in 0..comps.len() {
            for j in 0..comps.len() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (dot(&comps[i], &comps[j]) - expected).abs() < 1e-9,
                    "component pair ({i}, {j}) not orthonormal"
                );
            }
        }
        let ev = model.explained_variance();
        assert!(ev.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn full_rank_projection_reconstructs_the_inputs() {
        let samples = random_samples(60, 5, 3);
        let model = fit_pca(&samples).unwrap();
        let coords = model.project(&samples, 5).unwrap();
        let back = model.reconstruct(&coords).unwrap();
        for (orig, rec) in samples.iter().zip(&back) {
            for (a, b) in orig.iter().zip(rec) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn full_rank_projection_preserves_standardized_distances() {
        let samples = random_samples(50, 4, 21);
        let model = fit_pca(&samples).unwrap();
        let coords = model.project(&samples, 4).unwrap();
        let standardized: Vec<Vec<f64>> =
            samples.iter().map(|s| model.standardized(s)).collect();
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
        };
        for i in 0..10 {
            for j in (i + 1)..10 {
                let original = dist(&standardized[i], &standardized[j]);
                let projected = dist(&coords[i], &coords[j]);
                assert!((original - projected).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn projection_dimension_bounds() {
        let samples = random_samples(30, 3, 5);
        let model = fit_pca(&samples).unwrap();
        let empty = model.project(&samples, 0).unwrap();
        assert!(empty.iter().all(|row| row.is_empty()));
        assert!(matches!(
            model.project(&samples, 4),
            Err(VizError::DimsOutOfRange { requested: 4, available: 3 })
        ));
        assert!(matches!(
            fit_pca(&random_samples(3, 3, 5)),
            Err(VizError::TooFewSamples { need: 4, got: 3, .. })
        ));
    }

    #[test]
    fn baseline_scores_center_symmetric_and_rank_correct() {
        let samples = random_samples(80, 4, 13);
        let model = fit_pca(&samples).unwrap();
        let mean = model.mean().to_vec();
        assert!(model.baseline_score(&mean, BaselineMode::First) < 1e-12);
        assert!(model.baseline_score(&mean, BaselineMode::Last) < 1e-12);

        let offset: Vec<f64> = mean.iter().map(|v| v + 1.0).collect();
        let mirrored: Vec<f64> = mean.iter().map(|v| v - 1.0).collect();
        for mode in [BaselineMode::First, BaselineMode::Last] {
            let plus = model.baseline_score(&offset, mode);
            let minus = model.baseline_score(&mirrored, mode);
            assert!((plus - minus).abs() < 1e-12);
        }

        // Ranking by baseline score must agree with sorting raw |projection|.
        let probes = random_samples(20, 4, 14);
        let scored: Vec<f64> = probes
            .iter()
            .map(|p| model.baseline_score(p, BaselineMode::First))
            .collect();
        let manual: Vec<f64> = probes
            .iter()
            .map(|p| dot(&model.standardized(p), &model.components()[0]).abs())
            .collect();
        let order = |values: &[f64]| {
            let mut idx: Vec<usize> = (0..values.len()).collect();
            idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
            idx
        };
        assert_eq!(order(&scored), order(&manual));
    }

    #[test]
    fn residual_flags_points_off_the_correlation_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let samples: Vec<Vec<f64>> = (0..300)
            .map(|_| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                let eps = 0.01;
                let n1: f64 = rng.sample(StandardNormal);
                let n2: f64 = rng.sample(StandardNormal);
                let n3: f64 = rng.sample(StandardNormal);
                vec![
                    a,
                    b,
                    a + b + eps * n1,
                    a - b + eps * n2,
                    2.0 * a + eps * n3,
                ]
            })
            .collect();
        let model = fit_pca(&samples).unwrap();
        assert!(model.residual_rank() < 5, "rank {}", model.residual_rank());

        let conforming = vec![1.0, 0.5, 1.5, 0.5, 2.0];
        let breaker = vec![1.0, 0.5, -1.5, -0.5, -2.0];
        let low = model.reconstruction_residual(&conforming);
        let high = model.reconstruction_residual(&breaker);
        assert!(
            high > 10.0 * low,
            "breaker {high} should far exceed conforming {low}"
        );

        let scorer: &dyn OutlierScorer = &model;
        assert!((scorer.outlierness(&breaker) - high).abs() < 1e-12);
    }
}
