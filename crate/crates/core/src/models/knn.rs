use serde::{Deserialize, Serialize};

use super::{prepare, KnnParams, Metric, ModelError, Predictor, Weighting};
use crate::features::SparseVector;
use crate::scalar::Scalar;

/// Added to distances before inverting them under distance weighting.
pub const DISTANCE_EPSILON: f64 = 1e-9;

/// k-nearest-neighbour classifier; the model is the stored training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Knn<F: Scalar> {
    classes: Vec<String>,
    dimension: usize,
    points: Vec<SparseVector<F>>,
    labels: Vec<usize>,
    params: KnnParams,
}

impl<F: Scalar> Knn<F> {
    pub fn fit<S: AsRef<str>>(
        x: &[SparseVector<F>],
        y: &[S],
        params: KnnParams,
    ) -> Result<Self, ModelError> {
        let (classes, labels, dimension) = prepare(x, y)?;
        if params.k == 0 || params.k > x.len() {
            return Err(ModelError::InvalidHyperparameter(format!(
                "k = {} must lie in [1, {}]",
                params.k,
                x.len()
            )));
        }
        Ok(Knn {
            classes,
            dimension,
            points: x.to_vec(),
            labels,
            params,
        })
    }

    pub fn params(&self) -> &KnnParams {
        &self.params
    }

    fn distance(&self, a: &SparseVector<F>, b: &SparseVector<F>) -> F {
        match self.params.metric {
            Metric::Euclidean => a.euclidean_distance(b),
            Metric::Manhattan => a.manhattan_distance(b),
        }
    }

    /// The k nearest training points as `(distance, index)`, nearest first;
    /// equal distances keep training order.
    pub fn neighbors(&self, x: &SparseVector<F>) -> Result<Vec<(F, usize)>, ModelError> {
        self.check_dimension(x)?;
        let mut all: Vec<(F, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (self.distance(x, p), i))
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
        all.truncate(self.params.k);
        Ok(all)
    }

    fn votes(&self, neighbors: &[(F, usize)]) -> Vec<F> {
        let eps = F::lit(DISTANCE_EPSILON);
        let mut votes = vec![F::zero(); self.classes.len()];
        for &(d, i) in neighbors {
            votes[self.labels[i]] += match self.params.weighting {
                Weighting::Uniform => F::one(),
                Weighting::Distance => F::one() / (d + eps),
            };
        }
        votes
    }
}

impl<F: Scalar> Predictor<F> for Knn<F> {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    /// Highest vote wins; among tied classes the one owning the nearest neighbour.
    fn predict_index(&self, x: &SparseVector<F>) -> Result<usize, ModelError> {
        let neighbors = self.neighbors(x)?;
        let votes = self.votes(&neighbors);
        let best = votes.iter().copied().fold(F::neg_infinity(), F::max);
        let winner = neighbors
            .iter()
            .map(|&(_, i)| self.labels[i])
            .find(|&c| votes[c] == best)
            .expect("the best class has at least one neighbour");
        Ok(winner)
    }

    /// Vote fractions.
    fn predict_scores(&self, x: &SparseVector<F>) -> Result<Vec<F>, ModelError> {
        let votes = self.votes(&self.neighbors(x)?);
        let total: F = votes.iter().copied().sum();
        Ok(votes.into_iter().map(|v| v / total).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Vec<SparseVector<f64>>, Vec<&'static str>) {
        (
            vec![
                SparseVector::from_dense(&[1.0, 0.0]),
                SparseVector::from_dense(&[0.0, 1.0]),
                SparseVector::from_dense(&[1.0, 1.0]),
            ],
            vec!["A", "B", "A"],
        )
    }

    fn params(k: usize, weighting: Weighting, metric: Metric) -> KnnParams {
        KnnParams {
            k,
            weighting,
            metric,
        }
    }

    #[test]
    fn enumerated_examples() {
        let (x, y) = data();
        let q = SparseVector::from_dense(&[1.0, 0.1]);
        // distances: 0.1, sqrt(1 + 0.81), 0.9
        let m = Knn::fit(&x, &y, params(1, Weighting::Uniform, Metric::Euclidean)).unwrap();
        assert_eq!(m.predict(&q).unwrap(), "A");
        let m = Knn::fit(&x, &y, params(3, Weighting::Uniform, Metric::Euclidean)).unwrap();
        assert_eq!(m.predict(&q).unwrap(), "A");
        let s = m.predict_scores(&q).unwrap();
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-12);
        let m = Knn::fit(&x, &y, params(1, Weighting::Distance, Metric::Manhattan)).unwrap();
        assert_eq!(m.predict(&x[1]).unwrap(), "B");
    }

    #[test]
    fn tie_goes_to_nearest_neighbour_class() {
        let x = vec![
            SparseVector::<f64>::from_dense(&[0.0]),
            SparseVector::from_dense(&[3.0]),
        ];
        let y = ["A", "B"];
        let m = Knn::fit(&x, &y, params(2, Weighting::Uniform, Metric::Euclidean)).unwrap();
        // 1:1 vote; B is nearer to 2.0
        assert_eq!(m.predict(&SparseVector::from_dense(&[2.0])).unwrap(), "B");
        assert_eq!(m.predict(&SparseVector::from_dense(&[1.0])).unwrap(), "A");
    }

    #[test]
    fn k_out_of_range() {
        let (x, y) = data();
        assert!(Knn::fit(&x, &y, params(4, Weighting::Uniform, Metric::Euclidean)).is_err());
        assert!(Knn::fit(&x, &y, params(0, Weighting::Uniform, Metric::Euclidean)).is_err());
    }
}
