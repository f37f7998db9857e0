use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::RandomSubset;
use super::{argmax, prepare, DecisionTree, ForestParams, ModelError, Predictor};
use crate::features::SparseVector;
use crate::scalar::Scalar;

/// Bagged decision trees with per-split feature subsampling and majority vote.
///
/// Tree `i` draws from its own ChaCha stream `i` of the master seed, so the
/// ensemble does not depend on how trees are scheduled across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RandomForest<F: Scalar> {
    classes: Vec<String>,
    dimension: usize,
    params: ForestParams,
    trees: Vec<DecisionTree<F>>,
}

impl<F: Scalar> RandomForest<F> {
    pub fn fit<S: AsRef<str>>(
        x: &[SparseVector<F>],
        y: &[S],
        params: &ForestParams,
    ) -> Result<Self, ModelError> {
        let (classes, labels, dimension) = prepare(x, y)?;
        if params.n_trees == 0 {
            return Err(ModelError::InvalidHyperparameter(
                "a forest needs at least one tree".into(),
            ));
        }
        let n = x.len();
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(t as u64);
                let samples: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut sampler = RandomSubset {
                    rng: &mut rng,
                    mode: params.feature_subsample,
                };
                DecisionTree::grow(
                    x,
                    &labels,
                    classes.clone(),
                    dimension,
                    samples,
                    &params.tree,
                    &mut sampler,
                )
            })
            .collect();
        Ok(RandomForest {
            classes,
            dimension,
            params: params.clone(),
            trees,
        })
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn trees(&self) -> &[DecisionTree<F>] {
        &self.trees
    }

    fn votes(&self, x: &SparseVector<F>) -> Result<Vec<usize>, ModelError> {
        self.check_dimension(x)?;
        let mut votes = vec![0usize; self.classes.len()];
        for tree in &self.trees {
            votes[tree.predict_index(x)?] += 1;
        }
        Ok(votes)
    }
}

impl<F: Scalar> Predictor<F> for RandomForest<F> {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    /// Majority vote; ties go to the earlier class.
    fn predict_index(&self, x: &SparseVector<F>) -> Result<usize, ModelError> {
        let votes: Vec<F> = self.votes(x)?.into_iter().map(F::from_count).collect();
        Ok(argmax(&votes))
    }

    /// Fraction of trees voting for each class.
    fn predict_scores(&self, x: &SparseVector<F>) -> Result<Vec<F>, ModelError> {
        let total = F::from_count(self.trees.len());
        Ok(self
            .votes(x)?
            .into_iter()
            .map(|v| F::from_count(v) / total)
            .collect())
    }
}
