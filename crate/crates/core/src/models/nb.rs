use serde::{Deserialize, Serialize};

use super::{argmax, prepare, ModelError, Predictor};
use crate::features::SparseVector;
use crate::scalar::Scalar;

/// Multinomial naive Bayes with additive smoothing.
///
/// Priors are class frequencies. The likelihood of term `j` under class `k`
/// is `(count_jk + lambda) / (m_k + n * lambda)`, where `m_k` is the total
/// term mass of class `k` and `n` the vocabulary size. Both are kept as logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NaiveBayes<F: Scalar> {
    classes: Vec<String>,
    log_priors: Vec<F>,
    /// class x term
    log_likelihoods: Vec<Vec<F>>,
    lambda: F,
    class_totals: Vec<F>,
    n_features: usize,
}

impl<F: Scalar> NaiveBayes<F> {
    pub fn fit<S: AsRef<str>>(
        x: &[SparseVector<F>],
        y: &[S],
        lambda: F,
    ) -> Result<Self, ModelError> {
        let (classes, labels, n_features) = prepare(x, y)?;
        if !(lambda > F::zero()) {
            return Err(ModelError::InvalidHyperparameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if x.iter().flat_map(|v| v.entries()).any(|&(_, v)| v < F::zero()) {
            return Err(ModelError::InvalidFeatures(
                "multinomial naive Bayes needs non-negative feature values".into(),
            ));
        }

        let k = classes.len();
        let mut doc_counts = vec![0usize; k];
        let mut term_counts = vec![vec![F::zero(); n_features]; k];
        for (row, &c) in x.iter().zip(&labels) {
            doc_counts[c] += 1;
            row.add_scaled_to(F::one(), &mut term_counts[c]);
        }

        let n_docs = F::from_count(x.len());
        let log_priors = doc_counts
            .iter()
            .map(|&d| (F::from_count(d) / n_docs).ln())
            .collect();
        let n = F::from_count(n_features);
        let class_totals: Vec<F> = term_counts.iter().map(|t| t.iter().copied().sum()).collect();
        let log_likelihoods = term_counts
            .iter()
            .zip(&class_totals)
            .map(|(counts, &m_k)| {
                let denom = (m_k + n * lambda).ln();
                counts.iter().map(|&c| (c + lambda).ln() - denom).collect()
            })
            .collect();

        Ok(NaiveBayes {
            classes,
            log_priors,
            log_likelihoods,
            lambda,
            class_totals,
            n_features,
        })
    }

    pub fn lambda(&self) -> F {
        self.lambda
    }

    pub fn log_priors(&self) -> &[F] {
        &self.log_priors
    }

    /// Log-likelihood of every term under class `class`.
    pub fn log_likelihoods(&self, class: usize) -> &[F] {
        &self.log_likelihoods[class]
    }

    pub fn class_totals(&self) -> &[F] {
        &self.class_totals
    }

    /// `log P(C_k) + sum_j x_j log P(term j | C_k)` for every class.
    pub fn joint_log_likelihood(&self, x: &SparseVector<F>) -> Result<Vec<F>, ModelError> {
        self.check_dimension(x)?;
        Ok(self
            .log_priors
            .iter()
            .zip(&self.log_likelihoods)
            .map(|(&prior, lik)| prior + x.dot_dense(lik))
            .collect())
    }
}

impl<F: Scalar> Predictor<F> for NaiveBayes<F> {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn dimension(&self) -> usize {
        self.n_features
    }

    fn predict_index(&self, x: &SparseVector<F>) -> Result<usize, ModelError> {
        Ok(argmax(&self.joint_log_likelihood(x)?))
    }

    /// Posterior probabilities.
    fn predict_scores(&self, x: &SparseVector<F>) -> Result<Vec<F>, ModelError> {
        let jll = self.joint_log_likelihood(x)?;
        let max = jll.iter().copied().fold(F::neg_infinity(), F::max);
        let exps: Vec<F> = jll.iter().map(|&v| (v - max).exp()).collect();
        let total: F = exps.iter().copied().sum();
        Ok(exps.into_iter().map(|e| e / total).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // vocabulary [bad, good]
    fn toy() -> (Vec<SparseVector<f64>>, Vec<&'static str>) {
        (
            vec![
                SparseVector::from_dense(&[2.0, 0.0]),
                SparseVector::from_dense(&[0.0, 1.0]),
            ],
            vec!["OFF", "NOT"],
        )
    }

    #[test]
    fn hand_enumerated_posterior() {
        let (x, y) = toy();
        let nb = NaiveBayes::fit(&x, &y, 1.0).unwrap();
        let q = SparseVector::from_dense(&[1.0, 0.0]);
        assert_eq!(nb.predict(&q).unwrap(), "OFF");
        // OFF: 1/2 * (2+1)/(2+2) = 3/8; NOT: 1/2 * (0+1)/(1+2) = 1/6
        let s = nb.predict_scores(&q).unwrap();
        let (off, not) = (3.0 / 8.0, 1.0 / 6.0);
        let off_idx = nb.classes().iter().position(|c| c == "OFF").unwrap();
        assert!((s[off_idx] - off / (off + not)).abs() < 1e-12);
    }

    #[test]
    fn likelihoods_normalized() {
        let (x, y) = toy();
        for lambda in [0.7, 1.0, 3.0] {
            let nb = NaiveBayes::fit(&x, &y, lambda).unwrap();
            let prior_sum: f64 = nb.log_priors().iter().map(|p| p.exp()).sum();
            assert!((prior_sum - 1.0).abs() < 1e-12);
            for k in 0..2 {
                let s: f64 = nb.log_likelihoods(k).iter().map(|l| l.exp()).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_class() {
        let x = vec![SparseVector::<f64>::from_dense(&[1.0, 3.0])];
        let nb = NaiveBayes::fit(&x, &["NOT"], 0.7).unwrap();
        assert_eq!(nb.predict(&SparseVector::from_dense(&[0.0, 9.0])).unwrap(), "NOT");
        assert_eq!(nb.predict(&SparseVector::zeros(2)).unwrap(), "NOT");
    }

    #[test]
    fn rejects_negative_features_and_bad_lambda() {
        let x = vec![SparseVector::<f64>::from_dense(&[-1.0, 3.0])];
        assert!(matches!(
            NaiveBayes::fit(&x, &["a"], 1.0),
            Err(ModelError::InvalidFeatures(_))
        ));
        let x = vec![SparseVector::<f64>::from_dense(&[1.0, 3.0])];
        assert!(NaiveBayes::fit(&x, &["a"], 0.0).is_err());
    }
}
