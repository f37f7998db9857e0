//! CART-style decision trees with entropy or Gini splitting.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{prepare, Criterion, FeatureSubsample, ModelError, Predictor, TreeParams};
use crate::features::SparseVector;
use crate::scalar::Scalar;

fn check_counts(counts: &[usize]) -> Result<usize, ModelError> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(ModelError::AllZeroCounts);
    }
    Ok(total)
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(counts: &[usize]) -> Result<f64, ModelError> {
    let total = check_counts(counts)? as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0))
}

/// Gini impurity `1 - sum p_i^2`.
pub fn gini(counts: &[usize]) -> Result<f64, ModelError> {
    let total = check_counts(counts)? as f64;
    let sq: f64 = counts.iter().map(|&c| (c as f64 / total).powi(2)).sum();
    Ok((1.0 - sq).max(0.0))
}

fn impurity(criterion: Criterion, counts: &[usize]) -> Result<f64, ModelError> {
    match criterion {
        Criterion::Gini => gini(counts),
        Criterion::Entropy => entropy(counts),
    }
}

/// Entropy of `parent` minus the size-weighted entropy of `children`.
/// Empty children contribute nothing.
pub fn info_gain(parent: &[usize], children: &[&[usize]]) -> Result<f64, ModelError> {
    impurity_decrease(Criterion::Entropy, parent, children)
}

fn impurity_decrease(
    criterion: Criterion,
    parent: &[usize],
    children: &[&[usize]],
) -> Result<f64, ModelError> {
    let total = check_counts(parent)? as f64;
    let mut after = 0.0;
    for child in children {
        let size: usize = child.iter().sum();
        if size > 0 {
            after += size as f64 / total * impurity(criterion, child)?;
        }
    }
    Ok(impurity(criterion, parent)? - after)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "")]
pub enum TreeNode<F: Scalar> {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
        /// Impurity decrease achieved by this split.
        gain: f64,
    },
    Leaf {
        class: usize,
        counts: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DecisionTree<F: Scalar> {
    classes: Vec<String>,
    dimension: usize,
    params: TreeParams,
    /// Arena; the root is node 0.
    nodes: Vec<TreeNode<F>>,
}

impl<F: Scalar> DecisionTree<F> {
    pub fn fit<S: AsRef<str>>(
        x: &[SparseVector<F>],
        y: &[S],
        params: &TreeParams,
    ) -> Result<Self, ModelError> {
        let (classes, labels, dimension) = prepare(x, y)?;
        let samples: Vec<usize> = (0..x.len()).collect();
        let mut no_rng = NoSampling;
        Ok(Self::grow(
            x,
            &labels,
            classes,
            dimension,
            samples,
            params,
            &mut no_rng,
        ))
    }

    /// Builds a tree over `samples` (indices into `x`, repeats allowed).
    pub(crate) fn grow<R: FeatureSampler>(
        x: &[SparseVector<F>],
        labels: &[usize],
        classes: Vec<String>,
        dimension: usize,
        samples: Vec<usize>,
        params: &TreeParams,
        sampler: &mut R,
    ) -> Self {
        let k = classes.len();
        let mut nodes: Vec<TreeNode<F>> = vec![placeholder()];
        let mut stack = vec![(0usize, samples, 0usize)];

        while let Some((slot, samples, depth)) = stack.pop() {
            let counts = class_counts(labels, &samples, k);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let split = if pure || depth >= params.max_depth || samples.len() < params.min_samples_split {
                None
            } else {
                best_split(x, labels, &samples, &counts, params.criterion, dimension, sampler)
            };
            match split {
                None => {
                    nodes[slot] = TreeNode::Leaf {
                        class: majority(&counts),
                        counts,
                    };
                }
                Some(s) => {
                    let (left, right): (Vec<usize>, Vec<usize>) = samples
                        .iter()
                        .partition(|&&i| x[i].get(s.feature) <= s.threshold);
                    let left_slot = nodes.len();
                    nodes.push(placeholder());
                    nodes.push(placeholder());
                    nodes[slot] = TreeNode::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left: left_slot,
                        right: left_slot + 1,
                        gain: s.gain,
                    };
                    stack.push((left_slot + 1, right, depth + 1));
                    stack.push((left_slot, left, depth + 1));
                }
            }
        }

        DecisionTree {
            classes,
            dimension,
            params: params.clone(),
            nodes,
        }
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn nodes(&self) -> &[TreeNode<F>] {
        &self.nodes
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut deepest = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            deepest = deepest.max(d);
            if let TreeNode::Split { left, right, .. } = self.nodes[i] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        deepest
    }

    /// Class counts of the leaf that `x` falls into.
    pub fn leaf(&self, x: &SparseVector<F>) -> Result<(usize, &[usize]), ModelError> {
        self.check_dimension(x)?;
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x.get(*feature) <= *threshold { *left } else { *right },
                TreeNode::Leaf { class, counts } => return Ok((*class, counts)),
            }
        }
    }
}

impl<F: Scalar> Predictor<F> for DecisionTree<F> {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn predict_index(&self, x: &SparseVector<F>) -> Result<usize, ModelError> {
        Ok(self.leaf(x)?.0)
    }

    /// Class proportions of the reached leaf.
    fn predict_scores(&self, x: &SparseVector<F>) -> Result<Vec<F>, ModelError> {
        let (_, counts) = self.leaf(x)?;
        let total = F::from_count(counts.iter().sum());
        Ok(counts.iter().map(|&c| F::from_count(c) / total).collect())
    }
}

fn placeholder<F: Scalar>() -> TreeNode<F> {
    TreeNode::Leaf {
        class: 0,
        counts: Vec::new(),
    }
}

fn class_counts(labels: &[usize], samples: &[usize], k: usize) -> Vec<usize> {
    let mut counts = vec![0; k];
    for &i in samples {
        counts[labels[i]] += 1;
    }
    counts
}

/// Most frequent class; ties go to the lower index.
fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Chooses which of the features active at a node are evaluated.
pub(crate) trait FeatureSampler {
    /// `active` is sorted; the result must be a sorted subset.
    fn choose(&mut self, active: Vec<usize>, dimension: usize) -> Vec<usize>;
}

pub(crate) struct NoSampling;

impl FeatureSampler for NoSampling {
    fn choose(&mut self, active: Vec<usize>, _dimension: usize) -> Vec<usize> {
        active
    }
}

/// Random candidate subsets for forests.
pub(crate) struct RandomSubset<'a, R: Rng> {
    pub rng: &'a mut R,
    pub mode: FeatureSubsample,
}

impl<R: Rng> FeatureSampler for RandomSubset<'_, R> {
    fn choose(&mut self, active: Vec<usize>, dimension: usize) -> Vec<usize> {
        let wanted = match self.mode {
            FeatureSubsample::All => return active,
            FeatureSubsample::Sqrt => (dimension as f64).sqrt().ceil() as usize,
            FeatureSubsample::Count(m) => m,
        }
        .max(1);
        if wanted >= active.len() {
            return active;
        }
        let mut picked: Vec<usize> = sample(self.rng, active.len(), wanted)
            .into_iter()
            .map(|j| active[j])
            .collect();
        picked.sort_unstable();
        picked
    }
}

struct SplitChoice<F> {
    feature: usize,
    threshold: F,
    gain: f64,
}

/// Best `(feature, threshold)` by impurity decrease. Zero-gain splits are
/// allowed; ties keep the lowest feature, then the lowest threshold.
fn best_split<F: Scalar, R: FeatureSampler>(
    x: &[SparseVector<F>],
    labels: &[usize],
    samples: &[usize],
    counts: &[usize],
    criterion: Criterion,
    dimension: usize,
    sampler: &mut R,
) -> Option<SplitChoice<F>> {
    let k = counts.len();
    // (feature, value, class) for every stored entry of every sample
    let mut cells: Vec<(usize, F, usize)> = samples
        .iter()
        .flat_map(|&i| x[i].entries().iter().map(move |&(j, v)| (j, v, labels[i])))
        .collect();
    cells.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    });

    let mut groups: Vec<(usize, std::ops::Range<usize>)> = Vec::new();
    let mut start = 0;
    while start < cells.len() {
        let f = cells[start].0;
        let end = start + cells[start..].iter().take_while(|c| c.0 == f).count();
        groups.push((f, start..end));
        start = end;
    }
    let active: Vec<usize> = groups.iter().map(|g| g.0).collect();
    let chosen = sampler.choose(active, dimension);

    let n = samples.len();
    let parent_impurity = impurity(criterion, counts).ok()?;
    let mut best: Option<SplitChoice<F>> = None;
    let mut gi = 0;
    for f in chosen {
        while groups[gi].0 != f {
            gi += 1;
        }
        let nonzero = &cells[groups[gi].1.clone()];

        // Distinct values in ascending order with their class counts; the
        // implicit zeros form one more group.
        let mut zero_counts = counts.to_vec();
        for c in nonzero {
            zero_counts[c.2] -= 1;
        }
        let zeros = n - nonzero.len();
        let mut values: Vec<(F, Vec<usize>)> = Vec::new();
        let mut zero_done = zeros == 0;
        for c in nonzero {
            if !zero_done && c.1 > F::zero() {
                values.push((F::zero(), zero_counts.clone()));
                zero_done = true;
            }
            match values.last_mut() {
                Some((v, cc)) if *v == c.1 => cc[c.2] += 1,
                _ => {
                    let mut cc = vec![0; k];
                    cc[c.2] = 1;
                    values.push((c.1, cc));
                }
            }
        }
        if !zero_done {
            values.push((F::zero(), zero_counts));
        }

        let mut left = vec![0usize; k];
        for w in values.windows(2) {
            for (l, &c) in left.iter_mut().zip(&w[0].1) {
                *l += c;
            }
            let right: Vec<usize> = counts.iter().zip(&left).map(|(&t, &l)| t - l).collect();
            let left_n: usize = left.iter().sum();
            let right_n = n - left_n;
            let after = (left_n as f64 * impurity(criterion, &left).ok()?
                + right_n as f64 * impurity(criterion, &right).ok()?)
                / n as f64;
            let gain = (parent_impurity - after).max(0.0);
            if best.as_ref().map_or(true, |b| gain > b.gain) {
                best = Some(SplitChoice {
                    feature: f,
                    threshold: midpoint(w[0].0, w[1].0),
                    gain,
                });
            }
        }
    }
    best
}

/// A threshold strictly below `hi` and at least `lo`.
fn midpoint<F: Scalar>(lo: F, hi: F) -> F {
    let mid = lo + (hi - lo) * F::lit(0.5);
    if mid < hi {
        mid
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> (Vec<SparseVector<f64>>, Vec<&'static str>) {
        (
            vec![
                SparseVector::from_dense(&[0.0, 0.0]),
                SparseVector::from_dense(&[0.0, 1.0]),
                SparseVector::from_dense(&[1.0, 0.0]),
                SparseVector::from_dense(&[1.0, 1.0]),
            ],
            vec!["a", "b", "b", "a"],
        )
    }

    fn params(depth: usize) -> TreeParams {
        TreeParams {
            criterion: Criterion::Entropy,
            max_depth: depth,
            min_samples_split: 2,
        }
    }

    #[test]
    fn impurity_examples() {
        assert_eq!(entropy(&[2, 2]).unwrap(), 1.0);
        assert_eq!(entropy(&[4, 0]).unwrap(), 0.0);
        assert_eq!(gini(&[2, 2]).unwrap(), 0.5);
        assert_eq!(info_gain(&[2, 2], &[&[2, 0], &[0, 2]]).unwrap(), 1.0);
        assert!(matches!(entropy(&[0, 0]), Err(ModelError::AllZeroCounts)));
    }

    #[test]
    fn xor_needs_depth_two() {
        let (x, y) = xor();
        let t = DecisionTree::fit(&x, &y, &params(2)).unwrap();
        for (v, l) in x.iter().zip(&y) {
            assert_eq!(t.predict(v).unwrap(), *l);
        }
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn depth_zero_is_majority_leaf() {
        let x = vec![
            SparseVector::from_dense(&[0.0]),
            SparseVector::from_dense(&[1.0]),
            SparseVector::from_dense(&[2.0]),
        ];
        let t = DecisionTree::fit(&x, &["b", "a", "b"], &params(0)).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.predict(&x[1]).unwrap(), "b");
        assert_eq!(t.predict_scores(&x[1]).unwrap(), vec![1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn negative_values_and_thresholds() {
        let x = vec![
            SparseVector::from_dense(&[-2.0]),
            SparseVector::from_dense(&[0.0]),
            SparseVector::from_dense(&[3.0]),
        ];
        let t = DecisionTree::fit(&x, &["n", "z", "p"], &params(5)).unwrap();
        assert_eq!(t.predict(&x[0]).unwrap(), "n");
        assert_eq!(t.predict(&x[1]).unwrap(), "z");
        assert_eq!(t.predict(&x[2]).unwrap(), "p");
        match &t.nodes()[0] {
            TreeNode::Split { threshold, .. } => assert!(*threshold == -1.0 || *threshold == 1.5),
            _ => panic!("root should split"),
        }
    }

    #[test]
    fn min_samples_split_stops_growth() {
        let (x, y) = xor();
        let t = DecisionTree::fit(
            &x,
            &y,
            &TreeParams {
                min_samples_split: 5,
                ..params(10)
            },
        )
        .unwrap();
        assert_eq!(t.nodes().len(), 1);
    }
}
