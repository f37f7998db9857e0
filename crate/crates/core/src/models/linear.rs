//! L2-regularized logistic regression and linear support vector classification.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, prepare, LogregParams, ModelError, Multiclass, Predictor, SvcParams};
use crate::features::SparseVector;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearObjective {
    Logistic,
    Hinge,
}

/// One binary decision function `z = w.x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Head<F: Scalar> {
    pub weights: Vec<F>,
    pub bias: F,
}

impl<F: Scalar> Head<F> {
    pub fn decision(&self, x: &SparseVector<F>) -> F {
        x.dot_dense(&self.weights) + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "")]
enum Heads<F: Scalar> {
    /// Only one class was seen in training.
    Constant,
    /// Positive side is `classes[1]`.
    Binary(Head<F>),
    /// Head `k` separates `classes[k]` from the rest.
    OneVsRest(Vec<Head<F>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Params {
    Logreg(LogregParams),
    Svc(SvcParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LinearModel<F: Scalar> {
    classes: Vec<String>,
    dimension: usize,
    objective: LinearObjective,
    params: Params,
    heads: Heads<F>,
}

impl<F: Scalar> LinearModel<F> {
    pub fn fit_logreg<S: AsRef<str>>(
        x: &[SparseVector<F>],
        y: &[S],
        params: &LogregParams,
    ) -> Result<Self, ModelError> {
        if !(params.c > 0.0) || !(params.tol > 0.0) {
            return Err(ModelError::InvalidHyperparameter(
                "C and tol must be positive".into(),
            ));
        }
        let c = F::lit(params.c);
        let tol = F::lit(params.tol);
        Self::fit_with(
            x,
            y,
            params.multiclass,
            LinearObjective::Logistic,
            Params::Logreg(params.clone()),
            |signs| newton_cg(x, signs, c, params.max_iter, tol),
        )
    }

    pub fn fit_svc<S: AsRef<str>>(
        x: &[SparseVector<F>],
        y: &[S],
        params: &SvcParams,
    ) -> Result<Self, ModelError> {
        if !(params.c > 0.0) || params.epochs == 0 {
            return Err(ModelError::InvalidHyperparameter(
                "C must be positive and epochs at least 1".into(),
            ));
        }
        let c = F::lit(params.c);
        Self::fit_with(
            x,
            y,
            params.multiclass,
            LinearObjective::Hinge,
            Params::Svc(params.clone()),
            |signs| hinge_sgd(x, signs, c, params.epochs, params.seed),
        )
    }

    fn fit_with<S, T>(
        x: &[SparseVector<F>],
        y: &[S],
        multiclass: Multiclass,
        objective: LinearObjective,
        params: Params,
        train: T,
    ) -> Result<Self, ModelError>
    where
        S: AsRef<str>,
        T: Fn(&[F]) -> Head<F> + Sync,
    {
        let (classes, labels, dimension) = prepare(x, y)?;
        let k = classes.len();
        if multiclass == Multiclass::BinaryOnly && k != 2 {
            return Err(ModelError::NonBinaryLabels(k));
        }
        let signs_for = |positive: usize| -> Vec<F> {
            labels
                .iter()
                .map(|&l| if l == positive { F::one() } else { -F::one() })
                .collect()
        };
        let heads = if k == 1 {
            Heads::Constant
        } else if k == 2 && multiclass != Multiclass::OneVsRest {
            Heads::Binary(train(&signs_for(1)))
        } else {
            Heads::OneVsRest((0..k).into_par_iter().map(|c| train(&signs_for(c))).collect())
        };
        Ok(LinearModel {
            classes,
            dimension,
            objective,
            params,
            heads,
        })
    }

    pub fn objective(&self) -> LinearObjective {
        self.objective
    }

    pub fn logreg_params(&self) -> Option<&LogregParams> {
        match &self.params {
            Params::Logreg(p) => Some(p),
            Params::Svc(_) => None,
        }
    }

    pub fn svc_params(&self) -> Option<&SvcParams> {
        match &self.params {
            Params::Svc(p) => Some(p),
            Params::Logreg(_) => None,
        }
    }

    /// The trained decision functions: none, one (binary) or one per class.
    pub fn heads(&self) -> &[Head<F>] {
        match &self.heads {
            Heads::Constant => &[],
            Heads::Binary(h) => std::slice::from_ref(h),
            Heads::OneVsRest(hs) => hs,
        }
    }

    /// Raw decision values of every head.
    pub fn decision_values(&self, x: &SparseVector<F>) -> Result<Vec<F>, ModelError> {
        self.check_dimension(x)?;
        Ok(self.heads().iter().map(|h| h.decision(x)).collect())
    }
}

impl<F: Scalar> Predictor<F> for LinearModel<F> {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn predict_index(&self, x: &SparseVector<F>) -> Result<usize, ModelError> {
        let z = self.decision_values(x)?;
        Ok(match &self.heads {
            Heads::Constant => 0,
            Heads::Binary(_) => usize::from(z[0] > F::zero()),
            Heads::OneVsRest(_) => argmax(&z),
        })
    }

    /// Probabilities for logistic regression (normalized sigmoids under
    /// one-vs-rest), signed margins for SVC.
    fn predict_scores(&self, x: &SparseVector<F>) -> Result<Vec<F>, ModelError> {
        let z = self.decision_values(x)?;
        Ok(match (&self.heads, self.objective) {
            (Heads::Constant, _) => vec![F::one()],
            (Heads::Binary(_), LinearObjective::Logistic) => {
                let p = sigmoid(z[0]);
                vec![F::one() - p, p]
            }
            (Heads::Binary(_), LinearObjective::Hinge) => vec![-z[0], z[0]],
            (Heads::OneVsRest(_), LinearObjective::Logistic) => {
                let p: Vec<F> = z.iter().map(|&v| sigmoid(v)).collect();
                let total: F = p.iter().copied().sum();
                p.into_iter().map(|v| v / total).collect()
            }
            (Heads::OneVsRest(_), LinearObjective::Hinge) => z,
        })
    }
}

/// `1 / (1 + exp(-t))` without overflow.
pub fn sigmoid<F: Scalar>(t: F) -> F {
    if t >= F::zero() {
        F::one() / (F::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (F::one() + e)
    }
}

/// `ln(1 + exp(t))` without overflow.
fn softplus<F: Scalar>(t: F) -> F {
    if t > F::zero() {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&p, &q)| p * q).sum()
}

/// Mean log-loss plus `||w||^2 / (2C)` over labels in {-1, +1}.
/// `theta` holds the weights followed by the unpenalized bias.
struct Logistic<'a, F: Scalar> {
    x: &'a [SparseVector<F>],
    signs: &'a [F],
    inv_c: F,
    inv_n: F,
}

impl<F: Scalar> Logistic<'_, F> {
    fn margins(&self, theta: &[F]) -> Vec<F> {
        let (w, b) = theta.split_at(theta.len() - 1);
        self.x
            .iter()
            .zip(self.signs)
            .map(|(xi, &yi)| yi * (xi.dot_dense(w) + b[0]))
            .collect()
    }

    fn loss(&self, theta: &[F]) -> F {
        let w = &theta[..theta.len() - 1];
        let data: F = self.margins(theta).into_iter().map(|m| softplus(-m)).sum();
        data * self.inv_n + dot(w, w) * self.inv_c * F::lit(0.5)
    }

    fn loss_and_gradient(&self, theta: &[F]) -> (F, Vec<F>, Vec<F>) {
        let d = theta.len() - 1;
        let margins = self.margins(theta);
        let mut grad = vec![F::zero(); d + 1];
        let mut data = F::zero();
        for ((xi, &yi), &m) in self.x.iter().zip(self.signs).zip(&margins) {
            data += softplus(-m);
            let a = -yi * sigmoid(-m) * self.inv_n;
            xi.add_scaled_to(a, &mut grad[..d]);
            grad[d] += a;
        }
        let w = &theta[..d];
        for (g, &wj) in grad[..d].iter_mut().zip(w) {
            *g += wj * self.inv_c;
        }
        let loss = data * self.inv_n + dot(w, w) * self.inv_c * F::lit(0.5);
        (loss, grad, margins)
    }

    fn hessian_vector(&self, margins: &[F], v: &[F]) -> Vec<F> {
        let d = v.len() - 1;
        let mut out = vec![F::zero(); d + 1];
        for (xi, &m) in self.x.iter().zip(margins) {
            let curvature = sigmoid(m) * sigmoid(-m);
            let u = (xi.dot_dense(&v[..d]) + v[d]) * curvature * self.inv_n;
            xi.add_scaled_to(u, &mut out[..d]);
            out[d] += u;
        }
        for (o, &vj) in out[..d].iter_mut().zip(&v[..d]) {
            *o += vj * self.inv_c;
        }
        out
    }
}

/// Regularized logistic loss and its gradient at `theta = [w..., b]`, with
/// `y[i] == true` marking the positive class.
pub fn logistic_loss_and_gradient<F: Scalar>(
    x: &[SparseVector<F>],
    y: &[bool],
    theta: &[F],
    c: F,
) -> (F, Vec<F>) {
    let signs: Vec<F> = y.iter().map(|&p| if p { F::one() } else { -F::one() }).collect();
    let problem = Logistic {
        x,
        signs: &signs,
        inv_c: F::one() / c,
        inv_n: F::one() / F::from_count(x.len()),
    };
    let (loss, grad, _) = problem.loss_and_gradient(theta);
    (loss, grad)
}

/// `||w||^2 / 2 + C * sum_i max(0, 1 - y_i (w.x_i + b))`.
pub fn hinge_objective<F: Scalar>(
    x: &[SparseVector<F>],
    y: &[bool],
    weights: &[F],
    bias: F,
    c: F,
) -> F {
    let hinge: F = x
        .iter()
        .zip(y)
        .map(|(xi, &p)| {
            let s = if p { F::one() } else { -F::one() };
            (F::one() - s * (xi.dot_dense(weights) + bias)).max(F::zero())
        })
        .sum();
    dot(weights, weights) * F::lit(0.5) + c * hinge
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Truncated Newton iterations with conjugate-gradient inner solves and
/// backtracking line search; stops once the gradient norm drops below `tol`.
fn newton_cg<F: Scalar>(
    x: &[SparseVector<F>],
    signs: &[F],
    c: F,
    max_iter: usize,
    tol: F,
) -> Head<F> {
    let d = x[0].dimension();
    let problem = Logistic {
        x,
        signs,
        inv_c: F::one() / c,
        inv_n: F::one() / F::from_count(x.len()),
    };
    let mut theta = vec![F::zero(); d + 1];
    let max_cg = (d + 1).clamp(10, 200);
    let mut iterations = 0;

    while iterations < max_iter {
        let (loss, grad, margins) = problem.loss_and_gradient(&theta);
        let gnorm = dot(&grad, &grad).sqrt();
        if gnorm < tol {
            break;
        }
        iterations += 1;

        // Solve H p = -g approximately.
        let cg_tol = gnorm.sqrt().min(F::lit(0.5)) * gnorm;
        let mut p = vec![F::zero(); d + 1];
        let mut r: Vec<F> = grad.iter().map(|&g| -g).collect();
        let mut dir = r.clone();
        let mut rs = dot(&r, &r);
        for _ in 0..max_cg {
            if rs.sqrt() <= cg_tol {
                break;
            }
            let hd = problem.hessian_vector(&margins, &dir);
            let curv = dot(&dir, &hd);
            if !(curv > F::zero()) {
                break;
            }
            let alpha = rs / curv;
            for j in 0..=d {
                p[j] += alpha * dir[j];
                r[j] -= alpha * hd[j];
            }
            let rs_next = dot(&r, &r);
            let beta = rs_next / rs;
            rs = rs_next;
            for j in 0..=d {
                dir[j] = r[j] + beta * dir[j];
            }
        }
        if p.iter().all(|v| *v == F::zero()) {
            p = grad.iter().map(|&g| -g).collect();
        }

        let slope = dot(&grad, &p);
        let mut step = F::one();
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let candidate: Vec<F> = theta.iter().zip(&p).map(|(&t, &pj)| t + step * pj).collect();
            if problem.loss(&candidate) <= loss + F::lit(ARMIJO) * step * slope {
                theta = candidate;
                accepted = true;
                break;
            }
            step *= F::lit(0.5);
        }
        if !accepted {
            log::debug!("logreg line search stalled at gradient norm {gnorm}");
            break;
        }
    }
    log::debug!("logreg stopped after {iterations} Newton iterations");
    let bias = theta.pop().expect("theta holds the bias");
    Head {
        weights: theta,
        bias,
    }
}

/// Stochastic subgradient descent on `||w||^2 / 2 + C * sum hinge`.
///
/// Rewritten as `C n (lambda/2 ||w||^2 + mean hinge)` with `lambda = 1/(C n)`,
/// the step at update `t` is `1 / (lambda (t + t0))`. The weight vector is
/// kept as `scale * v` so shrinkage costs O(1).
fn hinge_sgd<F: Scalar>(
    x: &[SparseVector<F>],
    signs: &[F],
    c: F,
    epochs: usize,
    seed: u64,
) -> Head<F> {
    let n = x.len();
    let d = x[0].dimension();
    let lambda = F::one() / (c * F::from_count(n));
    let t0 = (F::one() / lambda).max(F::lit(2.0));
    let rescale_below = F::lit(1e-6);

    let mut v = vec![F::zero(); d];
    let mut scale = F::one();
    let mut bias = F::zero();
    let mut t = F::zero();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = F::one() / (lambda * (t + t0));
            let yi = signs[i];
            let margin = yi * (scale * x[i].dot_dense(&v) + bias);
            scale *= F::one() - eta * lambda;
            if margin < F::one() {
                x[i].add_scaled_to(eta * yi / scale, &mut v);
                bias += eta * yi;
            }
            if scale < rescale_below {
                v.iter_mut().for_each(|vj| *vj *= scale);
                scale = F::one();
            }
            t += F::one();
        }
    }
    Head {
        weights: v.into_iter().map(|vj| vj * scale).collect(),
        bias,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d() -> (Vec<SparseVector<f64>>, Vec<&'static str>) {
        (
            vec![
                SparseVector::from_dense(&[-1.0]),
                SparseVector::from_dense(&[1.0]),
            ],
            vec!["neg", "pos"],
        )
    }

    #[test]
    fn sigmoid_at_zero() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!(sigmoid(-800.0f64) >= 0.0 && sigmoid(800.0f64) == 1.0);
    }

    #[test]
    fn separable_one_d() {
        let (x, y) = one_d();
        let lr = LinearModel::fit_logreg(
            &x,
            &y,
            &LogregParams {
                c: 10.0,
                ..Default::default()
            },
        )
        .unwrap();
        let svc = LinearModel::fit_svc(&x, &y, &SvcParams::default()).unwrap();
        for m in [&lr, &svc] {
            assert_eq!(m.predict(&x[0]).unwrap(), "neg");
            assert_eq!(m.predict(&x[1]).unwrap(), "pos");
        }
        let p = lr.predict_scores(&x[1]).unwrap();
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn logreg_converges_to_tolerance() {
        let x = vec![
            SparseVector::from_dense(&[0.5, 1.0]),
            SparseVector::from_dense(&[1.5, -0.2]),
            SparseVector::from_dense(&[-0.3, 0.8]),
            SparseVector::from_dense(&[-1.2, -0.7]),
            SparseVector::from_dense(&[0.1, 0.1]),
        ];
        let y = [true, true, false, false, true];
        let labels: Vec<&str> = y.iter().map(|&b| if b { "b" } else { "a" }).collect();
        let m = LinearModel::fit_logreg(&x, &labels, &LogregParams::default()).unwrap();
        let h = &m.heads()[0];
        let mut theta = h.weights.clone();
        theta.push(h.bias);
        let (_, g) = logistic_loss_and_gradient(&x, &y, &theta, 1.0);
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-6);
    }

    #[test]
    fn svc_identical_features_predicts_majority() {
        let x = vec![SparseVector::from_dense(&[1.0, 1.0]); 7];
        let y = ["pos", "neg", "pos", "pos", "neg", "pos", "pos"];
        let m = LinearModel::fit_svc(&x, &y, &SvcParams::default()).unwrap();
        assert_eq!(m.predict(&x[0]).unwrap(), "pos");
    }

    #[test]
    fn binary_only_rejects_three_classes() {
        let x = vec![
            SparseVector::from_dense(&[1.0]),
            SparseVector::from_dense(&[2.0]),
            SparseVector::from_dense(&[3.0]),
        ];
        let y = ["a", "b", "c"];
        let p = LogregParams {
            multiclass: Multiclass::BinaryOnly,
            ..Default::default()
        };
        assert!(matches!(
            LinearModel::fit_logreg(&x, &y, &p),
            Err(ModelError::NonBinaryLabels(3))
        ));
        let ovr = LinearModel::fit_logreg(&x, &y, &LogregParams::default()).unwrap();
        assert_eq!(ovr.heads().len(), 3);
        let s = ovr.predict_scores(&x[0]).unwrap();
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_constant() {
        let x = vec![SparseVector::from_dense(&[1.0]), SparseVector::from_dense(&[2.0])];
        let m = LinearModel::fit_svc(&x, &["only", "only"], &SvcParams::default()).unwrap();
        assert_eq!(m.predict(&x[0]).unwrap(), "only");
        assert_eq!(m.predict_scores(&x[0]).unwrap(), vec![1.0]);
    }
}
