//! Reference computations written straight from the textbook definitions.
//! They deliberately share no code with the library.

#![allow(dead_code)]

/// Metrics recomputed from raw label pairs.
#[derive(Debug, Clone)]
pub struct OracleMetrics {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub f1_macro: f64,
    pub f1_micro: f64,
    pub f1_weighted: f64,
    pub mcc: f64,
}

fn safe_div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

pub fn oracle_metrics(truth: &[&str], pred: &[&str], classes: &[&str]) -> OracleMetrics {
    let n = truth.len() as f64;
    let correct = truth.iter().zip(pred).filter(|(t, p)| t == p).count() as f64;
    let mut precision = Vec::new();
    let mut recall = Vec::new();
    let mut f1 = Vec::new();
    let mut support = Vec::new();
    let (mut tp_sum, mut fp_sum, mut fn_sum) = (0.0, 0.0, 0.0);
    for c in classes {
        let mut tp = 0.0;
        let mut fp = 0.0;
        let mut fn_ = 0.0;
        for (t, p) in truth.iter().zip(pred) {
            match (t == c, p == c) {
                (true, true) => tp += 1.0,
                (false, true) => fp += 1.0,
                (true, false) => fn_ += 1.0,
                _ => {}
            }
        }
        tp_sum += tp;
        fp_sum += fp;
        fn_sum += fn_;
        let p = safe_div(tp, tp + fp);
        let r = safe_div(tp, tp + fn_);
        precision.push(p);
        recall.push(r);
        f1.push(safe_div(2.0 * p * r, p + r));
        support.push(tp + fn_);
    }
    let f1_macro = f1.iter().sum::<f64>() / classes.len() as f64;
    let micro_p = safe_div(tp_sum, tp_sum + fp_sum);
    let micro_r = safe_div(tp_sum, tp_sum + fn_sum);
    let f1_micro = safe_div(2.0 * micro_p * micro_r, micro_p + micro_r);
    let f1_weighted = f1.iter().zip(&support).map(|(f, s)| f * s).sum::<f64>() / n;
    OracleMetrics {
        accuracy: correct / n,
        precision,
        recall,
        f1,
        f1_macro,
        f1_micro,
        f1_weighted,
        mcc: pearson_mcc(truth, pred, classes),
    }
}

/// MCC as the Pearson correlation of the one-hot truth and prediction
/// matrices, computed with explicit means and covariances.
pub fn pearson_mcc(truth: &[&str], pred: &[&str], classes: &[&str]) -> f64 {
    let n = truth.len() as f64;
    let k = classes.len();
    let onehot = |labels: &[&str]| -> Vec<Vec<f64>> {
        labels
            .iter()
            .map(|l| classes.iter().map(|c| if l == c { 1.0 } else { 0.0 }).collect())
            .collect()
    };
    let x = onehot(truth);
    let y = onehot(pred);
    let mean = |m: &Vec<Vec<f64>>, j: usize| m.iter().map(|r| r[j]).sum::<f64>() / n;
    let cov = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> f64 {
        (0..k)
            .map(|j| {
                let (ma, mb) = (mean(a, j), mean(b, j));
                a.iter().zip(b).map(|(ra, rb)| (ra[j] - ma) * (rb[j] - mb)).sum::<f64>()
            })
            .sum::<f64>()
            / n
    };
    let cxy = cov(&x, &y);
    let cxx = cov(&x, &x);
    let cyy = cov(&y, &y);
    if cxx == 0.0 || cyy == 0.0 {
        0.0
    } else {
        cxy / (cxx * cyy).sqrt()
    }
}

/// Multinomial naive Bayes posteriors evaluated as plain products:
/// prior N_c/N times, for every term, ((count_tc + λ) / (total_c + λ|V|))^x_t.
pub fn nb_posteriors(docs: &[Vec<u32>], labels: &[usize], classes: usize, lambda: f64, x: &[u32]) -> Vec<f64> {
    let v = x.len();
    let mut joint = Vec::with_capacity(classes);
    for c in 0..classes {
        let members: Vec<&Vec<u32>> = docs
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == c)
            .map(|(d, _)| d)
            .collect();
        let prior = members.len() as f64 / docs.len() as f64;
        let total: f64 = members.iter().flat_map(|d| d.iter()).map(|&t| t as f64).sum();
        let mut p = prior;
        for t in 0..v {
            let count: f64 = members.iter().map(|d| d[t] as f64).sum();
            let theta = (count + lambda) / (total + lambda * v as f64);
            for _ in 0..x[t] {
                p *= theta;
            }
        }
        joint.push(p);
    }
    let z: f64 = joint.iter().sum();
    joint.iter().map(|p| p / z).collect()
}

/// Central difference of `f` along every coordinate of `at`.
pub fn numeric_gradient(at: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut point = at.to_vec();
    (0..at.len())
        .map(|i| {
            let orig = point[i];
            point[i] = orig + h;
            let up = f(&point);
            point[i] = orig - h;
            let down = f(&point);
            point[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest coordinate-wise relative error, with magnitudes below `floor`
/// compared absolutely.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

const NEUTRAL: [&str; 12] = [
    "sunny", "coffee", "weekend", "music", "friend", "garden", "morning", "book", "travel", "game",
    "dinner", "movie",
];
const INSULT: [&str; 8] = ["idiot", "stupid", "moron", "trash", "clown", "loser", "pathetic", "dumb"];
const TARGETS: [(&str, &[&str]); 3] = [
    ("IND", &["@USER", "buddy", "dude", "pal"]),
    ("GRP", &["liberals", "conservatives", "democrats", "republicans"]),
    ("OTH", &["media", "government", "league", "company"]),
];

/// A deterministic OLID-format corpus of `n` posts whose labels follow the
/// vocabulary, with some label noise so no model is perfect.
pub fn synthetic_olid(n: usize, seed: u64) -> String {
    // splitmix64, so the generator has no dependency on the rand crates
    let mut state = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut next = move |bound: usize| -> usize {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        ((z ^ (z >> 31)) % bound as u64) as usize
    };
    let mut out = String::from("id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c\n");
    for i in 0..n {
        let mut words: Vec<&str> = (0..3 + next(4)).map(|_| NEUTRAL[next(NEUTRAL.len())]).collect();
        let offensive = next(3) == 0;
        let (a, b, c) = if offensive {
            words.push(INSULT[next(INSULT.len())]);
            if next(4) == 0 {
                ("OFF", "UNT", "NULL")
            } else {
                let (tag, cues) = TARGETS[next(3)];
                words.push(cues[next(cues.len())]);
                ("OFF", "TIN", tag)
            }
        } else {
            ("NOT", "NULL", "NULL")
        };
        if next(10) == 0 {
            words.push("#SoAngry");
        }
        // label noise: flip a few NOT posts to look offensive
        if !offensive && next(15) == 0 {
            words.push(INSULT[next(INSULT.len())]);
        }
        let w = next(words.len());
        words.swap(0, w);
        out.push_str(&format!("{i}\t{}\t{a}\t{b}\t{c}\n", words.join(" ")));
    }
    out
}
