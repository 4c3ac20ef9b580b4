use serde::Serialize;

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScore {
    pub label: String,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelEval {
    pub classes: Vec<ClassScore>,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else if p == r {
        p
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Per-class and averaged precision, recall and F1 for single-label
/// predictions over the declared `classes`.
///
/// Micro scores pool true/false positive and negative counts over all
/// classes; macro F1 is the unweighted mean of per-class F1, so declared
/// classes that never occur count as 0.
pub fn f1_scores<S: AsRef<str>>(gold: &[S], predicted: &[S], classes: &[S]) -> Result<LabelEval, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::LengthMismatch { gold: gold.len(), predicted: predicted.len() });
    }
    let labels: Vec<&str> = classes.iter().map(|c| c.as_ref()).collect();
    let index = |s: &str| {
        labels
            .iter()
            .position(|l| *l == s)
            .ok_or_else(|| EvalError::UnknownLabel(s.to_string()))
    };
    let k = labels.len();
    let (mut tp, mut fp, mut fn_) = (vec![0usize; k], vec![0usize; k], vec![0usize; k]);
    let mut correct = 0;
    for (g, p) in gold.iter().zip(predicted) {
        let (gi, pi) = (index(g.as_ref())?, index(p.as_ref())?);
        if gi == pi {
            tp[gi] += 1;
            correct += 1;
        } else {
            fp[pi] += 1;
            fn_[gi] += 1;
        }
    }

    let classes: Vec<ClassScore> = (0..k)
        .map(|i| {
            let precision = ratio(tp[i], tp[i] + fp[i]);
            let recall = ratio(tp[i], tp[i] + fn_[i]);
            ClassScore {
                label: labels[i].to_string(),
                true_positives: tp[i],
                false_positives: fp[i],
                false_negatives: fn_[i],
                precision,
                recall,
                f1: harmonic(precision, recall),
            }
        })
        .collect();
    let (stp, sfp, sfn): (usize, usize, usize) = (tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());
    let micro_precision = ratio(stp, stp + sfp);
    let micro_recall = ratio(stp, stp + sfn);
    let macro_f1 = if k == 0 {
        0.0
    } else {
        classes.iter().map(|c| c.f1).sum::<f64>() / k as f64
    };
    Ok(LabelEval {
        micro_f1: harmonic(micro_precision, micro_recall),
        micro_precision,
        micro_recall,
        macro_f1,
        accuracy: ratio(correct, gold.len()),
        classes,
    })
}
