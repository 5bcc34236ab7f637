use crate::data::SentenceInstance;
use crate::inference::{predict_msd, InferError};
use crate::model::Model;

use super::EvalError;

/// Exact-match accuracy as a percentage; case- and codepoint-sensitive.
pub fn accuracy(predictions: &[String], golds: &[String]) -> Result<f64, EvalError> {
    if predictions.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            golds: golds.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = predictions
        .iter()
        .zip(golds.iter())
        .filter(|(p, g)| p == g)
        .count();
    Ok(100.0 * hits as f64 / predictions.len() as f64)
}

/// Report formatting convention: two decimals.
pub fn format_accuracy(value: f64) -> String {
    format!("{value:.2}")
}

/// Content-word positions: non-target tokens whose MSD leads with N, ADJ
/// or V and whose lemma is available for re-posing.
pub(crate) fn eligible_positions(instance: &SentenceInstance) -> Vec<usize> {
    instance
        .tokens
        .iter()
        .enumerate()
        .filter(|(i, t)| {
            *i != instance.target_index
                && t.lemma.is_some()
                && t.msd
                    .as_ref()
                    .is_some_and(|m| matches!(m.pos(), "N" | "ADJ" | "V"))
        })
        .map(|(i, _)| i)
        .collect()
}

/// Re-pose a sentence with `position` covered: the original target gets
/// its gold form back (its MSD stays unavailable), and the chosen token
/// becomes the covered target whose MSD is to be predicted.
pub(crate) fn repose(
    instance: &SentenceInstance,
    position: usize,
) -> Result<SentenceInstance, EvalError> {
    let gold_form = instance
        .gold_form
        .clone()
        .ok_or(EvalError::MissingGold)?;
    let mut tokens = instance.tokens.clone();
    tokens[instance.target_index].form = Some(gold_form);
    tokens[instance.target_index].msd = None;
    let gold_msd = tokens[position].msd.take();
    tokens[position].form = None;
    Ok(SentenceInstance {
        tokens,
        target_index: position,
        gold_form: None,
        gold_msd,
        language: instance.language.clone(),
    })
}

/// MSD-prediction accuracy over content words: every eligible noun,
/// adjective or verb token is covered in turn and the auxiliary decoder's
/// greedy output is compared against its tag, sequence-exact.
pub fn msd_accuracy(model: &Model, instances: &[SentenceInstance]) -> Result<f64, EvalError> {
    let mut total = 0usize;
    let mut hits = 0usize;
    for inst in instances {
        for pos in eligible_positions(inst) {
            let reposed = repose(inst, pos)?;
            let gold = reposed.gold_msd.clone().expect("eligible token has MSD");
            let predicted = predict_msd(model, &reposed)?;
            total += 1;
            if predicted.components == gold.components {
                hits += 1;
            }
        }
    }
    if total == 0 {
        return Err(EvalError::NoEligibleTokens);
    }
    Ok(100.0 * hits as f64 / total as f64)
}

/// Accuracy of the auxiliary decoder on the dev instances' own gold MSDs.
pub fn aux_msd_accuracy(model: &Model, instances: &[SentenceInstance]) -> Result<f64, EvalError> {
    let mut total = 0usize;
    let mut hits = 0usize;
    for inst in instances {
        let gold = inst.gold_msd.as_ref().ok_or(EvalError::MissingGold)?;
        let predicted = predict_msd(model, inst).map_err(InferError::from)?;
        total += 1;
        if predicted.components == gold.components {
            hits += 1;
        }
    }
    if total == 0 {
        return Err(EvalError::Empty);
    }
    Ok(100.0 * hits as f64 / total as f64)
}

/// Mean, population standard deviation and mean of the five best.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub n_models: usize,
    pub mean: f64,
    pub std: f64,
    pub top5_mean: f64,
}

pub fn cell_stats(accuracies: &[f64]) -> Result<CellStats, EvalError> {
    if accuracies.len() < 5 {
        return Err(EvalError::TooFewForTopFive(accuracies.len()));
    }
    let n = accuracies.len() as f64;
    let mean = accuracies.iter().sum::<f64>() / n;
    let var = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let mut sorted = accuracies.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top5_mean = sorted[..5].iter().sum::<f64>() / 5.0;
    Ok(CellStats {
        n_models: accuracies.len(),
        mean,
        std: var.sqrt(),
        top5_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(strs: &[&str]) -> Vec<String> {
        strs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn half_right_is_fifty() {
        let acc = accuracy(&v(&["made", "plan"]), &v(&["made", "plans"])).unwrap();
        assert_eq!(acc, 50.0);
    }

    #[test]
    fn identical_lists_are_one_hundred() {
        let x = v(&["a", "b", "c"]);
        assert_eq!(accuracy(&x, &x).unwrap(), 100.0);
    }

    #[test]
    fn mismatched_lengths_are_an_error() {
        assert!(accuracy(&v(&["a"]), &v(&["a", "b"])).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn report_formatting_uses_two_decimals() {
        assert_eq!(format_accuracy(49.8712), "49.87");
        assert_eq!(format_accuracy(100.0), "100.00");
        assert_eq!(format_accuracy(66.59), "66.59");
        assert_eq!(format_accuracy(65.351), "65.35");
    }

    #[test]
    fn stats_match_hand_arithmetic() {
        let s = cell_stats(&[10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0]).unwrap();
        assert_eq!(s.mean, 40.0);
        assert_eq!(s.top5_mean, 50.0);
        assert_eq!(s.n_models, 7);
        assert!((s.std - 20.0).abs() < 1e-12);
    }

    #[test]
    fn equal_scores_have_zero_std() {
        let s = cell_stats(&[42.0; 8]).unwrap();
        assert_eq!(s.std, 0.0);
        assert_eq!(s.mean, 42.0);
        assert_eq!(s.top5_mean, 42.0);
    }

    #[test]
    fn fewer_than_five_models_is_an_error() {
        assert!(cell_stats(&[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    proptest! {
        #[test]
        fn top5_mean_dominates_the_mean(
            accs in proptest::collection::vec(0.0f64..100.0, 5..30)
        ) {
            let s = cell_stats(&accs).unwrap();
            prop_assert!(s.top5_mean >= s.mean - 1e-12);
            prop_assert!((0.0..=100.0).contains(&s.mean));
        }
    }
}
