//! Metrics and the ablation runner.

mod ablation;
mod metrics;

pub use ablation::{
    best_partner_table, cells_csv, deltas_csv, rows_csv, run_ablation, AblationConfig,
    AblationReport, Architecture, CellReport, DeltaReport, LanguageCorpus, ModelRow,
};
pub use metrics::{
    accuracy, aux_msd_accuracy, cell_stats, format_accuracy, msd_accuracy, CellStats,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Infer(#[from] crate::inference::InferError),
    #[error(transparent)]
    Train(#[from] crate::training::TrainError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error("predictions and golds differ in length: {predictions} vs {golds}")]
    LengthMismatch { predictions: usize, golds: usize },
    #[error("accuracy needs at least one item")]
    Empty,
    #[error("no eligible content tokens for MSD evaluation")]
    NoEligibleTokens,
    #[error("instance is missing the gold form needed to re-pose it")]
    MissingGold,
    #[error("top-5 statistics need at least 5 models, got {0}")]
    TooFewForTopFive(usize),
    #[error("cell {language}/{architecture} has {n} models; at least 5 required")]
    TooFewModelsInCell {
        language: String,
        architecture: String,
        n: usize,
    },
    #[error("ablation needs n_models_per_cell >= 5, got {0}")]
    TooFewModelsPerCell(usize),
    #[error("need one seed per model: {seeds} seeds for {models} models")]
    SeedCountMismatch { seeds: usize, models: usize },
    #[error("worker pool: {0}")]
    WorkerPool(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{MsdTag, SentenceInstance, Token};

    fn token(form: &str, msd: &str) -> Token {
        Token {
            form: Some(form.into()),
            lemma: Some(form.into()),
            msd: Some(MsdTag::parse(msd).unwrap()),
        }
    }

    fn instance_with_tags(tags: &[&str]) -> SentenceInstance {
        let mut tokens: Vec<Token> = tags
            .iter()
            .enumerate()
            .map(|(i, t)| token(&format!("w{i}"), t))
            .collect();
        tokens.push(Token {
            form: None,
            lemma: Some("run".into()),
            msd: None,
        });
        SentenceInstance {
            target_index: tags.len(),
            tokens,
            gold_form: Some("ran".into()),
            gold_msd: Some(MsdTag::parse("V;PST").unwrap()),
            language: "toy".into(),
        }
    }

    #[test]
    fn only_content_words_are_eligible() {
        let inst = instance_with_tags(&["N;SG", "DET;PL", "ADJ", "V;PRS", "PUNCT", "ADV"]);
        let eligible = metrics::eligible_positions(&inst);
        assert_eq!(eligible, vec![0, 2, 3]);
    }

    #[test]
    fn reposing_covers_the_content_word_and_restores_the_target() {
        let inst = instance_with_tags(&["N;SG", "DET;PL"]);
        let reposed = metrics::repose(&inst, 0).unwrap();
        assert_eq!(reposed.target_index, 0);
        assert!(reposed.tokens[0].form.is_none());
        assert_eq!(reposed.tokens[0].lemma.as_deref(), Some("w0"));
        assert_eq!(reposed.gold_msd.as_ref().unwrap().joined(), "N;SG");
        // the original target is an ordinary token again, with gold form
        // and no MSD annotation
        assert_eq!(reposed.tokens[2].form.as_deref(), Some("ran"));
        assert!(reposed.tokens[2].msd.is_none());
    }

    #[test]
    fn reposing_without_gold_form_is_an_error() {
        let mut inst = instance_with_tags(&["N;SG"]);
        inst.gold_form = None;
        assert!(metrics::repose(&inst, 0).is_err());
    }

    #[test]
    fn msd_accuracy_errors_without_eligible_tokens() {
        use crate::model::ContextMode;
        let setup = crate::testutil::tiny_setup(3, ContextMode::FullLstm, true, 3, 40);
        let inst = instance_with_tags(&["DET;PL", "PUNCT"]);
        let mut inst = inst;
        inst.language = "toy".into();
        let err = msd_accuracy(&setup.model, &[inst]).unwrap_err();
        assert!(matches!(err, EvalError::NoEligibleTokens));
    }

    #[test]
    fn sequence_exact_comparison_rejects_partial_matches() {
        // V;PST vs V;PRS is wrong even though the POS matches
        let predicted = MsdTag::parse("V;PST").unwrap();
        let gold = MsdTag::parse("V;PRS").unwrap();
        assert_ne!(predicted.components, gold.components);
    }
}
