//! Frozen-model prediction: greedy decoding, dev-based model selection,
//! and five-model majority-vote ensembling.

use thiserror::Error;

use crate::data::{MsdTag, SentenceInstance};
use crate::model::{
    context_vector, decode_form_greedy, decode_msd_greedy, encode_lemma, form_max_len, Forward,
    Model, ModelError, MSD_MAX_COMPONENTS,
};
use crate::numerics::Tape;

#[derive(Debug, Error)]
pub enum InferError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("an ensemble has exactly 5 members, got {0}")]
    WrongEnsembleSize(usize),
    #[error("need at least {need} candidate models, got {got}")]
    TooFewModels { need: usize, got: usize },
    #[error("dev instance is missing its gold form")]
    MissingGold,
}

/// Greedy form prediction with all stochastic behavior disabled.
pub fn predict_form(model: &Model, instance: &SentenceInstance) -> Result<String, InferError> {
    let enc = model.encode(instance)?;
    let bundle = model
        .vocabs
        .bundle(&instance.language)
        .ok_or_else(|| ModelError::UnknownLanguage(instance.language.clone()))?;
    let mut tape = Tape::new();
    let mut fx = Forward::infer(&mut tape);
    let vars = model.params.register(fx.tape);
    let lang = vars.language(&instance.language)?;
    let ctx = context_vector(&mut fx, lang, &enc, &model.config)?;
    let encoding = encode_lemma(&mut fx, lang, &enc.lemma_chars, ctx)?;
    let out = decode_form_greedy(&mut fx, lang, &encoding, form_max_len(enc.lemma_len))?;
    Ok(out.symbols.iter().map(|&i| bundle.chars.symbol(i)).collect())
}

/// Greedy MSD prediction through the shared auxiliary decoder.
pub fn predict_msd(model: &Model, instance: &SentenceInstance) -> Result<MsdTag, InferError> {
    let enc = model.encode(instance)?;
    let mut tape = Tape::new();
    let mut fx = Forward::infer(&mut tape);
    let vars = model.params.register(fx.tape);
    let lang = vars.language(&instance.language)?;
    let shared = vars.shared.as_ref().ok_or(ModelError::NoSharedDecoder)?;
    let ctx = context_vector(&mut fx, lang, &enc, &model.config)?;
    let out = decode_msd_greedy(&mut fx, shared, ctx, MSD_MAX_COMPONENTS)?;
    Ok(MsdTag::from_components(
        out.symbols
            .iter()
            .map(|&i| model.vocabs.shared_msd.symbol(i).to_string())
            .collect::<Vec<_>>(),
    ))
}

/// Exact-match accuracy of one model on a gold-annotated dev set.
pub fn dev_accuracy(model: &Model, dev: &[SentenceInstance]) -> Result<f64, InferError> {
    let mut correct = 0usize;
    for inst in dev {
        let gold = inst.gold_form.as_deref().ok_or(InferError::MissingGold)?;
        if predict_form(model, inst)? == gold {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / dev.len().max(1) as f64)
}

/// Exactly five frozen models, best dev accuracy first; accuracy ties are
/// broken by training seed, ascending.
pub struct EnsembleSpec {
    members: Vec<Model>,
}

impl EnsembleSpec {
    pub const SIZE: usize = 5;

    pub fn new(members: Vec<Model>) -> Result<Self, InferError> {
        if members.len() != Self::SIZE {
            return Err(InferError::WrongEnsembleSize(members.len()));
        }
        Ok(EnsembleSpec { members })
    }

    pub fn members(&self) -> &[Model] {
        &self.members
    }
}

/// Ranking order: accuracy descending, then seed ascending.
pub(crate) fn rank_order(scored: &[(f64, u64)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scored.len()).collect();
    idx.sort_by(|&a, &b| {
        scored[b]
            .0
            .total_cmp(&scored[a].0)
            .then(scored[a].1.cmp(&scored[b].1))
    });
    idx
}

/// Evaluate every candidate on the same dev set and keep the five best.
/// Returns the ensemble plus the members' dev accuracies, best first.
pub fn select_top_k(
    models: Vec<Model>,
    dev: &[SentenceInstance],
) -> Result<(EnsembleSpec, Vec<f64>), InferError> {
    if models.len() < EnsembleSpec::SIZE {
        return Err(InferError::TooFewModels {
            need: EnsembleSpec::SIZE,
            got: models.len(),
        });
    }
    let mut scored = Vec::with_capacity(models.len());
    for m in &models {
        scored.push((dev_accuracy(m, dev)?, m.seed));
    }
    let order = rank_order(&scored);
    let mut members = Vec::with_capacity(EnsembleSpec::SIZE);
    let mut accuracies = Vec::with_capacity(EnsembleSpec::SIZE);
    let mut by_index: Vec<Option<Model>> = models.into_iter().map(Some).collect();
    for &i in order.iter().take(EnsembleSpec::SIZE) {
        members.push(by_index[i].take().expect("each index selected once"));
        accuracies.push(scored[i].0);
    }
    Ok((EnsembleSpec::new(members)?, accuracies))
}

/// Majority vote over ranked predictions. Ties go to the candidate backed
/// by the highest-ranked member among the tied candidates.
pub fn majority_vote(votes: &[String]) -> String {
    let mut tally: Vec<(String, usize, usize)> = Vec::new(); // (candidate, count, best rank)
    for (rank, vote) in votes.iter().enumerate() {
        match tally.iter_mut().find(|(c, _, _)| c == vote) {
            Some((_, count, _)) => *count += 1,
            None => tally.push((vote.clone(), 1, rank)),
        }
    }
    tally
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)))
        .map(|(c, _, _)| c)
        .expect("at least one vote")
}

/// Collect the five members' predictions and return the majority vote.
pub fn ensemble_predict(
    spec: &EnsembleSpec,
    instance: &SentenceInstance,
) -> Result<String, InferError> {
    let votes = spec
        .members
        .iter()
        .map(|m| predict_form(m, instance))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(majority_vote(&votes))
}
