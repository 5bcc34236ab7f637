//! The inflection network: context encoders (full-sentence LSTM or
//! adjacent-window baseline), character-level lemma encoder with the
//! context vector injected per character, attention-equipped character
//! decoder, and the shared auxiliary MSD decoder.

mod config;
pub mod net;
mod params;

pub use config::{ContextMode, ModelConfig};
pub use net::{
    attend, compute_loss, context_vector, decode_form_greedy, decode_form_teacher,
    decode_msd_greedy, decode_msd_teacher, encode_context_full, encode_context_window2,
    encode_lemma, form_max_len, Decoded, Encoding, Forward, Mode, MSD_MAX_COMPONENTS,
};
pub use params::{
    AttentionParams, AttentionVars, LangParams, LangVars, LinearParams, LinearVars, ModelParams,
    ModelVars, SharedParams, SharedVars,
};

use thiserror::Error;

use crate::data::{encode_instance, EncodedInstance, SentenceInstance, VocabSet};
use crate::numerics::{NumericsError, Tape, Var};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error("unknown language {0:?}")]
    UnknownLanguage(String),
    #[error("instance is missing the gold annotations required for training")]
    MissingGold,
    #[error("auxiliary MSD prediction applies to track 1 only")]
    AuxRequiresTrackOne,
    #[error("this model has no auxiliary MSD decoder")]
    NoSharedDecoder,
    #[error("a model needs at least one language")]
    NoLanguages,
    #[error("model dimensions must be positive")]
    ZeroDimension,
}

/// A complete model: configuration, the vocabularies it was built over,
/// its parameters, and the training seed (used for ensemble tie-breaks).
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub vocabs: VocabSet,
    pub params: ModelParams,
    pub seed: u64,
}

impl Model {
    pub fn new(config: ModelConfig, vocabs: VocabSet, seed: u64) -> Result<Self, ModelError> {
        let params = ModelParams::init(&config, &vocabs, seed)?;
        Ok(Model {
            config,
            vocabs,
            params,
            seed,
        })
    }

    pub fn encode(&self, instance: &SentenceInstance) -> Result<EncodedInstance, ModelError> {
        Ok(encode_instance(instance, &self.vocabs, self.config.track)?)
    }

    /// Register parameters on a tape and compute the training loss.
    pub fn loss_on(
        &self,
        fx: &mut Forward,
        instance: &EncodedInstance,
    ) -> Result<Var, ModelError> {
        let vars = self.params.register(fx.tape);
        compute_loss(fx, &vars, instance, &self.config)
    }

    /// Deterministic loss value (no dropout, no word dropout).
    pub fn eval_loss(&self, instance: &EncodedInstance) -> Result<f64, ModelError> {
        let mut tape = Tape::new();
        let mut fx = Forward::infer(&mut tape);
        let loss = self.loss_on(&mut fx, instance)?;
        Ok(tape.value(loss).item())
    }

    /// Fork one language out of a multilingual model. The shared MSD
    /// decoder is deep-copied, so later updates to either copy leave the
    /// other untouched.
    pub fn fork_language(&self, language: &str) -> Result<Model, ModelError> {
        let lang_params = self
            .params
            .languages
            .get(language)
            .ok_or_else(|| ModelError::UnknownLanguage(language.to_string()))?
            .clone();
        let bundle = self
            .vocabs
            .bundle(language)
            .ok_or_else(|| ModelError::UnknownLanguage(language.to_string()))?
            .clone();
        let config = ModelConfig {
            languages: vec![language.to_string()],
            ..self.config.clone()
        };
        let vocabs = VocabSet {
            per_language: [(language.to_string(), bundle)].into_iter().collect(),
            // the shared inventory stays intact: parameter shapes depend on it
            shared_msd: self.vocabs.shared_msd.clone(),
        };
        Ok(Model {
            config,
            vocabs,
            params: ModelParams {
                languages: [(language.to_string(), lang_params)].into_iter().collect(),
                shared: self.params.shared.clone(),
            },
            seed: self.seed,
        })
    }
}

/// Full-model gradient check: reverse-mode gradients of the training loss
/// against central finite differences over every parameter coordinate.
/// Deterministic mode only. Returns the max relative error.
pub fn grad_check_model(
    model: &Model,
    instance: &EncodedInstance,
    eps: f64,
) -> Result<f64, ModelError> {
    let mut tape = Tape::new();
    let mut fx = Forward::infer(&mut tape);
    let loss = model.loss_on(&mut fx, instance)?;
    let grads = fx.tape.backward(loss)?;

    let mut max_rel = 0.0_f64;
    for name in model.params.names() {
        let base = model.params.tensor(&name).expect("name from visit");
        let analytic = &grads[&name];
        for j in 0..base.numel() {
            let numeric = {
                let eval = |delta: f64| -> Result<f64, ModelError> {
                    let mut probe = model.clone();
                    probe.params.visit_mut(&mut |n, t| {
                        if n == name {
                            t.data[j] += delta;
                        }
                    });
                    probe.eval_loss(instance)
                };
                (eval(eps)? - eval(-eps)?) / (2.0 * eps)
            };
            let a = analytic.data[j];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3);
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::tiny_setup;

    #[test]
    fn full_model_gradients_match_finite_differences() {
        let setup = tiny_setup(4, ContextMode::FullLstm, true, 3, 17);
        let err = grad_check_model(&setup.model, &setup.encoded[0], 1e-6).unwrap();
        assert!(err < 1e-5, "full model grad check error {err}");
    }

    #[test]
    fn fork_isolates_the_shared_block() {
        let a = crate::testutil::tiny_corpus("la", 4, 1, 1);
        let mut all = a.clone();
        all.extend(crate::testutil::tiny_corpus("lb", 4, 1, 2));
        let vocabs = crate::data::build_vocabularies(&all, crate::data::Track::One);
        let config = crate::testutil::tiny_config(
            4,
            ContextMode::FullLstm,
            true,
            vec!["la".into(), "lb".into()],
        );
        let parent = Model::new(config, vocabs, 5).unwrap();

        let mut fork_a = parent.fork_language("la").unwrap();
        let fork_b = parent.fork_language("lb").unwrap();
        assert_eq!(fork_a.config.languages, vec!["la".to_string()]);
        assert!(parent.fork_language("xx").is_err());

        // mutating one fork's shared block leaves the sibling and parent alone
        fork_a.params.visit_mut(&mut |name, t| {
            if name.starts_with("shared.") {
                t.data.iter_mut().for_each(|x| *x += 1.0);
            }
        });
        assert_eq!(parent.params.shared, fork_b.params.shared);
        assert_ne!(parent.params.shared, fork_a.params.shared);
    }

    #[test]
    fn missing_gold_is_an_error() {
        let setup = tiny_setup(4, ContextMode::FullLstm, true, 3, 9);
        let mut enc = setup.encoded[0].clone();
        enc.gold_chars = None;
        assert!(matches!(
            setup.model.eval_loss(&enc),
            Err(ModelError::MissingGold)
        ));
        let mut enc2 = setup.encoded[0].clone();
        enc2.gold_msd = None;
        assert!(matches!(
            setup.model.eval_loss(&enc2),
            Err(ModelError::MissingGold)
        ));
    }

    #[test]
    fn parameter_names_match_registration() {
        let setup = tiny_setup(4, ContextMode::FullLstm, true, 3, 2);
        let mut tape = Tape::new();
        let _ = setup.model.params.register(&mut tape);
        let mut fx = Forward::infer(&mut tape);
        let loss = {
            let vars = setup.model.params.register(fx.tape);
            compute_loss(&mut fx, &vars, &setup.encoded[0], &setup.model.config).unwrap()
        };
        let grads = tape.backward(loss).unwrap();
        for name in setup.model.params.names() {
            assert!(grads.contains_key(&name), "no gradient entry for {name}");
        }
    }
}
