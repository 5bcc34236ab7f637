//! Shared helpers for unit tests: tiny corpora and tiny models.

use crate::data::{
    build_vocabularies, encode_instance, generate_synthetic_corpus, EncodedInstance,
    SentenceInstance, SynthSpec, Track, VocabSet,
};
use crate::model::{ContextMode, Model, ModelConfig};

pub fn tiny_corpus(language: &str, n: usize, distance: usize, seed: u64) -> Vec<SentenceInstance> {
    generate_synthetic_corpus(&SynthSpec {
        n_sentences: n,
        trigger_distance: distance,
        n_lemmas: 6,
        seed,
        language_id: language.to_string(),
    })
    .expect("synth corpus")
}

pub fn tiny_config(dims: usize, mode: ContextMode, aux: bool, languages: Vec<String>) -> ModelConfig {
    ModelConfig {
        embed_dim: dims,
        lstm_dim: dims,
        attn_dim: dims,
        track: Track::One,
        context_mode: mode,
        aux_msd: aux,
        languages,
    }
}

pub struct TinySetup {
    pub model: Model,
    pub vocabs: VocabSet,
    pub instances: Vec<SentenceInstance>,
    pub encoded: Vec<EncodedInstance>,
}

pub fn tiny_setup(dims: usize, mode: ContextMode, aux: bool, n: usize, seed: u64) -> TinySetup {
    let instances = tiny_corpus("toy", n, 1, seed);
    let vocabs = build_vocabularies(&instances, Track::One);
    let config = tiny_config(dims, mode, aux, vec!["toy".into()]);
    let model = Model::new(config, vocabs.clone(), seed).expect("tiny model");
    let encoded = instances
        .iter()
        .map(|i| encode_instance(i, &vocabs, Track::One).expect("encode"))
        .collect();
    TinySetup {
        model,
        vocabs,
        instances,
        encoded,
    }
}
