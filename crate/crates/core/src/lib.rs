//! Morphological inflection in context.
//!
//! Given a lemma and the sentence it occurs in, generate the inflected
//! word form with a character-level encoder-decoder: the full sentence
//! context is reduced to a fixed-size vector by forward/backward LSTMs,
//! an attention-equipped character decoder produces the form, and an
//! optional auxiliary decoder predicts the target's morphosyntactic
//! description (MSD). Models can be trained multilingually with a shared
//! MSD decoder, finetuned per language, and combined by majority-vote
//! ensembling.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod data;
pub mod evaluation;
pub mod inference;
pub mod model;
pub mod training;
pub mod numerics;
pub mod rng;

#[cfg(test)]
pub(crate) mod testutil;
