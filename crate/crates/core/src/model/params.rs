use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;

use crate::data::VocabSet;
use crate::numerics::{glorot, LstmParams, LstmVars, Tape, Tensor, Var};
use crate::rng::{seeded, Stream};

use super::{ContextMode, ModelConfig, ModelError};
use crate::data::Track;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub w: Tensor,
    pub b: Tensor,
}

impl LinearParams {
    fn init(out_dim: usize, in_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        LinearParams {
            w: glorot(out_dim, in_dim, rng),
            b: Tensor::zeros(vec![out_dim]),
        }
    }

    fn register(&self, tape: &mut Tape, prefix: &str) -> LinearVars {
        LinearVars {
            w: tape.named_leaf(&format!("{prefix}.w"), self.w.clone()),
            b: tape.named_leaf(&format!("{prefix}.b"), self.b.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LinearVars {
    pub w: Var,
    pub b: Var,
}

/// Additive attention: score_i = v . tanh(W [query ; state_i]).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub w: Tensor,
    pub v: Tensor,
}

impl AttentionParams {
    fn init(attn_dim: usize, query_dim: usize, state_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        AttentionParams {
            w: glorot(attn_dim, query_dim + state_dim, rng),
            v: Tensor::vector(glorot(1, attn_dim, rng).data),
        }
    }

    fn register(&self, tape: &mut Tape, prefix: &str) -> AttentionVars {
        AttentionVars {
            w: tape.named_leaf(&format!("{prefix}.w"), self.w.clone()),
            v: tape.named_leaf(&format!("{prefix}.v"), self.v.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AttentionVars {
    pub w: Var,
    pub v: Var,
}

/// Per-language block: embeddings, encoders, form decoder, attention and
/// the character output projection. Optional tensors exist only for the
/// configurations that use them.
#[derive(Debug, Clone, PartialEq)]
pub struct LangParams {
    pub char_emb: Tensor,
    pub word_emb: Tensor,
    pub lemma_emb: Option<Tensor>,
    pub msd_emb: Option<Tensor>,
    pub ctx_fwd: Option<LstmParams>,
    pub ctx_bwd: Option<LstmParams>,
    pub lemma_enc: LstmParams,
    pub form_dec: LstmParams,
    pub attn: AttentionParams,
    pub char_out: LinearParams,
}

/// Auxiliary MSD decoder, shared across all languages of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedParams {
    pub comp_emb: Tensor,
    pub init_proj: LinearParams,
    pub msd_dec: LstmParams,
    pub msd_out: LinearParams,
}

/// All trainable tensors of a model. Languages own their blocks; the MSD
/// decoder is a single block referenced by every language.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub languages: BTreeMap<String, LangParams>,
    pub shared: Option<SharedParams>,
}

impl ModelParams {
    pub fn init(config: &ModelConfig, vocabs: &VocabSet, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = seeded(seed, Stream::ParamInit);
        let e = config.embed_dim;
        let h = config.lstm_dim;

        let mut languages = BTreeMap::new();
        // iterate sorted so the draw order is independent of config order
        let mut langs = config.languages.clone();
        langs.sort();
        for lang in &langs {
            let bundle = vocabs
                .bundle(lang)
                .ok_or_else(|| ModelError::UnknownLanguage(lang.clone()))?;
            let track1 = config.track == Track::One;
            let full = config.context_mode == ContextMode::FullLstm;
            let ctx_feat = config.context_feature_dim();
            let ctx_dim = config.context_vector_dim();
            languages.insert(
                lang.clone(),
                LangParams {
                    char_emb: glorot(bundle.chars.len(), e, &mut rng),
                    word_emb: glorot(bundle.words.len(), e, &mut rng),
                    lemma_emb: track1.then(|| glorot(bundle.lemmas.len(), e, &mut rng)),
                    msd_emb: track1.then(|| glorot(bundle.msd_components.len(), e, &mut rng)),
                    ctx_fwd: full.then(|| LstmParams::init(ctx_feat, h, &mut rng)),
                    ctx_bwd: full.then(|| LstmParams::init(ctx_feat, h, &mut rng)),
                    lemma_enc: LstmParams::init(e + ctx_dim, h, &mut rng),
                    form_dec: LstmParams::init(e + h, h, &mut rng),
                    attn: AttentionParams::init(config.attn_dim, h, h, &mut rng),
                    char_out: LinearParams::init(bundle.chars.len(), h, &mut rng),
                },
            );
        }

        let shared = if config.aux_msd {
            Some(SharedParams {
                comp_emb: glorot(vocabs.shared_msd.len(), e, &mut rng),
                init_proj: LinearParams::init(h, config.context_vector_dim(), &mut rng),
                msd_dec: LstmParams::init(e, h, &mut rng),
                msd_out: LinearParams::init(vocabs.shared_msd.len(), h, &mut rng),
            })
        } else {
            None
        };

        Ok(ModelParams { languages, shared })
    }

    /// Visit every tensor with its canonical name, in a fixed order.
    pub fn visit(&self, f: &mut dyn FnMut(String, &Tensor)) {
        for (lang, p) in &self.languages {
            let n = |field: &str| format!("lang.{lang}.{field}");
            f(n("char_emb"), &p.char_emb);
            f(n("word_emb"), &p.word_emb);
            if let Some(t) = &p.lemma_emb {
                f(n("lemma_emb"), t);
            }
            if let Some(t) = &p.msd_emb {
                f(n("msd_emb"), t);
            }
            if let Some(l) = &p.ctx_fwd {
                f(n("ctx_fwd.w"), &l.w);
                f(n("ctx_fwd.b"), &l.b);
            }
            if let Some(l) = &p.ctx_bwd {
                f(n("ctx_bwd.w"), &l.w);
                f(n("ctx_bwd.b"), &l.b);
            }
            f(n("lemma_enc.w"), &p.lemma_enc.w);
            f(n("lemma_enc.b"), &p.lemma_enc.b);
            f(n("form_dec.w"), &p.form_dec.w);
            f(n("form_dec.b"), &p.form_dec.b);
            f(n("attn.w"), &p.attn.w);
            f(n("attn.v"), &p.attn.v);
            f(n("char_out.w"), &p.char_out.w);
            f(n("char_out.b"), &p.char_out.b);
        }
        if let Some(s) = &self.shared {
            f("shared.comp_emb".into(), &s.comp_emb);
            f("shared.init_proj.w".into(), &s.init_proj.w);
            f("shared.init_proj.b".into(), &s.init_proj.b);
            f("shared.msd_dec.w".into(), &s.msd_dec.w);
            f("shared.msd_dec.b".into(), &s.msd_dec.b);
            f("shared.msd_out.w".into(), &s.msd_out.w);
            f("shared.msd_out.b".into(), &s.msd_out.b);
        }
    }

    pub fn visit_mut(&mut self, f: &mut dyn FnMut(String, &mut Tensor)) {
        for (lang, p) in &mut self.languages {
            let n = |field: &str| format!("lang.{lang}.{field}");
            f(n("char_emb"), &mut p.char_emb);
            f(n("word_emb"), &mut p.word_emb);
            if let Some(t) = &mut p.lemma_emb {
                f(n("lemma_emb"), t);
            }
            if let Some(t) = &mut p.msd_emb {
                f(n("msd_emb"), t);
            }
            if let Some(l) = &mut p.ctx_fwd {
                f(n("ctx_fwd.w"), &mut l.w);
                f(n("ctx_fwd.b"), &mut l.b);
            }
            if let Some(l) = &mut p.ctx_bwd {
                f(n("ctx_bwd.w"), &mut l.w);
                f(n("ctx_bwd.b"), &mut l.b);
            }
            f(n("lemma_enc.w"), &mut p.lemma_enc.w);
            f(n("lemma_enc.b"), &mut p.lemma_enc.b);
            f(n("form_dec.w"), &mut p.form_dec.w);
            f(n("form_dec.b"), &mut p.form_dec.b);
            f(n("attn.w"), &mut p.attn.w);
            f(n("attn.v"), &mut p.attn.v);
            f(n("char_out.w"), &mut p.char_out.w);
            f(n("char_out.b"), &mut p.char_out.b);
        }
        if let Some(s) = &mut self.shared {
            f("shared.comp_emb".into(), &mut s.comp_emb);
            f("shared.init_proj.w".into(), &mut s.init_proj.w);
            f("shared.init_proj.b".into(), &mut s.init_proj.b);
            f("shared.msd_dec.w".into(), &mut s.msd_dec.w);
            f("shared.msd_dec.b".into(), &mut s.msd_dec.b);
            f("shared.msd_out.w".into(), &mut s.msd_out.w);
            f("shared.msd_out.b".into(), &mut s.msd_out.b);
        }
    }

    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |name, _| out.push(name));
        out
    }

    pub fn tensor(&self, name: &str) -> Option<Tensor> {
        let mut found = None;
        self.visit(&mut |n, t| {
            if n == name {
                found = Some(t.clone());
            }
        });
        found
    }

    pub fn total_parameters(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, t| n += t.numel());
        n
    }

    /// Register every tensor on a tape as a named leaf.
    pub fn register(&self, tape: &mut Tape) -> ModelVars {
        let languages = self
            .languages
            .iter()
            .map(|(lang, p)| {
                let n = |field: &str| format!("lang.{lang}.{field}");
                (
                    lang.clone(),
                    LangVars {
                        char_emb: tape.named_leaf(&n("char_emb"), p.char_emb.clone()),
                        word_emb: tape.named_leaf(&n("word_emb"), p.word_emb.clone()),
                        lemma_emb: p
                            .lemma_emb
                            .as_ref()
                            .map(|t| tape.named_leaf(&n("lemma_emb"), t.clone())),
                        msd_emb: p
                            .msd_emb
                            .as_ref()
                            .map(|t| tape.named_leaf(&n("msd_emb"), t.clone())),
                        ctx_fwd: p.ctx_fwd.as_ref().map(|l| l.register(tape, &n("ctx_fwd"))),
                        ctx_bwd: p.ctx_bwd.as_ref().map(|l| l.register(tape, &n("ctx_bwd"))),
                        lemma_enc: p.lemma_enc.register(tape, &n("lemma_enc")),
                        form_dec: p.form_dec.register(tape, &n("form_dec")),
                        attn: p.attn.register(tape, &n("attn")),
                        char_out: p.char_out.register(tape, &n("char_out")),
                    },
                )
            })
            .collect();
        let shared = self.shared.as_ref().map(|s| SharedVars {
            comp_emb: tape.named_leaf("shared.comp_emb", s.comp_emb.clone()),
            init_proj: s.init_proj.register(tape, "shared.init_proj"),
            msd_dec: s.msd_dec.register(tape, "shared.msd_dec"),
            msd_out: s.msd_out.register(tape, "shared.msd_out"),
        });
        ModelVars { languages, shared }
    }
}

#[derive(Debug, Clone)]
pub struct LangVars {
    pub char_emb: Var,
    pub word_emb: Var,
    pub lemma_emb: Option<Var>,
    pub msd_emb: Option<Var>,
    pub ctx_fwd: Option<LstmVars>,
    pub ctx_bwd: Option<LstmVars>,
    pub lemma_enc: LstmVars,
    pub form_dec: LstmVars,
    pub attn: AttentionVars,
    pub char_out: LinearVars,
}

#[derive(Debug, Clone)]
pub struct SharedVars {
    pub comp_emb: Var,
    pub init_proj: LinearVars,
    pub msd_dec: LstmVars,
    pub msd_out: LinearVars,
}

#[derive(Debug, Clone)]
pub struct ModelVars {
    pub languages: BTreeMap<String, LangVars>,
    pub shared: Option<SharedVars>,
}

impl ModelVars {
    pub fn language(&self, lang: &str) -> Result<&LangVars, ModelError> {
        self.languages
            .get(lang)
            .ok_or_else(|| ModelError::UnknownLanguage(lang.to_string()))
    }
}
