use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::vocab::{BOS, DROP, EOS, PAD};
use crate::data::{ContextToken, EncodedInstance, Track};
use crate::numerics::{dropout_mask, lstm_step, Tape, Var};

use super::params::{AttentionVars, LangVars, ModelVars, SharedVars};
use super::{ContextMode, ModelConfig, ModelError};

/// Decoding length caps. Forms may be at most twice the lemma length plus
/// a margin; MSD tags at most this many components.
pub fn form_max_len(lemma_len: usize) -> usize {
    2 * lemma_len + 10
}
pub const MSD_MAX_COMPONENTS: usize = 10;

/// Stochastic training behavior. Inference is deterministic: no dropout,
/// no word dropout.
pub enum Mode<'r> {
    Train {
        dropout: f64,
        word_drop: f64,
        rng: &'r mut ChaCha8Rng,
    },
    Infer,
}

/// One forward evaluation: a tape plus the noise mode.
pub struct Forward<'t, 'r> {
    pub tape: &'t mut Tape,
    pub mode: Mode<'r>,
}

impl<'t, 'r> Forward<'t, 'r> {
    pub fn new(tape: &'t mut Tape, mode: Mode<'r>) -> Self {
        Forward { tape, mode }
    }

    pub fn infer(tape: &'t mut Tape) -> Self {
        Forward {
            tape,
            mode: Mode::Infer,
        }
    }

    /// Replace a context word-form index with DROP at the word-drop rate.
    fn word_index(&mut self, idx: usize) -> usize {
        if let Mode::Train { word_drop, rng, .. } = &mut self.mode {
            if rng.random::<f64>() < *word_drop {
                return DROP;
            }
        }
        idx
    }

    /// Inverted dropout on an LSTM output vector (train mode only).
    fn lstm_output(&mut self, h: Var) -> Result<Var, ModelError> {
        match &mut self.mode {
            Mode::Train { dropout, rng, .. } if *dropout > 0.0 => {
                let mask = dropout_mask(self.tape.shape(h), *dropout, rng)?;
                let mask = self.tape.constant(mask);
                Ok(self.tape.mul(h, mask)?)
            }
            _ => Ok(h),
        }
    }
}

/// Mean of the MSD component embeddings: fixed width for any component count.
fn msd_mean_embedding(
    tape: &mut Tape,
    msd_emb: Var,
    components: &[usize],
) -> Result<Var, ModelError> {
    let rows: Vec<Var> = components
        .iter()
        .map(|&c| tape.embedding_row(msd_emb, c))
        .collect::<Result<_, _>>()?;
    let total = if rows.len() == 1 {
        rows[0]
    } else {
        let mut acc = rows[0];
        for &r in &rows[1..] {
            acc = tape.add(acc, r)?;
        }
        acc
    };
    Ok(tape.scale_const(total, 1.0 / components.len() as f64))
}

/// Concatenated feature embedding of one context position: word form
/// (subject to word dropout), plus lemma and MSD in Track 1.
fn context_features(
    fx: &mut Forward,
    lang: &LangVars,
    token: &ContextToken,
) -> Result<Var, ModelError> {
    let form_idx = fx.word_index(token.form);
    let form = fx.tape.embedding_row(lang.word_emb, form_idx)?;
    let mut parts = vec![form];
    if let (Some(lemma_idx), Some(lemma_emb)) = (token.lemma, lang.lemma_emb) {
        parts.push(fx.tape.embedding_row(lemma_emb, lemma_idx)?);
    }
    if let (Some(msd), Some(msd_emb)) = (&token.msd, lang.msd_emb) {
        parts.push(msd_mean_embedding(fx.tape, msd_emb, msd)?);
    }
    Ok(fx.tape.concat(&parts))
}

fn pad_token(track: Track) -> ContextToken {
    match track {
        Track::Two => ContextToken {
            form: PAD,
            lemma: None,
            msd: None,
        },
        Track::One => ContextToken {
            form: PAD,
            lemma: Some(PAD),
            msd: Some(vec![PAD]),
        },
    }
}

fn run_context_lstm(
    fx: &mut Forward,
    lang: &LangVars,
    lstm: &crate::numerics::LstmVars,
    tokens: impl Iterator<Item = ContextToken>,
    hidden: usize,
) -> Result<Var, ModelError> {
    let mut h = fx.tape.zeros(vec![hidden]);
    let mut c = fx.tape.zeros(vec![hidden]);
    let mut any = false;
    for token in tokens {
        let x = context_features(fx, lang, &token)?;
        let (nh, nc) = lstm_step(fx.tape, lstm, x, h, c)?;
        h = nh;
        c = nc;
        any = true;
    }
    if any {
        fx.lstm_output(h)
    } else {
        // empty side contributes the zero vector
        Ok(h)
    }
}

/// Full-context encoding: forward LSTM over the past, backward LSTM over
/// the future, final hidden states concatenated into a fixed-size vector.
pub fn encode_context_full(
    fx: &mut Forward,
    lang: &LangVars,
    instance: &EncodedInstance,
    config: &ModelConfig,
) -> Result<Var, ModelError> {
    let fwd = lang.ctx_fwd.expect("full_lstm params");
    let bwd = lang.ctx_bwd.expect("full_lstm params");
    let h = config.lstm_dim;
    let past = run_context_lstm(fx, lang, &fwd, instance.past.iter().cloned(), h)?;
    let future = run_context_lstm(fx, lang, &bwd, instance.future.iter().rev().cloned(), h)?;
    Ok(fx.tape.concat(&[past, future]))
}

/// Baseline context: embeddings of the immediately adjacent tokens only,
/// PAD features at sentence edges.
pub fn encode_context_window2(
    fx: &mut Forward,
    lang: &LangVars,
    instance: &EncodedInstance,
    config: &ModelConfig,
) -> Result<Var, ModelError> {
    let prev = instance
        .past
        .last()
        .cloned()
        .unwrap_or_else(|| pad_token(config.track));
    let next = instance
        .future
        .first()
        .cloned()
        .unwrap_or_else(|| pad_token(config.track));
    let prev_feat = context_features(fx, lang, &prev)?;
    let next_feat = context_features(fx, lang, &next)?;
    Ok(fx.tape.concat(&[prev_feat, next_feat]))
}

pub fn context_vector(
    fx: &mut Forward,
    lang: &LangVars,
    instance: &EncodedInstance,
    config: &ModelConfig,
) -> Result<Var, ModelError> {
    match config.context_mode {
        ContextMode::FullLstm => encode_context_full(fx, lang, instance, config),
        ContextMode::Window2 => encode_context_window2(fx, lang, instance, config),
    }
}

/// Character encoder output: one state per lemma character (with markers).
pub struct Encoding {
    pub states: Vec<Var>,
    pub final_h: Var,
    pub final_c: Var,
}

/// Encode the lemma characters; each character embedding is concatenated
/// with a copy of the context vector before entering the LSTM.
pub fn encode_lemma(
    fx: &mut Forward,
    lang: &LangVars,
    lemma_chars: &[usize],
    context: Var,
) -> Result<Encoding, ModelError> {
    let hd = lang.lemma_enc.hidden;
    let mut h = fx.tape.zeros(vec![hd]);
    let mut c = fx.tape.zeros(vec![hd]);
    let mut states = Vec::with_capacity(lemma_chars.len());
    for &ch in lemma_chars {
        let emb = fx.tape.embedding_row(lang.char_emb, ch)?;
        let x = fx.tape.concat(&[emb, context]);
        let (nh, nc) = lstm_step(fx.tape, &lang.lemma_enc, x, h, c)?;
        h = nh;
        c = nc;
        states.push(fx.lstm_output(h)?);
    }
    Ok(Encoding {
        final_h: *states.last().expect("lemma includes BOS/EOS"),
        final_c: c,
        states,
    })
}

/// Additive attention over encoder states:
/// score_i = v . tanh(W [query ; state_i]); weights = softmax(scores);
/// context = sum_i weights_i state_i.
pub fn attend(
    tape: &mut Tape,
    attn: &AttentionVars,
    query: Var,
    states: &[Var],
) -> Result<(Var, Var), ModelError> {
    let mut scores = Vec::with_capacity(states.len());
    for &s in states {
        let qs = tape.concat(&[query, s]);
        let a = tape.matvec(attn.w, qs)?;
        let t = tape.tanh(a);
        scores.push(tape.dot(attn.v, t)?);
    }
    let score_vec = tape.concat(&scores);
    let weights = tape.softmax(score_vec);
    let context = tape.weighted_sum(weights, states)?;
    Ok((context, weights))
}

fn argmax(data: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in data.iter().enumerate() {
        if v > data[best] {
            best = i;
        }
    }
    best
}

fn argmax_excluding(data: &[f64], skip: usize) -> usize {
    let mut best = if skip == 0 { 1 } else { 0 };
    for (i, &v) in data.iter().enumerate() {
        if i != skip && v > data[best] {
            best = i;
        }
    }
    best
}

/// Greedy decode output: predicted symbol indices (EOS excluded) and
/// whether the length cap cut the sequence off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub symbols: Vec<usize>,
    pub truncated: bool,
}

/// One decoder step shared by teacher forcing and greedy search.
#[allow(clippy::too_many_arguments)]
fn form_decoder_step(
    fx: &mut Forward,
    lang: &LangVars,
    enc_states: &[Var],
    prev_symbol: usize,
    h: Var,
    c: Var,
) -> Result<(Var, Var, Var), ModelError> {
    let (attn_ctx, _weights) = attend(fx.tape, &lang.attn, h, enc_states)?;
    let emb = fx.tape.embedding_row(lang.char_emb, prev_symbol)?;
    let x = fx.tape.concat(&[emb, attn_ctx]);
    let (nh, nc) = lstm_step(fx.tape, &lang.form_dec, x, h, c)?;
    let out = fx.lstm_output(nh)?;
    let proj = fx.tape.matvec(lang.char_out.w, out)?;
    let logits = fx.tape.add(proj, lang.char_out.b)?;
    Ok((logits, nh, nc))
}

/// Teacher-forced character decoding; emits one logit vector per gold
/// symbol (the gold sequence excludes BOS and ends with EOS).
pub fn decode_form_teacher(
    fx: &mut Forward,
    lang: &LangVars,
    enc: &Encoding,
    gold: &[usize],
) -> Result<Vec<Var>, ModelError> {
    let mut h = enc.final_h;
    let mut c = enc.final_c;
    let mut logits = Vec::with_capacity(gold.len());
    for t in 0..gold.len() {
        let prev = if t == 0 { BOS } else { gold[t - 1] };
        let (l, nh, nc) = form_decoder_step(fx, lang, &enc.states, prev, h, c)?;
        logits.push(l);
        h = nh;
        c = nc;
    }
    Ok(logits)
}

/// Greedy character decoding: argmax at each step, stop at EOS or the cap.
pub fn decode_form_greedy(
    fx: &mut Forward,
    lang: &LangVars,
    enc: &Encoding,
    max_len: usize,
) -> Result<Decoded, ModelError> {
    let mut h = enc.final_h;
    let mut c = enc.final_c;
    let mut prev = BOS;
    let mut symbols = Vec::new();
    loop {
        if symbols.len() == max_len {
            return Ok(Decoded {
                symbols,
                truncated: true,
            });
        }
        let (logits, nh, nc) = form_decoder_step(fx, lang, &enc.states, prev, h, c)?;
        let next = argmax(&fx.tape.value(logits).data);
        h = nh;
        c = nc;
        if next == EOS {
            return Ok(Decoded {
                symbols,
                truncated: false,
            });
        }
        symbols.push(next);
        prev = next;
    }
}

fn msd_decoder_init(
    fx: &mut Forward,
    shared: &SharedVars,
    context: Var,
) -> Result<(Var, Var), ModelError> {
    let proj = fx.tape.matvec(shared.init_proj.w, context)?;
    let pre = fx.tape.add(proj, shared.init_proj.b)?;
    let h = fx.tape.tanh(pre);
    let c = fx.tape.zeros(vec![shared.msd_dec.hidden]);
    Ok((h, c))
}

fn msd_decoder_step(
    fx: &mut Forward,
    shared: &SharedVars,
    prev_symbol: usize,
    h: Var,
    c: Var,
) -> Result<(Var, Var, Var), ModelError> {
    let emb = fx.tape.embedding_row(shared.comp_emb, prev_symbol)?;
    let (nh, nc) = lstm_step(fx.tape, &shared.msd_dec, emb, h, c)?;
    let out = fx.lstm_output(nh)?;
    let proj = fx.tape.matvec(shared.msd_out.w, out)?;
    let logits = fx.tape.add(proj, shared.msd_out.b)?;
    Ok((logits, nh, nc))
}

/// Teacher-forced MSD decoding, conditioned on the context vector through
/// a learned projection. The decoder receives no language identity.
pub fn decode_msd_teacher(
    fx: &mut Forward,
    shared: &SharedVars,
    context: Var,
    gold: &[usize],
) -> Result<Vec<Var>, ModelError> {
    let (mut h, mut c) = msd_decoder_init(fx, shared, context)?;
    let mut logits = Vec::with_capacity(gold.len());
    for t in 0..gold.len() {
        let prev = if t == 0 { BOS } else { gold[t - 1] };
        let (l, nh, nc) = msd_decoder_step(fx, shared, prev, h, c)?;
        logits.push(l);
        h = nh;
        c = nc;
    }
    Ok(logits)
}

pub fn decode_msd_greedy(
    fx: &mut Forward,
    shared: &SharedVars,
    context: Var,
    max_components: usize,
) -> Result<Decoded, ModelError> {
    let (mut h, mut c) = msd_decoder_init(fx, shared, context)?;
    let mut prev = BOS;
    let mut symbols = Vec::new();
    loop {
        if symbols.len() == max_components {
            return Ok(Decoded {
                symbols,
                truncated: true,
            });
        }
        let (logits, nh, nc) = msd_decoder_step(fx, shared, prev, h, c)?;
        // at least one component is always emitted before EOS
        let next = if symbols.is_empty() {
            argmax_excluding(&fx.tape.value(logits).data, EOS)
        } else {
            argmax(&fx.tape.value(logits).data)
        };
        h = nh;
        c = nc;
        if next == EOS {
            return Ok(Decoded {
                symbols,
                truncated: false,
            });
        }
        symbols.push(next);
        prev = next;
    }
}

/// Sum of per-character cross-entropies (teacher forcing), plus the
/// auxiliary per-component MSD cross-entropies when enabled. The two
/// losses are added without any weighting.
pub fn compute_loss(
    fx: &mut Forward,
    vars: &ModelVars,
    instance: &EncodedInstance,
    config: &ModelConfig,
) -> Result<Var, ModelError> {
    let lang = vars.language(&instance.language)?;
    let gold_chars = instance.gold_chars.as_ref().ok_or(ModelError::MissingGold)?;
    let context = context_vector(fx, lang, instance, config)?;
    let enc = encode_lemma(fx, lang, &instance.lemma_chars, context)?;

    let gold_out = &gold_chars[1..]; // predict everything after BOS
    let logits = decode_form_teacher(fx, lang, &enc, gold_out)?;
    let mut terms = Vec::with_capacity(gold_out.len());
    for (l, &target) in logits.iter().zip(gold_out.iter()) {
        terms.push(fx.tape.cross_entropy(*l, target)?);
    }
    let main = fx.tape.add_all(&terms)?;

    if !config.aux_msd {
        return Ok(main);
    }
    let shared = vars.shared.as_ref().ok_or(ModelError::NoSharedDecoder)?;
    let mut gold_msd = instance
        .gold_msd
        .clone()
        .ok_or(ModelError::MissingGold)?;
    gold_msd.push(EOS);
    let msd_logits = decode_msd_teacher(fx, shared, context, &gold_msd)?;
    let mut aux_terms = Vec::with_capacity(gold_msd.len());
    for (l, &target) in msd_logits.iter().zip(gold_msd.iter()) {
        aux_terms.push(fx.tape.cross_entropy(*l, target)?);
    }
    let aux = fx.tape.add_all(&aux_terms)?;
    Ok(fx.tape.add(main, aux)?)
}
