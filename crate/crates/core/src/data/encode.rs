use super::vocab::{BOS, EOS, PAD};
use super::{DataError, SentenceInstance, Track, VocabSet, Vocabulary};

/// Feature indices of one context position. `lemma`/`msd` are populated in
/// Track 1 only; inside Track 1, an unavailable annotation falls back to
/// the PAD index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextToken {
    pub form: usize,
    pub lemma: Option<usize>,
    pub msd: Option<Vec<usize>>,
}

/// Index-level view of a [`SentenceInstance`], ready for the network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedInstance {
    pub language: String,
    /// Context positions before the target, sentence order.
    pub past: Vec<ContextToken>,
    /// Context positions after the target, sentence order.
    pub future: Vec<ContextToken>,
    /// BOS .. lemma characters .. EOS.
    pub lemma_chars: Vec<usize>,
    /// Character count of the lemma itself (drives the decode length cap).
    pub lemma_len: usize,
    /// BOS .. gold form characters .. EOS; training/dev only.
    pub gold_chars: Option<Vec<usize>>,
    /// Gold MSD components in the shared inventory; Track 1 training only.
    pub gold_msd: Option<Vec<usize>>,
}

fn encode_context_token(
    token: &super::Token,
    bundle: &super::VocabBundle,
    track: Track,
) -> ContextToken {
    let form = token
        .form
        .as_deref()
        .map(|f| bundle.words.lookup(f))
        .unwrap_or(PAD);
    match track {
        Track::Two => ContextToken {
            form,
            lemma: None,
            msd: None,
        },
        Track::One => {
            let lemma = token
                .lemma
                .as_deref()
                .map(|l| bundle.lemmas.lookup(l))
                .unwrap_or(PAD);
            let msd = match &token.msd {
                Some(tag) => tag
                    .components
                    .iter()
                    .map(|c| bundle.msd_components.lookup(c))
                    .collect(),
                None => vec![PAD],
            };
            ContextToken {
                form,
                lemma: Some(lemma),
                msd: Some(msd),
            }
        }
    }
}

pub fn chars_with_markers(vocab: &Vocabulary, text: &str) -> Vec<usize> {
    let mut out = vec![BOS];
    out.extend(text.chars().map(|c| vocab.lookup(&c.to_string())));
    out.push(EOS);
    out
}

/// Map surface strings to index sequences. Unseen symbols become UNK;
/// Track 2 context positions carry the form index only.
pub fn encode_instance(
    instance: &SentenceInstance,
    vocabs: &VocabSet,
    track: Track,
) -> Result<EncodedInstance, DataError> {
    let bundle = vocabs
        .bundle(&instance.language)
        .ok_or_else(|| DataError::UnknownLanguage(instance.language.clone()))?;

    let past = instance.tokens[..instance.target_index]
        .iter()
        .map(|t| encode_context_token(t, bundle, track))
        .collect();
    let future = instance.tokens[instance.target_index + 1..]
        .iter()
        .map(|t| encode_context_token(t, bundle, track))
        .collect();

    let lemma = instance.target_lemma();
    let lemma_chars = chars_with_markers(&bundle.chars, lemma);
    let gold_chars = instance
        .gold_form
        .as_deref()
        .map(|g| chars_with_markers(&bundle.chars, g));
    let gold_msd = instance.gold_msd.as_ref().map(|tag| {
        tag.components
            .iter()
            .map(|c| vocabs.shared_msd.lookup(c))
            .collect()
    });

    Ok(EncodedInstance {
        language: instance.language.clone(),
        past,
        future,
        lemma_chars,
        lemma_len: lemma.chars().count(),
        gold_chars,
        gold_msd,
    })
}

/// Inverse of [`chars_with_markers`] up to UNK; stops at EOS.
pub fn decode_chars(vocab: &Vocabulary, indices: &[usize]) -> String {
    indices
        .iter()
        .take_while(|&&i| i != EOS)
        .filter(|&&i| i != BOS)
        .map(|&i| vocab.symbol(i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::vocab::{build_vocabularies, UNK};
    use crate::data::{parse_answers, parse_str, attach_answers};

    fn example() -> Vec<SentenceInstance> {
        let mut instances = parse_str(
            crate::data::parse::fixtures::EXAMPLE_SENTENCE,
            Track::One,
            "en",
            "test",
        )
        .unwrap();
        let answers =
            parse_answers(crate::data::parse::fixtures::EXAMPLE_ANSWER, "test.ans").unwrap();
        attach_answers(&mut instances, &answers).unwrap();
        instances
    }

    #[test]
    fn lemma_is_wrapped_in_markers() {
        let instances = example();
        let vocabs = build_vocabularies(&instances, Track::One);
        let enc = encode_instance(&instances[0], &vocabs, Track::One).unwrap();
        let chars = &vocabs.per_language["en"].chars;
        assert_eq!(enc.lemma_chars[0], BOS);
        assert_eq!(*enc.lemma_chars.last().unwrap(), EOS);
        assert_eq!(enc.lemma_chars.len(), 2 + 4);
        assert_eq!(enc.lemma_len, 4);
        assert_eq!(decode_chars(chars, &enc.lemma_chars), "make");
        assert_eq!(
            decode_chars(chars, enc.gold_chars.as_ref().unwrap()),
            "made"
        );
    }

    #[test]
    fn unseen_characters_map_to_unk() {
        let instances = example();
        let vocabs = build_vocabularies(&instances, Track::One);
        let mut odd = instances[0].clone();
        odd.tokens[2].lemma = Some("møke".into());
        let enc = encode_instance(&odd, &vocabs, Track::One).unwrap();
        assert_eq!(enc.lemma_chars[2], UNK);
        assert_ne!(enc.lemma_chars[1], UNK);
    }

    #[test]
    fn track_two_has_no_context_annotations() {
        let text = "We\t_\t_\nwere\t_\t_\n_\tmake\t_\nto\t_\t_\n";
        let instances = parse_str(text, Track::Two, "en", "test").unwrap();
        let vocabs = build_vocabularies(&instances, Track::Two);
        let enc = encode_instance(&instances[0], &vocabs, Track::Two).unwrap();
        assert_eq!(enc.past.len(), 2);
        assert_eq!(enc.future.len(), 1);
        for tok in enc.past.iter().chain(enc.future.iter()) {
            assert!(tok.lemma.is_none());
            assert!(tok.msd.is_none());
        }
    }

    #[test]
    fn track_one_unavailable_annotation_falls_back_to_pad() {
        let text = "We\t_\t_\n_\tmake\t_\n";
        let instances = parse_str(text, Track::One, "en", "test").unwrap();
        let vocabs = build_vocabularies(&instances, Track::One);
        let enc = encode_instance(&instances[0], &vocabs, Track::One).unwrap();
        assert_eq!(enc.past[0].lemma, Some(PAD));
        assert_eq!(enc.past[0].msd, Some(vec![PAD]));
    }

    #[test]
    fn gold_msd_uses_shared_inventory() {
        let instances = example();
        let vocabs = build_vocabularies(&instances, Track::One);
        let enc = encode_instance(&instances[0], &vocabs, Track::One).unwrap();
        let idxs = enc.gold_msd.unwrap();
        let names: Vec<&str> = idxs.iter().map(|&i| vocabs.shared_msd.symbol(i)).collect();
        assert_eq!(names, vec!["V", "PST", "V.PTCP", "PASS"]);
    }
}
