use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{SentenceInstance, Track};

/// Reserved indices shared by every vocabulary.
pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
pub const DROP: usize = 4;

const SPECIALS: [&str; 5] = ["<pad>", "<bos>", "<eos>", "<unk>", "<drop>"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VocabKind {
    Char,
    Word,
    Lemma,
    MsdComponent,
}

/// Bijective symbol/index map. Indices 0-4 are the reserved specials;
/// the remainder is lexicographically sorted, which makes builds
/// reproducible and lets lookup binary-search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub kind: VocabKind,
    symbols: Vec<String>,
}

impl Vocabulary {
    pub fn from_symbols<I, S>(kind: VocabKind, symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = symbols
            .into_iter()
            .map(Into::into)
            .filter(|s| !SPECIALS.contains(&s.as_str()))
            .collect();
        let mut all: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        all.extend(set);
        Vocabulary { kind, symbols: all }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false // specials are always present
    }

    /// Index of a symbol, falling back to UNK for unseen symbols.
    pub fn lookup(&self, symbol: &str) -> usize {
        if let Some(i) = SPECIALS.iter().position(|s| *s == symbol) {
            return i;
        }
        match self.symbols[SPECIALS.len()..].binary_search_by(|s| s.as_str().cmp(symbol)) {
            Ok(i) => i + SPECIALS.len(),
            Err(_) => UNK,
        }
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.lookup(symbol) != UNK || symbol == SPECIALS[UNK]
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    /// The sorted-tail invariant; checked when loading checkpoints.
    pub fn is_well_formed(&self) -> bool {
        self.symbols.len() >= SPECIALS.len()
            && self.symbols[..SPECIALS.len()]
                .iter()
                .zip(SPECIALS.iter())
                .all(|(a, b)| a == b)
            && self.symbols[SPECIALS.len()..].windows(2).all(|w| w[0] < w[1])
    }
}

/// Per-language vocabularies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabBundle {
    pub chars: Vocabulary,
    pub words: Vocabulary,
    pub lemmas: Vocabulary,
    pub msd_components: Vocabulary,
}

/// All vocabularies of a (possibly multilingual) model. The MSD-component
/// inventory used by the auxiliary decoder is shared across languages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabSet {
    pub per_language: BTreeMap<String, VocabBundle>,
    pub shared_msd: Vocabulary,
}

impl VocabSet {
    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.per_language.keys().map(String::as_str)
    }

    pub fn bundle(&self, language: &str) -> Option<&VocabBundle> {
        self.per_language.get(language)
    }
}

/// Build per-language {char, word, lemma, msd-component} vocabularies plus
/// the shared msd-component vocabulary (the union over all languages).
pub fn build_vocabularies(instances: &[SentenceInstance], track: Track) -> VocabSet {
    let mut chars: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut words: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut lemmas: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut msds: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();

    for inst in instances {
        let lang = inst.language.as_str();
        let chars = chars.entry(lang).or_default();
        let words = words.entry(lang).or_default();
        let lemmas = lemmas.entry(lang).or_default();
        let msds = msds.entry(lang).or_default();

        chars.extend(inst.target_lemma().chars().map(String::from));
        if let Some(gold) = &inst.gold_form {
            chars.extend(gold.chars().map(String::from));
            words.insert(gold.clone());
        }
        if let Some(gold_msd) = &inst.gold_msd {
            msds.extend(gold_msd.components.iter().cloned());
        }
        for token in &inst.tokens {
            if let Some(form) = &token.form {
                words.insert(form.clone());
            }
            if track == Track::One {
                if let Some(lemma) = &token.lemma {
                    lemmas.insert(lemma.clone());
                }
                if let Some(msd) = &token.msd {
                    msds.extend(msd.components.iter().cloned());
                }
            }
        }
        // the target lemma feeds the character encoder in both tracks
        lemmas.insert(inst.target_lemma().to_string());
    }

    let shared: BTreeSet<String> = msds.values().flatten().cloned().collect();
    let per_language = chars
        .keys()
        .map(|lang| {
            (
                lang.to_string(),
                VocabBundle {
                    chars: Vocabulary::from_symbols(VocabKind::Char, chars[lang].iter().cloned()),
                    words: Vocabulary::from_symbols(VocabKind::Word, words[lang].iter().cloned()),
                    lemmas: Vocabulary::from_symbols(VocabKind::Lemma, lemmas[lang].iter().cloned()),
                    msd_components: Vocabulary::from_symbols(
                        VocabKind::MsdComponent,
                        msds[lang].iter().cloned(),
                    ),
                },
            )
        })
        .collect();

    VocabSet {
        per_language,
        shared_msd: Vocabulary::from_symbols(VocabKind::MsdComponent, shared),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{MsdTag, Token};

    fn instance(language: &str, lemma: &str, gold: &str, msd: &str) -> SentenceInstance {
        SentenceInstance {
            tokens: vec![
                Token {
                    form: Some("x".into()),
                    lemma: Some("x".into()),
                    msd: Some(MsdTag::parse("N;SG").unwrap()),
                },
                Token {
                    form: None,
                    lemma: Some(lemma.into()),
                    msd: None,
                },
            ],
            target_index: 1,
            gold_form: Some(gold.into()),
            gold_msd: Some(MsdTag::parse(msd).unwrap()),
            language: language.into(),
        }
    }

    #[test]
    fn bijective_with_fixed_specials() {
        let v = Vocabulary::from_symbols(VocabKind::Char, ["b", "a", "c"]);
        assert_eq!(v.lookup("<pad>"), PAD);
        assert_eq!(v.lookup("<bos>"), BOS);
        assert_eq!(v.lookup("<eos>"), EOS);
        assert_eq!(v.lookup("<unk>"), UNK);
        assert_eq!(v.lookup("<drop>"), DROP);
        for i in 0..v.len() {
            assert_eq!(v.lookup(v.symbol(i)), i);
        }
        assert_eq!(v.lookup("zzz"), UNK);
        assert!(v.is_well_formed());
    }

    #[test]
    fn char_vocab_covers_lemma_and_gold_form() {
        let set = build_vocabularies(&[instance("en", "go", "went", "V;PST")], Track::One);
        let chars = &set.per_language["en"].chars;
        for c in ["g", "o", "w", "e", "n", "t"] {
            assert!(chars.contains(c), "missing char {c}");
        }
    }

    #[test]
    fn shared_msd_vocab_is_union_over_languages() {
        let set = build_vocabularies(
            &[
                instance("en", "go", "went", "V;PST"),
                instance("sv", "ga", "gick", "V;PRS"),
            ],
            Track::One,
        );
        for comp in ["V", "PST", "PRS"] {
            assert!(set.shared_msd.contains(comp), "missing component {comp}");
        }
        assert!(set.per_language["en"].msd_components.contains("PST"));
        assert!(!set.per_language["en"].msd_components.contains("PRS"));
    }

    #[test]
    fn rebuilding_is_deterministic() {
        let data = vec![
            instance("en", "go", "went", "V;PST"),
            instance("en", "be", "was", "V;PST;SG"),
        ];
        let a = build_vocabularies(&data, Track::One);
        let b = build_vocabularies(&data, Track::One);
        assert_eq!(a, b);
    }

    #[test]
    fn track_two_skips_context_annotations() {
        let set = build_vocabularies(&[instance("en", "go", "went", "V;PST")], Track::Two);
        let bundle = &set.per_language["en"];
        // context lemma "x" only enters in Track 1
        assert!(!bundle.lemmas.contains("x"));
        assert!(bundle.lemmas.contains("go"));
        assert!(!bundle.msd_components.contains("N"));
        // the gold MSD still feeds the shared inventory (answers are Track 1 data,
        // but harmless in Track 2 where the aux decoder is disabled)
        assert!(bundle.words.contains("x"));
    }
}
