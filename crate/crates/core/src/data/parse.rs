//! Sentence-file I/O.
//!
//! Three tab-separated columns per token line: FORM, LEMMA, MSD, with a
//! blank line between sentences. "_" marks the covered target form and
//! any unavailable field. Gold answers live in a parallel answers file
//! ("FORM<TAB>MSD", one line per instance in order); `parse_file` picks
//! up `<path>.ans` automatically when present.

use std::path::Path;

use super::{DataError, MsdTag, SentenceInstance, Token, Track};

const HOLE: &str = "_";

/// Answers-file suffix appended to a sentence file's path.
pub const ANSWERS_SUFFIX: &str = ".ans";

pub fn parse_file(
    path: &Path,
    track: Track,
    language: &str,
) -> Result<Vec<SentenceInstance>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let label = path.display().to_string();
    let mut instances = parse_str(&text, track, language, &label)?;

    let ans_path = answers_path(path);
    if ans_path.exists() {
        let ans_text = std::fs::read_to_string(&ans_path).map_err(|source| DataError::Io {
            path: ans_path.display().to_string(),
            source,
        })?;
        let answers = parse_answers(&ans_text, &ans_path.display().to_string())?;
        attach_answers(&mut instances, &answers)?;
    }
    Ok(instances)
}

pub fn answers_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(ANSWERS_SUFFIX);
    std::path::PathBuf::from(s)
}

fn field(s: &str) -> Option<String> {
    if s == HOLE {
        None
    } else {
        Some(s.to_string())
    }
}

pub fn parse_str(
    text: &str,
    track: Track,
    language: &str,
    source: &str,
) -> Result<Vec<SentenceInstance>, DataError> {
    let fail = |line: usize, msg: String| DataError::Format {
        path: source.to_string(),
        line,
        msg,
    };

    let mut instances = Vec::new();
    // (token, line number) pairs of the current block
    let mut block: Vec<(Token, usize)> = Vec::new();

    let finish =
        |block: &mut Vec<(Token, usize)>| -> Result<Option<SentenceInstance>, DataError> {
            if block.is_empty() {
                return Ok(None);
            }
            let start_line = block[0].1;
            let mut target_index = None;
            for (i, (token, line)) in block.iter().enumerate() {
                if token.is_covered() {
                    if target_index.is_some() {
                        return Err(fail(*line, "second covered token in sentence".into()));
                    }
                    if token.lemma.is_none() {
                        return Err(fail(*line, "covered target is missing its lemma".into()));
                    }
                    target_index = Some(i);
                }
            }
            let target_index = target_index
                .ok_or_else(|| fail(start_line, "sentence has no covered token".into()))?;
            let tokens = std::mem::take(block).into_iter().map(|(t, _)| t).collect();
            Ok(Some(SentenceInstance {
                tokens,
                target_index,
                gold_form: None,
                gold_msd: None,
                language: language.to_string(),
            }))
        };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            if let Some(inst) = finish(&mut block)? {
                instances.push(inst);
            }
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 3 {
            return Err(fail(line_no, format!("expected 3 columns, got {}", cols.len())));
        }
        let form = field(cols[0]);
        let lemma = field(cols[1]);
        let msd = match field(cols[2]) {
            Some(tag) => Some(MsdTag::parse(&tag).map_err(|e| fail(line_no, e.to_string()))?),
            None => None,
        };
        if track == Track::Two && form.is_some() && (lemma.is_some() || msd.is_some()) {
            return Err(fail(
                line_no,
                "track 2 context tokens carry word forms only".into(),
            ));
        }
        block.push((Token { form, lemma, msd }, line_no));
    }
    if let Some(inst) = finish(&mut block)? {
        instances.push(inst);
    }
    Ok(instances)
}

/// One "FORM<TAB>MSD" line per instance; "_" for an absent MSD.
pub fn parse_answers(
    text: &str,
    source: &str,
) -> Result<Vec<(String, Option<MsdTag>)>, DataError> {
    let mut answers = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 2 {
            return Err(DataError::Format {
                path: source.to_string(),
                line: i + 1,
                msg: format!("expected 2 columns in answers file, got {}", cols.len()),
            });
        }
        let msd = match field(cols[1]) {
            Some(tag) => Some(MsdTag::parse(&tag).map_err(|e| DataError::Format {
                path: source.to_string(),
                line: i + 1,
                msg: e.to_string(),
            })?),
            None => None,
        };
        answers.push((cols[0].to_string(), msd));
    }
    Ok(answers)
}

pub fn attach_answers(
    instances: &mut [SentenceInstance],
    answers: &[(String, Option<MsdTag>)],
) -> Result<(), DataError> {
    if instances.len() != answers.len() {
        return Err(DataError::AnswerCountMismatch {
            answers: answers.len(),
            instances: instances.len(),
        });
    }
    for (inst, (form, msd)) in instances.iter_mut().zip(answers.iter()) {
        inst.gold_form = Some(form.clone());
        inst.gold_msd = msd.clone();
    }
    Ok(())
}

/// Inverse of [`parse_str`] for token fields.
pub fn serialize_instances(instances: &[SentenceInstance]) -> String {
    let mut out = String::new();
    for (i, inst) in instances.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for token in &inst.tokens {
            out.push_str(token.form.as_deref().unwrap_or(HOLE));
            out.push('\t');
            out.push_str(token.lemma.as_deref().unwrap_or(HOLE));
            out.push('\t');
            match &token.msd {
                Some(tag) => out.push_str(&tag.joined()),
                None => out.push_str(HOLE),
            }
            out.push('\n');
        }
    }
    out
}

/// Answers lines for instances that carry gold annotations.
pub fn serialize_answers(instances: &[SentenceInstance]) -> String {
    let mut out = String::new();
    for inst in instances {
        let form = inst.gold_form.as_deref().unwrap_or(HOLE);
        out.push_str(form);
        out.push('\t');
        match &inst.gold_msd {
            Some(tag) => out.push_str(&tag.joined()),
            None => out.push_str(HOLE),
        }
        out.push('\n');
    }
    out
}

/// The running example: "We were _ to feel very welcome ." with the
/// covered target "made" for lemma "make".
#[cfg(test)]
pub(crate) mod fixtures {
    pub const EXAMPLE_SENTENCE: &str = "We\twe\tPRO;NOM;PL;1\n\
were\tbe\tAUX;IND;PST;FIN\n\
_\tmake\t_\n\
to\tto\tPART\n\
feel\tfeel\tV;NFIN\n\
very\tvery\tADV\n\
welcome\twelcome\tADJ\n\
.\t.\tPUNCT\n";

    pub const EXAMPLE_ANSWER: &str = "made\tV;PST;V.PTCP;PASS\n";
}

#[cfg(test)]
mod tests {
    use super::fixtures::{EXAMPLE_ANSWER, EXAMPLE_SENTENCE};
    use super::*;

    #[test]
    fn example_sentence_parses_with_target_at_two() {
        let mut instances = parse_str(EXAMPLE_SENTENCE, Track::One, "en", "test").unwrap();
        assert_eq!(instances.len(), 1);
        let answers = parse_answers(EXAMPLE_ANSWER, "test.ans").unwrap();
        attach_answers(&mut instances, &answers).unwrap();
        let inst = &instances[0];
        assert_eq!(inst.target_index, 2);
        assert_eq!(inst.target_lemma(), "make");
        assert_eq!(inst.gold_form.as_deref(), Some("made"));
        assert_eq!(
            inst.gold_msd.as_ref().unwrap().components,
            vec!["V", "PST", "V.PTCP", "PASS"]
        );
        assert_eq!(inst.tokens.len(), 8);
        assert_eq!(inst.tokens[0].msd.as_ref().unwrap().joined(), "PRO;NOM;PL;1");
    }

    #[test]
    fn empty_file_gives_empty_list() {
        assert!(parse_str("", Track::One, "en", "test").unwrap().is_empty());
        assert!(parse_str("\n\n", Track::One, "en", "test").unwrap().is_empty());
    }

    #[test]
    fn sentence_without_covered_token_is_an_error() {
        let text = "a\ta\tN\nb\tb\tN\n";
        let err = parse_str(text, Track::One, "en", "f.tsv").unwrap_err();
        assert!(err.to_string().contains("f.tsv:1"), "{err}");
    }

    #[test]
    fn second_covered_token_is_an_error_with_its_line() {
        let text = "_\ta\t_\nb\tb\tN\n_\tc\t_\n";
        let err = parse_str(text, Track::One, "en", "f.tsv").unwrap_err();
        assert!(err.to_string().contains("f.tsv:3"), "{err}");
    }

    #[test]
    fn wrong_column_count_is_an_error() {
        let text = "a\ta\n";
        let err = parse_str(text, Track::One, "en", "f.tsv").unwrap_err();
        assert!(err.to_string().contains("expected 3 columns"), "{err}");
    }

    #[test]
    fn track_two_rejects_annotated_context() {
        let text = "We\twe\tPRO\n_\tmake\t_\n";
        assert!(parse_str(text, Track::Two, "en", "f.tsv").is_err());
        let bare = "We\t_\t_\n_\tmake\t_\n";
        let inst = &parse_str(bare, Track::Two, "en", "f.tsv").unwrap()[0];
        assert_eq!(inst.target_index, 1);
        assert!(inst.tokens[0].lemma.is_none());
    }

    #[test]
    fn covered_token_must_have_lemma() {
        let text = "a\ta\tN\n_\t_\t_\n";
        assert!(parse_str(text, Track::One, "en", "f.tsv").is_err());
    }

    #[test]
    fn parse_serialize_parse_is_identity() {
        let text = format!("{EXAMPLE_SENTENCE}\nx\tx\tN;SG\n_\trun\t_\n");
        let once = parse_str(&text, Track::One, "en", "test").unwrap();
        let twice = parse_str(
            &serialize_instances(&once),
            Track::One,
            "en",
            "test",
        )
        .unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn answer_count_mismatch_is_an_error() {
        let mut instances = parse_str(EXAMPLE_SENTENCE, Track::One, "en", "test").unwrap();
        let answers = parse_answers("made\t_\nplans\t_\n", "test.ans").unwrap();
        assert!(attach_answers(&mut instances, &answers).is_err());
    }
}
