use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{NrpaError, Result};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Lowercases and splits on every run of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Token table. Ids 0 and 1 are always `<pad>` and `<unk>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    ids: HashMap<String, u32>,
    tokens: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self {
            ids: HashMap::new(),
            tokens: vec![PAD_TOKEN.to_owned(), UNK_TOKEN.to_owned()],
        }
    }
}

impl Vocabulary {
    /// Keeps tokens seen at least `min_count` times. Ids are assigned from 2 in
    /// order of descending frequency, ties broken lexicographically.
    pub fn build<'a, I, D>(documents: I, min_count: usize) -> Self
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = &'a str>,
    {
        let mut counts: HashMap<&'a str, usize> = HashMap::new();
        for doc in documents {
            for tok in doc {
                *counts.entry(tok).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count.max(1))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut vocab = Self::default();
        for (tok, _) in kept {
            vocab.push(tok.to_owned());
        }
        vocab
    }

    fn push(&mut self, token: String) {
        let id = self.tokens.len() as u32;
        self.ids.insert(token.clone(), id);
        self.tokens.push(token);
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    /// `token<TAB>id` per line, in id order.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for (id, tok) in self.tokens.iter().enumerate() {
            let _ = writeln!(s, "{tok}\t{id}");
        }
        s
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut vocab = Vocabulary {
            ids: HashMap::new(),
            tokens: Vec::new(),
        };
        for (lineno, line) in text.lines().enumerate() {
            let (tok, id) = line
                .split_once('\t')
                .ok_or_else(|| NrpaError::format("vocabulary", format!("line {}: no tab", lineno + 1)))?;
            let id: usize = id
                .parse()
                .map_err(|_| NrpaError::format("vocabulary", format!("line {}: bad id", lineno + 1)))?;
            if id != lineno {
                return Err(NrpaError::format(
                    "vocabulary",
                    format!("line {} carries id {id}", lineno + 1),
                ));
            }
            let expected = match id {
                0 => Some(PAD_TOKEN),
                1 => Some(UNK_TOKEN),
                _ => None,
            };
            match expected {
                Some(e) if tok != e => {
                    return Err(NrpaError::format(
                        "vocabulary",
                        format!("id {id} must be `{e}`, found `{tok}`"),
                    ))
                }
                Some(_) => vocab.tokens.push(tok.to_owned()),
                None => {
                    if tok.is_empty() || vocab.ids.contains_key(tok) || tok == PAD_TOKEN || tok == UNK_TOKEN {
                        return Err(NrpaError::format(
                            "vocabulary",
                            format!("line {}: empty or duplicate token", lineno + 1),
                        ));
                    }
                    vocab.push(tok.to_owned());
                }
            }
        }
        if vocab.tokens.len() < 2 {
            return Err(NrpaError::format("vocabulary", "missing <pad>/<unk> entries"));
        }
        Ok(vocab)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(docs: &[&str], min: usize) -> Vocabulary {
        let toks: Vec<Vec<String>> = docs.iter().map(|d| tokenize(d)).collect();
        Vocabulary::build(toks.iter().map(|d| d.iter().map(String::as_str)), min)
    }

    #[test]
    fn tokenizer_rules() {
        assert_eq!(tokenize("Easy to USE!"), vec!["easy", "to", "use"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("high-price camera"), vec!["high", "price", "camera"]);
        assert_eq!(tokenize("  --  "), Vec::<String>::new());
    }

    #[test]
    fn threshold_rule() {
        let v = build(&["a a b"], 2);
        assert_eq!(v.len(), 3);
        assert_eq!(v.id("a"), 2);
        assert_eq!(v.id("b"), UNK);
        let v = build(&["x"], 1);
        assert_eq!(v.id("x"), 2);
    }

    #[test]
    fn ties_are_lexicographic() {
        let v = build(&["zeta alpha zeta alpha mid"], 1);
        assert_eq!(v.id("alpha"), 2);
        assert_eq!(v.id("zeta"), 3);
        assert_eq!(v.id("mid"), 4);
    }

    #[test]
    fn empty_corpus_has_specials_only() {
        let v = build(&[], 1);
        assert_eq!(v.len(), 2);
        assert_eq!(v.token(PAD), Some(PAD_TOKEN));
        assert_eq!(v.token(UNK), Some(UNK_TOKEN));
    }

    #[test]
    fn tsv_round_trip_and_rejects_garbage() {
        let v = build(&["the cat sat on the mat"], 1);
        let text = v.to_tsv();
        assert!(text.starts_with("<pad>\t0\n<unk>\t1\nthe\t2\n"));
        assert_eq!(Vocabulary::from_tsv(&text).unwrap(), v);
        assert!(Vocabulary::from_tsv("").is_err());
        assert!(Vocabulary::from_tsv("<pad>\t0\n<unk>\t1\na\t3\n").is_err());
        assert!(Vocabulary::from_tsv("<pad>\t0\n<unk>\t1\na\t2\na\t3\n").is_err());
        assert!(Vocabulary::from_tsv("x\t0\n<unk>\t1\n").is_err());
    }
}
