//! Initializing the word embedding from a text file of pretrained vectors.

use std::io::BufRead;

use crate::data::{Vocabulary, PAD};
use crate::error::{NrpaError, Result};
use crate::numeric::Matrix;

fn bad(lineno: usize, reason: impl std::fmt::Display) -> NrpaError {
    NrpaError::format("word vectors", format!("line {lineno}: {reason}"))
}

/// Reads `token v_1 .. v_d` lines (GloVe text layout; a leading word2vec
/// `count dim` header is skipped) and copies each vector into the row of
/// its token. Tokens match exactly, so the file should be lowercased like
/// the tokenizer output. Unknown tokens are ignored and the padding row is
/// never written. On error `word_emb` is left untouched.
///
/// Returns how many vocabulary rows were set.
pub fn load_word_vectors<R: BufRead>(
    word_emb: &mut Matrix,
    vocab: &Vocabulary,
    mut source: R,
) -> Result<usize> {
    if word_emb.rows() != vocab.len() {
        return Err(NrpaError::Shape(format!(
            "embedding has {} rows for a vocabulary of {}",
            word_emb.rows(),
            vocab.len()
        )));
    }
    let dim = word_emb.cols();
    let mut staged = word_emb.clone();
    let mut seen = vec![false; vocab.len()];
    let mut buf = Vec::new();
    let mut lineno = 0;
    loop {
        buf.clear();
        if source.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        lineno += 1;
        let line = std::str::from_utf8(&buf).map_err(|_| bad(lineno, "not UTF-8"))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();

        if lineno == 1 && values.len() == 1 {
            if let (Ok(_), Ok(d)) = (token.parse::<usize>(), values[0].parse::<usize>()) {
                if d != dim {
                    return Err(bad(
                        lineno,
                        format_args!("header declares {d} dimensions, model uses {dim}"),
                    ));
                }
                continue;
            }
        }
        if values.len() != dim {
            return Err(bad(
                lineno,
                format_args!("{} values, expected {dim}", values.len()),
            ));
        }
        let id = vocab.id(token);
        let known = vocab.token(id) == Some(token);
        if !known || id == PAD {
            continue;
        }
        let row = staged.row_mut(id as usize);
        for (slot, v) in row.iter_mut().zip(&values) {
            let x: f64 = v
                .parse()
                .map_err(|_| bad(lineno, format_args!("bad number {v:?}")))?;
            if !x.is_finite() {
                return Err(bad(lineno, format_args!("non-finite value {v:?}")));
            }
            *slot = x;
        }
        seen[id as usize] = true;
    }
    *word_emb = staged;
    Ok(seen.iter().filter(|&&s| s).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::build([["good", "bad", "good"]], 1)
    }

    #[test]
    fn copies_known_rows() {
        let v = vocab();
        let mut m = Matrix::zeros(v.len(), 2);
        let n = load_word_vectors(&mut m, &v, "good 1 2\nmissing 9 9\n\nbad -0.5 3e-1\n".as_bytes()).unwrap();
        assert_eq!(n, 2);
        assert_eq!(m.row(v.id("good") as usize), &[1.0, 2.0]);
        assert_eq!(m.row(v.id("bad") as usize), &[-0.5, 0.3]);
    }

    #[test]
    fn header_and_padding() {
        let v = vocab();
        let mut m = Matrix::zeros(v.len(), 2);
        let n = load_word_vectors(&mut m, &v, "3 2\n<pad> 4 4\n<unk> 1 1\n".as_bytes()).unwrap();
        assert_eq!(n, 1);
        assert_eq!(m.row(PAD as usize), &[0.0, 0.0]);
        assert!(load_word_vectors(&mut m, &v, "3 5\n".as_bytes()).is_err());
    }

    #[test]
    fn errors_leave_the_matrix_alone() {
        let v = vocab();
        let mut m = Matrix::zeros(v.len(), 2);
        for text in ["good 1 2\nbad 1\n", "good 1 nan\n", "good 1 x\n", "good 1 2 3\n"] {
            assert!(
                load_word_vectors(&mut m, &v, text.as_bytes()).is_err(),
                "{text:?}"
            );
            assert!(m.as_slice().iter().all(|&x| x == 0.0));
        }
        let mut wrong = Matrix::zeros(v.len() + 1, 2);
        assert!(matches!(
            load_word_vectors(&mut wrong, &v, "".as_bytes()),
            Err(NrpaError::Shape(_))
        ));
    }
}
