use std::collections::HashMap;
use std::path::Path;

use log::warn;

use crate::corpus::split_label;
use crate::error::{Error, Result};

/// Dense word vectors read from a `word v1 v2 ... vd` text file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DenseEmbeddings {
    dim: Option<usize>,
    vectors: HashMap<String, Vec<f64>>,
}

impl DenseEmbeddings {
    /// Dimension, or an error when nothing was loaded.
    pub fn dim(&self) -> Result<usize> {
        self.dim.ok_or(Error::NoEmbeddings)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Looks up a `lemma/POS` label, falling back to the bare lemma.
    pub fn get_for_label(&self, label: &str) -> Option<&[f64]> {
        self.get(label)
            .or_else(|| split_label(label).and_then(|(lemma, _)| self.get(lemma)))
    }

    pub fn insert(&mut self, word: impl Into<String>, v: Vec<f64>) -> Result<()> {
        match self.dim {
            Some(d) if d != v.len() => {
                return Err(Error::LengthMismatch {
                    expected: d,
                    got: v.len(),
                })
            }
            _ => self.dim = Some(v.len()),
        }
        self.vectors.insert(word.into(), v);
        Ok(())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut emb = DenseEmbeddings::default();
        for (i, line) in text.lines().enumerate() {
            let mut fields = line.split(' ').filter(|f| !f.is_empty());
            let Some(word) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            // word2vec text header: "<count> <dim>"
            if i == 0
                && rest.len() == 1
                && word.parse::<usize>().is_ok()
                && rest[0].parse::<usize>().is_ok()
            {
                continue;
            }
            let v: Vec<f64> = rest
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(source, i + 1, "non-numeric vector component"))?;
            if v.is_empty() {
                return Err(Error::parse(source, i + 1, "vector has no components"));
            }
            if let Some(d) = emb.dim {
                if v.len() != d {
                    return Err(Error::parse(
                        source,
                        i + 1,
                        format!("dimension {} differs from {d}", v.len()),
                    ));
                }
            }
            if emb.vectors.contains_key(word) {
                warn!(
                    "{source}:{}: duplicate vector for {word:?}, keeping the last",
                    i + 1
                );
            }
            emb.insert(word, v)?;
        }
        Ok(emb)
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<DenseEmbeddings> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    DenseEmbeddings::parse(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_lines_three_dims() {
        let e = DenseEmbeddings::parse("a 1 2 3\nb 0.5 -1 2\n", "mem").unwrap();
        assert_eq!(e.dim().unwrap(), 3);
        assert_eq!(e.len(), 2);
        assert_eq!(e.get("b").unwrap(), &[0.5, -1.0, 2.0]);
    }

    #[test]
    fn inconsistent_dimension_reports_line() {
        match DenseEmbeddings::parse("a 1 2 3\nb 1 2\n", "mem") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_file_has_no_dimension() {
        let e = DenseEmbeddings::parse("", "mem").unwrap();
        assert!(e.is_empty());
        assert!(matches!(e.dim(), Err(Error::NoEmbeddings)));
    }

    #[test]
    fn duplicate_last_wins() {
        let e = DenseEmbeddings::parse("a 1 2\na 3 4\n", "mem").unwrap();
        assert_eq!(e.get("a").unwrap(), &[3.0, 4.0]);
    }

    #[test]
    fn word2vec_header_skipped() {
        let e = DenseEmbeddings::parse("2 2\na 1 2\nb 3 4\n", "mem").unwrap();
        assert_eq!(e.len(), 2);
    }

    #[test]
    fn label_lookup_falls_back_to_lemma() {
        let e = DenseEmbeddings::parse("dog 1 0\nrun/V 0 1\n", "mem").unwrap();
        assert!(e.get_for_label("dog/N").is_some());
        assert!(e.get_for_label("run/V").is_some());
        assert!(e.get_for_label("cat/N").is_none());
    }
}
