//! Sentence-scoped co-occurrence counting.

use std::collections::HashMap;

use rayon::prelude::*;

use super::SparseMatrix;
use crate::corpus::{split_label, Pos, Sentence};
use crate::error::Result;

/// Sentences per parallel shard. Shard boundaries only depend on this
/// constant, so the merge order (and hence every float sum) is independent
/// of the thread count.
const SHARD: usize = 2048;
/// Sentences buffered from a stream before a parallel pass.
const BATCH: usize = SHARD * 64;

/// How a co-occurrence at offset `alpha = |p - q|` contributes to a cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weighting {
    /// Adds `exp(-decay * alpha)`; optional distance cap.
    Decay {
        decay: f64,
        max_distance: Option<usize>,
    },
    /// Adds 1 when `alpha <= window`.
    Window(usize),
}

impl Weighting {
    pub fn decay(decay: f64) -> Self {
        Weighting::Decay {
            decay,
            max_distance: None,
        }
    }

    #[inline]
    fn weight(&self, alpha: usize) -> Option<f64> {
        match *self {
            Weighting::Decay {
                decay,
                max_distance,
            } => match max_distance {
                Some(cap) if alpha > cap => None,
                _ => Some((-decay * alpha as f64).exp()),
            },
            Weighting::Window(w) => (alpha <= w).then_some(1.0),
        }
    }
}

/// Label lookup without allocating per token: one map per POS class.
struct WordIds {
    by_pos: [HashMap<String, u32>; 4],
}

impl WordIds {
    fn new(labels: &[String]) -> Self {
        let mut by_pos: [HashMap<String, u32>; 4] = Default::default();
        for (i, label) in labels.iter().enumerate() {
            if let Some((lemma, pos)) = split_label(label) {
                if let Some(slot) = pos_slot(pos) {
                    by_pos[slot].entry(lemma.to_string()).or_insert(i as u32);
                }
            }
        }
        WordIds { by_pos }
    }

    #[inline]
    fn get(&self, lemma: &str, pos: Pos) -> Option<u32> {
        pos_slot(pos).and_then(|s| self.by_pos[s].get(lemma).copied())
    }
}

fn pos_slot(pos: Pos) -> Option<usize> {
    match pos {
        Pos::Noun => Some(0),
        Pos::Verb => Some(1),
        Pos::Adjective => Some(2),
        Pos::Adverb => Some(3),
        Pos::Other => None,
    }
}

/// Partial co-occurrence counts for a shard of sentences.
#[derive(Clone, Debug, Default)]
pub struct CoocCounts {
    cells: HashMap<(u32, u32), f64>,
}

impl CoocCounts {
    /// Cell-wise summation.
    pub fn merge(&mut self, other: CoocCounts) {
        for (k, v) in other.cells {
            *self.cells.entry(k).or_insert(0.0) += v;
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Accumulates co-occurrences of target rows with context columns.
pub struct CoocBuilder {
    targets: WordIds,
    contexts: WordIds,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    weighting: Weighting,
    counts: CoocCounts,
}

impl CoocBuilder {
    pub fn new(targets: Vec<String>, contexts: Vec<String>, weighting: Weighting) -> Self {
        CoocBuilder {
            targets: WordIds::new(&targets),
            contexts: WordIds::new(&contexts),
            row_labels: targets,
            col_labels: contexts,
            weighting,
            counts: CoocCounts::default(),
        }
    }

    fn count_sentence(&self, sentence: &Sentence, out: &mut CoocCounts) {
        let mut t_pos: Vec<(usize, u32)> = Vec::new();
        let mut c_pos: Vec<(usize, u32)> = Vec::new();
        for (p, tok) in sentence.tokens.iter().enumerate() {
            if let Some(t) = self.targets.get(&tok.lemma, tok.pos) {
                t_pos.push((p, t));
            }
            if let Some(c) = self.contexts.get(&tok.lemma, tok.pos) {
                c_pos.push((p, c));
            }
        }
        for &(p, t) in &t_pos {
            for &(q, c) in &c_pos {
                if p == q {
                    continue;
                }
                if let Some(w) = self.weighting.weight(p.abs_diff(q)) {
                    *out.cells.entry((t, c)).or_insert(0.0) += w;
                }
            }
        }
    }

    /// Counts one shard sequentially.
    pub fn count_shard(&self, sentences: &[Sentence]) -> CoocCounts {
        let mut out = CoocCounts::default();
        for s in sentences {
            self.count_sentence(s, &mut out);
        }
        out
    }

    /// Counts a batch in parallel shards and merges them in shard order.
    pub fn add_batch(&mut self, sentences: &[Sentence]) {
        let parts: Vec<CoocCounts> = sentences
            .par_chunks(SHARD)
            .map(|chunk| self.count_shard(chunk))
            .collect();
        for part in parts {
            self.counts.merge(part);
        }
    }

    pub fn add_counts(&mut self, counts: CoocCounts) {
        self.counts.merge(counts);
    }

    pub fn finish(self) -> SparseMatrix {
        let cells = self
            .counts
            .cells
            .into_iter()
            .map(|((r, c), v)| (r as usize, c as usize, v));
        SparseMatrix::from_cells(self.row_labels, self.col_labels, cells)
    }
}

/// Builds a co-occurrence matrix from a sentence stream.
pub fn build_cooc<I>(
    corpus: I,
    targets: Vec<String>,
    contexts: Vec<String>,
    weighting: Weighting,
) -> Result<SparseMatrix>
where
    I: IntoIterator<Item = Result<Sentence>>,
{
    let mut builder = CoocBuilder::new(targets, contexts, weighting);
    let mut batch = Vec::with_capacity(BATCH);
    for s in corpus {
        batch.push(s?);
        if batch.len() == BATCH {
            builder.add_batch(&batch);
            batch.clear();
        }
    }
    builder.add_batch(&batch);
    Ok(builder.finish())
}

/// Decay-weighted counts: every (target, context) occurrence pair within a
/// sentence adds `exp(-decay * |p - q|)`.
pub fn build_cooc_decay(
    corpus: &[Sentence],
    targets: Vec<String>,
    contexts: Vec<String>,
    decay: f64,
) -> SparseMatrix {
    let mut b = CoocBuilder::new(targets, contexts, Weighting::decay(decay));
    b.add_batch(corpus);
    b.finish()
}

/// Fixed-window counts: each occurrence pair with `|p - q| <= window` adds 1.
pub fn build_cooc_window(
    corpus: &[Sentence],
    targets: Vec<String>,
    contexts: Vec<String>,
    window: usize,
) -> SparseMatrix {
    let mut b = CoocBuilder::new(targets, contexts, Weighting::Window(window));
    b.add_batch(corpus);
    b.finish()
}
