//! Per-word selection features and the labeled word sets built from them.
//!
//! For every candidate word three features are computed:
//!
//! - **WF**: corpus frequency,
//! - **WS**: summed cosine similarity to every other candidate, using
//!   external dense embeddings,
//! - **NZ**: number of embedding components whose magnitude is below a
//!   small epsilon.
//!
//! The top-M words by each feature form the sets S, F and Z; their union is
//! the Triple set. Comparing Triple against the frequent-word set A gives
//! the Common / IN / OUT labels that the decision trees learn from.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::matrix::DenseEmbeddings;

/// One of the three word features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    Ws,
    Wf,
    Nz,
}

impl Criterion {
    /// Split-search order used by the decision tree.
    pub const ALL: [Criterion; 3] = [Criterion::Ws, Criterion::Wf, Criterion::Nz];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Ws => "WS",
            Criterion::Wf => "WF",
            Criterion::Nz => "NZ",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "WS" => Ok(Criterion::Ws),
            "WF" => Ok(Criterion::Wf),
            "NZ" => Ok(Criterion::Nz),
            _ => Err(Error::MissingCriterion(s.to_string())),
        }
    }
}

/// Class labels for the decision tree.
pub const LABEL_COMMON: u8 = 1;
pub const LABEL_IN: u8 = 2;
pub const LABEL_OUT: u8 = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct CriteriaRow {
    pub word: String,
    pub wf: f64,
    pub ws: f64,
    pub nz: f64,
    pub wf_norm: f64,
    pub ws_norm: f64,
    pub nz_norm: f64,
    pub label: Option<u8>,
}

impl CriteriaRow {
    pub fn raw(&self, c: Criterion) -> f64 {
        match c {
            Criterion::Ws => self.ws,
            Criterion::Wf => self.wf,
            Criterion::Nz => self.nz,
        }
    }

    pub fn norm(&self, c: Criterion) -> f64 {
        match c {
            Criterion::Ws => self.ws_norm,
            Criterion::Wf => self.wf_norm,
            Criterion::Nz => self.nz_norm,
        }
    }

    pub fn value(&self, c: Criterion, normalized: bool) -> f64 {
        if normalized {
            self.norm(c)
        } else {
            self.raw(c)
        }
    }
}

/// How the pairwise similarities of a word are aggregated into WS.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WsAggregation {
    #[default]
    Sum,
    Mean,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CriteriaTable {
    rows: Vec<CriteriaRow>,
    index: HashMap<String, usize>,
    normalized: bool,
}

impl CriteriaTable {
    pub fn from_rows(rows: Vec<CriteriaRow>, normalized: bool) -> Self {
        let index = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.word.clone(), i))
            .collect();
        CriteriaTable {
            rows,
            index,
            normalized,
        }
    }

    pub fn rows(&self) -> &[CriteriaRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&CriteriaRow> {
        self.index.get(word).map(|&i| &self.rows[i])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Whether the normalized columns have been filled in.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|r| r.word.as_str())
    }

    /// Rows carrying a class label (the U_AT set once labels are assigned).
    pub fn labeled(&self) -> impl Iterator<Item = &CriteriaRow> {
        self.rows.iter().filter(|r| r.label.is_some())
    }

    /// Words in the given set, in table order.
    pub fn restricted<'a>(
        &'a self,
        words: &'a BTreeSet<String>,
    ) -> impl Iterator<Item = &'a CriteriaRow> {
        self.rows.iter().filter(move |r| words.contains(&r.word))
    }

    /// Words with the `m` highest values of `c` (ties by word).
    pub fn top_by(&self, c: Criterion, m: usize) -> BTreeSet<String> {
        let mut order: Vec<&CriteriaRow> = self.rows.iter().collect();
        order.sort_by(|a, b| {
            b.raw(c)
                .total_cmp(&a.raw(c))
                .then_with(|| a.word.cmp(&b.word))
        });
        order.into_iter().take(m).map(|r| r.word.clone()).collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("word\twf\tws\tnz\twf_norm\tws_norm\tnz_norm\tlabel\n");
        for r in &self.rows {
            let label = r.label.map(|l| l.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.word, r.wf, r.ws, r.nz, r.wf_norm, r.ws_norm, r.nz_norm, label
            );
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn parse_tsv(text: &str, source: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 && line.starts_with("word\t") {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 8 {
                return Err(Error::parse(source, i + 1, "expected 8 columns"));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::parse(source, i + 1, format!("bad number {s:?}")))
            };
            let label = match f[7] {
                "" => None,
                l => Some(
                    l.parse::<u8>()
                        .ok()
                        .filter(|l| (1..=3).contains(l))
                        .ok_or_else(|| Error::parse(source, i + 1, format!("bad label {l:?}")))?,
                ),
            };
            rows.push(CriteriaRow {
                word: f[0].to_string(),
                wf: num(f[1])?,
                ws: num(f[2])?,
                nz: num(f[3])?,
                wf_norm: num(f[4])?,
                ws_norm: num(f[5])?,
                nz_norm: num(f[6])?,
                label,
            });
        }
        let normalized = rows
            .iter()
            .any(|r| r.wf_norm > 0.0 || r.ws_norm > 0.0 || r.nz_norm > 0.0);
        Ok(CriteriaTable::from_rows(rows, normalized))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text, &path.display().to_string())
    }
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        vec![0.0; v.len()]
    } else {
        v.iter().map(|x| x / n).collect()
    }
}

/// Computes raw WF, WS and NZ for every candidate that has an embedding.
///
/// Candidates without an embedding are dropped with a warning; if more than
/// half are missing the embedding file is almost certainly the wrong one
/// and an error is returned.
pub fn compute_criteria(
    candidates: &[String],
    emb: &DenseEmbeddings,
    vocab: &Vocabulary,
    zero_eps: f64,
    aggregation: WsAggregation,
) -> Result<CriteriaTable> {
    let mut kept: Vec<(&String, &[f64])> = Vec::with_capacity(candidates.len());
    let mut missing = 0;
    for w in candidates {
        match emb.get_for_label(w) {
            Some(v) => kept.push((w, v)),
            None => {
                missing += 1;
                warn!("no embedding for candidate {w}, excluded");
            }
        }
    }
    if missing * 2 > candidates.len() {
        return Err(Error::EmbeddingCoverage {
            missing,
            total: candidates.len(),
        });
    }

    let units: Vec<Vec<f64>> = kept.iter().map(|(_, v)| unit(v)).collect();
    let n = units.len();
    let ws: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut sum = 0.0;
            for j in 0..n {
                if j != i {
                    sum += units[i]
                        .iter()
                        .zip(&units[j])
                        .map(|(a, b)| a * b)
                        .sum::<f64>();
                }
            }
            match aggregation {
                WsAggregation::Sum => sum,
                WsAggregation::Mean if n > 1 => sum / (n - 1) as f64,
                WsAggregation::Mean => 0.0,
            }
        })
        .collect();

    let rows = kept
        .iter()
        .zip(ws)
        .map(|((w, v), ws)| CriteriaRow {
            word: (*w).clone(),
            wf: vocab.get(w).map(|e| e.freq as f64).unwrap_or(0.0),
            ws,
            nz: v.iter().filter(|x| x.abs() < zero_eps).count() as f64,
            wf_norm: 0.0,
            ws_norm: 0.0,
            nz_norm: 0.0,
            label: None,
        })
        .collect();
    Ok(CriteriaTable::from_rows(rows, false))
}

/// Divides each criterion by its maximum over the table (infinity norm).
/// Raw values are kept alongside.
pub fn normalize_criteria(mut table: CriteriaTable) -> CriteriaTable {
    for c in Criterion::ALL {
        let max = table.rows.iter().map(|r| r.raw(c)).fold(0.0f64, f64::max);
        if max <= 0.0 && !table.rows.is_empty() {
            warn!("criterion {c} is zero for every word; normalized values set to 0");
        }
        for r in &mut table.rows {
            let v = if max > 0.0 { r.raw(c) / max } else { 0.0 };
            match c {
                Criterion::Ws => r.ws_norm = v,
                Criterion::Wf => r.wf_norm = v,
                Criterion::Nz => r.nz_norm = v,
            }
        }
    }
    table.normalized = true;
    table
}

/// The word sets derived from the criteria table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledSets {
    pub candidates: BTreeSet<String>,
    pub a: BTreeSet<String>,
    pub s: BTreeSet<String>,
    pub f: BTreeSet<String>,
    pub z: BTreeSet<String>,
    pub triple: BTreeSet<String>,
    pub common: BTreeSet<String>,
    pub in_set: BTreeSet<String>,
    pub out_set: BTreeSet<String>,
    pub u_at: BTreeSet<String>,
}

/// Builds S, F, Z (top-`m` by WS, WF, NZ), Triple, Common, IN, OUT and U_AT,
/// and writes labels 1/2/3 into the table. Words of `a` that are not in the
/// table have no features and are ignored.
pub fn build_labeled_sets(table: &mut CriteriaTable, a: &[String], m: usize) -> LabeledSets {
    let candidates: BTreeSet<String> = table.words().map(str::to_string).collect();
    let a: BTreeSet<String> = a.iter().filter(|w| table.contains(w)).cloned().collect();
    let s = table.top_by(Criterion::Ws, m);
    let f = table.top_by(Criterion::Wf, m);
    let z = table.top_by(Criterion::Nz, m);
    let triple: BTreeSet<String> = s.iter().chain(&f).chain(&z).cloned().collect();
    let common: BTreeSet<String> = a.intersection(&triple).cloned().collect();
    let in_set: BTreeSet<String> = triple.difference(&a).cloned().collect();
    let out_set: BTreeSet<String> = a.difference(&triple).cloned().collect();
    let u_at: BTreeSet<String> = a.union(&triple).cloned().collect();

    for r in &mut table.rows {
        r.label = if common.contains(&r.word) {
            Some(LABEL_COMMON)
        } else if in_set.contains(&r.word) {
            Some(LABEL_IN)
        } else if out_set.contains(&r.word) {
            Some(LABEL_OUT)
        } else {
            None
        };
    }

    LabeledSets {
        candidates,
        a,
        s,
        f,
        z,
        triple,
        common,
        in_set,
        out_set,
        u_at,
    }
}

/// Feature pair for a 2-D scatter export.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeaturePair {
    WfWs,
    NzWs,
    NzWf,
}

impl FeaturePair {
    pub fn axes(self) -> (Criterion, Criterion) {
        match self {
            FeaturePair::WfWs => (Criterion::Wf, Criterion::Ws),
            FeaturePair::NzWs => (Criterion::Nz, Criterion::Ws),
            FeaturePair::NzWf => (Criterion::Nz, Criterion::Wf),
        }
    }
}

impl FromStr for FeaturePair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wf-ws" => Ok(FeaturePair::WfWs),
            "nz-ws" => Ok(FeaturePair::NzWs),
            "nz-wf" => Ok(FeaturePair::NzWf),
            _ => Err(Error::Config(format!("unknown feature pair {s:?}"))),
        }
    }
}

/// CSV rows `word,label,x,y` for the words of `selection` in table order.
pub fn emit_scatter(
    table: &CriteriaTable,
    selection: &BTreeSet<String>,
    pair: FeaturePair,
    normalized: bool,
) -> String {
    let (x, y) = pair.axes();
    let mut out = String::from("word,label,x,y\n");
    for r in table.restricted(selection) {
        let label = r.label.map(|l| l.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.word,
            label,
            r.value(x, normalized),
            r.value(y, normalized)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Pos, VocabEntry};

    fn vocab(words: &[(&str, u64)]) -> Vocabulary {
        Vocabulary::from_entries(
            words
                .iter()
                .map(|&(w, f)| VocabEntry {
                    lemma: w.into(),
                    pos: Pos::Noun,
                    freq: f,
                })
                .collect(),
        )
    }

    fn labels(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| format!("{w}/N")).collect()
    }

    fn row(word: &str, wf: f64, ws: f64, nz: f64) -> CriteriaRow {
        CriteriaRow {
            word: word.into(),
            wf,
            ws,
            nz,
            wf_norm: 0.0,
            ws_norm: 0.0,
            nz_norm: 0.0,
            label: None,
        }
    }

    #[test]
    fn nz_counts_small_components() {
        let emb = DenseEmbeddings::parse("a 0.005 -0.009 0.5\n", "mem").unwrap();
        let t = compute_criteria(
            &labels(&["a"]),
            &emb,
            &vocab(&[("a", 4)]),
            0.01,
            WsAggregation::Sum,
        )
        .unwrap();
        let r = t.get("a/N").unwrap();
        assert_eq!(r.nz, 2.0);
        assert_eq!(r.wf, 4.0);
        assert_eq!(r.ws, 0.0);
    }

    #[test]
    fn ws_is_sum_of_pairwise_cosines() {
        let emb = DenseEmbeddings::parse("a 1 0\nb 1 1\nc 0 1\n", "mem").unwrap();
        let v = vocab(&[("a", 1), ("b", 1), ("c", 1)]);
        let t = compute_criteria(
            &labels(&["a", "b", "c"]),
            &emb,
            &v,
            0.01,
            WsAggregation::Sum,
        )
        .unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // a: cos(a,b) + cos(a,c) = 1/sqrt2 + 0
        assert!((t.get("a/N").unwrap().ws - h).abs() < 1e-12);
        // b: 1/sqrt2 + 1/sqrt2
        assert!((t.get("b/N").unwrap().ws - 2.0 * h).abs() < 1e-12);
        let mean = compute_criteria(
            &labels(&["a", "b", "c"]),
            &emb,
            &v,
            0.01,
            WsAggregation::Mean,
        )
        .unwrap();
        assert!((mean.get("b/N").unwrap().ws - h).abs() < 1e-12);
    }

    #[test]
    fn missing_embeddings_excluded_or_abort() {
        let emb = DenseEmbeddings::parse("a 1 0\nb 0 1\n", "mem").unwrap();
        let v = vocab(&[("a", 1), ("b", 1), ("c", 1)]);
        let t = compute_criteria(
            &labels(&["a", "b", "c"]),
            &emb,
            &v,
            0.01,
            WsAggregation::Sum,
        )
        .unwrap();
        assert_eq!(t.len(), 2);
        assert!(matches!(
            compute_criteria(
                &labels(&["a", "x", "y"]),
                &emb,
                &v,
                0.01,
                WsAggregation::Sum
            ),
            Err(Error::EmbeddingCoverage {
                missing: 2,
                total: 3
            })
        ));
    }

    #[test]
    fn normalize_by_max() {
        let t = CriteriaTable::from_rows(
            vec![row("a", 5.0, 1.0, 0.0), row("b", 10.0, 4.0, 0.0)],
            false,
        );
        let n = normalize_criteria(t);
        assert_eq!(n.get("a").unwrap().wf_norm, 0.5);
        assert_eq!(n.get("b").unwrap().wf_norm, 1.0);
        assert_eq!(n.get("a").unwrap().ws_norm, 0.25);
        assert_eq!(n.get("a").unwrap().nz_norm, 0.0);
        assert_eq!(n.get("a").unwrap().wf, 5.0);
    }

    #[test]
    fn normalize_single_row_and_idempotence() {
        let n = normalize_criteria(CriteriaTable::from_rows(
            vec![row("a", 3.0, 2.0, 7.0)],
            false,
        ));
        let r = n.get("a").unwrap();
        assert_eq!((r.wf_norm, r.ws_norm, r.nz_norm), (1.0, 1.0, 1.0));
        let twice = normalize_criteria(n.clone());
        assert_eq!(twice, n);
    }

    fn sample_table() -> CriteriaTable {
        CriteriaTable::from_rows(
            vec![
                row("a", 9.0, 1.0, 1.0),
                row("b", 8.0, 9.0, 1.0),
                row("c", 1.0, 1.0, 9.0),
                row("d", 2.0, 2.0, 2.0),
                row("e", 7.0, 0.0, 0.0),
            ],
            false,
        )
    }

    #[test]
    fn labeled_sets_identity_case() {
        let mut t = sample_table();
        let a: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let sets = build_labeled_sets(&mut t, &a, 1);
        assert_eq!(sets.triple, sets.a);
        assert!(sets.in_set.is_empty() && sets.out_set.is_empty());
        assert!(t.labeled().all(|r| r.label == Some(LABEL_COMMON)));
        assert_eq!(t.labeled().count(), 3);
    }

    #[test]
    fn labeled_sets_disjoint_a() {
        let mut t = sample_table();
        let sets = build_labeled_sets(&mut t, &["d".to_string(), "e".to_string()], 1);
        assert!(sets.common.is_empty());
        assert_eq!(sets.out_set.len(), 2);
        assert_eq!(sets.in_set, sets.triple);
        assert_eq!(t.get("e").unwrap().label, Some(LABEL_OUT));
        assert_eq!(t.get("b").unwrap().label, Some(LABEL_IN));
    }

    #[test]
    fn m_equal_to_candidates_gives_everything() {
        let mut t = sample_table();
        let sets = build_labeled_sets(&mut t, &[], 5);
        assert_eq!(sets.triple, sets.candidates);
    }

    #[test]
    fn top_by_breaks_ties_by_word() {
        let t = CriteriaTable::from_rows(
            vec![row("b", 1.0, 0.0, 0.0), row("a", 1.0, 0.0, 0.0)],
            false,
        );
        assert_eq!(
            t.top_by(Criterion::Wf, 1).into_iter().collect::<Vec<_>>(),
            vec!["a"]
        );
    }

    #[test]
    fn scatter_columns() {
        let mut t = sample_table();
        build_labeled_sets(&mut t, &["a".to_string()], 1);
        let sel: BTreeSet<String> = ["a".to_string(), "b".to_string()].into();
        let csv = emit_scatter(&t, &sel, FeaturePair::WfWs, false);
        assert_eq!(csv, "word,label,x,y\na,1,9,1\nb,2,8,9\n");
        assert_eq!(
            emit_scatter(&t, &BTreeSet::new(), FeaturePair::NzWf, false),
            "word,label,x,y\n"
        );
    }

    #[test]
    fn tsv_round_trip() {
        let mut t = normalize_criteria(sample_table());
        build_labeled_sets(&mut t, &["a".to_string()], 2);
        let back = CriteriaTable::parse_tsv(&t.to_tsv(), "mem").unwrap();
        assert_eq!(back, t);
    }
}
