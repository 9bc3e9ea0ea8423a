//! Word-similarity evaluation.
//!
//! A test set lists word pairs with human similarity scores. A matrix is
//! scored by the Spearman correlation between those scores and the cosine
//! of the two words' rows. Pairs with a word missing from the matrix are
//! skipped and counted.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{word_label, Pos};
use crate::error::{Error, Result};
use crate::matrix::{sparse_cosine, SparseMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct TestSet {
    pub name: String,
    pub pairs: Vec<(String, String, f64)>,
}

impl TestSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Parses `word1<TAB>word2<TAB>score` lines. A first line whose third
    /// field is not a number is taken as a header.
    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() < 3 {
                return Err(Error::parse(name, line_no, "expected word1, word2, score"));
            }
            let score = match fields[2].parse::<f64>() {
                Ok(s) if s.is_finite() => s,
                Ok(_) => return Err(Error::parse(name, line_no, "score is not finite")),
                Err(_) if line_no == 1 => continue,
                Err(_) => {
                    return Err(Error::parse(
                        name,
                        line_no,
                        format!("score {:?} is not a number", fields[2]),
                    ))
                }
            };
            let a = fields[0].to_lowercase();
            let b = fields[1].to_lowercase();
            let key = if a <= b {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            };
            if !seen.insert(key) {
                return Err(Error::DuplicatePair(a, b));
            }
            pairs.push((a, b, score));
        }
        Ok(TestSet {
            name: name.to_string(),
            pairs,
        })
    }
}

/// Reads a TSV test set. Its name is the file stem.
pub fn load_testset(path: impl AsRef<Path>) -> Result<TestSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    TestSet::parse(&text, &name)
}

/// 1-based ranks where tied values share the average of their positions.
pub fn fractional_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && x[idx[end]] == x[idx[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho as the Pearson correlation of fractional ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientCoverage { used: x.len() });
    }
    let rx = fractional_ranks(x);
    let ry = fractional_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroRankVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Matrix row for a test-set word.
///
/// Exact labels (`car/N`) match directly. A `-n`/`-v`/`-j`/`-a`/`-r`
/// suffix (`car-n`) pins the POS. A bare lemma matches any POS, trying
/// nouns first, then verbs, adjectives and adverbs.
pub fn resolve_row(matrix: &SparseMatrix, word: &str) -> Option<usize> {
    if let Some(r) = matrix.row_of(word) {
        return Some(r);
    }
    if let Some((lemma, tag)) = word.rsplit_once('-') {
        if let Ok(pos) = tag.parse::<Pos>() {
            if tag.len() == 1 {
                return matrix.row_of(&word_label(lemma, pos));
            }
        }
    }
    Pos::OPEN
        .iter()
        .find_map(|&pos| matrix.row_of(&word_label(word, pos)))
}

/// One (matrix, test set) result.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalEntry {
    pub matrix: String,
    pub testset: String,
    pub spearman: f64,
    pub pairs_used: usize,
    pub oov: usize,
}

/// Scores `matrix` on `ts`.
pub fn evaluate(name: &str, matrix: &SparseMatrix, ts: &TestSet) -> Result<EvalEntry> {
    let mut model = Vec::new();
    let mut human = Vec::new();
    for (a, b, score) in &ts.pairs {
        if let (Some(ra), Some(rb)) = (resolve_row(matrix, a), resolve_row(matrix, b)) {
            model.push(sparse_cosine(matrix.row(ra), matrix.row(rb)));
            human.push(*score);
        }
    }
    if model.len() < 2 {
        return Err(Error::InsufficientCoverage { used: model.len() });
    }
    Ok(EvalEntry {
        matrix: name.to_string(),
        testset: ts.name.clone(),
        spearman: spearman(&model, &human)?,
        pairs_used: model.len(),
        oov: ts.len() - model.len(),
    })
}

/// Every matrix on every test set, in input order.
pub fn evaluate_all(
    matrices: &[(String, SparseMatrix)],
    testsets: &[TestSet],
) -> Result<Vec<EvalEntry>> {
    let jobs: Vec<(&(String, SparseMatrix), &TestSet)> = matrices
        .iter()
        .flat_map(|m| testsets.iter().map(move |t| (m, t)))
        .collect();
    jobs.par_iter()
        .map(|((name, m), t)| evaluate(name, m, t))
        .collect()
}

/// Change of `value` against `reference`: percentage points of rho, and
/// percent relative to the reference (undefined when it is 0).
pub fn deltas(value: f64, reference: f64) -> (f64, Option<f64>) {
    let pp = 100.0 * (value - reference);
    let rel = (reference != 0.0).then(|| 100.0 * (value - reference) / reference.abs());
    (pp, rel)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Clone, Debug, Default)]
pub struct EvalReport {
    pub entries: Vec<EvalEntry>,
}

impl EvalReport {
    pub fn new(entries: Vec<EvalEntry>) -> Self {
        EvalReport { entries }
    }

    fn lookup(&self) -> BTreeMap<(&str, &str), f64> {
        self.entries
            .iter()
            .map(|e| ((e.matrix.as_str(), e.testset.as_str()), e.spearman))
            .collect()
    }

    fn has_matrix(&self, name: &str) -> bool {
        self.entries.iter().any(|e| e.matrix == name)
    }

    /// `matrix,testset,spearman,pairs_used,oov,delta_pp,delta_rel_pct`
    /// with deltas against `baseline`. A test set the baseline was not
    /// scored on leaves the delta cells empty.
    pub fn to_csv(&self, baseline: &str) -> Result<String> {
        if self.entries.is_empty() {
            return Err(Error::Config("report has no entries".into()));
        }
        if !self.has_matrix(baseline) {
            return Err(Error::UnknownBaseline(baseline.to_string()));
        }
        let scores = self.lookup();
        let mut out =
            String::from("matrix,testset,spearman,pairs_used,oov,delta_pp,delta_rel_pct\n");
        for e in &self.entries {
            let (pp, rel) = match scores.get(&(baseline, e.testset.as_str())) {
                Some(&b) => {
                    let (pp, rel) = deltas(e.spearman, b);
                    (Some(pp), rel)
                }
                None => (None, None),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                e.matrix,
                e.testset,
                e.spearman,
                e.pairs_used,
                e.oov,
                opt(pp),
                opt(rel)
            );
        }
        Ok(out)
    }

    /// `matrix,reference,testset,delta_pp,delta_rel_pct` for each
    /// `(matrix, reference)` comparison, over the test sets both were
    /// scored on.
    pub fn comparisons_csv(&self, pairs: &[(&str, &str)]) -> Result<String> {
        let scores = self.lookup();
        let mut testsets: Vec<&str> = self.entries.iter().map(|e| e.testset.as_str()).collect();
        testsets.sort_unstable();
        testsets.dedup();
        let mut out = String::from("matrix,reference,testset,delta_pp,delta_rel_pct\n");
        for &(m, r) in pairs {
            for name in [m, r] {
                if !self.has_matrix(name) {
                    return Err(Error::UnknownBaseline(name.to_string()));
                }
            }
            for &t in &testsets {
                if let (Some(&a), Some(&b)) = (scores.get(&(m, t)), scores.get(&(r, t))) {
                    let (pp, rel) = deltas(a, b);
                    let _ = writeln!(out, "{m},{r},{t},{pp},{}", opt(rel));
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_lines_header_and_case() {
        let ts =
            TestSet::parse("word1\tword2\tscore\nCar\tauto\t9.5\nsun\tmoon\t5\n", "t").unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts.pairs[0], ("car".into(), "auto".into(), 9.5));
    }

    #[test]
    fn parse_errors() {
        let e = TestSet::parse("a\tb\t1\nc\td\tx\n", "t").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = TestSet::parse("a\tb\t1\nb\ta\t2\n", "t").unwrap_err();
        assert!(matches!(e, Error::DuplicatePair(..)));
        assert!(TestSet::parse("a\tb\n", "t").is_err());
    }

    #[test]
    fn spearman_closed_forms() {
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(),
            1.0
        );
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ZeroRankVariance)
        ));
        assert!(spearman(&[1.0], &[1.0]).is_err());
        assert!(spearman(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn ties_share_ranks() {
        assert_eq!(
            fractional_ranks(&[1.0, 2.0, 2.0, 3.0]),
            vec![1.0, 2.5, 2.5, 4.0]
        );
        assert_eq!(fractional_ranks(&[5.0, 5.0, 5.0]), vec![2.0; 3]);
        // ranks x = 1, 2.5, 2.5, 4 and y = 1, 3, 2, 4: centered products sum
        // to 4.5, squared deviations 4.5 and 5.
        let rho = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((rho - 4.5 / (4.5f64 * 5.0).sqrt()).abs() < 1e-15);
    }

    fn toy() -> SparseMatrix {
        SparseMatrix::from_dense(
            vec![
                "car/N".into(),
                "auto/N".into(),
                "run/V".into(),
                "run/N".into(),
            ],
            vec!["c1".into(), "c2".into()],
            &[
                vec![1.0, 0.0],
                vec![1.0, 1.0],
                vec![0.0, 1.0],
                vec![1.0, 0.1],
            ],
        )
    }

    #[test]
    fn lookup_prefers_nouns() {
        let m = toy();
        assert_eq!(resolve_row(&m, "run"), Some(3));
        assert_eq!(resolve_row(&m, "run-v"), Some(2));
        assert_eq!(resolve_row(&m, "run/V"), Some(2));
        assert_eq!(resolve_row(&m, "bike"), None);
    }

    #[test]
    fn evaluate_counts_oov() {
        let ts = TestSet::parse(
            "car\tauto\t3\ncar\trun-v\t1\nauto\trun-v\t2\nbike\tcar\t5\n",
            "t",
        )
        .unwrap();
        let e = evaluate("X", &toy(), &ts).unwrap();
        assert_eq!((e.pairs_used, e.oov), (3, 1));
        // cosines 0.7071, 0, 0.7071 against 3, 1, 2
        let expect = spearman(&[0.5f64.sqrt(), 0.0, 0.5f64.sqrt()], &[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(e.spearman, expect);
        let none = TestSet::parse("x\ty\t1\n", "t").unwrap();
        assert!(matches!(
            evaluate("X", &toy(), &none),
            Err(Error::InsufficientCoverage { used: 0 })
        ));
    }

    fn entry(m: &str, t: &str, rho: f64) -> EvalEntry {
        EvalEntry {
            matrix: m.into(),
            testset: t.into(),
            spearman: rho,
            pairs_used: 10,
            oov: 0,
        }
    }

    #[test]
    fn report_deltas() {
        let r = EvalReport::new(vec![
            entry("B", "men", 0.5),
            entry("A", "men", 0.6),
            entry("A", "rg", 0.7),
        ]);
        let csv = r.to_csv("B").unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "B,men,0.5,10,0,0,0");
        assert!(lines[2].starts_with("A,men,0.6,10,0,9.99999"));
        assert_eq!(lines[3], "A,rg,0.7,10,0,,");
        assert!(matches!(r.to_csv("Z"), Err(Error::UnknownBaseline(_))));
        let cmp = r.comparisons_csv(&[("A", "B")]).unwrap();
        assert_eq!(cmp.lines().count(), 2);
        assert!(r.comparisons_csv(&[("A", "Q")]).is_err());
    }
}
