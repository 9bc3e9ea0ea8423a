use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Row-major sparse word-context matrix of strictly positive scores.
///
/// Each row is a list of `(column, score)` pairs sorted by column. Rows and
/// columns carry word labels so every dimension stays interpretable.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    row_index: HashMap<String, usize>,
    col_index: HashMap<String, usize>,
    rows: Vec<Vec<(u32, f64)>>,
}

fn index_of(labels: &[String]) -> HashMap<String, usize> {
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), i))
        .collect()
}

impl SparseMatrix {
    /// An empty matrix. Duplicate labels keep their first position in the
    /// index; callers are expected to pass distinct labels.
    pub fn new(row_labels: Vec<String>, col_labels: Vec<String>) -> Self {
        let rows = vec![Vec::new(); row_labels.len()];
        SparseMatrix {
            row_index: index_of(&row_labels),
            col_index: index_of(&col_labels),
            row_labels,
            col_labels,
            rows,
        }
    }

    /// Builds a matrix from `(row, col, score)` cells. Repeated cells are
    /// summed; non-positive results are not stored.
    pub fn from_cells(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        cells: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut m = SparseMatrix::new(row_labels, col_labels);
        for (r, c, v) in cells {
            m.rows[r].push((c as u32, v));
        }
        for row in &mut m.rows {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            merged.retain(|&(_, v)| v > 0.0);
            *row = merged;
        }
        m
    }

    pub fn from_dense(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        dense: &[Vec<f64>],
    ) -> Self {
        let cells = dense.iter().enumerate().flat_map(|(r, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(move |(c, &v)| (r, c, v))
        });
        SparseMatrix::from_cells(row_labels, col_labels, cells)
    }

    pub(crate) fn from_rows(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        rows: Vec<Vec<(u32, f64)>>,
    ) -> Self {
        debug_assert_eq!(rows.len(), row_labels.len());
        SparseMatrix {
            row_index: index_of(&row_labels),
            col_index: index_of(&col_labels),
            row_labels,
            col_labels,
            rows,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn row_of(&self, label: &str) -> Option<usize> {
        self.row_index.get(label).copied()
    }

    pub fn col_of(&self, label: &str) -> Option<usize> {
        self.col_index.get(label).copied()
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(u32, f64)>] {
        &self.rows
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = &self.rows[r];
        row.binary_search_by_key(&(c as u32), |&(col, _)| col)
            .map(|i| row[i].1)
            .unwrap_or(0.0)
    }

    pub fn get_labeled(&self, row: &str, col: &str) -> f64 {
        match (self.row_of(row), self.col_of(col)) {
            (Some(r), Some(c)) => self.get(r, c),
            _ => 0.0,
        }
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c as usize, v)))
    }

    pub fn total_mass(&self) -> f64 {
        self.rows.iter().flatten().map(|&(_, v)| v).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols()]; self.n_rows()];
        for (r, c, v) in self.iter_cells() {
            out[r][c] = v;
        }
        out
    }

    /// Labels of columns with at least one stored cell.
    pub fn used_columns(&self) -> Vec<bool> {
        let mut used = vec![false; self.n_cols()];
        for (_, c, _) in self.iter_cells() {
            used[c] = true;
        }
        used
    }

    /// Cell-wise sum. Both matrices must share row and column labels.
    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.row_labels != other.row_labels || self.col_labels != other.col_labels {
            return Err(Error::Config(
                "cannot add matrices with different labels".into(),
            ));
        }
        let cells = self.iter_cells().chain(other.iter_cells());
        Ok(SparseMatrix::from_cells(
            self.row_labels.clone(),
            self.col_labels.clone(),
            cells,
        ))
    }

    /// Keeps only the named columns, re-indexed in the given order. Unknown
    /// labels become empty columns.
    pub fn select_columns(&self, labels: &[String]) -> SparseMatrix {
        let remap: HashMap<u32, u32> = labels
            .iter()
            .enumerate()
            .filter_map(|(new, l)| self.col_of(l).map(|old| (old as u32, new as u32)))
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut kept: Vec<(u32, f64)> = row
                    .iter()
                    .filter_map(|&(c, v)| remap.get(&c).map(|&nc| (nc, v)))
                    .collect();
                kept.sort_by_key(|&(c, _)| c);
                kept
            })
            .collect();
        SparseMatrix::from_rows(self.row_labels.clone(), labels.to_vec(), rows)
    }

    /// Keeps only the named rows, in the given order. Unknown labels become
    /// empty rows.
    pub fn select_rows(&self, labels: &[String]) -> SparseMatrix {
        let rows = labels
            .iter()
            .map(|l| {
                self.row_of(l)
                    .map(|r| self.rows[r].clone())
                    .unwrap_or_default()
            })
            .collect();
        SparseMatrix::from_rows(labels.to_vec(), self.col_labels.clone(), rows)
    }

    /// Serializes as a `rows cols nnz` header followed by
    /// `row_word<TAB>col_word<TAB>score` lines.
    pub fn to_triplet_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.n_rows(), self.n_cols(), self.nnz());
        for (r, c, v) in self.iter_cells() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                self.row_labels[r],
                self.col_labels[c],
                fmt_sig9(v)
            );
        }
        out
    }

    /// Writes the triplet file plus `<path>.rows` / `<path>.cols` sidecars
    /// listing all labels in index order (rows or columns without cells
    /// would otherwise be lost).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_file(path, self.to_triplet_text())?;
        write_file(&sidecar(path, "rows"), join_lines(&self.row_labels))?;
        write_file(&sidecar(path, "cols"), join_lines(&self.col_labels))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SparseMatrix> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let read_labels = |ext: &str| -> Result<Option<Vec<String>>> {
            let p = sidecar(path, ext);
            if !p.exists() {
                return Ok(None);
            }
            let t = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            Ok(Some(t.lines().map(str::to_string).collect()))
        };
        parse_triplets(
            &text,
            &path.display().to_string(),
            read_labels("rows")?,
            read_labels("cols")?,
        )
    }
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn join_lines(labels: &[String]) -> String {
    let mut s = String::new();
    for l in labels {
        s.push_str(l);
        s.push('\n');
    }
    s
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Parses the triplet format. Without explicit label lists, labels are
/// taken in order of first appearance.
pub fn parse_triplets(
    text: &str,
    source: &str,
    row_labels: Option<Vec<String>>,
    col_labels: Option<Vec<String>>,
) -> Result<SparseMatrix> {
    let mut lines = text.lines().enumerate();
    let (n_rows, n_cols, nnz) = match lines.next() {
        None => return Err(Error::parse(source, 1, "missing header")),
        Some((_, header)) => {
            let nums: Vec<usize> = header
                .split_whitespace()
                .map(|t| t.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(source, 1, "header must be `rows cols nnz`"))?;
            if nums.len() != 3 {
                return Err(Error::parse(source, 1, "header must be `rows cols nnz`"));
            }
            (nums[0], nums[1], nums[2])
        }
    };

    let fixed_rows = row_labels.is_some();
    let fixed_cols = col_labels.is_some();
    let mut rl = row_labels.unwrap_or_default();
    let mut cl = col_labels.unwrap_or_default();
    let mut ri = index_of(&rl);
    let mut ci = index_of(&cl);
    let mut cells = Vec::with_capacity(nnz);

    fn lookup(
        label: &str,
        labels: &mut Vec<String>,
        index: &mut HashMap<String, usize>,
        fixed: bool,
    ) -> Option<usize> {
        if let Some(&i) = index.get(label) {
            return Some(i);
        }
        if fixed {
            return None;
        }
        index.insert(label.to_string(), labels.len());
        labels.push(label.to_string());
        Some(labels.len() - 1)
    }

    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(r), Some(c), Some(v), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::parse(
                source,
                i + 1,
                "expected row<TAB>col<TAB>score",
            ));
        };
        let v: f64 = v
            .parse()
            .map_err(|_| Error::parse(source, i + 1, format!("bad score {v:?}")))?;
        if !v.is_finite() || v < 0.0 {
            return Err(Error::parse(
                source,
                i + 1,
                "scores must be finite and non-negative",
            ));
        }
        let r = lookup(r, &mut rl, &mut ri, fixed_rows)
            .ok_or_else(|| Error::parse(source, i + 1, format!("unknown row {r:?}")))?;
        let c = lookup(c, &mut cl, &mut ci, fixed_cols)
            .ok_or_else(|| Error::parse(source, i + 1, format!("unknown column {c:?}")))?;
        cells.push((r, c, v));
    }
    if cells.len() != nnz {
        return Err(Error::parse(
            source,
            1,
            format!("header says {nnz} cells, found {}", cells.len()),
        ));
    }
    if (fixed_rows && rl.len() != n_rows) || (fixed_cols && cl.len() != n_cols) {
        return Err(Error::parse(
            source,
            1,
            "header dimensions disagree with label files",
        ));
    }
    // Without label files, pad with placeholder labels so the shape matches
    // the header.
    while rl.len() < n_rows {
        rl.push(format!("__row{}", rl.len()));
    }
    while cl.len() < n_cols {
        cl.push(format!("__col{}", cl.len()));
    }
    Ok(SparseMatrix::from_cells(rl, cl, cells))
}

/// Formats a float with 9 significant digits, `%.9g` style.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        trim_zeros(&fixed).to_string()
    } else {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
