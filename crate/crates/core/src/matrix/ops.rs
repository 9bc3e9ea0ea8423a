use super::SparseMatrix;
use crate::error::{Error, Result};

/// Cosine similarity of two dense vectors; 0 when either has zero norm.
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), v.len(), "cosine of vectors with different lengths");
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    finish_cosine(dot, nu, nv)
}

/// Cosine similarity of two sparse rows sorted by column.
pub fn sparse_cosine(u: &[(u32, f64)], v: &[(u32, f64)]) -> f64 {
    let nu: f64 = u.iter().map(|&(_, x)| x * x).sum();
    let nv: f64 = v.iter().map(|&(_, x)| x * x).sum();
    finish_cosine(sparse_dot(u, v), nu, nv)
}

pub fn sparse_dot(u: &[(u32, f64)], v: &[(u32, f64)]) -> f64 {
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < u.len() && j < v.len() {
        match u[i].0.cmp(&v[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += u[i].1 * v[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    dot
}

#[inline]
pub(crate) fn finish_cosine(dot: f64, nu: f64, nv: f64) -> f64 {
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0)
}

/// Drops every cell whose column bit is off. Column labels are kept, so the
/// surviving dimensions still name their context words.
pub fn mask_columns(m: &SparseMatrix, mask: &[bool]) -> Result<SparseMatrix> {
    if mask.len() != m.n_cols() {
        return Err(Error::LengthMismatch {
            expected: m.n_cols(),
            got: mask.len(),
        });
    }
    let rows = m
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .copied()
                .filter(|&(c, _)| mask[c as usize])
                .collect()
        })
        .collect();
    Ok(SparseMatrix::from_rows(
        m.row_labels().to_vec(),
        m.col_labels().to_vec(),
        rows,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_cases() {
        assert!((cosine(&[1.0, 2.0], &[1.0, 2.0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert!((cosine(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) - 10.0 / 14.0).abs() < 1e-15);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn sparse_matches_dense() {
        let u = [(0u32, 1.0), (2, 3.0)];
        let v = [(0u32, 3.0), (1, 2.0), (2, 1.0)];
        let d = cosine(&[1.0, 0.0, 3.0], &[3.0, 2.0, 1.0]);
        assert!((sparse_cosine(&u, &v) - d).abs() < 1e-15);
        assert_eq!(sparse_cosine(&[(0, 1.0)], &[(1, 1.0)]), 0.0);
        assert_eq!(sparse_cosine(&[], &[(1, 1.0)]), 0.0);
    }

    fn sample() -> SparseMatrix {
        SparseMatrix::from_dense(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into(), "z".into()],
            &[vec![1.0, 2.0, 0.0], vec![0.0, 3.0, 4.0]],
        )
    }

    #[test]
    fn mask_all_ones_is_identity() {
        let m = sample();
        assert_eq!(mask_columns(&m, &[true; 3]).unwrap(), m);
    }

    #[test]
    fn mask_all_zeros_is_empty() {
        let m = mask_columns(&sample(), &[false; 3]).unwrap();
        assert_eq!(m.nnz(), 0);
        assert_eq!(m.n_cols(), 3);
    }

    #[test]
    fn mask_single_column() {
        let m = mask_columns(&sample(), &[false, true, false]).unwrap();
        assert_eq!(m.row(0), &[(1, 2.0)]);
        assert_eq!(m.row(1), &[(1, 3.0)]);
    }

    #[test]
    fn mask_length_mismatch() {
        assert!(matches!(
            mask_columns(&sample(), &[true]),
            Err(Error::LengthMismatch {
                expected: 3,
                got: 1
            })
        ));
    }
}
