use super::SparseMatrix;
use crate::error::{Error, Result};

/// Positive pointwise mutual information (log base 2).
///
/// Probabilities come from the score mass: `P(w,c) = x/T`, `P(w) = row/T`,
/// `P(c) = col/T`. Cells whose PMI is not positive are dropped.
pub fn ppmi_transform(raw: &SparseMatrix) -> Result<SparseMatrix> {
    let mut row_sums = vec![0.0f64; raw.n_rows()];
    let mut col_sums = vec![0.0f64; raw.n_cols()];
    for (r, c, v) in raw.iter_cells() {
        row_sums[r] += v;
        col_sums[c] += v;
    }
    let total: f64 = row_sums.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyMass);
    }

    let rows = raw
        .rows()
        .iter()
        .enumerate()
        .map(|(r, row)| {
            row.iter()
                .filter_map(|&(c, x)| {
                    let pmi = (x * total / (row_sums[r] * col_sums[c as usize])).log2();
                    (pmi > 0.0).then_some((c, pmi))
                })
                .collect()
        })
        .collect();
    Ok(SparseMatrix::from_rows(
        raw.row_labels().to_vec(),
        raw.col_labels().to_vec(),
        rows,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(dense: &[Vec<f64>]) -> SparseMatrix {
        let rows = (0..dense.len()).map(|i| format!("r{i}")).collect();
        let cols = (0..dense[0].len()).map(|i| format!("c{i}")).collect();
        SparseMatrix::from_dense(rows, cols, dense)
    }

    #[test]
    fn two_by_two_worked_example() {
        let p = ppmi_transform(&m(&[vec![2.0, 0.0], vec![1.0, 1.0]])).unwrap();
        // P(w0,c0)=1/2, P(w0)=1/2, P(c0)=3/4 -> log2(4/3)
        assert!((p.get(0, 0) - (4.0f64 / 3.0).log2()).abs() < 1e-15);
        assert!((p.get(0, 0) - 0.415037499).abs() < 1e-9);
        assert_eq!(p.get(0, 1), 0.0);
        // P(w1,c0)=1/4, P(w1)=1/2, P(c0)=3/4 -> log2(2/3) < 0
        assert_eq!(p.get(1, 0), 0.0);
        assert!((p.get(1, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_cell_is_zero() {
        let p = ppmi_transform(&m(&[vec![7.0]])).unwrap();
        assert_eq!(p.nnz(), 0);
    }

    #[test]
    fn uniform_square_matrix_is_all_zero() {
        // P(w,c) = 1/n^2 = P(w) P(c): PMI is exactly zero everywhere.
        let p = ppmi_transform(&m(&vec![vec![3.0; 4]; 4])).unwrap();
        assert_eq!(p.nnz(), 0);
    }

    #[test]
    fn empty_mass_is_an_error() {
        assert!(matches!(
            ppmi_transform(&m(&[vec![0.0, 0.0]])),
            Err(Error::EmptyMass)
        ));
    }

    #[test]
    fn labels_preserved() {
        let raw = m(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let p = ppmi_transform(&raw).unwrap();
        assert_eq!(p.row_labels(), raw.row_labels());
        assert_eq!(p.col_labels(), raw.col_labels());
        assert!((p.get(0, 0) - 1.0).abs() < 1e-15);
    }
}
