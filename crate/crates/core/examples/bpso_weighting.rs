//! Binary PSO on a matrix whose second half duplicates the first: keeping
//! one copy of each column leaves every pairwise cosine unchanged.

use expvec::bpso::{objective, run_bpso, SwarmConfig, WeightVector};
use expvec::matrix::SparseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let half = 10;
    let dense: Vec<Vec<f64>> = (0..40)
        .map(|_| {
            let base: Vec<f64> = (0..half).map(|_| rng.random::<f64>()).collect();
            base.iter().chain(&base).copied().collect()
        })
        .collect();
    let rows = (0..40).map(|i| format!("r{i}")).collect();
    let cols = (0..2 * half).map(|i| format!("c{i}")).collect();
    let train = SparseMatrix::from_dense(rows, cols, &dense);

    println!(
        "all columns: {}",
        objective(&WeightVector::ones(2 * half), &train)?
    );
    let cfg = SwarmConfig {
        n_select: half,
        population: 20,
        iterations: 30,
        ..SwarmConfig::default()
    };
    let res = run_bpso(&train, &cfg)?;
    println!(
        "first gbest {:.4}, final {:.4}",
        res.trace[0], res.best_value
    );
    println!("kept: {:?}", res.best.selected_labels(train.col_labels()));
    Ok(())
}
