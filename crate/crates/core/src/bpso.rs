//! Binary particle swarm optimization over context columns.
//!
//! Each particle position is a 0/1 weight per context column with exactly
//! `n_select` ones. The swarm minimizes the squared distortion of pairwise
//! cosine similarities between the full training vectors and the vectors
//! restricted to the selected columns.
//!
//! Velocity follows the standard inertia / cognitive / social update. A bit
//! is set with probability `sigmoid(v)`; afterwards the position is repaired
//! to exactly `n_select` ones by dropping the set bits with the lowest
//! velocity (or adding the unset bits with the highest velocity), ties going
//! to the lower index.
//!
//! Random draws happen in a fixed order so runs reproduce bit-for-bit:
//! initialization draws, per particle, the selected indices and then one
//! velocity per bit; each move draws, per particle, `(r1, r2)` for every bit
//! followed by one uniform per bit for the position.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{finish_cosine, SparseMatrix};

/// Binary weight per context column.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeightVector {
    bits: Vec<bool>,
}

impl WeightVector {
    pub fn new(bits: Vec<bool>) -> Self {
        WeightVector { bits }
    }

    pub fn ones(len: usize) -> Self {
        WeightVector {
            bits: vec![true; len],
        }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = vec![false; len];
        for i in indices {
            bits[i] = true;
        }
        WeightVector { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }

    /// Labels of the selected columns.
    pub fn selected_labels(&self, labels: &[String]) -> BTreeSet<String> {
        self.selected().map(|i| labels[i].clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwarmConfig {
    pub population: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub n_select: usize,
    pub v_max: f64,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            population: 30,
            iterations: 20,
            inertia: 0.7,
            cognitive: 0.15,
            social: 0.15,
            n_select: 1000,
            v_max: 4.0,
            seed: 42,
        }
    }
}

impl SwarmConfig {
    fn validate(&self, n_cols: usize) -> Result<()> {
        if self.population == 0 || self.iterations == 0 {
            return Err(Error::Config(
                "population and iterations must be positive".into(),
            ));
        }
        if self.n_select > n_cols {
            return Err(Error::Config(format!(
                "cannot select {} of {} context columns",
                self.n_select, n_cols
            )));
        }
        if self.v_max.is_nan() || self.v_max <= 0.0 {
            return Err(Error::Config("v_max must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Particle {
    pub position: WeightVector,
    pub velocity: Vec<f64>,
    pub pbest_position: WeightVector,
    pub pbest_value: f64,
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Pairwise-cosine distortion objective over a fixed set of training rows.
///
/// The full-vector cosines are computed once; each evaluation only rebuilds
/// the masked norms and dot products.
pub struct Objective {
    rows: Vec<Vec<(u32, f64)>>,
    n_cols: usize,
    full: Vec<f64>,
}

fn sq_norm(row: &[(u32, f64)]) -> f64 {
    row.iter().map(|&(_, v)| v * v).sum::<f64>()
}

impl Objective {
    pub fn new(train: &SparseMatrix) -> Self {
        let rows = train.rows().to_vec();
        let n_cols = train.n_cols();
        let full = pair_cosines(&rows, n_cols).into_iter().flatten().collect();
        Objective { rows, n_cols, full }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Sum over row pairs `i < j` of `(cos(w_i, w_j) - cos(w'_i, w'_j))^2`,
    /// where `w'` keeps only the masked-in columns. A zero masked row has
    /// cosine 0 with everything.
    pub fn evaluate(&self, mask: &[bool]) -> f64 {
        assert_eq!(mask.len(), self.n_cols, "mask length");
        let masked: Vec<Vec<(u32, f64)>> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .copied()
                    .filter(|&(c, _)| mask[c as usize])
                    .collect()
            })
            .collect();
        let cos = pair_cosines(&masked, self.n_cols);
        self.full
            .iter()
            .zip(cos.into_iter().flatten())
            .map(|(f, c)| (f - c) * (f - c))
            .sum()
    }
}

/// Upper-triangle cosines: element `i` holds `cos(row_i, row_j)` for
/// `j = i+1 .. n`.
fn pair_cosines(rows: &[Vec<(u32, f64)>], n_cols: usize) -> Vec<Vec<f64>> {
    let norms: Vec<f64> = rows.iter().map(|r| sq_norm(r)).collect();
    (0..rows.len())
        .into_par_iter()
        .map_init(
            || vec![0.0f64; n_cols],
            |dense, i| {
                for &(c, v) in &rows[i] {
                    dense[c as usize] = v;
                }
                let out = ((i + 1)..rows.len())
                    .map(|j| {
                        let dot: f64 = rows[j].iter().map(|&(c, v)| dense[c as usize] * v).sum();
                        finish_cosine(dot, norms[i], norms[j])
                    })
                    .collect();
                for &(c, _) in &rows[i] {
                    dense[c as usize] = 0.0;
                }
                out
            },
        )
        .collect()
}

/// Objective of `mask` on `train`.
pub fn objective(mask: &WeightVector, train: &SparseMatrix) -> Result<f64> {
    if mask.len() != train.n_cols() {
        return Err(Error::LengthMismatch {
            expected: train.n_cols(),
            got: mask.len(),
        });
    }
    Ok(Objective::new(train).evaluate(mask.bits()))
}

/// New velocity: inertia plus cognitive and social pulls, with fresh
/// `r1, r2` per bit, clamped to `[-v_max, v_max]`.
pub fn step_velocity(
    p: &Particle,
    gbest: &WeightVector,
    cfg: &SwarmConfig,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let x = p.position.bits();
    let pb = p.pbest_position.bits();
    let gb = gbest.bits();
    p.velocity
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            let xj = x[j] as u8 as f64;
            let next = cfg.inertia * v
                + cfg.cognitive * r1 * (pb[j] as u8 as f64 - xj)
                + cfg.social * r2 * (gb[j] as u8 as f64 - xj);
            next.clamp(-cfg.v_max, cfg.v_max)
        })
        .collect()
}

/// Samples bits from `sigmoid(velocity)` and repairs to `n_select` ones.
pub fn step_position(velocity: &[f64], n_select: usize, rng: &mut impl Rng) -> WeightVector {
    let tentative = velocity
        .iter()
        .map(|&v| rng.random::<f64>() < sigmoid(v))
        .collect();
    repair(tentative, velocity, n_select)
}

/// Forces exactly `n_select` ones, ranking bits by velocity (equivalently
/// by `sigmoid(v)`), ties by lower index.
pub fn repair(mut bits: Vec<bool>, velocity: &[f64], n_select: usize) -> WeightVector {
    let ones = bits.iter().filter(|&&b| b).count();
    if ones > n_select {
        let mut set: Vec<usize> = (0..bits.len()).filter(|&i| bits[i]).collect();
        set.sort_by(|&a, &b| velocity[a].total_cmp(&velocity[b]).then(a.cmp(&b)));
        for &i in &set[..ones - n_select] {
            bits[i] = false;
        }
    } else if ones < n_select {
        let mut unset: Vec<usize> = (0..bits.len()).filter(|&i| !bits[i]).collect();
        unset.sort_by(|&a, &b| velocity[b].total_cmp(&velocity[a]).then(a.cmp(&b)));
        for &i in &unset[..n_select - ones] {
            bits[i] = true;
        }
    }
    WeightVector { bits }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpsoResult {
    pub best: WeightVector,
    pub best_value: f64,
    /// Swarm best after each iteration's evaluation.
    pub trace: Vec<f64>,
}

impl BpsoResult {
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration,gbest_value\n");
        for (i, v) in self.trace.iter().enumerate() {
            s.push_str(&format!("{},{}\n", i + 1, v));
        }
        s
    }
}

pub fn run_bpso(train: &SparseMatrix, cfg: &SwarmConfig) -> Result<BpsoResult> {
    run_bpso_observed(train, cfg, |_, _| {})
}

/// Runs the swarm, calling `observer(iteration, particles)` after each
/// evaluation round. Iteration `k` evaluates the current positions, updates
/// personal and swarm bests, and (except after the last round) moves every
/// particle.
pub fn run_bpso_observed(
    train: &SparseMatrix,
    cfg: &SwarmConfig,
    mut observer: impl FnMut(usize, &[Particle]),
) -> Result<BpsoResult> {
    let n_cols = train.n_cols();
    cfg.validate(n_cols)?;
    let objective = Objective::new(train);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut particles: Vec<Particle> = (0..cfg.population)
        .map(|_| {
            let idx = sample(&mut rng, n_cols, cfg.n_select);
            let position = WeightVector::from_indices(n_cols, idx.iter());
            let velocity = (0..n_cols)
                .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                .collect();
            Particle {
                pbest_position: position.clone(),
                position,
                velocity,
                pbest_value: f64::INFINITY,
            }
        })
        .collect();

    let mut gbest = particles[0].position.clone();
    let mut gbest_value = f64::INFINITY;
    let mut trace = Vec::with_capacity(cfg.iterations);

    for k in 0..cfg.iterations {
        let values: Vec<f64> = particles
            .par_iter()
            .map(|p| objective.evaluate(p.position.bits()))
            .collect();
        for (p, v) in particles.iter_mut().zip(values) {
            if v < p.pbest_value {
                p.pbest_value = v;
                p.pbest_position = p.position.clone();
            }
        }
        for p in &particles {
            if p.pbest_value < gbest_value {
                gbest_value = p.pbest_value;
                gbest = p.pbest_position.clone();
            }
        }
        trace.push(gbest_value);
        observer(k, &particles);

        if k + 1 < cfg.iterations {
            for p in particles.iter_mut() {
                p.velocity = step_velocity(p, &gbest, cfg, &mut rng);
                p.position = step_position(&p.velocity, cfg.n_select, &mut rng);
            }
        }
    }

    Ok(BpsoResult {
        best: gbest,
        best_value: gbest_value,
        trace,
    })
}

/// Seed of the `run`-th golden extraction run.
pub fn derive_seed(base: u64, run: u64) -> u64 {
    // splitmix64
    let mut z = base.wrapping_add(run.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoldenResult {
    pub words: BTreeSet<String>,
    /// `(seed, best_value)` of every run, in run order.
    pub runs: Vec<(u64, f64)>,
    /// Indices into `runs` of the kept runs.
    pub kept: Vec<usize>,
}

/// Runs the swarm `n_runs` times and intersects the selections of the
/// `n_keep` runs with the lowest objective (ties by run order).
pub fn extract_golden(
    train: &SparseMatrix,
    cfg: &SwarmConfig,
    n_runs: usize,
    n_keep: usize,
) -> Result<GoldenResult> {
    if n_keep == 0 || n_runs < n_keep {
        return Err(Error::Config(format!(
            "need 1 <= keep ({n_keep}) <= runs ({n_runs})"
        )));
    }
    let results: Vec<(u64, BpsoResult)> = (0..n_runs as u64)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(cfg.seed, r);
            let run_cfg = SwarmConfig {
                seed,
                ..cfg.clone()
            };
            run_bpso(train, &run_cfg).map(|res| (seed, res))
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| {
        results[a]
            .1
            .best_value
            .total_cmp(&results[b].1.best_value)
            .then(a.cmp(&b))
    });
    let kept: Vec<usize> = order[..n_keep].to_vec();
    let selections: Vec<BTreeSet<String>> = kept
        .iter()
        .map(|&i| results[i].1.best.selected_labels(train.col_labels()))
        .collect();
    Ok(GoldenResult {
        words: intersect_all(&selections),
        runs: results.iter().map(|(s, r)| (*s, r.best_value)).collect(),
        kept,
    })
}

pub fn intersect_all(sets: &[BTreeSet<String>]) -> BTreeSet<String> {
    let mut iter = sets.iter();
    let Some(first) = iter.next() else {
        return BTreeSet::new();
    };
    iter.fold(first.clone(), |acc, s| {
        acc.intersection(s).cloned().collect()
    })
}

/// Golden words shared by two corpora.
pub fn common_golden(g1: &BTreeSet<String>, g2: &BTreeSet<String>) -> BTreeSet<String> {
    g1.intersection(g2).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    fn particle(pos: &[bool], vel: &[f64]) -> Particle {
        Particle {
            position: WeightVector::new(pos.to_vec()),
            velocity: vel.to_vec(),
            pbest_position: WeightVector::new(pos.to_vec()),
            pbest_value: 0.0,
        }
    }

    fn small_matrix() -> SparseMatrix {
        SparseMatrix::from_dense(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["x".into(), "y".into()],
            &[vec![1.0, 2.0], vec![2.0, 1.0], vec![0.0, 3.0]],
        )
    }

    #[test]
    fn stationary_particle_stays_put() {
        let p = particle(&[true, false], &[0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = step_velocity(&p, &p.position, &SwarmConfig::default(), &mut rng);
        assert_eq!(v, vec![0.0, 0.0]);
    }

    #[test]
    fn pure_inertia() {
        let p = particle(&[true], &[1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = step_velocity(&p, &p.position, &SwarmConfig::default(), &mut rng);
        assert!((v[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn velocity_clamped() {
        let p = particle(&[false], &[5.2 / 0.7]);
        let cfg = SwarmConfig {
            cognitive: 0.0,
            social: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(step_velocity(&p, &p.position, &cfg, &mut rng), vec![4.0]);
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(10.0) - 0.9999546).abs() < 1e-7);
    }

    #[test]
    fn strong_velocities_fix_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = step_position(&[10.0, 10.0, -10.0, -10.0], 2, &mut rng);
        assert_eq!(w.bits(), &[true, true, false, false]);
    }

    #[test]
    fn repair_keeps_highest() {
        let w = repair(vec![true; 4], &[0.1, 3.0, -1.0, 2.0], 1);
        assert_eq!(w.bits(), &[false, true, false, false]);
        let w = repair(vec![false; 4], &[0.1, 3.0, -1.0, 3.0], 2);
        assert_eq!(w.bits(), &[false, true, false, true]);
        let w = repair(vec![true; 3], &[1.0, 1.0, 1.0], 1);
        assert_eq!(w.bits(), &[false, false, true]);
    }

    #[test]
    fn objective_all_ones_is_zero() {
        let m = small_matrix();
        assert_eq!(objective(&WeightVector::ones(2), &m).unwrap(), 0.0);
    }

    #[test]
    fn objective_by_hand() {
        // mask (1,0): masked rows a=(1,0), b=(2,0), c=(0,0)
        let m = small_matrix();
        let v = objective(&WeightVector::new(vec![true, false]), &m).unwrap();
        let c_ab = 4.0 / 5.0;
        let c_ac = 6.0 / (5f64.sqrt() * 3.0);
        let c_bc = 3.0 / (5f64.sqrt() * 3.0);
        let expect = (c_ab - 1.0f64).powi(2) + c_ac.powi(2) + c_bc.powi(2);
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn objective_length_mismatch() {
        assert!(objective(&WeightVector::ones(3), &small_matrix()).is_err());
    }

    #[test]
    fn single_particle_single_iteration_returns_initial() {
        let m = small_matrix();
        let cfg = SwarmConfig {
            population: 1,
            iterations: 1,
            n_select: 1,
            ..Default::default()
        };
        let mut initial = None;
        let res =
            run_bpso_observed(&m, &cfg, |_, ps| initial = Some(ps[0].position.clone())).unwrap();
        assert_eq!(Some(res.best), initial);
        assert_eq!(res.trace.len(), 1);
    }

    #[test]
    fn too_many_selected_is_an_error() {
        let cfg = SwarmConfig {
            n_select: 3,
            ..Default::default()
        };
        assert!(run_bpso(&small_matrix(), &cfg).is_err());
    }

    #[test]
    fn intersections() {
        assert_eq!(
            intersect_all(&[
                set(&["a", "b", "c"]),
                set(&["a", "b", "d"]),
                set(&["a", "c", "b"])
            ]),
            set(&["a", "b"])
        );
        assert_eq!(intersect_all(&[set(&["a"]), set(&["b"])]), set(&[]));
        assert_eq!(
            common_golden(&set(&["x", "y"]), &set(&["y", "z"])),
            set(&["y"])
        );
        assert_eq!(common_golden(&set(&["x"]), &set(&["x"])), set(&["x"]));
    }

    #[test]
    fn golden_keep_one_is_best_run() {
        let m = small_matrix();
        let cfg = SwarmConfig {
            population: 3,
            iterations: 2,
            n_select: 1,
            ..Default::default()
        };
        let g = extract_golden(&m, &cfg, 4, 1).unwrap();
        assert_eq!(g.words.len(), 1);
        assert_eq!(g.runs.len(), 4);
        let best = g.runs.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        assert_eq!(g.runs[g.kept[0]].1, best);
        assert!(extract_golden(&m, &cfg, 1, 2).is_err());
    }
}
