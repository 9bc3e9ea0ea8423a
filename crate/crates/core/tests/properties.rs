use std::collections::BTreeMap;

use proptest::prelude::*;

use expvec::bpso::{run_bpso, run_bpso_observed, Objective, SwarmConfig};
use expvec::corpus::{build_vocabulary, Caps, Pos, Sentence, Token};
use expvec::criteria::{
    build_labeled_sets, normalize_criteria, CriteriaRow, CriteriaTable, Criterion,
};
use expvec::eval::{evaluate, spearman, TestSet};
use expvec::matrix::{
    build_cooc_decay, build_cooc_window, cosine, mask_columns, ppmi_transform, SparseMatrix,
};
use expvec::rules::{builtin_rule_set, train_tree, TreeParams};
use expvec::wordsel::{column_influence, distance_matrix, InfluenceMethod};

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}/N")).collect()
}

fn to_matrix(rows: &[Vec<f64>]) -> SparseMatrix {
    SparseMatrix::from_dense(labels("w", rows.len()), labels("c", rows[0].len()), rows)
}

/// Non-negative matrix with roughly half its cells zero.
fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2..=max_rows, 2..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(
            prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..10.0], c),
            r,
        )
    })
}

const LEMMAS: [&str; 6] = ["ab", "cd", "ef", "gh", "ij", "kl"];
const POS: [Pos; 5] = [
    Pos::Noun,
    Pos::Verb,
    Pos::Adjective,
    Pos::Adverb,
    Pos::Other,
];

fn sentences() -> impl Strategy<Value = Vec<Sentence>> {
    prop::collection::vec(
        prop::collection::vec((0..LEMMAS.len(), 0..POS.len()), 1..15).prop_map(|toks| Sentence {
            tokens: toks
                .into_iter()
                .map(|(l, p)| Token {
                    surface: LEMMAS[l].to_string(),
                    lemma: LEMMAS[l].to_string(),
                    pos: POS[p],
                })
                .collect(),
        }),
        1..20,
    )
}

fn all_labels() -> Vec<String> {
    LEMMAS
        .iter()
        .flat_map(|l| ["N", "V", "J", "R"].map(|t| format!("{l}/{t}")))
        .collect()
}

fn criteria_rows(n: usize) -> impl Strategy<Value = Vec<CriteriaRow>> {
    prop::collection::vec((1u32..5000, 0.0f64..900.0, 0u32..50), n).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (wf, ws, nz))| CriteriaRow {
                word: format!("w{i}/N"),
                wf: wf as f64,
                ws,
                nz: nz as f64,
                wf_norm: 0.0,
                ws_norm: 0.0,
                nz_norm: 0.0,
                label: None,
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ppmi_cells_are_positive_and_finite(m in matrix(12, 12)) {
        prop_assume!(m.iter().flatten().sum::<f64>() > 0.0);
        let p = ppmi_transform(&to_matrix(&m)).unwrap();
        for (_, _, v) in p.iter_cells() {
            prop_assert!(v > 0.0 && v.is_finite());
        }
    }

    #[test]
    fn decay_cells_never_exceed_unbounded_window_counts(corpus in sentences()) {
        let words = all_labels();
        let decay = build_cooc_decay(&corpus, words.clone(), words.clone(), 0.1);
        let window = build_cooc_window(&corpus, words.clone(), words, usize::MAX);
        for (r, c, v) in decay.iter_cells() {
            prop_assert!(v <= window.get(r, c));
            prop_assert!(v > 0.0);
        }
        prop_assert_eq!(decay.nnz(), window.nnz());
    }

    #[test]
    fn cosine_is_bounded(u in prop::collection::vec(-5.0f64..5.0, 8), v in prop::collection::vec(-5.0f64..5.0, 8)) {
        let c = cosine(&u, &v);
        prop_assert!((-1.0..=1.0).contains(&c));
        let (ua, va): (Vec<f64>, Vec<f64>) = (u.iter().map(|x| x.abs()).collect(), v.iter().map(|x| x.abs()).collect());
        prop_assert!((0.0..=1.0).contains(&cosine(&ua, &va)));
    }

    #[test]
    fn masking_all_columns_in_is_identity(m in matrix(8, 8)) {
        let m = to_matrix(&m);
        let kept = mask_columns(&m, &vec![true; m.n_cols()]).unwrap();
        prop_assert_eq!(kept, m);
    }

    #[test]
    fn vocabulary_respects_corpus_counts(corpus in sentences(), cap in 1usize..5) {
        let caps = Caps { noun: cap, verb: cap, adjective: cap, adverb: cap };
        let v1 = build_vocabulary(corpus.iter().cloned().map(Ok), &caps).unwrap();
        let v2 = build_vocabulary(corpus.iter().cloned().map(Ok), &caps).unwrap();
        prop_assert_eq!(v1.entries(), v2.entries());
        let mut tokens: BTreeMap<Pos, u64> = BTreeMap::new();
        for t in corpus.iter().flat_map(|s| &s.tokens) {
            *tokens.entry(t.pos).or_default() += 1;
        }
        for pos in Pos::OPEN {
            let entries: Vec<_> = v1.entries().iter().filter(|e| e.pos == pos).collect();
            prop_assert!(entries.len() <= cap);
            let sum: u64 = entries.iter().map(|e| e.freq).sum();
            prop_assert!(sum <= tokens.get(&pos).copied().unwrap_or(0));
            for e in entries {
                prop_assert!(e.freq >= 1);
                let seen = corpus.iter().flat_map(|s| &s.tokens).any(|t| t.lemma == e.lemma && t.pos == pos);
                prop_assert!(seen);
            }
        }
    }

    #[test]
    fn labeled_sets_partition(rows in criteria_rows(40), m in 1usize..15, a_mask in prop::collection::vec(any::<bool>(), 40)) {
        let mut table = CriteriaTable::from_rows(rows, false);
        let a: Vec<String> = table.words().zip(&a_mask).filter(|(_, &b)| b).map(|(w, _)| w.to_string()).collect();
        let sets = build_labeled_sets(&mut table, &a, m);
        prop_assert_eq!(sets.s.len(), m);
        prop_assert_eq!(sets.f.len(), m);
        prop_assert_eq!(sets.z.len(), m);
        let triple: std::collections::BTreeSet<String> = sets.s.iter().chain(&sets.f).chain(&sets.z).cloned().collect();
        prop_assert_eq!(&sets.triple, &triple);
        let common_out: std::collections::BTreeSet<String> = sets.common.union(&sets.out_set).cloned().collect();
        prop_assert_eq!(&common_out, &sets.a);
        let common_in: std::collections::BTreeSet<String> = sets.common.union(&sets.in_set).cloned().collect();
        prop_assert_eq!(&common_in, &sets.triple);
        prop_assert!(sets.common.is_disjoint(&sets.in_set));
        prop_assert!(sets.common.is_disjoint(&sets.out_set));
        prop_assert!(sets.in_set.is_disjoint(&sets.out_set));
        let u: std::collections::BTreeSet<String> = sets.a.union(&sets.triple).cloned().collect();
        prop_assert_eq!(&sets.u_at, &u);
    }

    #[test]
    fn normalized_criteria_lie_in_unit_interval(rows in criteria_rows(25)) {
        let table = normalize_criteria(CriteriaTable::from_rows(rows, false));
        for c in Criterion::ALL {
            let vals: Vec<f64> = table.rows().iter().map(|r| r.norm(c)).collect();
            prop_assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
            if table.rows().iter().any(|r| r.raw(c) > 0.0) {
                prop_assert_eq!(vals.iter().cloned().fold(0.0, f64::max), 1.0);
            }
        }
    }

    #[test]
    fn final_rule_is_monotone(ws in 0.0f64..1.0, nz in 0.0f64..1.0, wf in 0.0f64..0.01, bump in 0.0f64..0.5, which in 0usize..3) {
        let rs = builtin_rule_set("final_normalized").unwrap();
        let mk = |ws, nz, wf| CriteriaRow {
            word: "w/N".into(), wf, ws, nz, wf_norm: wf, ws_norm: ws, nz_norm: nz, label: None,
        };
        let before = mk(ws, nz, wf);
        let after = match which {
            0 => mk(ws + bump, nz, wf),
            1 => mk(ws, nz + bump, wf),
            _ => mk(ws, nz, wf + bump),
        };
        if rs.decide(&before, true) {
            prop_assert!(rs.decide(&after, true));
        }
    }

    #[test]
    fn tree_rules_agree_with_traversal(rows in criteria_rows(60), labels in prop::collection::vec(1u8..=3, 60), depth in 1usize..6) {
        let rows = rows.into_iter().zip(labels).map(|(mut r, l)| { r.label = Some(l); r }).collect();
        let table = CriteriaTable::from_rows(rows, false);
        let params = TreeParams { max_depth: depth, min_leaf: 3, normalized: false };
        let tree = train_tree(&table, None, &params).unwrap();
        prop_assert!(tree.depth() <= depth);
        let rules = tree.to_rules();
        for r in table.labeled() {
            prop_assert_eq!(rules.decide(r, false), tree.selects(r));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn swarm_stays_feasible(m in matrix(8, 14), n_select in 1usize..8, seed in any::<u64>()) {
        let train = to_matrix(&m);
        prop_assume!(n_select <= train.n_cols());
        let cfg = SwarmConfig { population: 5, iterations: 6, n_select, seed, ..SwarmConfig::default() };
        let objective = Objective::new(&train);
        let mut ok = true;
        let res = run_bpso_observed(&train, &cfg, |_, ps| {
            for p in ps {
                ok &= p.position.count_ones() == n_select;
                ok &= p.pbest_value == objective.evaluate(p.pbest_position.bits());
                ok &= p.velocity.iter().all(|v| v.abs() <= cfg.v_max);
            }
        }).unwrap();
        prop_assert!(ok);
        prop_assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
        let again = run_bpso(&train, &cfg).unwrap();
        prop_assert_eq!(again, res);
    }

    #[test]
    fn objective_ignores_column_order(m in matrix(6, 10), mask_bits in prop::collection::vec(any::<bool>(), 10), shift in 1usize..9) {
        let n = m[0].len();
        let mask = &mask_bits[..n];
        let perm: Vec<usize> = (0..n).map(|j| (j + shift) % n).collect();
        let permuted: Vec<Vec<f64>> = m.iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
        let pmask: Vec<bool> = perm.iter().map(|&j| mask[j]).collect();
        let a = Objective::new(&to_matrix(&m)).evaluate(mask);
        let b = Objective::new(&to_matrix(&permuted)).evaluate(&pmask);
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert_eq!(Objective::new(&to_matrix(&m)).evaluate(&vec![true; n]), 0.0);
    }

    #[test]
    fn influence_methods_agree(m in matrix(12, 10)) {
        let m = to_matrix(&m);
        let naive = column_influence(&m, InfluenceMethod::Naive).unwrap();
        let inc = column_influence(&m, InfluenceMethod::Incremental).unwrap();
        for (a, b) in naive.scores.iter().zip(&inc.scores) {
            prop_assert!((a - b).abs() <= 1e-6);
            prop_assert!(b.is_finite() && *b >= 0.0);
        }
        let d = distance_matrix(&m).unwrap();
        for i in 0..d.h() {
            for k in 0..d.h() {
                prop_assert_eq!(d.get(i, k).to_bits(), d.get(k, i).to_bits());
            }
        }
    }

    #[test]
    fn spearman_bounds_and_rank_invariance(x in prop::collection::vec(-20i32..20, 3..30), seed in any::<u64>()) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v + ((seed >> (i % 60)) & 7) as f64).collect();
        if let Ok(r) = spearman(&x, &y) {
            prop_assert!((-1.0..=1.0).contains(&r));
            let cubed: Vec<f64> = y.iter().map(|v| v * v * v).collect();
            prop_assert_eq!(spearman(&x, &cubed).unwrap(), r);
            prop_assert_eq!(spearman(&x, &x).unwrap(), 1.0);
        }
    }

    #[test]
    fn evaluation_ignores_pair_order(m in matrix(10, 6), pairs in prop::collection::vec((0usize..14, 0usize..14, 0.0f64..10.0), 4..20), rot in 0usize..20) {
        let mut seen = std::collections::BTreeSet::new();
        let pairs: Vec<(String, String, f64)> = pairs
            .into_iter()
            .filter(|(a, b, _)| a != b && seen.insert((*a.min(b), *a.max(b))))
            .map(|(a, b, s)| (format!("w{a}"), format!("w{b}"), s))
            .collect();
        prop_assume!(!pairs.is_empty());
        let mut rotated = pairs.clone();
        rotated.rotate_left(rot % pairs.len());
        rotated.reverse();
        let m = to_matrix(&m);
        let a = evaluate("m", &m, &TestSet { name: "t".into(), pairs: pairs.clone() });
        let b = evaluate("m", &m, &TestSet { name: "t".into(), pairs: rotated });
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(&a, &b);
                prop_assert_eq!(a.pairs_used + a.oov, pairs.len());
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "pair order changed success"),
        }
    }
}
