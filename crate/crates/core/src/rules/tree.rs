//! Gini-impurity classification tree over (WS, WF, NZ).

use serde::{Deserialize, Serialize};

use super::{Action, Comparator, Condition, Rule, RuleSet, Scale};
use crate::corpus::{split_label, Pos};
use crate::criteria::{CriteriaRow, CriteriaTable, Criterion};
use crate::error::{Error, Result};

const N_CLASSES: usize = 3;
const EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Split on normalized rather than raw criteria.
    pub normalized: bool,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 6,
            min_leaf: 20,
            normalized: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        label: u8,
        /// Samples of class 1, 2, 3 that reached the leaf.
        counts: [usize; N_CLASSES],
    },
    Split {
        criterion: String,
        threshold: f64,
        counts: [usize; N_CLASSES],
        /// Samples with value `<= threshold`.
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn counts(&self) -> [usize; N_CLASSES] {
        match self {
            Node::Leaf { counts, .. } | Node::Split { counts, .. } => *counts,
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn n_leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
    pub normalized: bool,
}

fn gini(counts: &[usize; N_CLASSES]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Majority class; ties go to the lower label.
fn majority(counts: &[usize; N_CLASSES]) -> u8 {
    let mut best = 0;
    for k in 1..N_CLASSES {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    best as u8 + 1
}

struct Sample {
    x: [f64; 3],
    class: usize,
}

fn class_counts(samples: &[&Sample]) -> [usize; N_CLASSES] {
    let mut c = [0; N_CLASSES];
    for s in samples {
        c[s.class] += 1;
    }
    c
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn best_split(samples: &[&Sample], min_leaf: usize) -> Option<BestSplit> {
    let n = samples.len();
    let total = class_counts(samples);
    let mut best: Option<BestSplit> = None;
    for feature in 0..3 {
        let mut sorted: Vec<&Sample> = samples.to_vec();
        sorted.sort_by(|a, b| a.x[feature].total_cmp(&b.x[feature]));
        let mut left = [0usize; N_CLASSES];
        for k in 0..n - 1 {
            left[sorted[k].class] += 1;
            let (lo, hi) = (sorted[k].x[feature], sorted[k + 1].x[feature]);
            if lo == hi {
                continue;
            }
            let n_left = k + 1;
            if n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let mut right = total;
            for c in 0..N_CLASSES {
                right[c] -= left[c];
            }
            let impurity =
                (n_left as f64 * gini(&left) + (n - n_left) as f64 * gini(&right)) / n as f64;
            if best.as_ref().is_none_or(|b| impurity < b.impurity - EPS) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(BestSplit {
                    feature,
                    threshold,
                    impurity,
                });
            }
        }
    }
    best
}

fn grow(samples: &[&Sample], depth: usize, params: &TreeParams) -> Node {
    let counts = class_counts(samples);
    let leaf = || Node::Leaf {
        label: majority(&counts),
        counts,
    };
    let parent = gini(&counts);
    if depth >= params.max_depth || parent == 0.0 || samples.len() < 2 {
        return leaf();
    }
    match best_split(samples, params.min_leaf.max(1)) {
        Some(split) if split.impurity < parent - EPS => {
            let (l, r): (Vec<&Sample>, Vec<&Sample>) = samples
                .iter()
                .partition(|s| s.x[split.feature] <= split.threshold);
            Node::Split {
                criterion: Criterion::ALL[split.feature].name().to_string(),
                threshold: split.threshold,
                counts,
                left: Box::new(grow(&l, depth + 1, params)),
                right: Box::new(grow(&r, depth + 1, params)),
            }
        }
        _ => leaf(),
    }
}

/// Trains a tree on the labeled rows of `table`, optionally restricted to
/// words of one POS class. Splits minimize weighted Gini impurity at
/// midpoints between adjacent distinct values; equal-impurity candidates
/// resolve to the earlier criterion (WS, WF, NZ) and then the lower
/// threshold. A node is split only if that strictly lowers impurity.
pub fn train_tree(
    table: &CriteriaTable,
    pos_filter: Option<Pos>,
    params: &TreeParams,
) -> Result<DecisionTree> {
    let samples: Vec<Sample> = table
        .labeled()
        .filter(|r| match pos_filter {
            None => true,
            Some(p) => split_label(&r.word).is_some_and(|(_, pos)| pos == p),
        })
        .map(|r| Sample {
            x: Criterion::ALL.map(|c| r.value(c, params.normalized)),
            class: (r.label.expect("labeled") - 1) as usize,
        })
        .collect();
    if samples.is_empty() || samples.len() < params.min_leaf {
        return Err(Error::Config(format!(
            "{} labeled samples, need at least max(1, min_leaf = {})",
            samples.len(),
            params.min_leaf
        )));
    }
    if params.normalized && !table.is_normalized() {
        return Err(Error::MissingCriterion("normalized criteria".into()));
    }
    let refs: Vec<&Sample> = samples.iter().collect();
    Ok(DecisionTree {
        root: grow(&refs, 0, params),
        normalized: params.normalized,
    })
}

impl DecisionTree {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn n_leaves(&self) -> usize {
        self.root.n_leaves()
    }

    /// Majority label of the leaf `row` falls into.
    pub fn classify(&self, row: &CriteriaRow) -> u8 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label, .. } => return *label,
                Node::Split {
                    criterion,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    let c: Criterion = criterion.parse().expect("tree criterion");
                    node = if row.value(c, self.normalized) <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Labels 1 (Common) and 2 (IN) are context-word classes.
    pub fn selects(&self, row: &CriteriaRow) -> bool {
        self.classify(row) != 3
    }

    /// One rule per leaf: the conjunction of the root-to-leaf conditions.
    pub fn to_rules(&self) -> RuleSet {
        let mut rules = Vec::with_capacity(self.n_leaves());
        let mut path = Vec::new();
        collect_rules(&self.root, &mut path, &mut rules);
        let scale = if self.normalized {
            Scale::Normalized
        } else {
            Scale::Raw
        };
        RuleSet::new(rules, scale)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad tree json: {e}")))
    }
}

/// Keeps only the tightest lower and upper bound per criterion, in order
/// of first appearance on the path.
fn tighten(path: &[Condition]) -> Vec<Condition> {
    let mut order: Vec<Criterion> = Vec::new();
    let mut lower: [Option<f64>; 3] = [None; 3];
    let mut upper: [Option<f64>; 3] = [None; 3];
    let slot = |c: Criterion| {
        Criterion::ALL
            .iter()
            .position(|&x| x == c)
            .expect("criterion")
    };
    for cond in path {
        let i = slot(cond.criterion);
        if !order.contains(&cond.criterion) {
            order.push(cond.criterion);
        }
        match cond.cmp {
            Comparator::Gt(t) => lower[i] = Some(lower[i].map_or(t, |l: f64| l.max(t))),
            Comparator::Le(t) => upper[i] = Some(upper[i].map_or(t, |u: f64| u.min(t))),
            _ => unreachable!("tree paths only hold > and <="),
        }
    }
    let mut out = Vec::new();
    for c in order {
        let i = slot(c);
        if let Some(l) = lower[i] {
            out.push(Condition::new(c, Comparator::Gt(l)));
        }
        if let Some(u) = upper[i] {
            out.push(Condition::new(c, Comparator::Le(u)));
        }
    }
    out
}

fn collect_rules(node: &Node, path: &mut Vec<Condition>, out: &mut Vec<Rule>) {
    match node {
        Node::Leaf { label, .. } => out.push(Rule {
            conditions: tighten(path),
            action: if *label == 3 {
                Action::Unselect
            } else {
                Action::Select
            },
        }),
        Node::Split {
            criterion,
            threshold,
            left,
            right,
            ..
        } => {
            let c: Criterion = criterion.parse().expect("tree criterion");
            path.push(Condition::new(c, Comparator::Le(*threshold)));
            collect_rules(left, path, out);
            path.pop();
            path.push(Condition::new(c, Comparator::Gt(*threshold)));
            collect_rules(right, path, out);
            path.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(word: &str, wf: f64, ws: f64, nz: f64, label: u8) -> CriteriaRow {
        CriteriaRow {
            word: word.into(),
            wf,
            ws,
            nz,
            wf_norm: 0.0,
            ws_norm: 0.0,
            nz_norm: 0.0,
            label: Some(label),
        }
    }

    fn params(min_leaf: usize) -> TreeParams {
        TreeParams {
            max_depth: 6,
            min_leaf,
            normalized: false,
        }
    }

    #[test]
    fn single_class_is_a_leaf() {
        let t = CriteriaTable::from_rows(
            vec![row("a/N", 1.0, 2.0, 3.0, 1), row("b/N", 5.0, 1.0, 0.0, 1)],
            false,
        );
        let tree = train_tree(&t, None, &params(1)).unwrap();
        assert_eq!(tree.depth(), 0);
        let rules = tree.to_rules();
        assert_eq!(rules.to_text(), "SELECT: TRUE\n");
    }

    #[test]
    fn one_dimensional_midpoint() {
        // WS and NZ are constant, so only WF can separate.
        let t = CriteriaTable::from_rows(
            vec![row("a/N", 1.0, 0.0, 0.0, 3), row("b/N", 10.0, 0.0, 0.0, 1)],
            false,
        );
        let tree = train_tree(&t, None, &params(1)).unwrap();
        match &tree.root {
            Node::Split {
                criterion,
                threshold,
                ..
            } => {
                assert_eq!(criterion, "WF");
                assert_eq!(*threshold, 5.5);
            }
            other => panic!("{other:?}"),
        }
        let rules = tree.to_rules();
        assert_eq!(rules.rules.len(), 2);
        assert_eq!(rules.to_text(), "UNSELECT: WF<=5.5\nSELECT: WF>5.5\n");
    }

    #[test]
    fn criterion_order_breaks_ties() {
        // WS and WF separate equally well; WS comes first.
        let t = CriteriaTable::from_rows(
            vec![row("a/N", 1.0, 1.0, 0.0, 3), row("b/N", 10.0, 10.0, 0.0, 1)],
            false,
        );
        let tree = train_tree(&t, None, &params(1)).unwrap();
        assert!(matches!(&tree.root, Node::Split { criterion, .. } if criterion == "WS"));
    }

    #[test]
    fn min_leaf_blocks_split() {
        let t = CriteriaTable::from_rows(
            vec![
                row("a/N", 1.0, 0.0, 0.0, 3),
                row("b/N", 2.0, 0.0, 0.0, 1),
                row("c/N", 3.0, 0.0, 0.0, 1),
            ],
            false,
        );
        let tree = train_tree(&t, None, &params(2)).unwrap();
        assert_eq!(tree.depth(), 0);
        assert!(train_tree(&t, None, &params(5)).is_err());
    }

    #[test]
    fn pos_filter() {
        let t = CriteriaTable::from_rows(
            vec![row("a/N", 1.0, 0.0, 0.0, 3), row("b/V", 10.0, 0.0, 0.0, 1)],
            false,
        );
        let tree = train_tree(&t, Some(Pos::Verb), &params(1)).unwrap();
        assert_eq!(tree.root.counts(), [1, 0, 0]);
        assert!(train_tree(&t, Some(Pos::Adverb), &params(1)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let t = CriteriaTable::from_rows(
            vec![row("a/N", 1.0, 0.0, 0.0, 3), row("b/N", 10.0, 0.0, 0.0, 2)],
            false,
        );
        let tree = train_tree(&t, None, &params(1)).unwrap();
        assert_eq!(DecisionTree::from_json(&tree.to_json()).unwrap(), tree);
    }

    #[test]
    fn majority_tie_goes_to_lower_label() {
        assert_eq!(majority(&[2, 2, 1]), 1);
        assert_eq!(majority(&[0, 3, 3]), 2);
    }
}
