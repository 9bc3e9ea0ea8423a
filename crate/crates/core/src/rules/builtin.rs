//! The published rule sets, as frozen constants.

use std::collections::BTreeMap;

use super::{Comparator::*, Condition, Rule, RuleSet, Scale};
use crate::criteria::Criterion::{self, Nz, Wf, Ws};

pub const BUILTIN_NAMES: [&str; 6] = [
    "initial_raw",
    "final_normalized",
    "rule_base_1",
    "rule_base_2",
    "rule_base_3",
    "final_raw",
];

fn c(criterion: Criterion, cmp: super::Comparator) -> Condition {
    Condition::new(criterion, cmp)
}

/// The IF / ELSE IF block distilled from the decision trees, on raw
/// criteria. The leading WF guard rejects rare words before any Select
/// branch is tried.
fn initial_raw() -> RuleSet {
    RuleSet::new(
        vec![
            Rule::unselect(vec![c(Wf, Lt(5900.0))]),
            Rule::select(vec![c(Wf, Ge(11063.0)), c(Nz, Gt(30.0))]),
            Rule::select(vec![c(Wf, Ge(8000.0)), c(Ws, Gt(700.0))]),
            Rule::select(vec![
                c(Wf, Range(6600.0, 11063.0)),
                c(Ws, Gt(763.0)),
                c(Nz, Gt(39.5)),
            ]),
            Rule::select(vec![
                c(Wf, Range(6600.0, 11063.0)),
                c(Ws, Gt(643.0)),
                c(Nz, Gt(54.5)),
            ]),
            Rule::select(vec![
                c(Wf, Range(6600.0, 11063.0)),
                c(Ws, Gt(746.0)),
                c(Nz, Range(39.5, 54.5)),
            ]),
            Rule::select(vec![
                c(Wf, Range(5900.0, 6600.0)),
                c(Ws, Gt(763.0)),
                c(Nz, Ge(54.5)),
            ]),
            Rule::select(vec![c(Wf, Gt(7000.0)), c(Nz, Ge(54.5))]),
        ],
        Scale::Raw,
    )
}

fn final_normalized() -> RuleSet {
    RuleSet::new(
        vec![Rule::select(vec![
            c(Ws, Gt(0.6)),
            c(Nz, Gt(0.24)),
            c(Wf, Gt(0.0015)),
        ])],
        Scale::Normalized,
    )
}

fn rule_base_1() -> RuleSet {
    RuleSet::new(
        vec![
            Rule::select(vec![c(Ws, Gt(700.0)), c(Wf, Gt(6000.0))]),
            Rule::select(vec![c(Ws, Range(600.0, 700.0)), c(Wf, Gt(8000.0))]),
        ],
        Scale::Raw,
    )
}

fn rule_base_2() -> RuleSet {
    RuleSet::new(
        vec![
            Rule::select(vec![c(Ws, Gt(700.0)), c(Nz, Gt(40.0))]),
            Rule::select(vec![c(Ws, Range(600.0, 700.0)), c(Nz, Gt(50.0))]),
        ],
        Scale::Raw,
    )
}

fn rule_base_3() -> RuleSet {
    RuleSet::new(
        vec![
            Rule::select(vec![c(Wf, Gt(8000.0)), c(Nz, Gt(30.0))]),
            Rule::select(vec![c(Wf, Range(6000.0, 8000.0)), c(Nz, Gt(50.0))]),
        ],
        Scale::Raw,
    )
}

fn final_raw() -> RuleSet {
    RuleSet::new(
        vec![Rule::select(vec![
            c(Ws, Gt(700.0)),
            c(Nz, Gt(40.0)),
            c(Wf, Gt(8000.0)),
        ])],
        Scale::Raw,
    )
}

pub fn builtin_rule_set(name: &str) -> Option<RuleSet> {
    match name {
        "initial_raw" => Some(initial_raw()),
        "final_normalized" => Some(final_normalized()),
        "rule_base_1" => Some(rule_base_1()),
        "rule_base_2" => Some(rule_base_2()),
        "rule_base_3" => Some(rule_base_3()),
        "final_raw" => Some(final_raw()),
        _ => None,
    }
}

pub fn builtin_rule_sets() -> BTreeMap<&'static str, RuleSet> {
    BUILTIN_NAMES
        .iter()
        .map(|&n| (n, builtin_rule_set(n).expect("builtin")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::CriteriaRow;

    fn row(wf: f64, ws: f64, nz: f64) -> CriteriaRow {
        CriteriaRow {
            word: "w".into(),
            wf,
            ws,
            nz,
            wf_norm: wf,
            ws_norm: ws,
            nz_norm: nz,
            label: None,
        }
    }

    #[test]
    fn pinned_thresholds() {
        let text: Vec<(&str, String)> = builtin_rule_sets()
            .into_iter()
            .map(|(n, rs)| (n, rs.to_text()))
            .collect();
        let expect = [
            ("final_normalized", "SELECT: WS>0.6 & NZ>0.24 & WF>0.0015\n"),
            ("final_raw", "SELECT: WS>700 & NZ>40 & WF>8000\n"),
            (
                "initial_raw",
                "UNSELECT: WF<5900\n\
                 SELECT: WF>=11063 & NZ>30\n\
                 SELECT: WF>=8000 & WS>700\n\
                 SELECT: 6600<=WF<=11063 & WS>763 & NZ>39.5\n\
                 SELECT: 6600<=WF<=11063 & WS>643 & NZ>54.5\n\
                 SELECT: 6600<=WF<=11063 & WS>746 & 39.5<=NZ<=54.5\n\
                 SELECT: 5900<=WF<=6600 & WS>763 & NZ>=54.5\n\
                 SELECT: WF>7000 & NZ>=54.5\n",
            ),
            (
                "rule_base_1",
                "SELECT: WS>700 & WF>6000\nSELECT: 600<=WS<=700 & WF>8000\n",
            ),
            (
                "rule_base_2",
                "SELECT: WS>700 & NZ>40\nSELECT: 600<=WS<=700 & NZ>50\n",
            ),
            (
                "rule_base_3",
                "SELECT: WF>8000 & NZ>30\nSELECT: 6000<=WF<=8000 & NZ>50\n",
            ),
        ];
        assert_eq!(text.len(), expect.len());
        for ((n, t), (en, et)) in text.iter().zip(expect) {
            assert_eq!(*n, en);
            assert_eq!(t, et, "{n}");
        }
    }

    #[test]
    fn all_builtins_valid() {
        for rs in builtin_rule_sets().values() {
            rs.validate().unwrap();
        }
        assert!(builtin_rule_set("nope").is_none());
    }

    #[test]
    fn final_normalized_examples() {
        let rs = final_normalized();
        assert!(rs.decide(&row(0.002, 0.7, 0.3), true));
        assert!(!rs.decide(&row(0.001, 0.7, 0.3), true));
    }

    #[test]
    fn initial_block_guard() {
        let rs = initial_raw();
        // rare word: rejected by the first branch even with huge WS / NZ
        assert!(!rs.decide(&row(5000.0, 10_000.0, 100.0), false));
        assert!(rs.decide(&row(12_000.0, 0.0, 31.0), false));
        assert!(rs.decide(&row(6000.0, 800.0, 60.0), false));
        assert!(!rs.decide(&row(6000.0, 700.0, 60.0), false));
    }
}
