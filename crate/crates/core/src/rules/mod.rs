//! Threshold rules over word criteria.
//!
//! A [`RuleSet`] is an ordered IF / ELSE IF chain: the first rule whose
//! conditions all hold decides the word, and a word that matches no rule is
//! not selected.

mod builtin;
mod tree;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{CriteriaRow, CriteriaTable, Criterion};
use crate::error::{Error, Result};

pub use builtin::{builtin_rule_set, builtin_rule_sets, BUILTIN_NAMES};
pub use tree::{train_tree, DecisionTree, Node, TreeParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Comparator {
    Gt(f64),
    Ge(f64),
    Lt(f64),
    Le(f64),
    /// Inclusive on both ends.
    Range(f64, f64),
}

impl Comparator {
    pub fn holds(&self, x: f64) -> bool {
        match *self {
            Comparator::Gt(t) => x > t,
            Comparator::Ge(t) => x >= t,
            Comparator::Lt(t) => x < t,
            Comparator::Le(t) => x <= t,
            Comparator::Range(lo, hi) => lo <= x && x <= hi,
        }
    }

    fn is_valid(&self) -> bool {
        match *self {
            Comparator::Gt(t) | Comparator::Ge(t) | Comparator::Lt(t) | Comparator::Le(t) => {
                t.is_finite()
            }
            Comparator::Range(lo, hi) => lo.is_finite() && hi.is_finite() && lo <= hi,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Condition {
    pub criterion: Criterion,
    pub cmp: Comparator,
}

impl Condition {
    pub fn new(criterion: Criterion, cmp: Comparator) -> Self {
        Condition { criterion, cmp }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.criterion;
        match self.cmp {
            Comparator::Gt(t) => write!(f, "{c}>{t}"),
            Comparator::Ge(t) => write!(f, "{c}>={t}"),
            Comparator::Lt(t) => write!(f, "{c}<{t}"),
            Comparator::Le(t) => write!(f, "{c}<={t}"),
            Comparator::Range(lo, hi) => write!(f, "{lo}<={c}<={hi}"),
        }
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("cannot parse condition {s:?}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());

        // lo<=C<=hi
        let parts: Vec<&str> = s.split("<=").collect();
        if parts.len() == 3 {
            let criterion = parts[1].parse().map_err(|_| bad())?;
            return Ok(Condition::new(
                criterion,
                Comparator::Range(num(parts[0])?, num(parts[2])?),
            ));
        }
        for (op, make) in [
            (">=", Comparator::Ge as fn(f64) -> Comparator),
            ("<=", Comparator::Le),
            (">", Comparator::Gt),
            ("<", Comparator::Lt),
        ] {
            if let Some((lhs, rhs)) = s.split_once(op) {
                let criterion = lhs.parse().map_err(|_| bad())?;
                return Ok(Condition::new(criterion, make(num(rhs)?)));
            }
        }
        Err(bad())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Select,
    Unselect,
}

/// A conjunction of conditions with an action. No conditions means the
/// rule always matches.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub conditions: Vec<Condition>,
    pub action: Action,
}

impl Rule {
    pub fn select(conditions: Vec<Condition>) -> Self {
        Rule {
            conditions,
            action: Action::Select,
        }
    }

    pub fn unselect(conditions: Vec<Condition>) -> Self {
        Rule {
            conditions,
            action: Action::Unselect,
        }
    }

    pub fn matches(&self, row: &CriteriaRow, normalized: bool) -> bool {
        self.conditions
            .iter()
            .all(|c| c.cmp.holds(row.value(c.criterion, normalized)))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let action = match self.action {
            Action::Select => "SELECT",
            Action::Unselect => "UNSELECT",
        };
        write!(f, "{action}: ")?;
        if self.conditions.is_empty() {
            return f.write_str("TRUE");
        }
        for (i, c) in self.conditions.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (action, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("rule without action: {s:?}")))?;
        let action = match action.trim() {
            "SELECT" => Action::Select,
            "UNSELECT" => Action::Unselect,
            other => return Err(Error::Config(format!("unknown action {other:?}"))),
        };
        let body = body.trim();
        let conditions = if body == "TRUE" {
            Vec::new()
        } else {
            body.split('&').map(str::parse).collect::<Result<_>>()?
        };
        Ok(Rule { conditions, action })
    }
}

/// Which version of the criteria a rule set's thresholds refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Raw,
    Normalized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub scale: Scale,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>, scale: Scale) -> Self {
        RuleSet { rules, scale }
    }

    /// First-match-wins decision for one word.
    pub fn decide(&self, row: &CriteriaRow, normalized: bool) -> bool {
        self.rules
            .iter()
            .find(|r| r.matches(row, normalized))
            .is_some_and(|r| r.action == Action::Select)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rules.is_empty() {
            return Err(Error::Config("rule set has no rules".into()));
        }
        for rule in &self.rules {
            for c in &rule.conditions {
                if !c.cmp.is_valid() {
                    return Err(Error::Config(format!("invalid threshold in {c}")));
                }
            }
        }
        Ok(())
    }

    /// One rule per line.
    pub fn to_text(&self) -> String {
        self.rules.iter().map(|r| format!("{r}\n")).collect()
    }

    pub fn parse_text(text: &str, scale: Scale) -> Result<Self> {
        let rules = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::parse)
            .collect::<Result<_>>()?;
        let rs = RuleSet::new(rules, scale);
        rs.validate()?;
        Ok(rs)
    }
}

/// Words of the table selected by the rule set.
pub fn evaluate_rule_set(
    rs: &RuleSet,
    table: &CriteriaTable,
    normalized: bool,
) -> Result<BTreeSet<String>> {
    if normalized && !table.is_normalized() {
        return Err(Error::MissingCriterion(
            "normalized WS/NZ/WF (table was not normalized)".into(),
        ));
    }
    let picked: Vec<bool> = table
        .rows()
        .par_iter()
        .map(|r| rs.decide(r, normalized))
        .collect();
    Ok(table
        .rows()
        .iter()
        .zip(picked)
        .filter(|(_, p)| *p)
        .map(|(r, _)| r.word.clone())
        .collect())
}

/// One rule per leaf of `tree`.
pub fn tree_to_rules(tree: &DecisionTree) -> RuleSet {
    tree.to_rules()
}

/// Evaluates a rule set on the scale its thresholds were written for.
pub fn apply_rule_set(rs: &RuleSet, table: &CriteriaTable) -> Result<BTreeSet<String>> {
    evaluate_rule_set(rs, table, rs.scale == Scale::Normalized)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::normalize_criteria;

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
    fn condition_text_round_trip() {
        for s in [
            "WS>0.6",
            "NZ>=54.5",
            "WF<5900",
            "WF<=11063",
            "6600<=WF<=11063",
        ] {
            let c: Condition = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert!("XX>1".parse::<Condition>().is_err());
        assert!("WS>abc".parse::<Condition>().is_err());
    }

    #[test]
    fn rule_text_round_trip() {
        let r: Rule = "SELECT: WS>0.6 & NZ>0.24 & WF>0.0015".parse().unwrap();
        assert_eq!(r.conditions.len(), 3);
        assert_eq!(r.to_string(), "SELECT: WS>0.6 & NZ>0.24 & WF>0.0015");
        let u: Rule = "UNSELECT: TRUE".parse().unwrap();
        assert!(u.conditions.is_empty());
        assert!(u.matches(&row(0.0, 0.0, 0.0), false));
    }

    #[test]
    fn first_match_wins() {
        let rs = RuleSet::new(
            vec![
                Rule::unselect(vec![Condition::new(Criterion::Wf, Comparator::Lt(10.0))]),
                Rule::select(vec![Condition::new(Criterion::Ws, Comparator::Gt(1.0))]),
            ],
            Scale::Raw,
        );
        assert!(!rs.decide(&row(5.0, 9.0, 0.0), false));
        assert!(rs.decide(&row(15.0, 9.0, 0.0), false));
        assert!(!rs.decide(&row(15.0, 0.5, 0.0), false));
    }

    #[test]
    fn range_is_inclusive_and_validated() {
        let c = Comparator::Range(1.0, 2.0);
        assert!(c.holds(1.0) && c.holds(2.0) && !c.holds(2.5));
        let rs = RuleSet::new(
            vec![Rule::select(vec![Condition::new(
                Criterion::Ws,
                Comparator::Range(3.0, 1.0),
            )])],
            Scale::Raw,
        );
        assert!(rs.validate().is_err());
        assert!(RuleSet::new(vec![], Scale::Raw).validate().is_err());
    }

    #[test]
    fn normalized_evaluation_needs_normalized_table() {
        let t = CriteriaTable::from_rows(vec![row(1.0, 1.0, 1.0)], false);
        let rs = builtin_rule_set("final_normalized").unwrap();
        assert!(matches!(
            evaluate_rule_set(&rs, &t, true),
            Err(Error::MissingCriterion(_))
        ));
        let t = normalize_criteria(t);
        assert_eq!(evaluate_rule_set(&rs, &t, true).unwrap().len(), 1);
    }
}
