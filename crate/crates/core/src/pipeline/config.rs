use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bpso::SwarmConfig;
use crate::corpus::Caps;
use crate::criteria::WsAggregation;
use crate::error::{Error, Result};
use crate::rules::{builtin_rule_set, RuleSet, Scale, BUILTIN_NAMES};
use crate::wordsel::InfluenceMethod;

/// Pipeline settings, read from a TOML file.
///
/// Relative paths are resolved against the directory of the config file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub corpus: CorpusSection,
    #[serde(default)]
    pub vocab: VocabSection,
    #[serde(default)]
    pub cooc: CoocSection,
    pub criteria: CriteriaSection,
    #[serde(default)]
    pub rules: RulesSection,
    #[serde(default)]
    pub tree: TreeSection,
    #[serde(default)]
    pub bpso: BpsoSection,
    #[serde(default)]
    pub golden: GoldenSection,
    #[serde(default)]
    pub wordsel: WordselSection,
    #[serde(default)]
    pub eval: EvalSection,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_seed() -> u64 {
    42
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub a: PathBuf,
    /// Second corpus for golden words. Without it the two halves of `a`
    /// are used.
    #[serde(default)]
    pub b: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VocabSection {
    /// `N=..,V=..,J=..,R=..`
    pub caps: String,
}

impl Default for VocabSection {
    fn default() -> Self {
        VocabSection {
            caps: "N=20000,V=10000,J=10000,R=5000".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoocSection {
    pub decay: f64,
    /// Window of the baseline counts.
    pub window: usize,
}

impl Default for CoocSection {
    fn default() -> Self {
        CoocSection {
            decay: 0.1,
            window: 10,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaSection {
    pub embeddings: PathBuf,
    #[serde(default = "d_candidates")]
    pub candidates: usize,
    /// Size of set A, the most frequent words.
    #[serde(default = "d_a_size")]
    pub a_size: usize,
    #[serde(default = "d_m")]
    pub m: usize,
    #[serde(default = "d_eps")]
    pub zero_eps: f64,
    /// `sum` or `mean`
    #[serde(default = "d_aggregation")]
    pub aggregation: String,
}

fn d_candidates() -> usize {
    10_000
}
fn d_a_size() -> usize {
    5_000
}
fn d_m() -> usize {
    3_000
}
fn d_eps() -> f64 {
    0.01
}
fn d_aggregation() -> String {
    "sum".into()
}

/// A rule set is a builtin name or a rule file path; `*_scale` tells
/// whether a file's thresholds refer to raw or normalized criteria.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulesSection {
    #[serde(rename = "final")]
    pub final_rules: String,
    #[serde(default = "d_normalized")]
    pub final_scale: String,
    pub initial: String,
    #[serde(default = "d_raw")]
    pub initial_scale: String,
}

fn d_normalized() -> String {
    "normalized".into()
}
fn d_raw() -> String {
    "raw".into()
}

impl Default for RulesSection {
    fn default() -> Self {
        RulesSection {
            final_rules: "final_normalized".into(),
            final_scale: d_normalized(),
            initial: "initial_raw".into(),
            initial_scale: d_raw(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSection {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeSection {
    fn default() -> Self {
        TreeSection {
            max_depth: 6,
            min_leaf: 20,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BpsoSection {
    /// N_B, context words kept by the swarm.
    pub n_select: usize,
    /// L, training rows.
    pub train_words: usize,
    pub population: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub v_max: f64,
}

impl Default for BpsoSection {
    fn default() -> Self {
        let s = SwarmConfig::default();
        BpsoSection {
            n_select: s.n_select,
            train_words: 2000,
            population: s.population,
            iterations: s.iterations,
            inertia: s.inertia,
            cognitive: s.cognitive,
            social: s.social,
            v_max: s.v_max,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GoldenSection {
    pub runs: usize,
    pub keep: usize,
}

impl Default for GoldenSection {
    fn default() -> Self {
        GoldenSection { runs: 10, keep: 3 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WordselSection {
    /// N_S, context words kept.
    pub n_select: usize,
    /// h, training rows.
    pub train_words: usize,
    /// `incremental` or `naive`
    pub method: String,
}

impl Default for WordselSection {
    fn default() -> Self {
        WordselSection {
            n_select: 1000,
            train_words: 2000,
            method: "incremental".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    #[serde(default)]
    pub testsets: Vec<PathBuf>,
    #[serde(default = "d_baseline")]
    pub baseline: String,
}

fn d_baseline() -> String {
    "X_baseline".into()
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            testsets: Vec::new(),
            baseline: d_baseline(),
        }
    }
}

fn parse_scale(s: &str) -> Result<Scale> {
    match s {
        "raw" => Ok(Scale::Raw),
        "normalized" => Ok(Scale::Normalized),
        _ => Err(Error::Config(format!("unknown rule scale {s:?}"))),
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out_dir);
        fix(&mut self.corpus.a);
        if let Some(b) = &mut self.corpus.b {
            fix(b);
        }
        fix(&mut self.criteria.embeddings);
        self.eval.testsets.iter_mut().for_each(fix);
        for spec in [&mut self.rules.final_rules, &mut self.rules.initial] {
            if !BUILTIN_NAMES.contains(&spec.as_str()) {
                let mut p = PathBuf::from(&*spec);
                fix(&mut p);
                *spec = p.display().to_string();
            }
        }
    }

    pub fn caps(&self) -> Result<Caps> {
        self.vocab.caps.parse()
    }

    pub fn aggregation(&self) -> Result<WsAggregation> {
        match self.criteria.aggregation.as_str() {
            "sum" => Ok(WsAggregation::Sum),
            "mean" => Ok(WsAggregation::Mean),
            other => Err(Error::Config(format!("unknown WS aggregation {other:?}"))),
        }
    }

    pub fn wordsel_method(&self) -> Result<InfluenceMethod> {
        self.wordsel.method.parse()
    }

    pub fn swarm(&self) -> SwarmConfig {
        let b = &self.bpso;
        SwarmConfig {
            population: b.population,
            iterations: b.iterations,
            inertia: b.inertia,
            cognitive: b.cognitive,
            social: b.social,
            n_select: b.n_select,
            v_max: b.v_max,
            seed: self.seed,
        }
    }

    /// Rule file paths, if the rule sets are not builtin.
    pub fn rule_files(&self) -> Vec<PathBuf> {
        [&self.rules.final_rules, &self.rules.initial]
            .into_iter()
            .filter(|s| !BUILTIN_NAMES.contains(&s.as_str()))
            .map(PathBuf::from)
            .collect()
    }

    pub fn final_rule_set(&self) -> Result<RuleSet> {
        load_rule_set(&self.rules.final_rules, &self.rules.final_scale)
    }

    pub fn initial_rule_set(&self) -> Result<RuleSet> {
        load_rule_set(&self.rules.initial, &self.rules.initial_scale)
    }

    /// Checks sizes and that every input file exists.
    pub fn validate(&self) -> Result<()> {
        self.caps()?;
        self.aggregation()?;
        self.wordsel_method()?;
        self.final_rule_set()?;
        self.initial_rule_set()?;
        let c = &self.criteria;
        if c.m > c.candidates {
            return Err(Error::Config(format!(
                "M = {} exceeds the candidate count {}",
                c.m, c.candidates
            )));
        }
        if self.bpso.n_select > c.a_size {
            return Err(Error::Config(format!(
                "N_B = {} exceeds |A| = {}",
                self.bpso.n_select, c.a_size
            )));
        }
        if self.wordsel.n_select > c.a_size {
            return Err(Error::Config(format!(
                "N_S = {} exceeds |A| = {}",
                self.wordsel.n_select, c.a_size
            )));
        }
        if self.golden.keep == 0 || self.golden.keep > self.golden.runs {
            return Err(Error::Config("golden needs 1 <= keep <= runs".into()));
        }
        let mut files = vec![&self.corpus.a, &self.criteria.embeddings];
        files.extend(&self.corpus.b);
        files.extend(&self.eval.testsets);
        for f in files {
            if !f.is_file() {
                return Err(Error::Config(format!(
                    "input file {} does not exist",
                    f.display()
                )));
            }
        }
        Ok(())
    }
}

fn load_rule_set(spec: &str, scale: &str) -> Result<RuleSet> {
    if let Some(rs) = builtin_rule_set(spec) {
        return Ok(rs);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| Error::io(spec, e))?;
    RuleSet::parse_text(&text, parse_scale(scale)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg =
            PipelineConfig::parse("[corpus]\na = \"c.vert\"\n[criteria]\nembeddings = \"e.txt\"\n")
                .unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.cooc.window, 10);
        assert_eq!(cfg.criteria.m, 3000);
        assert_eq!(cfg.bpso.n_select, 1000);
        assert_eq!(cfg.rules.final_rules, "final_normalized");
        assert!(cfg.corpus.b.is_none());
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = PipelineConfig::parse(
            "[corpus]\na = \"c\"\nbogus = 1\n[criteria]\nembeddings = \"e\"\n",
        );
        assert!(e.is_err());
    }

    #[test]
    fn relative_paths_resolve() {
        let mut cfg = PipelineConfig::parse(
            "[corpus]\na = \"c.vert\"\n[criteria]\nembeddings = \"/abs/e.txt\"\n[rules]\nfinal = \"final_normalized\"\ninitial = \"my.rules\"\n",
        )
        .unwrap();
        cfg.resolve_paths(Path::new("/base"));
        assert_eq!(cfg.corpus.a, PathBuf::from("/base/c.vert"));
        assert_eq!(cfg.criteria.embeddings, PathBuf::from("/abs/e.txt"));
        assert_eq!(cfg.rules.initial, "/base/my.rules");
        assert_eq!(cfg.rules.final_rules, "final_normalized");
    }
}
