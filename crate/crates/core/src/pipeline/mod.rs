//! End-to-end construction of every matrix variant from one config file.
//!
//! Stages communicate only through files under the output directory. Each
//! stage is keyed by a provenance hash over its parameters, the hashes of
//! the stages it reads from and the content of its external input files;
//! a stage whose hash is unchanged and whose outputs are present is
//! skipped. Downstream stages always read their inputs back from disk, so
//! a cached run and a cold run produce identical files.

mod config;
mod stages;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::info;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::write_file;

pub use config::{
    BpsoSection, CoocSection, CorpusSection, CriteriaSection, EvalSection, GoldenSection,
    PipelineConfig, RulesSection, TreeSection, VocabSection, WordselSection,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Vocab,
    Cooc,
    XBaseline,
    XA,
    Criteria,
    Rules,
    XIR,
    XFR,
    XBA,
    XBFR,
    XSA,
    XSFR,
    Golden,
    XSAG,
    XSAGc,
    XBAGc,
    Eval,
}

impl Stage {
    /// Every stage, each after all of its prerequisites.
    pub const ALL: [Stage; 17] = [
        Stage::Vocab,
        Stage::Cooc,
        Stage::XBaseline,
        Stage::XA,
        Stage::Criteria,
        Stage::Rules,
        Stage::XIR,
        Stage::XFR,
        Stage::XBA,
        Stage::XBFR,
        Stage::XSA,
        Stage::XSFR,
        Stage::Golden,
        Stage::XSAG,
        Stage::XSAGc,
        Stage::XBAGc,
        Stage::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Vocab => "vocab",
            Stage::Cooc => "cooc",
            Stage::XBaseline => "X_baseline",
            Stage::XA => "X_A",
            Stage::Criteria => "criteria",
            Stage::Rules => "rules",
            Stage::XIR => "X_IR",
            Stage::XFR => "X_FR",
            Stage::XBA => "X_BA",
            Stage::XBFR => "X_BFR",
            Stage::XSA => "X_SA",
            Stage::XSFR => "X_SFR",
            Stage::Golden => "golden",
            Stage::XSAG => "X_SA_G",
            Stage::XSAGc => "X_SA_Gc",
            Stage::XBAGc => "X_BA_Gc",
            Stage::Eval => "eval",
        }
    }

    /// Stages producing a word-context matrix.
    pub fn is_matrix(self) -> bool {
        self.name().starts_with("X_")
    }

    pub fn matrices() -> impl Iterator<Item = Stage> {
        Stage::ALL.into_iter().filter(|s| s.is_matrix())
    }

    pub fn recipe(self) -> &'static str {
        match self {
            Stage::Vocab => "per-POS capped vocabulary; A and candidate set C by frequency",
            Stage::Cooc => "decay-weighted counts, vocabulary x (A u C)",
            Stage::XBaseline => "window counts over A, PPMI",
            Stage::XA => "decay counts over A, PPMI",
            Stage::Criteria => {
                "WS/WF/NZ over C, infinity-norm normalized; labeled sets; decision tree"
            }
            Stage::Rules => "FR from the final rule set, IR from the initial rule set",
            Stage::XIR => "decay counts over IR, PPMI",
            Stage::XFR => "decay counts over FR, PPMI",
            Stage::XBA => "BPSO over X_A training rows selects BA; decay counts over BA, PPMI",
            Stage::XBFR => "BPSO over X_FR training rows selects BFR; decay counts over BFR, PPMI",
            Stage::XSA => {
                "column influence over X_A training rows selects SA; decay counts over SA, PPMI"
            }
            Stage::XSFR => {
                "column influence over X_FR training rows selects SFR; decay counts over SFR, PPMI"
            }
            Stage::Golden => {
                "golden words per corpus from repeated BPSO over FR; G_c is their intersection"
            }
            Stage::XSAG => "decay counts over SA u G, PPMI",
            Stage::XSAGc => "decay counts over SA u G_c, PPMI",
            Stage::XBAGc => "decay counts over BA u G_c, PPMI (expected to degrade)",
            Stage::Eval => "Spearman correlation on the test sets, deltas against the baseline",
        }
    }

    /// Prerequisites. Evaluation depends on whichever matrices are being
    /// evaluated and is resolved by the runner.
    pub fn deps(self) -> &'static [Stage] {
        use Stage::*;
        match self {
            Vocab => &[],
            Cooc => &[Vocab],
            XBaseline => &[Vocab],
            XA => &[Vocab, Cooc],
            Criteria => &[Vocab],
            Rules => &[Criteria],
            XIR | XFR => &[Vocab, Cooc, Rules],
            XBA | XSA => &[Vocab, Cooc, XA],
            XBFR | XSFR => &[Vocab, Cooc, XFR],
            Golden => &[Vocab, Cooc, Rules],
            XSAG | XSAGc => &[Vocab, Cooc, XSA, Golden],
            XBAGc => &[Vocab, Cooc, XBA, Golden],
            Eval => &[],
        }
    }

    /// Files written, relative to the output directory.
    pub fn outputs(self) -> Vec<String> {
        let mut out: Vec<String> = match self {
            Stage::Vocab => vec!["vocab.tsv".into(), "A.txt".into(), "C.txt".into()],
            Stage::Cooc => matrix_files("raw_decay"),
            Stage::Criteria => {
                let mut v = vec![
                    "criteria.tsv".to_string(),
                    "tree.json".into(),
                    "tree_rules.txt".into(),
                ];
                v.extend(stages::LABELED_SETS.iter().map(|s| format!("sets/{s}.txt")));
                v
            }
            Stage::Rules => vec!["FR.txt".into(), "IR.txt".into()],
            Stage::XBA => vec!["BA.txt".into(), "BA_trace.csv".into()],
            Stage::XBFR => vec!["BFR.txt".into(), "BFR_trace.csv".into()],
            Stage::XSA => vec!["SA.txt".into(), "SA_scores.csv".into()],
            Stage::XSFR => vec!["SFR.txt".into(), "SFR_scores.csv".into()],
            Stage::Golden => vec![
                "golden.txt".into(),
                "golden_b.txt".into(),
                "Gc.txt".into(),
                "golden_runs.csv".into(),
            ],
            Stage::Eval => vec!["report.csv".into(), "comparisons.csv".into()],
            _ => Vec::new(),
        };
        if self.is_matrix() {
            out.extend(matrix_files(self.name()));
        }
        out
    }
}

fn matrix_files(name: &str) -> Vec<String> {
    vec![
        format!("{name}.mtx"),
        format!("{name}.mtx.rows"),
        format!("{name}.mtx.cols"),
    ]
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

/// Parses a comma-separated stage list.
pub fn parse_stages(list: &str) -> Result<Vec<Stage>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn hex_digest(h: Sha256) -> String {
    hex::encode(h.finalize())
}

/// SHA-256 of a file's content.
pub fn file_hash(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex_digest(h))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

/// One manifest row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageArtifact {
    pub name: String,
    pub recipe: String,
    pub hash: String,
    pub upstream: Vec<String>,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<String>,
    /// Number of context columns, for matrix stages.
    pub context_words: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub artifacts: Vec<StageArtifact>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Writes the manifest as JSON. An empty manifest is an error.
pub fn emit_manifest(artifacts: Vec<StageArtifact>, path: &Path) -> Result<Manifest> {
    if artifacts.is_empty() {
        return Err(Error::Config("manifest has no artifacts".into()));
    }
    let m = Manifest { artifacts };
    write_file(path, m.to_json())?;
    Ok(m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageOutcome {
    pub stage: Stage,
    pub hash: String,
    pub cached: bool,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub outcomes: Vec<StageOutcome>,
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

/// The stages to run: the requested ones plus their prerequisites, in
/// dependency order, and the matrices evaluation will cover. Requesting
/// nothing runs everything; requesting only `eval` evaluates every matrix.
pub fn plan(cfg: &PipelineConfig, requested: &[Stage]) -> Result<(Vec<Stage>, Vec<Stage>)> {
    let requested: BTreeSet<Stage> = if requested.is_empty() {
        Stage::ALL.into_iter().collect()
    } else {
        requested.iter().copied().collect()
    };
    let mut eval_targets: Vec<Stage> = Vec::new();
    if requested.contains(&Stage::Eval) {
        let baseline: Stage = cfg
            .eval
            .baseline
            .parse()
            .ok()
            .filter(|s: &Stage| s.is_matrix())
            .ok_or_else(|| Error::UnknownBaseline(cfg.eval.baseline.clone()))?;
        let asked: Vec<Stage> = requested
            .iter()
            .copied()
            .filter(|s| s.is_matrix())
            .collect();
        eval_targets = if asked.is_empty() {
            Stage::matrices().collect()
        } else {
            asked
        };
        if !eval_targets.contains(&baseline) {
            eval_targets.push(baseline);
        }
        eval_targets.sort();
    }
    let mut needed: BTreeSet<Stage> = requested.clone();
    needed.extend(&eval_targets);
    let mut stack: Vec<Stage> = needed.iter().copied().collect();
    while let Some(s) = stack.pop() {
        for &d in s.deps() {
            if needed.insert(d) {
                stack.push(d);
            }
        }
    }
    let order = Stage::ALL
        .into_iter()
        .filter(|s| needed.contains(s))
        .collect();
    Ok((order, eval_targets))
}

/// External files a stage reads.
fn stage_inputs(cfg: &PipelineConfig, stage: Stage) -> Vec<PathBuf> {
    match stage {
        Stage::Vocab | Stage::Cooc | Stage::XBaseline => vec![cfg.corpus.a.clone()],
        Stage::Criteria => vec![cfg.criteria.embeddings.clone()],
        Stage::Rules => cfg.rule_files(),
        Stage::Golden => {
            let mut v = vec![cfg.corpus.a.clone()];
            v.extend(cfg.corpus.b.clone());
            v
        }
        Stage::Eval => cfg.eval.testsets.clone(),
        _ => Vec::new(),
    }
}

/// Parameters a stage's output depends on.
fn stage_params(cfg: &PipelineConfig, stage: Stage, eval_targets: &[Stage]) -> serde_json::Value {
    match stage {
        Stage::Vocab => json!({
            "caps": cfg.vocab.caps,
            "a_size": cfg.criteria.a_size,
            "candidates": cfg.criteria.candidates,
        }),
        Stage::Cooc => json!({ "decay": cfg.cooc.decay }),
        Stage::XBaseline => json!({ "window": cfg.cooc.window }),
        Stage::Criteria => json!({
            "m": cfg.criteria.m,
            "zero_eps": cfg.criteria.zero_eps,
            "aggregation": cfg.criteria.aggregation,
            "tree": cfg.tree,
        }),
        Stage::Rules => json!({ "rules": cfg.rules }),
        Stage::XBA | Stage::XBFR => json!({
            "bpso": cfg.bpso,
            "caps": cfg.vocab.caps,
            "seed": cfg.seed,
        }),
        Stage::XSA | Stage::XSFR => json!({
            "wordsel": cfg.wordsel,
            "caps": cfg.vocab.caps,
        }),
        Stage::Golden => json!({
            "bpso": cfg.bpso,
            "golden": cfg.golden,
            "caps": cfg.vocab.caps,
            "seed": cfg.seed,
            "decay": cfg.cooc.decay,
            "two_corpora": cfg.corpus.b.is_some(),
        }),
        Stage::Eval => json!({
            "baseline": cfg.eval.baseline,
            "matrices": eval_targets.iter().map(|s| s.name()).collect::<Vec<_>>(),
        }),
        _ => json!({}),
    }
}

/// Runs the requested stages (and their prerequisites), reusing cached
/// outputs, and writes `manifest.json`.
pub fn run_pipeline(cfg: &PipelineConfig, requested: &[Stage]) -> Result<RunSummary> {
    cfg.validate()?;
    let (order, eval_targets) = plan(cfg, requested)?;
    let out = cfg.out_dir.clone();
    let cache_dir = out.join("cache");
    for d in [&out, &cache_dir, &out.join("sets")] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }

    let mut file_hashes: BTreeMap<PathBuf, String> = BTreeMap::new();
    let mut hashes: BTreeMap<Stage, String> = BTreeMap::new();
    let mut outcomes = Vec::new();
    let mut artifacts = Vec::new();

    for &stage in &order {
        let upstream: Vec<Stage> = if stage == Stage::Eval {
            eval_targets.clone()
        } else {
            stage.deps().to_vec()
        };
        let mut inputs = Vec::new();
        for p in stage_inputs(cfg, stage) {
            let h = match file_hashes.get(&p) {
                Some(h) => h.clone(),
                None => {
                    let h = file_hash(&p)?;
                    file_hashes.insert(p.clone(), h.clone());
                    h
                }
            };
            inputs.push(InputRecord {
                path: p.display().to_string(),
                sha256: h,
            });
        }
        let provenance = json!({
            "stage": stage.name(),
            "params": stage_params(cfg, stage, &eval_targets),
            "upstream": upstream.iter().map(|u| (u.name(), &hashes[u])).collect::<Vec<_>>(),
            "inputs": inputs,
        });
        let mut h = Sha256::new();
        h.update(provenance.to_string().as_bytes());
        let hash = hex_digest(h);

        let hash_file = cache_dir.join(format!("{}.hash", stage.name()));
        let outputs = stage.outputs();
        let cached = std::fs::read_to_string(&hash_file).is_ok_and(|s| s.trim() == hash)
            && outputs.iter().all(|o| out.join(o).is_file());
        if cached {
            info!("{stage}: cached");
        } else {
            let t = Instant::now();
            // a failed stage must not leave a valid-looking hash behind
            let _ = std::fs::remove_file(&hash_file);
            stages::run_stage(stage, cfg, &out, &eval_targets).map_err(|e| Error::Stage {
                stage: stage.name().to_string(),
                msg: e.to_string(),
            })?;
            write_file(&hash_file, format!("{hash}\n"))?;
            info!("{stage}: built in {:.2?}", t.elapsed());
        }

        let context_words = if stage.is_matrix() {
            let cols = out.join(format!("{}.mtx.cols", stage.name()));
            let text = std::fs::read_to_string(&cols).map_err(|e| Error::io(&cols, e))?;
            Some(text.lines().count())
        } else {
            None
        };
        artifacts.push(StageArtifact {
            name: stage.name().to_string(),
            recipe: stage.recipe().to_string(),
            hash: hash.clone(),
            upstream: upstream.iter().map(|u| u.name().to_string()).collect(),
            inputs,
            outputs,
            context_words,
        });
        hashes.insert(stage, hash.clone());
        outcomes.push(StageOutcome {
            stage,
            hash,
            cached,
        });
    }

    let manifest = emit_manifest(artifacts, &out.join("manifest.json"))?;
    Ok(RunSummary {
        outcomes,
        manifest,
        out_dir: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PipelineConfig {
        PipelineConfig::parse("[corpus]\na = \"c\"\n[criteria]\nembeddings = \"e\"\n").unwrap()
    }

    #[test]
    fn names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(s.name().parse::<Stage>().unwrap(), s);
        }
        assert!("X_nope".parse::<Stage>().is_err());
        assert_eq!(
            parse_stages("X_SA_Gc, eval").unwrap(),
            vec![Stage::XSAGc, Stage::Eval]
        );
    }

    #[test]
    fn all_is_topological() {
        for (i, s) in Stage::ALL.iter().enumerate() {
            for d in s.deps() {
                assert!(Stage::ALL[..i].contains(d), "{s} before {d}");
            }
        }
    }

    #[test]
    fn plan_closes_over_deps() {
        let (order, evals) = plan(&cfg(), &[Stage::XBaseline, Stage::Eval]).unwrap();
        assert_eq!(order, vec![Stage::Vocab, Stage::XBaseline, Stage::Eval]);
        assert_eq!(evals, vec![Stage::XBaseline]);

        let (order, evals) = plan(&cfg(), &[Stage::XSAGc]).unwrap();
        assert!(evals.is_empty());
        for s in [
            Stage::Golden,
            Stage::XSA,
            Stage::XA,
            Stage::Rules,
            Stage::Criteria,
        ] {
            assert!(order.contains(&s), "{s}");
        }
        assert!(!order.contains(&Stage::XBaseline));

        let (order, evals) = plan(&cfg(), &[]).unwrap();
        assert_eq!(order.len(), Stage::ALL.len());
        assert_eq!(evals.len(), Stage::matrices().count());
    }

    #[test]
    fn eval_adds_baseline() {
        let (order, evals) = plan(&cfg(), &[Stage::XA, Stage::Eval]).unwrap();
        assert_eq!(evals, vec![Stage::XBaseline, Stage::XA]);
        assert!(order.contains(&Stage::XBaseline));
        let mut bad = cfg();
        bad.eval.baseline = "rules".into();
        assert!(matches!(
            plan(&bad, &[Stage::Eval]),
            Err(Error::UnknownBaseline(_))
        ));
    }

    #[test]
    fn decay_changes_cooc_hash_params() {
        let a = cfg();
        let mut b = cfg();
        b.cooc.decay = 0.2;
        assert_ne!(
            stage_params(&a, Stage::Cooc, &[]),
            stage_params(&b, Stage::Cooc, &[])
        );
        assert_eq!(
            stage_params(&a, Stage::Vocab, &[]),
            stage_params(&b, Stage::Vocab, &[])
        );
    }

    #[test]
    fn empty_manifest_is_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_manifest(Vec::new(), &dir.path().join("m.json")).is_err());
    }
}
