use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use expvec::bpso::{common_golden, extract_golden, run_bpso, SwarmConfig};
use expvec::corpus::{build_vocabulary, load_corpus, Caps, CorpusFormat, Vocabulary};
use expvec::criteria::{
    build_labeled_sets, compute_criteria, emit_scatter, normalize_criteria, CriteriaTable,
    FeaturePair, WsAggregation, LABEL_COMMON, LABEL_IN, LABEL_OUT,
};
use expvec::eval::{evaluate_all, load_testset, EvalReport};
use expvec::matrix::{build_cooc, load_embeddings, ppmi_transform, SparseMatrix, Weighting};
use expvec::pipeline::{parse_stages, run_pipeline, PipelineConfig};
use expvec::rules::{apply_rule_set, builtin_rule_set, train_tree, RuleSet, Scale, TreeParams};
use expvec::wordsel::{column_influence, select_top, InfluenceMethod};

#[derive(Parser)]
#[command(
    name = "expvec",
    version,
    about = "Explicit word vectors with selected context words"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Count lemma frequencies and write the capped vocabulary.
    BuildVocab {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "N=20000,V=10000,J=10000,R=5000")]
        caps: Caps,
        #[arg(long)]
        out: PathBuf,
    },
    /// Count (target, context) co-occurrences.
    BuildCooc {
        #[arg(long)]
        corpus: PathBuf,
        /// Targets are every vocabulary word.
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value = "decay")]
        mode: String,
        #[arg(long, default_value_t = 0.1)]
        decay: f64,
        #[arg(long, default_value_t = 10)]
        window: usize,
        /// One context word label per line.
        #[arg(long)]
        contexts: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// PPMI-transform a count matrix.
    Ppmi {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute WS/WF/NZ over the most frequent candidates.
    Criteria {
        #[arg(long)]
        emb: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        candidates: usize,
        /// Size of set A used for labeling.
        #[arg(long, default_value_t = 5_000)]
        a_size: usize,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long = "M", default_value_t = 3000)]
        m: usize,
        #[arg(long, default_value = "sum")]
        aggregation: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export two criteria of a labeled word set for plotting.
    Scatter {
        #[arg(long)]
        criteria: PathBuf,
        #[arg(long, default_value = "wf-ws")]
        pair: FeaturePair,
        /// common, in, out, triple, a or u_at
        #[arg(long, default_value = "common")]
        set: String,
        #[arg(long)]
        normalized: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply or learn threshold rules.
    #[command(subcommand)]
    Rules(RulesCmd),
    /// Select context columns with a binary particle swarm.
    Bpso {
        #[command(flatten)]
        swarm: SwarmArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Golden words: the intersection of the best runs' selections.
    Golden {
        #[command(flatten)]
        swarm: SwarmArgs,
        /// Training matrix of a second corpus; G_c is written to --common-out.
        #[arg(long)]
        train_matrix_b: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        runs: usize,
        #[arg(long, default_value_t = 3)]
        keep: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        common_out: Option<PathBuf>,
    },
    /// Rank context words by leave-one-out distance change.
    Wordsel {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        train_words: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        ns: usize,
        #[arg(long, default_value = "incremental")]
        method: InfluenceMethod,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        scores: Option<PathBuf>,
    },
    /// Spearman correlation of matrices on word-similarity test sets.
    Eval {
        /// Matrix files; each is named by its file stem.
        #[arg(long, num_args = 1.., required = true)]
        matrix: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        testset: Vec<PathBuf>,
        #[arg(long, default_value = "X_baseline")]
        baseline: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full construction pipeline.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
}

#[derive(Subcommand)]
enum RulesCmd {
    /// Write the words a rule set selects.
    Apply {
        /// Builtin name or rule file.
        #[arg(long)]
        ruleset: String,
        /// Scale of a rule file's thresholds: raw or normalized.
        #[arg(long, default_value = "normalized")]
        scale: String,
        #[arg(long)]
        criteria: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a decision tree on the labeled words.
    Train {
        #[arg(long)]
        criteria: PathBuf,
        #[arg(long)]
        pos: Option<expvec::corpus::Pos>,
        #[arg(long, default_value_t = 6)]
        max_depth: usize,
        #[arg(long, default_value_t = 20)]
        min_leaf: usize,
        /// Split on normalized criteria.
        #[arg(long)]
        normalized: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rules_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PipelineCmd {
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated stage names; prerequisites are added.
        #[arg(long)]
        stages: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SwarmArgs {
    #[arg(long)]
    train_matrix: PathBuf,
    /// Restrict the training matrix to these rows.
    #[arg(long)]
    train_words: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    nb: usize,
    #[arg(long, default_value_t = 30)]
    pop: usize,
    #[arg(long, default_value_t = 20)]
    iters: usize,
    #[arg(long, default_value_t = 0.7)]
    w: f64,
    #[arg(long, default_value_t = 0.15)]
    c1: f64,
    #[arg(long, default_value_t = 0.15)]
    c2: f64,
    #[arg(long, default_value_t = 4.0)]
    vmax: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl SwarmArgs {
    fn config(&self) -> SwarmConfig {
        SwarmConfig {
            population: self.pop,
            iterations: self.iters,
            inertia: self.w,
            cognitive: self.c1,
            social: self.c2,
            n_select: self.nb,
            v_max: self.vmax,
            seed: self.seed,
        }
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn write_lines<'a>(path: &Path, words: impl IntoIterator<Item = &'a String>) -> Result<()> {
    let text: String = words.into_iter().map(|w| format!("{w}\n")).collect();
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn training_matrix(path: &Path, rows: Option<&Path>) -> Result<SparseMatrix> {
    let m = SparseMatrix::load(path)?;
    Ok(match rows {
        Some(r) => m.select_rows(&read_lines(r)?),
        None => m,
    })
}

fn rule_set(spec: &str, scale: &str) -> Result<RuleSet> {
    if let Some(rs) = builtin_rule_set(spec) {
        return Ok(rs);
    }
    let scale = match scale {
        "raw" => Scale::Raw,
        "normalized" => Scale::Normalized,
        other => bail!("unknown scale {other:?}"),
    };
    Ok(RuleSet::parse_text(
        &read_lines(Path::new(spec))?.join("\n"),
        scale,
    )?)
}

fn labeled_subset(table: &CriteriaTable, set: &str) -> Result<BTreeSet<String>> {
    let labels: &[u8] = match set {
        "common" => &[LABEL_COMMON],
        "in" => &[LABEL_IN],
        "out" => &[LABEL_OUT],
        "triple" => &[LABEL_COMMON, LABEL_IN],
        "a" => &[LABEL_COMMON, LABEL_OUT],
        "u_at" => &[LABEL_COMMON, LABEL_IN, LABEL_OUT],
        other => bail!("unknown set {other:?}"),
    };
    Ok(table
        .labeled()
        .filter(|r| r.label.is_some_and(|l| labels.contains(&l)))
        .map(|r| r.word.clone())
        .collect())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::BuildVocab { corpus, caps, out } => {
            let v = build_vocabulary(load_corpus(&corpus, CorpusFormat::default())?, &caps)?;
            v.save(&out)?;
            println!("{} words", v.len());
        }
        Cmd::BuildCooc {
            corpus,
            vocab,
            mode,
            decay,
            window,
            contexts,
            out,
        } => {
            let weighting = match mode.as_str() {
                "decay" => Weighting::decay(decay),
                "window" => Weighting::Window(window),
                other => bail!("unknown mode {other:?}"),
            };
            let targets: Vec<String> = Vocabulary::load(&vocab)?.labels().collect();
            let m = build_cooc(
                load_corpus(&corpus, CorpusFormat::default())?,
                targets,
                read_lines(&contexts)?,
                weighting,
            )?;
            m.save(&out)?;
            println!("{} x {} matrix, {} cells", m.n_rows(), m.n_cols(), m.nnz());
        }
        Cmd::Ppmi { input, out } => {
            ppmi_transform(&SparseMatrix::load(&input)?)?.save(&out)?;
        }
        Cmd::Criteria {
            emb,
            vocab,
            candidates,
            a_size,
            eps,
            m,
            aggregation,
            out,
        } => {
            let aggregation = match aggregation.as_str() {
                "sum" => WsAggregation::Sum,
                "mean" => WsAggregation::Mean,
                other => bail!("unknown aggregation {other:?}"),
            };
            let vocab = Vocabulary::load(&vocab)?;
            let emb = load_embeddings(&emb)?;
            let table = compute_criteria(
                &vocab.most_frequent(candidates),
                &emb,
                &vocab,
                eps,
                aggregation,
            )?;
            let mut table = normalize_criteria(table);
            let sets = build_labeled_sets(&mut table, &vocab.most_frequent(a_size), m);
            table.save(&out)?;
            println!(
                "{} candidates; common {}, IN {}, OUT {}",
                table.len(),
                sets.common.len(),
                sets.in_set.len(),
                sets.out_set.len()
            );
        }
        Cmd::Scatter {
            criteria,
            pair,
            set,
            normalized,
            out,
        } => {
            let table = CriteriaTable::load(&criteria)?;
            let words = labeled_subset(&table, &set)?;
            write(&out, emit_scatter(&table, &words, pair, normalized))?;
        }
        Cmd::Rules(RulesCmd::Apply {
            ruleset,
            scale,
            criteria,
            out,
        }) => {
            let rs = rule_set(&ruleset, &scale)?;
            let picked = apply_rule_set(&rs, &CriteriaTable::load(&criteria)?)?;
            write_lines(&out, &picked)?;
            println!("{} words selected", picked.len());
        }
        Cmd::Rules(RulesCmd::Train {
            criteria,
            pos,
            max_depth,
            min_leaf,
            normalized,
            out,
            rules_out,
        }) => {
            let params = TreeParams {
                max_depth,
                min_leaf,
                normalized,
            };
            let tree = train_tree(&CriteriaTable::load(&criteria)?, pos, &params)?;
            write(&out, tree.to_json())?;
            if let Some(r) = rules_out {
                write(&r, tree.to_rules().to_text())?;
            }
            println!("depth {}, {} leaves", tree.depth(), tree.n_leaves());
        }
        Cmd::Bpso { swarm, out, trace } => {
            let train = training_matrix(&swarm.train_matrix, swarm.train_words.as_deref())?;
            let res = run_bpso(&train, &swarm.config())?;
            write_lines(&out, &res.best.selected_labels(train.col_labels()))?;
            if let Some(t) = trace {
                write(&t, res.trace_csv())?;
            }
            println!("best objective {}", res.best_value);
        }
        Cmd::Golden {
            swarm,
            train_matrix_b,
            runs,
            keep,
            out,
            common_out,
        } => {
            let cfg = swarm.config();
            let train = training_matrix(&swarm.train_matrix, swarm.train_words.as_deref())?;
            let g = extract_golden(&train, &cfg, runs, keep)?;
            write_lines(&out, &g.words)?;
            println!("{} golden words", g.words.len());
            if let Some(b) = train_matrix_b {
                let Some(common) = common_out else {
                    bail!("--train-matrix-b needs --common-out");
                };
                let train_b = training_matrix(&b, swarm.train_words.as_deref())?;
                let cfg_b = SwarmConfig {
                    seed: cfg.seed.wrapping_add(1),
                    ..cfg
                };
                let gb = extract_golden(&train_b, &cfg_b, runs, keep)?;
                let gc = common_golden(&g.words, &gb.words);
                write_lines(&common, &gc)?;
                println!("{} common golden words", gc.len());
            }
        }
        Cmd::Wordsel {
            matrix,
            train_words,
            ns,
            method,
            out,
            scores,
        } => {
            let train = training_matrix(&matrix, train_words.as_deref())?;
            let s = column_influence(&train, method)?;
            write_lines(&out, &select_top(&s, ns))?;
            if let Some(p) = scores {
                write(&p, s.to_csv())?;
            }
        }
        Cmd::Eval {
            matrix,
            testset,
            baseline,
            out,
        } => {
            let matrices = matrix
                .iter()
                .map(|p| {
                    let name = p
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    Ok((name, SparseMatrix::load(p)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let testsets = testset
                .iter()
                .map(load_testset)
                .collect::<Result<Vec<_>, _>>()?;
            let report = EvalReport::new(evaluate_all(&matrices, &testsets)?);
            let csv = report.to_csv(&baseline)?;
            write(&out, &csv)?;
            print!("{csv}");
        }
        Cmd::Pipeline(PipelineCmd::Run {
            config,
            stages,
            out_dir,
        }) => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(d) = out_dir {
                cfg.out_dir = d;
            }
            let stages = parse_stages(stages.as_deref().unwrap_or(""))?;
            let summary = run_pipeline(&cfg, &stages)?;
            for o in &summary.outcomes {
                let status = if o.cached { "cached" } else { "built" };
                println!("{:<12} {status:<7} {}", o.stage.name(), &o.hash[..12]);
            }
            println!("outputs in {}", summary.out_dir.display());
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
