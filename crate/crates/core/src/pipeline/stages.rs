use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::bpso::{common_golden, extract_golden, run_bpso, SwarmConfig};
use crate::corpus::{build_vocabulary, load_corpus, CorpusFormat, Sentence, Vocabulary};
use crate::criteria::{build_labeled_sets, compute_criteria, normalize_criteria, CriteriaTable};
use crate::error::{Error, Result};
use crate::eval::{evaluate_all, load_testset, EvalReport};
use crate::matrix::{
    build_cooc, load_embeddings, ppmi_transform, write_file, SparseMatrix, Weighting,
};
use crate::rules::{apply_rule_set, train_tree, TreeParams};
use crate::wordsel::{column_influence, select_top};

use super::{PipelineConfig, Stage};

pub(super) const LABELED_SETS: [&str; 9] = [
    "S", "F", "Z", "triple", "common", "IN", "OUT", "U_AT", "A_used",
];

/// Diagnostic comparisons written next to the report.
const COMPARISONS: [(Stage, Stage); 4] = [
    (Stage::XA, Stage::XBaseline),
    (Stage::XSAGc, Stage::XSA),
    (Stage::XSAG, Stage::XSA),
    (Stage::XBAGc, Stage::XBA),
];

fn read_words(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn write_words<'a>(path: &Path, words: impl IntoIterator<Item = &'a String>) -> Result<()> {
    let mut s = String::new();
    for w in words {
        s.push_str(w);
        s.push('\n');
    }
    write_file(path, s)
}

fn corpus_stream(path: &Path) -> Result<impl Iterator<Item = Result<Sentence>>> {
    load_corpus(path, CorpusFormat::default())
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    out: &'a Path,
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> std::path::PathBuf {
        self.out.join(name)
    }

    fn words(&self, name: &str) -> Result<Vec<String>> {
        read_words(&self.path(name))
    }

    fn matrix(&self, stage: &str) -> Result<SparseMatrix> {
        SparseMatrix::load(self.path(&format!("{stage}.mtx")))
    }

    fn vocab(&self) -> Result<Vocabulary> {
        Vocabulary::load(self.path("vocab.tsv"))
    }

    fn targets(&self) -> Result<Vec<String>> {
        Ok(self.vocab()?.labels().collect())
    }

    /// Training rows: the most frequent `n` words, split over the classes
    /// like the vocabulary caps.
    fn training_words(&self, n: usize) -> Result<Vec<String>> {
        Ok(self.vocab()?.proportional(n, &self.cfg.caps()?))
    }

    /// Decay counts restricted to `contexts`, then PPMI.
    fn context_matrix(&self, contexts: &[String]) -> Result<SparseMatrix> {
        if contexts.is_empty() {
            return Err(Error::Config("context word set is empty".into()));
        }
        let raw = self.matrix("raw_decay")?;
        ppmi_transform(&raw.select_columns(contexts))
    }

    fn save_matrix(&self, stage: Stage, m: &SparseMatrix) -> Result<()> {
        m.save(self.path(&format!("{}.mtx", stage.name())))
    }
}

pub(super) fn run_stage(
    stage: Stage,
    cfg: &PipelineConfig,
    out: &Path,
    eval_targets: &[Stage],
) -> Result<()> {
    let ctx = Ctx { cfg, out };
    match stage {
        Stage::Vocab => vocab(&ctx),
        Stage::Cooc => cooc(&ctx),
        Stage::XBaseline => baseline(&ctx),
        Stage::XA => {
            let m = ctx.context_matrix(&ctx.words("A.txt")?)?;
            ctx.save_matrix(stage, &m)
        }
        Stage::Criteria => criteria(&ctx),
        Stage::Rules => rules(&ctx),
        Stage::XIR => {
            let m = ctx.context_matrix(&ctx.words("IR.txt")?)?;
            ctx.save_matrix(stage, &m)
        }
        Stage::XFR => {
            let m = ctx.context_matrix(&ctx.words("FR.txt")?)?;
            ctx.save_matrix(stage, &m)
        }
        Stage::XBA => swarm_selection(&ctx, stage, "X_A", "BA"),
        Stage::XBFR => swarm_selection(&ctx, stage, "X_FR", "BFR"),
        Stage::XSA => influence_selection(&ctx, stage, "X_A", "SA"),
        Stage::XSFR => influence_selection(&ctx, stage, "X_FR", "SFR"),
        Stage::Golden => golden(&ctx),
        Stage::XSAG => union_matrix(&ctx, stage, "SA.txt", "golden.txt"),
        Stage::XSAGc => union_matrix(&ctx, stage, "SA.txt", "Gc.txt"),
        Stage::XBAGc => union_matrix(&ctx, stage, "BA.txt", "Gc.txt"),
        Stage::Eval => evaluation(&ctx, eval_targets),
    }
}

fn vocab(ctx: &Ctx) -> Result<()> {
    let c = &ctx.cfg.criteria;
    let v = build_vocabulary(corpus_stream(&ctx.cfg.corpus.a)?, &ctx.cfg.caps()?)?;
    if v.is_empty() {
        return Err(Error::Config("corpus yields an empty vocabulary".into()));
    }
    v.save(ctx.path("vocab.tsv"))?;
    write_words(&ctx.path("A.txt"), &v.most_frequent(c.a_size))?;
    write_words(&ctx.path("C.txt"), &v.most_frequent(c.candidates))
}

/// Context universe: C, then the words of A not in C.
fn universe(ctx: &Ctx) -> Result<Vec<String>> {
    let mut cols = ctx.words("C.txt")?;
    let seen: BTreeSet<String> = cols.iter().cloned().collect();
    cols.extend(
        ctx.words("A.txt")?
            .into_iter()
            .filter(|w| !seen.contains(w)),
    );
    Ok(cols)
}

fn cooc(ctx: &Ctx) -> Result<()> {
    let m = build_cooc(
        corpus_stream(&ctx.cfg.corpus.a)?,
        ctx.targets()?,
        universe(ctx)?,
        Weighting::decay(ctx.cfg.cooc.decay),
    )?;
    m.save(ctx.path("raw_decay.mtx"))
}

fn baseline(ctx: &Ctx) -> Result<()> {
    let raw = build_cooc(
        corpus_stream(&ctx.cfg.corpus.a)?,
        ctx.targets()?,
        ctx.words("A.txt")?,
        Weighting::Window(ctx.cfg.cooc.window),
    )?;
    ctx.save_matrix(Stage::XBaseline, &ppmi_transform(&raw)?)
}

fn criteria(ctx: &Ctx) -> Result<()> {
    let c = &ctx.cfg.criteria;
    let emb = load_embeddings(&c.embeddings)?;
    let vocab = ctx.vocab()?;
    let table = compute_criteria(
        &ctx.words("C.txt")?,
        &emb,
        &vocab,
        c.zero_eps,
        ctx.cfg.aggregation()?,
    )?;
    let mut table = normalize_criteria(table);
    let sets = build_labeled_sets(&mut table, &ctx.words("A.txt")?, c.m);
    table.save(ctx.path("criteria.tsv"))?;
    for (name, set) in LABELED_SETS.iter().zip([
        &sets.s,
        &sets.f,
        &sets.z,
        &sets.triple,
        &sets.common,
        &sets.in_set,
        &sets.out_set,
        &sets.u_at,
        &sets.a,
    ]) {
        write_words(&ctx.path(&format!("sets/{name}.txt")), set)?;
    }
    let params = TreeParams {
        max_depth: ctx.cfg.tree.max_depth,
        min_leaf: ctx.cfg.tree.min_leaf,
        normalized: true,
    };
    let tree = train_tree(&table, None, &params)?;
    write_file(&ctx.path("tree.json"), tree.to_json())?;
    write_file(&ctx.path("tree_rules.txt"), tree.to_rules().to_text())
}

fn rules(ctx: &Ctx) -> Result<()> {
    let table = CriteriaTable::load(ctx.path("criteria.tsv"))?;
    let fr = apply_rule_set(&ctx.cfg.final_rule_set()?, &table)?;
    let ir = apply_rule_set(&ctx.cfg.initial_rule_set()?, &table)?;
    write_words(&ctx.path("FR.txt"), &fr)?;
    write_words(&ctx.path("IR.txt"), &ir)
}

fn swarm_selection(ctx: &Ctx, stage: Stage, source: &str, set: &str) -> Result<()> {
    let train = ctx
        .matrix(source)?
        .select_rows(&ctx.training_words(ctx.cfg.bpso.train_words)?);
    let res = run_bpso(&train, &ctx.cfg.swarm())?;
    let chosen = res.best.selected_labels(train.col_labels());
    write_words(&ctx.path(&format!("{set}.txt")), &chosen)?;
    write_file(&ctx.path(&format!("{set}_trace.csv")), res.trace_csv())?;
    let contexts: Vec<String> = chosen.into_iter().collect();
    ctx.save_matrix(stage, &ctx.context_matrix(&contexts)?)
}

fn influence_selection(ctx: &Ctx, stage: Stage, source: &str, set: &str) -> Result<()> {
    let w = &ctx.cfg.wordsel;
    let train = ctx
        .matrix(source)?
        .select_rows(&ctx.training_words(w.train_words)?);
    if w.n_select > train.n_cols() {
        return Err(Error::Config(format!(
            "cannot select {} of {} context words",
            w.n_select,
            train.n_cols()
        )));
    }
    let scores = column_influence(&train, ctx.cfg.wordsel_method()?)?;
    let chosen = select_top(&scores, w.n_select);
    write_words(&ctx.path(&format!("{set}.txt")), &chosen)?;
    write_file(&ctx.path(&format!("{set}_scores.csv")), scores.to_csv())?;
    let contexts: Vec<String> = chosen.into_iter().collect();
    ctx.save_matrix(stage, &ctx.context_matrix(&contexts)?)
}

/// FR training matrices of the two corpora. Without a second corpus the
/// two halves of the first one stand in.
fn golden_training(ctx: &Ctx, fr: &[String], train_words: &[String]) -> Result<[SparseMatrix; 2]> {
    let cfg = ctx.cfg;
    let weighting = Weighting::decay(cfg.cooc.decay);
    let count = |sentences: Box<dyn Iterator<Item = Result<Sentence>>>| -> Result<SparseMatrix> {
        let raw = build_cooc(sentences, ctx.targets()?, fr.to_vec(), weighting)?;
        Ok(ppmi_transform(&raw)?.select_rows(train_words))
    };
    match &cfg.corpus.b {
        Some(b) => {
            let first = ppmi_transform(&ctx.matrix("raw_decay")?.select_columns(fr))?
                .select_rows(train_words);
            Ok([first, count(Box::new(corpus_stream(b)?))?])
        }
        None => {
            let mut n: usize = 0;
            for s in corpus_stream(&cfg.corpus.a)? {
                s?;
                n += 1;
            }
            let half = n.div_ceil(2);
            let first = count(Box::new(corpus_stream(&cfg.corpus.a)?.take(half)))?;
            let second = count(Box::new(corpus_stream(&cfg.corpus.a)?.skip(half)))?;
            Ok([first, second])
        }
    }
}

fn golden(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let fr = ctx.words("FR.txt")?;
    if fr.len() < cfg.bpso.n_select {
        return Err(Error::Config(format!(
            "FR has {} words, fewer than N_B = {}",
            fr.len(),
            cfg.bpso.n_select
        )));
    }
    let train_words = ctx.training_words(cfg.bpso.train_words)?;
    let trains = golden_training(ctx, &fr, &train_words)?;
    let mut runs = String::from("corpus,run,seed,best_value,kept\n");
    let mut found = Vec::new();
    for (k, train) in trains.iter().enumerate() {
        let swarm = SwarmConfig {
            seed: cfg.seed.wrapping_add(k as u64),
            ..cfg.swarm()
        };
        let g = extract_golden(train, &swarm, cfg.golden.runs, cfg.golden.keep)?;
        for (i, (seed, value)) in g.runs.iter().enumerate() {
            let _ = writeln!(runs, "{},{i},{seed},{value},{}", k + 1, g.kept.contains(&i));
        }
        found.push(g.words);
    }
    write_words(&ctx.path("golden.txt"), &found[0])?;
    write_words(&ctx.path("golden_b.txt"), &found[1])?;
    write_words(&ctx.path("Gc.txt"), &common_golden(&found[0], &found[1]))?;
    write_file(&ctx.path("golden_runs.csv"), runs)
}

fn union_matrix(ctx: &Ctx, stage: Stage, base: &str, extra: &str) -> Result<()> {
    let mut words: BTreeSet<String> = ctx.words(base)?.into_iter().collect();
    words.extend(ctx.words(extra)?);
    let contexts: Vec<String> = words.into_iter().collect();
    ctx.save_matrix(stage, &ctx.context_matrix(&contexts)?)
}

fn evaluation(ctx: &Ctx, targets: &[Stage]) -> Result<()> {
    let cfg = ctx.cfg;
    if cfg.eval.testsets.is_empty() {
        return Err(Error::Config("no test sets configured".into()));
    }
    let testsets = cfg
        .eval
        .testsets
        .iter()
        .map(load_testset)
        .collect::<Result<Vec<_>>>()?;
    let matrices = targets
        .iter()
        .map(|s| Ok((s.name().to_string(), ctx.matrix(s.name())?)))
        .collect::<Result<Vec<_>>>()?;
    let report = EvalReport::new(evaluate_all(&matrices, &testsets)?);
    write_file(&ctx.path("report.csv"), report.to_csv(&cfg.eval.baseline)?)?;
    let pairs: Vec<(&str, &str)> = COMPARISONS
        .iter()
        .filter(|(a, b)| targets.contains(a) && targets.contains(b))
        .map(|(a, b)| (a.name(), b.name()))
        .collect();
    write_file(
        &ctx.path("comparisons.csv"),
        report.comparisons_csv(&pairs)?,
    )
}
