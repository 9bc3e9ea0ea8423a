//! Spearman correlation of two matrices on the toy similarity test sets.

use expvec::corpus::{build_vocabulary, read_corpus, Caps, CorpusFormat};
use expvec::eval::{evaluate_all, load_testset, EvalReport};
use expvec::matrix::{build_cooc_decay, build_cooc_window, ppmi_transform};

fn main() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toy");
    let sentences = read_corpus(format!("{dir}/corpus_a.vert"), CorpusFormat::default())?;
    let caps: Caps = "N=400,V=150,J=150,R=60".parse()?;
    let vocab = build_vocabulary(sentences.iter().cloned().map(Ok), &caps)?;
    let targets: Vec<String> = vocab.labels().collect();
    let contexts = vocab.most_frequent(200);

    let matrices = vec![
        (
            "window".to_string(),
            ppmi_transform(&build_cooc_window(
                &sentences,
                targets.clone(),
                contexts.clone(),
                10,
            ))?,
        ),
        (
            "decay".to_string(),
            ppmi_transform(&build_cooc_decay(&sentences, targets, contexts, 0.1))?,
        ),
    ];
    let testsets = vec![
        load_testset(format!("{dir}/toy_sim.tsv"))?,
        load_testset(format!("{dir}/toy_rel.tsv"))?,
    ];
    let report = EvalReport::new(evaluate_all(&matrices, &testsets)?);
    print!("{}", report.to_csv("window")?);
    Ok(())
}
