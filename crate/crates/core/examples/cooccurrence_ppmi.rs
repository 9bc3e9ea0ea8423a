//! Decay-weighted versus windowed co-occurrence counts, PPMI, and a few
//! nearest neighbours by cosine.

use expvec::corpus::{build_vocabulary, read_corpus, Caps, CorpusFormat};
use expvec::matrix::{build_cooc_decay, build_cooc_window, ppmi_transform, sparse_cosine};

fn main() -> anyhow::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toy/corpus_a.vert");
    let sentences = read_corpus(path, CorpusFormat::default())?;
    let caps: Caps = "N=400,V=150,J=150,R=60".parse()?;
    let vocab = build_vocabulary(sentences.iter().cloned().map(Ok), &caps)?;
    let targets: Vec<String> = vocab.labels().collect();
    let contexts = vocab.most_frequent(200);

    let decay = ppmi_transform(&build_cooc_decay(
        &sentences,
        targets.clone(),
        contexts.clone(),
        0.1,
    ))?;
    let window = ppmi_transform(&build_cooc_window(&sentences, targets, contexts, 10))?;
    println!(
        "decay: {} cells, window: {} cells over {} x {}",
        decay.nnz(),
        window.nnz(),
        decay.n_rows(),
        decay.n_cols()
    );

    let word = &vocab.most_frequent(1)[0];
    let r = decay.row_of(word).expect("row");
    let mut sims: Vec<(f64, &String)> = decay
        .row_labels()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != r)
        .map(|(i, w)| (sparse_cosine(decay.row(r), decay.row(i)), w))
        .collect();
    sims.sort_by(|a, b| b.0.total_cmp(&a.0));
    println!("nearest to {word}:");
    for (s, w) in sims.iter().take(5) {
        println!("  {w:<16} {s:.3}");
    }
    Ok(())
}
