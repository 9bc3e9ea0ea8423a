//! Golden words: columns chosen by all of the best BPSO runs, on two
//! corpora, and their intersection.

use expvec::bpso::{common_golden, extract_golden, SwarmConfig};
use expvec::corpus::{build_vocabulary, read_corpus, Caps, CorpusFormat};
use expvec::matrix::{build_cooc_decay, ppmi_transform};

fn main() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toy");
    let caps: Caps = "N=400,V=150,J=150,R=60".parse()?;
    let a = read_corpus(format!("{dir}/corpus_a.vert"), CorpusFormat::default())?;
    let b = read_corpus(format!("{dir}/corpus_b.vert"), CorpusFormat::default())?;
    let vocab = build_vocabulary(a.iter().cloned().map(Ok), &caps)?;
    let targets: Vec<String> = vocab.labels().collect();
    let contexts = vocab.most_frequent(60);
    let train_words = vocab.proportional(100, &caps);

    let cfg = SwarmConfig {
        n_select: 40,
        population: 10,
        iterations: 10,
        ..SwarmConfig::default()
    };
    let mut found = Vec::new();
    for (name, corpus) in [("a", &a), ("b", &b)] {
        let x = ppmi_transform(&build_cooc_decay(
            corpus,
            targets.clone(),
            contexts.clone(),
            0.1,
        ))?;
        let g = extract_golden(&x.select_rows(&train_words), &cfg, 6, 3)?;
        println!(
            "corpus {name}: {} golden words, kept runs {:?}",
            g.words.len(),
            g.kept
        );
        found.push(g.words);
    }
    let gc = common_golden(&found[0], &found[1]);
    println!("G_c ({}): {:?}", gc.len(), gc);
    Ok(())
}
