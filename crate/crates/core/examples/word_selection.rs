//! Ranks context words by how much removing each one changes the pairwise
//! distances of the training words.

use std::time::Instant;

use expvec::corpus::{build_vocabulary, read_corpus, Caps, CorpusFormat};
use expvec::matrix::{build_cooc_decay, ppmi_transform};
use expvec::wordsel::{column_influence, select_top, InfluenceMethod};

fn main() -> anyhow::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toy/corpus_a.vert");
    let sentences = read_corpus(path, CorpusFormat::default())?;
    let caps: Caps = "N=400,V=150,J=150,R=60".parse()?;
    let vocab = build_vocabulary(sentences.iter().cloned().map(Ok), &caps)?;
    let x = ppmi_transform(&build_cooc_decay(
        &sentences,
        vocab.labels().collect(),
        vocab.most_frequent(200),
        0.1,
    ))?;
    let train = x.select_rows(&vocab.proportional(200, &caps));

    for method in [InfluenceMethod::Incremental, InfluenceMethod::Naive] {
        let t = Instant::now();
        let scores = column_influence(&train, method)?;
        println!("{method:?}: {:.2?}", t.elapsed());
        if method == InfluenceMethod::Incremental {
            print!(
                "{}",
                scores
                    .to_csv()
                    .lines()
                    .take(6)
                    .collect::<Vec<_>>()
                    .join("\n")
            );
            println!();
            println!("top 50 kept: {}", select_top(&scores, 50).len());
        }
    }
    Ok(())
}
