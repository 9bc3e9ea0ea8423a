//! Builds a capped vocabulary from the bundled toy corpus and prints the
//! most frequent words of each class.

use expvec::corpus::{build_vocabulary, load_corpus, Caps, CorpusFormat, Pos};

fn main() -> anyhow::Result<()> {
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toy/corpus_a.vert");
    let caps: Caps = "N=400,V=150,J=150,R=60".parse()?;
    let vocab = build_vocabulary(load_corpus(corpus, CorpusFormat::default())?, &caps)?;

    println!("{} words", vocab.len());
    for pos in Pos::OPEN {
        let top: Vec<String> = vocab
            .entries()
            .iter()
            .filter(|e| e.pos == pos)
            .take(5)
            .map(|e| format!("{} ({})", e.lemma, e.freq))
            .collect();
        println!("{pos}: {}", top.join(", "));
    }
    println!(
        "20 training words by class share: {:?}",
        vocab.proportional(20, &caps)
    );
    Ok(())
}
