//! Word criteria, the labeled sets, and the final normalized rule.

use expvec::corpus::{build_vocabulary, load_corpus, Caps, CorpusFormat};
use expvec::criteria::{build_labeled_sets, compute_criteria, normalize_criteria, WsAggregation};
use expvec::matrix::load_embeddings;
use expvec::rules::{apply_rule_set, builtin_rule_set};

fn main() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toy");
    let caps: Caps = "N=400,V=150,J=150,R=60".parse()?;
    let vocab = build_vocabulary(
        load_corpus(format!("{dir}/corpus_a.vert"), CorpusFormat::default())?,
        &caps,
    )?;
    let emb = load_embeddings(format!("{dir}/embeddings.txt"))?;

    let table = compute_criteria(
        &vocab.most_frequent(300),
        &emb,
        &vocab,
        0.01,
        WsAggregation::Sum,
    )?;
    let mut table = normalize_criteria(table);
    let sets = build_labeled_sets(&mut table, &vocab.most_frequent(200), 100);
    println!(
        "triple {} | common {} | IN {} | OUT {}",
        sets.triple.len(),
        sets.common.len(),
        sets.in_set.len(),
        sets.out_set.len()
    );

    let rule = builtin_rule_set("final_normalized").expect("builtin");
    print!("{}", rule.to_text());
    let fr = apply_rule_set(&rule, &table)?;
    println!("FR: {} of {} candidates", fr.len(), table.len());
    for w in fr.iter().take(5) {
        let r = table.get(w).expect("row");
        println!(
            "  {w:<16} WS={:.3} NZ={:.3} WF={:.4}",
            r.ws_norm, r.nz_norm, r.wf_norm
        );
    }
    Ok(())
}
