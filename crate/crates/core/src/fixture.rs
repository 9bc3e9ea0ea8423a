//! Deterministic synthetic data: a tagged corpus, dense embeddings and
//! similarity test sets with a shared topic structure.
//!
//! The lexicon is split into topics. Sentences draw most content words from
//! one topic, so words of the same topic co-occur; embeddings carry a topic
//! direction, and the test sets score same-topic pairs highest. Everything
//! is generated from a single seed.

use std::fmt::Write as _;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Pos;
use crate::error::{Error, Result};
use crate::matrix::write_file;

const SYLLABLES: [&str; 24] = [
    "ba", "ke", "lo", "mi", "nu", "ra", "si", "to", "ve", "za", "do", "fe", "gu", "ha", "ji", "po",
    "qua", "ren", "sol", "tan", "vor", "wel", "dra", "ist",
];
const FUNCTION_WORDS: [(&str, &str); 8] = [
    ("the", "DT"),
    ("a", "DT"),
    ("of", "IN"),
    ("in", "IN"),
    ("and", "CC"),
    ("to", "TO"),
    ("with", "IN"),
    ("that", "WDT"),
];

#[derive(Clone, Debug)]
pub struct FixtureSpec {
    pub seed: u64,
    pub n_topics: usize,
    /// Lemmas per class, in N, V, J, R order.
    pub lemmas: [usize; 4],
    /// Sentences per corpus.
    pub sentences: usize,
    pub dim: usize,
    pub testset_pairs: usize,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            seed: 7,
            n_topics: 12,
            lemmas: [400, 150, 150, 60],
            sentences: 5_500,
            dim: 50,
            testset_pairs: 150,
        }
    }
}

#[derive(Clone, Debug)]
struct Lemma {
    text: String,
    pos: Pos,
    topic: usize,
}

/// Generated files as text.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub corpus_a: String,
    pub corpus_b: String,
    pub embeddings: String,
    /// `(file stem, contents)`
    pub testsets: Vec<(String, String)>,
}

impl Fixture {
    /// Writes `corpus_a.vert`, `corpus_b.vert`, `embeddings.txt` and one
    /// `<name>.tsv` per test set into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("corpus_a.vert"), &self.corpus_a)?;
        write_file(&dir.join("corpus_b.vert"), &self.corpus_b)?;
        write_file(&dir.join("embeddings.txt"), &self.embeddings)?;
        for (name, text) in &self.testsets {
            write_file(&dir.join(format!("{name}.tsv")), text)?;
        }
        Ok(())
    }
}

fn make_lexicon(spec: &FixtureSpec, rng: &mut ChaCha8Rng) -> Vec<Lemma> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (pos, &n) in Pos::OPEN.iter().zip(&spec.lemmas) {
        let mut made = 0;
        while made < n {
            let k = rng.random_range(2..=3);
            let text: String = (0..k)
                .map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())])
                .collect();
            if FUNCTION_WORDS.iter().any(|(w, _)| *w == text) || !seen.insert(text.clone()) {
                continue;
            }
            out.push(Lemma {
                text,
                pos: *pos,
                topic: made % spec.n_topics,
            });
            made += 1;
        }
    }
    out
}

fn tag_for(pos: Pos, rng: &mut ChaCha8Rng) -> &'static str {
    let pick = |opts: &[&'static str], rng: &mut ChaCha8Rng| opts[rng.random_range(0..opts.len())];
    match pos {
        Pos::Noun => pick(&["NN", "NN", "NNS"], rng),
        Pos::Verb => pick(&["VB", "VVD", "VVZ"], rng),
        Pos::Adjective => pick(&["JJ", "JJ", "JJR"], rng),
        Pos::Adverb => pick(&["RB"], rng),
        Pos::Other => "DT",
    }
}

/// Zipf-like weights, so frequencies spread over orders of magnitude.
fn zipf(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| 1.0 / r as f64)).expect("non-empty weights")
}

/// Per (topic, class) index lists into the lexicon.
struct Buckets {
    by_topic: Vec<[Vec<usize>; 4]>,
    global: [Vec<usize>; 4],
}

impl Buckets {
    fn new(lex: &[Lemma], n_topics: usize) -> Self {
        let mut by_topic: Vec<[Vec<usize>; 4]> =
            (0..n_topics).map(|_| Default::default()).collect();
        let mut global: [Vec<usize>; 4] = Default::default();
        for (i, l) in lex.iter().enumerate() {
            let c = Pos::OPEN
                .iter()
                .position(|&p| p == l.pos)
                .expect("open class");
            by_topic[l.topic][c].push(i);
            global[c].push(i);
        }
        Buckets { by_topic, global }
    }
}

fn make_corpus(
    lex: &[Lemma],
    spec: &FixtureSpec,
    rng: &mut ChaCha8Rng,
    doc_prefix: &str,
) -> String {
    let buckets = Buckets::new(lex, spec.n_topics);
    let class_weights = WeightedIndex::new([0.42, 0.24, 0.22, 0.12]).expect("weights");
    let topic_dists: Vec<[Option<WeightedIndex<f64>>; 4]> = buckets
        .by_topic
        .iter()
        .map(|t| std::array::from_fn(|c| (!t[c].is_empty()).then(|| zipf(t[c].len()))))
        .collect();
    let global_dists: [WeightedIndex<f64>; 4] =
        std::array::from_fn(|c| zipf(buckets.global[c].len()));
    let topic_of_doc = zipf(spec.n_topics);

    let mut out = String::new();
    let mut topic = 0;
    for s in 0..spec.sentences {
        if s % 25 == 0 {
            topic = topic_of_doc.sample(rng);
            let _ = writeln!(out, "<text id=\"{doc_prefix}{}\">", s / 25);
        }
        out.push_str("<s>\n");
        let len = rng.random_range(8..=22);
        for _ in 0..len {
            if rng.random::<f64>() < 0.3 {
                let (w, tag) = FUNCTION_WORDS[rng.random_range(0..FUNCTION_WORDS.len())];
                let _ = writeln!(out, "{w}\t{w}\t{tag}");
                continue;
            }
            let c = class_weights.sample(rng);
            let idx = match &topic_dists[topic][c] {
                Some(d) if rng.random::<f64>() < 0.75 => buckets.by_topic[topic][c][d.sample(rng)],
                _ => buckets.global[c][global_dists[c].sample(rng)],
            };
            let l = &lex[idx];
            let tag = tag_for(l.pos, rng);
            let surface = match tag {
                "NNS" | "VVZ" => format!("{}s", l.text),
                "VVD" => format!("{}d", l.text),
                _ => l.text.clone(),
            };
            let _ = writeln!(out, "{surface}\t{}\t{tag}", l.text);
        }
        out.push_str("</s>\n");
        if s % 25 == 24 {
            out.push_str("</text>\n");
        }
    }
    out
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn make_embeddings(lex: &[Lemma], spec: &FixtureSpec, rng: &mut ChaCha8Rng) -> String {
    let d = spec.dim;
    let shared: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
    let topics: Vec<Vec<f64>> = (0..spec.n_topics)
        .map(|_| (0..d).map(|_| gaussian(rng)).collect())
        .collect();
    let mut out = format!("{} {d}\n", lex.len() + FUNCTION_WORDS.len());
    let mut emit = |word: &str, v: &[f64]| {
        out.push_str(word);
        for x in v {
            let _ = write!(out, " {x:.6}");
        }
        out.push('\n');
    };
    for l in lex {
        let mix = 0.05 + 1.15 * rng.random::<f64>();
        let mut v: Vec<f64> = (0..d)
            .map(|i| 0.15 * mix * shared[i] + 0.06 * topics[l.topic][i] + 0.04 * gaussian(rng))
            .collect();
        // a word-specific number of components pushed below 0.01
        let zeros = if rng.random::<f64>() < 0.55 {
            rng.random_range(0..=d / 12)
        } else {
            rng.random_range(0..=d * 2 / 5)
        };
        for _ in 0..zeros {
            let i = rng.random_range(0..d);
            v[i] = 0.009 * (2.0 * rng.random::<f64>() - 1.0);
        }
        emit(&l.text, &v);
    }
    for (w, _) in FUNCTION_WORDS {
        let v: Vec<f64> = (0..d)
            .map(|i| 0.2 * shared[i] + 0.05 * gaussian(rng))
            .collect();
        emit(w, &v);
    }
    out
}

fn make_testset(lex: &[Lemma], spec: &FixtureSpec, rng: &mut ChaCha8Rng, header: bool) -> String {
    // only the more frequent lemmas of each topic, as in real benchmarks
    let pool: Vec<&Lemma> = lex
        .iter()
        .enumerate()
        .filter(|(i, _)| (i % 400) < 200)
        .map(|(_, l)| l)
        .collect();
    let mut seen = std::collections::HashSet::new();
    let mut out = String::new();
    if header {
        out.push_str("word1\tword2\tscore\n");
    }
    let mut made = 0;
    while made < spec.testset_pairs {
        let a = pool[rng.random_range(0..pool.len())];
        let b = if rng.random::<f64>() < 0.5 {
            let same: Vec<&&Lemma> = pool.iter().filter(|l| l.topic == a.topic).collect();
            *same[rng.random_range(0..same.len())]
        } else {
            pool[rng.random_range(0..pool.len())]
        };
        if a.text == b.text {
            continue;
        }
        let key = if a.text < b.text {
            (a.text.clone(), b.text.clone())
        } else {
            (b.text.clone(), a.text.clone())
        };
        if !seen.insert(key) {
            continue;
        }
        let gap = (a.topic as i64 - b.topic as i64).rem_euclid(spec.n_topics as i64);
        let near = gap == 1 || gap == spec.n_topics as i64 - 1;
        let base = if a.topic == b.topic {
            8.0
        } else if near {
            4.5
        } else {
            1.5
        };
        let score = (base + 1.5 * gaussian(rng)).clamp(0.0, 10.0);
        let _ = writeln!(out, "{}\t{}\t{score:.2}", a.text, b.text);
        made += 1;
    }
    out
}

/// Generates the full fixture.
pub fn generate(spec: &FixtureSpec) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lex = make_lexicon(spec, &mut rng);
    let mut rng_a = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(1));
    let mut rng_b = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(2));
    let corpus_a = make_corpus(&lex, spec, &mut rng_a, "a");
    let corpus_b = make_corpus(&lex, spec, &mut rng_b, "b");
    let embeddings = make_embeddings(&lex, spec, &mut rng);
    let testsets = vec![
        (
            "toy_sim".to_string(),
            make_testset(&lex, spec, &mut rng, true),
        ),
        (
            "toy_rel".to_string(),
            make_testset(&lex, spec, &mut rng, false),
        ),
    ];
    Fixture {
        corpus_a,
        corpus_b,
        embeddings,
        testsets,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusFormat, CorpusReader};
    use crate::eval::TestSet;
    use crate::matrix::DenseEmbeddings;

    fn small() -> FixtureSpec {
        FixtureSpec {
            sentences: 200,
            ..FixtureSpec::default()
        }
    }

    #[test]
    fn deterministic() {
        let a = generate(&small());
        let b = generate(&small());
        assert_eq!(a.corpus_a, b.corpus_a);
        assert_eq!(a.embeddings, b.embeddings);
        assert_ne!(a.corpus_a, a.corpus_b);
    }

    #[test]
    fn outputs_parse() {
        let f = generate(&small());
        let sents: Vec<_> = CorpusReader::new(f.corpus_a.as_bytes(), "a", CorpusFormat::default())
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(sents.len(), 200);
        let emb = DenseEmbeddings::parse(&f.embeddings, "emb").unwrap();
        assert_eq!(emb.dim().unwrap(), 50);
        assert_eq!(emb.len(), 760 + FUNCTION_WORDS.len());
        for (name, text) in &f.testsets {
            assert_eq!(TestSet::parse(text, name).unwrap().len(), 150);
        }
    }
}
