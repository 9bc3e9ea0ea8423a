//! Tagged corpus ingestion and vocabulary construction.
//!
//! The corpus is read in vertical format: one token per line with
//! tab-separated `surface`, `lemma` and `POS` fields. A blank line or a
//! `</s>` marker ends a sentence. Other markup lines (`<s>`, `<text id=..>`)
//! are ignored.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};

/// Coarse part-of-speech class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Other,
}

impl Pos {
    /// The four open classes, in vocabulary order.
    pub const OPEN: [Pos; 4] = [Pos::Noun, Pos::Verb, Pos::Adjective, Pos::Adverb];

    pub fn tag(self) -> &'static str {
        match self {
            Pos::Noun => "N",
            Pos::Verb => "V",
            Pos::Adjective => "J",
            Pos::Adverb => "R",
            Pos::Other => "O",
        }
    }

    pub fn is_open(self) -> bool {
        self != Pos::Other
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Pos {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "n" | "noun" => Ok(Pos::Noun),
            "v" | "verb" => Ok(Pos::Verb),
            "j" | "a" | "adj" | "adjective" => Ok(Pos::Adjective),
            "r" | "adv" | "adverb" => Ok(Pos::Adverb),
            "o" | "other" => Ok(Pos::Other),
            _ => Err(Error::Config(format!("unknown POS class {s:?}"))),
        }
    }
}

/// Label used for a (lemma, POS) pair everywhere a word is named:
/// matrix rows and columns, word lists, criteria tables.
pub fn word_label(lemma: &str, pos: Pos) -> String {
    format!("{lemma}/{}", pos.tag())
}

/// Splits a label produced by [`word_label`].
pub fn split_label(label: &str) -> Option<(&str, Pos)> {
    let (lemma, tag) = label.rsplit_once('/')?;
    Some((lemma, tag.parse().ok()?))
}

/// Maps raw tagset labels onto [`Pos`] classes by prefix.
#[derive(Clone, Debug)]
pub struct PosMap {
    prefixes: Vec<(String, Pos)>,
}

impl Default for PosMap {
    fn default() -> Self {
        PosMap::new([
            ("NN", Pos::Noun),
            ("VB", Pos::Verb),
            ("VV", Pos::Verb),
            ("JJ", Pos::Adjective),
            ("RB", Pos::Adverb),
        ])
    }
}

impl PosMap {
    pub fn new<S: Into<String>>(prefixes: impl IntoIterator<Item = (S, Pos)>) -> Self {
        let mut prefixes: Vec<(String, Pos)> =
            prefixes.into_iter().map(|(p, c)| (p.into(), c)).collect();
        // longest prefix wins
        prefixes.sort_by_key(|p| std::cmp::Reverse(p.0.len()));
        PosMap { prefixes }
    }

    pub fn classify(&self, tag: &str) -> Pos {
        self.prefixes
            .iter()
            .find(|(p, _)| tag.starts_with(p.as_str()))
            .map(|&(_, c)| c)
            .unwrap_or(Pos::Other)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub pos: Pos,
}

/// A non-empty sentence. Token positions are the indices into `tokens`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// What to do with a malformed corpus line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ParsePolicy {
    /// Log and skip the line.
    #[default]
    Skip,
    /// Yield an error and stop.
    Abort,
}

#[derive(Clone, Debug, Default)]
pub struct CorpusFormat {
    pub pos_map: PosMap,
    pub policy: ParsePolicy,
}

/// Streaming reader over a vertical corpus.
pub struct CorpusReader<R> {
    lines: std::io::Lines<R>,
    source: String,
    format: CorpusFormat,
    line_no: usize,
    done: bool,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R, source: impl Into<String>, format: CorpusFormat) -> Self {
        CorpusReader {
            lines: reader.lines(),
            source: source.into(),
            format,
            line_no: 0,
            done: false,
        }
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<Sentence>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut sentence = Sentence::default();
        loop {
            let line = match self.lines.next() {
                None => {
                    self.done = true;
                    return (!sentence.is_empty()).then_some(Ok(sentence));
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(Error::io(&self.source, e)));
                }
                Some(Ok(line)) => line,
            };
            self.line_no += 1;
            let trimmed = line.trim_end_matches(['\r', '\n']);

            if trimmed.trim().is_empty() || trimmed.trim() == "</s>" {
                if sentence.is_empty() {
                    continue;
                }
                return Some(Ok(sentence));
            }
            if trimmed.starts_with('<') && trimmed.ends_with('>') && !trimmed.contains('\t') {
                continue;
            }

            let mut fields = trimmed.split('\t');
            match (fields.next(), fields.next(), fields.next()) {
                (Some(surface), Some(lemma), Some(tag)) if !lemma.is_empty() => {
                    sentence.tokens.push(Token {
                        surface: surface.to_string(),
                        lemma: lemma.to_lowercase(),
                        pos: self.format.pos_map.classify(tag),
                    });
                }
                _ => {
                    let err = Error::parse(
                        &self.source,
                        self.line_no,
                        format!("expected 3 tab-separated fields, got {trimmed:?}"),
                    );
                    match self.format.policy {
                        ParsePolicy::Skip => warn!("skipping malformed line: {err}"),
                        ParsePolicy::Abort => {
                            self.done = true;
                            return Some(Err(err));
                        }
                    }
                }
            }
        }
    }
}

/// Opens a vertical corpus file as a sentence stream.
pub fn load_corpus(
    path: impl AsRef<Path>,
    format: CorpusFormat,
) -> Result<CorpusReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(CorpusReader::new(
        BufReader::new(file),
        path.display().to_string(),
        format,
    ))
}

/// Reads a whole corpus into memory.
pub fn read_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Vec<Sentence>> {
    load_corpus(path, format)?.collect()
}

/// Per-POS vocabulary size limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub noun: usize,
    pub verb: usize,
    pub adjective: usize,
    pub adverb: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            noun: 20_000,
            verb: 10_000,
            adjective: 10_000,
            adverb: 5_000,
        }
    }
}

impl Caps {
    pub fn get(&self, pos: Pos) -> usize {
        match pos {
            Pos::Noun => self.noun,
            Pos::Verb => self.verb,
            Pos::Adjective => self.adjective,
            Pos::Adverb => self.adverb,
            Pos::Other => 0,
        }
    }

    pub fn total(&self) -> usize {
        Pos::OPEN.iter().map(|&p| self.get(p)).sum()
    }
}

impl FromStr for Caps {
    type Err = Error;

    /// Parses `N=20000,V=10000,J=10000,R=5000`. Missing classes keep
    /// their default.
    fn from_str(s: &str) -> Result<Self> {
        let mut caps = Caps::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad cap {part:?}")))?;
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad cap value {v:?}")))?;
            if n == 0 {
                return Err(Error::Config(format!("cap for {k} must be positive")));
            }
            match k.trim().parse::<Pos>()? {
                Pos::Noun => caps.noun = n,
                Pos::Verb => caps.verb = n,
                Pos::Adjective => caps.adjective = n,
                Pos::Adverb => caps.adverb = n,
                Pos::Other => return Err(Error::Config("cannot cap class O".into())),
            }
        }
        Ok(caps)
    }
}

/// Lemma frequencies keyed by (lemma, POS). Merging is a plain sum, so
/// tables from separate shards or files combine in any order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreqTable {
    counts: HashMap<(String, Pos), u64>,
}

impl FreqTable {
    pub fn add_sentence(&mut self, sentence: &Sentence) {
        for tok in &sentence.tokens {
            if tok.pos.is_open() {
                *self.counts.entry((tok.lemma.clone(), tok.pos)).or_default() += 1;
            }
        }
    }

    pub fn merge(&mut self, other: FreqTable) {
        for (k, v) in other.counts {
            *self.counts.entry(k).or_default() += v;
        }
    }

    pub fn get(&self, lemma: &str, pos: Pos) -> u64 {
        self.counts
            .get(&(lemma.to_string(), pos))
            .copied()
            .unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VocabEntry {
    pub lemma: String,
    pub pos: Pos,
    pub freq: u64,
}

impl VocabEntry {
    pub fn label(&self) -> String {
        word_label(&self.lemma, self.pos)
    }
}

/// Target vocabulary: per POS class, the most frequent lemmas.
///
/// Entries are grouped by class (N, V, J, R) and sorted by frequency
/// descending, then lemma ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_entries(entries: Vec<VocabEntry>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.label(), i))
            .collect();
        Vocabulary { entries, index }
    }

    pub fn from_freqs(freqs: &FreqTable, caps: &Caps) -> Self {
        let mut entries = Vec::new();
        for pos in Pos::OPEN {
            let mut class: Vec<VocabEntry> = freqs
                .counts
                .iter()
                .filter(|((_, p), _)| *p == pos)
                .map(|((lemma, _), &freq)| VocabEntry {
                    lemma: lemma.clone(),
                    pos,
                    freq,
                })
                .collect();
            class.sort_by(|a, b| b.freq.cmp(&a.freq).then_with(|| a.lemma.cmp(&b.lemma)));
            class.truncate(caps.get(pos));
            entries.extend(class);
        }
        Vocabulary::from_entries(entries)
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&VocabEntry> {
        self.index.get(label).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = String> + '_ {
        self.entries.iter().map(VocabEntry::label)
    }

    /// Entries of all classes ranked by frequency (ties by label).
    fn ranked(&self) -> Vec<&VocabEntry> {
        let mut all: Vec<&VocabEntry> = self.entries.iter().collect();
        all.sort_by(|a, b| b.freq.cmp(&a.freq).then_with(|| a.label().cmp(&b.label())));
        all
    }

    /// The `n` most frequent words across the four classes.
    pub fn most_frequent(&self, n: usize) -> Vec<String> {
        self.ranked()
            .into_iter()
            .take(n)
            .map(VocabEntry::label)
            .collect()
    }

    /// `n` words split over the classes in proportion to `caps`, each class
    /// contributing its most frequent lemmas. Shortfalls in one class are
    /// filled from the overall frequency ranking.
    pub fn proportional(&self, n: usize, caps: &Caps) -> Vec<String> {
        let total = caps.total().max(1);
        let mut chosen: Vec<String> = Vec::with_capacity(n);
        let mut taken = std::collections::HashSet::new();
        for pos in Pos::OPEN {
            let quota = n * caps.get(pos) / total;
            for e in self.entries.iter().filter(|e| e.pos == pos).take(quota) {
                taken.insert(e.label());
                chosen.push(e.label());
            }
        }
        for e in self.ranked() {
            if chosen.len() >= n {
                break;
            }
            if taken.insert(e.label()) {
                chosen.push(e.label());
            }
        }
        chosen.truncate(n);
        chosen
    }

    /// Writes `lemma<TAB>pos<TAB>freq` lines.
    pub fn write_tsv(&self, mut w: impl Write) -> std::io::Result<()> {
        for e in &self.entries {
            writeln!(w, "{}\t{}\t{}", e.lemma, e.pos, e.freq)?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let src = path.display().to_string();
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 3 {
                return Err(Error::parse(&src, i + 1, "expected lemma, pos, freq"));
            }
            let pos: Pos = parts[1]
                .parse()
                .map_err(|_| Error::parse(&src, i + 1, format!("bad POS {:?}", parts[1])))?;
            let freq = parts[2]
                .parse()
                .map_err(|_| Error::parse(&src, i + 1, format!("bad frequency {:?}", parts[2])))?;
            entries.push(VocabEntry {
                lemma: parts[0].to_string(),
                pos,
                freq,
            });
        }
        Ok(Vocabulary::from_entries(entries))
    }
}

/// Counts lemma frequencies over a sentence stream and keeps the
/// `caps[pos]` most frequent lemmas of each class.
pub fn build_vocabulary<I>(corpus: I, caps: &Caps) -> Result<Vocabulary>
where
    I: IntoIterator<Item = Result<Sentence>>,
{
    let mut freqs = FreqTable::default();
    for sentence in corpus {
        freqs.add_sentence(&sentence?);
    }
    Ok(Vocabulary::from_freqs(&freqs, caps))
}
