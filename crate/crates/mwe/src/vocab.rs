//! Word vocabulary and relation registry built from tuple streams.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::RawTuple;
use crate::error::{Error, Result};

/// Bijection between surface words and ids in `[0, n)`, ordered by
/// descending frequency (ties broken lexicographically).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    ids: HashMap<String, usize>,
    freqs: Vec<u64>,
}

impl Vocabulary {
    pub(crate) fn from_entries(entries: Vec<(String, u64)>) -> Self {
        let mut ids = HashMap::with_capacity(entries.len());
        let mut words = Vec::with_capacity(entries.len());
        let mut freqs = Vec::with_capacity(entries.len());
        for (word, freq) in entries {
            ids.insert(word.clone(), words.len());
            words.push(word);
            freqs.push(freq);
        }
        Vocabulary { words, ids, freqs }
    }

    /// False when the id map lost entries to duplicate words; loaders use
    /// this to reject corrupt files.
    pub(crate) fn is_bijective(&self) -> bool {
        self.ids.len() == self.words.len()
    }

    pub fn n(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.ids.get(word).copied()
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(|s| s.as_str())
    }

    pub fn freq(&self, id: usize) -> u64 {
        self.freqs[id]
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|s| s.as_str())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "#MWE-VOCAB v1 n={}", self.n()).map_err(io)?;
        for (word, freq) in self.words.iter().zip(&self.freqs) {
            writeln!(w, "{word}\t{freq}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = match lines.next() {
            Some(Ok(line)) => line,
            Some(Err(e)) => return Err(Error::io(path, e)),
            None => return Err(Error::parse(1, "empty vocabulary file")),
        };
        let n: usize = header
            .strip_prefix("#MWE-VOCAB v1 n=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::parse(1, format!("bad vocabulary header `{header}`")))?;
        let mut entries = Vec::with_capacity(n);
        for (idx, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let lineno = idx + 2;
            let (word, freq) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(lineno, "expected `word<TAB>freq`"))?;
            let freq: u64 = freq
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad frequency `{freq}`")))?;
            entries.push((word.to_string(), freq));
        }
        if entries.len() != n {
            return Err(Error::InvalidInput(format!(
                "vocabulary header says n={n} but file has {} entries",
                entries.len()
            )));
        }
        let vocab = Self::from_entries(entries);
        if !vocab.is_bijective() {
            return Err(Error::InvalidInput("duplicate word in vocabulary file".into()));
        }
        Ok(vocab)
    }
}

/// Bijection between relation names and ids in `[0, m)`, in order of first
/// appearance in the stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationRegistry {
    relations: Vec<String>,
    ids: HashMap<String, usize>,
}

impl RelationRegistry {
    pub fn from_names<I: IntoIterator<Item = String>>(names: I) -> Self {
        let mut reg = RelationRegistry {
            relations: Vec::new(),
            ids: HashMap::new(),
        };
        for name in names {
            reg.insert(&name);
        }
        reg
    }

    fn insert(&mut self, name: &str) {
        if !self.ids.contains_key(name) {
            self.ids.insert(name.to_string(), self.relations.len());
            self.relations.push(name.to_string());
        }
    }

    pub fn m(&self) -> usize {
        self.relations.len()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.relations.get(id).map(|s| s.as_str())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.relations.iter().map(|s| s.as_str())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "#MWE-RELS v1 m={}", self.m()).map_err(io)?;
        for name in &self.relations {
            writeln!(w, "{name}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = match lines.next() {
            Some(Ok(line)) => line,
            Some(Err(e)) => return Err(Error::io(path, e)),
            None => return Err(Error::parse(1, "empty relation file")),
        };
        let m: usize = header
            .strip_prefix("#MWE-RELS v1 m=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::parse(1, format!("bad relation header `{header}`")))?;
        let mut names = Vec::with_capacity(m);
        for line in lines {
            names.push(line.map_err(|e| Error::io(path, e))?);
        }
        if names.len() != m {
            return Err(Error::InvalidInput(format!(
                "relation header says m={m} but file has {} entries",
                names.len()
            )));
        }
        Ok(Self::from_names(names))
    }
}

/// Counts word occurrences over both slots (weighted by tuple count), keeps
/// words with total frequency `>= min_count`, and registers every relation
/// name in order of first appearance.
pub fn build_vocab<'a, I>(tuples: I, min_count: u64) -> (Vocabulary, RelationRegistry)
where
    I: IntoIterator<Item = &'a RawTuple>,
{
    let mut counts: HashMap<&'a str, u64> = HashMap::new();
    let mut rels = RelationRegistry::from_names(std::iter::empty());
    for t in tuples {
        *counts.entry(&t.head).or_insert(0) += t.count;
        *counts.entry(&t.tail).or_insert(0) += t.count;
        rels.insert(&t.relation);
    }
    let mut entries: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(w, c)| (w.to_string(), c))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    (Vocabulary::from_entries(entries), rels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RawTuple;

    #[test]
    fn frequency_threshold_drops_rare_words() {
        let raw = vec![RawTuple::new("a", "r", "b", 3), RawTuple::new("a", "r", "c", 1)];
        let (vocab, rels) = build_vocab(&raw, 2);
        assert_eq!(vocab.n(), 2);
        assert_eq!(vocab.id("a"), Some(0));
        assert_eq!(vocab.freq(0), 4);
        assert_eq!(vocab.id("b"), Some(1));
        assert_eq!(vocab.freq(1), 3);
        assert_eq!(vocab.id("c"), None);
        assert_eq!(rels.m(), 1);
        assert_eq!(rels.id("r"), Some(0));
    }

    #[test]
    fn empty_stream_builds_empty_structures() {
        let raw: Vec<RawTuple> = Vec::new();
        let (vocab, rels) = build_vocab(&raw, 0);
        assert!(vocab.is_empty());
        assert_eq!(rels.m(), 0);
    }

    #[test]
    fn min_count_one_keeps_everything() {
        let raw = vec![
            RawTuple::new("x", "r", "y", 1),
            RawTuple::new("z", "q", "x", 1),
        ];
        let (vocab, _) = build_vocab(&raw, 1);
        for w in ["x", "y", "z"] {
            assert!(vocab.id(w).is_some(), "{w} should be retained");
        }
    }

    #[test]
    fn ids_are_a_bijection() {
        let raw = vec![
            RawTuple::new("pear", "r", "apple", 2),
            RawTuple::new("apple", "r", "fig", 2),
        ];
        let (vocab, _) = build_vocab(&raw, 0);
        for id in 0..vocab.n() {
            let w = vocab.word(id).unwrap();
            assert_eq!(vocab.id(w), Some(id));
        }
    }

    #[test]
    fn ordering_is_frequency_then_lexicographic() {
        let raw = vec![
            RawTuple::new("b", "r", "a", 2), // a:2, b:2
            RawTuple::new("z", "r", "z", 3), // z:6
        ];
        let (vocab, _) = build_vocab(&raw, 0);
        let order: Vec<&str> = vocab.words().collect();
        assert_eq!(order, vec!["z", "a", "b"]);
    }

    #[test]
    fn rebuild_is_deterministic() {
        let raw: Vec<RawTuple> = (0..200)
            .map(|i| RawTuple::new(&format!("w{}", i % 37), "r", &format!("w{}", i % 11), 1 + i % 3))
            .collect();
        let (v1, r1) = build_vocab(&raw, 2);
        let (v2, r2) = build_vocab(&raw, 2);
        assert_eq!(v1, v2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn retained_frequencies_match_brute_force_recount() {
        let raw: Vec<RawTuple> = (0..100)
            .map(|i| RawTuple::new(&format!("w{}", i % 7), "r", &format!("w{}", i % 5), 1 + i % 4))
            .collect();
        let (vocab, _) = build_vocab(&raw, 3);
        for id in 0..vocab.n() {
            let w = vocab.word(id).unwrap();
            let mut expect = 0;
            for t in &raw {
                if t.head == w {
                    expect += t.count;
                }
                if t.tail == w {
                    expect += t.count;
                }
            }
            assert_eq!(vocab.freq(id), expect, "freq mismatch for {w}");
        }
    }

    #[test]
    fn vocab_file_round_trip() {
        let raw = vec![RawTuple::new("a", "r", "b", 3), RawTuple::new("a", "q", "c", 2)];
        let (vocab, rels) = build_vocab(&raw, 0);
        let dir = tempfile::tempdir().unwrap();
        let vpath = dir.path().join("vocab.tsv");
        let rpath = dir.path().join("rels.tsv");
        vocab.save(&vpath).unwrap();
        rels.save(&rpath).unwrap();
        assert_eq!(Vocabulary::load(&vpath).unwrap(), vocab);
        assert_eq!(RelationRegistry::load(&rpath).unwrap(), rels);

        let text = std::fs::read_to_string(&vpath).unwrap();
        assert!(text.starts_with("#MWE-VOCAB v1 n=3\n"));
        let text = std::fs::read_to_string(&rpath).unwrap();
        assert!(text.starts_with("#MWE-RELS v1 m=2\n"));
    }

    #[test]
    fn loader_rejects_duplicate_words() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.tsv");
        std::fs::write(&path, "#MWE-VOCAB v1 n=2\na\t3\na\t2\n").unwrap();
        assert!(matches!(
            Vocabulary::load(&path),
            Err(Error::InvalidInput(_))
        ));
    }
}
