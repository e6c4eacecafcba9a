//! Relation tuples: extraction from parsed sentences, the tuple file
//! format, id-encoding against a vocabulary, and negative sampling.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use rand::Rng;

use crate::conllu::Sentence;
use crate::error::{Error, Result};
use crate::model::Role;
use crate::vocab::{RelationRegistry, Vocabulary};

pub const TUPLE_HEADER: &str = "#MWE-TUPLES v1";

/// One `(head, relation, tail)` observation with its corpus count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTuple {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub count: u64,
}

impl RawTuple {
    pub fn new(head: &str, relation: &str, tail: &str, count: u64) -> Self {
        RawTuple {
            head: head.to_string(),
            relation: relation.to_string(),
            tail: tail.to_string(),
            count,
        }
    }
}

/// Id-encoded tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tuple {
    pub head: usize,
    pub rel: usize,
    pub tail: usize,
}

/// Encoded tuple with its merged corpus count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Record {
    pub tuple: Tuple,
    pub count: u64,
}

/// The relation set used throughout the experiments.
pub fn default_relations() -> BTreeSet<String> {
    ["nsubj", "dobj", "amod"].iter().map(|s| s.to_string()).collect()
}

/// Emits one tuple per dependency edge whose relation is in `relation_set`,
/// with the governor as head and the dependent as tail. Under this rule the
/// verb heads `nsubj`/`dobj` edges and the noun heads `amod` edges.
pub fn extract_tuples(
    sentences: &[Sentence],
    relation_set: &BTreeSet<String>,
    lowercase: bool,
) -> Vec<RawTuple> {
    let mut out = Vec::new();
    for sentence in sentences {
        for token in sentence {
            if token.head == 0 || !relation_set.contains(&token.deprel) {
                continue;
            }
            let Some(governor) = sentence.get(token.head - 1) else {
                continue;
            };
            let (head, tail) = if lowercase {
                (governor.form.to_lowercase(), token.form.to_lowercase())
            } else {
                (governor.form.clone(), token.form.clone())
            };
            out.push(RawTuple {
                head,
                relation: token.deprel.clone(),
                tail,
                count: 1,
            });
        }
    }
    out
}

/// Merges duplicate tuples by summing counts; output is sorted by
/// `(head, relation, tail)` so repeated runs write identical files.
pub fn merge_counts(tuples: Vec<RawTuple>) -> Vec<RawTuple> {
    let mut merged: BTreeMap<(String, String, String), u64> = BTreeMap::new();
    for t in tuples {
        *merged.entry((t.head, t.relation, t.tail)).or_insert(0) += t.count;
    }
    merged
        .into_iter()
        .map(|((head, relation, tail), count)| RawTuple {
            head,
            relation,
            tail,
            count,
        })
        .collect()
}

pub fn write_tuple_file(path: &Path, tuples: &[RawTuple]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{TUPLE_HEADER}").map_err(io)?;
    for t in tuples {
        writeln!(w, "{}\t{}\t{}\t{}", t.head, t.relation, t.tail, t.count).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug)]
pub struct TupleFile {
    pub tuples: Vec<RawTuple>,
    /// Malformed data lines that were skipped.
    pub malformed: usize,
}

pub fn read_tuple_file(path: &Path) -> Result<TupleFile> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    match lines.next() {
        Some((_, Ok(first))) if first.trim_end() == TUPLE_HEADER => {}
        Some((_, Ok(first))) => {
            return Err(Error::parse(1, format!("expected `{TUPLE_HEADER}`, found `{first}`")))
        }
        Some((_, Err(e))) => return Err(Error::io(path, e)),
        None => return Err(Error::parse(1, format!("empty file, expected `{TUPLE_HEADER}`"))),
    }

    let mut tuples = Vec::new();
    let mut malformed = 0;
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            malformed += 1;
            continue;
        }
        match cols[3].parse::<u64>() {
            Ok(count) if count >= 1 => tuples.push(RawTuple::new(cols[0], cols[1], cols[2], count)),
            _ => {
                malformed += 1;
                let _ = idx; // line numbers only matter for fatal errors
            }
        }
    }
    Ok(TupleFile { tuples, malformed })
}

/// Id-encoded corpus with per-relation grouping and slot marginals.
#[derive(Debug, Clone)]
pub struct TupleCorpus {
    records: Vec<Record>,
    rel_ranges: Vec<Range<usize>>,
    head_marginals: Vec<Vec<u64>>,
    tail_marginals: Vec<Vec<u64>>,
    dropped_oov: u64,
    n_words: usize,
}

/// Drops OOV tuples (counted), merges duplicates by summing counts, and
/// builds per-relation slot marginals. Relation names must already be in
/// the registry.
pub fn encode_corpus(
    raw: &[RawTuple],
    vocab: &Vocabulary,
    rels: &RelationRegistry,
) -> Result<TupleCorpus> {
    let n = vocab.n();
    let m = rels.m();
    let mut merged: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
    let mut dropped_oov = 0u64;
    for t in raw {
        let rel = rels
            .id(&t.relation)
            .ok_or_else(|| Error::UnknownRelation(t.relation.clone()))?;
        let (Some(head), Some(tail)) = (vocab.id(&t.head), vocab.id(&t.tail)) else {
            dropped_oov += 1;
            continue;
        };
        *merged.entry((rel, head, tail)).or_insert(0) += t.count;
    }

    let records: Vec<Record> = merged
        .into_iter()
        .map(|((rel, head, tail), count)| Record {
            tuple: Tuple { head, rel, tail },
            count,
        })
        .collect();

    let mut rel_ranges = vec![0..0; m];
    let mut head_marginals = vec![vec![0u64; n]; m];
    let mut tail_marginals = vec![vec![0u64; n]; m];
    let mut start = 0;
    for (i, rec) in records.iter().enumerate() {
        let r = rec.tuple.rel;
        head_marginals[r][rec.tuple.head] += rec.count;
        tail_marginals[r][rec.tuple.tail] += rec.count;
        if i + 1 == records.len() || records[i + 1].tuple.rel != r {
            rel_ranges[r] = start..i + 1;
            start = i + 1;
        }
    }

    Ok(TupleCorpus {
        records,
        rel_ranges,
        head_marginals,
        tail_marginals,
        dropped_oov,
        n_words: n,
    })
}

impl TupleCorpus {
    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_relations(&self) -> usize {
        self.rel_ranges.len()
    }

    pub fn n_words(&self) -> usize {
        self.n_words
    }

    pub fn rel_range(&self, rel: usize) -> Range<usize> {
        self.rel_ranges[rel].clone()
    }

    pub fn marginal(&self, rel: usize, slot: Role) -> &[u64] {
        match slot {
            Role::Head => &self.head_marginals[rel],
            Role::Tail => &self.tail_marginals[rel],
        }
    }

    pub fn dropped_oov(&self) -> u64 {
        self.dropped_oov
    }

    /// Visits per epoch when each record is replayed `min(count, cap)` times.
    pub fn total_visits(&self, count_cap: Option<u64>) -> u64 {
        let cap = count_cap.unwrap_or(u64::MAX);
        self.records.iter().map(|r| r.count.min(cap)).sum()
    }
}

const RESAMPLE_ATTEMPTS: usize = 100;

struct SlotTable {
    words: Vec<usize>,
    probs: Vec<f64>,
    cum: Vec<f64>,
}

impl SlotTable {
    fn build(marginal: &[u64], exponent: f64) -> Self {
        let words: Vec<usize> = (0..marginal.len()).filter(|&w| marginal[w] > 0).collect();
        let weights: Vec<f64> = words.iter().map(|&w| (marginal[w] as f64).powf(exponent)).collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cum.push(acc);
        }
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        SlotTable { words, probs, cum }
    }

    fn draw(&self, rng: &mut impl Rng) -> usize {
        let x: f64 = rng.random();
        let idx = self.cum.partition_point(|&c| c < x);
        self.words[idx.min(self.words.len() - 1)]
    }
}

/// Per-(relation, slot) discrete distributions used to corrupt tuples.
///
/// Weights are the observed slot marginals raised to `exponent`
/// (`0.75` by default, `0.0` for uniform-over-support).
pub struct NegativeSampler {
    rel_names: Vec<String>,
    head_tables: Vec<SlotTable>,
    tail_tables: Vec<SlotTable>,
    exponent: f64,
}

impl NegativeSampler {
    pub fn from_corpus(corpus: &TupleCorpus, rels: &RelationRegistry, exponent: f64) -> Self {
        let m = corpus.n_relations();
        NegativeSampler {
            rel_names: (0..m).map(|r| rels.name(r).unwrap_or("?").to_string()).collect(),
            head_tables: (0..m)
                .map(|r| SlotTable::build(corpus.marginal(r, Role::Head), exponent))
                .collect(),
            tail_tables: (0..m)
                .map(|r| SlotTable::build(corpus.marginal(r, Role::Tail), exponent))
                .collect(),
            exponent,
        }
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    fn table(&self, rel: usize, slot: Role) -> &SlotTable {
        match slot {
            Role::Head => &self.head_tables[rel],
            Role::Tail => &self.tail_tables[rel],
        }
    }

    /// Sampling probability of `word` in `(rel, slot)`; 0 outside the support.
    pub fn probability(&self, rel: usize, slot: Role, word: usize) -> f64 {
        let t = self.table(rel, slot);
        match t.words.binary_search(&word) {
            Ok(i) => t.probs[i],
            Err(_) => 0.0,
        }
    }

    pub fn support(&self, rel: usize, slot: Role) -> &[usize] {
        &self.table(rel, slot).words
    }

    fn draw_distinct(&self, rel: usize, slot: Role, avoid: usize, rng: &mut impl Rng) -> Result<usize> {
        let t = self.table(rel, slot);
        if t.words.len() < 2 {
            return Err(Error::SingletonSupport {
                relation: self.rel_names[rel].clone(),
                slot,
            });
        }
        for _ in 0..RESAMPLE_ATTEMPTS {
            let w = t.draw(rng);
            if w != avoid {
                return Ok(w);
            }
        }
        Err(Error::NegativeExhausted {
            relation: self.rel_names[rel].clone(),
            attempts: RESAMPLE_ATTEMPTS,
        })
    }

    /// Returns the corrupted-head and corrupted-tail tuples for `t`.
    pub fn sample_negatives(&self, t: Tuple, rng: &mut impl Rng) -> Result<(Tuple, Tuple)> {
        let fake_head = self.draw_distinct(t.rel, Role::Head, t.head, rng)?;
        let fake_tail = self.draw_distinct(t.rel, Role::Tail, t.tail, rng)?;
        Ok((
            Tuple { head: fake_head, rel: t.rel, tail: t.tail },
            Tuple { head: t.head, rel: t.rel, tail: fake_tail },
        ))
    }
}
