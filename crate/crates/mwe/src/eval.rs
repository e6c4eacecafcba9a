//! Evaluation: Spearman correlation, selectional-preference scoring, and
//! word-similarity scoring.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Role};
use crate::num::{cosine, Scalar};
use crate::vocab::{RelationRegistry, Vocabulary};

/// Spearman rank correlation with average ranks for ties.
pub fn spearman<F: Scalar>(xs: &[F], ys: &[F]) -> Result<F> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::CorrelationInput {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in correlation input".into()));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry).ok_or(Error::UndefinedCorrelation)
}

/// 1-based ranks; tied values share the mean of their rank span.
fn average_ranks<F: Scalar>(vals: &[F]) -> Vec<F> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).expect("finite values"));
    let mut ranks = vec![F::zero(); vals.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && vals[idx[j + 1]] == vals[idx[i]] {
            j += 1;
        }
        let avg = F::of((i + j) as f64 / 2.0 + 1.0);
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson<F: Scalar>(xs: &[F], ys: &[F]) -> Option<F> {
    let len = F::of(xs.len() as f64);
    let mean = |vs: &[F]| vs.iter().fold(F::zero(), |a, &v| a + v) / len;
    let (mx, my) = (mean(xs), mean(ys));
    let mut cov = F::zero();
    let mut vx = F::zero();
    let mut vy = F::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == F::zero() || vy == F::zero() {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

/// One selectional-preference judgement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpRow {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub gold: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SpDataset {
    pub rows: Vec<SpRow>,
}

impl SpDataset {
    pub fn from_rows(rows: Vec<SpRow>) -> Self {
        SpDataset { rows }
    }

    /// Generic TSV: `head<TAB>relation<TAB>tail<TAB>score`, `#` comments.
    pub fn from_tsv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::parse(
                    lineno,
                    format!("expected 4 tab-separated columns, found {}", cols.len()),
                ));
            }
            let gold: f64 = cols[3]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad score `{}`", cols[3])))?;
            if !gold.is_finite() {
                return Err(Error::parse(lineno, "non-finite score"));
            }
            rows.push(SpRow {
                head: cols[0].to_string(),
                relation: cols[1].to_string(),
                tail: cols[2].to_string(),
                gold,
            });
        }
        Ok(SpDataset { rows })
    }

    /// JSON-lines records; accepts the common key spellings for the
    /// head/tail/relation/score fields.
    pub fn from_jsonl(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value = serde_json::from_str(line)
                .map_err(|e| Error::parse(lineno, format!("bad JSON: {e}")))?;
            let pick = |keys: &[&str]| -> Option<String> {
                keys.iter()
                    .find_map(|k| value.get(k))
                    .and_then(|v| v.as_str().map(str::to_string))
            };
            let head = pick(&["head", "predicate", "word1", "w1"])
                .ok_or_else(|| Error::parse(lineno, "missing head/predicate field"))?;
            let tail = pick(&["tail", "argument", "word2", "w2"])
                .ok_or_else(|| Error::parse(lineno, "missing tail/argument field"))?;
            let relation = pick(&["relation", "rel", "deprel"])
                .ok_or_else(|| Error::parse(lineno, "missing relation field"))?;
            let gold = ["score", "plausibility", "rating", "mean_rating", "annotation", "gold"]
                .iter()
                .find_map(|k| value.get(*k))
                .and_then(|v| {
                    v.as_f64()
                        .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
                })
                .ok_or_else(|| Error::parse(lineno, "missing or non-numeric score field"))?;
            rows.push(SpRow { head, relation, tail, gold });
        }
        Ok(SpDataset { rows })
    }

    /// Relation names in order of first appearance.
    pub fn relations(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for row in &self.rows {
            if !seen.contains(&row.relation.as_str()) {
                seen.push(row.relation.as_str());
            }
        }
        seen
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpRelationResult {
    pub relation: String,
    /// `None` when fewer than two rows were scorable.
    pub rho: Option<f64>,
    pub scorable: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpReport {
    pub per_relation: Vec<SpRelationResult>,
    /// Unweighted mean over relations with a defined correlation.
    pub average: f64,
    pub coverage: f64,
    pub total_rows: usize,
    pub scorable_rows: usize,
}

/// Scores a selectional-preference dataset: the prediction per row is the
/// cosine plausibility of the tuple; rows with out-of-vocabulary words are
/// skipped and reported through the coverage fraction.
pub fn eval_sp<F: Scalar>(
    params: &ModelParams<F>,
    vocab: &Vocabulary,
    rels: &RelationRegistry,
    ds: &SpDataset,
) -> Result<SpReport> {
    let mut per_relation = Vec::new();
    let mut scorable_rows = 0;
    for relation in ds.relations() {
        let rel_id = rels
            .id(relation)
            .filter(|&r| r < params.m())
            .ok_or_else(|| Error::RelationNotInModel(relation.to_string()))?;
        let mut preds = Vec::new();
        let mut golds = Vec::new();
        let mut skipped = 0;
        for row in ds.rows.iter().filter(|r| r.relation == relation) {
            let (Some(h), Some(t)) = (vocab.id(&row.head), vocab.id(&row.tail)) else {
                skipped += 1;
                continue;
            };
            preds.push(params.plausibility(h, rel_id, t)?.as_f64());
            golds.push(row.gold);
        }
        scorable_rows += preds.len();
        let rho = if preds.len() >= 2 {
            Some(spearman(&preds, &golds)?)
        } else {
            None
        };
        per_relation.push(SpRelationResult {
            relation: relation.to_string(),
            rho,
            scorable: preds.len(),
            skipped,
        });
    }
    let defined: Vec<f64> = per_relation.iter().filter_map(|r| r.rho).collect();
    if defined.is_empty() {
        return Err(Error::NoScorableRows);
    }
    let total_rows = ds.rows.len();
    Ok(SpReport {
        average: defined.iter().sum::<f64>() / defined.len() as f64,
        coverage: scorable_rows as f64 / total_rows.max(1) as f64,
        per_relation,
        total_rows,
        scorable_rows,
    })
}

/// Part of speech of a word-similarity pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
}

impl Pos {
    pub fn parse(s: &str) -> Option<Pos> {
        match s.to_ascii_lowercase().as_str() {
            "n" | "noun" => Some(Pos::Noun),
            "v" | "verb" => Some(Pos::Verb),
            "a" | "adj" | "adjective" => Some(Pos::Adjective),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Verb => "verb",
            Pos::Adjective => "adjective",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WsRow {
    pub word1: String,
    pub word2: String,
    pub pos: Pos,
    pub gold: f64,
}

#[derive(Debug, Clone, Default)]
pub struct WsDataset {
    pub rows: Vec<WsRow>,
}

impl WsDataset {
    pub fn from_rows(rows: Vec<WsRow>) -> Self {
        WsDataset { rows }
    }

    /// Reads either the published SimLex-999 layout (detected by its
    /// `SimLex999` header column) or a generic
    /// `word1<TAB>word2<TAB>pos<TAB>score` TSV.
    pub fn from_tsv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate().peekable();
        let mut columns = (0usize, 1usize, 2usize, 3usize);
        if let Some((_, first)) = lines.peek() {
            let header: Vec<&str> = first.split('\t').collect();
            if let Some(score_col) = header.iter().position(|c| *c == "SimLex999") {
                let find = |name: &str| header.iter().position(|c| *c == name);
                columns = (
                    find("word1").ok_or_else(|| Error::parse(1, "missing word1 column"))?,
                    find("word2").ok_or_else(|| Error::parse(1, "missing word2 column"))?,
                    find("POS").ok_or_else(|| Error::parse(1, "missing POS column"))?,
                    score_col,
                );
                lines.next();
            }
        }
        let (c1, c2, cp, cs) = columns;
        let needed = [c1, c2, cp, cs].into_iter().max().unwrap() + 1;
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < needed {
                return Err(Error::parse(
                    lineno,
                    format!("expected at least {needed} columns, found {}", cols.len()),
                ));
            }
            let pos = Pos::parse(cols[cp])
                .ok_or_else(|| Error::parse(lineno, format!("bad part of speech `{}`", cols[cp])))?;
            let gold: f64 = cols[cs]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad score `{}`", cols[cs])))?;
            rows.push(WsRow {
                word1: cols[c1].to_string(),
                word2: cols[c2].to_string(),
                pos,
                gold,
            });
        }
        Ok(WsDataset { rows })
    }
}

/// Which embedding family a word vector is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorSource {
    Center,
    Relation(usize),
}

/// How the head and tail vectors of one word are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combiner {
    Head,
    Tail,
    Sum,
    Concat,
}

impl Combiner {
    pub fn parse(s: &str) -> Option<Combiner> {
        match s {
            "h" | "head" => Some(Combiner::Head),
            "t" | "tail" => Some(Combiner::Tail),
            "h+t" | "sum" => Some(Combiner::Sum),
            "concat" | "[h,t]" => Some(Combiner::Concat),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Combiner::Head => "h",
            Combiner::Tail => "t",
            Combiner::Sum => "h+t",
            Combiner::Concat => "[h,t]",
        }
    }
}

/// The vector representing one word under a source/combiner choice.
pub(crate) fn word_vector<F: Scalar>(
    params: &ModelParams<F>,
    w: usize,
    source: VectorSource,
    combiner: Combiner,
) -> Result<Vec<f64>> {
    let (h, t): (Vec<f64>, Vec<f64>) = match source {
        VectorSource::Center => (
            params.center(Role::Head).row(w).iter().map(|v| v.as_f64()).collect(),
            params.center(Role::Tail).row(w).iter().map(|v| v.as_f64()).collect(),
        ),
        VectorSource::Relation(r) => (
            params.compose(w, Role::Head, r)?.iter().map(|v| v.as_f64()).collect(),
            params.compose(w, Role::Tail, r)?.iter().map(|v| v.as_f64()).collect(),
        ),
    };
    Ok(match combiner {
        Combiner::Head => h,
        Combiner::Tail => t,
        Combiner::Sum => h.iter().zip(&t).map(|(a, b)| a + b).collect(),
        Combiner::Concat => h.into_iter().chain(t).collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WsPosResult {
    pub pos: Pos,
    pub rho: Option<f64>,
    pub scorable: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct WsReport {
    pub per_pos: Vec<WsPosResult>,
    pub overall: f64,
    pub coverage: f64,
    pub total_rows: usize,
    pub scorable_rows: usize,
}

/// Scores a word-similarity dataset with cosine over the chosen vectors.
pub fn eval_ws<F: Scalar>(
    params: &ModelParams<F>,
    vocab: &Vocabulary,
    ds: &WsDataset,
    source: VectorSource,
    combiner: Combiner,
) -> Result<WsReport> {
    let mut all_preds = Vec::new();
    let mut all_golds = Vec::new();
    let mut by_pos: Vec<(Pos, Vec<f64>, Vec<f64>, usize)> = [Pos::Noun, Pos::Verb, Pos::Adjective]
        .into_iter()
        .map(|p| (p, Vec::new(), Vec::new(), 0))
        .collect();

    for row in &ds.rows {
        let slot = by_pos.iter_mut().find(|(p, ..)| *p == row.pos).expect("known pos");
        let (Some(w1), Some(w2)) = (vocab.id(&row.word1), vocab.id(&row.word2)) else {
            slot.3 += 1;
            continue;
        };
        let v1 = word_vector(params, w1, source, combiner)?;
        let v2 = word_vector(params, w2, source, combiner)?;
        let sim = cosine(&v1, &v2).ok_or_else(|| {
            Error::InvalidInput(format!(
                "zero-norm vector for `{}` or `{}`",
                row.word1, row.word2
            ))
        })?;
        slot.1.push(sim);
        slot.2.push(row.gold);
        all_preds.push(sim);
        all_golds.push(row.gold);
    }

    if all_preds.len() < 2 {
        return Err(Error::NoScorableRows);
    }
    let overall = spearman(&all_preds, &all_golds)?;
    let per_pos = by_pos
        .into_iter()
        .map(|(pos, preds, golds, skipped)| {
            let rho = if preds.len() >= 2 {
                spearman(&preds, &golds).ok()
            } else {
                None
            };
            Ok(WsPosResult {
                pos,
                rho,
                scorable: preds.len(),
                skipped,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total_rows = ds.rows.len();
    Ok(WsReport {
        per_pos,
        overall,
        coverage: all_preds.len() as f64 / total_rows.max(1) as f64,
        total_rows,
        scorable_rows: all_preds.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_and_reversed() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn tie_case_matches_hand_computation() {
        // ranks of [1,2,2,4] are [1, 2.5, 2.5, 4]; Pearson against
        // [1,3,2,4] gives 4.5/sqrt(4.5*5) = 3/sqrt(10)
        let rho = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((rho - 3.0 / 10.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_list_is_undefined() {
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation)
        ));
    }

    #[test]
    fn bad_lengths_are_rejected() {
        assert!(matches!(
            spearman(&[1.0], &[1.0]),
            Err(Error::CorrelationInput { .. })
        ));
        assert!(matches!(
            spearman(&[1.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::CorrelationInput { .. })
        ));
    }

    #[test]
    fn spearman_in_f32() {
        let rho: f32 = spearman(&[1.0f32, 2.0, 3.0], &[1.0, 4.0, 9.0]).unwrap();
        assert!((rho - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pos_parsing() {
        assert_eq!(Pos::parse("N"), Some(Pos::Noun));
        assert_eq!(Pos::parse("verb"), Some(Pos::Verb));
        assert_eq!(Pos::parse("A"), Some(Pos::Adjective));
        assert_eq!(Pos::parse("x"), None);
    }

    #[test]
    fn combiner_parsing() {
        assert_eq!(Combiner::parse("h"), Some(Combiner::Head));
        assert_eq!(Combiner::parse("h+t"), Some(Combiner::Sum));
        assert_eq!(Combiner::parse("[h,t]"), Some(Combiner::Concat));
        assert_eq!(Combiner::parse("??"), None);
    }

    #[test]
    fn sp_tsv_reader() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sp.tsv");
        std::fs::write(&path, "# comment\neat\tdobj\tfood\t4.5\nbark\tnsubj\tdog\t3.0\n").unwrap();
        let ds = SpDataset::from_tsv(&path).unwrap();
        assert_eq!(ds.rows.len(), 2);
        assert_eq!(ds.rows[0].head, "eat");
        assert_eq!(ds.relations(), vec!["dobj", "nsubj"]);

        std::fs::write(&path, "a\tb\tc\n").unwrap();
        assert!(matches!(SpDataset::from_tsv(&path), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn sp_jsonl_reader_accepts_common_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sp.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"predicate\": \"eat\", \"argument\": \"food\", \"relation\": \"dobj\", \"plausibility\": 4.2}\n",
                "{\"head\": \"bark\", \"tail\": \"dog\", \"rel\": \"nsubj\", \"score\": \"3.5\"}\n",
            ),
        )
        .unwrap();
        let ds = SpDataset::from_jsonl(&path).unwrap();
        assert_eq!(ds.rows.len(), 2);
        assert_eq!(ds.rows[0].gold, 4.2);
        assert_eq!(ds.rows[1].gold, 3.5);
    }

    #[test]
    fn ws_tsv_readers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ws.tsv");
        std::fs::write(&path, "old\tnew\tA\t1.58\nsmart\tintelligent\tA\t9.2\n").unwrap();
        let ds = WsDataset::from_tsv(&path).unwrap();
        assert_eq!(ds.rows.len(), 2);
        assert_eq!(ds.rows[0].pos, Pos::Adjective);

        let simlex = "word1\tword2\tPOS\tSimLex999\tconc(w1)\tconc(w2)\tconcQ\tAssoc(USF)\tSimAssoc333\tSD(SimLex)\n\
                      old\tnew\tA\t1.58\t2.72\t2.81\t2\t7.25\t1\t0.41\n";
        std::fs::write(&path, simlex).unwrap();
        let ds = WsDataset::from_tsv(&path).unwrap();
        assert_eq!(ds.rows.len(), 1);
        assert_eq!(ds.rows[0].gold, 1.58);
        assert_eq!(ds.rows[0].pos, Pos::Adjective);
    }

    mod model_eval {
        use super::*;
        use crate::corpus::RawTuple;
        use crate::vocab::build_vocab;

        fn fixture() -> (ModelParams<f64>, Vocabulary, RelationRegistry) {
            let raw = vec![
                RawTuple::new("a", "r", "b", 1),
                RawTuple::new("c", "r", "d", 1),
            ];
            let (vocab, rels) = build_vocab(&raw, 0);
            let mut params = ModelParams::<f64>::zeros(vocab.n(), 1, 2, 1, 1.0, 0.8).unwrap();
            // head vectors along distinct directions (pairwise-distinct
            // angle gaps, so no two cosines tie); tail vectors mirror them
            for w in 0..vocab.n() {
                let angle = (w * w) as f64 * 0.3;
                params.center_mut(Role::Head).row_mut(w).copy_from_slice(&[angle.cos(), angle.sin()]);
                params.center_mut(Role::Tail).row_mut(w).copy_from_slice(&[angle.cos(), angle.sin()]);
            }
            (params, vocab, rels)
        }

        #[test]
        fn perfect_model_scores_one() {
            let (params, vocab, rels) = fixture();
            // gold equal to the model's own plausibility, shifted monotonically
            let mut rows = Vec::new();
            for (h, t) in [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d"), ("a", "d")] {
                let hid = vocab.id(h).unwrap();
                let tid = vocab.id(t).unwrap();
                let p = params.plausibility(hid, 0, tid).unwrap();
                rows.push(SpRow {
                    head: h.into(),
                    relation: "r".into(),
                    tail: t.into(),
                    gold: 2.0 * p + 1.0,
                });
            }
            let report = eval_sp(&params, &vocab, &rels, &SpDataset::from_rows(rows)).unwrap();
            assert_eq!(report.per_relation.len(), 1);
            assert!((report.average - 1.0).abs() < 1e-12);
            assert_eq!(report.coverage, 1.0);
        }

        #[test]
        fn oov_rows_are_skipped_and_counted() {
            let (params, vocab, rels) = fixture();
            let rows = vec![
                SpRow { head: "a".into(), relation: "r".into(), tail: "b".into(), gold: 1.0 },
                SpRow { head: "a".into(), relation: "r".into(), tail: "c".into(), gold: 0.5 },
                SpRow { head: "zzz".into(), relation: "r".into(), tail: "b".into(), gold: 0.2 },
            ];
            let report = eval_sp(&params, &vocab, &rels, &SpDataset::from_rows(rows)).unwrap();
            assert_eq!(report.total_rows, 3);
            assert_eq!(report.scorable_rows, 2);
            assert_eq!(report.per_relation[0].skipped, 1);
            assert!((report.coverage - 2.0 / 3.0).abs() < 1e-12);
        }

        #[test]
        fn all_oov_is_an_error() {
            let (params, vocab, rels) = fixture();
            let rows = vec![SpRow {
                head: "nope".into(),
                relation: "r".into(),
                tail: "nada".into(),
                gold: 1.0,
            }, SpRow {
                head: "niente".into(),
                relation: "r".into(),
                tail: "nichts".into(),
                gold: 2.0,
            }];
            assert!(matches!(
                eval_sp(&params, &vocab, &rels, &SpDataset::from_rows(rows)),
                Err(Error::NoScorableRows)
            ));
        }

        #[test]
        fn unknown_relation_is_named() {
            let (params, vocab, rels) = fixture();
            let rows = vec![SpRow {
                head: "a".into(),
                relation: "pobj".into(),
                tail: "b".into(),
                gold: 1.0,
            }];
            match eval_sp(&params, &vocab, &rels, &SpDataset::from_rows(rows)) {
                Err(Error::RelationNotInModel(name)) => assert_eq!(name, "pobj"),
                other => panic!("expected relation error, got {other:?}"),
            }
        }

        #[test]
        fn row_order_does_not_change_the_result() {
            let (params, vocab, rels) = fixture();
            let mut rows = Vec::new();
            for (i, (h, t)) in [("a", "b"), ("b", "c"), ("c", "d"), ("a", "d")].iter().enumerate() {
                rows.push(SpRow {
                    head: (*h).into(),
                    relation: "r".into(),
                    tail: (*t).into(),
                    gold: i as f64,
                });
            }
            let fwd = eval_sp(&params, &vocab, &rels, &SpDataset::from_rows(rows.clone())).unwrap();
            rows.reverse();
            let rev = eval_sp(&params, &vocab, &rels, &SpDataset::from_rows(rows)).unwrap();
            assert_eq!(fwd.average, rev.average);
        }

        #[test]
        fn ws_head_equals_tail_on_mirrored_tensors() {
            let (params, vocab, _) = fixture();
            let rows = vec![
                WsRow { word1: "a".into(), word2: "b".into(), pos: Pos::Noun, gold: 3.0 },
                WsRow { word1: "a".into(), word2: "c".into(), pos: Pos::Noun, gold: 2.0 },
                WsRow { word1: "b".into(), word2: "d".into(), pos: Pos::Verb, gold: 1.0 },
            ];
            let ds = WsDataset::from_rows(rows);
            let h = eval_ws(&params, &vocab, &ds, VectorSource::Center, Combiner::Head).unwrap();
            let t = eval_ws(&params, &vocab, &ds, VectorSource::Center, Combiner::Tail).unwrap();
            assert_eq!(h.overall, t.overall);
        }

        #[test]
        fn concat_of_identical_halves_reproduces_head_rho() {
            let (params, vocab, _) = fixture();
            let rows = vec![
                WsRow { word1: "a".into(), word2: "b".into(), pos: Pos::Noun, gold: 3.0 },
                WsRow { word1: "a".into(), word2: "d".into(), pos: Pos::Noun, gold: 0.5 },
                WsRow { word1: "c".into(), word2: "d".into(), pos: Pos::Noun, gold: 2.0 },
            ];
            let ds = WsDataset::from_rows(rows);
            let h = eval_ws(&params, &vocab, &ds, VectorSource::Center, Combiner::Head).unwrap();
            let cat = eval_ws(&params, &vocab, &ds, VectorSource::Center, Combiner::Concat).unwrap();
            assert!((h.overall - cat.overall).abs() < 1e-12);
        }

        #[test]
        fn relational_source_with_zero_locals_matches_center() {
            let (params, vocab, _) = fixture();
            let rows = vec![
                WsRow { word1: "a".into(), word2: "b".into(), pos: Pos::Noun, gold: 3.0 },
                WsRow { word1: "c".into(), word2: "d".into(), pos: Pos::Noun, gold: 1.0 },
                WsRow { word1: "a".into(), word2: "d".into(), pos: Pos::Adjective, gold: 2.0 },
            ];
            let ds = WsDataset::from_rows(rows);
            let center = eval_ws(&params, &vocab, &ds, VectorSource::Center, Combiner::Sum).unwrap();
            let relational =
                eval_ws(&params, &vocab, &ds, VectorSource::Relation(0), Combiner::Sum).unwrap();
            assert_eq!(center.overall, relational.overall);
        }
    }
}
