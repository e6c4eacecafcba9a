//! Independent verification machinery: central finite differences against
//! the analytic gradients, and a synthetic corpus with planted selectional
//! preferences whose ground truth is known exactly.
//!
//! Everything here runs in 64-bit arithmetic.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{RawTuple, Tuple};
use crate::error::{Error, Result};
use crate::eval::SpRow;
use crate::model::{ModelParams, Role};
use crate::num::{dot, Scalar};
use crate::trainer::{sigmoid, tuple_loss, TrainingSample};

/// Central finite differences `(f(x+eps*e_i) - f(x-eps*e_i)) / (2*eps)`.
pub fn numeric_grad<G>(f: G, point: &[f64], eps: f64) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> f64,
{
    let mut x = point.to_vec();
    let mut grad = Vec::with_capacity(point.len());
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + eps;
        let fp = f(&x);
        x[i] = orig - eps;
        let fm = f(&x);
        x[i] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFiniteEval { coord: i });
        }
        grad.push((fp - fm) / (2.0 * eps));
    }
    Ok(grad)
}

/// Elementwise relative error, `max(|a|, |b|, 1e-8)` in the denominator.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

/// One scalar coordinate of the parameters touched by a sample; the
/// relation is fixed by the sample.
#[derive(Debug, Clone, Copy)]
enum Coord {
    Center(Role, usize, usize),
    Local(Role, usize, usize),
    Xform(Role, usize, usize),
}

fn touched_words(sample: &TrainingSample) -> (Vec<usize>, Vec<usize>) {
    let mut heads = BTreeSet::new();
    let mut tails = BTreeSet::new();
    for (t, _) in sample.tuples() {
        heads.insert(t.head);
        tails.insert(t.tail);
    }
    (heads.into_iter().collect(), tails.into_iter().collect())
}

fn touched_coords(params: &ModelParams<f64>, sample: &TrainingSample) -> Vec<Coord> {
    let (heads, tails) = touched_words(sample);
    let (d, s) = (params.d(), params.s());
    let mut coords = Vec::new();
    for (&role, words) in [(&Role::Head, &heads), (&Role::Tail, &tails)] {
        for &w in words {
            for j in 0..d {
                coords.push(Coord::Center(role, w, j));
            }
        }
        for &w in words {
            for i in 0..s {
                coords.push(Coord::Local(role, w, i));
            }
        }
        for i in 0..s {
            for j in 0..d {
                coords.push(Coord::Xform(role, i, j));
            }
        }
    }
    coords
}

fn read_coord(params: &ModelParams<f64>, r: usize, c: Coord) -> f64 {
    match c {
        Coord::Center(role, w, j) => params.center(role).row(w)[j],
        Coord::Local(role, w, i) => params.local(role, r).row(w)[i],
        Coord::Xform(role, i, j) => params.xform(role, r).row(i)[j],
    }
}

fn write_coord(params: &mut ModelParams<f64>, r: usize, c: Coord, v: f64) {
    match c {
        Coord::Center(role, w, j) => params.center_mut(role).row_mut(w)[j] = v,
        Coord::Local(role, w, i) => params.local_mut(role, r).row_mut(w)[i] = v,
        Coord::Xform(role, i, j) => params.xform_mut(role, r).row_mut(i)[j] = v,
    }
}

/// Analytic gradient of the sample loss over the touched coordinates, in
/// the same order as the internal coordinate list: per tuple, the error
/// signal is `sigmoid(f) - t_k`, and the chain rule routes it into the
/// centers directly, into locals through `X`, and into `X` through the
/// outer product with `u`.
fn analytic_grad(params: &ModelParams<f64>, sample: &TrainingSample, coords: &[Coord]) -> Result<Vec<f64>> {
    let r = sample.rel();
    let mut terms = Vec::new();
    for (t, target) in sample.tuples() {
        let vh = params.compose(t.head, Role::Head, r)?;
        let vt = params.compose(t.tail, Role::Tail, r)?;
        let e = sigmoid(dot(&vh, &vt)) - target;
        terms.push((t, e, vh, vt));
    }

    let grad_for = |c: Coord| -> f64 {
        let mut g = 0.0;
        for (t, e, vh, vt) in &terms {
            match c {
                Coord::Center(Role::Head, w, j) if t.head == w => g += e * vt[j],
                Coord::Center(Role::Tail, w, j) if t.tail == w => g += e * vh[j],
                Coord::Local(Role::Head, w, i) if t.head == w => {
                    g += e * dot(params.xform(Role::Head, r).row(i), vt);
                }
                Coord::Local(Role::Tail, w, i) if t.tail == w => {
                    g += e * dot(params.xform(Role::Tail, r).row(i), vh);
                }
                Coord::Xform(Role::Head, i, j) => {
                    g += e * params.local(Role::Head, r).row(t.head)[i] * vt[j];
                }
                Coord::Xform(Role::Tail, i, j) => {
                    g += e * params.local(Role::Tail, r).row(t.tail)[i] * vh[j];
                }
                _ => {}
            }
        }
        g
    };

    Ok(coords.iter().map(|&c| grad_for(c)).collect())
}

#[derive(Debug, Clone)]
pub struct GradCheck {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_rel_err: f64,
}

/// Compares the analytic gradient of the sample loss against central
/// finite differences over every touched coordinate of `c`, `u`, and `X`.
pub fn grad_check(params: &ModelParams<f64>, sample: &TrainingSample, eps: f64) -> Result<f64> {
    Ok(grad_check_detailed(params, sample, eps)?.max_rel_err)
}

pub fn grad_check_detailed(
    params: &ModelParams<f64>,
    sample: &TrainingSample,
    eps: f64,
) -> Result<GradCheck> {
    let r = sample.rel();
    let coords = touched_coords(params, sample);
    let analytic = analytic_grad(params, sample, &coords)?;
    let point: Vec<f64> = coords.iter().map(|&c| read_coord(params, r, c)).collect();
    let loss_at = |x: &[f64]| -> f64 {
        let mut p = params.clone();
        for (&c, &v) in coords.iter().zip(x) {
            write_coord(&mut p, r, c, v);
        }
        tuple_loss(&p, sample).expect("ids were validated").as_f64()
    };
    let numeric = numeric_grad(loss_at, &point, eps)?;
    let max_rel_err = max_relative_error(&analytic, &numeric);
    Ok(GradCheck {
        analytic,
        numeric,
        max_rel_err,
    })
}

/// Random small model plus sample for one gradient-check trial.
pub fn random_check_case(seed: u64) -> (ModelParams<f64>, TrainingSample) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(4..=8);
    let m = rng.random_range(1..=3);
    let d = rng.random_range(2..=8usize);
    let s = rng.random_range(1..=3.min(d));
    let mut params = ModelParams::<f64>::zeros(n, m, d, s, 100.0, 0.8).unwrap();
    for role in [Role::Head, Role::Tail] {
        for v in params.center_mut(role).values_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        for r in 0..m {
            for v in params.local_mut(role, r).values_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            for v in params.xform_mut(role, r).values_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
        }
    }
    let rel = rng.random_range(0..m);
    let head = rng.random_range(0..n);
    let tail = rng.random_range(0..n);
    let fake_head = (head + rng.random_range(1..n)) % n;
    let fake_tail = (tail + rng.random_range(1..n)) % n;
    let sample = TrainingSample {
        positive: Tuple { head, rel, tail },
        corrupt_head: Tuple { head: fake_head, rel, tail },
        corrupt_tail: Tuple { head, rel, tail: fake_tail },
    };
    (params, sample)
}

#[derive(Debug, Clone)]
pub struct GradSuiteReport {
    pub trials: u64,
    pub max_err: f64,
    pub worst_seed: u64,
    pub eps: f64,
}

/// Gradient suite over `trials` seeded random cases with tiny dimensions.
pub fn run_grad_suite(trials: u64, eps: f64) -> Result<GradSuiteReport> {
    let mut max_err = 0.0f64;
    let mut worst_seed = 0;
    for seed in 0..trials {
        let (params, sample) = random_check_case(seed);
        let err = grad_check(&params, &sample, eps)?;
        if err > max_err {
            max_err = err;
            worst_seed = seed;
        }
    }
    Ok(GradSuiteReport {
        trials,
        max_err,
        worst_seed,
        eps,
    })
}

#[derive(Debug, Clone)]
pub struct ProjectionSuiteReport {
    pub cases: u64,
    pub projected: u64,
    /// Largest `| ||X^T u|| - k*a |` right after a triggered projection.
    pub max_residual: f64,
}

/// Drift-projection exactness over random overflowing `(u, X)` pairs: a
/// triggered rescale must land the product norm at `k * a`.
pub fn run_projection_suite(cases: u64, seed: u64) -> Result<ProjectionSuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut projected = 0;
    let mut max_residual = 0.0f64;
    for _ in 0..cases {
        let d = rng.random_range(2..=16);
        let s = rng.random_range(1..=4.min(d));
        let a = rng.random_range(0.1..2.0);
        let k = rng.random_range(0.2..1.0);
        let mut m = ModelParams::<f64>::zeros(1, 1, d, s, a, k)?;
        for v in m.local_mut(Role::Head, 0).values_mut() {
            *v = rng.random_range(-2.0..2.0);
        }
        for v in m.xform_mut(Role::Head, 0).values_mut() {
            *v = rng.random_range(-2.0..2.0);
        }
        if m.project_drift(0, Role::Head, 0)? {
            projected += 1;
            let post = m.product_norm(0, Role::Head, 0)?;
            max_residual = max_residual.max((post - k * a).abs());
        }
    }
    Ok(ProjectionSuiteReport {
        cases,
        projected,
        max_residual,
    })
}

/// Specification of a planted-preference corpus: words come in groups, and
/// each relation has a head-group x tail-group compatibility matrix that
/// both drives tuple sampling and serves as the gold plausibility.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub groups: usize,
    pub words_per_group: usize,
    pub relations: Vec<String>,
    /// Per relation, a `groups x groups` matrix with entries in `[0, 1]`.
    pub compatibility: Vec<Vec<Vec<f64>>>,
    pub tuples_per_relation: usize,
    pub seed: u64,
}

impl SynthSpec {
    /// Graded compatibility: relation `k` assigns group pair `(i, j)` the
    /// level `[0.9, 0.6, 0.3, 0.05][(j - i + k) mod groups mod 4]`, a
    /// circulant pattern that gives every relation a distinct preference
    /// structure with balanced marginals.
    pub fn graded(
        groups: usize,
        words_per_group: usize,
        n_relations: usize,
        tuples_per_relation: usize,
        seed: u64,
    ) -> Self {
        const LEVELS: [f64; 4] = [0.9, 0.6, 0.3, 0.05];
        let compatibility = (0..n_relations)
            .map(|k| {
                (0..groups)
                    .map(|i| {
                        (0..groups)
                            .map(|j| LEVELS[((groups + j + k) - i) % groups % LEVELS.len()])
                            .collect()
                    })
                    .collect()
            })
            .collect();
        SynthSpec {
            groups,
            words_per_group,
            relations: (0..n_relations).map(|k| format!("rel{k}")).collect(),
            compatibility,
            tuples_per_relation,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups < 2 {
            return Err(Error::InvalidInput("need at least 2 groups".into()));
        }
        if self.words_per_group == 0 || self.relations.is_empty() || self.tuples_per_relation == 0 {
            return Err(Error::InvalidInput("empty synthetic specification".into()));
        }
        if self.compatibility.len() != self.relations.len() {
            return Err(Error::InvalidInput(
                "one compatibility matrix per relation required".into(),
            ));
        }
        for (k, matrix) in self.compatibility.iter().enumerate() {
            if matrix.len() != self.groups || matrix.iter().any(|row| row.len() != self.groups) {
                return Err(Error::InvalidInput(format!(
                    "compatibility matrix {k} is not {g}x{g}",
                    g = self.groups
                )));
            }
            let mut total = 0.0;
            for row in matrix {
                for &v in row {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::InvalidInput(format!(
                            "compatibility entries must lie in [0, 1], got {v}"
                        )));
                    }
                    total += v;
                }
            }
            if total == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "compatibility matrix {k} is all zero"
                )));
            }
        }
        Ok(())
    }

    pub fn word(&self, group: usize, idx: usize) -> String {
        format!("g{group}_w{idx}")
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub tuples: Vec<RawTuple>,
    /// Gold plausibility for every (head, relation, tail) combination.
    pub gold: Vec<SpRow>,
}

/// Draws tuples cell-by-cell proportionally to compatibility and pairs
/// them with the exact gold table. Deterministic under the configured seed.
pub fn synth_corpus(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut tuples = Vec::new();
    for (k, relation) in spec.relations.iter().enumerate() {
        let matrix = &spec.compatibility[k];
        let mut cum = Vec::with_capacity(spec.groups * spec.groups);
        let mut acc = 0.0;
        for row in matrix {
            for &v in row {
                acc += v;
                cum.push(acc);
            }
        }
        let total = acc;
        for _ in 0..spec.tuples_per_relation {
            let x: f64 = rng.random_range(0.0..total);
            let cell = cum.partition_point(|&c| c <= x).min(cum.len() - 1);
            let (gi, gj) = (cell / spec.groups, cell % spec.groups);
            let wh = rng.random_range(0..spec.words_per_group);
            let wt = rng.random_range(0..spec.words_per_group);
            tuples.push(RawTuple::new(
                &spec.word(gi, wh),
                relation,
                &spec.word(gj, wt),
                1,
            ));
        }
    }

    let mut gold = Vec::new();
    for (k, relation) in spec.relations.iter().enumerate() {
        for gi in 0..spec.groups {
            for gj in 0..spec.groups {
                let score = spec.compatibility[k][gi][gj];
                for wh in 0..spec.words_per_group {
                    for wt in 0..spec.words_per_group {
                        gold.push(SpRow {
                            head: spec.word(gi, wh),
                            relation: relation.clone(),
                            tail: spec.word(gj, wt),
                            gold: score,
                        });
                    }
                }
            }
        }
    }
    Ok(SynthCorpus { tuples, gold })
}
