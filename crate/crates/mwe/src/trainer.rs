//! Negative-sampling SGD over relation tuples.
//!
//! Each positive tuple is contrasted with a corrupted-head and a
//! corrupted-tail negative under a logistic loss. Center embeddings take
//! gradients weighted by `lambda`, local embeddings and transforms by
//! `1 - lambda`; the alternating schedule trains centers exclusively in
//! the first half of the run and relational parameters afterwards.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{NegativeSampler, Tuple, TupleCorpus};
use crate::error::{Error, Result};
use crate::model::{ModelParams, Role};
use crate::num::{dot, Scalar};
use crate::vocab::RelationRegistry;

pub const LR_FLOOR: f64 = 1e-4;
const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode {
    /// 1 for the first half of the epochs, 0 afterwards.
    Alternating,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub dim: usize,
    pub local_dim: usize,
    /// Maximum semantic drifting range `a`.
    pub drift: f64,
    /// Rescale target `k`: a triggered projection lands at `k * a`.
    pub scale_k: f64,
    pub eta0: f64,
    pub epochs: usize,
    pub lambda: LambdaMode,
    pub seed: u64,
    pub workers: usize,
    /// Exponent on the slot marginals for negative sampling; 0 = uniform.
    pub negative_exponent: f64,
    /// Rescale only the local vector on drift overflow, leaving `X` alone.
    pub project_u_only: bool,
    /// Cap on how many times one record is visited per epoch.
    pub count_cap: Option<u64>,
    /// Per-epoch progress lines on standard error.
    pub verbose: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 300,
            local_dim: 10,
            drift: 1.0,
            scale_k: 0.8,
            eta0: 0.025,
            epochs: 5,
            lambda: LambdaMode::Alternating,
            seed: 42,
            workers: 1,
            negative_exponent: 0.75,
            project_u_only: false,
            count_cap: None,
            verbose: false,
        }
    }
}

impl TrainConfig {
    /// Desk-scale preset used by tests and quick experiments.
    pub fn desk() -> Self {
        TrainConfig {
            dim: 32,
            local_dim: 4,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.into()));
        if self.dim == 0 || self.local_dim == 0 {
            return bad("dimensions must be positive");
        }
        if self.local_dim > self.dim {
            return bad("local dimension must not exceed the center dimension");
        }
        if self.drift.is_nan() || self.drift <= 0.0 {
            return bad("drift range must be positive");
        }
        if self.scale_k.is_nan() || self.scale_k <= 0.0 || self.scale_k > 1.0 {
            return bad("scaling parameter must lie in (0, 1]");
        }
        if self.eta0.is_nan() || self.eta0 <= 0.0 {
            return bad("initial learning rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epoch count must be positive");
        }
        if self.workers == 0 {
            return bad("worker count must be positive");
        }
        if let LambdaMode::Fixed(x) = self.lambda {
            if !(0.0..=1.0).contains(&x) {
                return bad("fixed lambda must lie in [0, 1]");
            }
        }
        if self.count_cap == Some(0) {
            return bad("count cap must be positive");
        }
        Ok(())
    }
}

/// One positive tuple with its two corruptions; targets are 1 for the
/// positive and 0 for both negatives.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSample {
    pub positive: Tuple,
    pub corrupt_head: Tuple,
    pub corrupt_tail: Tuple,
}

impl TrainingSample {
    pub fn rel(&self) -> usize {
        self.positive.rel
    }

    pub fn tuples(&self) -> [(Tuple, f64); 3] {
        [
            (self.positive, 1.0),
            (self.corrupt_head, 0.0),
            (self.corrupt_tail, 0.0),
        ]
    }
}

pub fn sigmoid<F: Scalar>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// Cross-entropy of the sample: `-log s(f_p) - log s(-f_n1) - log s(-f_n2)`.
/// Log arguments are clamped below at 1e-12.
pub fn tuple_loss<F: Scalar>(params: &ModelParams<F>, sample: &TrainingSample) -> Result<F> {
    let (loss, _) = tuple_loss_counting(params, sample)?;
    Ok(loss)
}

pub(crate) fn tuple_loss_counting<F: Scalar>(
    params: &ModelParams<F>,
    sample: &TrainingSample,
) -> Result<(F, u64)> {
    let mut loss = F::zero();
    let mut clamps = 0;
    for (t, target) in sample.tuples() {
        let f = params.score(t.head, t.rel, t.tail)?;
        let (term, clamped) = loss_term(f, target);
        loss += term;
        clamps += clamped as u64;
    }
    Ok((loss, clamps))
}

fn loss_term<F: Scalar>(score: F, target: f64) -> (F, bool) {
    let signed = if target > 0.5 { score } else { -score };
    let p = sigmoid(signed);
    let floor = F::of(LOG_CLAMP);
    if p < floor {
        (-floor.ln(), true)
    } else {
        (-p.ln(), false)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub loss: f64,
    pub clamp_events: u64,
    pub projections: u64,
    pub max_projection_residual: f64,
}

impl StepStats {
    fn absorb(&mut self, other: &StepStats) {
        self.loss += other.loss;
        self.clamp_events += other.clamp_events;
        self.projections += other.projections;
        self.max_projection_residual = self.max_projection_residual.max(other.max_projection_residual);
    }
}

struct Scratch<F> {
    vh: Vec<F>,
    vt: Vec<F>,
    xv: Vec<F>,
}

impl<F: Scalar> Scratch<F> {
    fn new(d: usize) -> Self {
        Scratch {
            vh: vec![F::zero(); d],
            vt: vec![F::zero(); d],
            xv: Vec::new(),
        }
    }
}

/// One SGD step over a sample: for each of the three tuples the composed
/// embeddings are snapshot once, the six updates run against that
/// snapshot, and the touched `(u, X)` pairs are drift-projected.
pub fn sgd_step<F: Scalar>(
    params: &mut ModelParams<F>,
    sample: &TrainingSample,
    lambda: f64,
    eta: f64,
    project_u_only: bool,
) -> Result<StepStats> {
    let mut scratch = Scratch::new(params.d());
    sgd_step_scratch(params, sample, lambda, eta, project_u_only, &mut scratch)
}

fn sgd_step_scratch<F: Scalar>(
    params: &mut ModelParams<F>,
    sample: &TrainingSample,
    lambda: f64,
    eta: f64,
    project_u_only: bool,
    scratch: &mut Scratch<F>,
) -> Result<StepStats> {
    let mut stats = StepStats::default();
    let r = sample.rel();
    let lam = F::of(lambda);
    let eta_f = F::of(eta);
    let ka = (params.scale_k() * params.drift()).as_f64();

    for (t, target) in sample.tuples() {
        params.check_ids(t.head, t.rel)?;
        params.check_ids(t.tail, t.rel)?;
        params.compose_into(t.head, Role::Head, r, &mut scratch.vh);
        params.compose_into(t.tail, Role::Tail, r, &mut scratch.vt);
        let f = dot(&scratch.vh, &scratch.vt);
        if !f.is_finite() {
            return Err(Error::NonFinite {
                what: "score",
                head: t.head,
                rel: t.rel,
                tail: t.tail,
            });
        }
        let e = sigmoid(f) - F::of(target);
        let (term, clamped) = loss_term(f, target);
        stats.loss += term.as_f64();
        stats.clamp_events += clamped as u64;

        if lambda > 0.0 {
            let le = lam * eta_f * e;
            for (c, &v) in params.center_mut(Role::Head).row_mut(t.head).iter_mut().zip(&scratch.vt) {
                *c -= le * v;
            }
            for (c, &v) in params.center_mut(Role::Tail).row_mut(t.tail).iter_mut().zip(&scratch.vh) {
                *c -= le * v;
            }
        }
        if lambda < 1.0 {
            let g = (F::one() - lam) * eta_f * e;
            relational_update(params, t.head, Role::Head, r, g, &scratch.vt, &mut scratch.xv);
            relational_update(params, t.tail, Role::Tail, r, g, &scratch.vh, &mut scratch.xv);
            for (w, role) in [(t.head, Role::Head), (t.tail, Role::Tail)] {
                let projected = if project_u_only {
                    params.project_drift_u_only(w, role, r)?
                } else {
                    params.project_drift(w, role, r)?
                };
                if projected {
                    stats.projections += 1;
                    let post = params.product_norm(w, role, r)?.as_f64();
                    stats.max_projection_residual =
                        stats.max_projection_residual.max((post - ka).abs());
                }
            }
        }
    }
    Ok(stats)
}

/// Applies the local/transform updates for one side of a tuple, reading
/// the pre-update `X` (for the local gradient) and pre-update `u` (for the
/// transform gradient).
fn relational_update<F: Scalar>(
    params: &mut ModelParams<F>,
    w: usize,
    role: Role,
    r: usize,
    g: F,
    v_other: &[F],
    xv: &mut Vec<F>,
) {
    let s = params.s();
    let (local, xform) = params.local_and_xform_mut(role, r);

    xv.clear();
    for i in 0..s {
        xv.push(dot(xform.row(i), v_other));
    }

    let u = local.row(w);
    for (i, &ui) in u.iter().enumerate() {
        let gu = g * ui;
        if gu == F::zero() {
            continue;
        }
        for (x, &vj) in xform.row_mut(i).iter_mut().zip(v_other) {
            *x -= gu * vj;
        }
    }

    for (ui, &xvi) in local.row_mut(w).iter_mut().zip(xv.iter()) {
        *ui -= g * xvi;
    }
}

/// Alternating schedule: 1 while `epoch <= ceil(total/2)`, 0 afterwards.
/// Fixed mode returns the configured constant. `epoch` is 1-based.
pub fn lambda_at(mode: LambdaMode, epoch: usize, total_epochs: usize) -> f64 {
    match mode {
        LambdaMode::Fixed(x) => x,
        LambdaMode::Alternating => {
            if epoch <= total_epochs.div_ceil(2) {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Linear decay with a floor: `eta0 * max(1e-4, 1 - progress)`.
pub fn lr_at(progress: f64, eta0: f64) -> f64 {
    eta0 * (1.0 - progress).max(LR_FLOOR)
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub lambda: f64,
    pub eta_start: f64,
    pub eta_end: f64,
    pub mean_loss: f64,
    pub visits: u64,
    pub clamp_events: u64,
    pub projections: u64,
    pub sweep_projections: u64,
    pub max_projection_residual: f64,
    /// Largest `||X^T u||` over all (word, role, relation) at epoch end.
    pub max_product_norm: f64,
    pub center_checksum: u64,
    pub relational_checksum: u64,
    /// Wall-clock seconds; stderr progress only, excluded from serialized
    /// reports so identical runs emit identical text.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub initial_center_checksum: u64,
    pub initial_relational_checksum: u64,
    pub visits_per_epoch: u64,
    pub epochs: Vec<EpochReport>,
}

/// Epoch ranges (1-based, inclusive) sharing one learning-rate phase; the
/// rate resets at the lambda switch because the second phase trains fresh
/// parameters.
fn phases(mode: LambdaMode, epochs: usize) -> Vec<(usize, usize)> {
    match mode {
        LambdaMode::Alternating if epochs > 1 => {
            let half = epochs.div_ceil(2);
            vec![(1, half), (half + 1, epochs)]
        }
        _ => vec![(1, epochs)],
    }
}

fn phase_of(phases: &[(usize, usize)], epoch: usize) -> (usize, usize) {
    *phases
        .iter()
        .find(|&&(lo, hi)| epoch >= lo && epoch <= hi)
        .expect("epoch must fall in a phase")
}

/// Trains a fresh model on the corpus. Deterministic for `workers == 1`:
/// the same seed yields bitwise-identical parameters.
pub fn train<F: Scalar>(
    corpus: &TupleCorpus,
    rels: &RelationRegistry,
    config: &TrainConfig,
) -> Result<(ModelParams<F>, TrainReport)> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let sampler = NegativeSampler::from_corpus(corpus, rels, config.negative_exponent);
    for r in 0..corpus.n_relations() {
        if corpus.rel_range(r).is_empty() {
            continue;
        }
        for slot in [Role::Head, Role::Tail] {
            if sampler.support(r, slot).len() < 2 {
                return Err(Error::SingletonSupport {
                    relation: rels.name(r).unwrap_or("?").to_string(),
                    slot,
                });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ModelParams::<F>::init(
        corpus.n_words(),
        corpus.n_relations(),
        config.dim,
        config.local_dim,
        F::of(config.drift),
        F::of(config.scale_k),
        &mut rng,
    )?;

    let mut visits: Vec<u32> = Vec::new();
    let cap = config.count_cap.unwrap_or(u64::MAX);
    for (i, rec) in corpus.records().iter().enumerate() {
        for _ in 0..rec.count.min(cap) {
            visits.push(i as u32);
        }
    }
    let visits_per_epoch = visits.len() as u64;

    let phase_list = phases(config.lambda, config.epochs);
    let mut report = TrainReport {
        initial_center_checksum: params.center_checksum(),
        initial_relational_checksum: params.relational_checksum(),
        visits_per_epoch,
        epochs: Vec::with_capacity(config.epochs),
    };

    for epoch in 1..=config.epochs {
        let start = Instant::now();
        let lambda = lambda_at(config.lambda, epoch, config.epochs);
        let (phase_lo, phase_hi) = phase_of(&phase_list, epoch);
        let phase_total = (phase_hi - phase_lo + 1) as u64 * visits_per_epoch;
        let done_before = (epoch - phase_lo) as u64 * visits_per_epoch;

        visits.shuffle(&mut rng);

        let eta_start = lr_at(done_before as f64 / phase_total as f64, config.eta0);
        let eta_end = lr_at((done_before + visits_per_epoch.saturating_sub(1)) as f64 / phase_total as f64, config.eta0);

        let mut epoch_stats = StepStats::default();
        if config.workers <= 1 {
            let mut scratch = Scratch::new(config.dim);
            for (v, &rec_idx) in visits.iter().enumerate() {
                let progress = (done_before + v as u64) as f64 / phase_total as f64;
                let eta = lr_at(progress, config.eta0);
                let positive = corpus.records()[rec_idx as usize].tuple;
                let (corrupt_head, corrupt_tail) = sampler.sample_negatives(positive, &mut rng)?;
                let sample = TrainingSample { positive, corrupt_head, corrupt_tail };
                let stats = sgd_step_scratch(
                    &mut params,
                    &sample,
                    lambda,
                    eta,
                    config.project_u_only,
                    &mut scratch,
                )?;
                epoch_stats.absorb(&stats);
            }
        } else {
            epoch_stats = parallel_epoch(
                &mut params,
                corpus,
                &sampler,
                &visits,
                config,
                lambda,
                epoch,
                done_before,
                phase_total,
            )?;
        }

        // The per-tuple projection only covers the pair that was just
        // updated; a transform update can push other words of the same
        // relation past the bound, so sweep everything at epoch end.
        let mut sweep_projections = 0u64;
        let mut max_product_norm = 0.0f64;
        let ka = config.scale_k * config.drift;
        for r in 0..params.m() {
            for role in [Role::Head, Role::Tail] {
                for w in 0..params.n() {
                    let projected = if config.project_u_only {
                        params.project_drift_u_only(w, role, r)?
                    } else {
                        params.project_drift(w, role, r)?
                    };
                    let norm = params.product_norm(w, role, r)?.as_f64();
                    max_product_norm = max_product_norm.max(norm);
                    if projected {
                        sweep_projections += 1;
                        epoch_stats.max_projection_residual =
                            epoch_stats.max_projection_residual.max((norm - ka).abs());
                    }
                }
            }
        }

        let seconds = start.elapsed().as_secs_f64();
        let epoch_report = EpochReport {
            epoch,
            lambda,
            eta_start,
            eta_end,
            mean_loss: epoch_stats.loss / visits_per_epoch as f64,
            visits: visits_per_epoch,
            clamp_events: epoch_stats.clamp_events,
            projections: epoch_stats.projections,
            sweep_projections,
            max_projection_residual: epoch_stats.max_projection_residual,
            max_product_norm,
            center_checksum: params.center_checksum(),
            relational_checksum: params.relational_checksum(),
            seconds,
        };
        if config.verbose {
            eprintln!(
                "epoch {}/{} lambda={} eta={:.6} mean_loss={:.6} tuples/s={:.0}",
                epoch,
                config.epochs,
                lambda,
                eta_start,
                epoch_report.mean_loss,
                visits_per_epoch as f64 / seconds.max(1e-9),
            );
        }
        report.epochs.push(epoch_report);
    }

    Ok((params, report))
}

/// Shared-parameter pointer for the lock-free parallel mode. Workers write
/// whole scalars without synchronization; colliding updates may be lost,
/// which the SGD tolerates, but individual stores are never torn wider
/// than one scalar.
struct SharedModel<F>(*mut ModelParams<F>);

unsafe impl<F: Send> Sync for SharedModel<F> {}

#[allow(clippy::too_many_arguments)]
fn parallel_epoch<F: Scalar>(
    params: &mut ModelParams<F>,
    corpus: &TupleCorpus,
    sampler: &NegativeSampler,
    visits: &[u32],
    config: &TrainConfig,
    lambda: f64,
    epoch: usize,
    done_before: u64,
    phase_total: u64,
) -> Result<StepStats> {
    use std::sync::atomic::{AtomicU64, Ordering};

    let shared = SharedModel(params as *mut ModelParams<F>);
    let shared = &shared;
    let counter = AtomicU64::new(done_before);
    let chunk = visits.len().div_ceil(config.workers);
    let results: Vec<Result<StepStats>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (worker, slice) in visits.chunks(chunk.max(1)).enumerate() {
            let counter = &counter;
            let handle = scope.spawn(move || -> Result<StepStats> {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    config.seed ^ ((epoch as u64) << 32) ^ (0x9e37_79b9 * (worker as u64 + 1)),
                );
                let mut scratch = Scratch::new(config.dim);
                let mut stats = StepStats::default();
                for &rec_idx in slice {
                    let step = counter.fetch_add(1, Ordering::Relaxed);
                    let eta = lr_at(step as f64 / phase_total as f64, config.eta0);
                    let positive = corpus.records()[rec_idx as usize].tuple;
                    let (corrupt_head, corrupt_tail) = sampler.sample_negatives(positive, &mut rng)?;
                    let sample = TrainingSample { positive, corrupt_head, corrupt_tail };
                    // Races between workers may drop updates; scalar writes stay intact.
                    let model = unsafe { &mut *shared.0 };
                    let s = sgd_step_scratch(model, &sample, lambda, eta, config.project_u_only, &mut scratch)?;
                    stats.absorb(&s);
                }
                Ok(stats)
            });
            handles.push(handle);
        }
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });

    let mut total = StepStats::default();
    for r in results {
        total.absorb(&r?);
    }
    Ok(total)
}
