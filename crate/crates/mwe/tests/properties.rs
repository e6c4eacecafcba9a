//! Property tests for the library's core invariants.

use proptest::prelude::*;

use mwe::corpus::{encode_corpus, NegativeSampler, RawTuple};
use mwe::eval::spearman;
use mwe::model::{ModelParams, Role};
use mwe::num::{dot, norm2};
use mwe::oracle::{synth_corpus, SynthSpec};
use mwe::trainer::{train, LambdaMode, TrainConfig};
use mwe::vocab::build_vocab;

fn finite_vec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, len)
}

proptest! {
    #[test]
    fn spearman_invariant_under_increasing_transform(
        xs in finite_vec(2..40),
        ys_seed in finite_vec(2..40),
        scale in 0.1..10.0f64,
        shift in -100.0..100.0f64,
    ) {
        let n = xs.len().min(ys_seed.len());
        let xs = &xs[..n];
        let ys = &ys_seed[..n];
        if let Ok(base) = spearman(xs, ys) {
            // strictly increasing map: y -> scale * y + shift, then cube on top
            let mapped: Vec<f64> = ys.iter().map(|&y| {
                let z = scale * y + shift;
                z + z.powi(3) * 1e-6
            }).collect();
            let got = spearman(xs, &mapped).unwrap();
            prop_assert!((got - base).abs() < 1e-9, "{got} vs {base}");
        }
    }

    #[test]
    fn spearman_is_symmetric(xs in finite_vec(2..40), ys_seed in finite_vec(2..40)) {
        let n = xs.len().min(ys_seed.len());
        let xs = &xs[..n];
        let ys = &ys_seed[..n];
        let fwd = spearman(xs, ys);
        let rev = spearman(ys, xs);
        match (fwd, rev) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "asymmetric outcome: {other:?}"),
        }
    }

    #[test]
    fn projection_caps_drift_at_scaled_bound(
        u in prop::collection::vec(-3.0..3.0f64, 1..4),
        x_vals in prop::collection::vec(-3.0..3.0f64, 4..64),
        a in 0.05..2.0f64,
        k in 0.1..1.0f64,
    ) {
        let s = u.len();
        let d = (x_vals.len() / s).max(s).min(16);
        let mut params = ModelParams::<f64>::zeros(1, 1, d, s, a, k).unwrap();
        for (i, v) in params.local_mut(Role::Head, 0).row_mut(0).iter_mut().enumerate() {
            *v = u[i];
        }
        for (i, v) in params.xform_mut(Role::Head, 0).values_mut().iter_mut().enumerate() {
            *v = x_vals[i % x_vals.len()];
        }
        let before = params.product_norm(0, Role::Head, 0).unwrap();
        let projected = params.project_drift(0, Role::Head, 0).unwrap();
        let after = params.product_norm(0, Role::Head, 0).unwrap();
        prop_assert!(after <= a + 1e-12);
        if projected {
            prop_assert!(before > a);
            prop_assert!((after - k * a).abs() <= 1e-9, "residual {}", (after - k * a).abs());
        } else {
            prop_assert_eq!(before, after);
        }
    }

    #[test]
    fn composed_embedding_stays_within_drift_of_center(
        u in prop::collection::vec(-3.0..3.0f64, 2..4),
        seed in 0u64..1000,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let s = u.len();
        let d = 8;
        let a = 0.7;
        let mut params = ModelParams::<f64>::init(3, 2, d, s, a, 0.8, &mut rng).unwrap();
        for r in 0..2 {
            for w in 0..3 {
                for (i, v) in params.local_mut(Role::Tail, r).row_mut(w).iter_mut().enumerate() {
                    *v = u[i] * rng.random_range(0.5..1.5);
                }
                params.project_drift(w, Role::Tail, r).unwrap();
            }
        }
        for r in 0..2 {
            for w in 0..3 {
                let composed = params.compose(w, Role::Tail, r).unwrap();
                let center = params.center(Role::Tail).row(w);
                let diff: Vec<f64> = composed.iter().zip(center).map(|(c, v)| c - v).collect();
                prop_assert!(norm2(&diff) <= a + 1e-12);
            }
        }
    }

    #[test]
    fn score_matches_scalar_loop_oracle(seed in 0u64..500) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (n, m, d, s) = (4, 2, 5, 2);
        let mut params = ModelParams::<f64>::init(n, m, d, s, 10.0, 0.8, &mut rng).unwrap();
        for role in [Role::Head, Role::Tail] {
            for r in 0..m {
                for v in params.local_mut(role, r).values_mut() {
                    *v = rng.random_range(-0.5..0.5);
                }
            }
        }
        let (h, t, r) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..m));

        // scalar-loop oracle with bare index arithmetic
        let compose_oracle = |w: usize, role: Role| -> Vec<f64> {
            let mut v: Vec<f64> = params.center(role).row(w).to_vec();
            for j in 0..d {
                for i in 0..s {
                    v[j] += params.xform(role, r).row(i)[j] * params.local(role, r).row(w)[i];
                }
            }
            v
        };
        let vh = compose_oracle(h, Role::Head);
        let vt = compose_oracle(t, Role::Tail);
        let expect: f64 = (0..d).map(|j| vh[j] * vt[j]).sum();

        let got = params.score(h, r, t).unwrap();
        prop_assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        prop_assert!((dot(&params.compose(h, Role::Head, r).unwrap(), &params.compose(t, Role::Tail, r).unwrap()) - got).abs() == 0.0);
    }

    #[test]
    fn plausibility_invariant_under_positive_rescaling(seed in 0u64..200, alpha in 0.01..50.0f64) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut params = ModelParams::<f64>::init(2, 1, 4, 1, 10.0, 0.8, &mut rng).unwrap();
        for v in params.center_mut(Role::Head).values_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        for v in params.center_mut(Role::Tail).values_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let base = params.plausibility(0, 0, 1).unwrap();
        for v in params.center_mut(Role::Head).row_mut(0) {
            *v *= alpha;
        }
        let scaled = params.plausibility(0, 0, 1).unwrap();
        prop_assert!((base - scaled).abs() < 1e-9, "{base} vs {scaled}");
    }

    #[test]
    fn vocabulary_recount_and_determinism(
        pairs in prop::collection::vec((0u8..12, 0u8..12, 0u8..3, 1u64..5), 0..60),
        min_count in 0u64..6,
    ) {
        let raw: Vec<RawTuple> = pairs
            .iter()
            .map(|&(h, t, r, c)| RawTuple::new(&format!("w{h}"), &format!("r{r}"), &format!("w{t}"), c))
            .collect();
        let (vocab, rels) = build_vocab(&raw, min_count);
        let (vocab2, rels2) = build_vocab(&raw, min_count);
        prop_assert_eq!(&vocab, &vocab2);
        prop_assert_eq!(&rels, &rels2);

        for id in 0..vocab.n() {
            let w = vocab.word(id).unwrap();
            let expect: u64 = raw
                .iter()
                .map(|t| {
                    let mut c = 0;
                    if t.head == w { c += t.count; }
                    if t.tail == w { c += t.count; }
                    c
                })
                .sum();
            prop_assert_eq!(vocab.freq(id), expect);
            prop_assert!(expect >= min_count);
        }
        // no qualifying word was dropped
        let mut counts = std::collections::HashMap::new();
        for t in &raw {
            *counts.entry(t.head.clone()).or_insert(0u64) += t.count;
            *counts.entry(t.tail.clone()).or_insert(0u64) += t.count;
        }
        for (w, c) in counts {
            prop_assert_eq!(vocab.id(&w).is_some(), c >= min_count, "word {}", w);
        }
    }

    #[test]
    fn corpus_marginals_match_brute_force(
        pairs in prop::collection::vec((0u8..8, 0u8..8, 0u8..2, 1u64..4), 1..40),
    ) {
        let raw: Vec<RawTuple> = pairs
            .iter()
            .map(|&(h, t, r, c)| RawTuple::new(&format!("w{h}"), &format!("r{r}"), &format!("w{t}"), c))
            .collect();
        let (vocab, rels) = build_vocab(&raw, 0);
        let corpus = encode_corpus(&raw, &vocab, &rels).unwrap();
        for r in 0..rels.m() {
            for w in 0..vocab.n() {
                for (slot, pick) in [(Role::Head, 0), (Role::Tail, 1)] {
                    let expect: u64 = raw
                        .iter()
                        .filter(|t| {
                            rels.id(&t.relation) == Some(r)
                                && vocab.id(if pick == 0 { &t.head } else { &t.tail }) == Some(w)
                        })
                        .map(|t| t.count)
                        .sum();
                    prop_assert_eq!(corpus.marginal(r, slot)[w], expect);
                }
            }
        }
    }
}

/// Empirical corruption frequencies over many draws stay within three
/// standard errors of the configured distribution (renormalized over the
/// support minus the word being replaced).
#[test]
fn negative_sampling_matches_configured_distribution() {
    use rand::SeedableRng;

    let raw = vec![
        RawTuple::new("a", "r", "x", 40),
        RawTuple::new("b", "r", "x", 10),
        RawTuple::new("c", "r", "x", 4),
        RawTuple::new("d", "r", "x", 1),
        RawTuple::new("a", "r", "y", 5),
    ];
    let (vocab, rels) = build_vocab(&raw, 0);
    let corpus = encode_corpus(&raw, &vocab, &rels).unwrap();

    for exponent in [0.75, 0.0] {
        let sampler = NegativeSampler::from_corpus(&corpus, &rels, exponent);
        let positive = corpus.records()[0].tuple;
        let original = positive.head;

        let n = 200_000usize;
        let mut counts = std::collections::HashMap::new();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8080);
        for _ in 0..n {
            let (corrupt_head, _) = sampler.sample_negatives(positive, &mut rng).unwrap();
            *counts.entry(corrupt_head.head).or_insert(0u64) += 1;
        }

        let denom: f64 = sampler
            .support(0, Role::Head)
            .iter()
            .filter(|&&w| w != original)
            .map(|&w| sampler.probability(0, Role::Head, w))
            .sum();
        for &w in sampler.support(0, Role::Head) {
            if w == original {
                assert!(!counts.contains_key(&w), "original head must never be drawn");
                continue;
            }
            let p = sampler.probability(0, Role::Head, w) / denom;
            let expect = n as f64 * p;
            let se = (n as f64 * p * (1.0 - p)).sqrt();
            let observed = *counts.get(&w).unwrap_or(&0) as f64;
            assert!(
                (observed - expect).abs() <= 3.0 * se,
                "exponent {exponent}, word {w}: observed {observed}, expected {expect} (se {se})"
            );
        }
    }
}

/// Mean epoch loss does not increase across the first three center-phase
/// epochs, averaged over five seeds.
#[test]
fn center_phase_loss_is_non_increasing() {
    let spec = SynthSpec::graded(4, 20, 2, 10_000, 55);
    let synth = synth_corpus(&spec).unwrap();
    let (vocab, rels) = build_vocab(&synth.tuples, 1);
    let corpus = encode_corpus(&synth.tuples, &vocab, &rels).unwrap();

    let mut sums = [0.0f64; 3];
    for seed in 1..=5u64 {
        let cfg = TrainConfig {
            dim: 16,
            local_dim: 2,
            epochs: 6,
            eta0: 0.0625,
            lambda: LambdaMode::Alternating,
            seed,
            ..TrainConfig::default()
        };
        let (_, report) = train::<f64>(&corpus, &rels, &cfg).unwrap();
        for (i, sum) in sums.iter_mut().enumerate() {
            assert_eq!(report.epochs[i].lambda, 1.0);
            *sum += report.epochs[i].mean_loss;
        }
    }
    assert!(
        sums[0] >= sums[1] && sums[1] >= sums[2],
        "mean center-phase loss increased: {:?}",
        sums.map(|s| s / 5.0)
    );
}

/// Every (word, role, relation) respects the drift bound after each epoch,
/// exercised with both projection modes.
#[test]
fn drift_bound_holds_after_every_epoch_in_both_modes() {
    let spec = SynthSpec::graded(3, 10, 2, 4_000, 77);
    let synth = synth_corpus(&spec).unwrap();
    let (vocab, rels) = build_vocab(&synth.tuples, 1);
    let corpus = encode_corpus(&synth.tuples, &vocab, &rels).unwrap();

    for project_u_only in [false, true] {
        let cfg = TrainConfig {
            dim: 12,
            local_dim: 3,
            drift: 0.05,
            epochs: 4,
            eta0: 0.1,
            lambda: LambdaMode::Fixed(0.3),
            seed: 5,
            project_u_only,
            ..TrainConfig::default()
        };
        let (params, report) = train::<f64>(&corpus, &rels, &cfg).unwrap();
        for e in &report.epochs {
            assert!(
                e.max_product_norm <= cfg.drift,
                "u-only={project_u_only} epoch {}: {} > {}",
                e.epoch,
                e.max_product_norm,
                cfg.drift
            );
        }
        for r in 0..params.m() {
            for role in [Role::Head, Role::Tail] {
                for w in 0..params.n() {
                    assert!(params.product_norm(w, role, r).unwrap() <= cfg.drift);
                }
            }
        }
        let projected: u64 = report.epochs.iter().map(|e| e.projections + e.sweep_projections).sum();
        assert!(projected > 0, "tight bound should trigger projections");
    }
}
