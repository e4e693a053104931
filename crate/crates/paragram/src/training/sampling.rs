//! Negative-example selection within a mini-batch.
//!
//! For each pair and each side, candidates are the phrases of the other
//! batch pairs, minus the pair's own phrases and any constraint-forbidden
//! surface. MAX takes the most similar candidate under the current
//! parameters, RAND a uniform one, MIX flips a fair coin between the two,
//! and LEAST takes the least similar candidate that still violates the
//! margin, falling back to MAX when none does.

use ndarray::Array1;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::constraints::ConstraintIndex;
use super::{similarity_value, Hyperparameters, NegativePool, Sampler};
use crate::error::{Error, Result};

/// Which side of a pair a candidate comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// A phrase in the batch, addressed by pair index and side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateRef {
    pub pair: usize,
    pub side: Side,
}

/// The selected negatives `<t1, t2>` of one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NegativePair {
    pub t1: CandidateRef,
    pub t2: CandidateRef,
}

/// A phrase embedded under the current parameters, with its surface form
/// for exclusion checks.
#[derive(Debug, Clone)]
pub struct EmbeddedPhrase {
    pub surface: String,
    pub vector: Array1<f64>,
}

/// Both sides of a pair in embedded form.
#[derive(Debug, Clone)]
pub struct EmbeddedPair {
    pub x1: EmbeddedPhrase,
    pub x2: EmbeddedPhrase,
}

impl EmbeddedPair {
    fn side(&self, side: Side) -> &EmbeddedPhrase {
        match side {
            Side::First => &self.x1,
            Side::Second => &self.x2,
        }
    }
}

fn candidates(
    pairs: &[EmbeddedPair],
    i: usize,
    slot: Side,
    hp: &Hyperparameters,
    constraints: Option<&ConstraintIndex>,
) -> Vec<CandidateRef> {
    let anchor = pairs[i].side(slot);
    let own1 = &pairs[i].x1.surface;
    let own2 = &pairs[i].x2.surface;
    let sides: &[Side] = match hp.neg_pool {
        NegativePool::First => std::slice::from_ref(match slot {
            Side::First => &Side::First,
            Side::Second => &Side::Second,
        }),
        NegativePool::Both => &[Side::First, Side::Second],
    };
    let mut out = Vec::new();
    for (j, pair) in pairs.iter().enumerate() {
        if j == i {
            continue;
        }
        for &side in sides {
            let cand = pair.side(side);
            if cand.surface == *own1 || cand.surface == *own2 {
                continue;
            }
            if let Some(index) = constraints {
                if index.is_forbidden(&anchor.surface, &cand.surface) {
                    continue;
                }
            }
            out.push(CandidateRef { pair: j, side });
        }
    }
    out
}

fn pick_max(
    pairs: &[EmbeddedPair],
    anchor: &EmbeddedPhrase,
    cands: &[CandidateRef],
    hp: &Hyperparameters,
) -> CandidateRef {
    let mut best = cands[0];
    let mut best_sim = f64::NEG_INFINITY;
    for &c in cands {
        let s = similarity_value(
            hp.similarity,
            anchor.vector.view(),
            pairs[c.pair].side(c.side).vector.view(),
        );
        if s > best_sim {
            best_sim = s;
            best = c;
        }
    }
    best
}

fn pick_least(
    pairs: &[EmbeddedPair],
    anchor: &EmbeddedPhrase,
    pair_sim: f64,
    cands: &[CandidateRef],
    hp: &Hyperparameters,
) -> CandidateRef {
    // least similar candidate that would still trigger an update
    let threshold = pair_sim - hp.delta;
    let mut best: Option<(CandidateRef, f64)> = None;
    for &c in cands {
        let s = similarity_value(
            hp.similarity,
            anchor.vector.view(),
            pairs[c.pair].side(c.side).vector.view(),
        );
        if s > threshold && best.is_none_or(|(_, bs)| s < bs) {
            best = Some((c, s));
        }
    }
    match best {
        Some((c, _)) => c,
        None => pick_max(pairs, anchor, cands, hp),
    }
}

/// Choose `<t1, t2>` for every pair of an embedded batch. The candidate
/// walk order is fixed (pair index ascending, first side before second),
/// so similarity ties resolve to the lowest batch index.
pub fn select_negatives(
    pairs: &[EmbeddedPair],
    hp: &Hyperparameters,
    constraints: Option<&ConstraintIndex>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<NegativePair>> {
    if pairs.len() < 2 {
        return Err(Error::invalid("negative sampling needs a batch of at least 2 pairs"));
    }
    let mut out = Vec::with_capacity(pairs.len());
    for i in 0..pairs.len() {
        let mut slots = [None, None];
        for (k, slot) in [Side::First, Side::Second].into_iter().enumerate() {
            let cands = candidates(pairs, i, slot, hp, constraints);
            if cands.is_empty() {
                return Err(Error::EmptyCandidateSet { pair: i });
            }
            let anchor = pairs[i].side(slot);
            let choice = match hp.sampler {
                Sampler::Max => pick_max(pairs, anchor, &cands, hp),
                Sampler::Rand => cands[rng.gen_range(0..cands.len())],
                Sampler::Mix => {
                    if rng.gen_bool(0.5) {
                        pick_max(pairs, anchor, &cands, hp)
                    } else {
                        cands[rng.gen_range(0..cands.len())]
                    }
                }
                Sampler::Least => {
                    let pair_sim = similarity_value(
                        hp.similarity,
                        pairs[i].x1.vector.view(),
                        pairs[i].x2.vector.view(),
                    );
                    pick_least(pairs, anchor, pair_sim, &cands, hp)
                }
            };
            slots[k] = Some(choice);
        }
        out.push(NegativePair {
            t1: slots[0].unwrap(),
            t2: slots[1].unwrap(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::Similarity;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::collections::HashMap;

    fn phrase(surface: &str, v: [f64; 2]) -> EmbeddedPhrase {
        EmbeddedPhrase {
            surface: surface.to_string(),
            vector: array![v[0], v[1]],
        }
    }

    fn pair(s1: &str, v1: [f64; 2], s2: &str, v2: [f64; 2]) -> EmbeddedPair {
        EmbeddedPair {
            x1: phrase(s1, v1),
            x2: phrase(s2, v2),
        }
    }

    fn hp(sampler: Sampler, pool: NegativePool) -> Hyperparameters {
        Hyperparameters {
            sampler,
            neg_pool: pool,
            ..Hyperparameters::for_words(0)
        }
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn two_pair_batch_is_forced_on_matching_side() {
        let batch = vec![
            pair("a", [1.0, 0.0], "b", [0.0, 1.0]),
            pair("c", [0.5, 0.5], "d", [-1.0, 0.0]),
        ];
        let negs = select_negatives(&batch, &hp(Sampler::Max, NegativePool::First), None, &mut rng())
            .unwrap();
        assert_eq!(negs[0].t1, CandidateRef { pair: 1, side: Side::First });
        assert_eq!(negs[0].t2, CandidateRef { pair: 1, side: Side::Second });
        assert_eq!(negs[1].t1, CandidateRef { pair: 0, side: Side::First });
        assert_eq!(negs[1].t2, CandidateRef { pair: 0, side: Side::Second });
    }

    fn brute_force_max(
        batch: &[EmbeddedPair],
        i: usize,
        slot: Side,
        hp: &Hyperparameters,
        constraints: Option<&ConstraintIndex>,
    ) -> Option<(CandidateRef, f64)> {
        let anchor = batch[i].side(slot);
        let mut best: Option<(CandidateRef, f64)> = None;
        for j in 0..batch.len() {
            if j == i {
                continue;
            }
            let sides = match hp.neg_pool {
                NegativePool::First => vec![slot],
                NegativePool::Both => vec![Side::First, Side::Second],
            };
            for side in sides {
                let cand = batch[j].side(side);
                if cand.surface == batch[i].x1.surface || cand.surface == batch[i].x2.surface {
                    continue;
                }
                if constraints.is_some_and(|c| c.is_forbidden(&anchor.surface, &cand.surface)) {
                    continue;
                }
                let s = similarity_value(hp.similarity, anchor.vector.view(), cand.vector.view());
                if best.is_none_or(|(_, bs)| s > bs) {
                    best = Some((CandidateRef { pair: j, side }, s));
                }
            }
        }
        best
    }

    fn random_batch(seed: u64, size: usize) -> Vec<EmbeddedPair> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..size)
            .map(|i| {
                pair(
                    &format!("w{i}a"),
                    [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)],
                    &format!("w{i}b"),
                    [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)],
                )
            })
            .collect()
    }

    #[test]
    fn max_matches_exhaustive_search() {
        for seed in 0..50 {
            let batch = random_batch(seed, 5);
            let hp = hp(Sampler::Max, NegativePool::Both);
            let negs = select_negatives(&batch, &hp, None, &mut rng()).unwrap();
            for (i, neg) in negs.iter().enumerate() {
                let (want, _) = brute_force_max(&batch, i, Side::First, &hp, None).unwrap();
                assert_eq!(neg.t1, want, "seed {seed} pair {i}");
                let (want, _) = brute_force_max(&batch, i, Side::Second, &hp, None).unwrap();
                assert_eq!(neg.t2, want, "seed {seed} pair {i}");
            }
        }
    }

    #[test]
    fn constraints_exclude_the_argmax() {
        // Candidate "c" is the argmax for "a"; forbidding it promotes the runner-up.
        let batch = vec![
            pair("a", [1.0, 0.0], "b", [0.0, 1.0]),
            pair("c", [1.0, 0.0], "d", [0.9, 0.1]),
            pair("e", [0.5, 0.5], "f", [0.0, -1.0]),
        ];
        let hp = hp(Sampler::Max, NegativePool::Both);
        let unconstrained = select_negatives(&batch, &hp, None, &mut rng()).unwrap();
        assert_eq!(unconstrained[0].t1, CandidateRef { pair: 1, side: Side::First });

        let index = super::super::constraints::build_constraints(
            &[("a".to_string(), "c".to_string())],
            &HashMap::new(),
        );
        let constrained = select_negatives(&batch, &hp, Some(&index), &mut rng()).unwrap();
        assert_eq!(constrained[0].t1, CandidateRef { pair: 1, side: Side::Second });
    }

    #[test]
    fn least_picks_weakest_margin_violator() {
        // pair 0 similarity = 0; candidates at dot 0.9 ("c"), 0.3 ("e"); with
        // delta = 1 both violate; LEAST takes the 0.3 one.
        let batch = vec![
            pair("a", [1.0, 0.0], "b", [0.0, 1.0]),
            pair("c", [0.9, 0.0], "d", [-1.0, -1.0]),
            pair("e", [0.3, 0.0], "f", [-1.0, -0.5]),
        ];
        let hp = hp(Sampler::Least, NegativePool::First);
        let negs = select_negatives(&batch, &hp, None, &mut rng()).unwrap();
        assert_eq!(negs[0].t1, CandidateRef { pair: 2, side: Side::First });
    }

    #[test]
    fn least_falls_back_to_max() {
        // pair similarity 2.0, delta 1: threshold 1.0; no candidate dot
        // exceeds it, so LEAST degrades to MAX.
        let batch = vec![
            pair("a", [2.0, 0.0], "b", [1.0, 0.0]),
            pair("c", [0.4, 0.0], "d", [-1.0, 0.0]),
            pair("e", [0.1, 0.0], "f", [-2.0, 0.0]),
        ];
        let hp = hp(Sampler::Least, NegativePool::First);
        let negs = select_negatives(&batch, &hp, None, &mut rng()).unwrap();
        assert_eq!(negs[0].t1, CandidateRef { pair: 1, side: Side::First });
    }

    #[test]
    fn exhausted_candidates_error() {
        // the only other pair repeats this pair's surfaces
        let batch = vec![
            pair("a", [1.0, 0.0], "b", [0.0, 1.0]),
            pair("b", [0.0, 1.0], "a", [1.0, 0.0]),
        ];
        let err = select_negatives(&batch, &hp(Sampler::Max, NegativePool::Both), None, &mut rng())
            .unwrap_err();
        assert!(matches!(err, Error::EmptyCandidateSet { pair: 0 }));
    }

    #[test]
    fn rand_is_seed_deterministic() {
        let batch = random_batch(3, 6);
        let hp = hp(Sampler::Rand, NegativePool::Both);
        let a = select_negatives(&batch, &hp, None, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = select_negatives(&batch, &hp, None, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn max_equals_oracle_and_avoids_partners(
            seed in 0u64..500, size in 2usize..8, cosine in proptest::bool::ANY,
        ) {
            let batch = random_batch(seed, size);
            let mut h = hp(Sampler::Max, NegativePool::Both);
            if cosine {
                h.similarity = Similarity::Cosine;
            }
            let negs = select_negatives(&batch, &h, None, &mut rng()).unwrap();
            for (i, neg) in negs.iter().enumerate() {
                let (want, _) = brute_force_max(&batch, i, Side::First, &h, None).unwrap();
                prop_assert_eq!(neg.t1, want);
                let (want, _) = brute_force_max(&batch, i, Side::Second, &h, None).unwrap();
                prop_assert_eq!(neg.t2, want);
                let t1 = batch[neg.t1.pair].side(neg.t1.side);
                let t2 = batch[neg.t2.pair].side(neg.t2.side);
                prop_assert_ne!(&t1.surface, &batch[i].x2.surface);
                prop_assert_ne!(&t2.surface, &batch[i].x1.surface);
            }
        }
    }
}
