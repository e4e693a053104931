//! Synthetic data generators shared by the integration suites.
#![allow(dead_code)] // each suite uses its own slice of the generators

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use paragram::composition::ParseTree;
use paragram::embeddings::EmbeddingSet;
use paragram::training::TrainingPair;

/// Synonym clusters with within-cluster training pairs and a held-out
/// slice of within-cluster pairs.
pub struct WordClusters {
    pub init: EmbeddingSet,
    pub train_pairs: Vec<TrainingPair<String>>,
    /// (cluster, w1, w2) pairs never seen in training.
    pub heldout_pairs: Vec<(usize, String, String)>,
    pub clusters: Vec<Vec<String>>,
}

/// Build `n_clusters` clusters of `words_per` words each. The initial
/// embeddings are structure-free uniform noise; all cluster signal comes
/// from the training pairs. Every fifth within-cluster pair is held out.
pub fn word_clusters(n_clusters: usize, words_per: usize, dim: usize, seed: u64) -> WordClusters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clusters: Vec<Vec<String>> = (0..n_clusters)
        .map(|c| (0..words_per).map(|k| format!("c{c}w{k}")).collect())
        .collect();
    let words: Vec<String> = clusters.iter().flatten().cloned().collect();
    let matrix = Array2::from_shape_fn((words.len(), dim), |_| rng.gen_range(-0.5..0.5));
    let init = EmbeddingSet::from_parts(words, matrix).unwrap();

    let mut train_pairs = Vec::new();
    let mut heldout_pairs = Vec::new();
    for (c, members) in clusters.iter().enumerate() {
        let mut index = 0usize;
        for i in 0..members.len() {
            for j in (i + 1)..members.len() {
                if index % 5 == 4 {
                    heldout_pairs.push((c, members[i].clone(), members[j].clone()));
                } else {
                    train_pairs
                        .push(TrainingPair::new(members[i].clone(), members[j].clone()).unwrap());
                }
                index += 1;
            }
        }
    }
    WordClusters {
        init,
        train_pairs,
        heldout_pairs,
        clusters,
    }
}

/// A template grammar over adjective and noun synonym groups. Phrases are
/// two-leaf `( adjective noun )` trees; the paraphrase signal is whether
/// the two phrases draw from the same synonym groups.
pub struct PhraseGrammar {
    pub init: EmbeddingSet,
    /// Word-level synonym pairs for pre-training the vectors.
    pub word_pairs: Vec<TrainingPair<String>>,
    /// Paraphrastic tree pairs (both slots from matching groups).
    pub train_pairs: Vec<TrainingPair<ParseTree>>,
    /// Held-out items: (tree1, tree2, gold in {1,3,5}).
    pub heldout: Vec<(ParseTree, ParseTree, f64)>,
}

fn bigram(adj: &str, noun: &str) -> ParseTree {
    ParseTree::Node(
        Box::new(ParseTree::Leaf(adj.to_string())),
        Box::new(ParseTree::Leaf(noun.to_string())),
    )
}

/// `groups` synonym groups of two adjectives and two nouns each.
/// Training pairs swap both slot fillers for their synonyms (gold-5
/// paraphrases); one pair per group combination is held out, along with
/// deterministic gold-3 (shared noun group) and gold-1 (no shared group)
/// items.
pub fn phrase_grammar(groups: usize, dim: usize, seed: u64) -> PhraseGrammar {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let adjs: Vec<[String; 2]> = (0..groups)
        .map(|g| [format!("a{g}x"), format!("a{g}y")])
        .collect();
    let nouns: Vec<[String; 2]> = (0..groups)
        .map(|g| [format!("n{g}x"), format!("n{g}y")])
        .collect();
    let words: Vec<String> = adjs
        .iter()
        .chain(nouns.iter())
        .flat_map(|pair| pair.iter().cloned())
        .collect();
    let matrix = Array2::from_shape_fn((words.len(), dim), |_| rng.gen_range(-0.5..0.5));
    let init = EmbeddingSet::from_parts(words, matrix).unwrap();

    let mut word_pairs = Vec::new();
    for pair in adjs.iter().chain(nouns.iter()) {
        word_pairs.push(TrainingPair::new(pair[0].clone(), pair[1].clone()).unwrap());
    }

    let mut train_pairs = Vec::new();
    let mut heldout = Vec::new();
    for g in 0..groups {
        for h in 0..groups {
            let fwd = TrainingPair::new(
                bigram(&adjs[g][0], &nouns[h][0]),
                bigram(&adjs[g][1], &nouns[h][1]),
            )
            .unwrap();
            let rev = TrainingPair::new(
                bigram(&adjs[g][1], &nouns[h][0]),
                bigram(&adjs[g][0], &nouns[h][1]),
            )
            .unwrap();
            // hold out one paraphrase per (g, h) combination
            heldout.push((rev.x1.clone(), rev.x2.clone(), 5.0));
            train_pairs.push(fwd);
            // gold-3: same noun group, different adjective group
            let g2 = (g + 1) % groups;
            heldout.push((
                bigram(&adjs[g][0], &nouns[h][0]),
                bigram(&adjs[g2][1], &nouns[h][1]),
                3.0,
            ));
            // gold-1: both groups differ
            let h2 = (h + 1) % groups;
            heldout.push((
                bigram(&adjs[g][0], &nouns[h][0]),
                bigram(&adjs[g2][1], &nouns[h2][1]),
                1.0,
            ));
        }
    }
    PhraseGrammar {
        init,
        word_pairs,
        train_pairs,
        heldout,
    }
}
