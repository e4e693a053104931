//! Margin-based training of word vectors and the recursive composition
//! network on paraphrase pairs, with in-batch negative sampling, AdaGrad,
//! and hyperparameter grid search.

pub mod adagrad;
pub mod constraints;
pub mod objective;
pub mod sampling;

use std::io::BufRead;

use ndarray::ArrayView1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::composition::{forward_tree, CompositionParams, ParseTree};
use crate::embeddings::EmbeddingSet;
use crate::error::{Error, Result};
use crate::evaluation::stats::COSINE_NORM_FLOOR;

pub use adagrad::AdaGradState;
pub use constraints::{build_constraints, ConstraintIndex};
pub use objective::{
    phrase_gradients, phrase_loss, word_gradients, word_loss, PhraseGradients,
};
pub use sampling::{
    select_negatives, CandidateRef, EmbeddedPair, EmbeddedPhrase, NegativePair, Side,
};

/// Similarity used in the objective and for picking negatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Similarity {
    Dot,
    Cosine,
}

/// Negative-example selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    /// Most similar candidate in the batch.
    Max,
    /// Uniform candidate.
    Rand,
    /// Fair coin between `Max` and `Rand` per slot.
    Mix,
    /// Least similar candidate still violating the margin; `Max` when none.
    Least,
}

/// Which phrases of the other batch pairs are candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativePool {
    /// Only the side matching the slot: `t1` from first phrases, `t2`
    /// from second phrases.
    First,
    /// Both sides of every other pair.
    Both,
}

pub(crate) fn similarity_value(
    kind: Similarity,
    u: ArrayView1<'_, f64>,
    v: ArrayView1<'_, f64>,
) -> f64 {
    match kind {
        Similarity::Dot => u.dot(&v),
        Similarity::Cosine => {
            let nu = u.dot(&u).sqrt();
            let nv = v.dot(&v).sqrt();
            if nu < COSINE_NORM_FLOOR || nv < COSINE_NORM_FLOOR {
                0.0
            } else {
                u.dot(&v) / (nu * nv)
            }
        }
    }
}

/// Everything the optimizer needs to know besides the data.
#[derive(Debug, Clone)]
pub struct Hyperparameters {
    /// Required similarity gap between a pair and its negatives.
    pub delta: f64,
    /// Pull of the word matrix toward its initialization.
    pub lambda_ww: f64,
    /// Weight decay on the composition matrix and offset.
    pub lambda_w: f64,
    pub lr_words: f64,
    pub lr_comp: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub similarity: Similarity,
    pub sampler: Sampler,
    pub neg_pool: NegativePool,
    pub seed: u64,
}

impl Hyperparameters {
    /// Word-pair training defaults: margin 1, learning rate 0.5, batches
    /// of 100, 20 epochs, dot similarity, MAX sampling.
    pub fn for_words(seed: u64) -> Self {
        Hyperparameters {
            delta: 1.0,
            lambda_ww: 0.0,
            lambda_w: 0.0,
            lr_words: 0.5,
            lr_comp: 0.05,
            batch_size: 100,
            epochs: 20,
            similarity: Similarity::Dot,
            sampler: Sampler::Max,
            neg_pool: NegativePool::Both,
            seed,
        }
    }

    /// Phrase-pair training defaults: as `for_words` but 5 epochs, with
    /// the composition learning rate at 0.05.
    pub fn for_phrases(seed: u64) -> Self {
        Hyperparameters {
            epochs: 5,
            ..Hyperparameters::for_words(seed)
        }
    }

    /// The higher-dimensional word recipe: cosine similarity, 10 epochs.
    pub fn for_words_cosine(seed: u64) -> Self {
        Hyperparameters {
            epochs: 10,
            similarity: Similarity::Cosine,
            ..Hyperparameters::for_words(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta <= 0.0 {
            return Err(Error::invalid("margin must be positive"));
        }
        if self.lr_words <= 0.0 || self.lr_comp <= 0.0 {
            return Err(Error::invalid("learning rates must be positive"));
        }
        if self.lambda_ww < 0.0 || self.lambda_w < 0.0 {
            return Err(Error::invalid("regularization weights must be non-negative"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        Ok(())
    }
}

/// Anything trainable has a surface string used for pair identity and
/// exclusion checks.
pub trait Surface {
    fn surface_string(&self) -> String;
}

impl Surface for String {
    fn surface_string(&self) -> String {
        self.clone()
    }
}

impl Surface for ParseTree {
    fn surface_string(&self) -> String {
        self.surface()
    }
}

/// A paraphrase training pair; the two sides must differ as surface strings.
#[derive(Debug, Clone)]
pub struct TrainingPair<P> {
    pub x1: P,
    pub x2: P,
}

impl<P: Surface> TrainingPair<P> {
    pub fn new(x1: P, x2: P) -> Result<Self> {
        if x1.surface_string() == x2.surface_string() {
            return Err(Error::invalid(format!(
                "training pair sides are identical: `{}`",
                x1.surface_string()
            )));
        }
        Ok(TrainingPair { x1, x2 })
    }
}

/// A slice of training pairs plus, once selected, their negatives.
#[derive(Debug, Clone)]
pub struct MiniBatch<P> {
    pub pairs: Vec<TrainingPair<P>>,
    pub negatives: Option<Vec<NegativePair>>,
}

impl<P> MiniBatch<P> {
    pub fn new(pairs: Vec<TrainingPair<P>>) -> Self {
        MiniBatch {
            pairs,
            negatives: None,
        }
    }
}

/// Embed a word batch by lookup under the current matrix.
pub fn embed_word_batch(
    batch: &MiniBatch<String>,
    set: &EmbeddingSet,
) -> Result<Vec<EmbeddedPair>> {
    if set.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(batch
        .pairs
        .iter()
        .map(|p| EmbeddedPair {
            x1: EmbeddedPhrase {
                surface: p.x1.clone(),
                vector: set.lookup(&p.x1).to_owned(),
            },
            x2: EmbeddedPhrase {
                surface: p.x2.clone(),
                vector: set.lookup(&p.x2).to_owned(),
            },
        })
        .collect())
}

/// Embed a phrase batch by running the composition network on each side.
pub fn embed_phrase_batch(
    batch: &MiniBatch<ParseTree>,
    params: &CompositionParams,
    set: &EmbeddingSet,
) -> Result<Vec<EmbeddedPair>> {
    batch
        .pairs
        .iter()
        .map(|p| {
            Ok(EmbeddedPair {
                x1: EmbeddedPhrase {
                    surface: p.x1.surface(),
                    vector: forward_tree(&p.x1, params, set)?.value().clone(),
                },
                x2: EmbeddedPhrase {
                    surface: p.x2.surface(),
                    vector: forward_tree(&p.x2, params, set)?.value().clone(),
                },
            })
        })
        .collect()
}

/// Fill a word batch's negatives under the current matrix.
pub fn select_word_negatives(
    batch: &mut MiniBatch<String>,
    set: &EmbeddingSet,
    hp: &Hyperparameters,
    constraints: Option<&ConstraintIndex>,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let embedded = embed_word_batch(batch, set)?;
    batch.negatives = Some(select_negatives(&embedded, hp, constraints, rng)?);
    Ok(())
}

/// Fill a phrase batch's negatives under the current parameters.
pub fn select_phrase_negatives(
    batch: &mut MiniBatch<ParseTree>,
    params: &CompositionParams,
    set: &EmbeddingSet,
    hp: &Hyperparameters,
    constraints: Option<&ConstraintIndex>,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let embedded = embed_phrase_batch(batch, params, set)?;
    batch.negatives = Some(select_negatives(&embedded, hp, constraints, rng)?);
    Ok(())
}

fn check_train_inputs<P>(pairs: &[TrainingPair<P>], hp: &Hyperparameters) -> Result<()> {
    hp.validate()?;
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if hp.epochs > 0 {
        if pairs.len() < 2 {
            return Err(Error::invalid(
                "training needs at least 2 pairs to sample negatives",
            ));
        }
        if hp.batch_size < 2 {
            return Err(Error::invalid(
                "negative sampling needs batches of at least 2 pairs",
            ));
        }
    }
    Ok(())
}

fn batch_of<P: Clone>(pairs: &[TrainingPair<P>], indices: &[usize]) -> MiniBatch<P> {
    MiniBatch::new(indices.iter().map(|&i| pairs[i].clone()).collect())
}

/// Optimize the word matrix on word pairs. Each epoch shuffles the pairs
/// with the seeded generator, selects negatives per batch under the
/// current parameters, and applies one AdaGrad step per batch. A trailing
/// single-pair batch has no negative candidates and is skipped.
pub fn train_words(
    pairs: &[TrainingPair<String>],
    init_set: &EmbeddingSet,
    hp: &Hyperparameters,
    constraints: Option<&ConstraintIndex>,
) -> Result<EmbeddingSet> {
    check_train_inputs(pairs, hp)?;
    let mut set = init_set.clone();
    let mut state = AdaGradState::new(set.matrix().raw_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(hp.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let mut batch = batch_of(pairs, chunk);
            select_word_negatives(&mut batch, &set, hp, constraints, &mut rng)?;
            let grad = word_gradients(&batch, &set, init_set, hp)?;
            state.update(set.matrix_mut(), &grad, hp.lr_words);
        }
    }
    Ok(set)
}

/// Optimize the word matrix and composition parameters on phrase pairs.
/// Without `init_params` the composition matrix starts from the seeded
/// random initialization.
pub fn train_phrases(
    pairs: &[TrainingPair<ParseTree>],
    init_set: &EmbeddingSet,
    init_params: Option<CompositionParams>,
    hp: &Hyperparameters,
    constraints: Option<&ConstraintIndex>,
) -> Result<(EmbeddingSet, CompositionParams)> {
    check_train_inputs(pairs, hp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut set = init_set.clone();
    let mut params = match init_params {
        Some(p) => {
            if p.dim() != set.dim() {
                return Err(Error::DimensionMismatch {
                    expected: set.dim(),
                    got: p.dim(),
                });
            }
            p
        }
        None => CompositionParams::random(set.dim(), &mut rng),
    };
    let mut ww_state = AdaGradState::new(set.matrix().raw_dim());
    let mut w_state = AdaGradState::new(params.w().raw_dim());
    let mut b_state = AdaGradState::new(params.b().raw_dim());
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(hp.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let mut batch = batch_of(pairs, chunk);
            select_phrase_negatives(&mut batch, &params, &set, hp, constraints, &mut rng)?;
            let grads = phrase_gradients(&batch, &params, &set, init_set, hp)?;
            ww_state.update(set.matrix_mut(), &grads.ww, hp.lr_words);
            w_state.update(params.w_mut(), &grads.w, hp.lr_comp);
            b_state.update(params.b_mut(), &grads.b, hp.lr_comp);
        }
    }
    Ok((set, params))
}

/// Size-weighted mean batch loss over the pairs in fixed order, selecting
/// negatives under the given parameters. Single-pair leftovers are skipped
/// exactly as in training.
pub fn mean_word_loss(
    pairs: &[TrainingPair<String>],
    set: &EmbeddingSet,
    init: &EmbeddingSet,
    hp: &Hyperparameters,
    constraints: Option<&ConstraintIndex>,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut total = 0.0;
    let mut count = 0usize;
    let indices: Vec<usize> = (0..pairs.len()).collect();
    for chunk in indices.chunks(hp.batch_size) {
        if chunk.len() < 2 {
            continue;
        }
        let mut batch = batch_of(pairs, chunk);
        select_word_negatives(&mut batch, set, hp, constraints, &mut rng)?;
        total += word_loss(&batch, set, init, hp)? * chunk.len() as f64;
        count += chunk.len();
    }
    if count == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(total / count as f64)
}

/// Phrase-mode counterpart of [`mean_word_loss`].
pub fn mean_phrase_loss(
    pairs: &[TrainingPair<ParseTree>],
    params: &CompositionParams,
    set: &EmbeddingSet,
    init: &EmbeddingSet,
    hp: &Hyperparameters,
    constraints: Option<&ConstraintIndex>,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut total = 0.0;
    let mut count = 0usize;
    let indices: Vec<usize> = (0..pairs.len()).collect();
    for chunk in indices.chunks(hp.batch_size) {
        if chunk.len() < 2 {
            continue;
        }
        let mut batch = batch_of(pairs, chunk);
        select_phrase_negatives(&mut batch, params, set, hp, constraints, &mut rng)?;
        total += phrase_loss(&batch, params, set, init, hp)? * chunk.len() as f64;
        count += chunk.len();
    }
    if count == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(total / count as f64)
}

/// Candidate values per tunable hyperparameter; the search walks their
/// Cartesian product.
#[derive(Debug, Clone)]
pub struct GridSpace {
    pub lambda_ww: Vec<f64>,
    pub lambda_w: Vec<f64>,
    pub batch_size: Vec<usize>,
}

impl GridSpace {
    /// Word grid: seven initialization-pull weights times four batch sizes.
    pub fn word_grid() -> Self {
        GridSpace {
            lambda_ww: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 0.0],
            lambda_w: vec![0.0],
            batch_size: vec![100, 250, 500, 1000],
        }
    }

    /// Phrase grid: adds the composition weight-decay dimension and a
    /// 2000-pair batch size.
    pub fn phrase_grid() -> Self {
        GridSpace {
            lambda_ww: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 0.0],
            lambda_w: vec![1e-1, 1e-2, 1e-3, 0.0],
            batch_size: vec![100, 250, 500, 1000, 2000],
        }
    }

    /// Phrase grid with the initialization pull shifted upward, for runs
    /// that start from already-tuned word vectors.
    pub fn phrase_grid_shifted() -> Self {
        GridSpace {
            lambda_ww: vec![10.0, 1.0, 1e-1, 1e-3, 1e-4, 1e-5, 1e-6],
            ..GridSpace::phrase_grid()
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub hp: Hyperparameters,
    pub score: f64,
}

/// Evaluate every point of the grid and return the argmax (first point on
/// ties) together with the full score table.
pub fn grid_search(
    base: &Hyperparameters,
    space: &GridSpace,
    mut eval: impl FnMut(&Hyperparameters) -> Result<f64>,
) -> Result<(Hyperparameters, Vec<GridPoint>)> {
    if space.lambda_ww.is_empty() || space.lambda_w.is_empty() || space.batch_size.is_empty() {
        return Err(Error::invalid("empty grid dimension"));
    }
    let mut table = Vec::new();
    let mut best: Option<usize> = None;
    for &lambda_ww in &space.lambda_ww {
        for &lambda_w in &space.lambda_w {
            for &batch_size in &space.batch_size {
                let hp = Hyperparameters {
                    lambda_ww,
                    lambda_w,
                    batch_size,
                    ..base.clone()
                };
                let score = eval(&hp)?;
                table.push(GridPoint { hp, score });
                if best.is_none_or(|b| score > table[b].score) {
                    best = Some(table.len() - 1);
                }
            }
        }
    }
    let best = best.expect("non-empty grid");
    Ok((table[best].hp.clone(), table))
}

/// Parse `word1 TAB word2` training pairs; each side must be one token.
pub fn load_word_pairs(reader: impl BufRead) -> Result<Vec<TrainingPair<String>>> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(Error::parse(i + 1, "expected `word1 TAB word2`"));
        }
        let (w1, w2) = (cols[0].trim(), cols[1].trim());
        if w1.contains(char::is_whitespace) || w2.contains(char::is_whitespace) {
            return Err(Error::parse(i + 1, "word pairs must be single tokens"));
        }
        pairs.push(
            TrainingPair::new(w1.to_string(), w2.to_string())
                .map_err(|e| Error::parse(i + 1, e.to_string()))?,
        );
    }
    Ok(pairs)
}

/// How phrase-pair text is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhraseFormat {
    /// Whitespace tokens composed under a right-branching default tree.
    Tokens,
    /// Parenthesized binary trees.
    Trees,
}

/// Parse `phrase1 TAB phrase2` training pairs in either format.
pub fn load_phrase_pairs(
    reader: impl BufRead,
    format: PhraseFormat,
) -> Result<Vec<TrainingPair<ParseTree>>> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(Error::parse(i + 1, "expected `phrase1 TAB phrase2`"));
        }
        let parse = |text: &str| -> Result<ParseTree> {
            match format {
                PhraseFormat::Trees => crate::composition::parse_tree_text(text),
                PhraseFormat::Tokens => {
                    let tokens: Vec<String> =
                        text.split_whitespace().map(String::from).collect();
                    ParseTree::right_branching(&tokens)
                }
            }
        };
        let t1 = parse(cols[0]).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        let t2 = parse(cols[1]).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        pairs.push(TrainingPair::new(t1, t2).map_err(|e| Error::parse(i + 1, e.to_string()))?);
    }
    Ok(pairs)
}
