//! The margin objectives and their exact subgradients.
//!
//! Phrase mode: mean over the batch of
//! `max(0, d - s(x1,x2) + s(x1,t1)) + max(0, d - s(x1,x2) + s(x2,t2))`
//! plus `lambda_w (|W|^2 + |b|^2) + lambda_ww |Ww_init - Ww|^2`, with the
//! phrase vectors produced by the recursive network. Word mode drops the
//! composition and its regularizer. A hinge at exactly zero contributes
//! nothing to the gradient.

use ndarray::{s, Array1, Array2, ArrayView1};

use super::sampling::{CandidateRef, Side};
use super::{MiniBatch, Hyperparameters, Similarity};
use crate::composition::{forward_tree, ActivatedTree, CompositionParams, ParseTree};
use crate::embeddings::EmbeddingSet;
use crate::error::{Error, Result};
use crate::evaluation::stats::COSINE_NORM_FLOOR;

/// Gradients of the phrase objective for every trainable tensor.
#[derive(Debug, Clone)]
pub struct PhraseGradients {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub ww: Array2<f64>,
}

/// Similarity with its partial derivatives in both arguments.
fn sim_with_grads(
    kind: Similarity,
    u: ArrayView1<'_, f64>,
    v: ArrayView1<'_, f64>,
) -> (f64, Array1<f64>, Array1<f64>) {
    match kind {
        Similarity::Dot => (u.dot(&v), v.to_owned(), u.to_owned()),
        Similarity::Cosine => {
            let nu = u.dot(&u).sqrt();
            let nv = v.dot(&v).sqrt();
            if nu < COSINE_NORM_FLOOR || nv < COSINE_NORM_FLOOR {
                return (0.0, Array1::zeros(u.len()), Array1::zeros(v.len()));
            }
            let sim = u.dot(&v) / (nu * nv);
            let du = v.mapv(|x| x / (nu * nv)) - u.mapv(|x| x * sim / (nu * nu));
            let dv = u.mapv(|x| x / (nu * nv)) - v.mapv(|x| x * sim / (nv * nv));
            (sim, du, dv)
        }
    }
}

fn negatives_of<P>(batch: &MiniBatch<P>) -> Result<&[super::NegativePair]> {
    let negatives = batch
        .negatives
        .as_deref()
        .ok_or_else(|| Error::invalid("negatives not selected for this batch"))?;
    if negatives.len() != batch.pairs.len() {
        return Err(Error::DimensionMismatch {
            expected: batch.pairs.len(),
            got: negatives.len(),
        });
    }
    Ok(negatives)
}

fn check_init(set: &EmbeddingSet, init: &EmbeddingSet) -> Result<()> {
    if set.matrix().raw_dim() != init.matrix().raw_dim() {
        return Err(Error::DimensionMismatch {
            expected: init.matrix().len(),
            got: set.matrix().len(),
        });
    }
    Ok(())
}

fn squared_frobenius_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn word_row(set: &EmbeddingSet, token: &str) -> Result<usize> {
    set.row_index(token).ok_or(Error::EmptyInput)
}

fn word_objective(
    batch: &MiniBatch<String>,
    set: &EmbeddingSet,
    init: &EmbeddingSet,
    hp: &Hyperparameters,
    want_grads: bool,
) -> Result<(f64, Option<Array2<f64>>)> {
    let negatives = negatives_of(batch)?;
    check_init(set, init)?;
    let matrix = set.matrix();
    let batch_size = batch.pairs.len() as f64;
    let scale = 1.0 / batch_size;
    let mut data = 0.0;
    let mut grad = want_grads.then(|| Array2::<f64>::zeros(matrix.raw_dim()));

    let row_of = |cand: &CandidateRef| -> Result<usize> {
        let pair = &batch.pairs[cand.pair];
        let token = match cand.side {
            Side::First => &pair.x1,
            Side::Second => &pair.x2,
        };
        word_row(set, token)
    };

    for (i, pair) in batch.pairs.iter().enumerate() {
        let r1 = word_row(set, &pair.x1)?;
        let r2 = word_row(set, &pair.x2)?;
        let rt1 = row_of(&negatives[i].t1)?;
        let rt2 = row_of(&negatives[i].t2)?;
        let (u1, u2) = (matrix.row(r1), matrix.row(r2));
        let (v1, v2) = (matrix.row(rt1), matrix.row(rt2));
        let (s12, d12_u1, d12_u2) = sim_with_grads(hp.similarity, u1, u2);
        let (s1t, d1t_u1, d1t_v1) = sim_with_grads(hp.similarity, u1, v1);
        let (s2t, d2t_u2, d2t_v2) = sim_with_grads(hp.similarity, u2, v2);
        let h1 = hp.delta - s12 + s1t;
        let h2 = hp.delta - s12 + s2t;
        if h1 > 0.0 {
            data += h1;
            if let Some(g) = grad.as_mut() {
                g.row_mut(r1).scaled_add(scale, &(&d1t_u1 - &d12_u1));
                g.row_mut(r2).scaled_add(-scale, &d12_u2);
                g.row_mut(rt1).scaled_add(scale, &d1t_v1);
            }
        }
        if h2 > 0.0 {
            data += h2;
            if let Some(g) = grad.as_mut() {
                g.row_mut(r1).scaled_add(-scale, &d12_u1);
                g.row_mut(r2).scaled_add(scale, &(&d2t_u2 - &d12_u2));
                g.row_mut(rt2).scaled_add(scale, &d2t_v2);
            }
        }
    }

    let mut loss = data * scale;
    if hp.lambda_ww > 0.0 {
        loss += hp.lambda_ww * squared_frobenius_diff(init.matrix(), matrix);
        if let Some(g) = grad.as_mut() {
            *g += &(2.0 * hp.lambda_ww * (matrix - init.matrix()));
        }
    }
    Ok((loss, grad))
}

/// Word-pair loss for a batch with selected negatives.
pub fn word_loss(
    batch: &MiniBatch<String>,
    set: &EmbeddingSet,
    init: &EmbeddingSet,
    hp: &Hyperparameters,
) -> Result<f64> {
    word_objective(batch, set, init, hp, false).map(|(loss, _)| loss)
}

/// Exact subgradient of [`word_loss`] with respect to the word matrix.
pub fn word_gradients(
    batch: &MiniBatch<String>,
    set: &EmbeddingSet,
    init: &EmbeddingSet,
    hp: &Hyperparameters,
) -> Result<Array2<f64>> {
    word_objective(batch, set, init, hp, true).map(|(_, grad)| grad.expect("gradients requested"))
}

/// Push a root gradient back through a cached forward pass, accumulating
/// into the parameter gradients. Backprop through each node multiplies by
/// `1 - g^2` (the tanh derivative at the cached activation).
fn backprop_tree(
    node: &ActivatedTree,
    upstream: &Array1<f64>,
    params: &CompositionParams,
    out: &mut PhraseGradients,
) {
    match node {
        ActivatedTree::Leaf { row, .. } => {
            out.ww.row_mut(*row).scaled_add(1.0, upstream);
        }
        ActivatedTree::Node { left, right, value } => {
            let n = value.len();
            let dz: Array1<f64> = upstream
                .iter()
                .zip(value.iter())
                .map(|(u, g)| u * (1.0 - g * g))
                .collect();
            for i in 0..n {
                let mut row = out.w.row_mut(i);
                row.slice_mut(s![..n]).scaled_add(dz[i], left.value());
                row.slice_mut(s![n..]).scaled_add(dz[i], right.value());
            }
            out.b += &dz;
            let dcat = params.w().t().dot(&dz);
            backprop_tree(left, &dcat.slice(s![..n]).to_owned(), params, out);
            backprop_tree(right, &dcat.slice(s![n..]).to_owned(), params, out);
        }
    }
}

fn phrase_objective(
    batch: &MiniBatch<ParseTree>,
    params: &CompositionParams,
    set: &EmbeddingSet,
    init: &EmbeddingSet,
    hp: &Hyperparameters,
    want_grads: bool,
) -> Result<(f64, Option<PhraseGradients>)> {
    let negatives = negatives_of(batch)?;
    check_init(set, init)?;
    let batch_size = batch.pairs.len() as f64;
    let scale = 1.0 / batch_size;

    let forward: Vec<(ActivatedTree, ActivatedTree)> = batch
        .pairs
        .iter()
        .map(|p| Ok((forward_tree(&p.x1, params, set)?, forward_tree(&p.x2, params, set)?)))
        .collect::<Result<_>>()?;
    let root = |cand: &CandidateRef| -> &Array1<f64> {
        let (x1, x2) = &forward[cand.pair];
        match cand.side {
            Side::First => x1.value(),
            Side::Second => x2.value(),
        }
    };

    let n = set.dim();
    let mut data = 0.0;
    let mut root_grads: Option<Vec<[Array1<f64>; 2]>> = want_grads.then(|| {
        (0..batch.pairs.len())
            .map(|_| [Array1::zeros(n), Array1::zeros(n)])
            .collect()
    });

    for i in 0..batch.pairs.len() {
        let g1 = forward[i].0.value();
        let g2 = forward[i].1.value();
        let t1 = negatives[i].t1;
        let t2 = negatives[i].t2;
        let (s12, d12_u1, d12_u2) = sim_with_grads(hp.similarity, g1.view(), g2.view());
        let (s1t, d1t_u1, d1t_v1) = sim_with_grads(hp.similarity, g1.view(), root(&t1).view());
        let (s2t, d2t_u2, d2t_v2) = sim_with_grads(hp.similarity, g2.view(), root(&t2).view());
        let h1 = hp.delta - s12 + s1t;
        let h2 = hp.delta - s12 + s2t;
        let side_index = |side: Side| match side {
            Side::First => 0,
            Side::Second => 1,
        };
        if h1 > 0.0 {
            data += h1;
            if let Some(rg) = root_grads.as_mut() {
                rg[i][0].scaled_add(scale, &(&d1t_u1 - &d12_u1));
                rg[i][1].scaled_add(-scale, &d12_u2);
                rg[t1.pair][side_index(t1.side)].scaled_add(scale, &d1t_v1);
            }
        }
        if h2 > 0.0 {
            data += h2;
            if let Some(rg) = root_grads.as_mut() {
                rg[i][0].scaled_add(-scale, &d12_u1);
                rg[i][1].scaled_add(scale, &(&d2t_u2 - &d12_u2));
                rg[t2.pair][side_index(t2.side)].scaled_add(scale, &d2t_v2);
            }
        }
    }

    let mut loss = data * scale;
    loss += hp.lambda_w
        * (params.w().iter().map(|x| x * x).sum::<f64>()
            + params.b().iter().map(|x| x * x).sum::<f64>());
    if hp.lambda_ww > 0.0 {
        loss += hp.lambda_ww * squared_frobenius_diff(init.matrix(), set.matrix());
    }

    let grads = match root_grads {
        None => None,
        Some(rg) => {
            let mut out = PhraseGradients {
                w: Array2::zeros(params.w().raw_dim()),
                b: Array1::zeros(params.b().raw_dim()),
                ww: Array2::zeros(set.matrix().raw_dim()),
            };
            for (i, sides) in rg.iter().enumerate() {
                backprop_tree(&forward[i].0, &sides[0], params, &mut out);
                backprop_tree(&forward[i].1, &sides[1], params, &mut out);
            }
            if hp.lambda_w > 0.0 {
                out.w.scaled_add(2.0 * hp.lambda_w, params.w());
                out.b.scaled_add(2.0 * hp.lambda_w, params.b());
            }
            if hp.lambda_ww > 0.0 {
                out.ww += &(2.0 * hp.lambda_ww * (set.matrix() - init.matrix()));
            }
            Some(out)
        }
    };
    Ok((loss, grads))
}

/// Phrase-pair loss for a batch with selected negatives.
pub fn phrase_loss(
    batch: &MiniBatch<ParseTree>,
    params: &CompositionParams,
    set: &EmbeddingSet,
    init: &EmbeddingSet,
    hp: &Hyperparameters,
) -> Result<f64> {
    phrase_objective(batch, params, set, init, hp, false).map(|(loss, _)| loss)
}

/// Exact subgradients of [`phrase_loss`] for `W`, `b`, and the word matrix.
pub fn phrase_gradients(
    batch: &MiniBatch<ParseTree>,
    params: &CompositionParams,
    set: &EmbeddingSet,
    init: &EmbeddingSet,
    hp: &Hyperparameters,
) -> Result<PhraseGradients> {
    phrase_objective(batch, params, set, init, hp, true)
        .map(|(_, grads)| grads.expect("gradients requested"))
}
