//! Binarized parse trees and phrase composition.
//!
//! A phrase vector is either the element-wise sum of its word vectors or
//! the output of a recursive network that combines the two children of
//! every tree node through `tanh(W [left; right] + b)`.

use std::fmt;
use std::io::{BufRead, Write};

use ndarray::{Array1, Array2};

use crate::embeddings::EmbeddingSet;
use crate::error::{Error, Result};

/// A binarized constituency tree: tokens at the leaves, exactly two
/// children at every internal node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseTree {
    Leaf(String),
    Node(Box<ParseTree>, Box<ParseTree>),
}

impl ParseTree {
    /// Build the right-branching tree over a token sequence; the default
    /// shape for phrases that arrive without a parse. For bigrams this is
    /// the unique binary tree.
    pub fn right_branching(tokens: &[String]) -> Result<ParseTree> {
        match tokens {
            [] => Err(Error::EmptyInput),
            [t] => Ok(ParseTree::Leaf(t.clone())),
            [t, rest @ ..] => Ok(ParseTree::Node(
                Box::new(ParseTree::Leaf(t.clone())),
                Box::new(ParseTree::right_branching(rest)?),
            )),
        }
    }

    /// Leaf tokens in left-to-right order.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ParseTree::Leaf(t) => out.push(t),
            ParseTree::Node(l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }

    /// Surface string: leaves joined by single spaces.
    pub fn surface(&self) -> String {
        self.leaves().join(" ")
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseTree::Leaf(t) => write!(f, "{t}"),
            ParseTree::Node(l, r) => write!(f, "( {l} {r} )"),
        }
    }
}

/// Parse `( T T )` / `token` tree text. Internal nodes must have exactly
/// two children.
pub fn parse_tree_text(input: &str) -> Result<ParseTree> {
    let spaced = input.replace('(', " ( ").replace(')', " ) ");
    let tokens: Vec<&str> = spaced.split_whitespace().collect();
    let mut pos = 0usize;
    let tree = parse_node(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(Error::invalid(format!(
            "trailing input after tree: `{}`",
            tokens[pos..].join(" ")
        )));
    }
    Ok(tree)
}

fn parse_node(tokens: &[&str], pos: &mut usize) -> Result<ParseTree> {
    match tokens.get(*pos) {
        None => Err(Error::EmptyInput),
        Some(&"(") => {
            *pos += 1;
            let mut children = Vec::new();
            while tokens.get(*pos) != Some(&")") {
                if tokens.get(*pos).is_none() {
                    return Err(Error::invalid("unbalanced parentheses"));
                }
                children.push(parse_node(tokens, pos)?);
            }
            *pos += 1; // consume `)`
            if children.len() != 2 {
                return Err(Error::invalid(format!("node arity {}", children.len())));
            }
            let mut it = children.into_iter();
            Ok(ParseTree::Node(
                Box::new(it.next().unwrap()),
                Box::new(it.next().unwrap()),
            ))
        }
        Some(&")") => Err(Error::invalid("unbalanced parentheses")),
        Some(tok) => {
            *pos += 1;
            Ok(ParseTree::Leaf(tok.to_string()))
        }
    }
}

/// Parameters of the recursive composition network: `W` is `n x 2n`, `b`
/// has length `n`, the activation is a fixed element-wise tanh.
#[derive(Debug, Clone)]
pub struct CompositionParams {
    w: Array2<f64>,
    b: Array1<f64>,
}

impl CompositionParams {
    pub fn new(w: Array2<f64>, b: Array1<f64>) -> Result<Self> {
        if w.ncols() != 2 * b.len() || w.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: 2 * b.len(),
                got: w.ncols(),
            });
        }
        if !w.iter().chain(b.iter()).all(|v| v.is_finite()) {
            return Err(Error::invalid("non-finite composition parameter"));
        }
        Ok(CompositionParams { w, b })
    }

    /// Zero matrix and offset; composes every node to the zero vector.
    pub fn zeros(dim: usize) -> Self {
        CompositionParams {
            w: Array2::zeros((dim, 2 * dim)),
            b: Array1::zeros(dim),
        }
    }

    /// Random initialization: uniform in `[-1/sqrt(2n), 1/sqrt(2n)]` for
    /// `W`, zero offset.
    pub fn random(dim: usize, rng: &mut impl rand::Rng) -> Self {
        let scale = 1.0 / (2.0 * dim as f64).sqrt();
        let w = Array2::from_shape_fn((dim, 2 * dim), |_| rng.gen_range(-scale..=scale));
        CompositionParams {
            w,
            b: Array1::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn b(&self) -> &Array1<f64> {
        &self.b
    }

    pub(crate) fn w_mut(&mut self) -> &mut Array2<f64> {
        &mut self.w
    }

    pub(crate) fn b_mut(&mut self) -> &mut Array1<f64> {
        &mut self.b
    }

    /// Write `W` row-major, then `b`, after an `n` header line.
    pub fn save(&self, mut sink: impl Write) -> Result<()> {
        let n = self.dim();
        writeln!(sink, "{n}")?;
        for row in self.w.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(sink, "{}", line.join(" "))?;
        }
        let line: Vec<String> = self.b.iter().map(|v| format!("{v}")).collect();
        writeln!(sink, "{}", line.join(" "))?;
        Ok(())
    }

    pub fn load(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or(Error::EmptyInput)??;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::parse(1, "expected dimension header"))?;
        let mut parse_row = |lineno: usize, expected: usize| -> Result<Vec<f64>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::parse(lineno, "missing parameter row"))??;
            let vals = line
                .split_whitespace()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::parse(lineno, format!("non-numeric field `{f}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if vals.len() != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    got: vals.len(),
                });
            }
            Ok(vals)
        };
        let mut w = Array2::zeros((n, 2 * n));
        for i in 0..n {
            w.row_mut(i).assign(&Array1::from(parse_row(i + 2, 2 * n)?));
        }
        let b = Array1::from(parse_row(n + 2, n)?);
        CompositionParams::new(w, b)
    }
}

/// Element-wise sum of the token vectors.
pub fn compose_additive(tokens: &[String], set: &EmbeddingSet) -> Result<Array1<f64>> {
    if tokens.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sum = Array1::zeros(set.dim());
    for t in tokens {
        sum += &set.lookup(t);
    }
    Ok(sum)
}

/// A tree annotated with the activation vector of every node, kept around
/// so gradients can be pushed back through the same recursion.
#[derive(Debug, Clone)]
pub enum ActivatedTree {
    Leaf {
        row: usize,
        value: Array1<f64>,
    },
    Node {
        left: Box<ActivatedTree>,
        right: Box<ActivatedTree>,
        value: Array1<f64>,
    },
}

impl ActivatedTree {
    pub fn value(&self) -> &Array1<f64> {
        match self {
            ActivatedTree::Leaf { value, .. } | ActivatedTree::Node { value, .. } => value,
        }
    }
}

fn check_dims(params: &CompositionParams, set: &EmbeddingSet) -> Result<()> {
    if params.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: params.dim(),
        });
    }
    Ok(())
}

/// Run the recursive network over `tree`, caching every activation.
/// Leaves take their word vector; each node applies
/// `tanh(W [left; right] + b)`.
pub fn forward_tree(
    tree: &ParseTree,
    params: &CompositionParams,
    set: &EmbeddingSet,
) -> Result<ActivatedTree> {
    check_dims(params, set)?;
    Ok(forward_unchecked(tree, params, set))
}

fn forward_unchecked(
    tree: &ParseTree,
    params: &CompositionParams,
    set: &EmbeddingSet,
) -> ActivatedTree {
    match tree {
        ParseTree::Leaf(token) => {
            let row = set
                .row_index(token)
                .expect("composition over an empty embedding set");
            ActivatedTree::Leaf {
                row,
                value: set.matrix().row(row).to_owned(),
            }
        }
        ParseTree::Node(l, r) => {
            let left = forward_unchecked(l, params, set);
            let right = forward_unchecked(r, params, set);
            let n = params.dim();
            let mut cat = Array1::zeros(2 * n);
            cat.slice_mut(ndarray::s![..n]).assign(left.value());
            cat.slice_mut(ndarray::s![n..]).assign(right.value());
            let value = (params.w.dot(&cat) + &params.b).mapv(f64::tanh);
            ActivatedTree::Node {
                left: Box::new(left),
                right: Box::new(right),
                value,
            }
        }
    }
}

/// Phrase vector of `tree` under the recursive network.
pub fn compose_rnn(
    tree: &ParseTree,
    params: &CompositionParams,
    set: &EmbeddingSet,
) -> Result<Array1<f64>> {
    Ok(forward_tree(tree, params, set)?.value().clone())
}
