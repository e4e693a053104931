//! Word embedding sets: loading, saving, vocabulary capping, case
//! collapsing, and lookup with an unknown-word fallback.
//!
//! The on-disk format is the common text dump: an optional `count dim`
//! header line followed by one `token v1 ... vn` line per word.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

/// Reserved token for the unknown-word slot.
pub const UNKNOWN_TOKEN: &str = "<unk>";

/// An ordered set of unique tokens with a reverse index and a designated
/// unknown-word slot.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
    unk_index: Option<usize>,
}

impl Vocabulary {
    /// Build a vocabulary from unique tokens. The unknown slot is the
    /// position of [`UNKNOWN_TOKEN`] when present, otherwise the last word.
    pub fn new(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::DuplicateToken(w.clone()));
            }
        }
        let unk_index = index
            .get(UNKNOWN_TOKEN)
            .copied()
            .or(words.len().checked_sub(1));
        Ok(Vocabulary {
            words,
            index,
            unk_index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Position of `token`, if present.
    pub fn position(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Position of the unknown-word slot. `None` only for an empty vocabulary.
    pub fn unk_index(&self) -> Option<usize> {
        self.unk_index
    }

    pub fn word(&self, position: usize) -> &str {
        &self.words[position]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// A vocabulary plus its dense embedding matrix (one row per word).
#[derive(Debug, Clone)]
pub struct EmbeddingSet {
    vocab: Vocabulary,
    matrix: Array2<f64>,
}

impl EmbeddingSet {
    /// Assemble a set from parallel words and matrix rows.
    pub fn from_parts(words: Vec<String>, matrix: Array2<f64>) -> Result<Self> {
        if words.len() != matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: words.len(),
                got: matrix.nrows(),
            });
        }
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("non-finite embedding coordinate"));
        }
        let vocab = Vocabulary::new(words)?;
        Ok(EmbeddingSet { vocab, matrix })
    }

    /// An empty set that still remembers its dimensionality.
    pub fn empty(dim: usize) -> Self {
        EmbeddingSet {
            vocab: Vocabulary {
                words: Vec::new(),
                index: HashMap::new(),
                unk_index: None,
            },
            matrix: Array2::zeros((0, dim)),
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Array2<f64> {
        &mut self.matrix
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Row index used for `token`: its own position, or the unknown slot.
    pub fn row_index(&self, token: &str) -> Option<usize> {
        self.vocab.position(token).or(self.vocab.unk_index())
    }

    /// The embedding of `token`; unknown tokens resolve to the unknown slot.
    /// Panics on an empty set, which has no rows to fall back to.
    pub fn lookup(&self, token: &str) -> ArrayView1<'_, f64> {
        let row = self
            .row_index(token)
            .expect("lookup on an empty embedding set");
        self.matrix.row(row)
    }
}

fn parse_float(field: &str, line: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("non-numeric field `{field}`")))
}

struct RawRow {
    token: String,
    values: Vec<f64>,
}

/// Parse embedding lines, skipping an optional `count dim` header.
fn parse_rows(reader: impl BufRead) -> Result<Vec<RawRow>> {
    let mut rows: Vec<RawRow> = Vec::new();
    let mut dim: Option<usize> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if rows.is_empty() && dim.is_none() && fields.len() == 2 {
            // A two-integer first line is a `count dim` header.
            if let (Ok(_), Ok(d)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                dim = Some(d);
                continue;
            }
        }
        if fields.len() < 2 {
            return Err(Error::parse(lineno, "expected `token v1 ... vn`"));
        }
        let token = fields[0].to_string();
        let values = fields[1..]
            .iter()
            .map(|f| parse_float(f, lineno))
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: values.len(),
                })
            }
            _ => {}
        }
        rows.push(RawRow { token, values });
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(rows)
}

fn set_from_rows(rows: Vec<RawRow>) -> Result<EmbeddingSet> {
    let dim = rows[0].values.len();
    let mut matrix = Array2::zeros((rows.len(), dim));
    let mut words = Vec::with_capacity(rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        words.push(row.token);
        matrix.row_mut(i).assign(&Array1::from(row.values));
    }
    EmbeddingSet::from_parts(words, matrix)
}

/// Read an embedding set from a text stream. Duplicate tokens are an error.
pub fn load_embeddings(reader: impl BufRead) -> Result<EmbeddingSet> {
    set_from_rows(parse_rows(reader)?)
}

/// Write a set as a `count dim` header plus one line per word. Values are
/// printed with shortest round-trip formatting, so reloading reproduces the
/// matrix exactly.
pub fn save_embeddings(set: &EmbeddingSet, mut sink: impl Write) -> Result<()> {
    writeln!(sink, "{} {}", set.len(), set.dim())?;
    for (i, word) in set.vocab().words().iter().enumerate() {
        write!(sink, "{word}")?;
        for v in set.matrix().row(i) {
            write!(sink, " {v}")?;
        }
        writeln!(sink)?;
    }
    Ok(())
}

/// Keep the `k` most frequent tokens and fold every dropped row into a fresh
/// `<unk>` row holding their arithmetic mean. With nothing dropped the
/// unknown row is the mean of the retained rows instead.
///
/// `frequency_order` lists tokens from most to least frequent; tokens of the
/// set that it does not mention are treated as infrequent and dropped. A
/// pre-existing `<unk>` row is discarded and replaced.
pub fn cap_vocabulary(
    set: &EmbeddingSet,
    frequency_order: &[String],
    k: usize,
) -> Result<EmbeddingSet> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let mut keep = vec![false; set.len()];
    let mut kept = 0usize;
    for token in frequency_order {
        if kept == k {
            break;
        }
        if token == UNKNOWN_TOKEN {
            continue;
        }
        if let Some(pos) = set.vocab().position(token) {
            if !keep[pos] {
                keep[pos] = true;
                kept += 1;
            }
        }
    }

    let dim = set.dim();
    let mut dropped_sum = Array1::<f64>::zeros(dim);
    let mut dropped_count = 0usize;
    let mut kept_sum = Array1::<f64>::zeros(dim);
    for (i, word) in set.vocab().words().iter().enumerate() {
        if word == UNKNOWN_TOKEN {
            continue;
        }
        if keep[i] {
            kept_sum += &set.matrix().row(i);
        } else {
            dropped_sum += &set.matrix().row(i);
            dropped_count += 1;
        }
    }
    let unk_row = if dropped_count > 0 {
        dropped_sum / dropped_count as f64
    } else if kept > 0 {
        kept_sum / kept as f64
    } else {
        return Err(Error::invalid("no tokens retained by cap"));
    };

    let mut words = Vec::with_capacity(kept + 1);
    let mut matrix = Array2::zeros((kept + 1, dim));
    let mut out = 0usize;
    for (i, word) in set.vocab().words().iter().enumerate() {
        if keep[i] {
            words.push(word.clone());
            matrix.row_mut(out).assign(&set.matrix().row(i));
            out += 1;
        }
    }
    words.push(UNKNOWN_TOKEN.to_string());
    matrix.row_mut(out).assign(&unk_row);
    EmbeddingSet::from_parts(words, matrix)
}

/// Load cased embeddings collapsed to lowercase types: the first occurrence
/// of each lowercased token keeps its vector, later occurrences are dropped.
pub fn case_collapse(reader: impl BufRead) -> Result<EmbeddingSet> {
    let rows = parse_rows(reader)?;
    let mut seen: HashMap<String, ()> = HashMap::new();
    let mut collapsed = Vec::new();
    for row in rows {
        let lower = row.token.to_lowercase();
        if seen.insert(lower.clone(), ()).is_none() {
            collapsed.push(RawRow {
                token: lower,
                values: row.values,
            });
        }
    }
    set_from_rows(collapsed)
}
