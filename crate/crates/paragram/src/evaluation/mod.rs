//! Scoring models against human-rated datasets: per-item similarity
//! prediction, rank correlation, and the binned error analyses comparing
//! additive and recursive composition.

pub mod stats;

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use crate::composition::{compose_additive, compose_rnn, CompositionParams, ParseTree};
use crate::embeddings::EmbeddingSet;
use crate::error::{Error, Result};

pub use stats::{
    average_ranks, cosine_similarity, regularized_incomplete_beta, spearman_rho, steiger_test,
    student_t_upper_tail, tuning_criterion,
};

/// What the paired texts are: single words, bigrams, or longer phrases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Word,
    Bigram,
    Phrase,
}

/// One rated text pair.
#[derive(Debug, Clone)]
pub struct ScoredItem {
    pub text1: Vec<String>,
    pub text2: Vec<String>,
    pub gold: f64,
}

/// Text pairs with gold similarity ratings, optionally carrying parse
/// trees for both sides.
#[derive(Debug, Clone)]
pub struct ScoredDataset {
    pub items: Vec<ScoredItem>,
    pub kind: DatasetKind,
    pub trees: Option<Vec<(ParseTree, ParseTree)>>,
}

fn tokenize(s: &str) -> Vec<String> {
    s.split_whitespace().map(|t| t.to_string()).collect()
}

impl ScoredDataset {
    pub fn new(items: Vec<ScoredItem>, kind: DatasetKind) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::EmptyInput);
        }
        for item in &items {
            if !item.gold.is_finite() {
                return Err(Error::invalid("non-finite gold rating"));
            }
            if item.text1.is_empty() || item.text2.is_empty() {
                return Err(Error::invalid("empty text in dataset item"));
            }
        }
        Ok(ScoredDataset {
            items,
            kind,
            trees: None,
        })
    }

    /// Parse `text1 TAB text2 TAB gold` lines.
    pub fn from_tsv(reader: impl BufRead, kind: DatasetKind) -> Result<Self> {
        let mut items = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::parse(i + 1, "expected `text1 TAB text2 TAB gold`"));
            }
            let gold = cols[2]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(i + 1, format!("non-numeric gold `{}`", cols[2])))?;
            items.push(ScoredItem {
                text1: tokenize(cols[0]),
                text2: tokenize(cols[1]),
                gold,
            });
        }
        ScoredDataset::new(items, kind)
    }

    /// Attach one `tree1 TAB tree2` line per item.
    pub fn attach_trees(&mut self, reader: impl BufRead) -> Result<()> {
        let mut trees = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 2 {
                return Err(Error::parse(i + 1, "expected `tree1 TAB tree2`"));
            }
            trees.push((
                crate::composition::parse_tree_text(cols[0])?,
                crate::composition::parse_tree_text(cols[1])?,
            ));
        }
        if trees.len() != self.items.len() {
            return Err(Error::DimensionMismatch {
                expected: self.items.len(),
                got: trees.len(),
            });
        }
        self.trees = Some(trees);
        Ok(())
    }
}

/// Symmetric word-pair resource (e.g. the lexical pairs a model was
/// trained on) used to decide token equivalence.
#[derive(Debug, Clone, Default)]
pub struct PairedWords {
    pairs: HashSet<(String, String)>,
}

impl PairedWords {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: &str, b: &str) {
        self.pairs.insert((a.to_string(), b.to_string()));
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        self.pairs.contains(&(a.to_string(), b.to_string()))
            || self.pairs.contains(&(b.to_string(), a.to_string()))
    }

    /// Parse `word1 TAB word2` lines.
    pub fn from_tsv(reader: impl BufRead) -> Result<Self> {
        let mut out = PairedWords::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 2 {
                return Err(Error::parse(i + 1, "expected `word1 TAB word2`"));
            }
            out.insert(cols[0].trim(), cols[1].trim());
        }
        Ok(out)
    }
}

/// Parse a `word TAB lemma` map.
pub fn load_lemma_map(reader: impl BufRead) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(Error::parse(i + 1, "expected `word TAB lemma`"));
        }
        map.insert(cols[0].trim().to_string(), cols[1].trim().to_string());
    }
    Ok(map)
}

fn lemma<'a>(lemmas: &'a HashMap<String, String>, word: &'a str) -> &'a str {
    lemmas.get(word).map(String::as_str).unwrap_or(word)
}

/// A similarity predictor with its artifacts.
pub enum ScoringModel<'a> {
    Additive {
        set: &'a EmbeddingSet,
    },
    Rnn {
        set: &'a EmbeddingSet,
        params: &'a CompositionParams,
    },
    OverlapStrict,
    OverlapLemma {
        lemmas: &'a HashMap<String, String>,
    },
}

fn strict_overlap(p1: &[String], p2: &[String]) -> Result<f64> {
    if p1.is_empty() || p2.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (small, large) = if p1.len() <= p2.len() { (p1, p2) } else { (p2, p1) };
    let large_set: HashSet<&str> = large.iter().map(String::as_str).collect();
    let hits = small.iter().filter(|t| large_set.contains(t.as_str())).count();
    Ok(hits as f64 / small.len() as f64)
}

impl ScoringModel<'_> {
    /// Similarity of one item: cosine for the vector models, overlap
    /// fraction for the lexical baselines.
    pub fn predict(&self, item: &ScoredItem, trees: Option<&(ParseTree, ParseTree)>) -> Result<f64> {
        match self {
            ScoringModel::Additive { set } => {
                let v1 = compose_additive(&item.text1, set)?;
                let v2 = compose_additive(&item.text2, set)?;
                cosine_similarity(v1.view(), v2.view())
            }
            ScoringModel::Rnn { set, params } => {
                let (t1, t2) = match trees {
                    Some((a, b)) => (a.clone(), b.clone()),
                    None => (
                        ParseTree::right_branching(&item.text1)?,
                        ParseTree::right_branching(&item.text2)?,
                    ),
                };
                let v1 = compose_rnn(&t1, params, set)?;
                let v2 = compose_rnn(&t2, params, set)?;
                cosine_similarity(v1.view(), v2.view())
            }
            ScoringModel::OverlapStrict => strict_overlap(&item.text1, &item.text2),
            ScoringModel::OverlapLemma { lemmas } => {
                let l1: Vec<String> = item.text1.iter().map(|t| lemma(lemmas, t).to_string()).collect();
                let l2: Vec<String> = item.text2.iter().map(|t| lemma(lemmas, t).to_string()).collect();
                strict_overlap(&l1, &l2)
            }
        }
    }
}

/// Spearman correlation of a model's predictions against the gold column.
#[derive(Debug, Clone)]
pub struct CorrelationReport {
    pub rho: f64,
    pub n: usize,
}

/// Per-item similarities for a whole dataset, in item order.
pub fn predict_dataset(ds: &ScoredDataset, model: &ScoringModel<'_>) -> Result<Vec<f64>> {
    ds.items
        .iter()
        .enumerate()
        .map(|(i, item)| model.predict(item, ds.trees.as_ref().map(|t| &t[i])))
        .collect()
}

/// Predict every item and correlate with gold.
pub fn score_dataset(ds: &ScoredDataset, model: &ScoringModel<'_>) -> Result<CorrelationReport> {
    let predictions = predict_dataset(ds, model)?;
    let gold: Vec<f64> = ds.items.iter().map(|i| i.gold).collect();
    Ok(CorrelationReport {
        rho: spearman_rho(&predictions, &gold)?,
        n: ds.items.len(),
    })
}

/// Collapse a 1-5 gold scale by merging the top two and bottom two
/// bands: ratings of 4 and above become 4, ratings of 2 and below
/// become 2, the middle stays as is.
pub fn collapse_rating_scale(ds: &mut ScoredDataset) {
    for item in &mut ds.items {
        item.gold = item.gold.clamp(2.0, 4.0);
    }
}

/// Affine map from cosine in `[-1, 1]` to the `[1, 5]` rating scale.
pub fn map_to_rating_scale(cos: f64) -> Result<f64> {
    if !(-1.0 - 1e-9..=1.0 + 1e-9).contains(&cos) {
        return Err(Error::invalid(format!("cosine {cos} outside [-1, 1]")));
    }
    Ok(2.0 * cos.clamp(-1.0, 1.0) + 3.0)
}

/// Alternative per-dataset rescaling: the observed `[min, max]` of the
/// similarities maps onto `[1, 5]`; a constant list maps to the midpoint.
pub fn map_to_rating_scale_minmax(similarities: &[f64]) -> Vec<f64> {
    let min = similarities.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = similarities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max - min).is_normal() {
        return vec![3.0; similarities.len()];
    }
    similarities
        .iter()
        .map(|s| 1.0 + 4.0 * (s - min) / (max - min))
        .collect()
}

/// Token-count ratio of the smaller phrase to the larger.
pub fn length_ratio(p1: &[String], p2: &[String]) -> Result<f64> {
    if p1.is_empty() || p2.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (a, b) = (p1.len() as f64, p2.len() as f64);
    Ok(a.min(b) / a.max(b))
}

/// Share of the smaller phrase's tokens that are equivalent to a token of
/// the larger: exact matches, or pairs listed (in either order) in the
/// word-pair resource.
pub fn overlap_ratio(p1: &[String], p2: &[String], paired: &PairedWords) -> Result<f64> {
    if p1.is_empty() || p2.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (small, large) = if p1.len() <= p2.len() { (p1, p2) } else { (p2, p1) };
    let large_set: HashSet<&str> = large.iter().map(String::as_str).collect();
    let hits = small
        .iter()
        .filter(|t| {
            large_set.contains(t.as_str()) || large.iter().any(|u| paired.contains(t, u))
        })
        .count();
    Ok(hits as f64 / small.len() as f64)
}

/// How items are grouped in the error analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisBins {
    Gold,
    LengthRatio,
    OverlapRatio,
}

/// Mean absolute error of two systems inside one gold-score bin.
#[derive(Debug, Clone)]
pub struct GoldErrorRow {
    pub label: String,
    pub count: usize,
    pub mae_a: f64,
    pub mae_b: f64,
}

/// Percent change in mean absolute error from system `a` to system `b`,
/// per ratio bin, for the positive / negative / combined extreme subsets.
/// `None` marks an empty bin or an undefined (zero-baseline) change.
#[derive(Debug, Clone)]
pub struct RatioChangeRow {
    pub label: String,
    pub positive: Option<f64>,
    pub negative: Option<f64>,
    pub both: Option<f64>,
}

/// Either shape of analysis table.
#[derive(Debug, Clone)]
pub enum AnalysisTable {
    Gold(Vec<GoldErrorRow>),
    RatioChange(Vec<RatioChangeRow>),
}

const GOLD_BINS: [(f64, f64, &str); 4] = [
    (1.0, 2.0, "[1,2)"),
    (2.0, 3.0, "[2,3)"),
    (3.0, 4.0, "[3,4)"),
    (4.0, 5.0, "[4,5]"),
];

fn gold_bin(gold: f64) -> Option<usize> {
    if !(1.0..=5.0).contains(&gold) {
        return None;
    }
    if gold == 5.0 {
        return Some(3);
    }
    GOLD_BINS.iter().position(|(lo, hi, _)| gold >= *lo && gold < *hi)
}

const LENGTH_BINS: [&str; 3] = ["[0,0.6]", "(0.6,0.8]", "(0.8,1]"];
const OVERLAP_BINS: [&str; 3] = ["[0,1/3]", "(1/3,2/3]", "(2/3,1]"];

fn third_bin(r: f64, thresholds: (f64, f64)) -> usize {
    if r <= thresholds.0 {
        0
    } else if r <= thresholds.1 {
        1
    } else {
        2
    }
}

fn validate_predictions(ds: &ScoredDataset, preds: &[f64]) -> Result<()> {
    if preds.len() != ds.items.len() {
        return Err(Error::DimensionMismatch {
            expected: ds.items.len(),
            got: preds.len(),
        });
    }
    if preds.iter().any(|p| !(1.0 - 1e-9..=5.0 + 1e-9).contains(p)) {
        return Err(Error::invalid("predictions must be mapped to [1, 5]"));
    }
    Ok(())
}

fn mean_abs_error(items: &[(f64, f64)]) -> f64 {
    items.iter().map(|(p, g)| (p - g).abs()).sum::<f64>() / items.len() as f64
}

/// Mean absolute error of both systems per gold bin. Empty bins are
/// absent from the table.
pub fn gold_error_table(
    ds: &ScoredDataset,
    preds_a: &[f64],
    preds_b: &[f64],
) -> Result<Vec<GoldErrorRow>> {
    validate_predictions(ds, preds_a)?;
    validate_predictions(ds, preds_b)?;
    let mut bins: [Vec<(f64, f64, f64)>; 4] = Default::default();
    for (i, item) in ds.items.iter().enumerate() {
        if let Some(b) = gold_bin(item.gold) {
            bins[b].push((preds_a[i], preds_b[i], item.gold));
        }
    }
    Ok(bins
        .iter()
        .enumerate()
        .filter(|(_, bin)| !bin.is_empty())
        .map(|(i, bin)| {
            let a: Vec<(f64, f64)> = bin.iter().map(|(pa, _, g)| (*pa, *g)).collect();
            let b: Vec<(f64, f64)> = bin.iter().map(|(_, pb, g)| (*pb, *g)).collect();
            GoldErrorRow {
                label: GOLD_BINS[i].2.to_string(),
                count: bin.len(),
                mae_a: mean_abs_error(&a),
                mae_b: mean_abs_error(&b),
            }
        })
        .collect())
}

fn percent_change(items: &[(f64, f64, f64)]) -> Option<f64> {
    if items.is_empty() {
        return None;
    }
    let a: Vec<(f64, f64)> = items.iter().map(|(pa, _, g)| (*pa, *g)).collect();
    let b: Vec<(f64, f64)> = items.iter().map(|(_, pb, g)| (*pb, *g)).collect();
    let mae_a = mean_abs_error(&a);
    if mae_a == 0.0 {
        return None;
    }
    Some(100.0 * (mean_abs_error(&b) - mae_a) / mae_a)
}

/// Percent-change table over length-ratio or overlap-ratio bins, computed
/// on the extreme-gold subsets: positive (gold > 4), negative (gold < 2),
/// and their union.
pub fn ratio_change_table(
    ds: &ScoredDataset,
    preds_a: &[f64],
    preds_b: &[f64],
    bins: AnalysisBins,
    paired: Option<&PairedWords>,
) -> Result<Vec<RatioChangeRow>> {
    validate_predictions(ds, preds_a)?;
    validate_predictions(ds, preds_b)?;
    let (labels, thresholds) = match bins {
        AnalysisBins::LengthRatio => (LENGTH_BINS, (0.6, 0.8)),
        AnalysisBins::OverlapRatio => (OVERLAP_BINS, (1.0 / 3.0, 2.0 / 3.0)),
        AnalysisBins::Gold => {
            return Err(Error::invalid("gold bins have no percent-change form"))
        }
    };
    let mut positive: [Vec<(f64, f64, f64)>; 3] = Default::default();
    let mut negative: [Vec<(f64, f64, f64)>; 3] = Default::default();
    for (i, item) in ds.items.iter().enumerate() {
        let ratio = match bins {
            AnalysisBins::LengthRatio => length_ratio(&item.text1, &item.text2)?,
            AnalysisBins::OverlapRatio => {
                let paired = paired.ok_or_else(|| {
                    Error::invalid("overlap-ratio bins need a paired-words resource")
                })?;
                overlap_ratio(&item.text1, &item.text2, paired)?
            }
            AnalysisBins::Gold => unreachable!(),
        };
        let b = third_bin(ratio, thresholds);
        if item.gold > 4.0 {
            positive[b].push((preds_a[i], preds_b[i], item.gold));
        } else if item.gold < 2.0 {
            negative[b].push((preds_a[i], preds_b[i], item.gold));
        }
    }
    Ok((0..3)
        .map(|b| {
            let mut both = positive[b].clone();
            both.extend_from_slice(&negative[b]);
            RatioChangeRow {
                label: labels[b].to_string(),
                positive: percent_change(&positive[b]),
                negative: percent_change(&negative[b]),
                both: percent_change(&both),
            }
        })
        .collect())
}

/// Dispatch to the table matching `bins`.
pub fn binned_error_analysis(
    ds: &ScoredDataset,
    preds_a: &[f64],
    preds_b: &[f64],
    bins: AnalysisBins,
    paired: Option<&PairedWords>,
) -> Result<AnalysisTable> {
    match bins {
        AnalysisBins::Gold => Ok(AnalysisTable::Gold(gold_error_table(ds, preds_a, preds_b)?)),
        _ => Ok(AnalysisTable::RatioChange(ratio_change_table(
            ds, preds_a, preds_b, bins, paired,
        )?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::load_embeddings;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn strict_overlap_paper_pair() {
        // "to" is the only token of the 3-token side found verbatim.
        let v = strict_overlap(&toks("at no cost to"), &toks("without charge to")).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn strict_overlap_identical_phrases() {
        let v = strict_overlap(&toks("the same thing"), &toks("the same thing")).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn lemma_overlap_uses_map() {
        let mut lemmas = HashMap::new();
        lemmas.insert("running".to_string(), "run".to_string());
        lemmas.insert("ran".to_string(), "run".to_string());
        let model = ScoringModel::OverlapLemma { lemmas: &lemmas };
        let item = ScoredItem {
            text1: toks("ran fast"),
            text2: toks("running fast"),
            gold: 4.0,
        };
        assert_eq!(model.predict(&item, None).unwrap(), 1.0);
    }

    #[test]
    fn score_dataset_identical_pairs_errors() {
        // Constant predictions leave no rank variance.
        let ds = ScoredDataset::from_tsv(
            Cursor::new("a b\ta b\t5\nc d\tc d\t1\ne f\te f\t3\n"),
            DatasetKind::Phrase,
        )
        .unwrap();
        let err = score_dataset(&ds, &ScoringModel::OverlapStrict).unwrap_err();
        assert!(matches!(err, Error::DegenerateCorrelation(_)));
    }

    #[test]
    fn score_dataset_orders_by_overlap() {
        let ds = ScoredDataset::from_tsv(
            Cursor::new(
                "a b c\ta b c\t5\n\
                 a b c\ta b x\t4\n\
                 a b c\ta x y\t3\n\
                 a b c\tx y z\t1\n",
            ),
            DatasetKind::Phrase,
        )
        .unwrap();
        let report = score_dataset(&ds, &ScoringModel::OverlapStrict).unwrap();
        assert_eq!(report.n, 4);
        assert_abs_diff_eq!(report.rho, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn additive_model_scores() {
        let set =
            load_embeddings(Cursor::new("a 1 0\nb 0 1\nc 1 1\n")).unwrap();
        let model = ScoringModel::Additive { set: &set };
        let item = ScoredItem {
            text1: toks("a b"),
            text2: toks("c"),
            gold: 5.0,
        };
        let sim = model.predict(&item, None).unwrap();
        assert_abs_diff_eq!(sim, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn collapse_merges_extreme_bands() {
        let mut ds = ScoredDataset::from_tsv(
            Cursor::new("a\tb\t1\nc\td\t1.5\ne\tf\t2\ng\th\t3\ni\tj\t4\nk\tl\t4.5\nm\tn\t5\n"),
            DatasetKind::Word,
        )
        .unwrap();
        collapse_rating_scale(&mut ds);
        let gold: Vec<f64> = ds.items.iter().map(|i| i.gold).collect();
        assert_eq!(gold, vec![2.0, 2.0, 2.0, 3.0, 4.0, 4.0, 4.0]);
    }

    #[test]
    fn rating_scale_endpoints() {
        assert_eq!(map_to_rating_scale(-1.0).unwrap(), 1.0);
        assert_eq!(map_to_rating_scale(1.0).unwrap(), 5.0);
        assert_eq!(map_to_rating_scale(0.0).unwrap(), 3.0);
        assert!(map_to_rating_scale(1.5).is_err());
    }

    #[test]
    fn rating_scale_minmax() {
        let mapped = map_to_rating_scale_minmax(&[0.2, 0.4, 0.6]);
        for (got, want) in mapped.iter().zip([1.0, 3.0, 5.0]) {
            assert_abs_diff_eq!(got, &want, epsilon = 1e-12);
        }
        assert_eq!(map_to_rating_scale_minmax(&[0.5, 0.5]), vec![3.0, 3.0]);
    }

    #[test]
    fn length_ratio_paper_rows() {
        assert_abs_diff_eq!(
            length_ratio(&toks("could have an impact on"), &toks("may influence")).unwrap(),
            0.4,
            epsilon = 1e-15
        );
        assert_eq!(
            length_ratio(&toks("scheduled to be held in"), &toks("that will take place in"))
                .unwrap(),
            1.0
        );
        assert_eq!(length_ratio(&toks("a b"), &toks("c d")).unwrap(), 1.0);
    }

    #[test]
    fn overlap_ratio_paper_rows() {
        let mut paired = PairedWords::new();
        paired.insert("at", "without");
        paired.insert("cost", "charge");
        let v = overlap_ratio(&toks("at no cost to"), &toks("without charge to"), &paired);
        // smaller side "without charge to": paired, paired, exact.
        assert_eq!(v.unwrap(), 1.0);
        let empty = PairedWords::new();
        assert_eq!(
            overlap_ratio(&toks("earliest opportunity"), &toks("early as possible"), &empty)
                .unwrap(),
            0.0
        );
        assert_eq!(
            overlap_ratio(&toks("a b"), &toks("a b"), &empty).unwrap(),
            1.0
        );
    }

    fn analysis_ds() -> ScoredDataset {
        ScoredDataset::from_tsv(
            Cursor::new("a b\tc d\t5\ne f\tg h\t5\ni j\tk l\t1.5\n"),
            DatasetKind::Phrase,
        )
        .unwrap()
    }

    #[test]
    fn gold_table_constant_predictors() {
        // Constant predictors 3 and 4 against gold 5: errors 2 and 1.
        let ds = analysis_ds();
        let rows = gold_error_table(&ds, &[3.0, 3.0, 3.0], &[4.0, 4.0, 4.0]).unwrap();
        let top = rows.iter().find(|r| r.label == "[4,5]").unwrap();
        assert_eq!(top.count, 2);
        assert_abs_diff_eq!(top.mae_a, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(top.mae_b, 1.0, epsilon = 1e-15);
        // Bins [2,3) and [3,4) are empty and therefore absent.
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn gold_table_perfect_predictions() {
        let ds = analysis_ds();
        let gold: Vec<f64> = ds.items.iter().map(|i| i.gold).collect();
        let rows = gold_error_table(&ds, &gold, &gold).unwrap();
        for row in rows {
            assert_eq!(row.mae_a, 0.0);
            assert_eq!(row.mae_b, 0.0);
        }
    }

    #[test]
    fn ratio_table_percent_change() {
        let ds = analysis_ds(); // all length ratios are 1.0 -> bin (0.8,1]
        let rows = ratio_change_table(
            &ds,
            &[3.0, 3.0, 3.0],
            &[4.0, 4.0, 4.0],
            AnalysisBins::LengthRatio,
            None,
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        let last = &rows[2];
        assert_abs_diff_eq!(last.positive.unwrap(), -50.0, epsilon = 1e-12);
        // negative subset: |3-1.5|=1.5 vs |4-1.5|=2.5 -> +66.67%
        assert_abs_diff_eq!(last.negative.unwrap(), 100.0 * (2.5 - 1.5) / 1.5, epsilon = 1e-12);
        assert!(rows[0].positive.is_none());
    }

    #[test]
    fn ratio_table_perfect_baseline_is_absent() {
        let ds = analysis_ds();
        let gold: Vec<f64> = ds.items.iter().map(|i| i.gold).collect();
        let rows =
            ratio_change_table(&ds, &gold, &gold, AnalysisBins::LengthRatio, None).unwrap();
        assert!(rows.iter().all(|r| r.positive.is_none() && r.negative.is_none()));
    }

    proptest! {
        #[test]
        fn ratios_symmetric(
            n1 in 1usize..6, n2 in 1usize..6, seed in 0u64..50,
        ) {
            // distinct token universes keyed by the seed
            let p1: Vec<String> = (0..n1).map(|i| format!("w{}", (seed + i as u64) % 23)).collect();
            let p2: Vec<String> = (0..n2).map(|i| format!("w{}", (seed * 7 + i as u64) % 23)).collect();
            prop_assert_eq!(
                length_ratio(&p1, &p2).unwrap(),
                length_ratio(&p2, &p1).unwrap()
            );
            if n1 != n2 {
                let paired = PairedWords::new();
                prop_assert_eq!(
                    overlap_ratio(&p1, &p2, &paired).unwrap(),
                    overlap_ratio(&p2, &p1, &paired).unwrap()
                );
            }
        }

        #[test]
        fn rating_scale_strictly_increasing(a in -1000i32..=1000, b in -1000i32..=1000) {
            let (x, y) = ((a as f64) / 1000.0, (b as f64) / 1000.0);
            if x < y {
                prop_assert!(map_to_rating_scale(x).unwrap() < map_to_rating_scale(y).unwrap());
            }
        }
    }
}
