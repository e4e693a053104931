//! Dataset construction and filtering: edit distance, lexical-overlap
//! scoring, effective-size binning, deduplication, staged quality filters,
//! seeded sampling, and bigram pair extraction from tagged, aligned
//! phrase pairs.

pub mod records;

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embeddings::Vocabulary;
use crate::error::{Error, Result};

pub use records::{load_records, parse_record_line, save_records, PhrasePairRecord};

/// Unit-cost edit distance (insert / delete / substitute) over characters.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=a.len()).collect();
    for (j, bc) in b.iter().enumerate() {
        let mut prev_diag = row[0];
        row[0] = j + 1;
        for (i, ac) in a.iter().enumerate() {
            let cost = if ac == bc { 0 } else { 1 };
            let next = (prev_diag + cost).min(row[i] + 1).min(row[i + 1] + 1);
            prev_diag = row[i + 1];
            row[i + 1] = next;
        }
    }
    row[a.len()]
}

/// Fraction of the smaller phrase's tokens within edit distance 1 of some
/// token of the larger phrase. Tokens are lowercased first; an equal-length
/// tie treats `p1` as the smaller phrase.
pub fn word_overlap_score(p1: &[String], p2: &[String]) -> Result<f64> {
    if p1.is_empty() || p2.is_empty() {
        return Err(Error::EmptyInput);
    }
    let lower = |p: &[String]| -> Vec<String> { p.iter().map(|t| t.to_lowercase()).collect() };
    let (a, b) = (lower(p1), lower(p2));
    let (small, large) = if a.len() <= b.len() { (&a, &b) } else { (&b, &a) };
    let hits = small
        .iter()
        .filter(|t| large.iter().any(|u| levenshtein(t, u) <= 1))
        .count();
    Ok(hits as f64 / small.len() as f64)
}

/// Larger of the two phrases' counts of tokens longer than one character.
pub fn effective_size(p1: &[String], p2: &[String]) -> usize {
    let count = |p: &[String]| p.iter().filter(|t| t.chars().count() > 1).count();
    count(p1).max(count(p2))
}

fn unordered_key(r: &PhrasePairRecord) -> (String, String) {
    let (s1, s2) = (r.surface1(), r.surface2());
    if s1 <= s2 {
        (s1, s2)
    } else {
        (s2, s1)
    }
}

/// Drop records whose unordered phrase set was already seen (this removes
/// both exact repeats and order-swapped duplicates); first occurrence wins.
pub fn dedup_pairs(records: Vec<PhrasePairRecord>) -> Vec<PhrasePairRecord> {
    let mut seen = HashSet::new();
    records
        .into_iter()
        .filter(|r| seen.insert(unordered_key(r)))
        .collect()
}

/// An effective-size class used for binning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeClass {
    Exactly(usize),
    AtLeast(usize),
}

impl SizeClass {
    pub fn matches(&self, size: usize) -> bool {
        match self {
            SizeClass::Exactly(n) => size == *n,
            SizeClass::AtLeast(n) => size >= *n,
        }
    }
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeClass::Exactly(n) => write!(f, "{n}"),
            SizeClass::AtLeast(n) => write!(f, "{n}+"),
        }
    }
}

/// Configuration of the staged quality filter and the binned sampler.
#[derive(Debug, Clone)]
pub struct FilterConfig {
    /// Keep only records whose every token is in this vocabulary.
    pub vocab: Option<Vocabulary>,
    /// Drop records whose overlap score is `>=` this threshold.
    pub max_overlap: Option<f64>,
    /// Drop records with a digit-bearing token.
    pub drop_digits: bool,
    /// Drop records whose whole phrases are within edit distance 1.
    pub drop_levenshtein: bool,
    /// Effective-size classes for `bin_and_sample`.
    pub size_bins: Vec<SizeClass>,
    /// Records drawn per bin.
    pub per_bin: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            vocab: None,
            max_overlap: Some(0.5),
            drop_digits: true,
            drop_levenshtein: false,
            size_bins: vec![
                SizeClass::Exactly(3),
                SizeClass::Exactly(4),
                SizeClass::AtLeast(5),
            ],
            per_bin: 500,
        }
    }
}

impl FilterConfig {
    /// The bigram-extraction filter: vocabulary, brackets, dedup, and the
    /// whole-phrase edit-distance drop, with no digit or overlap stage.
    pub fn bigram(vocab: Option<Vocabulary>) -> Self {
        FilterConfig {
            vocab,
            max_overlap: None,
            drop_digits: false,
            drop_levenshtein: true,
            ..FilterConfig::default()
        }
    }
}

/// Per-stage drop counts emitted by [`filter_pairs`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterReport {
    pub input: usize,
    pub dropped_vocabulary: usize,
    pub dropped_digits: usize,
    pub dropped_brackets: usize,
    pub dropped_duplicates: usize,
    pub dropped_overlap: usize,
    pub dropped_levenshtein: usize,
    pub kept: usize,
}

impl FilterReport {
    pub fn dropped_total(&self) -> usize {
        self.dropped_vocabulary
            + self.dropped_digits
            + self.dropped_brackets
            + self.dropped_duplicates
            + self.dropped_overlap
            + self.dropped_levenshtein
    }
}

impl fmt::Display for FilterReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input\t{}", self.input)?;
        writeln!(f, "dropped_vocabulary\t{}", self.dropped_vocabulary)?;
        writeln!(f, "dropped_digits\t{}", self.dropped_digits)?;
        writeln!(f, "dropped_brackets\t{}", self.dropped_brackets)?;
        writeln!(f, "dropped_duplicates\t{}", self.dropped_duplicates)?;
        writeln!(f, "dropped_overlap\t{}", self.dropped_overlap)?;
        writeln!(f, "dropped_levenshtein\t{}", self.dropped_levenshtein)?;
        write!(f, "kept\t{}", self.kept)
    }
}

const BRACKET_TOKENS: [&str; 6] = ["(", ")", "[", "]", "-lrb-", "-rrb-"];

fn is_bracket(token: &str) -> bool {
    BRACKET_TOKENS
        .iter()
        .any(|b| token.eq_ignore_ascii_case(b))
}

fn tokens_of(r: &PhrasePairRecord) -> impl Iterator<Item = &String> {
    r.phrase1.iter().chain(r.phrase2.iter())
}

/// Apply the quality stages in order — vocabulary, digits, brackets,
/// dedup, lexical overlap, whole-phrase edit distance — counting the drops
/// of each stage. The kept records are a subsequence of the input.
pub fn filter_pairs(
    records: Vec<PhrasePairRecord>,
    cfg: &FilterConfig,
) -> Result<(Vec<PhrasePairRecord>, FilterReport)> {
    let mut report = FilterReport {
        input: records.len(),
        ..FilterReport::default()
    };
    let mut kept = records;

    if let Some(vocab) = &cfg.vocab {
        let before = kept.len();
        kept.retain(|r| tokens_of(r).all(|t| vocab.contains(t)));
        report.dropped_vocabulary = before - kept.len();
    }
    if cfg.drop_digits {
        let before = kept.len();
        kept.retain(|r| !tokens_of(r).any(|t| t.chars().any(|c| c.is_ascii_digit())));
        report.dropped_digits = before - kept.len();
    }
    {
        let before = kept.len();
        kept.retain(|r| !tokens_of(r).any(|t| is_bracket(t)));
        report.dropped_brackets = before - kept.len();
    }
    {
        let before = kept.len();
        kept = dedup_pairs(kept);
        report.dropped_duplicates = before - kept.len();
    }
    if let Some(max_overlap) = cfg.max_overlap {
        let before = kept.len();
        let mut filtered = Vec::with_capacity(kept.len());
        for r in kept {
            if word_overlap_score(&r.phrase1, &r.phrase2)? < max_overlap {
                filtered.push(r);
            }
        }
        kept = filtered;
        report.dropped_overlap = before - kept.len();
    }
    if cfg.drop_levenshtein {
        let before = kept.len();
        kept.retain(|r| levenshtein(&r.surface1(), &r.surface2()) > 1);
        report.dropped_levenshtein = before - kept.len();
    }

    report.kept = kept.len();
    Ok((kept, report))
}

/// Partition records by effective-size class (first matching class wins)
/// and draw `cfg.per_bin` from each with the seeded generator, keeping
/// every phrase in the output unique. Errors when a bin cannot supply the
/// requested count.
pub fn bin_and_sample(
    records: &[PhrasePairRecord],
    cfg: &FilterConfig,
    seed: u64,
) -> Result<Vec<PhrasePairRecord>> {
    if cfg.per_bin == 0 {
        return Err(Error::invalid("per_bin must be positive"));
    }
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); cfg.size_bins.len()];
    for (i, r) in records.iter().enumerate() {
        let size = effective_size(&r.phrase1, &r.phrase2);
        if let Some(b) = cfg.size_bins.iter().position(|c| c.matches(size)) {
            buckets[b].push(i);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen_phrases: HashSet<String> = HashSet::new();
    let mut out = Vec::with_capacity(cfg.per_bin * cfg.size_bins.len());
    for (b, class) in cfg.size_bins.iter().enumerate() {
        if buckets[b].len() < cfg.per_bin {
            return Err(Error::UnderfullBin {
                bin: class.to_string(),
                need: cfg.per_bin,
                have: buckets[b].len(),
            });
        }
        let mut order = buckets[b].clone();
        order.shuffle(&mut rng);
        let mut taken = 0usize;
        for idx in order {
            if taken == cfg.per_bin {
                break;
            }
            let r = &records[idx];
            let (s1, s2) = (r.surface1(), r.surface2());
            if s1 == s2 || seen_phrases.contains(&s1) || seen_phrases.contains(&s2) {
                continue;
            }
            seen_phrases.insert(s1);
            seen_phrases.insert(s2);
            out.push(r.clone());
            taken += 1;
        }
        if taken < cfg.per_bin {
            return Err(Error::UnderfullBin {
                bin: class.to_string(),
                need: cfg.per_bin,
                have: taken,
            });
        }
    }
    Ok(out)
}

/// Draw up to `per_chunk` records uniformly from each consecutive chunk of
/// `chunk_size` records; short final chunks yield what they hold.
pub fn chunked_sample(
    records: &[PhrasePairRecord],
    chunk_size: usize,
    per_chunk: usize,
    seed: u64,
) -> Result<Vec<PhrasePairRecord>> {
    if chunk_size == 0 {
        return Err(Error::invalid("chunk_size must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for chunk in records.chunks(chunk_size) {
        let mut order: Vec<usize> = (0..chunk.len()).collect();
        order.shuffle(&mut rng);
        order.truncate(per_chunk);
        order.sort_unstable(); // keep file order within the chunk
        out.extend(order.into_iter().map(|i| chunk[i].clone()));
    }
    Ok(out)
}

/// The three bigram patterns extracted for training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BigramKind {
    /// Adjective + noun at aligned, adjacent positions.
    AdjNoun,
    /// Noun + noun at aligned, adjacent positions.
    NounNoun,
    /// Aligned verbs, each paired with the closest following noun.
    VerbNoun,
}

fn tag_is(tags: &[String], i: usize, class: &str) -> bool {
    tags[i].eq_ignore_ascii_case(class)
}

/// Extract bigram pairs of the requested pattern from tagged, aligned
/// records, then apply the bigram quality filter (vocabulary, brackets,
/// dedup, whole-phrase edit distance).
pub fn extract_bigram_pairs(
    records: &[PhrasePairRecord],
    kind: BigramKind,
    vocab: Option<&Vocabulary>,
) -> Result<(Vec<PhrasePairRecord>, FilterReport)> {
    let mut raw = Vec::new();
    for (idx, r) in records.iter().enumerate() {
        let (tags1, tags2, alignment) = match (&r.tags1, &r.tags2, &r.alignment) {
            (Some(t1), Some(t2), Some(a)) => (t1, t2, a),
            _ => {
                return Err(Error::invalid(format!(
                    "record {} lacks tags or alignment",
                    idx + 1
                )))
            }
        };
        let aligned: HashSet<(usize, usize)> = alignment.iter().copied().collect();
        let mut push = |i1: usize, i2: usize, j1: usize, j2: usize| {
            let mut bigram = PhrasePairRecord::new(
                vec![r.phrase1[i1].clone(), r.phrase1[i2].clone()],
                vec![r.phrase2[j1].clone(), r.phrase2[j2].clone()],
            );
            bigram.score = r.score;
            raw.push(bigram);
        };
        match kind {
            BigramKind::AdjNoun | BigramKind::NounNoun => {
                let first = if kind == BigramKind::AdjNoun { "J" } else { "N" };
                for &(i, j) in alignment {
                    if i + 1 < r.phrase1.len()
                        && j + 1 < r.phrase2.len()
                        && aligned.contains(&(i + 1, j + 1))
                        && tag_is(tags1, i, first)
                        && tag_is(tags1, i + 1, "N")
                        && tag_is(tags2, j, first)
                        && tag_is(tags2, j + 1, "N")
                    {
                        push(i, i + 1, j, j + 1);
                    }
                }
            }
            BigramKind::VerbNoun => {
                for &(i, j) in alignment {
                    if !tag_is(tags1, i, "V") || !tag_is(tags2, j, "V") {
                        continue;
                    }
                    let noun_after = |tags: &[String], from: usize| {
                        (from + 1..tags.len()).find(|&k| tag_is(tags, k, "N"))
                    };
                    if let (Some(i2), Some(j2)) = (noun_after(tags1, i), noun_after(tags2, j)) {
                        push(i, i2, j, j2);
                    }
                }
            }
        }
    }
    filter_pairs(raw, &FilterConfig::bigram(vocab.cloned()))
}

/// Mean absolute deviation from the mean.
pub fn mean_deviation(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok(values.iter().map(|v| (v - mean).abs()).sum::<f64>() / n)
}
