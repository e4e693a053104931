//! Negative-sampling constraints: for every training word, the words it
//! was paired with and their lemmas may not be chosen as its negatives.

use std::collections::{HashMap, HashSet};

/// Map from word to its forbidden negative candidates.
#[derive(Debug, Clone, Default)]
pub struct ConstraintIndex {
    forbidden: HashMap<String, HashSet<String>>,
}

impl ConstraintIndex {
    pub fn is_empty(&self) -> bool {
        self.forbidden.is_empty()
    }

    pub fn len(&self) -> usize {
        self.forbidden.len()
    }

    pub fn forbidden(&self, word: &str) -> Option<&HashSet<String>> {
        self.forbidden.get(word)
    }

    /// Whether `candidate` may not serve as a negative for `word`.
    pub fn is_forbidden(&self, word: &str, candidate: &str) -> bool {
        self.forbidden
            .get(word)
            .is_some_and(|set| set.contains(candidate))
    }
}

/// Assemble the constraint index from word pairs: each side of a pair
/// forbids the other side and the other side's lemma. The lemma map falls
/// back to identity for unmapped words.
pub fn build_constraints(
    pairs: &[(String, String)],
    lemmas: &HashMap<String, String>,
) -> ConstraintIndex {
    let lemma = |w: &str| lemmas.get(w).cloned().unwrap_or_else(|| w.to_string());
    let mut forbidden: HashMap<String, HashSet<String>> = HashMap::new();
    for (w, v) in pairs {
        let entry = forbidden.entry(w.clone()).or_default();
        entry.insert(v.clone());
        entry.insert(lemma(v));
        let entry = forbidden.entry(v.clone()).or_default();
        entry.insert(w.clone());
        entry.insert(lemma(w));
    }
    ConstraintIndex { forbidden }
}
