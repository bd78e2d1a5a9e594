//! N-gram vocabulary and sparse count features.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Separator used to join token sequences into n-gram keys. Control
/// characters never survive tokenization, so the key space is unambiguous.
const JOIN: char = '\u{1F}';

/// A frozen mapping from unigrams, bigrams, and trigrams to dense feature
/// indices `0..len()`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NgramVocabulary {
    // Ordered so that serialized models are byte-identical across runs.
    index: BTreeMap<String, usize>,
    names: Vec<String>,
    min_count: usize,
}

impl NgramVocabulary {
    /// Fits over tokenized documents, dropping n-grams seen fewer than
    /// `min_count` times in the corpus. Indices are assigned in
    /// lexicographic key order, so fitting is order-independent.
    pub fn fit(docs: &[Vec<String>], min_count: usize) -> NgramVocabulary {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for doc in docs {
            for_each_ngram(doc, |key| {
                *counts.entry(key).or_insert(0) += 1;
            });
        }
        let mut names: Vec<String> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count.max(1))
            .map(|(k, _)| k)
            .collect();
        names.sort_unstable();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i))
            .collect();
        NgramVocabulary {
            index,
            names,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    /// Index of a token sequence of length 1..=3, if it survived fitting.
    pub fn index_of(&self, ngram: &[&str]) -> Option<usize> {
        let key = ngram.join(&JOIN.to_string());
        self.index.get(&key).copied()
    }

    /// Counts every contiguous 1/2/3-gram of `tokens` that exists in the
    /// vocabulary; everything out of vocabulary is ignored.
    pub fn extract(&self, tokens: &[String]) -> FeatureVector {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for_each_ngram(tokens, |key| {
            if let Some(&i) = self.index.get(&key) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        });
        let mut entries: Vec<(usize, f64)> = counts.into_iter().collect();
        entries.sort_unstable_by_key(|(i, _)| *i);
        FeatureVector { entries }
    }
}

fn for_each_ngram(tokens: &[String], mut f: impl FnMut(String)) {
    let n = tokens.len();
    for i in 0..n {
        f(tokens[i].clone());
        if i + 1 < n {
            f(format!("{}{JOIN}{}", tokens[i], tokens[i + 1]));
        }
        if i + 2 < n {
            f(format!(
                "{}{JOIN}{}{JOIN}{}",
                tokens[i],
                tokens[i + 1],
                tokens[i + 2]
            ));
        }
    }
}

/// Sparse feature counts, entries sorted by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, index: usize) -> f64 {
        self.entries
            .iter()
            .find(|(i, _)| *i == index)
            .map(|(_, c)| *c)
            .unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn full_enumeration_of_three_tokens() {
        let d = doc(&["A", "B", "C"]);
        let vocab = NgramVocabulary::fit(std::slice::from_ref(&d), 1);
        assert_eq!(vocab.len(), 6); // A B C AB BC ABC
        let fv = vocab.extract(&d);
        for ngram in [
            vec!["A"],
            vec!["B"],
            vec!["C"],
            vec!["A", "B"],
            vec!["B", "C"],
            vec!["A", "B", "C"],
        ] {
            let idx = vocab.index_of(&ngram).unwrap();
            assert_eq!(fv.count(idx), 1.0, "{ngram:?}");
        }
    }

    #[test]
    fn empty_tokens_empty_vector() {
        let vocab = NgramVocabulary::fit(&[doc(&["A"])], 1);
        assert!(vocab.extract(&[]).is_empty());
    }

    #[test]
    fn repeated_tokens_count() {
        let d = doc(&["A", "A"]);
        let vocab = NgramVocabulary::fit(std::slice::from_ref(&d), 1);
        let fv = vocab.extract(&d);
        assert_eq!(fv.count(vocab.index_of(&["A"]).unwrap()), 2.0);
        assert_eq!(fv.count(vocab.index_of(&["A", "A"]).unwrap()), 1.0);
    }

    #[test]
    fn min_count_prunes_rare_ngrams() {
        let docs = vec![doc(&["x", "y"]), doc(&["x", "z"])];
        let vocab = NgramVocabulary::fit(&docs, 2);
        assert!(vocab.index_of(&["x"]).is_some());
        assert!(vocab.index_of(&["y"]).is_none());
        assert!(vocab.index_of(&["x", "y"]).is_none());
    }

    #[test]
    fn out_of_vocabulary_is_ignored() {
        let vocab = NgramVocabulary::fit(&[doc(&["a", "b"])], 1);
        let fv = vocab.extract(&doc(&["q", "a"]));
        assert_eq!(fv.entries().len(), 1);
        assert_eq!(fv.count(vocab.index_of(&["a"]).unwrap()), 1.0);
    }

    #[test]
    fn indices_are_dense_and_stable() {
        let docs = vec![doc(&["b", "a"]), doc(&["a", "b"])];
        let vocab = NgramVocabulary::fit(&docs, 1);
        let mut seen: Vec<usize> = (0..vocab.len())
            .map(|i| vocab.index_of(&[vocab.names[i].as_str()]).unwrap_or(i))
            .collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), vocab.len());
        // Refit over reordered docs gives the same mapping.
        let vocab2 = NgramVocabulary::fit(&[doc(&["a", "b"]), doc(&["b", "a"])], 1);
        assert_eq!(vocab.names, vocab2.names);
    }
}
