//! Part-of-speech frequency features over the Penn Treebank tagset, plus a
//! small built-in fallback tagger for corpora without `.tags` sidecars.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::sparse::SparseVec;

/// A fixed tag inventory. Tags outside the inventory map to the final
/// `OTHER` slot, so every tagged token lands somewhere.
#[derive(Debug, Clone)]
pub struct Tagset {
    tags: Vec<String>,
    index: HashMap<String, usize>,
}

/// The 36 Penn Treebank word-level tags, in their conventional order.
const PTB_TAGS: [&str; 36] = [
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNS", "NNP",
    "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB",
    "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP", "WP$", "WRB",
];

impl Tagset {
    /// Penn Treebank word-level tags followed by a catch-all `OTHER`.
    pub fn penn_treebank() -> Tagset {
        let mut tags: Vec<String> = PTB_TAGS.iter().map(|t| t.to_string()).collect();
        tags.push("OTHER".to_string());
        let index = tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Tagset { tags, index }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    /// Slot of `tag`, or the `OTHER` slot when unknown.
    pub fn slot(&self, tag: &str) -> usize {
        self.index.get(tag).copied().unwrap_or(self.tags.len() - 1)
    }
}

/// Relative tag frequencies of one document: component t is the fraction
/// of tokens carrying tag t, so the entries sum to 1 (or the vector is all
/// zero for an untagged/empty document).
pub fn pos_vector(tags: &[String], tagset: &Tagset) -> SparseVec {
    if tags.is_empty() {
        return SparseVec::zeros(tagset.len());
    }
    let mut counts: HashMap<u32, f64> = HashMap::new();
    for tag in tags {
        *counts.entry(tagset.slot(tag) as u32).or_insert(0.0) += 1.0;
    }
    let n = tags.len() as f64;
    let pairs: Vec<(u32, f64)> = counts.into_iter().map(|(t, c)| (t, c / n)).collect();
    SparseVec::from_pairs(tagset.len(), pairs).expect("slots are within the tagset")
}

/// Words the fallback tagger resolves by lookup before trying suffix rules.
/// Closed-class words dominate review text, so a short list covers most
/// tokens; everything else falls through to `suffix_tag`.
const LEXICON: [(&str, &str); 92] = [
    ("the", "DT"), ("a", "DT"), ("an", "DT"), ("this", "DT"), ("that", "DT"),
    ("these", "DT"), ("those", "DT"), ("all", "DT"), ("some", "DT"), ("any", "DT"),
    ("no", "DT"), ("every", "DT"), ("each", "DT"),
    ("and", "CC"), ("or", "CC"), ("but", "CC"), ("nor", "CC"), ("yet", "CC"),
    ("in", "IN"), ("of", "IN"), ("at", "IN"), ("on", "IN"), ("for", "IN"),
    ("with", "IN"), ("from", "IN"), ("by", "IN"), ("about", "IN"), ("as", "IN"),
    ("into", "IN"), ("after", "IN"), ("before", "IN"), ("during", "IN"),
    ("if", "IN"), ("because", "IN"), ("while", "IN"), ("than", "IN"),
    ("i", "PRP"), ("we", "PRP"), ("you", "PRP"), ("he", "PRP"), ("she", "PRP"),
    ("it", "PRP"), ("they", "PRP"), ("me", "PRP"), ("us", "PRP"), ("him", "PRP"),
    ("her", "PRP"), ("them", "PRP"), ("myself", "PRP"),
    ("my", "PRP$"), ("our", "PRP$"), ("your", "PRP$"), ("his", "PRP$"),
    ("its", "PRP$"), ("their", "PRP$"),
    ("is", "VBZ"), ("was", "VBD"), ("are", "VBP"), ("were", "VBD"), ("be", "VB"),
    ("been", "VBN"), ("being", "VBG"), ("am", "VBP"), ("has", "VBZ"),
    ("have", "VBP"), ("had", "VBD"), ("do", "VBP"), ("does", "VBZ"),
    ("did", "VBD"), ("get", "VB"), ("got", "VBD"),
    ("will", "MD"), ("would", "MD"), ("can", "MD"), ("could", "MD"),
    ("should", "MD"), ("may", "MD"), ("might", "MD"), ("must", "MD"),
    ("not", "RB"), ("very", "RB"), ("too", "RB"), ("so", "RB"), ("just", "RB"),
    ("here", "RB"), ("there", "EX"), ("when", "WRB"), ("where", "WRB"),
    ("how", "WRB"), ("why", "WRB"), ("what", "WP"), ("to", "TO"),
];

/// Suffix-rule guess for open-class words.
fn suffix_tag(token: &str) -> &'static str {
    if token.chars().all(|c| c.is_numeric()) {
        return "CD";
    }
    if token.chars().any(|c| c.is_numeric()) {
        return "CD";
    }
    for (suffix, tag) in [
        ("ing", "VBG"),
        ("ed", "VBD"),
        ("ly", "RB"),
        ("est", "JJS"),
        ("ous", "JJ"),
        ("ful", "JJ"),
        ("ive", "JJ"),
        ("able", "JJ"),
        ("ible", "JJ"),
        ("al", "JJ"),
        ("ness", "NN"),
        ("ment", "NN"),
        ("tion", "NN"),
        ("sion", "NN"),
        ("ity", "NN"),
        ("er", "NN"),
        ("or", "NN"),
    ] {
        if token.len() > suffix.len() + 1 && token.ends_with(suffix) {
            return tag;
        }
    }
    if token.len() > 2 && token.ends_with('s') && !token.ends_with("ss") {
        return "NNS";
    }
    "NN"
}

/// Tags lowercase tokens with the built-in lexicon plus suffix heuristics.
/// Meant as an opt-in stand-in when no sidecar tags ship with the corpus;
/// accuracy is far below a trained tagger's.
pub fn fallback_tag(tokens: &[String]) -> Vec<String> {
    let lexicon: HashMap<&str, &str> = LEXICON.iter().copied().collect();
    tokens
        .iter()
        .map(|tok| {
            lexicon
                .get(tok.as_str())
                .copied()
                .unwrap_or_else(|| suffix_tag(tok))
                .to_string()
        })
        .collect()
}

/// Validates that a tag sequence aligns one-to-one with a token sequence.
pub fn check_alignment(doc_id: &str, tokens: &[String], tags: &[String]) -> Result<()> {
    if tokens.len() != tags.len() {
        return Err(Error::Document {
            doc: doc_id.to_string(),
            reason: format!("{} tokens but {} tags", tokens.len(), tags.len()),
        });
    }
    Ok(())
}
