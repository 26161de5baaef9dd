//! Shared fixtures for the integration suites: a deterministic synthetic
//! review corpus and independent numerical oracles.

#![allow(dead_code)]

pub mod oracles;

use std::fs;
use std::path::Path;

use rand::prelude::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use opspam_core::corpus::{ClassLabel, Corpus, Document};

pub const DECEPTIVE_POOL: &[&str] = &[
    "my", "husband", "chicago", "visit", "experience", "luxury", "amazing", "wonderful", "will",
    "definitely", "stay", "again", "city", "trip", "vacation",
];
pub const TRUTHFUL_POOL: &[&str] = &[
    "room", "bathroom", "location", "night", "walk", "park", "floor", "elevator", "door",
    "window", "street", "block", "desk", "price", "breakfast",
];
pub const SHARED_POOL: &[&str] = &[
    "hotel", "the", "was", "a", "staff", "service", "bed", "clean", "great", "good", "we", "i",
    "it", "very", "nice",
];

fn synth_text(rng: &mut ChaCha20Rng, pool: &[&str]) -> String {
    let len = rng.random_range(30..=60);
    let mut words = Vec::with_capacity(len);
    for _ in 0..len {
        let from = if rng.random_range(0..5) < 3 { pool } else { SHARED_POOL };
        words.push(*from.choose(rng).expect("non-empty pool"));
    }
    words.join(" ")
}

/// Labeled documents drawn from class-specific and shared word pools, so
/// the classes are separable but overlap.
pub fn synthetic_documents(n_per_class: usize, seed: u64) -> Vec<Document> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(2 * n_per_class);
    for i in 0..n_per_class {
        docs.push(Document::from_text(
            format!("d{i:04}"),
            synth_text(&mut rng, DECEPTIVE_POOL),
            Some(ClassLabel::Deceptive),
        ));
        docs.push(Document::from_text(
            format!("t{i:04}"),
            synth_text(&mut rng, TRUTHFUL_POOL),
            Some(ClassLabel::Truthful),
        ));
    }
    docs
}

pub fn synthetic_corpus(n_per_class: usize, folds: u32, seed: u64) -> Corpus {
    Corpus::from_documents(synthetic_documents(n_per_class, seed), folds, seed)
        .expect("synthetic corpus is well-formed")
}

/// Writes the same synthetic corpus as `<root>/<class>/<id>.txt` files.
pub fn write_synthetic_corpus(root: &Path, n_per_class: usize, seed: u64) {
    for doc in synthetic_documents(n_per_class, seed) {
        let class = match doc.label.unwrap() {
            ClassLabel::Deceptive => "deceptive",
            ClassLabel::Truthful => "truthful",
        };
        let dir = root.join(class);
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join(format!("{}.txt", doc.id)), &doc.text).unwrap();
    }
}
