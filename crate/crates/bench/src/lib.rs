//! Fixtures shared by the criterion benches.

use std::collections::BTreeMap;

use ontovec_core::store::LabelEntry;
use ontovec_core::{ConceptIndex, LabelSet, ModelKind, VectorsDocument};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_vector(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// `n` concepts of dimension `d` keyed `BENCH:{i:07}`, labelled `concept {i}`.
pub fn concept_index(n: usize, d: usize, seed: u64) -> ConceptIndex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors: BTreeMap<String, Vec<f64>> = (0..n)
        .map(|i| (format!("BENCH:{i:07}"), random_vector(&mut rng, d)))
        .collect();
    let labels = LabelSet::new(
        vectors
            .keys()
            .enumerate()
            .map(|(i, iri)| LabelEntry {
                iri: iri.clone(),
                label: format!("concept {i}"),
                ..Default::default()
            })
            .collect(),
    );
    let doc = VectorsDocument {
        dimension: d,
        kg: "bench".into(),
        model: ModelKind::TransE,
        vectors,
        version: "bench".into(),
    };
    ConceptIndex::new(&doc, &labels).expect("finite random vectors")
}
