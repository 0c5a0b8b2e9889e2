//! Central finite-difference checks of analytic gradients.
//!
//! The relative error of two gradients is `‖a − n‖ / max(‖a‖, ‖n‖)` over the
//! full flattened parameter vector, and 0 when both vanish.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{EntityRecord, KnowledgeGraph, RelationRecord};
use crate::models::{ModelArtifact, ModelConfig, ModelKind, Norm, ParamRef};
use crate::rdf2vec::{skipgram_pair_grad, skipgram_pair_loss};

pub const DEFAULT_EPS: f64 = 1e-5;

pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = analytic
        .iter()
        .map(|a| a * a)
        .sum::<f64>()
        .sqrt()
        .max(numeric.iter().map(|n| n * n).sum::<f64>().sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// `(f(x + εeᵢ) − f(x − εeᵢ)) / 2ε` for every coordinate `i`.
pub fn numeric_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + eps;
            let up = f(&probe);
            probe[i] = x[i] - eps;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// An artifact over `entities` entities and `relations` relations whose every
/// parameter is drawn uniformly from `[-1, 1]`.
pub fn random_artifact(
    kind: ModelKind,
    norm: Norm,
    dimension: usize,
    entities: usize,
    relations: usize,
    seed: u64,
) -> ModelArtifact {
    let ents: Vec<EntityRecord> = (0..entities).map(|i| EntityRecord::new(format!("X:{i}"))).collect();
    let rels: Vec<RelationRecord> = (0..relations).map(|i| RelationRecord::new(format!("r{i}"))).collect();
    let triples = vec![("X:0".to_string(), "r0".to_string(), "X:1".to_string())];
    let graph = KnowledgeGraph::build(ents, rels, &triples).expect("valid synthetic graph");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut config = ModelConfig::new(kind, dimension);
    config.transe_norm = norm;
    let mut artifact = ModelArtifact::init(&graph, config, &mut rng).expect("scoring model");
    for table in artifact.tables() {
        for x in artifact.table_mut(table).expect("listed table").as_mut_slice() {
            *x = rng.random_range(-1.0..1.0);
        }
    }
    artifact
}

/// Relative error between [`ModelArtifact::gradient`] and central differences
/// of [`ModelArtifact::score`], taken over every parameter of the artifact.
pub fn model_gradient_error(artifact: &ModelArtifact, h: usize, r: usize, t: usize, eps: f64) -> f64 {
    let mut analytic_rows: HashMap<ParamRef, Vec<f64>> = HashMap::new();
    for (p, g) in artifact.gradient(h, r, t).entries {
        let acc = analytic_rows.entry(p).or_insert_with(|| vec![0.0; g.len()]);
        for (a, x) in acc.iter_mut().zip(&g) {
            *a += x;
        }
    }
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    let mut probe = artifact.clone();
    for table in artifact.tables() {
        let matrix = artifact.table(table).expect("listed table");
        for row in 0..matrix.rows() {
            let p = ParamRef::new(table, row);
            let base = matrix.row(row).to_vec();
            let n = numeric_gradient(
                |x| {
                    probe.param_mut(p).copy_from_slice(x);
                    probe.score(h, r, t)
                },
                &base,
                eps,
            );
            probe.param_mut(p).copy_from_slice(&base);
            numeric.extend(n);
            match analytic_rows.get(&p) {
                Some(g) => analytic.extend_from_slice(g),
                None => analytic.extend(std::iter::repeat_n(0.0, base.len())),
            }
        }
    }
    relative_error(&analytic, &numeric)
}

/// Relative error of the skip-gram negative-sampling gradient for one random
/// `(center, context, negatives)` example.
pub fn skipgram_gradient_error(dimension: usize, negatives: usize, seed: u64, eps: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        (0..dimension)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect::<Vec<f64>>()
    };
    let center = draw();
    let context = draw();
    let negs: Vec<Vec<f64>> = (0..negatives).map(|_| draw()).collect();

    // Flatten [center | context | negatives...].
    let mut x = center.clone();
    x.extend(&context);
    for n in &negs {
        x.extend(n);
    }
    let loss = |x: &[f64]| {
        let (c, rest) = x.split_at(dimension);
        let (o, ns) = rest.split_at(dimension);
        let neg_rows: Vec<&[f64]> = ns.chunks(dimension).collect();
        skipgram_pair_loss(c, o, &neg_rows)
    };
    let numeric = numeric_gradient(loss, &x, eps);

    let neg_rows: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
    let g = skipgram_pair_grad(&center, &context, &neg_rows);
    let mut analytic = g.center;
    analytic.extend(g.context);
    for n in g.negatives {
        analytic.extend(n);
    }
    relative_error(&analytic, &numeric)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_gradient_of_quadratic() {
        let g = numeric_gradient(|x| x[0] * x[0] + 3.0 * x[1], &[2.0, -1.0], 1e-5);
        assert!((g[0] - 4.0).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn relative_error_detects_mismatch() {
        assert_eq!(relative_error(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert!(relative_error(&[1.0, 0.0], &[1.0, 0.0]) < 1e-15);
        assert!(relative_error(&[1.0, 0.0], &[-1.0, 0.0]) > 1.0);
    }

    #[test]
    fn random_artifacts_are_seeded() {
        let a = random_artifact(ModelKind::BoxE, Norm::L2, 4, 3, 2, 9);
        let b = random_artifact(ModelKind::BoxE, Norm::L2, 4, 3, 2, 9);
        assert_eq!(a, b);
    }
}
