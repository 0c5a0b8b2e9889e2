//! RDF2Vec: random walks over the graph form a sentence corpus, which a
//! skip-gram model with negative sampling turns into token vectors.
//!
//! Walks follow edge direction only and interleave relation tokens:
//! `[e0, r1, e1, r2, e2, ...]`. Duplicate walks from the same start entity are
//! removed. Each start entity draws from its own ChaCha stream, so the corpus
//! does not depend on how walk generation is parallelized.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::KnowledgeGraph;
use crate::models::{dot, Matrix, ModelArtifact, ModelConfig, ModelKind, RelationParams};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    pub walks_per_entity: usize,
    /// Maximum number of hops.
    pub depth: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walks_per_entity: 10,
            depth: 4,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramConfig {
    pub dimension: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub min_lr: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        Self {
            dimension: 200,
            window: 5,
            negatives: 5,
            epochs: 100,
            initial_lr: 0.025,
            min_lr: 1e-4,
            seed: 42,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walks_per_entity < 1 || self.depth < 1 {
            return Err(Error::InvalidConfig(
                "walks_per_entity and depth must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 1 || self.negatives < 1 || self.dimension < 1 || self.epochs < 1 {
            return Err(Error::InvalidConfig(
                "window, negatives, dimension and epochs must be at least 1".into(),
            ));
        }
        if self.initial_lr.is_nan() || self.initial_lr <= 0.0 || self.min_lr.is_nan() || self.min_lr < 0.0 {
            return Err(Error::InvalidConfig("invalid learning-rate schedule".into()));
        }
        Ok(())
    }
}

/// Per-source RDF2Vec settings. Dimension, epochs and seed are taken from the
/// source's training config so every model of a version shares them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rdf2VecConfig {
    pub walks_per_entity: usize,
    pub depth: usize,
    pub window: usize,
    pub negatives: usize,
    pub initial_lr: f64,
    pub min_lr: f64,
}

impl Default for Rdf2VecConfig {
    fn default() -> Self {
        let w = WalkConfig::default();
        let s = SkipGramConfig::default();
        Self {
            walks_per_entity: w.walks_per_entity,
            depth: w.depth,
            window: s.window,
            negatives: s.negatives,
            initial_lr: s.initial_lr,
            min_lr: s.min_lr,
        }
    }
}

impl Rdf2VecConfig {
    pub fn walk_config(&self, seed: u64) -> WalkConfig {
        WalkConfig {
            walks_per_entity: self.walks_per_entity,
            depth: self.depth,
            seed,
        }
    }

    pub fn skipgram_config(&self, dimension: usize, epochs: usize, seed: u64) -> SkipGramConfig {
        SkipGramConfig {
            dimension,
            window: self.window,
            negatives: self.negatives,
            epochs,
            initial_lr: self.initial_lr,
            min_lr: self.min_lr,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.walk_config(0).validate()?;
        self.skipgram_config(1, 1, 0).validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Entity(usize),
    Relation(usize),
}

pub type Walk = Vec<Token>;

fn walks_from(graph: &KnowledgeGraph, start: usize, config: &WalkConfig) -> Vec<Walk> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(start as u64);
    let mut seen = HashSet::new();
    let mut walks = Vec::new();
    for _ in 0..config.walks_per_entity {
        let mut walk = vec![Token::Entity(start)];
        let mut current = start;
        for _ in 0..config.depth {
            let edges = graph.out_edges(current);
            if edges.is_empty() {
                break;
            }
            let (r, t) = edges[rng.random_range(0..edges.len())];
            walk.push(Token::Relation(r));
            walk.push(Token::Entity(t));
            current = t;
        }
        if seen.insert(walk.clone()) {
            walks.push(walk);
        }
    }
    walks
}

/// Walks for every non-obsolete entity, grouped by start entity in index order.
pub fn generate_walks(graph: &KnowledgeGraph, config: &WalkConfig) -> Vec<Walk> {
    let starts: Vec<usize> = (0..graph.num_entities())
        .filter(|&i| !graph.entities()[i].obsolete)
        .collect();
    starts
        .par_iter()
        .map(|&s| walks_from(graph, s, config))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// One walk per line, IRIs separated by single spaces.
pub fn corpus_dump(graph: &KnowledgeGraph, walks: &[Walk]) -> String {
    let mut out = String::new();
    for walk in walks {
        let line: Vec<&str> = walk
            .iter()
            .map(|t| match *t {
                Token::Entity(i) => graph.entities()[i].iri.as_str(),
                Token::Relation(r) => graph.relations()[r].iri.as_str(),
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn log_sigmoid(x: f64) -> f64 {
    // -softplus(-x)
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

fn sigmoid(x: f64) -> f64 {
    crate::models::boxe::sigmoid(x)
}

/// Negative-sampling loss of one (center, context, negatives) example:
/// `-log σ(u_o·v_c) - Σ log σ(-u_n·v_c)`.
pub fn skipgram_pair_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    let mut loss = -log_sigmoid(dot(context, center));
    for n in negatives {
        loss -= log_sigmoid(-dot(n, center));
    }
    loss
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramGrad {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn skipgram_pair_grad(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> SkipGramGrad {
    let pos = sigmoid(dot(context, center)) - 1.0;
    let mut g_center: Vec<f64> = context.iter().map(|u| pos * u).collect();
    let g_context = center.iter().map(|v| pos * v).collect();
    let mut g_negatives = Vec::with_capacity(negatives.len());
    for n in negatives {
        let s = sigmoid(dot(n, center));
        for (g, u) in g_center.iter_mut().zip(n.iter()) {
            *g += s * u;
        }
        g_negatives.push(center.iter().map(|v| s * v).collect());
    }
    SkipGramGrad {
        center: g_center,
        context: g_context,
        negatives: g_negatives,
    }
}

#[derive(Debug, Clone)]
pub struct SkipGramModel<T> {
    pub vocab: Vec<T>,
    pub index: HashMap<T, usize>,
    /// Input-side vectors, one row per vocabulary entry.
    pub vectors: Matrix,
}

impl<T: Eq + Hash> SkipGramModel<T> {
    pub fn vector(&self, token: &T) -> Option<&[f64]> {
        self.index.get(token).map(|&i| self.vectors.row(i))
    }
}

/// Trains skip-gram with negative sampling over `corpus`. The noise
/// distribution is the unigram distribution raised to 0.75; the context
/// radius is drawn uniformly from `1..=window` per center token; the learning
/// rate decays linearly from `initial_lr` to `min_lr`.
pub fn train_skipgram<T: Clone + Eq + Hash>(corpus: &[Vec<T>], config: &SkipGramConfig) -> Result<SkipGramModel<T>> {
    config.validate()?;
    let mut vocab: Vec<T> = Vec::new();
    let mut index: HashMap<T, usize> = HashMap::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut encoded: Vec<Vec<usize>> = Vec::with_capacity(corpus.len());
    for sentence in corpus {
        let mut ids = Vec::with_capacity(sentence.len());
        for tok in sentence {
            let id = *index.entry(tok.clone()).or_insert_with(|| {
                vocab.push(tok.clone());
                counts.push(0);
                vocab.len() - 1
            });
            counts[id] += 1;
            ids.push(id);
        }
        encoded.push(ids);
    }
    if vocab.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let d = config.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut input = Matrix::zeros(vocab.len(), d);
    input.fill_uniform(&mut rng, 0.5 / d as f64);
    let mut output = Matrix::zeros(vocab.len(), d);
    let noise =
        WeightedIndex::new(counts.iter().map(|&c| (c as f64).powf(0.75))).expect("vocabulary has positive counts");

    let tokens_per_epoch: usize = encoded.iter().map(Vec::len).sum();
    let total = (tokens_per_epoch * config.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut negatives = Vec::with_capacity(config.negatives);

    for _ in 0..config.epochs {
        for sentence in &encoded {
            for (pos, &center) in sentence.iter().enumerate() {
                let progress = processed as f64 / total;
                let lr = (config.initial_lr - (config.initial_lr - config.min_lr) * progress).max(config.min_lr);
                processed += 1;
                let radius = rng.random_range(1..=config.window);
                let lo = pos.saturating_sub(radius);
                let hi = (pos + radius).min(sentence.len() - 1);
                for (ctx_pos, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    negatives.clear();
                    for _ in 0..config.negatives {
                        let n = noise.sample(&mut rng);
                        if n != context {
                            negatives.push(n);
                        }
                    }
                    let neg_rows: Vec<&[f64]> = negatives.iter().map(|&n| output.row(n)).collect();
                    let g = skipgram_pair_grad(input.row(center), output.row(context), &neg_rows);
                    for (p, x) in input.row_mut(center).iter_mut().zip(&g.center) {
                        *p -= lr * x;
                    }
                    for (p, x) in output.row_mut(context).iter_mut().zip(&g.context) {
                        *p -= lr * x;
                    }
                    for (&n, gn) in negatives.iter().zip(&g.negatives) {
                        for (p, x) in output.row_mut(n).iter_mut().zip(gn) {
                            *p -= lr * x;
                        }
                    }
                }
            }
        }
    }

    Ok(SkipGramModel {
        vocab,
        index,
        vectors: input,
    })
}

/// Walks then skip-gram; only entity vectors are kept. Entities that never
/// appear in the corpus (obsolete ones) keep zero rows and are never exported.
pub fn rdf2vec_embed(graph: &KnowledgeGraph, walks: &WalkConfig, skipgram: &SkipGramConfig) -> Result<ModelArtifact> {
    walks.validate()?;
    let corpus = generate_walks(graph, walks);
    let model = train_skipgram(&corpus, skipgram)?;
    let d = skipgram.dimension;
    let mut entities = Matrix::zeros(graph.num_entities(), d);
    for i in 0..graph.num_entities() {
        if let Some(v) = model.vector(&Token::Entity(i)) {
            entities.row_mut(i).copy_from_slice(v);
        }
    }
    Ok(ModelArtifact {
        config: ModelConfig::new(ModelKind::Rdf2Vec, d),
        entities,
        bumps: None,
        relations: RelationParams::None,
    })
}
