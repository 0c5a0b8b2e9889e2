//! Mini-batch negative-sampling trainer shared by the five scoring models,
//! plus filtered link-prediction evaluation.
//!
//! Every model is trained with the same margin ranking loss
//! `max(0, γ - s(pos) + s(neg))`. Negatives corrupt the head or the tail
//! (each with probability ½) with an entity drawn uniformly; training-time
//! negatives are not filtered against the known triples.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{KnowledgeGraph, Triple};
use crate::models::{Matrix, ModelArtifact, ModelConfig, ModelKind, Norm, ParamRef, Table, TripleScorer};
use crate::optim::{adam_update, sgd_update, AdamParams, OptimizerKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub dimension: usize,
    pub batch_size: usize,
    pub negatives_per_positive: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub adam: AdamParams,
    pub seed: u64,
    /// `None` picks the model default (on for TransE, TransR and HolE).
    pub norm_constraint: Option<bool>,
    pub transe_norm: Norm,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            dimension: 200,
            batch_size: 128,
            negatives_per_positive: 1,
            margin: 1.0,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            adam: AdamParams::default(),
            seed: 42,
            norm_constraint: None,
            transe_norm: Norm::L2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if self.dimension < 1 {
            return bad("dimension must be at least 1");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1");
        }
        if self.negatives_per_positive < 1 {
            return bad("negatives_per_positive must be at least 1");
        }
        if self.margin.is_nan() || self.margin <= 0.0 {
            return bad("margin must be positive");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }

    pub fn model_config(&self, kind: ModelKind) -> ModelConfig {
        ModelConfig {
            kind,
            dimension: self.dimension,
            transe_norm: self.transe_norm,
        }
    }

    pub fn norm_constraint_for(&self, kind: ModelKind) -> bool {
        self.norm_constraint.unwrap_or_else(|| kind.default_norm_constraint())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
    pub wall_time_secs: f64,
    pub triples_seen: usize,
}

pub fn init_params(graph: &KnowledgeGraph, config: ModelConfig, rng: &mut impl Rng) -> Result<ModelArtifact> {
    ModelArtifact::init(graph, config, rng)
}

pub fn margin_loss(score_pos: f64, score_neg: f64, margin: f64) -> f64 {
    (margin - score_pos + score_neg).max(0.0)
}

/// Corrupts the head or the tail with a uniformly drawn entity, redrawing
/// until the result differs from `triple`.
pub fn negative_sample(triple: &Triple, graph: &KnowledgeGraph, rng: &mut impl Rng) -> Result<Triple> {
    let n = graph.num_entities();
    if n < 2 {
        return Err(Error::SingleEntityGraph);
    }
    loop {
        let corrupt_head = rng.random_bool(0.5);
        let e = rng.random_range(0..n);
        let candidate = if corrupt_head {
            Triple::new(e, triple.relation, triple.tail)
        } else {
            Triple::new(triple.head, triple.relation, e)
        };
        if candidate != *triple {
            return Ok(candidate);
        }
    }
}

fn project_to_unit_ball(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// Per-table moment estimates. Only rows that receive a gradient are updated
/// (lazy Adam); the bias correction uses the global step count.
struct OptimizerState {
    kind: OptimizerKind,
    lr: f64,
    adam: AdamParams,
    step: u64,
    moments: HashMap<Table, (Matrix, Matrix)>,
}

impl OptimizerState {
    fn new(artifact: &ModelArtifact, config: &TrainConfig) -> Self {
        let moments = match config.optimizer {
            OptimizerKind::Sgd => HashMap::new(),
            OptimizerKind::Adam => artifact
                .tables()
                .into_iter()
                .map(|t| {
                    let m = artifact.table(t).unwrap();
                    (
                        t,
                        (Matrix::zeros(m.rows(), m.cols()), Matrix::zeros(m.rows(), m.cols())),
                    )
                })
                .collect(),
        };
        Self {
            kind: config.optimizer,
            lr: config.learning_rate,
            adam: config.adam,
            step: 0,
            moments,
        }
    }

    fn apply(&mut self, artifact: &mut ModelArtifact, grads: &BTreeMap<ParamRef, Vec<f64>>) {
        self.step += 1;
        for (p, g) in grads {
            let params = artifact.param_mut(*p);
            match self.kind {
                OptimizerKind::Sgd => sgd_update(params, g, self.lr),
                OptimizerKind::Adam => {
                    let (m, v) = self.moments.get_mut(&p.table).expect("moments per table");
                    adam_update(
                        params,
                        g,
                        m.row_mut(p.row),
                        v.row_mut(p.row),
                        self.lr,
                        self.step,
                        &self.adam,
                    );
                }
            }
        }
    }
}

fn accumulate(into: &mut BTreeMap<ParamRef, Vec<f64>>, artifact: &ModelArtifact, t: &Triple, weight: f64) {
    for (p, g) in artifact.gradient(t.head, t.relation, t.tail).entries {
        let slot = into.entry(p).or_insert_with(|| vec![0.0; g.len()]);
        for (s, x) in slot.iter_mut().zip(&g) {
            *s += weight * x;
        }
    }
}

/// Trains `kind` on `graph`. Deterministic for a fixed `config.seed`.
pub fn train(graph: &KnowledgeGraph, kind: ModelKind, config: &TrainConfig) -> Result<(ModelArtifact, TrainReport)> {
    config.validate()?;
    if !kind.is_scoring() {
        return Err(Error::NotAScoringModel(kind.to_string()));
    }
    if graph.triples().is_empty() {
        return Err(Error::EmptyGraph);
    }
    if graph.num_entities() < 2 {
        return Err(Error::SingleEntityGraph);
    }
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut artifact = init_params(graph, config.model_config(kind), &mut rng)?;
    let constrain = config.norm_constraint_for(kind);
    if constrain {
        for i in 0..graph.num_entities() {
            project_to_unit_ball(artifact.entities.row_mut(i));
        }
    }
    let mut optimizer = OptimizerState::new(&artifact, config);
    let triples = graph.triples();
    let mut order: Vec<usize> = (0..triples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut triples_seen = 0;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut pairs = 0usize;
        for (step, batch) in order.chunks(config.batch_size).enumerate() {
            let mut grads = BTreeMap::new();
            let mut batch_pairs = 0usize;
            for &ti in batch {
                let pos = triples[ti];
                for _ in 0..config.negatives_per_positive {
                    let neg = negative_sample(&pos, graph, &mut rng)?;
                    let sp = artifact.score(pos.head, pos.relation, pos.tail);
                    let sn = artifact.score(neg.head, neg.relation, neg.tail);
                    let raw = config.margin - sp + sn;
                    if !raw.is_finite() {
                        return Err(Error::NonFiniteLoss {
                            epoch: epoch + 1,
                            step: step + 1,
                            detail: format!("{kind}: positive score {sp}, negative score {sn}"),
                        });
                    }
                    let loss = raw.max(0.0);
                    loss_sum += loss;
                    batch_pairs += 1;
                    if loss > 0.0 {
                        accumulate(&mut grads, &artifact, &pos, -1.0);
                        accumulate(&mut grads, &artifact, &neg, 1.0);
                    }
                }
                triples_seen += 1;
            }
            let scale = 1.0 / batch_pairs as f64;
            for g in grads.values_mut() {
                g.iter_mut().for_each(|x| *x *= scale);
            }
            optimizer.apply(&mut artifact, &grads);
            if constrain {
                for p in grads.keys().filter(|p| p.table == Table::Entity) {
                    project_to_unit_ball(artifact.entities.row_mut(p.row));
                }
            }
            pairs += batch_pairs;
        }
        let mean = loss_sum / pairs as f64;
        tracing::debug!(model = %kind, epoch = epoch + 1, loss = mean, "epoch finished");
        epoch_losses.push(mean);
    }

    if !artifact.is_finite() {
        return Err(Error::NonFiniteLoss {
            epoch: config.epochs,
            step: 0,
            detail: format!("{kind}: parameters diverged to non-finite values"),
        });
    }
    Ok((
        artifact,
        TrainReport {
            epoch_losses,
            wall_time_secs: started.elapsed().as_secs_f64(),
            triples_seen,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPredictionMetrics {
    pub mrr: f64,
    pub hits_at_10: f64,
    /// Number of ranking queries (two per sampled triple).
    pub queries: usize,
}

/// Rank of `truth` among `candidates` ordered by score descending, index
/// ascending; candidates rejected by `filtered` are skipped.
fn filtered_rank(n: usize, truth: usize, score_of: impl Fn(usize) -> f64, filtered: impl Fn(usize) -> bool) -> usize {
    let true_score = score_of(truth);
    let mut rank = 1;
    for c in 0..n {
        if c == truth || filtered(c) {
            continue;
        }
        let s = score_of(c);
        if s > true_score || (s == true_score && c < truth) {
            rank += 1;
        }
    }
    rank
}

/// Filtered head and tail ranking over `sample_size` triples drawn without
/// replacement (all triples if the sample is at least as large).
pub fn evaluate_link_prediction(
    scorer: &impl TripleScorer,
    graph: &KnowledgeGraph,
    sample_size: usize,
    rng: &mut impl Rng,
) -> LinkPredictionMetrics {
    let triples = graph.triples();
    let picked: Vec<usize> = if sample_size >= triples.len() {
        (0..triples.len()).collect()
    } else {
        let mut v = index::sample(rng, triples.len(), sample_size).into_vec();
        v.sort_unstable();
        v
    };
    let n = graph.num_entities();
    let (mut rr, mut hits, mut queries) = (0.0, 0usize, 0usize);
    for &i in &picked {
        let t = triples[i];
        let tail_rank = filtered_rank(
            n,
            t.tail,
            |c| scorer.score(t.head, t.relation, c),
            |c| graph.contains(&Triple::new(t.head, t.relation, c)),
        );
        let head_rank = filtered_rank(
            n,
            t.head,
            |c| scorer.score(c, t.relation, t.tail),
            |c| graph.contains(&Triple::new(c, t.relation, t.tail)),
        );
        for rank in [tail_rank, head_rank] {
            rr += 1.0 / rank as f64;
            hits += usize::from(rank <= 10);
            queries += 1;
        }
    }
    if queries == 0 {
        return LinkPredictionMetrics {
            mrr: 0.0,
            hits_at_10: 0.0,
            queries: 0,
        };
    }
    LinkPredictionMetrics {
        mrr: rr / queries as f64,
        hits_at_10: hits as f64 / queries as f64,
        queries,
    }
}
