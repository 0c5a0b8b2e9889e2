//! Triple-scoring embedding models.
//!
//! Every model follows the same sign convention: higher scores mean more
//! plausible triples. Distance-based models (TransE, TransR, BoxE) return
//! negated distances and are therefore never positive.
//!
//! Each model exposes a slice-level `score` and `grad` pair; [`ModelArtifact`]
//! wires them to its parameter tables.

pub mod boxe;
pub mod distmult;
pub mod hole;
pub mod transe;
pub mod transr;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::KnowledgeGraph;

/// The six embedding models served by the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    TransE,
    TransR,
    DistMult,
    HolE,
    BoxE,
    #[serde(rename = "RDF2Vec")]
    Rdf2Vec,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::TransE,
        ModelKind::TransR,
        ModelKind::DistMult,
        ModelKind::HolE,
        ModelKind::BoxE,
        ModelKind::Rdf2Vec,
    ];

    pub const SCORING: [ModelKind; 5] = [
        ModelKind::TransE,
        ModelKind::TransR,
        ModelKind::DistMult,
        ModelKind::HolE,
        ModelKind::BoxE,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::TransE => "TransE",
            ModelKind::TransR => "TransR",
            ModelKind::DistMult => "DistMult",
            ModelKind::HolE => "HolE",
            ModelKind::BoxE => "BoxE",
            ModelKind::Rdf2Vec => "RDF2Vec",
        }
    }

    pub fn is_scoring(self) -> bool {
        self != ModelKind::Rdf2Vec
    }

    /// Whether entity vectors are projected onto the unit ball by default.
    pub fn default_norm_constraint(self) -> bool {
        matches!(self, ModelKind::TransE | ModelKind::TransR | ModelKind::HolE)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::NotFound(format!("model `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    #[default]
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub dimension: usize,
    #[serde(default)]
    pub transe_norm: Norm,
}

impl ModelConfig {
    pub fn new(kind: ModelKind, dimension: usize) -> Self {
        Self {
            kind,
            dimension,
            transe_norm: Norm::L2,
        }
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill_uniform(&mut self, rng: &mut impl Rng, bound: f64) {
        for x in &mut self.data {
            *x = rng.random_range(-bound..=bound);
        }
    }
}

/// Relation-side parameters, shaped per model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RelationParams {
    /// RDF2Vec keeps no relation parameters.
    None,
    /// TransE, DistMult, HolE: one vector per relation.
    Vectors(Matrix),
    /// TransR: a translation vector and a d×d projection (row-major) per relation.
    Projected { vectors: Matrix, projections: Matrix },
    /// BoxE: a head box and a tail box per relation.
    Boxes {
        head_center: Matrix,
        head_width_raw: Matrix,
        tail_center: Matrix,
        tail_width_raw: Matrix,
    },
}

/// Parameter table identifier used to address gradients and optimizer state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Table {
    Entity,
    Bump,
    Relation,
    Projection,
    HeadCenter,
    HeadWidth,
    TailCenter,
    TailWidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamRef {
    pub table: Table,
    pub row: usize,
}

impl ParamRef {
    pub fn new(table: Table, row: usize) -> Self {
        Self { table, row }
    }
}

/// Partial derivatives of a score, one entry per touched parameter row.
/// The same row may appear more than once (e.g. when head == tail); entries
/// are meant to be summed.
#[derive(Debug, Clone, Default)]
pub struct Gradient {
    pub entries: Vec<(ParamRef, Vec<f64>)>,
}

impl Gradient {
    fn push(&mut self, table: Table, row: usize, g: Vec<f64>) {
        self.entries.push((ParamRef::new(table, row), g));
    }
}

/// Anything that scores `(head, relation, tail)` index triples.
pub trait TripleScorer {
    fn score(&self, head: usize, relation: usize, tail: usize) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub config: ModelConfig,
    pub entities: Matrix,
    /// BoxE only.
    pub bumps: Option<Matrix>,
    pub relations: RelationParams,
}

impl ModelArtifact {
    /// Samples fresh parameters: vectors uniform in `[-6/sqrt(d), 6/sqrt(d)]`,
    /// TransR projections set to identity, BoxE raw half-widths set to zero.
    pub fn init(graph: &KnowledgeGraph, config: ModelConfig, rng: &mut impl Rng) -> Result<Self> {
        if graph.triples().is_empty() {
            return Err(Error::EmptyGraph);
        }
        if config.dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be at least 1".into()));
        }
        let d = config.dimension;
        let n = graph.num_entities();
        let m = graph.num_relations();
        let bound = 6.0 / (d as f64).sqrt();
        let uniform = |rows: usize, rng: &mut _| {
            let mut mat = Matrix::zeros(rows, d);
            mat.fill_uniform(rng, bound);
            mat
        };

        let entities = uniform(n, rng);
        let (bumps, relations) = match config.kind {
            ModelKind::TransE | ModelKind::DistMult | ModelKind::HolE => {
                (None, RelationParams::Vectors(uniform(m, rng)))
            }
            ModelKind::TransR => {
                let vectors = uniform(m, rng);
                let mut projections = Matrix::zeros(m, d * d);
                for r in 0..m {
                    let row = projections.row_mut(r);
                    for i in 0..d {
                        row[i * d + i] = 1.0;
                    }
                }
                (None, RelationParams::Projected { vectors, projections })
            }
            ModelKind::BoxE => {
                let bumps = uniform(n, rng);
                let head_center = uniform(m, rng);
                let tail_center = uniform(m, rng);
                (
                    Some(bumps),
                    RelationParams::Boxes {
                        head_center,
                        head_width_raw: Matrix::zeros(m, d),
                        tail_center,
                        tail_width_raw: Matrix::zeros(m, d),
                    },
                )
            }
            ModelKind::Rdf2Vec => return Err(Error::NotAScoringModel(config.kind.to_string())),
        };
        Ok(Self {
            config,
            entities,
            bumps,
            relations,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    pub fn dimension(&self) -> usize {
        self.config.dimension
    }

    pub fn entity(&self, i: usize) -> &[f64] {
        self.entities.row(i)
    }

    pub fn table(&self, table: Table) -> Option<&Matrix> {
        match (table, &self.relations) {
            (Table::Entity, _) => Some(&self.entities),
            (Table::Bump, _) => self.bumps.as_ref(),
            (Table::Relation, RelationParams::Vectors(v)) => Some(v),
            (Table::Relation, RelationParams::Projected { vectors, .. }) => Some(vectors),
            (Table::Projection, RelationParams::Projected { projections, .. }) => Some(projections),
            (Table::HeadCenter, RelationParams::Boxes { head_center, .. }) => Some(head_center),
            (Table::HeadWidth, RelationParams::Boxes { head_width_raw, .. }) => Some(head_width_raw),
            (Table::TailCenter, RelationParams::Boxes { tail_center, .. }) => Some(tail_center),
            (Table::TailWidth, RelationParams::Boxes { tail_width_raw, .. }) => Some(tail_width_raw),
            _ => None,
        }
    }

    pub fn table_mut(&mut self, table: Table) -> Option<&mut Matrix> {
        match (table, &mut self.relations) {
            (Table::Entity, _) => Some(&mut self.entities),
            (Table::Bump, _) => self.bumps.as_mut(),
            (Table::Relation, RelationParams::Vectors(v)) => Some(v),
            (Table::Relation, RelationParams::Projected { vectors, .. }) => Some(vectors),
            (Table::Projection, RelationParams::Projected { projections, .. }) => Some(projections),
            (Table::HeadCenter, RelationParams::Boxes { head_center, .. }) => Some(head_center),
            (Table::HeadWidth, RelationParams::Boxes { head_width_raw, .. }) => Some(head_width_raw),
            (Table::TailCenter, RelationParams::Boxes { tail_center, .. }) => Some(tail_center),
            (Table::TailWidth, RelationParams::Boxes { tail_width_raw, .. }) => Some(tail_width_raw),
            _ => None,
        }
    }

    /// All parameter tables present for this model kind.
    pub fn tables(&self) -> Vec<Table> {
        [
            Table::Entity,
            Table::Bump,
            Table::Relation,
            Table::Projection,
            Table::HeadCenter,
            Table::HeadWidth,
            Table::TailCenter,
            Table::TailWidth,
        ]
        .into_iter()
        .filter(|t| self.table(*t).is_some())
        .collect()
    }

    pub fn param(&self, p: ParamRef) -> &[f64] {
        self.table(p.table).expect("table exists for model").row(p.row)
    }

    pub fn param_mut(&mut self, p: ParamRef) -> &mut [f64] {
        self.table_mut(p.table).expect("table exists for model").row_mut(p.row)
    }

    pub fn is_finite(&self) -> bool {
        self.tables()
            .into_iter()
            .all(|t| self.table(t).unwrap().as_slice().iter().all(|x| x.is_finite()))
    }

    fn rel(&self, table: Table, r: usize) -> &[f64] {
        self.table(table).expect("relation table").row(r)
    }

    fn boxes(&self, r: usize) -> (boxe::RelationBox<'_>, boxe::RelationBox<'_>) {
        (
            boxe::RelationBox {
                center: self.rel(Table::HeadCenter, r),
                width_raw: self.rel(Table::HeadWidth, r),
            },
            boxe::RelationBox {
                center: self.rel(Table::TailCenter, r),
                width_raw: self.rel(Table::TailWidth, r),
            },
        )
    }

    pub fn score(&self, h: usize, r: usize, t: usize) -> f64 {
        let (eh, et) = (self.entity(h), self.entity(t));
        match self.config.kind {
            ModelKind::TransE => transe::score(eh, self.rel(Table::Relation, r), et, self.config.transe_norm),
            ModelKind::TransR => transr::score(eh, self.rel(Table::Relation, r), self.rel(Table::Projection, r), et),
            ModelKind::DistMult => distmult::score(eh, self.rel(Table::Relation, r), et),
            ModelKind::HolE => hole::score(eh, self.rel(Table::Relation, r), et),
            ModelKind::BoxE => {
                let bumps = self.bumps.as_ref().expect("BoxE bumps");
                let (head_box, tail_box) = self.boxes(r);
                boxe::score(eh, bumps.row(h), et, bumps.row(t), &head_box, &tail_box)
            }
            ModelKind::Rdf2Vec => f64::NAN,
        }
    }

    /// Gradient of [`ModelArtifact::score`] with respect to every touched
    /// parameter row.
    pub fn gradient(&self, h: usize, r: usize, t: usize) -> Gradient {
        let (eh, et) = (self.entity(h), self.entity(t));
        let mut g = Gradient::default();
        match self.config.kind {
            ModelKind::TransE => {
                let tg = transe::grad(eh, self.rel(Table::Relation, r), et, self.config.transe_norm);
                g.push(Table::Entity, h, tg.head);
                g.push(Table::Relation, r, tg.relation);
                g.push(Table::Entity, t, tg.tail);
            }
            ModelKind::TransR => {
                let tg = transr::grad(eh, self.rel(Table::Relation, r), self.rel(Table::Projection, r), et);
                g.push(Table::Entity, h, tg.head);
                g.push(Table::Relation, r, tg.relation);
                g.push(Table::Projection, r, tg.projection);
                g.push(Table::Entity, t, tg.tail);
            }
            ModelKind::DistMult => {
                let tg = distmult::grad(eh, self.rel(Table::Relation, r), et);
                g.push(Table::Entity, h, tg.head);
                g.push(Table::Relation, r, tg.relation);
                g.push(Table::Entity, t, tg.tail);
            }
            ModelKind::HolE => {
                let tg = hole::grad(eh, self.rel(Table::Relation, r), et);
                g.push(Table::Entity, h, tg.head);
                g.push(Table::Relation, r, tg.relation);
                g.push(Table::Entity, t, tg.tail);
            }
            ModelKind::BoxE => {
                let bumps = self.bumps.as_ref().expect("BoxE bumps");
                let (head_box, tail_box) = self.boxes(r);
                let bg = boxe::grad(eh, bumps.row(h), et, bumps.row(t), &head_box, &tail_box);
                g.push(Table::Entity, h, bg.head_point);
                g.push(Table::Bump, t, bg.head_point_bump);
                g.push(Table::Entity, t, bg.tail_point);
                g.push(Table::Bump, h, bg.tail_point_bump);
                g.push(Table::HeadCenter, r, bg.head_center);
                g.push(Table::HeadWidth, r, bg.head_width_raw);
                g.push(Table::TailCenter, r, bg.tail_center);
                g.push(Table::TailWidth, r, bg.tail_width_raw);
            }
            ModelKind::Rdf2Vec => {}
        }
        g
    }
}

impl TripleScorer for ModelArtifact {
    fn score(&self, head: usize, relation: usize, tail: usize) -> f64 {
        ModelArtifact::score(self, head, relation, tail)
    }
}

pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
