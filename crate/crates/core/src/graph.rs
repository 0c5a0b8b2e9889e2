//! In-memory knowledge graph: dense entity/relation dictionaries, a
//! deduplicated triple list and per-head adjacency.
//!
//! Indices are assigned in first-appearance order and never change once the
//! graph is built. All training parameters are stored in arrays addressed by
//! these indices.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ontology class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    /// CURIE, e.g. `GO:0008150`.
    pub iri: String,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub obsolete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub namespace: Option<String>,
}

impl EntityRecord {
    pub fn new(iri: impl Into<String>) -> Self {
        Self {
            iri: iri.into(),
            label: String::new(),
            obsolete: false,
            namespace: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub iri: String,
}

impl RelationRecord {
    pub fn new(iri: impl Into<String>) -> Self {
        Self { iri: iri.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triple {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Self { head, relation, tail }
    }
}

/// Key for [`KnowledgeGraph::lookup`].
#[derive(Debug, Clone, Copy)]
pub enum EntityKey<'a> {
    Index(usize),
    Iri(&'a str),
}

impl From<usize> for EntityKey<'_> {
    fn from(i: usize) -> Self {
        EntityKey::Index(i)
    }
}

impl<'a> From<&'a str> for EntityKey<'a> {
    fn from(s: &'a str) -> Self {
        EntityKey::Iri(s)
    }
}

#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    entities: Vec<EntityRecord>,
    relations: Vec<RelationRecord>,
    triples: Vec<Triple>,
    entity_index: HashMap<String, usize>,
    relation_index: HashMap<String, usize>,
    out_adjacency: Vec<Vec<(usize, usize)>>,
    triple_set: HashSet<Triple>,
}

/// Checks the `PREFIX:LOCALID` shape: both sides non-empty, no whitespace.
pub fn is_curie(iri: &str) -> bool {
    match iri.split_once(':') {
        Some((prefix, local)) => !prefix.is_empty() && !local.is_empty() && !iri.chars().any(char::is_whitespace),
        None => false,
    }
}

impl KnowledgeGraph {
    /// Builds a graph from entity and relation lists plus IRI-level triples.
    ///
    /// Duplicate triples are collapsed. Every triple must reference listed
    /// entities and relations.
    pub fn build<S: AsRef<str>>(
        entities: Vec<EntityRecord>,
        relations: Vec<RelationRecord>,
        triples: &[(S, S, S)],
    ) -> Result<Self> {
        let mut entity_index = HashMap::with_capacity(entities.len());
        for (i, e) in entities.iter().enumerate() {
            if !is_curie(&e.iri) {
                return Err(Error::InvalidIri(e.iri.clone()));
            }
            if entity_index.insert(e.iri.clone(), i).is_some() {
                return Err(Error::DuplicateEntity(e.iri.clone()));
            }
        }
        let mut relation_index = HashMap::with_capacity(relations.len());
        for (i, r) in relations.iter().enumerate() {
            if r.iri.trim().is_empty() {
                return Err(Error::InvalidIri(r.iri.clone()));
            }
            if relation_index.insert(r.iri.clone(), i).is_some() {
                return Err(Error::DuplicateRelation(r.iri.clone()));
            }
        }

        let entity = |iri: &str| {
            entity_index
                .get(iri)
                .copied()
                .ok_or_else(|| Error::UnknownIri(iri.to_string()))
        };
        let mut stored = Vec::with_capacity(triples.len());
        let mut triple_set = HashSet::with_capacity(triples.len());
        for (h, r, t) in triples {
            let triple = Triple {
                head: entity(h.as_ref())?,
                relation: relation_index
                    .get(r.as_ref())
                    .copied()
                    .ok_or_else(|| Error::UnknownIri(r.as_ref().to_string()))?,
                tail: entity(t.as_ref())?,
            };
            if triple_set.insert(triple) {
                stored.push(triple);
            }
        }

        let mut out_adjacency = vec![Vec::new(); entities.len()];
        for t in &stored {
            out_adjacency[t.head].push((t.relation, t.tail));
        }

        Ok(Self {
            entities,
            relations,
            triples: stored,
            entity_index,
            relation_index,
            out_adjacency,
            triple_set,
        })
    }

    pub fn entities(&self) -> &[EntityRecord] {
        &self.entities
    }

    pub fn relations(&self) -> &[RelationRecord] {
        &self.relations
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    /// Outgoing `(relation, tail)` pairs of `entity`.
    pub fn out_edges(&self, entity: usize) -> &[(usize, usize)] {
        &self.out_adjacency[entity]
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triple_set.contains(triple)
    }

    pub fn index_of(&self, iri: &str) -> Option<usize> {
        self.entity_index.get(iri).copied()
    }

    pub fn relation_index_of(&self, iri: &str) -> Option<usize> {
        self.relation_index.get(iri).copied()
    }

    pub fn lookup<'a>(&self, key: impl Into<EntityKey<'a>>) -> Result<&EntityRecord> {
        match key.into() {
            EntityKey::Index(i) => self
                .entities
                .get(i)
                .ok_or_else(|| Error::NotFound(format!("entity index {i}"))),
            EntityKey::Iri(iri) => self
                .index_of(iri)
                .map(|i| &self.entities[i])
                .ok_or_else(|| Error::NotFound(iri.to_string())),
        }
    }

    /// Triples rendered back to IRIs.
    pub fn iri_triples(&self) -> impl Iterator<Item = (&str, &str, &str)> + '_ {
        self.triples.iter().map(|t| {
            (
                self.entities[t.head].iri.as_str(),
                self.relations[t.relation].iri.as_str(),
                self.entities[t.tail].iri.as_str(),
            )
        })
    }
}

/// Reads a `head<TAB>relation<TAB>tail` file. Entities and relations are
/// taken from the triples in first-appearance order; `#` lines are comments.
pub fn read_triples_tsv(text: &str) -> Result<KnowledgeGraph> {
    let mut entities = Vec::new();
    let mut seen_entities = HashSet::new();
    let mut relations = Vec::new();
    let mut seen_relations = HashSet::new();
    let mut triples = Vec::new();

    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() != 3 || cols.iter().any(|c| c.is_empty()) {
            return Err(Error::MalformedTripleLine { line: n + 1 });
        }
        let (h, r, t) = (cols[0], cols[1], cols[2]);
        for e in [h, t] {
            if seen_entities.insert(e.to_string()) {
                entities.push(EntityRecord::new(e));
            }
        }
        if seen_relations.insert(r.to_string()) {
            relations.push(RelationRecord::new(r));
        }
        triples.push((h.to_string(), r.to_string(), t.to_string()));
    }
    KnowledgeGraph::build(entities, relations, &triples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ents(iris: &[&str]) -> Vec<EntityRecord> {
        iris.iter().map(|i| EntityRecord::new(*i)).collect()
    }

    #[test]
    fn minimal_graph() {
        let g = KnowledgeGraph::build(
            ents(&["X:A", "X:B"]),
            vec![RelationRecord::new("is_a")],
            &[("X:A", "is_a", "X:B")],
        )
        .unwrap();
        assert_eq!(g.num_entities(), 2);
        assert_eq!(g.num_relations(), 1);
        assert_eq!(g.triples().len(), 1);
        assert_eq!(g.out_edges(0), &[(0, 1)]);
    }

    #[test]
    fn duplicate_triples_collapse() {
        let g = KnowledgeGraph::build(
            ents(&["X:A", "X:B"]),
            vec![RelationRecord::new("is_a")],
            &[("X:A", "is_a", "X:B"), ("X:A", "is_a", "X:B")],
        )
        .unwrap();
        assert_eq!(g.triples().len(), 1);
    }

    #[test]
    fn unknown_iri_rejected() {
        let err = KnowledgeGraph::build(
            ents(&["X:A", "X:B"]),
            vec![RelationRecord::new("is_a")],
            &[("X:A", "is_a", "X:C")],
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnknownIri(ref s) if s == "X:C"));

        let err = KnowledgeGraph::build(
            ents(&["X:A", "X:B"]),
            vec![RelationRecord::new("is_a")],
            &[("X:A", "part_of", "X:B")],
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnknownIri(_)));
    }

    #[test]
    fn duplicate_entity_rejected() {
        let err = KnowledgeGraph::build::<&str>(ents(&["X:A", "X:A"]), vec![], &[]).unwrap_err();
        assert!(matches!(err, Error::DuplicateEntity(_)));
    }

    #[test]
    fn iri_shape_enforced() {
        assert!(is_curie("GO:0008150"));
        assert!(!is_curie("GO0008150"));
        assert!(!is_curie(":1"));
        assert!(!is_curie("GO:"));
        assert!(!is_curie("GO: 1"));
        let err = KnowledgeGraph::build::<&str>(ents(&["bad"]), vec![], &[]).unwrap_err();
        assert!(matches!(err, Error::InvalidIri(_)));
    }

    #[test]
    fn lookup_both_directions() {
        let g = KnowledgeGraph::build::<&str>(ents(&["GO:0008150", "GO:0003674"]), vec![], &[]).unwrap();
        assert_eq!(g.lookup(0).unwrap().iri, "GO:0008150");
        assert_eq!(g.lookup("GO:0003674").unwrap().iri, "GO:0003674");
        assert!(matches!(g.lookup("GO:9999999"), Err(Error::NotFound(_))));
        assert!(matches!(g.lookup(7), Err(Error::NotFound(_))));
    }

    #[test]
    fn tsv_reader() {
        let text = "# comment\nX:A\tis_a\tX:B\nX:B\tpart_of\tX:C\n\nX:A\tis_a\tX:B\n";
        let g = read_triples_tsv(text).unwrap();
        assert_eq!(g.num_entities(), 3);
        assert_eq!(g.num_relations(), 2);
        assert_eq!(g.triples().len(), 2);
        assert!(matches!(
            read_triples_tsv("X:A\tis_a\n"),
            Err(Error::MalformedTripleLine { line: 1 })
        ));
    }

    fn random_graph() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize, usize)>)> {
        (1usize..30, 1usize..4)
            .prop_flat_map(|(n, m)| (Just(n), Just(m), prop::collection::vec((0..n, 0..m, 0..n), 0..80)))
    }

    proptest! {
        #[test]
        fn bijection_and_adjacency((n, m, raw) in random_graph()) {
            let iris: Vec<String> = (0..n).map(|i| format!("T:{i}")).collect();
            let rels: Vec<String> = (0..m).map(|i| format!("r{i}")).collect();
            let triples: Vec<(String, String, String)> = raw
                .iter()
                .map(|&(h, r, t)| (iris[h].clone(), rels[r].clone(), iris[t].clone()))
                .collect();
            let g = KnowledgeGraph::build(
                iris.iter().map(|i| EntityRecord::new(i.as_str())).collect(),
                rels.iter().map(|r| RelationRecord::new(r.as_str())).collect(),
                &triples,
            ).unwrap();
            for i in 0..g.num_entities() {
                prop_assert_eq!(g.index_of(&g.lookup(i).unwrap().iri), Some(i));
            }
            let flat: usize = (0..n).map(|e| g.out_edges(e).len()).sum();
            prop_assert_eq!(flat, g.triples().len());
            for t in g.triples() {
                prop_assert!(g.out_edges(t.head).contains(&(t.relation, t.tail)));
            }
            let distinct: HashSet<_> = triples.iter().cloned().collect();
            prop_assert_eq!(distinct.len(), g.triples().len());
        }

        #[test]
        fn permutation_preserves_triple_set((n, m, raw) in random_graph(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let iris: Vec<String> = (0..n).map(|i| format!("T:{i}")).collect();
            let rels: Vec<String> = (0..m).map(|i| format!("r{i}")).collect();
            let mut triples: Vec<(String, String, String)> = raw
                .iter()
                .map(|&(h, r, t)| (iris[h].clone(), rels[r].clone(), iris[t].clone()))
                .collect();
            let build = |ts: &[(String, String, String)]| {
                KnowledgeGraph::build(
                    iris.iter().map(|i| EntityRecord::new(i.as_str())).collect(),
                    rels.iter().map(|r| RelationRecord::new(r.as_str())).collect(),
                    ts,
                ).unwrap()
            };
            let a = build(&triples);
            triples.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b = build(&triples);
            let set = |g: &KnowledgeGraph| -> HashSet<(String, String, String)> {
                g.iri_triples().map(|(h, r, t)| (h.to_string(), r.to_string(), t.to_string())).collect()
            };
            prop_assert_eq!(set(&a), set(&b));
        }
    }
}
