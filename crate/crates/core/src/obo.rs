//! OBO 1.4 flat-file ingestion.
//!
//! Only `[Term]` stanzas are interpreted. Recognized tags are `id`, `name`,
//! `namespace`, `is_a`, `relationship`, `is_obsolete` and `alt_id`; the
//! header contributes `ontology` and `data-version`. Everything else is
//! skipped.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityRecord, KnowledgeGraph, RelationRecord};

pub const IS_A: &str = "is_a";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermStanza {
    pub id: String,
    pub name: String,
    pub namespace: Option<String>,
    pub is_a: Vec<String>,
    pub relationships: Vec<(String, String)>,
    pub is_obsolete: bool,
    pub alt_ids: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyDocument {
    pub ontology_id: String,
    pub data_version: String,
    pub terms: Vec<TermStanza>,
    /// Edges found on obsolete stanzas and discarded.
    pub dropped_obsolete_edges: usize,
}

/// Summary of an ontology-to-graph conversion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub terms: usize,
    pub obsolete: usize,
    pub triples: usize,
    pub dropped_edges: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    Term,
    Other,
}

/// Strips a trailing `! comment` and any `{qualifier}` block, returning the
/// remaining whitespace-separated tokens.
fn value_tokens(value: &str) -> Vec<&str> {
    let value = match value.find(" !") {
        Some(i) => &value[..i],
        None => value.strip_prefix('!').map(|_| "").unwrap_or(value),
    };
    let value = match value.find('{') {
        Some(i) => &value[..i],
        None => value,
    };
    value.split_whitespace().collect()
}

fn finish_term(
    current: Option<(usize, TermStanza)>,
    doc: &mut OntologyDocument,
    live_ids: &mut HashSet<String>,
) -> Result<()> {
    let Some((line, mut term)) = current else {
        return Ok(());
    };
    if term.id.is_empty() {
        return Err(Error::MalformedStanza {
            line,
            reason: "[Term] stanza without id".into(),
        });
    }
    if term.is_obsolete {
        let edges = term.is_a.len() + term.relationships.len();
        if edges > 0 {
            tracing::warn!(term = %term.id, edges, "dropping edges on obsolete term");
            doc.dropped_obsolete_edges += edges;
        }
        term.is_a.clear();
        term.relationships.clear();
    } else if !live_ids.insert(term.id.clone()) {
        return Err(Error::DuplicateEntity(term.id));
    }
    doc.terms.push(term);
    Ok(())
}

pub fn parse_obo(text: &str) -> Result<OntologyDocument> {
    let mut doc = OntologyDocument::default();
    let mut live_ids = HashSet::new();
    let mut section = Section::Header;
    let mut current: Option<(usize, TermStanza)> = None;

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('!') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            finish_term(current.take(), &mut doc, &mut live_ids)?;
            section = if line == "[Term]" {
                current = Some((line_no, TermStanza::default()));
                Section::Term
            } else {
                Section::Other
            };
            continue;
        }
        let Some((tag, value)) = line.split_once(':') else {
            return Err(Error::MalformedTagLine {
                line: line_no,
                text: line.to_string(),
            });
        };
        let tag = tag.trim();
        let value = value.trim();
        match section {
            Section::Header => match tag {
                "ontology" => doc.ontology_id = value.to_string(),
                "data-version" => doc.data_version = value.to_string(),
                _ => {}
            },
            Section::Other => {}
            Section::Term => {
                let term = &mut current.as_mut().expect("term section has a stanza").1;
                match tag {
                    "id" => {
                        if let Some(id) = value_tokens(value).first() {
                            term.id = id.to_string();
                        }
                    }
                    "name" => term.name = value.to_string(),
                    "namespace" => term.namespace = Some(value.to_string()),
                    "is_a" => {
                        if let Some(target) = value_tokens(value).first() {
                            term.is_a.push(target.to_string());
                        }
                    }
                    "relationship" => match value_tokens(value).as_slice() {
                        [rel, target, ..] => term.relationships.push((rel.to_string(), target.to_string())),
                        _ => {
                            return Err(Error::MalformedTagLine {
                                line: line_no,
                                text: line.to_string(),
                            })
                        }
                    },
                    "is_obsolete" => term.is_obsolete = value_tokens(value).first() == Some(&"true"),
                    "alt_id" => {
                        if let Some(alt) = value_tokens(value).first() {
                            term.alt_ids.push(alt.to_string());
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    finish_term(current.take(), &mut doc, &mut live_ids)?;
    Ok(doc)
}

/// Converts a parsed ontology into a graph. Obsolete terms are excluded unless
/// `include_obsolete`, in which case they are isolated nodes. Edges whose
/// target is not an embedded live term are dropped and counted.
pub fn to_graph(doc: &OntologyDocument, include_obsolete: bool) -> (KnowledgeGraph, IngestReport) {
    let mut report = IngestReport {
        terms: doc.terms.len(),
        obsolete: doc.terms.iter().filter(|t| t.is_obsolete).count(),
        ..Default::default()
    };

    // ids that are not CURIEs cannot be embedded; they and their edges are dropped
    let embeddable = |t: &TermStanza| crate::graph::is_curie(&t.id);
    let live: HashSet<&str> = doc
        .terms
        .iter()
        .filter(|t| !t.is_obsolete && embeddable(t))
        .map(|t| t.id.as_str())
        .collect();

    let mut entities = Vec::new();
    let mut seen = HashSet::new();
    for term in doc.terms.iter().filter(|t| embeddable(t)) {
        if term.is_obsolete && (!include_obsolete || live.contains(term.id.as_str())) {
            continue;
        }
        if !seen.insert(term.id.as_str()) {
            continue;
        }
        entities.push(EntityRecord {
            iri: term.id.clone(),
            label: term.name.clone(),
            obsolete: term.is_obsolete,
            namespace: term.namespace.clone(),
        });
    }

    let mut relations = vec![RelationRecord::new(IS_A)];
    let mut rel_seen: HashSet<&str> = HashSet::from([IS_A]);
    let mut triples: Vec<(&str, &str, &str)> = Vec::new();
    for term in doc.terms.iter().filter(|t| !t.is_obsolete) {
        let edges = term
            .is_a
            .iter()
            .map(|t| (IS_A, t.as_str()))
            .chain(term.relationships.iter().map(|(r, t)| (r.as_str(), t.as_str())));
        for (rel, target) in edges {
            if !live.contains(term.id.as_str()) || !live.contains(target) {
                report.dropped_edges += 1;
                continue;
            }
            if rel_seen.insert(rel) {
                relations.push(RelationRecord::new(rel));
            }
            triples.push((term.id.as_str(), rel, target));
        }
    }

    let graph = KnowledgeGraph::build(entities, relations, &triples)
        .expect("triples reference only listed entities and relations");
    report.triples = graph.triples().len();
    (graph, report)
}
