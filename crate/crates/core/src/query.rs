//! Concept resolution, cosine similarity and exact top-k search over one
//! loaded model of one version.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::dot;
use crate::store::{LabelSet, VectorsDocument};

pub const OBO_PURL: &str = "http://purl.obolibrary.org/obo/";
pub const DEFAULT_K: usize = 10;

/// Trims, collapses whitespace runs to one space and lowercases.
pub fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

pub fn obo_url(iri: &str) -> String {
    format!("{OBO_PURL}{}", iri.replace(':', "_"))
}

fn squared_norm(v: &[f64]) -> f64 {
    dot(v, v)
}

/// Arguments are squared norms. `sqrt(‖a‖²‖b‖²)` rounds once, which makes
/// colinear and identical vectors score exactly 1.
fn cosine_with_norms(a: &[f64], b: &[f64], na: f64, nb: f64) -> f64 {
    (dot(a, b) / (na * nb).sqrt()).clamp(-1.0, 1.0)
}

/// `a·b / (‖a‖‖b‖)` clamped to `[-1, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    let (na, nb) = (squared_norm(a), squared_norm(b));
    if na == 0.0 {
        return Err(Error::ZeroVector("left operand".into()));
    }
    if nb == 0.0 {
        return Err(Error::ZeroVector("right operand".into()));
    }
    Ok(cosine_with_norms(a, b, na, nb))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub iri: String,
    pub label: String,
    pub score: f64,
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub query: String,
    pub rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub a: String,
    pub b: String,
    pub score: f64,
}

/// Lookup structures over the vectors of one model. Every indexed iri has a
/// vector; labels without a vector are ignored.
#[derive(Debug, Clone)]
pub struct ConceptIndex {
    dimension: usize,
    iris: Vec<String>,
    labels: Vec<String>,
    namespaces: Vec<Option<String>>,
    vectors: Vec<f64>,
    /// Squared norms.
    norms: Vec<f64>,
    by_iri: HashMap<String, usize>,
    by_label: HashMap<String, Vec<usize>>,
    by_alt_id: HashMap<String, Vec<usize>>,
    by_normalized_iri: HashMap<String, Vec<usize>>,
}

impl ConceptIndex {
    pub fn new(doc: &VectorsDocument, labels: &LabelSet) -> Result<Self> {
        doc.validate()?;
        let n = doc.vectors.len();
        let mut index = Self {
            dimension: doc.dimension,
            iris: Vec::with_capacity(n),
            labels: vec![String::new(); n],
            namespaces: vec![None; n],
            vectors: Vec::with_capacity(n * doc.dimension),
            norms: Vec::with_capacity(n),
            by_iri: HashMap::with_capacity(n),
            by_label: HashMap::new(),
            by_alt_id: HashMap::new(),
            by_normalized_iri: HashMap::new(),
        };
        // BTreeMap order: rows are sorted by iri.
        for (i, (iri, v)) in doc.vectors.iter().enumerate() {
            index.iris.push(iri.clone());
            index.vectors.extend_from_slice(v);
            index.norms.push(squared_norm(v));
            index.by_iri.insert(iri.clone(), i);
            index.by_normalized_iri.entry(normalize(iri)).or_default().push(i);
        }
        for entry in &labels.entries {
            let Some(&i) = index.by_iri.get(&entry.iri) else {
                continue;
            };
            index.labels[i] = entry.label.clone();
            index.namespaces[i] = entry.namespace.clone();
            if !entry.label.trim().is_empty() {
                index.by_label.entry(normalize(&entry.label)).or_default().push(i);
            }
            for alt in &entry.alt_ids {
                index.by_alt_id.entry(normalize(alt)).or_default().push(i);
            }
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.iris.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iris.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn iri(&self, row: usize) -> &str {
        &self.iris[row]
    }

    pub fn label(&self, row: usize) -> &str {
        &self.labels[row]
    }

    pub fn vector(&self, row: usize) -> &[f64] {
        &self.vectors[row * self.dimension..(row + 1) * self.dimension]
    }

    fn unique(&self, query: &str, rows: &[usize]) -> Result<usize> {
        match rows {
            [row] => Ok(*row),
            _ => {
                let mut candidates: Vec<String> = rows.iter().map(|&r| self.iris[r].clone()).collect();
                candidates.sort();
                Err(Error::AmbiguousLabel {
                    query: query.to_string(),
                    candidates,
                })
            }
        }
    }

    /// Exact iri, then normalized label, then normalized alt_id, then
    /// normalized iri.
    pub fn resolve(&self, query: &str) -> Result<usize> {
        if let Some(&row) = self.by_iri.get(query) {
            return Ok(row);
        }
        let key = normalize(query);
        for table in [&self.by_label, &self.by_alt_id, &self.by_normalized_iri] {
            if let Some(rows) = table.get(&key) {
                return self.unique(query, rows);
            }
        }
        Err(Error::NotFound(format!("concept `{query}`")))
    }

    fn checked_norm(&self, row: usize) -> Result<f64> {
        match self.norms[row] {
            n if n > 0.0 => Ok(n),
            _ => Err(Error::ZeroVector(self.iris[row].clone())),
        }
    }

    pub fn cosine_rows(&self, a: usize, b: usize) -> Result<f64> {
        let (na, nb) = (self.checked_norm(a)?, self.checked_norm(b)?);
        Ok(cosine_with_norms(self.vector(a), self.vector(b), na, nb))
    }

    pub fn similarity(&self, a: &str, b: &str) -> Result<Similarity> {
        let (ra, rb) = (self.resolve(a)?, self.resolve(b)?);
        Ok(Similarity {
            a: self.iris[ra].clone(),
            b: self.iris[rb].clone(),
            score: self.cosine_rows(ra, rb)?,
        })
    }

    /// Exhaustive scan: the `k` most similar concepts other than the query,
    /// by score descending then iri ascending. `namespace` restricts the
    /// candidates.
    pub fn top_k(&self, query: &str, k: usize, namespace: Option<&str>) -> Result<QueryResult> {
        let q = self.resolve(query)?;
        let qn = self.checked_norm(q)?;
        let qv = self.vector(q);
        let mut scored = Vec::with_capacity(self.len().saturating_sub(1));
        for row in 0..self.len() {
            if row == q {
                continue;
            }
            if let Some(ns) = namespace {
                if self.namespaces[row].as_deref() != Some(ns) {
                    continue;
                }
            }
            let n = self.checked_norm(row)?;
            scored.push((cosine_with_norms(qv, self.vector(row), qn, n), row));
        }
        // Rows are in iri order, so comparing row indices breaks ties by iri.
        let cmp =
            |a: &(f64, usize), b: &(f64, usize)| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1));
        if k < scored.len() {
            if k == 0 {
                scored.clear();
            } else {
                scored.select_nth_unstable_by(k - 1, cmp);
                scored.truncate(k);
            }
        }
        scored.sort_unstable_by(cmp);
        Ok(QueryResult {
            query: self.iris[q].clone(),
            rows: scored
                .into_iter()
                .map(|(score, row)| ResultRow {
                    iri: self.iris[row].clone(),
                    label: self.labels[row].clone(),
                    score,
                    url: obo_url(&self.iris[row]),
                })
                .collect(),
        })
    }
}
