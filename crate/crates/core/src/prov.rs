//! Provenance records in a PROV-JSON shaped document.
//!
//! A record links one ontology entity to the embedding files generated from
//! it: each embedding entity has exactly one generating activity and each
//! activity uses exactly one ontology entity.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::models::ModelKind;
use crate::rdf2vec::Rdf2VecConfig;
use crate::train::TrainConfig;

pub const NAMESPACE: &str = "urn:ontovec:";
pub const PROV_NAMESPACE: &str = "http://www.w3.org/ns/prov#";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityRole {
    Ontology,
    Embedding,
}

impl EntityRole {
    fn as_str(self) -> &'static str {
        match self {
            EntityRole::Ontology => "ontology",
            EntityRole::Embedding => "embedding",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProvEntity {
    pub id: String,
    pub role: EntityRole,
    pub sha256: String,
    /// Source URL for ontologies, relative file path for embeddings.
    pub location: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProvActivity {
    pub id: String,
    pub model: ModelKind,
    /// Flat hyperparameter map, embedded as activity attributes.
    pub hyperparameters: Map<String, Value>,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
}

/// A validated provenance record. Links are `(activity, entity)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ProvRecord {
    entities: Vec<ProvEntity>,
    activities: Vec<ProvActivity>,
    used: Vec<(String, String)>,
    generated: Vec<(String, String)>,
}

impl ProvRecord {
    pub fn new(
        entities: Vec<ProvEntity>,
        activities: Vec<ProvActivity>,
        used: Vec<(String, String)>,
        generated: Vec<(String, String)>,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidProv(m));
        let mut roles = HashMap::new();
        for e in &entities {
            if roles.insert(e.id.as_str(), e.role).is_some() {
                return bad(format!("duplicate entity `{}`", e.id));
            }
            if !is_sha256(&e.sha256) {
                return bad(format!("entity `{}` has a malformed checksum", e.id));
            }
        }
        let mut activity_ids = BTreeSet::new();
        for a in &activities {
            if !activity_ids.insert(a.id.as_str()) || roles.contains_key(a.id.as_str()) {
                return bad(format!("duplicate id `{}`", a.id));
            }
            if a.ended_at < a.started_at {
                return bad(format!("activity `{}` ends before it starts", a.id));
            }
        }

        let mut uses: HashMap<&str, usize> = HashMap::new();
        for (a, e) in &used {
            if !activity_ids.contains(a.as_str()) {
                return bad(format!("used link names unknown activity `{a}`"));
            }
            if roles.get(e.as_str()) != Some(&EntityRole::Ontology) {
                return bad(format!("activity `{a}` uses `{e}`, which is not an ontology entity"));
            }
            *uses.entry(a).or_default() += 1;
        }
        for a in &activity_ids {
            if uses.get(a).copied().unwrap_or(0) != 1 {
                return bad(format!("activity `{a}` must use exactly one ontology"));
            }
        }

        let mut generators: HashMap<&str, usize> = HashMap::new();
        for (a, e) in &generated {
            if !activity_ids.contains(a.as_str()) {
                return bad(format!("generation link names unknown activity `{a}`"));
            }
            if roles.get(e.as_str()) != Some(&EntityRole::Embedding) {
                return bad(format!("`{e}` is not an embedding entity"));
            }
            *generators.entry(e).or_default() += 1;
        }
        for e in entities.iter().filter(|e| e.role == EntityRole::Embedding) {
            if generators.get(e.id.as_str()).copied().unwrap_or(0) != 1 {
                return bad(format!(
                    "embedding `{}` must have exactly one generating activity",
                    e.id
                ));
            }
        }

        Ok(Self {
            entities,
            activities,
            used,
            generated,
        })
    }

    /// Record for a single training run.
    pub fn for_run(ontology: ProvEntity, embedding: ProvEntity, activity: ProvActivity) -> Result<Self> {
        let used = vec![(activity.id.clone(), ontology.id.clone())];
        let generated = vec![(activity.id.clone(), embedding.id.clone())];
        Self::new(vec![ontology, embedding], vec![activity], used, generated)
    }

    /// Union of several records that share ontology entities.
    pub fn merge(records: &[ProvRecord]) -> Result<Self> {
        let mut entities: Vec<ProvEntity> = Vec::new();
        let (mut activities, mut used, mut generated) = (Vec::new(), Vec::new(), Vec::new());
        for r in records {
            for e in &r.entities {
                if !entities.iter().any(|x| x == e) {
                    entities.push(e.clone());
                }
            }
            activities.extend(r.activities.iter().cloned());
            used.extend(r.used.iter().cloned());
            generated.extend(r.generated.iter().cloned());
        }
        Self::new(entities, activities, used, generated)
    }

    pub fn entities(&self) -> &[ProvEntity] {
        &self.entities
    }

    pub fn activities(&self) -> &[ProvActivity] {
        &self.activities
    }

    pub fn to_json_value(&self) -> Value {
        let prefixed = |id: &str| format!("ontovec:{id}");
        let mut entity = BTreeMap::new();
        for e in &self.entities {
            entity.insert(
                prefixed(&e.id),
                json!({
                    "prov:type": e.role.as_str(),
                    "prov:location": e.location,
                    "sha256": e.sha256,
                }),
            );
        }
        let mut activity = BTreeMap::new();
        for a in &self.activities {
            let mut attrs = a.hyperparameters.clone();
            attrs.insert("model".into(), json!(a.model.as_str()));
            attrs.insert("prov:startTime".into(), json!(timestamp(&a.started_at)));
            attrs.insert("prov:endTime".into(), json!(timestamp(&a.ended_at)));
            activity.insert(prefixed(&a.id), Value::Object(attrs));
        }
        let mut used = BTreeMap::new();
        for (i, (a, e)) in self.used.iter().enumerate() {
            used.insert(
                format!("_:u{i}"),
                json!({"prov:activity": prefixed(a), "prov:entity": prefixed(e)}),
            );
        }
        let mut generated = BTreeMap::new();
        for (i, (a, e)) in self.generated.iter().enumerate() {
            generated.insert(
                format!("_:g{i}"),
                json!({"prov:activity": prefixed(a), "prov:entity": prefixed(e)}),
            );
        }
        json!({
            "prefix": {"ontovec": NAMESPACE, "prov": PROV_NAMESPACE},
            "entity": entity,
            "activity": activity,
            "used": used,
            "wasGeneratedBy": generated,
        })
    }
}

/// Serializes a record (already validated at construction) as pretty JSON.
pub fn write_prov(record: &ProvRecord) -> String {
    serde_json::to_string_pretty(&record.to_json_value()).expect("JSON values always serialize")
}

fn timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn is_sha256(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

/// The full hyperparameter set of one training run as a flat map.
pub fn hyperparameters(kind: ModelKind, train: &TrainConfig, rdf2vec: &Rdf2VecConfig) -> Map<String, Value> {
    let mut map = Map::new();
    map.insert("dimension".into(), json!(train.dimension));
    map.insert("epochs".into(), json!(train.epochs));
    map.insert("seed".into(), json!(train.seed));
    if kind.is_scoring() {
        map.insert("batch_size".into(), json!(train.batch_size));
        map.insert("negatives_per_positive".into(), json!(train.negatives_per_positive));
        map.insert("margin".into(), json!(train.margin));
        map.insert("learning_rate".into(), json!(train.learning_rate));
        map.insert("loss".into(), json!("margin_ranking"));
        map.insert("optimizer".into(), serde_json::to_value(train.optimizer).expect("enum"));
        map.insert("norm_constraint".into(), json!(train.norm_constraint_for(kind)));
        if kind == ModelKind::TransE {
            map.insert(
                "scoring_norm".into(),
                serde_json::to_value(train.transe_norm).expect("enum"),
            );
        }
    } else {
        let sg = rdf2vec.skipgram_config(train.dimension, train.epochs, train.seed);
        map.insert("walks_per_entity".into(), json!(rdf2vec.walks_per_entity));
        map.insert("depth".into(), json!(rdf2vec.depth));
        map.insert("window".into(), json!(sg.window));
        map.insert("negatives".into(), json!(sg.negatives));
        map.insert("initial_lr".into(), json!(sg.initial_lr));
        map.insert("min_lr".into(), json!(sg.min_lr));
    }
    map
}
