use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::labels::{Event, LabelSet};
use crate::error::{Error, Result};

/// A feature cell: numbers (counts and 0/1 flags) or a category.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Cat(String),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            Value::Cat(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Cat(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

/// One individual: features, sensitive attributes, future events and labels.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub sensitive: BTreeMap<String, String>,
    pub features: BTreeMap<String, Value>,
    pub events: Vec<Event>,
    /// Absent when the source carried neither label columns nor events.
    pub labels: Option<LabelSet>,
}

impl Record {
    pub fn new(id: impl Into<String>) -> Self {
        Record {
            id: id.into(),
            ..Default::default()
        }
    }

    pub fn with(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.features.insert(name.to_string(), value.into());
        self
    }

    pub fn with_sensitive(mut self, name: &str, value: &str) -> Self {
        self.sensitive.insert(name.to_string(), value.to_string());
        self
    }

    pub fn feature(&self, name: &str) -> Result<&Value> {
        self.features
            .get(name)
            .ok_or_else(|| Error::Schema(format!("record `{}` lacks feature `{name}`", self.id)))
    }

    pub fn numeric(&self, name: &str) -> Result<f64> {
        match self.feature(name)? {
            Value::Num(v) => Ok(*v),
            Value::Cat(s) => Err(Error::Type {
                feature: name.to_string(),
                expected: "a number",
                found: format!("category `{s}`"),
            }),
        }
    }

    pub fn flag(&self, name: &str) -> Result<bool> {
        Ok(self.numeric(name)? != 0.0)
    }

    pub fn labels(&self) -> Result<LabelSet> {
        self.labels
            .ok_or_else(|| Error::Schema(format!("record `{}` carries no labels", self.id)))
    }
}
