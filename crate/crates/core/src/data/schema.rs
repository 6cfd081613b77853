use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Boolean,
    Categorical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnRole {
    Id,
    Feature,
    Sensitive,
    Events,
    Label,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub role: ColumnRole,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind, role: ColumnRole) -> Self {
        ColumnSpec {
            name: name.into(),
            kind,
            role,
        }
    }
}

/// Column layout of a record file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    columns: Vec<ColumnSpec>,
}

pub const ID_COLUMN: &str = "person_id";
pub const EVENTS_COLUMN: &str = "events";
pub const AGE_COLUMN: &str = "age_at_current_charge";
pub const MIN_AGE: f64 = 18.0;
pub const MAX_AGE: f64 = 70.0;

const SHARED_COUNTS: &[&str] = &[
    "p_arrest",
    "p_charges",
    "p_violence",
    "p_felony",
    "p_misdemeanor",
    "p_property",
    "p_murder",
    "p_sex_offenses",
    "p_weapon",
    "p_felprop_viol",
    "p_felassault",
    "p_misdeassault",
    "p_traffic",
    "p_drug",
    "p_dui",
    "p_stalking",
    "p_voyeurism",
    "p_fraud",
    "p_stealing",
    "p_trespass",
    "p_fta_two_year",
    "p_fta_two_year_plus",
    "p_pending_charge",
    "p_probation",
];

const SHARED_FLAGS: &[&str] = &[
    "p_incarceration",
    "six_month",
    "one_year",
    "three_year",
    "five_year",
    "current_violence",
    "current_violence20",
    "current_pending_charge",
];

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for c in &columns {
            if c.name.is_empty() || c.name.contains(char::is_whitespace) {
                return Err(Error::Schema(format!("invalid column name `{}`", c.name)));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
            }
        }
        let ids = columns.iter().filter(|c| c.role == ColumnRole::Id).count();
        if ids > 1 {
            return Err(Error::Schema("more than one id column".into()));
        }
        Ok(Schema { columns })
    }

    /// Kentucky feature layout (convicted-charge counts, ADE and treatment).
    pub fn kentucky() -> Self {
        let mut extra = vec![("p_assault", ColumnKind::Numeric)];
        extra.push(("ADE", ColumnKind::Numeric));
        extra.push(("treatment", ColumnKind::Numeric));
        Self::regional(&extra)
    }

    /// Broward feature layout (adds age at first charge and juvenile counts).
    pub fn broward() -> Self {
        let extra = vec![
            ("age_at_first_charge", ColumnKind::Numeric),
            ("p_juv_fel_count", ColumnKind::Numeric),
            ("p_famviol", ColumnKind::Numeric),
            ("p_domestic", ColumnKind::Numeric),
            ("total_convictions", ColumnKind::Numeric),
        ];
        Self::regional(&extra)
    }

    fn regional(extra: &[(&str, ColumnKind)]) -> Self {
        use ColumnKind::*;
        use ColumnRole::*;
        let mut cols = vec![
            ColumnSpec::new(ID_COLUMN, Categorical, Id),
            ColumnSpec::new("sex", Categorical, Sensitive),
            ColumnSpec::new("race", Categorical, Sensitive),
            ColumnSpec::new(AGE_COLUMN, Numeric, Feature),
        ];
        for (name, kind) in extra.iter().filter(|(n, _)| n.starts_with("age")) {
            cols.push(ColumnSpec::new(*name, *kind, Feature));
        }
        for name in SHARED_COUNTS {
            cols.push(ColumnSpec::new(*name, Numeric, Feature));
        }
        for (name, kind) in extra.iter().filter(|(n, _)| !n.starts_with("age")) {
            cols.push(ColumnSpec::new(*name, *kind, Feature));
        }
        for name in SHARED_FLAGS {
            cols.push(ColumnSpec::new(*name, Boolean, Feature));
        }
        cols.push(ColumnSpec::new(EVENTS_COLUMN, Categorical, Events));
        for key in super::LabelKey::all() {
            cols.push(ColumnSpec::new(key.name(), Boolean, Label));
        }
        Schema::new(cols).expect("built-in schema is valid")
    }

    /// Parses a declaration file with one `name kind role` line per column.
    /// Blank lines and `#` comments are ignored.
    pub fn parse_declaration(text: &str) -> Result<Self> {
        let mut cols = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            if parts.len() != 3 {
                return Err(err(format!(
                    "expected `name kind role`, found {} fields",
                    parts.len()
                )));
            }
            let kind = match parts[1] {
                "numeric" => ColumnKind::Numeric,
                "boolean" => ColumnKind::Boolean,
                "categorical" => ColumnKind::Categorical,
                other => return Err(err(format!("unknown column kind `{other}`"))),
            };
            let role = match parts[2] {
                "id" => ColumnRole::Id,
                "feature" => ColumnRole::Feature,
                "sensitive" => ColumnRole::Sensitive,
                "events" => ColumnRole::Events,
                "label" => ColumnRole::Label,
                other => return Err(err(format!("unknown column role `{other}`"))),
            };
            cols.push(ColumnSpec::new(parts[0], kind, role));
        }
        Schema::new(cols)
    }

    pub fn to_declaration(&self) -> String {
        let mut out = String::new();
        for c in &self.columns {
            let kind = match c.kind {
                ColumnKind::Numeric => "numeric",
                ColumnKind::Boolean => "boolean",
                ColumnKind::Categorical => "categorical",
            };
            let role = match c.role {
                ColumnRole::Id => "id",
                ColumnRole::Feature => "feature",
                ColumnRole::Sensitive => "sensitive",
                ColumnRole::Events => "events",
                ColumnRole::Label => "label",
            };
            out.push_str(&format!("{} {} {}\n", c.name, kind, role));
        }
        out
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    fn names_with(&self, role: ColumnRole) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.role == role)
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.names_with(ColumnRole::Feature)
    }

    pub fn sensitive_names(&self) -> Vec<String> {
        self.names_with(ColumnRole::Sensitive)
    }

    pub fn id_column(&self) -> Option<&str> {
        self.columns
            .iter()
            .find(|c| c.role == ColumnRole::Id)
            .map(|c| c.name.as_str())
    }

    pub fn events_column(&self) -> Option<&str> {
        self.columns
            .iter()
            .find(|c| c.role == ColumnRole::Events)
            .map(|c| c.name.as_str())
    }

    /// Restricts the feature columns to `keep`, leaving other roles intact.
    pub fn with_features(&self, keep: &[String]) -> Schema {
        Schema {
            columns: self
                .columns
                .iter()
                .filter(|c| c.role != ColumnRole::Feature || keep.contains(&c.name))
                .cloned()
                .collect(),
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_declaration())
    }
}

/// Sorted intersection of the feature names of two schemas.
///
/// Id, event and label columns never participate. Sensitive attributes are
/// included only when `include_sensitive` is set.
pub fn shared_schema(a: &Schema, b: &Schema, include_sensitive: bool) -> Vec<String> {
    let pick = |s: &Schema| -> std::collections::BTreeSet<String> {
        s.columns
            .iter()
            .filter(|c| {
                c.role == ColumnRole::Feature
                    || (include_sensitive && c.role == ColumnRole::Sensitive)
            })
            .map(|c| c.name.clone())
            .collect()
    };
    let left = pick(a);
    let right = pick(b);
    left.intersection(&right).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_schemas_share_every_feature() {
        let k = Schema::kentucky();
        let shared = shared_schema(&k, &k, false);
        let mut expected = k.feature_names();
        expected.sort();
        assert_eq!(shared, expected);
    }

    #[test]
    fn disjoint_schemas_share_nothing() {
        let a = Schema::parse_declaration("x numeric feature\n").unwrap();
        let b = Schema::parse_declaration("y numeric feature\n").unwrap();
        assert!(shared_schema(&a, &b, false).is_empty());
    }

    #[test]
    fn age_at_first_charge_is_broward_only() {
        let shared = shared_schema(&Schema::broward(), &Schema::kentucky(), false);
        assert!(!shared.iter().any(|f| f == "age_at_first_charge"));
        assert!(!shared.iter().any(|f| f == "ADE"));
        assert!(shared.iter().any(|f| f == "p_arrest"));
        assert!(shared.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sensitive_attributes_only_on_request() {
        let k = Schema::kentucky();
        assert!(!shared_schema(&k, &k, false).contains(&"race".to_string()));
        assert!(shared_schema(&k, &k, true).contains(&"race".to_string()));
    }

    #[test]
    fn declaration_round_trip() {
        let s = Schema::broward();
        let back = Schema::parse_declaration(&s.to_declaration()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn declaration_errors_carry_line_numbers() {
        let err = Schema::parse_declaration("a numeric feature\nb wrong feature\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }
}
