use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Record, Schema, Value};
use crate::error::{Error, Result};
use crate::sigmoid;

pub const DEFAULT_COEF_RANGE: (i64, i64) = (-5, 5);
pub const OFFSET_RANGE: (i64, i64) = (-100, 100);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
            Comparator::Eq => "=",
        }
    }
}

impl FromStr for Comparator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "<=" | "≤" => Ok(Comparator::Le),
            ">=" | "≥" => Ok(Comparator::Ge),
            "=" | "==" => Ok(Comparator::Eq),
            other => Err(format!("unknown comparator `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Num(f64),
    Cat(String),
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Num(v) => write!(f, "{v}"),
            Threshold::Cat(s) => f.write_str(s),
        }
    }
}

/// A single comparison against one feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: String,
    pub op: Comparator,
    pub threshold: Threshold,
}

impl Condition {
    pub fn new(feature: impl Into<String>, op: Comparator, threshold: f64) -> Self {
        Condition {
            feature: feature.into(),
            op,
            threshold: Threshold::Num(threshold),
        }
    }

    pub fn category(feature: impl Into<String>, category: impl Into<String>) -> Self {
        Condition {
            feature: feature.into(),
            op: Comparator::Eq,
            threshold: Threshold::Cat(category.into()),
        }
    }

    pub fn holds(&self, value: &Value) -> Result<bool> {
        let type_err = |expected| Error::Type {
            feature: self.feature.clone(),
            expected,
            found: match value {
                Value::Num(v) => format!("number {v}"),
                Value::Cat(s) => format!("category `{s}`"),
            },
        };
        match (&self.threshold, value) {
            (Threshold::Num(t), Value::Num(v)) => Ok(match self.op {
                Comparator::Le => v <= t,
                Comparator::Ge => v >= t,
                Comparator::Eq => v == t,
            }),
            (Threshold::Num(_), Value::Cat(_)) => Err(type_err("a number")),
            (Threshold::Cat(c), Value::Cat(s)) if self.op == Comparator::Eq => Ok(c == s),
            (Threshold::Cat(_), _) => Err(type_err("a category")),
        }
    }

    /// Numeric fast path used by compiled tables.
    fn holds_num(&self, v: f64) -> bool {
        match (&self.threshold, self.op) {
            (Threshold::Num(t), Comparator::Le) => v <= *t,
            (Threshold::Num(t), Comparator::Ge) => v >= *t,
            (Threshold::Num(t), Comparator::Eq) => v == *t,
            (Threshold::Cat(_), _) => false,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.feature, self.op.symbol(), self.threshold)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub condition: Condition,
    pub points: i64,
}

/// Integer-point model: `P(y = 1) = 1 / (1 + exp(-(intercept + score)))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoringTable {
    pub intercept: i64,
    pub coef_range: (i64, i64),
    pub rows: Vec<Row>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    /// Points from satisfied rows, excluding the intercept.
    pub score: i64,
    pub probability: f64,
}

impl ScoringTable {
    pub fn new(intercept: i64, coef_range: (i64, i64), rows: Vec<Row>) -> Result<Self> {
        let table = ScoringTable {
            intercept,
            coef_range,
            rows,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.coef_range;
        if lo > hi {
            return Err(Error::Validation(format!("empty coefficient range [{lo}, {hi}]")));
        }
        if !(OFFSET_RANGE.0..=OFFSET_RANGE.1).contains(&self.intercept) {
            return Err(Error::Validation(format!(
                "intercept {} outside [{}, {}]",
                self.intercept, OFFSET_RANGE.0, OFFSET_RANGE.1
            )));
        }
        for row in &self.rows {
            if !(lo..=hi).contains(&row.points) {
                return Err(Error::Validation(format!(
                    "row `{}` has {} points outside [{lo}, {hi}]",
                    row.condition, row.points
                )));
            }
            if let Threshold::Num(t) = row.condition.threshold {
                if !t.is_finite() {
                    return Err(Error::Validation(format!("row `{}` has a non-finite threshold", row.condition)));
                }
            }
            if matches!(row.condition.threshold, Threshold::Cat(_)) && row.condition.op != Comparator::Eq {
                return Err(Error::Validation(format!(
                    "row `{}` orders a category",
                    row.condition
                )));
            }
        }
        Ok(())
    }

    /// Every referenced feature must be declared in `schema`.
    pub fn validate_against(&self, schema: &Schema) -> Result<()> {
        for row in &self.rows {
            if schema.column(&row.condition.feature).is_none() {
                return Err(Error::Schema(format!(
                    "table references unknown feature `{}`",
                    row.condition.feature
                )));
            }
        }
        Ok(())
    }

    pub fn probability_of(&self, score: i64) -> f64 {
        sigmoid((self.intercept + score) as f64)
    }

    pub fn evaluate(&self, record: &Record) -> Result<Evaluation> {
        let mut score = 0;
        for row in &self.rows {
            if row.condition.holds(record.feature(&row.condition.feature)?)? {
                score += row.points;
            }
        }
        Ok(Evaluation {
            score,
            probability: self.probability_of(score),
        })
    }

    /// Resolves row features against column names for repeated numeric use.
    pub fn compile(&self, columns: &[String]) -> Result<CompiledTable<'_>> {
        let idx = self
            .rows
            .iter()
            .map(|r| {
                if matches!(r.condition.threshold, Threshold::Cat(_)) {
                    return Err(Error::Type {
                        feature: r.condition.feature.clone(),
                        expected: "a category",
                        found: "numeric column".into(),
                    });
                }
                columns
                    .iter()
                    .position(|c| *c == r.condition.feature)
                    .ok_or_else(|| Error::Schema(format!("missing feature `{}`", r.condition.feature)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CompiledTable { table: self, idx })
    }

    /// Line-oriented text form.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "intercept {}\ncoef_range {} {}\n",
            self.intercept, self.coef_range.0, self.coef_range.1
        );
        for row in &self.rows {
            out.push_str(&format!("{} {}\n", row.condition, row.points));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut intercept = None;
        let mut coef_range = DEFAULT_COEF_RANGE;
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let int = |s: &str| s.parse::<i64>().map_err(|_| err(format!("`{s}` is not an integer")));
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts[0] {
                "intercept" => {
                    if parts.len() != 2 {
                        return Err(err("expected `intercept <integer>`".into()));
                    }
                    intercept = Some(int(parts[1])?);
                }
                "coef_range" => {
                    if parts.len() != 3 {
                        return Err(err("expected `coef_range <lo> <hi>`".into()));
                    }
                    coef_range = (int(parts[1])?, int(parts[2])?);
                }
                _ => {
                    if parts.len() != 4 {
                        return Err(err(format!(
                            "expected `feature op threshold points`, found {} fields",
                            parts.len()
                        )));
                    }
                    let op: Comparator = parts[1].parse().map_err(err)?;
                    let threshold = match parts[2].parse::<f64>() {
                        Ok(v) => Threshold::Num(v),
                        Err(_) => Threshold::Cat(parts[2].to_string()),
                    };
                    rows.push(Row {
                        condition: Condition {
                            feature: parts[0].to_string(),
                            op,
                            threshold,
                        },
                        points: int(parts[3])?,
                    });
                }
            }
        }
        let intercept = intercept.ok_or(Error::Parse {
            line: text.lines().count().max(1),
            message: "missing `intercept` header".into(),
        })?;
        ScoringTable::new(intercept, coef_range, rows)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: ScoringTable = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }
}

impl fmt::Display for ScoringTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "Pr(Y = +1) = 1 / (1 + exp(-({} + score)))",
            self.intercept
        )?;
        for (i, row) in self.rows.iter().enumerate() {
            writeln!(f, "{:>2}. {:<40} {:>3} points", i + 1, row.condition.to_string(), row.points)?;
        }
        write!(f, "ADD POINTS FROM ROWS 1 TO {}", self.rows.len())
    }
}

/// A table bound to column positions of a numeric matrix.
#[derive(Clone, Debug)]
pub struct CompiledTable<'a> {
    table: &'a ScoringTable,
    idx: Vec<usize>,
}

impl CompiledTable<'_> {
    pub fn score_row(&self, row: &[f64]) -> i64 {
        self.table
            .rows
            .iter()
            .zip(&self.idx)
            .filter(|(r, &j)| r.condition.holds_num(row[j]))
            .map(|(r, _)| r.points)
            .sum()
    }

    pub fn probability_row(&self, row: &[f64]) -> f64 {
        self.table.probability_of(self.score_row(row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kentucky_general() -> ScoringTable {
        let rows = [2.0, 3.0, 5.0]
            .iter()
            .map(|&k| Row {
                condition: Condition::new("p_arrest", Comparator::Ge, k),
                points: 1,
            })
            .collect();
        ScoringTable::new(-2, DEFAULT_COEF_RANGE, rows).unwrap()
    }

    #[test]
    fn kentucky_table_values() {
        let t = kentucky_general();
        let at = |a: f64| t.evaluate(&Record::new("x").with("p_arrest", a)).unwrap();
        assert_eq!(at(4.0).score, 2);
        assert_eq!(at(4.0).probability, 0.5);
        assert_eq!(at(0.0).score, 0);
        assert!((at(0.0).probability - 1.0 / (1.0 + 2f64.exp())).abs() < 1e-12);
        assert_eq!(at(10.0).score, 3);
        assert!((at(10.0).probability - 1.0 / (1.0 + (-1f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn missing_feature_is_named() {
        let err = kentucky_general().evaluate(&Record::new("x")).unwrap_err();
        assert!(matches!(err, Error::Schema(ref m) if m.contains("p_arrest")));
    }

    #[test]
    fn categorical_value_under_numeric_comparator() {
        let r = Record::new("x").with("p_arrest", Value::Cat("many".into()));
        assert!(matches!(kentucky_general().evaluate(&r), Err(Error::Type { .. })));
    }

    #[test]
    fn category_rows() {
        let t = ScoringTable::new(
            0,
            DEFAULT_COEF_RANGE,
            vec![Row {
                condition: Condition::category("charge_degree", "F"),
                points: 2,
            }],
        )
        .unwrap();
        let r = Record::new("x").with("charge_degree", Value::Cat("F".into()));
        assert_eq!(t.evaluate(&r).unwrap().score, 2);
        let text = t.to_text();
        assert_eq!(ScoringTable::parse_text(&text).unwrap(), t);
    }

    #[test]
    fn text_round_trips() {
        let empty = ScoringTable::new(-2, DEFAULT_COEF_RANGE, vec![]).unwrap();
        assert_eq!(ScoringTable::parse_text(&empty.to_text()).unwrap(), empty);
        let t = kentucky_general();
        let back = ScoringTable::parse_text(&t.to_text()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.rows.len(), 3);
        assert_eq!(back.intercept, -2);
        assert_eq!(ScoringTable::from_json(&t.to_json().unwrap()).unwrap(), t);
    }

    #[test]
    fn exact_text_rendering() {
        assert_eq!(
            kentucky_general().to_text(),
            "intercept -2\ncoef_range -5 5\np_arrest >= 2 1\np_arrest >= 3 1\np_arrest >= 5 1\n"
        );
    }

    #[test]
    fn out_of_range_points() {
        let err = ScoringTable::parse_text("intercept 0\ncoef_range -5 5\nx >= 1 7\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        let err = ScoringTable::parse_text("intercept 101\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn parse_errors_report_lines() {
        let err = ScoringTable::parse_text("intercept -2\nx >= 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = ScoringTable::parse_text("intercept -2\nx >> 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = ScoringTable::parse_text("x >= 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn validates_against_schema() {
        let t = kentucky_general();
        t.validate_against(&Schema::kentucky()).unwrap();
        let s = Schema::parse_declaration("age numeric feature\n").unwrap();
        assert!(t.validate_against(&s).is_err());
    }

    #[test]
    fn compiled_matches_record_evaluation() {
        let t = kentucky_general();
        let cols = vec!["age".to_string(), "p_arrest".to_string()];
        let c = t.compile(&cols).unwrap();
        for a in 0..8 {
            let r = Record::new("x").with("p_arrest", a as f64);
            assert_eq!(c.score_row(&[30.0, a as f64]), t.evaluate(&r).unwrap().score);
        }
    }
}
