//! Arnold Public Safety Assessment point models.
//!
//! New Criminal Activity (NCA): seven factors, 0-13 points, scaled 1-6.
//! New Violent Criminal Activity (NVCA): five factors, 0-7 points, flagged at
//! four points or more.

use serde::{Deserialize, Serialize};

use super::table::{Comparator, Condition, Row, ScoringTable};
use crate::data::Record;
use crate::error::{Error, Result};

/// Record fields feeding the PSA factors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsaFields {
    pub age: String,
    pub pending_charge: String,
    pub prior_misdemeanor: String,
    pub prior_felony: String,
    pub prior_violent: String,
    pub prior_fta_two_year: String,
    pub prior_incarceration: String,
    pub current_violent: String,
    pub current_violent_20: String,
}

impl Default for PsaFields {
    fn default() -> Self {
        PsaFields {
            age: "age_at_current_charge".into(),
            pending_charge: "current_pending_charge".into(),
            prior_misdemeanor: "p_misdemeanor".into(),
            prior_felony: "p_felony".into(),
            prior_violent: "p_violence".into(),
            prior_fta_two_year: "p_fta_two_year".into(),
            prior_incarceration: "p_incarceration".into(),
            current_violent: "current_violence".into(),
            current_violent_20: "current_violence20".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NcaInputs {
    pub age: f64,
    pub pending_charge: bool,
    pub prior_misdemeanor: bool,
    pub prior_felony: bool,
    pub prior_violent: u32,
    pub prior_fta_two_year: u32,
    pub prior_incarceration: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NvcaInputs {
    pub current_violent: bool,
    pub current_violent_20: bool,
    pub pending_charge: bool,
    pub prior_conviction: bool,
    pub prior_violent: u32,
}

fn count(record: &Record, name: &str) -> Result<u32> {
    let v = record.numeric(name)?;
    if v < 0.0 || v.fract() != 0.0 {
        return Err(Error::Validation(format!("`{name}` = {v} is not a count")));
    }
    Ok(v as u32)
}

impl NcaInputs {
    pub fn from_record(record: &Record, fields: &PsaFields) -> Result<Self> {
        Ok(NcaInputs {
            age: record.numeric(&fields.age)?,
            pending_charge: record.flag(&fields.pending_charge)?,
            prior_misdemeanor: record.numeric(&fields.prior_misdemeanor)? >= 1.0,
            prior_felony: record.numeric(&fields.prior_felony)? >= 1.0,
            prior_violent: count(record, &fields.prior_violent)?,
            prior_fta_two_year: count(record, &fields.prior_fta_two_year)?,
            prior_incarceration: record.flag(&fields.prior_incarceration)?,
        })
    }
}

impl NvcaInputs {
    pub fn from_record(record: &Record, fields: &PsaFields) -> Result<Self> {
        let misd = record.numeric(&fields.prior_misdemeanor)?;
        let fel = record.numeric(&fields.prior_felony)?;
        Ok(NvcaInputs {
            current_violent: record.flag(&fields.current_violent)?,
            current_violent_20: record.flag(&fields.current_violent_20)?,
            pending_charge: record.flag(&fields.pending_charge)?,
            prior_conviction: misd + fel >= 1.0,
            prior_violent: count(record, &fields.prior_violent)?,
        })
    }
}

/// Prior violent convictions: 0 -> 0, 1 or 2 -> 1, 3 or more -> 2.
fn prior_violent_points(n: u32) -> u8 {
    match n {
        0 => 0,
        1 | 2 => 1,
        _ => 2,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PsaNcaModel;

impl PsaNcaModel {
    pub const MAX_POINTS: u8 = 13;
    /// Scaled score for 0..=13 total points.
    pub const SCALE: [u8; 14] = [1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6, 6, 6, 6];

    pub fn points(&self, x: &NcaInputs) -> u8 {
        let mut p = 0;
        if x.age <= 22.0 {
            p += 2;
        }
        if x.pending_charge {
            p += 3;
        }
        p += u8::from(x.prior_misdemeanor);
        p += u8::from(x.prior_felony);
        p += prior_violent_points(x.prior_violent);
        p += match x.prior_fta_two_year {
            0 => 0,
            1 => 1,
            _ => 2,
        };
        if x.prior_incarceration {
            p += 2;
        }
        p
    }

    pub fn scale(&self, points: u8) -> Result<u8> {
        Self::SCALE
            .get(usize::from(points))
            .copied()
            .ok_or_else(|| Error::Validation(format!("NCA points {points} outside 0..=13")))
    }

    /// Equivalent integer table over raw record fields (intercept 0).
    pub fn as_table(&self, f: &PsaFields) -> ScoringTable {
        let ge = |name: &str, k: f64, points| Row {
            condition: Condition::new(name, Comparator::Ge, k),
            points,
        };
        let rows = vec![
            Row {
                condition: Condition::new(f.age.clone(), Comparator::Le, 22.0),
                points: 2,
            },
            ge(&f.pending_charge, 1.0, 3),
            ge(&f.prior_misdemeanor, 1.0, 1),
            ge(&f.prior_felony, 1.0, 1),
            ge(&f.prior_violent, 1.0, 1),
            ge(&f.prior_violent, 3.0, 1),
            ge(&f.prior_fta_two_year, 1.0, 1),
            ge(&f.prior_fta_two_year, 2.0, 1),
            ge(&f.prior_incarceration, 1.0, 2),
        ];
        ScoringTable::new(0, (0, 3), rows).expect("PSA table is valid")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PsaNvcaModel;

impl PsaNvcaModel {
    pub const MAX_POINTS: u8 = 7;
    pub const FLAG_AT: u8 = 4;

    pub fn points(&self, x: &NvcaInputs) -> u8 {
        let mut p = 0;
        if x.current_violent {
            p += 2;
        }
        p += u8::from(x.current_violent_20);
        p += u8::from(x.pending_charge);
        p += u8::from(x.prior_conviction);
        p + prior_violent_points(x.prior_violent)
    }

    pub fn flag(&self, points: u8) -> Result<bool> {
        if points > Self::MAX_POINTS {
            return Err(Error::Validation(format!("NVCA points {points} outside 0..=7")));
        }
        Ok(points >= Self::FLAG_AT)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NcaScore {
    pub raw: u8,
    pub scaled: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NvcaScore {
    pub raw: u8,
    pub flag: bool,
}

pub fn score_psa_nca(record: &Record, fields: &PsaFields) -> Result<NcaScore> {
    let model = PsaNcaModel;
    let raw = model.points(&NcaInputs::from_record(record, fields)?);
    Ok(NcaScore {
        raw,
        scaled: model.scale(raw)?,
    })
}

pub fn score_psa_nvca(record: &Record, fields: &PsaFields) -> Result<NvcaScore> {
    let model = PsaNvcaModel;
    let raw = model.points(&NvcaInputs::from_record(record, fields)?);
    Ok(NvcaScore {
        raw,
        flag: model.flag(raw)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nca_record(age: f64, pending: f64) -> Record {
        Record::new("r")
            .with("age_at_current_charge", age)
            .with("current_pending_charge", pending)
            .with("p_misdemeanor", 0.0)
            .with("p_felony", 0.0)
            .with("p_violence", 0.0)
            .with("p_fta_two_year", 0.0)
            .with("p_incarceration", 0.0)
    }

    #[test]
    fn nca_examples() {
        let f = PsaFields::default();
        assert_eq!(score_psa_nca(&nca_record(40.0, 0.0), &f).unwrap(), NcaScore { raw: 0, scaled: 1 });
        assert_eq!(score_psa_nca(&nca_record(22.0, 1.0), &f).unwrap(), NcaScore { raw: 5, scaled: 4 });
        let max = NcaInputs {
            age: 19.0,
            pending_charge: true,
            prior_misdemeanor: true,
            prior_felony: true,
            prior_violent: 3,
            prior_fta_two_year: 2,
            prior_incarceration: true,
        };
        let raw = PsaNcaModel.points(&max);
        assert_eq!((raw, PsaNcaModel.scale(raw).unwrap()), (13, 6));
    }

    #[test]
    fn age_boundary_is_22() {
        let f = PsaFields::default();
        assert_eq!(score_psa_nca(&nca_record(22.0, 0.0), &f).unwrap().raw, 2);
        assert_eq!(score_psa_nca(&nca_record(23.0, 0.0), &f).unwrap().raw, 0);
    }

    #[test]
    fn missing_input_is_schema_error() {
        let r = Record::new("r").with("age_at_current_charge", 30.0);
        assert!(matches!(score_psa_nca(&r, &PsaFields::default()), Err(Error::Schema(_))));
        assert!(matches!(score_psa_nvca(&r, &PsaFields::default()), Err(Error::Schema(_))));
    }

    #[test]
    fn out_of_range_points_are_rejected() {
        assert!(PsaNcaModel.scale(14).is_err());
        assert!(PsaNvcaModel.flag(8).is_err());
    }

    #[test]
    fn nca_table_agrees_with_point_model() {
        let f = PsaFields::default();
        let table = PsaNcaModel.as_table(&f);
        for age in [18.0, 22.0, 23.0, 50.0] {
            for pending in [0.0, 1.0] {
                for viol in 0..5 {
                    for fta in 0..4 {
                        let r = nca_record(age, pending)
                            .with("p_violence", viol as f64)
                            .with("p_fta_two_year", fta as f64)
                            .with("p_felony", (viol % 2) as f64)
                            .with("p_incarceration", (fta % 2) as f64);
                        let direct = score_psa_nca(&r, &f).unwrap().raw as i64;
                        assert_eq!(table.evaluate(&r).unwrap().score, direct);
                    }
                }
            }
        }
    }
}
