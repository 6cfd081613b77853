//! Seeded synthetic populations for exercising the pipeline at desk scale.
//!
//! A person's two-year general outcome is drawn through a logistic link on an
//! age curve plus criminal-history terms; the intercept is solved so that the
//! expected base rate over the drawn population matches the profile exactly.
//! Type-specific and six-month outcomes are then allocated conditionally on
//! the general outcome so that every one of the twelve rates is hit in
//! expectation and horizons stay nested. Outcomes are materialized as events,
//! and labels are derived from them with [`build_labels`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::labels::{build_labels, ChargeType, Event, Horizon, LabelKey, Level};
use super::record::{Record, Value};
use super::schema::{Schema, MAX_AGE, MIN_AGE};
use crate::error::{Error, Result};
use crate::sigmoid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Kentucky,
    Broward,
}

impl Region {
    pub fn schema(self) -> Schema {
        match self {
            Region::Kentucky => Schema::kentucky(),
            Region::Broward => Schema::broward(),
        }
    }
}

/// Base rates indexed like [`ChargeType::ALL`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseRates {
    pub two_year: [f64; 6],
    pub six_month: [f64; 6],
}

impl BaseRates {
    pub fn get(&self, key: LabelKey) -> f64 {
        let i = ChargeType::ALL.iter().position(|&c| c == key.charge).unwrap();
        match key.horizon {
            Horizon::TwoYear => self.two_year[i],
            Horizon::SixMonth => self.six_month[i],
        }
    }

    pub fn set(&mut self, key: LabelKey, value: f64) {
        let i = ChargeType::ALL.iter().position(|&c| c == key.charge).unwrap();
        match key.horizon {
            Horizon::TwoYear => self.two_year[i] = value,
            Horizon::SixMonth => self.six_month[i] = value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionProfile {
    pub region: Region,
    pub base_rates: BaseRates,
    /// Age (years) where the recidivism bump peaks.
    pub age_peak: f64,
    pub age_width: f64,
    /// Log-odds height of the age bump.
    pub age_strength: f64,
    /// Mean of `age - 18` in the population.
    pub age_mean_excess: f64,
    /// Log-odds per unit of `ln(1 + prior arrests)`.
    pub history_weight: f64,
    /// Mean yearly arrest propensity.
    pub history_mean: f64,
    pub noise_sd: f64,
    pub race_mix: Vec<(String, f64)>,
    pub sex_mix: Vec<(String, f64)>,
}

impl RegionProfile {
    /// Kentucky-like population: risk peaks in the early-to-mid thirties and
    /// is driven mostly by prior arrests.
    pub fn kentucky() -> Self {
        RegionProfile {
            region: Region::Kentucky,
            base_rates: BaseRates {
                two_year: [0.204, 0.034, 0.087, 0.039, 0.096, 0.156],
                six_month: [0.057, 0.007, 0.020, 0.009, 0.024, 0.039],
            },
            age_peak: 33.0,
            age_width: 9.0,
            age_strength: 0.8,
            age_mean_excess: 15.0,
            history_weight: 0.9,
            history_mean: 0.35,
            noise_sd: 0.5,
            race_mix: vec![
                ("African-American".into(), 0.1683),
                ("Caucasian".into(), 0.8069),
                ("Other".into(), 0.0248),
            ],
            sex_mix: vec![("Female".into(), 0.3158), ("Male".into(), 0.6842)],
        }
    }

    /// Broward-like population: risk is highest from the late teens to the
    /// late twenties and falls afterwards.
    pub fn broward() -> Self {
        RegionProfile {
            region: Region::Broward,
            base_rates: BaseRates {
                two_year: [0.455, 0.210, 0.093, 0.090, 0.176, 0.272],
                six_month: [0.218, 0.084, 0.040, 0.050, 0.089, 0.125],
            },
            age_peak: 22.0,
            age_width: 10.0,
            age_strength: 2.0,
            age_mean_excess: 14.0,
            history_weight: 0.5,
            history_mean: 0.35,
            noise_sd: 0.5,
            race_mix: vec![
                ("African-American".into(), 0.50),
                ("Caucasian".into(), 0.36),
                ("Hispanic".into(), 0.10),
                ("Other".into(), 0.04),
            ],
            sex_mix: vec![("Female".into(), 0.2), ("Male".into(), 0.8)],
        }
    }

    pub fn for_region(region: Region) -> Self {
        match region {
            Region::Kentucky => Self::kentucky(),
            Region::Broward => Self::broward(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for key in LabelKey::all() {
            let r = self.base_rates.get(key);
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("base rate {key} = {r} outside [0, 1]"));
            }
        }
        let g2 = self.base_rates.get(general(Horizon::TwoYear));
        let g6 = self.base_rates.get(general(Horizon::SixMonth));
        if g2 <= 0.0 || g2 >= 1.0 {
            return bad(format!("two-year general rate {g2} must lie strictly in (0, 1)"));
        }
        if g6 > g2 {
            return bad("six-month general rate exceeds two-year rate".into());
        }
        for c in &ChargeType::ALL[1..] {
            let r2 = self.base_rates.get(LabelKey::new(*c, Horizon::TwoYear));
            let r6 = self.base_rates.get(LabelKey::new(*c, Horizon::SixMonth));
            if r6 > r2 {
                return bad(format!("{} six-month rate exceeds two-year rate", c.as_str()));
            }
            if r2 > g2 || r6 > g6 {
                return bad(format!("{} rate exceeds the general rate", c.as_str()));
            }
            if type_allocation(g2, g6, r2, r6).is_none() {
                return bad(format!(
                    "{} rates cannot be nested inside the general rates",
                    c.as_str()
                ));
            }
        }
        for (name, mix) in [("race", &self.race_mix), ("sex", &self.sex_mix)] {
            if mix.is_empty() || mix.iter().any(|(_, p)| !(0.0..=1.0).contains(p)) {
                return bad(format!("{name} mix has invalid proportions"));
            }
            let total: f64 = mix.iter().map(|(_, p)| p).sum();
            if (total - 1.0).abs() > 1e-6 {
                return bad(format!("{name} mix sums to {total}, not 1"));
            }
        }
        for (name, v) in [
            ("age_width", self.age_width),
            ("age_mean_excess", self.age_mean_excess),
            ("history_mean", self.history_mean),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad("noise_sd must be non-negative".into());
        }
        Ok(())
    }

    /// Log-odds contribution of age.
    pub fn age_effect(&self, age: f64) -> f64 {
        let z = (age - self.age_peak) / self.age_width;
        self.age_strength * (-z * z).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub profile: RegionProfile,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(profile: RegionProfile, seed: u64) -> Self {
        SynthConfig { profile, seed }
    }
}

fn general(h: Horizon) -> LabelKey {
    LabelKey::new(ChargeType::General, h)
}

/// Conditional probabilities, given a two-year general positive, of a type
/// being a six-month positive (only when the general six-month outcome is
/// positive) and a two-year-only positive in each six-month state.
#[derive(Clone, Copy, Debug)]
struct TypeAllocation {
    six_given_s: f64,
    late_given_s: f64,
    late_given_not_s: f64,
}

fn type_allocation(g2: f64, g6: f64, r2: f64, r6: f64) -> Option<TypeAllocation> {
    let a = g6 / g2;
    let six_given_s = if g6 > 0.0 { r6 / g6 } else { 0.0 };
    let late = (r2 - r6) / g2;
    let late_given_s = late.min(1.0 - six_given_s);
    let late_given_not_s = if a < 1.0 {
        (late - a * late_given_s) / (1.0 - a)
    } else if (late - late_given_s).abs() < 1e-12 {
        0.0
    } else {
        return None;
    };
    let ok = |p: f64| (-1e-12..=1.0 + 1e-12).contains(&p);
    (ok(six_given_s) && ok(late_given_s) && ok(late_given_not_s)).then_some(TypeAllocation {
        six_given_s,
        late_given_s,
        late_given_not_s: late_given_not_s.clamp(0.0, 1.0),
    })
}

fn pick<'a, R: Rng>(rng: &mut R, mix: &'a [(String, f64)]) -> &'a str {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (name, p) in mix {
        acc += p;
        if u < acc {
            return name;
        }
    }
    &mix[mix.len() - 1].0
}

fn binom<R: Rng>(rng: &mut R, n: u64, p: f64) -> f64 {
    if n == 0 || p <= 0.0 {
        return 0.0;
    }
    Binomial::new(n, p.min(1.0)).unwrap().sample(rng) as f64
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).unwrap().sample(rng) as u64
}

fn flag(b: bool) -> Value {
    Value::Num(f64::from(u8::from(b)))
}

/// Draws the feature columns of one person.
fn draw_person<R: Rng>(rng: &mut R, p: &RegionProfile, schema: &Schema, id: usize) -> Record {
    let age_dist = Gamma::new(2.0, p.age_mean_excess / 2.0).unwrap();
    let age = (MIN_AGE + age_dist.sample(rng).floor()).min(MAX_AGE);
    let propensity = Gamma::new(0.8, p.history_mean / 0.8).unwrap().sample(rng);
    let years_at_risk = (age - 16.0).max(1.0);
    let arrests = poisson(rng, propensity * years_at_risk);
    let charges = arrests + poisson(rng, 0.6 * arrests as f64);

    let mut rec = Record::new(format!("p{id:07}"));
    rec.sensitive.insert("race".into(), pick(rng, &p.race_mix).to_string());
    rec.sensitive.insert("sex".into(), pick(rng, &p.sex_mix).to_string());

    let felony = binom(rng, charges, 0.35);
    let misdemeanor = charges as f64 - felony;
    let violence = binom(rng, charges, 0.15);
    let property = binom(rng, charges, 0.2);
    let pending = binom(rng, arrests, 0.15);
    let fta = poisson(rng, 0.15 * arrests as f64).min(6) as f64;
    let last_gap = if arrests == 0 {
        f64::INFINITY
    } else {
        let rate = 0.4 + propensity * 2.0;
        -(1.0 - rng.random::<f64>()).ln() / rate
    };
    let current_violence = rng.random_bool(0.2);
    let mut values: Vec<(&str, Value)> = vec![
        ("age_at_current_charge", Value::Num(age)),
        ("p_arrest", Value::Num(arrests as f64)),
        ("p_charges", Value::Num(charges as f64)),
        ("p_violence", Value::Num(violence)),
        ("p_felony", Value::Num(felony)),
        ("p_misdemeanor", Value::Num(misdemeanor)),
        ("p_property", Value::Num(property)),
        ("p_drug", Value::Num(binom(rng, charges, 0.25))),
        ("p_traffic", Value::Num(binom(rng, charges, 0.15))),
        ("p_fta_two_year", Value::Num(fta)),
        ("p_fta_two_year_plus", Value::Num(poisson(rng, 0.1 * arrests as f64) as f64)),
        ("p_pending_charge", Value::Num(pending)),
        ("p_probation", Value::Num(binom(rng, arrests, 0.2))),
        ("p_incarceration", flag(rng.random_bool(1.0 - (-0.4 * felony).exp()))),
        ("six_month", flag(last_gap <= 0.5)),
        ("one_year", flag(last_gap <= 1.0)),
        ("three_year", flag(last_gap <= 3.0)),
        ("five_year", flag(last_gap <= 5.0)),
        ("current_violence", flag(current_violence)),
        ("current_violence20", flag(current_violence && age <= 20.0)),
        ("current_pending_charge", flag(rng.random_bool(0.1 + 0.3 * (pending > 0.0) as u8 as f64))),
    ];
    let minor = [
        ("p_murder", 0.005),
        ("p_sex_offenses", 0.02),
        ("p_weapon", 0.05),
        ("p_felprop_viol", 0.04),
        ("p_felassault", 0.04),
        ("p_misdeassault", 0.06),
        ("p_dui", 0.06),
        ("p_stalking", 0.01),
        ("p_voyeurism", 0.005),
        ("p_fraud", 0.05),
        ("p_stealing", 0.1),
        ("p_trespass", 0.06),
        ("p_assault", 0.08),
        ("p_famviol", 0.03),
        ("p_domestic", 0.04),
        ("p_juv_fel_count", 0.03),
        ("ADE", 0.04),
        ("treatment", 0.05),
    ];
    for (name, share) in minor {
        values.push((name, Value::Num(binom(rng, charges, share))));
    }
    let first = if arrests == 0 {
        age
    } else {
        (age - rng.random_range(0.0..(age - 12.0))).floor().max(12.0)
    };
    values.push(("age_at_first_charge", Value::Num(first)));
    values.push(("total_convictions", Value::Num(binom(rng, charges, 0.6))));

    let features = schema.feature_names();
    for (name, v) in values {
        if features.iter().any(|f| f == name) {
            rec.features.insert(name.to_string(), v);
        }
    }
    rec
}

fn risk_score(p: &RegionProfile, rec: &Record, noise: f64) -> f64 {
    let age = rec.numeric("age_at_current_charge").unwrap_or(MIN_AGE);
    let arrests = rec.numeric("p_arrest").unwrap_or(0.0);
    let fta = rec.numeric("p_fta_two_year").unwrap_or(0.0);
    let pending = rec.numeric("current_pending_charge").unwrap_or(0.0);
    p.age_effect(age) + p.history_weight * arrests.ln_1p() + 0.25 * fta + 0.3 * pending + noise
}

/// Intercept making the mean predicted rate equal `target`.
fn solve_intercept(eta: &[f64], target: f64) -> f64 {
    let mean = |c: f64| eta.iter().map(|&e| sigmoid(e + c)).sum::<f64>() / eta.len() as f64;
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Generates `n` records. The result is a pure function of `(config, n)`.
pub fn synthesize(config: &SynthConfig, n: usize) -> Result<Vec<Record>> {
    if n == 0 {
        return Err(Error::Config("synthesize needs n > 0".into()));
    }
    let p = &config.profile;
    p.validate()?;
    let schema = p.region.schema();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, p.noise_sd).unwrap();

    let mut records: Vec<Record> = (0..n).map(|i| draw_person(&mut rng, p, &schema, i)).collect();
    let eta: Vec<f64> = records
        .iter()
        .map(|r| risk_score(p, r, noise.sample(&mut rng)))
        .collect();
    let g2 = p.base_rates.get(general(Horizon::TwoYear));
    let g6 = p.base_rates.get(general(Horizon::SixMonth));
    let offset = solve_intercept(&eta, g2);
    let allocations: Vec<(ChargeType, TypeAllocation)> = ChargeType::ALL[1..]
        .iter()
        .map(|&c| {
            let r2 = p.base_rates.get(LabelKey::new(c, Horizon::TwoYear));
            let r6 = p.base_rates.get(LabelKey::new(c, Horizon::SixMonth));
            (c, type_allocation(g2, g6, r2, r6).expect("validated"))
        })
        .collect();

    let early = |rng: &mut ChaCha8Rng| rng.random_range(1..=Horizon::SixMonth.days());
    let late =
        |rng: &mut ChaCha8Rng| rng.random_range(Horizon::SixMonth.days() + 1..=Horizon::TwoYear.days());

    for (rec, e) in records.iter_mut().zip(&eta) {
        let mut events = Vec::new();
        if rng.random_bool(sigmoid(e + offset)) {
            let soon = rng.random_bool(g6 / g2);
            for &(charge, alloc) in &allocations {
                let u: f64 = rng.random();
                let day = if soon && u < alloc.six_given_s {
                    Some(early(&mut rng))
                } else if soon && u < alloc.six_given_s + alloc.late_given_s {
                    Some(late(&mut rng))
                } else if !soon && u < alloc.late_given_not_s {
                    Some(late(&mut rng))
                } else {
                    None
                };
                if let Some(day) = day {
                    let event = match charge {
                        ChargeType::Felony => Event::new(day, &[], Level::Felony, true),
                        ChargeType::Misdemeanor => Event::new(day, &[], Level::Misdemeanor, true),
                        other => Event::new(day, &[other.as_str()], Level::Other, true),
                    };
                    events.push(event);
                }
            }
            let limit = if soon {
                Horizon::SixMonth.days()
            } else {
                Horizon::TwoYear.days()
            };
            if !events.iter().any(|ev| ev.offset_days <= limit) {
                let day = if soon { early(&mut rng) } else { late(&mut rng) };
                events.push(Event::new(day, &[], Level::Other, true));
            }
            events.sort_by_key(|ev| ev.offset_days);
        }
        rec.labels = Some(build_labels(&events, true));
        rec.events = events;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_record() {
        let recs = synthesize(&SynthConfig::new(RegionProfile::kentucky(), 1), 1).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].labels.is_some());
    }

    #[test]
    fn zero_records_is_an_error() {
        assert!(synthesize(&SynthConfig::new(RegionProfile::kentucky(), 1), 0).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = SynthConfig::new(RegionProfile::broward(), 42);
        assert_eq!(synthesize(&cfg, 300).unwrap(), synthesize(&cfg, 300).unwrap());
        let other = SynthConfig::new(RegionProfile::broward(), 43);
        assert_ne!(synthesize(&cfg, 300).unwrap(), synthesize(&other, 300).unwrap());
    }

    #[test]
    fn records_satisfy_schema_invariants() {
        let recs = synthesize(&SynthConfig::new(RegionProfile::kentucky(), 5), 2000).unwrap();
        let schema = Schema::kentucky();
        for r in &recs {
            let age = r.numeric("age_at_current_charge").unwrap();
            assert!((MIN_AGE..=MAX_AGE).contains(&age));
            for f in schema.feature_names() {
                assert!(r.numeric(&f).unwrap() >= 0.0, "{f}");
            }
            assert!(r.labels.unwrap().is_nested());
        }
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        let mut p = RegionProfile::kentucky();
        p.race_mix[0].1 = 0.5;
        assert!(matches!(p.validate(), Err(Error::Config(_))));
        let mut p = RegionProfile::kentucky();
        p.base_rates.six_month[1] = 0.5;
        assert!(p.validate().is_err());
        let mut p = RegionProfile::kentucky();
        p.base_rates.two_year[0] = 1.3;
        assert!(p.validate().is_err());
    }

    #[test]
    fn preset_profiles_are_valid() {
        RegionProfile::kentucky().validate().unwrap();
        RegionProfile::broward().validate().unwrap();
    }
}
