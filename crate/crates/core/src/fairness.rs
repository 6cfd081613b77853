//! Group fairness audits for nonbinary risk scores: calibration (per group
//! and monotone), balance for the positive and negative class, and balanced
//! group AUC.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use crate::data::base_rates;
use crate::error::{Error, Result};
use crate::evaluate::auc;

/// Slack for threshold comparisons, so printed values land on the right side.
pub const EPSILON: f64 = 1e-12;

pub fn within(value: f64, threshold: f64) -> bool {
    value <= threshold + EPSILON
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Probability,
    Raw,
}

impl ScoreKind {
    /// All-integer scores are raw points; anything else is a probability.
    pub fn infer(scores: &[f64]) -> ScoreKind {
        if scores.iter().all(|s| s.fract() == 0.0) {
            ScoreKind::Raw
        } else {
            ScoreKind::Probability
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub calibration_gap: f64,
    pub bpc_bnc_probability: f64,
    pub bpc_bnc_raw: f64,
    pub bg_auc_range: f64,
    /// Cells with fewer rows are shown but left out of verdicts.
    pub min_cell_count: usize,
    /// Largest tolerated drop between adjacent bins of the pooled curve.
    pub monotone_tolerance: f64,
    pub probability_bins: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            calibration_gap: 0.03,
            bpc_bnc_probability: 0.03,
            bpc_bnc_raw: 0.4,
            bg_auc_range: 0.03,
            min_cell_count: 30,
            monotone_tolerance: 0.01,
            probability_bins: 10,
        }
    }
}

impl Thresholds {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let t: Thresholds = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let values = [
            self.calibration_gap,
            self.bpc_bnc_probability,
            self.bpc_bnc_raw,
            self.bg_auc_range,
            self.monotone_tolerance,
        ];
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("thresholds must be finite and non-negative".into()));
        }
        if self.probability_bins == 0 {
            return Err(Error::Config("probability_bins must be positive".into()));
        }
        Ok(())
    }

    pub fn balance_threshold(&self, kind: ScoreKind) -> f64 {
        match kind {
            ScoreKind::Probability => self.bpc_bnc_probability,
            ScoreKind::Raw => self.bpc_bnc_raw,
        }
    }
}

/// Scores, labels and one sensitive attribute per row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupedScores {
    pub kind: ScoreKind,
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
    pub groups: Vec<String>,
}

impl GroupedScores {
    pub fn new(kind: ScoreKind, scores: Vec<f64>, labels: Vec<bool>, groups: Vec<String>) -> Result<Self> {
        if scores.len() != labels.len() || scores.len() != groups.len() {
            return Err(Error::Validation(format!(
                "{} scores, {} labels, {} groups",
                scores.len(),
                labels.len(),
                groups.len()
            )));
        }
        if scores.is_empty() {
            return Err(Error::AuditUndefined("no scored rows".into()));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("audit scores".into()));
        }
        if kind == ScoreKind::Probability && scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::Validation("probability scores must lie in [0, 1]".into()));
        }
        Ok(GroupedScores {
            kind,
            scores,
            labels,
            groups,
        })
    }

    /// Drops rows whose group is listed.
    pub fn excluding(&self, excluded: &[String]) -> Result<Self> {
        let keep: Vec<usize> = (0..self.scores.len())
            .filter(|&i| !excluded.contains(&self.groups[i]))
            .collect();
        if keep.is_empty() {
            return Err(Error::AuditUndefined("every row belongs to an excluded group".into()));
        }
        Ok(GroupedScores {
            kind: self.kind,
            scores: keep.iter().map(|&i| self.scores[i]).collect(),
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
            groups: keep.iter().map(|&i| self.groups[i].clone()).collect(),
        })
    }

    pub fn group_names(&self) -> Vec<String> {
        self.groups.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect()
    }

    fn rows_of<'a>(&'a self, group: &'a str) -> impl Iterator<Item = usize> + 'a {
        (0..self.scores.len()).filter(move |&i| self.groups[i] == group)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
}

/// Bins for the scores: one per distinct raw value, or equal-width bins on [0, 1].
pub fn bins_for(kind: ScoreKind, scores: &[f64], probability_bins: usize) -> Vec<Bin> {
    match kind {
        ScoreKind::Raw => {
            let mut values: Vec<f64> = scores.to_vec();
            values.sort_by(f64::total_cmp);
            values.dedup();
            values
                .into_iter()
                .enumerate()
                .map(|(index, v)| Bin {
                    index,
                    lower: v,
                    upper: v,
                })
                .collect()
        }
        ScoreKind::Probability => (0..probability_bins)
            .map(|index| Bin {
                index,
                lower: index as f64 / probability_bins as f64,
                upper: (index + 1) as f64 / probability_bins as f64,
            })
            .collect(),
    }
}

fn bin_of(kind: ScoreKind, bins: &[Bin], score: f64) -> usize {
    match kind {
        ScoreKind::Raw => bins
            .binary_search_by(|b| b.lower.total_cmp(&score))
            .expect("raw bins cover every score"),
        ScoreKind::Probability => ((score * bins.len() as f64) as usize).min(bins.len() - 1),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCell {
    pub bin: usize,
    pub count: usize,
    pub positives: usize,
    pub positive_fraction: Option<f64>,
    pub mean_score: Option<f64>,
    /// Count reaches the minimum for use in verdicts.
    pub sufficient: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupGap {
    pub group_a: String,
    pub group_b: String,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinGap {
    pub bin: usize,
    pub gap: GroupGap,
    pub exceeds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneViolation {
    pub from_bin: usize,
    pub to_bin: usize,
    pub drop: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub bins: Vec<Bin>,
    pub curves: BTreeMap<String, Vec<CalibrationCell>>,
    pub pooled: Vec<CalibrationCell>,
    /// Largest between-group gap in each bin where two or more groups are sufficient.
    pub bin_gaps: Vec<BinGap>,
    pub max_gap: Option<BinGap>,
    pub group_calibrated: bool,
    pub monotone: bool,
    pub monotone_violations: Vec<MonotoneViolation>,
    pub low_count_cells: Vec<(String, usize)>,
}

impl CalibrationReport {
    /// Bins whose between-group gap exceeds the threshold.
    pub fn flagged_bins(&self) -> Vec<&Bin> {
        self.bin_gaps
            .iter()
            .filter(|g| g.exceeds)
            .map(|g| &self.bins[g.bin])
            .collect()
    }
}

fn cells(grouped: &GroupedScores, bins: &[Bin], rows: impl Iterator<Item = usize>, min_count: usize) -> Vec<CalibrationCell> {
    let mut count = vec![0usize; bins.len()];
    let mut pos = vec![0usize; bins.len()];
    let mut sum = vec![0.0; bins.len()];
    for i in rows {
        let b = bin_of(grouped.kind, bins, grouped.scores[i]);
        count[b] += 1;
        pos[b] += usize::from(grouped.labels[i]);
        sum[b] += grouped.scores[i];
    }
    (0..bins.len())
        .map(|b| CalibrationCell {
            bin: b,
            count: count[b],
            positives: pos[b],
            positive_fraction: (count[b] > 0).then(|| pos[b] as f64 / count[b] as f64),
            mean_score: (count[b] > 0).then(|| sum[b] / count[b] as f64),
            sufficient: count[b] >= min_count.max(1),
        })
        .collect()
}

/// Largest pairwise gap among `(group, value)` pairs; ties keep the first pair in name order.
fn widest(values: &[(String, f64)]) -> Option<GroupGap> {
    let mut best: Option<GroupGap> = None;
    for (i, (a, va)) in values.iter().enumerate() {
        for (b, vb) in &values[i + 1..] {
            let gap = (va - vb).abs();
            if best.as_ref().map_or(true, |g| gap > g.gap) {
                best = Some(GroupGap {
                    group_a: a.clone(),
                    group_b: b.clone(),
                    gap,
                });
            }
        }
    }
    best
}

pub fn calibration(grouped: &GroupedScores, thresholds: &Thresholds) -> Result<CalibrationReport> {
    thresholds.validate()?;
    let bins = bins_for(grouped.kind, &grouped.scores, thresholds.probability_bins);
    let min = thresholds.min_cell_count;
    let curves: BTreeMap<String, Vec<CalibrationCell>> = grouped
        .group_names()
        .into_iter()
        .map(|g| {
            let c = cells(grouped, &bins, grouped.rows_of(&g), min);
            (g, c)
        })
        .collect();
    let pooled = cells(grouped, &bins, 0..grouped.scores.len(), min);
    if pooled.iter().all(|c| c.count == 0) {
        return Err(Error::AuditUndefined("every calibration bin is empty".into()));
    }

    let mut bin_gaps = Vec::new();
    let mut low_count_cells = Vec::new();
    for (g, cs) in &curves {
        for c in cs.iter().filter(|c| c.count > 0 && !c.sufficient) {
            low_count_cells.push((g.clone(), c.bin));
        }
    }
    for b in 0..bins.len() {
        let values: Vec<(String, f64)> = curves
            .iter()
            .filter(|(_, cs)| cs[b].sufficient)
            .map(|(g, cs)| (g.clone(), cs[b].positive_fraction.unwrap_or(0.0)))
            .collect();
        if let Some(gap) = widest(&values) {
            let exceeds = !within(gap.gap, thresholds.calibration_gap);
            bin_gaps.push(BinGap { bin: b, gap, exceeds });
        }
    }
    let max_gap = bin_gaps
        .iter()
        .fold(None::<&BinGap>, |acc, g| match acc {
            Some(a) if a.gap.gap >= g.gap.gap => Some(a),
            _ => Some(g),
        })
        .cloned();
    let group_calibrated = bin_gaps.iter().all(|g| !g.exceeds);

    let usable: Vec<&CalibrationCell> = pooled.iter().filter(|c| c.sufficient).collect();
    let monotone_violations: Vec<MonotoneViolation> = usable
        .windows(2)
        .filter_map(|w| {
            let drop = w[0].positive_fraction? - w[1].positive_fraction?;
            (!within(drop, thresholds.monotone_tolerance)).then_some(MonotoneViolation {
                from_bin: w[0].bin,
                to_bin: w[1].bin,
                drop,
            })
        })
        .collect();
    Ok(CalibrationReport {
        bins,
        curves,
        pooled,
        bin_gaps,
        max_gap,
        group_calibrated,
        monotone: monotone_violations.is_empty(),
        monotone_violations,
        low_count_cells,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMean {
    pub group: String,
    pub count: usize,
    pub mean_score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassBalance {
    pub means: Vec<ClassMean>,
    /// Every pairwise gap among groups with a nonempty cell.
    pub gaps: Vec<GroupGap>,
    pub max_gap: Option<GroupGap>,
    pub satisfied: bool,
    /// Groups left out because the cell was empty.
    pub insufficient: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub threshold: f64,
    pub positive: ClassBalance,
    pub negative: ClassBalance,
}

fn class_balance(grouped: &GroupedScores, class: bool, threshold: f64, warnings: &mut Vec<String>) -> ClassBalance {
    let means: Vec<ClassMean> = grouped
        .group_names()
        .into_iter()
        .map(|g| {
            let rows: Vec<usize> = grouped.rows_of(&g).filter(|&i| grouped.labels[i] == class).collect();
            let mean = (!rows.is_empty()).then(|| rows.iter().map(|&i| grouped.scores[i]).sum::<f64>() / rows.len() as f64);
            ClassMean {
                group: g,
                count: rows.len(),
                mean_score: mean,
            }
        })
        .collect();
    let insufficient: Vec<String> = means.iter().filter(|m| m.count == 0).map(|m| m.group.clone()).collect();
    for g in &insufficient {
        let which = if class { "positive" } else { "negative" };
        warnings.push(format!("group `{g}` has no {which} rows; left out of the balance verdict"));
    }
    let values: Vec<(String, f64)> = means
        .iter()
        .filter_map(|m| m.mean_score.map(|v| (m.group.clone(), v)))
        .collect();
    let mut gaps = Vec::new();
    for (i, (a, va)) in values.iter().enumerate() {
        for (b, vb) in &values[i + 1..] {
            gaps.push(GroupGap {
                group_a: a.clone(),
                group_b: b.clone(),
                gap: (va - vb).abs(),
            });
        }
    }
    let max_gap = widest(&values);
    ClassBalance {
        satisfied: gaps.iter().all(|g| within(g.gap, threshold)),
        means,
        gaps,
        max_gap,
        insufficient,
    }
}

/// Balance for the positive class and for the negative class.
pub fn bpc_bnc(grouped: &GroupedScores, thresholds: &Thresholds) -> Result<(BalanceReport, Vec<String>)> {
    thresholds.validate()?;
    let threshold = thresholds.balance_threshold(grouped.kind);
    let mut warnings = Vec::new();
    let positive = class_balance(grouped, true, threshold, &mut warnings);
    let negative = class_balance(grouped, false, threshold, &mut warnings);
    Ok((
        BalanceReport {
            threshold,
            positive,
            negative,
        },
        warnings,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BgAucReport {
    pub threshold: f64,
    pub aucs: BTreeMap<String, f64>,
    /// Groups without both classes.
    pub excluded: Vec<String>,
    pub range: Option<GroupGap>,
    pub satisfied: bool,
}

/// Verdict on a list of per-group AUCs.
pub fn bg_auc_verdict(aucs: &BTreeMap<String, f64>, threshold: f64) -> (Option<GroupGap>, bool) {
    let values: Vec<(String, f64)> = aucs.iter().map(|(g, &a)| (g.clone(), a)).collect();
    let range = widest(&values);
    let ok = range.as_ref().map_or(true, |r| within(r.gap, threshold));
    (range, ok)
}

pub fn bg_auc(grouped: &GroupedScores, thresholds: &Thresholds) -> Result<(BgAucReport, Vec<String>)> {
    thresholds.validate()?;
    let mut aucs = BTreeMap::new();
    let mut excluded = Vec::new();
    let mut warnings = Vec::new();
    for g in grouped.group_names() {
        let rows: Vec<usize> = grouped.rows_of(&g).collect();
        let s: Vec<f64> = rows.iter().map(|&i| grouped.scores[i]).collect();
        let y: Vec<bool> = rows.iter().map(|&i| grouped.labels[i]).collect();
        match auc(&s, &y) {
            Ok(a) => {
                aucs.insert(g, a);
            }
            Err(Error::DegenerateLabels(_)) => {
                warnings.push(format!("group `{g}` has a single class; left out of BG-AUC"));
                excluded.push(g);
            }
            Err(e) => return Err(e),
        }
    }
    let (range, satisfied) = bg_auc_verdict(&aucs, thresholds.bg_auc_range);
    Ok((
        BgAucReport {
            threshold: thresholds.bg_auc_range,
            aucs,
            excluded,
            range,
            satisfied,
        },
        warnings,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub attribute: String,
    pub score_kind: ScoreKind,
    pub thresholds: Thresholds,
    pub excluded_groups: Vec<String>,
    pub calibration: CalibrationReport,
    pub balance: BalanceReport,
    pub bg_auc: BgAucReport,
    pub warnings: Vec<String>,
}

impl FairnessReport {
    /// One line per verdict.
    pub fn summary(&self) -> String {
        let yes = |b: bool| if b { "satisfied" } else { "violated" };
        let gap = |g: &Option<GroupGap>| match g {
            Some(g) => format!("{:.4} ({} vs {})", g.gap, g.group_a, g.group_b),
            None => "n/a".into(),
        };
        let cal_gap = self.calibration.max_gap.as_ref().map(|b| b.gap.clone());
        format!(
            "group calibration: {} max gap {} threshold {}\n\
             monotonic calibration: {}\n\
             BPC: {} max gap {} threshold {}\n\
             BNC: {} max gap {} threshold {}\n\
             BG-AUC: {} range {} threshold {}\n",
            yes(self.calibration.group_calibrated),
            gap(&cal_gap),
            self.thresholds.calibration_gap,
            yes(self.calibration.monotone),
            yes(self.balance.positive.satisfied),
            gap(&self.balance.positive.max_gap),
            self.balance.threshold,
            yes(self.balance.negative.satisfied),
            gap(&self.balance.negative.max_gap),
            self.balance.threshold,
            yes(self.bg_auc.satisfied),
            gap(&self.bg_auc.range),
            self.bg_auc.threshold,
        )
    }

    pub fn all_satisfied(&self) -> bool {
        self.calibration.group_calibrated
            && self.calibration.monotone
            && self.balance.positive.satisfied
            && self.balance.negative.satisfied
            && self.bg_auc.satisfied
    }

    /// `group,bin,lower,upper,count,positives,positive_fraction,mean_score,sufficient`
    /// with the pooled curve under group `(all)`.
    pub fn write_curves_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "group",
            "bin",
            "lower",
            "upper",
            "count",
            "positives",
            "positive_fraction",
            "mean_score",
            "sufficient",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let all = std::iter::once(("(all)", &self.calibration.pooled))
            .chain(self.calibration.curves.iter().map(|(g, c)| (g.as_str(), c)));
        for (g, cs) in all {
            for c in cs {
                let b = &self.calibration.bins[c.bin];
                w.write_record([
                    g.to_string(),
                    c.bin.to_string(),
                    b.lower.to_string(),
                    b.upper.to_string(),
                    c.count.to_string(),
                    c.positives.to_string(),
                    opt(c.positive_fraction),
                    opt(c.mean_score),
                    c.sufficient.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Runs all three audits on one sensitive attribute.
pub fn audit(grouped: &GroupedScores, attribute: &str, thresholds: &Thresholds, exclude: &[String]) -> Result<FairnessReport> {
    let data = grouped.excluding(exclude)?;
    let calibration = calibration(&data, thresholds)?;
    let (balance, mut warnings) = bpc_bnc(&data, thresholds)?;
    let (bg, w) = bg_auc(&data, thresholds)?;
    warnings.extend(w);
    if !calibration.low_count_cells.is_empty() {
        warnings.push(format!(
            "{} calibration cells have fewer than {} rows and are left out of verdicts",
            calibration.low_count_cells.len(),
            thresholds.min_cell_count
        ));
    }
    Ok(FairnessReport {
        attribute: attribute.to_string(),
        score_kind: data.kind,
        thresholds: thresholds.clone(),
        excluded_groups: exclude.to_vec(),
        calibration,
        balance,
        bg_auc: bg,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn twin(kind: ScoreKind, scores: &[f64], labels: &[bool]) -> GroupedScores {
        let mut s = scores.to_vec();
        s.extend_from_slice(scores);
        let mut y = labels.to_vec();
        y.extend_from_slice(labels);
        let g = (0..s.len())
            .map(|i| if i < scores.len() { "A" } else { "B" }.to_string())
            .collect();
        GroupedScores::new(kind, s, y, g).unwrap()
    }

    #[test]
    fn identical_groups_satisfy_everything() {
        let scores: Vec<f64> = (0..200).map(|i| (i % 10) as f64 / 10.0 + 0.05).collect();
        let labels: Vec<bool> = (0..200).map(|i| (i * 7) % 10 < i % 10).collect();
        let r = audit(&twin(ScoreKind::Probability, &scores, &labels), "race", &Thresholds::default(), &[]).unwrap();
        assert!(r.calibration.group_calibrated);
        assert_eq!(r.balance.positive.max_gap.as_ref().unwrap().gap, 0.0);
        assert_eq!(r.balance.negative.max_gap.as_ref().unwrap().gap, 0.0);
        assert_eq!(r.bg_auc.range.as_ref().unwrap().gap, 0.0);
        assert!(r.balance.positive.satisfied && r.balance.negative.satisfied && r.bg_auc.satisfied);
    }

    #[test]
    fn positive_class_means_example() {
        let g = GroupedScores::new(
            ScoreKind::Probability,
            vec![0.6, 0.8, 0.7, 0.7, 0.1, 0.1],
            vec![true, true, true, true, false, false],
            ["A", "A", "B", "B", "A", "B"].iter().map(|s| s.to_string()).collect(),
        )
        .unwrap();
        let (b, _) = bpc_bnc(&g, &Thresholds::default()).unwrap();
        assert!(b.positive.max_gap.unwrap().gap < 1e-12);
        assert!(b.positive.satisfied);
    }

    #[test]
    fn printed_gap_verdicts() {
        let t = Thresholds::default();
        for gap in [0.79, 0.61, 0.7, 0.84] {
            assert!(!within(gap, t.bpc_bnc_raw));
        }
        assert!(!within(0.04, t.bpc_bnc_probability));
        assert!(within(0.003, t.bg_auc_range));
        assert!(within(0.03, t.bg_auc_range));
    }

    #[test]
    fn empty_cell_is_flagged() {
        let g = GroupedScores::new(
            ScoreKind::Raw,
            vec![1.0, 2.0, 3.0],
            vec![true, false, false],
            vec!["A".into(), "A".into(), "B".into()],
        )
        .unwrap();
        let (b, warnings) = bpc_bnc(&g, &Thresholds::default()).unwrap();
        assert_eq!(b.positive.insufficient, vec!["B".to_string()]);
        assert!(!warnings.is_empty());
        let (auc, _) = bg_auc(&g, &Thresholds::default()).unwrap();
        assert_eq!(auc.excluded, vec!["B".to_string()]);
    }

    #[test]
    fn raw_bins_follow_distinct_values() {
        let bins = bins_for(ScoreKind::Raw, &[3.0, 1.0, 3.0, 13.0], 10);
        assert_eq!(bins.iter().map(|b| b.lower).collect::<Vec<_>>(), vec![1.0, 3.0, 13.0]);
        let p = bins_for(ScoreKind::Probability, &[], 10);
        assert_eq!(bin_of(ScoreKind::Probability, &p, 1.0), 9);
        assert_eq!(bin_of(ScoreKind::Probability, &p, 0.0), 0);
    }

    #[test]
    fn infers_score_kind() {
        assert_eq!(ScoreKind::infer(&[0.2, 0.9]), ScoreKind::Probability);
        assert_eq!(ScoreKind::infer(&[1.0, 4.0, 13.0]), ScoreKind::Raw);
    }

    #[test]
    fn excluding_every_group_is_undefined() {
        let g = GroupedScores::new(ScoreKind::Raw, vec![1.0], vec![true], vec!["Other".into()]).unwrap();
        assert!(matches!(g.excluding(&["Other".into()]), Err(Error::AuditUndefined(_))));
    }
}
