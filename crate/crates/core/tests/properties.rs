use ndarray::Array2;
use proptest::prelude::*;

use recid_core::data::{
    build_labels, read_records, synthesize, write_records, ChargeType, Dataset, Event, Horizon,
    LabelKey, Level, LoadOptions, Region, RegionProfile, SynthConfig,
};
use recid_core::evaluate::{auc, fold_indices, splits};
use recid_core::fairness::{bg_auc, bpc_bnc, GroupedScores, ScoreKind, Thresholds};
use recid_core::featurize::{aggregate_contribution, Direction, FeatureStumps, StumpBasis, StumpColumn, StumpKind};
use recid_core::scoring::{Comparator, Condition, Row, ScoringTable, DEFAULT_COEF_RANGE};
use recid_core::train::{fit_additive_stumps, fit_cart, CartNode, TrainConfig};
use recid_core::Error;

fn pairwise(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (si, _) in scores.iter().zip(labels).filter(|(_, &l)| l) {
        for (sj, _) in scores.iter().zip(labels).filter(|(_, &l)| !l) {
            den += 1.0;
            num += if si > sj { 1.0 } else if si == sj { 0.5 } else { 0.0 };
        }
    }
    num / den
}

fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-50i32..50, n).prop_map(|v| v.into_iter().map(f64::from).collect()),
            prop::collection::vec(any::<bool>(), n),
        )
    })
}

fn both_classes(labels: &[bool]) -> bool {
    labels.iter().any(|&l| l) && labels.iter().any(|&l| !l)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn auc_matches_pairwise((scores, labels) in scored()) {
        prop_assume!(both_classes(&labels));
        prop_assert_eq!(auc(&scores, &labels).unwrap(), pairwise(&scores, &labels));
    }

    #[test]
    fn auc_ignores_increasing_transforms((scores, labels) in scored(), a in 0.1f64..5.0, b in -3.0f64..3.0) {
        prop_assume!(both_classes(&labels));
        let moved: Vec<f64> = scores.iter().map(|s| (a * s + b).exp().ln_1p()).collect();
        let cubed: Vec<f64> = scores.iter().map(|s| s * s * s).collect();
        let base = auc(&scores, &labels).unwrap();
        prop_assert!((auc(&moved, &labels).unwrap() - base).abs() < 1e-12);
        prop_assert_eq!(auc(&cubed, &labels).unwrap(), base);
    }

    #[test]
    fn auc_complement_without_ties(n in 2usize..30, seed in any::<u64>()) {
        let mut scores: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            scores.swap(i, (s >> 33) as usize % (i + 1));
        }
        let labels: Vec<bool> = (0..n).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
        prop_assume!(both_classes(&labels));
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let total = auc(&scores, &labels).unwrap() + auc(&scores, &flipped).unwrap();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn folds_partition(n in 1usize..200, k in 2usize..10, seed in any::<u64>(), stratify in any::<bool>()) {
        prop_assume!(n >= k);
        let labels: Vec<bool> = (0..n).map(|i| i % 4 == 0).collect();
        let folds = fold_indices(n, k, seed, stratify.then_some(labels.as_slice())).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        for split in splits(&folds) {
            prop_assert_eq!(split.train.len() + split.test.len(), n);
            prop_assert!(split.test.iter().all(|t| !split.train.contains(t)));
        }
    }

    #[test]
    fn table_probability_increases(intercept in -15i64..15, score in -15i64..15) {
        let table = ScoringTable::new(intercept, DEFAULT_COEF_RANGE, vec![]).unwrap();
        let (p, q) = (table.probability_of(score), table.probability_of(score + 1));
        prop_assert!(p > 0.0 && q < 1.0 && p < q);
    }

    #[test]
    fn zero_point_rows_change_nothing(value in 0.0f64..20.0, t in 0.0f64..20.0) {
        let base = vec![Row { condition: Condition::new("x", Comparator::Ge, 3.0), points: 2 }];
        let mut padded = base.clone();
        padded.push(Row { condition: Condition::new("x", Comparator::Le, t), points: 0 });
        let a = ScoringTable::new(-1, DEFAULT_COEF_RANGE, base).unwrap();
        let b = ScoringTable::new(-1, DEFAULT_COEF_RANGE, padded).unwrap();
        let names = vec!["x".to_string()];
        let (ca, cb) = (a.compile(&names).unwrap(), b.compile(&names).unwrap());
        prop_assert_eq!(ca.score_row(&[value]), cb.score_row(&[value]));
        prop_assert_eq!(ca.probability_row(&[value]).to_bits(), cb.probability_row(&[value]).to_bits());
    }

    #[test]
    fn stump_patterns_are_steps(value in 0.0f64..80.0, decreasing in any::<bool>()) {
        let direction = if decreasing { Direction::Decreasing } else { Direction::Increasing };
        let basis = StumpBasis::new(
            vec![FeatureStumps { feature: "v".into(), direction, thresholds: (18..=60).map(f64::from).collect() }],
            vec![],
        ).unwrap();
        let fired: Vec<bool> = basis.columns().iter().map(|c| c.fires(value)).collect();
        let switches = fired.windows(2).filter(|w| w[0] != w[1]).count();
        prop_assert!(switches <= 1);
        if switches == 1 {
            // Decreasing stumps turn on as the threshold grows; increasing ones turn off.
            let first_on = fired.iter().position(|&f| f).unwrap();
            prop_assert_eq!(decreasing, first_on > 0);
        }
    }

    #[test]
    fn nonnegative_stumps_give_monotone_curves(weights in prop::collection::vec(0.0f64..2.0, 10), decreasing in any::<bool>()) {
        let thresholds: Vec<f64> = (1..=10).map(f64::from).collect();
        let columns: Vec<StumpColumn> = thresholds
            .iter()
            .map(|&t| StumpColumn {
                name: format!("v{t}"),
                feature: "v".into(),
                kind: if decreasing { StumpKind::Le(t) } else { StumpKind::Ge(t) },
            })
            .collect();
        let curve: Vec<f64> = (0..=120)
            .map(|i| aggregate_contribution(&columns, &weights, "v", f64::from(i) / 10.0).unwrap())
            .collect();
        for w in curve.windows(2) {
            if decreasing {
                prop_assert!(w[1] <= w[0]);
            } else {
                prop_assert!(w[1] >= w[0]);
            }
        }
    }

    #[test]
    fn labels_nest(events in prop::collection::vec((0u32..1500, 0usize..4, 0usize..3, any::<bool>()), 0..6), convicted_only in any::<bool>()) {
        let tags = [["violent"], ["drug"], ["property"], ["other"]];
        let levels = [Level::Felony, Level::Misdemeanor, Level::Other];
        let events: Vec<Event> = events
            .into_iter()
            .map(|(d, t, l, c)| Event::new(d, &tags[t], levels[l], c))
            .collect();
        let labels = build_labels(&events, convicted_only);
        for c in ChargeType::ALL {
            let six = labels.get(LabelKey::new(c, Horizon::SixMonth));
            prop_assert!(!six || labels.get(LabelKey::new(c, Horizon::TwoYear)));
        }
    }

    #[test]
    fn balance_gaps_symmetric_under_renaming(scores in prop::collection::vec(0.0f64..1.0, 40), labels in prop::collection::vec(any::<bool>(), 40), split in prop::collection::vec(any::<bool>(), 40)) {
        let names = |swap: bool| -> Vec<String> {
            split.iter().map(|&g| if g != swap { "a".to_string() } else { "b".to_string() }).collect()
        };
        let thr = Thresholds::default();
        let one = GroupedScores::new(ScoreKind::Probability, scores.clone(), labels.clone(), names(false));
        let two = GroupedScores::new(ScoreKind::Probability, scores.clone(), labels.clone(), names(true));
        prop_assume!(one.is_ok() && two.is_ok());
        let (a, _) = bpc_bnc(&one.unwrap(), &thr).unwrap();
        let (b, _) = bpc_bnc(&two.unwrap(), &thr).unwrap();
        let gap = |c: &recid_core::fairness::ClassBalance| c.max_gap.as_ref().map(|g| g.gap);
        prop_assert_eq!(gap(&a.positive), gap(&b.positive));
        prop_assert_eq!(gap(&a.negative), gap(&b.negative));
        prop_assert_eq!(a.positive.satisfied, b.positive.satisfied);
    }

    #[test]
    fn group_aucs_match_pairwise(scores in prop::collection::vec(0i32..5, 24), labels in prop::collection::vec(any::<bool>(), 24)) {
        let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
        let groups: Vec<String> = (0..24).map(|i| if i % 2 == 0 { "a" } else { "b" }.to_string()).collect();
        let grouped = GroupedScores::new(ScoreKind::Raw, scores.clone(), labels.clone(), groups).unwrap();
        let (report, _) = bg_auc(&grouped, &Thresholds::default()).unwrap();
        for (g, offset) in [("a", 0), ("b", 1)] {
            let s: Vec<f64> = scores.iter().skip(offset).step_by(2).copied().collect();
            let y: Vec<bool> = labels.iter().skip(offset).step_by(2).copied().collect();
            match report.aucs.get(g) {
                Some(&v) => prop_assert_eq!(v, pairwise(&s, &y)),
                None => prop_assert!(!both_classes(&y)),
            }
        }
    }

    #[test]
    fn cart_respects_depth(rows in prop::collection::vec((0u8..4, 0u8..4, any::<bool>()), 4..60), depth in 1usize..5) {
        let n = rows.len();
        let x = Array2::from_shape_fn((n, 2), |(i, j)| f64::from(if j == 0 { rows[i].0 } else { rows[i].1 }));
        let y: Vec<bool> = rows.iter().map(|r| r.2).collect();
        let data = Dataset::new(vec!["a".into(), "b".into()], x, y).unwrap();
        let model = fit_cart(&data, depth, 0.0).unwrap();
        prop_assert!(model.depth() <= depth);
        fn check(node: &CartNode) -> bool {
            match node {
                CartNode::Leaf { probability, .. } => (0.0..=1.0).contains(probability),
                CartNode::Split { left, right, .. } => check(left) && check(right),
            }
        }
        prop_assert!(check(&model.root));
    }
}

#[test]
fn synthesis_is_pure_and_round_trips() {
    let config = SynthConfig::new(RegionProfile::broward(), 17);
    let a = synthesize(&config, 300).unwrap();
    let b = synthesize(&config, 300).unwrap();
    assert_eq!(a, b);
    let schema = Region::Broward.schema();
    let mut buf = Vec::new();
    write_records(&mut buf, &a, &schema).unwrap();
    let back = read_records(buf.as_slice(), &schema, LoadOptions::default()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn additive_stumps_respect_feature_cap() {
    let records = synthesize(&SynthConfig::new(RegionProfile::kentucky(), 3), 1_500).unwrap();
    let features = Region::Kentucky.schema().feature_names();
    let key = LabelKey::new(ChargeType::General, Horizon::TwoYear);
    let data = Dataset::from_records(&records, &features, key).unwrap();
    let basis = StumpBasis::default_for(&data, &features).unwrap();
    for cap in [1, 3, 15] {
        let config = TrainConfig {
            max_original_features: cap,
            c_grid: vec![1e-3, 1e-2, 1e-1],
            ..TrainConfig::default()
        };
        match fit_additive_stumps(&data, &basis, &config) {
            Ok(model) => {
                assert!(model.features_used.len() <= cap);
                let again = fit_additive_stumps(&data, &basis, &config).unwrap();
                assert_eq!(model.model.coefficients, again.model.coefficients);
            }
            Err(Error::CapInfeasible { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }
}
