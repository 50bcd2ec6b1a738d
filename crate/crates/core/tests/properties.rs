//! Invariants checked over generated inputs, plus brute-force oracles for the
//! selection steps.

mod common;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use seenselect::catalog::{
    load_attribute_matrix, normalize_attributes, split_unseen, write_attribute_matrix, AttributeMatrix, FeatureStore,
};
use seenselect::rarity::{designate_rare_common, rare_filtered_report, RarityMode};
use seenselect::seedset::{binarize_attributes, rarity_weights, select_representatives, ward_linkage, ClusterPartition};
use seenselect::vsm::{admit_candidates, compute_mavs, diversity_select, Candidate, DistanceConfig, LinearHead};
use seenselect::zsl::{per_class_top1, predict, train_eszsl, EszslHyper, FilterTag, SplitTag};

use common::*;

fn matrix(rows: std::ops::RangeInclusive<usize>, cols: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = DMatrix<f64>> {
    (rows, cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop_oneof![1 => Just(0.0), 3 => 0.0..1.0f64], r * c)
            .prop_map(move |v| DMatrix::from_row_slice(r, c, &v))
    })
}

#[test]
fn split_partitions_the_unseen_set_for_every_seed() {
    let unseen: Vec<usize> = (100..150).collect();
    let all: BTreeSet<usize> = unseen.iter().copied().collect();
    for seed in 0..100 {
        let (common, remaining) = split_unseen(&unseen, seed).unwrap();
        assert_eq!(common.len(), 25);
        let c: BTreeSet<usize> = common.iter().copied().collect();
        let r: BTreeSet<usize> = remaining.iter().copied().collect();
        assert!(c.is_disjoint(&r));
        assert_eq!(&c | &r, all);
    }
}

#[test]
fn attribute_round_trip_is_exact_in_f32() {
    let mut r = rng(5);
    let raw = uniform_matrix(&mut r, 12, 9) * 100.0;
    let m = AttributeMatrix::new(
        raw.map(|v| v as f32 as f64),
        (0..9).map(|i| format!("attr_{i}")).collect(),
        (0..12).map(|i| format!("class_{i}")).collect(),
    )
    .unwrap();
    let norm = normalize_attributes(&m, 100.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.tsv");
    write_attribute_matrix(&norm, &path).unwrap();
    let back = load_attribute_matrix(&path).unwrap();
    assert_eq!(back.class_names(), norm.class_names());
    assert_eq!(back.attribute_names(), norm.attribute_names());
    for (a, b) in back.values().iter().zip(norm.values().iter()) {
        assert_eq!(*a as f32, *b as f32);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn feature_store_round_trip(dim in 1usize..6, labels in prop::collection::vec(0u32..4, 1..20), seed in any::<u64>()) {
        let mut r = rng(seed);
        let data: Vec<f32> = normal_matrix(&mut r, labels.len(), dim).transpose().iter().map(|&v| v as f32).collect();
        let store = FeatureStore::new(dim, labels.clone(), data).unwrap();
        let back = FeatureStore::from_bytes(&store.to_bytes(), Some(4)).unwrap();
        prop_assert_eq!(back.labels(), store.labels());
        prop_assert!(back.raw().iter().zip(store.raw()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn binarization_ignores_positive_scaling(m in matrix(1..=8, 1..=6), scale in 0.1f64..50.0) {
        let a = binarize_attributes(&m);
        let b = binarize_attributes(&(&m * scale));
        prop_assert_eq!(a.irrelevant, b.irrelevant);
        prop_assert_eq!(a.unremarkable, b.unremarkable);
        prop_assert_eq!(a.binary, b.binary);
    }

    #[test]
    fn rarer_attributes_weigh_more(m in matrix(2..=10, 1..=8)) {
        let view = binarize_attributes(&m);
        prop_assume!(!view.retained.is_empty());
        let w = rarity_weights(&view).unwrap();
        for i in 0..w.theta.len() {
            prop_assert!(w.theta[i] > 0.0 && w.theta[i] <= 1.0);
            for j in 0..w.theta.len() {
                if w.theta[i] < w.theta[j] {
                    prop_assert!(w.weight[i] > w.weight[j]);
                }
            }
        }
    }

    #[test]
    fn cuts_refine_as_count_grows(points in matrix(3..=14, 1..=4)) {
        let tree = ward_linkage(&points).unwrap();
        let n = points.nrows();
        let heights = tree.heights();
        prop_assert!(heights.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        for i in 1..n {
            let coarse = tree.cut(i).unwrap();
            let fine = tree.cut(i + 1).unwrap();
            // Points together in the fine cut stay together in the coarse one.
            for a in 0..n {
                for b in 0..n {
                    if fine[a] == fine[b] {
                        prop_assert_eq!(coarse[a], coarse[b]);
                    }
                }
            }
        }
    }

    #[test]
    fn designation_thresholds_are_monotone(m in matrix(4..=20, 1..=10), lo in 0.0f64..0.5, step in 0.0f64..0.4) {
        let base = designate_rare_common(&m, lo, 0.5);
        let wider = designate_rare_common(&m, lo + step, 0.5);
        prop_assert!(base.rare.iter().all(|a| wider.rare.contains(a)));
        let strict = designate_rare_common(&m, 0.05, 0.5 + step);
        let loose = designate_rare_common(&m, 0.05, 0.5);
        prop_assert!(strict.common.iter().all(|a| loose.common.contains(a)));
    }

    #[test]
    fn designation_ignores_class_order(m in matrix(2..=12, 1..=8), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..m.nrows()).collect();
        order.shuffle(&mut rng(seed));
        let shuffled = m.select_rows(order.iter());
        prop_assert_eq!(designate_rare_common(&m, 0.05, 0.5), designate_rare_common(&shuffled, 0.05, 0.5));
    }

    #[test]
    fn per_class_mean_ignores_relabeling(truths in prop::collection::vec(0usize..5, 5..40), seed in any::<u64>()) {
        let mut r = rng(seed);
        let classes: Vec<usize> = (0..5).collect();
        prop_assume!(classes.iter().all(|c| truths.contains(c)));
        let preds: Vec<usize> = truths.iter().map(|&t| if r.random::<f64>() < 0.6 { t } else { r.random_range(0..5) }).collect();
        let base = per_class_top1(&preds, &truths, &classes, SplitTag::Other).unwrap();
        let relabel = [3usize, 0, 4, 1, 2];
        let p2: Vec<usize> = preds.iter().map(|&p| relabel[p]).collect();
        let t2: Vec<usize> = truths.iter().map(|&t| relabel[t]).collect();
        let moved = per_class_top1(&p2, &t2, &classes, SplitTag::Other).unwrap();
        prop_assert!((base.mean_per_class_top1 - moved.mean_per_class_top1).abs() < 1e-12);
    }

    #[test]
    fn prediction_ignores_positive_rescaling(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let mut r = rng(seed);
        let f = normal_matrix(&mut r, 12, 5);
        let y = DMatrix::from_fn(12, 3, |i, j| if i % 3 == j { 1.0 } else { 0.0 });
        let a = uniform_matrix(&mut r, 3, 4);
        let model = train_eszsl(&f, &y, &a, EszslHyper::default()).unwrap();
        let cand = uniform_matrix(&mut r, 4, 4);
        let ids = [10, 11, 12, 13];
        let x: Vec<f64> = (0..5).map(|i| f[(i, i % 5)] + 0.3).collect();
        let scaled: Vec<f64> = x.iter().map(|v| v * scale).collect();
        prop_assert_eq!(predict(&model, &x, &ids, &cand).unwrap(), predict(&model, &scaled, &ids, &cand).unwrap());
    }

    #[test]
    fn admission_respects_limits_and_priority(
        scores in prop::collection::vec((0.0f64..10.0, any::<bool>()), 1..12),
        q in 1usize..5,
        remaining in 1usize..6,
    ) {
        let cands: Vec<Candidate> = scores
            .iter()
            .enumerate()
            .map(|(i, &(score, overlaps_pretraining))| Candidate { class_id: i, score, overlaps_pretraining })
            .collect();
        let admitted = admit_candidates(&cands, q, remaining);
        prop_assert_eq!(admitted.len(), q.min(cands.len()).min(remaining));
        // No rejected overlapping class while a non-overlapping one got in.
        let any_plain_admitted = admitted.iter().any(|&c| !cands[c].overlaps_pretraining);
        let overlap_rejected = cands.iter().any(|c| c.overlaps_pretraining && !admitted.contains(&c.class_id));
        prop_assert!(!(any_plain_admitted && overlap_rejected));
    }
}

#[test]
fn representatives_come_one_per_cluster() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let n = 12;
        let sem = uniform_matrix(&mut r, n, 6);
        let classes: Vec<usize> = (100..100 + n).collect();
        let labels = ward_linkage(&sem).unwrap().cut(5).unwrap();
        let partition = ClusterPartition::new(classes.clone(), labels.clone()).unwrap();
        let seeds = select_representatives(&sem, &partition).unwrap();
        assert_eq!(seeds.len(), 5);
        let clusters: BTreeSet<usize> = seeds
            .members()
            .iter()
            .map(|c| labels[classes.iter().position(|x| x == c).unwrap()])
            .collect();
        assert_eq!(clusters.len(), 5);
    }
}

#[test]
fn rare_filter_only_shrinks_the_report() {
    let mut r = rng(9);
    let values = uniform_matrix(&mut r, 10, 6).map(|v| if v < 0.4 { 0.0 } else { v });
    let m = AttributeMatrix::new(
        values.clone(),
        (0..6).map(|i| format!("a{i}")).collect(),
        (0..10).map(|i| format!("c{i}")).collect(),
    )
    .unwrap();
    let d = designate_rare_common(&values.rows(0, 7).into_owned(), 0.3, 0.5);
    let truths: Vec<usize> = vec![7, 8, 9, 7, 8, 9];
    let report = per_class_top1(&[7, 9, 9, 7, 7, 9], &truths, &[7, 8, 9], SplitTag::Existing).unwrap();
    for mode in [RarityMode::Rare, RarityMode::Common] {
        let f = rare_filtered_report(&report, &d, &m, mode);
        assert!(f.class_count() <= 3);
        if let seenselect::rarity::FilteredReport::Report { report: sub } = &f {
            assert!(sub.classes().iter().all(|c| report.classes().contains(c)));
            assert_ne!(sub.filter_tag, FilterTag::All);
        }
    }
}

#[test]
fn diversity_matches_brute_force() {
    for seed in 0..10 {
        let mut r = rng(400 + seed);
        let (k, c, n) = (4, 3, 30);
        let head = LinearHead {
            weights: normal_matrix(&mut r, c, k),
            bias: nalgebra::DVector::zeros(c),
            class_order: vec![0, 1, 2],
        };
        let data = normal_matrix(&mut r, n, k);
        let labels: Vec<u32> = (0..n as u32).map(|i| i % 6).collect();
        let store = FeatureStore::new(k, labels, data.transpose().iter().map(|&v| v as f32).collect()).unwrap();
        let mavs = compute_mavs(&head, &store);
        let pool: Vec<usize> = (0..n).filter(|&i| i % 6 >= 3).collect();
        let cfg = DistanceConfig { lambda_ec: 0.5, euclid_scale: 2.0 };
        let got = diversity_select(&mavs, &pool, &store, &head, 4, cfg).unwrap();

        let mut brute: Vec<(usize, f64)> = pool
            .iter()
            .map(|&s| {
                let av = head.logits_one(store.feature(s));
                let d = mavs
                    .means
                    .iter()
                    .map(|mu| {
                        let e = (mu - &av).norm() / 2.0;
                        let cos = if mu.norm() == 0.0 || av.norm() == 0.0 { 0.0 } else { mu.dot(&av) / (mu.norm() * av.norm()) };
                        0.5 * e + 0.5 * (1.0 - cos)
                    })
                    .fold(f64::INFINITY, f64::min);
                (s, d)
            })
            .collect();
        brute.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let want: Vec<usize> = brute.iter().take(4).map(|p| p.0).collect();
        assert_eq!(got.selected_sample_ids, want, "seed {seed}");
    }
}
