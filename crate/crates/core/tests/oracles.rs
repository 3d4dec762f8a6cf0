mod common;

use common::*;
use opinionforge::condense::{agglomerative_cluster, chunk_count};
use opinionforge::metrics::rouge_n_tokens;
use opinionforge::mrc::{decode_span, decode_span_joint, decode_span_sequential, span_loss, SpanDistribution};
use opinionforge::Decoder;
use proptest::prelude::*;

const VOCAB: &[&str] = &["a", "b", "c", "d", "e"];

fn tokens() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(0..VOCAB.len(), 0..30)
        .prop_map(|ix| ix.into_iter().map(|i| VOCAB[i].to_string()).collect())
}

fn distribution() -> impl Strategy<Value = (SpanDistribution, usize)> {
    (2usize..=12)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(1u32..6, n),
                prop::collection::vec(1u32..6, n),
                0..n - 1,
            )
        })
        .prop_map(|(s, e, sep)| {
            let norm = |v: Vec<u32>| {
                let sum: u32 = v.iter().sum();
                v.into_iter().map(|x| f64::from(x) / f64::from(sum)).collect::<Vec<_>>()
            };
            (
                SpanDistribution {
                    start_probs: norm(s),
                    end_probs: norm(e),
                },
                sep,
            )
        })
}

fn points() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=4).prop_flat_map(|d| prop::collection::vec(prop::collection::vec(0.0f64..1.0, d), 1..=8))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rouge_matches_brute_force(c in tokens(), r in tokens(), n in 1usize..=3) {
        let fast = rouge_n_tokens(&c, &r, n);
        let slow = brute_rouge(&c, &r, n);
        prop_assert!((fast.precision - slow.precision).abs() < 1e-12);
        prop_assert!((fast.recall - slow.recall).abs() < 1e-12);
        prop_assert!((fast.f1 - slow.f1).abs() < 1e-12);
    }

    #[test]
    fn rouge_is_bounded_and_swaps_p_and_r(c in tokens(), r in tokens()) {
        let ab = rouge_n_tokens(&c, &r, 1);
        let ba = rouge_n_tokens(&r, &c, 1);
        for v in [ab.precision, ab.recall, ab.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert_eq!(ab.precision, ba.recall);
        prop_assert_eq!(ab.recall, ba.precision);
    }

    #[test]
    fn sequential_decoder_matches_exhaustive((dist, sep) in distribution()) {
        let got = decode_span_sequential(&dist, sep).unwrap();
        prop_assert_eq!(Some(got), exhaustive_sequential(&dist, sep));
        prop_assert!(sep < got.0 && got.0 <= got.1 && got.1 < dist.start_probs.len());
    }

    #[test]
    fn joint_never_scores_below_sequential((dist, sep) in distribution()) {
        let (s1, e1) = decode_span_sequential(&dist, sep).unwrap();
        let (s2, e2) = decode_span_joint(&dist, sep).unwrap();
        let score = |s: usize, e: usize| dist.start_probs[s] * dist.end_probs[e];
        prop_assert!(score(s2, e2) >= score(s1, e1));
        prop_assert!(sep < s2 && s2 <= e2);
    }

    #[test]
    fn strict_decoding_yields_multi_token_spans((dist, sep) in distribution()) {
        for decoder in [Decoder::Sequential, Decoder::Joint] {
            match decode_span(&dist, sep, decoder, true) {
                Ok((s, e)) => prop_assert!(sep < s && s < e),
                Err(_) => prop_assert!(sep + 2 >= dist.start_probs.len()),
            }
        }
    }

    #[test]
    fn span_loss_is_non_negative((dist, sep) in distribution()) {
        let n = dist.start_probs.len();
        let loss = span_loss(&dist, sep + 1, n - 1).unwrap();
        prop_assert!(loss >= 0.0 && loss.is_finite());
    }

    #[test]
    fn clustering_matches_naive_average_linkage(pts in points(), t in 0.01f64..1.5) {
        let fast = agglomerative_cluster(&pts, t).unwrap();
        prop_assert!(is_partition(&fast, pts.len()));
        prop_assert_eq!(members(&fast), brute_average_linkage(&pts, t));
    }

    #[test]
    fn chunk_count_is_ceiling(n in 0usize..100_000, size in 1usize..64) {
        let k = chunk_count(n, size);
        prop_assert!(k * size >= n);
        prop_assert!(k == 0 || (k - 1) * size < n);
    }
}

#[test]
fn clustering_threshold_extremes() {
    let pts: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect();
    let singletons = agglomerative_cluster(&pts, 1e-9).unwrap();
    assert_eq!(singletons.len(), 8);
    let one = agglomerative_cluster(&pts, 1e9).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].member_indices, (0..8).collect::<Vec<_>>());
}
