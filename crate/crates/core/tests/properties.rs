//! Property tests for the metric invariants and the parser round-trip.

use proptest::prelude::*;

use cotalign_core::chain::parse_chain_text;
use cotalign_core::entropy::{
    kl_divergence, normalize_upper, pairwise_entropy, AlignmentReport, EntropyMatrix,
    NormalizedEntropyVector,
};
use cotalign_core::scos::{select_best, CandidateScore};
use cotalign_core::semantic::RelationDistribution;
use cotalign_core::synth::clean_chain;

fn simplex() -> impl Strategy<Value = RelationDistribution> {
    (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0)
        .prop_filter("degenerate", |(a, b, c)| a + b + c > 1e-9)
        .prop_map(|(a, b, c)| {
            let sum = a + b + c;
            RelationDistribution::new(a / sum, b / sum, c / sum).unwrap()
        })
}

fn smoothed_vector(len: usize) -> impl Strategy<Value = NormalizedEntropyVector> {
    proptest::collection::vec(0.0f64..2.0, len).prop_map(|raw| {
        let raw: Vec<f64> = raw.into_iter().map(|x| x + 1e-9).collect();
        let sum: f64 = raw.iter().sum();
        NormalizedEntropyVector::from_raw(raw.into_iter().map(|x| x / sum).collect())
    })
}

proptest! {
    #[test]
    fn entropy_stays_in_three_class_bounds(d in simplex()) {
        let h = pairwise_entropy(&d);
        prop_assert!(h >= 0.0);
        prop_assert!(h <= 3f64.log2() + 1e-12);
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_self(p in smoothed_vector(6), q in smoothed_vector(6)) {
        prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
    }

    #[test]
    fn normalized_upper_triangle_is_a_distribution(entries in proptest::collection::vec(0.0f64..3.0, 6)) {
        // 4 statements → 6 upper-triangular entries.
        let mut values = vec![0.0f64; 16];
        let mut it = entries.iter();
        for i in 0..4 {
            for j in (i + 1)..4 {
                values[i * 4 + j] = *it.next().unwrap();
            }
        }
        let v = normalize_upper(&EntropyMatrix::from_values(4, values), 1e-9);
        prop_assert!((v.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(v.values().iter().all(|x| *x > 0.0));
    }

    #[test]
    fn report_score_is_affine_in_ssd(ssd in 0.0f64..3.0) {
        let report = AlignmentReport::from_ssd(ssd, 3);
        prop_assert_eq!(report.score, (1.0 - ssd) * 100.0);
    }

    #[test]
    fn parser_round_trips_synthetic_chains(topic in 0usize..8, variant in 0u64..64, hops in 1usize..5) {
        let chain = clean_chain(topic, variant, hops);
        let reparsed = parse_chain_text(&chain.to_template_text(), hops).unwrap();
        prop_assert_eq!(reparsed.statement_sequence(), chain.statement_sequence());
        prop_assert_eq!(reparsed.hops, chain.hops);
    }

    #[test]
    fn selection_matches_brute_force_minimum(taus in proptest::collection::vec(0.0f64..10.0, 1..20)) {
        let candidates: Vec<CandidateScore> = taus
            .iter()
            .enumerate()
            .map(|(index, &tau)| CandidateScore {
                index,
                tau,
                parse_ok: true,
                parse_error: None,
                chain: Some(clean_chain(0, 0, 1)),
                raw: None,
            })
            .collect();
        let best = select_best(&candidates).unwrap();
        let min = taus.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(best.tau, min);
        // Lowest-index tie rule: nothing earlier has the same tau.
        prop_assert!(taus[..best.index].iter().all(|t| *t > min));
    }
}
