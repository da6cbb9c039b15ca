use proptest::prelude::*;

use lexdur::corpus::{parse_corpus, write_corpus, Age, CorpusRecord, ParseOptions, Sex};
use lexdur::semrel::{pair_weight, pair_weight_exact};
use lexdur::stats::{compare_models, ModelSummary};

fn phones() -> impl Strategy<Value = Option<Vec<String>>> {
    proptest::option::of(proptest::collection::vec("[a-z]{1,3}", 1..6))
}

prop_compose! {
    fn record(index: u64)(
        word in "[a-z]{1,10}",
        start in 0u32..100_000,
        len in 1u32..2_000,
        speaker in "s[0-9]{2}",
        sex in proptest::option::of(prop_oneof![Just(Sex::Female), Just(Sex::Male)]),
        age in proptest::option::of(prop_oneof![Just(Age::Young), Just(Age::Old)]),
        canonical in phones(),
        realized in phones(),
        deletions in proptest::option::of(0u32..5),
    ) -> CorpusRecord {
        CorpusRecord {
            token_index: index,
            word,
            canonical_phones: canonical,
            realized_phones: realized,
            deletions,
            start_s: f64::from(start) / 1000.0,
            end_s: f64::from(start + len) / 1000.0,
            phrase_id: format!("p{}", index / 3),
            speaker_id: speaker,
            sex,
            age,
        }
    }
}

fn records() -> impl Strategy<Value = Vec<CorpusRecord>> {
    (1usize..30).prop_flat_map(|n| (0..n as u64).map(record).collect::<Vec<_>>())
}

proptest! {
    #[test]
    fn canonical_tsv_round_trips(mut recs in records()) {
        recs.sort_by(|a, b| (&a.speaker_id, a.token_index).cmp(&(&b.speaker_id, b.token_index)));
        let mut buf = Vec::new();
        write_corpus(&mut buf, &recs).unwrap();
        let parsed = parse_corpus(buf.as_slice(), &ParseOptions::default()).unwrap();
        prop_assert!(parsed.dropped.is_empty(), "{:?}", parsed.dropped);
        prop_assert_eq!(parsed.records, recs);
    }

    #[test]
    fn pair_weight_is_symmetric_and_bounded(a in 0u32..50, b in 0u32..50) {
        prop_assume!(a != b);
        prop_assert_eq!(pair_weight_exact(a, b), pair_weight_exact(b, a));
        let w = pair_weight(a, b);
        prop_assert!(w > 0.0 && w <= 1.0);
    }

    #[test]
    fn aic_ranking_is_sorted_and_relative_to_best(aics in proptest::collection::vec(-1e4f64..1e4, 1..8)) {
        let models: Vec<ModelSummary> = aics
            .iter()
            .enumerate()
            .map(|(i, &aic)| ModelSummary { name: format!("m{i}"), n: 50, df: 3.0, loglik: 3.0 - aic / 2.0, aic })
            .collect();
        let table = compare_models(&models).unwrap();
        let best = aics.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(table.rows.windows(2).all(|w| w[0].aic <= w[1].aic));
        for r in &table.rows {
            prop_assert!((r.delta - (r.aic - best)).abs() < 1e-9);
            prop_assert_eq!(r.similar_to_best, r.delta < 2.0);
        }
    }
}
