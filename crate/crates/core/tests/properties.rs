use proptest::prelude::*;

use headspan::evalkit::{attachment_scores, full_report, span_f1, BucketKind, Pair, PunctPolicy};
use headspan::oracle::brute_force_best_span_tree;
use headspan::scoring::{score_spans, FeatureScorer, SpanScoreTable};
use headspan::synth::{random_projective_tree, rng_for, synthetic_treebank};
use headspan::treebank::{read_conllu, write_conllu, DepTree};
use headspan::{extract_headed_spans, parse_spans, spans_to_tree};

fn table_strategy(max_n: usize) -> impl Strategy<Value = SpanScoreTable> {
    (1..=max_n).prop_flat_map(|n| {
        let cells = n * (n + 1) * (n + 2) / 6;
        prop::collection::vec(-20i32..=20, cells).prop_map(move |v| {
            let mut it = v.into_iter();
            SpanScoreTable::from_fn(n, |_, _, _| it.next().unwrap() as f64)
        })
    })
}

fn tree_strategy(max_n: usize) -> impl Strategy<Value = DepTree> {
    (1..=max_n, any::<u64>()).prop_map(|(n, seed)| random_projective_tree(n, &mut rng_for(seed, 0)))
}

fn is_ancestor_or_self(tree: &DepTree, a: usize, mut b: usize) -> bool {
    while b != 0 {
        if b == a {
            return true;
        }
        b = tree.head_of(b);
    }
    false
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn chart_matches_brute_force(table in table_strategy(6)) {
        let res = parse_spans(&table).unwrap();
        let (_, best) = brute_force_best_span_tree(&table, None, 0.0).unwrap();
        prop_assert_eq!(res.score, best);
        prop_assert_eq!(table.total(res.spans.iter()), res.score);
        prop_assert_eq!(extract_headed_spans(&res.tree).unwrap(), res.spans);
    }

    #[test]
    fn constant_shift_moves_score_by_n(table in table_strategy(8), c in -5i32..=5) {
        let n = table.n();
        let shifted = SpanScoreTable::from_fn(n, |l, r, h| table.get(l, r, h) + c as f64);
        let a = parse_spans(&table).unwrap();
        let b = parse_spans(&shifted).unwrap();
        prop_assert_eq!(b.score, a.score + (n as i32 * c) as f64);
        prop_assert_eq!(a.tree, b.tree);
    }

    #[test]
    fn raising_a_chosen_span_raises_the_optimum(table in table_strategy(8), pick in any::<prop::sample::Index>(), d in 1i32..10) {
        let a = parse_spans(&table).unwrap();
        let s = *pick.get(a.spans.as_slice());
        let mut raised = table.clone();
        raised.set(s.l, s.r, s.h, table.get(s.l, s.r, s.h) + d as f64).unwrap();
        let b = parse_spans(&raised).unwrap();
        prop_assert_eq!(b.score, a.score + d as f64);
    }

    #[test]
    fn containment_is_ancestry(tree in tree_strategy(12)) {
        let spans = extract_headed_spans(&tree).unwrap();
        let n = tree.len();
        for a in 1..=n {
            for b in 1..=n {
                let (sa, sb) = (spans.of(a), spans.of(b));
                let contains = sa.l <= sb.l && sb.r <= sa.r;
                prop_assert_eq!(contains, is_ancestor_or_self(&tree, a, b), "a={} b={}", a, b);
            }
        }
        prop_assert_eq!(spans_to_tree(&spans).unwrap(), tree);
    }

    #[test]
    fn span_f1_is_symmetric_and_las_below_uas(g in tree_strategy(10), seed in any::<u64>()) {
        let n = g.len();
        let p = random_projective_tree(n, &mut rng_for(seed, 1));
        let (gs, ps) = (extract_headed_spans(&g).unwrap(), extract_headed_spans(&p).unwrap());
        prop_assert_eq!(span_f1(&gs, &ps).unwrap(), span_f1(&ps, &gs).unwrap());

        let (sent, _) = synthetic_treebank(1, n, n, 5, seed).remove(0);
        let labels = |t: &DepTree, salt: usize| -> Vec<String> {
            (1..=n).map(|d| if t.head_of(d) == 0 { "root".into() } else { format!("l{}", (d + salt) % 3) }).collect()
        };
        let g = g.clone().with_labels(labels(&g, 0)).unwrap();
        let p = p.with_labels(labels(&p, seed as usize % 2)).unwrap();
        let pair = Pair { sentence: &sent, gold: &g, pred: &p };
        let r = attachment_scores(&[pair], PunctPolicy::None).unwrap();
        prop_assert!(r.las <= r.uas);
    }

    #[test]
    fn buckets_partition_the_units(count in 1usize..6, seed in any::<u64>()) {
        let gold = synthetic_treebank(count, 1, 25, 5, seed);
        let pred: Vec<DepTree> = gold
            .iter()
            .enumerate()
            .map(|(i, (s, _))| random_projective_tree(s.len(), &mut rng_for(seed, i as u64)))
            .collect();
        let pairs: Vec<Pair<'_>> = gold
            .iter()
            .zip(&pred)
            .map(|((s, g), p)| Pair { sentence: s, gold: g, pred: p })
            .collect();
        let report = full_report(&pairs, PunctPolicy::None).unwrap();
        let words: usize = gold.iter().map(|(s, _)| s.len()).sum();
        for kind in BucketKind::ALL {
            let rows: Vec<_> = report.buckets.iter().filter(|r| r.kind == kind).collect();
            prop_assert_eq!(rows.len(), kind.labels().len());
            prop_assert_eq!(rows.iter().map(|r| r.gold).sum::<usize>(), words);
            prop_assert_eq!(rows.iter().map(|r| r.predicted).sum::<usize>(), words);
        }
    }

    #[test]
    fn conllu_round_trip(count in 0usize..5, seed in any::<u64>()) {
        let tb = synthetic_treebank(count, 1, 15, 7, seed);
        let text = write_conllu(&tb);
        let back = read_conllu(&text).unwrap();
        prop_assert_eq!(&back, &tb);
        prop_assert_eq!(write_conllu(&back), text);
    }

    #[test]
    fn span_scores_are_linear_in_the_weights(seed in any::<u64>(), k in -4i32..=4) {
        let (sent, tree) = synthetic_treebank(1, 1, 8, 5, seed).remove(0);
        let mut scorer = FeatureScorer::new(16, true, vec![]);
        let atoms = scorer.atoms(&sent);
        let spans = extract_headed_spans(&tree).unwrap();
        for (i, s) in spans.iter().enumerate() {
            for f in scorer.span_features(&atoms, s.l, s.r, s.h) {
                scorer.add_span_weight(f, 0.25 * (i % 3) as f64 - 0.5);
            }
        }
        let base = score_spans(&scorer, &sent);
        let mut scaled = scorer.clone();
        scaled.scale_span_weights(k as f64);
        let out = score_spans(&scaled, &sent);
        for (s, v) in base.iter() {
            // weights are multiples of 1/4, so the products are exact
            prop_assert_eq!(out.get(s.l, s.r, s.h), k as f64 * v);
        }
    }
}
