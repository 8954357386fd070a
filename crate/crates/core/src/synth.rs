//! Seeded random inputs: projective trees, toy treebanks, and score tables.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::scoring::{ArcScoreTable, SpanScoreTable};
use crate::treebank::{DepTree, Sentence, Token};

const TAGS: [&str; 8] = ["NOUN", "VERB", "ADJ", "DET", "ADP", "ADV", "PRON", "AUX"];

/// Deterministic generator for a `(seed, stream)` pair, so parallel trials
/// draw the same numbers regardless of scheduling.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A random single-rooted projective tree over `n >= 1` words.
pub fn random_projective_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DepTree {
    assert!(n >= 1);
    let mut heads = vec![0; n];
    // (l, r, parent, headed): a headed subtree or a tiling of (l, r)
    let mut stack = vec![(0usize, n, 0usize, true)];
    while let Some((l, r, parent, headed)) = stack.pop() {
        if l == r {
            continue;
        }
        if headed {
            let h = rng.random_range(l + 1..=r);
            heads[h - 1] = parent;
            stack.push((l, h - 1, h, false));
            stack.push((h, r, h, false));
        } else {
            let k = rng.random_range(l + 1..=r);
            stack.push((l, k, parent, true));
            stack.push((k, r, parent, false));
        }
    }
    DepTree::unlabeled(heads).expect("generated tree is valid")
}

/// A sentence of `n` words drawn from `forms_per_tag` forms per tag.
pub fn random_sentence<R: Rng + ?Sized>(id: &str, n: usize, forms_per_tag: usize, rng: &mut R) -> Sentence {
    let tokens = (1..=n)
        .map(|i| {
            let tag = TAGS[rng.random_range(0..TAGS.len())];
            let form = format!("{}{}", tag.to_lowercase(), rng.random_range(0..forms_per_tag.max(1)));
            Token::new(i, form, tag)
        })
        .collect();
    Sentence {
        id: id.to_string(),
        comments: vec![format!(" sent_id = {id}")],
        tokens,
    }
}

/// Label of an arc as a function of the two tags and the direction.
fn synthetic_label(sent: &Sentence, head: usize, dep: usize) -> String {
    if head == 0 {
        return "root".into();
    }
    let h = &sent.word(head).upos;
    let d = &sent.word(dep).upos;
    let dir = if head < dep { "r" } else { "l" };
    format!("{}:{}{}", d.to_lowercase(), h[..1].to_lowercase(), dir)
}

/// `count` labeled projective sentences with lengths in `min_len..=max_len`.
pub fn synthetic_treebank(
    count: usize,
    min_len: usize,
    max_len: usize,
    forms_per_tag: usize,
    seed: u64,
) -> Vec<(Sentence, DepTree)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.random_range(min_len..=max_len);
            let sent = random_sentence(&format!("synth-{}", i + 1), n, forms_per_tag, &mut rng);
            let tree = random_projective_tree(n, &mut rng);
            let labels = (1..=n).map(|d| synthetic_label(&sent, tree.head_of(d), d)).collect();
            let tree = tree.with_labels(labels).expect("same heads");
            (sent, tree)
        })
        .collect()
}

/// Span table with integer scores drawn uniformly from `lo..=hi`.
pub fn random_span_table<R: Rng + ?Sized>(n: usize, lo: i64, hi: i64, rng: &mut R) -> SpanScoreTable {
    SpanScoreTable::from_fn(n, |_, _, _| rng.random_range(lo..=hi) as f64)
}

/// Span table with uniform real scores in `[0, 1)`.
pub fn random_real_span_table<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SpanScoreTable {
    SpanScoreTable::from_fn(n, |_, _, _| rng.random::<f64>())
}

pub fn random_arc_table<R: Rng + ?Sized>(n: usize, lo: i64, hi: i64, rng: &mut R) -> ArcScoreTable {
    ArcScoreTable::from_fn(n, |_, _| rng.random_range(lo..=hi) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::is_projective;

    #[test]
    fn trees_are_projective() {
        let mut rng = rng_for(3, 0);
        for n in 1..30 {
            assert!(is_projective(&random_projective_tree(n, &mut rng)));
        }
    }

    #[test]
    fn treebank_is_deterministic() {
        assert_eq!(synthetic_treebank(5, 2, 9, 20, 11), synthetic_treebank(5, 2, 9, 20, 11));
        let tb = synthetic_treebank(5, 2, 9, 20, 11);
        assert!(tb.iter().all(|(s, t)| s.len() == t.len() && (2..=9).contains(&s.len())));
    }

    #[test]
    fn streams_differ() {
        let a = random_span_table(4, -5, 5, &mut rng_for(1, 0));
        let b = random_span_table(4, -5, 5, &mut rng_for(1, 1));
        assert_ne!(a, b);
    }
}
