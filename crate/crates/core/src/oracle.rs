//! Ground truth for the chart parser: exhaustive enumeration of projective
//! trees, brute-force argmax, and an independent first-order Eisner decoder.

use thiserror::Error;

use crate::scoring::{ArcScoreTable, SpanScores};
use crate::treebank::{extract_headed_spans, is_projective, DepTree, SpanSet};

/// Largest sentence length the enumerator accepts.
pub const MAX_ENUM_LEN: usize = 10;
/// Largest sentence length for the `n^n` head-array filter.
pub const MAX_FILTER_LEN: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("sentence length {n} outside 1..={max}")]
    OutOfRange { n: usize, max: usize },
    #[error("gold spans cover {gold} words but the sentence has {n}")]
    GoldLength { gold: usize, n: usize },
}

fn guard(n: usize, max: usize) -> Result<(), OracleError> {
    if n == 0 || n > max {
        Err(OracleError::OutOfRange { n, max })
    } else {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
enum Task {
    /// One headed subtree covering exactly `(l, r)`, attached to `parent`.
    Headed { l: usize, r: usize, parent: usize },
    /// A left-to-right sequence of headed subtrees tiling `(l, r)`.
    Tiling { l: usize, r: usize, parent: usize },
}

impl Task {
    fn choices(&self) -> usize {
        match *self {
            Task::Headed { l, r, .. } => r - l,
            Task::Tiling { l, r, .. } if l == r => 1,
            Task::Tiling { l, r, .. } => r - l,
        }
    }
}

#[derive(Clone, Debug)]
struct Frame {
    tasks: Vec<Task>,
    heads: Vec<usize>,
    next_choice: usize,
}

/// Yields every single-rooted projective tree of length `n` exactly once.
///
/// Depth-first over two kinds of choice: the head word of a headed
/// subtree, and the end of the first subtree in a tiling. Each tree has a
/// unique sequence of such choices.
#[derive(Clone, Debug)]
pub struct TreeIterator {
    n: usize,
    stack: Vec<Frame>,
}

impl TreeIterator {
    pub fn n(&self) -> usize {
        self.n
    }
}

impl Iterator for TreeIterator {
    type Item = DepTree;

    fn next(&mut self) -> Option<DepTree> {
        loop {
            let top = self.stack.last_mut()?;
            let Some(&task) = top.tasks.last() else {
                let frame = self.stack.pop().unwrap();
                return Some(DepTree::unlabeled(frame.heads).expect("enumerated trees are valid"));
            };
            if top.next_choice >= task.choices() {
                self.stack.pop();
                continue;
            }
            let choice = top.next_choice;
            top.next_choice += 1;
            let mut tasks = top.tasks.clone();
            tasks.pop();
            let mut heads = top.heads.clone();
            match task {
                Task::Headed { l, r, parent } => {
                    let h = l + 1 + choice;
                    heads[h - 1] = parent;
                    tasks.push(Task::Tiling { l: h, r, parent: h });
                    tasks.push(Task::Tiling { l, r: h - 1, parent: h });
                }
                Task::Tiling { l, r, .. } if l == r => {}
                Task::Tiling { l, r, parent } => {
                    let k = l + 1 + choice;
                    tasks.push(Task::Tiling { l: k, r, parent });
                    tasks.push(Task::Headed { l, r: k, parent });
                }
            }
            self.stack.push(Frame {
                tasks,
                heads,
                next_choice: 0,
            });
        }
    }
}

pub fn enumerate_projective_trees(n: usize) -> Result<TreeIterator, OracleError> {
    guard(n, MAX_ENUM_LEN)?;
    Ok(TreeIterator {
        n,
        stack: vec![Frame {
            tasks: vec![Task::Headed { l: 0, r: n, parent: 0 }],
            heads: vec![0; n],
            next_choice: 0,
        }],
    })
}

/// Independent enumeration: all `n^n` head arrays with `head[i] != i`,
/// kept when they form a single-rooted projective tree.
pub fn filter_projective_trees(n: usize) -> Result<Vec<DepTree>, OracleError> {
    guard(n, MAX_FILTER_LEN)?;
    let mut out = Vec::new();
    // digit d of word i maps to head d, skipping i itself
    let mut digits = vec![0usize; n];
    loop {
        let heads: Vec<usize> = digits
            .iter()
            .enumerate()
            .map(|(i, &d)| if d < i + 1 { d } else { d + 1 })
            .collect();
        if let Ok(tree) = DepTree::unlabeled(heads) {
            if is_projective(&tree) {
                out.push(tree);
            }
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(out);
            }
            digits[pos] += 1;
            if digits[pos] < n {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Exhaustive `argmax_y sum s_span(y) + cost * hamming(y, gold)`. Ties keep
/// the first tree in enumeration order.
pub fn brute_force_best_span_tree<S: SpanScores + ?Sized>(
    scores: &S,
    gold: Option<&SpanSet>,
    cost: f64,
) -> Result<(DepTree, f64), OracleError> {
    let n = scores.sentence_len();
    if let Some(g) = gold {
        if g.len() != n {
            return Err(OracleError::GoldLength { gold: g.len(), n });
        }
    }
    let mut best: Option<(DepTree, f64)> = None;
    for tree in enumerate_projective_trees(n)? {
        let spans = extract_headed_spans(&tree).expect("enumerated trees are projective");
        let mut total: f64 = spans.iter().map(|s| scores.span_score(s.l, s.r, s.h)).sum();
        if let Some(g) = gold {
            let differing = spans.iter().zip(g.iter()).filter(|(a, b)| a != b).count();
            total += cost * differing as f64;
        }
        if best.as_ref().is_none_or(|(_, b)| total > *b) {
            best = Some((tree, total));
        }
    }
    Ok(best.expect("at least one tree"))
}

pub fn arc_score(arcs: &ArcScoreTable, tree: &DepTree) -> f64 {
    tree.heads()
        .iter()
        .enumerate()
        .map(|(i, &h)| arcs.get(h, i + 1))
        .sum()
}

/// Exhaustive arc-factored argmax over projective trees.
pub fn brute_force_best_arc_tree(arcs: &ArcScoreTable) -> Result<(DepTree, f64), OracleError> {
    let mut best: Option<(DepTree, f64)> = None;
    for tree in enumerate_projective_trees(arcs.n())? {
        let total = arc_score(arcs, &tree);
        if best.as_ref().is_none_or(|(_, b)| total > *b) {
            best = Some((tree, total));
        }
    }
    Ok(best.expect("at least one tree"))
}

const LEFT: usize = 0;
const RIGHT: usize = 1;

/// First-order projective decoding with complete and incomplete items over
/// words `1..=n`; the root attaches to exactly one word at the end.
pub fn eisner_parse(arcs: &ArcScoreTable) -> Result<(DepTree, f64), OracleError> {
    let n = arcs.n();
    if n == 0 {
        return Err(OracleError::OutOfRange { n, max: usize::MAX });
    }
    let w = n + 1;
    let idx = |s: usize, t: usize, d: usize| (s * w + t) * 2 + d;
    let mut complete = vec![f64::NEG_INFINITY; w * w * 2];
    let mut incomplete = vec![f64::NEG_INFINITY; w * w * 2];
    let mut complete_bp = vec![0usize; w * w * 2];
    let mut incomplete_bp = vec![0usize; w * w * 2];
    for s in 1..=n {
        complete[idx(s, s, LEFT)] = 0.0;
        complete[idx(s, s, RIGHT)] = 0.0;
    }
    for width in 1..n {
        for s in 1..=n - width {
            let t = s + width;
            // link: left-facing item headed at s meets right-facing item headed at t
            let mut best = f64::NEG_INFINITY;
            let mut arg = s;
            for r in s..t {
                let v = complete[idx(s, r, RIGHT)] + complete[idx(r + 1, t, LEFT)];
                if v > best {
                    best = v;
                    arg = r;
                }
            }
            incomplete[idx(s, t, LEFT)] = best + arcs.get(t, s);
            incomplete[idx(s, t, RIGHT)] = best + arcs.get(s, t);
            incomplete_bp[idx(s, t, LEFT)] = arg;
            incomplete_bp[idx(s, t, RIGHT)] = arg;

            let mut best = f64::NEG_INFINITY;
            let mut arg = s;
            for r in s..t {
                let v = complete[idx(s, r, LEFT)] + incomplete[idx(r, t, LEFT)];
                if v > best {
                    best = v;
                    arg = r;
                }
            }
            complete[idx(s, t, LEFT)] = best;
            complete_bp[idx(s, t, LEFT)] = arg;

            let mut best = f64::NEG_INFINITY;
            let mut arg = t;
            for r in s + 1..=t {
                let v = incomplete[idx(s, r, RIGHT)] + complete[idx(r, t, RIGHT)];
                if v > best {
                    best = v;
                    arg = r;
                }
            }
            complete[idx(s, t, RIGHT)] = best;
            complete_bp[idx(s, t, RIGHT)] = arg;
        }
    }

    let mut best = f64::NEG_INFINITY;
    let mut root = 1;
    for r in 1..=n {
        let v = complete[idx(1, r, LEFT)] + complete[idx(r, n, RIGHT)] + arcs.get(0, r);
        if v > best {
            best = v;
            root = r;
        }
    }

    enum Item {
        Complete(usize, usize, usize),
        Incomplete(usize, usize, usize),
    }
    let mut heads = vec![0usize; n];
    let mut stack = vec![Item::Complete(1, root, LEFT), Item::Complete(root, n, RIGHT)];
    while let Some(item) = stack.pop() {
        match item {
            Item::Complete(s, t, _) if s == t => {}
            Item::Complete(s, t, LEFT) => {
                let r = complete_bp[idx(s, t, LEFT)];
                stack.push(Item::Complete(s, r, LEFT));
                stack.push(Item::Incomplete(r, t, LEFT));
            }
            Item::Complete(s, t, _) => {
                let r = complete_bp[idx(s, t, RIGHT)];
                stack.push(Item::Incomplete(s, r, RIGHT));
                stack.push(Item::Complete(r, t, RIGHT));
            }
            Item::Incomplete(s, t, d) => {
                if d == LEFT {
                    heads[s - 1] = t;
                } else {
                    heads[t - 1] = s;
                }
                let r = incomplete_bp[idx(s, t, d)];
                stack.push(Item::Complete(s, r, RIGHT));
                stack.push(Item::Complete(r + 1, t, LEFT));
            }
        }
    }
    heads[root - 1] = 0;
    let tree = DepTree::unlabeled(heads).expect("eisner yields a tree");
    let score = arc_score(arcs, &tree);
    Ok((tree, score))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::SpanScoreTable;
    use crate::treebank::HeadedSpan;

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_projective_trees(1).unwrap().count(), 1);
        let two: Vec<_> = enumerate_projective_trees(2).unwrap().map(|t| t.heads().to_vec()).collect();
        assert_eq!(two.len(), 2);
        assert!(two.contains(&vec![0, 1]));
        assert!(two.contains(&vec![2, 0]));
    }

    #[test]
    fn guards() {
        assert_eq!(
            enumerate_projective_trees(0).unwrap_err(),
            OracleError::OutOfRange { n: 0, max: MAX_ENUM_LEN }
        );
        assert!(enumerate_projective_trees(11).is_err());
        assert!(filter_projective_trees(9).is_err());
    }

    #[test]
    fn three_word_indicator() {
        let gold = [(0, 3, 2), (0, 1, 1), (2, 3, 3)];
        let t = SpanScoreTable::from_fn(3, |l, r, h| {
            if gold.contains(&(l, r, h)) {
                1.0
            } else {
                -1.0
            }
        });
        let (tree, score) = brute_force_best_span_tree(&t, None, 0.0).unwrap();
        assert_eq!(tree.heads(), &[2, 0, 2]);
        assert_eq!(score, 3.0);
    }

    #[test]
    fn single_word_span_score() {
        let mut t = SpanScoreTable::new(1, 0.0);
        t.set(0, 1, 1, -2.0).unwrap();
        let (tree, score) = brute_force_best_span_tree(&t, None, 0.0).unwrap();
        assert_eq!(tree.heads(), &[0]);
        assert_eq!(score, -2.0);
    }

    #[test]
    fn hamming_term_is_added() {
        let t = SpanScoreTable::new(2, 0.0);
        let gold = SpanSet::new(vec![HeadedSpan { l: 0, r: 1, h: 1 }, HeadedSpan { l: 0, r: 2, h: 2 }]).unwrap();
        let (tree, score) = brute_force_best_span_tree(&t, Some(&gold), 1.0).unwrap();
        assert_eq!(tree.heads(), &[0, 1]);
        assert_eq!(score, 2.0);
    }

    #[test]
    fn eisner_single_word_and_pair() {
        let mut arcs = ArcScoreTable::new(1, 0.0);
        arcs.set(0, 1, 4.0).unwrap();
        let (tree, score) = eisner_parse(&arcs).unwrap();
        assert_eq!(tree.heads(), &[0]);
        assert_eq!(score, 4.0);

        let mut arcs = ArcScoreTable::new(2, -10.0);
        arcs.set(0, 2, 1.0).unwrap();
        arcs.set(2, 1, 1.0).unwrap();
        let (tree, score) = eisner_parse(&arcs).unwrap();
        assert_eq!(tree.heads(), &[2, 0]);
        assert_eq!(score, 2.0);
    }
}
