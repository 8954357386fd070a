//! Exact cubic-time inference over headed spans.
//!
//! `alpha[i][j]` is the best score of fencepost interval `(i, j)` used as a
//! left or right child span of some head. It is either a concatenation of
//! two adjacent child spans, or a single headed span `(i, j, h)` whose head
//! word sits between its own left child span `(i, h - 1)` and right child
//! span `(h, j)`:
//!
//! ```text
//! alpha[i][i]  = 0
//! alpha[i][j]  = max( max_{i<k<j} alpha[i][k] + alpha[k][j],
//!                     max_{i<h<=j} alpha[i][h-1] + alpha[h][j] + s(i, j, h) )
//! ```
//!
//! The whole sentence `(0, n)` must be one headed span (its head is the
//! single root word), so that cell only takes the second case.

use thiserror::Error;

use crate::par;
use crate::scoring::SpanScores;
use crate::treebank::{extract_headed_spans, DepTree, HeadedSpan, SpanSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChartError {
    #[error("cannot parse an empty sentence")]
    Empty,
    #[error("gold spans cover {gold} words but the sentence has {n}")]
    GoldLength { gold: usize, n: usize },
    #[error("cost must be finite and non-negative, got {0}")]
    InvalidCost(f64),
    #[error("inconsistent backtrack tables: {0}")]
    Inconsistent(String),
}

/// Filled chart with its backtrack tables, all indexed by fencepost pair.
#[derive(Clone, Debug)]
pub struct Chart {
    n: usize,
    alpha: Vec<f64>,
    // alpha transposed, so alpha[k][j] for varying k is a contiguous read
    alpha_t: Vec<f64>,
    headed: Vec<bool>,
    split: Vec<u32>,
    head: Vec<u32>,
}

impl Chart {
    fn empty(n: usize) -> Self {
        let cells = (n + 1) * (n + 1);
        Chart {
            n,
            alpha: vec![f64::NEG_INFINITY; cells],
            alpha_t: vec![f64::NEG_INFINITY; cells],
            headed: vec![false; cells],
            split: vec![0; cells],
            head: vec![0; cells],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (self.n + 1) + j
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self, i: usize, j: usize) -> f64 {
        self.alpha[self.at(i, j)]
    }

    /// `B[i][j]`: whether `(i, j)` was built as a single headed span.
    pub fn is_headed(&self, i: usize, j: usize) -> bool {
        self.headed[self.at(i, j)]
    }

    /// `C[i][j]`: best split point, if the interval has one.
    pub fn split(&self, i: usize, j: usize) -> Option<usize> {
        match self.split[self.at(i, j)] {
            0 => None,
            k => Some(k as usize),
        }
    }

    /// `H[i][j]`: best head word for `(i, j)` as a headed span.
    pub fn head(&self, i: usize, j: usize) -> Option<usize> {
        match self.head[self.at(i, j)] {
            0 => None,
            h => Some(h as usize),
        }
    }

    /// Score of the best tree.
    pub fn best_score(&self) -> f64 {
        self.alpha(0, self.n)
    }
}

const LANES: usize = 4;

/// Largest `a[t] + b[t] (+ c[t])` and the first `t` attaining it
/// (`(-inf, len)` for empty input). The max runs over independent lanes
/// so it vectorizes; the second pass recomputes the same sums, so the
/// equality test is exact.
#[inline]
fn best_sum(a: &[f64], b: &[f64], c: Option<&[f64]>) -> (f64, usize) {
    let len = a.len();
    let b = &b[..len];
    let mut lanes = [f64::NEG_INFINITY; LANES];
    let mut best = f64::NEG_INFINITY;
    match c {
        Some(c) => {
            let c = &c[..len];
            for ((x, y), z) in a.chunks_exact(LANES).zip(b.chunks_exact(LANES)).zip(c.chunks_exact(LANES)) {
                for t in 0..LANES {
                    let v = x[t] + y[t] + z[t];
                    lanes[t] = if v > lanes[t] { v } else { lanes[t] };
                }
            }
            for t in len / LANES * LANES..len {
                let v = a[t] + b[t] + c[t];
                best = if v > best { v } else { best };
            }
        }
        None => {
            for (x, y) in a.chunks_exact(LANES).zip(b.chunks_exact(LANES)) {
                for t in 0..LANES {
                    let v = x[t] + y[t];
                    lanes[t] = if v > lanes[t] { v } else { lanes[t] };
                }
            }
            for t in len / LANES * LANES..len {
                let v = a[t] + b[t];
                best = if v > best { v } else { best };
            }
        }
    }
    for v in lanes {
        best = if v > best { v } else { best };
    }
    let at = match c {
        Some(c) => (0..len).find(|&t| a[t] + b[t] + c[t] == best),
        None => (0..len).find(|&t| a[t] + b[t] == best),
    };
    (best, at.unwrap_or(len))
}

/// Fills `alpha` and the backtrack tables in `O(n^3)` time, `O(n^2)` memory.
///
/// Ties prefer a headed span over a concatenation, then the smallest head
/// or split position.
pub fn fill_chart<S: SpanScores + ?Sized>(scores: &S) -> Result<Chart, ChartError> {
    let n = scores.sentence_len();
    if n == 0 {
        return Err(ChartError::Empty);
    }
    let w = n + 1;
    let mut chart = Chart::empty(n);
    for i in 0..=n {
        chart.alpha[i * w + i] = 0.0;
        chart.alpha_t[i * w + i] = 0.0;
    }
    for width in 1..=n {
        for i in 0..=n - width {
            let j = i + width;
            let row_i = &chart.alpha[i * w..(i + 1) * w];
            let col_j = &chart.alpha_t[j * w..(j + 1) * w];

            // alpha[i][k] + alpha[k][j] over splits, then
            // alpha[i][h-1] + alpha[h][j] + s(i, j, h) over heads
            let left = &row_i[i..j];
            let right = &col_j[i + 1..=j];
            let (best_split, k) = best_sum(&left[1..], &right[..width - 1], None);
            let split_at = if k < width - 1 { i + 1 + k } else { 0 };

            let (best_head, off) = match scores.span_row(i, j) {
                Some(row) => best_sum(left, right, Some(row)),
                None => {
                    let row: Vec<f64> = (i + 1..=j).map(|h| scores.span_score(i, j, h)).collect();
                    best_sum(left, right, Some(&row))
                }
            };
            let head_at = i + 1 + off;

            let cell = i * w + j;
            let headed = (i == 0 && j == n) || best_head >= best_split;
            let value = if headed { best_head } else { best_split };
            chart.alpha[cell] = value;
            chart.alpha_t[j * w + i] = value;
            chart.headed[cell] = headed;
            chart.split[cell] = split_at as u32;
            chart.head[cell] = head_at as u32;
        }
    }
    Ok(chart)
}

/// Best tree with its headed spans and score.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseResult {
    pub tree: DepTree,
    pub spans: SpanSet,
    /// Sum of the span scores of `spans` under the table that was parsed.
    pub score: f64,
}

/// Recovers the tree top-down: the head of every headed span adopts the
/// heads of the spans that segment its left and right child spans.
pub fn backtrack<S: SpanScores + ?Sized>(chart: &Chart, scores: &S) -> Result<ParseResult, ChartError> {
    let n = chart.n;
    if scores.sentence_len() != n {
        return Err(ChartError::Inconsistent(format!(
            "chart has n={n} but scores have n={}",
            scores.sentence_len()
        )));
    }
    if !chart.is_headed(0, n) {
        return Err(ChartError::Inconsistent("whole sentence is not a headed span".into()));
    }
    const UNSET: usize = usize::MAX;
    let mut heads = vec![UNSET; n];
    let mut attach = |word: usize, parent: usize| -> Result<(), ChartError> {
        if heads[word - 1] != UNSET {
            return Err(ChartError::Inconsistent(format!("word {word} attached twice")));
        }
        heads[word - 1] = parent;
        Ok(())
    };
    // (i, j, parent): every top-level headed span inside (i, j) attaches to parent
    let mut stack = vec![(0usize, n, 0usize)];
    while let Some((i, j, parent)) = stack.pop() {
        if i == j {
            continue;
        }
        if i + 1 == j {
            attach(j, parent)?;
        } else if chart.is_headed(i, j) {
            let h = chart
                .head(i, j)
                .filter(|&h| i < h && h <= j)
                .ok_or_else(|| ChartError::Inconsistent(format!("no valid head for ({i}, {j})")))?;
            attach(h, parent)?;
            stack.push((h, j, h));
            stack.push((i, h - 1, h));
        } else {
            let k = chart
                .split(i, j)
                .filter(|&k| i < k && k < j)
                .ok_or_else(|| ChartError::Inconsistent(format!("no valid split for ({i}, {j})")))?;
            stack.push((k, j, parent));
            stack.push((i, k, parent));
        }
    }
    if let Some(w) = heads.iter().position(|&h| h == UNSET) {
        return Err(ChartError::Inconsistent(format!("word {} never attached", w + 1)));
    }
    let tree = DepTree::unlabeled(heads).map_err(|e| ChartError::Inconsistent(e.to_string()))?;
    let spans = extract_headed_spans(&tree).map_err(|e| ChartError::Inconsistent(e.to_string()))?;
    let score = spans.iter().map(|s| scores.span_score(s.l, s.r, s.h)).sum();
    Ok(ParseResult { tree, spans, score })
}

pub fn parse_spans<S: SpanScores + ?Sized>(scores: &S) -> Result<ParseResult, ChartError> {
    let chart = fill_chart(scores)?;
    backtrack(&chart, scores)
}

/// Span scores plus `cost` on every triple that disagrees with the gold
/// span of its head word. Summed over a tree this adds `cost * hamming`.
pub struct CostAugmented<'a, S: ?Sized> {
    base: &'a S,
    gold: &'a SpanSet,
    cost: f64,
}

impl<'a, S: SpanScores + ?Sized> CostAugmented<'a, S> {
    pub fn new(base: &'a S, gold: &'a SpanSet, cost: f64) -> Result<Self, ChartError> {
        if !(cost.is_finite() && cost >= 0.0) {
            return Err(ChartError::InvalidCost(cost));
        }
        if gold.len() != base.sentence_len() {
            return Err(ChartError::GoldLength {
                gold: gold.len(),
                n: base.sentence_len(),
            });
        }
        Ok(CostAugmented { base, gold, cost })
    }
}

impl<S: SpanScores + ?Sized> SpanScores for CostAugmented<'_, S> {
    fn sentence_len(&self) -> usize {
        self.base.sentence_len()
    }

    #[inline]
    fn span_score(&self, l: usize, r: usize, h: usize) -> f64 {
        let s = self.base.span_score(l, r, h);
        if self.gold.of(h) == (HeadedSpan { l, r, h }) {
            s
        } else {
            s + self.cost
        }
    }
}

/// `argmax_y s(y) + cost * hamming(y, gold)`; the reported score is the
/// augmented one.
pub fn cost_augmented_parse<S: SpanScores + ?Sized>(
    scores: &S,
    gold: &SpanSet,
    cost: f64,
) -> Result<ParseResult, ChartError> {
    let augmented = CostAugmented::new(scores, gold, cost)?;
    parse_spans(&augmented)
}

/// Parses many sentences, in parallel when the `parallel` feature is on.
pub fn parse_many<S: SpanScores + Sync>(tables: &[S]) -> Vec<Result<ParseResult, ChartError>> {
    par::map(tables, |t| parse_spans(t))
}

pub fn parse_many_sequential<S: SpanScores>(tables: &[S]) -> Vec<Result<ParseResult, ChartError>> {
    par::map_seq(tables, |t| parse_spans(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::SpanScoreTable;

    const INVENTORY_HEADS: [usize; 10] = [2, 6, 2, 5, 3, 0, 6, 7, 8, 9];

    fn inventory_indicator() -> SpanScoreTable {
        let gold = extract_headed_spans(&DepTree::unlabeled(INVENTORY_HEADS.to_vec()).unwrap()).unwrap();
        SpanScoreTable::from_fn(10, |l, r, h| if gold.of(h) == (HeadedSpan { l, r, h }) { 1.0 } else { -1000.0 })
    }

    #[test]
    fn empty_sentence_is_an_error() {
        assert_eq!(fill_chart(&SpanScoreTable::new(0, 0.0)).unwrap_err(), ChartError::Empty);
    }

    #[test]
    fn single_word() {
        let mut t = SpanScoreTable::new(1, 0.0);
        t.set(0, 1, 1, 2.5).unwrap();
        let chart = fill_chart(&t).unwrap();
        assert_eq!(chart.alpha(0, 1), 2.5);
        assert!(chart.is_headed(0, 1));
        assert_eq!(chart.head(0, 1), Some(1));
        let res = backtrack(&chart, &t).unwrap();
        assert_eq!(res.tree.heads(), &[0]);
        assert_eq!(res.spans.as_slice(), &[HeadedSpan { l: 0, r: 1, h: 1 }]);
        assert_eq!(res.score, 2.5);
    }

    #[test]
    fn two_words_zero_scores() {
        let t = SpanScoreTable::new(2, 0.0);
        let chart = fill_chart(&t).unwrap();
        assert_eq!(chart.alpha(0, 2), 0.0);
        // smallest head wins the tie: word 1 is root
        let res = backtrack(&chart, &t).unwrap();
        assert_eq!(res.tree.heads(), &[0, 1]);
    }

    #[test]
    fn inventory_indicator_recovers_tree() {
        let t = inventory_indicator();
        let res = parse_spans(&t).unwrap();
        assert_eq!(res.tree.heads(), &INVENTORY_HEADS);
        assert_eq!(res.score, 10.0);
    }

    #[test]
    fn root_cell_never_concatenates() {
        // two single-word spans would beat any single-rooted tree
        let mut t = SpanScoreTable::new(2, -10.0);
        t.set(0, 1, 1, 5.0).unwrap();
        t.set(1, 2, 2, 5.0).unwrap();
        let chart = fill_chart(&t).unwrap();
        assert!(chart.is_headed(0, 2));
        let res = backtrack(&chart, &t).unwrap();
        assert_eq!(res.score, chart.best_score());
        assert_eq!(res.score, -5.0);
    }

    #[test]
    fn backtrack_cells_are_well_formed() {
        let t = SpanScoreTable::from_fn(7, |l, r, h| ((l * 7 + r * 3 + h * 5) % 11) as f64 - 5.0);
        let chart = fill_chart(&t).unwrap();
        for i in 0..=7 {
            assert_eq!(chart.alpha(i, i), 0.0);
            for j in i + 1..=7 {
                if chart.is_headed(i, j) {
                    let h = chart.head(i, j).unwrap();
                    assert!(i < h && h <= j);
                } else {
                    let k = chart.split(i, j).unwrap();
                    assert!(i < k && k < j);
                }
            }
        }
    }

    #[test]
    fn zero_cost_matches_plain_parse() {
        let t = SpanScoreTable::from_fn(6, |l, r, h| ((l * 13 + r * 7 + h * 3) % 9) as f64 - 4.0);
        let plain = parse_spans(&t).unwrap();
        let gold = extract_headed_spans(&DepTree::unlabeled(vec![0, 1, 2, 3, 4, 5]).unwrap()).unwrap();
        assert_eq!(cost_augmented_parse(&t, &gold, 0.0).unwrap(), plain);
    }

    #[test]
    fn cost_validation() {
        let t = SpanScoreTable::new(2, 0.0);
        let gold = extract_headed_spans(&DepTree::unlabeled(vec![0, 1]).unwrap()).unwrap();
        assert_eq!(cost_augmented_parse(&t, &gold, -1.0).unwrap_err(), ChartError::InvalidCost(-1.0));
        let short = extract_headed_spans(&DepTree::unlabeled(vec![0]).unwrap()).unwrap();
        assert!(matches!(
            cost_augmented_parse(&t, &short, 1.0),
            Err(ChartError::GoldLength { gold: 1, n: 2 })
        ));
    }

    #[test]
    fn zero_scores_unit_cost_two_words() {
        // the two trees of length 2 share no span, so the other tree scores 2
        let t = SpanScoreTable::new(2, 0.0);
        for heads in [vec![0, 1], vec![2, 0]] {
            let gold_tree = DepTree::unlabeled(heads).unwrap();
            let gold = extract_headed_spans(&gold_tree).unwrap();
            let res = cost_augmented_parse(&t, &gold, 1.0).unwrap();
            assert_eq!(res.score, 2.0);
            assert_ne!(res.tree, gold_tree);
            assert_eq!(res.spans.mismatches(&gold), 2);
        }
    }

    #[test]
    fn batch_matches_sequential() {
        let tables: Vec<SpanScoreTable> = (1..12)
            .map(|n| SpanScoreTable::from_fn(n, |l, r, h| ((l * 31 + r * 17 + h * 7 + n) % 13) as f64))
            .collect();
        assert_eq!(parse_many(&tables), parse_many_sequential(&tables));
    }
}
