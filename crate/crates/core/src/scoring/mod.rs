//! Span, arc, and label score tables plus the two score sources: a hashed
//! sparse linear model and JSON Lines score files.

mod features;
mod model;
mod scorefile;

pub use features::{bucket, FeatureHasher, SentenceAtoms, Template, DEFAULT_HASH_BITS};
pub use model::{featurize_arc, featurize_span, predict_labels, score_labels, score_spans, FeatureScorer};
pub use scorefile::{load_score_file, parse_score_file, write_score_file, ScoreRecord, SCORE_FILE_DEFAULT};

use thiserror::Error;

use crate::treebank::HeadedSpan;

/// Score given to spans or arcs that must never be chosen. Three of them
/// still add up to a finite value.
pub const NEG_SENTINEL: f64 = -1e18;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("triple ({l}, {r}, {h}) is not a valid headed span for n={n}")]
    InvalidTriple { n: usize, l: usize, r: usize, h: usize },
    #[error("arc {head} -> {dep} is not allowed for n={n}")]
    InvalidArc { n: usize, head: usize, dep: usize },
    #[error("score record {record} ({sent_id}): {msg}")]
    Record {
        record: usize,
        sent_id: String,
        msg: String,
    },
    #[error("label vocabulary is empty")]
    EmptyLabels,
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("model file: {0}")]
    Model(String),
    #[error("{0}")]
    Io(String),
}

/// Read access to `s_span(l, r, h)` for one sentence.
pub trait SpanScores {
    fn sentence_len(&self) -> usize;
    /// Score of the headed span `(l, r, h)`; only called with `l < h <= r <= n`.
    fn span_score(&self, l: usize, r: usize, h: usize) -> f64;

    /// Scores of `(l, r, h)` for `h = l + 1..=r` as one slice, when the
    /// implementation stores them that way.
    fn span_row(&self, _l: usize, _r: usize) -> Option<&[f64]> {
        None
    }
}

/// Dense table over every valid triple `0 <= l < h <= r <= n`.
///
/// Storage is triangular: the cells of interval `(l, r)` are contiguous and
/// indexed by `h - l - 1`, so `n (n + 1) (n + 2) / 6` values in total.
/// Intervals are ordered by width, then by `l`, which is the order the chart
/// visits them in.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanScoreTable {
    n: usize,
    default: f64,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl SpanScoreTable {
    /// Every triple starts at `default`.
    pub fn new(n: usize, default: f64) -> Self {
        let mut offsets = vec![usize::MAX; (n + 1) * (n + 1)];
        let mut next = 0;
        for width in 1..=n {
            for l in 0..=n - width {
                offsets[l * (n + 1) + l + width] = next;
                next += width;
            }
        }
        SpanScoreTable {
            n,
            default,
            offsets,
            values: vec![default; next],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut table = SpanScoreTable::new(n, 0.0);
        let mut i = 0;
        for width in 1..=n {
            for l in 0..=n - width {
                for h in l + 1..=l + width {
                    table.values[i] = f(l, l + width, h);
                    i += 1;
                }
            }
        }
        table
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn default_score(&self) -> f64 {
        self.default
    }

    fn check(&self, l: usize, r: usize, h: usize) -> Result<(), ScoreError> {
        if l < h && h <= r && r <= self.n {
            Ok(())
        } else {
            Err(ScoreError::InvalidTriple { n: self.n, l, r, h })
        }
    }

    #[inline]
    fn index(&self, l: usize, r: usize, h: usize) -> usize {
        self.offsets[l * (self.n + 1) + r] + (h - l - 1)
    }

    pub fn get(&self, l: usize, r: usize, h: usize) -> f64 {
        debug_assert!(self.check(l, r, h).is_ok());
        self.values[self.index(l, r, h)]
    }

    pub fn set(&mut self, l: usize, r: usize, h: usize, score: f64) -> Result<(), ScoreError> {
        self.check(l, r, h)?;
        let i = self.index(l, r, h);
        self.values[i] = score;
        Ok(())
    }

    /// Scores of `(l, r, h)` for `h = l + 1..=r`.
    pub fn row(&self, l: usize, r: usize) -> &[f64] {
        let start = self.offsets[l * (self.n + 1) + r];
        &self.values[start..start + (r - l)]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Every triple with its score, ordered by `(l, r, h)`.
    pub fn iter(&self) -> impl Iterator<Item = (HeadedSpan, f64)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |l| (l + 1..=n).flat_map(move |r| (l + 1..=r).map(move |h| HeadedSpan { l, r, h })))
            .map(move |s| (s, self.get(s.l, s.r, s.h)))
    }

    /// Sum of the scores of the given spans.
    pub fn total<'a>(&self, spans: impl IntoIterator<Item = &'a HeadedSpan>) -> f64 {
        spans.into_iter().map(|s| self.get(s.l, s.r, s.h)).sum()
    }
}

impl SpanScores for SpanScoreTable {
    fn sentence_len(&self) -> usize {
        self.n
    }

    #[inline]
    fn span_score(&self, l: usize, r: usize, h: usize) -> f64 {
        self.get(l, r, h)
    }

    fn span_row(&self, l: usize, r: usize) -> Option<&[f64]> {
        Some(self.row(l, r))
    }
}

impl<T: SpanScores + ?Sized> SpanScores for &T {
    fn sentence_len(&self) -> usize {
        (**self).sentence_len()
    }

    fn span_score(&self, l: usize, r: usize, h: usize) -> f64 {
        (**self).span_score(l, r, h)
    }

    fn span_row(&self, l: usize, r: usize) -> Option<&[f64]> {
        (**self).span_row(l, r)
    }
}

/// First-order arc scores `s_arc(head, dep)`, `head` in `0..=n`, `dep` in `1..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcScoreTable {
    n: usize,
    values: Vec<f64>,
}

impl ArcScoreTable {
    pub fn new(n: usize, default: f64) -> Self {
        let mut values = vec![NEG_SENTINEL; (n + 1) * (n + 1)];
        for h in 0..=n {
            for d in 1..=n {
                if h != d {
                    values[h * (n + 1) + d] = default;
                }
            }
        }
        ArcScoreTable { n, values }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut table = ArcScoreTable::new(n, 0.0);
        for h in 0..=n {
            for d in 1..=n {
                if h != d {
                    table.values[h * (n + 1) + d] = f(h, d);
                }
            }
        }
        table
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, head: usize, dep: usize) -> f64 {
        self.values[head * (self.n + 1) + dep]
    }

    pub fn set(&mut self, head: usize, dep: usize, score: f64) -> Result<(), ScoreError> {
        if head > self.n || dep == 0 || dep > self.n || head == dep {
            return Err(ScoreError::InvalidArc { n: self.n, head, dep });
        }
        self.values[head * (self.n + 1) + dep] = score;
        Ok(())
    }
}

/// Label scores `s_label(head, dep, r)` for every possible arc.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelScoreTable {
    n: usize,
    labels: Vec<String>,
    values: Vec<f64>,
}

impl LabelScoreTable {
    pub fn new(n: usize, labels: Vec<String>) -> Result<Self, ScoreError> {
        if labels.is_empty() {
            return Err(ScoreError::EmptyLabels);
        }
        let values = vec![0.0; (n + 1) * (n + 1) * labels.len()];
        Ok(LabelScoreTable { n, labels, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    fn offset(&self, head: usize, dep: usize) -> usize {
        (head * (self.n + 1) + dep) * self.labels.len()
    }

    /// Scores of all labels for the arc `head -> dep`, in vocabulary order.
    pub fn scores(&self, head: usize, dep: usize) -> &[f64] {
        let o = self.offset(head, dep);
        &self.values[o..o + self.labels.len()]
    }

    pub fn scores_mut(&mut self, head: usize, dep: usize) -> &mut [f64] {
        let o = self.offset(head, dep);
        let k = self.labels.len();
        &mut self.values[o..o + k]
    }

    /// Highest-scoring label id; ties go to the smallest id.
    pub fn best(&self, head: usize, dep: usize) -> usize {
        let mut best = 0;
        for (i, &v) in self.scores(head, dep).iter().enumerate() {
            if v > self.scores(head, dep)[best] {
                best = i;
            }
        }
        best
    }
}
