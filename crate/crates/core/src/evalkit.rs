//! Attachment scores, headed-span F1, and bucketed error analysis.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use crate::par;
use crate::treebank::{extract_headed_spans, DepTree, Sentence, SpanSet, Token};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("sentence {sent_id}: gold has {gold} tokens, prediction has {pred}")]
    LengthMismatch { sent_id: String, gold: usize, pred: usize },
    #[error("span sets cover {gold} and {pred} words")]
    SpanCount { gold: usize, pred: usize },
    #[error("unknown bucket kind {0:?}")]
    UnknownBucket(String),
    #[error("unknown punctuation policy {0:?}")]
    UnknownPolicy(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PunctPolicy {
    /// Skip tokens tagged `PUNCT`; untagged tokens count as punctuation when
    /// every character of the form is Unicode punctuation.
    Upos,
    None,
}

impl FromStr for PunctPolicy {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        match s {
            "upos" | "upos_punct" => Ok(PunctPolicy::Upos),
            "none" => Ok(PunctPolicy::None),
            other => Err(EvalError::UnknownPolicy(other.into())),
        }
    }
}

fn punct_form() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\p{P}+$").unwrap())
}

pub fn is_punct(token: &Token, policy: PunctPolicy) -> bool {
    match policy {
        PunctPolicy::None => false,
        PunctPolicy::Upos if token.upos.is_empty() || token.upos == "_" => punct_form().is_match(&token.form),
        PunctPolicy::Upos => token.upos == "PUNCT",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BucketKind {
    SentenceLength,
    RootDistance,
    DependencyLength,
    SpanLength,
}

impl BucketKind {
    pub const ALL: [BucketKind; 4] = [
        BucketKind::SentenceLength,
        BucketKind::RootDistance,
        BucketKind::DependencyLength,
        BucketKind::SpanLength,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BucketKind::SentenceLength => "sentence_length",
            BucketKind::RootDistance => "root_distance",
            BucketKind::DependencyLength => "dependency_length",
            BucketKind::SpanLength => "span_length",
        }
    }

    pub fn labels(&self) -> &'static [&'static str] {
        match self {
            BucketKind::SentenceLength => &["1-9", "10-19", "20-29", "30-39", ">=40"],
            BucketKind::RootDistance => &["ROOT", "1", "2", "3", "4", "5", "6", ">=7"],
            BucketKind::DependencyLength => &["1", "2", "3", "4", "5", "6", "7", ">=8"],
            BucketKind::SpanLength => &["1-10", "11-20", "21-30", "31-40", ">=41"],
        }
    }

    /// Bucket index of a sentence length, a depth below the root word, a
    /// head-dependent distance, or a span width respectively.
    pub fn bucket_of(&self, value: usize) -> usize {
        match self {
            BucketKind::SentenceLength => (value / 10).min(4),
            BucketKind::RootDistance => value.min(7),
            BucketKind::DependencyLength => value.clamp(1, 8) - 1,
            BucketKind::SpanLength => ((value.max(1) - 1) / 10).min(4),
        }
    }
}

impl FromStr for BucketKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        BucketKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| EvalError::UnknownBucket(s.into()))
    }
}

/// One sentence with its gold and predicted trees.
#[derive(Clone, Copy, Debug)]
pub struct Pair<'a> {
    pub sentence: &'a Sentence,
    pub gold: &'a DepTree,
    pub pred: &'a DepTree,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BucketRow {
    pub kind: BucketKind,
    pub bucket: String,
    /// Gold items in the bucket.
    pub gold: usize,
    /// Predicted items in the bucket.
    pub predicted: usize,
    pub correct_gold: usize,
    pub correct_predicted: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub uas: f64,
    pub las: f64,
    pub span_f1: f64,
    pub sentences: usize,
    /// Tokens scored for UAS/LAS, after punctuation filtering.
    pub tokens: usize,
    /// Sentences whose gold and predicted trees are both projective.
    pub span_sentences: usize,
    pub spans: usize,
    pub punct: PunctPolicy,
    pub buckets: Vec<BucketRow>,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Percentage of identical `(l, r, h)` triples. Both sets have one span per
/// word, so precision, recall and F1 coincide.
pub fn span_f1(gold: &SpanSet, pred: &SpanSet) -> Result<f64, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::SpanCount {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let matched = gold.iter().filter(|s| pred.contains(s)).count();
    Ok(pct(matched, gold.len()))
}

#[derive(Clone, Debug, Default)]
struct Counts {
    sentences: usize,
    tokens: usize,
    heads: usize,
    labeled: usize,
    span_sentences: usize,
    spans: usize,
    span_matches: usize,
    // per bucket: gold, predicted, correct_gold, correct_predicted
    buckets: Vec<[usize; 4]>,
}

impl Counts {
    fn merge(mut self, other: Counts) -> Counts {
        self.sentences += other.sentences;
        self.tokens += other.tokens;
        self.heads += other.heads;
        self.labeled += other.labeled;
        self.span_sentences += other.span_sentences;
        self.spans += other.spans;
        self.span_matches += other.span_matches;
        if self.buckets.len() < other.buckets.len() {
            self.buckets.resize(other.buckets.len(), [0; 4]);
        }
        for (a, b) in self.buckets.iter_mut().zip(other.buckets) {
            for i in 0..4 {
                a[i] += b[i];
            }
        }
        self
    }
}

fn check_pair(p: &Pair<'_>) -> Result<(), EvalError> {
    let n = p.sentence.len();
    if p.gold.len() != n || p.pred.len() != n {
        return Err(EvalError::LengthMismatch {
            sent_id: p.sentence.id.clone(),
            gold: p.gold.len(),
            pred: p.pred.len(),
        });
    }
    Ok(())
}

fn count_sentence(p: &Pair<'_>, policy: PunctPolicy, kind: Option<BucketKind>) -> Counts {
    let n = p.sentence.len();
    let mut c = Counts {
        sentences: 1,
        buckets: vec![[0; 4]; kind.map_or(0, |k| k.labels().len())],
        ..Counts::default()
    };
    let scored: Vec<bool> = p.sentence.tokens.iter().map(|t| !is_punct(t, policy)).collect();
    for d in 1..=n {
        if !scored[d - 1] {
            continue;
        }
        c.tokens += 1;
        if p.gold.head_of(d) == p.pred.head_of(d) {
            c.heads += 1;
            if p.gold.label_of(d) == p.pred.label_of(d) {
                c.labeled += 1;
            }
        }
    }
    let spans = match (extract_headed_spans(p.gold), extract_headed_spans(p.pred)) {
        (Ok(g), Ok(q)) => Some((g, q)),
        _ => None,
    };
    if let Some((g, q)) = &spans {
        c.span_sentences = 1;
        c.spans = n;
        c.span_matches = g.iter().filter(|s| q.contains(s)).count();
    }

    let Some(kind) = kind else { return c };
    let mut add = |gold_b: usize, pred_b: usize, correct: bool| {
        c.buckets[gold_b][0] += 1;
        c.buckets[pred_b][1] += 1;
        if correct {
            c.buckets[gold_b][2] += 1;
            c.buckets[pred_b][3] += 1;
        }
    };
    match kind {
        BucketKind::SentenceLength => {
            let b = kind.bucket_of(n);
            for d in (1..=n).filter(|&d| scored[d - 1]) {
                add(b, b, p.gold.head_of(d) == p.pred.head_of(d));
            }
        }
        BucketKind::RootDistance => {
            let (gd, pd) = (p.gold.depths(), p.pred.depths());
            for d in (1..=n).filter(|&d| scored[d - 1]) {
                add(
                    kind.bucket_of(gd[d - 1]),
                    kind.bucket_of(pd[d - 1]),
                    p.gold.head_of(d) == p.pred.head_of(d),
                );
            }
        }
        BucketKind::DependencyLength => {
            for d in (1..=n).filter(|&d| scored[d - 1]) {
                add(
                    kind.bucket_of(p.gold.head_of(d).abs_diff(d)),
                    kind.bucket_of(p.pred.head_of(d).abs_diff(d)),
                    p.gold.head_of(d) == p.pred.head_of(d),
                );
            }
        }
        BucketKind::SpanLength => {
            if let Some((g, q)) = &spans {
                for (gs, qs) in g.iter().zip(q.iter()) {
                    let gb = kind.bucket_of(gs.width());
                    let qb = kind.bucket_of(qs.width());
                    c.buckets[gb][0] += 1;
                    c.buckets[qb][1] += 1;
                    if q.contains(gs) {
                        c.buckets[gb][2] += 1;
                    }
                    if g.contains(qs) {
                        c.buckets[qb][3] += 1;
                    }
                }
            }
        }
    }
    c
}

fn tally(pairs: &[Pair<'_>], policy: PunctPolicy, kinds: &[BucketKind]) -> Result<EvalReport, EvalError> {
    for p in pairs {
        check_pair(p)?;
    }
    let mut rows = Vec::new();
    let mut overall: Option<Counts> = None;
    let kinds: Vec<Option<BucketKind>> = if kinds.is_empty() {
        vec![None]
    } else {
        kinds.iter().copied().map(Some).collect()
    };
    for kind in kinds {
        let total = par::map(pairs, |p| count_sentence(p, policy, kind))
            .into_iter()
            .fold(Counts::default(), Counts::merge);
        if let Some(kind) = kind {
            for (label, b) in kind.labels().iter().zip(&total.buckets) {
                let precision = pct(b[3], b[1]);
                let recall = pct(b[2], b[0]);
                rows.push(BucketRow {
                    kind,
                    bucket: label.to_string(),
                    gold: b[0],
                    predicted: b[1],
                    correct_gold: b[2],
                    correct_predicted: b[3],
                    precision,
                    recall,
                    f1: f1(precision, recall),
                });
            }
        }
        overall.get_or_insert(total);
    }
    let c = overall.unwrap_or_default();
    Ok(EvalReport {
        uas: pct(c.heads, c.tokens),
        las: pct(c.labeled, c.tokens),
        span_f1: pct(c.span_matches, c.spans),
        sentences: c.sentences,
        tokens: c.tokens,
        span_sentences: c.span_sentences,
        spans: c.spans,
        punct: policy,
        buckets: rows,
    })
}

/// UAS, LAS and span F1 over the corpus. Span F1 only counts sentences
/// where both trees are projective.
pub fn attachment_scores(pairs: &[Pair<'_>], policy: PunctPolicy) -> Result<EvalReport, EvalError> {
    tally(pairs, policy, &[])
}

/// Overall scores plus one row per bucket of `kind`.
///
/// Sentence-length rows hold UAS (precision = recall = f1); root-distance
/// and dependency-length rows hold arc precision/recall/F1; span-length rows
/// hold headed-span precision/recall/F1.
pub fn bucketed_report(pairs: &[Pair<'_>], kind: BucketKind, policy: PunctPolicy) -> Result<EvalReport, EvalError> {
    tally(pairs, policy, &[kind])
}

/// All four bucket analyses in one report.
pub fn full_report(pairs: &[Pair<'_>], policy: PunctPolicy) -> Result<EvalReport, EvalError> {
    tally(pairs, policy, &BucketKind::ALL)
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sentences  {:>8}", self.sentences);
        let _ = writeln!(out, "tokens     {:>8}", self.tokens);
        let _ = writeln!(out, "UAS        {:>8.2}", self.uas);
        let _ = writeln!(out, "LAS        {:>8.2}", self.las);
        let _ = writeln!(out, "span F1    {:>8.2}  ({} of {} sentences)", self.span_f1, self.span_sentences, self.sentences);
        let mut last = None;
        for row in &self.buckets {
            if last != Some(row.kind) {
                let _ = writeln!(out);
                let _ = writeln!(
                    out,
                    "{:<18} {:>8} {:>8} {:>9} {:>9} {:>9}",
                    row.kind.name(),
                    "gold",
                    "pred",
                    "precision",
                    "recall",
                    "f1"
                );
                last = Some(row.kind);
            }
            let _ = writeln!(
                out,
                "{:<18} {:>8} {:>8} {:>9.2} {:>9.2} {:>9.2}",
                row.bucket, row.gold, row.predicted, row.precision, row.recall, row.f1
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,bucket,gold,predicted,correct_gold,correct_predicted,precision,recall,f1\n");
        for r in &self.buckets {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.4},{:.4},{:.4}",
                r.kind.name(),
                r.bucket,
                r.gold,
                r.predicted,
                r.correct_gold,
                r.correct_predicted,
                r.precision,
                r.recall,
                r.f1
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(heads: &[usize], labels: &[&str]) -> DepTree {
        DepTree::new(heads.to_vec(), labels.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn perfect_prediction() {
        let s = Sentence::from_words("a", &[("a", "X"), ("b", "X"), ("c", "X")]);
        let g = tree(&[2, 0, 2], &["x", "root", "y"]);
        let r = full_report(&[Pair { sentence: &s, gold: &g, pred: &g }], PunctPolicy::Upos).unwrap();
        assert_eq!((r.uas, r.las, r.span_f1), (100.0, 100.0, 100.0));
        for row in r.buckets.iter().filter(|b| b.gold > 0) {
            assert_eq!(row.f1, 100.0, "{row:?}");
        }
    }

    #[test]
    fn punct_token_is_excluded() {
        let s = Sentence::from_words("a", &[("a", "X"), ("b", "X"), ("c", "X"), (".", "PUNCT")]);
        let g = tree(&[2, 0, 2, 2], &["d", "root", "d", "p"]);
        let p = tree(&[2, 0, 2, 3], &["d", "root", "d", "p"]);
        let pair = [Pair { sentence: &s, gold: &g, pred: &p }];
        assert_eq!(attachment_scores(&pair, PunctPolicy::Upos).unwrap().uas, 100.0);
        assert_eq!(attachment_scores(&pair, PunctPolicy::None).unwrap().uas, 75.0);
    }

    #[test]
    fn form_fallback_without_upos() {
        let t = Token::new(1, "«", "_");
        assert!(is_punct(&t, PunctPolicy::Upos));
        assert!(!is_punct(&Token::new(1, "a.", "_"), PunctPolicy::Upos));
        assert!(!is_punct(&t, PunctPolicy::None));
    }

    #[test]
    fn head_and_label_errors() {
        // word 4's head is wrong, word 1's label is wrong
        let s = Sentence::from_words("a", &[("a", "X"), ("b", "X"), ("c", "X"), ("d", "X")]);
        let g = tree(&[2, 0, 2, 3], &["a", "root", "b", "c"]);
        let p = tree(&[2, 0, 2, 2], &["z", "root", "b", "c"]);
        let r = attachment_scores(&[Pair { sentence: &s, gold: &g, pred: &p }], PunctPolicy::Upos).unwrap();
        assert_eq!(r.uas, 75.0);
        assert_eq!(r.las, 50.0);
    }

    #[test]
    fn length_mismatch() {
        let s = Sentence::from_words("a", &[("a", "X"), ("b", "X")]);
        let g = tree(&[0, 1], &["r", "d"]);
        let p = tree(&[0], &["r"]);
        assert!(matches!(
            attachment_scores(&[Pair { sentence: &s, gold: &g, pred: &p }], PunctPolicy::None),
            Err(EvalError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn span_f1_edge_cases() {
        let a = extract_headed_spans(&DepTree::unlabeled(vec![0, 1]).unwrap()).unwrap();
        let b = extract_headed_spans(&DepTree::unlabeled(vec![2, 0]).unwrap()).unwrap();
        let c = extract_headed_spans(&DepTree::unlabeled(vec![0]).unwrap()).unwrap();
        assert_eq!(span_f1(&a, &a).unwrap(), 100.0);
        assert_eq!(span_f1(&a, &b).unwrap(), 0.0);
        assert!(span_f1(&a, &c).is_err());
    }

    #[test]
    fn short_sentence_bucket() {
        let s = Sentence::from_words("a", &[("a", "X"), ("b", "X"), ("c", "X"), ("d", "X"), ("e", "X")]);
        let g = DepTree::unlabeled(vec![2, 0, 2, 3, 4]).unwrap();
        let r = bucketed_report(&[Pair { sentence: &s, gold: &g, pred: &g }], BucketKind::SentenceLength, PunctPolicy::Upos)
            .unwrap();
        assert_eq!(r.buckets[0].gold, 5);
        assert!(r.buckets[1..].iter().all(|b| b.gold == 0));
    }

    #[test]
    fn bucket_edges() {
        assert_eq!(BucketKind::SentenceLength.bucket_of(9), 0);
        assert_eq!(BucketKind::SentenceLength.bucket_of(10), 1);
        assert_eq!(BucketKind::SentenceLength.bucket_of(40), 4);
        assert_eq!(BucketKind::RootDistance.bucket_of(0), 0);
        assert_eq!(BucketKind::RootDistance.bucket_of(7), 7);
        assert_eq!(BucketKind::RootDistance.bucket_of(30), 7);
        assert_eq!(BucketKind::DependencyLength.bucket_of(1), 0);
        assert_eq!(BucketKind::DependencyLength.bucket_of(8), 7);
        assert_eq!(BucketKind::SpanLength.bucket_of(10), 0);
        assert_eq!(BucketKind::SpanLength.bucket_of(11), 1);
        assert_eq!(BucketKind::SpanLength.bucket_of(40), 3);
        assert_eq!(BucketKind::SpanLength.bucket_of(41), 4);
        assert!("nope".parse::<BucketKind>().is_err());
        assert_eq!("root_distance".parse::<BucketKind>().unwrap(), BucketKind::RootDistance);
    }
}
