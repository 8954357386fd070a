//! Training the sparse scorer: structured hinge loss with Hamming-cost
//! decoding, the local span-selection loss, and label cross-entropy. All
//! updates are plain SGD with optional L2 shrinkage.

use std::collections::BTreeSet;
use std::str::FromStr;

use fnv::FnvHashMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::scoring::{featurize_span, score_labels, score_spans, predict_labels, FeatureScorer, ScoreError, SentenceAtoms, DEFAULT_HASH_BITS};
use crate::spanchart::{cost_augmented_parse, parse_spans, ChartError, ParseResult};
use crate::treebank::{extract_headed_spans, DepTree, Sentence, SpanSet, TreebankError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("sentence {sent_id}: {source}")]
    Sentence { sent_id: String, source: Box<TrainError> },
    #[error(transparent)]
    Tree(#[from] TreebankError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    MaxMargin,
    SpanSelection,
}

impl FromStr for LossKind {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, TrainError> {
        match s {
            "max-margin" | "max_margin" => Ok(LossKind::MaxMargin),
            "span-selection" | "span_selection" => Ok(LossKind::SpanSelection),
            other => Err(TrainError::Config(format!("unknown loss {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Weight of the Hamming term in cost-augmented decoding.
    pub cost: f64,
    pub loss_kind: LossKind,
    pub shuffle_seed: u64,
    pub l2: f64,
    pub hash_bits: u32,
    pub use_pos: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            learning_rate: 0.1,
            cost: 1.0,
            loss_kind: LossKind::MaxMargin,
            shuffle_seed: 0,
            l2: 0.0,
            hash_bits: DEFAULT_HASH_BITS,
            use_pos: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs < 1 {
            return Err(TrainError::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config("learning rate must be positive".into()));
        }
        if !(self.cost >= 0.0 && self.cost.is_finite()) {
            return Err(TrainError::Config("cost must be non-negative".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(TrainError::Config("l2 must be non-negative".into()));
        }
        if !(1..=63).contains(&self.hash_bits) {
            return Err(TrainError::Config("hash bits must be in 1..=63".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LossReport {
    pub parse_loss: f64,
    pub label_loss: f64,
    pub total: f64,
}

impl LossReport {
    pub fn new(parse_loss: f64, label_loss: f64) -> Self {
        LossReport {
            parse_loss,
            label_loss,
            total: parse_loss + label_loss,
        }
    }
}

/// Outcome of one hinge step, with the quantities the loss was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginStep {
    pub report: LossReport,
    pub gold_score: f64,
    /// `s(y') + cost * hamming(y', gold)` of the cost-augmented decode.
    pub augmented_score: f64,
    pub hamming: usize,
    pub prediction: ParseResult,
}

fn gold_spans(tree: &DepTree) -> Result<SpanSet, TrainError> {
    Ok(extract_headed_spans(tree)?)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `max(0, max_y' [s(y') + cost * hamming(y', y)] - s(y))`, followed by a
/// subgradient step when the loss is positive. The loss is computed before
/// the update.
pub fn max_margin_step(
    scorer: &mut FeatureScorer,
    sent: &Sentence,
    gold_tree: &DepTree,
    cost: f64,
    lr: f64,
    l2: f64,
) -> Result<MarginStep, TrainError> {
    let gold = gold_spans(gold_tree)?;
    let table = score_spans(scorer, sent);
    let prediction = cost_augmented_parse(&table, &gold, cost)?;
    let gold_score = table.total(gold.iter());
    let hamming = prediction.spans.mismatches(&gold);
    // a zero-cost winner is the gold tree itself; skip the float comparison
    let loss = if hamming == 0 { 0.0 } else { (prediction.score - gold_score).max(0.0) };
    if loss > 0.0 {
        if l2 > 0.0 {
            scorer.scale_span_weights(1.0 - lr * l2);
        }
        let atoms = SentenceAtoms::new(sent);
        let mut feats = Vec::new();
        for (pred, want) in prediction.spans.iter().zip(gold.iter()) {
            if pred == want {
                continue;
            }
            feats.clear();
            featurize_span(scorer.hasher(), scorer.use_pos(), &atoms, pred.l, pred.r, pred.h, &mut feats);
            for &f in &feats {
                scorer.add_span_weight(f, -lr);
            }
            feats.clear();
            featurize_span(scorer.hasher(), scorer.use_pos(), &atoms, want.l, want.r, want.h, &mut feats);
            for &f in &feats {
                scorer.add_span_weight(f, lr);
            }
        }
    }
    Ok(MarginStep {
        report: LossReport::new(loss, 0.0),
        gold_score,
        augmented_score: prediction.score,
        hamming,
        prediction,
    })
}

/// Number of candidate spans `(p, q)` with `p < k <= q` for word `k`.
pub fn candidate_count(n: usize, k: usize) -> usize {
    k * (n - k + 1)
}

/// Local loss and its gradient with respect to the span weights:
/// per word, `-log softmax` of its gold span among all spans it could head.
pub fn span_selection_gradient(
    scorer: &FeatureScorer,
    sent: &Sentence,
    gold_tree: &DepTree,
) -> Result<(f64, FnvHashMap<u64, f64>), TrainError> {
    let gold = gold_spans(gold_tree)?;
    let n = sent.len();
    let table = score_spans(scorer, sent);
    let atoms = SentenceAtoms::new(sent);
    let mut grad: FnvHashMap<u64, f64> = FnvHashMap::default();
    let mut loss = 0.0;
    let mut feats = Vec::new();
    for k in 1..=n {
        let cands: Vec<(usize, usize)> = (0..k).flat_map(|p| (k..=n).map(move |q| (p, q))).collect();
        let scores: Vec<f64> = cands.iter().map(|&(p, q)| table.get(p, q, k)).collect();
        let z = log_sum_exp(&scores);
        let g = gold.of(k);
        loss += z - table.get(g.l, g.r, k);
        for (&(p, q), &s) in cands.iter().zip(&scores) {
            let mut coef = (s - z).exp();
            if (p, q) == (g.l, g.r) {
                coef -= 1.0;
            }
            if coef == 0.0 {
                continue;
            }
            feats.clear();
            featurize_span(scorer.hasher(), scorer.use_pos(), &atoms, p, q, k, &mut feats);
            for &f in &feats {
                *grad.entry(f).or_insert(0.0) += coef;
            }
        }
    }
    Ok((loss, grad))
}

pub fn span_selection_loss(scorer: &FeatureScorer, sent: &Sentence, gold_tree: &DepTree) -> Result<f64, TrainError> {
    let gold = gold_spans(gold_tree)?;
    let n = sent.len();
    let table = score_spans(scorer, sent);
    let mut loss = 0.0;
    for k in 1..=n {
        let scores: Vec<f64> = (0..k)
            .flat_map(|p| (k..=n).map(move |q| (p, q)))
            .map(|(p, q)| table.get(p, q, k))
            .collect();
        let g = gold.of(k);
        loss += log_sum_exp(&scores) - table.get(g.l, g.r, k);
    }
    Ok(loss)
}

pub fn span_selection_loss_step(
    scorer: &mut FeatureScorer,
    sent: &Sentence,
    gold_tree: &DepTree,
    lr: f64,
    l2: f64,
) -> Result<LossReport, TrainError> {
    let (loss, grad) = span_selection_gradient(scorer, sent, gold_tree)?;
    if l2 > 0.0 {
        scorer.scale_span_weights(1.0 - lr * l2);
    }
    for (f, g) in grad {
        scorer.add_span_weight(f, -lr * g);
    }
    Ok(LossReport::new(loss, 0.0))
}

fn gold_label_ids(scorer: &FeatureScorer, tree: &DepTree) -> Result<Vec<usize>, TrainError> {
    if scorer.labels().is_empty() {
        return Err(ScoreError::EmptyLabels.into());
    }
    tree.labels()
        .iter()
        .map(|l| scorer.label_id(l).map_err(TrainError::from))
        .collect()
}

/// Cross-entropy of the gold label of every gold arc, and its gradient
/// with respect to the label weights.
pub fn label_gradient(
    scorer: &FeatureScorer,
    sent: &Sentence,
    gold_tree: &DepTree,
) -> Result<(f64, FnvHashMap<u64, f64>), TrainError> {
    let gold = gold_label_ids(scorer, gold_tree)?;
    let atoms = SentenceAtoms::new(sent);
    let mut grad: FnvHashMap<u64, f64> = FnvHashMap::default();
    let mut loss = 0.0;
    for dep in 1..=sent.len() {
        let feats = scorer.arc_features(&atoms, gold_tree.head_of(dep), dep);
        let scores = scorer.label_scores(&feats);
        let z = log_sum_exp(&scores);
        let want = gold[dep - 1];
        loss += z - scores[want];
        for (r, &s) in scores.iter().enumerate() {
            let mut coef = (s - z).exp();
            if r == want {
                coef -= 1.0;
            }
            if coef == 0.0 {
                continue;
            }
            for &f in &feats {
                *grad.entry(scorer.hasher().label_id(f, r)).or_insert(0.0) += coef;
            }
        }
    }
    Ok((loss, grad))
}

pub fn label_loss(scorer: &FeatureScorer, sent: &Sentence, gold_tree: &DepTree) -> Result<f64, TrainError> {
    let gold = gold_label_ids(scorer, gold_tree)?;
    let atoms = SentenceAtoms::new(sent);
    let mut loss = 0.0;
    for dep in 1..=sent.len() {
        let scores = scorer.label_scores(&scorer.arc_features(&atoms, gold_tree.head_of(dep), dep));
        loss += log_sum_exp(&scores) - scores[gold[dep - 1]];
    }
    Ok(loss)
}

pub fn label_step(
    scorer: &mut FeatureScorer,
    sent: &Sentence,
    gold_tree: &DepTree,
    lr: f64,
    l2: f64,
) -> Result<LossReport, TrainError> {
    let (loss, grad) = label_gradient(scorer, sent, gold_tree)?;
    if l2 > 0.0 {
        scorer.scale_label_weights(1.0 - lr * l2);
    }
    for (f, g) in grad {
        scorer.add_label_weight(f, -lr * g);
    }
    Ok(LossReport::new(0.0, loss))
}

/// Unlabeled decode followed by label prediction (labels are `_` when the
/// scorer has no label vocabulary).
pub fn decode(scorer: &FeatureScorer, sent: &Sentence) -> Result<DepTree, TrainError> {
    let parsed = parse_spans(&score_spans(scorer, sent))?;
    if scorer.labels().is_empty() {
        return Ok(parsed.tree);
    }
    Ok(predict_labels(&score_labels(scorer, sent)?, &parsed.tree))
}

/// Mean per-sentence losses of one epoch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub sentences: usize,
    pub parse_loss: f64,
    pub label_loss: f64,
    pub total: f64,
    /// Largest per-sentence parse loss seen during the epoch.
    pub max_parse_loss: f64,
}

/// Passed to the observer after every training step.
#[derive(Clone, Debug)]
pub struct StepEvent<'a> {
    pub epoch: usize,
    pub index: usize,
    pub sent_id: &'a str,
    pub report: LossReport,
    /// Present for the max-margin loss.
    pub margin: Option<&'a MarginStep>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub scorer: FeatureScorer,
    pub epochs: Vec<EpochReport>,
}

/// Sorted set of labels used in the corpus.
pub fn label_vocabulary(corpus: &[(Sentence, DepTree)]) -> Vec<String> {
    corpus
        .iter()
        .flat_map(|(_, t)| t.labels().iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

pub fn train(corpus: &[(Sentence, DepTree)], config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    train_with(corpus, config, |_| {})
}

/// Epoch loop over a projective corpus, shuffled deterministically from
/// `config.shuffle_seed`. Each step runs the parse loss then the label loss.
pub fn train_with<F>(
    corpus: &[(Sentence, DepTree)],
    config: &TrainConfig,
    mut observer: F,
) -> Result<TrainOutcome, TrainError>
where
    F: FnMut(&StepEvent<'_>),
{
    config.validate()?;
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    for (sent, tree) in corpus {
        extract_headed_spans(tree).map_err(|e| TrainError::Sentence {
            sent_id: sent.id.clone(),
            source: Box::new(e.into()),
        })?;
    }
    let mut scorer = FeatureScorer::new(config.hash_bits, config.use_pos, label_vocabulary(corpus));
    let mut rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    let (lr, l2) = (config.learning_rate, config.l2);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let (mut parse_sum, mut label_sum, mut max_parse) = (0.0, 0.0, 0.0f64);
        for &i in &order {
            let (sent, tree) = &corpus[i];
            let wrap = |e: TrainError| TrainError::Sentence {
                sent_id: sent.id.clone(),
                source: Box::new(e),
            };
            let (parse, margin) = match config.loss_kind {
                LossKind::MaxMargin => {
                    let step = max_margin_step(&mut scorer, sent, tree, config.cost, lr, l2).map_err(wrap)?;
                    (step.report.parse_loss, Some(step))
                }
                LossKind::SpanSelection => {
                    let r = span_selection_loss_step(&mut scorer, sent, tree, lr, l2).map_err(wrap)?;
                    (r.parse_loss, None)
                }
            };
            let label = label_step(&mut scorer, sent, tree, lr, l2).map_err(wrap)?.label_loss;
            let report = LossReport::new(parse, label);
            observer(&StepEvent {
                epoch,
                index: i,
                sent_id: &sent.id,
                report,
                margin: margin.as_ref(),
            });
            parse_sum += parse;
            label_sum += label;
            max_parse = max_parse.max(parse);
        }
        let m = corpus.len() as f64;
        let report = EpochReport {
            epoch,
            sentences: corpus.len(),
            parse_loss: parse_sum / m,
            label_loss: label_sum / m,
            total: (parse_sum + label_sum) / m,
            max_parse_loss: max_parse,
        };
        log::info!(
            "epoch {epoch}: parse {:.4} label {:.4} total {:.4}",
            report.parse_loss,
            report.label_loss,
            report.total
        );
        epochs.push(report);
    }
    Ok(TrainOutcome { scorer, epochs })
}
