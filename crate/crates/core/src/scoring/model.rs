use std::collections::BTreeMap;
use std::path::Path;

use fnv::FnvHashMap;
use serde::{Deserialize, Serialize};

use super::features::{bucket, FeatureHasher, SentenceAtoms, Template};
use super::{LabelScoreTable, ScoreError, SpanScoreTable};
use crate::par;
use crate::treebank::{DepTree, Sentence};

const MODEL_FORMAT: &str = "headspan-model";
const MODEL_VERSION: u32 = 1;

/// Appends the hashed features of headed span `(l, r, h)` to `out`.
pub fn featurize_span(
    hasher: &FeatureHasher,
    use_pos: bool,
    atoms: &SentenceAtoms,
    l: usize,
    r: usize,
    h: usize,
    out: &mut Vec<u64>,
) {
    use Template::*;
    let n = atoms.n();
    let form = &atoms.form;
    let pos = &atoms.pos;
    let len = bucket(r - l);
    let left = bucket(h - l - 1);
    let right = bucket(r - h);
    let root = u64::from(l == 0 && r == n);
    let hf = form[h];

    out.push(hasher.id(SpanLen, &[len]));
    out.push(hasher.id(HeadForm, &[hf]));
    out.push(hasher.id(HeadFormLen, &[hf, len]));
    out.push(hasher.id(HeadFormSides, &[hf, left, right]));
    out.push(hasher.id(HeadFormRoot, &[hf, root]));
    out.push(hasher.id(HeadFormOuterLeft, &[hf, form[l]]));
    out.push(hasher.id(HeadFormOuterRight, &[hf, form[r + 1]]));
    out.push(hasher.id(HeadFormInner, &[hf, form[l + 1], form[r]]));
    out.push(hasher.id(FirstLast, &[form[l + 1], form[r]]));
    out.push(hasher.id(HeadFormNeighbours, &[hf, form[h - 1], form[h + 1], left, right]));
    if use_pos {
        let hp = pos[h];
        out.push(hasher.id(HeadPos, &[hp]));
        out.push(hasher.id(HeadPosLen, &[hp, len]));
        out.push(hasher.id(HeadPosSides, &[hp, left, right]));
        out.push(hasher.id(HeadPosRoot, &[hp, root]));
        out.push(hasher.id(HeadPosBoundary, &[hp, pos[l], pos[l + 1], pos[r], pos[r + 1]]));
        out.push(hasher.id(HeadPosOuter, &[hp, pos[l], pos[r + 1]]));
    }
}

/// Label-independent features of the arc `head -> dep` (`head = 0` is ROOT).
pub fn featurize_arc(
    hasher: &FeatureHasher,
    use_pos: bool,
    atoms: &SentenceAtoms,
    head: usize,
    dep: usize,
    out: &mut Vec<u64>,
) {
    use Template::*;
    let root = FeatureHasher::atom("<root>");
    let (hf, hp) = if head == 0 {
        (root, root)
    } else {
        (atoms.form[head], atoms.pos[head])
    };
    let (df, dp) = (atoms.form[dep], atoms.pos[dep]);
    let dir = u64::from(head < dep);
    let dist = bucket(head.abs_diff(dep));
    out.push(hasher.id(ArcBias, &[]));
    out.push(hasher.id(ArcHeadForm, &[hf]));
    out.push(hasher.id(ArcDepForm, &[df]));
    out.push(hasher.id(ArcForms, &[hf, df]));
    out.push(hasher.id(ArcDirDist, &[dir, dist]));
    out.push(hasher.id(ArcDepFormDir, &[df, dir]));
    if use_pos {
        out.push(hasher.id(ArcHeadPos, &[hp]));
        out.push(hasher.id(ArcDepPos, &[dp]));
        out.push(hasher.id(ArcPosDir, &[hp, dp, dir]));
        out.push(hasher.id(ArcPosDist, &[hp, dp, dir, dist]));
    }
}

/// Sparse linear scorer: span weights and label weights keyed by hashed
/// feature id. Label features are arc features conjoined with the label id.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureScorer {
    hasher: FeatureHasher,
    use_pos: bool,
    labels: Vec<String>,
    span_weights: FnvHashMap<u64, f64>,
    label_weights: FnvHashMap<u64, f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    hash_bits: u32,
    use_pos: bool,
    labels: Vec<String>,
    span_weights: BTreeMap<u64, f64>,
    label_weights: BTreeMap<u64, f64>,
}

impl FeatureScorer {
    pub fn new(hash_bits: u32, use_pos: bool, labels: Vec<String>) -> Self {
        FeatureScorer {
            hasher: FeatureHasher::new(hash_bits),
            use_pos,
            labels,
            span_weights: FnvHashMap::default(),
            label_weights: FnvHashMap::default(),
        }
    }

    pub fn hasher(&self) -> &FeatureHasher {
        &self.hasher
    }

    pub fn use_pos(&self) -> bool {
        self.use_pos
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_id(&self, label: &str) -> Result<usize, ScoreError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| ScoreError::UnknownLabel(label.to_string()))
    }

    pub fn span_weight(&self, id: u64) -> f64 {
        self.span_weights.get(&id).copied().unwrap_or(0.0)
    }

    pub fn label_weight(&self, id: u64) -> f64 {
        self.label_weights.get(&id).copied().unwrap_or(0.0)
    }

    pub fn set_span_weight(&mut self, id: u64, w: f64) {
        self.span_weights.insert(id, w);
    }

    pub fn set_label_weight(&mut self, id: u64, w: f64) {
        self.label_weights.insert(id, w);
    }

    pub fn add_span_weight(&mut self, id: u64, delta: f64) {
        *self.span_weights.entry(id).or_insert(0.0) += delta;
    }

    pub fn add_label_weight(&mut self, id: u64, delta: f64) {
        *self.label_weights.entry(id).or_insert(0.0) += delta;
    }

    /// Multiplies every span weight by `factor` (L2 shrinkage).
    pub fn scale_span_weights(&mut self, factor: f64) {
        self.span_weights.values_mut().for_each(|w| *w *= factor);
    }

    pub fn scale_label_weights(&mut self, factor: f64) {
        self.label_weights.values_mut().for_each(|w| *w *= factor);
    }

    pub fn span_weights(&self) -> &FnvHashMap<u64, f64> {
        &self.span_weights
    }

    pub fn label_weights(&self) -> &FnvHashMap<u64, f64> {
        &self.label_weights
    }

    pub fn span_dot(&self, features: &[u64]) -> f64 {
        features.iter().map(|f| self.span_weight(*f)).sum()
    }

    pub fn atoms(&self, sent: &Sentence) -> SentenceAtoms {
        SentenceAtoms::new(sent)
    }

    pub fn span_features(&self, atoms: &SentenceAtoms, l: usize, r: usize, h: usize) -> Vec<u64> {
        let mut out = Vec::with_capacity(16);
        featurize_span(&self.hasher, self.use_pos, atoms, l, r, h, &mut out);
        out
    }

    pub fn arc_features(&self, atoms: &SentenceAtoms, head: usize, dep: usize) -> Vec<u64> {
        let mut out = Vec::with_capacity(10);
        featurize_arc(&self.hasher, self.use_pos, atoms, head, dep, &mut out);
        out
    }

    /// Scores of every label for one arc, given its arc features.
    pub fn label_scores(&self, arc_features: &[u64]) -> Vec<f64> {
        (0..self.labels.len())
            .map(|r| {
                arc_features
                    .iter()
                    .map(|&f| self.label_weight(self.hasher.label_id(f, r)))
                    .sum()
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            hash_bits: self.hasher.bits(),
            use_pos: self.use_pos,
            labels: self.labels.clone(),
            span_weights: self
                .span_weights
                .iter()
                .filter(|(_, w)| **w != 0.0)
                .map(|(k, v)| (*k, *v))
                .collect(),
            label_weights: self
                .label_weights
                .iter()
                .filter(|(_, w)| **w != 0.0)
                .map(|(k, v)| (*k, *v))
                .collect(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScoreError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| ScoreError::Model(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(ScoreError::Model(format!(
                "unsupported format {:?} version {}",
                file.format, file.version
            )));
        }
        if !(1..=63).contains(&file.hash_bits) {
            return Err(ScoreError::Model(format!("hash_bits {} out of range", file.hash_bits)));
        }
        let mut scorer = FeatureScorer::new(file.hash_bits, file.use_pos, file.labels);
        scorer.span_weights = file.span_weights.into_iter().collect();
        scorer.label_weights = file.label_weights.into_iter().collect();
        Ok(scorer)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScoreError> {
        std::fs::write(path, self.to_json()).map_err(|e| ScoreError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, ScoreError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScoreError::Io(format!("{}: {e}", path.display())))?;
        FeatureScorer::from_json(&text)
    }
}

/// Scores every valid triple of the sentence with the span weights.
pub fn score_spans(scorer: &FeatureScorer, sent: &Sentence) -> SpanScoreTable {
    let n = sent.len();
    let atoms = SentenceAtoms::new(sent);
    let blocks: Vec<Vec<f64>> = par::map_range(1..n + 1, |width| {
        let mut feats = Vec::with_capacity(16);
        let mut block = Vec::with_capacity((n + 1 - width) * width);
        for l in 0..=n - width {
            for h in l + 1..=l + width {
                feats.clear();
                featurize_span(&scorer.hasher, scorer.use_pos, &atoms, l, l + width, h, &mut feats);
                block.push(scorer.span_dot(&feats));
            }
        }
        block
    });
    let mut table = SpanScoreTable::new(n, 0.0);
    // blocks follow the table's width-major storage order
    let values = table.values_mut();
    let mut at = 0;
    for block in blocks {
        values[at..at + block.len()].copy_from_slice(&block);
        at += block.len();
    }
    table
}

/// Label scores for every arc `head -> dep` of the sentence.
pub fn score_labels(scorer: &FeatureScorer, sent: &Sentence) -> Result<LabelScoreTable, ScoreError> {
    let n = sent.len();
    let mut table = LabelScoreTable::new(n, scorer.labels.clone())?;
    let atoms = SentenceAtoms::new(sent);
    for head in 0..=n {
        for dep in 1..=n {
            if head == dep {
                continue;
            }
            let feats = scorer.arc_features(&atoms, head, dep);
            table.scores_mut(head, dep).copy_from_slice(&scorer.label_scores(&feats));
        }
    }
    Ok(table)
}

/// Relabels every arc of `tree` with its best-scoring label.
pub fn predict_labels(table: &LabelScoreTable, tree: &DepTree) -> DepTree {
    let labels = (1..=tree.len())
        .map(|d| table.labels()[table.best(tree.head_of(d), d)].clone())
        .collect();
    tree.with_labels(labels).expect("same heads")
}
