use std::hash::Hasher;

use fnv::FnvHasher;

use crate::treebank::Sentence;

pub const DEFAULT_HASH_BITS: u32 = 22;

/// Feature templates. The discriminant is hashed into every feature id, so
/// existing values must never be renumbered.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Template {
    // span templates
    SpanLen = 1,
    HeadForm = 2,
    HeadFormLen = 3,
    HeadFormSides = 4,
    HeadFormRoot = 5,
    HeadFormOuterLeft = 6,
    HeadFormOuterRight = 7,
    HeadFormInner = 8,
    FirstLast = 9,
    HeadFormNeighbours = 10,
    HeadPos = 11,
    HeadPosLen = 12,
    HeadPosSides = 13,
    HeadPosRoot = 14,
    HeadPosBoundary = 15,
    HeadPosOuter = 16,
    // arc templates, used for labels
    ArcBias = 32,
    ArcHeadForm = 33,
    ArcDepForm = 34,
    ArcForms = 35,
    ArcDirDist = 36,
    ArcDepFormDir = 37,
    ArcHeadPos = 38,
    ArcDepPos = 39,
    ArcPosDir = 40,
    ArcPosDist = 41,
    // arc feature conjoined with a label id
    Label = 64,
}

/// Maps template conjunctions to ids in a `2^bits` space using 64-bit
/// FNV-1a over little-endian words, so ids agree across platforms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureHasher {
    bits: u32,
}

impl FeatureHasher {
    pub fn new(bits: u32) -> Self {
        assert!((1..=63).contains(&bits), "hash bits must be in 1..=63");
        FeatureHasher { bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn atom(s: &str) -> u64 {
        let mut h = FnvHasher::default();
        h.write(s.as_bytes());
        h.finish()
    }

    fn raw(template: Template, parts: &[u64]) -> u64 {
        let mut h = FnvHasher::default();
        h.write(&(template as u64).to_le_bytes());
        for p in parts {
            h.write(&p.to_le_bytes());
        }
        h.finish()
    }

    pub fn id(&self, template: Template, parts: &[u64]) -> u64 {
        Self::raw(template, parts) & ((1u64 << self.bits) - 1)
    }

    /// Id of an arc feature conjoined with a label.
    pub fn label_id(&self, arc_feature: u64, label: usize) -> u64 {
        self.id(Template::Label, &[arc_feature, label as u64])
    }
}

/// Distances and lengths: exact up to 7, then coarser.
pub fn bucket(x: usize) -> u64 {
    match x {
        0..=7 => x as u64,
        8..=10 => 8,
        11..=15 => 9,
        16..=20 => 10,
        21..=30 => 11,
        _ => 12,
    }
}

/// Hashed form and UPOS of positions `0..=n+1`; `0` and `n + 1` are the
/// sentence boundary markers.
#[derive(Clone, Debug)]
pub struct SentenceAtoms {
    pub form: Vec<u64>,
    pub pos: Vec<u64>,
}

impl SentenceAtoms {
    pub fn new(sent: &Sentence) -> Self {
        let mut form = Vec::with_capacity(sent.len() + 2);
        let mut pos = Vec::with_capacity(sent.len() + 2);
        form.push(FeatureHasher::atom("<bos>"));
        pos.push(FeatureHasher::atom("<bos>"));
        for t in &sent.tokens {
            form.push(FeatureHasher::atom(&t.form));
            pos.push(FeatureHasher::atom(&t.upos));
        }
        form.push(FeatureHasher::atom("<eos>"));
        pos.push(FeatureHasher::atom("<eos>"));
        SentenceAtoms { form, pos }
    }

    pub fn n(&self) -> usize {
        self.form.len() - 2
    }
}
