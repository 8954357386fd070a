//! CoNLL-U input and output, dependency trees, and the headed-span view of
//! a projective tree.
//!
//! Positions follow fencepost indexing: a sentence of `n` words has
//! boundaries `0..=n` and word `k` (1-based) occupies the interval
//! `(k - 1, k)`. A headed span `(l, r, h)` covers words `l + 1..=r` and is
//! headed by word `h`, with `l < h <= r`.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreebankError {
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("sentence {sent_id} (line {line}): {msg}")]
    BadTree {
        sent_id: String,
        line: usize,
        msg: String,
    },
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("tree is not projective: the yield of word {word} is not contiguous")]
    NonProjective { word: usize },
    #[error("invalid span set: {0}")]
    InvalidSpans(String),
}

pub type Result<T> = std::result::Result<T, TreebankError>;

/// One CoNLL-U word line. HEAD and DEPREL live in [`DepTree`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    pub deps: String,
    pub misc: String,
}

impl Token {
    pub fn new(index: usize, form: impl Into<String>, upos: impl Into<String>) -> Self {
        Token {
            index,
            form: form.into(),
            lemma: "_".into(),
            upos: upos.into(),
            xpos: "_".into(),
            feats: "_".into(),
            deps: "_".into(),
            misc: "_".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    /// Value of the `# sent_id` comment, or the 1-based block ordinal.
    pub id: String,
    /// Comment lines, without the leading `#`, in file order.
    pub comments: Vec<String>,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Builds a sentence from `(form, upos)` pairs; indices are assigned 1..n.
    pub fn from_words<S: AsRef<str>>(id: impl Into<String>, words: &[(S, S)]) -> Self {
        let tokens = words
            .iter()
            .enumerate()
            .map(|(i, (form, upos))| Token::new(i + 1, form.as_ref(), upos.as_ref()))
            .collect();
        Sentence {
            id: id.into(),
            comments: Vec::new(),
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Word `k`, 1-based.
    pub fn word(&self, k: usize) -> &Token {
        &self.tokens[k - 1]
    }
}

/// Head assignment and arc labels of one sentence.
///
/// `heads()[i]` is the head of word `i + 1`; `0` is the artificial root.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DepTree {
    head: Vec<usize>,
    label: Vec<String>,
}

impl DepTree {
    pub fn new(head: Vec<usize>, label: Vec<String>) -> Result<Self> {
        if head.len() != label.len() {
            return Err(TreebankError::InvalidTree(format!(
                "{} heads but {} labels",
                head.len(),
                label.len()
            )));
        }
        validate_heads(&head)?;
        Ok(DepTree { head, label })
    }

    /// A tree whose labels are all `_`.
    pub fn unlabeled(head: Vec<usize>) -> Result<Self> {
        let label = vec!["_".to_string(); head.len()];
        DepTree::new(head, label)
    }

    pub fn len(&self) -> usize {
        self.head.len()
    }

    pub fn is_empty(&self) -> bool {
        self.head.is_empty()
    }

    pub fn heads(&self) -> &[usize] {
        &self.head
    }

    pub fn labels(&self) -> &[String] {
        &self.label
    }

    /// Head of word `k` (1-based).
    pub fn head_of(&self, k: usize) -> usize {
        self.head[k - 1]
    }

    pub fn label_of(&self, k: usize) -> &str {
        &self.label[k - 1]
    }

    /// The word attached to the artificial root.
    pub fn root(&self) -> usize {
        self.head.iter().position(|&h| h == 0).map(|i| i + 1).unwrap()
    }

    pub fn with_labels(&self, label: Vec<String>) -> Result<Self> {
        DepTree::new(self.head.clone(), label)
    }

    /// Dependents of every position `0..=n`, in increasing order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.len() + 1];
        for (i, &h) in self.head.iter().enumerate() {
            children[h].push(i + 1);
        }
        children
    }

    /// Number of arcs between each word and the root word (the root word has depth 0).
    pub fn depths(&self) -> Vec<usize> {
        let children = self.children();
        let mut depth = vec![0; self.len()];
        let mut stack = vec![(self.root(), 0usize)];
        while let Some((w, d)) = stack.pop() {
            depth[w - 1] = d;
            for &c in &children[w] {
                stack.push((c, d + 1));
            }
        }
        depth
    }
}

fn validate_heads(head: &[usize]) -> Result<()> {
    let n = head.len();
    if n == 0 {
        return Err(TreebankError::InvalidTree("empty sentence".into()));
    }
    let mut roots = 0;
    for (i, &h) in head.iter().enumerate() {
        if h > n {
            return Err(TreebankError::InvalidTree(format!(
                "head {h} of word {} out of range 0..={n}",
                i + 1
            )));
        }
        if h == i + 1 {
            return Err(TreebankError::InvalidTree(format!("word {h} heads itself")));
        }
        if h == 0 {
            roots += 1;
        }
    }
    if roots != 1 {
        return Err(TreebankError::InvalidTree(format!(
            "expected exactly one root, found {roots}"
        )));
    }
    // 0 = unvisited, 1 = on current path, 2 = reaches root
    let mut state = vec![0u8; n + 1];
    state[0] = 2;
    let mut path = Vec::new();
    for start in 1..=n {
        let mut w = start;
        while state[w] == 0 {
            state[w] = 1;
            path.push(w);
            w = head[w - 1];
        }
        if state[w] == 1 {
            return Err(TreebankError::InvalidTree(format!("cycle through word {w}")));
        }
        for p in path.drain(..) {
            state[p] = 2;
        }
    }
    Ok(())
}

/// A word's headed span: fenceposts `l < h <= r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HeadedSpan {
    pub l: usize,
    pub r: usize,
    pub h: usize,
}

impl HeadedSpan {
    pub fn new(l: usize, r: usize, h: usize) -> Result<Self> {
        if !(l < h && h <= r) {
            return Err(TreebankError::InvalidSpans(format!(
                "({l}, {r}, {h}) violates l < h <= r"
            )));
        }
        Ok(HeadedSpan { l, r, h })
    }

    /// Number of words covered.
    pub fn width(&self) -> usize {
        self.r - self.l
    }

    pub fn bounds(&self) -> (usize, usize) {
        (self.l, self.r)
    }

    /// True when `other` lies inside `self` and covers a different interval.
    pub fn strictly_contains(&self, other: &HeadedSpan) -> bool {
        self.l <= other.l && other.r <= self.r && self.bounds() != other.bounds()
    }
}

impl fmt::Display for HeadedSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.l, self.r, self.h)
    }
}

/// Exactly one headed span per word, stored by head word.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpanSet {
    spans: Vec<HeadedSpan>,
}

impl SpanSet {
    /// Checks the span-family invariants: one span per word `1..=n`,
    /// distinct intervals, laminar, and a single `(0, n)` span.
    pub fn new(mut spans: Vec<HeadedSpan>) -> Result<Self> {
        let n = spans.len();
        if n == 0 {
            return Err(TreebankError::InvalidSpans("no spans".into()));
        }
        spans.sort_by_key(|s| s.h);
        for (i, s) in spans.iter().enumerate() {
            if s.h != i + 1 {
                return Err(TreebankError::InvalidSpans(format!(
                    "expected one span for each word 1..={n}, found head {} at slot {}",
                    s.h,
                    i + 1
                )));
            }
            if !(s.l < s.h && s.h <= s.r && s.r <= n) {
                return Err(TreebankError::InvalidSpans(format!("{s} is not a valid span for n={n}")));
            }
        }
        let mut seen = HashSet::with_capacity(n);
        for s in &spans {
            if !seen.insert(s.bounds()) {
                return Err(TreebankError::InvalidSpans(format!(
                    "interval ({}, {}) used twice",
                    s.l, s.r
                )));
            }
        }
        if !seen.contains(&(0, n)) {
            return Err(TreebankError::InvalidSpans(format!("missing root span (0, {n})")));
        }
        for (i, a) in spans.iter().enumerate() {
            for b in &spans[i + 1..] {
                let disjoint = a.r <= b.l || b.r <= a.l;
                let nested = (a.l <= b.l && b.r <= a.r) || (b.l <= a.l && a.r <= b.r);
                if !disjoint && !nested {
                    return Err(TreebankError::InvalidSpans(format!("{a} and {b} cross")));
                }
            }
        }
        Ok(SpanSet { spans })
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Span of word `k` (1-based).
    pub fn of(&self, k: usize) -> HeadedSpan {
        self.spans[k - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = &HeadedSpan> {
        self.spans.iter()
    }

    pub fn as_slice(&self) -> &[HeadedSpan] {
        &self.spans
    }

    /// Hamming distance: number of words whose span differs.
    pub fn mismatches(&self, other: &SpanSet) -> usize {
        debug_assert_eq!(self.len(), other.len());
        self.spans
            .iter()
            .zip(&other.spans)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn contains(&self, span: &HeadedSpan) -> bool {
        span.h >= 1 && span.h <= self.len() && self.spans[span.h - 1] == *span
    }
}

/// Per word, the `(min, max, size)` of its subtree yield.
fn subtree_yields(tree: &DepTree) -> Vec<(usize, usize, usize)> {
    let n = tree.len();
    let children = tree.children();
    let mut yields: Vec<(usize, usize, usize)> = (1..=n).map(|w| (w, w, 1)).collect();
    // iterative post-order from the root word
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![tree.root()];
    while let Some(w) = stack.pop() {
        order.push(w);
        stack.extend(children[w].iter().copied());
    }
    for &w in order.iter().rev() {
        let h = tree.head_of(w);
        if h != 0 {
            let (cmin, cmax, csize) = yields[w - 1];
            let y = &mut yields[h - 1];
            y.0 = y.0.min(cmin);
            y.1 = y.1.max(cmax);
            y.2 += csize;
        }
    }
    yields
}

pub fn is_projective(tree: &DepTree) -> bool {
    subtree_yields(tree)
        .iter()
        .all(|&(lo, hi, size)| hi - lo + 1 == size)
}

/// Headed span of every word, by a single post-order pass.
pub fn extract_headed_spans(tree: &DepTree) -> Result<SpanSet> {
    let mut spans = Vec::with_capacity(tree.len());
    for (i, (lo, hi, size)) in subtree_yields(tree).into_iter().enumerate() {
        if hi - lo + 1 != size {
            return Err(TreebankError::NonProjective { word: i + 1 });
        }
        spans.push(HeadedSpan {
            l: lo - 1,
            r: hi,
            h: i + 1,
        });
    }
    Ok(SpanSet { spans })
}

/// Rebuilds the tree: each word attaches to the head of the smallest span
/// strictly containing its own, and the `(0, n)` span's head attaches to ROOT.
pub fn spans_to_tree(spans: &SpanSet) -> Result<DepTree> {
    let n = spans.len();
    let mut order: Vec<HeadedSpan> = spans.spans.clone();
    // outer spans before the spans they contain
    order.sort_by(|a, b| a.l.cmp(&b.l).then(b.r.cmp(&a.r)));
    let mut head = vec![0; n];
    let mut open: Vec<HeadedSpan> = Vec::new();
    for s in order {
        while open.last().is_some_and(|top| top.r <= s.l) {
            open.pop();
        }
        match open.last() {
            Some(parent) => head[s.h - 1] = parent.h,
            None if s.bounds() == (0, n) => head[s.h - 1] = 0,
            None => {
                return Err(TreebankError::InvalidSpans(format!("{s} has no enclosing span")));
            }
        }
        open.push(s);
    }
    let tree = DepTree::unlabeled(head)
        .map_err(|e| TreebankError::InvalidSpans(format!("spans do not induce a tree: {e}")))?;
    let back = extract_headed_spans(&tree)?;
    if let Some(bad) = back.spans.iter().zip(&spans.spans).find(|(a, b)| a != b) {
        return Err(TreebankError::InvalidSpans(format!(
            "span {} is inconsistent with the induced tree, which gives {}",
            bad.1, bad.0
        )));
    }
    Ok(tree)
}

struct RawBlock {
    sentence: Sentence,
    heads: Vec<Option<usize>>,
    labels: Vec<String>,
    first_line: usize,
}

fn parse_blocks(text: &str, allow_missing_heads: bool) -> Result<Vec<RawBlock>> {
    let mut blocks = Vec::new();
    let mut current: Option<RawBlock> = None;
    let mut head_lines: Vec<usize> = Vec::new();

    let mut finish = |block: Option<RawBlock>, head_lines: &mut Vec<usize>| -> Result<()> {
        if let Some(mut block) = block {
            if !block.sentence.tokens.is_empty() {
                let n = block.sentence.tokens.len();
                for (h, &line) in block.heads.iter().zip(head_lines.iter()) {
                    if let Some(h) = h {
                        if *h > n {
                            return Err(TreebankError::Format {
                                line,
                                msg: format!("head {h} out of range 0..={n}"),
                            });
                        }
                    }
                }
                if block.sentence.id.is_empty() {
                    block.sentence.id = (blocks.len() + 1).to_string();
                }
                blocks.push(block);
            }
        }
        head_lines.clear();
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            finish(current.take(), &mut head_lines)?;
            continue;
        }
        let block = current.get_or_insert_with(|| RawBlock {
            sentence: Sentence {
                id: String::new(),
                comments: Vec::new(),
                tokens: Vec::new(),
            },
            heads: Vec::new(),
            labels: Vec::new(),
            first_line: line_no,
        });
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(rest) = comment.trim_start().strip_prefix("sent_id") {
                if let Some(v) = rest.trim_start().strip_prefix('=') {
                    block.sentence.id = v.trim().to_string();
                }
            }
            block.sentence.comments.push(comment.to_string());
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(TreebankError::Format {
                line: line_no,
                msg: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            // multiword token range or empty node
            continue;
        }
        let index: usize = cols[0].parse().map_err(|_| TreebankError::Format {
            line: line_no,
            msg: format!("invalid token index {:?}", cols[0]),
        })?;
        let expected = block.sentence.tokens.len() + 1;
        if index != expected {
            let msg = if index < expected {
                format!("duplicate token index {index}")
            } else {
                format!("token index {index} out of sequence, expected {expected}")
            };
            return Err(TreebankError::Format { line: line_no, msg });
        }
        if cols[1].is_empty() {
            return Err(TreebankError::Format {
                line: line_no,
                msg: "empty FORM".into(),
            });
        }
        let head = match cols[6] {
            "_" if allow_missing_heads => None,
            h => Some(h.parse::<usize>().map_err(|_| TreebankError::Format {
                line: line_no,
                msg: format!("non-integer head {h:?}"),
            })?),
        };
        block.sentence.tokens.push(Token {
            index,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            xpos: cols[4].to_string(),
            feats: cols[5].to_string(),
            deps: cols[8].to_string(),
            misc: cols[9].to_string(),
        });
        block.heads.push(head);
        block.labels.push(cols[7].to_string());
        head_lines.push(line_no);
    }
    finish(current.take(), &mut head_lines)?;
    Ok(blocks)
}

/// A sentence dropped by [`read_conllu_lenient`] because its HEAD column does
/// not describe a single-rooted tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Rejected {
    pub sent_id: String,
    pub error: TreebankError,
}

/// Reads every sentence, separating those whose heads do not form a valid
/// single-rooted tree. Line-level format problems are still hard errors.
pub fn read_conllu_lenient(text: &str) -> Result<(Vec<(Sentence, DepTree)>, Vec<Rejected>)> {
    let mut items = Vec::new();
    let mut rejected = Vec::new();
    for block in parse_blocks(text, false)? {
        let heads = block.heads.into_iter().map(|h| h.unwrap()).collect();
        match DepTree::new(heads, block.labels) {
            Ok(tree) => items.push((block.sentence, tree)),
            Err(e) => rejected.push(Rejected {
                error: TreebankError::BadTree {
                    sent_id: block.sentence.id.clone(),
                    line: block.first_line,
                    msg: e.to_string(),
                },
                sent_id: block.sentence.id,
            }),
        }
    }
    Ok((items, rejected))
}

pub fn read_conllu(text: &str) -> Result<Vec<(Sentence, DepTree)>> {
    let (items, rejected) = read_conllu_lenient(text)?;
    match rejected.into_iter().next() {
        Some(r) => Err(r.error),
        None => Ok(items),
    }
}

/// Reads sentences only; HEAD may be `_` (raw parser input).
pub fn read_sentences(text: &str) -> Result<Vec<Sentence>> {
    Ok(parse_blocks(text, true)?
        .into_iter()
        .map(|b| b.sentence)
        .collect())
}

pub fn write_conllu(items: &[(Sentence, DepTree)]) -> String {
    let mut out = String::new();
    for (sent, tree) in items {
        for c in &sent.comments {
            out.push('#');
            out.push_str(c);
            out.push('\n');
        }
        for (i, t) in sent.tokens.iter().enumerate() {
            let fields = [
                t.index.to_string(),
                t.form.clone(),
                t.lemma.clone(),
                t.upos.clone(),
                t.xpos.clone(),
                t.feats.clone(),
                tree.heads()[i].to_string(),
                tree.labels()[i].clone(),
                t.deps.clone(),
                t.misc.clone(),
            ];
            out.push_str(&fields.join("\t"));
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const INVENTORY_HEADS: [usize; 10] = [2, 6, 2, 5, 3, 0, 6, 7, 8, 9];

    fn inventory() -> DepTree {
        DepTree::unlabeled(INVENTORY_HEADS.to_vec()).unwrap()
    }

    fn conllu_line(i: usize, form: &str, head: &str, rel: &str) -> String {
        format!("{i}\t{form}\t_\tX\t_\t_\t{head}\t{rel}\t_\t_")
    }

    #[test]
    fn reads_two_token_block() {
        let text = format!(
            "# sent_id = a\n{}\n{}\n\n",
            conllu_line(1, "Hi", "2", "dep"),
            conllu_line(2, "there", "0", "root")
        );
        let items = read_conllu(&text).unwrap();
        assert_eq!(items.len(), 1);
        let (s, t) = &items[0];
        assert_eq!(s.id, "a");
        assert_eq!(s.len(), 2);
        assert_eq!(t.heads(), &[2, 0]);
        assert_eq!(t.labels(), &["dep".to_string(), "root".to_string()]);
    }

    #[test]
    fn rejects_non_integer_head_with_line() {
        let text = format!(
            "{}\n{}\n",
            conllu_line(1, "a", "0", "root"),
            conllu_line(2, "b", "x", "dep")
        );
        assert_eq!(
            read_conllu(&text).unwrap_err(),
            TreebankError::Format {
                line: 2,
                msg: "non-integer head \"x\"".into()
            }
        );
    }

    #[test]
    fn rejects_bad_arity_range_and_duplicates() {
        let err = read_conllu("1\ta\t_\n").unwrap_err();
        assert!(matches!(err, TreebankError::Format { line: 1, .. }));

        let text = format!("{}\n{}\n", conllu_line(1, "a", "0", "root"), conllu_line(2, "b", "7", "x"));
        assert!(matches!(read_conllu(&text).unwrap_err(), TreebankError::Format { line: 2, .. }));

        let text = format!("{}\n{}\n", conllu_line(1, "a", "0", "root"), conllu_line(1, "b", "1", "x"));
        let err = read_conllu(&text).unwrap_err();
        assert_eq!(
            err,
            TreebankError::Format {
                line: 2,
                msg: "duplicate token index 1".into()
            }
        );
    }

    #[test]
    fn skips_multiword_and_empty_nodes() {
        let text = format!(
            "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n{}\n{}\n2.1\tx\t_\t_\t_\t_\t_\t_\t_\t_\n\n",
            conllu_line(1, "de", "2", "case"),
            conllu_line(2, "el", "0", "root")
        );
        let items = read_conllu(&text).unwrap();
        assert_eq!(items[0].0.len(), 2);
    }

    #[test]
    fn multiple_roots_are_rejected_or_skipped() {
        let text = format!(
            "{}\n{}\n\n{}\n\n",
            conllu_line(1, "a", "0", "root"),
            conllu_line(2, "b", "0", "root"),
            conllu_line(1, "c", "0", "root")
        );
        assert!(matches!(read_conllu(&text), Err(TreebankError::BadTree { line: 1, .. })));
        let (items, rejected) = read_conllu_lenient(&text).unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(rejected.len(), 1);
        assert_eq!(rejected[0].sent_id, "1");
        assert_eq!(items[0].0.id, "2");
    }

    #[test]
    fn write_empty_and_single() {
        assert_eq!(write_conllu(&[]), "");
        let s = Sentence::from_words("1", &[("word", "NOUN")]);
        let t = DepTree::new(vec![0], vec!["root".into()]).unwrap();
        let out = write_conllu(&[(s, t)]);
        assert_eq!(out, "1\tword\t_\tNOUN\t_\t_\t0\troot\t_\t_\n\n");
    }

    #[test]
    fn tree_validation() {
        assert!(DepTree::unlabeled(vec![]).is_err());
        assert!(DepTree::unlabeled(vec![1]).is_err());
        assert!(DepTree::unlabeled(vec![2, 1]).is_err());
        assert!(DepTree::unlabeled(vec![0, 3, 2]).is_err());
        assert!(DepTree::unlabeled(vec![0, 0]).is_err());
        assert!(DepTree::unlabeled(vec![0, 1, 1]).is_ok());
    }

    #[test]
    fn projectivity() {
        assert!(is_projective(&inventory()));
        assert!(is_projective(&DepTree::unlabeled(vec![0]).unwrap()));
        assert!(is_projective(&DepTree::unlabeled(vec![2, 0, 4, 2]).unwrap()));
        // word 3 governs word 1 across its own head
        let t = DepTree::unlabeled(vec![3, 0, 2, 2]).unwrap();
        assert!(!is_projective(&t));
        assert_eq!(
            extract_headed_spans(&t).unwrap_err(),
            TreebankError::NonProjective { word: 3 }
        );
    }

    #[test]
    fn inventory_spans() {
        let spans = extract_headed_spans(&inventory()).unwrap();
        let expected = [
            (0, 1, 1),
            (0, 5, 2),
            (2, 5, 3),
            (3, 4, 4),
            (3, 5, 5),
            (0, 10, 6),
            (6, 10, 7),
            (7, 10, 8),
            (8, 10, 9),
            (9, 10, 10),
        ];
        for (l, r, h) in expected {
            assert_eq!(spans.of(h), HeadedSpan { l, r, h });
        }
        let back = spans_to_tree(&spans).unwrap();
        assert_eq!(back.heads(), &INVENTORY_HEADS);
        assert_eq!(back.head_of(1), 2);
    }

    #[test]
    fn singleton_spans() {
        let t = DepTree::unlabeled(vec![0]).unwrap();
        let spans = extract_headed_spans(&t).unwrap();
        assert_eq!(spans.as_slice(), &[HeadedSpan { l: 0, r: 1, h: 1 }]);
        assert_eq!(spans_to_tree(&spans).unwrap().heads(), &[0]);
    }

    #[test]
    fn span_set_invariants() {
        let s = |l, r, h| HeadedSpan { l, r, h };
        assert!(HeadedSpan::new(2, 5, 2).is_err());
        // crossing
        assert!(SpanSet::new(vec![s(0, 3, 1), s(1, 3, 2), s(0, 2, 3)]).is_err());
        // duplicate interval
        assert!(SpanSet::new(vec![s(0, 2, 1), s(0, 2, 2)]).is_err());
        // no root span
        assert!(SpanSet::new(vec![s(0, 1, 1), s(1, 2, 2)]).is_err());
        // laminar but not induced by any tree: word 2 sits inside word 3's span
        let odd = SpanSet::new(vec![s(0, 1, 1), s(0, 3, 2), s(1, 3, 3)]).unwrap();
        assert!(matches!(spans_to_tree(&odd), Err(TreebankError::InvalidSpans(_))));
    }

    #[test]
    fn depths_count_from_root_word() {
        let d = inventory().depths();
        assert_eq!(d[5], 0);
        assert_eq!(d[1], 1);
        assert_eq!(d[9], 4);
    }
}
