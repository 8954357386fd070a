//! Projective dependency parsing over headed spans.
//!
//! A tree over `n` words is scored as a sum of headed-span scores and
//! decoded exactly by an O(n³) chart ([`spanchart`]). The crate also has
//! CoNLL-U I/O ([`treebank`]), a hashed feature model ([`scoring`]),
//! training losses ([`training`]), brute-force reference decoders
//! ([`oracle`]) and evaluation ([`evalkit`]).

pub mod cli;
pub mod evalkit;
pub mod oracle;
pub mod par;
pub mod scoring;
pub mod spanchart;
pub mod synth;
pub mod training;
pub mod treebank;

pub use spanchart::{cost_augmented_parse, fill_chart, parse_spans, Chart, ParseResult};
pub use treebank::{extract_headed_spans, spans_to_tree, DepTree, HeadedSpan, Sentence, SpanSet};
