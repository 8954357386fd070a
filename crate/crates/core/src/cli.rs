//! Command-line surface. Each `cmd_*` function works on in-memory text so
//! it can be driven from tests; [`run`] adds file handling.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::evalkit::{full_report, EvalReport, Pair, PunctPolicy};
use crate::oracle::{
    brute_force_best_arc_tree, brute_force_best_span_tree, eisner_parse, enumerate_projective_trees,
    filter_projective_trees, MAX_ENUM_LEN, MAX_FILTER_LEN,
};
use crate::par;
use crate::scoring::{parse_score_file, FeatureScorer, SpanScoreTable};
use crate::spanchart::{cost_augmented_parse, fill_chart, parse_spans};
use crate::synth::{random_arc_table, random_span_table, random_real_span_table, rng_for};
use crate::training::{decode, train, EpochReport, LossKind, TrainConfig};
use crate::treebank::{
    extract_headed_spans, is_projective, read_conllu_lenient, read_sentences, spans_to_tree,
    write_conllu, DepTree, Sentence,
};

#[derive(Debug, Parser)]
#[command(name = "headspan", version, about = "Headed-span projective dependency parsing toolkit")]
pub struct Cli {
    /// Worker threads for per-sentence work (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the headed spans of every tree as JSON Lines.
    ExtractSpans {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Drop invalid or non-projective sentences instead of failing.
        #[arg(long)]
        skip_bad: bool,
    },
    /// Parse a CoNLL-U file, replacing HEAD and DEPREL.
    Parse {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, required_unless_present = "scores", conflicts_with = "scores")]
        model: Option<PathBuf>,
        /// Span score file (JSON Lines), one record per sentence.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
    /// Train a feature model.
    Train(TrainArgs),
    /// Score predictions against gold trees.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value = "upos")]
        punct: PunctPolicy,
        /// Write the JSON report here.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write bucket rows as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        skip_bad: bool,
    },
    /// Check the chart parser and the Eisner decoder against brute force.
    OracleCheck {
        #[arg(long, default_value_t = 6)]
        max_n: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Time chart filling on random score tables.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = "max-margin")]
    pub loss: LossKind,
    #[arg(long, default_value_t = 1.0)]
    pub cost: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub l2: f64,
    #[arg(long, default_value_t = crate::scoring::DEFAULT_HASH_BITS)]
    pub hash_bits: u32,
    #[arg(long)]
    pub no_pos_features: bool,
    #[arg(long)]
    pub skip_bad: bool,
}

impl TrainArgs {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.lr,
            cost: self.cost,
            loss_kind: self.loss,
            shuffle_seed: self.seed,
            l2: self.l2,
            hash_bits: self.hash_bits,
            use_pos: !self.no_pos_features,
        }
    }
}

/// Reads a treebank, failing on sentences with invalid trees unless
/// `skip_bad` is set.
fn read_treebank(text: &str, skip_bad: bool) -> Result<Vec<(Sentence, DepTree)>> {
    let (items, rejected) = read_conllu_lenient(text)?;
    if let Some(first) = rejected.first() {
        if !skip_bad {
            log::warn!("{}", first.error);
            bail!("{} (use --skip-bad to drop such sentences)", first.error);
        }
        log::debug!("dropped {} invalid sentences", rejected.len());
    }
    Ok(items)
}

#[derive(Serialize)]
struct SpanRecord<'a> {
    sent_id: &'a str,
    spans: Vec<[usize; 3]>,
}

pub fn cmd_extract_spans(conllu: &str, skip_bad: bool) -> Result<String> {
    let mut out = String::new();
    for (sent, tree) in read_treebank(conllu, skip_bad)? {
        let spans = match extract_headed_spans(&tree) {
            Ok(s) => s,
            Err(e) if skip_bad => {
                log::debug!("skipping {}: {e}", sent.id);
                continue;
            }
            Err(e) => bail!("sentence {}: {e}", sent.id),
        };
        let record = SpanRecord {
            sent_id: &sent.id,
            spans: spans.iter().map(|s| [s.l, s.r, s.h]).collect(),
        };
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
    }
    Ok(out)
}

pub enum ScoreSource {
    Model(FeatureScorer),
    Scores(Vec<(String, SpanScoreTable)>),
}

pub fn cmd_parse(conllu: &str, source: &ScoreSource) -> Result<String> {
    let sentences = read_sentences(conllu)?;
    let trees: Vec<Result<DepTree>> = match source {
        ScoreSource::Model(scorer) => par::map(&sentences, |s| decode(scorer, s).map_err(|e| anyhow!("sentence {}: {e}", s.id))),
        ScoreSource::Scores(tables) => {
            if tables.len() != sentences.len() {
                bail!(
                    "score file has {} records but the input has {} sentences",
                    tables.len(),
                    sentences.len()
                );
            }
            for (s, (id, t)) in sentences.iter().zip(tables) {
                if t.n() != s.len() {
                    bail!("sentence {}: score record {id:?} has n={} but the sentence has {} words", s.id, t.n(), s.len());
                }
                if !id.is_empty() && id != &s.id {
                    log::warn!("score record {id:?} paired with sentence {:?}", s.id);
                }
            }
            let idx: Vec<usize> = (0..sentences.len()).collect();
            par::map(&idx, |&i| {
                parse_spans(&tables[i].1)
                    .map(|r| r.tree)
                    .map_err(|e| anyhow!("sentence {}: {e}", sentences[i].id))
            })
        }
    };
    let mut items = Vec::with_capacity(sentences.len());
    for (s, t) in sentences.into_iter().zip(trees) {
        items.push((s, t?));
    }
    Ok(write_conllu(&items))
}

pub fn cmd_train(conllu: &str, config: &TrainConfig, skip_bad: bool) -> Result<(FeatureScorer, Vec<EpochReport>)> {
    let items = read_treebank(conllu, skip_bad)?;
    let total = items.len();
    let corpus: Vec<(Sentence, DepTree)> = items.into_iter().filter(|(_, t)| is_projective(t)).collect();
    if corpus.len() < total {
        log::info!("dropped {} non-projective trees", total - corpus.len());
    }
    let outcome = train(&corpus, config)?;
    Ok((outcome.scorer, outcome.epochs))
}

pub fn cmd_eval(gold: &str, pred: &str, policy: PunctPolicy, skip_bad: bool) -> Result<EvalReport> {
    let gold = read_treebank(gold, skip_bad)?;
    let pred = read_treebank(pred, skip_bad)?;
    if gold.len() != pred.len() {
        bail!("gold has {} sentences, prediction has {}", gold.len(), pred.len());
    }
    for ((gs, _), (ps, _)) in gold.iter().zip(&pred) {
        let gf: Vec<&str> = gs.tokens.iter().map(|t| t.form.as_str()).collect();
        let pf: Vec<&str> = ps.tokens.iter().map(|t| t.form.as_str()).collect();
        if gf != pf {
            bail!("sentence {}: gold and prediction tokens differ", gs.id);
        }
    }
    let pairs: Vec<Pair<'_>> = gold
        .iter()
        .zip(&pred)
        .map(|((s, g), (_, p))| Pair {
            sentence: s,
            gold: g,
            pred: p,
        })
        .collect();
    Ok(full_report(&pairs, policy)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleSummary {
    pub checks: Vec<CheckLine>,
}

impl OracleSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failures == 0)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.failures == 0 { "ok" } else { "FAILED" };
            let _ = writeln!(out, "{:<44} {:>7} cases {:>5} failures  {status}", c.name, c.cases, c.failures);
        }
        out.push_str(if self.passed() { "all passed\n" } else { "some checks failed\n" });
        out
    }
}

fn check<F>(name: String, cases: &[(usize, usize)], f: F) -> CheckLine
where
    F: Fn(usize, usize) -> bool + Sync + Send,
{
    let failures = par::map(cases, |&(n, t)| f(n, t)).into_iter().filter(|ok| !ok).count();
    CheckLine {
        name,
        cases: cases.len(),
        failures,
    }
}

/// DP-vs-brute-force, cost-augmented, Eisner, enumeration and round-trip
/// checks on seeded random inputs. Every trial has its own RNG stream, so
/// results do not depend on the thread count.
pub fn cmd_oracle_check(max_n: usize, trials: usize, seed: u64) -> Result<OracleSummary> {
    if max_n == 0 || max_n > MAX_ENUM_LEN {
        bail!("--max-n must be in 1..={MAX_ENUM_LEN}");
    }
    let stream = |n: usize, t: usize, kind: u64| (kind << 48) | ((n as u64) << 32) | t as u64;
    let grid = |lo: usize| -> Vec<(usize, usize)> {
        (lo..=max_n).flat_map(|n| (0..trials).map(move |t| (n, t))).collect()
    };
    let mut checks = Vec::new();

    let filter_max = max_n.min(7).min(MAX_FILTER_LEN);
    let ns: Vec<(usize, usize)> = (1..=filter_max).map(|n| (n, 0)).collect();
    checks.push(check(format!("enumeration vs n^n filter, n=1..{filter_max}"), &ns, |n, _| {
        let generated = enumerate_projective_trees(n).map(|it| it.count()).unwrap_or(0);
        let filtered = filter_projective_trees(n).map(|v| v.len()).unwrap_or(usize::MAX);
        generated == filtered
    }));

    let ns: Vec<(usize, usize)> = (1..=max_n).map(|n| (n, 0)).collect();
    checks.push(check(format!("span round trip, all trees n=1..{max_n}"), &ns, |n, _| {
        enumerate_projective_trees(n).is_ok_and(|mut it| {
            it.all(|t| {
                extract_headed_spans(&t)
                    .and_then(|s| spans_to_tree(&s))
                    .is_ok_and(|back| back == t)
            })
        })
    }));

    checks.push(check(format!("chart optimum vs brute force, n=1..{max_n}"), &grid(1), |n, t| {
        let table = random_span_table(n, -5, 5, &mut rng_for(seed, stream(n, t, 1)));
        let (Ok(res), Ok((_, best))) = (parse_spans(&table), brute_force_best_span_tree(&table, None, 0.0)) else {
            return false;
        };
        res.score == best && table.total(res.spans.iter()) == best
    }));

    let lo = 2.min(max_n);
    checks.push(check(format!("cost-augmented vs brute force, n={lo}..{max_n}"), &grid(lo), |n, t| {
        let mut rng = rng_for(seed, stream(n, t, 2));
        let table = random_span_table(n, -5, 5, &mut rng);
        let gold_tree = crate::synth::random_projective_tree(n, &mut rng);
        let Ok(gold) = extract_headed_spans(&gold_tree) else { return false };
        let cost = 1.0;
        let (Ok(res), Ok((_, best))) = (
            cost_augmented_parse(&table, &gold, cost),
            brute_force_best_span_tree(&table, Some(&gold), cost),
        ) else {
            return false;
        };
        let margin = res.score - table.total(res.spans.iter());
        res.score == best && margin == cost * res.spans.mismatches(&gold) as f64
    }));

    checks.push(check(format!("eisner vs brute force, n=1..{max_n}"), &grid(1), |n, t| {
        let arcs = random_arc_table(n, -5, 5, &mut rng_for(seed, stream(n, t, 3)));
        match (eisner_parse(&arcs), brute_force_best_arc_tree(&arcs)) {
            (Ok((_, a)), Ok((_, b))) => a == b,
            _ => false,
        }
    }));

    Ok(OracleSummary { checks })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub mean_secs: f64,
    /// Time relative to the previous size.
    pub ratio: Option<f64>,
}

/// Mean `fill_chart` time over `reps` random tables per size, measured on
/// the calling thread.
pub fn cmd_bench(sizes: &[usize], reps: usize, seed: u64) -> Result<Vec<BenchRow>> {
    if reps == 0 {
        bail!("--reps must be positive");
    }
    let mut rows: Vec<BenchRow> = Vec::new();
    for (si, &n) in sizes.iter().enumerate() {
        if n == 0 {
            bail!("sizes must be positive");
        }
        let mut total = 0.0;
        for r in 0..reps {
            let table = random_real_span_table(n, &mut rng_for(seed, ((si as u64) << 32) | r as u64));
            let start = Instant::now();
            let chart = fill_chart(&table)?;
            total += start.elapsed().as_secs_f64();
            std::hint::black_box(chart.best_score());
        }
        let mean = total / reps as f64;
        let ratio = rows.last().map(|p| mean / p.mean_secs);
        rows.push(BenchRow {
            n,
            mean_secs: mean,
            ratio,
        });
    }
    Ok(rows)
}

pub fn render_bench(rows: &[BenchRow]) -> String {
    let mut out = format!("{:>6} {:>12} {:>8}\n", "n", "mean_ms", "ratio");
    for r in rows {
        let ratio = r.ratio.map_or("-".to_string(), |x| format!("{x:.2}"));
        let _ = writeln!(out, "{:>6} {:>12.3} {:>8}", r.n, r.mean_secs * 1e3, ratio);
    }
    out
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(output: Option<&Path>, data: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, data).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{data}");
            Ok(())
        }
    }
}

/// Runs one command; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    par::configure_threads(cli.threads).map_err(|e| anyhow!("thread pool: {e}"))?;
    match cli.command {
        Command::ExtractSpans { input, output, skip_bad } => {
            emit(output.as_deref(), &cmd_extract_spans(&read(&input)?, skip_bad)?)?;
        }
        Command::Parse {
            input,
            output,
            model,
            scores,
        } => {
            let source = match (model, scores) {
                (Some(m), _) => ScoreSource::Model(FeatureScorer::load(&m)?),
                (None, Some(s)) => ScoreSource::Scores(parse_score_file(&read(&s)?)?),
                (None, None) => bail!("one of --model or --scores is required"),
            };
            emit(output.as_deref(), &cmd_parse(&read(&input)?, &source)?)?;
        }
        Command::Train(args) => {
            let (scorer, epochs) = cmd_train(&read(&args.input)?, &args.config(), args.skip_bad)?;
            scorer.save(&args.output)?;
            for e in &epochs {
                println!(
                    "epoch {:>3}  parse {:>10.4}  label {:>10.4}  total {:>10.4}",
                    e.epoch, e.parse_loss, e.label_loss, e.total
                );
            }
        }
        Command::Eval {
            gold,
            pred,
            punct,
            output,
            csv,
            skip_bad,
        } => {
            let report = cmd_eval(&read(&gold)?, &read(&pred)?, punct, skip_bad)?;
            print!("{}", report.to_table());
            if let Some(p) = output {
                fs::write(&p, report.to_json()).with_context(|| format!("writing {}", p.display()))?;
            }
            if let Some(p) = csv {
                fs::write(&p, report.to_csv()).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Command::OracleCheck { max_n, trials, seed } => {
            let summary = cmd_oracle_check(max_n, trials, seed)?;
            print!("{}", summary.render());
            if !summary.passed() {
                return Ok(1);
            }
        }
        Command::Bench { sizes, reps, seed } => {
            print!("{}", render_bench(&cmd_bench(&sizes, reps, seed)?));
        }
    }
    Ok(0)
}

/// Convenience used by tests: parse text with an in-memory score file.
pub fn parse_with_score_file(conllu: &str, score_jsonl: &str) -> Result<String> {
    let tables = parse_score_file(score_jsonl)?;
    cmd_parse(conllu, &ScoreSource::Scores(tables))
}
