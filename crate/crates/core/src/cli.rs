//! Command-line front end.
//!
//! Every command reads its inputs, writes its outputs to files and reports
//! diagnostics on stderr. Machine-readable outputs are line-delimited JSON at
//! full precision in the run's units; human tables use two-decimal
//! percentages.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::annotations::{group_by_system, load_annotations, system_score, SystemScore};
use crate::corpus::{self, load_corpus, measure_batch, Example, ExampleMeasure, Quartile, QuartileStats, QuartileThresholds, StatsAccumulator};
use crate::error::Error;
use crate::parallel::Execution;
use crate::selection::{
    attach_annotations, cross_validated_select, load_candidates, run_oracle, CandidateSet, OracleKind,
    OracleSystems, RocCriterion, Scorer, SelectionResult, SelectionSummary, SelectorConfig,
};
use crate::tradeoff::{
    build_curve, correlate, curve_report, effective_faithfulness, load_control_points, load_systems,
    render_svg, EffectiveFaithfulness, TradeoffCurve,
};
use crate::units::{pct, Units};

/// Examples measured per parallel batch while streaming a corpus.
const CHUNK: usize = 8192;

#[derive(Debug, Parser)]
#[command(name = "faithcurve", version, about = "Extractiveness, trade-off curves and faithfulness-aware selection")]
pub struct Cli {
    /// Units for coverage/faithfulness values read and written by this run.
    #[arg(long, global = true, value_enum)]
    pub units: Option<UnitsArg>,

    /// Run on the calling thread only.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum UnitsArg {
    Percent,
    Fraction,
}

impl From<UnitsArg> for Units {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::Percent => Units::Percent,
            UnitsArg::Fraction => Units::Fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Roc,
    Fbeta,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CriterionArg {
    Youden,
    ClosestToCorner,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScorerArg {
    File,
    CoverageDemo,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OracleArg {
    Bf,
    Bfe,
    Qfe,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-example coverage and density of a corpus.
    Metrics {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Split a corpus into coverage quartiles.
    Split {
        #[arg(long)]
        input: PathBuf,
        /// Prefix for `.q1`..`.q4`, `.thresholds.json` and `.stats.*`.
        #[arg(long)]
        output: PathBuf,
    },
    /// Per-system mean faithfulness and coverage from human annotations.
    Score {
        /// Annotation records `{id, system, judgments}`.
        #[arg(long)]
        input: PathBuf,
        /// Candidate records supplying each output's summary or coverage.
        #[arg(long)]
        candidates: PathBuf,
        #[command(flatten)]
        corpus: CorpusArg,
        #[arg(long)]
        output: PathBuf,
        /// Human-readable table; defaults to `<output>.txt`.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Plot data for the control curve.
    Curve {
        /// Control points `{model, coverage, faithfulness}`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Effective faithfulness of systems against the control curve.
    EffFaith {
        /// Control points `{model, coverage, faithfulness}`.
        #[arg(long)]
        input: PathBuf,
        /// Systems `{system, coverage, faithfulness}`.
        #[arg(long)]
        systems: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Human-readable table; defaults to `<output>.txt`.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Plot data; defaults to `<output>.plot.tsv`.
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Pearson correlation between coverage and a metric score.
    Correlate {
        /// Records `{coverage, score}` (or `faithfulness` in place of `score`).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Cross-validated threshold selector.
    Select {
        #[command(flatten)]
        inputs: SelectionInputs,
        #[arg(long, value_enum, default_value = "roc")]
        mode: ModeArg,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, value_enum, default_value = "youden")]
        roc_criterion: CriterionArg,
        #[arg(long, default_value_t = SelectorConfig::DEFAULT_FOLDS)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "file")]
        scorer: ScorerArg,
    },
    /// Human-judgment oracle selection.
    Oracle {
        #[command(flatten)]
        inputs: SelectionInputs,
        #[arg(long, value_enum)]
        oracle: OracleArg,
        #[arg(long, default_value = "baseline")]
        baseline: String,
        #[arg(long)]
        more_abstractive: Option<String>,
        #[arg(long)]
        more_extractive: Option<String>,
        /// Comma-separated systems `qfe` chooses among.
        #[arg(long, value_delimiter = ',')]
        quartiles: Option<Vec<String>>,
    },
    /// Human-readable coverage/faithfulness table, with effective
    /// faithfulness when control points are given.
    Report {
        /// Systems `{system, coverage, faithfulness}`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        control: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct CorpusArg {
    /// Corpus used to measure candidates that carry no `coverage` field.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectionInputs {
    /// Candidate records `{id, system, summary, score?, coverage?}`.
    #[arg(long)]
    input: PathBuf,
    /// Annotation records `{id, system, judgments}`.
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArg,
    #[arg(long)]
    output: PathBuf,
    /// Summary block; defaults to `<output>.summary.json` (plus `.txt`).
    #[arg(long)]
    summary: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    let units = cli.units.map(Units::from);
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Metrics { input, output } => cmd_metrics(&input, &output, units.unwrap_or_default(), exec),
        Command::Split { input, output } => cmd_split(&input, &output, exec),
        Command::Score {
            input,
            candidates,
            corpus,
            output,
            table,
        } => cmd_score(&input, &candidates, corpus.corpus.as_deref(), &output, table, units.unwrap_or_default()),
        Command::Curve { input, output, svg } => cmd_curve(&input, &output, svg.as_deref(), units),
        Command::EffFaith {
            input,
            systems,
            output,
            table,
            plot,
            svg,
        } => cmd_eff_faith(&input, &systems, &output, table, plot, svg.as_deref(), units),
        Command::Correlate { input, output } => cmd_correlate(&input, &output, units),
        Command::Select {
            inputs,
            mode,
            beta,
            roc_criterion,
            folds,
            seed,
            scorer,
        } => {
            let mode = match mode {
                ModeArg::Roc => "roc",
                ModeArg::Fbeta => "fbeta",
            };
            let criterion = match roc_criterion {
                CriterionArg::Youden => RocCriterion::Youden,
                CriterionArg::ClosestToCorner => RocCriterion::ClosestToCorner,
            };
            let config = SelectorConfig::from_parts(mode, beta, criterion, folds, seed)?;
            let scorer = match scorer {
                ScorerArg::File => Scorer::File,
                ScorerArg::CoverageDemo => Scorer::CoverageDemo,
            };
            cmd_select(&inputs, &config, scorer, units.unwrap_or_default(), exec)
        }
        Command::Oracle {
            inputs,
            oracle,
            baseline,
            more_abstractive,
            more_extractive,
            quartiles,
        } => {
            let kind = match oracle {
                OracleArg::Bf => OracleKind::Bf,
                OracleArg::Bfe => OracleKind::Bfe,
                OracleArg::Qfe => OracleKind::Qfe,
            };
            let systems = OracleSystems {
                baseline,
                more_abstractive,
                more_extractive,
                quartiles,
            };
            cmd_oracle(&inputs, kind, &systems, units.unwrap_or_default())
        }
        Command::Report { input, control, output } => cmd_report(&input, control.as_deref(), &output, units),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    Ok(BufWriter::new(file))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_jsonl<W: Write, T: Serialize>(out: &mut W, record: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn finish(mut out: BufWriter<File>, path: &Path) -> Result<()> {
    out.flush().with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct UnitsHeader {
    units: Units,
}

/// Infinite thresholds are written as the strings `"inf"` / `"-inf"`.
fn threshold_json(t: Option<f64>) -> serde_json::Value {
    match t {
        None => serde_json::Value::Null,
        Some(v) if v == f64::INFINITY => "inf".into(),
        Some(v) if v == f64::NEG_INFINITY => "-inf".into(),
        Some(v) => v.into(),
    }
}

/// Streams a corpus in chunks, measuring each chunk on `exec` and handing
/// results to `sink` in file order.
fn stream_measures(
    input: &Path,
    exec: Execution,
    mut sink: impl FnMut(usize, &Example, ExampleMeasure) -> Result<()>,
) -> Result<usize> {
    let mut reader = load_corpus(input)?;
    let mut total = 0;
    loop {
        let mut lines = Vec::with_capacity(CHUNK);
        let mut batch = Vec::with_capacity(CHUNK);
        for item in reader.by_ref().take(CHUNK) {
            let (line, ex) = item.with_context(|| format!("reading {}", input.display()))?;
            lines.push(line);
            batch.push(ex);
        }
        if batch.is_empty() {
            return Ok(total);
        }
        for ((line, ex), m) in lines.iter().zip(&batch).zip(measure_batch(&batch, exec)) {
            let m = m.with_context(|| format!("{}: line {line} (id `{}`)", input.display(), ex.id))?;
            sink(*line, ex, m)?;
        }
        total += batch.len();
    }
}

#[derive(Serialize)]
struct MetricRecord<'a> {
    id: &'a str,
    coverage: f64,
    density: f64,
    summary_len: usize,
}

pub fn cmd_metrics(input: &Path, output: &Path, units: Units, exec: Execution) -> Result<()> {
    let mut out = create(output)?;
    stream_measures(input, exec, |_, _, m| {
        write_jsonl(
            &mut out,
            &MetricRecord {
                id: &m.id,
                coverage: units.from_fraction(m.coverage),
                density: m.density,
                summary_len: m.summary_len,
            },
        )
    })?;
    finish(out, output)
}

/// Compact per-example record kept between the two passes of `split`.
struct Measured {
    coverage: f64,
    article_len: u32,
    summary_len: u32,
}

pub fn cmd_split(input: &Path, prefix: &Path, exec: Execution) -> Result<()> {
    let mut measured = Vec::new();
    stream_measures(input, exec, |_, _, m| {
        measured.push(Measured {
            coverage: m.coverage,
            article_len: m.article_len as u32,
            summary_len: m.summary_len as u32,
        });
        Ok(())
    })?;
    if measured.is_empty() {
        return Err(Error::EmptyInput).with_context(|| format!("{}: no examples", input.display()));
    }
    let coverages: Vec<f64> = measured.iter().map(|m| m.coverage).collect();
    let thresholds = QuartileThresholds::from_coverages(&coverages)?;

    let mut acc = StatsAccumulator::default();
    for m in &measured {
        let em = ExampleMeasure {
            id: String::new(),
            coverage: m.coverage,
            density: 0.0,
            article_len: m.article_len as usize,
            summary_len: m.summary_len as usize,
        };
        acc.add(thresholds.assign(m.coverage), &em);
    }
    let stats = acc.finish();

    // second pass: route raw lines, blank lines skipped as in the reader
    let mut outs = Quartile::ALL
        .iter()
        .map(|q| {
            let path = with_suffix(prefix, &format!(".{}", q.name()));
            create(&path).map(|w| (w, path))
        })
        .collect::<Result<Vec<_>>>()?;
    let reader = corpus::open(input)?;
    let mut next = measured.iter();
    for line in reader.lines() {
        let line = line.with_context(|| format!("re-reading {}", input.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let m = next.next().context("corpus changed while splitting")?;
        let (w, _) = &mut outs[thresholds.assign(m.coverage).index()];
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
    }
    for (w, path) in outs {
        finish(w, &path)?;
    }

    let path = with_suffix(prefix, ".thresholds.json");
    let mut w = create(&path)?;
    write_jsonl(&mut w, &thresholds)?;
    finish(w, &path)?;

    let path = with_suffix(prefix, ".stats.tsv");
    let mut w = create(&path)?;
    write_stats_tsv(&mut w, &stats)?;
    finish(w, &path)?;

    let path = with_suffix(prefix, ".stats.txt");
    let mut w = create(&path)?;
    write_stats_table(&mut w, &stats, &thresholds)?;
    finish(w, &path)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), |x| x.to_string())
}

fn write_stats_tsv<W: Write>(w: &mut W, stats: &QuartileStats) -> Result<()> {
    writeln!(w, "quartile\tcount\tmean_article_len\tmean_summary_len\tmean_coverage")?;
    for (q, s) in Quartile::ALL.iter().zip(&stats.quartiles) {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            q.name(),
            s.count,
            opt(s.mean_article_len),
            opt(s.mean_summary_len),
            opt(s.mean_coverage)
        )?;
    }
    Ok(())
}

fn write_stats_table<W: Write>(w: &mut W, stats: &QuartileStats, t: &QuartileThresholds) -> Result<()> {
    writeln!(w, "thresholds (coverage %): a={} b={} c={}", pct(t.a), pct(t.b), pct(t.c))?;
    writeln!(w, "{:<9}{:>12}{:>16}{:>16}{:>10}", "Quartile", "# Examples", "Article Length", "Summary Length", "Cov.")?;
    let two = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |x| format!("{x:.2}"));
    for (q, s) in Quartile::ALL.iter().zip(&stats.quartiles) {
        writeln!(
            w,
            "{:<9}{:>12}{:>16}{:>16}{:>10}",
            q.name().to_uppercase(),
            s.count,
            two(s.mean_article_len),
            two(s.mean_summary_len),
            s.mean_coverage.map_or_else(|| "-".to_owned(), pct)
        )?;
    }
    writeln!(w, "{:<9}{:>12}", "Total", stats.total())?;
    Ok(())
}

fn load_candidate_sets(inputs: &SelectionInputs) -> Result<Vec<CandidateSet>> {
    let corpus = match &inputs.corpus.corpus {
        Some(p) => Some(corpus::read_corpus(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let mut sets = load_candidates(&inputs.input, corpus.as_deref())
        .with_context(|| format!("reading {}", inputs.input.display()))?;
    if let Some(path) = &inputs.annotations {
        let anns = load_annotations(path).with_context(|| format!("reading {}", path.display()))?;
        attach_annotations(&mut sets, &anns)?;
    }
    Ok(sets)
}

#[derive(Serialize)]
struct SystemRecord<'a> {
    system: &'a str,
    coverage: f64,
    faithfulness: f64,
    n: usize,
}

pub fn cmd_score(
    input: &Path,
    candidates: &Path,
    corpus_path: Option<&Path>,
    output: &Path,
    table: Option<PathBuf>,
    units: Units,
) -> Result<()> {
    let anns = load_annotations(input).with_context(|| format!("reading {}", input.display()))?;
    let corpus = match corpus_path {
        Some(p) => Some(corpus::read_corpus(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let sets = load_candidates(candidates, corpus.as_deref())
        .with_context(|| format!("reading {}", candidates.display()))?;

    let mut coverage: HashMap<&str, HashMap<String, f64>> = HashMap::new();
    for c in sets.iter().flat_map(|s| s.candidates()) {
        coverage
            .entry(c.system_id.as_str())
            .or_default()
            .insert(c.example_id.clone(), c.coverage);
    }
    let empty = HashMap::new();
    let scores = group_by_system(&anns)
        .into_iter()
        .map(|(system, group)| {
            system_score(&group, coverage.get(system.as_str()).unwrap_or(&empty))
                .with_context(|| format!("scoring system `{system}`"))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = create(output)?;
    write_systems(&mut out, &scores, units)?;
    finish(out, output)?;

    let table = table.unwrap_or_else(|| with_suffix(output, ".txt"));
    let mut w = create(&table)?;
    writeln!(w, "{:<20}{:>10}{:>14}{:>6}", "Model", "Coverage", "Faithfulness", "N")?;
    for s in &scores {
        writeln!(
            w,
            "{:<20}{:>10}{:>14}{:>6}",
            s.system_id,
            pct(s.mean_coverage),
            pct(s.mean_faithfulness),
            s.n_examples
        )?;
    }
    finish(w, &table)
}

fn write_systems<W: Write>(out: &mut W, scores: &[SystemScore], units: Units) -> Result<()> {
    write_jsonl(out, &UnitsHeader { units })?;
    for s in scores {
        write_jsonl(
            out,
            &SystemRecord {
                system: &s.system_id,
                coverage: units.from_fraction(s.mean_coverage),
                faithfulness: units.from_fraction(s.mean_faithfulness),
                n: s.n_examples,
            },
        )?;
    }
    Ok(())
}

fn load_curve(path: &Path, units: Option<Units>) -> Result<(TradeoffCurve, Units)> {
    let (points, file_units) =
        load_control_points(path, units).with_context(|| format!("reading {}", path.display()))?;
    let curve = build_curve(points).with_context(|| format!("building curve from {}", path.display()))?;
    Ok((curve, file_units))
}

fn write_svg(path: &Path, curve: &TradeoffCurve, systems: &[EffectiveFaithfulness]) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(render_svg(curve, systems).as_bytes())?;
    finish(w, path)
}

pub fn cmd_curve(input: &Path, output: &Path, svg: Option<&Path>, units: Option<Units>) -> Result<()> {
    let (curve, file_units) = load_curve(input, units)?;
    curve_report(&curve, &[], output, file_units)?;
    if let Some(svg) = svg {
        write_svg(svg, &curve, &[])?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EffRecord<'a> {
    system: &'a str,
    coverage: f64,
    faithfulness: f64,
    control: f64,
    delta: f64,
    above: bool,
}

pub fn cmd_eff_faith(
    input: &Path,
    systems_path: &Path,
    output: &Path,
    table: Option<PathBuf>,
    plot: Option<PathBuf>,
    svg: Option<&Path>,
    units: Option<Units>,
) -> Result<()> {
    let (curve, curve_units) = load_curve(input, units)?;
    let (systems, system_units) =
        load_systems(systems_path, units).with_context(|| format!("reading {}", systems_path.display()))?;
    if curve_units != system_units {
        return Err(Error::UnitMismatch {
            declared: system_units.name(),
            requested: curve_units.name(),
        })
        .with_context(|| format!("{} and {} disagree on units", input.display(), systems_path.display()));
    }
    let units = curve_units;
    let effs: Vec<EffectiveFaithfulness> = systems.iter().map(|s| effective_faithfulness(&curve, s)).collect();

    let mut out = create(output)?;
    write_jsonl(&mut out, &UnitsHeader { units })?;
    for e in &effs {
        write_jsonl(
            &mut out,
            &EffRecord {
                system: &e.system_id,
                coverage: units.from_fraction(e.system_coverage),
                faithfulness: units.from_fraction(e.system_faithfulness),
                control: units.from_fraction(e.control_faithfulness),
                delta: units.from_fraction(e.delta),
                above: e.above_curve,
            },
        )?;
    }
    finish(out, output)?;

    let table = table.unwrap_or_else(|| with_suffix(output, ".txt"));
    let mut w = create(&table)?;
    write_eff_table(&mut w, &effs)?;
    finish(w, &table)?;

    let plot = plot.unwrap_or_else(|| with_suffix(output, ".plot.tsv"));
    curve_report(&curve, &effs, &plot, units)?;
    if let Some(svg) = svg {
        write_svg(svg, &curve, &effs)?;
    }
    Ok(())
}

fn write_eff_table<W: Write>(w: &mut W, effs: &[EffectiveFaithfulness]) -> Result<()> {
    writeln!(
        w,
        "{:<20}{:>10}{:>14}{:>10}{:>9}  Curve",
        "Model", "Coverage", "Faithfulness", "Control", "Delta"
    )?;
    for e in effs {
        writeln!(
            w,
            "{:<20}{:>10}{:>14}{:>10}{:>9}  {}",
            e.system_id,
            pct(e.system_coverage),
            pct(e.system_faithfulness),
            pct(e.control_faithfulness),
            format!("{:+.2}", e.delta * 100.0),
            if e.above_curve { "above" } else { "below" }
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CorrelationRecord {
    pearson: f64,
    n: usize,
}

pub fn cmd_correlate(input: &Path, output: &Path, units: Option<Units>) -> Result<()> {
    let reader = corpus::open(input)?;
    let mut declared = None;
    let mut pairs = Vec::new();
    for (i, text) in reader.lines().enumerate() {
        let line = i + 1;
        let text = text?;
        let Some(obj) = corpus::parse_object(&text, line)? else {
            continue;
        };
        if let Some(u) = obj.get("units").and_then(|u| u.as_str()) {
            declared = Some(u.parse::<Units>()?);
            continue;
        }
        let get = |f: &str| obj.get(f).and_then(|v| v.as_f64());
        let coverage = get("coverage").ok_or_else(|| corpus::malformed(line, "missing numeric `coverage`"))?;
        let score = get("score")
            .or_else(|| get("faithfulness"))
            .ok_or_else(|| corpus::malformed(line, "missing numeric `score`"))?;
        pairs.push((coverage, score));
    }
    let units = Units::reconcile(declared, units)?;
    let pairs: Vec<(f64, f64)> = pairs.into_iter().map(|(c, s)| (units.to_fraction(c), s)).collect();
    let r = correlate(&pairs).with_context(|| format!("correlating {}", input.display()))?;
    let mut out = create(output)?;
    write_jsonl(&mut out, &CorrelationRecord { pearson: r, n: pairs.len() })?;
    finish(out, output)
}

#[derive(Serialize)]
struct SelectionRecord<'a> {
    id: &'a str,
    system: &'a str,
    fallback: bool,
    threshold: serde_json::Value,
    coverage: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    faithfulness: Option<f64>,
}

#[derive(Serialize)]
struct SummaryBlock<'a> {
    units: Units,
    n_examples: usize,
    mean_coverage: f64,
    mean_faithfulness: Option<f64>,
    fallbacks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    fold_thresholds: Option<Vec<serde_json::Value>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a SelectorConfig>,
}

fn write_selection(
    inputs: &SelectionInputs,
    results: &[SelectionResult],
    units: Units,
    fold_thresholds: Option<Vec<f64>>,
    config: Option<&SelectorConfig>,
    title: &str,
) -> Result<()> {
    let mut out = create(&inputs.output)?;
    for r in results {
        write_jsonl(
            &mut out,
            &SelectionRecord {
                id: &r.example_id,
                system: &r.chosen_system,
                fallback: r.fallback,
                threshold: threshold_json(r.threshold_used),
                coverage: units.from_fraction(r.coverage),
                faithfulness: r.human_score.map(|f| units.from_fraction(f)),
            },
        )?;
    }
    finish(out, &inputs.output)?;

    let summary = SelectionSummary::from_results(results);
    let path = inputs
        .summary
        .clone()
        .unwrap_or_else(|| with_suffix(&inputs.output, ".summary.json"));
    let mut w = create(&path)?;
    write_jsonl(
        &mut w,
        &SummaryBlock {
            units,
            n_examples: summary.n_examples,
            mean_coverage: units.from_fraction(summary.mean_coverage),
            mean_faithfulness: summary.mean_faithfulness.map(|f| units.from_fraction(f)),
            fallbacks: summary.fallbacks,
            fold_thresholds: fold_thresholds.map(|ts| ts.into_iter().map(|t| threshold_json(Some(t))).collect()),
            config,
        },
    )?;
    finish(w, &path)?;

    let path = with_suffix(&path, ".txt");
    let mut w = create(&path)?;
    writeln!(w, "{:<20}{:>10}{:>14}{:>11}", "", "Coverage", "Faithfulness", "Fallbacks")?;
    writeln!(
        w,
        "{:<20}{:>10}{:>14}{:>11}",
        title,
        pct(summary.mean_coverage),
        summary.mean_faithfulness.map_or_else(|| "-".to_owned(), pct),
        summary.fallbacks
    )?;
    finish(w, &path)
}

pub fn cmd_select(
    inputs: &SelectionInputs,
    config: &SelectorConfig,
    scorer: Scorer,
    units: Units,
    exec: Execution,
) -> Result<()> {
    let mut sets = load_candidate_sets(inputs)?;
    scorer.apply(&mut sets);
    let cv = cross_validated_select(&sets, config, exec)?;
    let title = match config.mode {
        crate::selection::SelectorMode::Roc(_) => "Selector-ROC".to_owned(),
        crate::selection::SelectorMode::FBeta(b) => format!("Selector-F{b}"),
    };
    let thresholds = cv.fold_thresholds.iter().map(|t| t.threshold).collect();
    write_selection(inputs, &cv.results, units, Some(thresholds), Some(config), &title)
}

pub fn cmd_oracle(inputs: &SelectionInputs, kind: OracleKind, systems: &OracleSystems, units: Units) -> Result<()> {
    if inputs.annotations.is_none() {
        bail!("oracle selection needs --annotations");
    }
    let sets = load_candidate_sets(inputs)?;
    let results = run_oracle(&sets, kind, systems)?;
    let title = match kind {
        OracleKind::Bf => "bf",
        OracleKind::Bfe => "bfe",
        OracleKind::Qfe => "qfe",
    };
    write_selection(inputs, &results, units, None, None, title)
}

pub fn cmd_report(input: &Path, control: Option<&Path>, output: &Path, units: Option<Units>) -> Result<()> {
    let (systems, system_units) =
        load_systems(input, units).with_context(|| format!("reading {}", input.display()))?;
    let mut w = create(output)?;
    match control {
        Some(control) => {
            let (curve, curve_units) = load_curve(control, Some(system_units))?;
            debug_assert_eq!(curve_units, system_units);
            writeln!(w, "Control curve")?;
            writeln!(w, "{:<20}{:>10}{:>14}", "Model", "Coverage", "Faithfulness")?;
            for p in curve.points() {
                writeln!(w, "{:<20}{:>10}{:>14}", p.model_id, pct(p.coverage), pct(p.faithfulness))?;
            }
            writeln!(w)?;
            writeln!(w, "Systems")?;
            let effs: Vec<_> = systems.iter().map(|s| effective_faithfulness(&curve, s)).collect();
            write_eff_table(&mut w, &effs)?;
        }
        None => {
            writeln!(w, "{:<20}{:>10}{:>14}", "Model", "Coverage", "Faithfulness")?;
            for s in &systems {
                writeln!(w, "{:<20}{:>10}{:>14}", s.system_id, pct(s.mean_coverage), pct(s.mean_faithfulness))?;
            }
        }
    }
    finish(w, output)
}
