use std::collections::HashMap;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sqlfix_core::dmsft::{build_samples, diff_distribution_report, BuildMode, MaskRatio};
use sqlfix_core::eval::{accuracy_report, CaseOutcome, CaseResult, EvalCase, PreparedCase};
use sqlfix_core::filter::{filter_pairs, RejectReason};
use sqlfix_core::generate::{
    generate_all, load_features, recall, CorpusEntry, EndpointConfig, GenCandidate, GenOutcome,
    LlmClient, PluginRegistry,
};
use sqlfix_core::io::{read_records, read_records_lenient, write_atomic, write_records};
use sqlfix_core::mining::{mine_pairs, MiningError};
use sqlfix_core::model::{BugFixPair, SqlEvent};
use sqlfix_core::review::{run_review, select_for_review};
use sqlfix_core::taxonomy::{category_report, Taxonomy};
use sqlfix_core::tokenizer::{
    ByteTokenizer, CommandTokenizer, TokenizerAdapter, WhitespaceTokenizer,
};

use super::args::{BuildModeArg, Cli, Command, GlobalArgs, TokenizerArg};
use super::{fail, Kind, RunConfig};

pub fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            return Err(fail(Kind::Usage, "--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let cfg = RunConfig::load(cli.global.config.as_deref())?;
    let g = &cli.global;
    match cli.command {
        Command::Mine { events, out } => mine(&cfg, &events, &out),
        Command::Filter {
            pairs,
            kept,
            rejected,
            executor_url,
        } => filter(&cfg, g, &pairs, &kept, &rejected, executor_url.as_deref()),
        Command::Classify {
            pairs,
            taxonomy,
            out,
            report,
        } => classify(&pairs, &taxonomy, &out, report.as_deref()),
        Command::Recall {
            corpus,
            features,
            out,
        } => {
            let candidates = recall_all(&corpus, &features)?;
            write_records(&out, &candidates)?;
            println!("recalled {} candidate(s)", candidates.len());
            Ok(())
        }
        Command::Generate {
            corpus,
            features,
            endpoint,
            out,
            audit,
            executor_url,
        } => generate(
            &cfg,
            g,
            &corpus,
            &features,
            &endpoint,
            &out,
            &audit,
            executor_url.as_deref(),
        ),
        Command::Build {
            pairs,
            out,
            mode,
            p,
            tokenizer,
            tokenizer_cmd,
        } => build(g, &pairs, &out, mode, p, tokenizer, tokenizer_cmd),
        Command::Diffstats { pairs, csv } => diffstats(&pairs, csv.as_deref()),
        Command::Evaluate {
            predictions,
            evalset,
            out,
            report,
        } => evaluate(g, &predictions, &evalset, &out, &report),
        Command::Review {
            pairs,
            sample_rate,
            gate,
            decisions,
        } => review(g, &pairs, sample_rate, gate, decisions.as_deref()),
    }
}

fn read_pairs(path: &Path) -> Result<Vec<BugFixPair>> {
    Ok(read_records(path)?)
}

fn mine(cfg: &RunConfig, events: &Path, out: &Path) -> Result<()> {
    let (events, bad_lines) = read_records_lenient::<SqlEvent>(events)?;
    let mined = mine_pairs(&events, &cfg.mine).map_err(|e| match e {
        MiningError::InvalidConfig { .. } => fail(Kind::Usage, e.to_string()),
        MiningError::Unsorted { .. } => fail(Kind::Data, e.to_string()),
    })?;
    write_records(out, &mined.pairs)?;
    println!(
        "mined {} pair(s) from {} event(s); skipped {} malformed event(s)",
        mined.pairs.len(),
        events.len() + bad_lines.len(),
        mined.malformed + bad_lines.len()
    );
    Ok(())
}

fn filter(
    cfg: &RunConfig,
    g: &GlobalArgs,
    pairs: &Path,
    kept: &Path,
    rejected: &Path,
    executor_url: Option<&str>,
) -> Result<()> {
    let pairs = read_pairs(pairs)?;
    let executor = cfg.executor(executor_url, g.dialect);
    let out = filter_pairs(pairs, &cfg.filter, executor.as_ref());
    write_records(kept, &out.kept)?;
    write_records(rejected, &out.rejected)?;
    let mut by_reason: Vec<(String, usize)> = Vec::new();
    for r in &out.rejected {
        let name = serde_json::to_value(r.reason)?
            .as_str()
            .unwrap_or_default()
            .to_owned();
        match by_reason.iter_mut().find(|(n, _)| *n == name) {
            Some((_, c)) => *c += 1,
            None => by_reason.push((name, 1)),
        }
    }
    println!("kept {}, rejected {}", out.kept.len(), out.rejected.len());
    for (name, count) in by_reason {
        println!("  {name}: {count}");
    }
    let unavailable = out
        .rejected
        .iter()
        .filter(|r| r.reason == RejectReason::ExecutorUnavailable)
        .count();
    if unavailable > 0 {
        return Err(fail(
            Kind::Remote,
            format!("executor unavailable for {unavailable} pair(s)"),
        ));
    }
    Ok(())
}

fn classify(pairs: &Path, taxonomy: &Path, out: &Path, report: Option<&Path>) -> Result<()> {
    let mut pairs = read_pairs(pairs)?;
    let taxonomy = Taxonomy::load(taxonomy).map_err(|e| fail(Kind::Usage, e.to_string()))?;
    let rows = category_report(&pairs, &taxonomy);
    pairs.par_iter_mut().for_each(|p| {
        p.category = Some(taxonomy.classify(&p.error_message, &p.bug_sql));
    });
    write_records(out, &pairs)?;
    if let Some(path) = report {
        let mut text = serde_json::to_string_pretty(&rows)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())?;
    }
    for r in &rows {
        println!("{:>6}  {}", r.count, r.category);
    }
    Ok(())
}

fn recall_all(corpus: &Path, features: &Path) -> Result<Vec<GenCandidate>> {
    let corpus: Vec<CorpusEntry> = read_records(corpus)?;
    let plugins = PluginRegistry::with_builtins();
    let features =
        load_features(features, &plugins).map_err(|e| fail(Kind::Usage, e.to_string()))?;
    let mut out = Vec::new();
    for f in &features {
        out.extend(recall(&corpus, f, f.limit, &plugins).map_err(|e| fail(Kind::Usage, e))?);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn generate(
    cfg: &RunConfig,
    g: &GlobalArgs,
    corpus: &Path,
    features: &Path,
    endpoint: &Path,
    out: &Path,
    audit: &Path,
    executor_url: Option<&str>,
) -> Result<()> {
    let candidates = recall_all(corpus, features)?;
    let endpoint = EndpointConfig::load(endpoint).map_err(|e| fail(Kind::Usage, e.to_string()))?;
    let in_flight = endpoint.max_in_flight;
    let client = LlmClient::new(endpoint).map_err(|e| fail(Kind::Usage, e.to_string()))?;
    let executor = cfg.executor(executor_url, g.dialect);
    let records = generate_all(
        &candidates,
        &client,
        executor.as_ref(),
        &cfg.filter,
        in_flight,
    )?;
    let accepted: Vec<&BugFixPair> = records
        .iter()
        .filter_map(|r| match &r.outcome {
            GenOutcome::Accepted { pair } => Some(pair),
            _ => None,
        })
        .collect();
    write_records(out, &accepted)?;
    write_records(audit, &records)?;
    let unavailable = records
        .iter()
        .filter(|r| matches!(r.outcome, GenOutcome::LlmUnavailable { .. }))
        .count();
    println!(
        "{} candidate(s), {} accepted, {} not accepted",
        records.len(),
        accepted.len(),
        records.len() - accepted.len()
    );
    if unavailable > 0 {
        return Err(fail(
            Kind::Remote,
            format!("LLM endpoint unavailable for {unavailable} candidate(s)"),
        ));
    }
    Ok(())
}

fn build(
    g: &GlobalArgs,
    pairs: &Path,
    out: &Path,
    mode: BuildModeArg,
    p: f64,
    tokenizer: TokenizerArg,
    tokenizer_cmd: Option<String>,
) -> Result<()> {
    let pairs = read_pairs(pairs)?;
    let tok: Box<dyn TokenizerAdapter> = match (tokenizer_cmd, tokenizer) {
        (Some(cmd), _) => Box::new(CommandTokenizer::new(cmd)),
        (None, TokenizerArg::Whitespace) => Box::new(WhitespaceTokenizer),
        (None, TokenizerArg::Bytes) => Box::new(ByteTokenizer),
    };
    let mode = match mode {
        BuildModeArg::Span => BuildMode::SpanMetadata,
        BuildModeArg::Baked => BuildMode::Baked {
            p: MaskRatio::new(p).map_err(|e| fail(Kind::Usage, e.to_string()))?,
            seed: g.seed,
            tokenizer: tok.as_ref(),
        },
    };
    let built = build_samples(&pairs, &mode);
    write_records(out, &built.samples)?;
    for s in &built.skipped {
        eprintln!("skipped pair {}: {}", s.index, s.reason);
    }
    println!(
        "built {} sample(s); skipped {}",
        built.samples.len(),
        built.skipped.len()
    );
    Ok(())
}

fn diffstats(pairs: &Path, csv_path: Option<&Path>) -> Result<()> {
    let pairs = read_pairs(pairs)?;
    let h = diff_distribution_report(&pairs);
    let rows = h.rows();
    println!(
        "{:>10} {:>8} {:>9} {:>10}",
        "diff_lines", "count", "fraction", "cumulative"
    );
    for r in &rows {
        println!(
            "{:>10} {:>8} {:>9.4} {:>10.4}",
            r.diff_lines, r.count, r.fraction, r.cumulative_fraction
        );
    }
    let below: usize = h.bins.range(..5).map(|(_, c)| c).sum();
    println!(
        "pairs with fewer than 5 diff lines: {:.4} ({below}/{})",
        h.fraction_below(5),
        h.total
    );
    if let Some(path) = csv_path {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &rows {
            w.serialize(r)?;
        }
        write_atomic(path, &w.into_inner()?)?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct Prediction {
    id: String,
    prediction: String,
}

fn evaluate(
    g: &GlobalArgs,
    predictions: &Path,
    evalset: &Path,
    out: &Path,
    report: &Path,
) -> Result<()> {
    let preds: Vec<Prediction> = read_records(predictions)?;
    let cases: Vec<EvalCase> = read_records(evalset)?;
    let mut by_id = HashMap::new();
    for p in &preds {
        if by_id.insert(p.id.as_str(), p.prediction.as_str()).is_some() {
            return Err(fail(
                Kind::Data,
                format!("duplicate prediction id `{}`", p.id),
            ));
        }
    }
    let dialect = g.dialect;
    let results: Vec<CaseResult> = cases
        .par_iter()
        .map(|case| {
            let outcome = match PreparedCase::new(case, dialect) {
                Err(e) => CaseOutcome::Invalid { invalid: e.0 },
                Ok(prepared) => CaseOutcome::Judged(match by_id.get(case.id.as_str()) {
                    Some(pred) => prepared.judge(pred, dialect),
                    None => sqlfix_core::eval::Verdict::Different {
                        summary: "no prediction".into(),
                    },
                }),
            };
            CaseResult {
                id: case.id.clone(),
                category: case.category.clone(),
                outcome,
            }
        })
        .collect();
    let rep = accuracy_report(&results);
    write_records(out, &results)?;
    let mut text = serde_json::to_string_pretty(&rep)?;
    text.push('\n');
    write_atomic(report, text.as_bytes())?;
    match rep.overall.accuracy {
        Some(a) => println!(
            "accuracy {a:.4} ({}/{}); {} invalid case(s)",
            rep.overall.equivalent,
            rep.overall.total,
            rep.invalid_cases.len()
        ),
        None => println!("no valid case; {} invalid case(s)", rep.invalid_cases.len()),
    }
    Ok(())
}

fn review(
    g: &GlobalArgs,
    pairs: &Path,
    rate: f64,
    gate: f64,
    decisions: Option<&Path>,
) -> Result<()> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(fail(Kind::Usage, "--sample-rate must be in (0, 1]"));
    }
    if !(0.0..=1.0).contains(&gate) {
        return Err(fail(Kind::Usage, "--gate must be in [0, 1]"));
    }
    let pairs = read_pairs(pairs)?;
    let selected = select_for_review(pairs.len(), rate, g.seed);
    let summary = run_review(&pairs, &selected, io::stdin().lock(), io::stdout().lock())?;
    if let Some(path) = decisions {
        write_records(path, &summary.decisions)?;
    }
    let Some(rate) = summary.pass_rate() else {
        return Err(fail(Kind::Data, "no pair was reviewed"));
    };
    let verdict = if rate >= gate { "PASS" } else { "FAIL" };
    let mut stdout = io::stdout().lock();
    writeln!(
        stdout,
        "pass rate {rate:.4} ({}/{}), gate {gate}: {verdict}",
        summary.accepted(),
        summary.reviewed()
    )?;
    if rate < gate {
        return Err(fail(
            Kind::Gate,
            format!("pass rate {rate:.4} is below the gate {gate}"),
        ));
    }
    Ok(())
}
