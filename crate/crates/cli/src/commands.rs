//! Command implementations.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use dualmem_core::eval::data::{parse_query_line, read_queries};
use dualmem_core::eval::metrics::reports_to_csv;
use dualmem_core::eval::sweep::rows_to_csv;
use dualmem_core::eval::{
    evaluate, gate_stats, generate, latency_report, sweep, GoldSet, QueryRecord, SweepGrid,
    SyntheticSpec,
};
use dualmem_core::{CorpusIndex, OutputOptions, PathChoice, RetrievalResult, Retriever, RunConfig};
use serde_json::{json, Value};

use crate::args::{Command, Shared, SweepArgs, SynthArgs};

/// Exit code 1 for bad input, 2 when nothing could be computed.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Total(String),
}

impl From<dualmem_core::Error> for Failure {
    fn from(e: dualmem_core::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

pub fn run(command: Command) -> Outcome {
    let name = command.name();
    match command {
        Command::Index(shared) => cmd_index(&shared),
        Command::Query(shared) => cmd_query(name, &shared),
        Command::Eval(shared) => cmd_eval(name, &shared),
        Command::Sweep(args) => cmd_sweep(name, &args),
        Command::Synth(args) => cmd_synth(name, &args),
        Command::GateStats(shared) => cmd_gate_stats(name, &shared),
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    path.as_deref()
        .ok_or_else(|| Failure::Input(format!("--{flag} is required (flag or config key)")))
}

fn with_context<T>(path: &Path, r: dualmem_core::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_corpus(cfg: &RunConfig) -> Result<CorpusIndex, Failure> {
    let path = required(&cfg.corpus, "corpus")?;
    let index = with_context(path, CorpusIndex::ingest(path))?;
    log::info!(
        "loaded {} memories of dimension {}",
        index.len(),
        index.dimension()
    );
    Ok(index)
}

fn load_queries(cfg: &RunConfig) -> Result<Vec<QueryRecord>, Failure> {
    let path = required(&cfg.queries, "queries")?;
    let queries = with_context(path, read_queries(path))?;
    if queries.is_empty() {
        return Err(Failure::Input(format!("{}: no queries", path.display())));
    }
    Ok(queries)
}

fn configure_threads(cfg: &RunConfig) {
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not set thread count: {e}");
        }
    }
}

fn warn_on_overrun(cfg: &RunConfig) {
    let rec = cfg.recollect_params();
    for r in rec.budget_overruns() {
        log::warn!(
            "round {r} retrieves {} candidates per beam, more than K = {}",
            dualmem_core::recollect::round_budget(&rec, r),
            rec.final_k
        );
    }
}

fn retriever<'a>(index: &'a CorpusIndex, cfg: &RunConfig) -> Retriever<'a> {
    Retriever::new(index, cfg.gate_params(), cfg.recollect_params()).with_path(cfg.force_path)
}

fn output_options(cfg: &RunConfig, shared: &Shared) -> OutputOptions {
    OutputOptions {
        trace: cfg.trace,
        trace_vectors: false,
        omit_timing: shared.no_timing,
    }
}

fn manifest(command: &str, cfg: &RunConfig, extra: Value) -> Value {
    let mut m = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "gate": cfg.gate_params(),
        "recollect": cfg.recollect_params(),
    });
    if let (Some(obj), Value::Object(more)) = (m.as_object_mut(), extra) {
        obj.extend(more);
    }
    m
}

fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn out_dir(cfg: &RunConfig) -> Result<Option<PathBuf>, Failure> {
    match &cfg.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Ok(Some(dir.clone()))
        }
        None => Ok(None),
    }
}

fn cmd_index(shared: &Shared) -> Outcome {
    let cfg = shared.resolve()?;
    let index = load_corpus(&cfg)?;
    let max_unit_error = (0..index.len())
        .map(|row| (dualmem_core::vector::norm(index.embedding(row)) - 1.0).abs())
        .fold(0.0, f64::max);
    let report = json!({
        "records": index.len(),
        "dimension": index.dimension(),
        "input_norms": index.input_norms(),
        "max_unit_norm_error": max_unit_error,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("json values serialize")
    );
    Ok(())
}

/// A query line, or the reason it could not be read.
enum Line {
    Query(QueryRecord),
    Bad { line: usize, message: String },
}

/// Reads queries leniently: each bad line becomes an error entry instead of
/// aborting the run.
fn read_query_lines(path: &Path) -> Result<Vec<Line>, Failure> {
    let reader = BufReader::new(
        File::open(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?,
    );
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(match parse_query_line(&line, i + 1) {
            Ok(q) => Line::Query(q),
            Err(e) => Line::Bad {
                line: i + 1,
                message: e.to_string(),
            },
        });
    }
    Ok(out)
}

fn cmd_query(command: &str, shared: &Shared) -> Outcome {
    let cfg = shared.resolve()?;
    configure_threads(&cfg);
    warn_on_overrun(&cfg);
    let index = load_corpus(&cfg)?;
    let path = required(&cfg.queries, "queries")?;
    let lines = read_query_lines(path)?;
    if lines.is_empty() {
        return Err(Failure::Input(format!("{}: no queries", path.display())));
    }

    let batch: Vec<_> = lines
        .iter()
        .filter_map(|l| match l {
            Line::Query(q) => Some(q.to_query()),
            Line::Bad { .. } => None,
        })
        .collect();
    let mut results = retriever(&index, &cfg).retrieve_batch(&batch).into_iter();
    let opts = output_options(&cfg, shared);

    let mut sink: Box<dyn Write> = match &cfg.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut succeeded = 0;
    for line in &lines {
        let value = match line {
            Line::Query(q) => match results.next().expect("one result per query") {
                Ok(r) => {
                    succeeded += 1;
                    r.to_json(opts)
                }
                Err(e) => json!({ "query_id": q.query_id, "error": e.to_string() }),
            },
            Line::Bad { line, message } => json!({ "line": line, "error": message }),
        };
        writeln!(sink, "{value}")?;
    }
    sink.flush()?;

    let m = manifest(
        command,
        &cfg,
        json!({ "queries": lines.len(), "succeeded": succeeded, "no_timing": shared.no_timing }),
    );
    match &cfg.out {
        Some(p) => write_json(&p.with_extension("manifest.json"), &m)?,
        None => log::info!("manifest: {m}"),
    }
    if succeeded == 0 {
        return Err(Failure::Total("no query succeeded".into()));
    }
    Ok(())
}

fn load_gold(
    cfg: &RunConfig,
    queries: &[QueryRecord],
    index: &CorpusIndex,
) -> Result<GoldSet, Failure> {
    let gold = match &cfg.gold {
        Some(p) => with_context(p, GoldSet::read(p))?,
        None => GoldSet::from_queries(queries),
    };
    if gold.is_empty() {
        return Err(Failure::Input(
            "missing gold: pass --gold or include `gold` in the query lines".into(),
        ));
    }
    gold.validate(index)?;
    Ok(gold)
}

fn jsonl(
    results: &[dualmem_core::Result<RetrievalResult>],
    queries: &[QueryRecord],
    opts: OutputOptions,
) -> String {
    let mut out = String::new();
    for (q, r) in queries.iter().zip(results) {
        let v = match r {
            Ok(r) => r.to_json(opts),
            Err(e) => json!({ "query_id": q.query_id, "error": e.to_string() }),
        };
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

fn cmd_eval(command: &str, shared: &Shared) -> Outcome {
    let cfg = shared.resolve()?;
    configure_threads(&cfg);
    warn_on_overrun(&cfg);
    let index = load_corpus(&cfg)?;
    let queries = load_queries(&cfg)?;
    let gold = load_gold(&cfg, &queries, &index)?;
    let r = retriever(&index, &cfg);
    let (report, results) = evaluate(&r, &queries, &gold, &cfg.recall_at);
    if report.errors == report.queries {
        return Err(Failure::Total("every query failed".into()));
    }

    let timing = !shared.no_timing;
    let mut summary = serde_json::to_value(&report).expect("report serializes");
    if !timing {
        summary
            .as_object_mut()
            .expect("report is an object")
            .remove("mean_wall_us");
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("json values serialize")
    );

    if let Some(dir) = out_dir(&cfg)? {
        write_json(&dir.join("metrics.json"), &summary)?;
        fs::write(
            dir.join("metrics.csv"),
            reports_to_csv(&[report], &cfg.recall_at, timing),
        )?;
        fs::write(
            dir.join("results.jsonl"),
            jsonl(&results, &queries, output_options(&cfg, shared)),
        )?;
        let ok: Vec<RetrievalResult> = results.into_iter().filter_map(Result::ok).collect();
        let latency = latency_report(&ok, index.len(), &r.gate, &r.recollect);
        if !latency.counters_exact() {
            log::warn!(
                "{} results disagree with the cost model",
                latency.counter_mismatches.len()
            );
        }
        let mut latency = serde_json::to_value(&latency).expect("report serializes");
        if !timing {
            for path in ["familiarity", "recollection"] {
                if let Some(Value::Object(stats)) = latency.get_mut(path) {
                    stats.retain(|k, _| !k.ends_with("_us"));
                }
            }
        }
        write_json(&dir.join("latency.json"), &latency)?;
        write_json(
            &dir.join("manifest.json"),
            &manifest(command, &cfg, json!({ "no_timing": shared.no_timing })),
        )?;
    }
    Ok(())
}

fn cmd_sweep(command: &str, args: &SweepArgs) -> Outcome {
    let cfg = args.shared.resolve()?;
    configure_threads(&cfg);
    let grid = SweepGrid::from_file(&args.grid)?;
    let index = load_corpus(&cfg)?;
    let queries = load_queries(&cfg)?;
    let gold = load_gold(&cfg, &queries, &index)?;
    let rows = sweep(&index, &queries, &gold, &cfg, &grid)?;
    if rows.iter().all(|r| r.errors == queries.len()) {
        return Err(Failure::Total("every query failed in every cell".into()));
    }
    let csv = rows_to_csv(&rows, &cfg.recall_at, !args.shared.no_timing);
    match out_dir(&cfg)? {
        Some(dir) => {
            fs::write(dir.join("sweep.csv"), &csv)?;
            write_json(
                &dir.join("manifest.json"),
                &manifest(
                    command,
                    &cfg,
                    json!({ "grid": grid, "cells": rows.len(), "no_timing": args.shared.no_timing }),
                ),
            )?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_synth(command: &str, args: &SynthArgs) -> Outcome {
    let mut spec = match &args.spec {
        Some(p) => SyntheticSpec::from_file(p)?,
        None => SyntheticSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let data = generate(&spec)?;
    data.write(&args.out)?;
    write_json(
        &args.out.join("manifest.json"),
        &json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "spec": spec,
        }),
    )?;
    println!(
        "wrote {} memories, {} queries to {}",
        data.records.len(),
        data.queries.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_gate_stats(command: &str, shared: &Shared) -> Outcome {
    let cfg = shared.resolve()?;
    configure_threads(&cfg);
    let index = load_corpus(&cfg)?;
    let queries = load_queries(&cfg)?;
    // The gate signal does not depend on the path taken; skip recollection work.
    let r = retriever(&index, &cfg).with_path(PathChoice::Familiarity);
    let batch: Vec<_> = queries.iter().map(QueryRecord::to_query).collect();
    let mut ok = Vec::new();
    for (q, res) in queries.iter().zip(r.retrieve_batch(&batch)) {
        match res {
            Ok(res) => ok.push(res),
            Err(e) => log::warn!("{}: {e}", q.query_id),
        }
    }
    if ok.is_empty() {
        return Err(Failure::Total("every query failed".into()));
    }
    let stats = gate_stats(&ok);
    let summary = json!({
        "queries": stats.rows.len(),
        "familiarity": stats.familiarity,
        "recollection": stats.recollection,
        "mean": stats.mean,
        "entropy": stats.entropy,
    });
    match out_dir(&cfg)? {
        Some(dir) => {
            fs::write(dir.join("gate_stats.csv"), stats.to_csv())?;
            write_json(&dir.join("summary.json"), &summary)?;
            write_json(
                &dir.join("manifest.json"),
                &manifest(command, &cfg, json!({})),
            )?;
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("json values serialize")
            );
        }
        None => {
            print!("{}", stats.to_csv());
            eprintln!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("json values serialize")
            );
        }
    }
    Ok(())
}
