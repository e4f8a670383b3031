//! Grid sweeps over gate and recollection hyperparameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{parse_list, read_kv, Entry, RunConfig};
use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::eval::data::{GoldSet, QueryRecord};
use crate::eval::metrics::{evaluate, recall_key, RecallTable};
use crate::retriever::Retriever;

/// Values per axis. An empty axis keeps the base configuration's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub alpha: Vec<f64>,
    pub tau: Vec<f64>,
    pub beam: Vec<usize>,
    pub fanout: Vec<usize>,
    pub lambda: Vec<f64>,
    pub theta_high: Vec<f64>,
    pub theta_low: Vec<f64>,
}

/// One grid cell's parameter values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub alpha: f64,
    pub tau: f64,
    pub beam: usize,
    pub fanout: usize,
    pub lambda: f64,
    pub theta_high: f64,
    pub theta_low: f64,
}

impl Cell {
    fn apply(&self, base: &RunConfig) -> RunConfig {
        RunConfig {
            alpha: self.alpha,
            tau: self.tau,
            beam: self.beam,
            fanout: self.fanout,
            lambda: self.lambda,
            theta_high: self.theta_high,
            theta_low: self.theta_low,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: Cell,
    pub recall: RecallTable,
    pub mean_wall_us: f64,
    pub familiarity: usize,
    pub recollection: usize,
    pub errors: usize,
}

impl SweepGrid {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path.display().to_string();
        let mut grid = SweepGrid::default();
        for entry in read_kv(path)? {
            grid.apply(&entry, &name)?;
        }
        Ok(grid)
    }

    pub fn apply(&mut self, entry: &Entry, source_name: &str) -> Result<()> {
        match entry.key.as_str() {
            "alpha" => self.alpha = parse_list(entry, source_name)?,
            "tau" => self.tau = parse_list(entry, source_name)?,
            "beam" => self.beam = parse_list(entry, source_name)?,
            "fanout" => self.fanout = parse_list(entry, source_name)?,
            "lambda" => self.lambda = parse_list(entry, source_name)?,
            "theta_high" => self.theta_high = parse_list(entry, source_name)?,
            "theta_low" => self.theta_low = parse_list(entry, source_name)?,
            other => {
                return Err(Error::Config {
                    source_name: source_name.to_string(),
                    line: entry.line,
                    message: format!("unknown sweep axis `{other}`"),
                })
            }
        }
        Ok(())
    }

    /// Cartesian product in axis order alpha, tau, beam, fanout, lambda,
    /// theta_high, theta_low (the last axis varies fastest).
    pub fn cells(&self, base: &RunConfig) -> Vec<Cell> {
        fn or<T: Copy>(axis: &[T], default: T) -> Vec<T> {
            if axis.is_empty() {
                vec![default]
            } else {
                axis.to_vec()
            }
        }
        let mut cells = Vec::new();
        for &alpha in &or(&self.alpha, base.alpha) {
            for &tau in &or(&self.tau, base.tau) {
                for &beam in &or(&self.beam, base.beam) {
                    for &fanout in &or(&self.fanout, base.fanout) {
                        for &lambda in &or(&self.lambda, base.lambda) {
                            for &theta_high in &or(&self.theta_high, base.theta_high) {
                                for &theta_low in &or(&self.theta_low, base.theta_low) {
                                    cells.push(Cell {
                                        alpha,
                                        tau,
                                        beam,
                                        fanout,
                                        lambda,
                                        theta_high,
                                        theta_low,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        cells
    }
}

/// Evaluates every cell of `grid` in order. Cells run sequentially; each
/// cell's batch may itself run in parallel.
pub fn sweep(
    index: &CorpusIndex,
    queries: &[QueryRecord],
    gold: &GoldSet,
    base: &RunConfig,
    grid: &SweepGrid,
) -> Result<Vec<SweepRow>> {
    let cells = grid.cells(base);
    if cells.is_empty() {
        return Err(Error::InvalidParams("empty sweep grid".into()));
    }
    cells
        .into_iter()
        .map(|cell| {
            let cfg = cell.apply(base);
            cfg.validate()?;
            let retriever = Retriever::new(index, cfg.gate_params(), cfg.recollect_params())
                .with_path(cfg.force_path);
            let (report, _) = evaluate(&retriever, queries, gold, &cfg.recall_at);
            Ok(SweepRow {
                cell,
                recall: report.overall,
                mean_wall_us: report.mean_wall_us,
                familiarity: report.familiarity,
                recollection: report.recollection,
                errors: report.errors,
            })
        })
        .collect()
}

/// Flat table, one row per cell. `timing = false` drops the wall-time column
/// so the table is reproducible byte for byte.
pub fn rows_to_csv(rows: &[SweepRow], cutoffs: &[usize], timing: bool) -> String {
    let mut out = String::from("alpha,tau,beam,fanout,lambda,theta_high,theta_low");
    for k in cutoffs {
        out.push_str(&format!(",{}", recall_key(*k)));
    }
    out.push_str(",familiarity,recollection,errors");
    if timing {
        out.push_str(",mean_wall_us");
    }
    out.push('\n');
    for r in rows {
        let c = &r.cell;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            c.alpha, c.tau, c.beam, c.fanout, c.lambda, c.theta_high, c.theta_low
        ));
        for k in cutoffs {
            out.push_str(&format!(
                ",{:.6}",
                r.recall.get(&recall_key(*k)).copied().unwrap_or(0.0)
            ));
        }
        out.push_str(&format!(
            ",{},{},{}",
            r.familiarity, r.recollection, r.errors
        ));
        if timing {
            out.push_str(&format!(",{:.1}", r.mean_wall_us));
        }
        out.push('\n');
    }
    out
}
