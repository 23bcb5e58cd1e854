//! Dataset × variant × strategy comparison tables.
//!
//! Every cell is tuned by grid search and scored by cross-validation. Per
//! dataset row, a cell wins when its accuracy is strictly the best of the
//! row, ties when it shares the best accuracy, and loses otherwise (a failed
//! cell always loses).

use std::fmt::Write as _;

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use nhca::evaluation::{tune_and_validate, GridSpec, Protocol};
use nhca::{HyperParams, LabeledDataset, Strategy, Variant};

pub const SCHEMA: u32 = 1;

/// Accuracies closer than this count as equal when ranking cells.
const TIE_EPS: f64 = 1e-9;

pub struct Dataset {
    pub name: String,
    pub data: LabeledDataset<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Loss,
    Tie,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub win: usize,
    pub loss: usize,
    pub tie: usize,
}

impl Tally {
    fn add(&mut self, o: Outcome) {
        match o {
            Outcome::Win => self.win += 1,
            Outcome::Loss => self.loss += 1,
            Outcome::Tie => self.tie += 1,
        }
    }
}

impl std::fmt::Display for Tally {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}-{}", self.win, self.loss, self.tie)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub mean_accuracy: f64,
    pub std_dev: f64,
    pub train_time_seconds: f64,
    pub per_fold_accuracy: Vec<f64>,
    pub validation_accuracy: f64,
    pub params: HyperParams<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub dataset: String,
    pub variant: Variant,
    pub strategy: Strategy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<CellResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub outcome: Outcome,
}

impl Cell {
    fn accuracy(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.mean_accuracy)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Average {
    pub variant: Variant,
    pub strategy: Strategy,
    /// Over datasets where the cell succeeded; `None` if none did.
    pub mean_accuracy: Option<f64>,
    pub std_dev: Option<f64>,
    pub train_time_seconds: Option<f64>,
    /// Column W-L-T summed over dataset rows.
    pub wlt: Tally,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub kernel: String,
    pub seed: u64,
    pub folds: usize,
    pub datasets: Vec<String>,
    pub columns: Vec<(Variant, Strategy)>,
    pub cells: Vec<Cell>,
    pub averages: Vec<Average>,
    /// Per dataset row, the tally of the row's cells.
    pub row_wlt: Vec<(String, Tally)>,
    /// Variants compared within each (dataset, strategy).
    pub variant_wlt: Vec<(Variant, Tally)>,
    /// Strategies compared within each (dataset, variant).
    pub strategy_wlt: Vec<(Strategy, Tally)>,
}

pub struct Config {
    pub variants: Vec<Variant>,
    pub strategies: Vec<Strategy>,
    pub base: HyperParams<f64>,
    pub grid: GridSpec,
    pub protocol: Protocol,
    pub kernel_name: String,
}

impl Config {
    pub fn columns(&self) -> Vec<(Variant, Strategy)> {
        self.variants
            .iter()
            .flat_map(|&v| self.strategies.iter().map(move |&s| (v, s)))
            .collect()
    }
}

/// Win/loss/tie of each entry against the others; `None` always loses.
fn rank(accs: &[Option<f64>]) -> Vec<Outcome> {
    let best = accs.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let at_best = accs
        .iter()
        .filter(|a| a.is_some_and(|a| a >= best - TIE_EPS))
        .count();
    accs.iter()
        .map(|a| match a {
            Some(a) if *a >= best - TIE_EPS => {
                if at_best == 1 {
                    Outcome::Win
                } else {
                    Outcome::Tie
                }
            }
            _ => Outcome::Loss,
        })
        .collect()
}

pub fn run(datasets: &[Dataset], config: &Config) -> Report {
    let columns = config.columns();
    let jobs: Vec<(usize, Variant, Strategy)> = (0..datasets.len())
        .flat_map(|d| columns.iter().map(move |&(v, s)| (d, v, s)))
        .collect();
    let mut cells: Vec<Cell> = jobs
        .par_iter()
        .map(|&(d, variant, strategy)| {
            let ds = &datasets[d];
            let protocol = Protocol {
                variant,
                strategy,
                ..config.protocol
            };
            let (result, error) =
                match tune_and_validate(&ds.data, &protocol, &config.base, &config.grid) {
                    Ok((tuned, cv)) => (
                        Some(CellResult {
                            mean_accuracy: cv.mean_accuracy,
                            std_dev: cv.std_dev,
                            train_time_seconds: cv.train_time_seconds,
                            per_fold_accuracy: cv.per_fold_accuracy,
                            validation_accuracy: tuned.validation_accuracy,
                            params: cv.params_used,
                            converged: cv.converged,
                        }),
                        None,
                    ),
                    Err(e) => {
                        warn!("{} {variant} {strategy}: {e}", ds.name);
                        (None, Some(e.to_string()))
                    }
                };
            Cell {
                dataset: ds.name.clone(),
                variant,
                strategy,
                result,
                error,
                outcome: Outcome::Loss,
            }
        })
        .collect();

    let ncol = columns.len();
    let mut row_wlt = Vec::new();
    for (d, ds) in datasets.iter().enumerate() {
        let row = &mut cells[d * ncol..(d + 1) * ncol];
        let accs: Vec<Option<f64>> = row.iter().map(Cell::accuracy).collect();
        let mut tally = Tally::default();
        for (cell, o) in row.iter_mut().zip(rank(&accs)) {
            cell.outcome = o;
            tally.add(o);
        }
        row_wlt.push((ds.name.clone(), tally));
    }

    let find = |d: usize, v: Variant, s: Strategy| -> &Cell {
        let c = columns.iter().position(|&col| col == (v, s)).unwrap();
        &cells[d * ncol + c]
    };

    let mut variant_wlt: Vec<(Variant, Tally)> =
        config.variants.iter().map(|&v| (v, Tally::default())).collect();
    let mut strategy_wlt: Vec<(Strategy, Tally)> =
        config.strategies.iter().map(|&s| (s, Tally::default())).collect();
    for d in 0..datasets.len() {
        for &s in &config.strategies {
            let accs: Vec<Option<f64>> =
                config.variants.iter().map(|&v| find(d, v, s).accuracy()).collect();
            for ((_, t), o) in variant_wlt.iter_mut().zip(rank(&accs)) {
                t.add(o);
            }
        }
        for &v in &config.variants {
            let accs: Vec<Option<f64>> =
                config.strategies.iter().map(|&s| find(d, v, s).accuracy()).collect();
            for ((_, t), o) in strategy_wlt.iter_mut().zip(rank(&accs)) {
                t.add(o);
            }
        }
    }

    let averages = columns
        .iter()
        .enumerate()
        .map(|(c, &(variant, strategy))| {
            let column: Vec<&Cell> = (0..datasets.len()).map(|d| &cells[d * ncol + c]).collect();
            let ok: Vec<&CellResult> = column.iter().filter_map(|c| c.result.as_ref()).collect();
            let mean = |f: fn(&CellResult) -> f64| {
                (!ok.is_empty()).then(|| ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64)
            };
            let mut wlt = Tally::default();
            column.iter().for_each(|c| wlt.add(c.outcome));
            Average {
                variant,
                strategy,
                mean_accuracy: mean(|r| r.mean_accuracy),
                std_dev: mean(|r| r.std_dev),
                train_time_seconds: mean(|r| r.train_time_seconds),
                wlt,
            }
        })
        .collect();

    Report {
        schema: SCHEMA,
        kernel: config.kernel_name.clone(),
        seed: config.protocol.seed,
        folds: config.protocol.folds,
        datasets: datasets.iter().map(|d| d.name.clone()).collect(),
        columns,
        cells,
        averages,
        row_wlt,
        variant_wlt,
        strategy_wlt,
    }
}

impl Report {
    pub fn succeeded(&self) -> usize {
        self.cells.iter().filter(|c| c.result.is_some()).count()
    }

    fn column_header(&self) -> Vec<String> {
        self.columns
            .iter()
            .map(|(v, s)| format!("{} {}", v.display_name(), s.name().to_uppercase()))
            .collect()
    }

    /// Each row is three lines: accuracy (%), SD (%) and mean fit seconds.
    pub fn to_text(&self) -> String {
        let name_w = self.datasets.iter().map(String::len).max().unwrap_or(0).max(7) + 1;
        let label_w = name_w + 5;
        let header = self.column_header();
        let width = header.iter().map(String::len).max().unwrap_or(8).max(9) + 2;
        let mut out = String::new();
        let _ = write!(out, "{:<label_w$}", "Dataset");
        for h in &header {
            let _ = write!(out, "{h:>width$}");
        }
        let _ = writeln!(out, "{:>9}", "W-L-T");
        let ncol = self.columns.len();
        let fmt_opt = |v: Option<f64>, scale: f64, prec: usize| match v {
            Some(v) => format!("{:.prec$}", v * scale),
            None => "—".to_string(),
        };
        let write_block = |out: &mut String, name: &str, vals: &[[Option<f64>; 3]], tally: String| {
            for (line, (label, scale, prec)) in
                [("Acc", 100.0, 2), ("SD", 100.0, 2), ("Time", 1.0, 4)].iter().enumerate()
            {
                let first = if line == 0 { name } else { "" };
                let _ = write!(out, "{first:<name_w$}{label:<5}");
                for v in vals {
                    let _ = write!(out, "{:>width$}", fmt_opt(v[line], *scale, *prec));
                }
                if line == 0 {
                    let _ = write!(out, "{tally:>9}");
                }
                out.push('\n');
            }
        };
        for (d, name) in self.datasets.iter().enumerate() {
            let vals: Vec<[Option<f64>; 3]> = self.cells[d * ncol..(d + 1) * ncol]
                .iter()
                .map(|c| match &c.result {
                    Some(r) => [Some(r.mean_accuracy), Some(r.std_dev), Some(r.train_time_seconds)],
                    None => [None; 3],
                })
                .collect();
            write_block(&mut out, name, &vals, self.row_wlt[d].1.to_string());
        }
        let avg: Vec<[Option<f64>; 3]> = self
            .averages
            .iter()
            .map(|a| [a.mean_accuracy, a.std_dev, a.train_time_seconds])
            .collect();
        write_block(&mut out, "Average", &avg, String::new());
        let _ = write!(out, "{:<label_w$}", "W-L-T");
        for a in &self.averages {
            let _ = write!(out, "{:>width$}", a.wlt.to_string());
        }
        out.push_str("\n\n");
        let _ = writeln!(
            out,
            "Variants (per dataset and strategy): {}",
            self.variant_wlt
                .iter()
                .map(|(v, t)| format!("{} {t}", v.display_name()))
                .collect::<Vec<_>>()
                .join(", ")
        );
        let _ = writeln!(
            out,
            "Strategies (per dataset and variant): {}",
            self.strategy_wlt
                .iter()
                .map(|(s, t)| format!("{} {t}", s.name().to_uppercase()))
                .collect::<Vec<_>>()
                .join(", ")
        );
        for c in self.cells.iter().filter(|c| c.error.is_some()) {
            let _ = writeln!(
                out,
                "failed: {} {} {}: {}",
                c.dataset,
                c.variant,
                c.strategy,
                c.error.as_deref().unwrap_or_default()
            );
        }
        out
    }

    /// One line per cell; accuracy and SD in percent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "dataset,variant,strategy,accuracy,sd,time_seconds,outcome,fold_accuracies,error\n",
        );
        for c in &self.cells {
            let outcome = match c.outcome {
                Outcome::Win => "win",
                Outcome::Loss => "loss",
                Outcome::Tie => "tie",
            };
            match &c.result {
                Some(r) => {
                    let folds: Vec<String> =
                        r.per_fold_accuracy.iter().map(|a| format!("{a:.6}")).collect();
                    let _ = writeln!(
                        out,
                        "{},{},{},{:.4},{:.4},{:.6},{outcome},{},",
                        c.dataset,
                        c.variant,
                        c.strategy,
                        r.mean_accuracy * 100.0,
                        r.std_dev * 100.0,
                        r.train_time_seconds,
                        folds.join(";")
                    );
                }
                None => {
                    let err = c.error.as_deref().unwrap_or_default().replace(['"', ','], " ");
                    let _ = writeln!(
                        out,
                        "{},{},{},,,,{outcome},,\"{err}\"",
                        c.dataset, c.variant, c.strategy
                    );
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
