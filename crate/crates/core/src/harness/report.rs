//! CSV persistence, per-question tables, improvement summaries and
//! gnuplot data files.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{Mode, ResultRow};
use crate::error::{Error, Result};

/// (two − one) / one · 100; `None` when `one` is zero.
pub fn improvement_pct(two: f64, one: f64) -> Option<f64> {
    (one != 0.0).then(|| (two - one) / one * 100.0)
}

pub fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(HEADER)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if let Some(missing) = HEADER.iter().find(|h| !headers.iter().any(|x| x == **h)) {
        return Err(Error::MissingColumn(missing.to_string()));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

const HEADER: [&str; 19] = [
    "dataset",
    "algorithm",
    "budget",
    "split_ratio",
    "timestep",
    "epsilon",
    "mode",
    "profit_mean",
    "profit_stderr",
    "seed_set_size",
    "diffusion_rounds",
    "wall_time_seconds",
    "master_seed",
    "samples",
    "replications",
    "phase_two",
    "improvement_pct",
    "notes",
    "error",
];

/// Per dataset and algorithm: how often and by how much two-phase beat
/// single-phase.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImprovementSummary {
    pub dataset: String,
    pub algorithm: String,
    pub epsilon: Option<f64>,
    pub cells: usize,
    pub positive: usize,
    pub fraction_positive: f64,
    pub mean_pct: f64,
    pub median_pct: f64,
    pub max_pct: f64,
}

/// Summarizes the improvements in a master CSV.
pub fn report_improvements(
    master_csv: &Path,
    timestep: Option<usize>,
) -> Result<Vec<ImprovementSummary>> {
    Ok(summarize_improvements(&read_rows(master_csv)?, timestep))
}

/// Improvements recomputed from the profit columns, optionally restricted
/// to one timestep. Cells without a usable single-phase profit are left out.
pub fn summarize_improvements(
    rows: &[ResultRow],
    timestep: Option<usize>,
) -> Vec<ImprovementSummary> {
    type Key = (String, String, Option<u64>);
    let key = |r: &ResultRow| -> Key {
        (
            r.dataset.clone(),
            r.algorithm.clone(),
            r.epsilon.map(f64::to_bits),
        )
    };
    let mut groups: Vec<(Key, Vec<f64>)> = Vec::new();
    for two in rows
        .iter()
        .filter(|r| r.mode == Mode::TwoPhase && r.error.is_empty())
    {
        if timestep.is_some_and(|t| two.timestep != Some(t)) {
            continue;
        }
        let one = rows.iter().find(|r| {
            r.mode == Mode::Single
                && key(r) == key(two)
                && r.budget == two.budget
                && r.error.is_empty()
        });
        let Some(pct) = one.and_then(|one| improvement_pct(two.profit_mean?, one.profit_mean?))
        else {
            continue;
        };
        let k = key(two);
        match groups.iter_mut().find(|g| g.0 == k) {
            Some(g) => g.1.push(pct),
            None => groups.push((k, vec![pct])),
        }
    }
    groups.sort_by(|a, b| a.0.cmp(&b.0));
    groups
        .into_iter()
        .map(|((dataset, algorithm, eps), mut v)| {
            v.sort_by(f64::total_cmp);
            let positive = v.iter().filter(|&&x| x > 0.0).count();
            let mid = v.len() / 2;
            let median = if v.len() % 2 == 1 {
                v[mid]
            } else {
                (v[mid - 1] + v[mid]) / 2.0
            };
            ImprovementSummary {
                dataset,
                algorithm,
                epsilon: eps.map(f64::from_bits),
                cells: v.len(),
                positive,
                fraction_positive: positive as f64 / v.len() as f64,
                mean_pct: v.iter().sum::<f64>() / v.len() as f64,
                median_pct: median,
                max_pct: *v.last().expect("non-empty group"),
            }
        })
        .collect()
}

/// A derived table: which rows, which columns, grouped into series.
pub struct RqTable {
    pub file: &'static str,
    pub columns: &'static [&'static str],
    /// Columns identifying one plotted line; the remaining leading column
    /// after them is the x axis.
    pub series: &'static [&'static str],
    pub x: &'static str,
    pub y: &'static [&'static str],
    filter: fn(&ResultRow) -> bool,
}

fn two_phase(r: &ResultRow) -> bool {
    r.mode == Mode::TwoPhase
}

fn any(_: &ResultRow) -> bool {
    true
}

fn stochastic(r: &ResultRow) -> bool {
    r.epsilon.is_some()
}

pub const RQ_TABLES: [RqTable; 7] = [
    RqTable {
        file: "rq1_budget",
        columns: &[
            "dataset",
            "algorithm",
            "epsilon",
            "split_ratio",
            "timestep",
            "budget",
            "single_profit",
            "profit_mean",
            "improvement_pct",
        ],
        series: &["algorithm", "epsilon", "split_ratio", "timestep"],
        x: "budget",
        y: &["single_profit", "profit_mean", "improvement_pct"],
        filter: two_phase,
    },
    RqTable {
        file: "rq2_split",
        columns: &[
            "dataset",
            "algorithm",
            "epsilon",
            "budget",
            "timestep",
            "split_ratio",
            "profit_mean",
            "profit_stderr",
        ],
        series: &["algorithm", "epsilon", "budget", "timestep"],
        x: "split_ratio",
        y: &["profit_mean", "profit_stderr"],
        filter: two_phase,
    },
    RqTable {
        file: "rq3_timestep",
        columns: &[
            "dataset",
            "algorithm",
            "epsilon",
            "budget",
            "split_ratio",
            "timestep",
            "profit_mean",
            "profit_stderr",
        ],
        series: &["algorithm", "epsilon", "budget", "split_ratio"],
        x: "timestep",
        y: &["profit_mean", "profit_stderr"],
        filter: two_phase,
    },
    RqTable {
        file: "rq4_seed_size",
        columns: &[
            "dataset",
            "algorithm",
            "epsilon",
            "mode",
            "split_ratio",
            "timestep",
            "budget",
            "seed_set_size",
        ],
        series: &["algorithm", "epsilon", "mode", "split_ratio", "timestep"],
        x: "budget",
        y: &["seed_set_size"],
        filter: any,
    },
    RqTable {
        file: "rq5_rounds",
        columns: &[
            "dataset",
            "algorithm",
            "epsilon",
            "mode",
            "split_ratio",
            "timestep",
            "budget",
            "diffusion_rounds",
        ],
        series: &["algorithm", "epsilon", "mode", "split_ratio", "timestep"],
        x: "budget",
        y: &["diffusion_rounds"],
        filter: any,
    },
    RqTable {
        file: "rq6_time",
        columns: &[
            "dataset",
            "algorithm",
            "epsilon",
            "mode",
            "split_ratio",
            "timestep",
            "budget",
            "wall_time_seconds",
        ],
        series: &["algorithm", "epsilon", "mode", "split_ratio", "timestep"],
        x: "budget",
        y: &["wall_time_seconds"],
        filter: any,
    },
    RqTable {
        file: "rq7_epsilon",
        columns: &[
            "dataset",
            "algorithm",
            "mode",
            "budget",
            "split_ratio",
            "timestep",
            "epsilon",
            "profit_mean",
            "wall_time_seconds",
        ],
        series: &["algorithm", "mode", "budget", "split_ratio", "timestep"],
        x: "epsilon",
        y: &["profit_mean", "wall_time_seconds"],
        filter: stochastic,
    },
];

#[derive(Clone, Debug, PartialEq)]
enum Value {
    Text(String),
    Num(Option<f64>),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Text(s) => s.clone(),
            Value::Num(Some(x)) => x.to_string(),
            Value::Num(None) => String::new(),
        }
    }

    fn cmp(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::Num(a), Value::Num(b)) => match (a, b) {
                (Some(a), Some(b)) => a.total_cmp(b),
                _ => a.is_some().cmp(&b.is_some()),
            },
            (Value::Text(_), Value::Num(_)) => Ordering::Less,
            (Value::Num(_), Value::Text(_)) => Ordering::Greater,
        }
    }
}

fn value(row: &ResultRow, single: Option<f64>, column: &str) -> Value {
    let num = |x: Option<f64>| Value::Num(x);
    match column {
        "dataset" => Value::Text(row.dataset.clone()),
        "algorithm" => Value::Text(row.algorithm.clone()),
        "mode" => Value::Text(match row.mode {
            Mode::Single => "single".into(),
            Mode::TwoPhase => "two_phase".into(),
        }),
        "budget" => num(Some(row.budget)),
        "split_ratio" => num(row.split_ratio),
        "timestep" => num(row.timestep.map(|t| t as f64)),
        "epsilon" => num(row.epsilon),
        "profit_mean" => num(row.profit_mean),
        "profit_stderr" => num(row.profit_stderr),
        "seed_set_size" => num(row.seed_set_size),
        "diffusion_rounds" => num(row.diffusion_rounds),
        "wall_time_seconds" => num(Some(row.wall_time_seconds)),
        "improvement_pct" => num(row.improvement_pct),
        "single_profit" => num(single),
        other => unreachable!("unknown table column {other}"),
    }
}

/// Writes the seven per-question CSVs next to the master CSV.
pub fn write_rq_tables(rows: &[ResultRow], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let single_of = |r: &ResultRow| {
        rows.iter()
            .find(|s| {
                s.mode == Mode::Single
                    && s.dataset == r.dataset
                    && s.algorithm == r.algorithm
                    && s.epsilon == r.epsilon
                    && s.budget == r.budget
            })
            .and_then(|s| s.profit_mean)
    };
    let mut paths = Vec::new();
    for table in &RQ_TABLES {
        let mut records: Vec<Vec<Value>> = rows
            .iter()
            .filter(|r| (table.filter)(r) && r.error.is_empty())
            .map(|r| {
                let single = single_of(r);
                table.columns.iter().map(|c| value(r, single, c)).collect()
            })
            .collect();
        records.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        });
        let path = out_dir.join(format!("{}.csv", table.file));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(table.columns)?;
        for rec in records {
            w.write_record(rec.iter().map(Value::render))?;
        }
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

/// Converts `columns` of a CSV into a whitespace-separated gnuplot file.
///
/// Consecutive rows that agree on `series` form one data block; blocks are
/// separated by two blank lines so `index` selects a series. Empty fields
/// become `NaN`. Returns the number of data lines written.
pub fn emit_plot_data(
    csv_path: &Path,
    dat_path: &Path,
    columns: &[&str],
    series: &[&str],
) -> Result<usize> {
    let mut r = csv::Reader::from_path(csv_path)?;
    let headers = r.headers()?.clone();
    let index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let cols: Vec<usize> = columns.iter().map(|c| index(c)).collect::<Result<_>>()?;
    let keys: Vec<usize> = series.iter().map(|c| index(c)).collect::<Result<_>>()?;

    let mut out = BufWriter::new(File::create(dat_path)?);
    writeln!(
        out,
        "# source: {}",
        csv_path
            .file_name()
            .map_or_else(String::new, |f| f.to_string_lossy().into_owned())
    )?;
    if !series.is_empty() {
        writeln!(out, "# series: {}", series.join(" "))?;
    }
    writeln!(out, "# {}", columns.join(" "))?;
    let mut last: Option<Vec<String>> = None;
    let mut lines = 0;
    for record in r.records() {
        let record = record?;
        let key: Vec<String> = keys.iter().map(|&i| record[i].to_string()).collect();
        if last.as_ref().is_some_and(|l| *l != key) {
            writeln!(out, "\n")?;
        }
        let fields: Vec<String> = cols
            .iter()
            .map(|&i| match record[i].trim() {
                "" => "NaN".to_string(),
                v => v.replace(char::is_whitespace, "_"),
            })
            .collect();
        writeln!(out, "{}", fields.join(" "))?;
        last = Some(key);
        lines += 1;
    }
    out.flush()?;
    Ok(lines)
}

/// Emits one `.dat` per per-question table found in `out_dir`.
pub fn emit_rq_plots(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for table in &RQ_TABLES {
        let csv_path = out_dir.join(format!("{}.csv", table.file));
        if !csv_path.exists() {
            continue;
        }
        let mut columns: Vec<&str> = table.series.to_vec();
        columns.push(table.x);
        columns.extend_from_slice(table.y);
        let dat = out_dir.join(format!("{}.dat", table.file));
        emit_plot_data(&csv_path, &dat, &columns, table.series)?;
        written.push(dat);
    }
    Ok(written)
}
