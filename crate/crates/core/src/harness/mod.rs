//! Experiment grids over budget, split ratio, timestep and algorithm.
//!
//! Every grid cell gets its own selection seed hashed from the cell
//! coordinates, so adding cells never changes existing ones. All cells share
//! the realized worlds of the dataset, which keeps single-phase and
//! two-phase rows comparable.

mod report;

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Instance;
use crate::rng;
use crate::selection::{AlgorithmChoice, Estimator};
use crate::two_phase::{run_single_phase, run_two_phase, PhaseTwoMode, TwoPhaseConfig};

pub use report::{
    emit_plot_data, emit_rq_plots, improvement_pct, read_rows, report_improvements,
    summarize_improvements, write_rows, write_rq_tables, ImprovementSummary, RQ_TABLES,
};

pub const MASTER_CSV: &str = "results.csv";
pub const MANIFEST: &str = "progress.jsonl";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub dataset: String,
    pub budgets: Vec<f64>,
    pub split_ratios: Vec<f64>,
    pub timesteps: Vec<usize>,
    pub algorithms: Vec<AlgorithmChoice>,
    /// ε values expanded for every stochastic greedy entry.
    pub epsilons: Vec<f64>,
    pub replications: usize,
    pub estimator: Estimator,
    pub master_seed: u64,
    pub phase_two: PhaseTwoMode,
    /// Cells run concurrently; 1 runs them one after another.
    pub workers: usize,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        ExperimentGrid {
            dataset: "dataset".into(),
            budgets: vec![500.0, 1000.0, 1500.0, 2000.0, 2500.0],
            split_ratios: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            timesteps: vec![2, 4, 6, 8, 10],
            algorithms: vec![AlgorithmChoice::SimpleGreedy],
            epsilons: vec![0.01, 0.1, 0.3, 0.6],
            replications: 50,
            estimator: Estimator::default(),
            master_seed: 0,
            phase_two: PhaseTwoMode::PerReplication,
            workers: 1,
        }
    }
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.budgets.is_empty() || self.split_ratios.is_empty() || self.timesteps.is_empty() {
            return bad("grid axes must be non-empty");
        }
        if self.algorithms.is_empty() {
            return bad("grid needs at least one algorithm");
        }
        if self.split_ratios.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
            return bad("split ratios must lie in (0, 1)");
        }
        if self.timesteps.contains(&0) {
            return bad("timesteps must be at least 1");
        }
        if self.budgets.iter().any(|&b| !(b >= 0.0 && b.is_finite())) {
            return bad("budgets must be non-negative");
        }
        if self.replications == 0 {
            return bad("at least one replication is required");
        }
        let stochastic = self.algorithms.iter().any(|a| a.epsilon().is_some());
        if stochastic && self.epsilons.is_empty() {
            return bad("stochastic greedy needs at least one epsilon");
        }
        for a in self.expanded_algorithms() {
            a.validate()?;
        }
        Ok(())
    }

    /// Algorithms with stochastic greedy expanded over `epsilons`.
    pub fn expanded_algorithms(&self) -> Vec<AlgorithmChoice> {
        let mut out = Vec::new();
        for &a in &self.algorithms {
            if a.epsilon().is_some() {
                out.extend(self.epsilons.iter().map(|&e| a.with_epsilon(e)));
            } else {
                out.push(a);
            }
        }
        out
    }

    /// Every cell, single-phase cells first within each (algorithm, budget).
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for algorithm in self.expanded_algorithms() {
            for &budget in &self.budgets {
                cells.push(Cell {
                    algorithm,
                    budget,
                    split_ratio: None,
                    timestep: None,
                });
                for &ratio in &self.split_ratios {
                    for &t in &self.timesteps {
                        cells.push(Cell {
                            algorithm,
                            budget,
                            split_ratio: Some(ratio),
                            timestep: Some(t),
                        });
                    }
                }
            }
        }
        cells
    }

    fn world_seed(&self) -> u64 {
        rng::derive(
            self.master_seed,
            &[rng::tag(&self.dataset), rng::tag("worlds")],
        )
    }
}

/// One grid coordinate; `split_ratio == None` marks a single-phase cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub algorithm: AlgorithmChoice,
    pub budget: f64,
    pub split_ratio: Option<f64>,
    pub timestep: Option<usize>,
}

impl Cell {
    pub fn mode(&self) -> Mode {
        if self.split_ratio.is_some() {
            Mode::TwoPhase
        } else {
            Mode::Single
        }
    }

    /// Selection seed of this cell.
    pub fn seed(&self, master_seed: u64, dataset: &str) -> u64 {
        let opt = |x: Option<f64>| x.map_or(u64::MAX, f64::to_bits);
        rng::derive(
            master_seed,
            &[
                rng::tag(dataset),
                rng::tag(self.algorithm.name()),
                self.budget.to_bits(),
                opt(self.split_ratio),
                self.timestep.map_or(u64::MAX, |t| t as u64),
                opt(self.algorithm.epsilon()),
            ],
        )
    }

    /// Stable identifier used by the progress manifest.
    pub fn key(&self) -> String {
        let f = |x: Option<f64>| x.map_or("-".to_string(), |v| v.to_string());
        format!(
            "{}|{}|{}|{}|{}",
            self.algorithm.name(),
            f(self.algorithm.epsilon()),
            self.budget,
            f(self.split_ratio),
            self.timestep.map_or("-".to_string(), |t| t.to_string())
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Single,
    TwoPhase,
}

/// One line of the master CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub algorithm: String,
    pub budget: f64,
    pub split_ratio: Option<f64>,
    pub timestep: Option<usize>,
    pub epsilon: Option<f64>,
    pub mode: Mode,
    pub profit_mean: Option<f64>,
    pub profit_stderr: Option<f64>,
    pub seed_set_size: Option<f64>,
    pub diffusion_rounds: Option<f64>,
    pub wall_time_seconds: f64,
    pub master_seed: u64,
    /// Estimator replicates behind greedy gains; empty for exact evaluation.
    pub samples: Option<usize>,
    pub replications: usize,
    pub phase_two: Option<PhaseTwoMode>,
    /// (two-phase − single) / single · 100 against the matching single row.
    pub improvement_pct: Option<f64>,
    pub notes: String,
    pub error: String,
}

impl ResultRow {
    fn sort_key(&self) -> (String, u64, u64, Mode, u64, usize) {
        let bits = |x: Option<f64>| x.map_or(0, f64::to_bits);
        (
            self.algorithm.clone(),
            bits(self.epsilon),
            self.budget.to_bits(),
            self.mode,
            bits(self.split_ratio),
            self.timestep.unwrap_or(0),
        )
    }

    fn cell_key(&self) -> String {
        let f = |x: Option<f64>| x.map_or("-".to_string(), |v| v.to_string());
        format!(
            "{}|{}|{}|{}|{}",
            self.algorithm,
            f(self.epsilon),
            self.budget,
            f(self.split_ratio),
            self.timestep.map_or("-".to_string(), |t| t.to_string())
        )
    }
}

/// Runs one cell; failures become a row with the error column filled in.
pub fn run_cell(instance: &Instance, grid: &ExperimentGrid, cell: &Cell) -> ResultRow {
    let seed = cell.seed(grid.master_seed, &grid.dataset);
    let mut row = ResultRow {
        dataset: grid.dataset.clone(),
        algorithm: cell.algorithm.name().to_string(),
        budget: cell.budget,
        split_ratio: cell.split_ratio,
        timestep: cell.timestep,
        epsilon: cell.algorithm.epsilon(),
        mode: cell.mode(),
        profit_mean: None,
        profit_stderr: None,
        seed_set_size: None,
        diffusion_rounds: None,
        wall_time_seconds: 0.0,
        master_seed: seed,
        samples: if cell.algorithm.uses_estimator() {
            grid.estimator.samples()
        } else {
            None
        },
        replications: grid.replications,
        phase_two: cell.split_ratio.map(|_| grid.phase_two),
        improvement_pct: None,
        notes: String::new(),
        error: String::new(),
    };
    let net = &instance.network;
    let econ = &instance.economics;
    let outcome = match (cell.split_ratio, cell.timestep) {
        (Some(ratio), Some(t)) => {
            let config = TwoPhaseConfig {
                total_budget: cell.budget,
                split_ratio: ratio,
                timestep: t,
                algorithm: cell.algorithm,
                estimator: grid.estimator,
                replications: grid.replications,
                master_seed: seed,
                world_seed: grid.world_seed(),
                phase_two: grid.phase_two,
            };
            run_two_phase(net, econ, &config, false).map(|res| {
                row.profit_mean = Some(res.realized_profit.mean);
                row.profit_stderr = Some(res.realized_profit.stderr);
                row.seed_set_size = Some(res.mean_seed_count());
                row.diffusion_rounds = Some(res.mean_rounds());
                row.wall_time_seconds = res.wall_times.total;
                if let Some(p) = res.s1_stats.discount_p {
                    row.notes = format!("dd_p={p}");
                }
            })
        }
        _ => run_single_phase(
            net,
            econ,
            cell.budget,
            cell.algorithm,
            grid.estimator,
            grid.replications,
            seed,
            grid.world_seed(),
        )
        .map(|res| {
            row.profit_mean = Some(res.profit.mean);
            row.profit_stderr = Some(res.profit.stderr);
            row.seed_set_size = Some(res.selection.len() as f64);
            row.diffusion_rounds = Some(res.mean_rounds);
            row.wall_time_seconds = res.wall_time;
            if let Some(p) = res.stats.discount_p {
                row.notes = format!("dd_p={p}");
            }
        }),
    };
    if let Err(e) = outcome {
        warn!("cell {} failed: {e}", cell.key());
        row.error = e.to_string();
    }
    row
}

/// Fills `improvement_pct` of every two-phase row from its single row.
pub fn attach_improvements(rows: &mut [ResultRow]) {
    let singles: Vec<(String, Option<u64>, u64, Option<f64>)> = rows
        .iter()
        .filter(|r| r.mode == Mode::Single)
        .map(|r| {
            (
                r.algorithm.clone(),
                r.epsilon.map(f64::to_bits),
                r.budget.to_bits(),
                r.profit_mean,
            )
        })
        .collect();
    for row in rows.iter_mut().filter(|r| r.mode == Mode::TwoPhase) {
        let single = singles
            .iter()
            .find(|s| {
                s.0 == row.algorithm
                    && s.1 == row.epsilon.map(f64::to_bits)
                    && s.2 == row.budget.to_bits()
            })
            .and_then(|s| s.3);
        row.improvement_pct = match (row.profit_mean, single) {
            (Some(two), Some(one)) => improvement_pct(two, one),
            _ => None,
        };
    }
}

/// What [`run_grid`] wrote.
#[derive(Clone, Debug)]
pub struct GridOutput {
    pub rows: Vec<ResultRow>,
    pub master_csv: PathBuf,
    pub tables: Vec<PathBuf>,
    /// Cells taken from the progress manifest instead of being run.
    pub resumed: usize,
}

/// Runs every cell of `grid` and writes the master CSV, the per-question
/// tables and a progress manifest to `out_dir`.
///
/// Cells already listed in the manifest are not run again.
pub fn run_grid(instance: &Instance, grid: &ExperimentGrid, out_dir: &Path) -> Result<GridOutput> {
    grid.validate()?;
    instance.network.require_probabilities()?;
    fs::create_dir_all(out_dir)?;
    let manifest_path = out_dir.join(MANIFEST);
    let cells = grid.cells();
    let wanted: BTreeSet<String> = cells.iter().map(Cell::key).collect();

    let mut done: Vec<ResultRow> = Vec::new();
    if manifest_path.exists() {
        for (i, line) in BufReader::new(File::open(&manifest_path)?)
            .lines()
            .enumerate()
        {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<ResultRow>(&line) {
                Ok(row) if row.dataset == grid.dataset && wanted.contains(&row.cell_key()) => {
                    done.push(row)
                }
                Ok(_) => {}
                Err(e) => warn!(
                    "{}:{}: ignoring unreadable manifest line: {e}",
                    manifest_path.display(),
                    i + 1
                ),
            }
        }
    }
    let finished: BTreeSet<String> = done.iter().map(ResultRow::cell_key).collect();
    let resumed = finished.len();
    let todo: Vec<&Cell> = cells
        .iter()
        .filter(|c| !finished.contains(&c.key()))
        .collect();
    info!(
        "grid {}: {} cells, {} to run",
        grid.dataset,
        cells.len(),
        todo.len()
    );

    let manifest = Mutex::new(
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&manifest_path)?,
    );
    let run = |cell: &&Cell| -> Result<ResultRow> {
        let row = run_cell(instance, grid, cell);
        let line = serde_json::to_string(&row)?;
        let mut f = manifest.lock().expect("manifest writer poisoned");
        writeln!(f, "{line}")?;
        f.flush()?;
        info!("cell {} done in {:.2}s", cell.key(), row.wall_time_seconds);
        Ok(row)
    };
    let fresh: Vec<ResultRow> = if grid.workers <= 1 {
        todo.iter().map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(grid.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", grid.workers)))?;
        pool.install(|| todo.par_iter().map(run).collect::<Result<_>>())?
    };

    let mut rows = done;
    rows.extend(fresh);
    rows.sort_by_key(ResultRow::sort_key);
    rows.dedup_by(|a, b| a.cell_key() == b.cell_key());
    attach_improvements(&mut rows);

    let master_csv = out_dir.join(MASTER_CSV);
    write_rows(&master_csv, &rows)?;
    let tables = write_rq_tables(&rows, out_dir)?;
    Ok(GridOutput {
        rows,
        master_csv,
        tables,
        resumed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let grid = ExperimentGrid::default();
        let cells = grid.cells();
        assert_eq!(
            cells.iter().filter(|c| c.mode() == Mode::TwoPhase).count(),
            125
        );
        assert_eq!(cells.iter().filter(|c| c.mode() == Mode::Single).count(), 5);

        let grid = ExperimentGrid {
            algorithms: vec![
                AlgorithmChoice::SimpleGreedy,
                AlgorithmChoice::StochasticGreedy { epsilon: 0.1 },
            ],
            ..ExperimentGrid::default()
        };
        assert_eq!(grid.cells().len(), 5 * (1 + 25) * 5);
    }

    #[test]
    fn invalid_grids_are_rejected() {
        let bad = [
            ExperimentGrid {
                budgets: vec![],
                ..Default::default()
            },
            ExperimentGrid {
                split_ratios: vec![1.0],
                ..Default::default()
            },
            ExperimentGrid {
                timesteps: vec![0],
                ..Default::default()
            },
            ExperimentGrid {
                algorithms: vec![AlgorithmChoice::StochasticGreedy { epsilon: 0.1 }],
                epsilons: vec![],
                ..Default::default()
            },
        ];
        for g in bad {
            assert!(g.validate().is_err());
        }
        assert!(ExperimentGrid::default().validate().is_ok());
    }

    #[test]
    fn cell_seeds_depend_on_every_coordinate() {
        let a = Cell {
            algorithm: AlgorithmChoice::SimpleGreedy,
            budget: 500.0,
            split_ratio: Some(0.1),
            timestep: Some(2),
        };
        let mut seen = BTreeSet::new();
        for cell in [
            a,
            Cell {
                budget: 1000.0,
                ..a
            },
            Cell {
                split_ratio: Some(0.3),
                ..a
            },
            Cell {
                timestep: Some(4),
                ..a
            },
            Cell {
                algorithm: AlgorithmChoice::DoubleGreedy,
                ..a
            },
            Cell {
                split_ratio: None,
                timestep: None,
                ..a
            },
        ] {
            assert!(seen.insert(cell.seed(7, "lm")));
        }
        assert_ne!(a.seed(7, "lm"), a.seed(7, "email"));
    }
}
