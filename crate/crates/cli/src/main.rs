use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use tppm::graph::{
    assign_economics, assign_weights, ingest_edge_list, AssignmentSpec, IngestOptions, Instance,
    InstanceMeta, Weighting,
};
use tppm::harness::{self, ExperimentGrid};
use tppm::oracle::{self, NamedSetting, ObjectiveSetting, PaperInstance, PhaseBudgets};
use tppm::selection::{AlgorithmChoice, Estimator};
use tppm::two_phase::{run_single_phase, run_two_phase, PhaseTwoMode, TwoPhaseConfig};
use tppm::NodeId;

#[derive(Parser)]
#[command(
    name = "tppm",
    version,
    about = "Two-phase profit maximization on social networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize an edge list and report what was cleaned up.
    Ingest {
        input: PathBuf,
        #[command(flatten)]
        read: ReadArgs,
        /// Normalized `src dst` list; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assign edge probabilities, costs and benefits; writes an instance.
    Assign {
        input: PathBuf,
        #[command(flatten)]
        read: ReadArgs,
        /// `trivalency`, `file` or a constant probability.
        #[arg(long, default_value = "trivalency")]
        weights: String,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [50.0, 100.0])]
        cost: Vec<f64>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [800.0, 1000.0])]
        benefit: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact two-phase objective table for a small instance.
    Oracle {
        #[command(flatten)]
        source: SmallSource,
        /// Phase-one seeds, as node ids or `u<k>` labels.
        #[arg(long, value_delimiter = ',')]
        s1: Option<Vec<String>>,
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        split: Option<f64>,
        #[arg(long)]
        timestep: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the sign, monotonicity, modularity and subadditivity
    /// properties of the objective on the built-in examples.
    VerifyLemmas {
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// One selection under the full budget.
    RunSingle {
        instance: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// The two-phase protocol.
    RunTwoPhase {
        instance: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 0.5)]
        split: f64,
        #[arg(long, default_value_t = 2)]
        timestep: usize,
        /// Select phase-two seeds once instead of per replication.
        #[arg(long)]
        frozen: bool,
        /// Also run single-phase on the same worlds.
        #[arg(long)]
        compare: bool,
    },
    /// Run an experiment grid and write CSV tables and plot data.
    Grid {
        instance: PathBuf,
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long = "budget", value_delimiter = ',')]
        budgets: Option<Vec<f64>>,
        #[arg(long = "split", value_delimiter = ',')]
        splits: Option<Vec<f64>>,
        #[arg(long = "timestep", value_delimiter = ',')]
        timesteps: Option<Vec<usize>>,
        #[arg(long = "algo", value_delimiter = ',', default_value = "SG")]
        algos: Vec<AlgorithmChoice>,
        #[arg(long = "epsilon", value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[arg(long, default_value_t = tppm::selection::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        frozen: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Improvement summary of a master CSV; optionally plot data.
    Report {
        csv: PathBuf,
        /// Restrict to one timestep.
        #[arg(long)]
        timestep: Option<usize>,
        /// Emit `.dat` files for the per-question tables in this directory.
        #[arg(long)]
        plots: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ReadArgs {
    /// Add the reverse of every edge.
    #[arg(long)]
    symmetrize: bool,
    /// Use raw ids as node indices.
    #[arg(long)]
    no_relabel: bool,
}

impl ReadArgs {
    fn options(&self) -> IngestOptions {
        IngestOptions {
            symmetrize: self.symmetrize,
            relabel: !self.no_relabel,
            ..IngestOptions::default()
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SmallSource {
    /// Instance JSON.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Built-in example: figure1, figure2a, figure2b or figure3a.
    #[arg(long)]
    example: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    budget: f64,
    #[arg(long, default_value = "SG")]
    algo: AlgorithmChoice,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = tppm::selection::DEFAULT_SAMPLES)]
    samples: usize,
    /// Enumerate live graphs instead of sampling (small instances).
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON result; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn algorithm(&self) -> AlgorithmChoice {
        match self.epsilon {
            Some(e) => self.algo.with_epsilon(e),
            None => self.algo,
        }
    }

    fn estimator(&self) -> Estimator {
        if self.exact {
            Estimator::Exact
        } else {
            Estimator::MonteCarlo {
                samples: self.samples,
            }
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn example(name: &str) -> Result<PaperInstance> {
    Ok(match name {
        "figure1" => oracle::figure1(),
        "figure2a" => oracle::figure2a(),
        "figure2b" => oracle::figure2b(),
        "figure3a" => oracle::figure3a(),
        other => bail!("unknown example `{other}`"),
    })
}

fn parse_node(token: &str, labels: &[String], n: usize) -> Result<NodeId> {
    let token = token.trim();
    if let Some(i) = labels.iter().position(|l| l == token) {
        return Ok(NodeId::from(i));
    }
    let id: usize = token
        .parse()
        .with_context(|| format!("`{token}` is neither a node id nor a label"))?;
    if id >= n {
        bail!("node {id} is outside the network ({n} nodes)");
    }
    Ok(NodeId::from(id))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Ingest { input, read, out } => {
            let ingested = ingest_edge_list(&input, read.options())?;
            let g = &ingested.network;
            let mut w = output(out.as_deref())?;
            writeln!(
                w,
                "# {} nodes, {} edges from {}",
                g.node_count(),
                g.edge_count(),
                input.display()
            )?;
            for e in g.edges() {
                writeln!(w, "{} {}", e.source, e.target)?;
            }
            w.flush()?;
            eprintln!("{}", serde_json::to_string(&ingested.report)?);
        }
        Command::Assign {
            input,
            read,
            weights,
            cost,
            benefit,
            seed,
            name,
            out,
        } => {
            let ingested = ingest_edge_list(&input, read.options())?;
            let weighting = match weights.as_str() {
                "trivalency" => Weighting::Trivalency,
                "file" => Weighting::FromFile,
                p => {
                    Weighting::Constant(p.parse().with_context(|| format!("bad --weights `{p}`"))?)
                }
            };
            let spec = AssignmentSpec {
                weighting,
                cost_interval: (cost[0], cost[1]),
                benefit_interval: (benefit[0], benefit[1]),
                master_seed: seed,
            };
            let network = assign_weights(ingested.network, &spec)?;
            let economics = assign_economics(&network, &spec)?;
            let meta = InstanceMeta {
                name,
                seed: Some(seed),
                scheme: Some(weights),
                labels: read.options().relabel.then_some(ingested.labels),
            };
            Instance::new(network, economics, meta)?.save(&out)?;
            info!("wrote {}", out.display());
        }
        Command::Oracle {
            source,
            s1,
            budget,
            split,
            timestep,
            out,
        } => {
            let (network, econ, labels, default_s1, default_d, default_budgets) =
                match (&source.instance, &source.example) {
                    (_, Some(name)) => {
                        let inst = example(name)?;
                        (
                            inst.network,
                            inst.econ,
                            inst.labels,
                            inst.s1,
                            inst.timestep,
                            inst.budgets,
                        )
                    }
                    (Some(path), None) => {
                        let inst = Instance::load(path)?;
                        let n = inst.network.node_count();
                        let labels = (1..=n).map(|i| format!("u{i}")).collect();
                        let b = budget.context("--budget is required with --instance")?;
                        (
                            inst.network,
                            inst.economics,
                            labels,
                            Vec::new(),
                            1,
                            PhaseBudgets::split(b, 0.5),
                        )
                    }
                    (None, None) => unreachable!("clap requires a source"),
                };
            let n = network.node_count();
            let s1 = match s1 {
                Some(tokens) => tokens
                    .iter()
                    .map(|t| parse_node(t, &labels, n))
                    .collect::<Result<Vec<_>>>()?,
                None => default_s1,
            };
            let budgets = match (budget, split) {
                (Some(b), Some(r)) => PhaseBudgets::split(b, r),
                (Some(b), None) => PhaseBudgets {
                    phase_one: default_budgets.phase_one,
                    phase_two: b - default_budgets.phase_one,
                },
                (None, Some(r)) => PhaseBudgets::split(default_budgets.total(), r),
                (None, None) => default_budgets,
            };
            let d = timestep.unwrap_or(default_d);
            let eval = oracle::exact_two_phase_objective(&network, &econ, &s1, d, budgets)?;
            oracle::write_objective_csv(&network, &eval, &labels, output(out.as_deref())?)?;
            eprintln!("f({}) = {}", oracle::format_nodes(&s1, &labels), eval.value);
        }
        Command::VerifyLemmas { pairs, seed } => verify_lemmas(pairs, seed)?,
        Command::RunSingle { instance, run } => {
            let inst = Instance::load(&instance)?;
            let res = run_single_phase(
                &inst.network,
                &inst.economics,
                run.budget,
                run.algorithm(),
                run.estimator(),
                run.reps,
                run.seed,
                run.seed,
            )?;
            eprintln!(
                "profit {:.4} ± {:.4} with {} seeds",
                res.profit.mean,
                res.profit.stderr,
                res.selection.len()
            );
            write_json(&res, run.out.as_deref())?;
        }
        Command::RunTwoPhase {
            instance,
            run,
            split,
            timestep,
            frozen,
            compare,
        } => {
            let inst = Instance::load(&instance)?;
            let config = TwoPhaseConfig {
                estimator: run.estimator(),
                replications: run.reps,
                phase_two: if frozen {
                    PhaseTwoMode::Frozen
                } else {
                    PhaseTwoMode::PerReplication
                },
                ..TwoPhaseConfig::new(run.budget, split, timestep, run.algorithm())
            }
            .with_seed(run.seed);
            let res = run_two_phase(&inst.network, &inst.economics, &config, compare)?;
            eprintln!(
                "two-phase profit {:.4} ± {:.4}, |S1| = {}",
                res.realized_profit.mean,
                res.realized_profit.stderr,
                res.s1.len()
            );
            if let Some(single) = &res.single_phase {
                eprintln!(
                    "single-phase profit {:.4} ± {:.4}",
                    single.profit.mean, single.profit.stderr
                );
            }
            write_json(&res, run.out.as_deref())?;
        }
        Command::Grid {
            instance,
            dataset,
            budgets,
            splits,
            timesteps,
            algos,
            epsilons,
            samples,
            reps,
            seed,
            workers,
            frozen,
            out,
        } => {
            let inst = Instance::load(&instance)?;
            let defaults = ExperimentGrid::default();
            let dataset = dataset
                .or_else(|| inst.meta.name.clone())
                .or_else(|| {
                    instance
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                })
                .unwrap_or(defaults.dataset.clone());
            let grid = ExperimentGrid {
                dataset,
                budgets: budgets.unwrap_or(defaults.budgets),
                split_ratios: splits.unwrap_or(defaults.split_ratios),
                timesteps: timesteps.unwrap_or(defaults.timesteps),
                algorithms: algos,
                epsilons: epsilons.unwrap_or(defaults.epsilons),
                replications: reps,
                estimator: Estimator::MonteCarlo { samples },
                master_seed: seed,
                phase_two: if frozen {
                    PhaseTwoMode::Frozen
                } else {
                    PhaseTwoMode::PerReplication
                },
                workers,
            };
            let result = harness::run_grid(&inst, &grid, &out)?;
            let plots = harness::emit_rq_plots(&out)?;
            info!(
                "{} rows ({} resumed) in {}, {} tables, {} plot files",
                result.rows.len(),
                result.resumed,
                result.master_csv.display(),
                result.tables.len(),
                plots.len()
            );
            print_summary(&harness::summarize_improvements(&result.rows, None));
        }
        Command::Report {
            csv,
            timestep,
            plots,
        } => {
            print_summary(&harness::report_improvements(&csv, timestep)?);
            if let Some(dir) = plots {
                for p in harness::emit_rq_plots(&dir)? {
                    info!("wrote {}", p.display());
                }
            }
        }
    }
    Ok(())
}

fn print_summary(summary: &[harness::ImprovementSummary]) {
    println!(
        "dataset,algorithm,epsilon,cells,positive,fraction_positive,mean_pct,median_pct,max_pct"
    );
    for s in summary {
        println!(
            "{},{},{},{},{},{:.4},{:.4},{:.4},{:.4}",
            s.dataset,
            s.algorithm,
            s.epsilon.map_or(String::new(), |e| e.to_string()),
            s.cells,
            s.positive,
            s.fraction_positive,
            s.mean_pct,
            s.median_pct,
            s.max_pct
        );
    }
}

fn verify_lemmas(pairs: usize, seed: u64) -> Result<()> {
    fn setting(inst: &PaperInstance) -> ObjectiveSetting<'_> {
        ObjectiveSetting {
            network: &inst.network,
            econ: &inst.econ,
            timestep: inst.timestep,
            budgets: inst.budgets,
        }
    }
    let (a, b, c) = (oracle::figure2a(), oracle::figure2b(), oracle::figure3a());
    let cases = [
        NamedSetting {
            name: a.name,
            setting: setting(&a),
        },
        NamedSetting {
            name: b.name,
            setting: setting(&b),
        },
    ];
    let sign = oracle::verify_sign_lemma(&cases, &[(0, a.s1.clone()), (1, b.s1.clone())])?;
    println!(
        "sign: holds={} {}",
        sign.holds(),
        serde_json::to_string(&sign)?
    );

    let mono = oracle::find_nonmonotone_witness(setting(&c))?;
    println!("non-monotone witness: {}", serde_json::to_string(&mono)?);
    let modular = oracle::find_nonsubmodular_witness(setting(&c))?;
    println!(
        "neither sub- nor supermodular: holds={} {}",
        modular.holds(),
        serde_json::to_string(&modular)?
    );

    for k in 0..3u64 {
        let (network, econ) =
            oracle::random_small_instance(seed + k, 4, 3, (50.0, 100.0), (800.0, 1000.0));
        let s = ObjectiveSetting {
            network: &network,
            econ: &econ,
            timestep: 1,
            budgets: PhaseBudgets::split(200.0, 0.5),
        };
        let report = oracle::check_subadditivity(s, pairs, seed + k)?;
        println!(
            "subadditivity instance {k}: {} checked, {} skipped, {} violations",
            report.checked,
            report.skipped,
            report.violations.len()
        );
    }
    Ok(())
}
