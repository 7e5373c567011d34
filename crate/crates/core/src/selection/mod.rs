//! Budgeted seed selection: the greedy family and five baselines.
//!
//! Every algorithm works on a [`ResidualView`] (the whole network in phase
//! one, the network minus the already active nodes in phase two) and never
//! spends more than the budget. Greedy gains come from a [`LiveSamples`]
//! snapshot, so all candidates of one run are compared on the same coins.

mod greedy;
mod heuristics;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diffusion::{budget_slack, LiveSamples, SamplingMode, SeedSelection};
use crate::error::{Error, Result};
use crate::graph::{NodeEconomics, NodeId, ResidualView};
use crate::rng;

pub use greedy::{double_greedy, simple_greedy, stochastic_greedy, stochastic_sample_size};
pub use heuristics::{
    clustering_coefficients, degree_discount, high_clustering_coefficient, high_degree,
    random_selection, single_discount,
};

/// Default number of Monte Carlo replicates behind greedy gains.
pub const DEFAULT_SAMPLES: usize = 10_000;

/// How greedy algorithms evaluate φ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    MonteCarlo {
        samples: usize,
    },
    /// Full live-graph enumeration; small instances only.
    Exact,
}

impl Default for Estimator {
    fn default() -> Self {
        Estimator::MonteCarlo {
            samples: DEFAULT_SAMPLES,
        }
    }
}

impl Estimator {
    /// Replicate count, or `None` for exact evaluation.
    pub fn samples(self) -> Option<usize> {
        match self {
            Estimator::MonteCarlo { samples } => Some(samples),
            Estimator::Exact => None,
        }
    }
}

/// Everything a selection algorithm sees.
#[derive(Clone, Debug)]
pub struct SelectionContext<'a> {
    pub view: ResidualView<'a>,
    pub econ: &'a NodeEconomics,
    pub budget: f64,
    pub estimator: Estimator,
    pub master_seed: u64,
    /// Active nodes outside the view whose out-edges have not been tried yet.
    pub base: Vec<NodeId>,
    /// Edges known to be absent (failed attempts).
    pub blocked: Option<Vec<bool>>,
}

impl<'a> SelectionContext<'a> {
    pub fn new(view: ResidualView<'a>, econ: &'a NodeEconomics, budget: f64) -> Self {
        SelectionContext {
            view,
            econ,
            budget,
            estimator: Estimator::default(),
            master_seed: 0,
            base: Vec::new(),
            blocked: None,
        }
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    /// Phase-two evidence: the frontier that is still spreading and the
    /// edges whose attempts failed.
    pub fn with_evidence(mut self, base: Vec<NodeId>, blocked: Vec<bool>) -> Self {
        self.base = base;
        self.blocked = Some(blocked);
        self
    }

    /// Nodes hidden from the view.
    pub fn excluded(&self) -> impl Iterator<Item = NodeId> + '_ {
        let mask = self.view.excluded_mask();
        (0..mask.len()).filter(|&i| mask[i]).map(NodeId::from)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.budget >= 0.0 && self.budget.is_finite()) {
            return Err(Error::Config(format!(
                "budget must be a non-negative number, got {}",
                self.budget
            )));
        }
        self.econ.check_against(self.view.network())?;
        if let Some(b) = &self.blocked {
            if b.len() != self.view.network().edge_count() {
                return Err(Error::Config(
                    "blocked-edge mask does not match the network".into(),
                ));
            }
        }
        if let Some(u) = self.base.iter().find(|u| self.view.contains(**u)) {
            return Err(Error::Config(format!("base node {u} is inside the view")));
        }
        if self.estimator == (Estimator::MonteCarlo { samples: 0 }) {
            return Err(Error::Config("estimator needs at least one sample".into()));
        }
        Ok(())
    }

    /// Live-edge snapshot for greedy gains.
    pub fn samples(&self) -> Result<LiveSamples> {
        let mode = match self.estimator {
            Estimator::MonteCarlo { samples } => SamplingMode::MonteCarlo {
                samples,
                seed: rng::derive(self.master_seed, &[rng::tag("estimator")]),
            },
            Estimator::Exact => SamplingMode::Exact,
        };
        LiveSamples::new(&self.view, &self.base, self.blocked.as_deref(), mode)
    }

    pub(crate) fn affordable(&self, cost: f64, remaining: f64) -> bool {
        cost <= remaining + budget_slack(self.budget)
    }
}

/// One of the eight selection algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name")]
pub enum AlgorithmChoice {
    #[serde(rename = "SG")]
    SimpleGreedy,
    #[serde(rename = "DG")]
    DoubleGreedy,
    #[serde(rename = "StG")]
    StochasticGreedy {
        epsilon: f64,
    },
    #[serde(rename = "HD")]
    HighDegree,
    #[serde(rename = "SD")]
    SingleDiscount,
    /// `p = None` uses the mean edge probability of the view.
    #[serde(rename = "DD")]
    DegreeDiscount {
        p: Option<f64>,
    },
    #[serde(rename = "HighCC")]
    HighClusteringCoefficient,
    Random,
}

impl AlgorithmChoice {
    pub const NAMES: [&'static str; 8] = ["SG", "DG", "StG", "HD", "SD", "DD", "HighCC", "Random"];

    /// Short name used in CSV files and on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmChoice::SimpleGreedy => "SG",
            AlgorithmChoice::DoubleGreedy => "DG",
            AlgorithmChoice::StochasticGreedy { .. } => "StG",
            AlgorithmChoice::HighDegree => "HD",
            AlgorithmChoice::SingleDiscount => "SD",
            AlgorithmChoice::DegreeDiscount { .. } => "DD",
            AlgorithmChoice::HighClusteringCoefficient => "HighCC",
            AlgorithmChoice::Random => "Random",
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            AlgorithmChoice::StochasticGreedy { epsilon } => Some(epsilon),
            _ => None,
        }
    }

    /// Replaces ε of a stochastic greedy choice; other choices are unchanged.
    pub fn with_epsilon(self, epsilon: f64) -> Self {
        match self {
            AlgorithmChoice::StochasticGreedy { .. } => {
                AlgorithmChoice::StochasticGreedy { epsilon }
            }
            other => other,
        }
    }

    pub fn uses_estimator(&self) -> bool {
        matches!(
            self,
            AlgorithmChoice::SimpleGreedy
                | AlgorithmChoice::DoubleGreedy
                | AlgorithmChoice::StochasticGreedy { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AlgorithmChoice::StochasticGreedy { epsilon } if !(epsilon > 0.0 && epsilon < 1.0) => {
                Err(Error::Config(format!(
                    "epsilon must lie in (0, 1), got {epsilon}"
                )))
            }
            AlgorithmChoice::DegreeDiscount { p: Some(p) } if !(p > 0.0 && p <= 1.0) => Err(
                Error::Config(format!("degree-discount p must lie in (0, 1], got {p}")),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for AlgorithmChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmChoice {
    type Err = Error;

    /// Accepts the short names; `StG` defaults to ε = 0.1.
    fn from_str(s: &str) -> Result<Self> {
        let choice = match s.to_ascii_lowercase().as_str() {
            "sg" => AlgorithmChoice::SimpleGreedy,
            "dg" => AlgorithmChoice::DoubleGreedy,
            "stg" => AlgorithmChoice::StochasticGreedy { epsilon: 0.1 },
            "hd" => AlgorithmChoice::HighDegree,
            "sd" => AlgorithmChoice::SingleDiscount,
            "dd" => AlgorithmChoice::DegreeDiscount { p: None },
            "highcc" => AlgorithmChoice::HighClusteringCoefficient,
            "random" => AlgorithmChoice::Random,
            _ => {
                return Err(Error::Config(format!(
                    "unknown algorithm `{s}`, expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        };
        Ok(choice)
    }
}

/// Instrumentation counters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionStats {
    /// Greedy rounds that evaluated marginal gains.
    pub iterations: usize,
    /// Individual φ(S ∪ {u}) − φ(S) evaluations.
    pub gain_evaluations: usize,
    /// Double greedy (r⁺, r⁻) pairs.
    pub pair_evaluations: usize,
    /// Candidates dropped because they no longer fit the remaining budget.
    pub skipped_unaffordable: usize,
    /// Per-round candidate sample size of stochastic greedy.
    pub sample_size: Option<usize>,
    /// The p used by degree discount.
    pub discount_p: Option<f64>,
    /// Live-graph replicates behind the gains.
    pub replicates: Option<usize>,
}

/// A decision made by a greedy algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub node: NodeId,
    /// r⁺ for double greedy, the best ratio otherwise.
    pub ratio: f64,
    /// r⁻ for double greedy.
    pub ratio_minus: Option<f64>,
    pub added: bool,
}

/// A selection with its counters and decision trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selected {
    pub selection: SeedSelection,
    pub stats: SelectionStats,
    pub trace: Vec<TraceStep>,
    /// Double greedy's shrinking set at exit.
    pub upper: Option<Vec<NodeId>>,
}

impl Selected {
    fn plain(selection: SeedSelection, stats: SelectionStats) -> Self {
        Selected {
            selection,
            stats,
            trace: Vec::new(),
            upper: None,
        }
    }
}

/// Runs `choice` under `ctx`.
pub fn select(ctx: &SelectionContext<'_>, choice: AlgorithmChoice) -> Result<Selected> {
    ctx.validate()?;
    choice.validate()?;
    let out = match choice {
        AlgorithmChoice::SimpleGreedy => simple_greedy(ctx)?,
        AlgorithmChoice::DoubleGreedy => double_greedy(ctx)?,
        AlgorithmChoice::StochasticGreedy { epsilon } => stochastic_greedy(ctx, epsilon)?,
        AlgorithmChoice::HighDegree => high_degree(ctx),
        AlgorithmChoice::SingleDiscount => single_discount(ctx),
        AlgorithmChoice::DegreeDiscount { p } => degree_discount(ctx, p),
        AlgorithmChoice::HighClusteringCoefficient => high_clustering_coefficient(ctx),
        AlgorithmChoice::Random => random_selection(ctx),
    };
    debug_assert!(out.selection.total_cost <= ctx.budget + budget_slack(ctx.budget));
    debug_assert!(out.selection.nodes.iter().all(|&u| ctx.view.contains(u)));
    Ok(out)
}

/// Buys nodes from `order` while they fit; unaffordable ones are skipped.
pub(crate) fn buy_in_order(
    ctx: &SelectionContext<'_>,
    order: impl IntoIterator<Item = NodeId>,
) -> (SeedSelection, usize) {
    let mut sel = SeedSelection::empty(ctx.budget);
    let mut skipped = 0;
    for u in order {
        let c = ctx.econ.cost(u);
        if ctx.affordable(c, ctx.budget - sel.total_cost) {
            sel.push(u, c);
        } else {
            skipped += 1;
        }
    }
    (sel, skipped)
}
