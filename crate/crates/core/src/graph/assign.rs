use rand::distr::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{NodeEconomics, SocialNetwork};
use crate::error::{Error, Result};
use crate::rng;

/// The three trivalency influence probabilities.
pub const TRIVALENCY: [f64; 3] = [0.1, 0.01, 0.001];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Each edge drawn uniformly from [`TRIVALENCY`].
    Trivalency,
    Constant(f64),
    /// Keep the probabilities read from the input file.
    FromFile,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentSpec {
    pub weighting: Weighting,
    pub cost_interval: (f64, f64),
    pub benefit_interval: (f64, f64),
    pub master_seed: u64,
}

impl Default for AssignmentSpec {
    fn default() -> Self {
        AssignmentSpec {
            weighting: Weighting::Trivalency,
            cost_interval: (50.0, 100.0),
            benefit_interval: (800.0, 1000.0),
            master_seed: 0,
        }
    }
}

impl AssignmentSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("cost", self.cost_interval),
            ("benefit", self.benefit_interval),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} interval [{lo}, {hi}] must satisfy 0 < lo <= hi"
                )));
            }
        }
        if let Weighting::Constant(p) = self.weighting {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Config(format!(
                    "constant probability {p} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Returns `network` with every edge probability set according to `spec`.
///
/// Trivalency draws come from the `"weights"` substream of the master seed,
/// one draw per edge in edge order.
pub fn assign_weights(network: SocialNetwork, spec: &AssignmentSpec) -> Result<SocialNetwork> {
    spec.validate()?;
    let m = network.edge_count();
    let probs = match spec.weighting {
        Weighting::Constant(p) => vec![p; m],
        Weighting::Trivalency => {
            let mut r = rng::stream(spec.master_seed, &[rng::tag("weights")]);
            (0..m)
                .map(|_| TRIVALENCY[r.random_range(0..TRIVALENCY.len())])
                .collect()
        }
        Weighting::FromFile => return network.require_probabilities().map(|_| ()).map(|_| network),
    };
    network.with_probabilities(probs)
}

/// Draws per-node cost and benefit uniformly from the intervals in `spec`.
pub fn assign_economics(network: &SocialNetwork, spec: &AssignmentSpec) -> Result<NodeEconomics> {
    spec.validate()?;
    let n = network.node_count();
    let econ = rng::derive(spec.master_seed, &[rng::tag("econ")]);
    let draw = |(lo, hi): (f64, f64), label: &str| -> Vec<f64> {
        if lo == hi {
            return vec![lo; n];
        }
        let dist = Uniform::new_inclusive(lo, hi).expect("validated interval");
        let mut r = rng::stream(econ, &[rng::tag(label)]);
        (0..n).map(|_| dist.sample(&mut r)).collect()
    };
    NodeEconomics::new(
        draw(spec.cost_interval, "cost"),
        draw(spec.benefit_interval, "benefit"),
    )
}
