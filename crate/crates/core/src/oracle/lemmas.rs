//! Brute-force checks of structural properties of the two-phase objective.

use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use super::{exact_two_phase_objective, PhaseBudgets};
use crate::diffusion::budget_slack;
use crate::error::Result;
use crate::graph::{NodeEconomics, NodeId, SocialNetwork};
use crate::rng;

/// Everything f(S₁) depends on besides S₁.
#[derive(Clone, Copy, Debug)]
pub struct ObjectiveSetting<'a> {
    pub network: &'a SocialNetwork,
    pub econ: &'a NodeEconomics,
    pub timestep: usize,
    pub budgets: PhaseBudgets,
}

#[derive(Clone, Copy, Debug)]
pub struct NamedSetting<'a> {
    pub name: &'a str,
    pub setting: ObjectiveSetting<'a>,
}

/// Memoized f over one setting.
pub struct ObjectiveCache<'a> {
    setting: ObjectiveSetting<'a>,
    values: HashMap<Vec<NodeId>, f64>,
}

impl<'a> ObjectiveCache<'a> {
    pub fn new(setting: ObjectiveSetting<'a>) -> Self {
        ObjectiveCache {
            setting,
            values: HashMap::new(),
        }
    }

    pub fn f(&mut self, s1: &[NodeId]) -> Result<f64> {
        let mut key = s1.to_vec();
        key.sort_unstable();
        key.dedup();
        if let Some(&v) = self.values.get(&key) {
            return Ok(v);
        }
        let s = self.setting;
        let v = exact_two_phase_objective(s.network, s.econ, &key, s.timestep, s.budgets)?.value;
        self.values.insert(key, v);
        Ok(v)
    }

    fn affordable(&self, set: &[NodeId]) -> bool {
        let b1 = self.setting.budgets.phase_one;
        self.setting.econ.set_cost(set) <= b1 + budget_slack(b1)
    }

    /// Subsets with C(S) ≤ B₁, by size and then lexicographically.
    fn feasible_sets(&self) -> Vec<Vec<NodeId>> {
        let n = self.setting.network.node_count();
        let mut sets: Vec<Vec<NodeId>> = (0..1u64 << n)
            .map(super::mask_nodes)
            .filter(|s| self.affordable(s))
            .collect();
        sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        sets
    }
}

fn tol(a: f64, b: f64) -> f64 {
    1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn with(set: &[NodeId], u: NodeId) -> Vec<NodeId> {
    let mut s = set.to_vec();
    s.push(u);
    s.sort_unstable();
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignEvaluation {
    pub instance: String,
    pub s1: Vec<NodeId>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignReport {
    /// The requested (instance, S₁) evaluations.
    pub requested: Vec<SignEvaluation>,
    pub positive: Option<SignEvaluation>,
    pub negative: Option<SignEvaluation>,
    /// Whether the witnesses came from a search beyond the requested sets.
    pub searched: bool,
}

impl SignReport {
    pub fn holds(&self) -> bool {
        self.positive.is_some() && self.negative.is_some()
    }
}

/// Looks for one strictly positive and one strictly negative f value.
///
/// `requested` lists `(case index, S₁)` pairs evaluated first. When they do
/// not contain both signs, every affordable S₁ of every case is tried.
pub fn verify_sign_lemma(
    cases: &[NamedSetting<'_>],
    requested: &[(usize, Vec<NodeId>)],
) -> Result<SignReport> {
    let mut caches: Vec<ObjectiveCache<'_>> = cases
        .iter()
        .map(|c| ObjectiveCache::new(c.setting))
        .collect();
    let mut report = SignReport {
        requested: Vec::new(),
        positive: None,
        negative: None,
        searched: false,
    };
    let consider = |report: &mut SignReport, eval: SignEvaluation| {
        if eval.value > 0.0 && report.positive.is_none() {
            report.positive = Some(eval.clone());
        }
        if eval.value < 0.0 && report.negative.is_none() {
            report.negative = Some(eval);
        }
    };
    for (i, s1) in requested {
        let eval = SignEvaluation {
            instance: cases[*i].name.to_string(),
            s1: s1.clone(),
            value: caches[*i].f(s1)?,
        };
        report.requested.push(eval.clone());
        consider(&mut report, eval);
    }
    if !report.holds() {
        report.searched = true;
        for (case, cache) in cases.iter().zip(caches.iter_mut()) {
            for s1 in cache.feasible_sets() {
                let value = cache.f(&s1)?;
                consider(
                    &mut report,
                    SignEvaluation {
                        instance: case.name.to_string(),
                        s1,
                        value,
                    },
                );
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityWitness {
    pub s: Vec<NodeId>,
    /// f(S) < f(S ∪ {up}).
    pub up: NodeId,
    /// f(S) > f(S ∪ {down}).
    pub down: NodeId,
    pub f_s: f64,
    pub f_up: f64,
    pub f_down: f64,
}

/// Finds S, u, v with f(S) < f(S ∪ {u}) and f(S) > f(S ∪ {v}), all three
/// sets affordable in phase one.
pub fn find_nonmonotone_witness(
    setting: ObjectiveSetting<'_>,
) -> Result<Option<MonotonicityWitness>> {
    let mut cache = ObjectiveCache::new(setting);
    let n = setting.network.node_count();
    for s in cache.feasible_sets() {
        let f_s = cache.f(&s)?;
        let mut up = None;
        let mut down = None;
        for u in (0..n).map(NodeId::from).filter(|u| !s.contains(u)) {
            let t = with(&s, u);
            if !cache.affordable(&t) {
                continue;
            }
            let f_t = cache.f(&t)?;
            if up.is_none() && f_t > f_s + tol(f_s, f_t) {
                up = Some((u, f_t));
            }
            if down.is_none() && f_t < f_s - tol(f_s, f_t) {
                down = Some((u, f_t));
            }
        }
        if let (Some((up, f_up)), Some((down, f_down))) = (up, down) {
            return Ok(Some(MonotonicityWitness {
                s,
                up,
                down,
                f_s,
                f_up,
                f_down,
            }));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModularityWitness {
    pub s: Vec<NodeId>,
    pub t: Vec<NodeId>,
    pub i: NodeId,
    /// f(S ∪ {i}) − f(S).
    pub gain_s: f64,
    /// f(T ∪ {i}) − f(T).
    pub gain_t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubmodularityReport {
    /// S ⊂ T with a smaller gain at S than at T.
    pub not_submodular: Option<ModularityWitness>,
    /// S ⊂ T with a larger gain at S than at T.
    pub not_supermodular: Option<ModularityWitness>,
}

impl SubmodularityReport {
    pub fn holds(&self) -> bool {
        self.not_submodular.is_some() && self.not_supermodular.is_some()
    }
}

/// Searches S ⊂ T and i ∉ T (all affordable) for violations of the
/// submodular and of the supermodular inequality.
pub fn find_nonsubmodular_witness(setting: ObjectiveSetting<'_>) -> Result<SubmodularityReport> {
    let mut cache = ObjectiveCache::new(setting);
    let n = setting.network.node_count();
    let sets = cache.feasible_sets();
    let mut report = SubmodularityReport {
        not_submodular: None,
        not_supermodular: None,
    };
    for t in &sets {
        for i in (0..n).map(NodeId::from).filter(|i| !t.contains(i)) {
            let ti = with(t, i);
            if !cache.affordable(&ti) {
                continue;
            }
            let gain_t = cache.f(&ti)? - cache.f(t)?;
            for s in sets
                .iter()
                .filter(|s| s.len() < t.len() && s.iter().all(|u| t.contains(u)))
            {
                let gain_s = cache.f(&with(s, i))? - cache.f(s)?;
                let eps = tol(gain_s, gain_t);
                let witness = || ModularityWitness {
                    s: s.clone(),
                    t: t.clone(),
                    i,
                    gain_s,
                    gain_t,
                };
                if report.not_submodular.is_none() && gain_s < gain_t - eps {
                    report.not_submodular = Some(witness());
                }
                if report.not_supermodular.is_none() && gain_s > gain_t + eps {
                    report.not_supermodular = Some(witness());
                }
                if report.holds() {
                    return Ok(report);
                }
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubadditivityReport {
    pub pairs: usize,
    pub checked: usize,
    /// Pairs with M = N and f(M) < 0.
    pub skipped: usize,
    /// Every pair with f(M ∪ N) > f(M) + f(N).
    pub violations: Vec<SubadditivityViolation>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubadditivityViolation {
    pub m: Vec<NodeId>,
    pub n: Vec<NodeId>,
    pub f_m: f64,
    pub f_n: f64,
    pub f_union: f64,
}

/// Tests f(M ∪ N) ≤ f(M) + f(N) on `pairs` uniformly random subset pairs.
///
/// The objective is evaluated with phase-two budget max(0, B − C(S₁)) for
/// every subset, including those above B₁.
pub fn check_subadditivity(
    setting: ObjectiveSetting<'_>,
    pairs: usize,
    seed: u64,
) -> Result<SubadditivityReport> {
    let mut cache = ObjectiveCache::new(setting);
    let n = setting.network.node_count();
    let mut r = rng::stream(seed, &[rng::tag("subadditivity")]);
    let mut report = SubadditivityReport {
        pairs,
        checked: 0,
        skipped: 0,
        violations: Vec::new(),
    };
    for _ in 0..pairs {
        let m = super::mask_nodes(r.random_range(0..1u64 << n));
        let nn = super::mask_nodes(r.random_range(0..1u64 << n));
        let (f_m, f_n) = (cache.f(&m)?, cache.f(&nn)?);
        if m == nn && f_m < 0.0 {
            log::debug!("subadditivity: skipping M = N = {m:?} with f(M) = {f_m}");
            report.skipped += 1;
            continue;
        }
        let union: Vec<NodeId> = {
            let mut u = m.clone();
            u.extend(&nn);
            u.sort_unstable();
            u.dedup();
            u
        };
        let f_u = cache.f(&union)?;
        report.checked += 1;
        if f_u > f_m + f_n + 1e-9 * (f_m + f_n).abs().max(1.0) {
            report.violations.push(SubadditivityViolation {
                m,
                n: nn,
                f_m,
                f_n,
                f_union: f_u,
            });
        }
    }
    Ok(report)
}
