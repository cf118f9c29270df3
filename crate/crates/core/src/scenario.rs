//! Seeded desk-scale scenarios: a single-node observation of a preferential
//! attachment network in discrete time, a two-agent observation of a directed
//! ring in continuous time, and a network of identical 3-state agents.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate_ct_sampled, simulate_dt, simulate_dt_networked, NodeDynamics, ObservationSetup};
use crate::dynamics::{Observation, OutputSequence};
use crate::error::{Error, Result};
use crate::estimator::{estimate_spectrum, EstimatorOptions, Prescale, SpectrumEstimate};
use crate::graph::{
    assign_uniform_weights, build_matrix, preferential_attachment, ring, seeded_rng, Graph, GraphMatrix,
    GraphMatrixKind,
};
use crate::oracle::{full_spectrum, match_values, MatchReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioName {
    Fig1,
    Fig2,
    Fig3,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 3] = [ScenarioName::Fig1, ScenarioName::Fig2, ScenarioName::Fig3];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(Self::Fig1),
            "fig2" => Ok(Self::Fig2),
            "fig3" => Ok(Self::Fig3),
            other => Err(Error::InvalidParameter(format!("unknown scenario {other}; use fig1|fig2|fig3"))),
        }
    }
}

/// Knobs shared by all scenarios. `None` fields take the scenario default.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub k_len: Option<usize>,
    /// Simulate `-G` instead of `G` (continuous-time ring only).
    pub negate: bool,
    pub options: Option<EstimatorOptions>,
    pub tolerance: Option<f64>,
}

/// A fully specified instance: network, dynamics, observation and samples.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: ScenarioName,
    pub seed: u64,
    pub graph: Graph,
    pub g: GraphMatrix,
    pub node: Option<NodeDynamics>,
    pub setup: ObservationSetup,
    /// Observed agents.
    pub agents: Vec<usize>,
    pub tau: Option<f64>,
    pub k_len: usize,
    pub options: EstimatorOptions,
    /// Absolute matching tolerance on eigenvalues.
    pub tolerance: f64,
    pub truth: Vec<Complex64>,
}

/// What happened when a scenario was run end to end.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Outcome {
    /// The simulation overflowed at the given sample before `K` outputs existed.
    Overflow { index: usize },
    /// The estimator raised an error.
    Failed { error: Error },
    Estimated {
        y: OutputSequence,
        estimate: SpectrumEstimate,
        report: MatchReport,
    },
}

impl Outcome {
    pub fn passed(&self, tolerance: f64) -> bool {
        matches!(self, Outcome::Estimated { report, .. } if report.is_exact_within(tolerance))
    }

    pub fn max_error(&self) -> Option<f64> {
        match self {
            Outcome::Estimated { report, .. } => Some(report.max_error),
            _ => None,
        }
    }
}

fn sub_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream)
}

fn pick_agents(n: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = seeded_rng(seed);
    let mut agents = sample(&mut rng, n, count).into_vec();
    agents.sort_unstable();
    agents
}

fn spectral_radius(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

impl Scenario {
    pub fn build(name: ScenarioName, seed: u64, params: &ScenarioParams) -> Result<Self> {
        match name {
            ScenarioName::Fig1 => Self::fig1(seed, params),
            ScenarioName::Fig2 => Self::fig2(seed, params),
            ScenarioName::Fig3 => Self::fig3(seed, params),
        }
    }

    /// n = 10 preferential attachment (m = 2), weights Uniform[-1,1],
    /// weighted adjacency, one observed agent, K = 20, discrete time.
    pub fn fig1(seed: u64, params: &ScenarioParams) -> Result<Self> {
        let n = 10;
        let graph = preferential_attachment(n, 2, sub_seed(seed, 1))?;
        let graph = assign_uniform_weights(&graph, -1.0, 1.0, sub_seed(seed, 2))?;
        let g = build_matrix(&graph, GraphMatrixKind::Adjacency)?;
        let agents = pick_agents(n, 1, sub_seed(seed, 3));
        let setup = ObservationSetup::random(n, &Observation::Node(agents[0]), sub_seed(seed, 4))?;
        let truth = full_spectrum(&g)?;
        let tolerance = params
            .tolerance
            .unwrap_or(1e-6 * spectral_radius(&truth).max(1.0));
        Ok(Self {
            name: ScenarioName::Fig1,
            seed,
            graph,
            g,
            node: None,
            setup,
            agents,
            tau: None,
            k_len: params.k_len.unwrap_or(2 * n),
            options: params.options.unwrap_or_default(),
            tolerance,
            truth,
        })
    }

    /// n = 8 directed ring, weights Uniform[-1,1], weighted adjacency, sum of
    /// two observed agents, τ = 1, K = 16, continuous time with prescaling.
    pub fn fig2(seed: u64, params: &ScenarioParams) -> Result<Self> {
        let n = 8;
        let graph = ring(n, true)?;
        let graph = assign_uniform_weights(&graph, -1.0, 1.0, sub_seed(seed, 2))?;
        let mut g = build_matrix(&graph, GraphMatrixKind::Adjacency)?;
        if params.negate {
            g.matrix.neg_mut();
            g.source = format!("-{}", g.source);
        }
        let agents = pick_agents(n, 2, sub_seed(seed, 3));
        let subset = agents.iter().map(|&i| (i, 1.0)).collect();
        let setup = ObservationSetup::random(n, &Observation::Subset(subset), sub_seed(seed, 4))?;
        let truth = full_spectrum(&g)?;
        let options = params.options.unwrap_or(EstimatorOptions {
            prescale: Prescale::On,
            ..EstimatorOptions::default()
        });
        Ok(Self {
            name: ScenarioName::Fig2,
            seed,
            graph,
            g,
            node: None,
            setup,
            agents,
            tau: Some(1.0),
            k_len: params.k_len.unwrap_or(2 * n),
            options,
            tolerance: params.tolerance.unwrap_or(1e-3),
            truth,
        })
    }

    /// n = 10 preferential attachment (m = 2), weights Uniform[-1,1], agents
    /// with d = 3 random symmetric dynamics, sum of two observed agents,
    /// K = 20, discrete time.
    pub fn fig3(seed: u64, params: &ScenarioParams) -> Result<Self> {
        let n = 10;
        let graph = preferential_attachment(n, 2, sub_seed(seed, 1))?;
        let graph = assign_uniform_weights(&graph, -1.0, 1.0, sub_seed(seed, 2))?;
        let g = build_matrix(&graph, GraphMatrixKind::Adjacency)?;
        let agents = pick_agents(n, 2, sub_seed(seed, 3));
        let subset = agents.iter().map(|&i| (i, 1.0)).collect();
        let setup = ObservationSetup::random(n, &Observation::Subset(subset), sub_seed(seed, 4))?;
        let node = NodeDynamics::random_symmetric(3, sub_seed(seed, 5))?;
        let truth = full_spectrum(&g)?;
        Ok(Self {
            name: ScenarioName::Fig3,
            seed,
            graph,
            g,
            node: Some(node),
            setup,
            agents,
            tau: None,
            k_len: params.k_len.unwrap_or(2 * n),
            options: params.options.unwrap_or_default(),
            tolerance: params.tolerance.unwrap_or(1e-5),
            truth,
        })
    }

    pub fn simulate(&self) -> Result<OutputSequence> {
        let mut y = match (self.tau, &self.node) {
            (Some(tau), None) => simulate_ct_sampled(&self.g, &self.setup, tau, self.k_len)?,
            (None, Some(node)) => simulate_dt_networked(&self.g, node, &self.setup, self.k_len)?,
            (None, None) => simulate_dt(&self.g, &self.setup, self.k_len)?,
            (Some(tau), Some(node)) => {
                crate::dynamics::simulate_ct_networked(&self.g, node, &self.setup, tau, self.k_len)?
            }
        };
        y.seed = Some(self.seed);
        Ok(y)
    }

    pub fn run(&self) -> Outcome {
        let y = match self.simulate() {
            Ok(y) => y,
            Err(Error::Overflow { index }) => return Outcome::Overflow { index },
            Err(error) => return Outcome::Failed { error },
        };
        match estimate_spectrum(&y, self.node.as_ref(), &self.options) {
            Ok(estimate) => {
                let report = match_values(&self.truth, &estimate.expanded());
                Outcome::Estimated { y, estimate, report }
            }
            Err(error) => Outcome::Failed { error },
        }
    }
}
