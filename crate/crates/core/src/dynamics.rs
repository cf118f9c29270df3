//! Simulation of networked linear dynamics and the scalar output sequences
//! they produce.
//!
//! Four system classes are covered: discrete-time single integrators
//! `x[k+1] = G x[k]`, discrete-time networks of identical `d`-dimensional
//! agents `x[k+1] = (I ⊗ A + G ⊗ I) x[k]`, and the sampled continuous-time
//! counterparts of both. All simulators iterate the state; powers and
//! Kronecker products are never materialized.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm::matrix_exponential;
use crate::graph::{seeded_rng, uniform_vector, GraphMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum TimeMode {
    #[serde(rename = "dt")]
    DiscreteTime,
    #[serde(rename = "ct")]
    ContinuousTime { tau: f64 },
}

impl TimeMode {
    pub fn tau(&self) -> Option<f64> {
        match self {
            TimeMode::DiscreteTime => None,
            TimeMode::ContinuousTime { tau } => Some(*tau),
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, TimeMode::ContinuousTime { .. })
    }
}

/// Which agents feed the scalar output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observation {
    /// `c = e_i`.
    Node(usize),
    /// `c = Σ β_i e_i` over the listed `(node, weight)` pairs.
    Subset(Vec<(usize, f64)>),
    /// `c` drawn Uniform[0,1]^n.
    Random,
}

/// Initial condition `x0` and readout vector `c` of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSetup {
    pub x0: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ObservationSetup {
    pub fn new(x0: Vec<f64>, c: Vec<f64>) -> Self {
        Self { x0, c, seed: None }
    }

    /// `x0 ~ Uniform[0,1]^n`, readout built from `observation` (random parts
    /// drawn from the same seeded stream, after `x0`).
    pub fn random(n: usize, observation: &Observation, seed: u64) -> Result<Self> {
        let mut rng = seeded_rng(seed);
        let x0 = uniform_vector(&mut rng, n, 0.0, 1.0);
        let c = match observation {
            Observation::Node(i) => {
                check_node(*i, n)?;
                let mut c = vec![0.0; n];
                c[*i] = 1.0;
                c
            }
            Observation::Subset(items) => {
                let mut c = vec![0.0; n];
                for &(i, w) in items {
                    check_node(i, n)?;
                    c[i] += w;
                }
                c
            }
            Observation::Random => uniform_vector(&mut rng, n, 0.0, 1.0),
        };
        Ok(Self {
            x0,
            c,
            seed: Some(seed),
        })
    }

    pub fn n(&self) -> usize {
        self.x0.len()
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.x0.len() != n {
            return Err(Error::DimensionMismatch {
                what: "initial condition x0",
                expected: n,
                got: self.x0.len(),
            });
        }
        if self.c.len() != n {
            return Err(Error::DimensionMismatch {
                what: "output vector c",
                expected: n,
                got: self.c.len(),
            });
        }
        Ok(())
    }
}

fn check_node(i: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(Error::InvalidParameter(format!("observed node {i} outside 0..{n}")));
    }
    Ok(())
}

/// Per-agent linear dynamics shared by every node of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDynamics {
    #[serde(with = "dense_rows")]
    pub a: DMatrix<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl NodeDynamics {
    pub fn new(a: DMatrix<f64>, beta: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        let d = a.nrows();
        if d == 0 || !a.is_square() {
            return Err(Error::InvalidParameter("node matrix A must be square with d >= 1".into()));
        }
        for (what, v) in [("beta", &beta), ("gamma", &gamma)] {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: d,
                    got: v.len(),
                });
            }
        }
        Ok(Self { a, beta, gamma })
    }

    /// `d = 1, A = [0], β = γ = [1]`: the network reduces to single integrators.
    pub fn single_integrator() -> Self {
        Self {
            a: DMatrix::zeros(1, 1),
            beta: vec![1.0],
            gamma: vec![1.0],
        }
    }

    /// Symmetric `A` with `a_ij ~ Uniform[0,1]` on the lower triangle mirrored
    /// upward, and `β, γ ~ Uniform[0,1]^d`.
    pub fn random_symmetric(d: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("node dimension d must be >= 1".into()));
        }
        let mut rng = seeded_rng(seed);
        let mut a = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..=i {
                let v = uniform_vector(&mut rng, 1, 0.0, 1.0)[0];
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let beta = uniform_vector(&mut rng, d, 0.0, 1.0);
        let gamma = uniform_vector(&mut rng, d, 0.0, 1.0);
        Self::new(a, beta, gamma)
    }

    pub fn d(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_single_integrator(&self) -> bool {
        self.d() == 1 && self.a[(0, 0)] == 0.0 && self.beta[0] * self.gamma[0] == 1.0
    }
}

/// Scalar measurements `y[0..K)` with their sampling metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSequence {
    pub values: Vec<f64>,
    pub time_mode: TimeMode,
    pub n_hint: Option<usize>,
    pub seed: Option<u64>,
}

impl OutputSequence {
    pub fn discrete(values: Vec<f64>) -> Self {
        Self {
            values,
            time_mode: TimeMode::DiscreteTime,
            n_hint: None,
            seed: None,
        }
    }

    pub fn continuous(values: Vec<f64>, tau: f64) -> Self {
        Self {
            values,
            time_mode: TimeMode::ContinuousTime { tau },
            n_hint: None,
            seed: None,
        }
    }

    pub fn with_n_hint(mut self, n: usize) -> Self {
        self.n_hint = Some(n);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV body with a `k,y` (discrete) or `t,y` (continuous, `t = kτ`) header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.time_mode {
            TimeMode::DiscreteTime => {
                out.push_str("k,y\n");
                for (k, y) in self.values.iter().enumerate() {
                    let _ = writeln!(out, "{k},{y}");
                }
            }
            TimeMode::ContinuousTime { tau } => {
                out.push_str("t,y\n");
                for (k, y) in self.values.iter().enumerate() {
                    let _ = writeln!(out, "{},{y}", k as f64 * tau);
                }
            }
        }
        out
    }

    /// Parses the CSV body. The sampling period is not recoverable from the
    /// CSV alone; pass the sidecar to [`OutputSequence::from_parts`].
    pub fn values_from_csv(text: &str) -> Result<Vec<f64>> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("k,y") | Some("t,y") => {}
            other => return Err(Error::Parse(format!("bad sequence header: {other:?}"))),
        }
        lines
            .map(|l| {
                let (_, y) = l
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("bad sequence row: {l}")))?;
                y.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{y:?}: {e}")))
            })
            .collect()
    }

    pub fn from_parts(values: Vec<f64>, sidecar: &Sidecar) -> Result<Self> {
        let time_mode = match (sidecar.mode.as_str(), sidecar.tau) {
            ("dt", _) => TimeMode::DiscreteTime,
            ("ct", Some(tau)) if tau > 0.0 => TimeMode::ContinuousTime { tau },
            ("ct", _) => return Err(Error::Parse("ct sidecar needs tau > 0".into())),
            (m, _) => return Err(Error::Parse(format!("unknown mode {m:?}"))),
        };
        Ok(Self {
            values,
            time_mode,
            n_hint: sidecar.n_hint,
            seed: sidecar.seed,
        })
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            schema: 1,
            mode: if self.time_mode.is_continuous() { "ct" } else { "dt" }.into(),
            tau: self.time_mode.tau(),
            n_hint: self.n_hint,
            seed: self.seed,
            c: None,
            x0: None,
            node: None,
        }
    }

    /// Writes `<path>` (CSV) and `<path with .json extension>` (sidecar).
    pub fn save(&self, path: impl AsRef<Path>, sidecar: &Sidecar) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv())?;
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(sidecar)? + "\n")?;
        Ok(())
    }

    /// Loads the CSV and, when present, its sidecar. Without a sidecar the
    /// sequence is taken as discrete-time.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Option<Sidecar>)> {
        let path = path.as_ref();
        let values = Self::values_from_csv(&std::fs::read_to_string(path)?)?;
        let side = sidecar_path(path);
        if side.exists() {
            let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(side)?)?;
            Ok((Self::from_parts(values, &sidecar)?, Some(sidecar)))
        } else {
            Ok((Self::discrete(values), None))
        }
    }
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// JSON metadata stored next to an output-sequence CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema: u32,
    pub mode: String,
    pub tau: Option<f64>,
    pub n_hint: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeDynamics>,
}

fn iterate_outputs(m: &DMatrix<f64>, setup: &ObservationSetup, k_len: usize) -> Result<Vec<f64>> {
    let c = DVector::from_column_slice(&setup.c);
    let mut x = DVector::from_column_slice(&setup.x0);
    let mut out = Vec::with_capacity(k_len);
    for k in 0..k_len {
        if k > 0 {
            x = m * &x;
        }
        let y = c.dot(&x);
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow { index: k });
        }
        out.push(y);
    }
    Ok(out)
}

fn check_len(k_len: usize) -> Result<()> {
    if k_len == 0 {
        return Err(Error::InvalidParameter("sequence length K must be >= 1".into()));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("sampling period must be > 0, got {tau}")));
    }
    Ok(())
}

/// `y[k] = c^T G^k x0` for `k < K`.
pub fn simulate_dt(g: &GraphMatrix, setup: &ObservationSetup, k_len: usize) -> Result<OutputSequence> {
    check_len(k_len)?;
    setup.check(g.n())?;
    let values = iterate_outputs(&g.matrix, setup, k_len)?;
    Ok(OutputSequence {
        values,
        time_mode: TimeMode::DiscreteTime,
        n_hint: Some(g.n()),
        seed: setup.seed,
    })
}

/// `y[k] = (c ⊗ γ)^T (I ⊗ A + G ⊗ I)^k (x0 ⊗ β)`, iterating the `n × d`
/// agent-state matrix `X` (row `i` is agent `i`) as `X ← X A^T + G X`.
pub fn simulate_dt_networked(
    g: &GraphMatrix,
    node: &NodeDynamics,
    setup: &ObservationSetup,
    k_len: usize,
) -> Result<OutputSequence> {
    check_len(k_len)?;
    setup.check(g.n())?;
    let x0 = DVector::from_column_slice(&setup.x0);
    let c = DVector::from_column_slice(&setup.c);
    let beta = DVector::from_column_slice(&node.beta);
    let gamma = DVector::from_column_slice(&node.gamma);
    let a_t = node.a.transpose();
    let mut state = &x0 * beta.transpose();
    let mut values = Vec::with_capacity(k_len);
    for k in 0..k_len {
        if k > 0 {
            state = &state * &a_t + &g.matrix * &state;
        }
        let y = (c.transpose() * &state * &gamma)[(0, 0)];
        if !y.is_finite() || state.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow { index: k });
        }
        values.push(y);
    }
    Ok(OutputSequence {
        values,
        time_mode: TimeMode::DiscreteTime,
        n_hint: Some(g.n()),
        seed: setup.seed,
    })
}

/// Samples `y(kτ) = c^T e^{G kτ} x0` by iterating the one-step propagator
/// `e^{Gτ}`.
pub fn simulate_ct_sampled(
    g: &GraphMatrix,
    setup: &ObservationSetup,
    tau: f64,
    k_len: usize,
) -> Result<OutputSequence> {
    check_len(k_len)?;
    check_tau(tau)?;
    setup.check(g.n())?;
    let step = matrix_exponential(&g.matrix, tau)?;
    let values = iterate_outputs(&step, setup, k_len)?;
    Ok(OutputSequence {
        values,
        time_mode: TimeMode::ContinuousTime { tau },
        n_hint: Some(g.n()),
        seed: setup.seed,
    })
}

/// `y_k = (c^T e^{G kτ} x0)(γ^T e^{A kτ} β)`. The two factors commute out of
/// the stacked exponential because `I ⊗ A` and `G ⊗ I` commute.
pub fn simulate_ct_networked(
    g: &GraphMatrix,
    node: &NodeDynamics,
    setup: &ObservationSetup,
    tau: f64,
    k_len: usize,
) -> Result<OutputSequence> {
    let network = simulate_ct_sampled(g, setup, tau, k_len)?;
    let agent = ObservationSetup::new(node.beta.clone(), node.gamma.clone());
    let step = matrix_exponential(&node.a, tau)?;
    let nu = iterate_outputs(&step, &agent, k_len)?;
    let mut values = Vec::with_capacity(k_len);
    for (k, (y, v)) in network.values.iter().zip(&nu).enumerate() {
        let p = y * v;
        if !p.is_finite() {
            return Err(Error::Overflow { index: k });
        }
        values.push(p);
    }
    Ok(OutputSequence { values, ..network })
}

mod dense_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }
}
