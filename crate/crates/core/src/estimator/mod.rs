//! Spectrum estimation from a scalar output sequence.
//!
//! The pipeline: Hankel matrix of (optionally prescaled) samples, numerical
//! rank `r`, monic characteristic polynomial from the `r × r` Hankel system,
//! companion-matrix roots clustered into multiple roots. Networks of
//! identical agents first have the agent dynamics removed; continuous-time
//! samples are mapped back through the principal logarithm.

pub mod deconv;
pub mod hankel;
pub mod poly;
pub mod roots;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{NodeDynamics, OutputSequence, TimeMode};
use crate::error::{Error, Result};

pub use deconv::{deconvolve_sigma, divide_sigma, nu_sequence, SigmaSequence};
pub use hankel::{build_hankel, detect_rank_online, HankelAnalysis, OnlineRank};
pub use poly::{solve_coefficients, CharacteristicPoly};
pub use roots::{roots_with_multiplicity, Root};

/// Geometric prescaling policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prescale {
    /// On for continuous-time data, and for discrete-time data whose
    /// magnitude grows by more than [`AUTO_PRESCALE_RANGE`].
    #[default]
    Auto,
    On,
    Off,
}

pub const AUTO_PRESCALE_RANGE: f64 = 1e6;

impl std::str::FromStr for Prescale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "on" | "true" => Ok(Self::On),
            "off" | "false" => Ok(Self::Off),
            other => Err(Error::InvalidParameter(format!("prescale must be auto|on|off, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    /// Relative singular-value cutoff; `None` uses `1e-14 · max(1, size)`.
    pub rank_tolerance: Option<f64>,
    /// Roots closer than `cluster_tol · max(1, |λ|)` are merged.
    pub cluster_tol: f64,
    pub prescale: Prescale,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            rank_tolerance: None,
            cluster_tol: 1e-6,
            prescale: Prescale::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Warning {
    /// A continuous-time root sits on or beyond the principal strip
    /// `|Im λ| < π/τ`; its imaginary part is only known modulo `2π/τ`.
    Aliasing,
    /// The coefficient system has condition number above `1e12`.
    IllConditioned,
    /// Some complex root had no conjugate partner after clustering.
    UnpairedConjugate,
    /// Online detection ran out of samples before the rank settled.
    StreamExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub rank: usize,
    pub residual: f64,
    pub condition: f64,
    pub scale_rho: f64,
    pub singular_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    pub roots: Vec<Root>,
    pub time_mode: TimeMode,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<Warning>,
}

impl SpectrumEstimate {
    /// Roots repeated by multiplicity.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.roots
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.value, r.multiplicity))
            .collect()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    pub fn to_json_value(&self) -> SpectrumJson {
        SpectrumJson {
            schema: 1,
            mode: if self.time_mode.is_continuous() { "ct" } else { "dt" }.into(),
            tau: self.time_mode.tau(),
            rank: self.diagnostics.rank,
            residual: self.diagnostics.residual,
            condition: Some(self.diagnostics.condition),
            rho: self.diagnostics.scale_rho,
            roots: self
                .roots
                .iter()
                .map(|r| RootJson {
                    re: r.value.re,
                    im: r.value.im,
                    multiplicity: r.multiplicity,
                })
                .collect(),
            warnings: self.warnings.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("plain data serializes")
    }
}

/// On-disk form of a [`SpectrumEstimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub schema: u32,
    pub mode: String,
    pub tau: Option<f64>,
    pub rank: usize,
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<f64>,
    pub rho: f64,
    pub roots: Vec<RootJson>,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootJson {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
}

impl SpectrumJson {
    pub fn roots(&self) -> Vec<Root> {
        self.roots
            .iter()
            .map(|r| Root {
                value: Complex64::new(r.re, r.im),
                multiplicity: r.multiplicity,
            })
            .collect()
    }
}

fn prescale_for(values: &[f64], continuous: bool, policy: Prescale) -> bool {
    match policy {
        Prescale::On => true,
        Prescale::Off => false,
        Prescale::Auto => continuous || hankel::dynamic_range(values) > AUTO_PRESCALE_RANGE,
    }
}

/// Hankel → coefficients → roots on raw values. Roots are in the sampled
/// variable (η for continuous time).
fn estimate_roots(values: &[f64], continuous: bool, opts: &EstimatorOptions) -> Result<(Vec<Root>, Diagnostics, Vec<Warning>)> {
    let prescale = prescale_for(values, continuous, opts.prescale);
    let analysis = hankel::build_hankel_from(values, prescale, opts.rank_tolerance)?;
    let poly = solve_coefficients(&analysis)?;
    let (roots, paired) = roots_with_multiplicity(&poly, opts.cluster_tol)?;
    let mut warnings = Vec::new();
    if poly.is_ill_conditioned() {
        warnings.push(Warning::IllConditioned);
    }
    if !paired {
        warnings.push(Warning::UnpairedConjugate);
    }
    let diagnostics = Diagnostics {
        rank: analysis.rank,
        residual: poly.residual,
        condition: poly.condition,
        scale_rho: analysis.scale_rho,
        singular_values: analysis.singular_values,
    };
    Ok((roots, diagnostics, warnings))
}

/// Observable eigenvalues of `G` from `y[k] = c^T G^k x0`.
pub fn estimate_dt_spectrum(y: &OutputSequence, opts: &EstimatorOptions) -> Result<SpectrumEstimate> {
    if y.time_mode.is_continuous() {
        return Err(Error::InvalidParameter(
            "discrete-time estimator given a continuous-time sequence".into(),
        ));
    }
    let (roots, diagnostics, warnings) = estimate_roots(&y.values, false, opts)?;
    Ok(SpectrumEstimate {
        roots,
        time_mode: TimeMode::DiscreteTime,
        diagnostics,
        warnings,
    })
}

/// Observable eigenvalues of `G` for a discrete-time network of identical
/// agents with known dynamics `(A, β, γ)`.
pub fn estimate_networked_dt_spectrum(
    y: &OutputSequence,
    node: &NodeDynamics,
    opts: &EstimatorOptions,
) -> Result<SpectrumEstimate> {
    let nu = nu_sequence(node, TimeMode::DiscreteTime, y.len())?;
    let sigma = deconvolve_sigma(y, &nu)?;
    let sigma_seq = OutputSequence {
        values: sigma.values,
        ..y.clone()
    };
    estimate_dt_spectrum(&sigma_seq, opts)
}

/// Continuous-time estimate: roots `η` of the sampled problem mapped to
/// `λ = log(η) / τ` on the principal branch.
pub fn estimate_ct_spectrum(
    y: &OutputSequence,
    node: Option<&NodeDynamics>,
    opts: &EstimatorOptions,
) -> Result<SpectrumEstimate> {
    let TimeMode::ContinuousTime { tau } = y.time_mode else {
        return Err(Error::InvalidParameter(
            "continuous-time estimator given a discrete-time sequence".into(),
        ));
    };
    let values = match node {
        Some(node) => {
            let nu = nu_sequence(node, y.time_mode, y.len())?;
            divide_sigma(y, &nu)?.values
        }
        None => y.values.clone(),
    };
    let (eta, diagnostics, mut warnings) = estimate_roots(&values, true, opts)?;
    let roots = log_map(&eta, tau, &mut warnings)?;
    Ok(SpectrumEstimate {
        roots,
        time_mode: y.time_mode,
        diagnostics,
        warnings,
    })
}

/// `λ = log(η) / τ`. Multiplicities carry over.
pub fn log_map(eta: &[Root], tau: f64, warnings: &mut Vec<Warning>) -> Result<Vec<Root>> {
    let strip = PI / tau * (1.0 - 1e-9);
    let mut out = Vec::with_capacity(eta.len());
    for r in eta {
        if r.value.norm() <= 1e-12 {
            return Err(Error::LogSingular {
                root: format!("{}", r.value),
            });
        }
        let lambda = r.value.ln() / tau;
        if lambda.im.abs() >= strip && !warnings.contains(&Warning::Aliasing) {
            warnings.push(Warning::Aliasing);
        }
        out.push(Root {
            value: lambda,
            multiplicity: r.multiplicity,
        });
    }
    roots::sort_roots(&mut out);
    Ok(out)
}

/// Dispatches on the sequence's time mode and the presence of node dynamics.
pub fn estimate_spectrum(
    y: &OutputSequence,
    node: Option<&NodeDynamics>,
    opts: &EstimatorOptions,
) -> Result<SpectrumEstimate> {
    match (y.time_mode, node) {
        (TimeMode::DiscreteTime, None) => estimate_dt_spectrum(y, opts),
        (TimeMode::DiscreteTime, Some(node)) => estimate_networked_dt_spectrum(y, node, opts),
        (TimeMode::ContinuousTime { .. }, node) => estimate_ct_spectrum(y, node, opts),
    }
}

/// Reads samples only until the Hankel rank stops growing, then runs the
/// batch discrete-time estimator on the consumed prefix.
pub fn estimate_dt_spectrum_online<I>(
    stream: I,
    n_hint: Option<usize>,
    opts: &EstimatorOptions,
) -> Result<(SpectrumEstimate, OnlineRank)>
where
    I: IntoIterator<Item = f64>,
{
    let online = detect_rank_online(stream, n_hint, opts.rank_tolerance);
    if online.values.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut seq = OutputSequence::discrete(online.values.clone());
    seq.n_hint = n_hint;
    let mut est = estimate_dt_spectrum(&seq, opts)?;
    if online.exhausted {
        est.warnings.push(Warning::StreamExhausted);
    }
    Ok((est, online))
}
