//! Removing known per-agent dynamics from the output of a network of
//! identical agents.

use nalgebra::DVector;

use crate::dynamics::{NodeDynamics, OutputSequence, TimeMode};
use crate::error::{Error, Result};
use crate::expm::matrix_exponential;

/// Relative threshold below which a node impulse weight counts as zero.
const NU_TOLERANCE: f64 = 1e-12;

/// Observation sequence of the bare network, with the agent dynamics removed.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSequence {
    pub values: Vec<f64>,
}

/// Node impulse weights: `ν_k = γ^T A^k β` (discrete) or `γ^T e^{A kτ} β`
/// (continuous).
pub fn nu_sequence(node: &NodeDynamics, time_mode: TimeMode, k_len: usize) -> Result<Vec<f64>> {
    let step = match time_mode {
        TimeMode::DiscreteTime => node.a.clone(),
        TimeMode::ContinuousTime { tau } => matrix_exponential(&node.a, tau)?,
    };
    let gamma = DVector::from_column_slice(&node.gamma);
    let mut v = DVector::from_column_slice(&node.beta);
    let mut out = Vec::with_capacity(k_len);
    for k in 0..k_len {
        if k > 0 {
            v = &step * &v;
        }
        let nu = gamma.dot(&v);
        if !nu.is_finite() {
            return Err(Error::Overflow { index: k });
        }
        out.push(nu);
    }
    Ok(out)
}

fn check_nu(nu: &[f64], needed: usize) -> Result<()> {
    if nu.len() < needed {
        return Err(Error::DimensionMismatch {
            what: "node impulse weights",
            expected: needed,
            got: nu.len(),
        });
    }
    Ok(())
}

/// Solves the lower-triangular system `y_k = Σ_{s≤k} C(k,s) ν_{k-s} σ_s` by
/// forward substitution. Binomials come from Pascal's rule in `f64`.
pub fn deconvolve_sigma(y: &OutputSequence, nu: &[f64]) -> Result<SigmaSequence> {
    let k_len = y.len();
    check_nu(nu, k_len)?;
    let scale = nu.iter().take(k_len).fold(0.0f64, |m, v| m.max(v.abs()));
    if k_len > 0 && !(nu[0].abs() > NU_TOLERANCE * scale) {
        return Err(Error::SingularDeconvolution { index: 0 });
    }
    let mut sigma: Vec<f64> = Vec::with_capacity(k_len);
    let mut pascal: Vec<f64> = Vec::with_capacity(k_len);
    for (k, &yk) in y.values.iter().enumerate() {
        // Advance to row k of Pascal's triangle.
        pascal.push(1.0);
        for s in (1..k).rev() {
            pascal[s] += pascal[s - 1];
        }
        let mut acc = yk;
        for (s, &sig) in sigma.iter().enumerate() {
            acc -= pascal[s] * nu[k - s] * sig;
        }
        sigma.push(acc / nu[0]);
    }
    Ok(SigmaSequence { values: sigma })
}

/// Continuous-time counterpart: the sampled output factors as
/// `y_k = σ_k ν_k`, so the network part is recovered by division.
pub fn divide_sigma(y: &OutputSequence, nu: &[f64]) -> Result<SigmaSequence> {
    let k_len = y.len();
    check_nu(nu, k_len)?;
    let scale = nu.iter().take(k_len).fold(0.0f64, |m, v| m.max(v.abs()));
    let mut values = Vec::with_capacity(k_len);
    for (k, (&yk, &nk)) in y.values.iter().zip(nu).enumerate() {
        if !(nk.abs() > NU_TOLERANCE * scale) {
            return Err(Error::SingularDeconvolution { index: k });
        }
        values.push(yk / nk);
    }
    Ok(SigmaSequence { values })
}
