//! Minimum-cost one-to-one matching between true and estimated eigenvalues.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::OracleSpectrum;
use crate::estimator::SpectrumEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(z: ComplexJson) -> Self {
        Complex64::new(z.re, z.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub truth_index: usize,
    pub estimated_index: usize,
    pub truth: ComplexJson,
    pub estimated: ComplexJson,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub schema: u32,
    pub max_error: f64,
    pub mean_error: f64,
    /// Sorted by `truth_index`.
    pub pairs: Vec<MatchedPair>,
    pub unmatched_true: Vec<usize>,
    pub unmatched_estimated: Vec<usize>,
}

impl MatchReport {
    /// Every true value matched, no spurious estimates, errors within `tol`.
    pub fn is_exact_within(&self, tol: f64) -> bool {
        self.unmatched_true.is_empty() && self.unmatched_estimated.is_empty() && self.max_error <= tol
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Rectangular assignment minimizing `Σ cost[i][assign[i]]` for
/// `rows <= cols`; returns the column of each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let rows = cost.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = cost[0].len();
    assert!(rows <= cols, "hungarian needs rows <= cols");
    // Potentials-based shortest augmenting path, 1-based with sentinel column 0.
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            assign[owner[j] - 1] = j - 1;
        }
    }
    assign
}

/// Optimal matching of `truth` to `estimated` under `|λ - μ|`. When the
/// counts differ the surplus on the longer side is reported unmatched.
pub fn match_values(truth: &[Complex64], estimated: &[Complex64]) -> MatchReport {
    let transpose = truth.len() > estimated.len();
    let (rows, cols) = if transpose { (estimated, truth) } else { (truth, estimated) };
    let cost: Vec<Vec<f64>> = rows.iter().map(|r| cols.iter().map(|c| (r - c).norm()).collect()).collect();
    let assign = hungarian(&cost);
    let mut pairs: Vec<MatchedPair> = assign
        .iter()
        .enumerate()
        .map(|(r, &c)| {
            let (ti, ei) = if transpose { (c, r) } else { (r, c) };
            MatchedPair {
                truth_index: ti,
                estimated_index: ei,
                truth: truth[ti].into(),
                estimated: estimated[ei].into(),
                error: (truth[ti] - estimated[ei]).norm(),
            }
        })
        .collect();
    pairs.sort_by_key(|p| p.truth_index);
    let unmatched_true = (0..truth.len())
        .filter(|i| !pairs.iter().any(|p| p.truth_index == *i))
        .collect();
    let unmatched_estimated = (0..estimated.len())
        .filter(|i| !pairs.iter().any(|p| p.estimated_index == *i))
        .collect();
    let max_error = pairs.iter().map(|p| p.error).fold(0.0, f64::max);
    let mean_error = if pairs.is_empty() {
        0.0
    } else {
        pairs.iter().map(|p| p.error).sum::<f64>() / pairs.len() as f64
    };
    MatchReport {
        schema: 1,
        max_error,
        mean_error,
        pairs,
        unmatched_true,
        unmatched_estimated,
    }
}

/// Matches the estimator output (expanded by multiplicity) against the
/// recoverable part of the oracle spectrum.
pub fn match_spectra(oracle: &OracleSpectrum, estimate: &SpectrumEstimate) -> MatchReport {
    match_values(&oracle.observable(), &estimate.expanded())
}
