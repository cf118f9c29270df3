//! Ground truth for verification: dense eigenvalues, PBH observability,
//! modal weights, constructed Jordan test cases, and spectrum matching.

pub mod jordan;
pub mod matching;

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::estimator::roots::{cluster_roots, sort_roots, symmetrize_conjugates, Root};
use crate::graph::{seeded_rng, GraphMatrix};

pub use jordan::{make_jordan_case, JordanBlockSpec, JordanTestCase};
pub use matching::{match_spectra, match_values, ComplexJson, MatchReport, MatchedPair};

const SCHUR_MAX_ITER: usize = 10_000;
/// Relative singular-value cutoff for the PBH and eigenspace rank tests.
pub const PBH_TOLERANCE: f64 = 1e-10;
/// Eigenvalues closer than this (relative) are treated as one distinct value.
pub const DISTINCT_TOLERANCE: f64 = 1e-6;

/// All `n` eigenvalues of `G` from a real Schur decomposition, with exact
/// conjugate symmetry.
pub fn full_spectrum(g: &GraphMatrix) -> Result<Vec<Complex64>> {
    eigenvalues(&g.matrix)
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            what: "eigenvalues of a non-square matrix",
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let schur = schur_with_restarts(m)?;
    let mut roots: Vec<Root> = schur
        .complex_eigenvalues()
        .iter()
        .map(|&value| Root { value, multiplicity: 1 })
        .collect();
    symmetrize_conjugates(&mut roots, 0.0);
    sort_roots(&mut roots);
    Ok(roots.into_iter().map(|r| r.value).collect())
}

/// Francis QR stalls on exact cyclic structure (weighted directed rings). A
/// random orthogonal similarity changes the Krylov start vector of the
/// Hessenberg reduction and removes the symmetry without moving eigenvalues.
fn schur_with_restarts(m: &DMatrix<f64>) -> Result<Schur<f64, nalgebra::Dyn>> {
    let n = m.nrows();
    if let Some(s) = Schur::try_new(m.clone(), f64::EPSILON, 10 * n + 20) {
        return Ok(s);
    }
    let mut rng = seeded_rng(0x5C4E);
    for _ in 0..4 {
        let r = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let q = r.qr().q();
        let rotated = q.transpose() * m * &q;
        if let Some(s) = Schur::try_new(rotated, f64::EPSILON, SCHUR_MAX_ITER) {
            return Ok(s);
        }
    }
    Err(Error::NoConvergence {
        iterations: SCHUR_MAX_ITER,
    })
}

/// One distinct eigenvalue of the ground-truth matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEigenvalue {
    pub value: Complex64,
    pub algebraic_multiplicity: usize,
    /// `n - rank [G - λI; c^T]`: number of eigen-directions hidden from `c`.
    pub pbh_deficiency: usize,
    /// Whether the eigenvalue reaches the output (belongs to the observable set).
    pub observable: bool,
    /// Size of the largest block with a nonzero total weight, when known.
    pub observed_multiplicity: Option<usize>,
    /// Total weights `ω̄^{(s)}` for `s = 0, 1, …` when known.
    pub total_weights: Vec<Complex64>,
}

impl OracleEigenvalue {
    /// Copies of this eigenvalue an exact estimator is expected to return.
    pub fn recoverable_count(&self) -> usize {
        if !self.observable {
            0
        } else {
            self.observed_multiplicity.unwrap_or(self.algebraic_multiplicity)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpectrum {
    pub distinct: Vec<OracleEigenvalue>,
    /// Right eigenvectors `U` (columns) and left eigenvectors `W` (rows)
    /// with `W U = I`; present only for diagonalizable matrices.
    pub eigenvectors: Option<(DMatrix<Complex64>, DMatrix<Complex64>)>,
}

impl OracleSpectrum {
    /// Every eigenvalue repeated by algebraic multiplicity.
    pub fn all(&self) -> Vec<Complex64> {
        self.distinct
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.value, e.algebraic_multiplicity))
            .collect()
    }

    /// The observable set, each value repeated by its recoverable count.
    pub fn observable(&self) -> Vec<Complex64> {
        self.distinct
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.value, e.recoverable_count()))
            .collect()
    }

    pub fn unobservable(&self) -> Vec<Complex64> {
        self.distinct.iter().filter(|e| !e.observable).map(|e| e.value).collect()
    }

    /// Group index of each entry of [`OracleSpectrum::all`].
    pub fn group_of_all(&self) -> Vec<usize> {
        self.distinct
            .iter()
            .enumerate()
            .flat_map(|(i, e)| std::iter::repeat_n(i, e.algebraic_multiplicity))
            .collect()
    }

    pub fn is_diagonalizable(&self) -> bool {
        self.eigenvectors.is_some()
    }

    /// `Σ_i ω̄_i^{(0)} λ_i^k`, the modal expansion of the output, for
    /// diagonalizable cases.
    pub fn modal_output(&self, k: usize) -> Option<f64> {
        self.eigenvectors.as_ref()?;
        let sum: Complex64 = self
            .distinct
            .iter()
            .map(|e| e.total_weights.first().copied().unwrap_or_default() * e.value.powu(k as u32))
            .sum();
        Some(sum.re)
    }
}

fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Singular values (descending) and right singular vectors (columns of `V`,
/// ordered alike) of a complex matrix.
fn svd_with_v(m: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let svd = m.svd(false, true);
    let v = svd.v_t.expect("requested").adjoint();
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let v_sorted = DMatrix::from_fn(v.nrows(), idx.len(), |r, c| v[(r, idx[c])]);
    (sv, v_sorted)
}

/// Null space basis of `m` (columns), using `tol` relative to `σ_max` (or
/// `scale` when that is larger).
fn null_space(m: DMatrix<Complex64>, tol: f64, scale: f64) -> DMatrix<Complex64> {
    let cols = m.ncols();
    let (sv, v) = svd_with_v(m);
    let top = sv.first().copied().unwrap_or(0.0).max(scale);
    let rank = sv.iter().filter(|&&s| s > tol * top).count();
    v.columns(rank, cols - rank).into_owned()
}

/// Partitions the spectrum of `G` into modes that do and do not reach the
/// output `y[k] = c^T G^k x0`.
///
/// Every distinct eigenvalue gets a PBH rank test on `[G - λI; c^T]`. When
/// `G` is diagonalizable the total weights `ω̄ = c^T P_λ x0` (with `P_λ` the
/// spectral projector) decide membership and `m̃ = 1`. For defective
/// matrices membership falls back to the PBH test and `m̃` is left unknown;
/// use [`JordanTestCase::oracle`] for controlled defective instances.
pub fn observable_partition(g: &GraphMatrix, c: &[f64], x0: &[f64]) -> Result<OracleSpectrum> {
    let n = g.n();
    for (what, v) in [("output vector c", c), ("initial condition x0", x0)] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                got: v.len(),
            });
        }
    }
    let eig = full_spectrum(g)?;
    let mut groups = cluster_roots(&eig, DISTINCT_TOLERANCE);
    symmetrize_conjugates(&mut groups, 0.0);
    sort_roots(&mut groups);

    let gc = complexify(&g.matrix);
    let norm_g = g.matrix.norm().max(1.0);
    let c_row = DMatrix::from_fn(1, n, |_, j| Complex64::new(c[j], 0.0));
    let ident = DMatrix::<Complex64>::identity(n, n);

    let mut distinct = Vec::with_capacity(groups.len());
    let mut right_blocks = Vec::new();
    let mut left_blocks = Vec::new();
    let mut diagonalizable = true;
    for grp in &groups {
        let lambda = grp.value;
        let shifted = &gc - &ident * lambda;
        let mut stacked = DMatrix::zeros(n + 1, n);
        stacked.view_mut((0, 0), (n, n)).copy_from(&shifted);
        stacked.view_mut((n, 0), (1, n)).copy_from(&c_row);
        let (sv, _) = svd_with_v(stacked);
        let top = sv.first().copied().unwrap_or(0.0).max(norm_g);
        let pbh_rank = sv.iter().filter(|&&s| s > PBH_TOLERANCE * top).count();

        // Eigenspace tolerance is looser: λ carries eigensolver error.
        let right = null_space(shifted.clone(), 1e-8, norm_g);
        let left = null_space(shifted.transpose(), 1e-8, norm_g);
        if right.ncols() != grp.multiplicity || left.ncols() != grp.multiplicity {
            diagonalizable = false;
        }
        right_blocks.push(right);
        left_blocks.push(left);
        distinct.push(OracleEigenvalue {
            value: lambda,
            algebraic_multiplicity: grp.multiplicity,
            pbh_deficiency: n - pbh_rank,
            observable: pbh_rank == n,
            observed_multiplicity: None,
            total_weights: Vec::new(),
        });
    }

    if !diagonalizable {
        for (d, right) in distinct.iter_mut().zip(&right_blocks) {
            // A defective eigenvalue is hidden only if c kills its whole eigenspace.
            d.observable = d.pbh_deficiency < right.ncols().max(1);
        }
        return Ok(OracleSpectrum {
            distinct,
            eigenvectors: None,
        });
    }

    let x0v = DVector::from_iterator(n, x0.iter().map(|&v| Complex64::new(v, 0.0)));
    let cv = DVector::from_iterator(n, c.iter().map(|&v| Complex64::new(v, 0.0)));
    let mut u_full = DMatrix::zeros(n, n);
    let mut w_full = DMatrix::zeros(n, n);
    let mut col = 0;
    let mut weights = Vec::with_capacity(distinct.len());
    for (right, left) in right_blocks.iter().zip(&left_blocks) {
        let gmul = right.ncols();
        // W_λ = (L^T U)^{-1} L^T so that W_λ U_λ = I.
        let gram = left.transpose() * right;
        let w_block = gram
            .lu()
            .solve(&left.transpose())
            .ok_or(Error::NoConvergence { iterations: 0 })?;
        let omega: Complex64 = (cv.transpose() * right * &w_block * &x0v)[(0, 0)];
        weights.push(omega);
        u_full.view_mut((0, col), (n, gmul)).copy_from(right);
        w_full.view_mut((col, 0), (gmul, n)).copy_from(&w_block);
        col += gmul;
    }
    let scale: f64 = weights.iter().map(|w| w.norm()).sum::<f64>().max(f64::MIN_POSITIVE);
    for (d, w) in distinct.iter_mut().zip(weights) {
        d.total_weights = vec![w];
        d.observable = w.norm() > 1e-11 * scale;
        d.observed_multiplicity = Some(usize::from(d.observable));
    }
    Ok(OracleSpectrum {
        distinct,
        eigenvectors: Some((u_full, w_full)),
    })
}

/// Outcome of checking an estimate against the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    /// Matching of every oracle eigenvalue against the estimate.
    pub report: MatchReport,
    /// Oracle groups that received fewer matches than they can deliver.
    pub missing: Vec<Complex64>,
    pub passed: bool,
}

/// Passes when every matched pair is within `tol` and every eigenvalue left
/// unmatched is one the output cannot reveal (an unobservable mode, or a
/// surplus copy of a repeated eigenvalue beyond its observed multiplicity).
pub fn verify_estimate(oracle: &OracleSpectrum, estimated: &[Complex64], tol: f64) -> Verification {
    let truth = oracle.all();
    let groups = oracle.group_of_all();
    let report = match_values(&truth, estimated);
    let mut matched = vec![0usize; oracle.distinct.len()];
    for p in report.pairs.iter().filter(|p| p.error <= tol) {
        matched[groups[p.truth_index]] += 1;
    }
    let missing: Vec<Complex64> = oracle
        .distinct
        .iter()
        .zip(&matched)
        .filter(|(d, &m)| m < d.recoverable_count())
        .map(|(d, _)| d.value)
        .collect();
    let passed = missing.is_empty() && report.max_error <= tol;
    Verification {
        report,
        missing,
        passed,
    }
}

/// Maximum `|det(G - sI)| / Π|λ_i - s|` deviation from 1 over the shifts.
pub fn determinant_cross_check(g: &GraphMatrix, eig: &[Complex64], shifts: &[Complex64]) -> f64 {
    let gc = complexify(&g.matrix);
    let n = g.n();
    shifts
        .iter()
        .map(|&s| {
            let det = (&gc - DMatrix::<Complex64>::identity(n, n) * s).determinant().norm();
            let prod: f64 = eig.iter().map(|l| (l - s).norm()).product();
            (det / prod - 1.0).abs()
        })
        .fold(0.0, f64::max)
}
