//! Real matrices with a prescribed Jordan structure and a prescribed
//! observed depth per block, with exact ground-truth weights.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use super::{OracleEigenvalue, OracleSpectrum, DISTINCT_TOLERANCE};
use crate::dynamics::ObservationSetup;
use crate::error::{Error, Result};
use crate::graph::{seeded_rng, GraphMatrix};

/// Upper bound on `cond(V)` for the similarity transform.
pub const MAX_CONDITION: f64 = 100.0;

/// One Jordan block. A non-real `value` (with positive imaginary part) also
/// places the conjugate block, so the resulting matrix stays real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JordanBlockSpec {
    pub value: Complex64,
    pub size: usize,
    /// How many generalized modes of this block reach the output
    /// (`0` hides the block entirely).
    pub observed_depth: usize,
}

impl JordanBlockSpec {
    pub fn real(value: f64, size: usize, observed_depth: usize) -> Self {
        Self {
            value: Complex64::new(value, 0.0),
            size,
            observed_depth,
        }
    }

    pub fn complex(value: Complex64, size: usize, observed_depth: usize) -> Self {
        Self {
            value,
            size,
            observed_depth,
        }
    }

    fn is_real(&self) -> bool {
        self.value.im == 0.0
    }
}

/// `G = V J V^{-1}` with readout `c` and initial condition `x0`, plus the
/// per-block weights `ω^{(s)} = Σ_l p_{l-s} q_l` in eigen-coordinates.
#[derive(Debug, Clone)]
pub struct JordanTestCase {
    pub blocks: Vec<JordanBlockSpec>,
    pub g: GraphMatrix,
    pub setup: ObservationSetup,
    pub v: DMatrix<Complex64>,
    pub condition: f64,
    /// Every placed block, conjugates included.
    pub placed: Vec<PlacedBlock>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacedBlock {
    pub value: Complex64,
    pub size: usize,
    pub observed_depth: usize,
    /// `ω^{(s)}` for `s < size`.
    pub weights: Vec<Complex64>,
}

fn cond(v: &DMatrix<Complex64>) -> f64 {
    let sv = v.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

fn signed_magnitude<R: Rng>(rng: &mut R) -> f64 {
    let m = rng.gen_range(0.5..1.0);
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Builds a seeded test case for `blocks`.
pub fn make_jordan_case(blocks: &[JordanBlockSpec], seed: u64) -> Result<JordanTestCase> {
    if blocks.is_empty() {
        return Err(Error::InvalidParameter("at least one Jordan block is required".into()));
    }
    for b in blocks {
        if b.size == 0 || b.observed_depth > b.size {
            return Err(Error::InvalidParameter(format!(
                "block size {} with observed depth {} is not valid",
                b.size, b.observed_depth
            )));
        }
        if b.value.im < 0.0 || !b.value.re.is_finite() || !b.value.im.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "block eigenvalue {} must be finite with non-negative imaginary part",
                b.value
            )));
        }
    }
    if blocks.iter().all(|b| b.observed_depth == 0) {
        return Err(Error::InfeasiblePattern);
    }
    let n: usize = blocks.iter().map(|b| if b.is_real() { b.size } else { 2 * b.size }).sum();
    let mut rng = seeded_rng(seed);

    // Block layout: (start column, value, size, p-entries); conjugate blocks follow their partner.
    let mut j = DMatrix::<Complex64>::zeros(n, n);
    let mut v0 = DMatrix::<Complex64>::zeros(n, n);
    let mut p = vec![Complex64::default(); n];
    let mut layout = Vec::new();
    let mut col = 0;
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    for b in blocks {
        let mut entries = vec![Complex64::default(); b.size];
        for e in entries.iter_mut().skip(b.size - b.observed_depth) {
            *e = if b.is_real() {
                Complex64::new(signed_magnitude(&mut rng), 0.0)
            } else {
                Complex64::new(signed_magnitude(&mut rng), signed_magnitude(&mut rng))
            };
        }
        let copies: Vec<(Complex64, bool)> = if b.is_real() {
            vec![(b.value, false)]
        } else {
            vec![(b.value, false), (b.value.conj(), true)]
        };
        for (value, conj) in copies {
            for l in 0..b.size {
                j[(col + l, col + l)] = value;
                if l + 1 < b.size {
                    j[(col + l, col + l + 1)] = Complex64::new(1.0, 0.0);
                }
                p[col + l] = if conj { entries[l].conj() } else { entries[l] };
                if b.is_real() {
                    v0[(col + l, col + l)] = Complex64::new(1.0, 0.0);
                } else {
                    // Columns w and conj(w) with w = (e_a + i e_b) / √2.
                    let (a, bb) = (col - if conj { b.size } else { 0 } + l, col + if conj { 0 } else { b.size } + l);
                    v0[(a, col + l)] = Complex64::new(s2, 0.0);
                    v0[(bb, col + l)] = Complex64::new(0.0, if conj { -s2 } else { s2 });
                }
            }
            layout.push((col, value, b.size, b.observed_depth));
            col += b.size;
        }
    }

    // Random perturbation with the same conjugate column structure.
    let mut r = DMatrix::<Complex64>::zeros(n, n);
    for &(start, value, size, _) in &layout {
        let is_conj_copy = value.im < 0.0;
        for l in 0..size {
            let c = start + l;
            if value.im == 0.0 {
                for i in 0..n {
                    r[(i, c)] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
                }
            } else if !is_conj_copy {
                for i in 0..n {
                    r[(i, c)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
                for i in 0..n {
                    r[(i, c + size)] = r[(i, c)].conj();
                }
            }
        }
    }
    let mut t = 0.5;
    let mut v = &v0 + &r * Complex64::new(t, 0.0);
    let mut condition = cond(&v);
    while condition > MAX_CONDITION {
        t *= 0.5;
        v = &v0 + &r * Complex64::new(t, 0.0);
        condition = cond(&v);
    }
    let v_inv = v.clone().try_inverse().ok_or(Error::InfeasiblePattern)?;

    let g_c = &v * &j * &v_inv;
    let g = GraphMatrix::from_matrix(g_c.map(|z| z.re))?;

    let mut x0 = vec![0.0; n];
    for x in x0.iter_mut() {
        *x = rng.gen_range(0.0..1.0);
    }
    let p_row = DMatrix::from_row_slice(1, n, &p);
    let c_c = &p_row * &v_inv;
    let c: Vec<f64> = c_c.iter().map(|z| z.re).collect();
    let x0c = DMatrix::from_iterator(n, 1, x0.iter().map(|&x| Complex64::new(x, 0.0)));
    let q = &v_inv * x0c;

    let placed = layout
        .iter()
        .map(|&(start, value, size, observed_depth)| PlacedBlock {
            value,
            size,
            observed_depth,
            weights: (0..size)
                .map(|s| (s..size).map(|l| p[start + l - s] * q[start + l]).sum())
                .collect(),
        })
        .collect();

    Ok(JordanTestCase {
        blocks: blocks.to_vec(),
        g,
        setup: ObservationSetup {
            x0,
            c,
            seed: Some(seed),
        },
        v,
        condition,
        placed,
    })
}

impl JordanTestCase {
    pub fn n(&self) -> usize {
        self.g.n()
    }

    /// Exact partition from the construction, grouping equal eigenvalues.
    pub fn oracle(&self) -> OracleSpectrum {
        let mut distinct: Vec<OracleEigenvalue> = Vec::new();
        for b in &self.placed {
            let (value, size, w) = (&b.value, &b.size, &b.weights);
            let hidden_eigvec = b.observed_depth < b.size;
            let pos = distinct
                .iter()
                .position(|d| (d.value - value).norm() <= DISTINCT_TOLERANCE * value.norm().max(1.0));
            match pos {
                Some(i) => {
                    let d = &mut distinct[i];
                    d.algebraic_multiplicity += size;
                    if d.total_weights.len() < w.len() {
                        d.total_weights.resize(w.len(), Complex64::default());
                    }
                    for (acc, x) in d.total_weights.iter_mut().zip(w) {
                        *acc += x;
                    }
                    d.pbh_deficiency += usize::from(hidden_eigvec);
                }
                None => distinct.push(OracleEigenvalue {
                    value: *value,
                    algebraic_multiplicity: *size,
                    pbh_deficiency: usize::from(hidden_eigvec),
                    observable: false,
                    observed_multiplicity: None,
                    total_weights: w.clone(),
                }),
            }
        }
        for d in &mut distinct {
            let scale = d.total_weights.iter().map(|w| w.norm()).fold(0.0, f64::max).max(1.0);
            let depth = d
                .total_weights
                .iter()
                .rposition(|w| w.norm() > 1e-12 * scale)
                .map_or(0, |s| s + 1);
            d.observed_multiplicity = Some(depth);
            d.observable = depth > 0;
        }
        OracleSpectrum {
            distinct,
            eigenvectors: None,
        }
    }

    /// Expected Hankel rank `Σ m̃` over distinct eigenvalues.
    pub fn expected_rank(&self) -> usize {
        self.oracle().distinct.iter().map(|d| d.recoverable_count()).sum()
    }
}
