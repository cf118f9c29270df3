use nalgebra::{DMatrix, DVector};

use super::hankel::HankelAnalysis;
use crate::error::{Error, Result};

/// Condition number above which the coefficient solve is flagged.
pub const ILL_CONDITIONED: f64 = 1e12;

/// Monic `p(x) = x^r + α_{r-1} x^{r-1} + … + α_0`, in the (possibly
/// prescaled) variable of the Hankel analysis it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicPoly {
    /// `α_0 … α_{r-1}`; the leading 1 is implicit.
    pub coefficients: Vec<f64>,
    /// `‖H_r α + y[r..2r)‖₂ / ‖y[r..2r)‖₂`.
    pub residual: f64,
    /// `σ_1 / σ_r` of the `r × r` Hankel block.
    pub condition: f64,
    pub scale_rho: f64,
}

impl CharacteristicPoly {
    pub fn degree(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_ill_conditioned(&self) -> bool {
        self.condition > ILL_CONDITIONED
    }

    /// Evaluates the monic polynomial at `x` by Horner's rule.
    pub fn eval(&self, x: num_complex::Complex64) -> num_complex::Complex64 {
        self.coefficients
            .iter()
            .rev()
            .fold(num_complex::Complex64::new(1.0, 0.0), |acc, &a| acc * x + a)
    }
}

/// Solves `H_r α = -y[r..2r)` on the leading `r × r` block with an SVD
/// pseudo-inverse truncated at the detected rank.
pub fn solve_coefficients(h: &HankelAnalysis) -> Result<CharacteristicPoly> {
    let r = h.rank;
    let y = &h.scaled_values;
    if r == 0 {
        return Ok(CharacteristicPoly {
            coefficients: Vec::new(),
            residual: 0.0,
            condition: 1.0,
            scale_rho: h.scale_rho,
        });
    }
    if y.len() < 2 * r {
        return Err(Error::InsufficientData {
            rank: r,
            needed: 2 * r,
            available: y.len(),
        });
    }
    let block = DMatrix::from_fn(r, r, |i, j| y[i + j]);
    let rhs = DVector::from_iterator(r, y[r..2 * r].iter().copied());
    let svd = block.clone().svd(true, true);
    let (u, v_t) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let sv = &svd.singular_values;
    let top = sv.max();
    let tol = h.rank_tolerance * top;
    let mut alpha = DVector::zeros(r);
    let mut smallest = top;
    for i in 0..r {
        let s = sv[i];
        if s > tol && s > 0.0 {
            let coeff = -u.column(i).dot(&rhs) / s;
            alpha += v_t.row(i).transpose() * coeff;
            smallest = smallest.min(s);
        }
    }
    let condition = if smallest > 0.0 { top / smallest } else { f64::INFINITY };
    let rhs_norm = rhs.norm();
    let resid = (&block * &alpha + &rhs).norm();
    let residual = if rhs_norm > 0.0 { resid / rhs_norm } else { resid };
    Ok(CharacteristicPoly {
        coefficients: alpha.iter().copied().collect(),
        residual,
        condition,
        scale_rho: h.scale_rho,
    })
}
