//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (Higham, "The scaling and squaring method for the matrix exponential
//! revisited", 2005).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068e0),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Returns `e^{M t}`.
pub fn matrix_exponential(m: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            what: "matrix exponential needs a square matrix",
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if !t.is_finite() || m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("matrix exponential of non-finite input".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let a = m * t;
    let norm = one_norm(&a);
    let ident = DMatrix::<f64>::identity(n, n);

    let result = if let Some(&(order, _)) = THETA.iter().find(|(_, theta)| norm <= *theta) {
        let coeffs: &[f64] = match order {
            3 => &B3,
            5 => &B5,
            7 => &B7,
            _ => &B9,
        };
        let a2 = &a * &a;
        // Even powers A^0, A^2, ..., A^{order-1}.
        let mut powers = vec![ident.clone()];
        for _ in 0..order / 2 {
            let next = powers.last().unwrap() * &a2;
            powers.push(next);
        }
        let mut u = DMatrix::zeros(n, n);
        let mut v = DMatrix::zeros(n, n);
        for (k, p) in powers.iter().enumerate() {
            u += p * coeffs[2 * k + 1];
            v += p * coeffs[2 * k];
        }
        let u = &a * u;
        pade_quotient(&u, &v)?
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
        let a = a * 2f64.powi(-s);
        let b = &B13;
        let a2 = &a * &a;
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
            + &a6 * b[7]
            + &a4 * b[5]
            + &a2 * b[3]
            + &ident * b[1];
        let u = &a * u_inner;
        let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
            + &a6 * b[6]
            + &a4 * b[4]
            + &a2 * b[2]
            + &ident * b[0];
        let mut r = pade_quotient(&u, &v)?;
        for _ in 0..s {
            r = &r * &r;
        }
        r
    };
    if result.iter().any(|v| !v.is_finite()) {
        return Err(Error::MatrixExpOverflow);
    }
    Ok(result)
}

fn pade_quotient(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = v + u;
    let q = v - u;
    q.lu().solve(&p).ok_or(Error::MatrixExpOverflow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, FRAC_PI_2};

    #[test]
    fn zero_is_identity() {
        let z = DMatrix::zeros(3, 3);
        assert_eq!(matrix_exponential(&z, 1.0).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0]));
        let e = matrix_exponential(&m, 1.0).unwrap();
        assert_relative_eq!(e[(0, 0)], E, max_relative = 1e-14);
        assert_relative_eq!(e[(1, 1)], E * E, max_relative = 1e-14);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn quarter_rotation() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let e = matrix_exponential(&m, FRAC_PI_2).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!((e - expected).amax() < 1e-14);
    }

    #[test]
    fn jordan_block_against_closed_form() {
        // exp([[a,1],[0,a]] t) = e^{at} [[1, t],[0, 1]]
        for &(a, t) in &[(0.3, 0.01), (-1.2, 0.7), (0.5, 4.0), (2.0, 3.0)] {
            let m = DMatrix::from_row_slice(2, 2, &[a, 1.0, 0.0, a]);
            let e = matrix_exponential(&m, t).unwrap();
            let s = f64::exp(a * t);
            assert_relative_eq!(e[(0, 0)], s, max_relative = 1e-13);
            assert_relative_eq!(e[(0, 1)], s * t, max_relative = 1e-13);
            assert_relative_eq!(e[(1, 1)], s, max_relative = 1e-13);
            assert!(e[(1, 0)].abs() < 1e-13 * s);
        }
    }

    #[test]
    fn overflow_reported() {
        let m = DMatrix::from_row_slice(1, 1, &[800.0]);
        assert_eq!(matrix_exponential(&m, 1.0), Err(Error::MatrixExpOverflow));
    }

    #[test]
    fn rejects_rectangular() {
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(matrix_exponential(&m, 1.0).is_err());
    }
}
