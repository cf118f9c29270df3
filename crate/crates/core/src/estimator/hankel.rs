//! Hankel matrices of observations and their numerical rank.

use nalgebra::DMatrix;

use crate::dynamics::OutputSequence;
use crate::error::{Error, Result};

/// Relative singular-value threshold used when none is configured:
/// `1e-14 · max(1, size)`, a small multiple of the rounding floor of
/// noise-free double-precision samples. Noisy data needs a larger value.
pub fn default_rank_tolerance(size: usize) -> f64 {
    1e-14 * (size.max(1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HankelAnalysis {
    /// `H[i][j] = y_scaled[i + j]`, square of side `⌊(K+1)/2⌋`.
    pub h: DMatrix<f64>,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub rank_tolerance: f64,
    /// `y_scaled[k] = y[k] / ρ^k`; 1 when no prescaling was applied.
    pub scale_rho: f64,
    pub scaled_values: Vec<f64>,
}

pub fn hankel_matrix(values: &[f64], size: usize) -> DMatrix<f64> {
    DMatrix::from_fn(size, size, |i, j| values[i + j])
}

/// Singular values sorted in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Counts singular values above `tolerance · σ_max`.
pub fn numerical_rank(sv: &[f64], tolerance: f64) -> usize {
    match sv.first() {
        Some(&top) if top > 0.0 => sv.iter().filter(|&&s| s > tolerance * top).count(),
        _ => 0,
    }
}

/// Geometric growth factor used to normalize unstable sequences.
///
/// With amplitude `a = max(|y0|, |y1|)` (or `max |y|` when both vanish),
/// `ρ = max(1, max_{k≥1} (|y_k| / a)^{1/k})`.
pub fn growth_factor(values: &[f64]) -> f64 {
    let head = values.iter().take(2).fold(0.0f64, |m, v| m.max(v.abs()));
    let amplitude = if head > 0.0 {
        head
    } else {
        values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };
    if amplitude == 0.0 {
        return 1.0;
    }
    let rho = values
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, v)| **v != 0.0)
        .map(|(k, v)| (v.abs() / amplitude).powf(1.0 / k as f64))
        .fold(1.0f64, f64::max);
    rho
}

/// Ratio of the largest sample to the leading amplitude; large values mean
/// the sequence grows geometrically.
pub fn dynamic_range(values: &[f64]) -> f64 {
    let head = values.iter().take(2).fold(0.0f64, |m, v| m.max(v.abs()));
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        1.0
    } else if head == 0.0 {
        f64::INFINITY
    } else {
        top / head
    }
}

/// Builds the largest square Hankel matrix from `y`, optionally after
/// geometric prescaling, and detects its numerical rank.
pub fn build_hankel(y: &OutputSequence, prescale: bool, rank_tolerance: Option<f64>) -> Result<HankelAnalysis> {
    build_hankel_from(&y.values, prescale, rank_tolerance)
}

pub(crate) fn build_hankel_from(values: &[f64], prescale: bool, rank_tolerance: Option<f64>) -> Result<HankelAnalysis> {
    if values.is_empty() {
        return Err(Error::EmptySequence);
    }
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Overflow { index: k });
    }
    let scale_rho = if prescale { growth_factor(values) } else { 1.0 };
    let scaled_values: Vec<f64> = if scale_rho == 1.0 {
        values.to_vec()
    } else {
        let inv = 1.0 / scale_rho;
        let mut f = 1.0;
        values
            .iter()
            .map(|v| {
                let s = v * f;
                f *= inv;
                s
            })
            .collect()
    };
    let size = values.len().div_ceil(2);
    let h = hankel_matrix(&scaled_values, size);
    let sv = singular_values(&h);
    let tol = rank_tolerance.unwrap_or_else(|| default_rank_tolerance(size));
    Ok(HankelAnalysis {
        rank: numerical_rank(&sv, tol),
        h,
        singular_values: sv,
        rank_tolerance: tol,
        scale_rho,
        scaled_values,
    })
}

/// Outcome of incremental rank detection.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineRank {
    pub rank: usize,
    /// Number of samples read from the stream.
    pub consumed: usize,
    /// The stream ended before the rank settled (and before `2 n_hint`).
    pub exhausted: bool,
    /// The consumed prefix.
    pub values: Vec<f64>,
}

/// Grows a `k × k` Hankel matrix one step at a time from `y[0..2k-1)` and
/// stops as soon as appending `y[2k-1], y[2k]` fails to raise its rank.
///
/// With `n_hint = Some(n)` at most `2n` samples are read: once the `n × n`
/// matrix has been formed only `y[2n-1]` (needed by the coefficient solve) is
/// taken.
pub fn detect_rank_online<I>(stream: I, n_hint: Option<usize>, rank_tolerance: Option<f64>) -> OnlineRank
where
    I: IntoIterator<Item = f64>,
{
    let mut it = stream.into_iter();
    let mut values = Vec::new();
    let rank_of = |vals: &[f64], k: usize| {
        let sv = singular_values(&hankel_matrix(vals, k));
        numerical_rank(&sv, rank_tolerance.unwrap_or_else(|| default_rank_tolerance(k)))
    };

    let Some(first) = it.next() else {
        return OnlineRank {
            rank: 0,
            consumed: 0,
            exhausted: true,
            values,
        };
    };
    values.push(first);
    let mut k = 1;
    let mut rank = rank_of(&values, 1);
    loop {
        if n_hint.is_some_and(|n| k >= n) {
            if let Some(v) = it.next() {
                values.push(v);
            }
            let exhausted = values.len() < 2 * k;
            return OnlineRank {
                rank,
                consumed: values.len(),
                exhausted,
                values,
            };
        }
        let mut complete = true;
        for _ in 0..2 {
            match it.next() {
                Some(v) => values.push(v),
                None => complete = false,
            }
        }
        if !complete {
            return OnlineRank {
                rank,
                consumed: values.len(),
                exhausted: true,
                values,
            };
        }
        k += 1;
        let next = rank_of(&values, k);
        if next <= rank {
            return OnlineRank {
                rank,
                consumed: values.len(),
                exhausted: false,
                values,
            };
        }
        rank = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sequence_rank_one() {
        let h = build_hankel(&OutputSequence::discrete(vec![3.0; 4]), false, None).unwrap();
        assert_eq!(h.h, DMatrix::from_element(2, 2, 3.0));
        assert_eq!(h.rank, 1);
        assert_eq!(h.scale_rho, 1.0);
    }

    #[test]
    fn alternating_sequence_rank_two() {
        let h = build_hankel(&OutputSequence::discrete(vec![1.0, 0.0, 1.0, 0.0]), false, None).unwrap();
        assert_eq!(h.h, DMatrix::identity(2, 2));
        assert_eq!(h.singular_values, vec![1.0, 1.0]);
        assert_eq!(h.rank, 2);
    }

    #[test]
    fn jordan_sequence_rank_two() {
        let h = build_hankel(&OutputSequence::discrete(vec![0.0, 1.0, 1.0, 0.75]), false, None).unwrap();
        assert_eq!(h.h, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 1.0]));
        assert_eq!(h.rank, 2);
    }

    #[test]
    fn size_from_odd_and_even_lengths() {
        assert_eq!(build_hankel_from(&[1.0; 5], false, None).unwrap().h.nrows(), 3);
        assert_eq!(build_hankel_from(&[1.0; 6], false, None).unwrap().h.nrows(), 3);
        assert_eq!(build_hankel_from(&[1.0], false, None).unwrap().h.nrows(), 1);
    }

    #[test]
    fn empty_and_zero() {
        assert_eq!(build_hankel_from(&[], false, None), Err(Error::EmptySequence));
        assert_eq!(build_hankel_from(&[0.0; 6], true, None).unwrap().rank, 0);
    }

    #[test]
    fn prescale_divides_by_powers() {
        let y: Vec<f64> = (0..8).map(|k| 3f64.powi(k)).collect();
        let h = build_hankel_from(&y, true, None).unwrap();
        // a = max(|y0|, |y1|) = 3, so the largest ratio is (3^7 / 3)^{1/7}.
        let rho = 3f64.powf(6.0 / 7.0);
        assert!((h.scale_rho - rho).abs() < 1e-14);
        for (k, v) in h.scaled_values.iter().enumerate() {
            let want = (3.0 / rho).powi(k as i32);
            assert!((v - want).abs() < 1e-14 * want, "{v} vs {want}");
        }
        assert_eq!(h.rank, 1);
        assert_eq!(growth_factor(&[1.0, 0.5, 0.25]), 1.0);
    }

    #[test]
    fn online_constant_stream() {
        let r = detect_rank_online(std::iter::repeat(2.5), None, None);
        assert_eq!((r.rank, r.consumed, r.exhausted), (1, 3, false));
    }

    #[test]
    fn online_zero_stream() {
        let r = detect_rank_online(std::iter::repeat(0.0), None, None);
        assert_eq!((r.rank, r.consumed), (0, 3));
    }

    #[test]
    fn online_two_modes() {
        let y = (0..).map(|k| 0.5f64.powi(k) + (-0.8f64).powi(k) * 2.0);
        let r = detect_rank_online(y, Some(2), None);
        assert_eq!(r.rank, 2);
        assert!(r.consumed <= 4);
        let y = (0..).map(|k| 0.5f64.powi(k) + (-0.8f64).powi(k) * 2.0);
        let r = detect_rank_online(y, None, None);
        assert_eq!((r.rank, r.consumed), (2, 5));
    }

    #[test]
    fn online_exhausted_stream() {
        let r = detect_rank_online(vec![1.0, 2.0, 5.0, 7.0], None, None);
        assert!(r.exhausted);
        assert_eq!(r.consumed, 4);
        assert_eq!(r.rank, 2);
    }
}
