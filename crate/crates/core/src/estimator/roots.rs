//! Polynomial roots as eigenvalues of the balanced companion matrix, found
//! with a shifted complex QR iteration, then clustered into multiple roots.

use num_complex::Complex64;

use super::poly::CharacteristicPoly;
use crate::error::{Error, Result};

/// A distinct root and how many times it occurs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

/// Frobenius companion matrix of the monic polynomial with coefficients
/// `α_0 … α_{r-1}`: first row `-α_{r-1} … -α_0`, ones on the subdiagonal.
pub fn companion_matrix(coefficients: &[f64]) -> Vec<Vec<f64>> {
    let r = coefficients.len();
    let mut c = vec![vec![0.0; r]; r];
    for j in 0..r {
        c[0][j] = -coefficients[r - 1 - j];
    }
    for i in 1..r {
        c[i][i - 1] = 1.0;
    }
    c
}

/// Parlett–Reinsch balancing with radix-2 diagonal similarity.
pub fn balance(a: &mut [Vec<f64>]) {
    const RADIX: f64 = 2.0;
    let n = a.len();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for v in a[i].iter_mut() {
                    *v /= f;
                }
                for row in a.iter_mut() {
                    row[i] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix by single-shift complex QR
/// with Wilkinson shifts and deflation.
pub fn hessenberg_eigenvalues(h: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    let n = h.len();
    let mut a: Vec<Vec<Complex64>> = h
        .iter()
        .map(|row| row.iter().map(|&v| Complex64::new(v, 0.0)).collect())
        .collect();
    let mut eig = Vec::with_capacity(n);
    let max_iter = 60 * n.max(1);
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n;
    while hi > 0 {
        let last = hi - 1;
        // Find the start of the active unreduced block.
        let mut lo = last;
        while lo > 0 {
            let sub = a[lo][lo - 1].norm();
            let diag = a[lo - 1][lo - 1].norm() + a[lo][lo].norm();
            if sub <= f64::EPSILON * diag || sub < f64::MIN_POSITIVE {
                a[lo][lo - 1] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == last {
            eig.push(a[last][last]);
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > max_iter {
            return Err(Error::NoConvergence { iterations: total });
        }
        let mu = if since_deflation % 11 == 10 {
            // Exceptional shift to break cycles.
            a[last][last] + Complex64::new(0.75 * a[last][last - 1].norm(), 0.0)
        } else {
            wilkinson_shift(
                a[last - 1][last - 1],
                a[last - 1][last],
                a[last][last - 1],
                a[last][last],
            )
        };
        qr_step(&mut a, lo, last, mu);
    }
    Ok(eig)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powi(2) + b * c;
    let root = disc.sqrt();
    let l1 = half_tr + root;
    let l2 = half_tr - root;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit shifted QR sweep on rows/columns `lo..=hi`.
fn qr_step(a: &mut [Vec<Complex64>], lo: usize, hi: usize, mu: Complex64) {
    for i in lo..=hi {
        a[i][i] -= mu;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(a[k][k], a[k + 1][k]);
        for j in k..=hi {
            let x = a[k][j];
            let y = a[k + 1][j];
            a[k][j] = x * c + s * y;
            a[k + 1][j] = -s.conj() * x + y * c;
        }
        rotations.push((c, s));
    }
    for (offset, &(c, s)) in rotations.iter().enumerate() {
        let k = lo + offset;
        let rows = (k + 2).min(hi);
        for i in lo..=rows {
            let p = a[i][k];
            let q = a[i][k + 1];
            a[i][k] = p * c + q * s.conj();
            a[i][k + 1] = -p * s + q * c;
        }
    }
    for i in lo..=hi {
        a[i][i] += mu;
    }
}

/// Rotation `[[c, s], [-s̄, c]]` (real `c`) mapping `(x, y)` to `(ρ, 0)`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    let phase = x / ax;
    (ax / r, phase * y.conj() / r)
}

/// All roots (with repetition) of the monic polynomial.
pub fn polynomial_roots(coefficients: &[f64]) -> Result<Vec<Complex64>> {
    if coefficients.is_empty() {
        return Ok(Vec::new());
    }
    let mut c = companion_matrix(coefficients);
    balance(&mut c);
    hessenberg_eigenvalues(&c)
}

/// Merges roots closer than `tol · max(1, |λ|)` (union-find over all pairs)
/// into their centroid.
pub fn cluster_roots(roots: &[Complex64], tol: f64) -> Vec<Root> {
    let n = roots.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = 1f64.max(roots[i].norm()).max(roots[j].norm());
            if (roots[i] - roots[j]).norm() <= tol * scale {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj] = ri;
                }
            }
        }
    }
    let mut groups: Vec<(usize, Complex64, usize)> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == root) {
            Some(g) => {
                g.1 += roots[i];
                g.2 += 1;
            }
            None => groups.push((root, roots[i], 1)),
        }
    }
    groups
        .into_iter()
        .map(|(_, sum, m)| Root {
            value: sum / m as f64,
            multiplicity: m,
        })
        .collect()
}

/// Makes the root set exactly closed under conjugation. Returns `false` if
/// some non-real root had no partner of equal multiplicity.
pub fn symmetrize_conjugates(roots: &mut [Root], tol: f64) -> bool {
    for r in roots.iter_mut() {
        if r.value.im.abs() <= tol * 1f64.max(r.value.norm()) {
            r.value.im = 0.0;
        }
    }
    let upper: Vec<usize> = (0..roots.len()).filter(|&i| roots[i].value.im > 0.0).collect();
    let mut lower: Vec<usize> = (0..roots.len()).filter(|&i| roots[i].value.im < 0.0).collect();
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for &u in &upper {
        for &l in &lower {
            if roots[u].multiplicity == roots[l].multiplicity {
                candidates.push(((roots[u].value - roots[l].value.conj()).norm(), u, l));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut paired = vec![false; roots.len()];
    for (_, u, l) in candidates {
        if paired[u] || paired[l] {
            continue;
        }
        paired[u] = true;
        paired[l] = true;
        let avg = Complex64::new(
            0.5 * (roots[u].value.re + roots[l].value.re),
            0.5 * (roots[u].value.im - roots[l].value.im),
        );
        roots[u].value = avg;
        roots[l].value = avg.conj();
    }
    lower.retain(|&l| !paired[l]);
    let unpaired_upper = upper.iter().any(|&u| !paired[u]);
    !(unpaired_upper || !lower.is_empty())
}

/// Descending real part, then descending imaginary part.
pub fn sort_roots(roots: &mut [Root]) {
    roots.sort_by(|a, b| {
        b.value
            .re
            .total_cmp(&a.value.re)
            .then(b.value.im.total_cmp(&a.value.im))
    });
}

/// Distinct roots of `p` with multiplicities, rescaled by the polynomial's
/// prescaling factor. The flag is `false` when conjugate pairing failed.
pub fn roots_with_multiplicity(p: &CharacteristicPoly, cluster_tol: f64) -> Result<(Vec<Root>, bool)> {
    let raw = polynomial_roots(&p.coefficients)?;
    let mut roots = cluster_roots(&raw, cluster_tol);
    let paired = symmetrize_conjugates(&mut roots, cluster_tol);
    if p.scale_rho != 1.0 {
        for r in &mut roots {
            r.value *= p.scale_rho;
        }
    }
    sort_roots(&mut roots);
    Ok((roots, paired))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(coeffs: &[f64]) -> CharacteristicPoly {
        CharacteristicPoly {
            coefficients: coeffs.to_vec(),
            residual: 0.0,
            condition: 1.0,
            scale_rho: 1.0,
        }
    }

    #[test]
    fn x2_minus_1() {
        let (r, ok) = roots_with_multiplicity(&poly(&[-1.0, 0.0]), 1e-6).unwrap();
        assert!(ok);
        assert_eq!(r.len(), 2);
        assert!((r[0].value - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((r[1].value - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
        assert!(r.iter().all(|x| x.multiplicity == 1));
    }

    #[test]
    fn double_root_clusters() {
        let (r, _) = roots_with_multiplicity(&poly(&[0.25, -1.0]), 1e-6).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 2);
        assert!((r[0].value - Complex64::new(0.5, 0.0)).norm() < 1e-6);
        assert_eq!(r[0].value.im, 0.0);
    }

    #[test]
    fn linear() {
        let (r, _) = roots_with_multiplicity(&poly(&[-1.0]), 1e-6).unwrap();
        assert_eq!(r, vec![Root { value: Complex64::new(1.0, 0.0), multiplicity: 1 }]);
    }

    #[test]
    fn degree_zero_is_empty() {
        let (r, ok) = roots_with_multiplicity(&poly(&[]), 1e-6).unwrap();
        assert!(r.is_empty() && ok);
    }

    #[test]
    fn complex_pair_exactly_conjugate() {
        // (x^2 + 1)(x - 2) = x^3 - 2x^2 + x - 2
        let (r, ok) = roots_with_multiplicity(&poly(&[-2.0, 1.0, -2.0]), 1e-6).unwrap();
        assert!(ok);
        assert_eq!(r.len(), 3);
        let pos = r.iter().find(|x| x.value.im > 0.0).unwrap();
        let neg = r.iter().find(|x| x.value.im < 0.0).unwrap();
        assert_eq!(pos.value, neg.value.conj());
        assert!((pos.value - Complex64::new(0.0, 1.0)).norm() < 1e-13);
    }

    #[test]
    fn prescale_multiplies_roots() {
        let mut p = poly(&[-1.0]);
        p.scale_rho = 4.0;
        let (r, _) = roots_with_multiplicity(&p, 1e-6).unwrap();
        assert_eq!(r[0].value, Complex64::new(4.0, 0.0));
    }

    #[test]
    fn wide_dynamic_range_roots() {
        // Roots 1e-3, 1, 1e3 with Vieta coefficients.
        let (a, b, c) = (1e-3, 1.0, 1e3);
        let coeffs = [-(a * b * c), a * b + a * c + b * c, -(a + b + c)];
        let (r, _) = roots_with_multiplicity(&poly(&coeffs), 1e-9).unwrap();
        let vals: Vec<f64> = r.iter().map(|x| x.value.re).collect();
        for (got, want) in vals.iter().zip([c, b, a]) {
            assert!((got - want).abs() <= 1e-10 * want.max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn roots_of_unity() {
        // x^8 - 1
        let mut coeffs = vec![0.0; 8];
        coeffs[0] = -1.0;
        let raw = polynomial_roots(&coeffs).unwrap();
        assert_eq!(raw.len(), 8);
        for z in raw {
            assert!((z.powi(8) - 1.0).norm() < 1e-13);
        }
    }
}
