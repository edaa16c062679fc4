//! Dense linear algebra shared by the estimators: SVD, truncated
//! pseudoinverse, companion-matrix root finding and Hermitian Toeplitz
//! assembly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Thin SVD `A = U diag(s) V^H` with singular values in non-increasing order.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> CMatrix {
        let sigma = CMatrix::from_diagonal(&CVector::from_iterator(
            self.singular_values.len(),
            self.singular_values.iter().map(|&s| Complex64::new(s, 0.0)),
        ));
        &self.u * sigma * self.v.adjoint()
    }

    /// Ratio of the largest to the smallest singular value.
    pub fn condition(&self) -> f64 {
        match (self.singular_values.first(), self.singular_values.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            (Some(_), Some(_)) => f64::INFINITY,
            _ => 1.0,
        }
    }
}

pub fn svd(a: &CMatrix) -> Result<SvdFactors> {
    if a.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    let view = faer::MatRef::from_column_major_slice(a.as_slice(), a.nrows(), a.ncols());
    let dec = view
        .thin_svd()
        .map_err(|_| Error::Singularity("SVD did not converge".into()))?;
    let singular_values = dec.S().column_vector().iter().map(|s| s.re).collect();
    let u = CMatrix::from_fn(a.nrows(), dec.U().ncols(), |r, c| dec.U()[(r, c)]);
    let v = CMatrix::from_fn(a.ncols(), dec.V().ncols(), |r, c| dec.V()[(r, c)]);
    Ok(SvdFactors {
        u,
        singular_values,
        v,
    })
}

/// Smallest singular value accepted as signal by the truncated pseudoinverse.
pub fn rank_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max * 1e3
}

/// `V_M diag(1/s_i) U_M^H` built from the `rank` largest singular triplets.
pub fn rank_m_pseudoinverse(a: &CMatrix, rank: usize) -> Result<CMatrix> {
    let f = svd(a)?;
    pseudoinverse_from(&f, rank, a.nrows(), a.ncols())
}

/// Truncated pseudoinverse from precomputed (possibly corrected) factors.
pub fn pseudoinverse_from(
    f: &SvdFactors,
    rank: usize,
    rows: usize,
    cols: usize,
) -> Result<CMatrix> {
    let available = f.singular_values.len();
    if rank == 0 || rank > available {
        return Err(Error::invalid(format!(
            "rank {rank} out of range 1..={available}"
        )));
    }
    let tol = rank_tolerance(rows, cols, f.singular_values[0]);
    for (i, &s) in f.singular_values[..rank].iter().enumerate() {
        if !(s > tol) {
            return Err(Error::RankDeficient {
                index: i + 1,
                value: s,
                tolerance: tol,
            });
        }
    }
    let mut out = CMatrix::zeros(f.v.nrows(), f.u.nrows());
    for i in 0..rank {
        let inv = 1.0 / f.singular_values[i];
        let vi = f.v.column(i);
        let ui = f.u.column(i);
        out += (vi * ui.adjoint()) * Complex64::new(inv, 0.0);
    }
    Ok(out)
}

/// Moore-Penrose pseudoinverse keeping every singular value above
/// [`rank_tolerance`].
pub fn pseudoinverse(a: &CMatrix) -> Result<CMatrix> {
    let f = svd(a)?;
    let tol = rank_tolerance(a.nrows(), a.ncols(), f.singular_values[0]);
    let rank = f.singular_values.iter().take_while(|&&s| s > tol).count();
    if rank == 0 {
        return Ok(CMatrix::zeros(a.ncols(), a.nrows()));
    }
    pseudoinverse_from(&f, rank, a.nrows(), a.ncols())
}

/// Eigenvalues of a general complex square matrix.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(Error::invalid("eigenvalues of a non-square matrix"));
    }
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    faer::MatRef::from_column_major_slice(m.as_slice(), n, n)
        .eigenvalues()
        .map_err(|_| Error::Singularity("eigenvalue iteration did not converge".into()))
}

/// Roots of `z^J + a_1 z^{J-1} + ... + a_J` given `[a_1, ..., a_J]`.
///
/// Trailing zero coefficients are deflated as exact zero roots; the rest come
/// from the eigenvalues of the companion matrix, polished by guarded Newton steps.
pub fn companion_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    if coeffs.is_empty() {
        return Err(Error::invalid("polynomial degree must be at least 1"));
    }
    if coeffs
        .iter()
        .any(|c| !c.re.is_finite() || !c.im.is_finite())
    {
        return Err(Error::invalid("non-finite polynomial coefficient"));
    }
    let mut deg = coeffs.len();
    while deg > 0 && coeffs[deg - 1] == ZERO {
        deg -= 1;
    }
    let zeros = coeffs.len() - deg;
    let active = &coeffs[..deg];
    let mut roots = vec![ZERO; zeros];
    if deg == 0 {
        return Ok(roots);
    }
    let mut comp = CMatrix::zeros(deg, deg);
    for (j, &a) in active.iter().enumerate() {
        comp[(0, j)] = -a;
    }
    for i in 1..deg {
        comp[(i, i - 1)] = ONE;
    }
    let raw = eigenvalues(&comp)?;
    roots.extend(raw.into_iter().map(|z| polish_root(active, z)));
    Ok(roots)
}

fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = ONE;
    let mut dp = ZERO;
    for &a in coeffs {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

fn polish_root(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    let (mut p, mut dp) = horner(coeffs, z);
    for _ in 0..3 {
        if dp.norm() == 0.0 || p.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let (pc, dpc) = horner(coeffs, cand);
        if !(pc.norm() < p.norm()) {
            break;
        }
        z = cand;
        p = pc;
        dp = dpc;
    }
    z
}

/// Monic coefficients `[a_1, ..., a_J]` of `prod (z - r_i)`.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut p = vec![ONE];
    for &r in roots {
        let mut next = vec![ZERO; p.len() + 1];
        for (i, &c) in p.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        p = next;
    }
    p.remove(0);
    p
}

/// Hermitian Toeplitz matrix with `(i, j) = r[i - j]` and `r[-k] = conj(r[k])`.
pub fn toeplitz_hermitian(r: &[Complex64], size: usize) -> Result<CMatrix> {
    if size > r.len() {
        return Err(Error::invalid(format!(
            "Toeplitz size {size} exceeds {} available lags",
            r.len()
        )));
    }
    Ok(CMatrix::from_fn(size, size, |i, j| {
        if i >= j {
            r[i - j]
        } else {
            r[j - i].conj()
        }
    }))
}

/// Least-squares solution of `A x = b` via SVD, returning the solution and
/// the 2-norm condition number of `A`.
pub fn least_squares(a: &CMatrix, b: &CVector) -> Result<(CVector, f64)> {
    let f = svd(a)?;
    let cond = f.condition();
    let n = f.singular_values.len();
    let tol = rank_tolerance(a.nrows(), a.ncols(), f.singular_values[0]);
    let utb = f.u.adjoint() * b;
    let mut x = CVector::zeros(a.ncols());
    for i in 0..n {
        let s = f.singular_values[i];
        if s > tol {
            x += f.v.column(i) * (utb[i] / s);
        }
    }
    Ok((x, cond))
}

pub fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn svd_of_diagonals() {
        let id = CMatrix::identity(3, 3);
        assert_eq!(svd(&id).unwrap().singular_values, vec![1.0, 1.0, 1.0]);
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(3.0), c(2.0)]));
        let s = svd(&d).unwrap().singular_values;
        for (got, want) in s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn svd_reconstructs_and_is_orthonormal() {
        let a = random_matrix(10, 6, 1);
        let f = svd(&a).unwrap();
        assert!((&a - f.reconstruct()).norm() / a.norm() < 1e-12);
        assert!(max_abs(&(f.u.adjoint() * &f.u - CMatrix::identity(6, 6))) < 1e-10);
        assert!(max_abs(&(f.v.adjoint() * &f.v - CMatrix::identity(6, 6))) < 1e-10);
        assert!(f.singular_values.windows(2).all(|w| w[0] >= w[1]));

        let wide = random_matrix(4, 7, 2);
        let f = svd(&wide).unwrap();
        assert!((&wide - f.reconstruct()).norm() / wide.norm() < 1e-12);
    }

    #[test]
    fn svd_rejects_nan() {
        let mut a = CMatrix::identity(2, 2);
        a[(0, 1)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(svd(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pseudoinverse_cases() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(2.0), c(1.0)]));
        let p = rank_m_pseudoinverse(&a, 1).unwrap();
        let want = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.5), c(0.0)]));
        assert!(max_abs(&(p - want)) < 1e-15);

        let a = random_matrix(5, 5, 3);
        let inv = a.clone().try_inverse().unwrap();
        let p = rank_m_pseudoinverse(&a, 5).unwrap();
        assert!(max_abs(&(p - inv)) < 1e-10);
    }

    #[test]
    fn moore_penrose_identity_on_rank_two() {
        let a = random_matrix(6, 2, 4) * random_matrix(2, 4, 5);
        let p = rank_m_pseudoinverse(&a, 2).unwrap();
        assert!(max_abs(&(&a * &p * &a - &a)) < 1e-10);
        assert!(max_abs(&(&p * &a * &p - &p)) < 1e-10);
        // asking for a third triplet hits the rank tolerance
        match rank_m_pseudoinverse(&a, 3) {
            Err(Error::RankDeficient { index, .. }) => assert_eq!(index, 3),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        assert!(rank_m_pseudoinverse(&a, 0).is_err());
    }

    #[test]
    fn projectors_ignore_singular_vector_rotation() {
        // Degenerate singular pair: any rotation inside the pair is a valid SVD.
        let a = random_matrix(6, 4, 6);
        let f = svd(&a).unwrap();
        let mut s = f.singular_values.clone();
        s[1] = s[0];
        let base = SvdFactors {
            u: f.u.clone(),
            singular_values: s.clone(),
            v: f.v.clone(),
        };
        let (cs, sn) = (0.6, 0.8);
        let rot = |m: &CMatrix| {
            let mut out = m.clone();
            let c0 = m.column(0).clone_owned();
            let c1 = m.column(1).clone_owned();
            out.set_column(0, &(&c0 * c(cs) + &c1 * Complex64::new(0.0, sn)));
            out.set_column(1, &(&c0 * Complex64::new(0.0, sn) + &c1 * c(cs)));
            out
        };
        let rotated = SvdFactors {
            u: rot(&f.u),
            singular_values: s,
            v: rot(&f.v),
        };
        let am = base.reconstruct();
        let p1 = pseudoinverse_from(&base, 3, 6, 4).unwrap();
        let p2 = pseudoinverse_from(&rotated, 3, 6, 4).unwrap();
        assert!(max_abs(&(&am * &p1 - &am * &p2)) < 1e-10);
        assert!(max_abs(&(&p1 * &am - &p2 * &am)) < 1e-10);
    }

    fn assert_same_roots(mut got: Vec<Complex64>, mut want: Vec<Complex64>, tol: f64) {
        assert_eq!(got.len(), want.len());
        let key = |z: &Complex64| (z.re, z.im);
        got.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        want.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        // greedy matching is fine for well separated sets
        for w in want {
            let (idx, d) = got
                .iter()
                .enumerate()
                .map(|(i, g)| (i, (g - w).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(d < tol, "root {w} missed by {d}");
            got.remove(idx);
        }
    }

    #[test]
    fn factored_quadratic() {
        let roots = companion_roots(&[c(-1.4), c(0.45)]).unwrap();
        assert_same_roots(roots, vec![c(0.9), c(0.5)], 1e-14);
    }

    #[test]
    fn all_zero_coefficients() {
        assert_eq!(
            companion_roots(&[c(0.0), c(0.0)]).unwrap(),
            vec![c(0.0), c(0.0)]
        );
        let r = companion_roots(&[c(-0.5), c(0.0)]).unwrap();
        assert_same_roots(r, vec![c(0.0), c(0.5)], 1e-15);
        assert!(companion_roots(&[]).is_err());
    }

    #[test]
    fn example_two_z_poles() {
        let spec = crate::model::SignalSpec::example2();
        let truth: Vec<Complex64> = spec
            .all_poles()
            .iter()
            .map(|p| (p.s() * 5.6).exp())
            .collect();
        let coeffs = poly_from_roots(&truth);
        assert_same_roots(companion_roots(&coeffs).unwrap(), truth, 1e-10);
    }

    #[test]
    fn toeplitz_cases() {
        let id = toeplitz_hermitian(&[c(1.0), c(0.0), c(0.0)], 3).unwrap();
        assert_eq!(id, CMatrix::identity(3, 3));
        let t = toeplitz_hermitian(&[c(2.0), c(1.0)], 2).unwrap();
        assert_eq!(
            t,
            CMatrix::from_row_slice(2, 2, &[c(2.0), c(1.0), c(1.0), c(2.0)])
        );
        let t = toeplitz_hermitian(&[c(1.0), Complex64::new(0.2, 0.3)], 2).unwrap();
        assert_eq!(t[(0, 1)], Complex64::new(0.2, -0.3));
        assert!(toeplitz_hermitian(&[c(1.0)], 2).is_err());
    }

    #[test]
    fn ar1_toeplitz_is_positive_definite() {
        let t = toeplitz_hermitian(&[c(1.0), c(0.5), c(0.25)], 3).unwrap();
        let eig = t.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e > 0.0), "{eig}");
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        let a = random_matrix(8, 3, 7);
        let x = CVector::from_vec(vec![c(1.0), Complex64::new(0.0, 2.0), c(-0.5)]);
        let b = &a * &x;
        let (got, cond) = least_squares(&a, &b).unwrap();
        assert!((got - x).norm() < 1e-12);
        assert!(cond >= 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn roots_of_expanded_polynomial(
                pts in prop::collection::vec((0.0f64..2.0, 0.0f64..std::f64::consts::TAU), 1..7)
            ) {
                let roots: Vec<Complex64> =
                    pts.iter().map(|&(r, th)| Complex64::from_polar(r, th)).collect();
                let mut sep = f64::INFINITY;
                for i in 0..roots.len() {
                    for j in 0..i {
                        sep = sep.min((roots[i] - roots[j]).norm());
                    }
                }
                prop_assume!(sep > 1e-3);
                let got = companion_roots(&poly_from_roots(&roots)).unwrap();
                assert_same_roots(got, roots, 1e-8);
            }
        }
    }
}
