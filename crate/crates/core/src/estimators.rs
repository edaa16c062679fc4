//! Truncated-SVD pole estimators for uniformly spaced data.
//!
//! All three fit the linear prediction model `y[n] = sum_{m=1}^J A_m y[n-m]`
//! with an extended order `J` larger than the number of signal poles `M`:
//!
//! * [`estimate_pt_mle`] solves the weighted normal equations
//!   `(Y^H R^-1 Y) A = Y^H R^-1 y` with a rank-`M` pseudoinverse, where `R` is
//!   the Toeplitz covariance of the reconstruction error.
//! * [`estimate_alm`] replaces the data matrix by lagged-product
//!   (autocorrelation-like) statistics before the rank-`M` solve.
//! * [`estimate_mp`] skips the characteristic polynomial and reads the signal
//!   poles off an `M x M` matrix pencil reduced by the truncated SVD.
//!
//! The first two yield `J` roots of `z^J + a_1 z^{J-1} + ... + a_J`, of which
//! the `M` with the largest residue score in a least-squares fit are kept.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{z_to_s, Pole};
use crate::numerics::{
    companion_roots, eigenvalues, least_squares, pseudoinverse, pseudoinverse_from, svd,
    toeplitz_hermitian, CMatrix, CVector, SvdFactors,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    PtMle,
    Alm,
    Mp,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::PtMle => "PT-MLE",
            Method::Alm => "ALM",
            Method::Mp => "MP",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Singular values of the matrix that was rank-reduced.
    pub singular_values: Vec<f64>,
    /// `s_1 / s_M` of the rank-reduced matrix.
    pub condition: f64,
    pub discarded_roots: Vec<Complex64>,
    pub weight_condition: Option<f64>,
    pub weight_regularized: bool,
}

impl Diagnostics {
    /// Text key-value rendering, one `key=value` pair per line.
    pub fn to_key_values(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.6e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let roots = self
            .discarded_roots
            .iter()
            .map(|z| format!("{:.6e}{:+.6e}i", z.re, z.im))
            .collect::<Vec<_>>()
            .join(" ");
        let mut out = String::new();
        out.push_str(&format!(
            "singular_values={}\n",
            join(&self.singular_values)
        ));
        out.push_str(&format!("condition={:.6e}\n", self.condition));
        out.push_str(&format!("discarded_roots={roots}\n"));
        if let Some(c) = self.weight_condition {
            out.push_str(&format!("weight_condition={c:.6e}\n"));
        }
        out.push_str(&format!("weight_regularized={}\n", self.weight_regularized));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub method: Method,
    /// `a_1 .. a_J` of the characteristic polynomial; empty for MP.
    pub coefficients: Vec<Complex64>,
    pub z_poles: Vec<Complex64>,
    pub s_poles: Vec<Pole>,
    /// Residue of each pole, aligned with `z_poles` / `s_poles`.
    pub amplitudes: Vec<Complex64>,
    pub diagnostics: Diagnostics,
}

/// Error weighting for the prediction equations.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Identity,
    /// `r_ee[0..]`, expanded into a Hermitian Toeplitz matrix.
    Autocorr(Vec<f64>),
    /// Full error covariance on the grid, `L x L`; rows/columns `J..L` are used.
    Covariance(DMatrix<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtMleOptions {
    pub ext_order: usize,
    pub model_order: usize,
    /// Noise power for principal singular-value correction; `None` disables it.
    pub sv_correction: Option<f64>,
}

fn check_orders(len: usize, ext_order: usize, model_order: usize) -> Result<()> {
    if model_order == 0 {
        return Err(Error::invalid("model order M must be at least 1"));
    }
    if ext_order < model_order {
        return Err(Error::invalid(format!(
            "extended order J = {ext_order} must be at least M = {model_order}"
        )));
    }
    if 2 * ext_order > len {
        return Err(Error::invalid(format!(
            "constraint J <= L - J violated: J = {ext_order}, L = {len}"
        )));
    }
    Ok(())
}

fn is_real(data: &[Complex64]) -> bool {
    data.iter().all(|v| v.im == 0.0)
}

/// `(L-J) x J` matrix `[y[J+i-j-1]]` and right side `[y[J+i]]` (0-based i, j).
pub fn prediction_system(data: &[Complex64], ext_order: usize) -> (CMatrix, CVector) {
    let l = data.len();
    let j = ext_order;
    let a = CMatrix::from_fn(l - j, j, |r, c| data[j + r - c - 1]);
    let b = CVector::from_fn(l - j, |r, _| data[j + r]);
    (a, b)
}

/// Principal singular-value correction `s' = sqrt(max(s^2 - rows * p, s^2 * 1e-6))`
/// on the first `principal` values; the rest pass through.
pub fn correct_singular_values(
    sv: &[f64],
    noise_power: f64,
    rows: usize,
    principal: usize,
) -> Vec<f64> {
    sv.iter()
        .enumerate()
        .map(|(i, &s)| {
            if i < principal && noise_power > 0.0 {
                let s2 = s * s;
                (s2 - rows as f64 * noise_power).max(s2 * 1e-6).sqrt()
            } else {
                s
            }
        })
        .collect()
}

struct Whitener {
    chol: CMatrix,
    condition: f64,
    regularized: bool,
}

impl Whitener {
    fn new(mut r: CMatrix, scale: f64) -> Result<Self> {
        let eig = r.clone().symmetric_eigenvalues();
        let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        let mut regularized = false;
        if !(condition <= 1e12) {
            let lambda = 1e-10 * scale;
            for i in 0..r.nrows() {
                r[(i, i)] += Complex64::new(lambda, 0.0);
            }
            regularized = true;
        }
        let chol = r
            .cholesky()
            .ok_or_else(|| Error::Weighting("error covariance is not positive definite".into()))?;
        Ok(Self {
            chol: chol.unpack(),
            condition,
            regularized,
        })
    }

    fn apply(&self, m: &CMatrix) -> Result<CMatrix> {
        self.chol
            .solve_lower_triangular(m)
            .ok_or_else(|| Error::Weighting("singular Cholesky factor".into()))
    }
}

fn weight_matrix(weight: &Weight, rows: usize, ext_order: usize) -> Result<Option<(CMatrix, f64)>> {
    match weight {
        Weight::Identity => Ok(None),
        Weight::Autocorr(r) => {
            if r.is_empty() || !(r[0] > 0.0) {
                return Err(Error::Weighting("r_ee[0] must be positive".into()));
            }
            let rc: Vec<Complex64> = r.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            Ok(Some((toeplitz_hermitian(&rc, rows)?, r[0])))
        }
        Weight::Covariance(c) => {
            if c.nrows() != c.ncols() || c.nrows() < ext_order + rows {
                return Err(Error::Weighting(format!(
                    "covariance is {}x{}, need {} rows",
                    c.nrows(),
                    c.ncols(),
                    ext_order + rows
                )));
            }
            let m = CMatrix::from_fn(rows, rows, |i, j| {
                Complex64::new(c[(ext_order + i, ext_order + j)], 0.0)
            });
            let scale = (0..rows)
                .map(|i| c[(ext_order + i, ext_order + i)])
                .sum::<f64>()
                / rows as f64;
            if !(scale > 0.0) {
                return Err(Error::Weighting("error covariance has zero trace".into()));
            }
            Ok(Some((m, scale)))
        }
    }
}

/// Weighted, rank-reduced linear-prediction estimator.
///
/// `data` is the uniform grid (reconstructed or directly sampled) with spacing
/// `step`; `weight` describes the error covariance of the grid values.
pub fn estimate_pt_mle(
    data: &[Complex64],
    step: f64,
    weight: &Weight,
    opts: PtMleOptions,
) -> Result<EstimateResult> {
    let PtMleOptions {
        ext_order,
        model_order,
        sv_correction,
    } = opts;
    check_orders(data.len(), ext_order, model_order)?;
    let (mut ymat, mut yvec) = prediction_system(data, ext_order);
    let rows = ymat.nrows();

    let mut diagnostics = Diagnostics::default();
    if let Some((r, scale)) = weight_matrix(weight, rows, ext_order)? {
        let w = Whitener::new(r, scale)?;
        ymat = w.apply(&ymat)?;
        yvec = w
            .apply(&CMatrix::from_column_slice(rows, 1, yvec.as_slice()))?
            .column(0)
            .into_owned();
        diagnostics.weight_condition = Some(w.condition);
        diagnostics.weight_regularized = w.regularized;
    }

    let normal = ymat.adjoint() * &ymat;
    let rhs = ymat.adjoint() * &yvec;
    let mut f = svd(&normal)?;
    diagnostics.singular_values = f.singular_values.clone();
    if let Some(power) = sv_correction {
        let root: Vec<f64> = f.singular_values.iter().map(|v| v.sqrt()).collect();
        f.singular_values = correct_singular_values(&root, power, rows, model_order)
            .into_iter()
            .map(|s| s * s)
            .collect();
    }
    diagnostics.condition = f.singular_values[0] / f.singular_values[model_order - 1];
    let pinv = pseudoinverse_from(&f, model_order, normal.nrows(), normal.ncols())?;
    let a_vec = pinv * rhs;
    let mut coefficients: Vec<Complex64> = a_vec.iter().map(|v| -v).collect();
    if is_real(data) {
        coefficients.iter_mut().for_each(|c| c.im = 0.0);
    }
    finish_from_coefficients(
        Method::PtMle,
        data,
        step,
        coefficients,
        model_order,
        diagnostics,
    )
}

/// Oracle form of the weighted normal equations with the clean signal in the
/// data matrix and the observed samples on the right side:
/// `(G^H R^-1 G) A = G^H R^-1 y`. Returns `[a_1, ..., a_J]`.
///
/// Only meaningful where the noiseless signal is known (tests, benchmarks).
pub fn solve_oracle_mle(
    clean: &[Complex64],
    observed: &[Complex64],
    weight: &Weight,
    ext_order: usize,
) -> Result<Vec<Complex64>> {
    if clean.len() != observed.len() {
        return Err(Error::invalid("clean and observed grids differ in length"));
    }
    check_orders(clean.len(), ext_order, 1)?;
    let (mut gmat, _) = prediction_system(clean, ext_order);
    let (_, mut yvec) = prediction_system(observed, ext_order);
    let rows = gmat.nrows();
    if let Some((r, scale)) = weight_matrix(weight, rows, ext_order)? {
        let w = Whitener::new(r, scale)?;
        gmat = w.apply(&gmat)?;
        yvec = w
            .apply(&CMatrix::from_column_slice(rows, 1, yvec.as_slice()))?
            .column(0)
            .into_owned();
    }
    let normal = gmat.adjoint() * &gmat;
    let a_vec = pseudoinverse(&normal)? * (gmat.adjoint() * yvec);
    Ok(a_vec.iter().map(|v| -v).collect())
}

/// Autocorrelation-like matrix estimator. `rows` is the number of lagged
/// equations `I`; `None` uses `min(J, L - J - 1)`.
pub fn estimate_alm(
    data: &[Complex64],
    step: f64,
    ext_order: usize,
    rows: Option<usize>,
    model_order: usize,
) -> Result<EstimateResult> {
    check_orders(data.len(), ext_order, model_order)?;
    let l = data.len();
    let j = ext_order;
    let i_max = l - j - 1;
    let rows = rows.unwrap_or(j.min(i_max));
    if rows == 0 || rows > i_max {
        return Err(Error::invalid(format!(
            "row count I = {rows} outside 1..={i_max}"
        )));
    }
    if rows < model_order {
        return Err(Error::invalid(format!(
            "row count I = {rows} below model order M = {model_order}"
        )));
    }
    let (r, rvec) = alm_system(data, j, rows);
    let f = svd(&r)?;
    let mut diagnostics = Diagnostics {
        singular_values: f.singular_values.clone(),
        condition: f.singular_values[0] / f.singular_values[model_order - 1],
        ..Default::default()
    };
    let pinv = pseudoinverse_from(&f, model_order, r.nrows(), r.ncols())?;
    let a_vec = pinv * rvec;
    let mut coefficients: Vec<Complex64> = a_vec.iter().map(|v| -v).collect();
    if is_real(data) {
        coefficients.iter_mut().for_each(|c| c.im = 0.0);
    }
    diagnostics.weight_condition = None;
    finish_from_coefficients(
        Method::Alm,
        data,
        step,
        coefficients,
        model_order,
        diagnostics,
    )
}

/// `I x J` lagged-product matrix and its right side (1-based i, j):
///
/// ```text
/// R[i][j] = (1/L) sum_{l=0}^{L-J-i-1} x[J+l+i-j] conj(x[l])
/// r[i]    = (1/L) sum_{l=0}^{L-J-i-1} x[J+l+i]   conj(x[l])
/// ```
pub fn alm_system(data: &[Complex64], ext_order: usize, rows: usize) -> (CMatrix, CVector) {
    let l = data.len();
    let j = ext_order;
    let inv_l = 1.0 / l as f64;
    let mut r = CMatrix::zeros(rows, j);
    let mut v = CVector::zeros(rows);
    for i in 1..=rows {
        let upper = l - j - i; // exclusive bound of l
        for col in 1..=j {
            let s: Complex64 = (0..upper)
                .map(|k| data[j + k + i - col] * data[k].conj())
                .sum();
            r[(i - 1, col - 1)] = s * inv_l;
        }
        let s: Complex64 = (0..upper).map(|k| data[j + k + i] * data[k].conj()).sum();
        v[i - 1] = s * inv_l;
    }
    (r, v)
}

/// Matrix pencil estimator: eigenvalues of `S_M^-1 U_M^H X1 V_M`.
pub fn estimate_mp(
    data: &[Complex64],
    step: f64,
    ext_order: usize,
    model_order: usize,
    sv_correction: Option<f64>,
) -> Result<EstimateResult> {
    check_orders(data.len(), ext_order, model_order)?;
    let l = data.len();
    let j = ext_order;
    let (x, _) = prediction_system(data, j);
    let x1 = CMatrix::from_fn(l - j, j, |r, c| data[j + r - c]);
    let mut f = svd(&x)?;
    let mut diagnostics = Diagnostics {
        singular_values: f.singular_values.clone(),
        ..Default::default()
    };
    if let Some(power) = sv_correction {
        f.singular_values = correct_singular_values(&f.singular_values, power, l - j, model_order);
    }
    diagnostics.condition = f.singular_values[0] / f.singular_values[model_order - 1];
    // validates the rank-M tolerance the same way as the pseudoinverse
    pseudoinverse_from(&f, model_order, x.nrows(), x.ncols())?;
    let reduced = pencil_matrix(&f, &x1, model_order);
    let z = eigenvalues(&reduced)?;
    finish_from_poles(Method::Mp, data, step, Vec::new(), z, diagnostics)
}

fn pencil_matrix(f: &SvdFactors, x1: &CMatrix, m: usize) -> CMatrix {
    let um = f.u.columns(0, m);
    let vm = f.v.columns(0, m);
    let mut core = um.adjoint() * x1 * vm;
    for i in 0..m {
        let inv = 1.0 / f.singular_values[i];
        core.row_mut(i).iter_mut().for_each(|v| *v *= inv);
    }
    core
}

fn finish_from_coefficients(
    method: Method,
    data: &[Complex64],
    step: f64,
    coefficients: Vec<Complex64>,
    model_order: usize,
    mut diagnostics: Diagnostics,
) -> Result<EstimateResult> {
    let roots = companion_roots(&coefficients)?;
    let (signal, discarded) = separate_signal_poles(&roots, data, model_order)?;
    diagnostics.discarded_roots = discarded;
    finish_from_poles(method, data, step, coefficients, signal, diagnostics)
}

fn finish_from_poles(
    method: Method,
    data: &[Complex64],
    step: f64,
    coefficients: Vec<Complex64>,
    z: Vec<Complex64>,
    diagnostics: Diagnostics,
) -> Result<EstimateResult> {
    let mut z = z;
    let mut s = z
        .iter()
        .map(|&zi| z_to_s(zi, step))
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| pole_order(&Pole::from_s(s[a]), &Pole::from_s(s[b])));
    z = order.iter().map(|&i| z[i]).collect();
    s = order.iter().map(|&i| s[i]).collect();
    let amplitudes = fit_residues(&z, data)?;
    Ok(EstimateResult {
        method,
        coefficients,
        z_poles: z,
        s_poles: s.into_iter().map(Pole::from_s).collect(),
        amplitudes,
        diagnostics,
    })
}

/// Ascending frequency, then ascending damping.
pub fn pole_order(a: &Pole, b: &Pole) -> Ordering {
    a.f.total_cmp(&b.f).then(a.alpha.total_cmp(&b.alpha))
}

/// Unit-norm mode matrix columns `z_i^k / ||z_i^.||`, k = 0..n.
fn mode_matrix(z: &[Complex64], n: usize) -> (CMatrix, Vec<f64>) {
    let mut m = CMatrix::zeros(n, z.len());
    let mut norms = Vec::with_capacity(z.len());
    for (c, &zi) in z.iter().enumerate() {
        let mut p = Complex64::new(1.0, 0.0);
        for k in 0..n {
            m[(k, c)] = p;
            p *= zi;
        }
        let norm = m.column(c).norm();
        norms.push(norm);
        if norm > 0.0 && norm.is_finite() {
            m.column_mut(c).iter_mut().for_each(|v| *v /= norm);
        }
    }
    (m, norms)
}

/// Keep the `model_order` roots with the largest score
/// `|beta_i| sum_k |z_i|^{2k}` from a least-squares fit of all roots to `data`.
/// Both lists come back ordered by frequency.
pub fn separate_signal_poles(
    roots: &[Complex64],
    data: &[Complex64],
    model_order: usize,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if roots.len() < model_order {
        return Err(Error::invalid(format!(
            "{} roots cannot supply {model_order} signal poles",
            roots.len()
        )));
    }
    let by_freq = |a: &Complex64, b: &Complex64| {
        a.arg()
            .total_cmp(&b.arg())
            .then(b.norm().total_cmp(&a.norm()))
    };
    if roots.len() == model_order {
        let mut signal = roots.to_vec();
        signal.sort_by(by_freq);
        return Ok((signal, Vec::new()));
    }
    for i in 0..roots.len() {
        for j in 0..i {
            if (roots[i] - roots[j]).norm() < 1e-10 {
                return Err(Error::Degenerate(format!(
                    "coincident roots {} and {}",
                    roots[i], roots[j]
                )));
            }
        }
    }
    let (m, norms) = mode_matrix(roots, data.len());
    if norms.iter().any(|n| !n.is_finite()) {
        return Err(Error::Degenerate(
            "root magnitude overflows the mode matrix".into(),
        ));
    }
    let (beta, _) = least_squares(&m, &CVector::from_column_slice(data))?;
    // beta is fitted against unit-norm columns, so |beta_i| = |b_i| sqrt(E_i)
    let score: Vec<f64> = beta.iter().zip(&norms).map(|(b, n)| b.norm() * n).collect();
    let keep = if is_real(data) {
        conjugate_closed_selection(roots, &score, model_order)
    } else {
        None
    }
    .unwrap_or_else(|| {
        let mut idx: Vec<usize> = (0..roots.len()).collect();
        idx.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
        idx.truncate(model_order);
        idx
    });
    let mut signal: Vec<Complex64> = keep.iter().map(|&i| roots[i]).collect();
    let mut discarded: Vec<Complex64> = (0..roots.len())
        .filter(|i| !keep.contains(i))
        .map(|i| roots[i])
        .collect();
    signal.sort_by(by_freq);
    discarded.sort_by(by_freq);
    Ok((signal, discarded))
}

/// Rank conjugate pairs as units so that a real signal keeps closed pairs.
/// `None` when no combination of groups fills exactly `model_order` slots.
fn conjugate_closed_selection(
    roots: &[Complex64],
    score: &[f64],
    model_order: usize,
) -> Option<Vec<usize>> {
    let n = roots.len();
    let mut used = vec![false; n];
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in 0..n {
        if used[i] {
            continue;
        }
        used[i] = true;
        let tol = 1e-8 * roots[i].norm().max(1.0);
        let partner = if roots[i].im.abs() > tol {
            (0..n)
                .filter(|&j| !used[j])
                .min_by(|&a, &b| {
                    (roots[a] - roots[i].conj())
                        .norm()
                        .total_cmp(&(roots[b] - roots[i].conj()).norm())
                })
                .filter(|&j| (roots[j] - roots[i].conj()).norm() <= tol)
        } else {
            None
        };
        match partner {
            Some(j) => {
                used[j] = true;
                groups.push((score[i].max(score[j]), vec![i.min(j), i.max(j)]));
            }
            None => groups.push((score[i], vec![i])),
        }
    }
    groups.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1[0].cmp(&b.1[0])));
    let mut keep = Vec::with_capacity(model_order);
    for (_, g) in &groups {
        if keep.len() + g.len() <= model_order {
            keep.extend_from_slice(g);
        }
    }
    (keep.len() == model_order).then_some(keep)
}

/// Least-squares residues `beta` with `sum_i beta_i z_i^k ~ data[k]`.
///
/// Fails when the column-normalized mode matrix has condition above 1e12.
pub fn fit_residues(z_poles: &[Complex64], data: &[Complex64]) -> Result<Vec<Complex64>> {
    if z_poles.is_empty() {
        return Ok(Vec::new());
    }
    if data.len() < z_poles.len() {
        return Err(Error::invalid("fewer samples than poles"));
    }
    let (m, norms) = mode_matrix(z_poles, data.len());
    if norms.iter().any(|n| !n.is_finite() || *n == 0.0) {
        return Err(Error::Degenerate(
            "mode matrix has a zero or overflowing column".into(),
        ));
    }
    let (beta, cond) = least_squares(&m, &CVector::from_column_slice(data))?;
    if !(cond <= 1e12) {
        return Err(Error::Degenerate(format!(
            "mode matrix condition {cond:.3e} exceeds 1e12"
        )));
    }
    Ok(beta.iter().zip(&norms).map(|(b, n)| b / *n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_signal, SignalSpec};

    fn geometric(base: f64, scale: f64, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|k| Complex64::new(scale * base.powi(k as i32), 0.0))
            .collect()
    }

    fn example2_grid() -> Vec<Complex64> {
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 5.6).collect();
        generate_signal(&SignalSpec::example2(), &t).unwrap()
    }

    fn truth2(step: f64) -> Vec<Complex64> {
        SignalSpec::example2()
            .all_poles()
            .iter()
            .map(|p| (p.s() * step).exp())
            .collect()
    }

    fn contains_all(set: &[Complex64], want: &[Complex64], tol: f64) -> bool {
        want.iter()
            .all(|w| set.iter().any(|s| (s - w).norm() < tol))
    }

    #[test]
    fn pt_mle_single_exponential() {
        let y = geometric(0.9, 1.0, 10);
        let r = estimate_pt_mle(
            &y,
            1.0,
            &Weight::Identity,
            PtMleOptions {
                ext_order: 2,
                model_order: 1,
                sv_correction: None,
            },
        )
        .unwrap();
        assert_eq!(r.z_poles.len(), 1);
        assert!((r.z_poles[0] - Complex64::new(0.9, 0.0)).norm() < 1e-8);
        assert!((r.amplitudes[0] - Complex64::new(1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn oracle_two_modes_exact() {
        let z = [Complex64::new(0.9, 0.2), Complex64::new(0.5, -0.4)];
        let g: Vec<Complex64> = (0..12).map(|k| z[0].powi(k) + 2.0 * z[1].powi(k)).collect();
        let a = solve_oracle_mle(&g, &g, &Weight::Identity, 2).unwrap();
        let roots = companion_roots(&a).unwrap();
        assert!(contains_all(&roots, &z, 1e-10));
    }

    #[test]
    fn oracle_contains_example2_poles() {
        let g = example2_grid();
        let a = solve_oracle_mle(&g, &g, &Weight::Identity, 20).unwrap();
        let roots = companion_roots(&a).unwrap();
        assert!(contains_all(&roots, &truth2(5.6), 1e-8));
    }

    #[test]
    fn separation_cases() {
        let y = geometric(0.9, 1.0, 12);
        let roots = [Complex64::new(0.1, 0.0), Complex64::new(0.9, 0.0)];
        let (s, d) = separate_signal_poles(&roots, &y, 1).unwrap();
        assert!((s[0] - roots[1]).norm() < 1e-15);
        assert_eq!(d.len(), 1);
        let (s, d) = separate_signal_poles(&roots, &y, 2).unwrap();
        assert_eq!(s.len(), 2);
        assert!(d.is_empty());
        assert!(separate_signal_poles(&roots, &y, 3).is_err());
        let dup = [
            Complex64::new(0.5, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.1, 0.0),
        ];
        assert!(matches!(
            separate_signal_poles(&dup, &y, 1),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn separation_picks_example2_poles() {
        let g = example2_grid();
        let a = solve_oracle_mle(&g, &g, &Weight::Identity, 20).unwrap();
        let roots = companion_roots(&a).unwrap();
        let (signal, discarded) = separate_signal_poles(&roots, &g, 4).unwrap();
        assert_eq!(discarded.len(), 16);
        assert!(contains_all(&signal, &truth2(5.6), 1e-8));
    }

    #[test]
    fn residue_cases() {
        let y = geometric(0.8, 3.0, 10);
        let b = fit_residues(&[Complex64::new(0.8, 0.0)], &y).unwrap();
        assert!((b[0] - Complex64::new(3.0, 0.0)).norm() < 1e-12);
        let zero = vec![Complex64::new(0.0, 0.0); 10];
        assert!(fit_residues(&[Complex64::new(0.8, 0.0)], &zero).unwrap()[0].norm() == 0.0);

        let g = example2_grid();
        let z = truth2(5.6);
        let b = fit_residues(&z, &g).unwrap();
        for (bi, want) in b.iter().zip([1.5, 1.5, 3.5, 3.5]) {
            assert!((bi - Complex64::new(want, 0.0)).norm() < 1e-6, "{bi}");
        }
        let near = [Complex64::new(0.8, 0.0), Complex64::new(0.8 + 1e-14, 0.0)];
        assert!(matches!(fit_residues(&near, &y), Err(Error::Degenerate(_))));
    }

    #[test]
    fn alm_single_mode_ratio() {
        let y = geometric(0.9, 1.0, 10);
        let (r, v) = alm_system(&y, 1, 1);
        assert!((v[0] / r[(0, 0)] - Complex64::new(0.9, 0.0)).norm() < 1e-12);
        let est = estimate_alm(&y, 1.0, 1, Some(1), 1).unwrap();
        assert!((est.coefficients[0] + Complex64::new(0.9, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn alm_row_limits() {
        let y = geometric(0.9, 1.0, 10);
        assert!(estimate_alm(&y, 1.0, 3, Some(7), 1).is_err());
        assert!(estimate_alm(&y, 1.0, 3, Some(6), 1).is_ok());
        assert!(estimate_alm(&y, 1.0, 3, Some(0), 1).is_err());
    }

    #[test]
    fn alm_summation_limits() {
        // hand-expanded entries for L = 6, J = 2, I = 2
        let x: Vec<Complex64> = (1..=6).map(|v| Complex64::new(v as f64, 0.0)).collect();
        let (r, v) = alm_system(&x, 2, 2);
        let xr = |k: usize| (k + 1) as f64;
        // i = 1: l = 0..=2
        let r11: f64 = (0..3).map(|l| xr(2 + l) * xr(l)).sum::<f64>() / 6.0;
        let v1: f64 = (0..3).map(|l| xr(3 + l) * xr(l)).sum::<f64>() / 6.0;
        // i = 2: l = 0..=1
        let r22: f64 = (0..2).map(|l| xr(2 + l) * xr(l)).sum::<f64>() / 6.0;
        let v2: f64 = (0..2).map(|l| xr(4 + l) * xr(l)).sum::<f64>() / 6.0;
        assert!((r[(0, 0)].re - r11).abs() < 1e-14);
        assert!((v[0].re - v1).abs() < 1e-14);
        assert!((r[(1, 1)].re - r22).abs() < 1e-14);
        assert!((v[1].re - v2).abs() < 1e-14);
    }

    #[test]
    fn mp_single_mode() {
        let y = geometric(0.8, 1.0, 10);
        let r = estimate_mp(&y, 1.0, 2, 1, None).unwrap();
        assert!((r.z_poles[0] - Complex64::new(0.8, 0.0)).norm() < 1e-10);
        assert!(r.coefficients.is_empty());
    }

    #[test]
    fn order_constraint_is_named() {
        let y = geometric(0.8, 1.0, 10);
        let err = estimate_mp(&y, 1.0, 6, 1, None).unwrap_err();
        assert!(err.to_string().contains("J <= L - J"), "{err}");
        assert!(estimate_mp(&y, 1.0, 2, 3, None).is_err());
        assert!(estimate_alm(&y, 1.0, 6, None, 1).is_err());
    }

    #[test]
    fn noiseless_example2_all_methods() {
        let g = example2_grid();
        let truth = truth2(5.6);
        let opts = PtMleOptions {
            ext_order: 20,
            model_order: 4,
            sv_correction: None,
        };
        let pt = estimate_pt_mle(&g, 5.6, &Weight::Identity, opts).unwrap();
        let alm = estimate_alm(&g, 5.6, 20, None, 4).unwrap();
        let mp = estimate_mp(&g, 5.6, 16, 4, None).unwrap();
        for (r, tol) in [(&pt, 1e-8), (&alm, 1e-7), (&mp, 1e-8)] {
            assert_eq!(r.z_poles.len(), 4);
            assert!(
                contains_all(&r.z_poles, &truth, tol),
                "{}: {:?}",
                r.method,
                r.z_poles
            );
        }
        // ascending frequency order
        assert!(mp.s_poles.windows(2).all(|w| w[0].f <= w[1].f));
    }

    #[test]
    fn singular_value_correction() {
        assert_eq!(
            correct_singular_values(&[3.0, 2.0], 0.0, 5, 2),
            vec![3.0, 2.0]
        );
        let c = correct_singular_values(&[10.0], 1.0, 4, 1);
        assert!((c[0] - 96f64.sqrt()).abs() < 1e-14);
        let c = correct_singular_values(&[1.0, 0.5], 10.0, 4, 2);
        assert!(c
            .iter()
            .zip([1.0, 0.5])
            .all(|(c, s)| *c >= s * 1e-3 && *c > 0.0));
        // only the principal values move
        assert_eq!(correct_singular_values(&[10.0, 1.0], 1.0, 4, 1)[1], 1.0);
    }

    #[test]
    fn weighting_rejects_nonpositive_r0() {
        let g = example2_grid();
        let opts = PtMleOptions {
            ext_order: 20,
            model_order: 4,
            sv_correction: None,
        };
        let err = estimate_pt_mle(&g, 5.6, &Weight::Autocorr(vec![0.0; 40]), opts).unwrap_err();
        assert!(matches!(err, Error::Weighting(_)));
    }
}
