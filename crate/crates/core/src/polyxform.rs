//! Minimum-variance orthogonal-polynomial reconstruction.
//!
//! Samples `x(t_k)` at arbitrary instants are least-squares fitted by
//! polynomials that are orthogonal over the sample nodes. The fit is
//! evaluated on a uniform grid `0, T, ..., (L-1) T`, which makes the whole
//! operation a fixed linear map `H = P Q^-1 P1^T` from node values to grid
//! values. The approximation order is the one minimizing the residual
//! variance `sum (x - y)^2 / (K - N)`.
//!
//! The polynomials obey the three-term recurrence
//!
//! ```text
//! p_0 = 1,  p_{-1} = 0
//! p_j(t) = (t - a_j) p_{j-1}(t) - b_j p_{j-2}(t)
//! a_j = sum_k t_k p_{j-1}(t_k)^2 / Phi_{j-1},   b_j = Phi_{j-1} / Phi_{j-2}
//! Phi_j = sum_k p_j(t_k)^2
//! ```
//!
//! Internally every `p_j` is scaled by `1 / sqrt(Phi_j)` so that high orders
//! over long spans neither overflow nor underflow. `H` does not depend on
//! this scaling.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{NoiseModel, SampleSet};

/// Orthogonal polynomials over a node set, up to degree `order - 1`.
#[derive(Debug, Clone)]
pub struct PolyBasis {
    times: Vec<f64>,
    order: usize,
    /// `a_1 .. a_{N-1}`
    recur_a: Vec<f64>,
    /// `b_1 .. b_{N-1}`; `b_1` is unused because `p_{-1} = 0` and is stored as 0.
    recur_b: Vec<f64>,
    /// `Phi_0 .. Phi_{N-1}`
    phi: Vec<f64>,
    /// `sqrt(Phi_j / Phi_{j-1})` for j = 1..N-1, the normalized recurrence scale.
    ratio: Vec<f64>,
}

impl PolyBasis {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn recur_a(&self) -> &[f64] {
        &self.recur_a
    }

    pub fn recur_b(&self) -> &[f64] {
        &self.recur_b
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// `[p_0(t), ..., p_{N-1}(t)]` by the unnormalized recurrence.
    pub fn evaluate(&self, t: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.order);
        out.push(1.0);
        if self.order > 1 {
            out.push(t - self.recur_a[0]);
        }
        for j in 2..self.order {
            let v = (t - self.recur_a[j - 1]) * out[j - 1] - self.recur_b[j - 1] * out[j - 2];
            out.push(v);
        }
        out
    }

    /// `[p_j(t) / sqrt(Phi_j)]` by the normalized recurrence.
    pub fn evaluate_normalized(&self, t: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.order);
        out.push(1.0 / self.phi[0].sqrt());
        if self.order > 1 {
            out.push((t - self.recur_a[0]) * out[0] / self.ratio[0]);
        }
        for j in 2..self.order {
            let v = ((t - self.recur_a[j - 1]) * out[j - 1] - self.ratio[j - 2] * out[j - 2])
                / self.ratio[j - 1];
            out.push(v);
        }
        out
    }

    /// `K x N` matrix of normalized basis values at the nodes.
    pub fn node_matrix(&self) -> DMatrix<f64> {
        self.matrix_at(&self.times)
    }

    fn matrix_at(&self, ts: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(ts.len(), self.order);
        for (i, &t) in ts.iter().enumerate() {
            for (j, v) in self.evaluate_normalized(t).into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// Build the discrete orthogonal basis with `order` polynomials over `times`.
///
/// The recurrence coefficients are generated by a Lanczos sweep over the
/// nodes with full reorthogonalization, which keeps them accurate when the
/// order approaches the node count.
pub fn build_basis(times: &[f64], order: usize) -> Result<PolyBasis> {
    if order == 0 {
        return Err(Error::invalid("basis order must be at least 1"));
    }
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::invalid(format!("non-finite node {t}")));
    }
    for w in times.windows(2) {
        if w[1] == w[0] {
            return Err(Error::Rank(format!("duplicate node at t = {}", w[0])));
        }
        if w[1] < w[0] {
            return Err(Error::invalid("nodes must be sorted ascending"));
        }
    }
    let k = times.len();
    if order > k {
        return Err(Error::Rank(format!(
            "{order} basis polynomials need at least {order} distinct nodes, got {k}"
        )));
    }

    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(order);
    let inv = 1.0 / (k as f64).sqrt();
    vecs.push(vec![inv; k]);
    let mut recur_a = Vec::with_capacity(order.saturating_sub(1));
    let mut recur_b = Vec::with_capacity(order.saturating_sub(1));
    let mut ratio: Vec<f64> = Vec::with_capacity(order.saturating_sub(1));
    let mut phi = vec![k as f64];

    for j in 1..order {
        let prev = &vecs[j - 1];
        let a: f64 = times.iter().zip(prev).map(|(t, v)| t * v * v).sum();
        let mut r: Vec<f64> = times.iter().zip(prev).map(|(t, v)| (t - a) * v).collect();
        if j >= 2 {
            let c = ratio[j - 2];
            for (ri, vi) in r.iter_mut().zip(&vecs[j - 2]) {
                *ri -= c * vi;
            }
        }
        for _ in 0..2 {
            for q in &vecs {
                let d: f64 = r.iter().zip(q).map(|(x, y)| x * y).sum();
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= d * qi;
                }
            }
        }
        let c = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let phi_j = phi[j - 1] * c * c;
        if !(phi_j >= 1e-300) || !phi_j.is_finite() || c == 0.0 {
            return Err(Error::Degenerate(format!(
                "squared norm of p_{j} is {phi_j:.3e}"
            )));
        }
        recur_a.push(a);
        recur_b.push(if j >= 2 { phi[j - 1] / phi[j - 2] } else { 0.0 });
        ratio.push(c);
        phi.push(phi_j);
        vecs.push(r.into_iter().map(|v| v / c).collect());
    }

    Ok(PolyBasis {
        times: times.to_vec(),
        order,
        recur_a,
        recur_b,
        phi,
        ratio,
    })
}

/// `[p_0(t), ..., p_{N-1}(t)]` for `basis`.
pub fn evaluate_basis(basis: &PolyBasis, t: f64) -> Result<Vec<f64>> {
    if !t.is_finite() {
        return Err(Error::invalid(format!("non-finite evaluation point {t}")));
    }
    Ok(basis.evaluate(t))
}

/// Outcome of the minimum error-variance order search.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSelection {
    pub chosen: usize,
    /// `(N, sigma_N^2)` for every order examined.
    pub curve: Vec<(usize, f64)>,
}

/// Pick the approximation order in `[n_min, n_max]` minimizing
/// `sigma_N^2 = sum_k (x_k - y_k)^2 / (K - N)`.
///
/// Orders whose variance lies within `1e-12` of the minimum, relative to the
/// larger of the minimum and the mean data power, count as ties; the smallest
/// tied order wins.
pub fn select_order(samples: &SampleSet, n_min: usize, n_max: usize) -> Result<OrderSelection> {
    let k = samples.len();
    if n_min < 1 || n_min > n_max {
        return Err(Error::invalid(format!(
            "order range [{n_min}, {n_max}] is empty or starts below 1"
        )));
    }
    if n_max >= k {
        return Err(Error::invalid(format!(
            "maximum order {n_max} must be below the sample count {k}"
        )));
    }
    let basis = build_basis(&samples.times, n_max)?;
    let q = basis.node_matrix();
    let x = &samples.values;
    let mut resid = x.clone();
    let mut curve = Vec::with_capacity(n_max - n_min + 1);
    for n in 1..=n_max {
        let col = q.column(n - 1);
        let c: f64 = col.iter().zip(x).map(|(q, x)| q * x).sum();
        for (r, qv) in resid.iter_mut().zip(col.iter()) {
            *r -= c * qv;
        }
        if n >= n_min {
            let ss: f64 = resid.iter().map(|r| r * r).sum();
            curve.push((n, ss / (k - n) as f64));
        }
    }
    let min = curve.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    let power = x.iter().map(|v| v * v).sum::<f64>() / k as f64;
    let tol = 1e-12 * min.max(power);
    let chosen = curve
        .iter()
        .find(|&&(_, v)| v <= min + tol)
        .map(|&(n, _)| n)
        .expect("curve is non-empty");
    Ok(OrderSelection { chosen, curve })
}

/// Default grid length that stays inside the sampled span.
pub fn default_grid_len(last_time: f64, step: f64) -> usize {
    (last_time / step + 1e-9).floor() as usize + 1
}

/// The linear node-to-grid map `H = P Q^-1 P1^T`.
///
/// `p1` and `p` hold normalized basis values, so `Q` is the identity and
/// `H = P P1^T`.
#[derive(Debug, Clone)]
pub struct ReconstructionTransform {
    pub basis: PolyBasis,
    pub grid_step: f64,
    pub grid_len: usize,
    /// `K x N` basis values at the nodes.
    pub p1: DMatrix<f64>,
    /// `L x N` basis values on the grid.
    pub p: DMatrix<f64>,
    /// `L x K`
    pub h: DMatrix<f64>,
    /// Set when the grid reaches outside the sampled span.
    pub extrapolates: bool,
}

impl ReconstructionTransform {
    pub fn grid_times(&self) -> Vec<f64> {
        (0..self.grid_len)
            .map(|i| i as f64 * self.grid_step)
            .collect()
    }

    /// First column of `H`: the grid response to a unit sample at the first node.
    pub fn impulse_response(&self) -> Vec<f64> {
        self.h.column(0).iter().copied().collect()
    }

    /// Exact error covariance `H R_ww H^T` for noise with the given normalized
    /// autocorrelation (indexed by node lag) and variance `sigma2`.
    pub fn error_covariance(&self, r_ww: impl Fn(i64) -> f64, sigma2: f64) -> DMatrix<f64> {
        let k = self.h.ncols();
        let rww = DMatrix::from_fn(k, k, |i, j| sigma2 * r_ww(i as i64 - j as i64));
        &self.h * rww * self.h.transpose()
    }
}

/// Assemble `H` for a grid of `len` points spaced `step` apart starting at 0.
///
/// `len = None` uses [`default_grid_len`]. A grid reaching outside
/// `[t_1, t_K]` is a range error unless `allow_extrapolation` is set.
pub fn build_transform(
    basis: &PolyBasis,
    step: f64,
    len: Option<usize>,
    allow_extrapolation: bool,
) -> Result<ReconstructionTransform> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid(format!(
            "grid step must be positive, got {step}"
        )));
    }
    let first = basis.times[0];
    let last = *basis.times.last().expect("basis has nodes");
    let len = len.unwrap_or_else(|| default_grid_len(last, step));
    if len == 0 {
        return Err(Error::invalid("grid length must be positive"));
    }
    let end = (len - 1) as f64 * step;
    let outside = first > 1e-9 * step || end > last + 1e-9 * step;
    if outside && !allow_extrapolation {
        return Err(Error::Range(format!(
            "grid [0, {end}] leaves the sampled span [{first}, {last}]"
        )));
    }
    let grid: Vec<f64> = (0..len).map(|i| i as f64 * step).collect();
    let p1 = basis.node_matrix();
    let p = basis.matrix_at(&grid);
    let h = &p * p1.transpose();
    Ok(ReconstructionTransform {
        basis: basis.clone(),
        grid_step: step,
        grid_len: len,
        p1,
        p,
        h,
        extrapolates: outside,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub grid_step: f64,
    /// `y(iT)`, i = 0..L-1
    pub grid_values: Vec<f64>,
    pub chosen_order: usize,
    /// Empty when the order was fixed rather than selected.
    pub variance_curve: Vec<(usize, f64)>,
    /// `h(iT)`, the first column of `H`.
    pub impulse_response: Vec<f64>,
    /// `r_ee[k]`, k = 0..=max_lag; empty until noise statistics are attached.
    pub error_autocorr: Vec<f64>,
}

impl ReconstructionResult {
    pub fn grid_times(&self) -> Vec<f64> {
        (0..self.grid_values.len())
            .map(|i| i as f64 * self.grid_step)
            .collect()
    }
}

/// Apply `H` to the samples.
pub fn reconstruct(
    transform: &ReconstructionTransform,
    samples: &SampleSet,
) -> Result<ReconstructionResult> {
    let nodes = transform.basis.times();
    if samples.times.len() != nodes.len() {
        return Err(Error::invalid(format!(
            "transform built for {} nodes, got {} samples",
            nodes.len(),
            samples.times.len()
        )));
    }
    let scale = nodes.last().map(|t| t.abs()).unwrap_or(1.0).max(1.0);
    if let Some((a, b)) = nodes
        .iter()
        .zip(&samples.times)
        .find(|(a, b)| (*a - *b).abs() > 1e-12 * scale)
    {
        return Err(Error::invalid(format!(
            "sample instant {b} does not match node {a}"
        )));
    }
    let x = nalgebra::DVector::from_column_slice(&samples.values);
    let y = &transform.h * x;
    Ok(ReconstructionResult {
        grid_step: transform.grid_step,
        grid_values: y.iter().copied().collect(),
        chosen_order: transform.basis.order(),
        variance_curve: Vec::new(),
        impulse_response: transform.impulse_response(),
        error_autocorr: Vec::new(),
    })
}

/// Error autocorrelation `r_ee[k] = sigma2 * (h ** h~ ** r_ww)[k]`, where
/// `h~[k] = h[-k]`, for k = 0..=max_lag.
pub fn propagate_autocorr(
    impulse_response: &[f64],
    r_ww: impl Fn(i64) -> f64,
    max_lag: usize,
    sigma2: f64,
) -> Result<Vec<f64>> {
    let n = impulse_response.len();
    if n == 0 {
        return Err(Error::invalid("empty impulse response"));
    }
    if max_lag >= n {
        return Err(Error::invalid(format!(
            "max lag {max_lag} must be below the response length {n}"
        )));
    }
    let h = impulse_response;
    // deterministic autocorrelation of h at lags -(n-1)..=(n-1), stored at offset n-1
    let mut hh = vec![0.0; 2 * n - 1];
    for lag in 0..n {
        let v: f64 = (lag..n).map(|m| h[m] * h[m - lag]).sum();
        hh[n - 1 + lag] = v;
        hh[n - 1 - lag] = v;
    }
    let out = (0..=max_lag)
        .map(|k| {
            let s: f64 = hh
                .iter()
                .enumerate()
                .map(|(idx, &c)| {
                    let l = idx as i64 - (n as i64 - 1);
                    c * r_ww(k as i64 - l)
                })
                .sum();
            sigma2 * s
        })
        .collect();
    Ok(out)
}

/// Diagonal averages `mean_i C[i, i+k]` of a covariance matrix: the
/// stationary autocorrelation that best summarizes a non-Toeplitz covariance.
pub fn averaged_autocorr(cov: &DMatrix<f64>, max_lag: usize) -> Vec<f64> {
    let n = cov.nrows();
    (0..=max_lag.min(n.saturating_sub(1)))
        .map(|k| (0..n - k).map(|i| cov[(i, i + k)]).sum::<f64>() / (n - k) as f64)
        .collect()
}

/// How the approximation order is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderRule {
    Fixed(usize),
    /// Search `n_min..=n_max`; `n_max = None` searches up to `K / 2`.
    MinVariance {
        n_min: usize,
        n_max: Option<usize>,
    },
}

impl OrderRule {
    /// Minimum-variance search over `1..=K/2`.
    pub fn auto() -> Self {
        OrderRule::MinVariance {
            n_min: 1,
            n_max: None,
        }
    }
}

/// Default upper end of the order search for `k` nodes.
pub fn default_max_order(k: usize) -> usize {
    (k / 2).max(1).min(k.saturating_sub(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionConfig {
    pub grid_step: f64,
    pub order: OrderRule,
    pub grid_len: Option<usize>,
    pub allow_extrapolation: bool,
}

/// Order selection, transform assembly and reconstruction in one call.
///
/// When `noise` is given, `error_autocorr` is filled by [`propagate_autocorr`]
/// at unit noise variance up to lag `L - 1`.
pub fn reconstruct_samples(
    samples: &SampleSet,
    cfg: &ReconstructionConfig,
    noise: Option<NoiseModel>,
) -> Result<(ReconstructionResult, ReconstructionTransform)> {
    let (order, curve) = match cfg.order {
        OrderRule::Fixed(n) => (n, Vec::new()),
        OrderRule::MinVariance { n_min, n_max } => {
            let k = samples.len();
            let hi = n_max
                .unwrap_or_else(|| default_max_order(k))
                .min(k.saturating_sub(1));
            let sel = select_order(samples, n_min, hi.max(n_min))?;
            (sel.chosen, sel.curve)
        }
    };
    let basis = build_basis(&samples.times, order)?;
    let transform = build_transform(&basis, cfg.grid_step, cfg.grid_len, cfg.allow_extrapolation)?;
    let mut result = reconstruct(&transform, samples)?;
    result.variance_curve = curve;
    if let Some(noise) = noise {
        let max_lag = transform.grid_len - 1;
        result.error_autocorr = propagate_autocorr(
            &result.impulse_response,
            |l| noise.normalized_autocorr(l),
            max_lag,
            1.0,
        )?;
    }
    Ok((result, transform))
}
