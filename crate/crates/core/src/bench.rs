//! Monte Carlo bias/variance harness.
//!
//! A [`Scenario`] fixes the signal, the sampling schedule and the noise law;
//! each trial draws a fresh noise realization seeded with
//! `base_seed + trial`, runs every configured method on the same noisy data
//! and matches the estimated poles to the truth. Trials run in parallel and
//! are reduced in trial order, so reports are bit-reproducible.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    add_noise_with, generate_real, make_nonuniform_schedule, NoiseModel, Pole, SampleSet,
    SignalSpec, SnrKind,
};
use crate::pipeline::{run_method, MethodConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Sampling {
    Uniform {
        step: f64,
        count: usize,
    },
    Nonuniform {
        seed: u64,
        count: usize,
        min_gap: f64,
        max_gap: f64,
    },
}

impl Sampling {
    pub fn times(&self) -> Result<Vec<f64>> {
        match *self {
            Sampling::Uniform { step, count } => {
                if !(step > 0.0) || count == 0 {
                    return Err(Error::invalid(
                        "uniform sampling needs step > 0 and count >= 1",
                    ));
                }
                Ok((0..count).map(|k| k as f64 * step).collect())
            }
            Sampling::Nonuniform {
                seed,
                count,
                min_gap,
                max_gap,
            } => make_nonuniform_schedule(seed, count, max_gap, min_gap),
        }
    }
}

/// Unit in which frequency statistics are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FreqUnit {
    /// Cycles per time unit (`f`).
    #[default]
    Cycles,
    /// Radians per time unit (`2 pi f`, the imaginary part of `s`).
    Radians,
}

impl FreqUnit {
    pub fn apply(&self, f: f64) -> f64 {
        match self {
            FreqUnit::Cycles => f,
            FreqUnit::Radians => 2.0 * std::f64::consts::PI * f,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub signal: SignalSpec,
    pub sampling: Sampling,
    pub noise: NoiseModel,
    /// `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub snr_kind: SnrKind,
    pub methods: Vec<MethodConfig>,
    pub n_trials: usize,
    pub base_seed: u64,
    pub freq_unit: FreqUnit,
}

impl Scenario {
    /// Truth poles with positive-frequency representatives for conjugate-pair signals.
    pub fn truth(&self) -> Vec<Pole> {
        self.signal.modes.iter().map(|m| m.pole).collect()
    }

    /// Noise seed of one trial.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }

    /// Noisy samples for one trial, on the scenario's fixed schedule.
    pub fn trial_samples(&self, times: &[f64], clean: &[f64], trial: usize) -> Result<SampleSet> {
        let (noisy, _) = add_noise_with(
            clean,
            self.noise,
            self.snr_db,
            self.snr_kind,
            self.trial_seed(trial),
        )?;
        SampleSet::new(times.to_vec(), noisy)
    }
}

/// One row of a report: statistics of one parameter under one method.
#[derive(Debug, Clone, PartialEq)]
pub struct StatRow {
    pub method: String,
    pub param: String,
    pub truth: f64,
    pub mean: f64,
    /// `mean - truth`
    pub signed_bias: f64,
    /// `|mean - truth|`
    pub bias: f64,
    /// Sample variance with divisor `n_valid - 1` (0 when `n_valid < 2`).
    pub variance: f64,
    pub n_valid: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StatReport {
    pub rows: Vec<StatRow>,
}

impl StatReport {
    pub fn row(&self, method: &str, param: &str) -> Option<&StatRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.param == param)
    }
}

/// Minimum-cost bijection between estimated and true poles.
///
/// Returns `assignment[t] = e`: truth `t` is matched to estimate `e`. The cost
/// of a pair is `|da| / |alpha_t| + |df| / |f_t|` with both scales floored at 1e-6.
pub fn match_poles(estimated: &[Pole], truth: &[Pole]) -> Result<Vec<usize>> {
    if estimated.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} estimated poles for {} true poles",
            estimated.len(),
            truth.len()
        )));
    }
    let cost: Vec<Vec<f64>> = truth
        .iter()
        .map(|t| {
            let sa = t.alpha.abs().max(1e-6);
            let sf = t.f.abs().max(1e-6);
            estimated
                .iter()
                .map(|e| (e.alpha - t.alpha).abs() / sa + (e.f - t.f).abs() / sf)
                .collect()
        })
        .collect();
    Ok(hungarian(&cost))
}

/// Kuhn-Munkres with potentials on a square cost matrix; returns the column
/// assigned to each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays, index 0 is the virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
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
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Poles with positive frequency; the conjugate half of a real signal's estimate.
pub fn positive_frequency(poles: &[Pole], step: f64) -> Vec<Pole> {
    let tol = 1e-9 / step;
    poles.iter().copied().filter(|p| p.f > tol).collect()
}

/// Per-trial, per-method matched estimates in truth order.
pub type TrialOutcome = Vec<Result<Vec<Pole>>>;

/// Run a single trial of the scenario (exposed for replay and tests).
pub fn run_trial(
    sc: &Scenario,
    times: &[f64],
    clean: &[f64],
    trial: usize,
) -> Result<TrialOutcome> {
    let samples = sc.trial_samples(times, clean, trial)?;
    let truth = sc.truth();
    Ok(sc
        .methods
        .iter()
        .map(|cfg| {
            let out = run_method(cfg, &samples, sc.noise)?;
            let step = out
                .reconstruction
                .as_ref()
                .map(|r| r.grid_step)
                .or(samples.uniform_step)
                .unwrap_or(1.0);
            let est = if sc.signal.conjugate_pairs {
                positive_frequency(&out.estimate.s_poles, step)
            } else {
                out.estimate.s_poles.clone()
            };
            let assignment = match_poles(&est, &truth)?;
            Ok(assignment.into_iter().map(|e| est[e]).collect())
        })
        .collect())
}

pub fn param_names(n_modes: usize) -> Vec<String> {
    (1..=n_modes)
        .flat_map(|i| [format!("alpha_{i}"), format!("f_{i}")])
        .collect()
}

/// Run every trial and reduce to bias/variance statistics.
pub fn run_scenario(sc: &Scenario) -> Result<StatReport> {
    if sc.n_trials == 0 {
        return Err(Error::invalid("scenario needs at least one trial"));
    }
    sc.noise.validate()?;
    let times = sc.sampling.times()?;
    let clean = generate_real(&sc.signal, &times)?;
    let outcomes: Vec<TrialOutcome> = (0..sc.n_trials)
        .into_par_iter()
        .map(|trial| run_trial(sc, &times, &clean, trial))
        .collect::<Result<Vec<_>>>()?;
    Ok(reduce(sc, &outcomes))
}

fn reduce(sc: &Scenario, outcomes: &[TrialOutcome]) -> StatReport {
    let truth = sc.truth();
    let names = param_names(truth.len());
    let truth_values: Vec<f64> = truth
        .iter()
        .flat_map(|p| [p.alpha, sc.freq_unit.apply(p.f)])
        .collect();
    let mut rows = Vec::new();
    for (mi, cfg) in sc.methods.iter().enumerate() {
        let valid: Vec<Vec<f64>> = outcomes
            .iter()
            .filter_map(|o| o[mi].as_ref().ok())
            .map(|poles| {
                poles
                    .iter()
                    .flat_map(|p| [p.alpha, sc.freq_unit.apply(p.f)])
                    .collect()
            })
            .collect();
        let n_valid = valid.len();
        let n_failed = outcomes.len() - n_valid;
        for (pi, name) in names.iter().enumerate() {
            let (mean, variance) = if n_valid == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let mean = valid.iter().map(|v| v[pi]).sum::<f64>() / n_valid as f64;
                let var = if n_valid > 1 {
                    valid.iter().map(|v| (v[pi] - mean).powi(2)).sum::<f64>() / (n_valid - 1) as f64
                } else {
                    0.0
                };
                (mean, var)
            };
            let signed_bias = mean - truth_values[pi];
            rows.push(StatRow {
                method: cfg.method.label().to_string(),
                param: name.clone(),
                truth: truth_values[pi],
                mean,
                signed_bias,
                bias: signed_bias.abs(),
                variance,
                n_valid,
                n_failed,
            });
        }
    }
    StatReport { rows }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    TextTable,
}

pub const REPORT_HEADER: [&str; 6] = ["method", "param", "bias", "variance", "n_valid", "n_failed"];

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

/// Render the report; numbers use four significant digits.
pub fn emit_report(report: &StatReport, format: ReportFormat) -> String {
    let cells: Vec<[String; 6]> = report
        .rows
        .iter()
        .map(|r| {
            [
                r.method.clone(),
                r.param.clone(),
                sci(r.bias),
                sci(r.variance),
                r.n_valid.to_string(),
                r.n_failed.to_string(),
            ]
        })
        .collect();
    match format {
        ReportFormat::Csv => {
            let mut out = REPORT_HEADER.join(",");
            out.push('\n');
            for c in &cells {
                out.push_str(&c.join(","));
                out.push('\n');
            }
            out
        }
        ReportFormat::TextTable => {
            let mut widths: Vec<usize> = REPORT_HEADER.iter().map(|h| h.len()).collect();
            for c in &cells {
                for (w, s) in widths.iter_mut().zip(c.iter()) {
                    *w = (*w).max(s.len());
                }
            }
            let mut out = String::new();
            let line = |out: &mut String, fields: &[&str]| {
                let parts: Vec<String> = fields
                    .iter()
                    .zip(&widths)
                    .map(|(f, w)| format!("{f:<w$}", w = *w))
                    .collect();
                let _ = writeln!(out, "{}", parts.join("  ").trim_end());
            };
            line(&mut out, &REPORT_HEADER);
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "{}", rule.join("  "));
            for c in &cells {
                let refs: Vec<&str> = c.iter().map(|s| s.as_str()).collect();
                line(&mut out, &refs);
            }
            out
        }
    }
}

/// Signed-bias sidecar: `method,param,truth,mean,signed_bias`.
pub fn emit_bias_diagnostics(report: &StatReport) -> String {
    let mut out = String::from("method,param,truth,mean,signed_bias\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{:.15e},{:.15e},{:.15e}",
            r.method, r.param, r.truth, r.mean, r.signed_bias
        );
    }
    out
}

/// `(method, param, bias, variance, n_valid, n_failed)`
pub type ReportRecord = (String, String, f64, f64, usize, usize);

/// Parse a report CSV back into records.
pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::invalid(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != REPORT_HEADER {
        return Err(Error::invalid(format!(
            "unexpected report header {headers:?}"
        )));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::invalid(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| Error::invalid(format!("bad number {}", &rec[i])))
        };
        let int = |i: usize| -> Result<usize> {
            rec[i]
                .parse()
                .map_err(|_| Error::invalid(format!("bad count {}", &rec[i])))
        };
        out.push((
            rec[0].to_string(),
            rec[1].to_string(),
            num(2)?,
            num(3)?,
            int(4)?,
            int(5)?,
        ));
    }
    Ok(out)
}
