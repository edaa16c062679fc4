//! Glue from raw samples to pole estimates: optional polynomial
//! reconstruction, error weighting, then one of the estimators.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimators::{
    estimate_alm, estimate_mp, estimate_pt_mle, EstimateResult, Method, PtMleOptions, Weight,
};
use crate::model::{NoiseModel, SampleSet};
use crate::numerics::to_complex;
use crate::polyxform::{reconstruct_samples, ReconstructionConfig, ReconstructionResult};

/// Which error statistics feed the PT-MLE weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    Identity,
    /// Toeplitz matrix of the convolution-propagated autocorrelation.
    #[default]
    Propagated,
    /// Exact `H R_ww H^T` covariance of the reconstruction error.
    ExactCovariance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub method: Method,
    pub ext_order: usize,
    pub model_order: usize,
    /// ALM equation count `I`.
    pub rows: Option<usize>,
    pub weighting: Weighting,
    pub sv_correction: Option<f64>,
    /// Map the samples onto a uniform grid first. Required for nonuniform input.
    pub reconstruct: Option<ReconstructionConfig>,
}

impl MethodConfig {
    pub fn new(method: Method, ext_order: usize, model_order: usize) -> Self {
        Self {
            method,
            ext_order,
            model_order,
            rows: None,
            weighting: Weighting::default(),
            sv_correction: None,
            reconstruct: None,
        }
    }

    pub fn with_reconstruction(mut self, cfg: ReconstructionConfig) -> Self {
        self.reconstruct = Some(cfg);
        self
    }

    pub fn with_weighting(mut self, weighting: Weighting) -> Self {
        self.weighting = weighting;
        self
    }
}

/// Estimates plus the intermediate grid, when one was built.
#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub estimate: EstimateResult,
    pub reconstruction: Option<ReconstructionResult>,
}

/// Run one configured estimator on a sample set.
///
/// `noise` supplies the normalized autocorrelation for weighting; its scale
/// is irrelevant because the weighted normal equations are homogeneous in it.
pub fn run_method(
    cfg: &MethodConfig,
    samples: &SampleSet,
    noise: NoiseModel,
) -> Result<MethodOutput> {
    let r_ww = |l: i64| noise.normalized_autocorr(l);
    let (grid, step, weight, reconstruction) = match &cfg.reconstruct {
        Some(rc) => {
            let (res, tr) = reconstruct_samples(samples, rc, Some(noise))?;
            let weight = match cfg.weighting {
                Weighting::Identity => Weight::Identity,
                Weighting::Propagated => Weight::Autocorr(res.error_autocorr.clone()),
                Weighting::ExactCovariance => Weight::Covariance(tr.error_covariance(r_ww, 1.0)),
            };
            (res.grid_values.clone(), res.grid_step, weight, Some(res))
        }
        None => {
            let step = samples.uniform_step.ok_or_else(|| {
                Error::invalid(format!(
                    "{} needs uniformly spaced samples unless reconstruction is enabled",
                    cfg.method
                ))
            })?;
            let n = samples.len();
            let weight = match cfg.weighting {
                Weighting::Identity => Weight::Identity,
                Weighting::Propagated if noise.is_white() => Weight::Identity,
                Weighting::Propagated => Weight::Autocorr((0..n as i64).map(r_ww).collect()),
                Weighting::ExactCovariance => {
                    Weight::Covariance(DMatrix::from_fn(n, n, |i, j| r_ww(i as i64 - j as i64)))
                }
            };
            (samples.values.clone(), step, weight, None)
        }
    };
    let data = to_complex(&grid);
    let estimate = match cfg.method {
        Method::PtMle => estimate_pt_mle(
            &data,
            step,
            &weight,
            PtMleOptions {
                ext_order: cfg.ext_order,
                model_order: cfg.model_order,
                sv_correction: cfg.sv_correction,
            },
        )?,
        Method::Alm => estimate_alm(&data, step, cfg.ext_order, cfg.rows, cfg.model_order)?,
        Method::Mp => estimate_mp(
            &data,
            step,
            cfg.ext_order,
            cfg.model_order,
            cfg.sv_correction,
        )?,
    };
    Ok(MethodOutput {
        estimate,
        reconstruction,
    })
}
