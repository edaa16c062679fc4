//! Command-line front end.
//!
//! Every command reads a TOML scenario file. All randomness is seeded from it
//! (or from `--seed`), so repeated runs write identical files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::bench::{
    emit_bias_diagnostics, emit_report, run_scenario, FreqUnit, ReportFormat, Sampling, Scenario,
};
use crate::estimators::Method;
use crate::model::{
    add_noise_with, generate_real, signal_power, Mode, NoiseModel, Pole, SampleSet, SignalSpec,
    SnrKind,
};
use crate::pipeline::{run_method, MethodConfig, Weighting};
use crate::polyxform::{reconstruct_samples, OrderRule, ReconstructionConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "sysid",
    version,
    about = "Pole estimation from uniformly or nonuniformly sampled transients"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate noisy samples (`samples.csv`) and the clean signal (`samples_truth.csv`).
    Simulate(Common),
    /// Fit the minimum-variance polynomial and write grid, variance curve and autocorrelation data.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// `t,x` sample file.
        #[arg(long)]
        samples: PathBuf,
        /// `t,g` ground truth; defaults to `<stem>_truth.csv` next to the samples.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Run the configured estimators on a `t,x` sample file or an `i,t,y` grid file.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: PathBuf,
    },
    /// Monte Carlo bias/variance report for every configured SNR.
    Bench(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the noise seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Run(crate::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Run(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Run(crate::Error::InvalidInput(_)) => EXIT_CONFIG,
            _ => EXIT_OTHER,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Run(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// configuration file

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Noise seed; bench trials use `seed + trial`.
    #[serde(default)]
    pub seed: u64,
    pub signal: SignalConfig,
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub reconstruction: Option<ReconstructionSection>,
    #[serde(default)]
    pub methods: Vec<MethodSection>,
    pub bench: Option<BenchSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    #[serde(default = "yes")]
    pub conjugate_pairs: bool,
    pub modes: Vec<ModeConfig>,
}

fn yes() -> bool {
    true
}

/// One mode; give the frequency either as `f` (cycles per unit) or `omega` (rad per unit).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub beta: f64,
    pub alpha: f64,
    pub f: Option<f64>,
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum SamplingConfig {
    Uniform {
        step: f64,
        count: usize,
    },
    Nonuniform {
        count: usize,
        #[serde(default = "default_min_gap")]
        min_gap: f64,
        #[serde(default = "default_max_gap")]
        max_gap: f64,
        #[serde(default)]
        schedule_seed: u64,
    },
}

fn default_min_gap() -> f64 {
    0.1
}

fn default_max_gap() -> f64 {
    1.1
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    WhiteGaussian,
    Ar1Gaussian,
    WhiteUniform,
    WhiteLaplacian,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum SnrKindConfig {
    #[default]
    Average,
    Peak,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub model: NoiseKind,
    /// Lag-one correlation for `ar1_gaussian`.
    pub rho: Option<f64>,
    /// Omit for noiseless data.
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub snr_kind: SnrKindConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionSection {
    pub grid_step: f64,
    /// Fixed order; omit to select by minimum error variance.
    pub order: Option<usize>,
    #[serde(default = "one")]
    pub n_min: usize,
    pub n_max: Option<usize>,
    pub grid_len: Option<usize>,
    #[serde(default)]
    pub allow_extrapolation: bool,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    PtMle,
    Alm,
    Mp,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightingConfig {
    Identity,
    #[default]
    Propagated,
    ExactCovariance,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    pub method: MethodName,
    pub ext_order: usize,
    pub model_order: usize,
    pub rows: Option<usize>,
    #[serde(default)]
    pub weighting: WeightingConfig,
    /// Noise power for the principal singular-value correction; off when absent.
    pub sv_correction: Option<f64>,
    /// Skip reconstruction for uniformly sampled input.
    #[serde(default)]
    pub direct: bool,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum FreqUnitConfig {
    #[default]
    Cycles,
    Radians,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub n_trials: usize,
    /// Defaults to the single `noise.snr_db`.
    pub snr_db: Option<Vec<f64>>,
    #[serde(default)]
    pub freq_unit: FreqUnitConfig,
}

/// Parse a config document; errors name the offending key path.
pub fn parse_config(text: &str) -> CliResult<Config> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config(e.to_string()))?;
    let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("at `{path}`: {}", e.into_inner().message()))
    })?;
    cfg.signal_spec()?;
    cfg.noise_model()?;
    for m in &cfg.methods {
        if m.ext_order == 0 || m.model_order == 0 {
            return Err(CliError::Config(
                "methods: ext_order and model_order must be positive".into(),
            ));
        }
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> CliResult<Config> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

impl Config {
    pub fn signal_spec(&self) -> CliResult<SignalSpec> {
        let modes = self
            .signal
            .modes
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let pole = match (m.f, m.omega) {
                    (Some(f), None) => Pole::new(m.alpha, f),
                    (None, Some(w)) => Pole::from_angular(m.alpha, w),
                    _ => {
                        return Err(CliError::Config(format!(
                            "signal.modes[{i}]: give exactly one of `f` or `omega`"
                        )))
                    }
                };
                Ok(Mode { beta: m.beta, pole })
            })
            .collect::<CliResult<Vec<_>>>()?;
        SignalSpec::new(modes, self.signal.conjugate_pairs)
            .map_err(|e| CliError::Config(format!("signal: {e}")))
    }

    pub fn noise_model(&self) -> CliResult<NoiseModel> {
        let n = &self.noise;
        let model = match (n.model, n.rho) {
            (NoiseKind::Ar1Gaussian, Some(rho)) => NoiseModel::Ar1Gaussian { rho },
            (NoiseKind::Ar1Gaussian, None) => {
                return Err(CliError::Config(
                    "noise.rho: required for ar1_gaussian".into(),
                ))
            }
            (_, Some(_)) => {
                return Err(CliError::Config(
                    "noise.rho: only valid for ar1_gaussian".into(),
                ))
            }
            (NoiseKind::WhiteGaussian, None) => NoiseModel::WhiteGaussian,
            (NoiseKind::WhiteUniform, None) => NoiseModel::WhiteUniform,
            (NoiseKind::WhiteLaplacian, None) => NoiseModel::WhiteLaplacian,
        };
        model
            .validate()
            .map_err(|e| CliError::Config(format!("noise: {e}")))?;
        Ok(model)
    }

    pub fn snr_kind(&self) -> SnrKind {
        match self.noise.snr_kind {
            SnrKindConfig::Average => SnrKind::Average,
            SnrKindConfig::Peak => SnrKind::Peak,
        }
    }

    pub fn sampling(&self) -> Sampling {
        match self.sampling {
            SamplingConfig::Uniform { step, count } => Sampling::Uniform { step, count },
            SamplingConfig::Nonuniform {
                count,
                min_gap,
                max_gap,
                schedule_seed,
            } => Sampling::Nonuniform {
                seed: schedule_seed,
                count,
                min_gap,
                max_gap,
            },
        }
    }

    pub fn reconstruction(&self) -> Option<ReconstructionConfig> {
        self.reconstruction.as_ref().map(|r| ReconstructionConfig {
            grid_step: r.grid_step,
            order: match r.order {
                Some(n) => OrderRule::Fixed(n),
                None => OrderRule::MinVariance {
                    n_min: r.n_min,
                    n_max: r.n_max,
                },
            },
            grid_len: r.grid_len,
            allow_extrapolation: r.allow_extrapolation,
        })
    }

    pub fn method_configs(&self) -> Vec<MethodConfig> {
        let rc = self.reconstruction();
        self.methods
            .iter()
            .map(|m| {
                let method = match m.method {
                    MethodName::PtMle => Method::PtMle,
                    MethodName::Alm => Method::Alm,
                    MethodName::Mp => Method::Mp,
                };
                let mut cfg = MethodConfig::new(method, m.ext_order, m.model_order).with_weighting(
                    match m.weighting {
                        WeightingConfig::Identity => Weighting::Identity,
                        WeightingConfig::Propagated => Weighting::Propagated,
                        WeightingConfig::ExactCovariance => Weighting::ExactCovariance,
                    },
                );
                cfg.rows = m.rows;
                cfg.sv_correction = m.sv_correction;
                if !m.direct {
                    cfg.reconstruct = rc.clone();
                }
                cfg
            })
            .collect()
    }

    fn snr_db(&self) -> f64 {
        self.noise.snr_db.unwrap_or(f64::INFINITY)
    }
}

// ---------------------------------------------------------------------------
// CSV helpers

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_csv<R: AsRef<[String]>>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = R>,
) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(r.as_ref()).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn num(v: f64) -> String {
    format!("{v:.17e}")
}

/// Read a `t,<value>` file or an `i,t,y` grid file into `(t, value)` columns.
pub fn read_series(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let headers = rdr.headers().map_err(|e| io_err(path, e))?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let (ti, vi) = match cols.as_slice() {
        ["t", _] => (0, 1),
        ["i", "t", "y"] => (1, 2),
        _ => {
            return Err(CliError::Io(format!(
                "{}: unexpected header {cols:?}",
                path.display()
            )))
        }
    };
    let mut t = Vec::new();
    let mut v = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let parse = |i: usize| -> CliResult<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| {
                    CliError::Io(format!(
                        "{}: bad number on data row {}",
                        path.display(),
                        line + 1
                    ))
                })
        };
        t.push(parse(ti)?);
        v.push(parse(vi)?);
    }
    Ok((t, v))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

// ---------------------------------------------------------------------------
// commands

/// Noise level of a simulated record under both SNR conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSummary {
    pub sigma: f64,
    pub average_db: f64,
    pub peak_db: f64,
}

impl std::fmt::Display for SnrSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.sigma == 0.0 {
            write!(f, "noiseless")
        } else {
            write!(
                f,
                "sigma = {:.4e}, average SNR = {:.2} dB, peak SNR = {:.2} dB",
                self.sigma, self.average_db, self.peak_db
            )
        }
    }
}

pub fn cmd_simulate(
    cfg: &Config,
    seed: Option<u64>,
    out: &Path,
) -> CliResult<(Vec<PathBuf>, SnrSummary)> {
    ensure_dir(out)?;
    let spec = cfg.signal_spec()?;
    let times = cfg.sampling().times()?;
    let clean = generate_real(&spec, &times)?;
    let (noisy, sigma) = add_noise_with(
        &clean,
        cfg.noise_model()?,
        cfg.snr_db(),
        cfg.snr_kind(),
        seed.unwrap_or(cfg.seed),
    )?;
    let samples = out.join("samples.csv");
    let truth = out.join("samples_truth.csv");
    write_csv(
        &samples,
        &["t", "x"],
        times
            .iter()
            .zip(&noisy)
            .map(|(t, x)| vec![num(*t), num(*x)]),
    )?;
    write_csv(
        &truth,
        &["t", "g"],
        times
            .iter()
            .zip(&clean)
            .map(|(t, g)| vec![num(*t), num(*g)]),
    )?;
    let db = |kind| 10.0 * (signal_power(&clean, kind) / (sigma * sigma)).log10();
    let summary = SnrSummary {
        sigma,
        average_db: db(SnrKind::Average),
        peak_db: db(SnrKind::Peak),
    };
    Ok((vec![samples, truth], summary))
}

fn default_truth_path(samples: &Path) -> PathBuf {
    let stem = samples
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("samples");
    samples.with_file_name(format!("{stem}_truth.csv"))
}

/// Files written by `reconstruct`, plus a notice when the sidecar was missing.
#[derive(Debug)]
pub struct ReconstructOutput {
    pub files: Vec<PathBuf>,
    pub notice: Option<String>,
}

pub fn cmd_reconstruct(
    cfg: &Config,
    samples: &Path,
    truth: Option<&Path>,
    out: &Path,
) -> CliResult<ReconstructOutput> {
    ensure_dir(out)?;
    let rc = cfg
        .reconstruction()
        .ok_or_else(|| CliError::Config("missing [reconstruction] section".into()))?;
    let (t, x) = read_series(samples)?;
    let set = SampleSet::new(t.clone(), x.clone())?;
    let noise = cfg.noise_model()?;
    let (res, tr) = reconstruct_samples(&set, &rc, Some(noise))?;

    let grid = out.join("grid.csv");
    let curve = out.join("variance_curve.csv");
    let model = out.join("autocorr_model.csv");
    let grid_t = tr.grid_times();
    write_csv(
        &grid,
        &["i", "t", "y"],
        grid_t
            .iter()
            .zip(&res.grid_values)
            .enumerate()
            .map(|(i, (t, y))| vec![i.to_string(), num(*t), num(*y)]),
    )?;
    write_csv(
        &curve,
        &["N", "sigma2"],
        res.variance_curve
            .iter()
            .map(|(n, s)| vec![n.to_string(), num(*s)]),
    )?;
    write_csv(
        &model,
        &["k", "r_ee"],
        res.error_autocorr
            .iter()
            .enumerate()
            .map(|(k, r)| vec![k.to_string(), num(*r)]),
    )?;
    let mut files = vec![grid, curve, model];

    let truth_path = truth
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_truth_path(samples));
    let notice = if truth_path.exists() {
        let (tt, g) = read_series(&truth_path)?;
        if tt.len() != t.len()
            || tt
                .iter()
                .zip(&t)
                .any(|(a, b)| (a - b).abs() > 1e-9 * b.abs().max(1.0))
        {
            return Err(CliError::Io(format!(
                "{}: times do not match the samples",
                truth_path.display()
            )));
        }
        let w: Vec<f64> = x.iter().zip(&g).map(|(x, g)| x - g).collect();
        let e: Vec<f64> = (0..tr.grid_len)
            .map(|i| tr.h.row(i).iter().zip(&w).map(|(h, w)| h * w).sum())
            .collect();
        let max_lag = e.len() - 1;
        let r: Vec<f64> = (0..=max_lag)
            .map(|k| (0..e.len() - k).map(|i| e[i] * e[i + k]).sum::<f64>() / (e.len() - k) as f64)
            .collect();
        let errors = out.join("error_sequence.csv");
        let noise_seq = out.join("noise_sequence.csv");
        let auto = out.join("autocorr.csv");
        write_csv(
            &errors,
            &["i", "t", "e"],
            grid_t
                .iter()
                .zip(&e)
                .enumerate()
                .map(|(i, (t, e))| vec![i.to_string(), num(*t), num(*e)]),
        )?;
        write_csv(
            &noise_seq,
            &["t", "w"],
            t.iter().zip(&w).map(|(t, w)| vec![num(*t), num(*w)]),
        )?;
        write_csv(
            &auto,
            &["k", "r_ee"],
            r.iter()
                .enumerate()
                .map(|(k, r)| vec![k.to_string(), num(*r)]),
        )?;
        files.extend([errors, noise_seq, auto]);
        None
    } else {
        Some(format!(
            "notice: no ground truth at {}; autocorr.csv not written",
            truth_path.display()
        ))
    };
    Ok(ReconstructOutput { files, notice })
}

pub fn cmd_estimate(cfg: &Config, samples: &Path, out: &Path) -> CliResult<Vec<PathBuf>> {
    ensure_dir(out)?;
    if cfg.methods.is_empty() {
        return Err(CliError::Config("no [[methods]] configured".into()));
    }
    let (t, x) = read_series(samples)?;
    let set = SampleSet::new(t, x)?;
    let noise = cfg.noise_model()?;
    let mut rows = Vec::new();
    let mut diag = String::new();
    for mc in cfg.method_configs() {
        let res = run_method(&mc, &set, noise)?;
        let est = &res.estimate;
        for (p, b) in est.s_poles.iter().zip(&est.amplitudes) {
            rows.push(vec![
                est.method.label().to_string(),
                num(p.alpha),
                num(p.f),
                num(b.re),
                num(b.im),
            ]);
        }
        diag.push_str(&format!("[{}]\n", est.method.label()));
        if let Some(r) = &res.reconstruction {
            diag.push_str(&format!(
                "chosen_order = {}\ngrid_len = {}\n",
                r.chosen_order,
                r.grid_values.len()
            ));
        }
        diag.push_str(&est.diagnostics.to_key_values());
        diag.push('\n');
    }
    let csv_path = out.join("estimates.csv");
    let diag_path = out.join("estimates_diagnostics.txt");
    write_csv(
        &csv_path,
        &["method", "alpha", "f", "beta_re", "beta_im"],
        rows,
    )?;
    write_file(&diag_path, &diag)?;
    Ok(vec![csv_path, diag_path])
}

/// Scenarios described by the config, one per SNR level.
pub fn scenarios(cfg: &Config, seed: Option<u64>) -> CliResult<Vec<Scenario>> {
    let bench = cfg
        .bench
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [bench] section".into()))?;
    if bench.n_trials == 0 {
        return Err(CliError::Config(
            "bench.n_trials: must be at least 1".into(),
        ));
    }
    let levels = bench.snr_db.clone().unwrap_or_else(|| vec![cfg.snr_db()]);
    let signal = cfg.signal_spec()?;
    let noise = cfg.noise_model()?;
    Ok(levels
        .into_iter()
        .map(|snr_db| Scenario {
            signal: signal.clone(),
            sampling: cfg.sampling(),
            noise,
            snr_db,
            snr_kind: cfg.snr_kind(),
            methods: cfg.method_configs(),
            n_trials: bench.n_trials,
            base_seed: seed.unwrap_or(cfg.seed),
            freq_unit: match bench.freq_unit {
                FreqUnitConfig::Cycles => FreqUnit::Cycles,
                FreqUnitConfig::Radians => FreqUnit::Radians,
            },
        })
        .collect())
}

fn snr_tag(snr: f64) -> String {
    if snr.is_infinite() {
        "noiseless".into()
    } else {
        format!("{snr}dB")
    }
}

/// Run every scenario; returns written files and the concatenated text tables.
pub fn cmd_bench(cfg: &Config, seed: Option<u64>, out: &Path) -> CliResult<(Vec<PathBuf>, String)> {
    ensure_dir(out)?;
    let mut files = Vec::new();
    let mut text = String::new();
    for sc in scenarios(cfg, seed)? {
        let report = run_scenario(&sc)?;
        let tag = snr_tag(sc.snr_db);
        let csv_path = out.join(format!("report_{tag}.csv"));
        let txt_path = out.join(format!("report_{tag}.txt"));
        let bias_path = out.join(format!("bias_{tag}.csv"));
        let table = emit_report(&report, ReportFormat::TextTable);
        write_file(&csv_path, &emit_report(&report, ReportFormat::Csv))?;
        write_file(&txt_path, &table)?;
        write_file(&bias_path, &emit_bias_diagnostics(&report))?;
        text.push_str(&format!("SNR {tag}, {} trials\n{table}\n", sc.n_trials));
        files.extend([csv_path, txt_path, bias_path]);
    }
    Ok((files, text))
}

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Simulate(c) => {
            let cfg = load_config(&c.config)?;
            let (files, snr) = cmd_simulate(&cfg, c.seed, &c.out)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            println!("{snr}");
        }
        Command::Reconstruct {
            common,
            samples,
            truth,
        } => {
            let cfg = load_config(&common.config)?;
            let out = cmd_reconstruct(&cfg, samples, truth.as_deref(), &common.out)?;
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            if let Some(n) = out.notice {
                eprintln!("{n}");
            }
        }
        Command::Estimate { common, samples } => {
            let cfg = load_config(&common.config)?;
            for f in cmd_estimate(&cfg, samples, &common.out)? {
                println!("wrote {}", f.display());
            }
        }
        Command::Bench(c) => {
            let cfg = load_config(&c.config)?;
            let (files, text) = cmd_bench(&cfg, c.seed, &c.out)?;
            print!("{text}");
            for f in files {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}
