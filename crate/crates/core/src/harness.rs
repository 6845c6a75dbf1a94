//! Monte Carlo power sweeps.
//!
//! A sweep draws `trials` independent channel realizations. Each realization
//! is reused at every transmit power of the sweep (common random numbers),
//! and each is evaluated for three RIS designs:
//!
//! * `proposed`: pilot sounding, pair selection and estimate-based beamformers;
//! * `random_ris`: i.i.d. uniform RIS phases with perfect-CSI beamformers;
//! * `exhaustive_oracle`: best pilot RIS configuration chosen with true CSI.
//!
//! Trials run on a rayon pool and are reduced in trial order, so the output
//! does not depend on the number of worker threads.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::beamforming::{self, BeamformingError};
use crate::channel::{self, assemble_channel, sample_paths, Band, ChannelError, LinkConfig, PathSet, UpaGeometry};
use crate::numerics::{self, ComplexMatrix};
use crate::pilot_estimation::{self, ArrayGeometries, EstimationError, EstimatorSettings, PilotProjector};
use crate::rng::{substream, StreamPurpose};

pub const CSV_HEADER: &str = "ptx_dbm,method,mean_capacity,mean_spectral_efficiency,trials,seed";
pub const TRIAL_LOG_HEADER: &str = "trial,ptx_dbm,method,capacity,spectral_efficiency";

/// Constraint tolerances checked by [`ConstraintAudit::is_satisfied`].
pub const RIS_MODULUS_TOLERANCE: f64 = 1e-12;
pub const PRECODER_POWER_TOLERANCE: f64 = 1e-9;
pub const RATE_TOLERANCE: f64 = 1e-6;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}, line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("failed to start worker pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Beamforming(#[from] BeamformingError),
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
}

/// Invalid configuration value, naming the offending field.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}config field `{field}`: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub field: String,
    pub message: String,
    pub line: Option<usize>,
}

impl ConfigError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
            line: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub band: Band,
    pub tx: UpaGeometry,
    pub rx: UpaGeometry,
    pub ris: UpaGeometry,
    pub n_path_ts: usize,
    pub n_path_sr: usize,
    pub n_streams: usize,
    pub n_rank: usize,
    /// Entries sampled per equalized block; `None` means `n_streams`.
    pub k: Option<usize>,
    pub d_ts_m: f64,
    pub d_sr_m: f64,
    pub noise_dbm: f64,
    pub ptx_dbm: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub shadowing: bool,
    /// Add receiver noise to pilot observations.
    pub pilot_noise: bool,
    /// Worker threads; 0 uses rayon's default.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            band: Band::Mmwave28,
            tx: UpaGeometry::square(8).expect("valid"),
            rx: UpaGeometry::square(8).expect("valid"),
            ris: UpaGeometry::square(16).expect("valid"),
            n_path_ts: 4,
            n_path_sr: 4,
            n_streams: 4,
            n_rank: 1,
            k: None,
            d_ts_m: 35.0,
            d_sr_m: 15.0,
            noise_dbm: -91.0,
            ptx_dbm: vec![20.0, 25.0, 30.0, 35.0, 40.0],
            trials: 10_000,
            seed: 0,
            shadowing: true,
            pilot_noise: true,
            threads: 0,
        }
    }
}

fn parse_value<T: FromStr>(field: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| ConfigError::new(field, format!("cannot parse '{}': {e}", value.trim())))
}

fn parse_bool(field: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        other => Err(ConfigError::new(field, format!("expected true/false, got '{other}'"))),
    }
}

/// Comma-separated dBm list.
pub fn parse_ptx_list(value: &str) -> Result<Vec<f64>, ConfigError> {
    let list: Vec<f64> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value::<f64>("ptx_dbm", s))
        .collect::<Result<_, _>>()?;
    if list.is_empty() {
        return Err(ConfigError::new("ptx_dbm", "sweep must contain at least one power"));
    }
    Ok(list)
}

impl ExperimentConfig {
    /// Sets one field from its textual form. Keys match the config file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim();
        match key {
            "band" => {
                self.band = value
                    .parse()
                    .map_err(|e: ChannelError| ConfigError::new(key, e.to_string()))?
            }
            "n_tx" | "tx" => self.tx = parse_value(key, value)?,
            "n_rx" | "rx" => self.rx = parse_value(key, value)?,
            "ris" => self.ris = parse_value(key, value)?,
            "n_path_ts" => self.n_path_ts = parse_value(key, value)?,
            "n_path_sr" => self.n_path_sr = parse_value(key, value)?,
            "n_streams" => self.n_streams = parse_value(key, value)?,
            "n_rank" => self.n_rank = parse_value(key, value)?,
            "k" => self.k = Some(parse_value(key, value)?),
            "d_ts_m" => self.d_ts_m = parse_value(key, value)?,
            "d_sr_m" => self.d_sr_m = parse_value(key, value)?,
            "noise_dbm" => self.noise_dbm = parse_value(key, value)?,
            "ptx_dbm" | "ptx" => self.ptx_dbm = parse_ptx_list(value)?,
            "trials" => self.trials = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "shadowing" => self.shadowing = parse_bool(key, value)?,
            "pilot_noise" => self.pilot_noise = parse_bool(key, value)?,
            "threads" => self.threads = parse_value(key, value)?,
            _ => return Err(ConfigError::new(key, "unknown key")),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let with_line = |mut e: ConfigError| {
                e.line = Some(n + 1);
                e
            };
            let (key, value) = line.split_once('=').ok_or_else(|| {
                with_line(ConfigError::new(line, "expected `key = value`"))
            })?;
            cfg.set(key, value).map_err(with_line)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::parse(&text)?)
    }

    pub fn effective_k(&self) -> usize {
        self.k.unwrap_or(self.n_streams)
    }

    pub fn geometries(&self) -> ArrayGeometries {
        ArrayGeometries {
            tx: self.tx,
            rx: self.rx,
            ris: self.ris,
        }
    }

    pub fn ts_link(&self) -> LinkConfig {
        LinkConfig::for_band(self.band, self.n_path_ts, self.d_ts_m, self.ris, self.tx, self.shadowing)
    }

    pub fn sr_link(&self) -> LinkConfig {
        LinkConfig::for_band(self.band, self.n_path_sr, self.d_sr_m, self.rx, self.ris, self.shadowing)
    }

    pub fn noise_mw(&self) -> f64 {
        dbm_to_mw(self.noise_dbm)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.ptx_dbm.is_empty() {
            return Err(ConfigError::new("ptx_dbm", "sweep must contain at least one power"));
        }
        if let Some(p) = self.ptx_dbm.iter().find(|p| !p.is_finite()) {
            return Err(ConfigError::new("ptx_dbm", format!("power {p} dBm is not finite")));
        }
        if self.trials == 0 {
            return Err(ConfigError::new("trials", "need at least one trial"));
        }
        if self.n_path_ts == 0 {
            return Err(ConfigError::new("n_path_ts", "need at least one path"));
        }
        if self.n_path_sr == 0 {
            return Err(ConfigError::new("n_path_sr", "need at least one path"));
        }
        if self.n_streams == 0 {
            return Err(ConfigError::new("n_streams", "need at least one stream"));
        }
        let path_limit = self.n_path_ts.min(self.n_path_sr);
        if self.n_streams > path_limit {
            return Err(ConfigError::new(
                "n_streams",
                format!("{} streams exceed the {path_limit} available paths", self.n_streams),
            ));
        }
        let antenna_limit = self.tx.len().min(self.rx.len());
        if self.n_streams > antenna_limit {
            return Err(ConfigError::new(
                "n_streams",
                format!("{} streams exceed the {antenna_limit} antennas", self.n_streams),
            ));
        }
        let k = self.effective_k();
        if k == 0 || k > self.n_streams {
            return Err(ConfigError::new("k", format!("k = {k} must be in 1..={}", self.n_streams)));
        }
        if self.n_rank == 0 || self.n_rank > k {
            return Err(ConfigError::new("n_rank", format!("n_rank = {} must be in 1..={k}", self.n_rank)));
        }
        for (field, d) in [("d_ts_m", self.d_ts_m), ("d_sr_m", self.d_sr_m)] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(ConfigError::new(field, format!("distance must be positive, got {d}")));
            }
        }
        if !self.noise_dbm.is_finite() {
            return Err(ConfigError::new("noise_dbm", "noise power must be finite"));
        }
        Ok(())
    }
}

/// RIS design under evaluation. Declaration order is the CSV row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Proposed,
    RandomRis,
    ExhaustiveOracle,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Proposed, Method::RandomRis, Method::ExhaustiveOracle];

    pub fn key(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::RandomRis => "random_ris",
            Method::ExhaustiveOracle => "exhaustive_oracle",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.key() == s.trim())
            .ok_or_else(|| format!("unknown method '{s}'"))
    }
}

/// Trial-averaged metrics for one sweep point and method.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub ptx_dbm: f64,
    pub method: Method,
    pub mean_capacity: f64,
    pub mean_spectral_efficiency: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MethodMetrics {
    pub capacity: f64,
    pub spectral_efficiency: f64,
}

/// Metrics of one realization at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub trial: usize,
    pub ptx_index: usize,
    pub ptx_dbm: f64,
    pub selected_pair: pilot_estimation::PairIndex,
    pub oracle_pair: pilot_estimation::PairIndex,
    /// Indexed by [`Method`] declaration order.
    pub methods: [MethodMetrics; 3],
}

impl TrialMetrics {
    pub fn get(&self, method: Method) -> MethodMetrics {
        self.methods[method.index()]
    }
}

/// Worst-case constraint slack seen during a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConstraintAudit {
    pub ris_vectors: usize,
    pub max_ris_modulus_deviation: f64,
    pub precoders: usize,
    /// Largest `||F||_F^2 - P_TX` (negative when every precoder is inside).
    pub max_precoder_excess: f64,
    pub rate_checks: usize,
    /// Largest `spectral_efficiency - capacity`.
    pub max_rate_excess: f64,
}

impl ConstraintAudit {
    pub fn new() -> Self {
        Self {
            max_precoder_excess: f64::NEG_INFINITY,
            max_rate_excess: f64::NEG_INFINITY,
            ..Default::default()
        }
    }

    pub fn record_ris(&mut self, v: &[num_complex::Complex64]) {
        let dev = v.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
        self.ris_vectors += 1;
        self.max_ris_modulus_deviation = self.max_ris_modulus_deviation.max(dev);
    }

    pub fn record_precoder(&mut self, f: &ComplexMatrix, total_power: f64) {
        self.precoders += 1;
        self.max_precoder_excess = self.max_precoder_excess.max(f.frobenius_norm_sq() - total_power);
    }

    pub fn record_rate(&mut self, spectral_efficiency: f64, capacity: f64) {
        self.rate_checks += 1;
        self.max_rate_excess = self.max_rate_excess.max(spectral_efficiency - capacity);
    }

    pub fn merge(&mut self, other: &ConstraintAudit) {
        self.ris_vectors += other.ris_vectors;
        self.max_ris_modulus_deviation = self.max_ris_modulus_deviation.max(other.max_ris_modulus_deviation);
        self.precoders += other.precoders;
        self.max_precoder_excess = self.max_precoder_excess.max(other.max_precoder_excess);
        self.rate_checks += other.rate_checks;
        self.max_rate_excess = self.max_rate_excess.max(other.max_rate_excess);
    }

    pub fn is_satisfied(&self) -> bool {
        self.max_ris_modulus_deviation <= RIS_MODULUS_TOLERANCE
            && self.max_precoder_excess <= PRECODER_POWER_TOLERANCE
            && self.max_rate_excess <= RATE_TOLERANCE
    }
}

impl fmt::Display for ConstraintAudit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} RIS vectors (max | |v|-1 | = {:.2e}), {} precoders (max ||F||^2 - P = {:.2e} mW), \
             {} rate checks (max SE - C = {:.2e})",
            self.ris_vectors,
            self.max_ris_modulus_deviation,
            self.precoders,
            self.max_precoder_excess,
            self.rate_checks,
            self.max_rate_excess
        )
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<ExperimentRecord>,
    /// Ordered by trial, then sweep point.
    pub trials: Vec<TrialMetrics>,
    pub audit: ConstraintAudit,
}

/// Both hops of one channel realization.
#[derive(Debug, Clone)]
pub struct Realization {
    pub paths_ts: PathSet,
    pub paths_sr: PathSet,
    pub h_ts: ComplexMatrix,
    pub h_sr: ComplexMatrix,
}

impl Realization {
    /// The channels seen by `trial` of a sweep with this config.
    pub fn sample(config: &ExperimentConfig, trial: usize) -> Self {
        let geoms = config.geometries();
        let t = trial as u64;
        let paths_ts = sample_paths(&mut substream(config.seed, t, StreamPurpose::TxToRisPaths), &config.ts_link());
        let paths_sr = sample_paths(&mut substream(config.seed, t, StreamPurpose::RisToRxPaths), &config.sr_link());
        let h_ts = assemble_channel(&paths_ts, &geoms.ris, &geoms.tx);
        let h_sr = assemble_channel(&paths_sr, &geoms.rx, &geoms.ris);
        Self {
            paths_ts,
            paths_sr,
            h_ts,
            h_sr,
        }
    }
}

/// Simulates one realization across the whole sweep.
pub fn run_trial(
    config: &ExperimentConfig,
    trial: usize,
) -> Result<(Vec<TrialMetrics>, ConstraintAudit), HarnessError> {
    let geoms = config.geometries();
    let t = trial as u64;
    let noise_var = config.noise_mw();
    let Realization {
        paths_ts,
        paths_sr,
        h_ts,
        h_sr,
    } = Realization::sample(config, trial);

    let mut audit = ConstraintAudit::new();

    // Pilot RIS configurations do not depend on power.
    let reference_suite = pilot_estimation::build_pilot_suite(&paths_ts, &paths_sr, &geoms, config.n_streams, 1.0)?;
    for (_, v) in reference_suite.phase_vectors() {
        audit.record_ris(v);
    }
    let spectra = beamforming::pair_spectra(&h_ts, &h_sr, &reference_suite)?;

    let random = beamforming::random_ris(&mut substream(config.seed, t, StreamPurpose::RandomRis), geoms.ris.len())?;
    audit.record_ris(&random);
    let random_sv = numerics::singular_values(&channel::cascade(&h_sr, &random, &h_ts)?)?;

    let settings = EstimatorSettings {
        k: config.effective_k(),
        n_rank: config.n_rank,
        noise_var: if config.pilot_noise { noise_var } else { 0.0 },
    };

    let mut out = Vec::with_capacity(config.ptx_dbm.len());
    for (ptx_index, &ptx_dbm) in config.ptx_dbm.iter().enumerate() {
        let power = dbm_to_mw(ptx_dbm);
        let suite = pilot_estimation::build_pilot_suite(&paths_ts, &paths_sr, &geoms, config.n_streams, power)?;
        audit.record_precoder(suite.precoder(), power);
        let projector = PilotProjector::new(&h_ts, &h_sr, &suite)?;
        let flat = |p| suite.flat_index(p).expect("pair from suite");
        let est = pilot_estimation::estimate(&projector, &suite, &paths_ts, &paths_sr, &geoms, settings, |pair| {
            substream(config.seed, t, StreamPurpose::PilotNoise(flat(pair)))
        })?;
        let (design, _) = beamforming::design_beamformers(&est, &suite, config.n_streams, power, noise_var)?;
        audit.record_ris(&design.ris_phases);
        audit.record_precoder(&design.precoder, power);

        let chosen = &spectra[flat(est.selected_pair)];
        let proposed_se = numerics::log_det_rate(&design.combiner, &chosen.channel, &design.precoder, noise_var)?;
        let proposed_cap =
            beamforming::capacity_from_singular_values(&chosen.singular_values, config.n_streams, power, noise_var)?;
        audit.record_rate(proposed_se, proposed_cap);

        let (oracle_pair, oracle_cap) = beamforming::best_of_spectra(&spectra, config.n_streams, power, noise_var)?;
        let random_cap = beamforming::capacity_from_singular_values(&random_sv, config.n_streams, power, noise_var)?;

        // Baselines use perfect-CSI SVD beamformers, which attain capacity.
        out.push(TrialMetrics {
            trial,
            ptx_index,
            ptx_dbm,
            selected_pair: est.selected_pair,
            oracle_pair,
            methods: [
                MethodMetrics {
                    capacity: proposed_cap,
                    spectral_efficiency: proposed_se,
                },
                MethodMetrics {
                    capacity: random_cap,
                    spectral_efficiency: random_cap,
                },
                MethodMetrics {
                    capacity: oracle_cap,
                    spectral_efficiency: oracle_cap,
                },
            ],
        });
    }
    Ok((out, audit))
}

/// Runs the sweep and keeps per-trial values and the constraint audit.
pub fn run_experiment_detailed(config: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if config.threads > 0 {
        builder = builder.num_threads(config.threads);
    }
    let pool = builder.build().map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    let per_trial: Vec<(Vec<TrialMetrics>, ConstraintAudit)> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, t))
            .collect::<Result<_, _>>()
    })?;

    let n_points = config.ptx_dbm.len();
    let mut sums = vec![[MethodMetrics::default(); 3]; n_points];
    let mut audit = ConstraintAudit::new();
    let mut trials = Vec::with_capacity(config.trials * n_points);
    for (metrics, trial_audit) in per_trial {
        audit.merge(&trial_audit);
        for m in metrics {
            for (acc, v) in sums[m.ptx_index].iter_mut().zip(&m.methods) {
                acc.capacity += v.capacity;
                acc.spectral_efficiency += v.spectral_efficiency;
            }
            trials.push(m);
        }
    }

    let n = config.trials as f64;
    let mut records = Vec::with_capacity(n_points * 3);
    for (ptx_index, &ptx_dbm) in config.ptx_dbm.iter().enumerate() {
        for method in Method::ALL {
            let s = sums[ptx_index][method.index()];
            records.push(ExperimentRecord {
                ptx_dbm,
                method,
                mean_capacity: s.capacity / n,
                mean_spectral_efficiency: s.spectral_efficiency / n,
                trials: config.trials,
                seed: config.seed,
            });
        }
    }
    Ok(ExperimentOutcome { records, trials, audit })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, HarnessError> {
    Ok(run_experiment_detailed(config)?.records)
}

/// Formats with six significant digits, `%g` style.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let (mantissa, e) = sci.split_once('e').expect("exponent");
        let mantissa = trim_fraction(mantissa);
        return format!("{mantissa}e{e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_fraction(&format!("{x:.decimals$}")).to_string()
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn format_records(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_sig6(r.ptx_dbm),
            r.method,
            format_sig6(r.mean_capacity),
            format_sig6(r.mean_spectral_efficiency),
            r.trials,
            r.seed
        ));
    }
    out
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_records(records: &[ExperimentRecord], path: &Path) -> Result<(), HarnessError> {
    fs::write(path, format_records(records)).map_err(io_err(path))
}

pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let parse_err = |line: usize, message: String| HarnessError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(parse_err(1, format!("expected header `{CSV_HEADER}`"))),
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(parse_err(n + 1, format!("expected 6 fields, got {}", fields.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| parse_err(n + 1, e.to_string()));
        out.push(ExperimentRecord {
            ptx_dbm: num(fields[0])?,
            method: fields[1].parse().map_err(|e| parse_err(n + 1, e))?,
            mean_capacity: num(fields[2])?,
            mean_spectral_efficiency: num(fields[3])?,
            trials: fields[4].trim().parse().map_err(|e| parse_err(n + 1, format!("{e}")))?,
            seed: fields[5].trim().parse().map_err(|e| parse_err(n + 1, format!("{e}")))?,
        });
    }
    Ok(out)
}

/// Per-trial values at full precision.
pub fn write_trial_log(trials: &[TrialMetrics], path: &Path) -> Result<(), HarnessError> {
    let mut out = String::from(TRIAL_LOG_HEADER);
    out.push('\n');
    for t in trials {
        for method in Method::ALL {
            let m = t.get(method);
            out.push_str(&format!(
                "{},{},{},{:?},{:?}\n",
                t.trial, t.ptx_dbm, method, m.capacity, m.spectral_efficiency
            ));
        }
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Matplotlib script that plots a sweep CSV.
pub fn plot_script(csv_path: &Path) -> String {
    format!(
        r#"# Plots mean capacity (solid) and spectral efficiency (dashed) per method.
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

rows = defaultdict(list)
with open({path:?}) as fh:
    for row in csv.DictReader(fh):
        rows[row["method"]].append(
            (float(row["ptx_dbm"]), float(row["mean_capacity"]), float(row["mean_spectral_efficiency"]))
        )

for method, points in rows.items():
    points.sort()
    ptx = [p[0] for p in points]
    line, = plt.plot(ptx, [p[1] for p in points], marker="o", label=f"{{method}} capacity")
    if method == "proposed":
        plt.plot(ptx, [p[2] for p in points], linestyle="--", color=line.get_color(),
                 label=f"{{method}} spectral efficiency")

plt.xlabel("P_TX [dBm]")
plt.ylabel("bits/s/Hz")
plt.grid(True)
plt.legend()
plt.savefig({png:?}, dpi=150)
"#,
        path = csv_path.display().to_string(),
        png = csv_path.with_extension("png").display().to_string(),
    )
}

pub fn write_plot_script(csv_path: &Path, script_path: &Path) -> Result<(), HarnessError> {
    fs::write(script_path, plot_script(csv_path)).map_err(io_err(script_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            tx: UpaGeometry::square(2).unwrap(),
            rx: UpaGeometry::square(2).unwrap(),
            ris: UpaGeometry::square(4).unwrap(),
            n_path_ts: 2,
            n_path_sr: 2,
            n_streams: 2,
            ptx_dbm: vec![20.0, 30.0],
            trials: 3,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn power_units_round_trip() {
        for dbm in [-91.0, -30.0, 0.0, 17.3, 40.0] {
            assert!((mw_to_dbm(dbm_to_mw(dbm)) - dbm).abs() < 1e-9);
        }
        assert!((dbm_to_mw(30.0) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(12.345678), "12.3457");
        assert_eq!(format_sig6(30.0), "30");
        assert_eq!(format_sig6(-300.0), "-300");
        assert_eq!(format_sig6(0.000123456789), "0.000123457");
        assert_eq!(format_sig6(1.5e-7), "1.5e-7");
        assert_eq!(format_sig6(999999.7), "1e6");
        assert_eq!(format_sig6(123456.4), "123456");
    }

    #[test]
    fn config_defaults_follow_reference_setup() {
        let c = ExperimentConfig::default();
        assert_eq!(c.tx.len(), 64);
        assert_eq!(c.ris.len(), 256);
        assert_eq!(c.effective_k(), 4);
        assert_eq!(c.trials, 10_000);
        assert_eq!(c.noise_dbm, -91.0);
        c.validate().unwrap();
    }

    #[test]
    fn config_parsing() {
        let text = "# sweep\nband = thz142\nn_tx = 4x4\nris=8x8 # inline comment\nptx_dbm = 10, 20\n\
                    trials = 12\nseed = 99\nshadowing = off\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.band, Band::Thz142);
        assert_eq!(c.tx.len(), 16);
        assert_eq!(c.ris.len(), 64);
        assert_eq!(c.ptx_dbm, vec![10.0, 20.0]);
        assert_eq!(c.trials, 12);
        assert_eq!(c.seed, 99);
        assert!(!c.shadowing);

        let err = ExperimentConfig::parse("trials = 1\nbogus = 3\n").unwrap_err();
        assert_eq!(err.field, "bogus");
        assert_eq!(err.line, Some(2));
        let err = ExperimentConfig::parse("band = sub6").unwrap_err();
        assert!(err.to_string().contains("mmwave28"));
        assert!(ExperimentConfig::parse("just text").is_err());
    }

    #[test]
    fn config_validation_names_field() {
        let mut c = ExperimentConfig { trials: 0, ..Default::default() };
        assert_eq!(c.validate().unwrap_err().field, "trials");
        c.trials = 1;
        c.n_rank = 2;
        c.k = Some(1);
        assert_eq!(c.validate().unwrap_err().field, "n_rank");
        c.n_rank = 1;
        c.k = Some(5);
        assert_eq!(c.validate().unwrap_err().field, "k");
        c.k = None;
        c.ptx_dbm.clear();
        assert_eq!(c.validate().unwrap_err().field, "ptx_dbm");
    }

    #[test]
    fn experiment_is_deterministic() {
        let a = run_experiment(&tiny_config()).unwrap();
        let b = run_experiment(&tiny_config()).unwrap();
        assert_eq!(format_records(&a), format_records(&b));
        assert_eq!(a.len(), 6);
        assert_eq!(a[0].method, Method::Proposed);
        assert_eq!(a[1].method, Method::RandomRis);
        assert_eq!(a[3].ptx_dbm, 30.0);
    }

    #[test]
    fn means_are_trial_averages() {
        let out = run_experiment_detailed(&tiny_config()).unwrap();
        assert!(out.audit.is_satisfied(), "{}", out.audit);
        for r in &out.records {
            let vals: Vec<f64> = out
                .trials
                .iter()
                .filter(|t| t.ptx_dbm == r.ptx_dbm)
                .map(|t| t.get(r.method).capacity)
                .collect();
            assert_eq!(vals.len(), 3);
            let mean = vals.iter().sum::<f64>() / 3.0;
            assert!((mean - r.mean_capacity).abs() <= 1e-9 * mean.max(1.0));
        }
    }

    #[test]
    fn negligible_power_gives_zero_rates() {
        let cfg = ExperimentConfig { ptx_dbm: vec![-300.0], ..tiny_config() };
        for r in run_experiment(&cfg).unwrap() {
            assert!(r.mean_capacity.abs() < 1e-12, "{r:?}");
            assert!(r.mean_spectral_efficiency.abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn records_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_records(&[], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), format!("{CSV_HEADER}\n"));

        let records = run_experiment(&tiny_config()).unwrap();
        write_records(&records, &path).unwrap();
        let back = read_records(&path).unwrap();
        assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(a.method, b.method);
            assert_eq!((a.trials, a.seed), (b.trials, b.seed));
            for (x, y) in [(a.mean_capacity, b.mean_capacity), (a.ptx_dbm, b.ptx_dbm)] {
                assert!((x - y).abs() <= 5e-6 * x.abs().max(1e-300), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn write_reports_path_on_failure() {
        let path = Path::new("/nonexistent-dir/for/sure/r.csv");
        let err = write_records(&[], path).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/for/sure/r.csv"));
    }
}
