//! Reduced-scale self checks and single-realization diagnostics.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::beamforming;
use crate::channel::{cascade, UpaGeometry};
use crate::harness::{self, dbm_to_mw, ExperimentConfig, HarnessError, Method, Realization};
use crate::numerics::{self, ComplexMatrix};
use crate::pilot_estimation::{self, EstimatorSettings, PairIndex, PilotProjector};
use crate::rng::{substream, StreamPurpose};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

fn small_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        tx: UpaGeometry::square(4).expect("valid"),
        rx: UpaGeometry::square(4).expect("valid"),
        ris: UpaGeometry::square(8).expect("valid"),
        ptx_dbm: vec![20.0, 30.0, 40.0],
        trials: 40,
        seed,
        ..Default::default()
    }
}

fn svd_reconstruction(seed: u64) -> Result<CheckOutcome, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (r, c) = (rng.random_range(1..=24), rng.random_range(1..=24));
        let a = random_matrix(&mut rng, r, c);
        let d = svd_error(&a)?;
        worst = worst.max(d);
    }
    Ok(check("svd reconstruction", worst < 1e-10, format!("max relative error {worst:.2e}")))
}

fn svd_error(a: &ComplexMatrix) -> Result<f64, HarnessError> {
    let s = numerics::svd(a)?;
    Ok((&s.reconstruct() - a).frobenius_norm() / a.frobenius_norm())
}

fn waterfilling_kkt(seed: u64) -> Result<CheckOutcome, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=8);
        let mut s: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..5.0)).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let noise = rng.random_range(0.01..2.0);
        let power = rng.random_range(0.01..50.0);
        let alloc = numerics::waterfill(&s, noise, power, n)?;
        let mu = alloc.water_level;
        worst = worst.max((alloc.total() - power).abs() / power);
        for (p, sv) in alloc.levels.iter().zip(&s) {
            let floor = noise / (sv * sv);
            let violation = if *p > 0.0 { (p + floor - mu).abs() } else { (mu - floor).max(0.0) };
            worst = worst.max(violation / mu.max(1.0));
        }
    }
    Ok(check("waterfilling optimality", worst < 1e-9, format!("max KKT residual {worst:.2e}")))
}

fn noiseless_identity(seed: u64) -> Result<CheckOutcome, HarnessError> {
    let cfg = small_config(seed);
    let geoms = cfg.geometries();
    let mut worst: f64 = 0.0;
    let mut modulus: f64 = 0.0;
    for trial in 0..10 {
        let real = Realization::sample(&cfg, trial);
        let suite = pilot_estimation::build_pilot_suite(&real.paths_ts, &real.paths_sr, &geoms, cfg.n_streams, 10.0)?;
        let projector = PilotProjector::new(&real.h_ts, &real.h_sr, &suite)?;
        for (pair, v) in suite.phase_vectors() {
            modulus = modulus.max(v.max_modulus_deviation());
            let fast = projector.noiseless_block(&suite, pair)?;
            let h = cascade(&real.h_sr, v, &real.h_ts)?;
            let direct = &(&suite.combiner().adjoint() * &h) * suite.precoder();
            worst = worst.max((&fast - &direct).frobenius_norm() / direct.frobenius_norm());
        }
    }
    Ok(check(
        "noiseless pilot identity",
        worst < 1e-10 && modulus <= 1e-12,
        format!("max relative deviation {worst:.2e}, max RIS modulus error {modulus:.2e}"),
    ))
}

fn sweep_invariants(seed: u64) -> Result<Vec<CheckOutcome>, HarnessError> {
    let cfg = small_config(seed);
    let out = harness::run_experiment_detailed(&cfg)?;
    let mut dominance = true;
    for t in &out.trials {
        if t.get(Method::Proposed).capacity > t.get(Method::ExhaustiveOracle).capacity * (1.0 + 1e-12) {
            dominance = false;
        }
    }
    let mut monotone = true;
    for method in Method::ALL {
        let caps: Vec<f64> = out.records.iter().filter(|r| r.method == method).map(|r| r.mean_capacity).collect();
        monotone &= caps.windows(2).all(|w| w[1] > w[0]);
    }
    let again = harness::run_experiment(&cfg)?;
    let deterministic = harness::format_records(&again) == harness::format_records(&out.records);
    Ok(vec![
        check("constraint audit", out.audit.is_satisfied(), out.audit.to_string()),
        check(
            "oracle dominance",
            dominance,
            format!("{} trial points checked", out.trials.len()),
        ),
        check("monotone in transmit power", monotone, format!("{} sweep points", cfg.ptx_dbm.len())),
        check("deterministic records", deterministic, format!("seed {seed}, two runs")),
    ])
}

/// Runs every check at reduced array sizes.
pub fn run_validation(seed: u64) -> Result<Vec<CheckOutcome>, HarnessError> {
    let mut out = vec![
        svd_reconstruction(seed)?,
        waterfilling_kkt(seed)?,
        noiseless_identity(seed)?,
    ];
    out.extend(sweep_invariants(seed)?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDiagnostic {
    pub pair: PairIndex,
    /// Magnitude of the strongest equalized entry.
    pub peak: f64,
    pub capacity: f64,
}

/// Pair selection next to the exhaustive search for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub trial: usize,
    pub ptx_dbm: f64,
    pub pairs: Vec<PairDiagnostic>,
    pub selected: PairIndex,
    pub oracle: PairIndex,
    pub selected_capacity: f64,
    pub oracle_capacity: f64,
}

impl OracleReport {
    pub fn agrees(&self) -> bool {
        self.selected == self.oracle
    }

    /// Relative capacity loss of the selected pair.
    pub fn shortfall(&self) -> f64 {
        if self.oracle_capacity > 0.0 {
            1.0 - self.selected_capacity / self.oracle_capacity
        } else {
            0.0
        }
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trial {} at {} dBm", self.trial, self.ptx_dbm)?;
        writeln!(f, "{:>8} {:>14} {:>12}", "pair", "peak |Y|", "capacity")?;
        for p in &self.pairs {
            let mark = match (p.pair == self.selected, p.pair == self.oracle) {
                (true, true) => " <- selected, oracle",
                (true, false) => " <- selected",
                (false, true) => " <- oracle",
                _ => "",
            };
            writeln!(f, "{:>8} {:>14.6e} {:>12.6}{mark}", p.pair.to_string(), p.peak, p.capacity)?;
        }
        write!(
            f,
            "selected {} ({:.6} bit/s/Hz), oracle {} ({:.6} bit/s/Hz), shortfall {:.3}%",
            self.selected,
            self.selected_capacity,
            self.oracle,
            self.oracle_capacity,
            100.0 * self.shortfall()
        )
    }
}

/// Reproduces `trial` of a sweep and compares pair selection with the
/// exhaustive search at `ptx_dbm`.
pub fn oracle_report(config: &ExperimentConfig, trial: usize, ptx_dbm: f64) -> Result<OracleReport, HarnessError> {
    config.validate()?;
    let geoms = config.geometries();
    let power = dbm_to_mw(ptx_dbm);
    let noise_var = config.noise_mw();
    let real = Realization::sample(config, trial);
    let suite = pilot_estimation::build_pilot_suite(&real.paths_ts, &real.paths_sr, &geoms, config.n_streams, power)?;
    let projector = PilotProjector::new(&real.h_ts, &real.h_sr, &suite)?;
    let settings = EstimatorSettings {
        k: config.effective_k(),
        n_rank: config.n_rank,
        noise_var: if config.pilot_noise { noise_var } else { 0.0 },
    };
    let est = pilot_estimation::estimate(
        &projector,
        &suite,
        &real.paths_ts,
        &real.paths_sr,
        &geoms,
        settings,
        |pair| substream(config.seed, trial as u64, StreamPurpose::PilotNoise(suite.flat_index(pair).expect("pair"))),
    )?;
    let spectra = beamforming::pair_spectra(&real.h_ts, &real.h_sr, &suite)?;
    let mut pairs = Vec::with_capacity(spectra.len());
    for s in &spectra {
        let y = &est.equalized[&s.pair];
        let (r, c) = est.topk[&s.pair][0];
        pairs.push(PairDiagnostic {
            pair: s.pair,
            peak: y.get(r, c).norm(),
            capacity: beamforming::capacity_from_singular_values(&s.singular_values, config.n_streams, power, noise_var)?,
        });
    }
    let (oracle, oracle_capacity) = beamforming::best_of_spectra(&spectra, config.n_streams, power, noise_var)?;
    let selected_capacity = pairs
        .iter()
        .find(|p| p.pair == est.selected_pair)
        .map(|p| p.capacity)
        .expect("selected pair is a pilot pair");
    Ok(OracleReport {
        trial,
        ptx_dbm,
        pairs,
        selected: est.selected_pair,
        oracle,
        selected_capacity,
        oracle_capacity,
    })
}
