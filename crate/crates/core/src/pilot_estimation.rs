//! Sparsity-matched pilot design and the path-pair gain estimator.
//!
//! For every pair `(i, j)` of a TX-to-RIS path `i` and an RIS-to-RX path `j`,
//! the RIS is configured so that the two paths add coherently across its
//! aperture:
//!
//! ```text
//! v[m] = M * conj(a_r,TS,i[m]) * a_t,SR,j[m]
//! ```
//!
//! With the combiner and precoder steered along the strongest paths, the
//! equalized pilot block `Y S^-1` then carries the gain product
//! `alpha_TS,i * alpha_SR,j` as its dominant entry. Those peaks drive both the
//! pair selection and a low-rank estimate of the adjusted cascaded channel.
//!
//! Index convention used everywhere: row `r` of an equalized block refers to
//! RIS-to-RX path `r` (combiner column), column `c` to TX-to-RIS path `c`
//! (precoder column).

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::channel::{self, ChannelError, PathSet, RisPhases, UpaGeometry};
use crate::numerics::{ComplexMatrix, ComplexVector, NumericsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("steering vectors have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("{n_streams} streams requested but only {available} paths available on {link}")]
    TooManyStreams {
        n_streams: usize,
        available: usize,
        link: &'static str,
    },
    #[error("at least one stream is required")]
    NoStreams,
    #[error("pilot power must be positive, got {0}")]
    BadPower(f64),
    #[error("k = {k} must be in 1..={max}")]
    BadK { k: usize, max: usize },
    #[error("rank {n_rank} must be in 1..={k}")]
    BadRank { n_rank: usize, k: usize },
    #[error("index ({row}, {col}) refers to a path outside the {n_sr} RIS-RX / {n_ts} TX-RIS paths")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_sr: usize,
        n_ts: usize,
    },
    #[error("pair ({0}) has no pilot vector")]
    UnknownPair(PairIndex),
    #[error("no pairs to select from")]
    EmptySelection,
    #[error("pilot symbol matrix is singular")]
    SingularSymbols,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Path pair `(i, j)`: `ts` indexes the TX-to-RIS link, `sr` the RIS-to-RX
/// link. Ordering is lexicographic on `(ts, sr)`, which is also the tie-break
/// order for selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairIndex {
    pub ts: usize,
    pub sr: usize,
}

impl PairIndex {
    pub fn new(ts: usize, sr: usize) -> Self {
        Self { ts, sr }
    }
}

impl fmt::Display for PairIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}", self.ts, self.sr)
    }
}

/// Array sizes at the TX, RX and RIS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometries {
    pub tx: UpaGeometry,
    pub rx: UpaGeometry,
    pub ris: UpaGeometry,
}

/// RIS pilot vector `M * diag(a_r)^H a_t` for one path pair.
pub fn ris_pilot_vector(
    a_r_ts: &ComplexVector,
    a_t_sr: &ComplexVector,
) -> Result<RisPhases, EstimationError> {
    if a_r_ts.len() != a_t_sr.len() {
        return Err(EstimationError::LengthMismatch(a_r_ts.len(), a_t_sr.len()));
    }
    let m = a_r_ts.len() as f64;
    let v = a_r_ts
        .iter()
        .zip(a_t_sr.iter())
        .map(|(r, t)| r.conj() * t * m)
        .collect();
    Ok(RisPhases::new(v)?)
}

/// Unitary DFT matrix, used as the pilot symbol block.
pub fn dft_matrix(n: usize) -> ComplexMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    ComplexMatrix::from_fn(n, n, |r, c| {
        let angle = -2.0 * std::f64::consts::PI * ((r * c) % n) as f64 / n as f64;
        Complex64::from_polar(scale, angle)
    })
}

/// Pilot beamformers, symbols and RIS configurations for one sounding round.
#[derive(Debug, Clone)]
pub struct PilotSuite {
    combiner: ComplexMatrix,
    precoder: ComplexMatrix,
    symbols: ComplexMatrix,
    symbols_inv: ComplexMatrix,
    power_scale: f64,
    n_path_ts: usize,
    n_path_sr: usize,
    phase_vectors: Vec<RisPhases>,
}

impl PilotSuite {
    /// `W_p`, `N_r x N_s`, unit-norm columns.
    pub fn combiner(&self) -> &ComplexMatrix {
        &self.combiner
    }

    /// `F_p`, `N_t x N_s`, column norm `sqrt(P / N_s)`.
    pub fn precoder(&self) -> &ComplexMatrix {
        &self.precoder
    }

    /// `S_p`, unitary DFT.
    pub fn symbols(&self) -> &ComplexMatrix {
        &self.symbols
    }

    /// Per-column precoder amplitude `sqrt(P / N_s)`.
    pub fn power_scale(&self) -> f64 {
        self.power_scale
    }

    pub fn n_streams(&self) -> usize {
        self.combiner.cols()
    }

    pub fn n_path_ts(&self) -> usize {
        self.n_path_ts
    }

    pub fn n_path_sr(&self) -> usize {
        self.n_path_sr
    }

    pub fn ris_len(&self) -> usize {
        self.phase_vectors[0].len()
    }

    /// All pairs in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = PairIndex> + '_ {
        (0..self.n_path_ts).flat_map(move |ts| (0..self.n_path_sr).map(move |sr| PairIndex { ts, sr }))
    }

    pub fn pair_count(&self) -> usize {
        self.n_path_ts * self.n_path_sr
    }

    /// Flat position of a pair in [`PilotSuite::pairs`].
    pub fn flat_index(&self, pair: PairIndex) -> Result<usize, EstimationError> {
        if pair.ts >= self.n_path_ts || pair.sr >= self.n_path_sr {
            return Err(EstimationError::UnknownPair(pair));
        }
        Ok(pair.ts * self.n_path_sr + pair.sr)
    }

    pub fn phase_vector(&self, pair: PairIndex) -> Result<&RisPhases, EstimationError> {
        Ok(&self.phase_vectors[self.flat_index(pair)?])
    }

    pub fn phase_vectors(&self) -> impl Iterator<Item = (PairIndex, &RisPhases)> + '_ {
        self.pairs().zip(self.phase_vectors.iter())
    }

    /// Pilot slots used: one `N_s`-symbol block per pair.
    pub fn schedule_len(&self) -> usize {
        self.pair_count() * self.n_streams()
    }
}

/// Builds the pilot suite for known path angles.
///
/// Combiner column `l` steers at the `l`-th RIS-to-RX arrival, precoder
/// column `l` at the `l`-th TX-to-RIS departure, scaled so that
/// `||F_p||_F^2 = total_power`.
pub fn build_pilot_suite(
    paths_ts: &PathSet,
    paths_sr: &PathSet,
    geoms: &ArrayGeometries,
    n_streams: usize,
    total_power: f64,
) -> Result<PilotSuite, EstimationError> {
    if n_streams == 0 {
        return Err(EstimationError::NoStreams);
    }
    if n_streams > paths_sr.len() {
        return Err(EstimationError::TooManyStreams {
            n_streams,
            available: paths_sr.len(),
            link: "RIS-RX link",
        });
    }
    if n_streams > paths_ts.len() {
        return Err(EstimationError::TooManyStreams {
            n_streams,
            available: paths_ts.len(),
            link: "TX-RIS link",
        });
    }
    if !(total_power > 0.0 && total_power.is_finite()) {
        return Err(EstimationError::BadPower(total_power));
    }

    let power_scale = (total_power / n_streams as f64).sqrt();
    let w_cols: Vec<ComplexVector> = paths_sr[..n_streams]
        .iter()
        .map(|p| channel::steering(&geoms.rx, p.arrival))
        .collect();
    let f_cols: Vec<ComplexVector> = paths_ts[..n_streams]
        .iter()
        .map(|p| channel::steering(&geoms.tx, p.departure) * Complex64::new(power_scale, 0.0))
        .collect();

    let ris_arrivals: Vec<ComplexVector> = paths_ts
        .iter()
        .map(|p| channel::steering(&geoms.ris, p.arrival))
        .collect();
    let ris_departures: Vec<ComplexVector> = paths_sr
        .iter()
        .map(|p| channel::steering(&geoms.ris, p.departure))
        .collect();
    let mut phase_vectors = Vec::with_capacity(paths_ts.len() * paths_sr.len());
    for a_r in &ris_arrivals {
        for a_t in &ris_departures {
            phase_vectors.push(ris_pilot_vector(a_r, a_t)?);
        }
    }

    let symbols = dft_matrix(n_streams);
    let symbols_inv = ComplexMatrix::from(
        symbols
            .as_inner()
            .clone()
            .try_inverse()
            .ok_or(EstimationError::SingularSymbols)?,
    );

    Ok(PilotSuite {
        combiner: ComplexMatrix::from_columns(&w_cols),
        precoder: ComplexMatrix::from_columns(&f_cols),
        symbols,
        symbols_inv,
        power_scale,
        n_path_ts: paths_ts.len(),
        n_path_sr: paths_sr.len(),
        phase_vectors,
    })
}

/// Pre-multiplied channel halves `W_p^H H_SR` and `H_TS F_p`.
///
/// Every pilot block is `left diag(v) right S_p + W_p^H N`, so the large
/// `M`-dimensional products are formed once per channel realization.
#[derive(Debug, Clone)]
pub struct PilotProjector {
    left: ComplexMatrix,
    right: ComplexMatrix,
}

impl PilotProjector {
    pub fn new(
        h_ts: &ComplexMatrix,
        h_sr: &ComplexMatrix,
        suite: &PilotSuite,
    ) -> Result<Self, EstimationError> {
        let m = suite.ris_len();
        if h_sr.cols() != m || h_ts.rows() != m {
            return Err(EstimationError::DimensionMismatch(format!(
                "H_SR {}x{} and H_TS {}x{} do not match {m} RIS elements",
                h_sr.rows(),
                h_sr.cols(),
                h_ts.rows(),
                h_ts.cols()
            )));
        }
        if h_sr.rows() != suite.combiner.rows() || h_ts.cols() != suite.precoder.rows() {
            return Err(EstimationError::DimensionMismatch(format!(
                "channel is {}x{} end to end but pilot beamformers are {} and {} long",
                h_sr.rows(),
                h_ts.cols(),
                suite.combiner.rows(),
                suite.precoder.rows()
            )));
        }
        Ok(Self {
            left: &suite.combiner.adjoint() * h_sr,
            right: h_ts * &suite.precoder,
        })
    }

    /// `W_p^H H_tot,(i,j) F_p`, no symbols, no noise.
    pub fn noiseless_block(
        &self,
        suite: &PilotSuite,
        pair: PairIndex,
    ) -> Result<ComplexMatrix, EstimationError> {
        let v = suite.phase_vector(pair)?;
        Ok(&self.left.scale_columns(v) * &self.right)
    }

    /// Received pilot block `Y^{i,j}` with fresh noise of variance
    /// `noise_var` per receive antenna.
    pub fn observe<R: Rng + ?Sized>(
        &self,
        suite: &PilotSuite,
        pair: PairIndex,
        noise_var: f64,
        rng: &mut R,
    ) -> Result<ComplexMatrix, EstimationError> {
        let signal = &self.noiseless_block(suite, pair)? * &suite.symbols;
        if noise_var <= 0.0 {
            return Ok(signal);
        }
        let sd = (noise_var / 2.0).sqrt();
        let n_r = suite.combiner.rows();
        let n_s = suite.n_streams();
        let noise = ComplexMatrix::from_fn(n_r, n_s, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(sd * re, sd * im)
        });
        Ok(&signal + &(&suite.combiner.adjoint() * &noise))
    }
}

/// `Y^{i,j} = W_p^H H_SR diag(v^{i,j}) H_TS F_p S_p + W_p^H N^{i,j}`.
pub fn simulate_pilot_rx<R: Rng + ?Sized>(
    h_ts: &ComplexMatrix,
    h_sr: &ComplexMatrix,
    suite: &PilotSuite,
    pair: PairIndex,
    noise_var: f64,
    rng: &mut R,
) -> Result<ComplexMatrix, EstimationError> {
    PilotProjector::new(h_ts, h_sr, suite)?.observe(suite, pair, noise_var, rng)
}

/// `Y S_p^-1 / sqrt(P / N_s)`.
pub fn equalize(y: &ComplexMatrix, suite: &PilotSuite) -> Result<ComplexMatrix, EstimationError> {
    let n = suite.n_streams();
    if y.shape() != (n, n) {
        return Err(EstimationError::DimensionMismatch(format!(
            "pilot block is {}x{}, expected {n}x{n}",
            y.rows(),
            y.cols()
        )));
    }
    Ok((y * &suite.symbols_inv).scale(1.0 / suite.power_scale))
}

/// Positions of the `k` largest-magnitude entries, largest first; ties go to
/// the smaller row, then the smaller column.
pub fn top_k_entries(y_eq: &ComplexMatrix, k: usize) -> Result<Vec<(usize, usize)>, EstimationError> {
    let max_k = y_eq.rows().min(y_eq.cols());
    if k == 0 || k > max_k {
        return Err(EstimationError::BadK { k, max: max_k });
    }
    let mut entries: Vec<(f64, usize, usize)> = (0..y_eq.rows())
        .flat_map(|r| (0..y_eq.cols()).map(move |c| (r, c)))
        .map(|(r, c)| (y_eq.get(r, c).norm(), r, c))
        .collect();
    entries.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    Ok(entries.into_iter().take(k).map(|(_, r, c)| (r, c)).collect())
}

/// Rank-`n_rank` channel estimate from the sampled entries of an equalized
/// block: `sum_z Y[r_z, c_z] a_r(SR path r_z) a_t(TS path c_z)^H`.
pub fn rank_approx(
    y_eq: &ComplexMatrix,
    indices: &[(usize, usize)],
    paths_ts: &PathSet,
    paths_sr: &PathSet,
    geoms: &ArrayGeometries,
    n_rank: usize,
) -> Result<ComplexMatrix, EstimationError> {
    if n_rank == 0 || n_rank > indices.len() {
        return Err(EstimationError::BadRank {
            n_rank,
            k: indices.len(),
        });
    }
    let mut h = ComplexMatrix::zeros(geoms.rx.len(), geoms.tx.len());
    for &(row, col) in &indices[..n_rank] {
        if row >= paths_sr.len() || col >= paths_ts.len() || row >= y_eq.rows() || col >= y_eq.cols() {
            return Err(EstimationError::IndexOutOfRange {
                row,
                col,
                n_sr: paths_sr.len(),
                n_ts: paths_ts.len(),
            });
        }
        let a_r = channel::steering(&geoms.rx, paths_sr[row].arrival) * y_eq.get(row, col);
        let a_t = channel::steering(&geoms.tx, paths_ts[col].departure);
        h = &h + &ComplexMatrix::outer(&a_r, &a_t);
    }
    Ok(h)
}

/// Pair whose equalized block has the largest peak magnitude; ties go to the
/// lexicographically smallest pair.
pub fn select_pair(results: &BTreeMap<PairIndex, ComplexMatrix>) -> Result<PairIndex, EstimationError> {
    let mut best: Option<(PairIndex, f64)> = None;
    for (&pair, y) in results {
        let (r, c) = top_k_entries(y, 1)?[0];
        let peak = y.get(r, c).norm();
        if best.is_none_or(|(_, b)| peak > b) {
            best = Some((pair, peak));
        }
    }
    best.map(|(p, _)| p).ok_or(EstimationError::EmptySelection)
}

/// Estimator knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSettings {
    /// Entries sampled per equalized block, `1..=N_s`.
    pub k: usize,
    /// Rank of the channel estimate, `1..=k`.
    pub n_rank: usize,
    /// Receiver noise variance during sounding (mW); 0 gives noiseless pilots.
    pub noise_var: f64,
}

/// Everything the estimator learns from one sounding round.
#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub equalized: BTreeMap<PairIndex, ComplexMatrix>,
    pub topk: BTreeMap<PairIndex, Vec<(usize, usize)>>,
    pub gain_estimates: BTreeMap<PairIndex, Complex64>,
    pub selected_pair: PairIndex,
    /// Low-rank estimate of `H_SR diag(v^{i*,j*}) H_TS`.
    pub h_est: ComplexMatrix,
}

/// Runs the full sounding round: observe and equalize every pair, pick the
/// top-k entries, select the strongest pair and build its low-rank estimate.
///
/// `noise_rng` hands out one independent generator per pair.
pub fn estimate<R, F>(
    projector: &PilotProjector,
    suite: &PilotSuite,
    paths_ts: &PathSet,
    paths_sr: &PathSet,
    geoms: &ArrayGeometries,
    settings: EstimatorSettings,
    mut noise_rng: F,
) -> Result<EstimationResult, EstimationError>
where
    R: Rng,
    F: FnMut(PairIndex) -> R,
{
    let n_s = suite.n_streams();
    if settings.k == 0 || settings.k > n_s {
        return Err(EstimationError::BadK {
            k: settings.k,
            max: n_s,
        });
    }
    if settings.n_rank == 0 || settings.n_rank > settings.k {
        return Err(EstimationError::BadRank {
            n_rank: settings.n_rank,
            k: settings.k,
        });
    }

    let mut equalized = BTreeMap::new();
    let mut topk = BTreeMap::new();
    let mut gain_estimates = BTreeMap::new();
    for pair in suite.pairs() {
        let mut rng = noise_rng(pair);
        let y = projector.observe(suite, pair, settings.noise_var, &mut rng)?;
        let y_eq = equalize(&y, suite)?;
        let idx = top_k_entries(&y_eq, settings.k)?;
        gain_estimates.insert(pair, y_eq.get(idx[0].0, idx[0].1));
        topk.insert(pair, idx);
        equalized.insert(pair, y_eq);
    }
    let selected_pair = select_pair(&equalized)?;
    let h_est = rank_approx(
        &equalized[&selected_pair],
        &topk[&selected_pair],
        paths_ts,
        paths_sr,
        geoms,
        settings.n_rank,
    )?;
    Ok(EstimationResult {
        equalized,
        topk,
        gain_estimates,
        selected_pair,
        h_est,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{assemble_channel, cascade, sample_paths, upa_response, Band, LinkConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn geoms(n: usize, m: usize) -> ArrayGeometries {
        ArrayGeometries {
            tx: UpaGeometry::square(n).unwrap(),
            rx: UpaGeometry::square(n).unwrap(),
            ris: UpaGeometry::square(m).unwrap(),
        }
    }

    struct Realization {
        ts: PathSet,
        sr: PathSet,
        h_ts: ComplexMatrix,
        h_sr: ComplexMatrix,
    }

    fn realize(seed: u64, g: &ArrayGeometries, n_path: usize) -> Realization {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ts = sample_paths(&mut rng, &LinkConfig::for_band(Band::Mmwave28, n_path, 35.0, g.ris, g.tx, true));
        let sr = sample_paths(&mut rng, &LinkConfig::for_band(Band::Mmwave28, n_path, 15.0, g.rx, g.ris, true));
        let h_ts = assemble_channel(&ts, &g.ris, &g.tx);
        let h_sr = assemble_channel(&sr, &g.rx, &g.ris);
        Realization { ts, sr, h_ts, h_sr }
    }

    #[test]
    fn pilot_vector_same_angles_is_all_ones() {
        let g = UpaGeometry::square(4).unwrap();
        let a = upa_response(&g, 0.4, 1.2);
        let v = ris_pilot_vector(&a, &a).unwrap();
        for z in v.iter() {
            assert!((z - c(1.0, 0.0)).norm() < 1e-12);
        }
        let one = ComplexVector::from_element(1, c(1.0, 0.0));
        assert_eq!(ris_pilot_vector(&one, &one).unwrap()[0], c(1.0, 0.0));
        let short = ComplexVector::from_element(2, c(1.0, 0.0));
        assert!(matches!(
            ris_pilot_vector(&one, &short),
            Err(EstimationError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn pilot_vector_entrywise() {
        let g = UpaGeometry::square(8).unwrap();
        let a_r = upa_response(&g, 2.1, 0.3);
        let a_t = upa_response(&g, 5.0, 2.8);
        let v = ris_pilot_vector(&a_r, &a_t).unwrap();
        for m in 0..64 {
            let want = a_r[m].conj() * a_t[m] * 64.0;
            assert!((v[m] - want).norm() < 1e-14);
            assert!((v[m].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn suite_shapes_and_invariants() {
        let g = geoms(8, 16);
        let r = realize(1, &g, 4);
        let suite = build_pilot_suite(&r.ts, &r.sr, &g, 4, 10.0).unwrap();
        assert_eq!(suite.combiner().shape(), (64, 4));
        assert_eq!(suite.precoder().shape(), (64, 4));
        assert_eq!(suite.symbols().shape(), (4, 4));
        assert_eq!(suite.phase_vectors().count(), 16);
        assert_eq!(suite.ris_len(), 256);
        assert_eq!(suite.schedule_len(), 64);
        assert!((suite.precoder().frobenius_norm_sq() - 10.0).abs() < 1e-12);
        for l in 0..4 {
            assert!((suite.combiner().column(l).norm() - 1.0).abs() < 1e-12);
        }
        let ss = suite.symbols() * &suite.symbols().adjoint();
        assert!((&ss - &ComplexMatrix::identity(4)).frobenius_norm() < 1e-12);
        for (_, v) in suite.phase_vectors() {
            assert!(v.max_modulus_deviation() <= 1e-12);
        }

        let single = build_pilot_suite(&r.ts, &r.sr, &g, 1, 3.0).unwrap();
        assert_eq!(single.combiner().cols(), 1);
        assert!((single.precoder().frobenius_norm_sq() - 3.0).abs() < 1e-12);

        assert!(matches!(
            build_pilot_suite(&r.ts, &r.sr, &g, 5, 1.0),
            Err(EstimationError::TooManyStreams { .. })
        ));
    }

    #[test]
    fn noiseless_observation_matches_explicit_cascade() {
        let g = geoms(4, 8);
        let r = realize(2, &g, 3);
        let suite = build_pilot_suite(&r.ts, &r.sr, &g, 3, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for pair in suite.pairs() {
            let y = simulate_pilot_rx(&r.h_ts, &r.h_sr, &suite, pair, 0.0, &mut rng).unwrap();
            let h_tot = cascade(&r.h_sr, suite.phase_vector(pair).unwrap(), &r.h_ts).unwrap();
            let want = &(&(&suite.combiner().adjoint() * &h_tot) * suite.precoder()) * suite.symbols();
            assert!((&y - &want).frobenius_norm() <= 1e-10 * want.frobenius_norm());
        }
    }

    #[test]
    fn observation_is_deterministic() {
        let g = geoms(4, 4);
        let r = realize(3, &g, 2);
        let suite = build_pilot_suite(&r.ts, &r.sr, &g, 2, 1.0).unwrap();
        let pair = PairIndex::new(1, 0);
        let a = simulate_pilot_rx(&r.h_ts, &r.h_sr, &suite, pair, 1e-9, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let b = simulate_pilot_rx(&r.h_ts, &r.h_sr, &suite, pair, 1e-9, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(a.to_row_major(), b.to_row_major());
    }

    #[test]
    fn pure_noise_variance() {
        let g = geoms(4, 4);
        let r = realize(4, &g, 2);
        let suite = build_pilot_suite(&r.ts, &r.sr, &g, 2, 1.0).unwrap();
        let h_ts = ComplexMatrix::zeros(16, 16);
        let h_sr = ComplexMatrix::zeros(16, 16);
        let proj = PilotProjector::new(&h_ts, &h_sr, &suite).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let noise_var = 0.25;
        let draws = 10_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let y = proj.observe(&suite, PairIndex::new(0, 0), noise_var, &mut rng).unwrap();
            acc += y.get(0, 0).norm_sqr();
        }
        let var = acc / draws as f64;
        assert!((var / noise_var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn equalize_inverts_symbols() {
        let g = geoms(2, 2);
        let r = realize(5, &g, 2);
        let suite = build_pilot_suite(&r.ts, &r.sr, &g, 2, 2.0).unwrap();
        // power_scale = sqrt(2 / 2) = 1
        let a = ComplexMatrix::from_row_major(2, 2, vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0), c(4.0, -1.0)])
            .unwrap();
        let y = &a * suite.symbols();
        let back = equalize(&y, &suite).unwrap();
        assert!((&back - &a).frobenius_norm() < 1e-12);
        assert!(equalize(&ComplexMatrix::zeros(3, 3), &suite).is_err());
    }

    #[test]
    fn top_k_ordering_and_ties() {
        let y = ComplexMatrix::from_real_diagonal(&[3.0, 1.0]);
        assert_eq!(top_k_entries(&y, 1).unwrap(), vec![(0, 0)]);
        let flat = ComplexMatrix::from_fn(2, 2, |_, _| c(0.0, 1.0));
        assert_eq!(top_k_entries(&flat, 2).unwrap(), vec![(0, 0), (0, 1)]);
        assert!(matches!(top_k_entries(&y, 0), Err(EstimationError::BadK { .. })));
        assert!(matches!(top_k_entries(&y, 3), Err(EstimationError::BadK { .. })));
    }

    #[test]
    fn top_k_matches_full_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let y = ComplexMatrix::from_fn(4, 4, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let got = top_k_entries(&y, 4).unwrap();
        let mut all: Vec<(usize, usize)> = (0..16).map(|i| (i / 4, i % 4)).collect();
        all.sort_by(|a, b| y.get(b.0, b.1).norm().partial_cmp(&y.get(a.0, a.1).norm()).unwrap());
        assert_eq!(got, all[..4].to_vec());
    }

    #[test]
    fn rank_approx_basic_cases() {
        let g = geoms(4, 4);
        let r = realize(6, &g, 3);
        let zero = ComplexMatrix::zeros(3, 3);
        let h = rank_approx(&zero, &[(0, 0)], &r.ts, &r.sr, &g, 1).unwrap();
        assert!(h.is_zero());

        let gain = c(0.3, -1.2);
        let mut y = ComplexMatrix::zeros(3, 3);
        y.set(0, 0, gain);
        let h = rank_approx(&y, &[(0, 0)], &r.ts, &r.sr, &g, 1).unwrap();
        assert!((h.frobenius_norm() - gain.norm()).abs() < 1e-12);
        let want = ComplexMatrix::outer(
            &(channel::steering(&g.rx, r.sr[0].arrival) * gain),
            &channel::steering(&g.tx, r.ts[0].departure),
        );
        assert!((&h - &want).frobenius_norm() < 1e-12);

        assert!(matches!(
            rank_approx(&y, &[(0, 0)], &r.ts, &r.sr, &g, 2),
            Err(EstimationError::BadRank { .. })
        ));
        assert!(matches!(
            rank_approx(&y, &[(5, 0)], &r.ts, &r.sr, &g, 1),
            Err(EstimationError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn select_pair_rules() {
        let mut map = BTreeMap::new();
        map.insert(PairIndex::new(0, 0), ComplexMatrix::from_real_diagonal(&[1.0, 0.0]));
        assert_eq!(select_pair(&map).unwrap(), PairIndex::new(0, 0));
        map.insert(PairIndex::new(1, 0), ComplexMatrix::from_real_diagonal(&[0.0, 2.0]));
        map.insert(PairIndex::new(0, 1), ComplexMatrix::from_real_diagonal(&[2.0, 0.0]));
        // (0,1) and (1,0) tie; lexicographic order prefers (0,1).
        assert_eq!(select_pair(&map).unwrap(), PairIndex::new(0, 1));
        assert_eq!(select_pair(&BTreeMap::new()), Err(EstimationError::EmptySelection));
    }

    #[test]
    fn noiseless_large_ris_selects_strongest_pair() {
        let g = geoms(8, 32);
        for seed in 0..5 {
            let r = realize(100 + seed, &g, 4);
            let suite = build_pilot_suite(&r.ts, &r.sr, &g, 4, 1.0).unwrap();
            let proj = PilotProjector::new(&r.h_ts, &r.h_sr, &suite).unwrap();
            let settings = EstimatorSettings { k: 4, n_rank: 1, noise_var: 0.0 };
            let est = estimate(&proj, &suite, &r.ts, &r.sr, &g, settings, |_| ChaCha8Rng::seed_from_u64(0)).unwrap();
            assert_eq!(est.selected_pair, PairIndex::new(0, 0));
            assert_eq!(est.h_est.shape(), (64, 64));
        }
    }
}
