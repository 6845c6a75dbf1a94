//! Data-phase beamformers, capacity and the two reference RIS designs.
//!
//! Capacity here always means the `N_s`-stream capacity: waterfilling over the
//! `N_s` strongest eigenchannels, not over the full rank of the channel.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::channel::{cascade, ChannelError, RisPhases};
use crate::numerics::{self, ComplexMatrix, NumericsError, PowerAllocation};
use crate::pilot_estimation::{EstimationResult, PairIndex, PilotSuite};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamformingError {
    #[error("{n_streams} streams do not fit a {rows}x{cols} channel")]
    TooManyStreams {
        n_streams: usize,
        rows: usize,
        cols: usize,
    },
    #[error("at least one stream is required")]
    NoStreams,
    #[error("channel matrix is zero, there is no direction to beamform along")]
    ZeroChannel,
    #[error("noise variance must be positive, got {0}")]
    BadNoise(f64),
    #[error("transmit power must be non-negative, got {0}")]
    BadPower(f64),
    #[error("the RIS needs at least one element")]
    EmptyRis,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Combiner and precoder for one channel.
#[derive(Debug, Clone)]
pub struct LinkBeamformers {
    /// `W`, `N_r x N_s`.
    pub combiner: ComplexMatrix,
    /// `F`, `N_t x N_s`.
    pub precoder: ComplexMatrix,
    pub allocation: PowerAllocation,
}

/// Full design `{W, Phi, F}`.
#[derive(Debug, Clone)]
pub struct BeamformerSet {
    pub combiner: ComplexMatrix,
    pub precoder: ComplexMatrix,
    pub ris_phases: RisPhases,
}

#[derive(Debug, Clone)]
pub struct RateReport {
    pub spectral_efficiency: f64,
    pub capacity: f64,
    pub per_stream_power: PowerAllocation,
}

fn check_streams(h: &ComplexMatrix, n_streams: usize) -> Result<(), BeamformingError> {
    if n_streams == 0 {
        return Err(BeamformingError::NoStreams);
    }
    if n_streams > h.rows().min(h.cols()) {
        return Err(BeamformingError::TooManyStreams {
            n_streams,
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    Ok(())
}

/// SVD beamformers with waterfilled stream powers.
///
/// The combiner holds the leading `n_streams` left singular vectors; the
/// precoder holds the matching right singular vectors scaled by `sqrt(P_l)`.
pub fn optimal_beamformers(
    h: &ComplexMatrix,
    n_streams: usize,
    total_power: f64,
    noise_var: f64,
) -> Result<LinkBeamformers, BeamformingError> {
    check_streams(h, n_streams)?;
    if h.is_zero() {
        return Err(BeamformingError::ZeroChannel);
    }
    let svd = numerics::svd(h)?;
    if svd.singular_values[0] <= 0.0 {
        return Err(BeamformingError::ZeroChannel);
    }
    let allocation = numerics::waterfill(&svd.singular_values, noise_var, total_power, n_streams)?;
    let combiner_cols: Vec<_> = (0..n_streams).map(|l| svd.u.column(l)).collect();
    let precoder_cols: Vec<_> = (0..n_streams)
        .map(|l| svd.v.column(l) * Complex64::new(allocation.levels[l].sqrt(), 0.0))
        .collect();
    Ok(LinkBeamformers {
        combiner: ComplexMatrix::from_columns(&combiner_cols),
        precoder: ComplexMatrix::from_columns(&precoder_cols),
        allocation,
    })
}

/// `sum_l log2(1 + P_l s_l^2 / noise_var)` for descending singular values.
/// Returns 0 when no power is available or every value is zero.
pub fn capacity_from_singular_values(
    singular_values: &[f64],
    n_streams: usize,
    total_power: f64,
    noise_var: f64,
) -> Result<f64, BeamformingError> {
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(BeamformingError::BadNoise(noise_var));
    }
    if !(total_power >= 0.0 && total_power.is_finite()) {
        return Err(BeamformingError::BadPower(total_power));
    }
    if n_streams == 0 {
        return Err(BeamformingError::NoStreams);
    }
    let streams = n_streams.min(singular_values.len());
    if total_power == 0.0 || singular_values[..streams].iter().all(|&s| s == 0.0) {
        return Ok(0.0);
    }
    let alloc = numerics::waterfill(singular_values, noise_var, total_power, streams)?;
    Ok(alloc
        .levels
        .iter()
        .zip(singular_values)
        .map(|(p, s)| (p * s * s / noise_var).ln_1p() / std::f64::consts::LN_2)
        .sum())
}

/// `N_s`-stream capacity of `h` under a total power budget.
pub fn channel_capacity(
    h: &ComplexMatrix,
    n_streams: usize,
    total_power: f64,
    noise_var: f64,
) -> Result<f64, BeamformingError> {
    check_streams(h, n_streams)?;
    if h.is_zero() {
        return Ok(0.0);
    }
    let s = numerics::singular_values(h)?;
    capacity_from_singular_values(&s, n_streams, total_power, noise_var)
}

/// `M` independent phases, uniform on `[0, 2 pi)`.
pub fn random_ris<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Result<RisPhases, BeamformingError> {
    if m == 0 {
        return Err(BeamformingError::EmptyRis);
    }
    let theta: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    Ok(RisPhases::from_angles(&theta))
}

/// Adjusted channel and its singular values for every pilot pair.
#[derive(Debug, Clone)]
pub struct PairSpectrum {
    pub pair: PairIndex,
    pub channel: ComplexMatrix,
    pub singular_values: Vec<f64>,
}

/// Forms `H_SR diag(v^{i,j}) H_TS` for every pair with true channels.
pub fn pair_spectra(
    h_ts: &ComplexMatrix,
    h_sr: &ComplexMatrix,
    suite: &PilotSuite,
) -> Result<Vec<PairSpectrum>, BeamformingError> {
    suite
        .phase_vectors()
        .map(|(pair, v)| {
            let channel = cascade(h_sr, v, h_ts)?;
            let singular_values = numerics::singular_values(&channel)?;
            Ok(PairSpectrum {
                pair,
                channel,
                singular_values,
            })
        })
        .collect()
}

/// Argmax of capacity over a set of pair spectra; ties go to the smaller pair.
pub fn best_of_spectra(
    spectra: &[PairSpectrum],
    n_streams: usize,
    total_power: f64,
    noise_var: f64,
) -> Result<(PairIndex, f64), BeamformingError> {
    let mut best: Option<(PairIndex, f64)> = None;
    for s in spectra {
        let cap = capacity_from_singular_values(&s.singular_values, n_streams, total_power, noise_var)?;
        let better = match best {
            None => true,
            Some((p, c)) => cap > c || (cap == c && s.pair < p),
        };
        if better {
            best = Some((s.pair, cap));
        }
    }
    best.ok_or(BeamformingError::NoStreams)
}

/// Exhaustive search over all pilot RIS configurations using the true
/// channels. Upper-bounds any pair the estimator can select.
pub fn exhaustive_best_pair(
    h_ts: &ComplexMatrix,
    h_sr: &ComplexMatrix,
    suite: &PilotSuite,
    n_streams: usize,
    total_power: f64,
    noise_var: f64,
) -> Result<(PairIndex, f64), BeamformingError> {
    let spectra = pair_spectra(h_ts, h_sr, suite)?;
    if let Some(s) = spectra.first() {
        check_streams(&s.channel, n_streams)?;
    }
    best_of_spectra(&spectra, n_streams, total_power, noise_var)
}

/// Data-phase design from an estimation round: RIS set to the selected
/// pilot configuration, `W` and `F` from the low-rank estimate.
pub fn design_beamformers(
    estimation: &EstimationResult,
    suite: &PilotSuite,
    n_streams: usize,
    total_power: f64,
    noise_var: f64,
) -> Result<(BeamformerSet, PowerAllocation), BeamformingError> {
    let link = optimal_beamformers(&estimation.h_est, n_streams, total_power, noise_var)?;
    let ris_phases = suite
        .phase_vector(estimation.selected_pair)
        .map_err(|_| BeamformingError::EmptyRis)?
        .clone();
    Ok((
        BeamformerSet {
            combiner: link.combiner,
            precoder: link.precoder,
            ris_phases,
        },
        link.allocation,
    ))
}

/// Spectral efficiency of `set` on the true channel next to the capacity of
/// the same adjusted channel.
pub fn evaluate(
    set: &BeamformerSet,
    allocation: PowerAllocation,
    h_ts: &ComplexMatrix,
    h_sr: &ComplexMatrix,
    n_streams: usize,
    total_power: f64,
    noise_var: f64,
) -> Result<RateReport, BeamformingError> {
    let h = cascade(h_sr, &set.ris_phases, h_ts)?;
    let spectral_efficiency = numerics::log_det_rate(&set.combiner, &h, &set.precoder, noise_var)?;
    let capacity = channel_capacity(&h, n_streams, total_power, noise_var)?;
    Ok(RateReport {
        spectral_efficiency,
        capacity,
        per_stream_power: allocation,
    })
}
