//! Geometric multipath channels between uniform planar arrays.
//!
//! Each link is a Saleh-Valenzuela style sum of a few rank-one path
//! components. Path gains are circularly-symmetric Gaussian with a variance
//! set by a log-distance path loss model; the first (pre-sorting) path uses
//! the line-of-sight parameters and the rest use the non-line-of-sight ones.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::numerics::{ComplexMatrix, ComplexVector};

/// Allowed deviation of an RIS coefficient from unit modulus.
pub const UNIT_MODULUS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("array geometry needs at least one element per axis, got {horiz}x{vert}")]
    EmptyArray { horiz: usize, vert: usize },
    #[error("element spacing must be a positive multiple of the wavelength, got {0}")]
    BadSpacing(f64),
    #[error("path loss exponent beta must be positive, got {0}")]
    BadExponent(f64),
    #[error("shadowing standard deviation must be non-negative, got {0}")]
    BadShadowSigma(f64),
    #[error("a link needs at least one path")]
    NoPaths,
    #[error("link distance must be positive, got {0} m")]
    BadDistance(f64),
    #[error("path {index}: {reason}")]
    BadPath { index: usize, reason: String },
    #[error(
        "RIS coefficient {index} has modulus {modulus}; each reflection coefficient must be \
         e^(j theta) (Phi = diag([e^(j theta_1), ..., e^(j theta_M)]))"
    )]
    NonUnitModulus { index: usize, modulus: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown band '{0}', valid bands are: mmwave28, thz142")]
    UnknownBand(String),
}

/// Uniform planar array: `horiz x vert` elements with spacing `d/lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpaGeometry {
    horiz: usize,
    vert: usize,
    spacing_over_lambda: f64,
}

impl UpaGeometry {
    /// Half-wavelength spaced array.
    pub fn new(horiz: usize, vert: usize) -> Result<Self, ChannelError> {
        Self::with_spacing(horiz, vert, 0.5)
    }

    pub fn with_spacing(
        horiz: usize,
        vert: usize,
        spacing_over_lambda: f64,
    ) -> Result<Self, ChannelError> {
        if horiz == 0 || vert == 0 {
            return Err(ChannelError::EmptyArray { horiz, vert });
        }
        if !(spacing_over_lambda > 0.0 && spacing_over_lambda.is_finite()) {
            return Err(ChannelError::BadSpacing(spacing_over_lambda));
        }
        Ok(Self {
            horiz,
            vert,
            spacing_over_lambda,
        })
    }

    /// `n x n` half-wavelength array.
    pub fn square(n: usize) -> Result<Self, ChannelError> {
        Self::new(n, n)
    }

    pub fn horiz(&self) -> usize {
        self.horiz
    }

    pub fn vert(&self) -> usize {
        self.vert
    }

    pub fn spacing_over_lambda(&self) -> f64 {
        self.spacing_over_lambda
    }

    pub fn len(&self) -> usize {
        self.horiz * self.vert
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for UpaGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.horiz, self.vert)
    }
}

impl FromStr for UpaGeometry {
    type Err = String;

    /// Parses `HxV` (e.g. `8x8`) or a single side length for a square array.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("expected an array size like 8x8, got '{s}'"))
        };
        let (h, v) = match s.split_once(['x', 'X']) {
            Some((h, v)) => (parse(h)?, parse(v)?),
            None => {
                let n = parse(s)?;
                (n, n)
            }
        };
        UpaGeometry::new(h, v).map_err(|e| e.to_string())
    }
}

/// Direction of a plane wave, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Direction {
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth, elevation }
    }
}

/// Array response of a UPA, unit norm.
///
/// Element `(i_h, i_v)` sits at flat index `i_v * horiz + i_h` and carries
/// phase `2 pi (d/lambda) (i_h sin(az) sin(el) + i_v cos(el))`.
pub fn upa_response(geom: &UpaGeometry, azimuth: f64, elevation: f64) -> ComplexVector {
    let k = 2.0 * PI * geom.spacing_over_lambda;
    let u = azimuth.sin() * elevation.sin();
    let w = elevation.cos();
    let amp = 1.0 / (geom.len() as f64).sqrt();
    ComplexVector::from_fn(geom.len(), |idx, _| {
        let ih = (idx % geom.horiz) as f64;
        let iv = (idx / geom.horiz) as f64;
        Complex64::from_polar(amp, k * (ih * u + iv * w))
    })
}

pub fn steering(geom: &UpaGeometry, dir: Direction) -> ComplexVector {
    upa_response(geom, dir.azimuth, dir.elevation)
}

/// Log-distance path loss `alpha + 10 beta log10(d) + xi` with `xi ~ N(0, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    pub alpha_db: f64,
    pub beta: f64,
    pub shadow_sigma_db: f64,
}

impl PathLossModel {
    pub fn new(alpha_db: f64, beta: f64, shadow_sigma_db: f64) -> Result<Self, ChannelError> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(ChannelError::BadExponent(beta));
        }
        if !(shadow_sigma_db >= 0.0 && shadow_sigma_db.is_finite()) {
            return Err(ChannelError::BadShadowSigma(shadow_sigma_db));
        }
        Ok(Self {
            alpha_db,
            beta,
            shadow_sigma_db,
        })
    }
}

/// Path loss in dB; `shadow_draw` is a sample of `xi` in dB (0 disables it).
pub fn path_loss_db(model: &PathLossModel, distance_m: f64, shadow_draw: f64) -> f64 {
    debug_assert!(distance_m > 0.0);
    model.alpha_db + 10.0 * model.beta * distance_m.log10() + shadow_draw
}

/// Carrier band presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    /// 28 GHz.
    Mmwave28,
    /// 142 GHz.
    Thz142,
}

impl Band {
    pub const ALL: [Band; 2] = [Band::Mmwave28, Band::Thz142];

    pub fn los(self) -> PathLossModel {
        match self {
            Band::Mmwave28 => PathLossModel {
                alpha_db: 61.4,
                beta: 2.0,
                shadow_sigma_db: 5.8,
            },
            Band::Thz142 => PathLossModel {
                alpha_db: 75.44,
                beta: 2.1,
                shadow_sigma_db: 2.8,
            },
        }
    }

    pub fn nlos(self) -> PathLossModel {
        match self {
            Band::Mmwave28 => PathLossModel {
                alpha_db: 72.0,
                beta: 2.92,
                shadow_sigma_db: 8.7,
            },
            Band::Thz142 => PathLossModel {
                alpha_db: 75.44,
                beta: 3.1,
                shadow_sigma_db: 8.3,
            },
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Band::Mmwave28 => "mmwave28",
            Band::Thz142 => "thz142",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Band {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "mmwave28" => Ok(Band::Mmwave28),
            "thz142" => Ok(Band::Thz142),
            other => Err(ChannelError::UnknownBand(other.to_string())),
        }
    }
}

/// Parameters of one hop (TX to RIS, or RIS to RX).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub n_path: usize,
    pub distance_m: f64,
    pub los_model: PathLossModel,
    pub nlos_model: PathLossModel,
    pub rx_geometry: UpaGeometry,
    pub tx_geometry: UpaGeometry,
    /// Apply log-normal shadowing.
    pub shadowing: bool,
}

impl LinkConfig {
    pub fn for_band(
        band: Band,
        n_path: usize,
        distance_m: f64,
        rx_geometry: UpaGeometry,
        tx_geometry: UpaGeometry,
        shadowing: bool,
    ) -> Self {
        Self {
            n_path,
            distance_m,
            los_model: band.los(),
            nlos_model: band.nlos(),
            rx_geometry,
            tx_geometry,
            shadowing,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.n_path == 0 {
            return Err(ChannelError::NoPaths);
        }
        if !(self.distance_m > 0.0 && self.distance_m.is_finite()) {
            return Err(ChannelError::BadDistance(self.distance_m));
        }
        for m in [&self.los_model, &self.nlos_model] {
            PathLossModel::new(m.alpha_db, m.beta, m.shadow_sigma_db)?;
        }
        Ok(())
    }

    /// `gamma^2 = rows * cols / n_path`.
    pub fn normalization_sq(&self) -> f64 {
        (self.rx_geometry.len() * self.tx_geometry.len()) as f64 / self.n_path as f64
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    pub arrival: Direction,
    pub departure: Direction,
}

/// Paths of one link, strongest first.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet(Vec<Path>);

fn check_direction(index: usize, what: &str, d: Direction) -> Result<(), ChannelError> {
    let bad = |reason: String| Err(ChannelError::BadPath { index, reason });
    if !(d.azimuth.is_finite() && d.elevation.is_finite()) {
        return bad(format!("{what} angles must be finite"));
    }
    if !(0.0..2.0 * PI).contains(&d.azimuth) {
        return bad(format!("{what} azimuth {} outside [0, 2pi)", d.azimuth));
    }
    if !(0.0..PI).contains(&d.elevation) {
        return bad(format!("{what} elevation {} outside [0, pi)", d.elevation));
    }
    Ok(())
}

impl PathSet {
    /// Validates angles and gains, then orders paths by descending gain
    /// magnitude (stable).
    pub fn new(mut paths: Vec<Path>) -> Result<Self, ChannelError> {
        if paths.is_empty() {
            return Err(ChannelError::NoPaths);
        }
        for (i, p) in paths.iter().enumerate() {
            if !(p.gain.re.is_finite() && p.gain.im.is_finite()) {
                return Err(ChannelError::BadPath {
                    index: i,
                    reason: "gain must be finite".into(),
                });
            }
            check_direction(i, "arrival", p.arrival)?;
            check_direction(i, "departure", p.departure)?;
        }
        paths.sort_by(|a, b| b.gain.norm().total_cmp(&a.gain.norm()));
        Ok(Self(paths))
    }

    pub fn paths(&self) -> &[Path] {
        &self.0
    }

    pub fn gains(&self) -> Vec<Complex64> {
        self.0.iter().map(|p| p.gain).collect()
    }
}

impl Deref for PathSet {
    type Target = [Path];

    fn deref(&self) -> &[Path] {
        &self.0
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(sd * re, sd * im)
}

fn uniform_direction<R: Rng + ?Sized>(rng: &mut R) -> Direction {
    Direction {
        azimuth: rng.random_range(0.0..2.0 * PI),
        elevation: rng.random_range(0.0..PI),
    }
}

/// Draws one realization of a link's paths.
///
/// Two shadowing samples are drawn per call (one for the LOS model, one
/// shared by all NLOS paths) whether or not shadowing is enabled, so toggling
/// it leaves the remaining draws unchanged.
pub fn sample_paths<R: Rng + ?Sized>(rng: &mut R, link: &LinkConfig) -> PathSet {
    let z_los: f64 = StandardNormal.sample(rng);
    let z_nlos: f64 = StandardNormal.sample(rng);
    let (xi_los, xi_nlos) = if link.shadowing {
        (
            z_los * link.los_model.shadow_sigma_db,
            z_nlos * link.nlos_model.shadow_sigma_db,
        )
    } else {
        (0.0, 0.0)
    };
    let gamma_sq = link.normalization_sq();
    let var_los = gamma_sq * 10f64.powf(-0.1 * path_loss_db(&link.los_model, link.distance_m, xi_los));
    let var_nlos =
        gamma_sq * 10f64.powf(-0.1 * path_loss_db(&link.nlos_model, link.distance_m, xi_nlos));

    let mut paths = Vec::with_capacity(link.n_path);
    for q in 0..link.n_path {
        let variance = if q == 0 { var_los } else { var_nlos };
        let gain = complex_gaussian(rng, variance);
        let arrival = uniform_direction(rng);
        let departure = uniform_direction(rng);
        paths.push(Path {
            gain,
            arrival,
            departure,
        });
    }
    paths.sort_by(|a, b| b.gain.norm().total_cmp(&a.gain.norm()));
    PathSet(paths)
}

/// `H = sum_q alpha_q a_r(arrival_q) a_t(departure_q)^H`, `rx x tx`.
pub fn assemble_channel(
    paths: &PathSet,
    rx_geom: &UpaGeometry,
    tx_geom: &UpaGeometry,
) -> ComplexMatrix {
    let mut h = nalgebra::DMatrix::<Complex64>::zeros(rx_geom.len(), tx_geom.len());
    for p in paths.iter() {
        let a_r = steering(rx_geom, p.arrival) * p.gain;
        let a_t = steering(tx_geom, p.departure);
        h += &a_r * a_t.adjoint();
    }
    ComplexMatrix::from(h)
}

/// Diagonal of an RIS reflection matrix: every entry has unit modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct RisPhases(Vec<Complex64>);

impl RisPhases {
    pub fn new(entries: Vec<Complex64>) -> Result<Self, ChannelError> {
        check_unit_modulus(&entries)?;
        Ok(Self(entries))
    }

    pub fn ones(m: usize) -> Self {
        Self(vec![Complex64::new(1.0, 0.0); m])
    }

    pub fn from_angles(theta: &[f64]) -> Self {
        Self(theta.iter().map(|&t| Complex64::from_polar(1.0, t)).collect())
    }

    /// Largest `| |v_m| - 1 |`.
    pub fn max_modulus_deviation(&self) -> f64 {
        self.0
            .iter()
            .map(|z| (z.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }
}

impl Deref for RisPhases {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

pub fn check_unit_modulus(entries: &[Complex64]) -> Result<(), ChannelError> {
    for (index, z) in entries.iter().enumerate() {
        let modulus = z.norm();
        if !((modulus - 1.0).abs() <= UNIT_MODULUS_TOLERANCE) {
            return Err(ChannelError::NonUnitModulus { index, modulus });
        }
    }
    Ok(())
}

/// Cascaded channel `H_SR diag(phases) H_TS`.
pub fn cascade(
    h_sr: &ComplexMatrix,
    ris_phases: &[Complex64],
    h_ts: &ComplexMatrix,
) -> Result<ComplexMatrix, ChannelError> {
    let m = ris_phases.len();
    if h_sr.cols() != m || h_ts.rows() != m {
        return Err(ChannelError::DimensionMismatch(format!(
            "H_SR is {}x{}, H_TS is {}x{}, RIS has {m} elements",
            h_sr.rows(),
            h_sr.cols(),
            h_ts.rows(),
            h_ts.cols()
        )));
    }
    check_unit_modulus(ris_phases)?;
    Ok(&h_sr.scale_columns(ris_phases) * h_ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_element_response() {
        let g = UpaGeometry::new(1, 1).unwrap();
        let a = upa_response(&g, 1.0, 2.0);
        assert_eq!(a.len(), 1);
        assert!((a[0] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn broadside_response_is_flat() {
        let g = UpaGeometry::new(4, 3).unwrap();
        let a = upa_response(&g, 0.0, PI / 2.0);
        let expected = 1.0 / 12f64.sqrt();
        for z in a.iter() {
            assert!((z - c(expected, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn response_index_order() {
        let g = UpaGeometry::new(3, 2).unwrap();
        let (az, el) = (0.7, 1.1);
        let a = upa_response(&g, az, el);
        // Element i_h = 2, i_v = 1 lives at 1*3 + 2 = 5.
        let phase = PI * (2.0 * az.sin() * el.sin() + el.cos());
        let want = Complex64::from_polar(1.0 / 6f64.sqrt(), phase);
        assert!((a[5] - want).norm() < 1e-14);
    }

    #[test]
    fn geometry_rejects_bad_input() {
        assert!(UpaGeometry::new(0, 3).is_err());
        assert!(UpaGeometry::with_spacing(2, 2, 0.0).is_err());
        assert_eq!("8x4".parse::<UpaGeometry>().unwrap().len(), 32);
        assert_eq!("16".parse::<UpaGeometry>().unwrap().len(), 256);
        assert!("8y4".parse::<UpaGeometry>().is_err());
    }

    #[test]
    fn path_loss_values() {
        let los = Band::Mmwave28.los();
        assert!((path_loss_db(&los, 35.0, 0.0) - 92.281_360_887).abs() < 1e-6);
        assert_eq!(path_loss_db(&los, 1.0, 0.0), 61.4);
        let thz = Band::Thz142.los();
        assert!((path_loss_db(&thz, 15.0, 0.0) - 100.137_916_440).abs() < 1e-6);
        assert_eq!(path_loss_db(&thz, 15.0, 2.5) - path_loss_db(&thz, 15.0, 0.0), 2.5);
    }

    #[test]
    fn band_parsing() {
        assert_eq!("mmwave28".parse::<Band>().unwrap(), Band::Mmwave28);
        assert_eq!("thz142".parse::<Band>().unwrap(), Band::Thz142);
        let err = "sub6".parse::<Band>().unwrap_err().to_string();
        assert!(err.contains("mmwave28") && err.contains("thz142"));
    }

    fn reference_link() -> LinkConfig {
        LinkConfig::for_band(
            Band::Mmwave28,
            4,
            35.0,
            UpaGeometry::square(16).unwrap(),
            UpaGeometry::square(8).unwrap(),
            true,
        )
    }

    #[test]
    fn sample_paths_deterministic_and_sorted() {
        let link = reference_link();
        let a = sample_paths(&mut ChaCha8Rng::seed_from_u64(9), &link);
        let b = sample_paths(&mut ChaCha8Rng::seed_from_u64(9), &link);
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        for w in a.windows(2) {
            assert!(w[0].gain.norm() >= w[1].gain.norm());
        }
        for p in a.iter() {
            assert!((0.0..2.0 * PI).contains(&p.arrival.azimuth));
            assert!((0.0..PI).contains(&p.departure.elevation));
        }
    }

    #[test]
    fn path_set_sorts_and_validates() {
        let d = Direction::new(0.1, 0.2);
        let ps = PathSet::new(vec![
            Path { gain: c(0.1, 0.0), arrival: d, departure: d },
            Path { gain: c(0.0, 2.0), arrival: d, departure: d },
        ])
        .unwrap();
        assert_eq!(ps[0].gain, c(0.0, 2.0));
        let bad = PathSet::new(vec![Path {
            gain: c(1.0, 0.0),
            arrival: Direction::new(7.0, 0.1),
            departure: d,
        }]);
        assert!(matches!(bad, Err(ChannelError::BadPath { index: 0, .. })));
        assert!(PathSet::new(vec![]).is_err());
    }

    #[test]
    fn single_path_gain_variance() {
        let link = LinkConfig {
            n_path: 1,
            shadowing: false,
            ..reference_link()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| sample_paths(&mut rng, &link)[0].gain.norm_sqr())
            .sum::<f64>()
            / n as f64;
        let expected = (256.0 * 64.0) * 10f64.powf(-0.1 * path_loss_db(&link.los_model, 35.0, 0.0));
        assert!((mean / expected - 1.0).abs() < 0.05, "{mean} vs {expected}");
    }

    #[test]
    fn assemble_single_unit_path() {
        let g = UpaGeometry::new(4, 2).unwrap();
        let d = Direction::new(1.0, 0.5);
        let ps = PathSet::new(vec![Path { gain: c(1.0, 0.0), arrival: d, departure: d }]).unwrap();
        let h = assemble_channel(&ps, &g, &g);
        assert!((h.frobenius_norm() - 1.0).abs() < 1e-12);
        let s = crate::numerics::singular_values(&h).unwrap();
        assert!(s[1] < 1e-12);

        let zero = PathSet::new(vec![Path { gain: c(0.0, 0.0), arrival: d, departure: d }]).unwrap();
        assert!(assemble_channel(&zero, &g, &g).is_zero());
    }

    #[test]
    fn assemble_matches_entrywise_sum() {
        let rx = UpaGeometry::new(3, 2).unwrap();
        let tx = UpaGeometry::new(2, 2).unwrap();
        let link = LinkConfig::for_band(Band::Thz142, 4, 15.0, rx, tx, false);
        let ps = sample_paths(&mut ChaCha8Rng::seed_from_u64(5), &link);
        let h = assemble_channel(&ps, &rx, &tx);
        for r in 0..rx.len() {
            for col in 0..tx.len() {
                let mut acc = c(0.0, 0.0);
                for p in ps.iter() {
                    let ar = upa_response(&rx, p.arrival.azimuth, p.arrival.elevation)[r];
                    let at = upa_response(&tx, p.departure.azimuth, p.departure.elevation)[col];
                    acc += p.gain * ar * at.conj();
                }
                assert!((acc - h.get(r, col)).norm() <= 1e-12 * acc.norm().max(1e-30));
            }
        }
    }

    #[test]
    fn cascade_scalars_and_errors() {
        let h_sr = ComplexMatrix::from_row_major(1, 1, vec![c(2.0, 0.0)]).unwrap();
        let h_ts = ComplexMatrix::from_row_major(1, 1, vec![c(3.0, 0.0)]).unwrap();
        let h = cascade(&h_sr, &[c(1.0, 0.0)], &h_ts).unwrap();
        assert_eq!(h.get(0, 0), c(6.0, 0.0));

        let err = cascade(&h_sr, &[c(1.5, 0.0)], &h_ts).unwrap_err();
        assert!(matches!(err, ChannelError::NonUnitModulus { index: 0, .. }));
        assert!(err.to_string().contains("diag"));

        assert!(matches!(
            cascade(&h_sr, &[c(1.0, 0.0); 2], &h_ts),
            Err(ChannelError::DimensionMismatch(_))
        ));

        let zero = cascade(&h_sr, &[c(0.0, 1.0)], &ComplexMatrix::zeros(1, 3)).unwrap();
        assert!(zero.is_zero());
    }

    #[test]
    fn cascade_with_ones_is_plain_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ris = UpaGeometry::new(4, 4).unwrap();
        let arr = UpaGeometry::new(2, 2).unwrap();
        let ts = sample_paths(&mut rng, &LinkConfig::for_band(Band::Mmwave28, 3, 35.0, ris, arr, true));
        let sr = sample_paths(&mut rng, &LinkConfig::for_band(Band::Mmwave28, 3, 15.0, arr, ris, true));
        let h_ts = assemble_channel(&ts, &ris, &arr);
        let h_sr = assemble_channel(&sr, &arr, &ris);
        let a = cascade(&h_sr, &RisPhases::ones(16), &h_ts).unwrap();
        let b = &h_sr * &h_ts;
        assert!((&a - &b).frobenius_norm() <= 1e-14 * b.frobenius_norm());
    }

    #[test]
    fn ris_phases_validation() {
        assert!(RisPhases::new(vec![c(0.6, 0.8), c(0.0, -1.0)]).is_ok());
        assert!(RisPhases::new(vec![c(0.6, 0.7)]).is_err());
        let p = RisPhases::from_angles(&[0.0, 1.0, 4.0]);
        assert!(p.max_modulus_deviation() < 1e-15);
    }
}
