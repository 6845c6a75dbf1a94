//! Dense complex linear algebra used throughout the crate.
//!
//! [`ComplexMatrix`] is a thin newtype over an `nalgebra` dynamic matrix. On top
//! of it this module provides the three primitives the link-level model needs:
//! a singular value decomposition with descending singular values, exact
//! waterfilling over eigenchannels and the log-det spectral efficiency of a
//! combiner/precoder pair.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{Cholesky, DMatrix, DVector, SVD};
use num_complex::Complex64;
use thiserror::Error;

/// Complex column vector (steering vectors, RIS reflection vectors).
pub type ComplexVector = DVector<Complex64>;

/// Singular values below this fraction of the largest one are treated as zero
/// when allocating power.
pub const RANK_TOLERANCE: f64 = 1e-12;

const SVD_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("expected {expected} entries for a {rows}x{cols} matrix, got {actual}")]
    EntryCount {
        rows: usize,
        cols: usize,
        expected: usize,
        actual: usize,
    },
    #[error("{what} contains a non-finite entry at ({row}, {col})")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },
    #[error("SVD did not converge for a {rows}x{cols} matrix")]
    SvdNoConvergence { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no usable eigenchannel: every singular value is zero")]
    NoActiveEigenchannel,
    #[error("combiner W is rank deficient (W^H W is singular), noise covariance not invertible")]
    RankDeficientCombiner,
}

/// Dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Builds a matrix from row-major entries, rejecting empty shapes and
    /// non-finite values.
    pub fn from_row_major(
        rows: usize,
        cols: usize,
        entries: Vec<Complex64>,
    ) -> Result<Self, NumericsError> {
        if rows == 0 || cols == 0 {
            return Err(NumericsError::EmptyMatrix { rows, cols });
        }
        if entries.len() != rows * cols {
            return Err(NumericsError::EntryCount {
                rows,
                cols,
                expected: rows * cols,
                actual: entries.len(),
            });
        }
        let m = Self(DMatrix::from_row_slice(rows, cols, &entries));
        m.check_finite("matrix")?;
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    /// Stacks equal-length vectors as columns.
    pub fn from_columns(columns: &[ComplexVector]) -> Self {
        assert!(!columns.is_empty(), "at least one column required");
        Self(DMatrix::from_columns(columns))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(diag[r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Outer product `u v^H`.
    pub fn outer(u: &ComplexVector, v: &ComplexVector) -> Self {
        Self(u * v.adjoint())
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.0[(row, col)] = value;
    }

    pub fn column(&self, col: usize) -> ComplexVector {
        self.0.column(col).into_owned()
    }

    pub fn to_row_major(&self) -> Vec<Complex64> {
        self.0.transpose().as_slice().to_vec()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(&self.0 * Complex64::new(factor, 0.0))
    }

    /// Returns `self * diag(factors)`.
    pub fn scale_columns(&self, factors: &[Complex64]) -> Self {
        assert_eq!(factors.len(), self.cols(), "one factor per column");
        let mut out = self.0.clone();
        for (mut col, &f) in out.column_iter_mut().zip(factors) {
            col *= f;
        }
        Self(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn check_finite(&self, what: &'static str) -> Result<(), NumericsError> {
        for c in 0..self.cols() {
            for r in 0..self.rows() {
                let z = self.0[(r, c)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(NumericsError::NonFinite {
                        what,
                        row: r,
                        col: c,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn as_inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    /// Matrix product with a shape check instead of a panic.
    pub fn try_mul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
        if self.cols() != rhs.rows() {
            return Err(NumericsError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(self * rhs)
    }
}

impl From<DMatrix<Complex64>> for ComplexMatrix {
    fn from(m: DMatrix<Complex64>) -> Self {
        Self(m)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{}x{}", self.rows(), self.cols())?;
        if self.rows() * self.cols() <= 64 {
            write!(f, "{}", self.0)?;
        }
        Ok(())
    }
}

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Mul<&ComplexVector> for &ComplexMatrix {
    type Output = ComplexVector;

    fn mul(self, rhs: &ComplexVector) -> ComplexVector {
        &self.0 * rhs
    }
}

impl Add<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Thin SVD `A = U diag(S) V^H` with `S` sorted in descending order.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows x min(rows, cols)`, orthonormal columns.
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    /// `cols x min(rows, cols)`, orthonormal columns.
    pub v: ComplexMatrix,
}

impl SvdResult {
    /// `U diag(S) V^H`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let s: Vec<Complex64> = self
            .singular_values
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        &self.u.scale_columns(&s) * &self.v.adjoint()
    }
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

fn run_svd(
    a: &ComplexMatrix,
    vectors: bool,
) -> Result<SVD<Complex64, nalgebra::Dyn, nalgebra::Dyn>, NumericsError> {
    a.check_finite("SVD input")?;
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Err(NumericsError::EmptyMatrix { rows, cols });
    }
    SVD::try_new(
        a.as_inner().clone(),
        vectors,
        vectors,
        f64::EPSILON,
        SVD_MAX_ITERATIONS,
    )
    .ok_or(NumericsError::SvdNoConvergence { rows, cols })
}

/// Thin singular value decomposition.
pub fn svd(a: &ComplexMatrix) -> Result<SvdResult, NumericsError> {
    let raw = run_svd(a, true)?;
    let (rows, cols) = a.shape();
    let (u, v_t) = match (raw.u, raw.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(NumericsError::SvdNoConvergence { rows, cols }),
    };
    let values: Vec<f64> = raw.singular_values.iter().copied().collect();
    let order = descending_order(&values);
    let u_cols: Vec<ComplexVector> = order.iter().map(|&k| u.column(k).into_owned()).collect();
    let v = v_t.adjoint();
    let v_cols: Vec<ComplexVector> = order.iter().map(|&k| v.column(k).into_owned()).collect();
    let sorted: Vec<f64> = order.iter().map(|&k| values[k].max(0.0)).collect();
    Ok(SvdResult {
        u: ComplexMatrix::from_columns(&u_cols),
        singular_values: sorted,
        v: ComplexMatrix::from_columns(&v_cols),
    })
}

/// Singular values only, descending. Cheaper than [`svd`].
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>, NumericsError> {
    let raw = run_svd(a, false)?;
    let mut values: Vec<f64> = raw.singular_values.iter().map(|&x| x.max(0.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Power split over eigenchannels.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    /// Power per eigenchannel (mW), aligned with the first `max_streams`
    /// singular values handed to [`waterfill`].
    pub levels: Vec<f64>,
    /// `1/eta`: every active channel sits at `water_level - noise/s^2`.
    pub water_level: f64,
}

impl PowerAllocation {
    pub fn total(&self) -> f64 {
        self.levels.iter().sum()
    }

    pub fn active_streams(&self) -> usize {
        self.levels.iter().filter(|&&p| p > 0.0).count()
    }
}

/// Capacity-optimal power allocation over the first `max_streams` singular
/// values.
///
/// The water level is found in closed form: channels are ranked by inverse
/// gain `noise_var / s^2`, and the largest prefix whose weakest member still
/// receives positive power is the active set.
pub fn waterfill(
    singular_values: &[f64],
    noise_var: f64,
    total_power: f64,
    max_streams: usize,
) -> Result<PowerAllocation, NumericsError> {
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(NumericsError::InvalidArgument(format!(
            "noise variance must be positive, got {noise_var}"
        )));
    }
    if !(total_power > 0.0 && total_power.is_finite()) {
        return Err(NumericsError::InvalidArgument(format!(
            "total power must be positive, got {total_power}"
        )));
    }
    if max_streams == 0 || max_streams > singular_values.len() {
        return Err(NumericsError::InvalidArgument(format!(
            "max_streams must be in 1..={}, got {max_streams}",
            singular_values.len()
        )));
    }
    let considered = &singular_values[..max_streams];
    if considered.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(NumericsError::InvalidArgument(
            "singular values must be finite and non-negative".into(),
        ));
    }
    let s_max = considered.iter().cloned().fold(0.0, f64::max);
    if s_max <= 0.0 {
        return Err(NumericsError::NoActiveEigenchannel);
    }

    let floor = RANK_TOLERANCE * s_max;
    let mut candidates: Vec<usize> = (0..max_streams).filter(|&l| considered[l] > floor).collect();
    candidates.sort_by(|&a, &b| considered[b].total_cmp(&considered[a]).then(a.cmp(&b)));
    let inverse_gain: Vec<f64> = candidates
        .iter()
        .map(|&l| noise_var / (considered[l] * considered[l]))
        .collect();

    // Channel n (0-based, ascending inverse gain) stays active while the
    // budget covers lifting all stronger channels up to its floor.
    let mut active = 1;
    let mut deficit = 0.0;
    for n in 1..inverse_gain.len() {
        deficit += n as f64 * (inverse_gain[n] - inverse_gain[n - 1]);
        if total_power > deficit {
            active = n + 1;
        } else {
            break;
        }
    }

    let gain_sum: f64 = inverse_gain[..active].iter().sum();
    let mut levels = vec![0.0; max_streams];
    for (rank, &l) in candidates.iter().take(active).enumerate() {
        let g = inverse_gain[rank];
        let spread = gain_sum - active as f64 * g;
        levels[l] = ((total_power + spread) / active as f64).max(0.0);
    }
    let water_level = inverse_gain[0] + levels[candidates[0]];
    Ok(PowerAllocation {
        levels,
        water_level,
    })
}

/// `log2 det(I + R^{-1} W^H H F F^H H^H W)` with `R = noise_var W^H W`.
pub fn log_det_rate(
    w: &ComplexMatrix,
    h: &ComplexMatrix,
    f: &ComplexMatrix,
    noise_var: f64,
) -> Result<f64, NumericsError> {
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(NumericsError::InvalidArgument(format!(
            "noise variance must be positive, got {noise_var}"
        )));
    }
    if w.rows() != h.rows() || h.cols() != f.rows() || w.cols() != f.cols() {
        return Err(NumericsError::DimensionMismatch(format!(
            "W {}x{}, H {}x{}, F {}x{} are not conformable",
            w.rows(),
            w.cols(),
            h.rows(),
            h.cols(),
            f.rows(),
            f.cols()
        )));
    }
    let gram = w.adjoint().as_inner() * w.as_inner();
    let chol = Cholesky::new(gram).ok_or(NumericsError::RankDeficientCombiner)?;
    let l = chol.l();
    let pivots: Vec<f64> = l.diagonal().iter().map(|z| z.re * z.re).collect();
    let max_pivot = pivots.iter().cloned().fold(0.0, f64::max);
    let min_pivot = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max_pivot > 0.0) || min_pivot < RANK_TOLERANCE * max_pivot {
        return Err(NumericsError::RankDeficientCombiner);
    }

    let effective = w.adjoint().as_inner() * h.as_inner() * f.as_inner();
    let whitened = l
        .solve_lower_triangular(&effective)
        .ok_or(NumericsError::RankDeficientCombiner)?
        / Complex64::new(noise_var.sqrt(), 0.0);
    let n = w.cols();
    let k = DMatrix::<Complex64>::identity(n, n) + &whitened * whitened.adjoint();
    let chol_k = Cholesky::new(k).ok_or_else(|| {
        NumericsError::InvalidArgument("I + B B^H is not positive definite".into())
    })?;
    let log2_det: f64 = chol_k
        .l_dirty()
        .diagonal()
        .iter()
        .map(|z| 2.0 * z.re.log2())
        .sum();
    Ok(log2_det.max(0.0))
}
