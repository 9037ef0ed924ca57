//! Physical array quantities: the mutual-coupling impedance matrix of a
//! uniform linear array of isotropic radiators, its normalized real part,
//! steering vectors and the conditioning-gated symmetric square root.
//!
//! Spacings are dimensionless (in wavelengths), so the phase between
//! elements `i` and `j` is `2 pi d |i - j|`. Elements are indexed from zero.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::linalg::{eig_floor, fro, is_symmetric};
use crate::scalar::{cplx, phasor, real, Cplx, Real};

/// Complex `N x N` impedance matrix in Ohms together with the reference
/// (radiation) resistance `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceMatrix<T: Real> {
    entries: DMatrix<Cplx<T>>,
    ref_resistance: T,
}

impl<T: Real> ImpedanceMatrix<T> {
    pub fn new(entries: DMatrix<Cplx<T>>, ref_resistance: T) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        if !(ref_resistance > T::zero()) {
            return Err(invalid("ref_resistance", "must be positive"));
        }
        Ok(Self {
            entries,
            ref_resistance,
        })
    }

    /// `R * I`, the array without mutual coupling.
    pub fn uncoupled(n: usize, ref_resistance: T) -> Result<Self> {
        Self::new(
            DMatrix::from_diagonal_element(n, n, real(ref_resistance)),
            ref_resistance,
        )
    }

    /// Lossless reactance network `j X` (`X` real symmetric).
    pub fn from_reactance(reactance: &DMatrix<T>, ref_resistance: T) -> Result<Self> {
        Self::new(reactance.map(|x| cplx(T::zero(), x)), ref_resistance)
    }

    /// Adds the ohmic dissipation resistance `gamma * R` to every element.
    pub fn with_loss(&self, loss_ratio: T) -> Result<Self> {
        if !(loss_ratio >= T::zero()) {
            return Err(invalid("loss_ratio", "must be nonnegative"));
        }
        let mut entries = self.entries.clone();
        let extra = real(loss_ratio * self.ref_resistance);
        for i in 0..entries.nrows() {
            entries[(i, i)] += extra;
        }
        Ok(Self {
            entries,
            ref_resistance: self.ref_resistance,
        })
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Cplx<T>> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Cplx<T>> {
        self.entries
    }

    pub fn ref_resistance(&self) -> T {
        self.ref_resistance
    }

    pub fn real_part(&self) -> DMatrix<T> {
        self.entries.map(|z| z.re)
    }

    pub fn imag_part(&self) -> DMatrix<T> {
        self.entries.map(|z| z.im)
    }

    /// `Re(Z) = 0` up to `tol` (relative to the Frobenius norm).
    pub fn is_lossless(&self, tol: T) -> bool {
        let scale = fro(&self.entries).max(T::one());
        self.entries.iter().all(|z| z.re.abs() <= tol * scale)
    }

    /// `Z = Z^T` up to `tol` (relative to the Frobenius norm).
    pub fn is_reciprocal(&self, tol: T) -> bool {
        let scale = fro(&self.entries).max(T::one());
        is_symmetric(&self.entries, tol * scale)
    }
}

/// Mutual-coupling impedance matrix `Z_R` of an `n`-element ULA with
/// spacing `d` wavelengths.
///
/// Off-diagonal entries are `-R exp(-j x) / (j x)` with `x = 2 pi d |i - j|`,
/// i.e. `R sin(x)/x + j R cos(x)/x`; the diagonal is `R`.
pub fn build_coupling_matrix<T: Real>(n: usize, spacing: T, ref_resistance: T) -> Result<ImpedanceMatrix<T>> {
    if n == 0 {
        return Err(invalid("n", "array needs at least one element"));
    }
    if !(spacing > T::zero()) || !spacing.is_finite() {
        return Err(invalid("d", "spacing must be positive and finite"));
    }
    if !(ref_resistance > T::zero()) {
        return Err(invalid("ref_resistance", "must be positive"));
    }
    let by_offset: Vec<Cplx<T>> = (0..n)
        .map(|m| {
            if m == 0 {
                real(ref_resistance)
            } else {
                let x = T::two_pi() * spacing * T::from_count(m);
                cplx(ref_resistance * x.sin() / x, ref_resistance * x.cos() / x)
            }
        })
        .collect();
    let entries = DMatrix::from_fn(n, n, |i, j| by_offset[i.abs_diff(j)]);
    ImpedanceMatrix::new(entries, ref_resistance)
}

/// Real symmetric coupling matrix `C = Re(Z_R)/R + gamma I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix<T: Real> {
    entries: DMatrix<T>,
    loss_ratio: T,
}

impl<T: Real> CouplingMatrix<T> {
    /// Wraps an arbitrary real symmetric matrix (loss ratio recorded as zero).
    pub fn from_entries(entries: DMatrix<T>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        Ok(Self {
            entries,
            loss_ratio: T::zero(),
        })
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn loss_ratio(&self) -> T {
        self.loss_ratio
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// Eigendecomposition, without any conditioning gate.
    pub fn spectrum(&self) -> SymmetricEigen<T, nalgebra::Dyn> {
        self.entries.clone().symmetric_eigen()
    }

    /// Eigendecomposition that passed the relative eigenvalue floor.
    pub fn factor(&self) -> Result<SpdFactor<T>> {
        let eig = self.spectrum();
        let (min, max) = extremes(&eig.eigenvalues);
        let ratio = if max > T::zero() { (min / max).as_f64() } else { f64::NEG_INFINITY };
        let floor = eig_floor::<T>();
        if !(ratio >= floor) {
            return Err(Error::IllConditioned { ratio, floor });
        }
        Ok(SpdFactor {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    pub fn condition_number(&self) -> T {
        condition_number(self)
    }
}

fn extremes<T: Real>(values: &DVector<T>) -> (T, T) {
    values.iter().fold((T::max_value().unwrap(), T::min_value().unwrap()), |(lo, hi), &v| {
        (if v < lo { v } else { lo }, if v > hi { v } else { hi })
    })
}

/// `Re(Z_R)/R + gamma I`.
pub fn coupling_real_part<T: Real>(z_r: &ImpedanceMatrix<T>, loss_ratio: T) -> Result<CouplingMatrix<T>> {
    if !(loss_ratio >= T::zero()) {
        return Err(invalid("loss_ratio", "must be nonnegative"));
    }
    let r = z_r.ref_resistance();
    let n = z_r.size();
    let entries = DMatrix::from_fn(n, n, |i, j| {
        let c = z_r.entries()[(i, j)].re / r;
        if i == j {
            c + loss_ratio
        } else {
            c
        }
    });
    Ok(CouplingMatrix { entries, loss_ratio })
}

/// Eigenpairs of a symmetric positive definite matrix, used to evaluate
/// spectral functions (`C^{1/2}`, `C^{-1/2}`, `C^{-1}`).
#[derive(Debug, Clone)]
pub struct SpdFactor<T: Real> {
    values: DVector<T>,
    vectors: DMatrix<T>,
}

impl<T: Real> SpdFactor<T> {
    pub fn eigenvalues(&self) -> &DVector<T> {
        &self.values
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> DMatrix<T> {
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, k| {
            self.vectors[(i, k)] * f(self.values[k])
        });
        let m = scaled * self.vectors.transpose();
        (&m + m.transpose()) * T::lit(0.5)
    }

    pub fn sqrt(&self) -> DMatrix<T> {
        self.map(|v| v.sqrt())
    }

    pub fn inv_sqrt(&self) -> DMatrix<T> {
        self.map(|v| T::one() / v.sqrt())
    }

    pub fn inverse(&self) -> DMatrix<T> {
        self.map(|v| T::one() / v)
    }

    pub fn condition_number(&self) -> T {
        let (min, max) = extremes(&self.values);
        max / min
    }
}

/// Principal square root of a symmetric positive definite coupling matrix.
pub fn sqrt_spd<T: Real>(c: &CouplingMatrix<T>) -> Result<DMatrix<T>> {
    Ok(c.factor()?.sqrt())
}

/// Ratio of the extreme eigenvalues; `+inf` when the smallest is not positive.
pub fn condition_number<T: Real>(c: &CouplingMatrix<T>) -> T {
    let (min, max) = extremes(&c.spectrum().eigenvalues);
    if min <= T::zero() {
        T::max_value().unwrap_or_else(T::one)
    } else {
        max / min
    }
}

/// Unit-modulus ULA response `a_n = exp(-j n 2 pi d cos(alpha))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector<T: Real> {
    entries: DVector<Cplx<T>>,
    angle: T,
    spacing: T,
}

impl<T: Real> SteeringVector<T> {
    pub fn entries(&self) -> &DVector<Cplx<T>> {
        &self.entries
    }

    pub fn into_entries(self) -> DVector<Cplx<T>> {
        self.entries
    }

    pub fn angle(&self) -> T {
        self.angle
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }
}

pub fn steering_vector<T: Real>(n: usize, spacing: T, angle: T) -> SteeringVector<T> {
    let step = T::two_pi() * spacing * angle.cos();
    let entries = DVector::from_fn(n, |k, _| phasor(-step * T::from_count(k)));
    SteeringVector {
        entries,
        angle,
        spacing,
    }
}
