//! Decoupling-network algebra and channel assembly.
//!
//! The RIS channel between a single-antenna transmitter and receiver is
//!
//! ```text
//! z = z_DS - z_DR^T (Z_R + Z_N)^{-1} z_RS
//! ```
//!
//! with `Z_R` the coupled array impedance and `Z_N` the tunable lossless
//! load network. A lossless reciprocal `2N`-port inserted between the two
//! replaces `Z_N` by a transformed load; with the power-matching network the
//! channel takes the uncoupled form in the effective channels
//! `zbar = C^{-1/2} z`, where `C = Re(Z_R) / R`.

use nalgebra::{DMatrix, DVector};

use crate::coupling::{coupling_real_part, steering_vector, ImpedanceMatrix};
use crate::error::{invalid, Error, Result};
use crate::linalg::{checked_inverse, checked_solve, complexify, dot_t, fro, is_symmetric};
use crate::scalar::{cplx, modulus, real, Cplx, Real};

/// Lossless reciprocal `2N`-port, stored as its three distinct `N x N`
/// blocks. The lower-left block is `z12^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingNetwork<T: Real> {
    z11: DMatrix<Cplx<T>>,
    z12: DMatrix<Cplx<T>>,
    z22: DMatrix<Cplx<T>>,
}

impl<T: Real> DecouplingNetwork<T> {
    pub fn new(z11: DMatrix<Cplx<T>>, z12: DMatrix<Cplx<T>>, z22: DMatrix<Cplx<T>>) -> Result<Self> {
        let n = z11.nrows();
        for block in [&z11, &z12, &z22] {
            if block.nrows() != n || block.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: block.ncols().max(block.nrows()),
                });
            }
        }
        Ok(Self { z11, z12, z22 })
    }

    pub fn size(&self) -> usize {
        self.z11.nrows()
    }

    pub fn z11(&self) -> &DMatrix<Cplx<T>> {
        &self.z11
    }

    pub fn z12(&self) -> &DMatrix<Cplx<T>> {
        &self.z12
    }

    pub fn z22(&self) -> &DMatrix<Cplx<T>> {
        &self.z22
    }

    /// The full `2N x 2N` impedance matrix.
    pub fn full(&self) -> DMatrix<Cplx<T>> {
        let n = self.size();
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        out.view_mut((0, 0), (n, n)).copy_from(&self.z11);
        out.view_mut((0, n), (n, n)).copy_from(&self.z12);
        out.view_mut((n, 0), (n, n)).copy_from(&self.z12.transpose());
        out.view_mut((n, n), (n, n)).copy_from(&self.z22);
        out
    }

    pub fn is_lossless(&self, tol: T) -> bool {
        let full = self.full();
        let scale = fro(&full).max(T::one());
        full.iter().all(|z| z.re.abs() <= tol * scale)
    }

    pub fn is_reciprocal(&self, tol: T) -> bool {
        let full = self.full();
        let scale = fro(&full).max(T::one());
        is_symmetric(&full, tol * scale)
    }
}

/// Power-matching network `Z11 = 0`, `Z12 = -j sqrt(R) Re(Z_R)^{1/2}`,
/// `Z22 = -j Im(Z_R)`.
pub fn power_matching_network<T: Real>(z_r: &ImpedanceMatrix<T>) -> Result<DecouplingNetwork<T>> {
    let r = z_r.ref_resistance();
    let root = coupling_real_part(z_r, T::zero())?.factor()?.sqrt();
    let n = z_r.size();
    // sqrt(R) * Re(Z_R)^{1/2} = R * C^{1/2}
    let z12 = root.map(|s| cplx(T::zero(), -r * s));
    let z22 = z_r.imag_part().map(|x| cplx(T::zero(), -x));
    DecouplingNetwork::new(DMatrix::zeros(n, n), z12, z22)
}

/// Load seen through a decoupling network:
/// `Z22 - Z12^T (Z11 + Z_N)^{-1} Z12`.
pub fn apply_decoupling<T: Real>(den: &DecouplingNetwork<T>, z_n: &ImpedanceMatrix<T>) -> Result<ImpedanceMatrix<T>> {
    if den.size() != z_n.size() {
        return Err(Error::DimensionMismatch {
            expected: den.size(),
            got: z_n.size(),
        });
    }
    let inner = checked_inverse(&(den.z11() + z_n.entries()))?;
    let out = den.z22() - den.z12().transpose() * inner * den.z12();
    ImpedanceMatrix::new(out, z_n.ref_resistance())
}

/// Closed form of [`apply_decoupling`] for the power-matching network:
/// `-j Im(Z_R) + R Re(Z_R)^{1/2} Z_N^{-1} Re(Z_R)^{1/2}`.
pub fn power_matched_load<T: Real>(z_r: &ImpedanceMatrix<T>, z_n: &ImpedanceMatrix<T>) -> Result<ImpedanceMatrix<T>> {
    let r = z_r.ref_resistance();
    let root = complexify(&coupling_real_part(z_r, T::zero())?.factor()?.sqrt());
    let admittance = checked_inverse(z_n.entries())?;
    // R * (sqrt(R) C^{1/2}) Y (sqrt(R) C^{1/2}) = R^2 C^{1/2} Y C^{1/2}
    let load = (&root * admittance * &root) * real(r * r);
    let out = z_r.imag_part().map(|x| cplx(T::zero(), -x)) + load;
    ImpedanceMatrix::new(out, r)
}

/// SISO channel blocks: direct link `z_ds`, RIS-to-receiver `z_dr` and
/// transmitter-to-RIS `z_rs`, all in Ohms.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTriple<T: Real> {
    pub z_ds: Cplx<T>,
    pub z_dr: DVector<Cplx<T>>,
    pub z_rs: DVector<Cplx<T>>,
    /// Power pathloss `gamma_DR` (the channel carries its square root).
    pub pathloss_dr: T,
    /// Power pathloss `gamma_RS`.
    pub pathloss_rs: T,
    pub ref_resistance: T,
}

impl<T: Real> ChannelTriple<T> {
    /// Arbitrary channel blocks with unit pathlosses.
    pub fn new(z_ds: Cplx<T>, z_dr: DVector<Cplx<T>>, z_rs: DVector<Cplx<T>>, ref_resistance: T) -> Result<Self> {
        if z_dr.len() != z_rs.len() {
            return Err(Error::DimensionMismatch {
                expected: z_dr.len(),
                got: z_rs.len(),
            });
        }
        if !(ref_resistance > T::zero()) {
            return Err(invalid("ref_resistance", "must be positive"));
        }
        let finite = |z: &Cplx<T>| z.re.is_finite() && z.im.is_finite();
        if !finite(&z_ds) || !z_dr.iter().all(finite) || !z_rs.iter().all(finite) {
            return Err(invalid("channel", "entries must be finite"));
        }
        Ok(Self {
            z_ds,
            z_dr,
            z_rs,
            pathloss_dr: T::one(),
            pathloss_rs: T::one(),
            ref_resistance,
        })
    }

    /// Line-of-sight ULA channels `z_dr = sqrt(gamma_DR) R a(alpha_rx)`,
    /// `z_rs = sqrt(gamma_RS) R a(alpha_tx)`.
    pub fn line_of_sight(scenario: &LosScenario<T>) -> Result<Self> {
        let s = scenario;
        if s.elements == 0 {
            return Err(invalid("n", "array needs at least one element"));
        }
        if !(s.pathloss_dr >= T::zero()) || !(s.pathloss_rs >= T::zero()) {
            return Err(invalid("pathloss", "must be nonnegative"));
        }
        let r = s.ref_resistance;
        let a_dr = steering_vector(s.elements, s.spacing, s.angle_rx).into_entries();
        let a_rs = steering_vector(s.elements, s.spacing, s.angle_tx).into_entries();
        let mut triple = Self::new(
            s.z_ds,
            a_dr * real(s.pathloss_dr.sqrt() * r),
            a_rs * real(s.pathloss_rs.sqrt() * r),
            r,
        )?;
        triple.pathloss_dr = s.pathloss_dr;
        triple.pathloss_rs = s.pathloss_rs;
        Ok(triple)
    }

    pub fn size(&self) -> usize {
        self.z_dr.len()
    }

    /// Channel gain of a single element, `gamma_DR gamma_RS R^2`.
    pub fn single_element_gain(&self) -> T {
        self.pathloss_dr * self.pathloss_rs * self.ref_resistance * self.ref_resistance
    }

    fn with_blocks(&self, z_dr: DVector<Cplx<T>>, z_rs: DVector<Cplx<T>>) -> Self {
        Self {
            z_ds: self.z_ds,
            z_dr,
            z_rs,
            ..self.clone()
        }
    }
}

/// Geometry and physics of a line-of-sight SISO link through a ULA RIS.
#[derive(Debug, Clone, PartialEq)]
pub struct LosScenario<T: Real> {
    pub elements: usize,
    /// Element spacing in wavelengths.
    pub spacing: T,
    pub angle_tx: T,
    pub angle_rx: T,
    /// Ohmic loss ratio `R_d / R`.
    pub loss_ratio: T,
    pub ref_resistance: T,
    pub pathloss_dr: T,
    pub pathloss_rs: T,
    pub z_ds: Cplx<T>,
}

impl<T: Real> LosScenario<T> {
    /// Unit pathlosses, `R = 1`, no direct link, lossless.
    pub fn new(elements: usize, spacing: T, angle_tx: T, angle_rx: T) -> Self {
        Self {
            elements,
            spacing,
            angle_tx,
            angle_rx,
            loss_ratio: T::zero(),
            ref_resistance: T::one(),
            pathloss_dr: T::one(),
            pathloss_rs: T::one(),
            z_ds: Cplx::new(T::zero(), T::zero()),
        }
    }

    /// Coupled array impedance including ohmic losses.
    pub fn array_impedance(&self) -> Result<ImpedanceMatrix<T>> {
        crate::coupling::build_coupling_matrix(self.elements, self.spacing, self.ref_resistance)?
            .with_loss(self.loss_ratio)
    }

    /// `(1 + gamma) R I`, the same array with coupling removed.
    pub fn uncoupled_impedance(&self) -> Result<ImpedanceMatrix<T>> {
        ImpedanceMatrix::uncoupled(self.elements, self.ref_resistance)?.with_loss(self.loss_ratio)
    }

    pub fn channels(&self) -> Result<ChannelTriple<T>> {
        ChannelTriple::line_of_sight(self)
    }
}

/// Effective channels behind the power-matching network:
/// `zbar_DR = C^{-1/2} z_DR`, `zbar_RS = C^{-1/2} z_RS` (`z_DS` unchanged).
pub fn effective_channels<T: Real>(triple: &ChannelTriple<T>, z_r: &ImpedanceMatrix<T>) -> Result<ChannelTriple<T>> {
    if triple.size() != z_r.size() {
        return Err(Error::DimensionMismatch {
            expected: z_r.size(),
            got: triple.size(),
        });
    }
    let w = complexify(&coupling_real_part(z_r, T::zero())?.factor()?.inv_sqrt());
    Ok(triple.with_blocks(&w * &triple.z_dr, &w * &triple.z_rs))
}

/// `Theta = (Z_N - R I)(Z_N + R I)^{-1}`.
pub fn impedance_to_scattering<T: Real>(z_n: &ImpedanceMatrix<T>) -> Result<DMatrix<Cplx<T>>> {
    let n = z_n.size();
    let rid = DMatrix::from_diagonal_element(n, n, real(z_n.ref_resistance()));
    let inv = checked_inverse(&(z_n.entries() + &rid))?;
    Ok((z_n.entries() - rid) * inv)
}

/// `Z_N = R (I + Theta)(I - Theta)^{-1}`.
pub fn scattering_to_impedance<T: Real>(theta: &DMatrix<Cplx<T>>, ref_resistance: T) -> Result<ImpedanceMatrix<T>> {
    if !theta.is_square() {
        return Err(Error::DimensionMismatch {
            expected: theta.nrows(),
            got: theta.ncols(),
        });
    }
    let n = theta.nrows();
    let id = DMatrix::<Cplx<T>>::identity(n, n);
    let inv = checked_inverse(&(&id - theta))?;
    ImpedanceMatrix::new((id + theta) * inv * real(ref_resistance), ref_resistance)
}

/// Tunable reflection state of the RIS.
#[derive(Debug, Clone, PartialEq)]
pub enum RisConfig<T: Real> {
    /// Unit-modulus phase vector. With [`Wiring::Decoupled`] this is the
    /// equivalent scattering `thetabar = -Theta` behind the network.
    Diagonal(DVector<Cplx<T>>),
    /// Fully-connected BD-RIS at its optimal gain; only the value is known.
    BdValue,
    /// Explicit lossless reciprocal load network.
    Impedance(ImpedanceMatrix<T>),
}

impl<T: Real> RisConfig<T> {
    /// Checked diagonal configuration (`|theta_n| = 1`).
    pub fn diagonal(phases: DVector<Cplx<T>>) -> Result<Self> {
        let tol = T::lit(1e-12).max(T::default_epsilon() * T::lit(10.0));
        if phases.iter().any(|z| (modulus(*z) - T::one()).abs() > tol) {
            return Err(invalid("phases", "entries must have unit modulus"));
        }
        Ok(Self::Diagonal(phases))
    }

    /// Checked impedance configuration (lossless and reciprocal).
    pub fn impedance(z_n: ImpedanceMatrix<T>) -> Result<Self> {
        let tol = T::lit(1e-10).max(T::default_epsilon() * T::lit(100.0));
        if !z_n.is_lossless(tol) || !z_n.is_reciprocal(tol) {
            return Err(invalid("z_n", "load network must be lossless and reciprocal"));
        }
        Ok(Self::Impedance(z_n))
    }
}

/// Whether a power-matching decoupling network sits between the array and
/// the tunable loads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wiring {
    Conventional,
    Decoupled,
}

/// `z_ds - z_dr^T (Z_R + Z_N)^{-1} z_rs` through the impedance path.
///
/// Diagonal configurations are mapped to loads through
/// `Z_N = scattering_to_impedance(diag(theta))` (conventional) or
/// `diag(-thetabar)` followed by the power-matching transform (decoupled).
pub fn assemble_channel<T: Real>(
    triple: &ChannelTriple<T>,
    z_r: &ImpedanceMatrix<T>,
    config: &RisConfig<T>,
    wiring: Wiring,
) -> Result<Cplx<T>> {
    let n = z_r.size();
    if triple.size() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: triple.size(),
        });
    }
    match (config, wiring) {
        (RisConfig::BdValue, _) => Err(invalid("config", "BD value configuration carries no load network")),
        (RisConfig::Impedance(z_n), Wiring::Conventional) => through_load(triple, z_r, z_n.entries()),
        (RisConfig::Impedance(z_n), Wiring::Decoupled) => {
            let load = apply_decoupling(&power_matching_network(z_r)?, z_n)?;
            through_load(triple, z_r, load.entries())
        }
        (RisConfig::Diagonal(theta), Wiring::Conventional) => {
            check_len(theta.len(), n)?;
            // Z_R + Z_N = M (I - Theta)^{-1} with M = Z_R (I - Theta) + R (I + Theta),
            // which stays regular for open-circuited elements (theta = 1).
            let r = real(z_r.ref_resistance());
            let one = real(T::one());
            let mut m = z_r.entries().clone();
            for (j, &t) in theta.iter().enumerate() {
                let factor = one - t;
                for x in m.column_mut(j).iter_mut() {
                    *x *= factor;
                }
                m[(j, j)] += r * (one + t);
            }
            let u = checked_solve(&m, &triple.z_rs)?;
            let w = DVector::from_fn(n, |i, _| (one - theta[i]) * u[i]);
            Ok(triple.z_ds - dot_t(&triple.z_dr, &w))
        }
        (RisConfig::Diagonal(theta_bar), Wiring::Decoupled) => {
            check_len(theta_bar.len(), n)?;
            // Z_N^{-1} = (1/R)(I - Theta)(I + Theta)^{-1} with Theta = -thetabar.
            let r = z_r.ref_resistance();
            let one = real(T::one());
            let mut admittance = DVector::zeros(n);
            for (k, &t) in theta_bar.iter().enumerate() {
                let y = (one + t) / ((one - t) * real(r));
                if !(y.re.is_finite() && y.im.is_finite()) {
                    return Err(Error::SingularNetwork {
                        rcond: 0.0,
                        floor: crate::linalg::RCOND_FLOOR,
                    });
                }
                admittance[k] = y;
            }
            let root = complexify(&coupling_real_part(z_r, T::zero())?.factor()?.sqrt());
            let load = z_r.imag_part().map(|x| cplx(T::zero(), -x))
                + (&root * DMatrix::from_diagonal(&admittance) * &root) * real(r * r);
            through_load(triple, z_r, &load)
        }
    }
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

fn through_load<T: Real>(triple: &ChannelTriple<T>, z_r: &ImpedanceMatrix<T>, load: &DMatrix<Cplx<T>>) -> Result<Cplx<T>> {
    check_len(load.nrows(), z_r.size())?;
    let u = checked_solve(&(z_r.entries() + load), &triple.z_rs)?;
    Ok(triple.z_ds - dot_t(&triple.z_dr, &u))
}

/// Matrix channel `Z_DS - Z_DR (Z_R + Z_N)^{-1} Z_RS` for `K` receive and
/// `M` transmit antennas (`Z_DR` is `K x N`, `Z_RS` is `N x M`).
pub fn assemble_channel_matrix<T: Real>(
    z_ds: &DMatrix<Cplx<T>>,
    z_dr: &DMatrix<Cplx<T>>,
    z_rs: &DMatrix<Cplx<T>>,
    z_r: &ImpedanceMatrix<T>,
    z_n: &ImpedanceMatrix<T>,
) -> Result<DMatrix<Cplx<T>>> {
    let n = z_r.size();
    check_len(z_dr.ncols(), n)?;
    check_len(z_rs.nrows(), n)?;
    check_len(z_n.size(), n)?;
    check_len(z_ds.nrows(), z_dr.nrows())?;
    check_len(z_ds.ncols(), z_rs.ncols())?;
    let inv = checked_inverse(&(z_r.entries() + z_n.entries()))?;
    Ok(z_ds - z_dr * inv * z_rs)
}

/// Decoupled channel in scattering form,
/// `z_ds + (1/2R) zbar_dr^T (Thetabar - I) zbar_rs`, for effective channels.
pub fn decoupled_channel_scattering<T: Real>(effective: &ChannelTriple<T>, theta_bar: &DMatrix<Cplx<T>>) -> Result<Cplx<T>> {
    let n = effective.size();
    check_len(theta_bar.nrows(), n)?;
    check_len(theta_bar.ncols(), n)?;
    let shifted = theta_bar - DMatrix::<Cplx<T>>::identity(n, n);
    let half = real(T::one() / (T::lit(2.0) * effective.ref_resistance));
    Ok(effective.z_ds + dot_t(&effective.z_dr, &(shifted * &effective.z_rs)) * half)
}

/// Decoupled channel with a diagonal phase vector, without forming matrices.
pub fn decoupled_channel_diagonal<T: Real>(effective: &ChannelTriple<T>, theta_bar: &DVector<Cplx<T>>) -> Result<Cplx<T>> {
    check_len(theta_bar.len(), effective.size())?;
    let half = real(T::one() / (T::lit(2.0) * effective.ref_resistance));
    let one = real(T::one());
    let sum = effective
        .z_dr
        .iter()
        .zip(effective.z_rs.iter())
        .zip(theta_bar.iter())
        .fold(real(T::zero()), |acc, ((a, b), t)| acc + *a * *b * (*t - one));
    Ok(effective.z_ds + sum * half)
}

/// Decoupled channel in impedance form,
/// `z_ds - zbar_dr^T (R I + Zbar_N)^{-1} zbar_rs`, for effective channels.
pub fn decoupled_channel_impedance<T: Real>(effective: &ChannelTriple<T>, load: &DMatrix<Cplx<T>>) -> Result<Cplx<T>> {
    let n = effective.size();
    check_len(load.nrows(), n)?;
    let m = load + DMatrix::from_diagonal_element(n, n, real(effective.ref_resistance));
    let u = checked_solve(&m, &effective.z_rs)?;
    Ok(effective.z_ds - dot_t(&effective.z_dr, &u))
}

/// Fully-connected load that realizes the decoupled BD channel without a
/// decoupling network: `-j Im(Z_R) + (j/R) Re(Z_R)^{1/2} X' Re(Z_R)^{1/2}`.
pub fn bd_equivalent_network<T: Real>(x_prime: &DMatrix<T>, z_r: &ImpedanceMatrix<T>) -> Result<ImpedanceMatrix<T>> {
    check_len(x_prime.nrows(), z_r.size())?;
    check_len(x_prime.ncols(), z_r.size())?;
    let root = coupling_real_part(z_r, T::zero())?.factor()?.sqrt();
    // (1/R) (sqrt(R) C^{1/2}) X' (sqrt(R) C^{1/2}) = C^{1/2} X' C^{1/2}
    let inner = &root * x_prime * &root;
    let inner = (&inner + inner.transpose()) * T::lit(0.5);
    let out = DMatrix::from_fn(z_r.size(), z_r.size(), |i, j| {
        cplx(T::zero(), inner[(i, j)] - z_r.entries()[(i, j)].im)
    });
    ImpedanceMatrix::new(out, z_r.ref_resistance())
}
