//! SISO channel-gain maximization.
//!
//! Behind the power-matching network the channel reads
//! `z = z_DS + (1/2R) zbar_DR^T (Thetabar - I) zbar_RS`, which is maximized
//! in closed form for diagonal and fully-connected reflection. Without the
//! network the coupled model has no closed form; two baselines are
//! provided for it (phases that ignore coupling, and gradient ascent).

use std::fmt;

use nalgebra::DVector;

use crate::coupling::{coupling_real_part, ImpedanceMatrix};
use crate::error::{Error, Result};
use crate::linalg::{checked_inverse, dot_t};
use crate::network::{assemble_channel, effective_channels, ChannelTriple, RisConfig, Wiring};
use crate::scalar::{arg_or_zero, modulus, phasor, real, Cplx, Real};

/// Which architecture or algorithm produced a [`GainResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    DecoupledDiagonal,
    Bd,
    Uncoupled,
    IgnoreMc,
    GradientCoupled,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::DecoupledDiagonal,
        Method::Bd,
        Method::Uncoupled,
        Method::IgnoreMc,
        Method::GradientCoupled,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::DecoupledDiagonal => "decoupled_diag",
            Method::Bd => "bd",
            Method::Uncoupled => "uncoupled",
            Method::IgnoreMc => "ignore_mc",
            Method::GradientCoupled => "gradient",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics<T: Real> {
    pub iterations: usize,
    pub converged: bool,
    /// Condition number of the coupling matrix, when one was factored.
    pub condition_number: Option<T>,
    /// Objective after every accepted step (iterative methods only).
    pub history: Vec<T>,
}

impl<T: Real> Default for Diagnostics<T> {
    fn default() -> Self {
        Self {
            iterations: 0,
            converged: true,
            condition_number: None,
            history: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainResult<T: Real> {
    pub method: Method,
    /// `|z|^2` in Ohms^2.
    pub channel_gain: T,
    /// `channel_gain / (gamma_DR gamma_RS R^2)`.
    pub array_gain: T,
    pub config: RisConfig<T>,
    pub diagnostics: Diagnostics<T>,
}

impl<T: Real> GainResult<T> {
    fn new(method: Method, channel_gain: T, triple: &ChannelTriple<T>, config: RisConfig<T>) -> Self {
        Self {
            method,
            channel_gain,
            array_gain: normalized(channel_gain, triple),
            config,
            diagnostics: Diagnostics::default(),
        }
    }

    fn with_condition(mut self, condition: T) -> Self {
        self.diagnostics.condition_number = Some(condition);
        self
    }
}

fn normalized<T: Real>(channel_gain: T, triple: &ChannelTriple<T>) -> T {
    let unit = triple.single_element_gain();
    if unit > T::zero() {
        channel_gain / unit
    } else {
        T::zero()
    }
}

/// `z_DS - (1/2R) zbar_DR^T zbar_RS`, the part of the channel every
/// reflection configuration adds to.
fn anchor<T: Real>(effective: &ChannelTriple<T>) -> Cplx<T> {
    let half = real(T::one() / (T::lit(2.0) * effective.ref_resistance));
    effective.z_ds - dot_t(&effective.z_dr, &effective.z_rs) * half
}

/// Co-phasing vector: `arg(thetabar_n) = arg(anchor) - arg(zbar_DR,n zbar_RS,n)`,
/// with `arg(0) = 0`.
pub fn optimal_phase_vector<T: Real>(effective: &ChannelTriple<T>) -> DVector<Cplx<T>> {
    let reference = arg_or_zero(anchor(effective));
    DVector::from_fn(effective.size(), |n, _| {
        phasor(reference - arg_or_zero(effective.z_dr[n] * effective.z_rs[n]))
    })
}

pub fn optimal_diagonal_phases<T: Real>(effective: &ChannelTriple<T>) -> RisConfig<T> {
    RisConfig::Diagonal(optimal_phase_vector(effective))
}

/// `(|anchor| + (1/2R) sum_n |zbar_DR,n| |zbar_RS,n|)^2` with the achieving phases.
pub fn closed_form_diagonal_gain<T: Real>(effective: &ChannelTriple<T>) -> GainResult<T> {
    let half = T::one() / (T::lit(2.0) * effective.ref_resistance);
    let coherent = effective
        .z_dr
        .iter()
        .zip(effective.z_rs.iter())
        .fold(T::zero(), |acc, (a, b)| acc + modulus(*a) * modulus(*b));
    let amplitude = modulus(anchor(effective)) + half * coherent;
    GainResult::new(
        Method::DecoupledDiagonal,
        amplitude * amplitude,
        effective,
        optimal_diagonal_phases(effective),
    )
}

/// Fully-connected BD-RIS gain
/// `(|anchor| + (1/2R) |zbar_DR|_2 |zbar_RS|_2)^2`; the achieving
/// scattering matrix is not constructed.
pub fn bd_gain<T: Real>(effective: &ChannelTriple<T>) -> GainResult<T> {
    let half = T::one() / (T::lit(2.0) * effective.ref_resistance);
    let norm = |v: &DVector<Cplx<T>>| v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
    let amplitude = modulus(anchor(effective)) + half * norm(&effective.z_dr) * norm(&effective.z_rs);
    GainResult::new(Method::Bd, amplitude * amplitude, effective, RisConfig::BdValue)
}

/// Decoupled diagonal RIS on the raw channels: effective channels followed
/// by the closed-form optimum.
pub fn decoupled_diagonal<T: Real>(raw: &ChannelTriple<T>, z_r: &ImpedanceMatrix<T>) -> Result<GainResult<T>> {
    let condition = coupling_real_part(z_r, T::zero())?.condition_number();
    let effective = effective_channels(raw, z_r)?;
    Ok(closed_form_diagonal_gain(&effective).with_condition(condition))
}

/// Fully-connected BD-RIS on the raw channels (identical with or without
/// the decoupling network).
pub fn decoupled_bd<T: Real>(raw: &ChannelTriple<T>, z_r: &ImpedanceMatrix<T>) -> Result<GainResult<T>> {
    let condition = coupling_real_part(z_r, T::zero())?.condition_number();
    let effective = effective_channels(raw, z_r)?;
    Ok(bd_gain(&effective).with_condition(condition))
}

/// Closed-form optimum of an array without mutual coupling; `uncoupled`
/// should be `(1 + gamma) R I`.
pub fn uncoupled_diagonal<T: Real>(raw: &ChannelTriple<T>, uncoupled: &ImpedanceMatrix<T>) -> Result<GainResult<T>> {
    let mut result = decoupled_diagonal(raw, uncoupled)?;
    result.method = Method::Uncoupled;
    Ok(result)
}

/// Phases optimized as if `Z_R = R I`, evaluated through the true coupled
/// model without a decoupling network.
pub fn ignore_mc_baseline<T: Real>(raw: &ChannelTriple<T>, z_r: &ImpedanceMatrix<T>) -> Result<GainResult<T>> {
    let phases = optimal_phase_vector(raw);
    let config = RisConfig::Diagonal(phases);
    let z = assemble_channel(raw, z_r, &config, Wiring::Conventional)?;
    let condition = coupling_real_part(z_r, T::zero())?.condition_number();
    Ok(GainResult::new(Method::IgnoreMc, z.norm_sqr(), raw, config).with_condition(condition))
}

/// Settings of the gradient baseline (Armijo backtracking ascent).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientOptions {
    pub max_iters: usize,
    /// Stop when the relative objective improvement of a step drops below this.
    pub tol: f64,
    pub initial_step: f64,
    pub shrink: f64,
    pub slope_factor: f64,
    /// Maximum number of step halvings before the iterate is declared stationary.
    pub max_backtracks: usize,
}

impl Default for GradientOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            tol: 1e-9,
            initial_step: 1.0,
            shrink: 0.5,
            slope_factor: 1e-4,
            max_backtracks: 60,
        }
    }
}

/// `|z(phi)|^2` of the conventional diagonal RIS with `theta_n = exp(j phi_n)`.
pub fn coupled_objective<T: Real>(raw: &ChannelTriple<T>, z_r: &ImpedanceMatrix<T>, phases: &DVector<T>) -> Result<T> {
    let theta = phases.map(phasor);
    Ok(assemble_channel(raw, z_r, &RisConfig::Diagonal(theta), Wiring::Conventional)?.norm_sqr())
}

/// Objective and its gradient with respect to the phases `phi`.
///
/// With `M = Z_R (I - Theta) + R (I + Theta)` the channel is
/// `z = z_DS - z_DR^T (I - Theta) M^{-1} z_RS`, and
/// `dz/dphi_n = p_n j theta_n u_n` where `u = M^{-1} z_RS` and
/// `p = z_DR + (R I - Z_R)^T M^{-T} (I - Theta) z_DR`.
pub fn coupled_objective_gradient<T: Real>(
    raw: &ChannelTriple<T>,
    z_r: &ImpedanceMatrix<T>,
    phases: &DVector<T>,
) -> Result<(T, DVector<T>)> {
    let n = z_r.size();
    if phases.len() != n || raw.size() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: phases.len().min(raw.size()),
        });
    }
    let r = real(z_r.ref_resistance());
    let one = real(T::one());
    let theta = phases.map(phasor);
    let mut m = z_r.entries().clone();
    for j in 0..n {
        let factor = one - theta[j];
        for x in m.column_mut(j).iter_mut() {
            *x *= factor;
        }
        m[(j, j)] += r * (one + theta[j]);
    }
    let m_inv = checked_inverse(&m)?;
    let u = &m_inv * &raw.z_rs;
    let masked = DVector::from_fn(n, |i, _| (one - theta[i]) * raw.z_dr[i]);
    let w = m_inv.transpose() * &masked;
    let z = raw.z_ds - dot_t(&masked, &u);
    let mut shifted = -z_r.entries().transpose();
    for i in 0..n {
        shifted[(i, i)] += r;
    }
    let p = &raw.z_dr + shifted * w;
    let j = Cplx::new(T::zero(), T::one());
    let grad = DVector::from_fn(n, |k, _| {
        let dz = p[k] * j * theta[k] * u[k];
        T::lit(2.0) * (z.conj() * dz).re
    });
    Ok((z.norm_sqr(), grad))
}

/// Projected gradient ascent on the phases of the conventional diagonal RIS,
/// started from the [`ignore_mc_baseline`] solution.
pub fn gradient_coupled_baseline<T: Real>(
    raw: &ChannelTriple<T>,
    z_r: &ImpedanceMatrix<T>,
    opts: &GradientOptions,
) -> Result<GainResult<T>> {
    let start = optimal_phase_vector(raw).map(arg_or_zero);
    gradient_ascent_from(raw, z_r, start, opts)
}

/// Gradient ascent from an arbitrary starting phase vector.
pub fn gradient_ascent_from<T: Real>(
    raw: &ChannelTriple<T>,
    z_r: &ImpedanceMatrix<T>,
    start: DVector<T>,
    opts: &GradientOptions,
) -> Result<GainResult<T>> {
    let condition = coupling_real_part(z_r, T::zero())?.condition_number();
    let (shrink, slope) = (T::lit(opts.shrink), T::lit(opts.slope_factor));
    let tol = T::lit(opts.tol);
    let mut phases = start;
    let (mut value, mut grad) = coupled_objective_gradient(raw, z_r, &phases)?;
    let mut history = vec![value];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        let slope_sq = grad.norm_squared();
        if slope_sq == T::zero() {
            converged = true;
            break;
        }
        let mut step = T::lit(opts.initial_step);
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let candidate = (&phases + &grad * step).map(wrap_phase);
            let trial = coupled_objective(raw, z_r, &candidate)?;
            if trial >= value + slope * step * slope_sq {
                accepted = Some((candidate, trial));
                break;
            }
            step *= shrink;
        }
        let Some((candidate, trial)) = accepted else {
            // no ascent step found at machine resolution: stationary
            converged = true;
            break;
        };
        iterations += 1;
        let gain = (trial - value) / value.max(T::lit(f64::MIN_POSITIVE));
        phases = candidate;
        let (v, g) = coupled_objective_gradient(raw, z_r, &phases)?;
        value = v;
        grad = g;
        history.push(value);
        if gain < tol {
            converged = true;
            break;
        }
    }

    let config = RisConfig::Diagonal(phases.map(phasor));
    let mut result = GainResult::new(Method::GradientCoupled, value, raw, config).with_condition(condition);
    result.diagnostics.iterations = iterations;
    result.diagnostics.converged = converged;
    result.diagnostics.history = history;
    Ok(result)
}

fn wrap_phase<T: Real>(phi: T) -> T {
    let turn = T::two_pi();
    let wrapped = phi - turn * ((phi + T::pi()) / turn).floor();
    wrapped
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::build_coupling_matrix;
    use crate::network::{decoupled_channel_diagonal, LosScenario};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    type C64 = Cplx<f64>;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<C64> {
        DVector::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_triple(rng: &mut ChaCha8Rng, n: usize) -> ChannelTriple<f64> {
        let z_ds = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        ChannelTriple::new(z_ds, random_vec(rng, n), random_vec(rng, n), 1.0).unwrap()
    }

    #[test]
    fn symmetric_channels_cophase() {
        let ones = DVector::from_element(2, C64::new(1.0, 0.0));
        let t = ChannelTriple::new(C64::new(0.0, 0.0), ones.clone(), ones, 1.0).unwrap();
        let phases = optimal_phase_vector(&t);
        assert_eq!(phases[0], phases[1]);
        let z = decoupled_channel_diagonal(&t, &phases).unwrap();
        // (1/2)(sum of |products|) + |anchor| = 1 + 1
        assert_relative_eq!(z.norm_sqr(), 4.0, epsilon = 1e-14);
        assert_relative_eq!(closed_form_diagonal_gain(&t).channel_gain, 4.0, epsilon = 1e-14);
    }

    #[test]
    fn single_element_normalization() {
        let s = LosScenario { ref_resistance: 75.0, pathloss_dr: 0.5, pathloss_rs: 0.1, ..LosScenario::new(1, 0.3, 0.2, 2.0) };
        let raw = s.channels().unwrap();
        let z_r = s.array_impedance().unwrap();
        let g = decoupled_diagonal(&raw, &z_r).unwrap();
        assert_relative_eq!(g.channel_gain, 0.5 * 0.1 * 75.0 * 75.0, max_relative = 1e-12);
        assert_relative_eq!(g.array_gain, 1.0, max_relative = 1e-12);
        let ph = match &g.config {
            RisConfig::Diagonal(p) => p.clone(),
            _ => unreachable!(),
        };
        let z = assemble_channel(&raw, &z_r, &RisConfig::Diagonal(ph), Wiring::Decoupled).unwrap();
        assert_relative_eq!(z.norm_sqr(), g.channel_gain, max_relative = 1e-12);
        let ig = ignore_mc_baseline(&raw, &z_r).unwrap();
        assert_relative_eq!(ig.array_gain, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_beats_random_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let t = random_triple(&mut rng, 5);
        let best = closed_form_diagonal_gain(&t);
        let phases = optimal_phase_vector(&t);
        let z = decoupled_channel_diagonal(&t, &phases).unwrap();
        assert_relative_eq!(z.norm_sqr(), best.channel_gain, max_relative = 1e-9);
        for _ in 0..1000 {
            let p = DVector::from_fn(5, |_, _| C64::from_polar(1.0, rng.gen_range(-PI..PI)));
            assert!(decoupled_channel_diagonal(&t, &p).unwrap().norm_sqr() <= best.channel_gain * (1.0 + 1e-12));
        }
    }

    #[test]
    fn no_ris_link_gain_is_direct() {
        let t = ChannelTriple::new(C64::new(0.3, -0.4), DVector::zeros(3), DVector::from_element(3, C64::new(1.0, 0.0)), 1.0).unwrap();
        assert_relative_eq!(closed_form_diagonal_gain(&t).channel_gain, 0.25, epsilon = 1e-15);
        assert_relative_eq!(bd_gain(&t).channel_gain, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn front_fire_half_wavelength() {
        let s = LosScenario::new(4, 0.5, FRAC_PI_2, FRAC_PI_2);
        let g = decoupled_diagonal(&s.channels().unwrap(), &s.array_impedance().unwrap()).unwrap();
        assert_relative_eq!(g.array_gain, 16.0, max_relative = 1e-12);
    }

    #[test]
    fn bd_dominates_and_matches_on_aligned_moduli() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for n in 1..=8 {
            let t = random_triple(&mut rng, n);
            assert!(bd_gain(&t).channel_gain >= closed_form_diagonal_gain(&t).channel_gain * (1.0 - 1e-14));
        }
        // |zbar_DR| proportional to |zbar_RS| entrywise: Cauchy-Schwarz is tight
        let a = random_vec(&mut rng, 4);
        let b = DVector::from_fn(4, |i, _| a[i].conj() * 2.0);
        let t = ChannelTriple::new(C64::new(0.2, 0.1), a, b, 1.0).unwrap();
        assert_relative_eq!(bd_gain(&t).channel_gain, closed_form_diagonal_gain(&t).channel_gain, max_relative = 1e-12);
    }

    #[test]
    fn ignore_mc_is_exact_without_coupling() {
        let s = LosScenario::new(5, 0.5, 0.4, 1.9);
        let raw = s.channels().unwrap();
        let id = ImpedanceMatrix::uncoupled(5, 1.0).unwrap();
        let ig = ignore_mc_baseline(&raw, &id).unwrap();
        let cf = closed_form_diagonal_gain(&raw);
        assert_relative_eq!(ig.channel_gain, cf.channel_gain, max_relative = 1e-12);
    }

    #[test]
    fn ignore_mc_loses_at_small_spacing_end_fire() {
        let s = LosScenario::new(4, 1.0 / 32.0, 0.0, PI);
        let raw = s.channels().unwrap();
        let z_r = s.array_impedance().unwrap();
        let ig = ignore_mc_baseline(&raw, &z_r).unwrap();
        let dec = decoupled_diagonal(&raw, &z_r).unwrap();
        assert!(ig.array_gain < dec.array_gain);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for (n, d) in [(3, 0.2), (5, 0.35), (4, 0.5)] {
            let raw = random_triple(&mut rng, n);
            let z_r = build_coupling_matrix(n, d, 1.0).unwrap();
            for _ in 0..5 {
                let phi = DVector::from_fn(n, |_, _| rng.gen_range(-PI..PI));
                let (_, g) = coupled_objective_gradient(&raw, &z_r, &phi).unwrap();
                let h = 1e-6;
                for k in 0..n {
                    let mut up = phi.clone();
                    up[k] += h;
                    let mut dn = phi.clone();
                    dn[k] -= h;
                    let fd = (coupled_objective(&raw, &z_r, &up).unwrap() - coupled_objective(&raw, &z_r, &dn).unwrap()) / (2.0 * h);
                    assert!((fd - g[k]).abs() <= 1e-4 * fd.abs().max(g[k].abs()).max(1e-8), "fd={fd} g={}", g[k]);
                }
            }
        }
    }

    #[test]
    fn gradient_recovers_uncoupled_optimum_from_random_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for n in [2, 4, 6] {
            let raw = random_triple(&mut rng, n);
            let id = ImpedanceMatrix::uncoupled(n, 1.0).unwrap();
            let start = DVector::from_fn(n, |_, _| rng.gen_range(-PI..PI));
            let res = gradient_ascent_from(&raw, &id, start, &GradientOptions { tol: 1e-14, ..Default::default() }).unwrap();
            let best = closed_form_diagonal_gain(&raw).channel_gain;
            assert!((res.channel_gain - best).abs() <= 1e-6 * best, "n={n} {} vs {best}", res.channel_gain);
            assert!(res.diagnostics.history.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn gradient_improves_on_ignore_mc() {
        let s = LosScenario::new(4, 0.2, 0.0, 2.0);
        let raw = s.channels().unwrap();
        let z_r = s.array_impedance().unwrap();
        let ig = ignore_mc_baseline(&raw, &z_r).unwrap();
        let gr = gradient_coupled_baseline(&raw, &z_r, &GradientOptions::default()).unwrap();
        assert!(gr.channel_gain >= ig.channel_gain);
        assert_relative_eq!(gr.diagnostics.history[0], ig.channel_gain, max_relative = 1e-12);
        assert!(gr.diagnostics.converged);
        assert!(gr.diagnostics.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn wraps_into_principal_range() {
        for phi in [-7.0, -PI, 0.0, 3.0, PI, 10.0] {
            let w = wrap_phase(phi);
            assert!((-PI..PI).contains(&w), "{phi} -> {w}");
            assert!((C64::from_polar(1.0, w) - C64::from_polar(1.0, phi)).norm() < 1e-12);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::from_name(m.name()), Some(m));
        }
        assert_eq!(Method::from_name("zopt"), None);
    }
}
