//! Axial harmonic motion: Fock distributions, Lamb-Dicke coupling,
//! sideband Rabi frequencies, reservoir heating and transport excitation.

use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::{Error, Result};

/// Thermal-tail mass below which the Fock basis is truncated.
const THERMAL_TAIL: f64 = 1e-6;
/// Minimum Fock-basis size.
const N_MAX_FLOOR: usize = 20;

/// The axial center-of-mass mode.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HarmonicMode {
    /// Angular frequency (rad/s).
    pub omega: f64,
    /// Ion mass (kg).
    pub mass_kg: f64,
    /// Mode axis, unit vector.
    pub axis: [f64; 3],
}

impl HarmonicMode {
    pub fn new(omega: f64, mass_kg: f64, axis: [f64; 3]) -> Result<Self> {
        if omega <= 0.0 || !omega.is_finite() {
            return Err(Error::domain(format!("omega must be positive, got {omega}")));
        }
        if mass_kg <= 0.0 {
            return Err(Error::domain("mass must be positive".to_string()));
        }
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::domain("axis must be a nonzero vector".to_string()));
        }
        Ok(HarmonicMode {
            omega,
            mass_kg,
            axis: [axis[0] / norm, axis[1] / norm, axis[2] / norm],
        })
    }

    /// Ground-state wavepacket size sqrt(hbar / 2 m omega) (m).
    pub fn ground_state_size(&self) -> f64 {
        (HBAR / (2.0 * self.mass_kg * self.omega)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StateKind {
    Thermal { nbar: f64 },
    Number { n: usize },
    General,
}

/// A population distribution over Fock states of the axial mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MotionalState {
    populations: Vec<f64>,
    pub kind: StateKind,
}

impl MotionalState {
    /// Thermal state with mean occupation `nbar`, truncated where the tail
    /// mass drops below 1e-6 (basis never smaller than 20).
    pub fn thermal(nbar: f64) -> Result<Self> {
        if nbar < 0.0 || !nbar.is_finite() {
            return Err(Error::domain(format!("nbar must be >= 0, got {nbar}")));
        }
        let n_max = if nbar == 0.0 {
            N_MAX_FLOOR
        } else {
            // tail mass beyond N is (nbar/(nbar+1))^(N+1)
            let r = nbar / (nbar + 1.0);
            let n = (THERMAL_TAIL.ln() / r.ln()).ceil() as usize;
            n.max(N_MAX_FLOOR)
        };
        let r = nbar / (nbar + 1.0);
        let mut populations = Vec::with_capacity(n_max + 1);
        let mut p = 1.0 / (nbar + 1.0);
        for _ in 0..=n_max {
            populations.push(p);
            p *= r;
        }
        let sum: f64 = populations.iter().sum();
        for p in &mut populations {
            *p /= sum;
        }
        Ok(MotionalState {
            populations,
            kind: StateKind::Thermal { nbar },
        })
    }

    /// Fock (number) state |n>.
    pub fn number(n: usize) -> Self {
        let mut populations = vec![0.0; (n + 1).max(N_MAX_FLOOR + 1)];
        populations[n] = 1.0;
        MotionalState {
            populations,
            kind: StateKind::Number { n },
        }
    }

    /// Arbitrary normalized distribution.
    pub fn general(populations: Vec<f64>) -> Result<Self> {
        if populations.is_empty() {
            return Err(Error::domain("empty distribution".to_string()));
        }
        if populations.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::domain("negative or non-finite population".to_string()));
        }
        let sum: f64 = populations.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "populations sum to {sum}, expected 1 within 1e-9"
            )));
        }
        Ok(MotionalState {
            populations,
            kind: StateKind::General,
        })
    }

    pub fn populations(&self) -> &[f64] {
        &self.populations
    }

    pub fn mean_n(&self) -> f64 {
        self.populations
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.populations.iter().sum()
    }
}

/// Raman (or single-beam) wavevector geometry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeamGeometry {
    /// Blue-beam wavevector (rad/m).
    pub k_plus: [f64; 3],
    /// Red-beam wavevector (rad/m).
    pub k_minus: [f64; 3],
    /// Polarization labels, informational only.
    pub polarizations: [String; 2],
}

fn scale(dir: [f64; 3], k: f64) -> Result<[f64; 3]> {
    let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::domain("beam direction must be nonzero".to_string()));
    }
    Ok([k * dir[0] / norm, k * dir[1] / norm, k * dir[2] / norm])
}

impl BeamGeometry {
    /// Two beams of common wavelength along the given directions.
    pub fn from_wavelength(lambda_m: f64, dir_plus: [f64; 3], dir_minus: [f64; 3]) -> Result<Self> {
        if lambda_m <= 0.0 {
            return Err(Error::domain("wavelength must be positive".to_string()));
        }
        let k = 2.0 * std::f64::consts::PI / lambda_m;
        Ok(BeamGeometry {
            k_plus: scale(dir_plus, k)?,
            k_minus: scale(dir_minus, k)?,
            polarizations: [String::new(), String::new()],
        })
    }

    /// Copropagating pair: identical wavevectors.
    pub fn copropagating(lambda_m: f64, dir: [f64; 3]) -> Result<Self> {
        Self::from_wavelength(lambda_m, dir, dir)
    }
}

/// Lamb-Dicke parameter eta = (k+ - k-) . e_z * sqrt(hbar / 2 M omega).
pub fn lamb_dicke(geom: &BeamGeometry, mode: &HarmonicMode) -> f64 {
    let dk = [
        geom.k_plus[0] - geom.k_minus[0],
        geom.k_plus[1] - geom.k_minus[1],
        geom.k_plus[2] - geom.k_minus[2],
    ];
    let projection = dk[0] * mode.axis[0] + dk[1] * mode.axis[1] + dk[2] * mode.axis[2];
    projection * mode.ground_state_size()
}

/// Associated Laguerre polynomial L_n^a(x) by the three-term recurrence.
fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0;
    let mut l = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * l - (kf + a) * lm1) / (kf + 1.0);
        lm1 = l;
        l = next;
    }
    l
}

fn rabi_magnitude(n: usize, order: i32, eta: f64, omega0: f64) -> f64 {
    let target = n as i64 + order as i64;
    if target < 0 {
        return 0.0;
    }
    let s = order.unsigned_abs() as usize;
    let n_min = n.min(target as usize);
    let n_max = n.max(target as usize);
    let eta2 = eta * eta;
    // sqrt(n_min! / n_max!)
    let mut ratio = 1.0;
    for k in (n_min + 1)..=n_max {
        ratio /= k as f64;
    }
    omega0
        * (-eta2 / 2.0).exp()
        * eta.abs().powi(s as i32)
        * ratio.sqrt()
        * laguerre(n_min, s as f64, eta2).abs()
}

/// Rabi frequency Omega_{n, n+order} of the `order`-th sideband (rad/s).
///
/// `order = 0` is the carrier, positive orders are blue sidebands.
/// In the Lamb-Dicke regime this reduces to Omega0 (1 - eta^2 n) on the
/// carrier and Omega0 eta sqrt(n+1) on the first blue sideband.
pub fn sideband_rabi(n: usize, order: i32, eta: f64, omega0: f64) -> Result<f64> {
    if n as i64 + order as i64 < 0 {
        return Err(Error::domain(format!(
            "target Fock index n + s = {} is negative",
            n as i64 + order as i64
        )));
    }
    Ok(rabi_magnitude(n, order, eta, omega0))
}

/// Sideband excitation probability of a distribution after drive time `t`:
/// sum_n p_n sin^2(Omega_{n,n+order} t / 2). Fock states with no partner
/// level (n + order < 0) do not flop and contribute zero.
pub fn flop_excitation(state: &MotionalState, t: f64, eta: f64, omega0: f64, order: i32) -> f64 {
    state
        .populations()
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let omega = rabi_magnitude(n, order, eta, omega0);
            p * (0.5 * omega * t).sin().powi(2)
        })
        .sum()
}

/// Thermal-state sideband flop signal.
pub fn thermal_flop(t: f64, nbar: f64, eta: f64, omega0: f64, order: i32) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::domain("time must be >= 0".to_string()));
    }
    let state = MotionalState::thermal(nbar)?;
    Ok(flop_excitation(&state, t, eta, omega0, order))
}

/// Rate-equation step for coupling to an infinite-temperature reservoir:
/// dp_n/dt = gamma [ n p_{n-1} - (2n+1) p_n + (n+1) p_{n+1} ],
/// which raises the mean occupation by exactly `rate` quanta per second.
pub fn apply_heating(state: &MotionalState, duration: f64, rate: f64) -> Result<MotionalState> {
    if duration < 0.0 {
        return Err(Error::domain("duration must be >= 0".to_string()));
    }
    if rate < 0.0 {
        return Err(Error::domain("heating rate must be >= 0".to_string()));
    }
    if duration == 0.0 || rate == 0.0 {
        return Ok(state.clone());
    }

    let gained = rate * duration;
    // headroom so the diffusing tail stays below the truncation
    let mut n_max = state.populations().len() - 1 + ((gained + 1.0) * 10.0).ceil() as usize + 10;
    loop {
        let mut p = vec![0.0; n_max + 1];
        p[..state.populations().len()].copy_from_slice(state.populations());

        let rhs = |p: &[f64], out: &mut [f64]| {
            for n in 0..=n_max {
                let from_below = if n > 0 { n as f64 * p[n - 1] } else { 0.0 };
                let from_above = if n < n_max {
                    (n as f64 + 1.0) * p[n + 1]
                } else {
                    0.0
                };
                out[n] = rate * (from_below - (2.0 * n as f64 + 1.0) * p[n] + from_above);
            }
        };
        // explicit RK4 with a stability-bounded step
        let dt_max = 0.2 / (rate * (2.0 * n_max as f64 + 1.0));
        let steps = (duration / dt_max).ceil() as usize;
        let dt = duration / steps as f64;
        let mut k1 = vec![0.0; n_max + 1];
        let mut k2 = vec![0.0; n_max + 1];
        let mut k3 = vec![0.0; n_max + 1];
        let mut k4 = vec![0.0; n_max + 1];
        let mut tmp = vec![0.0; n_max + 1];
        for _ in 0..steps {
            rhs(&p, &mut k1);
            for i in 0..=n_max {
                tmp[i] = p[i] + 0.5 * dt * k1[i];
            }
            rhs(&tmp, &mut k2);
            for i in 0..=n_max {
                tmp[i] = p[i] + 0.5 * dt * k2[i];
            }
            rhs(&tmp, &mut k3);
            for i in 0..=n_max {
                tmp[i] = p[i] + dt * k3[i];
            }
            rhs(&tmp, &mut k4);
            for i in 0..=n_max {
                p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }

        if p[n_max] < 1e-9 {
            let sum: f64 = p.iter().sum();
            for v in &mut p {
                *v = v.max(0.0) / sum;
            }
            let kind = match state.kind {
                StateKind::Thermal { nbar } => StateKind::Thermal {
                    nbar: nbar + gained,
                },
                _ => StateKind::General,
            };
            return Ok(MotionalState { populations: p, kind });
        }
        n_max *= 2;
    }
}

/// Fringe contrast of a (|0> + |1>)/sqrt(2) motional superposition after
/// time `tau` under the infinite-temperature heating master equation, as
/// recovered by a Ramsey-type mapping of the {|0>, |1>} subspace: the
/// interference term is normalized to the population remaining in that
/// subspace.
pub fn motional_ramsey_coherence(tau: f64, rate: f64) -> Result<f64> {
    if tau < 0.0 || rate < 0.0 {
        return Err(Error::domain("tau and rate must be >= 0".to_string()));
    }
    if tau == 0.0 || rate == 0.0 {
        return Ok(1.0);
    }

    let gained = rate * tau;
    let n_max = (N_MAX_FLOOR + ((gained + 1.0) * 12.0).ceil() as usize).max(30);
    let dim = n_max + 1;
    // the Liouvillian has real coefficients and the initial state is real
    let mut rho = vec![0.0; dim * dim];
    let idx = |m: usize, n: usize| m * dim + n;
    rho[idx(0, 0)] = 0.5;
    rho[idx(0, 1)] = 0.5;
    rho[idx(1, 0)] = 0.5;
    rho[idx(1, 1)] = 0.5;

    let rhs = |rho: &[f64], out: &mut [f64]| {
        for m in 0..dim {
            for n in 0..dim {
                let mf = m as f64;
                let nf = n as f64;
                let mut v = -(mf + nf + 1.0) * rho[idx(m, n)];
                if m + 1 < dim && n + 1 < dim {
                    v += ((mf + 1.0) * (nf + 1.0)).sqrt() * rho[idx(m + 1, n + 1)];
                }
                if m > 0 && n > 0 {
                    v += (mf * nf).sqrt() * rho[idx(m - 1, n - 1)];
                }
                out[idx(m, n)] = rate * v;
            }
        }
    };

    let dt_max = 0.2 / (rate * (2.0 * n_max as f64 + 1.0));
    let steps = (tau / dt_max).ceil() as usize;
    let dt = tau / steps as f64;
    let mut k1 = vec![0.0; dim * dim];
    let mut k2 = vec![0.0; dim * dim];
    let mut k3 = vec![0.0; dim * dim];
    let mut k4 = vec![0.0; dim * dim];
    let mut tmp = vec![0.0; dim * dim];
    for _ in 0..steps {
        rhs(&rho, &mut k1);
        for i in 0..dim * dim {
            tmp[i] = rho[i] + 0.5 * dt * k1[i];
        }
        rhs(&tmp, &mut k2);
        for i in 0..dim * dim {
            tmp[i] = rho[i] + 0.5 * dt * k2[i];
        }
        rhs(&tmp, &mut k3);
        for i in 0..dim * dim {
            tmp[i] = rho[i] + dt * k3[i];
        }
        rhs(&tmp, &mut k4);
        for i in 0..dim * dim {
            rho[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    let coherence = 2.0 * rho[idx(0, 1)].abs();
    let subspace = rho[idx(0, 0)] + rho[idx(1, 1)];
    Ok((coherence / subspace).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RampProfile {
    Smoothstep,
    Linear,
    Sudden,
}

/// A voltage-driven displacement of the trap minimum.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TransportRamp {
    pub displacement_m: f64,
    pub duration_s: f64,
    /// Single-pole low-pass cutoff between the waveform and the electrodes (Hz).
    pub filter_cutoff_hz: f64,
    pub profile: RampProfile,
}

impl TransportRamp {
    pub fn new(
        displacement_m: f64,
        duration_s: f64,
        filter_cutoff_hz: f64,
        profile: RampProfile,
    ) -> Result<Self> {
        if !displacement_m.is_finite() {
            return Err(Error::domain("displacement must be finite".to_string()));
        }
        if duration_s < 0.0 {
            return Err(Error::domain("duration must be >= 0".to_string()));
        }
        if filter_cutoff_hz <= 0.0 {
            return Err(Error::domain("filter cutoff must be positive".to_string()));
        }
        Ok(TransportRamp {
            displacement_m,
            duration_s,
            filter_cutoff_hz,
            profile,
        })
    }

    fn target(&self, t: f64) -> f64 {
        match self.profile {
            RampProfile::Sudden => {
                if t > 0.0 {
                    self.displacement_m
                } else {
                    0.0
                }
            }
            RampProfile::Linear => {
                let u = if self.duration_s == 0.0 {
                    1.0
                } else {
                    (t / self.duration_s).clamp(0.0, 1.0)
                };
                self.displacement_m * u
            }
            RampProfile::Smoothstep => {
                let u = if self.duration_s == 0.0 {
                    1.0
                } else {
                    (t / self.duration_s).clamp(0.0, 1.0)
                };
                self.displacement_m * u * u * (3.0 - 2.0 * u)
            }
        }
    }
}

/// Residual coherent excitation |alpha|^2 (quanta) after shuttling the ion
/// along `ramp`. The commanded trajectory is low-pass filtered by the
/// single-pole electrode filter, then the driven-oscillator integral
/// alpha = (1 / 2 z0) integral dy/dt e^{i omega t} dt is evaluated on the
/// filtered trajectory y(t).
pub fn transport_excitation(ramp: &TransportRamp, mode: &HarmonicMode) -> f64 {
    if ramp.displacement_m == 0.0 {
        return 0.0;
    }
    let omega_c = 2.0 * std::f64::consts::PI * ramp.filter_cutoff_hz;
    // integrate past the ramp until the filtered trajectory has settled
    let t_end = ramp.duration_s + 14.0 / omega_c;
    let trap_period = 2.0 * std::f64::consts::PI / mode.omega;
    let mut dt = (trap_period.min(1.0 / omega_c)) / 200.0;
    if ramp.duration_s > 0.0 {
        dt = dt.min(ramp.duration_s / 400.0);
    }
    let steps = (t_end / dt).ceil() as usize;
    let dt = t_end / steps as f64;

    // state: y (filtered position), (re, im) of the accumulated integral
    let mut y = 0.0;
    let mut re = 0.0;
    let mut im = 0.0;
    let deriv = |t: f64, y: f64| -> (f64, f64, f64) {
        let dy = omega_c * (ramp.target(t) - y);
        let phase = mode.omega * t;
        (dy, dy * phase.cos(), dy * phase.sin())
    };
    let mut t = 0.0;
    for _ in 0..steps {
        let (k1y, k1r, k1i) = deriv(t, y);
        let (k2y, k2r, k2i) = deriv(t + 0.5 * dt, y + 0.5 * dt * k1y);
        let (k3y, k3r, k3i) = deriv(t + 0.5 * dt, y + 0.5 * dt * k2y);
        let (k4y, k4r, k4i) = deriv(t + dt, y + dt * k3y);
        y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        re += dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
        im += dt / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
        t += dt;
    }

    let z0 = mode.ground_state_size();
    (re * re + im * im) / (4.0 * z0 * z0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn mode_1p18mhz() -> HarmonicMode {
        HarmonicMode::new(
            2.0 * std::f64::consts::PI * 1.18e6,
            42.95876664 * crate::constants::ATOMIC_MASS_KG,
            [0.0, 0.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn thermal_state_shape() {
        let s = MotionalState::thermal(0.06).unwrap();
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-12);
        assert!(s.populations().len() >= N_MAX_FLOOR);
        // p_n = nbar^n / (nbar+1)^(n+1) up to truncation
        for (n, p) in s.populations().iter().enumerate().take(5) {
            let expected = 0.06f64.powi(n as i32) / 1.06f64.powi(n as i32 + 1);
            assert_relative_eq!(*p, expected, max_relative = 1e-5);
        }
        assert_relative_eq!(s.mean_n(), 0.06, max_relative = 1e-4);
        let hot = MotionalState::thermal(10.0).unwrap();
        assert_abs_diff_eq!(hot.norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(hot.mean_n(), 10.0, max_relative = 1e-3);
    }

    #[test]
    fn general_state_validation() {
        assert!(MotionalState::general(vec![0.5, 0.5]).is_ok());
        assert!(MotionalState::general(vec![0.5, 0.6]).is_err());
        assert!(MotionalState::general(vec![1.1, -0.1]).is_err());
    }

    #[test]
    fn lamb_dicke_examples() {
        let mode = mode_1p18mhz();
        // copropagating beams: exactly zero
        let co = BeamGeometry::copropagating(397e-9, [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(lamb_dicke(&co, &mode), 0.0);
        // 397 nm beams at 90 degrees, difference vector along the axis
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        let geom = BeamGeometry::from_wavelength(
            397e-9,
            [inv_sqrt2, 0.0, inv_sqrt2],
            [inv_sqrt2, 0.0, -inv_sqrt2],
        )
        .unwrap();
        let eta = lamb_dicke(&geom, &mode);
        assert_relative_eq!(eta, 0.223, max_relative = 5e-3);
        // measured reference value 0.216(2) within 5%
        assert!((eta - 0.216).abs() / 0.216 < 0.05);
    }

    #[test]
    fn lamb_dicke_frequency_scaling() {
        // eta scales as omega^(-1/2)
        let geom = BeamGeometry::from_wavelength(397e-9, [0.0, 0.0, 1.0], [0.0, 0.0, -1.0])
            .unwrap();
        let m1 = mode_1p18mhz();
        let m2 = HarmonicMode::new(2.0 * m1.omega, m1.mass_kg, m1.axis).unwrap();
        let ratio = lamb_dicke(&geom, &m2) / lamb_dicke(&geom, &m1);
        assert_relative_eq!(ratio, 1.0 / 2.0_f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn sideband_rabi_limits() {
        let eta = 0.1;
        let omega0 = 1.0;
        // first blue sideband from the ground state: eta * (1 + O(eta^2))
        let bsb = sideband_rabi(0, 1, eta, omega0).unwrap();
        assert_relative_eq!(bsb, eta, max_relative = eta * eta);
        // eta = 0 kills all sidebands
        assert_eq!(sideband_rabi(3, 1, 0.0, omega0).unwrap(), 0.0);
        assert_eq!(sideband_rabi(3, -2, 0.0, omega0).unwrap(), 0.0);
        // but not the carrier
        assert_eq!(sideband_rabi(3, 0, 0.0, omega0).unwrap(), 1.0);
        // negative target index is a domain error
        assert!(sideband_rabi(1, -2, eta, omega0).is_err());
    }

    /// Independent oracle: |<n+s| exp(i eta (a + a^dag)) |n>| by Taylor
    /// series on a truncated Fock space.
    fn displacement_element(n: usize, s: i32, eta: f64) -> f64 {
        let dim = 80usize;
        let target = (n as i64 + s as i64) as usize;
        // v = e_n; accumulate sum_k (i eta (a+a^dag))^k v / k!
        let mut v = vec![(0.0, 0.0); dim];
        v[n] = (1.0, 0.0);
        let mut acc = v.clone();
        for k in 1..200 {
            // w = (a + a^dag) v
            let mut w = vec![(0.0, 0.0); dim];
            for m in 0..dim {
                let (re, im) = v[m];
                if m > 0 {
                    // a^dag contribution from m-1 ... a|m> = sqrt(m)|m-1>
                    w[m - 1].0 += (m as f64).sqrt() * re;
                    w[m - 1].1 += (m as f64).sqrt() * im;
                }
                if m + 1 < dim {
                    w[m + 1].0 += ((m + 1) as f64).sqrt() * re;
                    w[m + 1].1 += ((m + 1) as f64).sqrt() * im;
                }
            }
            // v <- i eta w / k
            let c = eta / k as f64;
            for m in 0..dim {
                let (re, im) = w[m];
                v[m] = (-c * im, c * re);
            }
            for m in 0..dim {
                acc[m].0 += v[m].0;
                acc[m].1 += v[m].1;
            }
        }
        let (re, im) = acc[target];
        (re * re + im * im).sqrt()
    }

    #[test]
    fn sideband_rabi_matches_displacement_oracle() {
        let eta = 0.216;
        for n in 0..=10usize {
            for s in [-2i32, -1, 0, 1, 2] {
                if n as i64 + s as i64 >= 0 {
                    let formula = sideband_rabi(n, s, eta, 1.0).unwrap();
                    let oracle = displacement_element(n, s, eta);
                    assert_abs_diff_eq!(formula, oracle, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn thermal_flop_basics() {
        assert_eq!(thermal_flop(0.0, 0.06, 0.216, 1e5, 1).unwrap(), 0.0);
        // number-state reduction: flop of |n> equals the single-Fock formula
        let state = MotionalState::number(2);
        let t = 13e-6;
        let direct = flop_excitation(&state, t, 0.216, 1e5, 1);
        let omega = sideband_rabi(2, 1, 0.216, 1e5).unwrap();
        assert_abs_diff_eq!(direct, (0.5 * omega * t).sin().powi(2), epsilon = 1e-12);
    }

    #[test]
    fn thermal_flop_hot_state_decays() {
        // at nbar = 10 the Fock-summed contrast collapses within a few flops
        let eta = 0.1;
        let omega0 = 2.0 * std::f64::consts::PI * 5e4;
        let omega_bsb = sideband_rabi(0, 1, eta, omega0).unwrap();
        let t_pi = std::f64::consts::PI / omega_bsb;
        // direct-summation oracle with a fixed large basis
        let oracle = |t: f64| -> f64 {
            let nbar = 10.0;
            let r: f64 = nbar / (nbar + 1.0);
            (0..400)
                .map(|n| {
                    let p = r.powi(n as i32) / (nbar + 1.0);
                    let om = rabi_magnitude(n, 1, eta, omega0);
                    p * (0.5 * om * t).sin().powi(2)
                })
                .sum()
        };
        for mult in [5.0, 8.0, 12.0] {
            let t = mult * t_pi;
            let p = thermal_flop(t, 10.0, eta, omega0, 1).unwrap();
            assert_abs_diff_eq!(p, oracle(t), epsilon = 1e-5);
            // contrast gone: probability pinned near 1/2
            assert!((p - 0.5).abs() < 0.15, "p = {p} at {mult} t_pi");
        }
    }

    #[test]
    fn heating_linear_gain() {
        let ground = MotionalState::number(0);
        let rate = 1.0 / 0.370;
        let heated = apply_heating(&ground, 0.370, rate).unwrap();
        assert_abs_diff_eq!(heated.mean_n(), 1.0, epsilon = 0.01);
        let short = apply_heating(&ground, 0.037, rate).unwrap();
        assert_abs_diff_eq!(short.mean_n(), 0.10, epsilon = 0.005);
        // identity at zero duration
        let same = apply_heating(&ground, 0.0, rate).unwrap();
        assert_eq!(same.populations(), ground.populations());
    }

    #[test]
    fn heating_preserves_normalization_and_thermal_family() {
        let initial = MotionalState::thermal(0.5).unwrap();
        let heated = apply_heating(&initial, 0.2, 2.0).unwrap();
        assert_abs_diff_eq!(heated.norm(), 1.0, epsilon = 1e-9);
        assert!(heated.populations().iter().all(|&p| p >= 0.0));
        // an initially thermal state stays thermal with nbar + rate*t
        let expected = MotionalState::thermal(0.9).unwrap();
        for (a, b) in heated
            .populations()
            .iter()
            .zip(expected.populations().iter())
        {
            assert_abs_diff_eq!(a, b, epsilon = 1e-5);
        }
    }

    #[test]
    fn motional_coherence_examples() {
        assert_eq!(motional_ramsey_coherence(0.0, 2.7).unwrap(), 1.0);
        assert_eq!(motional_ramsey_coherence(1.0, 0.0).unwrap(), 1.0);
        let c = motional_ramsey_coherence(0.320, 1.0 / 0.370).unwrap();
        assert!(c >= 1.0 / std::f64::consts::E, "contrast = {c}");
    }

    #[test]
    fn motional_coherence_matches_closed_form() {
        // the diffusion channel has closed forms:
        // rho01 = 1/(2 s^2), p0 + p1 = 1/s + (s-2)/s^2 + 1/s^3, s = 1 + rate*tau
        for (tau, rate) in [(0.1, 2.0), (0.32, 1.0 / 0.37), (0.5, 1.5)] {
            let s = 1.0 + rate * tau;
            let coherence = 1.0 / (s * s);
            let subspace = 1.0 / s + (s - 2.0) / (s * s) + 1.0 / (s * s * s);
            let expected = coherence / subspace;
            let got = motional_ramsey_coherence(tau, rate).unwrap();
            assert_relative_eq!(got, expected, max_relative = 1e-4);
        }
    }

    #[test]
    fn transport_examples() {
        let mode = mode_1p18mhz();
        // zero displacement
        let ramp = TransportRamp::new(0.0, 40e-6, 125e3, RampProfile::Smoothstep).unwrap();
        assert_eq!(transport_excitation(&ramp, &mode), 0.0);
        // the measured shuttle: 10 um smoothstep in 40 us through the 125 kHz
        // filter leaves far less than 0.05 quanta
        let ramp = TransportRamp::new(10e-6, 40e-6, 125e3, RampProfile::Smoothstep).unwrap();
        let quanta = transport_excitation(&ramp, &mode);
        assert!(quanta < 0.05, "|alpha|^2 = {quanta}");
        // sudden jump: analytic filtered-step formula, many quanta
        let sudden = TransportRamp::new(10e-6, 0.0, 125e3, RampProfile::Sudden).unwrap();
        let quanta = transport_excitation(&sudden, &mode);
        let z0 = mode.ground_state_size();
        let omega_tau = mode.omega / (2.0 * std::f64::consts::PI * 125e3);
        let analytic = (10e-6 / (2.0 * z0)).powi(2) / (1.0 + omega_tau * omega_tau);
        assert_relative_eq!(quanta, analytic, max_relative = 1e-3);
        assert!(quanta > 1000.0);
    }

    #[test]
    fn transport_envelope_decreases_with_duration() {
        // max |alpha|^2 per duration decade decreases toward zero
        let mode = mode_1p18mhz();
        let mut decade_max = Vec::new();
        for decade in 0..4 {
            let mut worst: f64 = 0.0;
            for k in 0..6 {
                let duration = 4e-6 * 10f64.powi(decade) * (1.0 + 0.35 * k as f64);
                let ramp =
                    TransportRamp::new(10e-6, duration, 125e3, RampProfile::Smoothstep).unwrap();
                worst = worst.max(transport_excitation(&ramp, &mode));
            }
            decade_max.push(worst);
        }
        for pair in decade_max.windows(2) {
            assert!(pair[1] < pair[0], "envelope not decreasing: {decade_max:?}");
        }
        assert!(decade_max[3] < 1e-6);
    }
}
