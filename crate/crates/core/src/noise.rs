//! Stochastic environment: magnetic-field processes (slow drift, 50 Hz
//! line pickup, quasi-static shot-to-shot noise), laser-servo residuals,
//! drive-intensity fluctuations, Raman path phase and residual-light
//! depumping.
//!
//! Traces are deterministic functions of `(model, seed)`; Monte Carlo
//! loops derive one seed per shot with [`shot_seed`] so results are
//! bit-identical regardless of how shots are distributed over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atomic::clock_sensitivity;
use crate::constants::AtomicConstants;
use crate::error::{Error, Result};
use crate::fitkit::{self, DecayForm};

/// Calibrated noise magnitudes. Defaults reproduce the measured fringe
/// amplitudes and decay constants of the reference experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Static quantization field (gauss).
    pub b0_gauss: f64,
    /// Slow field drift (gauss per hour).
    pub drift_gauss_per_hour: f64,
    /// Amplitude of the mains-synchronous field component (gauss).
    pub line_amp_gauss: f64,
    /// Mains frequency (Hz).
    pub line_freq_hz: f64,
    /// Mains phase at sequence start when line-triggered (rad).
    pub line_trigger_phase_rad: f64,
    /// Quasi-static shot-to-shot field noise, rms (gauss). Calibrated
    /// against the measured long-Ramsey fringe amplitudes.
    pub slow_b_rms_gauss: f64,
    /// Laser-servo frequency residual, rms (Hz), applied per shot.
    pub laser_offset_rms_hz: f64,
    /// Hard bound on the servo residual (Hz).
    pub laser_offset_bound_hz: f64,
    /// Fractional rms of the effective Rabi frequency, per shot.
    pub intensity_frac_rms: f64,
    /// Raman interferometer path-phase spread between the two Ramsey
    /// pulses of a shot, rms (rad).
    pub path_phase_rms_rad: f64,
    /// Residual-light depumping rate out of the qubit state (1/s).
    pub depump_rate_per_s: f64,
    /// Initial qubit-state preparation for the depumping measurement.
    pub prep_population: f64,
    /// Mechanical shutter closed: removes the depumping channel.
    pub shutter_closed: bool,
    /// Interval of the spectroscopy feedback that re-references the drive
    /// frequency to the drifted field (s).
    pub field_recal_interval_s: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            b0_gauss: 3.4,
            drift_gauss_per_hour: 2.0e-4,
            line_amp_gauss: 1.0e-3,
            line_freq_hz: 50.0,
            line_trigger_phase_rad: 0.0,
            slow_b_rms_gauss: 7.0e-5,
            laser_offset_rms_hz: 200.0,
            laser_offset_bound_hz: 500.0,
            intensity_frac_rms: 1.5e-4,
            path_phase_rms_rad: 0.1,
            depump_rate_per_s: 1.0 / 0.410,
            prep_population: 0.97,
            shutter_closed: false,
            field_recal_interval_s: 90.0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("drift_gauss_per_hour", self.drift_gauss_per_hour),
            ("line_amp_gauss", self.line_amp_gauss),
            ("slow_b_rms_gauss", self.slow_b_rms_gauss),
            ("laser_offset_rms_hz", self.laser_offset_rms_hz),
            ("laser_offset_bound_hz", self.laser_offset_bound_hz),
            ("intensity_frac_rms", self.intensity_frac_rms),
            ("path_phase_rms_rad", self.path_phase_rms_rad),
            ("depump_rate_per_s", self.depump_rate_per_s),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.line_freq_hz <= 0.0 {
            return Err(Error::domain("line_freq_hz must be positive".to_string()));
        }
        if !(0.0..=1.0).contains(&self.prep_population) {
            return Err(Error::domain("prep_population must be in [0, 1]".to_string()));
        }
        if self.b0_gauss < 0.0 {
            return Err(Error::range("b0_gauss must be >= 0".to_string()));
        }
        if self.field_recal_interval_s <= 0.0 {
            return Err(Error::domain("field_recal_interval_s must be positive".to_string()));
        }
        Ok(())
    }

    /// A model with every stochastic amplitude set to zero.
    pub fn quiet(b0_gauss: f64) -> Self {
        NoiseModel {
            b0_gauss,
            drift_gauss_per_hour: 0.0,
            line_amp_gauss: 0.0,
            slow_b_rms_gauss: 0.0,
            laser_offset_rms_hz: 0.0,
            laser_offset_bound_hz: 0.0,
            intensity_frac_rms: 0.0,
            path_phase_rms_rad: 0.0,
            depump_rate_per_s: 0.0,
            prep_population: 1.0,
            ..NoiseModel::default()
        }
    }
}

/// The quasi-static quantities drawn for one shot, from which the sampled
/// arrays and all exact integrals derive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceComponents {
    pub b0_gauss: f64,
    pub drift_gauss_per_s: f64,
    pub line_amp_gauss: f64,
    pub line_omega: f64,
    pub line_phase_rad: f64,
    pub slow_b_gauss: f64,
    pub laser_offset_hz: f64,
    pub intensity_factor: f64,
    pub path_phase_rad: f64,
    pub session_time_s: f64,
    /// Field value the drive frequency was last referenced to.
    pub reference_b_gauss: f64,
}

/// A sampled noise realization covering one sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvTrace {
    pub grid_s: Vec<f64>,
    pub b_field_gauss: Vec<f64>,
    pub laser_detuning_hz: Vec<f64>,
    pub intensity_factor: Vec<f64>,
    pub phase_offset_rad: Vec<f64>,
    pub components: TraceComponents,
}

impl EnvTrace {
    /// Field at sequence-local time `t` (continuous model behind the grid).
    pub fn b_at(&self, t: f64) -> f64 {
        let c = &self.components;
        c.b0_gauss
            + c.slow_b_gauss
            + c.drift_gauss_per_s * (c.session_time_s + t)
            + c.line_amp_gauss * (c.line_omega * t + c.line_phase_rad).sin()
    }

    /// Instantaneous qubit detuning (Hz) from the second-order Zeeman shift
    /// relative to the last frequency calibration.
    pub fn qubit_detuning_at(&self, constants: &AtomicConstants, t: f64) -> f64 {
        let b = self.b_at(t).clamp(0.0, crate::atomic::MAX_FIELD_GAUSS);
        let b_ref = self.components.reference_b_gauss;
        let (shift, _) = clock_sensitivity(constants, b).expect("field in range");
        let (shift_ref, _) = clock_sensitivity(constants, b_ref).expect("field in range");
        shift - shift_ref
    }

    /// Accumulated free-evolution phase 2 pi Int_{t0}^{t1} dnu(t) dt of the
    /// qubit relative to the calibrated drive frequency (rad).
    ///
    /// The clock shift is expanded to second order around the quasi-static
    /// field of the shot, which makes the mains-synchronous integral exact
    /// for the (quadratic) Breit-Rabi clock shift; drift-line cross terms
    /// are dropped.
    pub fn qubit_phase_rad(&self, constants: &AtomicConstants, t0: f64, t1: f64) -> f64 {
        let c = &self.components;
        let tau = t1 - t0;
        if tau == 0.0 {
            return 0.0;
        }
        let bq = (c.b0_gauss + c.slow_b_gauss + c.drift_gauss_per_s * (c.session_time_s + t0))
            .clamp(0.0, crate::atomic::MAX_FIELD_GAUSS);
        let (shift_q, slope_q) = clock_sensitivity(constants, bq).expect("field in range");
        let (shift_ref, _) =
            clock_sensitivity(constants, c.reference_b_gauss).expect("field in range");
        // curvature of the clock shift is field-independent in this regime
        let curvature = {
            let (_, s1) = clock_sensitivity(constants, 1.0).expect("field in range");
            s1
        };

        let omega = c.line_omega;
        let a = c.line_amp_gauss;
        let th0 = omega * t0 + c.line_phase_rad;
        let th1 = omega * t1 + c.line_phase_rad;
        // Int sin(theta) dt and Int sin^2(theta) dt over [t0, t1]
        let int_sin = (th0.cos() - th1.cos()) / omega;
        let int_sin2 = tau / 2.0 - ((2.0 * th1).sin() - (2.0 * th0).sin()) / (4.0 * omega);
        let drift_term = c.drift_gauss_per_s * tau * tau / 2.0;

        let integral = (shift_q - shift_ref) * tau
            + slope_q * (a * int_sin + drift_term)
            + 0.5 * curvature * a * a * int_sin2;
        2.0 * std::f64::consts::PI * integral
    }
}

/// SplitMix64-style per-shot seed derivation.
pub fn shot_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn truncated_normal(rng: &mut ChaCha8Rng, rms: f64, bound: f64) -> f64 {
    if rms == 0.0 {
        return 0.0;
    }
    let dist = rand_distr::Normal::new(0.0, rms).expect("rms validated");
    for _ in 0..64 {
        let v: f64 = rng.sample(dist);
        if bound <= 0.0 || v.abs() <= bound {
            return v;
        }
    }
    0.0
}

/// Draw one noise realization for a sequence of length `duration`
/// starting at session clock `session_time_s`.
///
/// Line-triggered sequences start at a fixed mains phase; untriggered ones
/// draw the phase uniformly per shot. Slow components are drawn once per
/// shot (quasi-static); drift accumulates along the session clock, with
/// the drive-frequency reference refreshed every `field_recal_interval_s`.
pub fn sample_trace_at(
    model: &NoiseModel,
    duration: f64,
    line_triggered: bool,
    seed: u64,
    session_time_s: f64,
) -> Result<EnvTrace> {
    model.validate()?;
    if duration < 0.0 {
        return Err(Error::domain("duration must be >= 0".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let line_phase = if line_triggered {
        model.line_trigger_phase_rad
    } else {
        rng.random::<f64>() * 2.0 * std::f64::consts::PI
    };
    let slow_b = truncated_normal(&mut rng, model.slow_b_rms_gauss, 0.0);
    let laser_offset = truncated_normal(
        &mut rng,
        model.laser_offset_rms_hz,
        model.laser_offset_bound_hz,
    );
    let intensity = (1.0 + truncated_normal(&mut rng, model.intensity_frac_rms, 0.0)).max(0.0);
    let path_phase = truncated_normal(&mut rng, model.path_phase_rms_rad, 0.0);

    let drift_per_s = model.drift_gauss_per_hour / 3600.0;
    let last_cal = (session_time_s / model.field_recal_interval_s).floor()
        * model.field_recal_interval_s;
    let components = TraceComponents {
        b0_gauss: model.b0_gauss,
        drift_gauss_per_s: drift_per_s,
        line_amp_gauss: model.line_amp_gauss,
        line_omega: 2.0 * std::f64::consts::PI * model.line_freq_hz,
        line_phase_rad: line_phase,
        slow_b_gauss: slow_b,
        laser_offset_hz: laser_offset,
        intensity_factor: intensity,
        path_phase_rad: path_phase,
        session_time_s,
        reference_b_gauss: (model.b0_gauss + drift_per_s * last_cal)
            .clamp(0.0, crate::atomic::MAX_FIELD_GAUSS),
    };

    let n_samples = 256usize;
    let dt = if duration > 0.0 {
        duration / n_samples as f64
    } else {
        0.0
    };
    let mut trace = EnvTrace {
        grid_s: Vec::with_capacity(n_samples + 1),
        b_field_gauss: Vec::with_capacity(n_samples + 1),
        laser_detuning_hz: Vec::with_capacity(n_samples + 1),
        intensity_factor: Vec::with_capacity(n_samples + 1),
        phase_offset_rad: Vec::with_capacity(n_samples + 1),
        components,
    };
    for k in 0..=n_samples {
        let t = k as f64 * dt;
        trace.grid_s.push(t);
        trace.b_field_gauss.push(trace.components.b0_gauss);
        trace.laser_detuning_hz.push(laser_offset);
        trace.intensity_factor.push(intensity);
        trace.phase_offset_rad.push(path_phase);
        if duration == 0.0 {
            break;
        }
    }
    for k in 0..trace.grid_s.len() {
        trace.b_field_gauss[k] = trace.b_at(trace.grid_s[k]);
    }
    Ok(trace)
}

/// [`sample_trace_at`] at session time zero.
pub fn sample_trace(
    model: &NoiseModel,
    duration: f64,
    line_triggered: bool,
    seed: u64,
) -> Result<EnvTrace> {
    sample_trace_at(model, duration, line_triggered, seed, 0.0)
}

/// Ramsey fringe amplitude per waiting time, from the phase spread of the
/// free evolution alone (ideal pi/2 pulses, no readout errors).
///
/// Each shot draws a quasi-static realization, accumulates the exact phase
/// integral over the wait and contributes a unit phasor; the amplitude is
/// the magnitude of the phasor average.
pub fn dephasing_envelope(
    constants: &AtomicConstants,
    model: &NoiseModel,
    tau_grid: &[f64],
    b0_gauss: f64,
    shots: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let mut model = model.clone();
    model.b0_gauss = b0_gauss;
    model.validate()?;
    if shots == 0 {
        return Err(Error::domain("shots must be >= 1".to_string()));
    }
    let mut out = Vec::with_capacity(tau_grid.len());
    for (ti, &tau) in tau_grid.iter().enumerate() {
        if tau < 0.0 {
            return Err(Error::domain("tau must be >= 0".to_string()));
        }
        // dead time between shots dominated by the wait itself
        let shot_period = tau + 0.02;
        let phasors: Vec<(f64, f64)> = (0..shots)
            .into_par_iter()
            .map(|shot| {
                let seed = shot_seed(seed, (ti * shots + shot) as u64);
                let session = shot as f64 * shot_period;
                let trace = sample_trace_at(&model, tau, true, seed, session)
                    .expect("validated model");
                let phi = trace.qubit_phase_rad(constants, 0.0, tau);
                (phi.cos(), phi.sin())
            })
            .collect();
        let (re, im) = phasors
            .iter()
            .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
        let n = shots as f64;
        out.push((tau, (re * re + im * im).sqrt() / n));
    }
    Ok(out)
}

/// Probability of remaining in the qubit ground state after `wait`
/// seconds of storage, limited by residual 397 nm light unless the
/// mechanical shutter is closed.
pub fn depump_survival(model: &NoiseModel, wait: f64) -> Result<f64> {
    model.validate()?;
    if wait < 0.0 {
        return Err(Error::domain("wait must be >= 0".to_string()));
    }
    if model.shutter_closed {
        Ok(model.prep_population)
    } else {
        Ok(model.prep_population * (-wait * model.depump_rate_per_s).exp())
    }
}

/// Coherence-time extrapolation of the simulated dephasing envelope under
/// both decay-shape hypotheses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoherenceExtrapolation {
    pub exp_t2_s: f64,
    pub exp_sigma_s: f64,
    pub exp_chi2: f64,
    pub gauss_t2_s: f64,
    pub gauss_sigma_s: f64,
    pub gauss_chi2: f64,
}

/// Simulate the dephasing envelope on the measured waiting-time grid and
/// report the 1/e times of exponential and Gaussian fits.
pub fn coherence_extrapolate_inputs(
    constants: &AtomicConstants,
    model: &NoiseModel,
    shots: usize,
    seed: u64,
) -> Result<CoherenceExtrapolation> {
    let taus = [50e-6, 0.05, 0.1, 0.2, 0.5, 1.0];
    let env = dephasing_envelope(constants, model, &taus, model.b0_gauss, shots, seed)?;
    let n = shots as f64;
    let data: Vec<(f64, f64, f64)> = env
        .iter()
        .map(|&(tau, a)| {
            // circular-mean amplitude standard error with a small floor
            let sigma = ((1.0 - a * a).max(0.0) / (2.0 * n)).sqrt().max(0.5 / n);
            (tau, a, sigma)
        })
        .collect();
    let (exp_t2_s, exp_sigma_s, exp_chi2) = fitkit::coherence_time(&data, DecayForm::Exponential)?;
    let (gauss_t2_s, gauss_sigma_s, gauss_chi2) = fitkit::coherence_time(&data, DecayForm::Gaussian)?;
    Ok(CoherenceExtrapolation {
        exp_t2_s,
        exp_sigma_s,
        exp_chi2,
        gauss_t2_s,
        gauss_sigma_s,
        gauss_chi2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn consts() -> AtomicConstants {
        AtomicConstants::builtin()
    }

    #[test]
    fn quiet_model_gives_constant_trace() {
        let model = NoiseModel::quiet(1.0);
        let trace = sample_trace(&model, 0.01, false, 42).unwrap();
        for &b in &trace.b_field_gauss {
            assert_eq!(b, 1.0);
        }
        for &d in &trace.laser_detuning_hz {
            assert_eq!(d, 0.0);
        }
        for &i in &trace.intensity_factor {
            assert_eq!(i, 1.0);
        }
        assert_eq!(trace.grid_s.first(), Some(&0.0));
        assert_abs_diff_eq!(*trace.grid_s.last().unwrap(), 0.01, epsilon = 1e-12);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let model = NoiseModel::default();
        let a = sample_trace(&model, 0.1, false, 7).unwrap();
        let b = sample_trace(&model, 0.1, false, 7).unwrap();
        assert_eq!(a.b_field_gauss, b.b_field_gauss);
        assert_eq!(a.components.laser_offset_hz, b.components.laser_offset_hz);
        let c = sample_trace(&model, 0.1, false, 8).unwrap();
        assert_ne!(a.components.slow_b_gauss, c.components.slow_b_gauss);
    }

    #[test]
    fn ensemble_field_statistics() {
        let mut model = NoiseModel::default();
        model.line_amp_gauss = 0.0;
        model.drift_gauss_per_hour = 0.0;
        let n = 10_000;
        let values: Vec<f64> = (0..n)
            .map(|k| {
                sample_trace(&model, 1e-3, false, shot_seed(3, k))
                    .unwrap()
                    .b_at(0.0)
            })
            .collect();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert_relative_eq!(var.sqrt(), model.slow_b_rms_gauss, max_relative = 0.05);

        // with the line on, untriggered, the variance gains A^2/2
        model.line_amp_gauss = 1.0e-3;
        let values: Vec<f64> = (0..n)
            .map(|k| {
                sample_trace(&model, 1e-3, false, shot_seed(4, k))
                    .unwrap()
                    .b_at(0.0)
            })
            .collect();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let expected = model.slow_b_rms_gauss.powi(2) + model.line_amp_gauss.powi(2) / 2.0;
        assert_relative_eq!(var, expected, max_relative = 0.05);
    }

    #[test]
    fn laser_offset_respects_bound() {
        let model = NoiseModel::default();
        for k in 0..2000 {
            let trace = sample_trace(&model, 1e-3, false, shot_seed(9, k)).unwrap();
            assert!(trace.components.laser_offset_hz.abs() <= model.laser_offset_bound_hz);
        }
    }

    #[test]
    fn line_triggering_suppresses_dephasing() {
        // untriggered 50 Hz pickup at 3.4 G dephases a 10 ms Ramsey; the
        // quasi-static phase-average oracle is J0(2 lambda sin(w tau / 2))
        let constants = consts();
        let mut model = NoiseModel::quiet(3.4);
        model.line_amp_gauss = 1.0e-3;

        let shots = 6000;
        let tau = 0.010;
        let amp = |triggered: bool, master: u64| -> f64 {
            let phasors: Vec<(f64, f64)> = (0..shots)
                .map(|k| {
                    let trace =
                        sample_trace(&model, tau, triggered, shot_seed(master, k)).unwrap();
                    let phi = trace.qubit_phase_rad(&constants, 0.0, tau);
                    (phi.cos(), phi.sin())
                })
                .collect();
            let (re, im) = phasors
                .iter()
                .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
            (re * re + im * im).sqrt() / shots as f64
        };

        let triggered = amp(true, 100);
        let untriggered = amp(false, 200);
        assert!(triggered > 0.9999, "triggered amplitude {triggered}");

        let (_, slope) = clock_sensitivity(&constants, 3.4).unwrap();
        let omega = 2.0 * std::f64::consts::PI * 50.0;
        let lambda = 2.0 * std::f64::consts::PI * slope * model.line_amp_gauss / omega;
        let arg = 2.0 * lambda * (omega * tau / 2.0).sin().abs();
        // series J0(x) = 1 - x^2/4 + x^4/64 - ...
        let j0 = 1.0 - arg * arg / 4.0 + arg.powi(4) / 64.0;
        assert_abs_diff_eq!(untriggered, j0, epsilon = 0.01);
        assert!(untriggered < triggered - 0.01);
    }

    #[test]
    fn dephasing_envelope_limits() {
        let constants = consts();
        let model = NoiseModel::default();
        let env = dephasing_envelope(&constants, &model, &[0.0, 1e-6], 0.5, 200, 5).unwrap();
        assert_abs_diff_eq!(env[0].1, 1.0, epsilon = 1e-9);
        assert!(env[1].1 > 0.9999);
    }

    #[test]
    fn dephasing_envelope_monotone_in_tau_and_rms() {
        let constants = consts();
        let model = NoiseModel::default();
        let taus = [0.01, 0.1, 0.3, 1.0];
        let env = dephasing_envelope(&constants, &model, &taus, 0.5, 3000, 11).unwrap();
        for pair in env.windows(2) {
            assert!(
                pair[1].1 <= pair[0].1 + 0.01,
                "amplitude not non-increasing: {env:?}"
            );
        }
        // amplitude at fixed tau decreases with the noise rms
        let mut louder = model.clone();
        louder.slow_b_rms_gauss *= 3.0;
        let quiet_env = dephasing_envelope(&constants, &model, &[0.5], 0.5, 3000, 12).unwrap();
        let loud_env = dephasing_envelope(&constants, &louder, &[0.5], 0.5, 3000, 12).unwrap();
        assert!(loud_env[0].1 < quiet_env[0].1);
    }

    #[test]
    fn halving_field_lengthens_coherence() {
        // slope ~ B, so halving B halves the frequency-noise rms
        let constants = consts();
        let model = NoiseModel::default();
        let tau = [0.5];
        let full = dephasing_envelope(&constants, &model, &tau, 1.0, 4000, 21).unwrap();
        let half = dephasing_envelope(&constants, &model, &tau, 0.5, 4000, 22).unwrap();
        // ln A scales with the variance, i.e. a factor ~4
        let ratio = full[0].1.ln() / half[0].1.ln();
        assert!((ratio - 4.0).abs() < 1.0, "ratio = {ratio}");
    }

    #[test]
    fn depump_survival_examples() {
        let model = NoiseModel::default();
        assert_abs_diff_eq!(depump_survival(&model, 0.0).unwrap(), 0.97, epsilon = 1e-12);
        let at_tau = depump_survival(&model, 0.410).unwrap();
        assert_relative_eq!(at_tau, 0.97 / std::f64::consts::E, max_relative = 1e-9);
        let mut closed = model.clone();
        closed.shutter_closed = true;
        for wait in [0.0, 0.3, 5.0] {
            assert_eq!(depump_survival(&closed, wait).unwrap(), 0.97);
        }
    }

    #[test]
    fn calibrated_envelope_matches_measured_amplitudes() {
        // one model, two fields: the calibrated quasi-static rms must
        // reproduce the measured 0.5 G fringe amplitudes (scaled by the
        // measured tau -> 0 anchor of 0.976) within one error bar, and the
        // 3.4 G 100 ms amplitude band
        let constants = consts();
        let model = NoiseModel::default();
        let anchor = 0.976;
        let env = dephasing_envelope(
            &constants,
            &model,
            &[0.2, 1.0],
            0.5,
            20_000,
            31,
        )
        .unwrap();
        let a200 = anchor * env[0].1;
        let a1s = anchor * env[1].1;
        assert!((a200 - 0.962).abs() < 0.011, "A(200 ms) = {a200}");
        assert!((a1s - 0.847).abs() < 0.021, "A(1 s) = {a1s}");

        let env34 = dephasing_envelope(&constants, &model, &[0.1], 3.4, 20_000, 32).unwrap();
        let a100 = anchor * env34[0].1;
        assert!((0.85..=0.95).contains(&a100), "A(100 ms at 3.4 G) = {a100}");
    }

    #[test]
    fn extrapolated_coherence_times() {
        let constants = consts();
        let model = NoiseModel::default();
        let mut model = model;
        model.b0_gauss = 0.5;
        let result = coherence_extrapolate_inputs(&constants, &model, 6000, 17).unwrap();
        assert!(
            (result.exp_t2_s - 6.0).abs() / 6.0 < 0.30,
            "exponential T2 = {}",
            result.exp_t2_s
        );
        assert!(
            (result.gauss_t2_s - 2.5).abs() / 2.5 < 0.30,
            "gaussian T2 = {}",
            result.gauss_t2_s
        );
        // quasi-static noise: the Gaussian form is the better description
        assert!(result.gauss_chi2 < result.exp_chi2);
    }
}
