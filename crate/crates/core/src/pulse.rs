//! Coherent pulse dynamics on a small Hilbert space (selected electronic
//! levels, optionally a truncated Fock ladder): rectangular and
//! cos^2-shaped chirped pulses, Rabi scans, Ramsey/spin-echo sequences and
//! the Raman effective drive.
//!
//! Everything is evaluated in the rotating frame of the drive under the
//! rotating-wave approximation; absolute drive frequencies never appear,
//! only detunings. Time evolution uses piecewise-constant matrix
//! exponentials (Taylor-applied-to-vector) on substeps chosen so that
//! ||H|| dt <= 0.05 rad, with the Hamiltonian sampled at the substep
//! midpoint.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atomic::TransitionSpec;
use crate::constants::AtomicConstants;
use crate::detection::{self, Classification, DetectionConfig, IonState, ShelvingScheme};
use crate::error::{Error, Result};
use crate::motion::{lamb_dicke, sideband_rabi, BeamGeometry, HarmonicMode};
use crate::noise::{sample_trace_at, shot_seed, EnvTrace, NoiseModel};

/// Which physical source drives the transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    Microwave,
    RamanCo,
    RamanCounter,
    Quadrupole,
}

impl Channel {
    /// Raman channels acquire the interferometer path phase.
    pub fn is_raman(self) -> bool {
        matches!(self, Channel::RamanCo | Channel::RamanCounter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Envelope {
    Rect,
    /// cos^2 envelope peaking at the pulse center; integrates to
    /// duration/2 times the peak.
    Cos2,
}

/// What the drive couples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DriveTarget {
    /// The hyperfine qubit, by convention the first two basis slots.
    Qubit,
    /// Explicit basis slots.
    Indices { lower: usize, upper: usize },
    /// A named transition; resolved against the basis level tags.
    Transition(TransitionSpec),
}

/// One timed drive segment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PulseEvent {
    pub channel: Channel,
    pub target: DriveTarget,
    /// Peak Rabi frequency (rad/s).
    pub rabi_peak: f64,
    pub envelope: Envelope,
    /// Drive offset from the calibrated transition frequency at pulse
    /// start (Hz); a linear chirp when `detuning_end_hz` differs.
    pub detuning_start_hz: f64,
    pub detuning_end_hz: f64,
    pub phase_rad: f64,
    pub duration_s: f64,
}

impl PulseEvent {
    pub fn rect(channel: Channel, rabi_peak: f64, duration_s: f64, phase_rad: f64) -> Result<Self> {
        if duration_s < 0.0 || rabi_peak < 0.0 {
            return Err(Error::domain(
                "pulse duration and Rabi frequency must be >= 0".to_string(),
            ));
        }
        Ok(PulseEvent {
            channel,
            target: DriveTarget::Qubit,
            rabi_peak,
            envelope: Envelope::Rect,
            detuning_start_hz: 0.0,
            detuning_end_hz: 0.0,
            phase_rad,
            duration_s,
        })
    }

    /// Resonant rectangular pi pulse.
    pub fn pi(channel: Channel, rabi: f64) -> Result<Self> {
        Self::rect(channel, rabi, std::f64::consts::PI / rabi, 0.0)
    }

    /// Resonant rectangular pi/2 pulse with drive phase `phase_rad`.
    pub fn pi_half(channel: Channel, rabi: f64, phase_rad: f64) -> Result<Self> {
        Self::rect(channel, rabi, 0.5 * std::f64::consts::PI / rabi, phase_rad)
    }

    pub fn with_target(mut self, target: DriveTarget) -> Self {
        self.target = target;
        self
    }

    pub fn with_chirp(mut self, start_hz: f64, end_hz: f64) -> Self {
        self.detuning_start_hz = start_hz;
        self.detuning_end_hz = end_hz;
        self
    }

    pub fn with_envelope(mut self, envelope: Envelope) -> Self {
        self.envelope = envelope;
        self
    }

    fn envelope_at(&self, t: f64) -> f64 {
        match self.envelope {
            Envelope::Rect => 1.0,
            Envelope::Cos2 => {
                let u = (t - 0.5 * self.duration_s) / self.duration_s;
                (std::f64::consts::PI * u).cos().powi(2)
            }
        }
    }

    fn detuning_at(&self, t: f64) -> f64 {
        if self.duration_s == 0.0 {
            self.detuning_start_hz
        } else {
            self.detuning_start_hz
                + (self.detuning_end_hz - self.detuning_start_hz) * t / self.duration_s
        }
    }
}

/// Pulses and free-evolution gaps, time-ordered and non-overlapping by
/// construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SequenceStep {
    Pulse(PulseEvent),
    Wait(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sequence {
    pub steps: Vec<SequenceStep>,
    pub line_triggered: bool,
}

impl Sequence {
    pub fn duration(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| match s {
                SequenceStep::Pulse(p) => p.duration_s,
                SequenceStep::Wait(t) => *t,
            })
            .sum()
    }
}

/// Basis of the simulated Hilbert space: electronic slots times a Fock
/// ladder of dimension `fock_dim` (1 = no motion).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub labels: Vec<String>,
    pub levels: Vec<Option<crate::atomic::QuantumLevel>>,
    pub fock_dim: usize,
}

impl Basis {
    pub fn two_level(lower: &str, upper: &str) -> Self {
        Basis {
            labels: vec![lower.to_string(), upper.to_string()],
            levels: vec![None, None],
            fock_dim: 1,
        }
    }

    /// The hyperfine qubit: slot 0 = S1/2(4,0), slot 1 = S1/2(3,0).
    pub fn qubit() -> Self {
        Basis {
            labels: vec!["down".to_string(), "up".to_string()],
            levels: vec![
                crate::atomic::QuantumLevel::new(crate::constants::Term::S12, 4, 0).ok(),
                crate::atomic::QuantumLevel::new(crate::constants::Term::S12, 3, 0).ok(),
            ],
            fock_dim: 1,
        }
    }

    pub fn with_fock(mut self, fock_dim: usize) -> Self {
        self.fock_dim = fock_dim.max(1);
        self
    }

    pub fn dim(&self) -> usize {
        self.labels.len() * self.fock_dim
    }

    pub fn index(&self, level: usize, n: usize) -> usize {
        level * self.fock_dim + n
    }

    fn resolve(&self, target: &DriveTarget) -> Result<(usize, usize)> {
        match target {
            DriveTarget::Qubit => {
                if self.labels.len() < 2 {
                    return Err(Error::structural("basis has no qubit pair".to_string()));
                }
                Ok((0, 1))
            }
            DriveTarget::Indices { lower, upper } => {
                if *lower >= self.labels.len() || *upper >= self.labels.len() || lower == upper {
                    return Err(Error::structural(format!(
                        "drive indices ({lower}, {upper}) not in basis of {} levels",
                        self.labels.len()
                    )));
                }
                Ok((*lower, *upper))
            }
            DriveTarget::Transition(spec) => {
                let find = |lvl: &crate::atomic::QuantumLevel| {
                    self.levels
                        .iter()
                        .position(|entry| entry.as_ref() == Some(lvl))
                };
                let lower = find(&spec.lower).ok_or_else(|| {
                    Error::structural(format!("{} not present in basis", spec.lower))
                })?;
                let upper = find(&spec.upper).ok_or_else(|| {
                    Error::structural(format!("{} not present in basis", spec.upper))
                })?;
                Ok((lower, upper))
            }
        }
    }
}

/// Pure state over a [`Basis`].
#[derive(Debug, Clone)]
pub struct SystemState {
    pub basis: Basis,
    amps: Vec<Complex64>,
    pub time: f64,
}

impl SystemState {
    pub fn pure(basis: Basis, level: usize, n: usize) -> Result<Self> {
        if level >= basis.labels.len() || n >= basis.fock_dim {
            return Err(Error::structural(format!(
                "state ({level}, {n}) outside basis {}x{}",
                basis.labels.len(),
                basis.fock_dim
            )));
        }
        let mut amps = vec![Complex64::ZERO; basis.dim()];
        amps[basis.index(level, n)] = Complex64::ONE;
        Ok(SystemState {
            basis,
            amps,
            time: 0.0,
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Total population of an electronic slot (summed over Fock states).
    pub fn population(&self, level: usize) -> f64 {
        (0..self.basis.fock_dim)
            .map(|n| self.amps[self.basis.index(level, n)].norm_sqr())
            .sum()
    }

    /// Multiply the upper qubit slot by a phase (free evolution in the
    /// drive frame).
    fn apply_upper_phase(&mut self, upper: usize, phase: f64) {
        let rot = Complex64::from_polar(1.0, -phase);
        for n in 0..self.basis.fock_dim {
            let idx = self.basis.index(upper, n);
            self.amps[idx] *= rot;
        }
    }
}

/// Lamb-Dicke coupling of a drive to the axial mode.
#[derive(Debug, Clone, Copy)]
pub struct MotionCoupling {
    pub eta: f64,
    /// Mode angular frequency (rad/s).
    pub mode_omega: f64,
    /// Resonantly retained sideband order (RWA on the motional ladder).
    pub sideband: i32,
}

/// Per-shot noise context for [`evolve`].
pub struct DriveEnv<'a> {
    pub constants: &'a AtomicConstants,
    pub trace: &'a EnvTrace,
}

fn noise_shift_hz(channel: Channel, env: Option<&DriveEnv>, t: f64) -> f64 {
    match env {
        None => 0.0,
        Some(e) => match channel {
            Channel::Microwave | Channel::RamanCo | Channel::RamanCounter => {
                e.trace.qubit_detuning_at(e.constants, t)
            }
            Channel::Quadrupole => e.trace.components.laser_offset_hz,
        },
    }
}

/// Propagate `state` through one pulse. The Hamiltonian in the drive
/// frame couples the target pair (optionally on one motional sideband)
/// with detuning offset by the sampled noise trace; each substep applies
/// the exact exponential of the midpoint Hamiltonian, so unitarity is
/// preserved to series truncation (~1e-15 per pulse).
pub fn evolve(
    state: &SystemState,
    event: &PulseEvent,
    motion: Option<&MotionCoupling>,
    env: Option<&DriveEnv>,
) -> Result<SystemState> {
    if event.duration_s < 0.0 {
        return Err(Error::domain("pulse duration must be >= 0".to_string()));
    }
    let (lower, upper) = state.basis.resolve(&event.target)?;
    if state.basis.fock_dim > 1 && motion.is_none() {
        return Err(Error::structural(
            "Fock basis requires a MotionCoupling".to_string(),
        ));
    }
    let mut out = state.clone();
    out.time += event.duration_s;
    if event.duration_s == 0.0 {
        return Ok(out);
    }

    let fock = state.basis.fock_dim;
    let sideband = motion.map_or(0, |m| m.sideband);
    let intensity = env.map_or(1.0, |e| e.trace.components.intensity_factor);

    // per-(n) coupling factors Omega_{n, n+sideband} / Omega0
    let couplings: Vec<f64> = (0..fock)
        .map(|n| {
            if fock == 1 {
                1.0
            } else {
                let m = motion.expect("checked above");
                if n as i64 + sideband as i64 >= 0 && (n as i64 + sideband as i64) < fock as i64 {
                    sideband_rabi(n, sideband, m.eta, 1.0).unwrap_or(0.0)
                } else {
                    0.0
                }
            }
        })
        .collect();

    // substep count: ||H|| dt <= 0.05, finer when H is time-dependent
    let tau = event.duration_s;
    let dmax = event
        .detuning_start_hz
        .abs()
        .max(event.detuning_end_hz.abs());
    let sideband_term = motion.map_or(0.0, |m| (m.sideband as f64 * m.mode_omega).abs());
    let hmax =
        2.0 * std::f64::consts::PI * (dmax + 2e3) + sideband_term + event.rabi_peak * intensity;
    let mut n_sub = ((hmax * tau / 0.05).ceil() as usize).max(1);
    let time_dependent = event.envelope == Envelope::Cos2
        || event.detuning_start_hz != event.detuning_end_hz
        || env.is_some();
    if time_dependent {
        n_sub = n_sub.max(256);
    }
    let dt = tau / n_sub as f64;

    let dim = state.basis.dim();
    let phase = Complex64::from_polar(1.0, event.phase_rad);
    let mut psi = out.amps.clone();
    let mut term = vec![Complex64::ZERO; dim];
    let mut next = vec![Complex64::ZERO; dim];

    for step in 0..n_sub {
        let t_mid = (step as f64 + 0.5) * dt;
        let delta_hz = event.detuning_at(t_mid) - noise_shift_hz(event.channel, env, t_mid);
        let diag_upper = sideband_term.mul_add(
            if sideband >= 0 { 1.0 } else { -1.0 },
            -2.0 * std::f64::consts::PI * delta_hz,
        );
        let omega = event.rabi_peak * intensity * event.envelope_at(t_mid);

        // apply exp(-i H dt) to psi via the Taylor series
        term.copy_from_slice(&psi);
        let mut k = 1.0;
        loop {
            // next = H term
            for v in next.iter_mut() {
                *v = Complex64::ZERO;
            }
            for n in 0..fock {
                let iu = state.basis.index(upper, n);
                next[iu] += diag_upper * term[iu];
            }
            for n in 0..fock {
                let partner = n as i64 + sideband as i64;
                if partner < 0 || partner >= fock as i64 {
                    continue;
                }
                let coupling = 0.5 * omega * couplings[n];
                if coupling == 0.0 {
                    continue;
                }
                let il = state.basis.index(lower, n);
                let iu = state.basis.index(upper, partner as usize);
                next[iu] += phase * coupling * term[il];
                next[il] += phase.conj() * coupling * term[iu];
            }
            // term <- (-i dt / k) next
            let scale = Complex64::new(0.0, -dt / k);
            let mut term_norm = 0.0;
            for i in 0..dim {
                term[i] = scale * next[i];
                term_norm += term[i].norm_sqr();
            }
            for i in 0..dim {
                psi[i] += term[i];
            }
            if term_norm.sqrt() < 1e-16 {
                break;
            }
            k += 1.0;
            if k > 60.0 {
                return Err(Error::domain(
                    "propagator series did not converge; substep too large".to_string(),
                ));
            }
        }
    }

    out.amps = psi;
    Ok(out)
}

/// Transfer probability of an amplitude-shaped (cos^2), linearly chirped
/// pulse on a two-level transition, starting from the lower state. The
/// chirp spans `delta_c_hz` centered on resonance.
pub fn rap_transfer(rabi_peak: f64, tau: f64, delta_c_hz: f64) -> Result<f64> {
    if tau <= 0.0 {
        return Err(Error::domain("pulse length must be positive".to_string()));
    }
    let basis = Basis::two_level("g", "e");
    let state = SystemState::pure(basis, 0, 0)?;
    let event = PulseEvent::rect(Channel::Quadrupole, rabi_peak, tau, 0.0)?
        .with_envelope(Envelope::Cos2)
        .with_chirp(-0.5 * delta_c_hz, 0.5 * delta_c_hz);
    let final_state = evolve(&state, &event, None, None)?;
    Ok(final_state.population(1))
}

/// Monte Carlo sampling depth of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampling {
    /// Return exact noiseless probabilities (infinite-shots limit).
    Exact,
    Shots(u32),
}

/// One scan point: abscissa, estimated probability, statistical error and
/// the number of measurements behind it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
    pub n_shots: u32,
}

/// State-preparation and readout imperfections applied around the
/// coherent evolution of each shot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpamModel {
    pub prep_fidelity: f64,
    pub detection: Option<(DetectionConfig, ShelvingScheme)>,
}

impl SpamModel {
    pub fn ideal() -> Self {
        SpamModel {
            prep_fidelity: 1.0,
            detection: None,
        }
    }
}

/// Rabi-oscillation scan configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RabiScan {
    pub channel: Channel,
    /// Carrier Rabi frequency (rad/s).
    pub rabi: f64,
    pub t_grid: Vec<f64>,
    pub shots: Sampling,
    /// Off-resonant scattering rate of the drive light (1/s); scattered
    /// shots leave the qubit manifold and read as not-down.
    pub scatter_rate_per_s: f64,
    pub spam: SpamModel,
    pub seed: u64,
}

fn classify_shot(
    in_down: bool,
    spam: &SpamModel,
    rng: &mut ChaCha8Rng,
) -> bool {
    match &spam.detection {
        None => in_down,
        Some((cfg, scheme)) => {
            let state = if in_down {
                // shelving moves the down state to D5/2 unless all pulses fail
                if rng.random::<f64>() < detection::shelving_error(scheme) {
                    IonState::Bright
                } else {
                    IonState::Shelved
                }
            } else {
                IonState::Bright
            };
            let (_, classified) = detection::simulate_detection(state, cfg, rng);
            classified == Classification::Dark
        }
    }
}

/// Measured excitation curve P(down) versus drive duration, Monte Carlo
/// over noise realizations and projective readout. Deterministic for a
/// fixed seed, independent of thread count.
pub fn rabi_scan(
    scan: &RabiScan,
    model: &NoiseModel,
    constants: &AtomicConstants,
) -> Result<Vec<DataPoint>> {
    model.validate()?;
    let basis = Basis::qubit();

    match scan.shots {
        Sampling::Exact => scan
            .t_grid
            .iter()
            .map(|&t| {
                let state = SystemState::pure(basis.clone(), 0, 0)?;
                let event = PulseEvent::rect(scan.channel, scan.rabi, t, 0.0)?;
                let final_state = evolve(&state, &event, None, None)?;
                Ok(DataPoint {
                    x: t,
                    y: final_state.population(0),
                    sigma: 0.0,
                    n_shots: 0,
                })
            })
            .collect(),
        Sampling::Shots(shots) => {
            let points: Vec<DataPoint> = scan
                .t_grid
                .par_iter()
                .enumerate()
                .map(|(ti, &t)| {
                    let outcomes: Vec<bool> = (0..shots)
                        .map(|k| {
                            let global = ti as u64 * shots as u64 + k as u64;
                            let seed = shot_seed(scan.seed, global);
                            let mut rng = ChaCha8Rng::seed_from_u64(seed);
                            let session = global as f64 * (t + 0.01);
                            let trace = sample_trace_at(model, t, true, seed ^ 0x5eed, session)
                                .expect("validated model");
                            // preparation failure reads as not-down
                            if rng.random::<f64>() >= spam_prep(&scan.spam) {
                                return classify_shot(false, &scan.spam, &mut rng);
                            }
                            // drive-light scattering ejects the ion from the qubit
                            if scan.scatter_rate_per_s > 0.0 {
                                let u: f64 = rng.random::<f64>();
                                let t_sc = -u.max(1e-300).ln() / scan.scatter_rate_per_s;
                                if t_sc < t {
                                    return classify_shot(false, &scan.spam, &mut rng);
                                }
                            }
                            let state = SystemState::pure(basis.clone(), 0, 0)
                                .expect("valid basis");
                            let event = PulseEvent::rect(scan.channel, scan.rabi, t, 0.0)
                                .expect("valid pulse");
                            let env = DriveEnv {
                                constants,
                                trace: &trace,
                            };
                            let final_state = evolve(&state, &event, None, Some(&env))
                                .expect("two-level evolution");
                            let p_down = final_state.population(0).clamp(0.0, 1.0);
                            let in_down = rng.random::<f64>() < p_down;
                            classify_shot(in_down, &scan.spam, &mut rng)
                        })
                        .collect();
                    let (p, sigma) = detection::estimate_population(&outcomes);
                    DataPoint {
                        x: t,
                        y: p,
                        sigma,
                        n_shots: shots,
                    }
                })
                .collect();
            Ok(points)
        }
    }
}

fn spam_prep(spam: &SpamModel) -> f64 {
    spam.prep_fidelity.clamp(0.0, 1.0)
}

/// Ramsey phase-scan configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RamseyScan {
    pub channel: Channel,
    /// Free-evolution time between the two pi/2 pulses.
    pub tau_r: f64,
    pub phi_grid: Vec<f64>,
    /// Rabi frequency of the pi/2 pulses (rad/s).
    pub pulse_rabi: f64,
    /// Static drive-frequency offset from the calibrated qubit (Hz).
    pub drive_detuning_hz: f64,
    /// Insert a refocusing pi pulse at the midpoint of the wait.
    pub echo: bool,
    pub shots: Sampling,
    pub spam: SpamModel,
    pub seed: u64,
}

/// Fringe pattern P(down) versus the phase of the second pi/2 pulse.
pub fn ramsey_scan(
    scan: &RamseyScan,
    model: &NoiseModel,
    constants: &AtomicConstants,
) -> Result<Vec<DataPoint>> {
    model.validate()?;
    if scan.tau_r < 0.0 {
        return Err(Error::domain("tau_r must be >= 0".to_string()));
    }
    let basis = Basis::qubit();
    let t_pulse = 0.5 * std::f64::consts::PI / scan.pulse_rabi;
    let total = scan.tau_r + 2.0 * t_pulse + if scan.echo { 2.0 * t_pulse } else { 0.0 };

    let run_shot = |phi: f64, trace: &EnvTrace| -> Result<f64> {
        let env = DriveEnv {
            constants,
            trace,
        };
        let mut state = SystemState::pure(basis.clone(), 0, 0)?;
        let first = PulseEvent::rect(scan.channel, scan.pulse_rabi, t_pulse, 0.0)?
            .with_chirp(scan.drive_detuning_hz, scan.drive_detuning_hz);
        state = evolve(&state, &first, None, Some(&env))?;

        let phase_over = |t0: f64, t1: f64| -> f64 {
            trace.qubit_phase_rad(constants, t0, t1)
                - 2.0 * std::f64::consts::PI * scan.drive_detuning_hz * (t1 - t0)
        };

        if scan.echo {
            let half = 0.5 * scan.tau_r;
            state.apply_upper_phase(1, phase_over(t_pulse, t_pulse + half));
            let echo_pulse = PulseEvent::rect(
                scan.channel,
                scan.pulse_rabi,
                2.0 * t_pulse,
                0.0,
            )?
            .with_chirp(scan.drive_detuning_hz, scan.drive_detuning_hz);
            state = evolve(&state, &echo_pulse, None, Some(&env))?;
            state.apply_upper_phase(
                1,
                phase_over(t_pulse + half + 2.0 * t_pulse, total - t_pulse),
            );
        } else {
            state.apply_upper_phase(1, phase_over(t_pulse, t_pulse + scan.tau_r));
        }

        let second_phase = phi
            + if scan.channel.is_raman() {
                trace.components.path_phase_rad
            } else {
                0.0
            };
        let second = PulseEvent::rect(scan.channel, scan.pulse_rabi, t_pulse, second_phase)?
            .with_chirp(scan.drive_detuning_hz, scan.drive_detuning_hz);
        state = evolve(&state, &second, None, Some(&env))?;
        Ok(state.population(0).clamp(0.0, 1.0))
    };

    match scan.shots {
        Sampling::Exact => {
            let quiet = NoiseModel::quiet(model.b0_gauss);
            scan.phi_grid
                .iter()
                .map(|&phi| {
                    let trace = sample_trace_at(&quiet, total, true, 0, 0.0)?;
                    Ok(DataPoint {
                        x: phi,
                        y: run_shot(phi, &trace)?,
                        sigma: 0.0,
                        n_shots: 0,
                    })
                })
                .collect()
        }
        Sampling::Shots(shots) => {
            let points: Vec<DataPoint> = scan
                .phi_grid
                .par_iter()
                .enumerate()
                .map(|(pi_idx, &phi)| {
                    let outcomes: Vec<bool> = (0..shots)
                        .map(|k| {
                            let global = pi_idx as u64 * shots as u64 + k as u64;
                            let seed = shot_seed(scan.seed, global);
                            let mut rng = ChaCha8Rng::seed_from_u64(seed);
                            let session = global as f64 * (total + 0.01);
                            let trace =
                                sample_trace_at(model, total, true, seed ^ 0x5eed, session)
                                    .expect("validated model");
                            if rng.random::<f64>() >= spam_prep(&scan.spam) {
                                return classify_shot(false, &scan.spam, &mut rng);
                            }
                            let p_down = run_shot(phi, &trace).expect("qubit evolution");
                            let in_down = rng.random::<f64>() < p_down;
                            classify_shot(in_down, &scan.spam, &mut rng)
                        })
                        .collect();
                    let (p, sigma) = detection::estimate_population(&outcomes);
                    DataPoint {
                        x: phi,
                        y: p,
                        sigma,
                        n_shots: shots,
                    }
                })
                .collect();
            Ok(points)
        }
    }
}

/// A pair of Raman beams detuned from the S1/2 -> P1/2 transition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RamanBeams {
    pub geometry: BeamGeometry,
    /// Single-beam resonant Rabi frequency (rad/s), equal for both beams.
    pub single_beam_rabi: f64,
    /// Detuning from the dipole transition (Hz), e.g. -10e9.
    pub detuning_hz: f64,
    /// Natural linewidth gamma/2pi of the intermediate P level (Hz).
    pub p_linewidth_hz: f64,
    /// Dimensionless calibration of the off-resonant scattering rate,
    /// absorbing branching ratios and beam-geometry factors.
    pub scatter_calibration: f64,
}

/// Effective two-photon drive: (Rabi frequency rad/s, scattering rate 1/s,
/// Lamb-Dicke parameter). Omega_eff scales as Omega1 Omega2 / Delta and
/// the scattering rate as Omega^2 / Delta^2, i.e. Omega_eff / Delta at
/// fixed Omega_eff.
pub fn raman_effective_drive(beams: &RamanBeams, mode: &HarmonicMode) -> Result<(f64, f64, f64)> {
    if beams.detuning_hz == 0.0 {
        return Err(Error::domain("Raman detuning must be nonzero".to_string()));
    }
    if beams.single_beam_rabi < 0.0 || beams.p_linewidth_hz <= 0.0 {
        return Err(Error::domain("invalid Raman beam parameters".to_string()));
    }
    let delta_ang = 2.0 * std::f64::consts::PI * beams.detuning_hz;
    let omega_eff = beams.single_beam_rabi * beams.single_beam_rabi / (2.0 * delta_ang.abs());
    let gamma_ang = 2.0 * std::f64::consts::PI * beams.p_linewidth_hz;
    let scatter = beams.scatter_calibration * gamma_ang * omega_eff / delta_ang.abs();
    let eta = lamb_dicke(&beams.geometry, mode);
    Ok((omega_eff, scatter, eta))
}
