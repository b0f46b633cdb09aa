//! State initialization: optical-pumping kinetics, the enhanced pumping
//! cycle, resolved-sideband ground-state cooling and the clock-state
//! transfer strategies.

use serde::{Deserialize, Serialize};

use crate::atomic::{QuantumLevel, TransitionLine};
use crate::error::{Error, Result};
use crate::motion::{sideband_rabi, MotionalState};

/// Optical-pumping parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct PumpingConfig {
    /// Exponential time constant of the pumping process (s).
    pub time_constant_s: f64,
    /// Steady-state population of the stretched state.
    pub asymptote: f64,
    /// Fidelity of the quadrupole pi pulses in the enhanced scheme.
    pub pulse_fidelity: f64,
    /// Stretched-state population already present after Doppler cooling.
    pub doppler_population: f64,
}

impl Default for PumpingConfig {
    fn default() -> Self {
        PumpingConfig {
            time_constant_s: 1.4e-6,
            asymptote: 0.98,
            pulse_fidelity: 0.99,
            doppler_population: 0.30,
        }
    }
}

impl PumpingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.time_constant_s <= 0.0 {
            return Err(Error::domain("time constant must be positive".to_string()));
        }
        for (name, v) in [
            ("asymptote", self.asymptote),
            ("pulse_fidelity", self.pulse_fidelity),
            ("doppler_population", self.doppler_population),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if self.asymptote == 0.0 {
            return Err(Error::domain("asymptote must be positive".to_string()));
        }
        Ok(())
    }
}

/// Stretched-state population after pumping for time `t`:
/// exponential approach from the Doppler-cooling level to the asymptote.
pub fn optical_pumping_curve(t: f64, cfg: &PumpingConfig) -> Result<f64> {
    cfg.validate()?;
    if t < 0.0 {
        return Err(Error::domain("t must be >= 0".to_string()));
    }
    let decay = (-t / cfg.time_constant_s).exp();
    Ok(cfg.asymptote * (1.0 - decay) + cfg.doppler_population * decay)
}

/// Success probability of the enhanced pumping cycle: pump, pi pulse to
/// the stretched D level, pump the remainder, pi pulse back, clear out.
/// Each round fails with probability 1 - asymptote * pulse_fidelity and
/// the rounds are independent.
pub fn enhanced_pumping(cfg: &PumpingConfig) -> Result<f64> {
    cfg.validate()?;
    let round_failure = 1.0 - cfg.asymptote * cfg.pulse_fidelity;
    Ok(1.0 - round_failure * round_failure)
}

/// Sideband-cooling parameters. Rates are per-cycle probabilities.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct CoolingConfig {
    /// Doppler-cooling endpoint, mean axial occupation.
    pub doppler_nbar: f64,
    /// Shot-to-shot spread of the endpoint (informational).
    pub doppler_nbar_spread: f64,
    /// Probability that a red-sideband excitation from n = 1 succeeds in
    /// one cycle.
    pub rsb_probability: f64,
    /// Probability that the quench step completes the cycle.
    pub quench_probability: f64,
    /// Recoil heating: probability of gaining one quantum per cycle.
    pub recoil_per_cycle: f64,
    /// Lamb-Dicke parameter of the cooling transition.
    pub lamb_dicke: f64,
    /// Mean occupation the cycle is calibrated to reach.
    pub target_nbar: f64,
}

impl Default for CoolingConfig {
    fn default() -> Self {
        CoolingConfig {
            doppler_nbar: 10.0,
            doppler_nbar_spread: 5.0,
            rsb_probability: 0.5,
            quench_probability: 1.0,
            recoil_per_cycle: 0.029,
            lamb_dicke: 0.0925,
            target_nbar: 0.06,
        }
    }
}

impl CoolingConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rsb_probability", self.rsb_probability),
            ("quench_probability", self.quench_probability),
            ("recoil_per_cycle", self.recoil_per_cycle),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if self.doppler_nbar < 0.0 {
            return Err(Error::domain("doppler_nbar must be >= 0".to_string()));
        }
        Ok(())
    }
}

/// One-quantum-per-cycle rate-equation cooling: each cycle removes a
/// quantum with probability proportional to the squared red-sideband
/// coupling, then adds recoil heating.
pub fn sideband_cool(
    initial: &MotionalState,
    cfg: &CoolingConfig,
    cycles: u32,
) -> Result<MotionalState> {
    cfg.validate()?;
    if (initial.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::domain("initial state not normalized".to_string()));
    }
    let mut p = initial.populations().to_vec();
    // headroom for recoil
    p.resize(p.len() + 4, 0.0);
    let n_max = p.len() - 1;

    let epsilon = cfg.rsb_probability * cfg.quench_probability;
    let omega_ref = sideband_rabi(1, -1, cfg.lamb_dicke, 1.0)?;
    let removal: Vec<f64> = (0..=n_max)
        .map(|n| {
            if n == 0 {
                0.0
            } else {
                let omega = sideband_rabi(n, -1, cfg.lamb_dicke, 1.0).expect("n >= 1");
                (epsilon * (omega / omega_ref).powi(2)).min(1.0)
            }
        })
        .collect();

    for _ in 0..cycles {
        // red-sideband removal
        for n in 1..=n_max {
            let moved = p[n] * removal[n];
            p[n] -= moved;
            p[n - 1] += moved;
        }
        // recoil: one quantum up with fixed probability
        if cfg.recoil_per_cycle > 0.0 {
            let h = cfg.recoil_per_cycle;
            for n in (0..n_max).rev() {
                let moved = p[n] * h;
                p[n] -= moved;
                p[n + 1] += moved;
            }
        }
        let sum: f64 = p.iter().sum();
        debug_assert!((sum - 1.0).abs() < 1e-9);
        for v in &mut p {
            *v /= sum;
        }
    }
    MotionalState::general(p)
}

/// Clock-state transfer by two quadrupole pi pulses through a D5/2
/// intermediate level. Both steps must be present in the supplied line
/// table (and hence E2-allowed); returns the product of the per-pulse
/// fidelities.
pub fn transfer_two_pi(
    table: &[TransitionLine],
    steps: &[(QuantumLevel, QuantumLevel); 2],
    pulse_fidelity: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&pulse_fidelity) {
        return Err(Error::domain("pulse_fidelity must be in [0, 1]".to_string()));
    }
    for (lower, upper) in steps {
        let delta_m = upper.m_f - lower.m_f;
        if delta_m.abs() > 2 {
            return Err(Error::structural(format!(
                "step {lower} -> {upper} violates the E2 selection rule |delta_m| <= 2"
            )));
        }
        let found = table
            .iter()
            .any(|line| line.spec.lower == *lower && line.spec.upper == *upper);
        if !found {
            return Err(Error::structural(format!(
                "step {lower} -> {upper} not in the transition table"
            )));
        }
    }
    Ok(pulse_fidelity * pulse_fidelity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FourStepDrive {
    Raman,
    Microwave,
}

/// Outcome of the four-pulse transfer chain through the Zeeman ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FourStepTransfer {
    pub duration_s: f64,
    /// Combined probability of off-resonant excitation of a neighboring
    /// Zeeman transition during the chain.
    pub off_resonant_error: f64,
    pub per_step_error: Vec<f64>,
}

/// Four sequential pi pulses with the given coupling strengths (rad/s),
/// limited by off-resonant excitation of neighbors one Zeeman spacing
/// away. The per-step error uses the two-level excitation formula at the
/// neighbor detuning, evaluated at the step's pi time.
pub fn transfer_four_step(
    _drive: FourStepDrive,
    couplings: &[f64],
    zeeman_spacing_hz: f64,
) -> Result<FourStepTransfer> {
    if couplings.is_empty() || couplings.iter().any(|&c| c <= 0.0) {
        return Err(Error::domain(
            "couplings must be positive and non-empty".to_string(),
        ));
    }
    if zeeman_spacing_hz <= 0.0 {
        return Err(Error::domain("zeeman spacing must be positive".to_string()));
    }
    let delta = 2.0 * std::f64::consts::PI * zeeman_spacing_hz;
    let mut duration = 0.0;
    let mut per_step_error = Vec::with_capacity(couplings.len());
    let mut success = 1.0;
    for &omega in couplings {
        let t_pi = std::f64::consts::PI / omega;
        duration += t_pi;
        let weff2 = omega * omega + delta * delta;
        let err = omega * omega / weff2 * (0.5 * weff2.sqrt() * t_pi).sin().powi(2);
        success *= 1.0 - err;
        per_step_error.push(err);
    }
    Ok(FourStepTransfer {
        duration_s: duration,
        off_resonant_error: 1.0 - success,
        per_step_error,
    })
}

/// Error-budget sketch for pumping directly to the clock state on the
/// dipole transition; the scheme is not simulated dynamically, it is
/// kept only to justify its rejection.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DipolePumpBudget {
    /// Expected scattering events before reaching the target state.
    pub scattering_events: f64,
    /// Motional quanta gained per scattering event.
    pub recoil_quanta_per_event: f64,
    /// Probability of pumping into the wrong state per event from
    /// polarization imperfections.
    pub polarization_leakage: f64,
}

impl DipolePumpBudget {
    /// (motional quanta gained, failure probability).
    pub fn estimate(&self) -> (f64, f64) {
        let heating = self.scattering_events * self.recoil_quanta_per_event;
        let failure = 1.0 - (1.0 - self.polarization_leakage).powf(self.scattering_events);
        (heating, failure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::{transition_table, CouplingGeometry};
    use crate::constants::{AtomicConstants, Term};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn pumping_curve_examples() {
        let cfg = PumpingConfig::default();
        // long-time asymptote
        let p = optical_pumping_curve(1.0, &cfg).unwrap();
        assert_abs_diff_eq!(p, 0.98, epsilon = 1e-12);
        // 10 us with a 1.4 us time constant reaches at least 0.979
        let p = optical_pumping_curve(10e-6, &cfg).unwrap();
        assert!(p >= 0.979, "p(10us) = {p}");
        // t = 0 returns the Doppler population
        let p = optical_pumping_curve(0.0, &cfg).unwrap();
        assert_abs_diff_eq!(p, cfg.doppler_population, epsilon = 1e-15);
    }

    #[test]
    fn enhanced_pumping_examples() {
        let mut cfg = PumpingConfig ::default();
        cfg.pulse_fidelity = 1.0;
        // two ideal rounds at 0.98: 1 - 0.02^2
        assert_relative_eq!(enhanced_pumping(&cfg).unwrap(), 0.9996, max_relative = 1e-12);
        cfg.pulse_fidelity = 0.99;
        assert!(enhanced_pumping(&cfg).unwrap() >= 0.992);
        cfg.pulse_fidelity = 1.0;
        cfg.asymptote = 1.0;
        assert_abs_diff_eq!(enhanced_pumping(&cfg).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn enhanced_pumping_dominates_single_pass() {
        // whenever the pulses are at least as good as the pump asymptote
        for a in [0.85, 0.9, 0.95, 0.98] {
            for f in [a, 0.5 * (a + 1.0), 1.0] {
                let cfg = PumpingConfig {
                    asymptote: a,
                    pulse_fidelity: f,
                    ..PumpingConfig::default()
                };
                assert!(
                    enhanced_pumping(&cfg).unwrap() >= a,
                    "a = {a}, f = {f}"
                );
            }
        }
    }

    #[test]
    fn sideband_cooling_reaches_target() {
        let initial = MotionalState::thermal(10.0).unwrap();
        let cfg = CoolingConfig::default();
        let cooled = sideband_cool(&initial, &cfg, 400).unwrap();
        assert_abs_diff_eq!(cooled.norm(), 1.0, epsilon = 1e-9);
        let nbar = cooled.mean_n();
        assert!(
            (nbar - 0.06).abs() <= 0.02,
            "cooled nbar = {nbar}, target 0.06"
        );
    }

    #[test]
    fn sideband_cooling_edge_cases() {
        let initial = MotionalState::thermal(2.0).unwrap();
        let cfg = CoolingConfig::default();
        // zero cycles is the identity
        let same = sideband_cool(&initial, &cfg, 0).unwrap();
        for (a, b) in same.populations().iter().zip(initial.populations()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        // no recoil and many cycles reach the ground state
        let mut pure = cfg;
        pure.recoil_per_cycle = 0.0;
        let cooled = sideband_cool(&initial, &pure, 3000).unwrap();
        assert!(cooled.populations()[0] > 0.9999, "p0 = {}", cooled.populations()[0]);
    }

    #[test]
    fn two_pi_transfer() {
        let constants = AtomicConstants::builtin();
        let table =
            transition_table(&constants, (Term::S12, Term::D52), 3.4, CouplingGeometry::Uniform)
                .unwrap();
        let steps = [
            (
                QuantumLevel::new(Term::S12, 4, 4).unwrap(),
                QuantumLevel::new(Term::D52, 4, 2).unwrap(),
            ),
            (
                QuantumLevel::new(Term::S12, 4, 0).unwrap(),
                QuantumLevel::new(Term::D52, 4, 2).unwrap(),
            ),
        ];
        let p = transfer_two_pi(&table, &steps, 0.995).unwrap();
        assert_relative_eq!(p, 0.990, max_relative = 1e-4);
        assert_eq!(transfer_two_pi(&table, &steps, 1.0).unwrap(), 1.0);

        // a |delta_m| > 2 step is rejected
        let illegal = [
            (
                QuantumLevel::new(Term::S12, 4, 4).unwrap(),
                QuantumLevel::new(Term::D52, 5, 1).unwrap(),
            ),
            steps[1],
        ];
        assert!(transfer_two_pi(&table, &illegal, 0.99).is_err());
    }

    #[test]
    fn four_step_transfer() {
        let omega = 2.0 * std::f64::consts::PI * 10e3;
        // widely spaced neighbors: error vanishes
        let far = transfer_four_step(FourStepDrive::Microwave, &[omega; 4], 1e9).unwrap();
        assert!(far.off_resonant_error < 1e-9);
        // spacing = 10x the Rabi frequency: each step bounded by 1/101
        let spacing = 10.0 * omega / (2.0 * std::f64::consts::PI);
        let near = transfer_four_step(FourStepDrive::Raman, &[omega; 4], spacing).unwrap();
        for err in &near.per_step_error {
            assert!(*err <= 1.0 / 101.0 + 1e-12, "per-step error {err}");
        }
        // the weakest step dominates the duration
        let weak = transfer_four_step(
            FourStepDrive::Microwave,
            &[omega, omega, omega, omega / 2.0],
            1e6,
        )
        .unwrap();
        let t_pi = std::f64::consts::PI / omega;
        assert_relative_eq!(weak.duration_s, 5.0 * t_pi, max_relative = 1e-12);
    }

    #[test]
    fn dipole_pump_budget() {
        let budget = DipolePumpBudget {
            scattering_events: 6.0,
            recoil_quanta_per_event: 0.05,
            polarization_leakage: 0.02,
        };
        let (heating, failure) = budget.estimate();
        assert_relative_eq!(heating, 0.30, max_relative = 1e-12);
        assert!(failure > 0.1 && failure < 0.15);
    }
}
