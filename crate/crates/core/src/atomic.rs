//! Static atomic structure: Zeeman/hyperfine level energies, Lande
//! g-factors, clock-transition field sensitivity and the S1/2 <-> D5/2
//! quadrupole line table.
//!
//! The S1/2 manifold (J = 1/2) is treated with the exact Breit-Rabi
//! diagonalization; D and P terms use first-order linear Zeeman shifts on
//! top of the A/B hyperfine intervals, which is adequate below ~5 G.

use serde::{Deserialize, Serialize};

use crate::constants::{AtomicConstants, Term, ALL_TERMS, BOHR_MAGNETON_HZ_PER_G};
use crate::error::{Error, Result};
use crate::wigner::{wigner_3j, wigner_6j};

/// Magnetic-field validity window (gauss) for the Zeeman routines.
pub const MAX_FIELD_GAUSS: f64 = 10.0;

/// One electronic/hyperfine/Zeeman state of the valence electron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuantumLevel {
    pub term: Term,
    pub f: u32,
    pub m_f: i32,
}

impl QuantumLevel {
    pub fn new(term: Term, f: u32, m_f: i32) -> Result<Self> {
        let two_i = 7u32;
        let two_j = term.two_j();
        let f_min = two_i.abs_diff(two_j) / 2;
        let f_max = (two_i + two_j) / 2;
        if f < f_min || f > f_max {
            return Err(Error::structural(format!(
                "F={f} outside {f_min}..{f_max} for {term}"
            )));
        }
        if m_f.unsigned_abs() > f {
            return Err(Error::structural(format!("|mF|={m_f} exceeds F={f}")));
        }
        Ok(QuantumLevel { term, f, m_f })
    }

    /// All Zeeman states of all five terms. For I = 7/2 this enumerates
    /// exactly 144 states.
    pub fn enumerate_all() -> Vec<QuantumLevel> {
        let mut levels = Vec::new();
        for term in ALL_TERMS {
            let two_j = term.two_j();
            let f_min = 7u32.abs_diff(two_j) / 2;
            let f_max = (7 + two_j) / 2;
            for f in f_min..=f_max {
                for m in -(f as i32)..=f as i32 {
                    levels.push(QuantumLevel { term, f, m_f: m });
                }
            }
        }
        levels
    }
}

impl std::fmt::Display for QuantumLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}(F={}, mF={})", self.term, self.f, self.m_f)
    }
}

/// Multipole character of a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Multipole {
    E1,
    E2,
    M1,
}

impl Multipole {
    /// Rank of the coupling tensor.
    pub fn rank(self) -> u32 {
        match self {
            Multipole::E1 | Multipole::M1 => 1,
            Multipole::E2 => 2,
        }
    }
}

/// A specific Zeeman-resolved transition between two levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub lower: QuantumLevel,
    pub upper: QuantumLevel,
    pub multipole: Multipole,
    pub delta_m: i32,
}

impl TransitionSpec {
    pub fn new(lower: QuantumLevel, upper: QuantumLevel, multipole: Multipole) -> Result<Self> {
        let delta_m = upper.m_f - lower.m_f;
        if delta_m.unsigned_abs() > multipole.rank() {
            return Err(Error::structural(format!(
                "|delta_m| = {} exceeds rank {} for {:?}",
                delta_m.abs(),
                multipole.rank(),
                multipole
            )));
        }
        let df = upper.f.abs_diff(lower.f);
        if df > multipole.rank() {
            return Err(Error::structural(format!(
                "|delta_F| = {df} exceeds rank {} for {:?}",
                multipole.rank(),
                multipole
            )));
        }
        Ok(TransitionSpec {
            lower,
            upper,
            multipole,
            delta_m,
        })
    }
}

fn check_field(b_gauss: f64) -> Result<()> {
    if !(0.0..=MAX_FIELD_GAUSS).contains(&b_gauss) {
        return Err(Error::range(format!(
            "B = {b_gauss} G outside validity window 0..{MAX_FIELD_GAUSS} G"
        )));
    }
    Ok(())
}

/// Lande g_F including the nuclear term.
pub fn g_factor(constants: &AtomicConstants, level: QuantumLevel) -> Result<f64> {
    // Re-validate so stale levels constructed for a different ion fail loudly.
    let level = QuantumLevel::new(level.term, level.f, level.m_f)?;
    let i = constants.nuclear_spin;
    let j = level.term.j();
    let f = level.f as f64;
    let gj = constants.g_j(level.term);
    let gi = constants.g_i;
    let ff = f * (f + 1.0);
    let jj = j * (j + 1.0);
    let ii = i * (i + 1.0);
    Ok(gj * (ff + jj - ii) / (2.0 * ff) + gi * (ff + ii - jj) / (2.0 * ff))
}

/// Zero-field hyperfine shift of (term, F) relative to the term centroid (Hz).
pub fn hyperfine_shift_hz(constants: &AtomicConstants, term: Term, f: u32) -> f64 {
    let i = constants.nuclear_spin;
    let j = term.j();
    let f = f as f64;
    let k = f * (f + 1.0) - i * (i + 1.0) - j * (j + 1.0);
    let a = constants.hyperfine_a_hz(term);
    let mut shift = 0.5 * a * k;
    let b = constants.hyperfine_b_hz(term);
    if b != 0.0 && j > 0.5 {
        shift += b * (1.5 * k * (k + 1.0) - 2.0 * i * (i + 1.0) * j * (j + 1.0))
            / (4.0 * i * (2.0 * i - 1.0) * j * (2.0 * j - 1.0));
    }
    shift
}

/// Exact S1/2 level energy at field `b_gauss` (Hz, relative to the S1/2
/// hyperfine centroid), from diagonalizing A I.J + Zeeman in each block of
/// conserved m = mJ + mI. This is the Breit-Rabi result.
///
/// `b_gauss` may be negative here; the sign flips the quantization axis.
pub(crate) fn s12_energy_hz(constants: &AtomicConstants, f: u32, m_f: i32, b_gauss: f64) -> f64 {
    let a = constants.hyperfine_a_hz(Term::S12);
    let gj = constants.g_j(Term::S12);
    let gi = constants.g_i;
    let i = constants.nuclear_spin;
    let mu_b = BOHR_MAGNETON_HZ_PER_G * b_gauss;
    let m = m_f as f64;

    // Stretched states |mJ = +-1/2, mI = +-7/2| are eigenstates at any field.
    if m_f.unsigned_abs() as f64 == i + 0.5 {
        let sign = if m_f > 0 { 1.0 } else { -1.0 };
        return a * 0.5 * i + sign * mu_b * (0.5 * gj + i * gi);
    }

    // 2x2 block in {|mJ=+1/2, mI=m-1/2>, |mJ=-1/2, mI=m+1/2>}.
    let h11 = 0.5 * a * (m - 0.5) + mu_b * (0.5 * gj + gi * (m - 0.5));
    let h22 = -0.5 * a * (m + 0.5) + mu_b * (-0.5 * gj + gi * (m + 0.5));
    let h12 = 0.5 * a * (i * (i + 1.0) + 0.25 - m * m).sqrt();
    let mean = 0.5 * (h11 + h22);
    let disc = (0.25 * (h11 - h22) * (h11 - h22) + h12 * h12).sqrt();

    // Branch assignment: the eigenvalue continuously connected to the
    // zero-field hyperfine energy of this F.
    let upper_f = if hyperfine_shift_hz(constants, Term::S12, 4)
        >= hyperfine_shift_hz(constants, Term::S12, 3)
    {
        4
    } else {
        3
    };
    if f == upper_f {
        mean + disc
    } else {
        mean - disc
    }
}

/// Zeeman shift of `level` at field `b_gauss`, in Hz relative to its
/// field-free hyperfine level. Exact Breit-Rabi for S1/2, first-order
/// linear Zeeman for the other terms.
pub fn zeeman_frequency(
    constants: &AtomicConstants,
    level: QuantumLevel,
    b_gauss: f64,
) -> Result<f64> {
    check_field(b_gauss)?;
    let level = QuantumLevel::new(level.term, level.f, level.m_f)?;
    match level.term {
        Term::S12 => Ok(s12_energy_hz(constants, level.f, level.m_f, b_gauss)
            - s12_energy_hz(constants, level.f, level.m_f, 0.0)),
        _ => {
            let gf = g_factor(constants, level)?;
            Ok(gf * level.m_f as f64 * BOHR_MAGNETON_HZ_PER_G * b_gauss)
        }
    }
}

/// Second-order Zeeman shift of the clock transition
/// S1/2(F=4, mF=0) <-> S1/2(F=3, mF=0) and its field derivative.
///
/// Returns `(shift_hz, slope_hz_per_gauss)`.
pub fn clock_sensitivity(constants: &AtomicConstants, b_gauss: f64) -> Result<(f64, f64)> {
    check_field(b_gauss)?;
    // For mF = 0 both Breit-Rabi blocks reduce to
    //   f(B) = sqrt(nu0^2 + x^2), x = (gJ - gI) muB B,
    // so shift and slope have closed forms.
    let nu0 = (s12_energy_hz(constants, 3, 0, 0.0) - s12_energy_hz(constants, 4, 0, 0.0)).abs();
    let coupling = (constants.g_j(Term::S12) - constants.g_i) * BOHR_MAGNETON_HZ_PER_G;
    let x = coupling * b_gauss;
    let f = (nu0 * nu0 + x * x).sqrt();
    let shift = f - nu0;
    let slope = coupling * coupling * b_gauss / f;
    Ok((shift, slope))
}

/// Beam-geometry weighting of the quadrupole coupling per |delta_m|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CouplingGeometry {
    /// No angular weighting; strengths are pure angular-momentum factors.
    Uniform,
    /// Standing geometry factors for an E2 transition driven by a beam at
    /// angle `phi` to the quantization axis with linear polarization angle
    /// `gamma` out of the k-B plane.
    Angles { phi: f64, gamma: f64 },
}

impl CouplingGeometry {
    fn weight(&self, delta_m: i32) -> f64 {
        match *self {
            CouplingGeometry::Uniform => 1.0,
            CouplingGeometry::Angles { phi, gamma } => {
                let (cg, sg) = (gamma.cos(), gamma.sin());
                match delta_m.abs() {
                    0 => 0.5 * (cg * (2.0 * phi).sin()).abs(),
                    1 => {
                        let re = cg * (2.0 * phi).cos();
                        let im = sg * phi.cos();
                        (re * re + im * im).sqrt() / 6.0_f64.sqrt()
                    }
                    2 => {
                        let re = 0.5 * cg * (2.0 * phi).sin();
                        let im = sg * phi.sin();
                        (re * re + im * im).sqrt() / 6.0_f64.sqrt()
                    }
                    _ => 0.0,
                }
            }
        }
    }
}

/// One line of the transition table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionLine {
    pub spec: TransitionSpec,
    /// Line offset (Hz) from the field-free centroid-to-centroid frequency
    /// of the manifold pair. Absolute optical frequencies are out of scope.
    pub frequency_hz: f64,
    /// Coupling strength relative to the stretched line of the pair.
    pub relative_strength: f64,
}

fn level_energy_hz(constants: &AtomicConstants, level: QuantumLevel, b_gauss: f64) -> Result<f64> {
    Ok(match level.term {
        Term::S12 => s12_energy_hz(constants, level.f, level.m_f, b_gauss),
        _ => {
            hyperfine_shift_hz(constants, level.term, level.f)
                + g_factor(constants, level)? * level.m_f as f64 * BOHR_MAGNETON_HZ_PER_G * b_gauss
        }
    })
}

/// Reduced-matrix-element factor of rank `k` between hyperfine levels,
/// with the electronic reduced element divided out:
/// sqrt((2F+1)(2F'+1)) * {J' F' I; F J k} * 3j(F' k F; -mF' q mF).
fn hyperfine_amplitude(
    constants: &AtomicConstants,
    lower: QuantumLevel,
    upper: QuantumLevel,
    rank: u32,
) -> f64 {
    let two_i = (2.0 * constants.nuclear_spin).round() as u32;
    let two_k = 2 * rank;
    let f1 = lower.f * 2;
    let f2 = upper.f * 2;
    let q = upper.m_f - lower.m_f;
    let six_j = wigner_6j(
        upper.term.two_j(),
        f2,
        two_i,
        f1,
        lower.term.two_j(),
        two_k,
    );
    let three_j = wigner_3j(f2, two_k, f1, -2 * upper.m_f, 2 * q, 2 * lower.m_f);
    (((f1 + 1) * (f2 + 1)) as f64).sqrt() * six_j * three_j
}

/// All E2-allowed Zeeman lines between two manifolds with frequencies and
/// relative strengths. Only S1/2 <-> D5/2 is supported.
///
/// Strengths are normalized so the stretched line
/// S1/2(4,4) <-> D5/2(6,6) equals 1 under uniform geometry. Lines allowed
/// by the selection rules are listed even when the angular factor happens
/// to vanish, so the table length equals the selection-rule count.
pub fn transition_table(
    constants: &AtomicConstants,
    pair: (Term, Term),
    b_gauss: f64,
    geometry: CouplingGeometry,
) -> Result<Vec<TransitionLine>> {
    check_field(b_gauss)?;
    if pair != (Term::S12, Term::D52) {
        return Err(Error::structural(format!(
            "unsupported manifold pair {} <-> {}",
            pair.0, pair.1
        )));
    }

    let stretched_lower = QuantumLevel::new(Term::S12, 4, 4)?;
    let stretched_upper = QuantumLevel::new(Term::D52, 6, 6)?;
    let norm = hyperfine_amplitude(constants, stretched_lower, stretched_upper, 2).abs();

    let mut lines = Vec::new();
    for fl in 3..=4u32 {
        for ml in -(fl as i32)..=fl as i32 {
            let lower = QuantumLevel::new(Term::S12, fl, ml)?;
            for fu in 1..=6u32 {
                if fu.abs_diff(fl) > 2 {
                    continue;
                }
                for mu in -(fu as i32)..=fu as i32 {
                    if (mu - ml).unsigned_abs() > 2 {
                        continue;
                    }
                    let upper = QuantumLevel::new(Term::D52, fu, mu)?;
                    let spec = TransitionSpec::new(lower, upper, Multipole::E2)?;
                    let amp = hyperfine_amplitude(constants, lower, upper, 2).abs() / norm;
                    let strength = amp * geometry.weight(spec.delta_m)
                        / geometry.weight(2).max(f64::MIN_POSITIVE);
                    let frequency_hz = level_energy_hz(constants, upper, b_gauss)?
                        - level_energy_hz(constants, lower, b_gauss)?;
                    lines.push(TransitionLine {
                        spec,
                        frequency_hz,
                        relative_strength: strength,
                    });
                }
            }
        }
    }
    Ok(lines)
}

/// Adjacent-mF Zeeman spacings of D5/2(F=4) and S1/2(F=4) and their ratio.
#[derive(Debug, Clone, Copy)]
pub struct NeighborSpacing {
    pub d52_hz: f64,
    pub s12_hz: f64,
    pub ratio: f64,
}

/// Mean spacing between neighboring Zeeman levels of D5/2(F=4) versus
/// S1/2(F=4) at field `b_gauss`.
pub fn dstate_neighbor_spacing(constants: &AtomicConstants, b_gauss: f64) -> Result<NeighborSpacing> {
    check_field(b_gauss)?;
    let d_spacing =
        g_factor(constants, QuantumLevel::new(Term::D52, 4, 0)?)?.abs() * BOHR_MAGNETON_HZ_PER_G * b_gauss;
    let mut s_spacing = 0.0;
    for m in -4..4 {
        let e0 = s12_energy_hz(constants, 4, m, b_gauss);
        let e1 = s12_energy_hz(constants, 4, m + 1, b_gauss);
        s_spacing += (e1 - e0).abs();
    }
    s_spacing /= 8.0;
    let ratio = if b_gauss == 0.0 {
        // Both spacings vanish; report the zero-field slope ratio instead.
        let gd = g_factor(constants, QuantumLevel::new(Term::D52, 4, 0)?)?.abs();
        let gs = g_factor(constants, QuantumLevel::new(Term::S12, 4, 0)?)?.abs();
        gd / gs
    } else {
        d_spacing / s_spacing
    };
    Ok(NeighborSpacing {
        d52_hz: d_spacing,
        s12_hz: s_spacing,
        ratio,
    })
}
