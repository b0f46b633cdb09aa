//! Physical constants and the atomic-constants file loader.
//!
//! Fundamental constants are CODATA 2018 values compiled in. Atomic
//! structure data (hyperfine constants, g-factors, lifetimes) come from a
//! key-value constants file so they can be revised independently of the
//! code; [`AtomicConstants::builtin`] parses the copy embedded at build
//! time.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant (J s).
pub const PLANCK_H: f64 = 6.626_070_15e-34;
/// Unified atomic mass unit (kg).
pub const ATOMIC_MASS_KG: f64 = 1.660_539_066_60e-27;
/// Bohr magneton over Planck constant, in Hz per gauss.
pub const BOHR_MAGNETON_HZ_PER_G: f64 = 1.399_624_493_6e6;
/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Electronic term of the valence electron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Term {
    S12,
    P12,
    P32,
    D32,
    D52,
}

pub const ALL_TERMS: [Term; 5] = [Term::S12, Term::P12, Term::P32, Term::D32, Term::D52];

impl Term {
    /// Twice the electronic angular momentum J.
    pub fn two_j(self) -> u32 {
        match self {
            Term::S12 | Term::P12 => 1,
            Term::P32 | Term::D32 => 3,
            Term::D52 => 5,
        }
    }

    pub fn j(self) -> f64 {
        self.two_j() as f64 / 2.0
    }

    pub fn label(self) -> &'static str {
        match self {
            Term::S12 => "S1/2",
            Term::P12 => "P1/2",
            Term::P32 => "P3/2",
            Term::D32 => "D3/2",
            Term::D52 => "D5/2",
        }
    }
}

impl std::fmt::Display for Term {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Immutable atomic-structure data loaded from a constants file.
#[derive(Debug, Clone)]
pub struct AtomicConstants {
    pub revision: f64,
    /// Nuclear spin I (7/2 for 43Ca+).
    pub nuclear_spin: f64,
    /// Ion mass (kg).
    pub mass_kg: f64,
    /// Nuclear g-factor in Bohr magnetons (Zeeman convention
    /// `H/h = mu_B_Hz * B * (g_J mJ + g_I mI)`).
    pub g_i: f64,
    g_j: BTreeMap<Term, f64>,
    hyperfine_a_hz: BTreeMap<Term, f64>,
    hyperfine_b_hz: BTreeMap<Term, f64>,
    /// S1/2 F=4 <-> F=3 zero-field interval (Hz).
    pub ground_hfs_hz: f64,
    /// D5/2 lifetime (s).
    pub d52_lifetime_s: f64,
    /// D3/2 lifetime (s).
    pub d32_lifetime_s: f64,
    /// P1/2 natural linewidth gamma/2pi (Hz).
    pub p12_linewidth_hz: f64,
    /// P3/2 natural linewidth gamma/2pi (Hz).
    pub p32_linewidth_hz: f64,
    /// SHA-256 of the source text, hex-encoded; provenance for reports.
    pub source_hash: String,
}

const BUILTIN: &str = include_str!("../data/ca43.constants");

const KEYS: &[&str] = &[
    "revision",
    "nuclear_spin",
    "mass_u",
    "g_i",
    "g_j_s12",
    "g_j_p12",
    "g_j_p32",
    "g_j_d32",
    "g_j_d52",
    "a_s12_hz",
    "a_p12_hz",
    "a_p32_hz",
    "a_d32_hz",
    "a_d52_hz",
    "b_p32_hz",
    "b_d32_hz",
    "b_d52_hz",
    "ground_hfs_hz",
    "d52_lifetime_s",
    "d32_lifetime_s",
    "p12_linewidth_hz",
    "p32_linewidth_hz",
];

impl AtomicConstants {
    /// Parse the constants file embedded in the crate.
    pub fn builtin() -> Self {
        // The embedded file is validated by the test suite; a parse failure
        // here is a build defect, not a runtime condition.
        Self::parse(BUILTIN).expect("embedded constants file is valid")
    }

    /// Parse constants from file text, applying `overrides` (key -> value)
    /// on top. Unknown keys, duplicates, missing keys and out-of-range
    /// values are rejected with the offending line number.
    pub fn parse_with_overrides(text: &str, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let mut raw: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let stripped = line.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or(Error::Constants {
                line: lineno,
                msg: format!("expected `key = value`, got `{stripped}`"),
            })?;
            let key = key.trim();
            let value: f64 = value.trim().parse().map_err(|_| Error::Constants {
                line: lineno,
                msg: format!("`{}` is not a number", value.trim()),
            })?;
            if !KEYS.contains(&key) {
                return Err(Error::Constants {
                    line: lineno,
                    msg: format!("unknown key `{key}`"),
                });
            }
            if raw.insert(key.to_string(), (value, lineno)).is_some() {
                return Err(Error::Constants {
                    line: lineno,
                    msg: format!("duplicate key `{key}`"),
                });
            }
        }
        for (key, value) in overrides {
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Constants {
                    line: 0,
                    msg: format!("unknown override key `{key}`"),
                });
            }
            raw.insert(key.clone(), (*value, 0));
        }

        let get = |key: &str| -> Result<(f64, usize)> {
            raw.get(key).copied().ok_or(Error::Constants {
                line: 0,
                msg: format!("missing key `{key}`"),
            })
        };
        let get_positive = |key: &str| -> Result<f64> {
            let (v, line) = get(key)?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Constants {
                    line,
                    msg: format!("`{key}` must be positive, got {v}"),
                })
            }
        };
        let get_finite = |key: &str| -> Result<f64> {
            let (v, line) = get(key)?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Constants {
                    line,
                    msg: format!("`{key}` must be finite"),
                })
            }
        };

        let nuclear_spin = get_positive("nuclear_spin")?;
        if (nuclear_spin - 3.5).abs() > 1e-12 {
            let (_, line) = get("nuclear_spin")?;
            return Err(Error::Constants {
                line,
                msg: format!("nuclear_spin must be 3.5 for this ion, got {nuclear_spin}"),
            });
        }
        let ground_hfs_hz = get_positive("ground_hfs_hz")?;
        if (ground_hfs_hz - 3.2e9).abs() / 3.2e9 > 0.01 {
            let (_, line) = get("ground_hfs_hz")?;
            return Err(Error::Constants {
                line,
                msg: format!("ground_hfs_hz {ground_hfs_hz} not within 1% of 3.2 GHz"),
            });
        }

        let mut g_j = BTreeMap::new();
        let mut a_hz = BTreeMap::new();
        let mut b_hz = BTreeMap::new();
        for (term, suffix) in [
            (Term::S12, "s12"),
            (Term::P12, "p12"),
            (Term::P32, "p32"),
            (Term::D32, "d32"),
            (Term::D52, "d52"),
        ] {
            g_j.insert(term, get_positive(&format!("g_j_{suffix}"))?);
            a_hz.insert(term, get_finite(&format!("a_{suffix}_hz"))?);
            let b = match term {
                Term::S12 | Term::P12 => 0.0,
                _ => get_finite(&format!("b_{suffix}_hz"))?,
            };
            b_hz.insert(term, b);
        }

        let mut hasher_input = String::new();
        for (k, (v, _)) in &raw {
            let _ = writeln!(hasher_input, "{k}={v:e}");
        }

        Ok(AtomicConstants {
            revision: get_finite("revision")?,
            nuclear_spin,
            mass_kg: get_positive("mass_u")? * ATOMIC_MASS_KG,
            g_i: get_finite("g_i")?,
            g_j,
            hyperfine_a_hz: a_hz,
            hyperfine_b_hz: b_hz,
            ground_hfs_hz,
            d52_lifetime_s: get_positive("d52_lifetime_s")?,
            d32_lifetime_s: get_positive("d32_lifetime_s")?,
            p12_linewidth_hz: get_positive("p12_linewidth_hz")?,
            p32_linewidth_hz: get_positive("p32_linewidth_hz")?,
            source_hash: sha256_hex(hasher_input.as_bytes()),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides(text, &BTreeMap::new())
    }

    /// Builtin constants with overrides applied.
    pub fn builtin_with_overrides(overrides: &BTreeMap<String, f64>) -> Result<Self> {
        Self::parse_with_overrides(BUILTIN, overrides)
    }

    /// The embedded constants file text.
    pub fn builtin_text() -> &'static str {
        BUILTIN
    }

    pub fn g_j(&self, term: Term) -> f64 {
        self.g_j[&term]
    }

    /// Magnetic-dipole hyperfine constant A (Hz).
    pub fn hyperfine_a_hz(&self, term: Term) -> f64 {
        self.hyperfine_a_hz[&term]
    }

    /// Electric-quadrupole hyperfine constant B (Hz); zero for J = 1/2.
    pub fn hyperfine_b_hz(&self, term: Term) -> f64 {
        self.hyperfine_b_hz[&term]
    }
}

/// Minimal SHA-256, used only to fingerprint the constants file.
fn sha256_hex(data: &[u8]) -> String {
    // FIPS 180-4. Small enough that a dependency is not warranted in core.
    const K: [u32; 64] = [
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
        0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
        0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
        0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
        0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
        0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
        0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
        0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
        0xc67178f2,
    ];
    let mut h: [u32; 8] = [
        0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab,
        0x5be0cd19,
    ];
    let mut msg = data.to_vec();
    let bitlen = (data.len() as u64) * 8;
    msg.push(0x80);
    while msg.len() % 64 != 56 {
        msg.push(0);
    }
    msg.extend_from_slice(&bitlen.to_be_bytes());
    for chunk in msg.chunks(64) {
        let mut w = [0u32; 64];
        for (i, word) in chunk.chunks(4).enumerate() {
            w[i] = u32::from_be_bytes([word[0], word[1], word[2], word[3]]);
        }
        for i in 16..64 {
            let s0 = w[i - 15].rotate_right(7) ^ w[i - 15].rotate_right(18) ^ (w[i - 15] >> 3);
            let s1 = w[i - 2].rotate_right(17) ^ w[i - 2].rotate_right(19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16]
                .wrapping_add(s0)
                .wrapping_add(w[i - 7])
                .wrapping_add(s1);
        }
        let [mut a, mut b, mut c, mut d, mut e, mut f, mut g, mut hh] = h;
        for i in 0..64 {
            let s1 = e.rotate_right(6) ^ e.rotate_right(11) ^ e.rotate_right(25);
            let ch = (e & f) ^ (!e & g);
            let t1 = hh
                .wrapping_add(s1)
                .wrapping_add(ch)
                .wrapping_add(K[i])
                .wrapping_add(w[i]);
            let s0 = a.rotate_right(2) ^ a.rotate_right(13) ^ a.rotate_right(22);
            let maj = (a & b) ^ (a & c) ^ (b & c);
            let t2 = s0.wrapping_add(maj);
            hh = g;
            g = f;
            f = e;
            e = d.wrapping_add(t1);
            d = c;
            c = b;
            b = a;
            a = t1.wrapping_add(t2);
        }
        h[0] = h[0].wrapping_add(a);
        h[1] = h[1].wrapping_add(b);
        h[2] = h[2].wrapping_add(c);
        h[3] = h[3].wrapping_add(d);
        h[4] = h[4].wrapping_add(e);
        h[5] = h[5].wrapping_add(f);
        h[6] = h[6].wrapping_add(g);
        h[7] = h[7].wrapping_add(hh);
    }
    let mut out = String::with_capacity(64);
    for word in h {
        let _ = write!(out, "{word:08x}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_parses_and_is_consistent() {
        let c = AtomicConstants::builtin();
        assert!((c.nuclear_spin - 3.5).abs() < 1e-15);
        // ground splitting equals 4|A(S1/2)| within rounding of the inputs
        let a = c.hyperfine_a_hz(Term::S12);
        assert!((c.ground_hfs_hz - 4.0 * a.abs()).abs() < 1.0);
        assert!((c.ground_hfs_hz - 3.2e9).abs() / 3.2e9 < 0.01);
        assert!(c.d52_lifetime_s > 0.0);
        assert!(c.p12_linewidth_hz > 0.0);
        assert_eq!(c.source_hash.len(), 64);
    }

    #[test]
    fn rejects_unknown_key_with_line_number() {
        let text = "revision = 1\nbogus_key = 2\n";
        match AtomicConstants::parse(text) {
            Err(Error::Constants { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected constants error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_negative_lifetime() {
        let mut overrides = BTreeMap::new();
        overrides.insert("d52_lifetime_s".to_string(), -1.0);
        assert!(AtomicConstants::builtin_with_overrides(&overrides).is_err());
    }

    #[test]
    fn rejects_missing_key() {
        let text = "revision = 1\n";
        match AtomicConstants::parse(text) {
            Err(Error::Constants { msg, .. }) => assert!(msg.contains("missing")),
            other => panic!("expected constants error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_line() {
        let text = "revision
";
        match AtomicConstants::parse(text) {
            Err(Error::Constants { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected constants error, got {other:?}"),
        }
    }

    #[test]
    fn overrides_apply() {
        let mut overrides = BTreeMap::new();
        overrides.insert("a_d52_hz".to_string(), -3.9e6);
        let c = AtomicConstants::builtin_with_overrides(&overrides).unwrap();
        assert_eq!(c.hyperfine_a_hz(Term::D52), -3.9e6);
        // hash must change with the contents
        assert_ne!(c.source_hash, AtomicConstants::builtin().source_hash);
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
