//! Wigner 3-j and 6-j symbols for the angular-momentum algebra behind the
//! quadrupole and magnetic-dipole coupling strengths.
//!
//! Angular momenta are passed as doubled integers (`two_j = 2j`) so that
//! half-integer spins stay exact. The Racah closed forms are evaluated in
//! f64 with a factorial table; for the j <= 8 arguments used here this is
//! accurate to ~1e-12.

const FACT_LEN: usize = 130;

fn factorials() -> &'static [f64; FACT_LEN] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<[f64; FACT_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [1.0; FACT_LEN];
        for i in 1..FACT_LEN {
            t[i] = t[i - 1] * i as f64;
        }
        t
    })
}

fn fact(n: i32) -> f64 {
    factorials()[n as usize]
}

fn triangle_ok(two_a: u32, two_b: u32, two_c: u32) -> bool {
    let (a, b, c) = (two_a as i32, two_b as i32, two_c as i32);
    c <= a + b && a <= b + c && b <= c + a && (a + b + c) % 2 == 0
}

/// sqrt of the triangle coefficient Delta(abc).
fn sqrt_triangle(two_a: u32, two_b: u32, two_c: u32) -> f64 {
    let (a, b, c) = (two_a as i32, two_b as i32, two_c as i32);
    let n1 = fact((a + b - c) / 2);
    let n2 = fact((a - b + c) / 2);
    let n3 = fact((-a + b + c) / 2);
    let d = fact((a + b + c) / 2 + 1);
    (n1 * n2 * n3 / d).sqrt()
}

/// Wigner 3-j symbol (j1 j2 j3; m1 m2 m3), arguments doubled.
///
/// Returns 0 for arguments violating the selection rules; panics on
/// inconsistent inputs (|m| > j or j/m parity mismatch), which indicate a
/// programming error rather than a physical zero.
pub fn wigner_3j(
    two_j1: u32,
    two_j2: u32,
    two_j3: u32,
    two_m1: i32,
    two_m2: i32,
    two_m3: i32,
) -> f64 {
    for (tj, tm) in [(two_j1, two_m1), (two_j2, two_m2), (two_j3, two_m3)] {
        assert!(
            tm.unsigned_abs() <= tj && (tj as i32 - tm) % 2 == 0,
            "invalid (2j, 2m) = ({tj}, {tm})"
        );
    }
    if two_m1 + two_m2 + two_m3 != 0 || !triangle_ok(two_j1, two_j2, two_j3) {
        return 0.0;
    }

    let j1 = two_j1 as i32;
    let j2 = two_j2 as i32;
    let j3 = two_j3 as i32;
    let m1 = two_m1;
    let m2 = two_m2;
    let m3 = two_m3;

    // Racah sum limits (all quantities below are plain integers).
    let alpha1 = (j2 - j3 - m1) / 2;
    let alpha2 = (j1 - j3 + m2) / 2;
    let beta1 = (j1 + j2 - j3) / 2;
    let beta2 = (j1 - m1) / 2;
    let beta3 = (j2 + m2) / 2;
    let k_min = 0.max(alpha1).max(alpha2);
    let k_max = beta1.min(beta2).min(beta3);
    if k_min > k_max {
        return 0.0;
    }

    let mut sum = 0.0;
    for k in k_min..=k_max {
        let term = fact(k)
            * fact(beta1 - k)
            * fact(beta2 - k)
            * fact(beta3 - k)
            * fact(k - alpha1)
            * fact(k - alpha2);
        sum += if k % 2 == 0 { 1.0 } else { -1.0 } / term;
    }

    let prefactor = sqrt_triangle(two_j1, two_j2, two_j3)
        * (fact((j1 + m1) / 2)
            * fact((j1 - m1) / 2)
            * fact((j2 + m2) / 2)
            * fact((j2 - m2) / 2)
            * fact((j3 + m3) / 2)
            * fact((j3 - m3) / 2))
        .sqrt();

    let phase = if ((j1 - j2 - m3) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    phase * prefactor * sum
}

/// Wigner 6-j symbol {j1 j2 j3; j4 j5 j6}, arguments doubled.
pub fn wigner_6j(
    two_j1: u32,
    two_j2: u32,
    two_j3: u32,
    two_j4: u32,
    two_j5: u32,
    two_j6: u32,
) -> f64 {
    if !triangle_ok(two_j1, two_j2, two_j3)
        || !triangle_ok(two_j1, two_j5, two_j6)
        || !triangle_ok(two_j4, two_j2, two_j6)
        || !triangle_ok(two_j4, two_j5, two_j3)
    {
        return 0.0;
    }

    let a1 = (two_j1 + two_j2 + two_j3) as i32 / 2;
    let a2 = (two_j1 + two_j5 + two_j6) as i32 / 2;
    let a3 = (two_j4 + two_j2 + two_j6) as i32 / 2;
    let a4 = (two_j4 + two_j5 + two_j3) as i32 / 2;
    let b1 = (two_j1 + two_j2 + two_j4 + two_j5) as i32 / 2;
    let b2 = (two_j2 + two_j3 + two_j5 + two_j6) as i32 / 2;
    let b3 = (two_j3 + two_j1 + two_j6 + two_j4) as i32 / 2;

    let t_min = a1.max(a2).max(a3).max(a4);
    let t_max = b1.min(b2).min(b3);
    let mut sum = 0.0;
    for t in t_min..=t_max {
        let term = fact(t + 1)
            / (fact(t - a1)
                * fact(t - a2)
                * fact(t - a3)
                * fact(t - a4)
                * fact(b1 - t)
                * fact(b2 - t)
                * fact(b3 - t));
        sum += if t % 2 == 0 { term } else { -term };
    }

    sqrt_triangle(two_j1, two_j2, two_j3)
        * sqrt_triangle(two_j1, two_j5, two_j6)
        * sqrt_triangle(two_j4, two_j2, two_j6)
        * sqrt_triangle(two_j4, two_j5, two_j3)
        * sum
}
