//! Small statistical helpers: log-gamma, regularized incomplete gamma,
//! Poisson tail probabilities and a chi-square goodness-of-fit p-value.

/// Natural log of the gamma function (Lanczos approximation, |err| < 2e-10).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for c in COEFFS {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_p domain: a={a}, x={x}");
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // series representation
        let mut ap = a;
        let mut sum = 1.0 / a;
        let mut del = sum;
        for _ in 0..500 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-15 {
                break;
            }
        }
        sum * (-x + a * x.ln() - ln_gamma(a)).exp()
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) by continued fraction,
/// valid for x >= a + 1.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Poisson pmf P(X = k) for rate `lambda`.
pub fn poisson_pmf(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)).exp()
}

/// Poisson lower tail P(X < k) (strictly less).
pub fn poisson_cdf_below(lambda: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    // P(X <= k-1) = Q(k, lambda)
    1.0 - gamma_p(k as f64, lambda)
}

/// Poisson upper tail P(X >= k).
pub fn poisson_sf(lambda: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    gamma_p(k as f64, lambda)
}

/// p-value of a chi-square statistic with `dof` degrees of freedom.
pub fn chi_square_p_value(chi2: f64, dof: usize) -> f64 {
    1.0 - gamma_p(dof as f64 / 2.0, chi2 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ln_gamma_factorials() {
        for n in 1..15u64 {
            let fact: f64 = (1..n).map(|k| k as f64).product();
            assert_relative_eq!(ln_gamma(n as f64), fact.ln(), max_relative = 1e-10);
        }
    }

    #[test]
    fn poisson_consistency() {
        let lambda = 2.4;
        // pmf sums to the complementary tails
        let mut cum = 0.0;
        for k in 0..12u64 {
            cum += poisson_pmf(lambda, k);
            assert_relative_eq!(
                poisson_cdf_below(lambda, k + 1),
                cum,
                max_relative = 1e-9
            );
            assert_relative_eq!(
                poisson_sf(lambda, k + 1),
                1.0 - cum,
                epsilon = 1e-12,
                max_relative = 1e-9
            );
        }
        // reference value: P(X >= 12) at lambda = 2.4 is ~8.4e-6
        let tail = poisson_sf(2.4, 12);
        assert!((tail - 8.45e-6).abs() / 8.45e-6 < 0.01, "tail = {tail}");
    }

    #[test]
    fn chi_square_reference_points() {
        // chi2 = dof has p ~ 0.44 for 10 dof; huge chi2 has p ~ 0
        let p = chi_square_p_value(10.0, 10);
        assert!((p - 0.4405).abs() < 5e-3, "p = {p}");
        assert!(chi_square_p_value(100.0, 10) < 1e-10);
        // 1% critical value for 10 dof is 23.21
        let p = chi_square_p_value(23.21, 10);
        assert!((p - 0.01).abs() < 5e-4, "p = {p}");
    }
}
