//! Special functions and the softmax map.

use crate::error::{Error, Result};
use crate::prob::ProbVector;

/// Gauss error function. Backed by the musl rational approximations, which
/// are accurate to about one ulp on the whole real line.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function `1 − erf(x)`, accurate in the upper tail.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal survival function `1 − Φ(z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Regularized incomplete beta `I_x(a, b)`, with `y = 1 − x` supplied by the
/// caller so that it can be formed without cancellation.
///
/// Continued fraction evaluated with the modified Lentz method, switching to
/// `1 − I_y(b, a)` where the fraction converges slowly.
pub fn inc_beta_reg(a: f64, b: f64, x: f64, y: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * y.ln() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() / a) * beta_cf(a, b, x)
    } else {
        1.0 - (ln_front.exp() / b) * beta_cf(b, a, y)
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 100_000;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Upper tail `P(T > t)` of Student's t with `nu` degrees of freedom.
pub fn student_t_sf(t: f64, nu: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 0.0 } else { 1.0 };
    }
    let t2 = t * t;
    // x = ν/(ν+t²), 1 − x = t²/(ν+t²)
    let x = nu / (nu + t2);
    let y = t2 / (nu + t2);
    let tail = 0.5 * inc_beta_reg(0.5 * nu, 0.5, x, y);
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// CDF of Student's t with `nu` degrees of freedom.
pub fn student_t_cdf(t: f64, nu: f64) -> f64 {
    student_t_sf(-t, nu)
}

/// Density of Student's t with `nu` degrees of freedom.
pub fn student_t_pdf(t: f64, nu: f64) -> f64 {
    let ln_norm =
        ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * std::f64::consts::PI).ln();
    (ln_norm - 0.5 * (nu + 1.0) * (1.0 + t * t / nu).ln()).exp()
}

/// CDF of the standard Laplace distribution (location 0, scale 1).
pub fn laplace_cdf(z: f64) -> f64 {
    if z < 0.0 {
        0.5 * z.exp()
    } else {
        1.0 - 0.5 * (-z).exp()
    }
}

/// Survival function of the standard Laplace distribution.
pub fn laplace_sf(z: f64) -> f64 {
    laplace_cdf(-z)
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Result<ProbVector> {
    if logits.is_empty() {
        return Err(Error::InvalidDimension("softmax of empty vector".into()));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    Ok(ProbVector::from_normalized(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series for erf, summed to 30 terms.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        for n in 1..30 {
            let nf = n as f64;
            term *= -x * x / nf;
            sum += term / (2.0 * nf + 1.0);
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    }

    #[test]
    fn erf_basic_values() {
        assert_eq!(erf(0.0), 0.0);
        assert!((erf(6.0) - 1.0).abs() <= 1e-12);
        assert!((erf(-6.0) + 1.0).abs() <= 1e-12);
        assert!((erf(30.0) - 1.0).abs() == 0.0);
    }

    #[test]
    fn erf_matches_series_oracle() {
        for &x in &[0.5, 0.1, -0.3, 1.0, 1.5] {
            assert!((erf(x) - erf_series(x)).abs() <= 1e-12, "x={x}");
        }
    }

    #[test]
    fn student_t_reference_values() {
        // t-table: ν=5, two-sided 95% critical value 2.570582
        assert!((student_t_cdf(2.570_582, 5.0) - 0.975).abs() < 1e-6);
        // ν=1 is Cauchy: F(t) = 1/2 + atan(t)/π
        for &t in &[-3.0, -0.5, 0.0, 0.7, 4.0] {
            let cauchy = 0.5 + f64::atan(t) / std::f64::consts::PI;
            assert!((student_t_cdf(t, 1.0) - cauchy).abs() < 1e-13, "t={t}");
        }
        // ν=2 closed form: F(t) = 1/2 + t / (2 sqrt(2 + t²))
        for &t in &[-2.0, 0.3, 5.0] {
            let exact = 0.5 + t / (2.0 * (2.0_f64 + t * t).sqrt());
            assert!((student_t_cdf(t, 2.0) - exact).abs() < 1e-13, "t={t}");
        }
    }

    #[test]
    fn student_t_large_nu_approaches_normal() {
        for &t in &[-2.0, -0.5, 0.0, 1.0, 2.5] {
            assert!((student_t_cdf(t, 1e6) - normal_cdf(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn laplace_cdf_symmetry() {
        for &z in &[0.0, 0.3, 2.0, 10.0] {
            assert!((laplace_cdf(z) + laplace_cdf(-z) - 1.0).abs() < 1e-15);
        }
        assert_eq!(laplace_cdf(0.0), 0.5);
    }

    #[test]
    fn softmax_cases() {
        let s = softmax(&[0.0, 0.0, 0.0]).unwrap();
        for &p in s.as_slice() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let a = softmax(&[0.3, -1.2]).unwrap();
        let b = softmax(&[100.3, 98.8]).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
        let big = softmax(&[1000.0, 0.0]).unwrap();
        assert!((big[0] - 1.0).abs() < 1e-15 && big[1] >= 0.0 && big[1] < 1e-300);
        assert!(matches!(softmax(&[]), Err(Error::InvalidDimension(_))));
    }
}
