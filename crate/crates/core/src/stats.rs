//! Scalar statistics: means, variances, the Welch t statistic and the
//! Student t distribution function it needs.

use crate::error::{Error, Result};
use crate::fmath;

pub fn mean(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n - 1 denominator); 0 for fewer than 2 points.
pub fn sample_var(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    fmath::sqrt(sample_var(xs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Two-sided Welch t test for a difference in means, with the
/// Welch-Satterthwaite degrees of freedom.
pub fn welch_test(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::TooFewUnits {
            needed: 2,
            actual: a.len().min(b.len()),
        });
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let va = sample_var(a) / na;
    let vb = sample_var(b) / nb;
    let se2 = va + vb;
    if se2 == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let t = (mean(a) - mean(b)) / fmath::sqrt(se2);
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let p_value = 2.0 * (1.0 - student_t_cdf(fmath::abs(t), df));
    Ok(WelchTest { t, df, p_value })
}

/// Student t distribution function via the regularized incomplete beta.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    debug_assert!(df > 0.0);
    if t == 0.0 {
        return 0.5;
    }
    let x = df / (df + t * t);
    let tail = 0.5 * inc_beta_reg(0.5 * df, 0.5, x);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Regularized incomplete beta function I_x(a, b) by Lentz's continued
/// fraction, with the usual symmetry switch for fast convergence.
pub(crate) fn inc_beta_reg(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&x));
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let ln_front = fmath::lgamma(a + b) - fmath::lgamma(a) - fmath::lgamma(b)
        + a * fmath::ln(x)
        + b * fmath::ln(1.0 - x);
    let front = fmath::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cont_frac(a, b, x) / a
    } else {
        1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b
    }
}

fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if fmath::abs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if fmath::abs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if fmath::abs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if fmath::abs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if fmath::abs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if fmath::abs(del - 1.0) < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_cdf_matches_cauchy_closed_form_at_df_1() {
        // df=1 is the Cauchy distribution: F(t) = 1/2 + atan(t)/pi.
        for &t in &[-4.0, -1.0, -0.3, 0.0, 0.7, 2.5, 10.0] {
            let expect = 0.5 + libm::atan(t) / core::f64::consts::PI;
            let got = student_t_cdf(t, 1.0);
            assert!((got - expect).abs() < 1e-12, "t={t}: {got} vs {expect}");
        }
    }

    #[test]
    fn t_cdf_matches_closed_form_at_df_2() {
        // F(t) = 1/2 + t / (2 sqrt(2 + t^2)).
        for &t in &[-3.0, -0.5, 0.0, 1.0, 4.2] {
            let expect = 0.5 + t / (2.0 * libm::sqrt(2.0 + t * t));
            let got = student_t_cdf(t, 2.0);
            assert!((got - expect).abs() < 1e-12, "t={t}: {got} vs {expect}");
        }
    }

    #[test]
    fn inc_beta_symmetry() {
        for &(a, b, x) in &[(2.5, 0.5, 0.3), (10.0, 0.5, 0.9), (0.5, 0.5, 0.01)] {
            let lhs = inc_beta_reg(a, b, x);
            let rhs = 1.0 - inc_beta_reg(b, a, 1.0 - x);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn welch_on_textbook_example() {
        // Hand-checked: a = [27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1,
        // 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4], b = [27.1, 22.0, 20.8,
        // 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 30.5].
        let a = [
            27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7,
            21.4,
        ];
        let b = [
            27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 30.5,
        ];
        let res = welch_test(&a, &b).unwrap();
        assert!((res.t - (-2.707777779103321)).abs() < 1e-12, "t={}", res.t);
        assert!((res.df - 26.952746503270294).abs() < 1e-10, "df={}", res.df);
        assert!(
            (res.p_value - 0.011616192002630836).abs() < 1e-10,
            "p={}",
            res.p_value
        );
    }

    #[test]
    fn welch_identical_samples_gives_t_zero() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let res = welch_test(&a, &a).unwrap();
        assert_eq!(res.t, 0.0);
        assert_eq!(res.p_value, 1.0);
    }

    #[test]
    fn welch_degenerate_variance() {
        let a = [2.0, 2.0, 2.0];
        let b = [5.0, 5.0];
        assert_eq!(welch_test(&a, &b).unwrap_err(), Error::DegenerateVariance);
    }

    #[test]
    fn welch_too_few_units() {
        assert_eq!(
            welch_test(&[1.0], &[1.0, 2.0]).unwrap_err(),
            Error::TooFewUnits {
                needed: 2,
                actual: 1
            }
        );
    }
}
