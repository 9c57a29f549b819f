//! r², Pearson correlation and its two-sided p-value.

use crate::error::{Error, Result};

/// Coefficient of determination `1 - MSE(y, y_hat) / Var(y)` with the
/// population variance. Negative when predictions are worse than the mean.
pub fn r2_score(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::domain(format!(
            "length mismatch: {} targets, {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    if y.len() < 2 {
        return Err(Error::domain("r² needs at least two samples"));
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::DegenerateTarget);
    }
    let mse = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
    Ok(1.0 - mse / var)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided p-value of `r` under the hypothesis of no correlation.
    pub p: f64,
}

/// Sample Pearson correlation and its two-sided p-value from Student's t
/// with `n - 2` degrees of freedom.
pub fn pearson(y: &[f64], y_hat: &[f64]) -> Result<Correlation> {
    if y.len() != y_hat.len() {
        return Err(Error::domain("pearson inputs differ in length"));
    }
    let n = y.len();
    if n < 3 {
        return Err(Error::domain("pearson needs at least three samples"));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (ma, mb) = (mean(y), mean(y_hat));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in y.iter().zip(y_hat) {
        let (da, db) = (a - ma, b - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(Error::DegenerateInput("pearson input is constant".into()));
    }
    let r = (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0);
    Ok(Correlation {
        r,
        p: correlation_p_value(r, n),
    })
}

/// Two-sided p-value for a sample correlation `r` over `n` pairs.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let one_minus = 1.0 - r * r;
    if one_minus <= 0.0 {
        return 0.0;
    }
    let t = r * (df / one_minus).sqrt();
    student_t_two_sided(t, df)
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    inc_beta(x, 0.5 * df, 0.5).clamp(0.0, 1.0)
}

/// ln Γ(z) for z > 0 (Lanczos, g = 7).
pub fn ln_gamma(z: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if z < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut a = COEF[0];
    let t = z + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta `I_x(a, b)` by Lentz's continued fraction.
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) || a <= 0.0 || b <= 0.0 {
        return f64::NAN;
    }
    if x == 0.0 || x == 1.0 {
        return x;
    }
    // the fraction converges fast below the mean; reflect otherwise
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - inc_beta(1.0 - x, b, a);
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b));
    ln_front.exp() / a * beta_fraction(x, a, b)
}

fn beta_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let even = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        for coef in [even, -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0))] {
            d = 1.0 + coef * d;
            if d.abs() < TINY {
                d = TINY;
            }
            c = 1.0 + coef / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            h *= d * c;
        }
        if (d * c - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r2_examples() {
        let y = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(r2_score(&y, &y).unwrap(), 1.0);
        assert!(r2_score(&y, &[1.5; 4]).unwrap().abs() < 1e-12);
        assert!((r2_score(&y, &[0.0, 1.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!(r2_score(&y, &[10.0; 4]).unwrap() < 0.0);
    }

    #[test]
    fn r2_degenerate_target() {
        assert!(matches!(
            r2_score(&[2.0, 2.0], &[1.0, 3.0]),
            Err(Error::DegenerateTarget)
        ));
        assert!(r2_score(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn pearson_affine_images() {
        let y = [1.0, 2.5, 2.0, 4.0, 7.0];
        let up: Vec<f64> = y.iter().map(|v| 2.0 * v + 1.0).collect();
        let c = pearson(&y, &up).unwrap();
        assert!((c.r - 1.0).abs() < 1e-12);
        assert!(c.p < 1e-12);
        let down: Vec<f64> = y.iter().map(|v| -v).collect();
        assert!((pearson(&y, &down).unwrap().r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_rejects_constant_and_short() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateInput(_))
        ));
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn inc_beta_closed_forms() {
        // I_x(1, 1) = x, I_x(a, 1) = x^a, I_x(1, b) = 1 - (1-x)^b
        for &x in &[0.1, 0.37, 0.5, 0.9] {
            assert!((inc_beta(x, 1.0, 1.0) - x).abs() < 1e-13);
            assert!((inc_beta(x, 3.0, 1.0) - x.powi(3)).abs() < 1e-13);
            assert!((inc_beta(x, 1.0, 4.0) - (1.0 - (1.0 - x).powi(4))).abs() < 1e-13);
        }
    }

    #[test]
    fn t_distribution_one_df_is_cauchy() {
        // two-sided Cauchy tail: 1 - 2 atan(t) / pi
        for &t in &[0.3, 1.0, 2.5, 10.0] {
            let expect = 1.0 - 2.0 * f64::atan(t) / std::f64::consts::PI;
            assert!((student_t_two_sided(t, 1.0) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn t_distribution_two_df_closed_form() {
        // df = 2: P(|T| >= t) = 1 - t / sqrt(2 + t^2)
        for t in [0.5f64, 1.7, 4.0] {
            let expect = 1.0 - t / (2.0 + t * t).sqrt();
            assert!((student_t_two_sided(t, 2.0) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn pearson_invariances() {
        let a = [0.3, -1.2, 2.2, 0.9, 1.4, -0.5];
        let b = [1.0, -0.7, 1.9, 0.2, 2.2, 0.1];
        let base = pearson(&a, &b).unwrap().r;
        let scaled: Vec<f64> = b.iter().map(|v| 3.0 * v - 7.0).collect();
        assert!((pearson(&a, &scaled).unwrap().r - base).abs() < 1e-12);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((pearson(&neg, &b).unwrap().r + base).abs() < 1e-12);
    }
}
