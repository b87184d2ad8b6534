//! Explicit curves: the sine kernel (β = 2), the β = 4 pair correlation and
//! its `q₂`, and the HP density for `δ = 1`.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::quad::{integrate, QuadOptions};
use crate::special::{hyp1f2, sine_integral};
use crate::{INV_FOUR_PI_SQ, INV_TWO_PI};

/// Below this argument the removable singularities are evaluated from
/// Taylor series.
const SERIES_CUTOFF: f64 = 0.5;

/// `1 - sinc²(x)`, accurate near zero.
pub fn one_minus_sinc_sq(x: f64) -> f64 {
    let x = libm::fabs(x);
    if x < SERIES_CUTOFF {
        // 1 - sin²x/x² = 2 Σ_{m>=2} (-1)^m u^{2m-2}/(2m)!, u = 2x
        let u2 = 4.0 * x * x;
        let mut term = u2 / 12.0;
        let mut sum = term;
        for m in 2..20 {
            let a = (2 * m + 1) as f64;
            term *= -u2 / (a * (a + 1.0));
            sum += term;
            if libm::fabs(term) < 1e-18 * sum {
                break;
            }
        }
        sum
    } else {
        let s = libm::sin(x) / x;
        1.0 - s * s
    }
}

/// `sinc(x) = sin(x)/x`.
pub fn sinc(x: f64) -> f64 {
    if libm::fabs(x) < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        libm::sin(x) / x
    }
}

/// `d/dx sinc(x) = (x cos x - sin x)/x²`.
pub fn sinc_derivative(x: f64) -> f64 {
    if libm::fabs(x) < SERIES_CUTOFF {
        // Σ_{m>=1} (-1)^m 2m x^{2m-1}/(2m+1)!
        let x2 = x * x;
        let mut power = x; // x^{2m-1}/(2m+1)! without the factor 2m
        power /= 6.0;
        let mut sum = -2.0 * power;
        for m in 2..20 {
            let a = (2 * m) as f64;
            power *= -x2 / (a * (a + 1.0));
            let term = a * power;
            sum -= term;
            if libm::fabs(term) < 1e-18 * libm::fabs(sum) {
                break;
            }
        }
        sum
    } else {
        (x * libm::cos(x) - libm::sin(x)) / (x * x)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(domain(
            "lambda",
            lambda,
            "must be a finite non-negative real",
        ));
    }
    Ok(())
}

/// `ρ²_2(0, λ) = (1/4π²)(1 - sinc²(λ/2))`.
pub fn sine2_rho2(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(INV_FOUR_PI_SQ * one_minus_sinc_sq(0.5 * lambda))
}

/// Taylor coefficients of `1 - sinc²(λ) + sinc'(λ) Si(λ)` up to `λ^{2m}`,
/// `m < TERMS`, obtained by multiplying the component series.
const TERMS: usize = 16;

fn sine4_series(lambda: f64) -> f64 {
    // sinc(λ)   = Σ a_m λ^{2m},      a_m = (-1)^m/(2m+1)!
    // Si(λ)     = Σ b_m λ^{2m+1},    b_m = a_m/(2m+1)
    // sinc'(λ)  = Σ_{m>=1} 2m a_m λ^{2m-1}
    let mut a = [0.0f64; TERMS];
    let mut fact = 1.0;
    for m in 0..TERMS {
        if m > 0 {
            fact *= ((2 * m) * (2 * m + 1)) as f64;
        }
        a[m] = if m % 2 == 0 { 1.0 / fact } else { -1.0 / fact };
    }
    let lambda2 = lambda * lambda;
    let mut total = 0.0;
    let mut power = 1.0;
    for m in 0..TERMS {
        // coefficient of λ^{2m} in -sinc² + sinc'·Si
        let mut c = 0.0;
        for j in 0..=m {
            c -= a[j] * a[m - j];
            // sinc' contributes λ^{2j-1}, Si contributes λ^{2(m-j)+1}
            if j >= 1 {
                let k = m - j;
                c += 2.0 * j as f64 * a[j] * a[k] / (2 * k + 1) as f64;
            }
        }
        if m == 0 {
            c += 1.0;
        }
        total += c * power;
        power *= lambda2;
    }
    total
}

/// `ρ²_4(0, λ) = (1/4π²)(1 - sinc²(λ) + sinc'(λ) ∫_0^λ sinc)`.
pub fn sine4_rho2(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let bracket = if lambda < SERIES_CUTOFF {
        sine4_series(lambda)
    } else {
        one_minus_sinc_sq(lambda) + sinc_derivative(lambda) * sine_integral(lambda)?
    };
    Ok(INV_FOUR_PI_SQ * bracket)
}

/// `q₁, q₂` and `q₂'` of the β = 4 system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta4Q {
    pub q1: Complex64,
    pub q2: Complex64,
    pub dq2: Complex64,
}

/// `sin x - x`, accurate near zero.
fn sin_minus_x(x: f64) -> f64 {
    if libm::fabs(x) < SERIES_CUTOFF {
        let x2 = x * x;
        let mut term = -x * x2 / 6.0;
        let mut sum = term;
        for m in 2..20 {
            let a = (2 * m) as f64;
            term *= -x2 / (a * (a + 1.0));
            sum += term;
            if libm::fabs(term) < 1e-18 * libm::fabs(sum) {
                break;
            }
        }
        sum
    } else {
        libm::sin(x) - x
    }
}

/// The explicit β = 4 solution
/// `q₂(λ) = 3i(1 + 2iλ - e^{2iλ})/(2λ³) - 3i e^{iλ} λ^{-2} Si(λ)`, with
/// `q₁ = (λq₂' + 4q₂ - 2iλq₂)/4` from the second equation of the system.
pub fn beta4_q2(lambda: f64) -> Result<Beta4Q> {
    if !(lambda > 1e-3) || !lambda.is_finite() {
        return Err(domain(
            "lambda",
            lambda,
            "must exceed 1e-3; use the series engine below",
        ));
    }
    let i = Complex64::i();
    let l = lambda;
    // E = 1 + 2iλ - e^{2iλ} = (1 - cos 2λ) - i(sin 2λ - 2λ)
    let s = libm::sin(l);
    let e = Complex64::new(2.0 * s * s, -sin_minus_x(2.0 * l));
    let de = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, 2.0 * l)) * (2.0 * i);
    let si = sine_integral(l)?;
    let phase = Complex64::from_polar(1.0, l);
    let (l2, l3) = (l * l, l * l * l);
    let q2 = i * 1.5 * e / l3 - 3.0 * i * phase * si / l2;
    let dq2 = i * 1.5 * (de / l3 - 3.0 * e / (l3 * l))
        - 3.0 * i * (i * phase * si / l2 - 2.0 * phase * si / l3 + phase * s / l3);
    let q1 = (dq2 * l + 4.0 * q2 - 2.0 * i * l * q2) / 4.0;
    Ok(Beta4Q { q1, q2, dq2 })
}

/// Which of the two equivalent δ = 1 expressions to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum HpForm {
    /// `λ²/(4π(1+2/β)(1+4/β)) ₁F₂(1; 3/2+2/β, 2+2/β; -λ²/4)`.
    Hypergeometric,
    /// `1/2π - (2/βπ) λ^{-4/β} ∫_0^λ s^{4/β-1} cos(λ-s) ds`.
    Integral,
}

/// Density `ρ¹_{β,1}(λ)` of the HP process with `δ = 1`.
pub fn hp_delta1_density(beta: f64, lambda: f64, form: HpForm) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(domain("beta", beta, "must be a finite positive real"));
    }
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    match form {
        HpForm::Hypergeometric => {
            let g = 2.0 / beta;
            let prefactor = lambda * lambda / (4.0 * PI * (1.0 + g) * (1.0 + 2.0 * g));
            Ok(prefactor * hyp1f2(1.0, 1.5 + g, 2.0 + g, -0.25 * lambda * lambda)?)
        }
        HpForm::Integral => {
            let p = 4.0 / beta;
            let opts = QuadOptions {
                abs_tol: 1e-14,
                rel_tol: 1e-13,
                max_intervals: 10_000,
            };
            // λ^{-p} ∫_0^λ p s^{p-1} cos(λ-s) ds / 2π; for p < 1 substitute
            // s = t^{1/p} so the weight s^{p-1} disappears.
            let integral = if p < 1.0 {
                let upper = libm::pow(lambda, p);
                integrate(
                    |t| libm::cos(lambda - libm::pow(t, 1.0 / p)),
                    0.0,
                    upper,
                    opts,
                )?
                .value
                    / upper
            } else {
                let scaled = |x: f64| p * libm::pow(x, p - 1.0) * libm::cos(lambda * (1.0 - x));
                integrate(scaled, 0.0, 1.0, opts)?.value
            };
            Ok(INV_TWO_PI * (1.0 - integral))
        }
    }
}

/// The closed-form curves as a value, for table generation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ClosedFormCurve {
    Sine2,
    Sine4,
    HpDelta1 {
        beta: f64,
        form: HpForm,
    },
    /// Real part of `q₂` at β = 4.
    Beta4Q2,
}

impl ClosedFormCurve {
    pub fn evaluate(&self, lambda: f64) -> Result<f64> {
        match *self {
            ClosedFormCurve::Sine2 => sine2_rho2(lambda),
            ClosedFormCurve::Sine4 => sine4_rho2(lambda),
            ClosedFormCurve::HpDelta1 { beta, form } => hp_delta1_density(beta, lambda, form),
            ClosedFormCurve::Beta4Q2 => Ok(beta4_q2(lambda)?.q2.re),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sine2_examples() {
        assert_eq!(sine2_rho2(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            sine2_rho2(2.0 * PI).unwrap(),
            INV_FOUR_PI_SQ,
            epsilon = 1e-17
        );
        assert_abs_diff_eq!(
            sine2_rho2(PI).unwrap(),
            INV_FOUR_PI_SQ * (1.0 - 4.0 / (PI * PI)),
            epsilon = 1e-17
        );
        assert!(sine2_rho2(-1.0).is_err());
    }

    #[test]
    fn series_and_direct_overlap() {
        for x in [0.3f64, 0.49, 0.5, 0.51, 0.7] {
            let direct = 1.0 - (x.sin() / x).powi(2);
            assert!((one_minus_sinc_sq(x) - direct).abs() < 1e-15, "{x}");
            let d = (x * x.cos() - x.sin()) / (x * x);
            assert!((sinc_derivative(x) - d).abs() < 1e-15, "{x}");
            assert!((sin_minus_x(x) - (x.sin() - x)).abs() < 1e-16);
        }
        for x in [0.3, 0.45, 0.55, 0.8] {
            let direct = one_minus_sinc_sq(x) + sinc_derivative(x) * sine_integral(x).unwrap();
            assert!((sine4_series(x) - direct).abs() < 1e-15, "{x}");
        }
    }

    #[test]
    fn sine4_small_lambda() {
        assert_eq!(sine4_rho2(0.0).unwrap(), 0.0);
        let lambda = 0.05f64;
        let lead = INV_FOUR_PI_SQ * 16.0 * 8.0 / (24.0 * 720.0) * lambda.powi(4);
        let ratio = sine4_rho2(lambda).unwrap() / lead;
        assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn bounded_and_decaying() {
        for i in 0..=400 {
            let lambda = 0.1 * i as f64;
            for v in [sine2_rho2(lambda).unwrap(), sine4_rho2(lambda).unwrap()] {
                assert!((-1e-12..=0.04).contains(&v), "λ={lambda}: {v}");
                if lambda >= 10.0 {
                    assert!((v - INV_FOUR_PI_SQ).abs() <= 0.5 / lambda);
                }
            }
        }
    }

    #[test]
    fn beta4_q2_limits() {
        assert!(beta4_q2(1e-3).is_err());
        let q = beta4_q2(2e-3).unwrap();
        assert!((q.q2 - 1.0).norm() < 1e-2);
        assert!((q.dq2 - Complex64::new(0.0, 2.0 / 3.0)).norm() < 1e-2);
        let q = beta4_q2(0.01).unwrap();
        assert!((q.q1 - 1.0).norm() < 2e-2);
    }

    #[test]
    fn beta4_q2_satisfies_the_system() {
        // λq₁' = 3/2 - q₁ - q₂/2 + iλq₁ by central differences
        for lambda in [0.5, 2.0, 10.0] {
            let h = 1e-5;
            let (m, c, p) = (
                beta4_q2(lambda - h).unwrap(),
                beta4_q2(lambda).unwrap(),
                beta4_q2(lambda + h).unwrap(),
            );
            let dq1 = (p.q1 - m.q1) / (2.0 * h);
            let rhs = Complex64::new(1.5, 0.0) - c.q1 - c.q2 * 0.5 + Complex64::i() * lambda * c.q1;
            assert!((dq1 * lambda - rhs).norm() < 1e-6, "λ={lambda}");
            let dq2 = (p.q2 - m.q2) / (2.0 * h);
            assert!((dq2 - c.dq2).norm() < 1e-7);
        }
    }

    #[test]
    fn sine4_from_q_matches_formula() {
        for lambda in [0.7, 3.0, 11.0, 25.0] {
            let q = beta4_q2(lambda).unwrap();
            let rho = INV_FOUR_PI_SQ + 0.5 / (PI * PI) * (-2.0 / 3.0 * q.q1.re + q.q2.re / 6.0);
            assert!(
                (rho - sine4_rho2(lambda).unwrap()).abs() < 1e-12,
                "λ={lambda}"
            );
        }
    }

    #[test]
    fn hp_delta1_examples() {
        assert_eq!(
            hp_delta1_density(3.0, 0.0, HpForm::Hypergeometric).unwrap(),
            0.0
        );
        assert_eq!(hp_delta1_density(3.0, 0.0, HpForm::Integral).unwrap(), 0.0);
        for lambda in [0.3, 1.0, 5.0, 17.0, 40.0] {
            let exact = 2.0 * PI * sine2_rho2(lambda).unwrap();
            for form in [HpForm::Hypergeometric, HpForm::Integral] {
                let v = hp_delta1_density(2.0, lambda, form).unwrap();
                assert!(
                    (v - exact).abs() < 1e-12,
                    "{form:?} λ={lambda}: {v} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn hp_delta1_forms_agree() {
        for beta in [0.7, 1.0, 2.0, 3.0, 4.0, 6.0, 10.0, 25.0] {
            for i in 1..=50 {
                let lambda = i as f64;
                let a = hp_delta1_density(beta, lambda, HpForm::Hypergeometric).unwrap();
                let b = hp_delta1_density(beta, lambda, HpForm::Integral).unwrap();
                assert!((a - b).abs() < 1e-9, "β={beta} λ={lambda}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn curve_dispatch() {
        let c = ClosedFormCurve::HpDelta1 {
            beta: 2.0,
            form: HpForm::Integral,
        };
        assert!((c.evaluate(PI).unwrap() - 2.0 * PI * sine2_rho2(PI).unwrap()).abs() < 1e-13);
        assert_eq!(ClosedFormCurve::Sine2.evaluate(0.0).unwrap(), 0.0);
        assert!(ClosedFormCurve::Beta4Q2.evaluate(1.0).is_ok());
    }
}
