//! Scalar special functions and coefficient sequences.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::mpfloat::{BigFloat, Real};
use crate::INV_TWO_PI;

/// Pochhammer ratios `c_k = (-δ)^{↑k} / (1+δ)^{↑k}` for `k = 1..=K`.
///
/// These are the Fourier coefficients (up to `1/2π`) of the angle density
/// and the weights of `E[cos kα_λ(0)]` in the density formulas.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoeffSeq {
    pub delta: f64,
    /// `values[k - 1] = c_k`.
    pub values: Vec<f64>,
}

impl CoeffSeq {
    pub fn k_max(&self) -> usize {
        self.values.len()
    }

    /// `c_k` for `1 <= k <= K`; `c_0 = 1`.
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// Empirical constant in `|c_k| <= c k^{-1-2δ}`, fitted on `k <= k_fit`.
    pub fn fitted_decay_constant(&self, k_fit: usize) -> f64 {
        let exponent = 1.0 + 2.0 * self.delta;
        self.values
            .iter()
            .take(k_fit)
            .enumerate()
            .map(|(i, c)| libm::fabs(*c) * libm::pow((i + 1) as f64, exponent))
            .fold(0.0, f64::max)
    }

    /// Bound on `Σ_{k>K} |c_k|` implied by the fitted decay constant, zero
    /// when δ is an integer no larger than `K` (the sequence terminates).
    pub fn tail_bound(&self) -> f64 {
        let k = self.k_max();
        if is_positive_integer(self.delta) && self.delta as usize <= k {
            return 0.0;
        }
        let c = self.fitted_decay_constant(20.max(k).min(200));
        // Σ_{j>K} j^{-1-2δ} <= K^{-2δ} / (2δ)
        c * libm::pow(k as f64, -2.0 * self.delta) / (2.0 * self.delta)
    }
}

pub(crate) fn is_positive_integer(x: f64) -> bool {
    x >= 1.0 && x == libm::floor(x)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(domain("delta", delta, "must be a finite positive real"));
    }
    Ok(())
}

/// `c_1..c_{k_max}` by the running product `c_k = c_{k-1}(k-1-δ)/(k+δ)`.
pub fn pochhammer_ratio_seq(delta: f64, k_max: usize) -> Result<CoeffSeq> {
    check_delta(delta)?;
    if k_max == 0 {
        return Err(domain("k_max", 0.0, "must be at least 1"));
    }
    let mut values = Vec::with_capacity(k_max);
    let mut c = 1.0;
    for k in 1..=k_max {
        c *= (k as f64 - 1.0 - delta) / (k as f64 + delta);
        values.push(c);
    }
    Ok(CoeffSeq { delta, values })
}

/// `ln(Γ(1+δ)² / Γ(1+2δ))`.
fn log_theta_normalizer(delta: f64) -> f64 {
    2.0 * libm::lgamma(1.0 + delta) - libm::lgamma(1.0 + 2.0 * delta)
}

/// Density of the angle `Θ` on `[0, 2π)`:
/// `(1/2π) Γ(1+δ)²/Γ(1+2δ) (2 - 2cos θ)^δ`.
pub fn theta_density(delta: f64, theta: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(0.0..2.0 * PI).contains(&theta) {
        return Err(domain("theta", theta, "must lie in [0, 2π)"));
    }
    // 2 - 2cos θ = (2 sin(θ/2))², without cancellation near θ = 0
    let chord = 2.0 * libm::fabs(libm::sin(0.5 * theta));
    if chord == 0.0 {
        return Ok(0.0);
    }
    Ok(INV_TWO_PI * libm::exp(log_theta_normalizer(delta) + 2.0 * delta * libm::log(chord)))
}

/// Fourier coefficient `a_k = (1/2π)(-δ)^{↑k}/(1+δ)^{↑k}` of the angle density.
pub fn theta_fourier_coeff(delta: f64, k: usize) -> Result<f64> {
    check_delta(delta)?;
    let mut c = 1.0;
    for j in 1..=k {
        c *= (j as f64 - 1.0 - delta) / (j as f64 + delta);
        if c == 0.0 {
            break;
        }
    }
    Ok(INV_TWO_PI * c)
}

/// Distribution function of `Θ` from its Fourier series, truncated after
/// `terms` harmonics: `x/2π + (1/π) Σ c_k sin(kx)/k`.
pub fn theta_cdf(delta: f64, x: f64, terms: usize) -> Result<f64> {
    check_delta(delta)?;
    if !(0.0..=2.0 * PI).contains(&x) {
        return Err(domain("x", x, "must lie in [0, 2π]"));
    }
    let coeffs = pochhammer_ratio_seq(delta, terms.max(1))?;
    let sum: f64 = coeffs
        .values
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = (i + 1) as f64;
            c * libm::sin(k * x) / k
        })
        .sum();
    Ok(x * INV_TWO_PI + sum / PI)
}

const SI_SERIES_LIMIT: f64 = 4.0;
const SI_MAX_ARG: f64 = 1e4;

/// Sine integral `Si(x) = ∫_0^x sin(t)/t dt` for `0 <= x <= 10⁴`.
///
/// Power series up to `x = 4`, beyond that the continued fraction of the
/// exponential integral `E1(ix)`.
pub fn sine_integral(x: f64) -> Result<f64> {
    if !(0.0..=SI_MAX_ARG).contains(&x) {
        return Err(domain("x", x, "Si is evaluated on [0, 1e4]"));
    }
    if x <= SI_SERIES_LIMIT {
        Ok(sine_integral_series(x))
    } else {
        Ok(sine_integral_cf(x))
    }
}

fn sine_integral_series(x: f64) -> f64 {
    let x2 = x * x;
    // term_m = (-1)^m x^{2m+1} / (2m+1)!
    let mut term = x;
    let mut sum = x;
    let mut m = 0usize;
    loop {
        m += 1;
        let k = (2 * m) as f64;
        term *= -x2 / (k * (k + 1.0));
        let contrib = term / (k + 1.0);
        sum += contrib;
        if libm::fabs(contrib) < 1e-17 * libm::fabs(sum) || m > 60 {
            return sum;
        }
    }
}

fn sine_integral_cf(x: f64) -> f64 {
    // modified Lentz evaluation of E1(ix) e^{ix}
    const TINY: f64 = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..200 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
            break;
        }
    }
    let h = Complex64::new(libm::cos(x), -libm::sin(x)) * h;
    FRAC_PI_2 + h.im
}

/// Generalized hypergeometric `₁F₂(a; b1, b2; z)`.
///
/// Summed in `f64`; when the terms grow so large that the alternating sum
/// would lose more than a few bits, the series is re-summed in
/// [`BigFloat`] with enough precision to absorb the cancellation.
pub fn hyp1f2(a: f64, b1: f64, b2: f64, z: f64) -> Result<f64> {
    for (name, b) in [("b1", b1), ("b2", b2)] {
        if b <= 0.0 && b == libm::floor(b) {
            return Err(domain(name, b, "must not be a non-positive integer"));
        }
    }
    if !(libm::fabs(z) <= 1e4) {
        return Err(domain("z", z, "|z| must not exceed 1e4"));
    }
    let (sum, max_term) = hyp1f2_f64(a, b1, b2, z)?;
    let lost_bits = libm::log2(max_term / libm::fabs(sum).max(1e-300));
    if lost_bits <= 6.0 {
        return Ok(sum);
    }
    let prec = 64 + libm::ceil(libm::log2(max_term).max(0.0)) as u32 + 16;
    hyp1f2_big(a, b1, b2, z, prec)
}

const HYP_MAX_TERMS: usize = 100_000;

fn hyp1f2_f64(a: f64, b1: f64, b2: f64, z: f64) -> Result<(f64, f64)> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut max_term = 1.0f64;
    let mut small_run = 0;
    for m in 0..HYP_MAX_TERMS {
        let mf = m as f64;
        term *= (a + mf) * z / ((b1 + mf) * (b2 + mf) * (mf + 1.0));
        sum += term;
        max_term = max_term.max(libm::fabs(term));
        if libm::fabs(term) < 1e-16 * libm::fabs(sum) || term == 0.0 {
            small_run += 1;
            if small_run == 3 {
                return Ok((sum, max_term));
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence {
        terms: HYP_MAX_TERMS,
    })
}

fn hyp1f2_big(a: f64, b1: f64, b2: f64, z: f64, prec: u32) -> Result<f64> {
    let one = BigFloat::from_f64(1.0, prec);
    let (a, b1, b2, z) = (one.cast(a), one.cast(b1), one.cast(b2), one.cast(z));
    let mut term = one.clone();
    let mut sum = one.clone();
    let mut small_run = 0;
    for m in 0..HYP_MAX_TERMS {
        let mf = one.cast(m as f64);
        let num = (a.clone() + mf.clone()) * z.clone();
        let den = (b1.clone() + mf.clone()) * (b2.clone() + mf.clone()) * (mf + one.clone());
        term = term * num / den;
        sum = &sum + &term;
        if term.is_zero() || term.log2_abs() < sum.log2_abs() - 60.0 {
            small_run += 1;
            if small_run == 3 {
                return Ok(sum.to_f64());
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence {
        terms: HYP_MAX_TERMS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadOptions};
    use approx::assert_abs_diff_eq;

    #[test]
    fn pochhammer_examples() {
        assert_eq!(
            pochhammer_ratio_seq(1.0, 3).unwrap().values,
            [-0.5, 0.0, 0.0]
        );
        let c = pochhammer_ratio_seq(2.0, 3).unwrap().values;
        assert_abs_diff_eq!(c[0], -2.0 / 3.0, epsilon = 1e-16);
        assert_abs_diff_eq!(c[1], 1.0 / 6.0, epsilon = 1e-16);
        assert_eq!(c[2], 0.0);
        // (-1/2)/(3/2), then times (1/2)/(5/2)
        let c = pochhammer_ratio_seq(0.5, 2).unwrap().values;
        assert_abs_diff_eq!(c[0], -1.0 / 3.0, epsilon = 1e-16);
        assert_abs_diff_eq!(c[1], -1.0 / 15.0, epsilon = 1e-16);
    }

    #[test]
    fn pochhammer_rejects_bad_delta() {
        assert!(matches!(
            pochhammer_ratio_seq(0.0, 3),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            pochhammer_ratio_seq(-0.3, 3),
            Err(Error::Domain { .. })
        ));
        assert!(pochhammer_ratio_seq(f64::NAN, 3).is_err());
        assert!(pochhammer_ratio_seq(1.0, 0).is_err());
    }

    #[test]
    fn integer_delta_terminates() {
        for n in 1..8 {
            let c = pochhammer_ratio_seq(n as f64, 20).unwrap();
            assert!(c.values[..n].iter().all(|&v| v != 0.0));
            assert!(c.values[n..].iter().all(|&v| v == 0.0));
            assert_eq!(c.tail_bound(), 0.0);
        }
    }

    #[test]
    fn decay_bound_holds_with_fitted_constant() {
        for delta in [0.3, 0.5, 0.875, 1.5, 2.7, 3.7] {
            let c = pochhammer_ratio_seq(delta, 200).unwrap();
            let fitted = c.fitted_decay_constant(20);
            assert!(fitted.is_finite() && fitted > 0.0);
            for (i, v) in c.values.iter().enumerate() {
                let k = (i + 1) as f64;
                assert!(
                    v.abs() * k.powf(1.0 + 2.0 * delta) <= fitted * (1.0 + 1e-12),
                    "δ={delta} k={k}"
                );
            }
        }
    }

    #[test]
    fn theta_density_examples() {
        for theta in [0.1, 1.0, 2.5, 4.0, 6.0] {
            assert_abs_diff_eq!(
                theta_density(1.0, theta).unwrap(),
                (1.0 - theta.cos()) / (2.0 * PI),
                epsilon = 1e-15
            );
        }
        assert_eq!(theta_density(1.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            theta_density(2.0, PI).unwrap(),
            4.0 / (3.0 * PI),
            epsilon = 1e-14
        );
        assert!(theta_density(1.0, 2.0 * PI).is_err());
        assert!(theta_density(1.0, -0.1).is_err());
    }

    #[test]
    fn theta_density_normalized() {
        for delta in [0.5, 1.0, 2.0, 3.7] {
            let q = integrate(
                |t| theta_density(delta, t).unwrap(),
                0.0,
                2.0 * PI - 1e-300,
                QuadOptions::default(),
            )
            .unwrap();
            assert_abs_diff_eq!(q.value, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn theta_density_finite_for_large_delta() {
        let v = theta_density(50.0, PI).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn fourier_coefficients_match_quadrature() {
        for delta in [0.5, 1.0, 2.0] {
            for k in 0..=10usize {
                let q = integrate(
                    |t| theta_density(delta, t).unwrap() * (k as f64 * t).cos(),
                    0.0,
                    2.0 * PI - 1e-300,
                    QuadOptions {
                        abs_tol: 1e-14,
                        rel_tol: 1e-13,
                        max_intervals: 4000,
                    },
                )
                .unwrap();
                assert_abs_diff_eq!(
                    q.value / (2.0 * PI),
                    theta_fourier_coeff(delta, k).unwrap(),
                    epsilon = 1e-9
                );
            }
        }
        assert_abs_diff_eq!(
            theta_fourier_coeff(1.0, 1).unwrap(),
            -1.0 / (4.0 * PI),
            epsilon = 1e-16
        );
        assert_eq!(theta_fourier_coeff(1.0, 2).unwrap(), 0.0);
        assert_eq!(theta_fourier_coeff(3.3, 0).unwrap(), INV_TWO_PI);
    }

    #[test]
    fn theta_cdf_reaches_one_and_matches_density() {
        for delta in [1.0, 2.0] {
            assert_abs_diff_eq!(theta_cdf(delta, 2.0 * PI, 10).unwrap(), 1.0, epsilon = 1e-8);
            for x in [0.7, 2.0, 3.9] {
                let q = integrate(
                    |t| theta_density(delta, t).unwrap(),
                    0.0,
                    x,
                    QuadOptions::default(),
                )
                .unwrap();
                assert_abs_diff_eq!(theta_cdf(delta, x, 10).unwrap(), q.value, epsilon = 1e-10);
            }
        }
    }

    /// Independent oracle: adaptive quadrature of sinc.
    fn si_oracle(x: f64) -> f64 {
        let sinc = |t: f64| if t == 0.0 { 1.0 } else { t.sin() / t };
        integrate(
            sinc,
            0.0,
            x,
            QuadOptions {
                abs_tol: 1e-15,
                rel_tol: 1e-15,
                max_intervals: 20_000,
            },
        )
        .unwrap()
        .value
    }

    #[test]
    fn sine_integral_examples() {
        assert_eq!(sine_integral(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            sine_integral(PI).unwrap(),
            1.851_937_051_982_466,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            sine_integral(1.0).unwrap(),
            0.946_083_070_367_183,
            epsilon = 1e-12
        );
        assert!(sine_integral(-1.0).is_err());
        assert!(sine_integral(1e4 + 1.0).is_err());
    }

    #[test]
    fn sine_integral_against_quadrature() {
        for x in [
            0.01, 0.5, 2.0, 3.999, 4.0, 4.001, 5.0, 7.5, 10.0, 20.0, 33.3, 100.0, 400.0,
        ] {
            assert_abs_diff_eq!(sine_integral(x).unwrap(), si_oracle(x), epsilon = 1e-12);
        }
        // large x: Si → π/2 with |Si - π/2| ≤ 1/x
        let big = sine_integral(1e4).unwrap();
        assert!((big - FRAC_PI_2).abs() < 1.01e-4);
    }

    #[test]
    fn hyp1f2_examples() {
        assert_eq!(hyp1f2(1.0, 1.5, 2.0, 0.0).unwrap(), 1.0);
        // β = 2, λ = 1: λ²/(4π·2·3)·₁F₂(1; 5/2, 3; -1/4) = (1/2π)(1 - sinc²(1/2))
        let lhs = 1.0 / (24.0 * PI) * hyp1f2(1.0, 2.5, 3.0, -0.25).unwrap();
        let s = (0.5f64).sin() / 0.5;
        assert_abs_diff_eq!(lhs, (1.0 - s * s) / (2.0 * PI), epsilon = 1e-15);
    }

    #[test]
    fn hyp1f2_matches_exact_rational_partial_sum() {
        use num_bigint::BigInt;
        use num_rational::BigRational;
        use num_traits::{One, ToPrimitive};
        // Σ_{m<40} m! / ((2)_m (3)_m) with z = 1, a = 1
        let mut term = BigRational::one();
        let mut sum = BigRational::one();
        for m in 0..40i64 {
            let num = BigRational::from_integer(BigInt::from(1 + m));
            let den = BigRational::from_integer(BigInt::from((2 + m) * (3 + m) * (m + 1)));
            term = term * num / den;
            sum += term.clone();
        }
        assert_abs_diff_eq!(
            hyp1f2(1.0, 2.0, 3.0, 1.0).unwrap(),
            sum.to_f64().unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn hyp1f2_large_negative_argument_uses_extended_precision() {
        // β = 2 (b1 = 5/2, b2 = 3): ₁F₂(1; 5/2, 3; -λ²/4) = 12(1 - sinc²(λ/2))/λ²
        for lambda in [10.0f64, 30.0, 50.0, 150.0] {
            let z = -lambda * lambda / 4.0;
            let s = (lambda / 2.0).sin() / (lambda / 2.0);
            let exact = 12.0 * (1.0 - s * s) / (lambda * lambda);
            assert_abs_diff_eq!(hyp1f2(1.0, 2.5, 3.0, z).unwrap(), exact, epsilon = 1e-14);
        }
    }

    #[test]
    fn hyp1f2_rejects_poles() {
        assert!(hyp1f2(1.0, 0.0, 2.0, 1.0).is_err());
        assert!(hyp1f2(1.0, 1.5, -3.0, 1.0).is_err());
        assert!(hyp1f2(1.0, 1.5, 2.0, -2e4).is_err());
    }
}
