//! Power series of `q(λ)` for integer `δ = n`.
//!
//! `q(λ) = Σ_k s_k λ^k` with `s_0 = f` and
//! `s_k = i (kI - (4/β)A)^{-1} B s_{k-1}`. Writing `s_k = i^k t_k` the
//! vectors `t_k` are real, so the real and imaginary parts of `q` are
//! separate real series in `λ²`:
//!
//! ```text
//! Re q(λ) = Σ_j (-1)^j t_{2j} λ^{2j},   Im q(λ) = λ Σ_j (-1)^j t_{2j+1} λ^{2j}.
//! ```
//!
//! Both alternate, and their largest terms grow roughly like `e^{nλ}` while
//! `|q| <= 1`. The coefficients and the sums are therefore carried in
//! [`BigFloat`] with a precision chosen from the size of the largest term at
//! `lambda_max`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::linalg::{build_system, solve_shifted, SystemMatrices};
use crate::mpfloat::{BigFloat, Real};
use crate::INV_TWO_PI;

/// Hard cap on the truncation order.
pub const MAX_ORDER: usize = 50_000;
/// Number of leading terms used to fit `κ` in `‖t_k‖ <= κ^k Π_j n/(j+4n/β)`.
const KAPPA_FIT_TERMS: usize = 10;
/// Extra bits carried beyond the cancellation and the requested tolerance.
const GUARD_BITS: f64 = 40.0;

/// Coefficients `s_0..s_K` of the series, stored as the real vectors `t_k`.
#[derive(Debug, Clone)]
pub struct SeriesCoefficients {
    pub n: usize,
    pub beta: f64,
    pub lambda_max: f64,
    pub tol: f64,
    /// Truncation order `K`.
    pub order: usize,
    /// Constant of the geometric-factorial norm bound.
    pub kappa: f64,
    /// True when a term beyond the first ten exceeded the fitted bound and
    /// `κ` had to be enlarged.
    pub kappa_raised: bool,
    /// Bound on `Σ_{k>K} ‖s_k‖ λ_max^k`.
    pub tail_bound: f64,
    /// Working precision in bits.
    pub precision: u32,
    /// `log2 ‖t_k‖_∞` for `k = 0..=K`.
    pub log2_norms: Vec<f64>,
    system: SystemMatrices,
    terms: Vec<Vec<BigFloat>>,
}

/// `q(λ)` with the tail bound of the coefficients it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct QValue {
    pub lambda: f64,
    pub q: Vec<Complex64>,
    pub tail_bound: f64,
}

struct Recursion<T> {
    terms: Vec<Vec<T>>,
    log2_norms: Vec<f64>,
    kappa: f64,
    kappa_raised: bool,
    tail_bound: f64,
}

/// `ln Π_{j=1}^k n/(j + 4n/β)` increment for index `j`.
fn log_bound_factor(n: f64, j: usize, shift: f64) -> f64 {
    libm::log(n / (j as f64 + shift))
}

fn max_log2<T: Real>(x: &[T]) -> f64 {
    x.iter()
        .map(Real::log2_abs)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn run_recursion<T: Real>(
    sys: &SystemMatrices,
    beta: f64,
    lambda_max: f64,
    tol: f64,
    one: &T,
    fixed_order: Option<usize>,
) -> Result<Recursion<T>> {
    let n = sys.n;
    let nf = n as f64;
    let shift = 4.0 * nf / beta;
    let c = one.cast(4.0) / one.cast(beta);
    let t0: Vec<T> = sys.f.iter().map(|&x| one.cast(x)).collect();
    let mut log2_norms = vec![max_log2(&t0)];
    let mut terms = vec![t0];
    let ln_lambda = libm::log(lambda_max);
    let ln_tol = libm::log(tol);
    let mut ln_bound = 0.0;
    let mut ln_kappa_fit = f64::NEG_INFINITY;
    let mut kappa_raised = false;

    for k in 1..=MAX_ORDER {
        let prev = &terms[k - 1];
        let rhs: Vec<T> = prev
            .iter()
            .zip(&sys.b)
            .map(|(t, &b)| t.clone() * one.cast(b))
            .collect();
        let next = solve_shifted(sys, k, &c, &rhs)?;
        let ln_norm = max_log2(&next) * LN_2;
        log2_norms.push(ln_norm / LN_2);
        terms.push(next);
        ln_bound += log_bound_factor(nf, k, shift);

        if ln_norm.is_finite() {
            let ln_ratio = (ln_norm - ln_bound) / k as f64;
            if k <= KAPPA_FIT_TERMS {
                ln_kappa_fit = ln_kappa_fit.max(ln_ratio);
            } else if ln_ratio > ln_kappa_fit + LN_2 {
                ln_kappa_fit = ln_ratio;
                kappa_raised = true;
            }
        }
        let ln_kappa = ln_kappa_fit + LN_2;

        if let Some(order) = fixed_order {
            if k == order {
                let tail = tail_estimate(ln_kappa, ln_bound, nf, k, shift, lambda_max, ln_lambda);
                return Ok(Recursion {
                    terms,
                    log2_norms,
                    kappa: libm::exp(ln_kappa),
                    kappa_raised,
                    tail_bound: tail,
                });
            }
            continue;
        }
        if k < KAPPA_FIT_TERMS {
            continue;
        }
        let tail = tail_estimate(ln_kappa, ln_bound, nf, k, shift, lambda_max, ln_lambda);
        if libm::log(tail) < ln_tol {
            return Ok(Recursion {
                terms,
                log2_norms,
                kappa: libm::exp(ln_kappa),
                kappa_raised,
                tail_bound: tail,
            });
        }
    }
    Err(Error::NonConvergence { terms: MAX_ORDER })
}

/// Geometric bound on `Σ_{j>k} κ^j P_j λ^j`, or infinity while the ratio
/// of consecutive bound terms is not yet below 1/2.
fn tail_estimate(
    ln_kappa: f64,
    ln_bound_k: f64,
    n: f64,
    k: usize,
    shift: f64,
    lambda: f64,
    ln_lambda: f64,
) -> f64 {
    let kappa = libm::exp(ln_kappa);
    let ratio = kappa * n * lambda / (k as f64 + 2.0 + shift);
    if ratio >= 0.5 {
        return f64::INFINITY;
    }
    let ln_next =
        (k + 1) as f64 * (ln_kappa + ln_lambda) + ln_bound_k + log_bound_factor(n, k + 1, shift);
    libm::exp(ln_next) / (1.0 - ratio)
}

fn check_params(beta: f64, lambda_max: f64, tol: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(domain("beta", beta, "must be a finite positive real"));
    }
    if !(lambda_max > 0.0) || !lambda_max.is_finite() {
        return Err(domain(
            "lambda_max",
            lambda_max,
            "must be a finite positive real",
        ));
    }
    if !(tol >= 1e-15) || !(tol < 1.0) {
        return Err(domain("tol", tol, "must lie in [1e-15, 1)"));
    }
    Ok(())
}

fn working_precision(log2_norms: &[f64], lambda_max: f64, tol: f64) -> u32 {
    let log2_lambda = libm::log2(lambda_max);
    let largest = log2_norms
        .iter()
        .enumerate()
        .map(|(k, l)| l + k as f64 * log2_lambda)
        .fold(0.0, f64::max);
    let bits = largest + libm::log2(1.0 / tol) + libm::log2(log2_norms.len() as f64) + GUARD_BITS;
    (libm::ceil(bits) as u32).max(64)
}

/// Computes `s_0..s_K` for `δ = n` and the given `β`, with `K` chosen so the
/// norm bound on the neglected terms at `lambda_max` is below `tol`.
pub fn compute_coefficients(
    n: usize,
    beta: f64,
    lambda_max: f64,
    tol: f64,
) -> Result<SeriesCoefficients> {
    check_params(beta, lambda_max, tol)?;
    let sys = build_system(n)?;
    // A cheap pass fixes the order and the size of the largest term; the
    // second pass carries enough bits to absorb the cancellation.
    let probe = run_recursion(
        &sys,
        beta,
        lambda_max,
        tol,
        &BigFloat::from_f64(1.0, 64),
        None,
    )?;
    let precision = working_precision(&probe.log2_norms, lambda_max, tol);
    let rec = run_recursion(
        &sys,
        beta,
        lambda_max,
        tol,
        &BigFloat::from_f64(1.0, precision),
        None,
    )?;
    Ok(assemble(sys, beta, lambda_max, tol, precision, rec))
}

/// Same as [`compute_coefficients`] but with a prescribed order `K`, for
/// truncation studies. The reported tail bound still refers to `lambda_max`.
pub fn compute_coefficients_with_order(
    n: usize,
    beta: f64,
    lambda_max: f64,
    order: usize,
) -> Result<SeriesCoefficients> {
    check_params(beta, lambda_max, 1e-15)?;
    if order == 0 || order > MAX_ORDER {
        return Err(domain("order", order as f64, "must lie in 1..=50000"));
    }
    let sys = build_system(n)?;
    let probe = run_recursion(
        &sys,
        beta,
        lambda_max,
        1e-15,
        &BigFloat::from_f64(1.0, 64),
        Some(order),
    )?;
    let precision = working_precision(&probe.log2_norms, lambda_max, 1e-15);
    let rec = run_recursion(
        &sys,
        beta,
        lambda_max,
        1e-15,
        &BigFloat::from_f64(1.0, precision),
        Some(order),
    )?;
    Ok(assemble(sys, beta, lambda_max, 1e-15, precision, rec))
}

fn assemble(
    sys: SystemMatrices,
    beta: f64,
    lambda_max: f64,
    tol: f64,
    precision: u32,
    rec: Recursion<BigFloat>,
) -> SeriesCoefficients {
    SeriesCoefficients {
        n: sys.n,
        beta,
        lambda_max,
        tol,
        order: rec.terms.len() - 1,
        kappa: rec.kappa,
        kappa_raised: rec.kappa_raised,
        tail_bound: rec.tail_bound,
        precision,
        log2_norms: rec.log2_norms,
        system: sys,
        terms: rec.terms,
    }
}

impl SeriesCoefficients {
    pub fn system(&self) -> &SystemMatrices {
        &self.system
    }

    /// `s_k` rounded to `f64`; even orders are real, odd orders imaginary,
    /// with the other part exactly zero.
    pub fn s(&self, k: usize) -> Vec<Complex64> {
        self.terms[k]
            .iter()
            .map(|t| {
                let x = t.to_f64();
                match k % 4 {
                    0 => Complex64::new(x, 0.0),
                    1 => Complex64::new(0.0, x),
                    2 => Complex64::new(-x, 0.0),
                    _ => Complex64::new(0.0, -x),
                }
            })
            .collect()
    }

    /// `t_k = i^{-k} s_k` rounded to `f64`.
    pub fn t(&self, k: usize) -> Vec<f64> {
        self.terms[k].iter().map(Real::to_f64).collect()
    }

    /// Bound `κ^k Π_{j<=k} n/(j + 4n/β)` on `‖t_k‖_∞`.
    pub fn norm_bound(&self, k: usize) -> f64 {
        let nf = self.n as f64;
        let shift = 4.0 * nf / self.beta;
        let ln: f64 = (1..=k).map(|j| log_bound_factor(nf, j, shift)).sum();
        libm::exp(ln + k as f64 * libm::log(self.kappa))
    }

    fn check_range(&self, lambda: f64) -> Result<()> {
        if !lambda.is_finite() || libm::fabs(lambda) > self.lambda_max * (1.0 + 1e-12) {
            return Err(Error::Range {
                lambda,
                lambda_max: self.lambda_max,
            });
        }
        Ok(())
    }

    fn big(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.precision)
    }

    /// `Σ_j (-1)^j c_j x^j` over indices `k = start, start+2, ...` of `t_k`,
    /// mapped through `weight(k, t_k)`; evaluated by Horner in `-λ²`.
    fn alternating_sum<F>(&self, lambda: f64, start: usize, mut weight: F) -> BigFloat
    where
        F: FnMut(usize, &[BigFloat]) -> BigFloat,
    {
        let l = self.big(lambda);
        let x = -(&l * &l);
        let mut acc = self.big(0.0);
        if self.order < start {
            return acc;
        }
        let last = if (self.order - start) % 2 == 0 {
            self.order
        } else {
            self.order - 1
        };
        let mut k = last;
        loop {
            acc = &(&acc * &x) + &weight(k, &self.terms[k]);
            if k < start + 2 {
                break;
            }
            k -= 2;
        }
        acc
    }

    /// Same as `alternating_sum` for one component of `t_k`.
    fn component_sum(&self, lambda: f64, start: usize, i: usize) -> BigFloat {
        self.alternating_sum(lambda, start, |_, t| t[i].clone())
    }

    /// `q(λ)` for `|λ| <= lambda_max`.
    pub fn q(&self, lambda: f64) -> Result<QValue> {
        self.check_range(lambda)?;
        let l = self.big(lambda);
        let q = (0..self.n)
            .map(|i| {
                let re = self.component_sum(lambda, 0, i).to_f64();
                let im = if self.order >= 1 {
                    (&l * &self.component_sum(lambda, 1, i)).to_f64()
                } else {
                    0.0
                };
                Complex64::new(re, im)
            })
            .collect();
        Ok(QValue {
            lambda,
            q,
            tail_bound: self.tail_bound,
        })
    }

    /// `q'(λ)` from the term-wise differentiated series.
    pub fn q_derivative(&self, lambda: f64) -> Result<Vec<Complex64>> {
        self.check_range(lambda)?;
        let l = self.big(lambda);
        Ok((0..self.n)
            .map(|i| {
                // d/dλ Σ (-1)^j t_{2j} λ^{2j} = -λ Σ_j (-1)^j (2j+2) t_{2j+2} λ^{2j}
                let re = if self.order >= 2 {
                    let s = self.alternating_sum(lambda, 2, |k, t| &t[i] * &self.big(k as f64));
                    -(&l * &s).to_f64()
                } else {
                    0.0
                };
                let im = if self.order >= 1 {
                    self.alternating_sum(lambda, 1, |k, t| &t[i] * &self.big(k as f64))
                        .to_f64()
                } else {
                    0.0
                };
                Complex64::new(re, im)
            })
            .collect())
    }

    fn v_dot(&self, t: &[BigFloat]) -> BigFloat {
        t.iter()
            .zip(&self.system.v)
            .fold(self.big(0.0), |acc, (x, &v)| &acc + &(x * &self.big(v)))
    }

    /// `(1/π) Σ_{j>=1} v·s_{2j} λ^{2j}`, the density as a power series.
    fn density_power_form(&self, lambda: f64) -> f64 {
        if self.order < 2 {
            return 0.0;
        }
        let l = self.big(lambda);
        let x = -(&l * &l);
        let s = self.alternating_sum(lambda, 2, |_, t| self.v_dot(t));
        // the sum starts at j = 1, so one factor of -λ² is pulled out
        (&x * &s).to_f64() / PI
    }

    /// One-point density `ρ¹_{β,n}(λ)` of the HP process.
    ///
    /// Evaluates both `(1/2π)(1 + 2 v·Re q)` and the power series
    /// `(1/π) Σ_{j>=1} v·s_{2j} λ^{2j}`, and reports the latter after
    /// checking that they agree to `1e-12`.
    pub fn hp_density(&self, lambda: f64) -> Result<f64> {
        let q = self.q(lambda)?;
        let v_re_q: f64 = q.q.iter().zip(&self.system.v).map(|(q, v)| q.re * v).sum();
        let direct = INV_TWO_PI * (1.0 + 2.0 * v_re_q);
        let series = self.density_power_form(lambda);
        let diff = libm::fabs(direct - series);
        if !(diff <= 1e-12) {
            return Err(Error::Consistency {
                what: "density forms (1 + 2 v.Re q)/2π and Σ v.s_2j λ^2j/π disagree",
                diff,
            });
        }
        Ok(series)
    }

    /// [`hp_density`](Self::hp_density) on a list of points.
    pub fn hp_density_curve(&self, lambdas: &[f64]) -> Result<Vec<f64>> {
        lambdas.iter().map(|&l| self.hp_density(l)).collect()
    }
}

/// `q(λ)` from precomputed coefficients.
pub fn q_series(coeffs: &SeriesCoefficients, lambda: f64) -> Result<QValue> {
    coeffs.q(lambda)
}

/// `ρ¹_{β,n}(λ)` from precomputed coefficients.
pub fn hp_density_series(coeffs: &SeriesCoefficients, lambda: f64) -> Result<f64> {
    coeffs.hp_density(lambda)
}

/// Pair correlation `ρ²_{2n}(0, λ)` of Sine_{2n}:
/// `(1/2π²) Σ_{j>=1} v·s_{2j} λ^{2j}` with coefficients at `β = 2n`.
pub fn sine_pair_corr_series(n: usize, lambda: f64, tol: f64) -> Result<f64> {
    let lambdas = [lambda];
    Ok(sine_pair_corr_curve(n, &lambdas, tol)?[0])
}

/// [`sine_pair_corr_series`] on a grid, sharing one set of coefficients.
pub fn sine_pair_corr_curve(n: usize, lambdas: &[f64], tol: f64) -> Result<Vec<f64>> {
    let lambda_max = lambdas.iter().fold(1e-3, |m: f64, l| m.max(libm::fabs(*l)));
    let coeffs = compute_coefficients(n, 2.0 * n as f64, lambda_max, tol)?;
    lambdas
        .iter()
        .map(|&l| {
            let pair = coeffs.density_power_form(l) * 0.5 / PI;
            let palm = coeffs.hp_density(l)? * INV_TWO_PI;
            let diff = libm::fabs(pair - palm);
            if !(diff <= 1e-12) {
                return Err(Error::Consistency {
                    what: "pair correlation differs from density/2π",
                    diff,
                });
            }
            Ok(pair)
        })
        .collect()
}

/// Leading coefficient of `λ^{2n}` in `ρ¹_{β,n}(λ)`:
/// `(1/2π) C(2n,n)^{-1} (β/2)^{2n} / (1+β/2)^{↑2n}`.
pub fn small_lambda_constant(n: usize, beta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Size {
            n,
            max: crate::linalg::MAX_SYSTEM_SIZE,
        });
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(domain("beta", beta, "must be a finite positive real"));
    }
    let h = 0.5 * beta;
    let mut value = INV_TWO_PI;
    // C(2n,n)^{-1} = Π_{j=1}^n j/(n+j)
    for j in 1..=n {
        value *= j as f64 / (n + j) as f64;
    }
    for j in 1..=(2 * n) {
        value *= h / (h + j as f64);
    }
    Ok(value)
}

/// `C_n = n^{2n} (n!)³ / ((2n)! (3n)!)`, so that
/// `ρ²_{2n}(0, λ) ≈ C_n λ^{2n} / 4π²` near zero.
pub fn sine_small_lambda_constant(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Size {
            n,
            max: crate::linalg::MAX_SYSTEM_SIZE,
        });
    }
    let nf = n as f64;
    let ln = 2.0 * nf * libm::log(nf) + 3.0 * libm::lgamma(nf + 1.0)
        - libm::lgamma(2.0 * nf + 1.0)
        - libm::lgamma(3.0 * nf + 1.0);
    Ok(libm::exp(ln))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn factorial(k: usize) -> f64 {
        (1..=k).map(|j| j as f64).product()
    }

    #[test]
    fn n1_beta2_coefficients_are_inverse_factorials() {
        let c = compute_coefficients(1, 2.0, 20.0, 1e-14).unwrap();
        for k in 0..30 {
            let expected = 2.0 / factorial(k + 2);
            assert!((c.t(k)[0] - expected).abs() <= 1e-14 * expected, "k={k}");
        }
        assert_eq!(c.s(2), vec![Complex64::new(-1.0 / 12.0, 0.0)]);
    }

    #[test]
    fn n2_beta4_first_coefficient() {
        let c = compute_coefficients(2, 4.0, 1.0, 1e-14).unwrap();
        let s1 = c.s(1);
        assert_eq!(s1[0].re, 0.0);
        assert_abs_diff_eq!(s1[0].im, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s1[1].im, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn parity_is_exact() {
        let c = compute_coefficients(3, 5.5, 10.0, 1e-12).unwrap();
        for k in 0..=c.order {
            for z in c.s(k) {
                if k % 2 == 0 {
                    assert_eq!(z.im, 0.0);
                } else {
                    assert_eq!(z.re, 0.0);
                }
            }
        }
    }

    #[test]
    fn constant_term_is_f() {
        for n in 1..6 {
            let c = compute_coefficients(n, 2.0 * n as f64, 1.0, 1e-12).unwrap();
            assert_eq!(c.t(0), vec![1.0; n]);
            let q0 = c.q(0.0).unwrap();
            assert!(q0.q.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
            assert_eq!(c.hp_density(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn n1_beta2_matches_closed_form() {
        let c = compute_coefficients(1, 2.0, 25.0, 1e-13).unwrap();
        for lambda in [0.3, 1.0, PI, 7.0, 19.5, 25.0] {
            // q₁ = 2(1 + iλ - e^{iλ})/λ²
            let z = Complex64::new(0.0, lambda);
            let exact = (Complex64::new(1.0, 0.0) + z - z.exp()) * 2.0 / (lambda * lambda);
            let q = c.q(lambda).unwrap().q[0];
            assert!((q - exact).norm() < 1e-12, "λ={lambda}: {q} vs {exact}");
        }
        assert_abs_diff_eq!(c.q(PI).unwrap().q[0].re, 4.0 / (PI * PI), epsilon = 1e-14);
        let s = (PI / 2.0).sin() / (PI / 2.0);
        assert_abs_diff_eq!(
            c.hp_density(PI).unwrap(),
            INV_TWO_PI * (1.0 - s * s),
            epsilon = 1e-14
        );
    }

    #[test]
    fn range_is_enforced() {
        let c = compute_coefficients(1, 2.0, 5.0, 1e-12).unwrap();
        assert!(matches!(c.q(5.5), Err(Error::Range { .. })));
        assert!(c.q(-5.0).is_ok());
        assert!(compute_coefficients(1, 2.0, 5.0, 1e-16).is_err());
        assert!(compute_coefficients(1, -2.0, 5.0, 1e-12).is_err());
        assert!(compute_coefficients(0, 2.0, 5.0, 1e-12).is_err());
    }

    #[test]
    fn n1_small_lambda_matches_prefactor() {
        for beta in [1.0, 3.0, 7.5] {
            let c = compute_coefficients(1, beta, 0.01, 1e-15).unwrap();
            let lambda = 1e-3;
            let expected = lambda * lambda / (4.0 * PI * (1.0 + 2.0 / beta) * (1.0 + 4.0 / beta));
            let got = c.hp_density(lambda).unwrap();
            assert!((got / expected - 1.0).abs() < 1e-5, "β={beta}");
        }
    }

    #[test]
    fn sine_pair_examples() {
        assert_abs_diff_eq!(
            sine_pair_corr_series(1, 2.0 * PI, 1e-14).unwrap(),
            crate::INV_FOUR_PI_SQ,
            epsilon = 1e-14
        );
        let v = sine_pair_corr_series(1, PI, 1e-14).unwrap();
        assert_abs_diff_eq!(
            v,
            crate::INV_FOUR_PI_SQ * (1.0 - 4.0 / (PI * PI)),
            epsilon = 1e-14
        );
        assert!((v - 0.015_064).abs() < 1e-6);
        let c2 = 16.0 * 8.0 / (24.0 * 720.0);
        let approx = crate::INV_FOUR_PI_SQ * c2 * 0.1f64.powi(4);
        let exact = sine_pair_corr_series(2, 0.1, 1e-15).unwrap();
        assert!((exact / approx - 1.0).abs() < 1e-3 * 5.0);
    }

    #[test]
    fn small_lambda_constants() {
        assert_abs_diff_eq!(
            small_lambda_constant(1, 2.0).unwrap(),
            1.0 / (24.0 * PI),
            epsilon = 1e-16
        );
        assert_abs_diff_eq!(
            small_lambda_constant(1, 4.0).unwrap(),
            1.0 / (12.0 * PI),
            epsilon = 1e-16
        );
        assert_abs_diff_eq!(
            sine_small_lambda_constant(1).unwrap(),
            1.0 / 12.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            sine_small_lambda_constant(2).unwrap(),
            16.0 * 8.0 / (24.0 * 720.0),
            epsilon = 1e-15
        );
        for n in 1..=12 {
            let a = small_lambda_constant(n, 2.0 * n as f64).unwrap() * INV_TWO_PI;
            let b = sine_small_lambda_constant(n).unwrap() * crate::INV_FOUR_PI_SQ;
            assert!((a / b - 1.0).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn sine_constant_identity_is_exact() {
        use num_bigint::BigInt;
        use num_rational::BigRational;
        let fact = |m: u64| (1..=m).fold(BigInt::from(1), |a, j| a * BigInt::from(j));
        for n in 1..=10u64 {
            let lhs = BigRational::new(
                BigInt::from(n).pow(2 * n as u32) * fact(n).pow(3),
                fact(2 * n) * fact(3 * n),
            );
            // C(2n,n)^{-1} n^{2n} / (1+n)^{↑2n}
            let rising = (0..2 * n).fold(BigInt::from(1), |a, j| a * BigInt::from(1 + n + j));
            let rhs = BigRational::new(
                fact(n) * fact(n) * BigInt::from(n).pow(2 * n as u32),
                fact(2 * n) * rising,
            );
            assert_eq!(lhs, rhs, "n={n}");
        }
    }

    #[test]
    fn small_lambda_asymptotics_from_series() {
        for (n, lambda) in [(1usize, 0.05), (2, 0.05), (3, 0.1)] {
            let rho = sine_pair_corr_series(n, lambda, 1e-15).unwrap();
            let lead = sine_small_lambda_constant(n).unwrap()
                * lambda.powi(2 * n as i32)
                * crate::INV_FOUR_PI_SQ;
            let ratio = rho / lead;
            assert!((0.98..=1.02).contains(&ratio), "n={n}: {ratio}");
        }
    }

    #[test]
    fn forms_agree_and_density_nonnegative() {
        for n in 1..=6usize {
            for beta in [2.0 * n as f64, 2.0 * n as f64 + 0.5, 3.0] {
                let c = compute_coefficients(n, beta, 30.0, 1e-12).unwrap();
                for i in 0..=60 {
                    let lambda = 0.5 * i as f64;
                    let rho = c.hp_density(lambda).unwrap();
                    assert!(rho >= -1e-10, "n={n} β={beta} λ={lambda}: {rho}");
                }
            }
        }
    }

    #[test]
    fn modulus_bounded_by_one() {
        let c = compute_coefficients(4, 8.0, 30.0, 1e-12).unwrap();
        for i in 0..=30 {
            for z in c.q(i as f64).unwrap().q {
                assert!(z.norm() <= 1.0 + 1e-10);
            }
        }
    }

    #[test]
    fn series_satisfies_the_ode() {
        for (n, beta) in [(1usize, 2.0), (2, 4.0), (3, 6.0), (3, 2.5), (5, 10.5)] {
            let c = compute_coefficients(n, beta, 30.0, 1e-13).unwrap();
            let sys = c.system().clone();
            for lambda in [0.0, 0.7, 3.0, 12.0, 29.0] {
                let q = c.q(lambda).unwrap().q;
                let dq = c.q_derivative(lambda).unwrap();
                let re: Vec<f64> = q.iter().map(|z| z.re).collect();
                let im: Vec<f64> = q.iter().map(|z| z.im).collect();
                let (are, aim) = (sys.a_mul(&re), sys.a_mul(&im));
                let h = 0.25 * beta;
                for i in 0..n {
                    let lhs = dq[i] * (h * lambda);
                    let rhs = Complex64::new(0.0, h * lambda * sys.b[i]) * q[i]
                        + Complex64::new(are[i], aim[i])
                        + sys.e[i] * sys.source_weight();
                    assert!((lhs - rhs).norm() <= 1e-8, "n={n} β={beta} λ={lambda}");
                }
            }
        }
    }

    #[test]
    fn doubling_order_changes_little() {
        for (n, beta) in [(2usize, 4.0), (3, 6.5)] {
            let tol = 1e-10;
            let c = compute_coefficients(n, beta, 20.0, tol).unwrap();
            let d = compute_coefficients_with_order(n, beta, 20.0, 2 * c.order).unwrap();
            for lambda in [1.0, 10.0, 20.0] {
                let (a, b) = (c.q(lambda).unwrap().q, d.q(lambda).unwrap().q);
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).norm() < tol, "n={n} λ={lambda}");
                }
            }
        }
    }

    #[test]
    fn norm_bound_holds_with_fitted_kappa() {
        for (n, beta) in [(1usize, 2.0), (2, 4.0), (3, 6.0), (4, 3.0), (6, 12.5)] {
            let c = compute_coefficients(n, beta, 30.0, 1e-12).unwrap();
            assert!(!c.kappa_raised, "n={n} β={beta}");
            for k in 0..=c.order {
                let norm = c.t(k).iter().fold(0.0f64, |m, x| m.max(x.abs()));
                assert!(norm <= c.norm_bound(k) * (1.0 + 1e-9), "n={n} k={k}");
            }
        }
    }
}
