//! Direct integration of the linear system for `q(λ)`.
//!
//! For `λ > 0` the system is rewritten as
//!
//! ```text
//! q' = i B q + (4/β) A q / λ + (2(n+1)/(βλ)) e,
//! ```
//!
//! split into real and imaginary parts and integrated with the
//! Dormand–Prince 5(4) pair. The regular singular point at `λ = 0` is
//! avoided by starting from the power series at a small `λ₀`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::linalg::{build_system, SystemMatrices};
use crate::series::{compute_coefficients, QValue};
use crate::table::{CurveRow, CurveTable, Engine};
use crate::INV_TWO_PI;

/// Default starting point of the integration.
pub const DEFAULT_LAMBDA0: f64 = 1e-2;
/// Largest step, so that `e^{ikλ}` stays resolved.
pub const MAX_STEP: f64 = 0.1;

const MAX_STEPS: usize = 10_000_000;

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus the embedded fourth-order ones
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step statistics of an integration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Largest normalized local error estimate over accepted steps (`<= 1`
    /// means every step met `atol + rtol·|y|`).
    pub max_error_ratio: f64,
}

/// Tolerances for [`dopri5`].
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], ctl: &StepControl) -> f64 {
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let scale = ctl.atol + ctl.rtol * libm::fabs(*a).max(libm::fabs(*b));
            let r = e / scale;
            r * r
        })
        .sum();
    libm::sqrt(sum / err.len() as f64)
}

/// Integrates `y' = f(t, y)` from `grid[0]` with `y(grid[0]) = y0` and
/// returns the solution at every grid point. Steps are shortened to land on
/// the grid points exactly.
pub fn dopri5<F>(
    mut f: F,
    grid: &[f64],
    y0: &[f64],
    ctl: StepControl,
) -> Result<(Vec<Vec<f64>>, StepStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let mut out = Vec::with_capacity(grid.len());
    let mut stats = StepStats::default();
    if grid.is_empty() {
        return Ok((out, stats));
    }
    let mut t = grid[0];
    let mut y = y0.to_vec();
    out.push(y.clone());
    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut err = vec![0.0; dim];
    f(t, &y, &mut k[0]);
    let mut h = (0.1 * libm::fabs(t)).clamp(1e-6, ctl.max_step);
    let mut prev_err: f64 = 1e-4;
    let mut rejected_last = false;

    for &target in &grid[1..] {
        while t < target {
            if stats.accepted + stats.rejected > MAX_STEPS {
                return Err(Error::StepUnderflow { at: t, step: h });
            }
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            if step < 1e-14 * libm::fabs(t).max(1.0) && !last {
                return Err(Error::StepUnderflow { at: t, step });
            }
            let stage = |tmp: &mut Vec<f64>, k: &Vec<Vec<f64>>, coef: &[(usize, f64)]| {
                for i in 0..dim {
                    let mut s = y[i];
                    for &(j, a) in coef {
                        s += step * a * k[j][i];
                    }
                    tmp[i] = s;
                }
            };
            stage(&mut tmp, &k, &[(0, A21)]);
            f(t + C2 * step, &tmp, &mut k[1]);
            stage(&mut tmp, &k, &[(0, A31), (1, A32)]);
            f(t + C3 * step, &tmp, &mut k[2]);
            stage(&mut tmp, &k, &[(0, A41), (1, A42), (2, A43)]);
            f(t + C4 * step, &tmp, &mut k[3]);
            stage(&mut tmp, &k, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
            f(t + C5 * step, &tmp, &mut k[4]);
            stage(
                &mut tmp,
                &k,
                &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)],
            );
            f(t + step, &tmp, &mut k[5]);
            for i in 0..dim {
                y_new[i] = y[i]
                    + step
                        * (B1 * k[0][i]
                            + B3 * k[2][i]
                            + B4 * k[3][i]
                            + B5 * k[4][i]
                            + B6 * k[5][i]);
            }
            f(t + step, &y_new, &mut k[6]);
            for i in 0..dim {
                err[i] = step
                    * (E1 * k[0][i]
                        + E3 * k[2][i]
                        + E4 * k[3][i]
                        + E5 * k[4][i]
                        + E6 * k[5][i]
                        + E7 * k[6][i]);
            }
            let e = error_norm(&err, &y, &y_new, &ctl);
            if !e.is_finite() {
                stats.rejected += 1;
                h = step * 0.2;
                rejected_last = true;
                continue;
            }
            if e <= 1.0 {
                stats.accepted += 1;
                stats.max_error_ratio = stats.max_error_ratio.max(e);
                t = if last { target } else { t + step };
                core::mem::swap(&mut y, &mut y_new);
                let (first, rest) = k.split_at_mut(6);
                core::mem::swap(&mut first[0], &mut rest[0]);
                // PI control
                let mut fac = 0.9 * libm::pow(e.max(1e-10), -0.17) * libm::pow(prev_err, 0.04);
                fac = fac.clamp(0.2, 10.0);
                if rejected_last {
                    fac = fac.min(1.0);
                }
                prev_err = e.max(1e-4);
                rejected_last = false;
                // keep the controller's step when the last one was clipped
                h = (if last { h.max(step) } else { step } * fac).min(ctl.max_step);
            } else {
                stats.rejected += 1;
                let fac = (0.9 * libm::pow(e, -0.2)).max(0.2);
                h = step * fac;
                rejected_last = true;
            }
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}

/// Right-hand side of the rewritten system in real form,
/// `y = (Re q, Im q)`.
pub fn q_rhs(sys: &SystemMatrices, beta: f64, lambda: f64, y: &[f64], dy: &mut [f64]) {
    let n = sys.n;
    let c = 4.0 / (beta * lambda);
    let (re, im) = y.split_at(n);
    for i in 0..n {
        let mut are = sys.a_diag[i] * re[i];
        let mut aim = sys.a_diag[i] * im[i];
        if i > 0 {
            are += sys.a_sub[i - 1] * re[i - 1];
            aim += sys.a_sub[i - 1] * im[i - 1];
        }
        if i + 1 < n {
            are += sys.a_sup[i] * re[i + 1];
            aim += sys.a_sup[i] * im[i + 1];
        }
        dy[i] = -sys.b[i] * im[i] + c * are;
        dy[n + i] = sys.b[i] * re[i] + c * aim;
    }
    dy[0] += c * sys.source_weight();
}

/// Right-hand side of the infinite system for general `δ`, truncated after
/// `q.len()` modes (`q_{K+1} := 0`), returning `q'(λ)`:
///
/// `(β/4)λ q_k' = k(k+δ)/2 q_{k-1} + (ikλβ/4 - k²) q_k + k(k-δ)/2 q_{k+1}`
/// with `q_0 = 1`.
pub fn general_delta_rhs(beta: f64, delta: f64, lambda: f64, q: &[Complex64]) -> Vec<Complex64> {
    let h = 0.25 * beta * lambda;
    let m = q.len();
    (1..=m)
        .map(|k| {
            let kf = k as f64;
            let prev = if k == 1 {
                Complex64::new(1.0, 0.0)
            } else {
                q[k - 2]
            };
            let next = if k < m {
                q[k]
            } else {
                Complex64::new(0.0, 0.0)
            };
            let rhs = prev * (0.5 * kf * (kf + delta))
                + q[k - 1] * Complex64::new(-kf * kf, kf * h)
                + next * (0.5 * kf * (kf - delta));
            rhs / h
        })
        .collect()
}

/// Result of [`integrate_q`].
#[derive(Debug, Clone)]
pub struct OdeRun {
    pub n: usize,
    pub beta: f64,
    pub lambda_grid: Vec<f64>,
    /// Order of the series used for the starting value.
    pub seed_order: usize,
    pub rtol: f64,
    pub atol: f64,
    pub values: Vec<QValue>,
    pub stats: StepStats,
    /// `max_k |q_k(λ)|` over the output grid.
    pub max_modulus: f64,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("the λ grid is empty".into()));
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(domain("lambda_grid", w[1], "must be strictly increasing"));
        }
    }
    if !grid.iter().all(|x| x.is_finite()) {
        return Err(domain("lambda_grid", f64::NAN, "must be finite"));
    }
    Ok(())
}

/// Integrates `q` over `lambda_grid`, whose first point `λ₀ ∈ [1e-3, 1e-1]`
/// is seeded from the power series with tail below `atol/10`.
pub fn integrate_q(
    n: usize,
    beta: f64,
    lambda_grid: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<OdeRun> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(domain("beta", beta, "must be a finite positive real"));
    }
    if !(rtol >= 1e-12) {
        return Err(domain("rtol", rtol, "must be at least 1e-12"));
    }
    if !(atol > 0.0) {
        return Err(domain("atol", atol, "must be positive"));
    }
    check_grid(lambda_grid)?;
    let lambda0 = lambda_grid[0];
    if !(1e-3..=1e-1).contains(&lambda0) {
        return Err(domain(
            "lambda0",
            lambda0,
            "the first grid point must lie in [1e-3, 1e-1]",
        ));
    }
    let sys = build_system(n)?;
    let seed = compute_coefficients(n, beta, lambda0, (0.1 * atol).max(1e-15))?;
    let q0 = seed.q(lambda0)?;
    let mut y0 = vec![0.0; 2 * n];
    for (i, z) in q0.q.iter().enumerate() {
        y0[i] = z.re;
        y0[n + i] = z.im;
    }
    let ctl = StepControl {
        rtol,
        atol,
        max_step: MAX_STEP,
    };
    let (ys, stats) = dopri5(
        |t, y, dy| q_rhs(&sys, beta, t, y, dy),
        lambda_grid,
        &y0,
        ctl,
    )?;
    let mut max_modulus: f64 = 0.0;
    let values = lambda_grid
        .iter()
        .zip(&ys)
        .map(|(&lambda, y)| {
            let q: Vec<Complex64> = (0..n).map(|i| Complex64::new(y[i], y[n + i])).collect();
            max_modulus = q.iter().map(|z| z.norm()).fold(max_modulus, f64::max);
            QValue {
                lambda,
                q,
                tail_bound: 0.0,
            }
        })
        .collect();
    Ok(OdeRun {
        n,
        beta,
        lambda_grid: lambda_grid.to_vec(),
        seed_order: seed.order,
        rtol,
        atol,
        values,
        stats,
        max_modulus,
    })
}

/// `q` on an arbitrary non-negative increasing grid: points below `λ₀`
/// come from the series, the rest from an integration started at `λ₀`.
pub fn q_on_grid(
    n: usize,
    beta: f64,
    lambdas: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<Vec<QValue>> {
    check_grid(lambdas)?;
    if lambdas[0] < 0.0 {
        return Err(domain("lambda", lambdas[0], "must be non-negative"));
    }
    let lambda0 = DEFAULT_LAMBDA0;
    let split = lambdas.partition_point(|&l| l <= lambda0);
    let mut out = Vec::with_capacity(lambdas.len());
    if split > 0 {
        let seed = compute_coefficients(n, beta, lambda0, (0.1 * atol).max(1e-15))?;
        for &l in &lambdas[..split] {
            out.push(seed.q(l)?);
        }
    }
    if split < lambdas.len() {
        let mut grid = Vec::with_capacity(lambdas.len() - split + 1);
        grid.push(lambda0);
        grid.extend_from_slice(&lambdas[split..]);
        let run = integrate_q(n, beta, &grid, rtol, atol)?;
        out.extend(run.values.into_iter().skip(1));
    }
    Ok(out)
}

/// `(1/2π)(1 + 2 v·Re q)` for a value of `q`.
pub fn density_from_q(sys: &SystemMatrices, q: &[Complex64]) -> f64 {
    let v_re_q: f64 = q.iter().zip(&sys.v).map(|(z, v)| z.re * v).sum();
    INV_TWO_PI * (1.0 + 2.0 * v_re_q)
}

/// The HP density along a completed run.
pub fn hp_density_ode(run: &OdeRun) -> Result<CurveTable> {
    let sys = build_system(run.n)?;
    let mut table = CurveTable::new();
    for v in &run.values {
        table.push(CurveRow {
            lambda: v.lambda,
            value: density_from_q(&sys, &v.q),
            stderr: None,
            engine: Engine::Ode,
            beta: run.beta,
            delta: run.n as f64,
            order: Some(run.seed_order),
            seed: None,
            tail_bound: None,
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::beta4_q2;
    use crate::series::compute_coefficients;

    fn grid(from: f64, to: f64, points: usize) -> Vec<f64> {
        (0..points)
            .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
            .collect()
    }

    #[test]
    fn integrator_on_a_known_solution() {
        // y'' = -y as a first-order system
        let g = grid(0.0, 10.0, 11);
        let ctl = StepControl {
            rtol: 1e-11,
            atol: 1e-12,
            max_step: 0.1,
        };
        let (ys, stats) = dopri5(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &g,
            &[0.0, 1.0],
            ctl,
        )
        .unwrap();
        for (t, y) in g.iter().zip(&ys) {
            assert!((y[0] - t.sin()).abs() < 1e-9);
        }
        assert!(stats.max_error_ratio <= 1.0);
    }

    #[test]
    fn n1_beta2_matches_closed_form() {
        let mut g = vec![0.01];
        g.extend([1.0, 5.0, 20.0]);
        let run = integrate_q(1, 2.0, &g, 1e-12, 1e-13).unwrap();
        for v in &run.values[1..] {
            let l = v.lambda;
            let z = Complex64::new(0.0, l);
            let exact = (Complex64::new(1.0, 0.0) + z - z.exp()) * 2.0 / (l * l);
            assert!((v.q[0] - exact).norm() < 1e-9, "λ={l}");
        }
        assert!(run.stats.max_error_ratio <= 1.0);
        assert!(run.seed_order >= 1);
    }

    #[test]
    fn n2_beta4_matches_explicit_solution() {
        let g = [0.01, 0.5, 2.0, 10.0];
        let run = integrate_q(2, 4.0, &g, 1e-12, 1e-13).unwrap();
        for v in &run.values[1..] {
            let exact = beta4_q2(v.lambda).unwrap();
            assert!((v.q[1] - exact.q2).norm() < 1e-9, "λ={}", v.lambda);
            assert!((v.q[0] - exact.q1).norm() < 1e-9, "λ={}", v.lambda);
        }
    }

    #[test]
    fn slope_at_origin() {
        // q₂'(0) = 2i/3 for n = 2, β = 4: finite difference of the run
        let run = integrate_q(2, 4.0, &[0.001, 0.002], 1e-12, 1e-14).unwrap();
        let d = (run.values[1].q[1] - run.values[0].q[1]) / 0.001;
        assert!((d - Complex64::new(0.0, 2.0 / 3.0)).norm() < 2e-3);
    }

    #[test]
    fn density_near_origin_vanishes() {
        let run = integrate_q(3, 6.0, &[0.001, 0.01], 1e-10, 1e-12).unwrap();
        let table = hp_density_ode(&run).unwrap();
        assert!(table.rows[0].value.abs() < 1e-12);
        let run = integrate_q(1, 2.0, &[0.01, core::f64::consts::PI], 1e-12, 1e-13).unwrap();
        let rho = hp_density_ode(&run).unwrap().rows[1].value;
        let expected = INV_TWO_PI * (1.0 - 4.0 / (core::f64::consts::PI * core::f64::consts::PI));
        assert!((rho - expected).abs() < 1e-10);
    }

    #[test]
    fn agrees_with_series_engine() {
        let g: Vec<f64> = core::iter::once(0.01)
            .chain((1..=30).map(|i| i as f64))
            .collect();
        for n in 1..=6usize {
            let base = 2.0 * n as f64;
            for beta in [base, base - 0.5, base + 0.5] {
                let run = integrate_q(n, beta, &g, 1e-12, 1e-12).unwrap();
                let series = compute_coefficients(n, beta, 30.0, 1e-13).unwrap();
                let mut worst: f64 = 0.0;
                for v in &run.values {
                    let s = series.q(v.lambda).unwrap();
                    for (a, b) in v.q.iter().zip(&s.q) {
                        worst = worst.max((a - b).norm());
                    }
                }
                assert!(worst <= 1e-8, "n={n} β={beta}: {worst:e}");
                assert!(run.max_modulus <= 1.0 + 1e-6);
                assert!(run.stats.max_error_ratio <= 10.0);
            }
        }
    }

    #[test]
    fn general_system_reduces_to_integer_case() {
        for (n, beta) in [(1usize, 2.0), (2, 4.0), (3, 5.0)] {
            let sys = build_system(n).unwrap();
            let series = compute_coefficients(n, beta, 5.0, 1e-13).unwrap();
            for lambda in [0.5, 2.0, 5.0] {
                let q = series.q(lambda).unwrap().q;
                let mut y = vec![0.0; 2 * n];
                for i in 0..n {
                    y[i] = q[i].re;
                    y[n + i] = q[i].im;
                }
                let mut dy = vec![0.0; 2 * n];
                q_rhs(&sys, beta, lambda, &y, &mut dy);
                // extra modes beyond n do not feed back when δ = n
                let mut padded = q.clone();
                padded.extend([Complex64::new(0.3, -0.2), Complex64::new(0.1, 0.4)]);
                let general = general_delta_rhs(beta, n as f64, lambda, &padded);
                let exact_d = series.q_derivative(lambda).unwrap();
                for i in 0..n {
                    let rewritten = Complex64::new(dy[i], dy[n + i]);
                    assert!((general[i] - rewritten).norm() < 1e-12);
                    assert!((general[i] - exact_d[i]).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn grid_helper_covers_the_origin() {
        let g = [0.0, 0.005, 0.01, 1.0, 4.0];
        let qs = q_on_grid(2, 4.0, &g, 1e-12, 1e-13).unwrap();
        assert_eq!(qs.len(), g.len());
        assert_eq!(qs[0].q, vec![Complex64::new(1.0, 0.0); 2]);
        let exact = beta4_q2(4.0).unwrap();
        assert!((qs[4].q[1] - exact.q2).norm() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(integrate_q(2, 4.0, &[0.5, 1.0], 1e-10, 1e-12).is_err());
        assert!(integrate_q(2, 4.0, &[0.01, 1.0], 1e-13, 1e-12).is_err());
        assert!(integrate_q(2, 4.0, &[0.01, 0.005], 1e-10, 1e-12).is_err());
        assert!(integrate_q(2, -1.0, &[0.01, 1.0], 1e-10, 1e-12).is_err());
    }
}
