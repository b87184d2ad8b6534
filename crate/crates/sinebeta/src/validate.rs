//! Validation suites: every engine checked against exact results, against
//! each other, and against the qualitative theorems (decay, continuity).
//!
//! `Full` uses the production path counts; `Quick` runs the same checks
//! with fewer Monte Carlo paths. Timing budgets are part of the checks but
//! never of the emitted rows, so the rows are reproducible byte-for-byte.

use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sinebeta_core::closed_forms::{hp_delta1_density, sine2_rho2, sine4_rho2, HpForm};
use sinebeta_core::linalg::identity_report;
use sinebeta_core::sde::{continuity_report, decay_report, SdeConfig};
use sinebeta_core::series::{sine_pair_corr_series, sine_small_lambda_constant};
use sinebeta_core::table::{CurveRow, CurveTable};
use sinebeta_core::INV_FOUR_PI_SQ;

use crate::curves::{mc_curve, ode_curve, series_curve, CurveRequest, McSettings};
use crate::error::Result;
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Quick,
    Full,
}

/// Sizes and seed of a suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuitePlan {
    pub suite: Suite,
    pub seed: u64,
    /// Workers for Monte Carlo; does not affect any value.
    #[serde(skip)]
    pub threads: usize,
    /// Paths for the comparisons against exact curves.
    pub exact_paths: u64,
    pub decay_paths: u64,
    pub continuity_paths: u64,
    pub triangle_paths: u64,
    pub determinism_paths: u64,
}

impl SuitePlan {
    pub fn new(suite: Suite, seed: u64, threads: usize) -> Self {
        let (exact, decay, continuity, triangle) = match suite {
            Suite::Full => (200_000, 200_000, 100_000, 100_000),
            Suite::Quick => (20_000, 50_000, 20_000, 20_000),
        };
        SuitePlan {
            suite,
            seed,
            threads,
            exact_paths: exact,
            decay_paths: decay,
            continuity_paths: continuity,
            triangle_paths: triangle,
            determinism_paths: 4096,
        }
    }

    fn mc(&self, paths: u64) -> McSettings {
        McSettings {
            paths,
            seed: self.seed,
            ..McSettings::default()
        }
    }
}

/// Result of one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    /// Curves computed along the way.
    pub rows: Vec<CurveRow>,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

struct Check {
    passed: bool,
    detail: String,
    rows: Vec<CurveRow>,
}

fn timed(
    id: u8,
    name: &'static str,
    budget: Option<f64>,
    f: impl FnOnce() -> Result<Check>,
) -> Outcome {
    let start = Instant::now();
    let result = f();
    let seconds = start.elapsed().as_secs_f64();
    match result {
        Ok(mut c) => {
            if let Some(b) = budget {
                if seconds >= b {
                    c.passed = false;
                    c.detail
                        .push_str(&format!("; runtime {seconds:.2} s over the {b} s budget"));
                }
            }
            Outcome {
                id,
                name,
                passed: c.passed,
                detail: c.detail,
                seconds,
                rows: c.rows,
            }
        }
        Err(e) => Outcome {
            id,
            name,
            passed: false,
            detail: format!("error: {e}"),
            seconds,
            rows: Vec::new(),
        },
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn max_abs_error(
    table: &CurveTable,
    exact: impl Fn(f64) -> sinebeta_core::Result<f64>,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for r in &table.rows {
        worst = worst.max((r.value - exact(r.lambda)?).abs());
    }
    Ok(worst)
}

/// `|value − exact| / stderr` for each row, with `exact` per λ.
fn z_scores(
    table: &CurveTable,
    exact: impl Fn(f64) -> sinebeta_core::Result<f64>,
) -> Result<Vec<(f64, f64, f64)>> {
    table
        .rows
        .iter()
        .map(|r| {
            let e = exact(r.lambda)?;
            let se = r.stderr.unwrap_or(0.0);
            Ok((r.lambda, (r.value - e).abs() / se, (r.value - e).abs()))
        })
        .collect()
}

fn fmt_z(zs: &[(f64, f64, f64)]) -> String {
    zs.iter()
        .map(|(l, z, _)| format!("λ={l:.4}: z={z:.2}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Series (n=1, β=2) against the sine-kernel formula on 200 points of [0, 20].
pub fn sine_kernel(_plan: &SuitePlan) -> Outcome {
    timed(1, "sine-kernel reproduction", Some(1.0), || {
        let table = series_curve(&CurveRequest::rho2(2.0, linspace(0.0, 20.0, 200)))?;
        let err = max_abs_error(&table, sine2_rho2)?;
        Ok(Check {
            passed: err <= 1e-10,
            detail: format!("max abs error {err:.2e} (limit 1e-10)"),
            rows: table.rows,
        })
    })
}

/// Series and ODE (n=2, β=4) against the β=4 formula on [0, 30].
pub fn beta4_reproduction(_plan: &SuitePlan) -> Outcome {
    timed(2, "beta=4 reproduction", Some(5.0), || {
        let req = CurveRequest::rho2(4.0, linspace(0.0, 30.0, 301));
        let series = series_curve(&req)?;
        let ode = ode_curve(&req)?;
        let es = max_abs_error(&series, sine4_rho2)?;
        let eo = max_abs_error(&ode, sine4_rho2)?;
        let mut rows = series.rows;
        rows.extend(ode.rows);
        Ok(Check {
            passed: es <= 1e-8 && eo <= 1e-7,
            detail: format!(
                "series max error {es:.2e} (limit 1e-8), ode max error {eo:.2e} (limit 1e-7)"
            ),
            rows,
        })
    })
}

/// Monte Carlo pair correlation at β=2 against the sine-kernel formula.
pub fn mc_beta2(plan: &SuitePlan) -> Outcome {
    timed(3, "mc vs exact at beta=2", Some(180.0), || {
        let req = CurveRequest::rho2(2.0, vec![0.5, PI, 2.0 * PI, 10.0])
            .with_mc(plan.mc(plan.exact_paths));
        let table = mc_curve(&req, plan.threads)?;
        let zs = z_scores(&table, sine2_rho2)?;
        let worst = zs.iter().map(|z| z.2).fold(0.0, f64::max);
        Ok(Check {
            passed: zs.iter().all(|&(_, z, e)| z <= 3.0 && e <= 5e-3),
            detail: format!("{}; max abs error {worst:.2e}", fmt_z(&zs)),
            rows: table.rows,
        })
    })
}

/// Monte Carlo pair correlation at β=4 against the β=4 formula.
pub fn mc_beta4(plan: &SuitePlan) -> Outcome {
    timed(4, "mc vs exact at beta=4", Some(180.0), || {
        let req = CurveRequest::rho2(4.0, vec![1.0, PI, 8.0]).with_mc(plan.mc(plan.exact_paths));
        let table = mc_curve(&req, plan.threads)?;
        let zs = z_scores(&table, sine4_rho2)?;
        Ok(Check {
            passed: zs.iter().all(|z| z.1 <= 3.0),
            detail: fmt_z(&zs),
            rows: table.rows,
        })
    })
}

/// Monte Carlo HP density at β=3, δ=1 against the exact δ=1 density.
pub fn mc_delta1(plan: &SuitePlan) -> Outcome {
    timed(5, "mc vs exact density at beta=3, delta=1", None, || {
        let req =
            CurveRequest::hp_density(3.0, 1.0, vec![1.0, 4.0]).with_mc(plan.mc(plan.exact_paths));
        let table = mc_curve(&req, plan.threads)?;
        let zs = z_scores(&table, |l| {
            hp_delta1_density(3.0, l, HpForm::Hypergeometric)
        })?;
        Ok(Check {
            passed: zs.iter().all(|z| z.1 <= 3.0),
            detail: fmt_z(&zs),
            rows: table.rows,
        })
    })
}

/// `ρ²_{2n}(0, λ) / (C_n λ^{2n}/4π²)` near zero.
pub fn small_lambda(_plan: &SuitePlan) -> Outcome {
    timed(6, "small-lambda asymptotics", None, || {
        let mut parts = Vec::new();
        let mut passed = true;
        for (n, lambda) in [(1usize, 0.05), (2, 0.05), (3, 0.1)] {
            let rho = sine_pair_corr_series(n, lambda, 1e-15)?;
            let lead = sine_small_lambda_constant(n)? * lambda.powi(2 * n as i32) * INV_FOUR_PI_SQ;
            let ratio = rho / lead;
            passed &= (0.98..=1.02).contains(&ratio);
            parts.push(format!("n={n}, λ={lambda}: ratio {ratio:.5}"));
        }
        Ok(Check {
            passed,
            detail: parts.join(", "),
            rows: Vec::new(),
        })
    })
}

/// Exact identity report for n = 1..=20.
pub fn identities(_plan: &SuitePlan) -> Outcome {
    timed(7, "identity suite n <= 20", Some(1.0), || {
        let mut checks = 0;
        let mut failed = Vec::new();
        for n in 1..=20 {
            let report = identity_report(n)?;
            checks += report.checks.len();
            failed.extend(
                report
                    .failures()
                    .map(|c| format!("n={n} {} {:?}", c.name, c.index)),
            );
        }
        Ok(Check {
            passed: failed.is_empty(),
            detail: if failed.is_empty() {
                format!("{checks} exact checks passed")
            } else {
                format!(
                    "{} of {checks} checks failed: {}",
                    failed.len(),
                    failed.join(", ")
                )
            },
            rows: Vec::new(),
        })
    })
}

/// Decay envelope at β ∈ {2, 4, 8} and λ ∈ {4, 8, 16, 32}.
pub fn decay(plan: &SuitePlan) -> Outcome {
    timed(8, "decay envelope", Some(600.0), || {
        let mut rows = Vec::new();
        let mut parts = Vec::new();
        let mut passed = true;
        for beta in [2.0, 4.0, 8.0] {
            let req = CurveRequest::rho2(beta, vec![4.0, 8.0, 16.0, 32.0])
                .with_mc(plan.mc(plan.decay_paths));
            let table = mc_curve(&req, plan.threads)?;
            match decay_report(beta, &table.rows) {
                Ok(rep) => {
                    passed &= rep.passed;
                    parts.push(format!(
                        "β={beta}: c={:.3e}, last/median ratio {:.3e}/{:.3e}",
                        rep.fitted_c, rep.last_ratio, rep.median_ratio
                    ));
                }
                Err(e) => {
                    passed = false;
                    parts.push(format!("β={beta}: {e}"));
                }
            }
            rows.extend(table.rows);
        }
        Ok(Check {
            passed,
            detail: parts.join("; "),
            rows,
        })
    })
}

/// Continuity in β around the exactly solvable points β=2 and β=4.
pub fn continuity(plan: &SuitePlan) -> Outcome {
    timed(9, "continuity in beta", None, || {
        let mut rows = Vec::new();
        let mut parts = Vec::new();
        let mut passed = true;
        let scans: [([f64; 3], f64, fn(f64) -> sinebeta_core::Result<f64>); 2] = [
            ([1.75, 2.0, 2.25], PI, sine2_rho2),
            ([3.75, 4.0, 4.25], 2.0, sine4_rho2),
        ];
        for (betas, lambda, exact) in scans {
            let mut scan = Vec::new();
            for beta in betas {
                let req =
                    CurveRequest::rho2(beta, vec![lambda]).with_mc(plan.mc(plan.continuity_paths));
                scan.extend(mc_curve(&req, plan.threads)?.rows);
            }
            let report = continuity_report(&scan)?;
            let anchor = &scan[1];
            let z = (anchor.value - exact(lambda)?).abs() / anchor.stderr.unwrap_or(0.0);
            passed &= report.passed && z <= 3.0;
            let worst = report
                .steps
                .iter()
                .map(|s| s.difference / s.budget)
                .fold(0.0, f64::max);
            // Informational: a smooth curve has a second difference within noise.
            let se = |r: &CurveRow| r.stderr.unwrap_or(0.0);
            let second = scan[0].value - 2.0 * scan[1].value + scan[2].value;
            let second_se =
                (se(&scan[0]).powi(2) + 4.0 * se(&scan[1]).powi(2) + se(&scan[2]).powi(2)).sqrt();
            parts.push(format!(
                "β={}..{} at λ={lambda:.4}: anchor z={z:.2}, worst step/budget {worst:.2}, second difference z={:.2}",
                betas[0],
                betas[2],
                second.abs() / second_se
            ));
            rows.extend(scan);
        }
        Ok(Check {
            passed,
            detail: parts.join("; "),
            rows,
        })
    })
}

/// The same Monte Carlo run on one worker and on several must agree bit for bit.
pub fn determinism(plan: &SuitePlan) -> Outcome {
    timed(10, "determinism across thread counts", None, || {
        let cfg = SdeConfig::new(3.0, 1.5, vec![0.5, 2.0, 6.0])
            .with_paths(plan.determinism_paths)
            .with_seed(plan.seed);
        let many = plan.threads.max(2);
        let one = parallel::simulate_paths(cfg.clone(), 1)?;
        let more = parallel::simulate_paths(cfg, many)?;
        let table = one.pair_correlation()?;
        Ok(Check {
            passed: one == more,
            detail: format!(
                "1 vs {many} workers: {}",
                if one == more {
                    "identical"
                } else {
                    "different"
                }
            ),
            rows: table.rows,
        })
    })
}

/// Series, ODE and Monte Carlo on the pair correlation of Sine_{2n}.
pub fn engine_triangle(plan: &SuitePlan) -> Outcome {
    timed(11, "engine triangle", None, || {
        let mut rows = Vec::new();
        let mut parts = Vec::new();
        let mut passed = true;
        for n in 1..=3usize {
            let beta = 2.0 * n as f64;
            let req = CurveRequest::rho2(beta, vec![0.5, 1.0, 2.0, 4.0, 8.0])
                .with_mc(plan.mc(plan.triangle_paths));
            let series = series_curve(&req)?;
            let ode = ode_curve(&req)?;
            let mc = mc_curve(&req, plan.threads)?;
            let gap = series
                .values()
                .iter()
                .zip(ode.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let zmax = series
                .rows
                .iter()
                .zip(&mc.rows)
                .map(|(s, m)| (m.value - s.value).abs() / m.stderr.unwrap_or(0.0))
                .fold(0.0, f64::max);
            passed &= gap <= 1e-8 && zmax <= 3.0;
            parts.push(format!("n={n}: series-ode {gap:.1e}, mc max z {zmax:.2}"));
            rows.extend(series.rows);
            rows.extend(ode.rows);
            rows.extend(mc.rows);
        }
        Ok(Check {
            passed,
            detail: parts.join("; "),
            rows,
        })
    })
}

/// All criteria in order; `report` sees each outcome as soon as it is known.
pub fn run_suite(plan: &SuitePlan, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let criteria: [fn(&SuitePlan) -> Outcome; 11] = [
        sine_kernel,
        beta4_reproduction,
        mc_beta2,
        mc_beta4,
        mc_delta1,
        small_lambda,
        identities,
        decay,
        continuity,
        determinism,
        engine_triangle,
    ];
    criteria
        .iter()
        .map(|c| {
            let o = c(plan);
            report(&o);
            o
        })
        .collect()
}

/// Every row produced by a suite run, in criterion order.
pub fn suite_table(outcomes: &[Outcome]) -> CurveTable {
    CurveTable {
        rows: outcomes
            .iter()
            .flat_map(|o| o.rows.iter().cloned())
            .collect(),
    }
}
