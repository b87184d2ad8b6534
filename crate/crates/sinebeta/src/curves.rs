//! Curve requests and engine dispatch.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sinebeta_core::closed_forms::{hp_delta1_density, sine2_rho2, sine4_rho2, HpForm};
use sinebeta_core::linalg::build_system;
use sinebeta_core::ode::{density_from_q, q_on_grid};
use sinebeta_core::sde::{KMax, SdeConfig, DEFAULT_DT, DEFAULT_EPS_CUT, DEFAULT_PATHS};
use sinebeta_core::series::compute_coefficients;
use sinebeta_core::table::{CurveRow, CurveTable, Engine};

use crate::error::{usage, Result};
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    Mc,
    Series,
    Ode,
    Closed,
    All,
}

/// What a curve measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// Pair correlation `ρ²_β(0, λ)`; requires `δ = β/2`.
    Rho2,
    /// HP density `ρ¹_{β,δ}(λ)`.
    HpDensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl LambdaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let LambdaGrid {
            min,
            max,
            points,
            spacing,
        } = *self;
        if !(min.is_finite() && max.is_finite() && min >= 0.0) {
            return Err(usage(format!(
                "lambda range [{min}, {max}] must be finite and nonnegative"
            )));
        }
        if points == 0 {
            return Err(usage("--points must be at least 1"));
        }
        if points == 1 {
            return Ok(vec![max]);
        }
        if !(max > min) {
            return Err(usage(format!(
                "--lambda-max ({max}) must exceed --lambda-min ({min})"
            )));
        }
        let last = (points - 1) as f64;
        Ok(match spacing {
            Spacing::Linear => (0..points)
                .map(|i| {
                    if i + 1 == points {
                        max
                    } else {
                        min + (max - min) * i as f64 / last
                    }
                })
                .collect(),
            Spacing::Log => {
                if !(min > 0.0) {
                    return Err(usage("log spacing needs --lambda-min > 0"));
                }
                let (a, b) = (min.ln(), max.ln());
                (0..points)
                    .map(|i| {
                        if i + 1 == points {
                            max
                        } else {
                            (a + (b - a) * i as f64 / last).exp()
                        }
                    })
                    .collect()
            }
        })
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub paths: u64,
    pub dt: f64,
    pub eps_cut: f64,
    pub k_max: KMax,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            paths: DEFAULT_PATHS,
            dt: DEFAULT_DT,
            eps_cut: DEFAULT_EPS_CUT,
            k_max: KMax::Auto,
            seed: 0,
        }
    }
}

/// Tolerances of the deterministic engines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub series_tol: f64,
    pub ode_rtol: f64,
    pub ode_atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            series_tol: 1e-13,
            ode_rtol: 1e-12,
            ode_atol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRequest {
    pub quantity: Quantity,
    pub beta: f64,
    pub delta: f64,
    pub lambdas: Vec<f64>,
    pub mc: McSettings,
    pub tolerances: Tolerances,
}

impl CurveRequest {
    pub fn rho2(beta: f64, lambdas: Vec<f64>) -> Self {
        CurveRequest {
            quantity: Quantity::Rho2,
            beta,
            delta: beta / 2.0,
            lambdas,
            mc: McSettings::default(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn hp_density(beta: f64, delta: f64, lambdas: Vec<f64>) -> Self {
        CurveRequest {
            quantity: Quantity::HpDensity,
            delta,
            ..Self::rho2(beta, lambdas)
        }
    }

    pub fn with_mc(mut self, mc: McSettings) -> Self {
        self.mc = mc;
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(usage(format!(
                "beta must be a finite positive real, got {}",
                self.beta
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(usage(format!(
                "delta must be a finite positive real, got {}",
                self.delta
            )));
        }
        if self.quantity == Quantity::Rho2 && self.delta != self.beta / 2.0 {
            return Err(usage(format!(
                "the pair correlation needs delta = beta/2 = {}, got delta = {}",
                self.beta / 2.0,
                self.delta
            )));
        }
        if self.lambdas.is_empty() {
            return Err(usage("the lambda grid is empty"));
        }
        if !self.lambdas.iter().all(|l| l.is_finite() && *l >= 0.0) {
            return Err(usage("lambda values must be finite and nonnegative"));
        }
        if self.lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(usage("lambda values must be strictly increasing"));
        }
        Ok(())
    }

    /// `1/2π` for the pair correlation (Palm identity), 1 for the density.
    fn density_scale(&self) -> f64 {
        match self.quantity {
            Quantity::Rho2 => 0.5 / PI,
            Quantity::HpDensity => 1.0,
        }
    }

    fn row(&self, lambda: f64, value: f64, engine: Engine) -> CurveRow {
        CurveRow {
            lambda,
            value,
            stderr: None,
            engine,
            beta: self.beta,
            delta: self.delta,
            order: None,
            seed: None,
            tail_bound: None,
        }
    }
}

/// `Some(n)` when `δ = n` is a positive integer.
pub fn integer_delta(delta: f64) -> Option<usize> {
    (delta >= 1.0 && delta.fract() == 0.0 && delta <= 64.0).then_some(delta as usize)
}

fn require_integer_delta(req: &CurveRequest, engine: &str) -> Result<usize> {
    integer_delta(req.delta).ok_or_else(|| {
        usage(format!(
            "the {engine} engine needs an integer delta (the finite linear system behind it exists only \
             for delta = n = 1, 2, ...), got delta = {}; use --engine mc for other values",
            req.delta
        ))
    })
}

pub fn series_curve(req: &CurveRequest) -> Result<CurveTable> {
    req.check()?;
    let n = require_integer_delta(req, "series")?;
    let lambda_max = req.lambdas.iter().cloned().fold(1e-3, f64::max);
    let coeffs = compute_coefficients(n, req.beta, lambda_max, req.tolerances.series_tol)?;
    let scale = req.density_scale();
    let mut table = CurveTable::new();
    for &l in &req.lambdas {
        let mut row = req.row(l, scale * coeffs.hp_density(l)?, Engine::Series);
        row.order = Some(coeffs.order);
        // |v_k| <= 1, so the density error is at most (n/π) times the q tail.
        row.tail_bound = Some(scale * n as f64 * coeffs.tail_bound / PI);
        table.push(row);
    }
    Ok(table)
}

pub fn ode_curve(req: &CurveRequest) -> Result<CurveTable> {
    req.check()?;
    let n = require_integer_delta(req, "ode")?;
    let sys = build_system(n)?;
    let tol = &req.tolerances;
    let qs = q_on_grid(n, req.beta, &req.lambdas, tol.ode_rtol, tol.ode_atol)?;
    let scale = req.density_scale();
    let mut table = CurveTable::new();
    for q in qs {
        let mut row = req.row(q.lambda, scale * density_from_q(&sys, &q.q), Engine::Ode);
        row.order = Some(n);
        table.push(row);
    }
    Ok(table)
}

/// The closed form for the request, if one exists.
pub fn closed_form(req: &CurveRequest) -> Option<Box<dyn Fn(f64) -> sinebeta_core::Result<f64>>> {
    let beta = req.beta;
    match req.quantity {
        Quantity::Rho2 if beta == 2.0 => Some(Box::new(sine2_rho2)),
        Quantity::Rho2 if beta == 4.0 => Some(Box::new(sine4_rho2)),
        Quantity::HpDensity if req.delta == 1.0 => Some(Box::new(move |l| {
            hp_delta1_density(beta, l, HpForm::Hypergeometric)
        })),
        Quantity::HpDensity if beta == 4.0 && req.delta == 2.0 => {
            Some(Box::new(|l| sine4_rho2(l).map(|v| 2.0 * PI * v)))
        }
        _ => None,
    }
}

pub fn closed_curve(req: &CurveRequest) -> Result<CurveTable> {
    req.check()?;
    let f = closed_form(req).ok_or_else(|| {
        usage(format!(
            "no closed form for beta = {}, delta = {}; closed forms exist for the pair correlation at \
             beta = 2, 4 and for the density at delta = 1 (any beta) or beta = 4, delta = 2",
            req.beta, req.delta
        ))
    })?;
    let mut table = CurveTable::new();
    for &l in &req.lambdas {
        table.push(req.row(l, f(l)?, Engine::Closed));
    }
    Ok(table)
}

pub fn mc_config(req: &CurveRequest) -> SdeConfig {
    let mc = &req.mc;
    SdeConfig {
        beta: req.beta,
        delta: req.delta,
        lambda_grid: req.lambdas.clone(),
        eps_cut: mc.eps_cut,
        dt: mc.dt,
        paths: mc.paths,
        master_seed: mc.seed,
        k_max: mc.k_max,
    }
}

pub fn mc_curve(req: &CurveRequest, threads: usize) -> Result<CurveTable> {
    req.check()?;
    let run = parallel::simulate_paths(mc_config(req), threads)?;
    Ok(match req.quantity {
        Quantity::Rho2 => run.pair_correlation()?,
        Quantity::HpDensity => run.hp_density(),
    })
}

/// Rows from the chosen engine. `All` runs every engine that applies, in
/// the order mc, series, ode, closed.
pub fn compute(req: &CurveRequest, engine: EngineChoice, threads: usize) -> Result<CurveTable> {
    match engine {
        EngineChoice::Mc => mc_curve(req, threads),
        EngineChoice::Series => series_curve(req),
        EngineChoice::Ode => ode_curve(req),
        EngineChoice::Closed => closed_curve(req),
        EngineChoice::All => {
            let mut table = mc_curve(req, threads)?;
            if integer_delta(req.delta).is_some() {
                table.extend(series_curve(req)?);
                table.extend(ode_curve(req)?);
            }
            if closed_form(req).is_some() {
                table.extend(closed_curve(req)?);
            }
            Ok(table)
        }
    }
}
