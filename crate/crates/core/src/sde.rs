//! Monte Carlo engine: Euler–Maruyama for the angle diffusion
//!
//! ```text
//! dα = [λ(β/4)e^{βu/4} − δ sin α] du + (cos α − 1) dB₁ + sin α dB₂,
//! ```
//!
//! started at `α(ν) = 0` and run to `u = 0`. Every λ of the grid is driven
//! by the same increments, so one path yields `cos kα_λ(0)` for all of
//! them.
//!
//! Paths are grouped in fixed chunks of [`CHUNK_PATHS`]. A chunk is
//! reduced sequentially and chunks are merged in index order, so the
//! estimates do not depend on how chunks are scheduled.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::rng::path_rng;
use crate::special::{is_positive_integer, pochhammer_ratio_seq, CoeffSeq};
use crate::table::{CurveRow, CurveTable, Engine};

pub const DEFAULT_EPS_CUT: f64 = 1e-3;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_PATHS: u64 = 200_000;
pub const MAX_DT: f64 = 1e-2;
/// Paths per reduction chunk.
pub const CHUNK_PATHS: u64 = 512;
/// `|α|` beyond which a path is declared numerically unstable.
pub const BLOW_UP: f64 = 1e6;
/// Largest number of Fourier modes chosen by [`KMax::Auto`].
pub const MAX_AUTO_K: usize = 512;

const AUTO_COEFF_TOL: f64 = 1e-4;
const AUTO_MIN_K: usize = 8;
const RESYNC_STEPS: usize = 64;
const SMALL_ANGLE: f64 = 0.1;

/// Number of Fourier modes kept in the density formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum KMax {
    /// `K = n` for integer `δ = n`, otherwise the smallest `K >= 8` with
    /// `|c_K| < 1e-4`.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SdeConfig {
    pub beta: f64,
    pub delta: f64,
    /// Strictly increasing, nonnegative.
    pub lambda_grid: Vec<f64>,
    /// Effective λ at the start time; sets the cutoff `ν`.
    pub eps_cut: f64,
    pub dt: f64,
    pub paths: u64,
    pub master_seed: u64,
    pub k_max: KMax,
}

impl SdeConfig {
    /// Defaults for everything except the model and the grid.
    pub fn new(beta: f64, delta: f64, lambda_grid: Vec<f64>) -> Self {
        SdeConfig {
            beta,
            delta,
            lambda_grid,
            eps_cut: DEFAULT_EPS_CUT,
            dt: DEFAULT_DT,
            paths: DEFAULT_PATHS,
            master_seed: 0,
            k_max: KMax::Auto,
        }
    }

    /// Configuration for the pair correlation, `δ = β/2`.
    pub fn pair_correlation(beta: f64, lambda_grid: Vec<f64>) -> Self {
        Self::new(beta, beta / 2.0, lambda_grid)
    }

    pub fn with_paths(mut self, paths: u64) -> Self {
        self.paths = paths;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_eps_cut(mut self, eps_cut: f64) -> Self {
        self.eps_cut = eps_cut;
        self
    }

    pub fn with_k_max(mut self, k_max: KMax) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(domain("beta", self.beta, "must be a finite positive real"));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(domain(
                "delta",
                self.delta,
                "must be a finite positive real",
            ));
        }
        if self.lambda_grid.is_empty() {
            return Err(Error::Config("lambda grid is empty".into()));
        }
        for (i, &l) in self.lambda_grid.iter().enumerate() {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(domain("lambda", l, "must be finite and nonnegative"));
            }
            if i > 0 && l <= self.lambda_grid[i - 1] {
                return Err(Error::Config(
                    "lambda grid must be strictly increasing".into(),
                ));
            }
        }
        if !(self.eps_cut > 0.0) || !self.eps_cut.is_finite() {
            return Err(domain(
                "eps_cut",
                self.eps_cut,
                "must be a finite positive real",
            ));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(domain("dt", self.dt, "must lie in (0, 1e-2]"));
        }
        if self.paths < 2 {
            return Err(domain(
                "paths",
                self.paths as f64,
                "at least two paths are needed",
            ));
        }
        if self.k_max == KMax::Fixed(0) {
            return Err(domain("k_max", 0.0, "must be at least 1"));
        }
        Ok(())
    }

    /// Start time `ν = −(4/β) ln(λ_max/eps_cut)`, or 0 when the whole grid
    /// is already below `eps_cut`.
    pub fn cutoff(&self) -> f64 {
        let lmax = self.lambda_grid.iter().cloned().fold(0.0, f64::max);
        if lmax <= self.eps_cut {
            return 0.0;
        }
        -(4.0 / self.beta) * libm::log(lmax / self.eps_cut)
    }

    /// Coefficients `c_1..c_K` for the resolved `K`.
    pub fn coefficients(&self) -> Result<CoeffSeq> {
        let k = match self.k_max {
            KMax::Fixed(k) => k,
            KMax::Auto if is_positive_integer(self.delta) => self.delta as usize,
            KMax::Auto => {
                let seq = pochhammer_ratio_seq(self.delta, MAX_AUTO_K)?;
                (AUTO_MIN_K..=MAX_AUTO_K)
                    .find(|&k| libm::fabs(seq.get(k)) < AUTO_COEFF_TOL)
                    .unwrap_or(MAX_AUTO_K)
            }
        };
        pochhammer_ratio_seq(self.delta, k)
    }
}

/// Running mean and second central moment, mergeable.
#[derive(Debug, Clone, PartialEq)]
struct Welford {
    mean: f64,
    m2: f64,
}

impl Welford {
    const ZERO: Welford = Welford { mean: 0.0, m2: 0.0 };

    fn push(&mut self, n: f64, x: f64) {
        let d = x - self.mean;
        self.mean += d / n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, na: f64, other: &Welford, nb: f64) {
        let n = na + nb;
        let d = other.mean - self.mean;
        self.mean += d * nb / n;
        self.m2 += other.m2 + d * d * na * nb / n;
    }
}

/// Sample statistics of `cos kα_λ(0)`, `k = 1..K`, and of the weighted sum
/// `Σ c_k cos kα_λ(0)` at one λ.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    n: u64,
    modes: Vec<Welford>,
    weighted: Welford,
}

impl MomentAccumulator {
    fn new(k: usize) -> Self {
        MomentAccumulator {
            n: 0,
            modes: vec![Welford::ZERO; k],
            weighted: Welford::ZERO,
        }
    }

    fn push(&mut self, cos_k: &[f64], coeffs: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        let mut w = 0.0;
        for ((acc, &x), &c) in self.modes.iter_mut().zip(cos_k).zip(coeffs) {
            acc.push(n, x);
            w += c * x;
        }
        self.weighted.push(n, w);
    }

    fn merge(&mut self, other: &MomentAccumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        for (a, b) in self.modes.iter_mut().zip(&other.modes) {
            a.merge(na, b, nb);
        }
        self.weighted.merge(na, &other.weighted, nb);
        self.n += other.n;
    }

    fn finish(&self, lambda: f64) -> MomentEstimates {
        let n = self.n as f64;
        let se = |w: &Welford| libm::sqrt((w.m2 / (n - 1.0)).max(0.0) / n);
        MomentEstimates {
            lambda,
            m: self.modes.iter().map(|w| w.mean).collect(),
            se: self.modes.iter().map(se).collect(),
            weighted_mean: self.weighted.mean,
            weighted_se: se(&self.weighted),
            paths: self.n,
        }
    }
}

/// Estimates of `E[cos kα_λ(0)]` at one λ.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentEstimates {
    pub lambda: f64,
    /// `m[k - 1]` estimates `E[cos kα_λ(0)]`.
    pub m: Vec<f64>,
    /// Standard errors of `m`.
    pub se: Vec<f64>,
    /// `Σ c_k m_k` over the run's coefficients.
    pub weighted_mean: f64,
    /// Standard error of `weighted_mean`, from the per-path sample variance
    /// of `Σ c_k cos kα`, so correlations between modes are included.
    pub weighted_se: f64,
    pub paths: u64,
}

/// Reduced statistics of one chunk of paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkResult {
    pub paths: Range<u64>,
    accumulators: Vec<MomentAccumulator>,
    pub monotone_violations: u64,
}

/// A configuration with its time grid, growth table and coefficients
/// resolved. Shared read-only by all workers.
#[derive(Debug, Clone)]
pub struct PreparedSde {
    config: SdeConfig,
    coeffs: CoeffSeq,
    nu: f64,
    h: f64,
    sqrt_h: f64,
    /// `(β/4) e^{βu_i/4} h` at the left end of step `i`.
    growth: Vec<f64>,
}

impl PreparedSde {
    pub fn new(config: SdeConfig) -> Result<Self> {
        config.validate()?;
        let coeffs = config.coefficients()?;
        let nu = config.cutoff();
        let steps = libm::ceil(-nu / config.dt) as usize;
        let h = if steps == 0 { 0.0 } else { -nu / steps as f64 };
        let q = config.beta / 4.0;
        let growth = (0..steps)
            .map(|i| q * libm::exp(q * (nu + i as f64 * h)) * h)
            .collect();
        Ok(PreparedSde {
            config,
            coeffs,
            nu,
            h,
            sqrt_h: libm::sqrt(h),
            growth,
        })
    }

    pub fn config(&self) -> &SdeConfig {
        &self.config
    }

    pub fn coefficients(&self) -> &CoeffSeq {
        &self.coeffs
    }

    pub fn cutoff(&self) -> f64 {
        self.nu
    }

    pub fn steps(&self) -> usize {
        self.growth.len()
    }

    /// Effective step, `|ν|/steps <= dt`.
    pub fn step(&self) -> f64 {
        self.h
    }

    /// The fixed chunk decomposition of `0..paths`.
    pub fn chunks(&self) -> Vec<Range<u64>> {
        let p = self.config.paths;
        (0..p.div_ceil(CHUNK_PATHS))
            .map(|c| c * CHUNK_PATHS..((c + 1) * CHUNK_PATHS).min(p))
            .collect()
    }

    /// Simulates the paths in `range` and reduces them in order.
    pub fn simulate_chunk(&self, range: Range<u64>) -> Result<ChunkResult> {
        let nl = self.config.lambda_grid.len();
        let k = self.coeffs.k_max();
        let slack = 10.0 * self.config.dt;
        let mut accumulators = vec![MomentAccumulator::new(k); nl];
        let mut state = BlockState::new(nl);
        let mut cos_k = vec![0.0; k];
        let mut violations = 0;
        let mut first = range.start;
        while first < range.end {
            let live = (range.end - first).min(BLOCK as u64) as usize;
            self.run_block(first, &mut state);
            for b in 0..live {
                let path = first + b as u64;
                let alpha = |j: usize| state.alpha[j][b];
                if let Some(a) = (0..nl).map(alpha).find(|a| !(a.abs() <= BLOW_UP)) {
                    return Err(Error::BlowUp { path, value: a });
                }
                if (1..nl).any(|j| alpha(j) < alpha(j - 1) - slack) {
                    violations += 1;
                }
                for (j, acc) in accumulators.iter_mut().enumerate() {
                    cos_multiples(alpha(j), &mut cos_k);
                    acc.push(&cos_k, &self.coeffs.values);
                }
            }
            first += live as u64;
        }
        Ok(ChunkResult {
            paths: range,
            accumulators,
            monotone_violations: violations,
        })
    }

    /// Advances paths `first..first + BLOCK` in lockstep. Lanes are
    /// independent; each performs exactly the operations of a lone path.
    fn run_block(&self, first: u64, st: &mut BlockState) {
        let seed = self.config.master_seed;
        let mut rngs: [_; BLOCK] = core::array::from_fn(|b| path_rng(seed, first + b as u64));
        let lambdas = &self.config.lambda_grid[..];
        let dh = self.config.delta * self.h;
        st.reset();
        let mut db1 = [0.0; BLOCK];
        let mut db2 = [0.0; BLOCK];
        for (i, &g) in self.growth.iter().enumerate() {
            for (b, rng) in rngs.iter_mut().enumerate() {
                db1[b] = rng.sample::<f64, _>(StandardNormal) * self.sqrt_h;
                db2[b] = rng.sample::<f64, _>(StandardNormal) * self.sqrt_h;
            }
            let resync = (i + 1) % RESYNC_STEPS == 0;
            for (j, &lambda) in lambdas.iter().enumerate() {
                let (alpha, cz, sz) = (&mut st.alpha[j], &mut st.cz[j], &mut st.sz[j]);
                let drift = lambda * g;
                let step = advance_lanes(alpha, cz, sz, drift, dh, &db1, &db2);
                if resync || step.iter().any(|d| !(d.abs() < SMALL_ANGLE)) {
                    for b in 0..BLOCK {
                        if resync || !(step[b].abs() < SMALL_ANGLE) {
                            let (s, c) = libm::sincos(alpha[b]);
                            cz[b] = c;
                            sz[b] = s;
                        }
                    }
                }
            }
        }
    }

    /// Merges chunk results, which must cover `0..paths` in order.
    pub fn finish(&self, chunks: Vec<ChunkResult>) -> Result<SdeRun> {
        let nl = self.config.lambda_grid.len();
        let mut total = vec![MomentAccumulator::new(self.coeffs.k_max()); nl];
        let mut next = 0;
        let mut violations = 0;
        for chunk in &chunks {
            if chunk.paths.start != next {
                return Err(Error::Config(
                    "chunk results are not contiguous and ordered".into(),
                ));
            }
            next = chunk.paths.end;
            violations += chunk.monotone_violations;
            for (t, a) in total.iter_mut().zip(&chunk.accumulators) {
                t.merge(a);
            }
        }
        if next != self.config.paths {
            return Err(Error::Config(
                "chunk results do not cover every path".into(),
            ));
        }
        let estimates = total
            .iter()
            .zip(&self.config.lambda_grid)
            .map(|(a, &l)| a.finish(l))
            .collect();
        Ok(SdeRun {
            config: self.config.clone(),
            tail_bound: self.coeffs.tail_bound(),
            coeffs: self.coeffs.clone(),
            estimates,
            monotone_violations: violations,
            steps: self.steps(),
        })
    }
}

/// Paths advanced together by one worker.
const BLOCK: usize = 8;

/// Per-λ lanes of a block of paths.
struct BlockState {
    alpha: Vec<[f64; BLOCK]>,
    cz: Vec<[f64; BLOCK]>,
    sz: Vec<[f64; BLOCK]>,
}

impl BlockState {
    fn new(nl: usize) -> Self {
        BlockState {
            alpha: vec![[0.0; BLOCK]; nl],
            cz: vec![[1.0; BLOCK]; nl],
            sz: vec![[0.0; BLOCK]; nl],
        }
    }

    fn reset(&mut self) {
        self.alpha.iter_mut().for_each(|a| *a = [0.0; BLOCK]);
        self.cz.iter_mut().for_each(|a| *a = [1.0; BLOCK]);
        self.sz.iter_mut().for_each(|a| *a = [0.0; BLOCK]);
    }
}

/// One Euler step for every lane; returns the angle increments. The
/// rotation of `(cos α, sin α)` is only valid for increments below
/// `SMALL_ANGLE`, the caller resynchronizes the others.
#[inline(always)]
fn advance_lanes(
    alpha: &mut [f64; BLOCK],
    cz: &mut [f64; BLOCK],
    sz: &mut [f64; BLOCK],
    drift: f64,
    dh: f64,
    db1: &[f64; BLOCK],
    db2: &[f64; BLOCK],
) -> [f64; BLOCK] {
    let mut d = [0.0; BLOCK];
    for b in 0..BLOCK {
        d[b] = drift - dh * sz[b] + (cz[b] - 1.0) * db1[b] + sz[b] * db2[b];
    }
    for b in 0..BLOCK {
        alpha[b] += d[b];
    }
    let mut sd = [0.0; BLOCK];
    let mut cd = [0.0; BLOCK];
    for b in 0..BLOCK {
        (sd[b], cd[b]) = small_sincos(d[b]);
    }
    for b in 0..BLOCK {
        let (c, s) = (cz[b], sz[b]);
        cz[b] = c * cd[b] - s * sd[b];
        sz[b] = s * cd[b] + c * sd[b];
    }
    d
}

/// `(sin x, cos x)` by Taylor polynomials, accurate to ~1e-18 for `|x| < 0.1`.
#[inline(always)]
fn small_sincos(x: f64) -> (f64, f64) {
    const S: [f64; 4] = [-1.0 / 6.0, 1.0 / 120.0, -1.0 / 5040.0, 1.0 / 362_880.0];
    const C: [f64; 5] = [
        -0.5,
        1.0 / 24.0,
        -1.0 / 720.0,
        1.0 / 40_320.0,
        -1.0 / 3_628_800.0,
    ];
    let x2 = x * x;
    let s = x + x * x2 * (S[0] + x2 * (S[1] + x2 * (S[2] + x2 * S[3])));
    let c = 1.0 + x2 * (C[0] + x2 * (C[1] + x2 * (C[2] + x2 * (C[3] + x2 * C[4]))));
    (s, c)
}

/// `out[k-1] = cos(kα)` by repeated complex multiplication.
fn cos_multiples(alpha: f64, out: &mut [f64]) {
    let (s1, c1) = libm::sincos(alpha);
    let (mut c, mut s) = (1.0, 0.0);
    for o in out.iter_mut() {
        let cn = c * c1 - s * s1;
        s = s * c1 + c * s1;
        c = cn;
        *o = c;
    }
}

/// Result of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeRun {
    pub config: SdeConfig,
    pub coeffs: CoeffSeq,
    /// Bound on `Σ_{k>K} |c_k|`; zero when the expansion is finite.
    pub tail_bound: f64,
    pub estimates: Vec<MomentEstimates>,
    /// Paths on which `α_λ(0)` decreased along the grid by more than `10·dt`.
    pub monotone_violations: u64,
    pub steps: usize,
}

impl SdeRun {
    /// Fraction of paths on which the coupled angles are monotone in λ.
    pub fn monotone_fraction(&self) -> f64 {
        1.0 - self.monotone_violations as f64 / self.config.paths as f64
    }

    fn table(&self, base: f64, scale: f64) -> CurveTable {
        let mut table = CurveTable::new();
        for e in &self.estimates {
            table.push(CurveRow {
                lambda: e.lambda,
                value: base + scale * e.weighted_mean,
                stderr: Some(scale * e.weighted_se),
                engine: Engine::Mc,
                beta: self.config.beta,
                delta: self.config.delta,
                order: Some(self.coeffs.k_max()),
                seed: Some(self.config.master_seed),
                tail_bound: Some(scale * self.tail_bound),
            });
        }
        table
    }

    /// `ρ² = 1/4π² + (1/2π²) Σ c_k m_k`. Requires `δ = β/2`.
    pub fn pair_correlation(&self) -> Result<CurveTable> {
        if self.config.delta != self.config.beta / 2.0 {
            return Err(Error::Config(
                "pair correlation requires delta = beta/2".into(),
            ));
        }
        Ok(self.table(1.0 / (4.0 * PI * PI), 1.0 / (2.0 * PI * PI)))
    }

    /// `ρ¹ = 1/2π + (1/π) Σ c_k m_k`.
    pub fn hp_density(&self) -> CurveTable {
        self.table(1.0 / (2.0 * PI), 1.0 / PI)
    }
}

/// Runs every chunk on the calling thread.
pub fn simulate_paths(config: SdeConfig) -> Result<SdeRun> {
    let prepared = PreparedSde::new(config)?;
    let chunks = prepared
        .chunks()
        .into_iter()
        .map(|r| prepared.simulate_chunk(r))
        .collect::<Result<_>>()?;
    prepared.finish(chunks)
}

/// Monte Carlo pair correlation; the config must have `δ = β/2`.
pub fn mc_pair_correlation(config: SdeConfig) -> Result<CurveTable> {
    if config.delta != config.beta / 2.0 {
        return Err(Error::Config(
            "pair correlation requires delta = beta/2".into(),
        ));
    }
    simulate_paths(config)?.pair_correlation()
}

/// Monte Carlo HP density.
pub fn mc_hp_density(config: SdeConfig) -> Result<CurveTable> {
    Ok(simulate_paths(config)?.hp_density())
}

/// `λ^{-1} + λ^{-β/2} + λ^{-4/β}`.
pub fn decay_envelope(beta: f64, lambda: f64) -> f64 {
    1.0 / lambda + libm::pow(lambda, -beta / 2.0) + libm::pow(lambda, -4.0 / beta)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayPoint {
    pub lambda: f64,
    pub value: f64,
    pub stderr: f64,
    /// `|ρ² − 1/4π²|`.
    pub deviation: f64,
    pub envelope: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayReport {
    pub beta: f64,
    pub points: Vec<DecayPoint>,
    /// Largest ratio of deviation to envelope.
    pub fitted_c: f64,
    pub median_ratio: f64,
    pub last_ratio: f64,
    pub passed: bool,
}

/// Checks a pair-correlation curve against the decay envelope.
///
/// Rows must be sorted by λ with `λ >= 2` and carry standard errors.
pub fn decay_report(beta: f64, rows: &[CurveRow]) -> Result<DecayReport> {
    if rows.is_empty() {
        return Err(Error::Config(
            "decay report needs at least one point".into(),
        ));
    }
    let mut points = Vec::with_capacity(rows.len());
    for r in rows {
        if !(r.lambda >= 2.0) {
            return Err(domain("lambda", r.lambda, "decay report needs lambda >= 2"));
        }
        let envelope = decay_envelope(beta, r.lambda);
        let stderr = r.stderr.unwrap_or(0.0);
        if stderr > envelope / 2.0 {
            return Err(Error::InsufficientPrecision {
                lambda: r.lambda,
                stderr,
                envelope,
            });
        }
        let deviation = libm::fabs(r.value - 1.0 / (4.0 * PI * PI));
        points.push(DecayPoint {
            lambda: r.lambda,
            value: r.value,
            stderr,
            deviation,
            envelope,
            ratio: deviation / envelope,
        });
    }
    let mut ratios: Vec<f64> = points.iter().map(|p| p.ratio).collect();
    let fitted_c = ratios.iter().cloned().fold(0.0, f64::max);
    let last_ratio = *ratios.last().unwrap();
    ratios.sort_by(f64::total_cmp);
    let m = ratios.len();
    let median_ratio = if m % 2 == 1 {
        ratios[m / 2]
    } else {
        0.5 * (ratios[m / 2 - 1] + ratios[m / 2])
    };
    let passed = fitted_c.is_finite() && last_ratio <= 2.0 * median_ratio;
    Ok(DecayReport {
        beta,
        points,
        fitted_c,
        median_ratio,
        last_ratio,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContinuityStep {
    pub beta_from: f64,
    pub beta_to: f64,
    pub difference: f64,
    /// `max(5·stderr of the difference, 0.1·total variation)`.
    pub budget: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContinuityReport {
    pub lambda: f64,
    /// One row per β, sorted by β.
    pub rows: Vec<CurveRow>,
    pub total_variation: f64,
    pub steps: Vec<ContinuityStep>,
    pub passed: bool,
}

/// Checks that `β ↦ ρ²_β(0, λ)` has no jumps beyond the noise level.
///
/// `rows` holds one value per β at a common λ, sorted by β with adjacent
/// spacing at most 0.25.
pub fn continuity_report(rows: &[CurveRow]) -> Result<ContinuityReport> {
    let lambda = rows.first().map(|r| r.lambda).unwrap_or(0.0);
    for w in rows.windows(2) {
        let gap = w[1].beta - w[0].beta;
        if !(gap > 0.0 && gap <= 0.25) {
            return Err(Error::Config(
                "beta grid must increase with spacing at most 0.25".into(),
            ));
        }
        if w[1].lambda != lambda {
            return Err(Error::Config(
                "continuity rows must share one lambda".into(),
            ));
        }
    }
    let total_variation: f64 = rows
        .windows(2)
        .map(|w| libm::fabs(w[1].value - w[0].value))
        .sum();
    let steps: Vec<ContinuityStep> = rows
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let se = libm::hypot(a.stderr.unwrap_or(0.0), b.stderr.unwrap_or(0.0));
            let difference = libm::fabs(b.value - a.value);
            let budget = f64::max(5.0 * se, 0.1 * total_variation);
            ContinuityStep {
                beta_from: a.beta,
                beta_to: b.beta,
                difference,
                budget,
                passed: difference <= budget,
            }
        })
        .collect();
    let passed = steps.iter().all(|s| s.passed);
    Ok(ContinuityReport {
        lambda,
        rows: rows.to_vec(),
        total_variation,
        steps,
        passed,
    })
}
