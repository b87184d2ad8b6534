//! Rows of computed curves, the common output of every engine.

use alloc::vec::Vec;

/// Engine that produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Engine {
    Mc,
    Series,
    Ode,
    Closed,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Mc => "mc",
            Engine::Series => "series",
            Engine::Ode => "ode",
            Engine::Closed => "closed",
        }
    }
}

/// One evaluated point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurveRow {
    pub lambda: f64,
    pub value: f64,
    /// Monte Carlo standard error; `None` for deterministic engines.
    pub stderr: Option<f64>,
    pub engine: Engine,
    pub beta: f64,
    pub delta: f64,
    /// Truncation order: `K` of the series, the number of Fourier modes for
    /// Monte Carlo, or the seeding order of the ODE.
    pub order: Option<usize>,
    pub seed: Option<u64>,
    /// Bound on the neglected part of a truncated expansion.
    pub tail_bound: Option<f64>,
}

/// An ordered list of rows.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurveTable {
    pub rows: Vec<CurveRow>,
}

impl CurveTable {
    pub fn new() -> Self {
        CurveTable { rows: Vec::new() }
    }

    pub fn push(&mut self, row: CurveRow) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: CurveTable) {
        self.rows.extend(other.rows);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.lambda).collect()
    }

    /// Rows produced by one engine.
    pub fn by_engine(&self, engine: Engine) -> impl Iterator<Item = &CurveRow> {
        self.rows.iter().filter(move |r| r.engine == engine)
    }
}
