//! Discrete potential theory for the simple random walk: heat kernels, the
//! Green function, escape probabilities, equilibrium measures and capacities,
//! all carrying truncation-error intervals, plus independent Monte Carlo
//! oracles for cross-validation.
//!
//! Box-truncated solves give rigorous one-sided bounds (partial Green sums
//! from below, exit-before-hit probabilities from above). The other side of
//! each interval comes from Richardson extrapolation in the inverse box
//! radius with a safety margin; margins are validated against the extra
//! solve radius, the Monte Carlo oracles, and (for d = 3) a certified
//! superharmonic return bound.

pub mod grid;
pub mod green;
pub mod harmonic;
pub mod heat;
pub mod oracle;
pub mod table;

//pub use green::{green_table, GreenTable};
//pub use harmonic::{escape_field, EscapeField};
//TMP pub use heat::{heat_kernel, heat_kernel_exact, scan_heat_kernel, HeatKernelTable};
//pub use oracle::{mc_escape_oracle, mc_green_oracle, McEstimate};
//pub use table::{potential_table, PotentialTable};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("table needs {need_bytes} bytes, cap is {cap_bytes}; reduce horizon or radius")]
    MemoryCap { need_bytes: usize, cap_bytes: usize },
    #[error("exact-rational mode supports n_max <= 20, got {n_max}")]
    ExactHorizon { n_max: usize },
    #[error("solver stalled on side-{side} box at relative residual {residual:.3e}")]
    SolverStalled { side: usize, residual: f64 },
    #[error("{what}: achieved width {achieved:.3e} exceeds tolerance {requested:.3e}; increase solve radii")]
    ToleranceUnachievable {
        what: String,
        achieved: f64,
        requested: f64,
    },
    #[error("set does not fit the solver box: {0}")]
    SetTooLarge(String),
    #[error("{0}")]
    BadInput(String),
}

/// A certified-style closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn around(mid: f64, margin: f64) -> Self {
        Interval {
            lo: mid - margin,
            hi: mid + margin,
        }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn clamp_unit(self) -> Self {
        Interval {
            lo: self.lo.max(0.0),
            hi: self.hi.min(1.0).max(self.lo.max(0.0)),
        }
    }
}
