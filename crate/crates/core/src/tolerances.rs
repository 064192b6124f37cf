//! Every floating-point threshold used by the numerical checks.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `|slope|` below this counts as bounded.
    pub bounded_slope: f64,
    /// A slope at or below this counts as blow-up.
    pub blowup_slope: f64,
    /// Largest relative change of a quadrature under halving `h`.
    pub quadrature_halving: f64,
    /// Largest relative change of an image measure under halving the cells.
    pub image_halving: f64,
    /// Largest max/min ratio in an optimality band.
    pub band_factor: f64,
    /// `|slope|` above this counts as a monotone trend inside a band.
    pub trend_slope: f64,
    /// Relative gap allowed between `μ(B)` and `ρ(x0)|B|`.
    pub density_match: f64,
    /// Relative gap allowed between a fitted volume exponent and `v0·deg I`.
    pub volume_slope: f64,
    /// Relative gap between jet coefficients and finite differences.
    pub finite_difference: f64,
    /// Relative gap between a quadrature and its Monte Carlo oracle.
    pub monte_carlo: f64,
    /// Largest max/min spread of equivalence ratios over a family.
    pub equivalence_spread: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            bounded_slope: 0.1,
            blowup_slope: -0.2,
            quadrature_halving: 0.05,
            image_halving: 0.10,
            band_factor: 4.0,
            trend_slope: 0.1,
            density_match: 0.25,
            volume_slope: 0.10,
            finite_difference: 1e-6,
            monte_carlo: 0.10,
            equivalence_spread: 10.0,
        }
    }
}
