//! Time-interior smoothing of the linear equation `∂γ/∂t + Δγ + dΦ(γ) = 0`:
//! starting from rough closed data, the energy in shell `|k|²` at time `ε`
//! relative to time 0 should fall off like `e^{-2|k|²ε}`, faster than any
//! power of `|k|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::linear::{linear_parabolic_step, Coupling};
use crate::flow::{GridSpec, Perturbation};
use crate::lattice::{d, shell_energy, Field};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothingConfig {
    pub grid: GridSpec,
    /// Observation time ε.
    pub epsilon: f64,
    pub steps: usize,
    pub seed: u64,
    /// `‖Φ0‖_{C0}` and `‖Φ1‖_{C0}`; both zero gives the pure heat equation.
    pub phi0: f64,
    pub phi1: f64,
    /// Shells with `|k|² (L/2π)² < min_shell` are left out of the comparison.
    pub min_shell: usize,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig {
            grid: GridSpec::default(),
            epsilon: 0.02,
            steps: 20,
            seed: 1,
            phi0: 0.0,
            phi1: 0.0,
            min_shell: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellRatio {
    /// `|k|² (L/2π)²`.
    pub shell: usize,
    pub ratio: f64,
    /// `e^{-2|k|²ε}`.
    pub heat_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub epsilon: f64,
    pub phi0: f64,
    pub phi1: f64,
    pub shells: Vec<ShellRatio>,
    /// Largest `|ln ratio - ln heat_ratio|` over all populated shells.
    pub max_log_deviation_from_heat: f64,
    /// Smallest `ln ratio / ln heat_ratio` over shells at or above
    /// `min_shell`: 1 for pure heat, at least ½ means the decay exponent is
    /// within a factor 2 of the heat equation.
    pub min_exponent_fraction: f64,
    pub max_closedness_residual: f64,
}

/// Rough closed data: `dβ` with `β` populated up to the resolution limit.
pub fn rough_closed_datum(cfg: &SmoothingConfig) -> Result<Field> {
    let grid = cfg.grid.build()?;
    let band = (grid.n() / 2).saturating_sub(1).max(1);
    Perturbation {
        seed: cfg.seed,
        amplitude: 1.0,
        band,
    }
    .exact_form(grid)
}

pub fn smoothing_probe(cfg: &SmoothingConfig) -> Result<SmoothingReport> {
    if !(cfg.epsilon >= 0.0) || (cfg.epsilon > 0.0 && cfg.steps == 0) {
        return Err(Error::InvalidArgument("need epsilon >= 0 and steps > 0".into()));
    }
    let grid = cfg.grid.build()?;
    let gamma0 = rough_closed_datum(cfg)?;
    let coupling = if cfg.phi0 == 0.0 && cfg.phi1 == 0.0 {
        Coupling::zero(grid)
    } else {
        Coupling::random(grid, cfg.phi0, cfg.phi1, cfg.seed)
    };
    let alpha = Field::zeros(grid, 3);
    let mut g = gamma0.clone();
    let mut closed = d(&g)?.max_abs();
    if cfg.epsilon > 0.0 {
        let dt = cfg.epsilon / cfg.steps as f64;
        for _ in 0..cfg.steps {
            g = linear_parabolic_step(&g, &coupling, &alpha, dt)?;
            closed = closed.max(d(&g)?.max_abs());
        }
    }
    let e0 = shell_energy(&gamma0);
    let e1 = shell_energy(&g);
    let base = 2.0 * std::f64::consts::PI / grid.length();
    let floor = 1e-28 * e0.iter().cloned().fold(0.0, f64::max);
    let mut shells = Vec::new();
    let mut max_dev = 0.0f64;
    let mut min_frac = f64::INFINITY;
    for (j, (&a, &b)) in e0.iter().zip(&e1).enumerate() {
        if j == 0 || a <= floor {
            continue;
        }
        let k2 = j as f64 * base * base;
        let heat = (-2.0 * k2 * cfg.epsilon).exp();
        let ratio = b / a;
        max_dev = max_dev.max((ratio.ln() - heat.ln()).abs());
        if j >= cfg.min_shell && cfg.epsilon > 0.0 {
            min_frac = min_frac.min(ratio.ln() / heat.ln());
        }
        shells.push(ShellRatio {
            shell: j,
            ratio,
            heat_ratio: heat,
        });
    }
    Ok(SmoothingReport {
        epsilon: cfg.epsilon,
        phi0: cfg.phi0,
        phi1: cfg.phi1,
        shells,
        max_log_deviation_from_heat: max_dev,
        min_exponent_fraction: if min_frac.is_finite() { min_frac } else { 1.0 },
        max_closedness_residual: closed,
    })
}
