//! The linear equation `∂γ/∂t + Δγ + d(Φ(γ)) = α` on a flat background, for
//! closed 3-forms γ and α, with `Φ(γ) = Φ0(γ) + Φ1(∇γ)`.
//!
//! `Φ0` and `Φ1` are constant linear maps `Λ³ → Λ²` and `T* ⊗ Λ³ → Λ²`
//! modulated by scalar profile fields.

use serde::{Deserialize, Serialize};

use super::etd2_step;
use crate::error::{Error, Result};
use crate::lattice::{d, partial, zero_mode, Field, Grid};
use crate::rng::SeededRng;

/// Sitewise linear coupling `Φ(γ) = p0 M0 γ + p1 Σ_a M1[a] ∂_a γ`.
#[derive(Clone, Debug)]
pub struct Coupling {
    pub m0: Vec<[f64; 35]>,
    pub m1: Vec<Vec<[f64; 35]>>,
    pub profile0: Field,
    pub profile1: Field,
}

impl Coupling {
    pub fn zero(grid: Grid) -> Self {
        Coupling {
            m0: vec![[0.0; 35]; 21],
            m1: vec![vec![[0.0; 35]; 21]; 7],
            profile0: Field::zeros(grid, 0),
            profile1: Field::zeros(grid, 0),
        }
    }

    /// Random matrices scaled so that `‖Φ0‖_{C0} = size0` and
    /// `‖Φ1‖_{C0} = size1`, with smooth non-constant profiles.
    pub fn random(grid: Grid, size0: f64, size1: f64, seed: u64) -> Self {
        let mut rng = SeededRng::with_stream(seed, 7);
        let mut mat = || -> Vec<[f64; 35]> {
            (0..21).map(|_| std::array::from_fn(|_| rng.uniform(-1.0, 1.0))).collect()
        };
        let m0 = mat();
        let m1: Vec<Vec<[f64; 35]>> = (0..7).map(|_| mat()).collect();
        let profile = |stream: u64| {
            let mut r = SeededRng::with_stream(seed, stream);
            let p = Field::random_trig(grid, 0, 1, &mut r);
            let m = p.max_abs().max(1e-300);
            let mut out = p.scale(0.5 / m);
            out.data_mut().iter_mut().for_each(|x| *x += 0.5);
            out
        };
        let mut c = Coupling {
            m0,
            m1,
            profile0: profile(8),
            profile1: profile(9),
        };
        let n0 = c.phi0_norm();
        let n1 = c.phi1_norm();
        if n0 > 0.0 {
            c.m0.iter_mut().flatten().for_each(|x| *x *= size0 / n0);
        }
        if n1 > 0.0 {
            c.m1.iter_mut().flatten().flatten().for_each(|x| *x *= size1 / n1);
        }
        c
    }

    fn operator_norm(rows: usize, cols: usize, entry: impl Fn(usize, usize) -> f64) -> f64 {
        let m = nalgebra::DMatrix::from_fn(rows, cols, entry);
        m.singular_values().max()
    }

    /// `max |p0| · ‖M0‖₂`.
    pub fn phi0_norm(&self) -> f64 {
        self.profile0.max_abs() * Self::operator_norm(21, 35, |r, c| self.m0[r][c])
    }

    /// `max |p1| · ‖M1‖₂` with `M1` viewed as a `21 × (7·35)` matrix over the
    /// active directions.
    pub fn phi1_norm(&self) -> f64 {
        let m = self.profile0.grid().m();
        self.profile1.max_abs()
            * Self::operator_norm(21, 35 * m, |r, c| self.m1[c / 35][r][c % 35])
    }

    pub fn apply(&self, gamma: &Field) -> Result<Field> {
        if gamma.degree() != 3 {
            return Err(Error::DegreeMismatch {
                expected: 3,
                found: gamma.degree(),
            });
        }
        let grid = *gamma.grid();
        let ns = grid.n_sites();
        let mut out = Field::zeros(grid, 2);
        let mut apply_mat = |mat: &[[f64; 35]], prof: &Field, src: &Field| {
            let p = prof.data();
            let data = out.data_mut();
            for (r, row) in mat.iter().enumerate() {
                for (c, &w) in row.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let sc = src.component(c);
                    let dst = &mut data[r * ns..(r + 1) * ns];
                    for s in 0..ns {
                        dst[s] += w * p[s] * sc[s];
                    }
                }
            }
        };
        apply_mat(&self.m0, &self.profile0, gamma);
        if self.profile1.max_abs() > 0.0 {
            for a in 0..grid.m() {
                let da = partial(gamma, a)?;
                apply_mat(&self.m1[a], &self.profile1, &da);
            }
        }
        Ok(out)
    }
}

/// One ETD2 step: `Δ` exactly in Fourier space, `α - dΦ(γ)` explicit.
pub fn linear_parabolic_step(gamma: &Field, coupling: &Coupling, alpha: &Field, dt: f64) -> Result<Field> {
    etd2_step(gamma, dt, |g| {
        let mut r = alpha.clone();
        r.axpy(-1.0, &d(&coupling.apply(g)?)?)?;
        Ok(r)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearReport {
    pub steps: usize,
    pub dt: f64,
    pub phi0_norm: f64,
    pub phi1_norm: f64,
    pub margin: f64,
    /// `‖Φ1‖_{C0}` exceeded the configured ellipticity margin.
    pub margin_violated: bool,
    pub max_closedness_residual: f64,
    /// Largest deviation of the zero mode from its initial value.
    pub max_zero_mode_drift: f64,
    pub final_l2: f64,
}

/// Runs `steps` steps and tracks closedness and the zero mode.
pub fn run_linear(
    gamma: &Field,
    coupling: &Coupling,
    alpha: &Field,
    dt: f64,
    steps: usize,
    margin: f64,
) -> Result<(Field, LinearReport)> {
    let z0 = zero_mode(gamma);
    let mut g = gamma.clone();
    let mut max_closed = d(&g)?.max_abs();
    let mut max_drift = 0.0f64;
    for _ in 0..steps {
        g = linear_parabolic_step(&g, coupling, alpha, dt)?;
        if !g.is_finite() {
            return Err(Error::NonFinite("linear solver state".into()));
        }
        max_closed = max_closed.max(d(&g)?.max_abs());
        let z = zero_mode(&g);
        let drift = z
            .coeffs()
            .iter()
            .zip(z0.coeffs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        max_drift = max_drift.max(drift);
    }
    let phi1 = coupling.phi1_norm();
    let final_l2 = (g.data().iter().map(|x| x * x).sum::<f64>() * g.grid().cell_volume()).sqrt();
    Ok((
        g,
        LinearReport {
            steps,
            dt,
            phi0_norm: coupling.phi0_norm(),
            phi1_norm: phi1,
            margin,
            margin_violated: phi1 > margin,
            max_closedness_residual: max_closed,
            max_zero_mode_drift: max_drift,
            final_l2,
        },
    ))
}
