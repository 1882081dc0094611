//! The gauge diffeomorphism `dφ/dt = -X(φ)`, `φ(·, 0) = id`, and pullbacks
//! of fields along it.
//!
//! If σ solves the gauged flow then `φ*σ` solves the plain flow. The check
//! here is coarse: field values at displaced points come from multilinear
//! interpolation, so the residual is first order in the grid spacing.

use serde::{Deserialize, Serialize};

use super::{gauge_vector_field, step, time_step, FlowKind, FlowState, GridSpec, Integrator, Perturbation, StepParams};
use crate::error::{Error, Result};
use crate::exterior7::kernels::{transform_high, transform_low, Mat7, BINOM7};
use crate::exterior7::sigma_std;
use crate::g2field::G2Field;
use crate::lattice::{hodge_laplacian, l2_norm, partial, Field, Grid};

/// Per-site displacement `φ(x) - x` in all seven coordinates.
#[derive(Clone, Debug)]
pub struct GaugeMap {
    grid: Grid,
    disp: Vec<[f64; 7]>,
    pub t: f64,
}

impl GaugeMap {
    pub fn identity(grid: Grid) -> Self {
        GaugeMap {
            grid,
            disp: vec![[0.0; 7]; grid.n_sites()],
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn displacement(&self) -> &[[f64; 7]] {
        &self.disp
    }

    pub fn max_displacement(&self) -> f64 {
        self.disp
            .iter()
            .flat_map(|u| u.iter())
            .fold(0.0, |a, &b| a.max(b.abs()))
    }

    /// `J[s][b][a] = ∂φ^b / ∂x^a`; fails on a non-positive determinant.
    pub fn jacobian(&self) -> Result<Vec<Mat7>> {
        let grid = self.grid;
        let ns = grid.n_sites();
        let m = grid.m();
        let mut jac = vec![[[0.0; 7]; 7]; ns];
        for j in jac.iter_mut() {
            for (b, row) in j.iter_mut().enumerate() {
                row[b] = 1.0;
            }
        }
        for b in 0..7 {
            let comp: Vec<f64> = self.disp.iter().map(|u| u[b]).collect();
            if comp.iter().all(|&x| x == 0.0) {
                continue;
            }
            let f = Field::from_data(grid, 0, comp)?;
            for a in 0..m {
                let p = partial(&f, a)?;
                for (s, j) in jac.iter_mut().enumerate() {
                    j[b][a] += p.data()[s];
                }
            }
        }
        for (s, j) in jac.iter().enumerate() {
            let det = nalgebra::SMatrix::<f64, 7, 7>::from_fn(|r, c| j[r][c]).determinant();
            if !(det > 1e-8) {
                return Err(Error::DegenerateJacobian(s));
            }
        }
        Ok(jac)
    }

    /// One RK4 step of `dφ/dt = -X(φ)` with `X` varying linearly in time
    /// from `x_start` to `x_end` over the step.
    pub fn advance(&mut self, x_start: &Field, x_end: &Field, dt: f64) -> Result<()> {
        let mut x_mid = x_start.scale(0.5);
        x_mid.axpy(0.5, x_end)?;
        let vel = |x: &Field, u: &[[f64; 7]]| -> Vec<[f64; 7]> {
            let v = interpolate(x, u);
            let ns = self.grid.n_sites();
            (0..ns)
                .map(|s| std::array::from_fn(|b| -v.data()[b * ns + s]))
                .collect()
        };
        let shifted = |u: &[[f64; 7]], k: &[[f64; 7]], c: f64| -> Vec<[f64; 7]> {
            u.iter()
                .zip(k)
                .map(|(a, b)| std::array::from_fn(|i| a[i] + c * b[i]))
                .collect()
        };
        let k1 = vel(x_start, &self.disp);
        let k2 = vel(&x_mid, &shifted(&self.disp, &k1, 0.5 * dt));
        let k3 = vel(&x_mid, &shifted(&self.disp, &k2, 0.5 * dt));
        let k4 = vel(x_end, &shifted(&self.disp, &k3, dt));
        for (s, u) in self.disp.iter_mut().enumerate() {
            for i in 0..7 {
                u[i] += dt / 6.0 * (k1[s][i] + 2.0 * k2[s][i] + 2.0 * k3[s][i] + k4[s][i]);
            }
        }
        if self.disp.iter().any(|u| u.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("gauge map".into()));
        }
        self.t += dt;
        Ok(())
    }
}

/// Values of `f` at `x_s + u_s` by multilinear interpolation on the cell
/// anchored at site `s` (shifted by whole cells only when `|u| >= h`), so
/// that small displacements give a smooth first-order error.
pub fn interpolate(f: &Field, disp: &[[f64; 7]]) -> Field {
    let grid = *f.grid();
    let m = grid.m();
    let ns = grid.n_sites();
    let h = grid.h();
    let nc = f.n_components();
    let mut out = Field::zeros(grid, f.degree());
    let src = f.data();
    let mut acc = vec![0.0; nc];
    for (s, u) in disp.iter().enumerate() {
        let mut base = s;
        let mut frac = [0.0; 7];
        for a in 0..m {
            let w = u[a] / h;
            let shift = w.trunc();
            frac[a] = w - shift;
            if shift != 0.0 {
                base = grid.neighbour(base, a, shift as isize);
            }
        }
        acc.iter_mut().for_each(|x| *x = 0.0);
        for corner in 0..(1usize << m) {
            let mut site = base;
            let mut weight = 1.0;
            for a in 0..m {
                if corner >> a & 1 == 1 {
                    site = grid.neighbour(site, a, 1);
                    weight *= frac[a];
                } else {
                    weight *= 1.0 - frac[a];
                }
            }
            for c in 0..nc {
                acc[c] += weight * src[c * ns + site];
            }
        }
        let data = out.data_mut();
        for c in 0..nc {
            data[c * ns + s] = acc[c];
        }
    }
    out
}

/// `φ* f`: interpolated values transformed by `Λ^k(Jᵀ)`.
pub fn pullback(map: &GaugeMap, f: &Field) -> Result<Field> {
    if f.grid() != map.grid() {
        return Err(Error::GridMismatch);
    }
    let jac = map.jacobian()?;
    let vals = interpolate(f, &map.disp);
    let k = f.degree();
    let nk = BINOM7[k];
    let mut buf = [0.0; 35];
    Ok(vals.map_sites(k, |s, a, out| {
        let j = &jac[s];
        let mt: Mat7 = std::array::from_fn(|r| std::array::from_fn(|c| j[c][r]));
        if k <= 3 {
            transform_low(k, &mt, a, &mut buf[..nk]);
        } else {
            let jm = nalgebra::SMatrix::<f64, 7, 7>::from_fn(|r, c| j[r][c]);
            let det = jm.determinant();
            let inv = jm.try_inverse().expect("Jacobian checked non-degenerate");
            // (Jᵀ)^{-T} = J^{-1}
            let mit: Mat7 = std::array::from_fn(|r| std::array::from_fn(|c| inv[(r, c)]));
            transform_high(k, &mit, det, a, &mut buf[..nk]);
        }
        out.copy_from_slice(&buf[..nk]);
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PullbackConfig {
    pub grid: GridSpec,
    pub perturbation: Perturbation,
    /// Time at which the residual is evaluated.
    pub t_check: f64,
    pub integrator: Integrator,
    pub cfl: f64,
}

impl Default for PullbackConfig {
    fn default() -> Self {
        PullbackConfig {
            grid: GridSpec::default(),
            perturbation: Perturbation {
                amplitude: 1e-2,
                ..Perturbation::default()
            },
            t_check: 0.5,
            integrator: Integrator::Imex,
            cfl: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackReport {
    pub n: usize,
    pub t: f64,
    pub dt: f64,
    pub steps: usize,
    pub max_displacement: f64,
    /// `‖∂_t σ̂ - Δ_{σ̂} σ̂‖ / ‖∂_t σ̂‖` in L² for `σ̂ = φ*σ`.
    pub residual: f64,
}

/// Runs the gauged flow, integrates the gauge map alongside, and
/// measures how far the pulled-back structure is from solving the plain
/// flow at `t_check` (time derivative by central differences).
pub fn pullback_residual(cfg: &PullbackConfig) -> Result<PullbackReport> {
    let grid = cfg.grid.build()?;
    let sigma0 = Field::constant(grid, &sigma_std());
    let mut state = FlowState::new(cfg.perturbation.apply(grid)?, sigma0)?;
    let params = StepParams {
        kind: FlowKind::Gauged,
        integrator: cfg.integrator,
        cfl: cfg.cfl,
        dt: None,
    };
    let dt0 = time_step(&params, &state)?;
    let k_check = (cfg.t_check / dt0).ceil().max(1.0) as usize;
    let dt = cfg.t_check / k_check as f64;
    let bg = state.background().clone();
    let mut map = GaugeMap::identity(grid);
    let mut x_now = gauge_vector_field(&bg, &state.theta()?)?;
    let mut saved: Vec<Field> = Vec::new();
    for k in 0..=k_check {
        if k + 1 >= k_check {
            saved.push(pullback(&map, state.sigma())?);
        }
        step(&mut state, &params, dt)?;
        let x_next = gauge_vector_field(&bg, &state.theta()?)?;
        map.advance(&x_now, &x_next, dt)?;
        x_now = x_next;
    }
    saved.push(pullback(&map, state.sigma())?);
    let (prev, mid, next) = (&saved[0], &saved[1], &saved[2]);
    let dsdt = next.sub(prev)?.scale(0.5 / dt);
    let hat = G2Field::new(mid.clone())?;
    let resid = dsdt.sub(&hodge_laplacian(mid, hat.metric())?)?;
    let denom = l2_norm(&dsdt, hat.metric())?;
    Ok(PullbackReport {
        n: grid.n(),
        t: cfg.t_check,
        dt,
        steps: k_check + 1,
        max_displacement: map.max_displacement(),
        residual: if denom > 0.0 { l2_norm(&resid, hat.metric())? / denom } else { 0.0 },
    })
}
