//! Numerical check of the L¹ maximum principle for nonnegative subsolutions
//! of `∂f/∂t ≤ -Δf + b f` on the flat torus of dimension `m`:
//!
//! `max_{M×[t,T]} |f| ≤ t^{-(m+2)/4} C_m max{b, m/4 (1+m/2)²}² T^{(m+2)/2}
//!  max{C_S, T V^{-2/m}}^{m/2} ∫_{M×[0,T]} |f|`.
//!
//! The test functions solve the heat equation with zeroth-order term `b`
//! exactly, mode by mode in Fourier space, so the hypothesis holds with
//! equality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior7::KForm;
use crate::lattice::{drop_nyquist, fourier_multiplier, half_space_modes, partial, Field, Grid};
use crate::rng::SeededRng;

/// `C_m = 4 r^{Σ_{i≥1} 2i r^{-i}} 2^{(m+2) Σ_{i≥0} (i+1) 2^{-i-2}}` with
/// `r = 1 + 2/m`, using `Σ i x^i = x/(1-x)²`. The second series sums to 1.
pub fn moser_constant_cn(m: usize) -> Result<f64> {
    if m < 3 {
        return Err(Error::InvalidArgument(format!("the Moser constant needs dimension >= 3, got {m}")));
    }
    let r = 1.0 + 2.0 / m as f64;
    let x = 1.0 / r;
    let first = 2.0 * x / (1.0 - x).powi(2);
    Ok(4.0 * r.powf(first) * 2f64.powi(m as i32 + 2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialProfile {
    /// Random band-limited trigonometric polynomial shifted to be nonnegative.
    #[default]
    RandomTrig,
    /// Narrow periodic Gaussian at a random centre.
    Bump,
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MoserConfig {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    /// Zeroth-order coefficient, `b >= 0`.
    pub b: f64,
    /// Horizon `T`.
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Sobolev constant; `None` uses [`sobolev_constant_estimate`] times
    /// `cs_safety`.
    pub c_s: Option<f64>,
    pub cs_safety: f64,
    pub profile: InitialProfile,
    pub seed: u64,
    pub band: usize,
    /// Number of uniform time intervals on `[0, T]` (even, for Simpson).
    pub time_steps: usize,
}

impl Default for MoserConfig {
    fn default() -> Self {
        MoserConfig {
            m: 3,
            n: 16,
            length: 2.0 * std::f64::consts::PI,
            b: 0.0,
            horizon: 1.0,
            c_s: None,
            cs_safety: 4.0,
            profile: InitialProfile::RandomTrig,
            seed: 1,
            band: 2,
            time_steps: 256,
        }
    }
}

impl MoserConfig {
    fn validate(&self) -> Result<()> {
        if self.m < 3 {
            return Err(Error::InvalidArgument("moser_check needs m >= 3".into()));
        }
        if !(self.b >= 0.0) || !(self.horizon > 0.0) {
            return Err(Error::InvalidArgument("need b >= 0 and T > 0".into()));
        }
        if self.c_s.is_some_and(|c| !(c > 0.0)) || !(self.cs_safety > 0.0) {
            return Err(Error::InvalidArgument("C_S and its safety factor must be positive".into()));
        }
        if self.time_steps < 2 || self.time_steps % 2 == 1 {
            return Err(Error::InvalidArgument("time_steps must be even and >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoserReport {
    pub m: usize,
    pub n: usize,
    pub b: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub seed: u64,
    pub profile: InitialProfile,
    /// Sobolev constant used in the bound.
    pub c_s: f64,
    pub c_n: f64,
    pub volume: f64,
    /// `∫_{M×[0,T]} |f|`.
    pub space_time_l1: f64,
    /// Largest `LHS/RHS` over the sampled `t`.
    pub max_ratio: f64,
    pub worst_t: f64,
    pub pass: bool,
}

fn lp_norm(f: &Field, p: f64) -> f64 {
    let cv = f.grid().cell_volume();
    (f.data().iter().map(|x| x.abs().powf(p)).sum::<f64>() * cv).powf(1.0 / p)
}

fn grad_sq(f: &Field) -> Result<f64> {
    let cv = f.grid().cell_volume();
    let mut s = 0.0;
    for a in 0..f.grid().m() {
        s += partial(f, a)?.data().iter().map(|x| x * x).sum::<f64>();
    }
    Ok(s * cv)
}

/// `(‖f‖²_{2m/(m-2)} - V^{-2/m} ‖f‖²_2) / ‖∇f‖²_2`, the ratio whose supremum
/// is the Sobolev constant in the homogeneous inequality
/// `‖f‖²_{2m/(m-2)} ≤ C_S ‖∇f‖² + V^{-2/m} ‖f‖²`.
pub fn sobolev_quotient(f: &Field) -> Result<f64> {
    let m = f.grid().m() as f64;
    let p = 2.0 * m / (m - 2.0);
    let v = f.grid().volume();
    let g = grad_sq(f)?;
    if g == 0.0 {
        return Ok(0.0);
    }
    Ok((lp_norm(f, p).powi(2) - v.powf(-2.0 / m) * lp_norm(f, 2.0).powi(2)) / g)
}

fn periodic_gaussian(grid: Grid, centre: &[f64; 7], width: f64) -> Field {
    let l = grid.length();
    let m = grid.m();
    Field::from_fn(grid, 0, |x| {
        let mut r2 = 0.0;
        for a in 0..m {
            let mut dx = (x[a] - centre[a]).rem_euclid(l);
            if dx > l / 2.0 {
                dx -= l;
            }
            r2 += dx * dx;
        }
        KForm::scalar((-r2 / (2.0 * width * width)).exp())
    })
}

fn add_constant(f: &Field, c: f64) -> Field {
    let mut out = f.clone();
    out.data_mut().iter_mut().for_each(|x| *x += c);
    out
}

/// Largest Sobolev quotient over a fixed family of test functions:
/// `1 + a cos(k·x)` for low modes and a range of amplitudes, and periodic
/// Gaussian bumps of several widths on constant offsets. A lower bound for
/// the true constant.
pub fn sobolev_constant_estimate(grid: Grid) -> Result<f64> {
    if grid.m() < 3 {
        return Err(Error::InvalidArgument("Sobolev constant needs m >= 3".into()));
    }
    let base = 2.0 * std::f64::consts::PI / grid.length();
    let mut best = 0.0f64;
    for k in half_space_modes(grid.m(), 2) {
        let wave = Field::from_fn(grid, 0, |x| {
            let ph: f64 = k.iter().enumerate().map(|(a, &ka)| base * ka as f64 * x[a]).sum();
            KForm::scalar(ph.cos())
        });
        for amp in [0.05, 0.2, 0.5, 1.0, 2.0, 5.0, 20.0] {
            best = best.max(sobolev_quotient(&add_constant(&wave.scale(amp), 1.0))?);
        }
    }
    let h = grid.h();
    let centre = [grid.length() / 2.0; 7];
    for w in [1.5 * h, 2.0 * h, 3.0 * h, 4.0 * h, grid.length() / 8.0, grid.length() / 4.0] {
        let bump = drop_nyquist(&periodic_gaussian(grid, &centre, w));
        for c in [0.0, 0.01, 0.1, 1.0] {
            best = best.max(sobolev_quotient(&add_constant(&bump, c))?);
        }
    }
    Ok(best)
}

/// Nonnegative band-limited initial datum for the given profile.
pub fn initial_datum(cfg: &MoserConfig, grid: Grid) -> Result<Field> {
    let f = match cfg.profile {
        InitialProfile::Constant => add_constant(&Field::zeros(grid, 0), 1.0),
        InitialProfile::RandomTrig => {
            let p = Field::random_trig(grid, 0, cfg.band, &mut SeededRng::with_stream(cfg.seed, 11));
            let lo = p.data().iter().cloned().fold(f64::INFINITY, f64::min);
            add_constant(&p, -lo)
        }
        InitialProfile::Bump => {
            let mut rng = SeededRng::with_stream(cfg.seed, 12);
            let mut centre = [0.0; 7];
            for c in centre.iter_mut().take(grid.m()) {
                *c = rng.uniform(0.0, grid.length());
            }
            let b = drop_nyquist(&periodic_gaussian(grid, &centre, 1.5 * grid.h()));
            let lo = b.data().iter().cloned().fold(f64::INFINITY, f64::min);
            add_constant(&b, -lo.min(0.0))
        }
    };
    Ok(drop_nyquist(&f))
}

/// Evolves `f0` exactly and evaluates the bound at every time node.
pub fn moser_check_with(cfg: &MoserConfig, f0: &Field, c_s: f64) -> Result<MoserReport> {
    cfg.validate()?;
    let grid = *f0.grid();
    let fmax = f0.max_abs();
    if f0.data().iter().any(|&x| x < -1e-12 * fmax.max(1.0)) {
        return Err(Error::InvalidArgument("initial datum must be nonnegative".into()));
    }
    let m = grid.m() as f64;
    let big_t = cfg.horizon;
    let nt = cfg.time_steps;
    let dt = big_t / nt as f64;
    let cv = grid.cell_volume();
    let mut sup = Vec::with_capacity(nt + 1);
    let mut l1 = Vec::with_capacity(nt + 1);
    for j in 0..=nt {
        let s = j as f64 * dt;
        let f = fourier_multiplier(f0, |k2| ((cfg.b - k2) * s).exp());
        sup.push(f.max_abs());
        l1.push(f.data().iter().map(|x| x.abs()).sum::<f64>() * cv);
    }
    // composite Simpson
    let mut integral = l1[0] + l1[nt];
    for (j, v) in l1.iter().enumerate().take(nt).skip(1) {
        integral += if j % 2 == 1 { 4.0 } else { 2.0 } * v;
    }
    integral *= dt / 3.0;
    let c_n = moser_constant_cn(grid.m())?;
    let v = grid.volume();
    let growth = cfg.b.max(m / 4.0 * (1.0 + m / 2.0).powi(2));
    let sob = c_s.max(big_t * v.powf(-2.0 / m));
    let fixed = c_n * growth * growth * big_t.powf((m + 2.0) / 2.0) * sob.powf(m / 2.0) * integral;
    let mut suffix = 0.0f64;
    let mut max_ratio = 0.0f64;
    let mut worst_t = big_t;
    for j in (1..=nt).rev() {
        suffix = suffix.max(sup[j]);
        let t = j as f64 * dt;
        let rhs = t.powf(-(m + 2.0) / 4.0) * fixed;
        let ratio = if rhs > 0.0 { suffix / rhs } else { 0.0 };
        if ratio > max_ratio {
            max_ratio = ratio;
            worst_t = t;
        }
    }
    Ok(MoserReport {
        m: grid.m(),
        n: grid.n(),
        b: cfg.b,
        horizon: big_t,
        seed: cfg.seed,
        profile: cfg.profile,
        c_s,
        c_n,
        volume: v,
        space_time_l1: integral,
        max_ratio,
        worst_t,
        pass: max_ratio <= 1.0,
    })
}

fn resolve_cs(cfg: &MoserConfig, grid: Grid) -> Result<f64> {
    match cfg.c_s {
        Some(c) => Ok(c),
        None => Ok(cfg.cs_safety * sobolev_constant_estimate(grid)?),
    }
}

pub fn moser_check(cfg: &MoserConfig) -> Result<MoserReport> {
    cfg.validate()?;
    let grid = Grid::new(cfg.m, cfg.n, cfg.length)?;
    let c_s = resolve_cs(cfg, grid)?;
    moser_check_with(cfg, &initial_datum(cfg, grid)?, c_s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoserSuiteReport {
    pub runs: Vec<MoserReport>,
    pub max_ratio: f64,
    pub pass: bool,
}

/// Runs `seeds` consecutive seeds starting at `cfg.seed`, sharing one
/// Sobolev constant.
pub fn moser_suite(cfg: &MoserConfig, seeds: usize) -> Result<MoserSuiteReport> {
    cfg.validate()?;
    let grid = Grid::new(cfg.m, cfg.n, cfg.length)?;
    let c_s = resolve_cs(cfg, grid)?;
    let runs = (0..seeds as u64)
        .map(|i| {
            let c = MoserConfig {
                seed: cfg.seed + i,
                ..cfg.clone()
            };
            moser_check_with(&c, &initial_datum(&c, grid)?, c_s)
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = runs.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    Ok(MoserSuiteReport {
        pass: runs.iter().all(|r| r.pass),
        runs,
        max_ratio,
    })
}
