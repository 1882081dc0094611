//! Laplacian flow and gauged Laplacian flow of closed G2-structures on the
//! periodic lattice, with diagnostics.
//!
//! The plain flow is `∂σ/∂t = Δ_σ σ = dτ_σ`. The gauged flow adds
//! `d(X(σ - σ0) ⌟ σ)`, where `X` is built from the decomposition of
//! `θ = σ - σ0` relative to the fixed reference `σ0`. Both right-hand sides
//! are exact, so closedness and the cohomology class are preserved
//! structurally.

pub mod gauge;
pub mod linear;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior7::{sigma_std, KForm};
use crate::g2field::G2Field;
use crate::lattice::{
    c0_norm, d, fourier_multiplier, interior_field, l2_norm, spectrum_lambda0, wedge_fields,
    zero_mode, DerivativeScheme, Field, Grid,
};
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    Plain,
    #[default]
    Gauged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
    Imex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub scheme: DerivativeScheme,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            m: 3,
            n: 16,
            length: 2.0 * std::f64::consts::PI,
            scheme: DerivativeScheme::Spectral,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Ok(Grid::new(self.m, self.n, self.length)?.with_scheme(self.scheme))
    }
}

/// Closed perturbation `ε dβ / |dβ|_{C0}` with `β` a random 2-form whose
/// wave-vectors lie in `[-band, band]^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Perturbation {
    pub seed: u64,
    pub amplitude: f64,
    pub band: usize,
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation {
            seed: 1,
            amplitude: 1e-3,
            band: 1,
        }
    }
}

impl Perturbation {
    pub fn exact_form(&self, grid: Grid) -> Result<Field> {
        let beta = Field::random_trig(grid, 2, self.band, &mut SeededRng::with_stream(self.seed, 0));
        let db = d(&beta)?;
        let m = db.max_abs();
        Ok(if m > 0.0 { db.scale(self.amplitude / m) } else { db })
    }

    /// `σ_std + ε dβ`.
    pub fn apply(&self, grid: Grid) -> Result<Field> {
        let mut s = Field::constant(grid, &sigma_std());
        s.axpy(1.0, &self.exact_form(grid)?)?;
        Ok(s)
    }
}

pub fn torsion(sigma: &Field) -> Result<Field> {
    G2Field::new(sigma.clone())?.torsion()
}

/// `τ^7 / τ` in L²: the Λ²₇ part of the torsion, which vanishes for closed σ.
pub fn torsion_seven_fraction(s: &G2Field) -> Result<f64> {
    let tau = s.torsion()?;
    let n = l2_norm(&tau, s.metric())?;
    if n == 0.0 {
        return Ok(0.0);
    }
    Ok(l2_norm(&s.project2_7(&tau)?, s.metric())? / n)
}

/// Least-squares factor `c` with `∇_i σ ≈ c (e_i ⌟ τ)♯ ⌟ *σ` for all `i`
/// (the contraction of the second slot of τ with the first slot of `*σ`),
/// and the relative residual. A torsion-free field returns `(0, 0)`.
pub fn total_torsion_check(sigma: &Field) -> Result<(f64, f64)> {
    let s = G2Field::new(sigma.clone())?;
    let nabla = s.nabla_sigma()?;
    let tau = s.torsion()?;
    let grid = *s.grid();
    let mut contracted = Vec::with_capacity(7);
    for i in 0..7 {
        let mut ei = KForm::zero(1);
        ei.coeffs_mut()[i] = 1.0;
        let row = interior_field(&Field::constant(grid, &ei), &tau)?;
        contracted.push(interior_field(&s.sharp(&row)?, s.psi())?);
    }
    let dot = |a: &Field, b: &Field| a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum::<f64>();
    let num: f64 = nabla.iter().zip(&contracted).map(|(a, b)| dot(a, b)).sum();
    let den: f64 = contracted.iter().map(|b| dot(b, b)).sum();
    let total: f64 = nabla.iter().map(|a| dot(a, a)).sum();
    if den == 0.0 || total == 0.0 {
        return Ok((0.0, 0.0));
    }
    let c = num / den;
    let res: f64 = nabla
        .iter()
        .zip(&contracted)
        .map(|(a, b)| a.data().iter().zip(b.data()).map(|(x, y)| (x - c * y).powi(2)).sum::<f64>())
        .sum();
    Ok((c, (res / total).sqrt()))
}

/// `H(θ) = *d*(4/3 f0 σ + *(f1 ∧ σ) - f3)` relative to the background `s`.
pub fn gauge_operator(s: &G2Field, theta: &Field) -> Result<Field> {
    let dec = s.decompose3(theta)?;
    let mut inner = s.sigma().mul_scalar_field(&dec.f0)?.scale(4.0 / 3.0);
    inner.axpy(1.0, &s.seven_to_three(&dec.f1)?)?;
    inner.axpy(-1.0, &dec.f3)?;
    s.star(&d(&s.star(&inner)?)?)
}

/// Gauge vector field `X = (7/3 df0 + 2 d77 f1)♯` of θ relative to `s`,
/// returned as the field of its vector components.
pub fn gauge_vector_field(s: &G2Field, theta: &Field) -> Result<Field> {
    let f0 = s.f0(theta)?;
    let f1 = s.f1(theta)?;
    let mut w = d(&f0)?.scale(7.0 / 3.0);
    w.axpy(2.0, &s.d77(&f1)?)?;
    s.sharp(&w)
}

/// The pieces of the 2-form `Φ` in `Δ_σ σ + d(X⌟σ) = -Δ_{σ0} θ - dΦ`.
#[derive(Clone, Debug)]
pub struct PhiParts {
    /// `-τ0 + (* - *0) dQ + (*0 - *) *0 τ0 + *0 dq - X⌟θ` with
    /// `Q = *σ σ - *0 σ0` and `q = Q - D(*σ σ)|_{σ0} θ`.
    pub lead: Field,
    /// `ξ0(*0(ψ0 ∧ *0(f1 ∧ *0 τ0)))`.
    pub xi_term: Field,
    /// `f0 τ0`.
    pub f0_tau: Field,
}

impl PhiParts {
    pub fn total(&self) -> Result<Field> {
        let mut out = self.lead.clone();
        out.axpy(-2.0 / 3.0, &self.xi_term)?;
        out.axpy(-7.0 / 3.0, &self.f0_tau)?;
        Ok(out)
    }
}

pub fn phi_gauge(background: &G2Field, s: &G2Field) -> Result<PhiParts> {
    let theta = s.sigma().sub(background.sigma())?;
    let tau0 = background.torsion()?;
    let dec = background.decompose3(&theta)?;
    let x = gauge_vector_field(background, &theta)?;
    let q_big = s.psi().sub(background.psi())?;
    let q_small = q_big.sub(&background.d_hitchin_dual(&theta)?)?;
    let dq_big = d(&q_big)?;
    let star0_tau0 = background.star(&tau0)?;
    let mut lead = tau0.scale(-1.0);
    lead.axpy(1.0, &s.star(&dq_big)?.sub(&background.star(&dq_big)?)?)?;
    lead.axpy(1.0, &background.star(&star0_tau0)?.sub(&s.star(&star0_tau0)?)?)?;
    lead.axpy(1.0, &background.star(&d(&q_small)?)?)?;
    lead.axpy(-1.0, &interior_field(&x, &theta)?)?;
    let twist = torsion_twist(background, &dec.f1, &star0_tau0)?;
    Ok(PhiParts {
        lead,
        xi_term: background.xi(&twist)?,
        f0_tau: tau0.mul_scalar_field(&dec.f0)?,
    })
}

/// `*(ψ ∧ *(a ∧ *τ))` for a 1-form `a`, given `*τ`.
pub(crate) fn torsion_twist(s: &G2Field, a: &Field, star_tau: &Field) -> Result<Field> {
    let inner = s.star(&wedge_fields(a, star_tau)?)?;
    s.star(&wedge_fields(s.psi(), &inner)?)
}

/// Right-hand side of the chosen flow at `s`.
pub fn flow_rhs(kind: FlowKind, s: &G2Field, background: &G2Field) -> Result<Field> {
    let mut two = s.torsion()?;
    if kind == FlowKind::Gauged {
        let theta = s.sigma().sub(background.sigma())?;
        let x = gauge_vector_field(background, &theta)?;
        two.axpy(1.0, &interior_field(&x, s.sigma())?)?;
    }
    d(&two)
}

pub fn laplacian_flow_rhs(s: &G2Field) -> Result<Field> {
    d(&s.torsion()?)
}

pub fn gauged_flow_rhs(s: &G2Field, background: &G2Field) -> Result<Field> {
    flow_rhs(FlowKind::Gauged, s, background)
}

/// Flat-background Hodge Laplacian through its Fourier symbol.
pub fn flat_laplacian(f: &Field) -> Field {
    fourier_multiplier(f, |k2| k2)
}

fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0
    } else {
        z.exp_m1() / z
    }
}

fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0 + z * z * z * z / 720.0
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// One exponential time-differencing step (second-order Runge–Kutta
/// variant) of `u' = -Δ_flat u + N(u)`.
pub fn etd2_step(u: &Field, dt: f64, mut nonlinear: impl FnMut(&Field) -> Result<Field>) -> Result<Field> {
    let n0 = nonlinear(u)?;
    let mut a = fourier_multiplier(u, |k2| (-k2 * dt).exp());
    a.axpy(1.0, &fourier_multiplier(&n0, |k2| dt * phi1(-k2 * dt)))?;
    let na = nonlinear(&a)?;
    let diff = na.sub(&n0)?;
    a.axpy(1.0, &fourier_multiplier(&diff, |k2| dt * phi2(-k2 * dt)))?;
    Ok(a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepParams {
    pub kind: FlowKind,
    pub integrator: Integrator,
    /// `rk4`: `dt = cfl h² / max λ(g⁻¹)`; `imex`: `dt = cfl h`.
    pub cfl: f64,
    /// Fixed step overriding the CFL rule.
    pub dt: Option<f64>,
}

impl Default for StepParams {
    fn default() -> Self {
        StepParams {
            kind: FlowKind::Gauged,
            integrator: Integrator::Rk4,
            cfl: 0.1,
            dt: None,
        }
    }
}

/// Current structure, reference structure and time.
#[derive(Clone, Debug)]
pub struct FlowState {
    current: G2Field,
    background: G2Field,
    initial_mean: KForm,
    pub t: f64,
}

impl FlowState {
    pub fn new(sigma: Field, sigma0: Field) -> Result<Self> {
        let initial_mean = zero_mode(&sigma);
        Ok(FlowState {
            current: G2Field::new(sigma)?,
            background: G2Field::new(sigma0)?,
            initial_mean,
            t: 0.0,
        })
    }

    pub fn sigma(&self) -> &Field {
        self.current.sigma()
    }

    pub fn current(&self) -> &G2Field {
        &self.current
    }

    pub fn background(&self) -> &G2Field {
        &self.background
    }

    pub fn theta(&self) -> Result<Field> {
        self.sigma().sub(self.background.sigma())
    }

    pub fn grid(&self) -> &Grid {
        self.current.grid()
    }

    pub fn zero_mode_drift(&self) -> f64 {
        let z = zero_mode(self.sigma());
        z.coeffs()
            .iter()
            .zip(self.initial_mean.coeffs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn accept(&mut self, sigma: Field, dt: f64) -> Result<()> {
        if !sigma.is_finite() {
            return Err(Error::NonFinite(format!("σ at t = {}", self.t + dt)));
        }
        self.current = G2Field::new(sigma)?;
        self.t += dt;
        Ok(())
    }
}

/// Step size from the CFL rule, or the fixed step if one is configured.
pub fn time_step(params: &StepParams, state: &FlowState) -> Result<f64> {
    let h = state.grid().h();
    let dt = match (params.dt, params.integrator) {
        (Some(dt), _) => dt,
        (None, Integrator::Imex) => params.cfl * h,
        (None, Integrator::Rk4) => {
            let mut lmax = 0.0f64;
            for g in state.current.metric().metrics() {
                let inv = nalgebra::SMatrix::<f64, 7, 7>::from_fn(|i, j| g.inverse()[i][j]);
                let ev = inv.symmetric_eigenvalues();
                lmax = lmax.max(ev.max());
            }
            params.cfl * h * h / lmax
        }
    };
    if !(dt > 1e-12) {
        return Err(Error::DtUnderflow(state.t));
    }
    Ok(dt)
}

/// Advances `state` by `dt`.
pub fn step(state: &mut FlowState, params: &StepParams, dt: f64) -> Result<()> {
    let kind = params.kind;
    let new_sigma = match params.integrator {
        Integrator::Rk4 => {
            let bg = &state.background;
            let s0 = state.current.sigma();
            let k1 = flow_rhs(kind, &state.current, bg)?;
            let stage = |k: &Field, c: f64| -> Result<G2Field> {
                let mut x = s0.clone();
                x.axpy(c, k)?;
                G2Field::new(x)
            };
            let k2 = flow_rhs(kind, &stage(&k1, 0.5 * dt)?, bg)?;
            let k3 = flow_rhs(kind, &stage(&k2, 0.5 * dt)?, bg)?;
            let k4 = flow_rhs(kind, &stage(&k3, dt)?, bg)?;
            let mut out = s0.clone();
            out.axpy(dt / 6.0, &k1)?;
            out.axpy(dt / 3.0, &k2)?;
            out.axpy(dt / 3.0, &k3)?;
            out.axpy(dt / 6.0, &k4)?;
            out
        }
        Integrator::Imex => {
            if kind != FlowKind::Gauged {
                return Err(Error::InvalidArgument(
                    "the imex integrator is only available for the gauged flow".into(),
                ));
            }
            if state.grid().scheme() != DerivativeScheme::Spectral {
                return Err(Error::InvalidArgument("imex requires the spectral scheme".into()));
            }
            let bg = state.background.clone();
            let theta = state.theta()?;
            let mut first = Some(state.current.clone());
            let theta_new = etd2_step(&theta, dt, |th| {
                let s = match first.take() {
                    Some(s) => s,
                    None => G2Field::new(bg.sigma().add(th)?)?,
                };
                let mut r = flow_rhs(kind, &s, &bg)?;
                r.axpy(1.0, &flat_laplacian(th))?;
                Ok(r)
            })?;
            bg.sigma().add(&theta_new)?
        }
    };
    state.accept(new_sigma, dt)
}

pub const CSV_HEADER: &str =
    "t,torsion_l2,theta_l2,theta_c0,volume,closedness_residual,zero_mode_drift,fitted_rate";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub torsion_l2: f64,
    pub theta_l2: f64,
    pub theta_c0: f64,
    pub volume: f64,
    pub closedness_residual: f64,
    pub zero_mode_drift: f64,
    pub fitted_rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub records: Vec<Record>,
}

/// Decay rate of `∫|θ|²`: minus the least-squares slope of `ln θ_l2²`
/// over the final half of the samples, with the RMS residual of the fit.
pub fn fit_rate(records: &[Record]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = records[records.len() / 2..]
        .iter()
        .filter(|r| r.theta_l2 > 0.0)
        .map(|r| (r.t, 2.0 * r.theta_l2.ln()))
        .collect();
    if pts.len() < 2 {
        return (0.0, 0.0);
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if stt == 0.0 {
        return (0.0, 0.0);
    }
    let slope = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum::<f64>() / stt;
    let res = (pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mt)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (-slope, res)
}

impl DiagnosticsSeries {
    pub fn push(&mut self, mut r: Record) {
        self.records.push(r.clone());
        r.fitted_rate = fit_rate(&self.records).0;
        *self.records.last_mut().expect("just pushed") = r;
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.t,
                r.torsion_l2,
                r.theta_l2,
                r.theta_c0,
                r.volume,
                r.closedness_residual,
                r.zero_mode_drift,
                r.fitted_rate
            )?;
        }
        Ok(())
    }
}

pub fn record(state: &FlowState) -> Result<Record> {
    let s = &state.current;
    let theta = state.theta()?;
    let bg = state.background.metric();
    Ok(Record {
        t: state.t,
        torsion_l2: l2_norm(&s.torsion()?, s.metric())?,
        theta_l2: l2_norm(&theta, bg)?,
        theta_c0: c0_norm(&theta, bg)?,
        volume: s.metric().volume(),
        closedness_residual: d(s.sigma())?.max_abs(),
        zero_mode_drift: state.zero_mode_drift(),
        fitted_rate: 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub grid: GridSpec,
    pub perturbation: Perturbation,
    pub step: StepParams,
    pub t_end: f64,
    /// Stop once `torsion_l2` drops below this value; 0 disables.
    pub floor: f64,
    /// Time between diagnostic records.
    pub record_interval: f64,
    /// Stop after this many steps even if `t_end` is not reached.
    pub max_steps: Option<usize>,
    /// Samples at `t >= bound_start` are checked against
    /// `∫|θ(t)|² <= e^{-λ0 t} ∫|θ0|²`.
    pub bound_start: f64,
    /// Allowed per-step decrease of the volume in the monotonicity check.
    pub volume_tolerance: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            grid: GridSpec::default(),
            perturbation: Perturbation::default(),
            step: StepParams::default(),
            t_end: 6.0,
            floor: 0.0,
            record_interval: 0.1,
            max_steps: None,
            bound_start: 0.5,
            volume_tolerance: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub fitted_rate: f64,
    pub fit_residual: f64,
    pub lambda0: f64,
    /// `∫|θ(t)|² <= e^{-λ0 t} ∫|θ0|²` at every record with `t >= bound_start`.
    pub paper_bound_satisfied: bool,
    pub initial_torsion_l2: f64,
    pub final_torsion_l2: f64,
    pub zero_mode_drift: f64,
    pub volume_monotone: bool,
    pub max_closedness_residual: f64,
    pub steps: usize,
    pub dt: f64,
    pub t_final: f64,
    pub failure: Option<String>,
}

#[derive(Clone, Debug)]
pub struct FlowRun {
    pub series: DiagnosticsSeries,
    pub state: FlowState,
    pub summary: FlowSummary,
    /// Set when the run stopped early on positivity loss or a non-finite value.
    pub failure: Option<Error>,
}

pub fn run_flow(cfg: &FlowConfig) -> Result<FlowRun> {
    let grid = cfg.grid.build()?;
    let sigma0 = Field::constant(grid, &sigma_std());
    let sigma1 = cfg.perturbation.apply(grid)?;
    let state = FlowState::new(sigma1, sigma0)?;
    run_from(state, cfg)
}

/// Integrates from an existing state until `cfg.t_end`.
pub fn run_from(mut state: FlowState, cfg: &FlowConfig) -> Result<FlowRun> {
    if !(cfg.t_end >= 0.0) || !(cfg.record_interval > 0.0) {
        return Err(Error::InvalidArgument("t_end and record_interval must be non-negative".into()));
    }
    let mut series = DiagnosticsSeries::default();
    let first = record(&state)?;
    let initial_torsion = first.torsion_l2;
    let initial_theta2 = first.theta_l2.powi(2);
    let mut max_closed = first.closedness_residual;
    let mut volume_monotone = true;
    let mut last_volume = first.volume;
    let mut steps = 0usize;
    let mut failure = None;
    let dt = if cfg.t_end > 0.0 { time_step(&cfg.step, &state)? } else { 0.0 };
    if cfg.t_end > 0.0 {
        series.push(first);
    }
    let mut next_record = cfg.record_interval;
    while state.t < cfg.t_end - 1e-12 && cfg.max_steps.is_none_or(|m| steps < m) {
        let h = dt.min(cfg.t_end - state.t);
        if let Err(e) = step(&mut state, &cfg.step, h) {
            failure = Some(e);
            break;
        }
        steps += 1;
        let vol = state.current.metric().volume();
        if vol < last_volume - cfg.volume_tolerance * last_volume.abs() {
            volume_monotone = false;
        }
        last_volume = vol;
        let done = state.t >= cfg.t_end - 1e-12 || cfg.max_steps.is_some_and(|m| steps >= m);
        if state.t >= next_record - 1e-12 || done {
            let r = record(&state)?;
            max_closed = max_closed.max(r.closedness_residual);
            let below = cfg.floor > 0.0 && r.torsion_l2 < cfg.floor;
            series.push(r);
            while next_record <= state.t + 1e-12 {
                next_record += cfg.record_interval;
            }
            if below {
                break;
            }
        }
    }
    let lambda0 = spectrum_lambda0(state.grid());
    let (fitted_rate, fit_residual) = if series.records.len() >= 2 {
        fit_rate(&series.records)
    } else {
        (0.0, 0.0)
    };
    let paper_bound_satisfied = series
        .records
        .iter()
        .filter(|r| r.t >= cfg.bound_start)
        .all(|r| r.theta_l2.powi(2) <= (-lambda0 * r.t).exp() * initial_theta2);
    let final_torsion = series.records.last().map_or(initial_torsion, |r| r.torsion_l2);
    let summary = FlowSummary {
        fitted_rate,
        fit_residual,
        lambda0,
        paper_bound_satisfied,
        initial_torsion_l2: initial_torsion,
        final_torsion_l2: final_torsion,
        zero_mode_drift: series.records.iter().map(|r| r.zero_mode_drift).fold(0.0, f64::max),
        volume_monotone,
        max_closedness_residual: max_closed,
        steps,
        dt,
        t_final: state.t,
        failure: failure.as_ref().map(|e: &Error| e.to_string()),
    };
    Ok(FlowRun {
        series,
        state,
        summary,
        failure,
    })
}
