//! Pointwise identities satisfied by closed G2-structures, evaluated on the
//! lattice as residual checks.
//!
//! Each identity is assembled as a sum `Σ c_j T_j` that vanishes for exact
//! data. Terms are split into the leading part and the lower-order torsion
//! terms, so the coefficients of the latter can also be fitted by least
//! squares when diagnosing a mismatch.

pub mod moser;
pub mod smoothing;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior7::{sigma_std, KForm};
use crate::flow::{gauge_operator, gauge_vector_field, phi_gauge, torsion_twist};
use crate::g2field::G2Field;
use crate::lattice::{
    codifferential, d, hodge_laplacian, interior_field, wedge_fields, Field, Grid, MetricField,
};
use crate::rng::SeededRng;

/// Names accepted by [`check_identity`].
pub const IDENTITY_NAMES: [&str; 8] = [
    "exterior_derivative_decomposition",
    "exterior_derivative_xi_form",
    "gauge_operator_expansion",
    "closed_laplacian_expansion",
    "d77_connection_form",
    "coderivative_decomposition",
    "one_form_laplacian_expansion",
    "gauged_flow_split",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentityConfig {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    /// C⁰ size of the closed perturbation of the background; 0 gives the
    /// flat torsion-free background.
    pub amplitude: f64,
    pub seed: u64,
    /// Wave-vector band of the background perturbation.
    pub band: usize,
    pub tolerance: f64,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        IdentityConfig {
            m: 3,
            n: 16,
            length: 2.0 * std::f64::consts::PI,
            amplitude: 1e-2,
            seed: 1,
            band: 1,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub m: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub amplitude: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// One term `c T` of an identity `Σ c_j T_j = 0`.
#[derive(Clone, Debug)]
pub struct Term {
    pub label: &'static str,
    pub coeff: f64,
    /// Lower-order torsion terms; these vanish on a torsion-free background.
    pub lower_order: bool,
    pub field: Field,
}

/// Test data shared by all identities.
pub struct IdentityData {
    pub background: G2Field,
    pub alpha: Field,
    pub theta: Field,
}

fn normalized(f: Field, size: f64) -> Field {
    let m = f.max_abs();
    if m == 0.0 {
        f
    } else {
        f.scale(size / m)
    }
}

impl IdentityData {
    pub fn new(cfg: &IdentityConfig) -> Result<Self> {
        let grid = Grid::new(cfg.m, cfg.n, cfg.length)?;
        let mut sigma = Field::constant(grid, &sigma_std());
        if cfg.amplitude > 0.0 {
            let beta = Field::random_trig(grid, 2, cfg.band, &mut SeededRng::with_stream(cfg.seed, 1));
            sigma.axpy(1.0, &normalized(d(&beta)?, cfg.amplitude))?;
        }
        let background = G2Field::new(sigma)?;
        let alpha = normalized(
            Field::random_trig(grid, 1, 2, &mut SeededRng::with_stream(cfg.seed, 2)),
            1.0,
        );
        let eta = Field::random_trig(grid, 2, cfg.band, &mut SeededRng::with_stream(cfg.seed, 3));
        let size = if cfg.amplitude > 0.0 { cfg.amplitude } else { 1e-2 };
        let theta = normalized(d(&eta)?, size);
        Ok(IdentityData {
            background,
            alpha,
            theta,
        })
    }
}

fn term(label: &'static str, coeff: f64, lower_order: bool, field: Field) -> Term {
    Term {
        label,
        coeff,
        lower_order,
        field,
    }
}

/// `Σ_i e^i ∧ *(α ∧ *∇_i σ)`.
fn connection_term(s: &G2Field, alpha: &Field, nabla: &[Field]) -> Result<Field> {
    let grid = *s.grid();
    let mut out = Field::zeros(grid, 3);
    for (i, ns) in nabla.iter().enumerate() {
        let mut ei = KForm::zero(1);
        ei.coeffs_mut()[i] = 1.0;
        let inner = s.star(&wedge_fields(alpha, &s.star(ns)?)?)?;
        out.axpy(1.0, &wedge_fields(&Field::constant(grid, &ei), &inner)?)?;
    }
    Ok(out)
}

/// Terms of the named identity.
pub fn identity_terms(name: &str, data: &IdentityData) -> Result<Vec<Term>> {
    let s = &data.background;
    let alpha = &data.alpha;
    let theta = &data.theta;
    let tau = s.torsion()?;
    let star_tau = s.star(&tau)?;
    match name {
        "exterior_derivative_decomposition" => {
            let d77 = s.d77(alpha)?;
            Ok(vec![
                term("dα", 1.0, false, d(alpha)?),
                term("*(d77α∧ψ)", -1.0 / 3.0, false, s.star(&wedge_fields(&d77, s.psi())?)?),
                term("d714α", -1.0, false, s.d714(alpha)?),
                term("*(ψ∧*(α∧*τ))", 1.0 / 3.0, true, torsion_twist(s, alpha, &star_tau)?),
            ])
        }
        "exterior_derivative_xi_form" => {
            let d77 = s.d77(alpha)?;
            let da = d(alpha)?;
            Ok(vec![
                term("dα", 1.0, false, da.clone()),
                term("*(d77α∧ψ)", -1.0, false, s.star(&wedge_fields(&d77, s.psi())?)?),
                term("*(dα∧σ)", 1.0, false, s.star(&wedge_fields(&da, s.sigma())?)?),
                term("ξ(*(ψ∧*(α∧*τ)))", 1.0 / 3.0, true, s.xi(&torsion_twist(s, alpha, &star_tau)?)?),
            ])
        }
        "gauge_operator_expansion" => {
            let dec = s.decompose3(theta)?;
            let mut lhs = gauge_operator(s, theta)?;
            lhs.axpy(1.0, &s.star(&d(&s.star(theta)?)?)?)?;
            let df0 = d(&dec.f0)?;
            let d77f1 = s.d77(&dec.f1)?;
            Ok(vec![
                term("(H+*d*)θ", 1.0, false, lhs),
                term("*(df0∧ψ)", -7.0 / 3.0, false, s.star(&wedge_fields(&df0, s.psi())?)?),
                term("*(d77f1∧ψ)", -2.0, false, s.star(&wedge_fields(&d77f1, s.psi())?)?),
                term("df1", 2.0, false, d(&dec.f1)?),
                term("ξ(*(ψ∧*(f1∧*τ)))", 2.0 / 3.0, true, s.xi(&torsion_twist(s, &dec.f1, &star_tau)?)?),
                term("f0τ", 7.0 / 3.0, true, tau.mul_scalar_field(&dec.f0)?),
            ])
        }
        "closed_laplacian_expansion" => {
            let dec = s.decompose3(theta)?;
            let df0 = d(&dec.f0)?;
            let d77f1 = s.d77(&dec.f1)?;
            Ok(vec![
                term("Δθ", 1.0, false, hodge_laplacian(theta, s.metric())?),
                term("dHθ", -1.0, false, d(&gauge_operator(s, theta)?)?),
                term("d*(df0∧ψ)", 7.0 / 3.0, false, d(&s.star(&wedge_fields(&df0, s.psi())?)?)?),
                term("d*(d77f1∧ψ)", 2.0, false, d(&s.star(&wedge_fields(&d77f1, s.psi())?)?)?),
                term("d(f0τ)", -7.0 / 3.0, true, d(&tau.mul_scalar_field(&dec.f0)?)?),
                term(
                    "dξ(*(ψ∧*(f1∧*τ)))",
                    -2.0 / 3.0,
                    true,
                    d(&s.xi(&torsion_twist(s, &dec.f1, &star_tau)?)?)?,
                ),
            ])
        }
        "d77_connection_form" => {
            let nabla = s.nabla_sigma()?;
            let a_psi = wedge_fields(alpha, s.psi())?;
            let lead = s.contract_sigma(&s.star(&d(&s.star(&a_psi)?)?)?)?;
            let conn = s.contract_sigma(&s.star(&connection_term(s, alpha, &nabla)?)?)?;
            Ok(vec![
                term("d77α", 1.0, false, s.d77(alpha)?),
                term("σ⌐*d*(α∧ψ)", -0.5, false, lead),
                term("σ⌐*(e^i∧*(α∧*∇σ))", 0.5, true, conn),
                term("*(α∧*τ)", -1.0, true, s.star(&wedge_fields(alpha, &star_tau)?)?),
            ])
        }
        "coderivative_decomposition" => {
            let nabla = s.nabla_sigma()?;
            let a_psi = wedge_fields(alpha, s.psi())?;
            let lhs = d(&s.star(&a_psi)?)?;
            let d71 = s.d71(alpha)?;
            let d77 = s.d77(alpha)?;
            let pairing = a_psi.map_sites(0, {
                let mut t = [0.0; 35];
                let mut up = [0.0; 35];
                move |st, a, out| {
                    star_tau.gather(st, &mut t[..21]);
                    s.metric().get(st).raise_into(5, a, &mut up[..21]);
                    out[0] = up[..21].iter().zip(&t[..21]).map(|(x, y)| x * y).sum();
                }
            });
            let conn = s.contract_sigma(&s.star(&connection_term(s, alpha, &nabla)?)?)?;
            let twist = s.star(&wedge_fields(alpha, &s.star(&tau)?)?)?;
            Ok(vec![
                term("d*(α∧ψ)", 1.0, false, lhs),
                term("(d71α)σ", 3.0 / 7.0, false, s.sigma().mul_scalar_field(&d71)?),
                term("*(d77α∧σ)", 0.5, false, s.seven_to_three(&d77)?),
                term("d727α", -1.0, false, s.d727(alpha)?),
                term("<α∧ψ,*τ>σ", -1.0 / 7.0, true, s.sigma().mul_scalar_field(&pairing)?),
                term("*((σ⌐*(e^i∧*(α∧*∇σ)))∧σ)", 0.25, true, s.seven_to_three(&conn)?),
                term("*(*(α∧*τ)∧σ)", -0.5, true, s.seven_to_three(&twist)?),
            ])
        }
        "one_form_laplacian_expansion" => {
            let d77 = s.d77(alpha)?;
            let twist = s.xi(&torsion_twist(s, alpha, &star_tau)?)?;
            Ok(vec![
                term("Δα", 1.0, false, hodge_laplacian(alpha, s.metric())?),
                term("d d71α", -1.0, false, d(&s.d71(alpha)?)?),
                term("d77 d77α", -1.0, false, s.d77(&d77)?),
                term("*d*ξ(*(ψ∧*(α∧*τ)))", 1.0 / 3.0, true, s.star(&d(&s.star(&twist)?)?)?),
            ])
        }
        "gauged_flow_split" => gauged_flow_terms(s, theta),
        _ => Err(Error::InvalidArgument(format!("unknown identity {name:?}"))),
    }
}

fn gauged_flow_terms(s0: &G2Field, theta: &Field) -> Result<Vec<Term>> {
    let s = G2Field::new(s0.sigma().add(theta)?)?;
    let x = gauge_vector_field(s0, theta)?;
    let mut flow = d(&s.torsion()?)?;
    flow.axpy(1.0, &d(&interior_field(&x, s.sigma())?)?)?;
    let phi = phi_gauge(s0, &s)?;
    Ok(vec![
        term("Δσσ+d(X⌟σ)", 1.0, false, flow),
        term("Δ0θ", 1.0, false, hodge_laplacian(theta, s0.metric())?),
        term("dΦ_lead", 1.0, false, d(&phi.lead)?),
        term("dξ0(*0(ψ0∧*0(f1∧*0τ0)))", -2.0 / 3.0, true, d(&phi.xi_term)?),
        term("d(f0τ0)", -7.0 / 3.0, true, d(&phi.f0_tau)?),
    ])
}

/// `max |Σ c_j T_j| / max_j max |c_j T_j|`.
pub fn relative_residual(terms: &[Term]) -> Result<f64> {
    let grid = *terms[0].field.grid();
    let mut sum = Field::zeros(grid, terms[0].field.degree());
    let mut scale = 0.0f64;
    for t in terms {
        sum.axpy(t.coeff, &t.field)?;
        scale = scale.max(t.coeff.abs() * t.field.max_abs());
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(sum.max_abs() / scale)
}

/// Least-squares coefficients of the lower-order terms with the leading
/// coefficients held fixed. Returns `(label, stated, fitted)`.
pub fn fit_lower_order(terms: &[Term]) -> Result<Vec<(&'static str, f64, f64)>> {
    let grid = *terms[0].field.grid();
    let mut rhs = Field::zeros(grid, terms[0].field.degree());
    let lower: Vec<&Term> = terms.iter().filter(|t| t.lower_order).collect();
    for t in terms.iter().filter(|t| !t.lower_order) {
        rhs.axpy(-t.coeff, &t.field)?;
    }
    let k = lower.len();
    let dot = |a: &Field, b: &Field| a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum::<f64>();
    let a = nalgebra::DMatrix::from_fn(k, k, |i, j| dot(&lower[i].field, &lower[j].field));
    let b = nalgebra::DVector::from_fn(k, |i, _| dot(&lower[i].field, &rhs));
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(lower
        .iter()
        .enumerate()
        .map(|(i, t)| (t.label, t.coeff, sol[i]))
        .collect())
}

/// Evaluates a named identity and compares its residual to `cfg.tolerance`.
pub fn check_identity(name: &str, cfg: &IdentityConfig) -> Result<IdentityReport> {
    if !IDENTITY_NAMES.contains(&name) {
        return Err(Error::InvalidArgument(format!("unknown identity {name:?}")));
    }
    check_identity_with(name, cfg, &IdentityData::new(cfg)?)
}

/// All identities on one shared set of test data.
pub fn run_battery(cfg: &IdentityConfig) -> Result<Vec<IdentityReport>> {
    let data = IdentityData::new(cfg)?;
    IDENTITY_NAMES
        .iter()
        .map(|name| check_identity_with(name, cfg, &data))
        .collect()
}

pub fn check_identity_with(name: &str, cfg: &IdentityConfig, data: &IdentityData) -> Result<IdentityReport> {
    let terms = identity_terms(name, data)?;
    let residual = relative_residual(&terms)?;
    Ok(IdentityReport {
        name: name.to_string(),
        m: cfg.m,
        n: cfg.n,
        length: cfg.length,
        amplitude: cfg.amplitude,
        residual,
        tolerance: cfg.tolerance,
        pass: residual <= cfg.tolerance,
    })
}

/// Labels accepted by [`adapted_differential`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptedLabel {
    D77,
    D714,
    D71,
    D17,
    D727,
    D1427,
    D147,
}

impl AdaptedLabel {
    pub const ALL: [AdaptedLabel; 7] = [
        AdaptedLabel::D77,
        AdaptedLabel::D714,
        AdaptedLabel::D71,
        AdaptedLabel::D17,
        AdaptedLabel::D727,
        AdaptedLabel::D1427,
        AdaptedLabel::D147,
    ];

    /// Degree of the input field.
    pub fn input_degree(self) -> usize {
        match self {
            AdaptedLabel::D17 => 0,
            AdaptedLabel::D77 | AdaptedLabel::D714 | AdaptedLabel::D71 | AdaptedLabel::D727 => 1,
            AdaptedLabel::D1427 | AdaptedLabel::D147 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AdaptedLabel::D77 => "d77",
            AdaptedLabel::D714 => "d714",
            AdaptedLabel::D71 => "d71",
            AdaptedLabel::D17 => "d17",
            AdaptedLabel::D727 => "d727",
            AdaptedLabel::D1427 => "d1427",
            AdaptedLabel::D147 => "d147",
        }
    }
}

impl FromStr for AdaptedLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AdaptedLabel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown adapted differential {s:?}")))
    }
}

/// Evaluates one of the adapted differentials relative to `background`.
/// `d147` is the discrete adjoint of `d714` for the flat pairing
/// (see [`d147_flat_adjoint`]).
pub fn adapted_differential(label: AdaptedLabel, field: &Field, background: &G2Field) -> Result<Field> {
    if field.degree() != label.input_degree() {
        return Err(Error::DegreeMismatch {
            expected: label.input_degree(),
            found: field.degree(),
        });
    }
    match label {
        AdaptedLabel::D77 => background.d77(field),
        AdaptedLabel::D714 => background.d714(field),
        AdaptedLabel::D71 => background.d71(field),
        AdaptedLabel::D17 => d(field),
        AdaptedLabel::D727 => background.d727(field),
        AdaptedLabel::D1427 => background.d1427(field),
        AdaptedLabel::D147 => d147_flat_adjoint(background, field),
    }
}

/// Transpose of `α ↦ π²₁₄ dα` for the flat coefficient pairing: the flat
/// transpose of the g-orthogonal projection is `Λ²g⁻¹ π²₁₄ Λ²g`, and that of
/// `d` is the flat codifferential.
pub fn d147_flat_adjoint(s: &G2Field, beta: &Field) -> Result<Field> {
    let metric = s.metric();
    let lowered = beta.map_sites(2, |site, a, out| metric.get(site).lower_into(2, a, out));
    let projected = s.project2_14(&lowered)?;
    let raised = projected.map_sites(2, |site, a, out| metric.get(site).raise_into(2, a, out));
    codifferential(&raised, &MetricField::flat(*s.grid()))
}

#[cfg(test)]
mod tests;
