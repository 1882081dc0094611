//! Pointwise linear algebra of a single positive 3-form.
//!
//! A positive 3-form σ determines a metric and volume through
//! `B(u, v) = ((u⌟σ) ∧ (v⌟σ) ∧ σ) / Ω`, `dvol = 6^{-7/9} det(B)^{1/9} Ω` and
//! `g = B Ω / (6 dvol)`. Everything else here (type decompositions, the
//! Hitchin dual `σ ↦ *σ` and its derivative) is expressed through that metric.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exterior7::kernels::{interior_acc, wedge_acc, Mat7};
use crate::exterior7::{hodge_star, inner, wedge, wedge_adjoint, KForm, Metric7, Orientation};

/// Unnormalised `B(e_u, e_v)` coefficient matrix relative to `e^{1..7}`.
pub fn b_matrix(sigma: &[f64]) -> Mat7 {
    let mut rho = [[0.0; 21]; 7];
    for (u, r) in rho.iter_mut().enumerate() {
        let mut v = [0.0; 7];
        v[u] = 1.0;
        interior_acc(3, &v, sigma, r);
    }
    let mut omega = [[0.0; 21]; 7];
    for (v, o) in omega.iter_mut().enumerate() {
        wedge_acc(2, &rho[v], 3, sigma, 1.0, o);
    }
    let mut b = [[0.0; 7]; 7];
    for u in 0..7 {
        for v in u..7 {
            let mut top = [0.0; 1];
            wedge_acc(2, &rho[u], 5, &omega[v], 1.0, &mut top);
            b[u][v] = top[0];
            b[v][u] = top[0];
        }
    }
    b
}

/// Metric and volume form of σ relative to the reference volume form `Ω`.
pub fn metric_from_sigma(sigma: &KForm, refvol: &KForm) -> Result<(Metric7, KForm)> {
    if sigma.degree() != 3 {
        return Err(Error::DegreeMismatch {
            expected: 3,
            found: sigma.degree(),
        });
    }
    if refvol.degree() != 7 || refvol.coeffs()[0] == 0.0 {
        return Err(Error::InvalidArgument("reference volume must be a nonzero 7-form".into()));
    }
    let c = refvol.coeffs()[0];
    let (metric, dvol) = metric_coeffs(sigma.coeffs(), c)?;
    Ok((metric, KForm::volume() * dvol))
}

/// `(g, dvol coefficient)` for σ given by raw coefficients, with `Ω = c e^{1..7}`.
pub(crate) fn metric_coeffs(sigma: &[f64], c: f64) -> Result<(Metric7, f64)> {
    let mut b = b_matrix(sigma);
    for row in b.iter_mut() {
        for x in row.iter_mut() {
            *x /= c;
        }
    }
    let bm = Metric7::new(b).map_err(|e| match e {
        Error::NonFinite(s) => Error::NonFinite(s),
        _ => Error::NotPositive { site: None },
    })?;
    let det_b = bm.det();
    let scale = 6f64.powf(-2.0 / 9.0) * det_b.powf(-1.0 / 9.0);
    let metric = bm.scaled(scale);
    let dvol = 6f64.powf(-7.0 / 9.0) * det_b.powf(1.0 / 9.0) * c;
    Ok((metric, dvol))
}

pub fn is_positive(sigma: &KForm) -> bool {
    sigma.degree() == 3 && metric_coeffs(sigma.coeffs(), 1.0).is_ok()
}

/// Irreducible G2 summands of Λ² and Λ³.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Irrep {
    Two7,
    Two14,
    Three1,
    Three7,
    Three27,
}

impl Irrep {
    pub fn degree(self) -> usize {
        match self {
            Irrep::Two7 | Irrep::Two14 => 2,
            _ => 3,
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            Irrep::Two7 | Irrep::Three7 => 7,
            Irrep::Two14 => 14,
            Irrep::Three1 => 1,
            Irrep::Three27 => 27,
        }
    }
}

impl FromStr for Irrep {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2_7" => Ok(Irrep::Two7),
            "2_14" => Ok(Irrep::Two14),
            "3_1" => Ok(Irrep::Three1),
            "3_7" => Ok(Irrep::Three7),
            "3_27" => Ok(Irrep::Three27),
            _ => Err(Error::InvalidArgument(format!("unknown summand {s:?}"))),
        }
    }
}

/// `γ = f0 σ + *(f1 ∧ σ) + f3` with `f3 ∈ Λ³₂₇`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decomposition3 {
    pub f0: f64,
    pub f1: KForm,
    pub f3: KForm,
}

/// A positive 3-form together with its metric, volume and dual 4-form.
#[derive(Clone, Debug)]
pub struct G2Point {
    sigma: KForm,
    metric: Metric7,
    dvol: f64,
    psi: KForm,
}

impl G2Point {
    /// Uses `Ω = e^{1..7}`.
    pub fn new(sigma: KForm) -> Result<Self> {
        let (metric, dvol) = metric_from_sigma(&sigma, &KForm::volume())?;
        let psi = hodge_star(&sigma, &metric, Orientation::Positive);
        Ok(G2Point {
            sigma,
            metric,
            dvol: dvol.coeffs()[0],
            psi,
        })
    }

    pub fn standard() -> Self {
        G2Point::new(crate::exterior7::sigma_std()).expect("standard form is positive")
    }

    pub fn sigma(&self) -> &KForm {
        &self.sigma
    }

    pub fn metric(&self) -> &Metric7 {
        &self.metric
    }

    /// `*σ`.
    pub fn psi(&self) -> &KForm {
        &self.psi
    }

    /// Coefficient of `dvol` against `e^{1..7}`.
    pub fn dvol(&self) -> f64 {
        self.dvol
    }

    pub fn star(&self, a: &KForm) -> KForm {
        hodge_star(a, &self.metric, Orientation::Positive)
    }

    pub fn inner(&self, a: &KForm, b: &KForm) -> Result<f64> {
        inner(a, b, &self.metric)
    }

    /// `*(α ∧ σ)`: the isomorphism Λ¹ → Λ³₇ up to scale.
    pub fn seven_to_three(&self, alpha: &KForm) -> Result<KForm> {
        Ok(self.star(&wedge(alpha, &self.sigma)?))
    }

    pub fn decompose3(&self, gamma: &KForm) -> Result<Decomposition3> {
        check_degree(gamma, 3)?;
        let f0 = self.inner(gamma, &self.sigma)? / 7.0;
        let f1 = wedge_adjoint(&self.sigma, &self.star(gamma), &self.metric)? * -0.25;
        let f3 = *gamma - self.sigma * f0 - self.seven_to_three(&f1)?;
        Ok(Decomposition3 { f0, f1, f3 })
    }

    pub fn project(&self, label: Irrep, gamma: &KForm) -> Result<KForm> {
        check_degree(gamma, label.degree())?;
        match label {
            Irrep::Two7 => Ok((*gamma + self.star(&wedge(gamma, &self.sigma)?)) * (1.0 / 3.0)),
            Irrep::Two14 => {
                Ok(*gamma * (2.0 / 3.0) - self.star(&wedge(gamma, &self.sigma)?) * (1.0 / 3.0))
            }
            Irrep::Three1 => Ok(self.sigma * self.decompose3(gamma)?.f0),
            Irrep::Three7 => self.seven_to_three(&self.decompose3(gamma)?.f1),
            Irrep::Three27 => Ok(self.decompose3(gamma)?.f3),
        }
    }

    /// `ξ(γ) = γ + *(σ ∧ γ) = 3 π²₇ γ` on 2-forms.
    pub fn xi(&self, gamma: &KForm) -> Result<KForm> {
        check_degree(gamma, 2)?;
        Ok(*gamma + self.star(&wedge(&self.sigma, gamma)?))
    }

    /// Directional derivative of `σ ↦ *_σ σ` along θ:
    /// `*(4/3 f0 σ + *(f1 ∧ σ) − f3)`.
    pub fn d_hitchin_dual(&self, theta: &KForm) -> Result<KForm> {
        let d = self.decompose3(theta)?;
        let inner = self.sigma * (4.0 / 3.0 * d.f0) + self.seven_to_three(&d.f1)? - d.f3;
        Ok(self.star(&inner))
    }
}

/// `*_σ σ`, homogeneous of degree 4/3 in σ.
pub fn hitchin_dual(sigma: &KForm) -> Result<KForm> {
    Ok(G2Point::new(*sigma)?.psi)
}

/// Directional derivative of [`hitchin_dual`] at `p` along θ.
pub fn d_hitchin_dual(p: &G2Point, theta: &KForm) -> Result<KForm> {
    p.d_hitchin_dual(theta)
}

fn check_degree(f: &KForm, k: usize) -> Result<()> {
    if f.degree() != k {
        return Err(Error::DegreeMismatch {
            expected: k,
            found: f.degree(),
        });
    }
    Ok(())
}

impl Metric7 {
    /// `s g` for `s > 0`.
    pub fn scaled(&self, s: f64) -> Metric7 {
        assert!(s > 0.0);
        let mut g = *self.g();
        let mut inv = *self.inverse();
        let mut chol = *self.cholesky();
        let r = s.sqrt();
        for i in 0..7 {
            for j in 0..7 {
                g[i][j] *= s;
                inv[i][j] /= s;
                chol[i][j] *= r;
            }
        }
        Metric7::from_parts(g, inv, chol, self.det() * s.powi(7))
    }
}

/// Applies `Λ³(a)` to σ: the form whose coframe is `e^i ↦ Σ_j a[j][i] e^j`.
pub fn transform3(a: &Mat7, sigma: &KForm) -> KForm {
    let mut out = KForm::zero(3);
    crate::exterior7::kernels::transform_low(3, a, sigma.coeffs(), out.coeffs_mut());
    out
}
