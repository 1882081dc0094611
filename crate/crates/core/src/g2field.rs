//! A positive 3-form field with its metric, dual 4-form and the first-order
//! operators built from them.

use crate::error::{Error, Result};
use crate::exterior7::kernels::{interior_acc, star_euclid, wedge_acc, BINOM7};
use crate::exterior7::wedge_adjoint_acc;
use crate::lattice::{
    codifferential, d, partial, star, wedge_fields, Field, Grid, MetricField,
};

#[derive(Clone, Debug)]
pub struct G2Field {
    sigma: Field,
    metric: MetricField,
    psi: Field,
    sigma_up: Field,
}

/// `θ = f0 σ + *(f1 ∧ σ) + f3` on every site.
#[derive(Clone, Debug)]
pub struct FieldDecomposition {
    pub f0: Field,
    pub f1: Field,
    pub f3: Field,
}

impl G2Field {
    pub fn new(sigma: Field) -> Result<Self> {
        let metric = MetricField::from_sigma(&sigma)?;
        let psi = star(&sigma, &metric)?;
        let sigma_up = sigma.map_sites(3, |s, a, out| metric.get(s).raise_into(3, a, out));
        Ok(G2Field {
            sigma,
            metric,
            psi,
            sigma_up,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.sigma.grid()
    }

    pub fn sigma(&self) -> &Field {
        &self.sigma
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    /// `*σ`.
    pub fn psi(&self) -> &Field {
        &self.psi
    }

    pub fn star(&self, f: &Field) -> Result<Field> {
        star(f, &self.metric)
    }

    pub fn codifferential(&self, f: &Field) -> Result<Field> {
        codifferential(f, &self.metric)
    }

    /// `τ = -*d*σ`.
    pub fn torsion(&self) -> Result<Field> {
        Ok(self.star(&d(&self.psi)?)?.scale(-1.0))
    }

    fn check(&self, f: &Field, k: usize) -> Result<()> {
        self.sigma.check_same_grid(f)?;
        if f.degree() != k {
            return Err(Error::DegreeMismatch {
                expected: k,
                found: f.degree(),
            });
        }
        Ok(())
    }

    /// `f0 = <θ, σ>/7`.
    pub fn f0(&self, theta: &Field) -> Result<Field> {
        self.check(theta, 3)?;
        let mut up = [0.0; 35];
        Ok(theta.map_sites(0, |s, a, out| {
            self.sigma_up.gather(s, &mut up);
            out[0] = a.iter().zip(&up).map(|(x, y)| x * y).sum::<f64>() / 7.0;
        }))
    }

    /// `f1 = -¼ σ⌐(*θ)`, computed as `-(4 sqrt det g)^{-1} g W_σ^T (*_E θ)`.
    pub fn f1(&self, theta: &Field) -> Result<Field> {
        self.check(theta, 3)?;
        let mut sig = [0.0; 35];
        let mut se = [0.0; 35];
        let mut w = [0.0; 7];
        Ok(theta.map_sites(1, |s, a, out| {
            self.sigma.gather(s, &mut sig);
            star_euclid(3, a, &mut se);
            w.fill(0.0);
            wedge_adjoint_acc(3, &sig, 1, &se, 1.0, &mut w);
            let g = self.metric.get(s);
            let c = -0.25 / g.sqrt_det();
            for i in 0..7 {
                out[i] = c * (0..7).map(|j| g.g()[i][j] * w[j]).sum::<f64>();
            }
        }))
    }

    /// `*(α ∧ σ)`.
    pub fn seven_to_three(&self, alpha: &Field) -> Result<Field> {
        self.check(alpha, 1)?;
        self.star(&wedge_fields(alpha, &self.sigma)?)
    }

    pub fn decompose3(&self, theta: &Field) -> Result<FieldDecomposition> {
        let f0 = self.f0(theta)?;
        let f1 = self.f1(theta)?;
        let mut f3 = theta.sub(&self.sigma.mul_scalar_field(&f0)?)?;
        f3.axpy(-1.0, &self.seven_to_three(&f1)?)?;
        Ok(FieldDecomposition { f0, f1, f3 })
    }

    pub fn project3_1(&self, theta: &Field) -> Result<Field> {
        self.sigma.mul_scalar_field(&self.f0(theta)?)
    }

    pub fn project3_7(&self, theta: &Field) -> Result<Field> {
        self.seven_to_three(&self.f1(theta)?)
    }

    pub fn project3_27(&self, theta: &Field) -> Result<Field> {
        Ok(self.decompose3(theta)?.f3)
    }

    /// `*(β ∧ σ)` for a 2-form.
    fn star_wedge_sigma2(&self, beta: &Field) -> Result<Field> {
        self.check(beta, 2)?;
        self.star(&wedge_fields(beta, &self.sigma)?)
    }

    pub fn project2_7(&self, beta: &Field) -> Result<Field> {
        Ok(beta.add(&self.star_wedge_sigma2(beta)?)?.scale(1.0 / 3.0))
    }

    pub fn project2_14(&self, beta: &Field) -> Result<Field> {
        let mut r = beta.scale(2.0 / 3.0);
        r.axpy(-1.0 / 3.0, &self.star_wedge_sigma2(beta)?)?;
        Ok(r)
    }

    /// `ξ(β) = β + *(σ ∧ β)`.
    pub fn xi(&self, beta: &Field) -> Result<Field> {
        beta.add(&self.star_wedge_sigma2(beta)?)
    }

    /// `σ⌐c` for a 4-form `c`: the adjoint of `α ↦ σ ∧ α`.
    pub fn contract_sigma(&self, c: &Field) -> Result<Field> {
        self.check(c, 4)?;
        let mut sig = [0.0; 35];
        let mut up = [0.0; 35];
        let mut w = [0.0; 7];
        Ok(c.map_sites(1, |s, a, out| {
            self.sigma.gather(s, &mut sig);
            let g = self.metric.get(s);
            g.raise_into(4, a, &mut up);
            w.fill(0.0);
            wedge_adjoint_acc(3, &sig, 1, &up, 1.0, &mut w);
            g.lower_into(1, &w, out);
        }))
    }

    /// Vector components `β♯` of a 1-form field.
    pub fn sharp(&self, beta: &Field) -> Result<Field> {
        crate::lattice::sharp(beta, &self.metric)
    }

    /// `β♯ ⌟ σ` for a 1-form field β.
    pub fn sharp_into_sigma(&self, beta: &Field) -> Result<Field> {
        crate::lattice::interior_field(&self.sharp(beta)?, &self.sigma)
    }

    /// `d⁷₇ α = *d(α ∧ *σ)`.
    pub fn d77(&self, alpha: &Field) -> Result<Field> {
        self.check(alpha, 1)?;
        self.star(&d(&wedge_fields(alpha, &self.psi)?)?)
    }

    /// `d⁷₁₄ α = π²₁₄ dα`.
    pub fn d714(&self, alpha: &Field) -> Result<Field> {
        self.check(alpha, 1)?;
        self.project2_14(&d(alpha)?)
    }

    /// `d⁷₂₇ α = π³₂₇ d*(α ∧ *σ)`.
    pub fn d727(&self, alpha: &Field) -> Result<Field> {
        self.check(alpha, 1)?;
        self.project3_27(&d(&self.star(&wedge_fields(alpha, &self.psi)?)?)?)
    }

    /// `d⁷₁ α = d*α`.
    pub fn d71(&self, alpha: &Field) -> Result<Field> {
        self.check(alpha, 1)?;
        self.codifferential(alpha)
    }

    /// L²-adjoint of [`G2Field::d714`]: `d*(π²₁₄ β)`.
    pub fn d147(&self, beta: &Field) -> Result<Field> {
        self.check(beta, 2)?;
        self.codifferential(&self.project2_14(beta)?)
    }

    /// `d¹⁴₂₇ β = π³₂₇ dβ`.
    pub fn d1427(&self, beta: &Field) -> Result<Field> {
        self.check(beta, 2)?;
        self.project3_27(&d(beta)?)
    }

    /// Linearisation of `σ ↦ *_σ σ` along θ.
    pub fn d_hitchin_dual(&self, theta: &Field) -> Result<Field> {
        let dec = self.decompose3(theta)?;
        // 4/3 f0 σ + *(f1 ∧ σ) - f3
        let mut inner = self.sigma.mul_scalar_field(&dec.f0)?.scale(4.0 / 3.0);
        inner.axpy(1.0, &self.seven_to_three(&dec.f1)?)?;
        inner.axpy(-1.0, &dec.f3)?;
        self.star(&inner)
    }

    /// Christoffel symbols `Γ[site][l][i][a] = Γ^l_{ia}` of the induced metric.
    pub fn christoffel(&self) -> Result<Vec<[[[f64; 7]; 7]; 7]>> {
        let grid = *self.grid();
        let m = grid.m();
        let ns = grid.n_sites();
        // dg[a][i][j][site] for active a
        let mut dg = vec![vec![vec![vec![0.0; ns]; 7]; 7]; m];
        for i in 0..7 {
            for j in i..7 {
                let comp: Vec<f64> = (0..ns).map(|s| self.metric.get(s).g()[i][j]).collect();
                let f = Field::from_data(grid, 0, comp)?;
                for (a, dga) in dg.iter_mut().enumerate() {
                    let p = partial(&f, a)?;
                    dga[i][j] = p.component(0).to_vec();
                    dga[j][i] = p.component(0).to_vec();
                }
            }
        }
        let mut out = vec![[[[0.0; 7]; 7]; 7]; ns];
        for (s, gam) in out.iter_mut().enumerate() {
            let ginv = self.metric.get(s).inverse();
            let dd = |a: usize, i: usize, j: usize| if a < m { dg[a][i][j][s] } else { 0.0 };
            // lowered Γ_{k i a} = ½(∂_i g_{ak} + ∂_a g_{ik} - ∂_k g_{ia})
            let mut low = [[[0.0; 7]; 7]; 7];
            for k in 0..7 {
                for i in 0..7 {
                    for a in 0..7 {
                        low[k][i][a] = 0.5 * (dd(i, a, k) + dd(a, i, k) - dd(k, i, a));
                    }
                }
            }
            for l in 0..7 {
                for i in 0..7 {
                    for a in 0..7 {
                        gam[l][i][a] = (0..7).map(|k| ginv[l][k] * low[k][i][a]).sum();
                    }
                }
            }
        }
        Ok(out)
    }

    /// Levi-Civita covariant derivative of a k-form field along each
    /// coordinate direction: `out[i] = ∇_{∂_i} f`.
    pub fn nabla(&self, f: &Field, gamma: &[[[[f64; 7]; 7]; 7]]) -> Result<Vec<Field>> {
        let grid = *self.grid();
        self.sigma.check_same_grid(f)?;
        let k = f.degree();
        let nk = BINOM7[k];
        let mut out = Vec::with_capacity(7);
        for i in 0..7 {
            let mut df = if i < grid.m() {
                partial(f, i)?
            } else {
                Field::zeros(grid, k)
            };
            if k > 0 {
                let mut a = [0.0; 35];
                let mut red = [0.0; 35];
                let mut add = [0.0; 35];
                for (s, gam) in gamma.iter().enumerate() {
                    f.gather(s, &mut a[..nk]);
                    add[..nk].fill(0.0);
                    for l in 0..7 {
                        let mut el = [0.0; 7];
                        el[l] = 1.0;
                        red[..BINOM7[k - 1]].fill(0.0);
                        interior_acc(k, &el, &a[..nk], &mut red[..BINOM7[k - 1]]);
                        // -Σ_a Γ^l_{ia} e^a ∧ (e_l ⌟ f)
                        let coeff: [f64; 7] = std::array::from_fn(|b| -gam[l][i][b]);
                        wedge_acc(1, &coeff, k - 1, &red[..BINOM7[k - 1]], 1.0, &mut add[..nk]);
                    }
                    let ns = grid.n_sites();
                    let data = df.data_mut();
                    for c in 0..nk {
                        data[c * ns + s] += add[c];
                    }
                }
            }
            out.push(df);
        }
        Ok(out)
    }

    /// `∇σ` along each coordinate direction.
    pub fn nabla_sigma(&self) -> Result<Vec<Field>> {
        let gamma = self.christoffel()?;
        self.nabla(&self.sigma, &gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior7::{sigma_std, KForm};
    use crate::g2point::G2Point;
    use crate::lattice::{l2_inner, Grid};
    use crate::rng::SeededRng;
    use std::f64::consts::PI;

    fn perturbed(n: usize, amp: f64, seed: u64, closed: bool) -> G2Field {
        let g = Grid::new(3, n, 2.0 * PI).unwrap();
        let mut rng = SeededRng::with_stream(seed, 0);
        let p = if closed {
            d(&Field::random_trig(g, 2, 1, &mut rng)).unwrap()
        } else {
            Field::random_trig(g, 3, 1, &mut rng)
        };
        let p = p.scale(amp / p.max_abs());
        G2Field::new(Field::constant(g, &sigma_std()).add(&p).unwrap()).unwrap()
    }

    #[test]
    fn field_decomposition_matches_pointwise() {
        let s = perturbed(4, 0.2, 1, false);
        let th = Field::random_trig(*s.grid(), 3, 1, &mut SeededRng::new(3));
        let dec = s.decompose3(&th).unwrap();
        for site in [0, 5, 17, 63] {
            let p = G2Point::new(s.sigma().at(site)).unwrap();
            let pd = p.decompose3(&th.at(site)).unwrap();
            assert!((dec.f0.at(site).coeffs()[0] - pd.f0).abs() < 1e-12);
            assert!(dec.f1.at(site).dist(&pd.f1) < 1e-12);
            assert!(dec.f3.at(site).dist(&pd.f3) < 1e-12);
        }
    }

    #[test]
    fn contract_sigma_is_wedge_adjoint() {
        let s = perturbed(4, 0.2, 2, false);
        let c = Field::random_trig(*s.grid(), 4, 1, &mut SeededRng::new(5));
        let a = Field::random_trig(*s.grid(), 1, 1, &mut SeededRng::new(6));
        let lhs = l2_inner(&s.contract_sigma(&c).unwrap(), &a, s.metric()).unwrap();
        let rhs = l2_inner(&c, &wedge_fields(s.sigma(), &a).unwrap(), s.metric()).unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * rhs.abs());
    }

    #[test]
    fn torsion_free_constant_form() {
        let g = Grid::new(3, 4, 2.0 * PI).unwrap();
        let s = G2Field::new(Field::constant(g, &sigma_std())).unwrap();
        assert!(s.torsion().unwrap().max_abs() < 1e-15);
        for f in s.nabla_sigma().unwrap() {
            assert!(f.max_abs() < 1e-15);
        }
    }

    #[test]
    fn nabla_is_torsion_free_and_metric() {
        // d f = Σ e^i ∧ ∇_i f and d* f = -Σ e_i ⌟ ∇_i f for the Levi-Civita connection
        let s = perturbed(16, 0.01, 4, false);
        let grid = *s.grid();
        let gam = s.christoffel().unwrap();
        let f = Field::random_trig(grid, 2, 1, &mut SeededRng::new(8));
        let nf = s.nabla(&f, &gam).unwrap();
        let mut ext = Field::zeros(grid, 3);
        let mut cod = Field::zeros(grid, 1);
        for (i, nfi) in nf.iter().enumerate() {
            let mut ei = KForm::zero(1);
            ei.coeffs_mut()[i] = 1.0;
            ext.axpy(1.0, &wedge_fields(&Field::constant(grid, &ei), nfi).unwrap()).unwrap();
            // raised e_i = g^{ij} e_j  as a vector field
            let up = Field::from_data(
                grid,
                1,
                (0..7)
                    .flat_map(|j| (0..grid.n_sites()).map(move |st| (j, st)))
                    .map(|(j, st)| s.metric().get(st).inverse()[i][j])
                    .collect(),
            )
            .unwrap();
            cod.axpy(-1.0, &crate::lattice::interior_field(&up, nfi).unwrap()).unwrap();
        }
        let e1 = ext.sub(&d(&f).unwrap()).unwrap().max_abs();
        let e2 = cod.sub(&s.codifferential(&f).unwrap()).unwrap().max_abs();
        assert!(e1 < 1e-10 && e2 < 1e-10, "{e1} {e2}");
    }

    #[test]
    fn d147_is_adjoint_of_d714() {
        let s = perturbed(8, 0.05, 5, true);
        let grid = *s.grid();
        let a = Field::random_trig(grid, 1, 2, &mut SeededRng::new(1));
        let b = s
            .project2_14(&Field::random_trig(grid, 2, 2, &mut SeededRng::new(2)))
            .unwrap();
        let lhs = l2_inner(&s.d714(&a).unwrap(), &b, s.metric()).unwrap();
        let rhs = l2_inner(&a, &s.d147(&b).unwrap(), s.metric()).unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "{lhs} {rhs}");
    }
}
