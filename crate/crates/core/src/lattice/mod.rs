//! Periodic lattice discretisation of differential forms on T^m × R^{7-m}.
//!
//! Fields depend only on the first `m` coordinates (the active axes) but
//! carry all `C(7, k)` components. Data is component-major:
//! `data[c * n_sites + site]`, with sites in row-major order over the
//! active axes (axis 0 slowest).

pub mod snapshot;
pub mod spectral;

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exterior7::kernels::{interior_acc, star_euclid, wedge_acc, BINOM7};
use crate::exterior7::tables::{merge_sign, tables};
use crate::exterior7::{KForm, Metric7};
use crate::g2point::metric_coeffs;
use crate::rng::SeededRng;
use spectral::{fft_nd, Wavenumbers};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeScheme {
    #[default]
    Spectral,
    ForwardDifference,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    m: usize,
    n: usize,
    length: f64,
    scheme: DerivativeScheme,
}

impl Grid {
    pub fn new(m: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=7).contains(&m) {
            return Err(Error::InvalidGrid(format!("active dimension {m} not in 1..=7")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("n = {n} is too small")));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("length {length} must be positive")));
        }
        if (n as f64).powi(m as i32) > 1e8 {
            return Err(Error::InvalidGrid("too many sites".into()));
        }
        Ok(Grid {
            m,
            n,
            length,
            scheme: DerivativeScheme::Spectral,
        })
    }

    pub fn with_scheme(mut self, scheme: DerivativeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.scheme
    }

    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn n_sites(&self) -> usize {
        self.n.pow(self.m as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.m as i32)
    }

    /// Volume of the torus `L^m`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.m as i32)
    }

    pub fn multi_index(&self, site: usize) -> [usize; 7] {
        let mut idx = [0usize; 7];
        let mut s = site;
        for a in (0..self.m).rev() {
            idx[a] = s % self.n;
            s /= self.n;
        }
        idx
    }

    pub fn site(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.m).fold(0, |acc, &i| acc * self.n + (i % self.n))
    }

    /// Coordinates of a site; inactive coordinates are zero.
    pub fn coords(&self, site: usize) -> [f64; 7] {
        let idx = self.multi_index(site);
        let h = self.h();
        let mut x = [0.0; 7];
        for a in 0..self.m {
            x[a] = idx[a] as f64 * h;
        }
        x
    }

    /// Site displaced by `shift` cells along `axis` (periodic).
    pub fn neighbour(&self, site: usize, axis: usize, shift: isize) -> usize {
        let mut idx = self.multi_index(site);
        let n = self.n as isize;
        idx[axis] = (((idx[axis] as isize + shift) % n + n) % n) as usize;
        self.site(&idx[..self.m])
    }

    pub(crate) fn key(&self) -> (usize, usize, u64) {
        (self.m, self.n, self.length.to_bits())
    }

    pub(crate) fn wavenumbers(&self) -> Rc<Wavenumbers> {
        thread_local! {
            static CACHE: RefCell<HashMap<(usize, usize, u64), Rc<Wavenumbers>>> =
                RefCell::new(HashMap::new());
        }
        CACHE.with(|c| {
            c.borrow_mut()
                .entry(self.key())
                .or_insert_with(|| Rc::new(Wavenumbers::new(self)))
                .clone()
        })
    }
}

/// Smallest nonzero eigenvalue of the flat Laplacian on the grid.
pub fn spectrum_lambda0(grid: &Grid) -> f64 {
    let k = 2.0 * std::f64::consts::PI / grid.length();
    k * k
}

/// A k-form field on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    degree: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid, degree: usize) -> Self {
        assert!(degree <= 7);
        Field {
            grid,
            degree,
            data: vec![0.0; BINOM7[degree] * grid.n_sites()],
        }
    }

    pub fn from_data(grid: Grid, degree: usize, data: Vec<f64>) -> Result<Self> {
        if degree > 7 {
            return Err(Error::InvalidDegree(degree));
        }
        let expected = BINOM7[degree] * grid.n_sites();
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: data.len(),
            });
        }
        Ok(Field { grid, degree, data })
    }

    pub fn constant(grid: Grid, f: &KForm) -> Self {
        let mut out = Field::zeros(grid, f.degree());
        let ns = grid.n_sites();
        for (c, &v) in f.coeffs().iter().enumerate() {
            out.data[c * ns..(c + 1) * ns].fill(v);
        }
        out
    }

    pub fn from_fn(grid: Grid, degree: usize, mut f: impl FnMut(&[f64; 7]) -> KForm) -> Self {
        let mut out = Field::zeros(grid, degree);
        for s in 0..grid.n_sites() {
            let v = f(&grid.coords(s));
            assert_eq!(v.degree(), degree);
            out.set(s, &v);
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_components(&self) -> usize {
        BINOM7[self.degree]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let ns = self.grid.n_sites();
        &self.data[c * ns..(c + 1) * ns]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let ns = self.grid.n_sites();
        &mut self.data[c * ns..(c + 1) * ns]
    }

    #[inline]
    pub fn gather(&self, site: usize, out: &mut [f64]) {
        let ns = self.grid.n_sites();
        for (c, o) in out.iter_mut().enumerate().take(BINOM7[self.degree]) {
            *o = self.data[c * ns + site];
        }
    }

    #[inline]
    pub fn scatter(&mut self, site: usize, v: &[f64]) {
        let ns = self.grid.n_sites();
        for (c, &x) in v.iter().enumerate().take(BINOM7[self.degree]) {
            self.data[c * ns + site] = x;
        }
    }

    pub fn at(&self, site: usize) -> KForm {
        let mut f = KForm::zero(self.degree);
        self.gather(site, f.coeffs_mut());
        f
    }

    pub fn set(&mut self, site: usize, v: &KForm) {
        assert_eq!(v.degree(), self.degree);
        self.scatter(site, v.coeffs());
    }

    /// Applies a per-site kernel producing a field of `out_degree`.
    pub fn map_sites(
        &self,
        out_degree: usize,
        mut f: impl FnMut(usize, &[f64], &mut [f64]),
    ) -> Field {
        let mut out = Field::zeros(self.grid, out_degree);
        let (ni, no) = (BINOM7[self.degree], BINOM7[out_degree]);
        let mut a = [0.0; 35];
        let mut b = [0.0; 35];
        for s in 0..self.grid.n_sites() {
            self.gather(s, &mut a[..ni]);
            b[..no].fill(0.0);
            f(s, &a[..ni], &mut b[..no]);
            out.scatter(s, &b[..no]);
        }
        out
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn check_compatible(&self, other: &Field) -> Result<()> {
        self.check_same_grid(other)?;
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: other.degree,
            });
        }
        Ok(())
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Field) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        let mut r = self.clone();
        r.axpy(1.0, other)?;
        Ok(r)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        let mut r = self.clone();
        r.axpy(-1.0, other)?;
        Ok(r)
    }

    pub fn scale(&self, s: f64) -> Field {
        let mut r = self.clone();
        r.data.iter_mut().for_each(|x| *x *= s);
        r
    }

    /// Multiplies every site by a scalar field.
    pub fn mul_scalar_field(&self, f: &Field) -> Result<Field> {
        self.check_same_grid(f)?;
        if f.degree != 0 {
            return Err(Error::DegreeMismatch {
                expected: 0,
                found: f.degree,
            });
        }
        let ns = self.grid.n_sites();
        let mut r = self.clone();
        for c in 0..self.n_components() {
            for s in 0..ns {
                r.data[c * ns + s] *= f.data[s];
            }
        }
        Ok(r)
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Restriction of a grid to every `factor`-th site.
    pub fn downsample(&self, factor: usize) -> Result<Field> {
        let n = self.grid.n;
        if factor == 0 || !n.is_multiple_of(factor) {
            return Err(Error::InvalidArgument(format!("cannot downsample n={n} by {factor}")));
        }
        let coarse = Grid {
            n: n / factor,
            ..self.grid
        };
        let mut out = Field::zeros(coarse, self.degree);
        for s in 0..coarse.n_sites() {
            let idx = coarse.multi_index(s);
            let fine: Vec<usize> = idx[..coarse.m].iter().map(|i| i * factor).collect();
            out.set(s, &self.at(self.grid.site(&fine)));
        }
        Ok(out)
    }

    /// Random trigonometric polynomial with integer wave-vectors in
    /// `[-band, band]^m`, excluding the zero mode. Coefficients are uniform
    /// in [-1, 1); the result is unnormalised.
    pub fn random_trig(grid: Grid, degree: usize, band: usize, rng: &mut SeededRng) -> Field {
        let m = grid.m;
        let base = 2.0 * std::f64::consts::PI / grid.length;
        let modes = half_space_modes(m, band as i64);
        let nc = BINOM7[degree];
        let coeffs: Vec<(f64, f64)> = (0..modes.len() * nc)
            .map(|_| (rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)))
            .collect();
        let mut out = Field::zeros(grid, degree);
        let ns = grid.n_sites();
        for s in 0..ns {
            let x = grid.coords(s);
            for (mi, k) in modes.iter().enumerate() {
                let phase: f64 = (0..m).map(|a| base * k[a] as f64 * x[a]).sum();
                let (sn, cs) = phase.sin_cos();
                for c in 0..nc {
                    let (a, b) = coeffs[mi * nc + c];
                    out.data[c * ns + s] += a * cs + b * sn;
                }
            }
        }
        out
    }
}

/// One representative of each `±k` pair with `0 < |k|_∞ <= band`.
pub fn half_space_modes(m: usize, band: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let width = (2 * band + 1) as usize;
    let total = width.pow(m as u32);
    for code in 0..total {
        let mut c = code;
        let mut k = vec![0i64; m];
        for a in (0..m).rev() {
            k[a] = (c % width) as i64 - band;
            c /= width;
        }
        let first = k.iter().find(|&&x| x != 0);
        if let Some(&f) = first {
            if f > 0 {
                out.push(k);
            }
        }
    }
    out
}

/// Per-site metrics.
#[derive(Clone, Debug)]
pub struct MetricField {
    grid: Grid,
    metrics: Vec<Metric7>,
}

impl MetricField {
    pub fn flat(grid: Grid) -> Self {
        MetricField {
            grid,
            metrics: vec![Metric7::identity(); grid.n_sites()],
        }
    }

    /// Metric of a positive 3-form field; fails at the first non-positive site.
    pub fn from_sigma(sigma: &Field) -> Result<Self> {
        if sigma.degree != 3 {
            return Err(Error::DegreeMismatch {
                expected: 3,
                found: sigma.degree,
            });
        }
        let mut metrics = Vec::with_capacity(sigma.grid.n_sites());
        let mut a = [0.0; 35];
        for s in 0..sigma.grid.n_sites() {
            sigma.gather(s, &mut a);
            let (g, _) = metric_coeffs(&a, 1.0).map_err(|e| match e {
                Error::NotPositive { .. } => Error::NotPositive { site: Some(s) },
                other => other,
            })?;
            metrics.push(g);
        }
        Ok(MetricField {
            grid: sigma.grid,
            metrics,
        })
    }

    pub fn from_metrics(grid: Grid, metrics: Vec<Metric7>) -> Result<Self> {
        if metrics.len() != grid.n_sites() {
            return Err(Error::LengthMismatch {
                expected: grid.n_sites(),
                found: metrics.len(),
            });
        }
        Ok(MetricField { grid, metrics })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn get(&self, site: usize) -> &Metric7 {
        &self.metrics[site]
    }

    pub fn metrics(&self) -> &[Metric7] {
        &self.metrics
    }

    /// `sqrt(det g)` as a scalar field.
    pub fn dvol(&self) -> Field {
        let data = self.metrics.iter().map(|g| g.sqrt_det()).collect();
        Field::from_data(self.grid, 0, data).expect("sizes match")
    }

    /// Total volume `Σ sqrt(det g) h^m`.
    pub fn volume(&self) -> f64 {
        self.metrics.iter().map(|g| g.sqrt_det()).sum::<f64>() * self.grid.cell_volume()
    }

    fn check(&self, f: &Field) -> Result<()> {
        if self.grid != f.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// `(axis, input ordinal, sign)` terms producing each output component of `d`.
fn d_terms(k: usize) -> &'static [Vec<(usize, usize, f64)>] {
    static T: OnceLock<Vec<Vec<Vec<(usize, usize, f64)>>>> = OnceLock::new();
    &T.get_or_init(|| {
        let t = tables();
        (0..7)
            .map(|k| {
                t.basis[k + 1]
                    .iter()
                    .map(|&mj| {
                        (0..7)
                            .filter(|a| mj & (1 << a) != 0)
                            .map(|a| {
                                let mi = mj & !(1u8 << a);
                                (a, t.ordinal[mi as usize] as usize, merge_sign(1 << a, mi))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    })[k]
}

/// Exterior derivative.
pub fn d(f: &Field) -> Result<Field> {
    if f.degree >= 7 {
        return Err(Error::DegreeOverflow(f.degree, 1));
    }
    match f.grid.scheme {
        DerivativeScheme::Spectral => Ok(d_spectral(f)),
        DerivativeScheme::ForwardDifference => Ok(d_forward(f)),
    }
}

/// Spectra of every component, packing pairs of real arrays per transform.
pub(crate) fn forward_components(f: &Field) -> Vec<Option<Vec<Complex64>>> {
    let grid = f.grid;
    let ns = grid.n_sites();
    let wn = grid.wavenumbers();
    let nc = f.n_components();
    let nonzero: Vec<usize> = (0..nc).filter(|&c| f.component(c).iter().any(|x| *x != 0.0)).collect();
    let mut out: Vec<Option<Vec<Complex64>>> = vec![None; nc];
    let mut buf = vec![Complex64::new(0.0, 0.0); ns];
    for pair in nonzero.chunks(2) {
        let a = f.component(pair[0]);
        if pair.len() == 2 {
            let b = f.component(pair[1]);
            for s in 0..ns {
                buf[s] = Complex64::new(a[s], b[s]);
            }
            fft_nd(&grid, &mut buf, false);
            let mut fa = vec![Complex64::new(0.0, 0.0); ns];
            let mut fb = vec![Complex64::new(0.0, 0.0); ns];
            wn.unpack(&buf, &mut fa, &mut fb);
            out[pair[0]] = Some(fa);
            out[pair[1]] = Some(fb);
        } else {
            let mut fa: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            fft_nd(&grid, &mut fa, false);
            out[pair[0]] = Some(fa);
        }
    }
    out
}

/// Inverse transforms of Hermitian spectra into the components of `out`.
pub(crate) fn inverse_components(out: &mut Field, spectra: &[Option<Vec<Complex64>>]) {
    let grid = out.grid;
    let ns = grid.n_sites();
    let scale = 1.0 / ns as f64;
    let present: Vec<usize> = (0..spectra.len()).filter(|&c| spectra[c].is_some()).collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); ns];
    for pair in present.chunks(2) {
        let a = spectra[pair[0]].as_ref().expect("present");
        if pair.len() == 2 {
            let b = spectra[pair[1]].as_ref().expect("present");
            for s in 0..ns {
                buf[s] = a[s] + Complex64::new(-b[s].im, b[s].re);
            }
        } else {
            buf.copy_from_slice(a);
        }
        fft_nd(&grid, &mut buf, true);
        {
            let oa = out.component_mut(pair[0]);
            for s in 0..ns {
                oa[s] = buf[s].re * scale;
            }
        }
        if pair.len() == 2 {
            let ob = out.component_mut(pair[1]);
            for s in 0..ns {
                ob[s] = buf[s].im * scale;
            }
        }
    }
}

fn d_spectral(f: &Field) -> Field {
    let grid = f.grid;
    let m = grid.m;
    let ns = grid.n_sites();
    let wn = grid.wavenumbers();
    let spec = forward_components(f);
    let terms = d_terms(f.degree);
    let mut out_spec: Vec<Option<Vec<Complex64>>> = Vec::with_capacity(terms.len());
    for tj in terms {
        let mut acc: Option<Vec<Complex64>> = None;
        for &(a, i, sign) in tj {
            if a >= m {
                continue;
            }
            let Some(fi) = spec[i].as_ref() else { continue };
            let acc = acc.get_or_insert_with(|| vec![Complex64::new(0.0, 0.0); ns]);
            let ka = &wn.k[a];
            for s in 0..ns {
                // sign * i k_a * F
                let v = fi[s];
                acc[s] += Complex64::new(-v.im, v.re) * (sign * ka[s]);
            }
        }
        out_spec.push(acc);
    }
    let mut out = Field::zeros(grid, f.degree + 1);
    inverse_components(&mut out, &out_spec);
    out
}

fn d_forward(f: &Field) -> Field {
    let grid = f.grid;
    let m = grid.m;
    let ns = grid.n_sites();
    let inv_h = 1.0 / grid.h();
    let terms = d_terms(f.degree);
    let mut out = Field::zeros(grid, f.degree + 1);
    let shifted: Vec<Vec<usize>> = (0..m)
        .map(|a| (0..ns).map(|s| grid.neighbour(s, a, 1)).collect())
        .collect();
    for (j, tj) in terms.iter().enumerate() {
        for &(a, i, sign) in tj {
            if a >= m {
                continue;
            }
            let fi = f.component(i).to_vec();
            let oj = out.component_mut(j);
            for s in 0..ns {
                oj[s] += sign * (fi[shifted[a][s]] - fi[s]) * inv_h;
            }
        }
    }
    out
}

/// First partial derivative of every component along active axis `a`.
pub fn partial(f: &Field, axis: usize) -> Result<Field> {
    let grid = f.grid;
    if axis >= grid.m {
        return Err(Error::InvalidArgument(format!("axis {axis} is not active")));
    }
    let ns = grid.n_sites();
    match grid.scheme {
        DerivativeScheme::Spectral => {
            let wn = grid.wavenumbers();
            let spec = forward_components(f);
            let ka = &wn.k[axis];
            let out_spec: Vec<Option<Vec<Complex64>>> = spec
                .into_iter()
                .map(|o| {
                    o.map(|v| {
                        v.iter()
                            .zip(ka)
                            .map(|(z, &k)| Complex64::new(-z.im, z.re) * k)
                            .collect()
                    })
                })
                .collect();
            let mut out = Field::zeros(grid, f.degree);
            inverse_components(&mut out, &out_spec);
            Ok(out)
        }
        DerivativeScheme::ForwardDifference => {
            let inv_h = 1.0 / grid.h();
            let mut out = Field::zeros(grid, f.degree);
            for c in 0..f.n_components() {
                let fc = f.component(c);
                let oc = out.component_mut(c);
                for s in 0..ns {
                    oc[s] = (fc[grid.neighbour(s, axis, 1)] - fc[s]) * inv_h;
                }
            }
            Ok(out)
        }
    }
}

/// Pointwise Hodge star.
pub fn star(f: &Field, mf: &MetricField) -> Result<Field> {
    mf.check(f)?;
    let k = f.degree;
    Ok(f.map_sites(7 - k, |s, a, out| mf.metrics[s].star_into(k, a, out)))
}

/// Euclidean Hodge star.
pub fn star_flat(f: &Field) -> Field {
    let k = f.degree;
    f.map_sites(7 - k, |_, a, out| star_euclid(k, a, out))
}

/// Codifferential `d* = (-1)^k * d *` on k-forms.
pub fn codifferential(f: &Field, mf: &MetricField) -> Result<Field> {
    if f.degree == 0 {
        return Err(Error::InvalidDegree(0));
    }
    let r = star(&d(&star(f, mf)?)?, mf)?;
    Ok(if f.degree % 2 == 1 { r.scale(-1.0) } else { r })
}

/// `d d* + d* d`.
pub fn hodge_laplacian(f: &Field, mf: &MetricField) -> Result<Field> {
    let k = f.degree;
    let mut out = Field::zeros(f.grid, k);
    if k > 0 {
        out.axpy(1.0, &d(&codifferential(f, mf)?)?)?;
    }
    if k < 7 {
        out.axpy(1.0, &codifferential(&d(f)?, mf)?)?;
    }
    Ok(out)
}

pub fn wedge_fields(a: &Field, b: &Field) -> Result<Field> {
    a.check_same_grid(b)?;
    let (p, q) = (a.degree, b.degree);
    if p + q > 7 {
        return Err(Error::DegreeOverflow(p, q));
    }
    let mut bb = [0.0; 35];
    let nq = BINOM7[q];
    Ok(a.map_sites(p + q, |s, x, out| {
        b.gather(s, &mut bb[..nq]);
        wedge_acc(p, x, q, &bb[..nq], 1.0, out);
    }))
}

/// `v ⌟ a` where `v` holds vector components in a degree-1 field.
pub fn interior_field(v: &Field, a: &Field) -> Result<Field> {
    v.check_same_grid(a)?;
    if v.degree != 1 {
        return Err(Error::DegreeMismatch {
            expected: 1,
            found: v.degree,
        });
    }
    if a.degree == 0 {
        return Err(Error::InvalidDegree(0));
    }
    let k = a.degree;
    let mut vv = [0.0; 7];
    Ok(a.map_sites(k - 1, |s, x, out| {
        v.gather(s, &mut vv);
        interior_acc(k, &vv, x, out);
    }))
}

/// Raises the index of a 1-form field: components of the dual vector field.
pub fn sharp(f: &Field, mf: &MetricField) -> Result<Field> {
    mf.check(f)?;
    if f.degree != 1 {
        return Err(Error::DegreeMismatch {
            expected: 1,
            found: f.degree,
        });
    }
    Ok(f.map_sites(1, |s, a, out| mf.metrics[s].raise_into(1, a, out)))
}

/// `Σ_sites <a, b>_g sqrt(det g) h^m`.
pub fn l2_inner(a: &Field, b: &Field, mf: &MetricField) -> Result<f64> {
    a.check_compatible(b)?;
    mf.check(a)?;
    let k = a.degree;
    let nc = BINOM7[k];
    let mut x = [0.0; 35];
    let mut y = [0.0; 35];
    let mut r = [0.0; 35];
    let mut sum = 0.0;
    for s in 0..a.grid.n_sites() {
        a.gather(s, &mut x[..nc]);
        b.gather(s, &mut y[..nc]);
        let g = &mf.metrics[s];
        g.raise_into(k, &x[..nc], &mut r[..nc]);
        let ip: f64 = r[..nc].iter().zip(&y[..nc]).map(|(p, q)| p * q).sum();
        sum += ip * g.sqrt_det();
    }
    Ok(sum * a.grid.cell_volume())
}

pub fn l2_norm(a: &Field, mf: &MetricField) -> Result<f64> {
    Ok(l2_inner(a, a, mf)?.max(0.0).sqrt())
}

/// Largest pointwise metric norm.
pub fn c0_norm(a: &Field, mf: &MetricField) -> Result<f64> {
    mf.check(a)?;
    let k = a.degree;
    let nc = BINOM7[k];
    let mut x = [0.0; 35];
    let mut r = [0.0; 35];
    let mut best = 0.0f64;
    for s in 0..a.grid.n_sites() {
        a.gather(s, &mut x[..nc]);
        mf.metrics[s].raise_into(k, &x[..nc], &mut r[..nc]);
        let ip: f64 = r[..nc].iter().zip(&x[..nc]).map(|(p, q)| p * q).sum();
        best = best.max(ip.max(0.0).sqrt());
    }
    Ok(best)
}

/// Applies the radial Fourier multiplier `mult(|k|^2)` to every component.
/// `|k|^2` uses the same Nyquist convention as the spectral `d`, so the
/// result commutes with `d` and preserves closed and exact fields.
pub fn fourier_multiplier(f: &Field, mult: impl Fn(f64) -> f64) -> Field {
    let wn = f.grid.wavenumbers();
    let sym: Vec<f64> = wn.k2.iter().map(|&k2| mult(k2)).collect();
    let spec: Vec<Option<Vec<Complex64>>> = forward_components(f)
        .into_iter()
        .map(|o| {
            o.map(|mut v| {
                v.iter_mut().zip(&sym).for_each(|(z, &m)| *z *= m);
                v
            })
        })
        .collect();
    let mut out = Field::zeros(f.grid, f.degree);
    inverse_components(&mut out, &spec);
    out
}

/// Euclidean spectral energy summed over components, binned by
/// `j = |k|^2 (L / 2π)^2` (an integer, with the Nyquist convention of `d`).
/// Entry `j` is the mean of `|f̂|^2` over the modes of that shell; empty
/// shells are 0. Normalised so that `Σ_k |f̂_k|^2 = Σ_s |f_s|^2 / N`.
pub fn shell_energy(f: &Field) -> Vec<f64> {
    let grid = f.grid;
    let ns = grid.n_sites();
    let base = 2.0 * std::f64::consts::PI / grid.length;
    let wn = grid.wavenumbers();
    let shell: Vec<usize> = wn.k2.iter().map(|&k2| (k2 / (base * base)).round() as usize).collect();
    let nshell = shell.iter().max().map_or(1, |m| m + 1);
    let mut energy = vec![0.0; nshell];
    let mut count = vec![0usize; nshell];
    for &j in &shell {
        count[j] += 1;
    }
    let norm = 1.0 / (ns as f64 * ns as f64);
    for v in forward_components(f).into_iter().flatten() {
        for (s, z) in v.iter().enumerate() {
            energy[shell[s]] += z.norm_sqr() * norm;
        }
    }
    for (e, &c) in energy.iter_mut().zip(&count) {
        if c > 0 {
            *e /= c as f64;
        }
    }
    energy
}

/// Removes every Fourier mode with a Nyquist index along some active axis.
pub fn drop_nyquist(f: &Field) -> Field {
    let grid = f.grid;
    let n = grid.n();
    if n % 2 == 1 {
        return f.clone();
    }
    let keep: Vec<bool> = (0..grid.n_sites())
        .map(|s| grid.multi_index(s)[..grid.m()].iter().all(|&i| i != n / 2))
        .collect();
    let spec: Vec<Option<Vec<Complex64>>> = forward_components(f)
        .into_iter()
        .map(|o| {
            o.map(|mut v| {
                v.iter_mut().zip(&keep).for_each(|(z, &k)| {
                    if !k {
                        *z = Complex64::new(0.0, 0.0);
                    }
                });
                v
            })
        })
        .collect();
    let mut out = Field::zeros(grid, f.degree);
    inverse_components(&mut out, &spec);
    out
}

/// Spatial mean of each component (the harmonic part on a flat torus).
pub fn zero_mode(a: &Field) -> KForm {
    let ns = a.grid.n_sites() as f64;
    let mut out = KForm::zero(a.degree);
    for (c, o) in out.coeffs_mut().iter_mut().enumerate() {
        *o = a.component(c).iter().sum::<f64>() / ns;
    }
    out
}

pub fn remove_zero_mode(a: &Field) -> Field {
    let z = zero_mode(a);
    let mut r = a.clone();
    for (c, &v) in z.coeffs().iter().enumerate() {
        r.component_mut(c).iter_mut().for_each(|x| *x -= v);
    }
    r
}

#[cfg(test)]
mod tests;
