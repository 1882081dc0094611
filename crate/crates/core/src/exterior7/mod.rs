//! Exterior algebra of R^7 in the standard coordinate basis.
//!
//! A k-form stores its `C(7, k)` coefficients in lexicographic order of the
//! sorted multi-index (`e12, e13, ..., e17, e23, ...`). Coordinates are
//! labelled 1..=7 in the public API and 0..7 internally.

pub mod kernels;
pub(crate) mod tables;

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use kernels::{
    interior_acc, star_euclid, transform_high, transform_low, wedge_acc, Mat7, BINOM7,
};
use tables::{tables, DIM};

pub use kernels::Mat7 as Matrix7;

pub const MAX_COMPONENTS: usize = 35;

/// Number of components of a k-form on R^7.
pub fn n_components(k: usize) -> usize {
    BINOM7[k]
}

/// Strictly increasing subset of {1..7}.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    mask: u8,
}

impl MultiIndex {
    /// Builds from 1-based, strictly increasing coordinates.
    pub fn new(indices: &[usize]) -> Result<Self> {
        let mut mask = 0u8;
        let mut prev = 0usize;
        for &i in indices {
            if i == 0 || i > DIM || i <= prev {
                return Err(Error::InvalidMultiIndex(indices.to_vec()));
            }
            mask |= 1 << (i - 1);
            prev = i;
        }
        Ok(MultiIndex { mask })
    }

    pub fn from_ordinal(degree: usize, ordinal: usize) -> Self {
        MultiIndex {
            mask: tables().basis[degree][ordinal],
        }
    }

    pub fn degree(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn ordinal(&self) -> usize {
        tables().ordinal[self.mask as usize] as usize
    }

    /// 1-based coordinates.
    pub fn indices(&self) -> Vec<usize> {
        (0..DIM).filter(|i| self.mask & (1 << i) != 0).map(|i| i + 1).collect()
    }

    pub fn mask(&self) -> u8 {
        self.mask
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e")?;
        for i in self.indices() {
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

/// Orientation relative to `e^{1..7}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
pub struct KForm {
    degree: usize,
    coeffs: [f64; MAX_COMPONENTS],
}

impl KForm {
    pub fn zero(degree: usize) -> Self {
        assert!(degree <= DIM, "degree {degree} exceeds 7");
        KForm {
            degree,
            coeffs: [0.0; MAX_COMPONENTS],
        }
    }

    pub fn scalar(c: f64) -> Self {
        let mut f = KForm::zero(0);
        f.coeffs[0] = c;
        f
    }

    pub fn from_slice(degree: usize, coeffs: &[f64]) -> Result<Self> {
        if degree > DIM {
            return Err(Error::InvalidDegree(degree));
        }
        if coeffs.len() != BINOM7[degree] {
            return Err(Error::LengthMismatch {
                expected: BINOM7[degree],
                found: coeffs.len(),
            });
        }
        let mut f = KForm::zero(degree);
        f.coeffs[..coeffs.len()].copy_from_slice(coeffs);
        Ok(f)
    }

    pub fn covector(v: &[f64; DIM]) -> Self {
        let mut f = KForm::zero(1);
        f.coeffs[..DIM].copy_from_slice(v);
        f
    }

    /// Basis element `e^{i1...ik}` from 1-based increasing coordinates.
    pub fn basis(indices: &[usize]) -> Result<Self> {
        let mi = MultiIndex::new(indices)?;
        let mut f = KForm::zero(mi.degree());
        f.coeffs[mi.ordinal()] = 1.0;
        Ok(f)
    }

    /// Sum of signed basis terms, e.g. `[(1.0, &[1,2,3]), (-1.0, &[2,5,7])]`.
    pub fn from_terms(degree: usize, terms: &[(f64, &[usize])]) -> Result<Self> {
        let mut f = KForm::zero(degree);
        for &(c, idx) in terms {
            let mi = MultiIndex::new(idx)?;
            if mi.degree() != degree {
                return Err(Error::DegreeMismatch {
                    expected: degree,
                    found: mi.degree(),
                });
            }
            f.coeffs[mi.ordinal()] += c;
        }
        Ok(f)
    }

    pub fn volume() -> Self {
        let mut f = KForm::zero(DIM);
        f.coeffs[0] = 1.0;
        f
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs[..BINOM7[self.degree]]
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs[..BINOM7[self.degree]]
    }

    pub fn get(&self, mi: MultiIndex) -> f64 {
        if mi.degree() != self.degree {
            return 0.0;
        }
        self.coeffs[mi.ordinal()]
    }

    /// Coefficient of `e^{indices}` (1-based, increasing).
    pub fn coeff(&self, indices: &[usize]) -> Result<f64> {
        let mi = MultiIndex::new(indices)?;
        if mi.degree() != self.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: mi.degree(),
            });
        }
        Ok(self.coeffs[mi.ordinal()])
    }

    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
        self.coeffs()
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(move |(i, &c)| (MultiIndex::from_ordinal(self.degree, i), c))
    }

    pub fn norm_euclid(&self) -> f64 {
        self.coeffs().iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs().iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn norm(&self, g: &Metric7) -> f64 {
        inner(self, self, g).map(|x| x.max(0.0).sqrt()).unwrap_or(f64::NAN)
    }

    pub fn dist(&self, other: &KForm) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|c| c.is_finite())
    }
}

impl fmt::Debug for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KForm<{}>[", self.degree)?;
        let mut first = true;
        for (mi, c) in self.terms() {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{c:+}{mi:?}")?;
            first = false;
        }
        write!(f, "]")
    }
}

impl Add for KForm {
    type Output = KForm;
    fn add(mut self, rhs: KForm) -> KForm {
        self += rhs;
        self
    }
}

impl AddAssign for KForm {
    fn add_assign(&mut self, rhs: KForm) {
        assert_eq!(self.degree, rhs.degree, "adding forms of different degree");
        for i in 0..BINOM7[self.degree] {
            self.coeffs[i] += rhs.coeffs[i];
        }
    }
}

impl Sub for KForm {
    type Output = KForm;
    fn sub(mut self, rhs: KForm) -> KForm {
        self -= rhs;
        self
    }
}

impl SubAssign for KForm {
    fn sub_assign(&mut self, rhs: KForm) {
        assert_eq!(self.degree, rhs.degree, "subtracting forms of different degree");
        for i in 0..BINOM7[self.degree] {
            self.coeffs[i] -= rhs.coeffs[i];
        }
    }
}

impl Neg for KForm {
    type Output = KForm;
    fn neg(self) -> KForm {
        self * -1.0
    }
}

impl Mul<f64> for KForm {
    type Output = KForm;
    fn mul(mut self, s: f64) -> KForm {
        for c in self.coeffs.iter_mut() {
            *c *= s;
        }
        self
    }
}

impl Mul<KForm> for f64 {
    type Output = KForm;
    fn mul(self, f: KForm) -> KForm {
        f * self
    }
}

/// Symmetric positive-definite metric on R^7 with cached inverse and
/// Cholesky factor.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric7 {
    g: Mat7,
    inv: Mat7,
    chol: Mat7,
    det: f64,
}

impl Metric7 {
    pub fn new(g: Mat7) -> Result<Self> {
        let scale = g.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        if !g.iter().flatten().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("metric".into()));
        }
        for i in 0..DIM {
            for j in (i + 1)..DIM {
                if (g[i][j] - g[j][i]).abs() > 1e-12 * scale.max(1.0) {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        let na = nalgebra::SMatrix::<f64, 7, 7>::from_fn(|r, c| 0.5 * (g[r][c] + g[c][r]));
        let ch = na.cholesky().ok_or(Error::NotPositiveDefinite)?;
        let l = ch.l();
        let det = (0..DIM).map(|i| l[(i, i)] * l[(i, i)]).product::<f64>();
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let inv = ch.inverse();
        Ok(Metric7 {
            g: std::array::from_fn(|r| std::array::from_fn(|c| na[(r, c)])),
            inv: std::array::from_fn(|r| std::array::from_fn(|c| inv[(r, c)])),
            chol: std::array::from_fn(|r| std::array::from_fn(|c| l[(r, c)])),
            det,
        })
    }

    pub(crate) fn from_parts(g: Mat7, inv: Mat7, chol: Mat7, det: f64) -> Self {
        Metric7 { g, inv, chol, det }
    }

    pub fn identity() -> Self {
        let id = kernels::identity7();
        Metric7 {
            g: id,
            inv: id,
            chol: id,
            det: 1.0,
        }
    }

    pub fn g(&self) -> &Mat7 {
        &self.g
    }

    pub fn inverse(&self) -> &Mat7 {
        &self.inv
    }

    /// Lower-triangular `C` with `g = C C^T`.
    pub fn cholesky(&self) -> &Mat7 {
        &self.chol
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn sqrt_det(&self) -> f64 {
        self.det.sqrt()
    }

    /// `Λ^k(g^{-1}) a`: all indices raised, so `<a,b>_g = raise(a) · b`.
    pub fn raise_into(&self, k: usize, a: &[f64], out: &mut [f64]) {
        if k <= 3 {
            transform_low(k, &self.inv, a, out);
        } else {
            transform_high(k, &self.g, 1.0 / self.det, a, out);
        }
    }

    /// `Λ^k(g) a`, inverse of [`Metric7::raise_into`].
    pub fn lower_into(&self, k: usize, a: &[f64], out: &mut [f64]) {
        if k <= 3 {
            transform_low(k, &self.g, a, out);
        } else {
            transform_high(k, &self.inv, self.det, a, out);
        }
    }

    /// Hodge star for this metric, positive orientation.
    pub fn star_into(&self, k: usize, a: &[f64], out: &mut [f64]) {
        let mut tmp = [0.0; MAX_COMPONENTS];
        if k <= 3 {
            transform_low(k, &self.inv, a, &mut tmp[..BINOM7[k]]);
            star_euclid(k, &tmp[..BINOM7[k]], out);
            let s = self.sqrt_det();
            for o in out.iter_mut().take(BINOM7[DIM - k]) {
                *o *= s;
            }
        } else {
            let q = DIM - k;
            star_euclid(k, a, &mut tmp[..BINOM7[q]]);
            transform_low(q, &self.g, &tmp[..BINOM7[q]], out);
            let s = 1.0 / self.sqrt_det();
            for o in out.iter_mut().take(BINOM7[q]) {
                *o *= s;
            }
        }
    }

    pub fn raise(&self, a: &KForm) -> KForm {
        let mut r = KForm::zero(a.degree);
        self.raise_into(a.degree, a.coeffs(), &mut r.coeffs[..BINOM7[a.degree]]);
        r
    }

    pub fn lower(&self, a: &KForm) -> KForm {
        let mut r = KForm::zero(a.degree);
        self.lower_into(a.degree, a.coeffs(), &mut r.coeffs[..BINOM7[a.degree]]);
        r
    }

    /// Index-raised vector of a 1-form, as plain components.
    pub fn sharp(&self, a: &KForm) -> [f64; DIM] {
        let r = self.raise(a);
        std::array::from_fn(|i| r.coeffs[i])
    }

    pub fn flat(&self, v: &[f64; DIM]) -> KForm {
        self.lower(&KForm::covector(v))
    }
}

/// `a ∧ b`.
pub fn wedge(a: &KForm, b: &KForm) -> Result<KForm> {
    let (p, q) = (a.degree, b.degree);
    if p + q > DIM {
        return Err(Error::DegreeOverflow(p, q));
    }
    let mut r = KForm::zero(p + q);
    wedge_acc(p, a.coeffs(), q, b.coeffs(), 1.0, &mut r.coeffs[..BINOM7[p + q]]);
    Ok(r)
}

/// Interior product `v ⌟ a` with a vector given in coordinates.
pub fn interior(v: &[f64; DIM], a: &KForm) -> Result<KForm> {
    if a.degree == 0 {
        return Err(Error::InvalidDegree(0));
    }
    let mut r = KForm::zero(a.degree - 1);
    interior_acc(a.degree, v, a.coeffs(), &mut r.coeffs[..BINOM7[a.degree - 1]]);
    Ok(r)
}

/// Metric inner product of two forms of equal degree.
pub fn inner(a: &KForm, b: &KForm, g: &Metric7) -> Result<f64> {
    if a.degree != b.degree {
        return Err(Error::DegreeMismatch {
            expected: a.degree,
            found: b.degree,
        });
    }
    let ra = g.raise(a);
    Ok(ra.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x * y).sum())
}

/// Hodge star. Satisfies `b ∧ *a = <b, a>_g dvol_g` with
/// `dvol_g = ± sqrt(det g) e^{1..7}`.
pub fn hodge_star(a: &KForm, g: &Metric7, orient: Orientation) -> KForm {
    let mut r = KForm::zero(DIM - a.degree);
    g.star_into(a.degree, a.coeffs(), &mut r.coeffs[..BINOM7[DIM - a.degree]]);
    r * orient.sign()
}

/// Euclidean Hodge star, positive orientation.
pub fn star_e(a: &KForm) -> KForm {
    let mut r = KForm::zero(DIM - a.degree);
    star_euclid(a.degree, a.coeffs(), &mut r.coeffs[..BINOM7[DIM - a.degree]]);
    r
}

/// Adjoint of `α ↦ s ∧ α`: the unique `r` of degree `deg c - deg s` with
/// `<r, α>_g = <s ∧ α, c>_g` for every `α`.
pub fn wedge_adjoint(s: &KForm, c: &KForm, g: &Metric7) -> Result<KForm> {
    if s.degree > c.degree {
        return Err(Error::DegreeMismatch {
            expected: s.degree,
            found: c.degree,
        });
    }
    let q = c.degree - s.degree;
    let rc = g.raise(c);
    let mut r = KForm::zero(q);
    wedge_adjoint_acc(s.degree, s.coeffs(), q, rc.coeffs(), 1.0, r.coeffs_mut());
    Ok(g.lower(&r))
}

/// `out += scale * W_s^T c` where `W_s α = s ∧ α` in plain coefficients.
#[inline]
pub(crate) fn wedge_adjoint_acc(p: usize, s: &[f64], q: usize, c: &[f64], scale: f64, out: &mut [f64]) {
    for t in &tables().wedge[p][q] {
        out[t.b as usize] += scale * t.sign * s[t.a as usize] * c[t.out as usize];
    }
}

/// `e123 + e145 + e167 + e246 − e257 − e347 − e356`.
pub fn sigma_std() -> KForm {
    KForm::from_terms(
        3,
        &[
            (1.0, &[1, 2, 3]),
            (1.0, &[1, 4, 5]),
            (1.0, &[1, 6, 7]),
            (1.0, &[2, 4, 6]),
            (-1.0, &[2, 5, 7]),
            (-1.0, &[3, 4, 7]),
            (-1.0, &[3, 5, 6]),
        ],
    )
    .expect("static multi-indices")
}

/// `*σ_std` for the Euclidean metric.
pub fn psi_std() -> KForm {
    star_e(&sigma_std())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn form_strategy(k: usize) -> impl Strategy<Value = KForm> {
        prop::collection::vec(-1.0f64..1.0, BINOM7[k])
            .prop_map(move |v| KForm::from_slice(k, &v).unwrap())
    }

    fn metric_strategy() -> impl Strategy<Value = Metric7> {
        prop::collection::vec(-0.3f64..0.3, 49).prop_map(|v| {
            // g = A A^T with A near the identity
            let mut a = kernels::identity7();
            for i in 0..DIM {
                for j in 0..DIM {
                    a[i][j] += v[i * DIM + j];
                }
            }
            let g = kernels::mat_mul(&a, &kernels::transpose(&a));
            Metric7::new(g).unwrap()
        })
    }

    /// Star through an orthonormal coframe: `*_g = Λ(C) *_E Λ(C^{-1})`.
    fn star_via_cholesky(a: &KForm, g: &Metric7) -> KForm {
        let c = *g.cholesky();
        let cn = nalgebra::SMatrix::<f64, 7, 7>::from_fn(|r, s| c[r][s]);
        let ci = cn.try_inverse().unwrap();
        let ci: Mat7 = std::array::from_fn(|r| std::array::from_fn(|s| ci[(r, s)]));
        let apply = |m: &Mat7, f: &KForm| -> KForm {
            let k = f.degree();
            let mut r = KForm::zero(k);
            if k <= 3 {
                transform_low(k, m, f.coeffs(), r.coeffs_mut());
            } else {
                let mn = nalgebra::SMatrix::<f64, 7, 7>::from_fn(|x, y| m[x][y]);
                let it = mn.try_inverse().unwrap().transpose();
                let it: Mat7 = std::array::from_fn(|x| std::array::from_fn(|y| it[(x, y)]));
                transform_high(k, &it, mn.determinant(), f.coeffs(), r.coeffs_mut());
            }
            r
        };
        // orthonormal coframe θ = Λ(C) e, so coefficients in θ are Λ(C^{-1}) a
        let ortho = apply(&ci, a);
        apply(&c, &star_e(&ortho))
    }

    #[test]
    fn sigma_self_inner_is_seven() {
        let s = sigma_std();
        assert!((inner(&s, &s, &Metric7::identity()).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_wedge_star_sigma_is_seven_vol() {
        let s = sigma_std();
        let w = wedge(&s, &psi_std()).unwrap();
        assert!((w.coeffs()[0] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn psi_std_terms() {
        let expected = KForm::from_terms(
            4,
            &[
                (1.0, &[4, 5, 6, 7]),
                (1.0, &[2, 3, 6, 7]),
                (1.0, &[2, 3, 4, 5]),
                (1.0, &[1, 3, 5, 7]),
                (-1.0, &[1, 3, 4, 6]),
                (-1.0, &[1, 2, 5, 6]),
                (-1.0, &[1, 2, 4, 7]),
            ],
        )
        .unwrap();
        assert!(psi_std().dist(&expected) < 1e-15, "{:?}", psi_std());
    }

    #[test]
    fn sigma_wedge_e1_example() {
        let e1 = KForm::basis(&[1]).unwrap();
        let w = wedge(&sigma_std(), &e1).unwrap();
        let expected = KForm::from_terms(
            4,
            &[(-1.0, &[1, 2, 4, 6]), (1.0, &[1, 2, 5, 7]), (1.0, &[1, 3, 4, 7]), (1.0, &[1, 3, 5, 6])],
        )
        .unwrap();
        assert!(w.dist(&expected) < 1e-15);
    }

    #[test]
    fn wedge_degree_overflow() {
        let a = KForm::zero(4);
        assert_eq!(wedge(&a, &a), Err(Error::DegreeOverflow(4, 4)));
    }

    #[test]
    fn interior_of_scalar_fails() {
        assert!(interior(&[1.0; 7], &KForm::scalar(1.0)).is_err());
    }

    #[test]
    fn star_of_e123() {
        let s = star_e(&KForm::basis(&[1, 2, 3]).unwrap());
        assert_eq!(s, KForm::basis(&[4, 5, 6, 7]).unwrap());
    }

    #[test]
    fn multi_index_rejects_unsorted() {
        assert!(MultiIndex::new(&[2, 1]).is_err());
        assert!(MultiIndex::new(&[0]).is_err());
        assert!(MultiIndex::new(&[8]).is_err());
    }

    proptest! {
        #[test]
        fn wedge_graded_commutative(p in 0usize..4, q in 0usize..4, seed in any::<u64>()) {
            let mut rng = crate::rng::SeededRng::new(seed);
            let a = rng.kform(p);
            let b = rng.kform(q);
            let ab = wedge(&a, &b).unwrap();
            let ba = wedge(&b, &a).unwrap();
            let s = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!(ab.dist(&(ba * s)) < 1e-13);
        }

        #[test]
        fn wedge_associative(seed in any::<u64>()) {
            let mut rng = crate::rng::SeededRng::new(seed);
            let (a, b, c) = (rng.kform(1), rng.kform(2), rng.kform(3));
            let l = wedge(&wedge(&a, &b).unwrap(), &c).unwrap();
            let r = wedge(&a, &wedge(&b, &c).unwrap()).unwrap();
            prop_assert!(l.dist(&r) < 1e-13);
        }

        #[test]
        fn star_involution(k in 0usize..8, g in metric_strategy(), seed in any::<u64>()) {
            let a = crate::rng::SeededRng::new(seed).kform(k);
            let o = Orientation::Positive;
            let ss = hodge_star(&hodge_star(&a, &g, o), &g, o);
            prop_assert!(ss.dist(&a) < 1e-10);
        }

        #[test]
        fn star_defining_relation(k in 0usize..8, g in metric_strategy(), seed in any::<u64>()) {
            let mut rng = crate::rng::SeededRng::new(seed);
            let a = rng.kform(k);
            let b = rng.kform(k);
            let lhs = wedge(&b, &hodge_star(&a, &g, Orientation::Positive)).unwrap().coeffs()[0];
            let rhs = inner(&b, &a, &g).unwrap() * g.sqrt_det();
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
        }

        #[test]
        fn star_matches_orthonormal_frame(k in 0usize..8, g in metric_strategy(), seed in any::<u64>()) {
            let a = crate::rng::SeededRng::new(seed).kform(k);
            let s1 = hodge_star(&a, &g, Orientation::Positive);
            let s2 = star_via_cholesky(&a, &g);
            prop_assert!(s1.dist(&s2) < 1e-10, "{:?} vs {:?}", s1, s2);
        }

        #[test]
        fn inner_symmetric_positive(g in metric_strategy(), a in form_strategy(3), b in form_strategy(3)) {
            let x = inner(&a, &b, &g).unwrap();
            let y = inner(&b, &a, &g).unwrap();
            prop_assert!((x - y).abs() < 1e-11);
            prop_assert!(inner(&a, &a, &g).unwrap() >= 0.0);
        }

        #[test]
        fn wedge_adjoint_defining_relation(p in 1usize..4, q in 0usize..4, g in metric_strategy(), seed in any::<u64>()) {
            let mut rng = crate::rng::SeededRng::new(seed);
            let s = rng.kform(p);
            let c = rng.kform(p + q);
            let al = rng.kform(q);
            let r = wedge_adjoint(&s, &c, &g).unwrap();
            let lhs = inner(&r, &al, &g).unwrap();
            let rhs = inner(&wedge(&s, &al).unwrap(), &c, &g).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
        }

        #[test]
        fn interior_is_antiderivation(seed in any::<u64>()) {
            let mut rng = crate::rng::SeededRng::new(seed);
            let v: [f64; 7] = std::array::from_fn(|_| rng.uniform(-1.0, 1.0));
            let a = rng.kform(2);
            let b = rng.kform(3);
            let l = interior(&v, &wedge(&a, &b).unwrap()).unwrap();
            let r = wedge(&interior(&v, &a).unwrap(), &b).unwrap()
                + wedge(&a, &interior(&v, &b).unwrap()).unwrap();
            prop_assert!(l.dist(&r) < 1e-13);
        }
    }
}
