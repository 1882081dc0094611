//! Allocation-free kernels on raw coefficient slices.
//!
//! These back both the `KForm` API and the per-site loops of the lattice
//! code. Slices are expected to have exactly `C(7, k)` entries.

use super::tables::{tables, DIM};

/// Row-major 7x7 matrix. `m[r][c]`.
pub type Mat7 = [[f64; DIM]; DIM];

pub const BINOM7: [usize; 8] = [1, 7, 21, 35, 35, 21, 7, 1];

/// `out += s * (a ∧ b)` for `a` of degree `p`, `b` of degree `q`.
#[inline]
pub fn wedge_acc(p: usize, a: &[f64], q: usize, b: &[f64], s: f64, out: &mut [f64]) {
    for t in &tables().wedge[p][q] {
        out[t.out as usize] += s * t.sign * a[t.a as usize] * b[t.b as usize];
    }
}

/// `out += v ⌟ a` for `a` of degree `k >= 1`.
#[inline]
pub fn interior_acc(k: usize, v: &[f64], a: &[f64], out: &mut [f64]) {
    let t = tables();
    for (vi, &vc) in v.iter().enumerate().take(DIM) {
        if vc == 0.0 {
            continue;
        }
        for term in &t.interior[k][vi] {
            out[term.out as usize] += vc * term.sign * a[term.input as usize];
        }
    }
}

/// `out = *_E a` (Euclidean metric, orientation `e^{1..7}`).
#[inline]
pub fn star_euclid(k: usize, a: &[f64], out: &mut [f64]) {
    for (i, &(c, s)) in tables().star[k].iter().enumerate() {
        out[c as usize] = s * a[i];
    }
}

/// Induced action `Λ^k(m)` on coefficient vectors for `k <= 3`.
///
/// Convention: a 1-form `e^i` maps to `Σ_j m[j][i] e^j`.
pub fn transform_low(k: usize, m: &Mat7, a: &[f64], out: &mut [f64]) {
    match k {
        0 => out[0] = a[0],
        1 => {
            for j in 0..DIM {
                let mut s = 0.0;
                for i in 0..DIM {
                    s += m[j][i] * a[i];
                }
                out[j] = s;
            }
        }
        2 => transform2(m, a, out),
        3 => transform3(m, a, out),
        _ => panic!("transform_low called with degree {k}"),
    }
}

fn transform2(m: &Mat7, a: &[f64], out: &mut [f64]) {
    let t = tables();
    let mut mm = [[0.0; DIM]; DIM];
    for (i, idx) in t.indices[2].iter().enumerate() {
        let (p, q) = (idx[0] as usize, idx[1] as usize);
        mm[p][q] = a[i];
        mm[q][p] = -a[i];
    }
    // P = m * M
    let mut pm = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        for c in 0..DIM {
            let mic = m[i][c];
            if mic == 0.0 {
                continue;
            }
            for b in 0..DIM {
                pm[i][b] += mic * mm[c][b];
            }
        }
    }
    for (o, idx) in t.indices[2].iter().enumerate() {
        let (i, j) = (idx[0] as usize, idx[1] as usize);
        let mut s = 0.0;
        for b in 0..DIM {
            s += pm[i][b] * m[j][b];
        }
        out[o] = s;
    }
}

fn transform3(m: &Mat7, a: &[f64], out: &mut [f64]) {
    let t = tables();
    let mut tt = [[[0.0; DIM]; DIM]; DIM];
    for (i, idx) in t.indices[3].iter().enumerate() {
        let v = a[i];
        if v == 0.0 {
            continue;
        }
        let (p, q, r) = (idx[0] as usize, idx[1] as usize, idx[2] as usize);
        tt[p][q][r] = v;
        tt[q][r][p] = v;
        tt[r][p][q] = v;
        tt[q][p][r] = -v;
        tt[p][r][q] = -v;
        tt[r][q][p] = -v;
    }
    // U[a][b][k] = Σ_c m[k][c] T[a][b][c]   (a < b)
    let mut u = [[[0.0; DIM]; DIM]; DIM];
    for x in 0..DIM {
        for y in (x + 1)..DIM {
            let row = &tt[x][y];
            let mut ur = [0.0; DIM];
            for (kk, urk) in ur.iter_mut().enumerate() {
                let mr = &m[kk];
                let mut s = 0.0;
                for c in 0..DIM {
                    s += mr[c] * row[c];
                }
                *urk = s;
            }
            u[x][y] = ur;
            for kk in 0..DIM {
                u[y][x][kk] = -ur[kk];
            }
        }
    }
    // V[a][j][k] = Σ_b m[j][b] U[a][b][k]   (j < k)
    let mut v = [[[0.0; DIM]; DIM]; DIM];
    for x in 0..DIM {
        let ux = &u[x];
        for j in 0..DIM {
            let mj = &m[j];
            for kk in (j + 1)..DIM {
                let mut s = 0.0;
                for b in 0..DIM {
                    s += mj[b] * ux[b][kk];
                }
                v[x][j][kk] = s;
            }
        }
    }
    for (o, idx) in t.indices[3].iter().enumerate() {
        let (i, j, kk) = (idx[0] as usize, idx[1] as usize, idx[2] as usize);
        let mi = &m[i];
        let mut s = 0.0;
        for x in 0..DIM {
            s += mi[x] * v[x][j][kk];
        }
        out[o] = s;
    }
}

/// `Λ^p(m) a` for `p >= 4` via `Λ^p(m) = det(m) *_E Λ^{7-p}(m^{-T}) *_E`.
pub fn transform_high(p: usize, m_inv_t: &Mat7, det_m: f64, a: &[f64], out: &mut [f64]) {
    let q = DIM - p;
    let mut s1 = [0.0; 35];
    let mut s2 = [0.0; 35];
    star_euclid(p, a, &mut s1[..BINOM7[q]]);
    if q == 0 {
        s2[0] = s1[0];
    } else {
        transform_low(q, m_inv_t, &s1[..BINOM7[q]], &mut s2[..BINOM7[q]]);
    }
    star_euclid(q, &s2[..BINOM7[q]], out);
    for o in out.iter_mut().take(BINOM7[p]) {
        *o *= det_m;
    }
}

pub fn mat_mul(a: &Mat7, b: &Mat7) -> Mat7 {
    let mut c = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        for k in 0..DIM {
            let aik = a[i][k];
            for j in 0..DIM {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn transpose(a: &Mat7) -> Mat7 {
    let mut t = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn identity7() -> Mat7 {
    let mut m = [[0.0; DIM]; DIM];
    for (i, r) in m.iter_mut().enumerate() {
        r[i] = 1.0;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Compound matrix entry by explicit minors.
    fn minor(m: &Mat7, rows: &[u8], cols: &[u8]) -> f64 {
        let k = rows.len();
        let mut a = vec![vec![0.0; k]; k];
        for (r, &ri) in rows.iter().enumerate() {
            for (c, &ci) in cols.iter().enumerate() {
                a[r][c] = m[ri as usize][ci as usize];
            }
        }
        let mat = nalgebra::DMatrix::from_fn(k, k, |r, c| a[r][c]);
        mat.determinant()
    }

    fn compound_apply(k: usize, m: &Mat7, a: &[f64]) -> Vec<f64> {
        let t = tables();
        (0..BINOM7[k])
            .map(|j| {
                (0..BINOM7[k])
                    .map(|i| minor(m, &t.indices[k][j][..k], &t.indices[k][i][..k]) * a[i])
                    .sum()
            })
            .collect()
    }

    fn pseudo_random(seed: u64, n: usize) -> Vec<f64> {
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..n)
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((x >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    fn random_mat(seed: u64) -> Mat7 {
        let v = pseudo_random(seed, 49);
        let mut m = identity7();
        for i in 0..DIM {
            for j in 0..DIM {
                m[i][j] += 0.4 * v[i * DIM + j];
            }
        }
        m
    }

    #[test]
    fn low_transform_matches_minors() {
        for k in 1..=3 {
            let m = random_mat(k as u64 + 3);
            let a = pseudo_random(k as u64, BINOM7[k]);
            let mut out = vec![0.0; BINOM7[k]];
            transform_low(k, &m, &a, &mut out);
            let oracle = compound_apply(k, &m, &a);
            for (x, y) in out.iter().zip(&oracle) {
                assert!((x - y).abs() < 1e-12, "k={k}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn high_transform_matches_minors() {
        for p in 4..=7 {
            let m = random_mat(p as u64 + 11);
            let nm = nalgebra::SMatrix::<f64, 7, 7>::from_fn(|r, c| m[r][c]);
            let inv = nm.try_inverse().unwrap();
            let inv_t: Mat7 = std::array::from_fn(|r| std::array::from_fn(|c| inv[(c, r)]));
            let a = pseudo_random(p as u64, BINOM7[p]);
            let mut out = vec![0.0; BINOM7[p]];
            transform_high(p, &inv_t, nm.determinant(), &a, &mut out);
            let oracle = compound_apply(p, &m, &a);
            for (x, y) in out.iter().zip(&oracle) {
                assert!((x - y).abs() < 1e-11, "p={p}: {x} vs {y}");
            }
        }
    }
}
