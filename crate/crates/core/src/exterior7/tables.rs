//! Static index tables for the exterior algebra of R^7.
//!
//! Multi-indices are stored as 7-bit masks (bit `i` set means coordinate
//! `i + 1` is present). Within a degree, basis elements are ordered
//! lexicographically by their sorted index tuples.

use std::sync::OnceLock;

pub(crate) const DIM: usize = 7;

#[derive(Clone, Copy, Debug)]
pub(crate) struct WedgeTerm {
    pub a: u8,
    pub b: u8,
    pub out: u8,
    pub sign: f64,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct InteriorTerm {
    pub input: u8,
    pub out: u8,
    pub sign: f64,
}

pub(crate) struct Tables {
    pub basis: Vec<Vec<u8>>,
    pub ordinal: [u8; 128],
    /// `wedge[p][q]`, populated for `p + q <= 7`.
    pub wedge: Vec<Vec<Vec<WedgeTerm>>>,
    /// `star[k][i] = (ordinal of complement, sign)`.
    pub star: Vec<Vec<(u8, f64)>>,
    /// `interior[k][v]`: terms of `e_v ⌟` on degree-k basis elements.
    pub interior: Vec<Vec<Vec<InteriorTerm>>>,
    /// `indices[k][i]`: sorted 0-based coordinates of basis element `i`.
    pub indices: Vec<Vec<[u8; DIM]>>,
}

pub(crate) fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(build)
}

/// Sign of `e^A ∧ e^B` relative to `e^{A ∪ B}` for disjoint masks.
pub(crate) fn merge_sign(a: u8, b: u8) -> f64 {
    let mut inversions = 0u32;
    for i in 0..DIM {
        if a & (1 << i) != 0 {
            // elements of b smaller than i must move past i
            let below = b & ((1u8 << i) - 1);
            inversions += below.count_ones();
        }
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn build() -> Tables {
    let mut basis: Vec<Vec<u8>> = vec![Vec::new(); DIM + 1];
    // lexicographic order of sorted tuples
    fn rec(start: usize, k: usize, mask: u8, out: &mut Vec<u8>) {
        if k == 0 {
            out.push(mask);
            return;
        }
        for i in start..DIM {
            rec(i + 1, k - 1, mask | (1 << i), out);
        }
    }
    for (k, b) in basis.iter_mut().enumerate() {
        rec(0, k, 0, b);
    }
    let mut ordinal = [0u8; 128];
    for b in &basis {
        for (i, &m) in b.iter().enumerate() {
            ordinal[m as usize] = i as u8;
        }
    }
    let mut wedge = vec![vec![Vec::new(); DIM + 1]; DIM + 1];
    for p in 0..=DIM {
        for q in 0..=(DIM - p) {
            let mut terms = Vec::new();
            for (i, &ma) in basis[p].iter().enumerate() {
                for (j, &mb) in basis[q].iter().enumerate() {
                    if ma & mb == 0 {
                        terms.push(WedgeTerm {
                            a: i as u8,
                            b: j as u8,
                            out: ordinal[(ma | mb) as usize],
                            sign: merge_sign(ma, mb),
                        });
                    }
                }
            }
            wedge[p][q] = terms;
        }
    }
    let full: u8 = 0x7f;
    let mut star = vec![Vec::new(); DIM + 1];
    for k in 0..=DIM {
        for &m in &basis[k] {
            let c = full & !m;
            star[k].push((ordinal[c as usize], merge_sign(m, c)));
        }
    }
    let mut interior = vec![vec![Vec::new(); DIM]; DIM + 1];
    for k in 1..=DIM {
        for v in 0..DIM {
            for (i, &m) in basis[k].iter().enumerate() {
                if m & (1 << v) != 0 {
                    let pos = (m & ((1u8 << v) - 1)).count_ones();
                    let sign = if pos.is_multiple_of(2) { 1.0 } else { -1.0 };
                    interior[k][v].push(InteriorTerm {
                        input: i as u8,
                        out: ordinal[(m & !(1 << v)) as usize],
                        sign,
                    });
                }
            }
        }
    }
    let mut indices = vec![Vec::new(); DIM + 1];
    for k in 0..=DIM {
        for &m in &basis[k] {
            let mut idx = [0u8; DIM];
            let mut c = 0;
            for i in 0..DIM {
                if m & (1 << i) != 0 {
                    idx[c] = i as u8;
                    c += 1;
                }
            }
            indices[k].push(idx);
        }
    }
    Tables {
        basis,
        ordinal,
        wedge,
        star,
        interior,
        indices,
    }
}
