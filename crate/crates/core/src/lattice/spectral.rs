//! Multi-dimensional FFTs over the active axes of a periodic grid.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Grid;

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        if let Some(f) = p.1.get(&(n, inverse)) {
            return f.clone();
        }
        let f = if inverse {
            p.0.plan_fft_inverse(n)
        } else {
            p.0.plan_fft_forward(n)
        };
        p.1.insert((n, inverse), f.clone());
        f
    })
}

/// In-place unnormalised transform along every active axis.
pub fn fft_nd(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    let m = grid.m();
    let fft = plan(n, inverse);
    let total = data.len();
    debug_assert_eq!(total, grid.n_sites());
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut lines: Vec<Complex64> = Vec::new();
    for axis in 0..m {
        let stride = n.pow((m - 1 - axis) as u32);
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        let outer = total / (n * stride);
        lines.resize(stride * n, Complex64::new(0.0, 0.0));
        for o in 0..outer {
            let base = o * n * stride;
            for j in 0..n {
                let src = &data[base + j * stride..base + (j + 1) * stride];
                for (i, v) in src.iter().enumerate() {
                    lines[i * n + j] = *v;
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            for j in 0..n {
                let dst = &mut data[base + j * stride..base + (j + 1) * stride];
                for (i, v) in dst.iter_mut().enumerate() {
                    *v = lines[i * n + j];
                }
            }
        }
    }
}

/// Signed integer frequency of index `i` on an `n`-point axis.
pub fn frequency(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Per-site tables for spectral operators on a grid.
pub struct Wavenumbers {
    /// `k[a][site]`: angular wavenumber along active axis `a`, with the
    /// Nyquist mode set to zero for odd derivatives.
    pub k: Vec<Vec<f64>>,
    /// `Σ_a k_a^2`, consistent with the odd-derivative symbol.
    pub k2: Vec<f64>,
    /// Site of the mode `-k`.
    pub neg: Vec<usize>,
}

impl Wavenumbers {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n();
        let m = grid.m();
        let ns = grid.n_sites();
        let base = 2.0 * std::f64::consts::PI / grid.length();
        let mut k = vec![vec![0.0; ns]; m];
        let mut k2 = vec![0.0; ns];
        let mut neg = vec![0; ns];
        for s in 0..ns {
            let idx = grid.multi_index(s);
            let mut nidx = [0usize; 7];
            for a in 0..m {
                let f = frequency(idx[a], n);
                let kk = if n.is_multiple_of(2) && idx[a] == n / 2 {
                    0.0
                } else {
                    base * f as f64
                };
                k[a][s] = kk;
                k2[s] += kk * kk;
                nidx[a] = (n - idx[a]) % n;
            }
            neg[s] = grid.site(&nidx[..m]);
        }
        Wavenumbers { k, k2, neg }
    }

    /// Separates the transforms of two real arrays `f`, `g` from the
    /// transform `z` of `f + i g`.
    pub fn unpack(&self, z: &[Complex64], f: &mut [Complex64], g: &mut [Complex64]) {
        for s in 0..z.len() {
            let zc = z[self.neg[s]].conj();
            f[s] = (z[s] + zc) * 0.5;
            g[s] = (z[s] - zc) * Complex64::new(0.0, -0.5);
        }
    }
}
