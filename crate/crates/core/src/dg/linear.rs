//! Block-tridiagonal LU (block Thomas algorithm) on dense nalgebra blocks.

use nalgebra::{DMatrix, DVectorViewMut, Dyn, LU};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BlockTridiag {
    pub m: usize,
    /// `lower[k]` couples block row `k` to unknowns of block `k - 1`; `lower[0]` is ignored.
    pub lower: Vec<DMatrix<f64>>,
    pub diag: Vec<DMatrix<f64>>,
    /// `upper[k]` couples block row `k` to block `k + 1`; the last one is ignored.
    pub upper: Vec<DMatrix<f64>>,
}

impl BlockTridiag {
    pub fn zeros(n_blocks: usize, m: usize) -> Self {
        let z = || (0..n_blocks).map(|_| DMatrix::zeros(m, m)).collect::<Vec<_>>();
        Self {
            m,
            lower: z(),
            diag: z(),
            upper: z(),
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let (n, m) = (self.n_blocks(), self.m);
        let mut a = DMatrix::zeros(n * m, n * m);
        for k in 0..n {
            a.view_mut((k * m, k * m), (m, m)).copy_from(&self.diag[k]);
            if k > 0 {
                a.view_mut((k * m, (k - 1) * m), (m, m)).copy_from(&self.lower[k]);
            }
            if k + 1 < n {
                a.view_mut((k * m, (k + 1) * m), (m, m)).copy_from(&self.upper[k]);
            }
        }
        a
    }

    pub fn factor(self) -> Result<BlockTridiagLu> {
        let n = self.n_blocks();
        let m = self.m;
        let mut lus: Vec<LU<f64, Dyn, Dyn>> = Vec::with_capacity(n);
        let mut x: Vec<Option<DMatrix<f64>>> = Vec::with_capacity(n);
        let lower: Vec<Option<DMatrix<f64>>> = self
            .lower
            .into_iter()
            .enumerate()
            .map(|(k, a)| (k > 0 && a.iter().any(|&v| v != 0.0)).then_some(a))
            .collect();
        let mut diag = self.diag;
        let upper = self.upper;
        for k in 0..n {
            let mut d = std::mem::replace(&mut diag[k], DMatrix::zeros(0, 0));
            if let (Some(a), Some(Some(xp))) = (&lower[k], x.last()) {
                d -= a * xp;
            }
            let lu = d.lu();
            if !lu.is_invertible() {
                return Err(Error::Singular { block: k });
            }
            let xk = if k + 1 < n && upper[k].iter().any(|&v| v != 0.0) {
                let mut u = upper[k].clone();
                lu.solve_mut(&mut u);
                Some(u)
            } else {
                None
            };
            lus.push(lu);
            x.push(xk);
        }
        Ok(BlockTridiagLu { m, lus, x, lower })
    }
}

pub struct BlockTridiagLu {
    m: usize,
    lus: Vec<LU<f64, Dyn, Dyn>>,
    /// `D'_k^{-1} U_k`
    x: Vec<Option<DMatrix<f64>>>,
    lower: Vec<Option<DMatrix<f64>>>,
}

impl BlockTridiagLu {
    pub fn dim(&self) -> usize {
        self.m * self.lus.len()
    }

    /// Solves in place for a single right-hand side.
    pub fn solve(&self, b: &mut [f64]) {
        let m = self.m;
        let n = self.lus.len();
        let mut tmp = vec![0.0; m];
        for k in 0..n {
            if let Some(a) = &self.lower[k] {
                let (prev, cur) = b.split_at_mut(k * m);
                let g = &prev[(k - 1) * m..];
                for i in 0..m {
                    let mut s = 0.0;
                    for j in 0..m {
                        s += a[(i, j)] * g[j];
                    }
                    tmp[i] = s;
                }
                for i in 0..m {
                    cur[i] -= tmp[i];
                }
            }
            let mut v = DVectorViewMut::from_slice(&mut b[k * m..(k + 1) * m], m);
            self.lus[k].solve_mut(&mut v);
        }
        for k in (0..n.saturating_sub(1)).rev() {
            if let Some(xk) = &self.x[k] {
                let (cur, next) = b.split_at_mut((k + 1) * m);
                let nx = &next[..m];
                let c = &mut cur[k * m..];
                for i in 0..m {
                    let mut s = 0.0;
                    for j in 0..m {
                        s += xk[(i, j)] * nx[j];
                    }
                    c[i] -= s;
                }
            }
        }
    }

    /// Solves in place for every column of `b`.
    pub fn solve_matrix(&self, b: &mut DMatrix<f64>) {
        let m = self.m;
        let n = self.lus.len();
        let cols = b.ncols();
        for k in 0..n {
            if let Some(a) = &self.lower[k] {
                let upd = a * b.view(((k - 1) * m, 0), (m, cols));
                let mut cur = b.view_mut((k * m, 0), (m, cols));
                cur -= upd;
            }
            let mut cur = b.view_mut((k * m, 0), (m, cols));
            self.lus[k].solve_mut(&mut cur);
        }
        for k in (0..n.saturating_sub(1)).rev() {
            if let Some(xk) = &self.x[k] {
                let upd = xk * b.view(((k + 1) * m, 0), (m, cols));
                let mut cur = b.view_mut((k * m, 0), (m, cols));
                cur -= upd;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, m: usize, seed: u64) -> BlockTridiag {
        // deterministic pseudo-random, diagonally dominant
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut bt = BlockTridiag::zeros(n, m);
        for k in 0..n {
            for i in 0..m {
                for j in 0..m {
                    bt.diag[k][(i, j)] = next() + if i == j { 4.0 } else { 0.0 };
                    bt.lower[k][(i, j)] = if k % 3 == 1 { 0.0 } else { next() };
                    bt.upper[k][(i, j)] = next();
                }
            }
        }
        bt
    }

    #[test]
    fn matches_dense_solve() {
        let bt = sample(7, 3, 42);
        let dense = bt.to_dense();
        let lu = bt.factor().unwrap();
        let b: Vec<f64> = (0..21).map(|i| (i as f64).sin()).collect();
        let mut x = b.clone();
        lu.solve(&mut x);
        let r = &dense * nalgebra::DVector::from_column_slice(&x);
        for i in 0..21 {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
        let mut bm = DMatrix::from_fn(21, 4, |i, j| ((i * 7 + j) as f64).cos());
        let orig = bm.clone();
        lu.solve_matrix(&mut bm);
        let r = &dense * &bm;
        assert!((r - orig).amax() < 1e-12);
    }

    #[test]
    fn reports_singular_block() {
        let mut bt = BlockTridiag::zeros(3, 2);
        bt.diag[0] = DMatrix::identity(2, 2);
        bt.diag[2] = DMatrix::identity(2, 2);
        assert!(matches!(bt.factor(), Err(Error::Singular { block: 1 })));
    }
}
