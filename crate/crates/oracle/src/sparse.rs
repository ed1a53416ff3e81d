//! Minimal complex CSR matrices and the dense-operand products the master
//! equation needs.

use crate::C64;

/// Compressed sparse row matrix over complex doubles.
#[derive(Debug, Clone)]
pub struct Csr {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<C64>,
}

/// Coordinate-format builder; duplicate entries are summed.
#[derive(Debug, Clone)]
pub struct CooBuilder {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl CooBuilder {
    pub fn new(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, val: C64) {
        if val != C64::new(0.0, 0.0) {
            self.entries.push((row, col, val));
        }
    }

    pub fn build(mut self) -> Csr {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_counts = vec![0usize; self.dim + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<C64> = Vec::with_capacity(self.entries.len());
        let mut prev: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if prev == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_counts[r + 1] += 1;
                prev = Some((r, c));
            }
        }
        for i in 0..self.dim {
            row_counts[i + 1] += row_counts[i];
        }
        Csr { dim: self.dim, row_ptr: row_counts, cols, vals }
    }
}

impl Csr {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Csr {
        let mut b = CooBuilder::new(self.dim);
        for r in 0..self.dim {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                b.push(self.cols[idx], r, self.vals[idx].conj());
            }
        }
        b.build()
    }

    /// `out = A * B` with dense row-major `B` (dim x dim).
    pub fn mul_dense(&self, b: &[C64], out: &mut [C64]) {
        let n = self.dim;
        out.fill(C64::new(0.0, 0.0));
        for r in 0..n {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                let a = self.vals[idx];
                let k = self.cols[idx];
                let brow = &b[k * n..(k + 1) * n];
                let orow = &mut out[r * n..(r + 1) * n];
                for (o, &bb) in orow.iter_mut().zip(brow) {
                    *o += a * bb;
                }
            }
        }
    }

    /// `out = B * A^dagger` with dense row-major `B`, using `self = A`.
    pub fn mul_dense_left_dagger(&self, b: &[C64], out: &mut [C64]) {
        // (B A^H)[i, r] = sum_k B[i, k] conj(A[r, k])
        let n = self.dim;
        out.fill(C64::new(0.0, 0.0));
        for r in 0..n {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                let a = self.vals[idx].conj();
                let k = self.cols[idx];
                for i in 0..n {
                    out[i * n + r] += b[i * n + k] * a;
                }
            }
        }
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[C64], out: &mut [C64]) {
        for r in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[idx] * x[self.cols[idx]];
            }
            out[r] = acc;
        }
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let n = self.dim;
        let mut d = vec![C64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                d[r * n + self.cols[idx]] += self.vals[idx];
            }
        }
        d
    }
}

/// `tr(A rho)` for CSR `A` and dense row-major `rho`.
pub fn trace_product(a: &Csr, rho: &[C64]) -> C64 {
    let n = a.dim;
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..n {
        for idx in a.row_ptr[r]..a.row_ptr[r + 1] {
            acc += a.vals[idx] * rho[a.cols[idx] * n + r];
        }
    }
    acc
}

pub fn trace(rho: &[C64], n: usize) -> C64 {
    (0..n).map(|i| rho[i * n + i]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn coo_builds_and_merges() {
        let mut b = CooBuilder::new(2);
        b.push(0, 1, c(1.0, 0.0));
        b.push(0, 1, c(0.5, 0.0));
        b.push(1, 0, c(0.0, 2.0));
        let m = b.build();
        assert_eq!(m.nnz(), 2);
        let d = m.to_dense();
        assert_eq!(d[1], c(1.5, 0.0));
        assert_eq!(d[2], c(0.0, 2.0));
    }

    #[test]
    fn products_match_dense_arithmetic() {
        let mut b = CooBuilder::new(2);
        b.push(0, 0, c(1.0, 1.0));
        b.push(0, 1, c(2.0, 0.0));
        b.push(1, 1, c(0.0, -1.0));
        let a = b.build();
        let rho = [c(1.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(2.0, 0.0)];
        let mut out = [c(0.0, 0.0); 4];
        a.mul_dense(&rho, &mut out);
        // A*rho by hand
        assert_eq!(out[0], c(1.0, 1.0) * rho[0] + c(2.0, 0.0) * rho[2]);
        assert_eq!(out[3], c(0.0, -1.0) * rho[3]);
        let mut out2 = [c(0.0, 0.0); 4];
        a.mul_dense_left_dagger(&rho, &mut out2);
        // (rho * A^H)[0,0] = rho[0,0]*conj(A[0,0]) + rho[0,1]*conj(A[0,1])
        assert_eq!(out2[0], rho[0] * c(1.0, -1.0) + rho[1] * c(2.0, 0.0));
        // trace product
        let tp = trace_product(&a, &rho);
        let dense = a.to_dense();
        let mut direct = c(0.0, 0.0);
        for i in 0..2 {
            for k in 0..2 {
                direct += dense[i * 2 + k] * rho[k * 2 + i];
            }
        }
        assert!((tp - direct).norm() < 1e-15);
    }

    #[test]
    fn dagger_is_conjugate_transpose() {
        let mut b = CooBuilder::new(2);
        b.push(0, 1, c(1.0, 2.0));
        let a = b.build().dagger();
        let d = a.to_dense();
        assert_eq!(d[2], c(1.0, -2.0));
    }
}
