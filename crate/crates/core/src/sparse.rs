//! Compressed sparse rows and a banded Cholesky factorisation.

use crate::error::{Error, Result};

/// Symmetric or general sparse matrix in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n x n` matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(r, c, _) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut raw = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            raw[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..n {
            let row = &mut raw[counts[r]..counts[r + 1]];
            row.sort_by_key(|e| e.0);
            for &(c, v) in row.iter() {
                if cols.len() > row_ptr[r] && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for (r, out) in y.iter_mut().enumerate() {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n)
            .map(|r| x[r] * self.row(r).map(|(c, v)| v * y[c]).sum::<f64>())
            .sum()
    }

    /// Half-bandwidth `max |r - c|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|r| self.row(r).map(move |(c, _)| r.abs_diff(c)))
            .max()
            .unwrap_or(0)
    }

    /// `self + s * other`; both must share the same dimension.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut trips = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.n {
            trips.extend(self.row(r).map(|(c, v)| (r, c, v)));
            trips.extend(other.row(r).map(|(c, v)| (r, c, s * v)));
        }
        CsrMatrix::from_triplets(self.n, &trips)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|r| self.row(r).all(|(c, v)| (v - self.get(c, r)).abs() <= tol))
    }
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite `a`. Stops when the residual drops below `rel_tol ‖b‖`.
pub fn pcg_jacobi(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.dim();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    if diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::numeric("non-positive diagonal in CG", 0.0));
    }
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        a.mul_vec_into(&p, &mut ap);
        let step = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= rel_tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::numeric("CG did not converge", r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm))
}

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite banded matrix.
///
/// Row `i` stores `L[i][i-bw ..= i]`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    /// Factors `a`. A non-positive pivot yields [`Error::Indefinite`].
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut data = vec![0.0; n * w];
        for r in 0..n {
            for (c, v) in a.row(r) {
                if c <= r {
                    data[r * w + (c + bw - r)] = v;
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let jlo = j.saturating_sub(bw).max(lo);
                let ri = &data[i * w + (jlo + bw - i)..i * w + (j + bw - i)];
                let rj = &data[j * w + (jlo + bw - j)..j * w + bw];
                let s = data[i * w + (j + bw - i)] - ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>();
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::Indefinite { row: i, pivot: s });
                    }
                    data[i * w + bw] = s.sqrt();
                } else {
                    data[i * w + (j + bw - i)] = s / data[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = b[i];
            for k in lo..i {
                s -= self.data[i * w + (k + bw - i)] * b[k];
            }
            b[i] = s / self.data[i * w + bw];
        }
        for i in (0..n).rev() {
            b[i] /= self.data[i * w + bw];
            let bi = b[i];
            let lo = i.saturating_sub(bw);
            for k in lo..i {
                b[k] -= self.data[i * w + (k + bw - i)] * bi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
