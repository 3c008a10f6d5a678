//! Small dense complex matrices and a Jacobi eigensolver for Hermitian
//! matrices. Everything here is sized for operators on a handful of qubits;
//! no attempt is made at cache blocking or SIMD.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;

/// Complex double-precision scalar.
pub type C64 = Complex<f64>;

/// Square complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds the rank-one matrix `v v†` (outer product of `v` with itself).
    pub fn outer(v: &[C64]) -> Self {
        let dim = v.len();
        CMatrix::from_fn(dim, |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim, "matrix dimensions must agree");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        CMatrix { dim: self.dim, data }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim, "matrix dimensions must agree");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        CMatrix { dim: self.dim, data }
    }

    pub fn scale(&self, k: C64) -> CMatrix {
        CMatrix { dim: self.dim, data: self.data.iter().map(|a| a * k).collect() }
    }

    pub fn scale_re(&self, k: f64) -> CMatrix {
        self.scale(C64::new(k, 0.0))
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim, "matrix dimensions must agree");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        let n = self.dim;
        CMatrix::from_fn(n, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `tr(self · other)` without forming the product (O(n²)).
    pub fn trace_product(&self, other: &CMatrix) -> C64 {
        assert_eq!(self.dim, other.dim, "matrix dimensions must agree");
        let n = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.get(i, k) * other.get(k, i);
            }
        }
        acc
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let n = self.dim;
        let m = other.dim;
        CMatrix::from_fn(n * m, |i, j| {
            self.get(i / m, j / m) * other.get(i % m, j % m)
        })
    }

    /// Block-diagonal direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &CMatrix) -> CMatrix {
        let n = self.dim;
        let m = other.dim;
        CMatrix::from_fn(n + m, |i, j| {
            if i < n && j < n {
                self.get(i, j)
            } else if i >= n && j >= n {
                other.get(i - n, j - n)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Element-wise maximum absolute difference (∞-norm of the difference).
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "matrix dimensions must agree");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest element magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// `true` if `‖self − self†‖∞ ≤ tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// ∞-norm of the commutator `[self, other]`.
    pub fn commutator_norm(&self, other: &CMatrix) -> f64 {
        self.mul(other).max_abs_diff(&other.mul(self))
    }
}

/// Eigenvalues of a Hermitian matrix via the cyclic complex Jacobi method,
/// returned in ascending order. The input is assumed Hermitian; only the
/// Hermitian part participates by construction of the rotations.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let n = m.dim();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![m.get(0, 0).re];
    }
    let mut a = m.clone();
    let scale = a.max_abs().max(1.0);
    let tol = 1e-14 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a.get(p, q);
                let babs = b.norm();
                if babs <= tol * 1e-2 {
                    continue;
                }
                let phase = b / babs; // e^{iφ}
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                // cot(2θ) = (app − aqq) / (2|b|); pick the smaller rotation.
                let tau = (app - aqq) / (2.0 * babs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let se_m = phase.conj() * s; // s·e^{−iφ}
                let se_p = phase * s; // s·e^{+iφ}
                // Column update: col_p ← c·col_p + s e^{−iφ}·col_q,
                //                col_q ← −s e^{iφ}·col_p + c·col_q.
                for k in 0..n {
                    let kp = a.get(k, p);
                    let kq = a.get(k, q);
                    a.set(k, p, kp * c + kq * se_m);
                    a.set(k, q, kq * c - kp * se_p);
                }
                // Row update: row_p ← c·row_p + s e^{iφ}·row_q,
                //             row_q ← −s e^{−iφ}·row_p + c·row_q.
                for k in 0..n {
                    let pk = a.get(p, k);
                    let qk = a.get(q, k);
                    a.set(p, k, pk * c + qk * se_p);
                    a.set(q, k, qk * c - pk * se_m);
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
    eigs
}
