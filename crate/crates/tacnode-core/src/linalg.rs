//! Thin wrappers over nalgebra plus a truncated bivariate power series type
//! used for exact coefficient extraction from small determinants.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Determinant of a row-major real square matrix.
pub fn det(n: usize, entries: &[f64]) -> f64 {
    if n == 0 {
        return 1.0;
    }
    DMatrix::from_row_slice(n, n, entries).lu().determinant()
}

/// Determinant of a row-major complex square matrix.
pub fn det_c(n: usize, entries: &[Complex64]) -> Complex64 {
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    DMatrix::from_row_slice(n, n, entries).lu().determinant()
}

/// Solves `a x = b` for a row-major real matrix by partial-pivot LU.
pub fn solve(n: usize, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, a);
    let lu = m.clone().lu();
    let scale = m.amax().max(f64::MIN_POSITIVE);
    // Reject matrices whose pivots collapse relative to the entry scale.
    let u = lu.u();
    let min_pivot = (0..n).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if n > 0 && min_pivot <= 1e-13 * scale {
        return Err(Error::SingularSystem(format!("pivot {min_pivot:e} vs scale {scale:e}")));
    }
    let rhs = nalgebra::DVector::from_column_slice(b);
    lu.solve(&rhs).map(|x| x.iter().copied().collect()).ok_or_else(|| Error::SingularSystem("LU solve failed".into()))
}

/// Vandermonde determinant det[y_i^{j-1}] = ∏_{i<j} (y_j - y_i).
pub fn vandermonde(y: &[f64]) -> f64 {
    let mut p = 1.0;
    for i in 0..y.len() {
        for j in i + 1..y.len() {
            p *= y[j] - y[i];
        }
    }
    p
}

/// Sign of a permutation given as an index vector.
pub fn permutation_sign(perm: &[usize]) -> f64 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1.0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// All permutations of 0..n in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

/// Real polynomial in (t, s) truncated at fixed degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct Series2 {
    pub t_deg: usize,
    pub s_deg: usize,
    coef: Vec<f64>,
}

impl Series2 {
    pub fn zero(t_deg: usize, s_deg: usize) -> Self {
        Self { t_deg, s_deg, coef: vec![0.0; (t_deg + 1) * (s_deg + 1)] }
    }

    pub fn constant(t_deg: usize, s_deg: usize, c: f64) -> Self {
        let mut z = Self::zero(t_deg, s_deg);
        z.coef[0] = c;
        z
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i > self.t_deg || j > self.s_deg {
            return 0.0;
        }
        self.coef[i * (self.s_deg + 1) + j]
    }

    pub fn add_to(&mut self, i: usize, j: usize, c: f64) {
        if i <= self.t_deg && j <= self.s_deg {
            self.coef[i * (self.s_deg + 1) + j] += c;
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.t_deg, self.s_deg);
        for i in 0..=self.t_deg {
            for j in 0..=self.s_deg {
                let a = self.get(i, j);
                if a == 0.0 {
                    continue;
                }
                for k in 0..=self.t_deg - i {
                    for l in 0..=self.s_deg - j {
                        out.coef[(i + k) * (self.s_deg + 1) + j + l] += a * other.get(k, l);
                    }
                }
            }
        }
        out
    }

    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.coef.iter_mut().zip(&other.coef) {
            *a += alpha * b;
        }
    }
}

/// Leibniz determinant of a small matrix of truncated series.
pub fn det_series(n: usize, entries: &[Series2]) -> Series2 {
    let (td, sd) = entries.first().map_or((0, 0), |e| (e.t_deg, e.s_deg));
    let mut total = Series2::zero(td, sd);
    if n == 0 {
        return Series2::constant(td, sd, 1.0);
    }
    for perm in permutations(n) {
        let mut term = Series2::constant(td, sd, permutation_sign(&perm));
        for (i, &j) in perm.iter().enumerate() {
            term = term.mul(&entries[i * n + j]);
        }
        total.axpy(1.0, &term);
    }
    total
}
