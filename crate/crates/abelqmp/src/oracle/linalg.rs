//! Dense complex matrices and a cyclic Jacobi eigensolver for Hermitian
//! matrices.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        (0..n).for_each(|i| m[(i, i)] = ONE);
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        CMatrix { rows, cols, data }
    }

    /// Matrix with the given vectors as columns.
    pub fn from_columns(cols: &[Vec<Complex64>]) -> Self {
        let rows = cols.first().map_or(0, Vec::len);
        CMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn mul(&self, other: &CMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::validation("matrix dimension mismatch"));
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)] * v[c]).sum())
            .collect()
    }

    /// Kronecker product; the right factor index varies fastest.
    pub fn kron(&self, other: &CMatrix) -> Self {
        CMatrix::from_fn(self.rows * other.rows, self.cols * other.cols, |r, c| {
            self[(r / other.rows, c / other.cols)] * other[(r % other.rows, c % other.cols)]
        })
    }

    pub fn add_assign(&mut self, other: &CMatrix, scale: f64) {
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b * scale);
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Sub-block with the given row and column index sets.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        CMatrix::from_fn(rows.len(), cols.len(), |r, c| self[(rows[r], cols[c])])
    }

    /// Outer product `|v><v|`.
    pub fn outer(v: &[Complex64]) -> Self {
        CMatrix::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj())
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Eigen-decomposition `A = V diag(w) V^dagger` of a Hermitian matrix by
/// cyclic complex Jacobi rotations. Eigenvalues are sorted descending.
pub fn jacobi_eigh(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::validation("jacobi_eigh needs a square matrix"));
    }
    if n > 256 {
        return Err(Error::validation("jacobi_eigh limited to dimension 256"));
    }
    let scale = a.frobenius().max(f64::MIN_POSITIVE);
    if a.hermitian_defect() > 1e-10 * scale.max(1.0) {
        return Err(Error::validation("matrix is not Hermitian"));
    }
    let mut m = a.clone();
    let mut v = CMatrix::identity(n);
    let off = |m: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    let mut converged = off(&m) <= 1e-12 * scale;
    for _ in 0..100 {
        if converged {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let d = (apq / r).conj();
                let theta = (m[(q, q)].re - m[(p, p)].re) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let jp_q = -d * s;
                let jq_q = d * c;
                for k in 0..n {
                    let xp = m[(k, p)];
                    let xq = m[(k, q)];
                    m[(k, p)] = xp * c + xq * jp_q;
                    m[(k, q)] = xp * s + xq * jq_q;
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = vp * c + vq * jp_q;
                    v[(k, q)] = vp * s + vq * jq_q;
                }
                for k in 0..n {
                    let xp = m[(p, k)];
                    let xq = m[(q, k)];
                    m[(p, k)] = xp * c + xq * jp_q.conj();
                    m[(q, k)] = xp * s + xq * jq_q.conj();
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
            }
        }
        converged = off(&m) <= 1e-12 * scale;
    }
    if !converged {
        return Err(Error::numerical("jacobi_eigh did not converge in 100 sweeps"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.total_cmp(&m[(i, i)].re));
    let w = order.iter().map(|&i| m[(i, i)].re).collect();
    let vs = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((w, vs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let (w, _) = jacobi_eigh(&CMatrix::identity(4)).unwrap();
        assert!(w.iter().all(|x| (x - 1.0).abs() < 1e-15));
        let d = CMatrix::from_fn(3, 3, |r, c| {
            if r == c {
                Complex64::new([3.0, 1.0, 0.0][r], 0.0)
            } else {
                ZERO
            }
        });
        let (w, _) = jacobi_eigh(&d).unwrap();
        assert_eq!(w, vec![3.0, 1.0, 0.0]);
    }

    #[test]
    fn complex_hermitian_residuals() {
        let a = CMatrix::from_fn(5, 5, |r, c| {
            let x = ((r * 7 + c * 3) % 5) as f64 * 0.3;
            let y = ((r * 2 + c * 5) % 7) as f64 * 0.2;
            Complex64::new(x, y)
        });
        let h = {
            let mut h = a.clone();
            h.add_assign(&a.adjoint(), 1.0);
            h
        };
        let (w, v) = jacobi_eigh(&h).unwrap();
        for (k, &lam) in w.iter().enumerate() {
            let col = v.column(k);
            let hv = h.mul_vec(&col);
            let res: f64 = hv
                .iter()
                .zip(&col)
                .map(|(a, b)| (a - b * lam).norm())
                .fold(0.0, f64::max);
            assert!(res < 1e-9, "residual {res}");
        }
        let tr: f64 = w.iter().sum();
        assert!((tr - h.trace().re).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = CMatrix::from_fn(2, 2, |r, c| Complex64::new((r * 2 + c) as f64, 0.0));
        assert!(jacobi_eigh(&a).is_err());
    }
}
