//! Dense complex linear algebra for the small (N ≤ ~10) systems that
//! arise in pairing solves, chart Jacobians and metric Gram matrices.
//!
//! LU with partial pivoting; no external dependency is warranted at these
//! sizes.

use crate::C;
use num_complex::Complex64;

/// Row-major dense complex matrix.
#[derive(Clone, Debug)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<C>,
}

#[derive(Debug, thiserror::Error)]
pub enum LinalgError {
    #[error("singular matrix (pivot {pivot:.3e} at step {step})")]
    Singular { step: usize, pivot: f64 },
    #[error("dimension mismatch")]
    Dimension,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C>]) -> Self {
        let r = rows.len();
        let c = rows.first().map(|v| v.len()).unwrap_or(0);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &x) in row.iter().enumerate() {
                m[(i, j)] = x;
            }
        }
        m
    }

    pub fn row(&self, i: usize) -> &[C] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// max-column-sum norm.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn lu(&self) -> Result<(CMatrix, Vec<usize>, i32), LinalgError> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1;
        for k in 0..n {
            let (mut imax, mut vmax) = (k, a[(k, k)].norm());
            for i in k + 1..n {
                let v = a[(i, k)].norm();
                if v > vmax {
                    imax = i;
                    vmax = v;
                }
            }
            if vmax == 0.0 {
                return Err(LinalgError::Singular { step: k, pivot: vmax });
            }
            if imax != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(imax, j)];
                    a[(imax, j)] = t;
                }
                perm.swap(k, imax);
                sign = -sign;
            }
            let piv = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / piv;
                a[(i, k)] = f;
                for j in k + 1..n {
                    let akj = a[(k, j)];
                    a[(i, j)] -= f * akj;
                }
            }
        }
        Ok((a, perm, sign))
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[C]) -> Result<Vec<C>, LinalgError> {
        if b.len() != self.rows {
            return Err(LinalgError::Dimension);
        }
        let n = self.rows;
        let (lu, perm, _) = self.lu()?;
        let mut x: Vec<C> = perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let xj = x[j];
                x[i] -= lu[(i, j)] * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let xj = x[j];
                x[i] -= lu[(i, j)] * xj;
            }
            x[i] /= lu[(i, i)];
        }
        Ok(x)
    }

    pub fn det(&self) -> C {
        match self.lu() {
            Ok((lu, _, sign)) => {
                let mut d = C::new(sign as f64, 0.0);
                for i in 0..self.rows {
                    d *= lu[(i, i)];
                }
                d
            }
            Err(_) => C::new(0.0, 0.0),
        }
    }

    pub fn inverse(&self) -> Result<CMatrix, LinalgError> {
        let n = self.rows;
        let mut inv = CMatrix::zeros(n, n);
        let mut e = vec![C::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = C::new(1.0, 0.0);
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
            e[j] = C::new(0.0, 0.0);
        }
        Ok(inv)
    }

    /// 1-norm condition estimate ‖A‖₁‖A⁻¹‖₁; infinite when singular.
    pub fn cond_1(&self) -> f64 {
        match self.inverse() {
            Ok(inv) => self.norm_1() * inv.norm_1(),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn matvec(&self, x: &[C]) -> Vec<C> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .map(|(&a, &b)| a * b)
                    .sum::<Complex64>()
            })
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C;
    fn index(&self, (i, j): (usize, usize)) -> &C {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C {
        &mut self.data[i * self.cols + j]
    }
}
