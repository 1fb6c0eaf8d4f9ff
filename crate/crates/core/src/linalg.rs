//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative tolerance for declaring a column linearly dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Thin QR factorization of a tall design matrix with rank checking.
pub struct ThinQr {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl ThinQr {
    /// Factorizes `x` (n x p, n >= p). A column whose R diagonal is below
    /// `RANK_TOL` times the largest diagonal magnitude is a linear combination
    /// of the columns before it and is reported by name.
    pub fn new(x: DMatrix<f64>, names: &[String]) -> Result<Self> {
        debug_assert_eq!(x.ncols(), names.len());
        let qr = x.qr();
        let r = qr.r();
        let scale = (0..r.ncols())
            .map(|j| r[(j, j)].abs())
            .fold(0.0_f64, f64::max);
        let collinear: Vec<String> = (0..r.ncols())
            .filter(|&j| !(r[(j, j)].abs() > RANK_TOL * scale))
            .map(|j| names[j].clone())
            .collect();
        if !collinear.is_empty() {
            return Err(Error::SingularDesign { columns: collinear });
        }
        Ok(ThinQr { q: qr.q(), r })
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Least-squares solution of `x b = y`.
    pub fn solve(&self, y: &DVector<f64>) -> DVector<f64> {
        let qty = self.q.tr_mul(y);
        self.r
            .solve_upper_triangular(&qty)
            .expect("R has a nonzero diagonal after the rank check")
    }

    /// `R^{-1}`, so that `(X'X)^{-1} = R^{-1} R^{-T}`.
    pub fn r_inverse(&self) -> DMatrix<f64> {
        let p = self.r.ncols();
        self.r
            .solve_upper_triangular(&DMatrix::identity(p, p))
            .expect("R has a nonzero diagonal after the rank check")
    }
}

/// Checks that a Gram matrix `X'X` has full rank by sequential Gram-Schmidt
/// on its Cholesky factor: column `j` is dependent when its residual squared
/// norm falls below `RANK_TOL` times its original squared norm.
pub fn check_gram_rank(gram: &DMatrix<f64>, names: &[String]) -> Result<()> {
    let p = gram.nrows();
    let mut l = DMatrix::<f64>::zeros(p, p);
    let mut independent = vec![false; p];
    let mut collinear = Vec::new();
    for j in 0..p {
        let mut d = gram[(j, j)];
        for k in 0..j {
            if independent[k] {
                d -= l[(j, k)] * l[(j, k)];
            }
        }
        let orig = gram[(j, j)];
        if !(orig > 0.0) || !(d > RANK_TOL * orig) {
            collinear.push(names[j].clone());
            continue;
        }
        independent[j] = true;
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..p {
            let mut s = gram[(i, j)];
            for k in 0..j {
                if independent[k] {
                    s -= l[(i, k)] * l[(j, k)];
                }
            }
            l[(i, j)] = s / djj;
        }
    }
    if collinear.is_empty() {
        Ok(())
    } else {
        Err(Error::SingularDesign { columns: collinear })
    }
}

/// Cholesky factor of a symmetric positive-definite matrix.
pub fn spd_cholesky(m: DMatrix<f64>, names: &[String]) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or_else(|| Error::SingularDesign {
        columns: names.to_vec(),
    })
}

/// Forces exact symmetry by averaging with the transpose.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, p, |i, j| rows[i][j])
}
