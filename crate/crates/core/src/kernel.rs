//! Dense complex linear algebra used throughout the crate.
//!
//! Every tolerance here is relative: singular values are compared against
//! `rel_tol * s_max`, so verdicts do not depend on the overall scale of the
//! input.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Default relative tolerance for ranks, nullspaces and pseudoinverses.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

// reject decompositions that do not reproduce the input
const RECONSTRUCTION_TOL: f64 = 1e-10;

fn to_faer(m: &ComplexMatrix) -> Mat<faer::c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    })
}

fn from_faer(m: faer::MatRef<'_, faer::c64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        c64(z.re, z.im)
    })
}

/// Thin singular value decomposition `m = U diag(s) V†`.
///
/// `u` is `rows x k` and `v` is `cols x k` with `k = min(rows, cols)`;
/// singular values are sorted non-increasing.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl SvdResult {
    pub fn s_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        let cutoff = rel_tol * self.s_max();
        self.singular_values.iter().filter(|&&s| s > cutoff).count()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.adjoint()
    }
}

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn ensure_finite(m: &ComplexMatrix, what: &'static str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Kronecker product; for column vectors index `(i, j)` maps to `i * dim_b + j`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    let mut out = ComplexVector::zeros(a.len() * b.len());
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

/// Kronecker product of several vectors, first factor slowest.
pub fn kron_all<'a, I>(factors: I) -> ComplexVector
where
    I: IntoIterator<Item = &'a ComplexVector>,
{
    factors
        .into_iter()
        .fold(ComplexVector::from_element(1, c64(1.0, 0.0)), |acc, f| {
            kron_vec(&acc, f)
        })
}

pub fn svd(m: &ComplexMatrix) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::DimensionMismatch(format!(
            "svd of an empty {rows}x{cols} matrix"
        )));
    }
    ensure_finite(m, "svd input")?;
    let failed = Error::SvdNonConvergence { rows, cols };
    let raw = to_faer(m).thin_svd().map_err(|_| failed)?;
    let (u, v) = (from_faer(raw.U()), from_faer(raw.V()));
    let s: Vec<f64> = raw.S().column_vector().iter().map(|z| z.re).collect();

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));
    let k = order.len();
    let mut u_sorted = ComplexMatrix::zeros(rows, k);
    let mut v_sorted = ComplexMatrix::zeros(cols, k);
    let mut values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        v_sorted.set_column(dst, &v.column(src));
        values.push(s[src]);
    }
    let out = SvdResult {
        u: u_sorted,
        singular_values: values,
        v: v_sorted,
    };
    let scale = m.norm();
    if (out.reconstruct() - m).norm() > RECONSTRUCTION_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SvdNonConvergence { rows, cols });
    }
    Ok(out)
}

pub fn numerical_rank(m: &ComplexMatrix, rel_tol: f64) -> Result<usize> {
    check_rel_tol(rel_tol)?;
    Ok(svd(m)?.rank(rel_tol))
}

pub fn pseudo_inverse(m: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix> {
    check_rel_tol(rel_tol)?;
    let dec = svd(m)?;
    let rank = dec.rank(rel_tol);
    let mut v_scaled = dec.v.columns(0, rank).into_owned();
    for j in 0..rank {
        v_scaled
            .column_mut(j)
            .scale_mut(1.0 / dec.singular_values[j]);
    }
    Ok(v_scaled * dec.u.columns(0, rank).adjoint())
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn least_squares_solve(a: &ComplexMatrix, b: &ComplexVector) -> Result<ComplexVector> {
    least_squares_solve_with_tol(a, b, DEFAULT_REL_TOL)
}

pub fn least_squares_solve_with_tol(
    a: &ComplexMatrix,
    b: &ComplexVector,
    rel_tol: f64,
) -> Result<ComplexVector> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "least squares: matrix has {} rows, right-hand side has {}",
            a.nrows(),
            b.len()
        )));
    }
    check_rel_tol(rel_tol)?;
    let dec = svd(a)?;
    Ok(solve_with_svd(&dec, b, rel_tol))
}

/// Minimum-norm solution reusing an existing decomposition.
pub fn solve_with_svd(dec: &SvdResult, b: &ComplexVector, rel_tol: f64) -> ComplexVector {
    let rank = dec.rank(rel_tol);
    let mut x = ComplexVector::zeros(dec.v.nrows());
    for j in 0..rank {
        let coeff = dec.u.column(j).dotc(b) / dec.singular_values[j];
        x.axpy(coeff, &dec.v.column(j), c64(1.0, 0.0));
    }
    x
}

/// Orthonormal basis of the numerical nullspace, one column per null direction.
pub fn nullspace_basis(m: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix> {
    check_rel_tol(rel_tol)?;
    let (rows, cols) = m.shape();
    // thin SVD of a wide matrix drops null directions; pad to square first
    let padded = if rows < cols {
        let mut p = ComplexMatrix::zeros(cols, cols);
        p.rows_mut(0, rows).copy_from(m);
        p
    } else {
        m.clone()
    };
    let dec = svd(&padded)?;
    let rank = dec.rank(rel_tol);
    if rank == 0 {
        return Ok(ComplexMatrix::identity(cols, cols));
    }
    Ok(dec.v.columns(rank, cols - rank).into_owned())
}

pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    m.is_square() && hermitian_deviation(m) <= tol * max_abs(m).max(1.0)
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues of a non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m, "eigenvalue input")?;
    // symmetrize away rounding-level anti-Hermitian parts
    let h = (m + m.adjoint()).scale(0.5);
    let failed = Error::SvdNonConvergence {
        rows: m.nrows(),
        cols: m.ncols(),
    };
    let f = to_faer(&h);
    let eig = f.self_adjoint_eigen(Side::Lower).map_err(|_| failed)?;
    let vectors = from_faer(eig.U());
    let lambda: Vec<f64> = eig.S().column_vector().iter().map(|z| z.re).collect();
    let rebuilt = &vectors
        * ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(lambda.len(), lambda.iter().map(|&l| c64(l, 0.0))))
        * vectors.adjoint();
    if (rebuilt - &h).norm() > RECONSTRUCTION_TOL * h.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::SvdNonConvergence {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let mut values = lambda;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Transpose on the second tensor factor of a `(dim_a*dim_b)`-square operator.
pub fn partial_transpose(rho: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<ComplexMatrix> {
    let n = dim_a * dim_b;
    if dim_a == 0 || dim_b == 0 || rho.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "partial transpose expects a {n}x{n} operator for dims ({dim_a},{dim_b}), got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    if !is_hermitian(rho, DEFAULT_REL_TOL) {
        return Err(Error::NotHermitian(hermitian_deviation(rho)));
    }
    Ok(ComplexMatrix::from_fn(n, n, |row, col| {
        let (ia, ib) = (row / dim_b, row % dim_b);
        let (ja, jb) = (col / dim_b, col % dim_b);
        rho[(ia * dim_b + jb, ja * dim_b + ib)]
    }))
}

fn check_rel_tol(rel_tol: f64) -> Result<()> {
    if rel_tol > 0.0 && rel_tol < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "relative tolerance must lie in (0, 1), got {rel_tol}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| c64(x, 0.0)))
    }

    fn photon_target() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        for (i, j) in [(0, 2), (2, 0), (1, 3), (3, 1)] {
            m[(i, j)] = c64(1.0, 0.0);
        }
        m
    }

    #[test]
    fn kron_basics() {
        let i2 = ComplexMatrix::identity(2, 2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4, 4));

        let e0 = ComplexVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
        let e1 = ComplexVector::from_vec(vec![c64(0.0, 0.0), c64(1.0, 0.0)]);
        let k = kron_vec(&e0, &e1);
        assert_eq!(k, ComplexVector::from_fn(4, |i, _| c64((i == 1) as u8 as f64, 0.0)));

        let a = real(2, 1, &[1.0, 1.0]);
        let b = real(2, 1, &[1.0, -1.0]);
        assert_eq!(kron(&a, &b), real(4, 1, &[1.0, -1.0, 1.0, -1.0]));
    }

    #[test]
    fn svd_simple_cases() {
        let d = real(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let s = svd(&d).unwrap();
        assert!((s.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((s.singular_values[1] - 1.0).abs() < 1e-14);

        let z = svd(&ComplexMatrix::zeros(3, 2)).unwrap();
        assert!(z.singular_values.iter().all(|&x| x == 0.0));

        let p = svd(&photon_target()).unwrap();
        for s in &p.singular_values {
            assert!((s - 1.0).abs() < 1e-12, "{:?}", p.singular_values);
        }
    }

    #[test]
    fn svd_reports_non_finite_input() {
        let mut m = ComplexMatrix::identity(2, 2);
        m[(0, 1)] = c64(f64::NAN, 0.0);
        assert!(matches!(svd(&m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&ComplexMatrix::identity(3, 3), 1e-10).unwrap(), 3);
        let u = ComplexVector::from_vec(vec![c64(1.0, 2.0), c64(-0.5, 0.0), c64(0.0, 1.0)]);
        let v = ComplexVector::from_vec(vec![c64(0.3, -1.0), c64(2.0, 0.0)]);
        let outer = &u * v.adjoint();
        assert_eq!(numerical_rank(&outer, 1e-10).unwrap(), 1);
        assert_eq!(numerical_rank(&photon_target(), 1e-10).unwrap(), 4);
        assert_eq!(numerical_rank(&ComplexMatrix::zeros(2, 2), 1e-10).unwrap(), 0);
        assert!(numerical_rank(&photon_target(), 1.5).is_err());
    }

    #[test]
    fn least_squares_examples() {
        let v = ComplexVector::from_vec(vec![c64(1.0, -1.0), c64(2.0, 0.5)]);
        let x = least_squares_solve(&ComplexMatrix::identity(2, 2), &v).unwrap();
        assert!((x - &v).norm() < 1e-14);

        let a = real(2, 1, &[1.0, 1.0]);
        let b = ComplexVector::from_vec(vec![c64(1.0, 0.0), c64(3.0, 0.0)]);
        let x = least_squares_solve(&a, &b).unwrap();
        assert!((x[0] - c64(2.0, 0.0)).norm() < 1e-14);

        let x = least_squares_solve(&ComplexMatrix::zeros(2, 3), &b).unwrap();
        assert_eq!(x.len(), 3);
        assert_eq!(x.norm(), 0.0);

        assert!(least_squares_solve(&a, &v.rows(0, 1).into_owned()).is_err());
    }

    #[test]
    fn nullspace_examples() {
        assert_eq!(nullspace_basis(&ComplexMatrix::identity(4, 4), 1e-10).unwrap().ncols(), 0);

        // v -> v - SWAP v on C^2 (x) C^2
        let mut swap = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                swap[(j * 2 + i, i * 2 + j)] = c64(1.0, 0.0);
            }
        }
        let m = ComplexMatrix::identity(4, 4) - &swap;
        let ns = nullspace_basis(&m, 1e-10).unwrap();
        assert_eq!(ns.ncols(), 3);
        for col in ns.column_iter() {
            assert!((&swap * col - col).norm() < 1e-12);
        }

        let ns = nullspace_basis(&ComplexMatrix::zeros(2, 3), 1e-10).unwrap();
        assert_eq!(ns, ComplexMatrix::identity(3, 3));

        // wide input keeps its null directions
        let wide = real(1, 3, &[1.0, 1.0, 0.0]);
        assert_eq!(nullspace_basis(&wide, 1e-10).unwrap().ncols(), 2);
    }

    #[test]
    fn partial_transpose_examples() {
        let id = ComplexMatrix::identity(4, 4);
        assert_eq!(partial_transpose(&id, 2, 2).unwrap(), id);

        let bell = ComplexVector::from_vec(vec![
            c64(1.0, 0.0),
            c64(0.0, 0.0),
            c64(0.0, 0.0),
            c64(1.0, 0.0),
        ])
        .unscale(2f64.sqrt());
        let rho = &bell * bell.adjoint();
        let pt = partial_transpose(&rho, 2, 2).unwrap();
        assert_eq!(partial_transpose(&pt, 2, 2).unwrap(), rho);
        let ev = hermitian_eigenvalues(&pt).unwrap();
        assert!((ev[0] + 0.5).abs() < 1e-12);

        assert!(partial_transpose(&id, 2, 3).is_err());
        let mut skew = id.clone();
        skew[(0, 1)] = c64(1.0, 0.0);
        assert!(matches!(partial_transpose(&skew, 2, 2), Err(Error::NotHermitian(_))));
    }
}
