//! Dense helpers on top of `nalgebra`: orthonormalisation, subspace
//! comparisons and the orthogonal Procrustes alignment.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Largest absolute entry.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_vec(v: &Vector) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Spectral norm, as the square root of the largest eigenvalue of the
/// smaller Gram matrix.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let gram = if m.ncols() <= m.nrows() { m.transpose() * m } else { m * m.transpose() };
    gram.symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |acc, &s| acc.max(s))
        .sqrt()
}

/// Stacks column vectors into a matrix with `rows` rows.
pub fn columns(rows: usize, vs: &[Vector]) -> Matrix {
    let mut m = Matrix::zeros(rows, vs.len());
    for (j, v) in vs.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

/// Horizontal concatenation of matrices with equal row counts.
pub fn hstack(rows: usize, blocks: &[&Matrix]) -> Matrix {
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut m = Matrix::zeros(rows, cols);
    let mut offset = 0;
    for b in blocks {
        m.view_mut((0, offset), (rows, b.ncols())).copy_from(*b);
        offset += b.ncols();
    }
    m
}

/// Modified Gram–Schmidt with one reorthogonalisation pass. Candidates whose
/// residual after projection falls below `drop_tol` are skipped.
pub fn orthonormalize(candidates: &Matrix, drop_tol: f64) -> Matrix {
    let n = candidates.nrows();
    let mut kept: Vec<Vector> = Vec::new();
    for j in 0..candidates.ncols() {
        let mut v = candidates.column(j).into_owned();
        for _ in 0..2 {
            for q in &kept {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > drop_tol {
            kept.push(v / norm);
        }
    }
    columns(n, &kept)
}

/// Completes the orthonormal columns of `fixed` to an orthonormal basis of
/// `R^n`, drawing candidates from the standard basis. At every step the
/// candidate with the largest residual is taken, so the result depends only
/// on `fixed`.
pub fn complete_basis(fixed: &Matrix) -> Matrix {
    let n = fixed.nrows();
    let mut basis: Vec<Vector> = (0..fixed.ncols()).map(|j| fixed.column(j).into_owned()).collect();
    // Residuals of the standard basis vectors, kept orthogonal to `basis`.
    let mut resid: Vec<Option<Vector>> = (0..n)
        .map(|i| {
            let mut v = Vector::zeros(n);
            v[i] = 1.0;
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dot(&v);
                    v.axpy(-c, q, 1.0);
                }
            }
            Some(v)
        })
        .collect();
    while basis.len() < n {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in resid.iter().enumerate() {
            if let Some(v) = r {
                let norm = v.norm();
                if best.is_none_or(|b| norm > b.1 + 1e-14) {
                    best = Some((i, norm));
                }
            }
        }
        let (i, _) = best.expect("standard basis spans R^n");
        let mut v = resid[i].take().expect("unused candidate");
        for q in &basis {
            let c = q.dot(&v);
            v.axpy(-c, q, 1.0);
        }
        let v = v.normalize();
        for w in resid.iter_mut().flatten() {
            let c = v.dot(w);
            w.axpy(-c, &v, 1.0);
        }
        basis.push(v);
    }
    columns(n, &basis)
}

/// Orthogonal projector onto the column span of an orthonormal basis.
pub fn projector(basis: &Matrix) -> Matrix {
    basis * basis.transpose()
}

/// Spectral norm of the part of `span(u)` outside `span(v)`, i.e. the sine of
/// the largest principal angle from `u` into `v`. Both arguments must have
/// orthonormal columns.
pub fn containment_residual(u: &Matrix, v: &Matrix) -> f64 {
    if u.ncols() == 0 {
        return 0.0;
    }
    let outside = u - v * (v.transpose() * u);
    spectral_norm(&outside)
}

/// Symmetric subspace distance: the sine of the largest principal angle.
/// Subspaces of different dimension are at distance 1.
pub fn subspace_distance(u: &Matrix, v: &Matrix) -> f64 {
    if u.ncols() != v.ncols() {
        return 1.0;
    }
    containment_residual(u, v).max(containment_residual(v, u))
}

/// Orthonormal basis of the column span of an arbitrary matrix.
pub fn span_basis(m: &Matrix, rank_tol: f64) -> Matrix {
    orthonormalize(m, rank_tol)
}

/// Orthonormal factor of the polar decomposition `m = U H`, the closest
/// matrix with orthonormal columns to `m`. Used both for Löwdin
/// orthonormalisation of projected frames and for Procrustes alignment.
pub fn polar_orthonormal(m: &Matrix) -> Matrix {
    if m.ncols() == 0 {
        return m.clone();
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    u * v_t
}

/// Orthonormal basis of `span(target)` closest to `reference`.
pub fn procrustes_align(target: &Matrix, reference: &Matrix) -> Matrix {
    let overlap = target.transpose() * reference;
    target * polar_orthonormal(&overlap)
}

/// `‖GᵀG − I‖_max` for a matrix of column vectors.
pub fn gram_residual(m: &Matrix) -> f64 {
    let g = m.transpose() * m;
    max_abs(&(g - Matrix::identity(m.ncols(), m.ncols())))
}

pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vector {
    loop {
        let v = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Haar-distributed orthogonal matrix from the QR factorisation of a
/// Gaussian matrix with the sign of `diag(R)` absorbed.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    let g = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    q
}

/// Kronecker product.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Block-diagonal `diag(a, b)`.
pub fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let mut m = Matrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    m
}
