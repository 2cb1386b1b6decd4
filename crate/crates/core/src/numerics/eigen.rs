//! Lowest eigenpairs of the symmetric-definite pencil `K·φ = ω²·M·φ`.
//!
//! Small problems go through a dense Cholesky reduction. Larger ones run a
//! shift-invert Lanczos iteration on `K⁻¹M` in the `M` inner product with
//! full reorthogonalization; the Krylov dimension grows until every requested
//! Ritz pair meets the residual target.

use alloc::vec::Vec;
use nalgebra::SymmetricEigen;

use super::skyline::factor_spd;
use super::sparse::CsrMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Matrix, Result, Vector};

/// Problems up to this size are solved densely.
pub const DENSE_LIMIT: usize = 200;
/// Target for `‖Kφ − ω²Mφ‖ / ‖Kφ‖`. Pairs whose residual is dominated by
/// roundoff (`8ε·‖|K||φ|‖ / ‖Kφ‖` exceeds the target) are held to that floor.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// ω², ascending.
    pub eigenvalues: Vec<f64>,
    /// Mass-normalized eigenvectors as columns; largest-magnitude entry positive.
    pub vectors: Matrix,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Natural frequencies in Hz.
    pub fn frequencies_hz(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|&l| l.max(0.0).sqrt() / (2.0 * core::f64::consts::PI))
            .collect()
    }
}

pub fn eig_gsym(k: &CsrMatrix, m: &CsrMatrix, count: usize) -> Result<EigenPairs> {
    let n = k.nrows();
    if m.nrows() != n || k.ncols() != n || m.ncols() != n {
        return Err(Error::dims(
            "stiffness and mass must be square and of equal size",
        ));
    }
    if count == 0 || count > n {
        return Err(Error::invalid(
            "requested eigenpair count must lie in 1..=N",
        ));
    }
    let (values, mut vectors) = if n <= DENSE_LIMIT {
        dense_pencil(k, m, count)?
    } else {
        lanczos(k, m, count)?
    };
    for mut col in vectors.column_iter_mut() {
        let norm = m.bilinear(&col.clone_owned(), &col.clone_owned()).sqrt();
        col /= norm;
        fix_sign(col.as_mut_slice());
    }
    let check = residuals(k, m, &values, &vectors);
    if check.excess > 1.0 {
        return Err(Error::EigenConvergence {
            residual: check.worst,
        });
    }
    if check.worst > RESIDUAL_TOL {
        log::warn!(
            "eigenpairs accepted at the roundoff floor, residual {:.2e}",
            check.worst
        );
    }
    Ok(EigenPairs {
        eigenvalues: values,
        vectors,
    })
}

/// Flips the vector so that its largest-magnitude entry (first one on ties) is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

struct Residuals {
    worst: f64,
    /// Largest residual relative to its own acceptance threshold.
    excess: f64,
}

fn residuals(k: &CsrMatrix, m: &CsrMatrix, values: &[f64], vectors: &Matrix) -> Residuals {
    let mut out = Residuals {
        worst: 0.0,
        excess: 0.0,
    };
    for (i, &lambda) in values.iter().enumerate() {
        let phi = vectors.column(i).clone_owned();
        let kphi = k.mul_vec(&phi);
        let scale = kphi.norm().max(f64::MIN_POSITIVE);
        let r = (&kphi - m.mul_vec(&phi) * lambda).norm() / scale;
        let floor = 8.0 * f64::EPSILON * k.abs_mul_vec(&phi).norm() / scale;
        out.worst = out.worst.max(r);
        out.excess = out.excess.max(r / RESIDUAL_TOL.max(floor));
    }
    out
}

fn dense_pencil(k: &CsrMatrix, m: &CsrMatrix, count: usize) -> Result<(Vec<f64>, Matrix)> {
    let n = k.nrows();
    let chol = m.to_dense().cholesky().ok_or(Error::Factorization {
        pivot: 0,
        value: 0.0,
    })?;
    let l = chol.l();
    // C = L⁻¹ K L⁻ᵀ
    let kd = k.to_dense();
    let mut tmp = kd;
    if !l.solve_lower_triangular_mut(&mut tmp) {
        return Err(Error::Singular);
    }
    let mut c = tmp.transpose();
    if !l.solve_lower_triangular_mut(&mut c) {
        return Err(Error::Singular);
    }
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = Vec::with_capacity(count);
    let mut y = Matrix::zeros(n, count);
    for (c_out, &idx) in order.iter().take(count).enumerate() {
        values.push(eig.eigenvalues[idx]);
        y.set_column(c_out, &eig.eigenvectors.column(idx));
    }
    let lt = l.transpose();
    if !lt.solve_upper_triangular_mut(&mut y) {
        return Err(Error::Singular);
    }
    Ok((values, y))
}

/// Deterministic, non-degenerate start vector.
fn start_vector(n: usize) -> Vector {
    Vector::from_fn(n, |i, _| {
        let h = (i as u64).wrapping_mul(2_654_435_761) % 1000;
        1.0 + h as f64 / 1000.0
    })
}

fn lanczos(k: &CsrMatrix, m: &CsrMatrix, count: usize) -> Result<(Vec<f64>, Matrix)> {
    let n = k.nrows();
    let factor = factor_spd(k)?;
    let block = n.min(count + 4);
    let mut dim = n.min((2 * count + 20).max(40));
    let mut last_residual = f64::INFINITY;
    loop {
        let (values, vectors, exhausted) = lanczos_pass(&factor, m, block, dim, n)?;
        if values.len() >= count {
            let (mut values, mut vectors) = (values, vectors);
            let _ = &values;
            for _ in 0..3 {
                (values, vectors) = polish(&factor, m, &vectors)?;
                let head = vectors.columns(0, count).clone_owned();
                let check = residuals(k, m, &values[..count], &head);
                let residual = check.worst;
                if check.excess <= 1.0 {
                    values.truncate(count);
                    return Ok((values, head));
                }
                last_residual = last_residual.min(residual);
            }
        }
        if dim == n || exhausted {
            return Err(Error::EigenConvergence {
                residual: last_residual,
            });
        }
        dim = n.min(2 * dim);
    }
}

/// One subspace-iteration step `Y = K⁻¹MX` followed by Rayleigh–Ritz, which
/// strips the high-mode content that inflates residuals of stiff models.
/// The projected stiffness uses `YᵀMX` (= `YᵀKY`) to avoid cancellation.
fn polish(
    factor: &super::skyline::SpdFactor,
    m: &CsrMatrix,
    x: &Matrix,
) -> Result<(Vec<f64>, Matrix)> {
    let mx = m.mul_dense(x);
    let y = factor.solve_matrix(&mx);
    let kr = y.transpose() * &mx;
    let mr = y.transpose() * m.mul_dense(&y);
    let sym = |a: Matrix| (&a + a.transpose()) * 0.5;
    let (values, s) = dense_pencil(
        &CsrMatrix::from_dense(&sym(kr)),
        &CsrMatrix::from_dense(&sym(mr)),
        x.ncols(),
    )?;
    Ok((values, y * s))
}

/// One Lanczos run of (at most) `dim` steps; returns the `count` lowest Ritz pairs.
fn lanczos_pass(
    factor: &super::skyline::SpdFactor,
    m: &CsrMatrix,
    count: usize,
    dim: usize,
    n: usize,
) -> Result<(Vec<f64>, Matrix, bool)> {
    let mut q_cols: Vec<Vector> = Vec::with_capacity(dim);
    let mut mq_cols: Vec<Vector> = Vec::with_capacity(dim);
    let mut alpha = Vec::with_capacity(dim);
    let mut beta: Vec<f64> = Vec::with_capacity(dim);

    let mut q = start_vector(n);
    let mut mq = m.mul_vec(&q);
    let norm = q.dot(&mq).sqrt();
    q /= norm;
    mq /= norm;
    let mut exhausted = false;

    for j in 0..dim {
        let mut w = factor.solve(&mq);
        let a = w.dot(&mq);
        w.axpy(-a, &q, 1.0);
        if j > 0 {
            w.axpy(-beta[j - 1], &q_cols[j - 1], 1.0);
        }
        q_cols.push(q.clone());
        mq_cols.push(mq.clone());
        alpha.push(a);
        // full reorthogonalization in the M inner product, twice
        for _ in 0..2 {
            for (qi, mqi) in q_cols.iter().zip(&mq_cols) {
                let c = mqi.dot(&w);
                w.axpy(-c, qi, 1.0);
            }
        }
        if j + 1 == dim {
            break;
        }
        let mw = m.mul_vec(&w);
        let b = w.dot(&mw).max(0.0).sqrt();
        let scale = alpha.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        if b <= 1e-12 * scale {
            exhausted = true;
            break;
        }
        beta.push(b);
        q = w / b;
        mq = mw / b;
    }

    let steps = alpha.len();
    let mut t = Matrix::zeros(steps, steps);
    for i in 0..steps {
        t[(i, i)] = alpha[i];
        if i + 1 < steps {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    // largest θ of K⁻¹M ↔ smallest ω² = 1/θ
    let mut order: Vec<usize> = (0..steps).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let take = count.min(order.len());
    let mut values = Vec::with_capacity(take);
    let mut vectors = Matrix::zeros(n, take);
    for (c, &idx) in order.iter().take(take).enumerate() {
        values.push(1.0 / eig.eigenvalues[idx]);
        let s = eig.eigenvectors.column(idx);
        let mut x = Vector::zeros(n);
        for (qi, &si) in q_cols.iter().zip(s.iter()) {
            x.axpy(si, qi, 1.0);
        }
        vectors.set_column(c, &x);
    }
    Ok((values, vectors, exhausted))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, spring: f64, mass: f64) -> (CsrMatrix, CsrMatrix) {
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = 2.0 * spring;
            if i + 1 < n {
                k[(i, i + 1)] = -spring;
                k[(i + 1, i)] = -spring;
            }
        }
        let m = Matrix::identity(n, n) * mass;
        (CsrMatrix::from_dense(&k), CsrMatrix::from_dense(&m))
    }

    #[test]
    fn diagonal_pencil() {
        let k = CsrMatrix::from_dense(&Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 4.0])));
        let m = CsrMatrix::identity(2);
        let e = eig_gsym(&k, &m, 2).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 4.0).abs() < 1e-14);
        assert!((e.vectors.column(0) - Vector::from_vec(vec![1.0, 0.0])).norm() < 1e-14);
        assert!((e.vectors.column(1) - Vector::from_vec(vec![0.0, 1.0])).norm() < 1e-14);
    }

    #[test]
    fn lanczos_matches_the_analytic_chain_spectrum() {
        // fixed-fixed chain: ω_j² = (4k/m)·sin²(jπ / (2(n+1)))
        let n = 400;
        let (k, m) = chain(n, 3.0, 2.0);
        let e = eig_gsym(&k, &m, 6).unwrap();
        for j in 0..6 {
            let s = ((j + 1) as f64 * core::f64::consts::PI / (2.0 * (n + 1) as f64)).sin();
            let exact = 4.0 * 3.0 / 2.0 * s * s;
            assert!((e.eigenvalues[j] - exact).abs() <= 1e-9 * exact, "mode {j}");
        }
        let gram = e.vectors.transpose() * m.mul_dense(&e.vectors);
        assert!((gram - Matrix::identity(6, 6)).amax() < 1e-10);
    }

    #[test]
    fn sign_convention_is_largest_entry_positive() {
        let mut v = [0.1, -0.9, 0.5];
        fix_sign(&mut v);
        assert_eq!(v, [-0.1, 0.9, -0.5]);
    }

    #[test]
    fn count_outside_range_is_rejected() {
        let (k, m) = chain(4, 1.0, 1.0);
        assert!(eig_gsym(&k, &m, 5).is_err());
        assert!(eig_gsym(&k, &m, 0).is_err());
    }
}
