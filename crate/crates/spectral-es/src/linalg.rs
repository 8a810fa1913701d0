//! Dense linear-algebra kernels shared by the embedding and mixture modules.
//!
//! Symmetric eigendecompositions and small SVDs are delegated to the system
//! LAPACK (`dsyevd`/`dgesvd`); Cholesky factorizations of the small per-block
//! covariances are done in-crate.

use ndarray::{Array1, Array2};

use crate::{Error, Result};

/// Symmetric eigendecomposition with eigenvalues sorted descending and a
/// deterministic sign convention: the largest-magnitude entry of every
/// eigenvector is made positive.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns.
pub fn eigh_desc(m: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigh on {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    // dsyevd reads one triangle only, so row/column-major order is immaterial
    // for a symmetric input.
    let mut a: Vec<f64> = m.iter().cloned().collect();
    let mut w = vec![0.0f64; n];
    let ni = n as i32;
    let mut info = 0i32;
    unsafe {
        // workspace query
        let (mut wq, mut iwq) = ([0.0f64], [0i32]);
        lapack_sys::dsyevd_(
            &(b'V' as std::ffi::c_char),
            &(b'L' as std::ffi::c_char),
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            wq.as_mut_ptr(),
            &-1,
            iwq.as_mut_ptr(),
            &-1,
            &mut info,
        );
        if info != 0 {
            return Err(Error::Lapack("dsyevd", info));
        }
        let lwork = wq[0] as i32;
        let liwork = iwq[0];
        let mut work = vec![0.0f64; lwork as usize];
        let mut iwork = vec![0i32; liwork as usize];
        lapack_sys::dsyevd_(
            &(b'V' as std::ffi::c_char),
            &(b'L' as std::ffi::c_char),
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
        if info != 0 {
            return Err(Error::Lapack("dsyevd", info));
        }
    }
    // `a` now holds eigenvectors as columns in column-major order, eigenvalues
    // ascending. Reverse to descending and fix signs.
    let mut vals = Array1::<f64>::zeros(n);
    let mut vecs = Array2::<f64>::zeros((n, n));
    for out_col in 0..n {
        let src_col = n - 1 - out_col;
        vals[out_col] = w[src_col];
        let col = &a[src_col * n..(src_col + 1) * n];
        let mut imax = 0usize;
        let mut vmax = 0.0f64;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > vmax {
                vmax = v.abs();
                imax = i;
            }
        }
        let s = if col[imax] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vecs[[i, out_col]] = s * col[i];
        }
    }
    Ok((vals, vecs))
}

/// Full SVD `m = U diag(s) V^T` of a small dense matrix.
pub fn svd(m: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (r, c) = (m.nrows(), m.ncols());
    // column-major copy
    let mut a = vec![0.0f64; r * c];
    for j in 0..c {
        for i in 0..r {
            a[j * r + i] = m[[i, j]];
        }
    }
    let (ri, ci) = (r as i32, c as i32);
    let mn = r.min(c);
    let mut s = vec![0.0f64; mn];
    let mut u = vec![0.0f64; r * r];
    let mut vt = vec![0.0f64; c * c];
    let mut info = 0i32;
    unsafe {
        let mut wq = [0.0f64];
        lapack_sys::dgesvd_(
            &(b'A' as std::ffi::c_char),
            &(b'A' as std::ffi::c_char),
            &ri,
            &ci,
            a.as_mut_ptr(),
            &ri,
            s.as_mut_ptr(),
            u.as_mut_ptr(),
            &ri,
            vt.as_mut_ptr(),
            &ci,
            wq.as_mut_ptr(),
            &-1,
            &mut info,
        );
        if info != 0 {
            return Err(Error::Lapack("dgesvd", info));
        }
        let lwork = wq[0] as i32;
        let mut work = vec![0.0f64; lwork as usize];
        lapack_sys::dgesvd_(
            &(b'A' as std::ffi::c_char),
            &(b'A' as std::ffi::c_char),
            &ri,
            &ci,
            a.as_mut_ptr(),
            &ri,
            s.as_mut_ptr(),
            u.as_mut_ptr(),
            &ri,
            vt.as_mut_ptr(),
            &ci,
            work.as_mut_ptr(),
            &lwork,
            &mut info,
        );
        if info != 0 {
            return Err(Error::Lapack("dgesvd", info));
        }
    }
    let mut um = Array2::<f64>::zeros((r, r));
    for j in 0..r {
        for i in 0..r {
            um[[i, j]] = u[j * r + i];
        }
    }
    let mut vtm = Array2::<f64>::zeros((c, c));
    for j in 0..c {
        for i in 0..c {
            vtm[[i, j]] = vt[j * c + i];
        }
    }
    Ok((um, Array1::from(s), vtm))
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(m: &Array2<f64>) -> Result<Array2<f64>> {
    let d = m.nrows();
    if d != m.ncols() {
        return Err(Error::DimensionMismatch("cholesky of non-square".into()));
    }
    let mut l = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        for j in 0..=i {
            let mut s = m[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::CovarianceNotPd);
                }
                l[[i, j]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solves `L y = b` for lower-triangular `L`.
pub fn forward_substitute(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let d = b.len();
    let mut y = Array1::<f64>::zeros(d);
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    y
}

/// Inverse of a symmetric matrix via its eigendecomposition, guarded by a
/// condition-number limit. Returns the inverse and the condition number.
pub fn sym_inverse_guarded(m: &Array2<f64>, cond_limit: f64) -> Result<(Array2<f64>, f64)> {
    let (vals, vecs) = eigh_desc(m)?;
    let d = vals.len();
    let lmax = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lmin_abs = vals.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if lmax <= 0.0 || lmin_abs == 0.0 {
        return Err(Error::DegenerateLatentConfiguration(f64::INFINITY));
    }
    let cond = lmax / lmin_abs;
    if vals.iter().any(|&v| v <= 0.0) || cond > cond_limit {
        return Err(Error::DegenerateLatentConfiguration(cond));
    }
    let mut inv = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += vecs[[i, k]] * vecs[[j, k]] / vals[k];
            }
            inv[[i, j]] = s;
        }
    }
    Ok((inv, cond))
}

/// Symmetrizes as `(S + S^T)/2` and floors eigenvalues at `1e-12 * lambda_max`.
///
/// Used before density evaluation; the raw matrix is kept by callers for
/// diagnostics.
pub fn symmetrize_floor(m: &Array2<f64>) -> Result<Array2<f64>> {
    let d = m.nrows();
    let mut sym = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            sym[[i, j]] = 0.5 * (m[[i, j]] + m[[j, i]]);
        }
    }
    let (vals, vecs) = eigh_desc(&sym)?;
    let lmax = vals[0];
    if !(lmax > 0.0) {
        return Err(Error::CovarianceNotPd);
    }
    let floor = 1e-12 * lmax;
    let clipped: Vec<f64> = vals.iter().map(|&v| v.max(floor)).collect();
    let mut out = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += vecs[[i, k]] * vecs[[j, k]] * clipped[k];
            }
            out[[i, j]] = s;
        }
    }
    Ok(out)
}

/// Frobenius norm of the elementwise difference.
pub fn frob_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Maximum absolute asymmetry `max |S_ij - S_ji|`.
pub fn max_asymmetry(m: &Array2<f64>) -> f64 {
    let d = m.nrows();
    let mut a = 0.0f64;
    for i in 0..d {
        for j in 0..i {
            a = a.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    a
}
