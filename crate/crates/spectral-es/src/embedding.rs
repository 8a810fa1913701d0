//! Adjacency and Laplacian spectral embeddings plus Procrustes alignment.

use std::io::Write;

use ndarray::{Array1, Array2};

use crate::linalg::{eigh_desc, svd};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingKind {
    Ase,
    Lse,
}

/// An `n x d` spectral point cloud. The degree vector of the source adjacency
/// is retained so the LSE can be reproduced from the ASE by row scaling.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub points: Array2<f64>,
    pub kind: EmbeddingKind,
    pub degrees: Array1<f64>,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn d(&self) -> usize {
        self.points.ncols()
    }

    /// Writes one point per row, fields separated by a single space, with 17
    /// significant digits.
    pub fn write_points<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in self.points.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{:.16e}", v)).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

fn spectral_factor(m: &Array2<f64>, d: usize) -> Result<Array2<f64>> {
    let n = m.nrows();
    if d > n {
        return Err(Error::DimensionMismatch(format!("d = {} exceeds n = {}", d, n)));
    }
    let (vals, vecs) = eigh_desc(m)?;
    for j in 0..d {
        if vals[j] <= 0.0 {
            return Err(Error::InsufficientPositiveSpectrum(d, vals[j]));
        }
    }
    let mut points = Array2::<f64>::zeros((n, d));
    for j in 0..d {
        let s = vals[j].sqrt();
        for i in 0..n {
            points[[i, j]] = vecs[[i, j]] * s;
        }
    }
    Ok(points)
}

/// Adjacency spectral embedding: top-`d` eigenvectors of `a` scaled by the
/// square roots of their eigenvalues.
pub fn ase(a: &Array2<f64>, d: usize) -> Result<Embedding> {
    let points = spectral_factor(a, d)?;
    let degrees = a.sum_axis(ndarray::Axis(1));
    Ok(Embedding {
        points,
        kind: EmbeddingKind::Ase,
        degrees,
    })
}

/// Degree-normalized Laplacian `D^{-1/2} M D^{-1/2}`.
pub fn normalized_laplacian(m: &Array2<f64>) -> Result<Array2<f64>> {
    let n = m.nrows();
    let deg = m.sum_axis(ndarray::Axis(1));
    for (i, &di) in deg.iter().enumerate() {
        if di <= 0.0 {
            return Err(Error::IsolatedVertex(i));
        }
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|&d| 1.0 / d.sqrt()).collect();
    let mut out = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] = m[[i, j]] * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    Ok(out)
}

/// Laplacian spectral embedding: the ASE construction applied to the
/// normalized Laplacian of `a`. Degrees are taken from `a` itself.
pub fn lse(a: &Array2<f64>, d: usize) -> Result<Embedding> {
    let lap = normalized_laplacian(a)?;
    let points = spectral_factor(&lap, d)?;
    let degrees = a.sum_axis(ndarray::Axis(1));
    Ok(Embedding {
        points,
        kind: EmbeddingKind::Lse,
        degrees,
    })
}

/// Row-scales an ASE by `1/sqrt(degree)` to obtain the LSE through the 1-1
/// transformation between the two embeddings.
pub fn ase_to_lse(ase_embedding: &Embedding, degrees: &Array1<f64>) -> Result<Embedding> {
    if ase_embedding.kind != EmbeddingKind::Ase {
        return Err(Error::InvalidInput("ase_to_lse expects an ASE".into()));
    }
    let n = ase_embedding.n();
    if degrees.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "degrees has length {} for n = {}",
            degrees.len(),
            n
        )));
    }
    let mut points = ase_embedding.points.clone();
    for (i, &di) in degrees.iter().enumerate() {
        if di <= 0.0 {
            return Err(Error::NonpositiveDegree(di));
        }
        let s = 1.0 / di.sqrt();
        points.row_mut(i).mapv_inplace(|v| v * s);
    }
    Ok(Embedding {
        points,
        kind: EmbeddingKind::Lse,
        degrees: degrees.clone(),
    })
}

/// Orthogonal matrix `W` minimizing `||source W - target||_F`, computed from
/// the singular factors of `source^T target`. With a rank-deficient cross
/// matrix the minimizer is not unique; the factors LAPACK returns are used
/// as-is, which keeps the result deterministic.
pub fn procrustes_align(source: &Array2<f64>, target: &Array2<f64>) -> Result<Array2<f64>> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch(format!(
            "source {:?} vs target {:?}",
            source.dim(),
            target.dim()
        )));
    }
    let cross = source.t().dot(target);
    let (u, _s, vt) = svd(&cross)?;
    Ok(u.dot(&vt))
}
