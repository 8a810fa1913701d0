//! Stochastic blockmodels: construction, sampling, and latent positions.
//!
//! Block labels are 0-based throughout the crate; the edge-list export uses
//! 1-based vertex indices.

use std::io::Write;

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::linalg::eigh_desc;
use crate::rng::derive_rng;
use crate::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;

fn check_simplex(pi: &Array1<f64>) -> Result<()> {
    if pi.iter().any(|&p| p < 0.0) || (pi.sum() - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::NotASimplex);
    }
    Ok(())
}

fn check_symmetric(m: &Array2<f64>) -> Result<()> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::NotSymmetric);
    }
    for i in 0..n {
        for j in 0..i {
            if (m[[i, j]] - m[[j, i]]).abs() > 1e-12 {
                return Err(Error::NotSymmetric);
            }
        }
    }
    Ok(())
}

/// A `K`-block stochastic blockmodel: block edge-probability matrix `B`,
/// mixing proportions `pi`, and the detected rank `d` of `B`.
#[derive(Debug, Clone)]
pub struct BlockModel {
    b: Array2<f64>,
    pi: Array1<f64>,
    d: usize,
}

impl BlockModel {
    /// Validates `B` (symmetric, entries in (0,1), PSD) and `pi` (simplex),
    /// and detects `d = rank(B)` from the eigenvalues above `1e-10 * lambda_max`.
    pub fn new(b: Array2<f64>, pi: Array1<f64>) -> Result<Self> {
        check_symmetric(&b)?;
        let k = b.nrows();
        if pi.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "B is {}x{} but pi has length {}",
                k,
                k,
                pi.len()
            )));
        }
        check_simplex(&pi)?;
        for &v in b.iter() {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidEdgeProbability(v));
            }
        }
        let (vals, _) = eigh_desc(&b)?;
        let lmax = vals[0];
        if vals.iter().any(|&v| v < -1e-10) {
            return Err(Error::NotPsd(*vals.last().unwrap()));
        }
        let d = vals.iter().filter(|&&v| v > RANK_TOL * lmax).count();
        Ok(Self { b, pi, d })
    }

    pub fn k(&self) -> usize {
        self.b.nrows()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn b(&self) -> &Array2<f64> {
        &self.b
    }

    pub fn pi(&self) -> &Array1<f64> {
        &self.pi
    }

    /// Canonical latent positions of this model's block matrix.
    pub fn latent_config(&self) -> Result<LatentConfig> {
        let x = canonical_latent_positions(&self.b)?;
        LatentConfig::new(x, self.pi.clone())
    }
}

/// The `K x d` latent-position matrix (rows `nu_k`) and mixing proportions:
/// the parameter vector the mixture engines estimate.
#[derive(Debug, Clone)]
pub struct LatentConfig {
    x: Array2<f64>,
    pi: Array1<f64>,
}

impl LatentConfig {
    /// Validates pairwise dot products in (0,1) and row norms at most 1.
    pub fn new(x: Array2<f64>, pi: Array1<f64>) -> Result<Self> {
        if x.nrows() != pi.len() {
            return Err(Error::DimensionMismatch(format!(
                "x has {} rows but pi has length {}",
                x.nrows(),
                pi.len()
            )));
        }
        check_simplex(&pi)?;
        let k = x.nrows();
        for j in 0..k {
            for l in j..k {
                let dot = x.row(j).dot(&x.row(l));
                if !(dot > 0.0 && dot < 1.0) {
                    return Err(Error::InvalidLatentDotProduct(dot));
                }
            }
        }
        Ok(Self { x, pi })
    }

    /// Skips validation; used by the fitting engines on intermediate iterates,
    /// whose dot products may transiently leave (0,1).
    pub fn new_unchecked(x: Array2<f64>, pi: Array1<f64>) -> Self {
        Self { x, pi }
    }

    pub fn k(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn pi(&self) -> &Array1<f64> {
        &self.pi
    }
}

/// A sampled graph: symmetric 0/1 adjacency with zero diagonal, plus the block
/// labels it was generated from (when known).
#[derive(Debug, Clone)]
pub struct Graph {
    pub adjacency: Array2<f64>,
    pub tau: Option<Vec<usize>>,
}

impl Graph {
    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    /// Per-block label counts, when labels are present.
    pub fn block_counts(&self, k: usize) -> Option<Vec<usize>> {
        self.tau.as_ref().map(|tau| {
            let mut c = vec![0usize; k];
            for &t in tau {
                c[t] += 1;
            }
            c
        })
    }

    /// Writes the upper-triangle edge list, one `i j` pair per line, 1-based.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.n();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adjacency[[i, j]] != 0.0 {
                    writeln!(w, "{} {}", i + 1, j + 1)?;
                }
            }
        }
        Ok(())
    }
}

/// Computes the canonical latent-position factor of a symmetric PSD block
/// matrix: the symmetric square root `U D^{1/2} U^T` when `B` has full rank,
/// and the thin factor `U^{(d)} (D^{(d)})^{1/2}` when `rank(B) = d < K`.
pub fn canonical_latent_positions(b: &Array2<f64>) -> Result<Array2<f64>> {
    check_symmetric(b)?;
    let k = b.nrows();
    let (vals, vecs) = eigh_desc(b)?;
    let lmax = vals[0];
    if vals.iter().any(|&v| v < -1e-10) {
        return Err(Error::NotPsd(*vals.last().unwrap()));
    }
    let d = vals.iter().filter(|&&v| v > RANK_TOL * lmax.max(0.0)).count();
    if d == 0 {
        return Err(Error::NotPsd(lmax));
    }
    if d == k {
        // symmetric square root, centered in the first orthant
        let mut x = Array2::<f64>::zeros((k, k));
        for i in 0..k {
            for j in 0..k {
                let mut s = 0.0;
                for l in 0..k {
                    s += vecs[[i, l]] * vals[l].sqrt() * vecs[[j, l]];
                }
                x[[i, j]] = s;
            }
        }
        Ok(x)
    } else {
        let mut x = Array2::<f64>::zeros((k, d));
        for i in 0..k {
            for l in 0..d {
                x[[i, l]] = vecs[[i, l]] * vals[l].sqrt();
            }
        }
        Ok(x)
    }
}

/// Samples an SBM graph. Labels are drawn i.i.d. categorical from `pi` unless
/// `fixed_labels` pins them; upper-triangle edges are independent Bernoulli
/// given the labels, the diagonal is zero, and the draw is deterministic in
/// `seed`.
pub fn sample_sbm(
    model: &BlockModel,
    n: usize,
    seed: u64,
    fixed_labels: Option<&[usize]>,
) -> Result<Graph> {
    let k = model.k();
    if n < k {
        return Err(Error::InvalidInput(format!("n = {} below K = {}", n, k)));
    }
    let mut rng = derive_rng(seed, &[n as u64]);
    let tau: Vec<usize> = match fixed_labels {
        Some(labels) => {
            if labels.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "fixed_labels has length {} for n = {}",
                    labels.len(),
                    n
                )));
            }
            for &t in labels {
                if t >= k {
                    return Err(Error::LabelOutOfRange(t, k));
                }
            }
            labels.to_vec()
        }
        None => {
            let mut cdf = vec![0.0f64; k];
            let mut acc = 0.0;
            for (j, &p) in model.pi().iter().enumerate() {
                acc += p;
                cdf[j] = acc;
            }
            (0..n)
                .map(|_| {
                    let u: f64 = rng.gen();
                    cdf.iter().position(|&c| u <= c).unwrap_or(k - 1)
                })
                .collect()
        }
    };
    let mut adjacency = Array2::<f64>::zeros((n, n));
    let b = model.b();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = b[[tau[i], tau[j]]];
            if rng.gen::<f64>() < p {
                adjacency[[i, j]] = 1.0;
                adjacency[[j, i]] = 1.0;
            }
        }
    }
    Ok(Graph {
        adjacency,
        tau: Some(tau),
    })
}

/// Block-stacks latent positions: row `i` of the result is `nu_{tau_i}`.
pub fn expand_latent_positions(x: &Array2<f64>, tau: &[usize]) -> Result<Array2<f64>> {
    let k = x.nrows();
    let d = x.ncols();
    let mut out = Array2::<f64>::zeros((tau.len(), d));
    for (i, &t) in tau.iter().enumerate() {
        if t >= k {
            return Err(Error::LabelOutOfRange(t, k));
        }
        out.row_mut(i).assign(&x.row(t));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn b2(a: f64, b: f64) -> Array2<f64> {
        array![[a, b], [b, a]]
    }

    #[test]
    fn canonical_positions_match_symmetric_square_root() {
        // balanced affinity (.2, .15)
        let x = canonical_latent_positions(&b2(0.2, 0.15)).unwrap();
        assert_abs_diff_eq!(x[[0, 0]], 0.4076, epsilon = 5e-5);
        assert_abs_diff_eq!(x[[0, 1]], 0.1840, epsilon = 5e-5);
        assert_abs_diff_eq!(x[[1, 0]], 0.1840, epsilon = 5e-5);
        assert_abs_diff_eq!(x[[1, 1]], 0.4076, epsilon = 5e-5);
        // x x^T reproduces B
        let recon = x.dot(&x.t());
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(recon[[i, j]], b2(0.2, 0.15)[[i, j]], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn canonical_positions_diagonal_case() {
        let x = canonical_latent_positions(&array![[0.25, 0.0], [0.0, 0.25]]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert_abs_diff_eq!(x[[i, j]], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn canonical_positions_core_periphery() {
        // Independent oracle: closed-form 2x2 symmetric square root
        // sqrt(B) = (B + sqrt(det) I) / sqrt(trace + 2 sqrt(det)).
        let b = array![[0.2, 0.15], [0.15, 0.15]];
        let det: f64 = 0.2 * 0.15 - 0.15 * 0.15;
        let sd = det.sqrt();
        let denom = (0.35 + 2.0 * sd).sqrt();
        let x = canonical_latent_positions(&b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = (b[[i, j]] + if i == j { sd } else { 0.0 }) / denom;
                assert_abs_diff_eq!(x[[i, j]], expect, epsilon = 1e-12);
            }
        }
        // frozen values from the oracle
        assert_abs_diff_eq!(x[[0, 0]], 0.396226, epsilon = 5e-6);
        assert_abs_diff_eq!(x[[0, 1]], 0.207375, epsilon = 5e-6);
        assert_abs_diff_eq!(x[[1, 1]], 0.327102, epsilon = 5e-6);
    }

    #[test]
    fn canonical_positions_reject_bad_input() {
        assert!(canonical_latent_positions(&array![[0.2, 0.3], [0.1, 0.2]]).is_err());
        assert!(matches!(
            canonical_latent_positions(&array![[0.1, 0.5], [0.5, 0.1]]),
            Err(Error::NotPsd(_))
        ));
    }

    #[test]
    fn rank_deficient_returns_thin_factor() {
        // rank-1: B = v v^T with v = (.6, .3)
        let b = array![[0.36, 0.18], [0.18, 0.09]];
        let x = canonical_latent_positions(&b).unwrap();
        assert_eq!(x.dim(), (2, 1));
        let recon = x.dot(&x.t());
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(recon[[i, j]], b[[i, j]], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn sampled_graphs_are_symmetric_hollow_and_deterministic() {
        let model = BlockModel::new(b2(0.5, 0.4), array![0.5, 0.5]).unwrap();
        let g1 = sample_sbm(&model, 50, 9, None).unwrap();
        let g2 = sample_sbm(&model, 50, 9, None).unwrap();
        assert_eq!(g1.adjacency, g2.adjacency);
        for i in 0..50 {
            assert_eq!(g1.adjacency[[i, i]], 0.0);
            for j in 0..50 {
                assert_eq!(g1.adjacency[[i, j]], g1.adjacency[[j, i]]);
                assert!(g1.adjacency[[i, j]] == 0.0 || g1.adjacency[[i, j]] == 1.0);
            }
        }
    }

    #[test]
    fn single_edge_probability() {
        // n = K = 2, B12 = 0.98 (kept PSD): edge frequency ~ Bern(0.98)
        let b = array![[0.99, 0.98], [0.98, 0.99]];
        let model = BlockModel::new(b, array![0.5, 0.5]).unwrap();
        let mut hits = 0usize;
        let reps = 2000;
        for s in 0..reps {
            let g = sample_sbm(&model, 2, s as u64, Some(&[0, 1])).unwrap();
            if g.adjacency[[0, 1]] == 1.0 {
                hits += 1;
            }
        }
        let freq = hits as f64 / reps as f64;
        // 3 binomial standard errors around 0.98
        let se = (0.98f64 * 0.02 / reps as f64).sqrt();
        assert!((freq - 0.98).abs() < 3.0 * se + 1e-9, "freq = {}", freq);
    }

    #[test]
    fn edge_density_matches_constant_block_probability() {
        // all entries equal: density over 100 samples of n = 200 within 3 SEs of p
        let p = 0.3;
        let model = BlockModel::new(b2(p, p - 1e-9), array![0.5, 0.5]).unwrap();
        let n = 200;
        let mut edges = 0u64;
        let samples = 100;
        for s in 0..samples {
            let g = sample_sbm(&model, n, 1000 + s, None).unwrap();
            edges += g.adjacency.sum() as u64 / 2;
        }
        let pairs = (samples as u64) * (n as u64) * (n as u64 - 1) / 2;
        let density = edges as f64 / pairs as f64;
        let se = (p * (1.0 - p) / pairs as f64).sqrt();
        assert!((density - p).abs() < 3.0 * se, "density = {}", density);
    }

    #[test]
    fn block_conditional_edge_frequencies_converge_to_b() {
        let b = b2(0.5, 0.4);
        let model = BlockModel::new(b.clone(), array![0.5, 0.5]).unwrap();
        let n = 300;
        let labels: Vec<usize> = (0..n).map(|i| if i < n / 2 { 0 } else { 1 }).collect();
        let mut counts = [[0u64; 2]; 2];
        let mut pairs = [[0u64; 2]; 2];
        for s in 0..30 {
            let g = sample_sbm(&model, n, 77 + s, Some(&labels)).unwrap();
            for i in 0..n {
                for j in (i + 1)..n {
                    let (bi, bj) = (labels[i], labels[j]);
                    pairs[bi][bj] += 1;
                    if g.adjacency[[i, j]] == 1.0 {
                        counts[bi][bj] += 1;
                    }
                }
            }
        }
        for bi in 0..2 {
            for bj in bi..2 {
                let p = b[[bi, bj]];
                let m = pairs[bi][bj] as f64;
                let freq = counts[bi][bj] as f64 / m;
                let se = (p * (1.0 - p) / m).sqrt();
                assert!((freq - p).abs() < 3.0 * se, "block ({},{}): {}", bi, bj, freq);
            }
        }
    }

    #[test]
    fn expand_latent_positions_stacks_rows() {
        let x = array![[1.0], [2.0]];
        let out = expand_latent_positions(&x, &[0, 1, 0]).unwrap();
        assert_eq!(out, array![[1.0], [2.0], [1.0]]);
        assert!(matches!(
            expand_latent_positions(&x, &[0, 2]),
            Err(Error::LabelOutOfRange(2, 2))
        ));
        let x2 = canonical_latent_positions(&b2(0.2, 0.15)).unwrap();
        let out = expand_latent_positions(&x2, &[0, 0, 1]).unwrap();
        assert_abs_diff_eq!(out[[0, 0]], 0.4076, epsilon = 5e-5);
        assert_abs_diff_eq!(out[[2, 0]], 0.1840, epsilon = 5e-5);
        assert_abs_diff_eq!(out[[2, 1]], 0.4076, epsilon = 5e-5);
    }

    #[test]
    fn expanded_positions_reproduce_edge_probability_matrix() {
        let b = b2(0.5, 0.4);
        let x = canonical_latent_positions(&b).unwrap();
        let tau = [0usize, 1, 1, 0, 1];
        let big_x = expand_latent_positions(&x, &tau).unwrap();
        let p = big_x.dot(&big_x.t());
        for i in 0..tau.len() {
            for j in 0..tau.len() {
                assert_abs_diff_eq!(p[[i, j]], b[[tau[i], tau[j]]], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn edge_list_is_one_based_upper_triangle() {
        let adjacency = array![[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        let g = Graph {
            adjacency,
            tau: None,
        };
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1 2\n2 3\n");
    }

    #[test]
    fn block_model_validation() {
        assert!(BlockModel::new(b2(0.5, 0.4), array![0.6, 0.5]).is_err());
        assert!(BlockModel::new(array![[1.2, 0.1], [0.1, 0.3]], array![0.5, 0.5]).is_err());
        let m = BlockModel::new(b2(0.5, 0.4), array![0.5, 0.5]).unwrap();
        assert_eq!(m.k(), 2);
        assert_eq!(m.d(), 2);
    }

    #[test]
    fn latent_config_validation() {
        let x = array![[0.9, 0.0], [0.0, 0.9]];
        assert!(matches!(
            LatentConfig::new(x, array![0.5, 0.5]),
            Err(Error::InvalidLatentDotProduct(_))
        ));
        let x2 = canonical_latent_positions(&b2(0.2, 0.15)).unwrap();
        assert!(LatentConfig::new(x2, array![0.5, 0.5]).is_ok());
    }
}
