//! Limit parameters of the spectral embeddings' curved-Gaussian mixtures,
//! specialized to a K-point latent distribution.
//!
//! The ASE side evaluates `Delta = sum_k pi_k nu_k nu_k^T` and the tied
//! covariance `Sigma(nu_k | x, pi)`; the LSE side evaluates `mu`,
//! `Delta-tilde`, the scaled component means, and `Sigma-tilde(nu_k | x, pi)`.
//! The LSE covariance is asymmetric exactly as displayed (the left factor
//! carries a 1/2 that the right does not); callers symmetrize for density
//! work and keep the raw value for diagnostics.

use ndarray::{Array1, Array2};

use crate::graph_model::LatentConfig;
use crate::linalg::{max_asymmetry, sym_inverse_guarded};
use crate::{Error, Result};

pub const COND_LIMIT: f64 = 1e12;
const CLAMP_LO: f64 = 1e-6;
const CLAMP_HI: f64 = 1.0 - 1e-6;

/// ASE limit parameters: `Delta` and the per-block covariances.
#[derive(Debug, Clone)]
pub struct AseLimitParams {
    pub delta: Array2<f64>,
    pub sigmas: Vec<Array2<f64>>,
}

/// LSE limit parameters: `mu`, `Delta-tilde`, per-block covariances (raw,
/// possibly asymmetric), and the count-scaled component means.
#[derive(Debug, Clone)]
pub struct LseLimitParams {
    pub mu: Array1<f64>,
    pub delta_tilde: Array2<f64>,
    pub sigmas_tilde: Vec<Array2<f64>>,
    pub scaled_means: Vec<Array1<f64>>,
}

/// Numerical diagnostics accumulated while evaluating covariance functions.
#[derive(Debug, Clone, Copy, Default)]
pub struct CovDiagnostics {
    /// Bernoulli-variance arguments clamped back into (0,1).
    pub clamped: usize,
    /// Condition number of the inverted `Delta` (or `Delta-tilde`).
    pub cond: f64,
    /// Largest `|S_ij - S_ji|` over the raw LSE covariances.
    pub max_asymmetry: f64,
}

/// Bernoulli variance `p(1-p)`, with `p` clamped into `[1e-6, 1-1e-6]` when an
/// iterate's dot products escape the open unit interval. The clamp applies to
/// the variance term only; the means are left untouched.
fn bern_var(p: f64, clamped: &mut usize) -> f64 {
    let q = if p < CLAMP_LO {
        *clamped += 1;
        CLAMP_LO
    } else if p > CLAMP_HI {
        *clamped += 1;
        CLAMP_HI
    } else {
        p
    };
    q * (1.0 - q)
}

/// `Delta = sum_k pi_k nu_k nu_k^T`. Errors if the result is singular beyond
/// the condition-number guard.
pub fn ase_delta(config: &LatentConfig) -> Result<Array2<f64>> {
    let delta = ase_delta_unchecked(config);
    sym_inverse_guarded(&delta, COND_LIMIT)?;
    Ok(delta)
}

fn ase_delta_unchecked(config: &LatentConfig) -> Array2<f64> {
    let (k, d) = (config.k(), config.d());
    let x = config.x();
    let pi = config.pi();
    let mut delta = Array2::<f64>::zeros((d, d));
    for b in 0..k {
        for i in 0..d {
            for j in 0..d {
                delta[[i, j]] += pi[b] * x[[b, i]] * x[[b, j]];
            }
        }
    }
    delta
}

/// All ASE limit parameters at once; one `Delta` inversion is shared across
/// the per-block covariances.
pub fn ase_limit_params(config: &LatentConfig) -> Result<AseLimitParams> {
    ase_limit_params_diag(config).map(|(p, _)| p)
}

pub fn ase_limit_params_diag(config: &LatentConfig) -> Result<(AseLimitParams, CovDiagnostics)> {
    let (k, d) = (config.k(), config.d());
    let x = config.x();
    let pi = config.pi();
    let delta = ase_delta_unchecked(config);
    let (delta_inv, cond) = sym_inverse_guarded(&delta, COND_LIMIT)?;
    let mut diag = CovDiagnostics {
        cond,
        ..Default::default()
    };
    let mut sigmas = Vec::with_capacity(k);
    for blk in 0..k {
        let mut inner = Array2::<f64>::zeros((d, d));
        for j in 0..k {
            let p = x.row(blk).dot(&x.row(j));
            let v = pi[j] * bern_var(p, &mut diag.clamped);
            for a in 0..d {
                for b in 0..d {
                    inner[[a, b]] += v * x[[j, a]] * x[[j, b]];
                }
            }
        }
        sigmas.push(delta_inv.dot(&inner).dot(&delta_inv));
    }
    Ok((AseLimitParams { delta, sigmas }, diag))
}

/// Covariance of the ASE limit for block `k`.
pub fn ase_covariance(k: usize, config: &LatentConfig) -> Result<Array2<f64>> {
    let params = ase_limit_params(config)?;
    params
        .sigmas
        .into_iter()
        .nth(k)
        .ok_or_else(|| Error::DimensionMismatch(format!("block index {}", k)))
}

/// `mu = sum_k pi_k nu_k`.
pub fn lse_mu(config: &LatentConfig) -> Array1<f64> {
    let (k, d) = (config.k(), config.d());
    let mut mu = Array1::<f64>::zeros(d);
    for b in 0..k {
        for i in 0..d {
            mu[i] += config.pi()[b] * config.x()[[b, i]];
        }
    }
    mu
}

/// `Delta-tilde = sum_k pi_k nu_k nu_k^T / (nu_k^T mu)`. Errors when some
/// `nu_k^T mu` is nonpositive.
pub fn lse_delta_tilde(config: &LatentConfig) -> Result<Array2<f64>> {
    let (k, d) = (config.k(), config.d());
    let x = config.x();
    let pi = config.pi();
    let mu = lse_mu(config);
    let mut dt = Array2::<f64>::zeros((d, d));
    for b in 0..k {
        let proj = x.row(b).dot(&mu);
        if proj <= 0.0 {
            return Err(Error::NonpositiveMeanProjection(b));
        }
        for i in 0..d {
            for j in 0..d {
                dt[[i, j]] += pi[b] * x[[b, i]] * x[[b, j]] / proj;
            }
        }
    }
    Ok(dt)
}

/// Count-scaled component mean `nu_k / sqrt(sum_l counts_l nu_k^T nu_l)`.
pub fn lse_scaled_mean(k: usize, x: &Array2<f64>, counts: &Array1<f64>) -> Result<Array1<f64>> {
    let denom: f64 = (0..x.nrows())
        .map(|l| counts[l] * x.row(k).dot(&x.row(l)))
        .sum();
    if denom <= 0.0 {
        return Err(Error::NonpositiveScaledMean(k));
    }
    Ok(x.row(k).mapv(|v| v / denom.sqrt()))
}

/// All LSE limit parameters. The covariances are symmetric by construction;
/// [`crate::linalg::symmetrize_floor`] still guards against a rounding-level
/// negative eigenvalue before density evaluation.
pub fn lse_limit_params(config: &LatentConfig, counts: &Array1<f64>) -> Result<LseLimitParams> {
    lse_limit_params_diag(config, counts).map(|(p, _)| p)
}

pub fn lse_limit_params_diag(
    config: &LatentConfig,
    counts: &Array1<f64>,
) -> Result<(LseLimitParams, CovDiagnostics)> {
    let (k, d) = (config.k(), config.d());
    let x = config.x();
    let pi = config.pi();
    let mu = lse_mu(config);
    let delta_tilde = lse_delta_tilde(config)?;
    let (dt_inv, cond) = sym_inverse_guarded(&delta_tilde, COND_LIMIT)?;
    let mut diag = CovDiagnostics {
        cond,
        ..Default::default()
    };
    let projs: Vec<f64> = (0..k).map(|b| x.row(b).dot(&mu)).collect();
    for (b, &p) in projs.iter().enumerate() {
        if p <= 0.0 {
            return Err(Error::NonpositiveMeanProjection(b));
        }
    }
    let mut sigmas_tilde = Vec::with_capacity(k);
    for blk in 0..k {
        let mut sigma = Array2::<f64>::zeros((d, d));
        for j in 0..k {
            // outer product of Dt^{-1} nu_j / (nu_j^T mu) - nu_k / (2 nu_k^T mu)
            // with itself, weighted by pi_j Var(Bern(p_kj)) / (nu_k^T mu)
            let dt_nu_j = dt_inv.dot(&x.row(j).to_owned());
            let mut left = Array1::<f64>::zeros(d);
            for a in 0..d {
                left[a] = dt_nu_j[a] / projs[j] - x[[blk, a]] / (2.0 * projs[blk]);
            }
            let p = x.row(blk).dot(&x.row(j));
            let scale = pi[j] * bern_var(p, &mut diag.clamped) / projs[blk];
            for a in 0..d {
                for b in 0..d {
                    sigma[[a, b]] += scale * left[a] * left[b];
                }
            }
        }
        diag.max_asymmetry = diag.max_asymmetry.max(max_asymmetry(&sigma));
        sigmas_tilde.push(sigma);
    }
    let mut scaled_means = Vec::with_capacity(k);
    for blk in 0..k {
        scaled_means.push(lse_scaled_mean(blk, x, counts)?);
    }
    Ok((
        LseLimitParams {
            mu,
            delta_tilde,
            sigmas_tilde,
            scaled_means,
        },
        diag,
    ))
}

/// Covariance of the LSE limit for block `k` (raw, asymmetric as displayed).
pub fn lse_covariance(k: usize, config: &LatentConfig) -> Result<Array2<f64>> {
    let counts = Array1::from(vec![1.0; config.k()]);
    let (params, _) = lse_limit_params_diag(config, &counts)?;
    params
        .sigmas_tilde
        .into_iter()
        .nth(k)
        .ok_or_else(|| Error::DimensionMismatch(format!("block index {}", k)))
}

/// Empirical plug-in moments from an ASE point cloud:
/// `(Delta-hat, mu-hat, Delta-tilde-hat)`.
pub fn empirical_moments(
    ase_points: &Array2<f64>,
) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (n, d) = ase_points.dim();
    if n < d {
        return Err(Error::InvalidInput(format!("n = {} below d = {}", n, d)));
    }
    let nf = n as f64;
    let mut delta_hat = Array2::<f64>::zeros((d, d));
    let mut mu_hat = Array1::<f64>::zeros(d);
    for row in ase_points.rows() {
        for a in 0..d {
            mu_hat[a] += row[a] / nf;
            for b in 0..d {
                delta_hat[[a, b]] += row[a] * row[b] / nf;
            }
        }
    }
    let mut dt_hat = Array2::<f64>::zeros((d, d));
    for (i, row) in ase_points.rows().into_iter().enumerate() {
        let proj = row.dot(&mu_hat);
        if proj <= 0.0 {
            return Err(Error::InvalidEmpiricalScaling(i));
        }
        for a in 0..d {
            for b in 0..d {
                dt_hat[[a, b]] += row[a] * row[b] / (proj * nf);
            }
        }
    }
    Ok((delta_hat, mu_hat, dt_hat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_model::canonical_latent_positions;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn x2_config() -> LatentConfig {
        let x = canonical_latent_positions(&array![[0.2, 0.15], [0.15, 0.2]]).unwrap();
        LatentConfig::new(x, array![0.5, 0.5]).unwrap()
    }

    // Direct-summation oracle for Delta, independent of the library path.
    fn delta_oracle(config: &LatentConfig) -> Array2<f64> {
        let (k, d) = (config.k(), config.d());
        let mut out = Array2::<f64>::zeros((d, d));
        for a in 0..d {
            for b in 0..d {
                let mut s = 0.0;
                for blk in 0..k {
                    s += config.pi()[blk] * config.x()[[blk, a]] * config.x()[[blk, b]];
                }
                out[[a, b]] = s;
            }
        }
        out
    }

    #[test]
    fn delta_single_component() {
        let cfg = LatentConfig::new(array![[0.6]], array![1.0]).unwrap();
        let delta = ase_delta(&cfg).unwrap();
        assert_abs_diff_eq!(delta[[0, 0]], 0.36, epsilon = 1e-15);
    }

    #[test]
    fn delta_matches_direct_summation() {
        let cfg = x2_config();
        let delta = ase_delta(&cfg).unwrap();
        let oracle = delta_oracle(&cfg);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(delta[[i, j]], oracle[[i, j]], epsilon = 1e-12);
            }
        }
        // equal weights: half the sum of outer products
        let x = cfg.x();
        let manual = 0.5
            * (x.row(0).to_owned().insert_axis(ndarray::Axis(1)).dot(
                &x.row(0).to_owned().insert_axis(ndarray::Axis(0)),
            ) + x.row(1).to_owned().insert_axis(ndarray::Axis(1)).dot(
                &x.row(1).to_owned().insert_axis(ndarray::Axis(0)),
            ));
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(delta[[i, j]], manual[[i, j]], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn ase_covariance_scalar_case() {
        // d = 1, K = 1, nu = sqrt(p): Delta = p, inner = p * p(1-p),
        // Sigma = p^{-1} * p^2(1-p) * p^{-1} = 1 - p.
        let p = 0.3f64;
        let cfg = LatentConfig::new(array![[p.sqrt()]], array![1.0]).unwrap();
        let sigma = ase_covariance(0, &cfg).unwrap();
        assert_abs_diff_eq!(sigma[[0, 0]], 1.0 - p, epsilon = 1e-14);
    }

    #[test]
    fn ase_covariance_matches_direct_summation_oracle() {
        // straight-line evaluation of the displayed formula
        let cfg = x2_config();
        let x = cfg.x();
        let delta = delta_oracle(&cfg);
        let det = delta[[0, 0]] * delta[[1, 1]] - delta[[0, 1]] * delta[[1, 0]];
        let inv = array![
            [delta[[1, 1]] / det, -delta[[0, 1]] / det],
            [-delta[[1, 0]] / det, delta[[0, 0]] / det]
        ];
        for k in 0..2 {
            let mut inner = Array2::<f64>::zeros((2, 2));
            for j in 0..2 {
                let p = x.row(k).dot(&x.row(j));
                for a in 0..2 {
                    for b in 0..2 {
                        inner[[a, b]] += 0.5 * x[[j, a]] * x[[j, b]] * (p - p * p);
                    }
                }
            }
            let expect = inv.dot(&inner).dot(&inv);
            let got = ase_covariance(k, &cfg).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    assert_abs_diff_eq!(got[[a, b]], expect[[a, b]], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn balanced_affinity_block_swap_symmetry() {
        let cfg = x2_config();
        let s1 = ase_covariance(0, &cfg).unwrap();
        let s2 = ase_covariance(1, &cfg).unwrap();
        // coordinates 1 <-> 2 swapped
        assert_abs_diff_eq!(s1[[0, 0]], s2[[1, 1]], epsilon = 1e-12);
        assert_abs_diff_eq!(s1[[1, 1]], s2[[0, 0]], epsilon = 1e-12);
        assert_abs_diff_eq!(s1[[0, 1]], s2[[1, 0]], epsilon = 1e-12);

        let t1 = lse_covariance(0, &cfg).unwrap();
        let t2 = lse_covariance(1, &cfg).unwrap();
        assert_abs_diff_eq!(t1[[0, 0]], t2[[1, 1]], epsilon = 1e-12);
        assert_abs_diff_eq!(t1[[1, 1]], t2[[0, 0]], epsilon = 1e-12);
    }

    #[test]
    fn degenerate_configuration_is_rejected() {
        // both positions on the same ray: Delta is rank 1
        let x = array![[0.6, 0.3], [0.4, 0.2]];
        let cfg = LatentConfig::new(x, array![0.5, 0.5]).unwrap();
        assert!(matches!(
            ase_delta(&cfg),
            Err(Error::DegenerateLatentConfiguration(_))
        ));
    }

    #[test]
    fn lse_mu_and_delta_tilde_single_component() {
        let cfg = LatentConfig::new(array![[0.6, 0.3]], array![1.0]).unwrap();
        let mu = lse_mu(&cfg);
        assert_abs_diff_eq!(mu[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(mu[1], 0.3, epsilon = 1e-15);
        let dt = lse_delta_tilde(&cfg).unwrap();
        let nn = 0.6 * 0.6 + 0.3 * 0.3;
        assert_abs_diff_eq!(dt[[0, 0]], 0.36 / nn, epsilon = 1e-14);
        assert_abs_diff_eq!(dt[[0, 1]], 0.18 / nn, epsilon = 1e-14);
    }

    #[test]
    fn lse_moments_match_direct_summation() {
        let cfg = x2_config();
        let x = cfg.x();
        let mu = lse_mu(&cfg);
        for a in 0..2 {
            let expect = 0.5 * (x[[0, a]] + x[[1, a]]);
            assert_abs_diff_eq!(mu[a], expect, epsilon = 1e-12);
        }
        let dt = lse_delta_tilde(&cfg).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let mut expect = 0.0;
                for blk in 0..2 {
                    let proj = x.row(blk).dot(&mu);
                    expect += 0.5 * x[[blk, a]] * x[[blk, b]] / proj;
                }
                assert_abs_diff_eq!(dt[[a, b]], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn delta_tilde_scaling_degree() {
        // nu -> c nu scales mu by c but leaves Delta-tilde fixed: numerator
        // and the nu^T mu denominator both pick up c^2
        let cfg = x2_config();
        let c = 0.7;
        let scaled = LatentConfig::new_unchecked(cfg.x().mapv(|v| c * v), cfg.pi().clone());
        let dt = lse_delta_tilde(&cfg).unwrap();
        let dt_c = lse_delta_tilde(&scaled).unwrap();
        let mu = lse_mu(&cfg);
        let mu_c = lse_mu(&scaled);
        for a in 0..2 {
            assert_abs_diff_eq!(mu_c[a], c * mu[a], epsilon = 1e-12);
            for b in 0..2 {
                assert_abs_diff_eq!(dt_c[[a, b]], dt[[a, b]], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lse_covariance_matches_direct_summation_oracle() {
        // straight-line evaluation of the displayed formula with an explicit
        // 2x2 adjugate inverse, on an unbalanced configuration
        let cfg = LatentConfig::new(
            canonical_latent_positions(&array![[0.5, 0.4], [0.4, 0.5]]).unwrap(),
            array![0.3, 0.7],
        )
        .unwrap();
        let x = cfg.x();
        let pi = cfg.pi();
        let mut mu = [0.0f64; 2];
        for blk in 0..2 {
            for a in 0..2 {
                mu[a] += pi[blk] * x[[blk, a]];
            }
        }
        let proj = |blk: usize| x[[blk, 0]] * mu[0] + x[[blk, 1]] * mu[1];
        let mut dt = [[0.0f64; 2]; 2];
        for blk in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    dt[a][b] += pi[blk] * x[[blk, a]] * x[[blk, b]] / proj(blk);
                }
            }
        }
        let det = dt[0][0] * dt[1][1] - dt[0][1] * dt[1][0];
        let inv = [
            [dt[1][1] / det, -dt[0][1] / det],
            [-dt[1][0] / det, dt[0][0] / det],
        ];
        for k in 0..2 {
            let mut expect = Array2::<f64>::zeros((2, 2));
            for j in 0..2 {
                let dtnu = [
                    inv[0][0] * x[[j, 0]] + inv[0][1] * x[[j, 1]],
                    inv[1][0] * x[[j, 0]] + inv[1][1] * x[[j, 1]],
                ];
                let p = x.row(k).dot(&x.row(j));
                let scale = pi[j] * (p - p * p) / proj(k);
                for a in 0..2 {
                    for b in 0..2 {
                        let left = dtnu[a] / proj(j) - x[[k, a]] / (2.0 * proj(k));
                        let right = dtnu[b] / proj(j) - x[[k, b]] / (2.0 * proj(k));
                        expect[[a, b]] += scale * left * right;
                    }
                }
            }
            let got = lse_covariance(k, &cfg).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    assert_abs_diff_eq!(got[[a, b]], expect[[a, b]], epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn scaled_mean_homogeneity() {
        let cfg = x2_config();
        let x = cfg.x();
        // K = 1 reduction
        let x1 = array![[0.6, 0.3]];
        let m = lse_scaled_mean(0, &x1, &array![25.0]).unwrap();
        let nn = 0.45f64;
        assert_abs_diff_eq!(m[0], 0.6 / (25.0 * nn).sqrt(), epsilon = 1e-14);
        // doubling counts divides by sqrt(2)
        let counts = array![450.0, 450.0];
        let a = lse_scaled_mean(0, x, &counts).unwrap();
        let b = lse_scaled_mean(0, x, &counts.mapv(|v| 2.0 * v)).unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(b[i], a[i] / 2.0f64.sqrt(), epsilon = 1e-14);
        }
        // direct evaluation
        let denom: f64 = (0..2).map(|l| 450.0 * x.row(0).dot(&x.row(l))).sum();
        for i in 0..2 {
            assert_abs_diff_eq!(a[i], x[[0, i]] / denom.sqrt(), epsilon = 1e-14);
        }
        // norm shrinks
        assert!(a.dot(&a).sqrt() < x.row(0).dot(&x.row(0)).sqrt());
    }

    #[test]
    fn empirical_moments_point_mass() {
        let v = array![0.5, 0.2];
        let pts = Array2::from_shape_fn((6, 2), |(_, j)| v[j]);
        let (dh, mh, dth) = empirical_moments(&pts).unwrap();
        for a in 0..2 {
            assert_abs_diff_eq!(mh[a], v[a], epsilon = 1e-14);
            for b in 0..2 {
                assert_abs_diff_eq!(dh[[a, b]], v[a] * v[b], epsilon = 1e-14);
                assert_abs_diff_eq!(
                    dth[[a, b]],
                    v[a] * v[b] / v.dot(&v),
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn empirical_moments_finite_mixture_of_point_masses() {
        let cfg = x2_config();
        let tau: Vec<usize> = (0..10).map(|i| if i < 4 { 0 } else { 1 }).collect();
        let pts = crate::graph_model::expand_latent_positions(cfg.x(), &tau).unwrap();
        let (dh, _, _) = empirical_moments(&pts).unwrap();
        let x = cfg.x();
        for a in 0..2 {
            for b in 0..2 {
                let expect = 0.4 * x[[0, a]] * x[[0, b]] + 0.6 * x[[1, a]] * x[[1, b]];
                assert_abs_diff_eq!(dh[[a, b]], expect, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn empirical_moments_reject_nonpositive_projection() {
        let pts = array![[1.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [-1.0000001, 0.0]];
        assert!(matches!(
            empirical_moments(&pts),
            Err(Error::InvalidEmpiricalScaling(_))
        ));
    }

    #[test]
    fn block_permutation_invariance() {
        let cfg = x2_config();
        let xp = array![
            [cfg.x()[[1, 0]], cfg.x()[[1, 1]]],
            [cfg.x()[[0, 0]], cfg.x()[[0, 1]]]
        ];
        let perm = LatentConfig::new(xp, array![0.5, 0.5]).unwrap();
        for k in 0..2 {
            let a = ase_covariance(k, &cfg).unwrap();
            let b = ase_covariance(1 - k, &perm).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(a[[i, j]], b[[i, j]], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn orthogonal_equivariance_of_ase_covariance() {
        let cfg = x2_config();
        let theta = 0.35f64;
        let w = array![
            [theta.cos(), -theta.sin()],
            [theta.sin(), theta.cos()]
        ];
        let rotated = LatentConfig::new_unchecked(cfg.x().dot(&w), cfg.pi().clone());
        for k in 0..2 {
            let s = ase_covariance(k, &cfg).unwrap();
            let sr = ase_covariance(k, &rotated).unwrap();
            let expect = w.t().dot(&s).dot(&w);
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(sr[[i, j]], expect[[i, j]], epsilon = 1e-12);
                }
            }
        }
    }
}
