//! Mixture-fitting engines: full-GMM EM, the generic curved-GMM
//! Expectation-Solution step, its tied ASE and LSE specializations, the shared
//! iteration driver, a K-means baseline, and cluster assignment.
//!
//! Every engine shares the same E-step (log-space, log-sum-exp); they differ
//! in how parameters are refreshed. The curved engines never treat the
//! covariances as free parameters: after each S-step the `sigmas` are
//! recomputed as the variance-function image of the new `(x, pi)`.

use ndarray::{Array1, Array2, ArrayView1};

use crate::graph_model::LatentConfig;
use crate::limit_covariance::{
    ase_limit_params_diag, lse_limit_params_diag, lse_scaled_mean, CovDiagnostics,
};
use crate::linalg::{cholesky, forward_substitute, symmetrize_floor};
use crate::{Error, Result};

const COLLAPSE_TOL: f64 = 1e-10;

/// Which update rule the iteration driver applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    /// EM for the unconstrained full-covariance Gaussian mixture.
    FullGmm,
    /// Tied curved engine on adjacency-embedding points.
    CurvedAse,
    /// Tied curved engine: Laplacian-embedding points in the E-step,
    /// adjacency-embedding points in the S-step.
    CurvedLse,
}

/// Free/derived parameters of one mixture iterate.
///
/// `nu` rows are the latent positions (component means for the full GMM);
/// `sigmas` are derived for the curved engines and free for EM; `counts`
/// carries the per-block sizes `n_k` used by the LSE engine only.
#[derive(Debug, Clone)]
pub struct MixtureState {
    pub pi: Array1<f64>,
    pub nu: Array2<f64>,
    pub sigmas: Vec<Array2<f64>>,
    pub counts: Option<Array1<f64>>,
}

impl MixtureState {
    pub fn k(&self) -> usize {
        self.nu.nrows()
    }

    pub fn d(&self) -> usize {
        self.nu.ncols()
    }

    /// Serializes as delimited text: the `pi` line, `K` rows of `nu`, then the
    /// `K` stacked covariance blocks.
    pub fn write_text<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let fmt_row = |row: ArrayView1<f64>| {
            row.iter()
                .map(|v| format!("{:.16e}", v))
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(w, "{}", fmt_row(self.pi.view()))?;
        for row in self.nu.rows() {
            writeln!(w, "{}", fmt_row(row))?;
        }
        for s in &self.sigmas {
            for row in s.rows() {
                writeln!(w, "{}", fmt_row(row))?;
            }
        }
        Ok(())
    }
}

/// Posterior membership probabilities; rows sum to one.
#[derive(Debug, Clone)]
pub struct Responsibilities {
    pub z: Array2<f64>,
}

/// Diagnostics collected by the iteration driver.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub iterations: usize,
    pub converged: bool,
    pub final_step_norm: f64,
    /// Per-iteration parameter-vector distances (populated when tracing).
    pub trace: Vec<f64>,
    /// Condition number of the inverted moment matrix, per iteration.
    pub delta_conds: Vec<f64>,
    /// Gram entries clamped inside Bernoulli variance terms, total.
    pub clamp_events: usize,
    /// E-step rows where every component density underflowed, total.
    pub underflow_rows: usize,
    /// Covariance updates that needed the ridge floor (EM only), total.
    pub ridge_events: usize,
    /// Reason the run stopped early, if an engine error terminated it.
    pub failure: Option<String>,
}

/// Per-iteration engine diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct IterDiag {
    pub underflow_rows: usize,
    pub clamped: usize,
    pub cond: f64,
    pub ridged: usize,
}

/// Log density of `N(mean, cov)` at `point`, evaluated through a Cholesky
/// factorization entirely in log space.
pub fn gaussian_log_density(
    point: ArrayView1<f64>,
    mean: ArrayView1<f64>,
    cov: &Array2<f64>,
) -> Result<f64> {
    let l = cholesky(cov)?;
    Ok(gaussian_log_density_chol(point, mean, &l))
}

fn gaussian_log_density_chol(point: ArrayView1<f64>, mean: ArrayView1<f64>, l: &Array2<f64>) -> f64 {
    let d = point.len();
    let diff = Array1::from_iter(point.iter().zip(mean.iter()).map(|(p, m)| p - m));
    let y = forward_substitute(l, &diff);
    let quad: f64 = y.iter().map(|v| v * v).sum();
    let log_det: f64 = (0..d).map(|i| l[[i, i]].ln()).sum();
    -0.5 * (d as f64) * (2.0 * std::f64::consts::PI).ln() - log_det - 0.5 * quad
}

fn e_step_with(
    points: &Array2<f64>,
    pi: &Array1<f64>,
    means: &[Array1<f64>],
    sigmas: &[Array2<f64>],
) -> Result<(Responsibilities, usize)> {
    let (n, _) = points.dim();
    let k = pi.len();
    let chols: Vec<Array2<f64>> = sigmas.iter().map(cholesky).collect::<Result<_>>()?;
    let log_pi: Vec<f64> = pi.iter().map(|&p| p.ln()).collect(); // ln 0 = -inf
    let mut z = Array2::<f64>::zeros((n, k));
    let mut underflow = 0usize;
    for i in 0..n {
        let mut logw = vec![0.0f64; k];
        let mut best = f64::NEG_INFINITY;
        for j in 0..k {
            logw[j] =
                log_pi[j] + gaussian_log_density_chol(points.row(i), means[j].view(), &chols[j]);
            if logw[j] > best {
                best = logw[j];
            }
        }
        if !best.is_finite() {
            // every component underflowed (or has zero weight): fall back to
            // uniform responsibilities and flag it
            underflow += 1;
            for j in 0..k {
                z[[i, j]] = 1.0 / k as f64;
            }
            continue;
        }
        let mut total = 0.0;
        for j in 0..k {
            let w = (logw[j] - best).exp();
            z[[i, j]] = w;
            total += w;
        }
        for j in 0..k {
            z[[i, j]] /= total;
        }
    }
    Ok((Responsibilities { z }, underflow))
}

/// Posterior responsibilities of `points` under `state`, with component means
/// taken from `state.nu` (ASE and EM engines). Returns the count of rows that
/// fell back to uniform weights after total underflow.
pub fn e_step(points: &Array2<f64>, state: &MixtureState) -> Result<(Responsibilities, usize)> {
    let means: Vec<Array1<f64>> = state.nu.rows().into_iter().map(|r| r.to_owned()).collect();
    e_step_with(points, &state.pi, &means, &state.sigmas)
}

fn weighted_moments(
    points: &Array2<f64>,
    resp: &Responsibilities,
) -> Result<(Array1<f64>, Array2<f64>)> {
    let (n, d) = points.dim();
    let k = resp.z.ncols();
    let mut mass = Array1::<f64>::zeros(k);
    let mut means = Array2::<f64>::zeros((k, d));
    for i in 0..n {
        for j in 0..k {
            let w = resp.z[[i, j]];
            mass[j] += w;
            for a in 0..d {
                means[[j, a]] += w * points[[i, a]];
            }
        }
    }
    for j in 0..k {
        if mass[j] < COLLAPSE_TOL {
            return Err(Error::ComponentCollapse(j, mass[j]));
        }
        for a in 0..d {
            means[[j, a]] /= mass[j];
        }
    }
    Ok((mass, means))
}

/// Generic curved S-step: proportion and mean updates, with the covariances
/// produced by an arbitrary variance function of the new `(x, pi)`.
pub fn s_step_cgmm<F>(
    points: &Array2<f64>,
    resp: &Responsibilities,
    variance_functions: F,
) -> Result<MixtureState>
where
    F: Fn(&LatentConfig) -> Result<Vec<Array2<f64>>>,
{
    let n = points.nrows() as f64;
    let (mass, means) = weighted_moments(points, resp)?;
    let pi = mass.mapv(|m| m / n);
    let sigmas = variance_functions(&LatentConfig::new_unchecked(means.clone(), pi.clone()))?;
    Ok(MixtureState {
        pi,
        nu: means,
        sigmas,
        counts: None,
    })
}

/// EM M-step for the unconstrained full-covariance mixture. Returns the new
/// state and the number of covariance blocks that needed the ridge floor.
pub fn m_step_full_gmm(
    points: &Array2<f64>,
    resp: &Responsibilities,
) -> Result<(MixtureState, usize)> {
    let (n, d) = points.dim();
    let k = resp.z.ncols();
    let (mass, means) = weighted_moments(points, resp)?;
    let pi = mass.mapv(|m| m / n as f64);
    let mut sigmas = Vec::with_capacity(k);
    let mut ridged = 0usize;
    for j in 0..k {
        let mut s = Array2::<f64>::zeros((d, d));
        for i in 0..n {
            let w = resp.z[[i, j]];
            for a in 0..d {
                let da = points[[i, a]] - means[[j, a]];
                for b in 0..d {
                    let db = points[[i, b]] - means[[j, b]];
                    s[[a, b]] += w * da * db;
                }
            }
        }
        s.mapv_inplace(|v| v / mass[j]);
        if cholesky(&s).is_err() {
            // degenerate scatter: ridge at 1e-10 * trace / d (absolute floor
            // when even the trace vanishes)
            let tr: f64 = (0..d).map(|a| s[[a, a]]).sum();
            let ridge = (1e-10 * tr / d as f64).max(1e-300);
            for a in 0..d {
                s[[a, a]] += ridge;
            }
            cholesky(&s)?;
            ridged += 1;
        }
        sigmas.push(s);
    }
    Ok((
        MixtureState {
            pi,
            nu: means,
            sigmas,
            counts: None,
        },
        ridged,
    ))
}

fn scale_sigmas(mut sigmas: Vec<Array2<f64>>, scale: f64) -> Vec<Array2<f64>> {
    for s in &mut sigmas {
        s.mapv_inplace(|v| v * scale);
    }
    sigmas
}

fn ase_sigmas(config: &LatentConfig, n: usize) -> Result<(Vec<Array2<f64>>, CovDiagnostics)> {
    let (params, diag) = ase_limit_params_diag(config)?;
    Ok((scale_sigmas(params.sigmas, 1.0 / n as f64), diag))
}

fn lse_sigmas(
    config: &LatentConfig,
    counts: &Array1<f64>,
    n: usize,
) -> Result<(Vec<Array2<f64>>, Vec<Array1<f64>>, CovDiagnostics)> {
    let (params, diag) = lse_limit_params_diag(config, counts)?;
    let mut sigmas = Vec::with_capacity(params.sigmas_tilde.len());
    for raw in &params.sigmas_tilde {
        let mut s = symmetrize_floor(raw)?;
        s.mapv_inplace(|v| v / (n as f64 * n as f64));
        sigmas.push(s);
    }
    Ok((sigmas, params.scaled_means, diag))
}

/// Builds the initial ASE-engine state at `(nu, pi)` for a sample of size `n`:
/// `sigmas = Sigma(nu_k | x, pi) / n`.
pub fn es_ase_state(nu: Array2<f64>, pi: Array1<f64>, n: usize) -> Result<MixtureState> {
    let config = LatentConfig::new_unchecked(nu.clone(), pi.clone());
    let (sigmas, _) = ase_sigmas(&config, n)?;
    Ok(MixtureState {
        pi,
        nu,
        sigmas,
        counts: None,
    })
}

/// Builds the initial LSE-engine state with `counts = n * pi` (or as given):
/// `sigmas` are the symmetrized `Sigma-tilde(nu_k | x, pi) / n^2`.
pub fn es_lse_state(
    nu: Array2<f64>,
    pi: Array1<f64>,
    counts: Option<Array1<f64>>,
    n: usize,
) -> Result<MixtureState> {
    let counts = counts.unwrap_or_else(|| pi.mapv(|p| p * n as f64));
    let config = LatentConfig::new_unchecked(nu.clone(), pi.clone());
    let (sigmas, _, _) = lse_sigmas(&config, &counts, n)?;
    Ok(MixtureState {
        pi,
        nu,
        sigmas,
        counts: Some(counts),
    })
}

/// One ES iteration on ASE points: E-step under the current tied covariances,
/// S-step for `(pi, nu)`, covariances refreshed from the new iterate.
pub fn es_ase_iteration(
    ase_points: &Array2<f64>,
    state: &MixtureState,
) -> Result<(Responsibilities, MixtureState, IterDiag)> {
    let n = ase_points.nrows();
    let (resp, underflow) = e_step(ase_points, state)?;
    let (mass, means) = weighted_moments(ase_points, &resp)?;
    let pi = mass.mapv(|m| m / n as f64);
    let config = LatentConfig::new_unchecked(means.clone(), pi.clone());
    let (sigmas, diag) = ase_sigmas(&config, n)?;
    Ok((
        resp,
        MixtureState {
            pi,
            nu: means,
            sigmas,
            counts: None,
        },
        IterDiag {
            underflow_rows: underflow,
            clamped: diag.clamped,
            cond: diag.cond,
            ridged: 0,
        },
    ))
}

/// One ES iteration for the LSE: responsibilities are computed on the LSE
/// points against the count-scaled means, while the latent positions are
/// re-estimated from the ASE points; `counts` update to `n * pi`.
pub fn es_lse_iteration(
    lse_points: &Array2<f64>,
    ase_points: &Array2<f64>,
    state: &MixtureState,
) -> Result<(Responsibilities, MixtureState, IterDiag)> {
    let n = lse_points.nrows();
    if ase_points.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "LSE has {} points but ASE has {}",
            n,
            ase_points.nrows()
        )));
    }
    let k = state.k();
    let counts = state
        .counts
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("LSE engine state lacks counts".into()))?;
    let mut means = Vec::with_capacity(k);
    for j in 0..k {
        means.push(lse_scaled_mean(j, &state.nu, counts)?);
    }
    let (resp, underflow) = e_step_with(lse_points, &state.pi, &means, &state.sigmas)?;
    let (mass, nu_hat) = weighted_moments(ase_points, &resp)?;
    let pi = mass.mapv(|m| m / n as f64);
    let counts_hat = pi.mapv(|p| p * n as f64);
    let config = LatentConfig::new_unchecked(nu_hat.clone(), pi.clone());
    let (sigmas, _, diag) = lse_sigmas(&config, &counts_hat, n)?;
    Ok((
        resp,
        MixtureState {
            pi,
            nu: nu_hat,
            sigmas,
            counts: Some(counts_hat),
        },
        IterDiag {
            underflow_rows: underflow,
            clamped: diag.clamped,
            cond: diag.cond,
            ridged: 0,
        },
    ))
}

/// Stacks the engine's convergence parameter vector: `pi` minus its last
/// entry, followed by the component means — the latent positions for the ASE
/// and EM engines, the count-scaled means for the LSE engine.
pub fn param_vector(state: &MixtureState, engine: EngineKind) -> Result<Array1<f64>> {
    let k = state.k();
    let d = state.d();
    let mut v = Vec::with_capacity((d + 1) * k - 1);
    for j in 0..k - 1 {
        v.push(state.pi[j]);
    }
    match engine {
        EngineKind::FullGmm | EngineKind::CurvedAse => {
            v.extend(state.nu.iter().cloned());
        }
        EngineKind::CurvedLse => {
            let counts = state
                .counts
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("LSE engine state lacks counts".into()))?;
            for j in 0..k {
                v.extend(lse_scaled_mean(j, &state.nu, counts)?.into_iter());
            }
        }
    }
    Ok(Array1::from(v))
}

fn step_norm(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Runs the selected engine to convergence: stop when the Euclidean distance
/// between successive parameter vectors drops below `tol`, or at `max_iter`.
///
/// `ase_points` is required for [`EngineKind::CurvedLse`] (and ignored
/// otherwise). An engine error mid-run terminates with the last good state,
/// `converged = false`, and the reason recorded in the report.
pub fn run_to_convergence(
    engine: EngineKind,
    points: &Array2<f64>,
    ase_points: Option<&Array2<f64>>,
    init: MixtureState,
    tol: f64,
    max_iter: usize,
) -> Result<(MixtureState, Responsibilities, RunReport)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {} must be > 0", tol)));
    }
    if engine == EngineKind::CurvedLse && ase_points.is_none() {
        return Err(Error::InvalidInput("LSE engine requires ASE points".into()));
    }
    let mut state = init;
    let mut resp: Option<Responsibilities> = None;
    let mut report = RunReport::default();
    let mut prev = param_vector(&state, engine)?;
    while report.iterations < max_iter {
        let step = match engine {
            EngineKind::FullGmm => e_step(points, &state).and_then(|(r, uf)| {
                m_step_full_gmm(points, &r).map(|(s, ridged)| {
                    (
                        r,
                        s,
                        IterDiag {
                            underflow_rows: uf,
                            ridged,
                            ..Default::default()
                        },
                    )
                })
            }),
            EngineKind::CurvedAse => es_ase_iteration(points, &state),
            EngineKind::CurvedLse => es_lse_iteration(points, ase_points.unwrap(), &state),
        };
        let (r, next, diag) = match step {
            Ok(v) => v,
            Err(e) => {
                report.failure = Some(e.to_string());
                break;
            }
        };
        report.iterations += 1;
        report.underflow_rows += diag.underflow_rows;
        report.clamp_events += diag.clamped;
        report.ridge_events += diag.ridged;
        if diag.cond > 0.0 {
            report.delta_conds.push(diag.cond);
        }
        let cur = match param_vector(&next, engine) {
            Ok(v) => v,
            Err(e) => {
                report.failure = Some(e.to_string());
                resp = Some(r);
                state = next;
                break;
            }
        };
        let norm = step_norm(&prev, &cur);
        report.trace.push(norm);
        report.final_step_norm = norm;
        state = next;
        resp = Some(r);
        prev = cur;
        if norm < tol {
            report.converged = true;
            break;
        }
    }
    let resp = match resp {
        Some(r) => r,
        // no iteration completed: report responsibilities under the init
        None => e_step(points, &state)?.0,
    };
    Ok((state, resp, report))
}

/// Lloyd's algorithm from the given centers. Ties break toward the lowest
/// index; an emptied cluster is re-seeded at the point farthest from its
/// center. Returns the labels and the number of re-seed events.
pub fn kmeans(
    points: &Array2<f64>,
    k: usize,
    init_centers: &Array2<f64>,
    max_iter: usize,
) -> Result<(Vec<usize>, usize)> {
    let (n, d) = points.dim();
    if k > n {
        return Err(Error::InvalidInput(format!("K = {} exceeds n = {}", k, n)));
    }
    if init_centers.dim() != (k, d) {
        return Err(Error::DimensionMismatch(format!(
            "init centers are {:?}, need ({}, {})",
            init_centers.dim(),
            k,
            d
        )));
    }
    let sq_dist = |p: ArrayView1<f64>, c: ArrayView1<f64>| -> f64 {
        p.iter().zip(c.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
    };
    let mut centers = init_centers.to_owned();
    let mut labels = vec![0usize; n];
    let mut reseeds = 0usize;
    for _ in 0..max_iter {
        let mut changed = false;
        for i in 0..n {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for j in 0..k {
                let dist = sq_dist(points.row(i), centers.row(j));
                if dist < best_d {
                    best_d = dist;
                    best = j;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        let mut counts = vec![0usize; k];
        let mut sums = Array2::<f64>::zeros((k, d));
        for i in 0..n {
            counts[labels[i]] += 1;
            for a in 0..d {
                sums[[labels[i], a]] += points[[i, a]];
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                // re-seed at the point farthest from this center
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(points.row(a), centers.row(j))
                            .partial_cmp(&sq_dist(points.row(b), centers.row(j)))
                            .unwrap()
                    })
                    .unwrap();
                centers.row_mut(j).assign(&points.row(far));
                reseeds += 1;
                changed = true;
            } else {
                for a in 0..d {
                    centers[[j, a]] = sums[[j, a]] / counts[j] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok((labels, reseeds))
}

/// Hard assignment: row-wise argmax of the responsibilities, ties toward the
/// lowest index.
pub fn cluster_assign(resp: &Responsibilities) -> Vec<usize> {
    resp.z
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0usize;
            let mut best_v = f64::NEG_INFINITY;
            for (j, &v) in row.iter().enumerate() {
                if v > best_v {
                    best_v = v;
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Number of free parameters per mixture family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    FullGmm,
    Cgmm,
}

pub fn parameter_count(model_kind: ModelKind, k: usize, d: usize) -> usize {
    let base = (d + 1) * k - 1;
    match model_kind {
        ModelKind::Cgmm => base,
        ModelKind::FullGmm => base + k * (d + d * (d - 1) / 2),
    }
}
