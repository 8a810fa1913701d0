//! Replication engine: data generation per family, method fitting at the true
//! parameters, and scoring.

use anyhow::{anyhow, bail, Context, Result};
use ndarray::{Array1, Array2};
use rand::distributions::Distribution;
use rand::{Rng, RngCore};
use rayon::prelude::*;

use spectral_es::evaluation::{adjusted_rand_index, parameter_squared_error, ParamFlavor, PairedResult};
use spectral_es::graph_model::{expand_latent_positions, sample_sbm, BlockModel, LatentConfig};
use spectral_es::limit_covariance::{ase_limit_params, lse_limit_params, lse_scaled_mean};
use spectral_es::linalg::{cholesky, symmetrize_floor};
use spectral_es::mixture_engines::{
    cluster_assign, es_ase_state, es_lse_state, kmeans, run_to_convergence, EngineKind,
    MixtureState,
};
use spectral_es::rng::derive_rng;
use spectral_es::canonical_latent_positions;

use crate::config::{ExperimentConfig, Family, Method, ModelSpec};
use crate::presets::{find_preset, PresetKind};

const MAX_RESAMPLE_ATTEMPTS: u64 = 32;
const KMEANS_MAX_ITER: usize = 1000;

/// Model resolved from a preset or inline spec: latent positions, weights,
/// and (for the graph family) the block matrix.
#[derive(Debug, Clone)]
pub struct ResolvedModel {
    pub x: Array2<f64>,
    pub pi: Array1<f64>,
    pub b: Option<Array2<f64>>,
    pub fixed_labels: bool,
}

impl ResolvedModel {
    pub fn k(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }
}

/// Non-fatal events accumulated over a run.
#[derive(Debug, Clone, Default)]
pub struct RunLog {
    /// Replications that had to be redrawn after an embedding failure.
    pub resamples: usize,
    /// Engine runs that stopped on an error (last good state scored).
    pub engine_failures: usize,
    /// Engine runs that hit the iteration cap without converging.
    pub nonconverged: usize,
}

impl RunLog {
    pub fn flagged(&self) -> bool {
        self.resamples > 0 || self.engine_failures > 0 || self.nonconverged > 0
    }

    fn absorb(&mut self, other: &RunLog) {
        self.resamples += other.resamples;
        self.engine_failures += other.engine_failures;
        self.nonconverged += other.nonconverged;
    }
}

/// Resolves the configured model against the preset registry, checking that
/// the family matches what the model can provide.
pub fn resolve_model(config: &ExperimentConfig) -> Result<ResolvedModel> {
    let (x, pi, b, fixed_default) = match &config.model {
        ModelSpec::Preset(name) => {
            let preset =
                find_preset(name).ok_or_else(|| anyhow!("unknown preset {:?}", name))?;
            match preset.kind {
                PresetKind::Mixture { x, pi } => {
                    if config.family != Family::MixtureOnly {
                        bail!("preset {:?} carries latent positions only; use family = mixture_only", name);
                    }
                    (x, pi, None, false)
                }
                PresetKind::Sbm {
                    b, pi, fixed_labels, ..
                } => {
                    let x = canonical_latent_positions(&b)?;
                    (x, pi, Some(b), fixed_labels)
                }
            }
        }
        ModelSpec::InlineB { b, pi } => {
            let x = canonical_latent_positions(b)?;
            (x, pi.clone(), Some(b.clone()), false)
        }
        ModelSpec::InlineX { x, pi } => (x.clone(), pi.clone(), None, false),
    };
    if config.family == Family::Sbm && b.is_none() {
        bail!("family = sbm requires a block matrix (preset or inline b)");
    }
    // validate as a latent configuration up front
    LatentConfig::new(x.clone(), pi.clone())?;
    Ok(ResolvedModel {
        x,
        pi,
        b,
        fixed_labels: config.fixed_labels.unwrap_or(fixed_default),
    })
}

/// Labels with exact block proportions by largest-remainder rounding.
pub fn largest_remainder_labels(pi: &Array1<f64>, n: usize) -> Vec<usize> {
    let k = pi.len();
    let mut counts: Vec<usize> = pi.iter().map(|&p| (p * n as f64).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut remainders: Vec<(usize, f64)> = pi
        .iter()
        .enumerate()
        .map(|(j, &p)| (j, p * n as f64 - counts[j] as f64))
        .collect();
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for i in 0..(n - assigned) {
        counts[remainders[i % k].0] += 1;
    }
    let mut labels = Vec::with_capacity(n);
    for (j, &c) in counts.iter().enumerate() {
        labels.extend(std::iter::repeat(j).take(c));
    }
    labels
}

/// Data consumed by every method within one replication.
struct ReplicationData {
    ase_points: Array2<f64>,
    lse_points: Array2<f64>,
    labels: Vec<usize>,
    counts: Array1<f64>,
}

fn realized_counts(labels: &[usize], k: usize) -> Array1<f64> {
    let mut c = Array1::<f64>::zeros(k);
    for &t in labels {
        c[t] += 1.0;
    }
    c
}

/// Mixture-only draw: points from the limiting ASE mixture; the LSE is
/// derived through the exact 1-1 transformation with `A = X X^T` row sums as
/// degrees.
fn generate_mixture(
    model: &ResolvedModel,
    n: usize,
    master: u64,
    rep: usize,
    attempt: u64,
) -> spectral_es::Result<ReplicationData> {
    let k = model.k();
    let d = model.d();
    let mut rng = derive_rng(master, &[2, n as u64, rep as u64, attempt]);
    let config = LatentConfig::new_unchecked(model.x.clone(), model.pi.clone());
    let params = ase_limit_params(&config)?;
    let chols: Vec<Array2<f64>> = params
        .sigmas
        .iter()
        .map(|s| cholesky(&s.mapv(|v| v / n as f64)))
        .collect::<spectral_es::Result<_>>()?;
    let mut cdf = vec![0.0f64; k];
    let mut acc = 0.0;
    for (j, &p) in model.pi.iter().enumerate() {
        acc += p;
        cdf[j] = acc;
    }
    let normal = rand_distr_standard();
    let mut labels = Vec::with_capacity(n);
    let mut points = Array2::<f64>::zeros((n, d));
    for i in 0..n {
        let u: f64 = rng.gen();
        let t = cdf.iter().position(|&c| u <= c).unwrap_or(k - 1);
        labels.push(t);
        let z = Array1::from_iter((0..d).map(|_| normal.sample(&mut rng)));
        let noise = chols[t].dot(&z);
        for a in 0..d {
            points[[i, a]] = model.x[[t, a]] + noise[a];
        }
    }
    // degrees of A = X X^T without forming A: deg_i = x_i . (sum_j x_j)
    let col_sums = points.sum_axis(ndarray::Axis(0));
    let mut lse_points = points.clone();
    for i in 0..n {
        let deg = points.row(i).dot(&col_sums);
        if deg <= 0.0 {
            return Err(spectral_es::Error::NonpositiveDegree(deg));
        }
        let s = 1.0 / deg.sqrt();
        lse_points.row_mut(i).mapv_inplace(|v| v * s);
    }
    let counts = realized_counts(&labels, k);
    Ok(ReplicationData {
        ase_points: points,
        lse_points,
        labels,
        counts,
    })
}

// rand_distr's StandardNormal, wrapped so the import stays local
fn rand_distr_standard() -> impl Distribution<f64> + Copy {
    rand_distr::StandardNormal
}

/// SBM draw: sample the graph, embed, Procrustes-align the ASE to the
/// expanded true positions, and derive the LSE by degree scaling.
fn generate_sbm(
    model: &ResolvedModel,
    n: usize,
    master: u64,
    rep: usize,
    attempt: u64,
) -> spectral_es::Result<ReplicationData> {
    let k = model.k();
    let d = model.d();
    let b = model.b.as_ref().expect("sbm family carries B");
    let block_model = BlockModel::new(b.clone(), model.pi.clone())?;
    let mut seeder = derive_rng(master, &[1, n as u64, rep as u64, attempt]);
    let graph_seed = seeder.next_u64();
    let fixed = if model.fixed_labels {
        Some(largest_remainder_labels(&model.pi, n))
    } else {
        None
    };
    let graph = sample_sbm(&block_model, n, graph_seed, fixed.as_deref())?;
    let labels = graph.tau.clone().expect("sampled graph has labels");
    let embedding = spectral_es::ase(&graph.adjacency, d)?;
    let target = expand_latent_positions(&model.x, &labels)?;
    let w = spectral_es::procrustes_align(&embedding.points, &target)?;
    let aligned = embedding.points.dot(&w);
    let mut lse_points = aligned.clone();
    for (i, &deg) in embedding.degrees.iter().enumerate() {
        if deg <= 0.0 {
            return Err(spectral_es::Error::NonpositiveDegree(deg));
        }
        let s = 1.0 / deg.sqrt();
        lse_points.row_mut(i).mapv_inplace(|v| v * s);
    }
    let counts = realized_counts(&labels, k);
    Ok(ReplicationData {
        ase_points: aligned,
        lse_points,
        labels,
        counts,
    })
}

/// Truth state in the LSE parameterization: latent positions plus realized
/// counts, covariances `Sigma-tilde / n^2` (symmetrized).
fn lse_truth_state(model: &ResolvedModel, counts: &Array1<f64>, n: usize) -> spectral_es::Result<MixtureState> {
    es_lse_state(model.x.clone(), model.pi.clone(), Some(counts.clone()), n)
}

/// EM-in-LSE-space initialization: component means at the count-scaled true
/// means, free covariances started at the curved values.
fn em_lse_init(model: &ResolvedModel, n: usize) -> spectral_es::Result<MixtureState> {
    let k = model.k();
    let d = model.d();
    let counts = model.pi.mapv(|p| p * n as f64);
    let config = LatentConfig::new_unchecked(model.x.clone(), model.pi.clone());
    let params = lse_limit_params(&config, &counts)?;
    let mut nu = Array2::<f64>::zeros((k, d));
    for j in 0..k {
        nu.row_mut(j).assign(&params.scaled_means[j]);
    }
    let sigmas = params
        .sigmas_tilde
        .iter()
        .map(|s| symmetrize_floor(s).map(|m| m.mapv(|v| v / (n as f64 * n as f64))))
        .collect::<spectral_es::Result<_>>()?;
    Ok(MixtureState {
        pi: model.pi.clone(),
        nu,
        sigmas,
        counts: None,
    })
}

fn scaled_mean_matrix(x: &Array2<f64>, counts: &Array1<f64>) -> spectral_es::Result<Array2<f64>> {
    let (k, d) = x.dim();
    let mut m = Array2::<f64>::zeros((k, d));
    for j in 0..k {
        m.row_mut(j).assign(&lse_scaled_mean(j, x, counts)?);
    }
    Ok(m)
}

/// Runs one replication: generates shared data (resampling on embedding
/// failure) and fits every requested method from the true parameters.
fn run_replication(
    model: &ResolvedModel,
    config: &ExperimentConfig,
    n: usize,
    rep: usize,
) -> Result<(PairedResult, RunLog)> {
    let mut log = RunLog::default();
    let mut data = None;
    for attempt in 0..MAX_RESAMPLE_ATTEMPTS {
        let drawn = match config.family {
            Family::MixtureOnly => generate_mixture(model, n, config.seed, rep, attempt),
            Family::Sbm => generate_sbm(model, n, config.seed, rep, attempt),
        };
        match drawn {
            Ok(d) => {
                data = Some(d);
                break;
            }
            Err(_) => log.resamples += 1,
        }
    }
    let data = data.ok_or_else(|| {
        anyhow!(
            "replication {} at n = {} failed {} draws in a row",
            rep,
            n,
            MAX_RESAMPLE_ATTEMPTS
        )
    })?;

    let k = model.k();
    let truth_ase = es_ase_state(model.x.clone(), model.pi.clone(), n)?;
    let truth_lse = lse_truth_state(model, &data.counts, n)?;

    let mut result = PairedResult {
        replication: rep,
        n,
        seed: config.seed,
        ari_by_method: Default::default(),
        param_err_by_method: Default::default(),
    };

    for &method in &config.methods {
        match method {
            Method::KmeansAse | Method::KmeansLse => {
                let (points, centers) = if method == Method::KmeansAse {
                    (&data.ase_points, model.x.clone())
                } else {
                    (
                        &data.lse_points,
                        scaled_mean_matrix(&model.x, &data.counts)?,
                    )
                };
                let (labels, _) = kmeans(points, k, &centers, KMEANS_MAX_ITER)?;
                let ari = adjusted_rand_index(&labels, &data.labels)?;
                result.ari_by_method.insert(method.name().into(), ari);
            }
            Method::EmAse | Method::EsAse => {
                let engine = if method == Method::EmAse {
                    EngineKind::FullGmm
                } else {
                    EngineKind::CurvedAse
                };
                let (state, resp, report) = run_to_convergence(
                    engine,
                    &data.ase_points,
                    None,
                    truth_ase.clone(),
                    config.tol_ase,
                    config.max_iter,
                )?;
                if report.failure.is_some() {
                    log.engine_failures += 1;
                } else if !report.converged {
                    log.nonconverged += 1;
                }
                let labels = cluster_assign(&resp);
                let ari = adjusted_rand_index(&labels, &data.labels)?;
                result.ari_by_method.insert(method.name().into(), ari);
                let err = parameter_squared_error(&state, &truth_ase, ParamFlavor::Ase)?;
                result.param_err_by_method.insert(method.name().into(), err);
            }
            Method::EmLse => {
                let init = em_lse_init(model, n)?;
                let (state, resp, report) = run_to_convergence(
                    EngineKind::FullGmm,
                    &data.lse_points,
                    None,
                    init,
                    config.tol_lse,
                    config.max_iter,
                )?;
                if report.failure.is_some() {
                    log.engine_failures += 1;
                } else if !report.converged {
                    log.nonconverged += 1;
                }
                let labels = cluster_assign(&resp);
                let ari = adjusted_rand_index(&labels, &data.labels)?;
                result.ari_by_method.insert(method.name().into(), ari);
                let err = parameter_squared_error(&state, &truth_lse, ParamFlavor::Lse)?;
                result.param_err_by_method.insert(method.name().into(), err);
            }
            Method::EsLse => {
                let init = es_lse_state(model.x.clone(), model.pi.clone(), None, n)?;
                let (state, resp, report) = run_to_convergence(
                    EngineKind::CurvedLse,
                    &data.lse_points,
                    Some(&data.ase_points),
                    init,
                    config.tol_lse,
                    config.max_iter,
                )?;
                if report.failure.is_some() {
                    log.engine_failures += 1;
                } else if !report.converged {
                    log.nonconverged += 1;
                }
                let labels = cluster_assign(&resp);
                let ari = adjusted_rand_index(&labels, &data.labels)?;
                result.ari_by_method.insert(method.name().into(), ari);
                let err = parameter_squared_error(&state, &truth_lse, ParamFlavor::Lse)?;
                result.param_err_by_method.insert(method.name().into(), err);
            }
        }
    }
    Ok((result, log))
}

/// Runs the whole grid. Replications execute in parallel with independent
/// derived seeds; results come back ordered by `(n, replication)`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(Vec<PairedResult>, RunLog)> {
    let model = resolve_model(config)?;
    let mut jobs = Vec::new();
    for &n in &config.n_grid {
        for rep in 0..config.replications {
            jobs.push((n, rep));
        }
    }
    let outcomes: Vec<Result<(PairedResult, RunLog)>> = jobs
        .par_iter()
        .map(|&(n, rep)| {
            run_replication(&model, config, n, rep)
                .with_context(|| format!("replication {} at n = {}", rep, n))
        })
        .collect();
    let mut results = Vec::with_capacity(outcomes.len());
    let mut log = RunLog::default();
    for outcome in outcomes {
        let (r, l) = outcome?;
        log.absorb(&l);
        results.push(r);
    }
    results.sort_by_key(|r| (r.n, r.replication));
    Ok((results, log))
}
