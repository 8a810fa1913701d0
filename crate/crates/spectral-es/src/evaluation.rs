//! Clustering and estimation scoring: adjusted Rand index, squared parameter
//! error against the stacked parameter vector of either embedding flavor, and
//! the median/CI aggregation for paired method differences.

use std::collections::BTreeMap;

use ndarray::Array1;

use crate::limit_covariance::lse_scaled_mean;
use crate::mixture_engines::MixtureState;
use crate::{Error, Result};

/// Scores of one replication: ARI and squared parameter error per method.
#[derive(Debug, Clone)]
pub struct PairedResult {
    pub replication: usize,
    pub n: usize,
    pub seed: u64,
    pub ari_by_method: BTreeMap<String, f64>,
    pub param_err_by_method: BTreeMap<String, f64>,
}

fn choose2(m: u64) -> u64 {
    m * (m.saturating_sub(1)) / 2
}

/// Adjusted Rand index (Hubert–Arabie). Equal partitions score 1; the
/// degenerate case where both the expected and maximal indices coincide
/// scores 1 as well.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "label vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("ARI needs n >= 2, got {}", n)));
    }
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b.iter()) {
        table[x][y] += 1;
    }
    let row: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<u64> = (0..kb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let sum_ij: f64 = table
        .iter()
        .flat_map(|r| r.iter())
        .map(|&c| choose2(c) as f64)
        .sum();
    let sum_a: f64 = row.iter().map(|&c| choose2(c) as f64).sum();
    let sum_b: f64 = col.iter().map(|&c| choose2(c) as f64).sum();
    let total = choose2(n as u64) as f64;
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    if (max_index - expected).abs() == 0.0 {
        // both partitions trivial in the same way
        return Ok(1.0);
    }
    Ok((sum_ij - expected) / (max_index - expected))
}

/// Which parameter vector a state is scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamFlavor {
    /// `pi`, latent positions, and the covariance blocks.
    Ase,
    /// `pi`, count-scaled means, and the covariance blocks.
    Lse,
}

fn stacked_means(state: &MixtureState, flavor: ParamFlavor) -> Result<Vec<Array1<f64>>> {
    let k = state.k();
    match flavor {
        ParamFlavor::Ase => Ok(state.nu.rows().into_iter().map(|r| r.to_owned()).collect()),
        ParamFlavor::Lse => {
            // the scaled means are the parameters; fall back to `nu` directly
            // when the state carries no counts (EM fitted in the LSE space)
            match &state.counts {
                Some(counts) => (0..k)
                    .map(|j| lse_scaled_mean(j, &state.nu, counts))
                    .collect(),
                None => Ok(state.nu.rows().into_iter().map(|r| r.to_owned()).collect()),
            }
        }
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    fn heap(v: &mut Vec<usize>, m: usize, out: &mut Vec<Vec<usize>>) {
        if m == 1 {
            out.push(v.clone());
            return;
        }
        for i in 0..m {
            heap(v, m - 1, out);
            if m % 2 == 0 {
                v.swap(i, m - 1);
            } else {
                v.swap(0, m - 1);
            }
        }
    }
    heap(&mut idx, k, &mut out);
    out
}

/// Squared Euclidean error of the stacked parameter vector
/// `(pi; means; covariance entries)`, after matching estimated components to
/// the truth by the permutation that minimizes the total mean distance.
pub fn parameter_squared_error(
    est: &MixtureState,
    truth: &MixtureState,
    flavor: ParamFlavor,
) -> Result<f64> {
    let k = truth.k();
    let d = truth.d();
    if est.k() != k || est.d() != d {
        return Err(Error::DimensionMismatch(format!(
            "estimate is K = {}, d = {}; truth is K = {}, d = {}",
            est.k(),
            est.d(),
            k,
            d
        )));
    }
    let est_means = stacked_means(est, flavor)?;
    let truth_means = stacked_means(truth, flavor)?;
    // label-switching guard: best permutation by mean distance
    let mut best_perm = None;
    let mut best_cost = f64::INFINITY;
    for perm in permutations(k) {
        let cost: f64 = (0..k)
            .map(|j| {
                est_means[perm[j]]
                    .iter()
                    .zip(truth_means[j].iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum();
        if cost < best_cost {
            best_cost = cost;
            best_perm = Some(perm);
        }
    }
    let perm = best_perm.unwrap();
    let mut err = 0.0f64;
    for j in 0..k {
        let p = perm[j];
        let dp = est.pi[p] - truth.pi[j];
        err += dp * dp;
        for (a, b) in est_means[p].iter().zip(truth_means[j].iter()) {
            err += (a - b) * (a - b);
        }
        for (a, b) in est.sigmas[p].iter().zip(truth.sigmas[j].iter()) {
            err += (a - b) * (a - b);
        }
    }
    Ok(err)
}

/// Binomial(n, 1/2) CDF at `x`, summed in log space for stability.
fn binom_half_cdf(n: usize, x: i64) -> f64 {
    if x < 0 {
        return 0.0;
    }
    let ln_half = 0.5f64.ln();
    let mut acc = 0.0f64;
    let mut ln_c = 0.0f64; // ln C(n, 0)
    for k in 0..=(x as usize).min(n) {
        if k > 0 {
            ln_c += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        acc += (ln_c + n as f64 * ln_half).exp();
    }
    acc.min(1.0)
}

/// Distribution-free confidence interval for the median: the `(l, u)` order
/// statistics with at most `(1 - level)/2` binomial tail mass per side.
pub fn median_ci(values: &[f64], level: f64) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 6 {
        return Err(Error::InvalidInput(format!(
            "median CI needs at least 6 values, got {}",
            n
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!("level {} outside (0,1)", level)));
    }
    let alpha = (1.0 - level) / 2.0;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // largest l with P(Bin(n, 1/2) <= l - 1) <= alpha
    let mut l = 1usize;
    for cand in 1..=n {
        if binom_half_cdf(n, cand as i64 - 1) <= alpha {
            l = cand;
        } else {
            break;
        }
    }
    let u = n + 1 - l;
    Ok((sorted[l - 1], sorted[u - 1]))
}

/// Sample median (mean of central order statistics for even n).
pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// One row of the paired-difference table.
#[derive(Debug, Clone)]
pub struct PairedDifferenceRow {
    pub n: usize,
    pub median: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub method_a: String,
    pub method_b: String,
}

/// Aggregates `ARI_a - ARI_b` per replication into one row per sample size:
/// the median difference with its order-statistic CI.
pub fn paired_difference_table(
    results: &[PairedResult],
    method_a: &str,
    method_b: &str,
) -> Result<Vec<PairedDifferenceRow>> {
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in results {
        let a = r.ari_by_method.get(method_a).ok_or_else(|| {
            Error::InvalidInput(format!("missing method {:?} in replication", method_a))
        })?;
        let b = r.ari_by_method.get(method_b).ok_or_else(|| {
            Error::InvalidInput(format!("missing method {:?} in replication", method_b))
        })?;
        by_n.entry(r.n).or_default().push(a - b);
    }
    let mut rows = Vec::new();
    for (n, deltas) in by_n {
        let (lo, hi) = median_ci(&deltas, 0.95)?;
        rows.push(PairedDifferenceRow {
            n,
            median: median(&deltas),
            ci_lo: lo,
            ci_hi: hi,
            method_a: method_a.to_string(),
            method_b: method_b.to_string(),
        });
    }
    Ok(rows)
}

/// Writes rows as CSV with the header
/// `n,median,ci_lo,ci_hi,method_a,method_b`.
pub fn write_difference_csv<W: std::io::Write>(
    rows: &[PairedDifferenceRow],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "n,median,ci_lo,ci_hi,method_a,method_b")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{},{}",
            r.n, r.median, r.ci_lo, r.ci_hi, r.method_a, r.method_b
        )?;
    }
    Ok(())
}
