//! Result emission: the per-replication score table, the paired-difference
//! delta tables, and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

use spectral_es::evaluation::{
    paired_difference_table, write_difference_csv, PairedDifferenceRow, PairedResult,
};

use crate::config::Method;
use crate::runner::RunLog;

/// The method pairings emitted as delta tables, in output order: file name
/// stem, then `(method_a, method_b)` comparisons to include when both sides
/// were run.
const PAIRINGS: [(&str, &[(&str, &str)]); 4] = [
    ("delta_em_es_ase", &[("em_ase", "es_ase")]),
    ("delta_em_es_lse", &[("em_lse", "es_lse")]),
    (
        "delta_km_em",
        &[("km_ase", "em_ase"), ("km_lse", "em_lse")],
    ),
    (
        "delta_km_es",
        &[("km_ase", "es_ase"), ("km_lse", "es_lse")],
    ),
];

fn methods_present(results: &[PairedResult]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for r in results {
        for m in r.ari_by_method.keys() {
            if !names.contains(m) {
                names.push(m.clone());
            }
        }
    }
    names.sort();
    names
}

/// Writes `results.csv`, every applicable delta CSV, and `manifest.txt` into
/// `outdir`. Errors when the requested methods admit no comparison.
pub fn emit_tables(
    results: &[PairedResult],
    config_text: &str,
    seed: u64,
    log: &RunLog,
    outdir: &Path,
) -> Result<Vec<String>> {
    if results.is_empty() {
        bail!("no results to emit");
    }
    fs::create_dir_all(outdir)
        .with_context(|| format!("creating output directory {}", outdir.display()))?;

    let mut written = Vec::new();

    let mut raw = String::from("n,replication,seed,method,ari,param_err\n");
    for r in results {
        for (m, &ari) in &r.ari_by_method {
            let err = r
                .param_err_by_method
                .get(m)
                .map(|e| format!("{:.16e}", e))
                .unwrap_or_default();
            raw.push_str(&format!(
                "{},{},{},{},{:.16e},{}\n",
                r.n, r.replication, r.seed, m, ari, err
            ));
        }
    }
    fs::write(outdir.join("results.csv"), &raw)?;
    written.push("results.csv".to_string());

    let present = methods_present(results);
    let mut any_pair = false;
    for (stem, pairs) in PAIRINGS {
        let mut rows: Vec<PairedDifferenceRow> = Vec::new();
        for &(a, b) in pairs {
            if present.iter().any(|m| m == a) && present.iter().any(|m| m == b) {
                rows.extend(paired_difference_table(results, a, b)?);
            }
        }
        if rows.is_empty() {
            continue;
        }
        any_pair = true;
        let name = format!("{}.csv", stem);
        let mut buf = Vec::new();
        write_difference_csv(&rows, &mut buf)?;
        fs::write(outdir.join(&name), &buf)?;
        written.push(name);
    }
    if !any_pair {
        bail!("nothing to compare: methods {:?} admit no delta pairing", present);
    }

    let config_hash = hex_digest(config_text.as_bytes());
    let manifest = format!(
        "seed = {}\nconfig_sha256 = {}\nversion = {}\nresamples = {}\nengine_failures = {}\nnonconverged = {}\n",
        seed,
        config_hash,
        env!("CARGO_PKG_VERSION"),
        log.resamples,
        log.engine_failures,
        log.nonconverged,
    );
    fs::write(outdir.join("manifest.txt"), manifest)?;
    written.push("manifest.txt".to_string());
    Ok(written)
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{:02x}", b))
        .collect()
}

/// Reads a `results.csv` back into scored replications (used by the `table`
/// subcommand to re-derive delta tables).
pub fn read_results_csv(path: &Path) -> Result<Vec<PairedResult>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "n,replication,seed,method,ari,param_err" {
        bail!("unexpected header in {}: {:?}", path.display(), header);
    }
    let mut by_key: BTreeMap<(usize, usize), PairedResult> = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            bail!("line {}: expected 6 fields", lineno + 2);
        }
        let n: usize = fields[0].parse()?;
        let rep: usize = fields[1].parse()?;
        let seed: u64 = fields[2].parse()?;
        let method = fields[3].to_string();
        // validate the method name
        let _: Method = method.parse().map_err(|e: String| anyhow::anyhow!(e))?;
        let ari: f64 = fields[4].parse()?;
        let entry = by_key.entry((n, rep)).or_insert_with(|| PairedResult {
            replication: rep,
            n,
            seed,
            ari_by_method: Default::default(),
            param_err_by_method: Default::default(),
        });
        entry.ari_by_method.insert(method.clone(), ari);
        if !fields[5].is_empty() {
            entry
                .param_err_by_method
                .insert(method, fields[5].parse()?);
        }
    }
    Ok(by_key.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_results() -> Vec<PairedResult> {
        (0..10)
            .map(|rep| {
                let mut ari = BTreeMap::new();
                ari.insert("em_ase".to_string(), 0.9 - 0.01 * rep as f64);
                ari.insert("es_ase".to_string(), 0.92 - 0.01 * rep as f64);
                let mut err = BTreeMap::new();
                err.insert("em_ase".to_string(), 1e-3);
                err.insert("es_ase".to_string(), 8e-4);
                PairedResult {
                    replication: rep,
                    n: 200,
                    seed: 99,
                    ari_by_method: ari,
                    param_err_by_method: err,
                }
            })
            .collect()
    }

    #[test]
    fn emits_expected_files_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let results = toy_results();
        let written =
            emit_tables(&results, "config text", 99, &RunLog::default(), dir.path()).unwrap();
        assert!(written.contains(&"results.csv".to_string()));
        assert!(written.contains(&"delta_em_es_ase.csv".to_string()));
        assert!(written.contains(&"manifest.txt".to_string()));
        // only one pairing applies
        assert_eq!(written.len(), 3);

        let delta = fs::read_to_string(dir.path().join("delta_em_es_ase.csv")).unwrap();
        assert!(delta.starts_with("n,median,ci_lo,ci_hi,method_a,method_b\n"));
        assert!(delta.contains(",em_ase,es_ase"));

        let back = read_results_csv(&dir.path().join("results.csv")).unwrap();
        assert_eq!(back.len(), results.len());
        assert_eq!(back[0].ari_by_method, results[0].ari_by_method);
        assert_eq!(back[3].param_err_by_method, results[3].param_err_by_method);

        let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert!(manifest.contains("seed = 99"));
        assert!(manifest.contains("config_sha256 = "));
    }

    #[test]
    fn errors_when_nothing_to_compare() {
        let dir = tempfile::tempdir().unwrap();
        let mut results = toy_results();
        for r in &mut results {
            r.ari_by_method.remove("es_ase");
            r.param_err_by_method.remove("es_ase");
        }
        let err = emit_tables(&results, "cfg", 1, &RunLog::default(), dir.path()).unwrap_err();
        assert!(err.to_string().contains("nothing to compare"));
    }

    #[test]
    fn full_method_set_emits_four_delta_tables() {
        let dir = tempfile::tempdir().unwrap();
        let mut results = toy_results();
        for r in &mut results {
            for m in ["em_lse", "es_lse", "km_ase", "km_lse"] {
                r.ari_by_method.insert(m.to_string(), 0.85);
            }
        }
        let written = emit_tables(&results, "cfg", 1, &RunLog::default(), dir.path()).unwrap();
        let deltas: Vec<&String> = written.iter().filter(|w| w.starts_with("delta_")).collect();
        assert_eq!(deltas.len(), 4);
        // the K-means tables carry one row per embedding
        let km = fs::read_to_string(dir.path().join("delta_km_em.csv")).unwrap();
        assert_eq!(km.lines().count(), 3);
    }
}
