//! Plain-text experiment configuration: `key = value` lines grouped into
//! `[section]` headers. `#` starts a comment. The full schema is documented in
//! the repository README.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};

/// Which data-generating process a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Points drawn directly from the limiting ASE mixture.
    MixtureOnly,
    /// Graphs sampled from the blockmodel, then embedded.
    Sbm,
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mixture_only" => Ok(Family::MixtureOnly),
            "sbm" => Ok(Family::Sbm),
            other => Err(format!("unknown family {:?}", other)),
        }
    }
}

/// A fitting method: engine crossed with embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    KmeansAse,
    KmeansLse,
    EmAse,
    EmLse,
    EsAse,
    EsLse,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::KmeansAse,
        Method::KmeansLse,
        Method::EmAse,
        Method::EmLse,
        Method::EsAse,
        Method::EsLse,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::KmeansAse => "km_ase",
            Method::KmeansLse => "km_lse",
            Method::EmAse => "em_ase",
            Method::EmLse => "em_lse",
            Method::EsAse => "es_ase",
            Method::EsLse => "es_lse",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "km_ase" | "kmeans_ase" => Ok(Method::KmeansAse),
            "km_lse" | "kmeans_lse" => Ok(Method::KmeansLse),
            "em_ase" => Ok(Method::EmAse),
            "em_lse" => Ok(Method::EmLse),
            "es_ase" => Ok(Method::EsAse),
            "es_lse" => Ok(Method::EsLse),
            other => Err(format!("unknown method {:?}", other)),
        }
    }
}

/// Model specification: a named preset, or inline matrices.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    Preset(String),
    /// Inline `B` and `pi` (SBM family).
    InlineB { b: Array2<f64>, pi: Array1<f64> },
    /// Inline latent positions and `pi` (mixture family).
    InlineX { x: Array2<f64>, pi: Array1<f64> },
}

/// One experiment: model, sample-size grid, methods, seeding, tolerances.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub family: Family,
    pub model: ModelSpec,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub tol_ase: f64,
    pub tol_lse: f64,
    pub max_iter: usize,
    pub output: String,
    /// Fix block labels to exact proportions (largest-remainder rounding)
    /// instead of drawing them categorically. Defaults per preset.
    pub fixed_labels: Option<bool>,
}

fn parse_matrix(text: &str) -> Result<Array2<f64>, String> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|e| format!("bad number {:?}: {}", v, e)))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    if rows.is_empty() || rows[0].is_empty() {
        return Err("empty matrix".into());
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err("ragged matrix rows".into());
    }
    let flat: Vec<f64> = rows.iter().flatten().cloned().collect();
    Array2::from_shape_vec((rows.len(), cols), flat).map_err(|e| e.to_string())
}

fn parse_vector(text: &str) -> Result<Array1<f64>, String> {
    let vals: Vec<f64> = text
        .split_whitespace()
        .map(|v| v.parse::<f64>().map_err(|e| format!("bad number {:?}: {}", v, e)))
        .collect::<Result<_, _>>()?;
    if vals.is_empty() {
        return Err("empty vector".into());
    }
    Ok(Array1::from(vals))
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

fn parse_sections(text: &str) -> Result<Sections, String> {
    let mut sections: Sections = BTreeMap::new();
    let mut current = String::from("experiment");
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(format!("line {}: malformed section header", lineno + 1));
            }
            current = line[1..line.len() - 1].trim().to_string();
            sections.entry(current.clone()).or_default();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
        sections
            .entry(current.clone())
            .or_default()
            .insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(sections)
}

impl ExperimentConfig {
    /// Parses the config text, applying defaults for optional keys.
    pub fn parse(text: &str) -> Result<Self, String> {
        let sections = parse_sections(text)?;
        let exp = sections
            .get("experiment")
            .ok_or("missing [experiment] section")?;
        let get = |key: &str| -> Result<&String, String> {
            exp.get(key).ok_or(format!("missing key {:?}", key))
        };

        let family: Family = get("family")?.parse()?;
        let model = if let Some(name) = exp.get("model") {
            ModelSpec::Preset(name.clone())
        } else {
            let m = sections.get("model").ok_or("missing model or [model] section")?;
            let pi = parse_vector(m.get("pi").ok_or("missing pi in [model]")?)?;
            match (m.get("b"), m.get("x")) {
                (Some(b), None) => ModelSpec::InlineB {
                    b: parse_matrix(b)?,
                    pi,
                },
                (None, Some(x)) => ModelSpec::InlineX {
                    x: parse_matrix(x)?,
                    pi,
                },
                _ => return Err("inline [model] needs exactly one of b or x".into()),
            }
        };

        let n_grid: Vec<usize> = get("n_grid")?
            .split_whitespace()
            .map(|v| v.parse::<usize>().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        if n_grid.is_empty() {
            return Err("n_grid is empty".into());
        }
        if n_grid.windows(2).any(|w| w[0] > w[1]) {
            return Err("n_grid must be nondecreasing".into());
        }

        let replications: usize = get("replications")?.parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
        if replications < 1 {
            return Err("replications must be >= 1".into());
        }

        let methods: Vec<Method> = get("methods")?
            .split_whitespace()
            .map(|v| v.parse())
            .collect::<Result<_, _>>()?;
        if methods.is_empty() {
            return Err("methods is empty".into());
        }

        let seed: u64 = match exp.get("seed") {
            Some(v) => v.parse().map_err(|e: std::num::ParseIntError| e.to_string())?,
            None => 0,
        };
        let parse_f64 = |key: &str, default: f64| -> Result<f64, String> {
            match exp.get(key) {
                Some(v) => v.parse().map_err(|e: std::num::ParseFloatError| e.to_string()),
                None => Ok(default),
            }
        };
        let tol_ase = parse_f64("tol_ase", 1e-5)?;
        let tol_lse = parse_f64("tol_lse", 1e-6)?;
        let max_iter: usize = match exp.get("max_iter") {
            Some(v) => v.parse().map_err(|e: std::num::ParseIntError| e.to_string())?,
            None => 10_000,
        };
        let output = exp
            .get("output")
            .cloned()
            .unwrap_or_else(|| "results".to_string());
        let fixed_labels = match exp.get("fixed_labels") {
            Some(v) => Some(v.parse::<bool>().map_err(|e| e.to_string())?),
            None => None,
        };

        Ok(ExperimentConfig {
            family,
            model,
            n_grid,
            replications,
            methods,
            seed,
            tol_ase,
            tol_lse,
            max_iter,
            output,
            fixed_labels,
        })
    }
}
