//! Flat `key=value` run configuration. Command-line flags override file
//! values; every stochastic run writes its fully resolved configuration
//! next to its outputs so the run can be reproduced byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use paragram::pipeline::SizeClass;
use paragram::training::{NegativePool, Sampler, Similarity};

use super::CliError;

/// Keys a configuration file may set.
const KNOWN_KEYS: &[&str] = &[
    "batch_grid",
    "batch_size",
    "bin_sample",
    "bins",
    "chunk_sample",
    "chunk_size",
    "dataset",
    "delta",
    "drop_digits",
    "embeddings",
    "epochs",
    "extract_bigrams",
    "grid",
    "in",
    "init",
    "init_params",
    "input_format",
    "kind",
    "lambda_w",
    "lambda_w_grid",
    "lambda_ww",
    "lambda_ww_grid",
    "lemmas",
    "lev1_filter",
    "lr_comp",
    "lr_words",
    "max_overlap",
    "mode",
    "model",
    "model_a",
    "model_b",
    "neg_pool",
    "out",
    "paired_words",
    "pairs",
    "params",
    "per_bin",
    "sampler",
    "scale",
    "seed",
    "similarity",
    "threads",
    "trees",
    "tune",
    "tune_r",
    "tune_s",
    "use_constraints",
    "vocab",
];

/// Parsed configuration file.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    map: BTreeMap<String, String>,
}

/// Parse `key=value` lines; `#` starts a comment, blank lines are skipped.
/// Unknown keys are rejected by name.
pub fn load_config(reader: impl BufRead) -> Result<ConfigFile, CliError> {
    let mut map = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::Data(e.to_string()))?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected `key=value`", i + 1))
        })?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!(
                "config line {}: unknown key `{key}`",
                i + 1
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(ConfigFile { map })
}

impl ConfigFile {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let file = fs::File::open(path)
            .map_err(|e| CliError::Data(format!("cannot open config {}: {e}", path.display())))?;
        load_config(std::io::BufReader::new(file))
    }

    fn typed<T: std::str::FromStr>(&self, key: &str, ty: &str) -> Result<Option<T>, CliError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                CliError::Usage(format!("config key `{key}`: expected {ty}, found `{v}`"))
            }),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.typed(key, "a number")
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.typed(key, "a non-negative integer")
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.typed(key, "a non-negative integer")
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        match self.map.get(key).map(String::as_str) {
            None => Ok(None),
            Some("true" | "1") => Ok(Some(true)),
            Some("false" | "0") => Ok(Some(false)),
            Some(v) => Err(CliError::Usage(format!(
                "config key `{key}`: expected true/false, found `{v}`"
            ))),
        }
    }

    pub fn string(&self, key: &str) -> Option<String> {
        self.map.get(key).cloned()
    }
}

pub fn parse_similarity(s: &str) -> Result<Similarity, CliError> {
    match s {
        "dot" => Ok(Similarity::Dot),
        "cosine" => Ok(Similarity::Cosine),
        _ => Err(CliError::Usage(format!(
            "similarity must be dot|cosine, found `{s}`"
        ))),
    }
}

pub fn parse_sampler(s: &str) -> Result<Sampler, CliError> {
    match s {
        "max" => Ok(Sampler::Max),
        "rand" => Ok(Sampler::Rand),
        "mix" => Ok(Sampler::Mix),
        "least" => Ok(Sampler::Least),
        _ => Err(CliError::Usage(format!(
            "sampler must be max|rand|mix|least, found `{s}`"
        ))),
    }
}

pub fn parse_neg_pool(s: &str) -> Result<NegativePool, CliError> {
    match s {
        "first" => Ok(NegativePool::First),
        "both" => Ok(NegativePool::Both),
        _ => Err(CliError::Usage(format!(
            "neg-pool must be first|both, found `{s}`"
        ))),
    }
}

/// Parse bin classes like `3,4,5+`.
pub fn parse_bins(s: &str) -> Result<Vec<SizeClass>, CliError> {
    s.split(',')
        .map(|item| {
            let item = item.trim();
            if let Some(base) = item.strip_suffix('+') {
                base.parse::<usize>().map(SizeClass::AtLeast)
            } else {
                item.parse::<usize>().map(SizeClass::Exactly)
            }
            .map_err(|_| CliError::Usage(format!("bad bin spec `{item}` (use e.g. 3,4,5+)")))
        })
        .collect()
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad number `{v}` in list")))
        })
        .collect()
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad integer `{v}` in list")))
        })
        .collect()
}

/// Write sorted `key=value` lines to an explicit path.
pub fn write_resolved_file(
    path: &Path,
    entries: &BTreeMap<String, String>,
) -> Result<(), CliError> {
    let mut file = fs::File::create(path).map_err(|e| CliError::Data(e.to_string()))?;
    for (k, v) in entries {
        writeln!(file, "{k}={v}").map_err(|e| CliError::Data(e.to_string()))?;
    }
    Ok(())
}

/// Write sorted `key=value` lines to `<dir>/resolved.cfg`.
pub fn write_resolved(dir: &Path, entries: &BTreeMap<String, String>) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(e.to_string()))?;
    write_resolved_file(&dir.join("resolved.cfg"), entries)
}
