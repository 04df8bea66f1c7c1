//! Flat `key = value` scenario files for the simulation command.
//!
//! Recognized keys (one per line, `#` starts a comment):
//!
//! ```text
//! p = 5                     # required: shape, sample size, replications
//! q = 20
//! n = 100
//! reps = 10
//! seed = 42
//! sigma_row = rnd           # rnd | fix:<rho> | mix:<rho>
//! sigma_col = mix:0.7
//! contamination = shift     # none | shift | block | cell
//! epsilon = 0.1
//! gamma = 1
//! scale = 1                 # covariance multiplier of the outliers
//! block_rows = 2            # block scheme only
//! block_cols = 5
//! cell_fraction = 0.1       # cell scheme only
//! estimators = mle,mmcd_raw,mmcd_reweighted,truth
//! detection_quantile = 0.99
//! h = 53                    # optional search overrides
//! m = 500
//! n_keep = 10
//! initial_iters = 2
//! subsampling = auto        # auto | off
//! ```

use super::CliError;
use crate::mmcd::{MMCDConfig, Subsampling};
use crate::simlab::{ContaminationSpec, CovSpec, EstimatorId, Scheme, SimScenario};

/// A parsed scenario plus the run controls that sit outside [`SimScenario`].
#[derive(Debug, Clone)]
pub struct ScenarioFile {
    pub scenario: SimScenario,
    pub reps: usize,
    pub seed: u64,
}

fn parse_cov(value: &str, dim: usize, line: usize) -> Result<CovSpec, CliError> {
    if value == "rnd" {
        return Ok(CovSpec::Rnd { dim, seed: 0 });
    }
    if let Some(rho) = value.strip_prefix("fix:") {
        let rho: f64 = rho
            .parse()
            .map_err(|_| CliError::input_at(line, format!("invalid correlation '{rho}'")))?;
        return Ok(CovSpec::Fix { dim, rho });
    }
    if let Some(rho) = value.strip_prefix("mix:") {
        let rho: f64 = rho
            .parse()
            .map_err(|_| CliError::input_at(line, format!("invalid correlation '{rho}'")))?;
        return Ok(CovSpec::Mix { dim, rho });
    }
    Err(CliError::input_at(
        line,
        format!("covariance must be 'rnd', 'fix:<rho>' or 'mix:<rho>', got '{value}'"),
    ))
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile, CliError> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::input_at(line_no, format!("expected 'key = value', got '{line}'"))
        })?;
        entries.push((
            line_no,
            key.trim().to_string(),
            value.trim().to_string(),
        ));
    }

    let mut p = None;
    let mut q = None;
    let mut n = None;
    let mut reps = None;
    let mut seed = 0u64;
    let mut sigma_row_raw: Option<(usize, String)> = None;
    let mut sigma_col_raw: Option<(usize, String)> = None;
    let mut contamination_kind: Option<(usize, String)> = None;
    let mut epsilon = 0.1f64;
    let mut gamma = 1.0f64;
    let mut scale = 1.0f64;
    let mut block_rows = 2usize;
    let mut block_cols = 5usize;
    let mut cell_fraction = 0.1f64;
    let mut estimators: Option<(usize, String)> = None;
    let mut detection_quantile = 0.99f64;
    let mut mmcd = MMCDConfig::default();

    fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, CliError> {
        value
            .parse()
            .map_err(|_| CliError::input_at(line, format!("invalid value '{value}' for key '{key}'")))
    }

    for (line, key, value) in &entries {
        let line = *line;
        match key.as_str() {
            "p" => p = Some(parse_num::<usize>(line, key, value)?),
            "q" => q = Some(parse_num::<usize>(line, key, value)?),
            "n" => n = Some(parse_num::<usize>(line, key, value)?),
            "reps" => reps = Some(parse_num::<usize>(line, key, value)?),
            "seed" => seed = parse_num(line, key, value)?,
            "sigma_row" => sigma_row_raw = Some((line, value.clone())),
            "sigma_col" => sigma_col_raw = Some((line, value.clone())),
            "contamination" => contamination_kind = Some((line, value.clone())),
            "epsilon" => epsilon = parse_num(line, key, value)?,
            "gamma" => gamma = parse_num(line, key, value)?,
            "scale" => scale = parse_num(line, key, value)?,
            "block_rows" => block_rows = parse_num(line, key, value)?,
            "block_cols" => block_cols = parse_num(line, key, value)?,
            "cell_fraction" => cell_fraction = parse_num(line, key, value)?,
            "estimators" => estimators = Some((line, value.clone())),
            "detection_quantile" => detection_quantile = parse_num(line, key, value)?,
            "h" => mmcd.h = Some(parse_num(line, key, value)?),
            "m" => mmcd.n_initial_subsets = parse_num(line, key, value)?,
            "n_keep" => mmcd.n_keep = parse_num(line, key, value)?,
            "initial_iters" => mmcd.initial_iters = parse_num(line, key, value)?,
            "subsampling" => {
                mmcd.subsampling = match value.as_str() {
                    "auto" => Subsampling::default(),
                    "off" => Subsampling::Off,
                    other => {
                        return Err(CliError::input_at(
                            line,
                            format!("subsampling must be 'auto' or 'off', got '{other}'"),
                        ))
                    }
                }
            }
            other => {
                return Err(CliError::input_at(
                    line,
                    format!("unknown key '{other}'"),
                ))
            }
        }
    }

    let p = p.ok_or_else(|| CliError::input("missing required key 'p'"))?;
    let q = q.ok_or_else(|| CliError::input("missing required key 'q'"))?;
    let n = n.ok_or_else(|| CliError::input("missing required key 'n'"))?;
    let reps = reps.ok_or_else(|| CliError::input("missing required key 'reps'"))?;

    let sigma_row = match sigma_row_raw {
        Some((line, v)) => parse_cov(&v, p, line)?,
        None => CovSpec::Rnd { dim: p, seed: 0 },
    };
    let sigma_col = match sigma_col_raw {
        Some((line, v)) => parse_cov(&v, q, line)?,
        None => CovSpec::Mix { dim: q, rho: 0.7 },
    };

    let contamination = match contamination_kind.as_ref().map(|(l, v)| (*l, v.as_str())) {
        None | Some((_, "none")) => None,
        Some((_, "shift")) => Some(Scheme::Shift { gamma }),
        Some((_, "block")) => Some(Scheme::Block {
            gamma,
            rows: block_rows,
            cols: block_cols,
        }),
        Some((_, "cell")) => Some(Scheme::Cell {
            permute_fraction: cell_fraction,
        }),
        Some((line, other)) => {
            return Err(CliError::input_at(
                line,
                format!("contamination must be none, shift, block or cell, got '{other}'"),
            ))
        }
    }
    .map(|scheme| ContaminationSpec {
        scheme,
        epsilon,
        scale_multiplier: scale,
    });

    let estimators = match estimators {
        None => vec![
            EstimatorId::Mle,
            EstimatorId::MmcdRaw,
            EstimatorId::MmcdReweighted,
            EstimatorId::Truth,
        ],
        Some((line, list)) => {
            let mut ids = Vec::new();
            for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                match EstimatorId::from_name(name) {
                    Some(id) => ids.push(id),
                    None => {
                        return Err(CliError::input_at(
                            line,
                            format!("unknown estimator '{name}'"),
                        ))
                    }
                }
            }
            ids
        }
    };

    Ok(ScenarioFile {
        scenario: SimScenario {
            p,
            q,
            n,
            sigma_row,
            sigma_col,
            contamination,
            estimators,
            detection_quantile,
            mmcd,
        },
        reps,
        seed,
    })
}
