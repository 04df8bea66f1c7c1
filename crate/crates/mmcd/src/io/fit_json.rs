//! JSON document for fitted estimates: round-trips losslessly and echoes the
//! configuration including the seed.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::mmcd::{MMCDConfig, MMCDFit, Subsampling};
use crate::params::ParamSet;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParamsJson {
    /// Row-major nested arrays.
    pub mean: Vec<Vec<f64>>,
    pub sigma_row: Vec<Vec<f64>>,
    pub sigma_col: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConfigEcho {
    pub h: usize,
    pub n_initial_subsets: usize,
    pub n_keep: usize,
    pub initial_iters: usize,
    pub cstep_tol: f64,
    pub seed: u64,
    pub subsampling: String,
    pub reweight_quantile: f64,
    pub detection_quantile: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FitDocument {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub raw: ParamsJson,
    pub reweighted: ParamsJson,
    /// 0-based, sorted ascending.
    pub h_subset: Vec<usize>,
    pub weights: Vec<bool>,
    pub distances_raw: Vec<f64>,
    pub distances_reweighted: Vec<f64>,
    pub c_raw: f64,
    pub c_rew: f64,
    pub objective: f64,
    pub config: ConfigEcho,
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, CliError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::input(format!("{what}: ragged or empty matrix")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn params_to_json(p: &ParamSet) -> ParamsJson {
    ParamsJson {
        mean: matrix_to_rows(p.mean()),
        sigma_row: matrix_to_rows(p.sigma_row()),
        sigma_col: matrix_to_rows(p.sigma_col()),
    }
}

impl ParamsJson {
    pub fn to_param_set(&self) -> Result<ParamSet, CliError> {
        let mean = rows_to_matrix(&self.mean, "mean")?;
        let sigma_row = rows_to_matrix(&self.sigma_row, "sigma_row")?;
        let sigma_col = rows_to_matrix(&self.sigma_col, "sigma_col")?;
        ParamSet::new(mean, sigma_row, sigma_col).map_err(CliError::from)
    }
}

impl FitDocument {
    pub fn from_fit(fit: &MMCDFit, cfg: &MMCDConfig, n: usize, p: usize, q: usize) -> Self {
        let subsampling = match cfg.subsampling {
            Subsampling::Off => "off".to_string(),
            Subsampling::Auto {
                threshold,
                block_size,
            } => format!("auto({threshold},{block_size})"),
        };
        FitDocument {
            n,
            p,
            q,
            raw: params_to_json(&fit.raw),
            reweighted: params_to_json(&fit.reweighted),
            h_subset: fit.h_subset.clone(),
            weights: fit.weights.clone(),
            distances_raw: fit.distances_raw.clone(),
            distances_reweighted: fit.distances_reweighted.clone(),
            c_raw: fit.c_raw,
            c_rew: fit.c_rew,
            objective: fit.objective,
            config: ConfigEcho {
                h: cfg.effective_h(n, p, q),
                n_initial_subsets: cfg.n_initial_subsets,
                n_keep: cfg.n_keep,
                initial_iters: cfg.initial_iters,
                cstep_tol: cfg.cstep_tol,
                seed: cfg.seed,
                subsampling,
                reweight_quantile: cfg.reweight_quantile,
                detection_quantile: cfg.detection_quantile,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit document serializes") + "\n"
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let doc: FitDocument = serde_json::from_str(text)
            .map_err(|e| CliError::input(format!("malformed fit file: {e}")))?;
        if doc.h_subset.len() > doc.n
            || doc.weights.len() != doc.n
            || doc.distances_raw.len() != doc.n
            || doc.distances_reweighted.len() != doc.n
        {
            return Err(CliError::input(
                "fit file arrays are dimensionally inconsistent".to_string(),
            ));
        }
        Ok(doc)
    }

    /// The parameter set selected by `--params`.
    pub fn param_set(&self, which: ParamsChoice) -> Result<ParamSet, CliError> {
        match which {
            ParamsChoice::Raw => self.raw.to_param_set(),
            ParamsChoice::Reweighted => self.reweighted.to_param_set(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamsChoice {
    Raw,
    Reweighted,
}

impl std::str::FromStr for ParamsChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(ParamsChoice::Raw),
            "reweighted" => Ok(ParamsChoice::Reweighted),
            other => Err(format!("expected 'raw' or 'reweighted', got '{other}'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmcd::fast_mmcd;
    use crate::model::{sample, DistributionSpec};

    #[test]
    fn fit_document_round_trips() {
        let params = ParamSet::new(
            DMatrix::zeros(2, 3),
            DMatrix::identity(2, 2),
            DMatrix::identity(3, 3),
        )
        .unwrap();
        let stack = sample(&DistributionSpec::matrix_normal(params), 40, 8).unwrap();
        let cfg = MMCDConfig {
            n_initial_subsets: 30,
            seed: 4,
            ..MMCDConfig::default()
        };
        let fit = fast_mmcd(&stack, &cfg).unwrap();
        let doc = FitDocument::from_fit(&fit, &cfg, 40, 2, 3);
        let text = doc.to_json();
        let parsed = FitDocument::parse(&text).unwrap();
        assert_eq!(parsed, doc);
        assert_eq!(parsed.to_json(), text);
        let p = parsed.param_set(ParamsChoice::Reweighted).unwrap();
        assert_eq!(p.mean(), fit.reweighted.mean());
    }

    #[test]
    fn malformed_documents_are_input_errors() {
        assert!(matches!(
            FitDocument::parse("{not json"),
            Err(CliError::Input { .. })
        ));
    }
}
