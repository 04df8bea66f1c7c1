//! Implementations of the `fit`, `detect`, `explain` and `simulate`
//! commands. File outputs are written atomically (temp file, then rename);
//! an omitted output path writes to stdout.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::fit_json::{FitDocument, ParamsChoice};
use super::mxt::{parse_csv_stack, parse_mxt};
use super::scenario::parse_scenario;
use super::{fmt_full, fmt_summary, CliError};
use crate::mmcd::{fast_mmcd, MMCDConfig, Subsampling};
use crate::shapley::shapley;
use crate::simlab::{
    contamination_experiment, mean, median, standard_error, EstimatorId, SimResult,
};
use crate::stack::MatrixStack;

/// Options of the `fit` command.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub input: PathBuf,
    /// Shape of CSV input (rows, cols); MXT input carries its own shape.
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub h: Option<usize>,
    pub m: Option<usize>,
    pub seed: u64,
    pub subsampling: Option<Subsampling>,
    pub output: Option<PathBuf>,
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

/// Parse the input as MXT when it carries the magic header, as CSV with an
/// explicit `--rows/--cols` shape otherwise.
fn read_stack(path: &Path, rows: Option<usize>, cols: Option<usize>) -> Result<MatrixStack, CliError> {
    let text = read_to_string(path)?;
    if text.starts_with("#mxt") {
        parse_mxt(&text)
    } else {
        let (p, q) = match (rows, cols) {
            (Some(p), Some(q)) => (p, q),
            _ => {
                return Err(CliError::input(
                    "CSV input needs --rows and --cols (MXT input was not detected)".to_string(),
                ))
            }
        };
        parse_csv_stack(&text, p, q)
    }
}

fn emit(output: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match output {
        None => {
            std::io::stdout()
                .write_all(contents.as_bytes())
                .map_err(CliError::from)?;
            Ok(())
        }
        Some(path) => {
            let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
            let mut tmp = match dir {
                Some(d) => tempfile::NamedTempFile::new_in(d),
                None => tempfile::NamedTempFile::new_in("."),
            }
            .map_err(CliError::from)?;
            tmp.write_all(contents.as_bytes()).map_err(CliError::from)?;
            tmp.persist(path)
                .map_err(|e| CliError::input(format!("cannot write {}: {}", path.display(), e.error)))?;
            Ok(())
        }
    }
}

/// Fit the estimators and write the fit document.
pub fn cmd_fit(opts: &FitOptions) -> Result<(), CliError> {
    let stack = read_stack(&opts.input, opts.rows, opts.cols)?;
    let mut cfg = MMCDConfig {
        h: opts.h,
        seed: opts.seed,
        ..MMCDConfig::default()
    };
    if let Some(m) = opts.m {
        cfg.n_initial_subsets = m;
    }
    if let Some(s) = opts.subsampling {
        cfg.subsampling = s;
    }
    let fit = fast_mmcd(&stack, &cfg)?;
    let doc = FitDocument::from_fit(&fit, &cfg, stack.n(), stack.p(), stack.q());
    emit(opts.output.as_deref(), &doc.to_json())
}

fn load_fit_for(stack: &MatrixStack, fit_path: &Path) -> Result<FitDocument, CliError> {
    let doc = FitDocument::parse(&read_to_string(fit_path)?)?;
    if doc.p != stack.p() || doc.q != stack.q() {
        return Err(CliError::Precondition(format!(
            "fit is for {}x{} observations, input is {}x{}",
            doc.p,
            doc.q,
            stack.p(),
            stack.q()
        )));
    }
    Ok(doc)
}

/// Score all observations and write `index,mmd2,cutoff,flag` rows.
pub fn cmd_detect(
    input: &Path,
    rows: Option<usize>,
    cols: Option<usize>,
    fit_path: &Path,
    quantile: f64,
    which: ParamsChoice,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let stack = read_stack(input, rows, cols)?;
    let doc = load_fit_for(&stack, fit_path)?;
    let params = doc.param_set(which)?;
    let result = crate::shapley::detect(&stack, &params, quantile)?;
    let mut out = String::from("index,mmd2,cutoff,flag\n");
    for (i, (d, f)) in result.distances.iter().zip(&result.flags).enumerate() {
        out.push_str(&format!(
            "{i},{},{},{}\n",
            fmt_full(*d),
            fmt_full(result.cutoff),
            f
        ));
    }
    emit(output, &out)
}

/// Level of a Shapley explanation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplainLevel {
    Cell,
    Row,
    Col,
}

impl std::str::FromStr for ExplainLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cell" => Ok(ExplainLevel::Cell),
            "row" => Ok(ExplainLevel::Row),
            "col" => Ok(ExplainLevel::Col),
            other => Err(format!("expected 'cell', 'row' or 'col', got '{other}'")),
        }
    }
}

/// Decompose one observation's squared distance and write the contributions.
pub fn cmd_explain(
    input: &Path,
    rows: Option<usize>,
    cols: Option<usize>,
    fit_path: &Path,
    level: ExplainLevel,
    index: usize,
    which: ParamsChoice,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let stack = read_stack(input, rows, cols)?;
    let doc = load_fit_for(&stack, fit_path)?;
    if index >= stack.n() {
        return Err(CliError::Precondition(format!(
            "observation index {index} out of range for {} observations",
            stack.n()
        )));
    }
    let params = doc.param_set(which)?;
    let report = shapley(stack.get(index), &params)?;
    let mut out = String::new();
    let level_sum: f64 = match level {
        ExplainLevel::Cell => {
            for i in 0..stack.p() {
                let row: Vec<String> = (0..stack.q())
                    .map(|j| fmt_full(report.cell[(i, j)]))
                    .collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
            report.cell.iter().sum()
        }
        ExplainLevel::Row => {
            out.push_str("index,value\n");
            for (i, v) in report.row.iter().enumerate() {
                out.push_str(&format!("{i},{}\n", fmt_full(*v)));
            }
            report.row.iter().sum()
        }
        ExplainLevel::Col => {
            out.push_str("index,value\n");
            for (j, v) in report.col.iter().enumerate() {
                out.push_str(&format!("{j},{}\n", fmt_full(*v)));
            }
            report.col.iter().sum()
        }
    };
    out.push_str(&format!(
        "# total={} efficiency_residual={}\n",
        fmt_full(report.total),
        fmt_full((level_sum - report.total).abs())
    ));
    emit(output, &out)
}

fn summary_lines(result: &SimResult, estimators: &[EstimatorId]) -> String {
    let metrics: [(&str, fn(&crate::simlab::RepRecord) -> f64); 7] = [
        ("kl", |r| r.kl),
        ("frobenius", |r| r.frobenius),
        ("angle", |r| r.angle),
        ("precision", |r| r.precision),
        ("recall", |r| r.recall),
        ("f_score", |r| r.f_score),
        ("runtime_s", |r| r.runtime_s),
    ];
    let mut out = String::new();
    for est in estimators {
        for (name, metric) in metrics {
            let values = result.values(*est, None, metric);
            if values.is_empty() {
                continue;
            }
            out.push_str(&format!(
                "# summary estimator={} metric={} median={} mean={} se={}\n",
                est.name(),
                name,
                fmt_summary(median(values.clone())),
                fmt_summary(mean(&values)),
                fmt_summary(standard_error(&values)),
            ));
        }
    }
    for notice in &result.notices {
        out.push_str(&format!("# notice {notice}\n"));
    }
    out
}

/// Run a scenario file and write one CSV row per (replication, estimator),
/// followed by a median/mean/standard-error summary in comment lines.
pub fn cmd_simulate(scenario_path: &Path, output: Option<&Path>) -> Result<(), CliError> {
    let parsed = parse_scenario(&read_to_string(scenario_path)?)?;
    let result = contamination_experiment(&parsed.scenario, parsed.reps, parsed.seed)?;
    let mut out =
        String::from("rep,n,estimator,kl,frobenius,angle,precision,recall,f_score,runtime_s\n");
    for r in &result.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.rep,
            r.n,
            r.estimator.name(),
            fmt_full(r.kl),
            fmt_full(r.frobenius),
            fmt_full(r.angle),
            fmt_full(r.precision),
            fmt_full(r.recall),
            fmt_full(r.f_score),
            fmt_summary(r.runtime_s),
        ));
    }
    out.push_str(&summary_lines(&result, &parsed.scenario.estimators));
    emit(output, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample, DistributionSpec};
    use crate::params::ParamSet;
    use nalgebra::DMatrix;

    fn write_input(dir: &Path) -> PathBuf {
        let params = ParamSet::new(
            DMatrix::zeros(2, 3),
            DMatrix::identity(2, 2),
            DMatrix::identity(3, 3),
        )
        .unwrap();
        let stack = sample(&DistributionSpec::matrix_normal(params), 30, 5).unwrap();
        let path = dir.join("input.mxt");
        std::fs::write(&path, super::super::mxt::write_mxt(&stack)).unwrap();
        path
    }

    #[test]
    fn fit_then_detect_and_explain() {
        let dir = tempfile::tempdir().unwrap();
        let input = write_input(dir.path());
        let fit_path = dir.path().join("fit.json");
        cmd_fit(&FitOptions {
            input: input.clone(),
            rows: None,
            cols: None,
            h: None,
            m: Some(40),
            seed: 9,
            subsampling: None,
            output: Some(fit_path.clone()),
        })
        .unwrap();

        let detect_out = dir.path().join("detect.csv");
        cmd_detect(
            &input,
            None,
            None,
            &fit_path,
            0.975,
            ParamsChoice::Reweighted,
            Some(&detect_out),
        )
        .unwrap();
        let text = std::fs::read_to_string(&detect_out).unwrap();
        assert!(text.starts_with("index,mmd2,cutoff,flag\n"));
        assert_eq!(text.lines().count(), 31);

        let explain_out = dir.path().join("explain.csv");
        cmd_explain(
            &input,
            None,
            None,
            &fit_path,
            ExplainLevel::Row,
            0,
            ParamsChoice::Reweighted,
            Some(&explain_out),
        )
        .unwrap();
        let text = std::fs::read_to_string(&explain_out).unwrap();
        assert!(text.contains("# total="));

        let err = cmd_explain(
            &input,
            None,
            None,
            &fit_path,
            ExplainLevel::Cell,
            99,
            ParamsChoice::Raw,
            None,
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn atomic_overwrite_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        std::fs::write(&path, "old").unwrap();
        emit(Some(&path), "new contents\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "new contents\n");
    }
}
