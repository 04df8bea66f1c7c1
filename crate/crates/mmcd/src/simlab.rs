//! Simulation laboratory: covariance generators, contamination schemes,
//! estimation and detection metrics, and the experiment runners.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flipflop::{flip_flop_mle, FlipFlopConfig};
use crate::linalg::{symmetric_eigenvalues_desc, CholFactor};
use crate::mmcd::{fast_mmcd, MMCDConfig};
use crate::model::{sample, DistributionSpec};
use crate::params::ParamSet;
use crate::seed;
use crate::shapley::detect;
use crate::stack::MatrixStack;

const TAG_DATA: u64 = 0x646174; // "dat"
const TAG_CONTAM: u64 = 0x636f6e; // "con"
const TAG_COV_ROW: u64 = 0x637672; // "cvr"
const TAG_COV_COL: u64 = 0x637663; // "cvc"
const TAG_FIT: u64 = 0x666974; // "fit"
const TAG_REP: u64 = 0x726570; // "rep"

/// Correlation matrix families used to generate simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub enum CovSpec {
    /// Random correlations, rejected until all off-diagonal magnitudes are
    /// at most 0.5.
    Rnd { dim: usize, seed: u64 },
    /// Equicorrelation: unit diagonal, constant off-diagonal `rho`.
    Fix { dim: usize, rho: f64 },
    /// Autoregressive decay: entries `rho^|j-k|`.
    Mix { dim: usize, rho: f64 },
}

impl CovSpec {
    pub fn dim(&self) -> usize {
        match *self {
            CovSpec::Rnd { dim, .. } | CovSpec::Fix { dim, .. } | CovSpec::Mix { dim, .. } => dim,
        }
    }

    /// Same family, reseeded; identity for the deterministic families.
    pub fn reseeded(&self, new_seed: u64) -> CovSpec {
        match *self {
            CovSpec::Rnd { dim, .. } => CovSpec::Rnd {
                dim,
                seed: new_seed,
            },
            ref other => other.clone(),
        }
    }
}

/// Build the positive definite correlation matrix described by `spec`.
pub fn make_cov(spec: &CovSpec) -> Result<DMatrix<f64>> {
    match *spec {
        CovSpec::Fix { rho, .. } | CovSpec::Mix { rho, .. } if !(0.0 < rho && rho < 1.0) => {
            Err(Error::InvalidConfig(format!(
                "correlation parameter must lie strictly between 0 and 1, got {rho}"
            )))
        }
        CovSpec::Fix { dim, rho } => Ok(DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                1.0
            } else {
                rho
            }
        })),
        CovSpec::Mix { dim, rho } => Ok(DMatrix::from_fn(dim, dim, |i, j| {
            rho.powi((i as i32 - j as i32).abs())
        })),
        CovSpec::Rnd { dim, seed } => {
            if dim == 0 {
                return Err(Error::InvalidConfig("dimension must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..1000 {
                let t =
                    DMatrix::from_fn(dim, dim + 2, |_, _| rng.sample::<f64, _>(StandardNormal));
                let g = &t * t.transpose();
                let inv_sd: Vec<f64> = (0..dim).map(|i| 1.0 / g[(i, i)].sqrt()).collect();
                let mut corr = DMatrix::from_fn(dim, dim, |i, j| g[(i, j)] * inv_sd[i] * inv_sd[j]);
                for i in 0..dim {
                    corr[(i, i)] = 1.0;
                }
                let small = (0..dim)
                    .all(|i| (0..dim).all(|j| i == j || corr[(i, j)].abs() <= 0.5));
                if small && CholFactor::new(&corr).is_ok() {
                    return Ok(corr);
                }
            }
            Err(Error::InvalidConfig(format!(
                "no random correlation matrix with off-diagonals <= 0.5 found in 1000 draws for dimension {dim}"
            )))
        }
    }
}

/// How outlying observations are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    /// Redraw the whole observation with mean entries `gamma`.
    Shift { gamma: f64 },
    /// Redraw only the top-left `rows x cols` block, using the matching
    /// principal sub-blocks of the covariance pair.
    Block {
        gamma: f64,
        rows: usize,
        cols: usize,
    },
    /// Cyclically permute a fraction of randomly chosen cells within each
    /// outlying observation.
    Cell { permute_fraction: f64 },
}

/// Contamination description: scheme, outlier fraction, and the covariance
/// multiplier applied to the outlier distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ContaminationSpec {
    pub scheme: Scheme,
    pub epsilon: f64,
    pub scale_multiplier: f64,
}

impl ContaminationSpec {
    pub fn shift(gamma: f64, epsilon: f64) -> Self {
        Self {
            scheme: Scheme::Shift { gamma },
            epsilon,
            scale_multiplier: 1.0,
        }
    }

    fn validate(&self, p: usize, q: usize) -> Result<()> {
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(Error::InvalidConfig(format!(
                "outlier fraction must lie in [0, 0.5), got {}",
                self.epsilon
            )));
        }
        if !(self.scale_multiplier > 0.0) {
            return Err(Error::InvalidConfig(
                "covariance multiplier must be positive".into(),
            ));
        }
        match self.scheme {
            Scheme::Block { rows, cols, .. } => {
                if rows == 0 || cols == 0 || rows > p || cols > q {
                    return Err(Error::InvalidConfig(format!(
                        "block dimensions {rows}x{cols} must lie within {p}x{q}"
                    )));
                }
            }
            Scheme::Cell { permute_fraction } => {
                if !(0.0 < permute_fraction && permute_fraction <= 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "permuted cell fraction must lie in (0, 1], got {permute_fraction}"
                    )));
                }
            }
            Scheme::Shift { .. } => {}
        }
        Ok(())
    }
}

/// Replace `floor(epsilon n)` observations according to `spec`.
///
/// Returns the contaminated stack and the sorted ground-truth outlier
/// indices. Deterministic in `rng_seed`.
pub fn contaminate(
    stack: &MatrixStack,
    truth: &ParamSet,
    spec: &ContaminationSpec,
    rng_seed: u64,
) -> Result<(MatrixStack, Vec<usize>)> {
    let (n, p, q) = (stack.n(), stack.p(), stack.q());
    spec.validate(p, q)?;
    let n_out = (spec.epsilon * n as f64).floor() as usize;
    if n_out == 0 {
        return Ok((stack.clone(), Vec::new()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut labels: Vec<usize> = rand::seq::index::sample(&mut rng, n, n_out).into_vec();
    labels.sort_unstable();

    let mut data = stack.matrices().to_vec();
    let s = spec.scale_multiplier;
    match spec.scheme {
        Scheme::Shift { gamma } => {
            let outlier_params = ParamSet::new(
                DMatrix::from_element(p, q, gamma),
                truth.sigma_row() * s,
                truth.sigma_col().clone(),
            )?;
            let spec_out = DistributionSpec::matrix_normal(outlier_params);
            let draws = crate::model::sample_with(&spec_out, n_out, &mut rng)?;
            for (slot, draw) in labels.iter().zip(draws.iter()) {
                data[*slot] = draw.clone();
            }
        }
        Scheme::Block { gamma, rows, cols } => {
            let sub_row = truth.sigma_row().view((0, 0), (rows, rows)).into_owned() * s;
            let sub_col = truth.sigma_col().view((0, 0), (cols, cols)).into_owned();
            let block_params =
                ParamSet::new(DMatrix::from_element(rows, cols, gamma), sub_row, sub_col)?;
            let spec_out = DistributionSpec::matrix_normal(block_params);
            let draws = crate::model::sample_with(&spec_out, n_out, &mut rng)?;
            for (slot, draw) in labels.iter().zip(draws.iter()) {
                let mut patched = data[*slot].clone();
                patched.view_mut((0, 0), (rows, cols)).copy_from(draw);
                data[*slot] = patched;
            }
        }
        Scheme::Cell { permute_fraction } => {
            let pq = p * q;
            let k = ((permute_fraction * pq as f64).floor() as usize).clamp(2, pq);
            for &slot in &labels {
                let positions = rand::seq::index::sample(&mut rng, pq, k).into_vec();
                let mut patched = data[slot].clone();
                // Cyclic shift along the sampled positions guarantees every
                // selected cell actually moves.
                let values: Vec<f64> = positions
                    .iter()
                    .map(|&a| patched[(a % p, a / p)])
                    .collect();
                for (t, &a) in positions.iter().enumerate() {
                    let from = (t + k - 1) % k;
                    patched[(a % p, a / p)] = values[from];
                }
                data[slot] = patched;
            }
        }
    }
    Ok((MatrixStack::new(data)?, labels))
}

/// Kullback-Leibler divergence of an estimated covariance pair against the
/// truth:
/// `tr(Ω_row Σ̂_row) tr(Ω_col Σ̂_col) - q ln det(Ω_row Σ̂_row)
///  - p ln det(Ω_col Σ̂_col) - pq`.
///
/// Invariant to the `(κ, 1/κ)` rebalancing of either pair; equals twice the
/// multivariate normal KL divergence of the vectorized models.
pub fn kl_divergence(est: &ParamSet, truth: &ParamSet) -> Result<f64> {
    check_same_shape(est, truth)?;
    let (p, q) = (truth.p() as f64, truth.q() as f64);
    let pr_t = truth.precision()?;
    let pr_e = est.precision()?;
    let tr_row = frob_inner(&pr_t.omega_row(), est.sigma_row());
    let tr_col = frob_inner(&pr_t.omega_col(), est.sigma_col());
    let ld_row = pr_e.log_det_sigma_row() - pr_t.log_det_sigma_row();
    let ld_col = pr_e.log_det_sigma_col() - pr_t.log_det_sigma_col();
    Ok(tr_row * tr_col - q * ld_row - p * ld_col - p * q)
}

/// Relative Frobenius error between the Kronecker products of the pairs,
/// computed from the factors alone.
pub fn frobenius_error(est: &ParamSet, truth: &ParamSet) -> Result<f64> {
    check_same_shape(est, truth)?;
    // ||A⊗B||² = ||A||²||B||² and <A⊗B, C⊗D> = <A,C><B,D>.
    let est_sq = frob_inner(est.sigma_col(), est.sigma_col())
        * frob_inner(est.sigma_row(), est.sigma_row());
    let truth_sq = frob_inner(truth.sigma_col(), truth.sigma_col())
        * frob_inner(truth.sigma_row(), truth.sigma_row());
    let cross = frob_inner(est.sigma_col(), truth.sigma_col())
        * frob_inner(est.sigma_row(), truth.sigma_row());
    let num_sq = (est_sq + truth_sq - 2.0 * cross).max(0.0);
    Ok(num_sq.sqrt() / truth_sq.sqrt())
}

/// One minus the cosine of the angle between the descending eigenvalue
/// vectors of the Kronecker products; the eigenvalues are formed as the
/// `pq` pairwise products of the factor eigenvalues.
pub fn angle_error(est: &ParamSet, truth: &ParamSet) -> Result<f64> {
    check_same_shape(est, truth)?;
    let ev_est = kronecker_eigenvalues(est)?;
    let ev_truth = kronecker_eigenvalues(truth)?;
    let dot: f64 = ev_est.iter().zip(&ev_truth).map(|(a, b)| a * b).sum();
    let na: f64 = ev_est.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nb: f64 = ev_truth.iter().map(|b| b * b).sum::<f64>().sqrt();
    Ok(1.0 - dot / (na * nb))
}

fn kronecker_eigenvalues(params: &ParamSet) -> Result<Vec<f64>> {
    let ev_row = symmetric_eigenvalues_desc(params.sigma_row());
    let ev_col = symmetric_eigenvalues_desc(params.sigma_col());
    let mut products: Vec<f64> = ev_col
        .iter()
        .flat_map(|c| ev_row.iter().map(move |r| c * r))
        .collect();
    products.sort_by(|a, b| b.total_cmp(a));
    Ok(products)
}

fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn check_same_shape(est: &ParamSet, truth: &ParamSet) -> Result<()> {
    if est.p() != truth.p() || est.q() != truth.q() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", truth.p(), truth.q()),
            actual: format!("{}x{}", est.p(), est.q()),
        });
    }
    Ok(())
}

/// Precision, recall and F-score of outlier flags against ground truth.
///
/// Degenerate denominators use sentinels: precision is 1 when nothing is
/// flagged and recall is 1 when no outliers exist; the F-score is 0 whenever
/// precision + recall is 0.
pub fn classification_scores(flags: &[bool], labels: &[bool]) -> Result<(f64, f64, f64)> {
    if flags.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} flags", labels.len()),
            actual: format!("{} flags", flags.len()),
        });
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&f, &l) in flags.iter().zip(labels) {
        match (f, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        1.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f_score = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok((precision, recall, f_score))
}

/// Estimators the experiment runners know how to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorId {
    Mle,
    MmcdRaw,
    MmcdReweighted,
    /// Classical trimmed estimator on the column-stacked observations.
    McdVec,
    /// Distances at the generating parameters; detection benchmark.
    Truth,
}

impl EstimatorId {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorId::Mle => "mle",
            EstimatorId::MmcdRaw => "mmcd_raw",
            EstimatorId::MmcdReweighted => "mmcd_reweighted",
            EstimatorId::McdVec => "mcd_vec",
            EstimatorId::Truth => "truth",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "mle" => Some(EstimatorId::Mle),
            "mmcd_raw" => Some(EstimatorId::MmcdRaw),
            "mmcd_reweighted" => Some(EstimatorId::MmcdReweighted),
            "mcd_vec" | "mcd" => Some(EstimatorId::McdVec),
            "truth" => Some(EstimatorId::Truth),
            _ => None,
        }
    }
}

/// One estimator's metrics in one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub rep: usize,
    pub n: usize,
    pub estimator: EstimatorId,
    pub kl: f64,
    pub frobenius: f64,
    pub angle: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    /// Wall-clock fit time; the raw and reweighted rows of a joint search
    /// share the same measurement.
    pub runtime_s: f64,
}

/// Per-replication records plus skip notices.
#[derive(Debug, Clone, Default)]
pub struct SimResult {
    pub records: Vec<RepRecord>,
    pub notices: Vec<String>,
}

impl SimResult {
    pub fn values<F: Fn(&RepRecord) -> f64>(
        &self,
        estimator: EstimatorId,
        n: Option<usize>,
        metric: F,
    ) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.estimator == estimator && n.map_or(true, |v| r.n == v))
            .map(metric)
            .collect()
    }

    /// Per-replication KL ratios `KL(mle) / KL(estimator)`, the
    /// finite-sample efficiency of `estimator` relative to the MLE.
    pub fn efficiency_values(&self, estimator: EstimatorId, n: Option<usize>) -> Vec<f64> {
        let mle = self.values(EstimatorId::Mle, n, |r| r.kl);
        let est = self.values(estimator, n, |r| r.kl);
        mle.iter().zip(est).map(|(m, e)| m / e).collect()
    }
}

/// Median of a sample; NaN for an empty one.
pub fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the mean.
pub fn standard_error(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return f64::NAN;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    (var / values.len() as f64).sqrt()
}

/// Declarative experiment configuration.
#[derive(Debug, Clone)]
pub struct SimScenario {
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub sigma_row: CovSpec,
    pub sigma_col: CovSpec,
    pub contamination: Option<ContaminationSpec>,
    pub estimators: Vec<EstimatorId>,
    /// Chi-square quantile of the detection cutoff (the simulation protocol
    /// uses 0.99).
    pub detection_quantile: f64,
    /// Search configuration template; the per-replication seed overrides
    /// `seed`.
    pub mmcd: MMCDConfig,
}

impl SimScenario {
    pub fn new(p: usize, q: usize, n: usize) -> Self {
        Self {
            p,
            q,
            n,
            sigma_row: CovSpec::Rnd { dim: p, seed: 0 },
            sigma_col: CovSpec::Mix { dim: q, rho: 0.7 },
            contamination: None,
            estimators: vec![
                EstimatorId::Mle,
                EstimatorId::MmcdRaw,
                EstimatorId::MmcdReweighted,
                EstimatorId::Truth,
            ],
            detection_quantile: 0.99,
            mmcd: MMCDConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sigma_row.dim() != self.p || self.sigma_col.dim() != self.q {
            return Err(Error::InvalidConfig(format!(
                "covariance dimensions {}x{} do not match the {}x{} shape",
                self.sigma_row.dim(),
                self.sigma_col.dim(),
                self.p,
                self.q
            )));
        }
        if let Some(c) = &self.contamination {
            c.validate(self.p, self.q)?;
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidConfig("no estimators selected".into()));
        }
        if !(0.0 < self.detection_quantile && self.detection_quantile < 1.0) {
            return Err(Error::InvalidConfig(
                "detection quantile must lie strictly between 0 and 1".into(),
            ));
        }
        Ok(())
    }
}

struct RepOutput {
    records: Vec<RepRecord>,
    notices: Vec<String>,
}

fn score_against(
    stack: &MatrixStack,
    params: &ParamSet,
    truth: &ParamSet,
    labels: &[bool],
    quantile: f64,
) -> Result<(f64, f64, f64, f64, f64, f64)> {
    let kl = kl_divergence(params, truth)?;
    let frob = frobenius_error(params, truth)?;
    let ang = angle_error(params, truth)?;
    let flags = detect(stack, params, quantile)?.flags;
    let (precision, recall, f_score) = classification_scores(&flags, labels)?;
    Ok((kl, frob, ang, precision, recall, f_score))
}

fn run_replication(scenario: &SimScenario, rep: usize, master_seed: u64) -> Result<RepOutput> {
    let rep_seed = seed::derive(master_seed, TAG_REP, rep as u64);
    let (p, q, n) = (scenario.p, scenario.q, scenario.n);
    let sigma_row = make_cov(&scenario.sigma_row.reseeded(seed::derive(rep_seed, TAG_COV_ROW, 0)))?;
    let sigma_col = make_cov(&scenario.sigma_col.reseeded(seed::derive(rep_seed, TAG_COV_COL, 0)))?;
    let truth = ParamSet::new(DMatrix::zeros(p, q), sigma_row, sigma_col)?;

    let clean = sample(
        &DistributionSpec::matrix_normal(truth.clone()),
        n,
        seed::derive(rep_seed, TAG_DATA, 0),
    )?;
    let (stack, outlier_indices) = match &scenario.contamination {
        Some(spec) => contaminate(&clean, &truth, spec, seed::derive(rep_seed, TAG_CONTAM, 0))?,
        None => (clean, Vec::new()),
    };
    let mut labels = vec![false; n];
    for &i in &outlier_indices {
        labels[i] = true;
    }

    let mut records = Vec::new();
    let mut notices = Vec::new();
    let quantile = scenario.detection_quantile;
    let wants = |e: EstimatorId| scenario.estimators.contains(&e);

    if wants(EstimatorId::Mle) {
        let start = std::time::Instant::now();
        let all: Vec<usize> = (0..n).collect();
        let fit = flip_flop_mle(&stack, &all, &FlipFlopConfig::default())?;
        let runtime_s = start.elapsed().as_secs_f64();
        let (kl, frobenius, angle, precision, recall, f_score) =
            score_against(&stack, &fit.params, &truth, &labels, quantile)?;
        records.push(RepRecord {
            rep,
            n,
            estimator: EstimatorId::Mle,
            kl,
            frobenius,
            angle,
            precision,
            recall,
            f_score,
            runtime_s,
        });
    }

    if wants(EstimatorId::MmcdRaw) || wants(EstimatorId::MmcdReweighted) {
        let cfg = MMCDConfig {
            seed: seed::derive(rep_seed, TAG_FIT, 0),
            ..scenario.mmcd.clone()
        };
        let start = std::time::Instant::now();
        let fit = fast_mmcd(&stack, &cfg)?;
        let runtime_s = start.elapsed().as_secs_f64();
        for (id, params) in [
            (EstimatorId::MmcdRaw, &fit.raw),
            (EstimatorId::MmcdReweighted, &fit.reweighted),
        ] {
            if wants(id) {
                let (kl, frobenius, angle, precision, recall, f_score) =
                    score_against(&stack, params, &truth, &labels, quantile)?;
                records.push(RepRecord {
                    rep,
                    n,
                    estimator: id,
                    kl,
                    frobenius,
                    angle,
                    precision,
                    recall,
                    f_score,
                    runtime_s,
                });
            }
        }
    }

    if wants(EstimatorId::McdVec) {
        let pq = p * q;
        if n <= pq {
            notices.push(format!(
                "rep {rep}: vectorized baseline skipped, needs n > pq ({n} <= {pq})"
            ));
        } else {
            let vec_stack = stack.vectorized();
            let vec_truth = ParamSet::new(
                DMatrix::zeros(pq, 1),
                truth.sigma_col().kronecker(truth.sigma_row()),
                DMatrix::identity(1, 1),
            )?;
            let cfg = MMCDConfig {
                // Classical subset-size convention for the vectorized view.
                h: Some((n + pq + 1) / 2),
                seed: seed::derive(rep_seed, TAG_FIT, 1),
                ..scenario.mmcd.clone()
            };
            let start = std::time::Instant::now();
            let fit = fast_mmcd(&vec_stack, &cfg)?;
            let runtime_s = start.elapsed().as_secs_f64();
            let (kl, frobenius, angle, precision, recall, f_score) =
                score_against(&vec_stack, &fit.reweighted, &vec_truth, &labels, quantile)?;
            records.push(RepRecord {
                rep,
                n,
                estimator: EstimatorId::McdVec,
                kl,
                frobenius,
                angle,
                precision,
                recall,
                f_score,
                runtime_s,
            });
        }
    }

    if wants(EstimatorId::Truth) {
        let start = std::time::Instant::now();
        let (kl, frobenius, angle, precision, recall, f_score) =
            score_against(&stack, &truth, &truth, &labels, quantile)?;
        let runtime_s = start.elapsed().as_secs_f64();
        records.push(RepRecord {
            rep,
            n,
            estimator: EstimatorId::Truth,
            kl,
            frobenius,
            angle,
            precision,
            recall,
            f_score,
            runtime_s,
        });
    }

    Ok(RepOutput { records, notices })
}

/// Run `reps` replications of `scenario`; replications are independent and
/// merged in replication order.
pub fn contamination_experiment(
    scenario: &SimScenario,
    reps: usize,
    seed: u64,
) -> Result<SimResult> {
    scenario.validate()?;
    if reps == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    let outputs: Vec<Result<RepOutput>> = (0..reps)
        .into_par_iter()
        .map(|rep| run_replication(scenario, rep, seed))
        .collect();
    let mut result = SimResult::default();
    for out in outputs {
        let out = out?;
        result.records.extend(out.records);
        result.notices.extend(out.notices);
    }
    Ok(result)
}

/// Clean-data efficiency experiment over a sample-size grid: fits the MLE
/// and both search estimators per replication and records all metrics, from
/// which per-replication efficiency ratios `KL(mle)/KL(est)` derive.
pub fn efficiency_experiment(
    p: usize,
    q: usize,
    n_grid: &[usize],
    reps: usize,
    seed: u64,
) -> Result<SimResult> {
    let mut result = SimResult::default();
    for (gi, &n) in n_grid.iter().enumerate() {
        let scenario = SimScenario {
            estimators: vec![
                EstimatorId::Mle,
                EstimatorId::MmcdRaw,
                EstimatorId::MmcdReweighted,
            ],
            ..SimScenario::new(p, q, n)
        };
        let grid_seed = seed::derive(seed, 0x677269, gi as u64); // "gri"
        let sub = contamination_experiment(&scenario, reps, grid_seed)?;
        result.records.extend(sub.records);
        result.notices.extend(sub.notices);
    }
    Ok(result)
}
