//! The matrix minimum covariance determinant estimator.
//!
//! The estimator minimizes `p ln det Σ_col + q ln det Σ_row` over subsets of
//! `h` observations. The search seeds many elemental subsets of size `d + 2`
//! (`d = floor(p/q + q/p)`), runs a short truncated refinement on each,
//! keeps the best few and iterates concentration steps to a fixed point.
//! The winning fit is rescaled for consistency at the normal model and then
//! reweighted with a chi-square cutoff.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chi2::{chi2_cdf, chi2_quantile};
use crate::error::{Error, Result};
use crate::flipflop::{
    aspect_ratio_floor, flip_flop_mle, min_subset_size, FlipFlopConfig, IterMode, MLEFit,
};
use crate::params::{ParamSet, Precision};
use crate::seed;
use crate::stack::MatrixStack;

/// Hard cap on concentration steps per candidate; exceeding it is an error.
pub const MAX_CSTEPS: usize = 200;

/// Retry budget per initial subset before the trial counts as degenerate.
const MAX_TRIAL_ATTEMPTS: u64 = 10;

const TAG_TRIAL: u64 = 0x7472_69; // "tri"
const TAG_PARTITION: u64 = 0x7061_72; // "par"

/// Subsampling policy for large samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsampling {
    Off,
    /// Split samples with `n >= threshold` into blocks of roughly
    /// `block_size` observations for the trial phase.
    Auto { threshold: usize, block_size: usize },
}

impl Default for Subsampling {
    fn default() -> Self {
        Subsampling::Auto {
            threshold: 1000,
            block_size: 300,
        }
    }
}

/// Search configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MMCDConfig {
    /// Subset size; defaults to the breakdown-maximizing
    /// `floor((n + d + 2) / 2)`.
    pub h: Option<usize>,
    /// Number of elemental starting subsets (`m`).
    pub n_initial_subsets: usize,
    /// Number of best trial fits refined to convergence.
    pub n_keep: usize,
    /// Concentration steps (and default flip-flop iterations) in the trial
    /// phase.
    pub initial_iters: usize,
    /// Flip-flop policy for trial-phase fits. `None` uses
    /// `Fixed(initial_iters)`; `Some(UntilConvergence)` makes every
    /// intermediate fit the exact subset MLE, which in turn makes the
    /// selected h-subset matrix affine equivariant.
    pub trial_mle_mode: Option<IterMode>,
    /// Stop iterating concentration steps when the objective changes less
    /// than this.
    pub cstep_tol: f64,
    /// Flip-flop controls for until-convergence fits.
    pub flipflop: FlipFlopConfig,
    pub seed: u64,
    pub subsampling: Subsampling,
    /// Chi-square quantile of the reweighting cutoff.
    pub reweight_quantile: f64,
    /// Chi-square quantile used downstream for outlier flagging.
    pub detection_quantile: f64,
}

impl Default for MMCDConfig {
    fn default() -> Self {
        Self {
            h: None,
            n_initial_subsets: 500,
            n_keep: 10,
            initial_iters: 2,
            trial_mle_mode: None,
            cstep_tol: 1e-8,
            flipflop: FlipFlopConfig::default(),
            seed: 0,
            subsampling: Subsampling::default(),
            reweight_quantile: 0.975,
            detection_quantile: 0.975,
        }
    }
}

impl MMCDConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Effective subset size for a sample of `n` observations of shape
    /// `p x q`.
    pub fn effective_h(&self, n: usize, p: usize, q: usize) -> usize {
        self.h
            .unwrap_or_else(|| (n + aspect_ratio_floor(p, q) + 2) / 2)
    }

    fn validate(&self, n: usize, p: usize, q: usize) -> Result<usize> {
        self.flipflop.validate()?;
        if self.n_initial_subsets == 0 {
            return Err(Error::InvalidConfig("need at least one initial subset".into()));
        }
        if self.n_keep == 0 || self.n_keep > self.n_initial_subsets {
            return Err(Error::InvalidConfig(format!(
                "n_keep must lie in 1..=n_initial_subsets, got {}",
                self.n_keep
            )));
        }
        if self.initial_iters == 0 {
            return Err(Error::InvalidConfig("initial_iters must be at least 1".into()));
        }
        if !(self.cstep_tol > 0.0) {
            return Err(Error::InvalidConfig("cstep_tol must be positive".into()));
        }
        for (name, v) in [
            ("reweight_quantile", self.reweight_quantile),
            ("detection_quantile", self.detection_quantile),
        ] {
            if !(0.0 < v && v < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie strictly between 0 and 1, got {v}"
                )));
            }
        }
        let d = aspect_ratio_floor(p, q);
        if n < d + 2 {
            return Err(Error::SubsetTooSmall {
                required: d + 2,
                got: n,
            });
        }
        let h = self.effective_h(n, p, q);
        if h < d + 2 || h > n || 2 * h < n {
            return Err(Error::InvalidConfig(format!(
                "subset size h = {h} must satisfy n/2 <= h <= n and h >= d + 2 = {}",
                d + 2
            )));
        }
        Ok(h)
    }
}

/// Per-trial diagnostics of a search run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    /// Objective at the end of the trial phase; `None` when every attempt
    /// produced a singular fit.
    pub objective: Option<f64>,
    /// Whether this trial survived to the convergence phase.
    pub kept: bool,
    /// Objective after each concentration step of the convergence phase
    /// (kept trials only); nonincreasing.
    pub refine_objectives: Vec<f64>,
    pub reached_fixed_point: bool,
}

/// Result of the full search: raw and reweighted fits with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MMCDFit {
    /// Consistency-scaled raw fit.
    pub raw: ParamSet,
    /// Consistency-scaled reweighted fit.
    pub reweighted: ParamSet,
    /// Sorted indices of the optimal h-subset.
    pub h_subset: Vec<usize>,
    /// Reweighting flags; `h_subset` members always carry weight one.
    pub weights: Vec<bool>,
    /// Squared distances against the scaled raw fit.
    pub distances_raw: Vec<f64>,
    /// Squared distances against the scaled reweighted fit.
    pub distances_reweighted: Vec<f64>,
    /// `p ln det Σ_col + q ln det Σ_row` of the unscaled raw fit.
    pub objective: f64,
    pub c_raw: f64,
    pub c_rew: f64,
    pub trial_log: Vec<TrialRecord>,
}

impl MMCDFit {
    /// Number of observations with weight one.
    pub fn h_tilde(&self) -> usize {
        self.weights.iter().filter(|w| **w).count()
    }
}

/// One concentration step from an h-subset.
#[derive(Debug, Clone)]
pub struct CStepOutcome {
    /// The `h` indices with smallest squared distances under the fit on the
    /// input subset, sorted ascending (ties broken by index).
    pub subset_out: Vec<usize>,
    /// Maximum likelihood fit on the input subset.
    pub fit: MLEFit,
    /// Whether the step mapped the subset onto itself.
    pub fixed_point: bool,
}

/// Squared distances of every observation against prepared parameters.
pub fn squared_distances(stack: &MatrixStack, precision: &Precision) -> Result<Vec<f64>> {
    stack.iter().map(|x| precision.mmd_squared(x)).collect()
}

/// Indices of the `h` smallest distances, ties broken by ascending index.
fn select_h(distances: &[f64], pool: &[usize], h: usize) -> Vec<usize> {
    let mut ranked: Vec<usize> = pool.to_vec();
    ranked.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(a.cmp(&b)));
    ranked.truncate(h);
    ranked.sort_unstable();
    ranked
}

/// A single concentration step: fit the subset MLE, rank all observations by
/// squared distance against it, and return the `|subset_in|` closest.
///
/// The objective of the output subset's own fit never exceeds the input's.
pub fn cstep(stack: &MatrixStack, subset_in: &[usize], cfg: &FlipFlopConfig) -> Result<CStepOutcome> {
    let fit = flip_flop_mle(stack, subset_in, cfg)?;
    let precision = fit.params.precision()?;
    let distances = squared_distances(stack, &precision)?;
    let pool: Vec<usize> = (0..stack.n()).collect();
    let subset_out = select_h(&distances, &pool, subset_in.len());
    let mut sorted_in = subset_in.to_vec();
    sorted_in.sort_unstable();
    let fixed_point = subset_out == sorted_in;
    Ok(CStepOutcome {
        subset_out,
        fit,
        fixed_point,
    })
}

/// Consistency factor `c(α) = α / F_{χ²_{pq+2}}(χ²_{α;pq})` making the
/// trimmed covariance consistent at the normal model.
///
/// Monotone nonincreasing in `α`, with `c(1) = 1` exactly.
pub fn consistency_factor(alpha: f64, pq: usize) -> Result<f64> {
    if !(0.5..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!(
            "consistency factor needs alpha in [0.5, 1], got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return Ok(1.0);
    }
    let cutoff = chi2_quantile(alpha, pq)?;
    Ok(alpha / chi2_cdf(cutoff, pq + 2)?)
}

/// Breakdown-maximizing subset size and the matching replacement count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BreakdownH {
    /// `floor((n + d + 2) / 2)`.
    pub h: usize,
    /// Largest number of arbitrary replacements the estimator withstands:
    /// `min(n - h + 1, h - (d + 1))`.
    pub m_breakdown: usize,
    /// Raised when `p < 2` or `q < 2`: the estimator degenerates to the
    /// classical (multivariate or univariate) trimmed estimator, whose
    /// customary subset size convention differs.
    pub mcd_coincidence: bool,
    /// The classical convention `floor((n + pq + 1) / 2)` for the degenerate
    /// case, reported alongside rather than resolved.
    pub mcd_h: Option<usize>,
}

/// Evaluate the breakdown-point formula: the subset size maximizing the
/// breakdown point and the corresponding replacement count.
pub fn max_breakdown_h(n: usize, p: usize, q: usize) -> BreakdownH {
    let d = aspect_ratio_floor(p, q);
    let h = (n + d + 2) / 2;
    let m = (n as isize - h as isize + 1).min(h as isize - d as isize - 1).max(0) as usize;
    let degenerate = p.min(q) < 2;
    BreakdownH {
        h,
        m_breakdown: m,
        mcd_coincidence: degenerate,
        mcd_h: degenerate.then(|| (n + p * q + 1) / 2),
    }
}

/// Probability that at least one of `m` elemental subsets of size `d + 2` is
/// outlier-free when a fraction `epsilon` of the sample is contaminated.
pub fn clean_subset_probability(epsilon: f64, d: usize, m: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidConfig(format!(
            "contamination fraction must lie in [0, 1), got {epsilon}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidConfig("subset count must be at least 1".into()));
    }
    let clean_one = (1.0 - epsilon).powi(d as i32 + 2);
    Ok(1.0 - (1.0 - clean_one).powi(m as i32))
}

/// Number of elemental subsets needed to reach probability `beta` of at
/// least one clean subset.
pub fn required_subsets(epsilon: f64, d: usize, beta: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidConfig(format!(
            "contamination fraction must lie in [0, 1), got {epsilon}"
        )));
    }
    if !(0.0 < beta && beta < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "target probability must lie strictly between 0 and 1, got {beta}"
        )));
    }
    let clean_one = (1.0 - epsilon).powi(d as i32 + 2);
    if clean_one >= 1.0 {
        return Ok(1);
    }
    let m = ((1.0 - beta).ln() / (1.0 - clean_one).ln()).ceil();
    Ok((m as usize).max(1))
}

#[derive(Debug, Clone)]
struct Candidate {
    trial: usize,
    subset: Vec<usize>,
    objective: f64,
}

#[derive(Debug, Clone)]
struct Converged {
    trial: usize,
    subset: Vec<usize>,
    fit: MLEFit,
    objectives: Vec<f64>,
    fixed_point: bool,
}

/// Draw an elemental subset of `size` distinct indices from `pool`.
fn draw_subset(rng: &mut ChaCha8Rng, pool: &[usize], size: usize) -> Vec<usize> {
    let picked = rand::seq::index::sample(rng, pool.len(), size);
    let mut subset: Vec<usize> = picked.iter().map(|i| pool[i]).collect();
    subset.sort_unstable();
    subset
}

/// Trial phase for one elemental subset: a truncated fit followed by
/// `initial_iters` concentration steps ranking within `pool`.
fn run_trial(
    stack: &MatrixStack,
    pool: &[usize],
    h_local: usize,
    trial_idx: usize,
    cfg: &MMCDConfig,
    trial_ff: &FlipFlopConfig,
) -> Option<Candidate> {
    let elemental = min_subset_size(stack.p(), stack.q());
    for attempt in 0..MAX_TRIAL_ATTEMPTS {
        let child = seed::derive2(cfg.seed, TAG_TRIAL, trial_idx as u64, attempt);
        let mut rng = ChaCha8Rng::seed_from_u64(child);
        let subset = draw_subset(&mut rng, pool, elemental);
        match refine_candidate(stack, pool, subset, h_local, cfg.initial_iters, trial_ff) {
            Ok((subset, objective)) => {
                return Some(Candidate {
                    trial: trial_idx,
                    subset,
                    objective,
                })
            }
            Err(_) => continue,
        }
    }
    None
}

/// Fit on `start`, then `iters` concentration steps selecting `h_local`
/// observations from `pool`. Returns the final subset and objective.
fn refine_candidate(
    stack: &MatrixStack,
    pool: &[usize],
    start: Vec<usize>,
    h_local: usize,
    iters: usize,
    trial_ff: &FlipFlopConfig,
) -> Result<(Vec<usize>, f64)> {
    let mut fit = flip_flop_mle(stack, &start, trial_ff)?;
    let mut subset = start;
    for _ in 0..iters {
        let precision = fit.params.precision()?;
        let mut distances = vec![f64::INFINITY; stack.n()];
        for &i in pool {
            distances[i] = precision.mmd_squared(stack.get(i))?;
        }
        subset = select_h(&distances, pool, h_local);
        fit = flip_flop_mle(stack, &subset, trial_ff)?;
    }
    Ok((subset, fit.objective))
}

/// Concentration steps from `start` until a fixed point or until the
/// objective change drops below `cstep_tol`, with until-convergence fits.
fn converge_csteps(
    stack: &MatrixStack,
    start: Vec<usize>,
    trial: usize,
    cfg: &MMCDConfig,
) -> Result<Converged> {
    let conv_ff = FlipFlopConfig {
        mode: IterMode::UntilConvergence,
        ..cfg.flipflop
    };
    let pool: Vec<usize> = (0..stack.n()).collect();
    let h = start.len();
    let mut subset = start;
    let mut fit = flip_flop_mle(stack, &subset, &conv_ff)?;
    let mut objectives = vec![fit.objective];
    for _ in 0..MAX_CSTEPS {
        let precision = fit.params.precision()?;
        let distances = squared_distances(stack, &precision)?;
        let next = select_h(&distances, &pool, h);
        if next == subset {
            return Ok(Converged {
                trial,
                subset,
                fit,
                objectives,
                fixed_point: true,
            });
        }
        let next_fit = flip_flop_mle(stack, &next, &conv_ff)?;
        let delta = fit.objective - next_fit.objective;
        objectives.push(next_fit.objective);
        subset = next;
        fit = next_fit;
        if delta.abs() < cfg.cstep_tol {
            return Ok(Converged {
                trial,
                subset,
                fit,
                objectives,
                fixed_point: false,
            });
        }
        if delta < -1e-10 {
            return Err(Error::CStepIncrease { increase: -delta });
        }
    }
    Err(Error::CStepExceeded {
        max_steps: MAX_CSTEPS,
    })
}

/// Partition shuffled indices into `n_blocks` nearly equal blocks.
fn partition_indices(n: usize, n_blocks: usize, master_seed: u64) -> Vec<Vec<usize>> {
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(master_seed, TAG_PARTITION, 0));
    // Fisher-Yates via index sampling for a deterministic shuffle.
    for i in (1..n).rev() {
        let j = rand::Rng::gen_range(&mut rng, 0..=i);
        indices.swap(i, j);
    }
    let base = n / n_blocks;
    let extra = n % n_blocks;
    let mut blocks = Vec::with_capacity(n_blocks);
    let mut offset = 0;
    for b in 0..n_blocks {
        let len = base + usize::from(b < extra);
        let mut block: Vec<usize> = indices[offset..offset + len].to_vec();
        block.sort_unstable();
        blocks.push(block);
        offset += len;
    }
    blocks
}

/// Fast search for the raw and reweighted estimators.
///
/// Deterministic in `(stack, cfg)` including the seed, independent of the
/// degree of parallelism: every trial derives its own random stream from a
/// counter, and candidates merge in `(objective, trial index)` order.
pub fn fast_mmcd(stack: &MatrixStack, cfg: &MMCDConfig) -> Result<MMCDFit> {
    let (n, p, q) = (stack.n(), stack.p(), stack.q());
    let h = cfg.validate(n, p, q)?;
    let pq = p * q;
    let d = aspect_ratio_floor(p, q);
    let m = cfg.n_initial_subsets;
    let trial_ff = FlipFlopConfig {
        mode: cfg.trial_mle_mode.unwrap_or(IterMode::Fixed(cfg.initial_iters)),
        ..cfg.flipflop
    };

    // Trial phase: (trial index, candidate) pairs in deterministic order.
    let mut trial_results: Vec<(usize, Option<Candidate>)> = Vec::new();
    if h == n {
        // No trimming: every subset refines to the full sample.
        let full: Vec<usize> = (0..n).collect();
        let fit = flip_flop_mle(stack, &full, &trial_ff)?;
        trial_results.push((
            0,
            Some(Candidate {
                trial: 0,
                subset: full,
                objective: fit.objective,
            }),
        ));
    } else {
        let use_blocks = match cfg.subsampling {
            Subsampling::Off => None,
            Subsampling::Auto {
                threshold,
                block_size,
            } => {
                // Blocks must stay large enough to admit elemental fits.
                let n_blocks = n.div_ceil(block_size.max(1));
                (n >= threshold.max(1) && n > block_size && n / n_blocks >= d + 2)
                    .then_some(block_size)
            }
        };
        match use_blocks {
            None => {
                let full: Vec<usize> = (0..n).collect();
                trial_results = (0..m)
                    .into_par_iter()
                    .map(|k| (k, run_trial(stack, &full, h, k, cfg, &trial_ff)))
                    .collect();
            }
            Some(block_size) => {
                let n_blocks = n.div_ceil(block_size);
                let blocks = partition_indices(n, n_blocks, cfg.seed);
                let m_per_block = (m / n_blocks).max(1);
                let alpha = h as f64 / n as f64;
                // Block-local trial phases.
                let block_candidates: Vec<(usize, Option<Candidate>)> = blocks
                    .par_iter()
                    .enumerate()
                    .flat_map_iter(|(b, block)| {
                        let h_block = ((alpha * block.len() as f64).floor() as usize)
                            .max(d + 2)
                            .min(block.len());
                        (0..m_per_block).map(move |t| {
                            let k = b * m_per_block + t;
                            (k, run_trial(stack, block, h_block, k, cfg, &trial_ff))
                        })
                    })
                    .collect();
                // Pool every block survivor through a short full-data
                // refinement so objectives are comparable, then rank below.
                let full: Vec<usize> = (0..n).collect();
                trial_results = block_candidates
                    .into_par_iter()
                    .map(|(k, cand)| {
                        let refined = cand.and_then(|c| {
                            refine_candidate(
                                stack,
                                &full,
                                c.subset,
                                h,
                                cfg.initial_iters,
                                &trial_ff,
                            )
                            .ok()
                            .map(|(subset, objective)| Candidate {
                                trial: c.trial,
                                subset,
                                objective,
                            })
                        });
                        (k, refined)
                    })
                    .collect();
            }
        }
    }
    trial_results.sort_by_key(|(k, _)| *k);

    let survivors: Vec<&Candidate> = trial_results
        .iter()
        .filter_map(|(_, c)| c.as_ref())
        .collect();
    if survivors.is_empty() {
        return Err(Error::AllTrialsDegenerate {
            attempts: trial_results.len() * MAX_TRIAL_ATTEMPTS as usize,
        });
    }

    // Keep the lowest objectives, ties broken by trial index.
    let mut ranked: Vec<&Candidate> = survivors.clone();
    ranked.sort_by(|a, b| a.objective.total_cmp(&b.objective).then(a.trial.cmp(&b.trial)));
    let kept: Vec<&Candidate> = ranked.into_iter().take(cfg.n_keep).collect();

    // Convergence phase.
    let converged: Vec<Result<Converged>> = kept
        .par_iter()
        .map(|c| converge_csteps(stack, c.subset.clone(), c.trial, cfg))
        .collect();
    let mut best: Option<Converged> = None;
    let mut refine_info: Vec<(usize, Vec<f64>, bool)> = Vec::new();
    for result in converged {
        // Termination or monotonicity failures are hard errors even when
        // other candidates finish.
        let c = result?;
        refine_info.push((c.trial, c.objectives.clone(), c.fixed_point));
        let better = match &best {
            None => true,
            Some(b) => c
                .fit
                .objective
                .total_cmp(&b.fit.objective)
                .then(c.trial.cmp(&b.trial))
                .is_lt(),
        };
        if better {
            best = Some(c);
        }
    }
    let best = best.expect("kept set is nonempty");

    // Raw fit: consistency scaling applied to the row factor only, leaving
    // the normalized column factor untouched.
    let objective = best.fit.objective;
    let alpha = h as f64 / n as f64;
    let c_raw = consistency_factor(alpha, pq)?;
    let mut raw = best.fit.params.clone();
    raw.scale_sigma_row(c_raw);
    let distances_raw = squared_distances(stack, &raw.precision()?)?;

    // Reweighting: subset members keep weight one, everything below the
    // chi-square cutoff joins.
    let cutoff = chi2_quantile(cfg.reweight_quantile, pq)?;
    let mut weights = vec![false; n];
    for &i in &best.subset {
        weights[i] = true;
    }
    for (i, w) in weights.iter_mut().enumerate() {
        if distances_raw[i] < cutoff {
            *w = true;
        }
    }
    let reweight_set: Vec<usize> = (0..n).filter(|&i| weights[i]).collect();
    let h_tilde = reweight_set.len();
    let conv_ff = FlipFlopConfig {
        mode: IterMode::UntilConvergence,
        ..cfg.flipflop
    };
    let rew_fit = flip_flop_mle(stack, &reweight_set, &conv_ff)?;
    let c_rew = consistency_factor(h_tilde as f64 / n as f64, pq)?;
    let mut reweighted = rew_fit.params;
    reweighted.scale_sigma_row(c_rew);
    let distances_reweighted = squared_distances(stack, &reweighted.precision()?)?;

    let trial_log = trial_results
        .iter()
        .map(|(k, cand)| {
            let refine = refine_info.iter().find(|(t, _, _)| t == k);
            TrialRecord {
                trial: *k,
                objective: cand.as_ref().map(|c| c.objective),
                kept: kept.iter().any(|c| c.trial == *k),
                refine_objectives: refine.map(|(_, o, _)| o.clone()).unwrap_or_default(),
                reached_fixed_point: refine.map(|(_, _, f)| *f).unwrap_or(false),
            }
        })
        .collect();

    Ok(MMCDFit {
        raw,
        reweighted,
        h_subset: best.subset,
        weights,
        distances_raw,
        distances_reweighted,
        objective,
        c_raw,
        c_rew,
        trial_log,
    })
}

/// Convenience: squared distances of a stack against arbitrary parameters.
pub fn distances_against(stack: &MatrixStack, params: &ParamSet) -> Result<Vec<f64>> {
    squared_distances(stack, &params.precision()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample, DistributionSpec};
    use crate::params::ParamSet;
    use nalgebra::DMatrix;

    fn identity_params(p: usize, q: usize) -> ParamSet {
        ParamSet::new(
            DMatrix::zeros(p, q),
            DMatrix::identity(p, p),
            DMatrix::identity(q, q),
        )
        .unwrap()
    }

    fn shifted_params(p: usize, q: usize, gamma: f64) -> ParamSet {
        ParamSet::new(
            DMatrix::from_element(p, q, gamma),
            DMatrix::identity(p, p),
            DMatrix::identity(q, q),
        )
        .unwrap()
    }

    #[test]
    fn breakdown_formula_matches_worked_cases() {
        let b = max_breakdown_h(100, 5, 20);
        assert_eq!((b.h, b.m_breakdown), (53, 48));
        assert!(!b.mcd_coincidence);

        let video = max_breakdown_h(633, 128, 160);
        assert_eq!(video.h, 318);

        let degenerate = max_breakdown_h(100, 1, 20);
        assert!(degenerate.mcd_coincidence);
        assert_eq!(degenerate.mcd_h, Some(60));
    }

    #[test]
    fn consistency_factor_endpoints_and_monotonicity() {
        assert_eq!(consistency_factor(1.0, 7).unwrap(), 1.0);
        let mut prev = f64::INFINITY;
        for alpha in [0.5, 0.6, 0.7, 0.8, 0.9, 0.975, 1.0] {
            let c = consistency_factor(alpha, 10).unwrap();
            assert!(c <= prev + 1e-12, "c({alpha}) = {c} not nonincreasing");
            assert!(c >= 1.0 - 1e-12);
            prev = c;
        }
        assert!(consistency_factor(0.4, 10).is_err());
    }

    #[test]
    fn subset_probability_trivials() {
        assert_eq!(clean_subset_probability(0.0, 4, 7).unwrap(), 1.0);
        assert_eq!(required_subsets(0.0, 4, 0.99).unwrap(), 1);
        assert_eq!(required_subsets(0.2, 4, 0.99).unwrap(), 16);
    }

    #[test]
    fn cstep_fixed_point_returns_unchanged() {
        let spec = DistributionSpec::matrix_normal(identity_params(3, 3));
        let stack = sample(&spec, 60, 21).unwrap();
        let cfg = MMCDConfig {
            n_initial_subsets: 50,
            seed: 5,
            ..Default::default()
        };
        let fit = fast_mmcd(&stack, &cfg).unwrap();
        let out = cstep(&stack, &fit.h_subset, &FlipFlopConfig::default()).unwrap();
        assert!(out.fixed_point);
        assert_eq!(out.subset_out, fit.h_subset);
    }

    #[test]
    fn cstep_expels_planted_gross_outlier() {
        // One gross outlier inside the subset, one clean point outside: the
        // outlier leaves after a single step.
        let spec = DistributionSpec::matrix_normal(identity_params(2, 3));
        let mut data: Vec<DMatrix<f64>> = sample(&spec, 20, 77).unwrap().matrices().to_vec();
        data[0] = DMatrix::from_element(2, 3, 100.0);
        let stack = MatrixStack::new(data).unwrap();
        let subset_in: Vec<usize> = (0..16).collect(); // contains outlier 0
        let out = cstep(&stack, &subset_in, &FlipFlopConfig::default()).unwrap();
        assert!(!out.subset_out.contains(&0), "outlier retained");
        // Direct distance comparison confirms the exchange.
        let precision = out.fit.params.precision().unwrap();
        let d0 = precision.mmd_squared(stack.get(0)).unwrap();
        for &i in &out.subset_out {
            assert!(precision.mmd_squared(stack.get(i)).unwrap() < d0);
        }
    }

    #[test]
    fn iterated_csteps_terminate_at_fixed_point() {
        let spec = DistributionSpec::matrix_normal(identity_params(2, 4));
        let stack = sample(&spec, 50, 3).unwrap();
        let mut subset: Vec<usize> = (5..33).collect();
        let cfg = FlipFlopConfig::default();
        let mut prev_objective = f64::INFINITY;
        for _ in 0..MAX_CSTEPS {
            let out = cstep(&stack, &subset, &cfg).unwrap();
            assert!(out.fit.objective <= prev_objective + 1e-10);
            prev_objective = out.fit.objective;
            if out.fixed_point {
                return;
            }
            subset = out.subset_out;
        }
        panic!("no fixed point within {MAX_CSTEPS} steps");
    }

    #[test]
    fn h_equal_n_reproduces_the_mle() {
        let spec = DistributionSpec::matrix_normal(identity_params(3, 4));
        let stack = sample(&spec, 80, 11).unwrap();
        let cfg = MMCDConfig {
            h: Some(80),
            seed: 1,
            ..Default::default()
        };
        let fit = fast_mmcd(&stack, &cfg).unwrap();
        assert_eq!(fit.c_raw, 1.0);
        let full: Vec<usize> = (0..80).collect();
        let mle = flip_flop_mle(&stack, &full, &FlipFlopConfig::default()).unwrap();
        assert!((fit.objective - mle.objective).abs() <= 1e-8);
        assert_eq!(fit.h_subset, full);
    }

    #[test]
    fn reweighting_never_shrinks_the_usable_set() {
        let spec = DistributionSpec::matrix_normal(identity_params(2, 5));
        let stack = sample(&spec, 60, 13).unwrap();
        let cfg = MMCDConfig {
            n_initial_subsets: 100,
            seed: 2,
            ..Default::default()
        };
        let fit = fast_mmcd(&stack, &cfg).unwrap();
        assert!(fit.h_tilde() >= fit.h_subset.len());
        for &i in &fit.h_subset {
            assert!(fit.weights[i]);
        }
    }

    #[test]
    fn search_is_deterministic_across_thread_counts() {
        let truth = identity_params(2, 4);
        let spec = DistributionSpec::matrix_normal(truth);
        let mut data = sample(&spec, 40, 17).unwrap().matrices().to_vec();
        for m in data.iter_mut().take(8) {
            *m += DMatrix::from_element(2, 4, 4.0);
        }
        let stack = MatrixStack::new(data).unwrap();
        let cfg = MMCDConfig {
            n_initial_subsets: 60,
            seed: 99,
            ..Default::default()
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| fast_mmcd(&stack, &cfg))
            .unwrap();
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| fast_mmcd(&stack, &cfg))
            .unwrap();
        assert_eq!(single, multi);
        let repeat = fast_mmcd(&stack, &cfg).unwrap();
        assert_eq!(single, repeat);
    }

    #[test]
    fn recovers_from_forty_percent_contamination() {
        // Planted-outlier recovery: shift gamma = 5 on 40% of n = 200 with
        // p = 2, q = 8; the h-subset contains no contaminated index in at
        // least 95 of 100 seeded runs.
        let p = 2;
        let q = 8;
        let n = 200;
        let n_out = 80;
        let mut hits = 0;
        for run in 0..100u64 {
            let clean = sample(
                &DistributionSpec::matrix_normal(identity_params(p, q)),
                n - n_out,
                1000 + run,
            )
            .unwrap();
            let outliers = sample(
                &DistributionSpec::matrix_normal(shifted_params(p, q, 5.0)),
                n_out,
                5000 + run,
            )
            .unwrap();
            let mut data = clean.matrices().to_vec();
            data.extend_from_slice(outliers.matrices());
            let stack = MatrixStack::new(data).unwrap();
            let cfg = MMCDConfig {
                n_initial_subsets: 200,
                seed: run,
                ..Default::default()
            };
            let fit = fast_mmcd(&stack, &cfg).unwrap();
            let contaminated_in_subset = fit.h_subset.iter().any(|&i| i >= n - n_out);
            if !contaminated_in_subset {
                hits += 1;
            }
        }
        assert!(hits >= 95, "clean recovery in only {hits}/100 runs");
    }

    #[test]
    fn subsampling_path_matches_contract() {
        let spec = DistributionSpec::matrix_normal(identity_params(2, 3));
        let stack = sample(&spec, 1200, 7).unwrap();
        let cfg = MMCDConfig {
            n_initial_subsets: 100,
            seed: 3,
            ..Default::default()
        };
        let fit = fast_mmcd(&stack, &cfg).unwrap();
        assert_eq!(fit.h_subset.len(), cfg.effective_h(1200, 2, 3));
        // Clean data: the raw objective is close to the full MLE's.
        let full: Vec<usize> = (0..1200).collect();
        let mle = flip_flop_mle(&stack, &full, &FlipFlopConfig::default()).unwrap();
        assert!(fit.objective <= mle.objective + 1.0);
        let off = MMCDConfig {
            subsampling: Subsampling::Off,
            ..cfg.clone()
        };
        let fit_off = fast_mmcd(&stack, &off).unwrap();
        assert_eq!(fit_off.h_subset.len(), fit.h_subset.len());
    }

    #[test]
    fn subsampling_falls_back_when_blocks_cannot_hold_elemental_fits() {
        // Blocks of 5 cannot hold d + 2 = 6 observations of a 5x20 shape;
        // the search must fall back to the direct trial phase.
        let spec = DistributionSpec::matrix_normal(identity_params(5, 20));
        let stack = sample(&spec, 12, 19).unwrap();
        let cfg = MMCDConfig {
            n_initial_subsets: 20,
            subsampling: Subsampling::Auto {
                threshold: 10,
                block_size: 5,
            },
            seed: 8,
            ..Default::default()
        };
        let fit = fast_mmcd(&stack, &cfg).unwrap();
        assert_eq!(fit.h_subset.len(), cfg.effective_h(12, 5, 20));
    }

    #[test]
    fn degenerate_data_raises_all_trials_error() {
        let x = DMatrix::from_element(2, 2, 1.0);
        let stack = MatrixStack::new(vec![x.clone(); 30]).unwrap();
        let cfg = MMCDConfig {
            n_initial_subsets: 10,
            ..Default::default()
        };
        assert!(matches!(
            fast_mmcd(&stack, &cfg),
            Err(Error::AllTrialsDegenerate { .. })
        ));
    }

    #[test]
    fn invalid_h_is_rejected() {
        let spec = DistributionSpec::matrix_normal(identity_params(2, 2));
        let stack = sample(&spec, 20, 1).unwrap();
        for h in [3usize, 25] {
            let cfg = MMCDConfig {
                h: Some(h),
                ..Default::default()
            };
            assert!(fast_mmcd(&stack, &cfg).is_err(), "h = {h} accepted");
        }
    }
}
