//! Seeded Monte Carlo estimation of project value.
//!
//! # Reproducibility contract
//!
//! Replication `i` always consumes its own random substream, derived
//! deterministically from the spec: a ChaCha8 generator
//! (`rand_chacha::ChaCha8Rng`, a counter-based stream cipher with published
//! reference vectors) seeded with `seed_from_u64(seed)` and positioned on
//! stream `i` via `set_stream`. Unit deviates come from one pinned
//! conversion, `(next_u64() >> 11 + 0.5) / 2^53`, uniform on the open
//! interval (0, 1); Gaussian deviates are the inverse-CDF transform of a
//! single unit deviate (never rejection sampling, whose variable stream
//! consumption would break replication-indexed reproducibility).
//!
//! Replications are aggregated in replication order by a fixed sequential
//! reduction, so results are bit-identical no matter how many workers run
//! the replications or how rayon schedules them. With the `parallel` feature
//! (on by default) replication values are computed on the current rayon
//! pool; [`simulate_sequential`] is always available and produces the same
//! bits.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brcf::OneStageModel;
use crate::dist::CashFlowDist;
use crate::error::Error;
use crate::tree::OptionTree;

/// Number of histogram buckets for a non-degenerate sample.
pub const HISTOGRAM_BUCKETS: usize = 50;

/// The random substream owned by one replication.
pub struct Substream(ChaCha8Rng);

impl Substream {
    pub fn new(seed: u64, replication: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replication);
        Substream(rng)
    }

    /// Unit deviate, uniform on the open interval (0, 1): 53 mantissa bits
    /// of the next 64-bit word, offset by half a step so 0 and 1 are
    /// unreachable.
    pub fn unit(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }
}

/// Samples one value from a cash-flow distribution.
///
/// Deterministic values consume nothing from the stream; Gaussian and
/// Uniform consume exactly one unit deviate each.
pub fn draw(dist: &CashFlowDist, stream: &mut Substream) -> f64 {
    match *dist {
        CashFlowDist::Deterministic { value } => value,
        CashFlowDist::Gaussian { mean, sd } => {
            mean + sd * crate::normal::inverse_cdf(stream.unit())
        }
        CashFlowDist::Uniform { lo, hi } => lo + (hi - lo) * stream.unit(),
    }
}

/// What gets simulated: the one-stage option model or the full two-stage
/// tree.
#[derive(Debug, Clone, PartialEq)]
pub enum SimModel {
    OneStage(OneStageModel),
    Tree(OptionTree),
}

/// Per-replication functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimMode {
    /// Samples the inputs of the probability-averaged value expression (the
    /// one-stage closed form with p and g entering as constants). This is
    /// the mode whose Gaussian results match the analytic moments.
    ExpectationForm,
    /// Draws the branch outcomes themselves (Bernoulli per decision stage)
    /// and values the realized branch. Structurally faithful; its variance
    /// includes the branch mixture, so it exceeds expectation-form variance
    /// whenever the option changes anything.
    BranchSampling,
}

impl SimMode {
    pub fn label(self) -> &'static str {
        match self {
            SimMode::ExpectationForm => "expectation_form",
            SimMode::BranchSampling => "branch_sampling",
        }
    }
}

/// A complete, reproducible description of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub model: SimModel,
    /// Number of replications M, >= 1.
    pub samples: u64,
    pub seed: u64,
    pub mode: SimMode,
    /// One-sided confidence level for the empirical boundary, in (0, 0.5].
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBucket {
    pub lo: f64,
    pub width: f64,
    pub count: u64,
}

/// Sample statistics of one run. Identical specs (including the seed)
/// produce bit-identical results regardless of worker count.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub sample_mean: f64,
    /// Unbiased (divisor M - 1); 0 when M = 1.
    pub sample_sd: f64,
    /// Empirical alpha-quantile of the sample (order statistics with linear
    /// interpolation at rank alpha*(M-1) + 1, 1-indexed).
    pub pv_alpha: f64,
    /// sample_mean - pv_alpha.
    pub pvar: f64,
    /// 50 equal-width buckets spanning [min, max]; a single zero-width
    /// bucket when the sample is constant. Counts always sum to M.
    pub histogram: Vec<HistogramBucket>,
    pub samples: u64,
    pub seed: u64,
    pub alpha: f64,
    pub mode: SimMode,
}

impl SimulationResult {
    /// Histogram as CSV: header `bucket_lo,bucket_width,count`, one row per
    /// bucket, full-precision numbers.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bucket_lo,bucket_width,count\n");
        for bucket in &self.histogram {
            out.push_str(&format!("{},{},{}\n", bucket.lo, bucket.width, bucket.count));
        }
        out
    }
}

/// Side-by-side comparison of two runs at the same alpha, in the layout of
/// the published comparison tables. The option value is the difference of
/// the empirical lower boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub subject: SimulationResult,
    pub baseline: SimulationResult,
    /// subject.pv_alpha - baseline.pv_alpha.
    pub option_value: f64,
}

pub fn compare(subject: &SimulationResult, baseline: &SimulationResult) -> Result<Comparison, Error> {
    if subject.alpha != baseline.alpha {
        return Err(Error::IncomparableReports(format!(
            "alpha {} vs {}",
            subject.alpha, baseline.alpha
        )));
    }
    Ok(Comparison {
        subject: subject.clone(),
        baseline: baseline.clone(),
        option_value: subject.pv_alpha - baseline.pv_alpha,
    })
}

fn validate_spec(spec: &SimulationSpec) -> Result<(), Error> {
    if spec.samples < 1 {
        return Err(Error::NoSamples(spec.samples));
    }
    if !(spec.alpha > 0.0 && spec.alpha <= 0.5) {
        return Err(Error::AlphaOutOfRange(spec.alpha));
    }
    match &spec.model {
        SimModel::OneStage(model) => model.validate().into_result()?,
        SimModel::Tree(tree) => {
            tree.validate().into_result()?;
            if spec.mode == SimMode::ExpectationForm {
                return Err(Error::UnsupportedSimulationMode);
            }
        }
    }
    Ok(())
}

/// One replication of the one-stage model.
///
/// Draw order: base flows k = 1..=n, then the additional investment, then
/// (branch sampling only) the branch deviate.
fn one_stage_value(model: &OneStageModel, mode: SimMode, stream: &mut Substream) -> f64 {
    let base = 1.0 + model.rate;
    let flows: Vec<f64> = model.base_flows.iter().map(|d| draw(d, stream)).collect();
    let investment = draw(&model.additional_investment, stream);
    let weight = match mode {
        SimMode::ExpectationForm => model.option_probability,
        SimMode::BranchSampling => {
            if stream.unit() < model.option_probability {
                1.0
            } else {
                0.0
            }
        }
    };
    let lift = 1.0 + weight * model.growth;
    let mut value = (weight * (-investment) + flows[0]) / base.powi(1);
    for (m, cf) in flows.iter().enumerate().skip(1) {
        value += cf * lift / base.powi(m as i32 + 1);
    }
    value
}

/// One replication of the two-stage tree under branch sampling.
///
/// Draw order: the three stage deviates (a deviate below the first branch's
/// probability selects that branch), then per period along the realized
/// path: delta, then flow, then the terminal flows in period order.
fn tree_path_value(tree: &OptionTree, stream: &mut Substream) -> f64 {
    let base = 1.0 + tree.rate;
    let i = usize::from(!(stream.unit() < tree.stage1[0].p));
    let j = usize::from(!(stream.unit() < tree.stage2[i][0].p));
    let l = usize::from(!(stream.unit() < tree.stage3[i][j][0].p));

    let mut value = (draw(&tree.stage1[i].delta, stream) + draw(&tree.stage1[i].flow, stream))
        / base.powi(1);
    value += (draw(&tree.stage2[i][j].delta, stream) + draw(&tree.stage2[i][j].flow, stream))
        / base.powi(2);
    for (m, flow) in tree.stage3[i][j][l].flows.iter().enumerate() {
        value += draw(flow, stream) / base.powi(m as i32 + 3);
    }
    value
}

fn replication_value(spec: &SimulationSpec, replication: u64) -> f64 {
    let mut stream = Substream::new(spec.seed, replication);
    match &spec.model {
        SimModel::OneStage(model) => one_stage_value(model, spec.mode, &mut stream),
        SimModel::Tree(tree) => tree_path_value(tree, &mut stream),
    }
}

#[cfg(feature = "parallel")]
fn replication_values(spec: &SimulationSpec) -> Vec<f64> {
    (0..spec.samples)
        .into_par_iter()
        .map(|i| replication_value(spec, i))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn replication_values(spec: &SimulationSpec) -> Vec<f64> {
    replication_values_seq(spec)
}

fn replication_values_seq(spec: &SimulationSpec) -> Vec<f64> {
    (0..spec.samples).map(|i| replication_value(spec, i)).collect()
}

/// Empirical alpha-quantile by order statistics with linear interpolation at
/// rank alpha*(M-1) + 1 (1-indexed). `sorted` must be ascending, non-empty.
pub fn empirical_quantile(sorted: &[f64], alpha: f64) -> f64 {
    let m = sorted.len();
    let rank = alpha * (m - 1) as f64 + 1.0;
    let lower = rank.floor() as usize; // 1-indexed
    let frac = rank - rank.floor();
    if lower >= m {
        return sorted[m - 1];
    }
    sorted[lower - 1] + frac * (sorted[lower] - sorted[lower - 1])
}

fn build_histogram(values: &[f64]) -> Vec<HistogramBucket> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return vec![HistogramBucket { lo: min, width: 0.0, count: values.len() as u64 }];
    }
    let width = (max - min) / HISTOGRAM_BUCKETS as f64;
    let mut counts = [0u64; HISTOGRAM_BUCKETS];
    for &v in values {
        let idx = (((v - min) / width) as usize).min(HISTOGRAM_BUCKETS - 1);
        counts[idx] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(i, &count)| HistogramBucket { lo: min + i as f64 * width, width, count })
        .collect()
}

fn aggregate(spec: &SimulationSpec, values: Vec<f64>) -> SimulationResult {
    let m = values.len();
    let sample_mean = values.iter().sum::<f64>() / m as f64;
    let sample_sd = if m > 1 {
        let ss: f64 = values.iter().map(|v| (v - sample_mean) * (v - sample_mean)).sum();
        (ss / (m - 1) as f64).sqrt()
    } else {
        0.0
    };
    let histogram = build_histogram(&values);
    let mut sorted = values;
    sorted.sort_unstable_by(f64::total_cmp);
    let pv_alpha = empirical_quantile(&sorted, spec.alpha);
    SimulationResult {
        sample_mean,
        sample_sd,
        pv_alpha,
        pvar: sample_mean - pv_alpha,
        histogram,
        samples: spec.samples,
        seed: spec.seed,
        alpha: spec.alpha,
        mode: spec.mode,
    }
}

/// Runs the simulation. Parallel across replications when the `parallel`
/// feature is enabled (run inside a configured rayon pool to cap workers);
/// the result does not depend on the worker count.
pub fn simulate(spec: &SimulationSpec) -> Result<SimulationResult, Error> {
    validate_spec(spec)?;
    Ok(aggregate(spec, replication_values(spec)))
}

/// Single-threaded reference path; bit-identical to [`simulate`].
pub fn simulate_sequential(spec: &SimulationSpec) -> Result<SimulationResult, Error> {
    validate_spec(spec)?;
    Ok(aggregate(spec, replication_values_seq(spec)))
}
