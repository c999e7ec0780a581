//! Deterministic discounted-cash-flow valuation.
//!
//! Three routes to a project value, kept deliberately distinct so they can
//! cross-check each other:
//!
//! - [`two_scenario_value`] for the option-free binomial project,
//! - [`rollback`] — backward induction from the tree's leaves to its root,
//! - [`closed_form_value`] — the expanded single summation over stages and
//!   paths, algebraically identical to the rollback.
//!
//! All arithmetic is full-precision f64; rounding to whole $K is a display
//! concern and happens only in reporting layers.

use crate::dist::CashFlowDist;
use crate::error::Error;
use crate::tree::{OptionTree, TreePath, TwoScenarioProject};

/// How to turn a [`CashFlowDist`] into the scalar the deterministic engine
/// needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueMode {
    /// Only degenerate (non-random) distributions are accepted; anything
    /// random is an error.
    Strict,
    /// Random distributions are projected onto their means. This is an
    /// explicit caller choice, never a silent default.
    Means,
}

impl ValueMode {
    fn resolve(self, dist: &CashFlowDist, path: &str) -> Result<f64, Error> {
        match self {
            ValueMode::Strict => dist.as_scalar().ok_or_else(|| Error::UnresolvedRandom {
                path: path.to_string(),
            }),
            ValueMode::Means => Ok(dist.mean()),
        }
    }
}

/// Node-by-node values from a tree rollback.
///
/// `v1[i]` and `v2[i][j]` include their own period's net cash flow
/// (CF + delta) as the leading term, matching the way published worked
/// examples tabulate "time 1" values. `v3[i][j][l]` is the value at t = 3 of
/// the remaining flows, with the period-3 flow undiscounted.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationResult {
    /// Project value at t = 0 (before subtracting the initial investment).
    pub v0: f64,
    /// v0 minus the initial investment.
    pub npv: f64,
    pub v1: [f64; 2],
    pub v2: [[f64; 2]; 2],
    pub v3: [[[f64; 2]; 2]; 2],
}

impl ValuationResult {
    /// Discounted continuation value of terminal branch (i,j,l): the t = 2
    /// present value of V3, i.e. V3 / (1 + r).
    pub fn continuation_at_t2(&self, path: TreePath, rate: f64) -> f64 {
        let (i, j, l) = path.indices();
        self.v3[i][j][l] / (1.0 + rate)
    }
}

/// Present value at t = 0 of `flows[k-1]` paid at period k = 1..=n:
/// sum of flows_k / (1+rate)^k. An empty vector is worth 0 by convention.
pub fn present_value(flows: &[f64], rate: f64) -> Result<f64, Error> {
    if !(rate > -1.0) || !rate.is_finite() {
        return Err(Error::RateOutOfDomain(rate));
    }
    let base = 1.0 + rate;
    Ok(flows
        .iter()
        .enumerate()
        .map(|(m, cf)| cf / base.powi(m as i32 + 1))
        .sum())
}

/// Valuation of the option-free two-scenario project.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoScenarioValue {
    pub v0: f64,
    pub npv: f64,
    /// Present value at t = 0 of each scenario's flows.
    pub scenario_pv: [f64; 2],
    /// Each scenario's value at t = 1 including the period-1 flow, as
    /// tabulated in worked examples.
    pub scenario_value_t1: [f64; 2],
}

/// Expected project value over the two scenarios: V0 = sum of
/// p_i * PV(scenario i), NPV = V0 - initial investment.
pub fn two_scenario_value(project: &TwoScenarioProject) -> Result<TwoScenarioValue, Error> {
    project.ensure_valid()?;
    let mut scenario_pv = [0.0; 2];
    let mut scenario_value_t1 = [0.0; 2];
    for (i, scenario) in project.scenarios.iter().enumerate() {
        scenario_pv[i] = present_value(&scenario.flows, project.rate)?;
        scenario_value_t1[i] = match scenario.flows.split_first() {
            Some((first, rest)) => first + present_value(rest, project.rate)?,
            None => 0.0,
        };
    }
    let v0 = project.scenarios[0].p * scenario_pv[0] + project.scenarios[1].p * scenario_pv[1];
    Ok(TwoScenarioValue {
        v0,
        npv: v0 - project.initial_investment,
        scenario_pv,
        scenario_value_t1,
    })
}

/// Backward induction over the two-stage tree.
///
/// Leaf values come first: V3 discounts the terminal flows to t = 3. Each
/// earlier node adds its own net cash flow to the discounted expectation of
/// its children, and V0 discounts the stage-1 expectation once more.
pub fn rollback(tree: &OptionTree, mode: ValueMode) -> Result<ValuationResult, Error> {
    tree.ensure_valid()?;
    let base = 1.0 + tree.rate;

    let mut v3 = [[[0.0; 2]; 2]; 2];
    let mut v2 = [[0.0; 2]; 2];
    let mut v1 = [0.0; 2];

    for path in TreePath::all() {
        let (i, j, l) = path.indices();
        let branch = &tree.stage3[i][j][l];
        let mut value = 0.0;
        for (m, flow) in branch.flows.iter().enumerate() {
            let cf = mode.resolve(flow, &format!("stage3{path}.flows[{}]", m + 3))?;
            value += cf / base.powi(m as i32);
        }
        v3[i][j][l] = value;
    }

    for i in 0..2 {
        for j in 0..2 {
            let branch = &tree.stage2[i][j];
            let label = format!("stage2[{}][{}]", i + 1, j + 1);
            let cf = mode.resolve(&branch.flow, &format!("{label}.flow"))?;
            let delta = mode.resolve(&branch.delta, &format!("{label}.delta"))?;
            let expected = tree.stage3[i][j][0].p * v3[i][j][0]
                + tree.stage3[i][j][1].p * v3[i][j][1];
            v2[i][j] = (cf + delta) + expected / base;
        }
    }

    for i in 0..2 {
        let branch = &tree.stage1[i];
        let label = format!("stage1[{}]", i + 1);
        let cf = mode.resolve(&branch.flow, &format!("{label}.flow"))?;
        let delta = mode.resolve(&branch.delta, &format!("{label}.delta"))?;
        let expected = tree.stage2[i][0].p * v2[i][0] + tree.stage2[i][1].p * v2[i][1];
        v1[i] = (cf + delta) + expected / base;
    }

    let v0 = (tree.stage1[0].p * v1[0] + tree.stage1[1].p * v1[1]) / base;

    Ok(ValuationResult {
        v0,
        npv: v0 - tree.initial_investment,
        v1,
        v2,
        v3,
    })
}

/// Project value by the expanded closed-form summation: one discounted term
/// per stage-1 branch, one per stage-2 branch weighted by its path
/// probability so far, and one per terminal flow weighted by the full path
/// probability. Equals [`rollback`]'s `v0` up to floating-point noise.
pub fn closed_form_value(tree: &OptionTree, mode: ValueMode) -> Result<f64, Error> {
    tree.ensure_valid()?;
    let base = 1.0 + tree.rate;

    let mut total = 0.0;
    for (i, branch) in tree.stage1.iter().enumerate() {
        let label = format!("stage1[{}]", i + 1);
        let cf = mode.resolve(&branch.flow, &format!("{label}.flow"))?;
        let delta = mode.resolve(&branch.delta, &format!("{label}.delta"))?;
        total += branch.p * (cf + delta) / base;
    }
    for i in 0..2 {
        for j in 0..2 {
            let branch = &tree.stage2[i][j];
            let label = format!("stage2[{}][{}]", i + 1, j + 1);
            let cf = mode.resolve(&branch.flow, &format!("{label}.flow"))?;
            let delta = mode.resolve(&branch.delta, &format!("{label}.delta"))?;
            total += tree.stage1[i].p * branch.p * (cf + delta) / base.powi(2);
        }
    }
    for path in TreePath::all() {
        let (i, j, l) = path.indices();
        let branch = &tree.stage3[i][j][l];
        let weight = tree.stage1[i].p * tree.stage2[i][j].p * branch.p;
        for (m, flow) in branch.flows.iter().enumerate() {
            let cf = mode.resolve(flow, &format!("stage3{path}.flows[{}]", m + 3))?;
            total += weight * cf / base.powi(m as i32 + 3);
        }
    }
    Ok(total)
}

/// Value of a real option as the NPV improvement it brings:
/// NPV with the option minus NPV without it (both at the same rate and
/// initial investment).
pub fn option_value(npv_with: f64, npv_without: f64) -> f64 {
    npv_with - npv_without
}
