//! Decision-tree data model and validation.
//!
//! The tree has exactly two active decision stages (t = 1 and t = 2), each
//! binary, followed by a two-way chance split at t = 3 whose branches carry
//! the remaining cash flows out to the horizon. Simpler shapes (a single
//! option, or no option at all) are expressed by degenerate probabilities
//! {1, 0} and zero deltas.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dist::CashFlowDist;
use crate::error::Error;

/// Sibling branch probabilities must sum to 1 within this tolerance: strict
/// enough to catch typos, loose enough for decimal literals.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

/// One structural violation, located by a path such as `stage2[2][1].p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

/// Every violated invariant of a model; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, path: String, message: String) {
        self.violations.push(Violation { path, message });
    }

    /// Ok(()) when valid, otherwise the report wrapped as an error.
    pub fn into_result(self) -> Result<(), Error> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::from_report(self))
        }
    }

    fn check_probability(&mut self, path: &str, p: f64) {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            self.push(format!("{path}.p"), format!("probability must be in [0, 1], got {p}"));
        }
    }

    fn check_sibling_sum(&mut self, path: &str, ps: &[f64]) {
        let sum: f64 = ps.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            self.push(
                format!("{path}.p"),
                format!("sibling probabilities must sum to 1, got {sum}"),
            );
        }
    }

    fn check_rate(&mut self, path: &str, rate: f64) {
        if !(rate > -1.0) || !rate.is_finite() {
            self.push(path.to_string(), format!("rate must be > -1, got {rate}"));
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (n, v) in self.violations.iter().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            write!(f, "  {}: {}", v.path, v.message)?;
        }
        Ok(())
    }
}

/// Control variables of one option branch: the probability the branch
/// materializes and the additional cash flow delta it triggers (negative =
/// investment/outflow, positive = inflow, zero = no action).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchControl {
    pub p: f64,
    pub delta: CashFlowDist,
}

/// A branch of an active decision stage: control variables plus that
/// period's base cash flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageBranch {
    pub p: f64,
    pub delta: CashFlowDist,
    pub flow: CashFlowDist,
}

impl StageBranch {
    pub fn new(p: f64, delta: impl Into<CashFlowDist>, flow: impl Into<CashFlowDist>) -> Self {
        StageBranch {
            p,
            delta: delta.into(),
            flow: flow.into(),
        }
    }
}

/// A terminal chance branch at t = 3 carrying the cash flows for periods
/// k = 3..=horizon (exactly horizon - 2 entries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalBranch {
    pub p: f64,
    pub flows: Vec<CashFlowDist>,
}

impl TerminalBranch {
    pub fn new(p: f64, flows: Vec<CashFlowDist>) -> Self {
        TerminalBranch { p, flows }
    }
}

/// The two-active-stage binomial decision tree.
///
/// Branch indices are 0-based in code and 1-based in path labels and
/// reports. `stage1[i]` decides at t = 1; `stage2[i][j]` at t = 2 given
/// stage-1 branch `i`; `stage3[i][j][l]` is the terminal chance split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionTree {
    /// Initial investment at t = 0, $K, >= 0.
    pub initial_investment: f64,
    /// Per-period discount rate as a decimal (0.20 = 20%), > -1.
    pub rate: f64,
    /// Number of cash-flow periods, >= 3.
    pub horizon: usize,
    pub stage1: [StageBranch; 2],
    pub stage2: [[StageBranch; 2]; 2],
    pub stage3: [[[TerminalBranch; 2]; 2]; 2],
}

/// A terminal path through the tree, 1-based branch choices per stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TreePath {
    pub stage1: u8,
    pub stage2: u8,
    pub stage3: u8,
}

impl TreePath {
    pub fn new(stage1: u8, stage2: u8, stage3: u8) -> Self {
        TreePath { stage1, stage2, stage3 }
    }

    /// All 8 paths in canonical order (1,1,1), (1,1,2), ..., (2,2,2).
    pub fn all() -> impl Iterator<Item = TreePath> {
        (0..8u8).map(|n| TreePath {
            stage1: 1 + (n >> 2),
            stage2: 1 + ((n >> 1) & 1),
            stage3: 1 + (n & 1),
        })
    }

    /// 0-based indices (stage1, stage2, stage3) for array access.
    pub fn indices(&self) -> (usize, usize, usize) {
        (
            self.stage1 as usize - 1,
            self.stage2 as usize - 1,
            self.stage3 as usize - 1,
        )
    }
}

impl fmt::Display for TreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.stage1, self.stage2, self.stage3)
    }
}

impl OptionTree {
    /// Checks every structural invariant and reports all violations; never
    /// panics or errors, valid trees produce an empty report.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();

        if !(self.initial_investment >= 0.0) || !self.initial_investment.is_finite() {
            report.push(
                "initial_investment".into(),
                format!("must be >= 0 and finite, got {}", self.initial_investment),
            );
        }
        report.check_rate("rate", self.rate);
        if self.horizon < 3 {
            report.push(
                "horizon".into(),
                format!("two-active-stage tree needs horizon >= 3, got {}", self.horizon),
            );
        }

        for (i, branch) in self.stage1.iter().enumerate() {
            let path = format!("stage1[{}]", i + 1);
            report.check_probability(&path, branch.p);
            branch.delta.check(&format!("{path}.delta"), &mut report);
            branch.flow.check(&format!("{path}.flow"), &mut report);
        }
        report.check_sibling_sum("stage1", &[self.stage1[0].p, self.stage1[1].p]);

        for (i, branches) in self.stage2.iter().enumerate() {
            for (j, branch) in branches.iter().enumerate() {
                let path = format!("stage2[{}][{}]", i + 1, j + 1);
                report.check_probability(&path, branch.p);
                branch.delta.check(&format!("{path}.delta"), &mut report);
                branch.flow.check(&format!("{path}.flow"), &mut report);
            }
            report.check_sibling_sum(
                &format!("stage2[{}]", i + 1),
                &[branches[0].p, branches[1].p],
            );
        }

        for (i, per_i) in self.stage3.iter().enumerate() {
            for (j, per_ij) in per_i.iter().enumerate() {
                for (l, branch) in per_ij.iter().enumerate() {
                    let path = format!("stage3[{}][{}][{}]", i + 1, j + 1, l + 1);
                    report.check_probability(&path, branch.p);
                    if self.horizon >= 3 && branch.flows.len() != self.horizon - 2 {
                        report.push(
                            format!("{path}.flows"),
                            format!(
                                "terminal path must carry exactly {} cash flows (k = 3..={}), got {}",
                                self.horizon - 2,
                                self.horizon,
                                branch.flows.len()
                            ),
                        );
                    }
                    for (k, flow) in branch.flows.iter().enumerate() {
                        flow.check(&format!("{path}.flows[{}]", k + 3), &mut report);
                    }
                }
                report.check_sibling_sum(
                    &format!("stage3[{}][{}]", i + 1, j + 1),
                    &[per_ij[0].p, per_ij[1].p],
                );
            }
        }

        report
    }

    pub(crate) fn ensure_valid(&self) -> Result<(), Error> {
        self.validate().into_result()
    }

    /// True if every distribution in the tree is a degenerate scalar.
    pub fn is_deterministic(&self) -> bool {
        self.stage1.iter().all(|b| !b.delta.is_random() && !b.flow.is_random())
            && self
                .stage2
                .iter()
                .flatten()
                .all(|b| !b.delta.is_random() && !b.flow.is_random())
            && self
                .stage3
                .iter()
                .flatten()
                .flatten()
                .all(|b| b.flows.iter().all(|f| !f.is_random()))
    }

    /// Probability of reaching each of the 8 terminal paths: the product of
    /// the branch probabilities along the path. Entries sum to 1 (within
    /// [`PROBABILITY_SUM_TOLERANCE`]) for any valid tree.
    pub fn path_probabilities(&self) -> Result<Vec<(TreePath, f64)>, Error> {
        self.ensure_valid()?;
        Ok(TreePath::all()
            .map(|path| {
                let (i, j, l) = path.indices();
                let p = self.stage1[i].p * self.stage2[i][j].p * self.stage3[i][j][l].p;
                (path, p)
            })
            .collect())
    }
}

/// One scenario of a plain (option-free) project: a probability and its
/// cash-flow vector for periods k = 1..=n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub p: f64,
    pub flows: Vec<f64>,
}

/// The option-free binomial project: an initial investment and two
/// probability-weighted cash-flow scenarios over a common horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoScenarioProject {
    pub initial_investment: f64,
    /// Per-period discount rate as a decimal, > -1.
    pub rate: f64,
    pub scenarios: [Scenario; 2],
}

impl TwoScenarioProject {
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if !self.initial_investment.is_finite() {
            report.push(
                "initial_investment".into(),
                format!("must be finite, got {}", self.initial_investment),
            );
        }
        report.check_rate("rate", self.rate);
        for (i, scenario) in self.scenarios.iter().enumerate() {
            let path = format!("scenarios[{}]", i + 1);
            report.check_probability(&path, scenario.p);
            for (k, flow) in scenario.flows.iter().enumerate() {
                if !flow.is_finite() {
                    report.push(
                        format!("{path}.flows[{}]", k + 1),
                        format!("must be finite, got {flow}"),
                    );
                }
            }
        }
        report.check_sibling_sum("scenarios", &[self.scenarios[0].p, self.scenarios[1].p]);
        if self.scenarios[0].flows.len() != self.scenarios[1].flows.len() {
            report.push(
                "scenarios".into(),
                format!(
                    "scenarios must share one horizon, got {} and {} flows",
                    self.scenarios[0].flows.len(),
                    self.scenarios[1].flows.len()
                ),
            );
        }
        report
    }

    pub(crate) fn ensure_valid(&self) -> Result<(), Error> {
        self.validate().into_result()
    }
}
