//! Real-options valuation toolkit.
//!
//! Values investment projects that embed managerial flexibility ("real
//! options") on a binomial decision tree with two active decision stages:
//!
//! - [`dcf`] — deterministic discounted-cash-flow valuation: plain
//!   two-scenario NPV, backward-induction rollback over the tree, and an
//!   algebraically equivalent closed-form summation.
//! - [`brcf`] — the binomial-random-cash-flow model: analytic project-value
//!   moments, project value at risk (PVaR), and feasibility verdicts for
//!   Gaussian cash flows.
//! - [`sim`] — seeded, reproducible Monte Carlo estimation for arbitrary
//!   cash-flow distributions, parallel by default (`parallel` feature).
//! - [`oracle`] — brute-force path enumeration used to cross-check the DCF
//!   engines.
//! - [`scenario`] — TOML scenario files with strict validation and a
//!   canonical serialized form.
//!
//! Currency is an abstract "$K" unit throughout; rates are decimals per
//! period (0.20 = 20%).

pub mod brcf;
pub mod dcf;
pub mod dist;
pub mod error;
pub mod normal;
pub mod oracle;
pub mod scenario;
pub mod sim;
pub mod tree;

pub use brcf::{OneStageModel, QuantileMode, RiskReport};
pub use dcf::{ValuationResult, ValueMode};
pub use dist::CashFlowDist;
pub use error::Error;
pub use scenario::{ScenarioBody, ScenarioDocument};
pub use sim::{SimMode, SimModel, SimulationResult, SimulationSpec};
pub use tree::{
    BranchControl, OptionTree, Scenario, StageBranch, TerminalBranch, TreePath,
    TwoScenarioProject, ValidationReport,
};
