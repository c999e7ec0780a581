//! Brute-force cross-check valuation.
//!
//! Values a deterministic tree by enumerating all 8 terminal paths and
//! discounting each path's flows period by period, with nothing shared with
//! the rollback or closed-form engines beyond the data model. Agreement
//! between the three routes is evidence, not tautology, so this stays the
//! dumbest possible implementation.

use crate::error::Error;
use crate::tree::{OptionTree, TreePath};

fn scalar(dist: &crate::dist::CashFlowDist, path: &str) -> Result<f64, Error> {
    dist.as_scalar().ok_or_else(|| Error::UnresolvedRandom {
        path: path.to_string(),
    })
}

/// Project value at t = 0 by exhaustive path enumeration: for each terminal
/// path, the probability of reaching it times the present value of every
/// net cash flow along it.
pub fn enumerate_value(tree: &OptionTree) -> Result<f64, Error> {
    tree.ensure_valid()?;

    let mut total = 0.0;
    for path in TreePath::all() {
        let (i, j, l) = path.indices();
        let probability = tree.stage1[i].p * tree.stage2[i][j].p * tree.stage3[i][j][l].p;

        // Net flow per period k = 1..=horizon along this path.
        let mut flows = Vec::with_capacity(tree.horizon);
        flows.push(
            scalar(&tree.stage1[i].flow, "stage1.flow")?
                + scalar(&tree.stage1[i].delta, "stage1.delta")?,
        );
        flows.push(
            scalar(&tree.stage2[i][j].flow, "stage2.flow")?
                + scalar(&tree.stage2[i][j].delta, "stage2.delta")?,
        );
        for (m, flow) in tree.stage3[i][j][l].flows.iter().enumerate() {
            flows.push(scalar(flow, &format!("stage3{path}.flows[{}]", m + 3))?);
        }

        let mut pv = 0.0;
        let mut discount = 1.0;
        for cf in flows {
            discount *= 1.0 + tree.rate;
            pv += cf / discount;
        }
        total += probability * pv;
    }
    Ok(total)
}
