//! Scenario files: load, validate, and canonically save project definitions.
//!
//! The format is TOML with a versioned schema. Every document is
//!
//! ```toml
//! schema_version = "1"
//! kind = "two_scenario"        # or "option_tree" | "brcf_one_stage"
//!
//! [metadata]
//! name = "..."                 # free-form
//! description = "..."          # optional
//! option_class = "..."         # optional descriptive tag
//!
//! [body]
//! # fields of the declared kind; amounts in $K, rates as decimals
//! ```
//!
//! Cash-flow distributions are tagged tables: `{ kind = "deterministic",
//! value = 2000.0 }`, `{ kind = "gaussian", mean = 2000.0, sd = 200.0 }`
//! (or `cv = 0.1` instead of `sd`), `{ kind = "uniform", lo = 1800.0,
//! hi = 2200.0 }`. Loading normalizes `cv` to `sd = |mean| * cv`.
//!
//! Saving is canonical: keys in a fixed order (the order shown in this
//! module's raw types), numbers in shortest round-trip form, `sd` always in
//! place of `cv`, branches in label order. Saving what was loaded from a
//! canonical file reproduces it byte for byte.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::brcf::OneStageModel;
use crate::dist::CashFlowDist;
use crate::error::Error;
use crate::tree::{
    OptionTree, Scenario, StageBranch, TerminalBranch, TwoScenarioProject, ValidationReport,
};

pub const SCHEMA_VERSION: &str = "1";

/// Free-form description of a scenario document. `option_class` is a purely
/// descriptive tag (e.g. "reduction", "switching"); no vocabulary is
/// enforced.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option_class: Option<String>,
}

/// The model a scenario document carries.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioBody {
    TwoScenario(TwoScenarioProject),
    OptionTree(OptionTree),
    OneStage(OneStageModel),
}

impl ScenarioBody {
    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioBody::TwoScenario(_) => "two_scenario",
            ScenarioBody::OptionTree(_) => "option_tree",
            ScenarioBody::OneStage(_) => "brcf_one_stage",
        }
    }

    pub fn validate(&self) -> ValidationReport {
        match self {
            ScenarioBody::TwoScenario(p) => p.validate(),
            ScenarioBody::OptionTree(t) => t.validate(),
            ScenarioBody::OneStage(m) => m.validate(),
        }
    }
}

/// A fully validated scenario document.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDocument {
    pub metadata: Metadata,
    pub body: ScenarioBody,
}

// ---------------------------------------------------------------------------
// Raw (on-disk) representation
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    schema_version: String,
    kind: String,
    #[serde(default)]
    metadata: Metadata,
    body: toml::Value,
}

#[derive(Serialize)]
struct RawDocumentOut<'a, T: Serialize> {
    schema_version: &'a str,
    kind: &'a str,
    metadata: &'a Metadata,
    body: T,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawDist {
    Deterministic {
        value: f64,
    },
    Gaussian {
        mean: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sd: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cv: Option<f64>,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
}

impl RawDist {
    fn into_dist(self, path: &str, report: &mut ValidationReport) -> CashFlowDist {
        match self {
            RawDist::Deterministic { value } => CashFlowDist::deterministic(value),
            RawDist::Gaussian { mean, sd, cv } => match (sd, cv) {
                (Some(sd), None) => CashFlowDist::gaussian(mean, sd),
                (None, Some(cv)) => {
                    if !(cv >= 0.0) || !cv.is_finite() {
                        report.push(
                            format!("{path}.cv"),
                            format!("coefficient of variation must be >= 0 and finite, got {cv}"),
                        );
                        CashFlowDist::gaussian(mean, 0.0)
                    } else {
                        CashFlowDist::gaussian_cv(mean, cv)
                    }
                }
                (Some(_), Some(_)) => {
                    report.push(path.to_string(), "give sd or cv, not both".into());
                    CashFlowDist::gaussian(mean, 0.0)
                }
                (None, None) => {
                    report.push(path.to_string(), "gaussian needs sd or cv".into());
                    CashFlowDist::gaussian(mean, 0.0)
                }
            },
            RawDist::Uniform { lo, hi } => CashFlowDist::uniform(lo, hi),
        }
    }

    fn from_dist(dist: &CashFlowDist) -> RawDist {
        match *dist {
            CashFlowDist::Deterministic { value } => RawDist::Deterministic { value },
            CashFlowDist::Gaussian { mean, sd } => RawDist::Gaussian {
                mean,
                sd: Some(sd),
                cv: None,
            },
            CashFlowDist::Uniform { lo, hi } => RawDist::Uniform { lo, hi },
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    p: f64,
    flows: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTwoScenario {
    initial_investment: f64,
    rate: f64,
    scenarios: Vec<RawScenario>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStage1Branch {
    branch: u8,
    p: f64,
    delta: RawDist,
    flow: RawDist,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStage2Branch {
    branch: [u8; 2],
    p: f64,
    delta: RawDist,
    flow: RawDist,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStage3Branch {
    branch: [u8; 3],
    p: f64,
    flows: Vec<RawDist>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptionTree {
    initial_investment: f64,
    rate: f64,
    horizon: usize,
    stage1: Vec<RawStage1Branch>,
    stage2: Vec<RawStage2Branch>,
    stage3: Vec<RawStage3Branch>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOneStage {
    rate: f64,
    option_probability: f64,
    growth: f64,
    additional_investment: RawDist,
    base_flows: Vec<RawDist>,
}

// ---------------------------------------------------------------------------
// Raw -> core conversion
// ---------------------------------------------------------------------------

fn slot_index(report: &mut ValidationReport, path: &str, label: &[u8], taken: &mut [bool]) -> Option<usize> {
    // Labels are 1-based binary choices; flatten [i, j, ...] to a 0-based
    // slot index.
    let mut index = 0usize;
    for &choice in label {
        if choice != 1 && choice != 2 {
            report.push(
                path.to_string(),
                format!("branch labels must be 1 or 2, got {label:?}"),
            );
            return None;
        }
        index = index * 2 + (choice as usize - 1);
    }
    if taken[index] {
        report.push(path.to_string(), format!("duplicate branch {label:?}"));
        return None;
    }
    taken[index] = true;
    Some(index)
}

fn convert_tree(raw: RawOptionTree) -> Result<OptionTree, Error> {
    let mut report = ValidationReport::default();

    let zero_stage = || StageBranch::new(0.0, 0.0, 0.0);
    let mut stage1 = [zero_stage(), zero_stage()];
    let mut taken1 = [false; 2];
    if raw.stage1.len() != 2 {
        report.push("stage1".into(), format!("exactly 2 branches required, got {}", raw.stage1.len()));
    }
    for branch in raw.stage1 {
        let label = [branch.branch];
        if let Some(idx) = slot_index(&mut report, "stage1", &label, &mut taken1) {
            let path = format!("stage1[{}]", branch.branch);
            stage1[idx] = StageBranch::new(
                branch.p,
                branch.delta.into_dist(&format!("{path}.delta"), &mut report),
                branch.flow.into_dist(&format!("{path}.flow"), &mut report),
            );
        }
    }

    let mut stage2 = [[zero_stage(), zero_stage()], [zero_stage(), zero_stage()]];
    let mut taken2 = [false; 4];
    if raw.stage2.len() != 4 {
        report.push("stage2".into(), format!("exactly 4 branches required, got {}", raw.stage2.len()));
    }
    for branch in raw.stage2 {
        if let Some(idx) = slot_index(&mut report, "stage2", &branch.branch, &mut taken2) {
            let path = format!("stage2[{}][{}]", branch.branch[0], branch.branch[1]);
            stage2[idx / 2][idx % 2] = StageBranch::new(
                branch.p,
                branch.delta.into_dist(&format!("{path}.delta"), &mut report),
                branch.flow.into_dist(&format!("{path}.flow"), &mut report),
            );
        }
    }

    let zero_terminal = || TerminalBranch::new(0.0, Vec::new());
    let mut stage3: [[[TerminalBranch; 2]; 2]; 2] =
        std::array::from_fn(|_| std::array::from_fn(|_| std::array::from_fn(|_| zero_terminal())));
    let mut taken3 = [false; 8];
    if raw.stage3.len() != 8 {
        report.push("stage3".into(), format!("exactly 8 branches required, got {}", raw.stage3.len()));
    }
    for branch in raw.stage3 {
        if let Some(idx) = slot_index(&mut report, "stage3", &branch.branch, &mut taken3) {
            let path = format!(
                "stage3[{}][{}][{}]",
                branch.branch[0], branch.branch[1], branch.branch[2]
            );
            let flows = branch
                .flows
                .into_iter()
                .enumerate()
                .map(|(m, d)| d.into_dist(&format!("{path}.flows[{}]", m + 3), &mut report))
                .collect();
            stage3[idx / 4][(idx / 2) % 2][idx % 2] = TerminalBranch::new(branch.p, flows);
        }
    }

    for (taken, stage) in [(&taken1[..], "stage1"), (&taken2[..], "stage2"), (&taken3[..], "stage3")] {
        if taken.iter().any(|t| !t) {
            report.push(stage.into(), "missing branch labels".into());
        }
    }

    report.into_result()?;
    Ok(OptionTree {
        initial_investment: raw.initial_investment,
        rate: raw.rate,
        horizon: raw.horizon,
        stage1,
        stage2,
        stage3,
    })
}

fn convert_two_scenario(raw: RawTwoScenario) -> Result<TwoScenarioProject, Error> {
    if raw.scenarios.len() != 2 {
        let mut report = ValidationReport::default();
        report.push(
            "scenarios".into(),
            format!("exactly 2 scenarios required, got {}", raw.scenarios.len()),
        );
        return Err(Error::from_report(report));
    }
    let mut scenarios = raw.scenarios.into_iter();
    let first = scenarios.next().unwrap();
    let second = scenarios.next().unwrap();
    Ok(TwoScenarioProject {
        initial_investment: raw.initial_investment,
        rate: raw.rate,
        scenarios: [
            Scenario { p: first.p, flows: first.flows },
            Scenario { p: second.p, flows: second.flows },
        ],
    })
}

fn convert_one_stage(raw: RawOneStage) -> Result<OneStageModel, Error> {
    let mut report = ValidationReport::default();
    let additional_investment = raw
        .additional_investment
        .into_dist("additional_investment", &mut report);
    let base_flows = raw
        .base_flows
        .into_iter()
        .enumerate()
        .map(|(m, d)| d.into_dist(&format!("base_flows[{}]", m + 1), &mut report))
        .collect();
    report.into_result()?;
    Ok(OneStageModel {
        base_flows,
        rate: raw.rate,
        option_probability: raw.option_probability,
        additional_investment,
        growth: raw.growth,
    })
}

// ---------------------------------------------------------------------------
// Load / save
// ---------------------------------------------------------------------------

/// Parses and fully validates a scenario document. Parse errors carry the
/// TOML position; invariant violations come back as the validation report.
pub fn load_str(text: &str) -> Result<ScenarioDocument, Error> {
    let raw: RawDocument = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(Error::UnsupportedSchemaVersion {
            found: raw.schema_version,
            supported: SCHEMA_VERSION.to_string(),
        });
    }
    let body = match raw.kind.as_str() {
        "two_scenario" => {
            let body: RawTwoScenario = raw.body.try_into().map_err(|e| Error::Parse(format!("body: {e}")))?;
            ScenarioBody::TwoScenario(convert_two_scenario(body)?)
        }
        "option_tree" => {
            let body: RawOptionTree = raw.body.try_into().map_err(|e| Error::Parse(format!("body: {e}")))?;
            ScenarioBody::OptionTree(convert_tree(body)?)
        }
        "brcf_one_stage" => {
            let body: RawOneStage = raw.body.try_into().map_err(|e| Error::Parse(format!("body: {e}")))?;
            ScenarioBody::OneStage(convert_one_stage(body)?)
        }
        other => {
            return Err(Error::UnknownKind { found: other.to_string() });
        }
    };
    body.validate().into_result()?;
    Ok(ScenarioDocument { metadata: raw.metadata, body })
}

pub fn load_path(path: impl AsRef<Path>) -> Result<ScenarioDocument, Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_str(&text)
}

/// Serializes a valid document to its canonical form. Repeated saves of the
/// same document are byte-identical, and saving a loaded canonical file
/// reproduces the file.
pub fn save(doc: &ScenarioDocument) -> Result<String, Error> {
    doc.body.validate().into_result()?;
    let kind = doc.body.kind();
    let rendered = match &doc.body {
        ScenarioBody::TwoScenario(project) => toml::to_string(&RawDocumentOut {
            schema_version: SCHEMA_VERSION,
            kind,
            metadata: &doc.metadata,
            body: RawTwoScenario {
                initial_investment: project.initial_investment,
                rate: project.rate,
                scenarios: project
                    .scenarios
                    .iter()
                    .map(|s| RawScenario { p: s.p, flows: s.flows.clone() })
                    .collect(),
            },
        }),
        ScenarioBody::OptionTree(tree) => toml::to_string(&RawDocumentOut {
            schema_version: SCHEMA_VERSION,
            kind,
            metadata: &doc.metadata,
            body: RawOptionTree {
                initial_investment: tree.initial_investment,
                rate: tree.rate,
                horizon: tree.horizon,
                stage1: (0..2)
                    .map(|i| RawStage1Branch {
                        branch: i as u8 + 1,
                        p: tree.stage1[i].p,
                        delta: RawDist::from_dist(&tree.stage1[i].delta),
                        flow: RawDist::from_dist(&tree.stage1[i].flow),
                    })
                    .collect(),
                stage2: (0..4)
                    .map(|n| {
                        let (i, j) = (n / 2, n % 2);
                        RawStage2Branch {
                            branch: [i as u8 + 1, j as u8 + 1],
                            p: tree.stage2[i][j].p,
                            delta: RawDist::from_dist(&tree.stage2[i][j].delta),
                            flow: RawDist::from_dist(&tree.stage2[i][j].flow),
                        }
                    })
                    .collect(),
                stage3: (0..8)
                    .map(|n| {
                        let (i, j, l) = (n / 4, (n / 2) % 2, n % 2);
                        RawStage3Branch {
                            branch: [i as u8 + 1, j as u8 + 1, l as u8 + 1],
                            p: tree.stage3[i][j][l].p,
                            flows: tree.stage3[i][j][l]
                                .flows
                                .iter()
                                .map(RawDist::from_dist)
                                .collect(),
                        }
                    })
                    .collect(),
            },
        }),
        ScenarioBody::OneStage(model) => toml::to_string(&RawDocumentOut {
            schema_version: SCHEMA_VERSION,
            kind,
            metadata: &doc.metadata,
            body: RawOneStage {
                rate: model.rate,
                option_probability: model.option_probability,
                growth: model.growth,
                additional_investment: RawDist::from_dist(&model.additional_investment),
                base_flows: model.base_flows.iter().map(RawDist::from_dist).collect(),
            },
        }),
    };
    rendered.map_err(|e| Error::Parse(format!("serialize: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree_doc() -> ScenarioDocument {
        ScenarioDocument {
            metadata: Metadata {
                name: "switching".into(),
                description: Some("two-stage switch".into()),
                option_class: Some("switching".into()),
            },
            body: ScenarioBody::OptionTree(crate::dcf::tests::switching_tree()),
        }
    }

    #[test]
    fn round_trip_identity() {
        let doc = tree_doc();
        let text = save(&doc).unwrap();
        let loaded = load_str(&text).unwrap();
        assert_eq!(loaded, doc);
        // canonical form is a fixed point
        assert_eq!(save(&loaded).unwrap(), text);
    }

    #[test]
    fn save_is_deterministic() {
        let doc = tree_doc();
        assert_eq!(save(&doc).unwrap(), save(&doc).unwrap());
    }

    #[test]
    fn cv_normalizes_to_sd() {
        let text = r#"
schema_version = "1"
kind = "brcf_one_stage"

[metadata]
name = "normalized"

[body]
rate = 0.2
option_probability = 0.0
growth = 0.0
additional_investment = { kind = "deterministic", value = 0.0 }
base_flows = [{ kind = "gaussian", mean = 2000.0, cv = 0.1 }]
"#;
        let doc = load_str(text).unwrap();
        let ScenarioBody::OneStage(model) = &doc.body else {
            panic!("wrong kind")
        };
        assert_eq!(model.base_flows[0], CashFlowDist::gaussian(2000.0, 200.0));
        // canonical save emits sd, not cv
        let saved = save(&doc).unwrap();
        assert!(saved.contains("sd = 200.0"), "{saved}");
        assert!(!saved.contains("cv ="), "{saved}");
    }

    #[test]
    fn rejects_bad_probability_with_field_name() {
        let mut text = save(&tree_doc()).unwrap();
        text = text.replace("p = 0.5", "p = 1.3");
        let err = load_str(&text).unwrap_err();
        let message = err.to_string();
        assert!(matches!(err, Error::Invalid(_)));
        assert!(message.contains("stage1[1].p"), "{message}");
    }

    #[test]
    fn rejects_uniform_bounds_out_of_order() {
        let doc = ScenarioDocument {
            metadata: Metadata::default(),
            body: ScenarioBody::OneStage(OneStageModel {
                base_flows: vec![CashFlowDist::uniform(2200.0, 1800.0)],
                rate: 0.2,
                option_probability: 0.0,
                additional_investment: CashFlowDist::deterministic(0.0),
                growth: 0.0,
            }),
        };
        assert!(matches!(save(&doc), Err(Error::Invalid(_))));
    }

    #[test]
    fn rejects_unknown_version_and_kind() {
        let text = "schema_version = \"99\"\nkind = \"two_scenario\"\nbody = {}\n";
        assert!(matches!(
            load_str(text),
            Err(Error::UnsupportedSchemaVersion { .. })
        ));
        let text = "schema_version = \"1\"\nkind = \"mystery\"\nbody = {}\n";
        assert!(matches!(load_str(text), Err(Error::UnknownKind { .. })));
    }

    #[test]
    fn parse_error_carries_position() {
        let err = load_str("schema_version = ???").unwrap_err();
        let message = err.to_string();
        assert!(matches!(err, Error::Parse(_)));
        // toml reports line/column in its rendered error
        assert!(message.contains("line 1"), "{message}");
    }

    #[test]
    fn rejects_duplicate_and_missing_branches() {
        let good = save(&tree_doc()).unwrap();
        let text = good.replace("branch = [1, 1, 2]", "branch = [1, 1, 1]");
        let err = load_str(&text).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }
}
