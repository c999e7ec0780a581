//! `realopt` — value real-options scenarios from the command line.
//!
//! Three subcommands over scenario files: `value` (deterministic DCF and
//! tree rollback), `risk` (analytic Gaussian PVaR report), and `simulate`
//! (seeded Monte Carlo). Exit codes: 0 success, 2 input/load error, 3
//! math/domain error, 4 usage/mode error.

mod render;

use std::path::{Path, PathBuf};

use clap::{error::ErrorKind, Parser, Subcommand, ValueEnum};
use realopt::scenario::{self, ScenarioDocument};
use realopt::{
    brcf, dcf, sim, Error, QuantileMode, ScenarioBody, SimMode, SimModel, SimulationSpec,
    ValueMode,
};
use render::Report;

const EXIT_INPUT: i32 = 2;
const EXIT_MATH: i32 = 3;
const EXIT_USAGE: i32 = 4;

#[derive(Parser)]
#[command(
    name = "realopt",
    version,
    about = "Real-options project valuation: decision trees, Gaussian PVaR analytics, Monte Carlo"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Value a deterministic scenario (two-scenario project or option tree)
    Value {
        /// Scenario file (kind two_scenario or option_tree)
        scenario: PathBuf,
        /// Scenario whose NPV serves as the baseline for the option value
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Discount rate override, applied to the scenario and the baseline
        #[arg(long, value_name = "RATE", allow_negative_numbers = true)]
        rate_override: Option<f64>,
        #[arg(long, value_enum, default_value_t = FormatArg::Table)]
        format: FormatArg,
        /// Project random cash flows onto their means instead of rejecting them
        #[arg(long)]
        means: bool,
    },
    /// Analytic risk report for Gaussian cash flows (mean, sd, PVaR, PV_alpha)
    Risk {
        /// Scenario file (kind brcf_one_stage with Gaussian flows)
        scenario: PathBuf,
        /// Second scenario for a side-by-side comparison
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// One-sided confidence level in (0, 0.5]
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// z multiplier: full-precision inverse CDF, or the two-digit table value
        #[arg(long, value_enum, default_value_t = QuantileArg::Exact)]
        quantile: QuantileArg,
        /// Initial investment for the feasibility verdict
        #[arg(long, value_name = "I0", allow_negative_numbers = true)]
        investment: Option<f64>,
    },
    /// Seeded Monte Carlo estimate for arbitrary cash-flow distributions
    Simulate {
        /// Scenario file (kind brcf_one_stage or option_tree)
        scenario: PathBuf,
        /// Second scenario simulated with the same settings for comparison
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Number of replications
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// All randomness derives from this seed; reruns are byte-identical
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-replication functional; defaults to expectation_form for
        /// brcf_one_stage scenarios and branch_sampling for option trees
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// One-sided confidence level in (0, 0.5]
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Write the scenario's histogram as CSV (bucket_lo,bucket_width,count)
        #[arg(long, value_name = "FILE")]
        hist: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantileArg {
    Exact,
    Paper,
}

impl QuantileArg {
    fn mode(self) -> QuantileMode {
        match self {
            QuantileArg::Exact => QuantileMode::Exact,
            QuantileArg::Paper => QuantileMode::TwoDigit,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "expectation_form", alias = "expectation")]
    Expectation,
    #[value(name = "branch_sampling", alias = "branch")]
    Branch,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

/// Engine errors mapped onto the documented exit codes.
fn engine_failure(error: Error) -> Failure {
    match &error {
        Error::RateOutOfDomain(_) => Failure::new(EXIT_MATH, error.to_string()),
        Error::UnresolvedRandom { .. } => Failure::new(
            EXIT_USAGE,
            format!("{error}; pass --means or use `realopt simulate`"),
        ),
        Error::AlphaOutOfRange(_)
        | Error::NoSamples(_)
        | Error::UnsupportedSimulationMode
        | Error::IncomparableReports(_)
        | Error::NonGaussian { .. }
        | Error::KindMismatch(_) => Failure::new(EXIT_USAGE, error.to_string()),
        _ => Failure::new(EXIT_INPUT, error.to_string()),
    }
}

fn load(path: &Path) -> Result<ScenarioDocument, Failure> {
    scenario::load_path(path)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn display_name(doc: &ScenarioDocument, path: &Path) -> String {
    if doc.metadata.name.is_empty() {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string())
    } else {
        doc.metadata.name.clone()
    }
}

fn override_rate(doc: &mut ScenarioDocument, rate: Option<f64>) -> Result<(), Failure> {
    let Some(rate) = rate else { return Ok(()) };
    if !(rate > -1.0) || !rate.is_finite() {
        return Err(engine_failure(Error::RateOutOfDomain(rate)));
    }
    match &mut doc.body {
        ScenarioBody::TwoScenario(p) => p.rate = rate,
        ScenarioBody::OptionTree(t) => t.rate = rate,
        ScenarioBody::OneStage(m) => m.rate = rate,
    }
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(failure) = run(cli) {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code);
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Value { scenario, baseline, rate_override, format, means } => {
            cmd_value(&scenario, baseline.as_deref(), rate_override, format, means)
        }
        Command::Risk { scenario, baseline, alpha, quantile, investment } => {
            cmd_risk(&scenario, baseline.as_deref(), alpha, quantile.mode(), investment)
        }
        Command::Simulate { scenario, baseline, samples, seed, mode, alpha, hist } => {
            cmd_simulate(&scenario, baseline.as_deref(), samples, seed, mode, alpha, hist.as_deref())
        }
    }
}

// ---------------------------------------------------------------------------
// value
// ---------------------------------------------------------------------------

/// NPV of a deterministic scenario, used both for the main report and the
/// --baseline comparison.
fn scenario_npv(doc: &ScenarioDocument, mode: ValueMode) -> Result<f64, Failure> {
    match &doc.body {
        ScenarioBody::TwoScenario(project) => {
            Ok(dcf::two_scenario_value(project).map_err(engine_failure)?.npv)
        }
        ScenarioBody::OptionTree(tree) => {
            Ok(dcf::rollback(tree, mode).map_err(engine_failure)?.npv)
        }
        ScenarioBody::OneStage(_) => Err(Failure::new(
            EXIT_USAGE,
            "brcf_one_stage scenarios carry random flows; use `realopt risk` or `realopt simulate`",
        )),
    }
}

fn cmd_value(
    scenario_path: &Path,
    baseline_path: Option<&Path>,
    rate_override: Option<f64>,
    format: FormatArg,
    means: bool,
) -> Result<(), Failure> {
    let mut doc = load(scenario_path)?;
    override_rate(&mut doc, rate_override)?;
    let mode = if means { ValueMode::Means } else { ValueMode::Strict };

    let mut report = Report::new(vec![display_name(&doc, scenario_path)]);
    let npv = match &doc.body {
        ScenarioBody::TwoScenario(project) => {
            let value = dcf::two_scenario_value(project).map_err(engine_failure)?;
            report.money_row("V0", &[value.v0]);
            report.money_row("NPV", &[value.npv]);
            for i in 0..2 {
                report.money_row(&format!("PV({})", i + 1), &[value.scenario_pv[i]]);
            }
            for i in 0..2 {
                report.money_row(&format!("V1({})", i + 1), &[value.scenario_value_t1[i]]);
            }
            value.npv
        }
        ScenarioBody::OptionTree(tree) => {
            let result = dcf::rollback(tree, mode).map_err(engine_failure)?;
            render::valuation_rows(&mut report, &result);
            result.npv
        }
        ScenarioBody::OneStage(_) => {
            return Err(Failure::new(
                EXIT_USAGE,
                "brcf_one_stage scenarios carry random flows; use `realopt risk` or `realopt simulate`",
            ));
        }
    };

    if let Some(path) = baseline_path {
        let mut base_doc = load(path)?;
        override_rate(&mut base_doc, rate_override)?;
        let base_npv = scenario_npv(&base_doc, mode)?;
        report.money_row("NPV(baseline)", &[base_npv]);
        report.money_row("option value", &[dcf::option_value(npv, base_npv)]);
    }

    print!(
        "{}",
        match format {
            FormatArg::Table => report.to_table(),
            FormatArg::Csv => report.to_csv(),
        }
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// risk
// ---------------------------------------------------------------------------

fn risk_report(
    doc: &ScenarioDocument,
    alpha: f64,
    mode: QuantileMode,
    investment: Option<f64>,
) -> Result<brcf::RiskReport, Failure> {
    let ScenarioBody::OneStage(model) = &doc.body else {
        return Err(Failure::new(
            EXIT_USAGE,
            format!(
                "kind {} has no analytic risk report; `realopt risk` needs a brcf_one_stage \
                 scenario with Gaussian flows (use `realopt simulate` otherwise)",
                doc.body.kind()
            ),
        ));
    };
    let (mean, sd) = brcf::option_moments(model).map_err(engine_failure)?;
    let mut report = brcf::pv_alpha(mean, sd, alpha, mode).map_err(engine_failure)?;
    if let Some(i0) = investment {
        report = report.against_investment(i0);
    }
    Ok(report)
}

fn cmd_risk(
    scenario_path: &Path,
    baseline_path: Option<&Path>,
    alpha: f64,
    mode: QuantileMode,
    investment: Option<f64>,
) -> Result<(), Failure> {
    let doc = load(scenario_path)?;
    let subject = risk_report(&doc, alpha, mode, investment)?;

    let mut headers = vec![display_name(&doc, scenario_path)];
    let mut reports = vec![&subject];

    let baseline = match baseline_path {
        Some(path) => {
            let base_doc = load(path)?;
            headers.push(display_name(&base_doc, path));
            Some(risk_report(&base_doc, alpha, mode, investment)?)
        }
        None => None,
    };
    if let Some(b) = &baseline {
        reports.push(b);
    }

    let mut report = Report::new(headers);
    render::risk_rows(&mut report, &reports);
    if let Some(b) = &baseline {
        let value = brcf::brcf_option_value(&subject, b).map_err(engine_failure)?;
        report.money_row("option value", &[value]);
    }
    print!("{}", report.to_table());
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn simulation_spec(
    doc: &ScenarioDocument,
    samples: u64,
    seed: u64,
    mode: Option<ModeArg>,
    alpha: f64,
) -> Result<SimulationSpec, Failure> {
    let (model, default_mode) = match &doc.body {
        ScenarioBody::OneStage(model) => {
            (SimModel::OneStage(model.clone()), SimMode::ExpectationForm)
        }
        ScenarioBody::OptionTree(tree) => (SimModel::Tree(tree.clone()), SimMode::BranchSampling),
        ScenarioBody::TwoScenario(_) => {
            return Err(Failure::new(
                EXIT_USAGE,
                "two_scenario scenarios are deterministic; use `realopt value`",
            ));
        }
    };
    let mode = match mode {
        Some(ModeArg::Expectation) => SimMode::ExpectationForm,
        Some(ModeArg::Branch) => SimMode::BranchSampling,
        None => default_mode,
    };
    Ok(SimulationSpec { model, samples, seed, mode, alpha })
}

/// Optional worker-count cap from REALOPT_THREADS. The cap never changes
/// results, only how many threads compute them.
fn thread_pool() -> Result<Option<rayon::ThreadPool>, Failure> {
    let raw = match std::env::var("REALOPT_THREADS") {
        Ok(raw) => raw,
        Err(std::env::VarError::NotPresent) => return Ok(None),
        Err(e) => return Err(Failure::new(EXIT_USAGE, format!("REALOPT_THREADS: {e}"))),
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| {
            Failure::new(
                EXIT_USAGE,
                format!("REALOPT_THREADS must be a positive integer, got {raw:?}"),
            )
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map(Some)
        .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))
}

fn cmd_simulate(
    scenario_path: &Path,
    baseline_path: Option<&Path>,
    samples: u64,
    seed: u64,
    mode: Option<ModeArg>,
    alpha: f64,
    hist: Option<&Path>,
) -> Result<(), Failure> {
    let doc = load(scenario_path)?;
    let spec = simulation_spec(&doc, samples, seed, mode, alpha)?;

    let base = match baseline_path {
        Some(path) => {
            let base_doc = load(path)?;
            let base_spec = simulation_spec(&base_doc, samples, seed, mode, alpha)?;
            Some((display_name(&base_doc, path), base_spec))
        }
        None => None,
    };

    let pool = thread_pool()?;
    let run = |spec: &SimulationSpec| match &pool {
        Some(pool) => pool.install(|| sim::simulate(spec)),
        None => sim::simulate(spec),
    };

    let subject = run(&spec).map_err(engine_failure)?;
    let baseline = match &base {
        Some((name, base_spec)) => Some((name.clone(), run(base_spec).map_err(engine_failure)?)),
        None => None,
    };

    if let Some(path) = hist {
        std::fs::write(path, subject.histogram_csv())
            .map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    }

    let mut headers = vec![display_name(&doc, scenario_path)];
    let mut results = vec![&subject];
    if let Some((name, result)) = &baseline {
        headers.push(name.clone());
        results.push(result);
    }

    let mut report = Report::new(headers);
    report.text_row(
        "mode",
        &results.iter().map(|r| r.mode.label().to_string()).collect::<Vec<_>>(),
    );
    report.text_row(
        "samples",
        &results.iter().map(|r| r.samples.to_string()).collect::<Vec<_>>(),
    );
    report.text_row(
        "seed",
        &results.iter().map(|r| r.seed.to_string()).collect::<Vec<_>>(),
    );
    render::simulation_rows(&mut report, &results);
    if let Some((_, base_result)) = &baseline {
        let comparison = sim::compare(&subject, base_result).map_err(engine_failure)?;
        report.money_row("option value", &[comparison.option_value]);
    }
    print!("{}", report.to_table());
    Ok(())
}
