//! Analytic engine for the binomial-random-cash-flow model with Gaussian
//! flows.
//!
//! Because present value is linear in the cash flows, Gaussian flows give a
//! Gaussian project value whose moments follow in closed form; the
//! (1 - alpha) lower confidence boundary PV_alpha and the project value at
//! risk PVaR = z_alpha * sd drop out directly. Anything non-Gaussian goes
//! through [`crate::sim`] instead.
//!
//! Flows are independent across periods by assumption; the data model has no
//! correlation field, so the variance sums carry no cross terms. Gaussian
//! flows can sample negative even when the mean is positive; the analytic
//! model embraces that, since truncation would break the moment algebra.

use serde::{Deserialize, Serialize};

use crate::dist::CashFlowDist;
use crate::error::Error;
use crate::normal;
use crate::tree::ValidationReport;

/// One-stage option model on a scenario of random cash flows: with
/// probability `option_probability`, an additional investment at t = 1
/// (entered as a positive magnitude, applied as an outflow) lifts every flow
/// from period 2 on by the factor (1 + growth).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneStageModel {
    /// Cash flows for periods k = 1..=n, $K.
    pub base_flows: Vec<CashFlowDist>,
    /// Per-period discount rate as a decimal, > -1.
    pub rate: f64,
    /// Probability the option is exercised, in [0, 1].
    pub option_probability: f64,
    /// Additional investment triggered by the option, $K (positive
    /// magnitude).
    pub additional_investment: CashFlowDist,
    /// Growth rate applied to flows k >= 2 under the option, > -1.
    pub growth: f64,
}

impl OneStageModel {
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.base_flows.is_empty() {
            report.push("base_flows".into(), "at least one cash flow is required".into());
        }
        for (k, flow) in self.base_flows.iter().enumerate() {
            flow.check(&format!("base_flows[{}]", k + 1), &mut report);
        }
        if !(self.rate > -1.0) || !self.rate.is_finite() {
            report.push("rate".into(), format!("rate must be > -1, got {}", self.rate));
        }
        if !(0.0..=1.0).contains(&self.option_probability) || !self.option_probability.is_finite() {
            report.push(
                "option_probability".into(),
                format!("probability must be in [0, 1], got {}", self.option_probability),
            );
        }
        self.additional_investment.check("additional_investment", &mut report);
        if !(self.growth > -1.0) || !self.growth.is_finite() {
            report.push("growth".into(), format!("growth must be > -1, got {}", self.growth));
        }
        report
    }

    pub(crate) fn ensure_valid(&self) -> Result<(), Error> {
        self.validate().into_result()
    }
}

/// Which z multiplier [`pv_alpha`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuantileMode {
    /// Full-precision inverse normal CDF (the default).
    Exact,
    /// z rounded to two decimals, the convention of worked textbook tables
    /// (1.64 at alpha = 0.05).
    TwoDigit,
}

impl QuantileMode {
    pub fn z(self, alpha: f64) -> f64 {
        let z = normal::upper_quantile(alpha);
        match self {
            QuantileMode::Exact => z,
            QuantileMode::TwoDigit => (z * 100.0).round() / 100.0,
        }
    }
}

/// Project-value risk summary for a Gaussian project value.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    /// Expected project value m_PV, $K.
    pub mean: f64,
    /// Standard deviation of project value, $K.
    pub sd: f64,
    /// One-sided confidence level in (0, 0.5].
    pub alpha: f64,
    /// Quantile multiplier actually used.
    pub z: f64,
    /// Project value at risk: z * sd (the maximum expected loss of project
    /// value at confidence alpha).
    pub pvar: f64,
    /// Lower confidence boundary: mean - pvar. Feasibility requires
    /// pv_alpha >= the initial investment.
    pub pv_alpha: f64,
    pub quantile_mode: QuantileMode,
    /// Verdict against an initial investment, when one was supplied.
    pub feasible: Option<bool>,
}

impl RiskReport {
    /// Attaches a feasibility verdict against the investment `i0`.
    pub fn against_investment(mut self, i0: f64) -> Self {
        self.feasible = Some(feasibility(self.pv_alpha, i0));
        self
    }
}

fn gaussian_only(dist: &CashFlowDist, path: &str) -> Result<(), Error> {
    if dist.is_gaussian_compatible() {
        Ok(())
    } else {
        Err(Error::NonGaussian { path: path.to_string() })
    }
}

/// Moments of the discounted value of independent Gaussian flows paid at
/// k = 1..=n: mean = sum m_k/(1+r)^k, variance = sum var_k/(1+r)^(2k).
/// Returns (mean, sd).
pub fn pv_moments(flows: &[CashFlowDist], rate: f64) -> Result<(f64, f64), Error> {
    if !(rate > -1.0) || !rate.is_finite() {
        return Err(Error::RateOutOfDomain(rate));
    }
    let base = 1.0 + rate;
    let mut mean = 0.0;
    let mut variance = 0.0;
    for (m, flow) in flows.iter().enumerate() {
        let k = m as i32 + 1;
        gaussian_only(flow, &format!("flows[{k}]"))?;
        mean += flow.mean() / base.powi(k);
        variance += flow.variance() / base.powi(2 * k);
    }
    Ok((mean, variance.sqrt()))
}

/// Moments of the one-stage option model's project value. With p the option
/// probability, g the growth rate and I1 the additional investment:
///
/// mean = (p*(-m_I1) + m_1)/(1+r) + sum_{k>=2} m_k*(1+p*g)/(1+r)^k
/// var  = (p^2*Var(I1) + var_1)/(1+r)^2
///        + sum_{k>=2} var_k*(1+p*g)^2/(1+r)^(2k)
///
/// With p = 0, or g = 0 and I1 identically zero, this reduces exactly to
/// [`pv_moments`] of the base flows. Returns (mean, sd).
pub fn option_moments(model: &OneStageModel) -> Result<(f64, f64), Error> {
    model.ensure_valid()?;
    for (m, flow) in model.base_flows.iter().enumerate() {
        gaussian_only(flow, &format!("base_flows[{}]", m + 1))?;
    }
    gaussian_only(&model.additional_investment, "additional_investment")?;

    let base = 1.0 + model.rate;
    let p = model.option_probability;
    let lift = 1.0 + p * model.growth;

    let mut mean = (p * (-model.additional_investment.mean()) + model.base_flows[0].mean())
        / base.powi(1);
    let mut variance = (p * p * model.additional_investment.variance()
        + model.base_flows[0].variance())
        / base.powi(2);
    for (m, flow) in model.base_flows.iter().enumerate().skip(1) {
        let k = m as i32 + 1;
        mean += flow.mean() * lift / base.powi(k);
        variance += flow.variance() * (lift * lift) / base.powi(2 * k);
    }
    Ok((mean, variance.sqrt()))
}

/// Builds the risk report for a Gaussian project value with the given
/// moments: z from the quantile mode, pvar = z * sd, pv_alpha = mean - pvar.
pub fn pv_alpha(mean: f64, sd: f64, alpha: f64, mode: QuantileMode) -> Result<RiskReport, Error> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if !(sd >= 0.0) || !sd.is_finite() || !mean.is_finite() {
        let mut report = ValidationReport::default();
        report.push("sd".into(), format!("moments must be finite with sd >= 0, got mean {mean}, sd {sd}"));
        return Err(Error::from_report(report));
    }
    let z = mode.z(alpha);
    let pvar = z * sd;
    Ok(RiskReport {
        mean,
        sd,
        alpha,
        z,
        pvar,
        pv_alpha: mean - pvar,
        quantile_mode: mode,
        feasible: None,
    })
}

/// Feasibility criterion: the lower confidence boundary must cover the
/// initial investment. A tie counts as feasible.
pub fn feasibility(pv_alpha: f64, initial_investment: f64) -> bool {
    pv_alpha >= initial_investment
}

/// Real option value as the improvement of the lower confidence boundary:
/// pv_alpha with the option minus pv_alpha without. Both reports must use
/// the same alpha and quantile mode.
pub fn brcf_option_value(with: &RiskReport, without: &RiskReport) -> Result<f64, Error> {
    if with.alpha != without.alpha {
        return Err(Error::IncomparableReports(format!(
            "alpha {} vs {}",
            with.alpha, without.alpha
        )));
    }
    if with.quantile_mode != without.quantile_mode {
        return Err(Error::IncomparableReports(
            "quantile modes differ".to_string(),
        ));
    }
    Ok(with.pv_alpha - without.pv_alpha)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!((got - want).abs() <= tol, "got {got}, want {want} +- {tol}");
    }

    /// Means 2000..2300 with coefficients of variation 0.10..0.16, r = 20%.
    pub(crate) fn gaussian_base_flows() -> Vec<CashFlowDist> {
        vec![
            CashFlowDist::gaussian_cv(2000.0, 0.10),
            CashFlowDist::gaussian_cv(2100.0, 0.12),
            CashFlowDist::gaussian_cv(2200.0, 0.14),
            CashFlowDist::gaussian_cv(2300.0, 0.16),
        ]
    }

    pub(crate) fn gaussian_option_model() -> OneStageModel {
        OneStageModel {
            base_flows: gaussian_base_flows(),
            rate: 0.20,
            option_probability: 0.5,
            additional_investment: CashFlowDist::gaussian(500.0, 50.0),
            growth: 0.20,
        }
    }

    #[test]
    fn base_moments_published_example() {
        let (mean, sd) = pv_moments(&gaussian_base_flows(), 0.20).unwrap();
        assert_close(mean, 5507.0, 1.0);
        assert_close(sd, 348.0, 1.0);
    }

    #[test]
    fn moments_degenerate_cases() {
        let flows = vec![
            CashFlowDist::gaussian(2000.0, 0.0),
            CashFlowDist::deterministic(2400.0),
        ];
        let (mean, sd) = pv_moments(&flows, 0.20).unwrap();
        assert_eq!(sd, 0.0);
        let pv = crate::dcf::present_value(&[2000.0, 2400.0], 0.20).unwrap();
        assert_close(mean, pv, 1e-9);

        let (mean, sd) = pv_moments(&[CashFlowDist::gaussian(1200.0, 120.0)], 0.20).unwrap();
        assert_close(mean, 1000.0, 1e-9);
        assert_close(sd, 100.0, 1e-9);
    }

    #[test]
    fn moments_reject_uniform() {
        let err = pv_moments(&[CashFlowDist::uniform(1.0, 2.0)], 0.2).unwrap_err();
        assert!(matches!(err, Error::NonGaussian { .. }));
        let mut model = gaussian_option_model();
        model.base_flows[2] = CashFlowDist::uniform(1800.0, 2200.0);
        assert!(matches!(option_moments(&model), Err(Error::NonGaussian { .. })));
    }

    #[test]
    fn option_moments_published_example() {
        let (mean, sd) = option_moments(&gaussian_option_model()).unwrap();
        assert_close(mean, 5683.0, 1.0);
        assert_close(sd, 376.59, 0.5);
    }

    #[test]
    fn option_reduces_to_base_exactly() {
        let mut model = gaussian_option_model();
        model.option_probability = 0.0;
        let base = pv_moments(&model.base_flows, model.rate).unwrap();
        assert_eq!(option_moments(&model).unwrap(), base);

        let mut model = gaussian_option_model();
        model.growth = 0.0;
        model.additional_investment = CashFlowDist::gaussian(0.0, 0.0);
        assert_eq!(option_moments(&model).unwrap(), base);
    }

    #[test]
    fn pv_alpha_published_examples() {
        let report = pv_alpha(5507.0, 348.0, 0.05, QuantileMode::TwoDigit).unwrap();
        assert_eq!(report.z, 1.64);
        assert_close(report.pv_alpha, 4936.0, 1.0);

        let report = pv_alpha(5683.06, 376.59, 0.05, QuantileMode::TwoDigit).unwrap();
        assert_close(report.pv_alpha, 5065.46, 0.01);

        // zero variance pins the boundary at the mean, any alpha
        for alpha in [0.01, 0.025, 0.05, 0.5] {
            let report = pv_alpha(5000.0, 0.0, alpha, QuantileMode::Exact).unwrap();
            assert_eq!(report.pv_alpha, 5000.0);
            assert_eq!(report.pvar, 0.0);
        }
    }

    #[test]
    fn pv_alpha_identities_exact() {
        let report = pv_alpha(5507.33, 348.81, 0.05, QuantileMode::Exact).unwrap();
        assert_eq!(report.pv_alpha, report.mean - report.pvar);
        assert_eq!(report.pvar, report.z * report.sd);
        assert!(report.pvar >= 0.0);
    }

    #[test]
    fn quantile_modes() {
        assert_eq!(QuantileMode::TwoDigit.z(0.05), 1.64);
        let z = QuantileMode::Exact.z(0.05);
        assert_close(z, 1.6449, 1e-4);
        assert_eq!(QuantileMode::TwoDigit.z(0.025), 1.96);
        assert_eq!(QuantileMode::TwoDigit.z(0.01), 2.33);
    }

    #[test]
    fn pv_alpha_rejects_out_of_domain() {
        assert!(matches!(
            pv_alpha(1.0, 1.0, 0.7, QuantileMode::Exact),
            Err(Error::AlphaOutOfRange(_))
        ));
        assert!(matches!(
            pv_alpha(1.0, 1.0, 0.0, QuantileMode::Exact),
            Err(Error::AlphaOutOfRange(_))
        ));
        assert!(matches!(
            pv_alpha(1.0, -1.0, 0.05, QuantileMode::Exact),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn feasibility_boundary() {
        assert!(!feasibility(4936.0, 5000.0));
        assert!(feasibility(5065.0, 5000.0));
        // A tie is feasible by convention.
        assert!(feasibility(5000.0, 5000.0));
    }

    #[test]
    fn option_value_is_boundary_difference() {
        let with = pv_alpha(5683.0, 0.0, 0.05, QuantileMode::TwoDigit)
            .unwrap()
            .against_investment(5000.0);
        assert_eq!(with.feasible, Some(true));

        let a = RiskReport { pv_alpha: 5065.0, ..with.clone() };
        let b = RiskReport { pv_alpha: 4935.0, ..with.clone() };
        assert_close(brcf_option_value(&a, &b).unwrap(), 130.0, 1e-12);
        assert_eq!(brcf_option_value(&a, &a).unwrap(), 0.0);

        let c = RiskReport { pv_alpha: 5323.0, ..with.clone() };
        let d = RiskReport { pv_alpha: 5171.0, ..with.clone() };
        assert_close(brcf_option_value(&c, &d).unwrap(), 152.0, 1e-12);

        let mismatched = RiskReport { alpha: 0.01, ..b.clone() };
        assert!(brcf_option_value(&a, &mismatched).is_err());
        let mismatched = RiskReport { quantile_mode: QuantileMode::Exact, ..b };
        assert!(brcf_option_value(&a, &mismatched).is_err());
    }

    #[test]
    fn monotone_in_moments() {
        let base = pv_alpha(5000.0, 300.0, 0.05, QuantileMode::Exact).unwrap();
        let wider = pv_alpha(5000.0, 400.0, 0.05, QuantileMode::Exact).unwrap();
        let richer = pv_alpha(5100.0, 300.0, 0.05, QuantileMode::Exact).unwrap();
        assert!(wider.pv_alpha < base.pv_alpha);
        assert!(richer.pv_alpha > base.pv_alpha);
    }
}
