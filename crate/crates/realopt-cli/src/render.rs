//! Text rendering: currency formatting, aligned tables, CSV rows.

use realopt::{RiskReport, SimulationResult, ValuationResult};

/// `$5,168K` style: thousands separators, no decimals. Negative amounts keep
/// the sign outside the dollar sign: `-$45K`.
pub fn money(amount: f64) -> String {
    let rounded = amount.abs().round() as i64;
    let digits = rounded.to_string();
    let mut grouped = String::new();
    for (n, ch) in digits.chars().enumerate() {
        if n > 0 && (digits.len() - n) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(ch);
    }
    let sign = if amount.round() < 0.0 { "-" } else { "" };
    format!("{sign}${grouped}K")
}

/// Shortest round-trip decimal form, used everywhere full precision is
/// wanted (CSV, machine consumers).
pub fn full(x: f64) -> String {
    format!("{x}")
}

pub enum Cell {
    Money(f64),
    Text(String),
}

impl Cell {
    fn table(&self) -> String {
        match self {
            Cell::Money(x) => money(*x),
            Cell::Text(s) => s.clone(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Money(x) => full(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// A metric table: one row per metric, one or two value columns. Table mode
/// rounds currency; CSV mode carries full precision of the same numbers.
pub struct Report {
    headers: Vec<String>,
    rows: Vec<(String, Vec<Cell>)>,
}

impl Report {
    pub fn new(headers: Vec<String>) -> Self {
        Report { headers, rows: Vec::new() }
    }

    pub fn money_row(&mut self, metric: &str, values: &[f64]) {
        self.rows
            .push((metric.to_string(), values.iter().map(|&v| Cell::Money(v)).collect()));
    }

    pub fn text_row(&mut self, metric: &str, values: &[String]) {
        self.rows
            .push((metric.to_string(), values.iter().cloned().map(Cell::Text).collect()));
    }

    pub fn to_table(&self) -> String {
        let metric_width = self
            .rows
            .iter()
            .map(|(m, _)| m.len())
            .chain(std::iter::once("metric".len()))
            .max()
            .unwrap_or(0);
        let columns = self.headers.len().max(1);
        let mut widths = vec![0usize; columns];
        for (c, header) in self.headers.iter().enumerate() {
            widths[c] = header.len();
        }
        for (_, cells) in &self.rows {
            for (c, cell) in cells.iter().enumerate() {
                widths[c] = widths[c].max(cell.table().len());
            }
        }

        let mut out = String::new();
        if !self.headers.is_empty() {
            out.push_str(&format!("{:<metric_width$}", "metric"));
            for (c, header) in self.headers.iter().enumerate() {
                out.push_str(&format!("  {:>width$}", header, width = widths[c]));
            }
            out.push('\n');
        }
        for (metric, cells) in &self.rows {
            out.push_str(&format!("{metric:<metric_width$}"));
            for (c, cell) in cells.iter().enumerate() {
                out.push_str(&format!("  {:>width$}", cell.table(), width = widths[c]));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric");
        for header in &self.headers {
            out.push(',');
            out.push_str(header);
        }
        out.push('\n');
        for (metric, cells) in &self.rows {
            out.push_str(metric);
            for cell in cells {
                out.push(',');
                out.push_str(&cell.csv());
            }
            out.push('\n');
        }
        out
    }
}

/// Rows for a tree valuation: V0, NPV, then every node value.
pub fn valuation_rows(report: &mut Report, result: &ValuationResult) {
    report.money_row("V0", &[result.v0]);
    report.money_row("NPV", &[result.npv]);
    for i in 0..2 {
        report.money_row(&format!("V1({})", i + 1), &[result.v1[i]]);
    }
    for i in 0..2 {
        for j in 0..2 {
            report.money_row(&format!("V2({},{})", i + 1, j + 1), &[result.v2[i][j]]);
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            for l in 0..2 {
                report.money_row(
                    &format!("V3({},{},{})", i + 1, j + 1, l + 1),
                    &[result.v3[i][j][l]],
                );
            }
        }
    }
}

pub fn risk_rows(report: &mut Report, reports: &[&RiskReport]) {
    let col = |f: fn(&RiskReport) -> f64| -> Vec<f64> { reports.iter().map(|r| f(r)).collect() };
    report.money_row("PV mean", &col(|r| r.mean));
    report.money_row("PV sd", &col(|r| r.sd));
    report.money_row("PVaR", &col(|r| r.pvar));
    let alpha = reports[0].alpha;
    report.money_row(&format!("PV({alpha})"), &col(|r| r.pv_alpha));
    report.text_row(
        "z",
        &reports.iter().map(|r| full(r.z)).collect::<Vec<_>>(),
    );
    if reports.iter().any(|r| r.feasible.is_some()) {
        report.text_row(
            "feasible",
            &reports
                .iter()
                .map(|r| match r.feasible {
                    Some(true) => "yes".to_string(),
                    Some(false) => "no".to_string(),
                    None => "-".to_string(),
                })
                .collect::<Vec<_>>(),
        );
    }
}

pub fn simulation_rows(report: &mut Report, results: &[&SimulationResult]) {
    let col = |f: fn(&SimulationResult) -> f64| -> Vec<f64> { results.iter().map(|r| f(r)).collect() };
    report.money_row("PV mean", &col(|r| r.sample_mean));
    report.money_row("PV sd", &col(|r| r.sample_sd));
    report.money_row("PVaR", &col(|r| r.pvar));
    let alpha = results[0].alpha;
    report.money_row(&format!("PV({alpha})"), &col(|r| r.pv_alpha));
}
