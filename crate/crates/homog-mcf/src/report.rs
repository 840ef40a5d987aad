//! Deterministic experiment reports: `report.json`, `errors.csv` and the
//! log-log `rate_plot.svg`. Re-running the same configuration produces
//! byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use homog_mcf_core::experiments::{ConeExample, ExponentFit, RateRecord, RateReport};

use crate::{CliError, CliResult};

#[derive(Serialize, Clone, Debug)]
pub struct ScenarioInfo {
    pub name: String,
    pub dimension: usize,
    pub force: String,
    pub horizon: f64,
    pub window: Option<f64>,
    pub eps: Vec<f64>,
    /// Full resolved configuration, canonical text form.
    pub config: String,
}

#[derive(Serialize, Clone, Debug)]
struct RecordJson {
    eps: f64,
    error: f64,
    h: f64,
    times: Vec<f64>,
}

#[derive(Serialize, Clone, Debug)]
struct FitJson {
    exponent: f64,
    constant: f64,
    residuals: Vec<f64>,
}

#[derive(Serialize, Clone, Debug)]
struct MonitorsJson {
    degenerate: Option<String>,
    warnings: Vec<String>,
    sqrt_eps_ratio: Option<f64>,
    expander_constant: Option<f64>,
    self_similarity_residual: Option<f64>,
    per_eps_consistency: Option<Vec<f64>>,
}

#[derive(Serialize, Clone, Debug)]
struct ReportJson {
    version: String,
    kind: String,
    scenario: ScenarioInfo,
    records: Vec<RecordJson>,
    fit: Option<FitJson>,
    monitors: MonitorsJson,
}

/// Either experiment, normalized for emission.
pub enum ExperimentReport {
    Rate(RateReport),
    Cone(ConeExample),
}

impl ExperimentReport {
    fn kind(&self) -> &'static str {
        match self {
            ExperimentReport::Rate(_) => "rate",
            ExperimentReport::Cone(_) => "cone",
        }
    }

    fn records(&self) -> &[RateRecord] {
        match self {
            ExperimentReport::Rate(r) => &r.records,
            ExperimentReport::Cone(c) => &c.records,
        }
    }

    fn fit(&self) -> Option<&ExponentFit> {
        match self {
            ExperimentReport::Rate(r) => r.fit.as_ref(),
            ExperimentReport::Cone(c) => c.fit.as_ref(),
        }
    }
}

fn build_json(report: &ExperimentReport, scenario: &ScenarioInfo) -> ReportJson {
    let records = report
        .records()
        .iter()
        .map(|r| RecordJson { eps: r.eps, error: r.error, h: r.h, times: r.times.clone() })
        .collect();
    let fit = report.fit().map(|f| FitJson {
        exponent: f.exponent,
        constant: f.constant,
        residuals: f.residuals.clone(),
    });
    let monitors = match report {
        ExperimentReport::Rate(r) => MonitorsJson {
            degenerate: r.degenerate.clone(),
            warnings: r.warnings.clone(),
            sqrt_eps_ratio: r.sqrt_eps_ratio,
            expander_constant: None,
            self_similarity_residual: None,
            per_eps_consistency: None,
        },
        ExperimentReport::Cone(c) => MonitorsJson {
            degenerate: None,
            warnings: c.warnings.clone(),
            sqrt_eps_ratio: None,
            expander_constant: Some(c.expander_constant),
            self_similarity_residual: Some(c.self_similarity_residual),
            per_eps_consistency: Some(c.per_eps_consistency.clone()),
        },
    };
    ReportJson {
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: report.kind().to_string(),
        scenario: scenario.clone(),
        records,
        fit,
        monitors,
    }
}

/// `eps,error,h` rows in sweep order.
pub fn errors_csv(records: &[RateRecord]) -> String {
    let mut out = String::from("eps,error,h\n");
    for r in records {
        let _ = writeln!(out, "{:?},{:?},{:?}", r.eps, r.error, r.h);
    }
    out
}

/// Log-log scatter of the records with the fitted line; the slope is embedded
/// as machine-readable metadata and as a `data-slope` attribute.
pub fn rate_plot_svg(records: &[RateRecord], fit: Option<&ExponentFit>) -> String {
    let (w, h) = (640.0, 480.0);
    let (x0, x1, y0, y1) = (70.0, 610.0, 420.0, 40.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    match fit {
        Some(f) => {
            let _ = writeln!(
                out,
                "  <metadata id=\"fit\">exponent={:.6} constant={:.6}</metadata>",
                f.exponent, f.constant
            );
        }
        None => {
            let _ = writeln!(out, "  <metadata id=\"fit\">degenerate</metadata>");
        }
    }
    let _ = writeln!(out, "  <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        out,
        "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        out,
        "  <text x=\"{:.1}\" y=\"460\" font-size=\"14\">log10 eps</text>",
        (x0 + x1) / 2.0 - 30.0
    );
    let _ = writeln!(
        out,
        "  <text x=\"16\" y=\"{:.1}\" font-size=\"14\" transform=\"rotate(-90 16 {:.1})\">log10 error</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    let usable: Vec<&RateRecord> = records.iter().filter(|r| r.eps > 0.0 && r.error > 0.0).collect();
    if usable.len() >= 2 {
        let lx: Vec<f64> = usable.iter().map(|r| r.eps.log10()).collect();
        let ly: Vec<f64> = usable.iter().map(|r| r.error.log10()).collect();
        let (lx_min, lx_max) = (
            lx.iter().cloned().fold(f64::INFINITY, f64::min),
            lx.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        let (ly_min, ly_max) = (
            ly.iter().cloned().fold(f64::INFINITY, f64::min),
            ly.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        let pad = 0.1;
        let sx = |v: f64| x0 + (v - lx_min + pad) / (lx_max - lx_min + 2.0 * pad) * (x1 - x0);
        let sy = |v: f64| y0 + (v - ly_min + pad) / (ly_max - ly_min + 2.0 * pad) * (y1 - y0);
        if let Some(f) = fit {
            // Line through the fitted power law at the plot edges.
            let c10 = f.constant.log10();
            let ya = c10 + f.exponent * (lx_min - pad);
            let yb = c10 + f.exponent * (lx_max + pad);
            let _ = writeln!(
                out,
                "  <line data-slope=\"{:.6}\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"steelblue\" stroke-width=\"1.5\"/>",
                f.exponent,
                sx(lx_min - pad),
                sy(ya),
                sx(lx_max + pad),
                sy(yb)
            );
        }
        for (x, y) in lx.iter().zip(&ly) {
            let _ = writeln!(
                out,
                "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"crimson\"/>",
                sx(*x),
                sy(*y)
            );
        }
    }
    let _ = writeln!(out, "</svg>");
    out
}

/// Writes `report.json`, `errors.csv` and `rate_plot.svg` into `dir`.
pub fn emit_report(
    report: &ExperimentReport,
    scenario: &ScenarioInfo,
    dir: &Path,
) -> CliResult<()> {
    if report.records().is_empty() {
        return Err(CliError::Validation(
            "degenerate report: no records to emit".to_string(),
        ));
    }
    std::fs::create_dir_all(dir)?;
    let json = build_json(report, scenario);
    let mut bytes = serde_json::to_vec_pretty(&json)
        .map_err(|e| CliError::Io(format!("serializing report: {e}")))?;
    bytes.push(b'\n');
    std::fs::write(dir.join("report.json"), bytes)?;
    std::fs::write(dir.join("errors.csv"), errors_csv(report.records()))?;
    std::fs::write(dir.join("rate_plot.svg"), rate_plot_svg(report.records(), report.fit()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use homog_mcf_core::experiments::assemble_rate_report;

    fn sample_records() -> Vec<RateRecord> {
        vec![
            RateRecord { eps: 0.25, error: 0.5, h: 0.015625, times: vec![1.0] },
            RateRecord { eps: 0.0625, error: 0.25, h: 0.00390625, times: vec![1.0] },
            RateRecord { eps: 0.015625, error: 0.125, h: 0.0009765625, times: vec![1.0] },
        ]
    }

    #[test]
    fn emit_refuses_empty_reports() {
        let report = ExperimentReport::Rate(assemble_rate_report(Vec::new(), Vec::new(), 1.0));
        let scenario = ScenarioInfo {
            name: "empty".into(),
            dimension: 1,
            force: "zero".into(),
            horizon: 1.0,
            window: None,
            eps: vec![],
            config: String::new(),
        };
        let dir = std::env::temp_dir().join("homog-mcf-test-empty");
        let err = emit_report(&report, &scenario, &dir).unwrap_err();
        assert!(err.to_string().contains("degenerate report"));
    }

    #[test]
    fn svg_embeds_the_fitted_slope() {
        let report = assemble_rate_report(sample_records(), Vec::new(), 1.0);
        let svg = rate_plot_svg(&report.records, report.fit.as_ref());
        assert!(svg.contains("data-slope=\"0.500000\""), "{svg}");
        assert!(svg.contains("exponent=0.500000"));
        let lines = svg.matches("data-slope").count();
        assert_eq!(lines, 1, "exactly one fitted line");
    }

    #[test]
    fn emission_is_deterministic() {
        let scenario = ScenarioInfo {
            name: "det".into(),
            dimension: 1,
            force: "zero".into(),
            horizon: 1.0,
            window: Some(1.0),
            eps: vec![0.25, 0.0625, 0.015625],
            config: "[scenario]\nname = det\n".into(),
        };
        let dir_a = std::env::temp_dir().join("homog-mcf-test-det-a");
        let dir_b = std::env::temp_dir().join("homog-mcf-test-det-b");
        for dir in [&dir_a, &dir_b] {
            let report = ExperimentReport::Rate(assemble_rate_report(sample_records(), Vec::new(), 1.0));
            emit_report(&report, &scenario, dir).unwrap();
        }
        for file in ["report.json", "errors.csv", "rate_plot.svg"] {
            let a = std::fs::read(dir_a.join(file)).unwrap();
            let b = std::fs::read(dir_b.join(file)).unwrap();
            assert_eq!(a, b, "{file} differs between identical runs");
        }
    }

    #[test]
    fn json_shape_is_stable() {
        let report = ExperimentReport::Rate(assemble_rate_report(sample_records(), Vec::new(), 1.0));
        let scenario = ScenarioInfo {
            name: "shape".into(),
            dimension: 1,
            force: "zero".into(),
            horizon: 1.0,
            window: Some(1.0),
            eps: vec![0.25],
            config: String::new(),
        };
        let json = serde_json::to_value(build_json(&report, &scenario)).unwrap();
        for key in ["version", "kind", "scenario", "records", "fit", "monitors"] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
        assert_eq!(json["kind"], "rate");
        assert_eq!(json["records"][0]["eps"], 0.25);
        assert!(json["fit"]["exponent"].as_f64().unwrap() - 0.5 < 1e-9);
    }
}
