//! CSV and SVG report emission.
//!
//! Numbers serialize through Rust's shortest round-trip float formatting, so
//! identical results produce byte-identical files.

use crate::backtest::BacktestResult;
use crate::metrics::PerformanceSummary;
use crate::portfolio::InvestorPreferences;
use crate::sweep::{pareto_filter, FrontierPoint, MeanFrontier, StrategyFamily, TaskFailure};
use std::fmt::Write as _;
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

/// Writes sweep points as
/// `family,variant,gamma_risk,gamma_trade,seed,excess_risk,excess_return,sharpe`.
pub fn write_points_csv<W: Write>(writer: W, points: &[FrontierPoint]) -> Result<(), ReportError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "family",
        "variant",
        "gamma_risk",
        "gamma_trade",
        "seed",
        "excess_risk",
        "excess_return",
        "sharpe",
    ])?;
    for p in points {
        out.write_record([
            p.family.name().to_string(),
            p.family.variant_name().to_string(),
            p.prefs.gamma_risk.to_string(),
            p.prefs.gamma_trade.to_string(),
            p.seed.to_string(),
            p.excess_risk.to_string(),
            p.excess_return.to_string(),
            p.sharpe.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads back a points CSV written by [`write_points_csv`].
pub fn read_points_csv<R: Read>(reader: R) -> Result<Vec<FrontierPoint>, ReportError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut points = Vec::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let malformed = |msg: String| ReportError::Malformed { line, msg };
        if record.len() != 8 {
            return Err(malformed(format!("expected 8 fields, got {}", record.len())));
        }
        let id = if record[1].is_empty() {
            record[0].to_string()
        } else {
            format!("{}-{}", &record[0], &record[1])
        };
        let family = StrategyFamily::parse(&id, 2)
            .ok_or_else(|| malformed(format!("unknown family {id:?}")))?;
        let number = |field: usize, name: &str| -> Result<f64, ReportError> {
            record[field]
                .parse::<f64>()
                .map_err(|_| malformed(format!("bad {name} {:?}", &record[field])))
        };
        let gamma_risk = number(2, "gamma_risk")?;
        let gamma_trade = number(3, "gamma_trade")?;
        let seed = record[4]
            .parse::<u64>()
            .map_err(|_| malformed(format!("bad seed {:?}", &record[4])))?;
        let excess_risk = number(5, "excess_risk")?;
        let excess_return = number(6, "excess_return")?;
        if !excess_risk.is_finite() || !excess_return.is_finite() {
            return Err(malformed("non-finite point".into()));
        }
        let sharpe = if record[7].is_empty() { None } else { Some(number(7, "sharpe")?) };
        points.push(FrontierPoint {
            family,
            prefs: InvestorPreferences { gamma_risk, gamma_trade },
            seed,
            excess_risk,
            excess_return,
            sharpe,
        });
    }
    Ok(points)
}

/// Writes a mean frontier as `family,grid_risk,mean_return,ci_low,ci_high`.
pub fn write_mean_frontier_csv<W: Write>(
    writer: W,
    family_id: &str,
    mean: &MeanFrontier,
) -> Result<(), ReportError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["family", "grid_risk", "mean_return", "ci_low", "ci_high"])?;
    for i in 0..mean.grid.len() {
        out.write_record([
            family_id.to_string(),
            mean.grid[i].to_string(),
            mean.mean[i].to_string(),
            mean.ci_low[i].to_string(),
            mean.ci_high[i].to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a backtest as `date,asset,weight,trade,cost,return`; cost and
/// return are the day's portfolio-level values repeated on each asset row,
/// and the cash slot appears as asset `CASH`.
pub fn write_backtest_csv<W: Write>(
    writer: W,
    assets: &[String],
    result: &BacktestResult,
) -> Result<(), ReportError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["date", "asset", "weight", "trade", "cost", "return"])?;
    let n_total = assets.len() + 1;
    for (i, date) in result.dates.iter().enumerate() {
        for slot in 0..n_total {
            let name = if slot == n_total - 1 { "CASH" } else { assets[slot].as_str() };
            out.write_record([
                date.format("%Y-%m-%d").to_string(),
                name.to_string(),
                result.weights[i][slot].to_string(),
                result.trades[i][slot].to_string(),
                result.costs[i].to_string(),
                result.returns[i].to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes the one-line performance summary.
pub fn write_summary_csv<W: Write>(
    writer: W,
    label: &str,
    summary: &PerformanceSummary,
) -> Result<(), ReportError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "strategy",
        "mean_return",
        "volatility",
        "excess_return",
        "excess_risk",
        "sharpe",
    ])?;
    out.write_record([
        label.to_string(),
        summary.mean_return.to_string(),
        summary.volatility.to_string(),
        summary.excess_return.to_string(),
        summary.excess_risk.to_string(),
        summary.sharpe.map(|s| s.to_string()).unwrap_or_default(),
    ])?;
    out.flush()?;
    Ok(())
}

/// Writes failed sweep tasks as `family,gamma_risk,gamma_trade,seed,error`.
pub fn write_failures_csv<W: Write>(
    writer: W,
    failures: &[TaskFailure],
) -> Result<(), ReportError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["family", "gamma_risk", "gamma_trade", "seed", "error"])?;
    for f in failures {
        out.write_record([
            f.family.clone(),
            f.gamma_risk.to_string(),
            f.gamma_trade.to_string(),
            f.seed.to_string(),
            f.message.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

const SVG_WIDTH: f64 = 800.0;
const SVG_HEIGHT: f64 = 560.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// Renders a risk-return scatter with one Pareto line per family. Output is
/// deterministic for identical input.
pub fn render_frontier_svg(families: &[(String, Vec<FrontierPoint>)]) -> String {
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for (_, points) in families {
        for p in points {
            min_x = min_x.min(p.excess_risk);
            max_x = max_x.max(p.excess_risk);
            min_y = min_y.min(p.excess_return);
            max_y = max_y.max(p.excess_return);
        }
    }
    if !min_x.is_finite() {
        min_x = 0.0;
        max_x = 1.0;
        min_y = 0.0;
        max_y = 1.0;
    }
    let pad_x = ((max_x - min_x) * 0.05).max(1e-9);
    let pad_y = ((max_y - min_y) * 0.05).max(1e-9);
    min_x -= pad_x;
    max_x += pad_x;
    min_y -= pad_y;
    max_y += pad_y;
    let to_px = |risk: f64, ret: f64| -> (f64, f64) {
        let x = MARGIN + (risk - min_x) / (max_x - min_x) * (SVG_WIDTH - 2.0 * MARGIN);
        let y = SVG_HEIGHT - MARGIN - (ret - min_y) / (max_y - min_y) * (SVG_HEIGHT - 2.0 * MARGIN);
        (x, y)
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\">"
    );
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        b = SVG_HEIGHT - MARGIN,
        r = SVG_WIDTH - MARGIN
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        t = MARGIN,
        b = SVG_HEIGHT - MARGIN
    );
    let _ = writeln!(
        svg,
        "<text x=\"{x}\" y=\"{y}\" font-size=\"13\" text-anchor=\"middle\">excess risk</text>",
        x = SVG_WIDTH / 2.0,
        y = SVG_HEIGHT - MARGIN / 3.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"{x}\" y=\"{y}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 {x} {y})\">excess return</text>",
        x = MARGIN / 3.0,
        y = SVG_HEIGHT / 2.0
    );
    for (frac, value, vertical) in [
        (0.0, min_x + pad_x, true),
        (1.0, max_x - pad_x, true),
        (0.0, min_y + pad_y, false),
        (1.0, max_y - pad_y, false),
    ] {
        if vertical {
            let x = MARGIN + frac * (SVG_WIDTH - 2.0 * MARGIN);
            let _ = writeln!(
                svg,
                "<text x=\"{x}\" y=\"{y}\" font-size=\"11\" text-anchor=\"middle\">{value:.4}</text>",
                y = SVG_HEIGHT - MARGIN + 16.0
            );
        } else {
            let y = SVG_HEIGHT - MARGIN - frac * (SVG_HEIGHT - 2.0 * MARGIN);
            let _ = writeln!(
                svg,
                "<text x=\"{x}\" y=\"{y}\" font-size=\"11\" text-anchor=\"end\">{value:.4}</text>",
                x = MARGIN - 6.0
            );
        }
    }

    for (idx, (name, points)) in families.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        for p in points {
            let (x, y) = to_px(p.excess_risk, p.excess_return);
            let _ = writeln!(
                svg,
                "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.5\" fill=\"{color}\" fill-opacity=\"0.45\"/>"
            );
        }
        if let Ok(frontier) = pareto_filter(points) {
            let mut path = String::new();
            for (i, p) in frontier.points().iter().enumerate() {
                let (x, y) = to_px(p.excess_risk, p.excess_return);
                let _ = write!(path, "{}{x:.2},{y:.2} ", if i == 0 { "" } else { " " });
            }
            let _ = writeln!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
                path.trim_end()
            );
        }
        let legend_y = MARGIN + 18.0 * idx as f64;
        let _ = writeln!(
            svg,
            "<rect x=\"{x}\" y=\"{y}\" width=\"12\" height=\"12\" fill=\"{color}\"/>",
            x = SVG_WIDTH - MARGIN - 150.0,
            y = legend_y
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{y}\" font-size=\"12\">{name}</text>",
            x = SVG_WIDTH - MARGIN - 132.0,
            y = legend_y + 10.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}
