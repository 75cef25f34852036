//! Ranked report serialization and heatmap grids.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::PairView;
use crate::detector::{DisaggregationResult, ScanReport};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

const COLUMNS: [&str; 9] = [
    "rank",
    "pseudo_r2",
    "covariate",
    "conditioned_on",
    "aggregate_sign",
    "aggregate_p",
    "disagg_p",
    "n_bins",
    "simpson_flag",
];

/// `%g`-style formatting with `sig` significant digits.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= sig as i32 {
        let mantissa = trim_zeros(mantissa);
        format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn row_cells(rank: usize, r: &DisaggregationResult) -> [String; 9] {
    [
        rank.to_string(),
        format!("{:.4}", r.pseudo_r2),
        r.x_j.clone(),
        r.x_c.clone(),
        r.aggregate_sign.symbol().to_string(),
        format_sig(r.aggregate_p, 6),
        format_sig(r.disagg_p_adjusted.unwrap_or(r.disagg_p), 6),
        r.partition.n_bins().to_string(),
        r.simpson_flag.to_string(),
    ]
}

fn summary_line(report: &ScanReport) -> String {
    format!(
        "{} pairs examined, {} skipped, {} tested, {} significant, {} shown",
        report.pairs_examined,
        report.pairs_skipped,
        report.pairs_tested,
        report.pairs_significant,
        report.results.len()
    )
}

/// Serialize the report. Identical reports give identical bytes.
pub fn emit_report(report: &ScanReport, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(COLUMNS)?;
            for (i, r) in report.results.iter().enumerate() {
                w.write_record(row_cells(i + 1, r))?;
            }
            Ok(w.into_inner().map_err(|e| e.into_error())?)
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let _ = writeln!(out, "| {} |", COLUMNS.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(COLUMNS.len()));
            for (i, r) in report.results.iter().enumerate() {
                let _ = writeln!(out, "| {} |", row_cells(i + 1, r).join(" | "));
            }
            let _ = writeln!(out);
            let _ = writeln!(out, "{}", summary_line(report));
            Ok(out.into_bytes())
        }
    }
}

/// Outcome rate per (x_c bin, x_j display bin) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub x_j: String,
    pub x_c: String,
    /// `(lower, upper)` of each partition bin (rows).
    pub row_edges: Vec<(f64, f64)>,
    /// Quantile edges of the x_j display bins; `columns + 1` values.
    pub col_edges: Vec<f64>,
    /// `None` marks an empty cell.
    pub means: Vec<Vec<Option<f64>>>,
    pub counts: Vec<Vec<usize>>,
}

impl HeatmapGrid {
    pub fn n_cols(&self) -> usize {
        self.col_edges.len().saturating_sub(1).max(1)
    }

    pub fn total_count(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn col_of(&self, x: f64) -> usize {
        // column k covers (e_k, e_{k+1}]; the first also takes e_0
        let inner = &self.col_edges[1..self.col_edges.len().saturating_sub(1).max(1)];
        inner.partition_point(|&e| e < x).min(self.n_cols() - 1)
    }

    /// Means block, blank line, counts block.
    pub fn grid_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.n_cols()).map(|c| format!("col_{c}")).collect();
        let _ = writeln!(out, "# mean outcome,{}", header.join(","));
        for (r, row) in self.means.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .map(|m| m.map_or_else(String::new, |v| format_sig(v, 6)))
                .collect();
            let _ = writeln!(out, "row_{r},{}", cells.join(","));
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "# count,{}", header.join(","));
        for (r, row) in self.counts.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "row_{r},{}", cells.join(","));
        }
        out
    }

    pub fn edges_csv(&self) -> String {
        let mut out = String::from("axis,index,lower,upper\n");
        for (i, (lo, hi)) in self.row_edges.iter().enumerate() {
            let _ = writeln!(out, "{},{i},{},{}", self.x_c, format_sig(*lo, 6), format_sig(*hi, 6));
        }
        for i in 0..self.n_cols() {
            let hi = self.col_edges.get(i + 1).copied().unwrap_or(self.col_edges[i]);
            let _ = writeln!(
                out,
                "{},{i},{},{}",
                self.x_j,
                format_sig(self.col_edges[i], 6),
                format_sig(hi, 6)
            );
        }
        out
    }

    /// Write `<stem>.csv` and `<stem>_edges.csv` into `dir`.
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let grid = dir.join(format!("{stem}.csv"));
        let edges = dir.join(format!("{stem}_edges.csv"));
        std::fs::write(&grid, self.grid_csv())?;
        std::fs::write(&edges, self.edges_csv())?;
        Ok((grid, edges))
    }
}

/// Quantile edges over the sorted values, duplicates removed.
fn quantile_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n == 0 {
        return vec![0.0, 0.0];
    }
    let bins = bins.max(1);
    let mut edges: Vec<f64> = (0..=bins)
        .map(|k| sorted[((k * (n - 1)) as f64 / bins as f64).round() as usize])
        .collect();
    edges.dedup();
    if edges.len() == 1 {
        edges.push(edges[0]);
    }
    edges
}

/// Build the heatmap grid of one result: partition bins of `x_c` as rows,
/// quantile bins of `x_j` as columns.
pub fn emit_heatmap(result: &DisaggregationResult, view: &PairView, grid_bins: usize) -> HeatmapGrid {
    let col_edges = quantile_edges(&view.x_j, grid_bins);
    let bins = &result.partition.bins;
    let mut grid = HeatmapGrid {
        x_j: result.x_j.clone(),
        x_c: result.x_c.clone(),
        row_edges: bins.iter().map(|b| (b.lower, b.upper)).collect(),
        col_edges,
        means: Vec::new(),
        counts: Vec::new(),
    };
    let cols = grid.n_cols();
    let mut sums = vec![vec![0.0; cols]; bins.len()];
    let mut counts = vec![vec![0usize; cols]; bins.len()];
    for (r, bin) in bins.iter().enumerate() {
        for &i in &bin.members {
            let c = grid.col_of(view.x_j[i]);
            sums[r][c] += view.y[i];
            counts[r][c] += 1;
        }
    }
    grid.means = sums
        .iter()
        .zip(&counts)
        .map(|(s, n)| {
            s.iter()
                .zip(n)
                .map(|(&s, &n)| (n > 0).then(|| s / n as f64))
                .collect()
        })
        .collect();
    grid.counts = counts;
    grid
}

/// File stem for the heatmap of the result at `rank` (1-based).
pub fn heatmap_stem(rank: usize, result: &DisaggregationResult) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect()
    };
    format!("heatmap_{rank:03}_{}__{}", clean(&result.x_j), clean(&result.x_c))
}
