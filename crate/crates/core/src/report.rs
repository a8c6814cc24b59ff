//! Per-target reduction reports in table, markdown and JSON form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::compass::{format_tenths, reduction_rate, run_compass, CompassError, CompassOptions};
use crate::graph::{DeclKind, DependencyGraph, EdgeKind};
use crate::ingest::{from_json_bytes, to_canonical_bytes, IngestError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TargetReport {
    pub target: String,
    pub review_cone_size: usize,
    pub kept_size: usize,
    pub reduction_rate: f64,
    /// `reduction_rate` at one decimal, half-up, e.g. `"93.8%"`.
    pub reduction_percent: String,
    pub pruned_edge_count: usize,
    /// Counts of edges whose source lies in the review cone.
    pub edge_kind_histogram: BTreeMap<EdgeKind, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GraphTotals {
    pub node_count: usize,
    pub edge_count: usize,
    pub nodes_by_kind: BTreeMap<DeclKind, usize>,
    pub edges_by_kind: BTreeMap<EdgeKind, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProjectReport {
    pub project: String,
    pub options: CompassOptions,
    pub targets: Vec<TargetReport>,
    /// Unweighted mean of the per-target rates; absent for an empty target list.
    pub mean_reduction: Option<f64>,
    pub mean_reduction_percent: Option<String>,
    pub totals: GraphTotals,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Table,
    Json,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "json" => Ok(ReportFormat::Json),
            "markdown" => Ok(ReportFormat::Markdown),
            other => Err(format!(
                "unknown report format `{other}` (expected table, json or markdown)"
            )),
        }
    }
}

fn zeroed<K: Ord + Copy>(keys: &[K]) -> BTreeMap<K, usize> {
    keys.iter().map(|&k| (k, 0)).collect()
}

/// Half-up to one decimal for a ratio that is not an exact count quotient.
pub fn format_ratio_percent(ratio: f64) -> String {
    format_tenths((ratio * 1000.0 + 0.5).floor() as i64)
}

pub fn graph_totals(graph: &DependencyGraph) -> GraphTotals {
    let mut nodes_by_kind = zeroed(&DeclKind::ALL);
    for d in graph.nodes() {
        *nodes_by_kind.entry(d.kind).or_default() += 1;
    }
    let mut edges_by_kind = zeroed(&EdgeKind::ALL);
    for e in graph.edge_refs() {
        *edges_by_kind.entry(e.kind()).or_default() += 1;
    }
    GraphTotals {
        node_count: graph.node_count(),
        edge_count: graph.edge_count(),
        nodes_by_kind,
        edges_by_kind,
    }
}

pub fn build_report<'a, I>(
    graph: &DependencyGraph,
    targets: I,
    options: CompassOptions,
) -> Result<ProjectReport, CompassError>
where
    I: IntoIterator<Item = &'a str>,
{
    let names: BTreeSet<&str> = targets.into_iter().collect();
    let unknown: Vec<String> = names
        .iter()
        .filter(|n| !graph.contains(n))
        .map(|n| n.to_string())
        .collect();
    if !unknown.is_empty() {
        return Err(CompassError::UnknownTargets(unknown));
    }

    let mut rows = Vec::with_capacity(names.len());
    for name in names {
        let result = run_compass(graph, [name], options)?;
        let cone = &result.review_cone[name];
        let kept = result.kept_nodes.len();
        let reduction = reduction_rate(cone.len(), kept)?;
        let mut histogram = zeroed(&EdgeKind::ALL);
        for e in graph.edge_refs().filter(|e| cone.contains(&e.source.name)) {
            *histogram.entry(e.kind()).or_default() += 1;
        }
        rows.push(TargetReport {
            target: name.to_string(),
            review_cone_size: cone.len(),
            kept_size: kept,
            reduction_rate: reduction.ratio(),
            reduction_percent: reduction.percent(),
            pruned_edge_count: result.pruned_edge_count,
            edge_kind_histogram: histogram,
        });
    }
    let mean = (!rows.is_empty())
        .then(|| rows.iter().map(|r| r.reduction_rate).sum::<f64>() / rows.len() as f64);
    Ok(ProjectReport {
        project: graph.project().name.clone(),
        options,
        targets: rows,
        mean_reduction: mean,
        mean_reduction_percent: mean.map(format_ratio_percent),
        totals: graph_totals(graph),
    })
}

const NEGATIVE_NOTE: &str =
    "* negative reduction: the kept set includes axioms outside the review cone";

const HEADERS: [&str; 4] = ["Target", "Review Cone", "After Compass", "Reduction"];

fn percent_cell(row: &TargetReport) -> String {
    if row.kept_size > row.review_cone_size {
        format!("{}*", row.reduction_percent)
    } else {
        row.reduction_percent.clone()
    }
}

impl ProjectReport {
    pub fn has_negative(&self) -> bool {
        self.targets
            .iter()
            .any(|r| r.kept_size > r.review_cone_size)
    }

    pub fn from_json(bytes: &[u8]) -> Result<ProjectReport, IngestError> {
        from_json_bytes(bytes)
    }

    pub fn render(&self, format: ReportFormat) -> Vec<u8> {
        match format {
            ReportFormat::Json => to_canonical_bytes(self),
            ReportFormat::Table => self.render_table().into_bytes(),
            ReportFormat::Markdown => self.render_markdown().into_bytes(),
        }
    }

    fn render_table(&self) -> String {
        let cells: Vec<[String; 4]> = self
            .targets
            .iter()
            .map(|r| {
                [
                    r.target.clone(),
                    r.review_cone_size.to_string(),
                    r.kept_size.to_string(),
                    percent_cell(r),
                ]
            })
            .collect();
        let mut widths = HEADERS.map(|h| h.chars().count());
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |row: [&str; 4]| {
            let mut s = format!("{:<w$}", row[0], w = widths[0]);
            for (i, c) in row.iter().enumerate().skip(1) {
                write!(s, "  {:>w$}", c, w = widths[i]).unwrap();
            }
            s.trim_end().to_string() + "\n"
        };
        let mut out = line(HEADERS);
        for row in &cells {
            out += &line([&row[0], &row[1], &row[2], &row[3]]);
        }
        if let Some(mean) = &self.mean_reduction_percent {
            writeln!(
                out,
                "\nMean reduction: {mean} over {} target(s)",
                self.targets.len()
            )
            .unwrap();
        }
        if self.has_negative() {
            writeln!(out, "{NEGATIVE_NOTE}").unwrap();
        }
        out
    }

    fn render_markdown(&self) -> String {
        let mut out = format!("| {} |\n|---|---:|---:|---:|\n", HEADERS.join(" | "));
        for r in &self.targets {
            writeln!(
                out,
                "| `{}` | {} | {} | {} |",
                r.target,
                r.review_cone_size,
                r.kept_size,
                percent_cell(r)
            )
            .unwrap();
        }
        if let Some(mean) = &self.mean_reduction_percent {
            writeln!(
                out,
                "\nMean reduction: {mean} over {} target(s)",
                self.targets.len()
            )
            .unwrap();
        }
        if self.has_negative() {
            writeln!(out, "\n{NEGATIVE_NOTE}").unwrap();
        }
        out
    }
}

pub fn render_report(report: &ProjectReport, format: ReportFormat) -> Vec<u8> {
    report.render(format)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Declaration, DepEdge, DepSite, ProjectInfo};
    use crate::ingest::synthetic::cone_fixture;

    fn text(report: &ProjectReport, format: ReportFormat) -> String {
        String::from_utf8(report.render(format)).unwrap()
    }

    #[test]
    fn isolated_theorem_row() {
        let g = DependencyGraph::from_parts(
            ProjectInfo::named("p"),
            vec![Declaration::new("T", DeclKind::Theorem)],
            vec![],
        )
        .unwrap();
        let r = build_report(&g, ["T"], CompassOptions::default()).unwrap();
        assert_eq!(r.targets.len(), 1);
        let row = &r.targets[0];
        assert_eq!((row.review_cone_size, row.kept_size), (1, 1));
        assert_eq!(row.reduction_percent, "0.0%");
        assert_eq!(
            text(&r, ReportFormat::Table),
            "Target  Review Cone  After Compass  Reduction\n\
             T                 1              1       0.0%\n\
             \n\
             Mean reduction: 0.0% over 1 target(s)\n"
        );
    }

    #[test]
    fn empty_targets_render_header_only() {
        let g = DependencyGraph::empty(ProjectInfo::named("p"));
        let r = build_report(&g, [], CompassOptions::default()).unwrap();
        assert_eq!(r.mean_reduction, None);
        assert_eq!(
            text(&r, ReportFormat::Table),
            "Target  Review Cone  After Compass  Reduction\n"
        );
        assert_eq!(
            text(&r, ReportFormat::Markdown),
            "| Target | Review Cone | After Compass | Reduction |\n|---|---:|---:|---:|\n"
        );
    }

    #[test]
    fn fixture_sizes_render_published_percentages() {
        for (cone, kept, shown) in [(1963, 5, "99.7%"), (227, 14, "93.8%"), (4, 2, "50.0%")] {
            let g = cone_fixture("M.main", cone, kept);
            let r = build_report(&g, ["M.main"], CompassOptions::default()).unwrap();
            let row = &r.targets[0];
            assert_eq!((row.review_cone_size, row.kept_size), (cone, kept));
            assert_eq!(row.reduction_percent, shown);
            assert_eq!(
                row.reduction_rate,
                reduction_rate(cone, kept).unwrap().ratio()
            );
            assert_eq!(row.pruned_edge_count, cone - kept);
            let hist_pruned: usize = row
                .edge_kind_histogram
                .iter()
                .filter(|(k, _)| k.pruned())
                .map(|(_, n)| n)
                .sum();
            assert_eq!(hist_pruned, row.pruned_edge_count);
        }
    }

    #[test]
    fn project_means_match_published_averages() {
        // (cone, kept) rows and the printed per-project mean.
        let projects: [(&[(usize, usize)], &str); 4] = [
            (
                &[
                    (1963, 5),
                    (1944, 10),
                    (1428, 53),
                    (1959, 5),
                    (885, 105),
                    (1028, 59),
                    (1193, 105),
                    (1628, 25),
                    (1783, 25),
                ],
                "96.2%",
            ),
            (&[(227, 14), (202, 2), (48, 3), (56, 2), (46, 5)], "94.4%"),
            (
                &[(27, 2), (4, 2), (17, 8), (23, 16), (25, 16), (31, 1)],
                "59.8%",
            ),
            (&[(25, 18), (33, 22), (45, 22), (9, 8), (23, 20)], "27.3%"),
        ];
        for (rows, mean) in projects {
            let rates: Vec<f64> = rows
                .iter()
                .map(|&(c, k)| reduction_rate(c, k).unwrap().ratio())
                .collect();
            let m = rates.iter().sum::<f64>() / rates.len() as f64;
            assert_eq!(format_ratio_percent(m), mean);
        }
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let g = DependencyGraph::from_parts(
            ProjectInfo::named("p"),
            vec![
                Declaration::new("T", DeclKind::Theorem),
                Declaration::new("U", DeclKind::Theorem),
                Declaration::new("D", DeclKind::Definition),
                Declaration::new("X", DeclKind::Axiom),
            ],
            vec![
                DepEdge::new("T", "D", DepSite::Value),
                DepEdge::new("U", "D", DepSite::Type),
                DepEdge::new("U", "T", DepSite::Value),
            ],
        )
        .unwrap();
        let r = build_report(&g, ["U", "T"], CompassOptions::default()).unwrap();
        assert_eq!(
            r.targets
                .iter()
                .map(|t| t.target.as_str())
                .collect::<Vec<_>>(),
            ["T", "U"]
        );
        for f in [
            ReportFormat::Table,
            ReportFormat::Json,
            ReportFormat::Markdown,
        ] {
            assert_eq!(r.render(f), r.render(f));
        }
        let back = ProjectReport::from_json(&r.render(ReportFormat::Json)).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.totals.nodes_by_kind[&DeclKind::Theorem], 2);
        assert_eq!(r.totals.edges_by_kind[&EdgeKind::ThmValueToThm], 1);
        assert_eq!(r.totals.edges_by_kind.len(), 8);
    }

    #[test]
    fn negative_reductions_are_marked() {
        // T alone in its cone, two unrelated axioms included verbatim.
        let g = DependencyGraph::from_parts(
            ProjectInfo::named("p"),
            vec![
                Declaration::new("T", DeclKind::Theorem),
                Declaration::new("X", DeclKind::Axiom),
                Declaration::new("Y", DeclKind::Axiom),
            ],
            vec![],
        )
        .unwrap();
        let r = build_report(&g, ["T"], CompassOptions::default()).unwrap();
        assert_eq!(r.targets[0].reduction_percent, "-200.0%");
        let table = text(&r, ReportFormat::Table);
        assert!(table.contains("-200.0%*"), "{table}");
        assert!(table.contains(NEGATIVE_NOTE));
        let md = text(&r, ReportFormat::Markdown);
        assert!(md.contains("| `T` | 1 | 3 | -200.0%* |"), "{md}");

        let clipped = build_report(&g, ["T"], CompassOptions::cone_axioms()).unwrap();
        assert_eq!(clipped.targets[0].reduction_percent, "0.0%");
    }

    #[test]
    fn unknown_target_is_reported() {
        let g = DependencyGraph::empty(ProjectInfo::named("p"));
        assert_eq!(
            build_report(&g, ["A"], CompassOptions::default()).unwrap_err(),
            CompassError::UnknownTargets(vec!["A".into()])
        );
    }
}
