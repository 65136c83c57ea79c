//! Exponent-pair sweeps: the ratio and its checks across a list of domains,
//! with per-pair extremes summarized.

use std::fmt::Write as _;

use crate::eigensolver::SolverOptions;
use crate::geometry::{rasterize, Grid2D, ShapeSpec};
use crate::ratio::{lambda_root, verify_inequalities, RatioReport};
use crate::{Error, Result};

/// One `(domain, p, q)` measurement. A solver failure is recorded in
/// `error` rather than aborting the sweep; the numeric fields are NaN then.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub domain: String,
    pub p: f64,
    pub q: f64,
    /// lambda_p^{1/p}, units 1/length.
    pub lambda_root_p: f64,
    /// lambda_q^{1/q}, units 1/length.
    pub lambda_root_q: f64,
    /// Dimensionless ratio of the two roots.
    pub f: f64,
    /// Whether every applicable bound held for this row.
    pub checks_passed: bool,
    pub error: Option<String>,
}

/// Extremes of the ratio over the swept domains for one exponent pair.
#[derive(Debug, Clone)]
pub struct PairSummary {
    pub p: f64,
    pub q: f64,
    pub min_f: f64,
    pub min_domain: String,
    pub max_f: f64,
    pub max_domain: String,
    /// Regime annotation: for q <= 2 the supremum over open sets is
    /// unbounded, so the max here is a sample, not an estimate of it.
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    /// Rows sorted by (domain, p, q).
    pub rows: Vec<SweepRow>,
    /// One summary per (p, q), in sorted order.
    pub summaries: Vec<PairSummary>,
}

/// Sweep every `(p, q)` pair over every named domain on a shared grid.
///
/// The whole cross product is validated up front: any pair with `q > p` or
/// `q < 1` rejects the sweep before any solve starts.
pub fn run_sweep(
    domains: &[(String, ShapeSpec)],
    p_list: &[f64],
    q_list: &[f64],
    grid: &Grid2D,
    opts: &SolverOptions,
) -> Result<SweepReport> {
    if domains.is_empty() || p_list.is_empty() || q_list.is_empty() {
        return Err(Error::InvalidInput(
            "sweep needs at least one domain, one p, and one q".into(),
        ));
    }
    for &q in q_list {
        if !(q >= 1.0) {
            return Err(Error::InvalidInput(format!("exponent q must be at least 1, got {q}")));
        }
        for &p in p_list {
            if !(q <= p) {
                return Err(Error::Regime { p, q });
            }
        }
    }

    let mut exponents: Vec<f64> = p_list.iter().chain(q_list).copied().collect();
    exponents.sort_by(f64::total_cmp);
    exponents.dedup();

    let grid_desc = format!("{}x{} h={}", grid.nx(), grid.ny(), grid.h());
    let mut rows = Vec::new();
    for (name, shape) in domains {
        let mask = rasterize(shape, grid)?;
        let roots: Vec<(f64, std::result::Result<f64, String>)> = exponents
            .iter()
            .map(|&e| (e, lambda_root(&mask, grid, e, opts).map_err(|err| err.to_string())))
            .collect();
        let root = |e: f64| {
            roots
                .iter()
                .find(|(exponent, _)| *exponent == e)
                .map(|(_, r)| r.clone())
                .expect("every swept exponent was solved")
        };
        for &p in p_list {
            for &q in q_list {
                let row = match (root(p), root(q)) {
                    (Ok(rp), Ok(rq)) => {
                        let report = RatioReport {
                            p,
                            q,
                            lambda_root_p: rp,
                            lambda_root_q: rq,
                            f: rp / rq,
                            domain: name.clone(),
                            grid: grid_desc.clone(),
                        };
                        let checks = verify_inequalities(&report, false, 2);
                        SweepRow {
                            domain: name.clone(),
                            p,
                            q,
                            lambda_root_p: rp,
                            lambda_root_q: rq,
                            f: report.f,
                            checks_passed: checks.all_pass(),
                            error: None,
                        }
                    }
                    (Err(e), _) | (_, Err(e)) => SweepRow {
                        domain: name.clone(),
                        p,
                        q,
                        lambda_root_p: f64::NAN,
                        lambda_root_q: f64::NAN,
                        f: f64::NAN,
                        checks_passed: false,
                        error: Some(e),
                    },
                };
                rows.push(row);
            }
        }
    }
    rows.sort_by(|a, b| {
        a.domain
            .cmp(&b.domain)
            .then(a.p.total_cmp(&b.p))
            .then(a.q.total_cmp(&b.q))
    });

    let mut pairs: Vec<(f64, f64)> = p_list
        .iter()
        .flat_map(|&p| q_list.iter().map(move |&q| (p, q)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs.dedup();
    let summaries = pairs
        .into_iter()
        .map(|(p, q)| summarize_pair(&rows, p, q))
        .collect();

    Ok(SweepReport { rows, summaries })
}

fn summarize_pair(rows: &[SweepRow], p: f64, q: f64) -> PairSummary {
    let mut min_f = f64::NAN;
    let mut max_f = f64::NAN;
    let mut min_domain = "-".to_string();
    let mut max_domain = "-".to_string();
    for row in rows {
        if row.p != p || row.q != q || row.error.is_some() {
            continue;
        }
        if min_f.is_nan() || row.f < min_f {
            min_f = row.f;
            min_domain = row.domain.clone();
        }
        if max_f.is_nan() || row.f > max_f {
            max_f = row.f;
            max_domain = row.domain.clone();
        }
    }
    let note = (q <= 2.0).then(|| {
        "q <= 2: the supremum over open sets is unbounded (punctures raise F without limit); \
         the max below is a sample"
            .to_string()
    });
    PairSummary { p, q, min_f, min_domain, max_f, max_domain, note }
}

pub(crate) fn fmt_exponent(e: f64) -> String {
    if e.is_infinite() {
        "inf".into()
    } else {
        e.to_string()
    }
}

pub(crate) fn csv_safe(s: &str) -> String {
    s.replace(',', ";")
}

pub fn sweep_to_csv_string(report: &SweepReport) -> String {
    let mut s = String::from(
        "domain,p,q,lambda_root_p[1/length],lambda_root_q[1/length],F[dimensionless],checks_passed,error\n",
    );
    for row in &report.rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            csv_safe(&row.domain),
            fmt_exponent(row.p),
            fmt_exponent(row.q),
            row.lambda_root_p,
            row.lambda_root_q,
            row.f,
            row.checks_passed,
            row.error.as_deref().map(csv_safe).unwrap_or_default(),
        )
        .unwrap();
    }
    s
}

pub fn summaries_to_csv_string(report: &SweepReport) -> String {
    let mut s = String::from("p,q,min_F,min_domain,max_F,max_domain,note\n");
    for sum in &report.summaries {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_exponent(sum.p),
            fmt_exponent(sum.q),
            sum.min_f,
            csv_safe(&sum.min_domain),
            sum.max_f,
            csv_safe(&sum.max_domain),
            sum.note.as_deref().map(csv_safe).unwrap_or_default(),
        )
        .unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_grid;

    fn two_domains() -> Vec<(String, ShapeSpec)> {
        vec![
            ("square".into(), ShapeSpec::Rect { x: 0.0, y: 0.0, w: 1.0, h: 1.0 }),
            ("disk".into(), ShapeSpec::Disk { cx: 0.5, cy: 0.5, r: 0.4 }),
        ]
    }

    #[test]
    fn invalid_pairs_are_rejected_before_any_solve() {
        let grid = make_grid(32, 32, (1.0, 1.0)).unwrap();
        let opts = SolverOptions::default();
        let err = run_sweep(&two_domains(), &[2.0], &[3.0], &grid, &opts).unwrap_err();
        assert!(matches!(err, Error::Regime { p, q } if p == 2.0 && q == 3.0));
        let err = run_sweep(&two_domains(), &[2.0], &[0.5], &grid, &opts).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        let err = run_sweep(&[], &[2.0], &[1.0], &grid, &opts).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn rows_are_sorted_consistent_and_summarized() {
        let grid = make_grid(32, 32, (1.0, 1.0)).unwrap();
        let opts = SolverOptions::default();
        let report =
            run_sweep(&two_domains(), &[2.0, f64::INFINITY], &[1.0], &grid, &opts).unwrap();

        assert_eq!(report.rows.len(), 4);
        assert!(report.rows.iter().all(|r| r.error.is_none()), "no row may fail here");
        assert_eq!(report.rows[0].domain, "disk");
        assert_eq!(report.rows[3].domain, "square");
        for row in &report.rows {
            assert!((row.f - row.lambda_root_p / row.lambda_root_q).abs() <= 1e-12);
            assert!(row.checks_passed, "bounds hold on {} at ({}, {})", row.domain, row.p, row.q);
        }

        assert_eq!(report.summaries.len(), 2);
        let first = &report.summaries[0];
        assert_eq!((first.p, first.q), (2.0, 1.0));
        assert!(first.min_f <= first.max_f);
        assert!(first.note.is_some(), "q <= 2 carries the divergence note");

        let csv = sweep_to_csv_string(&report);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().starts_with("disk,2,1,"));
        let sums = summaries_to_csv_string(&report);
        assert_eq!(sums.lines().count(), 3);
        assert!(sums.lines().nth(2).unwrap().starts_with("inf,1,"));
    }
}
