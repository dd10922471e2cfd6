//! CSV rendering of trajectories, summaries and grids.

use std::fmt::Write;

use super::{BatchSummary, GridCell, TrialResult};

pub const SUMMARY_HEADER: &str = "function,N,method,trials,successes,median_evals,iqr_evals";
pub const GRID_HEADER: &str = "function,N,m,n,alpha,success_rate,median_evals";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn push_columns(header: &mut String, prefix: &str, n: usize) {
    for j in 1..=n {
        let _ = write!(header, ",{prefix}_{j}");
    }
}

/// `t,evals,best_f,sigma,m_1..m_N,std_1..std_N[,A_1..A_N]`. Empty when the
/// trial did not log a trajectory.
pub fn trajectory_csv(result: &TrialResult) -> String {
    let Some(rows) = result.trajectory.as_ref() else {
        return String::new();
    };
    let Some(first) = rows.first() else {
        return String::new();
    };
    let n = first.mean.len();
    let mut out = String::from("t,evals,best_f,sigma");
    push_columns(&mut out, "m", n);
    push_columns(&mut out, "std", n);
    if first.scale.is_some() {
        push_columns(&mut out, "A", n);
    }
    out.push('\n');
    for row in rows {
        let _ = write!(out, "{},{},{},{}", row.t, row.evals, row.best_f, row.sigma);
        let extra = row.scale.iter().flatten();
        for v in row.mean.iter().chain(&row.std).chain(extra) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn summary_csv(summary: &BatchSummary) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in &summary.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.function,
            r.dim,
            r.method,
            r.trials,
            r.successes,
            opt(r.median_evals),
            opt(r.iqr_evals)
        );
    }
    out
}

/// Cells with a configuration error have success rate 0 and no median.
pub fn grid_csv(cells: &[GridCell]) -> String {
    let mut out = format!("{GRID_HEADER}\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.function,
            c.dim,
            c.m,
            c.n,
            c.alpha,
            c.success_rate,
            opt(c.median_evals)
        );
    }
    out
}
