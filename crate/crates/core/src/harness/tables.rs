//! Plot-ready CSV tables. Column order is fixed.

use std::fmt::Write;

use super::{CommitPoint, ExperimentReport, QBinTable, SeparationStats, ShotOutcome, TimePoint, WindowMode};
use crate::window::RECORDS_CSV_HEADER;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn mode_label(r: &ExperimentReport) -> (&'static str, usize) {
    match r.spec.window {
        WindowMode::Global => ("global", r.spec.rounds),
        WindowMode::Fixed { window } => ("fixed", window),
        WindowMode::Adaptive => ("adaptive", r.spec.adaptive.baseline_window),
    }
}

pub fn ler_vs_p_csv(reports: &[ExperimentReport]) -> String {
    let mut out = String::from(
        "code,noise,p,mode,window,commit,shots,errors,ler,ler_lo,ler_hi,ler_per_round,\
         retry_rate,mean_window_ns,normalized_time\n",
    );
    for r in reports {
        let (mode, window) = mode_label(r);
        let noise = serde_json::to_value(r.spec.noise.kind).expect("enum serializes");
        writeln!(
            out,
            "{},{},{},{mode},{window},{},{},{},{},{},{},{},{},{},{}",
            r.code_label,
            noise.as_str().unwrap_or_default(),
            r.spec.noise.p,
            r.spec.commit,
            r.shots,
            r.logical_errors,
            r.ler.estimate,
            r.ler.lo,
            r.ler.hi,
            r.ler_per_round,
            r.retry_rate,
            r.wall_time.mean_ns,
            opt(r.normalized_time)
        )
        .expect("string write");
    }
    out
}

pub fn time_vs_w_csv(points: &[TimePoint]) -> String {
    let mut out = String::from("window,mean_window_ns,normalized_time\n");
    for p in points {
        writeln!(out, "{},{},{}", p.window, p.mean_window_ns, p.normalized).expect("string write");
    }
    out
}

pub fn ler_vs_q_csv(table: &QBinTable) -> String {
    let mut out = String::from("bin,q_lo,q_hi,q_mean,shots,errors,ler,ler_lo,ler_hi\n");
    for (i, b) in table.bins.iter().enumerate() {
        writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{}",
            b.q_lo, b.q_hi, b.q_mean, b.ler.trials, b.ler.successes, b.ler.estimate, b.ler.lo, b.ler.hi
        )
        .expect("string write");
    }
    out
}

pub fn separation_cdf_csv(stats: &SeparationStats) -> String {
    let mut out = String::from("axis,distance,fraction_le\n");
    for (axis, values) in [("space", &stats.space), ("time", &stats.time)] {
        for (d, f) in SeparationStats::cdf(values) {
            writeln!(out, "{axis},{d},{f}").expect("string write");
        }
    }
    out
}

pub fn commit_sweep_csv(points: &[CommitPoint]) -> String {
    let mut out = String::from("commit,window,shots,errors,ler,ler_lo,ler_hi\n");
    for p in points {
        let l = &p.report.ler;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.commit, p.window, l.trials, l.successes, l.estimate, l.lo, l.hi
        )
        .expect("string write");
    }
    out
}

/// One row per decoded window.
pub fn records_csv(shots: &[ShotOutcome]) -> String {
    let mut out = format!("{RECORDS_CSV_HEADER}\n");
    for s in shots {
        for r in &s.records {
            out.push_str(&r.csv_row(s.index));
            out.push('\n');
        }
    }
    out
}

/// Threshold trajectory of adaptive runs.
pub fn controller_trace_csv(shots: &[ShotOutcome]) -> String {
    let mut out = String::from("shot,window,q,c_before,c_after,r_obs,retried\n");
    for s in shots {
        for r in &s.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.index,
                r.index,
                r.q_value,
                opt(r.c_before),
                opt(r.c_after),
                opt(r.r_obs),
                u8::from(r.retried)
            )
            .expect("string write");
        }
    }
    out
}
