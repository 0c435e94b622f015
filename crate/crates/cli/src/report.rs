//! Run summaries and comparison metrics.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ars_core::sim::decay_rate;
use ars_core::{LawKind, Scenario, Trajectory};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct IntervalSummary {
    pub start: f64,
    pub end: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub gamma2_min: f64,
    pub gamma2_max: f64,
    pub e_ref_integral: f64,
    /// Fitted decay rate of `|Θ̃|` on `[start + 1, end − 1]`, when the
    /// window holds enough samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_tilde_decay: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub law: String,
    pub runtime_s: f64,
    pub step: f64,
    pub records: usize,
    pub reset_times: Vec<f64>,
    pub jump_times: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latch_time: Option<f64>,
    pub final_e_ref_norm: f64,
    pub final_theta_tilde_norm: f64,
    pub final_xi_norm: f64,
    pub max_e_ref_norm: f64,
    pub max_theta_tilde_norm: f64,
    pub intervals: Vec<IntervalSummary>,
}

fn finite(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::MAX.copysign(v)
    }
}

pub fn summarize(sc: &Scenario, tr: &Trajectory, runtime_s: f64) -> Summary {
    let last = tr.last();
    let times = tr.times();
    let tilde = tr.series(|r| r.theta_tilde_norm());
    let intervals = sc
        .intervals()
        .into_iter()
        .map(|(a, b)| {
            let w: Vec<_> = tr.records.iter().filter(|r| r.t >= a && r.t < b).collect();
            let fold = |f: fn(&ars_core::Record) -> f64| {
                w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(f(r)), hi.max(f(r)))
                })
            };
            let (omega_min, omega_max) = fold(|r| r.omega_big);
            let (gamma2_min, gamma2_max) = fold(|r| r.gamma2);
            let theta_tilde_decay = decay_rate(&times, &tilde, a + 1.0, b - 1.0)
                .ok()
                .map(|f| f.kappa)
                .filter(|k| k.is_finite());
            IntervalSummary {
                start: a,
                end: b,
                omega_min: finite(omega_min),
                omega_max: finite(omega_max),
                gamma2_min: finite(gamma2_min),
                gamma2_max: finite(gamma2_max),
                e_ref_integral: finite(tr.integral_e_ref(a, b)),
                theta_tilde_decay,
            }
        })
        .collect();
    Summary {
        law: sc.law.name().to_string(),
        runtime_s,
        step: sc.step,
        records: tr.records.len(),
        reset_times: tr.resets.clone(),
        jump_times: tr.jumps.clone(),
        latch_time: tr.latch_time,
        final_e_ref_norm: finite(last.e_ref_norm()),
        final_theta_tilde_norm: finite(last.theta_tilde_norm()),
        final_xi_norm: finite(last.xi_norm()),
        max_e_ref_norm: finite(tr.max_of(|r| r.e_ref_norm())),
        max_theta_tilde_norm: finite(tr.max_of(|r| r.theta_tilde_norm())),
        intervals,
    }
}

pub fn write_csv(path: &Path, tr: &Trajectory) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    tr.write_csv(&mut w)
        .with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Checkpoints for `|Θ̃|`: just before every jump and reset, then the end.
pub fn checkpoints(sc: &Scenario) -> Vec<f64> {
    let mut t: Vec<f64> = sc
        .plant
        .theta
        .jumps()
        .iter()
        .map(|j| j.t)
        .chain(sc.reset_times())
        .filter(|t| *t > sc.t0 && *t < sc.t_end)
        .collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t.push(sc.t_end);
    t
}

#[derive(Debug, Clone, Serialize)]
pub struct LawMetrics {
    pub law: String,
    /// `∫|e_ref|` per inter-reset interval.
    pub e_ref_integral: Vec<f64>,
    /// `|Θ̃|` at each checkpoint, left limits before events.
    pub theta_tilde: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub intervals: Vec<(f64, f64)>,
    pub checkpoints: Vec<f64>,
    pub laws: Vec<LawMetrics>,
}

pub fn law_metrics(sc: &Scenario, law: LawKind, run: &std::result::Result<Trajectory, String>) -> LawMetrics {
    match run {
        Ok(tr) => LawMetrics {
            law: law.name().to_string(),
            e_ref_integral: sc
                .intervals()
                .iter()
                .map(|&(a, b)| finite(tr.integral_e_ref(a, b)))
                .collect(),
            theta_tilde: checkpoints(sc)
                .iter()
                .map(|&t| {
                    let r = if t < sc.t_end {
                        tr.value_before(t)
                    } else {
                        Some(tr.last())
                    };
                    r.map_or(f64::MAX, |r| finite(r.theta_tilde_norm()))
                })
                .collect(),
            error: None,
        },
        Err(e) => LawMetrics {
            law: law.name().to_string(),
            e_ref_integral: Vec::new(),
            theta_tilde: Vec::new(),
            error: Some(e.clone()),
        },
    }
}

/// Plain-text table, one row per law.
pub fn metrics_table(m: &Metrics) -> String {
    let mut out = format!("{:<10}", "law");
    for (a, b) in &m.intervals {
        out.push_str(&format!(" {:>14}", format!("int[{a},{b}]")));
    }
    for (i, t) in m.checkpoints.iter().enumerate() {
        let left = if i + 1 < m.checkpoints.len() { "-" } else { "" };
        out.push_str(&format!(" {:>12}", format!("tilde({t}{left})")));
    }
    out.push('\n');
    for l in &m.laws {
        out.push_str(&format!("{:<10}", l.law));
        if let Some(e) = &l.error {
            out.push_str(&format!(" failed: {e}\n"));
            continue;
        }
        for v in &l.e_ref_integral {
            out.push_str(&format!(" {v:>14.6e}"));
        }
        for v in &l.theta_tilde {
            out.push_str(&format!(" {v:>12.4e}"));
        }
        out.push('\n');
    }
    out
}

/// `|ξ|` of every successful law on the shared record grid.
pub fn write_xi_csv(path: &Path, runs: &[(LawKind, std::result::Result<Trajectory, String>)]) -> Result<()> {
    let ok: Vec<(LawKind, &Trajectory)> = runs
        .iter()
        .filter_map(|(l, r)| r.as_ref().ok().map(|t| (*l, t)))
        .collect();
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    write!(w, "t")?;
    for (l, _) in &ok {
        write!(w, ",xi_norm_{}", l.name())?;
    }
    writeln!(w)?;
    let rows = ok.iter().map(|(_, t)| t.records.len()).min().unwrap_or(0);
    for i in 0..rows {
        write!(w, "{}", ok[0].1.records[i].t)?;
        for (_, t) in &ok {
            write!(w, ",{:e}", t.records[i].xi_norm())?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn output_path(dir: &Path, stem: &str, ext: &str) -> PathBuf {
    dir.join(format!("{stem}.{ext}"))
}
