//! Decimated simulation log.

use std::io::{self, Write};

use crate::laws::LawKind;
use crate::linalg::{self, Mat};

/// One logged sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    pub x: Vec<f64>,
    pub x_ref: Vec<f64>,
    pub e_ref: Vec<f64>,
    pub u: Vec<f64>,
    pub u_ad: Vec<f64>,
    pub theta: Mat,
    pub theta_hat: Mat,
    /// `Θ − Θ̂`, recomputed at logging time.
    pub theta_tilde: Mat,
    /// `ω = det φ` of the resetting bank.
    pub omega: f64,
    /// `Ω` of the resetting bank.
    pub omega_big: f64,
    pub gamma2: f64,
    /// Kreisselmeier forgetting in effect for the active law.
    pub l_var: f64,
    /// A reset happened since the previous record (inclusive of this one).
    pub reset_flag: bool,
    pub jump_flag: bool,
    pub diag: RecordDiagnostics,
}

/// Internal filter signals kept for verification, not written to CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordDiagnostics {
    pub delta_f: Vec<f64>,
    /// `Θᵀ·Φ_f` with the true `Θ`.
    pub theta_phi_f: Vec<f64>,
    pub y_mixed: Mat,
    /// `‖μ_f − (e − k·e_f − exp(−k(t − t_r))·e(t_r))‖`.
    pub mu_f_residual: f64,
    pub phi_eig_min: f64,
    pub phi_eig_max: f64,
    pub phi_asymmetry: f64,
    /// `t_r` of the resetting bank at this sample.
    pub t_reset: f64,
}

impl Record {
    pub fn e_ref_norm(&self) -> f64 {
        linalg::norm(&self.e_ref)
    }

    pub fn theta_tilde_norm(&self) -> f64 {
        self.theta_tilde.frobenius_norm()
    }

    /// `‖ξ‖ = √(‖e_ref‖² + ‖vec Θ̃‖²)`.
    pub fn xi_norm(&self) -> f64 {
        self.e_ref_norm().hypot(self.theta_tilde_norm())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub law: LawKind,
    pub step: f64,
    pub decimation: usize,
    pub records: Vec<Record>,
    /// Reset instants, in order.
    pub resets: Vec<f64>,
    /// Parameter jump instants, in order.
    pub jumps: Vec<f64>,
    /// Snapshots taken just before events were applied, one per event step.
    pub pre_event: Vec<Record>,
    /// Firing time of the switched-law latch.
    pub latch_time: Option<f64>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn series(&self, f: impl Fn(&Record) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    pub fn last(&self) -> &Record {
        self.records.last().expect("trajectory has at least one record")
    }

    /// Records with `t_a ≤ t ≤ t_b`.
    pub fn window(&self, t_a: f64, t_b: f64) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(move |r| r.t >= t_a && r.t <= t_b)
    }

    /// The left limit at `t`: the pre-event snapshot when an event fired at
    /// `t`, otherwise the record at `t` or the last one before it.
    pub fn value_before(&self, t: f64) -> Option<&Record> {
        let tol = 0.5 * self.step;
        if let Some(r) = self.pre_event.iter().find(|r| (r.t - t).abs() <= tol) {
            return Some(r);
        }
        self.records.iter().rev().find(|r| r.t <= t + tol)
    }

    /// The record nearest to `t`.
    pub fn at(&self, t: f64) -> Option<&Record> {
        self.records.iter().min_by(|a, b| {
            (a.t - t)
                .abs()
                .partial_cmp(&(b.t - t).abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    }

    /// Trapezoidal `∫‖e_ref‖dt` over `[t_a, t_b]` on the logged grid.
    pub fn integral_e_ref(&self, t_a: f64, t_b: f64) -> f64 {
        let pts: Vec<(f64, f64)> = self.window(t_a, t_b).map(|r| (r.t, r.e_ref_norm())).collect();
        pts.windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum()
    }

    pub fn max_of(&self, f: impl Fn(&Record) -> f64) -> f64 {
        self.records.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV header for a trajectory with dimensions `(n, m, p)`.
    pub fn csv_header(n: usize, m: usize, p: usize) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=n).map(|i| format!("x{i}")));
        h.extend((1..=n).map(|i| format!("xref{i}")));
        h.extend(indexed("u", m));
        h.extend(indexed("u_ad", m));
        h.extend(param_columns("theta_hat", p, m));
        h.extend(param_columns("theta", p, m));
        for c in [
            "e_ref_norm",
            "theta_tilde_norm",
            "xi_norm",
            "omega",
            "Omega",
            "gamma2",
            "l_var",
            "reset_flag",
            "jump_flag",
        ] {
            h.push(c.to_string());
        }
        h
    }

    /// Writes the trajectory as comma-separated values with LF endings.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let Some(first) = self.records.first() else {
            return Ok(());
        };
        let (n, m, p) = (first.x.len(), first.u.len(), first.theta.rows());
        writeln!(w, "{}", Self::csv_header(n, m, p).join(","))?;
        let mut line = String::new();
        for r in &self.records {
            line.clear();
            let mut push = |v: f64| {
                if !line.is_empty() {
                    line.push(',');
                }
                // shortest round-trip form, exponent outside [1e-5, 1e16)
                line.push_str(&format!("{v:?}"));
            };
            push(r.t);
            r.x.iter().for_each(|v| push(*v));
            r.x_ref.iter().for_each(|v| push(*v));
            r.u.iter().for_each(|v| push(*v));
            r.u_ad.iter().for_each(|v| push(*v));
            col_major(&r.theta_hat).for_each(&mut push);
            col_major(&r.theta).for_each(&mut push);
            push(r.e_ref_norm());
            push(r.theta_tilde_norm());
            push(r.xi_norm());
            push(r.omega);
            push(r.omega_big);
            push(r.gamma2);
            push(r.l_var);
            push(if r.reset_flag { 1.0 } else { 0.0 });
            push(if r.jump_flag { 1.0 } else { 0.0 });
            w.write_all(line.as_bytes())?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }
}

fn indexed(base: &str, m: usize) -> Vec<String> {
    if m == 1 {
        vec![base.to_string()]
    } else {
        (1..=m).map(|j| format!("{base}{j}")).collect()
    }
}

fn param_columns(base: &str, p: usize, m: usize) -> Vec<String> {
    if m == 1 {
        (1..=p).map(|i| format!("{base}_{i}")).collect()
    } else {
        (1..=m)
            .flat_map(|j| (1..=p).map(move |i| format!("{base}_{i}_{j}")))
            .collect()
    }
}

fn col_major(m: &Mat) -> impl Iterator<Item = f64> + '_ {
    (0..m.cols()).flat_map(move |j| (0..m.rows()).map(move |i| m[(i, j)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_for_wing_rock() {
        let h = Trajectory::csv_header(2, 1, 5);
        assert_eq!(&h[..6], ["t", "x1", "x2", "xref1", "xref2", "u"]);
        assert!(h.contains(&"theta_hat_5".to_string()));
        assert!(h.contains(&"theta_1".to_string()));
        assert_eq!(h.last().unwrap(), "jump_flag");
        let mut sorted = h.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), h.len());
    }

    #[test]
    fn header_multi_input() {
        let h = Trajectory::csv_header(3, 2, 3);
        assert!(h.contains(&"u2".to_string()));
        assert!(h.contains(&"theta_hat_3_2".to_string()));
    }
}
