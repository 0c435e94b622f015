//! Excitation level, decay-rate fits and ultimate-bound evaluation.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Smallest eigenvalue of `∫φφᵀdτ` over `[t_start, t_end]`.
///
/// The integral is trapezoidal on the sample grid, with linear
/// interpolation at window edges that fall between samples.
pub fn fe_level(times: &[f64], samples: &[Vec<f64>], t_start: f64, t_end: f64) -> Result<f64> {
    if times.len() != samples.len() || times.is_empty() {
        return Err(crate::error::contract("fe_level needs matching, nonempty series"));
    }
    let (first, last) = (times[0], times[times.len() - 1]);
    if !(t_start < t_end) || t_start < first || t_end > last {
        return Err(Error::Range {
            start: t_start,
            end: t_end,
            first,
            last,
        });
    }
    let p = samples[0].len();
    let interp = |t: f64| -> Vec<f64> {
        let i = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
        let (t0, t1) = (times[i - 1], times[i]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        samples[i - 1]
            .iter()
            .zip(&samples[i])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    };
    let mut pts: Vec<(f64, Vec<f64>)> = vec![(t_start, interp(t_start))];
    for (t, s) in times.iter().zip(samples) {
        if *t > t_start && *t < t_end {
            pts.push((*t, s.clone()));
        }
    }
    pts.push((t_end, interp(t_end)));
    let mut gram = Mat::zeros(p, p);
    for w in pts.windows(2) {
        let dt = w[1].0 - w[0].0;
        gram.add_scaled(&Mat::outer(&w[0].1, &w[0].1), 0.5 * dt);
        gram.add_scaled(&Mat::outer(&w[1].1, &w[1].1), 0.5 * dt);
    }
    linalg::sym_eig_min(&gram.symmetrized())
}

/// Exponential envelope `‖s(t)‖ ≤ ρ·‖s(t_a)‖·exp(−κ(t − t_a))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub kappa: f64,
    pub rho: f64,
    pub samples: usize,
}

pub const DECAY_LOG_FLOOR: f64 = 1e-14;
const MIN_DECAY_SAMPLES: usize = 10;

/// Least-squares fit of `ln s(t)` on `[t_a, t_b]`.
///
/// Samples are used up to the first one at or below [`DECAY_LOG_FLOOR`].
/// `ρ` is the smallest constant for which the fitted envelope, anchored at
/// the first usable sample, bounds every used sample.
pub fn decay_rate(times: &[f64], values: &[f64], t_a: f64, t_b: f64) -> Result<DecayFit> {
    let mut pts = Vec::new();
    for (t, v) in times.iter().zip(values) {
        if *t < t_a || *t > t_b {
            continue;
        }
        if !(v.abs() > DECAY_LOG_FLOOR) {
            break;
        }
        pts.push((*t, v.abs()));
    }
    if pts.len() < MIN_DECAY_SAMPLES {
        return Err(Error::InsufficientDecayWindow { usable: pts.len() });
    }
    let nf = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let lm = pts.iter().map(|p| p.1.ln()).sum::<f64>() / nf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in &pts {
        sxy += (t - tm) * (v.ln() - lm);
        sxx += (t - tm) * (t - tm);
    }
    let kappa = -sxy / sxx;
    let (t0, v0) = pts[0];
    let rho = pts
        .iter()
        .map(|(t, v)| (v / v0).ln() + kappa * (t - t0))
        .fold(f64::NEG_INFINITY, f64::max)
        .exp();
    Ok(DecayFit {
        kappa,
        rho,
        samples: pts.len(),
    })
}

/// Measured quantities entering the ultimate-bound expressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub omega_lb: f64,
    pub omega_ub: f64,
    /// `Ω` at the jump instant of a jump inside the excitation window.
    pub omega_1ub: f64,
    pub gamma2_min: f64,
    pub gamma2_max: f64,
    /// `‖θ_j‖_F` of the jump.
    pub theta1_norm: f64,
    pub p_eig_min: f64,
    pub p_eig_max: f64,
    pub q_eig_min: f64,
    /// Largest eigenvalue of `Γ₁`; `λ_min(Γ₁⁻¹)` is its reciprocal.
    pub gamma1_eig_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    /// Parameter-error bound for a jump inside the excitation window.
    pub r1: f64,
    /// Parameter-error bound for a jump after the excitation window.
    pub r2: f64,
    pub e_ref_case2: f64,
    pub e_ref_case3: f64,
}

pub fn compute_bounds(inp: BoundInputs) -> Result<BoundReport> {
    if !(inp.omega_lb > 0.0) {
        return Err(Error::DegenerateExcitation("Omega_LB"));
    }
    if !(inp.gamma2_min > 0.0) {
        return Err(Error::DegenerateExcitation("Gamma2_min"));
    }
    if !(inp.p_eig_min > 0.0 && inp.q_eig_min > 0.0 && inp.gamma1_eig_max > 0.0) {
        return Err(crate::error::contract("P, Q and Γ₁ must be positive definite"));
    }
    // Ratios are formed first: Ω and Γ₂ can sit near 1e±120.
    let g_ratio = inp.gamma2_max / inp.gamma2_min;
    let r1 = (inp.omega_1ub / inp.omega_lb) * (inp.omega_ub / inp.omega_lb) * g_ratio * inp.theta1_norm;
    let r2 = (inp.omega_ub / inp.omega_lb).powi(2) * g_ratio * inp.theta1_norm;
    let g_omega = inp.gamma2_min * inp.omega_lb * inp.omega_lb;
    let scale = (g_omega / inp.gamma1_eig_max * (inp.p_eig_max / inp.p_eig_min) / inp.q_eig_min).sqrt();
    Ok(BoundReport {
        inputs: inp,
        r1,
        r2,
        e_ref_case2: r1 * scale,
        e_ref_case3: r2 * scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect()
    }

    #[test]
    fn fe_level_examples() {
        let t = grid(0.0, 2.0 * std::f64::consts::PI, 20_000);
        let rot: Vec<Vec<f64>> = t.iter().map(|s| vec![s.cos(), s.sin()]).collect();
        let a = fe_level(&t, &rot, 0.0, 2.0 * std::f64::consts::PI).unwrap();
        assert!((a - std::f64::consts::PI).abs() < 1e-3);
        let c: Vec<Vec<f64>> = t.iter().map(|_| vec![1.0, 2.0]).collect();
        assert!(fe_level(&t, &c, 0.5, 1.5).unwrap().abs() < 1e-12);
        let z: Vec<Vec<f64>> = t.iter().map(|_| vec![0.0, 0.0]).collect();
        assert_eq!(fe_level(&t, &z, 0.5, 1.5).unwrap(), 0.0);
        assert!(matches!(fe_level(&t, &z, -1.0, 1.0), Err(Error::Range { .. })));
    }

    #[test]
    fn decay_examples() {
        let t = grid(0.0, 5.0, 500);
        let v: Vec<f64> = t.iter().map(|s| 3.0 * (-2.0 * s).exp()).collect();
        let fit = decay_rate(&t, &v, 0.0, 5.0).unwrap();
        assert!((fit.kappa - 2.0).abs() < 1e-3);
        assert!((fit.rho - 1.0).abs() < 1e-9);
        let c = vec![0.7; t.len()];
        assert!(decay_rate(&t, &c, 0.0, 5.0).unwrap().kappa.abs() < 1e-6);
        assert_eq!(
            decay_rate(&t, &v, 0.0, 0.05),
            Err(Error::InsufficientDecayWindow { usable: 6 })
        );
    }

    #[test]
    fn decay_stops_at_floor() {
        let t = grid(0.0, 40.0, 4000);
        let v: Vec<f64> = t.iter().map(|s| (-1.5 * s).exp()).collect();
        let fit = decay_rate(&t, &v, 0.0, 40.0).unwrap();
        assert!(fit.samples < t.len());
        assert!((fit.kappa - 1.5).abs() < 1e-6);
    }

    fn inputs(theta: f64) -> BoundInputs {
        BoundInputs {
            omega_lb: 1e-62,
            omega_ub: 3e-61,
            omega_1ub: 2e-62,
            gamma2_min: 1e118,
            gamma2_max: 1e121,
            theta1_norm: theta,
            p_eig_min: 0.5,
            p_eig_max: 20.0,
            q_eig_min: 10.0,
            gamma1_eig_max: 500.0,
        }
    }

    #[test]
    fn bounds_scale_linearly_and_vanish() {
        let zero = compute_bounds(inputs(0.0)).unwrap();
        assert_eq!(
            (zero.r1, zero.r2, zero.e_ref_case2, zero.e_ref_case3),
            (0.0, 0.0, 0.0, 0.0)
        );
        let a = compute_bounds(inputs(1.0)).unwrap();
        let b = compute_bounds(inputs(2.0)).unwrap();
        assert!((b.r1 - 2.0 * a.r1).abs() <= 1e-12 * b.r1);
        assert!((b.r2 - 2.0 * a.r2).abs() <= 1e-12 * b.r2);
        assert!(a.r1.is_finite() && a.r2.is_finite());
        // r̄₂ = (Γ₂max Ω_UB² / (Γ₂min Ω_LB²))·‖Θ₁‖
        assert!((a.r2 - 1e3 * 900.0).abs() < 1e-6);
    }

    #[test]
    fn bounds_reject_degenerate_excitation() {
        let mut i = inputs(1.0);
        i.omega_lb = 0.0;
        assert_eq!(compute_bounds(i), Err(Error::DegenerateExcitation("Omega_LB")));
        let mut i = inputs(1.0);
        i.gamma2_min = 0.0;
        assert_eq!(compute_bounds(i), Err(Error::DegenerateExcitation("Gamma2_min")));
    }
}
