//! Adaptive update laws.
//!
//! Every law is a pure function returning `Θ̂̇` (and `Γ̇₂` for the proposed
//! law). Discrete latches ([`SwitchLatch`], [`FeTracker`]) are advanced by
//! the simulator at step boundaries.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LawKind {
    /// Composite law with resetting filtration and dynamic `Γ₂`.
    Proposed,
    Mrac,
    SigmaMod,
    Switched,
    FeCmrac,
    DfCl,
    El,
}

impl LawKind {
    pub const ALL: [LawKind; 7] = [
        LawKind::Proposed,
        LawKind::Mrac,
        LawKind::SigmaMod,
        LawKind::Switched,
        LawKind::FeCmrac,
        LawKind::DfCl,
        LawKind::El,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LawKind::Proposed => "proposed",
            LawKind::Mrac => "mrac",
            LawKind::SigmaMod => "sigma_mod",
            LawKind::Switched => "switched",
            LawKind::FeCmrac => "fe_cmrac",
            LawKind::DfCl => "df_cl",
            LawKind::El => "el",
        }
    }

    /// Laws fed by the non-resetting filter bank.
    pub fn uses_memory_bank(self) -> bool {
        matches!(self, LawKind::Switched | LawKind::FeCmrac | LawKind::DfCl | LawKind::El)
    }
}

impl fmt::Display for LawKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LawKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LawKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::InvalidScenario(format!(
                "unknown law `{s}`, expected one of proposed, mrac, sigma_mod, switched, fe_cmrac, df_cl, el"
            ))
        })
    }
}

/// Gains of all laws. Defaults reproduce the wing-rock experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct LawParams {
    pub gamma1: Mat,
    pub gamma2_0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma2_cap: f64,
    pub sigma_mod: f64,
    pub k_l: f64,
    pub k_ll: f64,
    pub k_sw: f64,
    /// Relative determinant threshold of the switched-law latch.
    pub latch_rel: f64,
    pub l_m: f64,
    pub l_max: f64,
    pub vartheta: f64,
    pub l0: f64,
    pub lambda_lb: f64,
    pub lambda_ub: f64,
    /// Constant `Γ₂` of the FE-CMRAC law.
    pub gamma2_fe: f64,
    /// Constant `Γ₂` of the directional-forgetting law.
    pub gamma2_df: f64,
    /// Constant `Γ₂` of the efficient-learning law.
    pub gamma2_el: f64,
    /// Kreisselmeier forgetting of the directional-forgetting bank.
    pub l_df: f64,
    /// Kreisselmeier forgetting of the switched-law bank.
    pub l_sw: f64,
    pub eps_div: f64,
    pub eps_rank: f64,
}

impl LawParams {
    pub fn wing_rock(p: usize) -> Self {
        Self {
            gamma1: Mat::identity(p).scale(500.0),
            gamma2_0: 1.0,
            lambda1: 1100.0,
            lambda2: 450.0,
            gamma2_cap: 1e200,
            sigma_mod: 0.1,
            k_l: 5.0,
            k_ll: 1000.0,
            k_sw: 50000.0,
            latch_rel: 1e-30,
            l_m: 0.1,
            l_max: 10.0,
            vartheta: 1.0,
            l0: 10.0,
            lambda_lb: 1e-12,
            lambda_ub: 1e-5,
            gamma2_fe: 2500.0,
            gamma2_df: 2500.0,
            gamma2_el: 1000.0,
            l_df: 10.0,
            l_sw: 10.0,
            eps_div: 1e-12,
            eps_rank: 1e-10,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.gamma1.shape() != (p, p) {
            return bad(format!("gamma1 must be {p}x{p}"));
        }
        if self.gamma1.asymmetry() > 1e-12 * (1.0 + self.gamma1.frobenius_norm()) {
            return bad("gamma1 must be symmetric".into());
        }
        // Γ₁ = 0 is allowed: it switches the tracking term off.
        if linalg::sym_eig_min(&self.gamma1)? < 0.0 {
            return bad("gamma1 must be positive semidefinite".into());
        }
        let positive = [
            ("gamma2_0", self.gamma2_0),
            ("lambda2", self.lambda2),
            ("gamma2_cap", self.gamma2_cap),
            ("latch_rel", self.latch_rel),
            ("l_m", self.l_m),
            ("l_max", self.l_max),
            ("vartheta", self.vartheta),
            ("l0", self.l0),
            ("lambda_lb", self.lambda_lb),
            ("eps_div", self.eps_div),
            ("eps_rank", self.eps_rank),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("`{name}` must be positive, got {v}"));
            }
        }
        let nonneg = [
            ("lambda1", self.lambda1),
            ("sigma_mod", self.sigma_mod),
            ("k_l", self.k_l),
            ("k_ll", self.k_ll),
            ("k_sw", self.k_sw),
            ("gamma2_fe", self.gamma2_fe),
            ("gamma2_df", self.gamma2_df),
            ("gamma2_el", self.gamma2_el),
            ("l_df", self.l_df),
            ("l_sw", self.l_sw),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("`{name}` must be nonnegative, got {v}"));
            }
        }
        if self.gamma2_0 > self.gamma2_cap {
            return bad("gamma2_0 exceeds gamma2_cap".into());
        }
        if self.l_m > self.l_max {
            return bad("l_m exceeds l_max".into());
        }
        if self.lambda_lb >= self.lambda_ub {
            return bad("lambda_lb must be below lambda_ub".into());
        }
        Ok(())
    }
}

/// `Φ·e_refᵀ·PB`, the tracking-error regression term.
pub fn tracking_term(phi_x: &[f64], e_ref: &[f64], pb: &Mat) -> Mat {
    Mat::outer(phi_x, &pb.tr_mul_vec(e_ref))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProposedRates {
    pub theta_hat: Mat,
    pub gamma2: f64,
}

/// Composite law with dynamic `Γ₂`.
#[allow(clippy::too_many_arguments)]
pub fn proposed_update(
    params: &LawParams,
    theta_hat: &Mat,
    gamma2: f64,
    phi_x: &[f64],
    e_ref: &[f64],
    pb: &Mat,
    upsilon: &Mat,
    omega_big: f64,
) -> ProposedRates {
    let g_omega = gamma2 * omega_big;
    let g_omega2 = g_omega * omega_big;
    let mut rate = &params.gamma1 * &tracking_term(phi_x, e_ref, pb);
    rate.add_scaled(upsilon, g_omega);
    rate.add_scaled(theta_hat, -g_omega2);
    let mut g_rate = params.lambda1 * gamma2 - params.lambda2 * gamma2 * g_omega2;
    if gamma2 >= params.gamma2_cap && g_rate > 0.0 {
        g_rate = 0.0;
    }
    ProposedRates {
        theta_hat: rate,
        gamma2: g_rate,
    }
}

pub fn mrac_update(gamma1: &Mat, phi_x: &[f64], e_ref: &[f64], pb: &Mat) -> Mat {
    gamma1 * &tracking_term(phi_x, e_ref, pb)
}

pub fn sigma_mod_update(gamma1: &Mat, sigma: f64, theta_hat: &Mat, phi_x: &[f64], e_ref: &[f64], pb: &Mat) -> Mat {
    let mut inner = tracking_term(phi_x, e_ref, pb);
    inner.add_scaled(theta_hat, -sigma);
    gamma1 * &inner
}

/// Non-resetting regression signals available to the comparison laws.
#[derive(Debug, Clone, Copy)]
pub struct Regression<'a> {
    pub delta_f: &'a [f64],
    pub phi_f: &'a [f64],
    pub y: &'a Mat,
    pub phi: &'a Mat,
}

/// `y − φ·Θ̂`.
pub fn regression_residual(y: &Mat, phi: &Mat, theta_hat: &Mat) -> Mat {
    y - &(phi * theta_hat)
}

/// Switched law with the one-shot latch.
///
/// The instantaneous term is premultiplied by `Φ_f` so that it has the
/// p×m shape of the other terms.
pub fn switched_update(
    params: &LawParams,
    theta_hat: &Mat,
    phi_x: &[f64],
    e_ref: &[f64],
    pb: &Mat,
    reg: Regression<'_>,
    latch: &SwitchLatch,
) -> Mat {
    let mut inner = tracking_term(phi_x, e_ref, pb);
    let pred = theta_hat.tr_mul_vec(reg.phi_f);
    let resid: Vec<f64> = reg.delta_f.iter().zip(&pred).map(|(d, p)| d - p).collect();
    inner.add_scaled(&Mat::outer(reg.phi_f, &resid), params.k_l);
    inner.add_scaled(&regression_residual(reg.y, reg.phi, theta_hat), params.k_ll);
    if latch.is_fired() {
        inner.add_scaled(&regression_residual(&latch.y_sw, &latch.phi_sw, theta_hat), params.k_sw);
    }
    &params.gamma1 * &inner
}

/// `Γ₁(Φ·e_refᵀ·PB + Γ₂(y − φ·Θ̂))`, shared by the FE-CMRAC,
/// directional-forgetting and efficient-learning laws.
pub fn composite_update(
    gamma1: &Mat,
    gamma2: f64,
    theta_hat: &Mat,
    phi_x: &[f64],
    e_ref: &[f64],
    pb: &Mat,
    y: &Mat,
    phi: &Mat,
) -> Mat {
    let mut inner = tracking_term(phi_x, e_ref, pb);
    inner.add_scaled(&regression_residual(y, phi, theta_hat), gamma2);
    gamma1 * &inner
}

pub fn fe_cmrac_update(
    params: &LawParams,
    theta_hat: &Mat,
    phi_x: &[f64],
    e_ref: &[f64],
    pb: &Mat,
    tracker: &FeTracker,
) -> Mat {
    composite_update(
        &params.gamma1,
        params.gamma2_fe,
        theta_hat,
        phi_x,
        e_ref,
        pb,
        &tracker.y_a,
        &tracker.phi_a,
    )
}

/// `l = l_m + (l_M − l_m)·tanh(ϑ‖Φ̇_f‖)`.
pub fn tanh_forgetting(l_m: f64, l_max: f64, vartheta: f64, phi_f_dot_norm: f64) -> f64 {
    l_m + (l_max - l_m) * (vartheta * phi_f_dot_norm).tanh()
}

/// Eigenvalue-scheduled forgetting of the efficient-learning law.
pub fn eigen_forgetting(l0: f64, lambda_lb: f64, lambda_ub: f64, lambda_min: f64) -> f64 {
    let ratio = (2.0 * lambda_min - lambda_ub - lambda_lb) / (lambda_ub - lambda_lb);
    if ratio >= 1.0 {
        l0
    } else {
        (0.5 * l0 * (ratio + 1.0)).max(0.0)
    }
}

/// Kreisselmeier rates `(ẏ, φ̇)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionRates {
    pub y: Mat,
    pub phi: Mat,
    /// True when the pure-integration branch was taken.
    pub integrating: bool,
}

/// Extension with uniform forgetting `l`.
pub fn uniform_forgetting(y: &Mat, phi: &Mat, phi_f: &[f64], delta_f: &[f64], l: f64) -> ExtensionRates {
    let mut dy = Mat::outer(phi_f, delta_f);
    dy.add_scaled(y, -l);
    let mut dphi = Mat::outer(phi_f, phi_f);
    dphi.add_scaled(phi, -l);
    ExtensionRates {
        y: dy,
        phi: dphi,
        integrating: l == 0.0,
    }
}

/// Extension with directional forgetting and the rank switch.
pub fn directional_forgetting(
    y: &Mat,
    phi: &Mat,
    phi_f: &[f64],
    delta_f: &[f64],
    l: f64,
    eps_rank: f64,
    eps_div: f64,
) -> Result<ExtensionRates> {
    let vvt = Mat::outer(phi_f, phi_f);
    let mut dy = Mat::outer(phi_f, delta_f);
    let mut dphi = vvt.clone();
    let rank_now = linalg::numerical_rank(phi, eps_rank)?;
    let rank_next = linalg::numerical_rank(&(phi + &vvt), eps_rank)?;
    if rank_now < rank_next {
        return Ok(ExtensionRates {
            y: dy,
            phi: dphi,
            integrating: true,
        });
    }
    let phi_v = phi.mul_vec(phi_f);
    let q = linalg::dot(phi_f, &phi_v);
    if q > eps_div && linalg::dot(phi_f, phi_f) > eps_div {
        let c = -l / q;
        let vt_y = y.tr_mul_vec(phi_f);
        dy.add_scaled(&Mat::outer(&phi_v, &vt_y), c);
        dphi.add_scaled(&Mat::outer(&phi_v, &phi_v), c);
    }
    Ok(ExtensionRates {
        y: dy,
        phi: dphi,
        integrating: false,
    })
}

/// One-shot latch of the switched law.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchLatch {
    pub y_sw: Mat,
    pub phi_sw: Mat,
    pub fired_at: Option<f64>,
}

impl SwitchLatch {
    pub fn new(p: usize, m: usize) -> Self {
        Self {
            y_sw: Mat::zeros(p, m),
            phi_sw: Mat::zeros(p, p),
            fired_at: None,
        }
    }

    pub fn is_fired(&self) -> bool {
        self.fired_at.is_some()
    }

    /// Latches `(y, φ)` the first time `det G > rel·(tr G / p)^p`.
    /// Returns true only on the firing call.
    pub fn observe(&mut self, gram: &Mat, y: &Mat, phi: &Mat, t: f64, rel: f64) -> Result<bool> {
        if self.is_fired() {
            return Ok(false);
        }
        let p = gram.rows() as i32;
        let scale = (gram.trace() / p as f64).powi(p);
        let d = linalg::det(gram)?;
        if scale > 0.0 && d > rel * scale {
            self.y_sw = y.clone();
            self.phi_sw = phi.clone();
            self.fired_at = Some(t);
            return Ok(true);
        }
        Ok(false)
    }
}

/// Running arg-max of `λ_min(φ)`; ties go to the latest time.
#[derive(Debug, Clone, PartialEq)]
pub struct FeTracker {
    pub y_a: Mat,
    pub phi_a: Mat,
    pub best: f64,
    pub t_a: Option<f64>,
}

impl FeTracker {
    pub fn new(p: usize, m: usize) -> Self {
        Self {
            y_a: Mat::zeros(p, m),
            phi_a: Mat::zeros(p, p),
            best: f64::NEG_INFINITY,
            t_a: None,
        }
    }

    /// Returns true when the stored pair was replaced.
    pub fn observe(&mut self, y: &Mat, phi: &Mat, t: f64) -> Result<bool> {
        let lam = linalg::sym_eig_min(&phi.symmetrized())?;
        self.observe_value(lam, y, phi, t);
        Ok(self.t_a == Some(t))
    }

    pub(crate) fn observe_value(&mut self, lam: f64, y: &Mat, phi: &Mat, t: f64) {
        if lam >= self.best {
            self.best = lam;
            self.y_a = y.clone();
            self.phi_a = phi.clone();
            self.t_a = Some(t);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pb() -> Mat {
        Mat::column(&[9.449, 4.439])
    }

    #[test]
    fn law_names_round_trip() {
        for k in LawKind::ALL {
            assert_eq!(k.name().parse::<LawKind>().unwrap(), k);
        }
        assert!("cmrac".parse::<LawKind>().is_err());
    }

    #[test]
    fn default_params_validate() {
        LawParams::wing_rock(5).validate(5).unwrap();
        let mut p = LawParams::wing_rock(5);
        p.lambda_lb = 1.0;
        assert!(p.validate(5).is_err());
    }

    #[test]
    fn proposed_zero_at_consistent_regression() {
        let params = LawParams::wing_rock(5);
        let th = Mat::column(&[1.0, -2.0, 0.5, 3.0, 0.0]);
        let omega = 1e-30;
        let ups = th.scale(omega);
        let r = proposed_update(&params, &th, 1e58, &[1.0; 5], &[0.0, 0.0], &pb(), &ups, omega);
        assert!(r.theta_hat.max_abs() <= 1e-12, "{:?}", r.theta_hat);
    }

    #[test]
    fn proposed_gamma2_equilibrium() {
        let params = LawParams::wing_rock(5);
        let omega = 1e-3;
        let g = params.lambda1 / (params.lambda2 * omega * omega);
        let r = proposed_update(
            &params,
            &Mat::zeros(5, 1),
            g,
            &[0.0; 5],
            &[0.0; 2],
            &pb(),
            &Mat::zeros(5, 1),
            omega,
        );
        assert!(r.gamma2.abs() <= 1e-9 * params.lambda1 * g);
    }

    #[test]
    fn proposed_gamma2_growth_without_excitation_and_cap() {
        let params = LawParams::wing_rock(5);
        let zero = Mat::zeros(5, 1);
        let r = proposed_update(&params, &zero, 2.0, &[0.0; 5], &[0.0; 2], &pb(), &zero, 0.0);
        assert_eq!(r.gamma2, 2.0 * params.lambda1);
        let r = proposed_update(&params, &zero, 1e200, &[0.0; 5], &[0.0; 2], &pb(), &zero, 0.0);
        assert_eq!(r.gamma2, 0.0);
    }

    #[test]
    fn mrac_examples() {
        let g = Mat::identity(5).scale(500.0);
        assert_eq!(mrac_update(&g, &[1.0; 5], &[0.0; 2], &pb()).max_abs(), 0.0);
        // e_refᵀPB = 2
        let pb1 = Mat::column(&[2.0, 0.0]);
        let r = mrac_update(&g, &[1.0; 5], &[1.0, 7.0], &pb1);
        assert!(r.data().iter().all(|v| *v == 1000.0));
        let r = mrac_update(&Mat::identity(5), &[0.0, 0.0, 1.0, 0.0, 0.0], &[0.5, 0.0], &pb1);
        assert_eq!(r.data(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn sigma_mod_examples() {
        let g = Mat::identity(1).scale(3.0);
        let z = Mat::zeros(1, 1);
        let pb1 = Mat::column(&[1.0]);
        assert_eq!(sigma_mod_update(&g, 0.1, &z, &[2.0], &[0.0], &pb1).max_abs(), 0.0);
        let th = Mat::column(&[4.0]);
        let r = sigma_mod_update(&g, 0.1, &th, &[2.0], &[0.0], &pb1);
        assert!((r[(0, 0)] + 1.2).abs() < 1e-15);
        // equilibrium Θ̂* = Φ·e·PB/σ
        let star = Mat::column(&[2.0 * 0.5 / 0.1]);
        let r = sigma_mod_update(&g, 0.1, &star, &[2.0], &[0.5], &pb1);
        assert!(r.max_abs() < 1e-12);
    }

    #[test]
    fn forgetting_schedules() {
        assert_eq!(tanh_forgetting(0.1, 10.0, 1.0, 0.0), 0.1);
        assert!((tanh_forgetting(0.1, 10.0, 1.0, 1.0) - 7.6397).abs() < 1e-3);
        let (lb, ub) = (1e-12, 1e-5);
        assert!((eigen_forgetting(10.0, lb, ub, ub) - 10.0).abs() < 1e-12);
        assert!(eigen_forgetting(10.0, lb, ub, lb).abs() < 1e-12);
        assert!((eigen_forgetting(10.0, lb, ub, 0.5 * (lb + ub)) - 5.0).abs() < 1e-9);
        assert_eq!(eigen_forgetting(10.0, lb, ub, -1.0), 0.0);
    }

    #[test]
    fn directional_branches() {
        let z = Mat::zeros(2, 1);
        let phi0 = Mat::zeros(2, 2);
        let r = directional_forgetting(&z, &phi0, &[1.0, 0.5], &[2.0], 10.0, 1e-10, 1e-12).unwrap();
        assert!(r.integrating);
        assert_eq!(r.phi, Mat::outer(&[1.0, 0.5], &[1.0, 0.5]));

        let r = directional_forgetting(&z, &phi0, &[0.0, 0.0], &[0.0], 10.0, 1e-10, 1e-12).unwrap();
        assert_eq!(r.y.max_abs(), 0.0);
        assert_eq!(r.phi.max_abs(), 0.0);

        // full-rank φ, v = e1: the v-component of y decays at rate l
        let phi = Mat::diag(&[2.0, 3.0]);
        let y = Mat::column(&[4.0, 5.0]);
        let r = directional_forgetting(&y, &phi, &[1.0, 0.0], &[0.0], 10.0, 1e-10, 1e-12).unwrap();
        assert!(!r.integrating);
        assert!((r.y[(0, 0)] + 10.0 * 4.0).abs() < 1e-12);
        assert_eq!(r.y[(1, 0)], 0.0);
        assert!((r.phi[(0, 0)] - (1.0 - 10.0 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn switch_latch_fires_once() {
        let mut latch = SwitchLatch::new(2, 1);
        let y = Mat::column(&[1.0, 2.0]);
        let phi = Mat::identity(2);
        let rank1 = Mat::outer(&[1.0, 1.0], &[1.0, 1.0]);
        assert!(!latch.observe(&rank1, &y, &phi, 0.1, 1e-30).unwrap());
        assert!(latch.observe(&Mat::identity(2), &y, &phi, 0.2, 1e-30).unwrap());
        assert!(!latch
            .observe(&Mat::identity(2).scale(5.0), &y, &phi.scale(9.0), 0.3, 1e-30)
            .unwrap());
        assert_eq!(latch.fired_at, Some(0.2));
        assert_eq!(latch.phi_sw, phi);
    }

    #[test]
    fn switched_before_latch_has_no_switch_term() {
        let params = LawParams::wing_rock(1);
        let latch = SwitchLatch::new(1, 1);
        let th = Mat::column(&[2.0]);
        let y = Mat::column(&[6.0]);
        let phi = Mat::column(&[3.0]);
        let reg = Regression {
            delta_f: &[2.0],
            phi_f: &[1.0],
            y: &y,
            phi: &phi,
        };
        let r = switched_update(
            &params,
            &th,
            &[1.0],
            &[0.0, 0.0],
            &Mat::column(&[1.0, 1.0]),
            reg,
            &latch,
        );
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn fe_tracker_running_max() {
        let mut tr = FeTracker::new(1, 1);
        let y = Mat::zeros(1, 1);
        for (t, lam) in [(1.0, 1.0), (2.0, 3.0), (3.0, 2.0)] {
            tr.observe(&y, &Mat::diag(&[lam]), t).unwrap();
        }
        assert_eq!(tr.t_a, Some(2.0));
        assert_eq!(tr.best, 3.0);
        tr.observe(&y, &Mat::diag(&[3.0]), 4.0).unwrap();
        assert_eq!(tr.t_a, Some(4.0));
    }

    #[test]
    fn comparison_laws_vanish_at_exact_solution() {
        let params = LawParams::wing_rock(2);
        let th = Mat::column(&[1.5, -0.5]);
        let phi = Mat::from_rows(&[[2.0, 0.3], [0.3, 1.0]]);
        let y = &phi * &th;
        let phi_f = [0.4, -0.7];
        let delta_f = th.tr_mul_vec(&phi_f);
        let e0 = [0.0, 0.0];
        let pb = Mat::column(&[1.0, 1.0]);
        let mut latch = SwitchLatch::new(2, 1);
        latch.observe(&Mat::identity(2), &y, &phi, 0.0, 1e-30).unwrap();
        let reg = Regression {
            delta_f: &delta_f,
            phi_f: &phi_f,
            y: &y,
            phi: &phi,
        };
        assert!(switched_update(&params, &th, &phi_f, &e0, &pb, reg, &latch).max_abs() < 1e-9);
        let mut tr = FeTracker::new(2, 1);
        tr.observe(&y, &phi, 0.0).unwrap();
        assert!(fe_cmrac_update(&params, &th, &phi_f, &e0, &pb, &tr).max_abs() < 1e-9);
        let r = composite_update(&params.gamma1, params.gamma2_df, &th, &phi_f, &e0, &pb, &y, &phi);
        assert!(r.max_abs() < 1e-9);
        assert_eq!(mrac_update(&params.gamma1, &phi_f, &e0, &pb).max_abs(), 0.0);
        let leak = sigma_mod_update(&params.gamma1, params.sigma_mod, &th, &phi_f, &e0, &pb);
        let expected = (&params.gamma1 * &th).scale(-params.sigma_mod);
        assert!((&leak - &expected).max_abs() < 1e-12);
    }
}
