//! Uncertain plant, reference model and baseline controller.

use crate::error::{contract, Error, Result};
use crate::linalg::{self, Mat};

/// Known regressor map `Φ(x)` of the matched uncertainty `Δ = ΘᵀΦ(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regressor {
    /// `[x₁, x₂, |x₁|x₂, |x₂|x₂, x₁³]` for the two-state roll dynamics.
    WingRock,
    /// `Φ(x) = x`.
    State,
}

impl Regressor {
    pub fn dim(&self, n: usize) -> usize {
        match self {
            Regressor::WingRock => 5,
            Regressor::State => n,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Regressor::WingRock => wing_rock_regressor(x).to_vec(),
            Regressor::State => x.to_vec(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regressor::WingRock => "wing_rock",
            Regressor::State => "state",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "wing_rock" => Some(Regressor::WingRock),
            "state" => Some(Regressor::State),
            _ => None,
        }
    }
}

pub fn wing_rock_regressor(x: &[f64]) -> [f64; 5] {
    let (x1, x2) = (x[0], x[1]);
    [x1, x2, x1.abs() * x2, x2.abs() * x2, x1 * x1 * x1]
}

/// One parameter jump `θ_j` applied at `t_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaJump {
    pub t: f64,
    pub delta: Mat,
}

/// Piecewise-constant `Θ(t) = Θ₀ + Σ_{t_j ≤ t} θ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSchedule {
    theta0: Mat,
    jumps: Vec<ThetaJump>,
}

impl ThetaSchedule {
    pub fn new(theta0: Mat, jumps: Vec<ThetaJump>, t0: f64) -> Result<Self> {
        let mut last = t0;
        for j in &jumps {
            if !(j.t > last) {
                return Err(contract(format!(
                    "jump times must be strictly increasing and after t0 = {t0}; got {}",
                    j.t
                )));
            }
            if j.delta.shape() != theta0.shape() {
                return Err(contract("jump increment shape differs from Θ₀"));
            }
            last = j.t;
        }
        Ok(Self { theta0, jumps })
    }

    pub fn constant(theta0: Mat) -> Self {
        Self {
            theta0,
            jumps: Vec::new(),
        }
    }

    pub fn theta0(&self) -> &Mat {
        &self.theta0
    }

    pub fn jumps(&self) -> &[ThetaJump] {
        &self.jumps
    }

    /// Right-continuous evaluation.
    pub fn theta_at(&self, t: f64) -> Mat {
        let mut theta = self.theta0.clone();
        for j in self.jumps.iter().take_while(|j| j.t <= t) {
            theta.add_scaled(&j.delta, 1.0);
        }
        theta
    }
}

/// `ẋ = Ax + B(u + Θᵀ(t)Φ(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainPlant {
    pub a: Mat,
    pub b: Mat,
    pub regressor: Regressor,
    pub theta: ThetaSchedule,
    pub x0: Vec<f64>,
}

impl UncertainPlant {
    pub fn new(a: Mat, b: Mat, regressor: Regressor, theta: ThetaSchedule, x0: Vec<f64>) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() {
            return Err(contract("plant A must be square"));
        }
        if b.rows() != n {
            return Err(contract("plant B must have as many rows as A"));
        }
        let m = b.cols();
        if m > n {
            return Err(contract("plant B must have m ≤ n columns"));
        }
        let btb = &b.transpose() * &b;
        if linalg::numerical_rank(&btb, 1e-12)? != m {
            return Err(Error::RankDeficient);
        }
        let p = regressor.dim(n);
        if theta.theta0().shape() != (p, m) {
            return Err(contract(format!("Θ must be {p}x{m}, got {:?}", theta.theta0().shape())));
        }
        if x0.len() != n {
            return Err(contract("x0 length must equal state dimension"));
        }
        Ok(Self {
            a,
            b,
            regressor,
            theta,
            x0,
        })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }

    pub fn p(&self) -> usize {
        self.regressor.dim(self.n())
    }

    /// `Ax + B(u + Θ(t)ᵀΦ(x))`.
    pub fn plant_derivative(&self, x: &[f64], u: &[f64], t: f64) -> Vec<f64> {
        let theta = self.theta.theta_at(t);
        let phi = self.regressor.eval(x);
        self.derivative_with(x, u, &theta, &phi)
    }

    /// Plant derivative for a given `Θ` and precomputed `Φ(x)`.
    pub fn derivative_with(&self, x: &[f64], u: &[f64], theta: &Mat, phi_x: &[f64]) -> Vec<f64> {
        let delta = theta.tr_mul_vec(phi_x);
        let forcing: Vec<f64> = u.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let mut dx = self.a.mul_vec(x);
        for (d, v) in dx.iter_mut().zip(self.b.mul_vec(&forcing)) {
            *d += v;
        }
        dx
    }
}

/// Right-continuous piecewise-constant reference `r(t)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferenceSchedule {
    steps: Vec<(f64, Vec<f64>)>,
}

impl ReferenceSchedule {
    pub fn new(steps: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if steps.is_empty() {
            return Err(contract("reference schedule is empty"));
        }
        let m = steps[0].1.len();
        for w in steps.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(contract("reference times must be strictly increasing"));
            }
        }
        if steps.iter().any(|(_, r)| r.len() != m) {
            return Err(contract("reference values must share one dimension"));
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[(f64, Vec<f64>)] {
        &self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Value at `t`; zero before the first scheduled step.
    pub fn value_at(&self, t: f64, m: usize) -> Vec<f64> {
        self.steps
            .iter()
            .take_while(|(tk, _)| *tk <= t)
            .last()
            .map(|(_, r)| r.clone())
            .unwrap_or_else(|| vec![0.0; m])
    }

    /// Change instants strictly after `t0`; each one triggers a filter reset.
    pub fn change_times(&self, t0: f64) -> Vec<f64> {
        self.steps.iter().map(|s| s.0).filter(|&t| t > t0).collect()
    }
}

/// Reference model, baseline gains and the Lyapunov pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSystem {
    pub a_ref: Mat,
    pub b_ref: Mat,
    pub schedule: ReferenceSchedule,
    pub k_x: Mat,
    pub k_r: Mat,
    pub p: Mat,
    pub q: Mat,
    pub x_ref0: Vec<f64>,
}

impl ReferenceSystem {
    pub fn with_schedule(mut self, schedule: ReferenceSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_initial_state(mut self, x_ref0: Vec<f64>) -> Self {
        self.x_ref0 = x_ref0;
        self
    }

    pub fn reference_at(&self, t: f64) -> Vec<f64> {
        self.schedule.value_at(t, self.b_ref.cols())
    }

    pub fn model_derivative(&self, x_ref: &[f64], r: &[f64]) -> Vec<f64> {
        let mut d = self.a_ref.mul_vec(x_ref);
        for (v, w) in d.iter_mut().zip(self.b_ref.mul_vec(r)) {
            *v += w;
        }
        d
    }

    /// `(‖A + BK_x − A_ref‖_F, ‖BK_r − B_ref‖_F)`.
    pub fn matching_residuals(&self, a: &Mat, b: &Mat) -> (f64, f64) {
        let ax = &(a + &(b * &self.k_x)) - &self.a_ref;
        let br = &(b * &self.k_r) - &self.b_ref;
        (ax.frobenius_norm(), br.frobenius_norm())
    }

    pub fn pb(&self, b: &Mat) -> Mat {
        &self.p * b
    }
}

/// LQ synthesis of `K_x`, DC-gain normalization of `K_r`, and the Lyapunov
/// solution `P` for `A_ref = A + B·K_x`.
///
/// `K_r` gives unit steady-state gain from `r` to the first `m` states:
/// `K_r = (−C·A_ref⁻¹·B)⁻¹` with `C` selecting those states. The returned
/// system has an empty schedule and a zero initial state.
pub fn synthesize_baseline(a: &Mat, b: &Mat, q_lq: &Mat, r_lq: &Mat, q_lyap: &Mat) -> Result<ReferenceSystem> {
    let n = a.rows();
    let m = b.cols();
    let (_, gain) = linalg::solve_care(a, b, q_lq, r_lq)?;
    let k_x = gain.scale(-1.0);
    let a_ref = a + &(b * &k_x);
    let p = linalg::solve_lyapunov(&a_ref, q_lyap)?;
    let z = linalg::solve(&a_ref, b)?;
    let mut dc = Mat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            dc[(i, j)] = -z[(i, j)];
        }
    }
    let k_r = linalg::inverse(&dc)?;
    let b_ref = b * &k_r;
    Ok(ReferenceSystem {
        a_ref,
        b_ref,
        schedule: ReferenceSchedule::default(),
        k_x,
        k_r,
        p,
        q: q_lyap.clone(),
        x_ref0: vec![0.0; n],
    })
}

/// `u = K_x·x + K_r·r − Θ̂ᵀ·Φ(x)`.
pub fn control_input(k_x: &Mat, k_r: &Mat, theta_hat: &Mat, x: &[f64], phi_x: &[f64], r: &[f64]) -> Vec<f64> {
    let ad = theta_hat.tr_mul_vec(phi_x);
    k_x.mul_vec(x)
        .iter()
        .zip(k_r.mul_vec(r))
        .zip(ad)
        .map(|((a, b), c)| a + b - c)
        .collect()
}

/// Wing-rock roll dynamics and its published parameter schedule.
pub mod wing_rock {
    use super::*;

    pub const THETA0: [f64; 5] = [3.63, -8.58, 20.2, -21.9, -51.88];
    pub const THETA1: [f64; 5] = [-22.22, 23.74, -82.66, 31.45, 73.33];
    pub const FIRST_JUMP: f64 = 4.0;
    pub const SECOND_JUMP: f64 = 17.0;
    pub const PB: [f64; 2] = [9.45, 4.43];

    pub fn a() -> Mat {
        Mat::from_rows(&[[0.0, 1.0], [0.0, 0.0]])
    }

    pub fn b() -> Mat {
        Mat::from_rows(&[[0.0], [1.0]])
    }

    pub fn q_lq() -> Mat {
        Mat::diag(&[2800.0, 1.0])
    }

    pub fn r_lq() -> Mat {
        Mat::from_rows(&[[100.0]])
    }

    pub fn q_lyap() -> Mat {
        Mat::diag(&[100.0, 10.0])
    }

    pub fn theta0() -> Mat {
        Mat::column(&THETA0)
    }

    pub fn theta1() -> Mat {
        Mat::column(&THETA1)
    }

    /// `θ₁` at `t = 4` and `θ₂ = −θ₁` at `t = 17`.
    pub fn jumps() -> Vec<ThetaJump> {
        jumps_at(&[FIRST_JUMP, SECOND_JUMP])
    }

    /// Alternating `θ₁, −θ₁, θ₁, …` at the given instants.
    pub fn jumps_at(times: &[f64]) -> Vec<ThetaJump> {
        times
            .iter()
            .enumerate()
            .map(|(i, &t)| ThetaJump {
                t,
                delta: theta1().scale(if i % 2 == 0 { 1.0 } else { -1.0 }),
            })
            .collect()
    }

    /// Square wave: 1 on [0, 8), 0 on [8, 16), 1 on [16, 24].
    pub fn reference_schedule() -> ReferenceSchedule {
        ReferenceSchedule::new(vec![(0.0, vec![1.0]), (8.0, vec![0.0]), (16.0, vec![1.0])]).expect("static schedule")
    }

    pub fn plant_with_jumps(jumps: Vec<ThetaJump>) -> Result<UncertainPlant> {
        UncertainPlant::new(
            a(),
            b(),
            Regressor::WingRock,
            ThetaSchedule::new(theta0(), jumps, 0.0)?,
            vec![0.0, 0.0],
        )
    }

    pub fn plant() -> Result<UncertainPlant> {
        plant_with_jumps(jumps())
    }

    pub fn reference() -> Result<ReferenceSystem> {
        Ok(synthesize_baseline(&a(), &b(), &q_lq(), &r_lq(), &q_lyap())?.with_schedule(reference_schedule()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_schedule_examples() {
        let s = ThetaSchedule::new(wing_rock::theta0(), wing_rock::jumps(), 0.0).unwrap();
        assert_eq!(s.theta_at(2.0), wing_rock::theta0());
        let expect = &wing_rock::theta0() + &wing_rock::theta1();
        assert_eq!(s.theta_at(10.0), expect);
        assert!((&s.theta_at(20.0) - &wing_rock::theta0()).max_abs() < 1e-12);
    }

    #[test]
    fn theta_schedule_right_continuous() {
        let s = ThetaSchedule::new(wing_rock::theta0(), wing_rock::jumps(), 0.0).unwrap();
        assert_eq!(s.theta_at(4.0 - 1e-12), wing_rock::theta0());
        assert_eq!(s.theta_at(4.0), &wing_rock::theta0() + &wing_rock::theta1());
    }

    #[test]
    fn theta_schedule_validates_order() {
        let jumps = wing_rock::jumps_at(&[5.0, 3.0]);
        assert!(ThetaSchedule::new(wing_rock::theta0(), jumps, 0.0).is_err());
        let jumps = wing_rock::jumps_at(&[0.0]);
        assert!(ThetaSchedule::new(wing_rock::theta0(), jumps, 0.0).is_err());
    }

    #[test]
    fn reference_examples() {
        let r = wing_rock::reference_schedule();
        assert_eq!(r.value_at(2.0, 1), vec![1.0]);
        assert_eq!(r.value_at(10.0, 1), vec![0.0]);
        assert_eq!(r.value_at(20.0, 1), vec![1.0]);
        assert_eq!(r.change_times(0.0), vec![8.0, 16.0]);
    }

    #[test]
    fn regressor_examples() {
        assert_eq!(wing_rock_regressor(&[0.0, 0.0]), [0.0; 5]);
        assert_eq!(wing_rock_regressor(&[1.0, 1.0]), [1.0; 5]);
        assert_eq!(wing_rock_regressor(&[-2.0, 3.0]), [-2.0, 3.0, 6.0, 9.0, -8.0]);
    }

    #[test]
    fn plant_derivative_wing_rock_example() {
        let plant = wing_rock::plant().unwrap();
        let d = plant.plant_derivative(&[1.0, 0.0], &[0.0], 2.0);
        assert_eq!(d[0], 0.0);
        assert!((d[1] - (3.63 - 51.88)).abs() < 1e-12);
    }

    #[test]
    fn plant_derivative_zero() {
        let plant = UncertainPlant::new(
            wing_rock::a(),
            wing_rock::b(),
            Regressor::WingRock,
            ThetaSchedule::constant(Mat::zeros(5, 1)),
            vec![0.0; 2],
        )
        .unwrap();
        assert_eq!(plant.plant_derivative(&[0.0, 0.0], &[0.0], 0.0), vec![0.0, 0.0]);
    }

    #[test]
    fn plant_rejects_rank_deficient_b() {
        let b = Mat::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        let err = UncertainPlant::new(
            Mat::identity(2),
            b,
            Regressor::State,
            ThetaSchedule::constant(Mat::zeros(2, 2)),
            vec![0.0; 2],
        );
        assert_eq!(err, Err(Error::RankDeficient));
    }

    #[test]
    fn baseline_wing_rock_gains_and_pb() {
        let sys = wing_rock::reference().unwrap();
        // closed-form 2x2 CARE: p12 = sqrt(R q11), p22 = sqrt(R (2 p12 + q22))
        let p12 = (100.0f64 * 2800.0).sqrt();
        let p22 = (100.0 * (2.0 * p12 + 1.0)).sqrt();
        assert!((sys.k_x[(0, 0)] + p12 / 100.0).abs() < 1e-9);
        assert!((sys.k_x[(0, 1)] + p22 / 100.0).abs() < 1e-9);
        assert!((sys.k_x[(0, 0)] + 5.2915).abs() < 1e-4);
        assert!((sys.k_x[(0, 1)] + 3.2547).abs() < 1e-4);
        assert!((sys.k_r[(0, 0)] - p12 / 100.0).abs() < 1e-9);
        let pb = sys.pb(&wing_rock::b());
        assert!((pb[(0, 0)] - 9.45).abs() <= 0.01 * 9.45);
        assert!((pb[(1, 0)] - 4.43).abs() <= 0.01 * 4.43);
        let (rx, rr) = sys.matching_residuals(&wing_rock::a(), &wing_rock::b());
        assert!(rx <= 1e-9 && rr <= 1e-9);
    }

    #[test]
    fn baseline_stable_plant_example() {
        let a = Mat::identity(2).scale(-1.0);
        let b = Mat::identity(2);
        let sys = synthesize_baseline(&a, &b, &Mat::identity(2), &Mat::identity(2), &Mat::identity(2)).unwrap();
        assert!(linalg::is_hurwitz(&sys.a_ref).unwrap());
        let (rx, rr) = sys.matching_residuals(&a, &b);
        assert!(rx <= 1e-9 && rr <= 1e-9);
        let (p_lq, _) = linalg::solve_care(&a, &b, &Mat::identity(2), &Mat::identity(2)).unwrap();
        let resid = linalg::care_residual(&a, &b, &Mat::identity(2), &Mat::identity(2), &p_lq);
        assert!(resid <= 1e-9);
    }

    #[test]
    fn control_input_examples() {
        let sys = wing_rock::reference().unwrap();
        let th = Mat::zeros(5, 1);
        let u = control_input(&sys.k_x, &sys.k_r, &th, &[0.0, 0.0], &[0.0; 5], &[1.0]);
        assert!((u[0] - sys.k_r[(0, 0)]).abs() < 1e-15);
        let u = control_input(&sys.k_x, &sys.k_r, &wing_rock::theta0(), &[0.0, 0.0], &[0.0; 5], &[0.0]);
        assert_eq!(u, vec![0.0]);
    }

    #[test]
    fn exact_compensation_recovers_reference_model() {
        let plant = wing_rock::plant().unwrap();
        let sys = wing_rock::reference().unwrap();
        let x = [0.7, -1.3];
        let r = [1.0];
        let theta = plant.theta.theta_at(2.0);
        let phi = wing_rock_regressor(&x);
        let u = control_input(&sys.k_x, &sys.k_r, &theta, &x, &phi, &r);
        let dx = plant.plant_derivative(&x, &u, 2.0);
        let dref = sys.model_derivative(&x, &r);
        for (a, b) in dx.iter().zip(&dref) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
