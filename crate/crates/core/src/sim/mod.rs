//! Fixed-step hybrid simulation of the closed loop.
//!
//! The continuous state is packed into one vector and advanced with RK4.
//! Reference switches, filter resets and parameter jumps are applied after
//! the step that ends at their scheduled instant; `Θ(t)` and `r(t)` are held
//! constant across each step.

pub mod diagnostics;
pub mod rk4;
pub mod trajectory;

use crate::error::{Error, Result};
use crate::filters::{self, FilterBank, FilterGains, MemoryBank, PlantView};
use crate::laws::{self, FeTracker, LawKind, LawParams, Regression, SwitchLatch};
use crate::linalg::{self, Mat};
use crate::system::{self, wing_rock, ReferenceSystem, UncertainPlant};

pub use diagnostics::{compute_bounds, decay_rate, fe_level, BoundInputs, BoundReport, DecayFit};
pub use rk4::{rk4_step, rk4_step_in_place, FnSystem, OdeSystem, Rk4Workspace};
pub use trajectory::{Record, RecordDiagnostics, Trajectory};

/// Complete description of one closed-loop experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plant: UncertainPlant,
    pub reference: ReferenceSystem,
    pub filter: FilterGains,
    pub law: LawKind,
    pub params: LawParams,
    pub theta_hat0: Mat,
    pub t0: f64,
    pub t_end: f64,
    pub step: f64,
    pub decimation: usize,
}

impl Scenario {
    /// The wing-rock experiment on `[0, 24]` with `h = 1e-4`.
    pub fn wing_rock(law: LawKind) -> Result<Self> {
        Ok(Self {
            plant: wing_rock::plant()?,
            reference: wing_rock::reference()?,
            filter: FilterGains::default(),
            law,
            params: LawParams::wing_rock(5),
            theta_hat0: Mat::zeros(5, 1),
            t0: 0.0,
            t_end: 24.0,
            step: 1e-4,
            decimation: 100,
        })
    }

    pub fn with_law(mut self, law: LawKind) -> Self {
        self.law = law;
        self
    }

    /// Number of integration steps.
    pub fn steps(&self) -> usize {
        ((self.t_end - self.t0) / self.step).round() as usize
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.step
    }

    /// Filter reset instants inside `(t0, t_end)`.
    pub fn reset_times(&self) -> Vec<f64> {
        self.reference
            .schedule
            .change_times(self.t0)
            .into_iter()
            .filter(|t| *t < self.t_end)
            .collect()
    }

    /// Inter-reset intervals `[t_r, t_next)` covering `[t0, t_end]`.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let mut starts = vec![self.t0];
        starts.extend(self.reset_times());
        let ends = starts[1..].iter().copied().chain([self.t_end]);
        starts.iter().copied().zip(ends).collect()
    }

    /// Step index of `t`, if `t` lies on the grid.
    fn grid_index(&self, t: f64) -> Option<usize> {
        let k = ((t - self.t0) / self.step).round();
        let tol = 1e-9 * (1.0 + t.abs());
        (k >= 0.0 && (self.t0 + k * self.step - t).abs() <= tol).then_some(k as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        let (n, m, p) = (self.plant.n(), self.plant.m(), self.plant.p());
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if !(self.t_end > self.t0) {
            return bad("t_end must exceed t0".into());
        }
        let ratio = (self.t_end - self.t0) / self.step;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return bad("horizon is not an integer number of steps".into());
        }
        if self.decimation == 0 {
            return bad("decimation must be at least 1".into());
        }
        if self.theta_hat0.shape() != (p, m) {
            return bad(format!("theta_hat0 must be {p}x{m}"));
        }
        let r = &self.reference;
        if r.a_ref.shape() != (n, n) || r.b_ref.shape() != (n, m) || r.p.shape() != (n, n) {
            return bad("reference model dimensions do not match the plant".into());
        }
        if r.k_x.shape() != (m, n) || r.k_r.shape() != (m, m) || r.x_ref0.len() != n {
            return bad("baseline gain dimensions do not match the plant".into());
        }
        if r.schedule.is_empty() {
            return bad("reference schedule is empty".into());
        }
        if r.schedule.steps().iter().any(|(_, v)| v.len() != m) {
            return bad(format!("reference values must have {m} entries"));
        }
        self.filter.validate()?;
        self.params.validate(p)?;
        for t in r.schedule.change_times(self.t0) {
            if t < self.t_end && self.grid_index(t).is_none() {
                return bad(format!("reference change at {t} is not on the step grid"));
            }
        }
        for j in self.plant.theta.jumps() {
            if j.t < self.t_end && self.grid_index(j.t).is_none() {
                return bad(format!("parameter jump at {} is not on the step grid", j.t));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Layout {
    n: usize,
    m: usize,
    p: usize,
    x: usize,
    x_ref: usize,
    bank: usize,
    theta_hat: usize,
    gamma2: usize,
    mem: Option<usize>,
    gram: Option<usize>,
    len: usize,
    blocks: Vec<(&'static str, usize)>,
}

#[derive(Default)]
struct LayoutBuilder {
    at: usize,
    blocks: Vec<(&'static str, usize)>,
}

impl LayoutBuilder {
    fn push(&mut self, name: &'static str, len: usize) -> usize {
        let start = self.at;
        self.blocks.push((name, start));
        self.at += len;
        start
    }
}

impl Layout {
    fn new(n: usize, m: usize, p: usize, law: LawKind) -> Self {
        let mut b = LayoutBuilder::default();
        let x = b.push("x", n);
        let x_ref = b.push("x_ref", n);
        let bank = b.at;
        for (name, len) in FilterBank::block_layout(n, m, p) {
            b.push(name, len);
        }
        let theta_hat = b.push("theta_hat", p * m);
        let gamma2 = b.push("gamma2", 1);
        let mem = law.uses_memory_bank().then(|| {
            let start = b.at;
            for (name, len) in MemoryBank::block_layout(n, m, p) {
                b.push(name, len);
            }
            start
        });
        let gram = (law == LawKind::Switched).then(|| b.push("gram", p * p));
        Self {
            n,
            m,
            p,
            x,
            x_ref,
            bank,
            theta_hat,
            gamma2,
            mem,
            gram,
            len: b.at,
            blocks: b.blocks,
        }
    }

    fn block_of(&self, idx: usize) -> &'static str {
        self.blocks
            .iter()
            .rev()
            .find(|(_, start)| *start <= idx)
            .map(|(name, _)| *name)
            .unwrap_or("state")
    }
}

/// Everything the vector field needs at one `(t, y)`.
struct Eval {
    x: Vec<f64>,
    x_ref: Vec<f64>,
    e_ref: Vec<f64>,
    phi_x: Vec<f64>,
    u: Vec<f64>,
    u_ad: Vec<f64>,
    x_dot: Vec<f64>,
    x_ref_dot: Vec<f64>,
    bank: FilterBank,
    theta_hat: Mat,
    gamma2: f64,
    mem: Option<MemoryBank>,
    gram: Option<Mat>,
}

/// The closed loop as an [`OdeSystem`] plus its discrete state.
struct ClosedLoop<'a> {
    sc: &'a Scenario,
    lay: Layout,
    pb: Mat,
    b_pinv: Mat,
    theta_cur: Mat,
    r_cur: Vec<f64>,
    bank: FilterBank,
    mem: Option<MemoryBank>,
    latch: SwitchLatch,
    tracker: FeTracker,
}

impl<'a> ClosedLoop<'a> {
    fn new(sc: &'a Scenario) -> Result<(Self, Vec<f64>)> {
        let (n, m, p) = (sc.plant.n(), sc.plant.m(), sc.plant.p());
        let lay = Layout::new(n, m, p, sc.law);
        let e0: Vec<f64> = sc
            .plant
            .x0
            .iter()
            .zip(&sc.reference.x_ref0)
            .map(|(a, b)| a - b)
            .collect();
        let bank = FilterBank::new(n, m, p, sc.filter, &e0, sc.t0);
        let mem = sc
            .law
            .uses_memory_bank()
            .then(|| MemoryBank::new(n, m, p, sc.filter.k, &e0, sc.t0));
        let lp = Self {
            sc,
            pb: sc.reference.pb(&sc.plant.b),
            b_pinv: filters::b_pseudo_inverse(&sc.plant.b)?,
            theta_cur: sc.plant.theta.theta_at(sc.t0),
            r_cur: sc.reference.reference_at(sc.t0),
            bank,
            mem,
            latch: SwitchLatch::new(p, m),
            tracker: FeTracker::new(p, m),
            lay,
        };
        let mut y = vec![0.0; lp.lay.len];
        y[lp.lay.x..lp.lay.x + n].copy_from_slice(&sc.plant.x0);
        y[lp.lay.x_ref..lp.lay.x_ref + n].copy_from_slice(&sc.reference.x_ref0);
        y[lp.lay.theta_hat..lp.lay.theta_hat + p * m].copy_from_slice(sc.theta_hat0.data());
        y[lp.lay.gamma2] = sc.params.gamma2_0;
        Ok((lp, y))
    }

    fn view(&self) -> PlantView<'_> {
        PlantView {
            a_ref: &self.sc.reference.a_ref,
            b: &self.sc.plant.b,
            b_pinv: &self.b_pinv,
        }
    }

    fn unpack(&self, y: &[f64]) -> Result<Eval> {
        let Layout { n, m, p, .. } = self.lay;
        let sc = self.sc;
        let x = y[self.lay.x..self.lay.x + n].to_vec();
        let x_ref = y[self.lay.x_ref..self.lay.x_ref + n].to_vec();
        let e_ref: Vec<f64> = x.iter().zip(&x_ref).map(|(a, b)| a - b).collect();
        let theta_hat = Mat::from_raw(p, m, y[self.lay.theta_hat..self.lay.theta_hat + p * m].to_vec());
        let gamma2 = y[self.lay.gamma2];
        let phi_x = sc.plant.regressor.eval(&x);
        let r = &sc.reference;
        let u = system::control_input(&r.k_x, &r.k_r, &theta_hat, &x, &phi_x, &self.r_cur);
        let u_ad = theta_hat.tr_mul_vec(&phi_x);
        let x_dot = sc.plant.derivative_with(&x, &u, &self.theta_cur, &phi_x);
        let x_ref_dot = r.model_derivative(&x_ref, &self.r_cur);
        let mut bank = self.bank.clone();
        bank.read_state(&y[self.lay.bank..self.lay.bank + FilterBank::state_len(n, m, p)]);
        let mem = match (&self.mem, self.lay.mem) {
            (Some(proto), Some(at)) => {
                let mut mb = proto.clone();
                mb.read_state(&y[at..at + MemoryBank::state_len(n, m, p)]);
                Some(mb)
            }
            _ => None,
        };
        let gram = self.lay.gram.map(|at| Mat::from_raw(p, p, y[at..at + p * p].to_vec()));
        Ok(Eval {
            x,
            x_ref,
            e_ref,
            phi_x,
            u,
            u_ad,
            x_dot,
            x_ref_dot,
            bank,
            theta_hat,
            gamma2,
            mem,
            gram,
        })
    }

    /// Forgetting factor of the memory bank for the active law.
    fn memory_forgetting(&self, ev: &Eval, mb: &MemoryBank) -> Result<f64> {
        let pr = &self.sc.params;
        Ok(match self.sc.law {
            LawKind::FeCmrac => {
                let rate = mb.phi_f_rate(&ev.phi_x);
                laws::tanh_forgetting(pr.l_m, pr.l_max, pr.vartheta, linalg::norm(&rate))
            }
            LawKind::El => {
                let lam = linalg::sym_eig_min(&mb.phi.symmetrized())?;
                laws::eigen_forgetting(pr.l0, pr.lambda_lb, pr.lambda_ub, lam)
            }
            LawKind::DfCl => pr.l_df,
            LawKind::Switched => pr.l_sw,
            _ => self.sc.filter.l,
        })
    }

    fn l_var(&self, ev: &Eval) -> Result<f64> {
        match &ev.mem {
            Some(mb) => self.memory_forgetting(ev, mb),
            None => Ok(self.sc.filter.l),
        }
    }

    fn record(&self, t: f64, y: &[f64]) -> Result<Record> {
        let ev = self.unpack(y)?;
        let view = self.view();
        let bank = &ev.bank;
        let delta_f = bank.filtered_uncertainty(&ev.e_ref, &view, t);
        let mix = bank.mix()?;
        let theta_tilde = &self.theta_cur - &ev.theta_hat;
        let k = bank.gains.k;
        let decay = (-k * (t - bank.t_reset)).exp();
        let mu_res: Vec<f64> = (0..self.lay.n)
            .map(|i| bank.mu_f[i] - (ev.e_ref[i] - k * bank.e_f[i] - decay * bank.e_ref_latch[i]))
            .collect();
        let eig = linalg::sym_eigen(&bank.phi.symmetrized())?;
        Ok(Record {
            t,
            l_var: self.l_var(&ev)?,
            theta: self.theta_cur.clone(),
            theta_tilde,
            omega: mix.omega,
            omega_big: bank.omega_big,
            gamma2: ev.gamma2,
            reset_flag: false,
            jump_flag: false,
            diag: RecordDiagnostics {
                theta_phi_f: self.theta_cur.tr_mul_vec(&bank.phi_f),
                delta_f,
                y_mixed: mix.y_mixed,
                mu_f_residual: linalg::norm(&mu_res),
                phi_eig_min: eig.values[0],
                phi_eig_max: *eig.values.last().expect("p ≥ 1"),
                phi_asymmetry: bank.phi.asymmetry(),
                t_reset: bank.t_reset,
            },
            x: ev.x,
            x_ref: ev.x_ref,
            e_ref: ev.e_ref,
            u: ev.u,
            u_ad: ev.u_ad,
            theta_hat: ev.theta_hat,
        })
    }

    /// Post-step bookkeeping that is not an event: Γ₂ cap, latch, tracker.
    fn settle(&mut self, t: f64, y: &mut [f64]) -> Result<()> {
        let cap = self.sc.params.gamma2_cap;
        if y[self.lay.gamma2] > cap {
            y[self.lay.gamma2] = cap;
        }
        let Layout { n, m, p, .. } = self.lay;
        if let (Some(proto), Some(at)) = (&self.mem, self.lay.mem) {
            let mut mb = proto.clone();
            mb.read_state(&y[at..at + MemoryBank::state_len(n, m, p)]);
            match self.sc.law {
                LawKind::Switched => {
                    let g_at = self.lay.gram.expect("switched law carries a gram block");
                    let gram = Mat::from_raw(p, p, y[g_at..g_at + p * p].to_vec());
                    self.latch.observe(&gram, &mb.y, &mb.phi, t, self.sc.params.latch_rel)?;
                }
                LawKind::FeCmrac => {
                    self.tracker.observe(&mb.y, &mb.phi, t)?;
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn apply_reset(&mut self, t: f64, y: &mut [f64]) {
        let n = self.lay.n;
        let e: Vec<f64> = (0..n).map(|i| y[self.lay.x + i] - y[self.lay.x_ref + i]).collect();
        self.bank.reset(&e, t);
        let len = FilterBank::state_len(n, self.lay.m, self.lay.p);
        y[self.lay.bank..self.lay.bank + len].fill(0.0);
    }
}

impl OdeSystem for ClosedLoop<'_> {
    fn dim(&self) -> usize {
        self.lay.len
    }

    fn block_of(&self, idx: usize) -> &'static str {
        self.lay.block_of(idx)
    }

    fn derivative(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let Layout { n, m, p, .. } = self.lay;
        let ev = self.unpack(y)?;
        let view = self.view();
        let e_dot: Vec<f64> = ev.x_dot.iter().zip(&ev.x_ref_dot).map(|(a, b)| a - b).collect();

        dy[self.lay.x..self.lay.x + n].copy_from_slice(&ev.x_dot);
        dy[self.lay.x_ref..self.lay.x_ref + n].copy_from_slice(&ev.x_ref_dot);

        let (bd, _) = ev
            .bank
            .derivative(&ev.e_ref, &e_dot, &ev.u_ad, &ev.phi_x, self.sc.filter.l, &view, t)?;
        let mut deriv_bank = ev.bank.clone();
        deriv_bank.mu_f = bd.mu_f;
        deriv_bank.e_f = bd.e_f;
        deriv_bank.u_adf = bd.u_adf;
        deriv_bank.phi_f = bd.phi_f;
        deriv_bank.y = bd.y;
        deriv_bank.phi = bd.phi;
        deriv_bank.upsilon = bd.upsilon;
        deriv_bank.omega_big = bd.omega_big;
        deriv_bank.write_state(&mut dy[self.lay.bank..self.lay.bank + FilterBank::state_len(n, m, p)]);

        let pr = &self.sc.params;
        let mut gamma2_rate = 0.0;
        let theta_rate = match self.sc.law {
            LawKind::Proposed => {
                let r = laws::proposed_update(
                    pr,
                    &ev.theta_hat,
                    ev.gamma2,
                    &ev.phi_x,
                    &ev.e_ref,
                    &self.pb,
                    &ev.bank.upsilon,
                    ev.bank.omega_big,
                );
                gamma2_rate = r.gamma2;
                r.theta_hat
            }
            LawKind::Mrac => laws::mrac_update(&pr.gamma1, &ev.phi_x, &ev.e_ref, &self.pb),
            LawKind::SigmaMod => {
                laws::sigma_mod_update(&pr.gamma1, pr.sigma_mod, &ev.theta_hat, &ev.phi_x, &ev.e_ref, &self.pb)
            }
            LawKind::Switched | LawKind::FeCmrac | LawKind::DfCl | LawKind::El => {
                let mb = ev.mem.as_ref().expect("memory bank present");
                let at = self.lay.mem.expect("memory bank layout present");
                let delta_f = mb.filtered_uncertainty(&ev.e_ref, &view, t);
                let l = self.memory_forgetting(&ev, mb)?;
                let ext = if self.sc.law == LawKind::DfCl {
                    laws::directional_forgetting(&mb.y, &mb.phi, &mb.phi_f, &delta_f, l, pr.eps_rank, pr.eps_div)?
                } else {
                    laws::uniform_forgetting(&mb.y, &mb.phi, &mb.phi_f, &delta_f, l)
                };
                let links = n + m + p;
                mb.write_link_rates(&ev.e_ref, &ev.u_ad, &ev.phi_x, &mut dy[at..at + links]);
                dy[at + links..at + links + p * m].copy_from_slice(ext.y.data());
                dy[at + links + p * m..at + links + p * m + p * p].copy_from_slice(ext.phi.data());
                if let (Some(g_at), Some(_)) = (self.lay.gram, &ev.gram) {
                    dy[g_at..g_at + p * p].copy_from_slice(Mat::outer(&mb.phi_f, &mb.phi_f).data());
                }
                match self.sc.law {
                    LawKind::Switched => laws::switched_update(
                        pr,
                        &ev.theta_hat,
                        &ev.phi_x,
                        &ev.e_ref,
                        &self.pb,
                        Regression {
                            delta_f: &delta_f,
                            phi_f: &mb.phi_f,
                            y: &mb.y,
                            phi: &mb.phi,
                        },
                        &self.latch,
                    ),
                    LawKind::FeCmrac => {
                        laws::fe_cmrac_update(pr, &ev.theta_hat, &ev.phi_x, &ev.e_ref, &self.pb, &self.tracker)
                    }
                    LawKind::DfCl => laws::composite_update(
                        &pr.gamma1,
                        pr.gamma2_df,
                        &ev.theta_hat,
                        &ev.phi_x,
                        &ev.e_ref,
                        &self.pb,
                        &mb.y,
                        &mb.phi,
                    ),
                    _ => laws::composite_update(
                        &pr.gamma1,
                        pr.gamma2_el,
                        &ev.theta_hat,
                        &ev.phi_x,
                        &ev.e_ref,
                        &self.pb,
                        &mb.y,
                        &mb.phi,
                    ),
                }
            }
        };
        dy[self.lay.theta_hat..self.lay.theta_hat + p * m].copy_from_slice(theta_rate.data());
        dy[self.lay.gamma2] = gamma2_rate;
        Ok(())
    }
}

/// Lightweight per-step view handed to a probe.
#[derive(Debug, Clone, Copy)]
pub struct ProbeSample<'a> {
    pub t: f64,
    pub omega_big: f64,
    pub gamma2: f64,
    pub theta: &'a Mat,
    pub theta_hat: &'a [f64],
    /// A reset was applied at this step.
    pub reset: bool,
    pub jump: bool,
}

/// Runs the scenario and returns the decimated trajectory.
pub fn run(sc: &Scenario) -> Result<Trajectory> {
    run_with_probe(sc, |_| {})
}

/// Like [`run`], calling `probe` after every integration step (and once at
/// `t0`) with post-event values.
pub fn run_with_probe(sc: &Scenario, mut probe: impl FnMut(&ProbeSample<'_>)) -> Result<Trajectory> {
    sc.validate()?;
    let (mut lp, mut y) = ClosedLoop::new(sc)?;
    let steps = sc.steps();
    let mut ws = Rk4Workspace::new(y.len());

    let mut resets: Vec<(usize, f64)> = sc
        .reference
        .schedule
        .change_times(sc.t0)
        .into_iter()
        .filter(|t| *t < sc.t_end + 0.5 * sc.step)
        .filter_map(|t| sc.grid_index(t).map(|i| (i, t)))
        .collect();
    resets.dedup_by_key(|e| e.0);
    let mut jumps: Vec<(usize, f64)> = sc
        .plant
        .theta
        .jumps()
        .iter()
        .filter(|j| j.t > sc.t0 && j.t < sc.t_end + 0.5 * sc.step)
        .filter_map(|j| sc.grid_index(j.t).map(|i| (i, j.t)))
        .collect();
    jumps.dedup_by_key(|e| e.0);

    let mut traj = Trajectory {
        law: sc.law,
        step: sc.step,
        decimation: sc.decimation,
        records: Vec::with_capacity(steps / sc.decimation + 1),
        resets: Vec::new(),
        jumps: Vec::new(),
        pre_event: Vec::new(),
        latch_time: None,
    };
    let (th_at, pm) = (lp.lay.theta_hat, sc.plant.p() * sc.plant.m());
    traj.records.push(lp.record(sc.t0, &y)?);
    probe(&ProbeSample {
        t: sc.t0,
        omega_big: y[lp.lay.bank + FilterBank::state_len(lp.lay.n, lp.lay.m, lp.lay.p) - 1],
        gamma2: y[lp.lay.gamma2],
        theta: &lp.theta_cur,
        theta_hat: &y[th_at..th_at + pm],
        reset: false,
        jump: false,
    });

    let omega_idx = lp.lay.bank + FilterBank::state_len(lp.lay.n, lp.lay.m, lp.lay.p) - 1;
    let (mut ri, mut ji) = (0, 0);
    let (mut pending_reset, mut pending_jump) = (false, false);
    for i in 0..steps {
        let t = sc.time_at(i);
        let t_next = sc.time_at(i + 1);
        rk4_step_in_place(&lp, &mut y, t, sc.step, &mut ws)?;
        let is_reset = ri < resets.len() && resets[ri].0 == i + 1;
        let is_jump = ji < jumps.len() && jumps[ji].0 == i + 1;
        if is_reset || is_jump {
            traj.pre_event.push(lp.record(t_next, &y)?);
        }
        if is_jump {
            lp.theta_cur = sc.plant.theta.theta_at(jumps[ji].1);
            traj.jumps.push(t_next);
            ji += 1;
            pending_jump = true;
        }
        if is_reset {
            lp.r_cur = sc.reference.reference_at(resets[ri].1);
            lp.apply_reset(t_next, &mut y);
            traj.resets.push(t_next);
            ri += 1;
            pending_reset = true;
        }
        lp.settle(t_next, &mut y)?;
        probe(&ProbeSample {
            t: t_next,
            omega_big: y[omega_idx],
            gamma2: y[lp.lay.gamma2],
            theta: &lp.theta_cur,
            theta_hat: &y[th_at..th_at + pm],
            reset: is_reset,
            jump: is_jump,
        });
        if (i + 1) % sc.decimation == 0 {
            let mut rec = lp.record(t_next, &y)?;
            rec.reset_flag = pending_reset;
            rec.jump_flag = pending_jump;
            pending_reset = false;
            pending_jump = false;
            traj.records.push(rec);
        }
    }
    traj.latch_time = lp.latch.fired_at;
    Ok(traj)
}
