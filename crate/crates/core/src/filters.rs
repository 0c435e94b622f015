//! Resetting filtration pipeline.
//!
//! Four stages share one reset instant `t_r`:
//!
//! 1. aperiodic links `1/(s + k)` on `e_ref`, `u_ad` and `Φ(x)`, from which
//!    the filtered uncertainty `Δ_f = ΘᵀΦ_f` is reconstructed algebraically;
//! 2. Kreisselmeier extension `ẏ = −l·y + s·Φ_f·Δ_fᵀ`, `φ̇ = −l·φ + s·Φ_f·Φ_fᵀ`;
//! 3. mixing `ω = det φ`, `Y = adj(φ)·y`, which turns the matrix regression
//!    into `Y = ω·Θ`;
//! 4. an integrator with exponential forgetting that accumulates
//!    `Υ = ∫ w·ω·Y` and `Ω = ∫ w·ω²` with `w = exp(−σ(t − t_r))`.
//!
//! A reset zeroes every state and latches `e_ref(t_r)`.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Gains of the resetting filter bank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterGains {
    /// Aperiodic link bandwidth `k`.
    pub k: f64,
    /// Kreisselmeier forgetting `l`.
    pub l: f64,
    /// Integrator forgetting `σ`.
    pub sigma: f64,
    /// Regression scale `s` applied to the extension inputs.
    pub scale: f64,
}

impl Default for FilterGains {
    fn default() -> Self {
        Self {
            k: 10.0,
            l: 10.0,
            sigma: 5.0,
            scale: 1.0,
        }
    }
}

impl FilterGains {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k", self.k),
            ("l", self.l),
            ("sigma", self.sigma),
            ("scale", self.scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidScenario(format!(
                    "filter gain `{name}` must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Every state of the resetting filter bank plus its reset latch.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    /// Filtered `ė_ref`; a diagnostic, never used by a controller.
    pub mu_f: Vec<f64>,
    pub e_f: Vec<f64>,
    pub u_adf: Vec<f64>,
    pub phi_f: Vec<f64>,
    /// p×m
    pub y: Mat,
    /// p×p, symmetric PSD
    pub phi: Mat,
    /// p×m
    pub upsilon: Mat,
    /// Ω
    pub omega_big: f64,
    pub e_ref_latch: Vec<f64>,
    pub t_reset: f64,
    pub gains: FilterGains,
}

/// Time derivative of the continuous part of a [`FilterBank`].
#[derive(Debug, Clone, PartialEq)]
pub struct BankDerivative {
    pub mu_f: Vec<f64>,
    pub e_f: Vec<f64>,
    pub u_adf: Vec<f64>,
    pub phi_f: Vec<f64>,
    pub y: Mat,
    pub phi: Mat,
    pub upsilon: Mat,
    pub omega_big: f64,
}

/// Mixed regression `Y = ω·Θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixOutput {
    pub y_mixed: Mat,
    pub omega: f64,
}

/// Plant quantities the reconstruction of `Δ_f` needs.
#[derive(Debug, Clone)]
pub struct PlantView<'a> {
    pub a_ref: &'a Mat,
    pub b: &'a Mat,
    pub b_pinv: &'a Mat,
}

impl FilterBank {
    /// Zeroed bank for dimensions `(n, m, p)` with the latch at `e_ref0`.
    pub fn new(n: usize, m: usize, p: usize, gains: FilterGains, e_ref0: &[f64], t0: f64) -> Self {
        debug_assert_eq!(e_ref0.len(), n);
        Self {
            mu_f: vec![0.0; n],
            e_f: vec![0.0; n],
            u_adf: vec![0.0; m],
            phi_f: vec![0.0; p],
            y: Mat::zeros(p, m),
            phi: Mat::zeros(p, p),
            upsilon: Mat::zeros(p, m),
            omega_big: 0.0,
            e_ref_latch: e_ref0.to_vec(),
            t_reset: t0,
            gains,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.e_f.len(), self.u_adf.len(), self.phi_f.len())
    }

    /// Number of scalars in the continuous state.
    pub fn state_len(n: usize, m: usize, p: usize) -> usize {
        2 * n + m + p + 2 * p * m + p * p + 1
    }

    /// Named blocks of the packed state, in packing order.
    pub fn block_layout(n: usize, m: usize, p: usize) -> [(&'static str, usize); 8] {
        [
            ("mu_f", n),
            ("e_f", n),
            ("u_adf", m),
            ("phi_f", p),
            ("y", p * m),
            ("phi", p * p),
            ("upsilon", p * m),
            ("Omega", 1),
        ]
    }

    pub fn write_state(&self, out: &mut [f64]) {
        let mut w = Packer::new(out);
        w.put(&self.mu_f);
        w.put(&self.e_f);
        w.put(&self.u_adf);
        w.put(&self.phi_f);
        w.put(self.y.data());
        w.put(self.phi.data());
        w.put(self.upsilon.data());
        w.put(&[self.omega_big]);
    }

    pub fn read_state(&mut self, src: &[f64]) {
        let (n, m, p) = self.dims();
        let mut r = Unpacker::new(src);
        self.mu_f.copy_from_slice(r.take(n));
        self.e_f.copy_from_slice(r.take(n));
        self.u_adf.copy_from_slice(r.take(m));
        self.phi_f.copy_from_slice(r.take(p));
        self.y.data_mut().copy_from_slice(r.take(p * m));
        self.phi.data_mut().copy_from_slice(r.take(p * p));
        self.upsilon.data_mut().copy_from_slice(r.take(p * m));
        self.omega_big = r.take(1)[0];
    }

    /// Zeroes every filter state, latches `e_ref(t_r)` and moves `t_r`.
    pub fn reset(&mut self, e_ref_now: &[f64], t_now: f64) {
        self.mu_f.iter_mut().for_each(|v| *v = 0.0);
        self.e_f.iter_mut().for_each(|v| *v = 0.0);
        self.u_adf.iter_mut().for_each(|v| *v = 0.0);
        self.phi_f.iter_mut().for_each(|v| *v = 0.0);
        self.y.data_mut().iter_mut().for_each(|v| *v = 0.0);
        self.phi.data_mut().iter_mut().for_each(|v| *v = 0.0);
        self.upsilon.data_mut().iter_mut().for_each(|v| *v = 0.0);
        self.omega_big = 0.0;
        self.e_ref_latch.copy_from_slice(e_ref_now);
        self.t_reset = t_now;
    }

    /// Forgetting weight `exp(−σ(t − t_r))`.
    pub fn integrator_weight(&self, t: f64) -> f64 {
        (-self.gains.sigma * (t - self.t_reset)).exp()
    }

    /// `Δ_f` from the current aperiodic states.
    pub fn filtered_uncertainty(&self, e_ref: &[f64], plant: &PlantView<'_>, t: f64) -> Vec<f64> {
        reconstruct_uncertainty(
            &self.e_f,
            &self.u_adf,
            &self.e_ref_latch,
            self.t_reset,
            self.gains.k,
            e_ref,
            plant,
            t,
        )
    }

    pub fn mix(&self) -> Result<MixOutput> {
        drem_mix(&self.phi, &self.y)
    }

    /// Time derivative of the bank.
    ///
    /// `forget_rate` is the Kreisselmeier `l`; pass `gains.l` for the
    /// nominal bank. `e_ref_dot` only drives the diagnostic `μ_f`.
    #[allow(clippy::too_many_arguments)]
    pub fn derivative(
        &self,
        e_ref: &[f64],
        e_ref_dot: &[f64],
        u_ad: &[f64],
        phi_x: &[f64],
        forget_rate: f64,
        plant: &PlantView<'_>,
        t: f64,
    ) -> Result<(BankDerivative, BankSignals)> {
        let k = self.gains.k;
        let s = self.gains.scale;
        let delta_f = self.filtered_uncertainty(e_ref, plant, t);
        let mix = self.mix()?;
        let weight = self.integrator_weight(t);

        let mu_f = aperiodic(&self.mu_f, e_ref_dot, k);
        let e_f = aperiodic(&self.e_f, e_ref, k);
        let u_adf = aperiodic(&self.u_adf, u_ad, k);
        let phi_f = aperiodic(&self.phi_f, phi_x, k);

        let mut y = Mat::outer(&self.phi_f, &delta_f).scale(s);
        y.add_scaled(&self.y, -forget_rate);
        let mut phi = Mat::outer(&self.phi_f, &self.phi_f).scale(s);
        phi.add_scaled(&self.phi, -forget_rate);

        let wo = weight * mix.omega;
        let upsilon = mix.y_mixed.scale(wo);
        let omega_big = wo * mix.omega;

        Ok((
            BankDerivative {
                mu_f,
                e_f,
                u_adf,
                phi_f,
                y,
                phi,
                upsilon,
                omega_big,
            },
            BankSignals { delta_f, mix },
        ))
    }
}

/// Non-resetting aperiodic links plus Kreisselmeier states, used by the
/// comparison laws. The extension rates are supplied by the caller since
/// each law forgets differently.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBank {
    pub e_f: Vec<f64>,
    pub u_adf: Vec<f64>,
    pub phi_f: Vec<f64>,
    pub y: Mat,
    pub phi: Mat,
    pub e_ref_latch: Vec<f64>,
    pub t0: f64,
    pub k: f64,
}

impl MemoryBank {
    pub fn new(n: usize, m: usize, p: usize, k: f64, e_ref0: &[f64], t0: f64) -> Self {
        Self {
            e_f: vec![0.0; n],
            u_adf: vec![0.0; m],
            phi_f: vec![0.0; p],
            y: Mat::zeros(p, m),
            phi: Mat::zeros(p, p),
            e_ref_latch: e_ref0.to_vec(),
            t0,
            k,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.e_f.len(), self.u_adf.len(), self.phi_f.len())
    }

    pub fn state_len(n: usize, m: usize, p: usize) -> usize {
        n + m + p + p * m + p * p
    }

    pub fn block_layout(n: usize, m: usize, p: usize) -> [(&'static str, usize); 5] {
        [
            ("mem.e_f", n),
            ("mem.u_adf", m),
            ("mem.phi_f", p),
            ("mem.y", p * m),
            ("mem.phi", p * p),
        ]
    }

    pub fn write_state(&self, out: &mut [f64]) {
        let mut w = Packer::new(out);
        w.put(&self.e_f);
        w.put(&self.u_adf);
        w.put(&self.phi_f);
        w.put(self.y.data());
        w.put(self.phi.data());
    }

    pub fn read_state(&mut self, src: &[f64]) {
        let (n, m, p) = self.dims();
        let mut r = Unpacker::new(src);
        self.e_f.copy_from_slice(r.take(n));
        self.u_adf.copy_from_slice(r.take(m));
        self.phi_f.copy_from_slice(r.take(p));
        self.y.data_mut().copy_from_slice(r.take(p * m));
        self.phi.data_mut().copy_from_slice(r.take(p * p));
    }

    pub fn filtered_uncertainty(&self, e_ref: &[f64], plant: &PlantView<'_>, t: f64) -> Vec<f64> {
        reconstruct_uncertainty(
            &self.e_f,
            &self.u_adf,
            &self.e_ref_latch,
            self.t0,
            self.k,
            e_ref,
            plant,
            t,
        )
    }

    /// `Φ̇_f` for the current state.
    pub fn phi_f_rate(&self, phi_x: &[f64]) -> Vec<f64> {
        aperiodic(&self.phi_f, phi_x, self.k)
    }

    /// Writes the aperiodic-link rates; `(ẏ, φ̇)` are written by the caller.
    pub fn write_link_rates(&self, e_ref: &[f64], u_ad: &[f64], phi_x: &[f64], out: &mut [f64]) {
        let mut w = Packer::new(out);
        w.put(&aperiodic(&self.e_f, e_ref, self.k));
        w.put(&aperiodic(&self.u_adf, u_ad, self.k));
        w.put(&aperiodic(&self.phi_f, phi_x, self.k));
    }
}

/// Algebraic signals computed alongside a bank derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct BankSignals {
    pub delta_f: Vec<f64>,
    pub mix: MixOutput,
}

/// `ż = −k·z + input`.
pub fn aperiodic(state: &[f64], input: &[f64], k: f64) -> Vec<f64> {
    state.iter().zip(input).map(|(z, u)| -k * z + u).collect()
}

/// `Δ_f = B†(e − k·e_f − exp(−k(t − t_r))·e(t_r) − A_ref·e_f + B·u_adf)`.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_uncertainty(
    e_f: &[f64],
    u_adf: &[f64],
    e_latch: &[f64],
    t_reset: f64,
    k: f64,
    e_ref: &[f64],
    plant: &PlantView<'_>,
    t: f64,
) -> Vec<f64> {
    let decay = (-k * (t - t_reset)).exp();
    let a_ef = plant.a_ref.mul_vec(e_f);
    let b_u = plant.b.mul_vec(u_adf);
    let v: Vec<f64> = (0..e_ref.len())
        .map(|i| e_ref[i] - k * e_f[i] - decay * e_latch[i] - a_ef[i] + b_u[i])
        .collect();
    plant.b_pinv.mul_vec(&v)
}

/// `ω = det φ`, `Y = adj(φ)·y`.
pub fn drem_mix(phi: &Mat, y: &Mat) -> Result<MixOutput> {
    let (omega, adj) = linalg::det_adj(phi)?;
    Ok(MixOutput {
        y_mixed: &adj * y,
        omega,
    })
}

/// `B† = (BᵀB)⁻¹Bᵀ` for a full-column-rank `B`.
pub fn b_pseudo_inverse(b: &Mat) -> Result<Mat> {
    let bt = b.transpose();
    let btb = &bt * b;
    if linalg::numerical_rank(&btb, 1e-12)? != b.cols() {
        return Err(Error::RankDeficient);
    }
    linalg::solve(&btb, &bt)
}

pub(crate) struct Packer<'a> {
    out: &'a mut [f64],
    pos: usize,
}

impl<'a> Packer<'a> {
    pub(crate) fn new(out: &'a mut [f64]) -> Self {
        Self { out, pos: 0 }
    }

    pub(crate) fn put(&mut self, v: &[f64]) {
        self.out[self.pos..self.pos + v.len()].copy_from_slice(v);
        self.pos += v.len();
    }
}

pub(crate) struct Unpacker<'a> {
    src: &'a [f64],
    pos: usize,
}

impl<'a> Unpacker<'a> {
    pub(crate) fn new(src: &'a [f64]) -> Self {
        Self { src, pos: 0 }
    }

    pub(crate) fn take(&mut self, len: usize) -> &'a [f64] {
        let s = &self.src[self.pos..self.pos + len];
        self.pos += len;
        s
    }
}
