//! Classical fourth-order Runge–Kutta over a flat state vector.

use crate::error::{Error, Result};

/// A first-order system `ẏ = f(t, y)` with named state blocks.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn derivative(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;

    /// Name of the block holding index `idx`, used in blowup reports.
    fn block_of(&self, _idx: usize) -> &'static str {
        "state"
    }
}

/// Scratch buffers reused across steps.
#[derive(Debug, Clone)]
pub struct Rk4Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Workspace {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }
}

fn check<S: OdeSystem + ?Sized>(sys: &S, t: f64, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(idx) => Err(Error::Blowup {
            t,
            block: sys.block_of(idx).to_string(),
        }),
        None => Ok(()),
    }
}

/// Advances `y` in place from `t` to `t + h`.
pub fn rk4_step_in_place<S: OdeSystem + ?Sized>(
    sys: &S,
    y: &mut [f64],
    t: f64,
    h: f64,
    ws: &mut Rk4Workspace,
) -> Result<()> {
    let n = y.len();
    let half = 0.5 * h;
    sys.derivative(t, y, &mut ws.k1)?;
    check(sys, t, &ws.k1)?;
    for i in 0..n {
        ws.tmp[i] = y[i] + half * ws.k1[i];
    }
    sys.derivative(t + half, &ws.tmp, &mut ws.k2)?;
    check(sys, t + half, &ws.k2)?;
    for i in 0..n {
        ws.tmp[i] = y[i] + half * ws.k2[i];
    }
    sys.derivative(t + half, &ws.tmp, &mut ws.k3)?;
    check(sys, t + half, &ws.k3)?;
    for i in 0..n {
        ws.tmp[i] = y[i] + h * ws.k3[i];
    }
    sys.derivative(t + h, &ws.tmp, &mut ws.k4)?;
    check(sys, t + h, &ws.k4)?;
    let sixth = h / 6.0;
    for i in 0..n {
        y[i] += sixth * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    }
    check(sys, t + h, y)
}

/// Allocating convenience wrapper around [`rk4_step_in_place`].
pub fn rk4_step<S: OdeSystem + ?Sized>(sys: &S, y: &[f64], t: f64, h: f64) -> Result<Vec<f64>> {
    let mut out = y.to_vec();
    let mut ws = Rk4Workspace::new(y.len());
    rk4_step_in_place(sys, &mut out, t, h, &mut ws)?;
    Ok(out)
}

/// Adapter turning a closure into an [`OdeSystem`].
pub struct FnSystem<F> {
    dim: usize,
    f: F,
}

impl<F> FnSystem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> OdeSystem for FnSystem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn derivative(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        (self.f)(t, y, dy);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_one_step() {
        let sys = FnSystem::new(1, |_, y: &[f64], dy: &mut [f64]| dy[0] = -y[0]);
        let y = rk4_step(&sys, &[1.0], 0.0, 0.1).unwrap();
        // one step reproduces the quartic Taylor polynomial of exp(−h)
        assert!((y[0] - 0.9048375).abs() < 1e-12);
        assert!((y[0] - (-0.1f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn zero_field_keeps_state() {
        let sys = FnSystem::new(3, |_, _: &[f64], dy: &mut [f64]| dy.fill(0.0));
        let y0 = [1.5, -2.0, 1e-300];
        assert_eq!(rk4_step(&sys, &y0, 3.0, 0.5).unwrap(), y0.to_vec());
    }

    struct Named;

    impl OdeSystem for Named {
        fn dim(&self) -> usize {
            2
        }

        fn derivative(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = 0.0;
            dy[1] = 1.0 / y[1];
            Ok(())
        }

        fn block_of(&self, idx: usize) -> &'static str {
            ["x", "gamma2"][idx]
        }
    }

    #[test]
    fn blowup_names_block() {
        let err = rk4_step(&Named, &[1.0, 0.0], 2.5, 0.1).unwrap_err();
        assert_eq!(
            err,
            Error::Blowup {
                t: 2.5,
                block: "gamma2".into()
            }
        );
    }
}
