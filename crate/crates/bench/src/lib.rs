//! Shared fixtures for the benchmarks.

use ars_core::{LawKind, Mat, Scenario};

/// Deterministic well-conditioned `n×n` matrix.
pub fn dense(n: usize) -> Mat {
    let data = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let v = ((i * 7 + j * 3) as f64 * 0.37).sin();
            if i == j {
                v + n as f64
            } else {
                v
            }
        })
        .collect();
    Mat::new(n, n, data).expect("finite")
}

/// Symmetric positive definite `n×n` matrix.
pub fn spd(n: usize) -> Mat {
    let g = dense(n);
    &g.transpose() * &g
}

/// Hurwitz `n×n` matrix.
pub fn stable(n: usize) -> Mat {
    spd(n).scale(-1.0)
}

/// Wing-rock scenario cut to `t_end` seconds.
pub fn short_wing_rock(law: LawKind, t_end: f64) -> Scenario {
    let mut sc = Scenario::wing_rock(law).expect("wing-rock scenario");
    sc.t_end = t_end;
    sc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_well_posed() {
        for n in 1..=6 {
            assert!(ars_core::linalg::det(&dense(n)).unwrap().abs() > 1e-3);
            assert!(ars_core::linalg::sym_eig_min(&spd(n)).unwrap() > 0.0);
        }
        assert!(short_wing_rock(LawKind::Mrac, 0.1).validate().is_ok());
    }
}
