//! Closed-form constants: sphere and Clifford-torus volumes, the RP^n
//! calibration ratio, and the volume lower bound with its ratio a_n.

use serde::Serialize;
use std::f64::consts::PI;

/// Gamma at integer or half-integer arguments via the recurrence
/// Gamma(x+1) = x Gamma(x) from Gamma(1) = 1 and Gamma(1/2) = sqrt(pi).
pub fn gamma_half_integer(twice_x: u64) -> f64 {
    assert!(twice_x >= 1, "argument must be positive");
    if twice_x % 2 == 0 {
        let n = twice_x / 2; // Gamma(n) = (n-1)!
        let mut g = 1.0;
        for k in 1..n {
            g *= k as f64;
        }
        g
    } else {
        // Gamma(1/2 + m) = (1/2)(3/2)...(m - 1/2) sqrt(pi)
        let m = (twice_x - 1) / 2;
        let mut g = PI.sqrt();
        for k in 0..m {
            g *= 0.5 + k as f64;
        }
        g
    }
}

/// n-dimensional measure of the unit n-sphere: 2 pi^{(n+1)/2} / Gamma((n+1)/2).
pub fn sphere_volume(n: usize) -> f64 {
    assert!(n >= 1);
    2.0 * PI.powf((n as f64 + 1.0) / 2.0) / gamma_half_integer((n as u64) + 1)
}

pub fn rp_volume(n: usize) -> f64 {
    sphere_volume(n) / 2.0
}

/// vol(L_n) = vol(T^{n+1})/2pi = (2pi/sqrt(n+1))^{n+1} / 2pi.
pub fn clifford_volume(n: usize) -> f64 {
    assert!(n >= 1);
    let m = n as f64 + 1.0;
    (2.0 * PI / m.sqrt()).powi(n as i32 + 1) / (2.0 * PI)
}

/// vol(SU(n+1))/c_n = vol(RP^n)^2 / (n+1).
pub fn eqsup_ratio(n: usize) -> f64 {
    let v = rp_volume(n);
    v * v / (n as f64 + 1.0)
}

/// Volume lower bound for Hamiltonian deformations of the Clifford torus and
/// its ratio to vol(L_n): lower_bound = 2^{n/2} vol(RP^n) / sqrt(n+1).
pub fn lower_bound_and_a(n: usize) -> (f64, f64) {
    let lower = 2f64.powf(n as f64 / 2.0) * rp_volume(n) / ((n as f64 + 1.0).sqrt());
    let a = lower / clifford_volume(n);
    // independent closed-form route, cross-asserted
    let alt = 2f64.powf(n as f64 / 2.0) * (n as f64 + 1.0).powf(n as f64 / 2.0)
        * sphere_volume(n)
        / (2.0 * (2.0 * PI).powi(n as i32));
    debug_assert!((a - alt).abs() <= 1e-14 * a.abs().max(1.0));
    (lower, a)
}

/// One row of the constants table.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsRow {
    pub n: usize,
    pub vol_sphere_n: f64,
    pub vol_rp_n: f64,
    pub vol_clifford_n: f64,
    pub eqsup_ratio: f64,
    pub lower_bound: f64,
    pub a_n: f64,
    pub vol_rp_n_symbolic: String,
    pub vol_clifford_n_symbolic: String,
}

impl ConstantsRow {
    pub fn compute(n: usize) -> Self {
        let (lower_bound, a_n) = lower_bound_and_a(n);
        Self {
            n,
            vol_sphere_n: sphere_volume(n),
            vol_rp_n: rp_volume(n),
            vol_clifford_n: clifford_volume(n),
            eqsup_ratio: eqsup_ratio(n),
            lower_bound,
            a_n,
            vol_rp_n_symbolic: format!("vol(S^{n})/2"),
            vol_clifford_n_symbolic: format!("(2*pi/sqrt({}))^{}/(2*pi)", n + 1, n + 1),
        }
    }
}
