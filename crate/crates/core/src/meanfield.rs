//! Closed-form superradiant thermalization of `m(t) = <J_z>(t)`.
//!
//! Taking the expectation of the collective master equation gives
//!
//! ```text
//! dm/dt = -gamma (1 + 2 n_b) m - gamma <J_z^2> + gamma j(j+1),
//! ```
//!
//! and the mean-field replacement `<J_z^2> -> m^2` makes it a Riccati
//! equation with the tanh solution
//!
//! ```text
//! m(t) = -1/2 (1 + 2 n_b) + C tanh(C gamma (t - t_shift)),
//! C    = 1/2 sqrt(4 j(j+1) + (1 + 2 n_b)^2).
//! ```
//!
//! The relaxation rate scales with `C ~ j`, which is the superradiant
//! speed-up; for thermal initial states the time shift is negative and
//! vanishes as `j -> infinity`.

use crate::error::{Error, Result};

/// Parameters of one mean-field relaxation: everything needed to evaluate
/// `m(t)` in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldRun {
    pub j: f64,
    pub n_b: f64,
    pub gamma: f64,
    pub m0: f64,
    /// Amplitude constant `C = 1/2 sqrt(4 j(j+1) + (1+2n_b)^2)`.
    pub amplitude: f64,
    /// Time shift fixed by `m(0) = m0`; negative on the thermal branch.
    pub t_shift: f64,
}

impl MeanFieldRun {
    pub fn new(j: f64, n_b: f64, gamma: f64, m0: f64) -> Result<Self> {
        if !(j > 0.0) || !(gamma > 0.0) || n_b < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mean-field run needs j > 0, gamma > 0, n_b >= 0 (got j={j}, gamma={gamma}, n_b={n_b})"
            )));
        }
        let amplitude = amplitude_constant(j, n_b);
        let t_shift = t_tilde_from_m0(j, n_b, gamma, m0)?;
        Ok(Self {
            j,
            n_b,
            gamma,
            m0,
            amplitude,
            t_shift,
        })
    }
}

/// `C = 1/2 sqrt(4 j(j+1) + (1+2n_b)^2)`.
pub fn amplitude_constant(j: f64, n_b: f64) -> f64 {
    0.5 * (4.0 * j * (j + 1.0) + (1.0 + 2.0 * n_b).powi(2)).sqrt()
}

/// Thermal initial value `m0 = <J_z>` of the Gibbs state of
/// `H = -lambda omega J_z` at inverse temperature `beta`.
pub fn m0_thermal(j: f64, beta: f64, lambda: f64, omega: f64) -> f64 {
    let twice_j = (2.0 * j).round() as i64;
    // Weights e^{beta lambda omega m}; shift by the largest exponent.
    let xs: Vec<f64> = (0..=twice_j)
        .map(|k| -j + k as f64)
        .map(|m| beta * lambda * omega * m)
        .collect();
    let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut num = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        let m = -j + k as f64;
        let w = (x - x_max).exp();
        z += w;
        num += m * w;
    }
    num / z
}

/// Mean-field right-hand side `dm/dt` (with `<J_z^2> ~ m^2`).
pub fn superrad_rhs(m: f64, j: f64, n_b: f64, gamma: f64) -> f64 {
    -gamma * (1.0 + 2.0 * n_b) * m - gamma * m * m + gamma * j * (j + 1.0)
}

/// Closed-form solution `m(t)`.
pub fn m_of_t(run: &MeanFieldRun, t: f64) -> f64 {
    let c = run.amplitude;
    -0.5 * (1.0 + 2.0 * run.n_b) + c * (c * run.gamma * (t - run.t_shift)).tanh()
}

/// Time shift from the initial condition,
/// `t~ = 1/(2 C gamma) ln[(-1 + 2C - 2m0 - 2n_b) / (1 + 2C + 2m0 + 2n_b)]`.
///
/// A non-positive log argument means `m0` lies outside the tanh branch
/// (above the steady state), where the solution does not apply.
pub fn t_tilde_from_m0(j: f64, n_b: f64, gamma: f64, m0: f64) -> Result<f64> {
    let c = amplitude_constant(j, n_b);
    let num = -1.0 + 2.0 * c - 2.0 * m0 - 2.0 * n_b;
    let den = 1.0 + 2.0 * c + 2.0 * m0 + 2.0 * n_b;
    if num <= 0.0 || den <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "m0 = {m0} outside the tanh solution branch (log argument {num}/{den})"
        )));
    }
    Ok(1.0 / (2.0 * c * gamma) * (num / den).ln())
}

/// Steady state `m_ss = C - 1/2 (1 + 2 n_b)` (the `t -> infinity` limit).
pub fn m_steady(j: f64, n_b: f64) -> f64 {
    amplitude_constant(j, n_b) - 0.5 * (1.0 + 2.0 * n_b)
}

/// Relative distance to the steady state, `|m_ss - m| / m_ss`.
pub fn dist(m: f64, m_ss: f64) -> f64 {
    (m_ss - m).abs() / m_ss
}

/// Thermalization-time estimate at `j >> 1`: solves
/// `1 - tanh(j gamma t_T) = eps`, so `t_T = artanh(1 - eps) / (j gamma)`.
pub fn t_t_analytic(j: f64, gamma: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps} must lie in (0, 1)"
        )));
    }
    Ok((1.0 - eps).atanh() / (j * gamma))
}
