//! Dissipative thermalization of the working fluid.
//!
//! The thermal strokes run at fixed, non-interacting Hamiltonian
//! `H = -lambda omega J_z` (the drive guarantees `Gamma(t) = 0` whenever a
//! bath is attached), with
//!
//! ```text
//! drho/dt = i lambda omega [J_z, rho]
//!           + gamma (1 + n_b) D[J_+] rho + gamma n_b D[J_-] rho,
//! D[O] rho = O rho O^dag - 1/2 {O^dag O, rho}.
//! ```
//!
//! `J_+` lowers the energy (the ground state is `m = +j` for `lambda > 0`),
//! so the `(1 + n_b)` channel is the emission channel. In the `J_z` basis the
//! element `(m, n)` couples only to `(m ± 1, n ± 1)`: the right-hand side is
//! evaluated in `O(d^2)` and the populations close on themselves, which is
//! what the diagonal fast path integrates.
//!
//! The incoherent mode describes `N = 2j` independent qubits: the same
//! equation on a two-dimensional basis (`J_± = sigma_±`, `J_z = sigma_z/2`),
//! with extensive bookkeeping applied by the cycle layer.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spinops::{self, CMatrix, Operator, SpinBasis};
use crate::states::{
    entropy_of_spectrum, fidelity, fidelity_diagonal, DensityMatrix, ReferenceSolver,
};
use crate::trajectory::{Sample, Trajectory};

/// How the `N = 2j` qubits couple to the bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    /// Common bath, collective jump operators `J_±` on the spin-`j` ladder.
    CollectiveCoherent,
    /// Independent identical baths; simulated as a single qubit with
    /// extensive quantities scaled by `N`.
    IndependentIncoherent,
}

/// A heat bath: temperature (energy units, `k_B = 1`), dissipation rate and
/// coupling mode.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BathSpec {
    pub temperature: f64,
    pub gamma: f64,
    pub mode: CouplingMode,
}

impl BathSpec {
    pub fn new(temperature: f64, gamma: f64, mode: CouplingMode) -> Result<Self> {
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "bath temperature {temperature} must be > 0"
            )));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dissipation rate {gamma} must be > 0"
            )));
        }
        Ok(Self {
            temperature,
            gamma,
            mode,
        })
    }

    pub fn collective(temperature: f64, gamma: f64) -> Result<Self> {
        Self::new(temperature, gamma, CouplingMode::CollectiveCoherent)
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }
}

/// Bose-Einstein occupation `n_b = 1 / (exp(beta lambda omega) - 1)`.
pub fn bose_factor(beta: f64, lambda: f64, omega: f64) -> Result<f64> {
    let x = beta * lambda * omega;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta*lambda*omega = {x} must be > 0"
        )));
    }
    Ok(1.0 / x.exp_m1())
}

/// Fixed-step integrator controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolverSettings {
    /// Integrator step (upper bound; runs use `t / ceil(t / dt)`).
    pub dt: f64,
    /// Trajectory sampling stride, in steps.
    pub sample_every: usize,
    /// Cap for open-ended runs (thermalization-time searches).
    pub max_time: f64,
}

impl EvolverSettings {
    pub fn new(dt: f64, sample_every: usize, max_time: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt = {dt} must be > 0")));
        }
        Ok(Self {
            dt,
            sample_every: sample_every.max(1),
            max_time,
        })
    }

    /// Stability- and accuracy-aware defaults for a thermal stroke.
    ///
    /// The step resolves the fastest rate in the generator: the collective
    /// Clebsch-Gordan enhanced decay (up to `~gamma (1+2n_b) j^2`) and the
    /// coherence rotation (up to `2 j lambda omega`).
    pub fn for_bath(basis: SpinBasis, lambda: f64, omega: f64, bath: &BathSpec, t_span: f64) -> Self {
        let freq = generator_frequency_scale(basis, lambda, omega, bath);
        let mut dt = 0.02 / freq;
        if t_span > 0.0 {
            dt = dt.min(t_span / 1000.0);
        }
        let n_steps = if t_span > 0.0 {
            (t_span / dt).ceil() as usize
        } else {
            1000
        };
        Self {
            dt,
            sample_every: (n_steps / 400).max(1),
            max_time: if t_span > 0.0 { t_span } else { 1e4 / freq },
        }
    }

    fn steps_for(&self, t_span: f64) -> (usize, f64) {
        if t_span <= 0.0 {
            return (0, self.dt);
        }
        let n = (t_span / self.dt).ceil().max(1.0) as usize;
        (n, t_span / n as f64)
    }
}

/// Largest frequency appearing in the generator, used for step control.
pub fn generator_frequency_scale(
    basis: SpinBasis,
    lambda: f64,
    omega: f64,
    bath: &BathSpec,
) -> f64 {
    let n_b = bose_factor(bath.beta(), lambda, omega).unwrap_or(0.0);
    let jj = basis.j_jp1();
    // max over m of the total loss coefficient; bounded by (1+2n_b)(j(j+1)+1/4)
    let dissipative = bath.gamma * (1.0 + 2.0 * n_b) * (jj + 0.25);
    let coherent = lambda.abs() * omega * f64::from(basis.twice_j());
    (dissipative + coherent).max(1e-12)
}

/// Precomputed generator for one thermal stroke.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    basis: SpinBasis,
    lambda: f64,
    omega: f64,
    /// gamma (1 + n_b): rate of the `J_+` (emission) channel.
    rate_plus: f64,
    /// gamma n_b: rate of the `J_-` (absorption) channel.
    rate_minus: f64,
    /// `c_plus[i] = <m_i + 1| J_+ |m_i>` (zero at the top edge).
    c_plus: Vec<f64>,
    /// `c_minus[i] = <m_i - 1| J_- |m_i>` (zero at the bottom edge).
    c_minus: Vec<f64>,
}

impl LindbladGenerator {
    pub fn new(basis: SpinBasis, lambda: f64, omega: f64, bath: &BathSpec) -> Result<Self> {
        if bath.mode == CouplingMode::IndependentIncoherent && basis.dim() != 2 {
            return Err(Error::InvalidParameter(format!(
                "independent-incoherent baths act on a single qubit (dim 2), got dim {}",
                basis.dim()
            )));
        }
        let n_b = bose_factor(bath.beta(), lambda, omega)?;
        let d = basis.dim();
        let mut c_plus = vec![0.0; d];
        let mut c_minus = vec![0.0; d];
        for i in 0..d {
            let m = basis.m_at(i);
            if i + 1 < d {
                c_plus[i] = basis.ladder_up(m);
            }
            if i > 0 {
                c_minus[i] = basis.ladder_down(m);
            }
        }
        Ok(Self {
            basis,
            lambda,
            omega,
            rate_plus: bath.gamma * (1.0 + n_b),
            rate_minus: bath.gamma * n_b,
            c_plus,
            c_minus,
        })
    }

    pub fn basis(&self) -> SpinBasis {
        self.basis
    }

    /// `H = -lambda omega J_z` for this stroke.
    pub fn hamiltonian(&self) -> Operator {
        let z = spinops::jz(self.basis);
        Operator::new(
            self.basis,
            z.matrix() * Complex64::new(-self.lambda * self.omega, 0.0),
        )
        .expect("dimensions match by construction")
    }

    /// Right-hand side of the master equation, elementwise over the
    /// stripe-coupled structure of the `J_z` basis.
    pub fn rhs(&self, rho: &CMatrix) -> CMatrix {
        let d = self.basis.dim();
        let lw = self.lambda * self.omega;
        let mut out = CMatrix::zeros(d, d);
        for i in 0..d {
            let mi = self.basis.m_at(i);
            for k in 0..d {
                let mk = self.basis.m_at(k);
                // i lambda omega [Jz, rho] term.
                let mut v = Complex64::new(0.0, lw * (mi - mk)) * rho[(i, k)];
                // Gain from the level pair below / above.
                if i > 0 && k > 0 {
                    v += Complex64::new(self.rate_plus * self.c_plus[i - 1] * self.c_plus[k - 1], 0.0)
                        * rho[(i - 1, k - 1)];
                }
                if i + 1 < d && k + 1 < d {
                    v += Complex64::new(
                        self.rate_minus * self.c_minus[i + 1] * self.c_minus[k + 1],
                        0.0,
                    ) * rho[(i + 1, k + 1)];
                }
                // Anticommutator losses: J_-J_+ = diag(c_plus^2), J_+J_- = diag(c_minus^2).
                let loss = 0.5 * self.rate_plus * (self.c_plus[i].powi(2) + self.c_plus[k].powi(2))
                    + 0.5 * self.rate_minus * (self.c_minus[i].powi(2) + self.c_minus[k].powi(2));
                v -= Complex64::new(loss, 0.0) * rho[(i, k)];
                out[(i, k)] = v;
            }
        }
        out
    }

    /// Population sector of [`Self::rhs`]: the four-term rate equation.
    pub fn rhs_diagonal(&self, p: &[f64]) -> Vec<f64> {
        let d = self.basis.dim();
        let mut out = vec![0.0; d];
        for i in 0..d {
            let mut v = 0.0;
            if i > 0 {
                v += self.rate_plus * self.c_plus[i - 1].powi(2) * p[i - 1];
            }
            if i + 1 < d {
                v += self.rate_minus * self.c_minus[i + 1].powi(2) * p[i + 1];
            }
            v -= (self.rate_plus * self.c_plus[i].powi(2)
                + self.rate_minus * self.c_minus[i].powi(2))
                * p[i];
            out[i] = v;
        }
        out
    }

    /// Thermal populations of the stroke Hamiltonian in basis order,
    /// `p_m ∝ exp(beta lambda omega m)`.
    pub fn thermal_populations(&self, beta: f64) -> Vec<f64> {
        thermal_populations(self.basis, self.lambda, self.omega, beta)
    }
}

/// Gibbs populations of `H = -lambda omega J_z` in ascending-`m` order.
pub fn thermal_populations(basis: SpinBasis, lambda: f64, omega: f64, beta: f64) -> Vec<f64> {
    let d = basis.dim();
    let x_max = (0..d)
        .map(|i| beta * lambda * omega * basis.m_at(i))
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = (0..d)
        .map(|i| (beta * lambda * omega * basis.m_at(i) - x_max).exp())
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// Right-hand side `drho/dt` for a valid state (see [`LindbladGenerator::rhs`]).
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    lambda: f64,
    omega: f64,
    bath: &BathSpec,
    basis: SpinBasis,
) -> Result<CMatrix> {
    if rho.basis() != basis {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            actual: rho.basis().dim(),
        });
    }
    Ok(LindbladGenerator::new(basis, lambda, omega, bath)?.rhs(rho.matrix()))
}

/// Four-term rate equation for the populations (Clebsch-Gordan weighted
/// birth-death chain over `m`).
pub fn diagonal_rates_rhs(
    p: &[f64],
    j: f64,
    bath: &BathSpec,
    lambda: f64,
    omega: f64,
) -> Result<Vec<f64>> {
    let basis = SpinBasis::new(j)?;
    if p.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            actual: p.len(),
        });
    }
    if let Some(&bad) = p.iter().find(|&&x| x < -1e-12) {
        return Err(Error::InvalidState(format!(
            "negative population {bad:.3e}"
        )));
    }
    Ok(LindbladGenerator::new(basis, lambda, omega, bath)?.rhs_diagonal(p))
}

/// Trace drift above this aborts the integration.
pub const TRACE_ABORT: f64 = 1e-6;

fn rk4_matrix_step(gen: &LindbladGenerator, rho: &CMatrix, dt: f64) -> CMatrix {
    let half = Complex64::new(dt / 2.0, 0.0);
    let full = Complex64::new(dt, 0.0);
    let sixth = Complex64::new(dt / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);

    let k1 = gen.rhs(rho);
    let k2 = gen.rhs(&(rho + &k1 * half));
    let k3 = gen.rhs(&(rho + &k2 * half));
    let k4 = gen.rhs(&(rho + &k3 * full));
    let next = rho + (k1 + &k2 * two + &k3 * two + k4) * sixth;
    // Re-Hermitize each step; RK4 drifts at rounding level otherwise.
    (&next + next.adjoint()) * Complex64::new(0.5, 0.0)
}

fn rk4_vec_step(gen: &LindbladGenerator, p: &[f64], dt: f64) -> Vec<f64> {
    let d = p.len();
    let k1 = gen.rhs_diagonal(p);
    let stage = |k: &[f64], w: f64| -> Vec<f64> {
        (0..d).map(|i| p[i] + w * k[i]).collect()
    };
    let k2 = gen.rhs_diagonal(&stage(&k1, dt / 2.0));
    let k3 = gen.rhs_diagonal(&stage(&k2, dt / 2.0));
    let k4 = gen.rhs_diagonal(&stage(&k3, dt));
    (0..d)
        .map(|i| p[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

struct SampleContext {
    solver: ReferenceSolver,
    h: Operator,
    energies_basis_order: Vec<f64>,
}

impl SampleContext {
    fn new(gen: &LindbladGenerator) -> Result<Self> {
        let h = gen.hamiltonian();
        let solver = ReferenceSolver::new(&h)?;
        let energies_basis_order = (0..gen.basis().dim())
            .map(|i| h.matrix()[(i, i)].re)
            .collect();
        Ok(Self {
            solver,
            h,
            energies_basis_order,
        })
    }

    fn sample_matrix(&self, t: f64, rho: &DensityMatrix) -> Result<Sample> {
        let energy = rho.expectation(&self.h)?.re;
        let s = entropy_of_spectrum(&rho.eigenvalues())?;
        let q = self.solver.query_entropy(s);
        let reference = self.solver.reference_state(&q);
        let f = fidelity(rho, &reference)?;
        Ok(Sample {
            t,
            energy,
            entropy: s,
            t_star: q,
            fidelity_to_ref: Some(f),
        })
    }

    fn sample_populations(&self, t: f64, p: &[f64], ref_pops: impl Fn(f64) -> Vec<f64>) -> Result<Sample> {
        let energy: f64 = p
            .iter()
            .zip(&self.energies_basis_order)
            .map(|(&pi, &ei)| pi * ei)
            .sum();
        let s = entropy_of_spectrum(p)?;
        let q = self.solver.query_entropy(s);
        let f = if q.is_finite() {
            fidelity_diagonal(p, &ref_pops(q.beta_star))
        } else if q.status == crate::states::ThermalStatus::InfiniteTemperature {
            fidelity_diagonal(p, &vec![1.0 / p.len() as f64; p.len()])
        } else {
            // Zero-temperature sentinel: reference is the ground projector.
            let mut g = vec![0.0; p.len()];
            *g.last_mut().unwrap() = 1.0;
            fidelity_diagonal(p, &g)
        };
        Ok(Sample {
            t,
            energy,
            entropy: s,
            t_star: q,
            fidelity_to_ref: Some(f),
        })
    }
}

/// Integrate the full master equation for `t_th` with fixed-step RK4.
///
/// The trajectory samples `(t, <E>, S, T*, F(rho, rho*))` where `rho*` is the
/// entropy-matched reference thermal state. Trace drift beyond `1e-6` aborts.
pub fn evolve_lindblad(
    rho0: &DensityMatrix,
    lambda: f64,
    omega: f64,
    bath: &BathSpec,
    t_th: f64,
    settings: &EvolverSettings,
) -> Result<(DensityMatrix, Trajectory)> {
    let gen = LindbladGenerator::new(rho0.basis(), lambda, omega, bath)?;
    let ctx = SampleContext::new(&gen)?;
    let (n_steps, dt) = settings.steps_for(t_th);

    let mut rho = rho0.matrix().clone();
    let mut trajectory = Vec::new();
    trajectory.push(ctx.sample_matrix(0.0, rho0)?);
    for step in 1..=n_steps {
        rho = rk4_matrix_step(&gen, &rho, dt);
        let tr: f64 = rho.diagonal().iter().map(|c| c.re).sum();
        if (tr - 1.0).abs() > TRACE_ABORT {
            return Err(Error::IntegratorFailure(format!(
                "trace drift {:.3e} at t = {}",
                tr - 1.0,
                step as f64 * dt
            )));
        }
        if step % settings.sample_every == 0 || step == n_steps {
            let state = DensityMatrix::new_unchecked(rho0.basis(), rho.clone());
            trajectory.push(ctx.sample_matrix(step as f64 * dt, &state)?);
        }
    }
    Ok((
        DensityMatrix::new_unchecked(rho0.basis(), rho),
        trajectory,
    ))
}

/// Integrate the diagonal rate equation for `t_th`; exact for diagonal
/// initial states (coherences evolve independently and only decay).
pub fn evolve_diagonal(
    p0: &[f64],
    j: f64,
    lambda: f64,
    omega: f64,
    bath: &BathSpec,
    t_th: f64,
    settings: &EvolverSettings,
) -> Result<(Vec<f64>, Trajectory)> {
    let basis = SpinBasis::new(j)?;
    if p0.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            actual: p0.len(),
        });
    }
    let gen = LindbladGenerator::new(basis, lambda, omega, bath)?;
    let ctx = SampleContext::new(&gen)?;
    let ref_pops = |beta: f64| gen.thermal_populations(beta);
    let (n_steps, dt) = settings.steps_for(t_th);

    let mut p = p0.to_vec();
    let mut trajectory = Vec::new();
    trajectory.push(ctx.sample_populations(0.0, &p, ref_pops)?);
    for step in 1..=n_steps {
        p = rk4_vec_step(&gen, &p, dt);
        let tr: f64 = p.iter().sum();
        if (tr - 1.0).abs() > TRACE_ABORT {
            return Err(Error::IntegratorFailure(format!(
                "population-sum drift {:.3e} at t = {}",
                tr - 1.0,
                step as f64 * dt
            )));
        }
        if step % settings.sample_every == 0 || step == n_steps {
            trajectory.push(ctx.sample_populations(step as f64 * dt, &p, ref_pops)?);
        }
    }
    Ok((p, trajectory))
}

/// First time the state comes within `1 - F <= tol` of the bath Gibbs state,
/// resolved to one integrator step.
pub fn thermalization_time(
    rho0: &DensityMatrix,
    lambda: f64,
    omega: f64,
    bath: &BathSpec,
    tol: f64,
    settings: &EvolverSettings,
) -> Result<f64> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} must lie in (0, 1)"
        )));
    }
    let gen = LindbladGenerator::new(rho0.basis(), lambda, omega, bath)?;
    let dt = settings.dt;
    let max_steps = (settings.max_time / dt).ceil() as usize;
    let chunk = settings.sample_every.max(1);

    // The trajectory of a diagonal state stays diagonal; use the vector path.
    if rho0.is_diagonal(1e-12) {
        let target = gen.thermal_populations(bath.beta());
        let mut p = rho0.populations();
        if 1.0 - fidelity_diagonal(&p, &target) <= tol {
            return Ok(0.0);
        }
        let mut step = 0usize;
        while step < max_steps {
            let saved = p.clone();
            let advance = chunk.min(max_steps - step);
            for _ in 0..advance {
                p = rk4_vec_step(&gen, &p, dt);
            }
            step += advance;
            if 1.0 - fidelity_diagonal(&p, &target) <= tol {
                // Crossed inside this chunk: replay one step at a time.
                let mut q = saved;
                for sub in 1..=advance {
                    q = rk4_vec_step(&gen, &q, dt);
                    if 1.0 - fidelity_diagonal(&q, &target) <= tol {
                        return Ok((step - advance + sub) as f64 * dt);
                    }
                }
                return Ok(step as f64 * dt);
            }
        }
        let residual = 1.0 - fidelity_diagonal(&p, &target);
        return Err(Error::NotThermalized {
            max_time: settings.max_time,
            residual,
        });
    }

    let target = crate::states::gibbs_state(&gen.hamiltonian(), bath.beta())?;
    let mut rho = rho0.clone();
    if 1.0 - fidelity(&rho, &target)? <= tol {
        return Ok(0.0);
    }
    let mut step = 0usize;
    while step < max_steps {
        let saved = rho.matrix().clone();
        let advance = chunk.min(max_steps - step);
        let mut m = rho.matrix().clone();
        for _ in 0..advance {
            m = rk4_matrix_step(&gen, &m, dt);
        }
        step += advance;
        rho = DensityMatrix::new_unchecked(rho0.basis(), m);
        if 1.0 - fidelity(&rho, &target)? <= tol {
            let mut m = saved;
            for sub in 1..=advance {
                m = rk4_matrix_step(&gen, &m, dt);
                let state = DensityMatrix::new_unchecked(rho0.basis(), m.clone());
                if 1.0 - fidelity(&state, &target)? <= tol {
                    return Ok((step - advance + sub) as f64 * dt);
                }
            }
            return Ok(step as f64 * dt);
        }
    }
    let residual = 1.0 - fidelity(&rho, &target)?;
    Err(Error::NotThermalized {
        max_time: settings.max_time,
        residual,
    })
}

/// Entropy-production rate `sigma(t) = dS/dt - beta dQ/dt` along a fixed-`H`
/// trajectory (`dQ/dt = d<E>/dt`), by central finite differences.
///
/// Spohn's inequality guarantees `sigma(t) >= 0` up to discretization noise.
pub fn spohn_diagnostic(trajectory: &Trajectory, bath: &BathSpec) -> Vec<(f64, f64)> {
    let beta = bath.beta();
    let n = trajectory.len();
    if n < 3 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(n - 2);
    for k in 1..n - 1 {
        let prev = &trajectory[k - 1];
        let next = &trajectory[k + 1];
        let dt = next.t - prev.t;
        if dt <= 0.0 {
            continue;
        }
        let ds = (next.entropy - prev.entropy) / dt;
        let dq = (next.energy - prev.energy) / dt;
        out.push((trajectory[k].t, ds - beta * dq));
    }
    out
}
