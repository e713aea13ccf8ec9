//! Otto-cycle orchestration: the four strokes, limit-cycle detection and the
//! closed-form performance formulas.
//!
//! Stroke order and heat bookkeeping follow the convention that heat flowing
//! into the working fluid is positive:
//!
//! ```text
//! Q_h = Tr[H_f (rho_3 - rho_2)],   Q_c = Tr[H_i (rho_1 - rho_4)],
//! W   = W_12 + W_34,               W'  = -W  (extracted work),
//! ```
//!
//! with `rho_1` the state at the cycle start. On a periodic (limit) cycle
//! the four terms telescope, so `W + Q_h + Q_c = 0` holds to rounding.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lindblad::{
    bose_factor, evolve_diagonal, evolve_lindblad, BathSpec, CouplingMode, EvolverSettings,
    LindbladGenerator,
};
use crate::spinops::{CMatrix, Operator, SpinBasis};
use crate::states::{
    entropy_of_spectrum, fidelity, fidelity_diagonal, gibbs_state, mean_energy,
    thermal_query_for_spectrum, DensityMatrix, ReferenceSolver,
};
use crate::trajectory::{CycleSample, Sample, Stroke, Trajectory};
use crate::unitary::{evolve_unitary, lmg_hamiltonian, Direction, DriveProtocol};

/// Default tolerance for "full thermalization" (`1 - F` against the bath
/// Gibbs state).
pub const DEFAULT_THERMALIZATION_TOL: f64 = 1e-5;
/// Default limit-cycle tolerance on `1 - F` between successive cycle-start
/// states.
pub const DEFAULT_LIMIT_CYCLE_TOL: f64 = 1e-10;
/// Default number of midpoint-exponential steps per unitary stroke.
pub const DEFAULT_UNITARY_STEPS: usize = 2000;
/// Fidelity target when tracing a perfect thermal stroke for plotting.
const FULL_STROKE_TRAJ_TOL: f64 = 1e-9;

/// Thermal strokes either run for a fixed duration or are treated as
/// perfect (the state is assigned the bath Gibbs state).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum ThermalStroke {
    Duration(f64),
    Full,
}

/// Full parameter set of one Otto cycle.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CycleConfig {
    pub j: f64,
    pub lambda_i: f64,
    pub lambda_f: f64,
    pub t_c: f64,
    pub t_h: f64,
    pub gamma: f64,
    pub omega: f64,
    pub thermal: ThermalStroke,
    /// Unitary stroke duration; `0` is the sudden quench.
    pub t_u: f64,
    /// Interaction peak of the drive; `0` is the non-interacting cycle.
    pub gamma_bar: f64,
    pub mode: CouplingMode,
    pub thermalization_tol: f64,
    pub limit_cycle_tol: f64,
    pub unitary_steps: usize,
    /// Trace the bath relaxation of perfect thermal strokes (costs time,
    /// only needed for trajectory plots).
    pub record_thermal_trajectory: bool,
}

impl CycleConfig {
    pub fn new(j: f64, lambda_i: f64, lambda_f: f64, t_c: f64, t_h: f64, gamma: f64) -> Self {
        Self {
            j,
            lambda_i,
            lambda_f,
            t_c,
            t_h,
            gamma,
            omega: 1.0,
            thermal: ThermalStroke::Full,
            t_u: 0.0,
            gamma_bar: 0.0,
            mode: CouplingMode::CollectiveCoherent,
            thermalization_tol: DEFAULT_THERMALIZATION_TOL,
            limit_cycle_tol: DEFAULT_LIMIT_CYCLE_TOL,
            unitary_steps: DEFAULT_UNITARY_STEPS,
            record_thermal_trajectory: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        SpinBasis::new(self.j)?;
        if !(self.lambda_i > 0.0 && self.lambda_f > 0.0) {
            return Err(Error::InvalidParameter(
                "couplings lambda_i, lambda_f must be > 0".into(),
            ));
        }
        if self.lambda_i >= self.lambda_f {
            return Err(Error::InvalidParameter(format!(
                "lambda_i = {} must be < lambda_f = {}",
                self.lambda_i, self.lambda_f
            )));
        }
        if !(self.t_c > 0.0) || !(self.t_h > 0.0) || self.t_c >= self.t_h {
            return Err(Error::InvalidParameter(format!(
                "bath temperatures need 0 < T_c < T_h (got {}, {})",
                self.t_c, self.t_h
            )));
        }
        if !(self.gamma > 0.0) || !(self.omega > 0.0) {
            return Err(Error::InvalidParameter(
                "gamma and omega must be > 0".into(),
            ));
        }
        if let ThermalStroke::Duration(t) = self.thermal {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "thermal stroke duration {t} must be >= 0"
                )));
            }
        }
        if !(self.t_u >= 0.0) || !self.t_u.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_u = {} must be >= 0",
                self.t_u
            )));
        }
        if self.mode == CouplingMode::IndependentIncoherent && self.gamma_bar != 0.0 {
            return Err(Error::InvalidParameter(
                "interacting drive needs collective coupling; independent qubits have gamma_bar = 0"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Heat-engine precondition: positive work requires
    /// `lambda_f / lambda_i < T_h / T_c`.
    pub fn satisfies_engine_condition(&self) -> bool {
        self.lambda_f / self.lambda_i < self.t_h / self.t_c
    }

    /// Basis the cycle is simulated on: the spin-`j` ladder for collective
    /// coupling, a single qubit for independent ensembles.
    pub fn simulation_basis(&self) -> Result<SpinBasis> {
        match self.mode {
            CouplingMode::CollectiveCoherent => SpinBasis::new(self.j),
            CouplingMode::IndependentIncoherent => SpinBasis::new(0.5),
        }
    }

    /// Extensive multiplier: `N = 2j` identical qubits in the incoherent
    /// mode, 1 otherwise.
    pub fn extensive_scale(&self) -> f64 {
        match self.mode {
            CouplingMode::CollectiveCoherent => 1.0,
            CouplingMode::IndependentIncoherent => f64::from((2.0 * self.j).round() as u32).max(1.0),
        }
    }

    fn bath(&self, temperature: f64) -> Result<BathSpec> {
        // The incoherent ensemble is simulated as one qubit, which obeys the
        // same equation as the collective j = 1/2 system.
        BathSpec::new(temperature, self.gamma, CouplingMode::CollectiveCoherent)
    }

    fn h_i(&self, basis: SpinBasis) -> Result<Operator> {
        lmg_hamiltonian(basis, self.lambda_i, 0.0, self.omega)
    }

    fn h_f(&self, basis: SpinBasis) -> Result<Operator> {
        lmg_hamiltonian(basis, self.lambda_f, 0.0, self.omega)
    }
}

/// The four corner states of a cycle.
#[derive(Debug, Clone)]
pub struct CycleStates {
    pub rho1: DensityMatrix,
    pub rho2: DensityMatrix,
    pub rho3: DensityMatrix,
    pub rho4: DensityMatrix,
}

/// Energy bookkeeping and sampled trajectory of one executed cycle.
#[derive(Debug, Clone)]
pub struct CycleRecord {
    pub q_h: f64,
    pub q_c: f64,
    /// Work injected during 1 -> 2 and 3 -> 4.
    pub work_12: f64,
    pub work_34: f64,
    /// Net work input `W = W_12 + W_34`; negative when the engine extracts.
    pub w: f64,
    /// Extracted work `W' = -W`.
    pub w_prime: f64,
    /// `W' / Q_h` where defined.
    pub eta: Option<f64>,
    /// `2 t_th + 2 t_u` for finite-time cycles.
    pub cycle_duration: Option<f64>,
    /// `W' / t_cyc` for finite-time cycles.
    pub power: Option<f64>,
    pub trajectory: Vec<CycleSample>,
    pub states: CycleStates,
}

/// Heats of the two thermal strokes per the sign convention (into the
/// working fluid is positive).
pub fn heats(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    rho3: &DensityMatrix,
    rho4: &DensityMatrix,
    h_i: &Operator,
    h_f: &Operator,
) -> Result<(f64, f64)> {
    let q_h = mean_energy(rho3, h_f)? - mean_energy(rho2, h_f)?;
    let q_c = mean_energy(rho1, h_i)? - mean_energy(rho4, h_i)?;
    Ok((q_h, q_c))
}

/// Otto efficiency of the non-interacting cycle, `eta = 1 - lambda_i/lambda_f`.
pub fn efficiency(lambda_i: f64, lambda_f: f64) -> Result<f64> {
    if !(lambda_i > 0.0) || lambda_i >= lambda_f {
        return Err(Error::InvalidParameter(format!(
            "efficiency needs 0 < lambda_i < lambda_f (got {lambda_i}, {lambda_f})"
        )));
    }
    Ok(1.0 - lambda_i / lambda_f)
}

/// Large-`j` saturation power of the collective engine,
/// `Pbar = (dlambda omega / 2 t_th) (e^{b_c l_i w} - e^{b_h l_f w}) /
/// ((e^{b_h l_f w} - 1)(e^{b_c l_i w} - 1))`.
pub fn pbar(lambda_i: f64, lambda_f: f64, t_c: f64, t_h: f64, omega: f64, t_th: f64) -> Result<f64> {
    if !(lambda_i > 0.0 && lambda_f > 0.0 && t_c > 0.0 && t_h > 0.0 && omega > 0.0) {
        return Err(Error::InvalidParameter(
            "pbar needs strictly positive arguments".into(),
        ));
    }
    if !(t_th > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t_th = {t_th} must be > 0"
        )));
    }
    let xc = lambda_i * omega / t_c;
    let xh = lambda_f * omega / t_h;
    let num = xc.exp() - xh.exp();
    let den = xh.exp_m1() * xc.exp_m1();
    Ok((lambda_f - lambda_i) * omega / (2.0 * t_th) * num / den)
}

/// Work extracted in a fully thermalized single-qubit cycle.
pub fn w_qubit(lambda_i: f64, lambda_f: f64, t_c: f64, t_h: f64, omega: f64) -> f64 {
    let xc = lambda_i * omega / t_c;
    let xh = lambda_f * omega / t_h;
    (lambda_f - lambda_i) * omega * (xc.exp() - xh.exp())
        / ((xh.exp() + 1.0) * (xc.exp() + 1.0))
}

/// Curzon-Ahlborn efficiency `1 - sqrt(T_c/T_h)`.
pub fn eta_ca(t_c: f64, t_h: f64) -> Result<f64> {
    if !(t_c > 0.0) || t_c > t_h {
        return Err(Error::InvalidParameter(format!(
            "eta_CA needs 0 < T_c <= T_h (got {t_c}, {t_h})"
        )));
    }
    Ok(1.0 - (t_c / t_h).sqrt())
}

/// Saturation power at the Curzon-Ahlborn point, i.e. [`pbar`] evaluated at
/// `lambda_i = sqrt(T_c/omega)`, `lambda_f = sqrt(T_h/omega)`.
pub fn pbar_ca(t_c: f64, t_h: f64, omega: f64, t_th: f64) -> Result<f64> {
    if !(t_c > 0.0) || t_c > t_h {
        return Err(Error::InvalidParameter(format!(
            "pbar_CA needs 0 < T_c <= T_h (got {t_c}, {t_h})"
        )));
    }
    if !(t_th > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t_th = {t_th} must be > 0"
        )));
    }
    let xc = (omega / t_c).sqrt();
    let xh = (omega / t_h).sqrt();
    let num = xc.exp() - xh.exp();
    let den = xh.exp_m1() * xc.exp_m1();
    Ok((t_h.sqrt() - t_c.sqrt()) * omega.sqrt() / (2.0 * t_th) * num / den)
}

/// Power of the coherent engine relative to `N` incoherent qubits, each
/// operated at its own thermalization time:
/// `coth(b_h l_f w / 2) coth(b_c l_i w / 2) > 1`.
pub fn relative_power(lambda_i: f64, lambda_f: f64, t_c: f64, t_h: f64, omega: f64) -> f64 {
    let xh = lambda_f * omega / (2.0 * t_h);
    let xc = lambda_i * omega / (2.0 * t_c);
    (1.0 / xh.tanh()) * (1.0 / xc.tanh())
}

/// Analytic qubit isochore in the `(<E>, T*)` plane at fixed `lambda`:
/// `T* = lambda omega / ln[(lambda omega - 2E)/(lambda omega + 2E)]`.
pub fn qubit_isochore_t_star(lambda: f64, omega: f64, energy: f64) -> f64 {
    let lw = lambda * omega;
    lw / ((lw - 2.0 * energy) / (lw + 2.0 * energy)).ln()
}

/// Gibbs seed at the cold-bath conditions `(lambda_i, T_c)`.
pub fn default_seed(config: &CycleConfig) -> Result<DensityMatrix> {
    let basis = config.simulation_basis()?;
    gibbs_state(&config.h_i(basis)?, 1.0 / config.t_c)
}

fn diag_state(basis: SpinBasis, p: &[f64]) -> DensityMatrix {
    let d = basis.dim();
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = Complex64::new(p[i], 0.0);
    }
    DensityMatrix::new_unchecked(basis, m)
}

/// Outcome of one thermal stroke.
struct ThermalOutcome {
    state: DensityMatrix,
    trajectory: Trajectory,
    duration: f64,
}

fn thermal_stroke(
    config: &CycleConfig,
    basis: SpinBasis,
    lambda: f64,
    temperature: f64,
    rho_in: &DensityMatrix,
) -> Result<ThermalOutcome> {
    let bath = config.bath(temperature)?;
    let beta = 1.0 / temperature;
    match config.thermal {
        ThermalStroke::Duration(t_th) => {
            let settings = EvolverSettings::for_bath(basis, lambda, config.omega, &bath, t_th);
            if rho_in.is_diagonal(1e-12) {
                let (p, traj) = evolve_diagonal(
                    &rho_in.populations(),
                    basis.j(),
                    lambda,
                    config.omega,
                    &bath,
                    t_th,
                    &settings,
                )?;
                Ok(ThermalOutcome {
                    state: diag_state(basis, &p),
                    trajectory: traj,
                    duration: t_th,
                })
            } else {
                let (state, traj) =
                    evolve_lindblad(rho_in, lambda, config.omega, &bath, t_th, &settings)?;
                Ok(ThermalOutcome {
                    state,
                    trajectory: traj,
                    duration: t_th,
                })
            }
        }
        ThermalStroke::Full => {
            let h = lmg_hamiltonian(basis, lambda, 0.0, config.omega)?;
            let target = gibbs_state(&h, beta)?;
            let mut trajectory = Vec::new();
            let mut duration = 0.0;
            if config.record_thermal_trajectory {
                let (traj, span) =
                    trace_to_equilibrium(config, basis, lambda, &bath, rho_in, &target)?;
                trajectory = traj;
                duration = span;
            } else {
                // Just the two corner samples so the cycle trajectory is
                // contiguous.
                let ctx = StrokeSampler::new(basis, lambda, config.omega)?;
                trajectory.push(ctx.sample(0.0, rho_in)?);
                trajectory.push(ctx.sample(0.0, &target)?);
            }
            Ok(ThermalOutcome {
                state: target,
                trajectory,
                duration,
            })
        }
    }
}

/// Evolve under the bath until the state is within `FULL_STROKE_TRAJ_TOL`
/// of the Gibbs target, recording the trajectory (plot support for perfect
/// thermal strokes).
fn trace_to_equilibrium(
    config: &CycleConfig,
    basis: SpinBasis,
    lambda: f64,
    bath: &BathSpec,
    rho_in: &DensityMatrix,
    target: &DensityMatrix,
) -> Result<(Trajectory, f64)> {
    // The cap only guards against pathological parameters; relaxation rates
    // put equilibration far earlier.
    let n_b = bose_factor(bath.beta(), lambda, config.omega)?;
    let cap = 400.0 / (bath.gamma * (1.0 + 2.0 * n_b));
    let settings = EvolverSettings::for_bath(basis, lambda, config.omega, bath, cap);
    let gen = LindbladGenerator::new(basis, lambda, config.omega, bath)?;
    let sampler = StrokeSampler::new(basis, lambda, config.omega)?;
    // Sample on the single-spin relaxation scale, not the cap: the
    // collective transient (where the state departs from thermal shape)
    // lives at 1/(gamma (1+2n_b) j) and must be resolved.
    let dt = settings.dt;
    let spacing = 1.0 / (400.0 * bath.gamma * (1.0 + 2.0 * n_b));
    let chunk = ((spacing / dt).round() as usize).max(1);
    let max_steps = (cap / dt).ceil() as usize;

    if rho_in.is_diagonal(1e-12) {
        let target_p = target.populations();
        let mut p = rho_in.populations();
        let mut traj = vec![sampler.sample_populations(0.0, &p)?];
        let mut step = 0usize;
        while step < max_steps {
            for _ in 0..chunk.min(max_steps - step) {
                p = rk4_vec(&gen, &p, dt);
            }
            step = (step + chunk).min(max_steps);
            let t = step as f64 * dt;
            traj.push(sampler.sample_populations(t, &p)?);
            if 1.0 - fidelity_diagonal(&p, &target_p) <= FULL_STROKE_TRAJ_TOL {
                return Ok((traj, t));
            }
        }
        Ok((traj, max_steps as f64 * dt))
    } else {
        let mut m = rho_in.matrix().clone();
        let mut traj = vec![sampler.sample(0.0, rho_in)?];
        let mut step = 0usize;
        while step < max_steps {
            for _ in 0..chunk.min(max_steps - step) {
                m = rk4_mat(&gen, &m, dt);
            }
            step = (step + chunk).min(max_steps);
            let t = step as f64 * dt;
            let state = DensityMatrix::new_unchecked(basis, m.clone());
            traj.push(sampler.sample(t, &state)?);
            if 1.0 - fidelity(&state, target)? <= FULL_STROKE_TRAJ_TOL {
                return Ok((traj, t));
            }
        }
        Ok((traj, max_steps as f64 * dt))
    }
}

fn rk4_vec(gen: &LindbladGenerator, p: &[f64], dt: f64) -> Vec<f64> {
    let d = p.len();
    let k1 = gen.rhs_diagonal(p);
    let stage = |k: &[f64], w: f64| -> Vec<f64> { (0..d).map(|i| p[i] + w * k[i]).collect() };
    let k2 = gen.rhs_diagonal(&stage(&k1, dt / 2.0));
    let k3 = gen.rhs_diagonal(&stage(&k2, dt / 2.0));
    let k4 = gen.rhs_diagonal(&stage(&k3, dt));
    (0..d)
        .map(|i| p[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

fn rk4_mat(gen: &LindbladGenerator, rho: &CMatrix, dt: f64) -> CMatrix {
    let half = Complex64::new(dt / 2.0, 0.0);
    let full = Complex64::new(dt, 0.0);
    let sixth = Complex64::new(dt / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let k1 = gen.rhs(rho);
    let k2 = gen.rhs(&(rho + &k1 * half));
    let k3 = gen.rhs(&(rho + &k2 * half));
    let k4 = gen.rhs(&(rho + &k3 * full));
    let next = rho + (k1 + &k2 * two + &k3 * two + k4) * sixth;
    (&next + next.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Observable sampler for a fixed non-interacting Hamiltonian.
struct StrokeSampler {
    h: Operator,
    solver: ReferenceSolver,
    energies: Vec<f64>,
}

impl StrokeSampler {
    fn new(basis: SpinBasis, lambda: f64, omega: f64) -> Result<Self> {
        let h = lmg_hamiltonian(basis, lambda, 0.0, omega)?;
        let solver = ReferenceSolver::new(&h)?;
        let energies = (0..basis.dim()).map(|i| h.matrix()[(i, i)].re).collect();
        Ok(Self { h, solver, energies })
    }

    fn sample(&self, t: f64, rho: &DensityMatrix) -> Result<Sample> {
        let energy = mean_energy(rho, &self.h)?;
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

    fn sample_populations(&self, t: f64, p: &[f64]) -> Result<Sample> {
        let energy: f64 = p.iter().zip(&self.energies).map(|(&a, &e)| a * e).sum();
        let s = entropy_of_spectrum(p)?;
        let q = self.solver.query_entropy(s);
        let f = fidelity_diagonal(p, &self.solver.reference_state(&q).populations());
        Ok(Sample {
            t,
            energy,
            entropy: s,
            t_star: q,
            fidelity_to_ref: Some(f),
        })
    }
}

/// Unitary stroke runner, including the two quench shortcuts.
fn unitary_stroke(
    config: &CycleConfig,
    basis: SpinBasis,
    direction: Direction,
    rho_in: &DensityMatrix,
) -> Result<(DensityMatrix, Trajectory)> {
    let protocol = DriveProtocol::new(
        config.lambda_i,
        config.lambda_f,
        config.gamma_bar,
        config.t_u,
        config.omega,
        direction,
    )?;
    if config.t_u == 0.0 || (config.gamma_bar == 0.0 && rho_in.is_diagonal(1e-12)) {
        // Commuting (or instantaneous) drive: the state is unchanged. Sweep
        // the coupling across the ramp so the adiabat still plots.
        let (l_start, l_end) = protocol.endpoints();
        let populations = rho_in.populations();
        let s = entropy_of_spectrum(&rho_in.eigenvalues())?;
        let samples = 101;
        let mut traj = Vec::with_capacity(samples);
        for k in 0..samples {
            let frac = k as f64 / (samples - 1) as f64;
            let lambda = l_start + (l_end - l_start) * frac;
            let energies: Vec<f64> = (0..basis.dim())
                .map(|i| -lambda * config.omega * basis.m_at(i))
                .collect();
            let energy: f64 = populations
                .iter()
                .zip(&energies)
                .map(|(&p, &e)| p * e)
                .sum();
            let q = thermal_query_for_spectrum(&energies, s);
            traj.push(Sample {
                t: frac * config.t_u,
                energy,
                entropy: s,
                t_star: q,
                fidelity_to_ref: None,
            });
        }
        return Ok((rho_in.clone(), traj));
    }
    evolve_unitary(rho_in, &protocol, basis, config.unitary_steps)
}

/// Execute one full cycle starting from `rho_start` (taken as the state at
/// position 1). Returns the record and the state the next cycle starts from.
pub fn run_cycle(
    config: &CycleConfig,
    rho_start: &DensityMatrix,
) -> Result<(CycleRecord, DensityMatrix)> {
    config.validate()?;
    let basis = config.simulation_basis()?;
    if rho_start.basis() != basis {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            actual: rho_start.basis().dim(),
        });
    }
    let scale = config.extensive_scale();
    let h_i = config.h_i(basis)?;
    let h_f = config.h_f(basis)?;

    let rho1 = rho_start.clone();
    let (rho2, traj_12) = unitary_stroke(config, basis, Direction::Forward, &rho1)?;
    let hot = thermal_stroke(config, basis, config.lambda_f, config.t_h, &rho2)?;
    let rho3 = hot.state;
    let (rho4, traj_34) = unitary_stroke(config, basis, Direction::Reverse, &rho3)?;
    let cold = thermal_stroke(config, basis, config.lambda_i, config.t_c, &rho4)?;
    let rho_end = cold.state;

    let (q_h, q_c) = heats(&rho1, &rho2, &rho3, &rho4, &h_i, &h_f)?;
    let work_12 = mean_energy(&rho2, &h_f)? - mean_energy(&rho1, &h_i)?;
    let work_34 = mean_energy(&rho4, &h_i)? - mean_energy(&rho3, &h_f)?;
    let w = work_12 + work_34;
    let w_prime = -w;
    let eta = if q_h.abs() > 0.0 { Some(w_prime / q_h) } else { None };

    let cycle_duration = match config.thermal {
        ThermalStroke::Duration(t_th) => Some(2.0 * t_th + 2.0 * config.t_u),
        ThermalStroke::Full => None,
    };
    let power = match cycle_duration {
        Some(t_cyc) if t_cyc > 0.0 => Some(scale * w_prime / t_cyc),
        _ => None,
    };

    // Stitch the four stroke trajectories on a common cycle clock.
    let mut trajectory = Vec::new();
    let mut offset = 0.0;
    let mut extend = |stroke: Stroke, traj: &Trajectory, offset: &mut f64, span: f64| {
        for s in traj {
            let mut sample = *s;
            sample.t += *offset;
            sample.energy *= scale;
            sample.entropy *= scale;
            trajectory.push(CycleSample { stroke, sample });
        }
        *offset += span;
    };
    extend(Stroke::UnitaryUp, &traj_12, &mut offset, config.t_u);
    extend(Stroke::HotContact, &hot.trajectory, &mut offset, hot.duration);
    extend(Stroke::UnitaryDown, &traj_34, &mut offset, config.t_u);
    extend(Stroke::ColdContact, &cold.trajectory, &mut offset, cold.duration);

    let record = CycleRecord {
        q_h: scale * q_h,
        q_c: scale * q_c,
        work_12: scale * work_12,
        work_34: scale * work_34,
        w: scale * w,
        w_prime: scale * w_prime,
        eta,
        cycle_duration,
        power,
        trajectory,
        states: CycleStates {
            rho1,
            rho2,
            rho3,
            rho4,
        },
    };
    Ok((record, rho_end))
}

/// Converged limit cycle plus the effective bath temperatures read off the
/// trajectory extremes.
#[derive(Debug, Clone)]
pub struct LimitCycleOutcome {
    pub record: CycleRecord,
    pub cycles_taken: usize,
    pub t_c_eff: f64,
    pub t_h_eff: f64,
}

/// Iterate cycles until successive cycle-start states agree to the
/// limit-cycle tolerance (`1 - F <= tol`).
pub fn run_until_limit_cycle(
    config: &CycleConfig,
    rho_seed: Option<&DensityMatrix>,
    max_cycles: usize,
) -> Result<LimitCycleOutcome> {
    if max_cycles < 1 {
        return Err(Error::InvalidParameter(
            "max_cycles must be at least 1".into(),
        ));
    }
    let mut rho = match rho_seed {
        Some(r) => r.clone(),
        None => default_seed(config)?,
    };
    let mut residual = f64::NAN;
    for k in 1..=max_cycles {
        let (record, rho_next) = run_cycle(config, &rho)?;
        residual = 1.0 - fidelity(&rho, &rho_next)?;
        if residual <= config.limit_cycle_tol {
            let (t_c_eff, t_h_eff) = effective_temperatures(&record);
            return Ok(LimitCycleOutcome {
                record,
                cycles_taken: k,
                t_c_eff,
                t_h_eff,
            });
        }
        rho = rho_next;
    }
    Err(Error::LimitCycleNotConverged {
        max_cycles,
        residual,
    })
}

/// Lowest and highest finite reference temperatures along the cycle.
fn effective_temperatures(record: &CycleRecord) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for cs in &record.trajectory {
        if cs.sample.t_star.is_finite() {
            lo = lo.min(cs.sample.t_star.t_star);
            hi = hi.max(cs.sample.t_star.t_star);
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn qubit_config() -> CycleConfig {
        CycleConfig::new(0.5, 1.0, 3.0, 1.0, 8.0, 0.1)
    }

    #[test]
    fn config_validation() {
        let mut c = qubit_config();
        assert!(c.validate().is_ok());
        assert!(c.satisfies_engine_condition());
        c.lambda_f = 0.5;
        assert!(c.validate().is_err());
        let mut c = qubit_config();
        c.t_h = 0.5;
        assert!(c.validate().is_err());
        let mut c = qubit_config();
        c.mode = CouplingMode::IndependentIncoherent;
        c.gamma_bar = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn closed_form_efficiencies() {
        assert_abs_diff_eq!(efficiency(1.0, 3.0).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert!(efficiency(3.0, 3.0).is_err());
        assert!(efficiency(3.0, 1.0).is_err());
        assert_abs_diff_eq!(eta_ca(1.0, 1.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eta_ca(1.0, 8.0).unwrap(), 0.6464, epsilon = 1e-4);
    }

    #[test]
    fn carnot_guard_over_parameter_grid() {
        for &(li, lf, tc, th) in &[
            (1.0, 3.0, 1.0, 8.0),
            (1.0, 2.0, 1.0, 4.0),
            (0.5, 2.5, 2.0, 16.0),
            (1.0, 6.0, 1.0, 8.0),
        ] {
            if lf / li < th / tc {
                let eta = efficiency(li, lf).unwrap();
                assert!(
                    eta <= 1.0 - tc / th + 1e-12,
                    "Carnot bound violated at ({li}, {lf}, {tc}, {th})"
                );
            }
        }
    }

    #[test]
    fn pbar_reference_values() {
        // Saturation values quoted for the T_h = 40 and 80 baths.
        let p40 = pbar(1.0, 3.0, 1.0, 40.0, 1.0, 1.0).unwrap();
        assert!((p40 - 12.26).abs() / 12.26 < 5e-3, "pbar(40) = {p40}");
        let p80 = pbar(1.0, 3.0, 1.0, 80.0, 1.0, 1.0).unwrap();
        assert!((p80 - 25.59).abs() / 25.59 < 5e-3, "pbar(80) = {p80}");
        // Carnot point gives zero power.
        let zero = pbar(1.0, 8.0, 1.0, 8.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(zero, 0.0, epsilon = 1e-12);
        assert!(pbar(1.0, 3.0, 1.0, 8.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn w_qubit_values_and_bound() {
        assert!((w_qubit(1.0, 3.0, 1.0, 8.0, 1.0) - 0.27679).abs() < 1e-5);
        // Equal exponents: no work.
        assert_abs_diff_eq!(w_qubit(1.0, 3.0, 1.0, 3.0, 1.0), 0.0, epsilon = 1e-14);
        // W' = dlambda omega (p_e,h - p_e,c) with each excited population in
        // (0, 1/2), so |W'| < dlambda omega / 2.
        for li_i in 1..5 {
            for lf_i in (li_i + 1)..8 {
                for tc_i in 1..4 {
                    for th_i in (tc_i + 1)..12 {
                        let (li, lf) = (li_i as f64 * 0.5, lf_i as f64 * 0.5);
                        let (tc, th) = (tc_i as f64, th_i as f64);
                        let w = w_qubit(li, lf, tc, th, 1.0);
                        assert!(w.abs() <= (lf - li) / 2.0 + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn pbar_ca_consistency() {
        for &(tc, th, t_th) in &[(1.0f64, 8.0f64, 1.0), (2.0, 9.0, 0.5), (1.0, 40.0, 2.0)] {
            let via_pbar = pbar(tc.sqrt(), th.sqrt(), tc, th, 1.0, t_th).unwrap();
            let direct = pbar_ca(tc, th, 1.0, t_th).unwrap();
            assert!(
                (via_pbar - direct).abs() < 1e-12,
                "CA consistency: {via_pbar} vs {direct}"
            );
        }
    }

    #[test]
    fn relative_power_values() {
        let p = relative_power(1.0, 3.0, 1.0, 8.0, 1.0);
        assert!((p - 11.68).abs() / 11.68 < 1e-3, "relative power {p}");
        // T -> 0: coth -> 1 from above (monotone approach).
        let mut prev = relative_power(1.0, 3.0, 0.3, 0.6, 1.0);
        for &scale in &[0.15, 0.075] {
            let p = relative_power(1.0, 3.0, scale, 2.0 * scale, 1.0);
            assert!(p > 1.0 && p < prev);
            prev = p;
        }
        for &(li, lf, tc, th) in &[
            (1.0, 3.0, 1.0, 8.0),
            (0.5, 1.5, 0.3, 2.0),
            (2.0, 5.0, 4.0, 30.0),
        ] {
            assert!(relative_power(li, lf, tc, th, 1.0) > 1.0);
        }
    }

    #[test]
    fn full_thermalization_qubit_cycle_bookkeeping() {
        let config = qubit_config();
        let seed = default_seed(&config).unwrap();
        let (record, rho_end) = run_cycle(&config, &seed).unwrap();

        // Quoted corner energies.
        let e1 = mean_energy(&record.states.rho1, &config.h_i(record.states.rho1.basis()).unwrap())
            .unwrap();
        let e3 = mean_energy(&record.states.rho3, &config.h_f(record.states.rho3.basis()).unwrap())
            .unwrap();
        assert_abs_diff_eq!(e1, -0.2311, epsilon = 1e-3);
        assert_abs_diff_eq!(e3, -0.2780, epsilon = 1e-3);

        // Heats against the independent closed form.
        assert!((record.q_h - 0.41519).abs() < 1e-4);
        assert!((record.q_c - (-0.13839)).abs() < 1e-4);
        assert!(
            (record.w_prime - w_qubit(1.0, 3.0, 1.0, 8.0, 1.0)).abs() < 1e-10,
            "W' = {} vs closed form {}",
            record.w_prime,
            w_qubit(1.0, 3.0, 1.0, 8.0, 1.0)
        );

        // First law is exact bookkeeping on the periodic cycle.
        assert!((record.w + record.q_h + record.q_c).abs() < 1e-12);
        // Perfect strokes return the seed.
        assert!(1.0 - fidelity(&seed, &rho_end).unwrap() < 1e-12);
        assert_abs_diff_eq!(record.eta.unwrap(), 2.0 / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn commuting_drive_record_independent_of_t_u() {
        let mut config = qubit_config();
        config.thermal = ThermalStroke::Duration(1.0);
        config.record_thermal_trajectory = false;
        let seed = default_seed(&config).unwrap();
        let (rec0, _) = run_cycle(&config, &seed).unwrap();
        config.t_u = 3.7;
        let (rec1, _) = run_cycle(&config, &seed).unwrap();
        assert_abs_diff_eq!(rec0.q_h, rec1.q_h, epsilon = 1e-12);
        assert_abs_diff_eq!(rec0.q_c, rec1.q_c, epsilon = 1e-12);
        assert_abs_diff_eq!(rec0.w_prime, rec1.w_prime, epsilon = 1e-12);
    }

    #[test]
    fn full_thermalization_limit_cycle_converges_immediately() {
        let config = qubit_config();
        let outcome = run_until_limit_cycle(&config, None, 10).unwrap();
        assert_eq!(outcome.cycles_taken, 1);
    }

    #[test]
    fn qubit_finite_time_limit_cycle() {
        let mut config = qubit_config();
        config.thermal = ThermalStroke::Duration(1.0);
        let outcome = run_until_limit_cycle(&config, None, 200).unwrap();
        assert!(outcome.cycles_taken <= 200);
        assert_abs_diff_eq!(outcome.record.eta.unwrap(), 2.0 / 3.0, epsilon = 1e-6);
        assert!(outcome.t_c_eff > config.t_c);
        assert!(outcome.t_h_eff < config.t_h);
        assert!(outcome.record.w_prime > 0.0);
        assert!(outcome.record.power.unwrap() > 0.0);
    }

    #[test]
    fn efficiency_invariant_across_thermal_durations() {
        for &t_th in &[0.05, 0.3, 1.0, 10.0] {
            let mut config = qubit_config();
            config.thermal = ThermalStroke::Duration(t_th);
            config.record_thermal_trajectory = false;
            let outcome = run_until_limit_cycle(&config, None, 2000).unwrap();
            assert!(
                (outcome.record.eta.unwrap() - 2.0 / 3.0).abs() < 1e-6,
                "eta deviates at t_th = {t_th}"
            );
        }
    }

    #[test]
    fn power_monotone_and_inverse_tail() {
        let grid = [0.05, 0.1, 0.3, 1.0, 3.0, 10.0];
        let mut powers = Vec::new();
        for &t_th in &grid {
            let mut config = qubit_config();
            config.thermal = ThermalStroke::Duration(t_th);
            config.record_thermal_trajectory = false;
            let outcome = run_until_limit_cycle(&config, None, 5000).unwrap();
            powers.push(outcome.record.power.unwrap());
        }
        for w in powers.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "power must not increase with t_th");
        }
        // Fully thermalized tail (past the cold-stroke thermalization time,
        // t_T ~ 19/omega here): P ~ W'_max / (2 t_th) within 1%.
        let w_max = w_qubit(1.0, 3.0, 1.0, 8.0, 1.0);
        for &t_th in &[25.0, 40.0] {
            let mut config = qubit_config();
            config.thermal = ThermalStroke::Duration(t_th);
            config.record_thermal_trajectory = false;
            let outcome = run_until_limit_cycle(&config, None, 5000).unwrap();
            let p = outcome.record.power.unwrap();
            let predicted = w_max / (2.0 * t_th);
            assert!(
                (p - predicted).abs() / predicted < 0.01,
                "tail power off by more than 1% at t_th = {t_th}"
            );
        }
    }

    #[test]
    fn incoherent_mode_scales_extensively() {
        let mut config = qubit_config();
        config.j = 10.0; // N = 20 qubits
        config.mode = CouplingMode::IndependentIncoherent;
        let outcome = run_until_limit_cycle(&config, None, 10).unwrap();
        let single = w_qubit(1.0, 3.0, 1.0, 8.0, 1.0);
        assert!(
            (outcome.record.w_prime - 20.0 * single).abs() < 1e-8,
            "incoherent W' = {} vs 20 * {}",
            outcome.record.w_prime,
            single
        );
    }

    #[test]
    fn isochore_formula_matches_thermal_states() {
        // Thermal qubit states sit exactly on the analytic isochore.
        let basis = SpinBasis::new(0.5).unwrap();
        for &t in &[0.5, 1.0, 2.0, 8.0] {
            let lambda = 3.0;
            let h = lmg_hamiltonian(basis, lambda, 0.0, 1.0).unwrap();
            let rho = gibbs_state(&h, 1.0 / t).unwrap();
            let e = mean_energy(&rho, &h).unwrap();
            assert_abs_diff_eq!(qubit_isochore_t_star(lambda, 1.0, e), t, epsilon = 1e-10);
        }
    }
}
