//! Density matrices, Gibbs states, entropy, fidelity and the
//! reference-temperature solver.
//!
//! The reference temperature `T* = 1/beta*` of a state `rho` under a
//! Hamiltonian `H` is the temperature of the Gibbs state of `H` whose von
//! Neumann entropy equals `S(rho)`. Entropies are in nats (`k_B = 1`).

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spinops::{hermitian_eigen, hermitian_eigenvalues, CMatrix, Operator, SpinBasis};

/// Hermiticity / trace tolerance for state validation.
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues of a state may undershoot zero by at most this much.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

/// Hermitian, unit-trace, positive-semidefinite state of the working fluid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    basis: SpinBasis,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validating constructor: Hermitian to `1e-10`, trace 1 to `1e-10`,
    /// eigenvalues above `-1e-10`.
    pub fn new(basis: SpinBasis, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                actual: matrix.nrows(),
            });
        }
        let herm_defect = (&matrix - matrix.adjoint()).norm();
        if herm_defect > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian: |rho - rho^dag| = {herm_defect:.3e}"
            )));
        }
        let tr: Complex64 = matrix.diagonal().sum();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace = {tr} != 1")));
        }
        let min_eig = hermitian_eigenvalues(&matrix)
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_eig < EIGENVALUE_FLOOR {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { basis, matrix })
    }

    /// Constructor for evolver-internal states whose invariants are tracked
    /// by the integrator itself.
    pub(crate) fn new_unchecked(basis: SpinBasis, matrix: CMatrix) -> Self {
        Self { basis, matrix }
    }

    /// Pure state `|psi><psi|` (the vector is normalized first).
    pub fn pure(basis: SpinBasis, psi: &[Complex64]) -> Result<Self> {
        if psi.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                actual: psi.len(),
            });
        }
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-15 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let d = basis.dim();
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            for k in 0..d {
                m[(i, k)] = psi[i] * psi[k].conj() / (norm * norm);
            }
        }
        Ok(Self { basis, matrix: m })
    }

    /// Diagonal state from a population vector (must be non-negative and
    /// sum to 1 within tolerance).
    pub fn from_populations(basis: SpinBasis, p: &[f64]) -> Result<Self> {
        if p.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                actual: p.len(),
            });
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("populations sum to {sum}")));
        }
        if let Some(&bad) = p.iter().find(|&&x| x < EIGENVALUE_FLOOR) {
            return Err(Error::InvalidState(format!("negative population {bad:.3e}")));
        }
        let d = basis.dim();
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = Complex64::new(p[i].max(0.0), 0.0);
        }
        Ok(Self { basis, matrix: m })
    }

    pub fn maximally_mixed(basis: SpinBasis) -> Self {
        let d = basis.dim();
        Self {
            basis,
            matrix: CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0),
        }
    }

    pub fn basis(&self) -> SpinBasis {
        self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|c| c.re).sum()
    }

    /// Diagonal entries (populations in the `J_z` basis).
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|c| c.re).collect()
    }

    /// Eigenvalues, ascending, unclipped.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Frobenius norm of the off-diagonal part.
    pub fn coherence_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.matrix.nrows() {
            for k in 0..self.matrix.ncols() {
                if i != k {
                    acc += self.matrix[(i, k)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.coherence_norm() <= tol
    }

    /// `<O> = Tr(O rho)`.
    pub fn expectation(&self, op: &Operator) -> Result<Complex64> {
        if op.basis() != self.basis {
            return Err(Error::DimensionMismatch {
                expected: self.basis.dim(),
                actual: op.basis().dim(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.matrix.nrows() {
            for k in 0..self.matrix.ncols() {
                acc += op.matrix()[(i, k)] * self.matrix[(k, i)];
            }
        }
        Ok(acc)
    }
}

/// Gibbs state `rho = exp(-beta H) / Tr exp(-beta H)`.
///
/// Energies are shifted by the ground-state energy before exponentiation so
/// large `beta` cannot overflow.
pub fn gibbs_state(h: &Operator, beta: f64) -> Result<DensityMatrix> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature beta = {beta} must be >= 0"
        )));
    }
    let (vals, vecs) = h.eigh();
    let e0 = vals[0];
    let weights: Vec<f64> = vals.iter().map(|e| (-(beta) * (e - e0)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let d = h.basis().dim();
    let mut diag = CMatrix::zeros(d, d);
    for i in 0..d {
        diag[(i, i)] = Complex64::new(weights[i] / z, 0.0);
    }
    let m = &vecs * diag * vecs.adjoint();
    // Symmetrize away the eigenvector roundoff.
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(DensityMatrix::new_unchecked(h.basis(), m))
}

/// Von Neumann entropy `S = -sum p ln p` in nats.
///
/// Eigenvalues in `(-1e-10, 0)` are clipped to zero; anything below that
/// signals an invalid state.
pub fn entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_spectrum(&rho.eigenvalues())
}

/// Entropy of a probability vector with the same clipping rules as
/// [`entropy`]; also used directly on the diagonal fast path.
pub fn entropy_of_spectrum(probs: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &p in probs {
        if p < EIGENVALUE_FLOOR {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {p:.3e} in entropy"
            )));
        }
        if p > 0.0 {
            s -= p * p.ln();
        }
    }
    Ok(s.max(0.0))
}

/// Mean energy `Re Tr(H rho)`.
pub fn mean_energy(rho: &DensityMatrix, h: &Operator) -> Result<f64> {
    let v = rho.expectation(h)?;
    debug_assert!(
        v.im.abs() < 1e-10,
        "imaginary residue {:.3e} in mean energy",
        v.im
    );
    Ok(v.re)
}

/// Classification of the reference-temperature query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThermalStatus {
    Finite,
    /// Entropy at (or above) its maximum `ln d`: `T* -> infinity`.
    InfiniteTemperature,
    /// Entropy at (or below) the ground-degeneracy entropy: `T* -> 0`.
    ZeroTemperature,
}

/// Result of the reference-temperature search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalQuery {
    pub beta_star: f64,
    pub t_star: f64,
    pub status: ThermalStatus,
}

impl ThermalQuery {
    fn finite(beta: f64) -> Self {
        Self {
            beta_star: beta,
            t_star: 1.0 / beta,
            status: ThermalStatus::Finite,
        }
    }

    fn infinite_temperature() -> Self {
        Self {
            beta_star: 0.0,
            t_star: f64::INFINITY,
            status: ThermalStatus::InfiniteTemperature,
        }
    }

    fn zero_temperature() -> Self {
        Self {
            beta_star: f64::INFINITY,
            t_star: 0.0,
            status: ThermalStatus::ZeroTemperature,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.status == ThermalStatus::Finite
    }
}

/// Reference-temperature solver with the Hamiltonian spectrum cached, so a
/// trajectory under a fixed `H` pays the eigendecomposition once.
#[derive(Debug, Clone)]
pub struct ReferenceSolver {
    basis: SpinBasis,
    /// Energies shifted so the ground state sits at zero, ascending.
    shifted: Vec<f64>,
    eigenvectors: CMatrix,
    ground_degeneracy: usize,
}

/// Entropy bisection is refined until the entropy mismatch drops below this.
pub const ENTROPY_MATCH_TOL: f64 = 1e-12;

impl ReferenceSolver {
    pub fn new(h: &Operator) -> Result<Self> {
        if !h.is_hermitian(1e-10) {
            return Err(Error::InvalidParameter(
                "reference temperature needs a Hermitian Hamiltonian".into(),
            ));
        }
        let (vals, vecs) = h.eigh();
        let e0 = vals[0];
        let span = vals.last().copied().unwrap_or(e0) - e0;
        let deg_tol = 1e-12 * span.max(1.0);
        let shifted: Vec<f64> = vals.iter().map(|e| e - e0).collect();
        let ground_degeneracy = shifted.iter().filter(|&&x| x <= deg_tol).count();
        Ok(Self {
            basis: h.basis(),
            shifted,
            eigenvectors: vecs,
            ground_degeneracy,
        })
    }

    fn dim(&self) -> usize {
        self.shifted.len()
    }

    /// Gibbs entropy as a function of `beta` from the cached spectrum:
    /// `S = ln Z + beta <E - E0>`.
    pub fn gibbs_entropy(&self, beta: f64) -> f64 {
        let mut z = 0.0;
        let mut e_avg = 0.0;
        for &x in &self.shifted {
            let w = (-beta * x).exp();
            z += w;
            e_avg += x * w;
        }
        e_avg /= z;
        z.ln() + beta * e_avg
    }

    /// Gibbs populations over the Hamiltonian eigenbasis.
    pub fn gibbs_populations(&self, beta: f64) -> Vec<f64> {
        let weights: Vec<f64> = self.shifted.iter().map(|&x| (-beta * x).exp()).collect();
        let z: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / z).collect()
    }

    /// The reference thermal state for a query (used as the fidelity target
    /// along trajectories). Sentinel statuses map to the corresponding
    /// limiting states.
    pub fn reference_state(&self, query: &ThermalQuery) -> DensityMatrix {
        let d = self.dim();
        let probs = match query.status {
            ThermalStatus::Finite => self.gibbs_populations(query.beta_star),
            ThermalStatus::InfiniteTemperature => vec![1.0 / d as f64; d],
            ThermalStatus::ZeroTemperature => {
                let g = self.ground_degeneracy;
                let mut p = vec![0.0; d];
                for slot in p.iter_mut().take(g) {
                    *slot = 1.0 / g as f64;
                }
                p
            }
        };
        let mut diag = CMatrix::zeros(d, d);
        for i in 0..d {
            diag[(i, i)] = Complex64::new(probs[i], 0.0);
        }
        let m = &self.eigenvectors * diag * self.eigenvectors.adjoint();
        let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        DensityMatrix::new_unchecked(self.basis, m)
    }

    /// Solve `S(gibbs(beta*)) = s` by bracketed bisection on the strictly
    /// decreasing map `beta -> S(beta)`.
    pub fn query_entropy(&self, s: f64) -> ThermalQuery {
        let d = self.dim();
        let s_max = (d as f64).ln();
        if s >= s_max - 1e-12 {
            return ThermalQuery::infinite_temperature();
        }
        let s_min = (self.ground_degeneracy as f64).ln();
        if s <= s_min + 1e-12 {
            return ThermalQuery::zero_temperature();
        }

        let mut lo = 1e-8;
        // The default bracket start may already sit below the target
        // entropy for very hot states; back off toward beta = 0.
        let mut guard = 0;
        while self.gibbs_entropy(lo) < s {
            lo *= 0.5;
            guard += 1;
            if guard > 4000 {
                return ThermalQuery::infinite_temperature();
            }
        }
        let mut hi = lo.max(1.0);
        guard = 0;
        while self.gibbs_entropy(hi) >= s {
            hi *= 2.0;
            guard += 1;
            if guard > 2000 {
                return ThermalQuery::zero_temperature();
            }
        }

        let mut mid = 0.5 * (lo + hi);
        for _ in 0..500 {
            mid = 0.5 * (lo + hi);
            let sm = self.gibbs_entropy(mid);
            if (sm - s).abs() < ENTROPY_MATCH_TOL {
                break;
            }
            if sm > s {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) <= f64::EPSILON * mid {
                break;
            }
        }
        ThermalQuery::finite(mid)
    }

    pub fn query(&self, rho: &DensityMatrix) -> Result<ThermalQuery> {
        if rho.basis().dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: rho.basis().dim(),
            });
        }
        Ok(self.query_entropy(entropy(rho)?))
    }
}

/// Reference temperature of `rho` under `H` (see [`ReferenceSolver`]).
pub fn reference_temperature(rho: &DensityMatrix, h: &Operator) -> Result<ThermalQuery> {
    ReferenceSolver::new(h)?.query(rho)
}

/// Reference-temperature query against a bare energy spectrum (no
/// eigenvectors needed); used where the Hamiltonian is already diagonalized.
pub fn thermal_query_for_spectrum(energies: &[f64], s: f64) -> ThermalQuery {
    let mut sorted = energies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let e0 = sorted[0];
    let span = sorted.last().copied().unwrap_or(e0) - e0;
    let deg_tol = 1e-12 * span.max(1.0);
    let shifted: Vec<f64> = sorted.iter().map(|e| e - e0).collect();
    let ground_degeneracy = shifted.iter().filter(|&&x| x <= deg_tol).count();
    let solver = ReferenceSolver {
        basis: SpinBasis::from_twice_j((energies.len() - 1) as u32),
        shifted,
        eigenvectors: CMatrix::zeros(0, 0),
        ground_degeneracy,
    };
    solver.query_entropy(s)
}

/// Uhlmann fidelity `F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`,
/// clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.basis().dim() != sigma.basis().dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.basis().dim(),
            actual: sigma.basis().dim(),
        });
    }
    // Commuting diagonal states reduce to the classical Bhattacharyya form.
    if rho.is_diagonal(1e-13) && sigma.is_diagonal(1e-13) {
        return Ok(fidelity_diagonal(&rho.populations(), &sigma.populations()));
    }
    // Eigenvalues at rounding level must not leak through the square root
    // (sqrt amplifies 1e-16 noise to 1e-8).
    let clip = |v: f64| if v < 1e-14 { 0.0 } else { v };
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let d = vals.len();
    let mut sqrt_diag = CMatrix::zeros(d, d);
    for i in 0..d {
        sqrt_diag[(i, i)] = Complex64::new(clip(vals[i]).sqrt(), 0.0);
    }
    let sqrt_rho = &vecs * sqrt_diag * vecs.adjoint();
    let inner = &sqrt_rho * sigma.matrix() * &sqrt_rho;
    let inner = (&inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
    let inner_vals = hermitian_eigenvalues(&inner);
    let tr: f64 = inner_vals.iter().map(|&v| clip(v).sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// Fidelity of two classical distributions, `(sum sqrt(p q))^2`.
pub fn fidelity_diagonal(p: &[f64], q: &[f64]) -> f64 {
    let tr: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| (a.max(0.0) * b.max(0.0)).sqrt())
        .sum();
    (tr * tr).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinops::{build_basis, jz, Operator};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// H = -lambda omega Jz on a spin-j basis.
    fn spin_hamiltonian(j: f64, lambda: f64, omega: f64) -> Operator {
        let basis = build_basis(j).unwrap();
        let z = jz(basis);
        Operator::new(basis, z.matrix() * Complex64::new(-lambda * omega, 0.0)).unwrap()
    }

    /// Qubit H = -(lambda/2) omega sigma_z, i.e. the j = 1/2 collective form.
    fn qubit_hamiltonian(lambda: f64, omega: f64) -> Operator {
        spin_hamiltonian(0.5, lambda, omega)
    }

    fn random_density(rng: &mut ChaCha8Rng, basis: SpinBasis) -> DensityMatrix {
        let d = basis.dim();
        let mut a = CMatrix::zeros(d, d);
        for i in 0..d {
            for k in 0..d {
                a[(i, k)] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let m = &a * a.adjoint();
        let tr: f64 = m.diagonal().iter().map(|c| c.re).sum();
        DensityMatrix::new(basis, m / Complex64::new(tr, 0.0)).unwrap()
    }

    #[test]
    fn gibbs_at_infinite_temperature_is_maximally_mixed() {
        let h = spin_hamiltonian(2.0, 1.3, 1.0);
        let rho = gibbs_state(&h, 0.0).unwrap();
        let d = 5.0;
        for i in 0..5 {
            assert_abs_diff_eq!(rho.matrix()[(i, i)].re, 1.0 / d, epsilon = 1e-14);
        }
    }

    #[test]
    fn gibbs_rejects_negative_beta() {
        let h = qubit_hamiltonian(1.0, 1.0);
        assert!(gibbs_state(&h, -0.1).is_err());
    }

    #[test]
    fn qubit_thermal_populations_and_energy() {
        // T = 1 omega, lambda = 1: p_e = 1/(1 + e), <E> ~ -0.231 omega.
        let h = qubit_hamiltonian(1.0, 1.0);
        let rho = gibbs_state(&h, 1.0).unwrap();
        // Excited state is m = -1/2 (index 0) for lambda > 0.
        let p_e = rho.matrix()[(0, 0)].re;
        assert_abs_diff_eq!(p_e, 1.0 / (1.0 + 1f64.exp()), epsilon = 1e-12);
        let e = mean_energy(&rho, &h).unwrap();
        assert_abs_diff_eq!(e, -0.2311, epsilon = 5e-5);
    }

    #[test]
    fn collective_thermal_energy_matches_quoted_value() {
        // lambda = 3, T_h = 8 omega, j = 1/2: <E> ~ -0.278 omega.
        let h = qubit_hamiltonian(3.0, 1.0);
        let rho = gibbs_state(&h, 1.0 / 8.0).unwrap();
        let e = mean_energy(&rho, &h).unwrap();
        assert_abs_diff_eq!(e, -0.27800, epsilon = 5e-5);
    }

    #[test]
    fn entropy_limits() {
        let basis = build_basis(1.5).unwrap();
        let mut psi = vec![Complex64::new(0.0, 0.0); 4];
        psi[2] = Complex64::new(1.0, 0.0);
        let pure = DensityMatrix::pure(basis, &psi).unwrap();
        assert_abs_diff_eq!(entropy(&pure).unwrap(), 0.0, epsilon = 1e-12);

        let mixed = DensityMatrix::maximally_mixed(basis);
        assert_abs_diff_eq!(entropy(&mixed).unwrap(), 4f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn entropy_of_qubit_populations() {
        // -sum p ln p for (0.7311, 0.2689); direct scalar evaluation.
        let p = [0.7311, 0.2689];
        let expected: f64 = -p.iter().map(|&x: &f64| x * x.ln()).sum::<f64>();
        let basis = build_basis(0.5).unwrap();
        let rho = DensityMatrix::from_populations(basis, &p).unwrap();
        assert_abs_diff_eq!(entropy(&rho).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 0.5822, epsilon = 1e-4);
    }

    #[test]
    fn entropy_rejects_bad_eigenvalue() {
        assert!(entropy_of_spectrum(&[1.1, -0.1]).is_err());
        // In-tolerance negatives are clipped.
        assert_abs_diff_eq!(
            entropy_of_spectrum(&[1.0, -0.5e-10]).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mean_energy_of_traceless_h_vanishes() {
        let basis = build_basis(3.0).unwrap();
        let h = spin_hamiltonian(3.0, 0.7, 1.0);
        let rho = DensityMatrix::maximally_mixed(basis);
        assert_abs_diff_eq!(mean_energy(&rho, &h).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn mean_energy_dimension_mismatch() {
        let h = qubit_hamiltonian(1.0, 1.0);
        let rho = DensityMatrix::maximally_mixed(build_basis(1.0).unwrap());
        assert!(mean_energy(&rho, &h).is_err());
    }

    #[test]
    fn reference_temperature_fixed_point() {
        for &(j, lambda, beta0) in &[(0.5, 1.0, 1.0), (5.0, 3.0, 0.125), (20.0, 1.0, 2.0)] {
            let h = spin_hamiltonian(j, lambda, 1.0);
            let rho = gibbs_state(&h, beta0).unwrap();
            let q = reference_temperature(&rho, &h).unwrap();
            assert!(q.is_finite());
            assert!(
                (q.beta_star - beta0).abs() / beta0 < 1e-9,
                "beta* = {} vs beta0 = {} (j = {j})",
                q.beta_star,
                beta0
            );
        }
    }

    #[test]
    fn reference_temperature_sentinels() {
        let h = spin_hamiltonian(1.0, 1.0, 1.0);
        let mixed = DensityMatrix::maximally_mixed(build_basis(1.0).unwrap());
        let q = reference_temperature(&mixed, &h).unwrap();
        assert_eq!(q.status, ThermalStatus::InfiniteTemperature);

        let mut psi = vec![Complex64::new(0.0, 0.0); 3];
        psi[2] = Complex64::new(1.0, 0.0); // m = +1: ground state of -Jz
        let pure = DensityMatrix::pure(build_basis(1.0).unwrap(), &psi).unwrap();
        let q = reference_temperature(&pure, &h).unwrap();
        assert_eq!(q.status, ThermalStatus::ZeroTemperature);
    }

    #[test]
    fn reference_temperature_inverts_qubit_populations() {
        let h = qubit_hamiltonian(1.0, 1.0);
        let basis = build_basis(0.5).unwrap();
        // Populations ordered as (m = -1/2 excited, m = +1/2 ground).
        let rho = DensityMatrix::from_populations(basis, &[0.2689, 0.7311]).unwrap();
        let q = reference_temperature(&rho, &h).unwrap();
        assert!(q.is_finite());
        assert_abs_diff_eq!(q.t_star, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn reference_temperature_monotone_in_entropy() {
        let h = spin_hamiltonian(2.5, 1.7, 1.0);
        let solver = ReferenceSolver::new(&h).unwrap();
        let mut last: Option<(f64, f64)> = None;
        for &beta in &[4.0, 2.0, 1.0, 0.5, 0.25, 0.1, 0.05] {
            let rho = gibbs_state(&h, beta).unwrap();
            let s = entropy(&rho).unwrap();
            let q = solver.query(&rho).unwrap();
            assert!(q.is_finite());
            if let Some((s_prev, b_prev)) = last {
                assert!(s > s_prev);
                assert!(q.beta_star < b_prev, "beta* must decrease with entropy");
            }
            last = Some((s, q.beta_star));
        }
    }

    #[test]
    fn fidelity_basic_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let basis = build_basis(1.5).unwrap();
        for _ in 0..20 {
            let a = random_density(&mut rng, basis);
            let b = random_density(&mut rng, basis);
            let fab = fidelity(&a, &b).unwrap();
            let fba = fidelity(&b, &a).unwrap();
            assert!((0.0..=1.0).contains(&fab));
            assert!((fab - fba).abs() < 1e-10, "fidelity must be symmetric");
            assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn fidelity_pure_state_reduction() {
        let basis = build_basis(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let psi: Vec<Complex64> = (0..3)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let phi: Vec<Complex64> = (0..3)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let np = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let nf = phi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let overlap: Complex64 = psi
                .iter()
                .zip(&phi)
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>()
                / Complex64::new(np * nf, 0.0);
            let rho = DensityMatrix::pure(basis, &psi).unwrap();
            let sigma = DensityMatrix::pure(basis, &phi).unwrap();
            let f = fidelity(&rho, &sigma).unwrap();
            assert_abs_diff_eq!(f, overlap.norm_sqr(), epsilon = 1e-10);
        }
    }

    #[test]
    fn fidelity_orthogonal_pure_states() {
        let basis = build_basis(0.5).unwrap();
        let up = DensityMatrix::pure(
            basis,
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap();
        let down = DensityMatrix::pure(
            basis,
            &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        assert_abs_diff_eq!(fidelity(&up, &down).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn density_matrix_validation() {
        let basis = build_basis(0.5).unwrap();
        let mut bad = DMatrix::<Complex64>::zeros(2, 2);
        bad[(0, 0)] = Complex64::new(0.7, 0.0);
        bad[(1, 1)] = Complex64::new(0.7, 0.0);
        assert!(DensityMatrix::new(basis, bad).is_err()); // trace 1.4

        let mut nonherm = DMatrix::<Complex64>::zeros(2, 2);
        nonherm[(0, 0)] = Complex64::new(0.5, 0.0);
        nonherm[(1, 1)] = Complex64::new(0.5, 0.0);
        nonherm[(0, 1)] = Complex64::new(0.3, 0.0);
        assert!(DensityMatrix::new(basis, nonherm).is_err());
    }
}
