//! Cross-module invariants that need full stroke runs.

use spinotto::spinops::build_basis;
use spinotto::states::gibbs_state;
use spinotto::unitary::{evolve_unitary, lmg_hamiltonian, Direction, DriveProtocol};

/// The reference-temperature dip of the critical stroke deepens with the
/// system size: the finite-size precursor of the phase transition sharpens.
#[test]
fn critical_stroke_dip_deepens_with_j() {
    let mut last_min = f64::INFINITY;
    for &j in &[10.0, 20.0, 30.0, 40.0] {
        let basis = build_basis(j).unwrap();
        let h_i = lmg_hamiltonian(basis, 1.0, 0.0, 1.0).unwrap();
        let rho0 = gibbs_state(&h_i, 1.0).unwrap();
        let protocol =
            DriveProtocol::new(1.0, 3.0, 3.0, 8.0, 1.0, Direction::Forward).unwrap();
        let (_, traj) = evolve_unitary(&rho0, &protocol, basis, 2000).unwrap();
        let min_tstar = traj
            .iter()
            .filter(|s| s.t_star.is_finite())
            .map(|s| s.t_star.t_star)
            .fold(f64::INFINITY, f64::min);
        assert!(
            min_tstar < last_min,
            "dip must deepen: min T* = {min_tstar} at j = {j} (previous {last_min})"
        );
        last_min = min_tstar;
    }
    assert!(last_min < 1.0, "the dip drops below the cold-bath temperature");
}
