//! The annealing Hamiltonian on the full `2^N` Hilbert space, built from
//! explicit single-spin operators. Only meant for validating the Dicke-sector
//! restriction at small `N`.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::sector::ModelParams;

pub const MAX_FULL_SPACE_SPINS: usize = 12;

/// `(1 - s) H_0 + s H_p` in the computational basis. Bit `i` of the basis
/// index set means spin `i` points down.
pub fn full_space_oracle(n_spins: usize, params: &ModelParams, s: f64) -> Result<DMatrix<f64>> {
    if n_spins < 1 {
        return Err(invalid("n_spins must be at least 1"));
    }
    if n_spins > MAX_FULL_SPACE_SPINS {
        return Err(invalid(format!(
            "full-space oracle limited to {MAX_FULL_SPACE_SPINS} spins, got {n_spins}"
        )));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(invalid(format!("s must lie in [0, 1], got {s}")));
    }
    let dim = 1usize << n_spins;
    let n = n_spins as f64;
    let mut h = DMatrix::zeros(dim, dim);
    for state in 0..dim {
        let down = state.count_ones() as f64;
        let total_z = n - 2.0 * down;
        h[(state, state)] = -s * n * (total_z / n).powi(params.p() as i32);
        for i in 0..n_spins {
            let flipped = state ^ (1 << i);
            h[(flipped, state)] += -(1.0 - s) * params.gamma();
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::eig_sorted;

    #[test]
    fn refuses_large_systems() {
        let params = ModelParams::with_unit_field(3).unwrap();
        assert!(full_space_oracle(13, &params, 0.5).is_err());
        assert!(full_space_oracle(0, &params, 0.5).is_err());
    }

    #[test]
    fn two_spin_transverse_spectrum() {
        let params = ModelParams::with_unit_field(2).unwrap();
        let h = full_space_oracle(2, &params, 0.0).unwrap();
        let e = eig_sorted(&h).unwrap();
        let expect = [-2.0, 0.0, 0.0, 2.0];
        for (a, b) in e.values.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn three_spin_classical_ground_energy() {
        let params = ModelParams::with_unit_field(3).unwrap();
        let h = full_space_oracle(3, &params, 1.0).unwrap();
        let e = eig_sorted(&h).unwrap();
        assert!((e.values[0] + 3.0).abs() < 1e-12);
    }
}
