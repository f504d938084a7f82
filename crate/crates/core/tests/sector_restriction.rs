//! The Dicke-sector Hamiltonian against the explicit 2^N one.

use nalgebra::DMatrix;
use pspin_core::full_space::full_space_oracle;
use pspin_core::sector::{ground_energy, h_total};
use pspin_core::{eig_sorted, ModelParams, SpinSector};

fn full_spectrum(n: usize, params: &ModelParams, s: f64) -> Vec<f64> {
    let h: DMatrix<f64> = full_space_oracle(n, params, s).unwrap();
    let mut v: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn restricted_levels_appear_in_full_spectrum() {
    for n in [2usize, 3, 4, 5] {
        let sector = SpinSector::new(n).unwrap();
        for p in [1u32, 2, 3, 5] {
            let params = ModelParams::with_unit_field(p).unwrap();
            for s in [0.0, 0.3, 0.5, 0.7, 1.0] {
                let full = full_spectrum(n, &params, s);
                let restricted = eig_sorted(&h_total(&sector, &params, s).unwrap()).unwrap();
                for &e in restricted.values.iter() {
                    let miss = full.iter().map(|f| (f - e).abs()).fold(f64::INFINITY, f64::min);
                    assert!(miss <= 1e-10 * e.abs().max(1.0), "N={n} p={p} s={s}: {e} off by {miss}");
                }
                assert!((restricted.values[0] - full[0]).abs() < 1e-10, "N={n} p={p} s={s}");
            }
        }
    }
}

#[test]
fn classical_ground_energy_examples() {
    let three = ModelParams::with_unit_field(3).unwrap();
    assert!((full_spectrum(3, &three, 1.0)[0] + 3.0).abs() < 1e-12);
    assert_eq!(ground_energy(&SpinSector::new(3).unwrap()), -3.0);

    let five = ModelParams::with_unit_field(5).unwrap();
    let sector = SpinSector::new(4).unwrap();
    let restricted = eig_sorted(&h_total(&sector, &five, 0.5).unwrap()).unwrap().values[0];
    assert!((full_spectrum(4, &five, 0.5)[0] - restricted).abs() < 1e-10);
}
