//! Lindblad operators of the adiabatic master equation.
//!
//! In the instantaneous eigenbasis `{|a>}` of `H`, the coupling `A = 2 S^z`
//! splits into pieces that each change the energy by a fixed Bohr frequency:
//!
//! ```text
//! L_ω = Σ_{ε_b - ε_a = ω} |a><a| A |b><b|
//! ```
//!
//! so `L_ω` with `ω > 0` lowers the energy by `ω` and is paired with the
//! emission rate `γ(ω)`. With this pairing the Gibbs state of the frozen
//! Hamiltonian is stationary, which pins down the sign convention.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::density::DensityMatrix;
use crate::bath::PreparedBath;
use crate::eigen::Eigen;
use crate::error::{Error, Result};
use crate::sector::SpinSector;

/// Bohr frequencies closer than this (in units of `Γ`) share a bin.
pub const DEFAULT_BIN_TOL: f64 = 1e-9;

/// One matrix element `<to| A |from>` of a Lindblad operator, expressed in
/// the energy eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinEntry {
    pub to: usize,
    pub from: usize,
    pub amplitude: f64,
}

/// All transitions sharing one (binned) Bohr frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyBin {
    /// Mean of the member frequencies `ε_from - ε_to`.
    pub omega: f64,
    pub entries: Vec<BinEntry>,
    /// `γ(ω)`.
    pub rate: f64,
    /// `S(ω)`, zero when the Lamb shift is disabled.
    pub lamb: f64,
}

#[derive(Debug, Clone)]
pub struct LindbladDecomposition {
    eigen: Eigen,
    coupling: DMatrix<f64>,
    bins: Vec<FrequencyBin>,
}

/// Splits `A = 2 S^z` into Lindblad operators over the eigenbasis `eig` of
/// the instantaneous Hamiltonian.
pub fn build_decomposition(
    eig: &Eigen,
    sector: &SpinSector,
    bath: &PreparedBath,
    bin_tol: f64,
) -> Result<LindbladDecomposition> {
    let n = eig.dim();
    if n != sector.dim() {
        return Err(Error::DimensionMismatch {
            expected: sector.dim(),
            found: n,
        });
    }
    let a_diag = sector.s_z_diagonal() * 2.0;
    let v = &eig.vectors;
    let mut coupling = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += v[(k, a)] * a_diag[k] * v[(k, b)];
            }
            coupling[(a, b)] = acc;
            coupling[(b, a)] = acc;
        }
    }

    let mut transitions: Vec<(f64, BinEntry)> = Vec::with_capacity(n * n);
    for to in 0..n {
        for from in 0..n {
            let omega = if to == from { 0.0 } else { eig.values[from] - eig.values[to] };
            transitions.push((
                omega,
                BinEntry {
                    to,
                    from,
                    amplitude: coupling[(to, from)],
                },
            ));
        }
    }
    transitions.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut bins = Vec::new();
    let mut start = 0;
    for i in 1..=transitions.len() {
        let split = i == transitions.len() || transitions[i].0 - transitions[i - 1].0 > bin_tol;
        if !split {
            continue;
        }
        let members = &transitions[start..i];
        let has_diagonal = members.iter().any(|(_, e)| e.to == e.from);
        let omega = if has_diagonal {
            0.0
        } else {
            members.iter().map(|(w, _)| w).sum::<f64>() / members.len() as f64
        };
        bins.push(FrequencyBin {
            omega,
            entries: members.iter().map(|(_, e)| *e).collect(),
            rate: bath.gamma(omega),
            lamb: bath.lamb(omega)?,
        });
        start = i;
    }

    Ok(LindbladDecomposition {
        eigen: eig.clone(),
        coupling,
        bins,
    })
}

impl LindbladDecomposition {
    pub fn eigen(&self) -> &Eigen {
        &self.eigen
    }

    pub fn dim(&self) -> usize {
        self.eigen.dim()
    }

    pub fn bins(&self) -> &[FrequencyBin] {
        &self.bins
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.omega).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.rate).collect()
    }

    pub fn lamb_shifts(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.lamb).collect()
    }

    /// `A` in the energy eigenbasis.
    pub fn coupling_energy_basis(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    /// Dense `L_ω` for bin `index`, energy eigenbasis.
    pub fn operator_energy_basis(&self, index: usize) -> DMatrix<f64> {
        let n = self.dim();
        let mut l = DMatrix::zeros(n, n);
        for e in &self.bins[index].entries {
            l[(e.to, e.from)] += e.amplitude;
        }
        l
    }

    /// Dense `L_ω` for bin `index`, Dicke basis.
    pub fn operator_dicke_basis(&self, index: usize) -> DMatrix<f64> {
        let v = &self.eigen.vectors;
        v * self.operator_energy_basis(index) * v.transpose()
    }

    /// `Σ_ω weight(bin) L_ω^† L_ω` in the energy eigenbasis.
    fn weighted_number(&self, weight: impl Fn(&FrequencyBin) -> f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for bin in &self.bins {
            let w = weight(bin);
            if w == 0.0 {
                continue;
            }
            for e1 in &bin.entries {
                if e1.amplitude == 0.0 {
                    continue;
                }
                for e2 in &bin.entries {
                    if e1.to == e2.to {
                        out[(e1.from, e2.from)] += w * e1.amplitude * e2.amplitude;
                    }
                }
            }
        }
        out
    }

    /// `Σ_ω γ(ω) L_ω^† L_ω`, energy eigenbasis.
    pub fn decay_energy_basis(&self) -> DMatrix<f64> {
        self.weighted_number(|b| b.rate)
    }

    /// `H_LS = Σ_ω S(ω) L_ω^† L_ω`, energy eigenbasis.
    pub fn lamb_shift_energy_basis(&self) -> DMatrix<f64> {
        self.weighted_number(|b| b.lamb)
    }

    /// Adds `Σ_ω γ(ω) L_ω ρ L_ω^†` (energy eigenbasis) to `out`.
    pub(crate) fn add_jumps(&self, rho: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        for bin in &self.bins {
            if bin.rate == 0.0 {
                continue;
            }
            for e1 in &bin.entries {
                if e1.amplitude == 0.0 {
                    continue;
                }
                let w1 = bin.rate * e1.amplitude;
                for e2 in &bin.entries {
                    out[(e1.to, e2.to)] += rho[(e1.from, e2.from)] * (w1 * e2.amplitude);
                }
            }
        }
    }

    /// Real-arithmetic form of [`Self::add_jumps`], applied separately to
    /// the real and imaginary parts of `ρ`.
    pub(crate) fn add_jumps_real(&self, rho: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        for bin in &self.bins {
            if bin.rate == 0.0 {
                continue;
            }
            for e1 in &bin.entries {
                if e1.amplitude == 0.0 {
                    continue;
                }
                let w1 = bin.rate * e1.amplitude;
                for e2 in &bin.entries {
                    out[(e1.to, e2.to)] += w1 * e2.amplitude * rho[(e1.from, e2.from)];
                }
            }
        }
    }

    /// Dissipator acting on a density matrix given in the energy eigenbasis.
    pub fn dissipator_energy_basis(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let decay = self.decay_energy_basis().map(|x| Complex64::new(x, 0.0));
        let mut out = (&decay * rho + rho * &decay) * Complex64::new(-0.5, 0.0);
        self.add_jumps(rho, &mut out);
        out
    }

    pub fn to_energy_basis(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let v = self.eigen.vectors.map(|x| Complex64::new(x, 0.0));
        v.transpose() * m * v
    }

    pub fn to_dicke_basis(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let v = self.eigen.vectors.map(|x| Complex64::new(x, 0.0));
        &v * m * v.transpose()
    }
}

/// `D[ρ] = Σ_ω γ(ω) (L_ω ρ L_ω^† - ½ {L_ω^† L_ω, ρ})` with `ρ` and the result
/// in the Dicke basis.
pub fn dissipator_apply(decomp: &LindbladDecomposition, rho: &DensityMatrix) -> Result<DMatrix<Complex64>> {
    if rho.dim() != decomp.dim() {
        return Err(Error::DimensionMismatch {
            expected: decomp.dim(),
            found: rho.dim(),
        });
    }
    let rho_e = decomp.to_energy_basis(rho.data());
    Ok(decomp.to_dicke_basis(&decomp.dissipator_energy_basis(&rho_e)))
}

/// Lamb-shift Hamiltonian in the Dicke basis.
pub fn lamb_shift_h(decomp: &LindbladDecomposition) -> DMatrix<f64> {
    let v = &decomp.eigen.vectors;
    v * decomp.lamb_shift_energy_basis() * v.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathSpec;
    use crate::eigen::eig_sorted;
    use crate::sector::{build_sector, h_total, ModelParams};

    fn setup(n: usize, p: u32, s: f64, spec: BathSpec) -> (SpinSector, LindbladDecomposition) {
        let sec = build_sector(n).unwrap();
        let params = ModelParams::with_unit_field(p).unwrap();
        let eig = eig_sorted(&h_total(&sec, &params, s).unwrap()).unwrap();
        let bath = PreparedBath::new(spec, 2.0 * n as f64 + 1.0).unwrap();
        let d = build_decomposition(&eig, &sec, &bath, DEFAULT_BIN_TOL).unwrap();
        (sec, d)
    }

    fn warm_bath() -> BathSpec {
        BathSpec::ohmic(1e-2, 2.0, 10.0, true).unwrap()
    }

    #[test]
    fn transverse_field_bohr_frequencies() {
        let (_, d) = setup(2, 3, 0.0, warm_bath());
        let freqs = d.frequencies();
        let expect = [-4.0, -2.0, 0.0, 2.0, 4.0];
        assert_eq!(freqs.len(), expect.len());
        for (f, e) in freqs.iter().zip(expect.iter()) {
            assert!((f - e).abs() < 1e-9, "{freqs:?}");
        }
    }

    #[test]
    fn completeness_and_conjugation() {
        for (n, p, s) in [(4usize, 5u32, 0.37), (6, 2, 0.8), (3, 3, 0.0), (5, 4, 1.0)] {
            let (sec, d) = setup(n, p, s, warm_bath());
            let mut total = DMatrix::zeros(n + 1, n + 1);
            for i in 0..d.bins().len() {
                total += d.operator_dicke_basis(i);
            }
            assert!((total - sec.bath_coupling()).camax() < 1e-10);

            let freqs = d.frequencies();
            for (i, &w) in freqs.iter().enumerate() {
                let j = freqs
                    .iter()
                    .position(|&x| (x + w).abs() < 10.0 * DEFAULT_BIN_TOL)
                    .expect("conjugate bin exists");
                let li = d.operator_energy_basis(i);
                let lj = d.operator_energy_basis(j);
                assert!((lj - li.transpose()).camax() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_final_hamiltonian_zero_bin() {
        // at s = 1 with even p the m = ±1 pair (and every ±m pair) is degenerate
        let (_, d) = setup(4, 2, 1.0, warm_bath());
        let zero = d
            .bins()
            .iter()
            .find(|b| b.omega == 0.0)
            .expect("zero-frequency bin");
        // 5 diagonal entries plus 2 ordered pairs for each of the 2 degenerate
        // doublets
        assert_eq!(zero.entries.len(), 5 + 4);
        let l0 = zero
            .entries
            .iter()
            .fold(DMatrix::<f64>::zeros(5, 5), |mut m, e| {
                m[(e.to, e.from)] += e.amplitude;
                m
            });
        assert!(l0.iter().any(|&x| x.abs() > 1.0));
    }

    #[test]
    fn dissipator_traceless_and_hermitian() {
        let (_, d) = setup(4, 5, 0.45, warm_bath());
        let psi: Vec<Complex64> = (0..5).map(|k| Complex64::new(1.0 + k as f64, 0.3 * k as f64)).collect();
        let v = nalgebra::DVector::from_vec(psi);
        let v = &v / Complex64::new(v.norm(), 0.0);
        let rho = DensityMatrix::from_pure(&v);
        let out = dissipator_apply(&d, &rho).unwrap();
        let tr: Complex64 = out.diagonal().iter().sum();
        assert!(tr.norm() < 1e-12);
        assert!((&out - out.adjoint()).camax() < 1e-12);
    }

    #[test]
    fn decoupled_bath_gives_zero() {
        let (_, d) = setup(4, 5, 0.45, BathSpec::ohmic(0.0, 2.0, 10.0, true).unwrap());
        let rho = DensityMatrix::maximally_mixed(5);
        assert!(dissipator_apply(&d, &rho).unwrap().camax() < 1e-15);
        assert!(lamb_shift_h(&d).camax() < 1e-15);
    }

    #[test]
    fn lamb_shift_switch() {
        let (_, d) = setup(4, 5, 0.45, BathSpec::ohmic(1e-2, 2.0, 10.0, false).unwrap());
        assert_eq!(lamb_shift_h(&d).amax(), 0.0);
    }

    #[test]
    fn lamb_shift_commutes_with_frozen_hamiltonian() {
        let (sec, d) = setup(2, 5, 0.5, warm_bath());
        let params = ModelParams::with_unit_field(5).unwrap();
        let h = h_total(&sec, &params, 0.5).unwrap();
        let hls = lamb_shift_h(&d);
        let comm = &h * &hls - &hls * &h;
        let bound = 10.0 * DEFAULT_BIN_TOL
            * sec.bath_coupling().norm().powi(2)
            * d.lamb_shifts().iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        assert!(comm.amax() <= bound.max(1e-12));
        // diagonal in the energy basis
        let e = d.lamb_shift_energy_basis();
        for r in 0..3 {
            for c in 0..3 {
                if r != c {
                    assert!(e[(r, c)].abs() < 1e-8);
                }
            }
        }
    }
}
