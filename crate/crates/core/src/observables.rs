//! Residual energy, fidelity, Gibbs weights and the slope fits used to read
//! off scaling laws.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::eigen::eig_sorted;
use crate::error::{invalid, Error, Result};
use crate::evolve::{DensityMatrix, QuantumState};
use crate::sector::{ground_energy, pspin_diagonal, ModelParams, SpinSector};

/// Smallest residual energy reported on a log axis.
pub const RESIDUAL_FLOOR: f64 = 1e-14;

/// Engine that produced a result row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngineTag {
    Closed,
    Lindblad,
    Sa,
}

impl EngineTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EngineTag::Closed => "closed",
            EngineTag::Lindblad => "lindblad",
            EngineTag::Sa => "sa",
        }
    }
}

impl std::fmt::Display for EngineTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EngineTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(EngineTag::Closed),
            "lindblad" => Ok(EngineTag::Lindblad),
            "sa" => Ok(EngineTag::Sa),
            other => Err(invalid(format!("unknown engine `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetadata {
    pub n_spins: usize,
    pub p: u32,
    /// `NaN` when not applicable (closed runs).
    pub beta: f64,
    pub eta_g2: f64,
    pub omega_c: f64,
    pub dt: f64,
    pub bin_tol: f64,
    pub engine: EngineTag,
}

/// Outcome of one anneal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealResult {
    pub t_f: f64,
    pub residual_energy: f64,
    pub fidelity: f64,
    pub metadata: RunMetadata,
}

impl AnnealResult {
    /// Residual energy floored at [`RESIDUAL_FLOOR`], with a flag telling
    /// whether the floor was applied.
    pub fn floored_residual(&self) -> (f64, bool) {
        floor_residual(self.residual_energy)
    }
}

pub fn floor_residual(value: f64) -> (f64, bool) {
    if value < RESIDUAL_FLOOR {
        (RESIDUAL_FLOOR, true)
    } else {
        (value, false)
    }
}

/// `(<H_p> - E_GS) / N` for a pure or mixed state.
pub fn residual_energy(state: &QuantumState, sector: &SpinSector, params: &ModelParams) -> Result<f64> {
    if state.dim() != sector.dim() {
        return Err(Error::DimensionMismatch {
            expected: sector.dim(),
            found: state.dim(),
        });
    }
    let diag = pspin_diagonal(sector, params);
    let energy: f64 = state
        .dicke_populations()
        .iter()
        .zip(diag.iter())
        .map(|(p, e)| p * e)
        .sum();
    Ok((energy - ground_energy(sector)) / sector.n_spins() as f64)
}

/// Population of the ground manifold of `H_p`: the `m = 1` state, plus
/// `m = -1` for even `p`.
pub fn ground_fidelity(state: &QuantumState, sector: &SpinSector, params: &ModelParams) -> Result<f64> {
    if state.dim() != sector.dim() {
        return Err(Error::DimensionMismatch {
            expected: sector.dim(),
            found: state.dim(),
        });
    }
    let pops = state.dicke_populations();
    let mut f = pops[0];
    if params.is_even() {
        f += pops[sector.n_spins()];
    }
    Ok(f)
}

/// Boltzmann weights of an ascending spectrum.
///
/// At `β = ∞` the weight is shared equally by the levels degenerate with the
/// lowest one (within `1e-12` relative).
pub fn gibbs_populations(spectrum: &[f64], beta: f64) -> Result<Vec<f64>> {
    if spectrum.is_empty() {
        return Err(invalid("empty spectrum"));
    }
    if beta.is_nan() || beta < 0.0 {
        return Err(invalid(format!("beta must be >= 0, got {beta}")));
    }
    let e0 = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = if beta.is_infinite() {
        let scale = 1e-12 * e0.abs().max(1.0);
        spectrum
            .iter()
            .map(|&e| if e - e0 <= scale { 1.0 } else { 0.0 })
            .collect()
    } else {
        spectrum.iter().map(|&e| (-beta * (e - e0)).exp()).collect()
    };
    let z: f64 = weights.iter().sum();
    Ok(weights.iter().map(|w| w / z).collect())
}

/// Gibbs state of the real symmetric Hamiltonian `h`, in the basis of `h`.
pub fn gibbs_state(h: &DMatrix<f64>, beta: f64) -> Result<DensityMatrix> {
    let eig = eig_sorted(h)?;
    let values: Vec<f64> = eig.values.iter().copied().collect();
    let p = gibbs_populations(&values, beta)?;
    let n = values.len();
    let data = DMatrix::from_fn(n, n, |r, c| {
        let acc: f64 = (0..n).map(|j| eig.vectors[(r, j)] * p[j] * eig.vectors[(c, j)]).sum();
        Complex64::new(acc, 0.0)
    });
    DensityMatrix::new(data)
}

/// Populations of `rho` in the eigenbasis of `h`, ascending in energy.
pub fn energy_populations(h: &DMatrix<f64>, rho: &DensityMatrix) -> Result<Vec<f64>> {
    if h.nrows() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            found: rho.dim(),
        });
    }
    let eig = eig_sorted(h)?;
    let n = rho.dim();
    Ok((0..n)
        .map(|j| {
            let mut acc = 0.0;
            for r in 0..n {
                for c in 0..n {
                    acc += eig.vectors[(r, j)] * rho.data()[(r, c)].re * eig.vectors[(c, j)];
                }
            }
            acc
        })
        .collect())
}

/// `½ Σ |p_i - q_i|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    /// Pearson correlation coefficient.
    pub correlation: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(invalid(format!("a fit needs at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("all abscissae coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let stderr = (rss / (nf - 2.0) / sxx).sqrt();
    let correlation = if syy == 0.0 { 1.0 } else { sxy / (sxx * syy).sqrt() };
    Ok(LinearFit {
        slope,
        intercept,
        stderr,
        correlation,
    })
}

/// Slope of `log ε` against `log t` for the points with `t` inside the
/// closed `window`.
pub fn fit_loglog_slope(points: &[(f64, f64)], window: (f64, f64)) -> Result<(f64, f64)> {
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .collect();
    if inside.len() < 3 {
        return Err(invalid(format!(
            "{} points inside [{}, {}], need at least 3",
            inside.len(),
            window.0,
            window.1
        )));
    }
    if let Some((t, e)) = inside.iter().find(|(t, e)| !(*e > 0.0) || !(*t > 0.0)) {
        return Err(invalid(format!("nonpositive value in log fit at t = {t}: {e}")));
    }
    let x: Vec<f64> = inside.iter().map(|(t, _)| t.ln()).collect();
    let y: Vec<f64> = inside.iter().map(|(_, e)| e.ln()).collect();
    let fit = linear_fit(&x, &y)?;
    Ok((fit.slope, fit.stderr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::initial_state;
    use crate::sector::build_sector;
    use nalgebra::DVector;
    use proptest::prelude::*;

    #[test]
    fn residual_energy_examples() {
        let sec = build_sector(2).unwrap();
        let p2 = ModelParams::with_unit_field(2).unwrap();
        let ground = QuantumState::Mixed(DensityMatrix::from_populations(&[1.0, 0.0, 0.0]));
        assert!(residual_energy(&ground, &sec, &p2).unwrap().abs() < 1e-15);
        let mixed = QuantumState::Mixed(DensityMatrix::maximally_mixed(3));
        assert!((residual_energy(&mixed, &sec, &p2).unwrap() - 1.0 / 3.0).abs() < 1e-15);

        for n in [3usize, 8, 15] {
            let sec = build_sector(n).unwrap();
            let psi = QuantumState::Pure(initial_state(&sec));
            for p in [1u32, 3, 5, 7] {
                let params = ModelParams::with_unit_field(p).unwrap();
                assert!((residual_energy(&psi, &sec, &params).unwrap() - 1.0).abs() < 1e-13);
            }
        }
        assert!(residual_energy(&mixed, &build_sector(3).unwrap(), &p2).is_err());
    }

    #[test]
    fn fidelity_counts_degenerate_pair_for_even_p() {
        let sec = build_sector(4).unwrap();
        let state = QuantumState::Mixed(DensityMatrix::from_populations(&[0.3, 0.1, 0.1, 0.1, 0.4]));
        let even = ModelParams::with_unit_field(2).unwrap();
        let odd = ModelParams::with_unit_field(3).unwrap();
        assert!((ground_fidelity(&state, &sec, &even).unwrap() - 0.7).abs() < 1e-15);
        assert!((ground_fidelity(&state, &sec, &odd).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn gibbs_examples() {
        let p = gibbs_populations(&[0.0, 1.0], 1.0).unwrap();
        assert!((p[0] - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert!((p[0] - 0.7311).abs() < 1e-4 && (p[1] - 0.2689).abs() < 1e-4);
        assert_eq!(gibbs_populations(&[-1.0, 0.0, 2.0], 0.0).unwrap(), vec![1.0 / 3.0; 3]);
        assert_eq!(gibbs_populations(&[-1.0, 0.0, 2.0], f64::INFINITY).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(gibbs_populations(&[-1.0, -1.0, 2.0], f64::INFINITY).unwrap(), vec![0.5, 0.5, 0.0]);
        assert!(gibbs_populations(&[0.0], -1.0).is_err());
        // overflow safety
        let p = gibbs_populations(&[-1e4, 0.0], 10.0).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn gibbs_state_has_gibbs_populations() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let rho = gibbs_state(&h, 1.5).unwrap();
        rho.validate().unwrap();
        let pops = energy_populations(&h, &rho).unwrap();
        let expect = gibbs_populations(&[-1.0, 1.0], 1.5).unwrap();
        assert!(total_variation(&pops, &expect) < 1e-14);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (0..20).map(|i| 10f64.powf(i as f64 / 5.0)).map(|t| (t, 3.0 / (t * t))).collect();
        let (slope, err) = fit_loglog_slope(&pts, (1.0, 1e4)).unwrap();
        assert!((slope + 2.0).abs() < 1e-12 && err < 1e-10);
        assert!(fit_loglog_slope(&pts, (1.0, 2.0)).is_err());
        let bad = [(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)];
        assert!(fit_loglog_slope(&bad, (0.0, 10.0)).is_err());
    }

    #[test]
    fn slope_of_exponential_depends_on_window() {
        let pts: Vec<(f64, f64)> = (1..=40).map(|i| i as f64).map(|t| (t, (-t / 5.0).exp())).collect();
        let (early, _) = fit_loglog_slope(&pts, (1.0, 5.0)).unwrap();
        let (late, _) = fit_loglog_slope(&pts, (30.0, 40.0)).unwrap();
        assert!(late < 3.0 * early);
    }

    #[test]
    fn floor_flags_tiny_values() {
        assert_eq!(floor_residual(1e-16), (RESIDUAL_FLOOR, true));
        assert_eq!(floor_residual(1e-3), (1e-3, false));
    }

    #[test]
    fn residual_invariant_under_global_phase() {
        let sec = build_sector(5).unwrap();
        let params = ModelParams::with_unit_field(3).unwrap();
        let psi = DVector::from_fn(6, |k, _| Complex64::new(1.0 + k as f64, -0.5 * k as f64));
        let psi = &psi / Complex64::new(psi.norm(), 0.0);
        let rotated = &psi * Complex64::from_polar(1.0, 0.9);
        let a = residual_energy(&QuantumState::Pure(psi.clone()), &sec, &params).unwrap();
        let b = residual_energy(&QuantumState::Pure(rotated), &sec, &params).unwrap();
        let c = residual_energy(&QuantumState::Mixed(DensityMatrix::from_pure(&psi)), &sec, &params).unwrap();
        assert!((a - b).abs() < 1e-14 && (a - c).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn gibbs_sums_to_one_and_is_monotone(
            mut spec in proptest::collection::vec(-50.0f64..50.0, 1..12),
            beta in 0.0f64..20.0,
        ) {
            spec.sort_by(f64::total_cmp);
            let p = gibbs_populations(&spec, beta).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for w in p.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-15);
            }
        }

        #[test]
        fn loglog_slope_scale_invariant(c in 1e-6f64..1e6, a in -4.0f64..0.0) {
            let pts: Vec<(f64, f64)> = (1..10).map(|i| i as f64 * 3.0).map(|t| (t, t.powf(a) * (1.0 + 0.1 * (t).sin()))).collect();
            let scaled: Vec<(f64, f64)> = pts.iter().map(|(t, e)| (*t, c * e)).collect();
            let (s1, _) = fit_loglog_slope(&pts, (0.0, 100.0)).unwrap();
            let (s2, _) = fit_loglog_slope(&scaled, (0.0, 100.0)).unwrap();
            prop_assert!((s1 - s2).abs() < 1e-10);
        }
    }
}
