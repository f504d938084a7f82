//! Collective spin operators in the maximum-spin sector and the annealing
//! Hamiltonians built from them.
//!
//! Basis states are ordered by descending magnetization: index `k` holds
//! `N - k` spins up, magnetization `m_k = (N - 2k)/N` and `S^z = N m_k / 2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::eigen::{eig_tridiagonal, Eigen};
use crate::error::{invalid, Result};

/// The `S = N/2` Dicke sector of `N` spins.
#[derive(Debug, Clone)]
pub struct SpinSector {
    n_spins: usize,
    m_values: Vec<f64>,
    s_x: DMatrix<f64>,
    s_z: DMatrix<f64>,
}

impl SpinSector {
    pub fn new(n_spins: usize) -> Result<Self> {
        build_sector(n_spins)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.n_spins + 1
    }

    /// Magnetizations per spin, `1, 1 - 2/N, ..., -1`.
    pub fn m_values(&self) -> &[f64] {
        &self.m_values
    }

    pub fn s_x(&self) -> &DMatrix<f64> {
        &self.s_x
    }

    pub fn s_z(&self) -> &DMatrix<f64> {
        &self.s_z
    }

    /// `S^y = (S^+ - S^-) / 2i`, purely imaginary.
    pub fn s_y(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut s_y = DMatrix::zeros(n, n);
        // s_x[(k, k+1)] is the matrix element <k| S^x |k+1>, where |k> has
        // the larger S^z. S^+ |k+1> = 2 s_x[(k, k+1)] |k>.
        for k in 0..n - 1 {
            let ladder = 2.0 * self.s_x[(k, k + 1)];
            s_y[(k, k + 1)] = Complex64::new(0.0, -ladder / 2.0);
            s_y[(k + 1, k)] = Complex64::new(0.0, ladder / 2.0);
        }
        s_y
    }

    /// Diagonal of `S^z`, i.e. `N m_k / 2`.
    pub fn s_z_diagonal(&self) -> DVector<f64> {
        self.s_z.diagonal()
    }

    /// Entries `<k| S^x |k+1>` for `k = 0..N`.
    pub fn s_x_off_diagonal(&self) -> Vec<f64> {
        (0..self.n_spins).map(|k| self.s_x[(k, k + 1)]).collect()
    }

    /// The collective bath coupling `A = sum_i sigma^z_i = 2 S^z`.
    pub fn bath_coupling(&self) -> DMatrix<f64> {
        &self.s_z * 2.0
    }

    /// Basis index of the Dicke state with `up` spins pointing up.
    pub fn index_of_up_count(&self, up: usize) -> usize {
        self.n_spins - up
    }
}

/// Builds the collective-spin operators for `n_spins` spins.
pub fn build_sector(n_spins: usize) -> Result<SpinSector> {
    if n_spins < 1 {
        return Err(invalid("n_spins must be at least 1"));
    }
    let n = n_spins as f64;
    let dim = n_spins + 1;
    let total = n / 2.0;
    let m_values: Vec<f64> = (0..dim)
        .map(|k| (n_spins as f64 - 2.0 * k as f64) / n)
        .collect();

    let mut s_z = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        s_z[(k, k)] = total - k as f64;
    }

    let mut s_x = DMatrix::zeros(dim, dim);
    for k in 0..n_spins {
        // lower state of the pair has S^z = S - k - 1
        let m_lower = total - (k + 1) as f64;
        let elem = 0.5 * (total * (total + 1.0) - m_lower * (m_lower + 1.0)).sqrt();
        s_x[(k, k + 1)] = elem;
        s_x[(k + 1, k)] = elem;
    }

    Ok(SpinSector {
        n_spins,
        m_values,
        s_x,
        s_z,
    })
}

/// Interaction exponent `p` and transverse field strength `Γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    p: u32,
    gamma: f64,
}

impl ModelParams {
    pub fn new(p: u32, gamma: f64) -> Result<Self> {
        if p < 1 {
            return Err(invalid("p must be at least 1"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("gamma must be positive and finite, got {gamma}")));
        }
        Ok(Self { p, gamma })
    }

    /// `Γ = 1`, the energy unit.
    pub fn with_unit_field(p: u32) -> Result<Self> {
        Self::new(p, 1.0)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_even(&self) -> bool {
        self.p.is_multiple_of(2)
    }
}

/// Linear schedule `s(t) = t / t_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    t_f: f64,
}

impl AnnealSchedule {
    pub fn linear(t_f: f64) -> Result<Self> {
        if !(t_f > 0.0 && t_f.is_finite()) {
            return Err(invalid(format!("t_f must be positive and finite, got {t_f}")));
        }
        Ok(Self { t_f })
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    /// Interpolation parameter, clamped to `[0, 1]`.
    pub fn s(&self, t: f64) -> f64 {
        (t / self.t_f).clamp(0.0, 1.0)
    }
}

/// Diagonal of the p-spin Hamiltonian, `-N m_k^p`.
pub fn pspin_diagonal(sector: &SpinSector, params: &ModelParams) -> DVector<f64> {
    let n = sector.n_spins() as f64;
    DVector::from_iterator(
        sector.dim(),
        sector.m_values().iter().map(|m| -n * m.powi(params.p() as i32)),
    )
}

/// `H_p = -N (sum_i sigma^z_i / N)^p`, diagonal in the Dicke basis.
pub fn h_pspin(sector: &SpinSector, params: &ModelParams) -> DMatrix<f64> {
    DMatrix::from_diagonal(&pspin_diagonal(sector, params))
}

/// `H_0 = -Γ sum_i sigma^x_i = -2Γ S^x`.
pub fn h_transverse(sector: &SpinSector, params: &ModelParams) -> DMatrix<f64> {
    sector.s_x() * (-2.0 * params.gamma())
}

/// `H(s) = (1 - s) H_0 + s H_p`.
pub fn h_total(sector: &SpinSector, params: &ModelParams, s: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&s) {
        return Err(invalid(format!("s must lie in [0, 1], got {s}")));
    }
    let mut h = h_transverse(sector, params) * (1.0 - s);
    let diag = pspin_diagonal(sector, params);
    for k in 0..sector.dim() {
        h[(k, k)] += s * diag[k];
    }
    Ok(h)
}

/// Diagonal and first off-diagonal of `H(s)`.
pub fn h_total_bands(sector: &SpinSector, params: &ModelParams, s: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0..=1.0).contains(&s) {
        return Err(invalid(format!("s must lie in [0, 1], got {s}")));
    }
    let diag = pspin_diagonal(sector, params).iter().map(|d| s * d).collect();
    let off = sector
        .s_x_off_diagonal()
        .into_iter()
        .map(|x| -2.0 * params.gamma() * (1.0 - s) * x)
        .collect();
    Ok((diag, off))
}

/// Sorted, gauge-fixed eigendecomposition of `H(s)`.
pub fn instantaneous_eigen(sector: &SpinSector, params: &ModelParams, s: f64) -> Result<Eigen> {
    let (diag, off) = h_total_bands(sector, params, s)?;
    eig_tridiagonal(&diag, &off)
}

/// Ground-state energy of `H_p`, which is `-N` for every `p`.
pub fn ground_energy(sector: &SpinSector) -> f64 {
    -(sector.n_spins() as f64)
}
