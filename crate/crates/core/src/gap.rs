//! Minimum spectral gap along the annealing path.
//!
//! `H(s)` is tridiagonal in the Dicke basis, so gaps are computed from the two
//! lowest eigenvalues by Sturm bisection. For even `p` the Hamiltonian also
//! commutes with the global spin flip `m -> -m`; the initial state is flip
//! symmetric, so the gap that controls the dynamics is the one inside the
//! flip-even block. Without that restriction the even/odd ground-state pair
//! becomes degenerate as `s -> 1` and the "gap" would close trivially.

use crate::eigen::tridiagonal_lowest;
use crate::error::{invalid, Result};
use crate::sector::{pspin_diagonal, ModelParams, SpinSector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapScan {
    /// `E_1 - E_0` at the minimum.
    pub gap: f64,
    /// Location of the minimum.
    pub s_star: f64,
}

/// Tridiagonal form `(diagonal, off_diagonal)` of the Hamiltonian block that
/// the annealing dynamics explores at parameter `s`.
pub fn dynamical_block(sector: &SpinSector, params: &ModelParams, s: f64) -> (Vec<f64>, Vec<f64>) {
    let hp = pspin_diagonal(sector, params);
    let h0_off: Vec<f64> = sector
        .s_x_off_diagonal()
        .into_iter()
        .map(|x| -2.0 * params.gamma() * x * (1.0 - s))
        .collect();
    let hp_diag: Vec<f64> = hp.iter().map(|e| s * e).collect();
    if !params.is_even() {
        return (hp_diag, h0_off);
    }
    flip_even_block(&hp_diag, &h0_off)
}

/// Projects a flip-symmetric tridiagonal matrix (`d[k] = d[N-k]`,
/// `e[k] = e[N-1-k]`) onto the span of `(|k> + |N-k>)/sqrt2` and, for even
/// `N`, the middle state.
fn flip_even_block(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len() - 1;
    let half = n / 2;
    let mut d: Vec<f64> = diag[..=half].to_vec();
    let mut e: Vec<f64> = off[..half].to_vec();
    if n.is_multiple_of(2) {
        // |half> is its own mirror image
        if half > 0 {
            e[half - 1] *= std::f64::consts::SQRT_2;
        }
    } else {
        // pair (half, half + 1) are mirror images and adjacent
        d[half] += off[half];
    }
    (d, e)
}

/// `E_1(s) - E_0(s)` of the dynamical block.
pub fn gap_at(sector: &SpinSector, params: &ModelParams, s: f64) -> Result<f64> {
    let (d, e) = dynamical_block(sector, params, s);
    if d.len() < 2 {
        return Err(invalid("gap needs at least two levels in the dynamical block"));
    }
    let low = tridiagonal_lowest(&d, &e, 2)?;
    Ok(low[1] - low[0])
}

/// Minimum of `E_1 - E_0` over the grid points.
pub fn minimum_gap(sector: &SpinSector, params: &ModelParams, grid: &[f64]) -> Result<GapScan> {
    grid_minimum(sector, params, grid).map(|(scan, _)| scan)
}

fn grid_minimum(
    sector: &SpinSector,
    params: &ModelParams,
    grid: &[f64],
) -> Result<(GapScan, usize)> {
    if grid.is_empty() {
        return Err(invalid("empty s grid"));
    }
    let mut best = GapScan {
        gap: f64::INFINITY,
        s_star: f64::NAN,
    };
    let mut best_idx = 0;
    for (i, &s) in grid.iter().enumerate() {
        if !(0.0..=1.0).contains(&s) {
            return Err(invalid(format!("grid point {s} outside [0, 1]")));
        }
        let g = gap_at(sector, params, s)?;
        if g < best.gap {
            best = GapScan { gap: g, s_star: s };
            best_idx = i;
        }
    }
    Ok((best, best_idx))
}

/// Grid minimum followed by golden-section refinement inside the bracket
/// formed by the neighbouring grid points. Needed for `p > 2`, where the
/// avoided crossing is far narrower than any practical grid spacing.
pub fn refined_minimum_gap(
    sector: &SpinSector,
    params: &ModelParams,
    grid: &[f64],
) -> Result<GapScan> {
    let (coarse, idx) = grid_minimum(sector, params, grid)?;
    if grid.len() < 3 {
        return Ok(coarse);
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let pos = sorted
        .iter()
        .position(|&s| s == grid[idx])
        .expect("grid point present");
    let mut a = sorted[pos.saturating_sub(1)];
    let mut b = sorted[(pos + 1).min(sorted.len() - 1)];

    let f = |s: f64| gap_at(sector, params, s);
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let (s_ref, g_ref) = if fc < fd { (c, fc) } else { (d, fd) };
    if g_ref < coarse.gap {
        Ok(GapScan {
            gap: g_ref,
            s_star: s_ref,
        })
    } else {
        Ok(coarse)
    }
}

/// `points` evenly spaced values covering `[0, 1]`.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..points).map(|i| i as f64 / (points - 1) as f64).collect(),
    }
}
