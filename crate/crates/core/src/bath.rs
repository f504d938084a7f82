//! Ohmic phonon bath: spectral density, the rate spectrum `γ(ω)` of the bath
//! correlation function, and the Lamb-shift kernel `S(ω)`.
//!
//! The bath couples to the spins through `A ⊗ B` with `A = sum_i sigma^z_i`
//! and `B = g sum_k (b_k + b_k^†)`, so `g` only ever appears as `η g²`.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::quadrature;

/// Default high-frequency cutoff in units of `Γ`.
pub const DEFAULT_OMEGA_C: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    pub eta: f64,
    pub g: f64,
    /// Inverse temperature; `f64::INFINITY` for a zero-temperature bath.
    pub beta: f64,
    pub omega_c: f64,
    pub nu: f64,
    pub lamb_shift: bool,
}

impl BathSpec {
    pub fn new(eta: f64, g: f64, beta: f64, omega_c: f64, nu: f64, lamb_shift: bool) -> Result<Self> {
        let spec = Self {
            eta,
            g,
            beta,
            omega_c,
            nu,
            lamb_shift,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Ohmic bath with `g = 1` and `η = eta_g2`, the convention used by the
    /// command line.
    pub fn ohmic(eta_g2: f64, beta: f64, omega_c: f64, lamb_shift: bool) -> Result<Self> {
        Self::new(eta_g2, 1.0, beta, omega_c, 1.0, lamb_shift)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(invalid(format!("eta must be finite and >= 0, got {}", self.eta)));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(invalid(format!("g must be finite and >= 0, got {}", self.g)));
        }
        if !(self.beta > 0.0) {
            return Err(invalid(format!("beta must be > 0 or infinite, got {}", self.beta)));
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return Err(invalid(format!("omega_c must be positive, got {}", self.omega_c)));
        }
        if !(self.nu >= 1.0 && self.nu.is_finite()) {
            return Err(invalid(format!("nu must be >= 1, got {}", self.nu)));
        }
        Ok(())
    }

    pub fn eta_g2(&self) -> f64 {
        self.eta * self.g * self.g
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.beta.is_infinite()
    }

    pub fn is_decoupled(&self) -> bool {
        self.eta_g2() == 0.0
    }
}

/// `J(ω) = η ω^ν / ω_c^(ν-1) exp(-ω/ω_c)` for `ω >= 0`.
pub fn ohmic_j(omega: f64, spec: &BathSpec) -> Result<f64> {
    if omega < 0.0 {
        return Err(invalid(format!("spectral density needs omega >= 0, got {omega}")));
    }
    Ok(spectral_density(omega, spec))
}

fn spectral_density(omega: f64, spec: &BathSpec) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    let power = if spec.nu == 1.0 {
        omega
    } else {
        omega.powf(spec.nu) / spec.omega_c.powf(spec.nu - 1.0)
    };
    spec.eta * power * (-omega / spec.omega_c).exp()
}

/// Rate spectrum `γ(ω)`, satisfying `γ(-ω) = e^{-βω} γ(ω)`.
pub fn gamma_of_omega(omega: f64, spec: &BathSpec) -> f64 {
    let g2 = spec.g * spec.g;
    if spec.beta.is_infinite() {
        return if omega > 0.0 {
            2.0 * PI * spectral_density(omega, spec) * g2
        } else {
            0.0
        };
    }
    if omega == 0.0 {
        // limit of J(w) / (1 - e^{-βw}) as w -> 0
        return if spec.nu == 1.0 { 2.0 * PI * spec.eta * g2 / spec.beta } else { 0.0 };
    }
    let w = omega.abs();
    let j = spectral_density(w, spec);
    let bw = spec.beta * w;
    if omega > 0.0 {
        2.0 * PI * g2 * j / -(-bw).exp_m1()
    } else {
        2.0 * PI * g2 * j / bw.exp_m1()
    }
}

/// Half-width of the integration window for `S(ω)`.
fn lamb_window(omega: f64, spec: &BathSpec) -> f64 {
    let thermal = if spec.beta.is_finite() { 1.0 / spec.beta } else { 0.0 };
    20.0 * spec.omega_c.max(thermal).max(omega.abs()).max(1.0)
}

/// `S(ω) = (1/2π) PV ∫ γ(ω') / (ω - ω') dω'`.
///
/// The pole is removed by subtracting `γ(ω)` from the numerator; the
/// subtracted piece integrates in closed form to `γ(ω) ln((W+ω)/(W-ω))`.
/// The remaining integrand is bounded and is handled by adaptive
/// Gauss-Kronrod with breakpoints at `0` and `ω`.
pub fn lamb_kernel(omega: f64, spec: &BathSpec) -> Result<f64> {
    if spec.is_decoupled() {
        return Ok(0.0);
    }
    let w = lamb_window(omega, spec);
    let g_w = gamma_of_omega(omega, spec);
    let integrand = |x: f64| {
        let d = omega - x;
        if d == 0.0 {
            0.0
        } else {
            (gamma_of_omega(x, spec) - g_w) / d
        }
    };
    // extra breakpoints at the spectral scales keep the panels from
    // stepping over the peak of γ
    let mut breaks = vec![-w, 0.0, omega, w];
    let mut scales = vec![1.0, spec.omega_c, 4.0 * spec.omega_c];
    if spec.beta.is_finite() {
        scales.push(1.0 / spec.beta);
    }
    for x in scales {
        if x < w {
            breaks.push(x);
            breaks.push(-x);
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();
    let scale = 2.0 * PI * spec.eta_g2() * spec.omega_c.max(1.0);
    let est = quadrature::integrate(integrand, &breaks, 1e-12 * scale, 1e-11, 4000);
    let value = (est.value + g_w * ((w + omega) / (w - omega)).ln()) / (2.0 * PI);
    let error = est.error / (2.0 * PI);
    if error > 1e-6 * value.abs().max(1.0) {
        return Err(Error::QuadratureNotConverged {
            omega,
            estimate: error,
        });
    }
    Ok(value)
}

/// `S(ω)` tabulated on a uniform grid over `[-ω_max, ω_max]` and
/// interpolated with Catmull-Rom cubics. Frequencies outside the table fall
/// back to direct quadrature.
#[derive(Debug, Clone)]
pub struct LambTable {
    omega_max: f64,
    step: f64,
    values: Vec<f64>,
    spec: BathSpec,
}

impl LambTable {
    pub fn new(spec: &BathSpec, omega_max: f64, step: f64) -> Result<Self> {
        if !(omega_max > 0.0 && step > 0.0) {
            return Err(invalid("Lamb table needs positive range and step"));
        }
        let half = (omega_max / step).ceil() as usize;
        let omega_max = half as f64 * step;
        let values = (0..=2 * half)
            .map(|i| lamb_kernel(-omega_max + i as f64 * step, spec))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            omega_max,
            step,
            values,
            spec: *spec,
        })
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn eval(&self, omega: f64) -> Result<f64> {
        if omega.abs() >= self.omega_max - 2.0 * self.step {
            return lamb_kernel(omega, &self.spec);
        }
        let x = (omega + self.omega_max) / self.step;
        let i = x.floor() as usize;
        let t = x - i as f64;
        if t == 0.0 {
            return Ok(self.values[i]);
        }
        let p0 = self.values[i - 1];
        let p1 = self.values[i];
        let p2 = self.values[i + 1];
        let p3 = self.values[i + 2];
        Ok(p1
            + 0.5
                * t
                * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0))))
    }
}

/// A bath ready for use inside an evolution: rates are evaluated directly,
/// Lamb shifts come from a table covering every Bohr frequency the run can
/// produce.
#[derive(Debug, Clone)]
pub struct PreparedBath {
    spec: BathSpec,
    lamb: Option<LambTable>,
}

/// Grid spacing of the Lamb-shift table.
pub const LAMB_TABLE_STEP: f64 = 5e-3;

impl PreparedBath {
    /// `omega_max` bounds the absolute Bohr frequencies that will be queried.
    pub fn new(spec: BathSpec, omega_max: f64) -> Result<Self> {
        spec.validate()?;
        let lamb = if spec.lamb_shift && !spec.is_decoupled() {
            Some(LambTable::new(&spec, omega_max + 4.0 * LAMB_TABLE_STEP, LAMB_TABLE_STEP)?)
        } else {
            None
        };
        Ok(Self { spec, lamb })
    }

    pub fn spec(&self) -> &BathSpec {
        &self.spec
    }

    pub fn gamma(&self, omega: f64) -> f64 {
        gamma_of_omega(omega, &self.spec)
    }

    /// `S(ω)`, or zero when the Lamb shift is disabled.
    pub fn lamb(&self, omega: f64) -> Result<f64> {
        match &self.lamb {
            Some(table) => table.eval(omega),
            None => Ok(0.0),
        }
    }

    pub fn has_lamb_shift(&self) -> bool {
        self.lamb.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_bath(beta: f64) -> BathSpec {
        BathSpec::new(1.0, 1.0, beta, 1.0, 1.0, true).unwrap()
    }

    /// Exponential integral Ei(x) by its power series, adequate for |x| <= 8.
    fn ei(x: f64) -> f64 {
        const EULER: f64 = 0.577_215_664_901_532_9;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..200 {
            term *= x / k as f64;
            sum += term / k as f64;
            if term.abs() < 1e-18 {
                break;
            }
        }
        EULER + x.abs().ln() + sum
    }

    #[test]
    fn spectral_density_values() {
        let spec = unit_bath(1.0);
        assert_eq!(ohmic_j(0.0, &spec).unwrap(), 0.0);
        assert!((ohmic_j(1.0, &spec).unwrap() - (-1.0_f64).exp()).abs() < 1e-15);
        assert!(ohmic_j(-1.0, &spec).is_err());
        let peak = ohmic_j(1.0, &spec).unwrap();
        for w in [0.5, 0.9, 1.1, 2.0] {
            assert!(ohmic_j(w, &spec).unwrap() < peak);
        }
    }

    #[test]
    fn gamma_reference_value() {
        let spec = unit_bath(1.0);
        let e1 = (-1.0_f64).exp();
        let expect = 2.0 * PI * e1 / (1.0 - e1);
        assert!((gamma_of_omega(1.0, &spec) - expect).abs() < 1e-12);
        assert!((expect - 3.6566675).abs() < 1e-6);
    }

    #[test]
    fn gamma_zero_frequency_limit() {
        let spec = BathSpec::new(0.3, 1.5, 2.5, 4.0, 1.0, false).unwrap();
        let limit = 2.0 * PI * 0.3 * 2.25 / 2.5;
        assert!((gamma_of_omega(0.0, &spec) - limit).abs() < 1e-14);
        // series: 2π η g² (1/β + ω/2 + O(ω²)) for small ω (with cutoff correction)
        for eps in [1e-4, 1e-6] {
            let series = 2.0 * PI * 0.3 * 2.25 * (1.0 / 2.5 + eps / 2.0 - eps / (4.0 * 2.5));
            assert!((gamma_of_omega(eps, &spec) - series).abs() < 1e-6);
            assert!((gamma_of_omega(eps, &spec) - limit).abs() < 10.0 * eps);
            assert!((gamma_of_omega(-eps, &spec) - limit).abs() < 10.0 * eps);
        }
    }

    #[test]
    fn kms_and_positivity() {
        let spec = BathSpec::new(0.01, 1.0, 10.0, 10.0, 1.0, true).unwrap();
        for w in [1e-3, 0.1, 0.7, 2.0, 15.0, 40.0] {
            let up = gamma_of_omega(w, &spec);
            let down = gamma_of_omega(-w, &spec);
            assert!(up > 0.0 && down >= 0.0);
            let rel = (down - (-10.0 * w).exp() * up).abs() / up;
            assert!(rel < 1e-12, "w={w} rel={rel}");
        }
    }

    #[test]
    fn zero_temperature_branch() {
        let spec = BathSpec::ohmic(0.1, f64::INFINITY, 10.0, true).unwrap();
        assert_eq!(gamma_of_omega(-0.5, &spec), 0.0);
        assert_eq!(gamma_of_omega(0.0, &spec), 0.0);
        let w = 2.0;
        let expect = 2.0 * PI * 0.1 * w * (-w / 10.0_f64).exp();
        assert!((gamma_of_omega(w, &spec) - expect).abs() < 1e-14);
    }

    #[test]
    fn decoupled_bath_has_no_lamb_shift() {
        let spec = BathSpec::ohmic(0.0, 2.0, 10.0, true).unwrap();
        for w in [-3.0, 0.0, 5.0] {
            assert_eq!(lamb_kernel(w, &spec).unwrap(), 0.0);
        }
    }

    #[test]
    fn lamb_kernel_zero_temperature_closed_form() {
        // S(ω) = η g² [ω e^{-ω/ω_c} Ei(ω/ω_c) - ω_c] at β = ∞
        let spec = BathSpec::new(0.2, 0.5, f64::INFINITY, 2.0, 1.0, true).unwrap();
        let eg2 = spec.eta_g2();
        let exact = |w: f64| {
            if w == 0.0 {
                -eg2 * 2.0
            } else {
                eg2 * (w * (-w / 2.0).exp() * ei(w / 2.0) - 2.0)
            }
        };
        for w in [-6.0, -1.3, -0.2, 0.0, 0.4, 1.0, 3.7, 9.0] {
            let s = lamb_kernel(w, &spec).unwrap();
            let e = exact(w);
            assert!((s - e).abs() < 1e-7 * e.abs().max(1.0), "w={w}: {s} vs {e}");
        }
    }

    #[test]
    fn lamb_kernel_self_convergence() {
        let spec = BathSpec::ohmic(0.01, 2.0, 10.0, true).unwrap();
        let fine = |w: f64| {
            // independent evaluation: same subtraction, 10x tighter tolerance
            // on a mesh split into many more panels
            let wmax = 20.0 * 10.0_f64.max(w.abs());
            let g_w = gamma_of_omega(w, &spec);
            let mut breaks: Vec<f64> = (0..=400).map(|i| -wmax + 2.0 * wmax * i as f64 / 400.0).collect();
            breaks.push(0.0);
            breaks.push(w);
            breaks.sort_by(|a, b| a.total_cmp(b));
            breaks.dedup();
            let est = quadrature::integrate(
                |x| if x == w { 0.0 } else { (gamma_of_omega(x, &spec) - g_w) / (w - x) },
                &breaks,
                1e-15,
                1e-13,
                20000,
            );
            (est.value + g_w * ((wmax + w) / (wmax - w)).ln()) / (2.0 * PI)
        };
        for w in [-4.0, -0.5, 0.0, 0.25, 1.0, 6.0] {
            let s = lamb_kernel(w, &spec).unwrap();
            let f = fine(w);
            assert!((s - f).abs() < 1e-6 * f.abs().max(1e-12), "w={w}: {s} vs {f}");
        }
    }

    #[test]
    fn lamb_kernel_high_frequency_moment() {
        let spec = BathSpec::new(0.5, 1.0, 1.0, 1.0, 1.0, true).unwrap();
        let total = quadrature::integrate(|x| gamma_of_omega(x, &spec), &[-60.0, 0.0, 60.0], 1e-13, 1e-13, 2000).value;
        let w = 400.0;
        let s = lamb_kernel(w, &spec).unwrap();
        let moment = total / (2.0 * PI * w);
        assert!(s > 0.0);
        assert!((s - moment).abs() < 0.02 * moment, "{s} vs {moment}");
    }

    #[test]
    fn lamb_table_matches_direct() {
        let spec = BathSpec::ohmic(0.01, 10.0, 10.0, true).unwrap();
        let table = LambTable::new(&spec, 18.0, LAMB_TABLE_STEP).unwrap();
        for w in [-17.3, -5.123, -0.77, 0.0, 0.0031, 1.2345, 9.87, 17.9] {
            let direct = lamb_kernel(w, &spec).unwrap();
            let interp = table.eval(w).unwrap();
            assert!((direct - interp).abs() < 1e-6 * direct.abs().max(1.0), "w={w}");
        }
    }

    #[test]
    fn prepared_bath_respects_flag() {
        let on = PreparedBath::new(BathSpec::ohmic(0.01, 2.0, 10.0, true).unwrap(), 5.0).unwrap();
        let off = PreparedBath::new(BathSpec::ohmic(0.01, 2.0, 10.0, false).unwrap(), 5.0).unwrap();
        assert!(on.has_lamb_shift());
        assert!(!off.has_lamb_shift());
        assert!(on.lamb(1.0).unwrap() != 0.0);
        assert_eq!(off.lamb(1.0).unwrap(), 0.0);
    }

    #[test]
    fn spec_validation() {
        assert!(BathSpec::ohmic(-1.0, 1.0, 1.0, true).is_err());
        assert!(BathSpec::ohmic(1.0, 0.0, 1.0, true).is_err());
        assert!(BathSpec::ohmic(1.0, 1.0, 0.0, true).is_err());
        assert!(BathSpec::ohmic(1.0, f64::INFINITY, 1.0, true).is_ok());
    }
}
