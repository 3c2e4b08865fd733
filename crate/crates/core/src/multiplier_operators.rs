//! Bochner–Riesz means, generalized spherical means, the square-function kernel `K_t^α`
//! and convolution with `ψ ∗ σ_r`, all applied on the Fourier side.

use crate::radial_transforms::{MultiplierSpec, RadialOperand, TransformError};
use crate::special_functions::{
    gamma_fn, script_j_alpha_unchecked, script_j_unchecked, SpecialError,
};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OperatorError {
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

fn check_scale(t: f64) -> Result<(), OperatorError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(OperatorError::Domain(format!("scale t = {t} must be positive and finite")))
    }
}

/// `R^α_t f`: multiplier `(1 - |ξ|²/t²)_+^α`.
pub fn bochner_riesz<F: RadialOperand>(f: &F, alpha: f64, t: f64) -> Result<F, OperatorError> {
    if !(alpha >= 0.0) {
        return Err(OperatorError::Domain(format!(
            "Bochner–Riesz order α = {alpha} must be ≥ 0"
        )));
    }
    check_scale(t)?;
    Ok(crate::radial_transforms::apply_radial_multiplier(
        f,
        &MultiplierSpec::BochnerRiesz { alpha },
        1.0 / t,
    )?)
}

/// `c_{d,β}` making `c_{d,β} 𝒥_β(0) = π^{d/2}/Γ(β + d/2)`.
pub fn spherical_mean_constant(d: usize, beta: f64) -> Result<f64, OperatorError> {
    let nu = (d as f64 - 2.0) / 2.0 + beta;
    if !(nu >= 0.0) {
        return Err(OperatorError::Domain(format!(
            "spherical mean needs (d-2)/2 + β ≥ 0, got {nu}"
        )));
    }
    let target = PI.powf(d as f64 / 2.0) / gamma_fn(beta + d as f64 / 2.0)?;
    let at_zero = 2f64.powf(-nu) / gamma_fn(nu + 1.0)?;
    Ok(target / at_zero)
}

/// Symbol of `A^β_t` at `|ξ| = rho`.
pub fn spherical_mean_symbol(d: usize, beta: f64, t: f64, rho: f64) -> Result<f64, OperatorError> {
    Ok(spherical_mean_constant(d, beta)? * script_j_alpha_unchecked(d, beta, t * rho))
}

/// `A^β_t f` with multiplier `c_{d,β} 𝒥_β(t|ξ|)`.
///
/// For `β ≥ 1` this is `Γ(β)^{-1} ∫_{|y|≤1} (1-|y|²)^{β-1} f(x - ty) dy`; smaller β are the
/// Fourier-side continuation. At β = 0 the symbol is `c_{d,0} 𝒥_0(t|ξ|)`, a multiple of the
/// transform of surface measure on the sphere of radius t.
pub fn spherical_mean<F: RadialOperand>(f: &F, beta: f64, t: f64) -> Result<F, OperatorError> {
    check_scale(t)?;
    let d = f.dim();
    let c = spherical_mean_constant(d, beta)?;
    Ok(f.apply_symbol(
        |r| Ok(Complex64::new(c * script_j_alpha_unchecked(d, beta, t * r), 0.0)),
        &[],
    )?)
}

/// `K_t^α ∗ f`, multiplier `α(|ξ|²/t²)(1 - |ξ|²/t²)_+^{α-1}`; requires α > 1/2.
pub fn k_alpha_convolve<F: RadialOperand>(f: &F, alpha: f64, t: f64) -> Result<F, OperatorError> {
    if !(alpha > 0.5) {
        return Err(OperatorError::Domain(format!(
            "K_t^α needs α > 1/2 for square-function use, got {alpha}"
        )));
    }
    k_alpha_convolve_any(f, alpha, t)
}

/// [`k_alpha_convolve`] without the α > 1/2 restriction, for kernel studies.
pub fn k_alpha_convolve_any<F: RadialOperand>(f: &F, alpha: f64, t: f64) -> Result<F, OperatorError> {
    if !(alpha > 0.0) {
        return Err(OperatorError::Domain(format!("K_t^α needs α > 0, got {alpha}")));
    }
    check_scale(t)?;
    Ok(crate::radial_transforms::apply_radial_multiplier(
        f,
        &MultiplierSpec::KAlpha { alpha },
        1.0 / t,
    )?)
}

/// `∫_0^∞ |K̂_t^α(ξ)|² dt/t` for ξ ≠ 0.
pub fn k_alpha_plancherel_constant(alpha: f64) -> f64 {
    alpha / (4.0 * (2.0 * alpha - 1.0))
}

/// `σ̂_r(ρ) = r^{d-1} 𝒥(rρ)` for surface measure on the sphere of radius r.
pub fn sphere_measure_symbol(d: usize, r: f64, rho: f64) -> f64 {
    r.powi(d as i32 - 1) * script_j_unchecked(d, r * rho)
}

/// Radial bump `ψ = Δ^{5d} g` with `g(x) = (1 - |x|²/a²)_+^N`, `N = 10d + 20`, normalised
/// so that `sup |ψ̂| = 1`.
///
/// `ψ̂(ξ) = (-|ξ|²)^{5d} ĝ(ξ)` vanishes to order `10d` at the origin and `ψ` is supported in
/// `|x| ≤ a`. `ψ̂` is tabulated as a cubic Hermite table in `s = a|ξ|` with exact derivatives.
#[derive(Debug, Clone)]
pub struct PsiSpec {
    pub d: usize,
    pub vanishing_order: usize,
    pub space_support_radius: f64,
    pub bump_power: usize,
    step: f64,
    s_max: f64,
    table: Vec<(f64, f64)>,
}

const PSI_STEP: f64 = 0.01;

impl PsiSpec {
    pub fn new(d: usize) -> Result<Self, OperatorError> {
        Self::with_support_radius(d, 0.1)
    }

    pub fn with_support_radius(d: usize, a: f64) -> Result<Self, OperatorError> {
        if d == 0 {
            return Err(OperatorError::Domain("dimension must be ≥ 1".into()));
        }
        if !(a > 0.0 && a <= 1.0) {
            return Err(OperatorError::Domain(format!(
                "ψ support radius {a} must lie in (0, 1]"
            )));
        }
        let n = 10 * d + 20;
        let m = 10 * d;
        // w(s) = s^{m} 𝒥_ν(s), ν = N + d/2 (bare kernel in dimension d with α = N + 1)
        let alpha = n as f64 + 1.0;
        let w = |s: f64| s.powi(m as i32) * script_j_alpha_unchecked(d, alpha, s);
        let dw = |s: f64| {
            let j0 = script_j_alpha_unchecked(d, alpha, s);
            let j1 = script_j_alpha_unchecked(d, alpha + 1.0, s);
            if s == 0.0 {
                return 0.0;
            }
            m as f64 * s.powi(m as i32 - 1) * j0 - s.powi(m as i32 + 1) * j1
        };
        // decay is s^{m-ν-1/2}; stop once the envelope is below 1e-16 of the peak
        let nu = n as f64 + d as f64 / 2.0;
        let mut samples = Vec::new();
        let mut peak: f64 = 0.0;
        let mut k = 0usize;
        loop {
            let s = k as f64 * PSI_STEP;
            let v = w(s);
            peak = peak.max(v.abs());
            samples.push((v, dw(s)));
            let env = s.powf(m as f64 - nu - 0.5);
            if s > 2.0 * nu && env < 1e-16 * peak {
                break;
            }
            k += 1;
        }
        let sign = if (5 * d) % 2 == 0 { 1.0 } else { -1.0 };
        let table = samples
            .into_iter()
            .map(|(v, dv)| (sign * v / peak, sign * dv / peak))
            .collect::<Vec<_>>();
        let s_max = (table.len() - 1) as f64 * PSI_STEP;
        Ok(Self {
            d,
            vanishing_order: m,
            space_support_radius: a,
            bump_power: n,
            step: PSI_STEP,
            s_max,
            table,
        })
    }

    /// Frequency beyond which `u` is set to zero.
    pub fn frequency_cutoff(&self) -> f64 {
        self.s_max / self.space_support_radius
    }

    /// `u(ρ) = ψ̂(ξ)` at `|ξ| = ρ`.
    pub fn u(&self, rho: f64) -> f64 {
        let s = rho.abs() * self.space_support_radius;
        if s >= self.s_max {
            return 0.0;
        }
        let x = s / self.step;
        let k = (x.floor() as usize).min(self.table.len() - 2);
        let tau = x - k as f64;
        let (y0, d0) = self.table[k];
        let (y1, d1) = self.table[k + 1];
        let h = self.step;
        let t2 = tau * tau;
        let t3 = t2 * tau;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + tau) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * d1
    }

    /// Symbol of `ψ ∗ σ_r` at `|ξ| = rho`.
    pub fn sphere_symbol(&self, r: f64, rho: f64) -> f64 {
        let u = self.u(rho);
        if u == 0.0 {
            return 0.0;
        }
        u * sphere_measure_symbol(self.d, r, rho)
    }
}

/// Result of [`sphere_convolve`].
#[derive(Debug, Clone)]
pub struct SphereConvolution<F> {
    pub output: F,
    /// `r` exceeds a quarter of the periodic box (or of the profile range).
    pub wraparound: bool,
}

/// `ψ ∗ σ_r ∗ f` via the multiplier `u(|ξ|) r^{d-1} 𝒥(r|ξ|)`.
pub fn sphere_convolve<F: RadialOperand + SpatialExtent>(
    psi: &PsiSpec,
    r: f64,
    f: &F,
) -> Result<SphereConvolution<F>, OperatorError> {
    check_scale(r)?;
    if psi.d != f.dim() {
        return Err(OperatorError::Domain(format!(
            "ψ is built for d = {}, input has d = {}",
            psi.d,
            f.dim()
        )));
    }
    let output = f.apply_symbol(|rho| Ok(Complex64::new(psi.sphere_symbol(r, rho), 0.0)), &[])?;
    Ok(SphereConvolution {
        output,
        wraparound: r > 0.25 * f.spatial_extent(),
    })
}

/// Spatial size used for wraparound checks.
pub trait SpatialExtent {
    fn spatial_extent(&self) -> f64;
}

impl SpatialExtent for crate::grids_norms::GridField {
    fn spatial_extent(&self) -> f64 {
        self.extent
    }
}

impl SpatialExtent for crate::grids_norms::RadialProfile {
    fn spatial_extent(&self) -> f64 {
        2.0 * self.r_max()
    }
}

/// `sup_ρ |u(ρ) r^{d-1} 𝒥(rρ)|` over a dense frequency sweep.
pub fn sphere_symbol_sup(psi: &PsiSpec, r: f64) -> f64 {
    let hi = psi.frequency_cutoff();
    // resolve oscillations of 𝒥(rρ) (period 2π/r) and of u (scale 1/a)
    let step = (0.05 / r).min(0.05 * psi.space_support_radius);
    let count = (hi / step).ceil() as usize;
    (0..=count)
        .map(|i| psi.sphere_symbol(r, i as f64 * step).abs())
        .fold(0.0, f64::max)
}
