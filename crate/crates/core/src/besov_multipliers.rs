//! Besov norms `B²_{α,q}` of multiplier profiles on the line, the kernel-side
//! polar-coordinate norm, the radial embedding check and Bochner–Riesz type test multipliers.

use crate::radial_transforms::{inverse_radial_fourier_fn, smooth_step};
use crate::special_functions::{asymptotic_coefficients, bessel_j, gamma_fn, script_j_constant, SpecialError};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BesovError {
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

fn domain(msg: String) -> BesovError {
    BesovError::Domain(msg)
}

/// The fixed dyadic partition `(φ₀, φ)` on the frequency line.
///
/// With `τ = log₂|ξ|`, `φ_j` rises as `sin(π/2·step(τ-j+1))` on `[j-1, j]` and falls as
/// `cos(π/2·step(τ-j))` on `[j, j+1]`, so `Σ_j φ_j² = 1` and `φ_j` lives on `[2^{j-1}, 2^{j+1}]`.
/// `φ₀` equals 1 on `|ξ| ≤ 1`.
pub struct DyadicPartition;

impl DyadicPartition {
    pub fn phi(j: usize, xi: f64) -> f64 {
        let a = xi.abs();
        if a == 0.0 {
            return if j == 0 { 1.0 } else { 0.0 };
        }
        let tau = a.log2() - j as f64;
        if j == 0 && tau <= 0.0 {
            return 1.0;
        }
        if tau <= -1.0 || tau >= 1.0 {
            0.0
        } else if tau < 0.0 {
            (0.5 * PI * smooth_step(tau + 1.0)).sin()
        } else {
            (0.5 * PI * smooth_step(tau)).cos()
        }
    }

    /// `max |Σ_j φ_j(ξ)² - 1|` over `samples` log-spaced points of `[2^{-4}, 2^{20}]`.
    pub fn reconstruction_error(samples: usize) -> f64 {
        (0..samples)
            .map(|i| {
                let xi = 2f64.powf(-4.0 + 24.0 * i as f64 / (samples.max(2) - 1) as f64);
                let s: f64 = (0..=22).map(|j| Self::phi(j, xi).powi(2)).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// The two `(block, weight²)` pairs that `|ξ|` contributes to.
    fn weights(xi: f64) -> [(usize, f64); 2] {
        let a = xi.abs();
        if a <= 1.0 {
            return [(0, 1.0), (1, 0.0)];
        }
        let j = a.log2().floor() as usize;
        let c = (0.5 * PI * smooth_step(a.log2() - j as f64)).cos();
        [(j, c * c), (j + 1, 1.0 - c * c)]
    }
}

/// A compactly supported profile `m(s)` on the line, zero outside `[lo, hi]`.
#[derive(Clone)]
pub struct Profile1D {
    pub lo: f64,
    pub hi: f64,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Profile1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Profile1D[{}, {}]", self.lo, self.hi)
    }
}

impl Profile1D {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(lo: f64, hi: f64, f: F) -> Result<Self, BesovError> {
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(domain(format!("support [{lo}, {hi}] must be a compact subinterval of [0, ∞)")));
        }
        Ok(Self { lo, hi, f: Arc::new(f) })
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s < self.lo || s > self.hi {
            0.0
        } else {
            (self.f)(s)
        }
    }

    /// `s ↦ m(λ s)`.
    pub fn dilated(&self, lambda: f64) -> Self {
        let f = self.f.clone();
        Self {
            lo: self.lo / lambda,
            hi: self.hi / lambda,
            f: Arc::new(move |s| f(lambda * s)),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let f = self.f.clone();
        Self {
            lo: self.lo,
            hi: self.hi,
            f: Arc::new(move |s| c * f(s)),
        }
    }

    /// Pointwise product, supported on the intersection of supports.
    pub fn times(&self, other: &Profile1D) -> Result<Self, BesovError> {
        let (a, b) = (self.clone(), other.clone());
        Self::new(self.lo.max(other.lo), self.hi.min(other.hi), move |s| a.eval(s) * b.eval(s))
    }

    /// Linear interpolation of uniform samples.
    pub fn from_samples(samples: &LineSamples) -> Result<Self, BesovError> {
        let s = samples.clone();
        let hi = s.start + s.step * (s.values.len().max(1) - 1) as f64;
        Self::new(s.start, hi, move |x| s.interpolate(x))
    }
}

/// `m(s)` sampled at `start + k·step`, zero off the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSamples {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

/// Default sample spacing for line Besov norms (blocks up to `j = 12` are reliable).
pub const DEFAULT_LINE_STEP: f64 = 1.0 / 16384.0;

impl LineSamples {
    pub fn from_profile(m: &Profile1D, step: f64) -> Result<Self, BesovError> {
        if !(step > 0.0) {
            return Err(domain(format!("sample step {step} must be positive")));
        }
        let k0 = (m.lo / step).floor() as i64;
        let k1 = (m.hi / step).ceil() as i64;
        let values = (k0..=k1).map(|k| m.eval(k as f64 * step)).collect();
        Ok(Self {
            start: k0 as f64 * step,
            step,
            values,
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    /// Sum on a common grid; both operands must share `start` and `step`.
    pub fn plus(&self, other: &Self) -> Result<Self, BesovError> {
        if self.step != other.step || self.start != other.start {
            return Err(domain("sample grids differ".into()));
        }
        let n = self.values.len().max(other.values.len());
        let get = |v: &Vec<f64>, i: usize| v.get(i).copied().unwrap_or(0.0);
        Ok(Self {
            values: (0..n).map(|i| get(&self.values, i) + get(&other.values, i)).collect(),
            ..self.clone()
        })
    }

    pub fn interpolate(&self, s: f64) -> f64 {
        let x = (s - self.start) / self.step;
        if x < 0.0 || x > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let k = (x.floor() as usize).min(self.values.len().saturating_sub(2));
        let w = x - k as f64;
        self.values[k] * (1.0 - w) + self.values.get(k + 1).copied().unwrap_or(0.0) * w
    }

    /// Largest `j` with `2^{j+1} ≤ π/(4·step)`: blocks up to here stay clear of aliasing.
    pub fn max_reliable_block(&self) -> usize {
        (PI / (4.0 * self.step)).log2().floor().max(1.0) as usize - 1
    }
}

/// `‖Δ_j m‖₂` for `j = 0..=j_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BesovBlocks {
    pub norms: Vec<f64>,
}

fn check_alpha_q(alpha: f64, q: f64) -> Result<(), BesovError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(domain(format!("smoothness α = {alpha} must be positive")));
    }
    if !(q >= 1.0) {
        return Err(domain(format!("q = {q} must lie in [1, ∞]")));
    }
    Ok(())
}

/// `(Σ_j x_j^q)^{1/q}`, or `max_j x_j` for `q = ∞`.
pub fn lq_norm(x: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        x.iter().fold(0.0, |m, &v| m.max(v.abs()))
    } else {
        x.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

impl BesovBlocks {
    /// `2^{jα}‖Δ_j m‖₂`.
    pub fn weighted(&self, alpha: f64) -> Vec<f64> {
        self.norms
            .iter()
            .enumerate()
            .map(|(j, b)| 2f64.powf(j as f64 * alpha) * b)
            .collect()
    }

    pub fn norm(&self, alpha: f64, q: f64) -> Result<f64, BesovError> {
        check_alpha_q(alpha, q)?;
        Ok(lq_norm(&self.weighted(alpha), q))
    }
}

fn fft(buf: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let plan = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    plan.process(buf);
}

/// Block norms by Parseval: `‖Δ_j m‖₂² = (2π)^{-1} ∫ φ_j(ξ)² |m̂(ξ)|² dξ`.
pub fn besov_blocks(m: &LineSamples) -> BesovBlocks {
    let j_max = m.max_reliable_block();
    let len = m.values.len();
    let n = (4 * len).next_power_of_two().max(64);
    let mut buf: Vec<Complex64> = m.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    fft(&mut buf, false);
    let h = m.step;
    let dxi = 2.0 * PI / (n as f64 * h);
    let cap = 2f64.powi(j_max as i32 + 1);
    let mut sq = vec![0.0; j_max + 1];
    for (k, z) in buf.iter().enumerate() {
        let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let xi = kk * dxi;
        if xi.abs() >= cap {
            continue;
        }
        let power = (h * z.norm()).powi(2) * dxi / (2.0 * PI);
        for (j, w) in DyadicPartition::weights(xi) {
            if j <= j_max {
                sq[j] += w * power;
            }
        }
    }
    BesovBlocks {
        norms: sq.into_iter().map(f64::sqrt).collect(),
    }
}

/// `‖m‖_{B²_{α,q}} = (Σ_j (2^{jα}‖Δ_j m‖₂)^q)^{1/q}` over the reliable blocks.
pub fn besov_norm(m: &LineSamples, alpha: f64, q: f64) -> Result<f64, BesovError> {
    check_alpha_q(alpha, q)?;
    besov_blocks(m).norm(alpha, q)
}

/// Kernel-side blocks `∫_{I_j} |κ(r)|² r^{2α+d-1} dr` and the resulting norm.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSideNorm {
    pub value: f64,
    pub blocks: Vec<f64>,
    /// The last block is negligible (finite q) or does not exceed the earlier maximum (q = ∞).
    pub resolved: bool,
}

/// Resolution of the kernel-side computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelGrid {
    /// Blocks `I_0 … I_{j_max}`.
    pub j_max: usize,
    /// Radial spacing on the asymptotic range; a power of two.
    pub dr: f64,
    /// Gauss nodes per unit length on the direct range.
    pub direct_density: usize,
}

impl Default for KernelGrid {
    fn default() -> Self {
        Self {
            j_max: 12,
            dr: 0.125,
            direct_density: 8,
        }
    }
}

impl KernelGrid {
    pub fn refined(&self) -> Self {
        Self {
            j_max: self.j_max,
            dr: 0.5 * self.dr,
            direct_density: 2 * self.direct_density,
        }
    }
}

/// Smallest argument at which the Bessel expansion replaces direct quadrature.
const ASYMPTOTIC_ARGUMENT: f64 = 32.0;
const ASYMPTOTIC_TERMS: usize = 10;

fn interval(j: usize) -> (f64, f64) {
    if j == 0 {
        (0.0, 2.0)
    } else {
        (2f64.powi(j as i32), 2f64.powi(j as i32 + 1))
    }
}

/// Direct-quadrature blocks for `j < j_split`.
fn direct_blocks(m: &Profile1D, alpha: f64, d: usize, j_split: usize, density: usize) -> Vec<f64> {
    let (x, w) = crate::grids_norms::gauss_legendre(16);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut owner = Vec::new();
    for j in 0..j_split {
        let (a, b) = interval(j);
        let panels = (((b - a) * density as f64) / 16.0).ceil().max(1.0) as usize;
        let ph = (b - a) / panels as f64;
        for p in 0..panels {
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(a + p as f64 * ph + 0.5 * ph * (1.0 + xi));
                weights.push(0.5 * ph * wi);
                owner.push(j);
            }
        }
    }
    let mm = m.clone();
    let (kappa, _) = inverse_radial_fourier_fn(d, move |s| Complex64::new(mm.eval(s), 0.0), &[m.lo, m.hi], m.hi, &nodes);
    let mut out = vec![0.0; j_split];
    for i in 0..nodes.len() {
        let r = nodes[i];
        out[owner[i]] += weights[i] * kappa[i].norm_sqr() * r.powf(2.0 * alpha + d as f64 - 1.0);
    }
    out
}

/// Blocks `j_split..=j_max` from the large-argument Bessel expansion
/// `κ(r) = C Σ_n r^{-(d-1)/2-n} 2 Re[c⁺_n M_n(r)]`, with the moments
/// `M_n(r) = ∫ m(ρ) ρ^{(d-1)/2-n} e^{irρ} dρ` evaluated on a uniform r-grid by one FFT each.
fn asymptotic_blocks(m: &Profile1D, alpha: f64, d: usize, j_split: usize, grid: &KernelGrid) -> Result<Vec<f64>, BesovError> {
    let j_max = grid.j_max;
    let r_top = 2f64.powi(j_max as i32 + 1);
    let h = PI / (8.0 * r_top);
    let n = ((2.0 * PI / (grid.dr * h)).round() as usize).next_power_of_two();
    let dr = 2.0 * PI / (n as f64 * h);
    let half = (d as f64 - 1.0) / 2.0;
    let c = script_j_constant(d) * (2.0 * PI).powi(-(d as i32));
    let first = (2f64.powi(j_split as i32) / dr).round() as usize;
    let last = (r_top / dr).round() as usize;
    let mut kappa = vec![0.0; last - first + 1];
    let samples: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let rho = k as f64 * h;
            (rho, m.eval(rho))
        })
        .collect();
    for term in 0..ASYMPTOTIC_TERMS {
        let (cp, _) = asymptotic_coefficients(d, 0.0, term)?;
        if cp.norm() == 0.0 {
            continue;
        }
        let mut buf: Vec<Complex64> = samples
            .iter()
            .map(|&(rho, v)| {
                if v == 0.0 || rho == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(h * v * rho.powf(half - term as f64), 0.0)
                }
            })
            .collect();
        fft(&mut buf, true);
        for (i, k) in (first..=last).enumerate() {
            let r = k as f64 * dr;
            kappa[i] += c * r.powf(-half - term as f64) * 2.0 * (cp * buf[k]).re;
        }
    }
    let mut out = vec![0.0; j_max + 1 - j_split];
    for j in j_split..=j_max {
        let (a, b) = interval(j);
        let (ka, kb) = ((a / dr).round() as usize, (b / dr).round() as usize);
        let mut s = 0.0;
        for k in ka..=kb {
            let r = k as f64 * dr;
            let wt = if k == ka || k == kb { 0.5 } else { 1.0 };
            s += wt * kappa[k - first].powi(2) * r.powf(2.0 * alpha + d as f64 - 1.0);
        }
        out[j - j_split] = s * dr;
    }
    Ok(out)
}

/// `(Σ_{j≥0} [∫_{I_j} |κ(r)|² r^{2α+d-1} dr]^{q/2})^{1/q}` where `κ(|x|) = F^{-1}[m(|·|)](x)`,
/// `I_0 = (0, 2]`, `I_j = [2^j, 2^{j+1}]`.
pub fn kernel_side_norm(m: &Profile1D, alpha: f64, q: f64, d: usize, grid: &KernelGrid) -> Result<KernelSideNorm, BesovError> {
    check_alpha_q(alpha, q)?;
    if d < 2 {
        return Err(domain(format!("kernel-side norm needs d ≥ 2, got {d}")));
    }
    if !(m.lo > 0.0) {
        return Err(domain("profile must vanish near the origin".into()));
    }
    let j_split = ((ASYMPTOTIC_ARGUMENT / m.lo).log2().ceil().max(1.0) as usize).min(grid.j_max + 1);
    let mut blocks = direct_blocks(m, alpha, d, j_split, grid.direct_density);
    if j_split <= grid.j_max {
        blocks.extend(asymptotic_blocks(m, alpha, d, j_split, grid)?);
    }
    let roots: Vec<f64> = blocks.iter().map(|b| b.max(0.0).sqrt()).collect();
    let value = lq_norm(&roots, q);
    let last = *roots.last().unwrap_or(&0.0);
    let resolved = if q.is_infinite() {
        let earlier = lq_norm(&roots[..roots.len().saturating_sub(1)], f64::INFINITY);
        last <= 1.02 * earlier
    } else {
        last.powf(q) <= 1e-10 * value.powf(q)
    };
    Ok(KernelSideNorm { value, blocks, resolved })
}

/// Data for a test multiplier of Bochner–Riesz type.
#[derive(Debug, Clone, PartialEq)]
pub struct TestMultiplierSpec {
    pub d: usize,
    pub p: f64,
    /// `c_1, …, c_J`.
    pub coefficients: Vec<f64>,
}

impl TestMultiplierSpec {
    /// Critical smoothness `d/p - d/2`.
    pub fn alpha(&self) -> f64 {
        self.d as f64 / self.p - self.d as f64 / 2.0
    }

    /// Bochner–Riesz exponent `d(1/p - 1/2) - 1/2`.
    pub fn gamma(&self) -> f64 {
        self.d as f64 * (1.0 / self.p - 0.5) - 0.5
    }
}

/// Radial profile of `Φ₁`: 1 on `[2^{-1/2}, 2^{1/2}]`, supported in `(1/2, 2)`.
pub fn phi_one(r: f64) -> f64 {
    if r <= 0.5 || r >= 2.0 {
        return 0.0;
    }
    let tau = r.log2();
    smooth_step(2.0 * (tau + 1.0)) * (1.0 - smooth_step(2.0 * (tau - 0.5)))
}

/// Outer cutoff `χ`: 1 on `[1/2, 3/2]`, supported in `(1/5, 9/5)`.
pub fn test_cutoff(rho: f64) -> f64 {
    smooth_step((rho - 0.2) / 0.3) * (1.0 - smooth_step((rho - 1.5) / 0.3))
}

/// `∫_{-1}^{1} (1-ρ²)^γ e^{-iρx} dρ = √π Γ(γ+1) (2/|x|)^{γ+1/2} J_{γ+1/2}(|x|)`.
pub fn line_riesz_transform(gamma: f64, x: f64) -> Result<f64, BesovError> {
    let a = x.abs();
    let nu = gamma + 0.5;
    let c = PI.sqrt() * gamma_fn(gamma + 1.0)?;
    if a < 1e-8 {
        return Ok(c / gamma_fn(nu + 1.0)?);
    }
    Ok(c * (2.0 / a).powf(nu) * bessel_j(nu, a)?)
}

/// Largest number of blocks a test multiplier may carry.
pub const MAX_TEST_BLOCKS: usize = 20;

/// The test multiplier `χ(ρ) Σ_j c_j [(1-·²)_+^γ ∗ 2^j Φ̂₁(2^j ·)](ρ)` as a profile on the line.
///
/// The convolution is carried out on the kernel side, where it is the product
/// `K̂_γ(x) Σ_j c_j Φ₁(2^{-j}|x|)`, and inverted with one FFT.
pub fn test_multiplier(spec: &TestMultiplierSpec) -> Result<LineSamples, BesovError> {
    if !(spec.p > 1.0 && spec.p < 2.0) {
        return Err(domain(format!("p = {} must lie in (1, 2)", spec.p)));
    }
    if spec.d < 1 {
        return Err(domain("dimension must be ≥ 1".into()));
    }
    let big_j = spec.coefficients.len();
    if big_j > MAX_TEST_BLOCKS {
        return Err(domain(format!("{big_j} blocks exceed the limit {MAX_TEST_BLOCKS}")));
    }
    let gamma = spec.gamma();
    let dx = 0.5;
    let n = 1usize << (big_j.max(3) + 6);
    let weight = |x: f64| -> f64 {
        spec.coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| c * phi_one(x / 2f64.powi(i as i32 + 1)))
            .sum()
    };
    let half: Result<Vec<f64>, BesovError> = (0..=n / 2)
        .into_par_iter()
        .map(|k| {
            let x = k as f64 * dx;
            let w = weight(x);
            if w == 0.0 {
                Ok(0.0)
            } else {
                Ok(w * line_riesz_transform(gamma, x)?)
            }
        })
        .collect();
    let half = half?;
    // buffer index k ↔ x = (k - n/2)·dx
    let mut buf: Vec<Complex64> = (0..n)
        .map(|k| {
            let off = k as i64 - (n / 2) as i64;
            Complex64::new(half[off.unsigned_abs() as usize], 0.0)
        })
        .collect();
    fft(&mut buf, true);
    let step = 2.0 * PI / (n as f64 * dx);
    let l0 = (0.2 / step).floor() as usize;
    let l1 = (1.8 / step).ceil() as usize;
    let values = (l0..=l1)
        .map(|l| {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let rho = l as f64 * step;
            test_cutoff(rho) * sign * buf[l].re * dx / (2.0 * PI)
        })
        .collect();
    Ok(LineSamples {
        start: l0 as f64 * step,
        step,
        values,
    })
}

/// Both sides of the radial embedding `‖ζ(|·|)g(|·|)‖_{B²_{α,q}(ℝ^d)} ≲ ‖g‖_{B²_{α,q}(ℝ)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingCheck {
    /// Kernel-side norm of `ζ g` in `d` dimensions.
    pub lhs: f64,
    /// Line Besov norm of `g`.
    pub rhs: f64,
    pub ratio: f64,
    pub lhs_resolved: bool,
}

pub fn radial_embedding_check(
    g: &Profile1D,
    zeta: &Profile1D,
    alpha: f64,
    q: f64,
    d: usize,
    grid: &KernelGrid,
    line_step: f64,
) -> Result<EmbeddingCheck, BesovError> {
    if !(zeta.lo > 0.0) {
        return Err(domain("cutoff ζ must be supported away from the origin".into()));
    }
    let lhs = kernel_side_norm(&g.times(zeta)?, alpha, q, d, grid)?;
    let rhs = besov_norm(&LineSamples::from_profile(g, line_step)?, alpha, q)?;
    Ok(EmbeddingCheck {
        lhs: lhs.value,
        rhs,
        ratio: lhs.value / rhs,
        lhs_resolved: lhs.resolved,
    })
}

/// `max_t ‖φ m(t·)‖_{B²_{α,q}}` over the given dilations, for a cutoff `φ` supported in `(1, 2)`.
pub fn localized_sup_norm(m: &Profile1D, cutoff: &Profile1D, alpha: f64, q: f64, ts: &[f64], line_step: f64) -> Result<f64, BesovError> {
    if !(cutoff.lo >= 1.0 && cutoff.hi <= 2.0) {
        return Err(domain("cutoff must be supported in (1, 2)".into()));
    }
    let norms: Result<Vec<f64>, BesovError> = ts
        .par_iter()
        .map(|&t| {
            let dilated = m.dilated(t);
            if dilated.hi <= cutoff.lo || dilated.lo >= cutoff.hi {
                return Ok(0.0);
            }
            let piece = cutoff.times(&dilated)?;
            besov_norm(&LineSamples::from_profile(&piece, line_step)?, alpha, q)
        })
        .collect();
    Ok(norms?.into_iter().fold(0.0, f64::max))
}

/// Localized Bochner–Riesz profile `m_λ = (1-s²)_+^λ (1 - cutoff)` supported in `(1/2, 1]`.
pub fn localized_riesz(lambda: f64) -> Result<Profile1D, BesovError> {
    let split = crate::maximal_operators::RieszSplit::new(lambda).map_err(|e| domain(e.to_string()))?;
    Profile1D::new(0.5, 1.0, move |s| split.m(s))
}

/// Smooth bump `exp(1 - 1/(1-x²))` in `log s`, supported in `(lo, hi)`.
pub fn log_bump(lo: f64, hi: f64) -> Result<Profile1D, BesovError> {
    let spec = crate::radial_transforms::MultiplierSpec::SmoothBump { lo, hi };
    Profile1D::new(lo, hi, move |s| spec.eval(s).unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bump_samples() -> LineSamples {
        LineSamples::from_profile(&log_bump(0.6, 1.8).unwrap(), DEFAULT_LINE_STEP).unwrap()
    }

    #[test]
    fn partition_reconstructs_unity() {
        assert!(DyadicPartition::reconstruction_error(20_000) <= 1e-10);
        assert_eq!(DyadicPartition::phi(3, 3.0), 0.0);
        assert_eq!(DyadicPartition::phi(3, 17.0), 0.0);
        assert_eq!(DyadicPartition::phi(0, 0.7), 1.0);
    }

    #[test]
    fn parseval_over_all_blocks() {
        let m = bump_samples();
        let blocks = besov_blocks(&m);
        let total: f64 = blocks.norms.iter().map(|b| b * b).sum();
        let direct: f64 = m.values.iter().map(|v| v * v).sum::<f64>() * m.step;
        assert!((total / direct - 1.0).abs() < 1e-10);
    }

    #[test]
    fn smooth_bump_blocks_decay_fast() {
        let b = besov_blocks(&bump_samples());
        // faster than any power: successive block ratios keep shrinking
        let n = b.norms.len();
        let ratios: Vec<f64> = (n - 5..n - 1).map(|j| b.norms[j + 1] / b.norms[j]).collect();
        assert!(ratios.windows(2).all(|r| r[1] < r[0]), "{ratios:?}");
        assert!(ratios[3] < 2f64.powi(-10), "{ratios:?}");
        assert!(b.norm(6.0, 2.0).unwrap().is_finite());
    }

    #[test]
    fn localized_riesz_sits_at_lambda_plus_half() {
        for lambda in [0.5, 1.0] {
            let m = LineSamples::from_profile(&localized_riesz(lambda).unwrap(), DEFAULT_LINE_STEP).unwrap();
            let b = besov_blocks(&m);
            let w = b.weighted(lambda + 0.5);
            // blocks below 2^8 still see the smooth crossover of the split
            let tail = &w[8..];
            let (lo, hi) = tail.iter().fold((f64::MAX, 0.0f64), |(a, c), &v| (a.min(v), c.max(v)));
            assert!(hi / lo < 1.5, "λ={lambda}: {tail:?}");
            let over = b.weighted(lambda + 0.6);
            let pts: Vec<(f64, f64)> = (8..over.len()).map(|j| (2f64.powi(j as i32), over[j])).collect();
            let fit = crate::grids_norms::loglog_fit(&pts).unwrap();
            assert!((fit.slope - 0.1).abs() < 0.03, "slope {}", fit.slope);
        }
    }

    #[test]
    fn homogeneous_and_q_monotone() {
        let m = bump_samples();
        let a = besov_norm(&m, 1.0, 2.0).unwrap();
        let b = besov_norm(&m.scaled(-3.5), 1.0, 2.0).unwrap();
        assert!((b / (3.5 * a) - 1.0).abs() < 1e-12);
        let blocks = besov_blocks(&m);
        let mut prev = f64::INFINITY;
        for q in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
            let v = blocks.norm(1.0, q).unwrap();
            assert!(v <= prev * (1.0 + 1e-14));
            prev = v;
        }
        let empty = LineSamples {
            start: 0.5,
            step: DEFAULT_LINE_STEP,
            values: vec![0.0; 100],
        };
        assert_eq!(besov_norm(&empty, 1.0, 2.0).unwrap(), 0.0);
        assert!(besov_norm(&m, 0.0, 2.0).is_err());
        assert!(besov_norm(&m, 1.0, 0.5).is_err());
    }

    #[test]
    fn zero_coefficients_give_zero_profile() {
        let spec = TestMultiplierSpec {
            d: 2,
            p: 4.0 / 3.0,
            coefficients: vec![0.0; 4],
        };
        assert!(test_multiplier(&spec).unwrap().values.iter().all(|&v| v == 0.0));
        assert!(test_multiplier(&TestMultiplierSpec { p: 2.5, ..spec.clone() }).is_err());
        assert!(test_multiplier(&TestMultiplierSpec {
            coefficients: vec![1.0; 21],
            ..spec
        })
        .is_err());
    }

    #[test]
    fn line_riesz_transform_matches_quadrature() {
        for gamma in [0.0, 0.5, -0.25] {
            for x in [0.0, 0.3, 2.0, 17.0] {
                // substitute ρ = sin θ to remove the endpoint singularity
                let (nodes, w) = crate::grids_norms::gauss_legendre(200);
                let s: f64 = nodes
                    .iter()
                    .zip(&w)
                    .map(|(u, wi)| {
                        let th = 0.5 * PI * u;
                        0.5 * PI * wi * th.cos().powf(2.0 * gamma + 1.0) * (x * th.sin()).cos()
                    })
                    .sum();
                let v = line_riesz_transform(gamma, x).unwrap();
                // the substituted integrand keeps a cos^{2γ+1} endpoint singularity for γ < 0
                let tol = if gamma < 0.0 { 1e-6 } else { 1e-9 };
                assert!((v - s).abs() < tol, "γ={gamma} x={x}: {v} vs {s}");
            }
        }
    }

    #[test]
    fn kernel_side_direct_and_asymptotic_agree() {
        let m = log_bump(0.5, 1.7).unwrap();
        let grid = KernelGrid { j_max: 7, ..Default::default() };
        // force one overlapping block through both routes
        let direct = direct_blocks(&m, 0.5, 2, 8, grid.direct_density);
        let asym = asymptotic_blocks(&m, 0.5, 2, 6, &grid).unwrap();
        for j in 6..=7 {
            assert!((direct[j] / asym[j - 6] - 1.0).abs() < 1e-3, "j={j}: {} vs {}", direct[j], asym[j - 6]);
        }
    }

    #[test]
    fn kernel_side_bump_tail_and_sup_form() {
        let m = log_bump(0.6, 1.8).unwrap();
        let grid = KernelGrid { j_max: 13, ..Default::default() };
        let k = kernel_side_norm(&m, 1.0, 2.0, 2, &grid).unwrap();
        let total: f64 = k.blocks.iter().sum();
        let tail: f64 = k.blocks[12..].iter().sum();
        assert!(tail < 1e-10 * total, "tail {tail} of {total}");
        assert!(k.resolved);
        let sup = kernel_side_norm(&m, 1.0, f64::INFINITY, 2, &grid).unwrap();
        let expect = k.blocks.iter().fold(0.0f64, |a, &b| a.max(b.sqrt()));
        assert_eq!(sup.value, expect);
    }

    #[test]
    fn kernel_side_dilation_shifts_blocks() {
        let m = log_bump(0.6, 1.8).unwrap();
        let grid = KernelGrid { j_max: 9, ..Default::default() };
        let (alpha, d) = (0.75, 2usize);
        let a = kernel_side_norm(&m, alpha, 2.0, d, &grid).unwrap();
        let b = kernel_side_norm(&m.dilated(0.5), alpha, 2.0, d, &grid).unwrap();
        // κ of m(s/2) is 2^d κ(2r), so block j maps to block j+1 of m with factor 2^{d-2α}
        let factor = 2f64.powf(d as f64 - 2.0 * alpha);
        let peak = a.blocks.iter().cloned().fold(0.0, f64::max);
        for j in 1..6 {
            if a.blocks[j + 1] > 1e-3 * peak {
                let ratio = b.blocks[j] / (factor * a.blocks[j + 1]);
                assert!((ratio - 1.0).abs() < 0.02, "j={j}: {ratio}");
            }
        }
    }

    #[test]
    fn embedding_scale_invariant_and_riesz_finite() {
        let zeta = log_bump(0.4, 2.5).unwrap();
        let grid = KernelGrid { j_max: 9, ..Default::default() };
        let g = log_bump(0.6, 1.8).unwrap();
        let a = radial_embedding_check(&g, &zeta, 1.0, 2.0, 2, &grid, DEFAULT_LINE_STEP).unwrap();
        let b = radial_embedding_check(&g.scaled(4.0), &zeta, 1.0, 2.0, 2, &grid, DEFAULT_LINE_STEP).unwrap();
        assert!(a.ratio.is_finite() && a.ratio > 0.0);
        assert!((a.ratio / b.ratio - 1.0).abs() < 1e-9);
        for lambda in [0.5, 1.0] {
            let g = localized_riesz(lambda).unwrap();
            let c = radial_embedding_check(&g, &zeta, lambda + 0.5, f64::INFINITY, 2, &grid, DEFAULT_LINE_STEP).unwrap();
            assert!(c.rhs.is_finite() && c.lhs.is_finite() && c.lhs_resolved, "λ={lambda}: {c:?}");
        }
    }

    #[test]
    fn localized_norm_under_two_cutoffs() {
        let m = log_bump(0.7, 1.6).unwrap();
        let ts: Vec<f64> = (0..9).map(|k| 0.5 * 1.25f64.powi(k)).collect();
        let a = localized_sup_norm(&m, &log_bump(1.0, 2.0).unwrap(), 1.0, 2.0, &ts, DEFAULT_LINE_STEP).unwrap();
        let b = localized_sup_norm(&m, &log_bump(1.1, 1.9).unwrap(), 1.0, 2.0, &ts, DEFAULT_LINE_STEP).unwrap();
        assert!(a > 0.0 && b > 0.0 && (a / b).is_finite());
        assert!(localized_sup_norm(&m, &log_bump(0.5, 1.5).unwrap(), 1.0, 2.0, &ts, DEFAULT_LINE_STEP).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn besov_norm_is_a_norm(a in -3.0f64..3.0, b in -3.0f64..3.0, lo in 0.55f64..0.8, hi in 1.3f64..1.9) {
            let step = 1.0 / 4096.0;
            let f = LineSamples::from_profile(&log_bump(0.5, 2.0).unwrap(), step).unwrap();
            let g = LineSamples::from_profile(&log_bump(0.5, 2.0).unwrap().times(&log_bump(lo, hi).unwrap()).unwrap(), step).unwrap();
            let g = LineSamples { start: f.start, step, values: (0..f.values.len()).map(|i| g.interpolate(f.start + i as f64 * step)).collect() };
            let sum = f.scaled(a).plus(&g.scaled(b)).unwrap();
            for q in [1.0, 2.0, f64::INFINITY] {
                let n_sum = besov_norm(&sum, 1.5, q).unwrap();
                let n_f = besov_norm(&f, 1.5, q).unwrap();
                let n_g = besov_norm(&g, 1.5, q).unwrap();
                prop_assert!(n_sum <= a.abs() * n_f + b.abs() * n_g + 1e-9 * (n_f + n_g));
            }
        }
    }
}
