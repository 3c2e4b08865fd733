//! Experiments measuring exponents and constants: kernel decay of the square-function
//! integrand, necessity and duality thresholds, separation orthogonality, the growth of
//! `sup|𝓕[ψ∗σ_r]|` and the fixed-`x` Plancherel step.

use crate::grids_norms::{annulus_profile, log_edges, loglog_fit, GridError, GridField, TGrid};
use crate::multiplier_operators::{sphere_symbol_sup, OperatorError, PsiSpec};
use crate::radial_transforms::{smooth_step, GridSpectrum};
use crate::grids_norms::gauss_legendre;
use crate::special_functions::{script_j_alpha_unchecked, script_j_constant, script_j_unchecked, sphere_area, SpecialError};
use rand::{Rng, SeedableRng};
use crate::square_functions::k_alpha_symbol;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error("{0}")]
    Domain(String),
}

fn domain(msg: String) -> ExperimentError {
    ExperimentError::Domain(msg)
}

/// Exponent predictions, kept in one place.
pub mod predict {
    /// Radial decay rate `(d-1)/2 + α` of the square-function integrand.
    pub fn kernel_decay(d: usize, alpha: f64) -> f64 {
        (d as f64 - 1.0) / 2.0 + alpha
    }

    /// `α̃(p) = d(1/p - 1/2) + 1/2`.
    pub fn necessity_alpha(d: usize, p: f64) -> f64 {
        d as f64 * (1.0 / p - 0.5) + 0.5
    }

    /// `d(1/2 - 1/p)`.
    pub fn duality_alpha(d: usize, p: f64) -> f64 {
        d as f64 * (0.5 - 1.0 / p)
    }

    /// Growth rate in `R` of `∫_{|x|≤R} F^p` for `F ~ |x|^{-a}`.
    pub fn mass_growth(d: usize, p: f64, a: f64) -> f64 {
        (d as f64 - p * a).max(0.0)
    }

    /// Growth rate of `sup_{‖b‖₂ ≤ 1} ∫_{|x|≤R} |∫ b(t) K_t ∗ η dt|^{p'}` when the
    /// square-function integrand decays like `|x|^{-a}`; `b̂ ∈ L²` costs half a power.
    pub fn worst_case_dual_growth(d: usize, p_dual: f64, a: f64) -> f64 {
        d as f64 - p_dual * (a + 0.5)
    }

    /// `(d-1)/2`: growth of `sup|𝓕[ψ∗σ_r]|` and decay of separated inner products.
    pub fn sphere_exponent(d: usize) -> f64 {
        (d as f64 - 1.0) / 2.0
    }
}

/// Log–log fit with its usable range.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub points: usize,
    pub range: (f64, f64),
    pub predicted: f64,
    /// Fewer than [`MIN_DECADES`] of usable range, or too few points.
    pub inconclusive: bool,
    /// `(x, y)` pairs that entered the fit.
    pub data: Vec<(f64, f64)>,
}

pub const MIN_DECADES: f64 = 1.5;

impl FitReport {
    pub fn from_points(data: Vec<(f64, f64)>, predicted: f64, min_decades: f64) -> Result<Self, ExperimentError> {
        let usable: Vec<(f64, f64)> = data.into_iter().filter(|&(x, y)| x > 0.0 && y > 0.0 && y.is_finite()).collect();
        if usable.len() < 3 {
            return Err(domain(format!("only {} usable points", usable.len())));
        }
        let fit = loglog_fit(&usable)?;
        let lo = usable.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = usable.iter().map(|p| p.0).fold(0.0, f64::max);
        Ok(Self {
            slope: fit.slope,
            intercept: fit.intercept,
            stderr: fit.stderr,
            points: fit.points,
            range: (lo, hi),
            predicted,
            inconclusive: (hi / lo).log10() < min_decades - 1e-9,
            data: usable,
        })
    }
}

/// `η̂(ξ) = exp(-(|ξ| - ρ₀)²/(2w²)) · a(θ - θ₀)`: a Gaussian ring times a smooth angular
/// cutoff that equals 1 on the middle half of the opening `aperture` around `θ₀` and vanishes
/// outside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeBump {
    pub center: f64,
    pub width: f64,
    pub direction: f64,
    pub aperture: f64,
}

impl Default for ConeBump {
    fn default() -> Self {
        Self {
            center: 1.5,
            width: 0.35,
            direction: PI / 4.0,
            aperture: PI / 8.0,
        }
    }
}

impl ConeBump {
    pub fn eval(&self, xi: &[f64]) -> f64 {
        let rho = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let radial = (-(rho - self.center).powi(2) / (2.0 * self.width * self.width)).exp();
        let angular = match xi.len() {
            1 => {
                if xi[0] > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            _ => {
                let theta = xi[1].atan2(xi[0]);
                let diff = (theta - self.direction + PI).rem_euclid(2.0 * PI) - PI;
                let q = self.aperture / 4.0;
                1.0 - smooth_step((diff.abs() - q) / q)
            }
        };
        radial * angular
    }

    /// `η̂` sampled on the frequency grid of a `d`-dimensional box.
    pub fn spectrum(&self, d: usize, n: usize, extent: f64) -> Result<GridSpectrum, ExperimentError> {
        if d != 2 {
            return Err(domain(format!("cone bump is built for d = 2, got d = {d}")));
        }
        let mut spec = GridSpectrum::new(&GridField::zeros(d, n, extent)?);
        let mut xi = [0.0; 2];
        for idx in 0..spec.spectrum.len() {
            spec.spectrum.position_into(idx, &mut xi);
            spec.spectrum.values[idx] = Complex64::new(self.eval(&xi), 0.0);
        }
        Ok(spec)
    }
}

pub const SECTOR_MARGIN: f64 = 0.2;

/// Grid, scale quadrature and bump for the kernel experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSetup {
    pub n: usize,
    pub extent: f64,
    /// Gauss nodes on `t ∈ [1, 2]`.
    pub t_nodes: usize,
    pub eta: ConeBump,
}

impl Default for KernelSetup {
    fn default() -> Self {
        Self {
            n: 2048,
            extent: 3072.0,
            t_nodes: 24,
            eta: ConeBump::default(),
        }
    }
}

impl KernelSetup {
    fn tgrid(&self) -> Result<TGrid, ExperimentError> {
        Ok(TGrid::new(0, 0, self.t_nodes)?)
    }

    /// `K_t^α ∗ η` at each node of `t ∈ [1, 2]`, passed to `visit(node, t, weight_dt, field)`
    /// in node order.
    fn for_each_node<V: FnMut(usize, f64, f64, &GridField)>(&self, alpha: f64, mut visit: V) -> Result<(), ExperimentError> {
        if !(alpha > 0.0) {
            return Err(domain(format!("α = {alpha} must be positive")));
        }
        let spec = self.eta.spectrum(2, self.n, self.extent)?;
        let grid = self.tgrid()?;
        for (i, (&t, &w)) in grid.nodes.iter().zip(&grid.weights).enumerate() {
            let field = spec.apply(|r| Complex64::new(k_alpha_symbol(alpha, t, r), 0.0));
            visit(i, t, w * t, &field);
        }
        Ok(())
    }

    /// `(∫₁² |K_t^α ∗ η|² dt)^{1/2}`.
    pub fn square_integrand(&self, alpha: f64) -> Result<GridField, ExperimentError> {
        let mut acc = vec![0.0; self.n * self.n];
        self.for_each_node(alpha, |_, _, w, f| {
            acc.par_iter_mut().zip(f.values.par_iter()).for_each(|(a, z)| *a += w * z.norm_sqr());
        })?;
        let base = GridField::zeros(2, self.n, self.extent)?;
        Ok(base.same_shape(acc.into_iter().map(|a| Complex64::new(a.sqrt(), 0.0)).collect()))
    }

    /// `∫₁² b(t) K_t^α ∗ η dt` and the envelope `(∫₁² |b(t)|² |K_t^α ∗ η|² dt)^{1/2}`.
    pub fn dual_pair<B: Fn(f64) -> Complex64>(&self, alpha: f64, b: B) -> Result<(GridField, GridField), ExperimentError> {
        let len = self.n * self.n;
        let mut h = vec![Complex64::new(0.0, 0.0); len];
        let mut env = vec![0.0; len];
        self.for_each_node(alpha, |_, t, w, f| {
            let bt = b(t);
            let b2 = bt.norm_sqr();
            h.par_iter_mut()
                .zip(env.par_iter_mut())
                .zip(f.values.par_iter())
                .for_each(|((a, e), z)| {
                    *a += z * bt * w;
                    *e += w * b2 * z.norm_sqr();
                });
        })?;
        let base = GridField::zeros(2, self.n, self.extent)?;
        Ok((base.same_shape(h), base.same_shape(env.into_iter().map(|a| Complex64::new(a.sqrt(), 0.0)).collect())))
    }

    /// Ring means over the directions the cone radiates into, with a margin of
    /// [`SECTOR_MARGIN`] radians on each side.
    pub fn sector_means(&self, field: &GridField, r_lo: f64, r_hi: f64, rings: usize) -> Result<Vec<(f64, f64)>, ExperimentError> {
        sector_ring_means(field, self.eta.direction, 0.5 * self.eta.aperture + SECTOR_MARGIN, r_lo, r_hi, rings)
    }

    fn check_range(&self, r_lo: f64, r_hi: f64) -> Result<(), ExperimentError> {
        if !(r_lo > 0.0 && r_hi > r_lo) {
            return Err(domain(format!("ring range [{r_lo}, {r_hi}] is empty")));
        }
        if r_hi > 0.25 * self.extent {
            return Err(domain(format!("outer ring {r_hi} exceeds a quarter of the box {}", self.extent)));
        }
        Ok(())
    }
}

/// Ring `L²` means of `field` on `rings` log-spaced annuli in `[r_lo, r_hi]`, restricted to
/// directions within `half_angle` of `±direction` (the whole ring when `half_angle ≥ π/2`).
pub fn sector_ring_means(field: &GridField, direction: f64, half_angle: f64, r_lo: f64, r_hi: f64, rings: usize) -> Result<Vec<(f64, f64)>, ExperimentError> {
    if field.dim != 2 {
        return Err(domain("sector rings need d = 2".into()));
    }
    if half_angle >= 0.5 * PI {
        let edges = log_edges(r_lo, r_hi, rings + 1);
        return Ok(annulus_profile(field, &edges, 2.0)?
            .into_iter()
            .filter(|s| !s.empty)
            .map(|s| ((s.inner * s.outer).sqrt(), s.l2_mean))
            .collect());
    }
    let edges = log_edges(r_lo, r_hi, rings + 1);
    let mut sums = vec![crate::special_functions::CompensatedSum::new(); rings];
    let mut counts = vec![0usize; rings];
    let mut x = [0.0; 2];
    for idx in 0..field.len() {
        field.position_into(idx, &mut x);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r < edges[0] || r >= edges[rings] {
            continue;
        }
        let theta = x[1].atan2(x[0]);
        let diff = (theta - direction + 0.5 * PI).rem_euclid(PI) - 0.5 * PI;
        if diff.abs() > half_angle {
            continue;
        }
        let k = edges.partition_point(|&e| e <= r) - 1;
        sums[k].add(field.values[idx].norm_sqr());
        counts[k] += 1;
    }
    Ok((0..rings)
        .filter(|&k| counts[k] > 0)
        .map(|k| ((edges[k] * edges[k + 1]).sqrt(), (sums[k].value() / counts[k] as f64).sqrt()))
        .collect())
}

/// `(R, ∫_{|x|≤R} |field|^p)` at `count` log-spaced radii.
pub fn truncated_mass(field: &GridField, p: f64, r_lo: f64, r_hi: f64, count: usize) -> Vec<(f64, f64)> {
    let radii = log_edges(r_lo, r_hi, count);
    let mut pairs: Vec<(f64, f64)> = (0..field.len()).map(|i| (field.radius(i), field.values[i].norm().powf(p))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let vol = field.cell_volume();
    let mut out = Vec::with_capacity(count);
    let mut acc = crate::special_functions::CompensatedSum::new();
    let mut k = 0;
    for &r in &radii {
        while k < pairs.len() && pairs[k].0 <= r {
            acc.add(pairs[k].1);
            k += 1;
        }
        out.push((r, acc.value() * vol));
    }
    out
}

/// Decay fit of `(∫₁²|K_t^α∗η|²dt)^{1/2}` over rings in `[r_lo, r_hi]`.
pub fn kernel_decay_experiment(setup: &KernelSetup, alpha: f64, r_lo: f64, r_hi: f64, rings: usize) -> Result<FitReport, ExperimentError> {
    setup.check_range(r_lo, r_hi)?;
    let field = setup.square_integrand(alpha)?;
    let data = setup.sector_means(&field, r_lo, r_hi, rings)?;
    let mut fit = FitReport::from_points(data, -predict::kernel_decay(2, alpha), MIN_DECADES)?;
    declared_range(&mut fit, r_lo, r_hi);
    Ok(fit)
}

/// Reports the fit on the declared ring range rather than on ring centres.
fn declared_range(fit: &mut FitReport, r_lo: f64, r_hi: f64) {
    fit.range = (r_lo, r_hi);
    fit.inconclusive = fit.points < 3 || (r_hi / r_lo).log10() < MIN_DECADES - 1e-9;
}

/// A threshold located by linear interpolation of measured exponents in `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    /// `(α, fitted decay slope, growth exponent derived from it)`.
    pub rows: Vec<(f64, f64, f64)>,
    pub crossing: Option<f64>,
    pub predicted: f64,
    pub inconclusive: bool,
}

impl ThresholdReport {
    fn from_rows(rows: Vec<(f64, f64, f64)>, predicted: f64, inconclusive: bool) -> Self {
        // least-squares line through (α, exponent); its root is the crossing
        let n = rows.len() as f64;
        let (sx, sy) = rows.iter().fold((0.0, 0.0), |(a, b), r| (a + r.0, b + r.2));
        let (mx, my) = (sx / n, sy / n);
        let sxx: f64 = rows.iter().map(|r| (r.0 - mx).powi(2)).sum();
        let sxy: f64 = rows.iter().map(|r| (r.0 - mx) * (r.2 - my)).sum();
        let crossing = if rows.len() >= 2 && sxx > 0.0 && sxy != 0.0 {
            Some(mx - my * sxx / sxy)
        } else {
            None
        };
        Self {
            rows,
            crossing,
            predicted,
            inconclusive,
        }
    }

    pub fn deviation(&self) -> Option<f64> {
        self.crossing.map(|c| c - self.predicted)
    }
}

/// Growth exponents `d - p·a(α)` of `∫_{|x|≤R}[(∫₁²|K_t^α∗η|²dt)^{1/2}]^p` from fitted decay
/// rates `a(α)`, and their zero crossing against `α̃(p)`.
pub fn necessity_probe(setup: &KernelSetup, p: f64, alphas: &[f64], r_lo: f64, r_hi: f64, rings: usize) -> Result<ThresholdReport, ExperimentError> {
    if !(p > 1.0 && p < 2.0) {
        return Err(domain(format!("necessity probe needs p in (1, 2), got {p}")));
    }
    let mut rows = Vec::new();
    let mut inconclusive = false;
    for &alpha in alphas {
        let fit = kernel_decay_experiment(setup, alpha, r_lo, r_hi, rings)?;
        inconclusive |= fit.inconclusive;
        rows.push((alpha, fit.slope, 2.0 + p * fit.slope));
    }
    Ok(ThresholdReport::from_rows(rows, predict::necessity_alpha(2, p), inconclusive))
}

/// Direct fit of the truncated mass growth `∫_{|x|≤R} F^p` in `R`.
pub fn mass_growth_fit(field: &GridField, p: f64, r_lo: f64, r_hi: f64, count: usize, predicted: f64) -> Result<FitReport, ExperimentError> {
    FitReport::from_points(truncated_mass(field, p, r_lo, r_hi, count), predicted, MIN_DECADES)
}

/// Duality probe for `p > 2`: decay of the `b`-weighted envelope gives the worst-case
/// growth `d - p'(a + 1/2)` and its crossing against `d(1/2 - 1/p)`. Each row also carries
/// the direct truncated `L^{p'}` growth of `∫ b(t) K_t ∗ η dt` for the supplied `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    pub threshold: ThresholdReport,
    /// `(α, direct growth slope of the truncated L^{p'} mass of ∫ b K_t∗η dt)`.
    pub direct: Vec<(f64, f64)>,
}

pub fn duality_probe<B: Fn(f64) -> Complex64 + Copy>(
    setup: &KernelSetup,
    p: f64,
    b: B,
    alphas: &[f64],
    r_lo: f64,
    r_hi: f64,
    rings: usize,
) -> Result<DualityReport, ExperimentError> {
    if !(p > 2.0) {
        return Err(domain(format!("duality probe needs p > 2, got {p}")));
    }
    setup.check_range(r_lo, r_hi)?;
    let p_dual = p / (p - 1.0);
    let mut rows = Vec::new();
    let mut direct = Vec::new();
    let mut inconclusive = false;
    for &alpha in alphas {
        let (h, env) = setup.dual_pair(alpha, b)?;
        let mut fit = FitReport::from_points(setup.sector_means(&env, r_lo, r_hi, rings)?, -predict::kernel_decay(2, alpha), MIN_DECADES)?;
        declared_range(&mut fit, r_lo, r_hi);
        inconclusive |= fit.inconclusive;
        rows.push((alpha, fit.slope, predict::worst_case_dual_growth(2, p_dual, -fit.slope)));
        let mass = mass_growth_fit(&h, p_dual, r_lo, r_hi, 12, 0.0)?;
        direct.push((alpha, mass.slope));
    }
    Ok(DualityReport {
        threshold: ThresholdReport::from_rows(rows, predict::duality_alpha(2, p), inconclusive),
        direct,
    })
}

/// `∫₀^S s^{d-1} 𝒥(s) ds = c(d) S^d 𝒥₁(S)`.
pub fn shell_primitive(d: usize, s: f64) -> f64 {
    script_j_constant(d) * s.powi(d as i32) * script_j_alpha_unchecked(d, 1.0, s)
}

/// `∫_{r₀}^{r₁} r^{d-1} 𝒥(rτ) dr`.
pub fn shell_integral(d: usize, r0: f64, r1: f64, tau: f64) -> f64 {
    if tau == 0.0 {
        return sphere_area(d) * (r1.powi(d as i32) - r0.powi(d as i32)) / d as f64;
    }
    (shell_primitive(d, r1 * tau) - shell_primitive(d, r0 * tau)) / tau.powi(d as i32)
}

/// `[ρ_lo, ρ_hi]` outside which `|u(ρ)|² ρ^e` stays below `rel` times its maximum.
pub fn psi_band(psi: &PsiSpec, e: f64, rel: f64) -> (f64, f64) {
    let step = 0.01 / psi.space_support_radius;
    let count = (psi.frequency_cutoff() / step).ceil() as usize;
    let vals: Vec<f64> = (1..=count)
        .map(|i| {
            let rho = i as f64 * step;
            psi.u(rho).powi(2) * rho.powf(e)
        })
        .collect();
    let peak = vals.iter().cloned().fold(0.0, f64::max);
    let first = vals.iter().position(|&v| v >= rel * peak).unwrap_or(0);
    let last = vals.iter().rposition(|&v| v >= rel * peak).unwrap_or(count - 1);
    (first as f64 * step, (last + 2) as f64 * step)
}

/// Composite Gauss–Legendre nodes `(ρ, w)` on `[lo, hi]` with panels no longer than `period`.
fn panel_nodes(lo: f64, hi: f64, period: f64, order: usize) -> Vec<(f64, f64)> {
    let panels = ((hi - lo) / period).ceil().max(1.0) as usize;
    let width = (hi - lo) / panels as f64;
    let (x, w) = gauss_legendre(order);
    let mut out = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let mid = lo + (k as f64 + 0.5) * width;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((mid + 0.5 * width * xi, 0.5 * width * wi));
        }
    }
    out
}

const BAND_REL: f64 = 1e-16;
const PANEL_ORDER: usize = 12;

/// Two radial bumps of radius `bump_radius` and masses `masses`, placed so that their supports
/// are `M` apart, with `f_i(r, ·)` constant in `r ∈ J_i = [c - 1/2, c + 1/2]`, `c = max(M/2, 1)`,
/// and normalised so that each factor on the right of the orthogonality bound equals its mass.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalitySetup {
    pub d: usize,
    pub psi_radius: f64,
    pub bump_radius: f64,
    pub t: (f64, f64),
    pub masses: (f64, f64),
}

impl Default for OrthogonalitySetup {
    fn default() -> Self {
        Self {
            d: 2,
            psi_radius: 1.0,
            bump_radius: 1.0 / 64.0,
            t: (1.0, 1.0),
            masses: (1.0, 1.0),
        }
    }
}

impl OrthogonalitySetup {
    pub fn shell(&self, m: f64) -> (f64, f64) {
        let c = (0.5 * m).max(1.0);
        (c - 0.5, c + 0.5)
    }

    /// `∫_{J₁}∫_{J₂} ⟨ψ∗σ_{r₁t₁}∗f₁, ψ∗σ_{r₂t₂}∗f₂⟩ dr₁ dr₂`, reduced by Parseval to
    /// `(2π)^{-d} ∫ |u|² A₁ A₂ |ĝ|² 𝒥(ρD) ρ^{d-1} dρ` with `D` the centre distance.
    pub fn inner_product(&self, m: f64) -> Result<f64, ExperimentError> {
        let d = self.d;
        if d < 2 || !(m >= 0.0) || !m.is_finite() {
            return Err(domain(format!("need d ≥ 2 and M ≥ 0, got d = {d}, M = {m}")));
        }
        if !(self.t.0 >= 1.0 && self.t.0 <= 2.0 && self.t.1 >= 1.0 && self.t.1 <= 2.0) {
            return Err(domain(format!("t = {:?} must lie in [1, 2]", self.t)));
        }
        let psi = PsiSpec::with_support_radius(d, self.psi_radius)?;
        let (r0, r1) = self.shell(m);
        let dist = if m == 0.0 { 0.0 } else { m + 2.0 * self.bump_radius };
        let norm = (d as f64 / (r1.powi(d as i32) - r0.powi(d as i32))).sqrt();
        let g0 = script_j_alpha_unchecked(d, 1.0, 0.0);
        let (lo, hi) = psi_band(&psi, d as f64 - 1.0, BAND_REL);
        let freq = r1 * (self.t.0 + self.t.1) + dist;
        let nodes = panel_nodes(lo, hi, 2.0 * PI / freq.max(1.0), PANEL_ORDER);
        let amp = |t: f64, rho: f64| norm * t.powi(d as i32 - 1) * shell_integral(d, r0, r1, t * rho);
        let terms: Vec<f64> = nodes
            .par_iter()
            .map(|&(rho, w)| {
                let u = psi.u(rho);
                let g = script_j_alpha_unchecked(d, 1.0, self.bump_radius * rho) / g0;
                w * u * u * amp(self.t.0, rho) * amp(self.t.1, rho) * g * g * script_j_unchecked(d, rho * dist) * rho.powi(d as i32 - 1)
            })
            .collect();
        let mut acc = crate::special_functions::CompensatedSum::new();
        terms.iter().for_each(|&v| acc.add(v));
        Ok(self.masses.0 * self.masses.1 * acc.value() / (2.0 * PI).powi(d as i32))
    }
}

/// Decay fit of `|inner_product(M)|` over `count` log-spaced separations in `[m_lo, m_hi]`.
pub fn orthogonality_decay(setup: &OrthogonalitySetup, m_lo: f64, m_hi: f64, count: usize) -> Result<FitReport, ExperimentError> {
    if !(m_lo >= 1.0 && m_hi > m_lo) {
        return Err(domain(format!("separation range [{m_lo}, {m_hi}] must satisfy 1 ≤ lo < hi")));
    }
    let mut data = Vec::with_capacity(count);
    for m in log_edges(m_lo, m_hi, count) {
        data.push((m, setup.inner_product(m)?.abs()));
    }
    FitReport::from_points(data, -predict::sphere_exponent(setup.d), 1.0)
}

/// Growth fit of `sup_ξ |𝓕[ψ∗σ_r](ξ)|` over `count` log-spaced radii in `[r_lo, r_hi]`.
pub fn sphere_growth(d: usize, r_lo: f64, r_hi: f64, count: usize) -> Result<FitReport, ExperimentError> {
    if !(r_lo > 0.0 && r_hi > r_lo) {
        return Err(domain(format!("radius range [{r_lo}, {r_hi}] is empty")));
    }
    let psi = PsiSpec::new(d)?;
    let radii = log_edges(r_lo, r_hi, count);
    let data: Vec<(f64, f64)> = radii.par_iter().map(|&r| (r, sphere_symbol_sup(&psi, r))).collect();
    FitReport::from_points(data, predict::sphere_exponent(d), MIN_DECADES)
}

/// `2d/p - d - 1` at `p = 2(d+1)/(d+3)`.
pub fn plancherel_weight_exponent(d: usize) -> f64 {
    let d = d as f64;
    let p = 2.0 * (d + 1.0) / (d + 3.0);
    2.0 * d / p - d - 1.0
}

/// Blocks `j` above this are not resolved and are dropped.
pub const PLANCHEREL_MAX_J: u32 = 8;

/// `F` piecewise constant on cells of length `cell` in `I_j = [2^j, 2^{j+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlancherelSetup {
    pub d: usize,
    pub psi_radius: f64,
    pub cell: f64,
}

impl Default for PlancherelSetup {
    fn default() -> Self {
        Self {
            d: 2,
            psi_radius: 1.0,
            cell: 0.5,
        }
    }
}

impl PlancherelSetup {
    pub fn cells(&self, j: u32) -> usize {
        ((2f64.powi(j as i32) / self.cell).round() as usize).max(1)
    }

    fn edges(&self, j: u32) -> Vec<f64> {
        let lo = 2f64.powi(j as i32);
        let n = self.cells(j);
        (0..=n).map(|k| lo + lo * k as f64 / n as f64).collect()
    }

    /// `∫_{I_j} |F|² r^{d-1} dr` for each cell-valued `F`.
    pub fn rhs(&self, j: u32, fs: &[Vec<f64>]) -> Vec<f64> {
        let e = self.edges(j);
        let d = self.d as i32;
        fs.iter()
            .map(|f| f.iter().enumerate().map(|(k, v)| v * v * (e[k + 1].powi(d) - e[k].powi(d)) / self.d as f64).sum())
            .collect()
    }

    /// `∫ |u(ρ)|² ρ^{2d/p-d-1} |∫_{I_j} r^{d-1} 𝒥(rtρ) F(r) dr|² dρ` for each cell-valued `F`.
    pub fn lhs(&self, j: u32, t: f64, fs: &[Vec<f64>]) -> Result<Vec<f64>, ExperimentError> {
        let cells = self.cells(j);
        if fs.iter().any(|f| f.len() != cells) {
            return Err(domain(format!("F must have {cells} cell values on I_{j}")));
        }
        let d = self.d;
        let psi = PsiSpec::with_support_radius(d, self.psi_radius)?;
        let e = plancherel_weight_exponent(d);
        let (lo, hi) = psi_band(&psi, e, BAND_REL);
        let edges = self.edges(j);
        let freq = 2.0 * edges[cells] * t;
        let nodes = panel_nodes(lo.max(1e-9), hi, 2.0 * PI / freq, PANEL_ORDER);
        // fixed chunks summed in order keep the result independent of the thread count
        let partials: Vec<Vec<f64>> = nodes
            .par_chunks(256)
            .map(|chunk| {
                let mut acc = vec![0.0; fs.len()];
                let mut prim = vec![0.0; cells + 1];
                for &(rho, w) in chunk {
                    let u = psi.u(rho);
                    let weight = w * u * u * rho.powf(e);
                    if weight == 0.0 {
                        continue;
                    }
                    let tau = t * rho;
                    let scale = tau.powi(d as i32).recip();
                    for (p, &r) in prim.iter_mut().zip(&edges) {
                        *p = shell_primitive(d, r * tau);
                    }
                    for (a, f) in acc.iter_mut().zip(fs) {
                        let s: f64 = f.iter().zip(prim.windows(2)).map(|(v, q)| v * (q[1] - q[0])).sum();
                        *a += weight * (s * scale).powi(2);
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; fs.len()];
        for part in partials {
            out.iter_mut().zip(part).for_each(|(o, v)| *o += v);
        }
        Ok(out)
    }
}

/// One `(j, t)` cell of [`plancherel_step_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlancherelRow {
    pub j: u32,
    pub t: f64,
    /// Largest LHS/RHS over the random `F`.
    pub max_ratio: f64,
    /// LHS/RHS for `F` the indicator of the middle cell.
    pub spike_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantReport {
    pub rows: Vec<PlancherelRow>,
    /// `(j, max over F and t)`.
    pub per_j: Vec<(u32, f64)>,
    /// `max/min` of `per_j`.
    pub spread: f64,
    /// Some requested `j` exceeded [`PLANCHEREL_MAX_J`].
    pub truncated: bool,
}

impl ConstantReport {
    /// Largest `|x/mean - 1|` over `per_j`.
    pub fn max_deviation(&self) -> f64 {
        let mean = self.per_j.iter().map(|p| p.1).sum::<f64>() / self.per_j.len() as f64;
        self.per_j.iter().map(|p| (p.1 / mean - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Seeded cell values uniform in `[-1, 1]`.
pub fn random_cell_values(cells: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..cells).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

/// Ratio of the two sides of the fixed-`x` Plancherel step, maximised over `samples` random
/// `F` and over `ts`, for each `j` in `js`.
pub fn plancherel_step_check(setup: &PlancherelSetup, js: &[u32], ts: &[f64], samples: usize, seed: u64) -> Result<ConstantReport, ExperimentError> {
    if ts.iter().any(|&t| !(1.0..=2.0).contains(&t)) || ts.is_empty() {
        return Err(domain(format!("t values {ts:?} must lie in [1, 2]")));
    }
    let truncated = js.iter().any(|&j| j > PLANCHEREL_MAX_J);
    let mut rows = Vec::new();
    let mut per_j = Vec::new();
    for &j in js.iter().filter(|&&j| j <= PLANCHEREL_MAX_J) {
        let cells = setup.cells(j);
        let mut fs = random_cell_values(cells, samples, seed.wrapping_add(j as u64));
        let mut spike = vec![0.0; cells];
        spike[cells / 2] = 1.0;
        fs.push(spike);
        let rhs = setup.rhs(j, &fs);
        let mut best: f64 = 0.0;
        for &t in ts {
            let lhs = setup.lhs(j, t, &fs)?;
            let ratios: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| l / r).collect();
            let max_ratio = ratios[..samples].iter().cloned().fold(0.0, f64::max);
            best = best.max(max_ratio);
            rows.push(PlancherelRow {
                j,
                t,
                max_ratio,
                spike_ratio: ratios[samples],
            });
        }
        per_j.push((j, best));
    }
    let hi = per_j.iter().map(|p| p.1).fold(0.0, f64::max);
    let lo = per_j.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(ConstantReport {
        rows,
        per_j,
        spread: hi / lo,
        truncated,
    })
}
