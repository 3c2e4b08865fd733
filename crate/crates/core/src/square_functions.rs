//! Stein's square functions `G_α f = (∫ |K_t^α ∗ f|² dt/t)^{1/2}` and
//! `𝒢_β f = (∫ |∂_t A^β_t f|² t dt)^{1/2}`, and a probe of their pointwise comparability.

use crate::grids_norms::{GridField, TGrid};
use crate::multiplier_operators::{k_alpha_plancherel_constant, spherical_mean_constant, OperatorError};
use crate::radial_transforms::{GridSpectrum, MultiplierSpec};
use crate::special_functions::script_j_alpha_unchecked;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SquareError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("{0}")]
    Domain(String),
    #[error("no admissible points: every denominator is below the floor")]
    EmptyRegion,
}

#[derive(Debug, Clone)]
pub struct SquareFunctionResult {
    pub field: GridField,
    pub tgrid: TGrid,
    /// The t-grid captures the input's spectrum (relative loss below [`CAPTURE_TOL`]).
    pub convergence_flag: bool,
    /// `Σ|f̂|² · captured(ρ) / Σ|f̂|² · full(ρ)`, compared with a widened and refined grid.
    pub capture_ratio: f64,
}

pub const CAPTURE_TOL: f64 = 1e-3;

pub const EDGE_CORRECTION_BELOW: f64 = 2.0;

/// Nodes evaluated concurrently before their squares are added in node order.
const NODE_BATCH: usize = 8;

/// `(Σ_i w_i |T_i f|²)^{1/2}` with `T_i` the inverse FFT of `symbol(i, sample, |ξ|) f̂`.
fn square_sum<S>(spec: &GridSpectrum, grid: &TGrid, symbol: &S) -> GridField
where
    S: Fn(usize, usize, f64) -> f64 + Sync,
{
    let mut acc = vec![0.0f64; spec.spectrum.len()];
    let idx: Vec<usize> = (0..grid.len()).collect();
    for batch in idx.chunks(NODE_BATCH) {
        let fields: Vec<GridField> = batch
            .par_iter()
            .map(|&i| spec.apply_indexed(|k, r| Complex64::new(symbol(i, k, r), 0.0)))
            .collect();
        for (g, &i) in fields.iter().zip(batch) {
            let w = grid.weights[i];
            acc.par_iter_mut()
                .zip(g.values.par_iter())
                .for_each(|(a, z)| *a += w * z.norm_sqr());
        }
    }
    let mut out = GridField::zeros(spec.spectrum.dim, spec.spectrum.n, 2.0 * PI * spec.spectrum.n as f64 / spec.spectrum.extent)
        .expect("spectrum shape is valid");
    out.values = acc.into_iter().map(|a| Complex64::new(a.sqrt(), 0.0)).collect();
    out
}

/// `Σ|f̂|² captured(|ξ|) / Σ|f̂|² target(|ξ|)` over the spectrum.
fn capture_ratio<C, T>(spec: &GridSpectrum, captured: C, target: T) -> f64
where
    C: Fn(usize, f64) -> f64 + Sync,
    T: Fn(f64) -> f64 + Sync,
{
    let parts: Vec<(f64, f64)> = spec
        .spectrum
        .values
        .par_iter()
        .zip(spec.freq.par_iter())
        .enumerate()
        .map(|(k, (z, &r))| {
            let w = z.norm_sqr();
            if w == 0.0 {
                (0.0, 0.0)
            } else {
                (w * captured(k, r), w * target(r))
            }
        })
        .collect();
    let (a, b) = parts.iter().fold((0.0, 0.0), |acc, s| (acc.0 + s.0, acc.1 + s.1));
    if b == 0.0 {
        1.0
    } else {
        a / b
    }
}

fn check_grid(grid: &TGrid) -> Result<(), SquareError> {
    if grid.is_empty() {
        return Err(SquareError::Domain("empty t-grid".into()));
    }
    Ok(())
}

/// `K̂_t^α` at `|ξ| = rho`.
pub fn k_alpha_symbol(alpha: f64, t: f64, rho: f64) -> f64 {
    MultiplierSpec::KAlpha { alpha }
        .eval(rho / t)
        .expect("finite nonnegative frequency")
}

/// `∫ |K̂_t^α(ρ)|² dt/t` over `t ∈ [lo, hi]`, in closed form.
pub fn k_alpha_sq_integral(alpha: f64, rho: f64, lo: f64, hi: f64) -> f64 {
    // substitute v = (ρ/t)²: (α²/2) ∫ v (1-v)^{2α-2} dv over v ∈ [(ρ/hi)², min(1, (ρ/lo)²)]
    let c1 = 2.0 * alpha - 1.0;
    let prim = |v: f64| {
        let w = (1.0 - v).max(0.0);
        -w.powf(c1) / c1 + w.powf(c1 + 1.0) / (c1 + 1.0)
    };
    let v_lo = (rho / hi).powi(2);
    let v_hi = (rho / lo).powi(2).min(1.0);
    if v_hi <= v_lo {
        return 0.0;
    }
    0.5 * alpha * alpha * (prim(v_hi) - prim(v_lo))
}

/// Per-frequency weight correction for the t-blocks containing the edge `t = |ξ|`.
///
/// `|K̂_t^α(ξ)|²` jumps or blows up at `t = |ξ|`, where fixed Gauss nodes in `ln t` converge
/// slowly. For each frequency the nodes of the block containing `|ξ|` and of the next block are
/// rescaled by one factor so that their weighted sum equals the exact integral over both blocks.
/// The rescaling is not smooth in `|ξ|` and slows pointwise convergence, so it is applied only
/// for `α <` [`EDGE_CORRECTION_BELOW`], where `|K̂|²` is not C¹ at the edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCorrection {
    pub first_node: usize,
    pub end_node: usize,
    pub amplitude: f64,
}

impl EdgeCorrection {
    const NONE: Self = Self {
        first_node: 0,
        end_node: 0,
        amplitude: 1.0,
    };

    pub fn compute(alpha: f64, grid: &TGrid, rho: f64) -> Self {
        if alpha >= EDGE_CORRECTION_BELOW || !(rho >= grid.t_min() && rho < grid.t_max()) {
            return Self::NONE;
        }
        let kb = (rho.log2().floor() as i32).clamp(grid.k_min, grid.k_max);
        let k_end = (kb + 1).min(grid.k_max);
        let npb = grid.nodes_per_block;
        let first = (kb - grid.k_min) as usize * npb;
        let end = (k_end - grid.k_min + 1) as usize * npb;
        let quad: f64 = (first..end)
            .map(|i| grid.weights[i] * k_alpha_symbol(alpha, grid.nodes[i], rho).powi(2))
            .sum();
        let exact = k_alpha_sq_integral(alpha, rho, 2f64.powi(kb), 2f64.powi(k_end + 1));
        if quad <= 0.0 {
            return Self::NONE;
        }
        Self {
            first_node: first,
            end_node: end,
            amplitude: (exact / quad).sqrt(),
        }
    }

    pub fn factor(&self, node: usize) -> f64 {
        if node >= self.first_node && node < self.end_node {
            self.amplitude
        } else {
            1.0
        }
    }
}

/// `G_α f` on the grid, `α > 1/2`.
pub fn g_alpha(f: &GridField, alpha: f64, tgrid: &TGrid) -> Result<SquareFunctionResult, SquareError> {
    g_alpha_from_spectrum(&GridSpectrum::new(f), alpha, tgrid)
}

pub fn g_alpha_from_spectrum(spec: &GridSpectrum, alpha: f64, tgrid: &TGrid) -> Result<SquareFunctionResult, SquareError> {
    if !(alpha > 0.5) {
        return Err(SquareError::Domain(format!("G_α needs α > 1/2, got {alpha}")));
    }
    check_grid(tgrid)?;
    let corr: Vec<EdgeCorrection> = spec
        .freq
        .par_iter()
        .map(|&r| EdgeCorrection::compute(alpha, tgrid, r))
        .collect();
    let sym = |i: usize, k: usize, r: f64| k_alpha_symbol(alpha, tgrid.nodes[i], r) * corr[k].factor(i);
    let field = square_sum(spec, tgrid, &sym);
    let target = k_alpha_plancherel_constant(alpha);
    let capture = capture_ratio(
        spec,
        |k, r| {
            (0..tgrid.len())
                .map(|i| tgrid.weights[i] * sym(i, k, r).powi(2))
                .sum()
        },
        |r| if r > 0.0 { target } else { 0.0 },
    );
    Ok(SquareFunctionResult {
        field,
        tgrid: tgrid.clone(),
        convergence_flag: (1.0 - capture).abs() < CAPTURE_TOL,
        capture_ratio: capture,
    })
}

/// `t ∂_t` of the `A^β_t` symbol at `|ξ| = rho`: `-c_{d,β} t²ρ² 𝒥_{β+1}(tρ)`.
pub fn g_beta_symbol(d: usize, c: f64, beta: f64, t: f64, rho: f64) -> f64 {
    let s = t * rho;
    -c * s * s * script_j_alpha_unchecked(d, beta + 1.0, s)
}

/// `𝒢_β f`, with `∂_t A^β_t` taken analytically on the Fourier side.
pub fn g_beta_spherical(f: &GridField, beta: f64, tgrid: &TGrid) -> Result<SquareFunctionResult, SquareError> {
    g_beta_from_spectrum(&GridSpectrum::new(f), f.dim, beta, tgrid)
}

pub fn g_beta_from_spectrum(spec: &GridSpectrum, d: usize, beta: f64, tgrid: &TGrid) -> Result<SquareFunctionResult, SquareError> {
    check_grid(tgrid)?;
    let nu1 = (d as f64 - 2.0) / 2.0 + beta + 1.0;
    if !(nu1 >= 0.0) {
        return Err(SquareError::Domain(format!("𝒢_β needs (d-2)/2 + β + 1 ≥ 0, got {nu1}")));
    }
    let c = spherical_mean_constant(d, beta)?;
    let sym = move |t: f64, r: f64| g_beta_symbol(d, c, beta, t, r);
    let field = square_sum(spec, tgrid, &|i, _, r| sym(tgrid.nodes[i], r));
    // compare with a grid widened by four blocks per side at double density
    let wide = TGrid::new(tgrid.k_min - 4, tgrid.k_max + 4, 2 * tgrid.nodes_per_block).expect("valid grid");
    let sum_over = |g: &TGrid, r: f64| -> f64 {
        g.nodes.iter().zip(&g.weights).map(|(&t, &w)| w * sym(t, r).powi(2)).sum()
    };
    let capture = capture_ratio(spec, |_, r| sum_over(tgrid, r), |r| sum_over(&wide, r));
    Ok(SquareFunctionResult {
        field,
        tgrid: tgrid.clone(),
        convergence_flag: (1.0 - capture).abs() < CAPTURE_TOL,
        capture_ratio: capture,
    })
}

/// Ratio `G_α f / 𝒢_{α-(d-2)/2} f` on points where both exceed `floor·max`.
#[derive(Debug, Clone)]
pub struct EquivalenceProbe {
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Ratio where admissible, NaN elsewhere.
    pub ratio: Vec<f64>,
    pub admissible: usize,
}

impl EquivalenceProbe {
    pub fn spread(&self) -> f64 {
        self.ratio_max / self.ratio_min
    }
}

pub fn equivalence_probe(f: &GridField, alpha: f64, floor: f64, tgrid: &TGrid) -> Result<EquivalenceProbe, SquareError> {
    if !(floor > 0.0) {
        return Err(SquareError::Domain(format!("region floor {floor} must be positive")));
    }
    let spec = GridSpectrum::new(f);
    let beta = alpha - (f.dim as f64 - 2.0) / 2.0;
    let g = g_alpha_from_spectrum(&spec, alpha, tgrid)?;
    let h = g_beta_from_spectrum(&spec, f.dim, beta, tgrid)?;
    ratio_between(&g.field, &h.field, floor)
}

pub(crate) fn ratio_between(g: &GridField, h: &GridField, floor: f64) -> Result<EquivalenceProbe, SquareError> {
    let (gm, hm) = (g.max_abs(), h.max_abs());
    let ratio: Vec<f64> = g
        .values
        .iter()
        .zip(&h.values)
        .map(|(a, b)| {
            if a.re >= floor * gm && b.re >= floor * hm && b.re > 0.0 {
                a.re / b.re
            } else {
                f64::NAN
            }
        })
        .collect();
    let ok: Vec<f64> = ratio.iter().copied().filter(|v| v.is_finite()).collect();
    if ok.is_empty() {
        return Err(SquareError::EmptyRegion);
    }
    Ok(EquivalenceProbe {
        ratio_min: ok.iter().copied().fold(f64::INFINITY, f64::min),
        ratio_max: ok.iter().copied().fold(0.0, f64::max),
        admissible: ok.len(),
        ratio,
    })
}

/// Gaussian `e^{-|x|²/(2σ²)}` on the default box for its dimension.
pub fn gaussian_input(dim: usize, n: usize, extent: f64, sigma: f64) -> GridField {
    GridField::from_real_fn(dim, n, extent, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-r2 / (2.0 * sigma * sigma)).exp()
    })
    .expect("valid grid")
}

/// Input whose spectrum is a smooth ring around `|ξ| = center` of width `width`.
pub fn ring_spectrum_input(dim: usize, n: usize, extent: f64, center: f64, width: f64) -> GridField {
    let delta = gaussian_input(dim, n, extent, extent / n as f64);
    let spec = GridSpectrum::new(&delta);
    let g0 = spec.spectrum.values[spec.spectrum.len() / 2 + if dim == 2 { n / 2 } else { 0 }];
    spec.apply(|r| Complex64::new((-(r - center).powi(2) / (2.0 * width * width)).exp(), 0.0) / g0)
}

/// `‖G_α f‖₂²/‖f‖₂²`, expected `α/(4(2α-1))`.
pub fn plancherel_ratio(f: &GridField, res: &SquareFunctionResult) -> f64 {
    let a = crate::grids_norms::lp_norm(&res.field, 2.0, None);
    let b = crate::grids_norms::lp_norm(f, 2.0, None);
    (a / b).powi(2)
}

pub fn plancherel_target(alpha: f64) -> f64 {
    k_alpha_plancherel_constant(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids_norms::lp_norm;
    use crate::multiplier_operators::spherical_mean;
    use crate::radial_transforms::unit_bump;

    fn small_gauss() -> GridField {
        gaussian_input(2, 128, 32.0, 1.0)
    }

    fn plancherel_gauss() -> GridField {
        // the ξ = 0 cell carries (2π/L)²/π of the mass and is invisible to G_α
        gaussian_input(2, 256, 64.0, 1.0)
    }

    #[test]
    fn plancherel_constant_two_dimensions() {
        let f = plancherel_gauss();
        let g = TGrid::new(-6, 6, 16).unwrap();
        for alpha in [0.75, 1.0, 2.0, 3.0] {
            let res = g_alpha(&f, alpha, &g).unwrap();
            let ratio = plancherel_ratio(&f, &res);
            assert!((ratio / plancherel_target(alpha) - 1.0).abs() < 0.01, "α={alpha}: {ratio}");
        }
        assert!(g_alpha(&f, 0.5, &g).is_err());
    }

    #[test]
    fn convergence_flag_detects_narrow_grid() {
        let f = small_gauss();
        let ok = g_alpha(&f, 1.5, &TGrid::new(-6, 6, 8).unwrap()).unwrap();
        assert!(ok.convergence_flag, "capture {}", ok.capture_ratio);
        let narrow = g_alpha(&f, 1.5, &TGrid::new(0, 0, 8).unwrap()).unwrap();
        assert!(!narrow.convergence_flag);
    }

    #[test]
    fn refinement_stability() {
        let f = small_gauss();
        // cross terms between lattice frequencies only see the jump of K̂ itself in derivative α-1
        for (alpha, base, tol) in [
            (3.0, TGrid::new(-6, 6, 64).unwrap(), 1e-6),
            (2.0, TGrid::new(-6, 6, 16).unwrap(), 1e-3),
        ] {
            let a = g_alpha(&f, alpha, &base).unwrap().field;
            let b = g_alpha(&f, alpha, &base.refined()).unwrap().field;
            let m = a.max_abs();
            let dev = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(dev <= tol * m, "α={alpha}: relative change {}", dev / m);
        }
    }

    #[test]
    fn dilation_covariance() {
        let (n, l) = (128usize, 32.0);
        let f = gaussian_input(2, n, l, 2.0);
        let f2 = gaussian_input(2, n, l / 2.0, 1.0);
        let a = g_alpha(&f2, 1.5, &TGrid::new(-5, 7, 12).unwrap()).unwrap().field;
        let b = g_alpha(&f, 1.5, &TGrid::new(-6, 6, 12).unwrap()).unwrap().field;
        let dev = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(dev < 1e-10, "G_α deviation {dev}");
        // A_t f(λ·) = (A_{λt} f)(λ·): spherical radii shift the other way
        let a = g_beta_spherical(&f2, 1.0, &TGrid::new(-7, 5, 12).unwrap()).unwrap().field;
        let b = g_beta_spherical(&f, 1.0, &TGrid::new(-6, 6, 12).unwrap()).unwrap().field;
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn subadditivity_and_band_gap() {
        let f = small_gauss();
        let g = ring_spectrum_input(2, 128, 32.0, 2.0, 0.3);
        let grid = TGrid::new(-3, 3, 8).unwrap();
        let sum = f.same_shape(f.values.iter().zip(&g.values).map(|(a, b)| a + b).collect());
        let (a, b, c) = (
            g_alpha(&f, 1.0, &grid).unwrap().field,
            g_alpha(&g, 1.0, &grid).unwrap().field,
            g_alpha(&sum, 1.0, &grid).unwrap().field,
        );
        for i in 0..a.len() {
            assert!(c.values[i].re <= a.values[i].re + b.values[i].re + 1e-10);
        }
        // spectrum in 2.5 < |ξ| < 3.5 while every t_i < 1, and K̂_t vanishes for |ξ| ≥ t
        let high = GridSpectrum::new(&f).apply(|r| Complex64::new(unit_bump((r - 3.0) / 0.5), 0.0));
        let gap = g_alpha(&high, 1.0, &TGrid::new(-4, -1, 8).unwrap()).unwrap();
        assert!(gap.field.max_abs() < 1e-14 * high.max_abs());
    }

    #[test]
    fn g_beta_matches_finite_difference() {
        let f = small_gauss();
        let (t, h) = (1.0, 1e-4);
        let spec = GridSpectrum::new(&f);
        let c = spherical_mean_constant(2, 1.0).unwrap();
        let analytic = spec.apply(|r| Complex64::new(g_beta_symbol(2, c, 1.0, t, r), 0.0));
        let (p, m) = (spherical_mean(&f, 1.0, t + h).unwrap(), spherical_mean(&f, 1.0, t - h).unwrap());
        let fd: Vec<Complex64> = p.values.iter().zip(&m.values).map(|(a, b)| (a - b) * (t / (2.0 * h))).collect();
        let scale = analytic.max_abs();
        for (x, y) in analytic.values.iter().zip(&fd) {
            assert!((x - y).norm() <= 1e-4 * scale);
        }
    }

    #[test]
    fn g_beta_of_constant_vanishes() {
        let f = GridField::from_real_fn(2, 64, 16.0, |_| 1.0).unwrap();
        let r = g_beta_spherical(&f, 1.0, &TGrid::new(-2, 2, 8).unwrap()).unwrap();
        assert!(r.field.max_abs() < 1e-12);
    }

    #[test]
    fn equivalence_probe_bounded() {
        let f = small_gauss();
        let grid = TGrid::standard();
        let p = equivalence_probe(&f, 1.0, 1e-2, &grid).unwrap();
        assert!(p.spread() <= 10.0, "spread {}", p.spread());
        assert!(p.admissible > 100);
        assert!(matches!(equivalence_probe(&f, 1.0, 2.0, &grid), Err(SquareError::EmptyRegion)));
    }

    #[test]
    fn plancherel_one_dimension() {
        let f = gaussian_input(1, 4096, 512.0, 1.0);
        let res = g_alpha(&f, 1.0, &TGrid::new(-9, 6, 16).unwrap()).unwrap();
        let ratio = plancherel_ratio(&f, &res);
        assert!((ratio / 0.25 - 1.0).abs() < 0.01, "{ratio}");
        assert!(lp_norm(&res.field, 2.0, None) > 0.0);
    }
}
