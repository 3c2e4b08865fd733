//! Maximal functions on grids: the centred Hardy–Littlewood maximal function,
//! `M_m f = sup_t |T_{m(t·)} f|` and the Bochner–Riesz maximal operator, with suprema
//! taken over the nodes of a [`TGrid`].

use crate::grids_norms::{GridField, TGrid};
use crate::radial_transforms::{raw_fft, smooth_step, GridSpectrum, MultiplierSpec, TransformError};
use num_complex::Complex64;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MaximalError {
    #[error("no t-nodes to take a supremum over")]
    EmptyGrid,
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Supremum field with its refinement certificate.
#[derive(Debug, Clone)]
pub struct MaximalResult {
    /// Nonnegative real values.
    pub field: GridField,
    pub tgrid: TGrid,
    /// Adding the nodes of `tgrid.refined()` raised the supremum by at most
    /// [`REFINEMENT_TOL`] times its maximum.
    pub monotone_flag: bool,
}

pub const REFINEMENT_TOL: f64 = 1e-3;

/// Largest admissible recombination error of the `u_λ + m_λ` split.
pub const SPLIT_TOL: f64 = 1e-10;

fn real_field(like: &GridField, values: Vec<f64>) -> GridField {
    like.same_shape(values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
}

fn elementwise_max(mut a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    for (x, y) in a.iter_mut().zip(b) {
        if y > *x {
            *x = y;
        }
    }
    a
}

/// `max_{t ∈ nodes} |F^{-1}[symbol(t, |ξ|) f̂]|` pointwise.
///
/// Nodes are processed in parallel and combined with an elementwise max, so the
/// result does not depend on scheduling.
pub fn sup_over_nodes<S>(spec: &GridSpectrum, nodes: &[f64], symbol: S) -> Result<GridField, MaximalError>
where
    S: Fn(f64, f64) -> f64 + Sync,
{
    if nodes.is_empty() {
        return Err(MaximalError::EmptyGrid);
    }
    let len = spec.spectrum.len();
    let sup = nodes
        .par_iter()
        .map(|&t| {
            let out = spec.apply(|r| Complex64::new(symbol(t, r), 0.0));
            out.values.iter().map(|z| z.norm()).collect::<Vec<f64>>()
        })
        .reduce(|| vec![0.0; len], elementwise_max);
    let mut like = spec.spectrum.clone();
    like.extent = 2.0 * std::f64::consts::PI * like.n as f64 / like.extent;
    Ok(real_field(&like, sup))
}

fn certified<S>(spec: &GridSpectrum, tgrid: &TGrid, symbol: S) -> Result<MaximalResult, MaximalError>
where
    S: Fn(f64, f64) -> f64 + Sync,
{
    let base = sup_over_nodes(spec, &tgrid.nodes, &symbol)?;
    let extra = sup_over_nodes(spec, &tgrid.refined().nodes, &symbol)?;
    let scale = base.max_abs();
    let rise = base
        .values
        .iter()
        .zip(&extra.values)
        .map(|(a, b)| b.re - a.re)
        .fold(0.0, f64::max);
    Ok(MaximalResult {
        field: base,
        tgrid: tgrid.clone(),
        monotone_flag: rise <= REFINEMENT_TOL * scale,
    })
}

/// Checks on a fine sample that `m` vanishes on `[0, 1/2]` and beyond 2.
fn check_annular_support(m: &MultiplierSpec) -> Result<(), MaximalError> {
    if m.support_end() > 2.0 {
        return Err(MaximalError::Domain(format!("{m:?} is not supported in (1/2, 2)")));
    }
    for i in 0..=512 {
        let s = 0.5 * i as f64 / 512.0;
        if m.eval(s)? != 0.0 {
            return Err(MaximalError::Domain(format!("{m:?} does not vanish at s = {s}")));
        }
    }
    Ok(())
}

/// `M_m f(x) = max_t |T_{m(t·)} f(x)|` over the nodes of `tgrid`, for `m` supported in `(1/2, 2)`.
pub fn m_maximal(f: &GridField, m: &MultiplierSpec, tgrid: &TGrid) -> Result<MaximalResult, MaximalError> {
    check_annular_support(m)?;
    let spec = GridSpectrum::new(f);
    // validate every symbol value once so the parallel pass cannot fail
    for &r in &spec.freq {
        for &t in [tgrid.t_min(), tgrid.t_max()].iter() {
            m.eval(t * r)?;
        }
    }
    certified(&spec, tgrid, |t, r| m.eval(t * r).unwrap_or(0.0))
}

/// Smooth partition `(1 - s²)_+^λ = u_λ(s) + m_λ(s)` with the crossover on `[1/2, 3/4]`.
#[derive(Debug, Clone, Copy)]
pub struct RieszSplit {
    pub lambda: f64,
}

impl RieszSplit {
    pub fn new(lambda: f64) -> Result<Self, MaximalError> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(MaximalError::Domain(format!("λ = {lambda} must be finite and ≥ 0")));
        }
        Ok(Self { lambda })
    }

    /// 1 on `[0, 1/2]`, 0 on `[3/4, ∞)`, smooth in between.
    pub fn cutoff(s: f64) -> f64 {
        1.0 - smooth_step(4.0 * (s - 0.5))
    }

    fn full(&self, s: f64) -> f64 {
        MultiplierSpec::BochnerRiesz { alpha: self.lambda }.eval(s).unwrap_or(0.0)
    }

    /// Smooth compactly supported low-frequency part.
    pub fn u(&self, s: f64) -> f64 {
        self.full(s) * Self::cutoff(s)
    }

    /// Part supported in `(1/2, 1]`.
    pub fn m(&self, s: f64) -> f64 {
        self.full(s) * (1.0 - Self::cutoff(s))
    }

    /// `max |u_λ + m_λ - (1 - s²)_+^λ|` over `samples` equispaced points of `[0, 2]`.
    pub fn recombination_error(&self, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| {
                let s = 2.0 * i as f64 / samples.max(1) as f64;
                (self.u(s) + self.m(s) - self.full(s)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `R^λ_* f(x) = max_t |R^λ_t f(x)|` over the nodes of `tgrid`, assembled from the
/// `u_λ`/`m_λ` split after checking that it recombines.
pub fn riesz_maximal(f: &GridField, lambda: f64, tgrid: &TGrid) -> Result<MaximalResult, MaximalError> {
    let split = RieszSplit::new(lambda)?;
    let err = split.recombination_error(4096);
    if err > SPLIT_TOL {
        return Err(MaximalError::Domain(format!("u_λ + m_λ misses (1-s²)^λ by {err:e}")));
    }
    let spec = GridSpectrum::new(f);
    certified(&spec, tgrid, |t, r| {
        let s = r / t;
        split.u(s) + split.m(s)
    })
}

/// Centred Hardy–Littlewood maximal function of `|f|` on the periodic grid.
///
/// Averages run over lattice balls `{y : |y - x| ≤ r}` with `r ∈ {h, 2h, 4h, …, L/2}`
/// and the point value itself, so `Mf ≥ |f|` exactly.
pub fn hl_maximal(f: &GridField) -> GridField {
    hl_maximal_radii(f, &geometric_radii(f, 2.0))
}

/// Radii `h, h·ratio, h·ratio², …` up to `L/2`.
pub fn geometric_radii(f: &GridField, ratio: f64) -> Vec<f64> {
    let mut radii = Vec::new();
    let mut k = 0;
    loop {
        let r = f.spacing() * ratio.powi(k);
        if r > 0.5 * f.extent * (1.0 + 1e-12) {
            break;
        }
        radii.push(r);
        k += 1;
    }
    radii
}

/// Spectra of the lattice balls of several radii on one grid shape; radii giving the same
/// lattice ball are kept once.
pub struct BallFamily {
    dim: usize,
    n: usize,
    balls: Vec<(usize, Vec<Complex64>)>,
}

impl BallFamily {
    pub fn new(shape: &GridField, radii: &[f64]) -> Self {
        let (dim, n) = (shape.dim, shape.n);
        let h = shape.spacing();
        let wrap = |i: usize| i.min(n - i) as f64 * h;
        let d2: Vec<f64> = (0..shape.values.len())
            .map(|idx| shape.unravel(idx).iter().take(dim).map(|&i| wrap(i).powi(2)).sum())
            .collect();
        let mut counts: Vec<(f64, usize)> = radii
            .iter()
            .map(|&r| (r, d2.iter().filter(|&&v| v <= r * r * (1.0 + 1e-12)).count()))
            .collect();
        counts.dedup_by_key(|c| c.1);
        let balls = counts
            .par_iter()
            .map(|&(r, count)| {
                let mut ball: Vec<Complex64> = d2
                    .iter()
                    .map(|&v| Complex64::new(if v <= r * r * (1.0 + 1e-12) { 1.0 } else { 0.0 }, 0.0))
                    .collect();
                raw_fft(&mut ball, dim, n, false);
                (count, ball)
            })
            .collect();
        Self { dim, n, balls }
    }

    /// `max(|f|, max_r avg_{B_r}|f|)` pointwise.
    pub fn maximal(&self, f: &GridField) -> GridField {
        let abs: Vec<f64> = f.values.iter().map(|z| z.norm()).collect();
        let mut fh: Vec<Complex64> = abs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        raw_fft(&mut fh, self.dim, self.n, false);
        let total = f.values.len();
        let averages: Vec<Vec<f64>> = self
            .balls
            .par_iter()
            .map(|(count, ball)| {
                let mut prod: Vec<Complex64> = fh.iter().zip(ball).map(|(a, b)| a * b).collect();
                raw_fft(&mut prod, self.dim, self.n, true);
                let norm = 1.0 / (*count as f64 * total as f64);
                prod.iter().map(|z| z.re * norm).collect()
            })
            .collect();
        real_field(f, averages.into_iter().fold(abs, elementwise_max))
    }
}

/// Centred maximal function of `|f|` over lattice balls of the given radii and the point value.
pub fn hl_maximal_radii(f: &GridField, radii: &[f64]) -> GridField {
    BallFamily::new(f, radii).maximal(f)
}

/// `max M(x)/H(x)` over points where `H ≥ floor·max H`.
pub fn pointwise_ratio_sup(num: &GridField, den: &GridField, floor: f64) -> f64 {
    let cut = floor * den.max_abs();
    num.values
        .iter()
        .zip(&den.values)
        .filter(|(_, d)| d.norm() >= cut && d.norm() > 0.0)
        .map(|(a, d)| a.norm() / d.norm())
        .fold(0.0, f64::max)
}
