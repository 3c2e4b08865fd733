//! Fourier transforms under the convention `f̂(ξ) = ∫ f(x) e^{-i<x,ξ>} dx`,
//! `f(x) = (2π)^{-d} ∫ f̂(ξ) e^{i<x,ξ>} dξ`: a radial (Bessel) transform by composite
//! Gauss–Legendre quadrature, a centred grid FFT in one and two dimensions, and
//! application of radial multipliers to either representation.

use crate::grids_norms::{gauss_legendre, GridError, GridField, RadialProfile};
use crate::special_functions::{script_j_unchecked, CompensatedSum};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransformError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("multiplier undefined at frequency {frequency}: {reason}")]
    Undefined { frequency: f64, reason: String },
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// Gauss–Legendre nodes per quadrature panel.
const PANEL_NODES: usize = 16;
/// Panels per output frequency before the output is flagged unreliable.
const MAX_PANELS: usize = 200_000;

/// Output of a radial transform with a per-radius reliability flag.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTransform {
    pub profile: RadialProfile,
    /// `false` where the oscillation panel `π/(2ρ)` could not be honoured.
    pub reliable: Vec<bool>,
}

impl RadialTransform {
    pub fn all_reliable(&self) -> bool {
        self.reliable.iter().all(|&b| b)
    }
}

fn legendre_nodes() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(PANEL_NODES))
}

/// Base breakpoints on `[0, end]`: user breaks plus a geometric ladder from `start`.
fn base_breaks(start: f64, end: f64, breaks: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0, end];
    let mut r = start.min(end);
    while r < end {
        b.push(r);
        r *= 1.25;
    }
    b.extend(breaks.iter().copied().filter(|&x| x > 0.0 && x < end));
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    b.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    b
}

/// `∫_0^{end} g(r) r^{d-1} 𝒥(rρ) dr` for one ρ; returns the value and a reliability flag.
fn bessel_integral<G: Fn(f64) -> Complex64>(d: usize, g: &G, base: &[f64], end: f64, rho: f64) -> (Complex64, bool) {
    let (x, w) = legendre_nodes();
    let osc = if rho > 0.0 { PI / (2.0 * rho) } else { f64::INFINITY };
    let floor = end / MAX_PANELS as f64;
    let reliable = osc >= floor;
    let h = osc.max(floor);
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for seg in base.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let panels = ((b - a) / h).ceil().max(1.0) as usize;
        let ph = (b - a) / panels as f64;
        for k in 0..panels {
            let lo = a + k as f64 * ph;
            for (xi, wi) in x.iter().zip(w) {
                let r = lo + 0.5 * ph * (1.0 + xi);
                let kern = r.powi(d as i32 - 1) * script_j_unchecked(d, r * rho);
                let v = g(r) * (kern * 0.5 * ph * wi);
                re.add(v.re);
                im.add(v.im);
            }
        }
    }
    (Complex64::new(re.value(), im.value()), reliable)
}

/// Radial transform of `g` (supported in `[0, end]`, smooth between `breaks`) at each output radius.
///
/// Returns `∫_0^{end} g(r) r^{d-1} 𝒥(rρ) dr`, which is `f̂(ρ)` for `f(x) = g(|x|)`.
pub fn radial_fourier_fn<G>(d: usize, g: G, breaks: &[f64], end: f64, out: &[f64]) -> (Vec<Complex64>, Vec<bool>)
where
    G: Fn(f64) -> Complex64 + Sync,
{
    let start = breaks
        .iter()
        .copied()
        .filter(|&b| b > 0.0)
        .fold(end * 1e-3, f64::min);
    let base = base_breaks(start, end, breaks);
    let res: Vec<(Complex64, bool)> = out
        .par_iter()
        .map(|&rho| bessel_integral(d, &g, &base, end, rho))
        .collect();
    res.into_iter().unzip()
}

/// Inverse radial transform `(2π)^{-d} ∫ m(ρ) ρ^{d-1} 𝒥(rρ) dρ` at each output radius.
pub fn inverse_radial_fourier_fn<G>(d: usize, m: G, breaks: &[f64], end: f64, out: &[f64]) -> (Vec<Complex64>, Vec<bool>)
where
    G: Fn(f64) -> Complex64 + Sync,
{
    let (v, ok) = radial_fourier_fn(d, m, breaks, end, out);
    let c = (2.0 * PI).powi(-(d as i32));
    (v.into_iter().map(|z| z * c).collect(), ok)
}

/// Largest radius carrying a non-negligible value (the effective support end).
fn effective_end(f: &RadialProfile) -> f64 {
    let peak = f.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let last = f
        .values
        .iter()
        .rposition(|v| v.norm() > 1e-17 * peak)
        .unwrap_or(0);
    f.radii[(last + 1).min(f.radii.len() - 1)]
}

/// `f̂` on the same radius grid as `f`.
pub fn radial_fourier(f: &RadialProfile) -> RadialTransform {
    radial_fourier_on(f, &f.radii)
}

/// `f̂` at the given output radii.
pub fn radial_fourier_on(f: &RadialProfile, out: &[f64]) -> RadialTransform {
    let end = effective_end(f);
    let (values, reliable) = radial_fourier_fn(f.d, |r| f.eval(r), &[f.radii[0]], end, out);
    RadialTransform {
        profile: RadialProfile {
            d: f.d,
            radii: out.to_vec(),
            values,
        },
        reliable,
    }
}

/// Inverse of [`radial_fourier`].
pub fn inverse_radial_fourier(fh: &RadialProfile) -> RadialTransform {
    let end = effective_end(fh);
    let (values, reliable) = inverse_radial_fourier_fn(fh.d, |r| fh.eval(r), &[fh.radii[0]], end, &fh.radii);
    RadialTransform {
        profile: RadialProfile {
            d: fh.d,
            radii: fh.radii.clone(),
            values,
        },
        reliable,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

fn fft_axis_pass(values: &mut [Complex64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let plan = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    values.par_chunks_mut(n).for_each(|row| plan.process(row));
}

fn transpose(values: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    out.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, o) in row.iter_mut().enumerate() {
            *o = values[i * n + j];
        }
    });
    out
}

/// Trigonometric interpolation of `f` onto a grid with `factor` times as many points per
/// axis over the same box. The Nyquist line is dropped.
pub fn spectral_upsample(f: &GridField, factor: usize) -> Result<GridField, GridError> {
    let (dim, n) = (f.dim, f.n);
    let m = n * factor;
    let mut spec = f.values.clone();
    raw_fft(&mut spec, dim, n, false);
    let out_len = m.pow(dim as u32);
    let mut big = vec![Complex64::new(0.0, 0.0); out_len];
    let map = |i: usize| -> Option<usize> {
        match i.cmp(&(n / 2)) {
            std::cmp::Ordering::Less => Some(i),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(m - (n - i)),
        }
    };
    for (idx, v) in spec.iter().enumerate() {
        let (i, j) = if dim == 2 { (idx / n, idx % n) } else { (0, idx) };
        if let (Some(a), Some(b)) = (if dim == 2 { map(i) } else { Some(0) }, map(j)) {
            big[a * m + b] = *v;
        }
    }
    raw_fft(&mut big, dim, m, true);
    let scale = 1.0 / f.values.len() as f64;
    let mut g = GridField::zeros(dim, m, f.extent)?;
    for (o, v) in g.values.iter_mut().zip(big) {
        *o = v * scale;
    }
    Ok(g)
}

pub(crate) fn raw_fft(values: &mut Vec<Complex64>, dim: usize, n: usize, inverse: bool) {
    fft_axis_pass(values, n, inverse);
    if dim == 2 {
        let mut t = transpose(values, n);
        fft_axis_pass(&mut t, n, inverse);
        *values = transpose(&t, n);
    }
}

fn checkerboard(field: &GridField, idx: usize) -> f64 {
    let ij = field.unravel(idx);
    let s: usize = ij.iter().take(field.dim).sum();
    if s % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Centred continuum-scaled FFT.
///
/// Forward output is a field on the frequency box with spacing `2π/L` (extent `2πn/L`),
/// index `n/2` at `ξ = 0`. The inverse takes such a field back to the spatial box of extent `L`.
pub fn grid_fft(f: &GridField, direction: Direction) -> GridField {
    let (dim, n) = (f.dim, f.n);
    // e^{∓iπn/2} per axis from the half-box shift
    let axis_phase = Complex64::from_polar(1.0, -PI * n as f64 / 2.0);
    let phase = if dim == 2 { axis_phase * axis_phase } else { axis_phase };
    let mut v: Vec<Complex64> = f
        .values
        .iter()
        .enumerate()
        .map(|(i, &z)| z * checkerboard(f, i))
        .collect();
    match direction {
        Direction::Forward => {
            raw_fft(&mut v, dim, n, false);
            let scale = f.cell_volume();
            let extent = 2.0 * PI * n as f64 / f.extent;
            let mut out = GridField {
                dim,
                n,
                extent,
                values: v,
            };
            for i in 0..out.values.len() {
                out.values[i] *= phase * (scale * checkerboard(f, i));
            }
            out
        }
        Direction::Inverse => {
            raw_fft(&mut v, dim, n, true);
            let space_extent = 2.0 * PI * n as f64 / f.extent;
            let scale = space_extent.powi(-(dim as i32));
            let mut out = GridField {
                dim,
                n,
                extent: space_extent,
                values: v,
            };
            for i in 0..out.values.len() {
                out.values[i] *= phase.conj() * (scale * checkerboard(f, i));
            }
            out
        }
    }
}

/// Cached forward transform of a field, for applying many symbols.
#[derive(Debug, Clone)]
pub struct GridSpectrum {
    pub spectrum: GridField,
    /// `|ξ|` at each spectral sample.
    pub freq: Vec<f64>,
}

impl GridSpectrum {
    pub fn new(f: &GridField) -> Self {
        let spectrum = grid_fft(f, Direction::Forward);
        let freq = (0..spectrum.len()).map(|i| spectrum.radius(i)).collect();
        Self { spectrum, freq }
    }

    pub fn max_frequency(&self) -> f64 {
        self.freq.iter().fold(0.0, |m: f64, &x| m.max(x))
    }

    /// Spectrum multiplied pointwise by `symbol(|ξ|)`, still on the frequency side.
    pub fn multiplied<S: Fn(f64) -> Complex64 + Sync>(&self, symbol: S) -> GridField {
        let values = self
            .spectrum
            .values
            .par_iter()
            .zip(self.freq.par_iter())
            .map(|(&z, &r)| z * symbol(r))
            .collect();
        self.spectrum.same_shape(values)
    }

    /// Inverse transform of `symbol(sample index, |ξ|)·f̂`.
    pub fn apply_indexed<S: Fn(usize, f64) -> Complex64 + Sync>(&self, symbol: S) -> GridField {
        let values = self
            .spectrum
            .values
            .par_iter()
            .zip(self.freq.par_iter())
            .enumerate()
            .map(|(i, (&z, &r))| z * symbol(i, r))
            .collect();
        grid_fft(&self.spectrum.same_shape(values), Direction::Inverse)
    }

    /// Inverse transform of `symbol(|ξ|)·f̂`.
    pub fn apply<S: Fn(f64) -> Complex64 + Sync>(&self, symbol: S) -> GridField {
        grid_fft(&self.multiplied(symbol), Direction::Inverse)
    }

    /// Like [`Self::apply`] but validates every needed symbol value first.
    pub fn try_apply<S>(&self, symbol: S) -> Result<GridField, TransformError>
    where
        S: Fn(f64) -> Result<Complex64, TransformError> + Sync,
    {
        let m: Result<Vec<Complex64>, TransformError> = self.freq.par_iter().map(|&r| symbol(r)).collect();
        let m = m?;
        let values = self.spectrum.values.iter().zip(&m).map(|(a, b)| a * b).collect();
        Ok(grid_fft(&self.spectrum.same_shape(values), Direction::Inverse))
    }
}

/// A tagged radial multiplier profile `m(s)`, `s ≥ 0`.
#[derive(Clone)]
pub enum MultiplierSpec {
    Constant(f64),
    /// Indicator of `[0, radius]`.
    Indicator { radius: f64 },
    /// `(1 - s²)_+^α`.
    BochnerRiesz { alpha: f64 },
    /// `α s² (1 - s²)_+^{α-1}`.
    KAlpha { alpha: f64 },
    /// Smooth bump supported in `(lo, hi)`, equal to 1 at the geometric mean.
    SmoothBump { lo: f64, hi: f64 },
    /// Linear interpolation through `(s, m(s))` points; undefined outside their range.
    Tabulated { points: Arc<Vec<(f64, f64)>> },
}

impl std::fmt::Debug for MultiplierSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Indicator { radius } => write!(f, "Indicator({radius})"),
            Self::BochnerRiesz { alpha } => write!(f, "BochnerRiesz({alpha})"),
            Self::KAlpha { alpha } => write!(f, "KAlpha({alpha})"),
            Self::SmoothBump { lo, hi } => write!(f, "SmoothBump({lo}, {hi})"),
            Self::Tabulated { points } => write!(f, "Tabulated({} points)", points.len()),
        }
    }
}

/// `exp(1 - 1/(1-x²))` on `(-1, 1)`, zero outside; equals 1 at 0.
pub fn unit_bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

/// Smooth monotone step: 0 for `x ≤ 0`, 1 for `x ≥ 1`, `C^∞` in between.
pub fn smooth_step(x: f64) -> f64 {
    let h = |y: f64| if y <= 0.0 { 0.0 } else { (-1.0 / y).exp() };
    let (a, b) = (h(x), h(1.0 - x));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

impl MultiplierSpec {
    pub fn eval(&self, s: f64) -> Result<f64, TransformError> {
        let undefined = |reason: &str| TransformError::Undefined {
            frequency: s,
            reason: reason.to_string(),
        };
        if !(s >= 0.0) {
            return Err(undefined("negative or NaN frequency"));
        }
        Ok(match *self {
            Self::Constant(c) => c,
            Self::Indicator { radius } => {
                if s <= radius {
                    1.0
                } else {
                    0.0
                }
            }
            Self::BochnerRiesz { alpha } => {
                let u = 1.0 - s * s;
                if u <= 0.0 {
                    0.0
                } else if alpha == 0.0 {
                    1.0
                } else {
                    u.powf(alpha)
                }
            }
            Self::KAlpha { alpha } => {
                let u = 1.0 - s * s;
                // frequencies landing on the edge itself take the (integrable) edge value 0
                if u <= 1e-12 {
                    0.0
                } else {
                    alpha * s * s * u.powf(alpha - 1.0)
                }
            }
            Self::SmoothBump { lo, hi } => {
                if s <= lo || s >= hi {
                    0.0
                } else {
                    let (a, b) = (lo.ln(), hi.ln());
                    let x = (2.0 * s.ln() - a - b) / (b - a);
                    unit_bump(x)
                }
            }
            Self::Tabulated { ref points } => {
                let (first, last) = (points[0].0, points[points.len() - 1].0);
                if s < first || s > last {
                    return Err(undefined(&format!("outside tabulated range [{first}, {last}]")));
                }
                let k = points.partition_point(|p| p.0 <= s).clamp(1, points.len() - 1);
                let (x0, y0) = points[k - 1];
                let (x1, y1) = points[k];
                if x1 == x0 {
                    y0
                } else {
                    y0 + (y1 - y0) * (s - x0) / (x1 - x0)
                }
            }
        })
    }

    /// Points where `m(t·)` may fail to be smooth.
    pub fn breakpoints(&self, t: f64) -> Vec<f64> {
        match *self {
            Self::Constant(_) => vec![],
            Self::Indicator { radius } => vec![radius / t],
            Self::BochnerRiesz { .. } | Self::KAlpha { .. } => vec![1.0 / t],
            Self::SmoothBump { lo, hi } => vec![lo / t, hi / t],
            Self::Tabulated { ref points } => vec![points[points.len() - 1].0 / t],
        }
    }

    /// Smallest `s` beyond which `m` vanishes (∞ if none).
    pub fn support_end(&self) -> f64 {
        match *self {
            Self::Constant(c) if c == 0.0 => 0.0,
            Self::Constant(_) => f64::INFINITY,
            Self::Indicator { radius } => radius,
            Self::BochnerRiesz { .. } | Self::KAlpha { .. } => 1.0,
            Self::SmoothBump { hi, .. } => hi,
            Self::Tabulated { ref points } => points[points.len() - 1].0,
        }
    }
}

/// Data that a radial symbol `m(|ξ|)` can act on.
pub trait RadialOperand: Sized {
    fn dim(&self) -> usize;
    /// `F^{-1}[symbol(|ξ|) f̂]`; `breaks` lists non-smooth points of the symbol.
    fn apply_symbol<S>(&self, symbol: S, breaks: &[f64]) -> Result<Self, TransformError>
    where
        S: Fn(f64) -> Result<Complex64, TransformError> + Sync;
}

impl RadialOperand for GridField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_symbol<S>(&self, symbol: S, _breaks: &[f64]) -> Result<Self, TransformError>
    where
        S: Fn(f64) -> Result<Complex64, TransformError> + Sync,
    {
        GridSpectrum::new(self).try_apply(symbol)
    }
}

/// Frequency grid used when a symbol acts on a [`RadialProfile`].
pub const PROFILE_FREQ_NODES: usize = 1024;
pub const PROFILE_FREQ_MAX: f64 = 50.0;

impl RadialOperand for RadialProfile {
    fn dim(&self) -> usize {
        self.d
    }

    fn apply_symbol<S>(&self, symbol: S, breaks: &[f64]) -> Result<Self, TransformError>
    where
        S: Fn(f64) -> Result<Complex64, TransformError> + Sync,
    {
        let lo = 1e-3 / self.r_max().max(1.0);
        let freqs = crate::grids_norms::log_edges(lo, PROFILE_FREQ_MAX, PROFILE_FREQ_NODES);
        let fh = radial_fourier_on(self, &freqs).profile;
        let m: Result<Vec<Complex64>, TransformError> = freqs.par_iter().map(|&r| symbol(r)).collect();
        let m = m?;
        let prod = RadialProfile {
            d: self.d,
            radii: freqs.clone(),
            values: fh.values.iter().zip(&m).map(|(a, b)| a * b).collect(),
        };
        let mut br: Vec<f64> = breaks.iter().copied().filter(|&b| b < PROFILE_FREQ_MAX).collect();
        br.push(freqs[0]);
        let (values, _) = inverse_radial_fourier_fn(self.d, |r| prod.eval(r), &br, PROFILE_FREQ_MAX, &self.radii);
        Ok(RadialProfile {
            d: self.d,
            radii: self.radii.clone(),
            values,
        })
    }
}

/// `T_{m(t·)} f`: multiply `f̂(ξ)` by `m(t|ξ|)` and invert.
pub fn apply_radial_multiplier<F: RadialOperand>(f: &F, m: &MultiplierSpec, t: f64) -> Result<F, TransformError> {
    if !(t > 0.0) {
        return Err(TransformError::Invalid(format!("scale t = {t} must be positive")));
    }
    f.apply_symbol(|r| m.eval(t * r).map(|v| Complex64::new(v, 0.0)), &m.breakpoints(t))
}
