//! Sampled-function containers, Lebesgue and Lorentz norms, ring profiles,
//! `dt/t` quadrature grids and log–log exponent fits.

use crate::special_functions::CompensatedSum;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("fit needs at least 3 positive points, got {0}")]
    TooFewPoints(usize),
}

/// A complex function sampled on the periodic box `[-L/2, L/2)^dim`, row-major.
///
/// Sample `i` along an axis sits at `-L/2 + i·L/n`, so the origin is index `n/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub dim: usize,
    pub n: usize,
    pub extent: f64,
    pub values: Vec<Complex64>,
}

impl GridField {
    pub fn zeros(dim: usize, n: usize, extent: f64) -> Result<Self, GridError> {
        Self::check(dim, n, extent)?;
        Ok(Self {
            dim,
            n,
            extent,
            values: vec![Complex64::new(0.0, 0.0); n.pow(dim as u32)],
        })
    }

    /// Default box: `d = 2` uses n = 512, L = 64; `d = 1` uses n = 8192, L = 512.
    pub fn default_for(dim: usize) -> Result<Self, GridError> {
        match dim {
            1 => Self::zeros(1, 8192, 512.0),
            2 => Self::zeros(2, 512, 64.0),
            _ => Err(GridError::Invalid(format!("dimension {dim} not supported on grids"))),
        }
    }

    fn check(dim: usize, n: usize, extent: f64) -> Result<(), GridError> {
        if dim != 1 && dim != 2 {
            return Err(GridError::Invalid(format!("dim must be 1 or 2, got {dim}")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(GridError::Invalid(format!("n = {n} must be a power of two ≥ 2")));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(GridError::Invalid(format!("extent L = {extent} must be positive")));
        }
        Ok(())
    }

    pub fn from_fn<F>(dim: usize, n: usize, extent: f64, mut f: F) -> Result<Self, GridError>
    where
        F: FnMut(&[f64]) -> Complex64,
    {
        let mut g = Self::zeros(dim, n, extent)?;
        let mut x = vec![0.0; dim];
        for idx in 0..g.values.len() {
            g.position_into(idx, &mut x);
            g.values[idx] = f(&x);
        }
        Ok(g)
    }

    pub fn from_real_fn<F>(dim: usize, n: usize, extent: f64, mut f: F) -> Result<Self, GridError>
    where
        F: FnMut(&[f64]) -> f64,
    {
        Self::from_fn(dim, n, extent, |x| Complex64::new(f(x), 0.0))
    }

    pub fn same_shape(&self, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        Self {
            dim: self.dim,
            n: self.n,
            extent: self.extent,
            values,
        }
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        self.same_shape(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.extent + i as f64 * self.spacing()
    }

    /// Axis indices of a flat index (row-major: last axis fastest).
    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.n, idx % self.n]
        }
    }

    pub fn ravel(&self, i: usize, j: usize) -> usize {
        if self.dim == 1 {
            i
        } else {
            i * self.n + j
        }
    }

    pub fn position_into(&self, idx: usize, out: &mut [f64]) {
        let ij = self.unravel(idx);
        for (a, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = self.coordinate(ij[a]);
        }
    }

    pub fn position(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        self.position_into(idx, &mut x);
        x
    }

    pub fn radius(&self, idx: usize) -> f64 {
        let ij = self.unravel(idx);
        let mut r2 = 0.0;
        for &i in ij.iter().take(self.dim) {
            let c = self.coordinate(i);
            r2 += c * c;
        }
        r2.sqrt()
    }

    /// Largest |f| on the boundary layer of the box (aliasing diagnostic).
    pub fn boundary_max(&self) -> f64 {
        let n = self.n;
        let mut m: f64 = 0.0;
        for idx in 0..self.values.len() {
            let ij = self.unravel(idx);
            let on_edge = (0..self.dim).any(|a| ij[a] == 0 || ij[a] == n - 1);
            if on_edge {
                m = m.max(self.values[idx].norm());
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Integration region for [`lp_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl Region {
    fn contains(&self, r: f64) -> bool {
        match *self {
            Region::Ball { radius } => r <= radius,
            Region::Annulus { inner, outer } => r >= inner && r < outer,
        }
    }
}

/// Riemann-sum `L^p` norm over `region` (whole box when `None`); `p = ∞` gives the max.
pub fn lp_norm(f: &GridField, p: f64, region: Option<Region>) -> f64 {
    assert!(p >= 1.0, "p must be ≥ 1");
    let vol = f.cell_volume();
    let inside = |idx: usize| region.map_or(true, |r| r.contains(f.radius(idx)));
    if p.is_infinite() {
        return (0..f.len())
            .filter(|&i| inside(i))
            .fold(0.0, |m, i| m.max(f.values[i].norm()));
    }
    let mut acc = CompensatedSum::new();
    for i in 0..f.len() {
        if inside(i) {
            acc.add(f.values[i].norm().powf(p));
        }
    }
    (acc.value() * vol).powf(1.0 / p)
}

/// Exponents of a Lorentz space `L^{p,q}`; `q = ∞` selects the supremum form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzExponents {
    pub p: f64,
    pub q: f64,
}

impl LorentzExponents {
    pub fn new(p: f64, q: f64) -> Result<Self, GridError> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(GridError::Invalid(format!("Lorentz p = {p} must lie in (1, ∞)")));
        }
        if !(q >= 1.0) {
            return Err(GridError::Invalid(format!("Lorentz q = {q} must lie in [1, ∞]")));
        }
        Ok(Self { p, q })
    }
}

/// Decreasing rearrangement of |f| as sorted cell values (each cell carries the cell volume).
pub fn rearrangement(f: &GridField) -> Vec<f64> {
    let mut a: Vec<f64> = f.values.iter().map(|v| v.norm()).collect();
    a.sort_by(|x, y| y.partial_cmp(x).expect("finite samples"));
    a
}

/// Measure of `{|f| > lambda}`.
pub fn distribution(f: &GridField, lambda: f64) -> f64 {
    f.values.iter().filter(|v| v.norm() > lambda).count() as f64 * f.cell_volume()
}

/// `(∫_0^∞ (t^{1/p} f*(t))^q dt/t)^{1/q}`, with the layer integral over each cell evaluated exactly.
pub fn lorentz_norm(f: &GridField, pq: LorentzExponents) -> f64 {
    lorentz_from_sorted(&rearrangement(f), f.cell_volume(), pq)
}

pub(crate) fn lorentz_from_sorted(sorted: &[f64], vol: f64, pq: LorentzExponents) -> f64 {
    let LorentzExponents { p, q } = pq;
    if q.is_infinite() {
        // sup over [kv, (k+1)v) of t^{1/p} a_k is attained at the right end
        return sorted
            .iter()
            .enumerate()
            .fold(0.0, |m, (k, &a)| m.max(((k + 1) as f64 * vol).powf(1.0 / p) * a));
    }
    let r = q / p;
    let mut acc = CompensatedSum::new();
    for (k, &a) in sorted.iter().enumerate() {
        if a == 0.0 {
            break;
        }
        // ∫_{kv}^{(k+1)v} t^{r-1} dt = v^r ((k+1)^r - k^r)/r
        let layer = if k == 0 {
            1.0
        } else {
            let kf = k as f64;
            kf.powf(r) * (r * (1.0 / kf).ln_1p()).exp_m1()
        };
        acc.add(a.powf(q) * layer);
    }
    (acc.value() * vol.powf(r) / r).powf(1.0 / q)
}

/// Per-ring statistics from [`annulus_profile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingStat {
    pub center: f64,
    pub inner: f64,
    pub outer: f64,
    /// `(mean of |f|² over ring cells)^{1/2}`.
    pub l2_mean: f64,
    /// `Σ |f|^p · cell volume` over the ring.
    pub lp_mass: f64,
    pub cells: usize,
    pub empty: bool,
}

/// Ring statistics for rings `[edges[i], edges[i+1])`.
pub fn annulus_profile(f: &GridField, edges: &[f64], p: f64) -> Result<Vec<RingStat>, GridError> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(GridError::Invalid("ring edges must be strictly increasing (≥ 2 values)".into()));
    }
    let half = 0.5 * f.extent * (f.dim as f64).sqrt();
    if edges[edges.len() - 1] > half * (1.0 + 1e-12) {
        return Err(GridError::Invalid(format!(
            "outer ring edge {} exceeds box radius {half}",
            edges[edges.len() - 1]
        )));
    }
    let nr = edges.len() - 1;
    let mut sq = vec![CompensatedSum::new(); nr];
    let mut pm = vec![CompensatedSum::new(); nr];
    let mut cnt = vec![0usize; nr];
    for idx in 0..f.len() {
        let r = f.radius(idx);
        if r < edges[0] || r >= edges[nr] {
            continue;
        }
        let k = edges.partition_point(|&e| e <= r) - 1;
        let a = f.values[idx].norm();
        sq[k].add(a * a);
        pm[k].add(a.powf(p));
        cnt[k] += 1;
    }
    let vol = f.cell_volume();
    Ok((0..nr)
        .map(|k| RingStat {
            center: 0.5 * (edges[k] + edges[k + 1]),
            inner: edges[k],
            outer: edges[k + 1],
            l2_mean: if cnt[k] > 0 {
                (sq[k].value() / cnt[k] as f64).sqrt()
            } else {
                0.0
            },
            lp_mass: pm[k].value() * vol,
            cells: cnt[k],
            empty: cnt[k] == 0,
        })
        .collect())
}

/// `count` geometrically spaced ring edges on `[lo, hi]`.
pub fn log_edges(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub points: usize,
}

pub fn loglog_fit(points: &[(f64, f64)]) -> Result<FitResult, GridError> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 3 || pts.len() != points.len() {
        return Err(GridError::TooFewPoints(pts.len().min(points.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(GridError::Invalid("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(FitResult {
        slope,
        intercept,
        stderr,
        points: pts.len(),
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            } else {
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Dyadically blocked quadrature for `∫ g(t) dt/t`: Gauss–Legendre in `ln t` on each
/// `[2^k, 2^{k+1}]`, `k_min ≤ k ≤ k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct TGrid {
    pub k_min: i32,
    pub k_max: i32,
    pub nodes_per_block: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TGrid {
    pub fn new(k_min: i32, k_max: i32, nodes_per_block: usize) -> Result<Self, GridError> {
        if k_max < k_min || nodes_per_block == 0 {
            return Err(GridError::Invalid(format!(
                "empty t-grid: blocks [{k_min}, {k_max}], {nodes_per_block} nodes"
            )));
        }
        let (x, w) = gauss_legendre(nodes_per_block);
        let ln2 = std::f64::consts::LN_2;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for k in k_min..=k_max {
            let scale = 2f64.powi(k);
            for (xi, wi) in x.iter().zip(&w) {
                // 2^k times a block-independent factor, so dilating by 2 shifts blocks exactly
                nodes.push(scale * (0.5 * (1.0 + xi) * ln2).exp());
                weights.push(0.5 * wi * ln2);
            }
        }
        Ok(Self {
            k_min,
            k_max,
            nodes_per_block,
            nodes,
            weights,
        })
    }

    /// Blocks `[-6, 6]`, 16 nodes per block.
    pub fn standard() -> Self {
        Self::new(-6, 6, 16).expect("valid default")
    }

    pub fn refined(&self) -> Self {
        Self::new(self.k_min, self.k_max, 2 * self.nodes_per_block).expect("valid refinement")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn t_min(&self) -> f64 {
        2f64.powi(self.k_min)
    }

    pub fn t_max(&self) -> f64 {
        2f64.powi(self.k_max + 1)
    }
}

/// `Σ w_i g(t_i) ≈ ∫ g(t) dt/t` over the covered range.
pub fn tgrid_integrate<G: FnMut(f64) -> Complex64>(mut g: G, grid: &TGrid) -> Complex64 {
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for (t, w) in grid.nodes.iter().zip(&grid.weights) {
        let v = g(*t) * *w;
        re.add(v.re);
        im.add(v.im);
    }
    Complex64::new(re.value(), im.value())
}

/// A radial function `f(x) = f₀(|x|)` sampled on increasing radii, in ambient dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub d: usize,
    pub radii: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl RadialProfile {
    pub fn new(d: usize, radii: Vec<f64>, values: Vec<Complex64>) -> Result<Self, GridError> {
        if d == 0 {
            return Err(GridError::Invalid("dimension must be ≥ 1".into()));
        }
        if radii.len() != values.len() || radii.len() < 4 {
            return Err(GridError::Invalid("need ≥ 4 radii with matching values".into()));
        }
        if radii[0] <= 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(GridError::Invalid("radii must be positive and strictly increasing".into()));
        }
        Ok(Self { d, radii, values })
    }

    /// Log-spaced radii on `[r_min, r_max]`.
    pub fn log_spaced<F>(d: usize, count: usize, r_min: f64, r_max: f64, mut f: F) -> Result<Self, GridError>
    where
        F: FnMut(f64) -> Complex64,
    {
        let radii = log_edges(r_min, r_max, count);
        let values = radii.iter().map(|&r| f(r)).collect();
        Self::new(d, radii, values)
    }

    /// Default radial grid: 8192 log-spaced nodes on `[1e-3, 1e3]`.
    pub fn standard<F: FnMut(f64) -> Complex64>(d: usize, f: F) -> Result<Self, GridError> {
        Self::log_spaced(d, 8192, 1e-3, 1e3, f)
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().expect("nonempty")
    }

    /// Cubic Lagrange interpolation in `ln r`; constant below the first radius, zero beyond the last.
    pub fn eval(&self, r: f64) -> Complex64 {
        let n = self.radii.len();
        if r <= self.radii[0] {
            return self.values[0];
        }
        if r > self.radii[n - 1] {
            return Complex64::new(0.0, 0.0);
        }
        let k = self.radii.partition_point(|&x| x <= r).clamp(1, n - 1) - 1;
        let lo = k.saturating_sub(1).min(n - 4);
        let s = r.ln();
        let xs: [f64; 4] = std::array::from_fn(|i| self.radii[lo + i].ln());
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..4 {
            let mut l = 1.0;
            for j in 0..4 {
                if i != j {
                    l *= (s - xs[j]) / (xs[i] - xs[j]);
                }
            }
            acc += self.values[lo + i] * l;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn grid_validation() {
        assert!(GridField::zeros(3, 8, 1.0).is_err());
        assert!(GridField::zeros(2, 12, 1.0).is_err());
        assert!(GridField::zeros(1, 8, 0.0).is_err());
        let g = GridField::default_for(2).unwrap();
        assert_eq!((g.n, g.extent), (512, 64.0));
        let g = GridField::default_for(1).unwrap();
        assert_eq!((g.n, g.extent), (8192, 512.0));
        assert_eq!(g.coordinate(g.n / 2), 0.0);
    }

    #[test]
    fn indicator_norms() {
        let f = GridField::from_real_fn(2, 64, 8.0, |x| if x[0].abs() < 1.0 && x[1].abs() < 1.5 { 1.0 } else { 0.0 }).unwrap();
        let m = distribution(&f, 0.5);
        for p in [1.0, 1.5, 2.0, 4.0] {
            assert!((lp_norm(&f, p, None) - m.powf(1.0 / p)).abs() < 1e-12);
        }
        for &(p, q) in &[(2.0f64, 1.0f64), (1.5, 3.0), (4.0, 2.0)] {
            let want = (p / q).powf(1.0 / q) * m.powf(1.0 / p);
            let got = lorentz_norm(&f, LorentzExponents::new(p, q).unwrap());
            assert!((got - want).abs() < 1e-10 * want);
        }
        let sup = lorentz_norm(&f, LorentzExponents::new(3.0, f64::INFINITY).unwrap());
        assert!((sup - m.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_l2_norm() {
        let f = GridField::from_real_fn(2, 512, 32.0, |x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp()).unwrap();
        assert!((lp_norm(&f, 2.0, None) - PI.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn dilation_scaling_of_lp() {
        let g = |lam: f64| GridField::from_real_fn(2, 256, 32.0, move |x| (-(lam * lam) * (x[0] * x[0] + x[1] * x[1])).exp()).unwrap();
        let (f1, f2) = (g(1.0), g(2.0));
        for p in [1.0, 2.0, 3.0] {
            let want = 2f64.powf(-2.0 / p) * lp_norm(&f1, p, None);
            assert!((lp_norm(&f2, p, None) - want).abs() < 1e-6 * want);
        }
        let ball = lp_norm(&f1, 2.0, Some(Region::Ball { radius: 1.0 }));
        assert!(ball < lp_norm(&f1, 2.0, None));
        assert_eq!(lp_norm(&f1, 2.0, Some(Region::Annulus { inner: 100.0, outer: 200.0 })), 0.0);
    }

    #[test]
    fn lorentz_diagonal_equals_lp() {
        let f = GridField::from_real_fn(2, 128, 16.0, |x| (-(x[0] * x[0] + 0.5 * x[1] * x[1])).exp() * (1.0 + x[0].sin())).unwrap();
        for p in [1.5, 2.0, 3.0, 6.0] {
            let a = lorentz_norm(&f, LorentzExponents::new(p, p).unwrap());
            let b = lp_norm(&f, p, None);
            assert!((a - b).abs() < 1e-10 * b);
        }
    }

    #[test]
    fn lorentz_second_index_separates_tails() {
        let build = |l: f64| {
            GridField::from_fn(2, 512, l, |x| {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                Complex64::from_polar((1.0 + r).powf(-2.0 / 4.0), r) * if r < 0.5 * l { 1.0 } else { 0.0 }
            })
            .unwrap()
        };
        let (a, b) = (build(64.0), build(256.0));
        let n42 = |f: &GridField| lorentz_norm(f, LorentzExponents::new(4.0, 2.0).unwrap());
        let n41 = |f: &GridField| lorentz_norm(f, LorentzExponents::new(4.0, 1.0).unwrap());
        // r^{-1/2} sits exactly at the L^{4,∞} level: q = 2 grows like √log, q = 1 like log
        let g2 = n42(&b) / n42(&a);
        let g1 = n41(&b) / n41(&a);
        assert!(g1 > g2 && g1 > 1.2);
    }

    #[test]
    fn ring_profiles() {
        let f = GridField::from_real_fn(2, 256, 64.0, |_| 3.0).unwrap();
        let rings = annulus_profile(&f, &log_edges(1.0, 30.0, 8), 2.0).unwrap();
        for r in &rings {
            assert!((r.l2_mean - 3.0).abs() < 1e-12);
        }
        let f = GridField::from_real_fn(2, 512, 64.0, |x| {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if r > 0.0 { 1.0 / r } else { 0.0 }
        })
        .unwrap();
        for r in annulus_profile(&f, &log_edges(2.0, 30.0, 10), 2.0).unwrap() {
            assert!((r.l2_mean * r.center - 1.0).abs() < 0.02, "{:?}", r);
        }
        let f = GridField::from_real_fn(2, 256, 32.0, |x| (-(x[0] * x[0] + x[1] * x[1]) / 8.0).exp()).unwrap();
        let rings = annulus_profile(&f, &log_edges(0.5, 12.0, 10), 2.0).unwrap();
        assert!(rings.windows(2).all(|w| w[1].l2_mean < w[0].l2_mean));
        let rings = annulus_profile(&f, &[1e-3, 2e-3, 1.0], 2.0).unwrap();
        assert!(rings[0].empty && !rings[1].empty);
        assert!(annulus_profile(&f, &[1.0, 100.0], 2.0).is_err());
    }

    #[test]
    fn loglog_fits() {
        let pts: Vec<(f64, f64)> = (1..20).map(|i| (i as f64, (i * i) as f64)).collect();
        let fit = loglog_fit(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12 && fit.stderr < 1e-12);
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (1.0 + i as f64, 5.0)).collect();
        assert!(loglog_fit(&flat).unwrap().slope.abs() < 1e-14);
        assert!(loglog_fit(&pts[..2]).is_err());
        assert!(loglog_fit(&[(1.0, 1.0), (2.0, -1.0), (3.0, 2.0)]).is_err());
    }

    #[test]
    fn loglog_fit_noisy_power_law() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<(f64, f64)> = (0..60)
            .map(|i| {
                let x = 10f64.powf(i as f64 / 20.0);
                (x, 7.0 * x.powf(-1.5) * (1.0 + 0.01 * rng.random_range(-1.0..1.0)))
            })
            .collect();
        let fit = loglog_fit(&pts).unwrap();
        assert!((fit.slope + 1.5).abs() < 0.05);
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in [1usize, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for k in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(a, b)| a.powi(k as i32) * b).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn tgrid_block_weights_and_integrals() {
        let g = TGrid::new(0, 0, 16).unwrap();
        assert!((tgrid_integrate(|_| c(1.0), &g).re - std::f64::consts::LN_2).abs() < 1e-12);
        let g = TGrid::new(-4, 4, 16).unwrap();
        let w = 3.0;
        let got = tgrid_integrate(|t| Complex64::from_polar(1.0, w * t.ln()), &g);
        // ∫ t^{iω} dt/t = (t^{iω})/(iω) between 2^{-4} and 2^5
        let f = |t: f64| Complex64::from_polar(1.0, w * t.ln()) / Complex64::new(0.0, w);
        let want = f(32.0) - f(1.0 / 16.0);
        assert!((got - want).norm() < 1e-8);
        let smooth = |t: f64| c((-(t.ln()).powi(2)).exp());
        let a = tgrid_integrate(smooth, &g);
        let b = tgrid_integrate(smooth, &g.refined());
        assert!((a - b).norm() < 1e-10);
        assert!(TGrid::new(2, 1, 4).is_err());
        assert_eq!(TGrid::standard().len(), 13 * 16);
    }

    #[test]
    fn tgrid_dilation_shifts_blocks() {
        let g = TGrid::new(-3, 3, 12).unwrap();
        let h = TGrid::new(-2, 4, 12).unwrap();
        let f = |t: f64| c(t / (1.0 + t * t));
        let a = tgrid_integrate(|t| f(2.0 * t), &g);
        let b = tgrid_integrate(f, &h);
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn radial_profile_interpolation() {
        let p = RadialProfile::log_spaced(2, 2048, 1e-3, 50.0, |r| c((-r * r / 2.0).exp())).unwrap();
        for &r in &[0.0123, 0.7, 3.3, 9.9] {
            assert!((p.eval(r).re - (-r * r / 2.0).exp()).abs() < 1e-7);
        }
        assert_eq!(p.eval(1e-4), p.values[0]);
        assert_eq!(p.eval(60.0), c(0.0));
        assert!(RadialProfile::new(2, vec![1.0, 0.5, 2.0, 3.0], vec![c(0.0); 4]).is_err());
    }

    proptest! {
        #[test]
        fn rearrangement_matches_distribution(vals in proptest::collection::vec(0.0f64..10.0, 64), lam in 0.0f64..10.0) {
            let f = GridField { dim: 1, n: 64, extent: 3.0, values: vals.iter().map(|&v| c(v)).collect() };
            let sorted = rearrangement(&f);
            let count = sorted.iter().filter(|&&a| a > lam).count() as f64 * f.cell_volume();
            prop_assert!((count - distribution(&f, lam)).abs() < 1e-12);
        }

        #[test]
        fn lorentz_homogeneous_and_rearrangement_invariant(
            vals in proptest::collection::vec(-5.0f64..5.0, 32),
            scale in 0.1f64..10.0,
            rot in 0usize..32,
            p in 1.1f64..6.0,
            q in 1.0f64..8.0,
        ) {
            let pq = LorentzExponents::new(p, q).unwrap();
            let f = GridField { dim: 1, n: 32, extent: 2.0, values: vals.iter().map(|&v| c(v)).collect() };
            let mut perm = f.values.clone();
            perm.rotate_left(rot);
            perm.reverse();
            let g = f.same_shape(perm);
            let a = lorentz_norm(&f, pq);
            prop_assert!((lorentz_norm(&g, pq) - a).abs() <= 1e-12 * (1.0 + a));
            let h = f.map(|v| v * scale);
            prop_assert!((lorentz_norm(&h, pq) - scale * a).abs() <= 1e-11 * (1.0 + scale * a));
        }
    }
}
