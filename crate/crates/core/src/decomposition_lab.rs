//! Atomic decomposition at grid scale: Peetre's maximal square function, level sets
//! `Ω_n` and their expansions `Ω_n*`, Whitney cubes, cube classification and atoms
//! with their `ℓ²` energy estimate.
//!
//! The box is the periodic grid `[0, n)²` in cells; a dyadic cube is a lattice square
//! of `2^m` cells with corner on the `2^m` lattice.

use crate::grids_norms::GridField;
use crate::maximal_operators::{geometric_radii, BallFamily};
use crate::radial_transforms::{GridSpectrum, MultiplierSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecompError {
    #[error("{0}")]
    Domain(String),
}

fn domain(msg: String) -> DecompError {
    DecompError::Domain(msg)
}

/// `φ̂`: smooth bump in `log|ξ|` supported exactly in `(1/5, 5)`.
pub fn peetre_phi_hat(xi: f64) -> f64 {
    MultiplierSpec::SmoothBump { lo: 0.2, hi: 5.0 }.eval(xi).unwrap_or(0.0)
}

/// Dilation factor of the Whitney condition.
pub const WHITNEY_DILATION: usize = 50;
/// Dilation used for the bounded-overlap check.
pub const OVERLAP_DILATION: usize = 10;
/// Radius ratio of the Hardy–Littlewood balls defining `Ω_n*`.
pub const STAR_RADIUS_RATIO: f64 = 1.090_507_732_665_257_7; // 2^{1/8}

/// `𝔖f` together with the band pieces `ℒ_k f` it was built from.
#[derive(Debug, Clone)]
pub struct PeetreSquare {
    pub field: GridField,
    pub k_min: i32,
    pub k_max: i32,
    /// The requested range exceeded the grid's frequency band and was cut.
    pub truncated: bool,
    /// `ℒ_k f` for `k = k_min..=k_max`.
    pub bands: Vec<GridField>,
}

impl PeetreSquare {
    pub fn band(&self, k: i32) -> Option<&GridField> {
        if k < self.k_min || k > self.k_max {
            None
        } else {
            self.bands.get((k - self.k_min) as usize)
        }
    }
}

fn check_grid(f: &GridField) -> Result<i32, DecompError> {
    if f.dim != 2 {
        return Err(domain(format!("decomposition lab works in d = 2, got d = {}", f.dim)));
    }
    let c = (1.0 / f.spacing()).log2();
    if (c - c.round()).abs() > 1e-12 {
        return Err(domain(format!("cell size {} must be a power of two", f.spacing())));
    }
    Ok(c.round() as i32)
}

/// Bands `k` whose annulus `2^k (1/5, 5)` meets the grid's frequencies.
pub fn admissible_k_range(f: &GridField) -> (i32, i32) {
    let lowest = 2.0 * PI / f.extent;
    let highest = PI / f.spacing() * 2f64.sqrt();
    let k_min = (lowest / 5.0).log2().floor() as i32 + 1;
    let k_max = (highest * 5.0).log2().ceil() as i32 - 1;
    (k_min, k_max)
}

/// Periodic max over windows `[i - w, i + w]` of a row.
fn window_max(row: &[f64], w: usize, out: &mut [f64]) {
    let n = row.len();
    if 2 * w + 1 >= n {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        out.iter_mut().for_each(|o| *o = m);
        return;
    }
    let mut dq: std::collections::VecDeque<(isize, f64)> = std::collections::VecDeque::new();
    let at = |i: isize| row[i.rem_euclid(n as isize) as usize];
    let w = w as isize;
    for i in -w..(n as isize + w) {
        let v = at(i);
        while dq.back().is_some_and(|&(_, b)| b <= v) {
            dq.pop_back();
        }
        dq.push_back((i, v));
        let centre = i - w;
        if centre >= 0 {
            while dq.front().is_some_and(|&(j, _)| j < centre - w) {
                dq.pop_front();
            }
            out[centre as usize] = dq.front().map(|&(_, b)| b).unwrap_or(v);
        }
    }
}

/// `max_{|y| ≤ r} v(x + y)` over lattice offsets (minimum-image distance, in cells).
pub fn disk_max(values: &[f64], n: usize, r_cells: f64) -> Vec<f64> {
    let half = (n / 2) as isize;
    let mut offsets: Vec<(isize, usize)> = Vec::new();
    for dy in -half..half {
        let rem = r_cells * r_cells * (1.0 + 1e-12) - (dy * dy) as f64;
        if rem >= 0.0 {
            offsets.push((dy, rem.sqrt().floor() as usize));
        }
    }
    let mut widths: Vec<usize> = offsets.iter().map(|o| o.1.min(n)).collect();
    widths.sort_unstable();
    widths.dedup();
    let row_max: Vec<(usize, Vec<f64>)> = widths
        .par_iter()
        .map(|&w| {
            let mut out = vec![0.0; n * n];
            for (row, o) in values.chunks(n).zip(out.chunks_mut(n)) {
                window_max(row, w, o);
            }
            (w, out)
        })
        .collect();
    let lookup = |w: usize| &row_max.iter().find(|(x, _)| *x == w.min(n)).expect("width").1;
    let mut out = vec![f64::NEG_INFINITY; n * n];
    for &(dy, w) in &offsets {
        let src = lookup(w);
        for i in 0..n {
            let si = (i as isize + dy).rem_euclid(n as isize) as usize;
            let (o, s) = (&mut out[i * n..(i + 1) * n], &src[si * n..(si + 1) * n]);
            for (a, &b) in o.iter_mut().zip(s) {
                if b > *a {
                    *a = b;
                }
            }
        }
    }
    out
}

/// `𝔖f(x) = (Σ_k sup_{|y| ≤ 100d·2^{-k}} |ℒ_k f(x+y)|²)^{1/2}` with `ℒ_k f = φ_k ∗ f`.
pub fn peetre_square(f: &GridField, k_range: (i32, i32)) -> Result<PeetreSquare, DecompError> {
    check_grid(f)?;
    if k_range.0 > k_range.1 {
        return Err(domain(format!("empty band range {k_range:?}")));
    }
    let (a, b) = admissible_k_range(f);
    let (k_min, k_max) = (k_range.0.max(a), k_range.1.min(b));
    let truncated = k_min != k_range.0 || k_max != k_range.1;
    if k_min > k_max {
        return Err(domain(format!("band range {k_range:?} lies outside the grid's band [{a}, {b}]")));
    }
    let spec = GridSpectrum::new(f);
    let n = f.n;
    let h = f.spacing();
    let mut sum = vec![0.0; f.len()];
    let mut bands = Vec::new();
    for k in k_min..=k_max {
        let scale = 2f64.powi(-k);
        let band = spec.apply(|r| Complex64::new(peetre_phi_hat(scale * r), 0.0));
        let abs: Vec<f64> = band.values.iter().map(|z| z.norm()).collect();
        let radius = 100.0 * f.dim as f64 * scale / h;
        let sup = disk_max(&abs, n, radius);
        for (s, v) in sum.iter_mut().zip(&sup) {
            *s += v * v;
        }
        bands.push(band);
    }
    let field = f.same_shape(sum.into_iter().map(|v| Complex64::new(v.sqrt(), 0.0)).collect());
    Ok(PeetreSquare {
        field,
        k_min,
        k_max,
        truncated,
        bands,
    })
}

/// `Ω_n = {𝔖f > 2^n}` and `Ω_n* = {Mχ_{Ω_n} > 100^{-d}}` for one `n`.
#[derive(Debug, Clone)]
pub struct LevelSet {
    pub n: i32,
    pub omega: Vec<bool>,
    pub omega_star: Vec<bool>,
    /// `Ω_{n+1}`, needed for classification.
    pub omega_next: Vec<bool>,
}

fn count(set: &[bool]) -> usize {
    set.iter().filter(|&&b| b).count()
}

impl LevelSet {
    pub fn measure(&self, cell_volume: f64) -> f64 {
        count(&self.omega) as f64 * cell_volume
    }

    pub fn star_measure(&self, cell_volume: f64) -> f64 {
        count(&self.omega_star) as f64 * cell_volume
    }
}

/// Default number of levels below the top one.
pub const DYNAMIC_LEVELS: usize = 8;

/// Level sets for `n_top - levels + 1 ..= n_top`, where `n_top` is the largest `n` with `Ω_n ≠ ∅`.
pub fn level_sets(sq: &GridField, levels: usize) -> Result<Vec<LevelSet>, DecompError> {
    if sq.values.iter().any(|z| z.re < 0.0 || z.im != 0.0) {
        return Err(domain("square function must be real and nonnegative".into()));
    }
    let top = sq.max_abs();
    if !(top > 0.0) {
        return Ok(Vec::new());
    }
    let n_top = top.log2().ceil() as i32 - 1;
    let balls = BallFamily::new(sq, &geometric_radii(sq, STAR_RADIUS_RATIO));
    let threshold = 100f64.powi(-(sq.dim as i32));
    let above = |n: i32| -> Vec<bool> {
        let t = 2f64.powi(n);
        sq.values.iter().map(|z| z.re > t).collect()
    };
    let ns: Vec<i32> = (0..levels as i32).map(|i| n_top - levels as i32 + 1 + i).collect();
    Ok(ns
        .par_iter()
        .map(|&n| {
            let omega = above(n);
            let indicator = sq.same_shape(omega.iter().map(|&b| Complex64::new(if b { 1.0 } else { 0.0 }, 0.0)).collect());
            let m = balls.maximal(&indicator);
            let omega_star = m.values.iter().zip(&omega).map(|(v, &b)| b || v.re > threshold).collect();
            LevelSet {
                n,
                omega,
                omega_star,
                omega_next: above(n + 1),
            }
        })
        .collect())
}

/// A lattice square of `2^m` cells with lower corner `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    /// `log₂` of the side in cells.
    pub m: u32,
    pub corner: [usize; 2],
}

impl DyadicCube {
    pub fn side(&self) -> usize {
        1 << self.m
    }

    /// `L(Q)`: `log₂` of the physical side for cell size `2^{-c}`.
    pub fn level(&self, cell_log2_inv: i32) -> i32 {
        self.m as i32 - cell_log2_inv
    }

    pub fn contains(&self, other: &DyadicCube) -> bool {
        let s = self.side();
        other.m <= self.m
            && (0..2).all(|a| other.corner[a] >= self.corner[a] && other.corner[a] + other.side() <= self.corner[a] + s)
    }

    pub fn cells(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        let s = self.side();
        (0..s).flat_map(move |di| (0..s).map(move |dj| (self.corner[0] + di) * n + self.corner[1] + dj))
    }
}

/// Periodic rectangle counts from a 2-D prefix sum.
struct PrefixCount {
    n: usize,
    p: Vec<u32>,
}

impl PrefixCount {
    fn new(set: &[bool], n: usize) -> Self {
        let mut p = vec![0u32; (n + 1) * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                p[(i + 1) * (n + 1) + j + 1] = p[i * (n + 1) + j + 1] + p[(i + 1) * (n + 1) + j] - p[i * (n + 1) + j] + set[i * n + j] as u32;
            }
        }
        Self { n, p }
    }

    fn rect(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> u32 {
        let w = self.n + 1;
        self.p[i1 * w + j1] + self.p[i0 * w + j0] - self.p[i0 * w + j1] - self.p[i1 * w + j0]
    }

    /// Count over rows `[i, i + a)` and columns `[j, j + b)` taken modulo `n`.
    fn wrapped(&self, i: isize, a: usize, j: isize, b: usize) -> u32 {
        let n = self.n;
        let split = |start: isize, len: usize| -> Vec<(usize, usize)> {
            if len >= n {
                return vec![(0, n)];
            }
            let s = start.rem_euclid(n as isize) as usize;
            if s + len <= n {
                vec![(s, s + len)]
            } else {
                vec![(s, n), (0, s + len - n)]
            }
        };
        let mut c = 0;
        for &(r0, r1) in &split(i, a) {
            for &(c0, c1) in &split(j, b) {
                c += self.rect(r0, r1, c0, c1);
            }
        }
        c
    }

    /// Cells of the centred `factor`-fold dilate of `q`.
    fn dilate(&self, q: &DyadicCube, factor: usize) -> u32 {
        let s = q.side() as isize;
        let f = factor as isize;
        // centres of cells i + 1/2 in [c - f s/2, c + f s/2) with c = corner + s/2
        let lo = |corner: usize| corner as isize + (s - f * s) / 2;
        let len = (f * s) as usize;
        self.wrapped(lo(q.corner[0]), len, lo(q.corner[1]), len)
    }
}

/// Maximal dyadic cubes whose 50-fold dilate lies inside `omega_star`.
pub fn whitney(omega_star: &[bool], n: usize) -> Vec<DyadicCube> {
    let outside: Vec<bool> = omega_star.iter().map(|b| !b).collect();
    let pc = PrefixCount::new(&outside, n);
    let top = n.trailing_zeros();
    let mut covered = vec![false; n * n];
    let mut out = Vec::new();
    for m in (0..=top).rev() {
        let s = 1usize << m;
        for ci in (0..n).step_by(s) {
            for cj in (0..n).step_by(s) {
                if covered[ci * n + cj] {
                    continue;
                }
                let q = DyadicCube { m, corner: [ci, cj] };
                let clear = if WHITNEY_DILATION * s >= n {
                    pc.wrapped(0, n, 0, n) == 0
                } else {
                    pc.dilate(&q, WHITNEY_DILATION) == 0
                };
                if clear {
                    for c in q.cells(n) {
                        covered[c] = true;
                    }
                    out.push(q);
                }
            }
        }
    }
    out
}

/// Largest number of `factor`-fold dilates covering one cell.
pub fn dilate_multiplicity(cubes: &[DyadicCube], n: usize, factor: usize) -> usize {
    let mut mult = vec![0usize; n * n];
    for q in cubes {
        let s = q.side() as isize;
        let f = factor as isize;
        let len = ((f * s) as usize).min(n);
        let lo = |c: usize| c as isize + (s - f * s) / 2;
        let (i0, j0) = (lo(q.corner[0]), lo(q.corner[1]));
        for di in 0..len {
            let i = (i0 + di as isize).rem_euclid(n as isize) as usize;
            for dj in 0..len {
                let j = (j0 + dj as isize).rem_euclid(n as isize) as usize;
                mult[i * n + j] += 1;
            }
        }
    }
    mult.into_iter().max().unwrap_or(0)
}

/// Cells of `omega_star` at Euclidean distance more than `25√2 + 1` cells from its
/// complement that no Whitney cube covers.
pub fn eroded_uncovered(omega_star: &[bool], cubes: &[DyadicCube], n: usize) -> usize {
    let outside: Vec<f64> = omega_star.iter().map(|&b| if b { 0.0 } else { 1.0 }).collect();
    let near = disk_max(&outside, n, (WHITNEY_DILATION as f64 / 2.0) * 2f64.sqrt() + 1.0);
    let mut covered = vec![false; n * n];
    for q in cubes {
        for c in q.cells(n) {
            covered[c] = true;
        }
    }
    (0..n * n).filter(|&c| near[c] == 0.0 && !covered[c]).count()
}

/// Cubes of `𝒬^n_{-k}` for one `(n, k)`.
#[derive(Debug, Clone)]
pub struct CubeFamily {
    pub k: i32,
    pub cubes: Vec<DyadicCube>,
}

/// Side, in cells, of the cubes of sidelength `2^{-k}`; finer cubes collapse to single cells
/// and coarser ones to the whole box.
pub fn cube_log2_cells(k: i32, cell_log2_inv: i32, n: usize) -> u32 {
    (cell_log2_inv - k).clamp(0, n.trailing_zeros() as i32) as u32
}

/// `Q ∈ 𝒬^n_{-k}` iff `|Q ∩ Ω_n| ≥ |Q|/2` and `|Q ∩ Ω_{n+1}| < |Q|/2`.
pub fn classify_cubes(level: &LevelSet, k_range: (i32, i32), cell_log2_inv: i32, n: usize) -> Vec<CubeFamily> {
    let now = PrefixCount::new(&level.omega, n);
    let next = PrefixCount::new(&level.omega_next, n);
    (k_range.0..=k_range.1)
        .map(|k| {
            let m = cube_log2_cells(k, cell_log2_inv, n);
            let s = 1usize << m;
            let half = (s * s) as f64 / 2.0;
            let mut cubes = Vec::new();
            for ci in (0..n).step_by(s) {
                for cj in (0..n).step_by(s) {
                    let a = now.rect(ci, ci + s, cj, cj + s) as f64;
                    let b = next.rect(ci, ci + s, cj, cj + s) as f64;
                    if a >= half && b < half {
                        cubes.push(DyadicCube { m, corner: [ci, cj] });
                    }
                }
            }
            CubeFamily { k, cubes }
        })
        .collect()
}

/// `a_{k,W,n} = Σ_{Q ∈ 𝒬^n_{-k}, Q ⊂ W} (ℒ_k f) χ_Q`.
#[derive(Debug, Clone)]
pub struct Atom {
    pub n: i32,
    pub k: i32,
    /// Index into the Whitney list of level `n`.
    pub w: usize,
    pub cubes: Vec<DyadicCube>,
    pub l2_sq: f64,
}

impl Atom {
    pub fn field(&self, band: &GridField) -> GridField {
        let mut v = vec![Complex64::new(0.0, 0.0); band.len()];
        for q in &self.cubes {
            for c in q.cells(band.n) {
                v[c] = band.values[c];
            }
        }
        band.same_shape(v)
    }
}

/// Everything computed for one level `n`.
#[derive(Debug, Clone)]
pub struct LevelDecomposition {
    pub set: LevelSet,
    pub whitney: Vec<DyadicCube>,
    pub families: Vec<CubeFamily>,
    pub atoms: Vec<Atom>,
    /// Classified cubes not inside exactly one Whitney cube.
    pub unplaced: usize,
    pub overlap: usize,
    pub eroded_uncovered: usize,
    pub measure: f64,
    pub star_measure: f64,
    /// `Σ_W Σ_k ‖a_{k,W,n}‖₂²`.
    pub energy: f64,
    /// `energy / (2^{2n} meas(Ω_n))`.
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct WhitneyDecomposition {
    pub peetre: PeetreSquare,
    pub cell_log2_inv: i32,
    pub levels: Vec<LevelDecomposition>,
}

/// Atoms of one level and the count of classified cubes that no single `W` contains.
pub fn build_atoms(peetre: &PeetreSquare, level: &LevelSet, whitney: &[DyadicCube], families: &[CubeFamily]) -> (Vec<Atom>, usize) {
    let n = peetre.field.n;
    let cell = peetre.field.cell_volume();
    let mut owner = vec![usize::MAX; n * n];
    for (i, w) in whitney.iter().enumerate() {
        for c in w.cells(n) {
            owner[c] = i;
        }
    }
    let mut unplaced = 0;
    let mut atoms = Vec::new();
    for fam in families {
        let band = peetre.band(fam.k).expect("family inside band range");
        let mut by_w: std::collections::BTreeMap<usize, Vec<DyadicCube>> = Default::default();
        for q in &fam.cubes {
            let w = owner[q.corner[0] * n + q.corner[1]];
            if w == usize::MAX || !whitney[w].contains(q) {
                unplaced += 1;
                continue;
            }
            by_w.entry(w).or_default().push(*q);
        }
        for (w, cubes) in by_w {
            let l2_sq = cubes
                .iter()
                .flat_map(|q| q.cells(n).map(|c| band.values[c].norm_sqr()).collect::<Vec<_>>())
                .sum::<f64>()
                * cell;
            atoms.push(Atom {
                n: level.n,
                k: fam.k,
                w,
                cubes,
                l2_sq,
            });
        }
    }
    (atoms, unplaced)
}

/// The full pipeline for `f` over the given bands and `levels` levels.
pub fn decompose(f: &GridField, k_range: (i32, i32), levels: usize) -> Result<WhitneyDecomposition, DecompError> {
    decompose_square(peetre_square(f, k_range)?, levels)
}

/// The pipeline from a precomputed `𝔖f` and its bands.
pub fn decompose_square(peetre: PeetreSquare, levels: usize) -> Result<WhitneyDecomposition, DecompError> {
    let c = check_grid(&peetre.field)?;
    let n = peetre.field.n;
    let cell = peetre.field.cell_volume();
    let sets = level_sets(&peetre.field, levels)?;
    let out = sets
        .into_par_iter()
        .map(|set| {
            let whitney = whitney(&set.omega_star, n);
            let families = classify_cubes(&set, (peetre.k_min, peetre.k_max), c, n);
            let (atoms, unplaced) = build_atoms(&peetre, &set, &whitney, &families);
            let energy: f64 = atoms.iter().map(|a| a.l2_sq).sum();
            let measure = set.measure(cell);
            LevelDecomposition {
                overlap: dilate_multiplicity(&whitney, n, OVERLAP_DILATION),
                eroded_uncovered: eroded_uncovered(&set.omega_star, &whitney, n),
                star_measure: set.star_measure(cell),
                ratio: energy / (4f64.powi(set.n) * measure),
                measure,
                energy,
                set,
                whitney,
                families,
                atoms,
                unplaced,
            }
        })
        .collect();
    Ok(WhitneyDecomposition {
        peetre,
        cell_log2_inv: c,
        levels: out,
    })
}

/// Seeded random real field with spectrum in `lo ≤ |ξ| ≤ hi`.
pub fn random_band_limited(n: usize, extent: f64, lo: f64, hi: f64, seed: u64) -> Result<GridField, DecompError> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let base = GridField::zeros(2, n, extent).map_err(|e| domain(e.to_string()))?;
    let mut spec = GridSpectrum::new(&base);
    for (z, &r) in spec.spectrum.values.iter_mut().zip(&spec.freq) {
        let amp: f64 = rng.random_range(0.0..1.0);
        let phase: f64 = rng.random_range(0.0..2.0 * PI);
        *z = if r >= lo && r <= hi {
            Complex64::from_polar(amp, phase)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let f = spec.apply(|_| Complex64::new(1.0, 0.0));
    let peak = f.values.iter().fold(0.0f64, |m, z| m.max(z.re.abs()));
    Ok(f.map(|z| Complex64::new(z.re / peak, 0.0)))
}

/// Seeded random wave packets: a random field with spectrum in `[lo, hi]` times a sum of
/// `packets` translates of a bump of frequency radius `width`, with amplitudes spread over
/// `2^{-6}..1`. The spectrum lies in `[lo - width, hi + width]`.
pub fn random_packets(n: usize, extent: f64, lo: f64, hi: f64, width: f64, packets: usize, seed: u64) -> Result<GridField, DecompError> {
    let carrier = random_band_limited(n, extent, lo, hi, seed)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut delta = GridField::zeros(2, n, extent).map_err(|e| domain(e.to_string()))?;
    delta.values[0] = Complex64::new(1.0, 0.0);
    let psi = GridSpectrum::new(&delta).apply(|r| Complex64::new(crate::radial_transforms::unit_bump(r / width), 0.0));
    let mut env = vec![0.0; n * n];
    for _ in 0..packets {
        let amp = 2f64.powf(-rng.random_range(0.0..6.0));
        let (ci, cj) = (rng.random_range(0..n), rng.random_range(0..n));
        for (idx, e) in env.iter_mut().enumerate() {
            let [i, j] = psi.unravel(idx);
            *e += amp * psi.values[psi.ravel((i + n - ci) % n, (j + n - cj) % n)].re;
        }
    }
    let v: Vec<f64> = carrier.values.iter().zip(&env).map(|(c, e)| c.re * e).collect();
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(carrier.same_shape(v.into_iter().map(|x| Complex64::new(x / peak, 0.0)).collect()))
}

/// CSV rows `k,W.level,W.row,W.col,atom_l2_sq` for one level.
pub fn atoms_csv(level: &LevelDecomposition, cell_log2_inv: i32) -> String {
    let mut s = String::from("k,w_level,w_row,w_col,atom_l2_sq\n");
    for a in &level.atoms {
        let w = level.whitney[a.w];
        s.push_str(&format!(
            "{},{},{},{},{:.12e}\n",
            a.k,
            w.level(cell_log2_inv),
            w.corner[0],
            w.corner[1],
            a.l2_sq
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridField {
        random_band_limited(64, 16.0, 0.5, 6.0, 3).unwrap()
    }

    #[test]
    fn window_and_disk_max_match_brute_force() {
        let n = 16;
        let v: Vec<f64> = (0..n * n).map(|i| ((i * 37) % 101) as f64).collect();
        for r in [0.0, 1.0, 2.5, 6.0, 20.0] {
            let fast = disk_max(&v, n, r);
            for i in 0..n {
                for j in 0..n {
                    let mut m = f64::NEG_INFINITY;
                    for a in 0..n {
                        for b in 0..n {
                            let di = (a as isize - i as isize).rem_euclid(n as isize).min((i as isize - a as isize).rem_euclid(n as isize));
                            let dj = (b as isize - j as isize).rem_euclid(n as isize).min((j as isize - b as isize).rem_euclid(n as isize));
                            if ((di * di + dj * dj) as f64) <= r * r * (1.0 + 1e-12) {
                                m = m.max(v[a * n + b]);
                            }
                        }
                    }
                    assert_eq!(fast[i * n + j], m, "r={r} at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn peetre_dominates_plain_square_function() {
        let f = sample();
        let p = peetre_square(&f, (-3, 6)).unwrap();
        for idx in 0..f.len() {
            let plain: f64 = p.bands.iter().map(|b| b.values[idx].norm_sqr()).sum::<f64>().sqrt();
            assert!(p.field.values[idx].re >= plain);
        }
        assert!(p.truncated || admissible_k_range(&f) == (-3, 6));
    }

    #[test]
    fn single_band_input_touches_nearby_bands_only() {
        let k0 = 1;
        let f = random_band_limited(64, 16.0, 0.95 * 2f64.powi(k0), 1.05 * 2f64.powi(k0), 9).unwrap();
        let p = peetre_square(&f, admissible_k_range(&f)).unwrap();
        for k in p.k_min..=p.k_max {
            let m = p.band(k).unwrap().max_abs();
            if (k - k0).abs() >= 3 {
                assert!(m < 1e-10, "k={k}: {m}");
            }
        }
    }

    #[test]
    fn set_inclusions_and_whitney_properties() {
        let f = sample();
        let dec = decompose(&f, admissible_k_range(&f), 6).unwrap();
        let n = f.n;
        for w in dec.levels.windows(2) {
            for c in 0..n * n {
                assert!(!w[1].set.omega[c] || w[0].set.omega[c]);
            }
        }
        for lev in &dec.levels {
            for c in 0..n * n {
                assert!(!lev.set.omega[c] || lev.set.omega_star[c]);
            }
            let mut seen = vec![false; n * n];
            for q in &lev.whitney {
                for c in q.cells(n) {
                    assert!(!seen[c], "overlapping Whitney cubes");
                    seen[c] = true;
                }
            }
            assert_eq!(lev.eroded_uncovered, 0, "n={}", lev.set.n);
            assert_eq!(lev.unplaced, 0, "n={}", lev.set.n);
            assert!(lev.star_measure >= lev.measure);
        }
    }

    #[test]
    fn classification_is_a_partition_and_atoms_reconstruct() {
        let f = sample();
        let dec = decompose(&f, admissible_k_range(&f), 6).unwrap();
        let n = f.n;
        for k in dec.peetre.k_min..=dec.peetre.k_max {
            let band = dec.peetre.band(k).unwrap();
            let mut hits = vec![0usize; n * n];
            let mut sum = vec![Complex64::new(0.0, 0.0); n * n];
            for lev in &dec.levels {
                for a in lev.atoms.iter().filter(|a| a.k == k) {
                    for (c, v) in a.field(band).values.iter().enumerate() {
                        sum[c] += v;
                    }
                    for q in &a.cubes {
                        for c in q.cells(n) {
                            hits[c] += 1;
                        }
                    }
                }
            }
            for c in 0..n * n {
                // each cube is classified at one level at most
                assert!(hits[c] <= 1);
                if hits[c] == 1 {
                    assert_eq!(sum[c], band.values[c]);
                }
            }
            let energy: f64 = dec.levels.iter().flat_map(|l| l.atoms.iter()).filter(|a| a.k == k).map(|a| a.l2_sq).sum();
            let total: f64 = band.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * f.cell_volume();
            assert!(energy <= total * (1.0 + 1e-12));
        }
    }

    #[test]
    fn cube_inside_difference_is_classified_there() {
        let n = 16;
        let mut omega = vec![false; n * n];
        for i in 0..8 {
            for j in 0..8 {
                omega[i * n + j] = true;
            }
        }
        let level = LevelSet {
            n: 0,
            omega: omega.clone(),
            omega_star: omega,
            omega_next: vec![false; n * n],
        };
        let fam = classify_cubes(&level, (-2, -2), 0, n);
        assert_eq!(fam[0].cubes, vec![DyadicCube { m: 2, corner: [0, 0] }, DyadicCube { m: 2, corner: [0, 4] }, DyadicCube { m: 2, corner: [4, 0] }, DyadicCube { m: 2, corner: [4, 4] }]);
    }

    /// A square function with narrow peaks, so that the top level sets are small enough for
    /// `Ω_n*` to miss part of the box.
    fn peaked() -> PeetreSquare {
        let n = 256;
        let base = random_band_limited(n, 16.0, 0.5, 8.0, 5).unwrap();
        let peaks = [(40.0, 60.0, 8.0, 1.5), (180.0, 200.0, 3.0, 3.0), (100.0, 150.0, 1.2, 6.0)];
        let wrap = |d: f64| d.abs().min(n as f64 - d.abs());
        let v = (0..n * n)
            .map(|idx| {
                let [i, j] = base.unravel(idx);
                let s: f64 = peaks
                    .iter()
                    .map(|&(pi, pj, a, sig)| {
                        let (di, dj) = (wrap(i as f64 - pi), wrap(j as f64 - pj));
                        a * (-(di * di + dj * dj) / (2.0 * sig * sig)).exp()
                    })
                    .sum();
                Complex64::new(s, 0.0)
            })
            .collect();
        PeetreSquare {
            field: base.same_shape(v),
            k_min: -1,
            k_max: 4,
            truncated: false,
            bands: vec![base; 6],
        }
    }

    #[test]
    fn whitney_geometry_on_small_level_sets() {
        let dec = decompose_square(peaked(), 6).unwrap();
        let n = 256;
        let mut proper = 0;
        for lev in &dec.levels {
            let star = count(&lev.set.omega_star);
            if star < n * n {
                proper += 1;
                assert!(lev.whitney.len() > 1);
                assert!(lev.whitney.iter().any(|q| q.m > 0));
            }
            let mut seen = vec![false; n * n];
            for q in &lev.whitney {
                assert_eq!(q.corner[0] % q.side() + q.corner[1] % q.side(), 0);
                for c in q.cells(n) {
                    assert!(lev.set.omega_star[c]);
                    assert!(!seen[c]);
                    seen[c] = true;
                }
            }
            assert_eq!(lev.unplaced, 0, "n={}", lev.set.n);
            assert_eq!(lev.eroded_uncovered, 0, "n={}", lev.set.n);
            // same-size neighbours alone give 10² overlapping 10-fold dilates
            assert!(lev.overlap <= 2 * OVERLAP_DILATION.pow(2), "{}", lev.overlap);
        }
        assert!(proper >= 1);
        assert!(dec.levels.iter().flat_map(|l| &l.families).any(|f| f.cubes.iter().any(|q| q.m >= 2)));
    }

    #[test]
    fn peetre_lp_ratio_is_stable_under_refinement() {
        use crate::grids_norms::lp_norm;
        use crate::radial_transforms::spectral_upsample;
        for seed in [1, 2] {
            let f = random_band_limited(128, 16.0, 0.0, 8.0, seed).unwrap();
            let g = spectral_upsample(&f, 2).unwrap();
            let ratio = |u: &GridField| lp_norm(&peetre_square(u, (-3, 5)).unwrap().field, 4.0, None) / lp_norm(u, 4.0, None);
            let (a, b) = (ratio(&f), ratio(&g));
            assert!(a > 1.0 && a < 20.0, "{a}");
            assert!((b / a - 1.0).abs() < 0.1, "{a} {b}");
        }
    }

    #[test]
    fn atomic_energy_estimate() {
        let f = sample();
        let dec = decompose(&f, admissible_k_range(&f), 6).unwrap();
        for lev in &dec.levels {
            if lev.measure > 0.0 {
                assert!(lev.ratio <= 16.0, "n={}: {}", lev.set.n, lev.ratio);
            }
        }
        assert!(atoms_csv(&dec.levels[0], dec.cell_log2_inv).starts_with("k,w_level"));
    }

    #[test]
    fn shift_by_coarse_lattice_is_covariant() {
        let f = sample();
        let n = f.n;
        let shift = 16usize;
        let mut v = f.values.clone();
        for idx in 0..v.len() {
            let [i, j] = f.unravel(idx);
            v[f.ravel((i + shift) % n, (j + shift) % n)] = f.values[idx];
        }
        let g = f.same_shape(v);
        let a = decompose(&f, admissible_k_range(&f), 4).unwrap();
        let b = decompose(&g, admissible_k_range(&g), 4).unwrap();
        for (la, lb) in a.levels.iter().zip(&b.levels) {
            assert_eq!(la.set.n, lb.set.n);
            let max_m = la.whitney.iter().chain(la.families.iter().flat_map(|f| f.cubes.iter())).map(|q| q.m).max().unwrap_or(0);
            if (1usize << max_m) > shift {
                continue;
            }
            let moved: std::collections::BTreeSet<DyadicCube> = la
                .whitney
                .iter()
                .map(|q| DyadicCube { m: q.m, corner: [(q.corner[0] + shift) % n, (q.corner[1] + shift) % n] })
                .collect();
            let other: std::collections::BTreeSet<DyadicCube> = lb.whitney.iter().copied().collect();
            assert_eq!(moved, other, "n={}", la.set.n);
        }
    }
}
