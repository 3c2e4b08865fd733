//! Command-line surface: JSON experiment configs, CSV and SVG output, exit codes.
//!
//! Every subcommand reads one [`ExperimentConfig`] and writes one CSV. Exit codes are
//! 0 (ok), 2 (config error), 3 (numerical-validity flag raised) and 64 (usage).

use crate::besov_multipliers::{
    besov_blocks, kernel_side_norm, localized_riesz, log_bump, lq_norm, test_multiplier, KernelGrid, LineSamples, Profile1D, TestMultiplierSpec,
    DEFAULT_LINE_STEP,
};
use crate::decomposition_lab::{admissible_k_range, atoms_csv, decompose, random_band_limited};
use crate::experiments::{
    duality_probe, kernel_decay_experiment, necessity_probe, orthogonality_decay, plancherel_step_check, ConeBump, FitReport, KernelSetup,
    OrthogonalitySetup, PlancherelSetup, ThresholdReport,
};
use crate::grids_norms::{GridField, TGrid};
use crate::maximal_operators::{hl_maximal, riesz_maximal};
use crate::radial_transforms::{grid_fft, radial_fourier_fn, Direction};
use crate::special_functions::script_j_alpha;
use crate::square_functions::{equivalence_probe, g_alpha, gaussian_input, plancherel_ratio, ring_spectrum_input};
use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FLAG: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Config(_) => EXIT_CONFIG,
        }
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_default")]
    pub schema: u32,
    pub experiment: String,
    pub d: usize,
    pub grid: GridConfig,
    pub params: serde_json::Value,
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

fn schema_default() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub extent: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub svg: Option<PathBuf>,
}

/// Parses a config, naming the offending key on failure.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| CliError::Config(format!("at `{}`: {}", e.path(), e.inner())))?;
    if cfg.schema != SCHEMA_VERSION {
        return Err(CliError::Config(format!("at `schema`: version {} is not supported (expected {SCHEMA_VERSION})", cfg.schema)));
    }
    Ok(cfg)
}

fn params<T: DeserializeOwned>(cfg: &ExperimentConfig) -> Result<T, CliError> {
    serde_path_to_error::deserialize(cfg.params.clone()).map_err(|e| {
        let path = e.path().to_string();
        let at = if path == "." { "params".to_string() } else { format!("params.{path}") };
        CliError::Config(format!("at `{at}`: {}", e.inner()))
    })
}

/// `q ∈ [1, ∞]`, written as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(v) => Ok(Exponent(v)),
            Raw::Text(s) if s == "inf" => Ok(Exponent(f64::INFINITY)),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TGridParams {
    pub k_min: i32,
    pub k_max: i32,
    pub nodes: usize,
}

impl Default for TGridParams {
    fn default() -> Self {
        Self { k_min: -6, k_max: 6, nodes: 16 }
    }
}

impl TGridParams {
    fn build(&self) -> Result<TGrid, CliError> {
        TGrid::new(self.k_min, self.k_max, self.nodes).map_err(config_err)
    }
}

/// Test input on the configured grid.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InputSpec {
    Gaussian { sigma: f64 },
    Ring { center: f64, width: f64 },
    /// Seeded random field with spectrum in `lo ≤ |ξ| ≤ hi` (d = 2).
    BandLimited { lo: f64, hi: f64 },
}

impl Default for InputSpec {
    fn default() -> Self {
        Self::Gaussian { sigma: 1.0 }
    }
}

impl InputSpec {
    fn build(&self, cfg: &ExperimentConfig) -> Result<GridField, CliError> {
        let (d, n, l) = (cfg.d, cfg.grid.n, cfg.grid.extent);
        GridField::zeros(d, n, l).map_err(config_err)?;
        match *self {
            Self::Gaussian { sigma } if sigma > 0.0 => Ok(gaussian_input(d, n, l, sigma)),
            Self::Ring { center, width } if center > 0.0 && width > 0.0 => Ok(ring_spectrum_input(d, n, l, center, width)),
            Self::BandLimited { lo, hi } if d == 2 => random_band_limited(n, l, lo, hi, cfg.seed).map_err(config_err),
            other => Err(CliError::Config(format!("at `params.input`: {other:?} is not valid for d = {d}"))),
        }
    }
}

/// One experiment's products.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub csv: String,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
    /// Numerical-validity flags raised during the run.
    pub flags: Vec<String>,
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn fit_csv(x: &str, y: &str, fit: &FitReport) -> String {
    let mut s = format!("{x},{y}\n");
    for &(a, b) in &fit.data {
        row(&mut s, &[num(a), num(b)]);
    }
    for (k, v) in [
        ("slope", fit.slope),
        ("stderr", fit.stderr),
        ("predicted", fit.predicted),
        ("range_lo", fit.range.0),
        ("range_hi", fit.range.1),
    ] {
        row(&mut s, &[k.to_string(), num(v)]);
    }
    s
}

fn fit_flags(fit: &FitReport) -> Vec<String> {
    if fit.inconclusive {
        vec![format!("fit range {:?} is too short to be conclusive", fit.range)]
    } else {
        Vec::new()
    }
}

fn field_csv(f: &GridField, name: &str) -> String {
    let mut s = String::new();
    let mut x = vec![0.0; f.dim];
    match f.dim {
        1 => row(&mut s, &["x1".into(), name.into()]),
        _ => row(&mut s, &["x1".into(), "x2".into(), name.into()]),
    }
    for idx in 0..f.len() {
        f.position_into(idx, &mut x);
        let mut cells: Vec<String> = x.iter().map(|&v| num(v)).collect();
        cells.push(num(f.values[idx].re));
        row(&mut s, &cells);
    }
    s
}

/// `(x, value)` along the positive first axis through the origin.
fn axis_ray(f: &GridField) -> Vec<(f64, f64)> {
    let n = f.n;
    (n / 2 + 1..n)
        .map(|i| {
            let idx = if f.dim == 1 { i } else { f.ravel(i, n / 2) };
            (f.coordinate(i), f.values[idx].norm())
        })
        .collect()
}

fn threshold_rows(s: &mut String, rep: &ThresholdReport, extra: usize) {
    let pad = vec![String::new(); extra];
    let mut cells = vec!["crossing".to_string(), rep.crossing.map(num).unwrap_or_default(), num(rep.predicted)];
    cells.extend(pad);
    row(s, &cells);
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BesselParams {
    alpha: f64,
    s_min: f64,
    s_max: f64,
    count: usize,
}

impl Default for BesselParams {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            s_min: 0.0,
            s_max: 50.0,
            count: 201,
        }
    }
}

fn bessel_table(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: BesselParams = params(cfg)?;
    if p.count < 2 || !(p.s_max > p.s_min) {
        return Err(CliError::Config("at `params`: need count ≥ 2 and s_max > s_min".into()));
    }
    let mut csv = String::from("s,script_j_alpha\n");
    let mut pts = Vec::new();
    for i in 0..p.count {
        let s = p.s_min + (p.s_max - p.s_min) * i as f64 / (p.count - 1) as f64;
        let v = script_j_alpha(cfg.d, p.alpha, s).map_err(config_err)?;
        row(&mut csv, &[num(s), num(v)]);
        pts.push((s, v.abs()));
    }
    Ok(Outcome {
        csv,
        series: vec![("|J_alpha|".into(), pts)],
        flags: Vec::new(),
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TransformParams {
    sigma: f64,
    samples: usize,
    tolerance: f64,
}

impl Default for TransformParams {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            samples: 40,
            tolerance: 1e-5,
        }
    }
}

/// Gaussian transformed by the grid FFT and by the radial engine along one ray.
fn transform(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: TransformParams = params(cfg)?;
    if !(p.sigma > 0.0) || cfg.d > 2 {
        return Err(CliError::Config("at `params.sigma`: need σ > 0 and d ∈ {1, 2}".into()));
    }
    let s2 = p.sigma * p.sigma;
    let f = GridField::from_real_fn(cfg.d, cfg.grid.n, cfg.grid.extent, |x| (-x.iter().map(|v| v * v).sum::<f64>() / (2.0 * s2)).exp()).map_err(config_err)?;
    let fh = grid_fft(&f, Direction::Forward);
    let n = fh.n;
    let count = p.samples.min(n / 2);
    let ray: Vec<usize> = (0..count).map(|k| if cfg.d == 1 { n / 2 + k } else { fh.ravel(n / 2, n / 2 + k) }).collect();
    let out: Vec<f64> = ray.iter().map(|&i| fh.radius(i)).collect();
    let (radial, reliable) = radial_fourier_fn(cfg.d, |r| Complex64::new((-r * r / (2.0 * s2)).exp(), 0.0), &[], 15.0 * p.sigma, &out);
    let mut csv = String::from("rho,grid_fft,radial,abs_diff\n");
    let mut worst: f64 = 0.0;
    let mut pts = Vec::new();
    for ((&i, &rho), z) in ray.iter().zip(&out).zip(&radial) {
        let diff = (fh.values[i] - z).norm();
        worst = worst.max(diff);
        row(&mut csv, &[num(rho), num(fh.values[i].re), num(z.re), num(diff)]);
        pts.push((rho, z.norm()));
    }
    let mut flags = Vec::new();
    if worst > p.tolerance {
        flags.push(format!("grid and radial transforms differ by {worst:e}"));
    }
    if reliable.iter().any(|&b| !b) {
        flags.push("radial transform unreliable at some frequencies".into());
    }
    Ok(Outcome {
        csv,
        series: vec![("radial".into(), pts)],
        flags,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SquareParams {
    alpha: f64,
    input: InputSpec,
    tgrid: TGridParams,
}

impl Default for SquareParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            input: InputSpec::default(),
            tgrid: TGridParams::default(),
        }
    }
}

fn squarefn(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: SquareParams = params(cfg)?;
    let f = p.input.build(cfg)?;
    let res = g_alpha(&f, p.alpha, &p.tgrid.build()?).map_err(config_err)?;
    let mut csv = field_csv(&res.field, "G_alpha");
    let ratio = plancherel_ratio(&f, &res);
    let mut cells = vec!["l2_ratio".to_string()];
    cells.extend(std::iter::repeat(String::new()).take(f.dim - 1));
    cells.push(num(ratio));
    row(&mut csv, &cells);
    let mut flags = Vec::new();
    if !res.convergence_flag {
        flags.push(format!("t-grid captures only {} of the spectrum", res.capture_ratio));
    }
    Ok(Outcome {
        csv,
        series: vec![("G_alpha".into(), axis_ray(&res.field))],
        flags,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EquivParams {
    alpha: f64,
    input: InputSpec,
    floor: f64,
    tgrid: TGridParams,
    max_spread: f64,
    stability: f64,
}

impl Default for EquivParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            input: InputSpec::default(),
            floor: 1e-2,
            tgrid: TGridParams { nodes: 128, ..TGridParams::default() },
            max_spread: 10.0,
            stability: 0.05,
        }
    }
}

fn equiv_probe(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: EquivParams = params(cfg)?;
    let f = p.input.build(cfg)?;
    let base = p.tgrid.build()?;
    let mut csv = String::from("nodes_per_block,ratio_min,ratio_max,spread,admissible\n");
    let mut spreads = Vec::new();
    for grid in [base.clone(), base.refined()] {
        let probe = equivalence_probe(&f, p.alpha, p.floor, &grid).map_err(config_err)?;
        row(
            &mut csv,
            &[grid.nodes_per_block.to_string(), num(probe.ratio_min), num(probe.ratio_max), num(probe.spread()), probe.admissible.to_string()],
        );
        spreads.push((grid.nodes_per_block as f64, probe.spread()));
    }
    let mut flags = Vec::new();
    if spreads[0].1 > p.max_spread {
        flags.push(format!("ratio spread {} exceeds {}", spreads[0].1, p.max_spread));
    }
    if (spreads[1].1 / spreads[0].1 - 1.0).abs() > p.stability {
        flags.push(format!("spread moved from {} to {} under refinement", spreads[0].1, spreads[1].1));
    }
    Ok(Outcome {
        csv,
        series: vec![("spread".into(), spreads)],
        flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum MaximalKind {
    BochnerRiesz,
    HardyLittlewood,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MaximalParams {
    operator: MaximalKind,
    lambda: f64,
    input: InputSpec,
    tgrid: TGridParams,
}

impl Default for MaximalParams {
    fn default() -> Self {
        Self {
            operator: MaximalKind::BochnerRiesz,
            lambda: 1.0,
            input: InputSpec::default(),
            tgrid: TGridParams::default(),
        }
    }
}

fn maximal(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: MaximalParams = params(cfg)?;
    let f = p.input.build(cfg)?;
    let (field, flags) = match p.operator {
        MaximalKind::BochnerRiesz => {
            let res = riesz_maximal(&f, p.lambda, &p.tgrid.build()?).map_err(config_err)?;
            let flags = if res.monotone_flag {
                Vec::new()
            } else {
                vec!["supremum still grows under t-grid refinement".to_string()]
            };
            (res.field, flags)
        }
        MaximalKind::HardyLittlewood => (hl_maximal(&f), Vec::new()),
    };
    Ok(Outcome {
        csv: field_csv(&field, "maximal"),
        series: vec![("maximal".into(), axis_ray(&field))],
        flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum ProfileSpec {
    LogBump { lo: f64, hi: f64 },
    LocalizedRiesz { lambda: f64 },
}

impl ProfileSpec {
    fn build(&self) -> Result<Profile1D, CliError> {
        match *self {
            Self::LogBump { lo, hi } => log_bump(lo, hi),
            Self::LocalizedRiesz { lambda } => localized_riesz(lambda),
        }
        .map_err(config_err)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BesovParams {
    profile: ProfileSpec,
    alpha: f64,
    q: Exponent,
    step: f64,
    kernel_side: bool,
}

impl Default for BesovParams {
    fn default() -> Self {
        Self {
            profile: ProfileSpec::LogBump { lo: 0.6, hi: 1.8 },
            alpha: 1.0,
            q: Exponent(2.0),
            step: DEFAULT_LINE_STEP,
            kernel_side: false,
        }
    }
}

fn blocks_csv(samples: &LineSamples, alpha: f64, q: f64) -> Result<(String, Vec<(f64, f64)>, f64), CliError> {
    let blocks = besov_blocks(samples);
    let weighted = blocks.weighted(alpha);
    let norm = blocks.norm(alpha, q).map_err(config_err)?;
    let mut csv = String::from("j,block_l2,weighted\n");
    let mut pts = Vec::new();
    for (j, (b, w)) in blocks.norms.iter().zip(&weighted).enumerate() {
        row(&mut csv, &[j.to_string(), num(*b), num(*w)]);
        pts.push((2f64.powi(j as i32), *w));
    }
    row(&mut csv, &["besov_norm".into(), String::new(), num(norm)]);
    Ok((csv, pts, norm))
}

fn besov_norm_cmd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: BesovParams = params(cfg)?;
    let profile = p.profile.build()?;
    let samples = LineSamples::from_profile(&profile, p.step).map_err(config_err)?;
    let (mut csv, pts, _) = blocks_csv(&samples, p.alpha, p.q.0)?;
    let mut flags = Vec::new();
    if p.kernel_side {
        let ks = kernel_side_norm(&profile, p.alpha, p.q.0, cfg.d, &KernelGrid::default()).map_err(config_err)?;
        row(&mut csv, &["kernel_side_norm".into(), String::new(), num(ks.value)]);
        if !ks.resolved {
            flags.push("kernel-side block sum not resolved".into());
        }
    }
    Ok(Outcome {
        csv,
        series: vec![("weighted blocks".into(), pts)],
        flags,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TestMultiplierParams {
    p: f64,
    coefficients: Vec<f64>,
    q: Exponent,
}

impl Default for TestMultiplierParams {
    fn default() -> Self {
        Self {
            p: 4.0 / 3.0,
            coefficients: (1..=5).map(|j| 2f64.powf(-(j as f64) / 2.0)).collect(),
            q: Exponent(2.0),
        }
    }
}

fn test_multiplier_cmd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: TestMultiplierParams = params(cfg)?;
    let spec = TestMultiplierSpec {
        d: cfg.d,
        p: p.p,
        coefficients: p.coefficients.clone(),
    };
    let m = test_multiplier(&spec).map_err(config_err)?;
    let (_, pts, norm) = blocks_csv(&m, spec.alpha(), p.q.0)?;
    let mut csv = String::from("rho,m\n");
    for (k, v) in m.values.iter().enumerate() {
        row(&mut csv, &[num(m.start + k as f64 * m.step), num(*v)]);
    }
    row(&mut csv, &["besov_norm".into(), num(norm)]);
    row(&mut csv, &["coefficient_lq_norm".into(), num(lq_norm(&p.coefficients, p.q.0))]);
    Ok(Outcome {
        csv,
        series: vec![("weighted blocks".into(), pts)],
        flags: Vec::new(),
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AtomsParams {
    lo: f64,
    hi: f64,
    levels: usize,
    k_min: Option<i32>,
    k_max: Option<i32>,
    bound: f64,
}

impl Default for AtomsParams {
    fn default() -> Self {
        Self {
            lo: 0.5,
            hi: 6.0,
            levels: 6,
            k_min: None,
            k_max: None,
            bound: 16.0,
        }
    }
}

fn atoms(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: AtomsParams = params(cfg)?;
    if cfg.d != 2 {
        return Err(CliError::Config(format!("at `d`: atoms need d = 2, got {}", cfg.d)));
    }
    let f = random_band_limited(cfg.grid.n, cfg.grid.extent, p.lo, p.hi, cfg.seed).map_err(config_err)?;
    let (k0, k1) = admissible_k_range(&f);
    let range = (p.k_min.unwrap_or(k0), p.k_max.unwrap_or(k1));
    let dec = decompose(&f, range, p.levels).map_err(config_err)?;
    let mut csv = String::from("n,k,w_level,w_row,w_col,atom_l2_sq\n");
    let mut flags = Vec::new();
    let mut pts = Vec::new();
    for lev in &dec.levels {
        for line in atoms_csv(lev, dec.cell_log2_inv).lines().skip(1) {
            let _ = writeln!(csv, "{},{line}", lev.set.n);
        }
        if lev.measure > 0.0 {
            pts.push((2f64.powi(lev.set.n), lev.ratio));
            if lev.ratio > p.bound {
                flags.push(format!("level {}: energy ratio {} exceeds {}", lev.set.n, lev.ratio, p.bound));
            }
        }
        if lev.unplaced > 0 {
            flags.push(format!("level {}: {} cubes not inside a single Whitney cube", lev.set.n, lev.unplaced));
        }
    }
    Ok(Outcome {
        csv,
        series: vec![("energy ratio".into(), pts)],
        flags,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct KernelParams {
    alpha: f64,
    r_lo: f64,
    r_hi: f64,
    rings: usize,
    t_nodes: usize,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            r_lo: 16.0,
            r_hi: 512.0,
            rings: 20,
            t_nodes: 24,
        }
    }
}

fn kernel_setup(cfg: &ExperimentConfig, t_nodes: usize) -> Result<KernelSetup, CliError> {
    if cfg.d != 2 {
        return Err(CliError::Config(format!("at `d`: kernel experiments need d = 2, got {}", cfg.d)));
    }
    Ok(KernelSetup {
        n: cfg.grid.n,
        extent: cfg.grid.extent,
        t_nodes,
        eta: ConeBump::default(),
    })
}

fn kernel_decay(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: KernelParams = params(cfg)?;
    let setup = kernel_setup(cfg, p.t_nodes)?;
    let fit = kernel_decay_experiment(&setup, p.alpha, p.r_lo, p.r_hi, p.rings).map_err(config_err)?;
    Ok(Outcome {
        csv: fit_csv("r", "square_integrand", &fit),
        series: vec![("ring mean".into(), fit.data.clone())],
        flags: fit_flags(&fit),
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct NecessityParams {
    p: f64,
    alphas: Vec<f64>,
    r_lo: f64,
    r_hi: f64,
    rings: usize,
    t_nodes: usize,
}

impl Default for NecessityParams {
    fn default() -> Self {
        Self {
            p: 4.0 / 3.0,
            alphas: vec![0.75, 1.0, 1.25],
            r_lo: 16.0,
            r_hi: 512.0,
            rings: 20,
            t_nodes: 24,
        }
    }
}

fn threshold_flags(rep: &ThresholdReport) -> Vec<String> {
    let mut flags = Vec::new();
    if rep.inconclusive {
        flags.push("ring range too short for a conclusive fit".into());
    }
    if rep.crossing.is_none() {
        flags.push("growth exponents do not cross zero".into());
    }
    flags
}

fn necessity(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: NecessityParams = params(cfg)?;
    let setup = kernel_setup(cfg, p.t_nodes)?;
    let rep = necessity_probe(&setup, p.p, &p.alphas, p.r_lo, p.r_hi, p.rings).map_err(config_err)?;
    let mut csv = String::from("alpha,decay_slope,growth\n");
    for &(a, s, g) in &rep.rows {
        row(&mut csv, &[num(a), num(s), num(g)]);
    }
    threshold_rows(&mut csv, &rep, 0);
    Ok(Outcome {
        csv,
        series: Vec::new(),
        flags: threshold_flags(&rep),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum WeightSpec {
    Constant,
    /// `b(t) = e^{i·frequency·t}`.
    Oscillating { frequency: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DualityParams {
    p: f64,
    alphas: Vec<f64>,
    b: WeightSpec,
    r_lo: f64,
    r_hi: f64,
    rings: usize,
    t_nodes: usize,
}

impl Default for DualityParams {
    fn default() -> Self {
        Self {
            p: 6.0,
            alphas: vec![0.6, 0.75, 0.9],
            b: WeightSpec::Constant,
            r_lo: 16.0,
            r_hi: 512.0,
            rings: 20,
            t_nodes: 24,
        }
    }
}

fn duality(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: DualityParams = params(cfg)?;
    let setup = kernel_setup(cfg, p.t_nodes)?;
    let freq = match p.b {
        WeightSpec::Constant => 0.0,
        WeightSpec::Oscillating { frequency } => frequency,
    };
    let rep = duality_probe(&setup, p.p, move |t| Complex64::from_polar(1.0, freq * t), &p.alphas, p.r_lo, p.r_hi, p.rings).map_err(config_err)?;
    let mut csv = String::from("alpha,decay_slope,growth,direct_growth\n");
    for (&(a, s, g), &(_, direct)) in rep.threshold.rows.iter().zip(&rep.direct) {
        row(&mut csv, &[num(a), num(s), num(g), num(direct)]);
    }
    threshold_rows(&mut csv, &rep.threshold, 1);
    Ok(Outcome {
        csv,
        series: Vec::new(),
        flags: threshold_flags(&rep.threshold),
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OrthogonalityParams {
    m_lo: f64,
    m_hi: f64,
    count: usize,
    psi_radius: f64,
    bump_radius: f64,
    t1: f64,
    t2: f64,
}

impl Default for OrthogonalityParams {
    fn default() -> Self {
        let s = OrthogonalitySetup::default();
        Self {
            m_lo: 8.0,
            m_hi: 128.0,
            count: 9,
            psi_radius: s.psi_radius,
            bump_radius: s.bump_radius,
            t1: s.t.0,
            t2: s.t.1,
        }
    }
}

fn orthogonality(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: OrthogonalityParams = params(cfg)?;
    let setup = OrthogonalitySetup {
        d: cfg.d,
        psi_radius: p.psi_radius,
        bump_radius: p.bump_radius,
        t: (p.t1, p.t2),
        masses: (1.0, 1.0),
    };
    let fit = orthogonality_decay(&setup, p.m_lo, p.m_hi, p.count).map_err(config_err)?;
    Ok(Outcome {
        csv: fit_csv("M", "inner_product", &fit),
        series: vec![("|inner product|".into(), fit.data.clone())],
        flags: fit_flags(&fit),
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PlancherelParams {
    js: Vec<u32>,
    ts: Vec<f64>,
    samples: usize,
    cell: f64,
    psi_radius: f64,
}

impl Default for PlancherelParams {
    fn default() -> Self {
        Self {
            js: vec![3, 4, 5, 6, 7],
            ts: vec![1.0, 1.5, 2.0],
            samples: 100,
            cell: 0.5,
            psi_radius: 1.0,
        }
    }
}

fn plancherel_step(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: PlancherelParams = params(cfg)?;
    if !(p.cell > 0.0) || p.samples == 0 {
        return Err(CliError::Config("at `params`: need cell > 0 and samples ≥ 1".into()));
    }
    let setup = PlancherelSetup {
        d: cfg.d,
        psi_radius: p.psi_radius,
        cell: p.cell,
    };
    let rep = plancherel_step_check(&setup, &p.js, &p.ts, p.samples, cfg.seed).map_err(config_err)?;
    let mut csv = String::from("j,t,max_ratio,spike_ratio\n");
    for r in &rep.rows {
        row(&mut csv, &[r.j.to_string(), num(r.t), num(r.max_ratio), num(r.spike_ratio)]);
    }
    row(&mut csv, &["spread".into(), num(rep.spread), String::new(), String::new()]);
    row(&mut csv, &["max_deviation".into(), num(rep.max_deviation()), String::new(), String::new()]);
    let mut flags = Vec::new();
    if rep.truncated {
        flags.push("blocks above the resolved range were dropped".into());
    }
    Ok(Outcome {
        csv,
        series: vec![("max ratio".into(), rep.per_j.iter().map(|&(j, v)| (2f64.powi(j as i32), v)).collect())],
        flags,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Tabulate the radial Bessel kernel 𝒥_α.
    BesselTable(RunArgs),
    /// Compare the grid FFT and the radial Hankel engine on a Gaussian.
    Transform(RunArgs),
    /// Evaluate G_α f on the grid with its L² ratio.
    Squarefn(RunArgs),
    /// Pointwise ratio of G_α f and the spherical-mean square function.
    EquivProbe(RunArgs),
    /// Bochner–Riesz or Hardy–Littlewood maximal function.
    Maximal(RunArgs),
    /// Besov blocks and norm of a radial profile.
    BesovNorm(RunArgs),
    /// Bochner–Riesz type test multiplier and its Besov norm.
    TestMultiplier(RunArgs),
    /// Atomic decomposition of a seeded random input.
    Atoms(RunArgs),
    /// Radial decay of the square-function integrand.
    KernelDecay(RunArgs),
    /// Necessity threshold for p < 2.
    Necessity(RunArgs),
    /// Duality threshold for p > 2.
    Duality(RunArgs),
    /// Decay of separated inner products.
    Orthogonality(RunArgs),
    /// Constant of the fixed-x Plancherel step.
    PlancherelStep(RunArgs),
}

#[derive(Debug, Clone, PartialEq, Eq, clap::Args)]
pub struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Also write an SVG log–log plot here.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "radmult", version, about = "Radial multiplier and square-function experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::BesselTable(_) => "bessel-table",
            Self::Transform(_) => "transform",
            Self::Squarefn(_) => "squarefn",
            Self::EquivProbe(_) => "equiv-probe",
            Self::Maximal(_) => "maximal",
            Self::BesovNorm(_) => "besov-norm",
            Self::TestMultiplier(_) => "test-multiplier",
            Self::Atoms(_) => "atoms",
            Self::KernelDecay(_) => "kernel-decay",
            Self::Necessity(_) => "necessity",
            Self::Duality(_) => "duality",
            Self::Orthogonality(_) => "orthogonality",
            Self::PlancherelStep(_) => "plancherel-step",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Self::BesselTable(a)
            | Self::Transform(a)
            | Self::Squarefn(a)
            | Self::EquivProbe(a)
            | Self::Maximal(a)
            | Self::BesovNorm(a)
            | Self::TestMultiplier(a)
            | Self::Atoms(a)
            | Self::KernelDecay(a)
            | Self::Necessity(a)
            | Self::Duality(a)
            | Self::Orthogonality(a)
            | Self::PlancherelStep(a) => a,
        }
    }
}

/// Runs the experiment named by `cfg.experiment`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let run: fn(&ExperimentConfig) -> Result<Outcome, CliError> = match cfg.experiment.as_str() {
        "bessel-table" => bessel_table,
        "transform" => transform,
        "squarefn" => squarefn,
        "equiv-probe" => equiv_probe,
        "maximal" => maximal,
        "besov-norm" => besov_norm_cmd,
        "test-multiplier" => test_multiplier_cmd,
        "atoms" => atoms,
        "kernel-decay" => kernel_decay,
        "necessity" => necessity,
        "duality" => duality,
        "orthogonality" => orthogonality,
        "plancherel-step" => plancherel_step,
        other => return Err(CliError::Config(format!("at `experiment`: unknown experiment {other:?}"))),
    };
    run(cfg)
}

/// Log–log polyline chart of positive data.
pub fn svg_loglog(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 50.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|(_, s)| s.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0 && p.1.is_finite()).map(|p| (p.0.log10(), p.1.log10())).collect())
        .collect();
    let all: Vec<&(f64, f64)> = pts.iter().flatten().collect();
    let mut svg = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n");
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(svg, "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>", W / 2.0, xml_escape(title));
    if all.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &&(x, y) in &all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let _ = writeln!(svg, "<rect x=\"{M}\" y=\"{M}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>", W - 2.0 * M, H - 2.0 * M);
    for e in (x0 as i32)..=(x1 as i32) {
        let x = sx(e as f64);
        let _ = writeln!(svg, "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#ddd\"/>", M, H - M);
        let _ = writeln!(svg, "<text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">1e{e}</text>", H - M + 16.0);
    }
    for e in (y0 as i32)..=(y1 as i32) {
        let y = sy(e as f64);
        let _ = writeln!(svg, "<line x1=\"{M}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>", W - M);
        let _ = writeln!(svg, "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\">1e{e}</text>", M - 4.0, y + 4.0);
    }
    for (k, ((name, _), p)) in series.iter().zip(&pts).enumerate() {
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(svg, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>", coords.join(" "));
        let _ = writeln!(svg, "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{}</text>", M + 8.0, M + 14.0 * (k as f64 + 1.0), xml_escape(name));
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn execute(command: &Command) -> Result<Vec<String>, CliError> {
    let args = command.args();
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = parse_config(&text)?;
    if cfg.experiment != command.name() {
        return Err(CliError::Config(format!(
            "at `experiment`: config is for {:?} but the subcommand is {}",
            cfg.experiment,
            command.name()
        )));
    }
    let outcome = run_experiment(&cfg)?;
    match &cfg.output.csv {
        Some(path) => write_file(path, &outcome.csv)?,
        None => print!("{}", outcome.csv),
    }
    for path in args.plot.iter().chain(cfg.output.svg.iter()) {
        write_file(path, &svg_loglog(command.name(), &outcome.series))?;
    }
    Ok(outcome.flags)
}

/// Parses `argv` (program name first), runs one experiment and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(&cli.command) {
        Ok(flags) if flags.is_empty() => EXIT_OK,
        Ok(flags) => {
            for f in flags {
                eprintln!("flag: {f}");
            }
            EXIT_FLAG
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        parse_config(text).unwrap()
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse_config(r#"{"experiment":"squarefn","d":2,"grid":{"n":8,"L":4},"params":{},"output":{},"sede":1}"#).unwrap_err();
        assert!(err.to_string().contains("sede"), "{err}");
        let err = parse_config(r#"{"experiment":"squarefn","d":2,"grid":{"n":8,"L":4,"h":1},"params":{},"output":{}}"#).unwrap_err();
        assert!(err.to_string().contains("grid"), "{err}");
        let c = cfg(r#"{"experiment":"squarefn","d":2,"grid":{"n":8,"L":4},"params":{"alpha":1,"tgird":{}},"output":{}}"#);
        let err = run_experiment(&c).unwrap_err();
        assert!(err.to_string().contains("params") && err.to_string().contains("tgird"), "{err}");
        assert_eq!(err.exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn missing_keys_and_bad_schema() {
        assert!(parse_config(r#"{"experiment":"squarefn","d":2,"params":{},"output":{}}"#).unwrap_err().to_string().contains("grid"));
        assert!(parse_config(r#"{"schema":9,"experiment":"squarefn","d":2,"grid":{"n":8,"L":4},"params":{},"output":{}}"#).is_err());
        assert!(parse_config("{not json").is_err());
    }

    #[test]
    fn exponent_accepts_inf() {
        let q: Exponent = serde_json::from_str("\"inf\"").unwrap();
        assert!(q.0.is_infinite());
        let q: Exponent = serde_json::from_str("2.5").unwrap();
        assert_eq!(q.0, 2.5);
        assert!(serde_json::from_str::<Exponent>("\"huge\"").is_err());
    }

    #[test]
    fn squarefn_summary_row_carries_plancherel_ratio() {
        let c = cfg(r#"{"experiment":"squarefn","d":2,"grid":{"n":256,"L":64},"params":{"alpha":1,"input":{"kind":"gaussian","sigma":1}},"output":{}}"#);
        let out = run_experiment(&c).unwrap();
        let last = out.csv.lines().last().unwrap();
        let ratio: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
        assert!(last.starts_with("l2_ratio,"));
        assert!((ratio - 0.25).abs() < 0.0025, "{ratio}");
        assert!(out.csv.starts_with("x1,x2,G_alpha\n"));
        assert!(!out.csv.contains('\r'));
    }

    #[test]
    fn bessel_table_matches_library() {
        let c = cfg(r#"{"experiment":"bessel-table","d":3,"grid":{"n":8,"L":4},"params":{"s_max":10,"count":11},"output":{}}"#);
        let out = run_experiment(&c).unwrap();
        let line = out.csv.lines().nth(4).unwrap();
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, script_j_alpha(3, 0.0, 3.0).unwrap());
    }

    #[test]
    fn transform_engines_agree() {
        let c = cfg(r#"{"experiment":"transform","d":2,"grid":{"n":256,"L":32},"params":{"sigma":0.8},"output":{}}"#);
        let out = run_experiment(&c).unwrap();
        assert!(out.flags.is_empty(), "{:?}", out.flags);
    }

    #[test]
    fn svg_is_deterministic_and_well_formed() {
        let s = vec![("a".to_string(), vec![(1.0, 1.0), (10.0, 0.1), (100.0, 0.01)])];
        let a = svg_loglog("t<1>", &s);
        assert_eq!(a, svg_loglog("t<1>", &s));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n") && a.contains("polyline") && a.contains("t&lt;1&gt;"));
        assert!(svg_loglog("empty", &[]).contains("</svg>"));
    }

    #[test]
    fn usage_errors_exit_64() {
        assert_eq!(cli_main(["radmult", "frobnicate"]), EXIT_USAGE);
        assert_eq!(cli_main(["radmult", "squarefn"]), EXIT_USAGE);
        assert_eq!(cli_main(["radmult"]), EXIT_USAGE);
    }

    #[test]
    fn config_errors_exit_2() {
        let dir = std::env::temp_dir().join(format!("radmult-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.json");
        std::fs::write(&path, "{\"experiment\": \"squarefn\", ").unwrap();
        assert_eq!(cli_main(["radmult", "squarefn", "--config", path.to_str().unwrap()]), EXIT_CONFIG);
        std::fs::write(&path, r#"{"experiment":"atoms","d":2,"grid":{"n":8,"L":4},"params":{},"output":{}}"#).unwrap();
        assert_eq!(cli_main(["radmult", "squarefn", "--config", path.to_str().unwrap()]), EXIT_CONFIG);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn plancherel_truncation_raises_flag() {
        let c = cfg(r#"{"experiment":"plancherel-step","d":2,"grid":{"n":8,"L":4},"params":{"js":[3,9],"ts":[1.0],"samples":2},"output":{}}"#);
        let out = run_experiment(&c).unwrap();
        assert_eq!(out.flags.len(), 1);
        assert!(out.csv.starts_with("j,t,max_ratio,spike_ratio\n"));
    }
}
