//! Bessel functions `J_ν`, the radial kernels `𝒥` and `𝒥_α`, their large-argument
//! expansions, and Gamma helpers.
//!
//! Conventions: `𝒥(s) = c(d) s^{-(d-2)/2} J_{(d-2)/2}(s)` is the Fourier transform of
//! surface measure on the unit sphere under the `e^{-i<x,ξ>}` convention, so
//! `𝒥(0) = |S^{d-1}|`. `𝒥_α(s) = s^{-ν} J_ν(s)` with `ν = (d-2)/2 + α` is kept free of
//! constants; operators that consume it carry their own normalisation.

use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecialError {
    #[error("{op}: argument out of domain ({detail})")]
    Domain { op: &'static str, detail: String },
}

fn domain(op: &'static str, detail: impl Into<String>) -> SpecialError {
    SpecialError::Domain {
        op,
        detail: detail.into(),
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(x: f64) -> f64 {
    // x is the shifted argument (z - 1).
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    acc
}

/// Γ(x) for x > 0 (Lanczos, g = 7, n = 9; reflection below 1/2).
pub fn gamma_fn(x: f64) -> Result<f64, SpecialError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("gamma_fn", format!("x = {x} must be positive and finite")));
    }
    Ok(gamma_pos(x))
}

fn gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_pos(1.0 - x));
    }
    if x == x.floor() && x <= 23.0 {
        let mut f = 1.0;
        let mut k = 2.0;
        while k < x {
            f *= k;
            k += 1.0;
        }
        return f;
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    // split the power so that t^{z+1/2} does not overflow before e^{-t} is applied
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half * (-t).exp() * half * lanczos_sum(z)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64, SpecialError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("ln_gamma", format!("x = {x} must be positive and finite")));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma_pos(1.0 - x);
    }
    if x < 20.0 {
        return gamma_pos(x).ln();
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

/// B(a, b) = Γ(a)Γ(b)/Γ(a+b).
pub fn beta_fn(a: f64, b: f64) -> Result<f64, SpecialError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(domain("beta_fn", format!("a = {a}, b = {b} must be positive")));
    }
    Ok((ln_gamma_pos(a) + ln_gamma_pos(b) - ln_gamma_pos(a + b)).exp())
}

/// Surface area of the unit sphere S^{d-1}.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / gamma_pos(h)
}

/// Parameters of a radial Bessel kernel `𝒥_α` in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselKernelParams {
    pub d: usize,
    pub alpha: f64,
    pub regime_cut: f64,
}

impl BesselKernelParams {
    pub fn new(d: usize, alpha: f64) -> Result<Self, SpecialError> {
        let nu = kernel_order(d, alpha)?;
        Ok(Self {
            d,
            alpha,
            regime_cut: default_regime_cut(nu),
        })
    }

    pub fn with_regime_cut(self, cut: f64) -> Result<Self, SpecialError> {
        let nu = self.nu();
        if !(cut >= default_regime_cut(nu)) {
            return Err(domain(
                "BesselKernelParams",
                format!("regime_cut {cut} below max(12, 2ν) = {}", default_regime_cut(nu)),
            ));
        }
        Ok(Self {
            regime_cut: cut,
            ..self
        })
    }

    pub fn nu(&self) -> f64 {
        (self.d as f64 - 2.0) / 2.0 + self.alpha
    }

    /// `𝒥_α(s) = s^{-ν} J_ν(s)`.
    pub fn eval(&self, s: f64) -> f64 {
        scaled_bessel(self.nu(), s.abs(), self.regime_cut)
    }
}

fn kernel_order(d: usize, alpha: f64) -> Result<f64, SpecialError> {
    if d == 0 {
        return Err(domain("kernel", "dimension must be at least 1"));
    }
    let nu = (d as f64 - 2.0) / 2.0 + alpha;
    if !(nu >= -1e-14) {
        return Err(domain("kernel", format!("ν = (d-2)/2 + α = {nu} is negative")));
    }
    Ok(nu.max(0.0))
}

fn default_regime_cut(nu: f64) -> f64 {
    12.0_f64.max(2.0 * nu)
}

/// J_ν(s) for ν ≥ 0, s ≥ 0.
pub fn bessel_j(nu: f64, s: f64) -> Result<f64, SpecialError> {
    if !(nu >= 0.0) {
        return Err(domain("bessel_j", format!("order ν = {nu} is negative")));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(domain("bessel_j", format!("argument s = {s} must be finite and ≥ 0")));
    }
    Ok(bessel_j_unchecked(nu, s, default_regime_cut(nu)))
}

/// Power series is trusted when its terms cancel by less than this factor.
const SERIES_CANCEL_MAX: f64 = 1e3;

pub(crate) fn bessel_j_unchecked(nu: f64, s: f64, cut: f64) -> f64 {
    if s == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if let Some(core) = series_if_stable(nu, s, cut) {
        let lead = if nu == 0.0 { 1.0 } else { (nu * (0.5 * s).ln()).exp() };
        return lead * core;
    }
    large_argument(nu, s)
}

fn large_argument(nu: f64, s: f64) -> f64 {
    hankel(nu, s).unwrap_or_else(|| miller(nu, s))
}

fn series_if_stable(nu: f64, s: f64, cut: f64) -> Option<f64> {
    if s > cut.max(12.0) {
        return None;
    }
    let (sum, abs_sum) = series_scaled_core(nu, s);
    (abs_sum <= SERIES_CANCEL_MAX * sum.abs()).then_some(sum)
}

/// Σ_k (-1)^k (s/2)^{2k} / (k! Γ(ν+k+1)), i.e. (s/2)^{-ν} J_ν(s), with Σ|terms|.
fn series_scaled_core(nu: f64, s: f64) -> (f64, f64) {
    let q = 0.25 * s * s;
    let mut term = if nu < 30.0 {
        1.0 / gamma_pos(nu + 1.0)
    } else {
        (-ln_gamma_pos(nu + 1.0)).exp()
    };
    let mut acc = CompensatedSum::new();
    let mut abs = term.abs();
    acc.add(term);
    let mut k = 1.0;
    loop {
        term *= -q / (k * (k + nu));
        acc.add(term);
        abs += term.abs();
        if term.abs() <= 1e-18 * abs && k * (k + nu) > q {
            break;
        }
        if k > 400.0 {
            break;
        }
        k += 1.0;
    }
    (acc.value(), abs)
}

/// Hankel large-argument expansion; `None` when it cannot reach double precision.
fn hankel(nu: f64, s: f64) -> Option<f64> {
    let mu = 4.0 * nu * nu;
    let mut p = CompensatedSum::new();
    let mut q = CompensatedSum::new();
    let mut a = 1.0; // a_k / s^k with sign folded in below
    p.add(1.0);
    let mut prev = 1.0_f64;
    let mut k = 0usize;
    loop {
        let kk = (k + 1) as f64;
        let odd = (2 * k + 1) as f64;
        a *= (mu - odd * odd) / (kk * 8.0 * s);
        let mag = a.abs();
        if mag == 0.0 {
            break;
        }
        if mag > prev && k > 0 {
            return None;
        }
        let idx = k + 1;
        // P collects even indices, Q odd; signs alternate within each.
        if idx % 2 == 0 {
            let sign = if (idx / 2) % 2 == 0 { 1.0 } else { -1.0 };
            p.add(sign * a);
        } else {
            let sign = if ((idx - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            q.add(sign * a);
        }
        if mag < 1e-17 {
            break;
        }
        prev = mag;
        k += 1;
        if k > 200 {
            return None;
        }
    }
    let chi_shift = (0.5 * nu + 0.25) * PI;
    let (ss, cs) = s.sin_cos();
    let (sp, cp) = chi_shift.sin_cos();
    let cos_chi = cs * cp + ss * sp;
    let sin_chi = ss * cp - cs * sp;
    Some((2.0 / (PI * s)).sqrt() * (p.value() * cos_chi - q.value() * sin_chi))
}

/// Miller backward recurrence normalised by the Neumann series
/// (s/2)^{ν0} = Σ_m (ν0+2m) Γ(ν0+m)/m! J_{ν0+2m}(s).
fn miller(nu: f64, s: f64) -> f64 {
    let n = nu.floor() as usize;
    let nu0 = nu - n as f64;
    let big = nu.max(s);
    let mut top = (big + 30.0 + 12.0 * big.sqrt()).ceil() as usize;
    if top % 2 == 1 {
        top += 1;
    }
    let half = top / 2;
    let mut coef = vec![0.0; half + 1];
    coef[0] = gamma_pos(nu0 + 1.0);
    let mut g = gamma_pos(nu0 + 1.0);
    for m in 1..=half {
        if m >= 2 {
            g *= (nu0 + m as f64 - 1.0) / m as f64;
        }
        coef[m] = (nu0 + 2.0 * m as f64) * g;
    }
    let mut j_next = 0.0;
    let mut j_cur = 1e-30;
    let mut norm = CompensatedSum::new();
    let mut wanted = 0.0;
    let mut k = top;
    loop {
        if k == n {
            wanted = j_cur;
        }
        if k % 2 == 0 {
            norm.add(coef[k / 2] * j_cur);
        }
        if k == 0 {
            break;
        }
        let j_prev = 2.0 * (nu0 + k as f64) / s * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        k -= 1;
        if j_cur.abs() > 1e250 {
            let r = 1e-250;
            j_cur *= r;
            j_next *= r;
            wanted *= r;
            let v = norm.value() * r;
            norm = CompensatedSum::new();
            norm.add(v);
        }
    }
    let scale = if nu0 == 0.0 { 1.0 } else { (0.5 * s).powf(nu0) };
    wanted * scale / norm.value()
}

/// s^{-ν} J_ν(s), finite at s = 0.
fn scaled_bessel(nu: f64, s: f64, cut: f64) -> f64 {
    let pre = if nu == 0.0 { 1.0 } else { (-nu * 2f64.ln()).exp() };
    if s == 0.0 {
        return pre * series_scaled_core(nu, 0.0).0;
    }
    if let Some(core) = series_if_stable(nu, s, cut) {
        return pre * core;
    }
    let j = large_argument(nu, s);
    if nu == 0.0 {
        j
    } else {
        j * (-nu * s.ln()).exp()
    }
}

/// `𝒥_α(s) = s^{-ν} J_ν(s)`, ν = (d-2)/2 + α. Value at 0 is 2^{-ν}/Γ(ν+1).
pub fn script_j_alpha(d: usize, alpha: f64, s: f64) -> Result<f64, SpecialError> {
    let nu = kernel_order(d, alpha)?;
    if !(s >= 0.0) || !s.is_finite() {
        return Err(domain("script_j_alpha", format!("argument s = {s} must be finite and ≥ 0")));
    }
    Ok(scaled_bessel(nu, s, default_regime_cut(nu)))
}

pub(crate) fn script_j_alpha_unchecked(d: usize, alpha: f64, s: f64) -> f64 {
    let nu = ((d as f64 - 2.0) / 2.0 + alpha).max(0.0);
    scaled_bessel(nu, s.abs(), default_regime_cut(nu))
}

/// c(d) in `𝒥(s) = c(d) s^{-(d-2)/2} J_{(d-2)/2}(s)`, fixed by 𝒥(0) = |S^{d-1}|.
pub fn script_j_constant(d: usize) -> f64 {
    let nu = (d as f64 - 2.0) / 2.0;
    let at_zero = (-nu * 2f64.ln()).exp() / gamma_pos(nu + 1.0);
    sphere_area(d) / at_zero
}

/// `𝒥(s)`: the Fourier transform of surface measure on S^{d-1} at |ξ| = s.
pub fn script_j(d: usize, s: f64) -> Result<f64, SpecialError> {
    if d < 2 {
        return Err(domain("script_j", format!("dimension d = {d} must be ≥ 2")));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(domain("script_j", format!("argument s = {s} must be finite and ≥ 0")));
    }
    Ok(script_j_unchecked(d, s))
}

pub(crate) fn script_j_unchecked(d: usize, s: f64) -> f64 {
    if d == 1 {
        return 2.0 * s.cos();
    }
    script_j_constant(d) * script_j_alpha_unchecked(d, 0.0, s)
}

/// Truncated large-argument expansion of `𝒥_α` with an error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticValue {
    pub value: f64,
    pub bound: f64,
}

fn hankel_coeff(nu: f64, k: usize) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut a = 1.0;
    for j in 1..=k {
        let odd = (2 * j - 1) as f64;
        a *= (mu - odd * odd) / (j as f64 * 8.0);
    }
    a
}

/// Coefficients `(c⁺_{n,α}, c⁻_{n,α})` of `u^{-(d-1)/2-α-n} e^{±iu}` in the expansion of `𝒥_α(u)`.
pub fn asymptotic_coefficients(d: usize, alpha: f64, n: usize) -> Result<(Complex64, Complex64), SpecialError> {
    let nu = kernel_order(d, alpha)?;
    let theta = (0.5 * nu + 0.25) * PI;
    let amp = (2.0 / PI).sqrt();
    // term n contributes a_n i^{-n}-type phase: cos for even n, -sin for odd, alternating sign
    let a = hankel_coeff(nu, n);
    let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let e = Complex64::from_polar(1.0, -theta);
    let c_plus = if n % 2 == 0 {
        // sign * a * cos(u - θ) = sign*a/2 (e^{i(u-θ)} + e^{-i(u-θ)})
        e * (0.5 * sign * a * amp)
    } else {
        // -sign * a * sin(u - θ) = -sign*a/(2i) (e^{i(u-θ)} - e^{-i(u-θ)})
        e * Complex64::new(0.0, 0.5 * sign * a * amp)
    };
    Ok((c_plus, c_plus.conj()))
}

/// `u^{-(d-1)/2-α} Σ_{n<n_terms} u^{-n}(c⁺ e^{iu} + c⁻ e^{-iu})` and a bound on the omitted tail.
pub fn bessel_asymptotic(d: usize, alpha: f64, u: f64, n_terms: usize) -> Result<AsymptoticValue, SpecialError> {
    if !(u >= 1.0) || !u.is_finite() {
        return Err(domain("bessel_asymptotic", format!("u = {u} must be ≥ 1")));
    }
    if !(1..=2).contains(&n_terms) {
        return Err(domain("bessel_asymptotic", format!("n_terms = {n_terms} must be 1 or 2")));
    }
    let nu = kernel_order(d, alpha)?;
    let power = (d as f64 - 1.0) / 2.0 + alpha;
    let e = Complex64::from_polar(1.0, u);
    let mut sum = 0.0;
    for n in 0..n_terms {
        let (cp, cm) = asymptotic_coefficients(d, alpha, n)?;
        sum += ((cp * e + cm * e.conj()).re) * u.powi(-(n as i32));
    }
    let pre = u.powf(-power);
    let next = hankel_coeff(nu, n_terms)
        .abs()
        .max(hankel_coeff(nu, n_terms + 1).abs() / u);
    let bound = 2.0 * (2.0 / PI).sqrt() * next * u.powf(-power - n_terms as f64) + 1e-14 * pre;
    Ok(AsymptoticValue {
        value: pre * sum,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn gamma_known_values() {
        assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
        assert!(close(gamma_fn(5.0).unwrap(), 24.0, 1e-12));
        assert!(gamma_fn(0.0).is_err());
        assert!(gamma_fn(-1.5).is_err());
    }

    #[test]
    fn gamma_half_matches_integral() {
        // ∫_0^∞ t^{-1/2} e^{-t} dt = 2∫_0^∞ e^{-u²} du, composite Simpson on [0, 12]
        let n = 200_000;
        let h = 12.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let u = i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * (-u * u).exp();
        }
        let integral = 2.0 * acc * h / 3.0;
        let g = gamma_fn(0.5).unwrap();
        assert!((g - integral).abs() / integral < 1e-12, "{g} vs {integral}");
        assert!((g - 1.772_453_850_9).abs() < 1e-10);
    }

    #[test]
    fn gamma_recurrence_and_reflection() {
        for &x in &[0.1, 0.37, 1.25, 3.5, 7.9, 15.2, 40.5, 90.0] {
            let lhs = gamma_fn(x + 1.0).unwrap();
            let rhs = x * gamma_fn(x).unwrap();
            assert!((lhs - rhs).abs() / rhs < 2e-13, "x = {x}");
        }
        for &x in &[0.1, 0.3, 0.45] {
            let lhs = gamma_fn(x).unwrap() * gamma_fn(1.0 - x).unwrap();
            let rhs = PI / (PI * x).sin();
            assert!((lhs - rhs).abs() / rhs < 1e-13);
        }
        assert!((ln_gamma(150.5).unwrap() - (gamma_fn(150.5).unwrap()).ln()).abs() < 1e-10);
    }

    /// J_n(s) = (1/2π)∫_0^{2π} cos(nτ − s sin τ) dτ, trapezoid (spectrally accurate).
    fn bessel_integral(n: u32, s: f64) -> f64 {
        let m = 2 * (s as usize + n as usize) + 256;
        let mut acc = 0.0;
        for k in 0..m {
            let tau = 2.0 * PI * k as f64 / m as f64;
            acc += (n as f64 * tau - s * tau.sin()).cos();
        }
        acc / m as f64
    }

    #[test]
    fn bessel_integer_orders_against_integral() {
        let mut s: f64 = 0.05;
        while s < 1000.0 {
            for n in [0u32, 1, 2, 3, 5, 8, 41] {
                let env = (2.0 / (PI * s.max(1.0))).sqrt().max(1e-3);
                let exact = bessel_integral(n, s);
                let got = bessel_j(n as f64, s).unwrap();
                assert!(
                    (got - exact).abs() <= 1e-10 * env.max(exact.abs()),
                    "n = {n}, s = {s}: {got} vs {exact}"
                );
            }
            s *= 1.173;
        }
    }

    #[test]
    fn bessel_half_integer_closed_forms() {
        for &s in &[0.01, 0.5, 3.0, 11.9, 12.1, 25.0, 140.0, 999.0] {
            let a = (2.0 / (PI * s)).sqrt();
            let j12 = a * s.sin();
            let j32 = a * (s.sin() / s - s.cos());
            assert!((bessel_j(0.5, s).unwrap() - j12).abs() < 1e-12 * a.max(1.0));
            assert!((bessel_j(1.5, s).unwrap() - j32).abs() < 1e-11 * a.max(1.0));
        }
        assert!(bessel_j(0.5, PI).unwrap().abs() < 1e-15);
    }

    #[test]
    fn bessel_first_zero_of_j0() {
        // 50-term alternating series oracle
        let s: f64 = 2.404_825_557_7;
        let mut term = 1.0;
        let mut acc = 1.0;
        for k in 1..50 {
            term *= -(s * s / 4.0) / ((k * k) as f64);
            acc += term;
        }
        assert!(acc.abs() < 1e-9);
        assert!(bessel_j(0.0, s).unwrap().abs() < 1e-9);
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        assert!(bessel_j(-0.5, 1.0).is_err());
    }

    #[test]
    fn bessel_non_integer_order_recurrence() {
        // J_{ν-1} + J_{ν+1} = (2ν/s) J_ν, checked across all three evaluation regimes
        for &nu in &[1.3, 2.75, 7.5, 20.2, 41.5] {
            for &s in &[0.7, 5.0, 12.5, 30.0, 60.0, 150.0, 800.0] {
                let lhs = bessel_j(nu - 1.0, s).unwrap() + bessel_j(nu + 1.0, s).unwrap();
                let rhs = 2.0 * nu / s * bessel_j(nu, s).unwrap();
                let scale = lhs.abs().max(rhs.abs()).max(1e-3 * (2.0 / (PI * s)).sqrt());
                assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1e-30) + 1e-300, "ν={nu}, s={s}");
            }
        }
    }

    #[test]
    fn script_j_at_zero_is_sphere_area() {
        for d in 2..=6 {
            let want = 2.0 * PI.powf(d as f64 / 2.0) / gamma_fn(d as f64 / 2.0).unwrap();
            assert!((script_j(d, 0.0).unwrap() - want).abs() < 1e-12 * want);
        }
        assert!(script_j(1, 1.0).is_err());
    }

    #[test]
    fn script_j_three_dimensions_closed_form() {
        assert!(script_j(3, PI).unwrap().abs() < 1e-12);
        for &s in &[0.2f64, 1.0, 7.0, 13.0, 55.0, 400.0] {
            let want = 4.0 * PI * s.sin() / s;
            assert!((script_j(3, s).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn script_j_matches_sphere_quadrature_in_three_dimensions() {
        // ∫_{S²} e^{-i<y,ξ>} dσ(y) with ξ = s e_3: polar angle Gauss-free midpoint rule in cos θ
        for &s in &[0.5, 2.0, 9.0] {
            let n = 20_000;
            let mut acc = 0.0;
            for k in 0..n {
                let c = -1.0 + (k as f64 + 0.5) * 2.0 / n as f64;
                acc += (s * c).cos();
            }
            let quad = 2.0 * PI * acc * 2.0 / n as f64;
            assert!((quad - script_j(3, s).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn script_j_ratio_to_bare_kernel_is_constant() {
        for d in [2usize, 3, 4, 5] {
            let c = script_j_constant(d);
            for i in 0..100 {
                let s = 0.01 + i as f64 * 3.7;
                let bare = script_j_alpha(d, 0.0, s).unwrap();
                if bare.abs() < 1e-6 {
                    continue;
                }
                let ratio = script_j(d, s).unwrap() / bare;
                assert!((ratio - c).abs() < 1e-10 * c);
            }
        }
        assert!((script_j_constant(2) - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn script_j_alpha_value_at_zero_and_reduction() {
        for &(d, a) in &[(2usize, 0.0), (2, 1.0), (3, 0.5), (4, -0.5), (5, 2.25)] {
            let nu = (d as f64 - 2.0) / 2.0 + a;
            let want = 2f64.powf(-nu) / gamma_fn(nu + 1.0).unwrap();
            assert!((script_j_alpha(d, a, 0.0).unwrap() - want).abs() < 1e-14);
        }
        for &s in &[0.3, 4.0, 30.0] {
            assert_eq!(script_j_alpha(2, 0.0, s).unwrap(), bessel_j(0.0, s).unwrap());
        }
        assert!(script_j_alpha(2, -0.5, 1.0).is_err());
    }

    fn derivative_check(d: usize, a: f64, s: f64) -> f64 {
        let h = 1e-4;
        let fd = (script_j_alpha(d, a, s + h).unwrap() - script_j_alpha(d, a, s - h).unwrap()) / (2.0 * h);
        let id = -s * script_j_alpha(d, a + 1.0, s).unwrap();
        let scale = (1.0 + s).powf(-(d as f64 - 1.0) / 2.0 - a);
        (fd - id).abs() / scale
    }

    #[test]
    fn derivative_identity_at_fixed_points() {
        for &s in &[0.5, 3.0, 20.0] {
            for &(d, a) in &[(2usize, 0.0), (2, 1.0), (3, 0.5), (3, -0.5)] {
                assert!(derivative_check(d, a, s) < 1e-8, "d={d}, α={a}, s={s}");
            }
        }
    }

    #[test]
    fn asymptotic_expansion_accuracy() {
        let (d, a) = (2usize, 1.0);
        let u = 30.0;
        let exact = script_j_alpha(d, a, u).unwrap();
        let asy = bessel_asymptotic(d, a, u, 2).unwrap();
        let env = u.powf(-1.5);
        assert!((asy.value - exact).abs() / env < 1e-3);
        assert!((asy.value - exact).abs() <= asy.bound);
        assert!(bessel_asymptotic(d, a, 0.5, 1).is_err());
        assert!(bessel_asymptotic(d, a, 2.0, 3).is_err());
    }

    #[test]
    fn asymptotic_bound_is_order_of_next_term() {
        for &(d, a) in &[(2usize, 0.0), (3, 1.0), (2, 2.0)] {
            for &u in &[20.0, 80.0, 300.0] {
                for n in 1..=2 {
                    let v = bessel_asymptotic(d, a, u, n).unwrap();
                    let exact = script_j_alpha(d, a, u).unwrap();
                    assert!((v.value - exact).abs() <= v.bound, "d={d} α={a} u={u} n={n}");
                }
            }
        }
    }

    #[test]
    fn asymptotic_envelope_slope() {
        let (d, a) = (3usize, 0.5);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..40 {
            let u = 100.0 * 100f64.powf(i as f64 / 39.0);
            let (cp, _) = asymptotic_coefficients(d, a, 0).unwrap();
            let env = 2.0 * cp.norm() * u.powf(-(d as f64 - 1.0) / 2.0 - a);
            xs.push(u.ln());
            ys.push(env.ln());
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        assert!((sxy / sxx + 1.5).abs() < 0.01);
    }

    #[test]
    fn leading_coefficients_recovered_by_least_squares() {
        // fit 𝒥_α(u) u^{(d-1)/2+α} ≈ A cos u + B sin u on [50, 500]
        let (d, a) = (2usize, 1.0);
        let p = (d as f64 - 1.0) / 2.0 + a;
        let (mut scc, mut sss, mut scs, mut syc, mut sys) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..4000 {
            let u = 50.0 + 450.0 * i as f64 / 3999.0;
            let y = script_j_alpha(d, a, u).unwrap() * u.powf(p);
            let (s, c) = u.sin_cos();
            scc += c * c;
            sss += s * s;
            scs += c * s;
            syc += y * c;
            sys += y * s;
        }
        let det = scc * sss - scs * scs;
        let fa = (syc * sss - sys * scs) / det;
        let fb = (sys * scc - syc * scs) / det;
        let (cp, _) = asymptotic_coefficients(d, a, 0).unwrap();
        // c⁺e^{iu} + c⁻e^{-iu} = 2Re(c⁺) cos u − 2Im(c⁺) sin u
        let (wa, wb) = (2.0 * cp.re, -2.0 * cp.im);
        let rel = ((fa - wa).powi(2) + (fb - wb).powi(2)).sqrt() / (wa * wa + wb * wb).sqrt();
        assert!(rel < 1e-2, "relative residual {rel}");
    }

    #[test]
    fn decay_envelope_is_stable() {
        let (d, a) = (2usize, 0.5);
        let p = (d as f64 - 1.0) / 2.0 + a;
        let sup = |hi: f64| {
            let mut m: f64 = 0.0;
            let mut s = 0.0;
            while s < hi {
                m = m.max(script_j_alpha(d, a, s).unwrap().abs() * (1.0 + s).powf(p));
                s += 0.05;
            }
            m
        };
        let (m1, m2) = (sup(100.0), sup(800.0));
        assert!(m1.is_finite() && m2 < 1.05 * m1.max(1.0));
    }

    #[test]
    fn kernel_params_validate() {
        let p = BesselKernelParams::new(2, 1.0).unwrap();
        assert_eq!(p.regime_cut, 12.0);
        assert!(p.with_regime_cut(5.0).is_err());
        let q = BesselKernelParams::new(3, 10.0).unwrap();
        assert_eq!(q.regime_cut, 2.0 * q.nu());
        assert!(BesselKernelParams::new(2, -0.1).is_err());
        assert!((p.eval(0.0) - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn derivative_identity_holds(d in 2usize..6, a in 0.0f64..3.0, s in 0.05f64..200.0) {
            prop_assert!(derivative_check(d, a, s) < 1e-6);
        }

        #[test]
        fn compensated_sum_is_order_insensitive(xs in proptest::collection::vec(-1e6f64..1e6, 1..200)) {
            let mut fwd = CompensatedSum::new();
            let mut rev = CompensatedSum::new();
            for x in &xs { fwd.add(*x); }
            for x in xs.iter().rev() { rev.add(*x); }
            prop_assert!((fwd.value() - rev.value()).abs() <= 1e-9 * (1.0 + fwd.value().abs()));
        }
    }
}
