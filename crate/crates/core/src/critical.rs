//! Critical coupling of the mean-field transition.
//!
//! The unsynchronized fixed point loses stability when the self-consistency
//! condition `1 = ∫ (z1ω² + z2)/(ω⁴ + z3ω² + z4) g(ω) dω` is first met. The
//! solver works with the residual `∫ … − 1`, which is computed without
//! forming the difference of two nearly equal numbers so the sign stays
//! reliable up to the `1e9·κ1` bracket edge.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::distribution::FrequencyDistribution;
use crate::error::{Error, Result};
use crate::quad::integrate;
use crate::roots::{bisect, illinois, sign_changes_geometric};

/// Upper end of the root bracket, in units of `κ1`.
pub const VC_BRACKET_MAX: f64 = 1e9;
const VC_REL_TOL: f64 = 1e-6;
const CLASSICAL_REL_TOL: f64 = 1e-8;

/// Diagonal of the unsynchronized fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnsyncState {
    pub rho00: f64,
    pub rho11: f64,
    pub rho22: f64,
}

impl UnsyncState {
    /// Mean excitation `ρ11 + 2ρ22`.
    pub fn occupation(&self) -> f64 {
        self.rho11 + 2.0 * self.rho22
    }
}

fn unsync_denominator(k1: f64, k2: f64, v: f64) -> f64 {
    k1 * k1 + k1 * (3.0 * k2 + v) + v * (k2 + v)
}

pub fn unsync_state(kappa1: f64, kappa2: f64, v: f64) -> UnsyncState {
    let den = unsync_denominator(kappa1, kappa2, v);
    UnsyncState {
        rho00: (2.0 * kappa1 * kappa2 + v * (kappa2 + v)) / den,
        rho11: kappa1 * (kappa2 + v) / den,
        rho22: kappa1 * kappa1 / den,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScConstants {
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    pub z4: f64,
}

impl ScConstants {
    /// `true` when `ω⁴ + z3ω² + z4` factors over the reals in `ω²`.
    pub fn real_quadratic_roots(&self) -> bool {
        self.z3 * self.z3 >= 4.0 * self.z4
    }

    /// Roots `p, q` of `t² − z3·t + z4`, so that `ω⁴ + z3ω² + z4 = (ω² + p)(ω² + q)`.
    pub fn quadratic_roots(&self) -> (Complex64, Complex64) {
        let disc = Complex64::new(self.z3 * self.z3 - 4.0 * self.z4, 0.0).sqrt();
        let z3 = Complex64::new(self.z3, 0.0);
        ((z3 + disc) * 0.5, (z3 - disc) * 0.5)
    }

    /// Integrand `(z1ω² + z2)/(ω⁴ + z3ω² + z4)`.
    pub fn integrand(&self, omega: f64) -> f64 {
        let w2 = omega * omega;
        (self.z1 * w2 + self.z2) / (w2 * w2 + self.z3 * w2 + self.z4)
    }
}

fn pz(k1: f64, k2: f64, v: f64) -> f64 {
    6.0 * k1 * (k1 + k2) + v * (3.0 * k1 + 2.0 * k2) + 3.0 * v * v
}

pub fn sc_constants(kappa1: f64, kappa2: f64, vc: f64) -> ScConstants {
    let (k1, k2, v) = (kappa1, kappa2, vc);
    let s = unsync_state(k1, k2, v);
    let p = pz(k1, k2, v);
    ScConstants {
        z1: v * ((-k1 + v) * s.rho00 + (5.0 * k1 + 4.0 * k2 + v) * s.rho11 - (4.0 * k1 + 4.0 * k2 + 2.0 * v) * s.rho22),
        z2: v
            * p
            * ((6.0 * k1 + 2.0 * k2 + 3.0 * v) * s.rho00 + (-2.0 * k2 + 3.0 * v) * s.rho11
                - (6.0 * k1 + 6.0 * v) * s.rho22),
        z3: 13.0 * k1 * k1 + 8.0 * k1 * k2 + 4.0 * k2 * k2 + 34.0 * k1 * v + 12.0 * k2 * v + 10.0 * v * v,
        z4: p * p,
    }
}

/// Coefficients of the residual integrand `h(ω) = (c0 + c2ω² − ω⁴)/(ω⁴ + z3ω² + z4)`,
/// where `c0 = z2 − z4` and `c2 = z1 − z3` are expanded as polynomials in the
/// rates so that no large terms cancel.
#[derive(Debug, Clone, Copy)]
struct Residual {
    c0: f64,
    c2: f64,
    z: ScConstants,
}

impl Residual {
    fn new(k1: f64, k2: f64, v: f64) -> Self {
        let z = sc_constants(k1, k2, v);
        let den = unsync_denominator(k1, k2, v);
        let p = pz(k1, k2, v);
        let cubic = 3.0 * k1 * v.powi(3)
            - (18.0 * k1 * k1 + 7.0 * k1 * k2) * v * v
            - (15.0 * k1.powi(3) + 11.0 * k1 * k1 * k2 + 10.0 * k1 * k2 * k2) * v
            - (6.0 * k1.powi(4) + 24.0 * k1.powi(3) * k2 + 18.0 * k1 * k1 * k2 * k2);
        let z1_num = v.powi(4)
            + k2 * v.powi(3)
            + (3.0 * k1 * k1 + 6.0 * k1 * k2) * v * v
            + (-4.0 * k1.powi(3) - k1 * k1 * k2 + 4.0 * k1 * k2 * k2) * v;
        Residual { c0: p * cubic / den, c2: z1_num / den - z.z3, z }
    }

    fn at(&self, omega: f64) -> f64 {
        let w2 = omega * omega;
        (self.c0 + self.c2 * w2 - w2 * w2) / (w2 * w2 + self.z.z3 * w2 + self.z.z4)
    }

    /// Same integrand in the variable `u = 1/ω`.
    fn at_inverse(&self, u: f64) -> f64 {
        let u2 = u * u;
        (self.c0 * u2 * u2 + self.c2 * u2 - 1.0) / (1.0 + self.z.z3 * u2 + self.z.z4 * u2 * u2)
    }

    /// Frequency scales where the integrand varies.
    fn scales(&self) -> Vec<f64> {
        let (p, q) = self.z.quadratic_roots();
        let mut s = vec![p.norm().sqrt(), q.norm().sqrt(), self.z.z4.powf(0.25)];
        if self.c0 > 0.0 {
            s.push(self.c0.powf(0.25));
        }
        s.retain(|x| x.is_finite() && *x > 0.0);
        s
    }
}

fn check_rates(kappa1: f64, kappa2: f64, v: f64) -> Result<()> {
    if !(kappa1 > 0.0 && kappa2 > 0.0 && v >= 0.0 && v.is_finite() && kappa2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rates must be positive and coupling non-negative (kappa1={kappa1}, kappa2={kappa2}, V={v})"
        )));
    }
    Ok(())
}

/// Right-hand side of the self-consistency condition.
pub fn sc_integral(vc: f64, kappa1: f64, kappa2: f64, dist: &FrequencyDistribution) -> Result<f64> {
    check_rates(kappa1, kappa2, vc)?;
    dist.validate()?;
    let z = sc_constants(kappa1, kappa2, vc);
    if !(z.z3 > 0.0 && z.z4 > 0.0) {
        return Err(Error::NumericalFailure(format!("singular integrand: z3={}, z4={}", z.z3, z.z4)));
    }
    match *dist {
        FrequencyDistribution::Delta => Ok(z.z2 / z.z4),
        FrequencyDistribution::Uniform { gamma } => Ok(uniform_average(&z, gamma)),
        FrequencyDistribution::Lorentzian { .. } => Ok(1.0 + sc_residual(vc, kappa1, kappa2, dist)?),
    }
}

/// `sc_integral − 1`, evaluated with the cancellation-free numerator.
pub fn sc_residual(vc: f64, kappa1: f64, kappa2: f64, dist: &FrequencyDistribution) -> Result<f64> {
    check_rates(kappa1, kappa2, vc)?;
    dist.validate()?;
    let r = Residual::new(kappa1, kappa2, vc);
    if !(r.z.z3 > 0.0 && r.z.z4 > 0.0) {
        return Err(Error::NumericalFailure(format!("singular integrand: z3={}, z4={}", r.z.z3, r.z.z4)));
    }
    match *dist {
        FrequencyDistribution::Delta => Ok(r.c0 / r.z.z4),
        FrequencyDistribution::Uniform { gamma } => {
            if gamma == 0.0 {
                return Ok(r.c0 / r.z.z4);
            }
            Ok(uniform_average(&r.z, gamma) - 1.0)
        }
        FrequencyDistribution::Lorentzian { gamma, cutoff } => Ok(lorentzian_residual(&r, gamma, cutoff)),
    }
}

/// `(1/2Γ)∫_{−Γ}^{Γ} (z1ω² + z2)/(ω⁴ + z3ω² + z4) dω` by partial fractions.
fn uniform_average(z: &ScConstants, gamma: f64) -> f64 {
    if gamma == 0.0 {
        return z.z2 / z.z4;
    }
    let (p, q) = z.quadratic_roots();
    let g = Complex64::new(gamma, 0.0);
    // (1/Γ)∫_0^Γ dω/(ω² + p) = atan(Γ/√p)/(Γ√p)
    let mean_inv = |p: Complex64| {
        let s = p.sqrt();
        (g / s).atan() / (g * s)
    };
    let z1 = Complex64::new(z.z1, 0.0);
    let z2 = Complex64::new(z.z2, 0.0);
    if (q - p).norm() > 1e-7 * p.norm() {
        let alpha = (z2 - z1 * p) / (q - p);
        let beta = (z1 * q - z2) / (q - p);
        (alpha * mean_inv(p) + beta * mean_inv(q)).re
    } else {
        // double root: (z1ω² + z2)/(ω² + p)² = z1/(ω² + p) + (z2 − z1p)/(ω² + p)²
        let s = p.sqrt();
        let mean_inv_sq = 1.0 / (2.0 * p * (g * g + p)) + (g / s).atan() / (2.0 * p * s * g);
        (z1 * mean_inv(p) + (z2 - z1 * p) * mean_inv_sq).re
    }
}

/// `∫ h(ω) g(ω) dω` for the (optionally truncated) Lorentzian. The range
/// `[0, Γ]` is integrated directly and everything above `Γ` in `u = 1/ω`,
/// where `g(1/u)/u²` is smooth and the infinite tail becomes finite.
fn lorentzian_residual(r: &Residual, gamma: f64, cutoff: Option<f64>) -> f64 {
    let upper = cutoff.map_or(f64::INFINITY, |c| c * gamma);
    let norm = cutoff.map_or(1.0, |c| 2.0 * c.atan() / PI);
    let scales = r.scales();
    let (abs_tol, rel_tol) = (1e-300, 1e-11);

    let w_hi = upper.min(gamma);
    let w_breaks: Vec<f64> = scales.iter().copied().filter(|s| *s < w_hi).collect();
    let lower = integrate(
        |w| r.at(w) * gamma / PI / (w * w + gamma * gamma),
        0.0,
        w_hi,
        &w_breaks,
        abs_tol,
        rel_tol,
    );
    let mut total = lower.value;
    if upper > gamma {
        let u_lo = if upper.is_finite() { 1.0 / upper } else { 0.0 };
        let u_hi = 1.0 / gamma;
        let u_breaks: Vec<f64> = scales.iter().map(|s| 1.0 / s).filter(|u| *u > u_lo && *u < u_hi).collect();
        let upper_part = integrate(
            |u| r.at_inverse(u) * (gamma / PI) / (1.0 + gamma * gamma * u * u),
            u_lo,
            u_hi,
            &u_breaks,
            abs_tol,
            rel_tol,
        );
        total += upper_part.value;
    }
    2.0 * total / norm
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VcSolution {
    /// Critical coupling; infinite when the residual never changes sign in the bracket.
    pub vc: f64,
    /// Set when more than one sign change was found; `vc` is then the smallest root.
    pub multiple_roots: bool,
}

/// Numerical root of the self-consistency condition on `[κ1, 1e9·κ1]`.
pub fn solve_vc_quantum(kappa1: f64, kappa2: f64, dist: &FrequencyDistribution) -> Result<VcSolution> {
    check_rates(kappa1, kappa2, 0.0)?;
    dist.validate()?;
    let f = |v: f64| sc_residual(v, kappa1, kappa2, dist).unwrap_or(f64::NAN);
    let lo = kappa1;
    let hi = VC_BRACKET_MAX * kappa1;
    let f_lo = f(lo);
    if f_lo > 0.0 {
        return Err(Error::InvalidParameter(format!(
            "unsynchronized state already unstable at the bracket floor V = {lo}"
        )));
    }
    let brackets = sign_changes_geometric(f, lo, hi, 10);
    let Some(&(a, b)) = brackets.first() else {
        return Ok(VcSolution { vc: f64::INFINITY, multiple_roots: false });
    };
    let vc = bisect(f, a, b, |m| VC_REL_TOL * 1e-3 * m);
    Ok(VcSolution { vc, multiple_roots: brackets.len() > 1 })
}

/// Leading-order closed forms in `1/κ2`. A truncated Lorentzian has none and
/// is solved numerically.
pub fn vc_closed_form_quantum(kappa1: f64, kappa2: f64, dist: &FrequencyDistribution) -> Result<f64> {
    check_rates(kappa1, kappa2, 0.0)?;
    dist.validate()?;
    Ok(match *dist {
        FrequencyDistribution::Delta => 10.0 * kappa2 / 3.0,
        FrequencyDistribution::Uniform { gamma } => {
            let (k1, k2, g2) = (kappa1, kappa2, gamma * gamma);
            (10.0 * k1 * k2 + g2 + (100.0 * k1 * k1 * k2 * k2 + 28.0 * k1 * k2 * g2 + g2 * g2).sqrt()) / (6.0 * k1)
        }
        FrequencyDistribution::Lorentzian { gamma, cutoff: None } => {
            if gamma < kappa1 {
                2.0 * kappa2 * (5.0 * kappa1 + gamma) / (3.0 * (kappa1 - gamma))
            } else {
                f64::INFINITY
            }
        }
        FrequencyDistribution::Lorentzian { cutoff: Some(_), .. } => solve_vc_quantum(kappa1, kappa2, dist)?.vc,
    })
}

/// Branch of the classical uniform-disorder threshold equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniformBranch {
    /// `Γ < πκ1/2`: `2Γ/V = π + atan(2(V − κ1)/Γ)`, root below `κ1`.
    Narrow,
    /// `Γ ≥ πκ1/2`: `Γ/V = atan(Γ/(V − κ1))`, root at or above `κ1`.
    Wide,
}

/// Solves one branch of the classical uniform equation. The branch must match
/// `Γ ≶ πκ1/2` for a root to exist; at the boundary both return `κ1`.
pub fn classical_uniform_branch(kappa1: f64, gamma: f64, branch: UniformBranch) -> Result<f64> {
    if !(kappa1 > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("need kappa1 > 0 and gamma > 0, got {kappa1}, {gamma}")));
    }
    let tol = |m: f64| CLASSICAL_REL_TOL * 1e-2 * m.abs();
    match branch {
        UniformBranch::Narrow => {
            let f = |v: f64| 2.0 * gamma / v - PI - (2.0 * (v - kappa1) / gamma).atan();
            if f(kappa1) > 0.0 {
                return Err(Error::InvalidParameter(format!("narrow branch needs gamma <= pi*kappa1/2, got {gamma}")));
            }
            let mut lo = kappa1;
            while f(lo) <= 0.0 {
                lo *= 0.5;
            }
            Ok(bisect(f, lo, kappa1, tol))
        }
        UniformBranch::Wide => {
            let f = |v: f64| {
                if v <= kappa1 {
                    gamma / v - 0.5 * PI
                } else {
                    gamma / v - (gamma / (v - kappa1)).atan()
                }
            };
            let f_edge = f(kappa1);
            if f_edge < 0.0 {
                return Err(Error::InvalidParameter(format!("wide branch needs gamma >= pi*kappa1/2, got {gamma}")));
            }
            if f_edge == 0.0 {
                return Ok(kappa1);
            }
            let mut hi = 2.0 * kappa1 + gamma * gamma;
            while f(hi) > 0.0 {
                hi *= 2.0;
            }
            Ok(bisect(f, kappa1, hi, tol))
        }
    }
}

/// Classical critical coupling; a truncated Lorentzian is not covered.
pub fn vc_classical(kappa1: f64, dist: &FrequencyDistribution) -> Result<f64> {
    if kappa1 <= 0.0 {
        return Err(Error::InvalidParameter(format!("kappa1 must be positive, got {kappa1}")));
    }
    dist.validate()?;
    match *dist {
        FrequencyDistribution::Delta => Ok(0.0),
        FrequencyDistribution::Uniform { gamma } if gamma == 0.0 => Ok(0.0),
        FrequencyDistribution::Uniform { gamma } => {
            let branch = if gamma < 0.5 * PI * kappa1 { UniformBranch::Narrow } else { UniformBranch::Wide };
            classical_uniform_branch(kappa1, gamma, branch)
        }
        FrequencyDistribution::Lorentzian { gamma, cutoff: None } => Ok(if gamma < kappa1 {
            (kappa1 + 3.0 * gamma - (kappa1 * kappa1 - 2.0 * kappa1 * gamma + 5.0 * gamma * gamma).sqrt()) / 2.0
        } else {
            f64::INFINITY
        }),
        FrequencyDistribution::Lorentzian { cutoff: Some(_), .. } => Err(Error::InvalidParameter(
            "no classical threshold formula for a truncated Lorentzian".into(),
        )),
    }
}

/// Zero-growth perturbation at frequency `ω` driven by the mean field `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityMode {
    pub b10: Complex64,
    pub b21: Complex64,
    pub a: Complex64,
}

impl StabilityMode {
    /// Contribution `b10 + √2·b21` to the mean field.
    pub fn mean_field_weight(&self) -> Complex64 {
        self.b10 + SQRT_2 * self.b21
    }
}

pub fn stability_mode(omega: f64, kappa1: f64, kappa2: f64, vc: f64, a: Complex64) -> StabilityMode {
    let (k1, k2, v) = (kappa1, kappa2, vc);
    let s = unsync_state(k1, k2, v);
    let iw = Complex64::new(0.0, omega);
    let den = 8.0 * k1 * v - (3.0 * k1 + v + iw) * (2.0 * k1 + 2.0 * k2 + 3.0 * v + iw);
    let n10 = (2.0 * k1 + 2.0 * k2 + 3.0 * v + iw) * s.rho00 - (2.0 * k1 + 2.0 * k2 - v + iw) * s.rho11
        - 4.0 * v * s.rho22;
    let n21 = 2.0 * k1 * s.rho00 + (k1 + v + iw) * s.rho11 - (3.0 * k1 + v + iw) * s.rho22;
    StabilityMode { b10: -a * v * n10 / den, b21: -SQRT_2 * a * v * n21 / den, a }
}

/// Result of the finite-N eigenvalue route to the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizationCrossing {
    /// Coupling at which the spectral abscissa crosses zero; infinite if it never does.
    pub vc: f64,
    /// `|Im λ|` of the eigenvalue with the largest real part at `vc`.
    pub imag_at_crossing: f64,
}

/// Linearized coherence dynamics about the unsynchronized state for the given
/// frequencies: unknowns are ordered `(δρ_{n,10}, δρ_{n,21})` per oscillator.
pub fn linearized_matrix(frequencies: &[f64], kappa1: f64, kappa2: f64, v: f64) -> DMatrix<Complex64> {
    let n = frequencies.len();
    let s = unsync_state(kappa1, kappa2, v);
    let r10 = v * (s.rho00 - s.rho11) / n as f64;
    let r21 = SQRT_2 * v * (s.rho11 - s.rho22) / n as f64;
    let mut m = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            m[(2 * i, 2 * j)] += r10;
            m[(2 * i, 2 * j + 1)] += r10 * SQRT_2;
            m[(2 * i + 1, 2 * j)] += r21;
            m[(2 * i + 1, 2 * j + 1)] += r21 * SQRT_2;
        }
    }
    for (i, &w) in frequencies.iter().enumerate() {
        m[(2 * i, 2 * i)] += Complex64::new(-3.0 * kappa1 - v, -w);
        m[(2 * i, 2 * i + 1)] += 2.0 * SQRT_2 * v;
        m[(2 * i + 1, 2 * i)] += 2.0 * SQRT_2 * kappa1;
        m[(2 * i + 1, 2 * i + 1)] += Complex64::new(-2.0 * kappa1 - 2.0 * kappa2 - 3.0 * v, -w);
    }
    m
}

/// Eigenvalue of the linearized matrix with the largest real part.
pub fn leading_eigenvalue(frequencies: &[f64], kappa1: f64, kappa2: f64, v: f64) -> Result<Complex64> {
    let m = linearized_matrix(frequencies, kappa1, kappa2, v);
    let eig = m
        .try_schur(1e-14, 100_000)
        .ok_or_else(|| Error::NumericalFailure("Schur decomposition did not converge".into()))?
        .eigenvalues()
        .ok_or_else(|| Error::NumericalFailure("Schur form is not triangular".into()))?;
    eig.iter()
        .copied()
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .ok_or_else(|| Error::InvalidParameter("empty frequency list".into()))
}

/// Threshold from the spectral abscissa of the finite-N linearization, found
/// by a decade scan on `[κ1, 1e9·κ1]` and Illinois refinement.
pub fn linearization_oracle(frequencies: &[f64], kappa1: f64, kappa2: f64) -> Result<LinearizationCrossing> {
    if frequencies.len() < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 oscillators, got {}", frequencies.len())));
    }
    check_rates(kappa1, kappa2, 0.0)?;
    let abscissa = |v: f64| leading_eigenvalue(frequencies, kappa1, kappa2, v).map_or(f64::NAN, |l| l.re);
    let mut lo = kappa1;
    let mut f_lo = abscissa(lo);
    let none = LinearizationCrossing { vc: f64::INFINITY, imag_at_crossing: f64::NAN };
    if f_lo > 0.0 {
        return Ok(LinearizationCrossing { vc: lo, imag_at_crossing: f64::NAN });
    }
    loop {
        let hi = lo * 10.0;
        if hi > VC_BRACKET_MAX * kappa1 * (1.0 + 1e-12) {
            return Ok(none);
        }
        let f_hi = abscissa(hi);
        if f_hi > 0.0 {
            let vc = illinois(abscissa, lo, hi, |x| 1e-9 * x.abs());
            let lead = leading_eigenvalue(frequencies, kappa1, kappa2, vc)?;
            return Ok(LinearizationCrossing { vc, imag_at_crossing: lead.im.abs() });
        }
        if f_hi.is_nan() || f_lo.is_nan() {
            return Err(Error::NumericalFailure("eigenvalue computation failed".into()));
        }
        lo = hi;
        f_lo = f_hi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Residue-theorem value of the Lorentzian average (no cutoff): the
    /// upper-half-plane poles at `iΓ`, `i√p`, `i√q`.
    fn lorentzian_residue_oracle(z: &ScConstants, gamma: f64) -> f64 {
        let disc = (z.z3 * z.z3 - 4.0 * z.z4).sqrt();
        let p = (z.z3 + disc) / 2.0;
        let q = (z.z3 - disc) / 2.0;
        let alpha = (z.z2 - z.z1 * p) / (q - p);
        let beta = (z.z1 * q - z.z2) / (q - p);
        alpha / (p.sqrt() * (p.sqrt() + gamma)) + beta / (q.sqrt() * (q.sqrt() + gamma))
    }

    #[test]
    fn unsync_limits() {
        let s = unsync_state(1.0, 1e6, 0.0);
        assert!((s.rho00 - 2.0 / 3.0).abs() < 1e-5);
        assert!((s.rho11 - 1.0 / 3.0).abs() < 1e-5);
        assert!(s.rho22 < 1e-5);
        let d = unsync_state(1.0, 100.0, 1e6);
        assert!(d.rho00 > 1.0 - 1e-5);
        for (k2, v) in [(1.0, 0.0), (100.0, 333.0), (3.0, 1e4)] {
            let s = unsync_state(1.0, k2, v);
            assert!((s.rho00 + s.rho11 + s.rho22 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn z4_is_a_perfect_square() {
        let (k1, k2, v) = (1.0, 100.0, 1000.0 / 3.0);
        let z = sc_constants(k1, k2, v);
        let b = 6.0 * k1 * (k1 + k2) + v * (3.0 * k1 + 2.0 * k2) + 3.0 * v * v;
        assert_eq!(z.z4, b * b);
        assert!(z.z3 > 0.0);
        // at the leading-order delta threshold the quartic factors over the reals
        assert!(z.real_quadratic_roots());
    }

    /// The integrand is dimensionless, so `z1, z3` carry rate² and `z2, z4` rate⁴.
    #[test]
    fn homogeneity_of_constants() {
        let (k1, k2, v, s) = (1.3, 70.0, 250.0, 2.0);
        let a = sc_constants(k1, k2, v);
        let b = sc_constants(s * k1, s * k2, s * v);
        assert_relative_eq!(b.z1, a.z1 * s.powi(2), max_relative = 1e-13);
        assert_relative_eq!(b.z2, a.z2 * s.powi(4), max_relative = 1e-13);
        assert_relative_eq!(b.z3, a.z3 * s.powi(2), max_relative = 1e-13);
        assert_relative_eq!(b.z4, a.z4 * s.powi(4), max_relative = 1e-13);
    }

    #[test]
    fn polynomial_residual_matches_direct_difference() {
        for (k2, v) in [(100.0, 50.0), (100.0, 339.0), (1000.0, 1e4), (3.0, 2.0)] {
            let z = sc_constants(1.0, k2, v);
            let r = Residual::new(1.0, k2, v);
            assert_relative_eq!(r.c0, z.z2 - z.z4, max_relative = 1e-9);
            assert_relative_eq!(r.c2, z.z1 - z.z3, max_relative = 1e-9);
        }
    }

    #[test]
    fn stability_mode_solves_the_linear_system() {
        let (k1, k2, v, w) = (1.0, 100.0, 340.0, 13.0);
        let a = Complex64::new(0.3, -0.2);
        let m = stability_mode(w, k1, k2, v, a);
        let s = unsync_state(k1, k2, v);
        let iw = Complex64::new(0.0, w);
        let d10 = (-3.0 * k1 - v - iw) * m.b10 + 2.0 * SQRT_2 * v * m.b21 + v * a * (s.rho00 - s.rho11);
        let d21 = 2.0 * SQRT_2 * k1 * m.b10 + (-2.0 * k1 - 2.0 * k2 - 3.0 * v - iw) * m.b21
            + SQRT_2 * v * a * (s.rho11 - s.rho22);
        assert!(d10.norm() < 1e-12 && d21.norm() < 1e-12);
        // real part of its mean-field weight per unit A is the integrand
        let z = sc_constants(k1, k2, v);
        assert_relative_eq!((m.mean_field_weight() / a).re, z.integrand(w), max_relative = 1e-10);
        // linear in A
        let m2 = stability_mode(w, k1, k2, v, a * 2.5);
        assert!((m2.b10 - m.b10 * 2.5).norm() < 1e-14);
    }

    #[test]
    fn delta_integral_is_integrand_at_zero() {
        let z = sc_constants(1.0, 100.0, 300.0);
        let d = sc_integral(300.0, 1.0, 100.0, &FrequencyDistribution::Delta).unwrap();
        assert_eq!(d, z.z2 / z.z4);
    }

    #[test]
    fn uniform_closed_form_matches_quadrature() {
        for (k2, v, g) in [(100.0, 480.0, 20.0), (100.0, 30.0, 5.0), (10.0, 3.0, 40.0)] {
            let z = sc_constants(1.0, k2, v);
            let closed = sc_integral(v, 1.0, k2, &FrequencyDistribution::uniform(g)).unwrap();
            let quad = integrate(|w| z.integrand(w), 0.0, g, &[], 1e-15, 1e-13).value / g;
            assert_relative_eq!(closed, quad, max_relative = 1e-10);
        }
    }

    #[test]
    fn uniform_narrow_limit_is_delta() {
        let d = sc_integral(300.0, 1.0, 100.0, &FrequencyDistribution::Delta).unwrap();
        let u = sc_integral(300.0, 1.0, 100.0, &FrequencyDistribution::uniform(1e-4)).unwrap();
        assert_relative_eq!(u, d, max_relative = 1e-6);
    }

    #[test]
    fn lorentzian_matches_residue_oracle() {
        for (k2, v, g) in [(100.0, 375.0, 0.7), (100.0, 1293.0, 0.7), (1000.0, 5e3, 0.2), (5.0, 4.0, 2.0)] {
            let z = sc_constants(1.0, k2, v);
            let numeric = sc_integral(v, 1.0, k2, &FrequencyDistribution::lorentzian(g)).unwrap();
            assert_relative_eq!(numeric, lorentzian_residue_oracle(&z, g), max_relative = 1e-8);
        }
    }

    #[test]
    fn residual_sign_near_the_lorentzian_wall() {
        let below = sc_residual(1e9, 1.0, 100.0, &FrequencyDistribution::lorentzian(0.999)).unwrap();
        let above = sc_residual(1e9, 1.0, 100.0, &FrequencyDistribution::lorentzian(1.001)).unwrap();
        assert!(below > 0.0, "{below}");
        assert!(above < 0.0, "{above}");
    }

    #[test]
    fn residual_consistent_with_integral() {
        for d in [
            FrequencyDistribution::Delta,
            FrequencyDistribution::uniform(20.0),
            FrequencyDistribution::lorentzian_with_cutoff(0.7, 100.0),
        ] {
            let i = sc_integral(400.0, 1.0, 100.0, &d).unwrap();
            let r = sc_residual(400.0, 1.0, 100.0, &d).unwrap();
            assert!((i - 1.0 - r).abs() < 1e-12, "{d}");
        }
    }

    #[test]
    fn residual_increases_below_the_root() {
        for d in [FrequencyDistribution::Delta, FrequencyDistribution::uniform(20.0), FrequencyDistribution::lorentzian(0.7)]
        {
            let vc = solve_vc_quantum(1.0, 100.0, &d).unwrap().vc;
            let mut prev = f64::NEG_INFINITY;
            for k in 0..100 {
                let v = 1.0 * (vc / 1.0).powf(k as f64 / 99.0);
                let r = sc_residual(v, 1.0, 100.0, &d).unwrap();
                assert!(r > prev, "{d}: not increasing at V={v}");
                prev = r;
            }
        }
    }

    #[test]
    fn numeric_threshold_near_closed_forms() {
        for (k2, tol) in [(100.0, 0.10), (1000.0, 0.02)] {
            for d in [FrequencyDistribution::Delta, FrequencyDistribution::uniform(20.0)] {
                let numeric = solve_vc_quantum(1.0, k2, &d).unwrap();
                let closed = vc_closed_form_quantum(1.0, k2, &d).unwrap();
                assert!(!numeric.multiple_roots);
                assert!((numeric.vc / closed - 1.0).abs() <= tol, "{d} k2={k2}: {} vs {closed}", numeric.vc);
            }
        }
        let delta = solve_vc_quantum(1.0, 100.0, &FrequencyDistribution::Delta).unwrap().vc;
        assert!((delta / (1000.0 / 3.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn lorentzian_hard_wall() {
        let finite = solve_vc_quantum(1.0, 100.0, &FrequencyDistribution::lorentzian(0.999)).unwrap();
        assert!(finite.vc.is_finite());
        let none = solve_vc_quantum(1.0, 100.0, &FrequencyDistribution::lorentzian(1.001)).unwrap();
        assert!(none.vc.is_infinite());
        let none = solve_vc_quantum(1.0, 100.0, &FrequencyDistribution::lorentzian(1.2)).unwrap();
        assert!(none.vc.is_infinite());
        assert!(vc_classical(1.0, &FrequencyDistribution::lorentzian(0.999)).unwrap().is_finite());
        assert!(vc_classical(1.0, &FrequencyDistribution::lorentzian(1.001)).unwrap().is_infinite());
    }

    #[test]
    fn cutoff_makes_lorentzian_threshold_finite_and_lower() {
        let cut = solve_vc_quantum(1.0, 100.0, &FrequencyDistribution::lorentzian_with_cutoff(0.7, 100.0)).unwrap();
        let full = solve_vc_quantum(1.0, 100.0, &FrequencyDistribution::lorentzian(0.7)).unwrap();
        assert!(cut.vc < full.vc);
        assert_relative_eq!(
            vc_closed_form_quantum(1.0, 100.0, &FrequencyDistribution::lorentzian_with_cutoff(0.7, 100.0)).unwrap(),
            cut.vc
        );
    }

    #[test]
    fn closed_form_values() {
        let k2 = 100.0;
        assert_eq!(
            vc_closed_form_quantum(1.0, k2, &FrequencyDistribution::uniform(0.0)).unwrap(),
            vc_closed_form_quantum(1.0, k2, &FrequencyDistribution::Delta).unwrap()
        );
        let g = 1e3;
        let big = vc_closed_form_quantum(1.0, k2, &FrequencyDistribution::uniform(g)).unwrap();
        assert!((big / (g * g / 3.0) - 1.0).abs() < 0.02);
        let l = vc_closed_form_quantum(1.0, k2, &FrequencyDistribution::lorentzian(0.99)).unwrap();
        assert_relative_eq!(l, 2.0 * 100.0 * 5.99 / (3.0 * 0.01), max_relative = 1e-9);
        assert!(vc_closed_form_quantum(1.0, k2, &FrequencyDistribution::lorentzian(1.0)).unwrap().is_infinite());
    }

    #[test]
    fn classical_thresholds() {
        assert_eq!(vc_classical(1.0, &FrequencyDistribution::Delta).unwrap(), 0.0);
        assert!(vc_classical(1.0, &FrequencyDistribution::lorentzian(1e-9)).unwrap() < 1e-8);
        assert_relative_eq!(
            vc_classical(1.0, &FrequencyDistribution::lorentzian(0.5)).unwrap(),
            (2.5 - 1.25f64.sqrt()) / 2.0,
            max_relative = 1e-14
        );
        assert!(vc_classical(1.0, &FrequencyDistribution::lorentzian_with_cutoff(0.5, 10.0)).is_err());
    }

    #[test]
    fn classical_uniform_branches_meet() {
        let edge = 0.5 * PI;
        let narrow = classical_uniform_branch(1.0, edge * (1.0 - 1e-9), UniformBranch::Narrow).unwrap();
        let wide = classical_uniform_branch(1.0, edge * (1.0 + 1e-9), UniformBranch::Wide).unwrap();
        assert!((narrow - wide).abs() < 1e-6, "{narrow} vs {wide}");
        for g in [0.3, 1.0, 3.0, 30.0] {
            let v = vc_classical(1.0, &FrequencyDistribution::uniform(g)).unwrap();
            let lhs = if g < edge { 2.0 * g / v - PI - (2.0 * (v - 1.0) / g).atan() } else { g / v - (g / (v - 1.0)).atan() };
            assert!(lhs.abs() < 1e-7, "{g}: {lhs}");
        }
        // wide disorder approaches Γ²/(3κ1)
        let v = vc_classical(1.0, &FrequencyDistribution::uniform(1e3)).unwrap();
        assert!((v / (1e6 / 3.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn classical_uniform_is_increasing_in_gamma() {
        let mut prev = 0.0;
        for k in 1..60 {
            let g = 0.1 * k as f64;
            let v = vc_classical(1.0, &FrequencyDistribution::uniform(g)).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn linearization_agrees_for_identical_oscillators() {
        let w = vec![0.0; 8];
        let lin = linearization_oracle(&w, 1.0, 100.0).unwrap();
        let sc = solve_vc_quantum(1.0, 100.0, &FrequencyDistribution::Delta).unwrap().vc;
        assert!((lin.vc / sc - 1.0).abs() < 0.01, "{} vs {sc}", lin.vc);
        assert!(lin.imag_at_crossing < 1e-6);
    }
}
