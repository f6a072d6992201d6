//! Two oscillators in the limit of strong two-phonon loss, where each one lives
//! on `{|0⟩, |1⟩}`: closed-form steady state, relative-phase quasiprobability,
//! concurrence, and the entanglement tongue `V > V_c(Δ)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::DensityMatrix;
use crate::par::Exec;
use crate::roots::bisect;

/// Steady state of the dissipatively coupled pair in the basis
/// `|00⟩, |01⟩, |10⟩, |11⟩`. All other matrix elements vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSteadyState {
    pub p00: f64,
    /// `⟨01|ρ|01⟩ = ⟨10|ρ|10⟩`
    pub p_single: f64,
    /// `⟨11|ρ|11⟩`
    pub p_double: f64,
    /// `⟨01|ρ|10⟩`
    pub coherence: Complex64,
    /// Common denominator of every element (units of `kappa1³`).
    pub normalizer: f64,
}

impl AnalyticSteadyState {
    pub fn total_probability(&self) -> f64 {
        self.p00 + 2.0 * self.p_single + self.p_double
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = Complex64::new(self.p00, 0.0);
        m[(1, 1)] = Complex64::new(self.p_single, 0.0);
        m[(2, 2)] = Complex64::new(self.p_single, 0.0);
        m[(3, 3)] = Complex64::new(self.p_double, 0.0);
        m[(1, 2)] = self.coherence;
        m[(2, 1)] = self.coherence.conj();
        m
    }

    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.to_matrix())
    }
}

/// Closed-form steady state for coupling `v` and detuning `delta = ω2 − ω1`.
pub fn analytic_steady_state(kappa1: f64, v: f64, delta: f64) -> Result<AnalyticSteadyState> {
    if !(kappa1 > 0.0) || !(v >= 0.0) || !delta.is_finite() || !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need kappa1 > 0 and finite V >= 0 (kappa1 = {kappa1}, V = {v}, delta = {delta})"
        )));
    }
    let k = kappa1;
    let d2 = delta * delta;
    let b = d2 + 4.0 * (3.0 * k + v).powi(2);
    let n = (3.0 * k + v) * (3.0 * k * (d2 + 36.0 * k * k) + (d2 + 108.0 * k * k) * v + 32.0 * k * v * v);
    let coh = Complex64::new(6.0 * k + 2.0 * v, -delta) * (2.0 * k * v * (k + v) / n);
    Ok(AnalyticSteadyState {
        p00: 1.0 - k * (5.0 * k + 2.0 * v) * b / n,
        p_single: k * (2.0 * k + v) * b / n,
        p_double: k * k * b / n,
        coherence: coh,
        normalizer: n,
    })
}

/// Relative-phase marginal `W(θ) = 1/2π + (g cos θ + h sin θ)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMarginal {
    pub g: f64,
    pub h: f64,
}

impl PhaseMarginal {
    pub fn evaluate(&self, theta: f64) -> f64 {
        0.5 / PI + 0.5 * (self.g * theta.cos() + self.h * theta.sin())
    }

    /// Location of the maximum in `(−π, π]`.
    pub fn peak(&self) -> f64 {
        self.h.atan2(self.g)
    }

    pub fn amplitude(&self) -> f64 {
        self.g.hypot(self.h)
    }

    /// `n` equally spaced samples `(θ, W(θ))` with `θ ∈ [−π, π)`.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let theta = -PI + 2.0 * PI * k as f64 / n as f64;
                (theta, self.evaluate(theta))
            })
            .collect()
    }
}

impl From<&AnalyticSteadyState> for PhaseMarginal {
    fn from(s: &AnalyticSteadyState) -> Self {
        PhaseMarginal { g: s.coherence.re, h: s.coherence.im }
    }
}

/// Largest element of a two-qubit state that lies outside the
/// diagonal-plus-`⟨01|ρ|10⟩` structure.
fn off_structure_weight(m: &DMatrix<Complex64>) -> f64 {
    let mut w = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let allowed = i == j || (i, j) == (1, 2) || (i, j) == (2, 1);
            if !allowed {
                w = w.max(m[(i, j)].norm());
            }
        }
    }
    w
}

/// Phase marginal of a two-qubit density matrix with only the `⟨01|ρ|10⟩`
/// coherence.
pub fn phase_marginal(rho: &DensityMatrix) -> Result<PhaseMarginal> {
    if rho.dim() != 4 {
        return Err(Error::Structure(format!("expected a 4x4 state, found {}x{}", rho.dim(), rho.dim())));
    }
    let w = off_structure_weight(rho.matrix());
    if w > 1e-8 {
        return Err(Error::Structure(format!("coherences outside |01><10| of size {w:.3e}")));
    }
    let c = rho.get(1, 2);
    Ok(PhaseMarginal { g: c.re, h: c.im })
}

/// Square roots of the eigenvalues of `ρ ρ̃` in decreasing order, with
/// `ρ̃ = (σy⊗σy) ρ* (σy⊗σy)`.
pub fn wootters_lambdas(rho: &DensityMatrix) -> Result<[f64; 4]> {
    if rho.dim() != 4 {
        return Err(Error::State(format!("concurrence needs a two-qubit state, found dimension {}", rho.dim())));
    }
    let m = rho.matrix();
    // σy⊗σy = antidiag(-1, 1, 1, -1)
    let sign = [-1.0, 1.0, 1.0, -1.0];
    let flipped = DMatrix::from_fn(4, 4, |i, j| m[(3 - i, 3 - j)].conj() * sign[i] * sign[j]);

    // ρρ̃ and √ρ ρ̃ √ρ share eigenvalues; the latter is hermitian PSD.
    let eig = (m + m.adjoint()).map(|z| z * 0.5).symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|x| Complex64::new(x.max(0.0).sqrt(), 0.0));
    let u = &eig.eigenvectors;
    let sqrt_rho = u * DMatrix::from_diagonal(&sqrt_vals) * u.adjoint();
    let r = &sqrt_rho * flipped * &sqrt_rho;
    let r = (&r + r.adjoint()).map(|z| z * 0.5);
    let mut lambdas: Vec<f64> = r.symmetric_eigenvalues().iter().map(|x| x.max(0.0).sqrt()).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok([lambdas[0], lambdas[1], lambdas[2], lambdas[3]])
}

/// `λ1 − λ2 − λ3 − λ4` before clamping at zero.
pub fn concurrence_margin(rho: &DensityMatrix) -> Result<f64> {
    let l = wootters_lambdas(rho)?;
    Ok(l[0] - l[1] - l[2] - l[3])
}

/// Wootters concurrence `max(0, λ1 − λ2 − λ3 − λ4)`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    Ok(concurrence_margin(rho)?.max(0.0))
}

fn analytic_margin(kappa1: f64, v: f64, delta: f64) -> Result<f64> {
    concurrence_margin(&analytic_steady_state(kappa1, v, delta)?.to_density_matrix()?)
}

/// Smallest coupling at which the analytic steady state becomes entangled,
/// resolved to `1e-4·kappa1`.
pub fn tongue_boundary(delta: f64, kappa1: f64) -> Result<f64> {
    if !(kappa1 > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("kappa1 = {kappa1}, delta = {delta}")));
    }
    let lo = kappa1;
    if analytic_margin(kappa1, lo, delta)? > 0.0 {
        return Err(Error::NumericalFailure(format!("already entangled at V = {lo}")));
    }
    let mut hi = 1e3 * kappa1;
    while analytic_margin(kappa1, hi, delta)? <= 0.0 {
        if hi >= 1e6 * kappa1 {
            return Err(Error::NoBoundary(hi));
        }
        hi = (hi * 10.0).min(1e6 * kappa1);
    }
    // margin is finite for every valid V, so the closure cannot fail
    let f = |v: f64| analytic_margin(kappa1, v, delta).unwrap_or(f64::NAN);
    Ok(bisect(f, lo, hi, |_| 1e-4 * kappa1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TonguePoint {
    pub delta: f64,
    pub coupling: f64,
    pub concurrence: f64,
}

/// Concurrence of the analytic state on the product grid, `delta` outermost.
pub fn tongue_scan(delta_grid: &[f64], v_grid: &[f64], kappa1: f64) -> Result<Vec<TonguePoint>> {
    tongue_scan_with(Exec::default(), delta_grid, v_grid, kappa1)
}

pub fn tongue_scan_with(exec: Exec, delta_grid: &[f64], v_grid: &[f64], kappa1: f64) -> Result<Vec<TonguePoint>> {
    let points: Vec<(f64, f64)> =
        delta_grid.iter().flat_map(|&d| v_grid.iter().map(move |&v| (d, v))).collect();
    exec.map(&points, |&(delta, coupling)| {
        let rho = analytic_steady_state(kappa1, coupling, delta)?.to_density_matrix()?;
        Ok(TonguePoint { delta, coupling, concurrence: concurrence(&rho)? })
    })
    .into_iter()
    .collect()
}
