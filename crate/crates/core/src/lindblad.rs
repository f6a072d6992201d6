//! Master equations for one and two quantum van der Pol oscillators, the
//! two-spin model they reduce to when two-phonon loss dominates, and dense
//! steady-state / time-evolution solvers.
//!
//! All rates and frequencies are in units of the linear gain `kappa1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation, dissipator, hamiltonian_part, tensor, vectorize, DensityMatrix, Operator,
    Superoperator,
};

/// Default RK4 step in units of `1/kappa1`.
pub const DEFAULT_DT: f64 = 5e-4;

/// Single oscillator with gain `kappa1` and two-phonon loss `kappa2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleOscParams {
    pub omega: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub truncation: usize,
}

impl SingleOscParams {
    pub fn new(omega: f64, kappa2: f64, truncation: usize) -> Result<Self> {
        let p = SingleOscParams { omega, kappa1: 1.0, kappa2, truncation };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_rates(self.kappa1, self.kappa2)?;
        check_truncation(self.truncation)
    }
}

/// Two oscillators coupled through the collective jump operator `a1 − a2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoOscParams {
    pub omega1: f64,
    pub omega2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub coupling: f64,
    pub truncation: usize,
}

impl TwoOscParams {
    /// Oscillators at `±delta/2` around zero.
    pub fn new(coupling: f64, delta: f64, kappa2: f64, truncation: usize) -> Result<Self> {
        let p = TwoOscParams {
            omega1: -0.5 * delta,
            omega2: 0.5 * delta,
            kappa1: 1.0,
            kappa2,
            coupling,
            truncation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn detuning(&self) -> f64 {
        self.omega2 - self.omega1
    }

    pub fn validate(&self) -> Result<()> {
        check_rates(self.kappa1, self.kappa2)?;
        check_coupling(self.coupling)?;
        check_truncation(self.truncation)
    }
}

/// Two spins with incoherent pump `kappa1`, decay `2·kappa1`, and collective
/// decay `σ1⁻ − σ2⁻` at rate `coupling`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinModelParams {
    pub omega1: f64,
    pub omega2: f64,
    pub kappa1: f64,
    pub coupling: f64,
}

impl SpinModelParams {
    pub fn new(coupling: f64, delta: f64) -> Result<Self> {
        let p = SpinModelParams { omega1: -0.5 * delta, omega2: 0.5 * delta, kappa1: 1.0, coupling };
        p.validate()?;
        Ok(p)
    }

    pub fn detuning(&self) -> f64 {
        self.omega2 - self.omega1
    }

    pub fn validate(&self) -> Result<()> {
        check_rates(self.kappa1, 1.0)?;
        check_coupling(self.coupling)
    }
}

fn check_rates(kappa1: f64, kappa2: f64) -> Result<()> {
    if !(kappa1 > 0.0 && kappa1.is_finite()) || !(kappa2 > 0.0 && kappa2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rates must be positive and finite (kappa1 = {kappa1}, kappa2 = {kappa2})"
        )));
    }
    Ok(())
}

fn check_coupling(v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter(format!("coupling must be >= 0, got {v}")));
    }
    Ok(())
}

fn check_truncation(t: usize) -> Result<()> {
    if t < 2 {
        return Err(Error::InvalidDimension(t));
    }
    Ok(())
}

/// Lowering operators of both modes embedded in the product space.
pub fn two_mode_ladders(truncation: usize) -> Result<(Operator, Operator)> {
    let a = annihilation(truncation)?;
    let id = Operator::identity(truncation);
    Ok((tensor(&a, &id), tensor(&id, &a)))
}

pub fn build_single_vdp(p: &SingleOscParams) -> Result<Superoperator> {
    p.validate()?;
    let a = annihilation(p.truncation)?;
    let h = (&a.dagger() * &a).scale(p.omega);
    Ok(hamiltonian_part(&h)?
        + dissipator(&a.dagger()).scale(p.kappa1)
        + dissipator(&(&a * &a)).scale(p.kappa2))
}

pub fn build_two_vdp(p: &TwoOscParams) -> Result<Superoperator> {
    p.validate()?;
    let (a1, a2) = two_mode_ladders(p.truncation)?;
    let h = &(&a1.dagger() * &a1).scale(p.omega1) + &(&a2.dagger() * &a2).scale(p.omega2);
    let mut l = hamiltonian_part(&h)?;
    for a in [&a1, &a2] {
        l = l + dissipator(&a.dagger()).scale(p.kappa1) + dissipator(&(a * a)).scale(p.kappa2);
    }
    Ok(l + dissipator(&(&a1 - &a2)).scale(p.coupling))
}

pub fn build_spin_model(p: &SpinModelParams) -> Result<Superoperator> {
    p.validate()?;
    let (s1, s2) = two_mode_ladders(2)?;
    let h = &(&s1.dagger() * &s1).scale(p.omega1) + &(&s2.dagger() * &s2).scale(p.omega2);
    let mut l = hamiltonian_part(&h)?;
    for s in [&s1, &s2] {
        l = l + dissipator(&s.dagger()).scale(p.kappa1) + dissipator(s).scale(2.0 * p.kappa1);
    }
    Ok(l + dissipator(&(&s1 - &s2)).scale(p.coupling))
}

/// Unique stationary state of `l`, from the right singular vector of its
/// smallest singular value. Falls back to long-time evolution if the SVD does
/// not converge.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    let d = l.dim();
    let m = l.matrix();
    let Some(svd) = m.clone().try_svd(false, true, 1e-15, 10_000) else {
        return steady_state_by_evolution(l);
    };
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let sigma_max = sv[order[order.len() - 1]];
    let second = sv[order[1]];
    if second <= 1e-10 * sigma_max {
        return Err(Error::DegenerateSteadyState(second));
    }
    let v_t = svd.v_t.as_ref().expect("requested V^H");
    let null: Vec<Complex64> = v_t.row(order[0]).iter().map(|z| z.conj()).collect();
    let rho = DMatrix::from_column_slice(d, d, &null);
    DensityMatrix::from_unnormalized(rho).map_err(|e| match e {
        Error::State(msg) => Error::NumericalFailure(format!("steady state invalid: {msg}")),
        other => other,
    })
}

fn steady_state_by_evolution(l: &Superoperator) -> Result<DensityMatrix> {
    let d = l.dim();
    let dt = (0.5 / l.norm_inf()).min(DEFAULT_DT);
    let mut rho = DensityMatrix::maximally_mixed(d);
    for _ in 0..100 {
        let next = evolve_rk4(l, &rho, dt, 50.0)?;
        let change = next.max_abs_diff(&rho);
        rho = next;
        if change < 1e-12 {
            return Ok(rho);
        }
    }
    Err(Error::NumericalFailure("time evolution did not reach a steady state".into()))
}

/// `‖L vec(ρ)‖∞`.
pub fn stationarity_residual(l: &Superoperator, rho: &DensityMatrix) -> f64 {
    (l.matrix() * vectorize(rho)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Shrinks `dt` so that `kappa2·dt ≤ 0.1`.
pub fn stiff_dt(dt: f64, kappa2: f64) -> f64 {
    if kappa2 * dt > 0.1 {
        0.1 / kappa2
    } else {
        dt
    }
}

/// Fixed-step RK4 on `v̇ = L v` over `[0, t_final]`.
pub fn evolve_rk4(l: &Superoperator, rho0: &DensityMatrix, dt: f64, t_final: f64) -> Result<DensityMatrix> {
    let traj = evolve_rk4_trajectory(l, rho0, dt, t_final, 0)?;
    let (_, last) = traj.into_iter().last().expect("trajectory has a final sample");
    DensityMatrix::from_unnormalized(last)
}

/// Like [`evolve_rk4`], returning the raw (unrenormalized) state every
/// `sample_every` steps plus the final one. `sample_every = 0` keeps only the
/// initial and final states.
pub fn evolve_rk4_trajectory(
    l: &Superoperator,
    rho0: &DensityMatrix,
    dt: f64,
    t_final: f64,
    sample_every: usize,
) -> Result<Vec<(f64, DMatrix<Complex64>)>> {
    if rho0.dim() != l.dim() {
        return Err(Error::DimensionMismatch { expected: l.dim(), found: rho0.dim() });
    }
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt}, t_final = {t_final}")));
    }
    let d = l.dim();
    let steps = (t_final / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };
    let m = l.matrix();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);

    let mut v = vectorize(rho0);
    let n = v.len();
    let mut k1 = DVector::zeros(n);
    let mut k2 = DVector::zeros(n);
    let mut k3 = DVector::zeros(n);
    let mut k4 = DVector::zeros(n);
    let mut tmp = DVector::zeros(n);
    let mut out = vec![(0.0, rho0.matrix().clone())];

    for step in 1..=steps {
        k1.gemv(one, m, &v, zero);
        tmp.copy_from(&v);
        tmp.axpy(Complex64::new(0.5 * h, 0.0), &k1, one);
        k2.gemv(one, m, &tmp, zero);
        tmp.copy_from(&v);
        tmp.axpy(Complex64::new(0.5 * h, 0.0), &k2, one);
        k3.gemv(one, m, &tmp, zero);
        tmp.copy_from(&v);
        tmp.axpy(Complex64::new(h, 0.0), &k3, one);
        k4.gemv(one, m, &tmp, zero);
        for i in 0..n {
            v[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        if (sample_every > 0 && step % sample_every == 0) || step == steps {
            out.push((step as f64 * h, DMatrix::from_column_slice(d, d, v.as_slice())));
        }
    }
    if steps == 0 {
        out.push((0.0, rho0.matrix().clone()));
    }

    let last = &out[out.len() - 1].1;
    let drift = (last.trace() - one).norm();
    if !drift.is_finite() || drift > 1e-6 {
        return Err(Error::StepSize(drift));
    }
    Ok(out)
}

/// `tr(ρ O)`.
pub fn expectation(rho: &DensityMatrix, o: &Operator) -> Result<Complex64> {
    if rho.dim() != o.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: o.dim() });
    }
    let m = rho.matrix();
    let a = o.matrix();
    let d = rho.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += m[(i, k)] * a[(k, i)];
        }
    }
    Ok(acc)
}

/// Restricts a two-oscillator state to the `{0,1}⊗{0,1}` block, in the basis
/// `|00⟩, |01⟩, |10⟩, |11⟩` (first index: oscillator 1).
pub fn qubit_block(rho: &DensityMatrix, truncation: usize) -> Result<DMatrix<Complex64>> {
    if rho.dim() != truncation * truncation {
        return Err(Error::DimensionMismatch { expected: truncation * truncation, found: rho.dim() });
    }
    let idx = [0, 1, truncation, truncation + 1];
    Ok(DMatrix::from_fn(4, 4, |i, j| rho.get(idx[i], idx[j])))
}
