//! Classical van der Pol amplitude equations: a dissipatively coupled pair
//! with phase-locking detection, and the all-to-all ensemble.
//!
//! Integration is in Cartesian complex amplitudes so that amplitude death
//! (`r → 0`) is not a coordinate singularity.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distribution::FrequencyDistribution;
use crate::ensemble::{sample_frequencies, Sampling};
use crate::error::{Error, Result};
use crate::output::sig12;
use crate::par::Exec;

/// `κ2 = κ1/2` puts the limit cycle at unit radius.
pub const DEFAULT_KAPPA2: f64 = 0.5;
pub const DEFAULT_DT: f64 = 0.01;
/// Both amplitudes below this count as amplitude death.
pub const DEATH_RADIUS: f64 = 1e-6;
/// Largest `h·rate` allowed before a step is split into substeps.
const RK4_STABLE_STEP: f64 = 2.0;

/// Radius `√(κ1/2κ2)` of the uncoupled limit cycle.
pub fn limit_cycle_radius(kappa1: f64, kappa2: f64) -> f64 {
    (kappa1 / (2.0 * kappa2)).sqrt()
}

/// One classical RK4 step of `y' = f(y)` on complex vectors.
fn rk4_step<F>(y: &mut [Complex64], h: f64, f: &F, scratch: &mut [Vec<Complex64>; 5])
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let [k1, k2, k3, k4, tmp] = scratch;
    f(y, k1);
    for i in 0..y.len() {
        tmp[i] = y[i] + k1[i] * (0.5 * h);
    }
    f(tmp, k2);
    for i in 0..y.len() {
        tmp[i] = y[i] + k2[i] * (0.5 * h);
    }
    f(tmp, k3);
    for i in 0..y.len() {
        tmp[i] = y[i] + k3[i] * h;
    }
    f(tmp, k4);
    for i in 0..y.len() {
        y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
    }
}

fn scratch(n: usize) -> [Vec<Complex64>; 5] {
    std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalTwoOscState {
    pub alpha1: Complex64,
    pub alpha2: Complex64,
}

impl ClassicalTwoOscState {
    pub fn from_polar(r1: f64, r2: f64, theta: f64) -> Self {
        ClassicalTwoOscState { alpha1: Complex64::new(r1, 0.0), alpha2: Complex64::from_polar(r2, theta) }
    }

    /// `(r1, r2, θ)` with `θ = θ2 − θ1` in `(−π, π]`.
    pub fn polar(&self) -> (f64, f64, f64) {
        (self.alpha1.norm(), self.alpha2.norm(), self.phase_difference())
    }

    pub fn phase_difference(&self) -> f64 {
        (self.alpha2 * self.alpha1.conj()).arg()
    }
}

/// Parameters of a coupled pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalPair {
    pub omega1: f64,
    pub omega2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub coupling: f64,
}

impl ClassicalPair {
    /// Symmetric detuning `ω1,2 = ∓Δ/2`.
    pub fn new(delta: f64, coupling: f64, kappa1: f64, kappa2: f64) -> Self {
        ClassicalPair { omega1: -0.5 * delta, omega2: 0.5 * delta, kappa1, kappa2, coupling }
    }
}

pub fn classical_two_rhs(
    state: &ClassicalTwoOscState,
    omega1: f64,
    omega2: f64,
    kappa1: f64,
    kappa2: f64,
    v: f64,
) -> ClassicalTwoOscState {
    let (a1, a2) = (state.alpha1, state.alpha2);
    let own = |a: Complex64, w: f64| Complex64::new(0.0, -w) * a + a * (kappa1 - 2.0 * kappa2 * a.norm_sqr());
    ClassicalTwoOscState { alpha1: own(a1, omega1) + (a2 - a1) * v, alpha2: own(a2, omega2) + (a1 - a2) * v }
}

fn pair_substeps(p: &ClassicalPair, dt: f64, radius: f64) -> usize {
    let rate = p.omega1.abs().max(p.omega2.abs()) + 2.0 * p.coupling + p.kappa1 + 4.0 * p.kappa2 * radius * radius;
    ((dt * rate / RK4_STABLE_STEP).ceil() as usize).max(1)
}

/// Integrates the pair for `t` with step `dt`, calling `observe(t, state)`
/// after every step.
pub fn integrate_pair<O>(p: &ClassicalPair, state: ClassicalTwoOscState, dt: f64, t: f64, mut observe: O) -> Result<ClassicalTwoOscState>
where
    O: FnMut(f64, &ClassicalTwoOscState),
{
    if !(dt > 0.0 && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("need dt > 0 and t >= 0, got {dt}, {t}")));
    }
    let steps = (t / dt).ceil() as usize;
    if steps == 0 {
        return Ok(state);
    }
    let dt = t / steps as f64;
    let radius = state.alpha1.norm().max(state.alpha2.norm()).max(limit_cycle_radius(p.kappa1, p.kappa2));
    let sub = pair_substeps(p, dt, radius);
    let h = dt / sub as f64;
    let f = |y: &[Complex64], out: &mut [Complex64]| {
        let d = classical_two_rhs(
            &ClassicalTwoOscState { alpha1: y[0], alpha2: y[1] },
            p.omega1,
            p.omega2,
            p.kappa1,
            p.kappa2,
            p.coupling,
        );
        out[0] = d.alpha1;
        out[1] = d.alpha2;
    };
    let mut y = [state.alpha1, state.alpha2];
    let mut work = scratch(2);
    for step in 1..=steps {
        for _ in 0..sub {
            rk4_step(&mut y, h, &f, &mut work);
        }
        if !(y[0].norm().is_finite() && y[1].norm().is_finite()) {
            return Err(Error::NumericalFailure(format!("classical pair diverged at t = {}", step as f64 * dt)));
        }
        observe(step as f64 * dt, &ClassicalTwoOscState { alpha1: y[0], alpha2: y[1] });
    }
    Ok(ClassicalTwoOscState { alpha1: y[0], alpha2: y[1] })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LockingOutcome {
    /// Phase difference settles; `theta` is its circular mean.
    Locked { theta: f64 },
    Unlocked,
    /// Both amplitudes collapse to zero.
    Death,
}

impl LockingOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            LockingOutcome::Locked { .. } => "locked",
            LockingOutcome::Unlocked => "unlocked",
            LockingOutcome::Death => "death",
        }
    }

    pub fn is_locked(&self) -> bool {
        matches!(self, LockingOutcome::Locked { .. })
    }
}

impl fmt::Display for LockingOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockingOptions {
    pub t_transient: f64,
    pub t_observe: f64,
    pub dt: f64,
}

impl Default for LockingOptions {
    fn default() -> Self {
        LockingOptions { t_transient: 200.0, t_observe: 500.0, dt: DEFAULT_DT }
    }
}

/// Integrates the pair from `r1 = r2 = √(κ1/2κ2)`, `θ = 0.1` and classifies
/// the long-time behaviour. Locked means the unwrapped phase difference
/// drifts by less than `2π` and its mean rate is below `1e-3·κ1`.
pub fn detect_locking(delta: f64, v: f64, kappa1: f64, kappa2: f64, opts: &LockingOptions) -> Result<LockingOutcome> {
    if !(opts.t_transient >= 0.0 && opts.t_observe > 0.0 && kappa1 > 0.0 && kappa2 > 0.0 && v >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "invalid locking run: delta={delta}, V={v}, kappa1={kappa1}, kappa2={kappa2}, {opts:?}"
        )));
    }
    let p = ClassicalPair::new(delta, v, kappa1, kappa2);
    let r = limit_cycle_radius(kappa1, kappa2);
    let start = ClassicalTwoOscState::from_polar(r, r, 0.1);
    let settled = integrate_pair(&p, start, opts.dt, opts.t_transient, |_, _| {})?;

    let theta0 = settled.phase_difference();
    let mut last = theta0;
    let mut unwrapped = theta0;
    let mut max_excursion = 0.0f64;
    let mut circular = Complex64::new(0.0, 0.0);
    let end = integrate_pair(&p, settled, opts.dt, opts.t_observe, |_, s| {
        let th = s.phase_difference();
        let mut d = th - last;
        if d > PI {
            d -= 2.0 * PI;
        } else if d < -PI {
            d += 2.0 * PI;
        }
        unwrapped += d;
        last = th;
        max_excursion = max_excursion.max((unwrapped - theta0).abs());
        circular += Complex64::from_polar(1.0, th);
    })?;

    if end.alpha1.norm() < DEATH_RADIUS && end.alpha2.norm() < DEATH_RADIUS {
        return Ok(LockingOutcome::Death);
    }
    let mean_rate = (unwrapped - theta0) / opts.t_observe;
    if max_excursion < 2.0 * PI && mean_rate.abs() < 1e-3 * kappa1 {
        Ok(LockingOutcome::Locked { theta: circular.arg() })
    } else {
        Ok(LockingOutcome::Unlocked)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldPoint {
    pub delta: f64,
    pub coupling: f64,
    pub outcome: LockingOutcome,
}

pub fn arnold_scan(delta_grid: &[f64], v_grid: &[f64], kappa1: f64, kappa2: f64, opts: &LockingOptions) -> Result<Vec<ArnoldPoint>> {
    arnold_scan_with(Exec::default(), delta_grid, v_grid, kappa1, kappa2, opts)
}

/// Locking outcome on the grid, `Δ` outer and `V` inner.
pub fn arnold_scan_with(
    exec: Exec,
    delta_grid: &[f64],
    v_grid: &[f64],
    kappa1: f64,
    kappa2: f64,
    opts: &LockingOptions,
) -> Result<Vec<ArnoldPoint>> {
    let grid: Vec<(f64, f64)> = delta_grid.iter().flat_map(|&d| v_grid.iter().map(move |&v| (d, v))).collect();
    exec.map(&grid, |&(delta, coupling)| {
        detect_locking(delta, coupling, kappa1, kappa2, opts).map(|outcome| ArnoldPoint { delta, coupling, outcome })
    })
    .into_iter()
    .collect()
}

pub fn write_arnold_csv<W: Write>(points: &[ArnoldPoint], mut w: W) -> io::Result<()> {
    writeln!(w, "delta,V,outcome,theta")?;
    for p in points {
        let theta = match p.outcome {
            LockingOutcome::Locked { theta } => sig12(theta),
            _ => "nan".into(),
        };
        writeln!(w, "{},{},{},{}", sig12(p.delta), sig12(p.coupling), p.outcome, theta)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEnsembleConfig {
    pub n: usize,
    pub coupling: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub dist: FrequencyDistribution,
    pub seed: u64,
    pub sampling: Sampling,
    pub dt: f64,
    pub t_final: f64,
    pub averaging_window: f64,
}

impl Default for ClassicalEnsembleConfig {
    fn default() -> Self {
        ClassicalEnsembleConfig {
            n: 1000,
            coupling: 0.0,
            kappa1: 1.0,
            kappa2: DEFAULT_KAPPA2,
            dist: FrequencyDistribution::Delta,
            seed: 0,
            sampling: Sampling::Stratified,
            dt: DEFAULT_DT,
            t_final: 500.0,
            averaging_window: 0.25,
        }
    }
}

impl ClassicalEnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2
            || !(self.dt > 0.0 && self.t_final > 0.0)
            || !(self.kappa1 > 0.0 && self.kappa2 > 0.0 && self.coupling >= 0.0)
            || !(self.averaging_window > 0.0 && self.averaging_window < 1.0)
        {
            return Err(Error::InvalidParameter(format!("invalid classical ensemble config {self:?}")));
        }
        self.dist.validate()
    }

    /// Oscillators on the limit cycle with phases drawn from the seeded stream.
    pub fn initial_amplitudes(&self) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let r = limit_cycle_radius(self.kappa1, self.kappa2);
        (0..self.n).map(|_| Complex64::from_polar(r, rng.random_range(0.0..2.0 * PI))).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalRun {
    /// `|A|` averaged over the final window.
    pub order_parameter: f64,
    pub omegas: Vec<f64>,
    pub final_amplitudes: Vec<Complex64>,
}

/// Runs the ensemble from the default random-phase start.
pub fn classical_ensemble_run(config: &ClassicalEnsembleConfig) -> Result<ClassicalRun> {
    config.validate()?;
    let omegas = sample_frequencies(&config.dist, config.n, config.seed, config.sampling)?;
    classical_ensemble_from(config, omegas, config.initial_amplitudes())
}

/// RK4 on `α̇n = −iωn αn + αn(κ1 − 2κ2|αn|²) + V(A − αn)` with `A` the mean amplitude.
pub fn classical_ensemble_from(
    config: &ClassicalEnsembleConfig,
    omegas: Vec<f64>,
    mut alphas: Vec<Complex64>,
) -> Result<ClassicalRun> {
    config.validate()?;
    if omegas.len() != alphas.len() {
        return Err(Error::DimensionMismatch { expected: omegas.len(), found: alphas.len() });
    }
    let (k1, k2, v) = (config.kappa1, config.kappa2, config.coupling);
    let n = alphas.len() as f64;
    let steps = (config.t_final / config.dt).ceil() as usize;
    let dt = config.t_final / steps as f64;
    let max_omega = omegas.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let radius = alphas.iter().fold(limit_cycle_radius(k1, k2), |m, a| m.max(a.norm()));
    let rate = max_omega + v + k1 + 4.0 * k2 * radius * radius;
    let sub = ((dt * rate / RK4_STABLE_STEP).ceil() as usize).max(1);
    let h = dt / sub as f64;
    let rot: Vec<Complex64> = omegas.iter().map(|&w| Complex64::new(k1, -w)).collect();

    let f = |y: &[Complex64], out: &mut [Complex64]| {
        let a = y.iter().sum::<Complex64>() / n;
        for i in 0..y.len() {
            out[i] = y[i] * (rot[i] - 2.0 * k2 * y[i].norm_sqr()) + (a - y[i]) * v;
        }
    };

    let first_averaged = steps - ((steps as f64 * config.averaging_window).floor() as usize).max(1) + 1;
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut work = scratch(alphas.len());
    for step in 1..=steps {
        for _ in 0..sub {
            rk4_step(&mut alphas, h, &f, &mut work);
        }
        if step >= first_averaged {
            let a = alphas.iter().sum::<Complex64>() / n;
            if !a.norm().is_finite() {
                return Err(Error::NumericalFailure(format!("classical ensemble diverged at t = {}", step as f64 * dt)));
            }
            sum += a.norm();
            count += 1;
        }
    }
    Ok(ClassicalRun { order_parameter: sum / count as f64, omegas, final_amplitudes: alphas })
}

/// `(V, |A|)` for each coupling, sharing frequencies and initial phases.
pub fn classical_transition_scan_with(
    exec: Exec,
    template: &ClassicalEnsembleConfig,
    couplings: &[f64],
) -> Result<Vec<(f64, f64)>> {
    template.validate()?;
    let omegas = sample_frequencies(&template.dist, template.n, template.seed, template.sampling)?;
    let init = template.initial_amplitudes();
    exec.map(couplings, |&v| {
        let config = ClassicalEnsembleConfig { coupling: v, ..template.clone() };
        classical_ensemble_from(&config, omegas.clone(), init.clone()).map(|r| (v, r.order_parameter))
    })
    .into_iter()
    .collect()
}
