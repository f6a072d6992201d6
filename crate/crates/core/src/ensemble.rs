//! Mean-field dynamics of N all-to-all dissipatively coupled oscillators,
//! each truncated to the three lowest Fock levels. Rates are in units of `κ1`.
//!
//! Oscillators that share a frequency and an initial state follow identical
//! trajectories, so the integrator evolves one representative per class with
//! a weight. When the frequency sample and the initial state are symmetric
//! under `ω → −ω` with conjugated coherences, the mean field stays real and
//! each `±ω` pair is evolved once.

use std::collections::HashMap;
use std::f64::consts::SQRT_2;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::critical::unsync_state;
use crate::distribution::FrequencyDistribution;
use crate::error::{Error, Result};
use crate::lindblad::DEFAULT_DT;
use crate::output::sig12;
use crate::par::Exec;

/// Symmetry-breaking kick added to every `ρ10` in the default initial state.
pub const DEFAULT_PERTURBATION: f64 = 1e-3;
/// Diagonal-sum drift that aborts a run.
pub const MAX_DRIFT: f64 = 1e-4;
/// `|A|` above which a scan point counts as synchronized.
pub const CROSSING_THRESHOLD: f64 = 0.01;
/// Largest `h·|λ|` allowed before a step is split into substeps.
const RK4_STABLE_STEP: f64 = 2.0;
/// Chunk length for the per-stage reduction; fixed so that sums do not
/// depend on the number of threads.
const CHUNK: usize = 512;
/// Below this many classes a stage is not worth splitting across threads.
const PAR_MIN_CLASSES: usize = 4 * CHUNK;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Quantiles `G⁻¹((n − 1/2)/N)` of the distribution.
    #[default]
    Stratified,
    /// Independent draws from a seeded ChaCha8 stream.
    Random,
}

/// Frequencies for `n` oscillators. The delta distribution gives all zeros.
pub fn sample_frequencies(dist: &FrequencyDistribution, n: usize, seed: u64, sampling: Sampling) -> Result<Vec<f64>> {
    dist.validate()?;
    if let FrequencyDistribution::Delta = dist {
        return Ok(vec![0.0; n]);
    }
    Ok(match sampling {
        Sampling::Stratified => {
            // g is even: fill the lower half and mirror it so pairs cancel exactly
            let mut w = vec![0.0; n];
            for k in 0..n / 2 {
                let x = dist.quantile((k as f64 + 0.5) / n as f64);
                w[k] = x;
                w[n - 1 - k] = -x;
            }
            w
        }
        Sampling::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| {
                    // open interval keeps the Lorentzian quantile finite
                    let q = loop {
                        let q: f64 = rng.random();
                        if q > 0.0 {
                            break q;
                        }
                    };
                    dist.quantile(q)
                })
                .collect()
        }
    })
}

/// Independent density-matrix elements of one oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SiteState {
    pub p00: f64,
    pub p11: f64,
    pub p22: f64,
    pub r10: Complex64,
    pub r21: Complex64,
    pub r20: Complex64,
}

impl SiteState {
    pub fn diagonal(p00: f64, p11: f64, p22: f64) -> Self {
        SiteState { p00, p11, p22, ..Default::default() }
    }

    /// This oscillator's `⟨a⟩ = ρ10 + √2 ρ21`.
    pub fn amplitude(&self) -> Complex64 {
        self.r10 + SQRT_2 * self.r21
    }

    pub fn trace(&self) -> f64 {
        self.p00 + self.p11 + self.p22
    }

    pub fn conj(&self) -> Self {
        SiteState { r10: self.r10.conj(), r21: self.r21.conj(), r20: self.r20.conj(), ..*self }
    }

    /// Applies the phase rotation `a → e^{iβ}a`.
    pub fn rotate(&self, beta: f64) -> Self {
        let u = Complex64::from_polar(1.0, beta);
        SiteState { r10: self.r10 * u, r21: self.r21 * u, r20: self.r20 * u * u, ..*self }
    }

    #[cfg(test)]
    fn axpy(&self, h: f64, k: &SiteState) -> SiteState {
        SiteState {
            p00: self.p00 + h * k.p00,
            p11: self.p11 + h * k.p11,
            p22: self.p22 + h * k.p22,
            r10: self.r10 + k.r10 * h,
            r21: self.r21 + k.r21 * h,
            r20: self.r20 + k.r20 * h,
        }
    }

    fn max_abs(&self) -> f64 {
        [self.p00.abs(), self.p11.abs(), self.p22.abs(), self.r10.norm(), self.r21.norm(), self.r20.norm()]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Full 3×3 density matrix, row-major.
    pub fn to_matrix(&self) -> [[Complex64; 3]; 3] {
        let d = |x: f64| Complex64::new(x, 0.0);
        [
            [d(self.p00), self.r10.conj(), self.r20.conj()],
            [self.r10, d(self.p11), self.r21.conj()],
            [self.r20, self.r21, d(self.p22)],
        ]
    }
}

/// Time derivative of one oscillator in the mean field `a` (`κ1 = 1`).
#[inline(always)]
pub fn site_derivative(s: &SiteState, omega: f64, a: Complex64, v: f64, kappa2: f64) -> SiteState {
    let ac = a.conj();
    let iw = Complex64::new(0.0, omega);
    let x10 = ac * s.r10;
    let x21 = ac * s.r21;
    SiteState {
        p00: -2.0 * s.p00 + 4.0 * kappa2 * s.p22 - v * (2.0 * x10.re - 2.0 * s.p11),
        p11: 2.0 * s.p00 - 4.0 * s.p11 + v * (-2.0 * s.p11 + 4.0 * s.p22 + 2.0 * (x10.re - SQRT_2 * x21.re)),
        p22: 4.0 * s.p11 - 4.0 * kappa2 * s.p22 + v * (-4.0 * s.p22 + 2.0 * SQRT_2 * x21.re),
        r10: (-3.0 - iw) * s.r10
            + v * (-s.r10 + 2.0 * SQRT_2 * s.r21 - SQRT_2 * ac * s.r20 + a * (s.p00 - s.p11)),
        r21: (-2.0 * kappa2 - 2.0 - iw) * s.r21
            + 2.0 * SQRT_2 * s.r10
            + v * (-3.0 * s.r21 + ac * s.r20 + SQRT_2 * a * (s.p11 - s.p22)),
        r20: (-1.0 - 2.0 * kappa2 - 2.0 * iw) * s.r20 + v * (-2.0 * s.r20 + a * (SQRT_2 * s.r10 - s.r21)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState {
    pub omegas: Vec<f64>,
    pub sites: Vec<SiteState>,
}

impl MeanFieldState {
    pub fn new(omegas: Vec<f64>, sites: Vec<SiteState>) -> Result<Self> {
        if omegas.len() != sites.len() {
            return Err(Error::DimensionMismatch { expected: omegas.len(), found: sites.len() });
        }
        Ok(MeanFieldState { omegas, sites })
    }

    /// Every oscillator at the unsynchronized fixed point for coupling `v`.
    pub fn unsynchronized(omegas: Vec<f64>, kappa2: f64, v: f64) -> Self {
        let u = unsync_state(1.0, kappa2, v);
        let sites = vec![SiteState::diagonal(u.rho00, u.rho11, u.rho22); omegas.len()];
        MeanFieldState { omegas, sites }
    }

    /// Default starting point: the unsynchronized state with `ρ10 += ε`.
    pub fn perturbed(omegas: Vec<f64>, kappa2: f64, v: f64, eps: f64) -> Self {
        let mut s = Self::unsynchronized(omegas, kappa2, v);
        for site in &mut s.sites {
            site.r10 += eps;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// `A = (1/N) Σ (ρ10 + √2 ρ21)`, summed in index order.
    pub fn mean_field(&self) -> Complex64 {
        self.sites.iter().map(SiteState::amplitude).sum::<Complex64>() / self.sites.len() as f64
    }

    pub fn rotate(&self, beta: f64) -> Self {
        MeanFieldState { omegas: self.omegas.clone(), sites: self.sites.iter().map(|s| s.rotate(beta)).collect() }
    }

    pub fn max_trace_error(&self) -> f64 {
        self.sites.iter().map(|s| (s.trace() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Derivative of every oscillator, with `A` recomputed from the state.
pub fn mean_field_rhs(state: &MeanFieldState, v: f64, kappa2: f64) -> Vec<SiteState> {
    let a = state.mean_field();
    state.sites.iter().zip(&state.omegas).map(|(s, &w)| site_derivative(s, w, a, v, kappa2)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n: usize,
    pub coupling: f64,
    pub kappa2: f64,
    pub dist: FrequencyDistribution,
    pub dt: f64,
    pub t_final: f64,
    /// Fraction of the recorded trajectory tail averaged by [`order_parameter`].
    pub averaging_window: f64,
    pub seed: u64,
    pub sampling: Sampling,
    /// Record `A(t)` every this many steps of size `dt`.
    pub record_every: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n: 1000,
            coupling: 0.0,
            kappa2: 100.0,
            dist: FrequencyDistribution::Delta,
            dt: DEFAULT_DT,
            t_final: 1e3,
            averaging_window: 0.25,
            seed: 0,
            sampling: Sampling::Stratified,
            record_every: 100,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n < 2 {
            return bad(format!("need at least 2 oscillators, got {}", self.n));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be positive, got {}", self.t_final));
        }
        if !(self.averaging_window > 0.0 && self.averaging_window < 1.0) {
            return bad(format!("averaging window must lie in (0, 1), got {}", self.averaging_window));
        }
        if !(self.kappa2 > 0.0 && self.coupling >= 0.0 && self.coupling.is_finite()) {
            return bad(format!("need kappa2 > 0 and V >= 0, got {} and {}", self.kappa2, self.coupling));
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        self.dist.validate()
    }

    pub fn frequencies(&self) -> Result<Vec<f64>> {
        sample_frequencies(&self.dist, self.n, self.seed, self.sampling)
    }

    /// Unsynchronized state plus the default kick, for this config's coupling.
    pub fn default_initial_state(&self, omegas: Vec<f64>) -> MeanFieldState {
        MeanFieldState::perturbed(omegas, self.kappa2, self.coupling, DEFAULT_PERTURBATION)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub mean_field: Vec<Complex64>,
    pub final_state: MeanFieldState,
    /// RK4 substeps taken per `dt` for stability.
    pub substeps: usize,
    /// Number of distinct oscillator classes actually evolved.
    pub classes: usize,
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,re_A,im_A,abs_A")?;
        for (t, a) in self.times.iter().zip(&self.mean_field) {
            writeln!(w, "{},{},{},{}", sig12(*t), sig12(a.re), sig12(a.im), sig12(a.norm()))?;
        }
        Ok(())
    }
}

/// One class of identical oscillators.
#[derive(Debug, Clone, Copy)]
struct Class {
    state: SiteState,
    omega: f64,
    weight: f64,
    /// Stands for itself and its mirror at `−ω`.
    folded: bool,
}

fn key(omega: f64, s: &SiteState) -> [u64; 10] {
    // adding 0.0 maps -0.0 to 0.0, which is the same oscillator
    let b = |x: f64| (x + 0.0).to_bits();
    [
        b(omega),
        b(s.p00),
        b(s.p11),
        b(s.p22),
        b(s.r10.re),
        b(s.r10.im),
        b(s.r21.re),
        b(s.r21.im),
        b(s.r20.re),
        b(s.r20.im),
    ]
}

/// Classes of identical oscillators, plus for every oscillator the class it
/// belongs to and whether it is the conjugate mirror of that class.
struct Classes {
    classes: Vec<Class>,
    members: Vec<(usize, bool)>,
}

fn build_classes(state: &MeanFieldState) -> Classes {
    let mut index: HashMap<[u64; 10], usize> = HashMap::new();
    let mut reps: Vec<(f64, SiteState, f64)> = Vec::new();
    let mut member_of = Vec::with_capacity(state.len());
    for (s, &w) in state.sites.iter().zip(&state.omegas) {
        let w = w + 0.0;
        let id = *index.entry(key(w, s)).or_insert_with(|| {
            reps.push((w, *s, 0.0));
            reps.len() - 1
        });
        reps[id].2 += 1.0;
        member_of.push(id);
    }

    let foldable = reps.iter().all(|(w, s, count)| {
        if *w == 0.0 {
            s.r10.im == 0.0 && s.r21.im == 0.0 && s.r20.im == 0.0
        } else {
            index.get(&key(-w, &s.conj())).is_some_and(|&m| reps[m].2 == *count)
        }
    });

    let class = |(omega, state, weight): (f64, SiteState, f64), folded| Class { state, omega, weight, folded };

    if !foldable {
        let classes = reps.into_iter().map(|r| class(r, false)).collect();
        let members = member_of.into_iter().map(|id| (id, false)).collect();
        return Classes { classes, members };
    }

    let mut remap = vec![(usize::MAX, false); reps.len()];
    let mut classes = Vec::new();
    for (id, r) in reps.iter().enumerate() {
        if r.0 >= 0.0 {
            remap[id] = (classes.len(), false);
            classes.push(class(*r, r.0 > 0.0));
        }
    }
    for (id, r) in reps.iter().enumerate() {
        if r.0 < 0.0 {
            let mirror = index[&key(-r.0, &r.1.conj())];
            remap[id] = (remap[mirror].0, true);
        }
    }
    let members = member_of.into_iter().map(|id| remap[id]).collect();
    Classes { classes, members }
}

const LANES: usize = 8;
type Lane = [f64; LANES];
const P00: usize = 0;
const P11: usize = 1;
const P22: usize = 2;
const R10: usize = 3;
const R21: usize = 5;
const R20: usize = 7;

/// `LANES` classes stored component-wise so the stage loop vectorizes.
/// Components: p00, p11, p22, then (re, im) of r10, r21, r20.
#[derive(Debug, Clone, Copy)]
struct Block {
    y: [Lane; 9],
    acc: [Lane; 9],
    st: [Lane; 9],
    omega: Lane,
    /// Weights applied to (re, im) of the amplitude when forming `A`.
    wre: Lane,
    wim: Lane,
}

fn to_components(s: &SiteState) -> [f64; 9] {
    [s.p00, s.p11, s.p22, s.r10.re, s.r10.im, s.r21.re, s.r21.im, s.r20.re, s.r20.im]
}

fn from_components(c: &[f64; 9]) -> SiteState {
    SiteState {
        p00: c[0],
        p11: c[1],
        p22: c[2],
        r10: Complex64::new(c[3], c[4]),
        r21: Complex64::new(c[5], c[6]),
        r20: Complex64::new(c[7], c[8]),
    }
}

fn pack(classes: &[Class]) -> Vec<Block> {
    let filler = SiteState::diagonal(1.0, 0.0, 0.0);
    classes
        .chunks(LANES)
        .map(|chunk| {
            let mut b = Block {
                y: [[0.0; LANES]; 9],
                acc: [[0.0; LANES]; 9],
                st: [[0.0; LANES]; 9],
                omega: [0.0; LANES],
                wre: [0.0; LANES],
                wim: [0.0; LANES],
            };
            for l in 0..LANES {
                let (state, c) = match chunk.get(l) {
                    Some(c) => (c.state, Some(c)),
                    None => (filler, None),
                };
                for (k, x) in to_components(&state).into_iter().enumerate() {
                    b.y[k][l] = x;
                    b.st[k][l] = x;
                }
                if let Some(c) = c {
                    b.omega[l] = c.omega;
                    b.wre[l] = if c.folded { 2.0 * c.weight } else { c.weight };
                    b.wim[l] = if c.folded { 0.0 } else { c.weight };
                }
            }
            b
        })
        .collect()
}

fn unpack(blocks: &[Block], count: usize) -> Vec<SiteState> {
    (0..count)
        .map(|i| {
            let (b, l) = (&blocks[i / LANES], i % LANES);
            from_components(&std::array::from_fn(|k| b.y[k][l]))
        })
        .collect()
}

/// Lane-wise form of [`site_derivative`].
#[inline(always)]
fn derivative_lanes(s: &[Lane; 9], omega: &Lane, ar: f64, ai: f64, v: f64, k2: f64) -> [Lane; 9] {
    let mut d = [[0.0; LANES]; 9];
    let c21 = -2.0 * k2 - 2.0;
    let c20 = -1.0 - 2.0 * k2;
    for l in 0..LANES {
        let (p00, p11, p22) = (s[P00][l], s[P11][l], s[P22][l]);
        let (r10r, r10i) = (s[R10][l], s[R10 + 1][l]);
        let (r21r, r21i) = (s[R21][l], s[R21 + 1][l]);
        let (r20r, r20i) = (s[R20][l], s[R20 + 1][l]);
        let w = omega[l];
        let x10 = ar * r10r + ai * r10i;
        let x21 = ar * r21r + ai * r21i;
        // conj(A)·r20
        let yr = ar * r20r + ai * r20i;
        let yi = ar * r20i - ai * r20r;
        let (d01, d12) = (p00 - p11, p11 - p22);
        let (ur, ui) = (SQRT_2 * r10r - r21r, SQRT_2 * r10i - r21i);

        d[P00][l] = -2.0 * p00 + 4.0 * k2 * p22 - v * (2.0 * x10 - 2.0 * p11);
        d[P11][l] = 2.0 * p00 - 4.0 * p11 + v * (-2.0 * p11 + 4.0 * p22 + 2.0 * (x10 - SQRT_2 * x21));
        d[P22][l] = 4.0 * p11 - 4.0 * k2 * p22 + v * (-4.0 * p22 + 2.0 * SQRT_2 * x21);
        d[R10][l] = -3.0 * r10r + w * r10i + v * (-r10r + 2.0 * SQRT_2 * r21r - SQRT_2 * yr + ar * d01);
        d[R10 + 1][l] = -3.0 * r10i - w * r10r + v * (-r10i + 2.0 * SQRT_2 * r21i - SQRT_2 * yi + ai * d01);
        d[R21][l] = c21 * r21r + w * r21i + 2.0 * SQRT_2 * r10r + v * (-3.0 * r21r + yr + SQRT_2 * ar * d12);
        d[R21 + 1][l] = c21 * r21i - w * r21r + 2.0 * SQRT_2 * r10i + v * (-3.0 * r21i + yi + SQRT_2 * ai * d12);
        d[R20][l] = c20 * r20r + 2.0 * w * r20i + v * (-2.0 * r20r + ar * ur - ai * ui);
        d[R20 + 1][l] = c20 * r20i - 2.0 * w * r20r + v * (-2.0 * r20i + ar * ui + ai * ur);
    }
    d
}

/// Weighted amplitude sum of one block's stage input.
#[inline(always)]
fn block_amplitude(b: &Block, s: &[Lane; 9]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for l in 0..LANES {
        re += b.wre[l] * (s[R10][l] + SQRT_2 * s[R21][l]);
        im += b.wim[l] * (s[R10 + 1][l] + SQRT_2 * s[R21 + 1][l]);
    }
    Complex64::new(re, im)
}

/// Runs the fused RK4 stage `k = f(stage)` on a run of blocks, accumulating
/// `k`, preparing the next stage input, and returning this run's share of
/// the next mean field.
fn rk4_stage(blocks: &mut [Block], a: Complex64, v: f64, k2: f64, h: f64, stage: usize) -> Complex64 {
    match stage {
        0 => rk4_stage_n::<0>(blocks, a, v, k2, h),
        1 => rk4_stage_n::<1>(blocks, a, v, k2, h),
        2 => rk4_stage_n::<2>(blocks, a, v, k2, h),
        _ => rk4_stage_n::<3>(blocks, a, v, k2, h),
    }
}

fn rk4_stage_n<const S: usize>(blocks: &mut [Block], a: Complex64, v: f64, k2: f64, h: f64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let (acc_scale, st_scale) = match S {
        0 => (0.0, 0.5 * h),
        1 => (2.0, 0.5 * h),
        _ => (2.0, h),
    };
    for b in blocks {
        let k = derivative_lanes(&b.st, &b.omega, a.re, a.im, v, k2);
        for c in 0..9 {
            for l in 0..LANES {
                if S < 3 {
                    b.acc[c][l] = if S == 0 { k[c][l] } else { b.acc[c][l] + acc_scale * k[c][l] };
                    b.st[c][l] = b.y[c][l] + st_scale * k[c][l];
                } else {
                    b.y[c][l] += h / 6.0 * (b.acc[c][l] + k[c][l]);
                    b.st[c][l] = b.y[c][l];
                }
            }
        }
        sum += block_amplitude(b, &b.st);
    }
    sum
}

/// Substeps per `dt` so that `h` times the fastest decay rate stays inside
/// the RK4 stability region.
fn substeps_for(dt: f64, v: f64, kappa2: f64, max_omega: f64) -> usize {
    let fastest = (4.0 * kappa2 + 4.0 * v + 4.0).max((1.0 + 2.0 * kappa2 + 2.0 * v).hypot(2.0 * max_omega));
    ((dt * fastest / RK4_STABLE_STEP).ceil() as usize).max(1)
}

/// Integrates the mean-field equations with fixed-step RK4 from `initial`,
/// recording `A` every `record_every` steps (and at `t = 0`).
pub fn integrate(config: &EnsembleConfig, initial: &MeanFieldState) -> Result<Trajectory> {
    integrate_with(Exec::default(), config, initial)
}

pub fn integrate_with(exec: Exec, config: &EnsembleConfig, initial: &MeanFieldState) -> Result<Trajectory> {
    config.validate()?;
    if initial.is_empty() {
        return Err(Error::InvalidParameter("empty ensemble".into()));
    }
    let (v, k2) = (config.coupling, config.kappa2);
    let n = initial.len() as f64;
    let Classes { classes, members } = build_classes(initial);
    let mut blocks = pack(&classes);
    let exec = if classes.len() >= PAR_MIN_CLASSES { exec } else { Exec::Sequential };
    let per_task = CHUNK / LANES;

    let steps = (config.t_final / config.dt).ceil() as usize;
    let dt = config.t_final / steps as f64;
    let max_omega = initial.omegas.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let substeps = substeps_for(dt, v, k2, max_omega);
    let h = dt / substeps as f64;

    let reduce = |parts: Vec<Complex64>| parts.into_iter().sum::<Complex64>() / n;
    let mut a = reduce(
        exec.map_chunks_mut(&mut blocks, per_task, |c| c.iter().map(|b| block_amplitude(b, &b.y)).sum()),
    );

    let capacity = steps / config.record_every + 2;
    let mut times = Vec::with_capacity(capacity);
    let mut mean_field = Vec::with_capacity(capacity);
    times.push(0.0);
    mean_field.push(a);

    for step in 1..=steps {
        for _ in 0..substeps {
            for stage in 0..4 {
                a = reduce(exec.map_chunks_mut(&mut blocks, per_task, |c| rk4_stage(c, a, v, k2, h, stage)));
            }
        }
        if step % config.record_every == 0 || step == steps {
            let states = unpack(&blocks, classes.len());
            let drift = states.iter().map(|s| (s.trace() - 1.0).abs()).fold(0.0, f64::max);
            let finite = a.re.is_finite() && a.im.is_finite() && states.iter().all(|s| s.max_abs().is_finite());
            if !finite || drift > MAX_DRIFT {
                return Err(Error::Instability(if finite { drift } else { f64::INFINITY }));
            }
            times.push(step as f64 * dt);
            mean_field.push(a);
        }
    }

    let states = unpack(&blocks, classes.len());
    let sites = members.iter().map(|&(id, mirror)| if mirror { states[id].conj() } else { states[id] }).collect();
    Ok(Trajectory {
        times,
        mean_field,
        final_state: MeanFieldState { omegas: initial.omegas.clone(), sites },
        substeps,
        classes: classes.len(),
    })
}

/// Mean of `|A|` over the last `window` fraction of the recorded samples.
pub fn order_parameter(traj: &Trajectory, window: f64) -> Result<f64> {
    order_parameter_of(&traj.mean_field, window)
}

pub fn order_parameter_of(samples: &[Complex64], window: f64) -> Result<f64> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::InvalidParameter(format!("averaging window must lie in (0, 1], got {window}")));
    }
    let count = (samples.len() as f64 * window).floor() as usize;
    if count == 0 {
        return Err(Error::EmptyWindow);
    }
    let tail = &samples[samples.len() - count..];
    Ok(tail.iter().map(|a| a.norm()).sum::<f64>() / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub coupling: f64,
    pub order_parameter: f64,
}

/// One run per coupling, all sharing the same frequency sample. Each run
/// starts from that coupling's default initial state.
pub fn transition_scan(template: &EnsembleConfig, couplings: &[f64]) -> Result<Vec<ScanPoint>> {
    transition_scan_with(Exec::default(), template, couplings)
}

pub fn transition_scan_with(exec: Exec, template: &EnsembleConfig, couplings: &[f64]) -> Result<Vec<ScanPoint>> {
    template.validate()?;
    let omegas = template.frequencies()?;
    exec.map(couplings, |&v| {
        let config = EnsembleConfig { coupling: v, ..template.clone() };
        let init = config.default_initial_state(omegas.clone());
        let traj = integrate_with(Exec::Sequential, &config, &init)?;
        Ok(ScanPoint { coupling: v, order_parameter: order_parameter(&traj, config.averaging_window)? })
    })
    .into_iter()
    .collect()
}

/// First coupling whose order parameter exceeds `threshold`.
pub fn crossing(points: &[ScanPoint], threshold: f64) -> Option<f64> {
    points.iter().find(|p| p.order_parameter > threshold).map(|p| p.coupling)
}

pub fn write_scan_csv<W: Write>(points: &[ScanPoint], mut w: W) -> io::Result<()> {
    writeln!(w, "V,abs_A")?;
    for p in points {
        writeln!(w, "{},{}", sig12(p.coupling), sig12(p.order_parameter))?;
    }
    Ok(())
}
