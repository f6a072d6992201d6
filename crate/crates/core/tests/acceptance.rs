//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed. Pass
//! criterion numbers as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- 3 4`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use qsync_core::classical::{
    classical_ensemble_from, classical_ensemble_run, integrate_pair, limit_cycle_radius, ClassicalEnsembleConfig,
    ClassicalPair, ClassicalTwoOscState,
};
use qsync_core::critical::{
    classical_uniform_branch, linearization_oracle, solve_vc_quantum, vc_classical, vc_closed_form_quantum,
    UniformBranch,
};
use qsync_core::ensemble::{
    integrate_with, mean_field_rhs, order_parameter, sample_frequencies, transition_scan_with, EnsembleConfig,
    MeanFieldState, Sampling, CROSSING_THRESHOLD,
};
use qsync_core::hilbert::DensityMatrix;
use qsync_core::lindblad::{
    build_single_vdp, build_spin_model, build_two_vdp, evolve_rk4_trajectory, steady_state, SingleOscParams,
    SpinModelParams, TwoOscParams,
};
use qsync_core::two_osc::{analytic_steady_state, concurrence, phase_marginal, tongue_boundary, tongue_scan_with};
use qsync_core::{Exec, FrequencyDistribution};

type Check = Result<String, String>;

/// Collects sub-checks; the criterion passes only if all of them do.
#[derive(Default)]
struct Report {
    notes: Vec<String>,
    failed: bool,
}

impl Report {
    fn check(&mut self, ok: bool, note: String) {
        if !ok {
            self.failed = true;
            self.notes.push(format!("FAILED {note}"));
        } else {
            self.notes.push(note);
        }
    }

    fn finish(self) -> Check {
        let text = self.notes.join("; ");
        if self.failed {
            Err(text)
        } else {
            Ok(text)
        }
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn c1_single_oscillator() -> Check {
    let p = SingleOscParams::new(0.0, 1e4, 4).map_err(err)?;
    let rho = steady_state(&build_single_vdp(&p).map_err(err)?).map_err(err)?;
    let pop = rho.populations();
    let mut r = Report::default();
    r.check((pop[0] - 2.0 / 3.0).abs() < 1e-3, format!("p0={:.6}", pop[0]));
    r.check((pop[1] - 1.0 / 3.0).abs() < 1e-3, format!("p1={:.6}", pop[1]));
    r.check(pop[2] < 2e-4, format!("p2={:.2e}", pop[2]));
    r.finish()
}

fn c2_analytic_vs_numeric() -> Check {
    let mut spin_err = 0.0f64;
    let mut boson_err = 0.0f64;
    for i in 0..10 {
        for j in 0..10 {
            let v = 0.25 + 2.0 * i as f64;
            let delta = -9.0 + 2.0 * j as f64;
            let exact = analytic_steady_state(1.0, v, delta).map_err(err)?.to_matrix();
            let spin = steady_state(&build_spin_model(&SpinModelParams::new(v, delta).map_err(err)?).map_err(err)?)
                .map_err(err)?;
            for a in 0..4 {
                for b in 0..4 {
                    spin_err = spin_err.max((spin.get(a, b) - exact[(a, b)]).norm());
                }
            }
            let trunc = 3;
            let p = TwoOscParams::new(v, delta, 1e3, trunc).map_err(err)?;
            let boson = steady_state(&build_two_vdp(&p).map_err(err)?).map_err(err)?;
            let qubit = |k: usize| (k / trunc < 2 && k % trunc < 2).then(|| 2 * (k / trunc) + k % trunc);
            for a in 0..trunc * trunc {
                for b in 0..trunc * trunc {
                    let reference = match (qubit(a), qubit(b)) {
                        (Some(x), Some(y)) => exact[(x, y)],
                        _ => Complex64::new(0.0, 0.0),
                    };
                    boson_err = boson_err.max((boson.get(a, b) - reference).norm());
                }
            }
        }
    }
    let mut r = Report::default();
    r.check(spin_err < 1e-10, format!("spin max|diff|={spin_err:.2e}"));
    r.check(boson_err < 5e-3, format!("bosonic(kappa2=1e3) max|diff|={boson_err:.2e}"));
    r.finish()
}

fn c3_entanglement_tongue() -> Check {
    let vc0 = tongue_boundary(0.0, 1.0).map_err(err)?;
    let big = tongue_boundary(1e3, 1.0).map_err(err)? / 1e3;
    let vs: Vec<f64> = (0..=3000).map(|k| 10f64.powf(3.0 * k as f64 / 3000.0)).collect();
    let cmax = tongue_scan_with(Exec::default(), &[0.0], &vs, 1.0)
        .map_err(err)?
        .iter()
        .fold(0.0f64, |m, p| m.max(p.concurrence));
    let mut r = Report::default();
    r.check((vc0 - 8.664).abs() <= 1e-3, format!("Vc(0)={vc0:.6}"));
    r.check(rel(big, 0.5) < 0.02, format!("Vc(1e3)/1e3={big:.5}"));
    // C approaches 1/4 only as V → ∞; the large-V value is reported for context
    let far = concurrence(&analytic_steady_state(1.0, 1e6, 0.0).map_err(err)?.to_density_matrix().map_err(err)?)
        .map_err(err)?;
    r.check((cmax - 0.25).abs() < 1e-3, format!("max C over V<=1e3 = {cmax:.6} (C(V=1e6)={far:.6})"));
    r.finish()
}

fn c4_wigner_marginal() -> Check {
    let mut worst = 0.0f64;
    for &(v, delta) in &[(3.0, 0.0), (3.0, 4.0), (0.5, -2.0), (10.0, 7.0), (40.0, -30.0)] {
        let rho = analytic_steady_state(1.0, v, delta).map_err(err)?.to_density_matrix().map_err(err)?;
        let w = phase_marginal(&rho).map_err(err)?;
        let n = (3.0 + v) * (3.0 * (delta * delta + 36.0) + (delta * delta + 108.0) * v + 32.0 * v * v);
        // W = 1/2π + (g cos θ + h sin θ)/2
        let g = 2.0 * v * (1.0 + v) * 2.0 * (3.0 + v) / n;
        let h = -2.0 * v * (1.0 + v) * delta / n;
        worst = worst.max(rel(w.g, g));
        if delta != 0.0 {
            worst = worst.max(rel(w.h, h));
        } else {
            worst = worst.max(w.h.abs() / g);
        }
    }
    let peak = |delta: f64| -> Result<f64, String> {
        let rho = analytic_steady_state(1.0, 3.0, delta).map_err(err)?.to_density_matrix().map_err(err)?;
        Ok(phase_marginal(&rho).map_err(err)?.peak())
    };
    let (p0, p4) = (peak(0.0)?, peak(4.0)?);
    let mut r = Report::default();
    r.check(worst < 1e-12, format!("max rel coefficient error={worst:.2e}"));
    r.check(p0.abs() < 1e-12, format!("peak(delta=0)={p0:.2e}"));
    r.check(p4 < 0.0, format!("peak(delta=4)={p4:.4}"));
    r.finish()
}

fn c5_quantum_vc() -> Check {
    let mut r = Report::default();
    for (k2, tol) in [(100.0, 0.10), (1e3, 0.02)] {
        let delta = solve_vc_quantum(1.0, k2, &FrequencyDistribution::Delta).map_err(err)?.vc;
        let d_formula = 10.0 * k2 / 3.0;
        r.check(rel(delta, d_formula) < tol, format!("kappa2={k2} delta {delta:.3} vs {d_formula:.3}"));
        let g: f64 = 20.0;
        let uni = solve_vc_quantum(1.0, k2, &FrequencyDistribution::uniform(g)).map_err(err)?.vc;
        let u_formula = (10.0 * k2 + g * g + (100.0 * k2 * k2 + 28.0 * k2 * g * g + g.powi(4)).sqrt()) / 6.0;
        r.check(rel(uni, u_formula) < tol, format!("kappa2={k2} uniform {uni:.3} vs {u_formula:.3}"));
    }
    for (g, finite) in [(0.5, true), (0.99, true), (0.999, true), (1.0, false), (1.001, false), (3.0, false)] {
        let d = FrequencyDistribution::lorentzian(g);
        let numeric = solve_vc_quantum(1.0, 100.0, &d).map_err(err)?.vc;
        let closed = vc_closed_form_quantum(1.0, 100.0, &d).map_err(err)?;
        r.check(
            numeric.is_finite() == finite && closed.is_finite() == finite,
            format!("lorentzian {g}: {numeric:.4e}/{closed:.4e}"),
        );
    }
    r.finish()
}

fn c6_linearization() -> Check {
    let mut r = Report::default();
    for dist in [FrequencyDistribution::Delta, FrequencyDistribution::uniform(20.0)] {
        let freqs = sample_frequencies(&dist, 200, 0, Sampling::Stratified).map_err(err)?;
        let lin = linearization_oracle(&freqs, 1.0, 100.0).map_err(err)?;
        let sc = solve_vc_quantum(1.0, 100.0, &dist).map_err(err)?.vc;
        r.check(rel(lin.vc, sc) < 0.02, format!("{dist}: eig {:.4} vs sc {sc:.4}", lin.vc));
        r.check(lin.imag_at_crossing < 1e-6, format!("|Im|={:.1e}", lin.imag_at_crossing));
    }
    r.finish()
}

/// `|A|` at a single coupling for the acceptance configuration.
fn mean_field_order(template: &EnsembleConfig, v: f64) -> Result<f64, String> {
    let scan = transition_scan_with(Exec::default(), template, &[v]).map_err(err)?;
    Ok(scan[0].order_parameter)
}

fn c7_mean_field_transition() -> Check {
    let mut r = Report::default();
    for dist in [
        FrequencyDistribution::Delta,
        FrequencyDistribution::uniform(20.0),
        FrequencyDistribution::lorentzian_with_cutoff(0.7, 100.0),
    ] {
        let template = EnsembleConfig { n: 1000, kappa2: 100.0, dt: 5e-4, t_final: 1e3, dist, ..Default::default() };
        let vc = solve_vc_quantum(1.0, 100.0, &dist).map_err(err)?.vc;
        // a crossing inside ±10% of the prediction, then located by bisection
        let (mut lo, mut hi) = (0.9, 1.1);
        let a_lo = mean_field_order(&template, lo * vc)?;
        let a_hi = mean_field_order(&template, hi * vc)?;
        let bracketed = a_lo < CROSSING_THRESHOLD && a_hi > CROSSING_THRESHOLD;
        let mut trail = format!("|A|(0.9)={a_lo:.2e} |A|(1.1)={a_hi:.3}");
        if bracketed {
            for _ in 0..3 {
                let mid = 0.5 * (lo + hi);
                let a = mean_field_order(&template, mid * vc)?;
                trail.push_str(&format!(" |A|({mid:.4})={a:.2e}"));
                if a > CROSSING_THRESHOLD {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
        r.check(
            bracketed,
            format!("{dist}: predicted {vc:.2}, crossing in [{:.1}, {:.1}] ({trail})", lo * vc, hi * vc),
        );
    }
    r.finish()
}

fn c8_classical() -> Check {
    let mut r = Report::default();
    let mut worst = 0.0f64;
    for k2 in [0.5, 0.125, 2.0] {
        let p = ClassicalPair::new(0.0, 0.0, 1.0, k2);
        let end = integrate_pair(&p, ClassicalTwoOscState::from_polar(0.2, 2.5, 0.3), 0.01, 100.0, |_, _| {})
            .map_err(err)?;
        let radius = limit_cycle_radius(1.0, k2);
        worst = worst.max((end.alpha1.norm() - radius).abs()).max((end.alpha2.norm() - radius).abs());
    }
    r.check(worst < 1e-4, format!("limit-cycle radius error={worst:.1e}"));

    let gamma: f64 = 0.5;
    let formula = (1.0 + 3.0 * gamma - (1.0 - 2.0 * gamma + 5.0 * gamma * gamma).sqrt()) / 2.0;
    let vc = vc_classical(1.0, &FrequencyDistribution::lorentzian(gamma)).map_err(err)?;
    r.check((vc - 0.6910).abs() < 5e-5 && (vc - formula).abs() < 1e-12, format!("Vc={vc:.6}"));

    // finite-N baseline is about 0.02 at this size; the partially locked state saturates near 0.13
    let threshold = 0.05;
    let template = ClassicalEnsembleConfig { n: 4000, dist: FrequencyDistribution::lorentzian(gamma), ..Default::default() };
    let order = |f: f64| -> Result<f64, String> {
        let config = ClassicalEnsembleConfig { coupling: f * vc, ..template.clone() };
        Ok(classical_ensemble_run(&config).map_err(err)?.order_parameter)
    };
    let (mut lo, mut hi) = (0.85, 1.15);
    let (a_lo, a_hi) = (order(lo)?, order(hi)?);
    let bracketed = a_lo < threshold && a_hi > threshold;
    if bracketed {
        for _ in 0..3 {
            let mid = 0.5 * (lo + hi);
            if order(mid)? > threshold {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    r.check(
        bracketed,
        format!("ensemble |A|(0.85)={a_lo:.3} |A|(1.15)={a_hi:.3}, crossing in [{:.4}, {:.4}]", lo * vc, hi * vc),
    );

    let edge = PI / 2.0;
    let narrow = classical_uniform_branch(1.0, edge * (1.0 - 1e-9), UniformBranch::Narrow).map_err(err)?;
    let wide = classical_uniform_branch(1.0, edge * (1.0 + 1e-9), UniformBranch::Wide).map_err(err)?;
    r.check((narrow - wide).abs() < 1e-6, format!("uniform branches at pi/2: {narrow:.9} / {wide:.9}"));
    r.finish()
}

fn c9_properties() -> Check {
    let mut r = Report::default();

    // trace, hermiticity and positivity along master-equation trajectories
    let mut states_checked = 0;
    let two = TwoOscParams::new(2.0, 1.5, 5.0, 3).map_err(err)?;
    let single = SingleOscParams::new(0.3, 2.0, 5).map_err(err)?;
    for (l, dim) in [(build_two_vdp(&two).map_err(err)?, 9), (build_single_vdp(&single).map_err(err)?, 5)] {
        let psi: Vec<Complex64> = (0..dim).map(|k| Complex64::new(1.0 / (k + 1) as f64, 0.3 * k as f64)).collect();
        let rho0 = DensityMatrix::pure(&psi).map_err(err)?;
        for (_, m) in evolve_rk4_trajectory(&l, &rho0, 1e-3, 3.0, 100).map_err(err)? {
            DensityMatrix::new(m).map_err(|e| format!("master-equation state invalid: {e}"))?;
            states_checked += 1;
        }
        DensityMatrix::new(steady_state(&l).map_err(err)?.matrix().clone()).map_err(err)?;
    }
    r.check(true, format!("{states_checked} master-equation states valid"));

    // same for every mean-field site
    let config = EnsembleConfig {
        n: 40,
        coupling: 600.0,
        dist: FrequencyDistribution::uniform(20.0),
        t_final: 20.0,
        ..Default::default()
    };
    let omegas = config.frequencies().map_err(err)?;
    let init = config.default_initial_state(omegas.clone());
    let traj = integrate_with(Exec::default(), &config, &init).map_err(err)?;
    let mut site_min_eig = f64::INFINITY;
    for s in &traj.final_state.sites {
        let m = s.to_matrix();
        let dm = nalgebra::DMatrix::from_fn(3, 3, |i, j| m[i][j]);
        let rho = DensityMatrix::new(dm).map_err(|e| format!("mean-field site invalid: {e}"))?;
        site_min_eig = site_min_eig.min(rho.min_eigenvalue());
    }
    r.check(site_min_eig > -1e-8, format!("mean-field sites valid (min eig {site_min_eig:.1e})"));

    // U(1) equivariance
    let beta = 0.7;
    let rotated = integrate_with(Exec::default(), &config, &init.rotate(beta)).map_err(err)?;
    let u = Complex64::from_polar(1.0, beta);
    let q_dev = traj.mean_field.iter().zip(&rotated.mean_field).fold(0.0f64, |m, (a, b)| m.max((a * u - b).norm()));
    r.check(q_dev < 1e-10, format!("quantum U(1) dev={q_dev:.1e}"));
    let cc = ClassicalEnsembleConfig {
        n: 64,
        coupling: 0.8,
        t_final: 40.0,
        dist: FrequencyDistribution::lorentzian(0.5),
        ..Default::default()
    };
    let cw = sample_frequencies(&cc.dist, cc.n, 0, Sampling::Stratified).map_err(err)?;
    let a0 = cc.initial_amplitudes();
    let base = classical_ensemble_from(&cc, cw.clone(), a0.clone()).map_err(err)?;
    let turned = classical_ensemble_from(&cc, cw, a0.iter().map(|a| a * u).collect()).map_err(err)?;
    let c_dev = base
        .final_amplitudes
        .iter()
        .zip(&turned.final_amplitudes)
        .fold((base.order_parameter - turned.order_parameter).abs(), |m, (a, b)| m.max((a * u - b).norm()));
    r.check(c_dev < 1e-10, format!("classical U(1) dev={c_dev:.1e}"));

    // unsynchronized fixed point
    let unsync = MeanFieldState::unsynchronized(omegas.clone(), config.kappa2, config.coupling);
    let drift = mean_field_rhs(&unsync, config.coupling, config.kappa2)
        .iter()
        .map(|d| d.to_matrix().iter().flatten().fold(0.0f64, |m, z| m.max(z.norm())))
        .fold(0.0f64, f64::max);
    r.check(drift < 1e-12, format!("unsync stationarity={drift:.1e}"));

    // Γ → 0 uniform limit
    let d = solve_vc_quantum(1.0, 100.0, &FrequencyDistribution::Delta).map_err(err)?.vc;
    let u0 = solve_vc_quantum(1.0, 100.0, &FrequencyDistribution::uniform(1e-6)).map_err(err)?.vc;
    let c0 = vc_closed_form_quantum(1.0, 100.0, &FrequencyDistribution::uniform(0.0)).map_err(err)?;
    r.check(rel(u0, d) < 1e-6 && rel(c0, 1000.0 / 3.0) < 1e-12, format!("uniform(0) limit {u0:.6} vs {d:.6}"));

    // determinism
    let again = integrate_with(Exec::Sequential, &config, &init).map_err(err)?;
    let scan_a = tongue_scan_with(Exec::Sequential, &[-3.0, 0.0, 5.0], &[1.0, 9.0, 30.0], 1.0).map_err(err)?;
    let scan_b = tongue_scan_with(Exec::Parallel, &[-3.0, 0.0, 5.0], &[1.0, 9.0, 30.0], 1.0).map_err(err)?;
    let same = again == traj && scan_a == scan_b
        && order_parameter(&again, 0.25).map_err(err)? == order_parameter(&traj, 0.25).map_err(err)?;
    r.check(same, "sequential/parallel reruns bit-identical".into());
    r.finish()
}

type Criterion = (u32, &'static str, f64, fn() -> Check);

const CRITERIA: [Criterion; 9] = [
    (1, "single-oscillator quantum limit", 1.0, c1_single_oscillator),
    (2, "analytic/numeric steady state", 10.0, c2_analytic_vs_numeric),
    (3, "entanglement tongue", 10.0, c3_entanglement_tongue),
    (4, "phase marginal", 1.0, c4_wigner_marginal),
    (5, "quantum Vc formulas", 10.0, c5_quantum_vc),
    (6, "linearization oracle", 60.0, c6_linearization),
    (7, "mean-field transition", 1800.0, c7_mean_field_transition),
    (8, "classical references", 300.0, c8_classical),
    (9, "property suites", f64::INFINITY, c9_properties),
];

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut all_ok = true;
    for (id, name, budget, run) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs <= budget;
        let (ok, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        let budget_note = if budget.is_finite() { format!(", budget {budget}s") } else { String::new() };
        let time_note = if in_time { "" } else { " OVER BUDGET" };
        println!(
            "criterion {id} ({name}): {} [{secs:.1}s{budget_note}{time_note}] {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
        all_ok &= ok;
    }
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
