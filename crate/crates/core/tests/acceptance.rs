//! Acceptance suite. Runs every criterion at its stated tolerance and
//! prints one line per criterion; exits nonzero if any fails.
//!
//! Reference values are computed here from closed forms, independently of
//! the library code paths they check.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use timoshenko_core::beam_model::{energy_norm, BeamParams, DampingProfile, Grid, SecondOrderState};
use timoshenko_core::modal_analysis::{quartic_roots, unique_continuation_check, ModalProblem, Regime};
use timoshenko_core::riemann_transform::{
    constraint_directions, constraint_values, forward_transform, inverse_transform, project_x0, RiemannState,
};
use timoshenko_core::semigroup_sim::{
    conjugacy_test, dissipation_rate, RiemannStepper, SecondOrderStepper, Variant, DEFAULT_CFL,
};
use timoshenko_core::spectral_tools::{
    build_operator, discrete_spectrum, growth_bound_estimate, least_damped_in_band,
    projection_multiplication_invariance, similarity_spectrum_invariance, OperatorKind,
};
use timoshenko_core::transport_operator::resolvent_residual;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn unequal(l: f64) -> BeamParams {
    BeamParams::new(1.0, 1.0, 1.0, 4.0, l).unwrap()
}

fn localized(l: f64) -> DampingProfile {
    DampingProfile::Localized {
        value: 1.0,
        b0: 0.3 * l,
        b1: 0.6 * l,
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn random_params(rng: &mut ChaCha8Rng) -> BeamParams {
    BeamParams::new(
        log_uniform(rng, 0.2, 5.0),
        log_uniform(rng, 0.2, 5.0),
        log_uniform(rng, 0.2, 5.0),
        log_uniform(rng, 0.2, 5.0),
        log_uniform(rng, 0.5, 4.0),
    )
    .unwrap()
}

/// Random nodal state vanishing at both ends.
fn random_state(rng: &mut ChaCha8Rng, n: usize) -> SecondOrderState {
    let mut y = SecondOrderState::zeros(n);
    for f in [&mut y.u, &mut y.u2, &mut y.v, &mut y.v2] {
        for value in f.iter_mut().take(n).skip(1) {
            *value = rng.gen_range(-1.0..1.0);
        }
    }
    y
}

fn random_riemann(rng: &mut ChaCha8Rng, n: usize) -> RiemannState {
    let data: Vec<f64> = (0..4 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    RiemannState::from_slice(&data).unwrap()
}

fn flat_max(w: &RiemannState) -> f64 {
    w.to_vec().iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Projects onto the states the inverse transform accepts: zero means of
/// `q - p` and `psi - phi_hat`, and zero alternating sums of `p + q` and
/// `phi_hat + psi`. The four directions are mutually orthogonal.
fn admissible(w: &RiemannState) -> RiemannState {
    let n = w.p.len();
    let mut data = w.to_vec();
    let alt = |j: usize| if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut directions = Vec::new();
    for (a, b) in [(0usize, 2usize), (1, 3)] {
        let mut mean = vec![0.0; 4 * n];
        let mut alternating = vec![0.0; 4 * n];
        for j in 0..n {
            mean[a * n + j] = 1.0;
            mean[b * n + j] = -1.0;
            alternating[a * n + j] = alt(j);
            alternating[b * n + j] = alt(j);
        }
        directions.push(mean);
        directions.push(alternating);
    }
    for d in directions {
        let dd: f64 = d.iter().map(|x| x * x).sum();
        let coeff: f64 = d.iter().zip(&data).map(|(x, y)| x * y).sum::<f64>() / dd;
        for (x, y) in data.iter_mut().zip(&d) {
            *x -= coeff * y;
        }
    }
    RiemannState::from_slice(&data).unwrap()
}

fn quartic_structure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_poly = 0.0f64;
    let mut worst_vieta = 0.0f64;
    let mut regime_errors = 0;
    for _ in 0..100 {
        let a = log_uniform(&mut rng, 1e-2, 1e2);
        let g = log_uniform(&mut rng, 1e-2, 1e2);
        let b = log_uniform(&mut rng, 1e-2, 1e2);
        let sol = quartic_roots(a, g, b).unwrap();
        let scale = ((a + b) * (a + b)).max(1.0);
        for r in sol.roots() {
            let r2 = r * r;
            let value = r2 * r2 + (a + b) * r2 + a * (b - g);
            worst_poly = worst_poly.max(value.norm() / scale);
        }
        let sum = (sol.x_minus + sol.x_plus + (a + b)).abs() / (a + b);
        let product = (sol.x_minus * sol.x_plus - a * (b - g)).abs() / (a * (b + g));
        worst_vieta = worst_vieta.max(sum).max(product);
        let expected = if g > b {
            Regime::GammaGtBeta
        } else {
            Regime::GammaLtBeta
        };
        if sol.regime != expected {
            regime_errors += 1;
        }
    }
    Outcome::new(
        worst_poly < 1e-10 && worst_vieta <= 1e-12 && regime_errors == 0,
        format!("poly residual {worst_poly:.2e}, vieta {worst_vieta:.2e}, regime mismatches {regime_errors}"),
    )
}

fn analytic_spectrum_match() -> Outcome {
    let l = PI;
    let params = unequal(l);
    let damping = DampingProfile::Constant(1.0);
    let re2 = -l / (2.0 * l * params.i_rho);
    let (c1, c2) = ((params.k / params.rho).sqrt(), (params.ei / params.i_rho).sqrt());
    let mut targets = Vec::new();
    for k in 1..=10 {
        targets.push(Complex64::new(0.0, k as f64 * PI * c1 / l));
        targets.push(Complex64::new(re2, k as f64 * PI * c2 / l));
    }
    let errors = |n: usize| -> (f64, f64) {
        let op = build_operator(OperatorKind::S1C0, &params, &damping, n).unwrap();
        let eigs = discrete_spectrum(&op).unwrap().eigenvalues;
        let h = l / n as f64;
        let mut worst_ratio = 0.0f64;
        let mut worst = 0.0f64;
        for t in &targets {
            let d = eigs.iter().map(|z| (z - t).norm()).fold(f64::INFINITY, f64::min);
            worst_ratio = worst_ratio.max(d / (5.0 * h * (1.0 + t.im.abs())));
            worst = worst.max(d);
        }
        (worst_ratio, worst)
    };
    let (e200, e400) = std::thread::scope(|s| {
        let a = s.spawn(|| errors(200));
        let b = s.spawn(|| errors(400));
        (a.join().unwrap(), b.join().unwrap())
    });
    let halving = e200.1 / e400.1;
    Outcome::new(
        re2 == -0.5 && e200.0 <= 1.0 && (1.4..=2.6).contains(&halving),
        format!(
            "Re branch2 = {re2}, n=200 error/bound {:.3}, max error {:.3e} -> {:.3e} (ratio {halving:.3})",
            e200.0, e200.1, e400.1
        ),
    )
}

fn riemann_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_y = 0.0f64;
    let mut worst_w = 0.0f64;
    for _ in 0..50 {
        let params = random_params(&mut rng);
        let n = rng.gen_range(8..120);
        let y = random_state(&mut rng, n);
        let back = inverse_transform(&forward_transform(&y, &params).unwrap(), &params).unwrap();
        let scale = [&y.u, &y.u2, &y.v, &y.v2]
            .iter()
            .flat_map(|f| f.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()));
        worst_y = worst_y.max(back.max_abs_diff(&y) / scale);

        let w = admissible(&random_riemann(&mut rng, n));
        let again = forward_transform(&inverse_transform(&w, &params).unwrap(), &params).unwrap();
        worst_w = worst_w.max(again.max_abs_diff(&w) / flat_max(&w));
    }
    Outcome::new(
        worst_y <= 1e-12 && worst_w <= 1e-12,
        format!("inverse∘forward {worst_y:.2e}, forward∘inverse {worst_w:.2e}"),
    )
}

fn projection_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(4..80);
        let l = log_uniform(&mut rng, 0.5, 4.0);
        let [e1, e2] = constraint_directions(n, l);
        worst = worst
            .max((e1.norm(l) - 1.0).abs())
            .max((e2.norm(l) - 1.0).abs())
            .max(e1.inner(&e2, l).abs());
        for e in [&e1, &e2] {
            worst = worst.max(project_x0(e, l).unwrap().norm(l));
        }
        let w = random_riemann(&mut rng, n);
        let v = random_riemann(&mut rng, n);
        let pw = project_x0(&w, l).unwrap();
        let pv = project_x0(&v, l).unwrap();
        let scale = w.norm(l) * v.norm(l);
        worst = worst.max(project_x0(&pw, l).unwrap().axpy(-1.0, &pw).norm(l) / w.norm(l));
        worst = worst.max((pw.inner(&v, l) - w.inner(&pv, l)).abs() / scale);
        worst = worst.max(constraint_values(&pw, l).unwrap().max_abs() / w.norm(l));
        // The removed part lies in span{e1, e2}.
        let removed = w.axpy(-1.0, &pw);
        let rest = removed
            .axpy(-removed.inner(&e1, l), &e1)
            .axpy(-removed.inner(&e2, l), &e2);
        worst = worst.max(rest.norm(l) / w.norm(l));
    }
    Outcome::new(worst <= 1e-12, format!("max defect {worst:.2e}"))
}

fn x0_invariance() -> Outcome {
    let l = PI;
    let params = unequal(l);
    let damping = localized(l);
    let n = 200;
    let grid = Grid::new(n, l).unwrap();
    let dt = DEFAULT_CFL * grid.h() / params.max_speed();
    let steps = (10.0 / dt).ceil() as usize;
    let dt = 10.0 / steps as f64;
    let stepper = RiemannStepper::new(&params, &damping, grid, dt).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    let raw = random_riemann(&mut rng, n);
    let mut w = project_x0(&raw, l).unwrap();
    let norm0 = w.norm(l);
    let mut inside = 0.0f64;
    for _ in 0..steps {
        w = stepper.step(&w).unwrap();
        inside = inside.max(constraint_values(&w, l).unwrap().max_abs());
    }

    let mut w = raw;
    let norm0_off = w.norm(l);
    let r0 = constraint_values(&w, l).unwrap();
    let mut drift = 0.0f64;
    for _ in 0..steps {
        w = stepper.step(&w).unwrap();
        let r = constraint_values(&w, l).unwrap();
        drift = drift.max((r.r1 - r0.r1).abs()).max((r.r2 - r0.r2).abs());
    }
    Outcome::new(
        inside <= 1e-8 * norm0 && drift <= 1e-8 * norm0_off,
        format!(
            "{steps} steps, in X0 max|r| / ‖W0‖ = {:.2e}, off X0 drift / ‖W0‖ = {:.2e}",
            inside / norm0,
            drift / norm0_off
        ),
    )
}

fn energy_identities() -> Outcome {
    let l = PI;
    let params = unequal(l);
    let grid = Grid::new(100, l).unwrap();
    let dt = DEFAULT_CFL * grid.h() / params.max_speed();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let y0 = random_state(&mut rng, grid.n);

    let free = SecondOrderStepper::new(&params, &DampingProfile::Zero, grid, dt, Variant::Full).unwrap();
    let e0 = energy_norm(&y0, &params).unwrap();
    let mut y = y0.clone();
    for _ in 0..10_000 {
        y = free.step(&y).unwrap();
    }
    let conservation = (energy_norm(&y, &params).unwrap() - e0).abs() / e0;

    let damping = localized(l);
    let damped = SecondOrderStepper::new(&params, &damping, grid, dt, Variant::Full).unwrap();
    let mut y = y0;
    let mut e = e0;
    let mut balance = 0.0f64;
    let mut monotone = true;
    for _ in 0..2_000 {
        let next = damped.step(&y).unwrap();
        let e_next = energy_norm(&next, &params).unwrap();
        let mut mid = SecondOrderState::zeros(grid.n);
        mid.v2 = y.v2.iter().zip(&next.v2).map(|(a, b)| 0.5 * (a + b)).collect();
        let rate = dissipation_rate(&mid, &damping, l).unwrap();
        balance = balance.max((e_next - e + dt * rate).abs());
        monotone &= e_next <= e;
        y = next;
        e = e_next;
    }
    Outcome::new(
        conservation <= 1e-10 && balance <= 1e-10 * e0 && monotone,
        format!(
            "b=0 drift {conservation:.2e}, balance {:.2e} E0, monotone {monotone}, E(T)/E0 {:.3}",
            balance / e0,
            e / e0
        ),
    )
}

fn strong_stability() -> Outcome {
    let l = PI;
    let damping = localized(l);
    let (unit, distinct) = std::thread::scope(|s| {
        let a = s.spawn(|| {
            let op = build_operator(OperatorKind::L, &BeamParams::unit(l), &damping, 200).unwrap();
            discrete_spectrum(&op).unwrap()
        });
        let b = s.spawn(|| {
            let op = build_operator(OperatorKind::L, &unequal(l), &damping, 200).unwrap();
            discrete_spectrum(&op).unwrap()
        });
        (a.join().unwrap(), b.join().unwrap())
    });
    let spectrum_ok = unit.max_real_part < 0.0 && unit.min_abs_real_part > 1e-10;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut uc_failures = 0;
    let mut smallest = f64::INFINITY;
    for _ in 0..50 {
        let params = random_params(&mut rng);
        let width = rng.gen_range(0.05..0.5) * params.l;
        let b0 = rng.gen_range(0.0..(params.l - width));
        let damping = DampingProfile::Localized {
            value: log_uniform(&mut rng, 0.1, 10.0),
            b0,
            b1: b0 + width,
        };
        let omega = log_uniform(&mut rng, 0.1, 20.0);
        let problem = ModalProblem::new(params, damping, omega).unwrap();
        let (a, g, b) = timoshenko_core::modal_analysis::quartic_coefficients(&problem).unwrap();
        let verdict = unique_continuation_check(&quartic_roots(a, g, b).unwrap(), b0, b0 + width, 32).unwrap();
        smallest = smallest.min(verdict.smallest_singular_ratio);
        if !verdict.rank_ok {
            uc_failures += 1;
        }
    }
    Outcome::new(
        spectrum_ok && uc_failures == 0,
        format!(
            "unit beam max Re {:.2e}, min|Re| {:.2e}; UC failures {uc_failures}/50 (min σ ratio {smallest:.2e}); \
             info: EI=4 beam max Re {:.2e}, min|Re| {:.2e}",
            unit.max_real_part, unit.min_abs_real_part, distinct.max_real_part, distinct.min_abs_real_part
        ),
    )
}

fn non_exponential_signature() -> Outcome {
    let l = PI;
    let damping = localized(l);
    let band = |params: BeamParams, n: usize| {
        let op = build_operator(OperatorKind::L, &params, &damping, n).unwrap();
        least_damped_in_band(&discrete_spectrum(&op).unwrap().eigenvalues, 0.1)
    };
    let (distinct, control) = std::thread::scope(|s| {
        let handles: Vec<_> = [100, 200, 400]
            .into_iter()
            .map(|n| s.spawn(move || band(unequal(l), n)))
            .collect();
        let control = s.spawn(|| band(BeamParams::unit(l), 400));
        let distinct: Vec<f64> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        (distinct, control.join().unwrap())
    });
    let decreasing = distinct.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    let separated = control >= 10.0 * distinct[2];
    Outcome::new(
        decreasing && separated,
        format!(
            "distinct speeds n=100/200/400: {:.2e} {:.2e} {:.2e}; equal speeds n=400: {control:.2e}",
            distinct[0], distinct[1], distinct[2]
        ),
    )
}

fn conjugacy() -> Outcome {
    let l = PI;
    let params = unequal(l);
    let damping = localized(l);
    let levels = [100, 200, 400, 800];
    let d: Vec<f64> = std::thread::scope(|s| {
        let handles: Vec<_> = levels
            .iter()
            .map(|&n| {
                let (params, damping) = (&params, &damping);
                s.spawn(move || {
                    let grid = Grid::new(n, l).unwrap();
                    conjugacy_test(&SecondOrderState::mode(&grid, 1), params, damping, 5.0).unwrap()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let ratios: Vec<f64> = d.windows(2).map(|w| w[0] / w[1]).collect();
    Outcome::new(
        ratios.iter().all(|r| *r >= 1.5),
        format!(
            "d = {}, ratios {ratios:.3?}",
            d.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn lemma_suites() -> Outcome {
    let sim = similarity_spectrum_invariance(200, 20, 10).unwrap();
    let proj = projection_multiplication_invariance(200, 24, 10, 11).unwrap();
    Outcome::new(
        sim.passed() && proj.passed(),
        format!(
            "similarity {}/{} failures (max dev {:.2e}), projection {}/{} failures (max dev {:.2e})",
            sim.failures, sim.trials, sim.max_deviation, proj.failures, proj.trials, proj.max_deviation
        ),
    )
}

fn resolvent() -> Outcome {
    let l = 1.0;
    let params = BeamParams::unit(l);
    let damping = DampingProfile::Constant(1.0);
    let residual = |n: usize| {
        let mut z = RiemannState::zeros(n);
        z.p.fill(1.0);
        resolvent_residual(Complex64::new(1.0, 0.0), &z, &params, &damping).unwrap()
    };
    let (r200, r400) = (residual(200), residual(400));
    let ratio = r200 / r400;
    Outcome::new(
        r200 < 5.0 * l / 200.0 && (1.4..=2.6).contains(&ratio),
        format!(
            "residual n=200 {r200:.3e} (bound {:.3e}), n=400 {r400:.3e}, ratio {ratio:.3}",
            5.0 / 200.0
        ),
    )
}

fn growth_bound() -> Outcome {
    let l = PI;
    let params = unequal(l);
    let ts = [1.0, 5.0, 20.0, 100.0];
    let damped = growth_bound_estimate(
        &build_operator(OperatorKind::L, &params, &localized(l), 50).unwrap(),
        &ts,
    )
    .unwrap();
    let free = growth_bound_estimate(
        &build_operator(OperatorKind::L, &params, &DampingProfile::Zero, 50).unwrap(),
        &ts,
    )
    .unwrap();
    let damped_ok = damped.estimate >= damped.max_real_part - 1e-6 && damped.estimate <= 1e-8;
    let free_ok = free.estimate.abs() <= 1e-8;
    Outcome::new(
        damped_ok && free_ok,
        format!(
            "damped estimate {:.3e} (max Re {:.3e}), undamped estimate {:.3e}",
            damped.estimate, damped.max_real_part, free.estimate
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("quartic structure", quartic_structure, Some(Duration::from_secs(1))),
        (
            "analytic spectrum",
            analytic_spectrum_match,
            Some(Duration::from_secs(120)),
        ),
        ("riemann round trip", riemann_round_trip, Some(Duration::from_secs(1))),
        ("projection onto X0", projection_properties, None),
        ("X0 invariance", x0_invariance, None),
        ("energy identities", energy_identities, None),
        ("strong stability", strong_stability, None),
        ("non-exponential signature", non_exponential_signature, None),
        ("conjugacy", conjugacy, Some(Duration::from_secs(120))),
        ("lemma suites", lemma_suites, Some(Duration::from_secs(30))),
        ("resolvent", resolvent, None),
        ("growth bound", growth_bound, None),
    ];
    let mut failed = 0;
    for (index, (name, run, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if let Some(limit) = budget {
            if elapsed > limit {
                outcome.pass = false;
                outcome.detail.push_str(&format!("; over time budget {limit:?}"));
            }
        }
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict} {name} [{:.2}s]: {}",
            index + 1,
            elapsed.as_secs_f64(),
            outcome.detail
        );
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
