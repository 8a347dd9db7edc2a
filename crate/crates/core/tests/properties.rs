use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use timoshenko_core::beam_model::{energy_norm, BeamParams, DampingProfile, SecondOrderState};
use timoshenko_core::linalg::{eigenvalues, BandMatrix};
use timoshenko_core::modal_analysis::{quartic_roots, Regime};
use timoshenko_core::riemann_transform::{
    constraint_values, domain_check_riemann, forward_transform, inverse_transform, project_admissible, project_x0,
    RiemannState,
};
use timoshenko_core::semigroup_sim::{riemann_energy, step_second_order, Variant};
use timoshenko_core::spectral_tools::spectrum_of_matrix;

fn positive() -> impl Strategy<Value = f64> {
    (-4.0f64..4.0).prop_map(f64::exp)
}

fn params() -> impl Strategy<Value = BeamParams> {
    (positive(), positive(), positive(), positive(), 0.2f64..5.0)
        .prop_map(|(rho, k, i_rho, ei, l)| BeamParams::new(rho, k, i_rho, ei, l).unwrap())
}

fn state(n: usize) -> impl Strategy<Value = SecondOrderState> {
    prop::collection::vec(-1.0f64..1.0, 4 * (n - 1)).prop_map(move |data| {
        let mut y = SecondOrderState::zeros(n);
        for (f, chunk) in [&mut y.u, &mut y.u2, &mut y.v, &mut y.v2]
            .into_iter()
            .zip(data.chunks(n - 1))
        {
            f[1..n].copy_from_slice(chunk);
        }
        y
    })
}

fn sized_state() -> impl Strategy<Value = SecondOrderState> {
    (3usize..40).prop_flat_map(state)
}

fn riemann(n: usize) -> impl Strategy<Value = RiemannState> {
    prop::collection::vec(-1.0f64..1.0, 4 * n).prop_map(|d| RiemannState::from_slice(&d).unwrap())
}

fn max_abs(y: &SecondOrderState) -> f64 {
    [&y.u, &y.u2, &y.v, &y.v2]
        .iter()
        .flat_map(|f| f.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
}

proptest! {
    #[test]
    fn vieta_relations(a in positive(), g in positive(), b in positive()) {
        let q = quartic_roots(a, g, b).unwrap();
        prop_assert!((q.x_minus + q.x_plus + a + b).abs() <= 1e-12 * (a + b));
        prop_assert!((q.x_minus * q.x_plus - a * (b - g)).abs() <= 1e-12 * a * (b + g));
        prop_assert!(q.x_minus < 0.0);
        match q.regime {
            Regime::GammaGtBeta => prop_assert!(q.x_plus > 0.0),
            Regime::GammaLtBeta => prop_assert!(q.x_plus < 0.0),
            Regime::GammaEqBeta => prop_assert!(q.x_plus.abs() <= 1e-12 * (a + b)),
        }
        let scale = q.residual_scale();
        for r in q.roots() {
            prop_assert!(q.characteristic(r).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn energy_is_quadratic(p in params(), y in sized_state(), c in -3.0f64..3.0) {
        let e = energy_norm(&y, &p).unwrap();
        let ec = energy_norm(&y.scaled(c), &p).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert!((ec - c * c * e).abs() <= 1e-12 * (1.0 + c * c) * e.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn transform_round_trip(p in params(), y in sized_state()) {
        let w = forward_transform(&y, &p).unwrap();
        prop_assert!(domain_check_riemann(&w, p.l).unwrap().ok());
        let back = inverse_transform(&w, &p).unwrap();
        let err = back.max_abs_diff(&y) / max_abs(&y);
        let n = y.u.len() - 1;
        // p, q carry c u_x ~ c / h, which the velocity recursion cancels.
        let amp = 1.0 + p.max_speed() * n as f64 / p.l;
        prop_assert!(err <= 1e-15 * n as f64 * amp, "err {err:e}, n {n}, amp {amp}");
    }

    #[test]
    fn riemann_energy_matches_decoupled_energy(p in params(), y in sized_state()) {
        // The invariants carry the energy without the shear coupling.
        let n = y.u.len() - 1;
        let h = p.l / n as f64;
        let w = forward_transform(&y, &p).unwrap();
        let mut expected = 0.0;
        for j in 0..n {
            let ux = (y.u[j + 1] - y.u[j]) / h;
            let vx = (y.v[j + 1] - y.v[j]) / h;
            let ut = 0.5 * (y.u2[j] + y.u2[j + 1]);
            let vt = 0.5 * (y.v2[j] + y.v2[j + 1]);
            expected += 0.5 * h * (p.rho * ut * ut + p.k * ux * ux + p.i_rho * vt * vt + p.ei * vx * vx);
        }
        let e = riemann_energy(&w, &p).unwrap();
        prop_assert!((e - expected).abs() <= 1e-10 * expected.max(1e-300));
    }

    #[test]
    fn projections_are_idempotent(w in (2usize..50).prop_flat_map(riemann), l in 0.2f64..5.0) {
        let p0 = project_x0(&w, l).unwrap();
        prop_assert!(project_x0(&p0, l).unwrap().max_abs_diff(&p0) <= 1e-14);
        prop_assert!(constraint_values(&p0, l).unwrap().max_abs() <= 1e-13 * w.norm(l));
        prop_assert!(p0.norm(l) <= w.norm(l) * (1.0 + 1e-14));
        let pa = project_admissible(&w, l).unwrap();
        prop_assert!(project_admissible(&pa, l).unwrap().max_abs_diff(&pa) <= 1e-13);
        prop_assert!(domain_check_riemann(&pa, l).unwrap().ok());
    }

    #[test]
    fn undamped_step_conserves_energy(p in params(), y in (8usize..30).prop_flat_map(state), dt in 1e-3f64..1.0) {
        let next = step_second_order(&y, &p, &DampingProfile::Zero, dt, Variant::Full).unwrap();
        let (e0, e1) = (energy_norm(&y, &p).unwrap(), energy_norm(&next, &p).unwrap());
        prop_assert!((e1 - e0).abs() <= 1e-11 * e0);
    }

    #[test]
    fn damped_step_never_gains_energy(p in params(), y in (8usize..30).prop_flat_map(state), value in 0.0f64..10.0) {
        let damping = DampingProfile::Localized { value, b0: 0.2 * p.l, b1: 0.7 * p.l };
        let next = step_second_order(&y, &p, &damping, 0.05, Variant::Full).unwrap();
        let (e0, e1) = (energy_norm(&y, &p).unwrap(), energy_norm(&next, &p).unwrap());
        prop_assert!(e1 <= e0 * (1.0 + 1e-12));
    }

    #[test]
    fn real_spectra_come_in_conjugate_pairs(data in prop::collection::vec(-1.0f64..1.0, 1..=100)) {
        let n = (data.len() as f64).sqrt() as usize;
        let a = DMatrix::from_row_slice(n, n, &data[..n * n]);
        let report = spectrum_of_matrix(&a, n).unwrap();
        prop_assert!(report.conjugate_pairs_ok);
        prop_assert_eq!(report.eigenvalues.len(), n);
        let trace: Complex64 = report.eigenvalues.iter().sum();
        prop_assert!((trace.re - a.trace()).abs() <= 1e-10 * (1.0 + a.norm()));
        prop_assert!(trace.im.abs() <= 1e-10 * (1.0 + a.norm()));
        prop_assert!(report.max_residual <= 1e-10);
    }

    #[test]
    fn banded_solve_matches_dense(n in 1usize..30, seed in prop::collection::vec(-1.0f64..1.0, 30 * 7 + 30)) {
        let (kl, ku) = (3usize, 3usize);
        let mut band = BandMatrix::zeros(n, kl, ku);
        let mut dense = DMatrix::zeros(n, n);
        let mut it = seed.iter().cycle();
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                let v = *it.next().unwrap() + if i == j { 8.0 } else { 0.0 };
                band.add(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut x = rhs.clone();
        band.factor().unwrap().solve_in_place(&mut x);
        let r = &dense * nalgebra::DVector::from_vec(x) - nalgebra::DVector::from_vec(rhs);
        prop_assert!(r.amax() <= 1e-12);
    }
}

#[test]
fn eigenvalues_of_known_block_matrix() {
    // diag(rotation generator, 3) has spectrum {±2i, 3}.
    let a = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.0, 3.0]);
    let mut eigs = eigenvalues(&a).unwrap().eigenvalues;
    eigs.sort_by(|a, b| a.im.total_cmp(&b.im));
    let expected = [
        Complex64::new(0.0, -2.0),
        Complex64::new(3.0, 0.0),
        Complex64::new(0.0, 2.0),
    ];
    for (z, e) in eigs.iter().zip(expected) {
        assert!((z - e).norm() < 1e-13, "{z} vs {e}");
    }
}
