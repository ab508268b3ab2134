//! Acceptance suite: every criterion below pins its tolerance in the
//! assertion and prints one pass line on success (run with
//! `cargo test --test acceptance -- --nocapture` to see them).

use std::time::Instant;

use fbwave::existence::{
    self, check_existence_d1, check_existence_d2, const_sign_case, cubic_end_states,
    cubic_velocity_check, cubic_velocity_law, exponential_reversed_beta, mu_from_rho_plus,
    mu_window, sigma_from_alpha, ConstSignCase, ExistenceError, Regime, WaveSpec,
};
use fbwave::fluxgeom::{self, ScanConfig};
use fbwave::models::{DiffusivityModel, FluxModel, VelocityLaw};
use fbwave::numerics;
use fbwave::profile::{self, CrossingSlope, ProfileOpts, TailContact};
use fbwave::viscosity;

fn scan() -> ScanConfig {
    ScanConfig::default()
}

fn opts() -> ProfileOpts {
    ProfileOpts::default()
}

fn cubic_d1_spec(alpha: f64, mu: f64) -> WaveSpec {
    let f = FluxModel::cubic(1.0);
    let d = DiffusivityModel::hv_squared_with_sigma(1.0, 1.0, sigma_from_alpha(alpha)).unwrap();
    let p = fluxgeom::sign_pattern(&d, 1e-9).unwrap();
    let (rm, rp) = cubic_end_states(alpha, mu).unwrap();
    check_existence_d1(&f, &d, &p, rm, rp, &scan()).unwrap()
}

fn benchmark_spec() -> WaveSpec {
    cubic_d1_spec(0.75, -0.25)
}

#[test]
fn criterion_01_quadratic_reference_end_state_geometry() {
    let start = Instant::now();
    let alpha = 88.0 / 150.0;
    let l_plus = 147.0 / 150.0;
    let f = FluxModel::cubic(1.0);
    let d = DiffusivityModel::hv_squared_with_sigma(1.0, 1.0, sigma_from_alpha(alpha)).unwrap();
    let pattern = fluxgeom::sign_pattern(&d, 1e-9).unwrap();
    let spec = existence::solve_pair_from_l_plus(&f, &d, &pattern, l_plus, &scan()).unwrap();
    let elapsed = start.elapsed();

    assert!(
        (spec.l_minus - 65.0 / 150.0).abs() <= 0.5 / 150.0,
        "l_minus = {} not within 0.5/150 of 65/150",
        spec.l_minus
    );
    // independent confirmation by the cubic closed form
    let mu = mu_from_rho_plus(alpha, l_plus);
    assert!((mu - (-0.2538222222222222)).abs() < 1e-4, "mu = {mu}");
    let (rho_minus, rho_plus) = cubic_end_states(alpha, mu).unwrap();
    assert!((rho_plus - l_plus).abs() < 1e-12);
    assert!((rho_minus - ((2.0 - alpha) - l_plus)).abs() < 1e-12);
    assert!((spec.l_minus - rho_minus).abs() < 1e-9);
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "acceptance 01 PASS: l_minus = {:.6} (= 65/150 within 0.5/150), mu = {:.6}, {:?}",
        spec.l_minus, mu, elapsed
    );
}

#[test]
fn criterion_02_exponential_reference_end_state_geometry() {
    let start = Instant::now();
    let v = VelocityLaw::ExponentialA { v_max: 1.0, gamma: 1.0, a: 0.0 };
    let f = FluxModel::from_velocity(v);
    let alpha = 89.0 / 150.0;
    let d = DiffusivityModel::direct("pinned alpha", move |x| alpha - x, |_| -1.0);
    let pattern = fluxgeom::sign_pattern(&d, 1e-9).unwrap();
    let spec =
        existence::solve_pair_from_l_plus(&f, &d, &pattern, 147.0 / 150.0, &scan()).unwrap();
    let elapsed = start.elapsed();
    assert!(
        (spec.l_minus - 61.0 / 150.0).abs() <= 2.0 / 150.0,
        "l_minus = {} not within 2/150 of 61/150",
        spec.l_minus
    );
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "acceptance 02 PASS: l_minus = {:.6} (~61/150 within 2/150), {:?}",
        spec.l_minus, elapsed
    );
}

#[test]
fn criterion_03_mu_window_values_and_emptiness() {
    let w = mu_window(0.75);
    assert!((w.lo - (-0.3125)).abs() <= 1e-12, "lo = {}", w.lo);
    assert!((w.hi - (-0.1875)).abs() <= 1e-12, "hi = {}", w.hi);
    assert!(!w.is_empty());
    assert!(mu_window(0.5).is_empty());
    println!("acceptance 03 PASS: window(0.75) = ({}, {}), window(0.5) empty", w.lo, w.hi);
}

#[test]
fn criterion_04_round_trip_and_solver_agreement() {
    let alpha = 0.75;
    let w = mu_window(alpha);
    let f = FluxModel::cubic(1.0);
    let width = w.hi - w.lo;
    let mut worst_round_trip = 0.0f64;
    let mut worst_solver = 0.0f64;
    for i in 0..50 {
        // 50 slopes strictly inside the window
        let mu = w.lo + width * (0.02 + 0.96 * i as f64 / 49.0);
        let (_, rho_plus) = cubic_end_states(alpha, mu).unwrap();
        worst_round_trip = worst_round_trip.max((mu_from_rho_plus(alpha, rho_plus) - mu).abs());

        let fam = existence::end_states_general(&f, alpha, (mu, mu), 1, &scan());
        let member = fam.members.first().unwrap_or_else(|| panic!("no member at mu = {mu}"));
        let (rm, rp) = cubic_end_states(alpha, mu).unwrap();
        worst_solver = worst_solver
            .max((member.l_minus - rm).abs())
            .max((member.l_plus - rp).abs());
    }
    assert!(worst_round_trip <= 1e-12, "round trip {worst_round_trip:e}");
    assert!(worst_solver <= 1e-8, "solver vs closed form {worst_solver:e}");
    println!(
        "acceptance 04 PASS: mu round trip {worst_round_trip:e} <= 1e-12, solver {worst_solver:e} <= 1e-8"
    );
}

#[test]
fn criterion_05_collinearity_residuals_on_accepted_specs() {
    let mut specs: Vec<WaveSpec> = Vec::new();
    for mu in [-0.30, -0.25, -0.20] {
        specs.push(cubic_d1_spec(0.75, mu));
    }
    specs.push(cubic_d1_spec(88.0 / 150.0, mu_from_rho_plus(88.0 / 150.0, 0.98)));
    // a D2 front through two crossings
    {
        let (lm, alpha, beta, lp) = (0.1, 0.35, 0.65, 0.9);
        let w = move |x: f64| -(x - lm) * (x - alpha) * (x - beta) * (x - lp);
        let offset = -w(0.0);
        let f = FluxModel::direct("quartic", move |x| 0.2 * x + offset + w(x), move |x| {
            0.2 - ((x - alpha) * (x - beta) * (x - lp)
                + (x - lm) * (x - beta) * (x - lp)
                + (x - lm) * (x - alpha) * (x - lp)
                + (x - lm) * (x - alpha) * (x - beta))
        })
        .unwrap();
        let d = DiffusivityModel::direct(
            "two crossings",
            move |x| (x - alpha) * (x - beta),
            move |x| 2.0 * x - alpha - beta,
        );
        let p = fluxgeom::sign_pattern(&d, 1e-9).unwrap();
        specs.push(check_existence_d2(&f, &d, &p, lm, lp, &scan()).unwrap());
    }

    let mut worst_residual = 0.0f64;
    let mut worst_f = 0.0f64;
    for spec in &specs {
        worst_residual = worst_residual.max(spec.collinearity_residual);
        let mut stations = vec![spec.l_minus, spec.l_plus];
        stations.extend(spec.interior_zeros());
        for s in stations {
            worst_f = worst_f.max(spec.chord_residual(s).abs());
        }
    }
    assert!(worst_residual < 1e-10, "residual {worst_residual:e}");
    assert!(worst_f < 1e-10, "F at stations {worst_f:e}");
    println!(
        "acceptance 05 PASS: {} accepted specs, secant residual {worst_residual:e}, F residual {worst_f:e}",
        specs.len()
    );
}

#[test]
fn criterion_06_oracle_equivalence_on_benchmark() {
    let start = Instant::now();
    let spec = benchmark_spec();
    let quad = profile::xi_of_phi(&spec, &opts()).unwrap();
    let ode = profile::ode_oracle(&spec, &opts()).unwrap();
    let (lo, hi) = (ode.samples.first().unwrap().phi, ode.samples.last().unwrap().phi);
    let mut sup = 0.0f64;
    let mut n = 0;
    for s in &quad.samples {
        if s.phi > lo && s.phi < hi {
            sup = sup.max((s.xi - ode.xi_at_phi(s.phi).unwrap()).abs());
            n += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(n > 200, "only {n} comparison points");
    assert!(sup < 1e-6, "sup deviation {sup:e}");
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("acceptance 06 PASS: sup |xi_quad - xi_ode| = {sup:e} over {n} points, {elapsed:?}");
}

#[test]
fn criterion_07_slope_law_under_grid_refinement() {
    let spec = benchmark_spec();
    let alpha = 0.75;
    let expected = (spec.flux.deriv(alpha) - spec.speed) / spec.diffusivity.deriv(alpha);
    let p = profile::xi_of_phi(&spec, &opts()).unwrap();
    match p.crossing_slope {
        Some(CrossingSlope::Finite(s)) => assert!((s - expected).abs() < 1e-12),
        other => panic!("expected finite crossing slope, got {other:?}"),
    }
    let anchor = p.samples.iter().position(|s| s.xi == 0.0).unwrap();
    // divided differences over sample pairs straddling the anchor; the
    // graded ladder gives offsets shrinking toward the crossing
    let mut offsets_and_errors = Vec::new();
    for k in (1..=21).rev() {
        let (a, b) = (&p.samples[anchor - k], &p.samples[anchor + k]);
        let dd = (b.phi - a.phi) / (b.xi - a.xi);
        let d_eff = (b.phi - a.phi).abs();
        offsets_and_errors.push((d_eff, ((dd - expected) / expected).abs()));
    }
    // finest level within 1e-4 relative
    let (_, e_fine) = *offsets_and_errors.last().unwrap();
    assert!(e_fine < 1e-4, "finest relative error {e_fine:e}");
    // observed order >= 1 over the midrange (away from the rounding floor)
    let (d0, e0) = offsets_and_errors[2];
    let (d1, e1) = offsets_and_errors[10];
    let order = (e0 / e1).ln() / (d0 / d1).ln();
    assert!(order >= 1.0, "observed order {order}");
    println!(
        "acceptance 07 PASS: slope {expected:.6}, finest rel error {e_fine:e}, observed order {order:.2}"
    );
}

#[test]
fn criterion_08_sharpness_dichotomy() {
    // the flux sits above its zero chord on (0, 1)
    let f = FluxModel::direct("concave", |x| x * (1.0 - x), |x| 1.0 - 2.0 * x).unwrap();

    // D(0) = 0: finite left contact with vanishing flux product
    let d0 = DiffusivityModel::direct("vanishes at zero", |x| x * (1.0 - 0.5 * x), |x| 1.0 - x);
    let spec = const_sign_case(&f, &d0, 0.0, 1.0, &scan()).unwrap().expect("increasing front");
    let p = profile::xi_of_phi(&spec, &opts()).unwrap();
    let xi_contact = match p.left_tail {
        TailContact::Sharp { xi } => xi,
        other => panic!("expected sharp contact, got {other:?}"),
    };
    assert!(xi_contact.is_finite());
    // D(phi) phi' -> 0 at the contact (equals the chord residual F)
    let mut near: Vec<_> = p.samples.iter().filter(|s| s.dphi.is_some()).collect();
    near.sort_by(|a, b| a.phi.total_cmp(&b.phi));
    let product = d0.eval(near[0].phi) * near[0].dphi.unwrap();
    assert!(product.abs() < 1e-6, "flux product at contact {product:e}");

    // D(0) > 0: the tail outruns the xi horizon while the gap closes below
    // 1e-9
    let d1 = DiffusivityModel::direct("positive at zero", |_| 1.0, |_| 0.0);
    let spec = const_sign_case(&f, &d1, 0.0, 1.0, &scan()).unwrap().expect("increasing front");
    let horizon = 21.0;
    let tight = ProfileOpts { tail_tol: 1e-10, xi_horizon: horizon, ..opts() };
    let p = profile::xi_of_phi(&spec, &tight).unwrap();
    match p.left_tail {
        TailContact::Asymptotic { xi_cutoff, phi_gap } => {
            assert!(xi_cutoff.abs() > horizon, "cutoff {xi_cutoff} within horizon");
            assert!(phi_gap < 1e-9, "gap {phi_gap:e}");
        }
        other => panic!("expected asymptotic tail, got {other:?}"),
    }
    println!(
        "acceptance 08 PASS: sharp contact at xi = {xi_contact:.4} with flux product {product:e}; positive-D tail exceeds horizon with gap < 1e-9"
    );
}

#[test]
fn criterion_09_viscosity_suite() {
    let spec = benchmark_spec();
    let eps_list = [1.0, 0.5, 0.1, 0.01, 1e-3];
    let fam = viscosity::build_family(&spec, &eps_list, 0.0, &opts()).unwrap();

    // rescaling identity at every sample of every member
    let mut worst = 0.0f64;
    for (eps, p) in &fam.profiles {
        for s in p.samples.iter().step_by(3) {
            worst = worst.max((s.phi - fam.base.phi_at(s.xi / eps)).abs());
        }
    }
    assert!(worst < 1e-10, "rescaling identity deviation {worst:e}");

    let ordering = viscosity::ordering_check(&fam, 1e-8);
    assert!(ordering.holds, "{ordering:?}");

    let conv = viscosity::convergence_check(&fam, 0.1, 1e-3);
    assert!(conv.non_increasing, "{conv:?}");
    let d_last = conv.distances.last().unwrap().1;
    assert!(d_last < 1e-3, "d(1e-3) = {d_last:e}");

    let rh = viscosity::rankine_hugoniot_check(&fam.limit, &spec.flux);
    assert!(rh.total < 1e-10, "step residual {:e}", rh.total);

    // plateau limit: three-level step, sub-jumps satisfy the condition too
    let fam_plateau = viscosity::build_family(&spec, &eps_list, 0.7, &opts()).unwrap();
    let rh_plateau = viscosity::rankine_hugoniot_check(&fam_plateau.limit, &spec.flux);
    assert!(rh_plateau.max_residual() < 1e-10, "{rh_plateau:?}");
    let conv_plateau = viscosity::convergence_check(&fam_plateau, 0.1, 1e-3);
    assert!(conv_plateau.non_increasing && conv_plateau.converged, "{conv_plateau:?}");

    println!(
        "acceptance 09 PASS: rescaling {worst:e}, ordering holds, d(1e-3) = {d_last:e}, RH residual {:e} (plateau {:e})",
        rh.total,
        rh_plateau.max_residual()
    );
}

#[test]
fn criterion_10_cubic_velocity_verdict_matches_grid_minimization() {
    let mut checked = 0usize;
    for i in 0..50 {
        for j in 0..50 {
            // offsets keep every cell safely away from the verdict boundary
            let alpha = (i as f64 + 0.137) / 50.0;
            let beta = (j as f64 + 0.789) / 50.0;
            if !(0.0 < alpha && alpha < beta && beta < 1.0) {
                continue;
            }
            let verdict = cubic_velocity_check(alpha, beta).unwrap();
            let v = cubic_velocity_law(alpha, beta);
            let grid_min = numerics::linspace(0.0, 1.0, 2048)
                .into_iter()
                .map(|x| v.eval(x))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(
                verdict.admissible,
                grid_min >= -1e-9,
                "mismatch at alpha={alpha}, beta={beta}: v_at_alpha={}, grid_min={grid_min}",
                verdict.v_at_alpha
            );
            checked += 1;
        }
    }
    assert!(checked > 1000, "only {checked} cells");
    println!("acceptance 10 PASS: formula verdict matches grid minimization on {checked} cells");
}

#[test]
fn criterion_11_reversed_sign_change_location() {
    let r = exponential_reversed_beta(0.5, 3.0, 1.0).unwrap();
    assert!(r.h_at_beta.abs() < 1e-10, "|h(beta)| = {:e}", r.h_at_beta);
    assert!(r.h_prime_at_beta > 0.0);

    let err = exponential_reversed_beta(0.5, 2.0, 1.0).unwrap_err();
    match err {
        ExistenceError::ConditionsNotMet { failed } => {
            assert_eq!(failed, vec!["gamma >= (1 + a) / a"]);
        }
        other => panic!("unexpected error {other:?}"),
    }
    println!(
        "acceptance 11 PASS: beta = {:.6} with |h| = {:e}, h' = {:.4} > 0; gamma = 2 refused naming the inequality",
        r.beta, r.h_at_beta, r.h_prime_at_beta
    );
}

#[test]
fn criterion_12_constant_sign_case_matrix() {
    // concave flux lies above the chord, convex below; affine part sets a
    // nonzero secant slope so the speed check is meaningful
    let concave =
        FluxModel::direct("concave", |x| x * (1.0 - x) + 0.3 * x, |x| 1.3 - 2.0 * x).unwrap();
    let convex =
        FluxModel::direct("convex", |x| -x * (1.0 - x) + 0.3 * x, |x| -0.7 + 2.0 * x).unwrap();
    let d_pos = DiffusivityModel::direct("plus", |_| 1.0, |_| 0.0);
    let d_neg = DiffusivityModel::direct("minus", |_| -1.0, |_| 0.0);

    let cases = [
        (&concave, &d_pos, ConstSignCase::A1),
        (&convex, &d_pos, ConstSignCase::A2),
        (&concave, &d_neg, ConstSignCase::B1),
        (&convex, &d_neg, ConstSignCase::B2),
    ];
    for (f, d, want) in cases {
        let spec = const_sign_case(f, d, 0.0, 1.0, &scan()).unwrap().expect("case applies");
        match spec.regime {
            Regime::ConstSign { case, .. } => assert_eq!(case, want),
            other => panic!("unexpected regime {other:?}"),
        }
        let secant = (f.eval(1.0) - f.eval(0.0)) / 1.0;
        assert!((spec.speed - secant).abs() <= 1e-12, "speed {} vs secant {secant}", spec.speed);
    }
    println!("acceptance 12 PASS: four constant-sign instances classified with exact speeds");
}
