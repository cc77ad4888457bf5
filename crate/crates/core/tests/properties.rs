mod common;

use std::f64::consts::PI;

use casimir_reduce::convex::{
    conjugate, emden_rhs, make_polytrope_phi, make_polytrope_q, per_point_velocity_minimizer, phi_from_q,
    velocity_reduce, ConvexScalarFunction, Extended, GrowthEnvelope, LeftBranch, SampleRange, SampleTable,
};
use casimir_reduce::minimize::{coercivity_bound, rearrange_decreasing};
use casimir_reduce::radial::{
    interaction_energy, internal_energy, potential_at, potential_energy, potential_energy_via_potential,
    potential_from_density, resample, scale_density, RadialDensity,
};
use common::{epot_brute, random_density, rel, simpson};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn density(seed: u64, nodes: usize) -> RadialDensity {
    random_density(&mut ChaCha8Rng::seed_from_u64(seed), nodes)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fenchel_young_for_polytrope_q(k in 0.1f64..1.45, x in 1e-3f64..1e2, y in 1e-3f64..1e2) {
        let q = make_polytrope_q(k).unwrap();
        let qs = conjugate(&q).unwrap();
        let scale = x * y + q.value(x).unwrap() + qs.value(y).unwrap();
        prop_assert!(q.value(x).unwrap() + qs.value(y).unwrap() >= x * y - 1e-12 * scale);
        // equality on the graph of Q'
        let s = q.derivative(x).unwrap();
        let gap = q.value(x).unwrap() + qs.value(s).unwrap() - x * s;
        prop_assert!(gap.abs() <= 1e-10 * x * s, "gap {}", gap);
    }

    #[test]
    fn conjugates_vanish_on_negatives(k in 0.1f64..1.45, y in -1e3f64..0.0) {
        let q = make_polytrope_q(k).unwrap();
        let qs = conjugate(&q).unwrap();
        prop_assert_eq!(qs.value(y).unwrap(), 0.0);
        prop_assert_eq!(qs.derivative(y).unwrap(), 0.0);
        prop_assert_eq!(q.eval(y.min(-1e-300)).unwrap(), Extended::PlusInfinity);
        let g = emden_rhs(&q).unwrap();
        prop_assert_eq!(g.eval(y).unwrap(), 0.0);
    }

    #[test]
    fn scaling_identities(seed in any::<u64>(), a in 0.05f64..30.0, b in 0.2f64..5.0, n in 0.5f64..2.9) {
        let rho = density(seed, 200);
        let s = scale_density(&rho, a, b).unwrap();
        prop_assert!(rel(s.mass(), a / b.powi(3) * rho.mass()) < 1e-12);
        prop_assert!(rel(potential_energy(&s), a * a / b.powi(5) * potential_energy(&rho)) < 1e-12);
        let phi = make_polytrope_phi(n).unwrap();
        let lhs = internal_energy(&phi, &s).unwrap();
        let rhs = internal_energy(&phi, &rho.scaled_values(a).unwrap()).unwrap() / b.powi(3);
        prop_assert!(rel(lhs, rhs) < 1e-12);
    }

    #[test]
    fn potential_energy_routes_agree(seed in any::<u64>()) {
        let rho = density(seed, 300);
        let a = potential_energy(&rho);
        prop_assert!(a < 0.0);
        prop_assert!(rel(potential_energy_via_potential(&rho), a) < 1e-10);
        prop_assert!(rel(epot_brute(&rho, 40_000), a) < 1e-6);
    }

    #[test]
    fn far_field_is_point_mass(seed in any::<u64>(), stretch in 1.0f64..50.0) {
        let rho = density(seed, 200);
        let m = rho.mass();
        let r = rho.support_radius() * stretch;
        prop_assert!(rel(potential_at(&rho, r), -m / r) < 1e-12);
        let u = potential_from_density(&rho);
        let far = rho.grid().r_max() * (1.0 + stretch);
        prop_assert!(rel(u.eval(far), -m / far) < 1e-12);
        prop_assert!(rel(u.derivative(far), m / (far * far)) < 1e-12);
    }

    #[test]
    fn interaction_is_symmetric_bilinear(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>(), c in 0.1f64..5.0) {
        let r1 = density(s1, 200);
        let grid = r1.grid().clone();
        let r2 = resample(&density(s2, 200), grid.clone()).unwrap();
        let r3 = resample(&density(s3, 200), grid.clone()).unwrap();
        let combo = RadialDensity::new(
            grid,
            r1.values().iter().zip(r2.values()).map(|(x, y)| x + c * y).collect(),
        ).unwrap();
        let lhs = interaction_energy(&combo, &r3).unwrap();
        let rhs = interaction_energy(&r1, &r3).unwrap() + c * interaction_energy(&r2, &r3).unwrap();
        prop_assert!(rel(lhs, rhs) < 1e-12);
        prop_assert!(rel(interaction_energy(&r1, &r2).unwrap(), interaction_energy(&r2, &r1).unwrap()) < 1e-14);
        prop_assert!(rel(interaction_energy(&r1, &r1).unwrap(), -2.0 * potential_energy(&r1)) < 1e-12);
    }

    #[test]
    fn coercivity_along_mass_preserving_family(seed in any::<u64>(), n in 0.5f64..2.9, k_exp in -3i32..3) {
        let rho = density(seed, 200);
        let phi = make_polytrope_phi(n).unwrap();
        let env = GrowthEnvelope::for_power(1.0, n).unwrap();
        let b = 10f64.powi(k_exp);
        let scaled = scale_density(&rho, b.powi(3), b).unwrap();
        let report = coercivity_bound(&phi, &env, &scaled).unwrap();
        prop_assert!(report.satisfied, "{:?}", report);
    }

    #[test]
    fn velocity_minimizer_beats_same_density_competitors(
        k in 0.2f64..1.4,
        lambda in 0.1f64..10.0,
        beta in prop_oneof![0.4f64..0.9, 1.1f64..2.5],
        j in prop_oneof![Just(0.0f64), Just(2.5), Just(3.0)],
        spread in 0.5f64..2.0,
    ) {
        let q = make_polytrope_q(k).unwrap();
        let prof = per_point_velocity_minimizer(&q, lambda);
        let rho = prof.density().unwrap();
        let best = prof.cost().unwrap();
        let vol = 4.0 * PI;
        // dilation β⁻³g₀(v/β) keeps the density
        let kin0 = best - casimir_density(&q, &prof, 1.0);
        let dilated = beta * beta * kin0 + casimir_density(&q, &prof, beta);
        prop_assert!(dilated > best, "dilated {} vs {}", dilated, best);
        // A (V² − v²)₊^j with the same density
        let v_max = spread * prof.support_radius();
        let cost = if j == 0.0 {
            let a = rho / (vol / 3.0 * v_max.powi(3));
            a * vol * v_max.powi(5) / 10.0 + q.value(a).unwrap() * vol / 3.0 * v_max.powi(3)
        } else {
            let shape = |v: f64| (v_max * v_max - v * v).max(0.0).powf(j);
            let mass = simpson(0.0, v_max, 4000, |v| vol * v * v * shape(v));
            let a = rho / mass;
            simpson(0.0, v_max, 4000, |v| vol * v * v * (0.5 * v * v * a * shape(v) + q.value(a * shape(v)).unwrap()))
        };
        prop_assert!(cost > best, "competitor {} vs {}", cost, best);
    }
}

/// `∫ Q(β⁻³ g₀(v/β)) dv`.
fn casimir_density(q: &ConvexScalarFunction, prof: &casimir_reduce::convex::VelocityProfile<'_>, beta: f64) -> f64 {
    let b3 = beta.powi(3);
    let quad = casimir_reduce::quadrature::TanhSinh::default();
    b3 * casimir_reduce::convex::velocity_integral(&quad, prof.lambda(), |s| q.value(q.inverse_derivative(s)? / b3))
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn reduction_gives_g_as_derivative_of_phi_star(k in 0.2f64..1.45, lambda in 1e-2f64..1e2) {
        let q = make_polytrope_q(k).unwrap();
        let phi_star = velocity_reduce(&conjugate(&q).unwrap()).unwrap();
        let g = emden_rhs(&q).unwrap();
        prop_assert!(rel(phi_star.derivative(lambda).unwrap(), g.eval(lambda).unwrap()) < 1e-9);
        // and Φ* matches the conjugate of Φ
        let phi = phi_from_q(&q).unwrap();
        let phi_star_again = conjugate(&phi).unwrap();
        prop_assert!(rel(phi_star_again.value(lambda).unwrap(), phi_star.value(lambda).unwrap()) < 1e-8);
    }

    #[test]
    fn polytrope_closure(k in 0.1f64..1.45) {
        let phi = phi_from_q(&make_polytrope_q(k).unwrap()).unwrap();
        let expected = 1.0 + 1.0 / (k + 1.5);
        let worst = phi.local_exponents().iter().map(|e| (e - expected).abs()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-8, "worst exponent deviation {}", worst);
    }

    #[test]
    fn rearrangement_properties(seed in any::<u64>(), n in 0.5f64..2.9) {
        let rho = density(seed, 150);
        let star = rearrange_decreasing(&rho).unwrap();
        prop_assert!(star.values().windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(rel(star.mass(), rho.mass()) < 1e-10);
        let phi = make_polytrope_phi(n).unwrap();
        prop_assert!(rel(internal_energy(&phi, &star).unwrap(), internal_energy(&phi, &rho).unwrap()) < 1e-8);
        prop_assert!(potential_energy(&star) <= potential_energy(&rho));
        let again = rearrange_decreasing(&star).unwrap();
        prop_assert_eq!(again.values(), star.values());
    }
}

#[test]
fn growth_envelope_sandwiches_mixed_casimir() {
    // Q(f) = f² + f³ behaves like k = 1 near zero and k = 1/2 at large f
    let xs = SampleRange::default().abscissae();
    let table = SampleTable {
        values: xs.iter().map(|f| f * f + f * f * f).collect(),
        derivatives: xs.iter().map(|f| 2.0 * f + 3.0 * f * f).collect(),
        abscissae: xs,
    };
    let q = ConvexScalarFunction::tabulated(table, LeftBranch::PlusInfinity, true).unwrap();
    let phi = phi_from_q(&q).unwrap();
    let env = GrowthEnvelope::fit(&phi).unwrap();
    assert!((env.upper.index - 2.5).abs() < 1e-2, "{env:?}");
    assert!((env.lower.index - 2.0).abs() < 1e-2, "{env:?}");
    let t = phi.table();
    let samples: Vec<f64> = t.abscissae.iter().step_by(7).copied().collect();
    assert!(env.violations(&phi, &samples).unwrap().is_empty());
}
