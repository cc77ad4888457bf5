mod common;

use std::f64::consts::PI;

use casimir_reduce::lift::{
    casimir_energy, energy_report, kinetic_energy, lift, lift_parts, reduction_gap, PhaseSpaceState,
};
use casimir_reduce::radial::{potential_from_density, RadialDensity, RadialGrid};
use casimir_reduce::steady::{solve_steady, SolveOptions, SteadyState};
use casimir_reduce::Model;
use common::{rel, simpson};

fn k_one() -> (Model, SteadyState, PhaseSpaceState) {
    let model = Model::q_polytrope(1.0).unwrap();
    let state = solve_steady(&model, 1.0, &SolveOptions::default()).unwrap();
    let f = lift(model.q().unwrap(), &state).unwrap();
    (model, state, f)
}

#[test]
fn kinetic_energy_matches_brute_force_double_quadrature() {
    let (_, state, f) = k_one();
    // f₀ = (λ(r) − v²/2)₊ / 2, integrated in (r, |v|) by nested Simpson rules
    let inner = |r: f64| -> f64 {
        let lambda = f.lambda(r);
        if lambda <= 0.0 {
            return 0.0;
        }
        let vmax = (2.0 * lambda).sqrt();
        simpson(0.0, vmax, 400, |v| {
            0.5 * v * v * 0.5 * (lambda - 0.5 * v * v) * 4.0 * PI * v * v
        })
    };
    let brute = simpson(0.0, state.radius, 20_000, |r| 4.0 * PI * r * r * inner(r));
    let got = kinetic_energy(&f).unwrap();
    assert!(got > 0.0);
    assert!(rel(got, brute) < 1e-8, "{got} vs {brute}");
}

#[test]
fn casimir_plus_kinetic_equals_internal_energy() {
    let (model, state, f) = k_one();
    let q = model.q().unwrap();
    let c = casimir_energy(q, &f).unwrap();
    let k = kinetic_energy(&f).unwrap();
    assert!(rel(c + k, state.energies.internal) < 1e-8);
    let gap = reduction_gap(q, model.phi(), &state).unwrap();
    assert!(gap.abs() < 1e-8 * state.energies.reduced_total.abs());
}

#[test]
fn dilation_scalings() {
    let (model, _, f) = k_one();
    let q = model.q().unwrap();
    let (c0, k0) = (casimir_energy(q, &f).unwrap(), kinetic_energy(&f).unwrap());
    for beta in [0.5, 0.9, 1.3, 2.0] {
        let fb = f.dilated(beta).unwrap();
        assert!(rel(kinetic_energy(&fb).unwrap(), beta * beta * k0) < 1e-10);
        // Q(f) = f²: Q(β⁻³f) = β⁻⁶Q(f), times β³ from the velocity volume
        assert!(rel(casimir_energy(q, &fb).unwrap(), beta.powi(-3) * c0) < 1e-10);
    }
}

#[test]
fn dilated_state_keeps_the_spatial_density() {
    let (_, state, f) = k_one();
    let fb = f.dilated(1.7).unwrap();
    for r in [0.0, 0.3 * state.radius, 0.8 * state.radius] {
        let u = fb.potential().eval(r);
        let vmax = (2.0 * fb.lambda(r)).sqrt() * 1.7;
        let rho = simpson(0.0, vmax, 2000, |v| {
            4.0 * PI * v * v * fb.eval(r, u + 0.5 * v * v).unwrap()
        });
        let expected = f.spatial_density(r).unwrap();
        assert!(rel(rho, expected) < 1e-8, "r = {r}: {rho} vs {expected}");
        assert!(rel(expected, state.density.eval(r)) < 1e-5);
    }
}

#[test]
fn lift_vanishes_outside_the_support_and_above_e0() {
    let (_, state, f) = k_one();
    let r = 1.5 * state.radius;
    let u = f.potential().eval(r);
    assert!(u >= state.e0);
    assert_eq!(f.eval(r, u).unwrap(), 0.0);
    let r_in = 0.5 * state.radius;
    assert_eq!(f.eval(r_in, state.e0 + 0.1).unwrap(), 0.0);
    assert!(f.eval(r_in, f.potential().eval(r_in)).unwrap() > 0.0);
    assert!(f.eval(r_in, f.potential().eval(r_in) - 1.0).is_err());
}

#[test]
fn exported_table_is_nonnegative_and_covers_the_support() {
    let (_, state, f) = k_one();
    let rows = f.table(5).unwrap();
    assert!(!rows.is_empty());
    assert!(rows
        .iter()
        .all(|row| row.f >= 0.0 && row.r <= state.radius * (1.0 + 1e-12)));
    assert!(rows.iter().any(|row| row.r == 0.0));
    for row in rows.iter().filter(|row| row.energy == state.e0) {
        assert_eq!(row.f, 0.0);
    }
}

#[test]
fn empty_state_has_zero_energies() {
    let model = Model::q_polytrope(1.0).unwrap();
    let q = model.q().unwrap();
    let rho = RadialDensity::zero(RadialGrid::uniform(1.0, 50).unwrap());
    let f = lift_parts(q, -1.0, potential_from_density(&rho), rho).unwrap();
    assert_eq!(kinetic_energy(&f).unwrap(), 0.0);
    assert_eq!(casimir_energy(q, &f).unwrap(), 0.0);
    let report = energy_report(q, model.phi(), &f, 0.0).unwrap();
    assert_eq!(report.gap, 0.0);
}

#[test]
fn broadened_competitors_have_positive_gap() {
    let model = Model::q_polytrope(0.5).unwrap();
    let state = solve_steady(&model, 1.0, &SolveOptions::default()).unwrap();
    let q = model.q().unwrap();
    let f = lift(q, &state).unwrap();
    let base = energy_report(q, model.phi(), &f, state.energies.epot).unwrap();
    for beta in [0.7, 0.97, 1.03, 1.5] {
        let r = energy_report(q, model.phi(), &f.dilated(beta).unwrap(), state.energies.epot).unwrap();
        assert!(r.gap > 0.0, "beta {beta}: {r:?}");
        assert!(r.total > base.total);
        assert!(rel(r.internal, base.internal) < 1e-12);
    }
}
