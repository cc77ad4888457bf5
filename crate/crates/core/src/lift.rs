//! The phase-space steady state `f₀ = (Q')⁻¹((E₀ − E)₊)`,
//! `E = |v|²/2 + U₀(x)`, of a reduced minimizer and the phase-space
//! functionals.
//!
//! Isotropy makes `f` a function of `r` and `e = |v|²/2`; velocity integrals
//! use `dv = 4π√2 √e de`. Besides the lift itself the state can carry a
//! velocity dilation `f_β(x, v) = β⁻³ f₀(x, v/β)`, which keeps the spatial
//! density and is used to build competitors.

use std::f64::consts::PI;

use serde::Serialize;

use crate::convex::{velocity_integral, ConvexScalarFunction};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{gauss_legendre_8, TanhSinh};
use crate::radial::{RadialDensity, RadialPotential, ReducedEnergies};
use crate::steady::SteadyState;

const FOUR_PI: f64 = 4.0 * PI;

#[derive(Clone, Debug)]
pub struct PhaseSpaceState {
    q: ConvexScalarFunction,
    e0: f64,
    potential: RadialPotential,
    density: RadialDensity,
    dilation: f64,
}

/// One row of the `(r, E)` table of `f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseSample {
    pub r: f64,
    pub energy: f64,
    pub f: f64,
}

impl PhaseSpaceState {
    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn potential(&self) -> &RadialPotential {
        &self.potential
    }

    pub fn dilation(&self) -> f64 {
        self.dilation
    }

    /// `E₀ − U₀(r)`.
    pub fn lambda(&self, r: f64) -> f64 {
        self.e0 - self.potential.eval(r)
    }

    /// `f` at radius `r` and particle energy `E ≥ U₀(r)`.
    pub fn eval(&self, r: f64, energy: f64) -> Result<f64> {
        let u = self.potential.eval(r);
        if energy < u {
            return Err(invalid(format!("energy {energy} below the potential {u} at r = {r}")));
        }
        let e = energy - u;
        let b = self.dilation;
        Ok(self.q.inverse_derivative(self.e0 - u - e / (b * b))? / (b * b * b))
    }

    /// The same spatial density with velocities stretched by `beta`.
    pub fn dilated(&self, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid(format!("dilation must be positive, got {beta}")));
        }
        Ok(Self {
            dilation: self.dilation * beta,
            ..self.clone()
        })
    }

    /// `∫ f(r, ·) dv`.
    pub fn spatial_density(&self, r: f64) -> Result<f64> {
        velocity_integral(&TanhSinh::default(), self.lambda(r), |s| self.q.inverse_derivative(s))
    }

    /// `(r, E, f)` on the grid nodes inside the support, with `samples`
    /// energies spread over `[U₀(r), E₀]`.
    pub fn table(&self, samples: usize) -> Result<Vec<PhaseSample>> {
        let mut rows = Vec::new();
        for &r in self.potential.grid().nodes() {
            let u = self.potential.eval(r);
            let top = u + (self.e0 - u) * self.dilation * self.dilation;
            if top <= u {
                continue;
            }
            for j in 0..samples {
                let energy = u + (top - u) * j as f64 / (samples - 1).max(1) as f64;
                rows.push(PhaseSample {
                    r,
                    energy,
                    f: self.eval(r, energy)?,
                });
            }
        }
        Ok(rows)
    }

    /// Gauss points `(r, weight · 4πr², λ(r))` over the support.
    fn support_points(&self) -> Vec<(f64, f64, f64)> {
        let nodes = self.potential.grid().nodes();
        let mut pts = Vec::new();
        for i in 0..nodes.len() - 1 {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let (la, lb) = (self.lambda(a), self.lambda(b));
            if la <= 0.0 && lb <= 0.0 {
                continue;
            }
            let (lo, hi) = if la > 0.0 && lb > 0.0 {
                (a, b)
            } else {
                // the edge lies in this cell; λ is monotone here
                let (mut x, mut y) = (a, b);
                for _ in 0..200 {
                    let mid = 0.5 * (x + y);
                    if mid <= x || mid >= y {
                        break;
                    }
                    if (self.lambda(mid) > 0.0) == (la > 0.0) {
                        x = mid;
                    } else {
                        y = mid;
                    }
                }
                if la > 0.0 {
                    (a, 0.5 * (x + y))
                } else {
                    (0.5 * (x + y), b)
                }
            };
            for (r, w) in gauss_legendre_8(lo, hi) {
                let l = self.lambda(r);
                if l > 0.0 {
                    pts.push((r, w * FOUR_PI * r * r, l));
                }
            }
        }
        pts
    }
}

/// `f₀ = (Q')⁻¹((E₀ − E)₊)` for a solved state. Fails with a model mismatch
/// if `∫ f₀ dv` misses `ρ₀` by more than `1e-6 · max(ρ₀, 1e-9 max ρ₀)` at any
/// node inside the support.
pub fn lift(q: &ConvexScalarFunction, state: &SteadyState) -> Result<PhaseSpaceState> {
    lift_parts(q, state.e0, state.potential.clone(), state.density.clone())
}

pub fn lift_parts(
    q: &ConvexScalarFunction,
    e0: f64,
    potential: RadialPotential,
    density: RadialDensity,
) -> Result<PhaseSpaceState> {
    let f = PhaseSpaceState {
        q: q.clone(),
        e0,
        potential,
        density,
        dilation: 1.0,
    };
    let nodes = f.density.grid().nodes();
    let peak = f.density.values().iter().copied().fold(0.0, f64::max);
    for (i, &expected) in f.density.values().iter().enumerate() {
        if expected <= 0.0 {
            continue;
        }
        let got = f.spatial_density(nodes[i])?;
        // E₀ − U₀ cancels at the edge; measure tiny densities against a floor
        if (got - expected).abs() > 1e-6 * expected.max(1e-9 * peak) {
            return Err(Error::ModelMismatch(format!(
                "velocity integral of (Q')⁻¹ gives {got} but the density is {expected} at r = {}",
                nodes[i]
            )));
        }
    }
    Ok(f)
}

/// `½ ∫∫ |v|² f dv dx`.
pub fn kinetic_energy(f: &PhaseSpaceState) -> Result<f64> {
    let quad = TanhSinh::default();
    let mut acc = 0.0;
    for (_, w, lambda) in f.support_points() {
        acc += w * velocity_integral(&quad, lambda, |s| Ok((lambda - s) * f.q.inverse_derivative(s)?))?;
    }
    Ok(f.dilation * f.dilation * acc)
}

/// `∫∫ Q(f) dv dx`.
pub fn casimir_energy(q: &ConvexScalarFunction, f: &PhaseSpaceState) -> Result<f64> {
    let quad = TanhSinh::default();
    let b3 = f.dilation.powi(3);
    let mut acc = 0.0;
    for (_, w, lambda) in f.support_points() {
        acc += w * velocity_integral(&quad, lambda, |s| q.value(f.q.inverse_derivative(s)? / b3))?;
    }
    Ok(b3 * acc)
}

/// `∫ Φ(ρ_f) dx` with `ρ_f` the velocity integral of `f`.
pub fn internal_energy_of(phi: &ConvexScalarFunction, f: &PhaseSpaceState) -> Result<f64> {
    let mut acc = 0.0;
    for (r, w, _) in f.support_points() {
        acc += w * phi.value(f.spatial_density(r)?)?;
    }
    Ok(acc)
}

/// All functionals of a phase-space state and its spatial density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub casimir: f64,
    pub kinetic: f64,
    pub epot: f64,
    pub internal: f64,
    pub reduced_total: f64,
    pub total: f64,
    /// `ℋ_C(f) − ℋ^r(ρ_f)`.
    pub gap: f64,
}

/// Energies of `f`; `epot` is that of the common spatial density.
pub fn energy_report(
    q: &ConvexScalarFunction,
    phi: &ConvexScalarFunction,
    f: &PhaseSpaceState,
    epot: f64,
) -> Result<EnergyReport> {
    let casimir = casimir_energy(q, f)?;
    let kinetic = kinetic_energy(f)?;
    let internal = internal_energy_of(phi, f)?;
    let total = casimir + kinetic + epot;
    let reduced_total = internal + epot;
    Ok(EnergyReport {
        casimir,
        kinetic,
        epot,
        internal,
        reduced_total,
        total,
        gap: total - reduced_total,
    })
}

/// `ℋ_C(f₀) − ℋ^r(ρ₀)` for the lift of a solved state.
pub fn reduction_gap(q: &ConvexScalarFunction, phi: &ConvexScalarFunction, state: &SteadyState) -> Result<f64> {
    let f = lift(q, state)?;
    Ok(energy_report(q, phi, &f, state.energies.epot)?.gap)
}

/// Reduced energies paired with the phase-space report of the lift.
pub fn full_report(
    q: &ConvexScalarFunction,
    phi: &ConvexScalarFunction,
    state: &SteadyState,
) -> Result<(ReducedEnergies, EnergyReport)> {
    let f = lift(q, state)?;
    Ok((state.energies, energy_report(q, phi, &f, state.energies.epot)?))
}
