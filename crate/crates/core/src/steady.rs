//! Steady states from the Emden–Fowler equation
//! `w'' + (2/r) w' = −4π g(w₊)`, `w = E₀ − U₀`, by shooting from a regular
//! center.

use std::f64::consts::PI;

use serde::Serialize;

use crate::convex::{ConvexScalarFunction, GFunction};
use crate::error::{invalid, Error, Result};
use crate::model::Model;
use crate::ode::{dopri_step, next_step, OdeTol};
use crate::radial::{internal_energy, scale_density, RadialDensity, RadialGrid, RadialPotential, ReducedEnergies};
use crate::roots::{find_root, RootTol};

/// Controls for a single shot.
#[derive(Clone, Copy, Debug)]
pub struct ShootOptions {
    pub tol: OdeTol,
    /// Series start radius in units of the central length `√(w_c / 4πg(w_c))`.
    pub start_fraction: f64,
    /// Give up beyond this many central lengths.
    pub max_radius_factor: f64,
    pub max_steps: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            tol: OdeTol::default(),
            start_fraction: 1e-4,
            max_radius_factor: 1e4,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileSample {
    pub r: f64,
    pub w: f64,
    pub dw: f64,
}

/// Solution of the Emden–Fowler equation up to its first zero.
#[derive(Clone, Debug, Serialize)]
pub struct ShootingProfile {
    pub central_value: f64,
    pub radius: f64,
    pub mass: f64,
    /// `E₀ = −M/R`.
    pub e0: f64,
    /// Accepted integrator steps, ending at the zero.
    pub samples: Vec<ProfileSample>,
}

struct Trajectory {
    radius: f64,
    mass: f64,
    /// `[w, w', −½∫r²w'², ∫4πr²Φ(g(w))]` at the requested radii.
    at_targets: Vec<[f64; 4]>,
    samples: Vec<ProfileSample>,
    epot_interior: f64,
    internal: f64,
}

fn series_state(g_c: f64, w_c: f64, phi_gc: f64, r: f64) -> [f64; 4] {
    [
        w_c - 2.0 * PI / 3.0 * g_c * r * r,
        -4.0 * PI / 3.0 * g_c * r,
        -0.5 * (16.0 * PI * PI / 9.0) * g_c * g_c * r.powi(5) / 5.0,
        4.0 * PI / 3.0 * r.powi(3) * phi_gc,
    ]
}

/// Integrates outwards from the center. Without targets the integration
/// stops at the first zero of `w`; with targets (increasing radii) it
/// steps onto each of them and stops at the last one.
fn integrate(
    g: &GFunction,
    phi: Option<&ConvexScalarFunction>,
    w_c: f64,
    opts: &ShootOptions,
    targets: &[f64],
) -> Result<Trajectory> {
    if !(w_c > 0.0 && w_c.is_finite()) {
        return Err(invalid(format!("central value must be positive, got {w_c}")));
    }
    let g_c = g.eval(w_c)?;
    if g_c <= 0.0 {
        return Err(Error::UnboundedProfile {
            max_radius: f64::INFINITY,
            last_value: w_c,
        });
    }
    let phi_gc = match phi {
        Some(p) => p.value(g_c)?,
        None => 0.0,
    };
    let length = (w_c / (4.0 * PI * g_c)).sqrt();
    let r_max = opts.max_radius_factor * length;
    let mut rhs = |r: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        let gw = g.eval(y[0].max(0.0))?;
        let internal = match phi {
            Some(p) if gw > 0.0 => 4.0 * PI * r * r * p.value(gw)?,
            _ => 0.0,
        };
        Ok([
            y[1],
            -4.0 * PI * gw - 2.0 * y[1] / r,
            -0.5 * r * r * y[1] * y[1],
            internal,
        ])
    };

    let event_mode = targets.is_empty();
    let mut at_targets = Vec::with_capacity(targets.len());
    let mut r = opts.start_fraction * length;
    let mut next = 0;
    while next < targets.len() && targets[next] <= r {
        at_targets.push(series_state(g_c, w_c, phi_gc, targets[next]));
        next += 1;
    }
    if !event_mode && next == targets.len() {
        let last = *at_targets.last().unwrap();
        return Ok(Trajectory {
            radius: targets[targets.len() - 1],
            mass: -targets[targets.len() - 1].powi(2) * last[1],
            at_targets,
            samples: Vec::new(),
            epot_interior: last[2],
            internal: last[3],
        });
    }
    let mut y = series_state(g_c, w_c, phi_gc, r);
    let mut samples = vec![ProfileSample { r, w: y[0], dw: y[1] }];
    let mut h = 1e-2 * length;
    for _ in 0..opts.max_steps {
        let target = targets.get(next).copied();
        let mut step = h.min(r_max - r);
        if let Some(t) = target {
            step = step.min(t - r);
        }
        if step <= 1e-15 * r {
            return Err(Error::Stiffness { radius: r });
        }
        let (yn, err) = dopri_step(&mut rhs, r, &y, step, opts.tol, 2)?;
        if !(err <= 1.0) {
            h = next_step(step, if err.is_finite() { err } else { 1e10 });
            continue;
        }
        if event_mode && yn[0] <= 0.0 {
            let (r0, y0) = (r, y);
            let s = find_root(
                |s| Ok(dopri_step(&mut rhs, r0, &y0, s, opts.tol, 2)?.0[0]),
                0.0,
                step,
                RootTol {
                    x_tol: 1e-15 * (r0 + step),
                    f_tol: 0.0,
                    max_iter: 200,
                },
            )?;
            let (ys, _) = dopri_step(&mut rhs, r0, &y0, s, opts.tol, 2)?;
            let radius = r0 + s;
            samples.push(ProfileSample {
                r: radius,
                w: 0.0,
                dw: ys[1],
            });
            return Ok(Trajectory {
                radius,
                mass: -radius * radius * ys[1],
                at_targets,
                samples,
                epot_interior: ys[2],
                internal: ys[3],
            });
        }
        let clipped = target.is_some_and(|t| step == t - r);
        r = if clipped { target.unwrap() } else { r + step };
        y = yn;
        samples.push(ProfileSample { r, w: y[0], dw: y[1] });
        if clipped {
            at_targets.push(y);
            next += 1;
            if next == targets.len() {
                return Ok(Trajectory {
                    radius: r,
                    mass: -r * r * y[1],
                    at_targets,
                    samples,
                    epot_interior: y[2],
                    internal: y[3],
                });
            }
        } else {
            h = next_step(step, err);
        }
        if r >= r_max {
            return Err(Error::UnboundedProfile {
                max_radius: r_max,
                last_value: y[0],
            });
        }
    }
    Err(Error::Stiffness { radius: r })
}

pub fn shoot(g: &GFunction, w_c: f64) -> Result<ShootingProfile> {
    shoot_with(g, w_c, &ShootOptions::default())
}

pub fn shoot_with(g: &GFunction, w_c: f64, opts: &ShootOptions) -> Result<ShootingProfile> {
    let t = integrate(g, None, w_c, opts, &[])?;
    Ok(ShootingProfile {
        central_value: w_c,
        radius: t.radius,
        mass: t.mass,
        e0: -t.mass / t.radius,
        samples: t.samples,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveRoute {
    /// Scaling route for homogeneous `g`, bisection otherwise.
    Auto,
    /// Map one reference profile to the target mass with the homogeneity of `g`.
    Scaling,
    /// Scan the central value and refine every mass crossing.
    Bisection,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub route: SolveRoute,
    pub grid_nodes: usize,
    pub shoot: ShootOptions,
    /// Central-value scan interval for the bisection route; defaults to
    /// `[1e-6, 1e6]` clipped to the trusted domain of `g`.
    pub scan_range: Option<(f64, f64)>,
    pub scan_points_per_decade: usize,
    pub mass_rtol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            route: SolveRoute::Auto,
            grid_nodes: 2000,
            shoot: ShootOptions::default(),
            scan_range: None,
            scan_points_per_decade: 8,
            mass_rtol: 1e-12,
        }
    }
}

/// One solution of the mass-matching problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolutionSummary {
    pub central_value: f64,
    pub radius: f64,
    pub mass: f64,
    pub e0: f64,
    pub reduced_total: f64,
    /// Lowest energy among the solutions found.
    pub candidate: bool,
}

/// A solved steady state on a radial grid.
#[derive(Clone, Debug)]
pub struct SteadyState {
    pub density: RadialDensity,
    pub potential: RadialPotential,
    pub e0: f64,
    pub radius: f64,
    pub mass: f64,
    pub central_value: f64,
    /// Energies integrated along the profile (not on the grid).
    pub energies: ReducedEnergies,
    pub route: SolveRoute,
    /// Every solution found for the requested mass (one for the scaling route).
    pub solutions: Vec<SolutionSummary>,
}

impl SteadyState {
    /// `w = E₀ − U₀` at the grid nodes.
    pub fn w(&self) -> Vec<f64> {
        self.potential.values().iter().map(|u| self.e0 - u).collect()
    }
}

fn energies_of(t: &Trajectory) -> ReducedEnergies {
    let epot = t.epot_interior - 0.5 * t.mass * t.mass / t.radius;
    ReducedEnergies {
        internal: t.internal,
        epot,
        exterior: 0.0,
        reduced_total: t.internal + epot,
    }
}

/// Builds the state with central value `w_c` on a grid graded towards its
/// support radius, with nodes out to twice that radius.
pub fn assemble_state(model: &Model, w_c: f64, nodes: usize, opts: &ShootOptions) -> Result<SteadyState> {
    let first = integrate(model.g(), Some(model.phi()), w_c, opts, &[])?;
    let radius = first.radius;
    let grid = RadialGrid::graded(radius, 2.0 * radius, nodes)?;
    let interior: Vec<f64> = grid
        .nodes()
        .iter()
        .copied()
        .filter(|&r| r > 0.0 && r <= radius)
        .collect();
    let second = integrate(model.g(), Some(model.phi()), w_c, opts, &interior)?;
    let mass = second.mass;
    let e0 = -mass / radius;
    let n = grid.len();
    let mut rho = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut m = Vec::with_capacity(n);
    let g_c = model.g().eval(w_c)?;
    rho.push(g_c);
    u.push(e0 - w_c);
    m.push(0.0);
    for (i, &r) in grid.nodes().iter().enumerate().skip(1) {
        if r <= radius {
            let [w, dw, _, _] = second.at_targets[i - 1];
            rho.push(model.g().eval(w.max(0.0))?);
            u.push(e0 - w);
            m.push(-r * r * dw);
        } else {
            rho.push(0.0);
            u.push(-mass / r);
            m.push(mass);
        }
    }
    let density = RadialDensity::new(grid.clone(), rho)?;
    let potential = RadialPotential::from_parts(grid, u, m)?;
    let energies = energies_of(&second);
    Ok(SteadyState {
        density,
        potential,
        e0,
        radius,
        mass,
        central_value: w_c,
        energies,
        route: SolveRoute::Auto,
        solutions: Vec::new(),
    })
}

fn scaling_central_value(model: &Model, mass: f64, opts: &ShootOptions) -> Result<f64> {
    let h = model
        .homogeneity()
        .ok_or_else(|| invalid("the scaling route needs a homogeneous g"))?;
    let n = h.exponent;
    if n == 3.0 {
        return Err(Error::BracketFailure(
            "for n = 3 the mass does not depend on the central value".into(),
        ));
    }
    // w̃(r) = α w(α^{(n−1)/2} r) solves the same equation with M̃ = α^{(3−n)/2} M
    let reference = integrate(model.g(), None, 1.0, opts, &[])?;
    Ok((mass / reference.mass).powf(2.0 / (3.0 - n)))
}

fn scan_central_values(model: &Model, mass: f64, options: &SolveOptions) -> Result<Vec<f64>> {
    let (lo, hi) = match options.scan_range {
        Some(r) => r,
        None => {
            let cutoff = model.g().cutoff();
            let lo = match model.g().samples() {
                Some((l, v)) => {
                    let p = v.iter().position(|&x| x > 0.0).unwrap_or(l.len() - 1);
                    l[p].max(1e-6)
                }
                None => 1e-6,
            };
            (lo, cutoff.min(1e6))
        }
    };
    if !(lo > 0.0 && hi > lo) {
        return Err(invalid(format!("bad central-value scan range [{lo}, {hi}]")));
    }
    let decades = (hi / lo).log10();
    let points = ((decades * options.scan_points_per_decade as f64).ceil() as usize).max(2) + 1;
    let xs: Vec<f64> = (0..points)
        .map(|i| lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (points - 1) as f64)
        .collect();
    let log_mass = |x: f64| -> Result<f64> {
        let t = integrate(model.g(), None, x.exp(), &options.shoot, &[])?;
        Ok((t.mass / mass).ln())
    };
    let values: Vec<Option<f64>> = xs.iter().map(|&x| log_mass(x).ok()).collect();
    let mut roots = Vec::new();
    for i in 0..points - 1 {
        let (Some(a), Some(b)) = (values[i], values[i + 1]) else {
            continue;
        };
        if a == 0.0 {
            roots.push(xs[i].exp());
            continue;
        }
        if a * b < 0.0 {
            let tol = RootTol {
                x_tol: 0.0,
                f_tol: options.mass_rtol,
                max_iter: 300,
            };
            if let Ok(x) = find_root(log_mass, xs[i], xs[i + 1], tol) {
                roots.push(x.exp());
            }
        }
    }
    if let Some(Some(last)) = values.last() {
        if *last == 0.0 {
            roots.push(hi);
        }
    }
    if roots.is_empty() {
        return Err(Error::BracketFailure(format!(
            "mass {mass} not attained for central values in [{lo:e}, {hi:e}]"
        )));
    }
    Ok(roots)
}

/// Steady state of prescribed mass.
pub fn solve_steady(model: &Model, mass: f64, options: &SolveOptions) -> Result<SteadyState> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(invalid(format!("mass must be positive, got {mass}")));
    }
    let route = match options.route {
        SolveRoute::Auto if model.homogeneity().is_some() => SolveRoute::Scaling,
        SolveRoute::Auto => SolveRoute::Bisection,
        r => r,
    };
    let central_values = match route {
        SolveRoute::Scaling => vec![scaling_central_value(model, mass, &options.shoot)?],
        _ => scan_central_values(model, mass, options)?,
    };
    let mut summaries = Vec::with_capacity(central_values.len());
    for &w_c in &central_values {
        let t = integrate(model.g(), Some(model.phi()), w_c, &options.shoot, &[])?;
        summaries.push(SolutionSummary {
            central_value: w_c,
            radius: t.radius,
            mass: t.mass,
            e0: -t.mass / t.radius,
            reduced_total: energies_of(&t).reduced_total,
            candidate: false,
        });
    }
    let best = (0..summaries.len())
        .min_by(|&a, &b| summaries[a].reduced_total.total_cmp(&summaries[b].reduced_total))
        .unwrap();
    summaries[best].candidate = true;
    let mut state = assemble_state(model, central_values[best], options.grid_nodes, &options.shoot)?;
    if (state.mass - mass).abs() > 1e-8 * mass {
        return Err(Error::InternalConsistency(format!(
            "solved mass {} misses the target {mass}",
            state.mass
        )));
    }
    state.route = route;
    state.solutions = summaries;
    Ok(state)
}

/// `max |ρ₀ − g((E₀ − U₀)₊)| / ρ₀(0)` over the grid nodes.
pub fn el_residual(rho: &RadialDensity, potential: &RadialPotential, e0: f64, g: &GFunction) -> Result<f64> {
    let scale = rho.values()[0].max(1e-300);
    let mut worst = 0.0f64;
    for (r, u) in rho.values().iter().zip(potential.values()) {
        worst = worst.max((r - g.eval((e0 - u).max(0.0))?).abs());
    }
    Ok(worst / scale)
}

pub fn euler_lagrange_residual(state: &SteadyState, g: &GFunction) -> Result<f64> {
    el_residual(&state.density, &state.potential, state.e0, g)
}

/// Applies `ρ̄ = aρ(b·)` to a state, with `Ū = ab⁻²U(b·)` and `Ē₀ = ab⁻²E₀`.
/// The result is again a steady state when `g` is homogeneous of degree `n`
/// and `a = b^{2n/(n−1)}`.
pub fn scale_state(phi: &ConvexScalarFunction, state: &SteadyState, a: f64, b: f64) -> Result<SteadyState> {
    let density = scale_density(&state.density, a, b)?;
    let grid = density.grid().clone();
    let potential_factor = a / (b * b);
    let mass_factor = a / (b * b * b);
    let potential = RadialPotential::from_parts(
        grid,
        state.potential.values().iter().map(|u| potential_factor * u).collect(),
        state
            .potential
            .enclosed_mass()
            .iter()
            .map(|m| mass_factor * m)
            .collect(),
    )?;
    let internal = match phi.as_power() {
        Some((_, p)) => a.powf(p) / (b * b * b) * state.energies.internal,
        None => internal_energy(phi, &density)?,
    };
    let epot = a * a / b.powi(5) * state.energies.epot;
    Ok(SteadyState {
        density,
        potential,
        e0: potential_factor * state.e0,
        radius: state.radius / b,
        mass: mass_factor * state.mass,
        central_value: potential_factor * state.central_value,
        energies: ReducedEnergies {
            internal,
            epot,
            exterior: 0.0,
            reduced_total: internal + epot,
        },
        route: state.route,
        solutions: Vec::new(),
    })
}
