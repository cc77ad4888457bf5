//! Direct minimization of `ℋ^r` under the mass constraint, the symmetric
//! decreasing rearrangement, and the quantitative bounds used in the
//! existence argument (lower bound, splitting estimates, scaling).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::convex::{ConvexScalarFunction, GFunction, GrowthEnvelope};
use crate::error::{invalid, Error, Result};
use crate::model::Model;
use crate::quadrature::gauss_legendre_8;
use crate::radial::{
    enclosed_mass, internal_energy, potential_energy, potential_from_density, reduced_energies, resample,
    tail_potential, RadialDensity, RadialGrid, RadialPotential, ReducedEnergies,
};
use crate::roots::{find_root, RootTol};
use crate::steady::{el_residual, solve_steady, SolveOptions};

const FOUR_PI: f64 = 4.0 * PI;

#[derive(Clone, Copy, Debug)]
pub struct MinimizeOptions {
    /// Target for the relative Euler–Lagrange residual.
    pub tol: f64,
    pub max_iterations: usize,
    pub tau_initial: f64,
    pub tau_floor: f64,
    pub tau_max: f64,
    /// Energy increases below this fraction of `|ℋ|` count as rounding.
    pub energy_slack: f64,
    /// Number of times the grid is rebuilt around the support edge.
    pub regrid_passes: usize,
    pub grid_nodes: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iterations: 20_000,
            tau_initial: 0.5,
            tau_floor: 1e-3,
            tau_max: 1.0,
            energy_slack: 1e-13,
            regrid_passes: 3,
            grid_nodes: 2000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MinimizerResult {
    pub density: RadialDensity,
    pub potential: RadialPotential,
    pub e0: f64,
    pub energies: ReducedEnergies,
    /// `ℋ^r` of every accepted iterate.
    pub energy_trajectory: Vec<f64>,
    pub residual_trajectory: Vec<f64>,
    /// Mass outside `R₀ = −(3/5)M²/ℋ^r` for every accepted iterate.
    pub concentration: Vec<f64>,
    /// Trajectory indices at which the grid was rebuilt.
    pub regrid_at: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

impl MinimizerResult {
    pub fn support_radius(&self) -> f64 {
        self.density.support_radius()
    }
}

/// `ℋ^r` of the uniform ball of mass `mass` and radius `radius`.
fn ball_energy(phi: &ConvexScalarFunction, mass: f64, radius: f64) -> Result<f64> {
    let volume = 4.0 / 3.0 * PI * radius.powi(3);
    Ok(volume * phi.value(mass / volume)? - 0.6 * mass * mass / radius)
}

/// Radius of the uniform ball of lowest energy, by a log scan and golden
/// section search.
pub fn best_ball_radius(phi: &ConvexScalarFunction, mass: f64) -> Result<(f64, f64)> {
    let scale = mass.cbrt();
    let xs: Vec<f64> = (0..=160)
        .map(|i| (scale * 1e-4f64).ln() + i as f64 * 0.1 * 10f64.ln() / 2.0)
        .collect();
    let vals: Vec<f64> = xs
        .iter()
        .map(|&x| ball_energy(phi, mass, x.exp()).unwrap_or(f64::INFINITY))
        .collect();
    let i = (0..vals.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    if !vals[i].is_finite() {
        return Err(invalid("no uniform ball of finite energy"));
    }
    let (mut a, mut b) = (xs[i.saturating_sub(1)], xs[(i + 1).min(xs.len() - 1)]);
    let f = |x: f64| ball_energy(phi, mass, x.exp()).unwrap_or(f64::INFINITY);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    Ok((x.exp(), f(x)))
}

struct Iterate {
    rho: RadialDensity,
    potential: RadialPotential,
    e0: f64,
    target: Vec<f64>,
    residual: f64,
}

fn multiplier(g: &GFunction, rho: &RadialDensity, potential: &RadialPotential, mass: f64) -> Result<(f64, Vec<f64>)> {
    let u = potential.values();
    let w = rho.grid().volume_weights();
    let min_u = u.iter().copied().fold(f64::INFINITY, f64::min);
    let mass_of = |e0: f64| -> Result<f64> {
        let mut acc = 0.0;
        for (ui, wi) in u.iter().zip(w) {
            let lambda = e0 - ui;
            if lambda > 0.0 {
                acc += wi * g.eval(lambda)?;
            }
        }
        Ok(acc)
    };
    let e0 = find_root(
        |e| Ok(mass_of(e)? - mass),
        min_u - 1.0,
        0.0,
        RootTol {
            x_tol: 0.0,
            f_tol: 1e-14 * mass,
            max_iter: 400,
        },
    )
    .map_err(|e| Error::Multiplier(e.to_string()))?;
    let target = u
        .iter()
        .map(|ui| g.eval((e0 - ui).max(0.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok((e0, target))
}

fn evaluate(g: &GFunction, rho: RadialDensity, mass: f64) -> Result<Iterate> {
    let potential = potential_from_density(&rho);
    let (e0, target) = multiplier(g, &rho, &potential, mass)?;
    let scale = rho.values().iter().copied().fold(0.0, f64::max).max(1e-300);
    let residual = rho
        .values()
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale;
    Ok(Iterate {
        rho,
        potential,
        e0,
        target,
        residual,
    })
}

fn with_mass(rho: RadialDensity, mass: f64) -> Result<RadialDensity> {
    let m = rho.mass();
    if !(m > 0.0) {
        return Err(Error::InternalConsistency("iterate lost all its mass".into()));
    }
    rho.scaled_values(mass / m)
}

/// Radius where `U` crosses `E₀`.
fn support_edge(potential: &RadialPotential, e0: f64) -> f64 {
    let nodes = potential.grid().nodes();
    let u = potential.values();
    let Some(j) = u.iter().position(|&v| v >= e0) else {
        return *nodes.last().unwrap();
    };
    if j == 0 {
        return nodes[1];
    }
    let (mut a, mut b) = (nodes[j - 1], nodes[j]);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if potential.eval(mid) < e0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Minimizes `∫Φ(ρ) + E_pot(ρ)` over radial densities of mass `mass` by
/// the damped iteration `ρ ← (1−τ)ρ + τ g((E₀ − U_ρ)₊)`, with `E₀` fixed by
/// the mass constraint. Starts from the best uniform ball; `grid`, if
/// given, replaces the first grid, and later passes rebuild the grid with
/// a node on the support edge.
pub fn minimize_reduced(
    phi: &ConvexScalarFunction,
    mass: f64,
    grid: Option<Arc<RadialGrid>>,
    options: &MinimizeOptions,
) -> Result<MinimizerResult> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(invalid(format!("mass must be positive, got {mass}")));
    }
    let g = GFunction::from_phi(phi)?;
    let (ball_radius, ball_h) = best_ball_radius(phi, mass)?;
    if !(ball_h < 0.0) {
        return Err(invalid("the best uniform ball has nonnegative energy"));
    }
    let r0_ball = -0.6 * mass * mass / ball_h;
    let grid = match grid {
        Some(g) => g,
        None => RadialGrid::graded(ball_radius, 2.0 * r0_ball, options.grid_nodes)?,
    };
    let ball = RadialDensity::from_fn(grid, |r| if r <= ball_radius { 1.0 } else { 0.0 })?;
    let mut current = evaluate(&g, with_mass(ball, mass)?, mass)?;

    let mut energy_trajectory = Vec::new();
    let mut residual_trajectory = Vec::new();
    let mut concentration = Vec::new();
    let mut regrid_at = Vec::new();
    let mut energy = reduced_energies(phi, &current.rho, None)?.reduced_total;
    let mut tau = options.tau_initial;
    let mut streak = 0usize;
    let mut iterations = 0usize;
    let record = |h: f64, it: &Iterate, e: &mut Vec<f64>, r: &mut Vec<f64>, c: &mut Vec<f64>| {
        e.push(h);
        r.push(it.residual);
        let r0 = if h < 0.0 { -0.6 * mass * mass / h } else { f64::INFINITY };
        c.push((mass - enclosed_mass(&it.rho, r0)).max(0.0));
    };
    record(
        energy,
        &current,
        &mut energy_trajectory,
        &mut residual_trajectory,
        &mut concentration,
    );

    for pass in 0..=options.regrid_passes {
        let last = pass == options.regrid_passes;
        let pass_tol = if last { options.tol } else { options.tol.max(1e-8) };
        while current.residual > pass_tol {
            if iterations >= options.max_iterations {
                break;
            }
            iterations += 1;
            let values: Vec<f64> = current
                .rho
                .values()
                .iter()
                .zip(&current.target)
                .map(|(a, b)| (1.0 - tau) * a + tau * b)
                .collect();
            let candidate = RadialDensity::new(current.rho.grid().clone(), values)?;
            let h = reduced_energies(phi, &candidate, None)?.reduced_total;
            if h <= energy + options.energy_slack * energy.abs() {
                current = evaluate(&g, candidate, mass)?;
                energy = h;
                record(
                    energy,
                    &current,
                    &mut energy_trajectory,
                    &mut residual_trajectory,
                    &mut concentration,
                );
                streak += 1;
                if streak >= 2 {
                    tau = (tau * 1.5).min(options.tau_max);
                }
            } else {
                streak = 0;
                tau *= 0.5;
                if tau < options.tau_floor {
                    return Err(Error::NonConvergence {
                        iterations,
                        residual: current.residual,
                        energies: energy_trajectory,
                    });
                }
            }
        }
        if last {
            break;
        }
        let edge = support_edge(&current.potential, current.e0);
        let r0 = -0.6 * mass * mass / energy;
        let new_grid = RadialGrid::graded(edge, (2.0 * r0).max(1.5 * edge), options.grid_nodes)?;
        let rho = with_mass(resample(&current.rho, new_grid)?, mass)?;
        current = evaluate(&g, rho, mass)?;
        energy = reduced_energies(phi, &current.rho, None)?.reduced_total;
        regrid_at.push(energy_trajectory.len());
        record(
            energy,
            &current,
            &mut energy_trajectory,
            &mut residual_trajectory,
            &mut concentration,
        );
        tau = options.tau_initial;
        streak = 0;
    }
    let energies = reduced_energies(phi, &current.rho, None)?;
    let residual = el_residual(&current.rho, &current.potential, current.e0, &g)?;
    Ok(MinimizerResult {
        converged: current.residual <= options.tol,
        density: current.rho,
        potential: current.potential,
        e0: current.e0,
        energies,
        energy_trajectory,
        residual_trajectory,
        concentration,
        regrid_at,
        iterations,
        residual,
    })
}

/// Symmetric decreasing rearrangement: the nonincreasing radial profile
/// with the same distribution function, sampled adaptively between the
/// levels of the nodal values, then renormalized to the exact mass.
pub fn rearrange_decreasing(rho: &RadialDensity) -> Result<RadialDensity> {
    let v = rho.values();
    if v.windows(2).all(|w| w[1] <= w[0]) {
        return Ok(rho.clone());
    }
    let nodes = rho.grid().nodes();
    let cells: Vec<(f64, f64, f64, f64)> = (0..nodes.len() - 1)
        .map(|i| (nodes[i], nodes[i + 1], v[i], v[i + 1]))
        .collect();
    let third = FOUR_PI / 3.0;
    // volume where ρ > t (strict) or ρ ≥ t
    let measure = |t: f64, strict: bool| -> f64 {
        let above = |x: f64| if strict { x > t } else { x >= t };
        let mut acc = 0.0;
        for &(a, b, p, q) in &cells {
            match (above(p), above(q)) {
                (true, true) => acc += third * (b * b * b - a * a * a),
                (false, false) => {}
                (true, false) => {
                    let c = a + (b - a) * (p - t) / (p - q);
                    acc += third * (c * c * c - a * a * a);
                }
                (false, true) => {
                    let c = a + (b - a) * (t - p) / (q - p);
                    acc += third * (b * b * b - c * c * c);
                }
            }
        }
        acc
    };
    let radius_of = |vol: f64| (vol / third).cbrt();

    let mut levels: Vec<f64> = v.to_vec();
    levels.push(0.0);
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();

    let mut rs: Vec<f64> = vec![0.0];
    let mut vals: Vec<f64> = vec![levels[0]];
    let push = |r: f64, value: f64, rs: &mut Vec<f64>, vals: &mut Vec<f64>| {
        let last = *rs.last().unwrap();
        if r > last {
            rs.push(r);
            vals.push(value);
        } else if r == last {
            // keep the smaller value at a repeated radius
            let k = vals.len() - 1;
            vals[k] = vals[k].min(value);
        }
    };
    let max_value = levels[0];
    let tol = 2e-10 * max_value;
    for k in 0..levels.len() - 1 {
        let (hi, lo) = (levels[k], levels[k + 1]);
        // plateau at level hi
        let r_plateau = radius_of(measure(hi, false));
        push(r_plateau, hi, &mut rs, &mut vals);
        let r_end = radius_of(measure(lo, true));
        if lo == 0.0 && r_end > r_plateau && measure(0.5 * (hi + lo), true) == measure(lo, true) {
            // no cell crosses (lo, hi): the profile drops to zero at the edge
            push(r_end, hi, &mut rs, &mut vals);
            break;
        }
        // strictly between the levels the distribution function is a cubic in t
        let inverse = |r: f64| -> f64 {
            let target = third * r * r * r;
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if measure(mid, true) > target {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            0.5 * (a + b)
        };
        let mut stack = vec![(r_plateau, hi, r_end, lo, 0u32)];
        let mut seg_nodes: Vec<(f64, f64)> = Vec::new();
        while let Some((a, va, b, vb, depth)) = stack.pop() {
            let mid = 0.5 * (a + b);
            let vm = inverse(mid);
            if depth >= 30 || (vm - 0.5 * (va + vb)).abs() <= tol {
                seg_nodes.push((mid, vm));
                seg_nodes.push((b, vb));
            } else {
                stack.push((mid, vm, b, vb, depth + 1));
                stack.push((a, va, mid, vm, depth + 1));
            }
        }
        for (r, value) in seg_nodes {
            push(r, value, &mut rs, &mut vals);
        }
    }
    let grid = RadialGrid::new(rs)?;
    let rearranged = RadialDensity::new(grid, vals)?;
    with_mass(rearranged, rho.mass())
}

/// A numerical check of one inequality, with both sides and the constants
/// used to form them.
#[derive(Clone, Debug, Serialize)]
pub struct SplitReport {
    pub check: String,
    pub radius: Option<f64>,
    pub zone_masses: Vec<f64>,
    pub zone_terms: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub constants: BTreeMap<String, f64>,
    pub satisfied: bool,
}

/// Sharp constant of `∫∫ f(x)h(y)/|x−y| ≤ C ‖f‖_{6/5} ‖h‖_{6/5}` in three
/// dimensions: `(4/3)(4/√π)^{2/3}`.
pub fn hls_constant() -> f64 {
    4.0 / 3.0 * (4.0 / PI.sqrt()).powf(2.0 / 3.0)
}

/// `ℋ^r(ρ) ≥ ∫Φ(ρ) − C₀ − C₁ (∫Φ(ρ))^{n/3}` with
/// `−E_pot ≤ (C_HLS/2)‖ρ‖²_{6/5} ≤ (C_HLS/2) M^{(5−n)/3} ‖ρ‖_{1+1/n}^{(n+1)/3}`
/// and `‖ρ‖^{1+1/n}_{1+1/n} ≤ ρ_l^{1/n} M + ∫Φ(ρ)/C_l` from the lower growth bound.
pub fn coercivity_bound(
    phi: &ConvexScalarFunction,
    envelope: &GrowthEnvelope,
    rho: &RadialDensity,
) -> Result<SplitReport> {
    let n = envelope.lower.index;
    let mass = rho.mass();
    let internal = internal_energy(phi, rho)?;
    let epot = potential_energy(rho);
    let k = 0.5 * hls_constant() * mass.powf((5.0 - n) / 3.0);
    let a = envelope.lower.threshold.powf(1.0 / n) * mass;
    let b = 1.0 / envelope.lower.constant;
    let c0 = k * a.powf(n / 3.0);
    let c1 = k * b.powf(n / 3.0);
    let lhs = internal + epot;
    let rhs = internal - c0 - c1 * internal.powf(n / 3.0);
    let constants = BTreeMap::from([
        ("n".to_string(), n),
        ("c0".to_string(), c0),
        ("c1".to_string(), c1),
        ("internal".to_string(), internal),
    ]);
    Ok(SplitReport {
        check: "coercivity".into(),
        radius: None,
        zone_masses: vec![mass],
        zone_terms: vec![internal, epot],
        lhs,
        rhs,
        constants,
        satisfied: lhs >= rhs,
    })
}

/// `ℋ^r(ρ) ≥ h + [1/R₀ − 1/R](M − m)m` with `m` the mass outside `B_R`,
/// `R₀ = −(3/5)M²/h`, and `h_upper` in place of the infimum `h`. Also
/// reports the interior/exterior cross energy against `(M − m)m/R`.
pub fn splitting_bound_sym(
    phi: &ConvexScalarFunction,
    rho: &RadialDensity,
    radius: f64,
    h_upper: f64,
) -> Result<SplitReport> {
    if !(radius > 0.0) {
        return Err(invalid(format!("splitting radius must be positive, got {radius}")));
    }
    if !(h_upper < 0.0) {
        return Err(invalid(format!("the energy bound must be negative, got {h_upper}")));
    }
    let mass = rho.mass();
    let inner = enclosed_mass(rho, radius);
    let m = (mass - inner).max(0.0);
    let r0 = -0.6 * mass * mass / h_upper;
    let lhs = reduced_energies(phi, rho, None)?.reduced_total;
    let rhs = h_upper + (1.0 / r0 - 1.0 / radius) * (mass - m) * m;
    // the exterior shells see the interior mass as a point mass
    let cross = inner * tail_potential(rho, radius);
    let cross_bound = (mass - m) * m / radius;
    let constants = BTreeMap::from([
        ("r0".to_string(), r0),
        ("h_upper".to_string(), h_upper),
        ("cross".to_string(), cross),
        ("cross_bound".to_string(), cross_bound),
    ]);
    Ok(SplitReport {
        check: "splitting_symmetric".into(),
        radius: Some(radius),
        zone_masses: vec![inner, m],
        zone_terms: vec![cross],
        lhs,
        rhs,
        constants,
        satisfied: lhs >= rhs && cross <= cross_bound * (1.0 + 1e-12),
    })
}

/// `∫∫ 1_D(|x−y|) ρ(x)ρ(y)/|x−y| dx dy` for `D = [0, 1/R]`, `(1/R, R)` and
/// `[R, ∞)`. Two shells of radii `r`, `s` contribute
/// `8π² ρ(r)ρ(s) r s |[|r−s|, r+s] ∩ D|`; the inner integral over `s` is
/// exact on pieces between kinks, the outer one uses eight Gauss points.
pub fn zone_interactions(rho: &RadialDensity, radius: f64) -> [f64; 3] {
    let d1 = 1.0 / radius;
    let d2 = radius;
    let nodes = rho.grid().nodes();
    let v = rho.values();
    let shell = |r: f64, s: f64, lo: f64, hi: f64| ((r + s).min(hi) - (r - s).abs().max(lo)).max(0.0);
    let inner = |r: f64| -> [f64; 3] {
        let mut kinks: Vec<f64> = vec![r, (r - d1).abs(), r + d1, d1 - r, (r - d2).abs(), r + d2, d2 - r];
        kinks.retain(|&x| x > 0.0);
        let mut acc = [0.0; 3];
        let gauss = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
        for i in 0..nodes.len() - 1 {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let (p, q) = (v[i], v[i + 1]);
            if p == 0.0 && q == 0.0 {
                continue;
            }
            let mut cuts: Vec<f64> = kinks.iter().copied().filter(|&x| x > a && x < b).collect();
            cuts.push(a);
            cuts.push(b);
            cuts.sort_by(f64::total_cmp);
            for w in cuts.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                for t in gauss {
                    let s = lo + (hi - lo) * t;
                    let wt = 0.5 * (hi - lo);
                    let rho_s = p + (q - p) * (s - a) / (b - a);
                    let base = wt * rho_s * s;
                    acc[0] += base * shell(r, s, 0.0, d1);
                    acc[1] += base * shell(r, s, d1, d2);
                    acc[2] += base * shell(r, s, d2, f64::INFINITY);
                }
            }
        }
        acc
    };
    let mut total = [0.0; 3];
    for i in 0..nodes.len() - 1 {
        if v[i] == 0.0 && v[i + 1] == 0.0 {
            continue;
        }
        for (r, w) in gauss_legendre_8(nodes[i], nodes[i + 1]) {
            let rho_r = rho.eval(r);
            if rho_r == 0.0 {
                continue;
            }
            let j = inner(r);
            for z in 0..3 {
                total[z] += w * 8.0 * PI * PI * rho_r * r * j[z];
            }
        }
    }
    total
}

/// `‖ρ‖_p`.
pub fn lp_norm(rho: &RadialDensity, p: f64) -> f64 {
    let nodes = rho.grid().nodes();
    let mut acc = 0.0;
    for i in 0..nodes.len() - 1 {
        for (r, w) in gauss_legendre_8(nodes[i], nodes[i + 1]) {
            acc += w * FOUR_PI * r * r * rho.eval(r).powf(p);
        }
    }
    acc.powf(1.0 / p)
}

/// The three-zone split of `−2E_pot` and the resulting lower bound on the
/// mass of the centered ball `B_R`:
/// `∫_{B_R}ρ ≥ (1/RM)(−2E_pot − M²/R − C‖ρ‖²_{1+1/n} R^{−(5−n)/(n+1)})`,
/// with `C = (4π/(3−q))^{1/q}`, `q = (n+1)/2`, from Hölder and Young.
/// For `n < 1` the index is raised to 1.
pub fn split_potential_estimate(rho: &RadialDensity, radius: f64, n: f64) -> Result<SplitReport> {
    if !(radius > 1.0) {
        return Err(invalid(format!("the splitting estimate needs R > 1, got {radius}")));
    }
    if !(n > 0.0 && n < 5.0) {
        return Err(invalid(format!("index n must lie in (0, 5), got {n}")));
    }
    let mass = rho.mass();
    let [i1, i2, i3] = zone_interactions(rho, radius);
    let minus_two_epot = -2.0 * potential_energy(rho);
    // Young needs a kernel exponent q ≥ 1; below n = 1 the chain runs in L²
    let n_eff = n.max(1.0);
    let q = 0.5 * (n_eff + 1.0);
    let young = (FOUR_PI / (3.0 - q)).powf(1.0 / q);
    let norm = lp_norm(rho, 1.0 + 1.0 / n_eff);
    let i1_bound = young * norm * norm * radius.powf(-(5.0 - n_eff) / (n_eff + 1.0));
    let central = enclosed_mass(rho, radius);
    let bound = (minus_two_epot - mass * mass / radius - i1_bound) / (radius * mass);
    let constants = BTreeMap::from([
        ("young".to_string(), young),
        ("n_eff".to_string(), n_eff),
        ("norm".to_string(), norm),
        ("i1_bound".to_string(), i1_bound),
        ("i2_bound".to_string(), mass * radius * central),
        ("i3_bound".to_string(), mass * mass / radius),
        ("minus_two_epot".to_string(), minus_two_epot),
    ]);
    let satisfied = bound <= central
        && i1 <= i1_bound
        && i2 <= mass * radius * central
        && i3 <= mass * mass / radius * (1.0 + 1e-12);
    Ok(SplitReport {
        check: "splitting".into(),
        radius: Some(radius),
        zone_masses: vec![central, mass - central],
        zone_terms: vec![i1, i2, i3],
        lhs: central,
        rhs: bound,
        constants,
        satisfied,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SubadditivityEntry {
    pub fraction: f64,
    pub h: f64,
    /// `fraction^{5/3} h_M`.
    pub bound: f64,
    /// `fraction^{(5−n)/(3−n)} h_M`, the exact value for homogeneous `g`.
    pub scaling_exact: Option<f64>,
    pub satisfied: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubadditivityReport {
    pub mass: f64,
    pub h_mass: f64,
    pub entries: Vec<SubadditivityEntry>,
}

/// `h_{M̄} ≥ (M̄/M)^{5/3} h_M` with `h` estimated by solved steady states.
pub fn subadditivity_check(
    model: &Model,
    mass: f64,
    fractions: &[f64],
    options: &SolveOptions,
) -> Result<SubadditivityReport> {
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(invalid(format!("mass fractions must lie in (0, 1], got {f}")));
    }
    let h_mass = solve_steady(model, mass, options)?.energies.reduced_total;
    let mut entries = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let h = if fraction == 1.0 {
            h_mass
        } else {
            solve_steady(model, fraction * mass, options)?.energies.reduced_total
        };
        let bound = fraction.powf(5.0 / 3.0) * h_mass;
        let scaling_exact = model
            .homogeneity()
            .filter(|hm| hm.exponent != 3.0)
            .map(|hm| fraction.powf((5.0 - hm.exponent) / (3.0 - hm.exponent)) * h_mass);
        entries.push(SubadditivityEntry {
            fraction,
            h,
            bound,
            scaling_exact,
            satisfied: h >= bound,
        });
    }
    Ok(SubadditivityReport { mass, h_mass, entries })
}
