//! Radial grids, piecewise-linear densities, their potentials and energies.
//!
//! A density is linear in `r` on every grid cell and vanishes beyond the
//! last node (it may jump to zero there). Masses, tail integrals and
//! potentials at nodes are exact for this representation; energies use an
//! eight-point Gauss rule per cell.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::convex::ConvexScalarFunction;
use crate::error::{invalid, Error, Result};
use crate::quadrature::{gauss_legendre_8, TanhSinh};

const FOUR_PI: f64 = 4.0 * PI;

/// `∫_a^{a+h} ρ r² dr` for `ρ` linear from `ra` to `rb`.
fn cell_moment2(a: f64, h: f64, ra: f64, rb: f64) -> f64 {
    h * (ra * (a * a / 2.0 + a * h / 3.0 + h * h / 12.0) + rb * (a * a / 2.0 + 2.0 * a * h / 3.0 + h * h / 4.0))
}

/// `∫_a^{a+h} ρ r dr` for `ρ` linear from `ra` to `rb`.
fn cell_moment1(a: f64, h: f64, ra: f64, rb: f64) -> f64 {
    h * (ra * (a / 2.0 + h / 6.0) + rb * (a / 2.0 + h / 3.0))
}

/// Nodes `0 = r_0 < r_1 < … < r_N` with exact weights for piecewise-linear
/// integrands.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    volume_weights: Vec<f64>,
    line_weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Arc<Self>> {
        if nodes.len() < 2 {
            return Err(invalid("a radial grid needs at least two nodes"));
        }
        if nodes[0] != 0.0 {
            return Err(invalid("a radial grid starts at r = 0"));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(invalid(format!("grid nodes not strictly increasing near {}", w[0])));
            }
        }
        let n = nodes.len();
        let mut volume_weights = vec![0.0; n];
        let mut line_weights = vec![0.0; n];
        for i in 0..n - 1 {
            let (a, h) = (nodes[i], nodes[i + 1] - nodes[i]);
            volume_weights[i] += FOUR_PI * cell_moment2(a, h, 1.0, 0.0);
            volume_weights[i + 1] += FOUR_PI * cell_moment2(a, h, 0.0, 1.0);
            line_weights[i] += 0.5 * h;
            line_weights[i + 1] += 0.5 * h;
        }
        Ok(Arc::new(Self {
            nodes,
            volume_weights,
            line_weights,
        }))
    }

    pub fn uniform(r_max: f64, cells: usize) -> Result<Arc<Self>> {
        if !(r_max > 0.0) || cells == 0 {
            return Err(invalid("uniform grid needs r_max > 0 and at least one cell"));
        }
        let mut nodes: Vec<f64> = (0..=cells).map(|i| r_max * i as f64 / cells as f64).collect();
        nodes[cells] = r_max;
        Self::new(nodes)
    }

    /// `nodes` points: about nine tenths on `[0, edge]`, clustered at both
    /// ends (`r = edge (t − sin(2πt)/2π)`), the rest growing geometrically
    /// from the last interior spacing out to `r_max`. `edge` is a node.
    pub fn graded(edge: f64, r_max: f64, nodes: usize) -> Result<Arc<Self>> {
        if !(edge > 0.0 && edge.is_finite()) || nodes < 16 {
            return Err(invalid("graded grid needs edge > 0 and at least 16 nodes"));
        }
        let exterior = if r_max > edge { (nodes / 10).max(4) } else { 0 };
        let interior = nodes - exterior;
        let mut r: Vec<f64> = (0..interior)
            .map(|i| {
                let t = i as f64 / (interior - 1) as f64;
                edge * (t - (2.0 * PI * t).sin() / (2.0 * PI))
            })
            .collect();
        r[0] = 0.0;
        r[interior - 1] = edge;
        if exterior > 0 {
            let h0 = edge - r[interior - 2];
            let span = r_max - edge;
            // solve h0 (q^m − 1)/(q − 1) = span for the growth ratio q
            let m = exterior as i32;
            let total = |q: f64| h0 * (q.powi(m) - 1.0) / (q - 1.0);
            let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
            while total(hi) < span {
                hi *= 2.0;
            }
            if total(lo) >= span {
                hi = lo;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if total(mid) < span {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let q = 0.5 * (lo + hi);
            let mut h = h0;
            let mut x = edge;
            for _ in 0..exterior - 1 {
                h *= q;
                x += h;
                r.push(x);
            }
            r.push(r_max);
            // guard against rounding at the last node
            let k = r.len();
            if r[k - 1] <= r[k - 2] {
                r.remove(k - 2);
            }
        }
        Self::new(r)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Weights `w_i` with `Σ w_i f(r_i) = ∫ f 4πr² dr` for piecewise-linear `f`.
    pub fn volume_weights(&self) -> &[f64] {
        &self.volume_weights
    }

    /// Trapezoid weights for `∫ f dr`.
    pub fn line_weights(&self) -> &[f64] {
        &self.line_weights
    }

    /// Index `i` of the cell `[r_i, r_{i+1}]` containing `r` (clamped).
    pub fn cell(&self, r: f64) -> usize {
        let n = self.nodes.len();
        match self.nodes.binary_search_by(|v| v.total_cmp(&r)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Scaled copy with nodes `r_i / b`.
    pub fn scaled(&self, b: f64) -> Result<Arc<Self>> {
        Self::new(self.nodes.iter().map(|r| r / b).collect())
    }
}

/// A nonnegative radial density, linear on grid cells, zero beyond the grid.
#[derive(Clone, Debug)]
pub struct RadialDensity {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    mass: f64,
}

impl RadialDensity {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "{} density values for {} grid nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvariantViolation(format!(
                "density must be finite and nonnegative, got {} at node {i}",
                values[i]
            )));
        }
        let mass = values.iter().zip(grid.volume_weights()).map(|(v, w)| v * w).sum();
        Ok(Self { grid, values, mass })
    }

    pub fn zero(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
            mass: 0.0,
        }
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Outer edge of the support of the interpolated density: the node
    /// following the last positive value, or the last node.
    pub fn support_radius(&self) -> f64 {
        let nodes = self.grid.nodes();
        match self.values.iter().rposition(|&v| v > 0.0) {
            None => 0.0,
            Some(i) => nodes[(i + 1).min(nodes.len() - 1)],
        }
    }

    /// Linear interpolation; zero beyond the grid.
    pub fn eval(&self, r: f64) -> f64 {
        let nodes = self.grid.nodes();
        if r > self.grid.r_max() || r < 0.0 {
            return 0.0;
        }
        let i = self.grid.cell(r);
        let t = (r - nodes[i]) / (nodes[i + 1] - nodes[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    /// Same grid, values multiplied by `factor`.
    pub fn scaled_values(&self, factor: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| v * factor).collect())
    }

    /// Mass `∫ρ dx` over the nodes' own cells, node by node, starting at 0.
    pub fn cumulative_mass(&self) -> Vec<f64> {
        let nodes = self.grid.nodes();
        let mut m = Vec::with_capacity(nodes.len());
        m.push(0.0);
        let mut acc = 0.0;
        for i in 0..nodes.len() - 1 {
            let (a, h) = (nodes[i], nodes[i + 1] - nodes[i]);
            acc += FOUR_PI * cell_moment2(a, h, self.values[i], self.values[i + 1]);
            m.push(acc);
        }
        m
    }

    /// `∫_{r_i}^∞ ρ(s) s ds` at every node, summed backwards.
    pub fn tail_moments(&self) -> Vec<f64> {
        let nodes = self.grid.nodes();
        let n = nodes.len();
        let mut t = vec![0.0; n];
        for i in (0..n - 1).rev() {
            let (a, h) = (nodes[i], nodes[i + 1] - nodes[i]);
            t[i] = t[i + 1] + cell_moment1(a, h, self.values[i], self.values[i + 1]);
        }
        t
    }

    /// Eight Gauss points per cell with `(r, ρ(r), weight in dr)`.
    fn gauss_points(&self) -> impl Iterator<Item = (usize, f64, f64, f64)> + '_ {
        let nodes = self.grid.nodes();
        (0..nodes.len() - 1).flat_map(move |i| {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let (ra, rb) = (self.values[i], self.values[i + 1]);
            gauss_legendre_8(a, b).into_iter().map(move |(r, w)| {
                let t = (r - a) / (b - a);
                (i, r, ra + t * (rb - ra), w)
            })
        })
    }
}

fn same_grid(a: &RadialDensity, b: &RadialDensity) -> bool {
    Arc::ptr_eq(&a.grid, &b.grid) || a.grid.nodes == b.grid.nodes
}

/// `m(r) = 4π ∫_0^r s² ρ(s) ds`.
pub fn enclosed_mass(rho: &RadialDensity, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r >= rho.grid.r_max() {
        return rho.mass;
    }
    let nodes = rho.grid.nodes();
    let i = rho.grid.cell(r);
    let m = rho.cumulative_mass();
    let rr = rho.eval(r);
    m[i] + FOUR_PI * cell_moment2(nodes[i], r - nodes[i], rho.values[i], rr)
}

/// `4π ∫_r^∞ s ρ(s) ds`.
pub fn tail_potential(rho: &RadialDensity, r: f64) -> f64 {
    if r >= rho.grid.r_max() {
        return 0.0;
    }
    let r = r.max(0.0);
    let nodes = rho.grid.nodes();
    let i = rho.grid.cell(r);
    let t = rho.tail_moments();
    let rr = rho.eval(r);
    FOUR_PI * (t[i + 1] + cell_moment1(r, nodes[i + 1] - r, rr, rho.values[i + 1]))
}

/// Exact potential `U(r) = −m(r)/r − 4π∫_r^∞ sρ(s) ds` of the interpolated
/// density at an arbitrary radius.
pub fn potential_at(rho: &RadialDensity, r: f64) -> f64 {
    if r <= 0.0 {
        return -tail_potential(rho, 0.0);
    }
    -enclosed_mass(rho, r) / r - tail_potential(rho, r)
}

/// Potential on the grid nodes with the enclosed-mass table; evaluated
/// between nodes by cubic Hermite interpolation with `U' = m/r²`.
#[derive(Clone, Debug)]
pub struct RadialPotential {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    enclosed: Vec<f64>,
    mass: f64,
}

impl RadialPotential {
    /// Assembles a potential from nodal values and enclosed masses.
    pub fn from_parts(grid: Arc<RadialGrid>, values: Vec<f64>, enclosed: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() || enclosed.len() != grid.len() {
            return Err(invalid("potential tables must match the grid"));
        }
        let mass = *enclosed.last().unwrap();
        Ok(Self {
            grid,
            values,
            enclosed,
            mass,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn enclosed_mass(&self) -> &[f64] {
        &self.enclosed
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    fn slope(&self, i: usize) -> f64 {
        let r = self.grid.nodes[i];
        if r == 0.0 {
            0.0
        } else {
            self.enclosed[i] / (r * r)
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let nodes = self.grid.nodes();
        if r >= self.grid.r_max() {
            return if r == 0.0 { 0.0 } else { -self.mass / r };
        }
        let r = r.max(0.0);
        let i = self.grid.cell(r);
        let (a, b) = (nodes[i], nodes[i + 1]);
        let h = b - a;
        let t = (r - a) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.values[i]
            + (t3 - 2.0 * t2 + t) * h * self.slope(i)
            + (-2.0 * t3 + 3.0 * t2) * self.values[i + 1]
            + (t3 - t2) * h * self.slope(i + 1)
    }

    /// `U'(r) = m(r)/r²` from the Hermite interpolant.
    pub fn derivative(&self, r: f64) -> f64 {
        let nodes = self.grid.nodes();
        if r >= self.grid.r_max() {
            return self.mass / (r * r);
        }
        let r = r.max(0.0);
        let i = self.grid.cell(r);
        let (a, b) = (nodes[i], nodes[i + 1]);
        let h = b - a;
        let t = (r - a) / h;
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * self.values[i] + (-6.0 * t2 + 6.0 * t) * self.values[i + 1]) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * self.slope(i)
            + (3.0 * t2 - 2.0 * t) * self.slope(i + 1)
    }
}

/// `U = −ρ ∗ 1/|·|` at the nodes.
pub fn potential_from_density(rho: &RadialDensity) -> RadialPotential {
    let nodes = rho.grid.nodes();
    let m = rho.cumulative_mass();
    let t = rho.tail_moments();
    let values = (0..nodes.len())
        .map(|i| {
            let inner = if nodes[i] > 0.0 { m[i] / nodes[i] } else { 0.0 };
            -inner - FOUR_PI * t[i]
        })
        .collect();
    let mut enclosed = m;
    // the exact total, so that U = −M/r holds to rounding beyond the support
    *enclosed.last_mut().unwrap() = rho.mass;
    RadialPotential {
        grid: rho.grid.clone(),
        values,
        enclosed,
        mass: rho.mass,
    }
}

/// `m(r)` at the Gauss points of every cell, exact for linear `ρ`.
fn enclosed_at_gauss_points(rho: &RadialDensity) -> Vec<(f64, f64, f64, f64)> {
    let nodes = rho.grid.nodes();
    let m = rho.cumulative_mass();
    rho.gauss_points()
        .map(|(i, r, rr, w)| {
            let mr = m[i] + FOUR_PI * cell_moment2(nodes[i], r - nodes[i], rho.values[i], rr);
            (r, rr, mr, w)
        })
        .collect()
}

/// `E_pot = −½ ∫_0^∞ m(r)²/r² dr = −(1/8π) ∫ |∇U|² dx`.
pub fn potential_energy(rho: &RadialDensity) -> f64 {
    let inner: f64 = enclosed_at_gauss_points(rho)
        .into_iter()
        .map(|(r, _, m, w)| w * m * m / (r * r))
        .sum();
    -0.5 * (inner + rho.mass * rho.mass / rho.grid.r_max())
}

/// `E_pot = ½ ∫ ρ U dx`, with `U` evaluated exactly at Gauss points.
pub fn potential_energy_via_potential(rho: &RadialDensity) -> f64 {
    let nodes = rho.grid.nodes();
    let t = rho.tail_moments();
    let m = rho.cumulative_mass();
    let mut acc = 0.0;
    for (i, r, rr, w) in rho.gauss_points() {
        let (a, b) = (nodes[i], nodes[i + 1]);
        let mr = m[i] + FOUR_PI * cell_moment2(a, r - a, rho.values[i], rr);
        let tail = t[i + 1] + cell_moment1(r, b - r, rr, rho.values[i + 1]);
        let u = -mr / r - FOUR_PI * tail;
        acc += w * FOUR_PI * r * r * rr * u;
    }
    0.5 * acc
}

/// `∫ Φ(ρ) dx`.
///
/// Cells where `ρ` drops to (nearly) zero at one end use tanh-sinh, since
/// `Φ(ρ)` need not be smooth at `ρ = 0`.
pub fn internal_energy(phi: &ConvexScalarFunction, rho: &RadialDensity) -> Result<f64> {
    let nodes = rho.grid.nodes();
    let quad = TanhSinh::default();
    let mut acc = 0.0;
    for i in 0..nodes.len() - 1 {
        let (a, b) = (nodes[i], nodes[i + 1]);
        let (ra, rb) = (rho.values[i], rho.values[i + 1]);
        if ra == 0.0 && rb == 0.0 {
            continue;
        }
        if ra.min(rb) < 0.01 * ra.max(rb) {
            let mut failure = None;
            let cell = quad.integrate_unit(|s, t| {
                let r = a * t + b * s;
                let value = ra * t + rb * s;
                match phi.value(value) {
                    Ok(v) => FOUR_PI * r * r * v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            });
            if let Some(e) = failure {
                return Err(e);
            }
            acc += (b - a) * cell;
            continue;
        }
        for (r, w) in gauss_legendre_8(a, b) {
            let t = (r - a) / (b - a);
            acc += w * FOUR_PI * r * r * phi.value(ra + t * (rb - ra))?;
        }
    }
    Ok(acc)
}

/// `∫∫ ρ₁(x) ρ₂(y) / |x − y| dx dy = ∫_0^∞ m₁ m₂ / r² dr`.
pub fn interaction_energy(rho1: &RadialDensity, rho2: &RadialDensity) -> Result<f64> {
    if !same_grid(rho1, rho2) {
        return Err(Error::IncompatibleGrid);
    }
    let a = enclosed_at_gauss_points(rho1);
    let b = enclosed_at_gauss_points(rho2);
    let inner: f64 = a
        .iter()
        .zip(&b)
        .map(|(&(r, _, m1, w), &(_, _, m2, _))| w * m1 * m2 / (r * r))
        .sum();
    Ok(inner + rho1.mass * rho2.mass / rho1.grid.r_max())
}

/// Energies of a spatial density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReducedEnergies {
    pub internal: f64,
    pub epot: f64,
    /// Cross term `−∫∫ρρ_e/|x−y|`, zero without an exterior density.
    pub exterior: f64,
    pub reduced_total: f64,
}

/// `ℋ^r(ρ) = ∫Φ(ρ) + E_pot(ρ)`, optionally with the interaction with a fixed
/// exterior density `ρ_e`.
pub fn reduced_energies(
    phi: &ConvexScalarFunction,
    rho: &RadialDensity,
    exterior: Option<&RadialDensity>,
) -> Result<ReducedEnergies> {
    let internal = internal_energy(phi, rho)?;
    let epot = potential_energy(rho);
    let exterior = match exterior {
        Some(e) => -interaction_energy(rho, e)?,
        None => 0.0,
    };
    Ok(ReducedEnergies {
        internal,
        epot,
        exterior,
        reduced_total: internal + epot + exterior,
    })
}

pub fn reduced_energy(
    phi: &ConvexScalarFunction,
    rho: &RadialDensity,
    exterior: Option<&RadialDensity>,
) -> Result<f64> {
    Ok(reduced_energies(phi, rho, exterior)?.reduced_total)
}

/// `ρ̄(x) = a ρ(b x)`, on the grid with nodes `r_i / b`.
pub fn scale_density(rho: &RadialDensity, a: f64, b: f64) -> Result<RadialDensity> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(invalid(format!("scaling needs a, b > 0, got a = {a}, b = {b}")));
    }
    let grid = if b == 1.0 {
        rho.grid.clone()
    } else {
        rho.grid.scaled(b)?
    };
    RadialDensity::new(grid, rho.values.iter().map(|v| a * v).collect())
}

/// Linear interpolation of `rho` onto `grid`.
pub fn resample(rho: &RadialDensity, grid: Arc<RadialGrid>) -> Result<RadialDensity> {
    let values = grid.nodes().iter().map(|&r| rho.eval(r)).collect();
    RadialDensity::new(grid, values)
}

/// `∫ |ρ₁ − ρ₂| dx` for densities on arbitrary grids, exact for the
/// interpolated profiles up to an eight-point Gauss rule on each piece.
pub fn l1_distance(rho1: &RadialDensity, rho2: &RadialDensity) -> f64 {
    let mut breaks: Vec<f64> = rho1.grid.nodes().iter().chain(rho2.grid.nodes()).copied().collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let eval_left = |rho: &RadialDensity, r: f64| if r > rho.grid.r_max() { 0.0 } else { rho.eval(r) };
    let mut acc = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        // both densities are linear on (a, b); beyond a grid they vanish
        let lin = |rho: &RadialDensity| {
            let inside = b <= rho.grid.r_max();
            if inside {
                (eval_left(rho, a), eval_left(rho, b))
            } else {
                (0.0, 0.0)
            }
        };
        let (p0, p1) = lin(rho1);
        let (q0, q1) = lin(rho2);
        let (d0, d1) = (p0 - q0, p1 - q1);
        let mut pieces = vec![(a, b)];
        if d0 * d1 < 0.0 {
            let c = a + (b - a) * d0 / (d0 - d1);
            pieces = vec![(a, c), (c, b)];
        }
        for (lo, hi) in pieces {
            for (r, wt) in gauss_legendre_8(lo, hi) {
                let t = (r - a) / (b - a);
                acc += wt * FOUR_PI * r * r * (d0 + t * (d1 - d0)).abs();
            }
        }
    }
    acc
}
