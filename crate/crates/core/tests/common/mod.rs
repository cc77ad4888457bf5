#![allow(dead_code)]

use std::f64::consts::PI;

use casimir_reduce::radial::{RadialDensity, RadialGrid};
use rand::Rng;

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// `B(a, b) = 2 ∫_0^{π/2} sin^{2a−1}θ cos^{2b−1}θ dθ`.
pub fn beta_simpson(a: f64, b: f64) -> f64 {
    2.0 * simpson(0.0, 0.5 * PI, 20_000, |t| {
        t.sin().powf(2.0 * a - 1.0) * t.cos().powf(2.0 * b - 1.0)
    })
}

/// `4π√2 (k/(k+1))^k B(k+1, 3/2)`.
pub fn c_k(k: f64) -> f64 {
    4.0 * PI * 2f64.sqrt() * (k / (k + 1.0)).powf(k) * beta_simpson(k + 1.0, 1.5)
}

/// A nonnegative radial density made of a few Gaussian shells with random
/// holes, vanishing at the outer edge.
pub fn random_density(rng: &mut impl Rng, nodes: usize) -> RadialDensity {
    let r_max = rng.gen_range(1.0..5.0);
    let grid = if rng.gen_bool(0.5) {
        RadialGrid::uniform(r_max, nodes - 1).unwrap()
    } else {
        RadialGrid::graded(0.7 * r_max, r_max, nodes).unwrap()
    };
    let bumps: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..4))
        .map(|_| {
            (
                rng.gen_range(0.1..3.0),
                rng.gen_range(0.0..0.8 * r_max),
                rng.gen_range(0.05..0.5) * r_max,
            )
        })
        .collect();
    let hole = if rng.gen_bool(0.5) {
        let a = rng.gen_range(0.0..r_max);
        Some((a, a + rng.gen_range(0.0..0.3) * r_max))
    } else {
        None
    };
    RadialDensity::from_fn(grid, |r| {
        if let Some((a, b)) = hole {
            if r >= a && r <= b {
                return 0.0;
            }
        }
        let s: f64 = bumps.iter().map(|&(h, c, w)| h * (-((r - c) / w).powi(2)).exp()).sum();
        s * (1.0 - r / r_max).max(0.0)
    })
    .unwrap()
}

/// `E_pot = −½ ∫∫ ρρ/|x−y|` by the shell theorem on a fine midpoint grid,
/// independent of the library quadrature.
pub fn epot_brute(rho: &RadialDensity, cells: usize) -> f64 {
    let r_max = rho.grid().r_max();
    let h = r_max / cells as f64;
    let mut m = 0.0;
    let mut acc = 0.0;
    for i in 0..cells {
        let r = (i as f64 + 0.5) * h;
        let dm = 4.0 * PI * r * r * rho.eval(r) * h;
        // half of the cell sees half of its own mass
        acc -= (m + 0.5 * dm) * dm / r;
        m += dm;
    }
    acc
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
