//! Quadrature rules shared by the reduction and radial modules.

use std::f64::consts::FRAC_PI_2;

/// Eight-point Gauss–Legendre rule on [-1, 1].
const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Nodes and weights of the eight-point Gauss–Legendre rule mapped onto
/// `[a, b]`, in increasing node order.
pub fn gauss_legendre_8(a: f64, b: f64) -> [(f64, f64); 8] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 8];
    for i in 0..4 {
        out[3 - i] = (mid - half * GL8_NODES[i], half * GL8_WEIGHTS[i]);
        out[4 + i] = (mid + half * GL8_NODES[i], half * GL8_WEIGHTS[i]);
    }
    out
}

/// Tanh–sinh (double exponential) quadrature on the unit interval.
///
/// The integrand receives both `s` and `1 - s`, the latter computed without
/// cancellation, so algebraic endpoint singularities such as `(1-s)^k` stay
/// accurate right up to the endpoint.
#[derive(Clone, Copy, Debug)]
pub struct TanhSinh {
    pub rel_tol: f64,
    pub max_level: u32,
}

impl Default for TanhSinh {
    fn default() -> Self {
        Self {
            rel_tol: 1e-14,
            max_level: 9,
        }
    }
}

const T_MAX: f64 = 4.5;

impl TanhSinh {
    pub fn new(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    /// Integrates `f(s, 1 - s)` over `s ∈ (0, 1)`.
    pub fn integrate_unit<F>(&self, mut f: F) -> f64
    where
        F: FnMut(f64, f64) -> f64,
    {
        let mut eval = |t: f64| -> f64 {
            let u = FRAC_PI_2 * t.sinh();
            let s = 1.0 / (1.0 + (-2.0 * u).exp());
            let one_minus_s = 1.0 / (1.0 + (2.0 * u).exp());
            if s <= 0.0 || one_minus_s <= 0.0 {
                return 0.0;
            }
            let cu = u.cosh();
            let w = 0.5 * FRAC_PI_2 * t.cosh() / (cu * cu);
            if w == 0.0 || !w.is_finite() {
                return 0.0;
            }
            w * f(s, one_minus_s)
        };

        let mut h = 0.5;
        let mut sum = eval(0.0);
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > T_MAX {
                break;
            }
            sum += eval(t) + eval(-t);
            k += 1;
        }
        let mut estimate = sum * h;

        for _level in 1..=self.max_level {
            h *= 0.5;
            let mut odd = 0.0;
            let mut k = 1;
            loop {
                let t = k as f64 * h;
                if t > T_MAX {
                    break;
                }
                odd += eval(t) + eval(-t);
                k += 2;
            }
            sum += odd;
            let next = sum * h;
            let diff = (next - estimate).abs();
            estimate = next;
            if diff <= self.rel_tol * next.abs() || next == 0.0 {
                break;
            }
        }
        estimate
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> f64
    where
        F: FnMut(f64) -> f64,
    {
        let width = b - a;
        if width == 0.0 {
            return 0.0;
        }
        width * self.integrate_unit(|s, _| f(a + width * s))
    }
}
