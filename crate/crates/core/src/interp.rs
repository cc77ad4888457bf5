//! Piecewise cubic Hermite interpolation, used in log-log coordinates for
//! the sampled convex functions. Power laws are reproduced exactly.

#[derive(Clone, Debug)]
pub(crate) struct Hermite {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Hermite {
    /// Hermite interpolant with prescribed nodal slopes.
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, slopes: Vec<f64>) -> Self {
        debug_assert!(xs.len() == ys.len() && ys.len() == slopes.len() && xs.len() >= 2);
        Self { xs, ys, slopes }
    }

    /// Shape-preserving (Fritsch–Butland) slopes; monotone data gives a
    /// monotone interpolant.
    pub fn pchip(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        debug_assert!(n >= 2 && ys.len() == n);
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                let (a, b) = (delta[i - 1], delta[i]);
                if a * b <= 0.0 {
                    d[i] = 0.0;
                } else if a == b {
                    d[i] = a;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / a + w2 / b);
                }
            }
            d[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Self { xs, ys, slopes: d }
    }

    pub fn first(&self) -> (f64, f64, f64) {
        (self.xs[0], self.ys[0], self.slopes[0])
    }

    pub fn last(&self) -> (f64, f64, f64) {
        let n = self.xs.len() - 1;
        (self.xs[n], self.ys[n], self.slopes[n])
    }

    fn cell(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Evaluates inside `[x_0, x_n]`; callers handle extrapolation.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.cell(x);
        self.eval_in_cell(i, x)
    }

    fn eval_in_cell(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }

    fn slope_in_cell(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d11 = 3.0 * t2 - 2.0 * t;
        (d00 * (self.ys[i] - self.ys[i + 1])) / h + d10 * self.slopes[i] + d11 * self.slopes[i + 1]
    }

    /// Inverts a nondecreasing interpolant: the `x` with `eval(x) = y`, to
    /// `tol` in `x`, by Newton steps safeguarded with bisection. `y` must lie
    /// within `[y_0, y_n]`.
    pub fn inverse(&self, y: f64, tol: f64) -> f64 {
        let n = self.ys.len();
        let i = match self.ys.binary_search_by(|v| v.total_cmp(&y)) {
            Ok(i) => return self.xs[i],
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let (mut lo, mut hi) = (self.xs[i], self.xs[i + 1]);
        let (ylo, yhi) = (self.ys[i], self.ys[i + 1]);
        let mut x = if yhi > ylo {
            lo + (y - ylo) / (yhi - ylo) * (hi - lo)
        } else {
            0.5 * (lo + hi)
        };
        for _ in 0..200 {
            let fx = self.eval_in_cell(i, x) - y;
            if fx == 0.0 {
                return x;
            }
            if fx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if hi - lo <= tol {
                break;
            }
            let d = self.slope_in_cell(i, x);
            let step = if d > 0.0 { x - fx / d } else { f64::NAN };
            let next = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
            if (next - x).abs() <= 0.25 * tol {
                return next;
            }
            x = next;
        }
        0.5 * (lo + hi)
    }
}

fn edge_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_reproduces_lines() {
        let xs: Vec<f64> = (0..10).map(|i| (i as f64).powf(1.3)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let p = Hermite::pchip(xs, ys);
        for x in [0.1, 1.7, 5.5, 17.0] {
            assert!((p.eval(x) - (2.5 * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_recovers_argument() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x + x).collect();
        let p = Hermite::pchip(xs, ys);
        for x in [0.3, 2.2, 9.1] {
            let y = p.eval(x);
            assert!((p.inverse(y, 1e-13) - x).abs() < 1e-11);
        }
    }
}
