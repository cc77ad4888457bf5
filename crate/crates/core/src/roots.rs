//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Stopping rule for [`find_root`].
#[derive(Clone, Copy, Debug)]
pub struct RootTol {
    /// Absolute width of the bracket at which to stop.
    pub x_tol: f64,
    /// Stop once `|f| <= f_tol`.
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for RootTol {
    fn default() -> Self {
        Self {
            x_tol: 0.0,
            f_tol: 0.0,
            max_iter: 200,
        }
    }
}

/// Illinois regula falsi with a bisection safeguard. `f(lo)` and `f(hi)` must
/// have opposite signs (or one of them be zero).
pub fn find_root<F>(mut f: F, mut lo: f64, mut hi: f64, tol: RootTol) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::BracketFailure(format!(
            "f({lo}) = {flo:e} and f({hi}) = {fhi:e} share a sign"
        )));
    }
    // side of the last two updates, for the Illinois halving
    let mut last_side = 0i8;
    let mut best = if flo.abs() < fhi.abs() { lo } else { hi };
    for iter in 0..tol.max_iter {
        if (hi - lo).abs() <= tol.x_tol {
            break;
        }
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        // every fourth step, or if the secant leaves the bracket, bisect
        if iter % 4 == 3 || !(x > lo.min(hi) && x < lo.max(hi)) {
            x = 0.5 * (lo + hi);
        }
        if x == lo || x == hi {
            break;
        }
        let fx = f(x)?;
        best = x;
        if fx == 0.0 || fx.abs() <= tol.f_tol {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
            if last_side == -1 {
                fhi *= 0.5;
            }
            last_side = -1;
        } else {
            hi = x;
            fhi = fx;
            if last_side == 1 {
                flo *= 0.5;
            }
            last_side = 1;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cube_root() {
        let r = find_root(
            |x| Ok(x * x * x - 2.0),
            0.0,
            2.0,
            RootTol {
                x_tol: 1e-15,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_unbracketed() {
        let r = find_root(|x| Ok(x * x + 1.0), -1.0, 1.0, RootTol::default());
        assert!(matches!(r, Err(Error::BracketFailure(_))));
    }
}
