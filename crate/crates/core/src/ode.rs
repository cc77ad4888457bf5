//! Dormand–Prince 5(4) steps with an elementary step-size controller.

use crate::error::Result;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Tolerances for the embedded error estimate.
#[derive(Clone, Copy, Debug)]
pub struct OdeTol {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for OdeTol {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
        }
    }
}

/// One step of size `h` from `(t, y)`. Returns the fifth-order solution and
/// the scaled error norm over the first `controlled` components.
pub fn dopri_step<const D: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; D],
    h: f64,
    tol: OdeTol,
    controlled: usize,
) -> Result<([f64; D], f64)>
where
    F: FnMut(f64, &[f64; D]) -> Result<[f64; D]>,
{
    let mut k = [[0.0; D]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, a) in A[s].iter().enumerate().take(s) {
            if *a != 0.0 {
                for d in 0..D {
                    ys[d] += h * a * k[j][d];
                }
            }
        }
        k[s] = f(t + C[s] * h, &ys)?;
    }
    let mut y5 = *y;
    let mut err = 0.0;
    for d in 0..D {
        let mut hi = 0.0;
        let mut lo = 0.0;
        for s in 0..7 {
            hi += B5[s] * k[s][d];
            lo += B4[s] * k[s][d];
        }
        y5[d] += h * hi;
        if d < controlled {
            let scale = tol.atol + tol.rtol * y[d].abs().max(y5[d].abs());
            let e = h * (hi - lo) / scale;
            err += e * e;
        }
    }
    Ok((y5, (err / controlled.max(1) as f64).sqrt()))
}

/// Next step size from an error norm (fifth-order controller).
pub fn next_step(h: f64, err: f64) -> f64 {
    let factor = if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    };
    h * factor
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_harmonic_oscillator() {
        let mut f = |_t: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let tol = OdeTol::default();
        let (mut t, mut y, mut h) = (0.0f64, [1.0, 0.0], 0.01f64);
        while t < 10.0 {
            let step = h.min(10.0 - t);
            let (yn, err) = dopri_step(&mut f, t, &y, step, tol, 2).unwrap();
            if err <= 1.0 {
                t += step;
                y = yn;
            }
            h = next_step(step, err);
        }
        assert!((y[0] - 10f64.cos()).abs() < 1e-10);
    }
}
