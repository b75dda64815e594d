//! Adaptive Dormand-Prince 5(4) for small complex systems.

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-13, max_steps: 2_000_000 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[C64; N], h: f64, terms: &[(f64, &[C64; N])]) -> [C64; N] {
    let mut out = *y;
    for (w, k) in terms {
        if *w == 0.0 {
            continue;
        }
        let hw = h * w;
        for i in 0..N {
            out[i] += k[i] * hw;
        }
    }
    out
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    /// Integrate `y' = f(x, y)` from `x0` to `x1` (either direction).
    pub fn integrate<const N: usize, F>(&self, mut f: F, x0: f64, y0: [C64; N], x1: f64) -> Result<[C64; N]>
    where
        F: FnMut(f64, &[C64; N]) -> [C64; N],
    {
        let span = x1 - x0;
        if span == 0.0 {
            return Ok(y0);
        }
        let dir = span.signum();
        let mut x = x0;
        let mut y = y0;
        let mut k1 = f(x, &y);
        let mut h = dir * (span.abs() * 1e-3).min(1e-2);
        let h_min = span.abs() * 1e-15;
        let mut worst = 0.0f64;
        let mut steps = 0usize;

        while (x1 - x) * dir > 0.0 {
            if steps >= self.max_steps {
                return Err(Error::StepFailure { x, err: worst });
            }
            steps += 1;
            if (x + h - x1) * dir > 0.0 {
                h = x1 - x;
            }
            let k2 = f(x + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
            let k3 = f(x + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(x + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(x + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(
                x + h,
                &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(x + h, &y_new);

            let mut err = 0.0;
            for i in 0..N {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
                let sc = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
                err += (e.norm() / sc).powi(2);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::StepFailure { x, err: f64::INFINITY });
            }

            if err <= 1.0 {
                x += h;
                y = y_new;
                k1 = k7;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= fac;
            } else {
                worst = worst.max(err);
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h.abs() < h_min {
                    return Err(Error::StepFailure { x, err });
                }
            }
        }
        Ok(y)
    }
}
