//! Dormand-Prince 5(4) steps with an error-controlled step size.

use crate::error::{Error, Result};
use crate::math::powf;

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
// Difference between the fifth and embedded fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One Dormand-Prince step of size `h`. Returns the fifth order solution and
/// the embedded error vector.
pub fn dp_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> ([f64; N], [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, y);
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, &k1)]));
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, &k1), (A32, &k2)]));
    let k4 = f(
        t + C4 * h,
        &axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
    );
    let k5 = f(
        t + C5 * h,
        &axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        t + h,
        &axpy(
            y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
    );
    let y5 = axpy(
        y,
        h,
        &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
    );
    let k7 = f(t + h, &y5);
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y5, err)
}

/// Step-size controller settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_min: f64,
}

/// Takes one accepted step starting with trial size `h`, shrinking as needed.
/// Returns `(h_used, y_new, h_suggested)`.
pub fn adaptive_step<const N: usize, F>(
    f: &F,
    t: f64,
    y: &[f64; N],
    h: f64,
    tol: &Tolerances,
) -> Result<(f64, [f64; N], f64)>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut h = h.min(tol.h_max);
    loop {
        if h < tol.h_min {
            return Err(Error::Stiffness { r: t });
        }
        let (y_new, err) = dp_step(f, t, y, h);
        let mut norm: f64 = 0.0;
        let mut finite = true;
        for i in 0..N {
            let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            let e = (err[i] / scale).abs();
            finite &= y_new[i].is_finite() && e.is_finite();
            norm = norm.max(e);
        }
        if !finite {
            h *= 0.25;
            continue;
        }
        if norm <= 1.0 {
            let grow = if norm == 0.0 {
                5.0
            } else {
                (0.9 * powf(norm, -0.2)).clamp(0.2, 5.0)
            };
            return Ok((h, y_new, (h * grow).min(tol.h_max)));
        }
        h *= (0.9 * powf(norm, -0.2)).clamp(0.1, 0.9);
    }
}
