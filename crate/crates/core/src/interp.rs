//! Piecewise cubic Hermite interpolation on a strictly increasing grid.

use alloc::vec::Vec;

/// Cubic Hermite interpolant through `(x_i, y_i)` with slopes `d_i`.
///
/// With [`Hermite::monotone`] the supplied slopes are limited with the
/// Fritsch-Carlson conditions so that monotone data give a monotone
/// interpolant; slopes that already satisfy the conditions are kept exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermite {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Hermite {
    /// Panics if the lengths differ, fewer than two nodes are given, or the
    /// grid is not strictly increasing.
    pub fn new(x: Vec<f64>, y: Vec<f64>, d: Vec<f64>) -> Self {
        assert!(x.len() >= 2, "need at least two nodes");
        assert!(x.len() == y.len() && y.len() == d.len(), "length mismatch");
        assert!(
            x.windows(2).all(|w| w[0] < w[1]),
            "grid must be strictly increasing"
        );
        Self { x, y, d }
    }

    pub fn monotone(x: Vec<f64>, y: Vec<f64>, mut d: Vec<f64>) -> Self {
        limit_slopes(&x, &y, &mut d);
        Self::new(x, y, d)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.d
    }

    fn cell(&self, x: f64) -> usize {
        let n = self.x.len();
        let i = self.x.partition_point(|&xi| xi <= x);
        i.clamp(1, n - 1) - 1
    }

    /// Value at `x`; outside the grid the end cells are extended.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_slope(x).0
    }

    /// Value and first derivative at `x`.
    pub fn eval_with_slope(&self, x: f64) -> (f64, f64) {
        let i = self.cell(x);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (d0, d1) = (self.d[i] * h, self.d[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let value = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
        let dh00 = 6.0 * t2 - 6.0 * t;
        let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
        let dh01 = -dh00;
        let dh11 = 3.0 * t2 - 2.0 * t;
        let slope = (dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1) / h;
        (value, slope)
    }
}

fn limit_slopes(x: &[f64], y: &[f64], d: &mut [f64]) {
    for i in 0..x.len().saturating_sub(1) {
        let delta = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        if delta == 0.0 {
            d[i] = 0.0;
            d[i + 1] = 0.0;
            continue;
        }
        // Slopes of the wrong sign are zeroed.
        if d[i] * delta < 0.0 {
            d[i] = 0.0;
        }
        if d[i + 1] * delta < 0.0 {
            d[i + 1] = 0.0;
        }
        let a = d[i] / delta;
        let b = d[i + 1] / delta;
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / crate::math::sqrt(s);
            d[i] = tau * a * delta;
            d[i + 1] = tau * b * delta;
        }
    }
}

/// Derivative at `x[i]` of the polynomial interpolating the nodes
/// `i - half ..= i + half` (clipped to the grid).
pub fn stencil_slope(x: &[f64], y: &[f64], i: usize, half: usize) -> f64 {
    let lo = i.saturating_sub(half);
    let hi = (i + half).min(x.len() - 1);
    let xi = x[i];
    let mut slope = 0.0;
    for j in lo..=hi {
        if j == i {
            let s: f64 = (lo..=hi).filter(|&m| m != i).map(|m| 1.0 / (xi - x[m])).sum();
            slope += y[i] * s;
        } else {
            let mut c = 1.0 / (x[j] - xi);
            for m in (lo..=hi).filter(|&m| m != i && m != j) {
                c *= (xi - x[m]) / (x[j] - x[m]);
            }
            slope += y[j] * c;
        }
    }
    slope
}
