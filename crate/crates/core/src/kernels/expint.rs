//! Scaled complex exponential integral `em1(z) = e^z E1(z)`, valid for
//! `|arg z| < pi`. The scaling avoids overflow when the Lorentzian tail
//! corrections combine `E1` with large exponential prefactors.

use crate::C64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `e^z E1(z)` via the power series for small `|z|` and the standard
/// continued fraction (modified Lentz) otherwise.
pub fn em1(z: C64) -> C64 {
    debug_assert!(z.norm() > 0.0, "em1 undefined at z = 0");
    if z.norm() <= 4.0 {
        // E1(z) = -gamma - ln z + sum_{k>=1} (-1)^{k+1} z^k / (k k!)
        let mut sum = C64::new(0.0, 0.0);
        let mut term = C64::new(1.0, 0.0);
        for k in 1..=60 {
            term *= -z / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.norm() < 1e-18 * sum.norm().max(1.0) {
                break;
            }
        }
        (sum - EULER_GAMMA - z.ln()) * z.exp()
    } else {
        // E1(z) = e^{-z} / (z + 1 - 1^2/(z + 3 - 2^2/(z + 5 - ...)))
        let tiny = 1e-30;
        let mut f = C64::new(tiny, 0.0);
        let mut c = f;
        let mut d = C64::new(0.0, 0.0);
        for j in 1..500 {
            let (a, b) = if j == 1 {
                (C64::new(1.0, 0.0), z + 1.0)
            } else {
                let m = (j - 1) as f64;
                (C64::new(-m * m, 0.0), z + (2.0 * j as f64 - 1.0))
            };
            d = b + a * d;
            if d.norm() < tiny {
                d = C64::new(tiny, 0.0);
            }
            c = b + a / c;
            if c.norm() < tiny {
                c = C64::new(tiny, 0.0);
            }
            d = d.inv();
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).norm() < 1e-16 {
                break;
            }
        }
        f
    }
}
