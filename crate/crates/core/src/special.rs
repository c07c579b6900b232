//! Gamma function.

use crate::scalar::{lit, Real};

// Lanczos approximation with g = 7, n = 9 (Godfrey's coefficients).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments.
///
/// Uses the reflection formula below 1/2. Returns NaN at the poles
/// `0, -1, -2, ...`.
pub fn gamma<T: Real>(x: T) -> T {
    let half = lit::<T>(0.5);
    if x < half {
        if x == x.floor() {
            return T::nan();
        }
        let pi = T::PI();
        return pi / ((pi * x).sin() * gamma(T::one() - x));
    }
    // Exact factorials for small positive integers keep c_log(N) and friends exact.
    if x == x.floor() && x <= lit(25.0) {
        let n = x.to_usize().unwrap_or(0);
        let mut acc = T::one();
        for k in 2..n {
            acc = acc * T::from_usize(k).unwrap();
        }
        return acc;
    }
    let z = x - T::one();
    let mut sum = lit::<T>(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum = sum + lit::<T>(c) / (z + T::from_usize(i).unwrap());
    }
    let t = z + lit::<T>(LANCZOS_G) + half;
    (lit::<T>(2.0) * T::PI()).sqrt() * t.powf(z + half) * (-t).exp() * sum
}
