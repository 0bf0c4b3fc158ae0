//! Degree-9 smoothstep, the C⁴ profile behind every cutoff and bump.

use crate::scalar::Real;

/// S(t) = 126t⁵ − 420t⁶ + 540t⁷ − 315t⁸ + 70t⁹ on [0,1], clamped outside.
#[inline]
pub fn s9<T: Real>(t: T) -> T {
    if t <= T::zero() {
        return T::zero();
    }
    if t >= T::one() {
        return T::one();
    }
    let c = |x: f64| T::lit(x);
    let t2 = t * t;
    let t5 = t2 * t2 * t;
    let s = t5 * (c(126.0) + t * (c(-420.0) + t * (c(540.0) + t * (c(-315.0) + t * c(70.0)))));
    s.max(T::zero()).min(T::one())
}

/// S and its first three derivatives; derivatives vanish outside (0,1).
#[inline]
pub fn s9_jet(t: f64) -> [f64; 4] {
    if t <= 0.0 {
        return [0.0; 4];
    }
    if t >= 1.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let u = 1.0 - t;
    let (t2, u2) = (t * t, u * u);
    let s = (t2 * t2 * t * (126.0 + t * (-420.0 + t * (540.0 + t * (-315.0 + t * 70.0))))).clamp(0.0, 1.0);
    let d1 = 630.0 * t2 * t2 * u2 * u2;
    let d2 = 2520.0 * t2 * t * u2 * u * (1.0 - 2.0 * t);
    let d3 = 2520.0 * t2 * u2 * (3.0 * (1.0 - 2.0 * t) * (1.0 - 2.0 * t) - 2.0 * t * u);
    [s, d1, d2, d3]
}

/// Exact sup of S′ on [0,1], attained at t = 1/2.
pub const S9_MAX_SLOPE: f64 = 630.0 / 256.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_flatness() {
        assert_eq!(s9(0.0f64), 0.0);
        assert_eq!(s9(1.0f64), 1.0);
        assert!((s9(0.5f64) - 0.5).abs() < 1e-15);
        for t in [0.0, 1.0] {
            let j = s9_jet(t + if t == 0.0 { 1e-9 } else { -1e-9 });
            assert!(j[1].abs() < 1e-20 && j[2].abs() < 1e-15);
        }
    }

    #[test]
    fn jet_matches_finite_differences() {
        for &t in &[0.1, 0.37, 0.5, 0.81] {
            let h = 1e-5;
            let j = s9_jet(t);
            let (jp, jm) = (s9_jet(t + h), s9_jet(t - h));
            for d in 0..3 {
                let fd = (jp[d] - jm[d]) / (2.0 * h);
                assert!((fd - j[d + 1]).abs() < 1e-6 * (1.0 + j[d + 1].abs()), "d={d} t={t}");
            }
            assert!((j[0] - s9(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn max_slope_by_dense_sampling() {
        let m = (0..=100_000)
            .map(|i| s9_jet(i as f64 / 100_000.0)[1])
            .fold(0.0f64, f64::max);
        assert!((m - S9_MAX_SLOPE).abs() < 1e-12);
    }
}
