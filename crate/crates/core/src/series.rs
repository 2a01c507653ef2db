//! Certified evaluation of the series tails behind the induced identity:
//! sums of e^{-eps*j} j^{-t} over integer ranges, enclosed from both sides.
//!
//! The workhorse is Euler-Maclaurin summation for the completely monotone
//! integrand f(x) = e^{-eps*x} x^{-t}: the remainder after each correction
//! term is bounded by the first omitted term, so consecutive partial sums
//! bracket the true value. The improper integral is enclosed by Simpson's
//! rule on a geometric grid with an explicit fourth-derivative correction.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("series diverges (exponent t={t}, damping eps={eps})")]
    Divergent { t: f64, eps: f64 },
}

/// A closed interval enclosing a real value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
}

impl Enclosure {
    pub fn point(x: f64) -> Self {
        Enclosure { lo: x, hi: x }
    }

    pub fn zero() -> Self {
        Enclosure { lo: 0.0, hi: 0.0 }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn add(self, other: Enclosure) -> Enclosure {
        Enclosure {
            lo: self.lo + other.lo,
            hi: self.hi + other.hi,
        }
    }

    /// Scale by a nonnegative factor.
    pub fn scale(self, k: f64) -> Enclosure {
        debug_assert!(k >= 0.0);
        Enclosure {
            lo: self.lo * k,
            hi: self.hi * k,
        }
    }

    pub fn mul(self, other: Enclosure) -> Enclosure {
        let c = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        Enclosure {
            lo: c.iter().cloned().fold(f64::INFINITY, f64::min),
            hi: c.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn intersects(&self, other: &Enclosure) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Widen relatively by `rel` on both sides; absorbs rounding drift of
    /// plain f64 accumulation.
    pub fn inflate(self, rel: f64) -> Enclosure {
        let pad = rel * self.lo.abs().max(self.hi.abs()) + f64::MIN_POSITIVE;
        Enclosure {
            lo: self.lo - pad,
            hi: self.hi + pad,
        }
    }
}

/// Relative inflation applied to assembled enclosures in place of directed
/// rounding.
pub const ROUNDING_SLACK: f64 = 1e-13;

/// Successive derivatives of f(x) = e^{-eps*x} x^{-t} at a point, written as
/// e^{-eps*x} * sum_i a_i x^{-t-i}.
fn derivatives(eps: f64, t: f64, x: f64, orders: usize) -> Vec<f64> {
    let mut coeffs: Vec<f64> = vec![1.0];
    let mut out = Vec::with_capacity(orders + 1);
    let damp = (-eps * x).exp();
    for order in 0..=orders {
        let val: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(i, &a)| a * x.powf(-t - i as f64))
            .sum();
        out.push(damp * val);
        if order == orders {
            break;
        }
        // d/dx [a x^{-t-i} e^{-eps x}] = (-eps a) x^{-t-i} - a(t+i) x^{-t-i-1}
        let mut next = vec![0.0; coeffs.len() + 1];
        for (i, &a) in coeffs.iter().enumerate() {
            next[i] += -eps * a;
            next[i + 1] += -a * (t + i as f64);
        }
        coeffs = next;
    }
    out
}

fn f_val(eps: f64, t: f64, x: f64) -> f64 {
    (-eps * x).exp() * x.powf(-t)
}

// 8-point Gauss-Legendre nodes/weights on [-1, 1].
const GL8_X: [f64; 4] = [
    0.1834346424956498,
    0.5255324099163290,
    0.7966664774136267,
    0.9602898564975363,
];
const GL8_W: [f64; 4] = [
    0.3626837833783620,
    0.3137066458778873,
    0.2223810344533745,
    0.1012285362903763,
];
// (8!)^4 / (17 * (16!)^3), the Gauss-Legendre error constant for n=8
const GL8_ERR: f64 = 1.698e-23;

/// Encloses the improper integral of e^{-eps*x} x^{-t} over [m, infinity),
/// eps > 0: Gauss-Legendre on a geometric grid. The quadrature error is
/// bounded through |f^(16)(x)| <= f(x) (eps + (t+15)/x)^16, which is
/// decreasing, so the left endpoint dominates each interval.
fn integral_tail(eps: f64, t: f64, m: f64) -> Enclosure {
    debug_assert!(eps > 0.0);
    let ratio = 1.03f64;
    let mut a = m;
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    loop {
        if eps * a > 60.0 {
            // remaining mass under pure exponential domination
            hi += f_val(eps, t, a) / eps;
            break;
        }
        let b = a * ratio;
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut quad = 0.0;
        for (&x, &w) in GL8_X.iter().zip(GL8_W.iter()) {
            quad += w * (f_val(eps, t, mid - half * x) + f_val(eps, t, mid + half * x));
        }
        quad *= half;
        let d16 = f_val(eps, t, a) * (eps + (t + 15.0) / a).powi(16);
        let err = GL8_ERR * (b - a).powi(17) * d16;
        lo += quad - err;
        hi += quad + err;
        a = b;
    }
    Enclosure {
        lo: lo.max(0.0),
        hi,
    }
    .inflate(ROUNDING_SLACK)
}

/// Certified enclosure of sum_{j >= j0} e^{-eps*j} j^{-t} for eps >= 0.
///
/// Diverges when eps = 0 and t <= 1 (the harmonic barrier). For strong
/// damping a direct sum with a geometric remainder suffices; otherwise
/// Euler-Maclaurin at a shifted base point captures the slowly decaying
/// bulk to near machine precision.
pub fn lerch_tail(eps: f64, t: f64, j0: u64) -> Result<Enclosure, SeriesError> {
    assert!(j0 >= 1, "lerch_tail requires j0 >= 1");
    assert!(eps >= 0.0 && t >= 0.0);
    if eps == 0.0 && t <= 1.0 {
        return Err(SeriesError::Divergent { t, eps });
    }

    if eps >= 0.1 {
        // geometric decay: direct summation
        let mut sum = 0.0f64;
        let mut j = j0;
        let decay = (-eps).exp();
        loop {
            let term = f_val(eps, t, j as f64);
            sum += term;
            if term < 1e-22 * (1.0 + sum) || j > j0 + 2_000_000 {
                let rem = f_val(eps, t, (j + 1) as f64) / (1.0 - decay);
                return Ok(Enclosure {
                    lo: sum,
                    hi: sum + rem,
                }
                .inflate(ROUNDING_SLACK));
            }
            j += 1;
        }
    }

    // Euler-Maclaurin from base point M
    let m = j0.max(512);
    let mut head = 0.0f64;
    for j in j0..m {
        head += f_val(eps, t, j as f64);
    }
    let mf = m as f64;
    let integral = if eps == 0.0 {
        Enclosure::point(mf.powf(1.0 - t) / (t - 1.0)).inflate(ROUNDING_SLACK)
    } else {
        integral_tail(eps, t, mf)
    };
    let d = derivatives(eps, t, mf, 5);
    // sum_{j>=M} f(j) = I + f(M)/2 - B2/2! f'(M) - B4/4! f'''(M) - ...
    let base = d[0] / 2.0;
    let c1 = -d[1] / 12.0;
    let c2 = d[3] / 720.0;
    let c3 = -d[5] / 30240.0;
    // consecutive Euler-Maclaurin partial sums bracket the value for a
    // completely monotone integrand
    let s_a = base + c1 + c2;
    let s_b = s_a + c3;
    let corr = Enclosure {
        lo: s_a.min(s_b),
        hi: s_a.max(s_b),
    };
    Ok(Enclosure::point(head)
        .add(integral)
        .add(corr)
        .inflate(ROUNDING_SLACK))
}

/// Enclosure of the Riemann zeta tail sum_{n >= start} n^{-t}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaTail {
    pub t: f64,
    pub start: u64,
    pub enclosure: Enclosure,
}

/// Direct summation to a cutoff plus the integral remainder
/// int_{M+1}^inf x^{-t} dx <= tail <= (M+1)^{-t} + int.
pub fn zeta_tail(t: f64, start: u64) -> Result<ZetaTail, SeriesError> {
    assert!(start >= 1);
    if t <= 1.0 {
        return Err(SeriesError::Divergent { t, eps: 0.0 });
    }
    let mut sum = 0.0f64;
    let mut j = start;
    loop {
        let next = ((j + 1) as f64).powf(-t);
        if next < 1e-11 || j >= start + 2_000_000 {
            // sum now covers start..j; the rest lies between the integral
            // from j+1 and that integral plus its first term
            let integral = ((j + 1) as f64).powf(1.0 - t) / (t - 1.0);
            let lo = sum + (j as f64).powf(-t) + integral;
            let enclosure = Enclosure {
                lo,
                hi: lo + next,
            }
            .inflate(ROUNDING_SLACK);
            return Ok(ZetaTail {
                t,
                start,
                enclosure,
            });
        }
        sum += (j as f64).powf(-t);
        j += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_tail_basel() {
        let z = zeta_tail(2.0, 1).unwrap();
        let basel = std::f64::consts::PI * std::f64::consts::PI / 6.0;
        assert!(z.enclosure.contains(basel));
        assert!(z.enclosure.width() < 1e-9);
    }

    #[test]
    fn zeta_tail_diverges_at_one() {
        assert!(zeta_tail(1.0, 5).is_err());
    }

    #[test]
    fn zeta_tail_large_t_first_term_dominates() {
        let z = zeta_tail(40.0, 4).unwrap();
        let brute: f64 = (4u64..200).map(|j| (j as f64).powf(-40.0)).sum();
        assert!(z.enclosure.contains(brute));
        assert!(z.enclosure.hi < 4.0f64.powf(-40.0) * 1.001);
    }

    #[test]
    fn lerch_matches_zeta_at_zero_damping() {
        for t in [1.5, 2.0, 3.0] {
            for j0 in [1u64, 4, 17] {
                let a = lerch_tail(0.0, t, j0).unwrap();
                let b = zeta_tail(t, j0).unwrap().enclosure;
                assert!(a.intersects(&b), "t={} j0={}", t, j0);
                assert!(a.width() < 1e-11, "t={} j0={} width={}", t, j0, a.width());
            }
        }
    }

    #[test]
    fn lerch_near_harmonic_is_tight() {
        // slowly convergent regime where direct summation is hopeless
        let e = lerch_tail(0.0, 1.02, 5).unwrap();
        assert!(e.width() / e.lo < 1e-10);
        // crude independent check: value must exceed the integral lower
        // bound and stay below first-term + integral
        let lower = 5.0f64.powf(1.0 - 1.02) / 0.02;
        let upper = 5.0f64.powf(-1.02) + lower;
        assert!(e.lo > 0.9 * lower && e.hi < 1.1 * upper);
    }

    #[test]
    fn lerch_damped_matches_bruteforce() {
        for (eps, t, j0) in [
            (0.5, 1.5, 1u64),
            (0.05, 2.0, 3),
            (0.01, 0.0, 1),
            (0.2, 0.7, 2),
        ] {
            let e = lerch_tail(eps, t, j0).unwrap();
            let mut brute = 0.0;
            for j in j0..j0 + 20_000 {
                brute += (-(eps * j as f64)).exp() * (j as f64).powf(-t);
            }
            assert!(
                e.lo <= brute + 1e-12 && brute <= e.hi + 1e-12,
                "eps={} t={} j0={} brute={} enc=({},{})",
                eps,
                t,
                j0,
                brute,
                e.lo,
                e.hi
            );
            assert!(e.width() < 1e-8 * (1.0 + brute));
        }
    }

    #[test]
    fn lerch_tiny_damping_sandwiched_by_zeta() {
        // e^{-eps j} < 1, so the damped sum sits below the pure zeta tail
        // and converges to it as eps -> 0
        let z = lerch_tail(0.0, 1.5, 10).unwrap();
        let d1 = lerch_tail(1e-9, 1.5, 10).unwrap();
        let d2 = lerch_tail(1e-6, 1.5, 10).unwrap();
        assert!(d1.lo <= z.hi && d2.lo <= d1.hi);
        assert!(z.hi - d1.lo < 1e-3);
        assert!(d1.width() / d1.lo < 1e-7);
    }

    #[test]
    fn lerch_monotone_in_all_arguments() {
        let base = lerch_tail(0.01, 1.5, 4).unwrap();
        assert!(lerch_tail(0.02, 1.5, 4).unwrap().hi <= base.hi + 1e-12);
        assert!(lerch_tail(0.01, 2.0, 4).unwrap().hi <= base.hi + 1e-12);
        assert!(lerch_tail(0.01, 1.5, 5).unwrap().hi <= base.hi + 1e-12);
    }

    #[test]
    fn divergent_cases() {
        assert!(lerch_tail(0.0, 1.0, 1).is_err());
        assert!(lerch_tail(0.0, 0.5, 1).is_err());
        assert!(lerch_tail(1e-8, 0.5, 1).is_ok());
    }
}
