//! The distance potential: -log(1 + 1/delta) in the excursion region
//! (delta >= N), the constant -A in the free region, zero on the subshift
//! itself. Exact Birkhoff sums along return words are evaluated on the finite
//! word u.w_J: the trailing cylinder word lies outside L(X), which caps every
//! depth along the orbit, so no value is censored.

use thiserror::Error;

use crate::sft::{CylinderSpec, DeltaValue, SftError, SftSpec, Word};

#[derive(Debug, Error, PartialEq)]
pub enum PotentialError {
    #[error("penalty A must be positive, got {0}")]
    NonPositiveA(f64),
    #[error("excursion threshold N must be at least 1, got {0}")]
    BadN(usize),
    #[error("N={n} is below the mixing index {mix} of the subshift")]
    NBelowMixing { n: usize, mix: usize },
    #[error("convergence constant C(A,N) = N*A - log N = {0} is not positive")]
    NonPositiveC(f64),
    #[error("delta is censored at {0} below the threshold {1}; the potential value is unknown")]
    CensoredDelta(usize, usize),
    #[error("{0} is not a return word to the cylinder")]
    NotAReturnWord(String),
    #[error(transparent)]
    Sft(#[from] SftError),
}

/// Parameters (A, N) of the potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    a: f64,
    n: usize,
}

impl PotentialParams {
    /// Validates A > 0, N >= mixing index, and C(A,N) = N*A - log N > 0.
    pub fn new(spec: &SftSpec, a: f64, n: usize) -> Result<Self, PotentialError> {
        if !(a > 0.0) {
            return Err(PotentialError::NonPositiveA(a));
        }
        if n < 1 {
            return Err(PotentialError::BadN(n));
        }
        let mix = spec.mixing_index(spec.default_mixing_cap())?;
        if n < mix {
            return Err(PotentialError::NBelowMixing { n, mix });
        }
        let c = n as f64 * a - (n as f64).ln();
        if !(c > 0.0) {
            return Err(PotentialError::NonPositiveC(c));
        }
        Ok(PotentialParams { a, n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn threshold(&self) -> usize {
        self.n
    }

    /// C(A,N) = N*A - log N.
    pub fn convergence_constant(&self) -> f64 {
        self.n as f64 * self.a - (self.n as f64).ln()
    }

    /// Advisory: the threshold should sit well above the mixing index.
    pub fn advisories(&self, spec: &SftSpec) -> Vec<String> {
        let mut out = Vec::new();
        if let Ok(mix) = spec.mixing_index(spec.default_mixing_cap()) {
            if self.n < 2 * mix {
                out.push(format!(
                    "N={} is below twice the mixing index {}; the excursion threshold should be well above it",
                    self.n, mix
                ));
            }
        }
        out
    }

    /// Potential at a fully determined depth value.
    pub fn phi_exact(&self, delta: usize) -> f64 {
        if delta >= self.n {
            -(1.0 + 1.0 / delta as f64).ln()
        } else {
            -self.a
        }
    }
}

pub use crate::series::Enclosure;

/// Potential value for a possibly censored depth, in interval semantics.
///
/// A censored depth at or above the threshold encloses the value between the
/// deepest-known excursion value and the limit 0 on the subshift. A censored
/// depth below the threshold is genuinely unknown.
pub fn phi(params: &PotentialParams, delta: DeltaValue) -> Result<Enclosure, PotentialError> {
    match delta {
        DeltaValue::Exact(k) => Ok(Enclosure::point(params.phi_exact(k))),
        DeltaValue::AtLeast(k) => {
            if k >= params.threshold() {
                Ok(Enclosure {
                    lo: -(1.0 + 1.0 / k as f64).ln(),
                    hi: 0.0,
                })
            } else {
                Err(PotentialError::CensoredDelta(k, params.threshold()))
            }
        }
    }
}

/// The limit value of the potential on points of the subshift (delta infinite).
pub fn phi_on_subshift() -> f64 {
    0.0
}

/// Exact depth profile of u.w_J along shifts i in [0, |u|).
///
/// Every depth is exact because the trailing cylinder word is outside L(X).
/// Single backward scan: within a maximal language stretch the depth counts
/// down to the break position.
pub fn delta_profile(spec: &SftSpec, cylinder: &CylinderSpec, u: &[u8]) -> Vec<usize> {
    let mut y = Vec::with_capacity(u.len() + 2);
    y.extend_from_slice(u);
    y.push(cylinder.alpha());
    y.push(cylinder.beta());
    let len = y.len();
    // next_break[i]: smallest j >= i at which the path starting at i fails
    let mut next_break = vec![len; len];
    for i in (0..len).rev() {
        if !spec.is_essential(y[i]) {
            next_break[i] = i;
        } else if i + 1 < len {
            if !spec.pair_allowed(y[i], y[i + 1]) {
                next_break[i] = i + 1;
            } else {
                next_break[i] = next_break[i + 1];
            }
        }
    }
    debug_assert!(next_break[0] < len, "cylinder word must break the path");
    (0..u.len()).map(|i| next_break[i] - i).collect()
}

/// Exact Birkhoff sum S_{|u|} phi along a return word, evaluated on u.w_J.
pub fn birkhoff_sum(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    params: &PotentialParams,
    u: &Word,
    check_return: bool,
) -> Result<f64, PotentialError> {
    if check_return && !crate::induced::is_return_word(spec, cylinder, u.symbols()) {
        return Err(PotentialError::NotAReturnWord(u.to_string()));
    }
    Ok(birkhoff_sum_from_profile(
        params,
        &delta_profile(spec, cylinder, u.symbols()),
    ))
}

pub fn birkhoff_sum_from_profile(params: &PotentialParams, profile: &[usize]) -> f64 {
    profile.iter().map(|&d| params.phi_exact(d)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_setup() -> (SftSpec, CylinderSpec, PotentialParams) {
        let spec = SftSpec::from_forbidden_blocks(2, &[Word(vec![1, 1])]).unwrap();
        let cyl = CylinderSpec::new(&spec, &Word(vec![1, 1])).unwrap();
        let params = PotentialParams::new(&spec, 1.0, 4).unwrap();
        (spec, cyl, params)
    }

    #[test]
    fn param_validation() {
        let spec = SftSpec::from_forbidden_blocks(2, &[Word(vec![1, 1])]).unwrap();
        assert!(matches!(
            PotentialParams::new(&spec, 0.0, 4),
            Err(PotentialError::NonPositiveA(_))
        ));
        assert!(matches!(
            PotentialParams::new(&spec, 1.0, 1),
            Err(PotentialError::NBelowMixing { .. })
        ));
        // C(A,N) = 4*0.3 - log 4 = 1.2 - 1.386 < 0
        assert!(matches!(
            PotentialParams::new(&spec, 0.3, 4),
            Err(PotentialError::NonPositiveC(_))
        ));
        let p = PotentialParams::new(&spec, 1.0, 2).unwrap();
        assert!(!p.advisories(&spec).is_empty());
        let p = PotentialParams::new(&spec, 1.0, 4).unwrap();
        assert!(p.advisories(&spec).is_empty());
    }

    #[test]
    fn phi_values() {
        let (_, _, params) = golden_setup();
        let n = params.threshold();
        assert_eq!(
            phi(&params, DeltaValue::Exact(n)).unwrap(),
            Enclosure::point(-(1.0 + 1.0 / n as f64).ln())
        );
        assert_eq!(
            phi(&params, DeltaValue::Exact(n - 1)).unwrap(),
            Enclosure::point(-1.0)
        );
        assert_eq!(phi_on_subshift(), 0.0);
        let enc = phi(&params, DeltaValue::AtLeast(10)).unwrap();
        assert_eq!(enc.hi, 0.0);
        assert!((enc.lo + (1.0f64 + 0.1).ln()).abs() < 1e-15);
        assert!(matches!(
            phi(&params, DeltaValue::AtLeast(2)),
            Err(PotentialError::CensoredDelta(2, 4))
        ));
    }

    #[test]
    fn delta_profile_matches_bruteforce() {
        let (spec, cyl, _) = golden_setup();
        for u in [
            vec![1u8, 1, 0],
            vec![1],
            vec![1, 1, 0, 0, 0, 0, 0, 0, 0, 0],
            vec![1, 1, 0, 1, 0, 0],
        ] {
            let fast = delta_profile(&spec, &cyl, &u);
            let mut y = u.clone();
            y.push(1);
            y.push(1);
            let slow: Vec<usize> = (0..u.len())
                .map(|i| match spec.delta(&y[i..]) {
                    DeltaValue::Exact(k) => k,
                    DeltaValue::AtLeast(_) => panic!("profile must be exact"),
                })
                .collect();
            assert_eq!(fast, slow, "u={:?}", u);
        }
    }

    #[test]
    fn birkhoff_all_free() {
        let (spec, cyl, params) = golden_setup();
        let profile = delta_profile(&spec, &cyl, &[1, 1, 0]);
        assert_eq!(profile, vec![1, 3, 2]);
        let s = birkhoff_sum(&spec, &cyl, &params, &Word(vec![1, 1, 0]), true).unwrap();
        assert!((s + 3.0).abs() < 1e-15);
        let s1 = birkhoff_sum(&spec, &cyl, &params, &Word(vec![1]), true).unwrap();
        assert!((s1 + 1.0).abs() < 1e-15);
    }

    #[test]
    fn birkhoff_type2_closed_form() {
        let (spec, cyl, params) = golden_setup();
        // u = 11 0^8, length 10: -(N-1)A + log N - log(n+1)
        let u = Word(vec![1, 1, 0, 0, 0, 0, 0, 0, 0, 0]);
        let s = birkhoff_sum(&spec, &cyl, &params, &u, true).unwrap();
        let expect = -3.0 + 4.0f64.ln() - 11.0f64.ln();
        assert!((s - expect).abs() < 1e-12);
        assert!((s + 4.0116009116).abs() < 1e-9);
    }

    #[test]
    fn birkhoff_rejects_non_return_word() {
        let (spec, cyl, params) = golden_setup();
        let err = birkhoff_sum(&spec, &cyl, &params, &Word(vec![1, 0]), true).unwrap_err();
        assert!(matches!(err, PotentialError::NotAReturnWord(_)));
    }

    #[test]
    fn birkhoff_nonpositive_for_all_short_return_words() {
        let (spec, cyl, params) = golden_setup();
        let words = crate::induced::enumerate_return_words(&spec, &cyl, 12, 1 << 20).unwrap();
        for rw in &words {
            let s = birkhoff_sum_from_profile(&params, rw.delta_profile());
            assert!(s <= 0.0);
        }
    }

    #[test]
    fn birkhoff_independent_of_cylinder_extension() {
        // recomputing on u.w_J.w' must give the same per-position depths
        let (spec, cyl, params) = golden_setup();
        let u = vec![1u8, 1, 0, 0, 0, 1, 0];
        let profile = delta_profile(&spec, &cyl, &u);
        let mut y = u.clone();
        y.extend_from_slice(&[1, 1, 0, 1, 0]);
        for (i, &d) in profile.iter().enumerate() {
            assert_eq!(spec.delta(&y[i..]), DeltaValue::Exact(d));
        }
        let _ = params;
    }
}
