//! The induced series λ_{t,z} over return words, its certified evaluation,
//! the freezing point t_c, and the pressure curve P(t).
//!
//! Every return word decomposes into an initial letter, language stretches,
//! and inessential singletons, glued at junction pairs outside the language.
//! Summing over stretch contents first turns λ into a finite matrix geometric
//! series whose entries are power series in the stretch length; those series
//! are evaluated exactly up to a horizon and closed with Perron-limit
//! coefficients and certified polylogarithm tails. Enumeration of actual
//! return words provides an independent lower bound and cross-check.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::induced::{self, InducedError, DEFAULT_BUDGET};
use crate::potential::{self, PotentialError, PotentialParams};
use crate::series::{lerch_tail, Enclosure, SeriesError, ROUNDING_SLACK};
pub use crate::series::{zeta_tail, ZetaTail};
use crate::sft::{CylinderSpec, SftSpec};
use crate::spectral::{perron_data_default, MarkovMeasure, SpectralError};

#[derive(Debug, Error)]
pub enum PressureError {
    #[error("series diverges at t={t}, z={z} (xi={xi}): need z > xi, or z = xi with t > 1")]
    Divergent { t: f64, z: f64, xi: f64 },
    #[error("grouped evaluation needs exactly one forbidden transition, found {0}")]
    NotSingleForbiddenBlock(usize),
    #[error("no bracket: the series value does not cross 1 on t > 1")]
    NoBracket,
    #[error("pressure curve invariant violated: {0}")]
    CurveInvariantViolated(String),
    #[error("cylinder depth {depth} is below the excursion threshold {threshold}")]
    DepthTooSmall { depth: usize, threshold: usize },
    #[error("sandwich bound violated: {0}")]
    BoundViolated(String),
    #[error("variational inequality violated by measure {index}: lhs {lhs} > pressure {pressure}")]
    ViolationFound { index: usize, lhs: f64, pressure: f64 },
    #[error(transparent)]
    Induced(#[from] InducedError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Certified value of the induced series at one (t, z).
#[derive(Debug, Clone, Copy)]
pub struct LambdaValue {
    pub lower: f64,
    pub upper: f64,
    pub truncation_len: usize,
    pub tail_bound: f64,
    pub converged: bool,
}

impl LambdaValue {
    pub fn enclosure(&self) -> Enclosure {
        Enclosure {
            lo: self.lower,
            hi: self.upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Analytic,
    Frozen,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Phase::Analytic => write!(f, "analytic"),
            Phase::Frozen => write!(f, "frozen"),
        }
    }
}

/// Result of locating the freezing point.
#[derive(Debug, Clone, Copy)]
pub struct TcData {
    pub t_c: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PressurePoint {
    pub t: f64,
    pub pressure: f64,
    pub phase: Phase,
    pub residual: f64,
    pub truncation_len: usize,
    pub tail_bound: f64,
}

#[derive(Debug, Clone)]
pub struct PressureCurve {
    pub xi: f64,
    pub t_c: f64,
    pub bracket: (f64, f64),
    pub points: Vec<PressurePoint>,
}

#[derive(Debug, Clone, Copy)]
pub struct SandwichBounds {
    pub lower: f64,
    pub value: LambdaValue,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct ProbeEntry {
    pub entropy: f64,
    pub integral: Enclosure,
    pub lhs_upper: f64,
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct VariationalReport {
    pub t: f64,
    pub pressure: f64,
    pub entries: Vec<ProbeEntry>,
}

/// Default root tolerance for bisections in t and z.
pub const DEFAULT_ROOT_TOL: f64 = 1e-8;
/// Default enumeration cutoff for direct evaluation.
pub const DEFAULT_MAX_LEN: usize = 60;

const HORIZON_MIN: usize = 320;
const EPS_CLAMP: f64 = 1e-15;

struct Total {
    enc: Enclosure,
    converged: bool,
}

/// Shared per-problem state: Perron data, exact small transfer powers, and
/// normalized powers c_d = T^{d-1} / eta^d up to the horizon with their
/// Perron limit.
struct Ctx<'a> {
    spec: &'a SftSpec,
    cyl: &'a CylinderSpec,
    params: &'a PotentialParams,
    xi: f64,
    ess: Vec<u8>,
    eidx: Vec<Option<usize>>,
    raw: Vec<Vec<Vec<f64>>>,
    c: Vec<Vec<Vec<f64>>>,
    gamma: Vec<Vec<f64>>,
    gamma_err: f64,
    horizon: usize,
}

/// Precomputed per-(t,z) factors shared by every series entry.
struct Kit {
    eps: f64,
    t: f64,
    main: Enclosure,
    main_j0: u64,
    err1: f64,
    err2: f64,
    w1: Vec<f64>,
    w2: Vec<f64>,
}

impl<'a> Ctx<'a> {
    fn new(
        spec: &'a SftSpec,
        cyl: &'a CylinderSpec,
        params: &'a PotentialParams,
    ) -> Result<Self, PressureError> {
        let perron = perron_data_default(spec)?;
        let eta = perron.eta;
        let xi = eta.ln();
        let ess: Vec<u8> = (0..spec.alphabet_size() as u8)
            .filter(|&s| spec.is_essential(s))
            .collect();
        let mut eidx = vec![None; spec.alphabet_size()];
        for (i, &s) in ess.iter().enumerate() {
            eidx[s as usize] = Some(i);
        }
        let d = ess.len();
        let t: Vec<Vec<f64>> = ess
            .iter()
            .map(|&i| {
                ess.iter()
                    .map(|&j| spec.transition()[i as usize][j as usize] as f64)
                    .collect()
            })
            .collect();
        let matmul = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            let mut out = vec![vec![0.0; d]; d];
            for i in 0..d {
                for k in 0..d {
                    if x[i][k] == 0.0 {
                        continue;
                    }
                    for j in 0..d {
                        out[i][j] += x[i][k] * y[k][j];
                    }
                }
            }
            out
        };
        let ident: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();

        let n = params.threshold();
        let mut raw = vec![ident.clone()];
        for _ in 1..n.max(2) {
            let next = matmul(&t, raw.last().unwrap());
            raw.push(next);
        }

        let horizon = HORIZON_MIN.max(n + 64);
        let scale = |m: &Vec<Vec<f64>>, k: f64| -> Vec<Vec<f64>> {
            m.iter()
                .map(|row| row.iter().map(|&x| x * k).collect())
                .collect()
        };
        let mut c: Vec<Vec<Vec<f64>>> = vec![scale(&ident, 1.0 / eta)];
        for _ in 1..horizon {
            let next = scale(&matmul(&t, c.last().unwrap()), 1.0 / eta);
            c.push(next);
        }
        let gamma = c[horizon - 1].clone();
        let mut maxdiff = 0.0f64;
        let mut maxentry = 0.0f64;
        for k in 1..=8 {
            for i in 0..d {
                for j in 0..d {
                    maxdiff = maxdiff.max((gamma[i][j] - c[horizon - 1 - k][i][j]).abs());
                    maxentry = maxentry.max(gamma[i][j]);
                }
            }
        }
        let gamma_err = 4.0 * maxdiff + 4e-16 * maxentry;

        Ok(Ctx {
            spec,
            cyl,
            params,
            xi,
            ess,
            eidx,
            raw,
            c,
            gamma,
            gamma_err,
            horizon,
        })
    }

    fn eps_of(&self, t: f64, z: f64) -> Result<f64, PressureError> {
        let eps = z - self.xi;
        if eps < -1e-11 {
            return Err(PressureError::Divergent { t, z, xi: self.xi });
        }
        let eps = eps.max(0.0);
        if eps <= EPS_CLAMP {
            if t <= 1.0 {
                return Err(PressureError::Divergent { t, z, xi: self.xi });
            }
            return Ok(0.0);
        }
        Ok(eps)
    }

    fn kit(&self, t: f64, eps: f64) -> Result<Kit, PressureError> {
        let n = self.params.threshold();
        let main_j0 = (n + 1) as u64;
        let main = lerch_tail(eps, t, main_j0)?;
        let err1 = lerch_tail(eps, t, (self.horizon + 2) as u64)?.hi;
        let err2 = lerch_tail(eps, t, (self.horizon + 3) as u64)?.hi;
        let mut w1 = vec![0.0; self.horizon + 1];
        let mut w2 = vec![0.0; self.horizon + 1];
        for d in 1..=self.horizon {
            let damp = (-eps * d as f64).exp();
            w1[d] = damp * ((d + 1) as f64).powf(-t);
            w2[d] = damp * ((d + 2) as f64).powf(-t);
        }
        Ok(Kit {
            eps,
            t,
            main,
            main_j0,
            err1,
            err2,
            w1,
            w2,
        })
    }

    /// Enclosure of sum_{d >= d_start} c_d[bi][ai] e^{-eps d} (d+shift)^{-t}
    /// where d_start = N+1-shift (clamped to 1).
    fn exc_series(&self, kit: &Kit, bi: usize, ai: usize, shift: usize) -> Result<Enclosure, PressureError> {
        let n = self.params.threshold();
        let d_start = (n + 1 - shift).max(1);
        let j0 = (d_start + shift) as u64;
        let main = if j0 == kit.main_j0 {
            kit.main
        } else {
            lerch_tail(kit.eps, kit.t, j0)?
        };
        let w = if shift == 1 { &kit.w1 } else { &kit.w2 };
        let g = self.gamma[bi][ai];
        let mut head = 0.0;
        for d in d_start..=self.horizon {
            head += (self.c[d - 1][bi][ai] - g) * w[d];
        }
        let sf = (kit.eps * shift as f64).exp();
        let err = if shift == 1 { kit.err1 } else { kit.err2 } * self.gamma_err * sf;
        let enc = Enclosure::point(head)
            .inflate(1e-12)
            .add(main.scale(g * sf))
            .add(Enclosure { lo: -err, hi: err });
        Ok(Enclosure {
            lo: enc.lo.max(0.0),
            hi: enc.hi,
        })
    }

    /// Full analytic evaluation of the series at (t, z) via the block
    /// decomposition: start block "alpha", a matrix geometric series over
    /// interior blocks, and a closing block carrying the trailing re-entry.
    fn lambda_total(&self, t: f64, z: f64) -> Result<Total, PressureError> {
        assert!(t >= 0.0, "lambda requires t >= 0");
        let eps = self.eps_of(t, z)?;
        let kit = self.kit(t, eps)?;
        let spec = self.spec;
        let m = spec.alphabet_size();
        let n = self.params.threshold();
        let nf = n as f64;
        let a = self.params.a();
        let (alpha, beta) = (self.cyl.alpha(), self.cyl.beta());
        let single = (-(t * a) - z).exp();
        let pref_int = (t * (nf.ln() - (nf - 1.0) * a)).exp();
        let pref_fin = (t * (nf.ln() - (nf - 2.0) * a)).exp();
        let allow = |s: u8| !(alpha == beta && s == alpha);
        let junction =
            |x: u8, y: u8| !spec.pair_allowed(x, y) && !(x == alpha && y == beta);

        // interior stretch matrix over essential letters
        let ne = self.ess.len();
        let mut bmat = vec![vec![Enclosure::zero(); ne]; ne];
        for bi in 0..ne {
            for ai in 0..ne {
                let mut free = 0.0;
                for d in 1..n {
                    free += self.raw[d - 1][bi][ai] * (-(t * a + z) * d as f64).exp();
                }
                bmat[bi][ai] = Enclosure::point(free)
                    .inflate(ROUNDING_SLACK)
                    .add(self.exc_series(&kit, bi, ai, 1)?.scale(pref_int));
            }
        }

        // closing block weight per start letter
        let mut fin = vec![Enclosure::zero(); m];
        for (bi, &b) in self.ess.iter().enumerate() {
            let mut acc = Enclosure::zero();
            for (ai, &a2) in self.ess.iter().enumerate() {
                if !allow(a2) {
                    continue;
                }
                let ext = spec.is_essential(alpha) && spec.pair_allowed(a2, alpha);
                let entry = if ext {
                    // depth runs one past the stretch thanks to the re-entry letter
                    let mut free = 0.0;
                    for d in 1..n.saturating_sub(1) {
                        free += self.raw[d - 1][bi][ai] * (-(t * a + z) * d as f64).exp();
                    }
                    Enclosure::point(free)
                        .inflate(ROUNDING_SLACK)
                        .add(self.exc_series(&kit, bi, ai, 2)?.scale(pref_fin))
                } else {
                    let mut free = 0.0;
                    for d in 1..n {
                        free += self.raw[d - 1][bi][ai] * (-(t * a + z) * d as f64).exp();
                    }
                    Enclosure::point(free)
                        .inflate(ROUNDING_SLACK)
                        .add(self.exc_series(&kit, bi, ai, 1)?.scale(pref_int))
                };
                acc = acc.add(entry);
            }
            fin[b as usize] = acc;
        }
        for s in 0..m as u8 {
            if !spec.is_essential(s) && allow(s) {
                fin[s as usize] = Enclosure::point(single);
            }
        }

        // transition over block start letters: end letter of the current
        // block composed with an admissible junction
        let mut xlo = vec![vec![0.0; m]; m];
        let mut xhi = vec![vec![0.0; m]; m];
        for b in 0..m as u8 {
            for b2 in 0..m as u8 {
                let mut e = Enclosure::zero();
                if let Some(bi) = self.eidx[b as usize] {
                    for (ai, &a2) in self.ess.iter().enumerate() {
                        if junction(a2, b2) {
                            e = e.add(bmat[bi][ai]);
                        }
                    }
                } else if junction(b, b2) {
                    e = Enclosure::point(single);
                }
                xlo[b as usize][b2 as usize] = e.lo;
                xhi[b as usize][b2 as usize] = e.hi;
            }
        }

        let flo: Vec<f64> = fin.iter().map(|e| e.lo).collect();
        let fhi: Vec<f64> = fin.iter().map(|e| e.hi).collect();
        let fmax = fhi.iter().cloned().fold(0.0, f64::max);
        let mut wlo = vec![0.0; m];
        let mut whi = vec![0.0; m];
        wlo[beta as usize] = single;
        whi[beta as usize] = single;

        // zero factors are skipped so an overflowed entry cannot turn into
        // NaN via inf * 0
        let vecmat = |w: &[f64], x: &Vec<Vec<f64>>| -> Vec<f64> {
            let mut out = vec![0.0; m];
            for b in 0..m {
                if w[b] == 0.0 {
                    continue;
                }
                for b2 in 0..m {
                    if x[b][b2] != 0.0 {
                        out[b2] += w[b] * x[b][b2];
                    }
                }
            }
            out
        };
        let dot = |w: &[f64], f: &[f64]| -> f64 { w.iter().zip(f).map(|(a, b)| a * b).sum() };

        // geometric remainder control: a power of the upper matrix with row
        // sums below 1
        let matmul = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            let mut out = vec![vec![0.0; m]; m];
            for i in 0..m {
                for k in 0..m {
                    if x[i][k] == 0.0 {
                        continue;
                    }
                    for j in 0..m {
                        if y[k][j] != 0.0 {
                            out[i][j] += x[i][k] * y[k][j];
                        }
                    }
                }
            }
            out
        };
        let row_max = |x: &Vec<Vec<f64>>| -> f64 {
            let r = x
                .iter()
                .map(|r| r.iter().sum::<f64>())
                .fold(0.0, f64::max);
            if r.is_nan() {
                f64::INFINITY
            } else {
                r
            }
        };
        let mut contraction = None;
        let mut p = xhi.clone();
        for k in 1..=64usize {
            let r = row_max(&p);
            if r < 0.999 {
                contraction = Some((k, r));
                break;
            }
            if !r.is_finite() {
                break;
            }
            p = matmul(&p, &xhi);
        }

        let lam1 = if alpha == beta { single } else { 0.0 };

        let Some((k0, r0)) = contraction else {
            // divergent matrix series: certified lower bound only
            let mut acc_lo = lam1 + dot(&wlo, &flo);
            for _ in 0..512 {
                wlo = vecmat(&wlo, &xlo);
                if wlo.iter().cloned().fold(0.0, f64::max) > 1e50 {
                    break;
                }
                acc_lo += dot(&wlo, &flo);
            }
            return Ok(Total {
                enc: Enclosure {
                    lo: acc_lo * (1.0 - ROUNDING_SLACK),
                    hi: f64::INFINITY,
                },
                converged: false,
            });
        };

        let mut acc_lo = dot(&wlo, &flo);
        let mut acc_hi = dot(&whi, &fhi);
        let mut k = 0usize;
        loop {
            k += 1;
            wlo = vecmat(&wlo, &xlo);
            whi = vecmat(&whi, &xhi);
            acc_lo += dot(&wlo, &flo);
            acc_hi += dot(&whi, &fhi);
            let l1: f64 = whi.iter().sum();
            if l1 * fmax < 1e-18 * (1.0 + acc_hi) || k > 200_000 {
                break;
            }
        }
        let mut rem = 0.0;
        let mut w = whi.clone();
        for _ in 0..k0 {
            w = vecmat(&w, &xhi);
            rem += w.iter().sum::<f64>();
        }
        rem = rem * fmax / (1.0 - r0);

        let enc = Enclosure {
            lo: lam1 + acc_lo,
            hi: lam1 + acc_hi + rem,
        }
        .inflate(ROUNDING_SLACK);
        Ok(Total {
            enc: Enclosure {
                lo: enc.lo.max(0.0),
                hi: enc.hi,
            },
            converged: true,
        })
    }

    /// Single-forbidden-transition fast path: exact transfer counts up to the
    /// truncation length, Perron-limit coefficients with a certified
    /// polylogarithm tail beyond it.
    fn lambda_grouped_impl(
        &self,
        t: f64,
        z: f64,
        max_len: usize,
    ) -> Result<LambdaValue, PressureError> {
        assert!(t >= 0.0, "lambda requires t >= 0");
        let defects = self.spec.forbidden_block_count();
        if defects != 1 {
            return Err(PressureError::NotSingleForbiddenBlock(defects));
        }
        let eps = self.eps_of(t, z)?;
        let n = self.params.threshold();
        let nf = n as f64;
        let a = self.params.a();
        let bi = self.eidx[self.cyl.beta() as usize].expect("beta essential when |Omega|=1");
        let ai = self.eidx[self.cyl.alpha() as usize].expect("alpha essential when |Omega|=1");
        let l = max_len.clamp(n, self.horizon);

        let mut head = 0.0;
        for nn in 1..n {
            head += self.raw[nn - 1][bi][ai] * (-(t * a + z) * nn as f64).exp();
        }
        let pref = (t * (nf.ln() - (nf - 1.0) * a)).exp();
        let g = self.gamma[bi][ai];
        let mut head2 = 0.0;
        for nn in n..=l {
            head2 += self.c[nn - 1][bi][ai] * (-eps * nn as f64).exp() * ((nn + 1) as f64).powf(-t);
        }
        let mut dev = self.gamma_err;
        for d in l + 1..=self.horizon {
            dev = dev.max((self.c[d - 1][bi][ai] - g).abs());
        }
        let lt = lerch_tail(eps, t, (l + 2) as u64)?;
        let sf = eps.exp();
        let tail = lt.scale(g * sf).add(Enclosure {
            lo: -dev * sf * lt.hi,
            hi: dev * sf * lt.hi,
        });
        let tail = Enclosure {
            lo: tail.lo.max(0.0),
            hi: tail.hi,
        };
        let enc = Enclosure::point(head)
            .add(Enclosure::point(head2).add(tail).scale(pref))
            .inflate(ROUNDING_SLACK);
        Ok(LambdaValue {
            lower: enc.lo,
            upper: enc.hi,
            truncation_len: l,
            tail_bound: pref * tail.hi,
            converged: true,
        })
    }
}

/// Direct evaluation: exact enumeration up to `max_len` plus a certified
/// analytic closure of the remainder.
pub fn lambda_direct(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    params: &PotentialParams,
    t: f64,
    z: f64,
    max_len: usize,
) -> Result<LambdaValue, PressureError> {
    lambda_direct_with_budget(spec, cylinder, params, t, z, max_len, DEFAULT_BUDGET)
}

pub fn lambda_direct_with_budget(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    params: &PotentialParams,
    t: f64,
    z: f64,
    max_len: usize,
    budget: u64,
) -> Result<LambdaValue, PressureError> {
    assert!(t >= 0.0, "lambda requires t >= 0");
    let ctx = Ctx::new(spec, cylinder, params)?;
    ctx.eps_of(t, z)?;
    let mut partial = 0.0f64;
    induced::for_each_return_word(spec, cylinder, max_len, budget, |u, profile| {
        let s = potential::birkhoff_sum_from_profile(params, profile);
        partial += (t * s - z * u.len() as f64).exp();
    })?;
    let total = ctx.lambda_total(t, z)?;
    let lower = (partial * (1.0 - ROUNDING_SLACK)).max(total.enc.lo);
    let upper = total.enc.hi;
    debug_assert!(
        partial <= upper * (1.0 + 1e-9) + 1e-12,
        "enumeration exceeded the analytic upper bound: {} > {}",
        partial,
        upper
    );
    Ok(LambdaValue {
        lower,
        upper,
        truncation_len: max_len,
        tail_bound: if upper.is_finite() {
            (upper - partial).max(0.0)
        } else {
            f64::INFINITY
        },
        converged: total.converged,
    })
}

/// Grouped evaluation for the single-forbidden-transition regime.
pub fn lambda_grouped(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    params: &PotentialParams,
    t: f64,
    z: f64,
    max_len: usize,
) -> Result<LambdaValue, PressureError> {
    let ctx = Ctx::new(spec, cylinder, params)?;
    ctx.lambda_grouped_impl(t, z, max_len)
}

fn find_t_c_ctx(ctx: &Ctx, tol: f64) -> Result<TcData, PressureError> {
    let xi = ctx.xi;
    let e = ctx.lambda_total(1.0 + 1e-9, xi)?;
    if !(e.enc.lo > 1.0) {
        return Err(PressureError::NoBracket);
    }
    let mut lo = 1.0 + 1e-9;
    let mut hi = 2.0;
    loop {
        let e = ctx.lambda_total(hi, xi)?;
        if e.converged && e.enc.hi < 1.0 {
            break;
        }
        if e.enc.lo > 1.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e6 {
                return Err(PressureError::NoBracket);
            }
        } else {
            // straddles already
            return Ok(TcData {
                t_c: hi,
                bracket: (lo, hi),
                residual: (1.0 - e.enc.lo).max(e.enc.hi - 1.0),
                xi,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let e = ctx.lambda_total(mid, xi)?;
        if e.enc.lo > 1.0 {
            lo = mid;
        } else if e.converged && e.enc.hi < 1.0 {
            hi = mid;
        } else {
            let residual = (1.0 - e.enc.lo).max(e.enc.hi - 1.0);
            return Ok(TcData {
                t_c: mid,
                bracket: (lo, hi),
                residual,
                xi,
            });
        }
        if hi - lo < (1e-15 * hi.max(1.0)).max(tol * 1e-7) {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    let e = ctx.lambda_total(mid, xi)?;
    Ok(TcData {
        t_c: mid,
        bracket: (lo, hi),
        residual: (e.enc.lo - 1.0).abs().max((e.enc.hi - 1.0).abs()),
        xi,
    })
}

/// Locates t_c > 1 with λ_{t_c, ξ} = 1 by certified bisection; the bracket
/// search doubles from just above 1.
pub fn find_t_c(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    params: &PotentialParams,
    tol: f64,
) -> Result<TcData, PressureError> {
    let ctx = Ctx::new(spec, cylinder, params)?;
    find_t_c_ctx(&ctx, tol)
}

fn pressure_point_ctx(ctx: &Ctx, t: f64, t_c: f64, tol: f64) -> Result<PressurePoint, PressureError> {
    assert!(t >= 0.0, "pressure requires t >= 0");
    if t >= t_c {
        return Ok(PressurePoint {
            t,
            pressure: ctx.xi,
            phase: Phase::Frozen,
            residual: 0.0,
            truncation_len: 0,
            tail_bound: 0.0,
        });
    }
    let mut zlo = ctx.xi;
    let mut zhi = (ctx.spec.alphabet_size() as f64).ln() + 1.0;
    for _ in 0..10 {
        let e = ctx.lambda_total(t, zhi)?;
        if e.converged && e.enc.hi < 1.0 {
            break;
        }
        zhi += 1.0;
    }
    let mut resid = f64::NAN;
    let mut width = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (zlo + zhi);
        let e = ctx.lambda_total(t, mid)?;
        if e.enc.lo > 1.0 {
            zlo = mid;
        } else if e.converged && e.enc.hi < 1.0 {
            zhi = mid;
        } else {
            zlo = mid;
            zhi = mid;
            resid = (1.0 - e.enc.lo).max(e.enc.hi - 1.0);
            width = e.enc.width();
            break;
        }
        if zhi - zlo < tol.max(1e-13) {
            break;
        }
    }
    let p = 0.5 * (zlo + zhi);
    if resid.is_nan() {
        let e = ctx.lambda_total(t, p)?;
        resid = (e.enc.lo - 1.0).abs().max((e.enc.hi - 1.0).abs());
        width = e.enc.width();
    }
    Ok(PressurePoint {
        t,
        pressure: p,
        phase: Phase::Analytic,
        residual: resid,
        truncation_len: ctx.horizon,
        tail_bound: width,
    })
}

/// P(t): ξ exactly in the frozen phase, otherwise the unique root z(t) > ξ of
/// λ_{t,z} = 1 by bisection.
pub fn pressure_at(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    params: &PotentialParams,
    t: f64,
    t_c: f64,
    tol: f64,
) -> Result<f64, PressureError> {
    let ctx = Ctx::new(spec, cylinder, params)?;
    Ok(pressure_point_ctx(&ctx, t, t_c, tol)?.pressure)
}

/// Full curve over a sorted nonnegative grid, with invariants enforced
/// before returning.
pub fn pressure_curve(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    params: &PotentialParams,
    t_grid: &[f64],
) -> Result<PressureCurve, PressureError> {
    assert!(
        t_grid.windows(2).all(|w| w[0] <= w[1]) && t_grid.iter().all(|&t| t >= 0.0),
        "grid must be sorted and nonnegative"
    );
    let ctx = Ctx::new(spec, cylinder, params)?;
    let tc = find_t_c_ctx(&ctx, DEFAULT_ROOT_TOL)?;
    let mut points = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        points.push(pressure_point_ctx(&ctx, t, tc.t_c, 1e-12)?);
    }
    let curve = PressureCurve {
        xi: ctx.xi,
        t_c: tc.t_c,
        bracket: tc.bracket,
        points,
    };
    validate_curve(&curve)?;
    Ok(curve)
}

fn validate_curve(curve: &PressureCurve) -> Result<(), PressureError> {
    let xi = curve.xi;
    for p in &curve.points {
        if p.pressure < xi - 1e-12 {
            return Err(PressureError::CurveInvariantViolated(format!(
                "P({}) = {} below xi = {}",
                p.t, p.pressure, xi
            )));
        }
        let frozen = p.phase == Phase::Frozen;
        if frozen != (p.t >= curve.t_c) {
            return Err(PressureError::CurveInvariantViolated(format!(
                "phase at t={} inconsistent with t_c={}",
                p.t, curve.t_c
            )));
        }
        if frozen && p.pressure != xi {
            return Err(PressureError::CurveInvariantViolated(format!(
                "frozen point at t={} has P != xi",
                p.t
            )));
        }
        if !frozen && !(p.pressure > xi) {
            return Err(PressureError::CurveInvariantViolated(format!(
                "analytic point at t={} has P <= xi",
                p.t
            )));
        }
    }
    for w in curve.points.windows(2) {
        if w[1].pressure > w[0].pressure + 1e-9 {
            return Err(PressureError::CurveInvariantViolated(format!(
                "P increases between t={} and t={}",
                w[0].t, w[1].t
            )));
        }
    }
    // convexity at grid resolution, on uniform spacing only
    for w in curve.points.windows(3) {
        let h1 = w[1].t - w[0].t;
        let h2 = w[2].t - w[1].t;
        if (h1 - h2).abs() < 1e-9 && h1 > 0.0 {
            let second = w[2].pressure - 2.0 * w[1].pressure + w[0].pressure;
            if second < -1e-9 {
                return Err(PressureError::CurveInvariantViolated(format!(
                    "second difference {} at t={} below -1e-9",
                    second, w[1].t
                )));
            }
        }
    }
    Ok(())
}

/// Two-sided bracket for λ_{t,ξ}: a single-excursion subfamily from below,
/// a free/excursion block over-count from above.
pub fn sandwich_check(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    params: &PotentialParams,
    t: f64,
) -> Result<SandwichBounds, PressureError> {
    assert!(t > 1.0, "sandwich bounds need t > 1");
    let ctx = Ctx::new(spec, cylinder, params)?;
    let n = params.threshold();
    let nf = n as f64;
    let a = params.a();
    let ne = ctx.ess.len();

    let window_hi = (n + 32).min(ctx.horizon);
    let mut c_min = f64::INFINITY;
    let mut c_max = 0.0f64;
    for d in 1..=ctx.horizon {
        for i in 0..ne {
            for j in 0..ne {
                let v = ctx.c[d - 1][i][j];
                c_max = c_max.max(v);
                if d >= n && d <= window_hi {
                    c_min = c_min.min(v);
                }
            }
        }
    }
    c_min *= 1.0 - 1e-6;
    c_max *= 1.0 + 1e-6;

    let zeta_n1 = lerch_tail(0.0, t, (n + 1) as u64)?;
    let lower = c_min * (t * (nf.ln() - (nf - 1.0) * a)).exp() * zeta_n1.lo;

    let value = lambda_direct(spec, cylinder, params, t, ctx.xi, 18)?;

    let qf = spec.alphabet_size() as f64 * (-(t * a) - ctx.xi).exp();
    let zeta_n = lerch_tail(0.0, t, n.max(1) as u64)?;
    let exc = (ne * ne) as f64
        * c_max
        * (t * (nf.ln() - (nf - 2.0) * a)).exp()
        * zeta_n.hi
        * (1.0 + 1e-12);
    let s = qf + exc;
    let upper = if s < 1.0 { s / (1.0 - s) } else { f64::INFINITY };

    if lower > value.upper * (1.0 + 1e-9) + 1e-15 {
        return Err(PressureError::BoundViolated(format!(
            "lower {} exceeds lambda upper {}",
            lower, value.upper
        )));
    }
    if value.lower > upper * (1.0 + 1e-9) {
        return Err(PressureError::BoundViolated(format!(
            "lambda lower {} exceeds upper bound {}",
            value.lower, upper
        )));
    }
    Ok(SandwichBounds {
        lower,
        value,
        upper,
    })
}

/// Enclosure of the integral of the potential against a Markov measure,
/// summed over depth-cylinders: exact where the depth resolves inside the
/// word, censored into [-log(1+1/depth), 0] where the whole word stays in
/// the language.
pub fn integral_phi(
    spec: &SftSpec,
    params: &PotentialParams,
    measure: &MarkovMeasure,
    depth: usize,
) -> Result<Enclosure, PressureError> {
    if depth < params.threshold() {
        return Err(PressureError::DepthTooSmall {
            depth,
            threshold: params.threshold(),
        });
    }
    assert_eq!(
        measure.dim(),
        spec.alphabet_size(),
        "measure must live on the ambient alphabet"
    );
    let m = spec.alphabet_size();
    let mut acc = Enclosure::zero();
    let mut word: Vec<u8> = Vec::with_capacity(depth);
    // DFS over the measure's support with running probability
    let mut stack: Vec<(u8, f64)> = Vec::new();
    for s in (0..m as u8).rev() {
        let p = measure.stationary[s as usize];
        if p > 0.0 {
            stack.push((s, p));
        }
    }
    let mut probs: Vec<f64> = Vec::with_capacity(depth);
    while let Some((s, p)) = stack.pop() {
        while word.len() >= probs.len() + 1 {
            word.pop();
        }
        word.push(s);
        probs.truncate(word.len() - 1);
        probs.push(p);
        if word.len() == depth {
            let enc = potential::phi(params, spec.delta(&word))?;
            acc = acc.add(enc.scale(p));
            word.pop();
            probs.pop();
            continue;
        }
        // placeholder so children know their prefix length
        probs.push(f64::NAN);
        probs.pop();
        let prev = s;
        let mut pushed = false;
        for s2 in (0..m as u8).rev() {
            let q = p * measure.stochastic[prev as usize][s2 as usize];
            if q > 0.0 {
                stack.push((s2, q));
                pushed = true;
            }
        }
        if !pushed {
            word.pop();
            probs.pop();
        }
    }
    Ok(acc.inflate(ROUNDING_SLACK))
}

const PROBE_DEPTH: usize = 12;
const PROBE_TOL: f64 = 1e-6;

/// Checks h_mu + t * int(phi) <= P(t) for each supplied invariant Markov
/// measure, using the upper end of the integral enclosure.
pub fn variational_probe(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    params: &PotentialParams,
    t: f64,
    measures: &[MarkovMeasure],
) -> Result<VariationalReport, PressureError> {
    let ctx = Ctx::new(spec, cylinder, params)?;
    let tc = find_t_c_ctx(&ctx, DEFAULT_ROOT_TOL)?;
    let point = pressure_point_ctx(&ctx, t, tc.t_c, 1e-12)?;
    let pressure = point.pressure;
    let mut entries = Vec::with_capacity(measures.len());
    for (index, mu) in measures.iter().enumerate() {
        let h = mu.entropy();
        let integral = integral_phi(spec, params, mu, PROBE_DEPTH)?;
        let lhs_upper = h + t * integral.hi;
        if lhs_upper > pressure + PROBE_TOL {
            return Err(PressureError::ViolationFound {
                index,
                lhs: lhs_upper,
                pressure,
            });
        }
        entries.push(ProbeEntry {
            entropy: h,
            integral,
            lhs_upper,
            margin: pressure - lhs_upper,
        });
    }
    Ok(VariationalReport {
        t,
        pressure,
        entries,
    })
}

/// Partial renewal sums at t=0: sum over return words of m^{-n} never
/// exceeds 1 and converges to it.
pub fn renewal_partial_sums(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    max_len: usize,
) -> BTreeMap<usize, f64> {
    let m = spec.alphabet_size() as f64;
    let mut out = BTreeMap::new();
    let mut acc = 0.0;
    for n in 1..=max_len {
        acc += induced::transfer_count(spec, cylinder, n) as f64 * m.powf(-(n as f64));
        out.insert(n, acc);
    }
    out
}
