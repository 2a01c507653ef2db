//! Perron-Frobenius eigendata, subshift entropy and the Parry measure.

use thiserror::Error;

use crate::sft::{SftError, SftSpec};

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("power iteration did not reach residual {tol} after {max_iter} iterations (residual {residual})")]
    NoConvergence {
        tol: f64,
        max_iter: usize,
        residual: f64,
    },
    #[error(transparent)]
    Sft(#[from] SftError),
}

pub const DEFAULT_TOL: f64 = 1e-13;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Dominant eigendata of the essentialized transition matrix.
///
/// Vectors are indexed by the essential vertices of the spec, in ascending
/// vertex order. `right` has Euclidean norm 1; `left` is scaled so that
/// `<right, left> = 1`. `eta_lower`/`eta_upper` are Collatz-Wielandt
/// bounds computed from the final positive iterate.
#[derive(Debug, Clone)]
pub struct PerronData {
    pub eta: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
    pub residual: f64,
    pub eta_lower: f64,
    pub eta_upper: f64,
}

/// Power iteration on T and T^t over the essential subgraph.
pub fn perron_data(spec: &SftSpec, tol: f64, max_iter: usize) -> Result<PerronData, SpectralError> {
    spec.mixing_index(spec.default_mixing_cap())?;
    let verts = spec.essential_vertices();
    let d = verts.len();
    let t: Vec<Vec<f64>> = verts
        .iter()
        .map(|&i| {
            verts
                .iter()
                .map(|&j| spec.transition()[i][j] as f64)
                .collect()
        })
        .collect();

    let apply = |m: &[Vec<f64>], v: &[f64], transpose: bool| -> Vec<f64> {
        let mut out = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                if transpose {
                    out[j] += m[i][j] * v[i];
                } else {
                    out[i] += m[i][j] * v[j];
                }
            }
        }
        out
    };

    let norm2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();

    // deterministic all-ones start for reproducible output
    let mut u = vec![1.0; d];
    let mut v = vec![1.0; d];
    let mut eta = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let tu = apply(&t, &u, false);
        eta = norm2(&tu);
        let u_next: Vec<f64> = tu.iter().map(|x| x / eta).collect();
        let tv = apply(&t, &v, true);
        let vnorm = norm2(&tv);
        let v_next: Vec<f64> = tv.iter().map(|x| x / vnorm).collect();

        let tu2 = apply(&t, &u_next, false);
        let tv2 = apply(&t, &v_next, true);
        let res_u = tu2
            .iter()
            .zip(&u_next)
            .map(|(a, b)| (a - eta * b).abs())
            .fold(0.0f64, f64::max);
        let res_v = tv2
            .iter()
            .zip(&v_next)
            .map(|(a, b)| (a - eta * b).abs())
            .fold(0.0f64, f64::max);
        residual = res_u.max(res_v);
        u = u_next;
        v = v_next;
        if residual < tol {
            break;
        }
    }
    if !(residual < tol) {
        return Err(SpectralError::NoConvergence {
            tol,
            max_iter,
            residual,
        });
    }

    // Collatz-Wielandt bounds from the positive right iterate
    let tu = apply(&t, &u, false);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 0..d {
        let r = tu[i] / u[i];
        lo = lo.min(r);
        hi = hi.max(r);
    }

    // scale v so <u, v> = 1
    let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    let v: Vec<f64> = v.iter().map(|x| x / dot).collect();

    Ok(PerronData {
        eta,
        right: u,
        left: v,
        residual,
        eta_lower: lo,
        eta_upper: hi,
    })
}

pub fn perron_data_default(spec: &SftSpec) -> Result<PerronData, SpectralError> {
    perron_data(spec, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Subshift entropy xi = log eta.
pub fn entropy(spec: &SftSpec) -> Result<f64, SpectralError> {
    Ok(perron_data_default(spec)?.eta.ln())
}

/// A Markov measure on the ambient full shift: row-stochastic matrix plus a
/// stationary probability vector.
#[derive(Debug, Clone)]
pub struct MarkovMeasure {
    pub stochastic: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    #[error("row {0} of the stochastic matrix sums to {1}, not 1")]
    RowNotStochastic(usize, f64),
    #[error("stationary vector is not a fixed probability vector (defect {0})")]
    NotStationary(f64),
}

impl MarkovMeasure {
    pub fn new(stochastic: Vec<Vec<f64>>, stationary: Vec<f64>) -> Result<Self, MeasureError> {
        let m = MarkovMeasure {
            stochastic,
            stationary,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.stationary.len()
    }

    fn validate(&self) -> Result<(), MeasureError> {
        let tol = 1e-10;
        for (i, row) in self.stochastic.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(MeasureError::RowNotStochastic(i, s));
            }
        }
        let total: f64 = self.stationary.iter().sum();
        if (total - 1.0).abs() > tol || self.stationary.iter().any(|&p| p < -tol) {
            return Err(MeasureError::NotStationary((total - 1.0).abs()));
        }
        let mut defect = 0.0f64;
        for j in 0..self.dim() {
            let pj: f64 = (0..self.dim())
                .map(|i| self.stationary[i] * self.stochastic[i][j])
                .sum();
            defect = defect.max((pj - self.stationary[j]).abs());
        }
        if defect > tol {
            return Err(MeasureError::NotStationary(defect));
        }
        Ok(())
    }

    /// Kolmogorov entropy of the Markov measure, with 0 log 0 := 0.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for i in 0..self.dim() {
            if self.stationary[i] <= 0.0 {
                continue;
            }
            for j in 0..self.dim() {
                let p = self.stochastic[i][j];
                if p > 0.0 {
                    h -= self.stationary[i] * p * p.ln();
                }
            }
        }
        h
    }

    /// mu[w] = pi_{w0} * prod P_{w_i w_{i+1}}; 0 for the empty word's
    /// complementary convention is not needed (word must be nonempty).
    pub fn cylinder_measure(&self, word: &[u8]) -> f64 {
        assert!(!word.is_empty(), "cylinder_measure requires a nonempty word");
        let mut p = self.stationary[word[0] as usize];
        for pair in word.windows(2) {
            p *= self.stochastic[pair[0] as usize][pair[1] as usize];
        }
        p
    }
}

/// The maximal-entropy Markov measure of the subshift, built from eigendata:
/// P_ij = T_ij u_j / (eta u_i), pi_i = u_i v_i. Non-essential vertices carry
/// no mass; their rows are uniform so the matrix stays stochastic.
pub fn parry_measure(spec: &SftSpec) -> Result<MarkovMeasure, SpectralError> {
    let pd = perron_data_default(spec)?;
    let m = spec.alphabet_size();
    let verts = spec.essential_vertices();
    let mut stochastic = vec![vec![1.0 / m as f64; m]; m];
    let mut stationary = vec![0.0; m];
    for (a, &i) in verts.iter().enumerate() {
        let mut row = vec![0.0; m];
        for (b, &j) in verts.iter().enumerate() {
            if spec.transition()[i][j] == 1 {
                row[j] = pd.right[b] / (pd.eta * pd.right[a]);
            }
        }
        // renormalize away the last bits of iteration error
        let s: f64 = row.iter().sum();
        for x in &mut row {
            *x /= s;
        }
        stochastic[i] = row;
        stationary[i] = pd.right[a] * pd.left[a];
    }
    let total: f64 = stationary.iter().sum();
    for x in &mut stationary {
        *x /= total;
    }
    Ok(MarkovMeasure {
        stochastic,
        stationary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::Word;

    fn golden_mean() -> SftSpec {
        SftSpec::from_forbidden_blocks(2, &[Word(vec![1, 1])]).unwrap()
    }

    fn full_shift(m: usize) -> SftSpec {
        SftSpec::from_matrix(m, vec![vec![1; m]; m]).unwrap()
    }

    #[test]
    fn full_shift_eigenvalue() {
        let pd = perron_data_default(&full_shift(2)).unwrap();
        assert!((pd.eta - 2.0).abs() < 1e-12);
        assert!((pd.right[0] - pd.right[1]).abs() < 1e-12);
    }

    #[test]
    fn golden_mean_eigenvalue() {
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        let pd = perron_data_default(&golden_mean()).unwrap();
        assert!((pd.eta - phi).abs() < 1e-10);
        assert!(pd.eta_lower <= phi + 1e-12 && phi <= pd.eta_upper + 1e-12);
        assert!(pd.eta_upper - pd.eta_lower < 1e-10);
    }

    #[test]
    fn degenerate_single_vertex() {
        let s = SftSpec::from_matrix(2, vec![vec![1, 0], vec![0, 0]]).unwrap();
        let pd = perron_data_default(&s).unwrap();
        assert!((pd.eta - 1.0).abs() < 1e-14);
        assert!(entropy(&s).unwrap().abs() < 1e-14);
    }

    #[test]
    fn entropy_values() {
        for m in 2..=4 {
            let h = entropy(&full_shift(m)).unwrap();
            assert!((h - (m as f64).ln()).abs() < 1e-10);
        }
        let h = entropy(&golden_mean()).unwrap();
        assert!((h - ((1.0 + 5.0f64.sqrt()) / 2.0).ln()).abs() < 1e-8);
    }

    #[test]
    fn parry_measure_golden_mean() {
        let mu = parry_measure(&golden_mean()).unwrap();
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        assert!((mu.stochastic[0][0] - 1.0 / phi).abs() < 1e-10);
        assert!((mu.stochastic[0][1] - (1.0 - 1.0 / phi)).abs() < 1e-10);
        assert!((mu.stochastic[1][0] - 1.0).abs() < 1e-12);
        assert!((mu.stationary[0] - 0.7236067977).abs() < 1e-9);
        // independent oracle: solve pi P = pi directly for the 2x2 chain
        let p01 = mu.stochastic[0][1];
        let pi0 = 1.0 / (1.0 + p01);
        assert!((mu.stationary[0] - pi0).abs() < 1e-10);
    }

    #[test]
    fn parry_entropy_equals_subshift_entropy() {
        for spec in [golden_mean(), full_shift(2), full_shift(3)] {
            let mu = parry_measure(&spec).unwrap();
            assert!((mu.entropy() - entropy(&spec).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn deterministic_chain_has_zero_entropy() {
        let mu = MarkovMeasure::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(mu.entropy(), 0.0);
    }

    #[test]
    fn cylinder_measures() {
        let bern = MarkovMeasure::new(
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert!((bern.cylinder_measure(&[0, 1]) - 0.25).abs() < 1e-15);
        let parry = parry_measure(&golden_mean()).unwrap();
        assert_eq!(parry.cylinder_measure(&[1, 1]), 0.0);
        assert!((parry.cylinder_measure(&[0]) - 0.7236067977).abs() < 1e-9);
    }

    #[test]
    fn kolmogorov_consistency_random_words() {
        let parry = parry_measure(&golden_mean()).unwrap();
        // deterministic pseudo-random walk over words
        let mut state = 0x243f6a8885a308d3u64;
        for _ in 0..100 {
            let mut w = Vec::new();
            for _ in 0..(1 + (state % 7) as usize) {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                w.push(((state >> 33) % 2) as u8);
            }
            let lhs: f64 = (0..2u8)
                .map(|j| {
                    let mut wj = w.clone();
                    wj.push(j);
                    parry.cylinder_measure(&wj)
                })
                .sum();
            assert!((lhs - parry.cylinder_measure(&w)).abs() < 1e-12);
        }
    }

    #[test]
    fn power_entries_sandwiched_by_perron_growth() {
        // quantitative two-sided growth of matrix powers on the golden mean
        let spec = golden_mean();
        let pd = perron_data_default(&spec).unwrap();
        let mix = spec.mixing_index(8).unwrap();
        let mut c_min = f64::INFINITY;
        let mut c_max = 0.0f64;
        let mut pow = vec![vec![1.0, 1.0], vec![1.0, 0.0]];
        let t = pow.clone();
        let mut n = 1;
        // burn-in window to fix constants
        while n < mix + 8 {
            pow = mat_mul(&pow, &t);
            n += 1;
        }
        for i in 0..2 {
            for j in 0..2 {
                let c = pow[i][j] / pd.eta.powi(n as i32);
                c_min = c_min.min(c / 2.0);
                c_max = c_max.max(c * 2.0);
            }
        }
        while n <= 40 {
            for i in 0..2 {
                for j in 0..2 {
                    let scaled = pow[i][j] / pd.eta.powi(n as i32);
                    assert!(c_min <= scaled && scaled <= c_max, "n={}", n);
                }
            }
            pow = mat_mul(&pow, &t);
            n += 1;
        }
    }

    fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let d = a.len();
        let mut out = vec![vec![0.0; d]; d];
        for i in 0..d {
            for k in 0..d {
                for j in 0..d {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    #[test]
    fn characteristic_polynomial_oracle() {
        // eta from power iteration matches the dominant root of det(T - xI)
        // for small matrices, found by bisection on the polynomial
        let spec = SftSpec::from_matrix(
            3,
            vec![vec![1, 1, 1], vec![1, 0, 1], vec![1, 1, 0]],
        )
        .unwrap();
        let pd = perron_data_default(&spec).unwrap();
        // det(T - xI) = -x^3 + x^2 + 3x + 1 for this matrix
        let p = |x: f64| -x * x * x + x * x + 3.0 * x + 1.0;
        let (mut lo, mut hi) = (1.0, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((pd.eta - lo).abs() < 1e-8);
    }
}
