//! Recovering a probability vector, up to permutation, from its power sums
//! `p_k = Σ Pᵢᵏ`: Newton's identities turn the power sums into elementary
//! symmetric polynomials, the elementary symmetric polynomials into a monic
//! polynomial whose roots are the entries, and a simultaneous root
//! iteration extracts the root multiset.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::ProbVector;

const MAX_ITERATIONS: u32 = 500;
const TIGHT_STEP: f64 = 1e-12;
// A multiplicity-μ root stalls the simultaneous iteration at a cluster of
// radius ~eps^{1/μ}; movement below this bound is a stall, not divergence.
const STALL_STEP: f64 = 5e-2;
const CLUSTER_GAP: f64 = 1e-4;

/// Power sums `p_1,…,p_K` of a probability vector, `p_k = Σ Pᵢᵏ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSums {
    pub values: Vec<f64>,
}

impl PowerSums {
    /// Validates `p₁ ≈ 1` and strict positive monotone decay.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InconsistentPowerSums("no power sums given".into()));
        }
        if (values[0] - 1.0).abs() > 1e-8 {
            return Err(Error::InconsistentPowerSums(format!(
                "p_1 = {} but a probability vector sums to 1",
                values[0]
            )));
        }
        for w in values.windows(2) {
            if !w[1].is_finite() || w[1] <= 0.0 || w[1] > w[0] + 1e-12 {
                return Err(Error::InconsistentPowerSums(
                    "power sums must be positive and non-increasing".into(),
                ));
            }
        }
        Ok(Self { values })
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// `p_k` with 1-based `k`.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k - 1]
    }
}

/// Exact power sums of a vector; agrees with the beta function at integer
/// arguments.
pub fn power_sums(p: &ProbVector, k_max: usize) -> PowerSums {
    assert!(k_max >= 1);
    let values = (1..=k_max)
        .map(|k| {
            let mut terms: Vec<f64> = p.weights().iter().map(|w| w.powi(k as i32)).collect();
            terms.sort_by(|a, b| a.total_cmp(b));
            terms.iter().sum()
        })
        .collect();
    PowerSums { values }
}

/// Newton's identities: `e_k = (1/k) Σ_{i=1}^{k} (−1)^{i−1} e_{k−i} p_i`
/// with `e_0 = 1`.  Returns `e_1,…,e_m`.
///
/// The alternating recursion cancels heavily and its rounding error gets
/// amplified by the root conditioning downstream, so it runs in exact
/// rational arithmetic and rounds once at the end.
pub fn newton_to_elementary(ps: &PowerSums, m: usize) -> Result<Vec<f64>> {
    use num_rational::BigRational;
    use num_traits::{FromPrimitive, ToPrimitive};

    if ps.order() < m {
        return Err(Error::Precondition(format!(
            "need at least {m} power sums, got {}",
            ps.order()
        )));
    }
    let p: Vec<BigRational> = (1..=m)
        .map(|k| BigRational::from_float(ps.value(k)).expect("finite power sum"))
        .collect();
    let mut e = vec![BigRational::from_integer(0.into()); m + 1];
    e[0] = BigRational::from_integer(1.into());
    for k in 1..=m {
        let mut acc = BigRational::from_integer(0.into());
        for i in 1..=k {
            let term = &e[k - i] * &p[i - 1];
            if i % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        e[k] = acc / BigRational::from_usize(k).expect("small k");
    }
    Ok(e[1..].iter().map(|r| r.to_f64().expect("finite")).collect())
}

/// Coefficients of `Π (x − Pᵢ) = Σ (−1)^k e_k x^{m−k}` in ascending degree.
pub fn monic_from_elementary(e: &[f64]) -> Vec<f64> {
    let m = e.len();
    let mut coeffs = vec![0.0; m + 1];
    coeffs[m] = 1.0;
    for (k, ek) in e.iter().enumerate() {
        let sign = if (k + 1) % 2 == 1 { -1.0 } else { 1.0 };
        coeffs[m - (k + 1)] = sign * ek;
    }
    coeffs
}

fn eval_poly(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// All roots of a monic real polynomial by simultaneous iteration with
/// Ehrlich–Aberth corrections, started from perturbed points on a circle
/// inside `(0, 1)`.  Returns the iterates, whether they converged tightly,
/// and the final movement.
fn simultaneous_roots(coeffs: &[f64]) -> Result<(Vec<Complex64>, bool, f64)> {
    let m = coeffs.len() - 1;
    if m == 0 {
        return Ok((Vec::new(), true, 0.0));
    }
    let deriv = derivative(coeffs);
    let mut z: Vec<Complex64> = (0..m)
        .map(|j| {
            let angle = 2.0 * std::f64::consts::PI * (j as f64 + 0.37) / m as f64;
            Complex64::new(0.5, 0.0) + Complex64::from_polar(0.45, angle)
        })
        .collect();
    let mut last_step = f64::INFINITY;
    let mut plateau = 0u32;
    for _ in 0..MAX_ITERATIONS {
        let mut step: f64 = 0.0;
        for j in 0..m {
            let fz = eval_poly(coeffs, z[j]);
            let dz = eval_poly(&deriv, z[j]);
            if dz.norm() < 1e-290 {
                // critical point: nudge deterministically and keep going
                z[j] += Complex64::new(1e-9 * (j + 1) as f64, 1e-9);
                step = f64::INFINITY;
                continue;
            }
            let newton = fz / dz;
            let mut repulsion = Complex64::new(0.0, 0.0);
            let mut coincident = false;
            for k in 0..m {
                if k == j {
                    continue;
                }
                let diff = z[j] - z[k];
                if diff.norm() < 1e-290 {
                    coincident = true;
                    break;
                }
                repulsion += diff.inv();
            }
            if coincident {
                z[j] += Complex64::new(1e-9 * (j + 1) as f64, 1e-9);
                step = f64::INFINITY;
                continue;
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulsion;
            let correction = if denom.norm() < 1e-290 {
                newton
            } else {
                newton / denom
            };
            z[j] -= correction;
            step = step.max(correction.norm());
        }
        last_step = step;
        if step < TIGHT_STEP {
            return Ok((z, true, step));
        }
        // mildly ill-conditioned roots jitter at their attainable accuracy
        // without ever crossing the tight gate; a long plateau under 1e-7
        // is convergence, while multiple-root stalls sit far above it
        plateau = if step < 1e-7 { plateau + 1 } else { 0 };
        if plateau >= 50 {
            return Ok((z, true, step));
        }
    }
    if last_step < STALL_STEP {
        Ok((z, false, last_step))
    } else {
        Err(Error::NoConvergence {
            iterations: MAX_ITERATIONS,
        })
    }
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

// Compensated Horner evaluation: roughly twice the working precision.
fn comp_horner(coeffs: &[f64], x: f64) -> f64 {
    let mut s = *coeffs.last().expect("nonempty");
    let mut c = 0.0;
    for &coeff in coeffs.iter().rev().skip(1) {
        let (p, pi) = two_prod(s, x);
        let (t, sigma) = two_sum(p, coeff);
        s = t;
        c = c * x + (pi + sigma);
    }
    s + c
}

fn horner_real(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

// Newton polish in real arithmetic with compensated evaluation, pushing a
// simple real root from its iteration plateau down to the rounding floor.
// Rejected (iterate returned unchanged) when the root is not essentially
// real or the correction is not a small refinement.
fn polish_real_root(coeffs: &[f64], deriv: &[f64], z: Complex64) -> Complex64 {
    if z.im.abs() > 1e-6 {
        return z;
    }
    let mut r = z.re;
    for _ in 0..6 {
        let df = horner_real(deriv, r);
        if df == 0.0 {
            return z;
        }
        let delta = comp_horner(coeffs, r) / df;
        if !delta.is_finite() || delta.abs() > 1e-6 {
            return z;
        }
        r -= delta;
        if delta.abs() <= 1e-17 * r.abs() {
            break;
        }
    }
    Complex64::new(r, 0.0)
}

// Newton refinement of a multiplicity-mu cluster center: the repeated root
// is a simple root of the (mu−1)-th derivative, where Newton is stable.
fn refine_cluster_center(coeffs: &[f64], mean: Complex64, mu: usize, radius: f64) -> Complex64 {
    let mut g = coeffs.to_vec();
    for _ in 1..mu {
        g = derivative(&g);
    }
    let g_prime = derivative(&g);
    let mut z = mean;
    for _ in 0..100 {
        let denom = eval_poly(&g_prime, z);
        if denom.norm() < 1e-290 {
            return mean;
        }
        let delta = eval_poly(&g, z) / denom;
        z -= delta;
        if delta.norm() < 1e-15 {
            break;
        }
    }
    // reject a refinement that escaped the cluster
    if (z - mean).norm() <= radius.max(CLUSTER_GAP) {
        z
    } else {
        mean
    }
}

// Chains iterates closer than `gap` into clusters and replaces each cluster
// of size μ ≥ 2 by its refined center (multiplicity preserved).
fn cluster_at(coeffs: &[f64], roots: &[Complex64], gap: f64) -> (Vec<Complex64>, bool) {
    let mut sorted = roots.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut clustered = false;
    let mut out = Vec::with_capacity(sorted.len());
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && (sorted[end] - sorted[end - 1]).norm() < gap {
            end += 1;
        }
        if end - start > 1 {
            clustered = true;
            let mu = end - start;
            let mean = sorted[start..end].iter().sum::<Complex64>() / mu as f64;
            let radius = sorted[start..end]
                .iter()
                .map(|r| (r - mean).norm())
                .fold(gap, f64::max);
            let center = refine_cluster_center(coeffs, mean, mu, 2.0 * radius);
            out.extend(std::iter::repeat_n(center, mu));
        } else {
            out.push(sorted[start]);
        }
        start = end;
    }
    (out, clustered)
}

fn validate_roots(roots: &[Complex64], imag_tol: f64, sum_tol: f64) -> Result<Vec<f64>> {
    let mut entries = Vec::with_capacity(roots.len());
    for r in roots {
        if r.im.abs() > imag_tol {
            return Err(Error::InconsistentPowerSums(format!(
                "non-real root {} + {}i",
                r.re, r.im
            )));
        }
        if r.re <= 0.0 {
            return Err(Error::InconsistentPowerSums(format!("non-positive root {}", r.re)));
        }
        entries.push(r.re);
    }
    let total: f64 = entries.iter().sum();
    if (total - 1.0).abs() > sum_tol {
        return Err(Error::InconsistentPowerSums(format!(
            "roots sum to {total}, not 1"
        )));
    }
    entries.sort_by(|a, b| b.total_cmp(a));
    Ok(entries)
}

// A recovered multiset must explain the data: its own power sums have to
// reproduce every given p_k.  A faithful recovery reproduces them to
// rounding even when the roots themselves are ill-conditioned, while a
// wrong merge of two distinct roots a gap g apart shifts the sums by ~g².
fn reproduces(entries: &[f64], ps: &PowerSums) -> bool {
    (1..=ps.order()).all(|k| {
        let mut terms: Vec<f64> = entries.iter().map(|w| w.powi(k as i32)).collect();
        terms.sort_by(|a, b| a.total_cmp(b));
        (terms.iter().sum::<f64>() - ps.value(k)).abs() <= 1e-8
    })
}

/// Recovers the probability vector with `m` entries whose power sums are
/// `ps`, sorted descending.
///
/// Coefficient rounding splits a multiplicity-μ root into a ring of simple
/// roots of radius ~eps^{1/μ}, so merge hypotheses are tried from the
/// tightest merge radius up; the first candidate whose entries are real,
/// positive, sum to 1, and reproduce the given power sums wins.  Power sums
/// that no such multiset explains are reported as inconsistent.
pub fn recover_vector(ps: &PowerSums, m: usize) -> Result<ProbVector> {
    if m == 0 {
        return Err(Error::Precondition("alphabet size must be at least 1".into()));
    }
    let e = newton_to_elementary(ps, m)?;
    let coeffs = monic_from_elementary(&e);
    let (mut roots, tight, last_step) = simultaneous_roots(&coeffs)?;
    let deriv = derivative(&coeffs);
    for z in &mut roots {
        *z = polish_real_root(&coeffs, &deriv, *z);
    }

    let mut first_failure: Option<Error> = None;
    let record = |err: Error, first: &mut Option<Error>| {
        if first.is_none() {
            *first = Some(err);
        }
    };

    if tight {
        // plateau finishes carry their attainable accuracy in `last_step`
        let imag_tol = 1e-8f64.max((50.0 * last_step).min(1e-5));
        let sum_tol = 1e-8f64.max((4.0 * m as f64 * last_step).min(1e-5));
        match validate_roots(&roots, imag_tol, sum_tol) {
            Ok(entries) if reproduces(&entries, ps) => return ProbVector::new(entries),
            Ok(_) => record(
                Error::InconsistentPowerSums("roots do not reproduce the power sums".into()),
                &mut first_failure,
            ),
            Err(err) => record(err, &mut first_failure),
        }
    }

    for gap in [CLUSTER_GAP, 1e-3, 5e-3, 2e-2] {
        let (candidate, clustered) = cluster_at(&coeffs, &roots, gap);
        if !clustered {
            continue;
        }
        match validate_roots(&candidate, 1e-6, 1e-6) {
            Ok(entries) if reproduces(&entries, ps) => return ProbVector::new(entries),
            Ok(_) => record(
                Error::InconsistentPowerSums("roots do not reproduce the power sums".into()),
                &mut first_failure,
            ),
            Err(err) => record(err, &mut first_failure),
        }
    }

    Err(first_failure.unwrap_or(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
    }))
}

/// True when the two vectors are the same multiset within `tol`
/// componentwise after sorting.
pub fn permutation_equivalent(p: &ProbVector, q: &ProbVector, tol: f64) -> bool {
    if p.len() != q.len() {
        return false;
    }
    p.sorted_descending()
        .iter()
        .zip(q.sorted_descending())
        .all(|(a, b)| (a - b).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(w: &[f64]) -> ProbVector {
        ProbVector::new(w.to_vec()).unwrap()
    }

    #[test]
    fn power_sum_values() {
        let ps = power_sums(&pv(&[1.0 / 3.0; 3]), 2);
        assert!((ps.value(1) - 1.0).abs() < 1e-12);
        assert!((ps.value(2) - 1.0 / 3.0).abs() < 1e-12);
        let ps = power_sums(&pv(&[0.75, 0.25]), 2);
        assert!((ps.value(2) - 0.625).abs() < 1e-12);
    }

    #[test]
    fn power_sums_match_beta_at_integers() {
        let p = pv(&[0.5, 0.3, 0.2]);
        let ps = power_sums(&p, 6);
        for k in 1..=6 {
            let b = crate::beta::beta_closed(&p, k as f64);
            assert!((ps.value(k) - b).abs() < 1e-12);
        }
    }

    #[test]
    fn power_sums_validation() {
        assert!(PowerSums::new(vec![]).is_err());
        assert!(PowerSums::new(vec![0.9]).is_err());
        assert!(PowerSums::new(vec![1.0, 1.2]).is_err());
        assert!(PowerSums::new(vec![1.0, -0.5]).is_err());
        assert!(PowerSums::new(vec![1.0, 0.625]).is_ok());
    }

    #[test]
    fn newton_small_cases() {
        let ps = PowerSums::new(vec![1.0, 0.625]).unwrap();
        let e = newton_to_elementary(&ps, 2).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!((e[1] - 3.0 / 16.0).abs() < 1e-12);

        let uniform = power_sums(&pv(&[0.5, 0.5]), 2);
        let e = newton_to_elementary(&uniform, 2).unwrap();
        assert!((e[1] - 0.25).abs() < 1e-12);

        let one = power_sums(&pv(&[1.0]), 1);
        let e = newton_to_elementary(&one, 1).unwrap();
        assert_eq!(e.len(), 1);
        assert!((e[0] - 1.0).abs() < 1e-12);

        assert!(newton_to_elementary(&one, 2).is_err());
    }

    // direct expansion of Π (x − Pᵢ), the coefficient oracle
    fn expand_from_roots(roots: &[f64]) -> Vec<f64> {
        let mut coeffs = vec![1.0];
        for &r in roots {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            coeffs = next;
        }
        coeffs
    }

    #[test]
    fn newton_coefficients_match_direct_expansion() {
        let p = pv(&[0.4, 0.3, 0.2, 0.1]);
        let ps = power_sums(&p, 4);
        let e = newton_to_elementary(&ps, 4).unwrap();
        let got = monic_from_elementary(&e);
        let expect = expand_from_roots(p.weights());
        for (g, x) in got.iter().zip(&expect) {
            assert!((g - x).abs() < 1e-10, "{got:?} vs {expect:?}");
        }
    }

    #[test]
    fn recover_quadratic() {
        let ps = PowerSums::new(vec![1.0, 0.625]).unwrap();
        let v = recover_vector(&ps, 2).unwrap();
        assert!((v.weights()[0] - 0.75).abs() < 1e-10);
        assert!((v.weights()[1] - 0.25).abs() < 1e-10);
    }

    #[test]
    fn recover_uniform_repeated_roots() {
        let p = pv(&[0.25; 4]);
        let ps = power_sums(&p, 4);
        let v = recover_vector(&ps, 4).unwrap();
        for wgt in v.weights() {
            assert!((wgt - 0.25).abs() < 1e-6, "{:?}", v.weights());
        }
    }

    #[test]
    fn recover_single_entry() {
        let ps = PowerSums::new(vec![1.0]).unwrap();
        let v = recover_vector(&ps, 1).unwrap();
        assert_eq!(v.weights(), &[1.0]);
    }

    #[test]
    fn recover_round_trip_m8() {
        let p = pv(&[0.30, 0.22, 0.15, 0.12, 0.09, 0.06, 0.04, 0.02]);
        let ps = power_sums(&p, 8);
        let v = recover_vector(&ps, 8).unwrap();
        let sorted = p.sorted_descending();
        for (got, want) in v.weights().iter().zip(&sorted) {
            assert!((got - want).abs() < 1e-8);
        }
    }

    #[test]
    fn recover_rejects_garbage() {
        // monotone positive power sums that belong to no positive vector:
        // the implied cubic has a negative root
        let ps = PowerSums::new(vec![1.0, 0.99, 0.2]).unwrap();
        assert!(matches!(
            recover_vector(&ps, 3),
            Err(Error::InconsistentPowerSums(_)) | Err(Error::NoConvergence { .. })
        ));
        // too few power sums for the requested alphabet
        let ps = PowerSums::new(vec![1.0, 0.625]).unwrap();
        assert!(matches!(recover_vector(&ps, 3), Err(Error::Precondition(_))));
    }

    #[test]
    fn permutation_equivalence() {
        let p = pv(&[0.5, 0.25, 0.25]);
        let q = pv(&[0.25, 0.5, 0.25]);
        assert!(permutation_equivalent(&p, &q, 1e-12));
        assert!(permutation_equivalent(&p, &p, 1e-12));
        assert!(permutation_equivalent(&q, &p, 1e-12));

        let u4 = pv(&[0.25; 4]);
        let spread = pv(&[0.5, 0.125, 0.125, 0.125, 0.125]);
        assert!(!permutation_equivalent(&u4, &spread, 1e-9));
        // same entropy, distinguished by the second power sum
        assert!((u4.entropy() - spread.entropy()).abs() < 1e-12);
        assert!((power_sums(&u4, 2).value(2) - 0.25).abs() < 1e-12);
        assert!((power_sums(&spread, 2).value(2) - 0.3125).abs() < 1e-12);
    }
}

