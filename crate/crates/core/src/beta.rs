//! The beta function `β_p(t) = Σ Pᵢᵗ` in closed form, by the exact limit
//! formula, and by Monte Carlo over seeded shift orbits; the
//! single-coordinate pressure; the restricted growth rate over a cylinder
//! on the distinguished line; and the entropy link `H(p) = −β′(1)`.
//!
//! All integrands are evaluated in log space so large `|t|` cannot
//! overflow.  Closed-form sums are accumulated over sorted terms, so two
//! vectors that differ by a permutation produce bit-identical values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_group::{GenIndex, GroupElement};
use crate::prob::{sampler, Pattern, ProbVector};

/// `β_p(t) = Σ Pᵢᵗ`, summed over sorted terms for permutation invariance.
pub fn beta_closed(p: &ProbVector, t: f64) -> f64 {
    let mut terms: Vec<f64> = p.weights().iter().map(|w| w.powf(t)).collect();
    terms.sort_by(|a, b| a.total_cmp(b));
    terms.iter().sum()
}

/// The exact value of the `n`-step limit formula: the integral of
/// `exp((1−t)·J(a^n))` factorizes coordinate-by-coordinate into
/// `(Σ Pᵢᵗ)^n`, whose `n`-th root is returned (computed in log space).
pub fn beta_limit_exact(p: &ProbVector, t: f64, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("limit formula needs n >= 1".into()));
    }
    let s = beta_closed(p, t);
    Ok((((n as f64) * s.ln()) / (n as f64)).exp())
}

/// Monte Carlo estimate of the `n`-step limit formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub n: u32,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
}

// Fixed block size: the merge over blocks is sequential in block index, so
// results are identical for any worker count.
const MC_BLOCK: u64 = 4096;

#[derive(Clone, Copy, Debug)]
struct BlockPartial {
    max: f64,
    sum1: f64, // Σ exp(L − max)
    sum2: f64, // Σ exp(2(L − max))
    count: u64,
}

fn mc_block(
    p: &ProbVector,
    t: f64,
    coords: &[Vec<i8>],
    seed: u64,
    lo: u64,
    hi: u64,
) -> BlockPartial {
    let ln_w: Vec<f64> = p.weights().iter().map(|w| w.ln()).collect();
    let mut logs = Vec::with_capacity((hi - lo) as usize);
    for k in lo..hi {
        let stream = sampler::derive_seed(seed, k);
        let mut j = 0.0;
        for letters in coords {
            let sym = sampler::sample_symbol(stream, letters, p);
            j += -ln_w[sym as usize - 1];
        }
        logs.push((1.0 - t) * j);
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum1 = 0.0;
    let mut sum2 = 0.0;
    for l in &logs {
        sum1 += (l - max).exp();
        sum2 += (2.0 * (l - max)).exp();
    }
    BlockPartial {
        max,
        sum1,
        sum2,
        count: hi - lo,
    }
}

fn mc_merge(partials: &[BlockPartial], n: u32) -> McEstimate {
    let count: u64 = partials.iter().map(|b| b.count).sum();
    let k = count as f64;
    let m = partials
        .iter()
        .map(|b| b.max)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for b in partials {
        s1 += b.sum1 * (b.max - m).exp();
        s2 += b.sum2 * (2.0 * (b.max - m)).exp();
    }
    // estimate = mean^{1/n}, mean = exp(m)·S1/K
    let log_mean = m + (s1 / k).ln();
    let estimate = (log_mean / n as f64).exp();
    // delta method: se(mean^{1/n}) = estimate · se(mean) / (n · mean)
    let stderr = if count > 1 {
        let centered = (s2 - s1 * s1 / k).max(0.0);
        let se_over_mean = (centered / (k - 1.0)).sqrt() / (s1 / k.sqrt());
        estimate * se_over_mean / n as f64
    } else {
        f64::INFINITY
    };
    McEstimate {
        n,
        estimate,
        stderr,
        samples: count,
    }
}

/// Monte Carlo evaluation of the limit formula: averages
/// `exp((1−t)·J(a^n))` over `samples` independently seeded orbit blocks and
/// returns the `n`-th root with a delta-method standard error.
pub fn beta_limit_mc(
    p: &ProbVector,
    a: GenIndex,
    t: f64,
    n: u32,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    beta_limit_mc_workers(p, a, t, n, samples, seed, 1)
}

/// Same estimator with the sample range partitioned across `workers`
/// threads.  Blocks have fixed size and are merged in index order, so the
/// result is independent of the worker count.
pub fn beta_limit_mc_workers(
    p: &ProbVector,
    a: GenIndex,
    t: f64,
    n: u32,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<McEstimate> {
    if n == 0 || samples == 0 {
        return Err(Error::Precondition("mc estimator needs n >= 1 and samples >= 1".into()));
    }
    let coords: Vec<Vec<i8>> = (0..n as i64)
        .map(|i| GroupElement::generator_power(a, i).letters().to_vec())
        .collect();
    let blocks = samples.div_ceil(MC_BLOCK);
    let workers = workers.clamp(1, blocks.min(256) as usize);

    let mut partials: Vec<Option<BlockPartial>> = vec![None; blocks as usize];
    if workers == 1 {
        for b in 0..blocks {
            let lo = b * MC_BLOCK;
            let hi = ((b + 1) * MC_BLOCK).min(samples);
            partials[b as usize] = Some(mc_block(p, t, &coords, seed, lo, hi));
        }
    } else {
        let chunks: Vec<(u64, BlockPartial)> = std::thread::scope(|scope| {
            let coords = &coords;
            let mut handles = Vec::new();
            for widx in 0..workers as u64 {
                let p = p.clone();
                handles.push(scope.spawn(move || {
                    let mut out = Vec::new();
                    let mut b = widx;
                    while b < blocks {
                        let lo = b * MC_BLOCK;
                        let hi = ((b + 1) * MC_BLOCK).min(samples);
                        out.push((b, mc_block(&p, t, coords, seed, lo, hi)));
                        b += workers as u64;
                    }
                    out
                }));
            }
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("mc worker panicked"))
                .collect()
        });
        for (b, partial) in chunks {
            partials[b as usize] = Some(partial);
        }
    }
    let partials: Vec<BlockPartial> = partials.into_iter().map(|b| b.expect("block computed")).collect();
    Ok(mc_merge(&partials, n))
}

/// Pressure of the single-coordinate potential `−t·I_μ`: the separated-set
/// supremum factorizes across the orbit window, leaving `ln Σ Pᵢᵗ`, so that
/// `exp(𝒫) = β_p(t)` is an identity.
pub fn pressure_single_coordinate(p: &ProbVector, t: f64) -> f64 {
    beta_closed(p, t).ln()
}

/// Growth rate of the restricted integral over `D ∩ a^n D` with per-
/// coordinate integrand exponent `w` (each orbit coordinate contributes
/// `P^w` to the integrand): coordinates fixed by the restriction contribute
/// their own factors, free coordinates contribute the full sum
/// `Σ Pⱼ^{1+w}`.  Returns the `n`-th root.
pub fn restricted_rate_with_exponent(
    p: &ProbVector,
    a: GenIndex,
    w: f64,
    d: &Pattern,
    n: u32,
) -> Result<f64> {
    let mut powers: Vec<(i64, u8)> = Vec::with_capacity(d.len());
    let mut m_radius: i64 = 0;
    for (g, s) in d.iter() {
        let k = g
            .power_of(a)
            .ok_or_else(|| Error::Precondition(format!("restriction key {g} is off the a-line")))?;
        p.check_symbol(s)?;
        m_radius = m_radius.max(k.abs());
        powers.push((k, s));
    }
    if (n as i64) <= 2 * m_radius {
        return Err(Error::Precondition(format!(
            "n = {n} must exceed twice the restriction radius {m_radius}"
        )));
    }

    let free_sum = beta_closed(p, 1.0 + w);
    let n_i = n as i64;
    let mut fixed_in_window = 0u32;
    let mut ln_fixed = 0.0;
    // the restriction fixes coordinate k (from D) and n+k (from a^n D)
    for &(k, s) in &powers {
        let ln_p = p.ln_weight(s)?;
        for idx in [k, n_i + k] {
            if (0..n_i).contains(&idx) {
                fixed_in_window += 1;
                ln_fixed += (1.0 + w) * ln_p;
            } else {
                ln_fixed += ln_p;
            }
        }
    }
    let ln_r = ((n - fixed_in_window) as f64) * free_sum.ln() + ln_fixed;
    Ok((ln_r / n as f64).exp())
}

/// The restricted growth rate in the convention matching the unrestricted
/// limit formula: integrand `exp((1−t)·Σ −ln P)`, i.e. exponent `w = t−1`,
/// so the unrestricted rate is `β_p(t)` and an empty restriction reproduces
/// [`beta_limit_exact`] exactly.
pub fn restricted_growth_rate(
    p: &ProbVector,
    a: GenIndex,
    t: f64,
    d: &Pattern,
    n: u32,
) -> Result<f64> {
    restricted_rate_with_exponent(p, a, t - 1.0, d, n)
}

/// Entropy read off the beta function two ways.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyFromBeta {
    /// `−β′(1)` computed analytically: `−Σ Pᵢ ln Pᵢ`.
    pub analytic: f64,
    /// `−β′(1)` by central finite difference with step `1e−5`.
    pub finite_difference: f64,
}

/// `H(p) = −β′(1)`, returned both analytically and by finite differences.
pub fn entropy_from_beta(p: &ProbVector) -> EntropyFromBeta {
    let h = 1e-5;
    let fd = -(beta_closed(p, 1.0 + h) - beta_closed(p, 1.0 - h)) / (2.0 * h);
    EntropyFromBeta {
        analytic: p.entropy(),
        finite_difference: fd,
    }
}

/// One row of a beta evaluation: the closed form with optional exact-limit
/// and Monte Carlo companions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaEvaluation {
    pub t: f64,
    pub closed_form: f64,
    pub limit_exact: Vec<(u32, f64)>,
    pub mc: Option<McEstimate>,
}

impl BetaEvaluation {
    pub fn closed_only(p: &ProbVector, t: f64) -> Self {
        Self {
            t,
            closed_form: beta_closed(p, t),
            limit_exact: Vec::new(),
            mc: None,
        }
    }
}
