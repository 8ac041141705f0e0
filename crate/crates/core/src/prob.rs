//! Probability vectors, cylinder patterns, exact cylinder measures, and
//! deterministic lazy sampling of Bernoulli configurations.
//!
//! A point of `X_p = {1,…,m}^{F_ell}` is uncountable data; a
//! [`Configuration`] represents one faithfully by keying a counter-based
//! generator on the canonical reduced word of each coordinate.  Any
//! coordinate can be read in O(1), repeated reads agree, and distinct
//! coordinates are independent under the product measure.  Shifts and
//! finitely supported permutations are carried as coordinate transforms, so
//! the group action is exact rather than approximate.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::automorphism::LocalAutomorphism;
use crate::error::{Error, Result};
use crate::free_group::GroupElement;

/// Symbols are 1-based indices into the alphabet `1..=m`.
pub type Symbol = u8;

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ProbVectorFile {
    p: Vec<f64>,
}

/// A strictly positive probability vector `p = [P₁,…,P_m]`, normalized on
/// construction.  Serializes as `{"p":[0.5,0.3,0.2]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProbVectorFile", into = "ProbVectorFile")]
pub struct ProbVector {
    weights: Vec<f64>,
}

impl ProbVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::BadProbVector("empty vector".into()));
        }
        if weights.len() > u8::MAX as usize {
            return Err(Error::BadProbVector("more than 255 symbols".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::BadProbVector(
                "entries must be strictly positive and finite".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        Ok(Self {
            weights: weights.iter().map(|w| w / sum).collect(),
        })
    }

    pub fn uniform(m: u8) -> Self {
        assert!(m >= 1);
        Self {
            weights: vec![1.0 / m as f64; m as usize],
        }
    }

    /// Alphabet size `m`.
    pub fn len(&self) -> u8 {
        self.weights.len() as u8
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of a 1-based symbol.
    pub fn weight(&self, sym: Symbol) -> Result<f64> {
        self.check_symbol(sym)?;
        Ok(self.weights[sym as usize - 1])
    }

    pub fn ln_weight(&self, sym: Symbol) -> Result<f64> {
        Ok(self.weight(sym)?.ln())
    }

    pub fn check_symbol(&self, sym: Symbol) -> Result<()> {
        if sym == 0 || sym as usize > self.weights.len() {
            return Err(Error::SymbolOutOfRange {
                symbol: sym,
                alphabet: self.len(),
            });
        }
        Ok(())
    }

    /// Shannon entropy `−Σ Pᵢ ln Pᵢ` (natural log).
    pub fn entropy(&self) -> f64 {
        -self.weights.iter().map(|p| p * p.ln()).sum::<f64>()
    }

    /// Exact rational view of the (normalized) weights, for identities that
    /// must hold with no rounding at all.
    pub fn exact_weights(&self) -> Vec<BigRational> {
        self.weights
            .iter()
            .map(|&w| BigRational::from_float(w).expect("weights are finite"))
            .collect()
    }

    pub fn exact_weight(&self, sym: Symbol) -> Result<BigRational> {
        self.check_symbol(sym)?;
        Ok(BigRational::from_float(self.weights[sym as usize - 1]).expect("finite"))
    }

    /// Reorders entries by a 1-based permutation: `result[i] = p[perm[i]]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.weights.len() {
            return Err(Error::Precondition("permutation length mismatch".into()));
        }
        let mut seen = vec![false; perm.len()];
        let mut weights = Vec::with_capacity(perm.len());
        for &idx in perm {
            if idx == 0 || idx > perm.len() || seen[idx - 1] {
                return Err(Error::Precondition(format!("invalid permutation entry {idx}")));
            }
            seen[idx - 1] = true;
            weights.push(self.weights[idx - 1]);
        }
        Ok(Self { weights })
    }

    pub fn sorted_descending(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

impl TryFrom<ProbVectorFile> for ProbVector {
    type Error = Error;

    fn try_from(f: ProbVectorFile) -> Result<Self> {
        Self::new(f.p)
    }
}

impl From<ProbVector> for ProbVectorFile {
    fn from(v: ProbVector) -> Self {
        Self { p: v.weights }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PatternFile {
    assign: Vec<(String, Symbol)>,
}

/// A finite partial configuration: a map from group elements to symbols,
/// kept in canonical `(length, lex)` key order.  Serializes as
/// `{"assign":[["e",1],["a1",3]]}`.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "PatternFile", into = "PatternFile")]
pub struct Pattern {
    map: BTreeMap<GroupElement, Symbol>,
}

impl Pattern {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (GroupElement, Symbol)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (g, s) in pairs {
            if s == 0 {
                return Err(Error::SymbolOutOfRange { symbol: 0, alphabet: 0 });
            }
            if let Some(prev) = map.insert(g.clone(), s) {
                if prev != s {
                    return Err(Error::Precondition(format!("conflicting symbols at {g}")));
                }
            }
        }
        Ok(Self { map })
    }

    pub fn insert(&mut self, g: GroupElement, sym: Symbol) {
        self.map.insert(g, sym);
    }

    pub fn get(&self, g: &GroupElement) -> Option<Symbol> {
        self.map.get(g).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, Symbol)> {
        self.map.iter().map(|(g, &s)| (g, s))
    }

    pub fn keys(&self) -> impl Iterator<Item = &GroupElement> {
        self.map.keys()
    }

    pub fn contains_key(&self, g: &GroupElement) -> bool {
        self.map.contains_key(g)
    }

    /// True if the two patterns assign equal symbols on shared keys.
    pub fn agrees_with(&self, other: &Pattern) -> bool {
        self.iter()
            .all(|(g, s)| other.get(g).is_none_or(|t| t == s))
    }

    /// True if `other`'s assignments are all present in `self`.
    pub fn contains(&self, other: &Pattern) -> bool {
        other.iter().all(|(g, s)| self.get(g) == Some(s))
    }

    /// Union of two compatible patterns; `None` on contradiction.
    pub fn merge(&self, other: &Pattern) -> Option<Pattern> {
        if !self.agrees_with(other) {
            return None;
        }
        let mut map = self.map.clone();
        for (g, s) in other.iter() {
            map.insert(g.clone(), s);
        }
        Some(Pattern { map })
    }

    /// Reads the configuration at the given coordinates.
    pub fn from_configuration(x: &Configuration, coords: &[GroupElement]) -> Self {
        let mut map = BTreeMap::new();
        for g in coords {
            map.insert(g.clone(), x.value_at(g));
        }
        Self { map }
    }

    /// Relabels every key through `f` (keys must stay distinct).
    pub fn map_keys(&self, mut f: impl FnMut(&GroupElement) -> GroupElement) -> Result<Pattern> {
        let mut map = BTreeMap::new();
        for (g, s) in self.iter() {
            if map.insert(f(g), s).is_some() {
                return Err(Error::Precondition("key relabeling collided".into()));
            }
        }
        Ok(Pattern { map })
    }
}

impl TryFrom<PatternFile> for Pattern {
    type Error = Error;

    fn try_from(f: PatternFile) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (word, sym) in f.assign {
            let g: GroupElement = word.parse()?;
            if sym == 0 {
                return Err(Error::SymbolOutOfRange { symbol: 0, alphabet: 0 });
            }
            if map.insert(g, sym).is_some() {
                return Err(Error::Precondition(format!("duplicate pattern key {word}")));
            }
        }
        Ok(Self { map })
    }
}

impl From<Pattern> for PatternFile {
    fn from(p: Pattern) -> Self {
        Self {
            assign: p.map.into_iter().map(|(g, s)| (g.to_string(), s)).collect(),
        }
    }
}

/// `μ_p` of the cylinder set of a pattern: the product of the symbol
/// weights over the pattern's keys.  The empty pattern has measure 1.
pub fn cylinder_measure(p: &ProbVector, pattern: &Pattern) -> Result<f64> {
    let mut out = 1.0;
    for (_, s) in pattern.iter() {
        out *= p.weight(s)?;
    }
    Ok(out)
}

/// Exact rational cylinder measure.
pub fn cylinder_measure_exact(p: &ProbVector, pattern: &Pattern) -> Result<BigRational> {
    let mut out = BigRational::from_integer(BigInt::from(1));
    for (_, s) in pattern.iter() {
        out *= p.exact_weight(s)?;
    }
    Ok(out)
}

/// Conditional measure of the cylinder of `of` given the cylinder of
/// `given`: the product over keys of `of` not fixed by `given`.
/// Contradictory patterns have conditional measure 0.
pub fn conditional_cylinder_measure(p: &ProbVector, given: &Pattern, of: &Pattern) -> Result<f64> {
    if !given.agrees_with(of) {
        return Ok(0.0);
    }
    let mut out = 1.0;
    for (g, s) in of.iter() {
        if given.get(g).is_none() {
            out *= p.weight(s)?;
        }
    }
    Ok(out)
}

pub mod sampler {
    //! Counter-based keyed generator: every (seed, reduced word) pair maps
    //! to one uniform value, with no sequential state anywhere.

    use super::{ProbVector, Symbol};

    #[inline]
    pub fn mix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Hash of a reduced word under a seed.
    pub fn hash_word(seed: u64, letters: &[i8]) -> u64 {
        let mut state = mix64(seed ^ 0x6A09_E667_F3BC_C909);
        for &l in letters {
            state = mix64(state ^ (l as i64 as u64));
        }
        mix64(state ^ (letters.len() as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
    }

    /// Independent stream seed for sample index `k`.
    pub fn derive_seed(seed: u64, k: u64) -> u64 {
        mix64(seed ^ mix64(k ^ 0xA24B_AED4_963E_E407))
    }

    #[inline]
    pub fn uniform_from(h: u64) -> f64 {
        (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Inverse-CDF draw of a symbol at one coordinate.
    pub fn sample_symbol(seed: u64, letters: &[i8], p: &ProbVector) -> Symbol {
        let u = uniform_from(hash_word(seed, letters));
        let mut acc = 0.0;
        for (i, w) in p.weights().iter().enumerate() {
            acc += w;
            if u < acc {
                return (i + 1) as Symbol;
            }
        }
        p.len()
    }
}

#[derive(Clone, Debug)]
enum Step {
    Shift(GroupElement),
    Permute(LocalAutomorphism),
}

/// A lazily evaluated point of `X_p`, deterministic in
/// `(seed, coordinate, vector, overrides)`.  Shifts and coordinate
/// permutations stack as transforms; reading a coordinate resolves the
/// probe through the transforms and then samples (or reads an override).
#[derive(Clone, Debug)]
pub struct Configuration {
    seed: u64,
    vector: ProbVector,
    overrides: Pattern,
    steps: Vec<Step>,
}

impl Configuration {
    pub fn new(seed: u64, vector: ProbVector) -> Self {
        Self {
            seed,
            vector,
            overrides: Pattern::new(),
            steps: Vec::new(),
        }
    }

    /// A configuration with finitely many forced coordinates.
    pub fn with_overrides(seed: u64, vector: ProbVector, overrides: Pattern) -> Self {
        Self {
            seed,
            vector,
            overrides,
            steps: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vector(&self) -> &ProbVector {
        &self.vector
    }

    /// Same transform stack and overrides, new seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut out = self.clone();
        out.seed = seed;
        out
    }

    /// Maps a probe coordinate through the transform stack to the base
    /// coordinate it actually reads.
    pub fn resolve(&self, g: &GroupElement) -> GroupElement {
        let mut g = g.clone();
        for step in self.steps.iter().rev() {
            g = match step {
                Step::Shift(s) => &s.inverse() * &g,
                Step::Permute(v) => v.probe(&g),
            };
        }
        g
    }

    /// The symbol at coordinate `g`.
    pub fn value_at(&self, g: &GroupElement) -> Symbol {
        let base = self.resolve(g);
        if let Some(s) = self.overrides.get(&base) {
            return s;
        }
        sampler::sample_symbol(self.seed, base.letters(), &self.vector)
    }

    /// The shifted point `g·x`, satisfying `(g x)_h = x_{g⁻¹h}`.
    pub fn shift(&self, g: &GroupElement) -> Self {
        let mut out = self.clone();
        // adjacent shifts fuse: shifting by s then g is shifting by g·s
        if let Some(Step::Shift(prev)) = out.steps.last_mut() {
            *prev = g * prev;
            if prev.is_identity() {
                out.steps.pop();
            }
        } else if !g.is_identity() {
            out.steps.push(Step::Shift(g.clone()));
        }
        out
    }

    /// The permuted point `V·x` for a finitely supported coordinate
    /// permutation, satisfying `(Vx)_g = x_{π⁻¹(g)}`.
    pub fn permuted(&self, v: &LocalAutomorphism) -> Self {
        let mut out = self.clone();
        if !v.is_identity() {
            out.steps.push(Step::Permute(v.clone()));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> GroupElement {
        s.parse().unwrap()
    }

    fn half() -> ProbVector {
        ProbVector::new(vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![]).is_err());
        assert!(ProbVector::new(vec![0.5, 0.0]).is_err());
        assert!(ProbVector::new(vec![0.5, -0.1]).is_err());
        assert!(ProbVector::new(vec![f64::NAN]).is_err());
        let p = ProbVector::new(vec![2.0, 2.0]).unwrap();
        assert_eq!(p.weights(), &[0.5, 0.5]);
        assert!((p.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prob_vector_json() {
        let p: ProbVector = serde_json::from_str(r#"{"p":[0.5,0.3,0.2]}"#).unwrap();
        assert_eq!(p.len(), 3);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"p":[0.5,0.3,0.2]}"#);
    }

    #[test]
    fn pattern_json() {
        let pat: Pattern = serde_json::from_str(r#"{"assign":[["e",1],["a1",3]]}"#).unwrap();
        assert_eq!(pat.get(&GroupElement::identity()), Some(1));
        assert_eq!(pat.get(&w("a")), Some(3));
        let s = serde_json::to_string(&pat).unwrap();
        assert_eq!(s, r#"{"assign":[["e",1],["a1",3]]}"#);
        assert!(serde_json::from_str::<Pattern>(r#"{"assign":[["e",1],["e",2]]}"#).is_err());
    }

    #[test]
    fn cylinder_measure_products() {
        let p = half();
        let pat = Pattern::from_pairs([(w("e"), 1), (w("a"), 2), (w("b"), 1)]).unwrap();
        assert!((cylinder_measure(&p, &pat).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(cylinder_measure(&p, &Pattern::new()).unwrap(), 1.0);

        let p = ProbVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let pat = Pattern::from_pairs([(w("e"), 1), (w("a"), 3)]).unwrap();
        assert!((cylinder_measure(&p, &pat).unwrap() - 0.10).abs() < 1e-12);
    }

    #[test]
    fn cylinder_measure_rejects_bad_symbol() {
        let p = half();
        let pat = Pattern::from_pairs([(w("e"), 3)]).unwrap();
        assert!(matches!(
            cylinder_measure(&p, &pat),
            Err(Error::SymbolOutOfRange { .. })
        ));
    }

    #[test]
    fn conditional_measure_cases() {
        let p = half();
        let given = Pattern::from_pairs([(w("e"), 1), (w("a"), 2)]).unwrap();
        // contained atom
        let of = Pattern::from_pairs([(w("e"), 1)]).unwrap();
        assert_eq!(conditional_cylinder_measure(&p, &given, &of).unwrap(), 1.0);
        // independence
        let of = Pattern::from_pairs([(w("b"), 2)]).unwrap();
        assert_eq!(conditional_cylinder_measure(&p, &given, &of).unwrap(), 0.5);
        // contradiction
        let of = Pattern::from_pairs([(w("e"), 2)]).unwrap();
        assert_eq!(conditional_cylinder_measure(&p, &given, &of).unwrap(), 0.0);
    }

    #[test]
    fn conditional_times_given_is_merge() {
        let p = ProbVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let given = Pattern::from_pairs([(w("e"), 1), (w("a"), 2)]).unwrap();
        let of = Pattern::from_pairs([(w("a"), 2), (w("ba"), 3)]).unwrap();
        let merged = given.merge(&of).unwrap();
        let lhs = conditional_cylinder_measure(&p, &given, &of).unwrap()
            * cylinder_measure(&p, &given).unwrap();
        let rhs = cylinder_measure(&p, &merged).unwrap();
        assert!((lhs - rhs).abs() < 1e-15);
    }

    #[test]
    fn value_at_is_deterministic() {
        let x = Configuration::new(7, half());
        for s in ["e", "a", "ab", "AAb"] {
            assert_eq!(x.value_at(&w(s)), x.value_at(&w(s)));
        }
        let y = Configuration::new(7, half());
        assert_eq!(x.value_at(&w("ab")), y.value_at(&w("ab")));
    }

    #[test]
    fn overrides_force_coordinates() {
        let pat = Pattern::from_pairs([(w("e"), 2)]).unwrap();
        let x = Configuration::with_overrides(0, half(), pat);
        assert_eq!(x.value_at(&GroupElement::identity()), 2);
        // override travels with the shift
        let y = x.shift(&w("a"));
        assert_eq!(y.value_at(&w("a")), 2);
    }

    #[test]
    fn empirical_frequency_near_half() {
        let p = half();
        let mut ones = 0u32;
        let n = 100_000;
        for seed in 0..n {
            let x = Configuration::new(seed as u64, p.clone());
            if x.value_at(&GroupElement::identity()) == 1 {
                ones += 1;
            }
        }
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq = {freq}");
    }

    #[test]
    fn distinct_coordinates_are_independent() {
        // joint frequency of (x_e, x_a) factorizes within three sigma
        let p = half();
        let n = 50_000u64;
        let mut joint = 0u32;
        for seed in 0..n {
            let x = Configuration::new(seed, p.clone());
            if x.value_at(&w("e")) == 1 && x.value_at(&w("a")) == 1 {
                joint += 1;
            }
        }
        let freq = joint as f64 / n as f64;
        let expect = 0.25;
        let sigma = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!((freq - expect).abs() < 3.0 * sigma, "joint freq {freq}");
    }

    #[test]
    fn shift_matches_definition() {
        let x = Configuration::new(3, half());
        // (a x)_a = x_e
        let ax = x.shift(&w("a"));
        assert_eq!(ax.value_at(&w("a")), x.value_at(&w("e")));
        // shift by e is the identity
        let ex = x.shift(&GroupElement::identity());
        for s in ["e", "a", "Ab"] {
            assert_eq!(ex.value_at(&w(s)), x.value_at(&w(s)));
        }
    }

    #[test]
    fn shift_is_an_action() {
        let x = Configuration::new(11, half());
        let g = w("ab");
        let h = w("bA");
        let lhs = x.shift(&g).shift(&h);
        let rhs = x.shift(&(&h * &g));
        let probes = crate::free_group::ball(2, 3, 10_000).unwrap();
        for u in &probes.elements {
            assert_eq!(lhs.value_at(u), rhs.value_at(u));
        }
    }

    #[test]
    fn shift_preserves_underlying_key() {
        let p = half();
        let g = w("ab");
        for seed in 0..200 {
            let x = Configuration::new(seed, p.clone());
            assert_eq!(
                x.shift(&g).value_at(&GroupElement::identity()),
                x.value_at(&g.inverse())
            );
        }
    }

    #[test]
    fn value_invariant_under_reserialization() {
        let x = Configuration::new(5, half());
        let g1: GroupElement = "a1a1A2".parse().unwrap();
        let g2 = &(&w("a") * &w("a")) * &w("B");
        assert_eq!(g1, g2);
        assert_eq!(x.value_at(&g1), x.value_at(&g2));
    }
}
