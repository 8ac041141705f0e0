//! The information cocycle conditioned by the past algebra over `W_a`, in
//! the closed forms valid for shifts along the distinguished generator and
//! for finitely supported permutations in `L_{p,a}`, plus a harness for the
//! cocycle equation `J(VW) = J(V)∘W + J(W)`.
//!
//! Convention: the group element `a^n` acts as the transformation
//! `x ↦ a^{−n}x`, so the orbit of the identity coordinate under positive
//! powers is `x_e, x_a, x_{a²}, …`.  With that convention the closed forms
//! are
//!
//! ```text
//! J(a^n)(x)  = Σ_{i=0}^{n−1} −ln P_{x_{a^i}}          (n ≥ 0)
//! J(a^{−n})(x) = Σ_{j=1}^{n}  +ln P_{x_{a^{−j}}}       (n > 0)
//! J(V)(x)    = ln Π_{g ∈ W_a} P_{(Vx)_g} / P_{x_g}     (V ∈ L_{p,a})
//! ```
//!
//! and the cocycle equation holds pointwise, which the harness verifies by
//! evaluating both sides along genuinely different reduction routes.

use crate::automorphism::{self, act, LocalAutomorphism};
use crate::error::{Error, Result};
use crate::free_group::{self, GenIndex, GroupElement};
use crate::prob::{conditional_cylinder_measure, Configuration, Pattern, ProbVector};

/// Conditional information, with contradictions kept as a tagged value so
/// downstream sums fail loudly instead of silently propagating `inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InfoValue {
    Finite(f64),
    Infinite,
}

impl InfoValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            Self::Finite(v) => Some(v),
            Self::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Self::Infinite)
    }
}

/// An element of the group generated by powers of the distinguished shift
/// and local automorphisms in `L_{p,a}`.
#[derive(Clone, Debug)]
pub enum CocycleElement {
    /// `a^n` acting as `x ↦ a^{−n}x`.
    Power(i64),
    /// A finitely supported coordinate permutation in `L_{p,a}`.
    Local(LocalAutomorphism),
}

/// Houses the probability vector and the distinguished generator defining
/// the past algebra.
#[derive(Clone, Debug)]
pub struct CocycleContext {
    p: ProbVector,
    a: GenIndex,
}

impl CocycleContext {
    pub fn new(p: ProbVector, a: GenIndex) -> Self {
        assert!(a >= 1, "generator indices are 1-based");
        Self { p, a }
    }

    pub fn vector(&self) -> &ProbVector {
        &self.p
    }

    pub fn generator(&self) -> GenIndex {
        self.a
    }

    fn a_pow(&self, k: i64) -> GroupElement {
        GroupElement::generator_power(self.a, k)
    }

    fn ln_at(&self, x: &Configuration, g: &GroupElement) -> f64 {
        self.p
            .ln_weight(x.value_at(g))
            .expect("configuration symbol within alphabet")
    }

    /// `J(a^n)` along the shift orbit; `n` may be negative.
    pub fn j_shift(&self, x: &Configuration, n: i64) -> f64 {
        if n >= 0 {
            (0..n).map(|i| -self.ln_at(x, &self.a_pow(i))).sum()
        } else {
            (1..=-n).map(|j| self.ln_at(x, &self.a_pow(-j))).sum()
        }
    }

    /// `J(V)` for `V ∈ L_{p,a}`: the log-ratio product over the finitely
    /// many `W_a` coordinates the permutation touches.
    pub fn j_local(&self, x: &Configuration, v: &LocalAutomorphism) -> Result<f64> {
        if !automorphism::in_lpa(v, self.a) {
            return Err(Error::NotInLpa(
                "support leaves W_a off the distinguished line".into(),
            ));
        }
        let vx = act(v, x);
        let mut sum = 0.0;
        for g in v.moved() {
            if free_group::in_wa(g, self.a) {
                sum += self.ln_at(&vx, g) - self.ln_at(x, g);
            }
        }
        Ok(sum)
    }

    /// `−ln` of the conditional cylinder measure of `of` given `given`.
    pub fn conditional_information(&self, given: &Pattern, of: &Pattern) -> Result<InfoValue> {
        let m = conditional_cylinder_measure(&self.p, given, of)?;
        if m == 0.0 {
            Ok(InfoValue::Infinite)
        } else {
            Ok(InfoValue::Finite(-m.ln()))
        }
    }

    /// Applies the transformation of one element.
    pub fn transform(&self, e: &CocycleElement, x: &Configuration) -> Configuration {
        match e {
            CocycleElement::Power(n) => x.shift(&self.a_pow(-n)),
            CocycleElement::Local(v) => act(v, x),
        }
    }

    /// `J` of a single element.
    pub fn j_element(&self, x: &Configuration, e: &CocycleElement) -> Result<f64> {
        match e {
            CocycleElement::Power(n) => Ok(self.j_shift(x, *n)),
            CocycleElement::Local(v) => self.j_local(x, v),
        }
    }

    /// Transformation of a product `F₁F₂⋯F_k` (rightmost applied first).
    pub fn apply_word(&self, x: &Configuration, word: &[CocycleElement]) -> Configuration {
        word.iter().rev().fold(x.clone(), |y, e| self.transform(e, &y))
    }

    /// `J` of a product, expanded by the cocycle equation:
    /// `J(F₁⋯F_k)(x) = Σ_i J(F_i)(T_{F_{i+1}⋯F_k} x)`.
    pub fn j_word(&self, x: &Configuration, word: &[CocycleElement]) -> Result<f64> {
        let mut total = 0.0;
        for (i, e) in word.iter().enumerate() {
            let y = self.apply_word(x, &word[i + 1..]);
            total += self.j_element(&y, e)?;
        }
        Ok(total)
    }

    // Independent evaluation of J(vw): merges the pair into atoms, using the
    // conjugation a^n·V = (a^n V a^{−n})·a^n to move powers past locals.
    fn j_pair_merged(
        &self,
        x: &Configuration,
        v: &CocycleElement,
        w: &CocycleElement,
    ) -> Result<f64> {
        use CocycleElement::{Local, Power};
        match (v, w) {
            (Power(m), Power(n)) => Ok(self.j_shift(x, m + n)),
            (Local(v), Local(w)) => self.j_local(x, &v.compose(w)),
            (Power(n), Local(v)) => {
                let conj = v.translated(&self.a_pow(-n));
                let shifted = self.transform(&Power(*n), x);
                Ok(self.j_local(&shifted, &conj)? + self.j_shift(x, *n))
            }
            (Local(v), Power(n)) => {
                let conj = v.translated(&self.a_pow(*n));
                let permuted = act(&conj, x);
                Ok(self.j_shift(&permuted, *n) + self.j_local(x, &conj)?)
            }
        }
    }

    /// Pointwise defect of the cocycle equation for a pair `(V, W)`:
    /// `|J(VW) − J(V)∘W − J(W)|`, with the left side evaluated along an
    /// independent merged route.  Returns the maximum over `trials`
    /// reseeded configurations.
    pub fn check_cocycle_identity(
        &self,
        v: &CocycleElement,
        w: &CocycleElement,
        x: &Configuration,
        trials: u32,
    ) -> Result<f64> {
        let mut max_defect: f64 = 0.0;
        for i in 0..trials.max(1) {
            let y = x.reseeded(crate::prob::sampler::derive_seed(x.seed(), i as u64));
            let lhs = self.j_pair_merged(&y, v, w)?;
            let rhs = self.j_element(&self.transform(w, &y), v)? + self.j_element(&y, w)?;
            max_defect = max_defect.max((lhs - rhs).abs());
        }
        Ok(max_defect)
    }

    /// Defect of the conjugation decomposition of `J(V)` through `a^n V a^{−n}`:
    /// `J(V)(x) = −J(a^n)(Vx) − J(a^{−n})(a^n x)`, valid once `n` exceeds
    /// every nonnegative power of `a` moved by `V`.
    pub fn eq_star_defect(&self, x: &Configuration, v: &LocalAutomorphism, n: u32) -> Result<f64> {
        if !automorphism::in_lpa(v, self.a) {
            return Err(Error::NotInLpa("eq-star decomposition needs V in L_p,a".into()));
        }
        let max_pow = v
            .moved()
            .filter_map(|g| g.power_of(self.a))
            .filter(|&k| k >= 0)
            .max()
            .unwrap_or(-1);
        if (n as i64) <= max_pow {
            return Err(Error::Precondition(format!(
                "n = {n} must exceed the largest moved power {max_pow}"
            )));
        }
        let lhs = self.j_local(x, v)?;
        let vx = act(v, x);
        let shifted = x.shift(&self.a_pow(-(n as i64)));
        let rhs = -self.j_shift(&vx, n as i64) - self.j_shift(&shifted, -(n as i64));
        Ok((lhs - rhs).abs())
    }
}
