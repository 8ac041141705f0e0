//! Reduced-word arithmetic in the free group `F_ell`, together with the
//! combinatorial enumerations the rest of the crate is built on: closed
//! balls `B(r)`, the set `W_a` of reduced words ending in a distinguished
//! generator, and the length-monotone enumeration bounds.
//!
//! Words are kept in canonical reduced form at all times.  Within a word
//! length, words are ordered lexicographically on signed letters with
//! `a < a⁻¹ < b < b⁻¹ < …`; every enumeration in this module is sorted by
//! `(length, lex)` and is therefore reproducible.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default guard against runaway exponential enumerations.
pub const DEFAULT_CARDINALITY_CAP: u64 = 10_000_000;

/// 1-based index of a generator of `F_ell`.
pub type GenIndex = u8;

fn normalized(letters: impl IntoIterator<Item = i8>) -> Vec<i8> {
    let mut buf: Vec<i8> = Vec::new();
    for l in letters {
        if l == 0 {
            continue;
        }
        if buf.last().is_some_and(|&p| p == -l) {
            buf.pop();
        } else {
            buf.push(l);
        }
    }
    buf
}

// Order key: a < a⁻¹ < b < b⁻¹ < …
fn letter_key(l: i8) -> u16 {
    (l.unsigned_abs() as u16 - 1) * 2 + u16::from(l < 0)
}

/// A reduced word in `F_ell`: a sequence of signed generator indices with no
/// adjacent mutually-inverse pair.  The empty word is the identity `e`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GroupElement {
    letters: Vec<i8>,
}

impl GroupElement {
    /// Builds the reduced form of an arbitrary letter sequence.
    pub fn new(letters: impl IntoIterator<Item = i8>) -> Self {
        Self {
            letters: normalized(letters),
        }
    }

    pub fn identity() -> Self {
        Self { letters: Vec::new() }
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Word length `|g|`: the letter count of the reduced form.
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[i8] {
        &self.letters
    }

    pub fn last_letter(&self) -> Option<i8> {
        self.letters.last().copied()
    }

    /// The single-letter word for generator `gen`.
    pub fn generator(gen: GenIndex) -> Self {
        assert!(gen >= 1, "generator indices are 1-based");
        Self {
            letters: vec![gen as i8],
        }
    }

    /// `a^k` for the given generator, `k` of either sign.
    pub fn generator_power(gen: GenIndex, k: i64) -> Self {
        assert!(gen >= 1, "generator indices are 1-based");
        let letter = if k >= 0 { gen as i8 } else { -(gen as i8) };
        Self {
            letters: vec![letter; k.unsigned_abs() as usize],
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            letters: self.letters.iter().rev().map(|&l| -l).collect(),
        }
    }

    /// Largest generator index used by this word (0 for the identity).
    pub fn max_generator(&self) -> u8 {
        self.letters.iter().map(|l| l.unsigned_abs()).max().unwrap_or(0)
    }

    /// True if the word is a power `a^k` of the given generator (including `e`).
    pub fn is_power_of(&self, gen: GenIndex) -> bool {
        let g = gen as i8;
        self.letters.iter().all(|&l| l == g) || self.letters.iter().all(|&l| l == -g)
    }

    /// If the word is `a^k` for the given generator, returns `k`.
    pub fn power_of(&self, gen: GenIndex) -> Option<i64> {
        if !self.is_power_of(gen) {
            return None;
        }
        let n = self.letters.len() as i64;
        match self.letters.first() {
            None => Some(0),
            Some(&l) if l > 0 => Some(n),
            _ => Some(-n),
        }
    }
}

impl Mul<&GroupElement> for &GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: &GroupElement) -> GroupElement {
        GroupElement::new(self.letters.iter().chain(rhs.letters.iter()).copied())
    }
}

impl Mul<GroupElement> for GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: GroupElement) -> GroupElement {
        &self * &rhs
    }
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupElement {
    // (length, lex) with a < a⁻¹ < b < b⁻¹ < …
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| {
                for (&x, &y) in self.letters.iter().zip(other.letters.iter()) {
                    match letter_key(x).cmp(&letter_key(y)) {
                        Ordering::Equal => {}
                        ord => return ord,
                    }
                }
                Ordering::Equal
            })
    }
}

impl fmt::Display for GroupElement {
    /// Canonical token form: `e`, or concatenated `a<k>` / `A<k>` tokens
    /// (capital = inverse), e.g. `a1A2a1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for &l in &self.letters {
            if l > 0 {
                write!(f, "a{l}")?;
            } else {
                write!(f, "A{}", -l)?;
            }
        }
        Ok(())
    }
}

impl FromStr for GroupElement {
    type Err = Error;

    /// Accepts the canonical indexed form (`a1A2`), the single-letter
    /// shorthand (`aB` meaning `a1A2`), or `e` for the identity.
    fn from_str(s: &str) -> Result<Self> {
        if s == "e" || s.is_empty() {
            return Ok(Self::identity());
        }
        let chars: Vec<char> = s.chars().collect();
        let mut letters = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if !c.is_ascii_alphabetic() {
                return Err(Error::WordParse(format!("unexpected character {c:?} in {s:?}")));
            }
            let negative = c.is_ascii_uppercase();
            let base = c.to_ascii_lowercase();
            i += 1;
            let mut digits = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                digits.push(chars[i]);
                i += 1;
            }
            let idx: u32 = if digits.is_empty() {
                // letter shorthand: a..z map to generators 1..26
                (base as u32) - ('a' as u32) + 1
            } else if base == 'a' {
                digits
                    .parse()
                    .map_err(|_| Error::WordParse(format!("bad index in {s:?}")))?
            } else {
                return Err(Error::WordParse(format!(
                    "indexed tokens must use a/A, got {c:?} in {s:?}"
                )));
            };
            if idx == 0 || idx > 127 {
                return Err(Error::WordParse(format!("generator index {idx} out of range")));
            }
            letters.push(if negative { -(idx as i8) } else { idx as i8 });
        }
        Ok(Self::new(letters))
    }
}

impl TryFrom<String> for GroupElement {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GroupElement> for String {
    fn from(g: GroupElement) -> String {
        g.to_string()
    }
}

/// `|B(r)|` in `F_ell`: `2r + 1` for `ell = 1`, else
/// `1 + 2ℓ((2ℓ−1)^r − 1)/(2ℓ−2)`.  `None` on overflow.
pub fn ball_cardinality(ell: u32, r: u32) -> Option<u128> {
    assert!(ell >= 1);
    if r == 0 {
        return Some(1);
    }
    if ell == 1 {
        return Some(2 * r as u128 + 1);
    }
    let q = (2 * ell - 1) as u128;
    let qr = q.checked_pow(r)?;
    Some(1 + (2 * ell as u128) * (qr - 1) / (2 * ell as u128 - 2))
}

/// Number of words of length exactly `r`.
pub fn sphere_cardinality(ell: u32, r: u32) -> Option<u128> {
    assert!(ell >= 1);
    if r == 0 {
        return Some(1);
    }
    if ell == 1 {
        return Some(2);
    }
    let q = (2 * ell - 1) as u128;
    Some(2 * ell as u128 * q.checked_pow(r - 1)?)
}

/// `|B(r) ∩ W_a|`: `r + 1` for `ell = 1`, else `1 + ((2ℓ−1)^r − 1)/(2ℓ−2)`.
pub fn wa_ball_cardinality(ell: u32, r: u32) -> Option<u128> {
    assert!(ell >= 1);
    if r == 0 {
        return Some(1);
    }
    if ell == 1 {
        return Some(r as u128 + 1);
    }
    let q = (2 * ell - 1) as u128;
    Some(1 + (q.checked_pow(r)? - 1) / (2 * ell as u128 - 2))
}

/// The closed ball `B(r)` with elements sorted by `(length, lex)`.
#[derive(Clone, Debug)]
pub struct Ball {
    pub rank: u32,
    pub radius: u32,
    pub elements: Vec<GroupElement>,
}

impl Ball {
    pub fn cardinality(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        g.len() as u32 <= self.radius && g.max_generator() as u32 <= self.rank
    }
}

// Extends a lex-sorted sphere to the next radius, preserving order.
fn next_sphere(prev: &[GroupElement], ell: u32) -> Vec<GroupElement> {
    let letters: Vec<i8> = (1..=ell as i8).flat_map(|g| [g, -g]).collect();
    let mut out = Vec::new();
    for w in prev {
        for &l in &letters {
            if w.last_letter() != Some(-l) {
                let mut letters = w.letters.clone();
                letters.push(l);
                out.push(GroupElement { letters });
            }
        }
    }
    out
}

/// Breadth-first enumeration of `B(r)`, checked against the closed form.
pub fn ball(ell: u32, radius: u32, cap: u64) -> Result<Ball> {
    assert!(ell >= 1);
    let predicted = ball_cardinality(ell, radius).ok_or(Error::CapExceeded {
        required: u128::MAX,
        cap,
    })?;
    if predicted > cap as u128 {
        return Err(Error::CapExceeded {
            required: predicted,
            cap,
        });
    }
    let mut elements = vec![GroupElement::identity()];
    let mut sphere = vec![GroupElement::identity()];
    for _ in 0..radius {
        sphere = next_sphere(&sphere, ell);
        elements.extend(sphere.iter().cloned());
    }
    Ok(Ball {
        rank: ell,
        radius,
        elements,
    })
}

/// Membership in `W_a`: the reduced words ending in `a`, together with `e`.
pub fn in_wa(g: &GroupElement, a: GenIndex) -> bool {
    g.is_identity() || g.last_letter() == Some(a as i8)
}

// Walks spheres of F_ell in (length, lex) order, handing each to `visit`
// until it says stop.  Enforces the cap on total generated words.
fn walk_spheres(
    ell: u32,
    cap: u64,
    mut visit: impl FnMut(&[GroupElement]) -> bool,
) -> Result<()> {
    let mut generated: u64 = 1;
    let mut sphere = vec![GroupElement::identity()];
    if !visit(&sphere) {
        return Ok(());
    }
    loop {
        sphere = next_sphere(&sphere, ell);
        generated = generated.saturating_add(sphere.len() as u64);
        if generated > cap {
            return Err(Error::CapExceeded {
                required: generated as u128,
                cap,
            });
        }
        if !visit(&sphere) {
            return Ok(());
        }
    }
}

/// First `count` elements of `W_a` in `(length, lex)` order: `g₁ = e`, then
/// words ending in `a` by increasing length.
pub fn enumerate_wa(ell: u32, a: GenIndex, count: usize, cap: u64) -> Result<Vec<GroupElement>> {
    let mut out = Vec::with_capacity(count);
    walk_spheres(ell, cap, |sphere| {
        for g in sphere {
            if in_wa(g, a) {
                out.push(g.clone());
                if out.len() == count {
                    return false;
                }
            }
        }
        true
    })?;
    Ok(out)
}

/// First `count` elements of the complement `F_ell ∖ W_a`, same order.
pub fn enumerate_wa_complement(
    ell: u32,
    a: GenIndex,
    count: usize,
    cap: u64,
) -> Result<Vec<GroupElement>> {
    let mut out = Vec::with_capacity(count);
    walk_spheres(ell, cap, |sphere| {
        for g in sphere {
            if !in_wa(g, a) {
                out.push(g.clone());
                if out.len() == count {
                    return false;
                }
            }
        }
        true
    })?;
    Ok(out)
}

fn bound_holds(k: usize, word_len: usize, ell: u32, factor: u128) -> bool {
    let q = (2 * ell - 1) as u128;
    match q.checked_pow(word_len as u32 + 1) {
        // overflow means the bound is astronomically large
        None => true,
        Some(pow) => (k as u128) <= factor.saturating_mul(pow),
    }
}

/// Checks `k ≤ (2ℓ−1)^{|g_k|+1}` over the first `n` elements of `W_a`.
pub fn check_wa_enumeration_bound(ell: u32, a: GenIndex, n: usize, cap: u64) -> Result<bool> {
    if ell < 2 {
        return Err(Error::Precondition("enumeration bound requires ell >= 2".into()));
    }
    let elems = enumerate_wa(ell, a, n, cap)?;
    Ok(elems
        .iter()
        .enumerate()
        .all(|(i, g)| bound_holds(i + 1, g.len(), ell, 1)))
}

/// Checks `k ≤ 3(2ℓ−1)^{|g_k|+1}` over the first `n` elements of `F_ell ∖ W_a`.
pub fn check_complement_enumeration_bound(
    ell: u32,
    a: GenIndex,
    n: usize,
    cap: u64,
) -> Result<bool> {
    if ell < 2 {
        return Err(Error::Precondition("enumeration bound requires ell >= 2".into()));
    }
    let elems = enumerate_wa_complement(ell, a, n, cap)?;
    Ok(elems
        .iter()
        .enumerate()
        .all(|(i, g)| bound_holds(i + 1, g.len(), ell, 3)))
}

/// Both enumeration bounds at once.
pub fn check_enumeration_bound(ell: u32, a: GenIndex, n: usize, cap: u64) -> Result<bool> {
    Ok(check_wa_enumeration_bound(ell, a, n, cap)?
        && check_complement_enumeration_bound(ell, a, n, cap)?)
}
