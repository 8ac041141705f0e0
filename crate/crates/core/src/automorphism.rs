//! Locally finite automorphisms of `X_p` realized as finitely supported
//! coordinate permutations, the subgroup predicates attached to a
//! distinguished generator, and the paired swap maps used by the
//! weak-mixing product identity.
//!
//! Every automorphism here permutes coordinates of an i.i.d. product
//! measure, so measure preservation is structural and the identities below
//! can be checked in exact rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::free_group::{self, GenIndex, GroupElement};
use crate::prob::{cylinder_measure_exact, Configuration, Pattern, ProbVector};

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SwapsFile {
    swaps: Vec<(String, String)>,
}

/// A finitely supported coordinate permutation acting by
/// `(Vx)_g = x_{π⁻¹(g)}` on its support and trivially elsewhere.
/// Serializes as `{"swaps":[["a1","a1a1"],…]}`.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "SwapsFile", into = "SwapsFile")]
pub struct LocalAutomorphism {
    // forward permutation π restricted to moved points
    forward: BTreeMap<GroupElement, GroupElement>,
    // π⁻¹, the probe map
    backward: BTreeMap<GroupElement, GroupElement>,
}

impl LocalAutomorphism {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Builds a permutation from a forward map; keys and values must form
    /// the same set.
    pub fn from_forward(forward: BTreeMap<GroupElement, GroupElement>) -> Result<Self> {
        let mut backward = BTreeMap::new();
        for (g, h) in &forward {
            if backward.insert(h.clone(), g.clone()).is_some() {
                return Err(Error::Precondition(format!("{h} has two preimages")));
            }
        }
        for h in backward.keys() {
            if !forward.contains_key(h) {
                return Err(Error::Precondition(format!(
                    "{h} is an image but not a key; not a bijection of a finite support"
                )));
            }
        }
        let mut out = Self { forward, backward };
        out.strip_fixed();
        Ok(out)
    }

    /// Product of transpositions, applied in list order.
    pub fn from_swaps(pairs: &[(GroupElement, GroupElement)]) -> Result<Self> {
        let mut out = Self::identity();
        for (u, v) in pairs {
            if u == v {
                return Err(Error::Precondition(format!("degenerate swap at {u}")));
            }
            let mut t = BTreeMap::new();
            t.insert(u.clone(), v.clone());
            t.insert(v.clone(), u.clone());
            let t = Self::from_forward(t)?;
            out = t.compose(&out);
        }
        Ok(out)
    }

    fn strip_fixed(&mut self) {
        let fixed: Vec<GroupElement> = self
            .forward
            .iter()
            .filter(|(g, h)| g == h)
            .map(|(g, _)| g.clone())
            .collect();
        for g in fixed {
            self.forward.remove(&g);
            self.backward.remove(&g);
        }
    }

    pub fn is_identity(&self) -> bool {
        self.forward.is_empty()
    }

    /// Coordinates actually moved by the permutation.
    pub fn moved(&self) -> impl Iterator<Item = &GroupElement> {
        self.forward.keys()
    }

    pub fn support_size(&self) -> usize {
        self.forward.len()
    }

    /// Forward image `π(g)`.
    pub fn image(&self, g: &GroupElement) -> GroupElement {
        self.forward.get(g).cloned().unwrap_or_else(|| g.clone())
    }

    /// Probe map `π⁻¹(g)`: where `(Vx)_g` reads from.
    pub fn probe(&self, g: &GroupElement) -> GroupElement {
        self.backward.get(g).cloned().unwrap_or_else(|| g.clone())
    }

    pub fn inverse(&self) -> Self {
        Self {
            forward: self.backward.clone(),
            backward: self.forward.clone(),
        }
    }

    /// Composition as transformations: `(self ∘ other)(x) = self(other(x))`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut forward = BTreeMap::new();
        for g in self.forward.keys().chain(other.forward.keys()) {
            forward.entry(g.clone()).or_insert_with(|| self.image(&other.image(g)));
        }
        let mut out = Self::from_forward(forward).expect("composition of bijections");
        out.strip_fixed();
        out
    }

    /// Conjugation that relabels every support coordinate by left
    /// multiplication with `t`.
    pub fn translated(&self, t: &GroupElement) -> Self {
        let forward = self
            .forward
            .iter()
            .map(|(g, h)| (t * g, t * h))
            .collect();
        Self::from_forward(forward).expect("relabeling preserves bijectivity")
    }
}

impl TryFrom<SwapsFile> for LocalAutomorphism {
    type Error = Error;

    fn try_from(f: SwapsFile) -> Result<Self> {
        let mut pairs = Vec::with_capacity(f.swaps.len());
        for (u, v) in f.swaps {
            pairs.push((u.parse()?, v.parse()?));
        }
        Self::from_swaps(&pairs)
    }
}

impl From<LocalAutomorphism> for SwapsFile {
    fn from(v: LocalAutomorphism) -> Self {
        // decompose into transpositions cycle by cycle
        let mut swaps = Vec::new();
        let mut seen: BTreeMap<GroupElement, bool> = BTreeMap::new();
        for start in v.forward.keys() {
            if seen.contains_key(start) {
                continue;
            }
            let mut cycle = vec![start.clone()];
            seen.insert(start.clone(), true);
            let mut cur = v.image(start);
            while &cur != start {
                seen.insert(cur.clone(), true);
                cycle.push(cur.clone());
                cur = v.image(&cur);
            }
            // (c1 c2 … ck) = (c1 ck)(c1 c_{k−1})…(c1 c2), applied list-first
            for i in (1..cycle.len()).rev() {
                swaps.push((cycle[0].to_string(), cycle[i].to_string()));
            }
        }
        SwapsFile { swaps }
    }
}

/// The action of a local automorphism on a configuration.
pub fn act(v: &LocalAutomorphism, x: &Configuration) -> Configuration {
    x.permuted(v)
}

/// Membership in `L_{p,a}`: the permutation may move a coordinate only if
/// it lies off `W_a` or on the line `{a^k : k ∈ ℤ}`.
pub fn in_lpa(v: &LocalAutomorphism, a: GenIndex) -> bool {
    v.moved()
        .all(|g| !free_group::in_wa(g, a) || g.is_power_of(a))
}

/// Membership in `H_C⁺` for a ball of radius `n_radius`: moves only
/// coordinates of `W_a` outside `B(n_radius)`.
pub fn in_h_c_plus(v: &LocalAutomorphism, n_radius: u32, a: GenIndex) -> bool {
    v.moved()
        .all(|g| free_group::in_wa(g, a) && g.len() as u32 > n_radius)
}

/// Membership in `H_C⁻`: moves only coordinates off `W_a` outside
/// `B(n_radius)`.
pub fn in_h_c_minus(v: &LocalAutomorphism, n_radius: u32, a: GenIndex) -> bool {
    v.moved()
        .all(|g| !free_group::in_wa(g, a) && g.len() as u32 > n_radius)
}

/// Builds the swap pair `(h⁺, h⁻)` for radii `inner < outer`: `h⁺` pairs
/// every `W_a` coordinate in the annulus `B(outer) ∖ B(inner)` with a
/// distinct `W_a` coordinate beyond `B(outer)` (the `(length, lex)`-smallest
/// unused one) and swaps them; `h⁻` does the same off `W_a`.
pub fn build_weakmix_pair(
    ell: u32,
    a: GenIndex,
    inner: u32,
    outer: u32,
    cap: u64,
) -> Result<(LocalAutomorphism, LocalAutomorphism)> {
    if outer <= inner {
        return Err(Error::Precondition("outer radius must exceed inner radius".into()));
    }
    let annulus = free_group::ball(ell, outer, cap)?;
    let near_plus: Vec<GroupElement> = annulus
        .elements
        .iter()
        .filter(|g| g.len() as u32 > inner && free_group::in_wa(g, a))
        .cloned()
        .collect();
    let near_minus: Vec<GroupElement> = annulus
        .elements
        .iter()
        .filter(|g| g.len() as u32 > inner && !free_group::in_wa(g, a))
        .cloned()
        .collect();

    let far_plus = enumerate_beyond(ell, a, outer, near_plus.len(), true, cap)?;
    let far_minus = enumerate_beyond(ell, a, outer, near_minus.len(), false, cap)?;
    if far_plus.len() < near_plus.len() || far_minus.len() < near_minus.len() {
        return Err(Error::Precondition("not enough pairing targets beyond the outer ball".into()));
    }

    let swaps_plus: Vec<_> = near_plus.into_iter().zip(far_plus).collect();
    let swaps_minus: Vec<_> = near_minus.into_iter().zip(far_minus).collect();
    Ok((
        LocalAutomorphism::from_swaps(&swaps_plus)?,
        LocalAutomorphism::from_swaps(&swaps_minus)?,
    ))
}

// First `count` words of length > outer inside (resp. outside) W_a.
fn enumerate_beyond(
    ell: u32,
    a: GenIndex,
    outer: u32,
    count: usize,
    inside_wa: bool,
    cap: u64,
) -> Result<Vec<GroupElement>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    // every element of W_a ∩ B(outer) precedes the targets in enumeration
    // order, so fetch enough and slice
    let skip = if inside_wa {
        free_group::wa_ball_cardinality(ell, outer)
    } else {
        let total = free_group::ball_cardinality(ell, outer);
        let wa = free_group::wa_ball_cardinality(ell, outer);
        total.zip(wa).map(|(t, w)| t - w)
    }
    .ok_or(Error::CapExceeded { required: u128::MAX, cap })?;
    let skip = usize::try_from(skip).map_err(|_| Error::CapExceeded {
        required: u128::MAX,
        cap,
    })?;
    let all = if inside_wa {
        free_group::enumerate_wa(ell, a, skip + count, cap)?
    } else {
        free_group::enumerate_wa_complement(ell, a, skip + count, cap)?
    };
    Ok(all[skip..].to_vec())
}

/// Exact weak-mixing product identity on cylinders: for `h` built so that
/// it carries every off-`B(N)` key of `c_j` beyond the keys of `c_k`,
/// returns `(μ_C(h·C_j ∩ C_k), μ_C(C_j)·μ_C(C_k))` as exact rationals.
/// The two must be equal.
pub fn product_measure_check(
    p: &ProbVector,
    h: &LocalAutomorphism,
    c_j: &Pattern,
    c_k: &Pattern,
    base: &Pattern,
) -> Result<(BigRational, BigRational)> {
    for refinement in [c_j, c_k] {
        if !refinement.contains(base) {
            return Err(Error::Precondition(
                "cylinder does not refine the base cylinder".into(),
            ));
        }
    }
    for g in h.moved() {
        if base.contains_key(g) {
            return Err(Error::Precondition(format!(
                "automorphism moves base coordinate {g}"
            )));
        }
    }

    // transport the off-base keys of c_j through h
    let mut transported = Pattern::new();
    for (g, s) in c_j.iter() {
        if base.contains_key(g) {
            continue;
        }
        let target = h.image(g);
        if &target == g {
            return Err(Error::Precondition(format!(
                "automorphism fixes refinement coordinate {g}"
            )));
        }
        if c_k.contains_key(&target) || c_j.contains_key(&target) || base.contains_key(&target) {
            return Err(Error::Precondition(format!(
                "transported coordinate {target} collides with cylinder keys"
            )));
        }
        transported.insert(target, s);
    }

    let mut rest_k = Pattern::new();
    for (g, s) in c_k.iter() {
        if !base.contains_key(g) {
            rest_k.insert(g.clone(), s);
        }
    }

    let merged = transported
        .merge(&rest_k)
        .ok_or_else(|| Error::Precondition("transported pattern conflicts with c_k".into()))?;

    let lhs = cylinder_measure_exact(p, &merged)?;
    let mu_j = cylinder_measure_exact(p, &strip(base, c_j))?;
    let mu_k = cylinder_measure_exact(p, &strip(base, c_k))?;
    Ok((lhs, mu_j * mu_k))
}

fn strip(base: &Pattern, refinement: &Pattern) -> Pattern {
    let mut out = Pattern::new();
    for (g, s) in refinement.iter() {
        if !base.contains_key(g) {
            out.insert(g.clone(), s);
        }
    }
    out
}

/// Exact `μ_C` of one cylinder refinement (off-base factors only).
pub fn conditional_measure_exact(
    p: &ProbVector,
    base: &Pattern,
    refinement: &Pattern,
) -> Result<BigRational> {
    if !refinement.contains(base) {
        return Err(Error::Precondition("cylinder does not refine the base".into()));
    }
    cylinder_measure_exact(p, &strip(base, refinement))
}

/// Brute-force oracle for `μ_C(h·C_j ∩ C_k)`: enumerates all symbol
/// assignments on the finitely many constrained coordinates and sums exact
/// weights of the assignments lying in the intersection.  Exponential; for
/// test-scale cylinders only.
pub fn product_measure_bruteforce(
    p: &ProbVector,
    h: &LocalAutomorphism,
    c_j: &Pattern,
    c_k: &Pattern,
    base: &Pattern,
) -> Result<BigRational> {
    let mut coords: Vec<GroupElement> = Vec::new();
    let mut push = |g: &GroupElement| {
        if !coords.contains(g) {
            coords.push(g.clone());
        }
    };
    for (g, _) in base.iter() {
        push(g);
    }
    for (g, _) in c_k.iter() {
        push(g);
    }
    for (g, _) in c_j.iter() {
        push(&h.image(g));
    }
    let m = p.len() as usize;
    let total = (m as u128).checked_pow(coords.len() as u32).ok_or(Error::CapExceeded {
        required: u128::MAX,
        cap: 1 << 22,
    })?;
    if total > 1 << 22 {
        return Err(Error::CapExceeded {
            required: total,
            cap: 1 << 22,
        });
    }

    let weights = p.exact_weights();
    let zero = BigRational::from_integer(BigInt::from(0));
    let mut in_all = zero.clone();
    let mut in_base = zero;
    let mut assign = vec![1u8; coords.len()];
    loop {
        let value = |g: &GroupElement| -> Option<u8> {
            coords.iter().position(|c| c == g).map(|i| assign[i])
        };
        let weight: BigRational = assign
            .iter()
            .map(|&s| weights[s as usize - 1].clone())
            .product();
        let base_ok = base.iter().all(|(g, s)| value(g) == Some(s));
        if base_ok {
            in_base += weight.clone();
            let k_ok = c_k.iter().all(|(g, s)| value(g) == Some(s));
            // x ∈ h·C_j  ⟺  x at π(g) carries c_j's symbol at g
            let j_ok = c_j.iter().all(|(g, s)| value(&h.image(g)) == Some(s));
            if k_ok && j_ok {
                in_all += weight;
            }
        }
        // odometer
        let mut i = 0;
        loop {
            if i == assign.len() {
                return Ok(in_all / in_base);
            }
            if (assign[i] as usize) < m {
                assign[i] += 1;
                break;
            }
            assign[i] = 1;
            i += 1;
        }
    }
}
