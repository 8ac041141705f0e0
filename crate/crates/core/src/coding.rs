//! Finitary codings `φ: X_p → X_q` as equivariant local rules.
//!
//! A code is a finite object: either a table over the full windows of a
//! ball `B(r)` (with an optional default symbol) or a finite decision tree
//! that queries coordinates adaptively.  Everything downstream — the
//! per-point radius `r_φ(x)`, the window volume `v_φ(x) = |B(r_φ(x))|`,
//! the truncated suprema `m_φ`/`a_φ`, and expected code length — is
//! computed from those finite objects, exactly where the window space is
//! enumerable and by seeded Monte Carlo otherwise.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_group::{self, ball, ball_cardinality, GenIndex, GroupElement};
use crate::prob::{sampler, Configuration, Pattern, ProbVector, Symbol};

/// Decision tree for adaptive codes: leaves emit, inner nodes query one
/// coordinate and branch on its symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeNode {
    Leaf(Symbol),
    Query {
        coord: GroupElement,
        children: Vec<TreeNode>,
    },
}

impl TreeNode {
    fn validate(&self, m: u8, n: u8) -> Result<()> {
        match self {
            TreeNode::Leaf(s) => {
                if *s == 0 || *s > n {
                    return Err(Error::SymbolOutOfRange { symbol: *s, alphabet: n });
                }
                Ok(())
            }
            TreeNode::Query { children, .. } => {
                if children.len() != m as usize {
                    return Err(Error::Precondition(format!(
                        "query node needs {m} children, has {}",
                        children.len()
                    )));
                }
                children.iter().try_for_each(|c| c.validate(m, n))
            }
        }
    }

    fn max_coord_len(&self) -> u32 {
        match self {
            TreeNode::Leaf(_) => 0,
            TreeNode::Query { coord, children } => children
                .iter()
                .map(|c| c.max_coord_len())
                .max()
                .unwrap_or(0)
                .max(coord.len() as u32),
        }
    }
}

#[derive(Clone, Debug)]
enum Rule {
    Fixed {
        radius: u32,
        window: Vec<GroupElement>,
        table: HashMap<Vec<Symbol>, Symbol>,
        default: Option<Symbol>,
    },
    Adaptive {
        root: TreeNode,
    },
}

/// Minimal-radius report: `certified_minimal` is false when certifying
/// minimality would have exceeded the enumeration cap, in which case
/// `radius` is an upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadiusReport {
    pub radius: u32,
    pub certified_minimal: bool,
}

/// A truncated supremum `sup (r_φ(g⁻¹x) − |g|)` over a finite horizon.
/// `value` is `None` when the truncated range was empty (the sup is then
/// unbounded below rather than any integer).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupReport {
    pub value: Option<i64>,
    pub certified: bool,
    pub horizon: u32,
}

/// An equivariant local rule from `{1..m}^{F_ell}` to `{1..n}^{F_ell}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "CodeFile", into = "CodeFile")]
pub struct FinitaryCode {
    ell: u32,
    source_alphabet: u8,
    target_alphabet: u8,
    rule: Rule,
}

impl FinitaryCode {
    /// Builds a fixed-radius code from explicit `(full window pattern,
    /// output)` entries.
    pub fn fixed_from_entries(
        ell: u32,
        radius: u32,
        m: u8,
        n: u8,
        entries: Vec<(Pattern, Symbol)>,
        default: Option<Symbol>,
        cap: u64,
    ) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Precondition("alphabets must be nonempty".into()));
        }
        let window = ball(ell, radius, cap)?.elements;
        let mut table = HashMap::with_capacity(entries.len());
        for (pattern, out) in entries {
            if out == 0 || out > n {
                return Err(Error::SymbolOutOfRange { symbol: out, alphabet: n });
            }
            if pattern.len() != window.len() {
                return Err(Error::Precondition(format!(
                    "table pattern fixes {} coordinates, window has {}",
                    pattern.len(),
                    window.len()
                )));
            }
            let mut key = Vec::with_capacity(window.len());
            for g in &window {
                let s = pattern.get(g).ok_or_else(|| {
                    Error::Precondition(format!("table pattern is missing coordinate {g}"))
                })?;
                if s == 0 || s > m {
                    return Err(Error::SymbolOutOfRange { symbol: s, alphabet: m });
                }
                key.push(s);
            }
            if table.insert(key, out).is_some() {
                return Err(Error::Precondition("duplicate table window".into()));
            }
        }
        if let Some(d) = default {
            if d == 0 || d > n {
                return Err(Error::SymbolOutOfRange { symbol: d, alphabet: n });
            }
        }
        Ok(Self {
            ell,
            source_alphabet: m,
            target_alphabet: n,
            rule: Rule::Fixed {
                radius,
                window,
                table,
                default,
            },
        })
    }

    /// Builds a total fixed-radius table by evaluating `f` on every window
    /// (symbols listed in the canonical `(length, lex)` coordinate order).
    pub fn fixed_from_fn(
        ell: u32,
        radius: u32,
        m: u8,
        n: u8,
        cap: u64,
        mut f: impl FnMut(&[Symbol]) -> Symbol,
    ) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Precondition("alphabets must be nonempty".into()));
        }
        let window = ball(ell, radius, cap)?.elements;
        let count = (m as u128)
            .checked_pow(window.len() as u32)
            .filter(|&c| c <= cap as u128)
            .ok_or(Error::CapExceeded {
                required: u128::MAX,
                cap,
            })?;
        let mut table = HashMap::with_capacity(count as usize);
        let mut w = vec![1u8; window.len()];
        loop {
            let out = f(&w);
            if out == 0 || out > n {
                return Err(Error::SymbolOutOfRange { symbol: out, alphabet: n });
            }
            table.insert(w.clone(), out);
            if !next_window(&mut w, m) {
                break;
            }
        }
        Ok(Self {
            ell,
            source_alphabet: m,
            target_alphabet: n,
            rule: Rule::Fixed {
                radius,
                window,
                table,
                default: None,
            },
        })
    }

    /// The radius-0 identity code.
    pub fn identity(ell: u32, m: u8) -> Self {
        Self::symbol_permutation(ell, &(1..=m).collect::<Vec<_>>()).expect("identity permutation")
    }

    /// A radius-0 symbol relabeling: output `perm[s−1]` on input `s`.
    pub fn symbol_permutation(ell: u32, perm: &[Symbol]) -> Result<Self> {
        let m = perm.len() as u8;
        let mut seen = vec![false; perm.len()];
        for &s in perm {
            if s == 0 || s > m || seen[s as usize - 1] {
                return Err(Error::Precondition("not a permutation of 1..=m".into()));
            }
            seen[s as usize - 1] = true;
        }
        let perm = perm.to_vec();
        Self::fixed_from_fn(ell, 0, m, m, 1 << 20, |w| perm[w[0] as usize - 1])
    }

    /// An adaptive decision-tree code.
    pub fn adaptive(ell: u32, m: u8, n: u8, root: TreeNode) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Precondition("alphabets must be nonempty".into()));
        }
        root.validate(m, n)?;
        Ok(Self {
            ell,
            source_alphabet: m,
            target_alphabet: n,
            rule: Rule::Adaptive { root },
        })
    }

    pub fn rank(&self) -> u32 {
        self.ell
    }

    pub fn source_alphabet(&self) -> u8 {
        self.source_alphabet
    }

    pub fn target_alphabet(&self) -> u8 {
        self.target_alphabet
    }

    /// Table radius for fixed codes, maximal query depth for adaptive ones.
    pub fn max_radius(&self) -> u32 {
        match &self.rule {
            Rule::Fixed { radius, .. } => *radius,
            Rule::Adaptive { root } => root.max_coord_len(),
        }
    }

    // Evaluates the rule against an arbitrary coordinate reader, returning
    // the output symbol and the longest queried coordinate (adaptive path
    // length; for fixed rules the full window is read).
    fn eval_on(
        &self,
        mut read: impl FnMut(&GroupElement) -> Result<Symbol>,
    ) -> Result<(Symbol, u32)> {
        match &self.rule {
            Rule::Fixed {
                radius,
                window,
                table,
                default,
            } => {
                let mut key = Vec::with_capacity(window.len());
                for g in window {
                    key.push(read(g)?);
                }
                match table.get(&key).copied().or(*default) {
                    Some(s) => Ok((s, *radius)),
                    None => Err(Error::MissingTableEntry),
                }
            }
            Rule::Adaptive { root } => {
                let mut node = root;
                let mut max_len = 0u32;
                loop {
                    match node {
                        TreeNode::Leaf(s) => return Ok((*s, max_len)),
                        TreeNode::Query { coord, children } => {
                            let s = read(coord)?;
                            if s == 0 || s > self.source_alphabet {
                                return Err(Error::SymbolOutOfRange {
                                    symbol: s,
                                    alphabet: self.source_alphabet,
                                });
                            }
                            max_len = max_len.max(coord.len() as u32);
                            node = &children[s as usize - 1];
                        }
                    }
                }
            }
        }
    }

    /// `φ(x)_g`, evaluated equivariantly: the rule reads the window
    /// `h ↦ x_{g·h}`.
    pub fn apply(&self, x: &Configuration, g: &GroupElement) -> Result<Symbol> {
        Ok(self.eval_on(|h| Ok(x.value_at(&(g * h))))?.0)
    }

    // Table lookup on a raw window vector.
    fn lookup(&self, key: &[Symbol]) -> Result<Symbol> {
        match &self.rule {
            Rule::Fixed { table, default, .. } => table
                .get(key)
                .copied()
                .or(*default)
                .ok_or(Error::MissingTableEntry),
            Rule::Adaptive { .. } => unreachable!("lookup is for fixed rules"),
        }
    }

    /// Minimal radius `r' ≤ r` such that every window agreeing with `w` on
    /// `B(r')` produces the same output (fixed rules).  Falls back to an
    /// uncertified upper bound when the completion count exceeds `cap`.
    pub fn radius_of_window(&self, w: &[Symbol], cap: u64) -> Result<RadiusReport> {
        let Rule::Fixed { radius, window, .. } = &self.rule else {
            return Err(Error::Precondition("window radii apply to fixed rules".into()));
        };
        let reference = self.lookup(w)?;
        let m = self.source_alphabet;
        for r_prime in 0..*radius {
            let prefix_len = ball_cardinality(self.ell, r_prime).expect("small ball") as usize;
            let free = window.len() - prefix_len;
            let completions = (m as u128).pow(free as u32);
            if completions > cap as u128 {
                return Ok(RadiusReport {
                    radius: *radius,
                    certified_minimal: false,
                });
            }
            let mut probe = w.to_vec();
            for slot in probe[prefix_len..].iter_mut() {
                *slot = 1;
            }
            let mut agree = true;
            loop {
                if self.lookup(&probe)? != reference {
                    agree = false;
                    break;
                }
                if !next_window(&mut probe[prefix_len..], m) {
                    break;
                }
            }
            if agree {
                return Ok(RadiusReport {
                    radius: r_prime,
                    certified_minimal: true,
                });
            }
        }
        Ok(RadiusReport {
            radius: *radius,
            certified_minimal: true,
        })
    }

    /// `r_φ(x)`: the minimal determining radius at the point `x` (fixed
    /// rules, exhaustively certified under the cap) or the maximal queried
    /// coordinate length on the decision path (adaptive rules).
    pub fn code_radius(&self, x: &Configuration, cap: u64) -> Result<RadiusReport> {
        match &self.rule {
            Rule::Fixed { window, .. } => {
                let w: Vec<Symbol> = window.iter().map(|g| x.value_at(g)).collect();
                self.radius_of_window(&w, cap)
            }
            Rule::Adaptive { .. } => {
                let (_, len) = self.eval_on(|g| Ok(x.value_at(g)))?;
                Ok(RadiusReport {
                    radius: len,
                    certified_minimal: true,
                })
            }
        }
    }

    /// `v_φ(x) = |B(r_φ(x))|`.
    pub fn v_phi(&self, x: &Configuration, cap: u64) -> Result<u64> {
        let report = self.code_radius(x, cap)?;
        Ok(ball_cardinality(self.ell, report.radius).expect("code radii are small") as u64)
    }

    /// Truncated `m_φ(x)`: `max (r_φ(g⁻¹x) − |g|)` over `g ∈ W_a ∩ B(L)`.
    pub fn m_phi_truncated(
        &self,
        x: &Configuration,
        a: GenIndex,
        horizon: u32,
        cap: u64,
    ) -> Result<SupReport> {
        self.truncated_sup(x, a, horizon, cap, true)
    }

    /// Truncated `a_φ(x)`: same with `g` ranging over the complement of `W_a`.
    pub fn a_phi_truncated(
        &self,
        x: &Configuration,
        a: GenIndex,
        horizon: u32,
        cap: u64,
    ) -> Result<SupReport> {
        self.truncated_sup(x, a, horizon, cap, false)
    }

    fn truncated_sup(
        &self,
        x: &Configuration,
        a: GenIndex,
        horizon: u32,
        cap: u64,
        inside_wa: bool,
    ) -> Result<SupReport> {
        let b = ball(self.ell, horizon, cap)?;
        let mut best: Option<i64> = None;
        let mut certified = true;
        for g in &b.elements {
            if free_group::in_wa(g, a) != inside_wa {
                continue;
            }
            let shifted = x.shift(&g.inverse());
            let report = self.code_radius(&shifted, cap)?;
            certified &= report.certified_minimal;
            let value = report.radius as i64 - g.len() as i64;
            best = Some(best.map_or(value, |b| b.max(value)));
        }
        Ok(SupReport {
            value: best,
            certified,
            horizon,
        })
    }

    /// All full source windows on `B(search_radius)` that the code maps
    /// onto the given target pattern.  Every target key `g` must satisfy
    /// `|g| + r ≤ search_radius` so the needed source coordinates stay
    /// inside the window.
    pub fn invert_on_window(
        &self,
        target: &Pattern,
        search_radius: u32,
        cap: u64,
    ) -> Result<Vec<Pattern>> {
        let r = self.max_radius();
        for (g, s) in target.iter() {
            if s == 0 || s > self.target_alphabet {
                return Err(Error::SymbolOutOfRange {
                    symbol: s,
                    alphabet: self.target_alphabet,
                });
            }
            if g.len() as u32 + r > search_radius {
                return Err(Error::Precondition(format!(
                    "target coordinate {g} needs radius {} > search radius {search_radius}",
                    g.len() as u32 + r
                )));
            }
        }
        let b = ball(self.ell, search_radius, cap)?;
        let total = (self.source_alphabet as u128)
            .checked_pow(b.elements.len() as u32)
            .filter(|&c| c <= cap as u128)
            .ok_or(Error::CapExceeded {
                required: u128::MAX,
                cap,
            })?;
        let _ = total;
        let index: HashMap<&GroupElement, usize> =
            b.elements.iter().enumerate().map(|(i, g)| (g, i)).collect();

        let mut out = Vec::new();
        let mut w = vec![1u8; b.elements.len()];
        loop {
            let mut ok = true;
            for (g, want) in target.iter() {
                let (got, _) = self.eval_on(|h| {
                    let coord = g * h;
                    index
                        .get(&coord)
                        .map(|&i| w[i])
                        .ok_or_else(|| Error::Precondition(format!("coordinate {coord} outside window")))
                })?;
                if got != want {
                    ok = false;
                    break;
                }
            }
            if ok {
                out.push(Pattern::from_pairs(
                    b.elements.iter().cloned().zip(w.iter().copied()),
                )?);
            }
            if !next_window(&mut w, self.source_alphabet) {
                break;
            }
        }
        Ok(out)
    }

    /// Expected code length, exactly or by Monte Carlo.
    pub fn expected_code_length(
        &self,
        p: &ProbVector,
        mode: StatsMode,
        params: &StatsParams,
    ) -> Result<CodeStats> {
        if p.len() != self.source_alphabet {
            return Err(Error::Precondition(format!(
                "vector has {} symbols, code expects {}",
                p.len(),
                self.source_alphabet
            )));
        }
        match mode {
            StatsMode::Exact => self.exact_stats(p, params),
            StatsMode::MonteCarlo => self.mc_stats(p, params),
        }
    }

    // Exact distribution of v_φ.  Fixed rules: one pass over all windows
    // grouped by nested ball prefixes; adaptive rules: tree-path masses.
    fn exact_stats(&self, p: &ProbVector, params: &StatsParams) -> Result<CodeStats> {
        let mut by_radius: Vec<(f64, u32)> = Vec::new();
        let window_count;
        match &self.rule {
            Rule::Fixed { radius, window, .. } => {
                let m = self.source_alphabet;
                let total = (m as u128)
                    .checked_pow(window.len() as u32)
                    .filter(|&c| c <= params.cap as u128)
                    .ok_or(Error::CapExceeded {
                        required: u128::MAX,
                        cap: params.cap,
                    })?;
                window_count = total as u64;
                // outputs for every window, most significant digit first so
                // windows sharing a B(r') prefix are contiguous
                let mut outputs = Vec::with_capacity(total as usize);
                let mut w = vec![1u8; window.len()];
                loop {
                    outputs.push(self.lookup(&w)?);
                    if !next_window_msd(&mut w, m) {
                        break;
                    }
                }
                let boundaries: Vec<(usize, u32)> = (0..=*radius)
                    .map(|r| (ball_cardinality(self.ell, r).expect("small") as usize, r))
                    .collect();
                let mut stack = vec![(0usize, outputs.len(), 0usize, 1.0f64)];
                while let Some((lo, hi, digits, prob)) = stack.pop() {
                    if let Some(&(_, level)) =
                        boundaries.iter().find(|&&(count, _)| count == digits)
                    {
                        let first = outputs[lo];
                        if outputs[lo..hi].iter().all(|&s| s == first) {
                            by_radius.push((prob, level));
                            continue;
                        }
                    }
                    let width = (hi - lo) / m as usize;
                    for s in 0..m as usize {
                        stack.push((
                            lo + s * width,
                            lo + (s + 1) * width,
                            digits + 1,
                            prob * p.weights()[s],
                        ));
                    }
                }
            }
            Rule::Adaptive { root } => {
                window_count = 0;
                let mut assigned: Vec<(GroupElement, Symbol)> = Vec::new();
                walk_tree(root, p, &mut assigned, 1.0, 0, &mut by_radius);
            }
        }
        Ok(CodeStats::from_radius_masses(
            self.ell,
            &by_radius,
            window_count,
            true,
            1.0,
            params.horizon,
        ))
    }

    fn mc_stats(&self, p: &ProbVector, params: &StatsParams) -> Result<CodeStats> {
        if params.samples == 0 {
            return Err(Error::Precondition("mc stats need samples >= 1".into()));
        }
        let mut by_radius: Vec<(f64, u32)> = Vec::new();
        let mut certified = 0u64;
        let weight = 1.0 / params.samples as f64;
        let mut m_hist: std::collections::BTreeMap<i64, u64> = Default::default();
        let mut a_hist: std::collections::BTreeMap<i64, u64> = Default::default();
        for k in 0..params.samples {
            let x = Configuration::new(sampler::derive_seed(params.seed, k), p.clone());
            let report = self.code_radius(&x, params.cap)?;
            certified += u64::from(report.certified_minimal);
            by_radius.push((weight, report.radius));
            if let Some(h) = params.horizon {
                if let Some(v) = self.m_phi_truncated(&x, params.a, h, params.cap)?.value {
                    *m_hist.entry(v).or_insert(0) += 1;
                }
                if let Some(v) = self.a_phi_truncated(&x, params.a, h, params.cap)?.value {
                    *a_hist.entry(v).or_insert(0) += 1;
                }
            }
        }
        let mut stats = CodeStats::from_radius_masses(
            self.ell,
            &by_radius,
            params.samples,
            false,
            certified as f64 / params.samples as f64,
            params.horizon,
        );
        stats.m_phi_hist = m_hist.into_iter().collect();
        stats.a_phi_hist = a_hist.into_iter().collect();
        Ok(stats)
    }
}

fn walk_tree(
    node: &TreeNode,
    p: &ProbVector,
    assigned: &mut Vec<(GroupElement, Symbol)>,
    prob: f64,
    max_len: u32,
    out: &mut Vec<(f64, u32)>,
) {
    match node {
        TreeNode::Leaf(_) => out.push((prob, max_len)),
        TreeNode::Query { coord, children } => {
            let len = max_len.max(coord.len() as u32);
            if let Some((_, s)) = assigned.iter().find(|(g, _)| g == coord) {
                walk_tree(&children[*s as usize - 1], p, assigned, prob, len, out);
                return;
            }
            for (i, child) in children.iter().enumerate() {
                assigned.push((coord.clone(), (i + 1) as Symbol));
                walk_tree(child, p, assigned, prob * p.weights()[i], len, out);
                assigned.pop();
            }
        }
    }
}

// Odometer with the first slot least significant.
fn next_window(w: &mut [Symbol], m: u8) -> bool {
    for slot in w.iter_mut() {
        if *slot < m {
            *slot += 1;
            return true;
        }
        *slot = 1;
    }
    false
}

// Odometer with the first slot most significant (prefix-contiguous order).
fn next_window_msd(w: &mut [Symbol], m: u8) -> bool {
    for slot in w.iter_mut().rev() {
        if *slot < m {
            *slot += 1;
            return true;
        }
        *slot = 1;
    }
    false
}

/// Evaluation mode for [`FinitaryCode::expected_code_length`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatsMode {
    Exact,
    MonteCarlo,
}

/// Knobs for code-length statistics.
#[derive(Clone, Copy, Debug)]
pub struct StatsParams {
    pub samples: u64,
    pub seed: u64,
    /// When set, Monte Carlo runs also histogram the truncated `m_φ`/`a_φ`
    /// at this horizon.
    pub horizon: Option<u32>,
    pub a: GenIndex,
    pub cap: u64,
}

impl Default for StatsParams {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
            horizon: None,
            a: 1,
            cap: free_group::DEFAULT_CARDINALITY_CAP,
        }
    }
}

/// Code-length statistics: the mean of `v_φ`, its tail `μ(v_φ > n)`, and
/// optional truncated `m_φ`/`a_φ` histograms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeStats {
    pub samples: u64,
    pub exact: bool,
    pub v_mean: f64,
    /// `(n, μ(v_φ > n))`, ascending in `n`, up to the largest attainable `v`.
    pub v_tail: Vec<(u64, f64)>,
    pub m_phi_hist: Vec<(i64, u64)>,
    pub a_phi_hist: Vec<(i64, u64)>,
    pub horizon: Option<u32>,
    /// Fraction of evaluations whose minimal radius was certified.
    pub certified_fraction: f64,
}

impl CodeStats {
    fn from_radius_masses(
        ell: u32,
        by_radius: &[(f64, u32)],
        samples: u64,
        exact: bool,
        certified_fraction: f64,
        horizon: Option<u32>,
    ) -> Self {
        let max_r = by_radius.iter().map(|&(_, r)| r).max().unwrap_or(0);
        let max_v = ball_cardinality(ell, max_r).expect("small") as u64;
        let mut mass_by_v: Vec<(u64, f64)> = Vec::new();
        for r in 0..=max_r {
            let v = ball_cardinality(ell, r).expect("small") as u64;
            let mass: f64 = by_radius
                .iter()
                .filter(|&&(_, rr)| rr == r)
                .map(|&(m, _)| m)
                .sum();
            if mass > 0.0 || r == 0 {
                mass_by_v.push((v, mass));
            }
        }
        let v_mean = mass_by_v.iter().map(|&(v, m)| v as f64 * m).sum();
        let v_tail = (1..=max_v)
            .map(|n| {
                let tail: f64 = mass_by_v
                    .iter()
                    .filter(|&&(v, _)| v > n)
                    .map(|&(_, m)| m)
                    .sum();
                (n, tail)
            })
            .collect();
        Self {
            samples,
            exact,
            v_mean,
            v_tail,
            m_phi_hist: Vec::new(),
            a_phi_hist: Vec::new(),
            horizon,
            certified_fraction,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CodeFile {
    ell: u32,
    m: u8,
    n: u8,
    #[serde(flatten)]
    rule: RuleFile,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RuleFile {
    Fixed {
        r: u32,
        #[serde(default)]
        table: Vec<(Pattern, Symbol)>,
        #[serde(default)]
        default: Option<Symbol>,
    },
    Adaptive {
        tree: TreeFile,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum TreeFile {
    Leaf { emit: Symbol },
    Query { query: String, children: Vec<TreeFile> },
}

impl TreeFile {
    fn build(self) -> Result<TreeNode> {
        Ok(match self {
            TreeFile::Leaf { emit } => TreeNode::Leaf(emit),
            TreeFile::Query { query, children } => TreeNode::Query {
                coord: query.parse()?,
                children: children
                    .into_iter()
                    .map(TreeFile::build)
                    .collect::<Result<_>>()?,
            },
        })
    }

    fn flatten(node: &TreeNode) -> TreeFile {
        match node {
            TreeNode::Leaf(s) => TreeFile::Leaf { emit: *s },
            TreeNode::Query { coord, children } => TreeFile::Query {
                query: coord.to_string(),
                children: children.iter().map(TreeFile::flatten).collect(),
            },
        }
    }
}

impl TryFrom<CodeFile> for FinitaryCode {
    type Error = Error;

    fn try_from(f: CodeFile) -> Result<Self> {
        match f.rule {
            RuleFile::Fixed { r, table, default } => FinitaryCode::fixed_from_entries(
                f.ell,
                r,
                f.m,
                f.n,
                table,
                default,
                free_group::DEFAULT_CARDINALITY_CAP,
            ),
            RuleFile::Adaptive { tree } => FinitaryCode::adaptive(f.ell, f.m, f.n, tree.build()?),
        }
    }
}

impl From<FinitaryCode> for CodeFile {
    fn from(code: FinitaryCode) -> Self {
        let rule = match &code.rule {
            Rule::Fixed {
                radius,
                window,
                table,
                default,
            } => {
                let mut entries: Vec<(Vec<Symbol>, Symbol)> =
                    table.iter().map(|(k, &v)| (k.clone(), v)).collect();
                entries.sort();
                RuleFile::Fixed {
                    r: *radius,
                    table: entries
                        .into_iter()
                        .map(|(key, out)| {
                            let pattern = Pattern::from_pairs(
                                window.iter().cloned().zip(key.iter().copied()),
                            )
                            .expect("table keys are consistent");
                            (pattern, out)
                        })
                        .collect(),
                    default: *default,
                }
            }
            Rule::Adaptive { root } => RuleFile::Adaptive {
                tree: TreeFile::flatten(root),
            },
        };
        CodeFile {
            ell: code.ell,
            m: code.source_alphabet,
            n: code.target_alphabet,
            rule,
        }
    }
}
