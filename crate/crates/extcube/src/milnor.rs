//! The monomial basis of H_*(BP⟨n⟩) in conjugate Milnor generators, with the
//! left coaction of the dual Steenrod algebra and the induced action of the
//! Milnor primitives Q_i on the dual.
//!
//! Conventions. We work with the conjugate generators ξ̄_j (polynomial, degree
//! 2(p^j - 1), weight 2p^j) and τ̄_j (exterior, degree 2p^j - 1, weight 2p^j);
//! the module is P(ξ̄_1, ξ̄_2, …) ⊗ E(τ̄_{n+1}, τ̄_{n+2}, …). Grading is
//! homological, so the dual basis element m* sits in degree -degree(m). At
//! p = 2 the same formulas apply with all signs trivial (τ̄_i then denotes the
//! generator usually written ξ̄_{i+1}; the multiplicative structure plays no
//! role here).
//!
//! Sign conventions. The authoritative definition of the Q_i action is the
//! coaction/pairing route: extend the coproduct multiplicatively over the
//! factors of a monomial with Koszul signs, extract the τ̄_i-isotypic left
//! component, and transpose with the sign (-1)^{|x*||τ̄_i|}. We normalize the
//! pairing to ⟨Q_i, τ̄_i⟩ = +1. The fast combinatorial rule implemented in
//! [`Context::q_action`] then carries the sign (-1)^k where k is the number of
//! τ̄ factors with index larger than the inserted one; the test suite enforces
//! agreement between the two routes.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::fp::{LinalgError, Prime};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MilnorError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("Milnor primitive index {i} out of range 0..={n}")]
    PrimitiveIndex { i: u32, n: u32 },
    #[error("element is not homogeneous in (degree, weight)")]
    NotHomogeneous,
    #[error("division requires odd degree, got degree {0}")]
    EvenDegree(i64),
    #[error("division requires a Q_{0}-annihilated element")]
    NotAnnihilated(u32),
    #[error("division did not terminate within {0} iterations")]
    DivisionBudget(usize),
    #[error("monomial parse error: {0}")]
    Parse(String),
}

/// Fixed prime and height. All basis and action computations hang off this.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Context {
    prime: Prime,
    n: u32,
}

/// A basis monomial ξ̄^E · τ̄_J: a finite exponent map on the ξ̄_j (j ≥ 1)
/// and a strictly increasing list of τ̄ indices. The τ̄-index lower bound
/// (≥ n+1 inside the module) is contextual and enforced where it matters,
/// not by the type: left coaction factors live in the full dual Steenrod
/// algebra where any τ̄_j occurs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    xi: BTreeMap<u32, u32>,
    tau: Vec<u32>,
}

impl Monomial {
    pub fn unit() -> Monomial {
        Monomial::default()
    }

    pub fn is_unit(&self) -> bool {
        self.xi.is_empty() && self.tau.is_empty()
    }

    pub fn from_parts(xi: &[(u32, u32)], tau: &[u32]) -> Monomial {
        let mut m = Monomial::unit();
        for &(j, e) in xi {
            assert!(j >= 1);
            if e > 0 {
                *m.xi.entry(j).or_insert(0) += e;
            }
        }
        for &j in tau {
            m = m.mul_tau(j).expect("repeated tau index").0;
        }
        m
    }

    pub fn xi_exponents(&self) -> &BTreeMap<u32, u32> {
        &self.xi
    }

    pub fn tau_indices(&self) -> &[u32] {
        &self.tau
    }

    pub fn tau_count(&self) -> usize {
        self.tau.len()
    }

    pub fn has_tau(&self, j: u32) -> bool {
        self.tau.binary_search(&j).is_ok()
    }

    pub fn xi_exponent(&self, j: u32) -> u32 {
        self.xi.get(&j).copied().unwrap_or(0)
    }

    pub fn mul_xi(&self, j: u32, e: u32) -> Monomial {
        let mut m = self.clone();
        if e > 0 {
            *m.xi.entry(j).or_insert(0) += e;
        }
        m
    }

    /// Remove `e` from the exponent of ξ̄_j. Panics if the exponent is short.
    pub fn div_xi(&self, j: u32, e: u32) -> Monomial {
        let mut m = self.clone();
        let cur = m.xi.get_mut(&j).expect("missing xi factor");
        assert!(*cur >= e);
        *cur -= e;
        if *cur == 0 {
            m.xi.remove(&j);
        }
        m
    }

    /// Multiply by τ̄_j. Returns `None` when τ̄_j is already a factor (the
    /// square of an exterior generator is zero) and otherwise the normalized
    /// monomial together with the parity of the reordering sign: τ̄_j is
    /// appended after the existing τ̄ factors and moved left past those with
    /// larger index.
    pub fn mul_tau(&self, j: u32) -> Option<(Monomial, bool)> {
        match self.tau.binary_search(&j) {
            Ok(_) => None,
            Err(pos) => {
                let mut m = self.clone();
                m.tau.insert(pos, j);
                let passed = self.tau.len() - pos;
                Some((m, passed % 2 == 1))
            }
        }
    }

    pub fn div_tau(&self, j: u32) -> Monomial {
        let pos = self.tau.binary_search(&j).expect("missing tau factor");
        let mut m = self.clone();
        m.tau.remove(pos);
        m
    }

    /// Graded product. `None` when a τ̄ factor repeats; otherwise the product
    /// and the parity of the Koszul reordering sign (τ̄-τ̄ transpositions
    /// between the two factors).
    pub fn mul(&self, other: &Monomial) -> Option<(Monomial, bool)> {
        let mut out = self.clone();
        for (&j, &e) in &other.xi {
            *out.xi.entry(j).or_insert(0) += e;
        }
        let mut parity = false;
        for &j in &other.tau {
            let (m, s) = out.mul_tau(j)?;
            out = m;
            parity ^= s;
        }
        Some((out, parity))
    }

    pub fn degree(&self, p: Prime) -> i64 {
        let p = p.get() as i64;
        let xi: i64 = self
            .xi
            .iter()
            .map(|(&j, &e)| e as i64 * 2 * (p.pow(j) - 1))
            .sum();
        let tau: i64 = self.tau.iter().map(|&j| 2 * p.pow(j) - 1).sum();
        xi + tau
    }

    pub fn weight(&self, p: Prime) -> i64 {
        let p = p.get() as i64;
        let xi: i64 = self.xi.iter().map(|(&j, &e)| e as i64 * 2 * p.pow(j)).sum();
        let tau: i64 = self.tau.iter().map(|&j| 2 * p.pow(j)).sum();
        xi + tau
    }

    /// Overflow-aware weight, for validating untrusted input before the plain
    /// arithmetic methods are used.
    pub fn checked_weight(&self, p: Prime) -> Option<i64> {
        let p = p.get() as i64;
        let mut acc = 0i64;
        for (&j, &e) in &self.xi {
            let gen = p.checked_pow(j)?.checked_mul(2)?;
            acc = acc.checked_add(gen.checked_mul(e as i64)?)?;
        }
        for &j in &self.tau {
            acc = acc.checked_add(p.checked_pow(j)?.checked_mul(2)?)?;
        }
        Some(acc)
    }

    /// Parse the plain text form `xi1^18 xi2^3 tau3` (case-insensitive, `^1`
    /// optional, empty string is the unit).
    pub fn parse(text: &str) -> Result<Monomial, MilnorError> {
        let mut m = Monomial::unit();
        for tok in text.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let lower = tok.to_ascii_lowercase();
            let (name, exp) = match lower.split_once('^') {
                Some((n, e)) => {
                    let e: u32 = e
                        .parse()
                        .map_err(|_| MilnorError::Parse(format!("bad exponent in `{tok}`")))?;
                    (n.to_string(), e)
                }
                None => (lower.clone(), 1),
            };
            if let Some(idx) = name.strip_prefix("xi") {
                let j: u32 = idx
                    .parse()
                    .map_err(|_| MilnorError::Parse(format!("bad xi index in `{tok}`")))?;
                if j == 0 {
                    return Err(MilnorError::Parse("xi index must be >= 1".into()));
                }
                m = m.mul_xi(j, exp);
            } else if let Some(idx) = name.strip_prefix("tau") {
                let j: u32 = idx
                    .parse()
                    .map_err(|_| MilnorError::Parse(format!("bad tau index in `{tok}`")))?;
                if exp > 1 {
                    return Err(MilnorError::Parse(format!("tau{j} squared is zero")));
                }
                m = m
                    .mul_tau(j)
                    .ok_or_else(|| MilnorError::Parse(format!("repeated factor tau{j}")))?
                    .0;
            } else {
                return Err(MilnorError::Parse(format!("unknown factor `{tok}`")));
            }
        }
        Ok(m)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unit() {
            return write!(f, "1");
        }
        let mut first = true;
        for (&j, &e) in &self.xi {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if e == 1 {
                write!(f, "xi{j}")?;
            } else {
                write!(f, "xi{j}^{e}")?;
            }
        }
        for &j in &self.tau {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "tau{j}")?;
        }
        Ok(())
    }
}

/// The canonical monomial order: compare τ̄ factors from the largest index
/// down, then ξ̄ exponents from the largest index down. This is the order the
/// division procedure requires, and the single order used for normal forms and
/// leading-term extraction.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        let mut a = self.tau.iter().rev();
        let mut b = other.tau.iter().rev();
        loop {
            match (a.next(), b.next()) {
                (None, None) => break,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(x), Some(y)) => {
                    if x != y {
                        return x.cmp(y);
                    }
                }
            }
        }
        let top = self
            .xi
            .keys()
            .next_back()
            .copied()
            .max(other.xi.keys().next_back().copied());
        if let Some(top) = top {
            for j in (1..=top).rev() {
                let (ea, eb) = (self.xi_exponent(j), other.xi_exponent(j));
                if ea != eb {
                    return ea.cmp(&eb);
                }
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Serialize, Deserialize)]
struct MonomialDoc {
    #[serde(default)]
    xi: BTreeMap<String, u32>,
    #[serde(default)]
    tau: Vec<u32>,
}

impl Serialize for Monomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let doc = MonomialDoc {
            xi: self.xi.iter().map(|(&j, &e)| (j.to_string(), e)).collect(),
            tau: self.tau.clone(),
        };
        doc.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Monomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = MonomialDoc::deserialize(d)?;
        let mut m = Monomial::unit();
        for (j, e) in doc.xi {
            let j: u32 = j.parse().map_err(|_| D::Error::custom("bad xi index"))?;
            if j == 0 {
                return Err(D::Error::custom("xi index must be >= 1"));
            }
            m = m.mul_xi(j, e);
        }
        for j in doc.tau {
            m = m
                .mul_tau(j)
                .ok_or_else(|| D::Error::custom("repeated tau index"))?
                .0;
        }
        Ok(m)
    }
}

/// An F_p-linear combination of dual monomials m*. Zero coefficients are never
/// stored. Homogeneity in (degree, weight) is not forced by the type; it is
/// asserted where operations require it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohomElement {
    p: Prime,
    terms: BTreeMap<Monomial, u32>,
}

impl CohomElement {
    pub fn zero(p: Prime) -> CohomElement {
        CohomElement {
            p,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_monomial(p: Prime, m: Monomial, coeff: u32) -> CohomElement {
        let mut e = CohomElement::zero(p);
        e.add_term(m, coeff);
        e
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> u32 {
        self.terms.get(m).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, u32)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn add_term(&mut self, m: Monomial, coeff: u32) {
        let c = coeff % self.p.get();
        if c == 0 {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = self.p.add(*o.get(), c);
                if s == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &CohomElement, c: u32) {
        for (m, k) in other.iter() {
            self.add_term(m.clone(), self.p.mul(k, c));
        }
    }

    pub fn sub(&mut self, other: &CohomElement) {
        self.add_scaled(other, self.p.neg(1));
    }

    pub fn scale(&mut self, c: u32) {
        let p = self.p;
        let old = std::mem::take(&mut self.terms);
        for (m, k) in old {
            self.add_term(m, p.mul(k, c));
        }
    }

    /// The largest term in the canonical monomial order.
    pub fn leading(&self) -> Option<(&Monomial, u32)> {
        self.terms.iter().next_back().map(|(m, &c)| (m, c))
    }

    /// `(degree, weight)` when every term agrees, `None` otherwise or when zero.
    pub fn bidegree(&self) -> Option<(i64, i64)> {
        let mut it = self.terms.keys();
        let first = it.next()?;
        let bd = (first.degree(self.p), first.weight(self.p));
        for m in it {
            if (m.degree(self.p), m.weight(self.p)) != bd {
                return None;
            }
        }
        Some(bd)
    }
}

impl fmt::Display for CohomElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let p = self.p.get();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            // balanced representative for readability: p - 1 prints as "-"
            let (neg, mag) = if *c > p / 2 {
                (true, p - c)
            } else {
                (false, *c)
            };
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if mag != 1 {
                write!(f, "{mag} ")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

const DIVISION_BUDGET: usize = 100_000;

impl Context {
    pub fn new(p: u32, n: u32) -> Result<Context, MilnorError> {
        Ok(Context {
            prime: Prime::new(p)?,
            n,
        })
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn p(&self) -> u32 {
        self.prime.get()
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    fn check_index(&self, i: u32) -> Result<(), MilnorError> {
        if i > self.n {
            Err(MilnorError::PrimitiveIndex { i, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Generator weight 2p^j.
    fn gen_weight(&self, j: u32) -> i64 {
        2 * (self.p() as i64).pow(j)
    }

    /// All monomials of the module P(ξ̄_1, …) ⊗ E(τ̄_{n+1}, …) of exactly the
    /// given weight, sorted ascending in the canonical order. Empty when the
    /// weight is not attainable (any attainable weight is divisible by 2p).
    pub fn enumerate_basis(&self, w: i64) -> Vec<Monomial> {
        let mut out = Vec::new();
        if w < 0 {
            return out;
        }
        // generators light enough to appear
        let mut xis = Vec::new();
        let mut j = 1;
        while self.gen_weight(j) <= w {
            xis.push(j);
            j += 1;
        }
        let mut taus = Vec::new();
        let mut j = self.n + 1;
        while self.gen_weight(j) <= w {
            taus.push(j);
            j += 1;
        }
        fn recurse(
            ctx: &Context,
            xis: &[u32],
            taus: &[u32],
            rem: i64,
            acc: &Monomial,
            out: &mut Vec<Monomial>,
        ) {
            if rem == 0 {
                out.push(acc.clone());
                return;
            }
            if let Some((&j, rest)) = xis.split_first() {
                let wt = ctx.gen_weight(j);
                let mut e = 0;
                while e as i64 * wt <= rem {
                    recurse(ctx, rest, taus, rem - e as i64 * wt, &acc.mul_xi(j, e), out);
                    e += 1;
                }
            } else if let Some((&j, rest)) = taus.split_first() {
                recurse(ctx, &[], rest, rem, acc, out);
                let wt = ctx.gen_weight(j);
                if wt <= rem {
                    let (m, _) = acc.mul_tau(j).expect("fresh tau index");
                    recurse(ctx, &[], rest, rem - wt, &m, out);
                }
            }
        }
        recurse(self, &xis, &taus, w, &Monomial::unit(), &mut out);
        out.sort();
        out
    }

    /// Terms of the coproduct of a single generator, as (left, right) pairs
    /// with coefficient 1: ψ(ξ̄_k) = Σ ξ̄_i ⊗ ξ̄_{k-i}^{p^i} and
    /// ψ(τ̄_k) = 1 ⊗ τ̄_k + Σ τ̄_i ⊗ ξ̄_{k-i}^{p^i}.
    fn coproduct_xi(&self, k: u32) -> Vec<(Monomial, Monomial)> {
        let p = self.p();
        (0..=k)
            .map(|i| {
                let left = if i == 0 {
                    Monomial::unit()
                } else {
                    Monomial::unit().mul_xi(i, 1)
                };
                let right = if i == k {
                    Monomial::unit()
                } else {
                    Monomial::unit().mul_xi(k - i, p.pow(i))
                };
                (left, right)
            })
            .collect()
    }

    fn coproduct_tau(&self, k: u32) -> Vec<(Monomial, Monomial)> {
        let p = self.p();
        let mut terms = vec![(Monomial::unit(), Monomial::unit().mul_tau(k).unwrap().0)];
        for i in 0..=k {
            let left = Monomial::unit().mul_tau(i).unwrap().0;
            let right = if i == k {
                Monomial::unit()
            } else {
                Monomial::unit().mul_xi(k - i, p.pow(i))
            };
            terms.push((left, right));
        }
        terms
    }

    /// The full left coaction ψ_L(m) ∈ A_* ⊗ H_*, by multiplying the factor
    /// coproducts with the Koszul sign (a⊗x)(b⊗y) = (-1)^{|x||b|} ab ⊗ xy.
    /// Exponential in principle, fine at desk scale; this is the oracle route,
    /// deliberately independent of the combinatorial rule in `q_action`.
    pub fn left_coaction(&self, m: &Monomial) -> BTreeMap<(Monomial, Monomial), u32> {
        let p = self.prime;
        let mut acc: BTreeMap<(Monomial, Monomial), u32> = BTreeMap::new();
        acc.insert((Monomial::unit(), Monomial::unit()), 1);
        let multiply = |acc: &mut BTreeMap<(Monomial, Monomial), u32>,
                        factor: &[(Monomial, Monomial)]| {
            let mut next: BTreeMap<(Monomial, Monomial), u32> = BTreeMap::new();
            for ((l, r), &c) in acc.iter() {
                for (fl, fr) in factor {
                    // (l ⊗ r)(fl ⊗ fr) = (-1)^{|r||fl|} l·fl ⊗ r·fr
                    let koszul = (r.tau_count() % 2 == 1) && (fl.tau_count() % 2 == 1);
                    let Some((nl, s1)) = l.mul(fl) else { continue };
                    let Some((nr, s2)) = r.mul(fr) else { continue };
                    let parity = (koszul as u32 + s1 as u32 + s2 as u32) % 2;
                    let coeff = p.mul(c, p.sign(parity));
                    let entry = next.entry((nl, nr)).or_insert(0);
                    *entry = p.add(*entry, coeff);
                }
            }
            next.retain(|_, c| *c != 0);
            *acc = next;
        };
        for (&j, &e) in &m.xi {
            let factor = self.coproduct_xi(j);
            for _ in 0..e {
                multiply(&mut acc, &factor);
            }
        }
        for &j in &m.tau {
            let factor = self.coproduct_tau(j);
            multiply(&mut acc, &factor);
        }
        acc
    }

    /// The τ̄_i-isotypic left component of ψ_L(m): the map m' ↦ c where ψ_L(m)
    /// contains c · (τ̄_i ⊗ m'), with ⟨Q_i, τ̄_i⟩ normalized to +1.
    pub fn coaction_tau_component(
        &self,
        i: u32,
        m: &Monomial,
    ) -> Result<BTreeMap<Monomial, u32>, MilnorError> {
        self.check_index(i)?;
        let want = Monomial::unit().mul_tau(i).unwrap().0;
        Ok(self
            .left_coaction(m)
            .into_iter()
            .filter(|((l, _), _)| *l == want)
            .map(|((_, r), c)| (r, c))
            .collect())
    }

    /// Q_i on a single dual monomial m*, by the combinatorial rule: for each
    /// factor ξ̄_j^{p^i} replace it by τ̄_{j+i} and dualize. Terms where
    /// τ̄_{j+i} is already present, or where j+i ≤ n (outside the module), are
    /// dropped. The sign of each term is (-1)^k with k the number of τ̄
    /// factors of m of index larger than j+i.
    fn q_action_monomial(&self, i: u32, m: &Monomial) -> Vec<(Monomial, u32)> {
        let p = self.prime;
        let power = self.p().pow(i);
        let mut out = Vec::new();
        for (&j, &e) in &m.xi {
            if e < power {
                continue;
            }
            let target = j + i;
            if target <= self.n || m.has_tau(target) {
                continue;
            }
            let larger = m.tau.iter().filter(|&&a| a > target).count() as u32;
            let (u, _) = m.div_xi(j, power).mul_tau(target).expect("fresh tau");
            out.push((u, p.sign(larger)));
        }
        out
    }

    /// The action of the Milnor primitive Q_i on an element of H^*(BP⟨n⟩),
    /// extended linearly. Preserves weight and lowers the homological degree
    /// bookkeeping by 2p^i - 1.
    pub fn q_action(&self, i: u32, x: &CohomElement) -> Result<CohomElement, MilnorError> {
        self.check_index(i)?;
        let mut out = CohomElement::zero(self.prime);
        for (m, c) in x.iter() {
            for (u, s) in self.q_action_monomial(i, m) {
                out.add_term(u, self.prime.mul(c, s));
            }
        }
        Ok(out)
    }

    pub fn q_action_dual(&self, i: u32, m: &Monomial) -> Result<CohomElement, MilnorError> {
        self.q_action(i, &CohomElement::from_monomial(self.prime, m.clone(), 1))
    }

    /// Divide by Q_i: given a homogeneous x* of odd degree with Q_i·x* = 0,
    /// produce some y* with Q_i·y* = x*, by the greedy loop on the canonical
    /// order: take the largest monomial x_1 with largest τ̄ factor τ̄_a, emit
    /// y_1 = x_1/τ̄_a · ξ̄_{a-i}^{p^i}, subtract Q_i·y_1*, iterate.
    pub fn divide(&self, i: u32, x: &CohomElement) -> Result<CohomElement, MilnorError> {
        self.divide_with_budget(i, x, DIVISION_BUDGET)
    }

    pub fn divide_with_budget(
        &self,
        i: u32,
        x: &CohomElement,
        budget: usize,
    ) -> Result<CohomElement, MilnorError> {
        self.check_index(i)?;
        if x.is_zero() {
            return Ok(CohomElement::zero(self.prime));
        }
        let (deg, _) = x.bidegree().ok_or(MilnorError::NotHomogeneous)?;
        if deg % 2 == 0 {
            return Err(MilnorError::EvenDegree(deg));
        }
        if !self.q_action(i, x)?.is_zero() {
            return Err(MilnorError::NotAnnihilated(i));
        }
        let mut rem = x.clone();
        let mut result = CohomElement::zero(self.prime);
        let mut last_leading: Option<Monomial> = None;
        for _ in 0..budget {
            let Some((m, c)) = rem.leading() else {
                return Ok(result);
            };
            let m = m.clone();
            // the loop invariant from the termination argument
            if let Some(prev) = &last_leading {
                debug_assert!(m < *prev, "leading monomial must strictly decrease");
            }
            let &a = m
                .tau_indices()
                .last()
                .expect("odd-degree monomial has a tau factor");
            let y1 = m.div_tau(a).mul_xi(a - i, self.p().pow(i));
            let q_y1 = self.q_action_dual(i, &y1)?;
            debug_assert_eq!(q_y1.coeff(&m), 1, "leading replacement has coefficient 1");
            result.add_term(y1, c);
            let mut correction = q_y1;
            correction.scale(c);
            rem.sub(&correction);
            last_leading = Some(m);
        }
        Err(MilnorError::DivisionBudget(budget))
    }
}
