//! The Koszul chain complex M = H^*(BP⟨n⟩)[v_0,…,v_n] with differential
//! d(x*) = Σ Q_i(x*)·v_i, one weight at a time.
//!
//! The direction-i differential multiplies by v_i and applies Q_i, so the
//! complex is an (n+1)-multicomplex whose i-th grading is the v_i-exponent.
//! v_i sits in bidegree (s, t) = (1, 2p^i - 1); a cell v^r·m* has filtration
//! s = Σ r_i, internal degree t = Σ r_i(2p^i - 1) - degree(m), and stem
//! t - s = Σ r_i(2p^i - 2) - degree(m), so v_0 contributes nothing to the
//! stem. The homology of the total complex in weight w is
//! Ext_{E_n}^{s,t}(F_p, H^*(BP⟨n⟩)[w]).
//!
//! Truncation: cells are stored one filtration level past `s_max`, without
//! outgoing differentials, so kernels at s = s_max are exact and homology is
//! reported for s ≤ s_max with no edge-uncertain spots.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::chart::{ChartKey, ExtChart};
use crate::fp::{FpVector, Prime, RowSpace};
use crate::milnor::{CohomElement, Context, MilnorError, Monomial};
use crate::multicomplex::{
    ComplexError, DivisionStrategy, Multicomplex, MulticomplexBuilder, SparseElem,
};

#[derive(Debug, Error)]
pub enum KoszulError {
    #[error(transparent)]
    Milnor(#[from] MilnorError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("element mixes weights {0} and {1}; the complex splits by weight")]
    MixedWeight(i64, i64),
    #[error("element reaches filtration {0}, beyond the stored window {1}")]
    OutsideWindow(i64, i64),
    #[error("order must be a permutation of the directions 0..={0}")]
    BadOrder(u32),
    #[error("element parse error: {0}")]
    Parse(String),
}

/// An F_p-linear combination of terms v^r · m*. The v-exponent vector has one
/// entry per direction 0..=n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KoszulElement {
    p: Prime,
    n: u32,
    terms: BTreeMap<(Vec<u32>, Monomial), u32>,
}

impl KoszulElement {
    pub fn zero(ctx: &Context) -> KoszulElement {
        KoszulElement {
            p: ctx.prime(),
            n: ctx.n(),
            terms: BTreeMap::new(),
        }
    }

    pub fn term(ctx: &Context, v_exp: &[u32], m: Monomial, coeff: u32) -> KoszulElement {
        let mut e = KoszulElement::zero(ctx);
        e.add_term(v_exp, m, coeff);
        e
    }

    pub fn add_term(&mut self, v_exp: &[u32], m: Monomial, coeff: u32) {
        assert_eq!(v_exp.len(), self.n as usize + 1, "v-exponent arity");
        let c = coeff % self.p.get();
        if c == 0 {
            return;
        }
        let key = (v_exp.to_vec(), m);
        match self.terms.entry(key) {
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

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], &Monomial, u32)> {
        self.terms.iter().map(|((r, m), &c)| (&r[..], m, c))
    }

    /// Common weight of all terms, if homogeneous; `None` for zero or mixed.
    pub fn weight(&self) -> Option<i64> {
        let mut it = self.terms.keys();
        let w = it.next().map(|(_, m)| m.weight(self.p))?;
        for (_, m) in it {
            if m.weight(self.p) != w {
                return None;
            }
        }
        Some(w)
    }

    /// Largest filtration Σ r_i over the terms.
    pub fn max_filtration(&self) -> i64 {
        self.terms
            .keys()
            .map(|(r, _)| r.iter().map(|&x| x as i64).sum())
            .max()
            .unwrap_or(0)
    }

    /// Parse `v0^2 v1 * xi1^18 tau3`, and signed sums of such terms. A term
    /// without generator factors (`v0^2` or `v0^2 * 1`) is a v-monomial times
    /// the unit.
    pub fn parse(ctx: &Context, text: &str) -> Result<KoszulElement, KoszulError> {
        let mut out = KoszulElement::zero(ctx);
        let text = text.trim();
        if text.is_empty() || text == "0" {
            return Ok(out);
        }
        for (negative, term) in split_terms(text) {
            let mut coeff: i64 = 1;
            let mut v_exp = vec![0u32; ctx.n() as usize + 1];
            let mut mono = Monomial::unit();
            for tok in term
                .split(['*', ' '])
                .map(str::trim)
                .filter(|t| !t.is_empty())
            {
                let lower = tok.to_ascii_lowercase();
                if let Ok(k) = lower.parse::<i64>() {
                    coeff *= k;
                } else if let Some(rest) = lower.strip_prefix('v') {
                    let (idx, exp) = match rest.split_once('^') {
                        Some((i, e)) => (
                            i.parse::<usize>()
                                .map_err(|_| KoszulError::Parse(format!("bad v index `{tok}`")))?,
                            e.parse::<u32>()
                                .map_err(|_| KoszulError::Parse(format!("bad exponent `{tok}`")))?,
                        ),
                        None => (
                            rest.parse::<usize>()
                                .map_err(|_| KoszulError::Parse(format!("bad v index `{tok}`")))?,
                            1,
                        ),
                    };
                    if idx > ctx.n() as usize {
                        return Err(KoszulError::Parse(format!(
                            "v{idx} out of range for height {}",
                            ctx.n()
                        )));
                    }
                    v_exp[idx] += exp;
                } else {
                    let factor = Monomial::parse(&lower)?;
                    mono = mono
                        .mul(&factor)
                        .ok_or_else(|| KoszulError::Parse(format!("repeated tau in `{term}`")))?
                        .0;
                }
            }
            if mono.checked_weight(ctx.prime()).is_none() {
                return Err(KoszulError::Parse(format!(
                    "generator indices in `{term}` are out of range"
                )));
            }
            let c = ctx.prime().reduce(if negative { -coeff } else { coeff });
            out.add_term(&v_exp, mono, c);
        }
        Ok(out)
    }
}

impl fmt::Display for KoszulElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let p = self.p.get();
        for (i, ((r, m), &c)) in self.terms.iter().enumerate() {
            let (neg, mag) = if c > p / 2 { (true, p - c) } else { (false, c) };
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
            let mut wrote_v = false;
            for (idx, &e) in r.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if wrote_v {
                    write!(f, " ")?;
                }
                wrote_v = true;
                if e == 1 {
                    write!(f, "v{idx}")?;
                } else {
                    write!(f, "v{idx}^{e}")?;
                }
            }
            if wrote_v {
                write!(f, " * {m}")?;
            } else {
                write!(f, "{m}")?;
            }
        }
        Ok(())
    }
}

fn split_terms(s: &str) -> Vec<(bool, String)> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut negative = false;
    let mut seen = false;
    for ch in s.chars() {
        match ch {
            '+' | '-' if seen => {
                if !current.trim().is_empty() {
                    out.push((negative, std::mem::take(&mut current)));
                }
                negative = ch == '-';
            }
            '-' => {
                negative = true;
                seen = true;
            }
            _ => {
                if !ch.is_whitespace() {
                    seen = true;
                }
                current.push(ch);
            }
        }
    }
    if !current.trim().is_empty() {
        out.push((negative, current));
    }
    out
}

/// The realized weight-w piece of the Koszul complex, with the cell metadata
/// needed to move between [`KoszulElement`] and the multicomplex.
pub struct WeightComplex {
    ctx: Context,
    weight: i64,
    s_max: i64,
    mc: Multicomplex,
    cells: Vec<(Vec<u32>, Monomial)>,
    index: BTreeMap<(Vec<u32>, Monomial), usize>,
    basis: Vec<Monomial>,
}

/// v-exponent vectors with Σ r_i = s, in ascending lexicographic order.
fn v_monomials(dirs: usize, s: i64) -> Vec<Vec<u32>> {
    fn recurse(dirs: usize, rem: i64, acc: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if dirs == 1 {
            let mut v = acc.clone();
            v.push(rem as u32);
            out.push(v);
            return;
        }
        for e in 0..=rem {
            acc.push(e as u32);
            recurse(dirs - 1, rem - e, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    recurse(dirs, s, &mut Vec::new(), &mut out);
    out
}

impl WeightComplex {
    /// Build the weight-w complex truncated at filtration `s_max`. Cells at
    /// s_max + 1 are stored as differential targets only.
    pub fn build(ctx: &Context, w: i64, s_max: i64) -> Result<WeightComplex, KoszulError> {
        assert!(w >= 0 && s_max >= 0);
        let p = ctx.prime();
        let n = ctx.n() as usize;
        let basis = ctx.enumerate_basis(w);
        let mut builder = MulticomplexBuilder::new(p, n + 1, 2);
        let mut cells = Vec::new();
        let mut index = BTreeMap::new();
        for s in 0..=(s_max + 1) {
            for r in v_monomials(n + 1, s) {
                let t_v: i64 = r
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| e as i64 * (2 * (p.get() as i64).pow(i as u32) - 1))
                    .sum();
                for m in &basis {
                    let t = t_v - m.degree(p);
                    let grading: Vec<i64> = r.iter().map(|&e| e as i64).collect();
                    let name = format!("{}", KoszulElement::term(ctx, &r, m.clone(), 1));
                    let id = builder.cell(name, grading, vec![t, w]);
                    index.insert((r.clone(), m.clone()), id);
                    cells.push((r.clone(), m.clone()));
                }
            }
        }
        // differentials for sources within the window
        for (id, (r, m)) in cells.iter().enumerate() {
            let s: i64 = r.iter().map(|&e| e as i64).sum();
            if s > s_max {
                continue;
            }
            for i in 0..=ctx.n() {
                let image = ctx.q_action_dual(i, m)?;
                if image.is_zero() {
                    continue;
                }
                let mut shifted = r.clone();
                shifted[i as usize] += 1;
                let targets: Vec<(usize, u32)> = image
                    .iter()
                    .map(|(u, c)| (index[&(shifted.clone(), u.clone())], c))
                    .collect();
                builder.diff(i as usize, id, &targets);
            }
        }
        builder.window(s_max);
        Ok(WeightComplex {
            ctx: *ctx,
            weight: w,
            s_max,
            mc: builder.build(),
            cells,
            index,
            basis,
        })
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn s_max(&self) -> i64 {
        self.s_max
    }

    pub fn multicomplex(&self) -> &Multicomplex {
        &self.mc
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    pub fn encode(&self, e: &KoszulElement) -> Result<SparseElem, KoszulError> {
        let mut out = SparseElem::zero();
        for (r, m, c) in e.iter() {
            let w = m.weight(self.ctx.prime());
            if w != self.weight {
                return Err(KoszulError::MixedWeight(self.weight, w));
            }
            let s: i64 = r.iter().map(|&x| x as i64).sum();
            if s > self.s_max + 1 {
                return Err(KoszulError::OutsideWindow(s, self.s_max));
            }
            let id = self.index[&(r.to_vec(), m.clone())];
            out.add_term(self.ctx.prime(), id, c);
        }
        Ok(out)
    }

    pub fn decode(&self, e: &SparseElem) -> KoszulElement {
        let mut out = KoszulElement::zero(&self.ctx);
        for (cell, c) in e.iter() {
            let (r, m) = &self.cells[cell];
            out.add_term(r, m.clone(), c);
        }
        out
    }

    /// Multiplication by v_i as a chain map on elements.
    pub fn v_mult(&self, i: u32, e: &SparseElem) -> Result<SparseElem, KoszulError> {
        let mut out = SparseElem::zero();
        for (cell, c) in e.iter() {
            let (r, m) = &self.cells[cell];
            let mut shifted = r.clone();
            shifted[i as usize] += 1;
            let Some(&id) = self.index.get(&(shifted, m.clone())) else {
                let s: i64 = r.iter().map(|&x| x as i64).sum();
                return Err(KoszulError::OutsideWindow(s + 1, self.s_max));
            };
            out.add_term(self.ctx.prime(), id, c);
        }
        Ok(out)
    }
}

/// The canonical preimage choice: strip one v_k and divide the cohomology
/// part by Q_k via the greedy leading-term loop.
pub struct CanonicalStrategy<'a> {
    wc: &'a WeightComplex,
}

impl<'a> CanonicalStrategy<'a> {
    pub fn new(wc: &'a WeightComplex) -> CanonicalStrategy<'a> {
        CanonicalStrategy { wc }
    }
}

impl DivisionStrategy for CanonicalStrategy<'_> {
    fn preimage(
        &self,
        _mc: &Multicomplex,
        direction: usize,
        boundary: &SparseElem,
    ) -> Result<SparseElem, ComplexError> {
        if boundary.is_zero() {
            return Ok(SparseElem::zero());
        }
        let ctx = self.wc.context();
        let p = ctx.prime();
        let decoded = self.wc.decode(boundary);
        // a homogeneous component shares one v-multidegree
        let mut v_exp: Option<Vec<u32>> = None;
        let mut cohom = CohomElement::zero(p);
        for (r, m, c) in decoded.iter() {
            match &v_exp {
                None => v_exp = Some(r.to_vec()),
                Some(prev) => {
                    if prev != r {
                        return Err(ComplexError::Strategy(
                            "canonical strategy needs a single v-multidegree".into(),
                        ));
                    }
                }
            }
            cohom.add_term(m.clone(), c);
        }
        let mut v_exp = v_exp.unwrap();
        if v_exp[direction] == 0 {
            return Err(ComplexError::Strategy(format!(
                "no v{direction} factor to strip; element is not a d^{direction}-boundary"
            )));
        }
        v_exp[direction] -= 1;
        let divided = ctx
            .divide(direction as u32, &cohom)
            .map_err(|e| ComplexError::Strategy(e.to_string()))?;
        let mut out = KoszulElement::zero(ctx);
        for (m, c) in divided.iter() {
            out.add_term(&v_exp, m.clone(), c);
        }
        self.wc
            .encode(&out)
            .map_err(|e| ComplexError::Strategy(e.to_string()))
    }
}

/// A step-by-step record of the representative algorithm on Koszul elements.
#[derive(Debug, Clone)]
pub struct KoszulTrace {
    pub start: KoszulElement,
    pub steps: Vec<KoszulTraceStep>,
    pub result: KoszulElement,
}

#[derive(Debug, Clone)]
pub struct KoszulTraceStep {
    pub direction: usize,
    /// `(component, witness a, state after the substitution)` per substitution.
    pub substitutions: Vec<(KoszulElement, KoszulElement, KoszulElement)>,
    pub output: KoszulElement,
}

impl KoszulTrace {
    /// Every element state the algorithm passed through, in order: the start,
    /// then the state after each substitution.
    pub fn states(&self) -> Vec<KoszulElement> {
        let mut out = vec![self.start.clone()];
        for step in &self.steps {
            for (_, _, after) in &step.substitutions {
                out.push(after.clone());
            }
        }
        out
    }
}

/// Run the representative algorithm on a Koszul element with the canonical
/// division strategy. The default order processes direction n first and
/// direction 0 last.
pub fn run_trace(
    ctx: &Context,
    start: &KoszulElement,
    order: Option<&[usize]>,
) -> Result<KoszulTrace, KoszulError> {
    let n = ctx.n() as usize;
    let default_order: Vec<usize> = (0..=n).rev().collect();
    let order = order.unwrap_or(&default_order);
    {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..=n).collect::<Vec<_>>() {
            return Err(KoszulError::BadOrder(ctx.n()));
        }
    }
    if start.is_zero() {
        return Ok(KoszulTrace {
            start: start.clone(),
            steps: order
                .iter()
                .map(|&d| KoszulTraceStep {
                    direction: d,
                    substitutions: vec![],
                    output: start.clone(),
                })
                .collect(),
            result: start.clone(),
        });
    }
    let w = start.weight().ok_or(KoszulError::MixedWeight(-1, -1))?;
    let s_max = start.max_filtration();
    let wc = WeightComplex::build(ctx, w, s_max)?;
    let encoded = wc.encode(start)?;
    let strategy = CanonicalStrategy::new(&wc);
    let (result, trace) = wc
        .mc
        .improve_representative(&encoded, order, &strategy, None)?;
    let steps = trace
        .steps
        .iter()
        .map(|s| KoszulTraceStep {
            direction: s.direction,
            substitutions: s
                .substitutions
                .iter()
                .map(|sub| {
                    (
                        wc.decode(&sub.component),
                        wc.decode(&sub.witness),
                        wc.decode(&sub.after),
                    )
                })
                .collect(),
            output: wc.decode(&s.output),
        })
        .collect();
    Ok(KoszulTrace {
        start: start.clone(),
        steps,
        result: wc.decode(&result),
    })
}

/// A boundary span together with an element vector expressed at the same spot.
type BoundaryTest = (RowSpace, FpVector);

/// Homology of one weight piece of the total complex, with representatives,
/// keyed by (s, t).
pub struct WeightHomology {
    pub weight: i64,
    pub s_max: i64,
    pub spots: BTreeMap<(i64, i64), SpotClasses>,
    wc: WeightComplex,
}

pub struct SpotClasses {
    pub dim: usize,
    pub reps: Vec<SparseElem>,
    /// Boundary span at the spot, for class-membership tests.
    boundaries: RowSpace,
    cells: Vec<usize>,
}

impl WeightHomology {
    pub fn compute(ctx: &Context, w: i64, s_max: i64) -> Result<WeightHomology, KoszulError> {
        let wc = WeightComplex::build(ctx, w, s_max)?;
        let dirs: Vec<usize> = (0..=ctx.n() as usize).collect();
        let hom = wc.mc.partial_homology(&dirs)?;
        let mut spots = BTreeMap::new();
        for (spot, sh) in &hom.spots {
            let (s, t) = (spot.level, spot.aux[0]);
            // recompute the boundary span for membership tests
            let cells: Vec<usize> = (0..wc.mc.cell_count())
                .filter(|&c| wc.mc.total_grading(c) == s && wc.mc.aux(c)[0] == t)
                .collect();
            let index: BTreeMap<usize, usize> =
                cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
            let mut boundaries = RowSpace::new(ctx.prime(), cells.len());
            for src in 0..wc.mc.cell_count() {
                if wc.mc.total_grading(src) != s - 1 || wc.mc.aux(src)[0] != t {
                    continue;
                }
                let image = wc.mc.apply_dirs(&dirs, &SparseElem::from_cell(src, 1));
                if image.is_zero() {
                    continue;
                }
                let mut v = FpVector::zero(ctx.prime(), cells.len());
                for (cell, c) in image.iter() {
                    v.set_entry(index[&cell], c);
                }
                boundaries.insert(&v);
            }
            spots.insert(
                (s, t),
                SpotClasses {
                    dim: sh.dim,
                    reps: sh.reps.clone(),
                    boundaries,
                    cells,
                },
            );
        }
        Ok(WeightHomology {
            weight: w,
            s_max,
            spots,
            wc,
        })
    }

    pub fn complex(&self) -> &WeightComplex {
        &self.wc
    }

    /// Whether a cycle at (s, t) is a boundary of the total differential.
    pub fn class_is_zero(&self, s: i64, t: i64, e: &SparseElem) -> bool {
        match self.spots.get(&(s, t)) {
            None => {
                // no homology at the spot: either no cycles or all boundaries
                let Some(sc) = self.spot_vector_anywhere(s, t, e) else {
                    return e.is_zero();
                };
                sc.0.contains(&sc.1)
            }
            Some(spot) => {
                let index: BTreeMap<usize, usize> = spot
                    .cells
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| (c, i))
                    .collect();
                let mut v = FpVector::zero(self.wc.ctx.prime(), spot.cells.len());
                for (cell, c) in e.iter() {
                    match index.get(&cell) {
                        Some(&i) => v.set_entry(i, c),
                        None => return false,
                    }
                }
                spot.boundaries.contains(&v)
            }
        }
    }

    fn spot_vector_anywhere(&self, s: i64, t: i64, e: &SparseElem) -> Option<BoundaryTest> {
        let ctx = &self.wc.ctx;
        let dirs: Vec<usize> = (0..=ctx.n() as usize).collect();
        let cells: Vec<usize> = (0..self.wc.mc.cell_count())
            .filter(|&c| self.wc.mc.total_grading(c) == s && self.wc.mc.aux(c)[0] == t)
            .collect();
        if cells.is_empty() {
            return None;
        }
        let index: BTreeMap<usize, usize> =
            cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut boundaries = RowSpace::new(ctx.prime(), cells.len());
        for src in 0..self.wc.mc.cell_count() {
            if self.wc.mc.total_grading(src) != s - 1 || self.wc.mc.aux(src)[0] != t {
                continue;
            }
            let image = self.wc.mc.apply_dirs(&dirs, &SparseElem::from_cell(src, 1));
            if image.is_zero() {
                continue;
            }
            let mut v = FpVector::zero(ctx.prime(), cells.len());
            for (cell, c) in image.iter() {
                v.set_entry(index[&cell], c);
            }
            boundaries.insert(&v);
        }
        let mut v = FpVector::zero(ctx.prime(), cells.len());
        for (cell, c) in e.iter() {
            v.set_entry(*index.get(&cell)?, c);
        }
        Some((boundaries, v))
    }

    /// Certified v_i-multiplications between homology classes: the set of
    /// (s, stem, i) where v_i times some class at (s, stem) is nonzero in
    /// homology. Only spots with both ends inside the window are considered.
    pub fn v_lines(&self) -> Vec<VLine> {
        let ctx = &self.wc.ctx;
        let p = ctx.p() as i64;
        let mut out = Vec::new();
        for (&(s, t), spot) in &self.spots {
            for i in 0..=ctx.n() {
                let (s2, t2) = (s + 1, t + 2 * p.pow(i) - 1);
                if s2 > self.s_max {
                    continue;
                }
                let nonzero = spot.reps.iter().any(|rep| match self.wc.v_mult(i, rep) {
                    Ok(image) => !self.class_is_zero(s2, t2, &image),
                    Err(_) => false,
                });
                if nonzero {
                    out.push((s, t - s, i));
                }
            }
        }
        out
    }
}

/// Weights 0, 2p, 4p, … up to and including w_max.
pub fn weights_up_to(ctx: &Context, w_max: i64) -> Vec<i64> {
    (0..=w_max).step_by(2 * ctx.p() as usize).collect()
}

/// The Ext chart over all weights ≤ w_max: homology dimensions of the weight
/// complexes indexed by (w, s, stem). The weight-0 row is the free polynomial
/// count; every other row is an exact homology computation for s ≤ s_max.
pub fn ext_chart(ctx: &Context, w_max: i64, s_max: i64) -> Result<ExtChart, KoszulError> {
    let mut chart = ExtChart::new(ctx.p(), ctx.n(), w_max, s_max);
    for w in weights_up_to(ctx, w_max) {
        let hom = WeightHomology::compute(ctx, w, s_max)?;
        for (&(s, t), spot) in &hom.spots {
            chart.insert(ChartKey { w, s, stem: t - s }, spot.dim);
        }
    }
    Ok(chart)
}

/// A certified v_i-multiplication between chart classes: (s, stem, i).
pub type VLine = (i64, i64, u32);

/// Chart plus the certified v_i-multiplication lines, for rendering.
pub fn ext_chart_with_structure(
    ctx: &Context,
    w_max: i64,
    s_max: i64,
) -> Result<(ExtChart, Vec<VLine>), KoszulError> {
    let mut chart = ExtChart::new(ctx.p(), ctx.n(), w_max, s_max);
    let mut lines = Vec::new();
    for w in weights_up_to(ctx, w_max) {
        let hom = WeightHomology::compute(ctx, w, s_max)?;
        for (&(s, t), spot) in &hom.spots {
            chart.insert(ChartKey { w, s, stem: t - s }, spot.dim);
        }
        lines.extend(hom.v_lines());
    }
    lines.sort_unstable();
    lines.dedup();
    Ok((chart, lines))
}

/// A single violation found by one of the theorem-level verifications.
#[derive(Debug, Clone)]
pub struct Violation {
    pub weight: i64,
    pub s: i64,
    pub stem: i64,
    pub dim: usize,
    pub representative: Option<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "w={} s={} stem={} dim={}",
            self.weight, self.s, self.stem, self.dim
        )?;
        if let Some(rep) = &self.representative {
            write!(f, " represented by {rep}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub description: String,
    pub checked_weights: usize,
    pub violations: Vec<Violation>,
    /// Tower checks that ran out of window before resolving.
    pub inconclusive: Vec<Violation>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {} ({} weights checked)",
            self.description,
            if self.passed() { "pass" } else { "FAIL" },
            self.checked_weights
        )?;
        for v in &self.violations {
            writeln!(f, "  violation: {v}")?;
        }
        for v in &self.inconclusive {
            writeln!(f, "  inconclusive at window edge: {v}")?;
        }
        Ok(())
    }
}

/// Assert that the homology vanishes in stem -1 for every s ≤ s_max and every
/// weight ≤ w_max. Violations carry explicit cycle representatives.
pub fn verify_stem_minus_one(
    ctx: &Context,
    w_max: i64,
    s_max: i64,
) -> Result<VerifyReport, KoszulError> {
    let mut report = VerifyReport {
        description: format!(
            "stem -1 vanishing (p={}, n={}, w<={}, s<={})",
            ctx.p(),
            ctx.n(),
            w_max,
            s_max
        ),
        ..Default::default()
    };
    for w in weights_up_to(ctx, w_max) {
        report.checked_weights += 1;
        let hom = WeightHomology::compute(ctx, w, s_max)?;
        for (&(s, t), spot) in &hom.spots {
            if t - s == -1 {
                let rep = spot
                    .reps
                    .first()
                    .map(|r| hom.complex().decode(r).to_string());
                report.violations.push(Violation {
                    weight: w,
                    s,
                    stem: -1,
                    dim: spot.dim,
                    representative: rep,
                });
            }
        }
    }
    Ok(report)
}

/// Assert that every nonzero class in an odd stem satisfies
/// stem ≤ 1 - 4p^n within the window.
pub fn verify_odd_stem_bound(
    ctx: &Context,
    w_max: i64,
    s_max: i64,
) -> Result<VerifyReport, KoszulError> {
    let bound = 1 - 4 * (ctx.p() as i64).pow(ctx.n());
    let mut report = VerifyReport {
        description: format!(
            "odd-stem bound stem <= {bound} (p={}, n={}, w<={}, s<={})",
            ctx.p(),
            ctx.n(),
            w_max,
            s_max
        ),
        ..Default::default()
    };
    for w in weights_up_to(ctx, w_max) {
        report.checked_weights += 1;
        let hom = WeightHomology::compute(ctx, w, s_max)?;
        for (&(s, t), spot) in &hom.spots {
            let stem = t - s;
            if stem.rem_euclid(2) == 1 && stem > bound {
                let rep = spot
                    .reps
                    .first()
                    .map(|r| hom.complex().decode(r).to_string());
                report.violations.push(Violation {
                    weight: w,
                    s,
                    stem,
                    dim: spot.dim,
                    representative: rep,
                });
            }
        }
    }
    Ok(report)
}

/// Truncated-window proxy for the absence of infinite v_i-towers in odd
/// stems: every odd-stem class must be annihilated by some v_i-power inside
/// the window. Classes still alive when the window ends are reported as
/// inconclusive rather than failing; an honest check of the untruncated
/// statement is out of reach at desk scale.
pub fn verify_no_odd_towers(
    ctx: &Context,
    w: i64,
    s_max: i64,
) -> Result<VerifyReport, KoszulError> {
    let mut report = VerifyReport {
        description: format!(
            "odd-stem v-power annihilation (p={}, n={}, w={}, s<={})",
            ctx.p(),
            ctx.n(),
            w,
            s_max
        ),
        checked_weights: 1,
        ..Default::default()
    };
    let hom = WeightHomology::compute(ctx, w, s_max)?;
    let p = ctx.p() as i64;
    for (&(s, t), spot) in &hom.spots {
        let stem = t - s;
        if stem.rem_euclid(2) != 1 {
            continue;
        }
        for i in 0..=ctx.n() {
            for rep in &spot.reps {
                let mut current = rep.clone();
                let mut cs = s;
                let mut ct = t;
                let mut annihilated = false;
                while cs < s_max {
                    let image = match hom.complex().v_mult(i, &current) {
                        Ok(im) => im,
                        Err(_) => break,
                    };
                    cs += 1;
                    ct += 2 * p.pow(i) - 1;
                    if hom.class_is_zero(cs, ct, &image) {
                        annihilated = true;
                        break;
                    }
                    current = image;
                }
                let entry = Violation {
                    weight: w,
                    s,
                    stem,
                    dim: spot.dim,
                    representative: Some(format!("v{i}-tower on {}", hom.complex().decode(rep))),
                };
                if !annihilated {
                    report.inconclusive.push(entry);
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u32, n: u32) -> Context {
        Context::new(p, n).unwrap()
    }

    fn ke(c: &Context, s: &str) -> KoszulElement {
        KoszulElement::parse(c, s).unwrap()
    }

    #[test]
    fn parse_and_display_round_trip() {
        let c = ctx(3, 2);
        let e = ke(&c, "v0^2 v1 * xi1^18 tau3");
        assert_eq!(e.to_string(), "v0^2 v1 * xi1^18 tau3");
        let back = KoszulElement::parse(&c, &e.to_string()).unwrap();
        assert_eq!(back, e);

        // terms print in ascending v-exponent order
        let signed = ke(&c, "- v0^2 v2 * xi1^9 xi2^3 tau3 + 2 v1 * xi3^2 tau3");
        assert_eq!(
            signed.to_string(),
            "-v1 * xi3^2 tau3 - v0^2 v2 * xi1^9 xi2^3 tau3"
        );

        assert!(ke(&c, "0").is_zero());
        assert!(ke(&c, "").is_zero());
        assert_eq!(ke(&c, "v0^2").to_string(), "v0^2 * 1");
        assert_eq!(ke(&c, "xi1^2").to_string(), "xi1^2");
        assert!(KoszulElement::parse(&c, "v3 * xi1").is_err());
        // x + 2x = 3x = 0 mod 3
        assert!(ke(&c, "v0 * xi1 + 2 v0 * xi1").is_zero());
    }

    #[test]
    fn parser_rejects_junk_without_panicking() {
        let c = ctx(3, 2);
        for junk in [
            "v0^99999999999 * xi1",
            "tau40",
            "xi1^4294967296",
            "v9 * xi1",
            "++--",
            "* * *",
            "2 2 2",
            "xi1 tau3 tau3",
            "v0 & xi1",
        ] {
            let _ = KoszulElement::parse(&c, junk);
        }
        // absurd generator indices are refused before degree arithmetic
        assert!(KoszulElement::parse(&c, "tau40").is_err());
        assert!(KoszulElement::parse(&c, "xi39^100000").is_err());
    }

    #[test]
    fn weight_zero_complex_is_free() {
        let c = ctx(3, 2);
        let wc = WeightComplex::build(&c, 0, 5).unwrap();
        assert!(wc.multicomplex().validate().is_empty());
        // all differentials vanish: Q_i kill the unit's dual
        let dirs = [0, 1, 2];
        for cell in 0..wc.multicomplex().cell_count() {
            assert!(wc
                .multicomplex()
                .apply_dirs(&dirs, &SparseElem::from_cell(cell, 1))
                .is_zero());
        }
        // cells are exactly the v-monomials with Σr ≤ 6 (one ghost level)
        let expected: usize = (0..=6).map(|s| v_monomials(3, s).len()).sum();
        assert_eq!(wc.multicomplex().cell_count(), expected);
    }

    #[test]
    fn p2_n1_weight8_differentials() {
        let c = ctx(2, 1);
        let wc = WeightComplex::build(&c, 8, 6).unwrap();
        assert!(wc.multicomplex().validate().is_empty());
        let d = |s: &str, dir: usize| {
            let e = wc.encode(&ke(&c, s)).unwrap();
            wc.decode(&wc.multicomplex().apply(dir, &e))
        };
        assert_eq!(d("xi1^2", 1), ke(&c, "v1 * tau2"));
        assert_eq!(d("xi1^2", 0), KoszulElement::zero(&c));
        assert_eq!(d("xi2", 0), ke(&c, "v0 * tau2"));
        assert_eq!(d("xi2", 1), KoszulElement::zero(&c));
    }

    #[test]
    fn weight_162_complex_validates() {
        let c = ctx(3, 2);
        let wc = WeightComplex::build(&c, 162, 8).unwrap();
        assert!(wc.multicomplex().validate().is_empty());
    }

    #[test]
    fn canonical_strategy_golden_preimages() {
        let c = ctx(3, 2);
        let wc = WeightComplex::build(&c, 162, 4).unwrap();
        let strat = CanonicalStrategy::new(&wc);
        // strip v1 and divide: v0^2 v1 (xi1^18 tau3)* -> v0^2 (xi1^18 xi2^3)*
        let x = wc.encode(&ke(&c, "v0^2 v1 * xi1^18 tau3")).unwrap();
        let a = strat.preimage(wc.multicomplex(), 1, &x).unwrap();
        assert_eq!(wc.decode(&a), ke(&c, "v0^2 * xi1^18 xi2^3"));
        let mut check = wc.multicomplex().apply(1, &a);
        check.sub(c.prime(), &x);
        assert!(check.is_zero());

        // strip v0: v0 (xi1^9 xi2^3 tau3)* -> (xi1^9 xi2^3 xi3)*
        let x = wc.encode(&ke(&c, "v0 * xi1^9 xi2^3 tau3")).unwrap();
        let a = strat.preimage(wc.multicomplex(), 0, &x).unwrap();
        assert_eq!(wc.decode(&a), ke(&c, "xi1^9 xi2^3 xi3"));

        // zero maps to zero
        let z = strat
            .preimage(wc.multicomplex(), 0, &SparseElem::zero())
            .unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn paper_trace_x() {
        let c = ctx(3, 2);
        let x = ke(&c, "v0^2 v1 * xi1^18 tau3");
        let trace = run_trace(&c, &x, None).unwrap();
        assert_eq!(trace.result, ke(&c, "v1 v2^2 * xi3^2 tau3"));
        // stage outputs
        assert_eq!(trace.steps[0].output, x); // step 2: not a d2-boundary
        assert_eq!(
            trace.steps[1].output,
            ke(&c, "- v0^2 v2 * xi1^9 xi2^3 tau3")
        );
        // the two-component intermediate state inside step 0
        let states = trace.states();
        let mid = ke(&c, "v0 v1 v2 * xi1^9 xi3 tau3 + v0 v2^2 * xi2^3 xi3 tau3");
        assert!(states.contains(&mid), "missing intermediate state");
    }

    #[test]
    fn paper_trace_y_dies() {
        let c = ctx(3, 2);
        let y = ke(&c, "v0^4 v1^2 * xi1^18 tau3");
        let trace = run_trace(&c, &y, None).unwrap();
        assert!(trace.result.is_zero());
        let states = trace.states();
        for expected in [
            "v0^4 v2^2 * xi2^6 tau3",
            "- v0^3 v1 v2^2 * xi2^3 xi3 tau3",
            "v0^2 v1^2 v2^2 * xi3^2 tau3",
            "- v0 v1^3 v2^2 * tau4",
        ] {
            let e = ke(&c, expected);
            assert!(states.contains(&e), "missing state {expected}");
        }
        // and the listed states occur in order
        let listed: Vec<KoszulElement> = [
            "v0^4 v2^2 * xi2^6 tau3",
            "- v0^3 v1 v2^2 * xi2^3 xi3 tau3",
            "v0^2 v1^2 v2^2 * xi3^2 tau3",
            "- v0 v1^3 v2^2 * tau4",
        ]
        .iter()
        .map(|s| ke(&c, s))
        .collect();
        let mut pos = 0;
        for state in &states {
            if pos < listed.len() && state == &listed[pos] {
                pos += 1;
            }
        }
        assert_eq!(pos, listed.len(), "trace states out of order");
    }

    #[test]
    fn trace_stage_invariants() {
        // each stage output is a cycle for the processed directions, differs
        // from the previous stage by an image of those directions, and the
        // final representative has no d0-boundary component
        let c = ctx(3, 2);
        let x = ke(&c, "v0^2 v1 * xi1^18 tau3");
        let wc = WeightComplex::build(&c, 162, 3).unwrap();
        let mc = wc.multicomplex();
        let trace = run_trace(&c, &x, None).unwrap();
        let mut processed: Vec<usize> = Vec::new();
        let mut prev = wc.encode(&x).unwrap();
        for step in &trace.steps {
            processed.push(step.direction);
            processed.sort_unstable();
            let out = wc.encode(&step.output).unwrap();
            assert!(mc.apply_dirs(&processed, &out).is_zero(), "not a cycle");
            // out - prev lies in the image of d^processed
            let mut diff = out.clone();
            diff.sub(c.prime(), &prev);
            let mut image = crate::fp::RowSpace::new(c.prime(), mc.cell_count());
            for cell in 0..mc.cell_count() {
                let im = mc.apply_dirs(&processed, &SparseElem::from_cell(cell, 1));
                if im.is_zero() {
                    continue;
                }
                let mut v = crate::fp::FpVector::zero(c.prime(), mc.cell_count());
                for (cc, val) in im.iter() {
                    v.set_entry(cc, val);
                }
                image.insert(&v);
            }
            let mut dv = crate::fp::FpVector::zero(c.prime(), mc.cell_count());
            for (cc, val) in diff.iter() {
                dv.set_entry(cc, val);
            }
            assert!(image.contains(&dv), "stage output is not class-equal");
            prev = out;
        }
        // no homogeneous component of the result is a d0-boundary
        let result = wc.encode(&trace.result).unwrap();
        let mut by_spot: BTreeMap<Vec<i64>, SparseElem> = BTreeMap::new();
        for (cell, coeff) in result.iter() {
            let mut key = mc.grading(cell).to_vec();
            key.extend_from_slice(mc.aux(cell));
            by_spot
                .entry(key)
                .or_default()
                .add_term(c.prime(), cell, coeff);
        }
        for component in by_spot.values() {
            assert!(mc.solve_boundary(0, component).unwrap().is_none());
        }
    }

    #[test]
    fn trace_zero_start() {
        let c = ctx(3, 2);
        let trace = run_trace(&c, &KoszulElement::zero(&c), None).unwrap();
        assert!(trace.result.is_zero());
        assert!(trace.steps.iter().all(|s| s.substitutions.is_empty()));
    }

    #[test]
    fn weight8_chart_by_hand() {
        // p=2, n=1, w=8: a single class from (tau2)* at s=0 stem -7, killed by
        // v0 and v1, and a free F_2[v0,v1] family on v0 (xi1^2)* + v1 (xi2)*.
        let c = ctx(2, 1);
        let s_max = 6;
        let hom = WeightHomology::compute(&c, 8, s_max).unwrap();
        assert_eq!(hom.spots.get(&(0, -7)).map(|s| s.dim), Some(1));
        for s in 1..=s_max {
            // stems -4, -2, ..., -4 + 2(s-1) each carry dimension 1
            let mut count = 0;
            for ((ss, t), spot) in &hom.spots {
                if *ss == s {
                    let stem = t - ss;
                    assert!(
                        stem >= -4 && stem <= -4 + 2 * (s - 1) && stem % 2 == 0,
                        "unexpected spot (s={ss}, stem={stem})"
                    );
                    assert_eq!(spot.dim, 1);
                    count += 1;
                }
            }
            assert_eq!(count as i64, s, "family width at s={s}");
        }
        // the generating cycle is v0 (xi1^2)* + v1 (xi2)*
        let gen = hom.spots.get(&(1, -3)).unwrap();
        let found = hom.complex().decode(&gen.reps[0]);
        assert_eq!(found, ke(&c, "v0 * xi1^2 + v1 * xi2"));
        // tau2 class is killed by both v0 and v1
        let tau = hom.spots.get(&(0, -7)).unwrap();
        for i in 0..=1 {
            let image = hom.complex().v_mult(i, &tau.reps[0]).unwrap();
            assert!(hom.class_is_zero(1, -7 + 2 * 2i64.pow(i) - 1, &image));
        }
    }

    #[test]
    fn y_class_is_zero_in_total_homology() {
        let c = ctx(3, 2);
        let hom = WeightHomology::compute(&c, 162, 7).unwrap();
        let y = hom
            .complex()
            .encode(&ke(&c, "v0^4 v1^2 * xi1^18 tau3"))
            .unwrap();
        // t = 4 + 2*5 - 125 = -111 at s = 6
        assert!(hom.class_is_zero(6, -111, &y));
    }

    #[test]
    fn stem_bookkeeping() {
        let c = ctx(3, 2);
        let wc = WeightComplex::build(&c, 162, 3).unwrap();
        let e = wc.encode(&ke(&c, "v0 * xi1^18 tau3")).unwrap();
        for i in 0..=2u32 {
            let im = wc.v_mult(i, &e).unwrap();
            let (cell_before, _) = e.iter().next().unwrap();
            let (cell_after, _) = im.iter().next().unwrap();
            let mc = wc.multicomplex();
            let stem_before = mc.aux(cell_before)[0] - mc.total_grading(cell_before);
            let stem_after = mc.aux(cell_after)[0] - mc.total_grading(cell_after);
            assert_eq!(stem_after - stem_before, 2 * 3i64.pow(i) - 2);
            assert_eq!(
                mc.total_grading(cell_after) - mc.total_grading(cell_before),
                1
            );
        }
    }

    #[test]
    fn d4_differential_in_the_v0_spectral_sequence() {
        // Collapse directions {1,2}, run the direction-0 spectral sequence on
        // weight 162 at p=3: the tower on (xi4)* supports a nonzero d_4 that
        // kills the class of v0^4 v2^2 (xi2^6 tau3)* — the d^{1,2}-homology
        // representative of v0^4 v1^2 (xi1^18 tau3)*.
        let c = ctx(3, 2);
        let wc = WeightComplex::build(&c, 162, 7).unwrap();
        let mc = wc.multicomplex();
        let y1 = wc.encode(&ke(&c, "v0^4 v2^2 * xi2^6 tau3")).unwrap();
        // t = 4 + 2*17 - 149 = -111; source total 5, target total 6
        let key_target = crate::multicomplex::BlockKey {
            kept: vec![],
            aux: vec![-111, 162],
            total: 6,
        };
        let key_source = crate::multicomplex::BlockKey {
            kept: vec![],
            aux: vec![-111, 162],
            total: 5,
        };
        // the class survives pages 2 and 3 …
        for r in [2u32, 3] {
            let page = mc.ss_page(&[1, 2], 0, r, 5..=6).unwrap();
            assert!(
                page.class_vector(mc, &y1).unwrap().is_some(),
                "class dead too early on E_{r}"
            );
        }
        // … is alive on E_4, where the differential out of the xi4 spot hits it …
        let e4 = mc.ss_page(&[1, 2], 0, 4, 5..=6).unwrap();
        assert!(e4.class_vector(mc, &y1).unwrap().is_some());
        assert!(e4.dim(&key_source, 0) >= 1, "no source class at f=0");
        let (d4, tk, tf) = e4.differential(mc, &key_source, 0).unwrap();
        assert_eq!((tk, tf), (key_target.clone(), 4));
        assert!(d4.rank() >= 1, "d_4 vanishes");
        // … and is dead on E_5
        let e5 = mc.ss_page(&[1, 2], 0, 5, 5..=6).unwrap();
        assert!(
            e5.class_vector(mc, &y1).unwrap().is_none(),
            "class survived d_4"
        );
        assert_eq!(
            e5.dim(&key_target, 4),
            e4.dim(&key_target, 4) - d4.rank(),
            "E_5 dimension drop mismatch"
        );
    }

    #[test]
    fn chart_is_the_direct_sum_of_weight_pieces() {
        // no operation mixes weights: the full chart restricted to one weight
        // equals that weight's standalone homology
        let c = ctx(2, 1);
        let chart = ext_chart(&c, 16, 6).unwrap();
        let hom = WeightHomology::compute(&c, 8, 6).unwrap();
        let from_chart: BTreeMap<(i64, i64), usize> = chart
            .entries
            .iter()
            .filter(|(k, _)| k.w == 8)
            .map(|(k, &d)| ((k.s, k.stem), d))
            .collect();
        let standalone: BTreeMap<(i64, i64), usize> = hom
            .spots
            .iter()
            .map(|(&(s, t), sc)| ((s, t - s), sc.dim))
            .collect();
        assert_eq!(from_chart, standalone);
    }

    #[test]
    fn p5_koszul_wiring_validates() {
        let c = ctx(5, 1);
        for w in [0i64, 10, 50, 100] {
            let wc = WeightComplex::build(&c, w, 4).unwrap();
            assert!(wc.multicomplex().validate().is_empty(), "w={w}");
        }
    }

    #[test]
    fn page_drop_matches_differential_ranks_on_weight_162() {
        // dim E_{r+1} = dim E_r - rank(d_r out) - rank(d_r in), through the
        // page where the nonzero d_4 lives
        let c = ctx(3, 2);
        let wc = WeightComplex::build(&c, 162, 6).unwrap();
        let mc = wc.multicomplex();
        let totals = 0..=6i64;
        let mut nonzero_high_differentials = 0usize;
        for r in 1..=6u32 {
            let page_r = mc.ss_page(&[1, 2], 0, r, totals.clone()).unwrap();
            let page_next = mc.ss_page(&[1, 2], 0, r + 1, totals.clone()).unwrap();
            for (key, block) in &page_r.blocks {
                if key.total <= *totals.start() || key.total >= *totals.end() {
                    continue;
                }
                for (&f, entry) in &block.entries {
                    let (out, _, _) = page_r.differential(mc, key, f).unwrap();
                    let source_key = crate::multicomplex::BlockKey {
                        kept: key.kept.clone(),
                        aux: key.aux.clone(),
                        total: key.total - 1,
                    };
                    let rank_in = match page_r.blocks.get(&source_key) {
                        Some(sb) if sb.entries.contains_key(&(f - r as i64)) => page_r
                            .differential(mc, &source_key, f - r as i64)
                            .unwrap()
                            .0
                            .rank(),
                        _ => 0,
                    };
                    if r >= 2 && out.rank() > 0 {
                        nonzero_high_differentials += 1;
                    }
                    assert_eq!(
                        page_next.dim(key, f),
                        entry.dim - out.rank() - rank_in,
                        "page drop at r={r}, total={}, f={f}",
                        key.total
                    );
                }
            }
        }
        assert!(
            nonzero_high_differentials > 0,
            "expected at least one nonzero d_r with r >= 2 in this window"
        );
    }

    #[test]
    fn verify_reports_on_small_windows() {
        // wider windows than the default sweeps
        let c = ctx(2, 0);
        let r = verify_stem_minus_one(&c, 32, 12).unwrap();
        assert!(r.passed(), "{r}");
        let c = ctx(2, 1);
        let r = verify_stem_minus_one(&c, 64, 12).unwrap();
        assert!(r.passed(), "{r}");
        let r = verify_stem_minus_one(&c, 16, 8).unwrap();
        assert!(r.passed(), "{r}");
        let r = verify_odd_stem_bound(&c, 16, 8).unwrap();
        assert!(r.passed(), "{r}");
        // w=8: the odd-stem class at stem -7 is annihilated immediately
        let r = verify_no_odd_towers(&c, 8, 6).unwrap();
        assert!(r.passed() && r.inconclusive.is_empty(), "{r}");
        // weight 0 has no odd-stem classes at all
        let r = verify_no_odd_towers(&c, 0, 6).unwrap();
        assert!(r.passed() && r.inconclusive.is_empty());
        // the odd-stem classes of the weight-162 narrative are v-power
        // annihilated within the window
        let c = ctx(3, 2);
        let r = verify_no_odd_towers(&c, 162, 10).unwrap();
        assert!(r.passed() && r.inconclusive.is_empty(), "{r}");
    }
}
