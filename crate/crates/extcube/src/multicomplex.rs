//! Finite multigraded chain complexes over F_p with anticommuting component
//! differentials d^0, …, d^n, where d^i raises the i-th grading by one and
//! preserves the rest.
//!
//! The cube of partial homologies H(M, d^I) for I ⊆ {0,…,n} is computed by
//! exact linear algebra, one grading spot at a time. For each j ∉ I the
//! filtration of (M, d^{I∪j}) by the j-grading gives a spectral sequence whose
//! pages are computed from the classical approximate-cycle subquotients
//!
//!   A_r^f = { x ∈ F^f : D x ∈ F^{f+r} },
//!   E_r^f = A_r^f / (A_{r-1}^{f+1} + D A_{r-1}^{f-r+1}),
//!
//! no derived couples. Page numbering is the standard one: E_1^f is the
//! homology H(M, d^I) in filtration f, and d_r shifts the j-grading by r.
//!
//! `improve_representative` is the step-by-step procedure that pushes a
//! permanent cycle's representative along the cube: at the step for direction
//! k, every homogeneous component that is a d^k-boundary d^k(a) is traded for
//! -d^P(a), where P is the set of directions already processed, until no
//! component is a d^k-boundary. Termination is guaranteed when all gradings
//! are bounded below, since each trade lowers the k-grading by one.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;

use thiserror::Error;

use crate::fp::{subquotient_dim, FpMatrix, FpVector, LinalgError, Prime, RowSpace};

#[derive(Debug, Error)]
pub enum ComplexError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("direction {0} out of range (complex has {1} directions)")]
    Direction(usize, usize),
    #[error("element is not a d^{0}-cycle at the required stage")]
    NotACycle(usize),
    #[error("division strategy failed: {0}")]
    Strategy(String),
    #[error("division strategy returned a non-preimage for direction {0}")]
    NotAPreimage(usize),
    #[error("step budget of {0} exhausted (should not happen on bounded-below complexes)")]
    BudgetExhausted(usize),
    #[error("inconsistent complex: {0}")]
    Inconsistent(String),
    #[error("requested window reaches beyond the stored cells (total degree {0} > limit {1})")]
    WindowExceeded(i64, i64),
    #[error("element does not define a class on this page: {0}")]
    PageElement(String),
    #[error("fixture parse error: {0}")]
    Parse(String),
}

/// Cells grouped by (kept gradings, aux), then by a collapsed level.
type SpotGroups = BTreeMap<(Vec<i64>, Vec<i64>), BTreeMap<i64, Vec<usize>>>;

/// A sparse F_p chain: cell index ↦ nonzero coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseElem {
    terms: BTreeMap<usize, u32>,
}

impl SparseElem {
    pub fn zero() -> SparseElem {
        SparseElem::default()
    }

    pub fn from_cell(cell: usize, coeff: u32) -> SparseElem {
        let mut e = SparseElem::zero();
        if coeff != 0 {
            e.terms.insert(cell, coeff);
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.terms.iter().map(|(&c, &v)| (c, v))
    }

    pub fn coeff(&self, cell: usize) -> u32 {
        self.terms.get(&cell).copied().unwrap_or(0)
    }

    pub fn add_term(&mut self, p: Prime, cell: usize, coeff: u32) {
        let c = coeff % p.get();
        if c == 0 {
            return;
        }
        match self.terms.entry(cell) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = p.add(*o.get(), c);
                if s == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, p: Prime, other: &SparseElem, c: u32) {
        for (cell, v) in other.iter() {
            self.add_term(p, cell, p.mul(v, c));
        }
    }

    pub fn sub(&mut self, p: Prime, other: &SparseElem) {
        self.add_scaled(p, other, p.neg(1));
    }

    pub fn scale(&mut self, p: Prime, c: u32) {
        let old = std::mem::take(&mut self.terms);
        for (cell, v) in old {
            self.add_term(p, cell, p.mul(v, c));
        }
    }
}

/// A violated structural identity, reported by [`Multicomplex::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    GradingShift {
        direction: usize,
        cell: String,
        target: String,
    },
    AuxShift {
        direction: usize,
        cell: String,
        target: String,
    },
    SquareNonzero {
        direction: usize,
        cell: String,
    },
    AnticommutatorNonzero {
        i: usize,
        j: usize,
        cell: String,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::GradingShift {
                direction,
                cell,
                target,
            } => write!(
                f,
                "d{direction} {cell} -> {target} does not raise grading {direction} by 1"
            ),
            Diagnostic::AuxShift {
                direction,
                cell,
                target,
            } => write!(
                f,
                "d{direction} {cell} -> {target} changes an auxiliary grading"
            ),
            Diagnostic::SquareNonzero { direction, cell } => {
                write!(f, "d{direction} d{direction} {cell} != 0")
            }
            Diagnostic::AnticommutatorNonzero { i, j, cell } => {
                write!(f, "d{i} d{j} {cell} + d{j} d{i} {cell} != 0")
            }
        }
    }
}

/// A grading spot of a partial homology: the gradings preserved by d^I
/// (`kept` in direction order plus `aux`), the collapsed I-level, and the
/// total grading (sum over all directions).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Spot {
    pub kept: Vec<i64>,
    pub aux: Vec<i64>,
    pub level: i64,
    pub total: i64,
}

#[derive(Debug, Clone)]
pub struct SpotHomology {
    pub dim: usize,
    pub reps: Vec<SparseElem>,
}

#[derive(Debug, Clone)]
pub struct HomologyResult {
    pub collapsed: Vec<usize>,
    pub spots: BTreeMap<Spot, SpotHomology>,
}

impl HomologyResult {
    pub fn dim(&self, spot: &Spot) -> usize {
        self.spots.get(spot).map_or(0, |s| s.dim)
    }

    pub fn total_dim(&self) -> usize {
        self.spots.values().map(|s| s.dim).sum()
    }
}

/// How a preimage is chosen when `improve_representative` trades a boundary
/// component for higher-direction images. `d^k(strategy(k, x')) = x'` must
/// hold whenever `x'` is an actual d^k-boundary.
pub trait DivisionStrategy {
    fn preimage(
        &self,
        mc: &Multicomplex,
        direction: usize,
        boundary: &SparseElem,
    ) -> Result<SparseElem, ComplexError>;
}

/// The default strategy: the deterministic pivot solution of the
/// corresponding linear system.
pub struct SolveStrategy;

impl DivisionStrategy for SolveStrategy {
    fn preimage(
        &self,
        mc: &Multicomplex,
        direction: usize,
        boundary: &SparseElem,
    ) -> Result<SparseElem, ComplexError> {
        mc.solve_boundary(direction, boundary)?
            .ok_or_else(|| ComplexError::Strategy("element is not a boundary".into()))
    }
}

/// One substitution event inside a step of the representative algorithm.
#[derive(Debug, Clone)]
pub struct Substitution {
    pub component: SparseElem,
    pub witness: SparseElem,
    pub after: SparseElem,
}

#[derive(Debug, Clone)]
pub struct ImproveStep {
    pub direction: usize,
    pub substitutions: Vec<Substitution>,
    pub output: SparseElem,
}

#[derive(Debug, Clone, Default)]
pub struct ImproveTrace {
    pub steps: Vec<ImproveStep>,
}

const IMPROVE_BUDGET: usize = 100_000;

pub struct Multicomplex {
    p: Prime,
    directions: usize,
    names: Vec<String>,
    gradings: Vec<Vec<i64>>,
    aux: Vec<Vec<i64>>,
    diffs: Vec<Vec<Vec<(usize, u32)>>>,
    /// When set, homology and page spots are only reported up to this total
    /// grading; cells above it exist solely to make kernels at the edge exact.
    window: Option<i64>,
}

pub struct MulticomplexBuilder {
    p: Prime,
    directions: usize,
    aux_len: usize,
    names: Vec<String>,
    by_name: BTreeMap<String, usize>,
    gradings: Vec<Vec<i64>>,
    aux: Vec<Vec<i64>>,
    diffs: Vec<Vec<Vec<(usize, u32)>>>,
    window: Option<i64>,
}

impl MulticomplexBuilder {
    pub fn new(p: Prime, directions: usize, aux_len: usize) -> MulticomplexBuilder {
        MulticomplexBuilder {
            p,
            directions,
            aux_len,
            names: Vec::new(),
            by_name: BTreeMap::new(),
            gradings: Vec::new(),
            aux: Vec::new(),
            diffs: vec![Vec::new(); directions],
            window: None,
        }
    }

    pub fn cell(&mut self, name: impl Into<String>, grading: Vec<i64>, aux: Vec<i64>) -> usize {
        let name = name.into();
        assert_eq!(grading.len(), self.directions, "grading arity");
        assert_eq!(aux.len(), self.aux_len, "aux arity");
        assert!(
            !self.by_name.contains_key(&name),
            "duplicate cell name {name}"
        );
        let id = self.names.len();
        self.by_name.insert(name.clone(), id);
        self.names.push(name);
        self.gradings.push(grading);
        self.aux.push(aux);
        for d in self.diffs.iter_mut() {
            d.push(Vec::new());
        }
        id
    }

    pub fn cell_id(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Record `d^dir(source) = Σ coeff · target`. Structural identities are
    /// not checked here; `validate` reports them.
    pub fn diff(&mut self, dir: usize, source: usize, targets: &[(usize, u32)]) {
        assert!(dir < self.directions);
        let col = &mut self.diffs[dir][source];
        for &(t, c) in targets {
            let c = c % self.p.get();
            if c == 0 {
                continue;
            }
            if let Some(entry) = col.iter_mut().find(|(tt, _)| *tt == t) {
                entry.1 = self.p.add(entry.1, c);
            } else {
                col.push((t, c));
            }
        }
        col.retain(|&(_, c)| c != 0);
        col.sort_by_key(|&(t, _)| t);
    }

    pub fn window(&mut self, total: i64) {
        self.window = Some(total);
    }

    pub fn build(self) -> Multicomplex {
        Multicomplex {
            p: self.p,
            directions: self.directions,
            names: self.names,
            gradings: self.gradings,
            aux: self.aux,
            diffs: self.diffs,
            window: self.window,
        }
    }
}

impl Multicomplex {
    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn directions(&self) -> usize {
        self.directions
    }

    pub fn cell_count(&self) -> usize {
        self.names.len()
    }

    pub fn cell_name(&self, cell: usize) -> &str {
        &self.names[cell]
    }

    pub fn cell_id(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn grading(&self, cell: usize) -> &[i64] {
        &self.gradings[cell]
    }

    pub fn aux(&self, cell: usize) -> &[i64] {
        &self.aux[cell]
    }

    pub fn total_grading(&self, cell: usize) -> i64 {
        self.gradings[cell].iter().sum()
    }

    pub fn window(&self) -> Option<i64> {
        self.window
    }

    fn check_dir(&self, dir: usize) -> Result<(), ComplexError> {
        if dir >= self.directions {
            Err(ComplexError::Direction(dir, self.directions))
        } else {
            Ok(())
        }
    }

    /// Apply d^dir to an element.
    pub fn apply(&self, dir: usize, e: &SparseElem) -> SparseElem {
        let mut out = SparseElem::zero();
        for (cell, c) in e.iter() {
            for &(t, v) in &self.diffs[dir][cell] {
                out.add_term(self.p, t, self.p.mul(c, v));
            }
        }
        out
    }

    /// Apply d^I = Σ_{i ∈ I} d^i.
    pub fn apply_dirs(&self, dirs: &[usize], e: &SparseElem) -> SparseElem {
        let mut out = SparseElem::zero();
        for &d in dirs {
            out.add_scaled(self.p, &self.apply(d, e), 1);
        }
        out
    }

    pub fn format_elem(&self, e: &SparseElem) -> String {
        if e.is_zero() {
            return "0".into();
        }
        let p = self.p.get();
        let mut out = String::new();
        for (i, (cell, c)) in e.iter().enumerate() {
            let (neg, mag) = if c > p / 2 { (true, p - c) } else { (false, c) };
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else if neg {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            if mag != 1 {
                out.push_str(&format!("{mag}*"));
            }
            out.push_str(&self.names[cell]);
        }
        out
    }

    /// Verify the grading shifts, d^i ∘ d^i = 0 and pairwise anticommutation
    /// by explicit expansion. Returns the violated identities; an empty list
    /// means the complex is valid. On windowed complexes the two-fold
    /// identities are checked for cells whose iterated images stay inside the
    /// stored range.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for dir in 0..self.directions {
            for cell in 0..self.cell_count() {
                for &(t, _) in &self.diffs[dir][cell] {
                    let mut expected = self.gradings[cell].clone();
                    expected[dir] += 1;
                    if self.gradings[t] != expected {
                        out.push(Diagnostic::GradingShift {
                            direction: dir,
                            cell: self.names[cell].clone(),
                            target: self.names[t].clone(),
                        });
                    }
                    if self.aux[t] != self.aux[cell] {
                        out.push(Diagnostic::AuxShift {
                            direction: dir,
                            cell: self.names[cell].clone(),
                            target: self.names[t].clone(),
                        });
                    }
                }
            }
        }
        let checkable = |cell: usize| match self.window {
            // two applications of d need stored differentials one level up
            Some(w) => self.total_grading(cell) < w,
            None => true,
        };
        for cell in 0..self.cell_count() {
            if !checkable(cell) {
                continue;
            }
            let e = SparseElem::from_cell(cell, 1);
            for i in 0..self.directions {
                let di = self.apply(i, &e);
                if !self.apply(i, &di).is_zero() {
                    out.push(Diagnostic::SquareNonzero {
                        direction: i,
                        cell: self.names[cell].clone(),
                    });
                }
                for j in (i + 1)..self.directions {
                    let dj = self.apply(j, &e);
                    let mut anti = self.apply(i, &dj);
                    anti.add_scaled(self.p, &self.apply(j, &di), 1);
                    if !anti.is_zero() {
                        out.push(Diagnostic::AnticommutatorNonzero {
                            i,
                            j,
                            cell: self.names[cell].clone(),
                        });
                    }
                }
            }
        }
        out
    }

    /// Full grading key (direction gradings followed by aux) of a cell.
    fn full_key(&self, cell: usize) -> Vec<i64> {
        let mut k = self.gradings[cell].clone();
        k.extend_from_slice(&self.aux[cell]);
        k
    }

    /// Cells grouped by the gradings preserved by d^dirs, then by the
    /// collapsed level Σ_{i ∈ dirs} g_i.
    fn group_for(&self, dirs: &[usize]) -> SpotGroups {
        let mut groups: SpotGroups = BTreeMap::new();
        for cell in 0..self.cell_count() {
            let kept: Vec<i64> = (0..self.directions)
                .filter(|d| !dirs.contains(d))
                .map(|d| self.gradings[cell][d])
                .collect();
            let level: i64 = dirs.iter().map(|&d| self.gradings[cell][d]).sum();
            groups
                .entry((kept, self.aux[cell].clone()))
                .or_default()
                .entry(level)
                .or_default()
                .push(cell);
        }
        groups
    }

    /// The matrix of d^dirs from the `sources` cells to the `targets` cells.
    fn dirs_matrix(
        &self,
        dirs: &[usize],
        sources: &[usize],
        targets: &[usize],
    ) -> Result<FpMatrix, ComplexError> {
        let index: BTreeMap<usize, usize> =
            targets.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut triplets = Vec::new();
        for (col, &s) in sources.iter().enumerate() {
            let image = self.apply_dirs(dirs, &SparseElem::from_cell(s, 1));
            for (t, c) in image.iter() {
                let Some(&row) = index.get(&t) else {
                    return Err(ComplexError::Inconsistent(format!(
                        "image of {} under d^{:?} leaves its grading spot at {}",
                        self.names[s], dirs, self.names[t]
                    )));
                };
                triplets.push((row, col, c));
            }
        }
        Ok(FpMatrix::from_triplets(
            self.p,
            targets.len(),
            sources.len(),
            &triplets,
        ))
    }

    /// H(M, d^I) with kernel/image computed spot by spot. For `dirs = ∅` this
    /// is the chain groups themselves.
    pub fn partial_homology(&self, dirs: &[usize]) -> Result<HomologyResult, ComplexError> {
        let mut dirs: Vec<usize> = dirs.to_vec();
        dirs.sort_unstable();
        dirs.dedup();
        for &d in &dirs {
            self.check_dir(d)?;
        }
        let mut spots = BTreeMap::new();
        for ((kept, aux), levels) in self.group_for(&dirs) {
            let kept_sum: i64 = {
                // direction part of `kept`: the first (directions - |dirs|) entries
                kept.iter().sum()
            };
            for (&level, cells) in &levels {
                let total = level + kept_sum;
                if let Some(w) = self.window {
                    if total > w {
                        continue;
                    }
                }
                let empty = Vec::new();
                let above = levels.get(&(level + 1)).unwrap_or(&empty);
                let below = levels.get(&(level - 1)).unwrap_or(&empty);
                let out = self.dirs_matrix(&dirs, cells, above)?;
                let cycles = out.kernel_basis();
                let target_index: BTreeMap<usize, usize> =
                    cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
                let mut boundaries = Vec::new();
                for &src in below {
                    let image = self.apply_dirs(&dirs, &SparseElem::from_cell(src, 1));
                    let mut v = FpVector::zero(self.p, cells.len());
                    let mut ok = true;
                    for (t, c) in image.iter() {
                        match target_index.get(&t) {
                            Some(&i) => v.set_entry(i, c),
                            None => ok = false,
                        }
                    }
                    if !ok {
                        return Err(ComplexError::Inconsistent(format!(
                            "image of {} leaves its grading spot",
                            self.names[src]
                        )));
                    }
                    if !v.is_zero() {
                        boundaries.push(v);
                    }
                }
                let dim = subquotient_dim(self.p, cells.len(), &cycles, &boundaries)?;
                let mut bnd_space = RowSpace::new(self.p, cells.len());
                for b in &boundaries {
                    bnd_space.insert(b);
                }
                let mut reps = Vec::new();
                for z in &cycles {
                    if let Some(residue) = bnd_space.insert(z) {
                        reps.push(vector_to_elem(&residue, cells));
                    }
                }
                debug_assert_eq!(reps.len(), dim);
                if dim > 0 {
                    spots.insert(
                        Spot {
                            kept: kept.clone(),
                            aux: aux.clone(),
                            level,
                            total,
                        },
                        SpotHomology { dim, reps },
                    );
                }
            }
        }
        Ok(HomologyResult {
            collapsed: dirs,
            spots,
        })
    }

    /// Solve `d^dir(a) = boundary` where `boundary` is supported on one
    /// grading spot; `None` when it is not a boundary. The solution is the
    /// deterministic pivot solution over the unique source spot.
    pub fn solve_boundary(
        &self,
        dir: usize,
        boundary: &SparseElem,
    ) -> Result<Option<SparseElem>, ComplexError> {
        self.check_dir(dir)?;
        if boundary.is_zero() {
            return Ok(Some(SparseElem::zero()));
        }
        let cells: Vec<usize> = boundary.iter().map(|(c, _)| c).collect();
        let key = self.full_key(cells[0]);
        let mut source_key = key.clone();
        source_key[dir] -= 1;
        for &c in &cells[1..] {
            if self.full_key(c) != key {
                return Err(ComplexError::Inconsistent(
                    "boundary check requires a homogeneous component".into(),
                ));
            }
        }
        // all cells sharing the source grading key
        let sources: Vec<usize> = (0..self.cell_count())
            .filter(|&c| self.full_key(c) == source_key)
            .collect();
        if sources.is_empty() {
            return Ok(None);
        }
        let spot_cells: Vec<usize> = (0..self.cell_count())
            .filter(|&c| self.full_key(c) == key)
            .collect();
        let m = self.dirs_matrix(&[dir], &sources, &spot_cells)?;
        let mut b = FpVector::zero(self.p, spot_cells.len());
        for (i, &c) in spot_cells.iter().enumerate() {
            b.set_entry(i, boundary.coeff(c));
        }
        match m.solve(&b)? {
            None => Ok(None),
            Some(x) => Ok(Some(vector_to_elem(&x, &sources))),
        }
    }

    /// The representative-improvement procedure. `order` lists the directions
    /// in processing order (the analogue of steps n, n-1, …, 0); at the step
    /// for direction k the replacement is x'' = -d^P(a) with P the directions
    /// already processed. Homogeneous components are visited in increasing
    /// grading order and the element is re-collected after every substitution.
    pub fn improve_representative(
        &self,
        x: &SparseElem,
        order: &[usize],
        strategy: &dyn DivisionStrategy,
        budget: Option<usize>,
    ) -> Result<(SparseElem, ImproveTrace), ComplexError> {
        for &d in order {
            self.check_dir(d)?;
        }
        let budget = budget.unwrap_or(IMPROVE_BUDGET);
        let mut spent = 0usize;
        let mut current = x.clone();
        let mut processed: Vec<usize> = Vec::new();
        let mut trace = ImproveTrace::default();
        for &k in order {
            if !self.apply(k, &current).is_zero() {
                return Err(ComplexError::NotACycle(k));
            }
            debug_assert!(self.apply_dirs(&processed, &current).is_zero());
            let mut substitutions = Vec::new();
            'scan: loop {
                let mut components: BTreeMap<Vec<i64>, SparseElem> = BTreeMap::new();
                for (cell, c) in current.iter() {
                    components
                        .entry(self.full_key(cell))
                        .or_default()
                        .add_term(self.p, cell, c);
                }
                for component in components.values() {
                    if self.solve_boundary(k, component)?.is_none() {
                        continue;
                    }
                    // the solver certified a preimage exists; the strategy
                    // picks the canonical witness
                    let witness = strategy.preimage(self, k, component)?;
                    let mut check = self.apply(k, &witness);
                    check.sub(self.p, component);
                    if !check.is_zero() {
                        return Err(ComplexError::NotAPreimage(k));
                    }
                    let mut replacement = self.apply_dirs(&processed, &witness);
                    replacement.scale(self.p, self.p.neg(1));
                    current.sub(self.p, component);
                    current.add_scaled(self.p, &replacement, 1);
                    substitutions.push(Substitution {
                        component: component.clone(),
                        witness,
                        after: current.clone(),
                    });
                    spent += 1;
                    if spent > budget {
                        return Err(ComplexError::BudgetExhausted(budget));
                    }
                    continue 'scan;
                }
                break;
            }
            trace.steps.push(ImproveStep {
                direction: k,
                substitutions,
                output: current.clone(),
            });
            processed.push(k);
        }
        Ok((current, trace))
    }

    /// Parse the plain-text fixture format:
    ///
    /// ```text
    /// directions=2
    /// cell a grading=(0,0)
    /// d0 a = x
    /// d1 a = 2*y + z
    /// ```
    pub fn from_fixture(p: Prime, text: &str) -> Result<Multicomplex, ComplexError> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| ComplexError::Parse("empty fixture".into()))?;
        let directions: usize = header
            .strip_prefix("directions=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| {
                ComplexError::Parse(format!("expected `directions=k`, got `{header}`"))
            })?;
        let mut builder = MulticomplexBuilder::new(p, directions, 0);
        let mut pending_diffs: Vec<(usize, String, String)> = Vec::new();
        for line in lines {
            if let Some(rest) = line.strip_prefix("cell ") {
                let (name, grading) = rest
                    .split_once(' ')
                    .ok_or_else(|| ComplexError::Parse(format!("malformed cell line `{line}`")))?;
                let grading = grading.trim();
                let inner = grading
                    .strip_prefix("grading=(")
                    .and_then(|g| g.strip_suffix(')'))
                    .ok_or_else(|| ComplexError::Parse(format!("malformed grading in `{line}`")))?;
                let gs: Result<Vec<i64>, _> =
                    inner.split(',').map(|v| v.trim().parse::<i64>()).collect();
                let gs =
                    gs.map_err(|_| ComplexError::Parse(format!("malformed grading in `{line}`")))?;
                if gs.len() != directions {
                    return Err(ComplexError::Parse(format!(
                        "grading arity {} does not match directions={directions}",
                        gs.len()
                    )));
                }
                builder.cell(name.trim(), gs, vec![]);
            } else if line.starts_with('d') {
                let (head, rhs) = line.split_once('=').ok_or_else(|| {
                    ComplexError::Parse(format!("malformed differential line `{line}`"))
                })?;
                let mut head_parts = head.split_whitespace();
                let d_tok = head_parts
                    .next()
                    .ok_or_else(|| ComplexError::Parse(format!("malformed `{line}`")))?;
                let dir: usize = d_tok
                    .strip_prefix('d')
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| ComplexError::Parse(format!("bad direction `{d_tok}`")))?;
                if dir >= directions {
                    return Err(ComplexError::Parse(format!(
                        "direction {dir} out of range in `{line}`"
                    )));
                }
                let source = head_parts
                    .next()
                    .ok_or_else(|| ComplexError::Parse(format!("missing source in `{line}`")))?;
                pending_diffs.push((dir, source.to_string(), rhs.trim().to_string()));
            } else {
                return Err(ComplexError::Parse(format!("unrecognized line `{line}`")));
            }
        }
        for (dir, source, rhs) in pending_diffs {
            let src = builder
                .cell_id(&source)
                .ok_or_else(|| ComplexError::Parse(format!("unknown cell `{source}`")))?;
            let mut targets = Vec::new();
            for (sign, term) in split_signed_terms(&rhs) {
                if term == "0" {
                    continue;
                }
                let (coeff, name) = match term.split_once('*') {
                    Some((c, n)) => {
                        let c: i64 = c.trim().parse().map_err(|_| {
                            ComplexError::Parse(format!("bad coefficient in `{term}`"))
                        })?;
                        (c, n.trim().to_string())
                    }
                    None => match term.trim().parse::<i64>() {
                        Ok(_) => {
                            return Err(ComplexError::Parse(format!(
                                "bare number `{term}` in differential"
                            )))
                        }
                        Err(_) => (1, term.trim().to_string()),
                    },
                };
                let target = builder
                    .cell_id(&name)
                    .ok_or_else(|| ComplexError::Parse(format!("unknown cell `{name}`")))?;
                let value = p.reduce(if sign { -coeff } else { coeff });
                targets.push((target, value));
            }
            builder.diff(dir, src, &targets);
        }
        Ok(builder.build())
    }
}

fn vector_to_elem(v: &FpVector, cells: &[usize]) -> SparseElem {
    let mut e = SparseElem::zero();
    for (i, c) in v.iter_nonzero() {
        e.terms.insert(cells[i], c);
    }
    e
}

/// Split `a + 2*b - c` into signed terms.
fn split_signed_terms(s: &str) -> Vec<(bool, String)> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut negative = false;
    let mut started = false;
    for ch in s.chars() {
        match ch {
            '+' | '-' if started => {
                if !current.trim().is_empty() {
                    out.push((negative, current.trim().to_string()));
                }
                current = String::new();
                negative = ch == '-';
            }
            '-' => {
                negative = true;
                started = true;
            }
            _ => {
                if !ch.is_whitespace() {
                    started = true;
                }
                current.push(ch);
            }
        }
    }
    if !current.trim().is_empty() {
        out.push((negative, current.trim().to_string()));
    }
    out
}

// ---------------------------------------------------------------------------
// Spectral sequence pages
// ---------------------------------------------------------------------------

/// Identifies the ambient block of a page: the gradings untouched by the
/// collapsed and running directions, plus the total degree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BlockKey {
    pub kept: Vec<i64>,
    pub aux: Vec<i64>,
    pub total: i64,
}

#[derive(Debug, Clone)]
pub struct PageEntry {
    /// Collapsed level Σ_{i ∈ I} g_i of the leading terms at this filtration.
    pub level: i64,
    pub dim: usize,
    /// Deterministic representatives: approximate cycles in A_r^f, reduced
    /// against the denominator.
    pub reps: Vec<FpVector>,
    denom: RowSpace,
}

#[derive(Debug, Clone)]
pub struct PageBlock {
    /// The cells of the ambient total-degree block, the coordinate system for
    /// `reps` and `class_vector`.
    pub cells: Vec<usize>,
    pub entries: BTreeMap<i64, PageEntry>,
}

/// One page E_r of the spectral sequence of the running-direction filtration
/// on (M, d^{I ∪ j}).
pub struct SpectralSequencePage {
    pub collapsed: Vec<usize>,
    pub running: usize,
    pub r: u32,
    pub blocks: BTreeMap<BlockKey, PageBlock>,
    p: Prime,
}

impl SpectralSequencePage {
    pub fn dim(&self, key: &BlockKey, filtration: i64) -> usize {
        self.blocks
            .get(key)
            .and_then(|b| b.entries.get(&filtration))
            .map_or(0, |e| e.dim)
    }

    /// Sum of entry dimensions grouped by the homology spot they converge to:
    /// `(kept, aux, total)`.
    pub fn dims_by_target(&self) -> BTreeMap<(Vec<i64>, Vec<i64>, i64), usize> {
        let mut out = BTreeMap::new();
        for (key, block) in &self.blocks {
            let total: usize = block.entries.values().map(|e| e.dim).sum();
            if total > 0 {
                *out.entry((key.kept.clone(), key.aux.clone(), key.total))
                    .or_insert(0) += total;
            }
        }
        out
    }

    /// Coordinates of the page class of an approximate cycle, or `None` when
    /// the class is zero on this page. The element must lie in the span of
    /// the page's cycles at its filtration.
    pub fn class_vector(
        &self,
        mc: &Multicomplex,
        e: &SparseElem,
    ) -> Result<Option<FpVector>, ComplexError> {
        if e.is_zero() {
            return Ok(None);
        }
        let cells: Vec<usize> = e.iter().map(|(c, _)| c).collect();
        let key = BlockKey {
            kept: (0..mc.directions())
                .filter(|d| !self.collapsed.contains(d) && *d != self.running)
                .map(|d| mc.grading(cells[0])[d])
                .collect(),
            aux: mc.aux(cells[0]).to_vec(),
            total: mc.total_grading(cells[0]),
        };
        let filtration = cells
            .iter()
            .map(|&c| mc.grading(c)[self.running])
            .min()
            .unwrap();
        self.class_vector_at(mc, &key, filtration, e)
    }

    /// Coordinates of the class of `e` in E_r at the given block and
    /// filtration. `e` must lie in F^filtration of the block; an element of
    /// filtration strictly deeper than the entry represents zero there.
    pub fn class_vector_at(
        &self,
        mc: &Multicomplex,
        key: &BlockKey,
        filtration: i64,
        e: &SparseElem,
    ) -> Result<Option<FpVector>, ComplexError> {
        if e.is_zero() {
            return Ok(None);
        }
        let block = self
            .blocks
            .get(key)
            .ok_or_else(|| ComplexError::PageElement("block not computed on this page".into()))?;
        let Some(entry) = block.entries.get(&filtration) else {
            // no cells at this filtration: the page vanishes there, and any
            // element of deeper filtration represents zero
            let deep = e
                .iter()
                .all(|(c, _)| mc.grading(c)[self.running] > filtration);
            return if deep {
                Ok(None)
            } else {
                Err(ComplexError::PageElement(
                    "no page entry at this filtration".into(),
                ))
            };
        };
        let index: BTreeMap<usize, usize> = block
            .cells
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i))
            .collect();
        let mut v = FpVector::zero(self.p, block.cells.len());
        for (cell, c) in e.iter() {
            if mc.grading(cell)[self.running] < filtration {
                return Err(ComplexError::PageElement(
                    "element sits below the requested filtration".into(),
                ));
            }
            let Some(&i) = index.get(&cell) else {
                return Err(ComplexError::PageElement(
                    "element crosses total-degree blocks".into(),
                ));
            };
            v.set_entry(i, c);
        }
        let residue = entry.denom.reduce(&v);
        if residue.is_zero() {
            return Ok(None);
        }
        // coordinates: solve reps^T . λ = residue
        let mut mt = FpMatrix::zero(self.p, block.cells.len(), entry.reps.len());
        for (r, rep) in entry.reps.iter().enumerate() {
            for (c, val) in rep.iter_nonzero() {
                mt.set(c, r, val);
            }
        }
        match mt.solve(&residue)? {
            Some(coords) => Ok(Some(coords)),
            None => Err(ComplexError::PageElement(
                "element is not an approximate cycle at this filtration".into(),
            )),
        }
    }

    /// The matrix of d_r out of `(key, filtration)`, together with the target
    /// block and filtration. Rows index the target entry's representatives.
    /// The target must lie inside the page's computed total range.
    pub fn differential(
        &self,
        mc: &Multicomplex,
        key: &BlockKey,
        filtration: i64,
    ) -> Result<(FpMatrix, BlockKey, i64), ComplexError> {
        let block = self
            .blocks
            .get(key)
            .ok_or_else(|| ComplexError::PageElement("source block not computed".into()))?;
        let entry = block
            .entries
            .get(&filtration)
            .ok_or_else(|| ComplexError::PageElement("source entry not computed".into()))?;
        let target_key = BlockKey {
            kept: key.kept.clone(),
            aux: key.aux.clone(),
            total: key.total + 1,
        };
        let target_f = filtration + self.r as i64;
        let mut all_dirs = self.collapsed.clone();
        all_dirs.push(self.running);
        let target_dim = self.dim(&target_key, target_f);
        let mut m = FpMatrix::zero(self.p, target_dim, entry.dim);
        for (col, rep) in entry.reps.iter().enumerate() {
            let elem = vector_to_elem(rep, &block.cells);
            let image = mc.apply_dirs(&all_dirs, &elem);
            if image.is_zero() {
                continue;
            }
            // the class is taken at exactly target_f: images of deeper
            // filtration are zero on this page
            match self.class_vector_at(mc, &target_key, target_f, &image)? {
                None => {}
                Some(coords) => {
                    for (row, v) in coords.iter_nonzero() {
                        m.set(row, col, v);
                    }
                }
            }
        }
        Ok((m, target_key, target_f))
    }
}

impl Multicomplex {
    /// Approximate-cycle space A_r^f inside the total-degree block: vectors
    /// supported on filtration ≥ f whose d^{I∪j}-image has filtration ≥ f+r.
    #[allow(clippy::too_many_arguments)]
    fn approx_cycles(
        &self,
        all_dirs: &[usize],
        running: usize,
        block_cells: &[usize],
        target_cells: &[usize],
        f: i64,
        r: i64,
    ) -> Result<Vec<FpVector>, ComplexError> {
        let sources: Vec<usize> = block_cells
            .iter()
            .copied()
            .filter(|&c| self.gradings[c][running] >= f)
            .collect();
        let low_targets: Vec<usize> = target_cells
            .iter()
            .copied()
            .filter(|&c| self.gradings[c][running] < f + r)
            .collect();
        let index: BTreeMap<usize, usize> = low_targets
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i))
            .collect();
        let mut triplets = Vec::new();
        for (col, &s) in sources.iter().enumerate() {
            let image = self.apply_dirs(all_dirs, &SparseElem::from_cell(s, 1));
            for (t, c) in image.iter() {
                if let Some(&row) = index.get(&t) {
                    triplets.push((row, col, c));
                }
            }
        }
        let m = FpMatrix::from_triplets(self.p, low_targets.len(), sources.len(), &triplets);
        let kernel = m.kernel_basis();
        // expand to coordinates over the whole block
        let block_index: BTreeMap<usize, usize> = block_cells
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i))
            .collect();
        Ok(kernel
            .into_iter()
            .map(|k| {
                let mut v = FpVector::zero(self.p, block_cells.len());
                for (i, c) in k.iter_nonzero() {
                    v.set_entry(block_index[&sources[i]], c);
                }
                v
            })
            .collect())
    }

    /// The page E_r of the spectral sequence of the `running`-direction
    /// filtration on (M, d^{I∪j}), over the given range of total degrees.
    /// E_1 is H(M, d^I) regraded by the filtration; d_r shifts the filtration
    /// by r. Entries are computed by the approximate-cycle subquotients.
    pub fn ss_page(
        &self,
        collapsed: &[usize],
        running: usize,
        r: u32,
        totals: RangeInclusive<i64>,
    ) -> Result<SpectralSequencePage, ComplexError> {
        self.check_dir(running)?;
        let mut collapsed: Vec<usize> = collapsed.to_vec();
        collapsed.sort_unstable();
        collapsed.dedup();
        for &d in &collapsed {
            self.check_dir(d)?;
            if d == running {
                return Err(ComplexError::Direction(d, self.directions));
            }
        }
        if let Some(w) = self.window {
            if *totals.end() > w {
                return Err(ComplexError::WindowExceeded(*totals.end(), w));
            }
        }
        let mut all_dirs = collapsed.clone();
        all_dirs.push(running);
        all_dirs.sort_unstable();
        // group cells by (kept gradings, aux) and total degree
        let mut groups: SpotGroups = BTreeMap::new();
        for cell in 0..self.cell_count() {
            let kept: Vec<i64> = (0..self.directions)
                .filter(|d| !all_dirs.contains(d))
                .map(|d| self.gradings[cell][d])
                .collect();
            groups
                .entry((kept, self.aux[cell].clone()))
                .or_default()
                .entry(self.total_grading(cell))
                .or_default()
                .push(cell);
        }
        let mut blocks = BTreeMap::new();
        let empty = Vec::new();
        for ((kept, aux), by_total) in &groups {
            for (&total, cells) in by_total {
                if !totals.contains(&total) {
                    continue;
                }
                let above = by_total.get(&(total + 1)).unwrap_or(&empty);
                let below = by_total.get(&(total - 1)).unwrap_or(&empty);
                let filtrations: Vec<i64> = {
                    let mut fs: Vec<i64> =
                        cells.iter().map(|&c| self.gradings[c][running]).collect();
                    fs.sort_unstable();
                    fs.dedup();
                    fs
                };
                let mut entries = BTreeMap::new();
                for &f in &filtrations {
                    if r == 0 {
                        // E_0 = F^f / F^{f+1}: the cells at filtration f
                        let mut denom = RowSpace::new(self.p, cells.len());
                        let mut reps = Vec::new();
                        for (i, &c) in cells.iter().enumerate() {
                            if self.gradings[c][running] == f {
                                let mut v = FpVector::zero(self.p, cells.len());
                                v.set_entry(i, 1);
                                reps.push(v);
                            } else if self.gradings[c][running] > f {
                                let mut v = FpVector::zero(self.p, cells.len());
                                v.set_entry(i, 1);
                                denom.insert(&v);
                            }
                        }
                        let level = total - f - kept.iter().sum::<i64>();
                        entries.insert(
                            f,
                            PageEntry {
                                level,
                                dim: reps.len(),
                                reps,
                                denom,
                            },
                        );
                        continue;
                    }
                    let ri = r as i64;
                    let numerator = self.approx_cycles(&all_dirs, running, cells, above, f, ri)?;
                    let mut denom = RowSpace::new(self.p, cells.len());
                    for v in self.approx_cycles(&all_dirs, running, cells, above, f + 1, ri - 1)? {
                        denom.insert(&v);
                    }
                    for v in
                        self.approx_cycles(&all_dirs, running, below, cells, f - ri + 1, ri - 1)?
                    {
                        let elem = vector_to_elem(&v, below);
                        let image = self.apply_dirs(&all_dirs, &elem);
                        let index: BTreeMap<usize, usize> =
                            cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
                        let mut iv = FpVector::zero(self.p, cells.len());
                        for (t, c) in image.iter() {
                            if let Some(&row) = index.get(&t) {
                                iv.set_entry(row, c);
                            } else {
                                return Err(ComplexError::Inconsistent(
                                    "differential leaves its block".into(),
                                ));
                            }
                        }
                        denom.insert(&iv);
                    }
                    let mut reps = Vec::new();
                    let mut sift = denom.clone();
                    for v in &numerator {
                        if let Some(residue) = sift.insert(v) {
                            reps.push(residue);
                        }
                    }
                    let level = total - f - kept.iter().sum::<i64>();
                    // zero-dimensional entries are kept: their denominators
                    // let class-membership queries certify that a class died
                    entries.insert(
                        f,
                        PageEntry {
                            level,
                            dim: reps.len(),
                            reps,
                            denom,
                        },
                    );
                }
                if !entries.is_empty() {
                    blocks.insert(
                        BlockKey {
                            kept: kept.clone(),
                            aux: aux.clone(),
                            total,
                        },
                        PageBlock {
                            cells: cells.clone(),
                            entries,
                        },
                    );
                }
            }
        }
        Ok(SpectralSequencePage {
            collapsed,
            running,
            r,
            blocks,
            p: self.p,
        })
    }

    /// A page index beyond which all pages of the given filtration agree with
    /// E_∞ on this complex.
    pub fn stable_page(&self, running: usize) -> u32 {
        let fs: Vec<i64> = (0..self.cell_count())
            .map(|c| self.gradings[c][running])
            .collect();
        match (fs.iter().min(), fs.iter().max()) {
            (Some(lo), Some(hi)) => (hi - lo + 2).max(2) as u32,
            _ => 2,
        }
    }
}
