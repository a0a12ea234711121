//! Independent computation of Ext over the exterior algebra E_n = E(Q_0,…,Q_n)
//! via minimal free resolutions, used to cross-validate the Koszul-complex
//! homology. This path deliberately shares nothing with the Koszul route
//! beyond the F_p linear algebra.
//!
//! For a finite-dimensional E_n-module N we resolve the F_p-linear dual
//! module M = N^∨ by free E_n-modules, choosing minimal generators at every
//! stage, so that Ext^{s,t}_{E_n}(F_p, N) has dimension equal to the number of
//! stage-s generators in internal degree -t. Elements of E_n are kept in the
//! monomial basis Q_S indexed by subsets S ⊆ {0,…,n}, with an explicit sign
//! table for left multiplication.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::fp::{FpMatrix, FpVector, LinalgError, Prime, RowSpace};
use crate::milnor::{Context, MilnorError};

#[derive(Debug, Error)]
pub enum ResolutionError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Milnor(#[from] MilnorError),
    #[error("module is not an E_n-module: {0}")]
    BadModule(String),
}

/// A finite-dimensional module over E_n = E(Q_0,…,Q_n): basis gradings plus
/// one action matrix per Milnor primitive (column j = the image of basis
/// vector j).
#[derive(Debug, Clone)]
pub struct EnModule {
    pub p: Prime,
    pub n: u32,
    /// Internal degree of each basis vector.
    pub degrees: Vec<i64>,
    /// Weight of each basis vector.
    pub weights: Vec<i64>,
    /// Matrix of Q_i for i = 0..=n.
    pub actions: Vec<FpMatrix>,
}

impl EnModule {
    pub fn dimension(&self) -> usize {
        self.degrees.len()
    }

    pub fn zero(p: Prime, n: u32) -> EnModule {
        EnModule {
            p,
            n,
            degrees: vec![],
            weights: vec![],
            actions: (0..=n).map(|_| FpMatrix::zero(p, 0, 0)).collect(),
        }
    }

    /// Check the exterior-algebra relations and the grading shifts.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let d = self.dimension();
        let p = self.p.get() as i64;
        for (i, a) in self.actions.iter().enumerate() {
            if a.rows() != d || a.cols() != d {
                out.push(format!("action {i} has wrong shape"));
                continue;
            }
            for col in 0..d {
                for row in 0..d {
                    if a.get(row, col) == 0 {
                        continue;
                    }
                    if self.degrees[row] != self.degrees[col] - (2 * p.pow(i as u32) - 1) {
                        out.push(format!("Q_{i} does not shift degree by -(2p^{i}-1)"));
                    }
                    if self.weights[row] != self.weights[col] {
                        out.push(format!("Q_{i} does not preserve weight"));
                    }
                }
            }
        }
        let dim_ok = self.actions.iter().all(|a| a.rows() == d && a.cols() == d);
        if dim_ok {
            for i in 0..self.actions.len() {
                for j in i..self.actions.len() {
                    for col in 0..d {
                        let mut v = FpVector::zero(self.p, d);
                        v.set_entry(col, 1);
                        let ij = self.actions[i]
                            .mul_vector(&self.actions[j].mul_vector(&v).unwrap())
                            .unwrap();
                        let ji = self.actions[j]
                            .mul_vector(&self.actions[i].mul_vector(&v).unwrap())
                            .unwrap();
                        let mut sum = ij.clone();
                        sum.add_scaled(&ji, 1);
                        if !sum.is_zero() {
                            if i == j {
                                out.push(format!("Q_{i}^2 != 0 at basis vector {col}"));
                            } else {
                                out.push(format!(
                                    "Q_{i} Q_{j} + Q_{j} Q_{i} != 0 at basis vector {col}"
                                ));
                            }
                        }
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// The F_p-linear dual module, with the action twisted by the antipode:
    /// (Q_i · f)(x) = -(-1)^{|f|} f(Q_i · x). This keeps the exterior
    /// relations on the dual.
    pub fn dual(&self) -> EnModule {
        let d = self.dimension();
        let mut actions = Vec::new();
        for a in &self.actions {
            let mut b = FpMatrix::zero(self.p, d, d);
            for col in 0..d {
                // column col of the dual action: Q_i f_col
                let parity = self.degrees[col].rem_euclid(2) as u32;
                let sign = self.p.mul(self.p.neg(1), self.p.sign(parity));
                for row in 0..d {
                    let v = a.get(col, row);
                    if v != 0 {
                        b.set(row, col, self.p.mul(sign, v));
                    }
                }
            }
            actions.push(b);
        }
        EnModule {
            p: self.p,
            n: self.n,
            degrees: self.degrees.iter().map(|&t| -t).collect(),
            weights: self.weights.clone(),
            actions,
        }
    }
}

/// N = H^*(BP⟨n⟩)[w]: the dual of the weight-w part, with Q_i acting through
/// the Milnor-primitive action on dual monomials.
pub fn module_from_weight(ctx: &Context, w: i64) -> Result<EnModule, ResolutionError> {
    let p = ctx.prime();
    let basis = ctx.enumerate_basis(w);
    let index: BTreeMap<_, _> = basis
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, m)| (m, i))
        .collect();
    let d = basis.len();
    let mut actions = Vec::new();
    for i in 0..=ctx.n() {
        let mut a = FpMatrix::zero(p, d, d);
        for (col, m) in basis.iter().enumerate() {
            let image = ctx.q_action_dual(i, m)?;
            for (u, c) in image.iter() {
                a.set(index[u], col, c);
            }
        }
        actions.push(a);
    }
    Ok(EnModule {
        p,
        n: ctx.n(),
        degrees: basis.iter().map(|m| -m.degree(p)).collect(),
        weights: vec![w; d],
        actions,
    })
}

/// Sign of Q_i · Q_S when normalizing into ascending subset order:
/// (-1)^{#{s in S : s < i}}; `None` when i ∈ S.
fn insert_sign(subset: u32, i: u32) -> Option<bool> {
    if subset & (1 << i) != 0 {
        return None;
    }
    let below = (subset & ((1 << i) - 1)).count_ones();
    Some(below % 2 == 1)
}

/// One stage of a minimal resolution: generator degrees, and the matrix of
/// the differential into the previous stage (rows = previous stage basis,
/// columns = this stage's free basis (generator, subset)).
#[derive(Debug, Clone)]
pub struct Stage {
    pub generator_degrees: Vec<i64>,
    pub differential: FpMatrix,
}

/// A minimal free E_n-resolution of the dual of the input module, recorded as
/// generator degrees per stage.
#[derive(Debug, Clone)]
pub struct Resolution {
    pub p: Prime,
    pub n: u32,
    pub stages: Vec<Stage>,
}

impl Resolution {
    /// dim Ext^{s,t}: the number of stage-s generators in internal degree -t.
    pub fn ext_dim(&self, s: usize, t: i64) -> usize {
        self.stages.get(s).map_or(0, |st| {
            st.generator_degrees.iter().filter(|&&d| d == -t).count()
        })
    }

    /// All Ext dimensions as (s, t) ↦ dim.
    pub fn ext_dims(&self) -> BTreeMap<(usize, i64), usize> {
        let mut out = BTreeMap::new();
        for (s, st) in self.stages.iter().enumerate() {
            for &d in &st.generator_degrees {
                *out.entry((s, -d)).or_insert(0) += 1;
            }
        }
        out
    }
}

/// The free module E_n ⊗ V with basis (generator, subset), in a fixed order.
struct FreeModule {
    n: u32,
    generator_degrees: Vec<i64>,
}

impl FreeModule {
    fn rank(&self) -> usize {
        self.generator_degrees.len() << (self.n + 1)
    }

    fn basis_index(&self, generator: usize, subset: u32) -> usize {
        (generator << (self.n + 1)) | subset as usize
    }

    fn basis_at(&self, index: usize) -> (usize, u32) {
        (
            index >> (self.n + 1),
            (index & ((1usize << (self.n + 1)) - 1)) as u32,
        )
    }

    fn degree_of(&self, index: usize, p: i64) -> i64 {
        let (generator, subset) = self.basis_at(index);
        let mut d = self.generator_degrees[generator];
        for i in 0..=self.n {
            if subset & (1 << i) != 0 {
                d -= 2 * p.pow(i) - 1;
            }
        }
        d
    }

    /// Left multiplication by Q_i as a sparse map on basis indices.
    fn q_mult(&self, p: Prime, i: u32, index: usize) -> Option<(usize, u32)> {
        let (generator, subset) = self.basis_at(index);
        let negative = insert_sign(subset, i)?;
        let coeff = if negative { p.neg(1) } else { 1 };
        Some((self.basis_index(generator, subset | (1 << i)), coeff))
    }
}

/// Minimal free resolution of the dual of `module`, out to homological stage
/// `s_max` inclusive. Stage 0 covers the dual module; every later stage
/// covers the kernel of the previous differential by its minimal generators.
pub fn minimal_resolution(module: &EnModule, s_max: usize) -> Result<Resolution, ResolutionError> {
    let p = module.p;
    let n = module.n;
    let pv = p.get() as i64;
    if module.dimension() == 0 {
        return Ok(Resolution {
            p,
            n,
            stages: vec![],
        });
    }
    let m = module.dual();
    let d = m.dimension();

    // stage 0: minimal generators of M = coker of the augmentation ideal
    let mut aug = RowSpace::new(p, d);
    for a in &m.actions {
        for col in 0..d {
            let mut v = FpVector::zero(p, d);
            v.set_entry(col, 1);
            let image = a.mul_vector(&v)?;
            if !image.is_zero() {
                aug.insert(&image);
            }
        }
    }
    let mut gens0: Vec<usize> = Vec::new();
    {
        let mut sift = aug.clone();
        for col in 0..d {
            let mut v = FpVector::zero(p, d);
            v.set_entry(col, 1);
            if sift.insert(&v).is_some() {
                gens0.push(col);
            }
        }
    }
    let free0 = FreeModule {
        n,
        generator_degrees: gens0.iter().map(|&g| m.degrees[g]).collect(),
    };
    // augmentation map ε: (generator g, subset S) ↦ Q_S · e_g in M
    let epsilon = {
        let mut mat = FpMatrix::zero(p, d, free0.rank());
        for idx in 0..free0.rank() {
            let (g, subset) = free0.basis_at(idx);
            let mut v = FpVector::zero(p, d);
            v.set_entry(gens0[g], 1);
            // apply Q_{s_k} … Q_{s_1} reading the ascending product right to left
            for i in (0..=n).rev() {
                if subset & (1 << i) != 0 {
                    v = m.actions[i as usize].mul_vector(&v)?;
                }
            }
            for (row, c) in v.iter_nonzero() {
                mat.set(row, idx, c);
            }
        }
        mat
    };
    let mut stages = vec![Stage {
        generator_degrees: free0.generator_degrees.clone(),
        differential: epsilon.clone(),
    }];

    // kernel of the previous differential, per internal degree
    let mut prev_free = free0;
    let mut kernel: Vec<FpVector> = kernel_by_degree(&epsilon, |idx| prev_free.degree_of(idx, pv))?;
    for _stage in 1..=s_max {
        // minimal generators of the kernel: complement of E⁺·K in K
        let rank = prev_free.rank();
        let mut eplus = RowSpace::new(p, rank);
        for v in &kernel {
            for i in 0..=n {
                let mut image = FpVector::zero(p, rank);
                for (idx, c) in v.iter_nonzero() {
                    if let Some((target, sign)) = prev_free.q_mult(p, i, idx) {
                        let cur = image.entry(target);
                        image.set_entry(target, p.add(cur, p.mul(c, sign)));
                    }
                }
                if !image.is_zero() {
                    eplus.insert(&image);
                }
            }
        }
        let mut gens: Vec<FpVector> = Vec::new();
        {
            let mut sift = eplus.clone();
            for v in &kernel {
                if sift.insert(v).is_some() {
                    gens.push(v.clone());
                }
            }
        }
        let gen_degrees: Vec<i64> = gens
            .iter()
            .map(|v| {
                let idx = v.first_nonzero().expect("nonzero generator");
                prev_free.degree_of(idx, pv)
            })
            .collect();
        let free = FreeModule {
            n,
            generator_degrees: gen_degrees.clone(),
        };
        // differential: (g, S) ↦ Q_S · gens[g] in the previous free module
        let mut mat = FpMatrix::zero(p, rank, free.rank());
        for idx in 0..free.rank() {
            let (g, subset) = free.basis_at(idx);
            let mut v = gens[g].clone();
            for i in (0..=n).rev() {
                if subset & (1 << i) != 0 {
                    let mut image = FpVector::zero(p, rank);
                    for (k, c) in v.iter_nonzero() {
                        if let Some((target, sign)) = prev_free.q_mult(p, i, k) {
                            let cur = image.entry(target);
                            image.set_entry(target, p.add(cur, p.mul(c, sign)));
                        }
                    }
                    v = image;
                }
            }
            for (row, c) in v.iter_nonzero() {
                mat.set(row, idx, c);
            }
        }
        stages.push(Stage {
            generator_degrees: gen_degrees,
            differential: mat.clone(),
        });
        kernel = kernel_by_degree(&mat, |idx| free.degree_of(idx, pv))?;
        prev_free = free;
    }
    Ok(Resolution { p, n, stages })
}

/// Kernel basis of a degree-preserving map, computed block by block so every
/// kernel vector is homogeneous. `degree` grades the column space; rows are
/// graded implicitly through the matrix.
fn kernel_by_degree(
    m: &FpMatrix,
    degree: impl Fn(usize) -> i64,
) -> Result<Vec<FpVector>, LinalgError> {
    let mut by_degree: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for col in 0..m.cols() {
        by_degree.entry(degree(col)).or_default().push(col);
    }
    let mut out = Vec::new();
    for cols in by_degree.values() {
        let mut block = FpMatrix::zero(m.prime(), m.rows(), cols.len());
        for (bc, &col) in cols.iter().enumerate() {
            for row in 0..m.rows() {
                let v = m.get(row, col);
                if v != 0 {
                    block.set(row, bc, v);
                }
            }
        }
        for k in block.kernel_basis() {
            let mut v = FpVector::zero(m.prime(), m.cols());
            for (bc, c) in k.iter_nonzero() {
                v.set_entry(cols[bc], c);
            }
            out.push(v);
        }
    }
    Ok(out)
}
