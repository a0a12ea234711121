//! Synthetic multicomplexes for structural testing: the two-row double
//! complex, and random tensor products of random one-direction complexes.
//!
//! A random one-direction complex is assembled from shifted elementary pieces
//! (an identity pair and a singleton) and then conjugated by random invertible
//! base changes, so d² = 0 holds by construction while the matrices look
//! generic. Tensoring k of them with Koszul signs produces a valid
//! k-multicomplex whose total homology is also predicted by the Künneth
//! formula, giving an independent dimension oracle.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::fp::{FpMatrix, Prime};
use crate::multicomplex::{Multicomplex, MulticomplexBuilder, SparseElem};

/// The two-row double complex (cells a, b below x, y, z) with
/// d0(a) = x, d1(a) = y, d0(b) = y, d1(b) = z.
pub fn toy_complex(p: Prime) -> Multicomplex {
    let mut b = MulticomplexBuilder::new(p, 2, 0);
    let a = b.cell("a", vec![0, 0], vec![]);
    let bb = b.cell("b", vec![-1, 1], vec![]);
    let x = b.cell("x", vec![1, 0], vec![]);
    let y = b.cell("y", vec![0, 1], vec![]);
    let z = b.cell("z", vec![-1, 2], vec![]);
    b.diff(0, a, &[(x, 1)]);
    b.diff(1, a, &[(y, 1)]);
    b.diff(0, bb, &[(y, 1)]);
    b.diff(1, bb, &[(z, 1)]);
    b.build()
}

/// A one-direction chain complex in dense form: `spaces[k]` is the dimension
/// at level k and `maps[k]` the differential from level k to level k+1.
pub struct OneComplex {
    pub p: Prime,
    pub spaces: Vec<usize>,
    pub maps: Vec<FpMatrix>,
    /// Homology dimension at each level, tracked from the pieces.
    pub homology: Vec<usize>,
}

/// Random bounded complex with known homology: a sum of identity pairs and
/// singletons, conjugated by random invertible base changes per level.
pub fn random_one_complex(p: Prime, rng: &mut StdRng, levels: usize, size: usize) -> OneComplex {
    // piece bookkeeping: pairs[k] identity maps into level k+1, single[k] stays
    let mut pairs = vec![0usize; levels];
    let mut single = vec![0usize; levels];
    for _ in 0..size {
        let k = rng.gen_range(0..levels);
        if k + 1 < levels && rng.gen_bool(0.5) {
            pairs[k] += 1;
        } else {
            single[k] += 1;
        }
    }
    let mut spaces = vec![0usize; levels];
    for k in 0..levels {
        spaces[k] = single[k] + pairs[k] + if k > 0 { pairs[k - 1] } else { 0 };
    }
    // canonical basis order per level: singles, pair sources, pair targets
    let mut maps = Vec::new();
    for k in 0..levels.saturating_sub(1) {
        let mut m = FpMatrix::zero(p, spaces[k + 1], spaces[k]);
        for i in 0..pairs[k] {
            let col = single[k] + i;
            let row = single[k + 1] + pairs[k + 1] + i;
            m.set(row, col, 1);
        }
        maps.push(m);
    }
    // conjugate by random invertible matrices: d'_k = T_{k+1} d_k T_k^{-1},
    // realized by applying a random sequence of elementary operations
    let transforms: Vec<(FpMatrix, FpMatrix)> = spaces
        .iter()
        .map(|&dim| random_invertible_with_inverse(p, rng, dim))
        .collect();
    let maps = maps
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let left = mat_mul(p, &transforms[k + 1].0, d);
            mat_mul(p, &left, &transforms[k].1)
        })
        .collect();
    let homology = single.clone();
    OneComplex {
        p,
        spaces,
        maps,
        homology,
    }
}

fn random_invertible_with_inverse(p: Prime, rng: &mut StdRng, dim: usize) -> (FpMatrix, FpMatrix) {
    let mut m = FpMatrix::identity(p, dim);
    let mut inv = FpMatrix::identity(p, dim);
    if dim == 0 {
        return (m, inv);
    }
    for _ in 0..(3 * dim) {
        let i = rng.gen_range(0..dim);
        let j = rng.gen_range(0..dim);
        if i == j {
            continue;
        }
        let c = rng.gen_range(1..p.get());
        // row_i += c * row_j on m; the inverse accumulates the opposite op in
        // reverse order: row_j -= ... acting on columns
        for col in 0..dim {
            let v = p.add(m.get(i, col), p.mul(c, m.get(j, col)));
            m.set(i, col, v);
        }
        for row in 0..dim {
            let v = p.sub(inv.get(row, j), p.mul(c, inv.get(row, i)));
            inv.set(row, j, v);
        }
    }
    (m, inv)
}

fn mat_mul(p: Prime, a: &FpMatrix, b: &FpMatrix) -> FpMatrix {
    assert_eq!(a.cols(), b.rows());
    let mut out = FpMatrix::zero(p, a.rows(), b.cols());
    for i in 0..a.rows() {
        for k in 0..a.cols() {
            let av = a.get(i, k);
            if av == 0 {
                continue;
            }
            for j in 0..b.cols() {
                let bv = b.get(k, j);
                if bv != 0 {
                    let v = p.add(out.get(i, j), p.mul(av, bv));
                    out.set(i, j, v);
                }
            }
        }
    }
    out
}

/// Tensor product of one-direction complexes: direction i acts on factor i
/// with the Koszul sign (-1)^{level of the earlier factors}.
pub fn tensor_complex(p: Prime, factors: &[OneComplex]) -> Multicomplex {
    let dirs = factors.len();
    let mut builder = MulticomplexBuilder::new(p, dirs, 0);
    // enumerate cells: tuples (level_i, index_i) per factor
    let mut cells: Vec<Vec<(usize, usize)>> = vec![vec![]];
    for f in factors {
        let mut next = Vec::new();
        for prefix in &cells {
            for (level, &dim) in f.spaces.iter().enumerate() {
                for idx in 0..dim {
                    let mut t = prefix.clone();
                    t.push((level, idx));
                    next.push(t);
                }
            }
        }
        cells = next;
    }
    let mut ids = std::collections::BTreeMap::new();
    for tuple in &cells {
        let grading: Vec<i64> = tuple.iter().map(|&(l, _)| l as i64).collect();
        let name = tuple
            .iter()
            .map(|&(l, i)| format!("{l}.{i}"))
            .collect::<Vec<_>>()
            .join("x");
        let id = builder.cell(name, grading, vec![]);
        ids.insert(tuple.clone(), id);
    }
    for tuple in &cells {
        let src = ids[tuple];
        for (dir, f) in factors.iter().enumerate() {
            let (level, idx) = tuple[dir];
            if level + 1 >= f.spaces.len() {
                continue;
            }
            let sign_parity: usize = tuple[..dir].iter().map(|&(l, _)| l).sum();
            let sign = p.sign((sign_parity % 2) as u32);
            let d = &f.maps[level];
            let mut targets = Vec::new();
            for row in 0..d.rows() {
                let c = d.get(row, idx);
                if c != 0 {
                    let mut t = tuple.clone();
                    t[dir] = (level + 1, row);
                    targets.push((ids[&t], p.mul(c, sign)));
                }
            }
            builder.diff(dir, src, &targets);
        }
    }
    builder.build()
}

/// Künneth prediction for the total homology of a tensor complex: dimensions
/// per total level.
pub fn kunneth_dims(factors: &[OneComplex]) -> std::collections::BTreeMap<i64, usize> {
    let mut acc: std::collections::BTreeMap<i64, usize> = [(0i64, 1usize)].into();
    for f in factors {
        let mut next = std::collections::BTreeMap::new();
        for (&l, &d) in &acc {
            for (level, &h) in f.homology.iter().enumerate() {
                if h == 0 {
                    continue;
                }
                *next.entry(l + level as i64).or_insert(0) += d * h;
            }
        }
        acc = next;
    }
    acc.retain(|_, d| *d > 0);
    acc
}

/// Seeded random multicomplex plus its Künneth homology prediction.
pub fn random_multicomplex(
    p: Prime,
    seed: u64,
    dirs: usize,
    levels: usize,
    size: usize,
) -> (Multicomplex, std::collections::BTreeMap<i64, usize>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let factors: Vec<OneComplex> = (0..dirs)
        .map(|_| random_one_complex(p, &mut rng, levels, size))
        .collect();
    let mc = tensor_complex(p, &factors);
    (mc, kunneth_dims(&factors))
}

/// The image of the full differential as explicit vectors; test helper.
pub fn total_image_dim(mc: &Multicomplex) -> usize {
    let dirs: Vec<usize> = (0..mc.directions()).collect();
    let mut space = crate::fp::RowSpace::new(mc.prime(), mc.cell_count());
    for cell in 0..mc.cell_count() {
        let image = mc.apply_dirs(&dirs, &SparseElem::from_cell(cell, 1));
        if image.is_zero() {
            continue;
        }
        let mut v = crate::fp::FpVector::zero(mc.prime(), mc.cell_count());
        for (c, val) in image.iter() {
            v.set_entry(c, val);
        }
        space.insert(&v);
    }
    space.rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_one_complexes_square_to_zero() {
        let p = Prime::new(3).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..10 {
            let c = random_one_complex(p, &mut rng, 4, 8);
            for k in 0..c.maps.len().saturating_sub(1) {
                let prod = mat_mul(p, &c.maps[k + 1], &c.maps[k]);
                for i in 0..prod.rows() {
                    for j in 0..prod.cols() {
                        assert_eq!(prod.get(i, j), 0);
                    }
                }
            }
            // homology dims match the pieces
            for k in 0..c.spaces.len() {
                let cycles = if k < c.maps.len() {
                    c.maps[k].kernel_basis().len()
                } else {
                    c.spaces[k]
                };
                let boundaries = if k > 0 { c.maps[k - 1].rank() } else { 0 };
                assert_eq!(cycles - boundaries, c.homology[k], "level {k}");
            }
        }
    }

    #[test]
    fn tensor_complexes_are_valid_and_kunneth_holds() {
        for p in [2u32, 3, 5] {
            let prime = Prime::new(p).unwrap();
            for seed in 0..6 {
                let (mc, expected) = random_multicomplex(prime, seed, 3, 3, 5);
                assert!(mc.validate().is_empty(), "p={p} seed={seed}");
                let dirs: Vec<usize> = (0..mc.directions()).collect();
                let h = mc.partial_homology(&dirs).unwrap();
                let mut got: std::collections::BTreeMap<i64, usize> =
                    std::collections::BTreeMap::new();
                for (spot, sh) in &h.spots {
                    *got.entry(spot.total).or_insert(0) += sh.dim;
                }
                assert_eq!(got, expected, "p={p} seed={seed}");
            }
        }
    }
}
