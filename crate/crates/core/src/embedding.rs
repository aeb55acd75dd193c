//! Abelian embeddings of a support and the connectivity notions around them.
//!
//! A support admits an Abelian embedding when there are maps `σᵢ` from each
//! alphabet into an Abelian group, not all constant, whose sum vanishes on
//! every atom. Fixing `σᵢ(xᵢ*) = 0` at a base atom `x*`, the unknowns are the
//! values `σᵢ(s)` for `s ≠ xᵢ*`, one column each, and every atom contributes
//! a 0/1 row. The support has no embedding exactly when those rows generate
//! all of `ℤ^S`; otherwise the Smith form of the row lattice hands back a
//! witness, into `ℤ` when the rows are rank deficient and into `ℤ_d` for the
//! first invariant factor `d > 1` otherwise.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::distribution::{JointDistribution, Support};
use crate::lattice::{row_lattice_basis, smith_normal_form_right, IntMatrix};
use crate::{Error, Result};

/// Rows `a_x` for every support atom, relative to a base atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintMatrix {
    pub base_point: Vec<usize>,
    /// Column `c` stands for the pair `(coordinate, symbol)` at `columns[c]`.
    pub columns: Vec<(usize, usize)>,
    pub rows: IntMatrix,
}

impl ConstraintMatrix {
    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column_of(&self, coord: usize, symbol: usize) -> Option<usize> {
        self.columns.iter().position(|&c| c == (coord, symbol))
    }

    /// Reads an assignment of the columns back as per-coordinate tables,
    /// with the base symbol of each coordinate mapped to zero.
    fn decode(&self, sizes: &[usize], alpha: &[BigInt]) -> Vec<Vec<BigInt>> {
        let mut sigma: Vec<Vec<BigInt>> = sizes.iter().map(|&s| vec![BigInt::zero(); s]).collect();
        for (c, &(i, s)) in self.columns.iter().enumerate() {
            sigma[i][s] = alpha[c].clone();
        }
        sigma
    }
}

/// Builds the constraint matrix with the lexicographically least atom as
/// base point. Coordinates whose alphabet has one symbol add no columns.
pub fn constraint_matrix(support: &Support) -> ConstraintMatrix {
    let base_point = support.atoms()[0].clone();
    let columns: Vec<(usize, usize)> = support
        .sizes()
        .iter()
        .enumerate()
        .flat_map(|(i, &size)| {
            let b = base_point[i];
            (0..size).filter(move |&s| s != b).map(move |s| (i, s))
        })
        .collect();
    let index: HashMap<(usize, usize), usize> =
        columns.iter().enumerate().map(|(c, &p)| (p, c)).collect();
    let mut rows = Vec::with_capacity(support.len());
    for x in support.atoms() {
        let mut row = vec![0i64; columns.len()];
        for (i, &s) in x.iter().enumerate() {
            if s != base_point[i] {
                row[index[&(i, s)]] = 1;
            }
        }
        rows.push(row);
    }
    ConstraintMatrix {
        rows: IntMatrix::from_rows(columns.len(), &rows).expect("rows have S entries"),
        base_point,
        columns,
    }
}

/// Coordinate maps into `ℤ` (`modulus == 0`) or `ℤ_m` (`modulus ≥ 2`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingWitness {
    pub modulus: u64,
    /// `sigma[i][s]` is the image of symbol `s` of coordinate `i`.
    pub sigma: Vec<Vec<BigInt>>,
}

impl EmbeddingWitness {
    fn reduce(&self, x: &BigInt) -> BigInt {
        if self.modulus == 0 {
            x.clone()
        } else {
            x.mod_floor(&BigInt::from(self.modulus))
        }
    }

    /// Whether coordinate `i` maps every symbol to the same group element.
    pub fn is_constant(&self, i: usize) -> bool {
        let vals: Vec<BigInt> = self.sigma[i].iter().map(|x| self.reduce(x)).collect();
        vals.windows(2).all(|w| w[0] == w[1])
    }

    /// Group element `Σᵢ σᵢ(xᵢ)`, reduced when the target is finite.
    pub fn evaluate(&self, atom: &[usize]) -> BigInt {
        let s: BigInt = atom.iter().enumerate().map(|(i, &a)| &self.sigma[i][a]).sum();
        self.reduce(&s)
    }
}

/// Checks both defining conditions of an embedding on `support`.
pub fn verify_witness(support: &Support, witness: &EmbeddingWitness) -> bool {
    if witness.modulus == 1 || witness.sigma.len() != support.arity() {
        return false;
    }
    if witness.sigma.iter().zip(support.sizes()).any(|(t, &s)| t.len() != s) {
        return false;
    }
    let nonconstant = (0..support.arity()).any(|i| !witness.is_constant(i));
    nonconstant && support.atoms().iter().all(|x| witness.evaluate(x).is_zero())
}

/// Result of [`detect_embedding`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingVerdict {
    pub admits: bool,
    pub witness: Option<EmbeddingWitness>,
    /// Invariant factors of the row lattice (one per basis row).
    pub snf_divisors: Vec<BigInt>,
    pub rank: usize,
    /// `S = Σᵢ (|Σᵢ| − 1)`.
    pub columns: usize,
}

pub fn detect_embedding(dist: &JointDistribution) -> EmbeddingVerdict {
    detect_embedding_in(&dist.support())
}

/// Decides embeddability of a support exactly.
pub fn detect_embedding_in(support: &Support) -> EmbeddingVerdict {
    let cm = constraint_matrix(support);
    let s = cm.num_columns();
    let basis = row_lattice_basis(&cm.rows);
    let snf = smith_normal_form_right(&basis);

    let witness = if snf.rank < s {
        let mut alpha = snf.v.column(snf.rank);
        let g = alpha.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
        if !g.is_zero() && !g.is_one() {
            alpha.iter_mut().for_each(|x| *x = &*x / &g);
        }
        if alpha.iter().find(|x| !x.is_zero()).is_some_and(Signed::is_negative) {
            alpha.iter_mut().for_each(|x| *x = -&*x);
        }
        Some(EmbeddingWitness {
            modulus: 0,
            sigma: cm.decode(support.sizes(), &alpha),
        })
    } else {
        snf.divisors.iter().position(|d| !d.is_one()).map(|j| {
            let d = &snf.divisors[j];
            let alpha: Vec<BigInt> = snf.v.column(j).iter().map(|x| x.mod_floor(d)).collect();
            EmbeddingWitness {
                modulus: d.to_u64().expect("invariant factor fits in u64"),
                sigma: cm.decode(support.sizes(), &alpha),
            }
        })
    };
    if let Some(w) = &witness {
        assert!(
            verify_witness(support, w),
            "extracted witness failed verification: {w:?}"
        );
    }
    EmbeddingVerdict {
        admits: witness.is_some(),
        witness,
        snf_divisors: snf.divisors,
        rank: snf.rank,
        columns: s,
    }
}

/// Default budget for [`brute_force_embedding`], in enumerated assignments.
pub const BRUTE_FORCE_LIMIT: f64 = 5e7;

/// Exhaustive search for an embedding, independent of the lattice machinery.
///
/// Every map into `ℤ_m`, `2 ≤ m ≤ max_modulus`, is enumerated up to the
/// shift `σᵢ ↦ σᵢ − σᵢ(0)` on all but the last coordinate (compensated on
/// the last one, which preserves both defining conditions). The last
/// coordinate is then forced on symbols that occur in the support. When no
/// finite witness is found, integer embeddings are decided by a rational
/// rank test on the one-hot incidence matrix: the solution space of
/// `Σᵢ σᵢ(xᵢ) = 0` always contains the `k − 1` dimensional space of constant
/// maps, and anything beyond it gives an integer witness.
pub fn brute_force_embedding(support: &Support, max_modulus: u64) -> Result<Option<EmbeddingWitness>> {
    let k = support.arity();
    let sizes = support.sizes();
    let last = k - 1;
    let mut used_last = vec![false; sizes[last]];
    for x in support.atoms() {
        used_last[x[last]] = true;
    }
    // Free slots in enumeration order: (coordinate, symbol).
    let mut slots: Vec<(usize, usize)> = Vec::new();
    for (i, &size) in sizes.iter().enumerate().take(last) {
        slots.extend((1..size).map(|s| (i, s)));
    }
    slots.extend((0..sizes[last]).filter(|&s| !used_last[s]).map(|s| (last, s)));

    let work: f64 = (2..=max_modulus)
        .map(|m| (m as f64).powi(slots.len() as i32) * support.len() as f64)
        .sum();
    Error::guard("brute-force embedding enumeration", work, BRUTE_FORCE_LIMIT * 30.0)?;

    for m in 2..=max_modulus {
        let mut sigma: Vec<Vec<i64>> = sizes.iter().map(|&s| vec![0; s]).collect();
        let mut digits = vec![0i64; slots.len()];
        loop {
            for (&(i, s), &d) in slots.iter().zip(&digits) {
                sigma[i][s] = d;
            }
            if force_last(support, &mut sigma, &used_last, m as i64) {
                let w = EmbeddingWitness {
                    modulus: m,
                    sigma: sigma.iter().map(|t| t.iter().map(|&v| BigInt::from(v)).collect()).collect(),
                };
                if verify_witness(support, &w) {
                    return Ok(Some(w));
                }
            }
            // odometer, slot 0 most significant
            let mut pos = slots.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < m as i64 {
                    break;
                }
                digits[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX || slots.is_empty() {
                break;
            }
        }
    }
    Ok(integer_witness_by_rank(support))
}

fn force_last(support: &Support, sigma: &mut [Vec<i64>], used_last: &[bool], m: i64) -> bool {
    let last = sigma.len() - 1;
    let mut forced: Vec<Option<i64>> = vec![None; used_last.len()];
    for x in support.atoms() {
        let partial: i64 = (0..last).map(|i| sigma[i][x[i]]).sum();
        let want = (-partial).rem_euclid(m);
        match forced[x[last]] {
            None => forced[x[last]] = Some(want),
            Some(v) if v == want => {}
            Some(_) => return false,
        }
    }
    for (s, v) in forced.into_iter().enumerate() {
        if let Some(v) = v {
            sigma[last][s] = v;
        }
    }
    true
}

fn integer_witness_by_rank(support: &Support) -> Option<EmbeddingWitness> {
    let sizes = support.sizes();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let width: usize = sizes.iter().sum();
    let rows: Vec<Vec<BigRational>> = support
        .atoms()
        .iter()
        .map(|x| {
            let mut r = vec![BigRational::zero(); width];
            for (i, &s) in x.iter().enumerate() {
                r[offsets[i] + s] = BigRational::one();
            }
            r
        })
        .collect();
    let kernel = rational_kernel_basis(rows, width);
    if kernel.len() < support.arity() {
        return None;
    }
    for v in kernel {
        let denom = v.iter().fold(BigInt::one(), |l, q| l.lcm(q.denom()));
        let ints: Vec<BigInt> = v.iter().map(|q| (q * BigRational::from(denom.clone())).to_integer()).collect();
        let sigma: Vec<Vec<BigInt>> = sizes
            .iter()
            .zip(&offsets)
            .map(|(&s, &o)| ints[o..o + s].to_vec())
            .collect();
        let w = EmbeddingWitness { modulus: 0, sigma };
        if verify_witness(support, &w) {
            return Some(w);
        }
    }
    None
}

/// Basis of the right kernel over ℚ, one vector per free column of the
/// reduced row echelon form.
fn rational_kernel_basis(mut rows: Vec<Vec<BigRational>>, width: usize) -> Vec<Vec<BigRational>> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..width {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        rows[r].iter_mut().for_each(|x| *x *= &inv);
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                let (lo, hi) = rows.split_at_mut(i.max(r));
                let (src, dst) = if i < r { (&hi[0], &mut lo[i]) } else { (&lo[r], &mut hi[0]) };
                for (x, y) in dst.iter_mut().zip(src) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..width).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); width];
            v[f] = BigRational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -rows[row][f].clone();
            }
            v
        })
        .collect()
}

/// A disconnected pairwise marginal and the split of its two alphabets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSplit {
    pub i: usize,
    pub j: usize,
    /// Symbols of coordinate `i` (resp. `j`) in the component of symbol 0 of
    /// coordinate `i`.
    pub left_i: Vec<usize>,
    pub left_j: Vec<usize>,
    pub right_i: Vec<usize>,
    pub right_j: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseConnectivity {
    pub connected: bool,
    /// First offending pair `(i, j)`, `i < j`, in lexicographic order.
    pub split: Option<PairSplit>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

pub fn pairwise_connected(dist: &JointDistribution) -> PairwiseConnectivity {
    pairwise_connected_in(&dist.support())
}

/// Connectivity of every bipartite graph `(Σᵢ ∪ Σⱼ, supp(μᵢⱼ))`.
pub fn pairwise_connected_in(support: &Support) -> PairwiseConnectivity {
    let sizes = support.sizes();
    for i in 0..support.arity() {
        for j in i + 1..support.arity() {
            let (ni, nj) = (sizes[i], sizes[j]);
            let mut uf = UnionFind::new(ni + nj);
            for x in support.atoms() {
                uf.union(x[i], ni + x[j]);
            }
            let root = uf.find(0);
            let (mut li, mut lj, mut ri, mut rj) = (vec![], vec![], vec![], vec![]);
            for s in 0..ni {
                if uf.find(s) == root { li.push(s) } else { ri.push(s) }
            }
            for s in 0..nj {
                if uf.find(ni + s) == root { lj.push(s) } else { rj.push(s) }
            }
            if !ri.is_empty() || !rj.is_empty() {
                return PairwiseConnectivity {
                    connected: false,
                    split: Some(PairSplit {
                        i,
                        j,
                        left_i: li,
                        left_j: lj,
                        right_i: ri,
                        right_j: rj,
                    }),
                };
            }
        }
    }
    PairwiseConnectivity {
        connected: true,
        split: None,
    }
}

pub fn connected(dist: &JointDistribution) -> bool {
    connected_in(&dist.support())
}

/// Connectivity of the graph on the support joining atoms at Hamming
/// distance one.
pub fn connected_in(support: &Support) -> bool {
    let atoms = support.atoms();
    let mut uf = UnionFind::new(atoms.len());
    for i in 0..support.arity() {
        let mut buckets: HashMap<Vec<usize>, usize> = HashMap::new();
        for (a, x) in atoms.iter().enumerate() {
            let mut key = x.clone();
            key[i] = usize::MAX;
            match buckets.get(&key) {
                Some(&b) => uf.union(a, b),
                None => {
                    buckets.insert(key, a);
                }
            }
        }
    }
    let r = uf.find(0);
    (0..atoms.len()).all(|a| uf.find(a) == r)
}

/// The integer embedding read off a disconnected pair: `σᵢ = 1` on the
/// left part of `Σᵢ`, `σⱼ = −1` on the left part of `Σⱼ`, zero elsewhere.
pub fn partition_witness(sizes: &[usize], split: &PairSplit) -> EmbeddingWitness {
    let mut sigma: Vec<Vec<BigInt>> = sizes.iter().map(|&s| vec![BigInt::zero(); s]).collect();
    for &s in &split.left_i {
        sigma[split.i][s] = BigInt::one();
    }
    for &s in &split.left_j {
        sigma[split.j][s] = -BigInt::one();
    }
    EmbeddingWitness { modulus: 0, sigma }
}

/// Extends a witness for the marginal on `coords` to the full arity by
/// mapping the other coordinates to zero.
pub fn lift_witness(w: &EmbeddingWitness, coords: &[usize], sizes: &[usize]) -> EmbeddingWitness {
    let mut sigma: Vec<Vec<BigInt>> = sizes.iter().map(|&s| vec![BigInt::zero(); s]).collect();
    for (t, &c) in coords.iter().enumerate() {
        sigma[c] = w.sigma[t].clone();
    }
    EmbeddingWitness {
        modulus: w.modulus,
        sigma,
    }
}

/// Outcome of checking "no embedding ⇒ pairwise-connected" on one input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImplicationReport {
    pub admits: bool,
    pub pairwise_connected: bool,
    /// When some pair is disconnected: the partition witness and whether it
    /// verifies.
    pub partition_witness: Option<(EmbeddingWitness, bool)>,
    pub consistent: bool,
}

pub fn no_embedding_implies_pc_check(dist: &JointDistribution) -> ImplicationReport {
    let support = dist.support();
    let verdict = detect_embedding_in(&support);
    let pc = pairwise_connected_in(&support);
    let partition_witness = pc.split.as_ref().map(|split| {
        let w = partition_witness(support.sizes(), split);
        let ok = verify_witness(&support, &w);
        (w, ok)
    });
    let consistent = (verdict.admits || pc.connected)
        && partition_witness.as_ref().is_none_or(|(_, ok)| *ok && verdict.admits);
    ImplicationReport {
        admits: verdict.admits,
        pairwise_connected: pc.connected,
        partition_witness,
        consistent,
    }
}
