//! Exact integer matrices, Smith normal form and row lattices.
//!
//! Everything here is arbitrary precision. The Smith form is computed by
//! elementary row and column operations, always pivoting on the nonzero
//! entry of least absolute value in the active block (ties go to the
//! smallest `(row, col)`), so the decomposition is a deterministic function
//! of the input.

use std::fmt;
use std::ops::Index;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// A dense integer matrix in row-major order.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(ToString::to_string).collect())
            .collect();
        write!(f, "IntMatrix{rows:?}")
    }
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;

    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &self.entries[i * self.cols + j]
    }
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::shape(format!(
                "{rows}×{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = BigInt::one();
        }
        m
    }

    /// Builds a matrix from small-integer rows. All rows must have `cols` entries.
    pub fn from_rows<T: Into<BigInt> + Copy>(cols: usize, rows: &[Vec<T>]) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::shape("ragged rows"));
            }
            entries.extend(r.iter().map(|&x| x.into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            entries,
        })
    }

    pub fn from_big_rows(cols: usize, rows: Vec<Vec<BigInt>>) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::shape("ragged rows"));
            }
            entries.extend(r);
        }
        Ok(Self {
            rows: n,
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}×{} by {}×{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = &self[(i, l)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(l, j)];
                    if !b.is_zero() {
                        out.entries[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Result<Vec<BigInt>> {
        if v.len() != self.cols {
            return Err(Error::shape("vector length does not match columns"));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Result<BigInt> {
        if self.rows != self.cols {
            return Err(Error::shape("determinant of a non-square matrix"));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut a = self.to_rows();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = t / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        Ok(sign * &a[n - 1][n - 1])
    }
}

/// `U·A·V = D` with `U`, `V` unimodular and `D` diagonal in Smith form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnfDecomposition {
    pub u: IntMatrix,
    pub v: IntMatrix,
    pub d: IntMatrix,
    /// The `min(rows, cols)` diagonal entries of `D`: nonnegative, each
    /// dividing the next, zeros only at the end.
    pub divisors: Vec<BigInt>,
    pub rank: usize,
}

impl SnfDecomposition {
    /// Checks every certificate: the product identity, unimodularity of
    /// both transforms, and the shape of `D`.
    pub fn verify(&self, a: &IntMatrix) -> bool {
        let ok_product = self
            .u
            .mul(a)
            .and_then(|ua| ua.mul(&self.v))
            .is_ok_and(|uav| uav == self.d);
        let unimodular = |m: &IntMatrix| m.determinant().is_ok_and(|d| d.abs().is_one());
        ok_product && unimodular(&self.u) && unimodular(&self.v) && is_smith_form(&self.d)
    }
}

/// Right half of a Smith decomposition: `D = U·A·V` for some unimodular `U`
/// that was not recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithRight {
    pub v: IntMatrix,
    pub divisors: Vec<BigInt>,
    pub rank: usize,
}

/// True when `d` is diagonal with a nonnegative divisibility chain and
/// trailing zeros only.
pub fn is_smith_form(d: &IntMatrix) -> bool {
    for i in 0..d.rows() {
        for j in 0..d.cols() {
            if i != j && !d[(i, j)].is_zero() {
                return false;
            }
        }
    }
    let diag: Vec<&BigInt> = (0..d.rows().min(d.cols())).map(|i| &d[(i, i)]).collect();
    diag.iter().all(|x| !x.is_negative())
        && diag.windows(2).all(|w| {
            if w[0].is_zero() {
                w[1].is_zero()
            } else {
                w[1].is_multiple_of(w[0])
            }
        })
}

struct Elimination {
    a: Vec<Vec<BigInt>>,
    u: Option<Vec<Vec<BigInt>>>,
    v: Vec<Vec<BigInt>>,
    m: usize,
    n: usize,
}

impl Elimination {
    fn new(a: &IntMatrix, track_u: bool) -> Self {
        let ident = |k: usize| {
            (0..k)
                .map(|i| (0..k).map(|j| BigInt::from((i == j) as u8)).collect())
                .collect::<Vec<Vec<BigInt>>>()
        };
        Self {
            a: a.to_rows(),
            u: track_u.then(|| ident(a.rows())),
            v: ident(a.cols()),
            m: a.rows(),
            n: a.cols(),
        }
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i != j {
            self.a.swap(i, j);
            if let Some(u) = &mut self.u {
                u.swap(i, j);
            }
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i != j {
            for r in &mut self.a {
                r.swap(i, j);
            }
            for r in &mut self.v {
                r.swap(i, j);
            }
        }
    }

    /// row_dst += q · row_src
    fn add_row(&mut self, dst: usize, src: usize, q: &BigInt) {
        fn axpy(rows: &mut [Vec<BigInt>], dst: usize, src: usize, q: &BigInt) {
            let (s, d) = if src < dst {
                let (lo, hi) = rows.split_at_mut(dst);
                (&lo[src], &mut hi[0])
            } else {
                let (lo, hi) = rows.split_at_mut(src);
                (&hi[0], &mut lo[dst])
            };
            for (x, y) in d.iter_mut().zip(s) {
                if !y.is_zero() {
                    *x += q * y;
                }
            }
        }
        axpy(&mut self.a, dst, src, q);
        if let Some(u) = &mut self.u {
            axpy(u, dst, src, q);
        }
    }

    /// col_dst += q · col_src
    fn add_col(&mut self, dst: usize, src: usize, q: &BigInt) {
        for rows in [&mut self.a, &mut self.v] {
            for r in rows.iter_mut() {
                if !r[src].is_zero() {
                    let t = q * &r[src];
                    r[dst] += t;
                }
            }
        }
    }

    fn negate_row(&mut self, i: usize) {
        for x in &mut self.a[i] {
            *x = -&*x;
        }
        if let Some(u) = &mut self.u {
            for x in &mut u[i] {
                *x = -&*x;
            }
        }
    }

    fn pivot(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for i in t..self.m {
            for j in t..self.n {
                let x = &self.a[i][j];
                if x.is_zero() {
                    continue;
                }
                // strict comparison keeps the lexicographically first minimum
                if best.is_none_or(|(bi, bj)| x.magnitude() < self.a[bi][bj].magnitude()) {
                    best = Some((i, j));
                }
            }
        }
        best
    }

    fn run(&mut self) -> usize {
        let mut t = 0;
        while t < self.m.min(self.n) {
            let Some((pi, pj)) = self.pivot(t) else { break };
            self.swap_rows(t, pi);
            self.swap_cols(t, pj);
            loop {
                let p = self.a[t][t].clone();
                let mut clean = true;
                for i in t + 1..self.m {
                    if !self.a[i][t].is_zero() {
                        let q = -(&self.a[i][t] / &p);
                        self.add_row(i, t, &q);
                        clean &= self.a[i][t].is_zero();
                    }
                }
                for j in t + 1..self.n {
                    if !self.a[t][j].is_zero() {
                        let q = -(&self.a[t][j] / &p);
                        self.add_col(j, t, &q);
                        clean &= self.a[t][j].is_zero();
                    }
                }
                if !clean {
                    let (pi, pj) = self.pivot(t).expect("a nonzero remainder exists");
                    self.swap_rows(t, pi);
                    self.swap_cols(t, pj);
                    continue;
                }
                // Row and column are clear; enforce divisibility of the rest.
                let bad = (t + 1..self.m).find(|&i| {
                    (t + 1..self.n).any(|j| !self.a[i][j].is_multiple_of(&p))
                });
                match bad {
                    Some(i) => self.add_row(t, i, &BigInt::one()),
                    None => break,
                }
            }
            if self.a[t][t].is_negative() {
                self.negate_row(t);
            }
            t += 1;
        }
        t
    }

    fn divisors(&self) -> Vec<BigInt> {
        (0..self.m.min(self.n)).map(|i| self.a[i][i].clone()).collect()
    }
}

fn from_nested(rows: Vec<Vec<BigInt>>, cols: usize) -> IntMatrix {
    IntMatrix::from_big_rows(cols, rows).expect("rectangular by construction")
}

/// Full Smith normal form with both unimodular certificates.
pub fn smith_normal_form(a: &IntMatrix) -> SnfDecomposition {
    let mut e = Elimination::new(a, true);
    let rank = e.run();
    let divisors = e.divisors();
    let (m, n) = (e.m, e.n);
    SnfDecomposition {
        u: from_nested(e.u.take().expect("tracked"), m),
        v: from_nested(std::mem::take(&mut e.v), n),
        d: from_nested(std::mem::take(&mut e.a), n),
        divisors,
        rank,
    }
}

/// Smith normal form without the left transform, for tall matrices where
/// `U` would be large.
pub fn smith_normal_form_right(a: &IntMatrix) -> SmithRight {
    let mut e = Elimination::new(a, false);
    let rank = e.run();
    SmithRight {
        divisors: e.divisors(),
        v: from_nested(std::mem::take(&mut e.v), e.n),
        rank,
    }
}

/// A basis of the row lattice in echelon form with positive pivots.
///
/// Rows are inserted one at a time and combined by unimodular `2×2`
/// gcd steps, so the result has at most `cols` rows and spans exactly the
/// same lattice as the generators.
pub fn row_lattice_basis(generators: &IntMatrix) -> IntMatrix {
    let cols = generators.cols();
    // basis[c] holds the row whose pivot sits in column c.
    let mut basis: Vec<Option<Vec<BigInt>>> = vec![None; cols];
    for i in 0..generators.rows() {
        let mut v = generators.row(i).to_vec();
        while let Some(c) = v.iter().position(|x| !x.is_zero()) {
            match basis[c].take() {
                None => {
                    if v[c].is_negative() {
                        v.iter_mut().for_each(|x| *x = -&*x);
                    }
                    basis[c] = Some(v);
                    break;
                }
                Some(r) => {
                    let p = &r[c];
                    if v[c].is_multiple_of(p) {
                        let q = &v[c] / p;
                        for (x, y) in v.iter_mut().zip(&r) {
                            *x -= &q * y;
                        }
                        basis[c] = Some(r);
                    } else {
                        let eg = p.extended_gcd(&v[c]);
                        let (g, s, t) = (eg.gcd, eg.x, eg.y);
                        let a = p / &g;
                        let b = &v[c] / &g;
                        let new_r: Vec<BigInt> =
                            r.iter().zip(&v).map(|(x, y)| &s * x + &t * y).collect();
                        let new_v: Vec<BigInt> =
                            r.iter().zip(&v).map(|(x, y)| &a * y - &b * x).collect();
                        debug_assert!(new_r[c] == g && new_v[c].is_zero());
                        basis[c] = Some(new_r);
                        v = new_v;
                    }
                }
            }
        }
    }
    let rows: Vec<Vec<BigInt>> = basis.into_iter().flatten().collect();
    from_nested(rows, cols)
}

/// Whether the rows generate all of `ℤ^cols`.
pub fn lattice_is_full(generators: &IntMatrix) -> bool {
    let cols = generators.cols();
    let basis = row_lattice_basis(generators);
    if basis.rows() < cols {
        return false;
    }
    let snf = smith_normal_form_right(&basis);
    snf.rank == cols && snf.divisors.iter().all(One::is_one)
}

/// A nonzero integer vector in the right kernel, when the rows do not have
/// full column rank.
///
/// The vector is a column of the right Smith transform, hence primitive;
/// its first nonzero entry is made positive.
pub fn rational_kernel_vector(generators: &IntMatrix) -> Option<Vec<BigInt>> {
    let basis = row_lattice_basis(generators);
    let snf = smith_normal_form_right(&basis);
    if snf.rank >= generators.cols() {
        return None;
    }
    let mut v = snf.v.column(snf.rank);
    if v.iter().find(|x| !x.is_zero()).is_some_and(Signed::is_negative) {
        v.iter_mut().for_each(|x| *x = -&*x);
    }
    Some(v)
}
