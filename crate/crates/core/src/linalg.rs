//! Dense matrices over a prime field F_p and the linear systems built from them.
//!
//! Everything here is exact: entries are residues in `0..p` and all elimination
//! is done with modular inverses. Matrix sizes in this crate stay in the
//! hundreds, so a plain dense representation is enough.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Returns true if `p` is a prime small enough for `u32` residues.
pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= p as u64 {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn inv_mod(a: u32, p: u32) -> u32 {
    // Fermat; p is prime.
    pow_mod(a, p - 2, p)
}

fn pow_mod(base: u32, mut exp: u32, p: u32) -> u32 {
    let mut acc: u64 = 1;
    let mut b = base as u64 % p as u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % p as u64;
        }
        b = b * b % p as u64;
        exp >>= 1;
    }
    acc as u32
}

/// Reduces a signed integer into `0..p`.
pub fn residue(x: i64, p: u32) -> u32 {
    x.rem_euclid(p as i64) as u32
}

/// Number of vectors in F_p^dim, or `None` on overflow.
pub fn space_size(p: u32, dim: usize) -> Option<usize> {
    let mut n: usize = 1;
    for _ in 0..dim {
        n = n.checked_mul(p as usize)?;
    }
    Some(n)
}

/// Decodes the `index`-th vector of F_p^dim (little-endian base-p digits).
pub fn vector_from_index(p: u32, dim: usize, mut index: usize) -> Vec<u32> {
    let mut v = vec![0; dim];
    for slot in v.iter_mut() {
        *slot = (index % p as usize) as u32;
        index /= p as usize;
    }
    v
}

/// Inverse of [`vector_from_index`].
pub fn index_from_vector(p: u32, v: &[u32]) -> usize {
    v.iter()
        .rev()
        .fold(0usize, |acc, &x| acc * p as usize + x as usize)
}

/// A dense row-major matrix over F_p.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Matrix {
    p: u32,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    p: u32,
    rows: usize,
    cols: usize,
    entries: Vec<Vec<u32>>,
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = String;

    fn try_from(r: MatrixRepr) -> std::result::Result<Self, Self::Error> {
        if !is_prime(r.p) {
            return Err(format!("modulus {} is not prime", r.p));
        }
        if r.entries.len() != r.rows {
            return Err(format!("expected {} rows, found {}", r.rows, r.entries.len()));
        }
        let mut data = Vec::with_capacity(r.rows * r.cols);
        for row in &r.entries {
            if row.len() != r.cols {
                return Err(format!("expected {} columns, found {}", r.cols, row.len()));
            }
            for &x in row {
                if x >= r.p {
                    return Err(format!("entry {x} is not a residue mod {}", r.p));
                }
                data.push(x);
            }
        }
        Ok(Matrix { p: r.p, rows: r.rows, cols: r.cols, data })
    }
}

impl From<Matrix> for MatrixRepr {
    fn from(m: Matrix) -> Self {
        let entries = (0..m.rows).map(|r| m.row(r).to_vec()).collect();
        MatrixRepr { p: m.p, rows: m.rows, cols: m.cols, entries }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix[{}x{} mod {}]", self.rows, self.cols, self.p)?;
        for r in 0..self.rows {
            write!(f, " {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(p: u32, rows: usize, cols: usize) -> Self {
        Matrix { p, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(p: u32, n: usize) -> Self {
        let mut m = Self::zeros(p, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % p;
        }
        m
    }

    /// Builds a matrix from signed integer rows, reducing mod `p`.
    pub fn from_rows(p: u32, rows: usize, cols: usize, entries: &[Vec<i64>]) -> Self {
        assert_eq!(entries.len(), rows, "row count mismatch");
        let mut m = Self::zeros(p, rows, cols);
        for (r, row) in entries.iter().enumerate() {
            assert_eq!(row.len(), cols, "column count mismatch");
            for (c, &x) in row.iter().enumerate() {
                m.set(r, c, residue(x, p));
            }
        }
        m
    }

    /// A single column built from a vector.
    pub fn column(p: u32, v: &[u32]) -> Self {
        Matrix { p, rows: v.len(), cols: 1, data: v.iter().map(|x| x % p).collect() }
    }

    /// Builds a matrix whose columns are the given vectors, each of length `rows`.
    pub fn from_columns(p: u32, rows: usize, columns: &[Vec<u32>]) -> Self {
        let mut m = Self::zeros(p, rows, columns.len());
        for (c, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (r, &x) in col.iter().enumerate() {
                m.set(r, c, x % p);
            }
        }
        m
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, x: u32) {
        self.data[r * self.cols + c] = x % self.p;
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<u32> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.p, other.p, "mixed moduli");
        assert_eq!(
            self.cols, other.rows,
            "shape mismatch {:?} * {:?}",
            self.shape(),
            other.shape()
        );
        let p = self.p as u64;
        let mut out = Matrix::zeros(self.p, self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k) as u64;
                if a == 0 {
                    continue;
                }
                let orow = other.row(k);
                let base = r * other.cols;
                for (c, &b) in orow.iter().enumerate() {
                    if b != 0 {
                        let cell = &mut out.data[base + c];
                        *cell = ((*cell as u64 + a * b as u64) % p) as u32;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(self.cols, v.len());
        let p = self.p as u64;
        (0..self.rows)
            .map(|r| {
                let s: u64 = self
                    .row(r)
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a as u64 * b as u64 % p)
                    .sum();
                (s % p) as u32
            })
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in add");
        let p = self.p;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a + b) % p)
            .collect();
        Matrix { p, rows: self.rows, cols: self.cols, data }
    }

    pub fn neg(&self) -> Matrix {
        let p = self.p;
        let data = self.data.iter().map(|&a| (p - a) % p).collect();
        Matrix { p, rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: u32) -> Matrix {
        let p = self.p as u64;
        let data = self.data.iter().map(|&a| (a as u64 * s as u64 % p) as u32).collect();
        Matrix { p: self.p, rows: self.rows, cols: self.cols, data }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.p, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// `[self | other]`
    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        let mut m = Matrix::zeros(self.p, self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m.set(r, c, self.get(r, c));
            }
            for c in 0..other.cols {
                m.set(r, self.cols + c, other.get(r, c));
            }
        }
        m
    }

    /// `[self ; other]`
    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix { p: self.p, rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn block_diag(&self, other: &Matrix) -> Matrix {
        let mut m = Matrix::zeros(self.p, self.rows + other.rows, self.cols + other.cols);
        m.paste(0, 0, self);
        m.paste(self.rows, self.cols, other);
        m
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn paste(&mut self, r0: usize, c0: usize, block: &Matrix) {
        for r in 0..block.rows {
            for c in 0..block.cols {
                self.set(r0 + r, c0 + c, block.get(r, c));
            }
        }
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Matrix {
        let mut m = Matrix::zeros(self.p, rows.len(), cols.len());
        for (i, r) in rows.clone().enumerate() {
            for (j, c) in cols.clone().enumerate() {
                m.set(i, j, self.get(r, c));
            }
        }
        m
    }

    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.p, self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                m.set(r, j, self.get(r, c));
            }
        }
        m
    }

    /// Reduced row echelon form together with the pivot columns.
    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        (m, pivots)
    }

    fn rref_in_place(&mut self) -> Vec<usize> {
        if self.p == 2 {
            return self.rref_in_place_f2();
        }
        let p = self.p as u64;
        let cols = self.cols;
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..cols {
            if row == self.rows {
                break;
            }
            let Some(piv) = (row..self.rows).find(|&r| self.data[r * cols + col] != 0) else {
                continue;
            };
            if piv != row {
                for c in 0..cols {
                    self.data.swap(piv * cols + c, row * cols + c);
                }
            }
            let inv = inv_mod(self.data[row * cols + col], self.p) as u64;
            for x in &mut self.data[row * cols + col..(row + 1) * cols] {
                *x = (*x as u64 * inv % p) as u32;
            }
            let pivot_row: Vec<u32> = self.data[row * cols + col..(row + 1) * cols].to_vec();
            for r in 0..self.rows {
                let factor = self.data[r * cols + col] as u64;
                if r == row || factor == 0 {
                    continue;
                }
                for (x, &b) in self.data[r * cols + col..(r + 1) * cols].iter_mut().zip(&pivot_row) {
                    *x = ((*x as u64 + p * p - factor * b as u64) % p) as u32;
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    /// Elimination over F_2 on rows packed into 64-bit words.
    fn rref_in_place_f2(&mut self) -> Vec<usize> {
        let (rows, cols) = (self.rows, self.cols);
        let words = cols.div_ceil(64);
        let mut packed = vec![0u64; rows * words];
        for r in 0..rows {
            for c in 0..cols {
                if self.data[r * cols + c] != 0 {
                    packed[r * words + c / 64] |= 1 << (c % 64);
                }
            }
        }
        let bit = |packed: &[u64], r: usize, c: usize| packed[r * words + c / 64] >> (c % 64) & 1 == 1;
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..cols {
            if row == rows {
                break;
            }
            let Some(piv) = (row..rows).find(|&r| bit(&packed, r, col)) else {
                continue;
            };
            if piv != row {
                for w in 0..words {
                    packed.swap(piv * words + w, row * words + w);
                }
            }
            let start = col / 64;
            let pivot_row: Vec<u64> = packed[row * words + start..(row + 1) * words].to_vec();
            for r in 0..rows {
                if r != row && bit(&packed, r, col) {
                    for (x, &b) in packed[r * words + start..(r + 1) * words].iter_mut().zip(&pivot_row) {
                        *x ^= b;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        for r in 0..rows {
            for c in 0..cols {
                self.data[r * cols + c] = bit(&packed, r, c) as u32;
            }
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the null space, as the columns of the returned matrix.
    pub fn kernel(&self) -> Matrix {
        let (r, pivots) = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let free: Vec<usize> = (0..self.cols).filter(|&c| !is_pivot[c]).collect();
        let mut k = Matrix::zeros(self.p, self.cols, free.len());
        for (j, &f) in free.iter().enumerate() {
            k.set(f, j, 1);
            for (i, &pc) in pivots.iter().enumerate() {
                let x = r.get(i, f);
                k.set(pc, j, (self.p - x) % self.p);
            }
        }
        k
    }

    /// Basis of the column space (a subset of the columns of `self`).
    pub fn column_basis(&self) -> Matrix {
        let (_, pivots) = self.rref();
        self.select_columns(&pivots)
    }

    /// Solves `self * X = rhs`. Returns `None` when inconsistent.
    pub fn solve(&self, rhs: &Matrix) -> Option<Matrix> {
        self.solve_or_certificate(rhs).ok()
    }

    /// Solves `self * X = rhs`; on failure returns a row vector `y` with
    /// `y * self = 0` and `y * rhs != 0`, an explicit infeasibility witness.
    pub fn solve_or_certificate(&self, rhs: &Matrix) -> std::result::Result<Matrix, Vec<u32>> {
        assert_eq!(self.rows, rhs.rows, "solve row mismatch");
        let n = self.cols;
        let (r, pivots) = self.hstack(rhs).rref();
        if pivots.last().is_some_and(|&c| c >= n) {
            // Inconsistent: some left null vector of `self` sees the right-hand side.
            let left = self.transpose().kernel();
            for j in 0..left.cols() {
                let y = left.col(j);
                let seen = rhs.transpose().mul_vec(&y);
                if seen.iter().any(|&x| x != 0) {
                    return Err(y);
                }
            }
            unreachable!("an inconsistent system has a separating left null vector");
        }
        let mut x = Matrix::zeros(self.p, n, rhs.cols);
        for (i, &pc) in pivots.iter().enumerate() {
            for c in 0..rhs.cols {
                x.set(pc, c, r.get(i, n + c));
            }
        }
        Ok(x)
    }

    /// True when `v` lies in the column space of `self`.
    pub fn spans(&self, v: &[u32]) -> bool {
        self.solve(&Matrix::column(self.p, v)).is_some()
    }
}

/// A linear system whose unknowns are a list of matrix-valued blocks.
///
/// Equations are added as sums of terms `L * X_b * R` equated to a right-hand
/// side matrix. The system is flattened into a single dense matrix when solved.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    p: u32,
    blocks: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    n_vars: usize,
    rows: Vec<Vec<u32>>,
    rhs: Vec<u32>,
}

/// One `L * X_block * R` contribution to an equation.
pub struct Term<'a> {
    pub left: &'a Matrix,
    pub block: usize,
    pub right: &'a Matrix,
}

impl LinearSystem {
    pub fn new(p: u32) -> Self {
        LinearSystem { p, blocks: vec![], offsets: vec![], n_vars: 0, rows: vec![], rhs: vec![] }
    }

    /// Registers an unknown `rows x cols` block and returns its handle.
    pub fn add_block(&mut self, rows: usize, cols: usize) -> usize {
        self.offsets.push(self.n_vars);
        self.blocks.push((rows, cols));
        self.n_vars += rows * cols;
        self.blocks.len() - 1
    }

    pub fn block_shape(&self, b: usize) -> (usize, usize) {
        self.blocks[b]
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Adds the matrix equation `sum_i L_i X_{b_i} R_i = rhs`.
    pub fn add_equation(&mut self, terms: &[Term<'_>], rhs: &Matrix) {
        let (er, ec) = rhs.shape();
        let p = self.p as u64;
        let base = self.rows.len();
        for _ in 0..er * ec {
            self.rows.push(vec![0; self.n_vars]);
        }
        for r in 0..er {
            for c in 0..ec {
                self.rhs.push(rhs.get(r, c));
            }
        }
        for t in terms {
            let (br, bc) = self.blocks[t.block];
            assert_eq!(t.left.shape(), (er, br), "left factor shape");
            assert_eq!(t.right.shape(), (bc, ec), "right factor shape");
            let off = self.offsets[t.block];
            for r in 0..er {
                for a in 0..br {
                    let l = t.left.get(r, a) as u64;
                    if l == 0 {
                        continue;
                    }
                    for b in 0..bc {
                        for c in 0..ec {
                            let rr = t.right.get(b, c) as u64;
                            if rr == 0 {
                                continue;
                            }
                            let cell = &mut self.rows[base + r * ec + c][off + a * bc + b];
                            *cell = ((*cell as u64 + l * rr) % p) as u32;
                        }
                    }
                }
            }
        }
    }

    fn coefficient_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.p, self.rows.len(), self.n_vars);
        for (r, row) in self.rows.iter().enumerate() {
            for (c, &x) in row.iter().enumerate() {
                if x != 0 {
                    m.set(r, c, x);
                }
            }
        }
        m
    }

    fn unflatten(&self, x: &[u32]) -> Vec<Matrix> {
        self.blocks
            .iter()
            .zip(&self.offsets)
            .map(|(&(r, c), &off)| {
                let mut m = Matrix::zeros(self.p, r, c);
                for i in 0..r {
                    for j in 0..c {
                        m.set(i, j, x[off + i * c + j]);
                    }
                }
                m
            })
            .collect()
    }

    /// A particular solution, or the infeasibility certificate (a combination of
    /// equations whose left sides cancel while right sides do not).
    pub fn solve(&self) -> std::result::Result<Vec<Matrix>, Vec<u32>> {
        let a = self.coefficient_matrix();
        let b = Matrix::column(self.p, &self.rhs);
        let x = a.solve_or_certificate(&b)?;
        Ok(self.unflatten(&x.col(0)))
    }

    /// Basis of solutions of the homogeneous system (right-hand sides ignored).
    pub fn kernel(&self) -> Vec<Vec<Matrix>> {
        let a = self.coefficient_matrix();
        let k = a.kernel();
        (0..k.cols()).map(|j| self.unflatten(&k.col(j))).collect()
    }
}

/// Checks that a matrix has the expected shape, producing a descriptive error.
pub fn expect_shape(m: &Matrix, rows: usize, cols: usize, what: &str) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::Shape(format!(
            "{what}: expected {rows}x{cols}, found {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}
