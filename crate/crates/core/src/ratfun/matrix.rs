use std::fmt;

use serde::{Deserialize, Serialize};

use super::poly::{Polynomial, Q};
use super::rational::RationalFunction;
use crate::error::{Error, Result};

/// A named group of consecutive rows or columns (one signal of a realization).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub label: String,
    pub size: usize,
}

impl Block {
    pub fn new(label: impl Into<String>, size: usize) -> Self {
        Block {
            label: label.into(),
            size,
        }
    }
}

/// Dense matrix of exact rational functions of `z`, row-major.
///
/// Optional row/column partitions name the signal blocks. Equality compares
/// shape and entries only; partitions are labels, not values.
#[derive(Clone)]
pub struct TransferMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RationalFunction>,
    row_blocks: Option<Vec<Block>>,
    col_blocks: Option<Vec<Block>>,
}

impl PartialEq for TransferMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.entries == other.entries
    }
}

impl Eq for TransferMatrix {}

fn check_partition(blocks: &[Block], total: usize, what: &str) -> Result<()> {
    let sum: usize = blocks.iter().map(|b| b.size).sum();
    if sum != total {
        return Err(Error::InvalidPartition(format!(
            "{what} block sizes sum to {sum}, expected {total}"
        )));
    }
    if blocks.iter().any(|b| b.size == 0) {
        return Err(Error::InvalidPartition(format!("{what} has an empty block")));
    }
    Ok(())
}

impl TransferMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<RationalFunction>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "TransferMatrix::new",
                left: (rows, cols),
                right: (entries.len(), 1),
            });
        }
        Ok(TransferMatrix {
            rows,
            cols,
            entries,
            row_blocks: None,
            col_blocks: None,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> RationalFunction) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        TransferMatrix {
            rows,
            cols,
            entries,
            row_blocks: None,
            col_blocks: None,
        }
    }

    pub fn from_rows(rows: Vec<Vec<RationalFunction>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidArgument("ragged matrix rows".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn scalar(f: RationalFunction) -> Self {
        Self::from_fn(1, 1, |_, _| f.clone())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| RationalFunction::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                RationalFunction::one()
            } else {
                RationalFunction::zero()
            }
        })
    }

    /// `c * I`.
    pub fn diagonal(n: usize, c: &RationalFunction) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { c.clone() } else { RationalFunction::zero() })
    }

    /// Attaches signal partitions; sizes must cover the matrix exactly.
    pub fn with_blocks(mut self, row_blocks: Vec<Block>, col_blocks: Vec<Block>) -> Result<Self> {
        check_partition(&row_blocks, self.rows, "row")?;
        check_partition(&col_blocks, self.cols, "column")?;
        self.row_blocks = Some(row_blocks);
        self.col_blocks = Some(col_blocks);
        Ok(self)
    }

    pub fn without_blocks(mut self) -> Self {
        self.row_blocks = None;
        self.col_blocks = None;
        self
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[RationalFunction] {
        &self.entries
    }

    pub fn row_blocks(&self) -> Option<&[Block]> {
        self.row_blocks.as_deref()
    }

    pub fn col_blocks(&self) -> Option<&[Block]> {
        self.col_blocks.as_deref()
    }

    pub fn get(&self, i: usize, j: usize) -> &RationalFunction {
        &self.entries[i * self.cols + j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(RationalFunction::is_zero)
    }

    pub fn is_proper(&self) -> bool {
        self.entries.iter().all(RationalFunction::is_proper)
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.entries.iter().all(RationalFunction::is_strictly_proper)
    }

    /// Every entry is a constant.
    pub fn is_static(&self) -> bool {
        self.entries.iter().all(|e| e.constant_value().is_some())
    }

    pub fn map(&self, f: impl Fn(&RationalFunction) -> RationalFunction) -> Self {
        TransferMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect(),
            row_blocks: self.row_blocks.clone(),
            col_blocks: self.col_blocks.clone(),
        }
    }

    pub fn scale(&self, c: &Q) -> Self {
        self.map(|e| e.scale(c))
    }

    pub fn scale_by(&self, f: &RationalFunction) -> Self {
        self.map(|e| e * f)
    }

    /// Multiplication by `z`.
    pub fn shift(&self) -> Self {
        self.map(|e| e.shift(1))
    }

    pub fn neg(&self) -> Self {
        self.map(|e| -e)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn submatrix(&self, r0: usize, nr: usize, c0: usize, nc: usize) -> Result<Self> {
        if r0 + nr > self.rows || c0 + nc > self.cols {
            return Err(Error::DimensionMismatch {
                op: "submatrix",
                left: self.shape(),
                right: (r0 + nr, c0 + nc),
            });
        }
        Ok(Self::from_fn(nr, nc, |i, j| self.get(r0 + i, c0 + j).clone()))
    }

    /// Offsets and sizes of the row blocks (a single block if unpartitioned).
    pub fn row_spans(&self) -> Vec<(usize, usize)> {
        spans(self.row_blocks.as_deref(), self.rows)
    }

    pub fn col_spans(&self) -> Vec<(usize, usize)> {
        spans(self.col_blocks.as_deref(), self.cols)
    }

    /// Block `(bi, bj)` of the partition.
    pub fn block(&self, bi: usize, bj: usize) -> Result<Self> {
        let rs = self.row_spans();
        let cs = self.col_spans();
        let (&(r0, nr), &(c0, nc)) = rs
            .get(bi)
            .zip(cs.get(bj))
            .ok_or_else(|| Error::InvalidPartition(format!("no block ({bi}, {bj})")))?;
        self.submatrix(r0, nr, c0, nc)
    }

    /// Assembles a block matrix. Each block row must share a height and each
    /// block column a width; the result carries the given labels.
    pub fn block_matrix(blocks: &[Vec<TransferMatrix>], labels: Option<&[&str]>) -> Result<Self> {
        let heights: Vec<usize> = blocks.iter().map(|row| row[0].rows).collect();
        let widths: Vec<usize> = blocks[0].iter().map(|b| b.cols).collect();
        for row in blocks {
            if row.len() != widths.len() {
                return Err(Error::InvalidArgument("ragged block rows".into()));
            }
        }
        for (bi, row) in blocks.iter().enumerate() {
            for (bj, b) in row.iter().enumerate() {
                if b.rows != heights[bi] || b.cols != widths[bj] {
                    return Err(Error::DimensionMismatch {
                        op: "block_matrix",
                        left: (heights[bi], widths[bj]),
                        right: b.shape(),
                    });
                }
            }
        }
        let rows: usize = heights.iter().sum();
        let cols: usize = widths.iter().sum();
        let row_off = offsets(&heights);
        let col_off = offsets(&widths);
        let out = Self::from_fn(rows, cols, |i, j| {
            let bi = row_off.partition_point(|&o| o <= i) - 1;
            let bj = col_off.partition_point(|&o| o <= j) - 1;
            blocks[bi][bj].get(i - row_off[bi], j - col_off[bj]).clone()
        });
        match labels {
            Some(labels) if labels.len() == heights.len() && heights == widths => {
                let make = |sizes: &[usize]| {
                    labels
                        .iter()
                        .zip(sizes)
                        .map(|(l, &s)| Block::new(*l, s))
                        .collect::<Vec<_>>()
                };
                out.with_blocks(make(&heights), make(&widths))
            }
            Some(_) => Err(Error::InvalidPartition("labels require a square block layout".into())),
            None => Ok(out),
        }
    }

    pub fn hstack(&self, rhs: &TransferMatrix) -> Result<Self> {
        Self::block_matrix(&[vec![self.clone(), rhs.clone()]], None)
    }

    pub fn vstack(&self, rhs: &TransferMatrix) -> Result<Self> {
        Self::block_matrix(&[vec![self.clone()], vec![rhs.clone()]], None)
    }

    /// Copies another matrix's partitions onto this one (shapes must match).
    pub fn with_blocks_of(self, other: &TransferMatrix) -> Result<Self> {
        match (&other.row_blocks, &other.col_blocks) {
            (Some(r), Some(c)) => self.with_blocks(r.clone(), c.clone()),
            _ => Ok(self),
        }
    }

    pub fn checked_add(&self, rhs: &TransferMatrix) -> Result<Self> {
        mat_add(self, rhs)
    }

    pub fn checked_sub(&self, rhs: &TransferMatrix) -> Result<Self> {
        mat_add(self, &rhs.neg())
    }

    pub fn checked_mul(&self, rhs: &TransferMatrix) -> Result<Self> {
        mat_mul(self, rhs)
    }

    pub fn inverse(&self) -> Result<Self> {
        mat_inverse(self)
    }

    /// `I - self`.
    pub fn identity_minus(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                op: "identity_minus",
                left: self.shape(),
                right: self.shape(),
            });
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| {
            let e = self.get(i, j);
            if i == j {
                &RationalFunction::one() - e
            } else {
                -e
            }
        }))
    }

    /// `I + self`.
    pub fn identity_plus(&self) -> Result<Self> {
        Self::identity(self.rows).checked_add(self)
    }

    pub fn determinant(&self) -> Result<RationalFunction> {
        mat_det(self)
    }
}

fn spans(blocks: Option<&[Block]>, total: usize) -> Vec<(usize, usize)> {
    match blocks {
        None => vec![(0, total)],
        Some(blocks) => {
            let mut off = 0;
            blocks
                .iter()
                .map(|b| {
                    let s = (off, b.size);
                    off += b.size;
                    s
                })
                .collect()
        }
    }
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    sizes
        .iter()
        .map(|s| {
            let o = acc;
            acc += s;
            o
        })
        .collect()
}

pub fn mat_add(x: &TransferMatrix, y: &TransferMatrix) -> Result<TransferMatrix> {
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch {
            op: "mat_add",
            left: x.shape(),
            right: y.shape(),
        });
    }
    Ok(TransferMatrix {
        rows: x.rows,
        cols: x.cols,
        entries: x.entries.iter().zip(&y.entries).map(|(a, b)| a + b).collect(),
        row_blocks: x.row_blocks.clone().or_else(|| y.row_blocks.clone()),
        col_blocks: x.col_blocks.clone().or_else(|| y.col_blocks.clone()),
    })
}

pub fn mat_mul(x: &TransferMatrix, y: &TransferMatrix) -> Result<TransferMatrix> {
    if x.cols != y.rows {
        return Err(Error::DimensionMismatch {
            op: "mat_mul",
            left: x.shape(),
            right: y.shape(),
        });
    }
    let mut out = TransferMatrix::from_fn(x.rows, y.cols, |i, j| {
        let mut terms = (0..x.cols)
            .filter(|&k| !x.get(i, k).is_zero() && !y.get(k, j).is_zero())
            .map(|k| x.get(i, k) * y.get(k, j));
        let first = terms.next().unwrap_or_else(RationalFunction::zero);
        terms.fold(first, |acc, t| &acc + &t)
    });
    out.row_blocks = x.row_blocks.clone();
    out.col_blocks = y.col_blocks.clone();
    Ok(out)
}

/// Row-scales `x` into a polynomial matrix: `x = diag(scale)^-1 * poly`.
fn clear_denominators(x: &TransferMatrix) -> (Vec<Vec<Polynomial>>, Vec<Polynomial>) {
    let mut rows = Vec::with_capacity(x.rows);
    let mut scales = Vec::with_capacity(x.rows);
    for i in 0..x.rows {
        let mut lcm = Polynomial::one();
        for j in 0..x.cols {
            let d = x.get(i, j).den();
            if !d.is_one() {
                let g = lcm.gcd(d);
                lcm = &lcm * &d.exact_div(&g);
            }
        }
        let row = (0..x.cols)
            .map(|j| {
                let e = x.get(i, j);
                if e.den() == &lcm {
                    e.num().clone()
                } else {
                    e.num() * &lcm.exact_div(e.den())
                }
            })
            .collect();
        rows.push(row);
        scales.push(lcm);
    }
    (rows, scales)
}

fn pick_pivot(a: &[Vec<Polynomial>], k: usize) -> Option<usize> {
    (k..a.len())
        .filter(|&r| !a[r][k].is_zero())
        .min_by_key(|&r| (a[r][k].degree(), a[r][k].coeffs().len()))
}

/// Fraction-free Gauss-Jordan (Bareiss) elimination on a polynomial matrix
/// whose first `n` columns form the square part. Returns the final pivot
/// (the determinant up to the recorded sign) or `None` if singular.
fn bareiss_gauss_jordan(a: &mut [Vec<Polynomial>], n: usize) -> Option<(Polynomial, bool)> {
    let width = a.first().map_or(0, Vec::len);
    let mut prev = Polynomial::one();
    let mut negate = false;
    for k in 0..n {
        let p = pick_pivot(a, k)?;
        if p != k {
            a.swap(k, p);
            negate = !negate;
        }
        let (head, tail) = a.split_at_mut(k);
        let (pivot_row, rest) = tail.split_first_mut().expect("row k exists");
        let pivot = pivot_row[k].clone();
        for row in head.iter_mut().chain(rest.iter_mut()) {
            let factor = row[k].clone();
            for j in 0..width {
                if j == k {
                    continue;
                }
                let mut v = &pivot * &row[j];
                if !factor.is_zero() && !pivot_row[j].is_zero() {
                    v = &v - &(&factor * &pivot_row[j]);
                }
                row[j] = if prev.is_one() { v } else { v.exact_div(&prev) };
            }
            row[k] = Polynomial::zero();
        }
        prev = pivot;
    }
    Some((prev, negate))
}

/// Exact inverse of a square transfer matrix.
pub fn mat_inverse(x: &TransferMatrix) -> Result<TransferMatrix> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch {
            op: "mat_inverse",
            left: x.shape(),
            right: x.shape(),
        });
    }
    let n = x.rows;
    let (mut a, scales) = clear_denominators(x);
    for (i, row) in a.iter_mut().enumerate() {
        row.extend((0..n).map(|j| if i == j { scales[i].clone() } else { Polynomial::zero() }));
    }
    let (det, _) = bareiss_gauss_jordan(&mut a, n).ok_or(Error::SingularMatrix)?;
    let mut out = TransferMatrix::from_fn(n, n, |i, j| {
        super::canonicalize(a[i][n + j].clone(), det.clone()).expect("nonzero pivot")
    });
    out.row_blocks = x.col_blocks.clone();
    out.col_blocks = x.row_blocks.clone();
    Ok(out)
}

/// Exact determinant; the zero function when singular.
pub fn mat_det(x: &TransferMatrix) -> Result<RationalFunction> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch {
            op: "mat_det",
            left: x.shape(),
            right: x.shape(),
        });
    }
    if x.rows == 0 {
        return Ok(RationalFunction::one());
    }
    let (mut a, scales) = clear_denominators(x);
    let n = x.rows;
    let Some((det, negate)) = bareiss_gauss_jordan(&mut a, n) else {
        return Ok(RationalFunction::zero());
    };
    let det = if negate { -&det } else { det };
    let scale = scales.iter().fold(Polynomial::one(), |acc, s| &acc * s);
    super::canonicalize(det, scale)
}

impl fmt::Display for TransferMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

impl fmt::Debug for TransferMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TransferMatrix{}x{}{}", self.rows, self.cols, self)
    }
}

#[cfg(test)]
mod tests {
    use super::super::poly::{q, qi};
    use super::*;

    fn rf(num: &[i64], den: &[i64]) -> RationalFunction {
        super::super::canonicalize(Polynomial::from_ints(num), Polynomial::from_ints(den)).unwrap()
    }

    #[test]
    fn inverse_pair_multiplies_to_one() {
        let a = TransferMatrix::scalar(RationalFunction::z_inv());
        let b = TransferMatrix::scalar(RationalFunction::z());
        assert_eq!(mat_mul(&a, &b).unwrap(), TransferMatrix::identity(1));
    }

    #[test]
    fn inverse_of_plant_controller_loop() {
        // [[1, -1/z], [-1/2, 1]]^-1
        let m = TransferMatrix::from_rows(vec![
            vec![RationalFunction::one(), rf(&[-1], &[0, 1])],
            vec![RationalFunction::constant(q(-1, 2)), RationalFunction::one()],
        ])
        .unwrap();
        let inv = mat_inverse(&m).unwrap();
        let expect = TransferMatrix::from_rows(vec![
            vec![rf(&[0, 2], &[-1, 2]), rf(&[2], &[-1, 2])],
            vec![rf(&[0, 1], &[-1, 2]), rf(&[0, 2], &[-1, 2])],
        ])
        .unwrap();
        assert_eq!(inv, expect);
    }

    #[test]
    fn unipotent_inverse() {
        let m = TransferMatrix::from_rows(vec![
            vec![RationalFunction::one(), RationalFunction::z()],
            vec![RationalFunction::zero(), RationalFunction::one()],
        ])
        .unwrap();
        let expect = TransferMatrix::from_rows(vec![
            vec![RationalFunction::one(), -&RationalFunction::z()],
            vec![RationalFunction::zero(), RationalFunction::one()],
        ])
        .unwrap();
        assert_eq!(mat_inverse(&m).unwrap(), expect);
        assert_eq!(
            mat_inverse(&TransferMatrix::identity(3)).unwrap(),
            TransferMatrix::identity(3)
        );
    }

    #[test]
    fn singular_matrix_detected() {
        let one = RationalFunction::one();
        let m = TransferMatrix::from_rows(vec![vec![one.clone(), one.clone()], vec![one.clone(), one]]).unwrap();
        assert_eq!(mat_inverse(&m), Err(Error::SingularMatrix));
        assert!(mat_det(&m).unwrap().is_zero());
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        // det [[z, 1/2], [1/(z-1), 3]] = 3z - 1/(2(z-1))
        let m = TransferMatrix::from_rows(vec![
            vec![RationalFunction::z(), RationalFunction::constant(q(1, 2))],
            vec![rf(&[1], &[-1, 1]), RationalFunction::from_int(3)],
        ])
        .unwrap();
        let expect = &RationalFunction::z().scale(&qi(3)) - &rf(&[1], &[-2, 2]);
        assert_eq!(mat_det(&m).unwrap(), expect);
    }

    #[test]
    fn dimension_errors() {
        let a = TransferMatrix::zeros(2, 3);
        assert!(matches!(mat_mul(&a, &a), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(
            mat_add(&a, &TransferMatrix::zeros(3, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(mat_inverse(&a), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn block_extraction() {
        let m = TransferMatrix::identity(3)
            .with_blocks(
                vec![Block::new("x", 2), Block::new("u", 1)],
                vec![Block::new("x", 2), Block::new("u", 1)],
            )
            .unwrap();
        assert_eq!(m.block(0, 0).unwrap(), TransferMatrix::identity(2));
        assert_eq!(m.block(1, 0).unwrap(), TransferMatrix::zeros(1, 2));
        assert!(TransferMatrix::identity(3)
            .with_blocks(vec![Block::new("x", 2)], vec![Block::new("x", 3)])
            .is_err());
    }
}
