use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use super::poly::{parse_q, q_to_f64, qi, Q};
use super::rational::RationalFunction;
use super::TransferMatrix;
use crate::error::{Error, Result};

/// Dense matrix of exact rationals (state-space data, static gains).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl QMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Q>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "QMatrix::new",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        Ok(QMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Q) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        QMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidArgument("ragged matrix rows".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_ints(rows: usize, cols: usize, data: &[i64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&v| qi(v)).collect())
    }

    /// Parses `"a,b;c,d"` (rows separated by `;`, entries by `,`).
    pub fn parse(text: &str) -> Result<Self> {
        let rows = text
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|e| parse_q(e).ok_or_else(|| Error::InvalidArgument(format!("bad rational entry {e:?}"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| Q::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Q::one() } else { Q::zero() })
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

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.data[i * self.cols + j]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn checked_mul(&self, rhs: &QMatrix) -> Result<QMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                op: "QMatrix::mul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(Self::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).fold(Q::zero(), |acc, k| acc + self.get(i, k) * rhs.get(k, j))
        }))
    }

    pub fn checked_add(&self, rhs: &QMatrix) -> Result<QMatrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::DimensionMismatch {
                op: "QMatrix::add",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| {
            self.get(i, j) + rhs.get(i, j)
        }))
    }

    pub fn scale(&self, c: &Q) -> QMatrix {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * c)
    }

    /// Exact inverse by Gauss-Jordan elimination over the rationals.
    pub fn inverse(&self) -> Result<QMatrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                op: "QMatrix::inverse",
                left: self.shape(),
                right: self.shape(),
            });
        }
        let n = self.rows;
        let mut a: Vec<Vec<Q>> = (0..n)
            .map(|i| {
                let mut row: Vec<Q> = (0..n).map(|j| self.get(i, j).clone()).collect();
                row.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
                row
            })
            .collect();
        for k in 0..n {
            let p = (k..n).find(|&r| !a[r][k].is_zero()).ok_or(Error::SingularMatrix)?;
            a.swap(k, p);
            let inv = a[k][k].recip();
            for v in a[k].iter_mut() {
                *v *= &inv;
            }
            let pivot = a[k].clone();
            for (i, row) in a.iter_mut().enumerate() {
                if i == k || row[k].is_zero() {
                    continue;
                }
                let factor = row[k].clone();
                for (x, p) in row.iter_mut().zip(&pivot) {
                    *x -= &factor * p;
                }
            }
        }
        Ok(Self::from_fn(n, n, |i, j| a[i][n + j].clone()))
    }

    pub fn pow(&self, k: u32) -> Result<QMatrix> {
        let mut acc = QMatrix::identity(self.rows);
        for _ in 0..k {
            acc = acc.checked_mul(self)?;
        }
        Ok(acc)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| q_to_f64(self.get(i, j)))
    }

    /// Largest eigenvalue modulus (floating point).
    pub fn spectral_radius(&self) -> f64 {
        if self.rows == 0 {
            return 0.0;
        }
        self.to_f64()
            .complex_eigenvalues()
            .iter()
            .map(|l| l.norm())
            .fold(0.0, f64::max)
    }

    pub fn to_transfer(&self) -> TransferMatrix {
        TransferMatrix::from_fn(self.rows, self.cols, |i, j| {
            RationalFunction::constant(self.get(i, j).clone())
        })
    }

    pub fn hstack(&self, rhs: &QMatrix) -> Result<QMatrix> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch {
                op: "QMatrix::hstack",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(Self::from_fn(self.rows, self.cols + rhs.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                rhs.get(i, j - self.cols).clone()
            }
        }))
    }
}

impl Add for &QMatrix {
    type Output = QMatrix;
    fn add(self, rhs: &QMatrix) -> QMatrix {
        self.checked_add(rhs).expect("QMatrix shapes must agree")
    }
}

impl Sub for &QMatrix {
    type Output = QMatrix;
    fn sub(self, rhs: &QMatrix) -> QMatrix {
        self + &(-rhs)
    }
}

impl Mul for &QMatrix {
    type Output = QMatrix;
    fn mul(self, rhs: &QMatrix) -> QMatrix {
        self.checked_mul(rhs).expect("QMatrix shapes must conform")
    }
}

impl Neg for &QMatrix {
    type Output = QMatrix;
    fn neg(self) -> QMatrix {
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| -v).collect(),
        }
    }
}
