use super::poly::Q;
use super::{QMatrix, RationalFunction, TransferMatrix};
use crate::error::{Error, Result};

/// Discrete-time state-space data `x+ = Ax + Bu`, `y = Cx + Du`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSpace {
    a: QMatrix,
    b: QMatrix,
    c: QMatrix,
    d: QMatrix,
}

impl StateSpace {
    pub fn new(a: QMatrix, b: QMatrix, c: QMatrix, d: QMatrix) -> Result<Self> {
        let n = a.rows();
        let mismatch = |left, right| Error::DimensionMismatch {
            op: "StateSpace::new",
            left,
            right,
        };
        if a.cols() != n {
            return Err(mismatch(a.shape(), (n, n)));
        }
        if b.rows() != n {
            return Err(mismatch(b.shape(), (n, b.cols())));
        }
        if c.cols() != n {
            return Err(mismatch(c.shape(), (c.rows(), n)));
        }
        if d.shape() != (c.rows(), b.cols()) {
            return Err(mismatch(d.shape(), (c.rows(), b.cols())));
        }
        Ok(StateSpace { a, b, c, d })
    }

    /// State-feedback data only: `C = I`, `D = 0`.
    pub fn state_feedback(a: QMatrix, b: QMatrix) -> Result<Self> {
        let n = a.rows();
        let m = b.cols();
        Self::new(a, b, QMatrix::identity(n), QMatrix::zeros(n, m))
    }

    pub fn a(&self) -> &QMatrix {
        &self.a
    }

    pub fn b(&self) -> &QMatrix {
        &self.b
    }

    pub fn c(&self) -> &QMatrix {
        &self.c
    }

    pub fn d(&self) -> &QMatrix {
        &self.d
    }

    /// Number of states.
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// Number of inputs.
    pub fn m(&self) -> usize {
        self.b.cols()
    }

    /// Number of outputs.
    pub fn p(&self) -> usize {
        self.c.rows()
    }

    /// `zI - A` as a polynomial transfer matrix.
    pub fn zi_minus_a(&self) -> TransferMatrix {
        let z = RationalFunction::z();
        TransferMatrix::from_fn(self.n(), self.n(), |i, j| {
            let a = RationalFunction::constant(self.a.get(i, j).clone());
            if i == j {
                &z - &a
            } else {
                -&a
            }
        })
    }

    /// `(zI - A)^-1`.
    pub fn resolvent(&self) -> Result<TransferMatrix> {
        self.zi_minus_a().inverse()
    }

    /// `G(z) = C (zI - A)^-1 B + D`.
    pub fn transfer(&self) -> Result<TransferMatrix> {
        let r = self.resolvent()?;
        self.c
            .to_transfer()
            .checked_mul(&r)?
            .checked_mul(&self.b.to_transfer())?
            .checked_add(&self.d.to_transfer())
    }

    pub fn with_a(&self, a: QMatrix) -> Result<Self> {
        Self::new(a, self.b.clone(), self.c.clone(), self.d.clone())
    }

    pub fn with_c(&self, c: QMatrix) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), c, self.d.clone())
    }

    pub fn with_d(&self, d: QMatrix) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), self.c.clone(), d)
    }

    /// Scalar system from four rationals.
    pub fn scalar(a: Q, b: Q, c: Q, d: Q) -> Self {
        let one = |v: Q| QMatrix::new(1, 1, vec![v]).expect("1x1");
        StateSpace {
            a: one(a),
            b: one(b),
            c: one(c),
            d: one(d),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::poly::{q, qi};
    use super::*;

    #[test]
    fn scalar_transfer() {
        // A = 1/2, B = C = 1, D = 0 -> 1/(z - 1/2)
        let ss = StateSpace::scalar(q(1, 2), qi(1), qi(1), qi(0));
        let g = ss.transfer().unwrap();
        assert_eq!(g.get(0, 0).den().coeffs(), &[q(-1, 2), qi(1)]);
        assert!(g.get(0, 0).num().is_one());
    }

    #[test]
    fn dimension_checks() {
        let a = QMatrix::identity(2);
        let b = QMatrix::zeros(2, 1);
        let c = QMatrix::zeros(1, 2);
        assert!(StateSpace::new(a.clone(), b.clone(), c.clone(), QMatrix::zeros(1, 1)).is_ok());
        assert!(StateSpace::new(a.clone(), QMatrix::zeros(3, 1), c.clone(), QMatrix::zeros(1, 1)).is_err());
        assert!(StateSpace::new(a, b, c, QMatrix::zeros(2, 1)).is_err());
    }
}
