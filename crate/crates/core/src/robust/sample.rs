use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DeltaShape, UncertaintySpec};
use crate::error::Result;
use crate::exec::Execution;
use crate::ratfun::poly::Q;
use crate::ratfun::{canonicalize, hinf_norm_with, Polynomial, RationalFunction, TransferMatrix};

/// FIR coefficients are multiples of `1 / COEFF_RESOLUTION` in `[-1, 1]`.
pub const COEFF_RESOLUTION: i64 = 1 << 16;

/// The norm scale is rounded down to a multiple of `1 / SCALE_RESOLUTION`.
pub const SCALE_RESOLUTION: i64 = 1 << 32;

/// One draw from the ball, seeded directly with `spec.seed`.
///
/// Each masked block is an FIR matrix of order `sample_order` with
/// coefficients uniform in `[-1, 1]`; the whole matrix is then scaled so its
/// H∞ norm is `u · radius` with `u` uniform in `(0, 1)`.
pub fn sample_delta(spec: &UncertaintySpec, shape: &DeltaShape) -> Result<TransferMatrix> {
    shape.check_mask(&spec.block_mask)?;
    Ok(draw(spec, shape, spec.seed)?.0)
}

/// Sample `index` of a Monte-Carlo run and its H∞ norm: `Δ = 0` for index
/// `0`, otherwise a draw seeded with `seed + index`.
pub fn sample_delta_at(spec: &UncertaintySpec, shape: &DeltaShape, index: usize) -> Result<(TransferMatrix, f64)> {
    shape.check_mask(&spec.block_mask)?;
    if index == 0 {
        let zero = TransferMatrix::zeros(shape.rows(), shape.cols())
            .with_blocks(shape.row_blocks.clone(), shape.col_blocks.clone())?;
        return Ok((zero, 0.0));
    }
    draw(spec, shape, spec.seed.wrapping_add(index as u64))
}

fn fir_entry(rng: &mut ChaCha8Rng, order: usize) -> RationalFunction {
    // Σ c_j z^-j = (Σ c_j z^(order-j)) / z^order
    let mut coeffs: Vec<Q> = (0..=order)
        .map(|_| {
            Q::new(
                BigInt::from(rng.random_range(-COEFF_RESOLUTION..=COEFF_RESOLUTION)),
                BigInt::from(COEFF_RESOLUTION),
            )
        })
        .collect();
    coeffs.reverse();
    canonicalize(
        Polynomial::new(coeffs),
        Polynomial::monomial(Q::from_integer(1.into()), order),
    )
    .expect("monomial denominator")
}

fn draw(spec: &UncertaintySpec, shape: &DeltaShape, seed: u64) -> Result<(TransferMatrix, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, cols) = (shape.rows(), shape.cols());
    let mut entries = vec![RationalFunction::zero(); rows * cols];
    let offsets = |blocks: &[crate::ratfun::Block]| {
        blocks
            .iter()
            .scan(0, |acc, b| {
                let start = *acc;
                *acc += b.size;
                Some((start, b.size))
            })
            .collect::<Vec<_>>()
    };
    let row_spans = offsets(&shape.row_blocks);
    let col_spans = offsets(&shape.col_blocks);
    for &(bi, bj) in &spec.block_mask {
        let (r0, nr) = row_spans[bi];
        let (c0, nc) = col_spans[bj];
        for r in r0..r0 + nr {
            for c in c0..c0 + nc {
                entries[r * cols + c] = fir_entry(&mut rng, spec.sample_order);
            }
        }
    }
    let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let raw =
        TransferMatrix::new(rows, cols, entries)?.with_blocks(shape.row_blocks.clone(), shape.col_blocks.clone())?;
    let raw_norm = hinf_norm_with(&raw, Execution::Sequential)?;
    if raw_norm == 0.0 {
        return Ok((raw, 0.0));
    }
    let steps = (u * spec.radius / raw_norm * SCALE_RESOLUTION as f64).floor();
    let steps = if steps.is_finite() { steps as i64 } else { 0 };
    let scale = Q::new(BigInt::from(steps), BigInt::from(SCALE_RESOLUTION));
    let norm = raw_norm * steps as f64 / SCALE_RESOLUTION as f64;
    Ok((raw.scale(&scale), norm))
}
