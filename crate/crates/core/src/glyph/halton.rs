//! Halton low-discrepancy sequence.

use super::param::ParamError;

/// Radical inverse of `index` in `base`: the base-`base` digits of `index`
/// mirrored about the radix point.
pub fn halton(index: u64, base: u32) -> Result<f64, ParamError> {
    if base < 2 {
        return Err(ParamError::InvalidBase(base));
    }
    if index == 0 {
        return Err(ParamError::InvalidIndex);
    }
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut fraction = 1.0;
    let mut value = 0.0;
    let mut i = index;
    while i > 0 {
        fraction *= inv;
        value += fraction * (i % b) as f64;
        i /= b;
    }
    Ok(value)
}

/// The 2-D Halton point with bases 2 and 3 for `index >= 1`, in `[0, 1)^2`.
pub fn halton_2d(index: u64) -> (f64, f64) {
    (
        halton(index, 2).expect("valid base"),
        halton(index, 3).expect("valid base"),
    )
}
