//! Error metrics used to compare kernel results against the oracle.

/// Default absolute floor for [`max_rel_error`].
pub const ABS_FLOOR: f32 = 1e-6;

/// Normwise relative error `max|x - y| / max(max|y|, floor)`, with `y` the reference.
///
/// Returns infinity when the lengths differ or any value is not finite.
pub fn max_rel_error(x: &[f32], y: &[f32], floor: f32) -> f32 {
    if x.len() != y.len() {
        return f32::INFINITY;
    }
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for (&a, &b) in x.iter().zip(y) {
        if !a.is_finite() || !b.is_finite() {
            return f32::INFINITY;
        }
        diff = diff.max((a as f64 - b as f64).abs());
        scale = scale.max((b as f64).abs());
    }
    (diff / scale.max(floor as f64)) as f32
}

/// Largest absolute elementwise difference, infinity on length mismatch.
pub fn max_abs_diff(x: &[f32], y: &[f32]) -> f32 {
    if x.len() != y.len() {
        return f32::INFINITY;
    }
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f32::max)
}

/// True when both slices hold the same bit patterns.
pub fn bit_equal(x: &[f32], y: &[f32]) -> bool {
    x.len() == y.len() && x.iter().zip(y).all(|(a, b)| a.to_bits() == b.to_bits())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_zero() {
        assert_eq!(max_rel_error(&[1.0, -2.0], &[1.0, -2.0], ABS_FLOOR), 0.0);
    }

    #[test]
    fn scaled_by_reference_norm() {
        let e = max_rel_error(&[1.0, 4.1], &[1.0, 4.0], ABS_FLOOR);
        assert!((e - 0.025).abs() < 1e-6);
    }

    #[test]
    fn floor_guards_zero_reference() {
        assert!((max_rel_error(&[1e-7], &[0.0], 1e-6) - 0.1).abs() < 1e-6);
    }

    #[test]
    fn nan_and_length_are_infinite() {
        assert!(max_rel_error(&[f32::NAN], &[0.0], 1.0).is_infinite());
        assert!(max_rel_error(&[0.0], &[], 1.0).is_infinite());
        assert!(!bit_equal(&[0.0], &[-0.0]));
    }
}
