//! Dense vector helpers shared by every module. All arithmetic is `f64`.

/// Inner product. Callers guarantee equal lengths.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Returns `v / ‖v‖`, or `None` when the norm is zero or not finite.
pub fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    let mut out: Vec<f64> = v.iter().map(|x| x / n).collect();
    // One refinement pass pulls the norm to within a couple of ulps of 1.
    let n2 = norm(&out);
    if n2 != 1.0 {
        out.iter_mut().for_each(|x| *x /= n2);
    }
    Some(out)
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_four_five() {
        assert_eq!(normalized(&[3.0, 4.0]).unwrap(), vec![0.6, 0.8]);
    }

    #[test]
    fn zero_vector_has_no_direction() {
        assert!(normalized(&[0.0, 0.0, 0.0]).is_none());
        assert!(normalized(&[f64::NAN, 1.0]).is_none());
    }

    #[test]
    fn normalized_is_unit() {
        let v = normalized(&[1e-200, 3e-200, -2e-200]);
        // Squaring underflows here; treated as zero.
        assert!(v.is_none());
        let v = normalized(&[0.1, 0.7, -1.3, 2.2]).unwrap();
        assert!((norm(&v) - 1.0).abs() < 1e-15);
    }
}
