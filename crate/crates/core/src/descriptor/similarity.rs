use super::DescriptorError;

/// Pluggable descriptor similarity; higher is more similar.
pub trait Similarity: Send + Sync {
    fn score(&self, a: &[f64], b: &[f64]) -> Result<f64, DescriptorError>;
}

/// Pearson correlation coefficient.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pcc;

impl Similarity for Pcc {
    fn score(&self, a: &[f64], b: &[f64]) -> Result<f64, DescriptorError> {
        pcc(a, b)
    }
}

pub fn pcc(x: &[f64], y: &[f64]) -> Result<f64, DescriptorError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(DescriptorError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(DescriptorError::ConstantVector);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert!((pcc(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pcc(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        // x̄ = 2.5, ȳ = 3.75; Σdxdy = 3.5, Σdx² = 5, Σdy² = 4.75
        let oracle = 3.5 / (5.0f64 * 4.75).sqrt();
        let v = pcc(&[1.0, 2.0, 3.0, 4.0], &[2.0, 4.0, 5.0, 4.0]).unwrap();
        assert!((v - oracle).abs() < 1e-12);
        assert!((v - 0.7182).abs() < 1e-4);
    }

    #[test]
    fn errors() {
        assert_eq!(
            pcc(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(DescriptorError::ConstantVector)
        );
        assert_eq!(
            pcc(&[1.0], &[1.0]),
            Err(DescriptorError::LengthMismatch(1, 1))
        );
        assert_eq!(
            pcc(&[1.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(DescriptorError::LengthMismatch(2, 3))
        );
    }

    proptest! {
        #[test]
        fn bounded_and_affine_invariant(
            xy in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 3..64),
            a in 0.01..50.0f64,
            b in -100.0..100.0f64,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
            if let Ok(r) = pcc(&x, &y) {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
                let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
                let r2 = pcc(&ax, &y).unwrap();
                prop_assert!((r - r2).abs() < 1e-9);
            }
        }
    }
}
