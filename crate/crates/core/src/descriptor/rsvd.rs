use super::DescriptorError;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RsvdParams {
    pub oversampling: usize,
    pub power_iterations: usize,
    pub seed: u64,
}

impl Default for RsvdParams {
    fn default() -> Self {
        Self {
            oversampling: 5,
            power_iterations: 2,
            seed: 0x5eed_0001,
        }
    }
}

/// Leading singular triplet.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1 {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub sigma: f64,
}

/// Randomized range finder with power iterations, followed by a dense SVD of
/// the small projected matrix. Singular vectors come back with their
/// largest-magnitude entry positive.
pub fn rsvd_rank1(a: &DMatrix<f64>, params: &RsvdParams) -> Result<Rank1, DescriptorError> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 || a.iter().all(|v| *v == 0.0) {
        return Err(DescriptorError::ZeroMatrix);
    }
    let k = (1 + params.oversampling).min(m).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let omega = DMatrix::<f64>::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));

    let mut q = (a * omega).qr().q();
    for _ in 0..params.power_iterations {
        let z = (a.transpose() * &q).qr().q();
        q = (a * z).qr().q();
    }
    let b = q.transpose() * a;
    let svd = b.svd(true, true);
    let (best, sigma) =
        svd.singular_values
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::MIN),
                |acc, (i, s)| if s > acc.1 { (i, s) } else { acc },
            );
    let ub = svd.u.expect("u requested").column(best).into_owned();
    let v = svd.v_t.expect("v_t requested").row(best).transpose();
    let mut u = &q * ub;
    let mut v = v.into_owned();
    u.normalize_mut();
    v.normalize_mut();
    fix_sign(&mut u);
    fix_sign(&mut v);
    Ok(Rank1 { u, v, sigma })
}

pub(crate) fn fix_sign(v: &mut DVector<f64>) {
    let idx = v.iamax();
    if v[idx] < 0.0 {
        v.neg_mut();
    }
}
