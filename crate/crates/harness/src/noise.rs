use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Adds i.i.d. Gaussian noise with standard deviation `sigma` to every
/// observed component (radians and p.u. alike).
pub fn add_noise<R: Rng>(values: &[f64], sigma: f64, rng: &mut R) -> Vec<f64> {
    if sigma == 0.0 {
        return values.to_vec();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
    values.iter().map(|v| v + normal.sample(rng)).collect()
}
