use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01, StandardNormal};

use crate::scalar::Real;

/// Symmetric alpha-stable draw with characteristic function `exp(-|u|^alpha)`
/// (Chambers–Mallows–Stuck). `alpha = 2` gives a centred Gaussian of
/// variance 2 and `alpha = 1` a standard Cauchy.
pub fn sample_stable_standard<T: Real, R: Rng + ?Sized>(alpha: T, rng: &mut R) -> T {
    let a = alpha.as_f64();
    if a == 2.0 {
        let z: f64 = StandardNormal.sample(rng);
        return T::lit(std::f64::consts::SQRT_2 * z);
    }
    let u: f64 = Open01.sample(rng);
    let v = std::f64::consts::PI * (u - 0.5);
    if a == 1.0 {
        return T::lit(v.tan());
    }
    let w: f64 = Exp1.sample(rng);
    let x = (a * v).sin() / v.cos().powf(1.0 / a) * (((1.0 - a) * v).cos() / w).powf((1.0 - a) / a);
    T::lit(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use crate::verify::ks_one_sample;

    #[test]
    fn gaussian_case_has_variance_two() {
        let mut rng = RandomStream::from_seed(21).rng();
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_stable_standard(2.0, &mut rng))
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((var - 2.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn cauchy_case_matches_arctan_cdf() {
        let mut rng = RandomStream::from_seed(22).rng();
        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| sample_stable_standard(1.0, &mut rng))
            .collect();
        let d = ks_one_sample(&xs, |x| 0.5 + x.atan() / std::f64::consts::PI).unwrap();
        assert!(d < 0.005, "KS {d}");
    }

    #[test]
    fn symmetric_for_generic_alpha() {
        let mut rng = RandomStream::from_seed(23).rng();
        let n = 100_000;
        for alpha in [0.5, 0.8, 1.5, 1.8] {
            let pos = (0..n)
                .filter(|_| sample_stable_standard(alpha, &mut rng) > 0.0)
                .count();
            let z = (pos as f64 - n as f64 / 2.0) / (n as f64 / 4.0).sqrt();
            assert!(z.abs() < 3.0, "alpha {alpha}: z = {z}");
        }
    }

    #[test]
    fn near_two_approaches_gaussian() {
        // CMS at alpha = 1.999 should be close to the alpha = 2 law.
        let mut rng = RandomStream::from_seed(24).rng();
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_stable_standard(1.999, &mut rng))
            .collect();
        let d = ks_one_sample(&xs, |x| {
            crate::verify::normal_cdf(x / std::f64::consts::SQRT_2)
        })
        .unwrap();
        assert!(d < 0.01, "KS {d}");
    }
}
