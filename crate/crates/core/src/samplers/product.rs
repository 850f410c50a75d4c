use rand::Rng;

use super::stable::sample_stable_standard;
use crate::error::{Error, Result};
use crate::kernel::StableParams;
use crate::scalar::Real;

/// `eps * prod_{i < m} |X_i(1)|^(alpha^-i)` with a uniform sign `eps` and
/// i.i.d. `X_i(1)` drawn with the configured scale (drift ignored).
/// Accumulated in log space.
pub fn product_formula_sample<T: Real, R: Rng + ?Sized>(
    p: &StableParams<T>,
    m_trunc: usize,
    rng: &mut R,
) -> Result<T> {
    if p.alpha <= T::one() {
        return Err(Error::UnsupportedRegime(format!(
            "product formula needs alpha > 1, got {}",
            p.alpha
        )));
    }
    if m_trunc == 0 {
        return Err(Error::InvalidParameter("truncation must be >= 1".into()));
    }
    let sign = if rng.random::<bool>() {
        T::one()
    } else {
        -T::one()
    };
    let inv = T::one() / p.alpha;
    let mut expo = T::one();
    let mut log = T::zero();
    for _ in 0..m_trunc {
        let z = (p.sigma * sample_stable_standard(p.alpha, rng)).abs();
        log = log + expo * z.ln();
        expo = expo * inv;
    }
    Ok(sign * log.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    fn quantile(v: &mut [f64], q: f64) -> f64 {
        v.sort_by(f64::total_cmp);
        v[((v.len() - 1) as f64 * q) as usize]
    }

    #[test]
    fn rejects_alpha_at_most_one() {
        let mut rng = RandomStream::from_seed(1).rng();
        let p = StableParams::new(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            product_formula_sample(&p, 10, &mut rng),
            Err(Error::UnsupportedRegime(_))
        ));
    }

    #[test]
    fn truncation_converges() {
        let p = StableParams::new(1.5, 1.0, 0.0).unwrap();
        let n = 100_000;
        // Per-sample streams: both truncations share the sign and the first
        // 25 factors.
        let draw = |m: usize| -> Vec<f64> {
            (0..n)
                .map(|i| product_formula_sample(&p, m, &mut RandomStream::new(2, i).rng()).unwrap())
                .collect()
        };
        let (mut a, mut b) = (draw(25), draw(50));
        for q in [0.1, 0.9] {
            let (qa, qb) = (quantile(&mut a, q), quantile(&mut b, q));
            assert!((qa / qb - 1.0).abs() < 0.005, "q{q}: {qa} vs {qb}");
        }
    }

    #[test]
    fn sign_balanced() {
        let p = StableParams::new(1.5, 1.0, 0.0).unwrap();
        let mut rng = RandomStream::from_seed(3).rng();
        let n = 100_000;
        let pos = (0..n)
            .filter(|_| product_formula_sample(&p, 25, &mut rng).unwrap() > 0.0)
            .count();
        assert!((pos as f64 - n as f64 / 2.0).abs() < 3.0 * (n as f64 / 4.0).sqrt());
    }
}
