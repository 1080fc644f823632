use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecspace::{dot, splitmix64, DenseVector, Lp, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    /// Fresh `U[-level, level]` draw on every call.
    Uniform,
    /// `±level`, chosen by a hash of `z` rounded to 1e-9. Deterministic in `z`.
    SignAdversarial,
    /// `level * sign(<r, z - c>)` (l2 flavour) or `level * sign(<r, sign(z - c)>)`
    /// (l1 flavour). Aligns the estimator bias with `r` around `c`.
    Directional,
}

/// Bounded perturbation `delta(z)` with `|delta(z)| <= level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub level: f64,
    /// Mixed into the hash of `SignAdversarial`.
    #[serde(default)]
    pub salt: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<DenseVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<DenseVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flavour: Option<Lp>,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self::new(NoiseKind::None, 0.0)
    }

    pub fn new(kind: NoiseKind, level: f64) -> Self {
        Self { kind, level, salt: 0, direction: None, center: None, flavour: None }
    }

    pub fn uniform(level: f64) -> Self {
        Self::new(NoiseKind::Uniform, level)
    }

    pub fn sign_adversarial(level: f64, salt: u64) -> Self {
        Self { salt, ..Self::new(NoiseKind::SignAdversarial, level) }
    }

    pub fn directional(level: f64, direction: DenseVector, center: DenseVector, flavour: Lp) -> Self {
        Self { direction: Some(direction), center: Some(center), flavour: Some(flavour), ..Self::new(NoiseKind::Directional, level) }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !self.level.is_finite() || self.level < 0.0 {
            return Err(Error::Config(format!("noise level must be finite and >= 0, got {}", self.level)));
        }
        if self.kind == NoiseKind::Directional {
            let (Some(r), Some(c), Some(_)) = (&self.direction, &self.center, &self.flavour) else {
                return Err(Error::Config("directional noise needs direction, center and flavour".into()));
            };
            for v in [r, c] {
                if v.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: v.dim() });
                }
            }
        }
        Ok(())
    }

    /// `delta(z)`. Only `Uniform` consumes randomness.
    pub fn sample(&self, z: &[f64], rng: &mut RngStream) -> f64 {
        if self.level == 0.0 {
            return 0.0;
        }
        match self.kind {
            NoiseKind::None => 0.0,
            NoiseKind::Uniform => rng.uniform_in(-self.level, self.level),
            NoiseKind::SignAdversarial => {
                let mut h = splitmix64(self.salt);
                for &v in z {
                    h = splitmix64(h ^ ((v * 1e9).round() as i64 as u64));
                }
                if h >> 63 == 0 {
                    self.level
                } else {
                    -self.level
                }
            }
            NoiseKind::Directional => {
                let r = self.direction.as_ref().expect("validated");
                let c = self.center.as_ref().expect("validated");
                let s = match self.flavour.expect("validated") {
                    Lp::L2 => r.iter().zip(z).zip(c.iter()).map(|((ri, zi), ci)| ri * (zi - ci)).sum::<f64>(),
                    Lp::L1 => {
                        let signs: Vec<f64> = z.iter().zip(c.iter()).map(|(zi, ci)| sgn(zi - ci)).collect();
                        dot(r, &signs)
                    }
                };
                self.level * sgn(s)
            }
        }
    }
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_order_statistics() {
        let noise = NoiseModel::uniform(6e-5);
        let mut rng = RngStream::from_seed(17);
        let max = (0..100_000).map(|_| noise.sample(&[0.0], &mut rng).abs()).fold(0.0, f64::max);
        assert!(max > 5.9e-5 && max <= 6e-5, "{max}");
    }

    #[test]
    fn sign_adversarial_is_deterministic() {
        let noise = NoiseModel::sign_adversarial(0.5, 3);
        let mut a = RngStream::from_seed(1);
        let mut b = RngStream::from_seed(2);
        let z = [0.1, 0.2, 0.7];
        assert_eq!(noise.sample(&z, &mut a), noise.sample(&z, &mut b));
        let hits: f64 = (0..1000).map(|i| noise.sample(&[i as f64 * 0.001], &mut a)).sum();
        // Both signs show up.
        assert!(hits.abs() < 200.0);
    }

    #[test]
    fn directional_signs() {
        let r = DenseVector::new(vec![1.0, 0.0]).unwrap();
        let c = DenseVector::zeros(2);
        let n2 = NoiseModel::directional(0.1, r.clone(), c.clone(), Lp::L2);
        let mut rng = RngStream::from_seed(0);
        assert_eq!(n2.sample(&[0.3, -5.0], &mut rng), 0.1);
        assert_eq!(n2.sample(&[-0.3, 5.0], &mut rng), -0.1);
        let n1 = NoiseModel::directional(0.1, r, c, Lp::L1);
        assert_eq!(n1.sample(&[1e-6, -5.0], &mut rng), 0.1);
        assert!(n1.validate(2).is_ok());
        assert!(n1.validate(3).is_err());
    }
}
