use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Zero-mean Gaussian exploration noise whose variance shrinks
/// multiplicatively every time it is sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseProcess {
    pub variance: f64,
    /// Fractional variance decay per sample.
    pub decay: f64,
    /// Variance never decays below this.
    pub min_variance: f64,
}

impl NoiseProcess {
    pub fn new(variance: f64, decay: f64) -> Self {
        Self { variance: variance.max(0.0), decay: decay.clamp(0.0, 1.0), min_variance: 0.0 }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        let n = self.variance.sqrt() * z;
        self.variance = (self.variance * (1.0 - self.decay)).max(self.min_variance);
        n
    }
}
