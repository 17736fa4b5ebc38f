use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        RmsPropConfig {
            learning_rate: 7e-4,
            decay: 0.99,
            epsilon: 1e-5,
        }
    }
}

impl RmsPropConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("RMSProp learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err(Error::param("RMSProp decay must lie in [0, 1)"));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::param("RMSProp epsilon must be positive"));
        }
        Ok(())
    }
}

/// Running mean of squared gradients per parameter.
///
/// `s <- decay * s + (1 - decay) * g^2`, `p <- p - lr * g / (sqrt(s) + eps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    pub config: RmsPropConfig,
    square_avg: Vec<f64>,
}

impl RmsProp {
    pub fn new(config: RmsPropConfig, len: usize) -> Self {
        RmsProp {
            config,
            square_avg: vec![0.0; len],
        }
    }

    pub fn from_state(config: RmsPropConfig, square_avg: Vec<f64>) -> Result<Self> {
        if square_avg.iter().any(|s| s.is_nan() || *s < 0.0) {
            return Err(Error::Numeric("RMSProp accumulators must be non-negative".into()));
        }
        Ok(RmsProp { config, square_avg })
    }

    pub fn square_avg(&self) -> &[f64] {
        &self.square_avg
    }

    /// Descends along `grads`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.square_avg.len());
        assert_eq!(grads.len(), self.square_avg.len());
        let RmsPropConfig {
            learning_rate,
            decay,
            epsilon,
        } = self.config;
        for ((p, s), &g) in params.iter_mut().zip(&mut self.square_avg).zip(grads) {
            *s = decay * *s + (1.0 - decay) * g * g;
            // subnormal accumulators make every later step far slower
            if *s < f64::MIN_POSITIVE {
                *s = 0.0;
            }
            *p -= learning_rate * g / (s.sqrt() + epsilon);
        }
    }
}
