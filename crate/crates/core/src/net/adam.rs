use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            lr: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamParams {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// Adam moments for one optimized vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    params: AdamParams,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize, params: AdamParams) -> Self {
        Self {
            params,
            t: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn params(&self) -> AdamParams {
        self.params
    }

    /// Bias-corrected update of every coordinate.
    pub fn step(&mut self, variable: &mut [f64], gradient: &[f64]) -> Result<()> {
        self.check(variable, gradient)?;
        let (c1, c2) = self.advance();
        for (i, &g) in gradient.iter().enumerate() {
            self.update(i, variable, g, c1, c2);
        }
        Ok(())
    }

    /// Like [`step`](Self::step) but only `indices` are read and written;
    /// every other coordinate of `variable` and of the moments is untouched.
    pub fn step_indices(&mut self, variable: &mut [f64], gradient: &[f64], indices: &[usize]) -> Result<()> {
        self.check(variable, gradient)?;
        if let Some(&bad) = indices.iter().find(|&&i| i >= variable.len()) {
            return Err(Error::DimensionMismatch {
                expected: variable.len(),
                got: bad + 1,
            });
        }
        let (c1, c2) = self.advance();
        for &i in indices {
            self.update(i, variable, gradient[i], c1, c2);
        }
        Ok(())
    }

    fn check(&self, variable: &[f64], gradient: &[f64]) -> Result<()> {
        for len in [variable.len(), gradient.len()] {
            if len != self.m.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.m.len(),
                    got: len,
                });
            }
        }
        Ok(())
    }

    fn advance(&mut self) -> (f64, f64) {
        self.t += 1;
        let t = self.t as i32;
        (
            1.0 - self.params.beta1.powi(t),
            1.0 - self.params.beta2.powi(t),
        )
    }

    #[inline]
    fn update(&mut self, i: usize, variable: &mut [f64], g: f64, c1: f64, c2: f64) {
        let p = &self.params;
        self.m[i] = p.beta1 * self.m[i] + (1.0 - p.beta1) * g;
        self.v[i] = p.beta2 * self.v[i] + (1.0 - p.beta2) * g * g;
        let m_hat = self.m[i] / c1;
        let v_hat = self.v[i] / c2;
        variable[i] -= p.lr * m_hat / (v_hat.sqrt() + p.epsilon);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_variable_unchanged() {
        let mut s = AdamState::new(3, AdamParams::default());
        let mut v = vec![1.0, -2.0, 0.5];
        s.step(&mut v, &[0.0; 3]).unwrap();
        assert_eq!(v, vec![1.0, -2.0, 0.5]);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_lr_against_sign() {
        let mut s = AdamState::new(4, AdamParams::default());
        let g = [1e-3, -5.0, 250.0, -0.02];
        let mut v = vec![0.0; 4];
        s.step(&mut v, &g).unwrap();
        for (d, g) in v.iter().zip(g) {
            assert!((d + 0.1 * g.signum()).abs() <= 1e-6, "{d} for g={g}");
        }
    }

    #[test]
    fn quadratic_descends() {
        // f(v) = v², ∇f = 2v
        let mut s = AdamState::new(1, AdamParams::with_lr(0.1));
        let mut v = vec![1.0];
        for _ in 0..100 {
            let g = [2.0 * v[0]];
            s.step(&mut v, &g).unwrap();
        }
        assert!(v[0].abs() < 0.5, "{}", v[0]);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut s = AdamState::new(2, AdamParams::default());
        let mut v = vec![0.0; 3];
        assert!(s.step(&mut v, &[0.0; 3]).is_err());
        assert_eq!(s.step_count(), 0);
    }

    #[test]
    fn indexed_step_touches_only_listed_coordinates() {
        let mut s = AdamState::new(3, AdamParams::default());
        let mut v = vec![1.0, 1.0, 1.0];
        s.step_indices(&mut v, &[5.0, 5.0, 5.0], &[1]).unwrap();
        assert_eq!(v[0], 1.0);
        assert_eq!(v[2], 1.0);
        assert!(v[1] < 1.0);
    }
}
