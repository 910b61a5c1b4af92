use nalgebra::DMatrix;

use crate::error::{OpeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// `k(s, s') = 1{s = s'}`.
    StateDelta,
    /// `k((s,a), (s',a')) = 1{s = s', a = a'}`.
    StateActionDelta,
    /// `exp(-||e(x) - e(y)||² / (2·bandwidth²))` on an explicit embedding.
    GaussianOnEmbedding,
}

/// Positive-definite kernel used as the adversary's function class.
///
/// For state-action quadratics the Gaussian kernel embeds `(s, a)` as the
/// state embedding followed by a one-hot action code.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub bandwidth: f64,
    pub embedding: Option<Vec<Vec<f64>>>,
}

impl KernelSpec {
    pub fn state_delta() -> Self {
        Self { kind: KernelKind::StateDelta, bandwidth: 1.0, embedding: None }
    }

    pub fn state_action_delta() -> Self {
        Self { kind: KernelKind::StateActionDelta, bandwidth: 1.0, embedding: None }
    }

    pub fn gaussian(bandwidth: f64, embedding: Vec<Vec<f64>>) -> Self {
        Self { kind: KernelKind::GaussianOnEmbedding, bandwidth, embedding: Some(embedding) }
    }

    fn gaussian_gram(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(OpeError::InvalidInput(format!("bandwidth {} must be positive", self.bandwidth)));
        }
        let denom = 2.0 * self.bandwidth * self.bandwidth;
        let n = points.len();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            let d2: f64 = points[i].iter().zip(&points[j]).map(|(x, y)| (x - y) * (x - y)).sum();
            (-d2 / denom).exp()
        }))
    }

    fn state_embedding(&self, num_states: usize) -> Result<&[Vec<f64>]> {
        match &self.embedding {
            Some(e) if e.len() == num_states => Ok(e),
            Some(e) => Err(OpeError::InvalidInput(format!("embedding covers {} states, need {num_states}", e.len()))),
            None => Err(OpeError::InvalidInput("Gaussian kernel needs a state embedding".into())),
        }
    }

    /// Gram matrix over states, or `None` for the identity.
    pub(crate) fn state_gram(&self, num_states: usize) -> Result<Option<DMatrix<f64>>> {
        match self.kind {
            KernelKind::StateDelta => Ok(None),
            KernelKind::StateActionDelta => {
                Err(OpeError::InvalidInput("state-action kernel used for a state correction".into()))
            }
            KernelKind::GaussianOnEmbedding => self.gaussian_gram(self.state_embedding(num_states)?).map(Some),
        }
    }

    /// Gram matrix over `(s, a)` pairs indexed `s * A + a`, or `None` for the identity.
    pub(crate) fn state_action_gram(&self, num_states: usize, num_actions: usize) -> Result<Option<DMatrix<f64>>> {
        match self.kind {
            KernelKind::StateActionDelta => Ok(None),
            KernelKind::StateDelta => {
                Err(OpeError::InvalidInput("state kernel used for a state-action correction".into()))
            }
            KernelKind::GaussianOnEmbedding => {
                let states = self.state_embedding(num_states)?;
                let points: Vec<Vec<f64>> = (0..num_states * num_actions)
                    .map(|k| {
                        let mut p = states[k / num_actions].clone();
                        p.extend((0..num_actions).map(|a| f64::from(u8::from(a == k % num_actions))));
                        p
                    })
                    .collect();
                self.gaussian_gram(&points).map(Some)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_gram_is_symmetric_with_unit_diagonal() {
        let k = KernelSpec::gaussian(0.7, vec![vec![0.0], vec![1.0], vec![3.0]]);
        let g = k.state_gram(3).unwrap().unwrap();
        for i in 0..3 {
            assert_eq!(g[(i, i)], 1.0);
            for j in 0..3 {
                assert_eq!(g[(i, j)], g[(j, i)]);
            }
        }
        assert!((g[(0, 1)] - (-1.0 / (2.0 * 0.49f64)).exp()).abs() < 1e-15);
        let eig = g.symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn kind_mismatch_is_an_error() {
        assert!(KernelSpec::state_action_delta().state_gram(3).is_err());
        assert!(KernelSpec::state_delta().state_action_gram(3, 2).is_err());
        assert!(KernelSpec { embedding: None, ..KernelSpec::gaussian(1.0, vec![]) }.state_gram(2).is_err());
    }
}
