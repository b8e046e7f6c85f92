use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TextFeaturizer;
use crate::error::{Error, Result};
use crate::linalg::{dot, normalized, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub joint_dim: usize,
    pub margin: f64,
    pub featurizer: TextFeaturizer,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            joint_dim: 64,
            margin: 0.2,
            featurizer: TextFeaturizer::default(),
        }
    }
}

/// Text and video projection matrices into a shared `joint_dim` space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoTowerModel {
    pub joint_dim: usize,
    pub text_dim: usize,
    pub video_dim: usize,
    pub margin: f64,
    pub featurizer: TextFeaturizer,
    /// `joint_dim × text_dim`, row-major.
    pub w_text: Matrix,
    /// `joint_dim × video_dim`, row-major.
    pub w_video: Matrix,
}

impl TwoTowerModel {
    /// Seeded initialization, uniform in `[-1/√D, 1/√D]` per matrix.
    pub fn init(config: &ModelConfig, video_dim: usize, seed: u64) -> Result<Self> {
        if config.joint_dim == 0 || video_dim == 0 || config.featurizer.hash_dim == 0 {
            return Err(Error::validation("model dimensions must be positive"));
        }
        if !(config.margin > 0.0 && config.margin.is_finite()) {
            return Err(Error::validation("margin must be a positive real"));
        }
        let text_dim = config.featurizer.hash_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w_text = Matrix::uniform(config.joint_dim, text_dim, 1.0 / (text_dim as f64).sqrt(), &mut rng);
        let w_video = Matrix::uniform(config.joint_dim, video_dim, 1.0 / (video_dim as f64).sqrt(), &mut rng);
        Ok(Self {
            joint_dim: config.joint_dim,
            text_dim,
            video_dim,
            margin: config.margin,
            featurizer: config.featurizer.clone(),
            w_text,
            w_video,
        })
    }

    pub fn from_matrices(w_text: Matrix, w_video: Matrix, margin: f64, featurizer: TextFeaturizer) -> Result<Self> {
        let model = Self {
            joint_dim: w_text.rows,
            text_dim: w_text.cols,
            video_dim: w_video.cols,
            margin,
            featurizer,
            w_text,
            w_video,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let shape_ok = self.w_text.rows == self.joint_dim
            && self.w_video.rows == self.joint_dim
            && self.w_text.cols == self.text_dim
            && self.w_video.cols == self.video_dim
            && self.w_text.data.len() == self.joint_dim * self.text_dim
            && self.w_video.data.len() == self.joint_dim * self.video_dim
            && self.featurizer.hash_dim == self.text_dim;
        if !shape_ok {
            return Err(Error::validation("model matrices disagree with declared dimensions"));
        }
        if !(self.w_text.all_finite() && self.w_video.all_finite()) {
            return Err(Error::validation("model has non-finite weights"));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::validation("margin must be a positive real"));
        }
        Ok(())
    }

    pub fn featurize(&self, text: &str) -> Vec<f64> {
        self.featurizer.featurize(text)
    }

    /// Projects a text feature and scales it to unit length; the zero vector
    /// comes back unchanged.
    pub fn encode_text(&self, feature: &[f64]) -> Result<Vec<f64>> {
        if feature.len() != self.text_dim {
            return Err(Error::DimensionMismatch {
                expected: self.text_dim,
                actual: feature.len(),
            });
        }
        Ok(normalized(&self.w_text.matvec(feature)))
    }

    pub fn encode_video(&self, feature: &[f64]) -> Result<Vec<f64>> {
        if feature.len() != self.video_dim {
            return Err(Error::DimensionMismatch {
                expected: self.video_dim,
                actual: feature.len(),
            });
        }
        Ok(normalized(&self.w_video.matvec(feature)))
    }

    pub fn encode_query(&self, text: &str) -> Vec<f64> {
        normalized(&self.w_text.matvec(&self.featurize(text)))
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        crate::corpus::io::write_json(path, self)
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let model: Self = crate::corpus::io::read_json(path)?;
        model.validate()?;
        Ok(model)
    }
}

/// Cosine of two unit vectors.
pub fn similarity(u: &[f64], v: &[f64]) -> f64 {
    dot(u, v)
}
