use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::hessian::{assemble_hessian, ParamLayout};
use crate::error::{invalid, Error, Result};
use crate::io::{load_embedding, save_embedding};
use crate::model::{EmbeddingState, IdentificationConstraint, PairStats, PosteriorDraws, PriorSpec};
use crate::rng::{stream, TAG_LAPLACE};

/// Largest number of free coordinates handled by the eigendecomposition path.
pub const DENSE_LIMIT: usize = 6000;

pub const LAPLACE_FILE: &str = "laplace.bin";
pub const MODE_FILE: &str = "mode.bin";
pub const LAPLACE_META_FILE: &str = "meta.json";

/// Gaussian approximation around the MAP, conditional on `alpha_I = M`.
///
/// The covariance of the free coordinates is `U diag(eigenvalues) U^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplaceModel {
    mode: EmbeddingState,
    constraint: IdentificationConstraint,
    layout: ParamLayout,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    clipped: usize,
}

#[derive(Serialize, Deserialize)]
struct LaplaceMeta {
    #[serde(rename = "V")]
    vocab_size: usize,
    #[serde(rename = "K")]
    dim: usize,
    free_dim: usize,
    constraint_ids: Vec<usize>,
    #[serde(rename = "M")]
    constraint_matrix: Vec<Vec<f64>>,
    clipped_eigenvalues: usize,
}

pub fn build_laplace(
    stats: &PairStats,
    prior: &PriorSpec,
    theta_map: &EmbeddingState,
    constraint: &IdentificationConstraint,
) -> Result<LaplaceModel> {
    build_laplace_with_limit(stats, prior, theta_map, constraint, DENSE_LIMIT)
}

pub fn build_laplace_with_limit(
    stats: &PairStats,
    prior: &PriorSpec,
    theta_map: &EmbeddingState,
    constraint: &IdentificationConstraint,
    dense_limit: usize,
) -> Result<LaplaceModel> {
    constraint.check_compatible(theta_map)?;
    if !constraint.is_satisfied_by(theta_map) {
        return invalid("MAP estimate does not satisfy the identification constraint");
    }
    let layout = ParamLayout::new(theta_map.vocab_size(), theta_map.dim(), Some(constraint));
    if layout.len() > dense_limit {
        return Err(Error::TooLarge { dim: layout.len(), limit: dense_limit });
    }
    let hessian = assemble_hessian(stats, theta_map, prior)?;
    let precision = -hessian.to_dense_free(&layout);
    let eig = SymmetricEigen::new(precision);
    let mut clipped = 0;
    let mut clipped_mass = 0.0;
    let eigenvalues = eig
        .eigenvalues
        .iter()
        .map(|&mu| {
            if mu > 0.0 {
                1.0 / mu
            } else {
                clipped += 1;
                clipped_mass += mu.abs();
                0.0
            }
        })
        .collect();
    if clipped > 0 {
        log::warn!("clipped {clipped} non-positive precision eigenvalues (total magnitude {clipped_mass:.3e})");
    }
    Ok(LaplaceModel {
        mode: theta_map.clone(),
        constraint: constraint.clone(),
        layout,
        eigenvalues,
        eigenvectors: eig.eigenvectors,
        clipped,
    })
}

impl LaplaceModel {
    fn from_parts(
        mode: EmbeddingState,
        constraint: IdentificationConstraint,
        eigenvalues: Vec<f64>,
        eigenvectors: DMatrix<f64>,
        clipped: usize,
    ) -> Result<Self> {
        constraint.check_compatible(&mode)?;
        if !constraint.is_satisfied_by(&mode) {
            return invalid("mode does not satisfy the identification constraint");
        }
        let layout = ParamLayout::new(mode.vocab_size(), mode.dim(), Some(&constraint));
        let d = layout.len();
        if eigenvalues.len() != d || eigenvectors.shape() != (d, d) {
            return invalid(format!("factor dimension must be {d}"));
        }
        if eigenvalues.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return invalid("eigenvalues must be finite and non-negative");
        }
        Ok(Self { mode, constraint, layout, eigenvalues, eigenvectors, clipped })
    }

    pub fn mode(&self) -> &EmbeddingState {
        &self.mode
    }

    pub fn constraint(&self) -> &IdentificationConstraint {
        &self.constraint
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    /// Number of free coordinates, `(2V - K) K`.
    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    /// Clipped covariance eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn clipped_count(&self) -> usize {
        self.clipped
    }

    /// Dense covariance `U D U^T` of the free coordinates.
    pub fn covariance(&self) -> DMatrix<f64> {
        let u = &self.eigenvectors;
        let scaled = u * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eigenvalues));
        scaled * u.transpose()
    }

    /// `mode + U sqrt(D) eps` for a given standard-normal vector.
    pub fn draw_from_normals(&self, eps: &[f64]) -> Result<EmbeddingState> {
        if eps.len() != self.dim() {
            return invalid(format!("expected {} normals, got {}", self.dim(), eps.len()));
        }
        let scaled: Vec<f64> = eps.iter().zip(&self.eigenvalues).map(|(e, l)| e * l.sqrt()).collect();
        let offset = &self.eigenvectors * nalgebra::DVector::from_vec(scaled);
        let mut x = self.layout.gather(&self.mode);
        for (xi, oi) in x.iter_mut().zip(offset.iter()) {
            *xi += oi;
        }
        let mut theta = self.mode.clone();
        self.layout.scatter(&x, &mut theta);
        Ok(theta)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        save_embedding(&self.mode, &dir.join(MODE_FILE))?;
        let d = self.dim();
        let mut out = BufWriter::new(File::create(dir.join(LAPLACE_FILE))?);
        let d32 = u32::try_from(d).map_err(|_| Error::Format("dimension exceeds u32".into()))?;
        out.write_all(&d32.to_le_bytes())?;
        for x in &self.eigenvalues {
            out.write_all(&x.to_le_bytes())?;
        }
        // nalgebra storage is column-major already
        for x in self.eigenvectors.as_slice() {
            out.write_all(&x.to_le_bytes())?;
        }
        out.flush()?;
        let meta = LaplaceMeta {
            vocab_size: self.mode.vocab_size(),
            dim: self.mode.dim(),
            free_dim: d,
            constraint_ids: self.constraint.indices().to_vec(),
            constraint_matrix: self.constraint.matrix_rows(),
            clipped_eigenvalues: self.clipped,
        };
        fs::write(dir.join(LAPLACE_META_FILE), serde_json::to_string_pretty(&meta)? + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta: LaplaceMeta = serde_json::from_str(&fs::read_to_string(dir.join(LAPLACE_META_FILE))?)?;
        let mode = load_embedding(&dir.join(MODE_FILE))?;
        let constraint = IdentificationConstraint::new(meta.constraint_ids, meta.constraint_matrix.concat())?;
        let mut input = BufReader::new(File::open(dir.join(LAPLACE_FILE))?);
        let mut word = [0u8; 4];
        input.read_exact(&mut word)?;
        let d = u32::from_le_bytes(word) as usize;
        if d != meta.free_dim {
            return Err(Error::Format(format!("laplace.bin has d={d}, meta.json says {}", meta.free_dim)));
        }
        let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; n * 8];
            input.read_exact(&mut buf)?;
            Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
        };
        let eigenvalues = read_f64s(d)?;
        let eigenvectors = DMatrix::from_vec(d, d, read_f64s(d * d)?);
        Self::from_parts(mode, constraint, eigenvalues, eigenvectors, meta.clipped_eigenvalues)
    }
}

/// `n` independent draws from the approximation, deterministic in `seed`.
pub fn laplace_draws(model: &LaplaceModel, n: usize, seed: u64) -> Result<PosteriorDraws> {
    if n == 0 {
        return invalid("number of draws must be positive");
    }
    let mut rng = stream(seed, &[TAG_LAPLACE]);
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        let eps: Vec<f64> = (0..model.dim()).map(|_| rng.sample(StandardNormal)).collect();
        draws.push(model.draw_from_normals(&eps)?);
    }
    PosteriorDraws::new(draws, 0, seed, Some(model.constraint.clone()))
}
