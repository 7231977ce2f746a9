use rand::Rng;
use rand_distr::StandardNormal;

use super::{ExperimentError, Result};
use crate::matkit::{sym_eigen, Mat};

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(ExperimentError::Image(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Non-overlapping `block×block` tiles, tiles in row-major order, each tile
/// flattened row-major and scaled to `[0, 1]`.
pub fn extract_blocks(image: &GrayImage, block: usize) -> Result<Vec<Vec<f64>>> {
    if block == 0 || !image.width.is_multiple_of(block) || !image.height.is_multiple_of(block) {
        return Err(ExperimentError::Image(format!(
            "{}x{} image cannot be tiled by {block}x{block} blocks",
            image.width, image.height
        )));
    }
    let mut out = Vec::with_capacity((image.width / block) * (image.height / block));
    for by in (0..image.height).step_by(block) {
        for bx in (0..image.width).step_by(block) {
            let mut v = Vec::with_capacity(block * block);
            for y in by..by + block {
                for x in bx..bx + block {
                    v.push(f64::from(image.get(x, y)) / 255.0);
                }
            }
            out.push(v);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BlockPcaResult {
    /// Principal directions reshaped row-major into `block×block` matrices.
    pub eigen_matrices: Vec<Mat>,
    /// Covariance eigenvalues, descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    pub block: usize,
    pub sample_count: usize,
    /// Fewer samples than dimensions, or no variance at all.
    pub rank_deficient: bool,
}

/// PCA of flattened square blocks: mean removal, `1/count` covariance,
/// symmetric eigendecomposition.
pub fn block_pca(blocks: &[Vec<f64>]) -> Result<BlockPcaResult> {
    let d = blocks.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(ExperimentError::InvalidConfig("no blocks to analyse".into()));
    }
    let block = (d as f64).sqrt().round() as usize;
    if block * block != d {
        return Err(ExperimentError::InvalidConfig(format!("block length {d} is not a perfect square")));
    }
    if blocks.iter().any(|b| b.len() != d) {
        return Err(ExperimentError::InvalidConfig("blocks differ in length".into()));
    }
    let count = blocks.len();
    let mut mean = vec![0.0; d];
    for b in blocks {
        for (m, x) in mean.iter_mut().zip(b) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);

    let mut cov = Mat::zeros(d, d);
    let mut centered = vec![0.0; d];
    for b in blocks {
        for ((c, x), m) in centered.iter_mut().zip(b).zip(&mean) {
            *c = x - m;
        }
        for i in 0..d {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            for j in i..d {
                cov[(i, j)] += ci * centered[j];
            }
        }
    }
    let inv = 1.0 / count as f64;
    for i in 0..d {
        for j in i..d {
            let x = cov[(i, j)] * inv;
            cov[(i, j)] = x;
            cov[(j, i)] = x;
        }
    }

    let eig = sym_eigen(&cov)?;
    let eigenvalues: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let eigen_matrices = (0..d)
        .map(|k| Mat::new(block, block, eig.vectors.column(k)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let top = eigenvalues[0];
    let rank_deficient = count < d || top <= 0.0;
    Ok(BlockPcaResult { eigen_matrices, eigenvalues, block, sample_count: count, rank_deficient })
}

/// Separable first-order Markov field with correlation `rho` between
/// horizontal and vertical neighbours, mapped to bytes around mid-gray.
pub fn synthetic_ar1_image<R: Rng + ?Sized>(width: usize, height: usize, rho: f64, rng: &mut R) -> Result<GrayImage> {
    if rho.is_nan() || rho.abs() >= 1.0 {
        return Err(ExperimentError::InvalidConfig(format!("rho must lie in (-1, 1), got {rho}")));
    }
    if width == 0 || height == 0 {
        return Err(ExperimentError::InvalidConfig("image must be non-empty".into()));
    }
    let innov = (1.0 - rho * rho).sqrt();
    let mut field: Vec<f64> = (0..width * height).map(|_| rng.sample(StandardNormal)).collect();
    for y in 0..height {
        let row = &mut field[y * width..(y + 1) * width];
        for x in 1..width {
            row[x] = rho * row[x - 1] + innov * row[x];
        }
    }
    for y in 1..height {
        for x in 0..width {
            field[y * width + x] = rho * field[(y - 1) * width + x] + innov * field[y * width + x];
        }
    }
    let pixels = field.iter().map(|&v| (128.0 + 40.0 * v).round().clamp(0.0, 255.0) as u8).collect();
    GrayImage::new(width, height, pixels)
}
