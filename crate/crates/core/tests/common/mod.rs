#![allow(dead_code)]

use nhca::{LabeledDataset, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<f64> {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Random unit vector, uniform on the sphere.
pub fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn quad(m: &Matrix<f64>, z: &[f64]) -> f64 {
    let mz = m.mul_vec(z).unwrap();
    z.iter().zip(&mz).map(|(a, b)| a * b).sum()
}

/// `m` points per center, uniform in a disc of `radius`.
pub fn blobs(rng: &mut ChaCha8Rng, centers: &[(f64, f64)], per: usize, radius: f64) -> LabeledDataset<f64> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (k, &(cx, cy)) in centers.iter().enumerate() {
        for _ in 0..per {
            let r = radius * rng.gen::<f64>().sqrt();
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            rows.push([cx + r * t.cos(), cy + r * t.sin()]);
            labels.push(k);
        }
    }
    LabeledDataset::new(Matrix::from_rows(&rows).unwrap(), labels, centers.len()).unwrap()
}

pub const CORNERS: [(f64, f64); 3] = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)];

/// The three-tight-clusters-at-corners instance.
pub fn corners(seed: u64) -> LabeledDataset<f64> {
    blobs(&mut rng(seed), &CORNERS, 15, 0.5)
}
