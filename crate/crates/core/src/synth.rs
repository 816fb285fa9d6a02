//! Seeded synthetic datasets used by tests, benchmarks and examples.
//!
//! Features are generated directly in `[0, 1]ⁿ` unless noted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::qp::Task;

/// Raw samples with targets.
#[derive(Clone, Debug)]
pub struct Samples {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub task: Task,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Splits off the first `n_train` samples.
    pub fn split_at(&self, n_train: usize) -> (Samples, Samples) {
        let head = Samples {
            features: self.features[..n_train].to_vec(),
            targets: self.targets[..n_train].to_vec(),
            task: self.task,
        };
        let tail = Samples {
            features: self.features[n_train..].to_vec(),
            targets: self.targets[n_train..].to_vec(),
            task: self.task,
        };
        (head, tail)
    }

    pub fn subset(&self, idx: &[usize]) -> Samples {
        Samples {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            task: self.task,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform points on the unit square labelled by the colour of a
/// `cells × cells` checkerboard.
pub fn checkerboard(m: usize, cells: usize, seed: u64) -> Samples {
    let mut r = rng(seed);
    let mut features = Vec::with_capacity(m);
    let mut targets = Vec::with_capacity(m);
    for _ in 0..m {
        let x: f64 = r.gen();
        let y: f64 = r.gen();
        let cx = ((x * cells as f64) as usize).min(cells - 1);
        let cy = ((y * cells as f64) as usize).min(cells - 1);
        targets.push(if (cx + cy).is_multiple_of(2) { 1.0 } else { -1.0 });
        features.push(vec![x, y]);
    }
    Samples {
        features,
        targets,
        task: Task::Classification,
    }
}

/// `y = sin(2πx)` on uniform `x ∈ [0, 1]`, without noise.
pub fn sine_1d(m: usize, seed: u64) -> Samples {
    let mut r = rng(seed);
    let mut features = Vec::with_capacity(m);
    let mut targets = Vec::with_capacity(m);
    for _ in 0..m {
        let x: f64 = r.gen();
        features.push(vec![x]);
        targets.push((2.0 * std::f64::consts::PI * x).sin());
    }
    Samples {
        features,
        targets,
        task: Task::Regression,
    }
}

/// Two-feature data shaped like the fourclass benchmark: the positive class
/// is a union of irregular blobs and bands in `[−1.5, 1.5]²`, producing four
/// separate regions. Labels are `±1`; features are left unscaled.
pub fn fourclass_like(m: usize, seed: u64) -> Samples {
    let mut r = rng(seed);
    let mut features = Vec::with_capacity(m);
    let mut targets = Vec::with_capacity(m);
    for _ in 0..m {
        let x: f64 = r.gen_range(-1.5..1.5);
        let y: f64 = r.gen_range(-1.5..1.5);
        features.push(vec![x, y]);
        targets.push(if fourclass_rule(x, y) { 1.0 } else { -1.0 });
    }
    Samples {
        features,
        targets,
        task: Task::Classification,
    }
}

fn fourclass_rule(x: f64, y: f64) -> bool {
    let blob = |cx: f64, cy: f64, rx: f64, ry: f64| ((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2) < 1.0;
    blob(-0.8, 0.7, 0.55, 0.45)
        || blob(0.75, 0.8, 0.45, 0.6)
        || (y < -0.6 && x > -0.2 && x < 1.1 + 0.3 * y)
        || blob(-0.9, -0.9, 0.4, 0.35)
}

/// Nine-feature classification data at the size of a small clinical
/// benchmark: two overlapping Gaussian clusters clipped to the unit cube,
/// with labels from a noisy linear rule.
pub fn cancer_like(m: usize, seed: u64) -> Samples {
    let mut r = rng(seed);
    let n = 9;
    let mut features = Vec::with_capacity(m);
    let mut targets = Vec::with_capacity(m);
    for i in 0..m {
        let positive = i % 3 == 0;
        let centre = if positive { 0.65 } else { 0.3 };
        let row: Vec<f64> = (0..n)
            .map(|_| {
                let g: f64 = (0..4).map(|_| r.gen::<f64>()).sum::<f64>() / 4.0 - 0.5;
                (centre + 0.5 * g).clamp(0.0, 1.0)
            })
            .collect();
        let score: f64 = row.iter().sum::<f64>() / n as f64 + 0.05 * (r.gen::<f64>() - 0.5);
        targets.push(if score > 0.47 { 1.0 } else { -1.0 });
        features.push(row);
    }
    Samples {
        features,
        targets,
        task: Task::Classification,
    }
}

/// Uniform features in `[0, 1]ⁿ` with a smooth nonlinear target; used for timing.
pub fn smooth_regression(m: usize, n: usize, seed: u64) -> Samples {
    let mut r = rng(seed);
    let mut features = Vec::with_capacity(m);
    let mut targets = Vec::with_capacity(m);
    for _ in 0..m {
        let row: Vec<f64> = (0..n).map(|_| r.gen()).collect();
        let t = row
            .iter()
            .enumerate()
            .map(|(k, v)| ((k + 1) as f64 * v).sin())
            .sum::<f64>();
        targets.push(t);
        features.push(row);
    }
    Samples {
        features,
        targets,
        task: Task::Regression,
    }
}
