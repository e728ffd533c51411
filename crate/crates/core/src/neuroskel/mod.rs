//! SkelUnet inference: a small U-Net that maps a 64×64 occupancy grid to a
//! per-cell skeleton probability, plus thresholding and quality scoring.
//!
//! Weights travel in the SKLW container ([`weights`]); the tensor layout and
//! naming follow PyTorch (`[out, in, kh, kw]` for convolutions,
//! `[in, out, kh, kw]` for transpose convolutions) so a trainer can dump its
//! `state_dict` directly.

pub mod layers;
pub mod weights;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gridmap::OccupancyGrid;
use crate::skeleton::SkeletonMask;
pub use layers::{concat, conv2d, conv_transpose2x2, maxpool2x2, relu, sigmoid, FeatureMap};
pub use weights::{load_weights, parse_container, save_weights};

/// Side length of the only input size the network accepts.
pub const INPUT_SIZE: usize = 64;
pub const DEFAULT_TAU: f64 = 0.5;

const ENCODER: [(&str, usize); 3] = [("enc1", 16), ("enc2", 32), ("enc3", 64)];
const BOTTLENECK: usize = 128;

#[derive(Debug, Error, PartialEq)]
pub enum NeuroError {
    #[error("malformed weight container: {0}")]
    Format(String),
    #[error("tensor {name}: expected shape {expected:?}, got {got:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("tensor {0} contains a non-finite value")]
    NonFiniteValue(String),
    #[error("network input must be {INPUT_SIZE}x{INPUT_SIZE}, got {width}x{height}")]
    SizeMismatch { width: usize, height: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }
}

/// The canonical architecture as an ordered list of `(name, shape)`.
///
/// Encoder levels of 16/32/64 channels with two 3×3 convolutions each, a
/// 128-channel bottleneck, a mirrored decoder whose `up` layers are 2×2
/// stride-2 transpose convolutions followed by two 3×3 convolutions over
/// `concat([up, skip])`, and a 1×1 head.
pub fn manifest() -> Vec<(String, Vec<usize>)> {
    fn conv(out: &mut Vec<(String, Vec<usize>)>, name: &str, cout: usize, cin: usize, k: usize) {
        out.push((format!("{name}.weight"), vec![cout, cin, k, k]));
        out.push((format!("{name}.bias"), vec![cout]));
    }
    let mut out = Vec::new();
    let mut cin = 1;
    for (level, c) in ENCODER {
        conv(&mut out, &format!("{level}.conv1"), c, cin, 3);
        conv(&mut out, &format!("{level}.conv2"), c, c, 3);
        cin = c;
    }
    conv(&mut out, "bottleneck.conv1", BOTTLENECK, cin, 3);
    conv(&mut out, "bottleneck.conv2", BOTTLENECK, BOTTLENECK, 3);

    let mut cin = BOTTLENECK;
    for (level, c) in ENCODER.iter().rev() {
        let dec = level.replace("enc", "dec");
        out.push((format!("{dec}.up.weight"), vec![cin, *c, 2, 2]));
        out.push((format!("{dec}.up.bias"), vec![*c]));
        out.push((format!("{dec}.conv1.weight"), vec![*c, 2 * c, 3, 3]));
        out.push((format!("{dec}.conv1.bias"), vec![*c]));
        out.push((format!("{dec}.conv2.weight"), vec![*c, *c, 3, 3]));
        out.push((format!("{dec}.conv2.bias"), vec![*c]));
        cin = *c;
    }
    out.push(("head.weight".into(), vec![1, cin, 1, 1]));
    out.push(("head.bias".into(), vec![1]));
    out
}

/// Validated SkelUnet weights, in manifest order.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParameters {
    tensors: IndexMap<String, Tensor>,
}

impl NetworkParameters {
    /// Checks names, shapes and finiteness against [`manifest`] and reorders
    /// the tensors into manifest order.
    pub fn new(mut tensors: IndexMap<String, Tensor>) -> Result<Self, NeuroError> {
        let mut ordered = IndexMap::with_capacity(tensors.len());
        for (name, shape) in manifest() {
            let t = tensors
                .shift_remove(&name)
                .ok_or_else(|| NeuroError::Format(format!("missing tensor {name}")))?;
            if t.shape != shape {
                return Err(NeuroError::ShapeMismatch {
                    name,
                    expected: shape,
                    got: t.shape,
                });
            }
            if t.data.len() != shape.iter().product::<usize>() {
                return Err(NeuroError::Format(format!("tensor {name} has wrong element count")));
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(NeuroError::NonFiniteValue(name));
            }
            ordered.insert(name, t);
        }
        if let Some(extra) = tensors.keys().next() {
            return Err(NeuroError::Format(format!("unexpected tensor {extra}")));
        }
        Ok(Self { tensors: ordered })
    }

    /// All weights and biases zero; the network then outputs 0.5 everywhere.
    pub fn zeros() -> Self {
        let tensors = manifest()
            .into_iter()
            .map(|(name, shape)| {
                let t = Tensor::zeros(&shape);
                (name, t)
            })
            .collect();
        Self { tensors }
    }

    /// He-uniform random weights with zero biases. Only useful as a synthetic
    /// fixture: the result is a valid network, not a trained one.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = manifest()
            .into_iter()
            .map(|(name, shape)| {
                let mut t = Tensor::zeros(&shape);
                if shape.len() == 4 {
                    let fan_in = if name.contains(".up.") {
                        shape[0] * shape[2] * shape[3]
                    } else {
                        shape[1] * shape[2] * shape[3]
                    };
                    let bound = (6.0 / fan_in as f32).sqrt();
                    for v in &mut t.data {
                        *v = rng.random_range(-bound..bound);
                    }
                }
                (name, t)
            })
            .collect();
        Self { tensors }
    }

    pub fn tensors(&self) -> &IndexMap<String, Tensor> {
        &self.tensors
    }

    pub fn get(&self, name: &str) -> &Tensor {
        &self.tensors[name]
    }

    fn conv(&self, x: &FeatureMap, name: &str) -> FeatureMap {
        conv2d(
            x,
            self.get(&format!("{name}.weight")),
            self.get(&format!("{name}.bias")),
        )
    }

    fn double_conv(&self, x: &FeatureMap, level: &str) -> FeatureMap {
        let h = relu(self.conv(x, &format!("{level}.conv1")));
        relu(self.conv(&h, &format!("{level}.conv2")))
    }
}

/// Network output before thresholding; values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

impl ProbabilityMap {
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }
}

/// Runs SkelUnet on a 64×64 grid. Free cells are fed as 1.0, occupied as 0.0.
pub fn forward(params: &NetworkParameters, grid: &OccupancyGrid) -> Result<ProbabilityMap, NeuroError> {
    if grid.width() != INPUT_SIZE || grid.height() != INPUT_SIZE {
        return Err(NeuroError::SizeMismatch {
            width: grid.width(),
            height: grid.height(),
        });
    }
    let input = FeatureMap {
        channels: 1,
        height: INPUT_SIZE,
        width: INPUT_SIZE,
        data: grid
            .cells()
            .iter()
            .map(|c| if c.is_free() { 1.0 } else { 0.0 })
            .collect(),
    };

    let mut skips = Vec::with_capacity(ENCODER.len());
    let mut x = input;
    for (level, _) in ENCODER {
        let h = params.double_conv(&x, level);
        x = maxpool2x2(&h);
        skips.push(h);
    }
    x = params.double_conv(&x, "bottleneck");
    for (level, _) in ENCODER.iter().rev() {
        let dec = level.replace("enc", "dec");
        let up = conv_transpose2x2(
            &x,
            params.get(&format!("{dec}.up.weight")),
            params.get(&format!("{dec}.up.bias")),
        );
        let skip = skips.pop().expect("one skip per encoder level");
        x = params.double_conv(&concat(&up, &skip), &dec);
    }
    let logits = params.conv(&x, "head");
    Ok(ProbabilityMap {
        width: INPUT_SIZE,
        height: INPUT_SIZE,
        values: logits.data.into_iter().map(sigmoid).collect(),
    })
}

/// Skeleton pixel iff `pmap >= tau` and the cell is free.
pub fn apply_threshold(pmap: &ProbabilityMap, tau: f64, grid: &OccupancyGrid) -> Result<SkeletonMask, NeuroError> {
    if pmap.width != grid.width() || pmap.height != grid.height() {
        return Err(NeuroError::DimensionMismatch(format!(
            "probability map {}x{} vs grid {}x{}",
            pmap.width,
            pmap.height,
            grid.width(),
            grid.height()
        )));
    }
    let mut mask = SkeletonMask::empty(grid.width(), grid.height());
    for (x, y) in grid.free_cells() {
        if f64::from(pmap.at(x, y)) >= tau {
            mask.set(x, y, true);
        }
    }
    Ok(mask)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityReport {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 from (possibly averaged) confusion counts. Each
/// ratio is 0 when its denominator is 0.
pub fn precision_recall_f1(tp: f64, fp: f64, fn_: f64) -> (f64, f64, f64) {
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = ratio(2.0 * precision * recall, precision + recall);
    (precision, recall, f1)
}

pub fn score_skeleton(pred: &SkeletonMask, target: &SkeletonMask) -> Result<QualityReport, NeuroError> {
    if pred.width() != target.width() || pred.height() != target.height() {
        return Err(NeuroError::DimensionMismatch(format!(
            "prediction {}x{} vs target {}x{}",
            pred.width(),
            pred.height(),
            target.width(),
            target.height()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in pred.bits().iter().zip(target.bits()) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let (precision, recall, f1) = precision_recall_f1(tp as f64, fp as f64, fn_ as f64);
    Ok(QualityReport {
        tp,
        fp,
        tn,
        fn_,
        precision,
        recall,
        f1,
    })
}

/// Per-image averages of precision, recall and F1.
pub fn mean_scores(reports: &[QualityReport]) -> (f64, f64, f64) {
    if reports.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = reports.len() as f64;
    let sum = reports.iter().fold((0.0, 0.0, 0.0), |acc, r| {
        (acc.0 + r.precision, acc.1 + r.recall, acc.2 + r.f1)
    });
    (sum.0 / n, sum.1 / n, sum.2 / n)
}

/// Skeleton pixels sitting on a diagonal pinch: some 2×2 window around the
/// pixel has its two occupied cells on one diagonal and both free cells on
/// the other, so the skeleton squeezes through a corner-to-corner gap.
pub fn diagonal_junction_count(mask: &SkeletonMask, grid: &OccupancyGrid) -> usize {
    let occ = |x: i64, y: i64| !grid.is_free_signed(x, y);
    mask.pixels()
        .filter(|&(x, y)| {
            let (x, y) = (x as i64, y as i64);
            [(-1, -1), (0, -1), (-1, 0), (0, 0)].iter().any(|&(dx, dy)| {
                let (x0, y0) = (x + dx, y + dy);
                let a = occ(x0, y0);
                let b = occ(x0 + 1, y0);
                let c = occ(x0, y0 + 1);
                let d = occ(x0 + 1, y0 + 1);
                (a && d && !b && !c) || (b && c && !a && !d)
            })
        })
        .count()
}
