use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GraphInput;
use crate::rng::seeded;
use crate::{Error, Result};

pub const INPUT_DIM: usize = 40;
pub const HIDDEN_DIM: usize = 20;
pub const OUTPUT_DIM: usize = 3;

/// Mean-aggregator convolution: `W_self h_v + W_neigh mean(h_u) + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SageLayer {
    pub w_self: Array2<f64>,
    pub w_neigh: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    pub conv1: SageLayer,
    pub conv2: SageLayer,
    pub head: Linear,
    pub residual: Linear,
    pub init_seed: u64,
}

fn glorot<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..=limit))
}

impl SageLayer {
    fn init<R: Rng>(out: usize, inp: usize, rng: &mut R) -> Self {
        SageLayer {
            w_self: glorot(out, inp, rng),
            w_neigh: glorot(out, inp, rng),
            bias: Array1::zeros(out),
        }
    }

    fn zeros(out: usize, inp: usize) -> Self {
        SageLayer { w_self: Array2::zeros((out, inp)), w_neigh: Array2::zeros((out, inp)), bias: Array1::zeros(out) }
    }

    fn apply(&self, h: &Array2<f64>, agg: &Array2<f64>) -> Array2<f64> {
        h.dot(&self.w_self.t()) + agg.dot(&self.w_neigh.t()) + &self.bias
    }
}

impl Linear {
    fn init<R: Rng>(out: usize, inp: usize, rng: &mut R) -> Self {
        Linear { weight: glorot(out, inp, rng), bias: Array1::zeros(out) }
    }

    fn zeros(out: usize, inp: usize) -> Self {
        Linear { weight: Array2::zeros((out, inp)), bias: Array1::zeros(out) }
    }

    fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weight.t()) + &self.bias
    }
}

fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|v| v.max(0.0))
}

/// Activations kept for the backward pass.
pub(crate) struct Cache {
    agg1: Array2<f64>,
    z1: Array2<f64>,
    h1: Array2<f64>,
    agg2: Array2<f64>,
    z2: Array2<f64>,
    h2: Array2<f64>,
}

impl EncoderModel {
    /// Glorot-uniform weights, zero biases.
    pub fn new(seed: u64) -> Self {
        let mut rng = seeded(seed);
        EncoderModel {
            conv1: SageLayer::init(HIDDEN_DIM, INPUT_DIM, &mut rng),
            conv2: SageLayer::init(HIDDEN_DIM, HIDDEN_DIM, &mut rng),
            head: Linear::init(OUTPUT_DIM, HIDDEN_DIM, &mut rng),
            residual: Linear::init(OUTPUT_DIM, INPUT_DIM, &mut rng),
            init_seed: seed,
        }
    }

    pub fn zeros() -> Self {
        EncoderModel {
            conv1: SageLayer::zeros(HIDDEN_DIM, INPUT_DIM),
            conv2: SageLayer::zeros(HIDDEN_DIM, HIDDEN_DIM),
            head: Linear::zeros(OUTPUT_DIM, HIDDEN_DIM),
            residual: Linear::zeros(OUTPUT_DIM, INPUT_DIM),
            init_seed: 0,
        }
    }

    pub(crate) fn zeros_like(&self) -> Self {
        EncoderModel { init_seed: self.init_seed, ..Self::zeros() }
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Parameter blocks in a fixed order.
    pub fn params(&self) -> [&[f64]; 10] {
        [
            self.conv1.w_self.as_slice().expect("standard layout"),
            self.conv1.w_neigh.as_slice().expect("standard layout"),
            self.conv1.bias.as_slice().expect("standard layout"),
            self.conv2.w_self.as_slice().expect("standard layout"),
            self.conv2.w_neigh.as_slice().expect("standard layout"),
            self.conv2.bias.as_slice().expect("standard layout"),
            self.head.weight.as_slice().expect("standard layout"),
            self.head.bias.as_slice().expect("standard layout"),
            self.residual.weight.as_slice().expect("standard layout"),
            self.residual.bias.as_slice().expect("standard layout"),
        ]
    }

    pub fn params_mut(&mut self) -> [&mut [f64]; 10] {
        [
            self.conv1.w_self.as_slice_mut().expect("standard layout"),
            self.conv1.w_neigh.as_slice_mut().expect("standard layout"),
            self.conv1.bias.as_slice_mut().expect("standard layout"),
            self.conv2.w_self.as_slice_mut().expect("standard layout"),
            self.conv2.w_neigh.as_slice_mut().expect("standard layout"),
            self.conv2.bias.as_slice_mut().expect("standard layout"),
            self.head.weight.as_slice_mut().expect("standard layout"),
            self.head.bias.as_slice_mut().expect("standard layout"),
            self.residual.weight.as_slice_mut().expect("standard layout"),
            self.residual.bias.as_slice_mut().expect("standard layout"),
        ]
    }

    fn check_input(&self, input: &GraphInput) -> Result<()> {
        if input.features.ncols() != INPUT_DIM {
            return Err(Error::Shape(format!(
                "features are {} wide, the encoder takes {INPUT_DIM}",
                input.features.ncols()
            )));
        }
        Ok(())
    }

    /// Embeddings, one row per node.
    pub fn forward(&self, input: &GraphInput) -> Result<Array2<f64>> {
        Ok(self.forward_cached(input)?.0)
    }

    pub(crate) fn forward_cached(&self, input: &GraphInput) -> Result<(Array2<f64>, Cache)> {
        self.check_input(input)?;
        let x = &input.features;
        let agg1 = input.mean_aggregate(x);
        let z1 = self.conv1.apply(x, &agg1);
        let h1 = relu(&z1);
        let agg2 = input.mean_aggregate(&h1);
        let z2 = self.conv2.apply(&h1, &agg2);
        let h2 = relu(&z2);
        let out = self.head.apply(&h2) + self.residual.apply(x);
        Ok((out, Cache { agg1, z1, h1, agg2, z2, h2 }))
    }

    /// Parameter gradients given `d_out = dL/d(out)`.
    pub(crate) fn backward(&self, input: &GraphInput, cache: &Cache, d_out: &Array2<f64>) -> EncoderModel {
        let x = &input.features;
        let mut g = self.zeros_like();

        g.head.weight = d_out.t().dot(&cache.h2);
        g.head.bias = d_out.sum_axis(Axis(0));
        g.residual.weight = d_out.t().dot(x);
        g.residual.bias = d_out.sum_axis(Axis(0));

        let dh2 = d_out.dot(&self.head.weight);
        let dz2 = mask_relu(&dh2, &cache.z2);
        g.conv2.w_self = dz2.t().dot(&cache.h1);
        g.conv2.w_neigh = dz2.t().dot(&cache.agg2);
        g.conv2.bias = dz2.sum_axis(Axis(0));

        let dh1 = dz2.dot(&self.conv2.w_self)
            + input.mean_aggregate_transpose(&dz2.dot(&self.conv2.w_neigh));
        let dz1 = mask_relu(&dh1, &cache.z1);
        g.conv1.w_self = dz1.t().dot(x);
        g.conv1.w_neigh = dz1.t().dot(&cache.agg1);
        g.conv1.bias = dz1.sum_axis(Axis(0));
        g
    }

    pub fn to_file(&self) -> ModelFile {
        let dense = |a: &Array2<f64>| DenseBlock {
            rows: a.nrows(),
            cols: a.ncols(),
            data: a.iter().copied().collect(),
        };
        let vector = |b: &Array1<f64>| b.to_vec();
        ModelFile {
            format_version: ModelFile::FORMAT_VERSION,
            init_seed: self.init_seed,
            input_dim: INPUT_DIM,
            hidden_dim: HIDDEN_DIM,
            output_dim: OUTPUT_DIM,
            conv1_self: dense(&self.conv1.w_self),
            conv1_neigh: dense(&self.conv1.w_neigh),
            conv1_bias: vector(&self.conv1.bias),
            conv2_self: dense(&self.conv2.w_self),
            conv2_neigh: dense(&self.conv2.w_neigh),
            conv2_bias: vector(&self.conv2.bias),
            head_weight: dense(&self.head.weight),
            head_bias: vector(&self.head.bias),
            residual_weight: dense(&self.residual.weight),
            residual_bias: vector(&self.residual.bias),
        }
    }

    pub fn from_file(f: &ModelFile) -> Result<Self> {
        if f.format_version != ModelFile::FORMAT_VERSION {
            return Err(Error::Shape(format!("unsupported model format {}", f.format_version)));
        }
        if (f.input_dim, f.hidden_dim, f.output_dim) != (INPUT_DIM, HIDDEN_DIM, OUTPUT_DIM) {
            return Err(Error::Shape("model dimensions do not match the encoder".into()));
        }
        let dense = |b: &DenseBlock, rows: usize, cols: usize| -> Result<Array2<f64>> {
            if (b.rows, b.cols) != (rows, cols) {
                return Err(Error::Shape(format!(
                    "block is {}x{}, expected {rows}x{cols}",
                    b.rows, b.cols
                )));
            }
            Array2::from_shape_vec((rows, cols), b.data.clone()).map_err(|e| Error::Shape(e.to_string()))
        };
        let vector = |v: &[f64], len: usize| -> Result<Array1<f64>> {
            if v.len() != len {
                return Err(Error::Shape(format!("bias has {} entries, expected {len}", v.len())));
            }
            Ok(Array1::from(v.to_vec()))
        };
        let model = EncoderModel {
            conv1: SageLayer {
                w_self: dense(&f.conv1_self, HIDDEN_DIM, INPUT_DIM)?,
                w_neigh: dense(&f.conv1_neigh, HIDDEN_DIM, INPUT_DIM)?,
                bias: vector(&f.conv1_bias, HIDDEN_DIM)?,
            },
            conv2: SageLayer {
                w_self: dense(&f.conv2_self, HIDDEN_DIM, HIDDEN_DIM)?,
                w_neigh: dense(&f.conv2_neigh, HIDDEN_DIM, HIDDEN_DIM)?,
                bias: vector(&f.conv2_bias, HIDDEN_DIM)?,
            },
            head: Linear {
                weight: dense(&f.head_weight, OUTPUT_DIM, HIDDEN_DIM)?,
                bias: vector(&f.head_bias, OUTPUT_DIM)?,
            },
            residual: Linear {
                weight: dense(&f.residual_weight, OUTPUT_DIM, INPUT_DIM)?,
                bias: vector(&f.residual_bias, OUTPUT_DIM)?,
            },
            init_seed: f.init_seed,
        };
        if model.params().iter().any(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::Shape("model contains non-finite weights".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_file())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file(&serde_json::from_str(&text)?)
    }
}

fn mask_relu(upstream: &Array2<f64>, pre: &Array2<f64>) -> Array2<f64> {
    let mut out = upstream.clone();
    out.zip_mut_with(pre, |g, &z| {
        if z <= 0.0 {
            *g = 0.0
        }
    });
    out
}

/// Row-major weight block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseBlock {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// JSON model layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub init_seed: u64,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub conv1_self: DenseBlock,
    pub conv1_neigh: DenseBlock,
    pub conv1_bias: Vec<f64>,
    pub conv2_self: DenseBlock,
    pub conv2_neigh: DenseBlock,
    pub conv2_bias: Vec<f64>,
    pub head_weight: DenseBlock,
    pub head_bias: Vec<f64>,
    pub residual_weight: DenseBlock,
    pub residual_bias: Vec<f64>,
}

impl ModelFile {
    pub const FORMAT_VERSION: u32 = 1;
}
