use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::ops::relu;
use super::{Matrix, Parameters};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Layer sizes of a single-hidden-layer perceptron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpDims {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

impl MlpDims {
    pub fn new(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            input,
            hidden,
            output,
        }
    }
}

/// Dense `input → hidden (ReLU) → output` network. The output is raw logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct MlpForward {
    pub hidden: Matrix,
    pub out: Matrix,
}

impl MlpParams {
    pub fn zeros(dims: MlpDims) -> Self {
        Self {
            w1: Matrix::zeros(dims.input, dims.hidden),
            b1: vec![0.0; dims.hidden],
            w2: Matrix::zeros(dims.hidden, dims.output),
            b2: vec![0.0; dims.output],
        }
    }

    pub fn new(w1: Matrix, b1: Vec<f64>, w2: Matrix, b2: Vec<f64>) -> Result<Self> {
        let p = Self { w1, b1, w2, b2 };
        p.validate()?;
        Ok(p)
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(dims: MlpDims, rng: &mut Rng) -> Result<Self> {
        if dims.input == 0 || dims.hidden == 0 || dims.output == 0 {
            return Err(Error::Config(format!(
                "layer sizes must be positive, got {}-{}-{}",
                dims.input, dims.hidden, dims.output
            )));
        }
        let mut p = Self::zeros(dims);
        glorot_fill(&mut p.w1, rng);
        glorot_fill(&mut p.w2, rng);
        Ok(p)
    }

    pub fn dims(&self) -> MlpDims {
        MlpDims::new(self.w1.rows(), self.w1.cols(), self.w2.cols())
    }

    pub fn input_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.w1.cols();
        if self.b1.len() != h || self.w2.rows() != h || self.b2.len() != self.w2.cols() {
            return Err(Error::Dimension(format!(
                "inconsistent MLP shapes: w1 {:?}, b1 {}, w2 {:?}, b2 {}",
                self.w1.shape(),
                self.b1.len(),
                self.w2.shape(),
                self.b2.len()
            )));
        }
        if !self.all_finite() {
            return Err(Error::NonFinite("MLP parameters".into()));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Matrix) -> Result<MlpForward> {
        if x.cols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input has {} features, network expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        let mut hidden = x.matmul(&self.w1)?;
        hidden.add_row_vector(&self.b1);
        hidden.map_inplace(relu);
        let mut out = hidden.matmul(&self.w2)?;
        out.add_row_vector(&self.b2);
        Ok(MlpForward { hidden, out })
    }

    /// Logits only.
    pub fn logits(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward(x)?.out)
    }

    /// Gradients of a scalar loss given `d_out = ∂loss/∂out` for the batch.
    pub fn backward(&self, x: &Matrix, fwd: &MlpForward, d_out: &Matrix) -> Result<MlpParams> {
        if d_out.shape() != fwd.out.shape() {
            return Err(Error::Dimension(format!(
                "output gradient {:?} does not match output {:?}",
                d_out.shape(),
                fwd.out.shape()
            )));
        }
        let w2 = fwd.hidden.t_matmul(d_out)?;
        let b2 = d_out.sum_rows();
        let mut d_hidden = d_out.matmul_t(&self.w2)?;
        for (g, &h) in d_hidden.data_mut().iter_mut().zip(fwd.hidden.data()) {
            if h <= 0.0 {
                *g = 0.0;
            }
        }
        let w1 = x.t_matmul(&d_hidden)?;
        let b1 = d_hidden.sum_rows();
        Ok(MlpParams { w1, b1, w2, b2 })
    }
}

impl Parameters for MlpParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![self.w1.data(), &self.b1, self.w2.data(), &self.b2]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w1.data_mut(),
            &mut self.b1,
            self.w2.data_mut(),
            &mut self.b2,
        ]
    }
}

fn glorot_fill(w: &mut Matrix, rng: &mut Rng) {
    let bound = glorot_bound(w.rows(), w.cols());
    for v in w.data_mut() {
        *v = rng.random_range(-bound..bound);
    }
}

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Seeded Glorot-uniform initialisation.
pub fn init_params(dims: MlpDims, seed: u64) -> Result<MlpParams> {
    use rand::SeedableRng;
    MlpParams::init(dims, &mut Rng::seed_from_u64(seed))
}
