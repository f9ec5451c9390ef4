//! Binary classifiers behind one scoring interface.
//!
//! A [`ScoringModel`] is a stack of affine layers with ReLU between them and
//! a single-logit head. Scores for the two classes come from one logit `z`:
//! the class-1 logit score is `z` and the class-0 logit score is `-z`; the
//! probability scores are `sigmoid(z)` and `1 - sigmoid(z)`.
//!
//! Every scored evaluation goes through [`ScoringModel::forward_score`] or
//! [`ScoringModel::class_score`], which bump an internal counter. Cost
//! accounting elsewhere in the crate reads only that counter, so internal
//! forwards (backward-pass traces, training) never inflate evaluation
//! counts.

pub mod backward;
pub mod train;

use core::sync::atomic::{AtomicU64, Ordering};

use alloc::vec::Vec;

use crate::error::{dim, invalid, Error, Result};
use crate::math;
use crate::numerics::Matrix;

/// Which architecture a model was built as.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    /// Single affine layer.
    Linear,
    /// ReLU multilayer perceptron.
    Mlp,
}

/// Score function selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoreKind {
    /// Raw class logit.
    Logit,
    /// Class probability through the logistic link.
    Probability,
}

/// One affine layer: `y = W x + b`, weight stored as `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// Weight matrix, one row per output unit.
    pub weight: Matrix,
    /// One bias per output unit.
    pub bias: Vec<f64>,
}

impl Layer {
    /// Validated layer constructor.
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        if weight.rows() != bias.len() {
            return Err(dim("layer bias", weight.rows(), bias.len()));
        }
        if weight.rows() == 0 || weight.cols() == 0 {
            return Err(Error::Empty { what: "layer weight" });
        }
        Ok(Layer { weight, bias })
    }

    fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    fn in_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Forward activations kept for backward passes: `pre[l]` is the input to
/// layer `l`'s activation, `post[l]` its output (`post` of the final layer
/// is the logit, unactivated).
pub(crate) struct Trace {
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl Trace {
    pub fn logit(&self) -> f64 {
        self.post[self.post.len() - 1][0]
    }
}

/// Binary classifier with an evaluation counter.
#[derive(Debug)]
pub struct ScoringModel {
    kind: ModelKind,
    layers: Vec<Layer>,
    evals: AtomicU64,
}

impl Clone for ScoringModel {
    fn clone(&self) -> Self {
        ScoringModel {
            kind: self.kind,
            layers: self.layers.clone(),
            evals: AtomicU64::new(self.evals.load(Ordering::Relaxed)),
        }
    }
}

impl ScoringModel {
    /// Linear model `z = w . x + b`.
    pub fn linear(weights: Vec<f64>, bias: f64) -> Result<Self> {
        let d = weights.len();
        let layer = Layer::new(Matrix::from_flat(1, d, weights)?, alloc::vec![bias])?;
        Ok(ScoringModel { kind: ModelKind::Linear, layers: alloc::vec![layer], evals: AtomicU64::new(0) })
    }

    /// MLP from explicit layers; ReLU is applied between layers, never after
    /// the last one, which must emit exactly one logit.
    pub fn mlp(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty { what: "layer stack" });
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(dim("layer chain", pair[0].out_dim(), pair[1].in_dim()));
            }
        }
        if layers[layers.len() - 1].out_dim() != 1 {
            return Err(invalid("head", "final layer must emit a single logit"));
        }
        Ok(ScoringModel { kind: ModelKind::Mlp, layers, evals: AtomicU64::new(0) })
    }

    /// Architecture tag.
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Expected input dimension.
    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    /// The layer stack.
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Widths of the hidden layers (empty for a linear model).
    pub fn hidden_dims(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(Layer::out_dim).collect()
    }

    /// Counted score of class 1 under the chosen score function.
    pub fn forward_score(&self, x: &[f64], score: ScoreKind) -> Result<f64> {
        self.class_score(x, score, 1)
    }

    /// Counted score of an arbitrary class. One call, one counter bump.
    pub fn class_score(&self, x: &[f64], score: ScoreKind, class: u8) -> Result<f64> {
        if class > 1 {
            return Err(invalid("class", "binary models have classes 0 and 1"));
        }
        let z = self.logit(x)?;
        self.evals.fetch_add(1, Ordering::Relaxed);
        Ok(match (score, class) {
            (ScoreKind::Logit, 1) => z,
            (ScoreKind::Logit, _) => -z,
            (ScoreKind::Probability, 1) => math::sigmoid(z),
            (ScoreKind::Probability, _) => 1.0 - math::sigmoid(z),
        })
    }

    /// Evaluations consumed so far.
    pub fn eval_count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    /// Reset the evaluation counter to zero.
    pub fn reset_eval_count(&self) {
        self.evals.store(0, Ordering::Relaxed);
    }

    /// Uncounted logit; scoring surfaces and training use this internally.
    fn logit(&self, x: &[f64]) -> Result<f64> {
        Ok(self.trace(x)?.logit())
    }

    pub(crate) fn trace(&self, x: &[f64]) -> Result<Trace> {
        if x.len() != self.input_dim() {
            return Err(dim("model input", self.input_dim(), x.len()));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut cur: Vec<f64> = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weight.matvec(&cur)?;
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi += bi;
            }
            let activated: Vec<f64> = if l == last {
                z.clone()
            } else {
                z.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
            };
            pre.push(z);
            post.push(activated.clone());
            cur = activated;
        }
        Ok(Trace { pre, post })
    }
}
