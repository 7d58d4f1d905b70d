//! Single-hidden-layer network with randomly fixed input weights.
//!
//! The input weights `W` and hidden biases `b` are drawn once, uniform
//! on [-1, 1], and never trained. Only the output weights are learned,
//! in closed form, from the hidden activations `H_i = act(W g_i + b)` of
//! a labeled training set: `Y = T H^+` (or its ridge-regularized
//! equivalent at scale). Inference is `O = Y act(W g + b)` followed by
//! an argmax of `|o_j|^2`.

pub mod io;
pub mod solver;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::linalg::Mat;
use crate::metrics::argmax_tie_smallest;
use crate::rng::{self, Domain};

pub use solver::{Solver, DEFAULT_RIDGE_LAMBDA};

/// Hidden-layer activation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Activation::Sigmoid => 0,
            Activation::Tanh => 1,
            Activation::Relu => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Sigmoid),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Relu),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::invalid(format!("unknown activation '{other}'"))),
        }
    }
}

/// One training example: a feature vector paired with a one-hot offset
/// label (stored as the hot index plus the label length).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub feature: Vec<f64>,
    pub label: usize,
    pub n_classes: usize,
}

impl LabeledSample {
    pub fn new(feature: Vec<f64>, label: usize, n_classes: usize) -> Result<Self> {
        if label >= n_classes {
            return Err(Error::invalid(format!(
                "label {label} outside {n_classes} classes"
            )));
        }
        Ok(LabeledSample {
            feature,
            label,
            n_classes,
        })
    }

    /// The dense one-hot target vector.
    pub fn one_hot(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.n_classes];
        t[self.label] = 1.0;
        t
    }
}

/// How the model was trained; recorded alongside persisted weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub n_samples: Option<usize>,
    pub solver: Option<String>,
}

/// A trained network.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    input_weights: Mat,  // hidden × input
    bias: Vec<f64>,      // hidden
    output_weights: Mat, // classes × hidden
    activation: Activation,
    /// Frame geometry (M, Ns) when the input is a length M-Ns metric
    /// vector; None for raw-observation models, which cannot be
    /// persisted in the v1 file format.
    frame_dims: Option<(usize, usize)>,
    meta: TrainMeta,
}

impl ElmModel {
    pub fn n_hidden(&self) -> usize {
        self.input_weights.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.input_weights.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.output_weights.rows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn frame_dims(&self) -> Option<(usize, usize)> {
        self.frame_dims
    }

    pub fn meta(&self) -> &TrainMeta {
        &self.meta
    }

    pub fn input_weights(&self) -> &Mat {
        &self.input_weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn output_weights(&self) -> &Mat {
        &self.output_weights
    }

    /// Hidden-layer response `act(W x + b)`.
    pub fn hidden_activations(&self, feature: &[f64]) -> Result<Vec<f64>> {
        if feature.len() != self.input_dim() {
            return Err(Error::DimMismatch {
                expected: self.input_dim(),
                got: feature.len(),
                context: "inference feature length",
            });
        }
        let mut h = self.input_weights.matvec(feature)?;
        for (v, b) in h.iter_mut().zip(&self.bias) {
            *v = self.activation.apply(*v + b);
        }
        Ok(h)
    }

    /// Network output and the offset estimate `argmax_j |o_j|^2` (ties
    /// to the smallest index).
    pub fn infer(&self, feature: &[f64]) -> Result<(usize, Vec<f64>)> {
        let hidden = self.hidden_activations(feature)?;
        let output = self.output_weights.matvec(&hidden)?;
        let energies: Vec<f64> = output.iter().map(|o| o * o).collect();
        let estimate = argmax_tie_smallest(&energies)
            .ok_or_else(|| Error::invalid("model has no output classes"))?;
        Ok((estimate, output))
    }

    /// Assembles a model from raw parts (used by persistence and tests).
    pub fn from_parts(
        input_weights: Mat,
        bias: Vec<f64>,
        output_weights: Mat,
        activation: Activation,
        frame_dims: Option<(usize, usize)>,
        meta: TrainMeta,
    ) -> Result<Self> {
        if bias.len() != input_weights.rows() {
            return Err(Error::DimMismatch {
                expected: input_weights.rows(),
                got: bias.len(),
                context: "bias length",
            });
        }
        if output_weights.cols() != input_weights.rows() {
            return Err(Error::DimMismatch {
                expected: input_weights.rows(),
                got: output_weights.cols(),
                context: "output weight width",
            });
        }
        if let Some((m, ns)) = frame_dims {
            let n = m.checked_sub(ns).filter(|n| *n > 0).ok_or_else(|| {
                Error::invalid(format!("frame dims ({m}, {ns}) leave no search window"))
            })?;
            if input_weights.cols() != n || output_weights.rows() != n {
                return Err(Error::DimMismatch {
                    expected: n,
                    got: input_weights.cols(),
                    context: "frame dims vs weight shape",
                });
            }
        }
        if !input_weights.is_finite()
            || !output_weights.is_finite()
            || !bias.iter().all(|v| v.is_finite())
        {
            return Err(Error::invalid("model weights must be finite"));
        }
        Ok(ElmModel {
            input_weights,
            bias,
            output_weights,
            activation,
            frame_dims,
            meta,
        })
    }
}

/// Draws the fixed input weights and biases, i.i.d. uniform on [-1, 1].
pub fn init_weights(
    n_hidden: usize,
    input_dim: usize,
    rng: &mut impl Rng,
) -> Result<(Mat, Vec<f64>)> {
    if n_hidden < 1 || input_dim < 1 {
        return Err(Error::invalid(format!(
            "network dimensions must be positive (hidden {n_hidden}, input {input_dim})"
        )));
    }
    let w = Mat::from_fn(n_hidden, input_dim, |_, _| rng.gen_range(-1.0..=1.0));
    let b = (0..n_hidden).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    Ok((w, b))
}

/// Block size for streaming activation builds. Large enough to amortize
/// dispatch, small enough to keep block buffers cache- and RAM-friendly.
const TRAIN_BLOCK: usize = 4096;

/// Trains a network on a labeled set.
///
/// `seed` initializes the fixed input weights through the model seed
/// domain and is recorded in the returned model, so equal
/// `(samples, seed, solver)` always reproduce the same weights.
pub fn train(
    samples: &[LabeledSample],
    n_hidden: usize,
    activation: Activation,
    seed: u64,
    solver: Solver,
) -> Result<ElmModel> {
    train_with_exec(
        Exec::Auto,
        samples,
        n_hidden,
        activation,
        seed,
        solver,
        None,
    )
}

/// [`train`] with an explicit execution strategy and optional frame
/// geometry to stamp on the model.
pub fn train_with_exec(
    exec: Exec,
    samples: &[LabeledSample],
    n_hidden: usize,
    activation: Activation,
    seed: u64,
    solver: Solver,
    frame_dims: Option<(usize, usize)>,
) -> Result<ElmModel> {
    let first = samples
        .first()
        .ok_or_else(|| Error::invalid("training set is empty"))?;
    let input_dim = first.feature.len();
    let n_classes = first.n_classes;
    for (i, s) in samples.iter().enumerate() {
        if s.feature.len() != input_dim {
            return Err(Error::DimMismatch {
                expected: input_dim,
                got: s.feature.len(),
                context: "sample feature length",
            });
        }
        if s.n_classes != n_classes || s.label >= n_classes {
            return Err(Error::invalid(format!(
                "sample {i} label {}/{} inconsistent with {n_classes} classes",
                s.label, s.n_classes
            )));
        }
    }

    let mut init_rng = rng::stream(seed, Domain::Model, 0);
    let (w, b) = init_weights(n_hidden, input_dim, &mut init_rng)?;

    let activations_for = |range: std::ops::Range<usize>, out: &mut Mat| {
        debug_assert_eq!(out.rows(), range.len());
        exec::for_each_chunk_mut(exec, out.data_mut(), n_hidden, |chunk_start, row| {
            let sample = &samples[range.start + chunk_start / n_hidden];
            fill_activations(&w, &b, activation, &sample.feature, row);
        });
    };

    let upsilon = match solver {
        Solver::Svd => {
            // Materialize H (hidden × samples) and dense T.
            let mut a = Mat::zeros(samples.len(), n_hidden);
            activations_for(0..samples.len(), &mut a);
            check_finite(&a)?;
            let h = Mat::from_fn(n_hidden, samples.len(), |r, c| a.get(c, r));
            let mut t = Mat::zeros(n_classes, samples.len());
            for (i, s) in samples.iter().enumerate() {
                t.set(s.label, i, 1.0);
            }
            solver::solve_svd(&h, &t)?
        }
        Solver::Ridge(lambda) => {
            let mut acc = solver::RidgeAccumulator::new(n_hidden, n_classes);
            let mut block = Mat::zeros(TRAIN_BLOCK.min(samples.len()), n_hidden);
            let mut start = 0;
            while start < samples.len() {
                let end = (start + TRAIN_BLOCK).min(samples.len());
                let rows = end - start;
                if block.rows() != rows {
                    block = Mat::zeros(rows, n_hidden);
                }
                activations_for(start..end, &mut block);
                check_finite(&block)?;
                let labels: Vec<usize> = samples[start..end].iter().map(|s| s.label).collect();
                acc.push_block(exec, &block, &labels)?;
                start = end;
            }
            acc.solve(lambda)?
        }
    };

    ElmModel::from_parts(
        w,
        b,
        upsilon,
        activation,
        frame_dims,
        TrainMeta {
            seed,
            n_samples: Some(samples.len()),
            solver: Some(solver.label()),
        },
    )
}

fn check_finite(m: &Mat) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::Training("hidden activations are not finite".into()))
    }
}

fn fill_activations(w: &Mat, b: &[f64], activation: Activation, feature: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len(), w.rows());
    for (j, o) in out.iter_mut().enumerate() {
        let z = crate::linalg::dot(w.row(j), feature) + b[j];
        *o = activation.apply(z);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample(feature: Vec<f64>, label: usize, n_classes: usize) -> LabeledSample {
        LabeledSample::new(feature, label, n_classes).unwrap()
    }

    fn toy_samples(n: usize, dim: usize, classes: usize, seed: u64) -> Vec<LabeledSample> {
        let mut r = rng::stream(seed, Domain::Data, 55);
        (0..n)
            .map(|_| {
                let f: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
                let label = r.gen_range(0..classes);
                sample(f, label, classes)
            })
            .collect()
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let mut r1 = rng::stream(9, Domain::Model, 0);
        let mut r2 = rng::stream(9, Domain::Model, 0);
        let (w1, b1) = init_weights(40, 30, &mut r1).unwrap();
        let (w2, b2) = init_weights(40, 30, &mut r2).unwrap();
        assert_eq!(w1.data(), w2.data());
        assert_eq!(b1, b2);
        assert!(w1.data().iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(b1.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn init_entries_have_zero_mean() {
        let mut r = rng::stream(10, Domain::Model, 0);
        let (w, _) = init_weights(400, 300, &mut r).unwrap();
        let n = w.data().len() as f64; // 120000 >= 1e5
        let mean = w.data().iter().sum::<f64>() / n;
        // U[-1,1] has sigma = 1/sqrt(3); allow 3 sigma of the mean.
        let bound = 3.0 / (3.0f64).sqrt() / n.sqrt();
        assert!(mean.abs() < bound, "mean {mean} vs bound {bound}");
    }

    #[test]
    fn init_rejects_zero_dimensions() {
        let mut r = rng::stream(11, Domain::Model, 0);
        assert!(init_weights(0, 5, &mut r).is_err());
        assert!(init_weights(5, 0, &mut r).is_err());
    }

    #[test]
    fn hidden_activations_match_scalar_oracle() {
        let samples = toy_samples(5, 12, 4, 12);
        let model = train(&samples, 9, Activation::Tanh, 3, Solver::Svd).unwrap();
        for s in &samples {
            let got = model.hidden_activations(&s.feature).unwrap();
            for (j, g) in got.iter().enumerate() {
                let mut z = 0.0;
                for (k, x) in s.feature.iter().enumerate() {
                    z += model.input_weights().get(j, k) * x;
                }
                z += model.bias()[j];
                assert_relative_eq!(*g, z.tanh(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sigmoid_of_zero_preactivation_is_half() {
        let zero_w = Mat::zeros(6, 3);
        let model = ElmModel::from_parts(
            zero_w,
            vec![0.0; 6],
            Mat::zeros(3, 6),
            Activation::Sigmoid,
            None,
            TrainMeta {
                seed: 0,
                n_samples: None,
                solver: None,
            },
        )
        .unwrap();
        let h = model.hidden_activations(&[1.0, -2.0, 0.5]).unwrap();
        assert!(h.iter().all(|v| *v == 0.5));
    }

    #[test]
    fn relu_zeroes_negative_preactivations() {
        let mut w = Mat::zeros(2, 1);
        w.set(0, 0, 1.0);
        w.set(1, 0, -1.0);
        let model = ElmModel::from_parts(
            w,
            vec![0.0, 0.0],
            Mat::zeros(1, 2),
            Activation::Relu,
            None,
            TrainMeta {
                seed: 0,
                n_samples: None,
                solver: None,
            },
        )
        .unwrap();
        let h = model.hidden_activations(&[2.0]).unwrap();
        assert_eq!(h, vec![2.0, 0.0]);
    }

    #[test]
    fn zero_output_weights_give_offset_zero_by_tie_rule() {
        let samples = toy_samples(5, 8, 4, 13);
        let trained = train(&samples, 6, Activation::Sigmoid, 5, Solver::Svd).unwrap();
        let model = ElmModel::from_parts(
            trained.input_weights().clone(),
            trained.bias().to_vec(),
            Mat::zeros(4, 6),
            Activation::Sigmoid,
            None,
            trained.meta().clone(),
        )
        .unwrap();
        let (tau, out) = model.infer(&samples[0].feature).unwrap();
        assert_eq!(tau, 0);
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_sample_training_recovers_its_own_label() {
        let s = sample(vec![0.3, -0.8, 0.5, 0.1, 0.9, -0.2, 0.4, 0.0], 5, 8);
        let model = train(
            std::slice::from_ref(&s),
            16,
            Activation::Sigmoid,
            7,
            Solver::Svd,
        )
        .unwrap();
        let (tau, _) = model.infer(&s.feature).unwrap();
        assert_eq!(tau, 5);
    }

    #[test]
    fn negating_output_weights_keeps_the_estimate() {
        let samples = toy_samples(40, 10, 6, 14);
        let model = train(&samples, 20, Activation::Sigmoid, 8, Solver::Svd).unwrap();
        let negated = ElmModel::from_parts(
            model.input_weights().clone(),
            model.bias().to_vec(),
            Mat::from_fn(6, 20, |r, c| -model.output_weights().get(r, c)),
            model.activation(),
            None,
            model.meta().clone(),
        )
        .unwrap();
        for s in &samples {
            let (a, _) = model.infer(&s.feature).unwrap();
            let (b, _) = negated.infer(&s.feature).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let samples = toy_samples(60, 10, 6, 15);
        let a = train(&samples, 24, Activation::Sigmoid, 9, Solver::Ridge(1e-6)).unwrap();
        let b = train(&samples, 24, Activation::Sigmoid, 9, Solver::Ridge(1e-6)).unwrap();
        assert_eq!(a, b);
        let seq = train_with_exec(
            Exec::Sequential,
            &samples,
            24,
            Activation::Sigmoid,
            9,
            Solver::Ridge(1e-6),
            None,
        )
        .unwrap();
        assert_eq!(a, seq);
    }

    #[test]
    fn train_rejects_inconsistent_samples() {
        assert!(train(&[], 4, Activation::Sigmoid, 0, Solver::Svd).is_err());
        let mixed = vec![
            sample(vec![1.0, 2.0], 0, 4),
            sample(vec![1.0, 2.0, 3.0], 1, 4),
        ];
        assert!(train(&mixed, 4, Activation::Sigmoid, 0, Solver::Svd).is_err());
        let classes = vec![sample(vec![1.0], 0, 4), sample(vec![1.0], 1, 3)];
        assert!(train(&classes, 4, Activation::Sigmoid, 0, Solver::Svd).is_err());
    }

    #[test]
    fn train_rejects_non_finite_features() {
        let bad = vec![sample(vec![f64::NAN, 1.0], 0, 2)];
        // Sigmoid(NaN) stays NaN, which the finiteness check catches.
        assert!(matches!(
            train(&bad, 4, Activation::Sigmoid, 0, Solver::Svd),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn infer_rejects_wrong_dimension() {
        let samples = toy_samples(10, 6, 3, 16);
        let model = train(&samples, 8, Activation::Sigmoid, 10, Solver::Svd).unwrap();
        assert!(model.infer(&[0.0; 5]).is_err());
    }
}
