//! Fully connected Q-value network with hand-written backpropagation.

use std::io::{BufRead, Write};

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::dynamics::NUM_ACTIONS;
use crate::error::{Error, Result};

const FILE_MAGIC: &str = "qst-value-network 1";

/// Weights and biases of a ReLU network mapping state features to one
/// Q-value per action. Layer `l` computes `W_l · a + b_l` with `W_l` stored
/// as `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueNetwork {
    sizes: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

/// Gradient of the loss with respect to every parameter, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl ValueNetwork {
    /// All-zero network with the given layer sizes (input first, 16 outputs last).
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!("invalid layer sizes {sizes:?}")));
        }
        if *sizes.last().unwrap() != NUM_ACTIONS {
            return Err(Error::InvalidConfig(format!(
                "output layer must have {NUM_ACTIONS} units, got {}",
                sizes.last().unwrap()
            )));
        }
        let weights = sizes.windows(2).map(|w| Array2::zeros((w[1], w[0]))).collect();
        let biases = sizes[1..].iter().map(|&n| Array1::zeros(n)).collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            weights,
            biases,
        })
    }

    /// He-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for w in &mut net.weights {
            let limit = (6.0 / w.ncols() as f64).sqrt();
            w.mapv_inplace(|_| rng.random_range(-limit..limit));
        }
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Array1<f64>] {
        &mut self.biases
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|x| x.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|x| x.is_finite()))
    }

    fn check_input(&self, dim: usize) -> Result<()> {
        if dim != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: dim,
            });
        }
        Ok(())
    }

    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check_input(features.len())?;
        let mut a = Array1::from(features.to_vec());
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            a = w.dot(&a) + b;
            if l < last {
                a.mapv_inplace(|x| x.max(0.0));
            }
        }
        Ok(a.to_vec())
    }

    /// Outputs for a batch (one row per sample).
    pub fn forward_batch(&self, inputs: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(inputs.ncols())?;
        Ok(self.activations(inputs).pop().unwrap())
    }

    // Post-activation values of every layer, inputs included.
    fn activations(&self, inputs: &Array2<f64>) -> Vec<Array2<f64>> {
        let last = self.weights.len() - 1;
        let mut acts = Vec::with_capacity(self.weights.len() + 1);
        acts.push(inputs.clone());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = acts[l].dot(&w.t()) + b;
            if l < last {
                z.mapv_inplace(|x| x.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    /// Mean squared error between `Q(inputs[i])[actions[i]]` and `targets[i]`,
    /// and its gradient.
    pub fn loss_and_gradients(
        &self,
        inputs: &Array2<f64>,
        actions: &[usize],
        targets: &[f64],
    ) -> Result<(f64, Gradients)> {
        self.check_input(inputs.ncols())?;
        let batch = inputs.nrows();
        if actions.len() != batch || targets.len() != batch || batch == 0 {
            return Err(Error::DimensionMismatch {
                expected: batch,
                found: actions.len().min(targets.len()),
            });
        }
        if let Some(&bad) = actions.iter().find(|&&a| a >= NUM_ACTIONS) {
            return Err(Error::InvalidAction(bad));
        }
        let acts = self.activations(inputs);
        let out = acts.last().unwrap();
        let mut delta = Array2::<f64>::zeros(out.raw_dim());
        let mut loss = 0.0;
        for i in 0..batch {
            let err = out[(i, actions[i])] - targets[i];
            loss += err * err;
            delta[(i, actions[i])] = 2.0 * err / batch as f64;
        }
        loss /= batch as f64;

        let layers = self.weights.len();
        let mut grad_w = vec![Array2::zeros((0, 0)); layers];
        let mut grad_b = vec![Array1::zeros(0); layers];
        for l in (0..layers).rev() {
            grad_w[l] = delta.t().dot(&acts[l]);
            grad_b[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut prev = delta.dot(&self.weights[l]);
                // ReLU derivative, read off the stored post-activation.
                prev.zip_mut_with(&acts[l], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = prev;
            }
        }
        Ok((
            loss,
            Gradients {
                weights: grad_w,
                biases: grad_b,
            },
        ))
    }

    /// `params -= alpha · grads`.
    pub fn apply_gradients(&mut self, grads: &Gradients, alpha: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            w.scaled_add(-alpha, g);
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            b.scaled_add(-alpha, g);
        }
    }

    /// Writes the layer sizes, then each layer's weights (row-major) and biases.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{FILE_MAGIC}")?;
        let sizes: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        writeln!(out, "layers {}", sizes.join(" "))?;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            writeln!(out, "weights {l} {} {}", w.nrows(), w.ncols())?;
            for row in w.rows() {
                let vals: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
                writeln!(out, "{}", vals.join(" "))?;
            }
            writeln!(out, "biases {l} {}", b.len())?;
            let vals: Vec<String> = b.iter().map(|x| format!("{x:e}")).collect();
            writeln!(out, "{}", vals.join(" "))?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::Parse(format!("unexpected end of file, expected {what}")))
        };
        if next("header")?.trim() != FILE_MAGIC {
            return Err(Error::Parse("not a value-network file".into()));
        }
        let layers = next("layer sizes")?;
        let sizes = layers
            .strip_prefix("layers ")
            .ok_or_else(|| Error::Parse(format!("expected 'layers', found '{layers}'")))?
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad layer size '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        let mut net = Self::zeros(&sizes)?;
        let parse_row = |line: &str, expected: usize| -> Result<Vec<f64>> {
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{t}'"))))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != expected {
                return Err(Error::Parse(format!("expected {expected} values, found {}", vals.len())));
            }
            Ok(vals)
        };
        for l in 0..net.weights.len() {
            let (rows, cols) = net.weights[l].dim();
            let header = next("weights header")?;
            if header.trim() != format!("weights {l} {rows} {cols}") {
                return Err(Error::Parse(format!("unexpected weights header '{header}'")));
            }
            for r in 0..rows {
                let vals = parse_row(&next("weight row")?, cols)?;
                net.weights[l].row_mut(r).assign(&Array1::from(vals));
            }
            let header = next("biases header")?;
            if header.trim() != format!("biases {l} {rows}") {
                return Err(Error::Parse(format!("unexpected biases header '{header}'")));
            }
            net.biases[l] = Array1::from(parse_row(&next("bias row")?, rows)?);
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_zeros() {
        let net = ValueNetwork::zeros(&[8, 5, 16]).unwrap();
        assert_eq!(net.forward(&[0.3; 8]).unwrap(), vec![0.0; 16]);
    }

    #[test]
    fn output_has_sixteen_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = ValueNetwork::init(&[6, 7, 9, 16], &mut rng).unwrap();
        assert_eq!(net.forward(&[0.1, -0.2, 0.3, 0.0, 0.5, 0.2]).unwrap().len(), 16);
        assert!(matches!(net.forward(&[0.0; 5]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ValueNetwork::zeros(&[8]).is_err());
        assert!(ValueNetwork::zeros(&[8, 4]).is_err());
        assert!(ValueNetwork::zeros(&[8, 0, 16]).is_err());
    }

    #[test]
    fn single_linear_layer_by_hand() {
        // Two inputs; output k = w_k0·x0 + w_k1·x1 + b_k.
        let mut net = ValueNetwork::zeros(&[2, 16]).unwrap();
        net.weights_mut()[0][(0, 0)] = 1.0;
        net.weights_mut()[0][(1, 1)] = 1.0;
        net.weights_mut()[0][(2, 0)] = 2.0;
        net.weights_mut()[0][(2, 1)] = -1.0;
        net.biases_mut()[0][3] = 0.5;
        let q = net.forward(&[0.6, 0.8]).unwrap();
        assert_eq!(q[0], 0.6);
        assert_eq!(q[1], 0.8);
        assert!((q[2] - 0.4).abs() < 1e-15);
        assert_eq!(q[3], 0.5);
        assert!(q[4..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn batch_forward_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = ValueNetwork::init(&[4, 10, 16], &mut rng).unwrap();
        let x = Array2::from_shape_fn((3, 4), |(i, j)| (i as f64 - j as f64) * 0.1);
        let batch = net.forward_batch(&x).unwrap();
        for i in 0..3 {
            let single = net.forward(x.row(i).as_slice().unwrap()).unwrap();
            for k in 0..16 {
                assert!((batch[(i, k)] - single[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn save_load_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = ValueNetwork::init(&[4, 3, 16], &mut rng).unwrap();
        let mut buf = Vec::new();
        net.save(&mut buf).unwrap();
        let back = ValueNetwork::load(buf.as_slice()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn load_reports_bad_input() {
        assert!(matches!(ValueNetwork::load("junk\n".as_bytes()), Err(Error::Parse(_))));
        let truncated = format!("{FILE_MAGIC}\nlayers 2 16\nweights 0 16 2\n1 2\n");
        assert!(ValueNetwork::load(truncated.as_bytes()).is_err());
    }
}
