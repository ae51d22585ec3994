//! Dense feed-forward network with ReLU hidden layers and a sigmoid output.
//!
//! Inputs are binary pair vectors, so the first layer is evaluated by
//! summing the weight rows of the asserted pairs instead of a dense product.

use rand::distributions::{Distribution, Uniform};

use super::real::{gemm, Real};
use crate::error::{Error, Result};
use crate::grid::PartialAssignment;
use crate::seed::stream_rng;

/// Hidden widths of the reference architecture.
pub const DEFAULT_HIDDEN: [usize; 3] = [512, 512, 512];

/// Fully connected layer. `weights` is `inputs x outputs`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Layer<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<T> {
    layers: Vec<Layer<T>>,
}

/// Per-layer parameter gradients, shaped like the model.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(model: &Mlp<T>) -> Self {
        Self {
            layers: model.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    pub fn scale(&mut self, factor: T) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|g| *g *= factor);
        }
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += *y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += *y);
        }
    }
}

/// Activations kept from a forward pass over a chunk of inputs.
pub(crate) struct Activations<T> {
    pub batch: usize,
    /// Pre-activations per layer, `batch x outputs`.
    pub pre: Vec<Vec<T>>,
    /// Post-activations per layer; the last one holds the sigmoid outputs.
    pub post: Vec<Vec<T>>,
}

impl<T: Real> Activations<T> {
    pub fn output(&self) -> &[T] {
        self.post.last().expect("at least one layer")
    }
}

/// Indices of the asserted pairs, the network's sparse input form.
pub(crate) fn sparse_input(x: &PartialAssignment) -> Vec<u32> {
    x.iter_ones().map(|p| p.index() as u32).collect()
}

#[inline]
pub(crate) fn sigmoid<T: Real>(a: T) -> T {
    if a >= T::zero() {
        T::one() / (T::one() + (-a).exp())
    } else {
        let e = a.exp();
        e / (T::one() + e)
    }
}

impl<T: Real> Mlp<T> {
    /// Builds a network with the given layer widths, `widths[0]` being the
    /// input width and the last entry the output width.
    ///
    /// Hidden layers use uniform init with variance `2 / fan_in`; the output
    /// layer uses the narrower `6 / (fan_in + fan_out)` bound. Biases start at
    /// zero.
    pub fn new(widths: &[usize], seed: u64) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::Range(format!("invalid layer widths {widths:?}")));
        }
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = if i == last {
                    (6.0 / (fan_in + fan_out) as f64).sqrt()
                } else {
                    (6.0 / fan_in as f64).sqrt()
                };
                let dist = Uniform::new_inclusive(-limit, limit);
                let mut rng = stream_rng(seed, "init", i as u64);
                let mut layer = Layer::zeros(fan_in, fan_out);
                layer.weights.iter_mut().for_each(|v| *v = T::from_f64(dist.sample(&mut rng)));
                layer
            })
            .collect();
        Ok(Self { layers })
    }

    /// `m -> 512 -> 512 -> 512 -> m`.
    pub fn reference(m: usize, seed: u64) -> Result<Self> {
        let mut widths = vec![m];
        widths.extend(DEFAULT_HIDDEN);
        widths.push(m);
        Self::new(&widths, seed)
    }

    pub fn from_layers(layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Range("a network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::Shape {
                    expected: l.inputs * l.outputs + l.outputs,
                    actual: l.weights.len() + l.bias.len(),
                });
            }
            if i > 0 && layers[i - 1].outputs != l.inputs {
                return Err(Error::Shape {
                    expected: layers[i - 1].outputs,
                    actual: l.inputs,
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_width())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub(crate) fn check_input(&self, x: &PartialAssignment) -> Result<()> {
        if x.shape().m() != self.input_width() {
            return Err(Error::Shape {
                expected: self.input_width(),
                actual: x.shape().m(),
            });
        }
        Ok(())
    }

    /// Runs a chunk of sparse binary inputs (indices of the set bits).
    pub(crate) fn forward_chunk(&self, inputs: &[&[u32]]) -> Activations<T> {
        let batch = inputs.len();
        let depth = self.layers.len();
        let mut pre: Vec<Vec<T>> = Vec::with_capacity(depth);
        let mut post: Vec<Vec<T>> = Vec::with_capacity(depth);
        for (li, layer) in self.layers.iter().enumerate() {
            let out = layer.outputs;
            let mut z = Vec::with_capacity(batch * out);
            for _ in 0..batch {
                z.extend_from_slice(&layer.bias);
            }
            if li == 0 {
                for (b, ones) in inputs.iter().enumerate() {
                    let row = &mut z[b * out..(b + 1) * out];
                    for &j in ones.iter() {
                        let j = j as usize;
                        let w = &layer.weights[j * out..(j + 1) * out];
                        row.iter_mut().zip(w).for_each(|(r, &wv)| *r += wv);
                    }
                }
            } else {
                gemm(batch, layer.inputs, out, &post[li - 1], false, &layer.weights, false, T::one(), &mut z);
            }
            let h: Vec<T> = if li + 1 == depth {
                z.iter().map(|&a| sigmoid(a)).collect()
            } else {
                z.iter().map(|&a| a.max(T::zero())).collect()
            };
            pre.push(z);
            post.push(h);
        }
        Activations { batch, pre, post }
    }

    /// Accumulates parameter gradients into `grads` given the loss gradient
    /// with respect to the output pre-activations (`batch x outputs`).
    pub(crate) fn backward_chunk(
        &self,
        inputs: &[&[u32]],
        acts: &Activations<T>,
        d_out: Vec<T>,
        grads: &mut Gradients<T>,
    ) {
        let batch = acts.batch;
        let mut dz = d_out;
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let g = &mut grads.layers[li];
            let out = layer.outputs;
            for row in dz.chunks_exact(out) {
                g.bias.iter_mut().zip(row).for_each(|(gb, &d)| *gb += d);
            }
            if li == 0 {
                for (b, ones) in inputs.iter().enumerate() {
                    let row = &dz[b * out..(b + 1) * out];
                    for &j in ones.iter() {
                        let j = j as usize;
                        let gw = &mut g.weights[j * out..(j + 1) * out];
                        gw.iter_mut().zip(row).for_each(|(w, &d)| *w += d);
                    }
                }
                break;
            }
            let prev = &acts.post[li - 1];
            gemm(layer.inputs, batch, out, prev, true, &dz, false, T::one(), &mut g.weights);
            let mut dh = vec![T::zero(); batch * layer.inputs];
            gemm(batch, out, layer.inputs, &dz, false, &layer.weights, true, T::zero(), &mut dh);
            for (d, &z) in dh.iter_mut().zip(&acts.pre[li - 1]) {
                if z <= T::zero() {
                    *d = T::zero();
                }
            }
            dz = dh;
        }
    }

    /// Network output `f(x)`.
    pub fn forward(&self, x: &PartialAssignment) -> Result<Vec<T>> {
        self.check_input(x)?;
        let ones = sparse_input(x);
        let acts = self.forward_chunk(&[&ones]);
        Ok(acts.output().to_vec())
    }

    /// Outputs for many inputs, `xs.len() x m` row-major.
    pub fn forward_batch(&self, xs: &[&PartialAssignment], chunk: usize) -> Result<Vec<T>> {
        let chunk = chunk.max(1);
        let mut out = Vec::with_capacity(xs.len() * self.output_width());
        for part in xs.chunks(chunk) {
            let sparse = part
                .iter()
                .map(|x| {
                    self.check_input(x)?;
                    Ok(sparse_input(x))
                })
                .collect::<Result<Vec<Vec<u32>>>>()?;
            let inputs: Vec<&[u32]> = sparse.iter().map(Vec::as_slice).collect();
            out.extend_from_slice(self.forward_chunk(&inputs).output());
        }
        Ok(out)
    }

    /// Visits every parameter, layer by layer, weights before biases.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn params(&self) -> impl Iterator<Item = &T> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn cast<U: Real>(&self) -> Mlp<U> {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    weights: l.weights.iter().map(|&v| U::from_f64(v.as_f64())).collect(),
                    bias: l.bias.iter().map(|&v| U::from_f64(v.as_f64())).collect(),
                })
                .collect(),
        }
    }
}

impl<T: Real> Gradients<T> {
    pub fn params(&self) -> impl Iterator<Item = &T> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }
}
