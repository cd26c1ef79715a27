//! Batched multilayer perceptron with reverse-mode gradients.
//!
//! Parameters live in one flat vector, layer by layer: the weight matrix
//! (`out × in`, row-major) followed by the bias. Batches are row-major
//! `batch × width` slices.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Elu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Elu => "elu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Elu => {
                if y > 0.0 {
                    1.0
                } else {
                    y + 1.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Layer widths and hidden activation; the output layer is linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
    pub activation: Activation,
}

impl MlpSpec {
    pub fn new(input: usize, hidden: &[usize], output: usize) -> Self {
        Self {
            input,
            hidden: hidden.to_vec(),
            output,
            activation: Activation::Elu,
        }
    }

    /// All widths from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input);
        w.extend_from_slice(&self.hidden);
        w.push(self.output);
        w
    }

    pub fn num_layers(&self) -> usize {
        self.hidden.len() + 1
    }

    /// `(weight offset, bias offset, in, out)` of each layer.
    pub fn layer_offsets(&self) -> Vec<(usize, usize, usize, usize)> {
        let w = self.widths();
        let mut off = 0;
        let mut out = Vec::with_capacity(self.num_layers());
        for l in 0..self.num_layers() {
            let (i, o) = (w[l], w[l + 1]);
            out.push((off, off + i * o, i, o));
            off += i * o + o;
        }
        out
    }

    pub fn num_params(&self) -> usize {
        let w = self.widths();
        w.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }

    /// Canonical text description used for checkpoint compatibility hashes.
    pub fn describe(&self) -> String {
        let widths: Vec<String> = self.widths().iter().map(|w| w.to_string()).collect();
        format!("mlp[{}]/{}", widths.join("-"), self.activation.name())
    }

    /// Uniform `±1/sqrt(fan_in)` weights and biases; the output layer is
    /// scaled by `output_gain`.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R, output_gain: f64) -> Vec<f64> {
        let mut p = vec![0.0; self.num_params()];
        let layers = self.layer_offsets();
        let last = layers.len() - 1;
        for (l, &(wo, bo, i, o)) in layers.iter().enumerate() {
            let bound = 1.0 / (i as f64).sqrt();
            let gain = if l == last { output_gain } else { 1.0 };
            for v in &mut p[wo..wo + i * o] {
                *v = gain * bound * (2.0 * rng.random::<f64>() - 1.0);
            }
            for v in &mut p[bo..bo + o] {
                *v = if l == last {
                    0.0
                } else {
                    bound * (2.0 * rng.random::<f64>() - 1.0)
                };
            }
        }
        p
    }
}

/// Layer inputs saved by [`forward`]; the last entry is the network output.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    pub batch: usize,
    pub activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

/// `C[m×n] = A[m×k]·B[k×n] + beta·C` with explicit strides; `C` is row-major.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    beta: f64,
    c: &mut [f64],
    rsc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    debug_assert!(c.len() >= (m - 1) * rsc + n);
    // SAFETY: the strides and dimensions describe regions inside the
    // borrowed slices (checked by the callers' shape assertions) and `c`
    // does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            1,
        );
    }
}

/// Forward pass over a batch, keeping what the backward pass needs.
pub fn forward(spec: &MlpSpec, params: &[f64], input: &[f64], batch: usize) -> ForwardCache {
    assert_eq!(params.len(), spec.num_params(), "parameter count mismatch");
    assert_eq!(input.len(), batch * spec.input, "input width mismatch");
    let layers = spec.layer_offsets();
    let last = layers.len() - 1;
    let mut acts = Vec::with_capacity(layers.len() + 1);
    acts.push(input.to_vec());
    for (l, &(wo, bo, i, o)) in layers.iter().enumerate() {
        let bias = &params[bo..bo + o];
        let mut z = Vec::with_capacity(batch * o);
        for _ in 0..batch {
            z.extend_from_slice(bias);
        }
        let x = &acts[l];
        gemm(
            batch,
            i,
            o,
            x,
            i,
            1,
            &params[wo..wo + i * o],
            1,
            i,
            1.0,
            &mut z,
            o,
        );
        if l != last {
            let act = spec.activation;
            for v in &mut z {
                *v = act.apply(*v);
            }
        }
        acts.push(z);
    }
    ForwardCache {
        batch,
        activations: acts,
    }
}

/// Output rows only.
pub fn predict(spec: &MlpSpec, params: &[f64], input: &[f64], batch: usize) -> Vec<f64> {
    forward(spec, params, input, batch)
        .activations
        .pop()
        .unwrap_or_default()
}

/// Backward pass: accumulates `∂L/∂params` into `grad` and returns `∂L/∂input`
/// when `want_input_grad` is set.
pub fn backward(
    spec: &MlpSpec,
    params: &[f64],
    cache: &ForwardCache,
    grad_output: &[f64],
    grad: &mut [f64],
    want_input_grad: bool,
) -> Option<Vec<f64>> {
    let batch = cache.batch;
    assert_eq!(grad.len(), params.len());
    assert_eq!(
        grad_output.len(),
        batch * spec.output,
        "output gradient width mismatch"
    );
    let layers = spec.layer_offsets();
    let mut dz = grad_output.to_vec();
    for l in (0..layers.len()).rev() {
        let (wo, bo, i, o) = layers[l];
        let x = &cache.activations[l];
        // dW += dZᵀ X
        gemm(
            o,
            batch,
            i,
            &dz,
            1,
            o,
            x,
            i,
            1,
            1.0,
            &mut grad[wo..wo + i * o],
            i,
        );
        let gb = &mut grad[bo..bo + o];
        for row in dz.chunks_exact(o) {
            for (g, d) in gb.iter_mut().zip(row) {
                *g += d;
            }
        }
        if l == 0 && !want_input_grad {
            return None;
        }
        let mut dx = vec![0.0; batch * i];
        gemm(
            batch,
            o,
            i,
            &dz,
            o,
            1,
            &params[wo..wo + i * o],
            i,
            1,
            0.0,
            &mut dx,
            i,
        );
        if l > 0 {
            let act = spec.activation;
            for (d, y) in dx.iter_mut().zip(x) {
                *d *= act.derivative_from_output(*y);
            }
        }
        dz = dx;
    }
    Some(dz)
}
