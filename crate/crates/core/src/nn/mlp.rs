use super::activation::Activation;
use crate::error::{Error, Result};
use crate::numkit::{matmul, matmul_nt, matmul_tn, Matrix, RngState};

/// Affine map followed by an elementwise activation. `weights` is `in × out`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(Error::Shape {
                op: "DenseLayer::new",
                left: weights.shape(),
                right: (1, bias.len()),
            });
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.cols()
    }

    fn param_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::arg("an MLP needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Shape {
                    op: "Mlp::new",
                    left: pair[0].weights.shape(),
                    right: pair[1].weights.shape(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Mutable access to parameters. Changing a layer's shape breaks the chain
    /// invariant and makes later forward calls fail with a shape error.
    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// Parameter tensors in a fixed order: weights then bias, layer by layer.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.weights.data_mut());
            out.push(l.bias.as_mut_slice());
        }
        out
    }

    pub fn params(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            out.push(l.weights.data());
            out.push(l.bias.as_slice());
        }
        out
    }

    /// Plain evaluation without recording a tape.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let mut h = self.layers[0].forward_pre(x)?;
        activate_in_place(&mut h, self.layers[0].activation);
        for layer in &self.layers[1..] {
            h = layer.forward_pre(&h)?;
            activate_in_place(&mut h, layer.activation);
        }
        Ok(h)
    }
}

impl DenseLayer {
    fn forward_pre(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape {
                op: "mlp_forward",
                left: x.shape(),
                right: self.weights.shape(),
            });
        }
        let mut pre = matmul(x, &self.weights)?;
        for i in 0..pre.rows() {
            for (v, b) in pre.row_mut(i).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(pre)
    }
}

fn activate_in_place(m: &mut Matrix, act: Activation) {
    if act != Activation::Linear {
        m.data_mut().iter_mut().for_each(|v| *v = act.apply(*v));
    }
}

/// Cached values of one forward pass.
#[derive(Clone, Debug)]
pub struct GradTape {
    /// `acts[0]` is the input; `acts[i + 1]` is the output of layer `i`.
    acts: Vec<Matrix>,
    pre: Vec<Matrix>,
}

impl GradTape {
    pub fn batch_size(&self) -> usize {
        self.acts[0].rows()
    }

    pub fn output(&self) -> &Matrix {
        &self.acts[self.acts.len() - 1]
    }

    pub fn input(&self) -> &Matrix {
        &self.acts[0]
    }
}

#[derive(Clone, Debug)]
pub struct LayerGrads {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrads>,
    pub input: Matrix,
}

impl MlpGrads {
    /// Same ordering as [`Mlp::params`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            out.push(l.weights.data());
            out.push(l.bias.as_slice());
        }
        out
    }
}

pub fn mlp_forward(net: &Mlp, x: &Matrix) -> Result<(Matrix, GradTape)> {
    let mut acts = Vec::with_capacity(net.layers.len() + 1);
    let mut pre = Vec::with_capacity(net.layers.len());
    acts.push(x.clone());
    for layer in &net.layers {
        let z = layer.forward_pre(&acts[acts.len() - 1])?;
        let mut a = z.clone();
        activate_in_place(&mut a, layer.activation);
        pre.push(z);
        acts.push(a);
    }
    let y = acts[acts.len() - 1].clone();
    Ok((y, GradTape { acts, pre }))
}

pub fn mlp_backward(net: &Mlp, tape: &GradTape, dl_dy: &Matrix) -> Result<MlpGrads> {
    let depth = net.layers.len();
    if tape.pre.len() != depth {
        return Err(Error::Tape(format!(
            "tape has {} layers, network has {depth}",
            tape.pre.len()
        )));
    }
    let batch = tape.batch_size();
    for (i, layer) in net.layers.iter().enumerate() {
        if tape.acts[i].shape() != (batch, layer.input_dim())
            || tape.pre[i].shape() != (batch, layer.output_dim())
        {
            return Err(Error::Tape(format!(
                "layer {i} cached shape {:?} does not match weights {:?}",
                tape.pre[i].shape(),
                layer.weights.shape()
            )));
        }
    }
    if dl_dy.shape() != tape.output().shape() {
        return Err(Error::Shape {
            op: "mlp_backward",
            left: dl_dy.shape(),
            right: tape.output().shape(),
        });
    }

    let mut grads = Vec::with_capacity(depth);
    let mut upstream = dl_dy.clone();
    for i in (0..depth).rev() {
        let layer = &net.layers[i];
        let mut delta = upstream;
        if layer.activation != Activation::Linear {
            let pre = tape.pre[i].data();
            let out = tape.acts[i + 1].data();
            for (k, d) in delta.data_mut().iter_mut().enumerate() {
                *d *= layer.activation.grad(pre[k], out[k]);
            }
        }
        let dw = matmul_tn(&tape.acts[i], &delta)?;
        let mut db = vec![0.0; layer.output_dim()];
        for r in 0..delta.rows() {
            for (acc, v) in db.iter_mut().zip(delta.row(r)) {
                *acc += v;
            }
        }
        upstream = matmul_nt(&delta, &layer.weights)?;
        grads.push(LayerGrads {
            weights: dw,
            bias: db,
        });
    }
    grads.reverse();
    Ok(MlpGrads {
        layers: grads,
        input: upstream,
    })
}

/// LeCun-normal initialization: weights `N(0, 1/fan_in)`, zero biases.
/// `sizes` lists the widths `[in, h1, ..., out]`; `activations` has one entry per layer.
pub fn init_lecun(rng: &mut RngState, sizes: &[usize], activations: &[Activation]) -> Result<Mlp> {
    init_lecun_scaled(rng, sizes, activations, 1.0)
}

/// LeCun-normal with every weight multiplied by `gain`.
pub fn init_lecun_scaled(
    rng: &mut RngState,
    sizes: &[usize],
    activations: &[Activation],
    gain: f64,
) -> Result<Mlp> {
    if sizes.len() < 2 || activations.len() != sizes.len() - 1 {
        return Err(Error::arg(format!(
            "{} layer sizes need {} activations, got {}",
            sizes.len(),
            sizes.len().saturating_sub(1),
            activations.len()
        )));
    }
    if sizes.contains(&0) {
        return Err(Error::arg("layer sizes must be positive"));
    }
    let mut layers = Vec::with_capacity(activations.len());
    for (w, &act) in sizes.windows(2).zip(activations) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let std = gain * (1.0 / fan_in as f64).sqrt();
        let mut weights = Matrix::zeros(fan_in, fan_out);
        weights.data_mut().iter_mut().for_each(|v| *v = std * rng.normal());
        layers.push(DenseLayer::new(weights, vec![0.0; fan_out], act)?);
    }
    Mlp::new(layers)
}
