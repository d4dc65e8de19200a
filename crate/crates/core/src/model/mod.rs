//! K fully-connected autoencoders plus the mixture-assignment network (MAN)
//! that maps their concatenated latents to soft cluster assignments.

mod checkpoint;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    affine_backward, affine_forward, affine_param_grads, softmax_backward, softmax_forward, Activation, LayerParams,
    SeededRng, Tensor,
};
use crate::objective::ReconstructionKind;
use crate::scalar::Scalar;

fn default_encoder_hidden() -> Vec<usize> {
    vec![256, 64]
}

fn default_man_hidden() -> Vec<usize> {
    vec![64]
}

fn default_activation() -> Activation {
    Activation::Relu
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub latent_dim: usize,
    pub num_autoencoders: usize,
    /// Encoder widths between input and latent; the decoder mirrors them.
    #[serde(default = "default_encoder_hidden")]
    pub encoder_hidden: Vec<usize>,
    #[serde(default = "default_man_hidden")]
    pub man_hidden: Vec<usize>,
    /// Hidden-layer nonlinearity for every network.
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default)]
    pub reconstruction_loss: ReconstructionKind,
}

impl ModelConfig {
    /// Default architecture: n→256→64→d encoders, mirrored decoders,
    /// (d·K)→64→K assignment network.
    pub fn new(input_dim: usize, latent_dim: usize, num_autoencoders: usize) -> Self {
        ModelConfig {
            input_dim,
            latent_dim,
            num_autoencoders,
            encoder_hidden: default_encoder_hidden(),
            man_hidden: default_man_hidden(),
            activation: default_activation(),
            reconstruction_loss: ReconstructionKind::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.latent_dim == 0 {
            return Err(Error::Config("input_dim and latent_dim must be positive".into()));
        }
        if self.latent_dim >= self.input_dim {
            return Err(Error::Config(format!(
                "latent_dim ({}) must be smaller than input_dim ({})",
                self.latent_dim, self.input_dim
            )));
        }
        if self.num_autoencoders < 2 {
            return Err(Error::Config(format!("num_autoencoders must be at least 2, got {}", self.num_autoencoders)));
        }
        if self.encoder_hidden.iter().chain(&self.man_hidden).any(|&w| w == 0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        Ok(())
    }

    pub fn encoder_widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim];
        w.extend(&self.encoder_hidden);
        w.push(self.latent_dim);
        w
    }

    pub fn decoder_widths(&self) -> Vec<usize> {
        let mut w = self.encoder_widths();
        w.reverse();
        w
    }

    pub fn man_widths(&self) -> Vec<usize> {
        let mut w = vec![self.latent_dim * self.num_autoencoders];
        w.extend(&self.man_hidden);
        w.push(self.num_autoencoders);
        w
    }

    /// The latent layer is linear.
    pub fn encoder_activations(&self) -> Vec<Activation> {
        stack_activations(self.activation, self.encoder_hidden.len() + 1, Activation::Linear)
    }

    /// Sigmoid output under BCE so reconstructions lie in (0, 1).
    pub fn decoder_activations(&self) -> Vec<Activation> {
        let last = match self.reconstruction_loss {
            ReconstructionKind::Bce => Activation::Sigmoid,
            ReconstructionKind::Mse => Activation::Linear,
        };
        stack_activations(self.activation, self.encoder_hidden.len() + 1, last)
    }

    /// Ends in linear logits; softmax is applied separately.
    pub fn man_activations(&self) -> Vec<Activation> {
        stack_activations(self.activation, self.man_hidden.len() + 1, Activation::Linear)
    }
}

fn stack_activations(hidden: Activation, layers: usize, last: Activation) -> Vec<Activation> {
    let mut acts = vec![hidden; layers - 1];
    acts.push(last);
    acts
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderParams<T> {
    pub encoder: Vec<LayerParams<T>>,
    pub decoder: Vec<LayerParams<T>>,
}

/// All trainable parameters: K autoencoder stacks, then the MAN.
///
/// The same type doubles as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct MixaeParams<T> {
    pub autoencoders: Vec<AutoencoderParams<T>>,
    pub man: Vec<LayerParams<T>>,
}

fn stack<T: Scalar>(widths: &[usize], mut make: impl FnMut(usize, usize) -> LayerParams<T>) -> Vec<LayerParams<T>> {
    widths.windows(2).map(|w| make(w[0], w[1])).collect()
}

impl<T: Scalar> MixaeParams<T> {
    /// Glorot initialization. Autoencoder `k` draws from sub-stream `k` and
    /// the MAN from sub-stream `K`, so stacks are independent of each other.
    pub fn init(config: &ModelConfig, rng: &SeededRng) -> Result<Self> {
        config.validate()?;
        let k = config.num_autoencoders;
        let autoencoders = (0..k)
            .map(|i| {
                let mut r = rng.derive(i as u64);
                AutoencoderParams {
                    encoder: stack(&config.encoder_widths(), |a, b| LayerParams::glorot(a, b, &mut r)),
                    decoder: stack(&config.decoder_widths(), |a, b| LayerParams::glorot(a, b, &mut r)),
                }
            })
            .collect();
        let mut r = rng.derive(k as u64);
        let man = stack(&config.man_widths(), |a, b| LayerParams::glorot(a, b, &mut r));
        Ok(MixaeParams { autoencoders, man })
    }

    pub fn zeros(config: &ModelConfig) -> Self {
        let ae = AutoencoderParams {
            encoder: stack(&config.encoder_widths(), LayerParams::zeros),
            decoder: stack(&config.decoder_widths(), LayerParams::zeros),
        };
        MixaeParams {
            autoencoders: vec![ae; config.num_autoencoders],
            man: stack(&config.man_widths(), LayerParams::zeros),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |ls: &[LayerParams<T>]| ls.iter().map(|l| l.zeros_like()).collect();
        MixaeParams {
            autoencoders: self
                .autoencoders
                .iter()
                .map(|ae| AutoencoderParams {
                    encoder: z(&ae.encoder),
                    decoder: z(&ae.decoder),
                })
                .collect(),
            man: z(&self.man),
        }
    }

    fn layers(&self) -> impl Iterator<Item = &LayerParams<T>> {
        self.autoencoders
            .iter()
            .flat_map(|ae| ae.encoder.iter().chain(&ae.decoder))
            .chain(&self.man)
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut LayerParams<T>> {
        self.autoencoders
            .iter_mut()
            .flat_map(|ae| ae.encoder.iter_mut().chain(ae.decoder.iter_mut()))
            .chain(self.man.iter_mut())
    }

    /// Every tensor in canonical order: per autoencoder the encoder then the
    /// decoder layers, then the MAN; weight before bias within a layer.
    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        self.layers().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers_mut().flat_map(|l| [&mut l.weight, &mut l.bias]).collect()
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn flatten(&self) -> Vec<T> {
        self.tensors().iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    pub fn assign_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::dim("assign_flat", &[flat.len()], &[self.num_params()]));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    /// Checks stack count and every layer shape against `config`.
    pub fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let expected = MixaeParams::<T>::zeros(config);
        if self.autoencoders.len() != config.num_autoencoders {
            return Err(Error::dim(
                "MixaeParams",
                &[self.autoencoders.len()],
                &[config.num_autoencoders],
            ));
        }
        let mine = self.tensors();
        let theirs = expected.tensors();
        if mine.len() != theirs.len() {
            return Err(Error::dim("MixaeParams", &[mine.len()], &[theirs.len()]));
        }
        for (a, b) in mine.iter().zip(&theirs) {
            if a.shape() != b.shape() {
                return Err(Error::dim("MixaeParams", a.shape(), b.shape()));
            }
        }
        Ok(())
    }
}

/// Post-activation outputs of every layer in a stack (the stack input is
/// kept separately).
type StackOutputs<T> = Vec<Tensor<T>>;

fn run_stack<T: Scalar>(
    layers: &[LayerParams<T>],
    acts: &[Activation],
    input: &Tensor<T>,
) -> Result<StackOutputs<T>> {
    let mut outputs: Vec<Tensor<T>> = Vec::with_capacity(layers.len());
    for (l, (layer, act)) in layers.iter().zip(acts).enumerate() {
        let x = if l == 0 { input } else { &outputs[l - 1] };
        let mut y = affine_forward(x, layer)?;
        act.forward_in_place(&mut y);
        outputs.push(y);
    }
    Ok(outputs)
}

fn backprop_stack<T: Scalar>(
    layers: &[LayerParams<T>],
    acts: &[Activation],
    input: &Tensor<T>,
    outputs: &[Tensor<T>],
    grad_out: &Tensor<T>,
    need_input_grad: bool,
) -> Result<(Option<Tensor<T>>, Vec<LayerParams<T>>)> {
    let mut grads: Vec<Option<LayerParams<T>>> = vec![None; layers.len()];
    let mut upstream = acts[layers.len() - 1].backward(&outputs[layers.len() - 1], grad_out)?;
    let mut input_grad = None;
    for l in (0..layers.len()).rev() {
        let x = if l == 0 { input } else { &outputs[l - 1] };
        if l == 0 && !need_input_grad {
            grads[l] = Some(affine_param_grads(&upstream, x, &layers[l])?);
            break;
        }
        let (gx, gp) = affine_backward(&upstream, x, &layers[l])?;
        grads[l] = Some(gp);
        if l == 0 {
            input_grad = Some(gx);
        } else {
            upstream = acts[l - 1].backward(&outputs[l - 1], &gx)?;
        }
    }
    Ok((input_grad, grads.into_iter().map(|g| g.expect("every layer visited")).collect()))
}

/// Activations retained by [`Mixae::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    input: Tensor<T>,
    encoders: Vec<StackOutputs<T>>,
    decoders: Vec<StackOutputs<T>>,
    man: StackOutputs<T>,
}

#[derive(Debug, Clone)]
pub struct ForwardOutput<T> {
    /// One `[B × n]` reconstruction per autoencoder.
    pub reconstructions: Vec<Tensor<T>>,
    /// `[B × dK]`, latent blocks in autoencoder order.
    pub latent_concat: Tensor<T>,
    /// `[B × K]` softmax output of the MAN.
    pub assignments: Tensor<T>,
    cache: Option<ForwardCache<T>>,
}

impl<T: Scalar> ForwardOutput<T> {
    pub fn has_cache(&self) -> bool {
        self.cache.is_some()
    }
}

/// Upstream gradients of the objective with respect to the model outputs.
#[derive(Debug, Clone)]
pub struct OutputGrads<T> {
    pub assignments: Tensor<T>,
    pub reconstructions: Vec<Tensor<T>>,
}

/// A model: configuration plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixae<T> {
    config: ModelConfig,
    params: MixaeParams<T>,
}

impl<T: Scalar> Mixae<T> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let params = MixaeParams::init(&config, &SeededRng::new(seed))?;
        Ok(Mixae { config, params })
    }

    pub fn from_parts(config: ModelConfig, params: MixaeParams<T>) -> Result<Self> {
        config.validate()?;
        params.check_shapes(&config)?;
        Ok(Mixae { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &MixaeParams<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut MixaeParams<T> {
        &mut self.params
    }

    pub fn into_parts(self) -> (ModelConfig, MixaeParams<T>) {
        (self.config, self.params)
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k >= self.config.num_autoencoders {
            return Err(Error::Usage(format!(
                "autoencoder index {k} out of range for K = {}",
                self.config.num_autoencoders
            )));
        }
        Ok(())
    }

    fn check_input(&self, x: &Tensor<T>, op: &'static str) -> Result<()> {
        x.ensure_matrix(op)?;
        if x.cols() != self.config.input_dim {
            return Err(Error::dim(op, x.shape(), &[x.rows(), self.config.input_dim]));
        }
        Ok(())
    }

    /// Latent `[B × d]` of autoencoder `k`.
    pub fn encode(&self, x: &Tensor<T>, k: usize) -> Result<Tensor<T>> {
        self.check_k(k)?;
        self.check_input(x, "encode")?;
        let mut outs = run_stack(&self.params.autoencoders[k].encoder, &self.config.encoder_activations(), x)?;
        Ok(outs.pop().expect("non-empty stack"))
    }

    /// Reconstruction `[B × n]` of autoencoder `k` from its latent.
    pub fn decode(&self, z: &Tensor<T>, k: usize) -> Result<Tensor<T>> {
        self.check_k(k)?;
        z.ensure_matrix("decode")?;
        if z.cols() != self.config.latent_dim {
            return Err(Error::dim("decode", z.shape(), &[z.rows(), self.config.latent_dim]));
        }
        let mut outs = run_stack(&self.params.autoencoders[k].decoder, &self.config.decoder_activations(), z)?;
        Ok(outs.pop().expect("non-empty stack"))
    }

    /// Full forward pass retaining activations for [`Mixae::backward`].
    pub fn forward(&self, x: &Tensor<T>) -> Result<ForwardOutput<T>> {
        self.forward_impl(x, true)
    }

    /// Forward pass without the backward cache.
    pub fn infer(&self, x: &Tensor<T>) -> Result<ForwardOutput<T>> {
        self.forward_impl(x, false)
    }

    fn forward_impl(&self, x: &Tensor<T>, keep: bool) -> Result<ForwardOutput<T>> {
        self.check_input(x, "forward")?;
        let enc_acts = self.config.encoder_activations();
        let dec_acts = self.config.decoder_activations();
        let mut encoders = Vec::with_capacity(self.config.num_autoencoders);
        let mut decoders = Vec::with_capacity(self.config.num_autoencoders);
        for ae in &self.params.autoencoders {
            let enc = run_stack(&ae.encoder, &enc_acts, x)?;
            let dec = run_stack(&ae.decoder, &dec_acts, enc.last().expect("non-empty"))?;
            encoders.push(enc);
            decoders.push(dec);
        }
        let latents: Vec<&Tensor<T>> = encoders.iter().map(|e| e.last().expect("non-empty")).collect();
        let latent_concat = Tensor::hcat(&latents)?;
        let man = run_stack(&self.params.man, &self.config.man_activations(), &latent_concat)?;
        let assignments = softmax_forward(man.last().expect("non-empty"))?;
        let reconstructions = decoders.iter().map(|d| d.last().expect("non-empty").clone()).collect();
        let cache = keep.then(|| ForwardCache {
            input: x.clone(),
            encoders,
            decoders,
            man,
        });
        Ok(ForwardOutput {
            reconstructions,
            latent_concat,
            assignments,
            cache,
        })
    }

    /// Exact parameter gradients given the objective's gradients with respect
    /// to the assignments and the reconstructions. The assignment gradient
    /// reaches every encoder through the MAN; each reconstruction gradient
    /// reaches its own decoder and encoder.
    pub fn backward(&self, out: &ForwardOutput<T>, grads: &OutputGrads<T>) -> Result<MixaeParams<T>> {
        let cache = out
            .cache
            .as_ref()
            .ok_or_else(|| Error::Usage("backward needs the output of `forward`, not `infer`".into()))?;
        let k_count = self.config.num_autoencoders;
        if grads.reconstructions.len() != k_count {
            return Err(Error::dim("backward", &[grads.reconstructions.len()], &[k_count]));
        }
        let d_logits = softmax_backward(&out.assignments, &grads.assignments)?;
        let (d_concat, man_grads) = backprop_stack(
            &self.params.man,
            &self.config.man_activations(),
            &out.latent_concat,
            &cache.man,
            &d_logits,
            true,
        )?;
        let d_latents = d_concat.expect("requested").split_cols(self.config.latent_dim)?;
        let enc_acts = self.config.encoder_activations();
        let dec_acts = self.config.decoder_activations();
        let mut autoencoders = Vec::with_capacity(k_count);
        for (k, ae) in self.params.autoencoders.iter().enumerate() {
            let z = cache.encoders[k].last().expect("non-empty");
            let (d_z, decoder) =
                backprop_stack(&ae.decoder, &dec_acts, z, &cache.decoders[k], &grads.reconstructions[k], true)?;
            let mut d_z = d_z.expect("requested");
            d_z.add_assign(&d_latents[k])?;
            let (_, encoder) = backprop_stack(&ae.encoder, &enc_acts, &cache.input, &cache.encoders[k], &d_z, false)?;
            autoencoders.push(AutoencoderParams { encoder, decoder });
        }
        Ok(MixaeParams {
            autoencoders,
            man: man_grads,
        })
    }
}
