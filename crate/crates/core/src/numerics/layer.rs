use crate::error::{Error, Result};
use crate::numerics::rng::SeededRng;
use crate::numerics::tensor::{gemm, Tensor};
use crate::scalar::Scalar;

/// Weights `[out × in]` and bias `[out]` of one fully-connected layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> LayerParams<T> {
    pub fn new(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        weight.ensure_matrix("LayerParams::new")?;
        if bias.shape() != [weight.rows()] {
            return Err(Error::dim("LayerParams::new", weight.shape(), bias.shape()));
        }
        Ok(LayerParams { weight, bias })
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        LayerParams {
            weight: Tensor::zeros(&[fan_out, fan_in]),
            bias: Tensor::zeros(&[fan_out]),
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot(fan_in: usize, fan_out: usize, rng: &mut SeededRng) -> Self {
        let limit = T::of((6.0 / (fan_in + fan_out) as f64).sqrt());
        let data = (0..fan_in * fan_out).map(|_| rng.uniform(-limit, limit)).collect();
        LayerParams {
            weight: Tensor::new(vec![fan_out, fan_in], data).expect("consistent shape"),
            bias: Tensor::zeros(&[fan_out]),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.cols()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.rows()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.fan_in(), self.fan_out())
    }
}

/// `output[b] = weight · input[b] + bias` for every batch row.
pub fn affine_forward<T: Scalar>(input: &Tensor<T>, params: &LayerParams<T>) -> Result<Tensor<T>> {
    input.ensure_matrix("affine_forward")?;
    if input.cols() != params.fan_in() {
        return Err(Error::dim("affine_forward", input.shape(), params.weight.shape()));
    }
    let mut out = gemm(input, false, &params.weight, true)?;
    let bias = params.bias.data();
    for b in 0..out.rows() {
        for (o, &bv) in out.row_mut(b).iter_mut().zip(bias) {
            *o += bv;
        }
    }
    Ok(out)
}

/// Exact gradients of a scalar loss through an affine layer given the
/// upstream gradient and the input cached from the forward pass.
pub fn affine_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    cached_input: &Tensor<T>,
    params: &LayerParams<T>,
) -> Result<(Tensor<T>, LayerParams<T>)> {
    let grads = affine_param_grads(grad_out, cached_input, params)?;
    let grad_input = gemm(grad_out, false, &params.weight, false)?;
    Ok((grad_input, grads))
}

/// The parameter half of [`affine_backward`]; used for first layers where
/// the gradient with respect to the data is never needed.
pub fn affine_param_grads<T: Scalar>(
    grad_out: &Tensor<T>,
    cached_input: &Tensor<T>,
    params: &LayerParams<T>,
) -> Result<LayerParams<T>> {
    grad_out.ensure_matrix("affine_backward")?;
    cached_input.ensure_matrix("affine_backward")?;
    if grad_out.cols() != params.fan_out() || grad_out.rows() != cached_input.rows() {
        return Err(Error::dim("affine_backward", grad_out.shape(), cached_input.shape()));
    }
    if cached_input.cols() != params.fan_in() {
        return Err(Error::dim("affine_backward", cached_input.shape(), params.weight.shape()));
    }
    let weight = gemm(grad_out, true, cached_input, false)?;
    let bias = grad_out.column_sums();
    Ok(LayerParams { weight, bias })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(w: &[[f64; 2]; 2], b: [f64; 2]) -> LayerParams<f64> {
        LayerParams::new(Tensor::from_rows(w).unwrap(), Tensor::vector(b.to_vec())).unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let p = layer(&[[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]);
        let x = Tensor::from_rows(&[[1.0, 2.0]]).unwrap();
        assert_eq!(affine_forward(&x, &p).unwrap().data(), &[1.0, 2.0]);
    }

    #[test]
    fn diagonal_layer_hand_arithmetic() {
        let p = layer(&[[2.0, 0.0], [0.0, 3.0]], [1.0, 1.0]);
        let x = Tensor::from_rows(&[[1.0, 1.0]]).unwrap();
        assert_eq!(affine_forward(&x, &p).unwrap().data(), &[3.0, 4.0]);
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let p = LayerParams::<f64>::zeros(3, 2);
        let x = Tensor::zeros(&[1, 4]);
        let err = affine_forward(&x, &p).unwrap_err().to_string();
        assert!(err.contains("[1, 4]") && err.contains("[2, 3]"), "{err}");
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = SeededRng::new(1);
        let p = LayerParams::<f64>::glorot(3, 2, &mut rng);
        let x = Tensor::filled(&[4, 3], 0.5);
        let (gi, gp) = affine_backward(&Tensor::zeros(&[4, 2]), &x, &p).unwrap();
        assert!(gi.data().iter().chain(gp.weight.data()).chain(gp.bias.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_chain_rule() {
        // y = w x + b, L = y^2 at w=3, b=1, x=2 => y=7, dL/dy=14
        let p = LayerParams::new(Tensor::from_rows(&[[3.0]]).unwrap(), Tensor::vector(vec![1.0])).unwrap();
        let x = Tensor::from_rows(&[[2.0]]).unwrap();
        let y = affine_forward(&x, &p).unwrap();
        assert_eq!(y.data(), &[7.0]);
        let g = Tensor::from_rows(&[[14.0]]).unwrap();
        let (gi, gp) = affine_backward(&g, &x, &p).unwrap();
        assert_eq!(gi.data(), &[42.0]);
        assert_eq!(gp.weight.data(), &[28.0]);
        assert_eq!(gp.bias.data(), &[14.0]);
    }

    #[test]
    fn glorot_respects_limit() {
        let mut rng = SeededRng::new(9);
        let p = LayerParams::<f64>::glorot(10, 6, &mut rng);
        let limit = (6.0f64 / 16.0).sqrt();
        assert!(p.weight.data().iter().all(|w| w.abs() <= limit));
        assert!(p.bias.data().iter().all(|&b| b == 0.0));
    }
}
