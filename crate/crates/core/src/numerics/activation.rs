use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Activation::Linear => v,
            Activation::Relu => v.max(T::zero()),
            Activation::Tanh => v.tanh(),
            Activation::Sigmoid => sigmoid(v),
        }
    }

    /// Derivative expressed through the activation's own output.
    pub fn derivative_from_output<T: Scalar>(self, out: T) -> T {
        match self {
            Activation::Linear => T::one(),
            Activation::Relu => {
                if out > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - out * out,
            Activation::Sigmoid => out * (T::one() - out),
        }
    }

    pub fn forward<T: Scalar>(self, input: &Tensor<T>) -> Tensor<T> {
        match self {
            Activation::Linear => input.clone(),
            _ => input.map(|v| self.apply(v)),
        }
    }

    pub fn forward_in_place<T: Scalar>(self, t: &mut Tensor<T>) {
        if self != Activation::Linear {
            t.data_mut().iter_mut().for_each(|v| *v = self.apply(*v));
        }
    }

    /// Upstream gradient times the elementwise derivative, evaluated at the
    /// cached forward output.
    pub fn backward<T: Scalar>(self, output: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        if self == Activation::Linear {
            if output.shape() != grad_out.shape() {
                return Err(Error::dim("activation_backward", output.shape(), grad_out.shape()));
            }
            return Ok(grad_out.clone());
        }
        output.zip_map(grad_out, "activation_backward", |o, g| g * self.derivative_from_output(o))
    }
}

fn sigmoid<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "identity" => Ok(Activation::Linear),
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::Config(format!("unsupported activation `{other}`"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Activation::Linear => "linear",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        };
        f.write_str(s)
    }
}
