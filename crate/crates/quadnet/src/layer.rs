//! Fully-connected layers: the second-order (quadratic) unit and the
//! first-order baseline.
//!
//! A quadratic unit with input `x` computes the pre-activation
//!
//! ```text
//! net = (Σk wr[k]·x[k] + br) · (Σk wg[k]·x[k] + bg) + Σk wb[k]·x[k]² + c
//! ```
//!
//! followed by the sigmoid. Writing `sr` and `sg` for the two affine
//! factors, the partials of `net` are
//!
//! ```text
//! ∂net/∂wr[k] = x[k]·sg      ∂net/∂br = sg
//! ∂net/∂wg[k] = x[k]·sr      ∂net/∂bg = sr
//! ∂net/∂wb[k] = x[k]²        ∂net/∂c  = 1
//! ∂net/∂x[k]  = wr[k]·sg + wg[k]·sr + 2·wb[k]·x[k]
//! ```
//!
//! Note the cross-over: each factor's weight partial carries the *other*
//! factor as its coefficient (product rule), and the squared-input term
//! contributes only its own `k`-th summand to ∂net/∂x[k]. Two nearby but
//! wrong forms — keeping the same-branch bias inside the weight partial,
//! or summing the squared term over all inputs — are kept under
//! [`crate::gradcheck::miswired`] so the finite-difference suite
//! permanently rejects them.
//!
//! Layers receive `delta = dE/d net` from the caller; applying the
//! activation derivative and routing output-vs-hidden error signals is
//! the network's job. That keeps every derivative formula in exactly one
//! place.

use crate::error::{Error, Result};
use crate::numeric::{sigmoid, uniform_init, Matrix, RandomSource};

/// Parameters of one quadratic layer: three weight groups of shape
/// `(out_dim, in_dim)` and three per-unit scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadLayerParams {
    pub w_r: Matrix,
    pub w_g: Matrix,
    pub w_b: Matrix,
    pub b_r: Vec<f64>,
    pub b_g: Vec<f64>,
    pub c: Vec<f64>,
}

impl QuadLayerParams {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        QuadLayerParams {
            w_r: Matrix::zeros(out_dim, in_dim),
            w_g: Matrix::zeros(out_dim, in_dim),
            w_b: Matrix::zeros(out_dim, in_dim),
            b_r: vec![0.0; out_dim],
            b_g: vec![0.0; out_dim],
            c: vec![0.0; out_dim],
        }
    }

    /// Random initialization, drawing groups in the fixed order
    /// `w_r, w_g, w_b, b_r, b_g, c` (row-major within each matrix).
    pub fn init(
        in_dim: usize,
        out_dim: usize,
        rng: &mut RandomSource,
        half_range: f64,
    ) -> Self {
        let n = in_dim * out_dim;
        QuadLayerParams {
            w_r: Matrix::from_vec(out_dim, in_dim, uniform_init(rng, n, half_range)).unwrap(),
            w_g: Matrix::from_vec(out_dim, in_dim, uniform_init(rng, n, half_range)).unwrap(),
            w_b: Matrix::from_vec(out_dim, in_dim, uniform_init(rng, n, half_range)).unwrap(),
            b_r: uniform_init(rng, out_dim, half_range),
            b_g: uniform_init(rng, out_dim, half_range),
            c: uniform_init(rng, out_dim, half_range),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w_r.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.w_r.rows()
    }
}

/// Everything the backward pass needs from a quadratic forward pass.
///
/// `s_r` and `s_g` are the two affine factors of the product term;
/// `net[j] = s_r[j]·s_g[j] + Σk w_b[j,k]·input[k]² + c[j]` and
/// `output[j] = sigmoid(net[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub s_r: Vec<f64>,
    pub s_g: Vec<f64>,
    pub net: Vec<f64>,
    pub output: Vec<f64>,
}

/// Loss gradients for one quadratic layer, shaped like its parameters,
/// plus the gradient with respect to the layer input.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadLayerGrads {
    pub w_r: Matrix,
    pub w_g: Matrix,
    pub w_b: Matrix,
    pub b_r: Vec<f64>,
    pub b_g: Vec<f64>,
    pub c: Vec<f64>,
    pub d_input: Vec<f64>,
}

fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}

/// Forward pass of a quadratic layer.
pub fn quad_forward(params: &QuadLayerParams, input: &[f64]) -> Result<ForwardCache> {
    let (p, q) = (params.in_dim(), params.out_dim());
    check_len("quad_forward input", p, input.len())?;

    let mut s_r = vec![0.0; q];
    let mut s_g = vec![0.0; q];
    let mut net = vec![0.0; q];
    let mut output = vec![0.0; q];
    for j in 0..q {
        let mut r = params.b_r[j];
        let mut g = params.b_g[j];
        let mut b = 0.0;
        for (k, &x) in input.iter().enumerate() {
            r += params.w_r[(j, k)] * x;
            g += params.w_g[(j, k)] * x;
            b += params.w_b[(j, k)] * x * x;
        }
        s_r[j] = r;
        s_g[j] = g;
        net[j] = r * g + b + params.c[j];
        output[j] = sigmoid(net[j]);
    }
    Ok(ForwardCache {
        input: input.to_vec(),
        s_r,
        s_g,
        net,
        output,
    })
}

/// Backward pass of a quadratic layer. `delta[j]` is `dE/d net[j]`,
/// already combined with the activation derivative by the caller.
pub fn quad_param_grads(
    cache: &ForwardCache,
    params: &QuadLayerParams,
    delta: &[f64],
) -> Result<QuadLayerGrads> {
    let (p, q) = (params.in_dim(), params.out_dim());
    check_len("quad_param_grads delta", q, delta.len())?;
    check_len("quad_param_grads cache", p, cache.input.len())?;

    let mut g = QuadLayerGrads {
        w_r: Matrix::zeros(q, p),
        w_g: Matrix::zeros(q, p),
        w_b: Matrix::zeros(q, p),
        b_r: vec![0.0; q],
        b_g: vec![0.0; q],
        c: vec![0.0; q],
        d_input: vec![0.0; p],
    };
    for j in 0..q {
        let d = delta[j];
        let (sr, sg) = (cache.s_r[j], cache.s_g[j]);
        g.b_r[j] = d * sg;
        g.b_g[j] = d * sr;
        g.c[j] = d;
        for (k, &x) in cache.input.iter().enumerate() {
            g.w_r[(j, k)] = d * x * sg;
            g.w_g[(j, k)] = d * x * sr;
            g.w_b[(j, k)] = d * x * x;
            g.d_input[k] +=
                d * (params.w_r[(j, k)] * sg + params.w_g[(j, k)] * sr
                    + 2.0 * params.w_b[(j, k)] * x);
        }
    }
    Ok(g)
}

/// Parameters of a conventional first-order layer: `net = W·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderLayerParams {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl FirstOrderLayerParams {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        FirstOrderLayerParams {
            w: Matrix::zeros(out_dim, in_dim),
            b: vec![0.0; out_dim],
        }
    }

    /// Random initialization; draws `w` (row-major) then `b`.
    pub fn init(
        in_dim: usize,
        out_dim: usize,
        rng: &mut RandomSource,
        half_range: f64,
    ) -> Self {
        FirstOrderLayerParams {
            w: Matrix::from_vec(out_dim, in_dim, uniform_init(rng, in_dim * out_dim, half_range))
                .unwrap(),
            b: uniform_init(rng, out_dim, half_range),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderCache {
    pub input: Vec<f64>,
    pub net: Vec<f64>,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderLayerGrads {
    pub w: Matrix,
    pub b: Vec<f64>,
    pub d_input: Vec<f64>,
}

pub fn first_order_forward(
    params: &FirstOrderLayerParams,
    input: &[f64],
) -> Result<FirstOrderCache> {
    let (p, q) = (params.in_dim(), params.out_dim());
    check_len("first_order_forward input", p, input.len())?;

    let mut net = vec![0.0; q];
    let mut output = vec![0.0; q];
    for j in 0..q {
        let mut z = params.b[j];
        for (k, &x) in input.iter().enumerate() {
            z += params.w[(j, k)] * x;
        }
        net[j] = z;
        output[j] = sigmoid(z);
    }
    Ok(FirstOrderCache {
        input: input.to_vec(),
        net,
        output,
    })
}

pub fn first_order_param_grads(
    cache: &FirstOrderCache,
    params: &FirstOrderLayerParams,
    delta: &[f64],
) -> Result<FirstOrderLayerGrads> {
    let (p, q) = (params.in_dim(), params.out_dim());
    check_len("first_order_param_grads delta", q, delta.len())?;
    check_len("first_order_param_grads cache", p, cache.input.len())?;

    let mut g = FirstOrderLayerGrads {
        w: Matrix::zeros(q, p),
        b: vec![0.0; q],
        d_input: vec![0.0; p],
    };
    for j in 0..q {
        let d = delta[j];
        g.b[j] = d;
        for (k, &x) in cache.input.iter().enumerate() {
            g.w[(j, k)] = d * x;
            g.d_input[k] += d * params.w[(j, k)];
        }
    }
    Ok(g)
}
