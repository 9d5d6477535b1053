//! Multilayer feedforward networks over the layer kinds in this crate,
//! with half-squared-error loss, full backpropagation, steepest-descent
//! training, and the radial curriculum schedule.
//!
//! The delta convention: every neuron layer receives `dE/d net` and the
//! network owns the chain across layers — output-layer error is
//! `prediction − target`, hidden-layer error accumulates through each
//! downstream layer's input gradient, and the sigmoid derivative
//! `o·(1−o)` is applied at each neuron-layer boundary. Mean pooling has
//! no activation and just redistributes deltas. All neuron layers use
//! the logistic activation; the final layer is always a neuron layer, so
//! predictions land in (0, 1).

use std::borrow::Cow;
use std::fmt;

use crate::conv::{
    conv2_backward, conv2_forward, first_order_conv_backward, first_order_conv_forward, flatten,
    pool_backward, pool_forward, FirstOrderConvCache, FirstOrderConvGrads,
    FirstOrderConvLayerParams, ImageGrid, PoolCache, PoolSpec, QuadConvCache, QuadConvGrads,
    QuadConvLayerParams,
};
use crate::datasets::{LabeledSample, LabeledSet};
use crate::error::{Error, Result};
use crate::layer::{
    first_order_forward, first_order_param_grads, quad_forward, quad_param_grads,
    FirstOrderCache, FirstOrderLayerGrads, FirstOrderLayerParams, ForwardCache, QuadLayerGrads,
    QuadLayerParams,
};
use crate::numeric::sigmoid_prime_from_output;

/// One layer of a [`Network`]. Convolutional kinds carry their expected
/// input geometry so the network can move flat vectors between layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Quad(QuadLayerParams),
    FirstOrder(FirstOrderLayerParams),
    QuadConv {
        params: QuadConvLayerParams,
        in_height: usize,
        in_width: usize,
    },
    FirstOrderConv {
        params: FirstOrderConvLayerParams,
        in_height: usize,
        in_width: usize,
    },
    MeanPool {
        spec: PoolSpec,
        maps: usize,
        in_height: usize,
        in_width: usize,
    },
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        match self {
            Layer::Quad(p) => p.in_dim(),
            Layer::FirstOrder(p) => p.in_dim(),
            Layer::QuadConv {
                params,
                in_height,
                in_width,
            } => params.channels * in_height * in_width,
            Layer::FirstOrderConv {
                params,
                in_height,
                in_width,
            } => params.channels * in_height * in_width,
            Layer::MeanPool {
                maps,
                in_height,
                in_width,
                ..
            } => maps * in_height * in_width,
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Layer::Quad(p) => p.out_dim(),
            Layer::FirstOrder(p) => p.out_dim(),
            Layer::QuadConv {
                params,
                in_height,
                in_width,
            } => {
                let k = params.kernel;
                params.num_maps() * (in_height - k + 1) * (in_width - k + 1)
            }
            Layer::FirstOrderConv {
                params,
                in_height,
                in_width,
            } => {
                let k = params.kernel;
                params.num_maps() * (in_height - k + 1) * (in_width - k + 1)
            }
            Layer::MeanPool {
                spec,
                maps,
                in_height,
                in_width,
            } => maps * (in_height / spec.window) * (in_width / spec.window),
        }
    }

    /// True for layers that end in the sigmoid (everything but pooling).
    pub fn is_neuron_layer(&self) -> bool {
        !matches!(self, Layer::MeanPool { .. })
    }

    /// Named parameter groups in this layer's canonical order. Pooling
    /// has none. Gradient containers list groups in the same order.
    pub(crate) fn param_groups(&self) -> Vec<(Cow<'static, str>, &[f64])> {
        match self {
            Layer::Quad(p) => vec![
                (Cow::Borrowed("w_r"), p.w_r.as_slice()),
                (Cow::Borrowed("w_g"), p.w_g.as_slice()),
                (Cow::Borrowed("w_b"), p.w_b.as_slice()),
                (Cow::Borrowed("b_r"), p.b_r.as_slice()),
                (Cow::Borrowed("b_g"), p.b_g.as_slice()),
                (Cow::Borrowed("c"), p.c.as_slice()),
            ],
            Layer::FirstOrder(p) => vec![
                (Cow::Borrowed("w"), p.w.as_slice()),
                (Cow::Borrowed("b"), p.b.as_slice()),
            ],
            Layer::QuadConv { params, .. } => {
                let mut groups = Vec::with_capacity(params.maps.len() * 6);
                for (m, map) in params.maps.iter().enumerate() {
                    groups.push((Cow::Owned(format!("map{m}.k_r")), map.k_r.as_slice()));
                    groups.push((Cow::Owned(format!("map{m}.k_g")), map.k_g.as_slice()));
                    groups.push((Cow::Owned(format!("map{m}.k_b")), map.k_b.as_slice()));
                    groups.push((Cow::Owned(format!("map{m}.b_r")), std::slice::from_ref(&map.b_r)));
                    groups.push((Cow::Owned(format!("map{m}.b_g")), std::slice::from_ref(&map.b_g)));
                    groups.push((Cow::Owned(format!("map{m}.c")), std::slice::from_ref(&map.c)));
                }
                groups
            }
            Layer::FirstOrderConv { params, .. } => {
                let mut groups = Vec::with_capacity(params.maps.len() * 2);
                for (m, map) in params.maps.iter().enumerate() {
                    groups.push((Cow::Owned(format!("map{m}.k")), map.k.as_slice()));
                    groups.push((Cow::Owned(format!("map{m}.b")), std::slice::from_ref(&map.b)));
                }
                groups
            }
            Layer::MeanPool { .. } => Vec::new(),
        }
    }

    pub(crate) fn param_groups_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Layer::Quad(p) => vec![
                p.w_r.as_mut_slice(),
                p.w_g.as_mut_slice(),
                p.w_b.as_mut_slice(),
                p.b_r.as_mut_slice(),
                p.b_g.as_mut_slice(),
                p.c.as_mut_slice(),
            ],
            Layer::FirstOrder(p) => vec![p.w.as_mut_slice(), p.b.as_mut_slice()],
            Layer::QuadConv { params, .. } => {
                let mut groups = Vec::with_capacity(params.maps.len() * 6);
                for map in params.maps.iter_mut() {
                    groups.push(map.k_r.as_mut_slice());
                    groups.push(map.k_g.as_mut_slice());
                    groups.push(map.k_b.as_mut_slice());
                    groups.push(std::slice::from_mut(&mut map.b_r));
                    groups.push(std::slice::from_mut(&mut map.b_g));
                    groups.push(std::slice::from_mut(&mut map.c));
                }
                groups
            }
            Layer::FirstOrderConv { params, .. } => {
                let mut groups = Vec::with_capacity(params.maps.len() * 2);
                for map in params.maps.iter_mut() {
                    groups.push(map.k.as_mut_slice());
                    groups.push(std::slice::from_mut(&mut map.b));
                }
                groups
            }
            Layer::MeanPool { .. } => Vec::new(),
        }
    }
}

/// Per-layer forward state kept for the backward pass.
#[derive(Debug, Clone)]
pub enum LayerCache {
    Quad(ForwardCache),
    FirstOrder(FirstOrderCache),
    QuadConv(QuadConvCache),
    FirstOrderConv(FirstOrderConvCache),
    MeanPool(PoolCache),
}

/// Gradients for one layer; pooling contributes none.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerGrads {
    Quad(QuadLayerGrads),
    FirstOrder(FirstOrderLayerGrads),
    QuadConv(QuadConvGrads),
    FirstOrderConv(FirstOrderConvGrads),
    MeanPool,
}

impl LayerGrads {
    fn param_groups(&self) -> Vec<&[f64]> {
        match self {
            LayerGrads::Quad(g) => vec![
                g.w_r.as_slice(),
                g.w_g.as_slice(),
                g.w_b.as_slice(),
                g.b_r.as_slice(),
                g.b_g.as_slice(),
                g.c.as_slice(),
            ],
            LayerGrads::FirstOrder(g) => vec![g.w.as_slice(), g.b.as_slice()],
            LayerGrads::QuadConv(g) => {
                let mut groups = Vec::with_capacity(g.maps.len() * 6);
                for map in &g.maps {
                    groups.push(map.k_r.as_slice());
                    groups.push(map.k_g.as_slice());
                    groups.push(map.k_b.as_slice());
                    groups.push(std::slice::from_ref(&map.b_r));
                    groups.push(std::slice::from_ref(&map.b_g));
                    groups.push(std::slice::from_ref(&map.c));
                }
                groups
            }
            LayerGrads::FirstOrderConv(g) => {
                let mut groups = Vec::with_capacity(g.maps.len() * 2);
                for map in &g.maps {
                    groups.push(map.k.as_slice());
                    groups.push(std::slice::from_ref(&map.b));
                }
                groups
            }
            LayerGrads::MeanPool => Vec::new(),
        }
    }

    fn param_groups_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            LayerGrads::Quad(g) => vec![
                g.w_r.as_mut_slice(),
                g.w_g.as_mut_slice(),
                g.w_b.as_mut_slice(),
                g.b_r.as_mut_slice(),
                g.b_g.as_mut_slice(),
                g.c.as_mut_slice(),
            ],
            LayerGrads::FirstOrder(g) => vec![g.w.as_mut_slice(), g.b.as_mut_slice()],
            LayerGrads::QuadConv(g) => {
                let mut groups = Vec::with_capacity(g.maps.len() * 6);
                for map in g.maps.iter_mut() {
                    groups.push(map.k_r.as_mut_slice());
                    groups.push(map.k_g.as_mut_slice());
                    groups.push(map.k_b.as_mut_slice());
                    groups.push(std::slice::from_mut(&mut map.b_r));
                    groups.push(std::slice::from_mut(&mut map.b_g));
                    groups.push(std::slice::from_mut(&mut map.c));
                }
                groups
            }
            LayerGrads::FirstOrderConv(g) => {
                let mut groups = Vec::with_capacity(g.maps.len() * 2);
                for map in g.maps.iter_mut() {
                    groups.push(map.k.as_mut_slice());
                    groups.push(std::slice::from_mut(&mut map.b));
                }
                groups
            }
            LayerGrads::MeanPool => Vec::new(),
        }
    }

    fn d_input_mut(&mut self) -> Option<&mut [f64]> {
        match self {
            LayerGrads::Quad(g) => Some(&mut g.d_input),
            LayerGrads::FirstOrder(g) => Some(&mut g.d_input),
            LayerGrads::QuadConv(_) | LayerGrads::FirstOrderConv(_) => None,
            LayerGrads::MeanPool => None,
        }
    }

    fn d_input(&self) -> Option<&[f64]> {
        match self {
            LayerGrads::Quad(g) => Some(&g.d_input),
            LayerGrads::FirstOrder(g) => Some(&g.d_input),
            LayerGrads::QuadConv(_) | LayerGrads::FirstOrderConv(_) => None,
            LayerGrads::MeanPool => None,
        }
    }
}

/// Gradients for every layer of a network, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGrads {
    pub layers: Vec<LayerGrads>,
}

impl NetworkGrads {
    /// Elementwise sum, including per-layer input gradients where present.
    pub fn add_assign(&mut self, other: &NetworkGrads) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::DimensionMismatch {
                context: "NetworkGrads::add_assign",
                expected: self.layers.len(),
                actual: other.layers.len(),
            });
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            let bg = b.param_groups();
            for (ga, gb) in a.param_groups_mut().into_iter().zip(bg) {
                if ga.len() != gb.len() {
                    return Err(Error::DimensionMismatch {
                        context: "NetworkGrads::add_assign group",
                        expected: ga.len(),
                        actual: gb.len(),
                    });
                }
                for (x, y) in ga.iter_mut().zip(gb) {
                    *x += y;
                }
            }
            // Conv layers keep their input gradients inside the grads
            // struct; sum those two cases separately.
            match (a, b) {
                (LayerGrads::QuadConv(x), LayerGrads::QuadConv(y)) => {
                    add_image(&mut x.d_input, &y.d_input);
                }
                (LayerGrads::FirstOrderConv(x), LayerGrads::FirstOrderConv(y)) => {
                    add_image(&mut x.d_input, &y.d_input);
                }
                (a, b) => {
                    if let (Some(da), Some(db)) = (a.d_input_mut(), b.d_input()) {
                        for (x, y) in da.iter_mut().zip(db) {
                            *x += y;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Multiplies every entry by `factor` (used for mean-reduced loss).
    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            for group in layer.param_groups_mut() {
                for v in group {
                    *v *= factor;
                }
            }
            match layer {
                LayerGrads::QuadConv(g) => scale_image(&mut g.d_input, factor),
                LayerGrads::FirstOrderConv(g) => scale_image(&mut g.d_input, factor),
                other => {
                    if let Some(d) = other.d_input_mut() {
                        for v in d {
                            *v *= factor;
                        }
                    }
                }
            }
        }
    }

    /// All parameter gradients as one flat vector, in the same order as
    /// [`Network`] parameter indexing. Input gradients are not network
    /// parameters and are excluded.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for group in layer.param_groups() {
                out.extend_from_slice(group);
            }
        }
        out
    }
}

fn add_image(a: &mut ImageGrid, b: &ImageGrid) {
    let dst = a.clone();
    for (i, v) in b.as_slice().iter().enumerate() {
        let (c, rest) = (i / (dst.height() * dst.width()), i % (dst.height() * dst.width()));
        let (y, x) = (rest / dst.width(), rest % dst.width());
        a.set(c, y, x, dst.get(c, y, x) + v);
    }
}

fn scale_image(img: &mut ImageGrid, factor: f64) {
    let snapshot = img.clone();
    for c in 0..snapshot.channels() {
        for y in 0..snapshot.height() {
            for x in 0..snapshot.width() {
                img.set(c, y, x, snapshot.get(c, y, x) * factor);
            }
        }
    }
}

/// Identifies one scalar parameter for reports and model files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLabel {
    pub layer: usize,
    pub group: String,
    pub index: usize,
}

impl fmt::Display for ParamLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}.{}[{}]", self.layer, self.group, self.index)
    }
}

/// An ordered stack of layers with validated dimension chaining.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("Network layers"));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::DimensionMismatch {
                    context: "Network layer chain",
                    expected: pair[0].out_dim(),
                    actual: pair[1].in_dim(),
                });
            }
        }
        for (i, layer) in layers.iter().enumerate() {
            match layer {
                Layer::QuadConv {
                    params,
                    in_height,
                    in_width,
                } if params.kernel > *in_height || params.kernel > *in_width => {
                    return Err(Error::invalid(
                        "conv layer",
                        format!("layer {i}: kernel exceeds input"),
                    ));
                }
                Layer::FirstOrderConv {
                    params,
                    in_height,
                    in_width,
                } if params.kernel > *in_height || params.kernel > *in_width => {
                    return Err(Error::invalid(
                        "conv layer",
                        format!("layer {i}: kernel exceeds input"),
                    ));
                }
                Layer::MeanPool {
                    spec,
                    in_height,
                    in_width,
                    ..
                } if spec.window == 0
                    || in_height % spec.window != 0
                    || in_width % spec.window != 0 =>
                {
                    return Err(Error::invalid(
                        "pool layer",
                        format!("layer {i}: window does not divide input"),
                    ));
                }
                _ => {}
            }
        }
        if !layers.last().unwrap().is_neuron_layer() {
            return Err(Error::invalid(
                "network",
                "final layer must apply an activation",
            ));
        }
        Ok(Network { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map(Layer::in_dim).unwrap_or(0)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(Layer::out_dim).unwrap_or(0)
    }

    /// Forward pass through every layer, returning the prediction and the
    /// per-layer caches needed for backpropagation.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<LayerCache>)> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "Network::forward input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        for layer in &self.layers {
            let (next, cache) = match layer {
                Layer::Quad(p) => {
                    let c = quad_forward(p, &current)?;
                    (c.output.clone(), LayerCache::Quad(c))
                }
                Layer::FirstOrder(p) => {
                    let c = first_order_forward(p, &current)?;
                    (c.output.clone(), LayerCache::FirstOrder(c))
                }
                Layer::QuadConv {
                    params,
                    in_height,
                    in_width,
                } => {
                    let img =
                        ImageGrid::from_values(params.channels, *in_height, *in_width, current)?;
                    let c = conv2_forward(params, &img)?;
                    (flatten(&c.output), LayerCache::QuadConv(c))
                }
                Layer::FirstOrderConv {
                    params,
                    in_height,
                    in_width,
                } => {
                    let img =
                        ImageGrid::from_values(params.channels, *in_height, *in_width, current)?;
                    let c = first_order_conv_forward(params, &img)?;
                    (flatten(&c.output), LayerCache::FirstOrderConv(c))
                }
                Layer::MeanPool {
                    spec,
                    maps,
                    in_height,
                    in_width,
                } => {
                    let img = ImageGrid::from_values(*maps, *in_height, *in_width, current)?;
                    let (pooled, c) = pool_forward(*spec, &img)?;
                    (flatten(&pooled), LayerCache::MeanPool(c))
                }
            };
            caches.push(cache);
            current = next;
        }
        Ok((current, caches))
    }

    /// Forward pass without keeping caches.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.0)
    }

    /// Hard binary decision for single-output networks: 1 iff the
    /// prediction is at least 0.5 (ties classify as 1).
    pub fn classify(&self, x: &[f64]) -> Result<u8> {
        if self.output_dim() != 1 {
            return Err(Error::invalid(
                "classify",
                format!("needs a single-output network, got {}", self.output_dim()),
            ));
        }
        Ok(if self.predict(x)?[0] >= 0.5 { 1 } else { 0 })
    }

    /// Backpropagation for one sample: prediction plus the loss gradient
    /// for every parameter, under `E = ½·Σ (prediction − y)²`.
    pub fn backprop_detailed(&self, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, NetworkGrads)> {
        if y.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "Network::backprop target",
                expected: self.output_dim(),
                actual: y.len(),
            });
        }
        let (prediction, caches) = self.forward(x)?;
        let mut d_output: Vec<f64> = prediction.iter().zip(y).map(|(p, t)| p - t).collect();
        let mut grads_rev: Vec<LayerGrads> = Vec::with_capacity(self.layers.len());

        for (layer, cache) in self.layers.iter().zip(caches.iter()).rev() {
            let (grads, d_input) = match (layer, cache) {
                (Layer::Quad(p), LayerCache::Quad(c)) => {
                    let delta = apply_sigmoid_delta(&d_output, &c.output);
                    let g = quad_param_grads(c, p, &delta)?;
                    let d_in = g.d_input.clone();
                    (LayerGrads::Quad(g), d_in)
                }
                (Layer::FirstOrder(p), LayerCache::FirstOrder(c)) => {
                    let delta = apply_sigmoid_delta(&d_output, &c.output);
                    let g = first_order_param_grads(c, p, &delta)?;
                    let d_in = g.d_input.clone();
                    (LayerGrads::FirstOrder(g), d_in)
                }
                (Layer::QuadConv { params, .. }, LayerCache::QuadConv(c)) => {
                    let delta = apply_sigmoid_delta(&d_output, flatten(&c.output).as_slice());
                    let delta_maps = ImageGrid::from_values(
                        c.output.channels(),
                        c.output.height(),
                        c.output.width(),
                        delta,
                    )?;
                    let g = conv2_backward(params, c, &delta_maps)?;
                    let d_in = flatten(&g.d_input);
                    (LayerGrads::QuadConv(g), d_in)
                }
                (Layer::FirstOrderConv { params, .. }, LayerCache::FirstOrderConv(c)) => {
                    let delta = apply_sigmoid_delta(&d_output, flatten(&c.output).as_slice());
                    let delta_maps = ImageGrid::from_values(
                        c.output.channels(),
                        c.output.height(),
                        c.output.width(),
                        delta,
                    )?;
                    let g = first_order_conv_backward(params, c, &delta_maps)?;
                    let d_in = flatten(&g.d_input);
                    (LayerGrads::FirstOrderConv(g), d_in)
                }
                (Layer::MeanPool { spec, .. }, LayerCache::MeanPool(c)) => {
                    let (oh, ow) = (c.in_height / spec.window, c.in_width / spec.window);
                    let delta = ImageGrid::from_values(c.in_channels, oh, ow, d_output.clone())?;
                    let d_in = flatten(&pool_backward(c, &delta)?);
                    (LayerGrads::MeanPool, d_in)
                }
                _ => unreachable!("cache kind always matches layer kind"),
            };
            grads_rev.push(grads);
            d_output = d_input;
        }
        grads_rev.reverse();
        Ok((prediction, NetworkGrads { layers: grads_rev }))
    }

    /// Loss gradients for one sample (see [`Network::backprop_detailed`]).
    pub fn backprop_sample(&self, x: &[f64], y: &[f64]) -> Result<NetworkGrads> {
        Ok(self.backprop_detailed(x, y)?.1)
    }

    /// Sums per-sample gradients over the whole set, in sample order.
    pub fn grad_accumulate(&self, data: &LabeledSet) -> Result<NetworkGrads> {
        Ok(self.accumulate_pass(data)?.0)
    }

    /// One deterministic pass: summed gradients, summed per-sample loss,
    /// and the count of correctly classified samples.
    fn accumulate_pass(&self, data: &LabeledSet) -> Result<(NetworkGrads, f64, usize)> {
        if data.is_empty() {
            return Err(Error::Empty("training set"));
        }
        let mut total: Option<NetworkGrads> = None;
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for sample in &data.samples {
            let y = target_vector(sample, self.output_dim())?;
            let (pred, grads) = self.backprop_detailed(&sample.features, &y)?;
            loss_sum += half_squared_error(&pred, &y);
            if prediction_matches(&pred, &y) {
                correct += 1;
            }
            match &mut total {
                None => total = Some(grads),
                Some(t) => t.add_assign(&grads)?,
            }
        }
        Ok((total.expect("set is non-empty"), loss_sum, correct))
    }

    /// Steepest-descent update: every parameter moves against its
    /// gradient by `learning_rate`.
    pub fn sgd_step(&mut self, grads: &NetworkGrads, learning_rate: f64) -> Result<()> {
        if grads.layers.len() != self.layers.len() {
            return Err(Error::DimensionMismatch {
                context: "sgd_step",
                expected: self.layers.len(),
                actual: grads.layers.len(),
            });
        }
        for (layer, lg) in self.layers.iter_mut().zip(&grads.layers) {
            let params = layer.param_groups_mut();
            let gs = lg.param_groups();
            if params.len() != gs.len() {
                return Err(Error::DimensionMismatch {
                    context: "sgd_step groups",
                    expected: params.len(),
                    actual: gs.len(),
                });
            }
            for (p, g) in params.into_iter().zip(gs) {
                if p.len() != g.len() {
                    return Err(Error::DimensionMismatch {
                        context: "sgd_step group size",
                        expected: p.len(),
                        actual: g.len(),
                    });
                }
                for (pv, gv) in p.iter_mut().zip(g) {
                    *pv -= learning_rate * gv;
                }
            }
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.param_groups().iter().map(|(_, g)| g.len()).sum::<usize>())
            .sum()
    }

    /// Reads the `idx`-th parameter in canonical order (layers in order,
    /// groups in their declared order, row-major within a group).
    pub fn param(&self, idx: usize) -> f64 {
        let mut remaining = idx;
        for layer in &self.layers {
            for (_, group) in layer.param_groups() {
                if remaining < group.len() {
                    return group[remaining];
                }
                remaining -= group.len();
            }
        }
        panic!("parameter index {idx} out of range");
    }

    /// Writes the `idx`-th parameter (see [`Network::param`] for order).
    pub fn set_param(&mut self, idx: usize, value: f64) {
        let mut remaining = idx;
        for layer in &mut self.layers {
            for group in layer.param_groups_mut() {
                if remaining < group.len() {
                    group[remaining] = value;
                    return;
                }
                remaining -= group.len();
            }
        }
        panic!("parameter index {idx} out of range");
    }

    /// Labels for every parameter, aligned with the canonical order.
    pub fn param_labels(&self) -> Vec<ParamLabel> {
        let mut labels = Vec::with_capacity(self.num_params());
        for (li, layer) in self.layers.iter().enumerate() {
            for (name, group) in layer.param_groups() {
                for i in 0..group.len() {
                    labels.push(ParamLabel {
                        layer: li,
                        group: name.clone().into_owned(),
                        index: i,
                    });
                }
            }
        }
        labels
    }
}

fn apply_sigmoid_delta(d_output: &[f64], output: &[f64]) -> Vec<f64> {
    d_output
        .iter()
        .zip(output)
        .map(|(d, o)| d * sigmoid_prime_from_output(*o))
        .collect()
}

/// Half squared error of one prediction: `½·Σ (p − y)²`.
pub fn half_squared_error(prediction: &[f64], target: &[f64]) -> f64 {
    0.5 * prediction
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
}

fn prediction_matches(prediction: &[f64], target: &[f64]) -> bool {
    prediction
        .iter()
        .zip(target)
        .all(|(p, t)| (if *p >= 0.5 { 1.0 } else { 0.0 }) == *t)
}

fn target_vector(sample: &LabeledSample, output_dim: usize) -> Result<Vec<f64>> {
    if output_dim != 1 {
        return Err(Error::invalid(
            "training target",
            format!("labeled data drives single-output networks, got {output_dim} outputs"),
        ));
    }
    Ok(vec![sample.label as f64])
}

/// How the per-sample losses are combined into the reported total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossReduction {
    /// `½ ΣᵢΣⱼ (pᵢⱼ − yᵢⱼ)²` over all samples and output components.
    Sum,
    /// Sum divided by the number of samples.
    Mean,
}

/// Combined loss over a batch of predictions.
pub fn loss(
    predictions: &[Vec<f64>],
    targets: &[Vec<f64>],
    reduction: LossReduction,
) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::Empty("loss inputs"));
    }
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            context: "loss sample count",
            expected: predictions.len(),
            actual: targets.len(),
        });
    }
    let mut total = 0.0;
    for (p, t) in predictions.iter().zip(targets) {
        if p.len() != t.len() {
            return Err(Error::DimensionMismatch {
                context: "loss component count",
                expected: p.len(),
                actual: t.len(),
            });
        }
        total += half_squared_error(p, t);
    }
    Ok(match reduction {
        LossReduction::Sum => total,
        LossReduction::Mean => total / predictions.len() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    /// Gradients summed over the whole set before each update; one
    /// iteration is one update.
    FullBatch,
    /// An update after every sample, in set order; one iteration is one
    /// full pass. Updates use the raw per-sample gradient; the loss
    /// reduction only affects reporting.
    PerSample,
}

/// Training hyperparameters. Every report echoes its config, so runs are
/// self-describing.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_iterations: usize,
    pub batch_mode: BatchMode,
    pub seed: u64,
    pub init_half_range: f64,
    pub curriculum: Option<CurriculumSpec>,
    pub loss_reduction: LossReduction,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            max_iterations: 1000,
            batch_mode: BatchMode::FullBatch,
            seed: 1,
            init_half_range: 0.5,
            curriculum: None,
            loss_reduction: LossReduction::Sum,
        }
    }
}

/// Staged training over radial shells, outermost first. Stage `s` of `n`
/// trains on the samples whose ordering key ranks in the top `s/n`
/// fraction, keeping the parameters from the previous stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurriculumSpec {
    pub num_stages: usize,
    pub stage_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub iterations_run: usize,
    pub final_loss: f64,
    pub loss_history: Vec<f64>,
    pub train_accuracy: f64,
    pub seed_used: u64,
    pub config: TrainConfig,
}

/// Loss improvement below this, with perfect training accuracy, stops
/// training early.
const EARLY_STOP_IMPROVEMENT: f64 = 1e-12;

/// Trains `net` on `data` by steepest descent.
///
/// The loss history holds the loss measured at the start of every
/// iteration plus one final post-training measurement; `max_iterations`
/// of 0 therefore reports the untouched initial state. Training stops
/// early once training accuracy is 1.0 and the loss improves by less
/// than 1e-12 between iterations, and fails with
/// [`Error::Diverged`] if the loss leaves the finite range.
pub fn train(net: &mut Network, data: &LabeledSet, cfg: &TrainConfig) -> Result<TrainReport> {
    if cfg.learning_rate < 0.0 || !cfg.learning_rate.is_finite() {
        return Err(Error::invalid(
            "learning_rate",
            format!("{}", cfg.learning_rate),
        ));
    }
    if net.input_dim() != data.feature_dim {
        return Err(Error::DimensionMismatch {
            context: "train data",
            expected: net.input_dim(),
            actual: data.feature_dim,
        });
    }
    let n = data.len() as f64;
    let reduce = |total: f64| match cfg.loss_reduction {
        LossReduction::Sum => total,
        LossReduction::Mean => total / n,
    };

    let mut history = Vec::with_capacity(cfg.max_iterations + 1);
    let mut prev_loss: Option<f64> = None;
    let mut iterations_run = 0;
    let mut settled: Option<(f64, f64)> = None;

    for iteration in 0..cfg.max_iterations {
        let loss_now = match cfg.batch_mode {
            BatchMode::FullBatch => {
                let (mut grads, loss_sum, correct) = net.accumulate_pass(data)?;
                let loss_now = reduce(loss_sum);
                if !loss_now.is_finite() {
                    return Err(Error::Diverged { iteration });
                }
                let accuracy = correct as f64 / n;
                history.push(loss_now);
                if accuracy == 1.0
                    && prev_loss.is_some_and(|p| p - loss_now < EARLY_STOP_IMPROVEMENT)
                {
                    // Parameters are untouched since this measurement.
                    settled = Some((loss_now, accuracy));
                    break;
                }
                if let LossReduction::Mean = cfg.loss_reduction {
                    grads.scale(1.0 / n);
                }
                net.sgd_step(&grads, cfg.learning_rate)?;
                iterations_run = iteration + 1;
                loss_now
            }
            BatchMode::PerSample => {
                let mut loss_sum = 0.0;
                let mut correct = 0usize;
                for sample in &data.samples {
                    let y = target_vector(sample, net.output_dim())?;
                    let (pred, grads) = net.backprop_detailed(&sample.features, &y)?;
                    loss_sum += half_squared_error(&pred, &y);
                    if prediction_matches(&pred, &y) {
                        correct += 1;
                    }
                    net.sgd_step(&grads, cfg.learning_rate)?;
                }
                let loss_now = reduce(loss_sum);
                if !loss_now.is_finite() {
                    return Err(Error::Diverged { iteration });
                }
                history.push(loss_now);
                iterations_run = iteration + 1;
                let accuracy = correct as f64 / n;
                if accuracy == 1.0
                    && prev_loss.is_some_and(|p| p - loss_now < EARLY_STOP_IMPROVEMENT)
                {
                    break;
                }
                (loss_now, accuracy)
            }
        };
        let _ = accuracy;
        prev_loss = Some(loss_now);
    }

    let (final_loss, train_accuracy) = match settled {
        Some(pair) => pair,
        None => {
            let summary = evaluate(net, data, cfg.loss_reduction)?;
            (summary.loss, summary.accuracy)
        }
    };
    history.push(final_loss);
    Ok(TrainReport {
        iterations_run,
        final_loss,
        loss_history: history,
        train_accuracy,
        seed_used: cfg.seed,
        config: cfg.clone(),
    })
}

/// Staged outer-to-inner training. Samples are ranked by their radius
/// key (falling back to distance from (0.5, 0.5) for 2-d features),
/// split into `num_stages` contiguous shells, and stage `s` trains on
/// the union of the outermost `s` shells for `stage_iterations`
/// iterations, warm-starting from the previous stage. Within a stage,
/// samples keep their original dataset order, so a one-stage curriculum
/// is bit-identical to plain training.
pub fn train_curriculum(
    net: &mut Network,
    data: &LabeledSet,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    let spec = cfg.curriculum.clone().ok_or_else(|| {
        Error::invalid("curriculum", "train_curriculum requires cfg.curriculum")
    })?;
    if spec.num_stages == 0 {
        return Err(Error::invalid("curriculum", "num_stages must be at least 1"));
    }

    let mut keys = Vec::with_capacity(data.len());
    for (i, s) in data.samples.iter().enumerate() {
        let key = match s.radius {
            Some(r) => r,
            None if s.features.len() == 2 => {
                let dx = s.features[0] - 0.5;
                let dy = s.features[1] - 0.5;
                (dx * dx + dy * dy).sqrt()
            }
            None => {
                return Err(Error::invalid(
                    "curriculum ordering",
                    format!("sample {i} has no radius key and is not 2-d"),
                ))
            }
        };
        keys.push(key);
    }
    // Rank samples outermost-first; stable so ties keep dataset order.
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| keys[b].partial_cmp(&keys[a]).expect("finite keys"));
    let mut rank = vec![0usize; data.len()];
    for (r, &idx) in order.iter().enumerate() {
        rank[idx] = r;
    }

    let stage_cfg = TrainConfig {
        max_iterations: spec.stage_iterations,
        curriculum: None,
        ..cfg.clone()
    };
    let mut history = Vec::new();
    let mut iterations_run = 0;
    let mut last_report = None;
    for stage in 1..=spec.num_stages {
        let take = stage * data.len() / spec.num_stages;
        let samples: Vec<LabeledSample> = data
            .samples
            .iter()
            .enumerate()
            .filter(|(i, _)| rank[*i] < take)
            .map(|(_, s)| s.clone())
            .collect();
        let stage_set = LabeledSet::new(samples, data.feature_dim, data.provenance.clone())?;
        let report = train(net, &stage_set, &stage_cfg)?;
        iterations_run += report.iterations_run;
        history.extend_from_slice(&report.loss_history);
        last_report = Some(report);
    }
    let last = last_report.expect("at least one stage");
    Ok(TrainReport {
        iterations_run,
        final_loss: last.final_loss,
        loss_history: history,
        train_accuracy: last.train_accuracy,
        seed_used: cfg.seed,
        config: cfg.clone(),
    })
}

/// Loss, accuracy, and per-class counts of a network over a set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub loss: f64,
    pub accuracy: f64,
    /// Sample counts by true label.
    pub class_total: [usize; 2],
    /// Correctly classified counts by true label.
    pub class_correct: [usize; 2],
}

pub fn evaluate(net: &Network, data: &LabeledSet, reduction: LossReduction) -> Result<EvalSummary> {
    if data.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let mut loss_sum = 0.0;
    let mut class_total = [0usize; 2];
    let mut class_correct = [0usize; 2];
    for sample in &data.samples {
        let y = target_vector(sample, net.output_dim())?;
        let pred = net.predict(&sample.features)?;
        loss_sum += half_squared_error(&pred, &y);
        let cls = sample.label as usize;
        class_total[cls] += 1;
        if prediction_matches(&pred, &y) {
            class_correct[cls] += 1;
        }
    }
    let n = data.len() as f64;
    let loss = match reduction {
        LossReduction::Sum => loss_sum,
        LossReduction::Mean => loss_sum / n,
    };
    Ok(EvalSummary {
        loss,
        accuracy: (class_correct[0] + class_correct[1]) as f64 / n,
        class_total,
        class_correct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::Provenance;
    use crate::numeric::{uniform_init, Matrix, RandomSource};

    fn quad_mlp(widths: &[usize], rng: &mut RandomSource, half_range: f64) -> Network {
        let layers = widths
            .windows(2)
            .map(|w| Layer::Quad(QuadLayerParams::init(w[0], w[1], rng, half_range)))
            .collect();
        Network::new(layers).unwrap()
    }

    fn tiny_set(samples: Vec<LabeledSample>) -> LabeledSet {
        let dim = samples[0].features.len();
        LabeledSet::new(
            samples,
            dim,
            Provenance {
                generator: "test".into(),
                seed: 0,
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_init_network_predicts_half() {
        let net = Network::new(vec![Layer::Quad(QuadLayerParams::zeros(3, 2))]).unwrap();
        assert_eq!(net.predict(&[1.0, -2.0, 0.3]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn two_layer_forward_is_composition() {
        let mut rng = RandomSource::new(3);
        let l1 = QuadLayerParams::init(2, 3, &mut rng, 0.5);
        let l2 = QuadLayerParams::init(3, 1, &mut rng, 0.5);
        let net =
            Network::new(vec![Layer::Quad(l1.clone()), Layer::Quad(l2.clone())]).unwrap();
        let x = [0.2, -0.7];
        let h = quad_forward(&l1, &x).unwrap().output;
        let manual = quad_forward(&l2, &h).unwrap().output;
        assert_eq!(net.predict(&x).unwrap(), manual);
    }

    /// Straight-line re-implementation of the quadratic forward pass:
    /// raw loops over raw arrays, no shared code with the layer module.
    fn straight_line_quad_mlp(
        layers: &[(usize, usize, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)],
        x: &[f64],
    ) -> Vec<f64> {
        let mut cur = x.to_vec();
        for (p, q, wr, wg, wb, br, bg, c) in layers {
            let mut next = vec![0.0; *q];
            for j in 0..*q {
                let mut sr = br[j];
                let mut sg = bg[j];
                let mut sq = 0.0;
                for k in 0..*p {
                    sr += wr[j * p + k] * cur[k];
                    sg += wg[j * p + k] * cur[k];
                    sq += wb[j * p + k] * cur[k] * cur[k];
                }
                let net = sr * sg + sq + c[j];
                next[j] = 1.0 / (1.0 + (-net).exp());
            }
            cur = next;
        }
        cur
    }

    #[test]
    fn random_net_matches_straight_line_oracle() {
        let mut rng = RandomSource::new(17);
        let net = quad_mlp(&[2, 3, 2, 1], &mut rng, 1.0);
        let raw: Vec<_> = net
            .layers()
            .iter()
            .map(|l| match l {
                Layer::Quad(p) => (
                    p.in_dim(),
                    p.out_dim(),
                    p.w_r.as_slice().to_vec(),
                    p.w_g.as_slice().to_vec(),
                    p.w_b.as_slice().to_vec(),
                    p.b_r.clone(),
                    p.b_g.clone(),
                    p.c.clone(),
                ),
                _ => unreachable!(),
            })
            .collect();
        for trial in 0..10 {
            let x = uniform_init(&mut rng, 2, 1.0);
            let got = net.predict(&x).unwrap();
            let want = straight_line_quad_mlp(&raw, &x);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "trial {trial}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn loss_examples() {
        let p = vec![vec![0.8]];
        let t = vec![vec![0.5]];
        assert!((loss(&p, &t, LossReduction::Sum).unwrap() - 0.045).abs() < 1e-15);
        assert_eq!(loss(&p, &p.clone(), LossReduction::Sum).unwrap(), 0.0);

        let p2 = vec![vec![0.8], vec![0.8]];
        let t2 = vec![vec![0.5], vec![0.5]];
        let single = loss(&p, &t, LossReduction::Sum).unwrap();
        assert_eq!(loss(&p2, &t2, LossReduction::Sum).unwrap(), 2.0 * single);
        assert_eq!(loss(&p2, &t2, LossReduction::Mean).unwrap(), single);

        assert!(matches!(
            loss(&[], &[], LossReduction::Sum),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn backprop_zero_at_exact_prediction() {
        // Zero-initialized net predicts exactly 0.5; target 0.5 makes the
        // output error vanish, so every gradient is zero.
        let net = Network::new(vec![Layer::Quad(QuadLayerParams::zeros(2, 1))]).unwrap();
        let grads = net.backprop_sample(&[0.3, -0.4], &[0.5]).unwrap();
        assert!(grads.flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_layer_backprop_equals_layer_grads() {
        let mut rng = RandomSource::new(23);
        let params = QuadLayerParams::init(2, 1, &mut rng, 1.0);
        let net = Network::new(vec![Layer::Quad(params.clone())]).unwrap();
        let (x, y) = ([0.4, -0.9], [1.0]);
        let net_grads = net.backprop_sample(&x, &y).unwrap();

        let cache = quad_forward(&params, &x).unwrap();
        let o = cache.output[0];
        let delta = [(o - y[0]) * o * (1.0 - o)];
        let layer_grads = quad_param_grads(&cache, &params, &delta).unwrap();
        assert_eq!(net_grads.layers[0], LayerGrads::Quad(layer_grads));
    }

    #[test]
    fn grad_accumulate_additivity() {
        let mut rng = RandomSource::new(29);
        let net = quad_mlp(&[2, 2, 1], &mut rng, 0.5);
        let s = LabeledSample {
            features: vec![0.1, 0.9],
            label: 1,
            radius: None,
        };
        let one = tiny_set(vec![s.clone()]);
        let two = tiny_set(vec![s.clone(), s.clone()]);

        let g1 = net.grad_accumulate(&one).unwrap();
        let direct = net.backprop_sample(&s.features, &[1.0]).unwrap();
        assert_eq!(g1, direct);

        let g2 = net.grad_accumulate(&two).unwrap();
        let doubled: Vec<f64> = g1.flat().iter().map(|v| 2.0 * v).collect();
        assert_eq!(g2.flat(), doubled);

        // Fixed order is bit-identical across calls.
        assert_eq!(net.grad_accumulate(&two).unwrap(), g2);
    }

    #[test]
    fn sgd_step_examples() {
        let params = QuadLayerParams {
            w_r: Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
            w_g: Matrix::zeros(1, 1),
            w_b: Matrix::zeros(1, 1),
            b_r: vec![0.0],
            b_g: vec![0.0],
            c: vec![0.0],
        };
        let mut net = Network::new(vec![Layer::Quad(params)]).unwrap();
        let mut grads = net.backprop_sample(&[1.0], &[0.5]).unwrap();
        // Overwrite with a hand gradient: only w_r moves.
        if let LayerGrads::Quad(g) = &mut grads.layers[0] {
            g.w_r.as_mut_slice()[0] = 2.0;
            g.w_g.as_mut_slice()[0] = 0.0;
            g.w_b.as_mut_slice()[0] = 0.0;
            g.b_r[0] = 0.0;
            g.b_g[0] = 0.0;
            g.c[0] = 0.0;
        }
        net.sgd_step(&grads, 0.1).unwrap();
        assert!((net.param(0) - 0.8).abs() < 1e-15);

        let before: Vec<f64> = (0..net.num_params()).map(|i| net.param(i)).collect();
        let zero = NetworkGrads {
            layers: vec![LayerGrads::Quad(QuadLayerGrads {
                w_r: Matrix::zeros(1, 1),
                w_g: Matrix::zeros(1, 1),
                w_b: Matrix::zeros(1, 1),
                b_r: vec![0.0],
                b_g: vec![0.0],
                c: vec![0.0],
                d_input: vec![0.0],
            })],
        };
        net.sgd_step(&zero, 0.7).unwrap();
        let after: Vec<f64> = (0..net.num_params()).map(|i| net.param(i)).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn one_step_descends_on_toy_problem() {
        let mut rng = RandomSource::new(31);
        let mut net = quad_mlp(&[1, 1], &mut rng, 0.5);
        let x = [0.8];
        let y = [0.9];
        let loss_before = half_squared_error(&net.predict(&x).unwrap(), &y);
        let grads = net.backprop_sample(&x, &y).unwrap();
        net.sgd_step(&grads, 0.05).unwrap();
        let loss_after = half_squared_error(&net.predict(&x).unwrap(), &y);
        assert!(loss_after < loss_before);
    }

    #[test]
    fn zero_learning_rate_is_a_flat_line() {
        let mut rng = RandomSource::new(37);
        let mut net = quad_mlp(&[2, 1], &mut rng, 0.5);
        let before: Vec<f64> = (0..net.num_params()).map(|i| net.param(i)).collect();
        let data = tiny_set(vec![
            LabeledSample {
                features: vec![0.1, 0.2],
                label: 0,
                radius: None,
            },
            LabeledSample {
                features: vec![0.9, 0.8],
                label: 1,
                radius: None,
            },
        ]);
        let cfg = TrainConfig {
            learning_rate: 0.0,
            max_iterations: 5,
            ..TrainConfig::default()
        };
        let report = train(&mut net, &data, &cfg).unwrap();
        let after: Vec<f64> = (0..net.num_params()).map(|i| net.param(i)).collect();
        assert_eq!(before, after);
        assert!(report
            .loss_history
            .iter()
            .all(|&l| l == report.loss_history[0]));
    }

    #[test]
    fn zero_iterations_reports_initial_state() {
        let mut rng = RandomSource::new(38);
        let mut net = quad_mlp(&[2, 1], &mut rng, 0.5);
        let data = tiny_set(vec![LabeledSample {
            features: vec![0.5, 0.5],
            label: 1,
            radius: None,
        }]);
        let cfg = TrainConfig {
            max_iterations: 0,
            ..TrainConfig::default()
        };
        let report = train(&mut net, &data, &cfg).unwrap();
        assert_eq!(report.iterations_run, 0);
        assert_eq!(report.loss_history.len(), 1);
    }

    #[test]
    fn linearly_separable_first_order_reaches_perfect_accuracy() {
        let data = tiny_set(vec![
            LabeledSample {
                features: vec![0.0, 0.0],
                label: 0,
                radius: None,
            },
            LabeledSample {
                features: vec![0.0, 1.0],
                label: 0,
                radius: None,
            },
            LabeledSample {
                features: vec![1.0, 0.0],
                label: 1,
                radius: None,
            },
            LabeledSample {
                features: vec![1.0, 1.0],
                label: 1,
                radius: None,
            },
        ]);
        let mut rng = RandomSource::new(5);
        let mut net = Network::new(vec![Layer::FirstOrder(FirstOrderLayerParams::init(
            2, 1, &mut rng, 0.5,
        ))])
        .unwrap();
        let cfg = TrainConfig {
            learning_rate: 1.0,
            max_iterations: 500,
            ..TrainConfig::default()
        };
        let report = train(&mut net, &data, &cfg).unwrap();
        assert_eq!(report.train_accuracy, 1.0);
        assert!(report.final_loss < report.loss_history[0]);
    }

    #[test]
    fn training_is_deterministic() {
        let data = tiny_set(vec![
            LabeledSample {
                features: vec![0.2, 0.3],
                label: 0,
                radius: None,
            },
            LabeledSample {
                features: vec![0.8, 0.7],
                label: 1,
                radius: None,
            },
        ]);
        let cfg = TrainConfig {
            learning_rate: 0.3,
            max_iterations: 50,
            seed: 99,
            ..TrainConfig::default()
        };
        let run = || {
            let mut rng = RandomSource::new(cfg.seed);
            let mut net = quad_mlp(&[2, 3, 1], &mut rng, cfg.init_half_range);
            let report = train(&mut net, &data, &cfg).unwrap();
            let params: Vec<f64> = (0..net.num_params()).map(|i| net.param(i)).collect();
            (params, report.loss_history)
        };
        let (p1, h1) = run();
        let (p2, h2) = run();
        assert_eq!(p1, p2);
        assert_eq!(h1, h2);
    }

    #[test]
    fn divergence_is_reported_with_iteration() {
        // A huge learning rate on a steep quadratic unit blows up fast.
        let params = QuadLayerParams {
            w_r: Matrix::from_vec(1, 1, vec![1e150]).unwrap(),
            w_g: Matrix::from_vec(1, 1, vec![1e150]).unwrap(),
            w_b: Matrix::zeros(1, 1),
            b_r: vec![0.0],
            b_g: vec![0.0],
            c: vec![0.0],
        };
        let mut net = Network::new(vec![Layer::Quad(params)]).unwrap();
        let data = tiny_set(vec![LabeledSample {
            features: vec![1e80],
            label: 0,
            radius: None,
        }]);
        let cfg = TrainConfig {
            learning_rate: 1e300,
            max_iterations: 50,
            ..TrainConfig::default()
        };
        match train(&mut net, &data, &cfg) {
            Err(Error::Diverged { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn curriculum_single_stage_matches_plain_training() {
        let data = crate::datasets::gen_two_spirals();
        let base = TrainConfig {
            learning_rate: 0.05,
            max_iterations: 10,
            loss_reduction: LossReduction::Mean,
            ..TrainConfig::default()
        };
        let mut rng1 = RandomSource::new(7);
        let mut plain_net = quad_mlp(&[2, 4, 1], &mut rng1, 0.5);
        let plain = train(&mut plain_net, &data, &base).unwrap();

        let cur_cfg = TrainConfig {
            curriculum: Some(CurriculumSpec {
                num_stages: 1,
                stage_iterations: 10,
            }),
            ..base
        };
        let mut rng2 = RandomSource::new(7);
        let mut cur_net = quad_mlp(&[2, 4, 1], &mut rng2, 0.5);
        let curred = train_curriculum(&mut cur_net, &data, &cur_cfg).unwrap();

        assert_eq!(plain.loss_history, curred.loss_history);
        let p1: Vec<f64> = (0..plain_net.num_params()).map(|i| plain_net.param(i)).collect();
        let p2: Vec<f64> = (0..cur_net.num_params()).map(|i| cur_net.param(i)).collect();
        assert_eq!(p1, p2);
    }

    #[test]
    fn curriculum_stages_are_nested_shells() {
        let data = crate::datasets::gen_two_spirals();
        // Reproduce the stage selection rule and check nesting plus the
        // final stage covering everything.
        let mut keys: Vec<f64> = data.samples.iter().map(|s| s.radius.unwrap()).collect();
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.sort_by(|&a, &b| keys[b].partial_cmp(&keys[a]).unwrap());
        let mut rank = vec![0usize; data.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        let stages = 3;
        let mut previous: Vec<usize> = Vec::new();
        for s in 1..=stages {
            let take = s * data.len() / stages;
            let members: Vec<usize> =
                (0..data.len()).filter(|&i| rank[i] < take).collect();
            assert!(previous.iter().all(|m| members.contains(m)), "stages nest");
            // Every member of stage s is at least as far out as any non-member.
            let min_in = members.iter().map(|&i| keys[i]).fold(f64::INFINITY, f64::min);
            let max_out = (0..data.len())
                .filter(|i| !members.contains(i))
                .map(|i| keys[i])
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(members.len() == data.len() || min_in >= max_out);
            previous = members;
        }
        assert_eq!(previous.len(), 194);
        keys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }

    #[test]
    fn classify_tie_goes_to_one() {
        let net = Network::new(vec![Layer::Quad(QuadLayerParams::zeros(2, 1))]).unwrap();
        // Zero-initialized net predicts exactly 0.5 everywhere.
        assert_eq!(net.classify(&[0.12, 0.95]).unwrap(), 1);
        assert_eq!(net.classify(&[0.9, 0.1]).unwrap(), 1);
    }

    #[test]
    fn classify_rejects_multi_output() {
        let net = Network::new(vec![Layer::Quad(QuadLayerParams::zeros(2, 2))]).unwrap();
        assert!(net.classify(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn network_rejects_bad_chain() {
        let err = Network::new(vec![
            Layer::Quad(QuadLayerParams::zeros(2, 3)),
            Layer::Quad(QuadLayerParams::zeros(4, 1)),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn forward_rejects_bad_input_dim() {
        let net = Network::new(vec![Layer::Quad(QuadLayerParams::zeros(2, 1))]).unwrap();
        assert!(net.predict(&[1.0]).is_err());
    }

    #[test]
    fn param_roundtrip_and_labels() {
        let mut rng = RandomSource::new(41);
        let mut net = quad_mlp(&[2, 2, 1], &mut rng, 0.5);
        let n = net.num_params();
        // 2→2 quad: 3·4 + 3·2 = 18; 2→1 quad: 3·2 + 3·1 = 9.
        assert_eq!(n, 27);
        let labels = net.param_labels();
        assert_eq!(labels.len(), n);
        assert_eq!(labels[0].group, "w_r");
        assert_eq!(labels[0].layer, 0);
        assert_eq!(labels[n - 1].group, "c");
        assert_eq!(labels[n - 1].layer, 1);

        let old = net.param(5);
        net.set_param(5, old + 1.0);
        assert_eq!(net.param(5), old + 1.0);
    }
}
