//! Second-order convolution, mean pooling, and flattening.
//!
//! A quadratic convolution applies the quadratic unit of [`crate::layer`]
//! to every valid (no padding, stride 1) `k×k` window of the input, with
//! one kernel triple per feature map shared across windows. Kernel
//! gradients therefore sum over windows, and the input gradient
//! scatter-adds each window's contribution.
//!
//! Image data is stored channel-major, then row-major within a channel,
//! which is also the flattening order handed to dense layers.

use crate::error::{Error, Result};
use crate::numeric::{sigmoid, uniform_init, RandomSource};

/// A stack of 2-D planes: `channels × height × width`, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<f64>,
}

impl ImageGrid {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        ImageGrid {
            height,
            width,
            channels,
            values: vec![0.0; channels * height * width],
        }
    }

    pub fn from_values(
        channels: usize,
        height: usize,
        width: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != channels * height * width {
            return Err(Error::DimensionMismatch {
                context: "ImageGrid::from_values",
                expected: channels * height * width,
                actual: values.len(),
            });
        }
        Ok(ImageGrid {
            height,
            width,
            channels,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.values[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.values[(c * self.height + y) * self.width + x] = v;
    }

    #[inline]
    fn add(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.values[(c * self.height + y) * self.width + x] += v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Flattens maps in channel-major, row-major order. The storage layout
/// already matches, so this is a copy with a stable, documented order.
pub fn flatten(maps: &ImageGrid) -> Vec<f64> {
    maps.values.clone()
}

/// Kernels and scalars for one quadratic feature map. Kernel vectors are
/// laid out channel-major, row-major, with `k·k·channels` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConvMap {
    pub k_r: Vec<f64>,
    pub k_g: Vec<f64>,
    pub k_b: Vec<f64>,
    pub b_r: f64,
    pub b_g: f64,
    pub c: f64,
}

/// A quadratic convolutional layer: `num_maps` feature maps over
/// `kernel × kernel` windows of a `channels`-deep input.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConvLayerParams {
    pub kernel: usize,
    pub channels: usize,
    pub maps: Vec<QuadConvMap>,
}

impl QuadConvLayerParams {
    /// Random initialization; per map the draw order is
    /// `k_r, k_g, k_b, b_r, b_g, c`.
    pub fn init(
        num_maps: usize,
        kernel: usize,
        channels: usize,
        rng: &mut RandomSource,
        half_range: f64,
    ) -> Self {
        let n = kernel * kernel * channels;
        let maps = (0..num_maps)
            .map(|_| QuadConvMap {
                k_r: uniform_init(rng, n, half_range),
                k_g: uniform_init(rng, n, half_range),
                k_b: uniform_init(rng, n, half_range),
                b_r: rng.uniform(-half_range, half_range),
                b_g: rng.uniform(-half_range, half_range),
                c: rng.uniform(-half_range, half_range),
            })
            .collect();
        QuadConvLayerParams {
            kernel,
            channels,
            maps,
        }
    }

    pub fn num_maps(&self) -> usize {
        self.maps.len()
    }

    pub fn kernel_len(&self) -> usize {
        self.kernel * self.kernel * self.channels
    }
}

/// Saved activations from a quadratic convolution forward pass. The two
/// affine factors are kept per map and window, exactly like the dense
/// layer cache.
#[derive(Debug, Clone)]
pub struct QuadConvCache {
    pub input: ImageGrid,
    pub s_r: ImageGrid,
    pub s_g: ImageGrid,
    pub output: ImageGrid,
}

/// Gradients for one quadratic feature map, summed over windows.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConvMapGrads {
    pub k_r: Vec<f64>,
    pub k_g: Vec<f64>,
    pub k_b: Vec<f64>,
    pub b_r: f64,
    pub b_g: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadConvGrads {
    pub maps: Vec<QuadConvMapGrads>,
    pub d_input: ImageGrid,
}

fn check_conv_dims(kernel: usize, img: &ImageGrid, channels: usize) -> Result<(usize, usize)> {
    if img.channels() != channels {
        return Err(Error::DimensionMismatch {
            context: "conv input channels",
            expected: channels,
            actual: img.channels(),
        });
    }
    if kernel > img.height() || kernel > img.width() {
        return Err(Error::invalid(
            "conv input",
            format!(
                "kernel {kernel} larger than input {}x{}",
                img.height(),
                img.width()
            ),
        ));
    }
    Ok((img.height() - kernel + 1, img.width() - kernel + 1))
}

/// Gathers the `k·k·channels` window at `(oy, ox)` into `buf`,
/// channel-major then row-major — the same order the kernels use.
#[inline]
fn gather_window(img: &ImageGrid, kernel: usize, oy: usize, ox: usize, buf: &mut [f64]) {
    let mut i = 0;
    for c in 0..img.channels() {
        for ky in 0..kernel {
            for kx in 0..kernel {
                buf[i] = img.get(c, oy + ky, ox + kx);
                i += 1;
            }
        }
    }
}

/// Forward pass of the quadratic convolution over all valid windows.
pub fn conv2_forward(params: &QuadConvLayerParams, img: &ImageGrid) -> Result<QuadConvCache> {
    let (oh, ow) = check_conv_dims(params.kernel, img, params.channels)?;
    let f = params.num_maps();
    let mut s_r = ImageGrid::zeros(f, oh, ow);
    let mut s_g = ImageGrid::zeros(f, oh, ow);
    let mut output = ImageGrid::zeros(f, oh, ow);
    let mut window = vec![0.0; params.kernel_len()];

    for oy in 0..oh {
        for ox in 0..ow {
            gather_window(img, params.kernel, oy, ox, &mut window);
            for (m, map) in params.maps.iter().enumerate() {
                let mut r = map.b_r;
                let mut g = map.b_g;
                let mut b = 0.0;
                for (i, &w) in window.iter().enumerate() {
                    r += map.k_r[i] * w;
                    g += map.k_g[i] * w;
                    b += map.k_b[i] * w * w;
                }
                s_r.set(m, oy, ox, r);
                s_g.set(m, oy, ox, g);
                output.set(m, oy, ox, sigmoid(r * g + b + map.c));
            }
        }
    }
    Ok(QuadConvCache {
        input: img.clone(),
        s_r,
        s_g,
        output,
    })
}

/// Backward pass. `delta_maps[m, oy, ox]` is `dE/d net` for map `m` at
/// window `(oy, ox)`; kernel gradients accumulate over windows and the
/// input gradient scatter-adds per window.
pub fn conv2_backward(
    params: &QuadConvLayerParams,
    cache: &QuadConvCache,
    delta_maps: &ImageGrid,
) -> Result<QuadConvGrads> {
    let (oh, ow) = check_conv_dims(params.kernel, &cache.input, params.channels)?;
    if delta_maps.channels() != params.num_maps()
        || delta_maps.height() != oh
        || delta_maps.width() != ow
    {
        return Err(Error::DimensionMismatch {
            context: "conv2_backward delta_maps",
            expected: params.num_maps() * oh * ow,
            actual: delta_maps.as_slice().len(),
        });
    }

    let n = params.kernel_len();
    let mut grads: Vec<QuadConvMapGrads> = (0..params.num_maps())
        .map(|_| QuadConvMapGrads {
            k_r: vec![0.0; n],
            k_g: vec![0.0; n],
            k_b: vec![0.0; n],
            b_r: 0.0,
            b_g: 0.0,
            c: 0.0,
        })
        .collect();
    let mut d_input = ImageGrid::zeros(
        cache.input.channels(),
        cache.input.height(),
        cache.input.width(),
    );
    let mut window = vec![0.0; n];

    for oy in 0..oh {
        for ox in 0..ow {
            gather_window(&cache.input, params.kernel, oy, ox, &mut window);
            for (m, map) in params.maps.iter().enumerate() {
                let d = delta_maps.get(m, oy, ox);
                if d == 0.0 {
                    continue;
                }
                let sr = cache.s_r.get(m, oy, ox);
                let sg = cache.s_g.get(m, oy, ox);
                let g = &mut grads[m];
                g.b_r += d * sg;
                g.b_g += d * sr;
                g.c += d;
                let mut i = 0;
                for c in 0..cache.input.channels() {
                    for ky in 0..params.kernel {
                        for kx in 0..params.kernel {
                            let w = window[i];
                            g.k_r[i] += d * w * sg;
                            g.k_g[i] += d * w * sr;
                            g.k_b[i] += d * w * w;
                            d_input.add(
                                c,
                                oy + ky,
                                ox + kx,
                                d * (map.k_r[i] * sg + map.k_g[i] * sr + 2.0 * map.k_b[i] * w),
                            );
                            i += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(QuadConvGrads {
        maps: grads,
        d_input,
    })
}

/// First-order feature map: plain inner product plus bias.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderConvMap {
    pub k: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderConvLayerParams {
    pub kernel: usize,
    pub channels: usize,
    pub maps: Vec<FirstOrderConvMap>,
}

impl FirstOrderConvLayerParams {
    /// Random initialization; per map draws `k` then `b`.
    pub fn init(
        num_maps: usize,
        kernel: usize,
        channels: usize,
        rng: &mut RandomSource,
        half_range: f64,
    ) -> Self {
        let n = kernel * kernel * channels;
        let maps = (0..num_maps)
            .map(|_| FirstOrderConvMap {
                k: uniform_init(rng, n, half_range),
                b: rng.uniform(-half_range, half_range),
            })
            .collect();
        FirstOrderConvLayerParams {
            kernel,
            channels,
            maps,
        }
    }

    pub fn num_maps(&self) -> usize {
        self.maps.len()
    }

    pub fn kernel_len(&self) -> usize {
        self.kernel * self.kernel * self.channels
    }
}

#[derive(Debug, Clone)]
pub struct FirstOrderConvCache {
    pub input: ImageGrid,
    pub output: ImageGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderConvMapGrads {
    pub k: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderConvGrads {
    pub maps: Vec<FirstOrderConvMapGrads>,
    pub d_input: ImageGrid,
}

pub fn first_order_conv_forward(
    params: &FirstOrderConvLayerParams,
    img: &ImageGrid,
) -> Result<FirstOrderConvCache> {
    let (oh, ow) = check_conv_dims(params.kernel, img, params.channels)?;
    let mut output = ImageGrid::zeros(params.num_maps(), oh, ow);
    let mut window = vec![0.0; params.kernel_len()];
    for oy in 0..oh {
        for ox in 0..ow {
            gather_window(img, params.kernel, oy, ox, &mut window);
            for (m, map) in params.maps.iter().enumerate() {
                let mut z = map.b;
                for (i, &w) in window.iter().enumerate() {
                    z += map.k[i] * w;
                }
                output.set(m, oy, ox, sigmoid(z));
            }
        }
    }
    Ok(FirstOrderConvCache {
        input: img.clone(),
        output,
    })
}

pub fn first_order_conv_backward(
    params: &FirstOrderConvLayerParams,
    cache: &FirstOrderConvCache,
    delta_maps: &ImageGrid,
) -> Result<FirstOrderConvGrads> {
    let (oh, ow) = check_conv_dims(params.kernel, &cache.input, params.channels)?;
    if delta_maps.channels() != params.num_maps()
        || delta_maps.height() != oh
        || delta_maps.width() != ow
    {
        return Err(Error::DimensionMismatch {
            context: "first_order_conv_backward delta_maps",
            expected: params.num_maps() * oh * ow,
            actual: delta_maps.as_slice().len(),
        });
    }
    let n = params.kernel_len();
    let mut grads: Vec<FirstOrderConvMapGrads> = (0..params.num_maps())
        .map(|_| FirstOrderConvMapGrads {
            k: vec![0.0; n],
            b: 0.0,
        })
        .collect();
    let mut d_input = ImageGrid::zeros(
        cache.input.channels(),
        cache.input.height(),
        cache.input.width(),
    );
    let mut window = vec![0.0; n];
    for oy in 0..oh {
        for ox in 0..ow {
            gather_window(&cache.input, params.kernel, oy, ox, &mut window);
            for (m, map) in params.maps.iter().enumerate() {
                let d = delta_maps.get(m, oy, ox);
                if d == 0.0 {
                    continue;
                }
                let g = &mut grads[m];
                g.b += d;
                let mut i = 0;
                for c in 0..cache.input.channels() {
                    for ky in 0..params.kernel {
                        for kx in 0..params.kernel {
                            g.k[i] += d * window[i];
                            d_input.add(c, oy + ky, ox + kx, d * map.k[i]);
                            i += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(FirstOrderConvGrads {
        maps: grads,
        d_input,
    })
}

/// Mean pooling over non-overlapping `window × window` blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolSpec {
    pub window: usize,
}

#[derive(Debug, Clone)]
pub struct PoolCache {
    pub window: usize,
    pub in_channels: usize,
    pub in_height: usize,
    pub in_width: usize,
}

pub fn pool_forward(spec: PoolSpec, maps: &ImageGrid) -> Result<(ImageGrid, PoolCache)> {
    let w = spec.window;
    if w == 0 || maps.height() % w != 0 || maps.width() % w != 0 {
        return Err(Error::invalid(
            "pool window",
            format!(
                "window {w} does not divide {}x{}",
                maps.height(),
                maps.width()
            ),
        ));
    }
    let (oh, ow) = (maps.height() / w, maps.width() / w);
    let mut pooled = ImageGrid::zeros(maps.channels(), oh, ow);
    let norm = 1.0 / (w * w) as f64;
    for c in 0..maps.channels() {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut sum = 0.0;
                for dy in 0..w {
                    for dx in 0..w {
                        sum += maps.get(c, oy * w + dy, ox * w + dx);
                    }
                }
                pooled.set(c, oy, ox, sum * norm);
            }
        }
    }
    Ok((
        pooled,
        PoolCache {
            window: w,
            in_channels: maps.channels(),
            in_height: maps.height(),
            in_width: maps.width(),
        },
    ))
}

/// Distributes each pooled delta uniformly over its window (mean pool
/// backward: every contributing cell gets `delta / window²`).
pub fn pool_backward(cache: &PoolCache, delta: &ImageGrid) -> Result<ImageGrid> {
    let w = cache.window;
    let (oh, ow) = (cache.in_height / w, cache.in_width / w);
    if delta.channels() != cache.in_channels || delta.height() != oh || delta.width() != ow {
        return Err(Error::DimensionMismatch {
            context: "pool_backward delta",
            expected: cache.in_channels * oh * ow,
            actual: delta.as_slice().len(),
        });
    }
    let mut out = ImageGrid::zeros(cache.in_channels, cache.in_height, cache.in_width);
    let norm = 1.0 / (w * w) as f64;
    for c in 0..cache.in_channels {
        for oy in 0..oh {
            for ox in 0..ow {
                let d = delta.get(c, oy, ox) * norm;
                for dy in 0..w {
                    for dx in 0..w {
                        out.set(c, oy * w + dy, ox * w + dx, d);
                    }
                }
            }
        }
    }
    Ok(out)
}
