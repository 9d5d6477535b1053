//! Central-difference gradient oracle.
//!
//! [`numeric_grad`] perturbs every network parameter by ±ε and measures
//! the loss through the forward pass alone — it never touches any
//! backward code path, which is what makes it an independent arbiter for
//! the analytic formulas. [`compare`] applies the tolerance rule
//! `|a − n| ≤ atol + rtol·max(|a|, |n|)` per parameter.
//!
//! At ε = 1e-5 in 64-bit arithmetic, truncation error is O(ε²) ≈ 1e-10
//! and rounding error is O(u/ε) ≈ 1e-11, both far below the default
//! rtol of 1e-4: a tolerance failure means a wrong derivation, not
//! numerics.

use std::fmt::Write as _;

use crate::datasets::LabeledSample;
use crate::error::{Error, Result};
use crate::network::{half_squared_error, Network, NetworkGrads, ParamLabel};

pub const DEFAULT_EPSILON: f64 = 1e-5;
pub const DEFAULT_RTOL: f64 = 1e-4;
pub const DEFAULT_ATOL: f64 = 1e-7;

/// One parameter's analytic-vs-numeric comparison.
#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub label: ParamLabel,
    pub analytic: f64,
    pub numeric: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub pass: bool,
}

/// Full comparison report, entries sorted by relative error descending.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub max_rel_error: f64,
    pub pass: bool,
    pub epsilon: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl GradCheckReport {
    /// Aligned text table, worst entries first.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<18} {:>24} {:>24} {:>12} {:>12}  status",
            "parameter", "analytic", "numeric", "abs err", "rel err"
        );
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{:<18} {:>24.16e} {:>24.16e} {:>12.4e} {:>12.4e}  {}",
                e.label.to_string(),
                e.analytic,
                e.numeric,
                e.abs_error,
                e.rel_error,
                if e.pass { "ok" } else { "FAIL" }
            );
        }
        let _ = writeln!(
            out,
            "max relative error {:.4e} at eps={:.1e} rtol={:.1e} atol={:.1e}: {}",
            self.max_rel_error,
            self.epsilon,
            self.rtol,
            self.atol,
            if self.pass { "PASS" } else { "FAIL" }
        );
        out
    }

    /// Machine-readable form: one `key=value` record per line.
    pub fn lines(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(
                out,
                "param={} analytic={:.16e} numeric={:.16e} abs={:.16e} rel={:.16e} pass={}",
                e.label, e.analytic, e.numeric, e.abs_error, e.rel_error, e.pass
            );
        }
        out
    }
}

/// Loss of one sample through the forward pass only.
fn forward_loss(net: &Network, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(half_squared_error(&net.predict(x)?, y))
}

/// Central finite differences of the single-sample loss with respect to
/// every parameter, in canonical parameter order.
pub fn numeric_grad_xy(net: &Network, x: &[f64], y: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if epsilon <= 0.0 {
        return Err(Error::invalid("epsilon", format!("{epsilon}")));
    }
    let mut probe = net.clone();
    let n = net.num_params();
    let mut grads = Vec::with_capacity(n);
    for idx in 0..n {
        let original = probe.param(idx);
        probe.set_param(idx, original + epsilon);
        let plus = forward_loss(&probe, x, y)?;
        probe.set_param(idx, original - epsilon);
        let minus = forward_loss(&probe, x, y)?;
        probe.set_param(idx, original);
        let d = (plus - minus) / (2.0 * epsilon);
        if !d.is_finite() {
            let label = net.param_labels()[idx].clone();
            return Err(Error::NonFinitePerturbation {
                parameter: label.to_string(),
            });
        }
        grads.push(d);
    }
    Ok(grads)
}

/// As [`numeric_grad_xy`], with the target taken from the sample label.
pub fn numeric_grad(net: &Network, sample: &LabeledSample, epsilon: f64) -> Result<Vec<f64>> {
    numeric_grad_xy(net, &sample.features, &[sample.label as f64], epsilon)
}

/// Compares flat analytic and numeric gradients under the tolerance rule
/// `|a − n| ≤ atol + rtol·max(|a|, |n|)`.
pub fn compare(
    labels: &[ParamLabel],
    analytic: &[f64],
    numeric: &[f64],
    epsilon: f64,
    rtol: f64,
    atol: f64,
) -> Result<GradCheckReport> {
    if analytic.len() != numeric.len() || analytic.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "gradcheck compare",
            expected: analytic.len(),
            actual: numeric.len(),
        });
    }
    let mut entries: Vec<GradCheckEntry> = labels
        .iter()
        .zip(analytic.iter().zip(numeric))
        .map(|(label, (&a, &n))| {
            let abs_error = (a - n).abs();
            let scale = a.abs().max(n.abs());
            let rel_error = if scale > 0.0 { abs_error / scale } else { 0.0 };
            GradCheckEntry {
                label: label.clone(),
                analytic: a,
                numeric: n,
                abs_error,
                rel_error,
                pass: abs_error <= atol + rtol * scale,
            }
        })
        .collect();
    entries.sort_by(|x, y| y.rel_error.partial_cmp(&x.rel_error).expect("finite errors"));
    let max_rel_error = entries.first().map(|e| e.rel_error).unwrap_or(0.0);
    let pass = entries.iter().all(|e| e.pass);
    Ok(GradCheckReport {
        entries,
        max_rel_error,
        pass,
        epsilon,
        rtol,
        atol,
    })
}

/// Backprop vs. finite differences for one (x, y) pair at the default
/// tolerances.
pub fn check_network(net: &Network, x: &[f64], y: &[f64], epsilon: f64) -> Result<GradCheckReport> {
    let analytic = net.backprop_sample(x, y)?;
    let numeric = numeric_grad_xy(net, x, y, epsilon)?;
    compare(
        &net.param_labels(),
        &analytic.flat(),
        &numeric,
        epsilon,
        DEFAULT_RTOL,
        DEFAULT_ATOL,
    )
}

/// Deliberately wrong quadratic-layer gradients, kept executable.
///
/// These are the two "plausible neighbor" derivations of the quadratic
/// unit's partials that look right on paper but are not:
///
/// - *same-branch bias*: inside `∂net/∂w_r[k]` the affine factor is
///   written with the layer's own `b_r` instead of the opposite branch's
///   `b_g` (and symmetrically for the g-branch).
/// - *summed square term*: `∂net/∂x[k]` takes `2·Σ_i w_b[i]·x[i]` — the
///   whole squared-term sum — instead of the single matching summand
///   `2·w_b[k]·x[k]`.
///
/// The regression suite runs full backprop with these forms substituted
/// and demands that the finite-difference comparison fails, documenting
/// why the implemented formulas are the ones the oracle confirms.
pub mod miswired {
    use super::*;
    use crate::layer::{quad_param_grads, QuadLayerGrads, QuadLayerParams};
    use crate::network::{Layer, LayerGrads};
    use crate::numeric::sigmoid_prime_from_output;

    /// Which wrong form to substitute.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum Variant {
        SameBranchBias,
        SummedSquareTerm,
    }

    fn miswired_quad_grads(
        cache: &crate::layer::ForwardCache,
        params: &QuadLayerParams,
        delta: &[f64],
        variant: Variant,
    ) -> Result<QuadLayerGrads> {
        // Start from the correct gradients and overwrite the affected part.
        let mut g = quad_param_grads(cache, params, delta)?;
        let (p, q) = (params.in_dim(), params.out_dim());
        match variant {
            Variant::SameBranchBias => {
                for j in 0..q {
                    let d = delta[j];
                    // Wrong affine factors: own-branch bias swapped in.
                    let sg_wrong = cache.s_g[j] - params.b_g[j] + params.b_r[j];
                    let sr_wrong = cache.s_r[j] - params.b_r[j] + params.b_g[j];
                    for (k, &x) in cache.input.iter().enumerate() {
                        g.w_r[(j, k)] = d * x * sg_wrong;
                        g.w_g[(j, k)] = d * x * sr_wrong;
                    }
                }
            }
            Variant::SummedSquareTerm => {
                let mut d_input = vec![0.0; p];
                for j in 0..q {
                    let d = delta[j];
                    let squared_sum: f64 = cache
                        .input
                        .iter()
                        .enumerate()
                        .map(|(i, &x)| params.w_b[(j, i)] * x)
                        .sum();
                    for (k, _) in cache.input.iter().enumerate() {
                        d_input[k] += d
                            * (params.w_r[(j, k)] * cache.s_g[j]
                                + params.w_g[(j, k)] * cache.s_r[j]
                                + 2.0 * squared_sum);
                    }
                }
                g.d_input = d_input;
            }
        }
        Ok(g)
    }

    /// Full-network backprop over quadratic layers with the wrong form
    /// substituted. Only pure quadratic stacks are supported; that is
    /// all the regression suite needs.
    pub fn backprop_sample_variant(
        net: &Network,
        x: &[f64],
        y: &[f64],
        variant: Variant,
    ) -> Result<NetworkGrads> {
        let (prediction, caches) = net.forward(x)?;
        let mut d_output: Vec<f64> = prediction.iter().zip(y).map(|(p, t)| p - t).collect();
        let mut grads_rev = Vec::with_capacity(net.layers().len());
        for (layer, cache) in net.layers().iter().zip(caches.iter()).rev() {
            let (Layer::Quad(params), crate::network::LayerCache::Quad(c)) = (layer, cache)
            else {
                return Err(Error::invalid(
                    "miswired backprop",
                    "only quadratic stacks are supported",
                ));
            };
            let delta: Vec<f64> = d_output
                .iter()
                .zip(&c.output)
                .map(|(d, o)| d * sigmoid_prime_from_output(*o))
                .collect();
            let g = miswired_quad_grads(c, params, &delta, variant)?;
            d_output = g.d_input.clone();
            grads_rev.push(LayerGrads::Quad(g));
        }
        grads_rev.reverse();
        Ok(NetworkGrads { layers: grads_rev })
    }

    /// Convenience: run the miswired backprop against finite differences.
    pub fn check_variant(
        net: &Network,
        x: &[f64],
        y: &[f64],
        variant: Variant,
    ) -> Result<GradCheckReport> {
        let analytic = backprop_sample_variant(net, x, y, variant)?;
        let numeric = numeric_grad_xy(net, x, y, DEFAULT_EPSILON)?;
        compare(
            &net.param_labels(),
            &analytic.flat(),
            &numeric,
            DEFAULT_EPSILON,
            DEFAULT_RTOL,
            DEFAULT_ATOL,
        )
    }

}
