//! Fully connected feedforward networks with piecewise-linear activations.
//!
//! A network with `L` hidden layers of widths `H_1, …, H_L` on inputs of
//! dimension `d` computes, for every hidden node,
//!
//! ```text
//! ν_{l,h}(x) = σ( γ_{l,h,0} + Σ_k γ_{l,h,k} ν_{l-1,k}(x) ),   ν_{0,k}(x) = x_k,
//! ```
//!
//! and a single affine output node `ν_{L+1,1}`. The sieve space bounds the
//! output in sup-norm by `B`; [`NetworkParams::clipped_forward`] enforces that
//! by clamping the output to `[-B, B]`, which is itself a piecewise-linear
//! composition.
//!
//! # Parameter layout
//!
//! All parameters live in one flat vector `gamma`. Layers are stored in order
//! `1..=L+1`, nodes in order within a layer, and each node stores its
//! intercept first followed by its incoming weights:
//!
//! ```text
//! [γ_{1,1,0}, γ_{1,1,1..H_0}, γ_{1,2,0}, …, γ_{L+1,1,0}, γ_{L+1,1,1..H_L}]
//! ```

mod activation;
mod batch;

pub use activation::ActivationSpec;
pub use batch::BatchScratch;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::seed;

/// Depth, widths, input dimension, output bound and activation of a sieve space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArchRepr", into = "ArchRepr")]
pub struct ArchitectureSpec {
    input_dim: usize,
    widths: Vec<usize>,
    bound: f64,
    activation: ActivationSpec,
    /// `[d, H_1, …, H_L, 1]`
    sizes: Vec<usize>,
    /// Start of each layer block in the flat parameter vector, plus the total.
    offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct ArchRepr {
    input_dim: usize,
    widths: Vec<usize>,
    bound: f64,
    activation: ActivationSpec,
}

impl TryFrom<ArchRepr> for ArchitectureSpec {
    type Error = Error;

    fn try_from(r: ArchRepr) -> Result<Self> {
        ArchitectureSpec::new(r.input_dim, r.widths, r.bound, r.activation)
    }
}

impl From<ArchitectureSpec> for ArchRepr {
    fn from(a: ArchitectureSpec) -> Self {
        ArchRepr { input_dim: a.input_dim, widths: a.widths, bound: a.bound, activation: a.activation }
    }
}

impl ArchitectureSpec {
    pub fn new(input_dim: usize, widths: Vec<usize>, bound: f64, activation: ActivationSpec) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::validation("input dimension must be at least 1"));
        }
        if widths.is_empty() {
            return Err(Error::validation("at least one hidden layer is required"));
        }
        if widths.contains(&0) {
            return Err(Error::validation("hidden widths must be at least 1"));
        }
        if !(bound >= 2.0) || !bound.is_finite() {
            return Err(Error::validation(format!("output bound must be a finite value >= 2, got {bound}")));
        }
        let mut sizes = Vec::with_capacity(widths.len() + 2);
        sizes.push(input_dim);
        sizes.extend_from_slice(&widths);
        sizes.push(1);
        let mut offsets = Vec::with_capacity(sizes.len());
        offsets.push(0);
        for w in sizes.windows(2) {
            let last = *offsets.last().unwrap();
            offsets.push(last + w[1] * (w[0] + 1));
        }
        Ok(ArchitectureSpec { input_dim, widths, bound, activation, sizes, offsets })
    }

    /// ReLU network with `depth` hidden layers all of width `width`.
    pub fn uniform(input_dim: usize, depth: usize, width: usize, bound: f64) -> Result<Self> {
        Self::new(input_dim, vec![width; depth], bound, ActivationSpec::relu())
    }

    pub fn with_bound(&self, bound: f64) -> Result<Self> {
        Self::new(self.input_dim, self.widths.clone(), bound, self.activation.clone())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Number of hidden layers `L`.
    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn activation(&self) -> &ActivationSpec {
        &self.activation
    }

    /// `W = Σ_{l=1}^{L+1} H_l (H_{l-1} + 1)` with `H_0 = d`, `H_{L+1} = 1`.
    pub fn param_count(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Flat index of `γ_{layer,node,k}` (all 1-based except `k`, where 0 is the intercept).
    pub fn param_index(&self, layer: usize, node: usize, k: usize) -> Option<usize> {
        if layer == 0 || layer >= self.sizes.len() {
            return None;
        }
        let fan_in = self.sizes[layer - 1];
        if node == 0 || node > self.sizes[layer] || k > fan_in {
            return None;
        }
        Some(self.offsets[layer - 1] + (node - 1) * (fan_in + 1) + k)
    }

    /// Enumerates `(layer, node, k)` in canonical layout order.
    pub fn layout(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.sizes.windows(2).enumerate().flat_map(|(li, w)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            (1..=fan_out).flat_map(move |h| (0..=fan_in).map(move |k| (li + 1, h, k)))
        })
    }
}

/// Closed-form parameter count for `L` hidden layers of common width `H`.
pub fn uniform_param_count(input_dim: usize, depth: usize, width: usize) -> usize {
    let (d, l, h) = (input_dim, depth, width);
    h * h * (l - 1) + h * (d + l + 1) + 1
}

/// Reusable buffers for forward and reverse passes.
#[derive(Debug, Clone)]
pub struct Scratch {
    acts: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
    raw: f64,
}

impl Scratch {
    pub fn new(arch: &ArchitectureSpec) -> Self {
        let widest = arch.sizes.iter().copied().max().unwrap_or(1);
        Scratch {
            acts: arch.sizes[..arch.sizes.len() - 1].iter().map(|&s| vec![0.0; s]).collect(),
            pre: arch.sizes[..arch.sizes.len() - 1].iter().map(|&s| vec![0.0; s]).collect(),
            delta: vec![0.0; widest],
            delta_prev: vec![0.0; widest],
            raw: 0.0,
        }
    }
}

/// An architecture together with its flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    arch: ArchitectureSpec,
    gamma: Vec<f64>,
}

impl NetworkParams {
    pub fn new(arch: ArchitectureSpec, gamma: Vec<f64>) -> Result<Self> {
        check_dim(arch.param_count(), gamma.len())?;
        Ok(NetworkParams { arch, gamma })
    }

    pub fn zeros(arch: ArchitectureSpec) -> Self {
        let gamma = vec![0.0; arch.param_count()];
        NetworkParams { arch, gamma }
    }

    /// Constant network: every parameter zero except the output intercept.
    pub fn constant(arch: ArchitectureSpec, value: f64) -> Self {
        let mut p = Self::zeros(arch);
        let idx = p.arch.param_index(p.arch.depth() + 1, 1, 0).unwrap();
        p.gamma[idx] = value;
        p
    }

    /// Random parameters, each drawn from `N(0, 2 / fan_in)` of its layer.
    pub fn init(arch: ArchitectureSpec, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let mut gamma = Vec::with_capacity(arch.param_count());
        for w in arch.sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
            gamma.extend((0..fan_out * (fan_in + 1)).map(|_| normal.sample(&mut rng)));
        }
        NetworkParams { arch, gamma }
    }

    pub fn arch(&self) -> &ArchitectureSpec {
        &self.arch
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn gamma_mut(&mut self) -> &mut [f64] {
        &mut self.gamma
    }

    pub fn into_gamma(self) -> Vec<f64> {
        self.gamma
    }

    pub fn scratch(&self) -> Scratch {
        Scratch::new(&self.arch)
    }

    /// Unclipped output `ν_{L+1,1}(x)`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.arch.input_dim, x.len())?;
        Ok(self.raw_with(x, &mut self.scratch()))
    }

    /// Output clamped to `[-B, B]`.
    pub fn clipped_forward(&self, x: &[f64]) -> Result<f64> {
        Ok(self.clamp(self.forward(x)?))
    }

    /// `upstream · ∂ clipped_forward(x) / ∂γ`.
    pub fn gradient(&self, x: &[f64], upstream: f64) -> Result<Vec<f64>> {
        check_dim(self.arch.input_dim, x.len())?;
        let mut grad = vec![0.0; self.gamma.len()];
        let mut scratch = self.scratch();
        self.accumulate_gradient(x, upstream, &mut scratch, &mut grad);
        Ok(grad)
    }

    #[inline]
    fn clamp(&self, raw: f64) -> f64 {
        raw.clamp(-self.arch.bound, self.arch.bound)
    }

    /// Clamp derivative under the left-piece convention: slopes 0, 1, 0 with
    /// breakpoints at `-B` and `B`.
    #[inline]
    fn clamp_derivative(&self, raw: f64) -> f64 {
        if raw > -self.arch.bound && raw <= self.arch.bound {
            1.0
        } else {
            0.0
        }
    }

    /// Raw forward pass that records activations in `scratch`. `x` must have
    /// length `input_dim`; this is not re-checked.
    pub fn raw_with(&self, x: &[f64], scratch: &mut Scratch) -> f64 {
        let act = &self.arch.activation;
        let sizes = &self.arch.sizes;
        let n_layers = sizes.len() - 1;
        scratch.acts[0].copy_from_slice(x);
        let mut raw = 0.0;
        for li in 0..n_layers {
            let fan_in = sizes[li];
            let block = &self.gamma[self.arch.offsets[li]..self.arch.offsets[li + 1]];
            if li + 1 == n_layers {
                let row = &block[..fan_in + 1];
                raw = row[0] + dot(&row[1..], &scratch.acts[li]);
            } else {
                let (prev, rest) = scratch.acts.split_at_mut(li + 1);
                let input = &prev[li];
                let out = &mut rest[0];
                let pre = &mut scratch.pre[li + 1];
                for (h, row) in block.chunks_exact(fan_in + 1).enumerate() {
                    let z = row[0] + dot(&row[1..], input);
                    pre[h] = z;
                    out[h] = act.eval(z);
                }
            }
        }
        scratch.raw = raw;
        raw
    }

    /// Clipped output for `x` using caller-provided buffers.
    pub fn eval_with(&self, x: &[f64], scratch: &mut Scratch) -> f64 {
        self.clamp(self.raw_with(x, scratch))
    }

    /// Runs a forward pass at `x`, adds `upstream · ∂ clipped / ∂γ` into
    /// `grad`, and returns the clipped output.
    pub fn accumulate_gradient(&self, x: &[f64], upstream: f64, scratch: &mut Scratch, grad: &mut [f64]) -> f64 {
        let raw = self.raw_with(x, scratch);
        self.backprop_recorded(upstream, scratch, grad);
        self.clamp(raw)
    }

    /// Reverse pass for the input most recently evaluated with
    /// [`raw_with`](Self::raw_with) or [`eval_with`](Self::eval_with) on
    /// `scratch`; adds `upstream · ∂ clipped / ∂γ` into `grad`.
    pub fn backprop_recorded(&self, upstream: f64, scratch: &mut Scratch, grad: &mut [f64]) {
        let top = upstream * self.clamp_derivative(scratch.raw);
        if top != 0.0 {
            self.backprop(top, scratch, grad);
        }
    }

    fn backprop(&self, top: f64, scratch: &mut Scratch, grad: &mut [f64]) {
        let act = &self.arch.activation;
        let sizes = &self.arch.sizes;
        let n_layers = sizes.len() - 1;
        scratch.delta[0] = top;
        for li in (0..n_layers).rev() {
            let fan_in = sizes[li];
            let fan_out = sizes[li + 1];
            let lo = self.arch.offsets[li];
            let hi = self.arch.offsets[li + 1];
            let block = &self.gamma[lo..hi];
            let gblock = &mut grad[lo..hi];
            let input = &scratch.acts[li];
            let propagate = li > 0;
            if propagate {
                scratch.delta_prev[..fan_in].fill(0.0);
            }
            for h in 0..fan_out {
                let dz = scratch.delta[h];
                if dz == 0.0 {
                    continue;
                }
                let row = &block[h * (fan_in + 1)..(h + 1) * (fan_in + 1)];
                let grow = &mut gblock[h * (fan_in + 1)..(h + 1) * (fan_in + 1)];
                grow[0] += dz;
                for (g, &a) in grow[1..].iter_mut().zip(input) {
                    *g += dz * a;
                }
                if propagate {
                    for (dp, &w) in scratch.delta_prev[..fan_in].iter_mut().zip(&row[1..]) {
                        *dp += dz * w;
                    }
                }
            }
            if propagate {
                let pre = &scratch.pre[li];
                for ((d, &dp), &z) in scratch.delta[..fan_in].iter_mut().zip(&scratch.delta_prev[..fan_in]).zip(pre) {
                    *d = dp * act.derivative(z);
                }
            }
        }
    }

    /// Smallest distance from any hidden pre-activation at `x` to an activation
    /// breakpoint, and the distance of the raw output to the clamp edges.
    pub fn kink_margins(&self, x: &[f64]) -> Result<(f64, f64)> {
        check_dim(self.arch.input_dim, x.len())?;
        let mut scratch = self.scratch();
        let raw = self.raw_with(x, &mut scratch);
        let act = &self.arch.activation;
        let hidden = scratch.pre[1..].iter().flatten().map(|&z| act.distance_to_kink(z)).fold(f64::INFINITY, f64::min);
        let clamp = self.arch.bound - raw.abs();
        Ok((hidden, clamp))
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
