//! Forward and reverse passes over a block of inputs at once.
//!
//! Activations are stored node-major (`acts[l][k * rows + t]`) so the inner
//! loops run over observations and vectorize.

use super::{ArchitectureSpec, NetworkParams};

/// Buffers for batched passes over up to `capacity` rows.
#[derive(Debug, Clone)]
pub struct BatchScratch {
    rows: usize,
    capacity: usize,
    acts: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    raw: Vec<f64>,
    out: Vec<f64>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl BatchScratch {
    pub fn new(arch: &ArchitectureSpec, capacity: usize) -> Self {
        let hidden = &arch.sizes[..arch.sizes.len() - 1];
        let widest = arch.sizes.iter().copied().max().unwrap_or(1);
        BatchScratch {
            rows: 0,
            capacity,
            acts: hidden.iter().map(|&s| vec![0.0; s * capacity]).collect(),
            pre: hidden.iter().map(|&s| vec![0.0; s * capacity]).collect(),
            raw: vec![0.0; capacity],
            out: vec![0.0; capacity],
            delta: vec![0.0; widest * capacity],
            delta_prev: vec![0.0; widest * capacity],
        }
    }

    /// Clipped outputs of the last forward pass.
    pub fn outputs(&self) -> &[f64] {
        &self.out[..self.rows]
    }
}

/// Sum of `a[t] * b[t]` with eight fixed partial sums.
#[inline]
fn dot_lanes(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `z[t] += Σ_k w[k] · a[k * rows + t]`, four inputs per sweep over `z`.
#[inline]
fn axpy_rows(z: &mut [f64], w: &[f64], a: &[f64], rows: usize) {
    let mut quads = w.chunks_exact(4);
    let mut k = 0;
    for q in quads.by_ref() {
        let (a0, a1, a2, a3) = (
            &a[k * rows..(k + 1) * rows],
            &a[(k + 1) * rows..(k + 2) * rows],
            &a[(k + 2) * rows..(k + 3) * rows],
            &a[(k + 3) * rows..(k + 4) * rows],
        );
        for t in 0..z.len() {
            z[t] += (q[0] * a0[t] + q[1] * a1[t]) + (q[2] * a2[t] + q[3] * a3[t]);
        }
        k += 4;
    }
    for &wk in quads.remainder() {
        for (zt, &x) in z.iter_mut().zip(&a[k * rows..(k + 1) * rows]) {
            *zt += wk * x;
        }
        k += 1;
    }
}

#[inline]
fn sum_lanes(a: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let tail: f64 = ca.remainder().iter().sum();
    for x in ca {
        for i in 0..8 {
            acc[i] += x[i];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

impl NetworkParams {
    pub fn batch_scratch(&self, capacity: usize) -> BatchScratch {
        BatchScratch::new(&self.arch, capacity)
    }

    /// Clipped outputs for `rows` inputs stored row-major in `xs`. Dimensions
    /// are not re-checked.
    pub fn forward_batch<'s>(&self, xs: &[f64], rows: usize, bs: &'s mut BatchScratch) -> &'s [f64] {
        assert!(rows <= bs.capacity, "batch of {rows} rows exceeds scratch capacity {}", bs.capacity);
        let act = &self.arch.activation;
        let sizes = &self.arch.sizes;
        let n_layers = sizes.len() - 1;
        let d = sizes[0];
        bs.rows = rows;
        for t in 0..rows {
            for k in 0..d {
                bs.acts[0][k * rows + t] = xs[t * d + k];
            }
        }
        for li in 0..n_layers {
            let fan_in = sizes[li];
            let block = &self.gamma[self.arch.offsets[li]..self.arch.offsets[li + 1]];
            let last = li + 1 == n_layers;
            let (prev, rest) = bs.acts.split_at_mut(li + 1);
            let input = &prev[li];
            for (h, row) in block.chunks_exact(fan_in + 1).enumerate() {
                let z = if last { &mut bs.raw[..rows] } else { &mut bs.pre[li + 1][h * rows..(h + 1) * rows] };
                z.fill(row[0]);
                axpy_rows(z, &row[1..], input, rows);
                if !last {
                    let out = &mut rest[0][h * rows..(h + 1) * rows];
                    match act.single_kink() {
                        Some((kb, kv, s0, s1)) => {
                            for (o, &zt) in out.iter_mut().zip(z.iter()) {
                                *o = kv + if zt > kb { s1 } else { s0 } * (zt - kb);
                            }
                        }
                        None => {
                            for (o, &zt) in out.iter_mut().zip(z.iter()) {
                                *o = act.eval(zt);
                            }
                        }
                    }
                }
            }
        }
        let b = self.arch.bound;
        for (o, &r) in bs.out[..rows].iter_mut().zip(&bs.raw[..rows]) {
            *o = r.clamp(-b, b);
        }
        &bs.out[..rows]
    }

    /// Adds `Σ_t upstream[t] · ∂ clipped(x_t) / ∂γ` into `grad` for the inputs
    /// of the last [`forward_batch`](Self::forward_batch) call on `bs`.
    pub fn backprop_batch(&self, upstream: &[f64], bs: &mut BatchScratch, grad: &mut [f64]) {
        let rows = bs.rows;
        let act = &self.arch.activation;
        let sizes = &self.arch.sizes;
        let n_layers = sizes.len() - 1;
        let b = self.arch.bound;
        for ((d, &r), &u) in bs.delta[..rows].iter_mut().zip(&bs.raw[..rows]).zip(&upstream[..rows]) {
            *d = if r > -b && r <= b { u } else { 0.0 };
        }
        for li in (0..n_layers).rev() {
            let fan_in = sizes[li];
            let fan_out = sizes[li + 1];
            let lo = self.arch.offsets[li];
            let hi = self.arch.offsets[li + 1];
            let block = &self.gamma[lo..hi];
            let gblock = &mut grad[lo..hi];
            let input = &bs.acts[li];
            let propagate = li > 0;
            for h in 0..fan_out {
                let dz = &bs.delta[h * rows..(h + 1) * rows];
                let grow = &mut gblock[h * (fan_in + 1)..(h + 1) * (fan_in + 1)];
                grow[0] += sum_lanes(dz);
                for k in 0..fan_in {
                    grow[k + 1] += dot_lanes(dz, &input[k * rows..(k + 1) * rows]);
                }
            }
            if propagate {
                let mut col = vec![0.0; fan_out];
                for k in 0..fan_in {
                    for (h, c) in col.iter_mut().enumerate() {
                        *c = block[h * (fan_in + 1) + 1 + k];
                    }
                    let dp = &mut bs.delta_prev[k * rows..(k + 1) * rows];
                    dp.fill(0.0);
                    axpy_rows(dp, &col, &bs.delta[..fan_out * rows], rows);
                }
            }
            if propagate {
                let pre = &bs.pre[li];
                let (delta, prev) = (&mut bs.delta[..fan_in * rows], &bs.delta_prev[..fan_in * rows]);
                match act.single_kink() {
                    Some((kb, _, s0, s1)) => {
                        for ((d, &p), &z) in delta.iter_mut().zip(prev).zip(&pre[..fan_in * rows]) {
                            *d = p * if z > kb { s1 } else { s0 };
                        }
                    }
                    None => {
                        for ((d, &p), &z) in delta.iter_mut().zip(prev).zip(&pre[..fan_in * rows]) {
                            *d = p * act.derivative(z);
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::ActivationSpec;
    use super::*;

    #[test]
    fn batch_matches_single_passes() {
        let arch = ArchitectureSpec::new(3, vec![5, 4, 3], 2.5, ActivationSpec::leaky_relu(0.1)).unwrap();
        let p = NetworkParams::init(arch, 12);
        let rows = 37;
        let xs: Vec<f64> = (0..rows * 3).map(|i| ((i as f64) * 0.731).sin() * 2.0).collect();
        let up: Vec<f64> = (0..rows).map(|t| ((t as f64) * 1.3).cos()).collect();
        let mut bs = p.batch_scratch(64);
        let out = p.forward_batch(&xs, rows, &mut bs).to_vec();
        let mut g_batch = vec![0.0; p.gamma().len()];
        p.backprop_batch(&up, &mut bs, &mut g_batch);

        let mut g_single = vec![0.0; p.gamma().len()];
        let mut s = p.scratch();
        for t in 0..rows {
            let x = &xs[t * 3..(t + 1) * 3];
            let y = p.accumulate_gradient(x, up[t], &mut s, &mut g_single);
            assert!((y - out[t]).abs() < 1e-12);
        }
        for (a, b) in g_batch.iter().zip(&g_single) {
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }
    }
}
