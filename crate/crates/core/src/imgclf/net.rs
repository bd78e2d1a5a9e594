//! The small convolutional network behind the image classifier: three 3x3
//! conv stages, two 2x2 average pools, global average pooling, and a linear
//! head. Everything is f64 and scalar so training is bit-reproducible from
//! its seed.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// A CHW float tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(c: usize, h: usize, w: usize) -> Tensor {
        Tensor {
            c,
            h,
            w,
            data: vec![0.0; c * h * w],
        }
    }

    pub fn from_data(c: usize, h: usize, w: usize, data: Vec<f64>) -> Tensor {
        assert_eq!(data.len(), c * h * w);
        Tensor { c, h, w, data }
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.h + y) * self.w + x]
    }

    #[inline]
    pub fn at_mut(&mut self, c: usize, y: usize, x: usize) -> &mut f64 {
        &mut self.data[(c * self.h + y) * self.w + x]
    }

    fn plane(&self, c: usize) -> &[f64] {
        &self.data[c * self.h * self.w..(c + 1) * self.h * self.w]
    }
}

/// 3x3 convolution, stride 1, zero padding 1 (same-size output).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Conv3x3 {
    pub in_c: usize,
    pub out_c: usize,
    /// out_c x in_c x 3 x 3.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv3x3 {
    fn init(in_c: usize, out_c: usize, rng: &mut StdRng) -> Conv3x3 {
        let std = (2.0 / (in_c as f64 * 9.0)).sqrt();
        let normal = Normal::new(0.0, std).unwrap();
        Conv3x3 {
            in_c,
            out_c,
            weight: (0..out_c * in_c * 9).map(|_| normal.sample(rng)).collect(),
            bias: vec![0.0; out_c],
        }
    }

    fn zeros_like(&self) -> Conv3x3 {
        Conv3x3 {
            in_c: self.in_c,
            out_c: self.out_c,
            weight: vec![0.0; self.weight.len()],
            bias: vec![0.0; self.bias.len()],
        }
    }

    pub fn forward(&self, input: &Tensor) -> Tensor {
        assert_eq!(input.c, self.in_c);
        let (h, w) = (input.h, input.w);
        let mut out = Tensor::zeros(self.out_c, h, w);
        for oc in 0..self.out_c {
            let out_plane =
                &mut out.data[(oc * h) * w..(oc * h) * w + h * w];
            for ic in 0..self.in_c {
                let kernel = &self.weight[(oc * self.in_c + ic) * 9..(oc * self.in_c + ic) * 9 + 9];
                let plane = input.plane(ic);
                for y in 0..h {
                    let y0 = y.wrapping_sub(1);
                    for x in 0..w {
                        let mut acc = 0.0;
                        for ky in 0..3 {
                            let iy = y0.wrapping_add(ky);
                            if iy >= h {
                                continue;
                            }
                            let row = &plane[iy * w..iy * w + w];
                            let x0 = x.wrapping_sub(1);
                            for kx in 0..3 {
                                let ix = x0.wrapping_add(kx);
                                if ix < w {
                                    acc += kernel[ky * 3 + kx] * row[ix];
                                }
                            }
                        }
                        out_plane[y * w + x] += acc;
                    }
                }
            }
            for v in &mut out.data[(oc * h) * w..(oc * h) * w + h * w] {
                *v += self.bias[oc];
            }
        }
        out
    }

    /// Backward pass: accumulates weight/bias gradients into `grad` and
    /// returns the gradient w.r.t. the input.
    pub fn backward(&self, input: &Tensor, d_out: &Tensor, grad: &mut Conv3x3) -> Tensor {
        let (h, w) = (input.h, input.w);
        let mut d_in = Tensor::zeros(self.in_c, h, w);
        for oc in 0..self.out_c {
            let d_plane = d_out.plane(oc);
            grad.bias[oc] += d_plane.iter().sum::<f64>();
            for ic in 0..self.in_c {
                let base = (oc * self.in_c + ic) * 9;
                let kernel = &self.weight[base..base + 9];
                let in_plane = input.plane(ic);
                for y in 0..h {
                    let y0 = y.wrapping_sub(1);
                    for x in 0..w {
                        let d = d_plane[y * w + x];
                        if d == 0.0 {
                            continue;
                        }
                        for ky in 0..3 {
                            let iy = y0.wrapping_add(ky);
                            if iy >= h {
                                continue;
                            }
                            let x0 = x.wrapping_sub(1);
                            for kx in 0..3 {
                                let ix = x0.wrapping_add(kx);
                                if ix < w {
                                    grad.weight[base + ky * 3 + kx] += d * in_plane[iy * w + ix];
                                    *d_in.at_mut(ic, iy, ix) += d * kernel[ky * 3 + kx];
                                }
                            }
                        }
                    }
                }
            }
        }
        d_in
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    /// out_dim x in_dim.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    fn init(in_dim: usize, out_dim: usize, rng: &mut StdRng) -> Linear {
        let std = (2.0 / in_dim as f64).sqrt();
        let normal = Normal::new(0.0, std).unwrap();
        Linear {
            in_dim,
            out_dim,
            weight: (0..out_dim * in_dim).map(|_| normal.sample(rng)).collect(),
            bias: vec![0.0; out_dim],
        }
    }

    fn zeros_like(&self) -> Linear {
        Linear {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            weight: vec![0.0; self.weight.len()],
            bias: vec![0.0; self.bias.len()],
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.in_dim);
        (0..self.out_dim)
            .map(|o| {
                self.bias[o]
                    + self.weight[o * self.in_dim..(o + 1) * self.in_dim]
                        .iter()
                        .zip(input)
                        .map(|(w, x)| w * x)
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn backward(&self, input: &[f64], d_out: &[f64], grad: &mut Linear) -> Vec<f64> {
        let mut d_in = vec![0.0; self.in_dim];
        for o in 0..self.out_dim {
            grad.bias[o] += d_out[o];
            for i in 0..self.in_dim {
                grad.weight[o * self.in_dim + i] += d_out[o] * input[i];
                d_in[i] += d_out[o] * self.weight[o * self.in_dim + i];
            }
        }
        d_in
    }
}

pub fn relu(t: &Tensor) -> Tensor {
    Tensor {
        c: t.c,
        h: t.h,
        w: t.w,
        data: t.data.iter().map(|v| v.max(0.0)).collect(),
    }
}

pub fn relu_backward(pre: &Tensor, d_out: &Tensor) -> Tensor {
    Tensor {
        c: pre.c,
        h: pre.h,
        w: pre.w,
        data: pre
            .data
            .iter()
            .zip(&d_out.data)
            .map(|(z, d)| if *z > 0.0 { *d } else { 0.0 })
            .collect(),
    }
}

/// 2x2 average pooling, stride 2. Requires even spatial dimensions.
pub fn avgpool2(t: &Tensor) -> Tensor {
    assert!(t.h % 2 == 0 && t.w % 2 == 0, "pooling needs even dimensions");
    let (oh, ow) = (t.h / 2, t.w / 2);
    let mut out = Tensor::zeros(t.c, oh, ow);
    for c in 0..t.c {
        for y in 0..oh {
            for x in 0..ow {
                let s = t.at(c, 2 * y, 2 * x)
                    + t.at(c, 2 * y, 2 * x + 1)
                    + t.at(c, 2 * y + 1, 2 * x)
                    + t.at(c, 2 * y + 1, 2 * x + 1);
                *out.at_mut(c, y, x) = 0.25 * s;
            }
        }
    }
    out
}

pub fn avgpool2_backward(d_out: &Tensor) -> Tensor {
    let mut d_in = Tensor::zeros(d_out.c, d_out.h * 2, d_out.w * 2);
    for c in 0..d_out.c {
        for y in 0..d_out.h {
            for x in 0..d_out.w {
                let d = 0.25 * d_out.at(c, y, x);
                *d_in.at_mut(c, 2 * y, 2 * x) = d;
                *d_in.at_mut(c, 2 * y, 2 * x + 1) = d;
                *d_in.at_mut(c, 2 * y + 1, 2 * x) = d;
                *d_in.at_mut(c, 2 * y + 1, 2 * x + 1) = d;
            }
        }
    }
    d_in
}

/// Global average pooling: one value per channel.
pub fn gap(t: &Tensor) -> Vec<f64> {
    let area = (t.h * t.w) as f64;
    (0..t.c)
        .map(|c| t.plane(c).iter().sum::<f64>() / area)
        .collect()
}

pub fn gap_backward(d_out: &[f64], h: usize, w: usize) -> Tensor {
    let area = (h * w) as f64;
    let mut d_in = Tensor::zeros(d_out.len(), h, w);
    for (c, d) in d_out.iter().enumerate() {
        let v = d / area;
        for y in 0..h {
            for x in 0..w {
                *d_in.at_mut(c, y, x) = v;
            }
        }
    }
    d_in
}

/// The trainable parameter set: three conv stages and the GAP-head linear.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetParams {
    pub conv1: Conv3x3,
    pub conv2: Conv3x3,
    pub conv3: Conv3x3,
    pub head: Linear,
}

impl NetParams {
    pub fn init(channels: [usize; 3], classes: usize, seed: u64) -> NetParams {
        let mut rng = StdRng::seed_from_u64(seed);
        NetParams {
            conv1: Conv3x3::init(3, channels[0], &mut rng),
            conv2: Conv3x3::init(channels[0], channels[1], &mut rng),
            conv3: Conv3x3::init(channels[1], channels[2], &mut rng),
            head: Linear::init(channels[2], classes, &mut rng),
        }
    }

    pub fn zeros_like(&self) -> NetParams {
        NetParams {
            conv1: self.conv1.zeros_like(),
            conv2: self.conv2.zeros_like(),
            conv3: self.conv3.zeros_like(),
            head: self.head.zeros_like(),
        }
    }

    fn tensors(&self) -> [(&[f64], &[f64]); 4] {
        [
            (&self.conv1.weight, &self.conv1.bias),
            (&self.conv2.weight, &self.conv2.bias),
            (&self.conv3.weight, &self.conv3.bias),
            (&self.head.weight, &self.head.bias),
        ]
    }

    fn tensors_mut(&mut self) -> [(&mut Vec<f64>, &mut Vec<f64>); 4] {
        [
            (&mut self.conv1.weight, &mut self.conv1.bias),
            (&mut self.conv2.weight, &mut self.conv2.bias),
            (&mut self.conv3.weight, &mut self.conv3.bias),
            (&mut self.head.weight, &mut self.head.bias),
        ]
    }
}

/// Everything the backward pass needs from a forward pass.
pub struct ForwardTrace {
    pub input: Tensor,
    pub z1: Tensor,
    pub p1: Tensor,
    pub z2: Tensor,
    pub p2: Tensor,
    pub z3: Tensor,
    /// Post-ReLU feature maps of the last conv stage, the maps relevance
    /// localization reads.
    pub features: Tensor,
    pub pooled: Vec<f64>,
    pub logits: Vec<f64>,
}

pub fn forward(params: &NetParams, input: &Tensor) -> ForwardTrace {
    let z1 = params.conv1.forward(input);
    let p1 = avgpool2(&relu(&z1));
    let z2 = params.conv2.forward(&p1);
    let p2 = avgpool2(&relu(&z2));
    let z3 = params.conv3.forward(&p2);
    let features = relu(&z3);
    let pooled = gap(&features);
    let logits = params.head.forward(&pooled);
    ForwardTrace {
        input: input.clone(),
        z1,
        p1,
        z2,
        p2,
        z3,
        features,
        pooled,
        logits,
    }
}

/// Softmax cross-entropy; returns per-example loss and d_logits.
pub fn softmax_ce(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() + max - logits[label];
    let mut d: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    d[label] -= 1.0;
    (loss, d)
}

/// Accumulates gradients for one example into `grad`.
pub fn backward(params: &NetParams, trace: &ForwardTrace, d_logits: &[f64], grad: &mut NetParams) {
    let d_pooled = params.head.backward(&trace.pooled, d_logits, &mut grad.head);
    let d_features = gap_backward(&d_pooled, trace.features.h, trace.features.w);
    let d_z3 = relu_backward(&trace.z3, &d_features);
    let d_p2 = params.conv3.backward(&trace.p2, &d_z3, &mut grad.conv3);
    let d_a2 = avgpool2_backward(&d_p2);
    let d_z2 = relu_backward(&trace.z2, &d_a2);
    let d_p1 = params.conv2.backward(&trace.p1, &d_z2, &mut grad.conv2);
    let d_a1 = avgpool2_backward(&d_p1);
    let d_z1 = relu_backward(&trace.z1, &d_a1);
    let _ = params.conv1.backward(&trace.input, &d_z1, &mut grad.conv1);
}

/// Adam state aligned with the parameter layout.
pub struct Adam {
    lr: f64,
    t: u64,
    m: NetParams,
    v: NetParams,
}

impl Adam {
    pub fn new(template: &NetParams, lr: f64) -> Adam {
        Adam {
            lr,
            t: 0,
            m: template.zeros_like(),
            v: template.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut NetParams, grad: &NetParams) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let bc1 = 1.0 - B1.powi(self.t as i32);
        let bc2 = 1.0 - B2.powi(self.t as i32);

        let g = grad.tensors();
        let m = self.m.tensors_mut();
        let v = self.v.tensors_mut();
        let p = params.tensors_mut();
        for layer in 0..4 {
            for part in 0..2 {
                let (gs, ms, vs, ps): (&[f64], &mut Vec<f64>, &mut Vec<f64>, &mut Vec<f64>) =
                    if part == 0 {
                        (g[layer].0, m[layer].0, v[layer].0, p[layer].0)
                    } else {
                        (g[layer].1, m[layer].1, v[layer].1, p[layer].1)
                    };
                for i in 0..gs.len() {
                    ms[i] = B1 * ms[i] + (1.0 - B1) * gs[i];
                    vs[i] = B2 * vs[i] + (1.0 - B2) * gs[i] * gs[i];
                    let m_hat = ms[i] / bc1;
                    let v_hat = vs[i] / bc2;
                    ps[i] -= self.lr * m_hat / (v_hat.sqrt() + EPS);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;

    fn rand_tensor(c: usize, h: usize, w: usize, seed: u64) -> Tensor {
        let mut rng = StdRng::seed_from_u64(seed);
        Tensor::from_data(c, h, w, (0..c * h * w).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    #[test]
    fn conv_identity_kernel_passes_through() {
        let mut conv = Conv3x3 {
            in_c: 1,
            out_c: 1,
            weight: vec![0.0; 9],
            bias: vec![0.0],
        };
        conv.weight[4] = 1.0; // center tap
        let input = rand_tensor(1, 4, 4, 1);
        let out = conv.forward(&input);
        assert_eq!(out.data, input.data);
    }

    #[test]
    fn avgpool_and_gap_agree_with_means() {
        let t = Tensor::from_data(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let pooled = avgpool2(&t);
        assert_eq!(pooled.data, vec![2.5]);
        assert_eq!(gap(&t), vec![2.5]);
    }

    #[test]
    fn softmax_ce_matches_manual() {
        let logits = vec![1.0, 2.0, 0.5];
        let (loss, d) = softmax_ce(&logits, 1);
        let exps: Vec<f64> = logits.iter().map(|z| z.exp()).collect();
        let sum: f64 = exps.iter().sum();
        assert!((loss + (exps[1] / sum).ln()).abs() < 1e-12);
        assert!((d.iter().sum::<f64>()).abs() < 1e-12);
        assert!(d[1] < 0.0 && d[0] > 0.0);
    }

    // Full-network gradient check: every parameter block against central
    // finite differences on the scalar loss.
    #[test]
    fn full_backward_matches_finite_differences() {
        let params = NetParams::init([2, 3, 4], 5, 42);
        let input = rand_tensor(3, 8, 8, 7);
        let label = 2;

        let loss_of = |p: &NetParams| {
            let trace = forward(p, &input);
            softmax_ce(&trace.logits, label).0
        };

        let mut grad = params.zeros_like();
        let trace = forward(&params, &input);
        let (_, d_logits) = softmax_ce(&trace.logits, label);
        backward(&params, &trace, &d_logits, &mut grad);

        let h = 1e-6;
        let mut checked = 0;
        // Sample a deterministic subset of coordinates from each block.
        let probe: Vec<(&str, usize)> = vec![
            ("conv1.w", 0),
            ("conv1.w", 13),
            ("conv1.b", 1),
            ("conv2.w", 29),
            ("conv2.b", 0),
            ("conv3.w", 57),
            ("conv3.b", 3),
            ("head.w", 11),
            ("head.b", 4),
        ];
        for (block, idx) in probe {
            let mut plus = params.clone();
            let mut minus = params.clone();
            let (g, pw, mw): (f64, &mut f64, &mut f64) = match block {
                "conv1.w" => (
                    grad.conv1.weight[idx],
                    &mut plus.conv1.weight[idx],
                    &mut minus.conv1.weight[idx],
                ),
                "conv1.b" => (
                    grad.conv1.bias[idx],
                    &mut plus.conv1.bias[idx],
                    &mut minus.conv1.bias[idx],
                ),
                "conv2.w" => (
                    grad.conv2.weight[idx],
                    &mut plus.conv2.weight[idx],
                    &mut minus.conv2.weight[idx],
                ),
                "conv2.b" => (
                    grad.conv2.bias[idx],
                    &mut plus.conv2.bias[idx],
                    &mut minus.conv2.bias[idx],
                ),
                "conv3.w" => (
                    grad.conv3.weight[idx],
                    &mut plus.conv3.weight[idx],
                    &mut minus.conv3.weight[idx],
                ),
                "conv3.b" => (
                    grad.conv3.bias[idx],
                    &mut plus.conv3.bias[idx],
                    &mut minus.conv3.bias[idx],
                ),
                "head.w" => (
                    grad.head.weight[idx],
                    &mut plus.head.weight[idx],
                    &mut minus.head.weight[idx],
                ),
                "head.b" => (
                    grad.head.bias[idx],
                    &mut plus.head.bias[idx],
                    &mut minus.head.bias[idx],
                ),
                _ => unreachable!(),
            };
            *pw += h;
            *mw -= h;
            let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
            let denom = g.abs().max(1e-8);
            assert!(
                (g - fd).abs() / denom < 1e-4,
                "{block}[{idx}]: analytic {g} vs fd {fd}"
            );
            checked += 1;
        }
        assert_eq!(checked, 9);
    }

    #[test]
    fn adam_reduces_loss_on_one_example() {
        let mut params = NetParams::init([2, 2, 3], 4, 3);
        let input = rand_tensor(3, 8, 8, 11);
        let label = 1;
        let mut adam = Adam::new(&params, 3e-2);
        let initial = softmax_ce(&forward(&params, &input).logits, label).0;
        for _ in 0..120 {
            let trace = forward(&params, &input);
            let (_, d_logits) = softmax_ce(&trace.logits, label);
            let mut grad = params.zeros_like();
            backward(&params, &trace, &d_logits, &mut grad);
            adam.step(&mut params, &grad);
        }
        let final_loss = softmax_ce(&forward(&params, &input).logits, label).0;
        assert!(final_loss < initial * 0.1, "{initial} -> {final_loss}");
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = NetParams::init([4, 6, 8], 15, 9);
        let b = NetParams::init([4, 6, 8], 15, 9);
        assert_eq!(a.conv2.weight, b.conv2.weight);
        let c = NetParams::init([4, 6, 8], 15, 10);
        assert_ne!(a.conv2.weight, c.conv2.weight);
    }
}
