//! Layer primitives: convolution, pooling with switch recording, ReLU,
//! fully connected maps, and stabilized softmax.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Argmax locations recorded by max pooling, keyed to both tensor shapes.
///
/// Each entry is the flat row-major index (`row * width + col`) of the window
/// maximum within its own depth plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Switches {
    in_shape: Vec<usize>,
    out_shape: Vec<usize>,
    index: Vec<usize>,
}

impl Switches {
    pub fn in_shape(&self) -> &[usize] {
        &self.in_shape
    }

    pub fn out_shape(&self) -> &[usize] {
        &self.out_shape
    }

    /// Switch for pooled cell `(d, i, j)` as a flat plane index.
    pub fn at(&self, d: usize, i: usize, j: usize) -> usize {
        let (oh, ow) = (self.out_shape[1], self.out_shape[2]);
        self.index[(d * oh + i) * ow + j]
    }
}

/// Valid cross-correlation with stride 1 and no padding, plus per-filter bias.
///
/// `input` is `[in_depth, h, w]`, `kernels` is `[filters, in_depth, kh, kw]`.
pub fn conv_forward(input: &Tensor, kernels: &Tensor, bias: &[f64]) -> Result<Tensor> {
    let ([din, h, w], [f, kdin, kh, kw]) = conv_shapes(input, kernels)?;
    if din != kdin {
        return Err(Error::ShapeMismatch(format!(
            "input depth {din} does not match kernel depth {kdin}"
        )));
    }
    if bias.len() != f {
        return Err(Error::ShapeMismatch(format!(
            "{} biases for {f} filters",
            bias.len()
        )));
    }
    if h < kh || w < kw {
        return Err(Error::InvalidShape(format!(
            "kernel {kh}x{kw} exceeds input {h}x{w}"
        )));
    }
    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let mut out = Tensor::zeros(&[f, oh, ow]);
    let kdata = kernels.data();
    for fi in 0..f {
        let plane = out.plane_mut(fi);
        plane.fill(bias[fi]);
        for d in 0..din {
            let inp = input.plane(d);
            let kbase = ((fi * din + d) * kh) * kw;
            for r in 0..kh {
                for c in 0..kw {
                    let kv = kdata[kbase + r * kw + c];
                    if kv == 0.0 {
                        continue;
                    }
                    for i in 0..oh {
                        let src = &inp[(i + r) * w + c..(i + r) * w + c + ow];
                        let dst = &mut plane[i * ow..(i + 1) * ow];
                        for (o, s) in dst.iter_mut().zip(src) {
                            *o += kv * s;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Adjoint of `conv_forward` without bias: scatters an output-shaped tensor
/// back to input shape through the transposed kernel map.
pub fn conv_input_adjoint(grad_out: &Tensor, kernels: &Tensor) -> Result<Tensor> {
    let ([f, oh, ow], [kf, din, kh, kw]) = conv_shapes(grad_out, kernels)?;
    if f != kf {
        return Err(Error::ShapeMismatch(format!(
            "feature map depth {f} does not match filter count {kf}"
        )));
    }
    let (h, w) = (oh + kh - 1, ow + kw - 1);
    let mut out = Tensor::zeros(&[din, h, w]);
    let kdata = kernels.data();
    for fi in 0..f {
        let gplane = grad_out.plane(fi);
        for d in 0..din {
            let dst = out.plane_mut(d);
            let kbase = ((fi * din + d) * kh) * kw;
            for r in 0..kh {
                for c in 0..kw {
                    let kv = kdata[kbase + r * kw + c];
                    if kv == 0.0 {
                        continue;
                    }
                    for i in 0..oh {
                        let g = &gplane[i * ow..(i + 1) * ow];
                        let row = &mut dst[(i + r) * w + c..(i + r) * w + c + ow];
                        for (o, gv) in row.iter_mut().zip(g) {
                            *o += kv * gv;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of a conv layer's kernels and biases given the output gradient.
pub fn conv_param_grad(
    input: &Tensor,
    grad_out: &Tensor,
    kernel_shape: &[usize],
) -> Result<(Tensor, Vec<f64>)> {
    let [f, din, kh, kw] = match kernel_shape {
        [a, b, c, d] => [*a, *b, *c, *d],
        other => {
            return Err(Error::InvalidShape(format!(
                "kernel shape {other:?} is not rank 4"
            )))
        }
    };
    let [gd, oh, ow] = rank3_dims(grad_out)?;
    let [idn, h, w] = rank3_dims(input)?;
    if gd != f || idn != din || h != oh + kh - 1 || w != ow + kw - 1 {
        return Err(Error::ShapeMismatch(format!(
            "gradient {:?} and input {:?} do not fit kernels {kernel_shape:?}",
            grad_out.shape(),
            input.shape()
        )));
    }
    let mut kgrad = Tensor::zeros(&[f, din, kh, kw]);
    let mut bgrad = vec![0.0; f];
    for fi in 0..f {
        let gplane = grad_out.plane(fi);
        bgrad[fi] = gplane.iter().sum();
        for d in 0..din {
            let inp = input.plane(d);
            for r in 0..kh {
                for c in 0..kw {
                    let mut acc = 0.0;
                    for i in 0..oh {
                        let g = &gplane[i * ow..(i + 1) * ow];
                        let src = &inp[(i + r) * w + c..(i + r) * w + c + ow];
                        acc += g.iter().zip(src).map(|(a, b)| a * b).sum::<f64>();
                    }
                    kgrad.data_mut()[(((fi * din + d) * kh) + r) * kw + c] = acc;
                }
            }
        }
    }
    Ok((kgrad, bgrad))
}

/// 2x2/stride-2 max pooling, ceil-mode with border windows clamped to the
/// input extent. Ties go to the first cell in row-major scan order.
pub fn maxpool_forward(input: &Tensor) -> Result<(Tensor, Switches)> {
    let [d, h, w] = rank3_dims(input)?;
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let mut out = Tensor::zeros(&[d, oh, ow]);
    let mut index = Vec::with_capacity(d * oh * ow);
    for di in 0..d {
        let inp = input.plane(di);
        let plane = out.plane_mut(di);
        for i in 0..oh {
            let (r0, r1) = (2 * i, (2 * i + 2).min(h));
            for j in 0..ow {
                let (c0, c1) = (2 * j, (2 * j + 2).min(w));
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = r0 * w + c0;
                for r in r0..r1 {
                    for c in c0..c1 {
                        let v = inp[r * w + c];
                        if v > best {
                            best = v;
                            best_idx = r * w + c;
                        }
                    }
                }
                plane[i * ow + j] = best;
                index.push(best_idx);
            }
        }
    }
    Ok((
        out,
        Switches {
            in_shape: vec![d, h, w],
            out_shape: vec![d, oh, ow],
            index,
        },
    ))
}

/// Places each pooled value at its recorded argmax location, zero elsewhere.
pub fn unpool(pooled: &Tensor, switches: &Switches) -> Result<Tensor> {
    if pooled.shape() != switches.out_shape.as_slice() {
        return Err(Error::SwitchMismatch(format!(
            "pooled shape {:?} does not match recorded {:?}",
            pooled.shape(),
            switches.out_shape
        )));
    }
    let [d, oh, ow] = rank3_dims(pooled)?;
    let (h, w) = (switches.in_shape[1], switches.in_shape[2]);
    let mut out = Tensor::zeros(&switches.in_shape);
    for di in 0..d {
        let src = pooled.plane(di);
        let dst = out.plane_mut(di);
        for i in 0..oh {
            for j in 0..ow {
                let idx = switches.index[(di * oh + i) * ow + j];
                if idx >= h * w {
                    return Err(Error::SwitchMismatch(format!(
                        "switch {idx} outside a {h}x{w} plane"
                    )));
                }
                dst[idx] = src[i * ow + j];
            }
        }
    }
    Ok(out)
}

/// Elementwise max(0, v).
pub fn relu(input: &Tensor) -> Tensor {
    input.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Affine map `W x + b` for a flattened input.
pub fn fc_forward(input: &Tensor, weight: &Tensor, bias: &[f64]) -> Result<Tensor> {
    let n = input.len();
    let (units, cols) = match weight.shape() {
        [u, c] => (*u, *c),
        other => {
            return Err(Error::InvalidShape(format!(
                "weight shape {other:?} is not a matrix"
            )))
        }
    };
    if cols != n || bias.len() != units {
        return Err(Error::ShapeMismatch(format!(
            "input length {n} vs weight {units}x{cols} with {} biases",
            bias.len()
        )));
    }
    let x = input.data();
    let mut out = vec![0.0; units];
    for (u, o) in out.iter_mut().enumerate() {
        let row = &weight.data()[u * cols..(u + 1) * cols];
        *o = bias[u] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
    Tensor::from_vec(&[units], out)
}

/// Exp-normalization stabilized by max subtraction; sums to 1.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn conv_shapes(a: &Tensor, kernels: &Tensor) -> Result<([usize; 3], [usize; 4])> {
    let r3 = rank3_dims(a)?;
    let r4 = match kernels.shape() {
        [f, d, kh, kw] => [*f, *d, *kh, *kw],
        other => {
            return Err(Error::InvalidShape(format!(
                "kernel shape {other:?} is not rank 4"
            )))
        }
    };
    Ok((r3, r4))
}

fn rank3_dims(t: &Tensor) -> Result<[usize; 3]> {
    match t.shape() {
        [d, h, w] => Ok([*d, *h, *w]),
        other => Err(Error::InvalidShape(format!(
            "expected depth x height x width, got {other:?}"
        ))),
    }
}
