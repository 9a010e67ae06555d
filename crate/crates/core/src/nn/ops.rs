//! Layer primitives with explicit backward passes.
//!
//! Feature maps are `(channels, height, width)`. Every `*_backward` takes the
//! upstream gradient and whatever the forward pass kept, and returns the
//! gradients for the forward inputs in the same order.

use crate::error::{Error, Result};
use crate::nn::array::{NdArray, Scalar};

fn kernel4(k: &NdArray<impl Scalar>) -> Result<(usize, usize, usize, usize)> {
    match k.shape()[..] {
        [a, b, c, d] => Ok((a, b, c, d)),
        _ => Err(Error::shape("kernel", format!("expected rank 4, got {:?}", k.shape()))),
    }
}

/// Same-padded stride-1 cross-correlation. `kernel` is `(out, in, kh, kw)`
/// with odd spatial extent, `bias` has one entry per output channel.
pub fn conv2d<T: Scalar>(input: &NdArray<T>, kernel: &NdArray<T>, bias: &NdArray<T>) -> Result<NdArray<T>> {
    let (c, h, w) = input.chw()?;
    let (o, kc, kh, kw) = kernel4(kernel)?;
    if kc != c {
        return Err(Error::shape(
            "conv2d",
            format!("kernel expects {kc} input channels, input has {c}"),
        ));
    }
    if kh % 2 == 0 || kw % 2 == 0 {
        return Err(Error::shape("conv2d", format!("kernel {kh}x{kw} must have odd extent")));
    }
    if bias.len() != o {
        return Err(Error::shape("conv2d", format!("bias has {} entries, kernel {o} outputs", bias.len())));
    }
    let (ph, pw) = (kh / 2, kw / 2);
    let mut out = NdArray::zeros(&[o, h, w]);
    let x = input.data();
    let k = kernel.data();
    let plane = h * w;
    let od = out.data_mut();
    for oc in 0..o {
        let dst = &mut od[oc * plane..(oc + 1) * plane];
        dst.fill(bias.data()[oc]);
        for ic in 0..c {
            let src = &x[ic * plane..(ic + 1) * plane];
            for ky in 0..kh {
                for kx in 0..kw {
                    let wgt = k[((oc * c + ic) * kh + ky) * kw + kx];
                    if wgt == T::zero() {
                        continue;
                    }
                    let dy = ky as isize - ph as isize;
                    let dx = kx as isize - pw as isize;
                    let (y0, y1) = valid_range(h, dy);
                    let (x0, x1) = valid_range(w, dx);
                    if x0 == x1 {
                        continue;
                    }
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let drow = &mut dst[y * w + x0..y * w + x1];
                        let srow = &src[sy * w + (x0 as isize + dx) as usize..sy * w + (x1 as isize + dx) as usize];
                        for (d, &s) in drow.iter_mut().zip(srow) {
                            *d += wgt * s;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Output positions `y` for which `y + offset` stays inside `0..n`.
fn valid_range(n: usize, offset: isize) -> (usize, usize) {
    let lo = (-offset).max(0) as usize;
    let hi = (n as isize - offset).min(n as isize).max(0) as usize;
    (lo.min(hi), hi)
}

pub struct ConvGrads<T> {
    pub input: NdArray<T>,
    pub kernel: NdArray<T>,
    pub bias: NdArray<T>,
}

pub fn conv2d_backward<T: Scalar>(
    input: &NdArray<T>,
    kernel: &NdArray<T>,
    grad_out: &NdArray<T>,
) -> Result<ConvGrads<T>> {
    let (c, h, w) = input.chw()?;
    let (o, _, kh, kw) = kernel4(kernel)?;
    if grad_out.shape() != [o, h, w] {
        return Err(Error::shape(
            "conv2d_backward",
            format!("grad {:?} vs expected {:?}", grad_out.shape(), [o, h, w]),
        ));
    }
    let (ph, pw) = (kh / 2, kw / 2);
    let plane = h * w;
    let x = input.data();
    let k = kernel.data();
    let g = grad_out.data();
    let mut dx = NdArray::zeros(&[c, h, w]);
    let mut dk = NdArray::zeros(kernel.shape());
    let mut db = NdArray::zeros(&[o]);
    for oc in 0..o {
        let gp = &g[oc * plane..(oc + 1) * plane];
        db.data_mut()[oc] = gp.iter().copied().sum();
        for ic in 0..c {
            let src = &x[ic * plane..(ic + 1) * plane];
            for ky in 0..kh {
                for kx in 0..kw {
                    let dy = ky as isize - ph as isize;
                    let dxo = kx as isize - pw as isize;
                    let (y0, y1) = valid_range(h, dy);
                    let (x0, x1) = valid_range(w, dxo);
                    if x0 == x1 {
                        continue;
                    }
                    let ki = ((oc * c + ic) * kh + ky) * kw + kx;
                    let wgt = k[ki];
                    let mut acc = T::zero();
                    let dxd = &mut dx.data_mut()[ic * plane..(ic + 1) * plane];
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let sx0 = (x0 as isize + dxo) as usize;
                        let grow = &gp[y * w + x0..y * w + x1];
                        let srow = &src[sy * w + sx0..sy * w + sx0 + (x1 - x0)];
                        let drow = &mut dxd[sy * w + sx0..sy * w + sx0 + (x1 - x0)];
                        for ((&gv, &sv), dv) in grow.iter().zip(srow).zip(drow.iter_mut()) {
                            acc += gv * sv;
                            *dv += wgt * gv;
                        }
                    }
                    dk.data_mut()[ki] += acc;
                }
            }
        }
    }
    Ok(ConvGrads {
        input: dx,
        kernel: dk,
        bias: db,
    })
}

pub fn relu<T: Scalar>(x: &NdArray<T>) -> NdArray<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Gradient passes where the forward *input* was strictly positive.
pub fn relu_backward<T: Scalar>(input: &NdArray<T>, grad_out: &NdArray<T>) -> NdArray<T> {
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    NdArray::from_vec(input.shape(), data).expect("same shape")
}

/// Stride-2 2x2 max pooling with ceiling output size. The returned indices
/// name, per output cell, the flat input position of its first maximum.
pub fn maxpool2<T: Scalar>(input: &NdArray<T>) -> Result<(NdArray<T>, Vec<usize>)> {
    let (c, h, w) = input.chw()?;
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let mut out = NdArray::zeros(&[c, oh, ow]);
    let mut argmax = vec![0usize; c * oh * ow];
    let x = input.data();
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best_i = ch * h * w + 2 * oy * w + 2 * ox;
                let mut best = x[best_i];
                for y in 2 * oy..(2 * oy + 2).min(h) {
                    for xx in 2 * ox..(2 * ox + 2).min(w) {
                        let i = ch * h * w + y * w + xx;
                        if x[i] > best {
                            best = x[i];
                            best_i = i;
                        }
                    }
                }
                let o = (ch * oh + oy) * ow + ox;
                out.data_mut()[o] = best;
                argmax[o] = best_i;
            }
        }
    }
    Ok((out, argmax))
}

pub fn maxpool2_backward<T: Scalar>(grad_out: &NdArray<T>, argmax: &[usize], input_shape: &[usize]) -> NdArray<T> {
    let mut dx = NdArray::zeros(input_shape);
    for (&g, &i) in grad_out.data().iter().zip(argmax) {
        dx.data_mut()[i] += g;
    }
    dx
}

/// Padding offset of a stride-2 transposed convolution with extent `k`.
fn deconv_pad(k: usize) -> isize {
    ((k as isize) - 1) / 2
}

/// Stride-2 transposed convolution. `kernel` is `(in, out, kh, kw)`; the
/// output is exactly `(out, 2h, 2w)`: tap `(a, b)` of input cell `(i, j)`
/// lands on `(2i + a - p, 2j + b - p)` with `p = (k - 1) / 2`, and taps
/// falling outside the doubled grid are cropped.
pub fn deconv2d<T: Scalar>(input: &NdArray<T>, kernel: &NdArray<T>) -> Result<NdArray<T>> {
    let (c, h, w) = input.chw()?;
    let (kc, o, kh, kw) = kernel4(kernel)?;
    if kc != c {
        return Err(Error::shape(
            "deconv2d",
            format!("kernel expects {kc} input channels, input has {c}"),
        ));
    }
    let (oh, ow) = (2 * h, 2 * w);
    let (ph, pw) = (deconv_pad(kh), deconv_pad(kw));
    let mut out = NdArray::zeros(&[o, oh, ow]);
    let x = input.data();
    let k = kernel.data();
    let od = out.data_mut();
    for ic in 0..c {
        for oc in 0..o {
            for a in 0..kh {
                for b in 0..kw {
                    let wgt = k[((ic * o + oc) * kh + a) * kw + b];
                    for i in 0..h {
                        let y = 2 * i as isize + a as isize - ph;
                        if y < 0 || y >= oh as isize {
                            continue;
                        }
                        let row = &mut od[(oc * oh + y as usize) * ow..(oc * oh + y as usize + 1) * ow];
                        let xrow = &x[(ic * h + i) * w..(ic * h + i + 1) * w];
                        for (j, &v) in xrow.iter().enumerate() {
                            let xx = 2 * j as isize + b as isize - pw;
                            if xx >= 0 && xx < ow as isize {
                                row[xx as usize] += wgt * v;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

pub struct DeconvGrads<T> {
    pub input: NdArray<T>,
    pub kernel: NdArray<T>,
}

pub fn deconv2d_backward<T: Scalar>(
    input: &NdArray<T>,
    kernel: &NdArray<T>,
    grad_out: &NdArray<T>,
) -> Result<DeconvGrads<T>> {
    let (c, h, w) = input.chw()?;
    let (_, o, kh, kw) = kernel4(kernel)?;
    let (oh, ow) = (2 * h, 2 * w);
    if grad_out.shape() != [o, oh, ow] {
        return Err(Error::shape(
            "deconv2d_backward",
            format!("grad {:?} vs expected {:?}", grad_out.shape(), [o, oh, ow]),
        ));
    }
    let (ph, pw) = (deconv_pad(kh), deconv_pad(kw));
    let x = input.data();
    let k = kernel.data();
    let g = grad_out.data();
    let mut dx = NdArray::zeros(&[c, h, w]);
    let mut dk = NdArray::zeros(kernel.shape());
    for ic in 0..c {
        for oc in 0..o {
            for a in 0..kh {
                for b in 0..kw {
                    let ki = ((ic * o + oc) * kh + a) * kw + b;
                    let wgt = k[ki];
                    let mut acc = T::zero();
                    for i in 0..h {
                        let y = 2 * i as isize + a as isize - ph;
                        if y < 0 || y >= oh as isize {
                            continue;
                        }
                        let grow = &g[(oc * oh + y as usize) * ow..(oc * oh + y as usize + 1) * ow];
                        let base = (ic * h + i) * w;
                        for j in 0..w {
                            let xx = 2 * j as isize + b as isize - pw;
                            if xx >= 0 && xx < ow as isize {
                                let gv = grow[xx as usize];
                                acc += gv * x[base + j];
                                dx.data_mut()[base + j] += wgt * gv;
                            }
                        }
                    }
                    dk.data_mut()[ki] += acc;
                }
            }
        }
    }
    Ok(DeconvGrads { input: dx, kernel: dk })
}

/// Adds one bias value per channel.
pub fn add_channel_bias<T: Scalar>(x: &NdArray<T>, bias: &NdArray<T>) -> Result<NdArray<T>> {
    let (c, h, w) = x.chw()?;
    if bias.len() != c {
        return Err(Error::shape("add_channel_bias", format!("{} biases for {c} channels", bias.len())));
    }
    let mut out = x.clone();
    for (ch, plane) in out.data_mut().chunks_mut(h * w).enumerate() {
        let b = bias.data()[ch];
        plane.iter_mut().for_each(|v| *v += b);
    }
    Ok(out)
}

pub fn channel_bias_backward<T: Scalar>(grad_out: &NdArray<T>) -> Result<NdArray<T>> {
    let (c, h, w) = grad_out.chw()?;
    let data = grad_out.data().chunks(h * w).map(|p| p.iter().copied().sum()).collect();
    NdArray::from_vec(&[c], data)
}

/// Keeps the top-left `h x w` window.
pub fn crop<T: Scalar>(x: &NdArray<T>, h: usize, w: usize) -> Result<NdArray<T>> {
    let (c, ih, iw) = x.chw()?;
    if h > ih || w > iw {
        return Err(Error::shape("crop", format!("cannot crop {ih}x{iw} to {h}x{w}")));
    }
    let mut out = NdArray::zeros(&[c, h, w]);
    for ch in 0..c {
        for y in 0..h {
            let src = &x.data()[(ch * ih + y) * iw..(ch * ih + y) * iw + w];
            out.data_mut()[(ch * h + y) * w..(ch * h + y + 1) * w].copy_from_slice(src);
        }
    }
    Ok(out)
}

pub fn crop_backward<T: Scalar>(grad_out: &NdArray<T>, input_shape: &[usize]) -> Result<NdArray<T>> {
    let (c, h, w) = grad_out.chw()?;
    let (ih, iw) = (input_shape[1], input_shape[2]);
    let mut dx = NdArray::zeros(input_shape);
    for ch in 0..c {
        for y in 0..h {
            let src = &grad_out.data()[(ch * h + y) * w..(ch * h + y + 1) * w];
            dx.data_mut()[(ch * ih + y) * iw..(ch * ih + y) * iw + w].copy_from_slice(src);
        }
    }
    Ok(dx)
}

pub fn concat_channels<T: Scalar>(a: &NdArray<T>, b: &NdArray<T>) -> Result<NdArray<T>> {
    let (ca, ha, wa) = a.chw()?;
    let (cb, hb, wb) = b.chw()?;
    if (ha, wa) != (hb, wb) {
        return Err(Error::shape("concat_channels", format!("{ha}x{wa} vs {hb}x{wb}")));
    }
    let mut data = Vec::with_capacity(a.len() + b.len());
    data.extend_from_slice(a.data());
    data.extend_from_slice(b.data());
    NdArray::from_vec(&[ca + cb, ha, wa], data)
}

/// Splits a channel-concatenated gradient back into its two parts.
pub fn split_channels<T: Scalar>(grad: &NdArray<T>, first: usize) -> Result<(NdArray<T>, NdArray<T>)> {
    let (c, h, w) = grad.chw()?;
    if first > c {
        return Err(Error::shape("split_channels", format!("{first} of {c} channels")));
    }
    let cut = first * h * w;
    Ok((
        NdArray::from_vec(&[first, h, w], grad.data()[..cut].to_vec())?,
        NdArray::from_vec(&[c - first, h, w], grad.data()[cut..].to_vec())?,
    ))
}

/// `(c, h, w)` to `(h * w, c)`: one row of channel values per pixel.
pub fn pixels_as_rows<T: Scalar>(x: &NdArray<T>) -> Result<NdArray<T>> {
    let (c, h, w) = x.chw()?;
    let p = h * w;
    let mut out = NdArray::zeros(&[p, c]);
    for ch in 0..c {
        for i in 0..p {
            out.data_mut()[i * c + ch] = x.data()[ch * p + i];
        }
    }
    Ok(out)
}

/// Inverse of [`pixels_as_rows`].
pub fn rows_as_pixels<T: Scalar>(x: &NdArray<T>, h: usize, w: usize) -> Result<NdArray<T>> {
    let (p, c) = match x.shape()[..] {
        [p, c] => (p, c),
        _ => return Err(Error::shape("rows_as_pixels", format!("expected rank 2, got {:?}", x.shape()))),
    };
    if p != h * w {
        return Err(Error::shape("rows_as_pixels", format!("{p} rows for {h}x{w}")));
    }
    let mut out = NdArray::zeros(&[c, h, w]);
    for i in 0..p {
        for ch in 0..c {
            out.data_mut()[ch * p + i] = x.data()[i * c + ch];
        }
    }
    Ok(out)
}

/// Fully connected layer over a flattened input: `weight` is `(out, in)`.
pub fn linear<T: Scalar>(x: &NdArray<T>, weight: &NdArray<T>, bias: &NdArray<T>) -> Result<NdArray<T>> {
    let (o, i) = match weight.shape()[..] {
        [o, i] => (o, i),
        _ => return Err(Error::shape("linear", format!("weight rank {:?}", weight.shape()))),
    };
    if x.len() != i || bias.len() != o {
        return Err(Error::shape(
            "linear",
            format!("input {} / bias {} vs weight {o}x{i}", x.len(), bias.len()),
        ));
    }
    let data = (0..o)
        .map(|r| {
            let row = &weight.data()[r * i..(r + 1) * i];
            row.iter().zip(x.data()).map(|(&a, &b)| a * b).sum::<T>() + bias.data()[r]
        })
        .collect();
    NdArray::from_vec(&[o], data)
}

pub struct LinearGrads<T> {
    pub input: NdArray<T>,
    pub weight: NdArray<T>,
    pub bias: NdArray<T>,
}

pub fn linear_backward<T: Scalar>(x: &NdArray<T>, weight: &NdArray<T>, grad_out: &NdArray<T>) -> LinearGrads<T> {
    let (o, i) = (weight.shape()[0], weight.shape()[1]);
    let mut dx = NdArray::zeros(x.shape());
    let mut dw = NdArray::zeros(weight.shape());
    for r in 0..o {
        let g = grad_out.data()[r];
        for c in 0..i {
            dw.data_mut()[r * i + c] = g * x.data()[c];
            dx.data_mut()[c] += g * weight.data()[r * i + c];
        }
    }
    LinearGrads {
        input: dx,
        weight: dw,
        bias: grad_out.clone(),
    }
}

/// Max-subtracted softmax over all entries.
pub fn softmax<T: Scalar>(logits: &NdArray<T>) -> NdArray<T> {
    let m = logits.data().iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.data().iter().map(|&v| (v - m).exp()).collect();
    let z: T = exps.iter().copied().sum();
    NdArray::from_vec(logits.shape(), exps.into_iter().map(|e| e / z).collect()).expect("same shape")
}

pub fn log_softmax<T: Scalar>(logits: &NdArray<T>) -> NdArray<T> {
    let m = logits.data().iter().copied().fold(T::neg_infinity(), T::max);
    let lse = m + logits.data().iter().map(|&v| (v - m).exp()).sum::<T>().ln();
    logits.map(|v| v - lse)
}

/// `-sum(label * ln(pred))`, skipping zero-label entries.
pub fn cross_entropy<T: Scalar>(pred: &NdArray<T>, label: &NdArray<T>) -> T {
    pred.data()
        .iter()
        .zip(label.data())
        .filter(|(_, &l)| l > T::zero())
        .map(|(&p, &l)| -l * p.ln())
        .sum()
}

/// Cross-entropy of `softmax(logits)` against `label`. Returns the loss, the
/// probabilities, and the gradient with respect to the logits.
pub fn softmax_cross_entropy<T: Scalar>(logits: &NdArray<T>, label: &NdArray<T>) -> Result<(T, NdArray<T>, NdArray<T>)> {
    if logits.len() != label.len() {
        return Err(Error::shape(
            "softmax_cross_entropy",
            format!("{} logits vs {} labels", logits.len(), label.len()),
        ));
    }
    let logp = log_softmax(logits);
    let loss = logp
        .data()
        .iter()
        .zip(label.data())
        .filter(|(_, &l)| l > T::zero())
        .map(|(&lp, &l)| -l * lp)
        .sum();
    let probs = logp.map(T::exp);
    let mass = label.sum();
    let grad = NdArray::from_vec(
        logits.shape(),
        probs.data().iter().zip(label.data()).map(|(&p, &l)| p * mass - l).collect(),
    )?;
    Ok((loss, probs, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arr(shape: &[usize], v: &[f64]) -> NdArray<f64> {
        NdArray::from_vec(shape, v.to_vec()).unwrap()
    }

    #[test]
    fn identity_kernel() {
        let x = arr(&[2, 2, 3], &[1., 2., 3., 4., 5., 6., 7., 8., 9., 10., 11., 12.]);
        let mut k = NdArray::zeros(&[2, 2, 1, 1]);
        k.data_mut()[0] = 1.0;
        k.data_mut()[3] = 1.0;
        let y = conv2d(&x, &k, &NdArray::zeros(&[2])).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn zero_kernel_gives_bias() {
        let x = NdArray::full(&[3, 4, 5], 2.0);
        let y = conv2d(&x, &NdArray::zeros(&[2, 3, 3, 3]), &arr(&[2], &[0.5, -1.0])).unwrap();
        assert!(y.data()[..20].iter().all(|&v| v == 0.5));
        assert!(y.data()[20..].iter().all(|&v| v == -1.0));
    }

    #[test]
    fn conv_rejects_mismatch() {
        let x = NdArray::<f64>::zeros(&[3, 4, 4]);
        let err = conv2d(&x, &NdArray::zeros(&[2, 2, 3, 3]), &NdArray::zeros(&[2])).unwrap_err();
        assert!(err.to_string().contains("3"));
        assert!(conv2d(&x, &NdArray::zeros(&[2, 3, 2, 2]), &NdArray::zeros(&[2])).is_err());
    }

    #[test]
    fn pool_window_max() {
        let x = arr(&[1, 2, 2], &[1., 2., 3., 4.]);
        let (y, idx) = maxpool2(&x).unwrap();
        assert_eq!(y.data(), &[4.0]);
        assert_eq!(idx, vec![3]);
    }

    #[test]
    fn pool_constant_and_odd() {
        let x = NdArray::full(&[1, 5, 3], 7.0);
        let (y, idx) = maxpool2(&x).unwrap();
        assert_eq!(y.shape(), &[1, 3, 2]);
        assert!(y.data().iter().all(|&v| v == 7.0));
        // ties route to the first position of each window
        assert_eq!(idx[0], 0);
        assert_eq!(idx[5], 4 * 3 + 2);
    }

    #[test]
    fn deconv_single_tap() {
        let x = arr(&[1, 1, 1], &[3.0]);
        let k = arr(&[1, 1, 3, 3], &[1., 2., 3., 4., 5., 6., 7., 8., 9.]);
        let y = deconv2d(&x, &k).unwrap();
        assert_eq!(y.shape(), &[1, 2, 2]);
        // p = 1: tap (a, b) lands on (a - 1, b - 1)
        assert_eq!(y.data(), &[15., 18., 24., 27.]);

        let k1 = arr(&[1, 1, 1, 1], &[2.0]);
        let y = deconv2d(&x, &k1).unwrap();
        assert_eq!(y.data(), &[6., 0., 0., 0.]);
    }

    #[test]
    fn deconv_zero_input() {
        let y = deconv2d(&NdArray::<f64>::zeros(&[2, 3, 2]), &NdArray::full(&[2, 4, 4, 4], 1.0)).unwrap();
        assert_eq!(y.shape(), &[4, 6, 4]);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn softmax_uniform_and_ce_identities() {
        let p = softmax(&NdArray::<f64>::zeros(&[5]));
        assert!(p.data().iter().all(|&v| (v - 0.2).abs() < 1e-15));

        let q = softmax(&arr(&[4], &[0.3, -1.0, 2.0, 0.1]));
        let r = softmax(&arr(&[4], &[1.0, 0.0, -0.5, 0.7]));
        let entropy = cross_entropy(&q, &q);
        assert!(cross_entropy(&r, &q) >= entropy);
        let direct: f64 = q.data().iter().map(|&v| -v * v.ln()).sum();
        assert!((entropy - direct).abs() < 1e-12);
    }

    #[test]
    fn softmax_large_logits_are_stable() {
        let p = softmax(&arr(&[3], &[1000.0, 1000.0, -1000.0]));
        assert!(p.all_finite());
        assert!((p.data()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn crop_concat_round_trip() {
        let a = arr(&[1, 2, 2], &[1., 2., 3., 4.]);
        let b = arr(&[2, 2, 2], &[5., 6., 7., 8., 9., 10., 11., 12.]);
        let cat = concat_channels(&a, &b).unwrap();
        let (ga, gb) = split_channels(&cat, 1).unwrap();
        assert_eq!((ga, gb), (a.clone(), b));
        let c = crop(&a, 1, 2).unwrap();
        assert_eq!(c.data(), &[1., 2.]);
        let back = crop_backward(&c, a.shape()).unwrap();
        assert_eq!(back.data(), &[1., 2., 0., 0.]);
    }

    #[test]
    fn pixel_row_transpose_round_trip() {
        let x = arr(&[2, 1, 3], &[1., 2., 3., 4., 5., 6.]);
        let rows = pixels_as_rows(&x).unwrap();
        assert_eq!(rows.data(), &[1., 4., 2., 5., 3., 6.]);
        assert_eq!(rows_as_pixels(&rows, 1, 3).unwrap(), x);
    }
}
