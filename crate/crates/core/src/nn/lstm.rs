//! Batched LSTM cell. Rows of the inputs are independent sequences; gate
//! blocks in the weight matrices are laid out `(input, forget, cell, output)`.

use crate::error::{Error, Result};
use crate::nn::array::{NdArray, Scalar};

/// `input_weight` is `(4 * hidden, in)`, `hidden_weight` is `(4 * hidden, hidden)`.
pub struct LstmWeights<'a, T> {
    pub input_weight: &'a NdArray<T>,
    pub hidden_weight: &'a NdArray<T>,
    pub bias: &'a NdArray<T>,
}

impl<T: Scalar> LstmWeights<'_, T> {
    fn dims(&self) -> Result<(usize, usize)> {
        let (g4, i) = match self.input_weight.shape()[..] {
            [a, b] => (a, b),
            _ => return Err(Error::shape("lstm", "input weight must be rank 2")),
        };
        if g4 % 4 != 0 {
            return Err(Error::shape("lstm", format!("gate rows {g4} not divisible by 4")));
        }
        let h = g4 / 4;
        if self.hidden_weight.shape() != [g4, h] || self.bias.len() != g4 {
            return Err(Error::shape(
                "lstm",
                format!(
                    "hidden weight {:?} / bias {} inconsistent with hidden size {h}",
                    self.hidden_weight.shape(),
                    self.bias.len()
                ),
            ));
        }
        Ok((i, h))
    }
}

/// Values kept from the forward step for the backward pass.
#[derive(Clone, Debug)]
pub struct LstmCache<T> {
    x: NdArray<T>,
    h_prev: NdArray<T>,
    c_prev: NdArray<T>,
    /// Post-activation gates, `(n, 4 * hidden)`.
    gates: NdArray<T>,
    tanh_c: NdArray<T>,
}

fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

fn rows(a: &NdArray<impl Scalar>) -> Result<(usize, usize)> {
    match a.shape()[..] {
        [n, d] => Ok((n, d)),
        _ => Err(Error::shape("lstm", format!("expected (rows, features), got {:?}", a.shape()))),
    }
}

/// One step: returns `(h, c, cache)`.
pub fn lstm_step<T: Scalar>(
    x: &NdArray<T>,
    h_prev: &NdArray<T>,
    c_prev: &NdArray<T>,
    w: &LstmWeights<'_, T>,
) -> Result<(NdArray<T>, NdArray<T>, LstmCache<T>)> {
    let (in_dim, hid) = w.dims()?;
    let (n, xi) = rows(x)?;
    if xi != in_dim || h_prev.shape() != [n, hid] || c_prev.shape() != [n, hid] {
        return Err(Error::shape(
            "lstm_step",
            format!(
                "x {:?}, h {:?}, c {:?} vs input {in_dim}, hidden {hid}",
                x.shape(),
                h_prev.shape(),
                c_prev.shape()
            ),
        ));
    }
    let g4 = 4 * hid;
    let wx = w.input_weight.data();
    let wh = w.hidden_weight.data();
    let mut gates = NdArray::zeros(&[n, g4]);
    let mut h = NdArray::zeros(&[n, hid]);
    let mut c = NdArray::zeros(&[n, hid]);
    let mut tanh_c = NdArray::zeros(&[n, hid]);
    for r in 0..n {
        let xr = &x.data()[r * in_dim..(r + 1) * in_dim];
        let hr = &h_prev.data()[r * hid..(r + 1) * hid];
        let gr = &mut gates.data_mut()[r * g4..(r + 1) * g4];
        for (g, out) in gr.iter_mut().enumerate() {
            let mut z = w.bias.data()[g];
            z += wx[g * in_dim..(g + 1) * in_dim].iter().zip(xr).map(|(&a, &b)| a * b).sum::<T>();
            z += wh[g * hid..(g + 1) * hid].iter().zip(hr).map(|(&a, &b)| a * b).sum::<T>();
            *out = if (2 * hid..3 * hid).contains(&g) {
                z.tanh()
            } else {
                sigmoid(z)
            };
        }
        for k in 0..hid {
            let (i, f, gg, o) = (gr[k], gr[hid + k], gr[2 * hid + k], gr[3 * hid + k]);
            let cv = f * c_prev.data()[r * hid + k] + i * gg;
            let tc = cv.tanh();
            c.data_mut()[r * hid + k] = cv;
            tanh_c.data_mut()[r * hid + k] = tc;
            h.data_mut()[r * hid + k] = o * tc;
        }
    }
    let cache = LstmCache {
        x: x.clone(),
        h_prev: h_prev.clone(),
        c_prev: c_prev.clone(),
        gates,
        tanh_c,
    };
    Ok((h, c, cache))
}

pub struct LstmGrads<T> {
    pub x: NdArray<T>,
    pub h_prev: NdArray<T>,
    pub c_prev: NdArray<T>,
    pub input_weight: NdArray<T>,
    pub hidden_weight: NdArray<T>,
    pub bias: NdArray<T>,
}

/// Backward through one step given gradients flowing into `h` and `c`.
pub fn lstm_step_backward<T: Scalar>(
    cache: &LstmCache<T>,
    w: &LstmWeights<'_, T>,
    grad_h: &NdArray<T>,
    grad_c: &NdArray<T>,
) -> Result<LstmGrads<T>> {
    let (in_dim, hid) = w.dims()?;
    let (n, _) = rows(&cache.x)?;
    let g4 = 4 * hid;
    let mut dz = NdArray::zeros(&[n, g4]);
    let mut dc_prev = NdArray::zeros(&[n, hid]);
    for r in 0..n {
        let gr = &cache.gates.data()[r * g4..(r + 1) * g4];
        for k in 0..hid {
            let j = r * hid + k;
            let (i, f, gg, o) = (gr[k], gr[hid + k], gr[2 * hid + k], gr[3 * hid + k]);
            let tc = cache.tanh_c.data()[j];
            let dh = grad_h.data()[j];
            let dc = grad_c.data()[j] + dh * o * (T::one() - tc * tc);
            let dzr = &mut dz.data_mut()[r * g4..(r + 1) * g4];
            dzr[k] = dc * gg * i * (T::one() - i);
            dzr[hid + k] = dc * cache.c_prev.data()[j] * f * (T::one() - f);
            dzr[2 * hid + k] = dc * i * (T::one() - gg * gg);
            dzr[3 * hid + k] = dh * tc * o * (T::one() - o);
            dc_prev.data_mut()[j] = dc * f;
        }
    }
    let mut dx = NdArray::zeros(&[n, in_dim]);
    let mut dh_prev = NdArray::zeros(&[n, hid]);
    let mut dwx = NdArray::zeros(w.input_weight.shape());
    let mut dwh = NdArray::zeros(w.hidden_weight.shape());
    let mut db = NdArray::zeros(&[g4]);
    let wx = w.input_weight.data();
    let wh = w.hidden_weight.data();
    for r in 0..n {
        let xr = &cache.x.data()[r * in_dim..(r + 1) * in_dim];
        let hr = &cache.h_prev.data()[r * hid..(r + 1) * hid];
        for g in 0..g4 {
            let d = dz.data()[r * g4 + g];
            if d == T::zero() {
                continue;
            }
            db.data_mut()[g] += d;
            let dwx_row = &mut dwx.data_mut()[g * in_dim..(g + 1) * in_dim];
            for (acc, &xv) in dwx_row.iter_mut().zip(xr) {
                *acc += d * xv;
            }
            let dwh_row = &mut dwh.data_mut()[g * hid..(g + 1) * hid];
            for (acc, &hv) in dwh_row.iter_mut().zip(hr) {
                *acc += d * hv;
            }
            let dxr = &mut dx.data_mut()[r * in_dim..(r + 1) * in_dim];
            for (acc, &wv) in dxr.iter_mut().zip(&wx[g * in_dim..(g + 1) * in_dim]) {
                *acc += d * wv;
            }
            let dhr = &mut dh_prev.data_mut()[r * hid..(r + 1) * hid];
            for (acc, &wv) in dhr.iter_mut().zip(&wh[g * hid..(g + 1) * hid]) {
                *acc += d * wv;
            }
        }
    }
    Ok(LstmGrads {
        x: dx,
        h_prev: dh_prev,
        c_prev: dc_prev,
        input_weight: dwx,
        hidden_weight: dwh,
        bias: db,
    })
}
