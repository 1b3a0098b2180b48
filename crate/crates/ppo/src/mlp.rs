//! Dense feed-forward networks evaluated in batches over a flat parameter slice.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2, Axis, LinalgScalar, ScalarOperand};
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Floating-point type a network can be evaluated in.
pub trait Real: Float + LinalgScalar + ScalarOperand + Send + Sync + std::fmt::Debug + 'static {
    fn of(x: f64) -> Self;
    fn f64(self) -> f64;
    /// `eˣ − 1` for `x ≤ 0`, as used by ELU.
    fn elu_neg(self) -> Self;
}

impl Real for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }
    fn f64(self) -> f64 {
        self as f64
    }
    #[inline(always)]
    fn elu_neg(self) -> Self {
        exp_f32(self) - 1.0
    }
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn f64(self) -> f64 {
        self
    }
    fn elu_neg(self) -> Self {
        self.exp_m1()
    }
}

/// Branch-free `eˣ` (relative error below 2e-7) that the compiler can
/// vectorize; libm's scalar call dominates the hidden-layer cost otherwise.
#[inline(always)]
pub fn exp_f32(x: f32) -> f32 {
    const LN2_HI: f32 = 0.693_359_4;
    const LN2_LO: f32 = -2.121_944_4e-4;
    // adding 1.5·2²³ rounds to nearest and leaves n in the low mantissa bits
    const SHIFT: f32 = 12_582_912.0;
    let x = if x < -87.0 { -87.0 } else { x };
    let x = if x > 88.0 { 88.0 } else { x };
    let t = x * std::f32::consts::LOG2_E + SHIFT;
    let n = t - SHIFT;
    let ni = t.to_bits().wrapping_sub(SHIFT.to_bits()) as i32;
    let r = x - n * LN2_HI - n * LN2_LO;
    let p = 1.0
        + r * (1.0
            + r * (0.5
                + r * (1.0 / 6.0 + r * (1.0 / 24.0 + r * (1.0 / 120.0 + r * (1.0 / 720.0 + r * (1.0 / 5040.0)))))));
    p * f32::from_bits(((ni + 127) as u32) << 23)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Identity,
    Tanh,
}

/// Position of one layer's weights (`outputs × inputs`, row-major) and biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpan {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: usize,
    pub bias: usize,
}

/// Lays out consecutive layers of widths `sizes` starting at `offset`.
pub fn layout_layers(sizes: &[usize], offset: &mut usize) -> Vec<LayerSpan> {
    sizes
        .windows(2)
        .map(|w| {
            let span = LayerSpan { inputs: w[0], outputs: w[1], weight: *offset, bias: *offset + w[0] * w[1] };
            *offset = span.bias + w[1];
            span
        })
        .collect()
}

#[inline(always)]
pub fn elu<T: Real>(z: T) -> T {
    // both branches evaluated so the loop stays branch-free
    let neg = (if z < T::zero() { z } else { T::zero() }).elu_neg();
    if z > T::zero() {
        z
    } else {
        neg
    }
}

/// ELU derivative from pre-activation `z` and activation `h`.
fn elu_grad<T: Real>(z: T, h: T) -> T {
    if z > T::zero() {
        T::one()
    } else {
        h + T::one()
    }
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    /// Input to each layer.
    pub inputs: Vec<Array2<T>>,
    /// Pre-activation of each layer.
    pub pre: Vec<Array2<T>>,
    pub output: Array2<T>,
}

fn weights<'a, T>(theta: &'a [T], l: &LayerSpan) -> ArrayView2<'a, T> {
    ArrayView2::from_shape((l.outputs, l.inputs), &theta[l.weight..l.weight + l.inputs * l.outputs])
        .expect("layer span within parameters")
}

/// Batched forward pass; rows of `x` are samples. ELU on hidden layers.
pub fn forward<T: Real>(layers: &[LayerSpan], theta: &[T], x: ArrayView2<T>, out: OutputActivation) -> Trace<T> {
    let n = layers.len();
    let mut inputs = Vec::with_capacity(n);
    let mut pre = Vec::with_capacity(n);
    let mut h = x.to_owned();
    for (k, l) in layers.iter().enumerate() {
        let b = ndarray::ArrayView1::from(&theta[l.bias..l.bias + l.outputs]);
        let mut z = b.broadcast((h.nrows(), l.outputs)).expect("bias row").to_owned();
        general_mat_mul(T::one(), &h, &weights(theta, l).t(), T::one(), &mut z);
        let act = if k + 1 < n {
            z.mapv(elu)
        } else {
            match out {
                OutputActivation::Identity => z.clone(),
                OutputActivation::Tanh => z.mapv(Float::tanh),
            }
        };
        inputs.push(std::mem::replace(&mut h, act));
        pre.push(z);
    }
    Trace { inputs, pre, output: h }
}

/// Accumulates into `grad` the parameter gradient given `d_out`, the loss
/// gradient with respect to the network output.
pub fn backward<T: Real>(
    layers: &[LayerSpan],
    theta: &[T],
    trace: &Trace<T>,
    d_out: Array2<T>,
    out: OutputActivation,
    grad: &mut [T],
) {
    let n = layers.len();
    let mut dz = match out {
        OutputActivation::Identity => d_out,
        OutputActivation::Tanh => {
            let mut d = d_out;
            d.zip_mut_with(&trace.output, |g, &y| *g = *g * (T::one() - y * y));
            d
        }
    };
    for k in (0..n).rev() {
        let l = &layers[k];
        let x = &trace.inputs[k];
        {
            let mut gw = ArrayViewMut2::from_shape((l.outputs, l.inputs), &mut grad[l.weight..l.weight + l.inputs * l.outputs])
                .expect("layer span within parameters");
            general_mat_mul(T::one(), &dz.t(), x, T::one(), &mut gw);
        }
        for (g, s) in grad[l.bias..l.bias + l.outputs].iter_mut().zip(dz.sum_axis(Axis(0))) {
            *g = *g + s;
        }
        if k > 0 {
            let mut dx = dz.dot(&weights(theta, l));
            ndarray::Zip::from(&mut dx)
                .and(&trace.pre[k - 1])
                .and(x)
                .for_each(|g, &z, &h| *g = *g * elu_grad(z, h));
            dz = dx;
        }
    }
}
