#![allow(dead_code)]

//! Finite-difference oracle for backpropagated gradients of
//! E = ½·Σ(target − output)². The loss is evaluated by an independent forward
//! pass in 256-bit floating point, so the central difference quotient is
//! limited by the step size rather than by f64 round-off.

use astro_float::{BigFloat, Consts, RoundingMode};
use mlpcast::MlpNetwork;

pub const H: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-6;
pub const TINY_GRAD: f64 = 1e-10;
pub const ABS_TOL: f64 = 1e-8;

const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

pub struct Oracle {
    consts: Consts,
}

impl Oracle {
    pub fn new() -> Self {
        Self {
            consts: Consts::new().expect("constants cache"),
        }
    }

    pub fn big(v: f64) -> BigFloat {
        BigFloat::from_f64(v, P)
    }

    /// E with coefficient `(layer, is_bias, idx)` shifted by `delta`.
    pub fn loss(
        &mut self,
        net: &MlpNetwork,
        input: &[f64],
        target: &[f64],
        shift: (usize, bool, usize),
        delta: &BigFloat,
    ) -> BigFloat {
        let one = Self::big(1.0);
        let mut act: Vec<BigFloat> = input.iter().map(|&x| Self::big(x)).collect();
        for (k, layer) in net.layers().iter().enumerate() {
            let mut next = Vec::with_capacity(layer.outputs());
            for j in 0..layer.outputs() {
                let coef = |is_bias: bool, idx: usize, v: f64| {
                    let b = Self::big(v);
                    if shift == (k, is_bias, idx) {
                        b.add(delta, P, RM)
                    } else {
                        b
                    }
                };
                let mut z = coef(true, j, layer.biases()[j]);
                for (i, a) in act.iter().enumerate() {
                    let idx = j * layer.inputs() + i;
                    let w = coef(false, idx, layer.weights()[idx]);
                    z = z.add(&w.mul(a, P, RM), P, RM);
                }
                let e = z.neg().exp(P, RM, &mut self.consts);
                next.push(one.div(&one.add(&e, P, RM), P, RM));
            }
            act = next;
        }
        let mut sum = Self::big(0.0);
        for (o, &t) in act.iter().zip(target) {
            let d = Self::big(t).sub(o, P, RM);
            sum = sum.add(&d.mul(&d, P, RM), P, RM);
        }
        sum.mul(&Self::big(0.5), P, RM)
    }

    pub fn numeric(&mut self, net: &MlpNetwork, input: &[f64], target: &[f64], shift: (usize, bool, usize)) -> f64 {
        let h = Self::big(H);
        let up = self.loss(net, input, target, shift, &h);
        let down = self.loss(net, input, target, shift, &h.neg());
        let q = up.sub(&down, P, RM).div(&h.mul(&Self::big(2.0), P, RM), P, RM);
        q.to_string().parse::<f64>().expect("finite quotient")
    }
}

/// `Some(relative error)` when the pair agrees (0 for tiny gradients
/// compared absolutely), `None` otherwise.
pub fn compare(analytic: f64, numeric: f64) -> Option<f64> {
    if analytic.abs() < TINY_GRAD && numeric.abs() < TINY_GRAD {
        return ((analytic - numeric).abs() <= ABS_TOL).then_some(0.0);
    }
    let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs());
    (rel <= REL_TOL).then_some(rel)
}

/// Compares every coefficient's gradient. On success returns the largest
/// relative error among coefficients compared relatively.
pub fn check(net: &MlpNetwork, input: &[f64], target: &[f64]) -> Result<f64, String> {
    let mut oracle = Oracle::new();
    let (_, grads) = net.gradients(input, target).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (k, layer) in net.layers().iter().enumerate() {
        for i in 0..layer.weights().len() {
            let n = oracle.numeric(net, input, target, (k, false, i));
            let a = grads.weights[k][i];
            worst =
                worst.max(compare(a, n).ok_or_else(|| format!("layer {k} weight {i}: analytic {a:e} numeric {n:e}"))?);
        }
        for i in 0..layer.biases().len() {
            let n = oracle.numeric(net, input, target, (k, true, i));
            let a = grads.biases[k][i];
            worst =
                worst.max(compare(a, n).ok_or_else(|| format!("layer {k} bias {i}: analytic {a:e} numeric {n:e}"))?);
        }
    }
    Ok(worst)
}
