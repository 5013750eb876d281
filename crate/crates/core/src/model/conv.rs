use serde::{Deserialize, Serialize};

use super::Conv2d;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    Valid,
    Same,
}

/// Output length and leading padding along one spatial axis.
fn axis_geometry(input: usize, kernel: usize, stride: usize, padding: Padding) -> Option<(usize, usize)> {
    match padding {
        Padding::Valid => {
            if input < kernel {
                None
            } else {
                Some(((input - kernel) / stride + 1, 0))
            }
        }
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + kernel).saturating_sub(input);
            Some((out, total / 2))
        }
    }
}

struct Geometry {
    in_h: usize,
    in_w: usize,
    out_h: usize,
    out_w: usize,
    pad_t: usize,
    pad_l: usize,
}

impl Conv2d {
    fn geometry(&self, input: &[usize]) -> Result<Geometry> {
        if input.len() != 3 || input[0] != self.in_channels {
            return Err(Error::ShapeInconsistency(format!(
                "conv2d expects [{}, H, W] input, got {input:?}",
                self.in_channels
            )));
        }
        let (kh, kw) = self.kernel;
        let bad = || {
            Error::ShapeInconsistency(format!(
                "conv2d kernel {kh}x{kw} does not fit input {input:?}"
            ))
        };
        let (out_h, pad_t) = axis_geometry(input[1], kh, self.stride, self.padding).ok_or_else(bad)?;
        let (out_w, pad_l) = axis_geometry(input[2], kw, self.stride, self.padding).ok_or_else(bad)?;
        Ok(Geometry {
            in_h: input[1],
            in_w: input[2],
            out_h,
            out_w,
            pad_t,
            pad_l,
        })
    }

    pub(super) fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let (kh, kw) = self.kernel;
        if self.stride == 0 || kh == 0 || kw == 0 || self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::ShapeInconsistency(
                "conv2d stride, kernel and channel counts must be positive".into(),
            ));
        }
        if self.weights.len() != self.out_channels * self.in_channels * kh * kw
            || self.bias.len() != self.out_channels
        {
            return Err(Error::ShapeInconsistency(format!(
                "conv2d {}x{}x{kh}x{kw} has {} weights and {} biases",
                self.out_channels,
                self.in_channels,
                self.weights.len(),
                self.bias.len()
            )));
        }
        let g = self.geometry(input)?;
        Ok(vec![self.out_channels, g.out_h, g.out_w])
    }

    /// Visit every (output index, weight index, input index) triple that
    /// contributes to the convolution.
    fn for_each_tap(&self, g: &Geometry, mut f: impl FnMut(usize, usize, usize)) {
        let (kh, kw) = self.kernel;
        for o in 0..self.out_channels {
            for oy in 0..g.out_h {
                for ox in 0..g.out_w {
                    let out_idx = (o * g.out_h + oy) * g.out_w + ox;
                    for c in 0..self.in_channels {
                        for ky in 0..kh {
                            let iy = (oy * self.stride + ky) as isize - g.pad_t as isize;
                            if iy < 0 || iy as usize >= g.in_h {
                                continue;
                            }
                            for kx in 0..kw {
                                let ix = (ox * self.stride + kx) as isize - g.pad_l as isize;
                                if ix < 0 || ix as usize >= g.in_w {
                                    continue;
                                }
                                let w_idx = ((o * self.in_channels + c) * kh + ky) * kw + kx;
                                let in_idx = (c * g.in_h + iy as usize) * g.in_w + ix as usize;
                                f(out_idx, w_idx, in_idx);
                            }
                        }
                    }
                }
            }
        }
    }

    pub(super) fn forward(&self, x: &[f64], input_shape: &[usize]) -> Vec<f64> {
        let g = self.geometry(input_shape).expect("validated at model construction");
        let plane = g.out_h * g.out_w;
        let mut out: Vec<f64> = (0..self.out_channels * plane)
            .map(|i| self.bias[i / plane])
            .collect();
        self.for_each_tap(&g, |o, w, i| out[o] += self.weights[w] * x[i]);
        out
    }

    pub(super) fn backward(
        &self,
        x: &[f64],
        input_shape: &[usize],
        grad: &[f64],
        params: Option<(&mut Vec<f64>, &mut Vec<f64>)>,
    ) -> Vec<f64> {
        let g = self.geometry(input_shape).expect("validated at model construction");
        let mut gin = vec![0.0; x.len()];
        match params {
            Some((gw, gb)) => {
                let plane = g.out_h * g.out_w;
                for (i, gv) in grad.iter().enumerate() {
                    gb[i / plane] += gv;
                }
                self.for_each_tap(&g, |o, w, i| {
                    gin[i] += self.weights[w] * grad[o];
                    gw[w] += x[i] * grad[o];
                });
            }
            None => self.for_each_tap(&g, |o, w, i| gin[i] += self.weights[w] * grad[o]),
        }
        gin
    }
}
