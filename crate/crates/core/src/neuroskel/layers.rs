//! Dense CHW tensor primitives for the forward pass. Everything runs in `f32`
//! with a fixed accumulation order, so results are bit-reproducible.

use rayon::prelude::*;

use super::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl FeatureMap {
    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }
}

/// Stride-1 convolution with zero padding `k / 2`, so odd kernels keep the
/// spatial size. `weight` is `[out, in, k, k]`.
pub fn conv2d(input: &FeatureMap, weight: &Tensor, bias: &Tensor) -> FeatureMap {
    let (cout, cin, k) = (weight.shape[0], weight.shape[1], weight.shape[2]);
    assert_eq!(cin, input.channels, "conv input channels");
    assert_eq!(k, weight.shape[3], "square kernels only");
    let (h, w) = (input.height, input.width);
    let pad = (k / 2) as isize;
    let mut data = vec![0.0f32; cout * h * w];
    data.par_chunks_mut(h * w).enumerate().for_each(|(o, out)| {
        out.fill(bias.data[o]);
        for c in 0..cin {
            let src = input.plane(c);
            for ky in 0..k {
                for kx in 0..k {
                    let wv = weight.data[((o * cin + c) * k + ky) * k + kx];
                    if wv == 0.0 {
                        continue;
                    }
                    let dy = ky as isize - pad;
                    let dx = kx as isize - pad;
                    let x_lo = (-dx).max(0) as usize;
                    let x_hi = (w as isize - dx).min(w as isize) as usize;
                    for y in 0..h {
                        let sy = y as isize + dy;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        let row = &src[sy as usize * w..][..w];
                        let dst = &mut out[y * w..][..w];
                        for x in x_lo..x_hi {
                            dst[x] += wv * row[(x as isize + dx) as usize];
                        }
                    }
                }
            }
        }
    });
    FeatureMap {
        channels: cout,
        height: h,
        width: w,
        data,
    }
}

/// 2×2 stride-2 transpose convolution; doubles the spatial size.
/// `weight` is `[in, out, 2, 2]`.
pub fn conv_transpose2x2(input: &FeatureMap, weight: &Tensor, bias: &Tensor) -> FeatureMap {
    let (cin, cout) = (weight.shape[0], weight.shape[1]);
    assert_eq!(cin, input.channels, "transpose conv input channels");
    let (h, w) = (input.height, input.width);
    let (oh, ow) = (2 * h, 2 * w);
    let mut data = vec![0.0f32; cout * oh * ow];
    data.par_chunks_mut(oh * ow).enumerate().for_each(|(o, out)| {
        out.fill(bias.data[o]);
        for c in 0..cin {
            let src = input.plane(c);
            let kern = &weight.data[(c * cout + o) * 4..][..4];
            for y in 0..h {
                for x in 0..w {
                    let v = src[y * w + x];
                    out[2 * y * ow + 2 * x] += v * kern[0];
                    out[2 * y * ow + 2 * x + 1] += v * kern[1];
                    out[(2 * y + 1) * ow + 2 * x] += v * kern[2];
                    out[(2 * y + 1) * ow + 2 * x + 1] += v * kern[3];
                }
            }
        }
    });
    FeatureMap {
        channels: cout,
        height: oh,
        width: ow,
        data,
    }
}

pub fn maxpool2x2(input: &FeatureMap) -> FeatureMap {
    let (h, w) = (input.height / 2, input.width / 2);
    let mut data = Vec::with_capacity(input.channels * h * w);
    for c in 0..input.channels {
        let src = input.plane(c);
        let iw = input.width;
        for y in 0..h {
            for x in 0..w {
                let i = 2 * y * iw + 2 * x;
                data.push(src[i].max(src[i + 1]).max(src[i + iw]).max(src[i + iw + 1]));
            }
        }
    }
    FeatureMap {
        channels: input.channels,
        height: h,
        width: w,
        data,
    }
}

pub fn relu(mut x: FeatureMap) -> FeatureMap {
    for v in &mut x.data {
        *v = v.max(0.0);
    }
    x
}

pub fn sigmoid(v: f32) -> f32 {
    1.0 / (1.0 + (-v).exp())
}

/// Channel concatenation, `a` first.
pub fn concat(a: &FeatureMap, b: &FeatureMap) -> FeatureMap {
    assert_eq!((a.height, a.width), (b.height, b.width), "concat spatial size");
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    FeatureMap {
        channels: a.channels + b.channels,
        height: a.height,
        width: a.width,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(channels: usize, h: usize, w: usize, data: Vec<f32>) -> FeatureMap {
        FeatureMap {
            channels,
            height: h,
            width: w,
            data,
        }
    }

    #[test]
    fn conv_matches_hand_computation() {
        // 5x5 patch 1..=25, kernel = identity plus 0.5 of the east neighbor
        let input = fm(1, 5, 5, (1..=25).map(|v| v as f32).collect());
        let weight = Tensor {
            shape: vec![1, 1, 3, 3],
            data: vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0, 0.0],
        };
        let bias = Tensor {
            shape: vec![1],
            data: vec![0.25],
        };
        let out = conv2d(&input, &weight, &bias);
        for y in 0..5 {
            for x in 0..5 {
                let v = (y * 5 + x + 1) as f32;
                let east = if x + 1 < 5 { v + 1.0 } else { 0.0 };
                assert_eq!(out.data[y * 5 + x], v + 0.5 * east + 0.25, "({x}, {y})");
            }
        }
    }

    #[test]
    fn conv_zero_padding_at_corners() {
        // all-ones kernel on all-ones input counts in-bounds neighbors
        let input = fm(1, 5, 5, vec![1.0; 25]);
        let weight = Tensor {
            shape: vec![1, 1, 3, 3],
            data: vec![1.0; 9],
        };
        let out = conv2d(&input, &weight, &Tensor::zeros(&[1]));
        assert_eq!(out.data[0], 4.0);
        assert_eq!(out.data[2], 6.0);
        assert_eq!(out.data[12], 9.0);
    }

    #[test]
    fn conv_sums_over_input_channels() {
        let input = fm(2, 1, 1, vec![2.0, 3.0]);
        let weight = Tensor {
            shape: vec![2, 2, 1, 1],
            data: vec![1.0, 10.0, -1.0, 0.5],
        };
        let bias = Tensor {
            shape: vec![2],
            data: vec![0.0, 1.0],
        };
        let out = conv2d(&input, &weight, &bias);
        assert_eq!(out.data, vec![32.0, 0.5]);
    }

    #[test]
    fn transpose_conv_scatters_kernel() {
        let input = fm(1, 1, 2, vec![1.0, 2.0]);
        let weight = Tensor {
            shape: vec![1, 1, 2, 2],
            data: vec![1.0, 2.0, 3.0, 4.0],
        };
        let out = conv_transpose2x2(&input, &weight, &Tensor::zeros(&[1]));
        assert_eq!((out.height, out.width), (2, 4));
        assert_eq!(out.data, vec![1.0, 2.0, 2.0, 4.0, 3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn pool_relu_sigmoid_concat() {
        let x = fm(1, 2, 4, vec![1.0, -2.0, 0.0, 5.0, 3.0, 0.5, -1.0, 4.0]);
        assert_eq!(maxpool2x2(&x).data, vec![3.0, 5.0]);
        assert_eq!(relu(x.clone()).data[1], 0.0);
        assert_eq!(sigmoid(0.0), 0.5);
        let c = concat(&x, &x);
        assert_eq!(c.channels, 2);
        assert_eq!(c.plane(1), x.plane(0));
    }
}
