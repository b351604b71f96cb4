//! Sequence ops over the last axis: padding, average pooling, and 1-D
//! convolutions (im2col + gemm).

use super::ops::{gemm, OpKind, PadMode};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// `cols[(c*k + j) * t_out + t] = x[c, t*stride + j - pad]` (zero outside).
fn im2col(x: &[f64], channels: usize, len: usize, k: usize, stride: usize, pad: usize, t_out: usize) -> Vec<f64> {
    let mut cols = vec![0.0; channels * k * t_out];
    for c in 0..channels {
        let row = &x[c * len..(c + 1) * len];
        for j in 0..k {
            let dst = &mut cols[(c * k + j) * t_out..(c * k + j + 1) * t_out];
            for (t, d) in dst.iter_mut().enumerate() {
                let pos = (t * stride + j) as isize - pad as isize;
                if pos >= 0 && (pos as usize) < len {
                    *d = row[pos as usize];
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatters columns back, accumulating into `x`.
#[allow(clippy::too_many_arguments)]
fn col2im(cols: &[f64], x: &mut [f64], channels: usize, len: usize, k: usize, stride: usize, pad: usize, t_out: usize) {
    for c in 0..channels {
        let row = &mut x[c * len..(c + 1) * len];
        for j in 0..k {
            let src = &cols[(c * k + j) * t_out..(c * k + j + 1) * t_out];
            for (t, s) in src.iter().enumerate() {
                let pos = (t * stride + j) as isize - pad as isize;
                if pos >= 0 && (pos as usize) < len {
                    row[pos as usize] += s;
                }
            }
        }
    }
}

/// Splits a shape into (rows, last-axis length).
fn rows_len(shape: &[usize]) -> (usize, usize) {
    match shape.split_last() {
        Some((&len, rest)) => (rest.iter().product(), len),
        None => (1, 1),
    }
}

fn with_last(shape: &[usize], len: usize) -> Vec<usize> {
    let mut s = shape.to_vec();
    if let Some(l) = s.last_mut() {
        *l = len;
    }
    s
}

pub(crate) fn pad_backward(shape: &[usize], left: usize, right: usize, mode: PadMode, g: &[f64]) -> Vec<f64> {
    let (rows, len) = rows_len(shape);
    let out_len = len + left + right;
    let mut gx = vec![0.0; rows * len];
    for r in 0..rows {
        let gr = &g[r * out_len..(r + 1) * out_len];
        let xr = &mut gx[r * len..(r + 1) * len];
        for (i, gv) in gr.iter().enumerate() {
            if let Some(src) = pad_source(i, left, len, mode) {
                xr[src] += gv;
            }
        }
    }
    gx
}

fn pad_source(i: usize, left: usize, len: usize, mode: PadMode) -> Option<usize> {
    let p = i as isize - left as isize;
    let n = len as isize;
    if (0..n).contains(&p) {
        return Some(p as usize);
    }
    match mode {
        PadMode::Zero => None,
        PadMode::Reflect => {
            let r = if p < 0 { -p } else { 2 * (n - 1) - p };
            Some(r as usize)
        }
    }
}

pub(crate) fn avg_pool_backward(shape: &[usize], kernel: usize, stride: usize, g: &[f64]) -> Vec<f64> {
    let (rows, len) = rows_len(shape);
    let out_len = (len - kernel) / stride + 1;
    let mut gx = vec![0.0; rows * len];
    let w = 1.0 / kernel as f64;
    for r in 0..rows {
        for t in 0..out_len {
            let gv = g[r * out_len + t] * w;
            for j in 0..kernel {
                gx[r * len + t * stride + j] += gv;
            }
        }
    }
    gx
}

pub(crate) fn conv1d_backward(
    input: &Tensor,
    kernel: &Tensor,
    stride: usize,
    padding: usize,
    g: &[f64],
) -> (Option<Vec<f64>>, Option<Vec<f64>>) {
    let (c_in, len) = (input.shape()[0], input.shape()[1]);
    let (c_out, k) = (kernel.shape()[0], kernel.shape()[2]);
    let t_out = g.len() / c_out;
    let gk = kernel.requires_grad().then(|| {
        let cols = im2col(&input.data(), c_in, len, k, stride, padding, t_out);
        let mut gk = vec![0.0; c_out * c_in * k];
        gemm(c_out, t_out, c_in * k, g, false, &cols, true, &mut gk, false);
        gk
    });
    let gx = input.requires_grad().then(|| {
        let mut dcols = vec![0.0; c_in * k * t_out];
        gemm(
            c_in * k,
            c_out,
            t_out,
            &kernel.data(),
            true,
            g,
            false,
            &mut dcols,
            false,
        );
        let mut gx = vec![0.0; c_in * len];
        col2im(&dcols, &mut gx, c_in, len, k, stride, padding, t_out);
        gx
    });
    (gx, gk)
}

pub(crate) fn conv_transpose1d_backward(
    input: &Tensor,
    kernel: &Tensor,
    stride: usize,
    padding: usize,
    out_shape: &[usize],
    g: &[f64],
) -> (Option<Vec<f64>>, Option<Vec<f64>>) {
    let (c_in, t_in) = (input.shape()[0], input.shape()[1]);
    let (c_out, k) = (kernel.shape()[1], kernel.shape()[2]);
    let out_len = out_shape[1];
    let dcols = im2col(g, c_out, out_len, k, stride, padding, t_in);
    let gx = input.requires_grad().then(|| {
        let mut gx = vec![0.0; c_in * t_in];
        gemm(
            c_in,
            c_out * k,
            t_in,
            &kernel.data(),
            false,
            &dcols,
            false,
            &mut gx,
            false,
        );
        gx
    });
    let gk = kernel.requires_grad().then(|| {
        let mut gk = vec![0.0; c_in * c_out * k];
        gemm(
            c_in,
            t_in,
            c_out * k,
            &input.data(),
            false,
            &dcols,
            true,
            &mut gk,
            false,
        );
        gk
    });
    (gx, gk)
}

impl Tensor {
    /// Pads the last axis. Reflect mode mirrors without repeating the edge
    /// sample and needs `left, right < len`.
    pub fn pad1d(&self, left: usize, right: usize, mode: PadMode) -> Result<Tensor> {
        if self.rank() == 0 {
            return Err(Error::invalid("pad", "cannot pad a scalar"));
        }
        let (rows, len) = rows_len(self.shape());
        if mode == PadMode::Reflect && (left >= len || right >= len) {
            return Err(Error::invalid(
                "pad",
                format!("reflect padding ({left}, {right}) needs a signal longer than {len} samples"),
            ));
        }
        let out_len = len + left + right;
        let x = self.data();
        let mut out = vec![0.0; rows * out_len];
        for r in 0..rows {
            let xr = &x[r * len..(r + 1) * len];
            for (i, o) in out[r * out_len..(r + 1) * out_len].iter_mut().enumerate() {
                if let Some(src) = pad_source(i, left, len, mode) {
                    *o = xr[src];
                }
            }
        }
        drop(x);
        Ok(Tensor::from_op(
            out,
            with_last(self.shape(), out_len),
            OpKind::Pad { left, right, mode },
            vec![self.clone()],
        ))
    }

    /// Mean over windows of `kernel` samples every `stride` samples on the
    /// last axis; trailing samples that do not fill a window are dropped.
    pub fn avg_pool1d(&self, kernel: usize, stride: usize) -> Result<Tensor> {
        if self.rank() == 0 || kernel == 0 || stride == 0 {
            return Err(Error::invalid("avg_pool1d", "need rank >= 1, kernel >= 1, stride >= 1"));
        }
        let (rows, len) = rows_len(self.shape());
        if len < kernel {
            return Err(Error::invalid(
                "avg_pool1d",
                format!("input length {len} shorter than kernel {kernel}"),
            ));
        }
        let out_len = (len - kernel) / stride + 1;
        let x = self.data();
        let w = 1.0 / kernel as f64;
        let mut out = vec![0.0; rows * out_len];
        for r in 0..rows {
            for t in 0..out_len {
                let s: f64 = x[r * len + t * stride..r * len + t * stride + kernel].iter().sum();
                out[r * out_len + t] = s * w;
            }
        }
        drop(x);
        Ok(Tensor::from_op(
            out,
            with_last(self.shape(), out_len),
            OpKind::AvgPool1d { kernel, stride },
            vec![self.clone()],
        ))
    }

    /// Cross-correlation of `[C_in×T]` with `kernel` `[C_out×C_in×K]`.
    /// Output length is `(T + 2·padding − K)/stride + 1`.
    pub fn conv1d(&self, kernel: &Tensor, stride: usize, padding: usize) -> Result<Tensor> {
        let (xs, ks) = (self.shape(), kernel.shape());
        if xs.len() != 2 || ks.len() != 3 || ks[1] != xs[0] {
            return Err(Error::ShapeMismatch {
                op: "conv1d",
                lhs: xs.to_vec(),
                rhs: ks.to_vec(),
            });
        }
        if stride == 0 {
            return Err(Error::invalid("conv1d", "stride must be positive"));
        }
        let (c_in, len) = (xs[0], xs[1]);
        let (c_out, k) = (ks[0], ks[2]);
        if k == 0 || c_out == 0 {
            return Err(Error::invalid("conv1d", "empty kernel"));
        }
        if k > len + 2 * padding {
            return Err(Error::invalid(
                "conv1d",
                format!("kernel {k} longer than padded input {}", len + 2 * padding),
            ));
        }
        let t_out = (len + 2 * padding - k) / stride + 1;
        let cols = im2col(&self.data(), c_in, len, k, stride, padding, t_out);
        let mut out = vec![0.0; c_out * t_out];
        gemm(
            c_out,
            c_in * k,
            t_out,
            &kernel.data(),
            false,
            &cols,
            false,
            &mut out,
            false,
        );
        Ok(Tensor::from_op(
            out,
            vec![c_out, t_out],
            OpKind::Conv1d { stride, padding },
            vec![self.clone(), kernel.clone()],
        ))
    }

    /// Transposed convolution of `[C_in×T]` with `kernel` `[C_in×C_out×K]`,
    /// the adjoint of [`Tensor::conv1d`] with respect to its input. Output
    /// length is `(T − 1)·stride + K − 2·padding`; with `K = 2·stride` and
    /// `padding = stride/2` (even stride) that is `T·stride`.
    pub fn conv_transpose1d(&self, kernel: &Tensor, stride: usize, padding: usize) -> Result<Tensor> {
        let (xs, ks) = (self.shape(), kernel.shape());
        if xs.len() != 2 || ks.len() != 3 || ks[0] != xs[0] {
            return Err(Error::ShapeMismatch {
                op: "conv_transpose1d",
                lhs: xs.to_vec(),
                rhs: ks.to_vec(),
            });
        }
        if stride == 0 {
            return Err(Error::invalid("conv_transpose1d", "stride must be positive"));
        }
        let (c_in, t_in) = (xs[0], xs[1]);
        let (c_out, k) = (ks[1], ks[2]);
        if k == 0 || c_out == 0 || t_in == 0 {
            return Err(Error::invalid("conv_transpose1d", "empty kernel or input"));
        }
        let full = (t_in - 1) * stride + k;
        if full <= 2 * padding {
            return Err(Error::invalid(
                "conv_transpose1d",
                format!("padding {padding} trims the whole output of length {full}"),
            ));
        }
        let out_len = full - 2 * padding;
        let mut cols = vec![0.0; c_out * k * t_in];
        gemm(
            c_out * k,
            c_in,
            t_in,
            &kernel.data(),
            true,
            &self.data(),
            false,
            &mut cols,
            false,
        );
        let mut out = vec![0.0; c_out * out_len];
        col2im(&cols, &mut out, c_out, out_len, k, stride, padding, t_in);
        Ok(Tensor::from_op(
            out,
            vec![c_out, out_len],
            OpKind::ConvTranspose1d { stride, padding },
            vec![self.clone(), kernel.clone()],
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv1d_hand_example() {
        let x = Tensor::new(vec![1.0, 2.0, 3.0, 4.0], &[1, 4]).unwrap();
        let k = Tensor::new(vec![1.0, 1.0], &[1, 1, 2]).unwrap();
        assert_eq!(x.conv1d(&k, 1, 0).unwrap().to_vec(), vec![3.0, 5.0, 7.0]);
    }

    #[test]
    fn conv1d_identity_kernel() {
        let x = Tensor::new(vec![0.5, -1.0, 2.0, 7.0, 3.0], &[1, 5]).unwrap();
        let k = Tensor::new(vec![1.0], &[1, 1, 1]).unwrap();
        assert_eq!(x.conv1d(&k, 1, 0).unwrap().to_vec(), x.to_vec());
    }

    #[test]
    fn conv1d_output_length_and_errors() {
        let x = Tensor::zeros(&[2, 100]);
        let k = Tensor::zeros(&[3, 2, 15]);
        assert_eq!(x.conv1d(&k, 4, 7).unwrap().shape(), &[3, 25]);
        assert!(x.conv1d(&k, 0, 7).is_err());
        let empty = Tensor::zeros(&[3, 2, 0]);
        assert!(x.conv1d(&empty, 1, 0).is_err());
        let wrong = Tensor::zeros(&[3, 4, 3]);
        assert!(matches!(x.conv1d(&wrong, 1, 0), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn conv_transpose_length_is_t_times_stride() {
        for stride in [2usize, 4, 8] {
            let x = Tensor::zeros(&[3, 11]);
            let k = Tensor::zeros(&[3, 2, 2 * stride]);
            let y = x.conv_transpose1d(&k, stride, stride / 2).unwrap();
            assert_eq!(y.shape(), &[2, 11 * stride]);
        }
    }

    #[test]
    fn reflect_pad_values() {
        let x = Tensor::new(vec![1.0, 2.0, 3.0, 4.0], &[4]).unwrap();
        let y = x.pad1d(2, 2, PadMode::Reflect).unwrap();
        assert_eq!(y.to_vec(), vec![3.0, 2.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0]);
        assert!(x.pad1d(4, 0, PadMode::Reflect).is_err());
        let z = x.pad1d(1, 0, PadMode::Zero).unwrap();
        assert_eq!(z.to_vec(), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn avg_pool_of_constant() {
        let x = Tensor::full(&[1, 8], 0.25);
        let y = x.avg_pool1d(2, 2).unwrap();
        assert_eq!(y.shape(), &[1, 4]);
        assert!(y.data().iter().all(|&v| v == 0.25));
    }
}
