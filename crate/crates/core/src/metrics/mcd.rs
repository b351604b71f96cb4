use ndarray::Array2;

use super::stft_distance::same_rate;
use crate::dsp::{log_mel, MelParams, Waveform};
use crate::error::{Error, Result};

pub const DEFAULT_N_MFCC: usize = 13;

/// `10·√2 / ln 10`.
pub fn mcd_constant() -> f64 {
    10.0 * 2f64.sqrt() / std::f64::consts::LN_10
}

/// Analysis settings used for mel cepstra at a given sample rate.
pub fn cepstrum_mel_params(sample_rate: u32) -> MelParams {
    let wide = sample_rate >= 16_000;
    let n_fft = if wide { 1024 } else { 512 };
    MelParams {
        sample_rate,
        n_fft,
        win_length: n_fft,
        hop: n_fft / 4,
        n_mels: if wide { 80 } else { 40 },
        fmin: 0.0,
        fmax: sample_rate as f64 / 2.0,
    }
}

/// Coefficients `1..n_mfcc` of the orthonormal DCT-II of each log-mel frame;
/// returns `[frames × (n_mfcc − 1)]`.
pub fn mel_cepstra(wave: &Waveform, params: MelParams, n_mfcc: usize) -> Result<Array2<f64>> {
    let spec = log_mel(wave, params)?;
    let m = spec.n_mels();
    if n_mfcc < 2 || n_mfcc > m {
        return Err(Error::invalid(
            "mel_cepstra",
            format!("n_mfcc {n_mfcc} must lie in [2, {m}]"),
        ));
    }
    let t = spec.n_frames();
    let mut out = Array2::zeros((t, n_mfcc - 1));
    let scale = (2.0 / m as f64).sqrt();
    for f in 0..t {
        for k in 1..n_mfcc {
            let mut acc = 0.0;
            for n in 0..m {
                acc += spec.frames[[n, f]] * (std::f64::consts::PI * k as f64 * (n as f64 + 0.5) / m as f64).cos();
            }
            out[[f, k - 1]] = scale * acc;
        }
    }
    Ok(out)
}

/// Minimum-cost monotone, contiguous alignment with steps (1,0), (0,1),
/// (1,1). Returns the path from (0,0) to the last cell and its total cost.
pub fn dtw(cost: &Array2<f64>) -> (Vec<(usize, usize)>, f64) {
    let (n, m) = cost.dim();
    assert!(n > 0 && m > 0, "dtw on an empty cost matrix");
    let mut acc = Array2::from_elem((n, m), f64::INFINITY);
    for i in 0..n {
        for j in 0..m {
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let mut b = f64::INFINITY;
                if i > 0 {
                    b = b.min(acc[[i - 1, j]]);
                }
                if j > 0 {
                    b = b.min(acc[[i, j - 1]]);
                }
                if i > 0 && j > 0 {
                    b = b.min(acc[[i - 1, j - 1]]);
                }
                b
            };
            acc[[i, j]] = best + cost[[i, j]];
        }
    }
    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while i > 0 || j > 0 {
        // prefer the diagonal on ties
        let mut next = None;
        let mut best = f64::INFINITY;
        for (di, dj) in [(1, 1), (1, 0), (0, 1)] {
            if i >= di && j >= dj && acc[[i - di, j - dj]] < best {
                best = acc[[i - di, j - dj]];
                next = Some((i - di, j - dj));
            }
        }
        (i, j) = next.expect("a predecessor exists off the origin");
        path.push((i, j));
    }
    path.reverse();
    (path, acc[[n - 1, m - 1]])
}

fn euclidean_costs(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.nrows(), b.nrows()), |(i, j)| {
        a.row(i)
            .iter()
            .zip(b.row(j))
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    })
}

/// Mel-cepstral distortion in dB after DTW alignment.
pub fn mcd_dtw(x: &Waveform, y: &Waveform, n_mfcc: usize) -> Result<f64> {
    same_rate("mcd_dtw", x, y)?;
    let params = cepstrum_mel_params(x.sample_rate());
    let cx = mel_cepstra(x, params, n_mfcc)?;
    let cy = mel_cepstra(y, params, n_mfcc)?;
    if cx.nrows() < 2 || cy.nrows() < 2 {
        return Err(Error::invalid(
            "mcd_dtw",
            format!(
                "need at least 2 frames per signal, got {} and {}",
                cx.nrows(),
                cy.nrows()
            ),
        ));
    }
    let costs = euclidean_costs(&cx, &cy);
    let (path, total) = dtw(&costs);
    Ok(mcd_constant() * total / path.len() as f64)
}
