//! Objective audio metrics: multi-resolution STFT distance, mel-cepstral
//! distortion, periodicity error and voiced/unvoiced F1.

mod eval;
mod mcd;
mod pitch;
mod stft_distance;

pub use eval::{evaluate_pair, evaluate_pairs, parse_metric_list, EvalConfig, FileMetrics, Metric, MetricReport};
pub use mcd::{cepstrum_mel_params, dtw, mcd_constant, mcd_dtw, mel_cepstra, DEFAULT_N_MFCC};
pub use pitch::{periodicity_error, pitch_voicing, vuv_f1, PitchConfig, PitchTrack, RMS_GATE};
pub use stft_distance::{mstft, stft_distance_terms, Resolution, DEFAULT_RESOLUTIONS, MAG_FLOOR};
