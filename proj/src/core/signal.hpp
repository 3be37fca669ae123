#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace glab {

// Periodic Hanning window: 0.5 * (1 - cos(2*pi*n / N)).
std::vector<double> hann_window(int64_t n);

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& buf);

// Magnitude STFT over a real series. No padding: frame f covers samples
// [f*hop, f*hop + window); frames = (T - window) / hop + 1 (T >= window).
// FFT size equals the window; bins = window / 2 + 1. Row-major
// [frames, bins].
struct StftSpec {
  int64_t window = 32;
  int64_t hop = 8;
  int64_t bins() const { return window / 2 + 1; }
  int64_t frames(int64_t t) const { return (t - window) / hop + 1; }
};

std::vector<double> stft_magnitude(const std::vector<double>& series, const StftSpec& spec = {});

// Differentiable log-magnitude STFT of a [T] tensor -> [frames, bins].
// Magnitudes are floored at `floor_eps` before the log.
Tensor stft_log_magnitude_t(const Tensor& series, const StftSpec& spec = {},
                            double floor_eps = 1e-10);

// Orthonormal DCT-II matrix D (size [K, K]); D * x is the forward transform
// and D^T * y the inverse (DCT-III). Energy-preserving.
std::vector<double> dct_matrix(int64_t k);
std::vector<double> dct(const std::vector<double>& x);
std::vector<double> idct(const std::vector<double>& y);

// Log-mel features: 16 kHz mono input, 64 triangular HTK-scale filters over
// 0..8 kHz, power spectrum, floor 1e-10 before the natural log. Frame f
// covers samples [f*hop, f*hop + n_fft) (tail zero-padded);
// frames = samples / hop, which floor-aligns 16 kHz audio to 30 fps motion
// at the default hop 533. Row-major [frames, n_mels].
struct LogMelSpec {
  int64_t sample_rate = 16000;
  int64_t n_mels = 64;
  int64_t hop = 533;  // sample_rate / motion fps (16000 / 30)
  int64_t n_fft = 1024;
  double fmin = 0.0;
  double fmax = 8000.0;
  double floor_eps = 1e-10;
};

std::vector<double> log_mel(const std::vector<double>& samples, const LogMelSpec& spec,
                            int64_t* frames_out);

// Triangular mel filterbank, row-major [n_mels, n_fft/2 + 1].
std::vector<double> mel_filterbank(const LogMelSpec& spec);

// 16-bit PCM mono WAV. read fails on other encodings; samples scaled to
// [-1, 1).
std::vector<double> read_wav(const std::string& path, int64_t* sample_rate_out);
void write_wav(const std::string& path, const std::vector<double>& samples, int64_t sample_rate);

}  // namespace glab
