#include "core/signal.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace glab {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::vector<double> hann_window(int64_t n) {
  std::vector<double> w(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / static_cast<double>(n)));
  return w;
}

void fft_radix2(std::vector<std::complex<double>>& buf) {
  size_t n = buf.size();
  if (n == 0 || (n & (n - 1)) != 0)
    fail(Status::invalid_argument, "fft: size must be a power of two, got " + std::to_string(n));
  // bit-reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(buf[i], buf[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * kPi / static_cast<double>(len);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = buf[i + k];
        std::complex<double> v = buf[i + k + len / 2] * w;
        buf[i + k] = u + v;
        buf[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::vector<double> stft_magnitude(const std::vector<double>& series, const StftSpec& spec) {
  int64_t t = static_cast<int64_t>(series.size());
  if (t < spec.window)
    fail(Status::invalid_argument, "stft: series length " + std::to_string(t) +
                                       " shorter than window " + std::to_string(spec.window));
  int64_t frames = spec.frames(t);
  int64_t bins = spec.bins();
  std::vector<double> win = hann_window(spec.window);
  std::vector<double> out(static_cast<size_t>(frames * bins));
  std::vector<std::complex<double>> buf(static_cast<size_t>(spec.window));
  for (int64_t f = 0; f < frames; ++f) {
    for (int64_t i = 0; i < spec.window; ++i)
      buf[i] = std::complex<double>(series[f * spec.hop + i] * win[i], 0.0);
    fft_radix2(buf);
    for (int64_t b = 0; b < bins; ++b) out[f * bins + b] = std::abs(buf[b]);
  }
  return out;
}

Tensor stft_log_magnitude_t(const Tensor& series, const StftSpec& spec, double floor_eps) {
  if (series.ndim() != 1)
    fail(Status::shape_mismatch, "stft: expected a [T] series, got " + shape_str(series.shape()));
  int64_t t = series.dim(0);
  if (t < spec.window)
    fail(Status::invalid_argument, "stft: series length " + std::to_string(t) +
                                       " shorter than window " + std::to_string(spec.window));
  int64_t frames = spec.frames(t);
  int64_t bins = spec.bins();
  std::vector<Tensor> rows;
  rows.reserve(static_cast<size_t>(frames));
  for (int64_t f = 0; f < frames; ++f)
    rows.push_back(reshape(slice(series, 0, f * spec.hop, f * spec.hop + spec.window),
                           {1, spec.window}));
  Tensor framed = concat(rows, 0);  // [frames, window]
  Tensor win = Tensor::from({spec.window}, hann_window(spec.window));
  Tensor windowed = mul(framed, win);
  std::vector<double> cosm(static_cast<size_t>(spec.window * bins));
  std::vector<double> sinm(static_cast<size_t>(spec.window * bins));
  for (int64_t i = 0; i < spec.window; ++i) {
    for (int64_t b = 0; b < bins; ++b) {
      double ang = -2.0 * kPi * static_cast<double>(i * b) / static_cast<double>(spec.window);
      cosm[i * bins + b] = std::cos(ang);
      sinm[i * bins + b] = std::sin(ang);
    }
  }
  Tensor re = matmul(windowed, Tensor::from({spec.window, bins}, std::move(cosm)));
  Tensor im = matmul(windowed, Tensor::from({spec.window, bins}, std::move(sinm)));
  // Tiny bias keeps sqrt differentiable at silent bins; it perturbs the
  // magnitude by < 1e-20, far below the log floor.
  Tensor mag = sqrt(add_scalar(add(mul(re, re), mul(im, im)), 1e-40));
  return log(clamp_min(mag, floor_eps));
}

std::vector<double> dct_matrix(int64_t k) {
  std::vector<double> d(static_cast<size_t>(k * k));
  double s0 = std::sqrt(1.0 / static_cast<double>(k));
  double s = std::sqrt(2.0 / static_cast<double>(k));
  for (int64_t r = 0; r < k; ++r) {
    double scale = r == 0 ? s0 : s;
    for (int64_t n = 0; n < k; ++n)
      d[r * k + n] = scale * std::cos(kPi * (2.0 * n + 1.0) * r / (2.0 * static_cast<double>(k)));
  }
  return d;
}

std::vector<double> dct(const std::vector<double>& x) {
  int64_t k = static_cast<int64_t>(x.size());
  auto d = dct_matrix(k);
  std::vector<double> y(static_cast<size_t>(k), 0.0);
  for (int64_t r = 0; r < k; ++r) {
    double acc = 0.0;
    for (int64_t n = 0; n < k; ++n) acc += d[r * k + n] * x[n];
    y[r] = acc;
  }
  return y;
}

std::vector<double> idct(const std::vector<double>& y) {
  int64_t k = static_cast<int64_t>(y.size());
  auto d = dct_matrix(k);
  std::vector<double> x(static_cast<size_t>(k), 0.0);
  for (int64_t n = 0; n < k; ++n) {
    double acc = 0.0;
    for (int64_t r = 0; r < k; ++r) acc += d[r * k + n] * y[r];
    x[n] = acc;
  }
  return x;
}

std::vector<double> mel_filterbank(const LogMelSpec& spec) {
  auto hz_to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto mel_to_hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  int64_t bins = spec.n_fft / 2 + 1;
  double mel_lo = hz_to_mel(spec.fmin), mel_hi = hz_to_mel(spec.fmax);
  std::vector<double> edges(static_cast<size_t>(spec.n_mels + 2));
  for (int64_t i = 0; i < spec.n_mels + 2; ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(spec.n_mels + 1));
  std::vector<double> fb(static_cast<size_t>(spec.n_mels * bins), 0.0);
  for (int64_t m = 0; m < spec.n_mels; ++m) {
    double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int64_t b = 0; b < bins; ++b) {
      double f = static_cast<double>(b) * static_cast<double>(spec.sample_rate) /
                 static_cast<double>(spec.n_fft);
      double w = 0.0;
      if (f > lo && f < mid)
        w = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        w = (hi - f) / (hi - mid);
      fb[m * bins + b] = w;
    }
  }
  return fb;
}

std::vector<double> log_mel(const std::vector<double>& samples, const LogMelSpec& spec,
                            int64_t* frames_out) {
  int64_t n = static_cast<int64_t>(samples.size());
  if (n < spec.hop) fail(Status::invalid_argument, "log_mel: audio shorter than one hop");
  int64_t frames = n / spec.hop;  // floor-aligned to the paired motion length
  int64_t bins = spec.n_fft / 2 + 1;
  auto fb = mel_filterbank(spec);
  auto win = hann_window(spec.n_fft);
  std::vector<double> out(static_cast<size_t>(frames * spec.n_mels));
  std::vector<std::complex<double>> buf(static_cast<size_t>(spec.n_fft));
  std::vector<double> power(static_cast<size_t>(bins));
  for (int64_t f = 0; f < frames; ++f) {
    int64_t start = f * spec.hop;
    for (int64_t i = 0; i < spec.n_fft; ++i) {
      double s = start + i < n ? samples[start + i] : 0.0;
      buf[i] = std::complex<double>(s * win[i], 0.0);
    }
    fft_radix2(buf);
    for (int64_t b = 0; b < bins; ++b) power[b] = std::norm(buf[b]);
    for (int64_t m = 0; m < spec.n_mels; ++m) {
      double acc = 0.0;
      const double* row = &fb[m * bins];
      for (int64_t b = 0; b < bins; ++b) acc += row[b] * power[b];
      out[f * spec.n_mels + m] = std::log(std::max(acc, spec.floor_eps));
    }
  }
  if (frames_out) *frames_out = frames;
  return out;
}

// ---------------------------------------------------------------------------
// WAV (PCM16 mono)
// ---------------------------------------------------------------------------

namespace {
uint32_t read_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t read_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
}  // namespace

std::vector<double> read_wav(const std::string& path, int64_t* sample_rate_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Status::io, "wav: cannot open " + path);
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 44 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0)
    fail(Status::io, "wav: " + path + " is not a RIFF/WAVE file");
  size_t pos = 12;
  int64_t sample_rate = 0;
  int channels = 0, bits = 0, fmt = 0;
  std::vector<double> samples;
  bool got_fmt = false, got_data = false;
  while (pos + 8 <= data.size()) {
    const unsigned char* hdr = data.data() + pos;
    uint32_t chunk_size = read_u32(hdr + 4);
    const unsigned char* body = hdr + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0 && chunk_size >= 16) {
      fmt = read_u16(body);
      channels = read_u16(body + 2);
      sample_rate = read_u32(body + 4);
      bits = read_u16(body + 14);
      got_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!got_fmt) fail(Status::io, "wav: data chunk before fmt chunk in " + path);
      if (fmt != 1 || channels != 1 || bits != 16)
        fail(Status::invalid_argument,
             "wav: " + path + " must be PCM16 mono (got fmt=" + std::to_string(fmt) +
                 ", channels=" + std::to_string(channels) + ", bits=" + std::to_string(bits) + ")");
      size_t count = std::min<size_t>(chunk_size, data.size() - (pos + 8)) / 2;
      samples.resize(count);
      for (size_t i = 0; i < count; ++i) {
        int16_t v = static_cast<int16_t>(body[2 * i] | (body[2 * i + 1] << 8));
        samples[i] = static_cast<double>(v) / 32768.0;
      }
      got_data = true;
    }
    pos += 8 + chunk_size + (chunk_size & 1);
  }
  if (!got_data) fail(Status::io, "wav: no data chunk in " + path);
  if (sample_rate_out) *sample_rate_out = sample_rate;
  return samples;
}

void write_wav(const std::string& path, const std::vector<double>& samples, int64_t sample_rate) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Status::io, "wav: cannot open " + path + " for writing");
  uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  auto w32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto w16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
  out.write("RIFF", 4);
  w32(36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  w32(16);
  w16(1);  // PCM
  w16(1);  // mono
  w32(static_cast<uint32_t>(sample_rate));
  w32(static_cast<uint32_t>(sample_rate * 2));
  w16(2);
  w16(16);
  out.write("data", 4);
  w32(data_bytes);
  for (double s : samples) {
    long q = std::lrint(s * 32768.0);
    q = std::min<long>(32767, std::max<long>(-32768, q));
    w16(static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
  if (!out) fail(Status::io, "wav: short write to " + path);
}

}  // namespace glab
