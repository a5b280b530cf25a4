#include "hybrid_spkr/frontend.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "hybrid_spkr/csv.hpp"
#include "hybrid_spkr/error.hpp"

namespace hybrid_spkr {
namespace {

constexpr std::size_t kDecimationTaps = 63;
constexpr double kDecimationCutoffHz = 3600.0;
constexpr double kRidge = 1e-9;

std::vector<double> design_decimation_filter() {
  // Blackman-windowed sinc; the window keeps the stopband well under -60 dB.
  std::vector<double> taps(kDecimationTaps);
  const double fc = kDecimationCutoffHz / kWideRateHz;
  const double mid = (kDecimationTaps - 1) / 2.0;
  double sum = 0.0;
  for (std::size_t n = 0; n < kDecimationTaps; ++n) {
    const double t = static_cast<double>(n) - mid;
    const double sinc = t == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * t) / (std::numbers::pi * t);
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(n) / (kDecimationTaps - 1);
    const double window = 0.42 - 0.5 * std::cos(phase) + 0.08 * std::cos(2.0 * phase);
    taps[n] = sinc * window;
    sum += taps[n];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

}  // namespace

void FrontendConfig::validate() const {
  require(preemphasis_coeff >= 0.0 && preemphasis_coeff < 1.0, ErrorCode::kInvalidArgument,
          "pre-emphasis coefficient must lie in [0, 1)");
  require(overlap_fraction >= 0.0 && overlap_fraction < 1.0, ErrorCode::kInvalidArgument,
          "overlap fraction must lie in [0, 1)");
  require(lpc_order >= 1, ErrorCode::kInvalidArgument, "LPC order must be at least 1");
  require(frame_len_ms > 0.0, ErrorCode::kInvalidArgument, "frame length must be positive");
  require(frame_shift() >= 1, ErrorCode::kInvalidArgument, "frame shift rounds to zero samples");
  require(static_cast<std::size_t>(lpc_order) < frame_length(), ErrorCode::kInvalidArgument,
          "LPC order must be below the frame length");
}

std::size_t FrontendConfig::frame_length() const {
  return static_cast<std::size_t>(std::lround(frame_len_ms / 1000.0 * kTargetRateHz));
}

std::size_t FrontendConfig::frame_shift() const {
  return static_cast<std::size_t>(std::lround(static_cast<double>(frame_length()) * (1.0 - overlap_fraction)));
}

const std::vector<double>& decimation_filter() {
  static const std::vector<double> taps = design_decimation_filter();
  return taps;
}

AudioClip resample_16k_to_8k(const AudioClip& clip) {
  if (clip.sample_rate_hz != kWideRateHz) {
    fail(ErrorCode::kRateMismatch, "resampler expects 16000 Hz input, got " + std::to_string(clip.sample_rate_hz));
  }
  require(!clip.samples.empty(), ErrorCode::kEmptyInput, "empty clip");

  const auto& h = decimation_filter();
  const auto half = static_cast<std::ptrdiff_t>(h.size() / 2);
  const auto n_in = static_cast<std::ptrdiff_t>(clip.samples.size());
  AudioClip out;
  out.sample_rate_hz = kTargetRateHz;
  out.samples.resize((clip.samples.size() + 1) / 2);
  for (std::size_t m = 0; m < out.samples.size(); ++m) {
    // Zero-phase alignment: output m sits on input sample 2m.
    const auto centre = static_cast<std::ptrdiff_t>(2 * m);
    double acc = 0.0;
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(h.size()); ++k) {
      const std::ptrdiff_t idx = centre + half - k;
      if (idx >= 0 && idx < n_in) acc += h[static_cast<std::size_t>(k)] * clip.samples[static_cast<std::size_t>(idx)];
    }
    out.samples[m] = acc;
  }
  return out;
}

AudioClip preemphasize(const AudioClip& clip, double coeff) {
  require(!clip.samples.empty(), ErrorCode::kEmptyInput, "empty clip");
  AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.samples.resize(clip.samples.size());
  double prev = 0.0;
  for (std::size_t n = 0; n < clip.samples.size(); ++n) {
    out.samples[n] = clip.samples[n] - coeff * prev;
    prev = clip.samples[n];
  }
  return out;
}

std::vector<double> hamming_window(std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length < 2) return w;
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(length - 1));
  }
  return w;
}

std::size_t frame_count(std::size_t signal_length, const FrontendConfig& cfg) {
  const std::size_t len = cfg.frame_length();
  if (signal_length < len) return 0;
  return (signal_length - len) / cfg.frame_shift() + 1;
}

std::vector<std::vector<double>> frame_signal(const AudioClip& clip, const FrontendConfig& cfg) {
  cfg.validate();
  const std::size_t len = cfg.frame_length();
  const std::size_t shift = cfg.frame_shift();
  const std::size_t count = frame_count(clip.samples.size(), cfg);
  if (count == 0) {
    fail(ErrorCode::kTooShort, std::to_string(clip.samples.size()) + " samples, need at least " + std::to_string(len));
  }
  const auto window = hamming_window(len);
  std::vector<std::vector<double>> frames(count, std::vector<double>(len));
  for (std::size_t f = 0; f < count; ++f) {
    const double* src = clip.samples.data() + f * shift;
    for (std::size_t n = 0; n < len; ++n) frames[f][n] = src[n] * window[n];
  }
  return frames;
}

std::vector<double> autocorrelation(std::span<const double> x, int max_lag) {
  std::vector<double> r(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (std::size_t lag = 0; lag < r.size() && lag < x.size(); ++lag) {
    double acc = 0.0;
    for (std::size_t n = lag; n < x.size(); ++n) acc += x[n] * x[n - lag];
    r[lag] = acc;
  }
  return r;
}

LpcAnalysis levinson_durbin(std::span<const double> r, int order) {
  const auto p = static_cast<std::size_t>(order);
  require(order >= 1 && r.size() > p, ErrorCode::kDimensionMismatch, "need lags 0..order");
  require(r[0] > 0.0, ErrorCode::kInvalidArgument, "lag-0 autocorrelation must be positive");

  LpcAnalysis out;
  out.autocorr.assign(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(p) + 1);
  out.coeffs.assign(p, 0.0);
  out.reflection.assign(p, 0.0);

  std::vector<double> prev(p, 0.0);
  double err = r[0];
  for (std::size_t i = 0; i < p; ++i) {
    double acc = r[i + 1];
    for (std::size_t j = 0; j < i; ++j) acc -= out.coeffs[j] * r[i - j];
    const double k = acc / err;
    out.reflection[i] = k;
    prev.assign(out.coeffs.begin(), out.coeffs.end());
    out.coeffs[i] = k;
    for (std::size_t j = 0; j < i; ++j) out.coeffs[j] = prev[j] - k * prev[i - 1 - j];
    err *= (1.0 - k * k);
  }
  out.prediction_error = err;
  return out;
}

std::optional<LpcAnalysis> lpc_analyze(std::span<const double> frame, int order) {
  require(!frame.empty(), ErrorCode::kEmptyInput, "empty frame");
  require(order >= 1 && static_cast<std::size_t>(order) < frame.size(), ErrorCode::kInvalidArgument,
          "LPC order must be in [1, frame length)");
  auto r = autocorrelation(frame, order);
  if (!(r[0] > 0.0)) return std::nullopt;
  r[0] += kRidge * r[0];
  return levinson_durbin(r, order);
}

std::vector<double> lpc_to_cepstrum(std::span<const double> lpc) {
  const std::size_t p = lpc.size();
  std::vector<double> c(p, 0.0);
  for (std::size_t n = 1; n <= p; ++n) {
    double acc = lpc[n - 1];
    for (std::size_t k = 1; k < n; ++k) {
      acc += (static_cast<double>(k) / static_cast<double>(n)) * c[k - 1] * lpc[n - k - 1];
    }
    c[n - 1] = acc;
  }
  return c;
}

LpccSequence extract_lpcc(const AudioClip& clip, const FrontendConfig& cfg) {
  cfg.validate();
  require(!clip.samples.empty(), ErrorCode::kEmptyInput, "empty clip");
  AudioClip narrow;
  if (clip.sample_rate_hz == kWideRateHz) {
    narrow = resample_16k_to_8k(clip);
  } else if (clip.sample_rate_hz == kTargetRateHz) {
    narrow = clip;
  } else {
    fail(ErrorCode::kUnsupportedRate, std::to_string(clip.sample_rate_hz) + " Hz");
  }

  const auto frames = frame_signal(preemphasize(narrow, cfg.preemphasis_coeff), cfg);
  const auto p = static_cast<std::size_t>(cfg.lpc_order);
  LpccSequence out{FeatureSet(frames.size(), p, 0.0), 0};
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto lpc = lpc_analyze(frames[f], cfg.lpc_order);
    if (!lpc) {
      ++out.zero_energy_frames;
      continue;
    }
    const auto cep = lpc_to_cepstrum(lpc->coeffs);
    std::copy(cep.begin(), cep.end(), out.frames[f].begin());
  }
  return out;
}

void write_lpcc_csv(std::ostream& out, const FeatureSet& frames) {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto row = frames[i];
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << format_double(row[j]);
    }
    out << '\n';
  }
}

}  // namespace hybrid_spkr
