#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "hybrid_spkr/audio.hpp"
#include "hybrid_spkr/features.hpp"

namespace hybrid_spkr {

struct FrontendConfig {
  double preemphasis_coeff = 0.95;
  double frame_len_ms = 30.0;
  double overlap_fraction = 2.0 / 3.0;
  int lpc_order = kDefaultLpcOrder;

  void validate() const;
  // Both in samples at 8 kHz: 240 and 80 with the defaults.
  std::size_t frame_length() const;
  std::size_t frame_shift() const;
};

// Anti-aliased 2:1 decimation. Rejects anything that is not 16 kHz.
AudioClip resample_16k_to_8k(const AudioClip& clip);

// The low-pass FIR applied before decimation (odd length, unit DC gain).
const std::vector<double>& decimation_filter();

// y[n] = x[n] - coeff * x[n-1], x[-1] = 0.
AudioClip preemphasize(const AudioClip& clip, double coeff);

std::vector<double> hamming_window(std::size_t length);

// floor((len - frame) / shift) + 1, or 0 if the signal is shorter than a frame.
std::size_t frame_count(std::size_t signal_length, const FrontendConfig& cfg);

// Hamming-windowed frames. Throws kTooShort when the clip holds less than one frame.
std::vector<std::vector<double>> frame_signal(const AudioClip& clip, const FrontendConfig& cfg);

// Autocorrelation lags 0..max_lag.
std::vector<double> autocorrelation(std::span<const double> x, int max_lag);

struct LpcAnalysis {
  // Predictor a_1..a_p with x^[n] = sum_k a_k x[n-k].
  std::vector<double> coeffs;
  std::vector<double> reflection;
  // Lags 0..p actually solved, i.e. with the ridge already added to lag 0.
  std::vector<double> autocorr;
  double prediction_error = 0.0;
};

// Levinson-Durbin recursion on lags r[0..order].
LpcAnalysis levinson_durbin(std::span<const double> r, int order);

// Autocorrelation-method LPC. Returns nullopt for a zero-energy frame.
std::optional<LpcAnalysis> lpc_analyze(std::span<const double> frame, int order);

// c_1 = a_1; c_n = a_n + sum_{k=1}^{n-1} (k/n) c_k a_{n-k}.
std::vector<double> lpc_to_cepstrum(std::span<const double> lpc);

struct LpccSequence {
  FeatureSet frames;
  std::size_t zero_energy_frames = 0;
};

// resample (16 kHz only) -> pre-emphasis -> framing -> LPC -> cepstrum.
// Zero-energy frames become all-zero vectors and are tallied.
LpccSequence extract_lpcc(const AudioClip& clip, const FrontendConfig& cfg = {});

// One frame per row, full round-trip precision.
void write_lpcc_csv(std::ostream& out, const FeatureSet& frames);

}  // namespace hybrid_spkr
