#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hybrid_spkr/features.hpp"
#include "hybrid_spkr/ranking.hpp"

namespace hybrid_spkr {

inline constexpr std::size_t kDefaultHiddenUnits = 16;

// One-hidden-layer perceptron with a single sigmoid output, one per speaker.
struct MlpModel {
  std::size_t n_inputs = kDefaultLpcOrder;
  std::size_t n_hidden = kDefaultHiddenUnits;
  std::vector<double> w1;  // n_hidden x n_inputs, row-major
  std::vector<double> b1;  // n_hidden
  std::vector<double> w2;  // n_hidden
  double b2 = 0.0;
  // Optional input standardisation (x - mean) * scale; empty means raw inputs.
  std::vector<double> input_mean;
  std::vector<double> input_scale;

  static MlpModel zeros(std::size_t n_inputs = kDefaultLpcOrder, std::size_t n_hidden = kDefaultHiddenUnits);

  // Trainable parameters only: w1, b1, w2, b2 in that order.
  std::size_t parameter_count() const noexcept { return n_hidden * n_inputs + 2 * n_hidden + 1; }
  void validate() const;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

double sigmoid(double z);

std::vector<double> pack_parameters(const MlpModel& model);
void unpack_parameters(std::span<const double> params, MlpModel& model);

// Network output, strictly inside (0, 1).
double forward(const MlpModel& model, std::span<const double> x);

// Output and its gradient with respect to the packed parameters.
double forward_with_gradient(const MlpModel& model, std::span<const double> x, std::span<double> gradient);

struct TrainConfig {
  std::size_t n_starts = 4;
  std::size_t epochs_per_start = 8;
  std::size_t final_epochs = 50;
  double mu_init = 1e-3;
  double mu_factor = 10.0;
  double mu_max = 1e10;
  // Continuation stops once an epoch improves SSE by less than this fraction.
  double early_stop_relative = 1e-8;
  std::size_t n_hidden = kDefaultHiddenUnits;
  bool normalize_inputs = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct StartTrace {
  // SSE before training and after every accepted step.
  std::vector<double> sse;
  bool stalled = false;
};

struct TrainReport {
  std::vector<StartTrace> warmup;
  std::size_t selected_start = 0;
  StartTrace continuation;
  double final_sse = 0.0;
  std::size_t rejected_steps = 0;
};

// Levenberg-Marquardt on SSE with targets 1 (excitatory) and 0 (inhibitory),
// multi-start: n_starts short runs, the lowest-SSE one is trained further.
MlpModel lm_train(const FeatureSet& excitatory, const FeatureSet& inhibitory, const TrainConfig& config,
                  TrainReport* report = nullptr);

// Sum of squared errors of `model` on the labelled set.
double training_sse(const MlpModel& model, const FeatureSet& excitatory, const FeatureSet& inhibitory);

// Reduces the impostor pool to `target_count` LBG centroids (codebook of the next
// power of two, keeping the most populated cells).
FeatureSet compress_impostors(const FeatureSet& impostors, std::size_t target_count, std::uint64_t seed);

// Sum of network outputs over the frames.
double accumulate_similarity(const MlpModel& model, const FeatureSet& frames);

// All speakers, descending by accumulated output.
std::vector<RankedSpeaker> mlp_identify(const FeatureSet& frames, std::span<const MlpModel> models);

}  // namespace hybrid_spkr
