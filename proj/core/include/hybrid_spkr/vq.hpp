#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hybrid_spkr/features.hpp"
#include "hybrid_spkr/ranking.hpp"
#include "hybrid_spkr/rng.hpp"

namespace hybrid_spkr {

enum class DistortionCriterion { kMse, kMad };

std::string_view to_string(DistortionCriterion criterion);
DistortionCriterion parse_criterion(std::string_view text);

// Squared Euclidean distance (MSE) or sum of absolute differences (MAD).
double frame_distortion(std::span<const double> a, std::span<const double> b, DistortionCriterion criterion);

inline constexpr int kMinCodebookBits = 1;
inline constexpr int kMaxCodebookBits = 10;

struct Codebook {
  FeatureSet centroids;
  int size_bits = 0;
  // Average squared error of the training vectors after the last Lloyd pass.
  double train_distortion = 0.0;
  std::uint64_t seed = 0;

  std::size_t dim() const noexcept { return centroids.dim(); }
  std::size_t size() const noexcept { return centroids.size(); }
  // Checks 2^size_bits centroids and finiteness.
  void validate() const;

  friend bool operator==(const Codebook&, const Codebook&) = default;
};

struct LbgOptions {
  int max_iterations = 50;
  double relative_tolerance = 1e-6;
  int power_iterations = 20;
  // Split offset as a fraction of the cell's standard deviation along its principal axis.
  double split_scale = 0.1;
};

// Everything LBG did, for diagnostics and the monotonicity checks.
struct LbgTrace {
  // Per split level: average distortion at every Lloyd assignment, then after the final update.
  std::vector<std::vector<double>> iterations;
  // Average distortion at the end of each level, starting with the single-centroid level.
  std::vector<double> level_final;
  std::size_t empty_cells_repaired = 0;
};

// Nearest centroid under squared Euclidean distance; ties go to the lower index.
std::size_t nearest_centroid(std::span<const double> x, const FeatureSet& centroids);

// Dominant-variance axis (unit vector) of the rows of `vectors` selected by `members`
// and the standard deviation along it. Power iteration from a seeded start vector.
struct SplitAxis {
  std::vector<double> direction;
  double stddev = 0.0;
};
SplitAxis principal_axis(const FeatureSet& vectors, std::span<const std::size_t> members,
                         std::span<const double> centre, int iterations, Rng& rng);

// Re-seeds `empty_cell` next to the centroid that currently owns the most vectors.
// The owner stays put and the new centroid sits one split offset away along the
// owner's principal axis, so the next assignment cannot raise the distortion.
// No-op when the cell is not empty.
void handle_empty_cell(FeatureSet& centroids, std::span<const std::size_t> assignment, const FeatureSet& vectors,
                       std::size_t empty_cell, const LbgOptions& options, Rng& rng);

// LBG grown to exactly `count` centroids. Each level splits every centroid along
// its cell's principal axis; if doubling would overshoot, only the cells with the
// largest distortion are split at the final level.
FeatureSet lbg_centroids(const FeatureSet& vectors, std::size_t count, std::uint64_t seed,
                         const LbgOptions& options = {}, LbgTrace* trace = nullptr);

// Speaker codebook with 2^size_bits centroids. Needs at least that many vectors.
Codebook lbg_train(const FeatureSet& vectors, int size_bits, std::uint64_t seed, const LbgOptions& options = {},
                   LbgTrace* trace = nullptr);

// Sum over frames of the distance to the closest centroid under `criterion`.
double quantize_distortion(const FeatureSet& frames, const Codebook& codebook, DistortionCriterion criterion);

// All speakers, ascending by accumulated distortion.
std::vector<RankedSpeaker> vq_identify(const FeatureSet& frames, std::span<const Codebook> models,
                                       DistortionCriterion criterion);

}  // namespace hybrid_spkr
